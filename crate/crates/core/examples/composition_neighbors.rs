//! Nearest neighbours of words, topics and composed queries in the shared embedding space.
//!
//! ```text
//! cargo run --release --example composition_neighbors -- [model_dir]
//! ```

mod common;

use mmsg::commands::cmd_neighbors;
use mmsg::commands::PoolKind;

fn main() -> mmsg::Result<()> {
    let model = common::model_from_args()?;
    let queries = [
        "war",
        "treaty",
        "revenue",
        "+war +navy",
        "+war -peace",
        "+indians +treaty",
        "+commerce -duties",
    ];
    for q in queries {
        println!("{q}");
        match cmd_neighbors(&model, q, PoolKind::Words, 6, std::io::stdout().lock()) {
            Ok(_) => {}
            Err(e) => println!("  skipped: {e}"),
        }
        println!();
    }

    println!("topics nearest to `+war +navy`");
    cmd_neighbors(&model, "+war +navy", PoolKind::Topics, 3, std::io::stdout().lock())?;
    println!("\nwords nearest to topic 0");
    cmd_neighbors(&model, "topic:0", PoolKind::Words, 6, std::io::stdout().lock())?;
    Ok(())
}
