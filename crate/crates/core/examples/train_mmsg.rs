//! Trains a mixed membership skip-gram on the bundled addresses and saves the model.
//!
//! ```text
//! cargo run --release --example train_mmsg -- [model_dir] [files]
//! ```
//!
//! The saved directory can be passed to the `posterior_inference`, `composition_neighbors`
//! and `export_vectors` examples, or to the `mmsg` binary.

mod common;

use std::path::PathBuf;

use mmsg::commands::cmd_topics;
use mmsg::persist::save_model;
use mmsg::pipeline::train_model;
use mmsg::Mode;

fn main() -> mmsg::Result<()> {
    let mut args = std::env::args().skip(1);
    let out = args.next().map_or_else(|| std::env::temp_dir().join("mmsg-example-model"), PathBuf::from);
    let files: usize = args.next().map_or(20, |a| a.parse().expect("number of files"));

    let cfg = common::quick_config(Mode::Mmsg);
    let docs = common::sotu_documents(files)?;
    let (vocab, instances) = common::encode(&docs, &cfg)?;
    println!("{} addresses, D = {}, {} instances", docs.len(), vocab.len(), instances.len());

    let trained = train_model(&cfg, vocab, &instances)?;
    let chain = trained.summary.chain.as_ref().expect("mmsg runs the chain");
    println!(
        "annealing: {} sweeps, final acceptance {:.3}, log joint {:.1}",
        chain.sweeps, chain.final_acceptance, chain.final_log_joint
    );
    let nce = trained.summary.nce.as_ref().expect("mmsg trains embeddings");
    println!("nce: {} steps, final objective {:.4}", nce.steps, nce.final_objective);

    println!("\nfirst topics by embedding softmax:");
    let mut listing = Vec::new();
    cmd_topics(&trained.model, 8, None, &mut listing)?;
    for line in String::from_utf8_lossy(&listing).lines().take(10) {
        println!("{line}");
    }

    if out.exists() {
        std::fs::remove_dir_all(&out).expect("clear previous example model");
    }
    save_model(&out, &trained.model, &cfg, &trained.summary, &trained.extra_files())?;
    println!("\nsaved to {}", out.display());
    Ok(())
}
