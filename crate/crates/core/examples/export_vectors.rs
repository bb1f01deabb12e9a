//! Exports topic, word and document vectors and queries the documents.
//!
//! Trains and saves a small model, writes word2vec text files next to it, reads one back
//! and lists the addresses closest to a composed query.
//!
//! ```text
//! cargo run --release --example export_vectors -- [out_dir]
//! ```

mod common;

use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;

use mmsg::commands::{cmd_export, corpus_document_vectors, nearest_documents, read_word2vec, ExportWhich, VectorFormat};
use mmsg::persist::{load_model, save_model};
use mmsg::pipeline::train_model;
use mmsg::Mode;

fn main() -> mmsg::Result<()> {
    let out = std::env::args().nth(1).map_or_else(|| std::env::temp_dir().join("mmsg-export"), PathBuf::from);
    std::fs::create_dir_all(&out).expect("output directory");
    let model_dir = out.join("model");
    if model_dir.exists() {
        std::fs::remove_dir_all(&model_dir).expect("clear previous model");
    }

    let cfg = common::quick_config(Mode::Mmsg);
    let (vocab, instances) = common::encode(&common::sotu_documents(20)?, &cfg)?;
    let trained = train_model(&cfg, vocab, &instances)?;
    save_model(&model_dir, &trained.model, &cfg, &trained.summary, &trained.extra_files())?;

    let sotu = common::sotu_dir();
    for (which, name) in [
        (ExportWhich::Topics, "topics.txt"),
        (ExportWhich::WordPriors, "words.txt"),
        (ExportWhich::Documents, "documents.txt"),
    ] {
        let path = out.join(name);
        let file = BufWriter::new(File::create(&path).expect("create export file"));
        cmd_export(&model_dir, which, VectorFormat::Word2Vec, Some(&sotu), file)?;
        println!("wrote {}", path.display());
    }

    let text = std::fs::read_to_string(out.join("topics.txt")).expect("read back");
    let (names, rows) = read_word2vec(&text)?;
    println!("read back {} topic vectors of dimension {}", names.len(), rows.ncols());

    let (model, manifest) = load_model(&model_dir)?;
    let (ids, features) = corpus_document_vectors(&model, &manifest, &sotu)?;
    for query in ["+war +navy", "+indians +treaty", "+debt +revenue"] {
        match nearest_documents(&model, &features, query, 3) {
            Ok(hits) => {
                let listed: Vec<String> = hits.iter().map(|(d, s)| format!("{} ({s:.3})", ids[*d])).collect();
                println!("{query}: {}", listed.join(", "));
            }
            Err(e) => println!("{query}: skipped ({e})"),
        }
    }
    Ok(())
}
