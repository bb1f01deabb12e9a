//! Shared setup for the examples: the bundled addresses and a quickly trained model.

#![allow(dead_code)]

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use mmsg::corpus::{extract_contexts, read_documents, ContextInstance, Document, DocumentSplit, Vocabulary, WordId};
use mmsg::persist::load_model;
use mmsg::pipeline::train_model;
use mmsg::{Mode, RunConfig, TrainedModel};

pub fn data_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data")
}

pub fn sotu_dir() -> PathBuf {
    data_dir().join("sotu_1790_1852")
}

/// The first `files` addresses, lowercased, with English stopwords removed.
pub fn sotu_documents(files: usize) -> mmsg::Result<Vec<Document>> {
    let stop: HashSet<String> = std::fs::read_to_string(data_dir().join("stopwords_en.txt"))
        .expect("stopword list")
        .lines()
        .map(str::to_string)
        .collect();
    let mut docs = read_documents(&sotu_dir(), DocumentSplit::PerFile, true)?;
    docs.truncate(files);
    for d in &mut docs {
        d.tokens.retain(|t| !stop.contains(t));
    }
    Ok(docs)
}

/// Small settings that train in seconds with `--release`.
pub fn quick_config(mode: Mode) -> RunConfig {
    RunConfig {
        mode,
        topics: 30,
        dim: 48,
        min_count: 3,
        iters: 300,
        steps: 30_000,
        log_every: 0,
        ..RunConfig::default()
    }
}

pub fn encode(docs: &[Document], cfg: &RunConfig) -> mmsg::Result<(Vocabulary, Vec<ContextInstance>)> {
    let vocab = Vocabulary::build(docs.iter().map(|d| d.tokens.as_slice()), cfg.min_count)?;
    let encoded: Vec<Vec<WordId>> = docs.iter().map(|d| vocab.encode(&d.tokens)).collect();
    let instances = extract_contexts(&encoded, cfg.window);
    Ok((vocab, instances))
}

/// Loads the model directory named by the first command-line argument, or trains a quick
/// MMSG model on the first 20 addresses.
pub fn model_from_args() -> mmsg::Result<TrainedModel> {
    if let Some(dir) = std::env::args().nth(1) {
        return Ok(load_model(Path::new(&dir))?.0);
    }
    eprintln!("no model directory given; training a small model on 20 addresses");
    let cfg = quick_config(Mode::Mmsg);
    let (vocab, instances) = encode(&sotu_documents(20)?, &cfg)?;
    Ok(train_model(&cfg, vocab, &instances)?.model)
}
