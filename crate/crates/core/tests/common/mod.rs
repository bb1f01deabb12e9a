#![allow(dead_code)]

use std::collections::HashSet;
use std::path::PathBuf;

use mmsg::corpus::{read_documents, Document, DocumentSplit};

pub fn data_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data")
}

pub fn sotu_dir() -> PathBuf {
    data_dir().join("sotu_1790_1852")
}

pub fn stopwords() -> HashSet<String> {
    std::fs::read_to_string(data_dir().join("stopwords_en.txt"))
        .expect("stopword list")
        .lines()
        .map(str::to_string)
        .collect()
}

/// The bundled addresses, lowercased, with stopwords removed. `files` limits how many
/// addresses are read, in chronological order.
pub fn sotu_documents(files: Option<usize>) -> Vec<Document> {
    let stop = stopwords();
    let mut docs = read_documents(&sotu_dir(), DocumentSplit::PerFile, true).expect("corpus");
    if let Some(n) = files {
        docs.truncate(n);
    }
    for d in &mut docs {
        d.tokens.retain(|t| !stop.contains(t));
    }
    docs
}
