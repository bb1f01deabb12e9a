//! Held-out context word prediction on the bundled State of the Union addresses.
//!
//! Trains all four model variants on the same split and prints the mean reciprocal rank of
//! each scoring method. Stopwords are removed before the vocabulary is built.
//!
//! ```text
//! cargo run --release --example mrr_evaluation -- [iters] [nce_steps] [heldout]
//! ```

use std::collections::HashSet;
use std::path::Path;
use std::time::Instant;

use mmsg::corpus::{extract_contexts, read_documents, split_heldout, DocumentSplit, Vocabulary, WordId};
use mmsg::eval::{evaluate_mrr, write_report, Method};
use mmsg::pipeline::train_model;
use mmsg::{Mode, RunConfig};

fn main() -> mmsg::Result<()> {
    let args: Vec<usize> = std::env::args().skip(1).map(|a| a.parse().expect("numeric argument")).collect();
    let iters = args.first().copied().unwrap_or(1000);
    let steps = args.get(1).copied().unwrap_or(200_000);
    let heldout = args.get(2).copied().unwrap_or(10_000);

    let data = Path::new(env!("CARGO_MANIFEST_DIR")).join("data");
    let stop: HashSet<String> = std::fs::read_to_string(data.join("stopwords_en.txt"))
        .expect("stopword list")
        .lines()
        .map(str::to_string)
        .collect();
    let mut docs = read_documents(&data.join("sotu_1790_1852"), DocumentSplit::PerFile, true)?;
    for d in &mut docs {
        d.tokens.retain(|t| !stop.contains(t));
    }

    let base = RunConfig {
        topics: 100,
        dim: 128,
        window: 5,
        iters,
        steps,
        heldout,
        log_every: 0,
        ..RunConfig::default()
    };
    let vocab = Vocabulary::build(docs.iter().map(|d| d.tokens.as_slice()), base.min_count)?;
    let encoded: Vec<Vec<WordId>> = docs.iter().map(|d| vocab.encode(&d.tokens)).collect();
    let tokens: usize = encoded.iter().map(Vec::len).sum();
    let instances = extract_contexts(&encoded, base.window);
    let (train, pairs) = split_heldout(instances, base.heldout, base.window, base.split_seed)?;
    println!("{} tokens, D = {}, {} training instances, {} held-out pairs", tokens, vocab.len(), train.len(), pairs.len());

    let mut results = Vec::new();
    for mode in Mode::ALL {
        let start = Instant::now();
        let cfg = RunConfig { mode, ..base.clone() };
        let out = train_model(&cfg, vocab.clone(), &train)?;
        let trained = start.elapsed();
        let methods: &[Method] = match mode {
            Mode::Mmsg => &[Method::Frequency, Method::Prior, Method::Posterior, Method::Context],
            Mode::Mmsgtm => &[Method::Prior, Method::Posterior],
            Mode::Sg => &[Method::Prior, Method::Context],
            Mode::Sgtm => &[Method::Prior],
        };
        for &m in methods {
            let r = evaluate_mrr(&out.model, m, &pairs)?;
            results.push(r);
        }
        eprintln!("{mode}: trained in {:.1?}, evaluated in {:.1?}", trained, start.elapsed() - trained);
    }
    write_report(std::io::stdout().lock(), &results).expect("stdout");
    Ok(())
}
