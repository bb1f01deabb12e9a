//! How context shifts a word's topic membership.
//!
//! Picks a frequent word with broad prior membership, then shows the topic posterior of two
//! of its occurrences whose contexts pull it towards different topics.
//!
//! ```text
//! cargo run --release --example posterior_inference -- [model_dir]
//! ```

mod common;

use mmsg::commands::top_n;
use mmsg::inference::document_queries;
use mmsg::{TokenQuery, TrainedModel};

fn entropy(p: &[f64]) -> f64 {
    -p.iter().filter(|&&x| x > 0.0).map(|&x| x * x.ln()).sum::<f64>()
}

fn topic_label(model: &TrainedModel, k: usize) -> String {
    let words = top_n(&model.topic_word_probs(k), 4);
    format!("topic {k} ({})", model.vocab().decode(&words.iter().map(|&v| v as u32).collect::<Vec<_>>()).join(" "))
}

fn show(model: &TrainedModel, title: &str, probs: &[f64]) {
    println!("{title}");
    for k in top_n(probs, 3) {
        println!("  {:.3}  {}", probs[k], topic_label(model, k));
    }
}

fn main() -> mmsg::Result<()> {
    let model = common::model_from_args()?;
    let vocab = model.vocab();

    // Word ids are in decreasing frequency order.
    let word = (0..200.min(vocab.len()) as u32)
        .max_by(|&a, &b| entropy(&model.theta().row(a)).total_cmp(&entropy(&model.theta().row(b))))
        .expect("non-empty vocabulary");
    println!("word: {} (count {})\n", vocab.token(word), vocab.count(word));
    show(&model, "prior membership", &model.theta().row(word));

    let docs = common::sotu_documents(63)?;
    let occurrences: Vec<TokenQuery> = docs
        .iter()
        .flat_map(|d| document_queries(&vocab.encode(&d.tokens), 5))
        .filter(|q| q.input == word && !q.context.is_empty())
        .collect();
    let posteriors: Vec<Vec<f64>> = occurrences.iter().map(|q| model.posterior_topics(q)).collect::<Result<_, _>>()?;

    // The two occurrences whose posteriors are furthest apart in total variation.
    let mut best = (0, 0, -1.0);
    for i in 0..posteriors.len().min(300) {
        for j in i + 1..posteriors.len().min(300) {
            let tv: f64 = posteriors[i].iter().zip(&posteriors[j]).map(|(a, b)| (a - b).abs()).sum::<f64>() / 2.0;
            if tv > best.2 {
                best = (i, j, tv);
            }
        }
    }
    for idx in [best.0, best.1] {
        let ctx = vocab.decode(&occurrences[idx].context).join(" ");
        println!();
        show(&model, &format!("posterior in context: {ctx}"), &posteriors[idx]);
    }
    println!("\ntotal variation between the two posteriors: {:.3}", best.2);
    Ok(())
}
