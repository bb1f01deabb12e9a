//! Held-out context word prediction, scored by mean reciprocal rank over the full dictionary.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use ndarray::Array2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{HeldOutPair, WordId};
use crate::error::{Error, Result};
use crate::inference::{TokenQuery, TrainedModel};
use crate::math::dot;

/// How candidate context words are scored.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Method {
    /// Unigram count, ignoring the input word.
    Frequency,
    /// `sum_k theta_k^(w_i) p(v | k)`.
    Prior,
    /// `sum_k p(k | w_i, rest) p(v | k)`.
    Posterior,
    /// `v'_v . (vbar_{w_i} + sum_{c in rest} vbar_c)`, input-side vectors throughout.
    Context,
    /// Like `Context` but the rest of the context contributes output vectors `v'_c`.
    ContextOutput,
}

impl Method {
    pub const ALL: [Method; 5] = [
        Method::Frequency,
        Method::Prior,
        Method::Posterior,
        Method::Context,
        Method::ContextOutput,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Frequency => "frequency",
            Method::Prior => "prior",
            Method::Posterior => "posterior",
            Method::Context => "context",
            Method::ContextOutput => "context-output",
        }
    }

    /// Whether the method needs vectors rather than just topic-word distributions.
    pub fn needs_embeddings(self) -> bool {
        matches!(self, Method::Context | Method::ContextOutput)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == s.trim())
            .ok_or_else(|| Error::UnknownMethod(s.to_string()))
    }
}

/// Parses a comma-separated method list; an empty list is an error.
pub fn parse_methods(s: &str) -> Result<Vec<Method>> {
    let methods = s
        .split(',')
        .filter(|p| !p.trim().is_empty())
        .map(str::parse)
        .collect::<Result<Vec<Method>>>()?;
    if methods.is_empty() {
        return Err(Error::config("methods", "at least one method is required"));
    }
    Ok(methods)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankingResult {
    pub method: String,
    pub mrr: f64,
    /// Tied candidates share the mean of the ranks they span, so ranks can be fractional.
    pub per_pair_ranks: Vec<f64>,
    pub n_pairs: usize,
}

impl RankingResult {
    pub fn from_ranks(method: impl Into<String>, ranks: Vec<f64>) -> Self {
        let mrr = if ranks.is_empty() {
            0.0
        } else {
            ranks.iter().map(|r| 1.0 / r).sum::<f64>() / ranks.len() as f64
        };
        RankingResult {
            method: method.into(),
            mrr,
            n_pairs: ranks.len(),
            per_pair_ranks: ranks,
        }
    }
}

fn weighted_topic_mix(model: &TrainedModel, weights: &[(usize, f64)]) -> Vec<f64> {
    let mut scores = vec![0.0; model.vocab_size()];
    for &(k, w) in weights {
        for (s, p) in scores.iter_mut().zip(model.topic_word_probs(k).iter()) {
            *s += w * p;
        }
    }
    scores
}

fn vector_sum_scores(model: &TrainedModel, pair: &HeldOutPair, output_side: bool) -> Result<Vec<f64>> {
    let es = model.embeddings().ok_or(Error::MissingComponent {
        mode: model.mode().as_str(),
        what: "embeddings",
    })?;
    let mut query = model.word_prior_vector(pair.input)?;
    for &c in &pair.rest {
        let v = if output_side {
            es.out_vec(c).to_vec()
        } else {
            model.word_prior_vector(c)?
        };
        for (q, x) in query.iter_mut().zip(v) {
            *q += x;
        }
    }
    Ok((0..model.vocab_size())
        .map(|v| dot(es.out_vec(v as WordId), &query))
        .collect())
}

/// Length-D score vector for one held-out pair; larger is better.
pub fn score_candidates(model: &TrainedModel, method: Method, pair: &HeldOutPair) -> Result<Vec<f64>> {
    match method {
        Method::Frequency => Ok(model.vocab().counts().iter().map(|&c| c as f64).collect()),
        Method::Prior => {
            let support = model.theta().support(pair.input);
            Ok(weighted_topic_mix(model, &support))
        }
        Method::Posterior => {
            let post = model.posterior_topics(&TokenQuery::new(pair.input, pair.rest.clone()))?;
            let support: Vec<(usize, f64)> = post.into_iter().enumerate().filter(|(_, p)| *p > 0.0).collect();
            Ok(weighted_topic_mix(model, &support))
        }
        Method::Context => vector_sum_scores(model, pair, false),
        Method::ContextOutput => vector_sum_scores(model, pair, true),
    }
}

/// `1 + #{strictly greater}`, with the candidates tied with the target sharing the average
/// of the ranks they occupy.
pub fn rank_of_target(scores: &[f64], target: WordId) -> f64 {
    let t = scores[target as usize];
    let (mut greater, mut equal) = (0usize, 0usize);
    for &s in scores {
        if s > t {
            greater += 1;
        } else if s == t {
            equal += 1;
        }
    }
    greater as f64 + (equal as f64 + 1.0) / 2.0
}

/// MRR of an arbitrary scorer. Pairs are scored in parallel; the result does not depend on
/// the number of threads.
pub fn evaluate_with<F>(label: &str, pairs: &[HeldOutPair], scorer: F) -> Result<RankingResult>
where
    F: Fn(&HeldOutPair) -> Result<Vec<f64>> + Sync,
{
    let ranks = pairs
        .par_iter()
        .map(|p| scorer(p).map(|s| rank_of_target(&s, p.target)))
        .collect::<Result<Vec<f64>>>()?;
    Ok(RankingResult::from_ranks(label, ranks))
}

pub fn evaluate_mrr(model: &TrainedModel, method: Method, pairs: &[HeldOutPair]) -> Result<RankingResult> {
    if method.needs_embeddings() && model.embeddings().is_none() {
        return Err(Error::MissingComponent {
            mode: model.mode().as_str(),
            what: "embeddings",
        });
    }
    let label = format!("{} {}", model.mode(), method);
    evaluate_with(&label, pairs, |p| score_candidates(model, method, p))
}

pub const REPORT_HEADER: &str = "method\tn_pairs\tmrr";

pub fn write_report<W: Write>(mut out: W, results: &[RankingResult]) -> std::io::Result<()> {
    writeln!(out, "{REPORT_HEADER}")?;
    for r in results {
        writeln!(out, "{}\t{}\t{:.6}", r.method, r.n_pairs, r.mrr)?;
    }
    Ok(())
}

/// One line per pair and method: `pair index, method, rank`.
pub fn write_ranks<W: Write>(mut out: W, results: &[RankingResult]) -> std::io::Result<()> {
    writeln!(out, "pair\tmethod\trank")?;
    for r in results {
        for (i, rank) in r.per_pair_ranks.iter().enumerate() {
            writeln!(out, "{i}\t{}\t{rank}", r.method)?;
        }
    }
    Ok(())
}

/// Unit-length document vectors, one row per document. Each document is a list of
/// token queries as produced by [`crate::inference::document_queries`].
pub fn export_document_features(model: &TrainedModel, documents: &[Vec<TokenQuery>]) -> Result<Array2<f64>> {
    let dim = model
        .embeddings()
        .ok_or(Error::MissingComponent {
            mode: model.mode().as_str(),
            what: "embeddings",
        })?
        .dim();
    let rows = documents
        .par_iter()
        .map(|doc| model.document_vector(doc))
        .collect::<Result<Vec<_>>>()?;
    let mut m = Array2::zeros((rows.len(), dim));
    for (i, r) in rows.into_iter().enumerate() {
        m.row_mut(i).assign(&ndarray::ArrayView1::from(&r));
    }
    Ok(m)
}

/// TSV with a document id column followed by the vector.
pub fn write_document_features<W: Write>(mut out: W, ids: &[String], features: &Array2<f64>) -> std::io::Result<()> {
    for (id, row) in ids.iter().zip(features.rows()) {
        write!(out, "{id}")?;
        for x in row {
            write!(out, "\t{x:.8}")?;
        }
        writeln!(out)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Vocabulary;
    use crate::embed::EmbeddingState;
    use crate::inference::{Membership, Mode};
    use ndarray::array;

    fn vocab() -> Vocabulary {
        Vocabulary::from_counts(vec![("a".into(), 5), ("b".into(), 3), ("c".into(), 2)])
    }

    fn tm_model() -> TrainedModel {
        let theta = array![[0.6, 0.4], [0.1, 0.9], [0.5, 0.5]];
        let phi = array![[0.7, 0.2, 0.1], [0.1, 0.3, 0.6]];
        TrainedModel::new(vocab(), Mode::Mmsgtm, Membership::Dense(theta), Some(phi), None).unwrap()
    }

    fn pair(target: WordId, input: WordId, rest: Vec<WordId>) -> HeldOutPair {
        HeldOutPair { target, input, rest }
    }

    #[test]
    fn frequency_scores_are_counts() {
        let s = score_candidates(&tm_model(), Method::Frequency, &pair(0, 1, vec![2])).unwrap();
        assert_eq!(s, vec![5.0, 3.0, 2.0]);
    }

    #[test]
    fn posterior_with_empty_rest_is_prior() {
        let m = tm_model();
        let p = pair(2, 0, vec![]);
        assert_eq!(
            score_candidates(&m, Method::Posterior, &p).unwrap(),
            score_candidates(&m, Method::Prior, &p).unwrap()
        );
    }

    #[test]
    fn posterior_matches_mixture_oracle() {
        let m = tm_model();
        let s = score_candidates(&m, Method::Posterior, &pair(0, 2, vec![1])).unwrap();
        let (a, b) = (0.5 * 0.2, 0.5 * 0.3);
        let (pa, pb) = (a / (a + b), b / (a + b));
        let phi = [[0.7, 0.2, 0.1], [0.1, 0.3, 0.6]];
        for v in 0..3 {
            let want = pa * phi[0][v] + pb * phi[1][v];
            assert!(((s[v] - want) / want).abs() < 1e-12);
        }
    }

    #[test]
    fn ranks() {
        assert_eq!(rank_of_target(&[0.1, 0.9, 0.3], 1), 1.0);
        assert_eq!(rank_of_target(&[1.0; 4], 2), 2.5);
        assert_eq!(rank_of_target(&[3.0, 2.0, 2.0, 1.0], 1), 2.5);
        assert_eq!(rank_of_target(&[3.0, 2.0, 2.0, 1.0], 3), 4.0);
    }

    #[test]
    fn oracle_scorers() {
        let pairs: Vec<HeldOutPair> = (0..3).map(|t| pair(t, 0, vec![])).collect();
        let first = evaluate_with("first", &pairs, |p| {
            let mut s = vec![0.0; 3];
            s[p.target as usize] = 1.0;
            Ok(s)
        })
        .unwrap();
        assert_eq!(first.mrr, 1.0);
        let second = evaluate_with("second", &pairs, |p| {
            let mut s = vec![0.0; 3];
            s[p.target as usize] = 1.0;
            s[(p.target as usize + 1) % 3] = 2.0;
            Ok(s)
        })
        .unwrap();
        assert_eq!(second.mrr, 0.5);
        assert_eq!(second.per_pair_ranks, vec![2.0; 3]);
    }

    #[test]
    fn method_parsing() {
        assert_eq!(parse_methods("frequency,posterior").unwrap(), vec![Method::Frequency, Method::Posterior]);
        assert!(matches!(parse_methods("frequency,magic"), Err(Error::UnknownMethod(_))));
        assert!(parse_methods("").is_err());
    }

    #[test]
    fn context_method_needs_vectors() {
        let err = evaluate_mrr(&tm_model(), Method::Context, &[pair(0, 0, vec![])]).unwrap_err();
        assert!(matches!(err, Error::MissingComponent { .. }));
    }

    #[test]
    fn context_scores_sum_input_vectors() {
        let mut es = EmbeddingState::zeros(3, 3, 2);
        es.topic_vecs = array![[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]];
        es.out_vecs = array![[1.0, 2.0], [-1.0, 0.5], [0.0, 3.0]];
        let m = TrainedModel::new(vocab(), Mode::Sg, Membership::OneHot { vocab_size: 3 }, None, Some(es)).unwrap();
        let s = score_candidates(&m, Method::Context, &pair(0, 0, vec![1])).unwrap();
        // query = v_0 + v_1 = (1, 1)
        assert_eq!(s, vec![3.0, -0.5, 3.0]);
        let s = score_candidates(&m, Method::ContextOutput, &pair(0, 0, vec![1])).unwrap();
        // query = v_0 + v'_1 = (0, 0.5)
        assert_eq!(s, vec![1.0, 0.25, 1.5]);
    }

    #[test]
    fn document_features_have_unit_rows() {
        let mut es = EmbeddingState::zeros(2, 3, 2);
        es.topic_vecs = array![[1.0, 0.2], [-0.3, 0.8]];
        let theta = array![[0.6, 0.4], [0.1, 0.9], [0.5, 0.5]];
        let m = TrainedModel::new(vocab(), Mode::Mmsg, Membership::Dense(theta), None, Some(es)).unwrap();
        let docs = vec![
            crate::inference::document_queries(&[0, 1, 2], 1),
            crate::inference::document_queries(&[2, 2], 1),
        ];
        let f = export_document_features(&m, &docs).unwrap();
        for row in f.rows() {
            assert!((row.dot(&row).sqrt() - 1.0).abs() < 1e-9);
        }
        assert_eq!(f.row(0).to_vec(), m.document_vector(&docs[0]).unwrap());
        assert_eq!(export_document_features(&m, &[]).unwrap().nrows(), 0);
    }
}
