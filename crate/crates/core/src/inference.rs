//! Test-time queries against a trained model: posterior topics of a token in context, prior
//! and posterior mean vectors, document vectors, nearest neighbours and vector composition.

use std::borrow::Cow;
use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::corpus::{window_context, Vocabulary, WordId};
use crate::embed::EmbeddingState;
use crate::error::{Error, Result};
use crate::math::{cosine, logsumexp, norm};

/// Largest K x D topic-word table that is materialized up front.
const PROB_TABLE_LIMIT: usize = 1 << 22;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Mmsg,
    Mmsgtm,
    Sg,
    Sgtm,
}

impl Mode {
    pub const ALL: [Mode; 4] = [Mode::Mmsg, Mode::Mmsgtm, Mode::Sg, Mode::Sgtm];

    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Mmsg => "mmsg",
            Mode::Mmsgtm => "mmsgtm",
            Mode::Sg => "sg",
            Mode::Sgtm => "sgtm",
        }
    }

    /// Log-bilinear parameterization of p(w | k).
    pub fn uses_embeddings(self) -> bool {
        matches!(self, Mode::Mmsg | Mode::Sg)
    }

    /// One topic per dictionary word, every input word assigned to its own topic.
    pub fn is_degenerate(self) -> bool {
        matches!(self, Mode::Sg | Mode::Sgtm)
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Mode::ALL
            .into_iter()
            .find(|m| m.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::config("mode", format!("expected mmsg, mmsgtm, sg or sgtm, got `{s}`")))
    }
}

/// Per-word topic proportions.
#[derive(Debug, Clone, PartialEq)]
pub enum Membership {
    /// D x K matrix of theta rows.
    Dense(Array2<f64>),
    /// Word w belongs entirely to topic w, so K = D.
    OneHot { vocab_size: usize },
}

impl Membership {
    pub fn num_words(&self) -> usize {
        match self {
            Membership::Dense(t) => t.nrows(),
            Membership::OneHot { vocab_size } => *vocab_size,
        }
    }

    pub fn num_topics(&self) -> usize {
        match self {
            Membership::Dense(t) => t.ncols(),
            Membership::OneHot { vocab_size } => *vocab_size,
        }
    }

    /// The full theta row of `w`.
    pub fn row(&self, w: WordId) -> Cow<'_, [f64]> {
        match self {
            Membership::Dense(t) => Cow::Borrowed(t.row(w as usize).to_slice().expect("row-major")),
            Membership::OneHot { vocab_size } => {
                let mut row = vec![0.0; *vocab_size];
                row[w as usize] = 1.0;
                Cow::Owned(row)
            }
        }
    }

    /// Nonzero entries `(k, theta_k)` of the row of `w`.
    pub fn support(&self, w: WordId) -> Vec<(usize, f64)> {
        match self {
            Membership::Dense(t) => t
                .row(w as usize)
                .iter()
                .enumerate()
                .filter(|(_, &p)| p > 0.0)
                .map(|(k, &p)| (k, p))
                .collect(),
            Membership::OneHot { .. } => vec![(w as usize, 1.0)],
        }
    }
}

/// A token to reason about: its word and the words around it.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TokenQuery {
    pub input: WordId,
    pub context: Vec<WordId>,
}

impl TokenQuery {
    pub fn new(input: WordId, context: Vec<WordId>) -> Self {
        TokenQuery { input, context }
    }
}

/// One query per token of an encoded document, each with its window context.
pub fn document_queries(doc: &[WordId], window: usize) -> Vec<TokenQuery> {
    (0..doc.len())
        .map(|pos| TokenQuery::new(doc[pos], window_context(doc, pos, window)))
        .collect()
}

/// An operand of a composition query.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Term {
    /// The prior mean vector of a word.
    Word(WordId),
    /// A topic vector.
    Topic(usize),
}

/// Candidate set for neighbour queries.
#[derive(Debug, Clone, Copy)]
pub enum Pool<'a> {
    Topics,
    /// Prior mean vectors of all dictionary words.
    Words,
    /// Arbitrary rows, e.g. document vectors.
    Rows(ArrayView2<'a, f64>),
}

#[derive(Debug)]
pub struct TrainedModel {
    vocab: Vocabulary,
    mode: Mode,
    theta: Membership,
    phi: Option<Array2<f64>>,
    embeddings: Option<EmbeddingState>,
    log_norms: Vec<f64>,
    prob_table: OnceLock<Option<Array2<f64>>>,
    word_priors: OnceLock<Array2<f64>>,
}

impl TrainedModel {
    /// Assembles a model, checking that the mode has the parts it needs and that shapes agree.
    pub fn new(
        vocab: Vocabulary,
        mode: Mode,
        theta: Membership,
        phi: Option<Array2<f64>>,
        embeddings: Option<EmbeddingState>,
    ) -> Result<Self> {
        let d = vocab.len();
        let k = theta.num_topics();
        let shape = |what: &str| Error::Format(format!("{what} does not match D = {d}, K = {k}"));
        if theta.num_words() != d {
            return Err(shape("theta"));
        }
        if mode.is_degenerate() != matches!(theta, Membership::OneHot { .. }) {
            return Err(Error::Format(format!(
                "mode {mode} is incompatible with the stored theta layout"
            )));
        }
        if mode.uses_embeddings() && embeddings.is_none() {
            return Err(Error::MissingComponent {
                mode: mode.as_str(),
                what: "embeddings",
            });
        }
        if !mode.uses_embeddings() && phi.is_none() {
            return Err(Error::MissingComponent {
                mode: mode.as_str(),
                what: "phi",
            });
        }
        if let Some(phi) = &phi {
            if phi.dim() != (k, d) {
                return Err(shape("phi"));
            }
        }
        let mut log_norms = Vec::new();
        if let Some(es) = &embeddings {
            if es.num_topics() != k || es.vocab_size() != d {
                return Err(shape("embeddings"));
            }
            if mode.uses_embeddings() {
                log_norms = (0..k).map(|t| es.log_normalizer(t)).collect();
            }
        }
        Ok(TrainedModel {
            vocab,
            mode,
            theta,
            phi,
            embeddings,
            log_norms,
            prob_table: OnceLock::new(),
            word_priors: OnceLock::new(),
        })
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn theta(&self) -> &Membership {
        &self.theta
    }

    pub fn phi(&self) -> Option<&Array2<f64>> {
        self.phi.as_ref()
    }

    pub fn embeddings(&self) -> Option<&EmbeddingState> {
        self.embeddings.as_ref()
    }

    pub fn num_topics(&self) -> usize {
        self.theta.num_topics()
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab.len()
    }

    fn require_embeddings(&self) -> Result<&EmbeddingState> {
        self.embeddings.as_ref().ok_or(Error::MissingComponent {
            mode: self.mode.as_str(),
            what: "embeddings",
        })
    }

    fn check_word(&self, w: WordId) -> Result<()> {
        if (w as usize) < self.vocab_size() {
            Ok(())
        } else {
            Err(Error::UnknownToken(format!("#{w}")))
        }
    }

    /// `log p(v | k)`: the normalized softmax in embedding modes, `log phi_v^(k)` otherwise.
    pub fn log_prob_word(&self, k: usize, v: WordId) -> f64 {
        match (&self.embeddings, &self.phi) {
            (Some(es), _) if self.mode.uses_embeddings() => es.score(k, v) - self.log_norms[k],
            (_, Some(phi)) => phi[[k, v as usize]].ln(),
            _ => unreachable!("validated in TrainedModel::new"),
        }
    }

    /// `p(. | k)` over the whole dictionary.
    pub fn topic_word_probs(&self, k: usize) -> Cow<'_, [f64]> {
        if !self.mode.uses_embeddings() {
            let phi = self.phi.as_ref().expect("validated in TrainedModel::new");
            return Cow::Borrowed(phi.row(k).to_slice().expect("row-major"));
        }
        let table = self.prob_table.get_or_init(|| {
            let (kk, d) = (self.num_topics(), self.vocab_size());
            (kk * d <= PROB_TABLE_LIMIT)
                .then(|| Array2::from_shape_fn((kk, d), |(t, v)| self.log_prob_word(t, v as WordId).exp()))
        });
        match table {
            Some(t) => Cow::Borrowed(t.row(k).to_slice().expect("row-major")),
            None => Cow::Owned(
                (0..self.vocab_size())
                    .map(|v| self.log_prob_word(k, v as WordId).exp())
                    .collect(),
            ),
        }
    }

    /// `p(z = k | w, context) ∝ theta_k^(w) prod_c p(w_c | k)`, accumulated in log space.
    /// With an empty context this is the theta row itself.
    pub fn posterior_topics(&self, q: &TokenQuery) -> Result<Vec<f64>> {
        self.check_word(q.input)?;
        for &c in &q.context {
            self.check_word(c)?;
        }
        let prior = self.theta.row(q.input);
        if q.context.is_empty() || matches!(self.theta, Membership::OneHot { .. }) {
            return Ok(prior.into_owned());
        }
        let mut logw: Vec<f64> = prior
            .iter()
            .enumerate()
            .map(|(k, &p)| {
                if p > 0.0 {
                    p.ln() + q.context.iter().map(|&c| self.log_prob_word(k, c)).sum::<f64>()
                } else {
                    f64::NEG_INFINITY
                }
            })
            .collect();
        let lse = logsumexp(logw.iter().copied());
        if !lse.is_finite() {
            return Err(Error::DegeneratePosterior);
        }
        for x in logw.iter_mut() {
            *x = (*x - lse).exp();
        }
        Ok(logw)
    }

    fn mix_topic_vectors(&self, weights: &[(usize, f64)]) -> Result<Vec<f64>> {
        let es = self.require_embeddings()?;
        let mut out = vec![0.0; es.dim()];
        for &(k, w) in weights {
            for (o, x) in out.iter_mut().zip(es.topic_vec(k)) {
                *o += w * x;
            }
        }
        Ok(out)
    }

    /// Prior mean vector `sum_k theta_k^(w) v_k`.
    pub fn word_prior_vector(&self, w: WordId) -> Result<Vec<f64>> {
        self.check_word(w)?;
        self.mix_topic_vectors(&self.theta.support(w))
    }

    /// Posterior mean vector of a token in context.
    pub fn token_posterior_vector(&self, q: &TokenQuery) -> Result<Vec<f64>> {
        self.require_embeddings()?;
        let post = self.posterior_topics(q)?;
        let weights: Vec<(usize, f64)> = post
            .into_iter()
            .enumerate()
            .filter(|(_, p)| *p > 0.0)
            .collect();
        self.mix_topic_vectors(&weights)
    }

    /// Sum of the posterior mean vectors of the tokens, scaled to unit length.
    pub fn document_vector(&self, tokens: &[TokenQuery]) -> Result<Vec<f64>> {
        let es = self.require_embeddings()?;
        let mut sum = vec![0.0; es.dim()];
        for q in tokens {
            for (s, x) in sum.iter_mut().zip(self.token_posterior_vector(q)?) {
                *s += x;
            }
        }
        normalize(sum)
    }

    /// D x d matrix of prior mean vectors, computed on first use.
    pub fn word_prior_matrix(&self) -> Result<&Array2<f64>> {
        let es = self.require_embeddings()?;
        Ok(self.word_priors.get_or_init(|| {
            let mut m = Array2::zeros((self.vocab_size(), es.dim()));
            for w in 0..self.vocab_size() {
                let v = self
                    .mix_topic_vectors(&self.theta.support(w as WordId))
                    .expect("embeddings present");
                m.row_mut(w).assign(&ndarray::ArrayView1::from(&v));
            }
            m
        }))
    }

    /// Top `n` members of `pool` by cosine similarity to `query`; ties go to the lower id.
    pub fn nearest(&self, query: &[f64], pool: Pool<'_>, n: usize) -> Result<Vec<(usize, f64)>> {
        let rows = match pool {
            Pool::Topics => self.require_embeddings()?.topic_vecs.view(),
            Pool::Words => self.word_prior_matrix()?.view(),
            Pool::Rows(r) => r,
        };
        Ok(nearest_rows(query, rows, n))
    }

    /// `sum plus - sum minus`, scaled to unit length. Words contribute their prior mean vector
    /// and topics their own vector.
    pub fn compose(&self, plus: &[Term], minus: &[Term]) -> Result<Vec<f64>> {
        let es = self.require_embeddings()?;
        let mut out = vec![0.0; es.dim()];
        let mut scale = 0.0;
        for (terms, sign) in [(plus, 1.0), (minus, -1.0)] {
            for term in terms {
                let v = match *term {
                    Term::Word(w) => self.word_prior_vector(w)?,
                    Term::Topic(k) => {
                        if k >= es.num_topics() {
                            return Err(Error::UnknownToken(format!("topic {k}")));
                        }
                        es.topic_vec(k).to_vec()
                    }
                };
                scale += norm(&v);
                for (o, x) in out.iter_mut().zip(v) {
                    *o += sign * x;
                }
            }
        }
        if norm(&out) <= 1e-12 * scale {
            return Err(Error::ZeroVector);
        }
        normalize(out)
    }
}

fn normalize(mut v: Vec<f64>) -> Result<Vec<f64>> {
    let n = norm(&v);
    if !(n > 0.0) || !n.is_finite() {
        return Err(Error::ZeroVector);
    }
    v.iter_mut().for_each(|x| *x /= n);
    Ok(v)
}

/// Exhaustive cosine ranking of `rows` against `query`, descending, ties by row index.
pub fn nearest_rows(query: &[f64], rows: ArrayView2<'_, f64>, n: usize) -> Vec<(usize, f64)> {
    let mut sims: Vec<(usize, f64)> = rows
        .rows()
        .into_iter()
        .enumerate()
        .map(|(i, r)| (i, cosine(query, &r.to_vec())))
        .collect();
    sims.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    sims.truncate(n);
    sims
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn vocab(d: usize) -> Vocabulary {
        Vocabulary::from_counts((0..d).map(|i| (format!("w{i}"), (d - i) as u64)).collect())
    }

    /// K = 2, D = 3 topic model with hand-set parameters.
    fn tm_model() -> TrainedModel {
        let theta = array![[0.6, 0.4], [0.1, 0.9], [0.5, 0.5]];
        let phi = array![[0.7, 0.2, 0.1], [0.1, 0.3, 0.6]];
        TrainedModel::new(vocab(3), Mode::Mmsgtm, Membership::Dense(theta), Some(phi), None).unwrap()
    }

    fn emb_model() -> TrainedModel {
        let theta = array![[0.6, 0.4], [0.1, 0.9], [0.5, 0.5]];
        let mut es = EmbeddingState::zeros(2, 3, 2);
        es.topic_vecs = array![[1.0, -0.5], [0.2, 0.8]];
        es.out_vecs = array![[0.3, 0.1], [-0.4, 0.9], [0.0, -1.2]];
        es.bias = array![0.1, -0.2, 0.05];
        TrainedModel::new(vocab(3), Mode::Mmsg, Membership::Dense(theta), None, Some(es)).unwrap()
    }

    #[test]
    fn empty_context_returns_prior() {
        let m = tm_model();
        assert_eq!(m.posterior_topics(&TokenQuery::new(1, vec![])).unwrap(), vec![0.1, 0.9]);
    }

    #[test]
    fn one_hot_theta_is_point_mass() {
        let theta = array![[1.0, 0.0], [0.0, 1.0]];
        let phi = array![[0.5, 0.5], [0.9, 0.1]];
        let m = TrainedModel::new(vocab(2), Mode::Mmsgtm, Membership::Dense(theta), Some(phi), None).unwrap();
        let p = m.posterior_topics(&TokenQuery::new(0, vec![0, 0, 0])).unwrap();
        assert_eq!(p, vec![1.0, 0.0]);
    }

    #[test]
    fn posterior_matches_product_and_normalize() {
        let m = tm_model();
        let p = m.posterior_topics(&TokenQuery::new(0, vec![0, 2])).unwrap();
        let a = 0.6 * 0.7 * 0.1;
        let b = 0.4 * 0.1 * 0.6;
        let want = [a / (a + b), b / (a + b)];
        for (g, w) in p.iter().zip(want) {
            assert!(((g - w) / w).abs() <= 1e-12);
        }

        let m = emb_model();
        let es = m.embeddings().unwrap();
        let softmax = |k: usize, v: usize| {
            let s: Vec<f64> = (0..3)
                .map(|u| (es.bias[u] + es.out_vecs.row(u).dot(&es.topic_vecs.row(k))).exp())
                .collect();
            s[v] / s.iter().sum::<f64>()
        };
        let a = 0.5 * softmax(0, 1) * softmax(0, 1);
        let b = 0.5 * softmax(1, 1) * softmax(1, 1);
        let p = m.posterior_topics(&TokenQuery::new(2, vec![1, 1])).unwrap();
        assert!(((p[0] - a / (a + b)) / p[0]).abs() <= 1e-12);
        assert!(((p[1] - b / (a + b)) / p[1]).abs() <= 1e-12);
    }

    #[test]
    fn flat_context_word_is_uninformative() {
        let theta3 = array![[0.3, 0.7], [0.5, 0.5]];
        let phi3 = array![[0.4, 0.6], [0.4, 0.6]];
        let m = TrainedModel::new(vocab(2), Mode::Mmsgtm, Membership::Dense(theta3), Some(phi3), None).unwrap();
        let p = m.posterior_topics(&TokenQuery::new(0, vec![1, 0])).unwrap();
        assert!((p[0] - 0.3).abs() < 1e-12 && (p[1] - 0.7).abs() < 1e-12);
    }

    #[test]
    fn prior_vectors() {
        let m = emb_model();
        let es = m.embeddings().unwrap();
        let v = m.word_prior_vector(2).unwrap();
        let mid: Vec<f64> = (0..2).map(|j| 0.5 * (es.topic_vecs[[0, j]] + es.topic_vecs[[1, j]])).collect();
        assert_eq!(v, mid);

        let theta = array![[0.0, 1.0], [1.0, 0.0], [0.5, 0.5]];
        let m2 = TrainedModel::new(vocab(3), Mode::Mmsg, Membership::Dense(theta), None, Some(es.clone())).unwrap();
        assert_eq!(m2.word_prior_vector(0).unwrap(), es.topic_vec(1).to_vec());
    }

    #[test]
    fn token_posterior_vector_oracle() {
        let m = emb_model();
        let q = TokenQuery::new(0, vec![1, 2]);
        let post = m.posterior_topics(&q).unwrap();
        let es = m.embeddings().unwrap();
        let got = m.token_posterior_vector(&q).unwrap();
        for j in 0..2 {
            let want = post[0] * es.topic_vecs[[0, j]] + post[1] * es.topic_vecs[[1, j]];
            assert!((got[j] - want).abs() < 1e-15);
        }
        let empty = TokenQuery::new(1, vec![]);
        assert_eq!(m.token_posterior_vector(&empty).unwrap(), m.word_prior_vector(1).unwrap());
    }

    #[test]
    fn document_vectors() {
        let m = emb_model();
        let q = TokenQuery::new(0, vec![1]);
        let single = m.document_vector(std::slice::from_ref(&q)).unwrap();
        let t = m.token_posterior_vector(&q).unwrap();
        let n = norm(&t);
        for (a, b) in single.iter().zip(&t) {
            assert!((a - b / n).abs() < 1e-15);
        }
        let twice = m.document_vector(&[q.clone(), q.clone()]).unwrap();
        for (a, b) in single.iter().zip(&twice) {
            assert!((a - b).abs() < 1e-15);
        }
        assert!(matches!(m.document_vector(&[]), Err(Error::ZeroVector)));

        let doc = [0, 1, 2, 1];
        let qs = document_queries(&doc, 1);
        let mut sum = [0.0; 2];
        for q in &qs {
            let v = m.token_posterior_vector(q).unwrap();
            sum[0] += v[0];
            sum[1] += v[1];
        }
        let n = (sum[0] * sum[0] + sum[1] * sum[1]).sqrt();
        let got = m.document_vector(&qs).unwrap();
        assert!((got[0] - sum[0] / n).abs() < 1e-14 && (got[1] - sum[1] / n).abs() < 1e-14);
    }

    #[test]
    fn nearest_examples() {
        let m = emb_model();
        let q = m.embeddings().unwrap().topic_vec(1).to_vec();
        let top = m.nearest(&q, Pool::Topics, 2).unwrap();
        assert_eq!(top[0].0, 1);
        assert!((top[0].1 - 1.0).abs() < 1e-15);

        let rows = array![[1.0, 0.0], [0.0, 1.0], [0.0, 2.0]];
        let r = nearest_rows(&[0.0, 1.0], rows.view(), 3);
        assert_eq!(r.iter().map(|x| x.0).collect::<Vec<_>>(), vec![1, 2, 0]);
        assert_eq!(r[2].1, 0.0);
    }

    #[test]
    fn nearest_matches_full_sort() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(50);
        let rows = Array2::from_shape_fn((50, 6), |_| rng.random_range(-1.0..1.0));
        let q: Vec<f64> = (0..6).map(|_| rng.random_range(-1.0..1.0)).collect();
        let mut oracle: Vec<(usize, f64)> = (0..50)
            .map(|i| {
                let r = rows.row(i);
                let d: f64 = r.iter().zip(&q).map(|(a, b)| a * b).sum();
                let nr = r.iter().map(|x| x * x).sum::<f64>().sqrt();
                let nq = q.iter().map(|x| x * x).sum::<f64>().sqrt();
                (i, d / (nr * nq))
            })
            .collect();
        oracle.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap());
        let got = nearest_rows(&q, rows.view(), 50);
        assert_eq!(
            got.iter().map(|x| x.0).collect::<Vec<_>>(),
            oracle.iter().map(|x| x.0).collect::<Vec<_>>()
        );
    }

    #[test]
    fn composition() {
        let m = emb_model();
        let v = m.word_prior_vector(1).unwrap();
        let n = norm(&v);
        let got = m.compose(&[Term::Word(1)], &[]).unwrap();
        assert!((got[0] - v[0] / n).abs() < 1e-15 && (got[1] - v[1] / n).abs() < 1e-15);
        assert!(matches!(
            m.compose(&[Term::Word(1)], &[Term::Word(1)]),
            Err(Error::ZeroVector)
        ));
        let a = m.word_prior_vector(0).unwrap();
        let b = m.word_prior_vector(2).unwrap();
        let s = [a[0] + b[0], a[1] + b[1]];
        let ns = (s[0] * s[0] + s[1] * s[1]).sqrt();
        let got = m.compose(&[Term::Word(0), Term::Word(2)], &[]).unwrap();
        assert!((got[0] - s[0] / ns).abs() < 1e-15 && (got[1] - s[1] / ns).abs() < 1e-15);
    }

    #[test]
    fn mode_requirements() {
        let theta = Membership::Dense(array![[1.0], [1.0]]);
        let err = TrainedModel::new(vocab(2), Mode::Mmsg, theta.clone(), None, None).unwrap_err();
        assert!(matches!(err, Error::MissingComponent { what: "embeddings", .. }));
        let err = TrainedModel::new(vocab(2), Mode::Mmsgtm, theta, None, None).unwrap_err();
        assert!(matches!(err, Error::MissingComponent { what: "phi", .. }));
        assert_eq!("SGTM".parse::<Mode>().unwrap(), Mode::Sgtm);
        assert!("lda".parse::<Mode>().is_err());
    }

    #[test]
    fn degenerate_mode_prior_vector_is_own_topic() {
        let mut es = EmbeddingState::zeros(3, 3, 2);
        es.topic_vecs = array![[1.0, 2.0], [3.0, 4.0], [5.0, 6.0]];
        let m = TrainedModel::new(vocab(3), Mode::Sg, Membership::OneHot { vocab_size: 3 }, None, Some(es)).unwrap();
        assert_eq!(m.word_prior_vector(1).unwrap(), vec![3.0, 4.0]);
        let p = m.posterior_topics(&TokenQuery::new(2, vec![0, 1])).unwrap();
        assert_eq!(p, vec![0.0, 0.0, 1.0]);
    }
}
