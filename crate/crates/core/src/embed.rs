//! Log-bilinear topic/word embeddings learned by noise-contrastive estimation.
//!
//! With topic assignments fixed, every `(z_i, w_c)` pair is a data example for a logistic
//! classifier that separates it from words drawn from a noise distribution. The classifier's
//! logit is `G = v'_w . v_k + b_w - log p_n(w)`, i.e. the unnormalized model log-probability
//! minus the noise log-probability.

use std::sync::atomic::{AtomicU64, Ordering};

use log::info;
use ndarray::{Array1, Array2};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::alias::AliasTable;
use crate::corpus::{ContextInstance, WordId};
use crate::error::{Error, Result};
use crate::math::{dot, log_sigmoid, logsumexp, sigmoid};

/// Topic vectors, output word vectors and output biases.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingState {
    /// K x d.
    pub topic_vecs: Array2<f64>,
    /// D x d.
    pub out_vecs: Array2<f64>,
    /// Length D.
    pub bias: Array1<f64>,
}

impl EmbeddingState {
    pub fn zeros(topics: usize, vocab: usize, dim: usize) -> Self {
        EmbeddingState {
            topic_vecs: Array2::zeros((topics, dim)),
            out_vecs: Array2::zeros((vocab, dim)),
            bias: Array1::zeros(vocab),
        }
    }

    /// Topic vectors uniform in `(-0.5/d, 0.5/d)`, output vectors zero, biases at the log
    /// unigram frequency.
    pub fn init<R: Rng>(topics: usize, unigram_counts: &[u64], dim: usize, rng: &mut R) -> Self {
        let mut es = Self::zeros(topics, unigram_counts.len(), dim);
        let half = 0.5 / dim as f64;
        es.topic_vecs.mapv_inplace(|_| rng.random_range(-half..half));
        let total: u64 = unigram_counts.iter().sum();
        for (b, &c) in es.bias.iter_mut().zip(unigram_counts) {
            *b = ((c.max(1)) as f64 / total.max(1) as f64).ln();
        }
        es
    }

    pub fn num_topics(&self) -> usize {
        self.topic_vecs.nrows()
    }

    pub fn vocab_size(&self) -> usize {
        self.out_vecs.nrows()
    }

    pub fn dim(&self) -> usize {
        self.topic_vecs.ncols()
    }

    pub fn is_finite(&self) -> bool {
        self.topic_vecs.iter().all(|x| x.is_finite())
            && self.out_vecs.iter().all(|x| x.is_finite())
            && self.bias.iter().all(|x| x.is_finite())
    }

    pub fn topic_vec(&self, k: usize) -> &[f64] {
        self.topic_vecs.row(k).to_slice().expect("row-major")
    }

    pub fn out_vec(&self, v: WordId) -> &[f64] {
        self.out_vecs.row(v as usize).to_slice().expect("row-major")
    }

    /// Unnormalized log-probability `v'_v . v_k + b_v`.
    #[inline]
    pub fn score(&self, k: usize, v: WordId) -> f64 {
        dot(self.out_vec(v), self.topic_vec(k)) + self.bias[v as usize]
    }

    /// `log sum_v exp(score(k, v))`, an O(D d) computation.
    pub fn log_normalizer(&self, k: usize) -> f64 {
        logsumexp((0..self.vocab_size()).map(|v| self.score(k, v as WordId)))
    }

    /// Normalized `log p(v | k)` under the softmax over the whole dictionary.
    pub fn context_word_logprob(&self, k: usize, v: WordId) -> f64 {
        self.score(k, v) - self.log_normalizer(k)
    }

    /// Normalized softmax distribution of topic `k` over the dictionary.
    pub fn topic_distribution(&self, k: usize) -> Vec<f64> {
        let scores: Vec<f64> = (0..self.vocab_size())
            .map(|v| self.score(k, v as WordId))
            .collect();
        let lse = logsumexp(scores.iter().copied());
        scores.into_iter().map(|s| (s - lse).exp()).collect()
    }
}

/// Complete-data log likelihood of instances under imputed topics:
/// `sum_i [log theta^(w_i)_{z_i} + sum_c log p(w_c | z_i)]`.
///
/// A zero theta entry at an assigned topic yields negative infinity.
pub fn cdll(
    es: &EmbeddingState,
    theta: &Array2<f64>,
    instances: &[ContextInstance],
    z_hat: &[u32],
) -> f64 {
    let norms: Vec<f64> = (0..es.num_topics()).map(|k| es.log_normalizer(k)).collect();
    instances
        .iter()
        .zip(z_hat)
        .map(|(inst, &z)| {
            let k = z as usize;
            let prior = theta[[inst.input as usize, k]].ln();
            let words: f64 = inst.context.iter().map(|&v| es.score(k, v) - norms[k]).sum();
            prior + words
        })
        .sum()
}

/// Noise distribution `p_n(v) ∝ count(v)^exponent`.
#[derive(Debug, Clone)]
pub struct NoiseDistribution {
    probs: Vec<f64>,
    log_probs: Vec<f64>,
    exponent: f64,
    table: AliasTable,
}

impl NoiseDistribution {
    pub fn new(counts: &[u64], exponent: f64) -> Result<Self> {
        if !exponent.is_finite() || exponent < 0.0 {
            return Err(Error::config("noise_exponent", "must be finite and non-negative"));
        }
        let weights: Vec<f64> = counts.iter().map(|&c| (c as f64).powf(exponent)).collect();
        if weights.iter().any(|&w| !(w > 0.0)) {
            return Err(Error::InvalidWeights(
                "every noise word needs positive probability".into(),
            ));
        }
        let table = AliasTable::new(&weights)?;
        let probs = table.snapshot().to_vec();
        let log_probs = probs.iter().map(|p| p.ln()).collect();
        Ok(NoiseDistribution {
            probs,
            log_probs,
            exponent,
            table,
        })
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn exponent(&self) -> f64 {
        self.exponent
    }

    #[inline]
    pub fn log_prob(&self, v: WordId) -> f64 {
        self.log_probs[v as usize]
    }

    #[inline]
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> WordId {
        self.table.sample(rng) as WordId
    }
}

/// Builds the noise distribution from vocabulary frequencies.
pub fn build_noise(counts: &[u64], exponent: f64) -> Result<NoiseDistribution> {
    NoiseDistribution::new(counts, exponent)
}

/// The NCE logit `score(k, v) - log p_n(v)`.
pub fn nce_logit(es: &EmbeddingState, noise: &NoiseDistribution, k: usize, v: WordId) -> f64 {
    es.score(k, v) - noise.log_prob(v)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub dim: usize,
    /// Noise words per data word.
    pub noise_samples: usize,
    pub noise_exponent: f64,
    /// Pairs per minibatch.
    pub minibatch: usize,
    pub steps: usize,
    pub learning_rate: f64,
    /// Learning rate reached by linear decay at the last step.
    pub min_learning_rate: f64,
    pub seed: u64,
    /// 1 runs the deterministic single-worker loop; more workers update shared parameters
    /// without locking.
    pub threads: usize,
    /// Steps between training log rows; 0 disables logging.
    pub log_every: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            dim: 128,
            noise_samples: 5,
            noise_exponent: 1.0,
            minibatch: 128,
            steps: 1_000_000,
            learning_rate: 0.025,
            min_learning_rate: 1e-4,
            seed: 1,
            threads: 1,
            log_every: 10_000,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::config("dim", "must be at least 1"));
        }
        if self.noise_samples == 0 {
            return Err(Error::config("noise_samples", "must be at least 1"));
        }
        if self.minibatch == 0 {
            return Err(Error::config("minibatch", "must be at least 1"));
        }
        if !(self.learning_rate >= 0.0) || !(self.min_learning_rate >= 0.0) {
            return Err(Error::config("learning_rate", "must be non-negative"));
        }
        if self.threads == 0 {
            return Err(Error::config("threads", "must be at least 1"));
        }
        Ok(())
    }

    /// Linear decay from `learning_rate` to `min_learning_rate` over `steps`.
    pub fn learning_rate_at(&self, step: usize) -> f64 {
        if self.steps <= 1 {
            return self.learning_rate;
        }
        let frac = step as f64 / (self.steps - 1) as f64;
        self.learning_rate + (self.min_learning_rate - self.learning_rate) * frac.min(1.0)
    }
}

/// A (topic, context word) training example.
pub type Pair = (u32, WordId);

/// Parameter access shared by the plain and the lock-free stores.
trait Params {
    fn read_topic(&self, k: usize, out: &mut [f64]);
    fn read_out(&self, v: usize, out: &mut [f64]);
    fn read_bias(&self, v: usize) -> f64;
    /// Adds `scale * x` to topic vector `k`.
    fn add_topic(&mut self, k: usize, scale: f64, x: &[f64]);
    /// Adds `scale * x` to output vector `v`.
    fn add_out(&mut self, v: usize, scale: f64, x: &[f64]);
    fn add_bias(&mut self, v: usize, delta: f64);
}

impl Params for EmbeddingState {
    fn read_topic(&self, k: usize, out: &mut [f64]) {
        out.copy_from_slice(self.topic_vec(k));
    }
    fn read_out(&self, v: usize, out: &mut [f64]) {
        out.copy_from_slice(self.out_vec(v as WordId));
    }
    fn read_bias(&self, v: usize) -> f64 {
        self.bias[v]
    }
    fn add_topic(&mut self, k: usize, scale: f64, x: &[f64]) {
        for (p, x) in self.topic_vecs.row_mut(k).iter_mut().zip(x) {
            *p += scale * x;
        }
    }
    fn add_out(&mut self, v: usize, scale: f64, x: &[f64]) {
        for (p, x) in self.out_vecs.row_mut(v).iter_mut().zip(x) {
            *p += scale * x;
        }
    }
    fn add_bias(&mut self, v: usize, delta: f64) {
        self.bias[v] += delta;
    }
}

/// Dense gradient scratch space with a record of the touched rows.
#[derive(Debug, Clone)]
pub struct Gradient {
    dim: usize,
    topic: Vec<f64>,
    out: Vec<f64>,
    bias: Vec<f64>,
    topic_touched: Vec<bool>,
    out_touched: Vec<bool>,
    topic_rows: Vec<usize>,
    out_rows: Vec<usize>,
}

impl Gradient {
    pub fn new(topics: usize, vocab: usize, dim: usize) -> Self {
        Gradient {
            dim,
            topic: vec![0.0; topics * dim],
            out: vec![0.0; vocab * dim],
            bias: vec![0.0; vocab],
            topic_touched: vec![false; topics],
            out_touched: vec![false; vocab],
            topic_rows: Vec::new(),
            out_rows: Vec::new(),
        }
    }

    pub fn clear(&mut self) {
        let d = self.dim;
        for &k in &self.topic_rows {
            self.topic[k * d..(k + 1) * d].fill(0.0);
            self.topic_touched[k] = false;
        }
        for &v in &self.out_rows {
            self.out[v * d..(v + 1) * d].fill(0.0);
            self.bias[v] = 0.0;
            self.out_touched[v] = false;
        }
        self.topic_rows.clear();
        self.out_rows.clear();
    }

    pub fn topic_rows(&self) -> &[usize] {
        &self.topic_rows
    }

    pub fn out_rows(&self) -> &[usize] {
        &self.out_rows
    }

    pub fn topic(&self, k: usize) -> &[f64] {
        &self.topic[k * self.dim..(k + 1) * self.dim]
    }

    pub fn out(&self, v: usize) -> &[f64] {
        &self.out[v * self.dim..(v + 1) * self.dim]
    }

    pub fn bias(&self, v: usize) -> f64 {
        self.bias[v]
    }

    fn touch_topic(&mut self, k: usize) {
        if !self.topic_touched[k] {
            self.topic_touched[k] = true;
            self.topic_rows.push(k);
        }
    }

    fn touch_out(&mut self, v: usize) {
        if !self.out_touched[v] {
            self.out_touched[v] = true;
            self.out_rows.push(v);
        }
    }

}

/// Accumulates the gradient of one (topic, word) term with dJ/dG = `g`.
fn accumulate(
    grad: &mut Gradient,
    k: usize,
    v: usize,
    g: f64,
    topic_buf: &[f64],
    out_buf: &[f64],
) {
    let d = grad.dim;
    grad.touch_topic(k);
    grad.touch_out(v);
    for (t, x) in grad.topic[k * d..(k + 1) * d].iter_mut().zip(out_buf) {
        *t += g * x;
    }
    for (o, x) in grad.out[v * d..(v + 1) * d].iter_mut().zip(topic_buf) {
        *o += g * x;
    }
    grad.bias[v] += g;
}

fn term<P: Params>(
    params: &P,
    noise: &NoiseDistribution,
    v: WordId,
    topic_buf: &[f64],
    out_buf: &mut [f64],
) -> f64 {
    params.read_out(v as usize, out_buf);
    dot(out_buf, topic_buf) + params.read_bias(v as usize) - noise.log_prob(v)
}

/// Objective and gradient of a batch given its noise draws (`noise_samples` per pair,
/// laid out pair-major). `J = sum_data log s(G) + sum_noise log(1 - s(G))`.
fn batch_gradient_into<P: Params>(
    params: &P,
    noise: &NoiseDistribution,
    batch: &[Pair],
    draws: &[WordId],
    grad: &mut Gradient,
) -> f64 {
    let d = grad.dim;
    let per_pair = draws.len() / batch.len().max(1);
    let mut topic_buf = vec![0.0; d];
    let mut out_buf = vec![0.0; d];
    let mut objective = 0.0;
    for (p, &(k, v)) in batch.iter().enumerate() {
        let k = k as usize;
        params.read_topic(k, &mut topic_buf);
        let g = term(params, noise, v, &topic_buf, &mut out_buf);
        objective += log_sigmoid(g);
        accumulate(grad, k, v as usize, 1.0 - sigmoid(g), &topic_buf, &out_buf);
        for &u in &draws[p * per_pair..(p + 1) * per_pair] {
            let g = term(params, noise, u, &topic_buf, &mut out_buf);
            objective += log_sigmoid(-g);
            accumulate(grad, k, u as usize, -sigmoid(g), &topic_buf, &out_buf);
        }
    }
    objective
}

/// The batch NCE objective for fixed noise draws.
pub fn batch_objective(
    es: &EmbeddingState,
    noise: &NoiseDistribution,
    batch: &[Pair],
    draws: &[WordId],
) -> f64 {
    let per_pair = draws.len() / batch.len().max(1);
    batch
        .iter()
        .enumerate()
        .map(|(p, &(k, v))| {
            let k = k as usize;
            let data = log_sigmoid(nce_logit(es, noise, k, v));
            let noise_terms: f64 = draws[p * per_pair..(p + 1) * per_pair]
                .iter()
                .map(|&u| log_sigmoid(-nce_logit(es, noise, k, u)))
                .sum();
            data + noise_terms
        })
        .sum()
}

/// Objective and analytic gradient of [`batch_objective`].
pub fn batch_gradient(
    es: &EmbeddingState,
    noise: &NoiseDistribution,
    batch: &[Pair],
    draws: &[WordId],
) -> (f64, Gradient) {
    let mut grad = Gradient::new(es.num_topics(), es.vocab_size(), es.dim());
    let obj = batch_gradient_into(es, noise, batch, draws, &mut grad);
    (obj, grad)
}

struct PairScratch {
    topic: Vec<f64>,
    out: Vec<f64>,
    topic_grad: Vec<f64>,
    gs: Vec<f64>,
}

impl PairScratch {
    fn new(dim: usize) -> Self {
        PairScratch {
            topic: vec![0.0; dim],
            out: vec![0.0; dim],
            topic_grad: vec![0.0; dim],
            gs: Vec::new(),
        }
    }
}

/// One gradient ascent step on the objective of a single pair and its noise draws, with
/// every term evaluated before any parameter moves. Returns the pair's objective, or `None`
/// without touching the parameters when a logit is not finite.
fn pair_step<P: Params>(
    params: &mut P,
    noise: &NoiseDistribution,
    (k, v): Pair,
    draws: &[WordId],
    lr: f64,
    s: &mut PairScratch,
) -> Option<f64> {
    let k = k as usize;
    params.read_topic(k, &mut s.topic);
    s.topic_grad.fill(0.0);
    s.gs.clear();
    let mut objective = 0.0;
    for (j, &u) in std::iter::once(&v).chain(draws).enumerate() {
        let logit = term(params, noise, u, &s.topic, &mut s.out);
        if !logit.is_finite() {
            return None;
        }
        let g = if j == 0 {
            objective += log_sigmoid(logit);
            1.0 - sigmoid(logit)
        } else {
            objective += log_sigmoid(-logit);
            -sigmoid(logit)
        };
        for (t, x) in s.topic_grad.iter_mut().zip(&s.out) {
            *t += g * x;
        }
        s.gs.push(g);
    }
    for (&u, &g) in std::iter::once(&v).chain(draws).zip(&s.gs) {
        params.add_out(u as usize, lr * g, &s.topic);
        params.add_bias(u as usize, lr * g);
    }
    params.add_topic(k, lr, &s.topic_grad);
    Some(objective)
}

/// Reusable NCE optimizer state.
///
/// A step walks the minibatch pair by pair, as word2vec does: each pair's gradient is taken
/// at the parameters left by the previous pair. `lr` is therefore a per-pair step size, and
/// rows shared by many pairs of a batch do not receive one oversized summed update.
pub struct NceStepper {
    scratch: PairScratch,
    draws: Vec<WordId>,
    skipped: u64,
}

impl NceStepper {
    pub fn new(es: &EmbeddingState) -> Self {
        Self::with_dim(es.dim())
    }

    fn with_dim(dim: usize) -> Self {
        NceStepper {
            scratch: PairScratch::new(dim),
            draws: Vec::new(),
            skipped: 0,
        }
    }

    /// Pairs left out because a logit was not finite.
    pub fn skipped(&self) -> u64 {
        self.skipped
    }

    /// One minibatch of stochastic gradient ascent. Draws `noise_samples` noise words per
    /// pair and returns the summed objective of the pairs, each evaluated just before its
    /// own update.
    pub fn step<R: Rng>(
        &mut self,
        es: &mut EmbeddingState,
        batch: &[Pair],
        noise: &NoiseDistribution,
        noise_samples: usize,
        lr: f64,
        rng: &mut R,
    ) -> f64 {
        self.run(es, batch, noise, noise_samples, lr, rng)
    }

    fn run<P: Params, R: Rng>(
        &mut self,
        params: &mut P,
        batch: &[Pair],
        noise: &NoiseDistribution,
        noise_samples: usize,
        lr: f64,
        rng: &mut R,
    ) -> f64 {
        self.draws.clear();
        for _ in 0..batch.len() * noise_samples {
            self.draws.push(noise.sample(rng));
        }
        let mut objective = 0.0;
        for (p, &pair) in batch.iter().enumerate() {
            let draws = &self.draws[p * noise_samples..(p + 1) * noise_samples];
            match pair_step(params, noise, pair, draws, lr, &mut self.scratch) {
                Some(o) => objective += o,
                None => self.skipped += 1,
            }
        }
        objective
    }
}

/// Convenience wrapper around [`NceStepper::step`] for one-off steps.
pub fn nce_step<R: Rng>(
    es: &mut EmbeddingState,
    batch: &[Pair],
    noise: &NoiseDistribution,
    cfg: &TrainConfig,
    lr: f64,
    rng: &mut R,
) -> f64 {
    NceStepper::new(es).step(es, batch, noise, cfg.noise_samples, lr, rng)
}


/// One row of the NCE training log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainLogRow {
    pub step: usize,
    /// Mean objective per data pair over the steps since the previous row.
    pub objective: f64,
    pub learning_rate: f64,
}

impl TrainLogRow {
    pub const TSV_HEADER: &'static str = "step\tobjective\tlearning_rate";

    pub fn tsv_row(&self) -> String {
        format!("{}\t{:.6}\t{:.6e}", self.step, self.objective, self.learning_rate)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainSummary {
    pub steps: usize,
    /// Pairs left out of training because a logit was not finite.
    pub skipped_pairs: u64,
    pub final_objective: f64,
}

/// Flattens instances and their imputed topics into (topic, context word) pairs.
pub fn training_pairs(instances: &[ContextInstance], z_hat: &[u32]) -> Vec<Pair> {
    instances
        .iter()
        .zip(z_hat)
        .flat_map(|(inst, &z)| inst.context.iter().map(move |&w| (z, w)))
        .collect()
}

/// Streams shuffled minibatches over the pair list, reshuffling after every pass.
struct BatchStream {
    order: Vec<usize>,
    cursor: usize,
}

impl BatchStream {
    fn new(n: usize) -> Self {
        BatchStream {
            order: (0..n).collect(),
            cursor: n,
        }
    }

    fn next_batch<R: Rng>(&mut self, pairs: &[Pair], size: usize, rng: &mut R, out: &mut Vec<Pair>) {
        out.clear();
        while out.len() < size {
            if self.cursor == self.order.len() {
                self.order.shuffle(rng);
                self.cursor = 0;
            }
            out.push(pairs[self.order[self.cursor]]);
            self.cursor += 1;
        }
    }
}

/// Learns embeddings for imputed assignments.
///
/// `unigram_counts` initializes the biases and the noise distribution. `on_log` receives a
/// row every `cfg.log_every` steps.
pub fn train_embeddings(
    instances: &[ContextInstance],
    z_hat: &[u32],
    num_topics: usize,
    unigram_counts: &[u64],
    cfg: &TrainConfig,
    mut on_log: impl FnMut(&TrainLogRow),
) -> Result<(EmbeddingState, TrainSummary)> {
    cfg.validate()?;
    if z_hat.len() != instances.len() {
        return Err(Error::config("z_hat", "one topic per instance required"));
    }
    let noise = NoiseDistribution::new(unigram_counts, cfg.noise_exponent)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut es = EmbeddingState::init(num_topics, unigram_counts, cfg.dim, &mut rng);
    let pairs = training_pairs(instances, z_hat);
    if pairs.is_empty() || cfg.steps == 0 {
        return Ok((es, TrainSummary::default()));
    }
    if cfg.threads > 1 {
        let summary = train_lock_free(&mut es, &pairs, &noise, cfg, &mut rng, &mut on_log);
        return Ok((es, summary));
    }

    let mut stepper = NceStepper::new(&es);
    let mut stream = BatchStream::new(pairs.len());
    let mut batch = Vec::with_capacity(cfg.minibatch);
    let (mut window_obj, mut window_pairs) = (0.0, 0usize);
    let mut last = 0.0;
    for step in 0..cfg.steps {
        stream.next_batch(&pairs, cfg.minibatch, &mut rng, &mut batch);
        let lr = cfg.learning_rate_at(step);
        let obj = stepper.step(&mut es, &batch, &noise, cfg.noise_samples, lr, &mut rng);
        window_obj += obj;
        window_pairs += batch.len();
        if (cfg.log_every > 0 && (step + 1) % cfg.log_every == 0) || step + 1 == cfg.steps {
            last = window_obj / window_pairs as f64;
            let row = TrainLogRow {
                step: step + 1,
                objective: last,
                learning_rate: lr,
            };
            info!("nce step {} objective {:.5} lr {:.3e}", row.step, row.objective, lr);
            on_log(&row);
            window_obj = 0.0;
            window_pairs = 0;
        }
    }
    Ok((
        es,
        TrainSummary {
            steps: cfg.steps,
            skipped_pairs: stepper.skipped(),
            final_objective: last,
        },
    ))
}

/// Parameters stored as relaxed atomics so that workers can read and write them without
/// locking. Concurrent read-modify-write cycles may lose updates.
struct SharedParams {
    dim: usize,
    topic: Vec<AtomicU64>,
    out: Vec<AtomicU64>,
    bias: Vec<AtomicU64>,
}

fn to_atomic<'a>(xs: impl Iterator<Item = &'a f64>) -> Vec<AtomicU64> {
    xs.map(|x| AtomicU64::new(x.to_bits())).collect()
}

#[inline]
fn load(a: &AtomicU64) -> f64 {
    f64::from_bits(a.load(Ordering::Relaxed))
}

#[inline]
fn add(a: &AtomicU64, delta: f64) {
    a.store((load(a) + delta).to_bits(), Ordering::Relaxed);
}

impl SharedParams {
    fn from_state(es: &EmbeddingState) -> Self {
        SharedParams {
            dim: es.dim(),
            topic: to_atomic(es.topic_vecs.iter()),
            out: to_atomic(es.out_vecs.iter()),
            bias: to_atomic(es.bias.iter()),
        }
    }

    fn write_back(&self, es: &mut EmbeddingState) {
        for (p, a) in es.topic_vecs.iter_mut().zip(&self.topic) {
            *p = load(a);
        }
        for (p, a) in es.out_vecs.iter_mut().zip(&self.out) {
            *p = load(a);
        }
        for (p, a) in es.bias.iter_mut().zip(&self.bias) {
            *p = load(a);
        }
    }

}

/// One worker's handle on the shared parameters.
struct SharedView<'a>(&'a SharedParams);

impl Params for SharedView<'_> {
    fn read_topic(&self, k: usize, out: &mut [f64]) {
        let d = self.0.dim;
        for (o, a) in out.iter_mut().zip(&self.0.topic[k * d..(k + 1) * d]) {
            *o = load(a);
        }
    }
    fn read_out(&self, v: usize, out: &mut [f64]) {
        let d = self.0.dim;
        for (o, a) in out.iter_mut().zip(&self.0.out[v * d..(v + 1) * d]) {
            *o = load(a);
        }
    }
    fn read_bias(&self, v: usize) -> f64 {
        load(&self.0.bias[v])
    }
    fn add_topic(&mut self, k: usize, scale: f64, x: &[f64]) {
        let d = self.0.dim;
        for (a, x) in self.0.topic[k * d..(k + 1) * d].iter().zip(x) {
            add(a, scale * x);
        }
    }
    fn add_out(&mut self, v: usize, scale: f64, x: &[f64]) {
        let d = self.0.dim;
        for (a, x) in self.0.out[v * d..(v + 1) * d].iter().zip(x) {
            add(a, scale * x);
        }
    }
    fn add_bias(&mut self, v: usize, delta: f64) {
        add(&self.0.bias[v], delta);
    }
}

fn train_lock_free(
    es: &mut EmbeddingState,
    pairs: &[Pair],
    noise: &NoiseDistribution,
    cfg: &TrainConfig,
    rng: &mut ChaCha8Rng,
    on_log: &mut dyn FnMut(&TrainLogRow),
) -> TrainSummary {
    let shared = SharedParams::from_state(es);
    let dim = es.dim();
    let seeds: Vec<u64> = (0..cfg.threads).map(|_| rng.random()).collect();
    let results: Vec<(f64, usize, u64)> = std::thread::scope(|scope| {
        let handles: Vec<_> = seeds
            .iter()
            .enumerate()
            .map(|(w, &seed)| {
                let shared = &shared;
                scope.spawn(move || {
                    let mut rng = ChaCha8Rng::seed_from_u64(seed);
                    let mut view = SharedView(shared);
                    let mut stepper = NceStepper::with_dim(dim);
                    let mut stream = BatchStream::new(pairs.len());
                    let mut batch = Vec::with_capacity(cfg.minibatch);
                    let (mut obj_sum, mut n_pairs) = (0.0, 0usize);
                    // Worker w takes global steps w, w + threads, ...
                    for step in (w..cfg.steps).step_by(cfg.threads) {
                        stream.next_batch(pairs, cfg.minibatch, &mut rng, &mut batch);
                        let lr = cfg.learning_rate_at(step);
                        obj_sum += stepper.run(&mut view, &batch, noise, cfg.noise_samples, lr, &mut rng);
                        n_pairs += batch.len();
                    }
                    (obj_sum, n_pairs, stepper.skipped())
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("worker panicked"))
            .collect()
    });
    shared.write_back(es);
    let obj: f64 = results.iter().map(|r| r.0).sum();
    let n: usize = results.iter().map(|r| r.1).sum();
    let final_objective = obj / n.max(1) as f64;
    on_log(&TrainLogRow {
        step: cfg.steps,
        objective: final_objective,
        learning_rate: cfg.learning_rate_at(cfg.steps.saturating_sub(1)),
    });
    TrainSummary {
        steps: cfg.steps,
        skipped_pairs: results.iter().map(|r| r.2).sum(),
        final_objective,
    }
}
