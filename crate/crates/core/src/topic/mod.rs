//! The topic-model view of the mixed membership skip-gram: count state, the collapsed Gibbs
//! conditional, smoothed estimates of the per-word topic proportions and per-topic word
//! distributions, and the annealed Metropolis-Hastings-Walker chain that imputes topics.

mod chain;

pub use chain::{
    mh_accept_probability, mh_accept_probability_log, run_chain, SweepStats, TopicChain,
    CHECKPOINT_FORMAT, CHECKPOINT_VERSION,
};

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::corpus::{ContextInstance, WordId};
use crate::error::{Error, Result};
use crate::math::{ln_gamma, softmax_in_place};

/// Dirichlet priors and annealing constants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hyperparams {
    /// Concentration over topics for each word, length K.
    pub alpha: Vec<f64>,
    /// Concentration over words for each topic, length D.
    pub beta: Vec<f64>,
    /// Final temperature.
    pub t0: f64,
    /// Geometric decay of the temperature offset.
    pub kappa: f64,
    /// Initial temperature offset.
    pub lambda: f64,
    /// Annealing sweeps.
    pub iters: usize,
    /// Metropolis-Hastings proposals per token per sweep.
    pub proposals_per_token: usize,
}

impl Hyperparams {
    /// Symmetric priors with the defaults used throughout the crate: `alpha = 50 / K`,
    /// `beta = 0.01`, `T0 = 1e-4`, `kappa = 0.99`, `lambda = 2 * window`, 1000 sweeps.
    pub fn defaults(k: usize, d: usize, window: usize) -> Self {
        Hyperparams {
            alpha: vec![50.0 / k as f64; k],
            beta: vec![0.01; d],
            t0: 1e-4,
            kappa: 0.99,
            lambda: (2 * window) as f64,
            iters: 1000,
            proposals_per_token: 1,
        }
    }

    pub fn symmetric(k: usize, d: usize, alpha: f64, beta: f64) -> Self {
        Hyperparams {
            alpha: vec![alpha; k],
            beta: vec![beta; d],
            ..Self::defaults(k, d, 5)
        }
    }

    pub fn num_topics(&self) -> usize {
        self.alpha.len()
    }

    pub fn vocab_size(&self) -> usize {
        self.beta.len()
    }

    pub fn beta_sum(&self) -> f64 {
        self.beta.iter().sum()
    }

    /// `T_j = T0 + lambda * kappa^j`.
    pub fn temperature(&self, j: usize) -> f64 {
        self.t0 + self.lambda * self.kappa.powi(j as i32)
    }

    pub fn validate(&self) -> Result<()> {
        if self.alpha.is_empty() {
            return Err(Error::config("topics", "need at least one topic"));
        }
        if self.alpha.iter().any(|a| !(*a > 0.0) || !a.is_finite()) {
            return Err(Error::config("alpha", "every entry must be positive and finite"));
        }
        if self.beta.iter().any(|b| !(*b > 0.0) || !b.is_finite()) {
            return Err(Error::config("beta", "every entry must be positive and finite"));
        }
        if !(self.kappa > 0.0 && self.kappa < 1.0) {
            return Err(Error::config("kappa", "must lie in (0, 1)"));
        }
        if !(self.t0 > 0.0) {
            return Err(Error::config("t0", "must be positive"));
        }
        if !(self.lambda >= 0.0) {
            return Err(Error::config("lambda", "must be non-negative"));
        }
        if self.iters == 0 {
            return Err(Error::config("anneal_iters", "must be at least 1"));
        }
        if self.proposals_per_token == 0 {
            return Err(Error::config("proposals_per_token", "must be at least 1"));
        }
        Ok(())
    }
}

/// Sufficient statistics of the collapsed sampler.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CountState {
    k: usize,
    d: usize,
    /// Topic of each instance.
    z: Vec<u32>,
    /// D x K: contexts of input word w assigned to topic k.
    word_topic: Vec<u32>,
    /// K x D: output word v drawn under topic k.
    topic_word: Vec<u32>,
    /// Per-topic output word totals.
    topic_total: Vec<u64>,
}

impl CountState {
    /// Builds counts for an explicit assignment.
    pub fn from_assignments(
        instances: &[ContextInstance],
        z: Vec<u32>,
        k: usize,
        d: usize,
    ) -> Self {
        assert_eq!(instances.len(), z.len(), "one topic per instance");
        let mut state = CountState {
            k,
            d,
            z: Vec::with_capacity(instances.len()),
            word_topic: vec![0; d * k],
            topic_word: vec![0; k * d],
            topic_total: vec![0; k],
        };
        for (inst, topic) in instances.iter().zip(z) {
            assert!((topic as usize) < k, "topic {topic} out of range");
            state.add(inst, topic as usize);
            state.z.push(topic);
        }
        state
    }

    pub fn num_topics(&self) -> usize {
        self.k
    }

    pub fn vocab_size(&self) -> usize {
        self.d
    }

    pub fn assignments(&self) -> &[u32] {
        &self.z
    }

    pub fn topic_of(&self, i: usize) -> usize {
        self.z[i] as usize
    }

    #[inline]
    pub fn n_word_topic(&self, w: WordId, k: usize) -> u32 {
        self.word_topic[w as usize * self.k + k]
    }

    #[inline]
    pub fn n_topic_word(&self, k: usize, v: WordId) -> u32 {
        self.topic_word[k * self.d + v as usize]
    }

    #[inline]
    pub fn n_topic(&self, k: usize) -> u64 {
        self.topic_total[k]
    }

    pub fn word_topic_row(&self, w: WordId) -> &[u32] {
        let s = w as usize * self.k;
        &self.word_topic[s..s + self.k]
    }

    pub fn topic_word_row(&self, k: usize) -> &[u32] {
        &self.topic_word[k * self.d..(k + 1) * self.d]
    }

    pub(crate) fn raw_parts(&self) -> (&[u32], &[u32], &[u64]) {
        (&self.word_topic, &self.topic_word, &self.topic_total)
    }

    #[inline]
    pub(crate) fn add(&mut self, inst: &ContextInstance, k: usize) {
        self.word_topic[inst.input as usize * self.k + k] += 1;
        let row = k * self.d;
        for &v in &inst.context {
            self.topic_word[row + v as usize] += 1;
        }
        self.topic_total[k] += inst.context.len() as u64;
    }

    #[inline]
    pub(crate) fn remove(&mut self, inst: &ContextInstance, k: usize) {
        self.word_topic[inst.input as usize * self.k + k] -= 1;
        let row = k * self.d;
        for &v in &inst.context {
            self.topic_word[row + v as usize] -= 1;
        }
        self.topic_total[k] -= inst.context.len() as u64;
    }

    pub(crate) fn set_topic(&mut self, i: usize, k: usize) {
        self.z[i] = k as u32;
    }

    /// Removes instance `i`'s contribution, leaving the state in the "not i" configuration.
    pub fn exclude(&mut self, instances: &[ContextInstance], i: usize) {
        let k = self.z[i] as usize;
        self.remove(&instances[i], k);
    }

    /// Re-adds instance `i` under topic `k`.
    pub fn include(&mut self, instances: &[ContextInstance], i: usize, k: usize) {
        self.add(&instances[i], k);
        self.z[i] = k as u32;
    }

    /// Checks every count invariant against the instances the state was built from.
    pub fn check_invariants(&self, instances: &[ContextInstance]) -> bool {
        if self.z.len() != instances.len()
            || *self != CountState::from_assignments(instances, self.z.clone(), self.k, self.d)
        {
            return false;
        }
        let mut per_word = vec![0u64; self.d];
        for inst in instances {
            per_word[inst.input as usize] += 1;
        }
        let rows_ok = (0..self.d).all(|w| {
            self.word_topic_row(w as WordId)
                .iter()
                .map(|&c| c as u64)
                .sum::<u64>()
                == per_word[w]
        });
        let totals_ok = (0..self.k).all(|k| {
            self.topic_word_row(k).iter().map(|&c| c as u64).sum::<u64>() == self.topic_total[k]
        });
        let tokens: u64 = instances.iter().map(|i| i.context.len() as u64).sum();
        rows_ok && totals_ok && self.topic_total.iter().sum::<u64>() == tokens
    }

    /// Collapsed log joint `log p(context words, z | alpha, beta)` of the topic model.
    pub fn log_joint(&self, hp: &Hyperparams) -> f64 {
        let alpha_sum: f64 = hp.alpha.iter().sum();
        let beta_sum = hp.beta_sum();
        let mut total = 0.0;
        for w in 0..self.d {
            let row = self.word_topic_row(w as WordId);
            let n: u64 = row.iter().map(|&c| c as u64).sum();
            if n == 0 {
                continue;
            }
            total += ln_gamma(alpha_sum) - ln_gamma(n as f64 + alpha_sum);
            for (k, &c) in row.iter().enumerate() {
                if c > 0 {
                    total += ln_gamma(c as f64 + hp.alpha[k]) - ln_gamma(hp.alpha[k]);
                }
            }
        }
        for k in 0..self.k {
            if self.topic_total[k] == 0 {
                continue;
            }
            total += ln_gamma(beta_sum) - ln_gamma(self.topic_total[k] as f64 + beta_sum);
            for (v, &c) in self.topic_word_row(k).iter().enumerate() {
                if c > 0 {
                    total += ln_gamma(c as f64 + hp.beta[v]) - ln_gamma(hp.beta[v]);
                }
            }
        }
        total
    }
}

/// For each context position, the number of earlier positions holding the same word.
pub fn urn_offsets(context: &[WordId]) -> Vec<u32> {
    (0..context.len())
        .map(|c| context[..c].iter().filter(|&&w| w == context[c]).count() as u32)
        .collect()
}

/// Unnormalized log of the collapsed conditional for topic `k`; counts must exclude the
/// instance being resampled.
#[inline]
pub(crate) fn log_conditional_weight(
    state: &CountState,
    hp: &Hyperparams,
    beta_sum: f64,
    input: WordId,
    context: &[WordId],
    urn: &[u32],
    k: usize,
) -> f64 {
    let prior = state.n_word_topic(input, k) as f64 + hp.alpha[k];
    let n_k = state.n_topic(k) as f64 + beta_sum;
    let mut log_w = prior.ln();
    // Products of up to 16 ratios stay well inside f64 range before the log is taken.
    let mut product = 1.0;
    for (c, (&v, &offset)) in context.iter().zip(urn).enumerate() {
        let num = state.n_topic_word(k, v) as f64 + hp.beta[v as usize] + offset as f64;
        product *= num / (n_k + c as f64);
        if c % 16 == 15 {
            log_w += product.ln();
            product = 1.0;
        }
    }
    log_w + product.ln()
}

/// Normalized collapsed Gibbs conditional `p(z_i = k | rest)`.
///
/// The state must already exclude the instance. An empty context reduces to the
/// normalized pseudo-counts `n_k^(w) + alpha_k`.
pub fn gibbs_conditional(
    state: &CountState,
    hp: &Hyperparams,
    input: WordId,
    context: &[WordId],
) -> Vec<f64> {
    let beta_sum = hp.beta_sum();
    let urn = urn_offsets(context);
    let mut logs: Vec<f64> = (0..state.num_topics())
        .map(|k| log_conditional_weight(state, hp, beta_sum, input, context, &urn, k))
        .collect();
    softmax_in_place(&mut logs);
    logs
}

/// Smoothed point estimates read off a count state.
#[derive(Debug, Clone, PartialEq)]
pub struct MembershipEstimate {
    /// D x K, row w is theta^(w).
    pub theta: Array2<f64>,
    /// K x D, row k is phi^(k).
    pub phi: Array2<f64>,
}

impl MembershipEstimate {
    pub fn from_state(state: &CountState, hp: &Hyperparams) -> Self {
        MembershipEstimate {
            theta: estimate_theta(state, hp),
            phi: estimate_phi(state, hp),
        }
    }
}

/// `theta_k^(w) = (n_k^(w) + alpha_k) / sum_k' (n_k'^(w) + alpha_k')` from the final sample.
pub fn estimate_theta(state: &CountState, hp: &Hyperparams) -> Array2<f64> {
    let (d, k) = (state.vocab_size(), state.num_topics());
    let mut theta = Array2::zeros((d, k));
    for w in 0..d {
        let row = state.word_topic_row(w as WordId);
        let denom: f64 = row.iter().zip(&hp.alpha).map(|(&n, a)| n as f64 + a).sum();
        for (j, (&n, a)) in row.iter().zip(&hp.alpha).enumerate() {
            theta[[w, j]] = (n as f64 + a) / denom;
        }
    }
    theta
}

/// `phi_v^(k) = (n_v^(k) + beta_v) / (n^(k) + sum beta)`.
pub fn estimate_phi(state: &CountState, hp: &Hyperparams) -> Array2<f64> {
    let (d, k) = (state.vocab_size(), state.num_topics());
    let beta_sum = hp.beta_sum();
    let mut phi = Array2::zeros((k, d));
    for t in 0..k {
        let denom = state.n_topic(t) as f64 + beta_sum;
        for (v, &n) in state.topic_word_row(t).iter().enumerate() {
            phi[[t, v]] = (n as f64 + hp.beta[v]) / denom;
        }
    }
    phi
}

/// The naive Bayes configuration behind the skip-gram and its topic model: one topic per
/// dictionary word (K = D) and every instance assigned to its own input word.
pub fn degenerate_assignments(instances: &[ContextInstance], d: usize) -> CountState {
    let z = instances.iter().map(|i| i.input).collect();
    CountState::from_assignments(instances, z, d, d)
}

/// `phi` of the degenerate configuration computed straight from co-occurrence counts,
/// equal to `estimate_phi(&degenerate_assignments(..), ..)` without the count tables.
pub fn degenerate_phi(instances: &[ContextInstance], d: usize, beta: &[f64]) -> Array2<f64> {
    let mut phi = Array2::<f64>::zeros((d, d));
    for inst in instances {
        let mut row = phi.row_mut(inst.input as usize);
        for &c in &inst.context {
            row[c as usize] += 1.0;
        }
    }
    let beta_sum: f64 = beta.iter().sum();
    for mut row in phi.rows_mut() {
        let denom = row.sum() + beta_sum;
        for (x, b) in row.iter_mut().zip(beta) {
            *x = (*x + b) / denom;
        }
    }
    phi
}

#[cfg(test)]
mod tests;
