//! Walker/Vose alias tables.
//!
//! A table is built in O(K) from a weight vector and then answers draws in O(1). Tables used
//! as Metropolis-Hastings proposals keep the exact normalized distribution they were built
//! from (`snapshot`), so that the acceptance ratio divides by the probability the draw was
//! really made with, even after the live counts have moved on.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AliasTable {
    /// Probability of keeping slot `i` rather than jumping to `alias[i]`.
    probs: Vec<f64>,
    alias: Vec<u32>,
    snapshot: Vec<f64>,
    /// Cached draws remaining before the owner should rebuild.
    capacity: usize,
}

impl AliasTable {
    /// Builds a table inducing `weights / sum(weights)`. The draw capacity is set to the
    /// number of outcomes, which amortizes the O(K) build over K draws.
    pub fn new(weights: &[f64]) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidWeights("no outcomes".into()));
        }
        if let Some(w) = weights.iter().find(|w| !w.is_finite() || **w < 0.0) {
            return Err(Error::InvalidWeights(format!(
                "weights must be finite and non-negative, found {w}"
            )));
        }
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) || !total.is_finite() {
            return Err(Error::InvalidWeights("weights sum to zero".into()));
        }

        let n = weights.len();
        let snapshot: Vec<f64> = weights.iter().map(|w| w / total).collect();
        let mut scaled: Vec<f64> = snapshot.iter().map(|p| p * n as f64).collect();
        let mut probs = vec![1.0; n];
        let mut alias: Vec<u32> = (0..n as u32).collect();

        let (mut small, mut large): (Vec<usize>, Vec<usize>) =
            (0..n).partition(|&i| scaled[i] < 1.0);
        while let (Some(&s), Some(&l)) = (small.last(), large.last()) {
            small.pop();
            probs[s] = scaled[s];
            alias[s] = l as u32;
            scaled[l] = (scaled[l] + scaled[s]) - 1.0;
            if scaled[l] < 1.0 {
                large.pop();
                small.push(l);
            }
        }
        // Leftovers are 1 up to round-off.
        for i in small.into_iter().chain(large) {
            probs[i] = 1.0;
            alias[i] = i as u32;
        }

        Ok(AliasTable {
            probs,
            alias,
            snapshot,
            capacity: n,
        })
    }

    pub fn len(&self) -> usize {
        self.snapshot.len()
    }

    /// Checks the internal arrays agree, for tables that were deserialized.
    pub fn is_well_formed(&self) -> bool {
        let n = self.snapshot.len();
        n > 0
            && self.probs.len() == n
            && self.alias.len() == n
            && self.alias.iter().all(|&a| (a as usize) < n)
            && self.probs.iter().all(|p| (0.0..=1.0).contains(p))
    }

    pub fn is_empty(&self) -> bool {
        self.snapshot.is_empty()
    }

    /// Draws one outcome without touching the capacity counter.
    #[inline]
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let i = rng.random_range(0..self.probs.len());
        if rng.random::<f64>() < self.probs[i] {
            i
        } else {
            self.alias[i] as usize
        }
    }

    /// Draws one outcome and consumes one unit of cached capacity.
    #[inline]
    pub fn draw<R: Rng + ?Sized>(&mut self, rng: &mut R) -> usize {
        self.capacity = self.capacity.saturating_sub(1);
        self.sample(rng)
    }

    /// Probability of `k` under the distribution the table was built from.
    #[inline]
    pub fn proposal_prob(&self, k: usize) -> f64 {
        self.snapshot[k]
    }

    pub fn snapshot(&self) -> &[f64] {
        &self.snapshot
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn is_exhausted(&self) -> bool {
        self.capacity == 0
    }

    /// Sums the mass each slot sends to each outcome.
    pub fn induced_probs(&self) -> Vec<f64> {
        let n = self.probs.len() as f64;
        let mut mass = vec![0.0; self.probs.len()];
        for (i, (&p, &a)) in self.probs.iter().zip(&self.alias).enumerate() {
            mass[i] += p / n;
            mass[a as usize] += (1.0 - p) / n;
        }
        mass
    }
}
