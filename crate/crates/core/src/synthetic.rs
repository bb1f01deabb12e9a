//! Corpora sampled from a known mixed membership skip-gram, for recovery checks and demos.

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::alias::AliasTable;
use crate::corpus::{ContextInstance, WordId};
use crate::error::Result;

#[derive(Debug, Clone)]
pub struct SyntheticSpec {
    pub vocab_size: usize,
    pub topics: usize,
    pub contexts: usize,
    pub context_len: usize,
    /// Probability mass each word puts on its home topic `w % K`.
    pub home_weight: f64,
    /// Relative weight of words outside a topic's home block.
    pub leakage: f64,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            vocab_size: 20,
            topics: 3,
            contexts: 50_000,
            context_len: 10,
            home_weight: 0.8,
            leakage: 0.02,
            seed: 2017,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticCorpus {
    /// D x K generating membership.
    pub theta: Array2<f64>,
    /// K x D generating topics.
    pub phi: Array2<f64>,
    pub instances: Vec<ContextInstance>,
    /// Generating topic of every instance.
    pub z: Vec<u32>,
}

impl SyntheticCorpus {
    /// Unigram counts over inputs and context words, handy as a vocabulary surrogate.
    pub fn unigram_counts(&self) -> Vec<u64> {
        let mut counts = vec![0u64; self.phi.ncols()];
        for inst in &self.instances {
            counts[inst.input as usize] += 1;
            for &c in &inst.context {
                counts[c as usize] += 1;
            }
        }
        counts
    }
}

/// Samples inputs uniformly, a topic from the input's theta row, then every context word
/// independently from that topic.
pub fn generate(spec: &SyntheticSpec) -> Result<SyntheticCorpus> {
    let (d, k) = (spec.vocab_size, spec.topics);
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    let mut theta = Array2::zeros((d, k));
    for w in 0..d {
        let home = w % k;
        let others: Vec<f64> = (0..k).map(|_| rng.random_range(0.5..1.5)).collect();
        let spare: f64 = (0..k).filter(|&j| j != home).map(|j| others[j]).sum();
        for j in 0..k {
            theta[[w, j]] = if k == 1 {
                1.0
            } else if j == home {
                spec.home_weight
            } else {
                (1.0 - spec.home_weight) * others[j] / spare
            };
        }
    }

    let mut phi = Array2::zeros((k, d));
    for t in 0..k {
        for v in 0..d {
            let base = if v % k == t { 1.0 } else { spec.leakage };
            phi[[t, v]] = base * rng.random_range(0.5..1.5);
        }
        let s = phi.row(t).sum();
        phi.row_mut(t).mapv_inplace(|x| x / s);
    }

    let theta_tables = theta
        .rows()
        .into_iter()
        .map(|r| AliasTable::new(r.as_slice().expect("row-major")))
        .collect::<Result<Vec<_>>>()?;
    let phi_tables = phi
        .rows()
        .into_iter()
        .map(|r| AliasTable::new(r.as_slice().expect("row-major")))
        .collect::<Result<Vec<_>>>()?;

    let mut instances = Vec::with_capacity(spec.contexts);
    let mut z = Vec::with_capacity(spec.contexts);
    for i in 0..spec.contexts {
        let input = rng.random_range(0..d) as WordId;
        let topic = theta_tables[input as usize].sample(&mut rng);
        let context = (0..spec.context_len)
            .map(|_| phi_tables[topic].sample(&mut rng) as WordId)
            .collect();
        instances.push(ContextInstance {
            input,
            context,
            position: i,
            doc: 0,
        });
        z.push(topic as u32);
    }
    Ok(SyntheticCorpus {
        theta,
        phi,
        instances,
        z,
    })
}

/// `KL(p || q)` in nats; terms with `p = 0` contribute nothing.
pub fn kl_divergence(p: &[f64], q: &[f64]) -> f64 {
    p.iter()
        .zip(q)
        .filter(|(&a, _)| a > 0.0)
        .map(|(&a, &b)| a * (a / b).ln())
        .sum()
}

/// Matches estimated topics to true topics by the permutation minimizing total KL and
/// returns the per-topic divergences `KL(true_k || estimated_perm(k))`. Exhaustive, so
/// intended for small K.
pub fn best_permutation_kl(truth: &Array2<f64>, estimate: &Array2<f64>) -> (Vec<usize>, Vec<f64>) {
    let k = truth.nrows();
    let cost: Vec<Vec<f64>> = (0..k)
        .map(|a| {
            (0..k)
                .map(|b| {
                    kl_divergence(
                        truth.row(a).as_slice().expect("row-major"),
                        estimate.row(b).as_slice().expect("row-major"),
                    )
                })
                .collect()
        })
        .collect();
    let mut perm: Vec<usize> = (0..k).collect();
    let mut best = (f64::INFINITY, perm.clone());
    permute(&mut perm, 0, &mut |p| {
        let total: f64 = p.iter().enumerate().map(|(a, &b)| cost[a][b]).sum();
        if total < best.0 {
            best = (total, p.to_vec());
        }
    });
    let kls = best.1.iter().enumerate().map(|(a, &b)| cost[a][b]).collect();
    (best.1, kls)
}

fn permute(p: &mut Vec<usize>, i: usize, visit: &mut impl FnMut(&[usize])) {
    if i == p.len() {
        visit(p);
        return;
    }
    for j in i..p.len() {
        p.swap(i, j);
        permute(p, i + 1, visit);
        p.swap(i, j);
    }
}
