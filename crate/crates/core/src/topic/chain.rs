use std::io::{BufRead, Write};

use log::{debug, info};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{log_conditional_weight, urn_offsets, CountState, Hyperparams, MembershipEstimate};
use crate::alias::AliasTable;
use crate::corpus::{ContextInstance, WordId};
use crate::error::{Error, Result};

pub const CHECKPOINT_FORMAT: &str = "mmsg-chain";
pub const CHECKPOINT_VERSION: u32 = 1;

/// `min(1, (p_new / p_old)^(1/T) * q_old / q_new)` for unnormalized conditionals.
///
/// Returns `None` when the log acceptance ratio is not finite; callers treat that as a
/// rejection.
pub fn mh_accept_probability(p_new: f64, p_old: f64, q_new: f64, q_old: f64, t: f64) -> Option<f64> {
    mh_accept_probability_log(p_new.ln(), p_old.ln(), q_new, q_old, t)
}

/// Same as [`mh_accept_probability`] with the conditionals given as logs.
#[inline]
pub fn mh_accept_probability_log(
    log_p_new: f64,
    log_p_old: f64,
    q_new: f64,
    q_old: f64,
    t: f64,
) -> Option<f64> {
    let log_ratio = (log_p_new - log_p_old) / t + q_old.ln() - q_new.ln();
    if !log_ratio.is_finite() {
        return None;
    }
    Some(if log_ratio >= 0.0 { 1.0 } else { log_ratio.exp() })
}

/// Per-sweep diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepStats {
    pub sweep: usize,
    pub temperature: f64,
    pub proposals: u64,
    pub accepted: u64,
    pub nonfinite: u64,
    /// Collapsed complete-data log likelihood of the topic model after the sweep.
    pub log_joint: f64,
}

impl SweepStats {
    pub fn acceptance_rate(&self) -> f64 {
        if self.proposals == 0 {
            0.0
        } else {
            self.accepted as f64 / self.proposals as f64
        }
    }

    pub const TSV_HEADER: &'static str = "sweep\ttemperature\tacceptance\tnonfinite\tcdll";

    pub fn tsv_row(&self) -> String {
        format!(
            "{}\t{:.6e}\t{:.6}\t{}\t{:.6}",
            self.sweep,
            self.temperature,
            self.acceptance_rate(),
            self.nonfinite,
            self.log_joint
        )
    }
}

#[derive(Serialize, Deserialize)]
struct CheckpointHeader {
    format: String,
    version: u32,
    topics: usize,
    vocab_size: usize,
    instances: usize,
    sweeps_done: usize,
    nonfinite: u64,
    hyperparams: Hyperparams,
}

/// Annealed Metropolis-Hastings-Walker sampler over topic assignments.
///
/// Each context word owns an alias table built from the live counts with a capacity of K
/// draws; once used up it is rebuilt. Acceptance ratios use the table's frozen snapshot.
pub struct TopicChain<'a> {
    instances: &'a [ContextInstance],
    hp: Hyperparams,
    beta_sum: f64,
    state: CountState,
    urn: Vec<u32>,
    urn_start: Vec<usize>,
    tables: Vec<Option<AliasTable>>,
    rng: ChaCha8Rng,
    sweeps_done: usize,
    nonfinite: u64,
}

impl<'a> TopicChain<'a> {
    /// Starts a chain with topics drawn uniformly at random.
    pub fn new(instances: &'a [ContextInstance], hp: Hyperparams, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let k = hp.num_topics();
        let z = (0..instances.len())
            .map(|_| rng.random_range(0..k as u32))
            .collect();
        Self::with_assignments(instances, hp, z, rng)
    }

    /// Starts a chain from explicit assignments.
    pub fn with_assignments(
        instances: &'a [ContextInstance],
        hp: Hyperparams,
        z: Vec<u32>,
        rng: ChaCha8Rng,
    ) -> Result<Self> {
        hp.validate()?;
        let (k, d) = (hp.num_topics(), hp.vocab_size());
        if instances.is_empty() {
            return Err(Error::config("instances", "need at least one training instance"));
        }
        for inst in instances {
            if inst.context.is_empty() {
                return Err(Error::config("instances", "every instance needs a context"));
            }
            if inst.input as usize >= d || inst.context.iter().any(|&v| v as usize >= d) {
                return Err(Error::config("beta", "length must match the vocabulary size"));
            }
        }
        if z.iter().any(|&t| t as usize >= k) {
            return Err(Error::config("topics", "assignment out of range"));
        }
        let state = CountState::from_assignments(instances, z, k, d);
        let mut urn = Vec::new();
        let mut urn_start = Vec::with_capacity(instances.len() + 1);
        for inst in instances {
            urn_start.push(urn.len());
            urn.extend(urn_offsets(&inst.context));
        }
        urn_start.push(urn.len());
        let beta_sum = hp.beta_sum();
        Ok(TopicChain {
            instances,
            hp,
            beta_sum,
            state,
            urn,
            urn_start,
            tables: vec![None; d],
            rng,
            sweeps_done: 0,
            nonfinite: 0,
        })
    }

    pub fn state(&self) -> &CountState {
        &self.state
    }

    pub fn into_state(self) -> CountState {
        self.state
    }

    pub fn hyperparams(&self) -> &Hyperparams {
        &self.hp
    }

    pub fn sweeps_done(&self) -> usize {
        self.sweeps_done
    }

    pub fn nonfinite(&self) -> u64 {
        self.nonfinite
    }

    pub fn estimate(&self) -> MembershipEstimate {
        MembershipEstimate::from_state(&self.state, &self.hp)
    }

    /// Resamples instance `i` with `proposals_per_token` MHW proposals at temperature `t`.
    /// Returns (proposals, accepted).
    pub fn update_token(&mut self, i: usize, t: f64) -> (u64, u64) {
        let inst = &self.instances[i];
        let urn = &self.urn[self.urn_start[i]..self.urn_start[i + 1]];
        let old = self.state.topic_of(i);
        self.state.remove(inst, old);

        let mut current = old;
        let mut accepted = 0;
        let proposals = self.hp.proposals_per_token as u64;
        for _ in 0..proposals {
            let c = self.rng.random_range(0..inst.context.len());
            let word = inst.context[c];
            let table = table_for(
                &mut self.tables,
                &self.state,
                &self.hp,
                self.beta_sum,
                word,
            );
            let candidate = table.draw(&mut self.rng);
            if candidate == current {
                accepted += 1;
                continue;
            }
            let q_new = table.proposal_prob(candidate);
            let q_old = table.proposal_prob(current);
            let lp = |k| {
                log_conditional_weight(
                    &self.state,
                    &self.hp,
                    self.beta_sum,
                    inst.input,
                    &inst.context,
                    urn,
                    k,
                )
            };
            match mh_accept_probability_log(lp(candidate), lp(current), q_new, q_old, t) {
                Some(a) => {
                    if a >= 1.0 || self.rng.random::<f64>() < a {
                        current = candidate;
                        accepted += 1;
                    }
                }
                None => self.nonfinite += 1,
            }
        }

        self.state.add(inst, current);
        self.state.set_topic(i, current);
        (proposals, accepted)
    }

    /// One pass over every instance at temperature `t`.
    pub fn sweep_at(&mut self, t: f64) -> SweepStats {
        let before = self.nonfinite;
        let (mut proposals, mut accepted) = (0, 0);
        for i in 0..self.instances.len() {
            let (p, a) = self.update_token(i, t);
            proposals += p;
            accepted += a;
        }
        self.sweeps_done += 1;
        SweepStats {
            sweep: self.sweeps_done,
            temperature: t,
            proposals,
            accepted,
            nonfinite: self.nonfinite - before,
            log_joint: self.state.log_joint(&self.hp),
        }
    }

    /// One pass at the scheduled temperature of the next sweep.
    pub fn sweep(&mut self) -> SweepStats {
        let t = self.hp.temperature(self.sweeps_done + 1);
        self.sweep_at(t)
    }

    /// Runs the remaining scheduled sweeps, reporting each one.
    pub fn run(&mut self, mut on_sweep: impl FnMut(&SweepStats)) {
        while self.sweeps_done < self.hp.iters {
            let stats = self.sweep();
            debug!(
                "sweep {} T={:.4e} acceptance={:.4} cdll={:.3}",
                stats.sweep,
                stats.temperature,
                stats.acceptance_rate(),
                stats.log_joint
            );
            on_sweep(&stats);
        }
    }

    /// Writes a JSON-lines checkpoint: a versioned header, the RNG state, the assignments,
    /// the three count tables and the cached proposal tables. The cache is part of the chain
    /// state because stale tables shape future proposals.
    pub fn write_checkpoint<W: Write>(&self, mut out: W) -> Result<()> {
        let header = CheckpointHeader {
            format: CHECKPOINT_FORMAT.into(),
            version: CHECKPOINT_VERSION,
            topics: self.state.num_topics(),
            vocab_size: self.state.vocab_size(),
            instances: self.instances.len(),
            sweeps_done: self.sweeps_done,
            nonfinite: self.nonfinite,
            hyperparams: self.hp.clone(),
        };
        let (word_topic, topic_word, topic_total) = self.state.raw_parts();
        let io = |e| Error::io("writing checkpoint", e);
        let lines = [
            serde_json::to_string(&header)?,
            serde_json::to_string(&serde_json::json!({ "rng": self.rng }))?,
            serde_json::to_string(&serde_json::json!({ "z": self.state.assignments() }))?,
            serde_json::to_string(&serde_json::json!({ "n_word_topic": word_topic }))?,
            serde_json::to_string(&serde_json::json!({ "n_topic_word": topic_word }))?,
            serde_json::to_string(&serde_json::json!({ "n_topic": topic_total }))?,
            serde_json::to_string(&serde_json::json!({ "alias_tables": self.tables }))?,
        ];
        for line in lines {
            writeln!(out, "{line}").map_err(io)?;
        }
        Ok(())
    }

    /// Restores a chain written by [`TopicChain::write_checkpoint`] over the same instances.
    /// Stored counts are checked against counts rebuilt from the assignments.
    pub fn from_checkpoint<R: BufRead>(instances: &'a [ContextInstance], input: R) -> Result<Self> {
        let mut lines = input.lines();
        let mut next = |name: &str| -> Result<serde_json::Value> {
            let line = lines
                .next()
                .ok_or_else(|| Error::Format(format!("checkpoint truncated before {name}")))?
                .map_err(|e| Error::io("reading checkpoint", e))?;
            Ok(serde_json::from_str(&line)?)
        };
        let header: CheckpointHeader = serde_json::from_value(next("header")?)?;
        if header.format != CHECKPOINT_FORMAT || header.version != CHECKPOINT_VERSION {
            return Err(Error::Format(format!(
                "expected {CHECKPOINT_FORMAT} v{CHECKPOINT_VERSION}, found {} v{}",
                header.format, header.version
            )));
        }
        if header.instances != instances.len() {
            return Err(Error::Format("checkpoint was written for different instances".into()));
        }
        let rng: ChaCha8Rng = serde_json::from_value(next("rng")?["rng"].take())?;
        let z: Vec<u32> = serde_json::from_value(next("z")?["z"].take())?;
        let word_topic: Vec<u32> = serde_json::from_value(next("counts")?["n_word_topic"].take())?;
        let topic_word: Vec<u32> = serde_json::from_value(next("counts")?["n_topic_word"].take())?;
        let topic_total: Vec<u64> = serde_json::from_value(next("counts")?["n_topic"].take())?;
        let tables: Vec<Option<AliasTable>> =
            serde_json::from_value(next("alias tables")?["alias_tables"].take())?;

        let mut chain = Self::with_assignments(instances, header.hyperparams, z, rng)?;
        if chain.state.raw_parts() != (&word_topic[..], &topic_word[..], &topic_total[..]) {
            return Err(Error::Format("checkpoint counts disagree with assignments".into()));
        }
        if tables.len() != chain.tables.len()
            || tables
                .iter()
                .flatten()
                .any(|t| !t.is_well_formed() || t.len() != chain.state.num_topics())
        {
            return Err(Error::Format("checkpoint alias tables have the wrong shape".into()));
        }
        chain.tables = tables;
        chain.sweeps_done = header.sweeps_done;
        chain.nonfinite = header.nonfinite;
        Ok(chain)
    }
}

fn table_for<'t>(
    tables: &'t mut [Option<AliasTable>],
    state: &CountState,
    hp: &Hyperparams,
    beta_sum: f64,
    word: WordId,
) -> &'t mut AliasTable {
    let slot = &mut tables[word as usize];
    if slot.as_ref().is_none_or(AliasTable::is_exhausted) {
        let beta = hp.beta[word as usize];
        let weights: Vec<f64> = (0..state.num_topics())
            .map(|k| (state.n_topic_word(k, word) as f64 + beta) / (state.n_topic(k) as f64 + beta_sum))
            .collect();
        *slot = Some(AliasTable::new(&weights).expect("positive beta gives positive weights"));
    }
    slot.as_mut().expect("table just built")
}

/// Runs the full annealing schedule from a uniform random initialization and returns the
/// final counts with the smoothed estimates.
pub fn run_chain(
    instances: &[ContextInstance],
    hp: &Hyperparams,
    seed: u64,
) -> Result<(CountState, MembershipEstimate)> {
    let mut chain = TopicChain::new(instances, hp.clone(), seed)?;
    chain.run(|s| {
        if s.sweep % 100 == 0 || s.sweep == hp.iters {
            info!(
                "anneal sweep {}/{} acceptance {:.4}",
                s.sweep,
                hp.iters,
                s.acceptance_rate()
            );
        }
    });
    let est = chain.estimate();
    Ok((chain.into_state(), est))
}
