//! Training end to end: impute topics with the annealed chain (or the degenerate one topic
//! per word assignment), then fit vectors by NCE when the mode needs them.

use log::info;

use crate::config::RunConfig;
use crate::corpus::{ContextInstance, Vocabulary};
use crate::embed::{train_embeddings, TrainLogRow};
use crate::error::{Error, Result};
use crate::inference::{Membership, Mode, TrainedModel};
use crate::persist::{ChainSummary, TrainingSummary};
use crate::topic::{degenerate_phi, SweepStats, TopicChain};

#[derive(Debug)]
pub struct TrainOutput {
    pub model: TrainedModel,
    /// Final topic of every training instance.
    pub z_hat: Vec<u32>,
    pub summary: TrainingSummary,
    pub anneal_log: Vec<SweepStats>,
    pub nce_log: Vec<TrainLogRow>,
    /// Final chain state in the checkpoint format, for the non-degenerate modes.
    pub checkpoint: Option<Vec<u8>>,
}

impl TrainOutput {
    pub fn anneal_tsv(&self) -> Vec<u8> {
        let mut s = String::from(SweepStats::TSV_HEADER);
        s.push('\n');
        for row in &self.anneal_log {
            s.push_str(&row.tsv_row());
            s.push('\n');
        }
        s.into_bytes()
    }

    pub fn nce_tsv(&self) -> Vec<u8> {
        let mut s = String::from(TrainLogRow::TSV_HEADER);
        s.push('\n');
        for row in &self.nce_log {
            s.push_str(&row.tsv_row());
            s.push('\n');
        }
        s.into_bytes()
    }

    /// Logs and checkpoint as named files for the model directory.
    pub fn extra_files(&self) -> Vec<(&'static str, Vec<u8>)> {
        let mut files = Vec::new();
        if let Some(cp) = &self.checkpoint {
            files.push(("chain.jsonl", cp.clone()));
            files.push(("anneal.tsv", self.anneal_tsv()));
        }
        if self.model.embeddings().is_some() {
            files.push(("nce.tsv", self.nce_tsv()));
        }
        files
    }
}

/// Trains a model of `cfg.mode` on `instances`, whose ids index `vocab`.
pub fn train_model(cfg: &RunConfig, vocab: Vocabulary, instances: &[ContextInstance]) -> Result<TrainOutput> {
    cfg.validate()?;
    if instances.is_empty() {
        return Err(Error::NoInstances);
    }
    let d = vocab.len();
    if let Some(bad) = instances
        .iter()
        .find(|i| i.input as usize >= d || i.context.iter().any(|&c| c as usize >= d))
    {
        return Err(Error::Format(format!(
            "instance at position {} refers to ids outside the vocabulary",
            bad.position
        )));
    }
    let k = cfg.effective_topics(d);
    let hp = cfg.hyperparams(d);
    let mut summary = TrainingSummary {
        instances: instances.len(),
        context_tokens: instances.iter().map(|i| i.context.len()).sum(),
        ..TrainingSummary::default()
    };
    info!(
        "training {} on {} instances, D = {d}, K = {k}",
        cfg.mode,
        instances.len()
    );

    let mut anneal_log = Vec::new();
    let mut checkpoint = None;
    let (theta, phi, z_hat) = if cfg.mode.is_degenerate() {
        let phi = (cfg.mode == Mode::Sgtm).then(|| degenerate_phi(instances, d, &hp.beta));
        let z = instances.iter().map(|i| i.input).collect();
        (Membership::OneHot { vocab_size: d }, phi, z)
    } else {
        let mut chain = TopicChain::new(instances, hp.clone(), cfg.chain_seed)?;
        chain.run(|s| {
            if s.sweep % 100 == 0 || s.sweep == hp.iters {
                info!(
                    "anneal sweep {}/{} T = {:.3e} acceptance {:.4} log joint {:.1}",
                    s.sweep,
                    hp.iters,
                    s.temperature,
                    s.acceptance_rate(),
                    s.log_joint
                );
            }
            anneal_log.push(s.clone());
        });
        let mut buf = Vec::new();
        chain.write_checkpoint(&mut buf)?;
        checkpoint = Some(buf);
        summary.chain = Some(ChainSummary {
            sweeps: chain.sweeps_done(),
            final_temperature: anneal_log.last().map_or(0.0, |s| s.temperature),
            final_acceptance: anneal_log.last().map_or(0.0, |s| s.acceptance_rate()),
            final_log_joint: chain.state().log_joint(&hp),
            nonfinite: chain.nonfinite(),
        });
        let est = chain.estimate();
        let z = chain.state().assignments().to_vec();
        (Membership::Dense(est.theta), Some(est.phi), z)
    };

    let mut nce_log = Vec::new();
    let embeddings = if cfg.mode.uses_embeddings() {
        let (es, nce) = train_embeddings(instances, &z_hat, k, vocab.counts(), &cfg.train_config(), |row| {
            nce_log.push(row.clone())
        })?;
        if nce.skipped_pairs > 0 {
            log::warn!("{} NCE pairs had non-finite logits and were skipped", nce.skipped_pairs);
        }
        summary.nce = Some(nce);
        Some(es)
    } else {
        None
    };

    let model = TrainedModel::new(vocab, cfg.mode, theta, phi, embeddings)?;
    Ok(TrainOutput {
        model,
        z_hat,
        summary,
        anneal_log,
        nce_log,
        checkpoint,
    })
}
