//! Run configuration: defaults, a flat `key = value` file format and per-key overrides.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::DocumentSplit;
use crate::embed::TrainConfig;
use crate::error::{Error, Result};
use crate::inference::Mode;
use crate::topic::Hyperparams;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub mode: Mode,
    /// Topics; ignored by the degenerate modes, which use one topic per word.
    pub topics: usize,
    pub dim: usize,
    pub window: usize,
    pub min_count: u64,
    pub lowercase: bool,
    pub split: DocumentSplit,
    /// Symmetric Dirichlet over topics; `None` means `50 / K`.
    pub alpha: Option<f64>,
    pub beta: f64,
    pub t0: f64,
    pub kappa: f64,
    /// Initial temperature offset; `None` means `2 * window`.
    pub lambda: Option<f64>,
    pub iters: usize,
    pub proposals_per_token: usize,
    pub noise_samples: usize,
    pub noise_exponent: f64,
    pub minibatch: usize,
    pub steps: usize,
    pub learning_rate: f64,
    pub min_learning_rate: f64,
    pub heldout: usize,
    pub split_seed: u64,
    pub chain_seed: u64,
    pub nce_seed: u64,
    pub threads: usize,
    pub log_every: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            mode: Mode::Mmsg,
            topics: 100,
            dim: 128,
            window: 5,
            min_count: 5,
            lowercase: true,
            split: DocumentSplit::PerFile,
            alpha: None,
            beta: 0.01,
            t0: 1e-4,
            kappa: 0.99,
            lambda: None,
            iters: 1000,
            proposals_per_token: 1,
            noise_samples: 5,
            noise_exponent: 1.0,
            minibatch: 128,
            steps: 1_000_000,
            learning_rate: 0.025,
            min_learning_rate: 1e-4,
            heldout: 10_000,
            split_seed: 1,
            chain_seed: 2,
            nce_seed: 3,
            threads: 1,
            log_every: 10_000,
        }
    }
}

/// Every recognized key with a one-line description, in file order.
pub const KEYS: &[(&str, &str)] = &[
    ("mode", "mmsg | mmsgtm | sg | sgtm"),
    ("topics", "number of topics K (degenerate modes use K = D)"),
    ("dim", "embedding dimension"),
    ("window", "context words on each side of the input word"),
    ("min_count", "drop tokens rarer than this"),
    ("lowercase", "lowercase tokens before counting"),
    ("split", "document boundaries: file | blank"),
    ("alpha", "symmetric prior over topics, or `auto` for 50/K"),
    ("beta", "symmetric prior over words"),
    ("t0", "final annealing temperature"),
    ("kappa", "geometric decay of the temperature offset"),
    ("lambda", "initial temperature offset, or `auto` for 2 * window"),
    ("iters", "annealing sweeps"),
    ("proposals_per_token", "Metropolis-Hastings proposals per token per sweep"),
    ("noise_samples", "noise words per data word"),
    ("noise_exponent", "noise distribution is unigram counts to this power"),
    ("minibatch", "(topic, context word) pairs per NCE step"),
    ("steps", "NCE minibatches"),
    ("learning_rate", "initial NCE step size"),
    ("min_learning_rate", "step size reached by linear decay"),
    ("heldout", "held-out pairs drawn by `split`"),
    ("split_seed", "seed for held-out sampling"),
    ("chain_seed", "seed for the annealed chain"),
    ("nce_seed", "seed for NCE initialization, shuffling and noise"),
    ("threads", "worker threads; 1 keeps every stage bit-reproducible"),
    ("log_every", "NCE steps between training log rows"),
];

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    value
        .parse()
        .map_err(|e: T::Err| Error::config(key, format!("cannot parse `{value}`: {e}")))
}

fn parse_auto(key: &str, value: &str) -> Result<Option<f64>> {
    if value.eq_ignore_ascii_case("auto") {
        Ok(None)
    } else {
        parse(key, value).map(Some)
    }
}

impl RunConfig {
    /// Sets one key from its textual value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        match key.trim() {
            "mode" => self.mode = v.parse()?,
            "topics" => self.topics = parse(key, v)?,
            "dim" => self.dim = parse(key, v)?,
            "window" => self.window = parse(key, v)?,
            "min_count" => self.min_count = parse(key, v)?,
            "lowercase" => self.lowercase = parse(key, v)?,
            "split" => self.split = v.parse()?,
            "alpha" => self.alpha = parse_auto(key, v)?,
            "beta" => self.beta = parse(key, v)?,
            "t0" => self.t0 = parse(key, v)?,
            "kappa" => self.kappa = parse(key, v)?,
            "lambda" => self.lambda = parse_auto(key, v)?,
            "iters" => self.iters = parse(key, v)?,
            "proposals_per_token" => self.proposals_per_token = parse(key, v)?,
            "noise_samples" => self.noise_samples = parse(key, v)?,
            "noise_exponent" => self.noise_exponent = parse(key, v)?,
            "minibatch" => self.minibatch = parse(key, v)?,
            "steps" => self.steps = parse(key, v)?,
            "learning_rate" => self.learning_rate = parse(key, v)?,
            "min_learning_rate" => self.min_learning_rate = parse(key, v)?,
            "heldout" => self.heldout = parse(key, v)?,
            "split_seed" => self.split_seed = parse(key, v)?,
            "chain_seed" => self.chain_seed = parse(key, v)?,
            "nce_seed" => self.nce_seed = parse(key, v)?,
            "threads" => self.threads = parse(key, v)?,
            "log_every" => self.log_every = parse(key, v)?,
            other => return Err(Error::config(other, "unknown configuration key")),
        }
        Ok(())
    }

    /// Parses `key = value` lines; blank lines and `#` comments are ignored.
    pub fn parse_str(text: &str) -> Result<Self> {
        let mut cfg = RunConfig::default();
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::config(format!("line {}", n + 1), "expected `key = value`"))?;
            cfg.set(k, v)?;
        }
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::io(format!("reading config {}", path.display()), e))?;
        Self::parse_str(&text)
    }

    /// The configuration in the file format, with every key spelled out.
    pub fn to_file_string(&self) -> String {
        let auto = |x: Option<f64>| x.map_or("auto".to_string(), |v| v.to_string());
        let values = [
            self.mode.to_string(),
            self.topics.to_string(),
            self.dim.to_string(),
            self.window.to_string(),
            self.min_count.to_string(),
            self.lowercase.to_string(),
            self.split.to_string(),
            auto(self.alpha),
            self.beta.to_string(),
            self.t0.to_string(),
            self.kappa.to_string(),
            auto(self.lambda),
            self.iters.to_string(),
            self.proposals_per_token.to_string(),
            self.noise_samples.to_string(),
            self.noise_exponent.to_string(),
            self.minibatch.to_string(),
            self.steps.to_string(),
            self.learning_rate.to_string(),
            self.min_learning_rate.to_string(),
            self.heldout.to_string(),
            self.split_seed.to_string(),
            self.chain_seed.to_string(),
            self.nce_seed.to_string(),
            self.threads.to_string(),
            self.log_every.to_string(),
        ];
        let mut out = String::new();
        for ((key, help), value) in KEYS.iter().zip(values) {
            let _ = writeln!(out, "# {help}\n{key} = {value}");
        }
        out
    }

    /// Number of topics for a dictionary of size `d`.
    pub fn effective_topics(&self, d: usize) -> usize {
        if self.mode.is_degenerate() {
            d
        } else {
            self.topics
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |field: &str, x: f64| {
            if x > 0.0 && x.is_finite() {
                Ok(())
            } else {
                Err(Error::config(field, format!("must be positive and finite, got {x}")))
            }
        };
        if self.topics == 0 {
            return Err(Error::config("topics", "must be at least 1"));
        }
        if self.window == 0 {
            return Err(Error::config("window", "must be at least 1"));
        }
        if self.min_count == 0 {
            return Err(Error::config("min_count", "must be at least 1"));
        }
        if let Some(a) = self.alpha {
            positive("alpha", a)?;
        }
        positive("beta", self.beta)?;
        positive("t0", self.t0)?;
        if !(self.kappa > 0.0 && self.kappa <= 1.0) {
            return Err(Error::config("kappa", "must lie in (0, 1]"));
        }
        if let Some(l) = self.lambda {
            if !(l >= 0.0 && l.is_finite()) {
                return Err(Error::config("lambda", "must be non-negative and finite"));
            }
        }
        if self.proposals_per_token == 0 {
            return Err(Error::config("proposals_per_token", "must be at least 1"));
        }
        self.train_config().validate()
    }

    pub fn hyperparams(&self, d: usize) -> Hyperparams {
        let k = self.effective_topics(d);
        Hyperparams {
            alpha: vec![self.alpha.unwrap_or(50.0 / k as f64); k],
            beta: vec![self.beta; d],
            t0: self.t0,
            kappa: self.kappa,
            lambda: self.lambda.unwrap_or((2 * self.window) as f64),
            iters: self.iters,
            proposals_per_token: self.proposals_per_token,
        }
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            dim: self.dim,
            noise_samples: self.noise_samples,
            noise_exponent: self.noise_exponent,
            minibatch: self.minibatch,
            steps: self.steps,
            learning_rate: self.learning_rate,
            min_learning_rate: self.min_learning_rate,
            seed: self.nce_seed,
            threads: self.threads,
            log_every: self.log_every,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_follow_reference_settings() {
        let c = RunConfig::default();
        assert_eq!((c.dim, c.minibatch, c.iters, c.steps), (128, 128, 1000, 1_000_000));
        let hp = c.hyperparams(50);
        assert_eq!(hp.alpha, vec![0.5; 100]);
        assert_eq!(hp.lambda, 10.0);
        c.validate().unwrap();
    }

    #[test]
    fn file_round_trip() {
        let mut c = RunConfig::default();
        c.set("mode", "sgtm").unwrap();
        c.set("alpha", "0.3").unwrap();
        c.set("split", "blank").unwrap();
        let back = RunConfig::parse_str(&c.to_file_string()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn comments_and_errors() {
        let c = RunConfig::parse_str("# hi\n\ntopics = 7 # inline\n").unwrap();
        assert_eq!(c.topics, 7);
        let err = RunConfig::parse_str("topics = seven").unwrap_err();
        assert!(err.to_string().contains("topics"));
        assert!(RunConfig::parse_str("bogus = 1").is_err());
        assert!(RunConfig::parse_str("just words").is_err());
        let mut c = RunConfig::default();
        c.kappa = 1.5;
        assert!(c.validate().unwrap_err().to_string().contains("kappa"));
    }

    #[test]
    fn degenerate_modes_use_vocabulary_size() {
        let mut c = RunConfig::default();
        c.mode = Mode::Sg;
        assert_eq!(c.effective_topics(42), 42);
        assert_eq!(c.hyperparams(42).alpha.len(), 42);
    }
}
