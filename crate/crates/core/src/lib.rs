//! Mixed membership skip-gram word embeddings.
//!
//! Every dictionary word owns a distribution over shared topics, and every topic owns an
//! embedding. Training first imputes a topic for each token with an annealed
//! Metropolis-Hastings-Walker collapsed Gibbs sampler ([`topic`]), then fits topic vectors,
//! output word vectors and biases by noise-contrastive estimation ([`embed`]). The topic
//! model obtained by stopping after the first stage, and the plain skip-gram obtained by
//! giving every word its own topic, come out of the same code paths.

pub mod alias;
pub mod commands;
pub mod config;
pub mod corpus;
pub mod embed;
pub mod error;
pub mod eval;
pub mod inference;
pub mod math;
pub mod persist;
pub mod pipeline;
pub mod synthetic;
pub mod topic;

pub use config::RunConfig;
pub use error::{Error, Result};
pub use inference::{Mode, TokenQuery, TrainedModel};
