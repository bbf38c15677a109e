//! Low-resource relation classification with gradient-imitation
//! reinforcement learning.
//!
//! A pseudo-labeled sample is accepted into the labeled pool only when the
//! gradient it induces on the classifier points the same way as the mean
//! gradient of the labeled data. The policy is then trained with a
//! reward-weighted cross-entropy loss. When no unlabeled data exists, a
//! span-masking augmenter manufactures an unlabeled pool from the labeled
//! mentions.
//!
//! Module map:
//!
//! * [`data`]: mentions, label inventories, entity markers, splits,
//!   synthetic corpora and the line-delimited corpus format.
//! * [`model`]: the frozen hashed encoder, the softmax classifier head,
//!   cross-entropy and analytic per-sample gradients.
//! * [`girl`]: state, action, reward, state correction, episodes and the
//!   segment schedule, plus the plain self-training ablation.
//! * [`cda`]: truncated geometric span lengths, mask planning, fill models
//!   and pool augmentation.
//! * [`eval`]: no-relation-excluding F1, pseudo-label tracking, PCA of
//!   parameter trajectories and comparison reports.
//! * [`experiment`]: seeded experiment configuration and the runner the CLI
//!   drives.

pub mod cda;
pub mod data;
pub mod error;
pub mod eval;
pub mod experiment;
pub mod girl;
pub mod model;
pub mod rng;

pub use error::{Error, Result};
