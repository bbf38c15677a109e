//! Gradient-imitation reinforcement learning.
//!
//! The policy is the classifier head. At each step it pseudo-labels one
//! unlabeled mention (the action); the reward is the cosine between that
//! sample's loss gradient `g_p` and the standard direction `g_l`, the mean
//! gradient over the labeled set. A sample whose reward exceeds `λ` joins
//! the labeled set and folds its gradient into `g_l` as a running mean.
//! After `T` steps the head takes one SGD step on `Σ_t R_t · loss_t`, with
//! each reward held constant.

mod runlog;
mod train;

use serde::{Deserialize, Serialize};

use crate::data::LabelId;
use crate::error::{Error, Result};
use crate::model::{
    loss_and_grad, mean_labeled_gradient, predict, GradientVector, LabeledEncoding,
    PolicyParameters, RelationalEncoding,
};

pub use runlog::{
    parse_runlog, parse_snapshots, parse_summary, render_runlog, render_snapshots,
    render_summary, EpisodeRecord, RunLog, RunMeta, RunSummary,
};
pub use train::{train, train_self_training_ablation, ModelConfig, Monitor};

/// Norm below which a gradient counts as zero for the reward.
pub const ZERO_GRADIENT_NORM: f64 = 1e-15;

/// When the standard direction is recomputed from scratch over the current
/// labeled set at the current parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GlRecompute {
    PerEpisode,
    PerSegment,
    Never,
}

/// Which steps of an episode enter the reward-weighted loss.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LossScope {
    All,
    Accepted,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GirlConfig {
    /// Acceptance threshold: a sample is accepted when its reward is
    /// strictly greater.
    pub lambda: f64,
    /// Steps per episode (one parameter update each).
    pub episode_len: usize,
    /// Number of slices the unlabeled pool is consumed in.
    pub segments: usize,
    pub rl_step_size: f64,
    pub gl_recompute: GlRecompute,
    pub loss_scope: LossScope,
    pub seed: u64,
}

impl Default for GirlConfig {
    fn default() -> Self {
        GirlConfig {
            lambda: 0.5,
            episode_len: 16,
            segments: 10,
            rl_step_size: 0.01,
            gl_recompute: GlRecompute::PerEpisode,
            loss_scope: LossScope::All,
            seed: 0,
        }
    }
}

impl GirlConfig {
    pub fn validate(&self) -> Result<()> {
        if !(-1.0..=1.0).contains(&self.lambda) {
            return Err(Error::InvalidConfig(format!(
                "lambda {} outside [-1, 1]",
                self.lambda
            )));
        }
        if self.episode_len == 0 || self.segments == 0 {
            return Err(Error::InvalidConfig(
                "episode_len and segments must be at least 1".into(),
            ));
        }
        if !self.rl_step_size.is_finite() {
            return Err(Error::InvalidConfig("rl_step_size must be finite".into()));
        }
        Ok(())
    }
}

/// One unlabeled mention as the policy sees it: its index in the pool and
/// its cached encoding. No gold label.
#[derive(Debug, Clone, PartialEq)]
pub struct UnlabeledItem {
    pub source: usize,
    pub encoding: RelationalEncoding,
}

/// The outcome of one action.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PseudoSample {
    /// Index of the mention in the unlabeled pool.
    pub source: usize,
    pub y_tilde: LabelId,
    pub reward: f64,
    pub accepted: bool,
}

/// The labeled set `D_l`, the count `N` behind the running mean, the
/// standard direction `g_l` and the policy parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct GirlState {
    labeled: Vec<LabeledEncoding>,
    n_effective: usize,
    g_l: GradientVector,
    params: PolicyParameters,
}

impl GirlState {
    /// Starts with `g_l` as the mean gradient over `labeled` at `params`.
    pub fn new(params: PolicyParameters, labeled: Vec<LabeledEncoding>) -> Result<Self> {
        let g_l = mean_labeled_gradient(&params, &labeled)?;
        Ok(GirlState {
            n_effective: labeled.len(),
            labeled,
            g_l,
            params,
        })
    }

    /// Builds a state from explicit parts, for replaying a known `g_l`.
    pub fn from_parts(
        params: PolicyParameters,
        labeled: Vec<LabeledEncoding>,
        g_l: GradientVector,
        n_effective: usize,
    ) -> Result<Self> {
        if g_l.len() != params.len() {
            return Err(Error::LengthMismatch {
                left: params.len(),
                right: g_l.len(),
            });
        }
        Ok(GirlState {
            labeled,
            n_effective,
            g_l,
            params,
        })
    }

    pub fn labeled(&self) -> &[LabeledEncoding] {
        &self.labeled
    }

    pub fn n_effective(&self) -> usize {
        self.n_effective
    }

    pub fn g_l(&self) -> &GradientVector {
        &self.g_l
    }

    pub fn params(&self) -> &PolicyParameters {
        &self.params
    }

    pub fn into_params(self) -> PolicyParameters {
        self.params
    }

    /// Recomputes `g_l` over all of `D_l` at the current parameters and
    /// resets `N` to `|D_l|`.
    pub fn recompute_gl(&mut self) -> Result<()> {
        self.g_l = mean_labeled_gradient(&self.params, &self.labeled)?;
        self.n_effective = self.labeled.len();
        Ok(())
    }
}

/// Pseudo-label: the most probable relation, ties to the lowest id.
pub fn act(state: &GirlState, x: &RelationalEncoding) -> LabelId {
    predict(&state.params, x)
}

/// Cosine similarity of `g_l` and `g_p`, or 0 when either is numerically
/// zero. Clamped to `[-1, 1]` against rounding.
pub fn reward(g_l: &GradientVector, g_p: &GradientVector) -> Result<f64> {
    let dot = g_l.dot(g_p)?;
    let (a, b) = (g_l.norm(), g_p.norm());
    if a < ZERO_GRADIENT_NORM || b < ZERO_GRADIENT_NORM {
        return Ok(0.0);
    }
    Ok((dot / (a * b)).clamp(-1.0, 1.0))
}

/// Adds an accepted sample to `D_l` and folds its gradient into the
/// running mean: `g_l ← (N g_l + g_p) / (N + 1)`, `N ← N + 1`.
pub fn correct_state(
    mut state: GirlState,
    x: &RelationalEncoding,
    sample: &PseudoSample,
    g_p: &GradientVector,
    lambda: f64,
) -> Result<GirlState> {
    // Written negated so a NaN reward is rejected too.
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    if !(sample.reward > lambda) {
        return Err(Error::RejectedSample {
            reward: sample.reward,
            lambda,
        });
    }
    if g_p.len() != state.g_l.len() {
        return Err(Error::LengthMismatch {
            left: state.g_l.len(),
            right: g_p.len(),
        });
    }
    let n = state.n_effective as f64;
    for (g, p) in state.g_l.as_mut_slice().iter_mut().zip(g_p.as_slice()) {
        *g = (n * *g + p) / (n + 1.0);
    }
    state.n_effective += 1;
    state.labeled.push((x.clone(), sample.y_tilde));
    Ok(state)
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub sample: PseudoSample,
    pub loss: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeReport {
    pub steps: Vec<StepRecord>,
    pub mean_reward: f64,
    pub acceptance_rate: f64,
    /// `Σ_t w_t · loss_t` at the pre-update parameters, where `w_t` is the
    /// reward (or 0 for rejected steps under [`LossScope::Accepted`]).
    pub rl_loss: f64,
}

impl EpisodeReport {
    fn from_steps(steps: Vec<StepRecord>, rl_loss: f64) -> Self {
        let n = steps.len() as f64;
        let mean_reward = steps.iter().map(|s| s.sample.reward).sum::<f64>() / n;
        let acceptance_rate = steps.iter().filter(|s| s.sample.accepted).count() as f64 / n;
        EpisodeReport {
            steps,
            mean_reward,
            acceptance_rate,
            rl_loss,
        }
    }
}

fn check_batch(batch: &[UnlabeledItem], cfg: &GirlConfig) -> Result<()> {
    if batch.is_empty() {
        return Err(Error::EmptyBatch);
    }
    if batch.len() > cfg.episode_len {
        return Err(Error::InvalidConfig(format!(
            "batch of {} exceeds episode length {}",
            batch.len(),
            cfg.episode_len
        )));
    }
    Ok(())
}

/// One episode over `batch` (at most `T` items).
///
/// The parameters stay fixed during the steps, so every action and every
/// `g_p` is taken at the pre-update `θ`; the state corrections of accepted
/// samples apply immediately and later steps are rewarded against the
/// corrected `g_l`. The single update is
/// `θ ← θ - step · Σ_t w_t ∇θ loss_t`.
pub fn run_episode(
    mut state: GirlState,
    batch: &[UnlabeledItem],
    cfg: &GirlConfig,
) -> Result<(GirlState, EpisodeReport)> {
    check_batch(batch, cfg)?;
    if cfg.gl_recompute == GlRecompute::PerEpisode {
        state.recompute_gl()?;
    }
    let mut update = GradientVector::zeros(state.params.len());
    let mut rl_loss = 0.0;
    let mut steps = Vec::with_capacity(batch.len());
    for item in batch {
        let y_tilde = act(&state, &item.encoding);
        let (loss, g_p) = loss_and_grad(&state.params, &item.encoding, y_tilde);
        let r = reward(&state.g_l, &g_p)?;
        let sample = PseudoSample {
            source: item.source,
            y_tilde,
            reward: r,
            accepted: r > cfg.lambda,
        };
        if sample.accepted {
            state = correct_state(state, &item.encoding, &sample, &g_p, cfg.lambda)?;
        }
        let weight = match cfg.loss_scope {
            LossScope::All => r,
            LossScope::Accepted if sample.accepted => r,
            LossScope::Accepted => 0.0,
        };
        rl_loss += weight * loss;
        update.add_scaled(weight, &g_p)?;
        steps.push(StepRecord { sample, loss });
    }
    state.params = state.params.descend(&update, cfg.rl_step_size)?;
    Ok((state, EpisodeReport::from_steps(steps, rl_loss)))
}

/// Self-training counterpart of [`run_episode`]: every pseudo-label is
/// added to `D_l` and the update is plain cross-entropy with weight 1.
/// `g_l` is left untouched; rewards are reported as the constant weight 1.
pub fn run_self_training_episode(
    mut state: GirlState,
    batch: &[UnlabeledItem],
    cfg: &GirlConfig,
) -> Result<(GirlState, EpisodeReport)> {
    check_batch(batch, cfg)?;
    let mut update = GradientVector::zeros(state.params.len());
    let mut rl_loss = 0.0;
    let mut steps = Vec::with_capacity(batch.len());
    for item in batch {
        let y_tilde = act(&state, &item.encoding);
        let (loss, g) = loss_and_grad(&state.params, &item.encoding, y_tilde);
        update.add_scaled(1.0, &g)?;
        rl_loss += loss;
        state.labeled.push((item.encoding.clone(), y_tilde));
        state.n_effective += 1;
        steps.push(StepRecord {
            sample: PseudoSample {
                source: item.source,
                y_tilde,
                reward: 1.0,
                accepted: true,
            },
            loss,
        });
    }
    state.params = state.params.descend(&update, cfg.rl_step_size)?;
    Ok((state, EpisodeReport::from_steps(steps, rl_loss)))
}
