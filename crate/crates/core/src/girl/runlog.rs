//! Run logs: one JSON record per episode, a sidecar of `θ` snapshots keyed
//! by `(segment, episode)`, and a summary with the final scores.

use std::fmt::Write as _;

use serde::{de::DeserializeOwned, Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::{F1Report, TrajectorySnapshot};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EpisodeRecord {
    pub segment: usize,
    pub episode: usize,
    pub mean_reward: f64,
    pub acceptance_rate: f64,
    pub labeled_size: usize,
    pub rl_loss: f64,
    pub test_f1: Option<f64>,
    pub pseudo_f1: Option<f64>,
}

/// What a run was: filled in by the experiment runner so reports can check
/// that compared runs share a preset and split.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunMeta {
    pub mode: String,
    pub preset: String,
    pub labeled_fraction: f64,
    pub unlabeled_fraction: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunLog {
    pub meta: RunMeta,
    pub pretrain_test: Option<F1Report>,
    pub final_test: Option<F1Report>,
    /// Over every accepted pseudo-label of the run, when gold is known.
    pub final_pseudo: Option<F1Report>,
    pub episodes: Vec<EpisodeRecord>,
    pub snapshots: Vec<TrajectorySnapshot>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSummary {
    pub meta: RunMeta,
    pub pretrain_test: Option<F1Report>,
    pub final_test: Option<F1Report>,
    pub final_pseudo: Option<F1Report>,
    pub episodes: usize,
}

impl RunLog {
    pub fn summary(&self) -> RunSummary {
        RunSummary {
            meta: self.meta.clone(),
            pretrain_test: self.pretrain_test,
            final_test: self.final_test,
            final_pseudo: self.final_pseudo,
            episodes: self.episodes.len(),
        }
    }

    /// Rebuilds a log from its three files' contents.
    pub fn from_parts(
        summary: RunSummary,
        episodes: Vec<EpisodeRecord>,
        snapshots: Vec<TrajectorySnapshot>,
    ) -> Result<Self> {
        if summary.episodes != episodes.len() {
            return Err(Error::IncompatibleRuns(format!(
                "summary lists {} episodes, log has {}",
                summary.episodes,
                episodes.len()
            )));
        }
        Ok(RunLog {
            meta: summary.meta,
            pretrain_test: summary.pretrain_test,
            final_test: summary.final_test,
            final_pseudo: summary.final_pseudo,
            episodes,
            snapshots,
        })
    }
}

fn render_lines<T: Serialize>(items: &[T]) -> String {
    let mut out = String::new();
    for item in items {
        let _ = writeln!(out, "{}", serde_json::to_string(item).expect("record serializes"));
    }
    out
}

fn parse_lines<T: DeserializeOwned>(text: &str) -> Result<Vec<T>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).map_err(|e| Error::parse(i + 1, e.to_string())))
        .collect()
}

pub fn render_runlog(episodes: &[EpisodeRecord]) -> String {
    render_lines(episodes)
}

pub fn parse_runlog(text: &str) -> Result<Vec<EpisodeRecord>> {
    parse_lines(text)
}

pub fn render_snapshots(snapshots: &[TrajectorySnapshot]) -> String {
    render_lines(snapshots)
}

pub fn parse_snapshots(text: &str) -> Result<Vec<TrajectorySnapshot>> {
    parse_lines(text)
}

pub fn render_summary(summary: &RunSummary) -> String {
    let mut s = serde_json::to_string_pretty(summary).expect("summary serializes");
    s.push('\n');
    s
}

pub fn parse_summary(text: &str) -> Result<RunSummary> {
    serde_json::from_str(text).map_err(|e| Error::parse(e.line(), e.to_string()))
}
