//! The segment schedule around [`run_episode`](super::run_episode).

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{
    run_episode, run_self_training_episode, EpisodeReport, GirlConfig, GirlState, GlRecompute,
    PseudoSample, UnlabeledItem,
};
use crate::data::Corpus;
use crate::error::{Error, Result};
use crate::eval::{evaluate, pseudo_label_f1, F1Report, TrajectorySnapshot};
use crate::girl::{EpisodeRecord, RunLog, RunMeta};
use crate::model::{
    encode_corpus, labeled_encodings, pretrain, Architecture, EncoderConfig, LabeledEncoding,
    PolicyParameters, SgdConfig,
};
use crate::rng;

/// Encoder settings plus the width of the optional hidden layer.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub encoder: EncoderConfig,
    pub hidden_dim: usize,
}

impl ModelConfig {
    pub fn architecture(&self, num_labels: usize) -> Architecture {
        Architecture {
            num_labels,
            input_dim: self.encoder.output_dim(),
            hidden_dim: self.hidden_dim,
        }
    }
}

/// Evaluation hooks. Training never reads gold labels of the unlabeled
/// pool; when `track_pseudo` is set they are handed to the scorer only.
#[derive(Debug, Clone, Copy, Default)]
pub struct Monitor<'a> {
    pub test: Option<&'a Corpus>,
    pub track_pseudo: bool,
}

#[derive(Clone, Copy, PartialEq)]
enum Mode {
    Girl,
    SelfTraining,
}

/// Pretrains on `labeled`, then consumes the shuffled unlabeled pool in
/// `segments` slices of episodes of `episode_len` items.
pub fn train(
    labeled: &Corpus,
    unlabeled: &Corpus,
    cfg: &GirlConfig,
    sgd: &SgdConfig,
    model: &ModelConfig,
    monitor: Monitor<'_>,
) -> Result<(PolicyParameters, RunLog)> {
    run(labeled, unlabeled, cfg, sgd, model, monitor, Mode::Girl)
}

/// The same pipeline without the reward: every pseudo-label is kept and
/// the update is unweighted cross-entropy on each batch.
pub fn train_self_training_ablation(
    labeled: &Corpus,
    unlabeled: &Corpus,
    cfg: &GirlConfig,
    sgd: &SgdConfig,
    model: &ModelConfig,
    monitor: Monitor<'_>,
) -> Result<(PolicyParameters, RunLog)> {
    run(labeled, unlabeled, cfg, sgd, model, monitor, Mode::SelfTraining)
}

/// Near-equal contiguous slices; the first `n % parts` get one extra item.
fn segment_bounds(n: usize, parts: usize) -> Vec<std::ops::Range<usize>> {
    let (base, extra) = (n / parts, n % parts);
    let mut start = 0;
    (0..parts)
        .map(|i| {
            let len = base + usize::from(i < extra);
            let r = start..start + len;
            start += len;
            r
        })
        .collect()
}

fn run(
    labeled: &Corpus,
    unlabeled: &Corpus,
    cfg: &GirlConfig,
    sgd: &SgdConfig,
    model: &ModelConfig,
    monitor: Monitor<'_>,
    mode: Mode,
) -> Result<(PolicyParameters, RunLog)> {
    cfg.validate()?;
    model.encoder.validate()?;
    if labeled.inventory() != unlabeled.inventory() {
        return Err(Error::InvalidInventory(
            "labeled and unlabeled corpora use different inventories".into(),
        ));
    }
    let inventory = labeled.inventory();
    let labeled_enc = labeled_encodings(labeled, &model.encoder)?;
    if labeled_enc.is_empty() {
        return Err(Error::EmptyLabeledSet);
    }
    let test_enc: Option<Vec<LabeledEncoding>> = monitor
        .test
        .map(|t| labeled_encodings(t, &model.encoder))
        .transpose()?;
    let test_f1 = |p: &PolicyParameters| -> Result<Option<F1Report>> {
        match &test_enc {
            Some(t) if !t.is_empty() => evaluate(p, t, inventory).map(Some),
            _ => Ok(None),
        }
    };
    let hidden_gold = monitor.track_pseudo.then(|| unlabeled.gold_labels());

    let init = PolicyParameters::init(model.architecture(inventory.len()), sgd.seed);
    let pretrained = pretrain(&init, &labeled_enc, sgd);
    let mut log = RunLog {
        meta: RunMeta {
            mode: match mode {
                Mode::Girl => "gradlre",
                Mode::SelfTraining => "self-train",
            }
            .into(),
            ..Default::default()
        },
        pretrain_test: test_f1(&pretrained)?,
        ..Default::default()
    };

    let mut state = GirlState::new(pretrained, labeled_enc)?;
    let items: Vec<UnlabeledItem> = encode_corpus(unlabeled, &model.encoder)
        .into_iter()
        .enumerate()
        .map(|(source, encoding)| UnlabeledItem { source, encoding })
        .collect();
    let mut order: Vec<usize> = (0..items.len()).collect();
    order.shuffle(&mut rng::seeded(rng::derive(cfg.seed, "unlabeled-order", 0)));

    let mut accepted: Vec<PseudoSample> = Vec::new();
    for (segment, range) in segment_bounds(order.len(), cfg.segments).into_iter().enumerate() {
        for (episode, chunk) in order[range].chunks(cfg.episode_len).enumerate() {
            let batch: Vec<UnlabeledItem> = chunk.iter().map(|&i| items[i].clone()).collect();
            let report: EpisodeReport;
            (state, report) = match mode {
                Mode::Girl => run_episode(state, &batch, cfg)?,
                Mode::SelfTraining => run_self_training_episode(state, &batch, cfg)?,
            };
            accepted.extend(report.steps.iter().map(|s| s.sample).filter(|s| s.accepted));
            let pseudo = match &hidden_gold {
                Some(gold) if !accepted.is_empty() => {
                    Some(pseudo_label_f1(&accepted, gold, inventory)?.f1)
                }
                _ => None,
            };
            log.episodes.push(EpisodeRecord {
                segment,
                episode,
                mean_reward: report.mean_reward,
                acceptance_rate: report.acceptance_rate,
                labeled_size: state.labeled().len(),
                rl_loss: report.rl_loss,
                test_f1: test_f1(state.params())?.map(|r| r.f1),
                pseudo_f1: pseudo,
            });
            log.snapshots.push(TrajectorySnapshot {
                segment,
                episode,
                theta: state.params().as_slice().to_vec(),
            });
        }
        if cfg.gl_recompute == GlRecompute::PerSegment {
            state.recompute_gl()?;
        }
    }

    log.final_test = test_f1(state.params())?;
    log.final_pseudo = match &hidden_gold {
        Some(gold) if !accepted.is_empty() => Some(pseudo_label_f1(&accepted, gold, inventory)?),
        _ => None,
    };
    Ok((state.into_params(), log))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn segment_bounds_cover() {
        let b = segment_bounds(23, 10);
        assert_eq!(b.len(), 10);
        assert_eq!(b[0], 0..3);
        assert_eq!(b[2], 6..9);
        assert_eq!(b[3], 9..11);
        assert_eq!(b[9].end, 23);
        assert!(segment_bounds(0, 3).iter().all(|r| r.is_empty()));
    }
}
