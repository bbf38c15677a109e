//! Span-masking augmentation: mask random spans outside the entities and
//! let a fill model rewrite them, producing new unlabeled mentions from
//! labeled ones.

mod ngram;

use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::data::{Corpus, RelationMention, Span};
use crate::error::{Error, Result};
use crate::rng::{self, Rng};

pub use ngram::{NgramFillModel, BOS, NGRAM_INTERPOLATION, NGRAM_SMOOTHING};

/// Placeholder written at masked positions before filling.
pub const MASK: &str = "[MASK]";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpanSamplerConfig {
    /// Share of maskable tokens (those outside both entities) that may be
    /// masked per mention, rounded up to a whole token.
    pub budget_fraction: f64,
    /// Success probability of the geometric span-length distribution.
    pub geo_p: f64,
    pub min_len: usize,
    pub max_len: usize,
    /// Start positions tried per span before falling back to `min_len`.
    pub max_attempts: usize,
    pub seed: u64,
}

impl Default for SpanSamplerConfig {
    fn default() -> Self {
        SpanSamplerConfig {
            budget_fraction: 0.15,
            geo_p: 0.2,
            min_len: 1,
            max_len: 10,
            max_attempts: 30,
            seed: 0,
        }
    }
}

impl SpanSamplerConfig {
    pub fn validate(&self) -> Result<()> {
        let open = |x: f64| x > 0.0 && x < 1.0;
        if !open(self.budget_fraction) {
            return Err(Error::InvalidConfig(format!(
                "budget_fraction {} outside (0, 1)",
                self.budget_fraction
            )));
        }
        if !open(self.geo_p) {
            return Err(Error::InvalidConfig(format!("geo_p {} outside (0, 1)", self.geo_p)));
        }
        if self.min_len < 1 || self.min_len > self.max_len {
            return Err(Error::InvalidConfig(format!(
                "span lengths need 1 <= min_len <= max_len, got [{}, {}]",
                self.min_len, self.max_len
            )));
        }
        if self.max_attempts == 0 {
            return Err(Error::InvalidConfig("max_attempts must be at least 1".into()));
        }
        Ok(())
    }
}

/// `P(len = k)` for `k` in `min_len..=max_len`: a geometric distribution
/// on `1, 2, ...` restricted to the range and renormalized.
pub fn span_length_pmf(cfg: &SpanSamplerConfig) -> Vec<f64> {
    let p = cfg.geo_p;
    let raw: Vec<f64> = (cfg.min_len..=cfg.max_len)
        .map(|k| p * (1.0 - p).powi(k as i32 - 1))
        .collect();
    let z: f64 = raw.iter().sum();
    raw.into_iter().map(|w| w / z).collect()
}

/// Closed-form mean of the geometric distribution truncated to `[1, n]`:
/// `(1/p - q^n (n + 1/p)) / (1 - q^n)` with `q = 1 - p`.
pub fn truncated_geometric_mean(p: f64, n: usize) -> f64 {
    let qn = (1.0 - p).powi(n as i32);
    (1.0 / p - qn * (n as f64 + 1.0 / p)) / (1.0 - qn)
}

/// Inverse-CDF draw from [`span_length_pmf`].
pub fn sample_span_length(cfg: &SpanSamplerConfig, rng: &mut Rng) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    let pmf = span_length_pmf(cfg);
    for (i, w) in pmf.iter().enumerate() {
        acc += w;
        if u < acc {
            return cfg.min_len + i;
        }
    }
    cfg.max_len
}

/// `ceil(fraction * maskable)`, ignoring float noise at exact integers.
pub fn masking_budget(maskable: usize, fraction: f64) -> usize {
    let x = fraction * maskable as f64;
    let r = x.round();
    if (x - r).abs() < 1e-9 {
        r as usize
    } else {
        x.ceil() as usize
    }
}

/// Mask spans chosen for one mention and, once filled, their replacements.
#[derive(Debug, Clone, PartialEq)]
pub struct AugmentationPlan {
    pub source: RelationMention,
    /// Disjoint, sorted by start, never touching an entity.
    pub mask_spans: Vec<Span>,
    /// One token per masked position in ascending order; empty until filled.
    pub filled_tokens: Vec<String>,
}

impl AugmentationPlan {
    pub fn masked_positions(&self) -> Vec<usize> {
        self.mask_spans.iter().flat_map(|s| s.start..s.end).collect()
    }

    pub fn masked_count(&self) -> usize {
        self.mask_spans.iter().map(Span::len).sum()
    }

    /// Source tokens with [`MASK`] at every masked position.
    pub fn masked_tokens(&self) -> Vec<String> {
        let mut tokens = self.source.tokens().to_vec();
        for i in self.masked_positions() {
            tokens[i] = MASK.to_string();
        }
        tokens
    }
}

/// Chooses mask spans for `mention` with the stream seeded by `cfg.seed`.
///
/// Repeatedly draws a length, clips it to the unspent budget and tries up
/// to `max_attempts` random starts among unmasked non-entity tokens. When
/// every attempt fails the length drops to `min_len` for one more round;
/// if that fails too, planning stops.
pub fn plan_masks(mention: &RelationMention, cfg: &SpanSamplerConfig) -> Result<AugmentationPlan> {
    cfg.validate()?;
    let n = mention.tokens().len();
    let mut free: Vec<bool> = (0..n).map(|i| !mention.in_entity(i)).collect();
    let maskable = free.iter().filter(|&&f| f).count();
    if maskable == 0 {
        return Err(Error::NothingMaskable);
    }
    let budget = masking_budget(maskable, cfg.budget_fraction);
    let mut r = rng::seeded(cfg.seed);
    let mut spans: Vec<Span> = Vec::new();
    let mut spent = 0;
    while spent < budget {
        let starts: Vec<usize> = (0..n).filter(|&i| free[i]).collect();
        if starts.is_empty() {
            break;
        }
        let len = sample_span_length(cfg, &mut r).min(budget - spent);
        if len < cfg.min_len {
            break;
        }
        let fits = |s: usize, len: usize| s + len <= n && (s..s + len).all(|i| free[i]);
        let mut chosen = None;
        for len in [len, cfg.min_len] {
            for _ in 0..cfg.max_attempts {
                let s = starts[r.gen_range(0..starts.len())];
                if fits(s, len) {
                    chosen = Some(Span::new(s, s + len));
                    break;
                }
            }
            if chosen.is_some() {
                break;
            }
        }
        let Some(span) = chosen else { break };
        free[span.start..span.end].fill(false);
        spent += span.len();
        spans.push(span);
    }
    spans.sort_by_key(|s| s.start);
    Ok(AugmentationPlan {
        source: mention.clone(),
        mask_spans: spans,
        filled_tokens: Vec::new(),
    })
}

/// Produces replacement tokens for masked positions.
pub trait FillModel {
    /// `tokens` holds [`MASK`] at each of `positions` (ascending). Must
    /// return exactly one token per position and be deterministic in `seed`.
    fn fill(&self, tokens: &[String], positions: &[usize], seed: u64) -> Vec<String>;
}

/// Runs `model` on the masked tokens and records its output in the plan.
pub fn fill_plan(plan: &AugmentationPlan, model: &dyn FillModel, seed: u64) -> Result<AugmentationPlan> {
    let positions = plan.masked_positions();
    let filled = model.fill(&plan.masked_tokens(), &positions, seed);
    if filled.len() != positions.len() {
        return Err(Error::FillLengthMismatch {
            expected: positions.len(),
            got: filled.len(),
        });
    }
    Ok(AugmentationPlan {
        filled_tokens: filled,
        ..plan.clone()
    })
}

/// Fills the plan and returns the rewritten mention without a gold label.
pub fn fill(plan: &AugmentationPlan, model: &dyn FillModel, seed: u64) -> Result<RelationMention> {
    let filled = fill_plan(plan, model, seed)?;
    let mut tokens = plan.source.tokens().to_vec();
    for (i, t) in plan.masked_positions().into_iter().zip(filled.filled_tokens) {
        tokens[i] = t;
    }
    Ok(plan.source.with_tokens(tokens)?.with_gold(None))
}

/// Cycles through the labeled mentions in a seeded order and emits
/// `n_out` augmented unlabeled mentions. Mentions with nothing to mask are
/// skipped.
pub fn augment_pool(
    labeled: &Corpus,
    n_out: usize,
    cfg: &SpanSamplerConfig,
    model: &dyn FillModel,
) -> Result<Corpus> {
    cfg.validate()?;
    let inventory = labeled.inventory().clone();
    if n_out == 0 {
        return Ok(Corpus::empty(inventory));
    }
    if labeled.is_empty() {
        return Err(Error::EmptyLabeledSet);
    }
    let mut order: Vec<usize> = (0..labeled.len())
        .filter(|&i| {
            let m = &labeled.mentions()[i];
            (0..m.tokens().len()).any(|t| !m.in_entity(t))
        })
        .collect();
    if order.is_empty() {
        return Err(Error::NothingMaskable);
    }
    order.shuffle(&mut rng::seeded(rng::derive(cfg.seed, "cda-order", 0)));
    let mut out = Vec::with_capacity(n_out);
    for i in 0..n_out {
        let source = &labeled.mentions()[order[i % order.len()]];
        let plan_cfg = SpanSamplerConfig {
            seed: rng::derive(cfg.seed, "cda-plan", i as u64),
            ..*cfg
        };
        let plan = plan_masks(source, &plan_cfg)?;
        out.push(fill(&plan, model, rng::derive(cfg.seed, "cda-fill", i as u64))?);
    }
    Corpus::new(inventory, out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{LabelId, LabelInventory};

    fn toks(s: &str) -> Vec<String> {
        s.split_whitespace().map(String::from).collect()
    }

    fn mention(s: &str, e1: (usize, usize), e2: (usize, usize)) -> RelationMention {
        RelationMention::new(
            toks(s),
            Span::new(e1.0, e1.1),
            Span::new(e2.0, e2.1),
            Some(LabelId(1)),
        )
        .unwrap()
    }

    struct Constant(&'static str);

    impl FillModel for Constant {
        fn fill(&self, _: &[String], positions: &[usize], _: u64) -> Vec<String> {
            vec![self.0.to_string(); positions.len()]
        }
    }

    struct Short;

    impl FillModel for Short {
        fn fill(&self, _: &[String], _: &[usize], _: u64) -> Vec<String> {
            Vec::new()
        }
    }

    #[test]
    fn closed_form_mean_matches_summation() {
        for p in [0.05f64, 0.2, 0.5, 0.9] {
            for n in [1usize, 3, 10, 25] {
                let z: f64 = (1..=n).map(|k| p * (1.0 - p).powi(k as i32 - 1)).sum();
                let brute: f64 = (1..=n)
                    .map(|k| k as f64 * p * (1.0 - p).powi(k as i32 - 1) / z)
                    .sum();
                assert!((truncated_geometric_mean(p, n) - brute).abs() < 1e-12, "p={p} n={n}");
            }
        }
        let m = truncated_geometric_mean(0.2, 10);
        assert!((m - 3.797_10).abs() < 1e-5);
        assert_eq!((m * 10.0).round() / 10.0, 3.8);
    }

    #[test]
    fn pmf_is_normalized_and_decreasing() {
        let pmf = span_length_pmf(&SpanSamplerConfig::default());
        assert_eq!(pmf.len(), 10);
        assert!((pmf.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(pmf.windows(2).all(|w| w[0] > w[1]));
    }

    #[test]
    fn budget_rounds_up() {
        assert_eq!(masking_budget(20, 0.15), 3);
        assert_eq!(masking_budget(21, 0.15), 4);
        assert_eq!(masking_budget(1, 0.15), 1);
        assert_eq!(masking_budget(40, 0.15), 6);
        assert_eq!(masking_budget(0, 0.15), 0);
    }

    #[test]
    fn twenty_maskable_tokens_mask_at_most_three() {
        let words: Vec<String> = (0..22).map(|i| format!("w{i}")).collect();
        let m = mention(&words.join(" "), (0, 1), (21, 22));
        for seed in 0..200 {
            let cfg = SpanSamplerConfig { seed, ..Default::default() };
            let plan = plan_masks(&m, &cfg).unwrap();
            assert!(plan.masked_count() <= 3);
            assert!(plan.masked_count() >= 1);
        }
    }

    #[test]
    fn all_entity_mention_is_unmaskable() {
        let m = mention("x y", (0, 1), (1, 2));
        assert!(matches!(
            plan_masks(&m, &SpanSamplerConfig::default()),
            Err(Error::NothingMaskable)
        ));
    }

    #[test]
    fn empty_plan_only_drops_label() {
        let m = mention("a b c d", (0, 1), (3, 4));
        let plan = AugmentationPlan {
            source: m.clone(),
            mask_spans: Vec::new(),
            filled_tokens: Vec::new(),
        };
        let out = fill(&plan, &Constant("z"), 0).unwrap();
        assert_eq!(out.tokens(), m.tokens());
        assert_eq!(out.gold(), None);
    }

    #[test]
    fn fill_replaces_only_masked_positions() {
        let m = mention("a b c d e f", (0, 1), (5, 6));
        let plan = AugmentationPlan {
            source: m,
            mask_spans: vec![Span::new(2, 4)],
            filled_tokens: Vec::new(),
        };
        assert_eq!(plan.masked_tokens(), toks("a b [MASK] [MASK] e f"));
        let out = fill(&plan, &Constant("z"), 0).unwrap();
        assert_eq!(out.tokens(), toks("a b z z e f"));
        assert!(matches!(
            fill(&plan, &Short, 0),
            Err(Error::FillLengthMismatch { expected: 2, got: 0 })
        ));
    }

    fn tiny_corpus() -> Corpus {
        let inv = LabelInventory::new(vec!["no_relation".into(), "r".into()], "no_relation").unwrap();
        Corpus::new(
            inv,
            vec![
                mention("x y z w", (0, 1), (3, 4)),
                mention("p q", (0, 1), (1, 2)),
                mention("k l m n o", (1, 2), (4, 5)),
            ],
        )
        .unwrap()
    }

    #[test]
    fn augment_pool_counts_and_drops_labels() {
        let c = tiny_corpus();
        let cfg = SpanSamplerConfig::default();
        assert!(augment_pool(&c, 0, &cfg, &Constant("z")).unwrap().is_empty());
        let out = augment_pool(&c, 7, &cfg, &Constant("z")).unwrap();
        assert_eq!(out.len(), 7);
        assert!(out.mentions().iter().all(|m| m.gold().is_none()));
        // The all-entity mention "p q" is never a source.
        assert!(out.mentions().iter().all(|m| m.tokens().len() != 2));
        assert_eq!(out, augment_pool(&c, 7, &cfg, &Constant("z")).unwrap());
    }

    #[test]
    fn augment_pool_rejects_unmaskable_corpus() {
        let inv = LabelInventory::new(vec!["no_relation".into(), "r".into()], "no_relation").unwrap();
        let c = Corpus::new(inv.clone(), vec![mention("p q", (0, 1), (1, 2))]).unwrap();
        let cfg = SpanSamplerConfig::default();
        assert!(matches!(
            augment_pool(&c, 3, &cfg, &Constant("z")),
            Err(Error::NothingMaskable)
        ));
        assert!(matches!(
            augment_pool(&Corpus::empty(inv), 3, &cfg, &Constant("z")),
            Err(Error::EmptyLabeledSet)
        ));
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let bad = [
            SpanSamplerConfig { budget_fraction: 1.0, ..Default::default() },
            SpanSamplerConfig { geo_p: 0.0, ..Default::default() },
            SpanSamplerConfig { min_len: 0, ..Default::default() },
            SpanSamplerConfig { min_len: 4, max_len: 3, ..Default::default() },
            SpanSamplerConfig { max_attempts: 0, ..Default::default() },
        ];
        for cfg in bad {
            assert!(cfg.validate().is_err(), "{cfg:?}");
        }
    }
}
