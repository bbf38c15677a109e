//! Scoring, pseudo-label tracking, parameter-trajectory PCA and run
//! comparison reports.

mod pca;
mod report;

use serde::{Deserialize, Serialize};

use crate::data::{LabelId, LabelInventory};
use crate::error::{Error, Result};
use crate::girl::PseudoSample;
use crate::model::{predict, LabeledEncoding, PolicyParameters};

pub use pca::{pca2, render_pca_csv, Pca2, TrajectorySnapshot, PCA_MAX_ITERATIONS, PCA_TOLERANCE};
pub use report::{assemble_report, ComparisonRow, ComparisonTable};

/// `(gold, predicted)` pairs over one inventory.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionSet {
    pairs: Vec<(LabelId, LabelId)>,
    no_relation: LabelId,
}

impl PredictionSet {
    pub fn new(pairs: Vec<(LabelId, LabelId)>, inventory: &LabelInventory) -> Result<Self> {
        if let Some((g, p)) = pairs
            .iter()
            .find(|(g, p)| !inventory.contains(*g) || !inventory.contains(*p))
        {
            return Err(Error::InvalidInventory(format!(
                "pair ({g}, {p}) outside inventory of {}",
                inventory.len()
            )));
        }
        Ok(PredictionSet {
            pairs,
            no_relation: inventory.no_relation(),
        })
    }

    pub fn pairs(&self) -> &[(LabelId, LabelId)] {
        &self.pairs
    }

    pub fn push(&mut self, gold: LabelId, pred: LabelId) {
        self.pairs.push((gold, pred));
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct F1Report {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub tp: usize,
    pub pred_pos: usize,
    pub gold_pos: usize,
}

impl F1Report {
    pub fn from_counts(tp: usize, pred_pos: usize, gold_pos: usize) -> Self {
        let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
        let precision = ratio(tp, pred_pos);
        let recall = ratio(tp, gold_pos);
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        F1Report {
            precision,
            recall,
            f1,
            tp,
            pred_pos,
            gold_pos,
        }
    }
}

/// Micro F1 in which correct `no_relation` predictions count toward
/// nothing: a true positive is a correct prediction of a real relation,
/// precision is over predicted relations and recall over gold relations.
pub fn score(preds: &PredictionSet) -> Result<F1Report> {
    if preds.pairs.is_empty() {
        return Err(Error::EmptyPredictionSet);
    }
    let nr = preds.no_relation;
    let (mut tp, mut pred_pos, mut gold_pos) = (0, 0, 0);
    for &(g, p) in &preds.pairs {
        if p != nr {
            pred_pos += 1;
        }
        if g != nr {
            gold_pos += 1;
            if p == g {
                tp += 1;
            }
        }
    }
    Ok(F1Report::from_counts(tp, pred_pos, gold_pos))
}

/// Scores accepted pseudo-labels against the hidden gold labels of the
/// unlabeled pool, indexed by each sample's source mention.
pub fn pseudo_label_f1(
    accepted: &[PseudoSample],
    hidden_gold: &[Option<LabelId>],
    inventory: &LabelInventory,
) -> Result<F1Report> {
    let mut pairs = Vec::with_capacity(accepted.len());
    for s in accepted {
        let gold = hidden_gold
            .get(s.source)
            .copied()
            .flatten()
            .ok_or(Error::MissingGold(s.source))?;
        pairs.push((gold, s.y_tilde));
    }
    score(&PredictionSet::new(pairs, inventory)?)
}

/// Scores the head's predictions on a labeled set.
pub fn evaluate(
    params: &PolicyParameters,
    data: &[LabeledEncoding],
    inventory: &LabelInventory,
) -> Result<F1Report> {
    let pairs = data.iter().map(|(h, y)| (*y, predict(params, h))).collect();
    score(&PredictionSet::new(pairs, inventory)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn inv() -> LabelInventory {
        LabelInventory::new(
            ["no_relation", "r1", "r2"].map(String::from).to_vec(),
            "no_relation",
        )
        .unwrap()
    }

    fn set(pairs: &[(usize, usize)]) -> PredictionSet {
        PredictionSet::new(
            pairs.iter().map(|&(g, p)| (LabelId(g), LabelId(p))).collect(),
            &inv(),
        )
        .unwrap()
    }

    #[test]
    fn hand_enumerated_example() {
        // gold = [r1, NR, r2], pred = [r1, NR, NR]
        let r = score(&set(&[(1, 1), (0, 0), (2, 0)])).unwrap();
        assert_eq!((r.tp, r.pred_pos, r.gold_pos), (1, 1, 2));
        assert_eq!(r.precision, 1.0);
        assert_eq!(r.recall, 0.5);
        assert!((r.f1 - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn perfect_and_all_no_relation() {
        assert_eq!(score(&set(&[(1, 1), (0, 0), (2, 2)])).unwrap().f1, 1.0);
        let r = score(&set(&[(0, 0), (0, 0)])).unwrap();
        assert_eq!((r.precision, r.recall, r.f1), (0.0, 0.0, 0.0));
    }

    #[test]
    fn empty_and_invalid() {
        assert!(matches!(score(&set(&[])), Err(Error::EmptyPredictionSet)));
        assert!(PredictionSet::new(vec![(LabelId(0), LabelId(3))], &inv()).is_err());
    }

    #[test]
    fn correct_no_relation_is_ignored() {
        let base = set(&[(1, 2), (2, 2), (0, 1)]);
        let mut more = base.clone();
        more.push(LabelId(0), LabelId(0));
        assert_eq!(score(&base).unwrap(), score(&more).unwrap());
    }

    #[test]
    fn false_relation_lowers_precision() {
        let base = set(&[(1, 1), (2, 2), (2, 0)]);
        let mut more = base.clone();
        more.push(LabelId(0), LabelId(2));
        assert!(score(&more).unwrap().precision < score(&base).unwrap().precision);
    }

    #[test]
    fn pseudo_labels_against_hidden_gold() {
        let gold = vec![Some(LabelId(1)), Some(LabelId(2)), None];
        let ps = |source, y| PseudoSample {
            source,
            y_tilde: LabelId(y),
            reward: 0.9,
            accepted: true,
        };
        let r = pseudo_label_f1(&[ps(0, 1), ps(1, 2)], &gold, &inv()).unwrap();
        assert_eq!(r.f1, 1.0);
        assert!(matches!(
            pseudo_label_f1(&[ps(2, 1)], &gold, &inv()),
            Err(Error::MissingGold(2))
        ));
        assert!(matches!(
            pseudo_label_f1(&[], &gold, &inv()),
            Err(Error::EmptyPredictionSet)
        ));
    }
}
