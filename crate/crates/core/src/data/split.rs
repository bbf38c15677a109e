use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{Corpus, LabelId};
use crate::error::{Error, Result};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub labeled_fraction: f64,
    pub unlabeled_fraction: f64,
    pub seed: u64,
}

impl SplitSpec {
    pub fn new(labeled_fraction: f64, unlabeled_fraction: f64, seed: u64) -> Result<Self> {
        let spec = SplitSpec {
            labeled_fraction,
            unlabeled_fraction,
            seed,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let (l, u) = (self.labeled_fraction, self.unlabeled_fraction);
        if !(l > 0.0 && l <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "labeled fraction {l} must lie in (0, 1]"
            )));
        }
        if !(0.0..1.0).contains(&u) {
            return Err(Error::InvalidConfig(format!(
                "unlabeled fraction {u} must lie in [0, 1)"
            )));
        }
        if l + u > 1.0 + 1e-12 {
            return Err(Error::InvalidConfig(format!(
                "labeled + unlabeled fractions sum to {} > 1",
                l + u
            )));
        }
        Ok(())
    }
}

/// The three disjoint parts of a stratified split. The unlabeled part keeps
/// its gold labels so pseudo-label quality can be scored; training code
/// only ever sees [`Corpus::hide_labels`] of it.
#[derive(Debug, Clone, PartialEq)]
pub struct Split {
    pub labeled: Corpus,
    pub unlabeled: Corpus,
    pub rest: Corpus,
}

/// Per class: shuffle with the split seed, take `round(l * n)` labeled and
/// `round(u * n)` unlabeled mentions (capped by what is left), and leave the
/// remainder. Each part keeps the original corpus order.
pub fn stratified_split(corpus: &Corpus, spec: &SplitSpec) -> Result<Split> {
    spec.validate()?;
    let k = corpus.inventory().len();
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); k];
    for (i, m) in corpus.mentions().iter().enumerate() {
        let g = m.gold().ok_or(Error::MissingLabel { index: i })?;
        by_class[g.index()].push(i);
    }

    // 0 = rest, 1 = labeled, 2 = unlabeled
    let mut assignment = vec![0u8; corpus.len()];
    for (class, members) in by_class.iter_mut().enumerate() {
        if members.is_empty() {
            continue;
        }
        let n = members.len();
        let n_lab = (spec.labeled_fraction * n as f64).round() as usize;
        let n_lab = n_lab.min(n);
        if n_lab == 0 {
            return Err(Error::InsufficientClassCount {
                label: corpus.inventory().name(LabelId(class)).to_string(),
                labeled: 0,
                available: n,
            });
        }
        let n_unl = ((spec.unlabeled_fraction * n as f64).round() as usize).min(n - n_lab);
        let mut r = rng::seeded(rng::derive(spec.seed, "stratified-split", class as u64));
        members.shuffle(&mut r);
        for &i in &members[..n_lab] {
            assignment[i] = 1;
        }
        for &i in &members[n_lab..n_lab + n_unl] {
            assignment[i] = 2;
        }
    }

    let pick = |tag: u8| -> Result<Corpus> {
        let mentions = corpus
            .mentions()
            .iter()
            .zip(&assignment)
            .filter(|(_, &a)| a == tag)
            .map(|(m, _)| m.clone())
            .collect();
        Corpus::new(corpus.inventory().clone(), mentions)
    };
    Ok(Split {
        labeled: pick(1)?,
        unlabeled: pick(2)?,
        rest: pick(0)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{LabelInventory, RelationMention, Span};

    fn corpus(counts: &[usize]) -> Corpus {
        let names: Vec<String> = (0..counts.len()).map(|i| format!("r{i}")).collect();
        let inv = LabelInventory::new(names, "r0").unwrap();
        let mut mentions = Vec::new();
        for (c, &n) in counts.iter().enumerate() {
            for j in 0..n {
                let tokens = vec![format!("a{c}"), format!("w{j}"), format!("b{c}")];
                mentions.push(
                    RelationMention::new(tokens, Span::new(0, 1), Span::new(2, 3), Some(LabelId(c)))
                        .unwrap(),
                );
            }
        }
        Corpus::new(inv, mentions).unwrap()
    }

    #[test]
    fn proportional_counts() {
        let c = corpus(&[60, 40]);
        let s = stratified_split(&c, &SplitSpec::new(0.1, 0.5, 3).unwrap()).unwrap();
        assert_eq!(s.labeled.class_counts(), vec![6, 4]);
        assert_eq!(s.unlabeled.class_counts(), vec![30, 20]);
        assert_eq!(s.rest.class_counts(), vec![24, 16]);
    }

    #[test]
    fn full_labeled_fraction_is_identity() {
        let c = corpus(&[5, 7, 3]);
        let s = stratified_split(&c, &SplitSpec::new(1.0, 0.0, 1).unwrap()).unwrap();
        assert_eq!(s.labeled, c);
        assert!(s.unlabeled.is_empty() && s.rest.is_empty());
    }

    #[test]
    fn deterministic_and_seed_sensitive() {
        let c = corpus(&[50, 30, 20]);
        let spec = SplitSpec::new(0.2, 0.5, 11).unwrap();
        assert_eq!(stratified_split(&c, &spec).unwrap(), stratified_split(&c, &spec).unwrap());
        let other = SplitSpec { seed: 12, ..spec };
        assert_ne!(
            stratified_split(&c, &spec).unwrap().labeled,
            stratified_split(&c, &other).unwrap().labeled
        );
    }

    #[test]
    fn partitions_are_disjoint_and_cover() {
        let c = corpus(&[33, 17, 9]);
        let s = stratified_split(&c, &SplitSpec::new(0.3, 0.4, 5).unwrap()).unwrap();
        let mut all: Vec<_> = s
            .labeled
            .mentions()
            .iter()
            .chain(s.unlabeled.mentions())
            .chain(s.rest.mentions())
            .cloned()
            .collect();
        assert_eq!(all.len(), c.len());
        let mut orig = c.mentions().to_vec();
        let key = |m: &RelationMention| m.tokens().join(" ");
        all.sort_by_key(key);
        orig.sort_by_key(key);
        assert_eq!(all, orig);
    }

    #[test]
    fn tiny_class_fails() {
        let c = corpus(&[100, 2]);
        let err = stratified_split(&c, &SplitSpec::new(0.1, 0.5, 0).unwrap()).unwrap_err();
        assert!(matches!(err, Error::InsufficientClassCount { .. }));
    }

    #[test]
    fn spec_validation() {
        assert!(SplitSpec::new(0.6, 0.5, 0).is_err());
        assert!(SplitSpec::new(0.0, 0.5, 0).is_err());
        assert!(SplitSpec::new(0.5, 1.0, 0).is_err());
        assert!(SplitSpec::new(0.5, 0.5, 0).is_ok());
    }

    #[test]
    fn unlabeled_mentions_fail() {
        let c = corpus(&[4, 4]).hide_labels();
        assert!(matches!(
            stratified_split(&c, &SplitSpec::new(0.5, 0.0, 0).unwrap()),
            Err(Error::MissingLabel { .. })
        ));
    }
}
