//! Interpolated bigram fill model with add-k smoothing.

use std::collections::{BTreeSet, HashMap};

use rand::Rng as _;

use super::FillModel;
use crate::data::Corpus;
use crate::error::{Error, Result};
use crate::rng;

/// Sentence-start context; never emitted.
pub const BOS: &str = "<s>";
/// Add-k pseudo-count for both bigram and unigram estimates.
pub const NGRAM_SMOOTHING: f64 = 0.1;
/// Weight of the bigram estimate when the context has been seen.
pub const NGRAM_INTERPOLATION: f64 = 0.8;

/// Fills masks left to right, conditioning each on the previous token
/// (already filled, if it was masked too). A context never seen in
/// training backs off to the unigram distribution.
#[derive(Debug, Clone)]
pub struct NgramFillModel {
    /// Sorted, so sampling order does not depend on hashing.
    vocab: Vec<String>,
    index: HashMap<String, usize>,
    unigram: Vec<f64>,
    total: f64,
    /// Keyed by context id, where `vocab.len()` stands for [`BOS`].
    bigram: HashMap<usize, HashMap<usize, f64>>,
    context_total: HashMap<usize, f64>,
}

impl NgramFillModel {
    pub fn train(corpus: &Corpus) -> Result<Self> {
        let sentences: Vec<&[String]> = corpus.mentions().iter().map(|m| m.tokens()).collect();
        Self::from_sentences(&sentences)
    }

    pub fn from_sentences<S: AsRef<[String]>>(sentences: &[S]) -> Result<Self> {
        let vocab: Vec<String> = sentences
            .iter()
            .flat_map(|s| s.as_ref().iter().cloned())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        if vocab.is_empty() {
            return Err(Error::InvalidConfig("fill model needs a non-empty corpus".into()));
        }
        let index: HashMap<String, usize> =
            vocab.iter().enumerate().map(|(i, w)| (w.clone(), i)).collect();
        let bos = vocab.len();
        let mut unigram = vec![0.0; vocab.len()];
        let mut bigram: HashMap<usize, HashMap<usize, f64>> = HashMap::new();
        let mut context_total: HashMap<usize, f64> = HashMap::new();
        for s in sentences {
            let mut prev = bos;
            for w in s.as_ref() {
                let id = index[w];
                unigram[id] += 1.0;
                *bigram.entry(prev).or_default().entry(id).or_default() += 1.0;
                *context_total.entry(prev).or_default() += 1.0;
                prev = id;
            }
        }
        let total = unigram.iter().sum();
        Ok(NgramFillModel {
            vocab,
            index,
            unigram,
            total,
            bigram,
            context_total,
        })
    }

    pub fn vocab(&self) -> &[String] {
        &self.vocab
    }

    fn unigram_prob(&self, w: usize) -> f64 {
        let v = self.vocab.len() as f64;
        (self.unigram[w] + NGRAM_SMOOTHING) / (self.total + NGRAM_SMOOTHING * v)
    }

    fn context_id(&self, prev: Option<&str>) -> Option<usize> {
        match prev {
            None | Some(BOS) => Some(self.vocab.len()),
            Some(t) => self.index.get(t).copied(),
        }
    }

    /// `P(word | prev)`; `prev = None` is the sentence start.
    pub fn prob(&self, prev: Option<&str>, word: &str) -> f64 {
        match self.index.get(word) {
            Some(&w) => self.distribution(prev)[w],
            None => 0.0,
        }
    }

    /// Full next-token distribution in vocabulary order.
    pub fn distribution(&self, prev: Option<&str>) -> Vec<f64> {
        let v = self.vocab.len();
        let uni: Vec<f64> = (0..v).map(|w| self.unigram_prob(w)).collect();
        let ctx = self.context_id(prev);
        let Some((counts, n)) = ctx.and_then(|c| Some((self.bigram.get(&c)?, self.context_total[&c])))
        else {
            return uni;
        };
        let denom = n + NGRAM_SMOOTHING * v as f64;
        (0..v)
            .map(|w| {
                let c = counts.get(&w).copied().unwrap_or(0.0);
                NGRAM_INTERPOLATION * (c + NGRAM_SMOOTHING) / denom
                    + (1.0 - NGRAM_INTERPOLATION) * uni[w]
            })
            .collect()
    }
}

impl FillModel for NgramFillModel {
    fn fill(&self, tokens: &[String], positions: &[usize], seed: u64) -> Vec<String> {
        let mut r = rng::seeded(seed);
        let mut current = tokens.to_vec();
        let mut out = Vec::with_capacity(positions.len());
        for &pos in positions {
            let prev = pos.checked_sub(1).map(|p| current[p].as_str());
            let dist = self.distribution(prev);
            let u: f64 = r.gen::<f64>() * dist.iter().sum::<f64>();
            let mut acc = 0.0;
            let mut pick = dist.len() - 1;
            for (i, p) in dist.iter().enumerate() {
                acc += p;
                if u < acc {
                    pick = i;
                    break;
                }
            }
            current[pos] = self.vocab[pick].clone();
            out.push(self.vocab[pick].clone());
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cda::MASK;

    fn toks(s: &str) -> Vec<String> {
        s.split_whitespace().map(String::from).collect()
    }

    #[test]
    fn hand_computed_bigram_distribution() {
        let m = NgramFillModel::from_sentences(&[toks("a b a b")]).unwrap();
        // Bigram after "a": b seen twice out of two, add-0.1 over |V| = 2.
        let bigram_b = 2.1 / 2.2;
        let unigram_b = 2.1 / 4.2;
        assert!((unigram_b - 0.5f64).abs() < 1e-15);
        let expect = 0.8 * bigram_b + 0.2 * unigram_b;
        assert!((m.prob(Some("a"), "b") - expect).abs() < 1e-12);
        assert!((expect - 0.863_636_363_6).abs() < 1e-9);
        assert!((m.prob(Some("a"), "a") - (0.8 * 0.1 / 2.2 + 0.2 * 0.5)).abs() < 1e-12);
        let dist = m.distribution(Some("a"));
        assert!((dist.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn unseen_context_backs_off_to_unigram() {
        let m = NgramFillModel::from_sentences(&[toks("a b a c")]).unwrap();
        // "c" only ends the sentence, so it is never a context.
        for w in ["a", "b", "c"] {
            assert_eq!(m.prob(Some("c"), w), m.prob(Some("zzz"), w));
        }
        assert!((m.prob(Some("zzz"), "a") - 2.1 / 4.3).abs() < 1e-12);
    }

    #[test]
    fn fills_are_deterministic_and_sized() {
        let m = NgramFillModel::from_sentences(&[toks("x y z"), toks("y z x w")]).unwrap();
        let masked = toks("x [MASK] [MASK] w");
        assert_eq!(masked[1], MASK);
        let a = m.fill(&masked, &[1, 2], 4);
        assert_eq!(a.len(), 2);
        assert_eq!(a, m.fill(&masked, &[1, 2], 4));
        assert!(a.iter().all(|t| m.vocab().contains(t)));
    }

    #[test]
    fn can_rewrite_a_predicate() {
        let m = NgramFillModel::from_sentences(&[toks("a letter was sent from my office")]).unwrap();
        let masked = toks("a letter was [MASK] [MASK] my office");
        let hit = (0..200).any(|seed| m.fill(&masked, &[3, 4], seed) == toks("sent from"));
        assert!(hit);
    }

    #[test]
    fn empty_corpus_is_rejected() {
        assert!(NgramFillModel::from_sentences::<Vec<String>>(&[]).is_err());
    }
}
