use serde::{Deserialize, Serialize};

use super::LabeledEncoding;
use crate::data::{mark_entities, Corpus, MarkedSequence};
use crate::error::{Error, Result};

/// Settings of the frozen signed-hash context encoder.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EncoderConfig {
    /// Width of each entity half; the encoding has `2 * h_r` components.
    pub h_r: usize,
    /// Tokens hashed on each side of each marked entity.
    pub context_window: usize,
    pub hash_seed: u64,
}

impl Default for EncoderConfig {
    fn default() -> Self {
        EncoderConfig {
            h_r: 64,
            context_window: 3,
            hash_seed: 0,
        }
    }
}

impl EncoderConfig {
    pub fn validate(&self) -> Result<()> {
        if self.h_r < 2 {
            return Err(Error::InvalidConfig(format!("h_r = {} must be >= 2", self.h_r)));
        }
        Ok(())
    }

    pub fn output_dim(&self) -> usize {
        2 * self.h_r
    }
}

/// `h = [h_E1, h_E2]`, each half L2-normalized (or zero).
#[derive(Debug, Clone, PartialEq)]
pub struct RelationalEncoding(Vec<f64>);

impl RelationalEncoding {
    pub fn from_vec(values: Vec<f64>) -> Result<Self> {
        if !values.len().is_multiple_of(2) || values.iter().any(|v| !v.is_finite()) {
            return Err(Error::ShapeMismatch(format!(
                "encoding of length {} must be even and finite",
                values.len()
            )));
        }
        Ok(RelationalEncoding(values))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn e1_part(&self) -> &[f64] {
        &self.0[..self.0.len() / 2]
    }

    pub fn e2_part(&self) -> &[f64] {
        &self.0[self.0.len() / 2..]
    }
}

fn fnv1a(seed: u64, parts: &[&[u8]]) -> u64 {
    let mut h = 0xcbf2_9ce4_8422_2325u64;
    let mut feed = |b: u8| {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    };
    seed.to_le_bytes().into_iter().for_each(&mut feed);
    for p in parts {
        p.iter().copied().for_each(&mut feed);
        feed(0xff);
    }
    // final avalanche so low bits are usable as a bucket index
    h ^= h >> 33;
    h = h.wrapping_mul(0xff51_afd7_ed55_8ccd);
    h ^= h >> 33;
    h
}

fn encode_half(seq: &MarkedSequence, open: usize, role: &[u8], cfg: &EncoderConfig, out: &mut [f64]) {
    let tokens = seq.tokens();
    let close = seq.closing_pos(open);
    let w = cfg.context_window;
    let mut add = |side: &[u8], tok: &str| {
        let h = fnv1a(cfg.hash_seed, &[role, side, tok.as_bytes()]);
        let bucket = (h % cfg.h_r as u64) as usize;
        out[bucket] += if h >> 63 == 0 { 1.0 } else { -1.0 };
    };
    for t in &tokens[open.saturating_sub(w)..open] {
        add(b"L", t);
    }
    for t in &tokens[open + 1..close] {
        add(b"E", t);
    }
    let right_end = (close + 1 + w).min(tokens.len());
    for t in &tokens[close + 1..right_end] {
        add(b"R", t);
    }
    let norm = out.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm > 0.0 {
        out.iter_mut().for_each(|v| *v /= norm);
    }
}

/// Hashes, per entity, the entity tokens and the `context_window` tokens on
/// each side of its markers into `h_r` signed buckets, then L2-normalizes
/// each half. Features carry the entity role and the side they came from;
/// token positions beyond the windows never contribute.
pub fn encode(seq: &MarkedSequence, cfg: &EncoderConfig) -> RelationalEncoding {
    let mut h = vec![0.0; cfg.output_dim()];
    let (left, right) = h.split_at_mut(cfg.h_r);
    encode_half(seq, seq.e1_marker_pos(), b"e1", cfg, left);
    encode_half(seq, seq.e2_marker_pos(), b"e2", cfg, right);
    RelationalEncoding(h)
}

/// Encodes every mention of a corpus, in order.
pub fn encode_corpus(corpus: &Corpus, cfg: &EncoderConfig) -> Vec<RelationalEncoding> {
    corpus
        .mentions()
        .iter()
        .map(|m| encode(&mark_entities(m), cfg))
        .collect()
}

/// Encodes a fully labeled corpus.
pub fn labeled_encodings(corpus: &Corpus, cfg: &EncoderConfig) -> Result<Vec<LabeledEncoding>> {
    corpus
        .mentions()
        .iter()
        .enumerate()
        .map(|(index, m)| {
            let y = m.gold().ok_or(Error::MissingLabel { index })?;
            Ok((encode(&mark_entities(m), cfg), y))
        })
        .collect()
}
