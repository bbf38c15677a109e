use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{GradientVector, LabeledEncoding, PolicyParameters, RelationalEncoding};
use crate::data::LabelId;
use crate::error::{Error, Result};
use crate::rng;

/// Floor applied to the target probability inside the cross-entropy.
pub const PROBABILITY_FLOOR: f64 = 1e-12;

/// Softmax output over the label inventory.
#[derive(Debug, Clone, PartialEq)]
pub struct Probabilities(Vec<f64>);

impl Probabilities {
    pub fn from_vec(p: Vec<f64>) -> Self {
        Probabilities(p)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    /// Most probable label; ties go to the lowest id.
    pub fn argmax(&self) -> LabelId {
        let mut best = 0;
        for (i, &p) in self.0.iter().enumerate() {
            if p > self.0[best] {
                best = i;
            }
        }
        LabelId(best)
    }
}

fn softmax_in_place(z: &mut [f64]) {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for v in z.iter_mut() {
        *v = (*v - max).exp();
        sum += *v;
    }
    z.iter_mut().for_each(|v| *v /= sum);
}

/// Positions of the nonzero inputs. Hashed encodings are mostly zeros, and
/// skipping exact zeros leaves every sum bit-identical.
fn support(h: &[f64]) -> Vec<usize> {
    (0..h.len()).filter(|&i| h[i] != 0.0).collect()
}

fn sparse_dot(row: &[f64], h: &[f64], support: &[usize]) -> f64 {
    support.iter().map(|&i| row[i] * h[i]).sum()
}

/// Hidden activations (if any) and class probabilities.
fn forward_parts(params: &PolicyParameters, h: &[f64]) -> (Option<Vec<f64>>, Vec<f64>) {
    let arch = params.architecture();
    let nz = support(h);
    let hidden = (arch.hidden_dim > 0).then(|| {
        let v = params.v();
        params
            .c()
            .iter()
            .enumerate()
            .map(|(j, cj)| {
                let row = &v[j * arch.input_dim..(j + 1) * arch.input_dim];
                (cj + sparse_dot(row, h, &nz)).tanh()
            })
            .collect::<Vec<_>>()
    });
    let d = arch.feature_dim();
    let w = params.w();
    let mut logits: Vec<f64> = params
        .b()
        .iter()
        .enumerate()
        .map(|(k, bk)| {
            let row = &w[k * d..(k + 1) * d];
            bk + match &hidden {
                Some(z) => z.iter().zip(row).map(|(x, y)| x * y).sum::<f64>(),
                None => sparse_dot(row, h, &nz),
            }
        })
        .collect();
    softmax_in_place(&mut logits);
    (hidden, logits)
}

fn check_input(params: &PolicyParameters, h: &RelationalEncoding) {
    assert_eq!(
        params.architecture().input_dim,
        h.len(),
        "encoding width does not match the head"
    );
}

pub fn forward(params: &PolicyParameters, h: &RelationalEncoding) -> Probabilities {
    check_input(params, h);
    Probabilities(forward_parts(params, h.as_slice()).1)
}

pub fn predict(params: &PolicyParameters, h: &RelationalEncoding) -> LabelId {
    forward(params, h).argmax()
}

/// `-ln max(p[target], 1e-12)`.
pub fn cross_entropy(probs: &Probabilities, target: LabelId) -> f64 {
    -probs.0[target.index()].max(PROBABILITY_FLOOR).ln()
}

/// Adds `weight * ∇θ CE(forward(θ, h), target)` into `out` and returns the
/// loss. The gradient is the analytic softmax one, `p - onehot`; the floor
/// only guards the loss value.
fn accumulate(
    params: &PolicyParameters,
    h: &[f64],
    target: LabelId,
    weight: f64,
    out: &mut [f64],
) -> f64 {
    let arch = params.architecture();
    let (hidden, p) = forward_parts(params, h);
    let loss = -p[target.index()].max(PROBABILITY_FLOOR).ln();
    if weight == 0.0 {
        return loss;
    }
    let mut delta = p;
    delta[target.index()] -= 1.0;

    let nz = support(h);
    let d = arch.feature_dim();
    let (w_out, rest) = out.split_at_mut(arch.num_labels * d);
    let (b_out, rest) = rest.split_at_mut(arch.num_labels);
    for (k, &dk) in delta.iter().enumerate() {
        if dk == 0.0 {
            continue;
        }
        let s = weight * dk;
        let row = &mut w_out[k * d..(k + 1) * d];
        match &hidden {
            Some(z) => row.iter_mut().zip(z).for_each(|(o, f)| *o += s * f),
            None => nz.iter().for_each(|&i| row[i] += s * h[i]),
        }
        b_out[k] += s;
    }
    if let Some(z) = hidden {
        let w = params.w();
        let (v_out, c_out) = rest.split_at_mut(arch.hidden_dim * arch.input_dim);
        for (j, zj) in z.iter().enumerate() {
            let dz: f64 = delta.iter().enumerate().map(|(k, dk)| w[k * d + j] * dk).sum();
            let da = weight * dz * (1.0 - zj * zj);
            let row = &mut v_out[j * arch.input_dim..(j + 1) * arch.input_dim];
            nz.iter().for_each(|&i| row[i] += da * h[i]);
            c_out[j] += da;
        }
    }
    loss
}

pub fn loss_and_grad(
    params: &PolicyParameters,
    h: &RelationalEncoding,
    target: LabelId,
) -> (f64, GradientVector) {
    check_input(params, h);
    let mut g = GradientVector::zeros(params.len());
    let loss = accumulate(params, h.as_slice(), target, 1.0, g.as_mut_slice());
    (loss, g)
}

/// Gradient of the cross-entropy of one sample with respect to the
/// flattened head parameters.
pub fn grad_sample(
    params: &PolicyParameters,
    h: &RelationalEncoding,
    target: LabelId,
) -> GradientVector {
    loss_and_grad(params, h, target).1
}

/// Mean of the per-sample gradients over `labeled`, summed in list order.
pub fn mean_labeled_gradient(
    params: &PolicyParameters,
    labeled: &[LabeledEncoding],
) -> Result<GradientVector> {
    if labeled.is_empty() {
        return Err(Error::EmptyLabeledSet);
    }
    let mut g = GradientVector::zeros(params.len());
    for (h, y) in labeled {
        check_input(params, h);
        accumulate(params, h.as_slice(), *y, 1.0, g.as_mut_slice());
    }
    g.scale(1.0 / labeled.len() as f64);
    Ok(g)
}

pub fn mean_loss(params: &PolicyParameters, data: &[LabeledEncoding]) -> f64 {
    if data.is_empty() {
        return 0.0;
    }
    data.iter()
        .map(|(h, y)| cross_entropy(&forward(params, h), *y))
        .sum::<f64>()
        / data.len() as f64
}

pub fn accuracy(params: &PolicyParameters, data: &[LabeledEncoding]) -> f64 {
    if data.is_empty() {
        return 0.0;
    }
    let hits = data.iter().filter(|(h, y)| predict(params, h) == *y).count();
    hits as f64 / data.len() as f64
}

/// Plain mini-batch SGD settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SgdConfig {
    pub step_size: f64,
    pub epochs: usize,
    pub batch: usize,
    pub seed: u64,
}

impl Default for SgdConfig {
    fn default() -> Self {
        SgdConfig {
            step_size: 0.1,
            epochs: 60,
            batch: 16,
            seed: 0,
        }
    }
}

/// Supervised pretraining on mean cross-entropy.
pub fn pretrain(
    params: &PolicyParameters,
    labeled: &[LabeledEncoding],
    sgd: &SgdConfig,
) -> PolicyParameters {
    run_sgd(params, labeled, sgd, false).0
}

/// Like [`pretrain`], also returning the full-set mean loss before training
/// and after every epoch.
pub fn pretrain_with_history(
    params: &PolicyParameters,
    labeled: &[LabeledEncoding],
    sgd: &SgdConfig,
) -> (PolicyParameters, Vec<f64>) {
    run_sgd(params, labeled, sgd, true)
}

fn run_sgd(
    params: &PolicyParameters,
    labeled: &[LabeledEncoding],
    sgd: &SgdConfig,
    track: bool,
) -> (PolicyParameters, Vec<f64>) {
    let mut theta = params.clone();
    let mut history = Vec::new();
    if track {
        history.push(mean_loss(&theta, labeled));
    }
    if labeled.is_empty() || sgd.epochs == 0 || sgd.step_size == 0.0 {
        return (theta, history);
    }
    let batch = sgd.batch.max(1);
    let mut order: Vec<usize> = (0..labeled.len()).collect();
    let mut grad = vec![0.0; theta.len()];
    for epoch in 0..sgd.epochs {
        let mut r = rng::seeded(rng::derive(sgd.seed, "pretrain-epoch", epoch as u64));
        order.shuffle(&mut r);
        for chunk in order.chunks(batch) {
            grad.iter_mut().for_each(|g| *g = 0.0);
            let w = 1.0 / chunk.len() as f64;
            for &i in chunk {
                let (h, y) = &labeled[i];
                accumulate(&theta, h.as_slice(), *y, w, &mut grad);
            }
            for (t, g) in theta.as_mut_slice().iter_mut().zip(&grad) {
                *t -= sgd.step_size * g;
            }
        }
        if track {
            history.push(mean_loss(&theta, labeled));
        }
    }
    (theta, history)
}
