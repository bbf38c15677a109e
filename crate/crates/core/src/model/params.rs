use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

/// Tag written next to every flattened parameter vector. Bump it whenever
/// the flattening order changes.
pub const LAYOUT_TAG: &str = "head-W.b.V.c/v1";

/// Shape of the classifier head. `hidden_dim == 0` is the affine head
/// `softmax(W h + b)`; otherwise `softmax(W tanh(V h + c) + b)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Architecture {
    pub num_labels: usize,
    pub input_dim: usize,
    pub hidden_dim: usize,
}

impl Architecture {
    pub fn linear(num_labels: usize, input_dim: usize) -> Self {
        Architecture {
            num_labels,
            input_dim,
            hidden_dim: 0,
        }
    }

    /// Width of the layer that feeds `W`.
    pub fn feature_dim(&self) -> usize {
        if self.hidden_dim > 0 {
            self.hidden_dim
        } else {
            self.input_dim
        }
    }

    pub fn param_count(&self) -> usize {
        let k = self.num_labels;
        let head = k * self.feature_dim() + k;
        head + self.hidden_dim * self.input_dim + self.hidden_dim
    }

    pub(crate) fn w_range(&self) -> std::ops::Range<usize> {
        0..self.num_labels * self.feature_dim()
    }

    pub(crate) fn b_range(&self) -> std::ops::Range<usize> {
        let s = self.w_range().end;
        s..s + self.num_labels
    }

    pub(crate) fn v_range(&self) -> std::ops::Range<usize> {
        let s = self.b_range().end;
        s..s + self.hidden_dim * self.input_dim
    }

    pub(crate) fn c_range(&self) -> std::ops::Range<usize> {
        let s = self.v_range().end;
        s..s + self.hidden_dim
    }
}

/// Flattened head parameters `θ`.
///
/// Layout: `W` row-major (`num_labels × feature_dim`), then `b`
/// (`num_labels`), then for a hidden layer `V` row-major
/// (`hidden_dim × input_dim`) and `c` (`hidden_dim`).
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyParameters {
    arch: Architecture,
    theta: Vec<f64>,
}

impl PolicyParameters {
    pub fn zeros(arch: Architecture) -> Self {
        PolicyParameters {
            arch,
            theta: vec![0.0; arch.param_count()],
        }
    }

    /// The affine head starts at zero (its loss is convex). A hidden layer
    /// gets Glorot-uniform weights from `seed` and zero biases.
    pub fn init(arch: Architecture, seed: u64) -> Self {
        let mut p = Self::zeros(arch);
        if arch.hidden_dim > 0 {
            let mut r = rng::seeded(rng::derive(seed, "head-init", 0));
            let glorot = |fan_in: usize, fan_out: usize| (6.0 / (fan_in + fan_out) as f64).sqrt();
            let a = glorot(arch.hidden_dim, arch.num_labels);
            for x in &mut p.theta[arch.w_range()] {
                *x = r.gen_range(-a..a);
            }
            let a = glorot(arch.input_dim, arch.hidden_dim);
            for x in &mut p.theta[arch.v_range()] {
                *x = r.gen_range(-a..a);
            }
        }
        p
    }

    pub fn from_flat(arch: Architecture, theta: Vec<f64>) -> Result<Self> {
        if theta.len() != arch.param_count() {
            return Err(Error::ShapeMismatch(format!(
                "{} parameters for an architecture that needs {}",
                theta.len(),
                arch.param_count()
            )));
        }
        if theta.iter().any(|v| !v.is_finite()) {
            return Err(Error::ShapeMismatch("non-finite parameter".into()));
        }
        Ok(PolicyParameters { arch, theta })
    }

    pub fn architecture(&self) -> Architecture {
        self.arch
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.theta
    }

    pub fn len(&self) -> usize {
        self.theta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.theta.is_empty()
    }

    pub(crate) fn w(&self) -> &[f64] {
        &self.theta[self.arch.w_range()]
    }

    pub(crate) fn b(&self) -> &[f64] {
        &self.theta[self.arch.b_range()]
    }

    pub(crate) fn v(&self) -> &[f64] {
        &self.theta[self.arch.v_range()]
    }

    pub(crate) fn c(&self) -> &[f64] {
        &self.theta[self.arch.c_range()]
    }

    pub(crate) fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.theta
    }

    /// `θ - step * g`.
    pub fn descend(&self, g: &GradientVector, step: f64) -> Result<Self> {
        check_len(self.theta.len(), g.len())?;
        let theta = self
            .theta
            .iter()
            .zip(g.as_slice())
            .map(|(t, d)| t - step * d)
            .collect();
        Ok(PolicyParameters {
            arch: self.arch,
            theta,
        })
    }
}

fn check_len(left: usize, right: usize) -> Result<()> {
    if left == right {
        Ok(())
    } else {
        Err(Error::LengthMismatch { left, right })
    }
}

/// A vector in parameter space, same layout as [`PolicyParameters`].
#[derive(Debug, Clone, PartialEq)]
pub struct GradientVector(Vec<f64>);

impl GradientVector {
    pub fn zeros(len: usize) -> Self {
        GradientVector(vec![0.0; len])
    }

    pub fn from_vec(values: Vec<f64>) -> Self {
        GradientVector(values)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn dot(&self, other: &GradientVector) -> Result<f64> {
        check_len(self.len(), other.len())?;
        Ok(self.0.iter().zip(&other.0).map(|(a, b)| a * b).sum())
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// `self += alpha * other`.
    pub fn add_scaled(&mut self, alpha: f64, other: &GradientVector) -> Result<()> {
        check_len(self.len(), other.len())?;
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            *a += alpha * b;
        }
        Ok(())
    }

    pub fn scale(&mut self, alpha: f64) {
        self.0.iter_mut().for_each(|v| *v *= alpha);
    }

    pub(crate) fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.0
    }
}
