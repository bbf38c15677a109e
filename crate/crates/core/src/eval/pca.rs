//! Two-component PCA of flattened parameter snapshots.
//!
//! The snapshot matrix `X` (n × d, mean-centered) is usually short and very
//! wide, so the power iteration runs on the n × n Gram matrix `X Xᵀ`, whose
//! eigenvectors `u` map to principal directions `Xᵀ u / ‖Xᵀ u‖`. Both routes
//! share the nonzero spectrum.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const PCA_TOLERANCE: f64 = 1e-10;
pub const PCA_MAX_ITERATIONS: usize = 10_000;
const MIN_TOTAL_VARIANCE: f64 = 1e-20;

/// Flattened `θ` recorded after one episode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySnapshot {
    pub segment: usize,
    pub episode: usize,
    pub theta: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Pca2 {
    /// `(pc1, pc2)` per snapshot, in snapshot order.
    pub points: Vec<[f64; 2]>,
    /// Unit-norm principal directions; each one's largest-magnitude entry
    /// is positive.
    pub components: [Vec<f64>; 2],
    /// Sum of squared projections on each component.
    pub explained: [f64; 2],
    pub total_variance: f64,
}

pub fn pca2(snapshots: &[TrajectorySnapshot]) -> Result<Pca2> {
    let n = snapshots.len();
    if n < 3 {
        return Err(Error::DegenerateTrajectory(format!(
            "{n} snapshots; at least 3 are needed (run more episodes)"
        )));
    }
    let d = snapshots[0].theta.len();
    if let Some(s) = snapshots.iter().find(|s| s.theta.len() != d) {
        return Err(Error::LengthMismatch {
            left: d,
            right: s.theta.len(),
        });
    }
    let mut mean = vec![0.0; d];
    for s in snapshots {
        for (m, v) in mean.iter_mut().zip(&s.theta) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);
    let x: Vec<Vec<f64>> = snapshots
        .iter()
        .map(|s| s.theta.iter().zip(&mean).map(|(v, m)| v - m).collect())
        .collect();

    let mut gram = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i..n {
            let g = dot(&x[i], &x[j]);
            gram[i][j] = g;
            gram[j][i] = g;
        }
    }
    let total: f64 = (0..n).map(|i| gram[i][i]).sum();
    if total < MIN_TOTAL_VARIANCE {
        return Err(Error::DegenerateTrajectory(format!(
            "total variance {total:e} below {MIN_TOTAL_VARIANCE:e}"
        )));
    }

    let mut components: [Vec<f64>; 2] = [Vec::new(), Vec::new()];
    for slot in 0..2 {
        let (u, lambda) = power_iteration(&gram);
        // deflate
        for i in 0..n {
            for j in 0..n {
                gram[i][j] -= lambda * u[i] * u[j];
            }
        }
        let mut c = vec![0.0; d];
        for (ui, row) in u.iter().zip(&x) {
            for (cj, xj) in c.iter_mut().zip(row) {
                *cj += ui * xj;
            }
        }
        if slot == 1 {
            let proj = dot(&c, &components[0]);
            for (cj, c0) in c.iter_mut().zip(&components[0]) {
                *cj -= proj * c0;
            }
        }
        let norm = dot(&c, &c).sqrt();
        if lambda > total * 1e-24 && norm > 1e-12 * total.sqrt() {
            c.iter_mut().for_each(|v| *v /= norm);
        } else if slot == 0 {
            unreachable!("total variance is positive so the top direction exists");
        } else {
            c = orthogonal_unit(&components[0]);
        }
        canonicalize_sign(&mut c);
        components[slot] = c;
    }

    let points: Vec<[f64; 2]> = x
        .iter()
        .map(|row| [dot(row, &components[0]), dot(row, &components[1])])
        .collect();
    let explained = [
        points.iter().map(|p| p[0] * p[0]).sum(),
        points.iter().map(|p| p[1] * p[1]).sum(),
    ];
    Ok(Pca2 {
        points,
        components,
        explained,
        total_variance: total,
    })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Dominant eigenpair of a symmetric PSD matrix. Stops when successive unit
/// iterates differ by less than [`PCA_TOLERANCE`] or the image vanishes.
fn power_iteration(m: &[Vec<f64>]) -> (Vec<f64>, f64) {
    let n = m.len();
    let mut v: Vec<f64> = (0..n).map(|i| (1.0 + 2.3 * i as f64).sin()).collect();
    let norm = dot(&v, &v).sqrt();
    v.iter_mut().for_each(|x| *x /= norm);
    for _ in 0..PCA_MAX_ITERATIONS {
        let mut w: Vec<f64> = m.iter().map(|row| dot(row, &v)).collect();
        let norm = dot(&w, &w).sqrt();
        if norm < 1e-300 {
            return (v, 0.0);
        }
        w.iter_mut().for_each(|x| *x /= norm);
        let diff = w
            .iter()
            .zip(&v)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        v = w;
        if diff < PCA_TOLERANCE {
            break;
        }
    }
    let mv: Vec<f64> = m.iter().map(|row| dot(row, &v)).collect();
    let lambda = dot(&v, &mv).max(0.0);
    (v, lambda)
}

/// Some unit vector orthogonal to `c`, from the standard basis vector that
/// keeps the largest residual.
fn orthogonal_unit(c: &[f64]) -> Vec<f64> {
    let (best, _) = c
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (i, v)| {
            if v.abs() < acc.1 {
                (i, v.abs())
            } else {
                acc
            }
        });
    let mut e = vec![0.0; c.len()];
    e[best] = 1.0;
    let proj = c[best];
    for (ej, cj) in e.iter_mut().zip(c) {
        *ej -= proj * cj;
    }
    let norm = dot(&e, &e).sqrt();
    e.iter_mut().for_each(|v| *v /= norm);
    e
}

fn canonicalize_sign(c: &mut [f64]) {
    let mut best = 0;
    for (i, v) in c.iter().enumerate() {
        if v.abs() > c[best].abs() {
            best = i;
        }
    }
    if c[best] < 0.0 {
        c.iter_mut().for_each(|v| *v = -*v);
    }
}

/// `step,segment,episode,pc1,pc2` rows, one per snapshot.
pub fn render_pca_csv(snapshots: &[TrajectorySnapshot], pca: &Pca2) -> String {
    let mut out = String::from("step,segment,episode,pc1,pc2\n");
    for (step, (s, p)) in snapshots.iter().zip(&pca.points).enumerate() {
        let _ = writeln!(out, "{step},{},{},{},{}", s.segment, s.episode, p[0], p[1]);
    }
    out
}
