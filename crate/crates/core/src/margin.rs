//! Soft-margin linear classifier over binary document vectors.
//!
//! Solves
//!
//! ```text
//! min ½‖w‖² + C Σ ξ_i   s.t.  c_i (w·x_i − b) ≥ 1 − ξ_i,  ξ_i ≥ 0
//! ```
//!
//! through its dual with sequential minimal optimization (maximal-violating
//! pair with second-order working-set selection). With binary features the
//! linear kernel `x_i·x_j` is the shared-term count, kept as an integer Gram
//! matrix.

use alloc::format;
use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::corpus::BinaryVector;
use crate::error::{Error, Result};

pub const DEFAULT_C: f64 = 1.0;
/// Dual optimality tolerance used while training.
pub const SOLVER_EPS: f64 = 1e-4;
/// Bound on the per-point KKT violation of a trained model.
pub const KKT_TOL: f64 = 1e-3;
const TAU: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarginModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub c_param: f64,
    pub training_accuracy: f64,
    pub iterations: usize,
}

impl MarginModel {
    /// `w·x − b`.
    pub fn decision(&self, x: &BinaryVector) -> f64 {
        x.dot_dense(&self.weights) - self.bias
    }

    pub fn predict(&self, x: &BinaryVector) -> i8 {
        if self.decision(x) > 0.0 {
            1
        } else {
            -1
        }
    }
}

/// Largest KKT violation over the training points, measured on the primal
/// margins `c_i (w·x_i − b)` against the dual variables.
pub fn kkt_violation(model: &MarginModel, alphas: &[f64], vectors: &[&BinaryVector], labels: &[i8]) -> f64 {
    let c = model.c_param;
    vectors
        .iter()
        .zip(labels)
        .zip(alphas)
        .map(|((x, &y), &a)| {
            let margin = y as f64 * model.decision(x);
            if a <= 0.0 {
                (1.0 - margin).max(0.0)
            } else if a >= c {
                (margin - 1.0).max(0.0)
            } else {
                libm::fabs(margin - 1.0)
            }
        })
        .fold(0.0, f64::max)
}

/// Trains the classifier. `labels` are ±1, one per vector; both classes
/// must be present. Also returns the dual variables.
pub fn train_with_duals(
    vectors: &[&BinaryVector],
    labels: &[i8],
    n_features: usize,
    c_param: f64,
) -> Result<(MarginModel, Vec<f64>)> {
    let n = vectors.len();
    if labels.len() != n {
        return Err(Error::InvalidArgument(format!(
            "{} labels for {} vectors",
            labels.len(),
            n
        )));
    }
    if !(c_param > 0.0) {
        return Err(Error::InvalidArgument(format!("C must be positive, got {c_param}")));
    }
    if labels.iter().any(|&y| y != 1 && y != -1) {
        return Err(Error::InvalidArgument("labels must be +1 or -1".to_string()));
    }
    if !labels.contains(&1) || !labels.contains(&-1) {
        return Err(Error::DegenerateTraining(
            "both classes must be present".to_string(),
        ));
    }
    if let Some(bad) = vectors
        .iter()
        .flat_map(|v| v.indices())
        .find(|&&j| j as usize >= n_features)
    {
        return Err(Error::InvalidArgument(format!(
            "feature {bad} outside 0..{n_features}"
        )));
    }

    let gram = gram_matrix(vectors, n_features);
    let k = |i: usize, j: usize| gram[i * n + j] as f64;
    let y: Vec<f64> = labels.iter().map(|&l| l as f64).collect();
    let c = c_param;
    let mut alpha = vec![0.0; n];
    // gradient of ½αᵀQα − eᵀα with Q_ij = y_i y_j K_ij
    let mut grad = vec![-1.0; n];
    let max_iter = 10_000_000usize.max(100 * n);
    let mut iter = 0;

    let is_upper = |a: f64| a >= c;
    let is_lower = |a: f64| a <= 0.0;

    loop {
        // select i: maximal violation from I_up
        let mut gmax = f64::NEG_INFINITY;
        let mut i_sel = None;
        for t in 0..n {
            let v = -y[t] * grad[t];
            let in_up = if y[t] > 0.0 { !is_upper(alpha[t]) } else { !is_lower(alpha[t]) };
            if in_up && v >= gmax {
                gmax = v;
                i_sel = Some(t);
            }
        }
        let mut gmax2 = f64::NEG_INFINITY;
        let mut j_sel = None;
        let mut obj_min = f64::INFINITY;
        if let Some(i) = i_sel {
            for t in 0..n {
                let in_low = if y[t] > 0.0 { !is_lower(alpha[t]) } else { !is_upper(alpha[t]) };
                if !in_low {
                    continue;
                }
                let v = y[t] * grad[t];
                if v >= gmax2 {
                    gmax2 = v;
                }
                let grad_diff = gmax + v;
                if grad_diff > 0.0 {
                    let mut quad = k(i, i) + k(t, t) - 2.0 * k(i, t);
                    if quad <= 0.0 {
                        quad = TAU;
                    }
                    let obj = -(grad_diff * grad_diff) / quad;
                    if obj <= obj_min {
                        obj_min = obj;
                        j_sel = Some(t);
                    }
                }
            }
        }
        let (Some(i), Some(j)) = (i_sel, j_sel) else {
            break;
        };
        if gmax + gmax2 < SOLVER_EPS {
            break;
        }
        iter += 1;
        if iter > max_iter {
            log::warn!("SMO reached its iteration cap ({max_iter})");
            break;
        }

        let (old_i, old_j) = (alpha[i], alpha[j]);
        let mut quad = k(i, i) + k(j, j) - 2.0 * k(i, j);
        if quad <= 0.0 {
            quad = TAU;
        }
        if y[i] != y[j] {
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > c {
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }
        let di = alpha[i] - old_i;
        let dj = alpha[j] - old_j;
        for t in 0..n {
            grad[t] += y[t] * (y[i] * k(i, t) * di + y[j] * k(j, t) * dj);
        }
    }

    let bias = bias_from_gradient(&alpha, &grad, &y, c);
    let mut weights = vec![0.0; n_features];
    for (t, x) in vectors.iter().enumerate() {
        if alpha[t] != 0.0 {
            let coef = alpha[t] * y[t];
            for &f in x.indices() {
                weights[f as usize] += coef;
            }
        }
    }
    let mut model = MarginModel {
        weights,
        bias,
        c_param,
        training_accuracy: 0.0,
        iterations: iter,
    };
    let correct = vectors
        .iter()
        .zip(labels)
        .filter(|(x, &l)| model.predict(x) == l)
        .count();
    model.training_accuracy = correct as f64 / n as f64;
    Ok((model, alpha))
}

/// Trains the classifier; see [`train_with_duals`].
pub fn train_margin_classifier(
    vectors: &[&BinaryVector],
    labels: &[i8],
    n_features: usize,
    c_param: f64,
) -> Result<MarginModel> {
    train_with_duals(vectors, labels, n_features, c_param).map(|(m, _)| m)
}

/// Offset `b` from the final gradient: the mean of `y_i G_i` over free
/// variables, or the midpoint of the feasible interval when none is free.
fn bias_from_gradient(alpha: &[f64], grad: &[f64], y: &[f64], c: f64) -> f64 {
    let mut upper = f64::INFINITY;
    let mut lower = f64::NEG_INFINITY;
    let mut free = 0usize;
    let mut sum_free = 0.0;
    for t in 0..alpha.len() {
        let yg = y[t] * grad[t];
        if alpha[t] >= c {
            if y[t] < 0.0 {
                upper = upper.min(yg);
            } else {
                lower = lower.max(yg);
            }
        } else if alpha[t] <= 0.0 {
            if y[t] > 0.0 {
                upper = upper.min(yg);
            } else {
                lower = lower.max(yg);
            }
        } else {
            free += 1;
            sum_free += yg;
        }
    }
    if free > 0 {
        sum_free / free as f64
    } else {
        (upper + lower) / 2.0
    }
}

fn gram_matrix(vectors: &[&BinaryVector], n_features: usize) -> Vec<u32> {
    let n = vectors.len();
    let mut postings = vec![Vec::new(); n_features];
    for (i, v) in vectors.iter().enumerate() {
        for &f in v.indices() {
            postings[f as usize].push(i);
        }
    }
    let mut gram = vec![0u32; n * n];
    for (i, v) in vectors.iter().enumerate() {
        let row = &mut gram[i * n..(i + 1) * n];
        for &f in v.indices() {
            for &j in &postings[f as usize] {
                row[j] += 1;
            }
        }
    }
    gram
}
