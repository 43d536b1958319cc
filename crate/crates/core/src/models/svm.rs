//! One-vs-rest soft-margin SVM trained with SMO.
//!
//! Each binary problem is the dual
//!
//! ```text
//! min  1/2 a'Qa - e'a    s.t.  y'a = 0,  0 <= a_i <= C * w_i
//! Q_ij = y_i y_j K(x_i, x_j)
//! ```
//!
//! solved two multipliers at a time with second-order working-set
//! selection, stopping once the maximal KKT violation `m(a) - M(a)` drops
//! below `tol`. Per-sample weights scale the box, so doubling a weight is
//! the same as duplicating the sample.

use alloc::string::String;
use alloc::vec::Vec;
use alloc::{format, vec};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::ModelError;
use crate::label::ClassLabel;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Kernel {
    Linear,
    Rbf { gamma: f64 },
}

impl Kernel {
    pub fn eval(&self, a: &[f64], b: &[f64]) -> f64 {
        match *self {
            Kernel::Linear => a.iter().zip(b).map(|(x, y)| x * y).sum(),
            Kernel::Rbf { gamma } => {
                let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
                libm::exp(-gamma * d2)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvcParams {
    pub c: f64,
    pub kernel: Kernel,
    /// KKT tolerance.
    pub tol: f64,
    pub max_iter: usize,
    /// Larger training sets are subsampled to this many rows (the Gram
    /// matrix is held in memory).
    pub max_samples: usize,
    pub seed: u64,
}

impl Default for SvcParams {
    fn default() -> Self {
        SvcParams {
            c: 1.0,
            kernel: Kernel::Rbf { gamma: 0.1 },
            tol: 1e-3,
            max_iter: 10_000_000,
            max_samples: 2000,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinarySvm {
    pub class: ClassLabel,
    /// `alpha_i * y_i` for every support vector, aligned with
    /// [`SvcModel::support_vectors`].
    pub coef: Vec<f64>,
    pub rho: f64,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvcModel {
    pub params: SvcParams,
    pub dim: usize,
    /// Rows (normalized) that are a support vector of at least one class.
    pub support_vectors: Vec<f64>,
    /// Index of each support vector in the training matrix.
    pub support_indices: Vec<usize>,
    pub machines: Vec<BinarySvm>,
}

impl SvcModel {
    fn support_vector(&self, k: usize) -> &[f64] {
        &self.support_vectors[k * self.dim..(k + 1) * self.dim]
    }

    /// Decision value of every one-vs-rest machine, in class order.
    pub fn decision_values(&self, x: &[f64]) -> Vec<f64> {
        let kx: Vec<f64> = (0..self.support_indices.len())
            .map(|k| self.params.kernel.eval(self.support_vector(k), x))
            .collect();
        self.machines
            .iter()
            .map(|m| m.coef.iter().zip(&kx).map(|(a, k)| a * k).sum::<f64>() - m.rho)
            .collect()
    }

    /// Class with the largest decision value; ties go to the lower class.
    pub fn predict(&self, x: &[f64]) -> ClassLabel {
        let d = self.decision_values(x);
        let mut best = 0;
        for i in 1..d.len() {
            if d[i] > d[best] {
                best = i;
            }
        }
        self.machines[best].class
    }

    pub fn converged(&self) -> bool {
        self.machines.iter().all(|m| m.converged)
    }
}

/// Working data of one binary SMO problem.
struct Smo<'a> {
    gram: &'a [f64],
    n: usize,
    y: Vec<f64>,
    cap: Vec<f64>,
    alpha: Vec<f64>,
    grad: Vec<f64>,
}

const TAU: f64 = 1e-12;

impl<'a> Smo<'a> {
    fn k(&self, i: usize, j: usize) -> f64 {
        self.gram[i * self.n + j]
    }

    fn in_up(&self, t: usize) -> bool {
        (self.y[t] > 0.0 && self.alpha[t] < self.cap[t]) || (self.y[t] < 0.0 && self.alpha[t] > 0.0)
    }

    fn in_low(&self, t: usize) -> bool {
        (self.y[t] > 0.0 && self.alpha[t] > 0.0) || (self.y[t] < 0.0 && self.alpha[t] < self.cap[t])
    }

    /// Second-order working set selection. `None` once optimal within `tol`.
    fn select(&self, tol: f64) -> Option<(usize, usize)> {
        let mut gmax = f64::NEG_INFINITY;
        let mut i = usize::MAX;
        for t in 0..self.n {
            if self.in_up(t) {
                let v = -self.y[t] * self.grad[t];
                if v > gmax {
                    gmax = v;
                    i = t;
                }
            }
        }
        if i == usize::MAX {
            return None;
        }
        let mut gmin = f64::INFINITY;
        let mut j = usize::MAX;
        let mut best_obj = f64::INFINITY;
        for t in 0..self.n {
            if !self.in_low(t) {
                continue;
            }
            let v = -self.y[t] * self.grad[t];
            gmin = gmin.min(v);
            let b = gmax - v;
            if b > 0.0 {
                let mut a = self.k(i, i) + self.k(t, t) - 2.0 * self.k(i, t);
                if a <= 0.0 {
                    a = TAU;
                }
                let obj = -(b * b) / a;
                if obj < best_obj {
                    best_obj = obj;
                    j = t;
                }
            }
        }
        if gmax - gmin < tol || j == usize::MAX {
            None
        } else {
            Some((i, j))
        }
    }

    fn update(&mut self, i: usize, j: usize) {
        let (yi, yj) = (self.y[i], self.y[j]);
        let (ci, cj) = (self.cap[i], self.cap[j]);
        let (old_i, old_j) = (self.alpha[i], self.alpha[j]);
        let mut quad = self.k(i, i) + self.k(j, j) - 2.0 * self.k(i, j);
        if quad <= 0.0 {
            quad = TAU;
        }
        if yi != yj {
            let delta = (-self.grad[i] - self.grad[j]) / quad;
            let diff = old_i - old_j;
            let mut ai = old_i + delta;
            let mut aj = old_j + delta;
            if diff > 0.0 {
                if aj < 0.0 {
                    aj = 0.0;
                    ai = diff;
                }
            } else if ai < 0.0 {
                ai = 0.0;
                aj = -diff;
            }
            if diff > ci - cj {
                if ai > ci {
                    ai = ci;
                    aj = ci - diff;
                }
            } else if aj > cj {
                aj = cj;
                ai = cj + diff;
            }
            self.alpha[i] = ai;
            self.alpha[j] = aj;
        } else {
            let delta = (self.grad[i] - self.grad[j]) / quad;
            let sum = old_i + old_j;
            let mut ai = old_i - delta;
            let mut aj = old_j + delta;
            if sum > ci {
                if ai > ci {
                    ai = ci;
                    aj = sum - ci;
                }
            } else if aj < 0.0 {
                aj = 0.0;
                ai = sum;
            }
            if sum > cj {
                if aj > cj {
                    aj = cj;
                    ai = sum - cj;
                }
            } else if ai < 0.0 {
                ai = 0.0;
                aj = sum;
            }
            self.alpha[i] = ai;
            self.alpha[j] = aj;
        }
        let di = self.alpha[i] - old_i;
        let dj = self.alpha[j] - old_j;
        for t in 0..self.n {
            let qti = self.y[t] * yi * self.k(i, t);
            let qtj = self.y[t] * yj * self.k(j, t);
            self.grad[t] += qti * di + qtj * dj;
        }
    }

    /// Bias from free multipliers, or the middle of the feasible interval
    /// when every multiplier sits at a bound.
    fn rho(&self) -> f64 {
        let mut ub = f64::INFINITY;
        let mut lb = f64::NEG_INFINITY;
        let mut sum = 0.0;
        let mut free = 0usize;
        for t in 0..self.n {
            let yg = self.y[t] * self.grad[t];
            let at_upper = self.alpha[t] >= self.cap[t];
            let at_lower = self.alpha[t] <= 0.0;
            if at_upper {
                if self.y[t] < 0.0 {
                    ub = ub.min(yg);
                } else {
                    lb = lb.max(yg);
                }
            } else if at_lower {
                if self.y[t] > 0.0 {
                    ub = ub.min(yg);
                } else {
                    lb = lb.max(yg);
                }
            } else {
                free += 1;
                sum += yg;
            }
        }
        if free > 0 {
            sum / free as f64
        } else {
            (ub + lb) / 2.0
        }
    }
}

pub(super) fn fit(
    x: &[f64],
    dim: usize,
    y: &[ClassLabel],
    w: &[f64],
    params: &SvcParams,
) -> Result<(SvcModel, Vec<String>), ModelError> {
    if !(params.c.is_finite() && params.c > 0.0) {
        return Err(ModelError::InvalidHyperparameter("C must be positive"));
    }
    if !(params.tol.is_finite() && params.tol > 0.0) {
        return Err(ModelError::InvalidHyperparameter("tol must be positive"));
    }
    if let Kernel::Rbf { gamma } = params.kernel {
        if !(gamma.is_finite() && gamma > 0.0) {
            return Err(ModelError::InvalidHyperparameter("gamma must be positive"));
        }
    }
    if params.max_samples < 2 {
        return Err(ModelError::InvalidHyperparameter("max_samples must be at least 2"));
    }
    let mut warnings = Vec::new();

    let mut rows: Vec<usize> = (0..y.len()).collect();
    if rows.len() > params.max_samples {
        let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
        rows.shuffle(&mut rng);
        rows.truncate(params.max_samples);
        rows.sort_unstable();
        warnings.push(format!("svc trained on a {}-row subsample of {} rows", rows.len(), y.len()));
    }
    let n = rows.len();
    let row = |i: usize| &x[rows[i] * dim..(rows[i] + 1) * dim];

    let mut gram = vec![0.0; n * n];
    for i in 0..n {
        for j in i..n {
            let v = params.kernel.eval(row(i), row(j));
            gram[i * n + j] = v;
            gram[j * n + i] = v;
        }
    }

    let mut classes: Vec<ClassLabel> = rows.iter().map(|&r| y[r]).collect();
    classes.sort();
    classes.dedup();
    if classes.len() < 2 {
        return Err(ModelError::TooFewClasses);
    }

    let cap: Vec<f64> = rows.iter().map(|&r| params.c * w[r]).collect();
    let mut machines = Vec::with_capacity(classes.len());
    let mut alphas = Vec::with_capacity(classes.len());
    for &class in &classes {
        let yk: Vec<f64> = rows.iter().map(|&r| if y[r] == class { 1.0 } else { -1.0 }).collect();
        let mut smo = Smo { gram: &gram, n, y: yk, cap: cap.clone(), alpha: vec![0.0; n], grad: vec![-1.0; n] };
        let mut iterations = 0;
        let mut converged = false;
        while iterations < params.max_iter {
            match smo.select(params.tol) {
                None => {
                    converged = true;
                    break;
                }
                Some((i, j)) => smo.update(i, j),
            }
            iterations += 1;
        }
        if !converged {
            warnings.push(format!(
                "svc machine for class {class} stopped at the iteration cap ({iterations}) before reaching tol {}",
                params.tol
            ));
        }
        let rho = smo.rho();
        machines.push(BinarySvm { class, coef: vec![], rho, iterations, converged });
        alphas.push((smo.alpha, smo.y));
    }

    let support: Vec<usize> = (0..n).filter(|&i| alphas.iter().any(|(a, _)| a[i] > 0.0)).collect();
    for (m, (a, yk)) in machines.iter_mut().zip(&alphas) {
        m.coef = support.iter().map(|&i| a[i] * yk[i]).collect();
    }
    let mut support_vectors = Vec::with_capacity(support.len() * dim);
    for &i in &support {
        support_vectors.extend_from_slice(row(i));
    }
    let model = SvcModel {
        params: *params,
        dim,
        support_vectors,
        support_indices: support.iter().map(|&i| rows[i]).collect(),
        machines,
    };
    Ok((model, warnings))
}
