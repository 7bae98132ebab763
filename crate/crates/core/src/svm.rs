//! Soft-margin kernel SVM trained in the dual by two-variable coordinate
//! ascent (SMO with second-order working-set selection).

use serde::{Deserialize, Serialize};

use crate::alignment::subset_kernel_raw;
use crate::dataset::{Dataset, SubsetMask};
use crate::error::{Error, Result};

/// Curvature floor for non-positive-definite pairs.
const TAU: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum KernelSpec {
    Gaussian { gamma: f64 },
    Linear,
}

impl KernelSpec {
    pub fn gamma(&self) -> Option<f64> {
        match self {
            KernelSpec::Gaussian { gamma } => Some(*gamma),
            KernelSpec::Linear => None,
        }
    }

    pub fn eval(&self, a: &[f64], b: &[f64], z: &[bool]) -> f64 {
        match *self {
            KernelSpec::Gaussian { gamma } => subset_kernel_raw(a, b, z, gamma),
            KernelSpec::Linear => a
                .iter()
                .zip(b)
                .zip(z)
                .filter(|(_, &on)| on)
                .map(|((u, v), _)| u * v)
                .sum(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvmConfig {
    pub c: f64,
    /// Stopping tolerance on the maximal KKT violation.
    pub tol: f64,
    pub max_iter: usize,
    pub kernel: KernelSpec,
}

impl SvmConfig {
    pub fn gaussian(gamma: f64) -> Self {
        Self {
            c: 1.0,
            tol: 1e-6,
            max_iter: 10_000_000,
            kernel: KernelSpec::Gaussian { gamma },
        }
    }

    pub fn linear() -> Self {
        Self {
            kernel: KernelSpec::Linear,
            ..Self::gaussian(1.0)
        }
    }

    pub fn with_c(mut self, c: f64) -> Self {
        self.c = c;
        self
    }
}

/// A trained classifier. Support vectors are stored so the model predicts on
/// its own.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    pub alpha: Vec<f64>,
    pub b: f64,
    #[serde(rename = "C")]
    pub c: f64,
    pub gamma: Option<f64>,
    pub z: Vec<u8>,
    pub support_indices: Vec<usize>,
    pub kernel: KernelSpec,
    pub support_vectors: Vec<Vec<f64>>,
    pub support_labels: Vec<i8>,
    pub iterations: usize,
    pub dual_objective: f64,
}

/// Row-major `n x n` kernel matrix on the masked features.
pub fn kernel_matrix(ds: &Dataset, z: &[bool], kernel: KernelSpec) -> Vec<f64> {
    let n = ds.n();
    let mut k = vec![0.0; n * n];
    for i in 0..n {
        for h in i..n {
            let v = kernel.eval(ds.row(i), ds.row(h), z);
            k[i * n + h] = v;
            k[h * n + i] = v;
        }
    }
    k
}

/// `sum_i alpha_i - 1/2 sum_i sum_h alpha_i alpha_h y_i y_h k_ih`.
pub fn dual_objective(alpha: &[f64], y: &[i8], k: &[f64]) -> Result<f64> {
    let n = alpha.len();
    if y.len() != n || k.len() != n * n {
        return Err(Error::Dimension(format!(
            "alpha {n}, labels {}, kernel {} entries",
            y.len(),
            k.len()
        )));
    }
    let mut quad = 0.0;
    for i in 0..n {
        if alpha[i] == 0.0 {
            continue;
        }
        let mut row = 0.0;
        for h in 0..n {
            row += alpha[h] * f64::from(y[h]) * k[i * n + h];
        }
        quad += alpha[i] * f64::from(y[i]) * row;
    }
    Ok(alpha.iter().sum::<f64>() - 0.5 * quad)
}

/// Bias from the KKT conditions: the mean of `y_i - sum_h alpha_h y_h k_hi`
/// over unbounded support vectors, or the midpoint of the feasible interval
/// when every multiplier sits at a bound.
pub fn compute_bias(alpha: &[f64], y: &[i8], k: &[f64], c: f64) -> Result<f64> {
    let n = alpha.len();
    if y.len() != n || k.len() != n * n {
        return Err(Error::Dimension("bias inputs disagree in size".into()));
    }
    if alpha.iter().all(|&a| a <= 0.0) {
        return Err(Error::invalid("no support vectors"));
    }
    let mut lo = f64::NEG_INFINITY;
    let mut hi = f64::INFINITY;
    let mut free_sum = 0.0;
    let mut free = 0usize;
    for i in 0..n {
        let f: f64 = (0..n).map(|h| alpha[h] * f64::from(y[h]) * k[h * n + i]).sum();
        // b making y_i f(x_i) = 1 exactly.
        let b_i = f64::from(y[i]) - f;
        let up = alpha[i] >= c;
        let low = alpha[i] <= 0.0;
        if !up && !low {
            free += 1;
            free_sum += b_i;
        } else if (up && y[i] == 1) || (low && y[i] == -1) {
            // Needs y_i f_i <= 1 (at C, y=+1) or y_i f_i >= 1 (at 0, y=-1): b <= b_i.
            hi = hi.min(b_i);
        } else {
            lo = lo.max(b_i);
        }
    }
    if free > 0 {
        return Ok(free_sum / free as f64);
    }
    Ok(match (lo.is_finite(), hi.is_finite()) {
        (true, true) => 0.5 * (lo + hi),
        (true, false) => lo,
        (false, true) => hi,
        (false, false) => 0.0,
    })
}

/// Outcome of the raw dual solve.
#[derive(Debug, Clone)]
pub struct DualSolution {
    pub alpha: Vec<f64>,
    pub iterations: usize,
    /// Dual objective after every update, when requested.
    pub trace: Vec<f64>,
}

/// Solves the dual for a precomputed kernel matrix.
pub fn solve_dual(y: &[i8], k: &[f64], cfg: &SvmConfig, record_trace: bool) -> Result<DualSolution> {
    let n = y.len();
    if k.len() != n * n {
        return Err(Error::Dimension("kernel matrix size".into()));
    }
    if !(cfg.c > 0.0 && cfg.c.is_finite()) {
        return Err(Error::invalid(format!("C must be positive, got {}", cfg.c)));
    }
    if cfg.tol.is_nan() || cfg.tol <= 0.0 {
        return Err(Error::invalid("tolerance must be positive"));
    }
    if !(y.contains(&1) && y.contains(&-1)) {
        return Err(Error::LabelBalance("training needs both classes".into()));
    }
    let c = cfg.c;
    let yf: Vec<f64> = y.iter().map(|&v| f64::from(v)).collect();
    let q = |i: usize, j: usize| yf[i] * yf[j] * k[i * n + j];
    let mut alpha = vec![0.0; n];
    // Gradient of 1/2 a'Qa - e'a.
    let mut grad = vec![-1.0; n];
    let mut trace = Vec::new();
    let dual = |alpha: &[f64], grad: &[f64]| -> f64 {
        -0.5 * alpha.iter().zip(grad).map(|(a, g)| a * (g - 1.0)).sum::<f64>()
    };
    if record_trace {
        trace.push(0.0);
    }

    let mut iter = 0;
    loop {
        // i: maximal violator in I_up.
        let mut gmax = f64::NEG_INFINITY;
        let mut i_sel = None;
        for t in 0..n {
            let in_up = (y[t] == 1 && alpha[t] < c) || (y[t] == -1 && alpha[t] > 0.0);
            if in_up {
                let v = -yf[t] * grad[t];
                if v > gmax {
                    gmax = v;
                    i_sel = Some(t);
                }
            }
        }
        // j: second-order choice in I_low.
        let mut gmin = f64::INFINITY;
        let mut best_gain = f64::INFINITY;
        let mut j_sel = None;
        if let Some(i) = i_sel {
            for t in 0..n {
                let in_low = (y[t] == -1 && alpha[t] < c) || (y[t] == 1 && alpha[t] > 0.0);
                if !in_low {
                    continue;
                }
                let v = -yf[t] * grad[t];
                gmin = gmin.min(v);
                let b = gmax - v;
                if b > 0.0 {
                    let mut a = k[i * n + i] + k[t * n + t] - 2.0 * k[i * n + t];
                    if a <= 0.0 {
                        a = TAU;
                    }
                    let gain = -(b * b) / a;
                    if gain < best_gain {
                        best_gain = gain;
                        j_sel = Some(t);
                    }
                }
            }
        }
        let (i, j) = match (i_sel, j_sel) {
            (Some(i), Some(j)) if gmax - gmin >= cfg.tol => (i, j),
            _ => break,
        };
        if iter >= cfg.max_iter {
            return Err(Error::NotConverged {
                iterations: iter,
                dual_objective: dual(&alpha, &grad),
            });
        }
        iter += 1;

        let (old_i, old_j) = (alpha[i], alpha[j]);
        if y[i] != y[j] {
            let mut quad = k[i * n + i] + k[j * n + j] + 2.0 * q(i, j);
            if quad <= 0.0 {
                quad = TAU;
            }
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
            let mut quad = k[i * n + i] + k[j * n + j] - 2.0 * q(i, j);
            if quad <= 0.0 {
                quad = TAU;
            }
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
        let (di, dj) = (alpha[i] - old_i, alpha[j] - old_j);
        for t in 0..n {
            grad[t] += q(t, i) * di + q(t, j) * dj;
        }
        if record_trace {
            trace.push(dual(&alpha, &grad));
        }
    }
    Ok(DualSolution {
        alpha,
        iterations: iter,
        trace,
    })
}

/// Trains on the features selected by `z`.
pub fn train(ds: &Dataset, z: &SubsetMask, cfg: &SvmConfig) -> Result<SvmModel> {
    if z.len() != ds.p() {
        return Err(Error::Dimension(format!("mask has {} entries, dataset has p = {}", z.len(), ds.p())));
    }
    if let KernelSpec::Gaussian { gamma } = cfg.kernel {
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(Error::invalid(format!("gamma must be positive, got {gamma}")));
        }
    }
    let y = ds.labels();
    let k = kernel_matrix(ds, z.as_slice(), cfg.kernel);
    let sol = solve_dual(y, &k, cfg, false)?;
    let b = compute_bias(&sol.alpha, y, &k, cfg.c)?;
    let dual_objective = dual_objective(&sol.alpha, y, &k)?;
    let support_indices: Vec<usize> = (0..ds.n()).filter(|&i| sol.alpha[i] > 0.0).collect();
    Ok(SvmModel {
        b,
        c: cfg.c,
        gamma: cfg.kernel.gamma(),
        z: z.to_bits(),
        support_vectors: support_indices.iter().map(|&i| ds.row(i).to_vec()).collect(),
        support_labels: support_indices.iter().map(|&i| y[i]).collect(),
        support_indices,
        kernel: cfg.kernel,
        iterations: sol.iterations,
        dual_objective,
        alpha: sol.alpha,
    })
}

impl SvmModel {
    fn mask(&self) -> Vec<bool> {
        self.z.iter().map(|&b| b == 1).collect()
    }

    /// `sum_sv alpha_i y_i k(x_i, x) + b`.
    pub fn decision(&self, x: &[f64]) -> f64 {
        let z = self.mask();
        self.decision_masked(x, &z)
    }

    fn decision_masked(&self, x: &[f64], z: &[bool]) -> f64 {
        let mut f = self.b;
        for ((&i, sv), &label) in self.support_indices.iter().zip(&self.support_vectors).zip(&self.support_labels) {
            f += self.alpha[i] * f64::from(label) * self.kernel.eval(sv, x, z);
        }
        f
    }

    /// Sign of the decision value; zero maps to +1.
    pub fn predict(&self, x: &[f64]) -> Result<i8> {
        if x.len() != self.z.len() {
            return Err(Error::Dimension(format!("expected {} features, got {}", self.z.len(), x.len())));
        }
        Ok(if self.decision(x) >= 0.0 { 1 } else { -1 })
    }

    pub fn predict_dataset(&self, ds: &Dataset) -> Result<Vec<i8>> {
        if ds.p() != self.z.len() {
            return Err(Error::Dimension(format!("expected {} features, got {}", self.z.len(), ds.p())));
        }
        let z = self.mask();
        Ok((0..ds.n())
            .map(|i| if self.decision_masked(ds.row(i), &z) >= 0.0 { 1 } else { -1 })
            .collect())
    }
}
