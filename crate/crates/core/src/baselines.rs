//! Comparison selectors: greedy forward alignment and kernel RFE.

use serde::{Deserialize, Serialize};

use crate::alignment::sigest_gamma_masked;
use crate::dataset::{Dataset, PairStructure, SubsetMask};
use crate::error::{Error, Result};
use crate::solver::greedy_path;
use crate::svm::{train, SvmConfig};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceStep {
    pub feature: usize,
    pub value: f64,
}

/// Ordered selection (or elimination) decisions and the final mask.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionTrace {
    pub steps: Vec<TraceStep>,
    pub mask: SubsetMask,
}

/// Forward selection on the alignment objective. Step values are the
/// objective after each addition.
pub fn greedy_forward(ps: &PairStructure, theta: usize, gamma: f64) -> Result<SelectionTrace> {
    let (mask, _, path) = greedy_path(ps, theta, gamma)?;
    Ok(SelectionTrace {
        steps: path
            .into_iter()
            .map(|s| TraceStep {
                feature: s.feature,
                value: s.objective,
            })
            .collect(),
        mask,
    })
}

/// Change in the dual objective from dropping feature `j` with the
/// multipliers held fixed.
///
/// Only off-diagonal terms change, and for the Gaussian kernel
/// `k_{-j} = k * exp(gamma * d_j)`.
pub fn rfe_criterion(ps: &PairStructure, alpha: &[f64], y: &[i8], z: &[bool], gamma: f64, j: usize) -> f64 {
    let mut s = 0.0;
    for (k, &(i, h)) in ps.pairs().iter().enumerate() {
        let w = alpha[i] * alpha[h];
        if w == 0.0 {
            continue;
        }
        let d = ps.dist(k);
        let dz: f64 = d.iter().zip(z).filter(|(_, &on)| on).map(|(v, _)| v).sum();
        let kern = (-gamma * dz).exp();
        let without = (-gamma * (dz - d[j])).exp();
        s += w * f64::from(y[i]) * f64::from(y[h]) * (kern - without);
    }
    s.abs()
}

/// Kernel recursive feature elimination. Starting from all features, trains
/// the SVM, removes the feature with the smallest [`rfe_criterion`] (smallest
/// index on ties) and repeats until `theta` remain. `gamma` is re-estimated
/// with sigest on the surviving features and scaled by `beta`.
pub fn rfe_k(ds: &Dataset, theta: usize, c: f64, beta: f64) -> Result<SelectionTrace> {
    let p = ds.p();
    if theta < 1 || theta > p {
        return Err(Error::invalid(format!("theta must be in 1..={p}, got {theta}")));
    }
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::invalid(format!("beta must be positive, got {beta}")));
    }
    let ps = PairStructure::build_unchecked(ds)?;
    let mut z = vec![true; p];
    let mut steps = Vec::new();
    while steps.len() < p - theta {
        let gamma = beta * sigest_gamma_masked(&ps, &z, 1.0)?;
        let mask = SubsetMask::unbounded(z.clone());
        let model = train(ds, &mask, &SvmConfig::gaussian(gamma).with_c(c))?;
        let mut best: Option<(usize, f64)> = None;
        for j in (0..p).filter(|&j| z[j]) {
            let v = rfe_criterion(&ps, &model.alpha, ds.labels(), &z, gamma, j);
            if best.is_none_or(|(_, b)| v < b) {
                best = Some((j, v));
            }
        }
        let (j, v) = best.expect("at least theta + 1 features survive");
        z[j] = false;
        steps.push(TraceStep { feature: j, value: v });
    }
    Ok(SelectionTrace {
        steps,
        mask: SubsetMask::new(z, theta)?,
    })
}
