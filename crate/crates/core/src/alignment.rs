//! Subset Gaussian kernel and kernel-target alignment objectives.

use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, PairStructure, SubsetMask};
use crate::error::{Error, Result};
use crate::par::{self, Parallelism};

/// Gaussian scale `gamma` and the multiplier `beta` applied to the sigest
/// estimate (`gamma = beta * gamma_hat`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelConfig {
    pub gamma: f64,
    pub beta: f64,
}

impl KernelConfig {
    pub fn new(gamma: f64, beta: f64) -> Result<Self> {
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(Error::invalid(format!("gamma must be positive, got {gamma}")));
        }
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(Error::invalid(format!("beta must be positive, got {beta}")));
        }
        Ok(Self { gamma, beta })
    }

    /// `gamma = beta * gamma_hat` with `gamma_hat` from [`sigest_gamma`].
    pub fn from_sigest(ps: &PairStructure, theta: usize, beta: f64) -> Result<Self> {
        let gamma_hat = sigest_gamma(ps, theta)?;
        Self::new(beta * gamma_hat, beta)
    }
}

/// Squared distance restricted to the selected features, summed in feature
/// order.
#[inline]
pub fn masked_sq_dist(dists: &[f64], z: &[bool]) -> f64 {
    let mut s = 0.0;
    for (d, &on) in dists.iter().zip(z) {
        if on {
            s += d;
        }
    }
    s
}

/// `exp(-gamma * sum_j z_j d_j)`.
pub fn subset_kernel(pair_dists: &[f64], z: &SubsetMask, gamma: f64) -> f64 {
    (-gamma * masked_sq_dist(pair_dists, z.as_slice())).exp()
}

/// `sum_{i<h} psi_i psi_h k_z(x_i, x_h)`.
pub fn reduced_objective(ps: &PairStructure, z: &SubsetMask, gamma: f64) -> f64 {
    reduced_objective_with(ps, z.as_slice(), gamma, Parallelism::default())
}

pub fn reduced_objective_with(ps: &PairStructure, z: &[bool], gamma: f64, mode: Parallelism) -> f64 {
    debug_assert_eq!(z.len(), ps.p());
    par::sum(ps.num_pairs(), mode, |k| {
        ps.weight(k) * (-gamma * masked_sq_dist(ps.dist(k), z)).exp()
    })
}

/// Kernel-target alignment `sum_i sum_h psi_i psi_h k_z(x_i, x_h)`, evaluated
/// as the diagonal part plus twice the pair sum.
pub fn alignment_objective(ps: &PairStructure, z: &SubsetMask, gamma: f64) -> f64 {
    ps.psi_sq_sum() + 2.0 * reduced_objective(ps, z, gamma)
}

pub fn alignment_objective_with(ps: &PairStructure, z: &[bool], gamma: f64, mode: Parallelism) -> f64 {
    ps.psi_sq_sum() + 2.0 * reduced_objective_with(ps, z, gamma, mode)
}

/// Reference evaluation of the alignment over all `n^2` ordered pairs,
/// straight from the feature matrix. Slow; kept for cross-checks.
pub fn alignment_objective_full(ds: &Dataset, z: &SubsetMask, gamma: f64) -> Result<f64> {
    if z.len() != ds.p() {
        return Err(Error::Dimension(format!("mask has {} entries, dataset has p = {}", z.len(), ds.p())));
    }
    let psi = crate::dataset::scaled_labels(ds.labels())?;
    let mut total = 0.0;
    for i in 0..ds.n() {
        for h in 0..ds.n() {
            let d: f64 = ds
                .row(i)
                .iter()
                .zip(ds.row(h))
                .zip(z.as_slice())
                .filter(|(_, &on)| on)
                .map(|((a, b), _)| (a - b) * (a - b))
                .sum();
            total += psi[i] * psi[h] * (-gamma * d).exp();
        }
    }
    Ok(total)
}

/// Plain Gaussian kernel `exp(-gamma ||a - b||^2)`.
pub fn gaussian_kernel(a: &[f64], b: &[f64], gamma: f64) -> f64 {
    let d: f64 = a.iter().zip(b).map(|(u, v)| (u - v) * (u - v)).sum();
    (-gamma * d).exp()
}

/// Subset Gaussian kernel between two raw feature vectors.
pub fn subset_kernel_raw(a: &[f64], b: &[f64], z: &[bool], gamma: f64) -> f64 {
    let mut d = 0.0;
    for ((u, v), &on) in a.iter().zip(b).zip(z) {
        if on {
            d += (u - v) * (u - v);
        }
    }
    (-gamma * d).exp()
}

/// Normalized alignment `(K . yy^T) / (n ||K||_F)` of an `n x n` row-major
/// kernel matrix.
pub fn normalized_alignment(k: &[f64], y: &[i8]) -> Result<f64> {
    let n = y.len();
    if k.len() != n * n {
        return Err(Error::Dimension(format!("kernel has {} entries, expected {n}^2", k.len())));
    }
    if k.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("kernel entries must be finite"));
    }
    let mut num = 0.0;
    let mut fro = 0.0;
    for i in 0..n {
        for h in 0..n {
            let v = k[i * n + h];
            num += f64::from(y[i]) * f64::from(y[h]) * v;
            fro += v * v;
        }
    }
    if fro == 0.0 {
        return Err(Error::invalid("kernel matrix has zero Frobenius norm"));
    }
    Ok(num / (n as f64 * fro.sqrt()))
}

/// Median with the midpoint rule for even lengths.
pub fn median(values: &mut [f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(f64::total_cmp);
    let m = values.len();
    Some(if m % 2 == 1 {
        values[m / 2]
    } else {
        0.5 * (values[m / 2 - 1] + values[m / 2])
    })
}

/// sigest estimate `1 / median{(theta / p) * sum_j d_ihj : (i, h) in H}` over
/// all `p` features of the pair structure.
pub fn sigest_gamma(ps: &PairStructure, theta: usize) -> Result<f64> {
    let all = vec![true; ps.p()];
    sigest_gamma_masked(ps, &all, theta as f64 / ps.p() as f64)
}

/// sigest over the features selected in `z`, with an explicit scale factor on
/// the pair distances.
pub fn sigest_gamma_masked(ps: &PairStructure, z: &[bool], scale: f64) -> Result<f64> {
    if ps.num_pairs() == 0 {
        return Err(Error::invalid("sigest needs at least one instance pair"));
    }
    if scale.is_nan() || scale <= 0.0 {
        return Err(Error::invalid("sigest scale must be positive"));
    }
    let mut sums: Vec<f64> = (0..ps.num_pairs())
        .map(|k| scale * masked_sq_dist(ps.dist(k), z))
        .collect();
    let med = median(&mut sums).unwrap_or(0.0);
    if med <= 0.0 {
        return Err(Error::invalid("median pairwise distance is zero; too many duplicate instances"));
    }
    Ok(1.0 / med)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::standardize;

    fn two_point() -> PairStructure {
        PairStructure::from_distances(&[1, -1], 1, vec![1.0]).unwrap()
    }

    #[test]
    fn kernel_values() {
        let z0 = SubsetMask::empty(2, 2).unwrap();
        assert_eq!(subset_kernel(&[3.0, 4.0], &z0, 1.0), 1.0);
        let z1 = SubsetMask::new(vec![true], 1).unwrap();
        assert!((subset_kernel(&[1.0], &z1, 1.0) - 0.3678794).abs() < 1e-7);
        assert_eq!(subset_kernel(&[0.0], &z1, 5.0), 1.0);
    }

    #[test]
    fn two_point_objectives() {
        let ps = two_point();
        let z = SubsetMask::new(vec![true], 1).unwrap();
        let e1 = (-1.0f64).exp();
        assert!((alignment_objective(&ps, &z, 1.0) - 1.2642411).abs() < 1e-7);
        assert!((alignment_objective(&ps, &z, 1.0) - (2.0 - 2.0 * e1)).abs() < 1e-15);
        assert!((reduced_objective(&ps, &z, 1.0) + 0.3678794).abs() < 1e-7);
    }

    #[test]
    fn empty_mask_objectives() {
        let ps = PairStructure::from_distances(&[1, 1, -1, -1, -1], 2, vec![1.5; 20]).unwrap();
        let z = SubsetMask::empty(2, 1).unwrap();
        assert!(alignment_objective(&ps, &z, 2.0).abs() < 1e-12);
        assert!((reduced_objective(&ps, &z, 2.0) + ps.psi_sq_sum() / 2.0).abs() < 1e-12);
    }

    #[test]
    fn single_plus_pair_with_zero_distance() {
        let ps = PairStructure::from_distances(&[1, 1, -1], 1, vec![0.0, 5.0, 5.0]).unwrap();
        let z = SubsetMask::new(vec![true], 1).unwrap();
        let plus_only: f64 = ps.plus().iter().map(|&k| ps.weight(k) * subset_kernel(ps.dist(k), &z, 1.0)).sum();
        assert_eq!(plus_only, 0.25);
    }

    #[test]
    fn normalized_alignment_cases() {
        let y = [1i8, -1, 1, -1];
        let n = y.len();
        let yy: Vec<f64> = (0..n * n).map(|k| f64::from(y[k / n] * y[k % n])).collect();
        assert!((normalized_alignment(&yy, &y).unwrap() - 1.0).abs() < 1e-15);
        let eye: Vec<f64> = (0..n * n).map(|k| if k / n == k % n { 1.0 } else { 0.0 }).collect();
        assert!((normalized_alignment(&eye, &y).unwrap() - 0.5).abs() < 1e-15);
        let ones = vec![1.0; n * n];
        assert_eq!(normalized_alignment(&ones, &y).unwrap(), 0.0);
        assert!(normalized_alignment(&vec![0.0; n * n], &y).is_err());
    }

    #[test]
    fn sigest_on_standardized_column() {
        let ds = Dataset::new(vec![1.0, 2.0, 3.0], vec![1, 1, -1], vec!["a".into()]).unwrap();
        let s = standardize(&ds).unwrap().dataset;
        let ps = PairStructure::build(&s).unwrap();
        let g = sigest_gamma(&ps, 1).unwrap();
        assert!((g - 0.6666667).abs() < 1e-7);
    }

    #[test]
    fn sigest_scales_with_theta() {
        let ps = PairStructure::from_distances(&[1, -1, 1, -1], 4, (0..24).map(|v| v as f64 * 0.5).collect()).unwrap();
        let g4 = sigest_gamma(&ps, 4).unwrap();
        let g2 = sigest_gamma(&ps, 2).unwrap();
        assert!((g2 - 2.0 * g4).abs() < 1e-12);
    }

    #[test]
    fn sigest_rejects_zero_median() {
        let ps = PairStructure::from_distances(&[1, -1, 1], 1, vec![0.0; 3]).unwrap();
        assert!(sigest_gamma(&ps, 1).is_err());
    }

    #[test]
    fn median_rules() {
        assert_eq!(median(&mut [3.0, 1.0, 2.0]), Some(2.0));
        assert_eq!(median(&mut [4.0, 1.0, 2.0, 3.0]), Some(2.5));
        assert_eq!(median(&mut []), None);
    }
}
