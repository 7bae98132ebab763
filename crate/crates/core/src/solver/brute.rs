use std::time::Instant;

use crate::alignment::alignment_objective_with;
use crate::dataset::{PairStructure, SubsetMask};
use crate::error::{Error, Result};
use crate::par::{self, Parallelism};

use super::{better, check_gamma, check_theta, SolveResult, Status};

/// Largest number of subsets [`brute_force`] will enumerate by default.
pub const DEFAULT_ENUMERATION_CAP: u128 = 1 << 24;

const BATCH: usize = 4096;

/// `sum_{k=0}^{theta} C(p, k)`.
pub fn count_subsets(p: usize, theta: usize) -> u128 {
    let mut total: u128 = 0;
    let mut c: u128 = 1;
    for k in 0..=theta.min(p) {
        total += c;
        c = c * (p - k) as u128 / (k + 1) as u128;
    }
    total
}

/// Advances `idx` to the next k-combination of `0..p` in lexicographic order.
fn next_combination(idx: &mut [usize], p: usize) -> bool {
    let k = idx.len();
    for pos in (0..k).rev() {
        if idx[pos] < p - k + pos {
            idx[pos] += 1;
            for q in pos + 1..k {
                idx[q] = idx[q - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// Exhaustive maximization over every mask with at most `theta` features.
pub fn brute_force(ps: &PairStructure, theta: usize, gamma: f64) -> Result<SolveResult> {
    brute_force_with(ps, theta, gamma, DEFAULT_ENUMERATION_CAP, Parallelism::default())
}

pub fn brute_force_with(
    ps: &PairStructure,
    theta: usize,
    gamma: f64,
    cap: u128,
    mode: Parallelism,
) -> Result<SolveResult> {
    check_theta(theta, ps.p())?;
    check_gamma(gamma)?;
    let p = ps.p();
    let subsets = count_subsets(p, theta);
    if subsets > cap {
        return Err(Error::EnumerationCap { subsets, cap });
    }
    let start = Instant::now();

    let mut best_z = vec![false; p];
    let mut best = alignment_objective_with(ps, &best_z, gamma, mode);
    let mut history = vec![best];
    let mut batch: Vec<Vec<bool>> = Vec::with_capacity(BATCH);

    let mut flush = |batch: &mut Vec<Vec<bool>>, best: &mut f64, best_z: &mut Vec<bool>| {
        // Subsets are scored in parallel; each score is itself a sequential sum.
        let scores = par::map_slice(batch, mode, |z| {
            alignment_objective_with(ps, z, gamma, Parallelism::Sequential)
        });
        for (z, v) in batch.iter().zip(scores) {
            if better(v, z, *best, best_z) {
                *best = v;
                best_z.clone_from(z);
                history.push(v);
            }
        }
        batch.clear();
    };

    for k in 1..=theta {
        let mut idx: Vec<usize> = (0..k).collect();
        loop {
            let mut z = vec![false; p];
            for &j in &idx {
                z[j] = true;
            }
            batch.push(z);
            if batch.len() == BATCH {
                flush(&mut batch, &mut best, &mut best_z);
            }
            if !next_combination(&mut idx, p) {
                break;
            }
        }
    }
    flush(&mut batch, &mut best, &mut best_z);

    let objective = best;
    Ok(SolveResult {
        z_best: SubsetMask::new(best_z, theta)?,
        objective,
        lower_bound: objective,
        upper_bound: objective,
        opt_gap: super::OptGap::Percent(0.0),
        nodes_explored: subsets as u64,
        wall_time: start.elapsed().as_secs_f64(),
        status: Status::Optimal,
        incumbent_history: history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn subset_counts() {
        assert_eq!(count_subsets(2, 1), 3);
        assert_eq!(count_subsets(5, 5), 32);
        assert_eq!(count_subsets(15, 3), 1 + 15 + 105 + 455);
        assert_eq!(count_subsets(64, 64), 1u128 << 64);
    }

    #[test]
    fn combinations_in_order() {
        let mut idx = vec![0, 1];
        let mut seen = vec![idx.clone()];
        while next_combination(&mut idx, 4) {
            seen.push(idx.clone());
        }
        assert_eq!(seen, vec![vec![0, 1], vec![0, 2], vec![0, 3], vec![1, 2], vec![1, 3], vec![2, 3]]);
    }

    #[test]
    fn cap_is_enforced() {
        let ps = PairStructure::from_distances(&[1, -1], 30, vec![1.0; 30]).unwrap();
        assert!(matches!(
            brute_force_with(&ps, 15, 1.0, 1000, Parallelism::Sequential),
            Err(Error::EnumerationCap { .. })
        ));
    }
}
