use crate::alignment::alignment_objective_with;
use crate::dataset::{PairStructure, SubsetMask};
use crate::error::Result;
use crate::par::Parallelism;

use super::{check_gamma, check_theta};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GreedyStep {
    pub feature: usize,
    /// Objective after adding the feature.
    pub objective: f64,
}

/// Forward selection: repeatedly add the feature with the largest objective
/// gain (smallest index on ties) until `theta` features are chosen or no
/// feature strictly improves the objective.
pub fn greedy_path(ps: &PairStructure, theta: usize, gamma: f64) -> Result<(SubsetMask, f64, Vec<GreedyStep>)> {
    check_theta(theta, ps.p())?;
    check_gamma(gamma)?;
    let mode = Parallelism::default();
    let mut z = vec![false; ps.p()];
    let mut current = alignment_objective_with(ps, &z, gamma, mode);
    let mut steps = Vec::new();
    while steps.len() < theta {
        let mut best: Option<(usize, f64)> = None;
        for j in 0..ps.p() {
            if z[j] {
                continue;
            }
            z[j] = true;
            let v = alignment_objective_with(ps, &z, gamma, mode);
            z[j] = false;
            if best.is_none_or(|(_, b)| v > b) {
                best = Some((j, v));
            }
        }
        match best {
            Some((j, v)) if v > current => {
                z[j] = true;
                current = v;
                steps.push(GreedyStep {
                    feature: j,
                    objective: v,
                });
            }
            _ => break,
        }
    }
    Ok((SubsetMask::new(z, theta)?, current, steps))
}

/// Warm-start incumbent for the exact search.
pub fn greedy_incumbent(ps: &PairStructure, theta: usize, gamma: f64) -> Result<SubsetMask> {
    greedy_path(ps, theta, gamma).map(|(z, _, _)| z)
}
