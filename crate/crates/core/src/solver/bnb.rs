//! Best-first branch-and-bound over the selection vector.
//!
//! Each pair term `psi_i psi_h exp(-gamma sum_j z_j d_ihj)` is bounded on its
//! own. Same-class pairs (positive weight) are best off when no free feature is
//! added, different-class pairs (negative weight) when the `r` largest free
//! distances are added, `r` being the remaining budget. Summing the per-pair
//! extremes dominates every completion of the node.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::time::Instant;

use crate::alignment::alignment_objective_with;
use crate::dataset::{PairSign, PairStructure, SubsetMask};
use crate::error::{Error, Result};
use crate::par::{self, Parallelism};

use super::{better, check_gamma, check_theta, greedy_path, opt_gap, Limits, SolveResult, Status};

/// A search node: features fixed in, fixed out, and still free.
#[derive(Debug, Clone, PartialEq)]
pub struct BnbNode {
    pub fixed_in: Vec<usize>,
    pub fixed_out: Vec<usize>,
    pub free: Vec<usize>,
    pub bound: f64,
}

impl BnbNode {
    pub fn root(p: usize) -> Self {
        Self {
            fixed_in: Vec::new(),
            fixed_out: Vec::new(),
            free: (0..p).collect(),
            bound: f64::INFINITY,
        }
    }

    pub fn validate(&self, p: usize, theta: usize) -> Result<()> {
        let mut seen = vec![false; p];
        for &j in self.fixed_in.iter().chain(&self.fixed_out).chain(&self.free) {
            if j >= p || seen[j] {
                return Err(Error::invalid("node sets do not partition the features"));
            }
            seen[j] = true;
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::invalid("node sets do not partition the features"));
        }
        if self.fixed_in.len() > theta {
            return Err(Error::invalid("node selects more than theta features"));
        }
        Ok(())
    }

    fn mask(&self, p: usize) -> Vec<bool> {
        let mut z = vec![false; p];
        for &j in &self.fixed_in {
            z[j] = true;
        }
        z
    }
}

/// Sum of the selected distances of every pair.
fn bases(ps: &PairStructure, fixed_in: &[usize], mode: Parallelism) -> Vec<f64> {
    par::map(ps.num_pairs(), mode, |k| {
        let d = ps.dist(k);
        fixed_in.iter().map(|&j| d[j]).sum()
    })
}

/// Sum of the `r` largest entries of `d` over `free`.
fn top_sum(d: &[f64], free: &[usize], r: usize) -> f64 {
    if r == 0 || free.is_empty() {
        return 0.0;
    }
    if r >= free.len() {
        return free.iter().map(|&j| d[j]).sum();
    }
    if r <= SMALL_TOP {
        // Descending insertion into a fixed buffer.
        let mut top = [f64::NEG_INFINITY; SMALL_TOP];
        for &j in free {
            let v = d[j];
            if v <= top[r - 1] {
                continue;
            }
            let mut pos = r - 1;
            while pos > 0 && top[pos - 1] < v {
                top[pos] = top[pos - 1];
                pos -= 1;
            }
            top[pos] = v;
        }
        return top[..r].iter().sum();
    }
    let mut vals: Vec<f64> = free.iter().map(|&j| d[j]).collect();
    vals.sort_unstable_by(|a, b| b.total_cmp(a));
    vals[..r].iter().sum()
}

const SMALL_TOP: usize = 16;

fn bound_from_bases(
    ps: &PairStructure,
    base: &[f64],
    free: &[usize],
    r: usize,
    gamma: f64,
    mode: Parallelism,
) -> f64 {
    let pair_part = par::sum(ps.num_pairs(), mode, |k| {
        let w = ps.weight(k);
        let extra = match ps.sign(k) {
            PairSign::Plus => 0.0,
            PairSign::Minus => top_sum(ps.dist(k), free, r),
        };
        w * (-gamma * (base[k] + extra)).exp()
    });
    ps.psi_sq_sum() + 2.0 * pair_part
}

/// Upper bound on the objective of every completion of `node`.
pub fn node_upper_bound(node: &BnbNode, ps: &PairStructure, theta: usize, gamma: f64) -> f64 {
    let mode = Parallelism::default();
    let r = theta.saturating_sub(node.fixed_in.len());
    let base = bases(ps, &node.fixed_in, mode);
    bound_from_bases(ps, &base, &node.free, r, gamma, mode)
}

/// Free feature with the largest weighted sensitivity
/// `sum_H |psi_i psi_h| d_ihj exp(-gamma base_ih)`; smallest index on ties.
fn branch_feature(ps: &PairStructure, base: &[f64], free: &[usize], gamma: f64, mode: Parallelism) -> usize {
    let decay: Vec<f64> = base.iter().map(|b| (-gamma * b).exp()).collect();
    let scores = par::map_slice(free, mode, |&j| {
        let mut s = 0.0;
        for (k, &dk) in decay.iter().enumerate() {
            s += ps.weight(k).abs() * ps.dist(k)[j] * dk;
        }
        s
    });
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate() {
        if s > scores[best] {
            best = i;
        }
    }
    free[best]
}

struct Queued {
    bound: f64,
    seq: u64,
    node: BnbNode,
}

impl PartialEq for Queued {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Queued {}

impl PartialOrd for Queued {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Queued {
    // Max-heap on bound; earlier nodes first on equal bounds.
    fn cmp(&self, other: &Self) -> Ordering {
        self.bound.total_cmp(&other.bound).then_with(|| other.seq.cmp(&self.seq))
    }
}

struct Incumbent {
    z: Vec<bool>,
    objective: f64,
    history: Vec<f64>,
}

impl Incumbent {
    fn offer(&mut self, z: Vec<bool>, objective: f64) {
        if better(objective, &z, self.objective, &self.z) {
            self.z = z;
            self.objective = objective;
            self.history.push(objective);
        }
    }

    /// A node can be discarded when its bound cannot beat the incumbent by
    /// more than the tolerance.
    fn dominates(&self, bound: f64, gap_tol: f64) -> bool {
        bound <= self.objective + gap_tol * self.objective.abs() + 1e-12
    }
}

/// Exact solve with default parallelism.
pub fn solve_bnb(ps: &PairStructure, theta: usize, gamma: f64, limits: Limits) -> Result<SolveResult> {
    solve_bnb_with(ps, theta, gamma, limits, Parallelism::default())
}

pub fn solve_bnb_with(
    ps: &PairStructure,
    theta: usize,
    gamma: f64,
    limits: Limits,
    mode: Parallelism,
) -> Result<SolveResult> {
    check_theta(theta, ps.p())?;
    check_gamma(gamma)?;
    limits.validate()?;
    let start = Instant::now();
    let p = ps.p();

    let (greedy_z, greedy_obj, _) = greedy_path(ps, theta, gamma)?;
    let empty = vec![false; p];
    let mut inc = Incumbent {
        z: empty.clone(),
        objective: alignment_objective_with(ps, &empty, gamma, mode),
        history: Vec::new(),
    };
    inc.history.push(inc.objective);
    inc.offer(greedy_z.as_slice().to_vec(), greedy_obj);

    let mut root = BnbNode::root(p);
    let root_base = vec![0.0; ps.num_pairs()];
    root.bound = bound_from_bases(ps, &root_base, &root.free, theta, gamma, mode);

    let mut heap = BinaryHeap::new();
    let mut seq = 0u64;
    let mut nodes = 0u64;
    let mut status = Status::Optimal;

    if limits.time_limit_s <= 0.0 {
        status = Status::TimeLimit;
        heap.push(Queued {
            bound: root.bound,
            seq,
            node: root,
        });
    } else {
        if !inc.dominates(root.bound, limits.gap_tol) {
            heap.push(Queued {
                bound: root.bound,
                seq,
                node: root,
            });
        }
        while let Some(top) = heap.peek() {
            if inc.dominates(top.bound, limits.gap_tol) {
                heap.clear();
                break;
            }
            if start.elapsed().as_secs_f64() >= limits.time_limit_s {
                status = Status::TimeLimit;
                break;
            }
            if nodes >= limits.node_cap {
                status = Status::NodeLimit;
                break;
            }
            let Queued { node, .. } = heap.pop().expect("peeked");
            nodes += 1;

            let r = theta - node.fixed_in.len();
            if r == 0 || node.free.is_empty() {
                continue;
            }
            let base = bases(ps, &node.fixed_in, mode);
            let j = branch_feature(ps, &base, &node.free, gamma, mode);
            let free: Vec<usize> = node.free.iter().copied().filter(|&f| f != j).collect();

            // z_j = 1
            let mut fixed_in = node.fixed_in.clone();
            fixed_in.push(j);
            fixed_in.sort_unstable();
            let in_base: Vec<f64> = base.iter().enumerate().map(|(k, b)| b + ps.dist(k)[j]).collect();
            let in_child = BnbNode {
                bound: bound_from_bases(ps, &in_base, &free, r - 1, gamma, mode),
                fixed_in,
                fixed_out: node.fixed_out.clone(),
                free: free.clone(),
            };
            let z = in_child.mask(p);
            let obj = alignment_objective_with(ps, &z, gamma, mode);
            inc.offer(z, obj);

            // z_j = 0
            let mut fixed_out = node.fixed_out.clone();
            fixed_out.push(j);
            fixed_out.sort_unstable();
            let out_child = BnbNode {
                bound: bound_from_bases(ps, &base, &free, r, gamma, mode),
                fixed_in: node.fixed_in.clone(),
                fixed_out,
                free,
            };

            for child in [in_child, out_child] {
                let leaf = child.fixed_in.len() == theta || child.free.is_empty();
                if leaf || inc.dominates(child.bound, limits.gap_tol) {
                    continue;
                }
                seq += 1;
                heap.push(Queued {
                    bound: child.bound,
                    seq,
                    node: child,
                });
            }
        }
    }

    let lower = inc.objective;
    let open = heap.peek().map_or(f64::NEG_INFINITY, |q| q.bound);
    let upper = if status == Status::Optimal { lower } else { open.max(lower) };
    Ok(SolveResult {
        z_best: SubsetMask::new(inc.z, theta)?,
        objective: lower,
        lower_bound: lower,
        upper_bound: upper,
        opt_gap: opt_gap(lower, upper),
        nodes_explored: nodes,
        wall_time: start.elapsed().as_secs_f64(),
        status,
        incumbent_history: inc.history,
    })
}
