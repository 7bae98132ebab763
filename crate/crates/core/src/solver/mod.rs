//! Exact maximization of the alignment objective over subsets of at most
//! `theta` features.

mod bnb;
mod brute;
mod greedy;

pub use bnb::{node_upper_bound, solve_bnb, solve_bnb_with, BnbNode};
pub use brute::{brute_force, brute_force_with, count_subsets, DEFAULT_ENUMERATION_CAP};
pub use greedy::{greedy_incumbent, greedy_path, GreedyStep};

use std::cmp::Ordering;
use std::fmt;

use serde::de::{self, Deserializer};
use serde::ser::Serializer;
use serde::{Deserialize, Serialize};

use crate::dataset::SubsetMask;
use crate::error::{Error, Result};

/// Default wall-clock limit in seconds.
pub const DEFAULT_TIME_LIMIT_S: f64 = 10_000.0;

/// Gaps above this percentage are reported with the sentinel.
pub const GAP_SENTINEL_PERCENT: f64 = 1000.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Optimal,
    TimeLimit,
    NodeLimit,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Optimal => "optimal",
            Status::TimeLimit => "time_limit",
            Status::NodeLimit => "node_limit",
        })
    }
}

/// Relative optimality gap in percent, or the `>1000.0%` sentinel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OptGap {
    Percent(f64),
    Exceeds,
}

impl OptGap {
    pub fn percent(self) -> Option<f64> {
        match self {
            OptGap::Percent(v) => Some(v),
            OptGap::Exceeds => None,
        }
    }
}

impl fmt::Display for OptGap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OptGap::Percent(v) => write!(f, "{v:.1}%"),
            OptGap::Exceeds => write!(f, ">{GAP_SENTINEL_PERCENT:.1}%"),
        }
    }
}

impl Serialize for OptGap {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            OptGap::Percent(v) => s.serialize_f64(*v),
            OptGap::Exceeds => s.serialize_str(&self.to_string()),
        }
    }
}

impl<'de> Deserialize<'de> for OptGap {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(OptGap::Percent(v)),
            Raw::Text(t) if t.starts_with('>') => Ok(OptGap::Exceeds),
            Raw::Text(t) => Err(de::Error::custom(format!("bad gap {t:?}"))),
        }
    }
}

/// `|ub - lb| / lb` in percent. Equal bounds give 0; a nonpositive lower
/// bound or a gap above 1000% gives the sentinel.
pub fn opt_gap(lb: f64, ub: f64) -> OptGap {
    if ub == lb {
        return OptGap::Percent(0.0);
    }
    if lb <= 0.0 {
        return OptGap::Exceeds;
    }
    let g = 100.0 * (ub - lb).abs() / lb;
    if g > GAP_SENTINEL_PERCENT || !g.is_finite() {
        OptGap::Exceeds
    } else {
        OptGap::Percent(g)
    }
}

/// Termination controls for [`solve_bnb`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Limits {
    pub time_limit_s: f64,
    pub node_cap: u64,
    /// Relative gap at which the search stops; 0 proves optimality.
    pub gap_tol: f64,
}

impl Default for Limits {
    fn default() -> Self {
        Self {
            time_limit_s: DEFAULT_TIME_LIMIT_S,
            node_cap: u64::MAX,
            gap_tol: 0.0,
        }
    }
}

impl Limits {
    pub fn validate(&self) -> Result<()> {
        if self.time_limit_s.is_nan() || self.time_limit_s < 0.0 {
            return Err(Error::invalid(format!("time limit must be >= 0, got {}", self.time_limit_s)));
        }
        if !(self.gap_tol >= 0.0 && self.gap_tol.is_finite()) {
            return Err(Error::invalid(format!("gap tolerance must be >= 0, got {}", self.gap_tol)));
        }
        Ok(())
    }
}

fn serialize_mask<S: Serializer>(m: &SubsetMask, s: S) -> std::result::Result<S::Ok, S::Error> {
    m.to_bits().serialize(s)
}

/// Outcome of an exact or heuristic solve.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveResult {
    #[serde(rename = "z", serialize_with = "serialize_mask")]
    pub z_best: SubsetMask,
    pub objective: f64,
    pub lower_bound: f64,
    pub upper_bound: f64,
    pub opt_gap: OptGap,
    #[serde(rename = "nodes")]
    pub nodes_explored: u64,
    #[serde(rename = "time_s")]
    pub wall_time: f64,
    pub status: Status,
    /// Incumbent objective after each improvement, in order.
    #[serde(skip)]
    pub incumbent_history: Vec<f64>,
}

impl SolveResult {
    /// Same result with the wall time zeroed, for reproducibility checks.
    pub fn without_time(&self) -> Self {
        Self {
            wall_time: 0.0,
            ..self.clone()
        }
    }
}

/// Candidate order: higher objective first, then the lexicographically
/// smaller 0/1 vector.
pub(crate) fn better(obj_a: f64, za: &[bool], obj_b: f64, zb: &[bool]) -> bool {
    match obj_a.total_cmp(&obj_b) {
        Ordering::Greater => true,
        Ordering::Less => false,
        Ordering::Equal => za < zb,
    }
}

pub(crate) fn check_theta(theta: usize, p: usize) -> Result<()> {
    if theta < 1 || theta > p {
        return Err(Error::invalid(format!("theta must be in 1..={p}, got {theta}")));
    }
    Ok(())
}

pub(crate) fn check_gamma(gamma: f64) -> Result<()> {
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::invalid(format!("gamma must be positive, got {gamma}")));
    }
    Ok(())
}
