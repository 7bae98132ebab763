//! Exact feature-subset selection for Gaussian-kernel SVMs by maximizing the
//! kernel-target alignment over subsets of at most `theta` features.
//!
//! The pipeline is: load or generate a [`Dataset`], [`standardize`] it, build
//! the [`PairStructure`] of per-feature squared distances, pick `gamma` with
//! [`sigest_gamma`], then select features with [`solve_bnb`] (exact),
//! [`brute_force`] (exact, small `p`), or one of the [`baselines`]. The chosen
//! mask is fed to the [`svm`] trainer. The MILO formulations in [`milo`] can be
//! exported for an external MIP solver.

pub mod alignment;
pub mod baselines;
pub mod dataset;
pub mod error;
pub mod experiment;
pub mod milo;
pub mod par;
pub mod solver;
pub mod svm;
pub mod synth;

pub use alignment::{
    alignment_objective, alignment_objective_full, reduced_objective, sigest_gamma, KernelConfig,
};
pub use dataset::{load_csv, read_csv, standardize, Dataset, PairStructure, SubsetMask};
pub use error::{Error, Result};
pub use par::Parallelism;
pub use solver::{brute_force, opt_gap, solve_bnb, Limits, OptGap, SolveResult, Status};
