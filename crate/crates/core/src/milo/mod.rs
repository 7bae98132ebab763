//! Mixed-integer linear models of the subset-selection problem.
//!
//! Every instance pair `(i, h)` owns a chain of continuous variables
//! `e_ih1, ..., e_ih(p+1)` with `e_ih1 = 1`. Layer `j + 1` equals layer `j`
//! when feature `j` is off and `exp(-gamma d_ihj)` times layer `j` when it is
//! on, so the last layer is the subset kernel value of the pair.
//!
//! The full model keeps all `n^2` ordered pairs with a uniform big-M and four
//! coupling inequalities per pair and layer. The reduced model keeps only
//! `i < h` pairs and, depending on the sign of `psi_i psi_h`, only the two
//! inequalities the objective can push against, with per-coefficient big-M
//! values `1 - exp(-gamma d_ihj)` (optionally raised by a stabilizing offset).

mod export;

pub use export::{export_model, ModelFormat};

use serde::{Deserialize, Serialize};

use crate::dataset::{PairStructure, SubsetMask};
use crate::error::{Error, Result};

/// Offset added to the tight big-M values in stabilized mode, before capping
/// at 1.
pub const STABILIZED_BIG_M_OFFSET: f64 = 0.1;

/// Default uniform big-M of the full model.
pub const DEFAULT_FULL_BIG_M: f64 = 1.0;

/// `1 - exp(-gamma d)`, or `min(1 - exp(-gamma d) + 0.1, 1)` when stabilized.
pub fn big_m(d: f64, gamma: f64, stabilized: bool) -> f64 {
    let offset = if stabilized { STABILIZED_BIG_M_OFFSET } else { 0.0 };
    big_m_with_offset(d, gamma, offset)
}

pub fn big_m_with_offset(d: f64, gamma: f64, offset: f64) -> f64 {
    let tight = -(-gamma * d).exp_m1();
    (tight + offset).min(1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MiloVariant {
    Full,
    Reduced,
}

impl std::str::FromStr for MiloVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(MiloVariant::Full),
            "reduced" => Ok(MiloVariant::Reduced),
            other => Err(Error::invalid(format!("unknown model variant {other:?}"))),
        }
    }
}

/// Which coupling inequalities a chain carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Sides {
    pub upper: bool,
    pub lower: bool,
}

/// One e-chain: the instance pair it belongs to and its objective weight.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Chain {
    pub i: usize,
    pub h: usize,
    pub weight: f64,
    pub sides: Sides,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Var {
    Z(usize),
    E { chain: usize, layer: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Le,
    Eq,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConstraintKind {
    Cardinality,
    Init,
    /// `e_(j+1) - e_j <= M z_j`.
    UpperStep,
    /// `-M z_j <= e_(j+1) - e_j`.
    LowerStep,
    /// `e_(j+1) - c e_j <= M (1 - z_j)`.
    UpperExp,
    /// `-M (1 - z_j) <= e_(j+1) - c e_j`.
    LowerExp,
}

impl ConstraintKind {
    fn tag(self) -> &'static str {
        match self {
            ConstraintKind::Cardinality => "card",
            ConstraintKind::Init => "init",
            ConstraintKind::UpperStep => "ustep",
            ConstraintKind::LowerStep => "lstep",
            ConstraintKind::UpperExp => "uexp",
            ConstraintKind::LowerExp => "lexp",
        }
    }

    pub fn is_coupling(self) -> bool {
        !matches!(self, ConstraintKind::Cardinality | ConstraintKind::Init)
    }
}

/// A linear row `sum terms (sense) rhs`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearConstraint {
    pub kind: ConstraintKind,
    /// Chain and feature the row belongs to (absent for the cardinality row).
    pub chain: Option<usize>,
    pub feature: Option<usize>,
    pub terms: Vec<(Var, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

/// Logical implication `z_j = value  =>  e_(j+1) - coef * e_j = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Indicator {
    pub chain: usize,
    pub feature: usize,
    pub value: bool,
    pub coef: f64,
}

/// A symbolic MILO instance.
#[derive(Debug, Clone)]
pub struct MiloModel {
    variant: MiloVariant,
    n: usize,
    p: usize,
    theta: usize,
    gamma: f64,
    objective_offset: f64,
    objective_scale: f64,
    chains: Vec<Chain>,
    /// `exp(-gamma d_ihj)` per chain and feature.
    coef: Vec<f64>,
    /// Big-M per chain and feature.
    big_m: Vec<f64>,
}

fn check_params(ps: &PairStructure, gamma: f64, theta: usize) -> Result<()> {
    if theta < 1 || theta > ps.p() {
        return Err(Error::invalid(format!("theta must be in 1..={}, got {theta}", ps.p())));
    }
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::invalid(format!("gamma must be positive, got {gamma}")));
    }
    Ok(())
}

/// Full model over all `n^2` ordered instance pairs with a uniform big-M.
pub fn build_milo(ps: &PairStructure, gamma: f64, theta: usize, big_m: f64) -> Result<MiloModel> {
    check_params(ps, gamma, theta)?;
    if !(big_m > 0.0 && big_m.is_finite()) {
        return Err(Error::invalid(format!("big-M must be positive, got {big_m}")));
    }
    let (n, p) = (ps.n(), ps.p());
    let psi = ps.psi();
    let both = Sides {
        upper: true,
        lower: true,
    };
    let mut chains = Vec::with_capacity(n * n);
    let mut coef = Vec::with_capacity(n * n * p);
    for i in 0..n {
        for h in 0..n {
            chains.push(Chain {
                i,
                h,
                weight: psi[i] * psi[h],
                sides: both,
            });
            coef.extend((0..p).map(|j| (-gamma * ps.dist_between(i, h, j)).exp()));
        }
    }
    let big_m = vec![big_m; coef.len()];
    Ok(MiloModel {
        variant: MiloVariant::Full,
        n,
        p,
        theta,
        gamma,
        objective_offset: 0.0,
        objective_scale: 1.0,
        chains,
        coef,
        big_m,
    })
}

/// Reduced model over `i < h` pairs with sign-split coupling rows.
pub fn build_rmilo(ps: &PairStructure, gamma: f64, theta: usize, stabilized: bool) -> Result<MiloModel> {
    let offset = if stabilized { STABILIZED_BIG_M_OFFSET } else { 0.0 };
    build_rmilo_with_offset(ps, gamma, theta, offset)
}

pub fn build_rmilo_with_offset(ps: &PairStructure, gamma: f64, theta: usize, offset: f64) -> Result<MiloModel> {
    check_params(ps, gamma, theta)?;
    if !(0.0..=1.0).contains(&offset) {
        return Err(Error::invalid(format!("big-M offset must be in [0, 1], got {offset}")));
    }
    let p = ps.p();
    let mut chains = Vec::with_capacity(ps.num_pairs());
    let mut coef = Vec::with_capacity(ps.num_pairs() * p);
    let mut big = Vec::with_capacity(ps.num_pairs() * p);
    for (k, &(i, h)) in ps.pairs().iter().enumerate() {
        let weight = ps.weight(k);
        let same = weight > 0.0;
        chains.push(Chain {
            i,
            h,
            weight,
            sides: Sides {
                upper: same,
                lower: !same,
            },
        });
        for &d in ps.dist(k) {
            coef.push((-gamma * d).exp());
            big.push(big_m_with_offset(d, gamma, offset));
        }
    }
    Ok(MiloModel {
        variant: MiloVariant::Reduced,
        n: ps.n(),
        p,
        theta,
        gamma,
        objective_offset: ps.psi_sq_sum(),
        objective_scale: 2.0,
        chains,
        coef,
        big_m: big,
    })
}

impl MiloModel {
    pub fn variant(&self) -> MiloVariant {
        self.variant
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn theta(&self) -> usize {
        self.theta
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn chains(&self) -> &[Chain] {
        &self.chains
    }

    pub fn coef(&self, chain: usize, j: usize) -> f64 {
        self.coef[chain * self.p + j]
    }

    pub fn big_m(&self, chain: usize, j: usize) -> f64 {
        self.big_m[chain * self.p + j]
    }

    /// The alignment value equals `offset + scale * model objective`.
    pub fn objective_offset(&self) -> f64 {
        self.objective_offset
    }

    pub fn objective_scale(&self) -> f64 {
        self.objective_scale
    }

    pub fn num_binaries(&self) -> usize {
        self.p
    }

    pub fn num_continuous(&self) -> usize {
        self.chains.len() * (self.p + 1)
    }

    pub fn num_init(&self) -> usize {
        self.chains.len()
    }

    pub fn num_coupling(&self) -> usize {
        self.chains
            .iter()
            .map(|c| self.p * 2 * (usize::from(c.sides.upper) + usize::from(c.sides.lower)))
            .sum()
    }

    pub fn num_constraints(&self) -> usize {
        1 + self.num_init() + self.num_coupling()
    }

    /// Column index of a variable: binaries first, then chains layer by layer.
    pub fn var_index(&self, v: Var) -> usize {
        match v {
            Var::Z(j) => j,
            Var::E { chain, layer } => self.p + chain * (self.p + 1) + layer,
        }
    }

    pub fn num_vars(&self) -> usize {
        self.num_binaries() + self.num_continuous()
    }

    pub fn var_name(&self, v: Var) -> String {
        match v {
            Var::Z(j) => format!("z_{}", j + 1),
            Var::E { chain, layer } => {
                let c = &self.chains[chain];
                format!("e_{}_{}_{}", c.i + 1, c.h + 1, layer + 1)
            }
        }
    }

    pub fn constraint_name(&self, c: &LinearConstraint) -> String {
        match (c.chain, c.feature) {
            (Some(k), Some(j)) => {
                let ch = &self.chains[k];
                format!("{}_{}_{}_{}", c.kind.tag(), ch.i + 1, ch.h + 1, j + 1)
            }
            (Some(k), None) => {
                let ch = &self.chains[k];
                format!("{}_{}_{}", c.kind.tag(), ch.i + 1, ch.h + 1)
            }
            _ => c.kind.tag().to_owned(),
        }
    }

    /// Objective `sum weight * e_(p+1)` over chains.
    pub fn objective_terms(&self) -> impl Iterator<Item = (Var, f64)> + '_ {
        self.chains.iter().enumerate().map(move |(k, c)| {
            (
                Var::E {
                    chain: k,
                    layer: self.p,
                },
                c.weight,
            )
        })
    }

    /// All rows in export order: cardinality, layer-one equalities, then
    /// coupling rows by chain and layer.
    pub fn constraints(&self) -> impl Iterator<Item = LinearConstraint> + '_ {
        let card = std::iter::once(LinearConstraint {
            kind: ConstraintKind::Cardinality,
            chain: None,
            feature: None,
            terms: (0..self.p).map(|j| (Var::Z(j), 1.0)).collect(),
            sense: Sense::Le,
            rhs: self.theta as f64,
        });
        let init = (0..self.chains.len()).map(|k| LinearConstraint {
            kind: ConstraintKind::Init,
            chain: Some(k),
            feature: None,
            terms: vec![(Var::E { chain: k, layer: 0 }, 1.0)],
            sense: Sense::Eq,
            rhs: 1.0,
        });
        let coupling = (0..self.chains.len())
            .flat_map(move |k| (0..self.p).flat_map(move |j| self.coupling_rows(k, j)));
        card.chain(init).chain(coupling)
    }

    fn coupling_rows(&self, k: usize, j: usize) -> Vec<LinearConstraint> {
        let sides = self.chains[k].sides;
        let c = self.coef(k, j);
        let m = self.big_m(k, j);
        let next = Var::E { chain: k, layer: j + 1 };
        let cur = Var::E { chain: k, layer: j };
        let z = Var::Z(j);
        let row = |kind, terms: Vec<(Var, f64)>, rhs| LinearConstraint {
            kind,
            chain: Some(k),
            feature: Some(j),
            terms,
            sense: Sense::Le,
            rhs,
        };
        let mut rows = Vec::with_capacity(4);
        match self.variant {
            MiloVariant::Full => {
                rows.push(row(ConstraintKind::UpperStep, vec![(next, 1.0), (cur, -1.0), (z, -m)], 0.0));
                rows.push(row(ConstraintKind::LowerStep, vec![(next, -1.0), (cur, 1.0), (z, -m)], 0.0));
                rows.push(row(ConstraintKind::UpperExp, vec![(next, 1.0), (cur, -c), (z, m)], m));
                rows.push(row(ConstraintKind::LowerExp, vec![(next, -1.0), (cur, c), (z, m)], m));
            }
            MiloVariant::Reduced => {
                if sides.upper {
                    rows.push(row(ConstraintKind::UpperStep, vec![(next, 1.0), (cur, -1.0)], 0.0));
                    rows.push(row(ConstraintKind::UpperExp, vec![(next, 1.0), (cur, -c), (z, m)], m));
                }
                if sides.lower {
                    rows.push(row(ConstraintKind::LowerStep, vec![(next, -1.0), (cur, 1.0), (z, -m)], 0.0));
                    rows.push(row(ConstraintKind::LowerExp, vec![(next, -1.0), (cur, c)], 0.0));
                }
            }
        }
        rows
    }

    /// The logical-implication form of the chain constraints.
    pub fn indicators(&self) -> impl Iterator<Item = Indicator> + '_ {
        (0..self.chains.len()).flat_map(move |k| {
            (0..self.p).flat_map(move |j| {
                [
                    Indicator {
                        chain: k,
                        feature: j,
                        value: false,
                        coef: 1.0,
                    },
                    Indicator {
                        chain: k,
                        feature: j,
                        value: true,
                        coef: self.coef(k, j),
                    },
                ]
            })
        })
    }
}

/// Values of every e-chain, `p + 1` layers each.
#[derive(Debug, Clone, PartialEq)]
pub struct EMatrix {
    variant: MiloVariant,
    p: usize,
    pairs: Vec<(usize, usize)>,
    values: Vec<f64>,
}

impl EMatrix {
    pub fn variant(&self) -> MiloVariant {
        self.variant
    }

    pub fn layers(&self) -> usize {
        self.p + 1
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    pub fn chain(&self, k: usize) -> &[f64] {
        &self.values[k * (self.p + 1)..(k + 1) * (self.p + 1)]
    }

    pub fn get(&self, k: usize, layer: usize) -> f64 {
        self.values[k * (self.p + 1) + layer]
    }

    pub fn set(&mut self, k: usize, layer: usize, v: f64) {
        self.values[k * (self.p + 1) + layer] = v;
    }

    pub fn last(&self, k: usize) -> f64 {
        self.get(k, self.p)
    }
}

/// Builds the e-values implied by `z`: `e_1 = 1`, then each layer either
/// copies or scales the previous one.
pub fn reconstruct_e(z: &SubsetMask, ps: &PairStructure, gamma: f64, variant: MiloVariant) -> Result<EMatrix> {
    let p = ps.p();
    if z.len() != p {
        return Err(Error::Dimension(format!("mask has {} entries, expected {p}", z.len())));
    }
    let pairs: Vec<(usize, usize)> = match variant {
        MiloVariant::Full => (0..ps.n()).flat_map(|i| (0..ps.n()).map(move |h| (i, h))).collect(),
        MiloVariant::Reduced => ps.pairs().to_vec(),
    };
    let mut values = Vec::with_capacity(pairs.len() * (p + 1));
    let zs = z.as_slice();
    for &(i, h) in &pairs {
        let mut e = 1.0;
        values.push(e);
        if variant == MiloVariant::Reduced {
            let dist = ps.dist(ps.pair_index(i, h));
            for (&d, &on) in dist.iter().zip(zs) {
                if on {
                    e *= (-gamma * d).exp();
                }
                values.push(e);
            }
        } else {
            for (j, &on) in zs.iter().enumerate() {
                if on {
                    e *= (-gamma * ps.dist_between(i, h, j)).exp();
                }
                values.push(e);
            }
        }
    }
    Ok(EMatrix {
        variant,
        p,
        pairs,
        values,
    })
}

/// One violated row.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub name: String,
    /// `rhs - lhs` for inequalities, `-|lhs - rhs|` for equalities; negative.
    pub slack: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationReport {
    pub violations: Vec<Violation>,
    /// Objective of the model itself.
    pub model_objective: f64,
    /// The same value mapped back to the alignment objective.
    pub alignment_objective: f64,
}

impl VerificationReport {
    pub fn is_feasible(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks `(e, z)` against every row of the model.
pub fn verify_solution(m: &MiloModel, e: &EMatrix, z: &SubsetMask, tol: f64) -> Result<VerificationReport> {
    if z.len() != m.p() {
        return Err(Error::Dimension(format!("mask has {} entries, model has p = {}", z.len(), m.p())));
    }
    if e.variant != m.variant() || e.pairs.len() != m.chains.len() || e.p != m.p() {
        return Err(Error::Dimension(format!(
            "e-matrix ({:?}, {} chains, p = {}) does not match model ({:?}, {} chains, p = {})",
            e.variant,
            e.pairs.len(),
            e.p,
            m.variant(),
            m.chains.len(),
            m.p()
        )));
    }
    let value = |v: Var| -> f64 {
        match v {
            Var::Z(j) => f64::from(u8::from(z.is_selected(j))),
            Var::E { chain, layer } => e.get(chain, layer),
        }
    };
    let mut violations = Vec::new();
    for (k, chain) in m.chains.iter().enumerate() {
        for layer in 0..e.layers() {
            let v = e.get(k, layer);
            if v < -tol {
                violations.push(Violation {
                    name: format!("nonneg_e_{}_{}_{}", chain.i + 1, chain.h + 1, layer + 1),
                    slack: v,
                });
            }
        }
    }
    for row in m.constraints() {
        let lhs: f64 = row.terms.iter().map(|&(v, c)| c * value(v)).sum();
        let slack = match row.sense {
            Sense::Le => row.rhs - lhs,
            Sense::Eq => -(lhs - row.rhs).abs(),
        };
        if slack < -tol {
            violations.push(Violation {
                name: m.constraint_name(&row),
                slack,
            });
        }
    }
    let model_objective: f64 = m.objective_terms().map(|(v, c)| c * value(v)).sum();
    Ok(VerificationReport {
        violations,
        model_objective,
        alignment_objective: m.objective_offset() + m.objective_scale() * model_objective,
    })
}
