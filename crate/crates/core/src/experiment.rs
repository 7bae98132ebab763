//! Experiment harness: select features, train on them, score the result and
//! aggregate over repetitions.

use std::collections::BTreeSet;
use std::fmt::{self, Write as _};
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::alignment::{alignment_objective, sigest_gamma};
use crate::baselines::{greedy_forward, rfe_k};
use crate::dataset::{load_csv, standardize, Dataset, PairStructure, SubsetMask};
use crate::error::{Error, Result};
use crate::solver::{brute_force, opt_gap, solve_bnb, Limits, OptGap, Status, DEFAULT_TIME_LIMIT_S};
use crate::svm::{train, SvmConfig};
use crate::synth::{generate, GenConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Bnb,
    Brute,
    Greedy,
    Rfe,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Bnb => "bnb",
            Method::Brute => "brute",
            Method::Greedy => "greedy",
            Method::Rfe => "rfe",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "bnb" => Ok(Method::Bnb),
            "brute" => Ok(Method::Brute),
            "greedy" => Ok(Method::Greedy),
            "rfe" => Ok(Method::Rfe),
            _ => Err(Error::invalid(format!("unknown method {s:?}; expected bnb, brute, greedy or rfe"))),
        }
    }
}

/// `2RP / (R + P)` between the true and selected feature sets; 0 when either
/// set is empty or they do not intersect.
pub fn set_f1(s_star: &[usize], s_hat: &[usize]) -> f64 {
    let truth: BTreeSet<usize> = s_star.iter().copied().collect();
    let chosen: BTreeSet<usize> = s_hat.iter().copied().collect();
    let hit = truth.intersection(&chosen).count();
    if hit == 0 {
        return 0.0;
    }
    let r = hit as f64 / truth.len() as f64;
    let p = hit as f64 / chosen.len() as f64;
    2.0 * r * p / (r + p)
}

/// Fraction of matching labels.
pub fn cls_acc(preds: &[i8], truth: &[i8]) -> Result<f64> {
    if preds.len() != truth.len() {
        return Err(Error::Dimension(format!(
            "{} predictions for {} labels",
            preds.len(),
            truth.len()
        )));
    }
    if truth.is_empty() {
        return Err(Error::invalid("no labels to score"));
    }
    let hit = preds.iter().zip(truth).filter(|(a, b)| a == b).count();
    Ok(hit as f64 / truth.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "lowercase")]
pub enum DataSource {
    /// Generated per repetition with that repetition's seed.
    Synthetic {
        n_train: usize,
        n_test: usize,
        p: usize,
        theta_star: usize,
        expansion: f64,
    },
    /// Raw CSVs, standardized with the training statistics. Accuracy is
    /// measured on `test` when given, else on the training rows.
    Csv {
        train: PathBuf,
        #[serde(default)]
        test: Option<PathBuf>,
        /// Known relevant columns, for SetF1.
        #[serde(default)]
        relevant: Option<Vec<usize>>,
    },
}

fn default_one() -> f64 {
    1.0
}

fn default_time_limit() -> f64 {
    DEFAULT_TIME_LIMIT_S
}

fn default_reps() -> usize {
    1
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub methods: Vec<Method>,
    pub theta: usize,
    #[serde(default = "default_one")]
    pub beta: f64,
    #[serde(rename = "C", default = "default_one")]
    pub c: f64,
    #[serde(default = "default_time_limit")]
    pub time_limit_s: f64,
    #[serde(default = "default_reps")]
    pub repetitions: usize,
    /// One per repetition; defaults to `0..repetitions`.
    #[serde(default)]
    pub seeds: Vec<u64>,
    pub data: DataSource,
    /// When false, all timings are reported as 0 so output is reproducible.
    #[serde(default = "default_true")]
    pub record_time: bool,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.methods.is_empty() {
            return Err(Error::invalid("no methods given"));
        }
        if self.repetitions < 1 {
            return Err(Error::invalid("repetitions must be >= 1"));
        }
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(Error::invalid(format!("beta must be positive, got {}", self.beta)));
        }
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(Error::invalid(format!("C must be positive, got {}", self.c)));
        }
        if self.theta < 1 {
            return Err(Error::invalid("theta must be >= 1"));
        }
        if !self.seeds.is_empty() && self.seeds.len() != self.repetitions {
            return Err(Error::invalid(format!(
                "{} seeds for {} repetitions",
                self.seeds.len(),
                self.repetitions
            )));
        }
        Limits {
            time_limit_s: self.time_limit_s,
            ..Limits::default()
        }
        .validate()
    }

    pub fn seed_list(&self) -> Vec<u64> {
        if self.seeds.is_empty() {
            (0..self.repetitions as u64).collect()
        } else {
            self.seeds.clone()
        }
    }
}

/// One repetition of one method.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub seed: u64,
    pub selected: Vec<usize>,
    pub objective: f64,
    pub gamma: f64,
    pub opt_gap: Option<OptGap>,
    pub status: Option<Status>,
    pub time_s: f64,
    pub cls_acc: f64,
    pub set_f1: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanErr {
    pub mean: f64,
    pub stderr: f64,
}

impl MeanErr {
    /// Mean and sample standard deviation over `sqrt(len)`; 0 error for a
    /// single value.
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let m = values.len() as f64;
        let mean = values.iter().sum::<f64>() / m;
        let stderr = if values.len() < 2 {
            0.0
        } else {
            let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (m - 1.0);
            (var / m).sqrt()
        };
        Some(Self { mean, stderr })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub method: Method,
    /// First failure reason; aggregates cover the successful repetitions.
    pub failed: Option<String>,
    pub completed: usize,
    pub obj_val: Option<MeanErr>,
    /// Largest gap over the repetitions, exact methods only.
    pub opt_gap: Option<OptGap>,
    pub subset_size: Option<f64>,
    pub time_s: Option<f64>,
    pub time_limit_hits: usize,
    pub cls_acc: Option<MeanErr>,
    pub set_f1: Option<MeanErr>,
    pub runs: Vec<RunRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub config: ExperimentConfig,
    pub rows: Vec<ReportRow>,
}

struct Prepared {
    train: Dataset,
    test: Option<Dataset>,
    relevant: Option<Vec<usize>>,
}

fn prepare(cfg: &ExperimentConfig, seed: u64) -> Result<Prepared> {
    match &cfg.data {
        DataSource::Synthetic {
            n_train,
            n_test,
            p,
            theta_star,
            expansion,
        } => {
            let g = generate(&GenConfig {
                n_train: *n_train,
                n_test: *n_test,
                p: *p,
                theta_star: *theta_star,
                expansion: *expansion,
                seed,
            })?;
            Ok(Prepared {
                train: g.train,
                test: g.test,
                relevant: Some(g.relevant),
            })
        }
        DataSource::Csv { train, test, relevant } => {
            let raw = load_csv(train)?;
            let st = standardize(&raw)?;
            let test = match test {
                Some(path) => Some(st.standardizer.transform(&load_csv(path)?)?),
                None => None,
            };
            // Relevant indices refer to the raw columns; follow the drop.
            let relevant = relevant.as_ref().map(|r| {
                st.standardizer
                    .kept
                    .iter()
                    .enumerate()
                    .filter(|(_, src)| r.contains(src))
                    .map(|(k, _)| k)
                    .collect()
            });
            Ok(Prepared {
                train: st.dataset,
                test,
                relevant,
            })
        }
    }
}

fn run_once(cfg: &ExperimentConfig, method: Method, seed: u64) -> Result<RunRecord> {
    let data = prepare(cfg, seed)?;
    let ps = PairStructure::build(&data.train)?;
    let p = ps.p();
    if cfg.theta > p {
        return Err(Error::invalid(format!("theta {} exceeds p = {p}", cfg.theta)));
    }
    let gamma = cfg.beta * sigest_gamma(&ps, cfg.theta)?;
    let start = std::time::Instant::now();
    let (mask, gap, status) = match method {
        Method::Bnb => {
            let limits = Limits {
                time_limit_s: cfg.time_limit_s,
                ..Limits::default()
            };
            let r = solve_bnb(&ps, cfg.theta, gamma, limits)?;
            (r.z_best, Some(r.opt_gap), Some(r.status))
        }
        Method::Brute => {
            let r = brute_force(&ps, cfg.theta, gamma)?;
            (r.z_best, Some(opt_gap(r.lower_bound, r.upper_bound)), Some(r.status))
        }
        Method::Greedy => (greedy_forward(&ps, cfg.theta, gamma)?.mask, None, None),
        Method::Rfe => (rfe_k(&data.train, cfg.theta, cfg.c, cfg.beta)?.mask, None, None),
    };
    let elapsed = start.elapsed().as_secs_f64();
    let objective = alignment_objective(&ps, &mask, gamma);

    let model = train(&data.train, &mask, &SvmConfig::gaussian(gamma).with_c(cfg.c))?;
    let eval = data.test.as_ref().unwrap_or(&data.train);
    let acc = cls_acc(&model.predict_dataset(eval)?, eval.labels())?;
    let selected = mask.selected();
    Ok(RunRecord {
        seed,
        set_f1: data.relevant.as_ref().map(|r| set_f1(r, &selected)),
        selected,
        objective,
        gamma,
        opt_gap: gap,
        status,
        time_s: if cfg.record_time { elapsed } else { 0.0 },
        cls_acc: acc,
    })
}

fn worst_gap(runs: &[RunRecord]) -> Option<OptGap> {
    let mut worst: Option<OptGap> = None;
    for g in runs.iter().filter_map(|r| r.opt_gap) {
        worst = Some(match (worst, g) {
            (Some(OptGap::Exceeds), _) | (_, OptGap::Exceeds) => OptGap::Exceeds,
            (Some(OptGap::Percent(a)), OptGap::Percent(b)) => OptGap::Percent(a.max(b)),
            (None, g) => g,
        });
    }
    worst
}

fn aggregate(method: Method, runs: Vec<RunRecord>, failed: Option<String>) -> ReportRow {
    let col = |f: &dyn Fn(&RunRecord) -> f64| runs.iter().map(f).collect::<Vec<_>>();
    let f1: Vec<f64> = runs.iter().filter_map(|r| r.set_f1).collect();
    let sizes = col(&|r| r.selected.len() as f64);
    let times = col(&|r| r.time_s);
    ReportRow {
        method,
        failed,
        completed: runs.len(),
        obj_val: MeanErr::of(&col(&|r| r.objective)),
        opt_gap: worst_gap(&runs),
        subset_size: MeanErr::of(&sizes).map(|m| m.mean),
        time_s: MeanErr::of(&times).map(|m| m.mean),
        time_limit_hits: runs.iter().filter(|r| r.status == Some(Status::TimeLimit)).count(),
        cls_acc: MeanErr::of(&col(&|r| r.cls_acc)),
        set_f1: if f1.len() == runs.len() { MeanErr::of(&f1) } else { None },
        runs,
    }
}

/// Runs every method over every seed. Stage failures mark the row as failed
/// and the run continues.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Report> {
    cfg.validate()?;
    let seeds = cfg.seed_list();
    let rows = cfg
        .methods
        .iter()
        .map(|&method| {
            let mut runs = Vec::new();
            let mut failed = None;
            for &seed in &seeds {
                match run_once(cfg, method, seed) {
                    Ok(r) => runs.push(r),
                    Err(e) => {
                        failed.get_or_insert_with(|| format!("seed {seed}: {e}"));
                    }
                }
            }
            aggregate(method, runs, failed)
        })
        .collect();
    Ok(Report {
        config: cfg.clone(),
        rows,
    })
}

fn fmt_me(m: Option<MeanErr>) -> String {
    match m {
        Some(m) => format!("{:.3} ({:.3})", m.mean, m.stderr),
        None => "-".into(),
    }
}

/// Aligned text table with the columns ObjVal, OptGap, |S|, Time, ClsAcc and
/// SetF1 (mean with standard error in parentheses).
pub fn render_table(report: &Report) -> String {
    let header = ["method", "ObjVal", "OptGap", "|S|", "Time", "ClsAcc", "SetF1"];
    let mut cells: Vec<Vec<String>> = vec![header.iter().map(|s| s.to_string()).collect()];
    for row in &report.rows {
        let mut line = vec![
            row.method.to_string(),
            fmt_me(row.obj_val),
            row.opt_gap.map_or("-".into(), |g| g.to_string()),
            row.subset_size.map_or("-".into(), |s| format!("{s:.1}")),
            row.time_s.map_or("-".into(), |t| format!("{t:.2}")),
            fmt_me(row.cls_acc),
            fmt_me(row.set_f1),
        ];
        if row.failed.is_some() {
            line[0].push('*');
        }
        cells.push(line);
    }
    let widths: Vec<usize> = (0..header.len())
        .map(|c| cells.iter().map(|r| r[c].chars().count()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for (k, row) in cells.iter().enumerate() {
        let parts: Vec<String> = row
            .iter()
            .enumerate()
            .map(|(c, s)| {
                if c == 0 {
                    format!("{s:<w$}", w = widths[c])
                } else {
                    format!("{s:>w$}", w = widths[c])
                }
            })
            .collect();
        let _ = writeln!(out, "{}", parts.join("  ").trim_end());
        if k == 0 {
            let total = widths.iter().sum::<usize>() + 2 * (widths.len() - 1);
            let _ = writeln!(out, "{}", "-".repeat(total));
        }
    }
    for row in &report.rows {
        if let Some(reason) = &row.failed {
            let _ = writeln!(out, "* {}: {reason}", row.method);
        }
    }
    out
}

/// Mask of the selected columns, used when re-training from a saved result.
pub fn mask_from_indices(p: usize, selected: &[usize]) -> Result<SubsetMask> {
    SubsetMask::from_indices(p, selected, selected.len().max(1).min(p))
}
