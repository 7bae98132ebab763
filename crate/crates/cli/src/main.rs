use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use ktsel_core::alignment::{alignment_objective, sigest_gamma, sigest_gamma_masked};
use ktsel_core::baselines::{greedy_forward, rfe_k};
use ktsel_core::dataset::{Standardizer, SubsetMask};
use ktsel_core::experiment::{cls_acc, render_table, run_experiment, set_f1, ExperimentConfig, Method};
use ktsel_core::milo::{build_milo, build_rmilo, export_model, MiloVariant, ModelFormat, DEFAULT_FULL_BIG_M};
use ktsel_core::solver::{brute_force, solve_bnb, Limits, OptGap, Status, DEFAULT_TIME_LIMIT_S};
use ktsel_core::svm::{train, SvmConfig, SvmModel};
use ktsel_core::synth::{generate, GenConfig, Sidecar};
use ktsel_core::{load_csv, read_csv, standardize, Dataset, PairStructure};

#[derive(Parser)]
#[command(name = "ktsel", version, about = "Exact kernel-target-alignment feature selection")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic train/test pair with a known relevant set.
    Gen(GenArgs),
    /// Select at most theta features.
    Select(SelectArgs),
    /// Write the MILO model as LP or MPS.
    Export(ExportArgs),
    /// Train an SVM on selected features or predict with a saved model.
    Svm {
        #[command(subcommand)]
        action: SvmAction,
    },
    /// Score a selection and/or predictions.
    Eval(EvalArgs),
    /// Run an experiment described by a JSON config.
    Bench(BenchArgs),
}

#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    n_train: usize,
    #[arg(long, default_value_t = 0)]
    n_test: usize,
    #[arg(long)]
    p: usize,
    #[arg(long)]
    theta_star: usize,
    #[arg(long, default_value_t = 25.0)]
    expansion: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Directory for train.csv, test.csv and meta.json.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SelectArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    theta: usize,
    #[arg(long, default_value_t = 1.0)]
    beta: f64,
    #[arg(long, default_value = "bnb")]
    method: String,
    #[arg(long, default_value_t = DEFAULT_TIME_LIMIT_S)]
    time_limit: f64,
    #[arg(long = "C", default_value_t = 1.0)]
    c: f64,
    /// Result JSON; stdout when omitted.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct ExportArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    theta: usize,
    #[arg(long, default_value_t = 1.0)]
    beta: f64,
    #[arg(long, default_value = "lp")]
    format: String,
    #[arg(long, default_value = "reduced")]
    variant: String,
    /// Loosen the reduced model's big-M by 0.1 (capped at 1).
    #[arg(long)]
    stabilized: bool,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Subcommand)]
enum SvmAction {
    Train(SvmTrainArgs),
    Predict(SvmPredictArgs),
}

#[derive(Args)]
struct SvmTrainArgs {
    #[arg(long)]
    input: PathBuf,
    /// Comma-separated 0-based column indices, or a `select` result JSON.
    #[arg(long)]
    features: String,
    #[arg(long = "C", default_value_t = 1.0)]
    c: f64,
    /// `auto` (beta times sigest on the selected features) or a positive value.
    #[arg(long, default_value = "auto")]
    gamma: String,
    #[arg(long, default_value_t = 1.0)]
    beta: f64,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct SvmPredictArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    /// `select` result JSON.
    #[arg(long)]
    selection: Option<PathBuf>,
    /// Generator meta.json holding the relevant set.
    #[arg(long)]
    meta: Option<PathBuf>,
    /// Comma-separated relevant indices, instead of --meta.
    #[arg(long)]
    relevant: Option<String>,
    /// `svm predict` output JSON.
    #[arg(long)]
    predictions: Option<PathBuf>,
    /// CSV whose labels the predictions are scored against.
    #[arg(long)]
    labels: Option<PathBuf>,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long)]
    config: PathBuf,
    /// Report JSON; stdout when omitted.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Also write the aligned text table here.
    #[arg(long)]
    table: Option<PathBuf>,
}

#[derive(Debug, Serialize)]
struct Failure {
    kind: String,
    message: String,
}

impl Failure {
    fn new(kind: &str, message: impl Into<String>) -> Self {
        Self {
            kind: kind.into(),
            message: message.into(),
        }
    }
}

impl From<ktsel_core::Error> for Failure {
    fn from(e: ktsel_core::Error) -> Self {
        Failure::new(e.kind(), e.to_string())
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::new("json", e.to_string())
    }
}

type CliResult<T> = Result<T, Failure>;

fn read_text(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| Failure::new("io", format!("{}: {e}", path.display())))
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> CliResult<T> {
    serde_json::from_str(&read_text(path)?)
        .map_err(|e| Failure::new("json", format!("{}: {e}", path.display())))
}

fn emit(output: Option<&Path>, text: &str) -> CliResult<()> {
    match output {
        Some(path) => fs::write(path, text).map_err(|e| Failure::new("io", format!("{}: {e}", path.display()))),
        None => {
            let mut out = std::io::stdout().lock();
            match out.write_all(text.as_bytes()).and_then(|_| out.flush()) {
                Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(Failure::new("io", e.to_string())),
                _ => Ok(()),
            }
        }
    }
}

fn emit_json<T: Serialize>(output: Option<&Path>, value: &T) -> CliResult<()> {
    emit(output, &(serde_json::to_string_pretty(value)? + "\n"))
}

fn parse_indices(s: &str) -> CliResult<Vec<usize>> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse()
                .map_err(|_| Failure::new("invalid", format!("bad feature index {t:?}")))
        })
        .collect()
}

fn gen(args: GenArgs) -> CliResult<()> {
    let g = generate(&GenConfig {
        n_train: args.n_train,
        n_test: args.n_test,
        p: args.p,
        theta_star: args.theta_star,
        expansion: args.expansion,
        seed: args.seed,
    })?;
    g.save(&args.out)?;
    emit_json(None, &g.sidecar())
}

#[derive(Serialize, Deserialize)]
struct Selection {
    method: Method,
    theta: usize,
    beta: f64,
    gamma: f64,
    /// Standardized-column layout: names of the kept columns, in order.
    feature_names: Vec<String>,
    dropped: Vec<String>,
    selected: Vec<usize>,
    selected_names: Vec<String>,
    z: Vec<u8>,
    objective: f64,
    lower_bound: Option<f64>,
    upper_bound: Option<f64>,
    opt_gap: Option<OptGap>,
    nodes: Option<u64>,
    status: Option<Status>,
    time_s: f64,
}

fn select(args: SelectArgs) -> CliResult<()> {
    let method: Method = args.method.parse()?;
    let st = standardize(&load_csv(&args.input)?)?;
    let ds = &st.dataset;
    let ps = PairStructure::build(ds)?;
    if args.theta < 1 || args.theta > ps.p() {
        return Err(Failure::new("invalid", format!("theta must be in 1..={}, got {}", ps.p(), args.theta)));
    }
    if !(args.beta > 0.0 && args.beta.is_finite()) {
        return Err(Failure::new("invalid", format!("beta must be positive, got {}", args.beta)));
    }
    let gamma = args.beta * sigest_gamma(&ps, args.theta)?;
    let start = std::time::Instant::now();
    let out = |mask: SubsetMask, exact: Option<ktsel_core::SolveResult>| {
        let selected = mask.selected();
        Selection {
            method,
            theta: args.theta,
            beta: args.beta,
            gamma,
            feature_names: ds.feature_names().to_vec(),
            dropped: st.dropped.clone(),
            selected_names: selected.iter().map(|&j| ds.feature_names()[j].clone()).collect(),
            selected,
            z: mask.to_bits(),
            objective: exact
                .as_ref()
                .map_or_else(|| alignment_objective(&ps, &mask, gamma), |r| r.objective),
            lower_bound: exact.as_ref().map(|r| r.lower_bound),
            upper_bound: exact.as_ref().map(|r| r.upper_bound),
            opt_gap: exact.as_ref().map(|r| r.opt_gap),
            nodes: exact.as_ref().map(|r| r.nodes_explored),
            status: exact.as_ref().map(|r| r.status),
            time_s: start.elapsed().as_secs_f64(),
        }
    };
    let result = match method {
        Method::Bnb => {
            let limits = Limits {
                time_limit_s: args.time_limit,
                ..Limits::default()
            };
            let r = solve_bnb(&ps, args.theta, gamma, limits)?;
            out(r.z_best.clone(), Some(r))
        }
        Method::Brute => {
            let r = brute_force(&ps, args.theta, gamma)?;
            out(r.z_best.clone(), Some(r))
        }
        Method::Greedy => out(greedy_forward(&ps, args.theta, gamma)?.mask, None),
        Method::Rfe => out(rfe_k(ds, args.theta, args.c, args.beta)?.mask, None),
    };
    emit_json(args.output.as_deref(), &result)
}

fn export(args: ExportArgs) -> CliResult<()> {
    let format: ModelFormat = args.format.parse()?;
    let variant: MiloVariant = args.variant.parse()?;
    let ds = standardize(&load_csv(&args.input)?)?.dataset;
    let ps = PairStructure::build(&ds)?;
    if args.theta < 1 || args.theta > ps.p() {
        return Err(Failure::new("invalid", format!("theta must be in 1..={}, got {}", ps.p(), args.theta)));
    }
    let gamma = args.beta * sigest_gamma(&ps, args.theta)?;
    let model = match variant {
        MiloVariant::Full => build_milo(&ps, gamma, args.theta, DEFAULT_FULL_BIG_M)?,
        MiloVariant::Reduced => build_rmilo(&ps, gamma, args.theta, args.stabilized)?,
    };
    emit(args.output.as_deref(), &export_model(&model, format)?)
}

/// A trained model together with the scaling of its training data.
#[derive(Serialize, Deserialize)]
struct SavedModel {
    feature_names: Vec<String>,
    standardizer: Standardizer,
    model: SvmModel,
}

fn svm_train(args: SvmTrainArgs) -> CliResult<()> {
    let st = standardize(&load_csv(&args.input)?)?;
    let ds = &st.dataset;
    let selected = if Path::new(&args.features).is_file() {
        let sel: Selection = read_json(Path::new(&args.features))?;
        if sel.feature_names != ds.feature_names() {
            return Err(Failure::new("dimension", "selection was made on different columns"));
        }
        sel.selected
    } else {
        parse_indices(&args.features)?
    };
    let theta = selected.len().max(1).min(ds.p());
    let mask = SubsetMask::from_indices(ds.p(), &selected, theta)?;
    let gamma = match args.gamma.as_str() {
        "auto" => {
            if mask.is_empty() {
                return Err(Failure::new("invalid", "gamma auto needs at least one feature"));
            }
            let ps = PairStructure::build(ds)?;
            args.beta * sigest_gamma_masked(&ps, mask.as_slice(), 1.0)?
        }
        v => v
            .parse::<f64>()
            .map_err(|_| Failure::new("invalid", format!("gamma must be auto or a number, got {v:?}")))?,
    };
    let model = train(ds, &mask, &SvmConfig::gaussian(gamma).with_c(args.c))?;
    emit_json(
        args.output.as_deref(),
        &SavedModel {
            feature_names: ds.feature_names().to_vec(),
            standardizer: st.standardizer,
            model,
        },
    )
}

#[derive(Serialize, Deserialize)]
struct Predictions {
    predictions: Vec<i8>,
    accuracy: f64,
}

fn svm_predict(args: SvmPredictArgs) -> CliResult<()> {
    let saved: SavedModel = read_json(&args.model)?;
    let raw = load_csv(&args.input)?;
    let ds: Dataset = saved.standardizer.transform(&raw)?;
    let predictions = saved.model.predict_dataset(&ds)?;
    let accuracy = cls_acc(&predictions, ds.labels())?;
    emit_json(args.output.as_deref(), &Predictions { predictions, accuracy })
}

#[derive(Serialize)]
struct EvalReport {
    set_f1: Option<f64>,
    cls_acc: Option<f64>,
}

fn eval(args: EvalArgs) -> CliResult<()> {
    let relevant = match (&args.meta, &args.relevant) {
        (Some(path), _) => Some(read_json::<Sidecar>(path)?.relevant),
        (None, Some(list)) => Some(parse_indices(list)?),
        (None, None) => None,
    };
    let set_f1 = match (&args.selection, relevant) {
        (Some(path), Some(truth)) => Some(set_f1(&truth, &read_json::<Selection>(path)?.selected)),
        (Some(_), None) => return Err(Failure::new("invalid", "--selection needs --meta or --relevant")),
        _ => None,
    };
    let cls_acc = match (&args.predictions, &args.labels) {
        (Some(pred), Some(labels)) => {
            let preds: Predictions = read_json(pred)?;
            let truth = read_csv(read_text(labels)?.as_bytes())?;
            Some(cls_acc(&preds.predictions, truth.labels())?)
        }
        (None, None) => None,
        _ => return Err(Failure::new("invalid", "--predictions and --labels go together")),
    };
    if set_f1.is_none() && cls_acc.is_none() {
        return Err(Failure::new("invalid", "nothing to evaluate"));
    }
    emit_json(args.output.as_deref(), &EvalReport { set_f1, cls_acc })
}

fn bench(args: BenchArgs) -> CliResult<()> {
    let cfg: ExperimentConfig = read_json(&args.config)?;
    let report = run_experiment(&cfg)?;
    let table = render_table(&report);
    if let Some(path) = &args.table {
        emit(Some(path), &table)?;
    }
    match &args.output {
        Some(path) => {
            emit_json(Some(path), &report)?;
            emit(None, &table)
        }
        None => emit_json(None, &report),
    }
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Gen(a) => gen(a),
        Command::Select(a) => select(a),
        Command::Export(a) => export(a),
        Command::Svm {
            action: SvmAction::Train(a),
        } => svm_train(a),
        Command::Svm {
            action: SvmAction::Predict(a),
        } => svm_predict(a),
        Command::Eval(a) => eval(a),
        Command::Bench(a) => bench(a),
    }
}

fn fail(f: &Failure, code: u8) -> ExitCode {
    let body = serde_json::json!({ "error": f });
    eprintln!("{body}");
    ExitCode::from(code)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => return fail(&Failure::new("usage", e.to_string().trim_end()), 2),
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => fail(&f, 1),
    }
}
