//! The `bnmtf` command line.
//!
//! Every option may also come from a `--config` file of `key = value` lines,
//! using the long flag name as key. A flag on the command line wins over the
//! file. The seed falls back to `BNMTF_SEED`, then to 0. Search candidates
//! given on the command line as `--k`/`--l` use the keys `k_values` and
//! `l_values`, since `k` and `l` name the rank.

use std::fmt::Display;
use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use ndarray::Array2;

use crate::engine::{fit, Engine, Factors, FitSpec, Priors, Rank};
use crate::experiments::{
    convergence_experiment, cross_validation, missing_values_experiment, noise_experiment, Noise, ToySpec,
};
use crate::hyper::InitScheme;
use crate::io::{
    read_config, read_matrix_csv, read_report, write_dense_csv, write_matrix_csv, write_report, write_trace_csv,
    ConfigMap, ConvergenceReport, Document, FitReport, GenReport, Report, SelectReport, TraceSeries,
};
use crate::observed::ObservedMatrix;
use crate::selection::{run_search, Criterion, SearchKind, SearchSpec};

pub const SEED_ENV: &str = "BNMTF_SEED";

#[derive(Debug, Parser)]
#[command(name = "bnmtf", version, about = "Bayesian non-negative matrix factorisation and tri-factorisation")]
pub struct Cli {
    /// Worker threads for restarts and experiment repeats.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Leave wall-clock timings out of reports.
    #[arg(long, global = true)]
    no_timing: bool,
    /// File of `key = value` defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a synthetic matrix and its ground truth.
    Gen(GenArgs),
    /// Fit one model and write a report.
    Fit(FitArgs),
    /// Fill the missing entries of a matrix.
    Predict(PredictArgs),
    /// Search over dimensionalities.
    Select(SelectArgs),
    /// Run one of the experiment protocols.
    Experiment(ExperimentArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Model {
    Nmf,
    Nmtf,
}

impl FromStr for Model {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        <Model as ValueEnum>::from_str(s, true)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Protocol {
    Convergence,
    Missing,
    Noise,
    Cv,
}

#[derive(Debug, Args)]
struct ModelArgs {
    #[arg(long)]
    model: Option<Model>,
    #[arg(long = "K")]
    k: Option<usize>,
    #[arg(long = "L")]
    l: Option<usize>,
}

#[derive(Debug, Args)]
struct EngineArgs {
    #[arg(long)]
    engine: Option<String>,
    #[arg(long)]
    iterations: Option<usize>,
    #[arg(long)]
    burn_in: Option<usize>,
    #[arg(long)]
    thinning: Option<usize>,
    /// Relative early-stopping tolerance for vb, icm and np; 0 disables it.
    #[arg(long)]
    tol: Option<f64>,
    /// prior_mean, prior_draw or kmeans.
    #[arg(long)]
    init: Option<String>,
    /// Exponential rate shared by every factor entry.
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
}

#[derive(Debug, Args)]
struct ToyArgs {
    #[arg(long = "I")]
    rows: Option<usize>,
    #[arg(long = "J")]
    cols: Option<usize>,
    /// Absolute noise variance.
    #[arg(long)]
    noise_var: Option<f64>,
    /// Noise variance relative to the variance of the noiseless product.
    #[arg(long, conflicts_with = "noise_var")]
    nsr: Option<f64>,
}

#[derive(Debug, Args)]
struct GenArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    toy: ToyArgs,
    /// Matrix CSV; stdout when absent.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Ground-truth report.
    #[arg(long)]
    truth: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct FitArgs {
    #[arg(long)]
    input: Option<PathBuf>,
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    engine: EngineArgs,
    /// Report path; stdout when absent.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Writes PREFIX_mse.csv and, where available, PREFIX_elbo.csv and PREFIX_seconds.csv.
    #[arg(long)]
    trace_csv: Option<PathBuf>,
    /// Directory for one CSV per factor matrix.
    #[arg(long)]
    factors: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct PredictArgs {
    #[arg(long)]
    input: Option<PathBuf>,
    /// Fit report to predict from; without it a model is fitted first.
    #[arg(long)]
    report: Option<PathBuf>,
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    engine: EngineArgs,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SearchArgs {
    /// line, grid or greedy.
    #[arg(long)]
    search: Option<String>,
    /// K candidates: `a..b` (inclusive), a comma list, or one value.
    /// Config key `k_values`.
    #[arg(long = "k", visible_alias = "k-values")]
    k_values: Option<String>,
    #[arg(long = "l", visible_alias = "l-values")]
    l_values: Option<String>,
    #[arg(long)]
    restarts: Option<usize>,
    /// aic, bic, mse or elbo.
    #[arg(long)]
    criterion: Option<String>,
}

#[derive(Debug, Args)]
struct SelectArgs {
    #[arg(long)]
    input: Option<PathBuf>,
    #[command(flatten)]
    search: SearchArgs,
    #[command(flatten)]
    engine: EngineArgs,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ExperimentArgs {
    protocol: Protocol,
    /// Data for convergence and cv; a toy matrix is generated when absent.
    #[arg(long)]
    input: Option<PathBuf>,
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    toy: ToyArgs,
    #[command(flatten)]
    engine: EngineArgs,
    #[command(flatten)]
    search: SearchArgs,
    /// Comma-separated engine list.
    #[arg(long)]
    engines: Option<String>,
    #[arg(long)]
    repeats: Option<usize>,
    /// Missing fractions, comma-separated.
    #[arg(long)]
    fractions: Option<String>,
    /// Noise-to-signal ratios, comma-separated.
    #[arg(long)]
    nsr_values: Option<String>,
    #[arg(long)]
    timing_repeats: Option<usize>,
    #[arg(long)]
    folds: Option<usize>,
    #[arg(long)]
    inner_folds: Option<usize>,
    #[arg(long)]
    output: Option<PathBuf>,
    /// Writes one PREFIX_<engine>_mse.csv (and _seconds.csv) per convergence trace.
    #[arg(long)]
    trace_csv: Option<PathBuf>,
}

const KNOWN_KEYS: &[&str] = &[
    "threads", "no_timing", "seed", "model", "k", "l", "i", "j", "noise_var", "nsr", "output", "truth", "input",
    "engine", "iterations", "burn_in", "thinning", "tol", "init", "lambda", "alpha", "beta", "trace_csv", "factors",
    "report", "search", "k_values", "l_values", "restarts", "criterion", "engines", "repeats", "fractions", "nsr_values", "timing_repeats",
    "folds", "inner_folds",
];

/// Flag values layered over the config file.
struct Layers {
    file: ConfigMap,
}

impl Layers {
    fn load(path: Option<&Path>) -> Result<Self> {
        let file = match path {
            Some(p) => read_config(p).with_context(|| format!("reading config {}", p.display()))?,
            None => ConfigMap::new(),
        };
        if let Some(k) = file.keys().find(|k| !KNOWN_KEYS.contains(&k.as_str())) {
            bail!("config: unknown key {k:?}");
        }
        Ok(Self { file })
    }

    fn get<T: FromStr>(&self, flag: Option<T>, key: &str) -> Result<Option<T>>
    where
        T::Err: Display,
    {
        if flag.is_some() {
            return Ok(flag);
        }
        self.file
            .get(key)
            .map(|v| v.parse::<T>().map_err(|e| anyhow!("config key {key}: {e}")))
            .transpose()
    }

    fn or<T: FromStr>(&self, flag: Option<T>, key: &str, default: T) -> Result<T>
    where
        T::Err: Display,
    {
        Ok(self.get(flag, key)?.unwrap_or(default))
    }

    fn path(&self, flag: &Option<PathBuf>, key: &str) -> Option<PathBuf> {
        flag.clone().or_else(|| self.file.get(key).map(PathBuf::from))
    }

    fn flag(&self, set: bool, key: &str) -> Result<bool> {
        if set {
            return Ok(true);
        }
        match self.file.get(key).map(|s| s.to_ascii_lowercase()) {
            None => Ok(false),
            Some(v) if v == "true" || v == "1" || v == "yes" => Ok(true),
            Some(v) if v == "false" || v == "0" || v == "no" => Ok(false),
            Some(v) => bail!("config key {key}: expected true or false, got {v:?}"),
        }
    }
}

/// Inclusive `a..b`, a comma list, or a single value.
fn parse_usize_list(s: &str) -> Result<Vec<usize>> {
    let s = s.trim();
    if let Some((a, b)) = s.split_once("..") {
        let a: usize = a.trim().parse().with_context(|| format!("bad range start in {s:?}"))?;
        let b: usize = b.trim().trim_start_matches('=').parse().with_context(|| format!("bad range end in {s:?}"))?;
        if a > b {
            bail!("empty range {s:?}");
        }
        return Ok((a..=b).collect());
    }
    s.split(',')
        .map(|t| t.trim().parse::<usize>().with_context(|| format!("bad integer {t:?} in {s:?}")))
        .collect()
}

fn parse_f64_list(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|t| t.trim().parse::<f64>().with_context(|| format!("bad number {t:?} in {s:?}")))
        .collect()
}

fn parse_engines(s: &str) -> Result<Vec<Engine>> {
    s.split(',').map(|t| Ok(t.parse::<Engine>()?)).collect()
}

fn resolve_rank(layers: &Layers, m: &ModelArgs, nmf_default: usize, nmtf_default: (usize, usize)) -> Result<Rank> {
    let l = layers.get(m.l, "l")?;
    let model = layers.get(m.model, "model")?.unwrap_or(if l.is_some() { Model::Nmtf } else { Model::Nmf });
    Ok(match model {
        Model::Nmf => {
            if l.is_some() {
                bail!("--L applies to the nmtf model only");
            }
            Rank::Nmf {
                k: layers.or(m.k, "k", nmf_default)?,
            }
        }
        Model::Nmtf => Rank::Nmtf {
            k: layers.or(m.k, "k", nmtf_default.0)?,
            l: l.unwrap_or(nmtf_default.1),
        },
    })
}

fn resolve_fit(layers: &Layers, e: &EngineArgs, default_engine: Engine) -> Result<FitSpec> {
    let engine = layers.or(e.engine.clone(), "engine", default_engine.name().to_string())?.parse::<Engine>()?;
    let base = FitSpec::new(engine);
    let init = match layers.get(e.init.clone(), "init")? {
        Some(s) => s.parse::<InitScheme>()?,
        None => base.init,
    };
    let d = Priors::default();
    Ok(FitSpec {
        engine,
        iterations: layers.or(e.iterations, "iterations", base.iterations)?,
        burn_in: layers.get(e.burn_in, "burn_in")?,
        thinning: layers.or(e.thinning, "thinning", base.thinning)?,
        tol: layers.or(e.tol, "tol", base.tol)?,
        init,
        priors: Priors {
            lambda: layers.or(e.lambda, "lambda", d.lambda)?,
            alpha: layers.or(e.alpha, "alpha", d.alpha)?,
            beta: layers.or(e.beta, "beta", d.beta)?,
        },
    })
}

fn resolve_toy(layers: &Layers, t: &ToyArgs, rank: Rank) -> Result<ToySpec> {
    let standard = ToySpec::standard(rank);
    let noise = match (layers.get(t.noise_var, "noise_var")?, layers.get(t.nsr, "nsr")?) {
        (Some(_), Some(_)) => bail!("give either noise_var or nsr, not both"),
        (Some(v), None) => Noise::Variance(v),
        (None, Some(r)) => Noise::SignalRatio(r),
        (None, None) => standard.noise,
    };
    Ok(ToySpec {
        rows: layers.or(t.rows, "i", standard.rows)?,
        cols: layers.or(t.cols, "j", standard.cols)?,
        rank,
        noise,
    })
}

fn resolve_search(layers: &Layers, s: &SearchArgs, fit: FitSpec, seed: u64) -> Result<(SearchKind, SearchSpec)> {
    let kind: SearchKind = layers.or(s.search.clone(), "search", "line".into())?.parse()?;
    let k_values = parse_usize_list(
        &layers
            .get(s.k_values.clone(), "k_values")?
            .ok_or_else(|| anyhow!("--k is required for model selection"))?,
    )?;
    let l_values = layers.get(s.l_values.clone(), "l_values")?.map(|l| parse_usize_list(&l)).transpose()?;
    let criterion: Criterion = layers.or(s.criterion.clone(), "criterion", "aic".into())?.parse()?;
    let spec = SearchSpec {
        k_values,
        l_values,
        restarts: layers.or(s.restarts, "restarts", 1)?,
        criterion,
        fit,
        seed,
    };
    spec.validate()?;
    Ok((kind, spec))
}

fn require_input(layers: &Layers, input: &Option<PathBuf>) -> Result<PathBuf> {
    layers.path(input, "input").ok_or_else(|| anyhow!("--input is required"))
}

fn load_matrix(path: &Path) -> Result<ObservedMatrix> {
    read_matrix_csv(path).with_context(|| format!("reading {}", path.display()))
}

/// Runs `body` against the file at `path`, or stdout when there is none.
fn emit(path: Option<&Path>, stdout: &mut dyn Write, body: impl FnOnce(&mut dyn Write) -> crate::Result<()>) -> Result<()> {
    match path {
        Some(p) => {
            let mut f = BufWriter::new(File::create(p).with_context(|| format!("creating {}", p.display()))?);
            body(&mut f).with_context(|| format!("writing {}", p.display()))?;
            f.flush().with_context(|| format!("writing {}", p.display()))?;
        }
        None => body(stdout).context("writing to stdout")?,
    }
    Ok(())
}

fn emit_report(path: Option<&Path>, stdout: &mut dyn Write, report: Report) -> Result<()> {
    let doc = Document::new(report);
    emit(path, stdout, |w| write_report(w, &doc))
}

fn write_traces(prefix: &Path, trace: &crate::RunTrace) -> Result<()> {
    for (series, suffix) in [
        (TraceSeries::Mse, "mse"),
        (TraceSeries::Elbo, "elbo"),
        (TraceSeries::Seconds, "seconds"),
    ] {
        let path = PathBuf::from(format!("{}_{suffix}.csv", prefix.display()));
        let mut buf = Vec::new();
        if write_trace_csv(&mut buf, trace, series)? {
            std::fs::write(&path, buf).with_context(|| format!("writing {}", path.display()))?;
        }
    }
    Ok(())
}

fn write_factors(dir: &Path, factors: &Factors) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let named: Vec<(&str, &Array2<f64>)> = match factors {
        Factors::Nmf { u, v } => vec![("U", u), ("V", v)],
        Factors::Nmtf { f, s, g } => vec![("F", f), ("S", s), ("G", g)],
    };
    for (name, m) in named {
        let p = dir.join(format!("{name}.csv"));
        let f = File::create(&p).with_context(|| format!("creating {}", p.display()))?;
        write_dense_csv(f, m).with_context(|| format!("writing {}", p.display()))?;
    }
    Ok(())
}

fn fill_missing(data: &ObservedMatrix, prediction: &Array2<f64>) -> Result<Array2<f64>> {
    if prediction.dim() != data.dim() {
        bail!("prediction is {:?} but the input matrix is {:?}", prediction.dim(), data.dim());
    }
    Ok(Array2::from_shape_fn(data.dim(), |(i, j)| data.get(i, j).unwrap_or(prediction[[i, j]])))
}

struct Globals {
    no_timing: bool,
    seed: u64,
    layers: Layers,
}

fn cmd_gen(g: &Globals, a: &GenArgs, out: &mut dyn Write) -> Result<()> {
    let rank = resolve_rank(&g.layers, &a.model, 10, (5, 5))?;
    let toy_spec = resolve_toy(&g.layers, &a.toy, rank)?;
    let toy = toy_spec.generate(g.seed)?;
    emit(g.layers.path(&a.output, "output").as_deref(), out, |w| write_matrix_csv(w, &toy.data))?;
    if let Some(p) = g.layers.path(&a.truth, "truth") {
        let report = Report::Gen(GenReport {
            spec: toy_spec,
            seed: g.seed,
            noise_var: toy.noise_var,
            truth: toy.truth,
        });
        emit_report(Some(&p), out, report)?;
    }
    Ok(())
}

fn run_fit(g: &Globals, data: &ObservedMatrix, model: &ModelArgs, engine: &EngineArgs) -> Result<FitReport> {
    let rank = resolve_rank(&g.layers, model, 10, (5, 5))?;
    let spec = resolve_fit(&g.layers, engine, Engine::Vb)?;
    spec.validate(rank, data.rows(), data.cols())?;
    let mut f = fit(data, rank, &spec, g.seed).with_context(|| format!("{} fit at {rank}", spec.engine))?;
    if g.no_timing {
        f.trace.strip_timing();
    }
    Ok(FitReport::new(f, data)?)
}

fn cmd_fit(g: &Globals, a: &FitArgs, out: &mut dyn Write) -> Result<()> {
    let data = load_matrix(&require_input(&g.layers, &a.input)?)?;
    let report = run_fit(g, &data, &a.model, &a.engine)?;
    if let Some(prefix) = g.layers.path(&a.trace_csv, "trace_csv") {
        write_traces(&prefix, &report.trace)?;
    }
    if let Some(dir) = g.layers.path(&a.factors, "factors") {
        write_factors(&dir, &report.factors)?;
    }
    emit_report(g.layers.path(&a.output, "output").as_deref(), out, Report::Fit(Box::new(report)))
}

fn cmd_predict(g: &Globals, a: &PredictArgs, out: &mut dyn Write) -> Result<()> {
    let data = load_matrix(&require_input(&g.layers, &a.input)?)?;
    let prediction = match g.layers.path(&a.report, "report") {
        Some(p) => {
            let file = File::open(&p).with_context(|| format!("opening {}", p.display()))?;
            match read_report(BufReader::new(file)).with_context(|| format!("reading {}", p.display()))?.report {
                Report::Fit(r) => r.prediction,
                _ => bail!("{} is not a fit report", p.display()),
            }
        }
        None => run_fit(g, &data, &a.model, &a.engine)?.prediction,
    };
    let filled = fill_missing(&data, &prediction)?;
    emit(g.layers.path(&a.output, "output").as_deref(), out, |w| write_dense_csv(w, &filled))
}

fn cmd_select(g: &Globals, a: &SelectArgs, out: &mut dyn Write) -> Result<()> {
    let data = load_matrix(&require_input(&g.layers, &a.input)?)?;
    let fit_spec = resolve_fit(&g.layers, &a.engine, Engine::Vb)?;
    let (kind, spec) = resolve_search(&g.layers, &a.search, fit_spec, g.seed)?;
    let result = run_search(&data, kind, &spec).with_context(|| format!("{kind:?} search").to_lowercase())?;
    emit_report(
        g.layers.path(&a.output, "output").as_deref(),
        out,
        Report::Select(SelectReport {
            search: kind,
            spec,
            result,
        }),
    )
}

fn experiment_data(g: &Globals, a: &ExperimentArgs, toy: &ToySpec) -> Result<ObservedMatrix> {
    match g.layers.path(&a.input, "input") {
        Some(p) => load_matrix(&p),
        None => Ok(toy.generate(g.seed)?.data),
    }
}

fn cmd_experiment(g: &Globals, a: &ExperimentArgs, out: &mut dyn Write) -> Result<()> {
    let l = &g.layers;
    let rank = resolve_rank(l, &a.model, 10, (5, 5))?;
    let toy = resolve_toy(l, &a.toy, rank)?;
    let fit_spec = resolve_fit(l, &a.engine, Engine::Vb)?;
    let engines = match l.get(a.engines.clone(), "engines")? {
        Some(s) => parse_engines(&s)?,
        None => Engine::ALL.to_vec(),
    };
    let repeats = l.or(a.repeats, "repeats", 10)?;
    let output = l.path(&a.output, "output");
    let report = match a.protocol {
        Protocol::Convergence => {
            let data = experiment_data(g, a, &toy)?;
            fit_spec.validate(rank, data.rows(), data.cols())?;
            let timing_repeats = l.or(a.timing_repeats, "timing_repeats", 10)?;
            let mut traces = convergence_experiment(&data, &engines, rank, &fit_spec, timing_repeats, g.seed)?;
            if g.no_timing {
                traces.iter_mut().for_each(|t| t.strip_timing());
            }
            if let Some(prefix) = l.path(&a.trace_csv, "trace_csv") {
                for t in &traces {
                    write_traces(&PathBuf::from(format!("{}_{}", prefix.display(), t.engine)), t)?;
                }
            }
            Report::Convergence(ConvergenceReport {
                rank,
                timing_repeats,
                seed: g.seed,
                traces,
            })
        }
        Protocol::Missing => {
            fit_spec.validate(rank, toy.rows, toy.cols)?;
            let fractions = match l.get(a.fractions.clone(), "fractions")? {
                Some(s) => parse_f64_list(&s)?,
                None => (1..=8).map(|i| i as f64 / 10.0).collect(),
            };
            Report::Experiment(missing_values_experiment(&toy, &fractions, repeats, &engines, &fit_spec, g.seed)?)
        }
        Protocol::Noise => {
            fit_spec.validate(rank, toy.rows, toy.cols)?;
            let nsr = match l.get(a.nsr_values.clone(), "nsr_values")? {
                Some(s) => parse_f64_list(&s)?,
                None => vec![0.0, 0.01, 0.02, 0.05, 0.1, 0.2, 0.5],
            };
            Report::Experiment(noise_experiment(&toy, &nsr, repeats, &engines, &fit_spec, g.seed)?)
        }
        Protocol::Cv => {
            let data = experiment_data(g, a, &toy)?;
            let (kind, spec) = resolve_search(l, &a.search, fit_spec, g.seed)?;
            let folds = l.or(a.folds, "folds", 10)?;
            let inner = l.or(a.inner_folds, "inner_folds", 5)?;
            Report::CrossValidation(cross_validation(&data, folds, kind, &spec, inner, g.seed)?)
        }
    };
    emit_report(output.as_deref(), out, report)
}

fn resolve_seed(flag: Option<u64>, layers: &Layers) -> Result<u64> {
    if let Some(s) = layers.get(flag, "seed")? {
        return Ok(s);
    }
    match std::env::var(SEED_ENV) {
        Ok(v) => v.trim().parse().with_context(|| format!("{SEED_ENV}={v:?} is not an integer")),
        Err(_) => Ok(0),
    }
}

/// Executes a parsed command line, writing default output to `stdout`.
pub fn run(cli: Cli, stdout: &mut (dyn Write + Send)) -> Result<()> {
    let layers = Layers::load(cli.config.as_deref())?;
    let threads = layers.or(cli.threads, "threads", 1)?;
    if threads == 0 {
        bail!("--threads must be at least 1");
    }
    let g = Globals {
        no_timing: layers.flag(cli.no_timing, "no_timing")?,
        seed: resolve_seed(cli.seed, &layers)?,
        layers,
    };
    let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build()?;
    pool.install(|| match &cli.command {
        Command::Gen(a) => cmd_gen(&g, a, stdout),
        Command::Fit(a) => cmd_fit(&g, a, stdout),
        Command::Predict(a) => cmd_predict(&g, a, stdout),
        Command::Select(a) => cmd_select(&g, a, stdout),
        Command::Experiment(a) => cmd_experiment(&g, a, stdout),
    })
}

/// Parses `args` (program name first), runs, and maps the outcome to an exit
/// code. Failures print one line to stderr.
pub fn main_with<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let text = e.to_string();
            let line = text.lines().next().unwrap_or("invalid arguments");
            eprintln!("bnmtf: {}", line.trim_start_matches("error: "));
            return ExitCode::from(2);
        }
    };
    let mut stdout = io::stdout();
    match run(cli, &mut stdout) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("bnmtf: {}", format!("{e:#}").replace('\n', " "));
            ExitCode::FAILURE
        }
    }
}
