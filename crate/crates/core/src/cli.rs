//! Command-line front end.
//!
//! Every subcommand reads its inputs from flags, from a JSON config
//! (`--config`, unknown keys rejected) or both, with flags taking
//! precedence. Results are written as JSON to stdout or `--output`.
//!
//! Exit codes: 0 holds / success, 3 refuted, 4 inconclusive, 2 bad config
//! or arguments, 5 infeasible moment instance, 1 any other failure.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::conditions::{self, BernsteinMoment, ConditionKind, SearchFamily, VFunction, Verdict};
use crate::decision::{DecisionProblem, PredictorMixture};
use crate::learners::{self, Learner, OtbMode, Substitution};
use crate::momentbounds::{self, Feasibility, MomentProblemInstance, RateBoundInputs};
use crate::problems::{self, ProblemRecipe};
use crate::Error;

/// Environment variable overriding any configured seed.
pub const SEED_ENV: &str = "FASTRATES_SEED";

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_REFUTED: i32 = 3;
pub const EXIT_INCONCLUSIVE: i32 = 4;
pub const EXIT_INFEASIBLE: i32 = 5;

#[derive(Parser, Debug)]
#[command(name = "fastrates", version, about = "Check fast-rate conditions and run rate experiments")]
pub struct Cli {
    /// Worker threads: a count or "auto".
    #[arg(long, global = true, default_value = "auto")]
    pub threads: String,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Check one condition on a problem.
    Check(CheckArgs),
    /// Largest eta at which a condition holds.
    MaxEta(MaxEtaArgs),
    /// Evaluate the rate bounds.
    Bound(BoundArgs),
    /// Solve a moment-problem instance and compare with the closed-form bound.
    Moment(MomentArgs),
    /// Run a seeded rate experiment.
    Rates(RatesArgs),
    /// Run the Aggregating Algorithm on a sampled stream.
    AaSim(AaSimArgs),
}

/// Problem selection shared by the problem-based subcommands.
#[derive(Args, Debug, Default)]
pub struct ProblemArgs {
    /// Recipe name (bernoulli01, sqbounded, subgauss, normloc, heavytail, brier).
    pub recipe: Option<String>,
    /// JSON config file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Write the JSON result here instead of stdout.
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long)]
    pub p: Option<f64>,
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long)]
    pub grid: Option<f64>,
    #[arg(long = "B")]
    pub b: Option<f64>,
    #[arg(long)]
    pub points: Option<f64>,
    #[arg(long)]
    pub sigma2: Option<f64>,
    #[arg(long)]
    pub lo: Option<f64>,
    #[arg(long)]
    pub hi: Option<f64>,
    #[arg(long = "M")]
    pub m: Option<f64>,
    #[arg(long = "nu-lo")]
    pub nu_lo: Option<f64>,
    #[arg(long = "nu-hi")]
    pub nu_hi: Option<f64>,
    #[arg(long = "nu-points")]
    pub nu_points: Option<f64>,
    #[arg(long = "mu-lo")]
    pub mu_lo: Option<f64>,
    #[arg(long = "mu-hi")]
    pub mu_hi: Option<f64>,
    #[arg(long = "mu-points")]
    pub mu_points: Option<f64>,
    #[arg(long = "A")]
    pub a: Option<f64>,
    #[arg(long)]
    pub outcomes: Option<f64>,
    #[arg(long)]
    pub steps: Option<f64>,
}

impl ProblemArgs {
    fn params(&self) -> BTreeMap<String, f64> {
        let pairs = [
            ("p", self.p),
            ("delta", self.delta),
            ("grid", self.grid),
            ("B", self.b),
            ("points", self.points),
            ("sigma2", self.sigma2),
            ("lo", self.lo),
            ("hi", self.hi),
            ("M", self.m),
            ("nu_lo", self.nu_lo),
            ("nu_hi", self.nu_hi),
            ("nu_points", self.nu_points),
            ("mu_lo", self.mu_lo),
            ("mu_hi", self.mu_hi),
            ("mu_points", self.mu_points),
            ("A", self.a),
            ("outcomes", self.outcomes),
            ("steps", self.steps),
        ];
        pairs.into_iter().filter_map(|(k, v)| v.map(|v| (k.to_string(), v))).collect()
    }
}

#[derive(Args, Debug)]
pub struct CheckArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    #[arg(long)]
    pub kind: Option<String>,
    #[arg(long)]
    pub eta: Option<f64>,
    #[arg(long)]
    pub eps: Option<f64>,
    /// Bernstein: `u(x) = slope * x^power`.
    #[arg(long = "u-slope")]
    pub u_slope: Option<f64>,
    #[arg(long = "u-power")]
    pub u_power: Option<f64>,
    /// Bernstein moment: variance or second_moment.
    #[arg(long)]
    pub moment: Option<String>,
}

#[derive(Args, Debug)]
pub struct MaxEtaArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    #[arg(long)]
    pub kind: Option<String>,
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long)]
    pub tol: Option<f64>,
}

#[derive(Args, Debug)]
pub struct BoundArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Loss range.
    #[arg(long = "V")]
    pub v: Option<f64>,
    #[arg(long = "eta-star")]
    pub eta_star: Option<f64>,
    /// Model size.
    #[arg(long = "N")]
    pub n_models: Option<u64>,
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long)]
    pub n: Option<u64>,
    /// VC-type constants.
    #[arg(long = "K")]
    pub k: Option<f64>,
    #[arg(long = "C")]
    pub c: Option<f64>,
}

#[derive(Args, Debug)]
pub struct MomentArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long = "eta-star")]
    pub eta_star: Option<f64>,
    #[arg(long = "a-over-n")]
    pub a_over_n: Option<f64>,
    #[arg(long = "V")]
    pub v: Option<f64>,
    /// Grid size of the LP oracle.
    #[arg(long = "lp-grid")]
    pub lp_grid: Option<usize>,
}

#[derive(Args, Debug)]
pub struct RatesArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    /// erm or aa.
    #[arg(long)]
    pub learner: Option<String>,
    #[arg(long)]
    pub eta: Option<f64>,
    #[arg(long)]
    pub substitution: Option<String>,
    /// Comma-separated sample sizes.
    #[arg(long, value_delimiter = ',')]
    pub ns: Option<Vec<usize>>,
    #[arg(long)]
    pub reps: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Write the rate curve CSV here.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct AaSimArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    #[arg(long)]
    pub eta: Option<f64>,
    #[arg(long)]
    pub substitution: Option<String>,
    /// Stream length.
    #[arg(long)]
    pub n: Option<usize>,
    /// Distribution in the family that generates the stream.
    #[arg(long = "p-index")]
    pub p_index: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
}

/// Everything a config file may contain. Each subcommand reads the keys it needs.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub recipe: Option<String>,
    pub params: Option<BTreeMap<String, f64>>,
    /// Inline problem, used instead of a recipe.
    pub problem: Option<DecisionProblem>,
    pub kind: Option<ConditionKind>,
    pub eta: Option<f64>,
    pub eps: Option<f64>,
    pub tol: Option<f64>,
    pub search: Option<SearchFamily>,
    pub u: Option<VFunction>,
    pub moment: Option<BernsteinMoment>,
    pub bound: Option<RateBoundInputs>,
    pub instance: Option<MomentProblemInstance>,
    pub lp_grid: Option<usize>,
    pub learner: Option<Learner>,
    pub ns: Option<Vec<usize>>,
    pub reps: Option<usize>,
    pub n: Option<usize>,
    pub p_index: Option<usize>,
    pub substitution: Option<Substitution>,
    pub seed: Option<u64>,
    pub output: Option<PathBuf>,
    pub csv: Option<PathBuf>,
    pub threads: Option<Threads>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Threads {
    Count(usize),
    Auto(AutoThreads),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AutoThreads {
    Auto,
}

/// What a command produced.
#[derive(Debug)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

#[derive(Debug)]
enum CliError {
    Config(String),
    Lib(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Lib(e)
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn config_err(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

/// Parse arguments (including the program name) and run, capturing output.
pub fn run_capture<I, T>(args: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let text = e.render().to_string();
            return if code == EXIT_OK {
                Outcome { code, stdout: text, stderr: String::new() }
            } else {
                Outcome { code, stdout: String::new(), stderr: text }
            };
        }
    };
    execute(cli)
}

/// Parse arguments, run, print, and return the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let out = run_capture(args);
    print!("{}", out.stdout);
    eprint!("{}", out.stderr);
    out.code
}

pub fn execute(cli: Cli) -> Outcome {
    let result = (|| -> CliResult<(i32, Value, Option<PathBuf>)> {
        let (config, output) = load_config(&cli.command)?;
        let threads = match (cli.threads.as_str(), &config.threads) {
            ("auto", Some(Threads::Count(n))) => Some(*n),
            ("auto", _) => None,
            (s, _) => Some(s.parse::<usize>().map_err(|_| config_err(format!("--threads must be a count or auto, got {s:?}")))?),
        };
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads.unwrap_or(0))
            .build()
            .map_err(|e| config_err(format!("thread pool: {e}")))?;
        let (code, value) = pool.install(|| dispatch(&cli.command, &config))?;
        Ok((code, value, output.or(config.output.clone())))
    })();
    match result {
        Ok((code, value, path)) => {
            let text = serde_json::to_string_pretty(&value).expect("serialisable") + "\n";
            match path {
                Some(p) => match std::fs::write(&p, &text) {
                    Ok(()) => Outcome { code, stdout: String::new(), stderr: String::new() },
                    Err(e) => Outcome { code: EXIT_FAILURE, stdout: String::new(), stderr: format!("error: writing {}: {e}\n", p.display()) },
                },
                None => Outcome { code, stdout: text, stderr: String::new() },
            }
        }
        Err(CliError::Config(m)) => Outcome { code: EXIT_CONFIG, stdout: String::new(), stderr: format!("error: {m}\n") },
        Err(CliError::Lib(e)) => {
            let code = match e {
                Error::InfeasibleInstance { .. } => EXIT_INFEASIBLE,
                Error::InvalidArgument(_)
                | Error::InvalidDistribution(_)
                | Error::InvalidMixture(_)
                | Error::ShapeViolation(_)
                | Error::UnsupportedKind(..)
                | Error::EmbeddingMissing
                | Error::PreconditionViolated(_) => EXIT_CONFIG,
                _ => EXIT_FAILURE,
            };
            Outcome { code, stdout: String::new(), stderr: format!("error: {e}\n") }
        }
    }
}

fn load_config(cmd: &Command) -> CliResult<(RunConfig, Option<PathBuf>)> {
    let (path, output) = match cmd {
        Command::Check(a) => (&a.problem.config, &a.problem.output),
        Command::MaxEta(a) => (&a.problem.config, &a.problem.output),
        Command::Rates(a) => (&a.problem.config, &a.problem.output),
        Command::AaSim(a) => (&a.problem.config, &a.problem.output),
        Command::Bound(a) => (&a.config, &a.output),
        Command::Moment(a) => (&a.config, &a.output),
    };
    let config = match path {
        Some(p) => read_config(p)?,
        None => RunConfig::default(),
    };
    Ok((config, output.clone()))
}

/// Read and validate a JSON config file.
pub fn read_config(path: &Path) -> std::result::Result<RunConfig, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("reading {}: {e}", path.display()))?;
    parse_config(&text)
}

pub fn parse_config(text: &str) -> std::result::Result<RunConfig, String> {
    serde_json::from_str(text).map_err(|e| format!("invalid config: {e}"))
}

impl From<String> for CliError {
    fn from(s: String) -> Self {
        CliError::Config(s)
    }
}

fn effective_seed(flag: Option<u64>, config: &RunConfig) -> CliResult<u64> {
    if let Ok(s) = std::env::var(SEED_ENV) {
        return s.trim().parse().map_err(|_| config_err(format!("{SEED_ENV} must be an unsigned integer")));
    }
    Ok(flag.or(config.seed).unwrap_or(0))
}

fn resolve_problem(args: &ProblemArgs, config: &RunConfig) -> CliResult<(String, DecisionProblem, BTreeMap<String, f64>)> {
    let flags = args.params();
    if let Some(name) = args.recipe.as_ref().or(config.recipe.as_ref()) {
        let mut params = config.params.clone().unwrap_or_default();
        params.extend(flags);
        let r: ProblemRecipe = problems::recipe(name, &params).map_err(|e| config_err(e.to_string()))?;
        return Ok((r.name, r.problem, r.expected));
    }
    match &config.problem {
        Some(p) if flags.is_empty() => Ok(("inline".into(), p.clone(), BTreeMap::new())),
        Some(_) => Err(config_err("recipe parameters given without a recipe")),
        None => Err(config_err("no problem given: pass a recipe name or a config with \"recipe\" or \"problem\"")),
    }
}

fn parse_kind(flag: &Option<String>, config: &RunConfig) -> CliResult<ConditionKind> {
    match flag {
        Some(s) => s.parse().map_err(|e: Error| config_err(e.to_string())),
        None => config.kind.ok_or_else(|| config_err("missing --kind")),
    }
}

fn parse_substitution(flag: &Option<String>, config: &RunConfig) -> CliResult<Substitution> {
    match flag.as_deref() {
        Some("mean") => Ok(Substitution::Mean),
        Some("log_loss_mean") | Some("log-loss-mean") => Ok(Substitution::LogLossMean),
        Some("grid_minimax") | Some("grid-minimax") => Ok(Substitution::grid_minimax()),
        Some(s) => Err(config_err(format!("unknown substitution {s:?}"))),
        None => Ok(config.substitution.clone().unwrap_or(Substitution::grid_minimax())),
    }
}

fn verdict_code(v: Verdict) -> i32 {
    match v {
        Verdict::Holds => EXIT_OK,
        Verdict::RefutedOnTestedFamily => EXIT_REFUTED,
        Verdict::Inconclusive => EXIT_INCONCLUSIVE,
    }
}

fn dispatch(cmd: &Command, config: &RunConfig) -> CliResult<(i32, Value)> {
    match cmd {
        Command::Check(a) => cmd_check(a, config),
        Command::MaxEta(a) => cmd_max_eta(a, config),
        Command::Bound(a) => cmd_bound(a, config),
        Command::Moment(a) => cmd_moment(a, config),
        Command::Rates(a) => cmd_rates(a, config),
        Command::AaSim(a) => cmd_aa_sim(a, config),
    }
}

fn cmd_check(a: &CheckArgs, config: &RunConfig) -> CliResult<(i32, Value)> {
    let (name, problem, _) = resolve_problem(&a.problem, config)?;
    let kind = parse_kind(&a.kind, config)?;
    let search = config.search.clone().unwrap_or_default();
    let report = match kind {
        ConditionKind::Bernstein => {
            let u = match (a.u_slope, a.u_power) {
                (Some(c), p) => VFunction::power(c, p.unwrap_or(1.0)),
                (None, Some(_)) => return Err(config_err("--u-power needs --u-slope")),
                (None, None) => config.u.clone().ok_or_else(|| config_err("Bernstein check needs --u-slope or \"u\""))?,
            };
            let moment = match a.moment.as_deref() {
                Some("variance") => BernsteinMoment::Variance,
                Some("second_moment") | Some("second-moment") => BernsteinMoment::SecondMoment,
                Some(s) => return Err(config_err(format!("unknown moment {s:?}"))),
                None => config.moment.unwrap_or_default(),
            };
            conditions::check_bernstein(&problem, &u, moment)?
        }
        ConditionKind::Jrt2 => return Err(config_err("jrt2 needs a gamma function and is only available from the library")),
        _ => {
            let eta = a.eta.or(config.eta).ok_or_else(|| config_err("missing --eta"))?;
            let eps = a.eps.or(config.eps).unwrap_or(0.0);
            conditions::check_condition(&problem, kind, eta, eps, &search)?
        }
    };
    let code = verdict_code(report.verdict);
    Ok((code, json!({ "problem": name, "report": report })))
}

fn cmd_max_eta(a: &MaxEtaArgs, config: &RunConfig) -> CliResult<(i32, Value)> {
    let (name, problem, expected) = resolve_problem(&a.problem, config)?;
    let kind = match (&a.kind, config.kind) {
        (None, None) => ConditionKind::Central,
        _ => parse_kind(&a.kind, config)?,
    };
    let eps = a.eps.or(config.eps).unwrap_or(0.0);
    let tol = a.tol.or(config.tol).unwrap_or(1e-9);
    if !(tol > 0.0) {
        return Err(config_err("tol must be positive"));
    }
    let search = config.search.clone().unwrap_or_default();
    let eta = conditions::max_eta(&problem, kind, eps, tol, &search)?;
    Ok((
        EXIT_OK,
        json!({ "problem": name, "kind": kind, "eps": eps, "tol": tol, "eta_max": eta, "expected": expected.get("eta_max") }),
    ))
}

fn cmd_bound(a: &BoundArgs, config: &RunConfig) -> CliResult<(i32, Value)> {
    let base = config.bound.clone();
    let pick = |flag: Option<f64>, from: Option<f64>, name: &str| -> CliResult<f64> {
        flag.or(from).ok_or_else(|| config_err(format!("missing --{name}")))
    };
    let inp = RateBoundInputs {
        v_range: pick(a.v, base.as_ref().map(|b| b.v_range), "V")?,
        eta_star: pick(a.eta_star, base.as_ref().map(|b| b.eta_star), "eta-star")?,
        n_models: a.n_models.or(base.as_ref().map(|b| b.n_models)).ok_or_else(|| config_err("missing --N"))?,
        delta: pick(a.delta, base.as_ref().map(|b| b.delta), "delta")?,
        n: a.n.or(base.as_ref().map(|b| b.n)).ok_or_else(|| config_err("missing --n"))?,
        k: a.k.or(base.as_ref().and_then(|b| b.k)),
        c: a.c.or(base.as_ref().and_then(|b| b.c)),
    };
    let finite = momentbounds::finite_class_bound(&inp)?;
    let vc = match (inp.k, inp.c) {
        (Some(_), Some(_)) => Some(json!({
            "bound": momentbounds::vc_type_bound(&inp)?,
            "branch": momentbounds::vc_type_branch(&inp)?,
        })),
        _ => None,
    };
    Ok((EXIT_OK, json!({ "inputs": inp, "finite_class": finite, "vc_type": vc })))
}

fn cmd_moment(a: &MomentArgs, config: &RunConfig) -> CliResult<(i32, Value)> {
    let base = config.instance;
    let inst = MomentProblemInstance {
        eta_star: a.eta_star.or(base.map(|b| b.eta_star)).ok_or_else(|| config_err("missing --eta-star"))?,
        a_over_n: a.a_over_n.or(base.map(|b| b.a_over_n)).ok_or_else(|| config_err("missing --a-over-n"))?,
        range_v: a.v.or(base.map(|b| b.range_v)).unwrap_or(1.0),
    };
    let grid = a.lp_grid.or(config.lp_grid).unwrap_or(2001);
    let bound = momentbounds::cgf_half_eta_bound(inst.eta_star, inst.a_over_n, inst.range_v)?;
    let feasibility = inst.feasibility();
    let oracle = if feasibility == Feasibility::Interior {
        Some(momentbounds::moment_lp_oracle(&inst, grid)?)
    } else {
        None
    };
    let cert = momentbounds::dual_certificate_for(inst.range_v * inst.eta_star)?;
    let scaled = inst.a_over_n / inst.range_v;
    Ok((
        EXIT_OK,
        json!({
            "instance": inst,
            "feasibility": feasibility,
            "threshold": momentbounds::feasibility_threshold(inst.range_v * inst.eta_star),
            "bound": bound,
            "exp_bound": bound.exp(),
            "oracle": oracle.as_ref().map(|o| o.value),
            "atoms": oracle.as_ref().map(|o| o.atoms.clone()),
            "lp_grid": grid,
            "certificate": cert,
            "certificate_bound": -cert.dual_value(scaled),
        }),
    ))
}

fn cmd_rates(a: &RatesArgs, config: &RunConfig) -> CliResult<(i32, Value)> {
    let (name, problem, _) = resolve_problem(&a.problem, config)?;
    let learner = match a.learner.as_deref() {
        Some("erm") => Learner::Erm,
        Some("aa") => Learner::Aa {
            eta: a.eta.or(config.eta).ok_or_else(|| config_err("aa needs --eta"))?,
            substitution: parse_substitution(&a.substitution, config)?,
            mode: OtbMode::UniformRound,
        },
        Some(s) => return Err(config_err(format!("unknown learner {s:?}"))),
        None => config.learner.clone().unwrap_or(Learner::Erm),
    };
    let ns = a
        .ns
        .clone()
        .or(config.ns.clone())
        .unwrap_or_else(|| (6..=12).map(|k| 1usize << k).collect());
    let reps = a.reps.or(config.reps).unwrap_or(200);
    let seed = effective_seed(a.seed, config)?;
    let mut curve = learners::rate_experiment(&problem, &learner, &ns, reps, seed)?;
    curve.problem = name;
    if let Some(path) = a.csv.as_ref().or(config.csv.as_ref()) {
        let f = std::fs::File::create(path).map_err(|e| config_err(format!("creating {}: {e}", path.display())))?;
        curve.write_csv(f)?;
    }
    Ok((EXIT_OK, serde_json::to_value(&curve).expect("serialisable")))
}

fn cmd_aa_sim(a: &AaSimArgs, config: &RunConfig) -> CliResult<(i32, Value)> {
    let (name, problem, _) = resolve_problem(&a.problem, config)?;
    let eta = a.eta.or(config.eta).ok_or_else(|| config_err("missing --eta"))?;
    let subst = parse_substitution(&a.substitution, config)?;
    let n = a.n.or(config.n).unwrap_or(100);
    let p_index = a.p_index.or(config.p_index).unwrap_or(0);
    if p_index >= problem.p_family.len() {
        return Err(config_err(format!("p-index {p_index} outside the family of {}", problem.p_family.len())));
    }
    let seed = effective_seed(a.seed, config)?;
    let sample = learners::Sample::draw(&problem, p_index, n, seed, 0);
    let prior = PredictorMixture::uniform(problem.model.len());
    let run = learners::aggregating_algorithm(&problem, &sample.outcomes, eta, &subst, &prior)?;
    let log_n = (problem.model.len() as f64).ln();
    Ok((
        EXIT_OK,
        json!({
            "problem": name,
            "eta": eta,
            "substitution": subst,
            "n": n,
            "p_index": p_index,
            "seed": seed,
            "cumulative_loss": run.cumulative_loss(),
            "cumulative_mix_loss": run.cumulative_mix_loss(),
            "best_expert_loss": run.best_expert_loss(),
            "regret": run.regret(),
            "mix_regret": run.mix_regret(),
            "log_n_over_eta": log_n / eta,
            "final_weights": run.weights.last(),
        }),
    ))
}
