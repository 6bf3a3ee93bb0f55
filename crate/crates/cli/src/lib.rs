//! Command-line front end: CSV in, JSON report out.
//!
//! [`run`] is the whole program minus the process exit, so tests can drive it
//! in-process. Reports always carry the same keys for a given command; values
//! that do not apply are `null`.

pub mod error;
pub mod io;
pub mod json;

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use l1cert::certify::{certificate_lp, check_condition1, ConditionReason, ConditionStatus, Engine, SupportPattern};
use l1cert::generator::{generate_nonunique, generate_unique, Ensemble, GeneratorSpec};
use l1cert::linalg::numerical_rank;
use l1cert::oracle::{bp_face_range, oracle_unique};
use l1cert::solvers::{
    kkt_report, lasso_objective, reduce_to_bp, solve_bp, solve_lasso, LassoOptions, Model, ProblemInstance,
};
use l1cert::uniqueness::{equicorrelation, reduced_condition2, verify_model, verify_model_with, Condition2Outcome, VerdictStatus};
use l1cert::{tol, DenseMatrix, Error};

pub use error::{CliError, EXIT_INPUT, EXIT_NUMERICAL, EXIT_OK};
use json::Json;

/// Environment variable that overrides `--seed` of `generate`.
pub const SEED_ENV: &str = "L1CERT_SEED";

#[derive(Debug, Parser)]
#[command(name = "l1cert", version, about = "Uniqueness certificates for l1-minimization")]
pub struct Cli {
    /// Add wall-clock timings to the report.
    #[arg(long, global = true)]
    pub timings: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve basis pursuit or the Lasso.
    Solve(SolveArgs),
    /// Decide whether a given solution is unique.
    Check(CheckArgs),
    /// Search for a strict dual certificate for a support and sign pattern.
    Certify(CertifyArgs),
    /// Brute-force uniqueness test through the optimal face.
    Oracle(OracleArgs),
    /// Write a random instance with a known verdict.
    Generate(GenerateArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SolveModel {
    Bp,
    Lasso,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelArg {
    Bp,
    Lasso,
    ResCon,
    L1Con,
}

impl ModelArg {
    fn name(self) -> &'static str {
        match self {
            Self::Bp => "bp",
            Self::Lasso => "lasso",
            Self::ResCon => "res-con",
            Self::L1Con => "l1-con",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EngineArg {
    Lp,
    Barrier,
    Admm,
}

impl From<EngineArg> for Engine {
    fn from(e: EngineArg) -> Self {
        match e {
            EngineArg::Lp => Engine::Lp,
            EngineArg::Barrier => Engine::Barrier,
            EngineArg::Admm => Engine::Admm,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EnsembleArg {
    Gaussian,
    PartialIdentity,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[arg(long, value_enum)]
    pub model: SolveModel,
    #[arg(long = "A")]
    pub a: PathBuf,
    #[arg(long = "b")]
    pub b: PathBuf,
    #[arg(long, visible_alias = "param")]
    pub lambda: Option<f64>,
    /// Stationarity target of the Lasso solver.
    #[arg(long)]
    pub tol: Option<f64>,
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    #[arg(long, value_enum)]
    pub model: ModelArg,
    #[arg(long = "A")]
    pub a: PathBuf,
    #[arg(long = "b")]
    pub b: PathBuf,
    /// lambda, sigma or tau, depending on the model.
    #[arg(long, visible_aliases = ["lambda", "sigma", "tau"])]
    pub param: Option<f64>,
    #[arg(long)]
    pub x: PathBuf,
    #[arg(long, value_enum, default_value = "lp")]
    pub engine: EngineArg,
    #[arg(long)]
    pub with_oracle: bool,
}

#[derive(Debug, Args)]
pub struct CertifyArgs {
    #[arg(long = "A")]
    pub a: PathBuf,
    /// Comma-separated 0-based column indices; may be empty.
    #[arg(long, allow_hyphen_values = true)]
    pub support: String,
    /// Comma-separated signs, each +1 or -1.
    #[arg(long, allow_hyphen_values = true)]
    pub signs: String,
    #[arg(long, value_enum, default_value = "lp")]
    pub engine: EngineArg,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    #[arg(long, value_enum)]
    pub model: ModelArg,
    #[arg(long = "A")]
    pub a: PathBuf,
    #[arg(long = "b")]
    pub b: PathBuf,
    #[arg(long, visible_aliases = ["lambda", "sigma", "tau"])]
    pub param: Option<f64>,
    #[arg(long)]
    pub x: PathBuf,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long)]
    pub m: usize,
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub k: usize,
    #[arg(long)]
    pub delta: f64,
    #[arg(long)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub nonunique: bool,
    #[arg(long, value_enum, default_value = "gaussian")]
    pub ensemble: EnsembleArg,
}

/// What the process prints and returns.
#[derive(Debug, Clone, PartialEq)]
pub struct Output {
    pub exit_code: i32,
    pub stdout: String,
}

/// Runs the program with `L1CERT_SEED` taken from the environment.
pub fn run<I, T>(args: I) -> Output
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    run_with_seed_env(args, std::env::var(SEED_ENV).ok())
}

/// [`run`] with an explicit value for `L1CERT_SEED`.
pub fn run_with_seed_env<I, T>(args: I, seed_env: Option<String>) -> Output
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => Output {
                    exit_code: EXIT_OK,
                    stdout: e.to_string(),
                },
                _ => {
                    let err = CliError::input("usage", e.to_string().trim_end().to_string());
                    Output {
                        exit_code: err.exit_code,
                        stdout: err.to_json(None).render(),
                    }
                }
            };
        }
    };
    let name = match &cli.command {
        Command::Solve(_) => "solve",
        Command::Check(_) => "check",
        Command::Certify(_) => "certify",
        Command::Oracle(_) => "oracle",
        Command::Generate(_) => "generate",
    };
    let start = Instant::now();
    let result = match &cli.command {
        Command::Solve(a) => cmd_solve(a),
        Command::Check(a) => cmd_check(a),
        Command::Certify(a) => cmd_certify(a),
        Command::Oracle(a) => cmd_oracle(a),
        Command::Generate(a) => cmd_generate(a, seed_env.as_deref()),
    };
    match result {
        Ok(mut report) => {
            report.insert("command", name);
            if cli.timings {
                report.insert(
                    "timings",
                    Json::obj().with("total_seconds", start.elapsed().as_secs_f64()),
                );
            }
            Output {
                exit_code: EXIT_OK,
                stdout: report.render(),
            }
        }
        Err(e) => Output {
            exit_code: e.exit_code,
            stdout: e.to_json(Some(name)).render(),
        },
    }
}

fn path_str(p: &Path) -> String {
    p.display().to_string()
}

fn instance_digest(a: &DenseMatrix, model: &str, param: Option<f64>) -> Json {
    Json::obj()
        .with("m", a.rows())
        .with("n", a.cols())
        .with("model", model)
        .with("param", param)
}

fn load_instance(model: ModelArg, a: &Path, b: &Path, param: Option<f64>) -> Result<ProblemInstance, CliError> {
    let a = io::read_matrix(a)?;
    let b = io::read_vector(b)?;
    let model = Model::from_name(model.name(), param)?;
    Ok(ProblemInstance::new(model, a, b)?)
}

fn load_point(path: &Path, n: usize) -> Result<Vec<f64>, CliError> {
    let x = io::read_vector(path)?;
    if x.len() != n {
        return Err(Error::DimensionMismatch(format!("x has length {}, A has {n} columns", x.len())).into());
    }
    Ok(x)
}

pub fn cmd_solve(args: &SolveArgs) -> Result<Json, CliError> {
    let a = io::read_matrix(&args.a)?;
    let b = io::read_vector(&args.b)?;
    let echo = Json::obj()
        .with("A", path_str(&args.a))
        .with("b", path_str(&args.b))
        .with("lambda", args.lambda)
        .with("model", if args.model == SolveModel::Bp { "bp" } else { "lasso" })
        .with("tol", args.tol);
    let (inst, x, objective, dual, iterations) = match args.model {
        SolveModel::Bp => {
            let inst = ProblemInstance::new(Model::BasisPursuit, a, b)?;
            let sol = solve_bp(inst.a(), inst.b())?;
            (inst, sol.x, sol.objective, Some(sol.y), None)
        }
        SolveModel::Lasso => {
            let lambda = args
                .lambda
                .ok_or_else(|| CliError::input("invalid argument", "model lasso needs --lambda"))?;
            let inst = ProblemInstance::new(Model::PenalizedLs { lambda }, a, b)?;
            let mut opts = LassoOptions::default();
            if let Some(t) = args.tol {
                if !(t.is_finite() && t > 0.0) {
                    return Err(CliError::input("invalid argument", format!("--tol must be positive, got {t}")));
                }
                opts.tol = t;
            }
            let sol = solve_lasso(inst.a(), inst.b(), lambda, &opts)?;
            let obj = lasso_objective(inst.a(), inst.b(), lambda, &sol.x);
            (inst, sol.x, obj, None, Some(sol.iterations))
        }
    };
    let kkt = kkt_report(&inst, &x)?;
    Ok(Json::obj()
        .with("arguments", echo)
        .with("instance", instance_digest(inst.a(), inst.model.name(), inst.model.param()))
        .with("x", x.as_slice())
        .with("objective", objective)
        .with("dual", dual)
        .with("iterations", iterations)
        .with("stationarity_residual", kkt.stationarity_residual)
        .with("support", l1cert::support(&x)))
}

pub fn cmd_check(args: &CheckArgs) -> Result<Json, CliError> {
    let inst = load_instance(args.model, &args.a, &args.b, args.param)?;
    let x = load_point(&args.x, inst.a().cols())?;
    let engine: Engine = args.engine.into();
    let verdict = verify_model_with(&inst, &x, engine)?;
    let echo = Json::obj()
        .with("A", path_str(&args.a))
        .with("b", path_str(&args.b))
        .with("engine", engine.name())
        .with("model", args.model.name())
        .with("param", args.param)
        .with("with_oracle", args.with_oracle)
        .with("x", path_str(&args.x));

    let (certificate, eq_residual, certificate_margin) = match &verdict.certificate {
        Some(c) => (Json::from(c.y.as_slice()), Json::from(c.eq_residual), Json::from(c.margin)),
        None => (Json::Null, Json::Null, Json::Null),
    };
    let witness = match &verdict.witness {
        Some(w) => Json::obj().with("kind", w.kind()).with("vector", w.vector()),
        None => Json::Null,
    };
    let equicorrelation_json = match inst.model {
        Model::PenalizedLs { lambda } => {
            let j = equicorrelation(inst.a(), inst.b(), lambda, &x)?;
            let rank = numerical_rank(&inst.a().column_submatrix(&j.indices)?);
            Json::obj()
                .with("full_column_rank", rank == j.indices.len())
                .with("indices", j.indices.as_slice())
                .with("rank", rank)
        }
        _ => Json::Null,
    };
    let active_set = match reduced_condition2(&inst, &x) {
        Ok(Condition2Outcome::Checked { active, outcome }) => Json::obj()
            .with("holds", outcome.holds())
            .with("indices", active.indices.as_slice())
            .with("kind", active.kind.name())
            .with("multiplier", active.multiplier),
        Ok(Condition2Outcome::NotApplicable(_)) | Err(Error::NotOptimalPoint(_) | Error::NotBounding { .. }) => {
            Json::Null
        }
        Err(e) => return Err(e.into()),
    };
    let oracle = if args.with_oracle {
        match oracle_unique(&inst, &x) {
            Ok(unique) => {
                let agrees = match verdict.status {
                    VerdictStatus::Unique => Some(unique),
                    VerdictStatus::NotUnique => Some(!unique),
                    VerdictStatus::Indeterminate => None,
                };
                Json::obj().with("agrees", agrees).with("error", Json::Null).with("unique", unique)
            }
            Err(e @ (Error::NotOptimalPoint(_) | Error::NotBounding { .. })) => Json::obj()
                .with("agrees", Json::Null)
                .with("error", e.to_string())
                .with("unique", Json::Null),
            Err(e) => return Err(e.into()),
        }
    } else {
        Json::Null
    };

    Ok(Json::obj()
        .with("active_set", active_set)
        .with("arguments", echo)
        .with("certificate", certificate)
        .with("certificate_margin", certificate_margin)
        .with("engine", engine.name())
        .with("eq_residual", eq_residual)
        .with("equicorrelation", equicorrelation_json)
        .with("full_row_rank", inst.is_full_row_rank())
        .with("instance", instance_digest(inst.a(), inst.model.name(), inst.model.param()))
        .with("margin", verdict.max_margin)
        .with("oracle", oracle)
        .with("reason", verdict.reason)
        .with("signs", verdict.signs.as_slice())
        .with("status", verdict.status.name())
        .with("support", verdict.support.as_slice())
        .with("witness", witness)
        .with("zero_solution", verdict.zero_solution))
}

fn parse_list<T: std::str::FromStr>(text: &str, what: &str) -> Result<Vec<T>, CliError> {
    let text = text.trim();
    if text.is_empty() {
        return Ok(Vec::new());
    }
    text.split(',')
        .map(|t| {
            t.trim()
                .parse()
                .map_err(|_| CliError::input("parse error", format!("cannot parse {what} entry {:?}", t.trim())))
        })
        .collect()
}

fn condition_status_name(s: ConditionStatus) -> &'static str {
    match s {
        ConditionStatus::Holds => "Holds",
        ConditionStatus::Fails => "Fails",
        ConditionStatus::Indeterminate => "Indeterminate",
    }
}

pub fn cmd_certify(args: &CertifyArgs) -> Result<Json, CliError> {
    let a = io::read_matrix(&args.a)?;
    let indices: Vec<usize> = parse_list(&args.support, "support")?;
    let signs: Vec<f64> = parse_list(&args.signs, "sign")?;
    if let Some(s) = signs.iter().find(|s| s.abs() != 1.0) {
        return Err(CliError::input("invalid argument", format!("signs must be +1 or -1, got {s}")));
    }
    let sp = SupportPattern::new(indices, signs, a.cols())?;
    let engine: Engine = args.engine.into();
    let outcome = check_condition1(&a, &sp, engine)?;
    // Only the LP engine computes the exact optimum; report it for every
    // engine, including when the rank test already failed.
    // A_I^T y = s can only be inconsistent when A_I is rank deficient, where
    // the rank test answers first; name the more specific failure then.
    let mut reason = outcome.reason;
    let epsilon = match outcome.max_margin {
        Some(e) => Some(e),
        None if sp.is_empty() => Some(if a.cols() == 0 { f64::INFINITY } else { 1.0 }),
        None => match certificate_lp(&a, &sp) {
            Ok(mm) => Some(mm.epsilon),
            Err(Error::NoEqualitySolution) => {
                reason = Some(ConditionReason::NoEqualitySolution);
                None
            }
            Err(e) => return Err(e.into()),
        },
    };
    let echo = Json::obj()
        .with("A", path_str(&args.a))
        .with("engine", engine.name())
        .with("signs", args.signs.as_str())
        .with("support", args.support.as_str());
    let (y, eq_residual, certificate_margin) = match &outcome.certificate {
        Some(c) => (Json::from(c.y.as_slice()), Json::from(c.eq_residual), Json::from(c.margin)),
        None => (Json::Null, Json::Null, Json::Null),
    };
    Ok(Json::obj()
        .with("arguments", echo)
        .with("certificate", y)
        .with("certificate_margin", certificate_margin)
        .with("cross_check_recommended", outcome.cross_check_recommended)
        .with("engine", engine.name())
        .with("epsilon", epsilon)
        .with("eq_residual", eq_residual)
        .with("full_column_rank", outcome.full_column_rank)
        .with("instance", Json::obj().with("m", a.rows()).with("n", a.cols()))
        .with("iterations", outcome.iterations)
        .with("rank", outcome.rank)
        .with("reason", reason.map(|r| r.code()))
        .with("signs", sp.signs())
        .with("status", condition_status_name(outcome.status))
        .with("support", sp.indices()))
}

pub fn cmd_oracle(args: &OracleArgs) -> Result<Json, CliError> {
    let inst = load_instance(args.model, &args.a, &args.b, args.param)?;
    let x = load_point(&args.x, inst.a().cols())?;
    let red = reduce_to_bp(&inst, &x, tol::KKT)?;
    let face = bp_face_range(&red.a, &red.b_star)?;
    let echo = Json::obj()
        .with("A", path_str(&args.a))
        .with("b", path_str(&args.b))
        .with("model", args.model.name())
        .with("param", args.param)
        .with("x", path_str(&args.x));
    Ok(Json::obj()
        .with("arguments", echo)
        .with("instance", instance_digest(inst.a(), inst.model.name(), inst.model.param()))
        .with("lower", face.lower.as_slice())
        .with("max_width", face.max_width())
        .with("optimal_value", face.optimal_value)
        .with("unique", face.is_singleton())
        .with("upper", face.upper.as_slice()))
}

pub fn cmd_generate(args: &GenerateArgs, seed_env: Option<&str>) -> Result<Json, CliError> {
    let seed = match seed_env {
        Some(s) => s
            .trim()
            .parse::<u64>()
            .map_err(|_| CliError::input("invalid argument", format!("{SEED_ENV}={s:?} is not a u64")))?,
        None => args.seed,
    };
    let ensemble = match args.ensemble {
        EnsembleArg::Gaussian => Ensemble::Gaussian,
        EnsembleArg::PartialIdentity => Ensemble::PartialIdentity,
    };
    let spec = GeneratorSpec::new(args.m, args.n, args.k, args.delta, seed)?.with_ensemble(ensemble)?;
    let generated = if args.nonunique {
        generate_nonunique(&spec)?
    } else {
        generate_unique(&spec)?
    };
    let claimed = if args.nonunique { "NotUnique" } else { "Unique" };
    let inst = generated.bp_instance();
    let verdict = verify_model(&inst, &generated.x_star)?;
    let oracle = oracle_unique(&inst, &generated.x_star)?;
    let consistent = verdict.status.name() == claimed && oracle == !args.nonunique;

    std::fs::create_dir_all(&args.out)
        .map_err(|e| CliError::input("io error", format!("{}: {e}", args.out.display())))?;
    io::write_matrix(&args.out.join("A.csv"), &generated.a)?;
    io::write_vector(&args.out.join("b.csv"), &generated.b)?;
    io::write_vector(&args.out.join("xstar.csv"), &generated.x_star)?;
    let ensemble_name = match args.ensemble {
        EnsembleArg::Gaussian => "gaussian",
        EnsembleArg::PartialIdentity => "partial-identity",
    };
    let description = Json::obj()
        .with("certificate", generated.certificate.y.as_slice())
        .with("claimed", claimed)
        .with("delta", args.delta)
        .with("ensemble", ensemble_name)
        .with("k", args.k)
        .with("m", args.m)
        .with("model", "bp")
        .with("n", args.n)
        .with("seed", seed)
        .with("signs", generated.support.signs())
        .with("support", generated.support.indices());
    std::fs::write(args.out.join("instance.json"), description.render())
        .map_err(|e| CliError::input("io error", format!("{}: {e}", args.out.display())))?;

    let echo = Json::obj()
        .with("delta", args.delta)
        .with("ensemble", ensemble_name)
        .with("k", args.k)
        .with("m", args.m)
        .with("n", args.n)
        .with("nonunique", args.nonunique)
        .with("out", path_str(&args.out))
        .with("seed", args.seed);
    let files: Vec<Json> = ["A.csv", "b.csv", "instance.json", "xstar.csv"]
        .iter()
        .map(|&f| Json::from(f))
        .collect();
    Ok(Json::obj()
        .with("arguments", echo)
        .with("certificate_margin", generated.certificate.margin)
        .with("claimed", claimed)
        .with("files", files)
        .with("instance", instance_digest(&generated.a, "bp", None))
        .with("redraws", generated.redraws)
        .with("seed", seed)
        .with("signs", generated.support.signs())
        .with("support", generated.support.indices())
        .with(
            "validation",
            Json::obj()
                .with("consistent", consistent)
                .with("margin", verdict.max_margin)
                .with("oracle_unique", oracle)
                .with("status", verdict.status.name()),
        ))
}
