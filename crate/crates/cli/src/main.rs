//! `seqeffect` — command-line front end: axiom-check and fuzz runs over
//! candidate sequential products, step-by-step proof traces, and sequential
//! POVM measurement simulation, all emitting machine-readable JSON reports.
//!
//! Exit codes are a stable contract: 0 pass, 2 input error, 3 violation
//! found, 4 precondition failure.

use std::fmt;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::Serialize;

use seqeffect::axioms::{fuzz_candidate, CandidateProduct, FuzzReport};
use seqeffect::channels::{instrument_from_povm, outcome_update, DiscretePOVM};
use seqeffect::classify::{regularize_invertible, trace_theorem_steps, ProofTraceReport};
use seqeffect::effects::{probability, Conditioned, DensityOperator, Effect};
use seqeffect::matcore::{random_effect, CMatrix, SplitMix64, ToleranceConfig};

const EXIT_VIOLATION: u8 = 3;
const EXIT_INPUT: u8 = 2;
const EXIT_PRECONDITION: u8 = 4;

const SEED_ENV_VAR: &str = "SEQEFFECT_SEED";
const DEFAULT_SEED: u64 = 42;

#[derive(Parser)]
#[command(name = "seqeffect", version, about = "Quantum-effect sequential product toolbox")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the axiom-checker battery on a candidate product.
    Check(CheckArgs),
    /// Re-execute the uniqueness argument step by step on one effect.
    Trace(TraceArgs),
    /// Simulate repeated POVM measurement of a state.
    Simulate(SimulateArgs),
}

#[derive(Args)]
struct ToleranceArgs {
    /// Hermiticity tolerance (default 1e-10).
    #[arg(long)]
    hermit_tol: Option<f64>,
    /// PSD eigenvalue floor (default 1e-9).
    #[arg(long)]
    psd_tol: Option<f64>,
    /// Operator-norm equality tolerance (default 1e-8).
    #[arg(long)]
    eq_tol: Option<f64>,
    /// Numerical-rank eigenvalue threshold (default 1e-7).
    #[arg(long)]
    rank_tol: Option<f64>,
}

impl ToleranceArgs {
    fn resolve(&self) -> Result<ToleranceConfig, CliError> {
        let mut tol = ToleranceConfig::default();
        if let Some(v) = self.hermit_tol {
            tol.hermit_tol = v;
        }
        if let Some(v) = self.psd_tol {
            tol.psd_tol = v;
        }
        if let Some(v) = self.eq_tol {
            tol.eq_tol = v;
        }
        if let Some(v) = self.rank_tol {
            tol.rank_tol = v;
        }
        tol.validate()?;
        if let Some(warning) = tol.ordering_warning() {
            eprintln!("warning: {warning}");
        }
        Ok(tol)
    }
}

#[derive(Args)]
struct OutputArgs {
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Omit the timestamp so identical runs produce byte-identical reports.
    #[arg(long)]
    deterministic: bool,
}

#[derive(Args)]
struct CheckArgs {
    /// Candidate product: standard | transpose | jordan | unitary:<U.json>.
    #[arg(long)]
    candidate: String,
    /// Comma-separated effect-space dimensions, e.g. 2,3,4.
    #[arg(long, value_delimiter = ',', required = true)]
    dims: Vec<usize>,
    /// Trials per condition and dimension.
    #[arg(long, default_value_t = 500)]
    trials: usize,
    /// RNG seed (falls back to $SEQEFFECT_SEED, then 42).
    #[arg(long)]
    seed: Option<u64>,
    #[command(flatten)]
    tolerances: ToleranceArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct TraceArgs {
    /// Candidate product: standard | transpose | jordan | unitary:<U.json>.
    #[arg(long, default_value = "standard")]
    candidate: String,
    /// JSON file with the effect A.
    #[arg(long, conflicts_with = "random")]
    effect: Option<PathBuf>,
    /// Draw A at random instead of reading a file (requires --dim).
    #[arg(long, requires = "dim")]
    random: bool,
    /// Dimension for --random.
    #[arg(long)]
    dim: Option<usize>,
    /// RNG seed (falls back to $SEQEFFECT_SEED, then 42).
    #[arg(long)]
    seed: Option<u64>,
    /// Replace A by the invertible regularization A_i before tracing.
    #[arg(long, value_name = "I")]
    regularize: Option<u64>,
    #[command(flatten)]
    tolerances: ToleranceArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct SimulateArgs {
    /// JSON file with the POVM ({"dim": d, "effects": [matrix, ...]}).
    #[arg(long)]
    povm: PathBuf,
    /// JSON file with the initial density matrix.
    #[arg(long)]
    state: PathBuf,
    /// Number of sequential measurements.
    #[arg(long, default_value_t = 1)]
    steps: usize,
    /// RNG seed (falls back to $SEQEFFECT_SEED, then 42).
    #[arg(long)]
    seed: Option<u64>,
    #[command(flatten)]
    tolerances: ToleranceArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug)]
enum CliError {
    Lib(seqeffect::Error),
    File(PathBuf, String),
    Input(String),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Lib(e) => write!(f, "{e}"),
            CliError::File(path, msg) => write!(f, "{}: {msg}", path.display()),
            CliError::Input(msg) => write!(f, "{msg}"),
        }
    }
}

impl From<seqeffect::Error> for CliError {
    fn from(e: seqeffect::Error) -> Self {
        CliError::Lib(e)
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Lib(seqeffect::Error::NotInvertible { .. }) => EXIT_PRECONDITION,
            _ => EXIT_INPUT,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err}");
            if let CliError::Lib(seqeffect::Error::NotInvertible { .. }) = err {
                eprintln!("hint: rerun with --regularize <i> to trace the invertible A_i instead");
            }
            ExitCode::from(err.exit_code())
        }
    }
}

fn run(cli: Cli) -> Result<u8, CliError> {
    match cli.command {
        Command::Check(args) => cmd_check(args),
        Command::Trace(args) => cmd_trace(args),
        Command::Simulate(args) => cmd_simulate(args),
    }
}

// ---------------------------------------------------------------------------
// Shared plumbing.
// ---------------------------------------------------------------------------

fn resolve_seed(flag: Option<u64>) -> Result<u64, CliError> {
    if let Some(seed) = flag {
        return Ok(seed);
    }
    match std::env::var(SEED_ENV_VAR) {
        Ok(raw) => raw
            .parse::<u64>()
            .map_err(|_| CliError::Input(format!("{SEED_ENV_VAR} must be a u64, got {raw:?}"))),
        Err(_) => Ok(DEFAULT_SEED),
    }
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let raw = std::fs::read_to_string(path)
        .map_err(|e| CliError::File(path.to_path_buf(), e.to_string()))?;
    serde_json::from_str(&raw).map_err(|e| CliError::File(path.to_path_buf(), e.to_string()))
}

fn parse_candidate(spec: &str, tol: &ToleranceConfig) -> Result<CandidateProduct, CliError> {
    match spec {
        "standard" => Ok(CandidateProduct::standard()),
        "transpose" => Ok(CandidateProduct::transpose_twisted()),
        "jordan" => Ok(CandidateProduct::jordan()),
        other => {
            if let Some(path) = other.strip_prefix("unitary:") {
                let u: CMatrix = read_json(Path::new(path))?;
                Ok(CandidateProduct::unitary_twisted(u, tol)?)
            } else {
                Err(CliError::Input(format!(
                    "unknown candidate {other:?}; expected standard, transpose, jordan \
                     or unitary:<path>"
                )))
            }
        }
    }
}

fn candidate_dim(spec: &str) -> Option<usize> {
    // unitary candidates are pinned to their matrix dimension; the library
    // reports the dimension in the candidate name as "unitary(d)".
    spec.strip_prefix("unitary(").and_then(|s| s.strip_suffix(')')).and_then(|s| s.parse().ok())
}

fn timestamp(deterministic: bool) -> Option<u64> {
    if deterministic {
        None
    } else {
        std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .ok()
            .map(|d| d.as_secs())
    }
}

#[derive(Serialize)]
struct Envelope<C: Serialize, B: Serialize> {
    version: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    timestamp_unix: Option<u64>,
    config: C,
    #[serde(flatten)]
    body: B,
}

fn emit<C: Serialize, B: Serialize>(
    output: &OutputArgs,
    config: C,
    body: B,
) -> Result<(), CliError> {
    let envelope = Envelope {
        version: env!("CARGO_PKG_VERSION"),
        timestamp_unix: timestamp(output.deterministic),
        config,
        body,
    };
    let mut rendered = serde_json::to_string_pretty(&envelope)
        .map_err(|e| CliError::Input(format!("report serialization failed: {e}")))?;
    rendered.push('\n');
    match &output.out {
        Some(path) => std::fs::write(path, rendered)
            .map_err(|e| CliError::File(path.clone(), e.to_string()))?,
        None => print!("{rendered}"),
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// check
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct CheckConfig {
    command: &'static str,
    candidate: String,
    dims: Vec<usize>,
    trials: usize,
    seed: u64,
    tolerances: ToleranceConfig,
}

#[derive(Serialize)]
struct CheckBody {
    passed: bool,
    fuzz: FuzzReport,
}

fn cmd_check(args: CheckArgs) -> Result<u8, CliError> {
    let tol = args.tolerances.resolve()?;
    let seed = resolve_seed(args.seed)?;
    let candidate = parse_candidate(&args.candidate, &tol)?;
    if let Some(required) = candidate_dim(candidate.name()) {
        if args.dims.iter().any(|&d| d != required) {
            return Err(CliError::Input(format!(
                "unitary candidate is {required}-dimensional; --dims must all equal {required}"
            )));
        }
    }

    let fuzz = fuzz_candidate(&candidate, &args.dims, args.trials, seed, &tol)?;
    let passed = fuzz.all_passed;
    let config = CheckConfig {
        command: "check",
        candidate: args.candidate.clone(),
        dims: args.dims.clone(),
        trials: args.trials,
        seed,
        tolerances: tol,
    };
    emit(&args.output, config, CheckBody { passed, fuzz })?;
    Ok(if passed { 0 } else { EXIT_VIOLATION })
}

// ---------------------------------------------------------------------------
// trace
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct TraceConfig {
    command: &'static str,
    candidate: String,
    effect_source: String,
    seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    regularize: Option<u64>,
    tolerances: ToleranceConfig,
}

#[derive(Serialize)]
struct TraceBody {
    passed: bool,
    effect: CMatrix,
    trace: ProofTraceReport,
}

fn cmd_trace(args: TraceArgs) -> Result<u8, CliError> {
    let tol = args.tolerances.resolve()?;
    let seed = resolve_seed(args.seed)?;
    let candidate = parse_candidate(&args.candidate, &tol)?;

    let (effect, source) = match (&args.effect, args.random) {
        (Some(path), false) => {
            let m: CMatrix = read_json(path)?;
            (Effect::new(m, &tol)?, path.display().to_string())
        }
        (None, true) => {
            let dim = args.dim.expect("clap enforces --dim with --random");
            let m = random_effect(dim, seed)?;
            (Effect::new(m, &tol)?, format!("random(dim={dim}, seed={seed})"))
        }
        (None, false) => {
            return Err(CliError::Input("provide --effect <path> or --random --dim <d>".into()))
        }
        (Some(_), true) => unreachable!("clap conflicts_with"),
    };

    let effect = match args.regularize {
        Some(i) => regularize_invertible(&effect, i)?,
        None => effect,
    };

    let trace = trace_theorem_steps(&candidate, &effect, seed, &tol)?;
    let passed = trace.passed;
    let config = TraceConfig {
        command: "trace",
        candidate: args.candidate.clone(),
        effect_source: source,
        seed,
        regularize: args.regularize,
        tolerances: tol,
    };
    emit(&args.output, config, TraceBody { passed, effect: effect.into_matrix(), trace })?;
    Ok(if passed { 0 } else { EXIT_VIOLATION })
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

#[derive(serde::Deserialize)]
struct PovmFile {
    dim: usize,
    effects: Vec<CMatrix>,
}

#[derive(Serialize)]
struct SimulateConfig {
    command: &'static str,
    povm: String,
    state: String,
    steps: usize,
    seed: u64,
    tolerances: ToleranceConfig,
}

#[derive(Serialize)]
struct SimStep {
    step: usize,
    outcome: usize,
    probability: f64,
    post_state: CMatrix,
}

#[derive(Serialize)]
struct SimulateBody {
    outcomes: Vec<usize>,
    steps: Vec<SimStep>,
    final_state: CMatrix,
}

fn load_povm(path: &Path, tol: &ToleranceConfig) -> Result<DiscretePOVM, CliError> {
    let file: PovmFile = read_json(path)?;
    let mut effects = Vec::with_capacity(file.effects.len());
    for m in file.effects {
        if m.dim() != file.dim {
            return Err(CliError::File(
                path.to_path_buf(),
                format!("effect dimension {} does not match POVM dim {}", m.dim(), file.dim),
            ));
        }
        effects.push(Effect::new(m, tol)?);
    }
    Ok(DiscretePOVM::new(effects, tol)?)
}

fn cmd_simulate(args: SimulateArgs) -> Result<u8, CliError> {
    let tol = args.tolerances.resolve()?;
    let seed = resolve_seed(args.seed)?;
    if args.steps == 0 {
        return Err(CliError::Input("--steps must be at least 1".into()));
    }
    let povm = load_povm(&args.povm, &tol)?;
    let state_matrix: CMatrix = read_json(&args.state)?;
    let mut rho = DensityOperator::new(state_matrix, &tol)?;
    if rho.dim() != povm.dim() {
        return Err(CliError::Input(format!(
            "state dimension {} does not match POVM dimension {}",
            rho.dim(),
            povm.dim()
        )));
    }
    let channel = instrument_from_povm(&povm, &tol)?;

    let mut rng = SplitMix64::new(seed);
    let mut steps = Vec::with_capacity(args.steps);
    let mut outcomes = Vec::with_capacity(args.steps);
    for step in 0..args.steps {
        let probs: Vec<f64> = povm
            .effects()
            .iter()
            .map(|e| probability(&rho, e, &tol).map(|p| p.max(0.0)))
            .collect::<seqeffect::Result<_>>()?;
        let total: f64 = probs.iter().sum();
        let draw = rng.next_f64() * total;
        let mut cumulative = 0.0;
        let mut outcome = probs.len() - 1;
        for (i, p) in probs.iter().enumerate() {
            cumulative += p;
            if draw < cumulative {
                outcome = i;
                break;
            }
        }
        // Guard against landing in a zero-probability sliver.
        if probs[outcome] <= tol.psd_tol {
            outcome = probs
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.partial_cmp(b.1).expect("finite probabilities"))
                .map(|(i, _)| i)
                .unwrap_or(0);
        }
        match outcome_update(&channel, outcome, &rho, &tol)? {
            Conditioned::State(next) => {
                steps.push(SimStep {
                    step,
                    outcome,
                    probability: probs[outcome],
                    post_state: next.matrix().clone(),
                });
                outcomes.push(outcome);
                rho = next;
            }
            Conditioned::ZeroOutcome => {
                return Err(CliError::Input(
                    "sampled outcome has numerically zero probability".into(),
                ));
            }
        }
    }

    let config = SimulateConfig {
        command: "simulate",
        povm: args.povm.display().to_string(),
        state: args.state.display().to_string(),
        steps: args.steps,
        seed,
        tolerances: tol,
    };
    let final_state = rho.matrix().clone();
    emit(&args.output, config, SimulateBody { outcomes, steps, final_state })?;
    Ok(0)
}
