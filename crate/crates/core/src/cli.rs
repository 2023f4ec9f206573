//! The `kmdp` command line.
//!
//! Exit codes: 0 success, 1 invalid model or policy (or a failed check), 2 unreadable or
//! malformed input, 3 unknown check name.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use indexmap::IndexMap;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::Error;
use crate::measure::{
    assess_outcome, assess_policy_capped, default_start, enumerate_outcomes_capped, point_mass,
    DEFAULT_OUTCOME_CAP,
};
use crate::model::{build_model, derived_model, validate, KilledModel, ModelFile, Stage};
use crate::policy::{LoadedPolicy, PolicyDocument};
use crate::sim::{estimate_value, SimulationResult};
use crate::solver::{backward_induction, extract_simple_policy};
use crate::verify::{
    run_check, CheckKind, CheckReport, Counterexample, GeneratorParams, RunOptions,
    DEFAULT_TOLERANCE,
};

/// Environment variable overriding the outcome enumeration cap.
pub const MAX_OUTCOMES_VAR: &str = "KMDP_MAX_OUTCOMES";

#[derive(Debug, Parser)]
#[command(
    name = "kmdp",
    version,
    about = "Finite-horizon decision models with killing"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check a model file and list every violation.
    Validate { model: PathBuf },
    /// Solve by backward induction and extract a simple policy.
    Solve {
        model: PathBuf,
        /// Slack of one decision stage, as `t=value`; repeatable. Missing stages get 0.
        #[arg(long = "chi", value_parser = parse_chi)]
        chi: Vec<(Stage, f64)>,
        /// Also write the extracted policy as a policy file.
        #[arg(long)]
        policy_out: Option<PathBuf>,
        #[command(flatten)]
        output: Output,
    },
    /// Assess a policy exactly.
    Eval {
        model: PathBuf,
        policy: PathBuf,
        /// Print the assessment from every initial state.
        #[arg(long)]
        per_state: bool,
        #[command(flatten)]
        start: Start,
    },
    /// List the outcome law of a policy as CSV.
    Enumerate {
        model: PathBuf,
        policy: PathBuf,
        #[command(flatten)]
        start: Start,
        #[command(flatten)]
        output: Output,
    },
    /// Estimate a policy's assessment by sampling.
    Simulate {
        model: PathBuf,
        policy: PathBuf,
        #[arg(long, default_value_t = 10_000)]
        samples: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        start: Start,
        #[command(flatten)]
        output: Output,
    },
    /// Run a seeded property check.
    Check(CheckArgs),
    /// Write the model obtained by dropping the first epoch.
    Derive {
        model: PathBuf,
        #[command(flatten)]
        output: Output,
    },
}

#[derive(Debug, Args)]
struct Start {
    /// Start from this initial state instead of the model's initial distribution.
    #[arg(long = "start")]
    state: Option<String>,
}

#[derive(Debug, Args)]
struct Output {
    /// Write the report here instead of standard output.
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct CheckArgs {
    /// One of oracle, fundamental, extraction, sufficiency, markov, dp, uniform.
    name: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 100)]
    count: u64,
    #[arg(long, default_value_t = GeneratorParams::default().max_states)]
    max_states: usize,
    #[arg(long, default_value_t = GeneratorParams::default().max_actions)]
    max_actions: usize,
    #[arg(long, default_value_t = GeneratorParams::default().min_epochs)]
    min_epochs: usize,
    #[arg(long, default_value_t = GeneratorParams::default().max_epochs)]
    max_epochs: usize,
    /// Generate models without killing.
    #[arg(long)]
    zero_kill: bool,
    #[arg(long, default_value_t = DEFAULT_TOLERANCE, allow_negative_numbers = true)]
    tolerance: f64,
    /// Where to dump the first failing instance; defaults to `kmdp-counterexample-<name>.json`.
    #[arg(long)]
    counterexample: Option<PathBuf>,
    /// Re-run a dumped counterexample instead of drawing instances.
    #[arg(long, conflicts_with = "counterexample")]
    replay: Option<PathBuf>,
    #[command(flatten)]
    output: Output,
}

fn parse_chi(text: &str) -> Result<(Stage, f64), String> {
    let (t, v) = text
        .split_once('=')
        .ok_or_else(|| format!("expected t=value, got `{text}`"))?;
    let t = t
        .trim()
        .parse()
        .map_err(|e| format!("bad stage `{t}`: {e}"))?;
    let v: f64 = v
        .trim()
        .parse()
        .map_err(|e| format!("bad slack `{v}`: {e}"))?;
    Ok((t, v))
}

/// Failure of a subcommand, carrying its exit code.
struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn new(code: i32, message: impl Into<String>) -> Self {
        Failure {
            code,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Json(_) | Error::Io(_) => 2,
            _ => 1,
        };
        Failure::new(code, e.to_string())
    }
}

type Outcome = Result<(), Failure>;

#[derive(Debug, Serialize)]
struct InputDigest {
    path: String,
    sha256: String,
}

struct Input {
    text: String,
    digest: InputDigest,
}

fn read_input(path: &Path) -> Result<Input, Failure> {
    let bytes =
        std::fs::read(path).map_err(|e| Failure::new(2, format!("{}: {e}", path.display())))?;
    let digest = InputDigest {
        path: path.display().to_string(),
        sha256: hex::encode(Sha256::digest(&bytes)),
    };
    let text = String::from_utf8(bytes)
        .map_err(|e| Failure::new(2, format!("{}: {e}", path.display())))?;
    if text.trim().is_empty() {
        return Err(Failure::new(2, format!("{}: empty file", path.display())));
    }
    Ok(Input { text, digest })
}

fn parse_model_file(input: &Input) -> Result<ModelFile, Failure> {
    ModelFile::from_json(&input.text)
        .map_err(|e| Failure::new(2, format!("{}: {e}", input.digest.path)))
}

fn load_model(path: &Path) -> Result<(KilledModel, InputDigest), Failure> {
    let input = read_input(path)?;
    let file = parse_model_file(&input)?;
    let violations = validate(&file);
    if !violations.is_empty() {
        let listing: Vec<String> = violations.iter().map(|v| v.to_string()).collect();
        return Err(Failure::new(1, listing.join("\n")));
    }
    let model = build_model(&file)?;
    Ok((model, input.digest))
}

fn load_policy(model: &KilledModel, path: &Path) -> Result<(LoadedPolicy, InputDigest), Failure> {
    let input = read_input(path)?;
    let doc: PolicyDocument = serde_json::from_str(&input.text)
        .map_err(|e| Failure::new(2, format!("{}: {e}", input.digest.path)))?;
    let policy = LoadedPolicy::from_document(model, &doc)?;
    Ok((policy, input.digest))
}

fn start_distribution(model: &KilledModel, start: &Start) -> Result<Vec<f64>, Failure> {
    match &start.state {
        None => Ok(default_start(model)),
        Some(id) => model
            .state_index(model.first_stage(), id)
            .map(|x| point_mass(model, x))
            .ok_or_else(|| Failure::new(1, format!("unknown initial state `{id}`"))),
    }
}

fn outcome_cap() -> Result<usize, Failure> {
    match std::env::var(MAX_OUTCOMES_VAR) {
        Ok(v) => v.trim().parse().map_err(|_| {
            Failure::new(
                2,
                format!("{MAX_OUTCOMES_VAR} must be a positive integer, got `{v}`"),
            )
        }),
        Err(_) => Ok(DEFAULT_OUTCOME_CAP),
    }
}

fn emit(out: &mut dyn Write, output: &Output, text: &str) -> Outcome {
    match &output.output {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| Failure::new(2, format!("{}: {e}", path.display()))),
        None => out
            .write_all(text.as_bytes())
            .map_err(|e| Failure::new(2, e.to_string())),
    }
}

fn to_json(value: &impl Serialize) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("reports serialize");
    text.push('\n');
    text
}

/// Runs the command line with `args` (program name first) and returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let sink: &mut dyn Write = if e.use_stderr() { err } else { out };
            let _ = write!(sink, "{}", e.render());
            return code;
        }
    };
    let result = match cli.command {
        Command::Validate { model } => cmd_validate(&model, out),
        Command::Solve {
            model,
            chi,
            policy_out,
            output,
        } => cmd_solve(&model, &chi, policy_out.as_deref(), &output, out),
        Command::Eval {
            model,
            policy,
            per_state,
            start,
        } => cmd_eval(&model, &policy, per_state, &start, out),
        Command::Enumerate {
            model,
            policy,
            start,
            output,
        } => cmd_enumerate(&model, &policy, &start, &output, out),
        Command::Simulate {
            model,
            policy,
            samples,
            seed,
            start,
            output,
        } => cmd_simulate(&model, &policy, samples, seed, &start, &output, out),
        Command::Check(args) => cmd_check(&args, out),
        Command::Derive { model, output } => cmd_derive(&model, &output, out),
    };
    match result {
        Ok(()) => 0,
        Err(failure) => {
            let _ = writeln!(err, "{}", failure.message);
            failure.code
        }
    }
}

fn cmd_validate(path: &Path, out: &mut dyn Write) -> Outcome {
    let input = read_input(path)?;
    let file = parse_model_file(&input)?;
    let violations = validate(&file);
    if violations.is_empty() {
        return Ok(());
    }
    for v in &violations {
        let _ = writeln!(out, "{v}");
    }
    Err(Failure::new(
        1,
        format!("{} violation(s)", violations.len()),
    ))
}

#[derive(Serialize)]
struct SolveReport<'a> {
    version: &'static str,
    model: InputDigest,
    first_stage: Stage,
    last_stage: Stage,
    /// Assessment of the model's initial distribution (or first state).
    initial_value: f64,
    values: IndexMap<Stage, IndexMap<&'a str, f64>>,
    assessments: IndexMap<Stage, IndexMap<&'a str, f64>>,
    chi: IndexMap<Stage, f64>,
    epsilon: f64,
    policy: PolicyDocument,
}

fn cmd_solve(
    path: &Path,
    chi_flags: &[(Stage, f64)],
    policy_out: Option<&Path>,
    output: &Output,
    out: &mut dyn Write,
) -> Outcome {
    let (model, digest) = load_model(path)?;
    let (m, n) = (model.first_stage(), model.last_stage());
    let mut chi: IndexMap<Stage, f64> = (m + 1..=n).map(|t| (t, 0.0)).collect();
    for &(t, v) in chi_flags {
        match chi.get_mut(&t) {
            Some(slot) => *slot = v,
            None => {
                return Err(Failure::new(
                    1,
                    format!("--chi stage {t} outside {}..={n}", m + 1),
                ))
            }
        }
    }
    let solution = backward_induction(&model);
    let slacks: Vec<f64> = chi.values().copied().collect();
    let extraction = extract_simple_policy(&model, &solution, &slacks)?;
    let values = (m..=n)
        .map(|t| {
            let row = solution
                .value(t)
                .values()
                .iter()
                .enumerate()
                .map(|(x, &v)| (model.state_id(t, x), v))
                .collect();
            (t, row)
        })
        .collect();
    let assessments = (m + 1..=n)
        .map(|t| {
            let row = solution
                .assessment(t)
                .values()
                .iter()
                .enumerate()
                .map(|(a, &v)| (model.action_id(t, a), v))
                .collect();
            (t, row)
        })
        .collect();
    let policy = extraction.policy.to_document(&model);
    if let Some(target) = policy_out {
        std::fs::write(target, to_json(&policy))
            .map_err(|e| Failure::new(2, format!("{}: {e}", target.display())))?;
    }
    let report = SolveReport {
        version: env!("CARGO_PKG_VERSION"),
        model: digest,
        first_stage: m,
        last_stage: n,
        initial_value: solution.initial_value().dot(&default_start(&model)),
        values,
        assessments,
        chi,
        epsilon: extraction.epsilon,
        policy,
    };
    emit(out, output, &to_json(&report))
}

fn cmd_eval(
    model_path: &Path,
    policy_path: &Path,
    per_state: bool,
    start: &Start,
    out: &mut dyn Write,
) -> Outcome {
    let (model, _) = load_model(model_path)?;
    let (policy, _) = load_policy(&model, policy_path)?;
    let cap = outcome_cap()?;
    let pi = policy.as_policy();
    let mut text = String::new();
    if per_state {
        let m = model.first_stage();
        for x in 0..model.states(m).len() {
            let value = assess_policy_capped(&model, &point_mass(&model, x), pi, cap)?;
            text.push_str(&format!("{}\t{value}\n", model.state_id(m, x)));
        }
    } else {
        let mu = start_distribution(&model, start)?;
        text = format!("{}\n", assess_policy_capped(&model, &mu, pi, cap)?);
    }
    out.write_all(text.as_bytes())
        .map_err(|e| Failure::new(2, e.to_string()))
}

fn cmd_enumerate(
    model_path: &Path,
    policy_path: &Path,
    start: &Start,
    output: &Output,
    out: &mut dyn Write,
) -> Outcome {
    let (model, _) = load_model(model_path)?;
    let (policy, _) = load_policy(&model, policy_path)?;
    let mu = start_distribution(&model, start)?;
    let law = enumerate_outcomes_capped(&model, &mu, policy.as_policy(), outcome_cap()?)?;
    let mut text = String::from("kind,path,kill_stage,mass,assessment\n");
    for (outcome, mass) in law.iter() {
        let kind = if outcome.is_killed() {
            "killed"
        } else {
            "survived"
        };
        let stage = outcome
            .kill_stage()
            .map(|t| t.to_string())
            .unwrap_or_default();
        let value = assess_outcome(&model, outcome)?;
        text.push_str(&format!(
            "{kind},{},{stage},{mass},{value}\n",
            outcome.display(&model)
        ));
    }
    emit(out, output, &text)
}

#[derive(Serialize)]
struct SimulateReport {
    version: &'static str,
    model: InputDigest,
    policy: InputDigest,
    #[serde(flatten)]
    result: SimulationResult,
}

fn cmd_simulate(
    model_path: &Path,
    policy_path: &Path,
    samples: u64,
    seed: u64,
    start: &Start,
    output: &Output,
    out: &mut dyn Write,
) -> Outcome {
    let (model, model_digest) = load_model(model_path)?;
    let (policy, policy_digest) = load_policy(&model, policy_path)?;
    let mu = start_distribution(&model, start)?;
    let result = estimate_value(&model, &mu, policy.as_policy(), samples, seed)?;
    let report = SimulateReport {
        version: env!("CARGO_PKG_VERSION"),
        model: model_digest,
        policy: policy_digest,
        result,
    };
    emit(out, output, &to_json(&report))
}

#[derive(Serialize)]
struct CheckOutput<'a> {
    version: &'static str,
    #[serde(flatten)]
    report: &'a CheckReport,
}

#[derive(Serialize)]
struct ReplayOutput {
    version: &'static str,
    counterexample: InputDigest,
    check: CheckKind,
    recorded: Option<f64>,
    discrepancy: f64,
    tolerance: f64,
    passed: bool,
}

fn cmd_check(args: &CheckArgs, out: &mut dyn Write) -> Outcome {
    let kind: CheckKind = args
        .name
        .parse()
        .map_err(|e: Error| Failure::new(3, e.to_string()))?;
    if let Some(path) = &args.replay {
        let input = read_input(path)?;
        let cx: Counterexample = serde_json::from_str(&input.text)
            .map_err(|e| Failure::new(2, format!("{}: {e}", input.digest.path)))?;
        if cx.check != kind {
            return Err(Failure::new(
                1,
                format!("counterexample is for check `{}`", cx.check),
            ));
        }
        let discrepancy = cx.replay()?;
        let passed = discrepancy <= args.tolerance;
        let report = ReplayOutput {
            version: env!("CARGO_PKG_VERSION"),
            counterexample: input.digest,
            check: kind,
            recorded: cx.discrepancy,
            discrepancy,
            tolerance: args.tolerance,
            passed,
        };
        emit(out, &args.output, &to_json(&report))?;
        return if passed {
            Ok(())
        } else {
            Err(Failure::new(1, "replayed instance fails"))
        };
    }
    if args.max_states < 2
        || args.max_actions < 1
        || args.min_epochs < 1
        || args.max_epochs < args.min_epochs
    {
        return Err(Failure::new(
            1,
            "size caps need max-states >= 2, max-actions >= 1, 1 <= min-epochs <= max-epochs",
        ));
    }
    let options = RunOptions {
        params: GeneratorParams {
            max_states: args.max_states,
            max_actions: args.max_actions,
            min_epochs: args.min_epochs,
            max_epochs: args.max_epochs,
            zero_kill: args.zero_kill,
            ..GeneratorParams::default()
        },
        tolerance: args.tolerance,
    };
    let report = run_check(kind, args.seed, args.count, &options);
    emit(
        out,
        &args.output,
        &to_json(&CheckOutput {
            version: env!("CARGO_PKG_VERSION"),
            report: &report,
        }),
    )?;
    if report.passed {
        return Ok(());
    }
    if let Some(cx) = &report.counterexample {
        let target = args
            .counterexample
            .clone()
            .unwrap_or_else(|| PathBuf::from(format!("kmdp-counterexample-{kind}.json")));
        std::fs::write(&target, to_json(cx))
            .map_err(|e| Failure::new(2, format!("{}: {e}", target.display())))?;
        return Err(Failure::new(
            1,
            format!(
                "{} of {} instances failed; counterexample in {}",
                report.failures,
                report.instances,
                target.display()
            ),
        ));
    }
    Err(Failure::new(
        1,
        format!(
            "{} of {} instances failed",
            report.failures, report.instances
        ),
    ))
}

fn cmd_derive(path: &Path, output: &Output, out: &mut dyn Write) -> Outcome {
    let (model, _) = load_model(path)?;
    let derived = derived_model(&model)?;
    emit(out, output, &to_json(&derived.to_file()))
}
