//! Argument parsing and dispatch for the `hmmerg` binary.

use std::fs;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use hmmerg_core::conditions::{
    check_c, check_k, check_kr, check_n, check_o, Condition, ConditionError, ConditionReport, KrParams, DEFAULT_MAX_PATTERNS,
};
use hmmerg_core::filtering::{filter_path, gaps_to_csv, minmax_gap, simulate, trace_to_csv, ObsWord};
use hmmerg_core::lab::{entropy_rate, stability_curve, stability_diagnostic, verdict, LabError, VerdictBudgets};
use hmmerg_core::model::{load_model, parse_model, validate};
use hmmerg_core::simplex_kernel::{dirac_at, find_invariant, spread, KernelConfig};
use hmmerg_core::{Error, HmmModel, SimplexVector};
use serde::Serialize;
use serde_json::{json, Value};

pub const EXIT_OK: i32 = 0;
pub const EXIT_DOMAIN: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_CONTRADICTION: i32 = 3;

/// Priors must sum to one within this before they are renormalized.
const PRIOR_SUM_TOL: f64 = 1e-9;

#[derive(Debug, Parser)]
#[command(name = "hmmerg", version, about = "Unique ergodicity of the nonlinear filter of a finite hidden Markov model")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Model file (JSON).
    #[arg(long, global = true)]
    pub model: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Write the report here instead of standard output.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Worker threads (default: number of processors).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Keep wall-clock timings in condition reports.
    #[arg(long, global = true)]
    pub timings: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Check {
    #[value(name = "N")]
    N,
    #[value(name = "O")]
    O,
    #[value(name = "UO")]
    Uo,
    #[value(name = "K")]
    K,
    #[value(name = "KR")]
    Kr,
    #[value(name = "C")]
    C,
    #[value(name = "all")]
    All,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Start {
    /// The point mass at the stationary law.
    Dirac,
    /// The stationary law spread over the vertices.
    Spread,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check a model file and report every violated invariant.
    Validate,
    /// Simulate a signal/observation path.
    Simulate {
        #[arg(long)]
        length: usize,
        /// Initial law (default: stationary).
        #[arg(long)]
        initial: Option<String>,
    },
    /// Run the filter along an observation word.
    Filter {
        /// Prior as comma-separated probabilities (default: stationary).
        #[arg(long)]
        prior: Option<String>,
        /// Observation labels separated by commas.
        #[arg(long)]
        word: String,
    },
    /// Check conditions N, O, UO, K, KR and build Condition C witnesses.
    Conditions {
        #[arg(long, value_enum, default_value_t = Check::All)]
        check: Check,
        #[arg(long, default_value_t = 256)]
        max_len: usize,
        #[arg(long, default_value_t = 16)]
        restarts: usize,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        #[arg(long, default_value_t = DEFAULT_MAX_PATTERNS)]
        max_patterns: usize,
        #[arg(long, default_value_t = 4096)]
        closure_budget: usize,
        #[arg(long, default_value_t = 0.1)]
        epsilon: f64,
        #[arg(long, default_value_t = 1000)]
        samples: usize,
    },
    /// Aggregate conditions and experiments into a unique-ergodicity verdict.
    Verdict {
        #[arg(long, default_value_t = 256)]
        max_len: usize,
        #[arg(long, default_value_t = 16)]
        restarts: usize,
        #[arg(long, default_value_t = DEFAULT_MAX_PATTERNS)]
        max_patterns: usize,
        #[arg(long, default_value_t = 200)]
        invariant_steps: usize,
        #[arg(long, default_value_t = 20_000)]
        atom_budget: usize,
        #[arg(long, default_value_t = 10_000)]
        stability_horizon: usize,
        #[arg(long, default_value_t = 1e-3)]
        stability_threshold: f64,
    },
    /// Filter stability curve, or the min/max window gap with `--minmax`.
    Stability {
        #[arg(long)]
        mu: Option<String>,
        #[arg(long)]
        nu: Option<String>,
        /// Law of the simulated signal; lifts the requirement that mu ≪ nu.
        #[arg(long)]
        law: Option<String>,
        #[arg(long, default_value_t = 10_000)]
        horizon: usize,
        #[arg(long)]
        minmax: bool,
        #[arg(long, default_value_t = 64)]
        window: usize,
    },
    /// Iterate the filter kernel looking for an invariant measure.
    Invariant {
        #[arg(long, value_enum, default_value_t = Start::Dirac)]
        start: Start,
        #[arg(long, default_value_t = 200)]
        max_steps: usize,
        #[arg(long, default_value_t = 1e-12)]
        tol: f64,
        #[arg(long, default_value_t = 100_000)]
        atom_budget: usize,
    },
    /// Entropy rate of the observation process.
    Entropy {
        #[arg(long, default_value_t = 100_000)]
        horizon: usize,
    },
    /// Condition C witness from a given word or from the rank-one search.
    Witness {
        #[arg(long)]
        word: Option<String>,
        #[arg(long, default_value_t = 0.1)]
        epsilon: f64,
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        #[arg(long, default_value_t = 256)]
        max_len: usize,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Validate => "validate",
            Command::Simulate { .. } => "simulate",
            Command::Filter { .. } => "filter",
            Command::Conditions { .. } => "conditions",
            Command::Verdict { .. } => "verdict",
            Command::Stability { .. } => "stability",
            Command::Invariant { .. } => "invariant",
            Command::Entropy { .. } => "entropy",
            Command::Witness { .. } => "witness",
        }
    }

    fn has_csv(&self) -> bool {
        matches!(self, Command::Simulate { .. } | Command::Filter { .. } | Command::Stability { .. } | Command::Entropy { .. })
    }
}

/// Parses `argv` (including the program name).
pub fn parse_args<I, T>(argv: I) -> Result<Cli, clap::Error>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    Cli::try_parse_from(argv)
}

#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub kind: &'static str,
    pub message: String,
}

impl CliError {
    fn usage(message: impl Into<String>) -> Self {
        CliError { code: EXIT_USAGE, kind: "usage", message: message.into() }
    }

    fn domain(kind: &'static str, message: impl std::fmt::Display) -> Self {
        CliError { code: EXIT_DOMAIN, kind, message: message.to_string() }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match &e {
            Error::Lab(LabError::ContradictoryEvidence(_)) => {
                CliError { code: EXIT_CONTRADICTION, kind: "contradictory_evidence", message: e.to_string() }
            }
            Error::Lab(LabError::AuditFailed(_)) => CliError { code: EXIT_CONTRADICTION, kind: "audit_failed", message: e.to_string() },
            Error::Model(_) => CliError::domain("model", e),
            Error::Filter(_) => CliError::domain("filter", e),
            Error::Kernel(_) => CliError::domain("kernel", e),
            Error::Condition(_) => CliError::domain("condition", e),
            Error::Lab(_) => CliError::domain("lab", e),
        }
    }
}

macro_rules! domain_from {
    ($($t:ty),*) => {$(
        impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                Error::from(e).into()
            }
        }
    )*};
}
domain_from!(
    hmmerg_core::ModelError,
    hmmerg_core::FilterError,
    hmmerg_core::KernelError,
    ConditionError,
    LabError
);

/// A report ready to be written: JSON result, optional CSV rendering.
struct Report {
    result: Value,
    csv: Option<String>,
}

impl Report {
    fn json(result: impl Serialize) -> Self {
        Report { result: serde_json::to_value(result).expect("reports serialize"), csv: None }
    }

    fn with_csv(mut self, csv: String) -> Self {
        self.csv = Some(csv);
        self
    }
}

/// Runs the invocation, writing the report or a JSON error. Returns the
/// process exit code.
pub fn run(cli: &Cli) -> i32 {
    match execute(cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let body = json!({
                "tool_version": env!("CARGO_PKG_VERSION"),
                "command": cli.command.name(),
                "error": { "kind": e.kind, "message": e.message },
            });
            eprintln!("{}", serde_json::to_string_pretty(&body).expect("error serializes"));
            e.code
        }
    }
}

fn execute(cli: &Cli) -> Result<(), CliError> {
    let common = &cli.common;
    if common.format == Format::Csv && !cli.command.has_csv() {
        return Err(CliError::usage(format!("`{}` has no tabular output; use --format json", cli.command.name())));
    }
    if let Some(n) = common.threads {
        if n == 0 {
            return Err(CliError::usage("--threads must be at least 1"));
        }
        // Fails only if a pool already exists, as in repeated in-process runs.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let path = common.model.as_ref().ok_or_else(|| CliError::usage("--model is required"))?;
    let source = fs::read_to_string(path).map_err(|e| CliError::usage(format!("cannot read {}: {e}", path.display())))?;

    let report = if let Command::Validate = cli.command {
        let raw = parse_model(&source)?;
        let report = validate(&raw);
        if !report.ok {
            let violations: Vec<String> = report.violations.iter().map(|v| format!("[{}] {}", v.rule, v.message)).collect();
            write_report(cli, Report::json(&report))?;
            return Err(CliError::domain("validation", violations.join("; ")));
        }
        Report::json(&report)
    } else {
        let model = load_model(&source)?;
        dispatch(cli, &model)?
    };
    write_report(cli, report)
}

fn dispatch(cli: &Cli, model: &HmmModel) -> Result<Report, CliError> {
    let seed = cli.common.seed;
    let strip = |r: ConditionReport| if cli.common.timings { r } else { r.without_timing() };
    match &cli.command {
        Command::Validate => unreachable!("handled before the model is loaded"),
        Command::Simulate { length, initial } => {
            let init = parse_prior(model, initial.as_deref())?;
            let path = simulate(model, &init, *length, seed);
            let states: Vec<&str> = path.x.iter().map(|&i| model.state_labels()[i].as_str()).collect();
            let obs: Vec<&str> = path.y.iter().map(|&y| model.obs_labels()[y].as_str()).collect();
            // Row k holds x_k and the observation emitted on the way into it.
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(["k", "state", "observation"]).map_err(|e| CliError::domain("io", e))?;
            for (k, state) in states.iter().enumerate() {
                let y = if k == 0 { "" } else { obs[k - 1] };
                w.write_record([k.to_string().as_str(), state, y]).map_err(|e| CliError::domain("io", e))?;
            }
            let csv = String::from_utf8(w.into_inner().map_err(|e| CliError::domain("io", e))?).expect("labels are utf-8");
            Ok(Report::json(json!({ "seed": seed, "states": states, "observations": obs })).with_csv(csv))
        }
        Command::Filter { prior, word } => {
            let prior = parse_prior(model, prior.as_deref())?;
            let word = parse_word(model, word)?;
            let trace = filter_path(model, &prior, &word)?;
            let result = json!({
                "word": word.labels(model),
                "posteriors": trace.posteriors,
                "log_increments": trace.log_increments,
                "log_likelihood": trace.log_likelihood,
            });
            Ok(Report::json(result).with_csv(trace_to_csv(&trace)))
        }
        Command::Conditions { check, max_len, restarts, tol, max_patterns, closure_budget, epsilon, samples } => {
            let params = KrParams {
                max_len: *max_len,
                restarts: *restarts,
                tol: *tol,
                seed,
                closure_budget: *closure_budget,
                max_patterns: *max_patterns,
            };
            let uo = || {
                let mut r = check_o(model);
                r.condition = Condition::UO;
                r
            };
            let c = |kr: &ConditionReport| -> Result<ConditionReport, CliError> {
                let w = kr
                    .kr_witness
                    .as_ref()
                    .ok_or_else(|| CliError::domain("condition", "no rank-one witness was found, so Condition C cannot be built"))?;
                Ok(check_c(model, w, *epsilon, *samples, seed)?)
            };
            match check {
                Check::N => Ok(Report::json(strip(check_n(model)))),
                Check::O => Ok(Report::json(strip(check_o(model)))),
                Check::Uo => Ok(Report::json(strip(uo()))),
                Check::K => Ok(Report::json(strip(check_k(model, *max_patterns)))),
                Check::Kr => Ok(Report::json(strip(check_kr(model, &params)))),
                Check::C => Ok(Report::json(strip(c(&check_kr(model, &params))?))),
                Check::All => {
                    let kr = check_kr(model, &params);
                    let (c_report, c_error) = match c(&kr) {
                        Ok(r) => (Some(strip(r)), None),
                        Err(e) => (None, Some(e.message)),
                    };
                    let mut reports = vec![strip(check_n(model)), strip(check_o(model)), strip(uo()), strip(check_k(model, *max_patterns)), strip(kr)];
                    reports.extend(c_report);
                    let mut result = json!({ "reports": reports });
                    if let Some(msg) = c_error {
                        result["skipped"] = json!([{ "condition": "C", "reason": msg }]);
                    }
                    Ok(Report::json(result))
                }
            }
        }
        Command::Verdict { max_len, restarts, max_patterns, invariant_steps, atom_budget, stability_horizon, stability_threshold } => {
            let budgets = VerdictBudgets {
                max_patterns: *max_patterns,
                kr: KrParams { max_len: *max_len, restarts: *restarts, max_patterns: *max_patterns, ..KrParams::default() },
                invariant_steps: *invariant_steps,
                atom_budget: *atom_budget,
                stability_horizon: *stability_horizon,
                stability_threshold: *stability_threshold,
                ..VerdictBudgets::default()
            };
            let v = verdict(model, &budgets, seed)?;
            Ok(Report::json(if cli.common.timings { v } else { v.without_timing() }))
        }
        Command::Stability { mu, nu, law, horizon, minmax, window } => {
            if *minmax {
                let gaps = minmax_gap(model, *window, *horizon, seed)?;
                let csv = gaps_to_csv("k", "gap", *window, &gaps);
                let result = json!({ "window": window, "horizon": horizon, "seed": seed, "first_k": window, "gaps": gaps });
                return Ok(Report::json(result).with_csv(csv));
            }
            let p = model.num_states();
            let mu = match mu {
                Some(s) => parse_prior(model, Some(s))?,
                None => SimplexVector::point_mass(p, 0),
            };
            let nu = parse_prior(model, nu.as_deref())?;
            let curve = match law {
                Some(l) => stability_diagnostic(model, &mu, &nu, &parse_prior(model, Some(l))?, *horizon, seed)?,
                None => stability_curve(model, &mu, &nu, *horizon, seed)?,
            };
            let csv = curve.to_csv();
            Ok(Report::json(json!({ "final_gap": curve.final_gap(), "curve": curve })).with_csv(csv))
        }
        Command::Invariant { start, max_steps, tol, atom_budget } => {
            let lambda = model.stationary();
            let measure = match start {
                Start::Dirac => dirac_at(lambda),
                Start::Spread => spread(lambda),
            };
            let config = KernelConfig { atom_budget: *atom_budget, ..KernelConfig::default() };
            let found = find_invariant(model, &measure, *max_steps, *tol, &config)?;
            Ok(Report::json(found))
        }
        Command::Entropy { horizon } => {
            let e = entropy_rate(model, *horizon, seed)?;
            let csv = e.to_csv();
            Ok(Report::json(e).with_csv(csv))
        }
        Command::Witness { word, epsilon, samples, max_len } => {
            let witness = match word {
                Some(w) => hmmerg_core::conditions::KrWitness::from_word(model, &parse_word(model, w)?)?,
                None => check_kr(model, &KrParams { max_len: *max_len, seed, ..KrParams::default() })
                    .kr_witness
                    .ok_or_else(|| CliError::domain("condition", "the rank-one search found no witness; pass --word"))?,
            };
            Ok(Report::json(hmmerg_core::conditions::condition_c_witness(model, &witness, *epsilon, *samples, seed)?))
        }
    }
}

fn write_report(cli: &Cli, report: Report) -> Result<(), CliError> {
    let text = match cli.common.format {
        Format::Csv => report.csv.expect("csv checked before dispatch"),
        Format::Json => {
            let envelope = json!({
                "tool_version": env!("CARGO_PKG_VERSION"),
                "command": cli.command.name(),
                "seed": cli.common.seed,
                "result": report.result,
            });
            serde_json::to_string_pretty(&envelope).expect("envelope serializes") + "\n"
        }
    };
    match &cli.common.output {
        Some(path) => fs::write(path, text).map_err(|e| CliError::domain("io", format!("cannot write {}: {e}", path.display()))),
        None => std::io::stdout().write_all(text.as_bytes()).map_err(|e| CliError::domain("io", e)),
    }
}

/// Comma-separated probabilities summing to one within `1e-9`; `None`
/// selects the stationary law.
pub fn parse_prior(model: &HmmModel, text: Option<&str>) -> Result<SimplexVector, CliError> {
    let Some(text) = text else { return Ok(model.stationary().clone()) };
    let values = text
        .split(',')
        .map(|s| s.trim().parse::<f64>().map_err(|_| CliError::usage(format!("`{s}` is not a number in prior `{text}`"))))
        .collect::<Result<Vec<_>, _>>()?;
    if values.len() != model.num_states() {
        return Err(CliError::usage(format!("prior has {} entries, model has {} states", values.len(), model.num_states())));
    }
    SimplexVector::normalized(values, PRIOR_SUM_TOL).map_err(|e| CliError::usage(e.to_string()))
}

pub fn parse_word(model: &HmmModel, text: &str) -> Result<ObsWord, CliError> {
    ObsWord::parse_labels(model, text).map_err(|e| CliError::usage(e.to_string()))
}
