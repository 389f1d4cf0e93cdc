//! Command-line front end. `run` parses arguments, dispatches, and returns the
//! process exit code: 0 on success, 1 when a check or write fails, 2 on usage
//! errors and unreadable scenarios, 3 when the requested operating point is
//! infeasible.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use crate::arq::{latency_bounds, simulate_latency_with_workers};
use crate::channel::HopChannel;
use crate::distproto;
use crate::exponents::{random_coding_exponent, sphere_packing_exponent};
use crate::figures::{self, Curve, Fig3Row, Fig4Row, Scheme};
use crate::scenario::{ResolvedScenario, Scenario, ScenarioError};
use crate::verify;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_INFEASIBLE: i32 = 3;

pub const THREADS_ENV: &str = "HOPBOUND_THREADS";

pub const EXPONENT_HEADER: &str = "rate_nats,e_r,rho_r,regime_r,e_sp,rho_sp,regime_sp";
pub const FIG3_HEADER: &str = "end_to_end_rate_nats,esys_rc,esys_sp";
pub const FIG4_HEADER: &str =
    "end_to_end_rate_nats,latency_upper,latency_lower,latency_mc_mean,latency_mc_stderr";

#[derive(Debug, Parser)]
#[command(name = "hopbound", version, about = "Reliability, allocation and latency bounds for multi-hop links")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Random-coding and sphere-packing exponents over a rate sweep (CSV).
    Exponent(ExponentArgs),
    /// Regenerate the rate/reliability or rate/latency sweep data (CSV).
    Reproduce(ReproduceArgs),
    /// Blocklength allocation for a scenario (JSON).
    Allocate(AllocateArgs),
    /// Expected ARQ latency bounds and a Monte Carlo estimate (JSON).
    Latency(LatencyArgs),
    /// Run the accumulate-and-broadcast protocol on a scenario (JSON).
    Distributed(DistributedArgs),
    /// Check solvers against brute-force oracles.
    Verify(VerifyArgs),
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("source").required(true).args(["snr_db", "scenario"])))]
pub struct ExponentArgs {
    /// AWGN hop SNR in dB.
    #[arg(long, allow_hyphen_values = true)]
    pub snr_db: Option<f64>,
    /// Scenario file; pick the hop with --hop.
    #[arg(long, requires = "hop")]
    pub scenario: Option<PathBuf>,
    /// Zero-based hop index within the scenario.
    #[arg(long, requires = "scenario")]
    pub hop: Option<usize>,
    #[arg(long)]
    pub rate_min: f64,
    #[arg(long)]
    pub rate_max: f64,
    #[arg(long)]
    pub rate_steps: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Show rates in bits on stdout; files written with --out stay in nats.
    #[arg(long)]
    pub bits: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Figure {
    Fig3,
    Fig4,
}

#[derive(Debug, Args)]
pub struct ReproduceArgs {
    #[arg(long, value_enum)]
    pub figure: Figure,
    #[arg(long)]
    pub out_dir: PathBuf,
    /// Monte Carlo trials per sweep point (fig4 only).
    #[arg(long, default_value_t = figures::FIG4_TRIALS)]
    pub trials: u64,
    #[arg(long, default_value_t = figures::FIG4_SEED)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct AllocateArgs {
    #[arg(long)]
    pub scenario: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct LatencyArgs {
    #[arg(long)]
    pub scenario: PathBuf,
    #[arg(long, default_value_t = figures::FIG4_TRIALS)]
    pub trials: u64,
    #[arg(long, default_value_t = figures::FIG4_SEED)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DistributedArgs {
    #[arg(long)]
    pub scenario: PathBuf,
    /// Write one JSON record per delivered message.
    #[arg(long)]
    pub trace: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    Grid,
    Alloc,
    Ensemble,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long, value_enum)]
    pub suite: Suite,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Infeasible(crate::Error),
    Failed(String),
}

impl From<ScenarioError> for CliError {
    fn from(e: ScenarioError) -> Self {
        match e {
            ScenarioError::Math(m) => CliError::Infeasible(m),
            other => CliError::Usage(other.to_string()),
        }
    }
}

impl From<crate::Error> for CliError {
    fn from(e: crate::Error) -> Self {
        CliError::Infeasible(e)
    }
}

type CliResult<T = ()> = std::result::Result<T, CliError>;

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let result = match cli.command {
        Command::Exponent(a) => cmd_exponent(a),
        Command::Reproduce(a) => cmd_reproduce(a),
        Command::Allocate(a) => cmd_allocate(a),
        Command::Latency(a) => cmd_latency(a),
        Command::Distributed(a) => cmd_distributed(a),
        Command::Verify(a) => cmd_verify(a),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            EXIT_USAGE
        }
        Err(CliError::Infeasible(e)) => {
            eprintln!("{}", json!({"error": e.to_string(), "hop": e.hop()}));
            EXIT_INFEASIBLE
        }
        Err(CliError::Failed(msg)) => {
            eprintln!("error: {msg}");
            EXIT_FAILED
        }
    }
}

/// Formats like C's `%.{digits}g`: `digits` significant digits, trailing
/// zeros removed, exponent notation outside `[1e-4, 10^digits)`.
pub fn format_sig(x: f64, digits: usize) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let digits = digits.max(1);
    let sci = format!("{:.*e}", digits - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent marker");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -4 || exp >= digits as i32 {
        let mantissa = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mantissa}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (digits as i32 - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{x:.decimals$}")).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn g(x: f64) -> String {
    format_sig(x, 12)
}

fn emit(out: Option<&Path>, text: &str) -> CliResult {
    match out {
        Some(p) => write_file(p, text),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|e| CliError::Failed(format!("stdout: {e}")))
        }
    }
}

fn write_file(path: &Path, text: &str) -> CliResult {
    std::fs::write(path, text).map_err(|e| CliError::Failed(format!("{}: {e}", path.display())))
}

fn load_scenario(path: &Path) -> CliResult<ResolvedScenario> {
    Ok(Scenario::load(path)?.resolve()?)
}

fn to_json(value: &serde_json::Value) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("values serialize");
    s.push('\n');
    s
}

fn worker_count() -> CliResult<usize> {
    match std::env::var(THREADS_ENV) {
        Err(_) => Ok(1),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(n),
            _ => Err(CliError::Usage(format!(
                "{THREADS_ENV} must be a positive integer, got {v:?}"
            ))),
        },
    }
}

fn cmd_exponent(a: ExponentArgs) -> CliResult {
    let (channel, hop) = match (a.snr_db, &a.scenario, a.hop) {
        (Some(db), _, _) => {
            if !db.is_finite() {
                return Err(CliError::Usage("--snr-db must be finite".into()));
            }
            (HopChannel::awgn_db(db).map_err(|e| e.at_hop(0))?, 0)
        }
        (None, Some(path), Some(hop)) => {
            let sc = load_scenario(path)?;
            let ch = sc.channels.get(hop).cloned().ok_or_else(|| {
                CliError::Usage(format!(
                    "--hop {hop} out of range for {} hops",
                    sc.channels.len()
                ))
            })?;
            (ch, hop)
        }
        _ => return Err(CliError::Usage("give --snr-db or --scenario with --hop".into())),
    };
    if !(a.rate_min.is_finite() && a.rate_max.is_finite() && a.rate_min > 0.0) {
        return Err(CliError::Usage("rates must be finite and positive".into()));
    }
    if a.rate_min > a.rate_max {
        return Err(CliError::Usage("--rate-min exceeds --rate-max".into()));
    }
    if a.rate_steps < 2 {
        return Err(CliError::Usage("--rate-steps must be at least 2".into()));
    }
    let bits = a.bits && a.out.is_none();
    let rate_scale = if bits { 1.0 / std::f64::consts::LN_2 } else { 1.0 };
    let mut csv = String::new();
    if bits {
        csv.push_str(&EXPONENT_HEADER.replacen("rate_nats", "rate_bits", 1));
    } else {
        csv.push_str(EXPONENT_HEADER);
    }
    csv.push('\n');
    let span = a.rate_max - a.rate_min;
    for k in 0..a.rate_steps {
        let rate = a.rate_min + span * k as f64 / (a.rate_steps - 1) as f64;
        let rc = random_coding_exponent(rate, &channel).map_err(|e| e.at_hop(hop))?;
        let sp = sphere_packing_exponent(rate, &channel).map_err(|e| e.at_hop(hop))?;
        writeln!(
            csv,
            "{},{},{},{},{},{},{}",
            g(rate * rate_scale),
            g(rc.exponent),
            g(rc.rho_star),
            rc.regime.as_str(),
            g(sp.exponent),
            g(sp.rho_star),
            sp.regime.as_str()
        )
        .expect("writing to a String");
    }
    emit(a.out.as_deref(), &csv)
}

fn fig3_csv(curve: &Curve<Fig3Row>) -> String {
    let mut csv = format!("{FIG3_HEADER}\n");
    for r in &curve.rows {
        writeln!(csv, "{},{},{}", g(r.end_to_end_rate), g(r.esys_rc), g(r.esys_sp))
            .expect("writing to a String");
    }
    csv
}

fn fig4_csv(curve: &Curve<Fig4Row>) -> String {
    let mut csv = format!("{FIG4_HEADER}\n");
    for r in &curve.rows {
        writeln!(
            csv,
            "{},{},{},{},{}",
            g(r.end_to_end_rate),
            g(r.latency_upper),
            g(r.latency_lower),
            g(r.mc_mean),
            g(r.mc_stderr)
        )
        .expect("writing to a String");
    }
    csv
}

fn sweep_metadata(figure: &str, schemes: &[Scheme], extra: serde_json::Value) -> serde_json::Value {
    let per_scheme: Vec<_> = schemes
        .iter()
        .map(|s| {
            json!({
                "file": format!("{figure}_{}.csv", s.label()),
                "scheme": s,
                "snr_db": s.snr_db(),
                "allocation_method": s.method().as_str(),
                "network_capacity_nats": s.capacity(),
            })
        })
        .collect();
    let mut meta = json!({
        "figure": figure,
        "total_q": figures::FIG_Q,
        "rate_policy": "target_rate",
        "sweep": {
            "points": figures::SWEEP_POINTS,
            "min_rate_nats": figures::SWEEP_MIN_RATE,
            "max_fraction_of_capacity": figures::SWEEP_MAX_FRACTION,
            "spacing": "linear",
            "x_axis": "nominal end-to-end rate 1/sum(1/R_n) of the per-hop rates",
        },
        "schemes": per_scheme,
    });
    if let (Some(m), Some(e)) = (meta.as_object_mut(), extra.as_object()) {
        m.extend(e.clone());
    }
    meta
}

fn note_skipped<R>(curve: &Curve<R>) -> usize {
    for s in &curve.skipped {
        eprintln!(
            "note: {} skipped target rate {}: {}",
            curve.scheme.label(),
            g(s.target_rate),
            s.reason
        );
    }
    curve.skipped.len()
}

fn cmd_reproduce(a: ReproduceArgs) -> CliResult {
    if a.trials == 0 {
        return Err(CliError::Usage("--trials must be positive".into()));
    }
    std::fs::create_dir_all(&a.out_dir)
        .map_err(|e| CliError::Failed(format!("{}: {e}", a.out_dir.display())))?;
    let mut skipped = 0;
    match a.figure {
        Figure::Fig3 => {
            let schemes = [Scheme::SingleHop, Scheme::TwoHopRelopt, Scheme::TwoHopInfoCont];
            for s in schemes {
                let curve = figures::fig3_curve(s);
                skipped += note_skipped(&curve);
                write_file(&a.out_dir.join(format!("fig3_{}.csv", s.label())), &fig3_csv(&curve))?;
            }
            let meta = sweep_metadata(
                "fig3",
                &schemes,
                json!({
                    "esys": "finite-Q -(1/Q) ln sum_n exp(-Q_n E_n) at the integer allocation",
                    "esys_sp": "exponent-only, sub-exponential terms omitted",
                }),
            );
            write_file(&a.out_dir.join("fig3_metadata.json"), &to_json(&meta))?;
        }
        Figure::Fig4 => {
            let workers = worker_count()?;
            let schemes = [Scheme::SingleHop, Scheme::TwoHopRelopt];
            for s in schemes {
                let curve = figures::fig4_curve(s, a.trials, a.seed, workers)?;
                skipped += note_skipped(&curve);
                write_file(&a.out_dir.join(format!("fig4_{}.csv", s.label())), &fig4_csv(&curve))?;
            }
            let meta = sweep_metadata(
                "fig4",
                &schemes,
                json!({
                    "monte_carlo": {
                        "trials": a.trials,
                        "seed": a.seed,
                        "chain": "random-coding failure bounds",
                    },
                    "latency_upper": "random-coding failure bounds, clamped below 1",
                    "latency_lower": "sphere-packing failure bounds, exponent-only",
                }),
            );
            write_file(&a.out_dir.join("fig4_metadata.json"), &to_json(&meta))?;
        }
    }
    if skipped > 0 {
        return Err(CliError::Infeasible(crate::Error::Infeasible {
            hop: None,
            reason: format!("{skipped} sweep point(s) skipped; remaining rows were written"),
        }));
    }
    Ok(())
}

fn cmd_allocate(a: AllocateArgs) -> CliResult {
    let sc = load_scenario(&a.scenario)?;
    let report = sc.allocate()?;
    let alloc = &report.allocation;
    let out = json!({
        "method": alloc.method.as_str(),
        "blocklengths": alloc.blocklengths,
        "rates_nats": alloc.rates,
        "end_to_end_rate_nats": alloc.end_to_end_rate,
        "stationarity_residual": report.stationarity_residual,
        "ln_m": report.ln_m,
    });
    emit(a.out.as_deref(), &to_json(&out))
}

fn cmd_latency(a: LatencyArgs) -> CliResult {
    if a.trials == 0 {
        return Err(CliError::Usage("--trials must be positive".into()));
    }
    let workers = worker_count()?;
    let sc = load_scenario(&a.scenario)?;
    let report = sc.allocate()?;
    let bounds = latency_bounds(&report.allocation, &sc.channels)?;
    let mc = simulate_latency_with_workers(&bounds.upper_chain, a.trials, a.seed, workers)?;
    let out = json!({
        "latency_upper": bounds.upper,
        "latency_lower": bounds.lower,
        "blocklengths": report.allocation.blocklengths,
        "mc": {
            "mean": mc.mc_mean,
            "stderr": mc.mc_stderr,
            "trials": mc.trials,
            "seed": mc.seed,
        },
    });
    emit(a.out.as_deref(), &to_json(&out))
}

fn cmd_distributed(a: DistributedArgs) -> CliResult {
    let sc = load_scenario(&a.scenario)?;
    let outcome = distproto::run(sc.channels.clone(), &sc.rates, sc.total_q)?;
    if let Some(path) = &a.trace {
        let mut lines = String::new();
        for rec in &outcome.trace {
            lines.push_str(&serde_json::to_string(rec).expect("trace records serialize"));
            lines.push('\n');
        }
        write_file(path, &lines)?;
    }
    let out = json!({
        "ln_m": outcome.broadcast.codebook.ln_m,
        "lambda_r": outcome.broadcast.lambda_r,
        "lambda_sp": outcome.broadcast.lambda_sp,
        "per_node_blocks": outcome.per_node,
        "matches_centralized": outcome.matches_centralized,
        "forward_messages": outcome.forward_messages,
        "broadcast_deliveries": outcome.broadcast_deliveries,
        "non_local_reads": outcome.non_local_reads,
    });
    emit(a.out.as_deref(), &to_json(&out))?;
    if !outcome.matches_centralized {
        return Err(CliError::Failed(
            "distributed derivation differs from the centralized one".into(),
        ));
    }
    Ok(())
}

fn cmd_verify(a: VerifyArgs) -> CliResult {
    let checks = match a.suite {
        Suite::Grid => verify::grid_suite(a.seed),
        Suite::Alloc => verify::alloc_suite(a.seed),
        Suite::Ensemble => verify::ensemble_suite(a.seed),
    }?;
    let mut report = String::new();
    for c in &checks {
        report.push_str(&c.line());
        report.push('\n');
    }
    let failed = checks.iter().filter(|c| !c.passed).count();
    writeln!(report, "{} checks, {failed} failed", checks.len()).expect("writing to a String");
    emit(None, &report)?;
    if failed > 0 {
        return Err(CliError::Failed(format!("{failed} check(s) failed")));
    }
    Ok(())
}
