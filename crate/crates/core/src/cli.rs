//! Command-line frontend.
//!
//! Exit codes are stable:
//!
//! | code | meaning                         |
//! |------|---------------------------------|
//! | 0    | success                         |
//! | 2    | malformed input (flags, files)  |
//! | 3    | prefill SLO infeasible          |
//! | 4    | decode SLO infeasible           |
//!
//! Results go to stdout, warnings and errors to stderr.

use std::fmt::{self, Write as _};
use std::fs::File;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;

use crate::decode::read_decode_csv;
use crate::error::{Error, Phase};
use crate::planner;
use crate::planner::{plan, RoundingPolicy};
use crate::sim::{simulate_sweep, validate_against_mm1, ServiceDistribution, SimSettings};
use crate::types::{
    tpm_to_tps, tps_to_tpm, AllocationPlan, DecodeProfile, PrefillProfile, SloSpec, WorkloadSpec,
};
use crate::warning::{dedup, Warning};

pub const EXIT_OK: i32 = 0;
pub const EXIT_MALFORMED: i32 = 2;
pub const EXIT_INFEASIBLE_PREFILL: i32 = 3;
pub const EXIT_INFEASIBLE_DECODE: i32 = 4;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Model(#[from] Error),
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("malformed {what}: {reason}")]
    Malformed { what: &'static str, reason: String },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Model(e) => match e.infeasible_phase() {
                Some(Phase::Prefill) => EXIT_INFEASIBLE_PREFILL,
                Some(Phase::Decode) => EXIT_INFEASIBLE_DECODE,
                None => EXIT_MALFORMED,
            },
            CliError::Io { .. } | CliError::Malformed { .. } => EXIT_MALFORMED,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "pd-planner",
    version,
    about = "Prefill/decode capacity planning under TTFT and TPOT targets"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compute prefill and decode instance counts.
    Plan(PlanArgs),
    /// Predict TTFT/TPOT across a throughput grid as CSV.
    Sweep(SweepArgs),
    /// Compare simulated prefill TTFT with the M/M/1 prediction as CSV.
    ValidateMm1(ValidateArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PolicyArg {
    Nearest,
    Ceil,
}

impl From<PolicyArg> for RoundingPolicy {
    fn from(p: PolicyArg) -> Self {
        match p {
            PolicyArg::Nearest => RoundingPolicy::Nearest,
            PolicyArg::Ceil => RoundingPolicy::Ceil,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ServiceArg {
    Exp,
    Det,
}

#[derive(Debug, Clone, Args)]
pub struct PlanArgs {
    /// Total demand in million tokens per minute.
    #[arg(long)]
    pub tpm: f64,
    /// Mean input length in tokens.
    #[arg(long = "in")]
    pub input_len: u32,
    /// Mean output length in tokens.
    #[arg(long = "out")]
    pub output_len: u32,
    /// Input tokens missing the prefix cache.
    #[arg(long = "effective-in")]
    pub effective_input_len: Option<u32>,
    /// TTFT target, seconds.
    #[arg(long)]
    pub ttft: f64,
    /// TPOT target, seconds.
    #[arg(long)]
    pub tpot: f64,
    /// Fixed TTFT overhead (transfers), seconds.
    #[arg(long, default_value_t = 0.0)]
    pub overhead: f64,
    /// CSV with header input_len,chunk_size,max_throughput_tps.
    #[arg(long)]
    pub prefill_profile: PathBuf,
    /// CSV with header batch,tpot_ms[,throughput_tps].
    #[arg(long)]
    pub decode_profile: PathBuf,
    /// Input length the decode profile was measured at (defaults to --in).
    #[arg(long)]
    pub decode_profile_in: Option<u32>,
    /// Output length the decode profile was measured at (defaults to --out).
    #[arg(long)]
    pub decode_profile_out: Option<u32>,
    #[arg(long, value_enum, default_value_t = PolicyArg::Nearest)]
    pub policy: PolicyArg,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub plan: PlanArgs,
    /// Throughput grid in M TPM as start:stop:step.
    #[arg(long)]
    pub grid: String,
    /// Override the planned prefill instance count.
    #[arg(long)]
    pub prefill_instances: Option<u32>,
    /// Override the planned decode instance count.
    #[arg(long)]
    pub decode_instances: Option<u32>,
    /// Also run the discrete-event simulator at every grid point.
    #[arg(long, requires = "seed")]
    pub simulate: bool,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Requests simulated per grid point.
    #[arg(long, default_value_t = 20_000)]
    pub sim_requests: u64,
    #[arg(long, value_enum, default_value_t = ServiceArg::Exp)]
    pub service: ServiceArg,
}

#[derive(Debug, Clone, Args)]
pub struct ValidateArgs {
    #[arg(long)]
    pub prefill_profile: PathBuf,
    /// Request input length in tokens.
    #[arg(long = "in")]
    pub input_len: u32,
    /// Comma-separated arrival rates, requests/s.
    #[arg(long, allow_hyphen_values = true)]
    pub rates: String,
    #[arg(long, default_value_t = 0.0)]
    pub overhead: f64,
    #[arg(long)]
    pub seed: u64,
    /// Requests simulated per rate.
    #[arg(long, default_value_t = 200_000)]
    pub requests: u64,
}

/// What a command produced: text for stdout plus warnings for stderr.
#[derive(Debug, Clone, PartialEq)]
pub struct CommandOutput {
    pub stdout: String,
    pub warnings: Vec<Warning>,
}

#[derive(Debug, Deserialize)]
struct PrefillRow {
    input_len: u32,
    chunk_size: u32,
    max_throughput_tps: f64,
}

fn open(path: &Path) -> Result<File, CliError> {
    File::open(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Parses a prefill profile CSV (`input_len,chunk_size,max_throughput_tps`).
pub fn read_prefill_csv<R: std::io::Read>(reader: R) -> Result<Vec<PrefillProfile>, CliError> {
    let malformed = |reason: String| CliError::Malformed {
        what: "prefill profile",
        reason,
    };
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr.headers().map_err(|e| malformed(e.to_string()))?.clone();
    if headers.iter().collect::<Vec<_>>() != ["input_len", "chunk_size", "max_throughput_tps"] {
        return Err(malformed(format!(
            "expected header input_len,chunk_size,max_throughput_tps, got {}",
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut out = Vec::new();
    for row in rdr.deserialize::<PrefillRow>() {
        let row = row.map_err(|e| malformed(e.to_string()))?;
        out.push(PrefillProfile::new(
            row.input_len,
            row.chunk_size,
            row.max_throughput_tps,
        )?);
    }
    if out.is_empty() {
        return Err(malformed("no rows".into()));
    }
    Ok(out)
}

/// The profile measured closest to `input_len` (first on ties).
pub fn nearest_prefill_profile(
    profiles: &[PrefillProfile],
    input_len: u32,
) -> Option<PrefillProfile> {
    profiles
        .iter()
        .min_by_key(|p| p.input_len.abs_diff(input_len))
        .copied()
}

/// Parses `start:stop:step` (M TPM) into grid values, inclusive of `stop`.
pub fn parse_grid(spec: &str) -> Result<Vec<f64>, CliError> {
    let malformed = |reason: &str| CliError::Malformed {
        what: "grid",
        reason: format!("{reason} in {spec:?}"),
    };
    let parts: Vec<f64> = spec
        .split(':')
        .map(|s| s.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| malformed("expected start:stop:step numbers"))?;
    let [start, stop, step] = parts[..] else {
        return Err(malformed("expected three fields"));
    };
    if !(step.is_finite() && step > 0.0) {
        return Err(malformed("step must be positive"));
    }
    if !(start.is_finite() && start >= 0.0 && stop.is_finite() && stop >= start) {
        return Err(malformed("need 0 <= start <= stop"));
    }
    let n = ((stop - start) / step + 1e-9).floor() as usize;
    Ok((0..=n)
        .map(|i| ((start + i as f64 * step) * 1e9).round() / 1e9)
        .collect())
}

fn parse_rates(spec: &str) -> Result<Vec<f64>, CliError> {
    spec.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<f64>().map_err(|_| CliError::Malformed {
                what: "rates",
                reason: format!("{s:?} is not a number"),
            })
        })
        .collect()
}

struct Inputs {
    workload: WorkloadSpec,
    slo: SloSpec,
    prefill: PrefillProfile,
    decode: DecodeProfile,
    policy: RoundingPolicy,
}

fn load_inputs(args: &PlanArgs) -> Result<Inputs, CliError> {
    let mut workload = WorkloadSpec::from_tpm(args.tpm, args.input_len, args.output_len)?;
    if let Some(eff) = args.effective_input_len {
        workload = workload.with_effective_input_len(eff)?;
    }
    let slo = SloSpec::new(args.ttft, args.tpot, args.overhead)?;
    let prefills = read_prefill_csv(open(&args.prefill_profile)?)?;
    let prefill = nearest_prefill_profile(&prefills, workload.prefill_input_len())
        .expect("read_prefill_csv rejects empty files");
    let (decode, _) = read_decode_csv(
        open(&args.decode_profile)?,
        args.decode_profile_in.unwrap_or(args.input_len),
        args.decode_profile_out.unwrap_or(args.output_len),
    )?;
    Ok(Inputs {
        workload,
        slo,
        prefill,
        decode,
        policy: args.policy.into(),
    })
}

/// Human-readable plan summary.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanReport {
    pub workload: WorkloadSpec,
    pub slo: SloSpec,
    pub prefill: PrefillProfile,
    pub policy: RoundingPolicy,
    pub plan: AllocationPlan,
}

impl PlanReport {
    pub fn warnings(&self) -> &[Warning] {
        &self.plan.warnings
    }
}

impl fmt::Display for PlanReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let w = &self.workload;
        let p = &self.plan;
        writeln!(
            f,
            "demand:       {} M TPM ({:.1} tok/s), input {} (prefill {}), output {}",
            tps_to_tpm(w.total_throughput),
            w.total_throughput,
            w.mean_input_len,
            w.prefill_input_len(),
            w.mean_output_len
        )?;
        writeln!(
            f,
            "slo:          ttft {} s, tpot {} s, overhead {} s",
            self.slo.ttft_target, self.slo.tpot_target, self.slo.overhead_time
        )?;
        writeln!(
            f,
            "prefill:      profile input {} chunk {}, max {:.1} tok/s -> effective {:.1} tok/s",
            self.prefill.input_len,
            self.prefill.chunked_prefill_size,
            self.prefill.max_throughput,
            p.eff_prefill_throughput
        )?;
        writeln!(
            f,
            "decode:       batch {:.2} at tpot {:.4} s -> {:.1} tok/s",
            p.decode_batch, p.decode_tpot, p.eff_decode_throughput
        )?;
        writeln!(f, "p:d ratio:    {:.4}", p.pd_ratio)?;
        writeln!(
            f,
            "fractional:   prefill {:.3}, decode {:.3}",
            p.frac_prefill, p.frac_decode
        )?;
        let policy = match self.policy {
            RoundingPolicy::Nearest => "nearest",
            RoundingPolicy::Ceil => "ceil",
        };
        writeln!(f, "plan:         {} (policy {policy})", p.label())?;
        writeln!(
            f,
            "achievable:   {:.1} tok/s ({:.3} M TPM), {}-bound",
            p.achievable_total_throughput,
            p.achievable_tpm(),
            p.binding_phase
        )?;
        write!(f, "warnings:     {}", p.warnings.len())
    }
}

pub fn cmd_plan(args: &PlanArgs) -> Result<(PlanReport, CommandOutput), CliError> {
    let inputs = load_inputs(args)?;
    let plan = plan(
        &inputs.workload,
        &inputs.slo,
        &inputs.prefill,
        &inputs.decode,
        inputs.policy,
    )?;
    let report = PlanReport {
        workload: inputs.workload,
        slo: inputs.slo,
        prefill: inputs.prefill,
        policy: inputs.policy,
        plan,
    };
    let out = CommandOutput {
        stdout: format!("{report}\n"),
        warnings: report.plan.warnings.clone(),
    };
    Ok((report, out))
}

fn csv_bool(b: bool) -> &'static str {
    if b {
        "true"
    } else {
        "false"
    }
}

pub fn cmd_sweep(args: &SweepArgs) -> Result<CommandOutput, CliError> {
    let grid_tpm = parse_grid(&args.grid)?;
    let inputs = load_inputs(&args.plan)?;
    let base = plan(
        &inputs.workload,
        &inputs.slo,
        &inputs.prefill,
        &inputs.decode,
        inputs.policy,
    )?;
    let n_prefill = args.prefill_instances.unwrap_or(base.n_prefill);
    let n_decode = args.decode_instances.unwrap_or(base.n_decode);
    let grid: Vec<f64> = grid_tpm.iter().map(|&t| tpm_to_tps(t)).collect();

    let mut out = String::from("tpm,ttft_s,tpot_s,prefill_util,decode_batch,feasible");
    let rows = if args.simulate {
        out.push_str(",sim_ttft_mean,sim_ttft_p99,sim_tpot_mean");
        let settings = SimSettings {
            requests: args.sim_requests,
            seed: args.seed.unwrap_or_default(),
            service: match args.service {
                ServiceArg::Exp => ServiceDistribution::Exponential,
                ServiceArg::Det => ServiceDistribution::Deterministic,
            },
            ..Default::default()
        };
        simulate_sweep(
            n_prefill,
            n_decode,
            &inputs.workload,
            &inputs.slo,
            &inputs.prefill,
            &inputs.decode,
            &grid,
            &settings,
        )?
    } else {
        planner::sweep(
            n_prefill,
            n_decode,
            &inputs.workload,
            &inputs.slo,
            &inputs.prefill,
            &inputs.decode,
            &grid,
        )?
        .into_iter()
        .map(|p| (p, None))
        .collect()
    };
    out.push('\n');
    for ((p, sim), tpm) in rows.iter().zip(&grid_tpm) {
        write!(
            out,
            "{},{},{},{},{},{}",
            tpm,
            p.predicted_ttft,
            p.predicted_tpot,
            p.prefill_utilization,
            p.decode_batch_per_instance,
            csv_bool(p.meets_slo(&inputs.slo))
        )
        .expect("writing to String");
        if args.simulate {
            match sim {
                Some(s) => write!(out, ",{},{},{}", s.ttft_mean, s.ttft_p99, s.tpot_mean),
                None => write!(out, ",,,"),
            }
            .expect("writing to String");
        }
        out.push('\n');
    }
    Ok(CommandOutput {
        stdout: out,
        warnings: base.warnings,
    })
}

pub fn cmd_validate_mm1(args: &ValidateArgs) -> Result<CommandOutput, CliError> {
    let rates = parse_rates(&args.rates)?;
    let prefills = read_prefill_csv(open(&args.prefill_profile)?)?;
    let prefill = nearest_prefill_profile(&prefills, args.input_len).expect("non-empty");
    let warnings = crate::queueing::prefill_warnings(&prefill, args.input_len);
    if !(args.overhead.is_finite() && args.overhead >= 0.0) {
        return Err(Error::invalid("overhead_time", "must be non-negative").into());
    }
    let settings = SimSettings {
        requests: args.requests,
        seed: args.seed,
        ..Default::default()
    };
    let rows = validate_against_mm1(&prefill, args.input_len, args.overhead, &rates, &settings)?;
    let mut out = String::from("rate_rps,analytic_ttft_s,sim_ttft_s,rel_err,note\n");
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{}",
            r.rate,
            opt(r.analytic_ttft),
            opt(r.sim_ttft),
            opt(r.rel_err),
            if r.unstable { "unstable" } else { "" }
        )
        .expect("writing to String");
    }
    Ok(CommandOutput {
        stdout: out,
        warnings,
    })
}

/// Runs a parsed command, printing results and diagnostics. Returns the exit
/// code.
pub fn run(cli: Cli) -> i32 {
    let result = match &cli.command {
        Command::Plan(a) => cmd_plan(a).map(|(_, out)| out),
        Command::Sweep(a) => cmd_sweep(a),
        Command::ValidateMm1(a) => cmd_validate_mm1(a),
    };
    match result {
        Ok(out) => {
            for w in dedup(out.warnings) {
                eprintln!("warning: {w}");
            }
            print!("{}", out.stdout);
            EXIT_OK
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
