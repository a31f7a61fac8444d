use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use dopf_core::admm::StopRule;
use dopf_core::network::{CaseFormat, LineLimitKind};
use serde::Deserialize;

#[derive(Debug, Parser)]
#[command(name = "dopf", version, about = "Distributed AC optimal power flow")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run ADMM on a case and write the trace and final report.
    Solve(SolveArgs),
    /// Brute-force grid search for networks of at most three buses.
    Oracle(OracleArgs),
    /// Parse a case and list every broken invariant.
    Validate(ValidateArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FormatArg {
    Matpower,
    Json,
}

impl From<FormatArg> for CaseFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Matpower => CaseFormat::MatpowerM,
            FormatArg::Json => CaseFormat::CanonicalJson,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LineLimitArg {
    None,
    Imax,
    Smax,
    Pmax,
}

impl From<LineLimitArg> for LineLimitKind {
    fn from(l: LineLimitArg) -> Self {
        match l {
            LineLimitArg::None => LineLimitKind::None,
            LineLimitArg::Imax => LineLimitKind::Imax,
            LineLimitArg::Smax => LineLimitKind::Smax,
            LineLimitArg::Pmax => LineLimitKind::Pmax,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NetUpdateArg {
    General,
    Average,
    Gossip,
}

/// `iters`, `consensus:θ` or `objective:θ`.
pub fn parse_stop(s: &str) -> Result<StopRule, String> {
    let theta = |t: &str| {
        t.parse::<f64>()
            .map_err(|e| format!("bad threshold {t:?}: {e}"))
    };
    match s.split_once(':') {
        None if s == "iters" => Ok(StopRule::FixedIters),
        Some(("consensus", t)) => Ok(StopRule::Consensus(theta(t)?)),
        Some(("objective", t)) => Ok(StopRule::ObjectiveDecrement(theta(t)?)),
        _ => Err(format!(
            "expected iters, consensus:<theta> or objective:<theta>, got {s:?}"
        )),
    }
}

/// Case selection and modifications shared by every command that solves.
#[derive(Debug, Clone, Default, Args)]
pub struct CaseArgs {
    /// Case file (.m or .json).
    #[arg(long)]
    pub case: Option<PathBuf>,
    /// Input format; inferred from the extension when omitted.
    #[arg(long, value_enum)]
    pub format: Option<FormatArg>,
    /// TOML file with default values for any of these options.
    #[arg(long)]
    pub preset: Option<PathBuf>,
    /// Treat transformer taps and phase shifts as nominal.
    #[arg(long)]
    pub ignore_taps: bool,
    /// Multiply every real demand.
    #[arg(long)]
    pub scale_pd: Option<f64>,
    /// Multiply every reactive demand.
    #[arg(long)]
    pub scale_qd: Option<f64>,
    /// New reactive lower bound for every generator, MVAr.
    #[arg(long)]
    pub qgmin_override: Option<f64>,
    /// Which line rating becomes a constraint.
    #[arg(long, value_enum)]
    pub line_limit: Option<LineLimitArg>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct SolveArgs {
    #[command(flatten)]
    pub case: CaseArgs,
    /// Penalty parameter.
    #[arg(long)]
    pub rho: Option<f64>,
    /// ADMM iteration budget.
    #[arg(long)]
    pub iters: Option<usize>,
    /// Subproblem voltage decrement tolerance.
    #[arg(long)]
    pub eps_sub: Option<f64>,
    /// Subproblem refinement budget.
    #[arg(long)]
    pub max_sub_iter: Option<usize>,
    /// Stopping rule: iters, consensus:<theta> or objective:<theta>.
    #[arg(long, value_parser = parse_stop)]
    pub stop: Option<StopRule>,
    #[arg(long, value_enum)]
    pub net_update: Option<NetUpdateArg>,
    /// Pairwise exchanges per net update in gossip mode.
    #[arg(long)]
    pub gossip_rounds: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Keep each bus's cutting planes across ADMM iterations.
    #[arg(long)]
    pub persist_cuts: bool,
    /// Record wall-clock time per iteration (the trace is then no longer
    /// reproducible byte for byte).
    #[arg(long)]
    pub timing: bool,
    /// Trace file; `.jsonl` or `.json` selects JSON lines, anything else CSV.
    #[arg(long)]
    pub trace_out: Option<PathBuf>,
    /// Final report, JSON.
    #[arg(long)]
    pub report_out: Option<PathBuf>,
    /// Print a progress line every this many iterations (0 disables).
    #[arg(long, default_value_t = 0)]
    pub progress: usize,
}

#[derive(Debug, Clone, Default, Args)]
pub struct OracleArgs {
    #[command(flatten)]
    pub case: CaseArgs,
    /// Grid points per axis (default 400 up to two buses, 40 for three).
    #[arg(long)]
    pub points: Option<usize>,
    /// Slack allowed on every limit.
    #[arg(long, default_value_t = 0.0)]
    pub bound_tol: f64,
    #[arg(long)]
    pub report_out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct ValidateArgs {
    pub case: PathBuf,
    #[arg(long, value_enum)]
    pub format: Option<FormatArg>,
    #[arg(long)]
    pub ignore_taps: bool,
}
