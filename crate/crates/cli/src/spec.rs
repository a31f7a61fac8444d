//! Resolution of command-line options and preset files into one run
//! description.

use std::path::{Path, PathBuf};

use dopf_core::admm::{AdmmConfig, NetUpdateMode, StopRule};
use dopf_core::network::{CaseFormat, Overrides, ParseOptions};
use serde::Deserialize;

use crate::args::{parse_stop, CaseArgs, FormatArg, LineLimitArg, NetUpdateArg, SolveArgs};
use crate::CliError;

/// Contents of a preset file. Every key is optional; command-line flags
/// win over preset values. A relative `case` is resolved against the
/// preset's directory.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Preset {
    pub case: Option<PathBuf>,
    pub format: Option<FormatArg>,
    pub ignore_taps: Option<bool>,
    pub scale_pd: Option<f64>,
    pub scale_qd: Option<f64>,
    pub qgmin_override: Option<f64>,
    pub line_limit: Option<LineLimitArg>,
    pub rho: Option<f64>,
    pub iters: Option<usize>,
    pub eps_sub: Option<f64>,
    pub max_sub_iter: Option<usize>,
    pub stop: Option<String>,
    pub net_update: Option<NetUpdateArg>,
    pub gossip_rounds: Option<usize>,
    pub seed: Option<u64>,
    pub persist_cuts: Option<bool>,
}

pub fn load_preset(path: &Path) -> Result<Preset, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::input(format!("cannot read preset {}: {e}", path.display())))?;
    let mut preset: Preset = toml::from_str(&text)
        .map_err(|e| CliError::input(format!("preset {}: {e}", path.display())))?;
    if let Some(case) = &preset.case {
        if case.is_relative() {
            let dir = path.parent().unwrap_or(Path::new("."));
            preset.case = Some(dir.join(case));
        }
    }
    Ok(preset)
}

/// Everything needed to load and modify a case.
#[derive(Debug, Clone, PartialEq)]
pub struct CaseSpec {
    pub path: PathBuf,
    pub format: CaseFormat,
    pub parse: ParseOptions,
    pub overrides: Overrides,
}

/// A fully resolved solve request.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSpec {
    pub case: CaseSpec,
    pub config: AdmmConfig,
    pub trace_out: Option<PathBuf>,
    pub report_out: Option<PathBuf>,
}

fn preset_for(args: &CaseArgs) -> Result<Preset, CliError> {
    match &args.preset {
        Some(p) => load_preset(p),
        None => Ok(Preset::default()),
    }
}

pub fn resolve_case(args: &CaseArgs, preset: &Preset) -> Result<CaseSpec, CliError> {
    let path = args
        .case
        .clone()
        .or_else(|| preset.case.clone())
        .ok_or_else(|| CliError::input("no case given (use --case or a preset with `case`)"))?;
    let format = match args.format.or(preset.format) {
        Some(f) => f.into(),
        None => CaseFormat::from_extension(&path).ok_or_else(|| {
            CliError::input(format!(
                "cannot infer the format of {}; pass --format",
                path.display()
            ))
        })?,
    };
    let defaults = Overrides::default();
    Ok(CaseSpec {
        path,
        format,
        parse: ParseOptions {
            ignore_taps: args.ignore_taps || preset.ignore_taps.unwrap_or(false),
        },
        overrides: Overrides {
            scale_pd: args.scale_pd.or(preset.scale_pd).unwrap_or(defaults.scale_pd),
            scale_qd: args.scale_qd.or(preset.scale_qd).unwrap_or(defaults.scale_qd),
            qg_min_mvar: args.qgmin_override.or(preset.qgmin_override),
            line_limit: args
                .line_limit
                .or(preset.line_limit)
                .map_or(defaults.line_limit, Into::into),
        },
    })
}

/// Case options only, for commands that do not run ADMM.
pub fn resolve_case_args(args: &CaseArgs) -> Result<CaseSpec, CliError> {
    resolve_case(args, &preset_for(args)?)
}

pub fn resolve_solve(args: &SolveArgs) -> Result<RunSpec, CliError> {
    let preset = preset_for(&args.case)?;
    let case = resolve_case(&args.case, &preset)?;
    let d = AdmmConfig::default();
    let stop = match (&args.stop, &preset.stop) {
        (Some(s), _) => *s,
        (None, Some(s)) => parse_stop(s).map_err(CliError::input)?,
        (None, None) => StopRule::FixedIters,
    };
    let rounds = args.gossip_rounds.or(preset.gossip_rounds);
    let net_update = match args.net_update.or(preset.net_update) {
        None | Some(NetUpdateArg::General) => NetUpdateMode::General,
        Some(NetUpdateArg::Average) => NetUpdateMode::Average,
        Some(NetUpdateArg::Gossip) => NetUpdateMode::Gossip(rounds.unwrap_or(200)),
    };
    let config = AdmmConfig {
        rho: args.rho.or(preset.rho).unwrap_or(d.rho),
        max_admm_iters: args.iters.or(preset.iters).unwrap_or(d.max_admm_iters),
        eps_sub: args.eps_sub.or(preset.eps_sub).unwrap_or(d.eps_sub),
        max_sub_iter: args.max_sub_iter.or(preset.max_sub_iter).unwrap_or(d.max_sub_iter),
        stop_rule: stop,
        net_update,
        seed: args.seed.or(preset.seed).unwrap_or(d.seed),
        persist_cuts: args.persist_cuts || preset.persist_cuts.unwrap_or(false),
        timing: args.timing,
    };
    config
        .validate()
        .map_err(|e| CliError::input(e.to_string()))?;
    Ok(RunSpec {
        case,
        config,
        trace_out: args.trace_out.clone(),
        report_out: args.report_out.clone(),
    })
}
