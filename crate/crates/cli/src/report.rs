use std::path::Path;

use dopf_core::admm::{AdmmConfig, SolveReport, SubTotals};
use dopf_core::diagnostics::{
    evaluate_centralized_feasibility, kkt_delta_epsilon, objective_value, FeasibilityReport,
    GlobalPoint,
};
use dopf_core::network::{build_admittance, Network};
use dopf_core::oracle::OracleResult;
use serde::{Deserialize, Serialize};

/// Per-bus operating point in physical units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BusResult {
    pub id: usize,
    pub ext_id: i64,
    pub pg_mw: f64,
    pub qg_mvar: f64,
    pub v_re: f64,
    pub v_im: f64,
    pub v_mag: f64,
    pub v_ang_deg: f64,
}

fn bus_results(net: &Network, v_re: &[f64], v_im: &[f64], pg: &[f64], qg: &[f64]) -> Vec<BusResult> {
    net.buses
        .iter()
        .enumerate()
        .map(|(k, b)| BusResult {
            id: b.id,
            ext_id: b.ext_id,
            pg_mw: pg[k] * net.base_mva,
            qg_mvar: qg[k] * net.base_mva,
            v_re: v_re[k],
            v_im: v_im[k],
            v_mag: v_re[k].hypot(v_im[k]),
            v_ang_deg: v_im[k].atan2(v_re[k]).to_degrees(),
        })
        .collect()
}

/// Final state of a solve, as written by `--report-out`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveSummary {
    pub case: String,
    pub iterations: usize,
    pub config: AdmmConfig,
    /// Generation cost at the final point, $/h.
    pub objective: f64,
    pub delta: f64,
    pub epsilon: f64,
    pub a: usize,
    pub b: usize,
    pub delta_bar: f64,
    /// Largest degree of feasibility over the whole run, MVA.
    pub worst_df: f64,
    /// Largest degree of feasibility in the last iteration, MVA.
    pub final_worst_df: f64,
    pub totals: SubTotals,
    pub feasibility: FeasibilityReport,
    pub elapsed_s: f64,
    pub buses: Vec<BusResult>,
}

impl SolveSummary {
    pub fn build(
        case: &Path,
        net: &Network,
        cfg: &AdmmConfig,
        rep: &SolveReport,
        elapsed_s: f64,
    ) -> Self {
        let kkt = kkt_delta_epsilon(&rep.local, &rep.z, &rep.v, cfg.rho);
        let pt = GlobalPoint::assemble(net, &rep.local, &rep.z, &rep.v);
        let y = build_admittance(net);
        let feasibility = evaluate_centralized_feasibility(net, &y, &pt);
        Self {
            case: case.display().to_string(),
            iterations: rep.iterations(),
            config: cfg.clone(),
            objective: objective_value(net, &pt.pg),
            delta: kkt.delta,
            epsilon: kkt.epsilon,
            a: kkt.a,
            b: kkt.b,
            delta_bar: kkt.delta_bar,
            worst_df: rep.totals.max_df,
            final_worst_df: rep.trace.last().map_or(0.0, |r| r.worst_df),
            totals: rep.totals,
            feasibility,
            elapsed_s,
            buses: bus_results(net, &pt.v_re, &pt.v_im, &pt.pg, &pt.qg),
        }
    }
}

/// Output of `dopf oracle --report-out`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub case: String,
    pub result: OracleResult,
    pub elapsed_s: f64,
    pub buses: Vec<BusResult>,
}

impl OracleReport {
    pub fn build(case: &Path, net: &Network, result: OracleResult, elapsed_s: f64) -> Self {
        let buses = bus_results(net, &result.v_re, &result.v_im, &result.pg, &result.qg);
        Self {
            case: case.display().to_string(),
            result,
            elapsed_s,
            buses,
        }
    }
}
