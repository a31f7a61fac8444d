use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use super::config::{AdmmConfig, StopRule};

pub const CSV_HEADER: &str =
    "iter,objective,delta,epsilon,worst_df,sub_eps_stops,sub_maxiter_stops,sub_infeasible,wall_ms";

/// Per-iteration summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub iter: usize,
    /// Generation cost at the subproblem points, $/h.
    pub objective: f64,
    pub delta: f64,
    pub epsilon: f64,
    /// Largest degree of feasibility over this round's subproblems, MVA.
    pub worst_df: f64,
    pub sub_eps_stops: usize,
    pub sub_maxiter_stops: usize,
    pub sub_infeasible: usize,
    pub wall_ms: f64,
    /// `Σ_k ‖v_k − Ē_k v‖²`, accumulated during the dual update.
    pub delta_bar: f64,
    /// `max_k ‖v_k − Ē_k v‖₂`.
    pub consensus_residual: f64,
    /// `‖Σ_k Ē_kᵀ y_k‖∞` after the dual update.
    pub dual_sum_inf: f64,
    pub qp_solves: usize,
}

impl TraceRecord {
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{}",
            self.iter,
            self.objective,
            self.delta,
            self.epsilon,
            self.worst_df,
            self.sub_eps_stops,
            self.sub_maxiter_stops,
            self.sub_infeasible,
            self.wall_ms
        )
    }
}

pub fn write_csv<W: Write>(out: &mut W, trace: &[TraceRecord]) -> io::Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for r in trace {
        writeln!(out, "{}", r.csv_row())?;
    }
    Ok(())
}

pub fn write_jsonl<W: Write>(out: &mut W, trace: &[TraceRecord]) -> io::Result<()> {
    for r in trace {
        serde_json::to_writer(&mut *out, r)?;
        writeln!(out)?;
    }
    Ok(())
}

/// Whether the run should end after the last recorded iteration.
pub fn check_stop(trace: &[TraceRecord], cfg: &AdmmConfig) -> bool {
    let Some(last) = trace.last() else {
        return false;
    };
    if last.iter >= cfg.max_admm_iters {
        return true;
    }
    match cfg.stop_rule {
        StopRule::FixedIters => false,
        StopRule::Consensus(theta) => last.consensus_residual < theta,
        StopRule::ObjectiveDecrement(theta) => match trace {
            [.., prev, last] => (last.objective - prev.objective).abs() < theta,
            _ => false,
        },
    }
}
