//! Consensus ADMM over per-bus agents.
//!
//! Each iteration every bus solves its own subproblem against the current
//! net voltages (in parallel), the coordinator recomputes the net
//! voltages from the copies, and every bus moves its consensus dual.

mod config;
mod net;
mod trace;

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::SolveError;
use crate::network::{build_admittance, local_problem, validate, LocalProblem, Network};
use crate::subproblem::{
    initialize_zhat, run_algorithm2_with, CutPools, LocalVars, ScaSettings, SubDuals, SubStatus,
    SubproblemResult,
};

pub use config::{AdmmConfig, NetUpdateMode, StopRule};
pub use net::{
    dual_sum, dual_update, dual_update_general, gossip_average, net_update_average, net_update_general,
    net_update_gossip, select_stacked, CopyMap,
};
pub use trace::{check_stop, write_csv, write_jsonl, TraceRecord, CSV_HEADER};

/// Net variables, consensus duals and the latest local copies.
#[derive(Debug, Clone, PartialEq)]
pub struct ConsensusState {
    /// `[v_re; v_im]`, length `2N`.
    pub v: Vec<f64>,
    /// Per bus, `[re; im]` over `N_k`.
    pub y: Vec<Vec<f64>>,
    pub copies: Vec<Vec<f64>>,
}

/// Running totals over every subproblem call of a run.
#[derive(Debug, Clone, Copy, PartialEq, Default, serde::Serialize, serde::Deserialize)]
pub struct SubTotals {
    pub calls: usize,
    pub eps_stops: usize,
    pub maxiter_stops: usize,
    pub infeasible: usize,
    pub qp_solves: usize,
    /// Largest degree of feasibility over the calls that returned a point.
    pub max_df: f64,
}

impl SubTotals {
    pub fn maxiter_fraction(&self) -> f64 {
        if self.calls == 0 {
            0.0
        } else {
            self.maxiter_stops as f64 / self.calls as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub z: Vec<LocalVars>,
    pub v: Vec<f64>,
    pub u: Vec<SubDuals>,
    pub y: Vec<Vec<f64>>,
    pub trace: Vec<TraceRecord>,
    pub totals: SubTotals,
    pub local: Vec<LocalProblem>,
}

impl SolveReport {
    pub fn iterations(&self) -> usize {
        self.trace.len()
    }

    pub fn state(&self) -> ConsensusState {
        ConsensusState {
            v: self.v.clone(),
            y: self.y.clone(),
            copies: self.z.iter().map(|z| z.v().to_vec()).collect(),
        }
    }
}

/// What an observer sees after each iteration.
pub struct IterationView<'a> {
    pub record: &'a TraceRecord,
    pub state: &'a ConsensusState,
    pub results: &'a [SubproblemResult],
    pub local: &'a [LocalProblem],
    pub z: &'a [LocalVars],
}

/// `a = Σ_k 2|N_k|` and `b = Σ_k len(z_k) + 2N`.
pub fn normalization(lps: &[LocalProblem]) -> (usize, usize) {
    let a = lps.iter().map(|lp| 2 * lp.size()).sum();
    let b = lps
        .iter()
        .map(|lp| crate::subproblem::Layout::new(lp.size()).len())
        .sum::<usize>()
        + 2 * lps.len();
    (a, b)
}

pub fn run_admm(net: &Network, cfg: &AdmmConfig) -> Result<SolveReport, SolveError> {
    run_admm_observed(net, cfg, &mut |_| {})
}

pub fn run_admm_observed(
    net: &Network,
    cfg: &AdmmConfig,
    observer: &mut dyn FnMut(&IterationView),
) -> Result<SolveReport, SolveError> {
    cfg.validate()?;
    if let Some(v) = validate(net).first() {
        return Err(SolveError::InvalidNetwork(v.to_string()));
    }
    let n = net.n_buses();
    let ymat = build_admittance(net);
    let lps: Vec<LocalProblem> = (0..n).map(|k| local_problem(net, &ymat, k)).collect();
    let map = CopyMap::new(net, &lps);
    let (a_len, b_len) = normalization(&lps);
    let settings = ScaSettings::new(cfg.rho, cfg.eps_sub, cfg.max_sub_iter);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    let mut v: Vec<f64> = (0..2 * n).map(|j| if j < n { 1.0 } else { 0.0 }).collect();
    let mut y: Vec<Vec<f64>> = lps.iter().map(|lp| vec![0.0; 2 * lp.size()]).collect();
    let mut z: Vec<LocalVars> = lps.iter().map(|lp| initialize_zhat(lp, &v)).collect();
    let mut u: Vec<SubDuals> = vec![SubDuals::default(); n];
    let mut pools: Vec<CutPools> = lps.iter().map(CutPools::new).collect();
    let mut trace: Vec<TraceRecord> = Vec::new();
    let mut totals = SubTotals::default();

    for iter in 1.. {
        let started = Instant::now();
        let results: Vec<SubproblemResult> = lps
            .par_iter()
            .zip(pools.par_iter_mut())
            .zip(y.par_iter())
            .map(|((lp, pool), yk)| {
                if cfg.persist_cuts {
                    run_algorithm2_with(lp, &v, yk, &settings, pool)
                } else {
                    run_algorithm2_with(lp, &v, yk, &settings, &mut CutPools::new(lp))
                }
            })
            .collect();

        let failed: Vec<bool> = results
            .iter()
            .map(|r| r.status == SubStatus::Infeasible)
            .collect();
        if failed.iter().all(|&f| f) {
            return Err(SolveError::AllSubproblemsFailed { iter });
        }
        let (mut eps, mut maxit, mut infeas, mut qps) = (0, 0, 0, 0);
        let mut worst_df = 0.0f64;
        for (k, r) in results.iter().enumerate() {
            qps += r.qp_solves;
            match r.status {
                SubStatus::ConvergedEps => eps += 1,
                SubStatus::StoppedMaxIter => maxit += 1,
                SubStatus::Infeasible => infeas += 1,
            }
            if !failed[k] {
                worst_df = worst_df.max(r.df);
                z[k] = r.z.clone();
                u[k] = r.u.clone();
            }
        }
        totals.calls += n;
        totals.eps_stops += eps;
        totals.maxiter_stops += maxit;
        totals.infeasible += infeas;
        totals.qp_solves += qps;
        totals.max_df = totals.max_df.max(worst_df);

        let copies: Vec<Vec<f64>> = z.iter().map(|zk| zk.v().to_vec()).collect();
        v = match cfg.net_update {
            NetUpdateMode::General => net_update_general(&map, &lps, &copies, &y, cfg.rho),
            NetUpdateMode::Average => net_update_average(&map, &lps, &copies),
            NetUpdateMode::Gossip(rounds) => {
                net_update_gossip(&map, &lps, &copies, &y, cfg.rho, rounds, &mut rng)
            }
        };

        let centered = cfg.net_update == NetUpdateMode::General && infeas == 0;
        let mut delta_bar = 0.0;
        let mut consensus = 0.0f64;
        for (k, lp) in lps.iter().enumerate() {
            let ev = select_stacked(lp, &v);
            let sq: f64 = copies[k].iter().zip(&ev).map(|(c, e)| (c - e) * (c - e)).sum();
            delta_bar += sq;
            consensus = consensus.max(sq.sqrt());
            if !failed[k] && !centered {
                dual_update(&mut y[k], &copies[k], &ev, cfg.rho);
            }
        }
        if centered {
            dual_update_general(&map, &lps, &mut y, &copies, &v, cfg.rho);
        }
        let dual_sum_inf = dual_sum(&map, &lps, &y)
            .iter()
            .fold(0.0f64, |m, v| m.max(v.abs()));
        let objective = z.iter().enumerate().map(|(k, zk)| net.cost_at(k, zk.pg())).sum();

        let record = TraceRecord {
            iter,
            objective,
            delta: delta_bar / a_len as f64,
            epsilon: cfg.rho * cfg.rho * delta_bar / b_len as f64,
            worst_df,
            sub_eps_stops: eps,
            sub_maxiter_stops: maxit,
            sub_infeasible: infeas,
            wall_ms: if cfg.timing {
                started.elapsed().as_secs_f64() * 1e3
            } else {
                0.0
            },
            delta_bar,
            consensus_residual: consensus,
            dual_sum_inf,
            qp_solves: qps,
        };
        trace.push(record);
        let state = ConsensusState {
            v: v.clone(),
            y: y.clone(),
            copies,
        };
        observer(&IterationView {
            record: trace.last().expect("just pushed"),
            state: &state,
            results: &results,
            local: &lps,
            z: &z,
        });
        if check_stop(&trace, cfg) {
            break;
        }
    }

    Ok(SolveReport {
        z,
        v,
        u,
        y,
        trace,
        totals,
        local: lps,
    })
}
