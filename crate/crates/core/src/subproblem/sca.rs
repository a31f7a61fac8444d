//! Sequential convex approximation of one bus's subproblem.

use serde::{Deserialize, Serialize};

use super::builder::{CutPools, FixedPart, SubDuals};
use super::inner::{solve_convex_inner, InnerStatus};
use super::vars::{Layout, LocalVars};
use crate::network::LocalProblem;
use crate::qp::QpOptions;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SubStatus {
    /// Voltage decrement fell below `eps_sub`.
    ConvergedEps,
    /// Refinement budget exhausted.
    StoppedMaxIter,
    /// The inner convex problem failed; `z` is the last linearization point.
    Infeasible,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaSettings {
    pub rho: f64,
    pub eps_sub: f64,
    pub max_iter: usize,
    pub qp: QpOptions,
}

impl ScaSettings {
    pub fn new(rho: f64, eps_sub: f64, max_iter: usize) -> Self {
        Self {
            rho,
            eps_sub,
            max_iter,
            qp: QpOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubproblemResult {
    pub z: LocalVars,
    pub u: SubDuals,
    pub status: SubStatus,
    /// Why the inner problem failed, when it did.
    pub inner_failure: Option<InnerStatus>,
    pub inner_iterations: usize,
    pub qp_solves: usize,
    pub cuts_added: usize,
    /// Last voltage decrement `‖v^(m) − v̂‖₂`.
    pub decrement: f64,
    /// Degree of feasibility of the returned point, MVA.
    pub df: f64,
    /// Local objective (cost plus augmented consensus terms) at `z`.
    pub objective: f64,
}

/// Linearization point built from the net voltages alone: every
/// quantity is computed forward from `E_k v`.
pub fn initialize_zhat(lp: &LocalProblem, v_net: &[f64]) -> LocalVars {
    let (w_re, w_im) = lp.select(v_net);
    forward_from_voltages(lp, &w_re, &w_im)
}

pub fn forward_from_voltages(lp: &LocalProblem, v_re: &[f64], v_im: &[f64]) -> LocalVars {
    let n = lp.size();
    let layout = Layout::new(n);
    let mut z = LocalVars::zeros(n);
    for r in 0..n {
        z.set(layout.v_re(r), v_re[r]);
        z.set(layout.v_im(r), v_im[r]);
    }
    let (i_re, i_im) = bus_current(lp, v_re, v_im);
    z.set(Layout::I_RE, i_re);
    z.set(Layout::I_IM, i_im);
    let (p, q) = (v_re[0] * i_re + v_im[0] * i_im, v_im[0] * i_re - v_re[0] * i_im);
    z.set(Layout::P, p);
    z.set(Layout::Q, q);
    z.set(Layout::PG, p + lp.pd);
    z.set(Layout::QG, q + lp.qd);
    for r in 0..layout.lines() {
        let (mut lr, mut li) = (0.0, 0.0);
        for s in 0..n {
            let (c, d) = (lp.c[(r, s)], lp.d[(r, s)]);
            lr += c * v_re[s] - d * v_im[s];
            li += d * v_re[s] + c * v_im[s];
        }
        z.set(layout.li_re(r), lr);
        z.set(layout.li_im(r), li);
        z.set(layout.lp(r), v_re[0] * lr + v_im[0] * li);
        z.set(layout.lq(r), v_im[0] * lr - v_re[0] * li);
    }
    z
}

fn bus_current(lp: &LocalProblem, v_re: &[f64], v_im: &[f64]) -> (f64, f64) {
    let mut i_re = 0.0;
    let mut i_im = 0.0;
    for r in 0..lp.size() {
        i_re += lp.g[r] * v_re[r] - lp.b[r] * v_im[r];
        i_im += lp.b[r] * v_re[r] + lp.g[r] * v_im[r];
    }
    (i_re, i_im)
}

/// Power injection implied by the voltages held in `z` (p.u.).
pub fn injection_from_voltages(lp: &LocalProblem, z: &LocalVars) -> (f64, f64) {
    let (v_re, v_im) = (z.v_re(), z.v_im());
    let (i_re, i_im) = bus_current(lp, v_re, v_im);
    (
        v_re[0] * i_re + v_im[0] * i_im,
        v_im[0] * i_re - v_re[0] * i_im,
    )
}

/// Distance from the injection implied by `z`'s voltages to the feasible
/// injection box, in MVA.
pub fn degree_of_feasibility(lp: &LocalProblem, z: &LocalVars) -> f64 {
    let (p, q) = injection_from_voltages(lp, z);
    let ((plo, phi), (qlo, qhi)) = lp.injection_box();
    let dp = p - p.clamp(plo, phi);
    let dq = q - q.clamp(qlo, qhi);
    dp.hypot(dq) * lp.base_mva
}

/// Solve the local subproblem at net voltages `v_net` and consensus dual
/// `y_k`, with fresh octagons.
pub fn run_algorithm2(
    lp: &LocalProblem,
    v_net: &[f64],
    y_k: &[f64],
    rho: f64,
    eps_sub: f64,
    max_iter: usize,
) -> SubproblemResult {
    let mut pools = CutPools::new(lp);
    run_algorithm2_with(lp, v_net, y_k, &ScaSettings::new(rho, eps_sub, max_iter), &mut pools)
}

/// As [`run_algorithm2`], reusing (and extending) the caller's cut pools.
pub fn run_algorithm2_with(
    lp: &LocalProblem,
    v_net: &[f64],
    y_k: &[f64],
    cfg: &ScaSettings,
    pools: &mut CutPools,
) -> SubproblemResult {
    assert!(cfg.eps_sub > 0.0 && cfg.max_iter >= 1);
    let (w_re, w_im) = lp.select(v_net);
    let w: Vec<f64> = w_re.iter().chain(&w_im).copied().collect();
    let fixed = FixedPart::new(lp, &w, y_k, cfg.rho);
    let mut zhat = initialize_zhat(lp, v_net);
    let mut u = SubDuals::default();
    let mut qp_solves = 0;
    let mut cuts_added = 0;
    let mut m = 0;
    loop {
        m += 1;
        let out = solve_convex_inner(&fixed, pools, &zhat, &cfg.qp);
        qp_solves += out.qp_solves;
        cuts_added += out.cuts_added;
        if out.status != InnerStatus::Solved {
            return SubproblemResult {
                df: degree_of_feasibility(lp, &zhat),
                objective: fixed.objective(&zhat.data),
                z: zhat,
                u,
                status: SubStatus::Infeasible,
                inner_failure: Some(out.status),
                inner_iterations: m,
                qp_solves,
                cuts_added,
                decrement: f64::NAN,
            };
        }
        let decrement = out
            .z
            .v()
            .iter()
            .zip(zhat.v())
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        zhat = out.z;
        u = out.duals;
        let status = if decrement < cfg.eps_sub {
            Some(SubStatus::ConvergedEps)
        } else if m >= cfg.max_iter {
            Some(SubStatus::StoppedMaxIter)
        } else {
            None
        };
        if let Some(status) = status {
            return SubproblemResult {
                df: degree_of_feasibility(lp, &zhat),
                objective: fixed.objective(&zhat.data),
                z: zhat,
                u,
                status,
                inner_failure: None,
                inner_iterations: m,
                qp_solves,
                cuts_added,
                decrement,
            };
        }
    }
}
