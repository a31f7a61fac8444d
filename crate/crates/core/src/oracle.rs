//! Exhaustive grid search over bus voltages for networks of at most three
//! buses.
//!
//! The problem only depends on voltage differences and magnitudes, so bus 0
//! is pinned to the positive real axis and only its magnitude is gridded.
//! Every other bus gets a `(v_re, v_im)` grid over `[-v_max, v_max]²`.
//! Each grid point is completed by computing currents, injections and flows
//! from the voltages; points that break any limit are discarded.

use serde::{Deserialize, Serialize};

use crate::diagnostics::{objective_value, GlobalPoint};
use crate::error::SolveError;
use crate::network::{build_admittance, validate, Network};

pub const MAX_ORACLE_BUSES: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleOptions {
    /// Grid points per axis; `None` picks 400 for up to two buses and 40
    /// for three.
    pub points_per_axis: Option<usize>,
    /// Slack allowed on every inequality, in its own units.
    pub bound_tol: f64,
}

impl Default for OracleOptions {
    fn default() -> Self {
        Self {
            points_per_axis: None,
            bound_tol: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleResult {
    /// $/h.
    pub objective: f64,
    pub v_re: Vec<f64>,
    pub v_im: Vec<f64>,
    pub pg: Vec<f64>,
    pub qg: Vec<f64>,
    pub points_per_axis: usize,
    /// Grid spacing per axis, in axis order (bus 0 magnitude first).
    pub spacing: Vec<f64>,
    pub evaluated: u64,
    pub feasible: u64,
}

fn axis(lo: f64, hi: f64, m: usize) -> Vec<f64> {
    if m == 1 || lo == hi {
        return vec![0.5 * (lo + hi)];
    }
    (0..m)
        .map(|i| lo + (hi - lo) * i as f64 / (m - 1) as f64)
        .collect()
}

fn within(x: f64, lo: f64, hi: f64, tol: f64) -> bool {
    x >= lo - tol && x <= hi + tol
}

pub fn grid_oracle(net: &Network, opts: &OracleOptions) -> Result<OracleResult, SolveError> {
    let n = net.n_buses();
    if n > MAX_ORACLE_BUSES {
        return Err(SolveError::OracleTooLarge(n));
    }
    if let Some(v) = validate(net).first() {
        return Err(SolveError::InvalidNetwork(v.to_string()));
    }
    let m = opts
        .points_per_axis
        .unwrap_or(if n <= 2 { 400 } else { 40 })
        .max(1);
    let y = build_admittance(net);
    let tol = opts.bound_tol;

    let mut axes = vec![axis(net.buses[0].v_min, net.buses[0].v_max, m)];
    for bus in &net.buses[1..] {
        axes.push(axis(-bus.v_max, bus.v_max, m));
        axes.push(axis(-bus.v_max, bus.v_max, m));
    }
    let spacing = axes
        .iter()
        .map(|a| if a.len() > 1 { a[1] - a[0] } else { 0.0 })
        .collect();

    let mut best: Option<(f64, Vec<f64>, Vec<f64>)> = None;
    let mut evaluated = 0u64;
    let mut feasible = 0u64;
    let mut idx = vec![0usize; axes.len()];
    let mut v_re = vec![0.0; n];
    let mut v_im = vec![0.0; n];
    'grid: loop {
        v_re[0] = axes[0][idx[0]];
        v_im[0] = 0.0;
        for k in 1..n {
            v_re[k] = axes[2 * k - 1][idx[2 * k - 1]];
            v_im[k] = axes[2 * k][idx[2 * k]];
        }
        let in_annulus = net.buses.iter().enumerate().all(|(k, b)| {
            let m2 = v_re[k] * v_re[k] + v_im[k] * v_im[k];
            within(m2, b.v_min * b.v_min, b.v_max * b.v_max, tol)
        });
        if in_annulus {
            evaluated += 1;
            if let Some(f) = evaluate(net, &y, &v_re, &v_im, tol) {
                feasible += 1;
                if best.as_ref().map_or(true, |(bf, _, _)| f < *bf) {
                    best = Some((f, v_re.clone(), v_im.clone()));
                }
            }
        }
        // odometer over every axis
        for d in (0..axes.len()).rev() {
            idx[d] += 1;
            if idx[d] < axes[d].len() {
                continue 'grid;
            }
            idx[d] = 0;
        }
        break;
    }

    let (objective, v_re, v_im) = best.ok_or(SolveError::OracleNoFeasiblePoint(m))?;
    let pt = GlobalPoint::forward(net, &y, &v_re, &v_im);
    Ok(OracleResult {
        objective,
        v_re,
        v_im,
        pg: pt.pg,
        qg: pt.qg,
        points_per_axis: m,
        spacing,
        evaluated,
        feasible,
    })
}

/// Objective at the completed point, or `None` if a limit is broken.
fn evaluate(
    net: &Network,
    y: &crate::network::AdmittanceMatrix,
    v_re: &[f64],
    v_im: &[f64],
    tol: f64,
) -> Option<f64> {
    let pt = GlobalPoint::forward(net, y, v_re, v_im);
    for (k, b) in net.buses.iter().enumerate() {
        if !within(pt.pg[k], b.pg_min, b.pg_max, tol) || !within(pt.qg[k], b.qg_min, b.qg_max, tol)
        {
            return None;
        }
    }
    for f in &pt.flows {
        let line = &net.lines[f.line];
        if let Some(m) = line.i_max {
            if f.i_re * f.i_re + f.i_im * f.i_im > m * m + tol {
                return None;
            }
        }
        if let Some(m) = line.s_max {
            if f.p * f.p + f.q * f.q > m * m + tol {
                return None;
            }
        }
        if let Some(m) = line.p_max {
            if f.p.abs() > m + tol {
                return None;
            }
        }
    }
    Some(objective_value(net, &pt.pg))
}
