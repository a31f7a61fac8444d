//! Optimality and feasibility metrics for a candidate operating point.

use serde::{Deserialize, Serialize};

use crate::admm::select_stacked;
use crate::error::SolveError;
use crate::network::{AdmittanceMatrix, LocalProblem, Network};
use crate::subproblem::LocalVars;

/// Consensus residual summary: `δ = δ̄ / a`, `ε = ρ² δ̄ / b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KktReport {
    pub delta: f64,
    pub epsilon: f64,
    pub a: usize,
    pub b: usize,
    /// `Σ_k ‖v_k − Ē_k v‖²`.
    pub delta_bar: f64,
    /// `‖v_k − Ē_k v‖²` per bus.
    pub per_bus_delta: Vec<f64>,
}

/// Compute the residuals from the local points `z` (whose voltage block is
/// each bus's copy) and the net voltages `v`.
pub fn kkt_delta_epsilon(lps: &[LocalProblem], z: &[LocalVars], v: &[f64], rho: f64) -> KktReport {
    let mut per_bus_delta = Vec::with_capacity(lps.len());
    let mut a = 0;
    let mut b = v.len();
    for (lp, zk) in lps.iter().zip(z) {
        let ev = select_stacked(lp, v);
        let copy = zk.v();
        per_bus_delta.push(copy.iter().zip(&ev).map(|(c, e)| (c - e) * (c - e)).sum());
        a += copy.len();
        b += zk.data.len();
    }
    let delta_bar: f64 = per_bus_delta.iter().sum();
    KktReport {
        delta: if a == 0 { 0.0 } else { delta_bar / a as f64 },
        epsilon: rho * rho * delta_bar / b as f64,
        a,
        b,
        delta_bar,
        per_bus_delta,
    }
}

/// Flow quantities at one end of a line, seen from bus `from`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineEnd {
    pub line: usize,
    pub from: usize,
    pub to: usize,
    pub i_re: f64,
    pub i_im: f64,
    pub p: f64,
    pub q: f64,
}

/// Every variable of the centralized problem, per unit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlobalPoint {
    pub v_re: Vec<f64>,
    pub v_im: Vec<f64>,
    pub i_re: Vec<f64>,
    pub i_im: Vec<f64>,
    pub p: Vec<f64>,
    pub q: Vec<f64>,
    pub pg: Vec<f64>,
    pub qg: Vec<f64>,
    /// Two entries per line: `from → to`, then `to → from`.
    pub flows: Vec<LineEnd>,
}

impl GlobalPoint {
    /// Every quantity computed from the voltages; generation absorbs the
    /// injection so the power balance holds exactly.
    pub fn forward(net: &Network, y: &AdmittanceMatrix, v_re: &[f64], v_im: &[f64]) -> Self {
        let (i_re, i_im) = y.currents(v_re, v_im);
        let n = net.n_buses();
        let p: Vec<f64> = (0..n).map(|k| v_re[k] * i_re[k] + v_im[k] * i_im[k]).collect();
        let q: Vec<f64> = (0..n).map(|k| v_im[k] * i_re[k] - v_re[k] * i_im[k]).collect();
        let pg = (0..n).map(|k| p[k] + net.buses[k].pd).collect();
        let qg = (0..n).map(|k| q[k] + net.buses[k].qd).collect();
        let mut flows = Vec::with_capacity(2 * net.lines.len());
        for (idx, line) in net.lines.iter().enumerate() {
            for (l, s) in [(line.from, line.to), (line.to, line.from)] {
                let dv_re = v_re[l] - v_re[s];
                let dv_im = v_im[l] - v_im[s];
                let ir = line.y.re * dv_re - line.y.im * dv_im;
                let ii = line.y.im * dv_re + line.y.re * dv_im;
                flows.push(LineEnd {
                    line: idx,
                    from: l,
                    to: s,
                    i_re: ir,
                    i_im: ii,
                    p: v_re[l] * ir + v_im[l] * ii,
                    q: v_im[l] * ir - v_re[l] * ii,
                });
            }
        }
        Self {
            v_re: v_re.to_vec(),
            v_im: v_im.to_vec(),
            i_re,
            i_im,
            p,
            q,
            pg,
            qg,
            flows,
        }
    }

    /// Voltages from the net variables `v`, everything else from each bus's
    /// own local point. Line-end quantities come from the bus at that end.
    pub fn assemble(net: &Network, lps: &[LocalProblem], z: &[LocalVars], v: &[f64]) -> Self {
        let n = net.n_buses();
        let mut flows = Vec::with_capacity(2 * net.lines.len());
        for (idx, line) in net.lines.iter().enumerate() {
            for (l, s) in [(line.from, line.to), (line.to, line.from)] {
                let r = lps[l]
                    .lines
                    .iter()
                    .position(|d| d.neighbor == s)
                    .expect("line endpoints are neighbors");
                let zl = &z[l];
                flows.push(LineEnd {
                    line: idx,
                    from: l,
                    to: s,
                    i_re: zl.li_re()[r],
                    i_im: zl.li_im()[r],
                    p: zl.lp()[r],
                    q: zl.lq()[r],
                });
            }
        }
        Self {
            v_re: v[..n].to_vec(),
            v_im: v[n..].to_vec(),
            i_re: z.iter().map(LocalVars::i_re).collect(),
            i_im: z.iter().map(LocalVars::i_im).collect(),
            p: z.iter().map(LocalVars::p).collect(),
            q: z.iter().map(LocalVars::q).collect(),
            pg: z.iter().map(LocalVars::pg).collect(),
            qg: z.iter().map(LocalVars::qg).collect(),
            flows,
        }
    }
}

/// Worst violation per constraint family. Equations report the largest
/// absolute residual, inequalities the largest positive excess.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct FeasibilityReport {
    pub current_injection: f64,
    pub power_balance: f64,
    pub line_current: f64,
    pub power_injection: f64,
    pub line_power: f64,
    pub pg_bounds: f64,
    pub qg_bounds: f64,
    /// In squared units, `|i|² − i_max²`.
    pub current_limit: f64,
    /// In squared units, `p² + q² − s_max²`.
    pub apparent_power_limit: f64,
    pub real_power_limit: f64,
    /// In squared units, `v_min² − |v|²` or `|v|² − v_max²`.
    pub voltage: f64,
}

impl FeasibilityReport {
    /// Largest residual among the physics equations.
    pub fn physics(&self) -> f64 {
        [
            self.current_injection,
            self.power_balance,
            self.line_current,
            self.power_injection,
            self.line_power,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }

    /// Largest violation among the operating limits.
    pub fn limits(&self) -> f64 {
        [
            self.pg_bounds,
            self.qg_bounds,
            self.current_limit,
            self.apparent_power_limit,
            self.real_power_limit,
            self.voltage,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }

    pub fn max(&self) -> f64 {
        self.physics().max(self.limits())
    }
}

fn above(x: f64, hi: f64) -> f64 {
    (x - hi).max(0.0)
}

fn outside(x: f64, lo: f64, hi: f64) -> f64 {
    (lo - x).max(x - hi).max(0.0)
}

pub fn evaluate_centralized_feasibility(
    net: &Network,
    y: &AdmittanceMatrix,
    pt: &GlobalPoint,
) -> FeasibilityReport {
    let mut rep = FeasibilityReport::default();
    let upd = |slot: &mut f64, v: f64| *slot = slot.max(v);

    let (yi_re, yi_im) = y.currents(&pt.v_re, &pt.v_im);
    for (k, bus) in net.buses.iter().enumerate() {
        let (vr, vi) = (pt.v_re[k], pt.v_im[k]);
        upd(&mut rep.current_injection, (pt.i_re[k] - yi_re[k]).abs());
        upd(&mut rep.current_injection, (pt.i_im[k] - yi_im[k]).abs());
        upd(&mut rep.power_balance, (pt.p[k] - (pt.pg[k] - bus.pd)).abs());
        upd(&mut rep.power_balance, (pt.q[k] - (pt.qg[k] - bus.qd)).abs());
        let p = vr * pt.i_re[k] + vi * pt.i_im[k];
        let q = vi * pt.i_re[k] - vr * pt.i_im[k];
        upd(&mut rep.power_injection, (pt.p[k] - p).abs());
        upd(&mut rep.power_injection, (pt.q[k] - q).abs());
        upd(&mut rep.pg_bounds, outside(pt.pg[k], bus.pg_min, bus.pg_max));
        upd(&mut rep.qg_bounds, outside(pt.qg[k], bus.qg_min, bus.qg_max));
        let m2 = vr * vr + vi * vi;
        upd(&mut rep.voltage, outside(m2, bus.v_min * bus.v_min, bus.v_max * bus.v_max));
    }

    for f in &pt.flows {
        let line = &net.lines[f.line];
        let (l, s) = (f.from, f.to);
        let dv_re = pt.v_re[l] - pt.v_re[s];
        let dv_im = pt.v_im[l] - pt.v_im[s];
        let ir = line.y.re * dv_re - line.y.im * dv_im;
        let ii = line.y.im * dv_re + line.y.re * dv_im;
        upd(&mut rep.line_current, (f.i_re - ir).abs());
        upd(&mut rep.line_current, (f.i_im - ii).abs());
        let (vr, vi) = (pt.v_re[l], pt.v_im[l]);
        upd(&mut rep.line_power, (f.p - (vr * f.i_re + vi * f.i_im)).abs());
        upd(&mut rep.line_power, (f.q - (vi * f.i_re - vr * f.i_im)).abs());
        if let Some(m) = line.i_max {
            upd(&mut rep.current_limit, above(f.i_re * f.i_re + f.i_im * f.i_im, m * m));
        }
        if let Some(m) = line.s_max {
            upd(&mut rep.apparent_power_limit, above(f.p * f.p + f.q * f.q, m * m));
        }
        if let Some(m) = line.p_max {
            upd(&mut rep.real_power_limit, above(f.p.abs(), m));
        }
    }
    rep
}

/// Total generation cost in $/h for per-unit generation `pg`.
pub fn objective_value(net: &Network, pg: &[f64]) -> f64 {
    pg.iter().enumerate().map(|(k, &p)| net.cost_at(k, p)).sum()
}

/// `|f − f_ref| / f_ref`.
pub fn relative_objective(f: f64, f_ref: f64) -> Result<f64, SolveError> {
    if !(f_ref > 0.0) {
        return Err(SolveError::NonPositiveReference(f_ref));
    }
    Ok((f - f_ref).abs() / f_ref)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::tests::two_bus;
    use crate::network::{build_admittance, local_problem};
    use crate::subproblem::initialize_zhat;

    #[test]
    fn ratio_identity() {
        let net = two_bus();
        let y = build_admittance(&net);
        let lps: Vec<_> = (0..2).map(|k| local_problem(&net, &y, k)).collect();
        let v = vec![1.0, 1.0, 0.0, 0.0];
        let mut z: Vec<_> = lps.iter().map(|lp| initialize_zhat(lp, &v)).collect();
        let idx = z[1].layout.v_re(1);
        z[1].set(idx, 1.01);
        let rho = 10.0;
        let rep = kkt_delta_epsilon(&lps, &z, &v, rho);
        assert!((rep.delta_bar - 1e-4).abs() < 1e-15);
        assert_eq!(rep.per_bus_delta[0], 0.0);
        let ratio = rep.epsilon / rep.delta;
        let expect = rho * rho * rep.a as f64 / rep.b as f64;
        assert!((ratio - expect).abs() <= 1e-12 * expect);
    }

    #[test]
    fn perfect_consensus_is_zero() {
        let net = two_bus();
        let y = build_admittance(&net);
        let lps: Vec<_> = (0..2).map(|k| local_problem(&net, &y, k)).collect();
        let v = vec![1.02, 0.98, 0.0, -0.03];
        let z: Vec<_> = lps.iter().map(|lp| initialize_zhat(lp, &v)).collect();
        let rep = kkt_delta_epsilon(&lps, &z, &v, 1e6);
        assert_eq!(rep.delta, 0.0);
        assert_eq!(rep.epsilon, 0.0);
        assert_eq!(rep.a, 8);
    }

    #[test]
    fn voltage_excess_is_squared() {
        let mut net = two_bus();
        net.buses[0].v_max = 1.1;
        let y = build_admittance(&net);
        let pt = GlobalPoint::forward(&net, &y, &[1.2, 1.0], &[0.0, 0.0]);
        let rep = evaluate_centralized_feasibility(&net, &y, &pt);
        assert!((rep.voltage - 0.23).abs() < 1e-12);
        assert!(rep.physics() <= 1e-12);
    }

    #[test]
    fn objective_examples() {
        let mut net = two_bus();
        for b in &mut net.buses {
            b.cost = None;
        }
        assert_eq!(objective_value(&net, &[0.3, 0.4]), 0.0);
        net.base_mva = 1.0;
        net.buses[0].cost = Some(crate::network::CostPoly {
            c2: 1.0,
            c1: 0.0,
            c0: 0.0,
        });
        assert_eq!(objective_value(&net, &[3.0, 0.0]), 9.0);
        assert!(relative_objective(1.0, 0.0).is_err());
        assert_eq!(relative_objective(101.0, 100.0).unwrap(), 0.01);
    }
}
