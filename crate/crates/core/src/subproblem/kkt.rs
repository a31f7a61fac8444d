//! KKT residuals of the original nonconvex local problem at a point
//! returned by the convex approximation, using its multipliers.

use super::builder::{alpha_rows, bounds, CircleKind, CutPools, FixedPart, SubDuals};
use super::linearize::{line_power_rows, power_injection_rows};
use super::vars::LocalVars;
use crate::network::LocalProblem;

#[derive(Debug, Clone, PartialEq)]
pub struct StationarityReport {
    /// `‖∇L(z, u)‖∞` with exact constraint gradients, objective units.
    pub stationarity: f64,
    /// Same, multiplied by the QP objective scale.
    pub scaled: f64,
    /// Largest residual among the nonlinear equalities.
    pub equality: f64,
    /// Multiplier of each circle after folding its cut multipliers, in
    /// pool order.
    pub circle_duals: Vec<f64>,
}

/// Fold the force `Σ κ_j n_j` of a circle's cuts onto the true gradient `g`.
fn fold(force: (f64, f64), g: (f64, f64)) -> f64 {
    let gg = g.0 * g.0 + g.1 * g.1;
    if gg == 0.0 {
        0.0
    } else {
        (force.0 * g.0 + force.1 * g.1) / gg
    }
}

pub fn true_stationarity(
    lp: &LocalProblem,
    fixed: &FixedPart,
    pools: &CutPools,
    z: &LocalVars,
    u: &SubDuals,
) -> StationarityReport {
    let x = &z.data;
    let mut grad: Vec<f64> = x
        .iter()
        .enumerate()
        .map(|(i, &v)| fixed.p_diag[i] * v + fixed.q[i])
        .collect();
    for (row, &nu) in alpha_rows(lp).iter().zip(&u.alpha) {
        for &(j, c) in &row.coeffs {
            grad[j] += nu * c;
        }
    }
    let mut equality = 0.0f64;
    let nonlinear = power_injection_rows(z.layout)
        .into_iter()
        .zip(&u.lambda)
        .chain(line_power_rows(z.layout).into_iter().zip(&u.mu));
    for (row, &nu) in nonlinear {
        equality = equality.max(row.residual(x).abs());
        for (j, c) in row.gradient(x) {
            grad[j] += nu * c;
        }
    }
    for (bd, &(lo, hi)) in bounds(lp).iter().zip(&u.beta) {
        grad[bd.var] += hi - lo;
    }
    let mut circle_duals = Vec::with_capacity(pools.circles.len());
    let (mut gi, mut vi) = (0, 0);
    for circle in &pools.circles {
        let kappa = if circle.kind == CircleKind::Voltage {
            vi += 1;
            &u.voltage[vi - 1]
        } else {
            gi += 1;
            &u.gamma[gi - 1]
        };
        let mut force = (0.0, 0.0);
        for (h, &k) in circle.cuts.iter().zip(kappa) {
            let (a, b, _) = h.as_leq();
            force.0 += k * a;
            force.1 += k * b;
        }
        let (px, py) = (x[circle.x], x[circle.y]);
        let mult = fold(force, (2.0 * px, 2.0 * py));
        grad[circle.x] += mult * 2.0 * px;
        grad[circle.y] += mult * 2.0 * py;
        circle_duals.push(mult);
    }
    let layout = z.layout;
    for (r, (h, &k)) in fixed.donut.iter().zip(&u.donut).enumerate() {
        let (ix, iy) = (layout.v_re(r), layout.v_im(r));
        let (a, b, _) = h.as_leq();
        let (px, py) = (x[ix], x[iy]);
        let mult = fold((k * a, k * b), (-2.0 * px, -2.0 * py));
        grad[ix] -= mult * 2.0 * px;
        grad[iy] -= mult * 2.0 * py;
    }
    let stationarity = grad.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    StationarityReport {
        stationarity,
        scaled: stationarity * fixed.scale,
        equality,
        circle_duals,
    }
}
