//! Assembly of the convex inner problem into a dense QP.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::cuts::{donut_halfspace, initial_octagon, Halfspace};
use super::linearize::{linearize_line_power, linearize_power_injection, AffineRow};
use super::vars::{Layout, LocalVars};
use crate::network::LocalProblem;
use crate::qp::QpProblem;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CircleKind {
    Voltage,
    Current,
    Power,
}

/// A disk `x² + y² ≤ radius²` over two local variables, with its current
/// polyhedral outer approximation.
#[derive(Debug, Clone, PartialEq)]
pub struct Circle {
    pub kind: CircleKind,
    /// Voltage slot or line index within the bus's neighbor order.
    pub slot: usize,
    pub x: usize,
    pub y: usize,
    pub radius: f64,
    pub cuts: Vec<Halfspace>,
}

impl Circle {
    pub fn excess(&self, z: &[f64]) -> f64 {
        let (x, y) = (z[self.x], z[self.y]);
        x * x + y * y - self.radius * self.radius
    }
}

/// Outer approximations of every convex circle of one bus, seeded with
/// octagons. `γ` circles come first, then the voltage caps.
#[derive(Debug, Clone, PartialEq)]
pub struct CutPools {
    pub circles: Vec<Circle>,
}

impl CutPools {
    pub fn new(lp: &LocalProblem) -> Self {
        let layout = Layout::new(lp.size());
        let mut circles = Vec::new();
        let mut add = |kind, slot, x, y, radius: f64| {
            circles.push(Circle {
                kind,
                slot,
                x,
                y,
                radius,
                cuts: initial_octagon(radius).expect("limits validated positive"),
            })
        };
        for (r, line) in lp.lines.iter().enumerate() {
            if let Some(i_max) = line.i_max {
                add(CircleKind::Current, r, layout.li_re(r), layout.li_im(r), i_max);
            }
        }
        for (r, line) in lp.lines.iter().enumerate() {
            if let Some(s_max) = line.s_max {
                add(CircleKind::Power, r, layout.lp(r), layout.lq(r), s_max);
            }
        }
        for r in 0..lp.size() {
            add(CircleKind::Voltage, r, layout.v_re(r), layout.v_im(r), lp.v_max[r]);
        }
        Self { circles }
    }

    pub fn cut_count(&self) -> usize {
        self.circles.iter().map(|c| c.cuts.len()).sum()
    }
}

/// Simple bound `lo ≤ z[var] ≤ hi`; an equality when `lo == hi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bound {
    pub var: usize,
    pub lo: f64,
    pub hi: f64,
}

impl Bound {
    pub fn is_fixed(&self) -> bool {
        self.lo == self.hi
    }
}

/// Duals of the inner problem in original (unscaled) objective units,
/// grouped by constraint block.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SubDuals {
    pub alpha: Vec<f64>,
    pub lambda: Vec<f64>,
    pub mu: Vec<f64>,
    /// `(lower, upper)` multiplier per bound, both `≥ 0`.
    pub beta: Vec<(f64, f64)>,
    /// Per γ circle, one multiplier per cut.
    pub gamma: Vec<Vec<f64>>,
    pub donut: Vec<f64>,
    /// Per voltage cap, one multiplier per cut.
    pub voltage: Vec<Vec<f64>>,
}

impl SubDuals {
    /// Blocks concatenated in order α, λ̂, μ̂, β, γ̌, donut, voltage cuts.
    pub fn flatten(&self) -> Vec<f64> {
        let mut u = Vec::new();
        u.extend(&self.alpha);
        u.extend(&self.lambda);
        u.extend(&self.mu);
        u.extend(self.beta.iter().flat_map(|&(l, h)| [l, h]));
        u.extend(self.gamma.iter().flatten());
        u.extend(&self.donut);
        u.extend(self.voltage.iter().flatten());
        u
    }
}

/// Linear constraints of the local problem that never change during one
/// call: current relations, power balance, bounds and donut cuts.
#[derive(Debug, Clone, PartialEq)]
pub struct FixedPart {
    pub layout: Layout,
    pub alpha: Vec<AffineRow>,
    pub bounds: Vec<Bound>,
    pub donut: Vec<Halfspace>,
    /// Diagonal of the (unscaled) quadratic term.
    pub p_diag: Vec<f64>,
    pub q: Vec<f64>,
    pub constant: f64,
    /// Objective multiplier applied before handing the QP to the solver.
    pub scale: f64,
}

/// Affine rows of the current relations and the power balance.
pub fn alpha_rows(lp: &LocalProblem) -> Vec<AffineRow> {
    let l = Layout::new(lp.size());
    let n = l.n;
    let mut rows = Vec::with_capacity(4 + 2 * l.lines());
    // i = gᵀv_re − bᵀv_im + j(bᵀv_re + gᵀv_im)
    let mut re = vec![(Layout::I_RE, 1.0)];
    let mut im = vec![(Layout::I_IM, 1.0)];
    for r in 0..n {
        re.push((l.v_re(r), -lp.g[r]));
        re.push((l.v_im(r), lp.b[r]));
        im.push((l.v_re(r), -lp.b[r]));
        im.push((l.v_im(r), -lp.g[r]));
    }
    rows.push(AffineRow { coeffs: re, rhs: 0.0 });
    rows.push(AffineRow { coeffs: im, rhs: 0.0 });
    // p = pg − pd, q = qg − qd
    rows.push(AffineRow {
        coeffs: vec![(Layout::P, 1.0), (Layout::PG, -1.0)],
        rhs: -lp.pd,
    });
    rows.push(AffineRow {
        coeffs: vec![(Layout::Q, 1.0), (Layout::QG, -1.0)],
        rhs: -lp.qd,
    });
    // line currents: li_re = C v_re − D v_im, li_im = D v_re + C v_im
    for r in 0..l.lines() {
        let mut re = vec![(l.li_re(r), 1.0)];
        let mut im = vec![(l.li_im(r), 1.0)];
        for s in 0..n {
            let (c, d) = (lp.c[(r, s)], lp.d[(r, s)]);
            if c != 0.0 || d != 0.0 {
                re.push((l.v_re(s), -c));
                re.push((l.v_im(s), d));
                im.push((l.v_re(s), -d));
                im.push((l.v_im(s), -c));
            }
        }
        rows.push(AffineRow { coeffs: re, rhs: 0.0 });
        rows.push(AffineRow { coeffs: im, rhs: 0.0 });
    }
    rows
}

pub fn bounds(lp: &LocalProblem) -> Vec<Bound> {
    let l = Layout::new(lp.size());
    let mut out = vec![
        Bound {
            var: Layout::PG,
            lo: lp.pg_min,
            hi: lp.pg_max,
        },
        Bound {
            var: Layout::QG,
            lo: lp.qg_min,
            hi: lp.qg_max,
        },
    ];
    for (r, line) in lp.lines.iter().enumerate() {
        if let Some(p_max) = line.p_max {
            out.push(Bound {
                var: l.lp(r),
                lo: -p_max,
                hi: p_max,
            });
        }
    }
    out
}

/// Donut cut for each voltage slot at the radial projection of the copy
/// `w_r`, falling back to the positive real axis at the origin.
pub fn donut_cuts(lp: &LocalProblem, w_re: &[f64], w_im: &[f64]) -> Vec<Halfspace> {
    (0..lp.size())
        .map(|r| {
            let point = if (w_re[r], w_im[r]) == (0.0, 0.0) {
                (1.0, 0.0)
            } else {
                (w_re[r], w_im[r])
            };
            donut_halfspace(point, lp.v_min[r]).expect("v_min validated positive")
        })
        .collect()
}

impl FixedPart {
    /// `w` is `E_k v` stacked as `[re; im]`, `y` the consensus dual.
    pub fn new(lp: &LocalProblem, w: &[f64], y: &[f64], rho: f64) -> Self {
        let layout = Layout::new(lp.size());
        let n = layout.n;
        let nz = layout.len();
        let mut p_diag = vec![0.0; nz];
        let mut q = vec![0.0; nz];
        let mut constant = 0.0;
        if let Some(c) = lp.cost {
            let base = lp.base_mva;
            p_diag[Layout::PG] = 2.0 * c.c2 * base * base;
            q[Layout::PG] = c.c1 * base;
            constant += c.c0;
        }
        for j in 0..2 * n {
            let idx = layout.v_stacked(j);
            p_diag[idx] = rho;
            q[idx] = y[j] - rho * w[j];
            constant += -y[j] * w[j] + 0.5 * rho * w[j] * w[j];
        }
        let pmax = p_diag.iter().fold(1.0f64, |m, &v| m.max(v));
        Self {
            layout,
            alpha: alpha_rows(lp),
            bounds: bounds(lp),
            donut: donut_cuts(lp, &w[..n], &w[n..]),
            p_diag,
            q,
            constant,
            scale: 1.0 / pmax,
        }
    }

    /// Unscaled objective value.
    pub fn objective(&self, z: &[f64]) -> f64 {
        self.constant
            + z.iter()
                .enumerate()
                .map(|(i, &v)| 0.5 * self.p_diag[i] * v * v + self.q[i] * v)
                .sum::<f64>()
    }
}

/// Row bookkeeping so QP multipliers can be routed back into [`SubDuals`].
#[derive(Debug, Clone)]
pub struct RowMap {
    n_alpha: usize,
    n_lambda: usize,
    n_mu: usize,
    /// Equality row index of each fixed bound, in bound order.
    fixed: Vec<Option<usize>>,
    /// Inequality rows `(lower, upper)` of each free bound.
    free: Vec<Option<(usize, usize)>>,
    circle_rows: Vec<(usize, usize)>,
    donut_start: usize,
}

/// Build the QP at linearization point `zhat` with the current cuts.
pub fn assemble(
    fixed: &FixedPart,
    pools: &CutPools,
    zhat: &LocalVars,
) -> (QpProblem, RowMap) {
    let layout = fixed.layout;
    let nz = layout.len();
    let lam = linearize_power_injection(zhat);
    let mu = linearize_line_power(zhat);

    let mut eq: Vec<AffineRow> = Vec::new();
    eq.extend(fixed.alpha.iter().cloned());
    eq.extend(lam.iter().cloned());
    eq.extend(mu.iter().cloned());
    let mut fixed_rows = Vec::with_capacity(fixed.bounds.len());
    for bd in &fixed.bounds {
        if bd.is_fixed() {
            fixed_rows.push(Some(eq.len()));
            eq.push(AffineRow {
                coeffs: vec![(bd.var, 1.0)],
                rhs: bd.lo,
            });
        } else {
            fixed_rows.push(None);
        }
    }

    // inequality rows as (coeffs, rhs) in ≤ form
    let mut ineq: Vec<(Vec<(usize, f64)>, f64)> = Vec::new();
    let mut free_rows = Vec::with_capacity(fixed.bounds.len());
    for bd in &fixed.bounds {
        if bd.is_fixed() {
            free_rows.push(None);
        } else {
            let lo = ineq.len();
            ineq.push((vec![(bd.var, -1.0)], -bd.lo));
            ineq.push((vec![(bd.var, 1.0)], bd.hi));
            free_rows.push(Some((lo, lo + 1)));
        }
    }
    let mut circle_rows = Vec::with_capacity(pools.circles.len());
    let push_cut = |ineq: &mut Vec<_>, h: &Halfspace, x: usize, y: usize| {
        let (a, b, c) = h.as_leq();
        ineq.push((vec![(x, a), (y, b)], c));
    };
    let mut donut_start = 0;
    let n_gamma = pools
        .circles
        .iter()
        .take_while(|c| c.kind != CircleKind::Voltage)
        .count();
    for (ci, circle) in pools.circles.iter().enumerate() {
        if ci == n_gamma {
            donut_start = ineq.len();
            for (r, h) in fixed.donut.iter().enumerate() {
                push_cut(&mut ineq, h, layout.v_re(r), layout.v_im(r));
            }
        }
        let start = ineq.len();
        for h in &circle.cuts {
            push_cut(&mut ineq, h, circle.x, circle.y);
        }
        circle_rows.push((start, ineq.len()));
    }

    let s = fixed.scale;
    let p = DMatrix::from_diagonal(&DVector::from_iterator(
        nz,
        fixed.p_diag.iter().map(|v| v * s),
    ));
    let q = DVector::from_iterator(nz, fixed.q.iter().map(|v| v * s));
    let mut a = DMatrix::zeros(eq.len(), nz);
    let mut b = DVector::zeros(eq.len());
    for (i, row) in eq.iter().enumerate() {
        for &(j, c) in &row.coeffs {
            a[(i, j)] += c;
        }
        b[i] = row.rhs;
    }
    let mut g = DMatrix::zeros(ineq.len(), nz);
    let mut h = DVector::zeros(ineq.len());
    for (i, (coeffs, rhs)) in ineq.iter().enumerate() {
        for &(j, c) in coeffs {
            g[(i, j)] += c;
        }
        h[i] = *rhs;
    }
    let map = RowMap {
        n_alpha: fixed.alpha.len(),
        n_lambda: lam.len(),
        n_mu: mu.len(),
        fixed: fixed_rows,
        free: free_rows,
        circle_rows,
        donut_start,
    };
    (QpProblem { p, q, a, b, g, h }, map)
}

impl RowMap {
    /// Split QP multipliers into blocks, undoing the objective scaling.
    pub fn duals(&self, pools: &CutPools, nu: &DVector<f64>, lambda: &DVector<f64>, scale: f64) -> SubDuals {
        let un = |v: f64| v / scale;
        let eq: Vec<f64> = nu.iter().map(|&v| un(v)).collect();
        let ineq: Vec<f64> = lambda.iter().map(|&v| un(v)).collect();
        let (a, l, m) = (self.n_alpha, self.n_lambda, self.n_mu);
        let beta = self
            .fixed
            .iter()
            .zip(&self.free)
            .map(|(fx, fr)| match (fx, fr) {
                (Some(row), _) => {
                    let v = eq[*row];
                    (v.min(0.0).abs(), v.max(0.0))
                }
                (None, Some((lo, hi))) => (ineq[*lo], ineq[*hi]),
                (None, None) => unreachable!(),
            })
            .collect();
        let mut gamma = Vec::new();
        let mut voltage = Vec::new();
        for (circle, &(s, e)) in pools.circles.iter().zip(&self.circle_rows) {
            let d = ineq[s..e].to_vec();
            if circle.kind == CircleKind::Voltage {
                voltage.push(d);
            } else {
                gamma.push(d);
            }
        }
        let n_donut = voltage.len();
        SubDuals {
            alpha: eq[..a].to_vec(),
            lambda: eq[a..a + l].to_vec(),
            mu: eq[a + l..a + l + m].to_vec(),
            beta,
            gamma,
            donut: ineq[self.donut_start..self.donut_start + n_donut].to_vec(),
            voltage,
        }
    }
}
