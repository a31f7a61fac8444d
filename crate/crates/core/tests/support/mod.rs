//! Reference computations shared by the property tests and the acceptance
//! run. Each suite returns its worst observed numbers; callers compare them
//! against thresholds.

#![allow(dead_code)]

use std::path::PathBuf;

use dopf_core::admm::{
    dual_sum, net_update_average, net_update_general, run_admm_observed, AdmmConfig, CopyMap,
};
use dopf_core::network::{
    build_admittance, local_problem, parse_case_with, CaseFormat, LocalProblem, Network,
    Overrides, ParseOptions,
};
use dopf_core::qp::{solve_qp, QpProblem, QpStatus};
use dopf_core::subproblem::{
    donut_halfspace, line_power_rows, outer_cut, power_injection_rows, BilinearRow, Halfspace,
    Layout,
};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn case_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../cases")
        .join(name)
}

pub fn load_case(name: &str) -> Network {
    let text = std::fs::read_to_string(case_path(name)).expect("bundled case");
    parse_case_with(
        &text,
        CaseFormat::MatpowerM,
        ParseOptions { ignore_taps: true },
    )
    .expect("bundled case parses")
}

/// case9 with the reactive floor raised to 10 MVAr and demand scaled by 1.1.
pub fn case9_modified() -> Network {
    load_case("case9.m").with_overrides(&Overrides {
        scale_pd: 1.1,
        qg_min_mvar: Some(10.0),
        ..Default::default()
    })
}

pub fn local_problems(net: &Network) -> Vec<LocalProblem> {
    let y = build_admittance(net);
    (0..net.n_buses()).map(|k| local_problem(net, &y, k)).collect()
}

// ---------------------------------------------------------------- Taylor

#[derive(Debug, Default, Clone, Copy)]
pub struct TaylorStats {
    pub points: usize,
    /// `|ĥ(ẑ) − h(ẑ)|`.
    pub value: f64,
    /// Coefficients of `ĥ` against central differences of `h` at `ẑ`.
    pub gradient: f64,
    /// `|h(z) − ĥ(z) − ½(z−ẑ)ᵀH(z−ẑ)|`.
    pub remainder: f64,
}

fn dense_coeffs(row: &[(usize, f64)], n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n];
    for &(i, c) in row {
        out[i] += c;
    }
    out
}

fn check_row(row: &BilinearRow, zhat: &[f64], z: &[f64], st: &mut TaylorStats) {
    let lin = row.linearize(zhat);
    let h_at = |x: &[f64]| row.residual(x);
    let lin_at = |x: &[f64]| lin.residual(x);
    st.value = st.value.max((lin_at(zhat) - h_at(zhat)).abs());

    let n = zhat.len();
    let coeffs = dense_coeffs(&lin.coeffs, n);
    let step = 1e-5;
    let mut x = zhat.to_vec();
    for i in 0..n {
        x[i] = zhat[i] + step;
        let up = h_at(&x);
        x[i] = zhat[i] - step;
        let dn = h_at(&x);
        x[i] = zhat[i];
        let fd = (up - dn) / (2.0 * step);
        st.gradient = st.gradient.max((fd - coeffs[i]).abs());
    }

    let d: Vec<f64> = z.iter().zip(zhat).map(|(a, b)| a - b).collect();
    let quad: f64 = row
        .hessian()
        .iter()
        .map(|&(i, j, c)| 0.5 * c * d[i] * d[j])
        .sum();
    st.remainder = st.remainder.max((h_at(z) - lin_at(z) - quad).abs());
}

/// Expansion points drawn over the local layouts of case9 and case30.
pub fn taylor_suite(points: usize, seed: u64) -> TaylorStats {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sizes: Vec<usize> = ["case9.m", "case30.m"]
        .iter()
        .flat_map(|c| local_problems(&load_case(c)))
        .map(|lp| lp.size())
        .collect();
    let mut st = TaylorStats::default();
    for _ in 0..points {
        let layout = Layout::new(sizes[rng.gen_range(0..sizes.len())]);
        let zhat: Vec<f64> = (0..layout.len()).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let z: Vec<f64> = (0..layout.len()).map(|_| rng.gen_range(-2.0..2.0)).collect();
        for row in power_injection_rows(layout).iter().chain(&line_power_rows(layout)) {
            check_row(row, &zhat, &z, &mut st);
        }
        st.points += 1;
    }
    st
}

// ---------------------------------------------------------------- cuts

#[derive(Debug, Default, Clone, Copy)]
pub struct CutStats {
    pub cuts: usize,
    pub samples: usize,
    /// Distance between the cut's closest point to the origin and the
    /// radial projection of the generating point.
    pub tangency: f64,
    /// Samples on the wrong side: inside the disk but cut off by an outer
    /// cut, or kept by a donut cut while inside the inner circle.
    pub misclassified: usize,
    /// Outer cuts that fail to exclude the point they were built from.
    pub not_excluding: usize,
}

fn tangency_error(h: &Halfspace, point: (f64, f64), r: f64) -> f64 {
    let norm = point.0.hypot(point.1);
    let proj = (r * point.0 / norm, r * point.1 / norm);
    let foot = h.foot();
    (foot.0 - proj.0).hypot(foot.1 - proj.1)
}

fn random_dir(rng: &mut ChaCha8Rng) -> (f64, f64) {
    // axis-aligned directions exercise the second branch of the formula
    match rng.gen_range(0..10) {
        0 => (0.0, rng.gen_range(-2.0f64..2.0).signum()),
        1 => (rng.gen_range(-2.0f64..2.0).signum(), 0.0),
        _ => (rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)),
    }
}

pub fn cut_suite(samples: usize, seed: u64) -> CutStats {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut st = CutStats::default();
    for _ in 0..samples {
        let v_min = rng.gen_range(0.5..1.0);
        let v_max = v_min + rng.gen_range(0.05..0.5);

        let p = random_dir(&mut rng);
        if p == (0.0, 0.0) {
            continue;
        }
        let donut = donut_halfspace(p, v_min).expect("nonzero point");
        st.tangency = st.tangency.max(tangency_error(&donut, p, v_min));

        let mag = v_max * rng.gen_range(1.0001..2.0);
        let norm = p.0.hypot(p.1);
        let outside = (mag * p.0 / norm, mag * p.1 / norm);
        let outer = outer_cut(outside, v_max).expect("nonzero point");
        st.tangency = st.tangency.max(tangency_error(&outer, outside, v_max));
        if outer.contains(outside.0, outside.1, 0.0) {
            st.not_excluding += 1;
        }
        st.cuts += 2;

        let (sx, sy): (f64, f64) = (rng.gen_range(-2.5..2.5), rng.gen_range(-2.5..2.5));
        let m = sx.hypot(sy);
        if m < v_min * (1.0 - 1e-12) && donut.contains(sx, sy, 0.0) {
            st.misclassified += 1;
        }
        if m <= v_max && !outer.contains(sx, sy, 1e-12) {
            st.misclassified += 1;
        }
        st.samples += 1;
    }
    st
}

// ---------------------------------------------------------------- QP

#[derive(Debug, Default, Clone, Copy)]
pub struct QpStats {
    pub problems: usize,
    pub not_optimal: usize,
    pub kkt: f64,
    /// Relative objective gap to the projected-gradient oracle (box QPs).
    pub oracle_gap: f64,
    /// `max(0, dual − primal)` over general QPs.
    pub duality_violation: f64,
    pub analytic_error: f64,
}

fn random_psd(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
    let m = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
    m.transpose() * &m + DMatrix::identity(n, n) * 1e-3
}

/// Box QP `lo ≤ x ≤ hi`, written as `Gx ≤ h`.
pub fn random_box_qp(rng: &mut ChaCha8Rng) -> (QpProblem, DVector<f64>, DVector<f64>) {
    let n = rng.gen_range(1..=12);
    let p = random_psd(rng, n);
    let q = DVector::from_fn(n, |_, _| rng.gen_range(-3.0..3.0));
    let lo = DVector::from_fn(n, |_, _| rng.gen_range(-1.0..0.5));
    let hi = DVector::from_fn(n, |i, _| lo[i] + rng.gen_range(0.1..2.0));
    let mut g = DMatrix::zeros(2 * n, n);
    let mut h = DVector::zeros(2 * n);
    for i in 0..n {
        g[(i, i)] = 1.0;
        h[i] = hi[i];
        g[(n + i, i)] = -1.0;
        h[n + i] = -lo[i];
    }
    let qp = QpProblem {
        g,
        h,
        ..QpProblem::unconstrained(p, q)
    };
    (qp, lo, hi)
}

/// General QP with a known strictly feasible point.
pub fn random_general_qp(rng: &mut ChaCha8Rng) -> QpProblem {
    let n = rng.gen_range(2..=15);
    let me = rng.gen_range(0..n);
    let mi = rng.gen_range(0..=2 * n);
    let x_feas = DVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0));
    let a = DMatrix::from_fn(me, n, |_, _| rng.gen_range(-1.0..1.0));
    let g = DMatrix::from_fn(mi, n, |_, _| rng.gen_range(-1.0..1.0));
    let b = &a * &x_feas;
    let h = &g * &x_feas + DVector::from_fn(mi, |_, _| rng.gen_range(0.0..1.0));
    QpProblem {
        a,
        b,
        g,
        h,
        ..QpProblem::unconstrained(
            random_psd(rng, n),
            DVector::from_fn(n, |_, _| rng.gen_range(-3.0..3.0)),
        )
    }
}

/// FISTA with gradient restart, projecting onto the box.
pub fn projected_gradient(qp: &QpProblem, lo: &DVector<f64>, hi: &DVector<f64>) -> f64 {
    let l = qp.p.clone().symmetric_eigen().eigenvalues.max();
    let proj = |x: DVector<f64>| x.zip_zip_map(lo, hi, |v, a, b| v.clamp(a, b));
    let mut x = proj(DVector::zeros(qp.n()));
    let mut y = x.clone();
    let mut t = 1.0f64;
    for _ in 0..200_000 {
        let grad = &qp.p * &y + &qp.q;
        let xn = proj(&y - grad * (1.0 / l));
        let step = &xn - &x;
        if step.amax() < 1e-15 && (&xn - &y).amax() < 1e-15 {
            x = xn;
            break;
        }
        // restart when momentum points uphill
        if (&y - &xn).dot(&step) > 0.0 {
            t = 1.0;
            y = xn.clone();
        } else {
            let tn = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
            y = &xn + step * ((t - 1.0) / tn);
            t = tn;
        }
        x = xn;
    }
    qp.objective(&x)
}

/// Small problems with closed-form answers, returning the worst error.
fn analytic_qps(st: &mut QpStats) -> f64 {
    let mut err = 0.0f64;
    let mut run = |qp: QpProblem, x_star: &[f64]| {
        let sol = solve_qp(&qp, 1e-9).expect("valid problem");
        st.kkt = st.kkt.max(sol.kkt.max());
        st.problems += 1;
        if sol.status != QpStatus::Optimal {
            st.not_optimal += 1;
        }
        for (a, b) in sol.x.iter().zip(x_star) {
            err = err.max((a - b).abs());
        }
    };
    // min ½x² − 2x, x ≤ 1  →  x = 1
    run(
        QpProblem {
            g: DMatrix::from_element(1, 1, 1.0),
            h: DVector::from_element(1, 1.0),
            ..QpProblem::unconstrained(
                DMatrix::from_element(1, 1, 1.0),
                DVector::from_element(1, -2.0),
            )
        },
        &[1.0],
    );
    // min ½‖x‖², x₁ + x₂ = 2  →  (1, 1)
    run(
        QpProblem {
            a: DMatrix::from_row_slice(1, 2, &[1.0, 1.0]),
            b: DVector::from_element(1, 2.0),
            ..QpProblem::unconstrained(DMatrix::identity(2, 2), DVector::zeros(2))
        },
        &[1.0, 1.0],
    );
    // min ½‖x − (3, −1)‖², 0 ≤ x ≤ 2  →  (2, 0)
    let mut g = DMatrix::zeros(4, 2);
    g[(0, 0)] = 1.0;
    g[(1, 1)] = 1.0;
    g[(2, 0)] = -1.0;
    g[(3, 1)] = -1.0;
    run(
        QpProblem {
            g,
            h: DVector::from_row_slice(&[2.0, 2.0, 0.0, 0.0]),
            ..QpProblem::unconstrained(DMatrix::identity(2, 2), DVector::from_row_slice(&[-3.0, 1.0]))
        },
        &[2.0, 0.0],
    );
    // nearly linear: min 1e-6·½‖x‖² + x₁ + x₂, x ≥ 0, x₁ + x₂ ≥ 1  →  (½, ½)
    run(
        QpProblem {
            g: DMatrix::from_row_slice(3, 2, &[-1.0, 0.0, 0.0, -1.0, -1.0, -1.0]),
            h: DVector::from_row_slice(&[0.0, 0.0, -1.0]),
            ..QpProblem::unconstrained(
                DMatrix::identity(2, 2) * 1e-6,
                DVector::from_row_slice(&[1.0, 1.0]),
            )
        },
        &[0.5, 0.5],
    );
    err
}

/// `count` random box QPs against the projected-gradient oracle, `count`
/// random general QPs, plus the analytic cases.
pub fn qp_suite(count: usize, seed: u64) -> QpStats {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut st = QpStats::default();
    for _ in 0..count {
        let (qp, lo, hi) = random_box_qp(&mut rng);
        let sol = solve_qp(&qp, 1e-9).expect("valid problem");
        st.problems += 1;
        if sol.status != QpStatus::Optimal {
            st.not_optimal += 1;
        }
        st.kkt = st.kkt.max(sol.kkt.max());
        let f = qp.objective(&sol.x);
        let f_ref = projected_gradient(&qp, &lo, &hi);
        st.oracle_gap = st.oracle_gap.max((f - f_ref).abs() / f_ref.abs().max(1.0));
    }
    for _ in 0..count {
        let qp = random_general_qp(&mut rng);
        let sol = solve_qp(&qp, 1e-9).expect("valid problem");
        st.problems += 1;
        if sol.status != QpStatus::Optimal {
            st.not_optimal += 1;
        }
        st.kkt = st.kkt.max(sol.kkt.max());
        let primal = qp.objective(&sol.x);
        let dual = qp.dual_value(&sol.nu, &sol.lambda);
        st.duality_violation = st.duality_violation.max(dual - primal);
    }
    st.analytic_error = analytic_qps(&mut st);
    st
}

// ---------------------------------------------------------------- consensus

#[derive(Debug, Default, Clone, Copy)]
pub struct ConsensusStats {
    pub iterations: usize,
    /// `max_n ‖Σ_k Ē_kᵀ y_k^(n)‖∞`.
    pub dual_sum: f64,
    /// `max_n ‖v_general − v_average‖∞`, both built from the same copies.
    pub mode_gap: f64,
    /// `max_n ‖v_general − v_reported‖∞`.
    pub replay_gap: f64,
}

fn inf_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

/// Run ADMM and, after every iteration, check the dual-sum invariant and
/// recompute the net update both ways from the same copies.
pub fn consensus_suite(net: &Network, iters: usize, rho: f64) -> ConsensusStats {
    let cfg = AdmmConfig {
        rho,
        max_admm_iters: iters,
        timing: false,
        ..AdmmConfig::default()
    };
    let lps = local_problems(net);
    let map = CopyMap::new(net, &lps);
    let mut st = ConsensusStats::default();
    let mut y_prev: Vec<Vec<f64>> = lps.iter().map(|lp| vec![0.0; 2 * lp.size()]).collect();
    run_admm_observed(net, &cfg, &mut |view| {
        let s = view.state;
        let ds = dual_sum(&map, &lps, &s.y);
        st.dual_sum = st.dual_sum.max(ds.iter().fold(0.0, |m, v| m.max(v.abs())));
        let general = net_update_general(&map, &lps, &s.copies, &y_prev, rho);
        let average = net_update_average(&map, &lps, &s.copies);
        st.mode_gap = st.mode_gap.max(inf_dist(&general, &average));
        st.replay_gap = st.replay_gap.max(inf_dist(&general, &s.v));
        y_prev = s.y.clone();
        st.iterations += 1;
    })
    .expect("run completes");
    st
}

// ---------------------------------------------------------------- least squares

/// Stacked selection matrix `[Ē_1; …; Ē_N]` over `[v_re; v_im]`.
pub fn stacked_selection(lps: &[LocalProblem], n_global: usize) -> DMatrix<f64> {
    let rows: usize = lps.iter().map(|lp| 2 * lp.size()).sum();
    let mut e = DMatrix::zeros(rows, 2 * n_global);
    let mut r0 = 0;
    for lp in lps {
        let m = lp.size();
        for (r, &s) in lp.e_map.iter().enumerate() {
            e[(r0 + r, s)] = 1.0;
            e[(r0 + m + r, n_global + s)] = 1.0;
        }
        r0 += 2 * m;
    }
    e
}

/// Worst gap between the closed-form net update and a dense solve of the
/// normal equations `ĒᵀĒ v = Ēᵀ(v_k + y_k/ρ)`, over random copies and duals.
pub fn least_squares_suite(trials: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nets: Vec<Network> = ["twobus.m", "case9.m", "case14.m", "case30.m"]
        .iter()
        .map(|c| load_case(c))
        .collect();
    let mut worst = 0.0f64;
    for t in 0..trials {
        let net = &nets[t % nets.len()];
        let lps = local_problems(net);
        let n = net.n_buses();
        let map = CopyMap::new(net, &lps);
        let rho = 10f64.powf(rng.gen_range(0.0..6.0));
        let copies: Vec<Vec<f64>> = lps
            .iter()
            .map(|lp| (0..2 * lp.size()).map(|_| rng.gen_range(-1.2..1.2)).collect())
            .collect();
        let y: Vec<Vec<f64>> = lps
            .iter()
            .map(|lp| (0..2 * lp.size()).map(|_| rng.gen_range(-1.0..1.0) * rho).collect())
            .collect();
        let e = stacked_selection(&lps, n);
        let rhs_vec: Vec<f64> = copies
            .iter()
            .zip(&y)
            .flat_map(|(c, yk)| c.iter().zip(yk).map(|(v, d)| v + d / rho).collect::<Vec<_>>())
            .collect();
        let rhs = e.transpose() * DVector::from_vec(rhs_vec);
        let normal = e.transpose() * &e;
        let v_ls = normal.lu().solve(&rhs).expect("every bus has a copy");
        let v = net_update_general(&map, &lps, &copies, &y, rho);
        worst = worst.max(inf_dist(&v, v_ls.as_slice()));
    }
    worst
}
