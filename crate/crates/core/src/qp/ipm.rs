use nalgebra::{DMatrix, DVector};

use super::{kkt_residuals, KktResiduals, QpProblem, QpSolution, QpStatus};
use super::{DEFAULT_MAX_ITER, DEFAULT_TOL};
use crate::error::QpError;

const STEP_FRACTION: f64 = 0.99;
const REG: f64 = 1e-10;
const PSD_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QpOptions {
    pub tol: f64,
    pub max_iter: usize,
    /// Re-solve on the detected active set once the interior method stops.
    pub polish: bool,
}

impl Default for QpOptions {
    fn default() -> Self {
        Self {
            tol: DEFAULT_TOL,
            max_iter: DEFAULT_MAX_ITER,
            polish: true,
        }
    }
}

pub fn solve_qp(p: &QpProblem, tol: f64) -> Result<QpSolution, QpError> {
    solve_qp_with(
        p,
        &QpOptions {
            tol,
            ..QpOptions::default()
        },
    )
}

pub fn solve_qp_with(p: &QpProblem, opts: &QpOptions) -> Result<QpSolution, QpError> {
    p.check_dims()?;
    check_psd(&p.p)?;
    if p.n_ineq() == 0 {
        return Ok(solve_equality_only(p, opts.tol));
    }
    Ok(interior_point(p, opts))
}

fn check_psd(p: &DMatrix<f64>) -> Result<(), QpError> {
    let scale = p.amax().max(1.0);
    let asym = (p - p.transpose()).amax();
    if asym > PSD_TOL * scale {
        return Err(QpError::NotSymmetric(asym));
    }
    let n = p.nrows();
    if n == 0 {
        return Ok(());
    }
    let shifted = p + DMatrix::identity(n, n) * (PSD_TOL * scale);
    if shifted.cholesky().is_some() {
        return Ok(());
    }
    let min_eig = p.clone().symmetric_eigen().eigenvalues.min();
    if min_eig < -PSD_TOL * scale {
        Err(QpError::NotPsd(min_eig))
    } else {
        Ok(())
    }
}

/// LU-factorized saddle-point matrix with iterative refinement.
struct Kkt {
    k: DMatrix<f64>,
    lu: nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
}

impl Kkt {
    fn new(k: DMatrix<f64>) -> Option<Self> {
        let lu = k.clone().lu();
        lu.is_invertible().then_some(Self { k, lu })
    }

    fn solve(&self, rhs: &DVector<f64>) -> Option<DVector<f64>> {
        let mut x = self.lu.solve(rhs)?;
        for _ in 0..2 {
            let r = rhs - &self.k * &x;
            x += self.lu.solve(&r)?;
        }
        x.iter().all(|v| v.is_finite()).then_some(x)
    }
}

fn saddle(h: &DMatrix<f64>, a: &DMatrix<f64>, dual_reg: f64) -> DMatrix<f64> {
    let (n, m) = (h.nrows(), a.nrows());
    let mut k = DMatrix::zeros(n + m, n + m);
    k.view_mut((0, 0), (n, n)).copy_from(h);
    k.view_mut((n, 0), (m, n)).copy_from(a);
    k.view_mut((0, n), (n, m)).copy_from(&a.transpose());
    for i in 0..m {
        k[(n + i, n + i)] = -dual_reg;
    }
    k
}

/// Factorize, falling back to a shifted `P` (and then a tiny dual shift).
fn factor(
    h: &DMatrix<f64>,
    a: &DMatrix<f64>,
    regularized: &mut bool,
) -> Option<Kkt> {
    let n = h.nrows();
    if !*regularized {
        if let Some(k) = Kkt::new(saddle(h, a, 0.0)) {
            return Some(k);
        }
        *regularized = true;
    }
    let hr = h + DMatrix::identity(n, n) * REG;
    Kkt::new(saddle(&hr, a, 0.0)).or_else(|| Kkt::new(saddle(&hr, a, REG)))
}

fn stack(a: &DVector<f64>, b: &DVector<f64>) -> DVector<f64> {
    let mut v = DVector::zeros(a.len() + b.len());
    v.rows_mut(0, a.len()).copy_from(a);
    v.rows_mut(a.len(), b.len()).copy_from(b);
    v
}

fn solve_equality_only(p: &QpProblem, tol: f64) -> QpSolution {
    let n = p.n();
    let mut regularized = false;
    let rhs = stack(&(-&p.q), &p.b);
    let sol = factor(&p.p, &p.a, &mut regularized).and_then(|k| k.solve(&rhs));
    let lambda = DVector::zeros(0);
    let Some(sol) = sol else {
        return QpSolution {
            x: DVector::zeros(n),
            nu: DVector::zeros(p.n_eq()),
            lambda,
            status: QpStatus::Infeasible,
            kkt: KktResiduals::default(),
            iterations: 0,
            regularized,
            polished: false,
        };
    };
    let x = sol.rows(0, n).into_owned();
    let nu = sol.rows(n, p.n_eq()).into_owned();
    let kkt = kkt_residuals(p, &x, &nu, &lambda);
    let status = if kkt.max() <= tol {
        QpStatus::Optimal
    } else if kkt.primal_eq > tol {
        QpStatus::Infeasible
    } else {
        QpStatus::MaxIter
    };
    QpSolution {
        x,
        nu,
        lambda,
        status,
        kkt,
        iterations: 1,
        regularized,
        polished: false,
    }
}

fn max_step(v: &DVector<f64>, dv: &DVector<f64>) -> f64 {
    v.iter()
        .zip(dv.iter())
        .filter(|(_, d)| **d < 0.0)
        .fold(f64::INFINITY, |m, (x, d)| m.min(-x / d))
}

struct Iterate {
    x: DVector<f64>,
    nu: DVector<f64>,
    lambda: DVector<f64>,
    s: DVector<f64>,
}

fn interior_point(p: &QpProblem, opts: &QpOptions) -> QpSolution {
    let (n, me, mi) = (p.n(), p.n_eq(), p.n_ineq());
    let gt = p.g.transpose();
    let at = p.a.transpose();
    let mut regularized = false;

    // least-squares start: min ½xᵀPx + qᵀx + ½‖Gx − h‖² subject to Ax = b
    let h0 = &p.p + &gt * &p.g;
    let x0 = factor(&h0, &p.a, &mut regularized)
        .and_then(|k| k.solve(&stack(&(&gt * &p.h - &p.q), &p.b)))
        .map(|v| v.rows(0, n).into_owned())
        .unwrap_or_else(|| DVector::zeros(n));
    let s0 = (&p.h - &p.g * &x0).map(|v| v.max(1.0));
    let mut it = Iterate {
        x: x0,
        nu: DVector::zeros(me),
        lambda: DVector::from_element(mi, 1.0),
        s: s0,
    };

    let mut status = QpStatus::MaxIter;
    let mut iterations = 0;
    let mut primal_hist: Vec<f64> = Vec::new();
    let mut kkt = kkt_residuals(p, &it.x, &it.nu, &it.lambda);
    for k in 0..opts.max_iter {
        iterations = k;
        kkt = kkt_residuals(p, &it.x, &it.nu, &it.lambda);
        if kkt.max() <= opts.tol {
            status = QpStatus::Optimal;
            break;
        }
        let rd = &p.p * &it.x + &p.q + &at * &it.nu + &gt * &it.lambda;
        let rp = &p.a * &it.x - &p.b;
        let ri = &p.g * &it.x + &it.s - &p.h;
        let mu = it.s.dot(&it.lambda) / mi as f64;

        primal_hist.push(rp.amax().max(ri.amax()));
        if infeasible(p, &it, &primal_hist) {
            status = QpStatus::Infeasible;
            break;
        }

        let w = it.lambda.component_div(&it.s);
        let mut wg = p.g.clone();
        for (i, mut row) in wg.row_iter_mut().enumerate() {
            row *= w[i];
        }
        let h = &p.p + &gt * &wg;
        let Some(kkt_fact) = factor(&h, &p.a, &mut regularized) else {
            break;
        };

        let direction = |rc: &DVector<f64>| {
            let rhs1 = -&rd - &gt * (w.component_mul(&ri) - rc.component_div(&it.s));
            let sol = kkt_fact.solve(&stack(&rhs1, &(-&rp)))?;
            let dx = sol.rows(0, n).into_owned();
            let dnu = sol.rows(n, me).into_owned();
            let gdx = &p.g * &dx;
            let dl = w.component_mul(&(&gdx + &ri)) - rc.component_div(&it.s);
            let ds = -&ri - gdx;
            Some((dx, dnu, dl, ds))
        };

        let rc_aff = it.s.component_mul(&it.lambda);
        let Some((_, _, dl_a, ds_a)) = direction(&rc_aff) else {
            break;
        };
        let alpha_aff = max_step(&it.s, &ds_a).min(max_step(&it.lambda, &dl_a)).min(1.0);
        let mu_aff = (&it.s + &ds_a * alpha_aff).dot(&(&it.lambda + &dl_a * alpha_aff)) / mi as f64;
        let sigma = (mu_aff / mu).powi(3).clamp(0.0, 1.0);

        let rc = rc_aff + ds_a.component_mul(&dl_a) - DVector::from_element(mi, sigma * mu);
        let Some((dx, dnu, dl, ds)) = direction(&rc) else {
            break;
        };
        let alpha = (STEP_FRACTION * max_step(&it.s, &ds).min(max_step(&it.lambda, &dl))).min(1.0);
        it.x += &dx * alpha;
        it.nu += &dnu * alpha;
        it.lambda += &dl * alpha;
        it.s += &ds * alpha;
        iterations = k + 1;
    }
    if status != QpStatus::Optimal {
        kkt = kkt_residuals(p, &it.x, &it.nu, &it.lambda);
        if kkt.max() <= opts.tol {
            status = QpStatus::Optimal;
        }
    }

    let mut sol = QpSolution {
        x: it.x,
        nu: it.nu,
        lambda: it.lambda,
        status,
        kkt,
        iterations,
        regularized,
        polished: false,
    };
    if opts.polish && status != QpStatus::Infeasible {
        polish(p, &mut sol, &it.s, opts.tol);
    }
    sol
}

/// Farkas-style test: the duals blow up along a direction that proves the
/// constraints inconsistent, while the primal residual has stopped falling.
fn infeasible(p: &QpProblem, it: &Iterate, primal_hist: &[f64]) -> bool {
    let scale = it.lambda.amax().max(it.nu.amax());
    if scale < 1e6 {
        return false;
    }
    let lt = &it.lambda / scale;
    let nt = &it.nu / scale;
    let cert = (p.a.transpose() * &nt + p.g.transpose() * &lt).amax();
    let gap = p.b.dot(&nt) + p.h.dot(&lt);
    if cert <= 1e-6 && gap < -1e-6 {
        return true;
    }
    let k = primal_hist.len();
    scale > 1e8 && k > 10 && primal_hist[k - 1] >= 0.9 * primal_hist[k - 11]
}

/// Solve the equality-constrained problem on the active set guessed from
/// the interior iterate and keep it if it is at least as accurate.
fn polish(p: &QpProblem, sol: &mut QpSolution, s: &DVector<f64>, tol: f64) {
    let n = p.n();
    let active: Vec<usize> = (0..p.n_ineq()).filter(|&i| sol.lambda[i] > s[i]).collect();
    let mut a = DMatrix::zeros(p.n_eq() + active.len(), n);
    a.view_mut((0, 0), (p.n_eq(), n)).copy_from(&p.a);
    let mut b = DVector::zeros(p.n_eq() + active.len());
    b.rows_mut(0, p.n_eq()).copy_from(&p.b);
    for (r, &i) in active.iter().enumerate() {
        a.row_mut(p.n_eq() + r).copy_from(&p.g.row(i));
        b[p.n_eq() + r] = p.h[i];
    }
    let Some(k) = Kkt::new(saddle(&p.p, &a, 0.0)) else {
        return;
    };
    let Some(y) = k.solve(&stack(&(-&p.q), &b)) else {
        return;
    };
    let x = y.rows(0, n).into_owned();
    let nu = y.rows(n, p.n_eq()).into_owned();
    let mut lambda = DVector::zeros(p.n_ineq());
    for (r, &i) in active.iter().enumerate() {
        lambda[i] = y[n + p.n_eq() + r];
    }
    if lambda.iter().any(|&l| l < -1e-12) {
        return;
    }
    let kkt = kkt_residuals(p, &x, &nu, &lambda);
    if kkt.max() <= sol.kkt.max() || (kkt.max() <= tol && sol.status != QpStatus::Optimal) {
        sol.x = x;
        sol.nu = nu;
        sol.lambda = lambda;
        sol.kkt = kkt;
        sol.polished = true;
        if kkt.max() <= tol {
            sol.status = QpStatus::Optimal;
        }
    }
}
