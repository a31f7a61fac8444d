//! Dense convex quadratic programs:
//!
//! ```text
//! minimize  ½ xᵀPx + qᵀx   subject to  Ax = b,  Gx ≤ h
//! ```
//!
//! solved by a primal-dual interior-point method. Sizes are small (tens of
//! variables), so every linear system is factorized densely.

mod ipm;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::QpError;

pub use ipm::{solve_qp, solve_qp_with, QpOptions};

pub const DEFAULT_TOL: f64 = 1e-9;
pub const DEFAULT_MAX_ITER: usize = 100;

#[derive(Debug, Clone, PartialEq)]
pub struct QpProblem {
    pub p: DMatrix<f64>,
    pub q: DVector<f64>,
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
    pub g: DMatrix<f64>,
    pub h: DVector<f64>,
}

impl QpProblem {
    /// Problem with `n` variables and no constraints.
    pub fn unconstrained(p: DMatrix<f64>, q: DVector<f64>) -> Self {
        let n = q.len();
        Self {
            p,
            q,
            a: DMatrix::zeros(0, n),
            b: DVector::zeros(0),
            g: DMatrix::zeros(0, n),
            h: DVector::zeros(0),
        }
    }

    pub fn n(&self) -> usize {
        self.q.len()
    }

    pub fn n_eq(&self) -> usize {
        self.b.len()
    }

    pub fn n_ineq(&self) -> usize {
        self.h.len()
    }

    pub fn objective(&self, x: &DVector<f64>) -> f64 {
        0.5 * x.dot(&(&self.p * x)) + self.q.dot(x)
    }

    /// Lagrangian dual function at `(nu, lambda)`, `-inf` when the
    /// stationarity system has no solution.
    pub fn dual_value(&self, nu: &DVector<f64>, lambda: &DVector<f64>) -> f64 {
        // g(ν,λ) = min_x L(x,ν,λ); the minimizer solves P x = -(q + Aᵀν + Gᵀλ)
        let c = &self.q + self.a.transpose() * nu + self.g.transpose() * lambda;
        let lin = -self.b.dot(nu) - self.h.dot(lambda);
        let sol = self.p.clone().svd(true, true).solve(&(-&c), 1e-12);
        match sol {
            Ok(x) => {
                let resid = &self.p * &x + &c;
                if resid.amax() > 1e-8 * (1.0 + c.amax()) {
                    f64::NEG_INFINITY
                } else {
                    0.5 * x.dot(&(&self.p * &x)) + c.dot(&x) + lin
                }
            }
            Err(_) => f64::NEG_INFINITY,
        }
    }

    pub(crate) fn check_dims(&self) -> Result<(), QpError> {
        let n = self.n();
        let bad = |what: String| Err(QpError::Dimension(what));
        if self.p.shape() != (n, n) {
            return bad(format!("P is {:?}, expected ({n}, {n})", self.p.shape()));
        }
        if self.a.shape() != (self.b.len(), n) {
            return bad(format!("A is {:?}, expected ({}, {n})", self.a.shape(), self.b.len()));
        }
        if self.g.shape() != (self.h.len(), n) {
            return bad(format!("G is {:?}, expected ({}, {n})", self.g.shape(), self.h.len()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QpStatus {
    Optimal,
    Infeasible,
    MaxIter,
}

/// Infinity norms of the four KKT conditions.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct KktResiduals {
    pub stationarity: f64,
    pub primal_eq: f64,
    pub primal_ineq: f64,
    pub complementarity: f64,
}

impl KktResiduals {
    pub fn max(&self) -> f64 {
        self.stationarity
            .max(self.primal_eq)
            .max(self.primal_ineq)
            .max(self.complementarity)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QpSolution {
    pub x: DVector<f64>,
    pub nu: DVector<f64>,
    pub lambda: DVector<f64>,
    pub status: QpStatus,
    pub kkt: KktResiduals,
    pub iterations: usize,
    /// `P` needed the `1e-10·I` shift to factorize.
    pub regularized: bool,
    /// Final point came from the active-set refinement.
    pub polished: bool,
}

impl QpSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == QpStatus::Optimal
    }
}

pub fn kkt_residuals(
    p: &QpProblem,
    x: &DVector<f64>,
    nu: &DVector<f64>,
    lambda: &DVector<f64>,
) -> KktResiduals {
    let stat = &p.p * x + &p.q + p.a.transpose() * nu + p.g.transpose() * lambda;
    let eq = &p.a * x - &p.b;
    let slack = &p.g * x - &p.h;
    KktResiduals {
        stationarity: stat.amax(),
        primal_eq: eq.amax(),
        primal_ineq: slack.iter().fold(0.0, |m, &v| m.max(v)),
        complementarity: slack
            .iter()
            .zip(lambda.iter())
            .fold(0.0, |m, (s, l)| m.max((s * l).abs())),
    }
}
