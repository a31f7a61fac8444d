//! Cutting-plane loop: solve the QP over the current polyhedra, tighten
//! every circle the solution leaves, repeat.

use serde::{Deserialize, Serialize};

use super::builder::{assemble, CutPools, FixedPart, SubDuals};
use super::cuts::outer_cut;
use super::vars::LocalVars;
use crate::qp::{solve_qp_with, QpOptions, QpStatus};

pub const MAX_CUT_ROUNDS: usize = 50;
pub const CIRCLE_TOL: f64 = 1e-8;
/// A QP that stops at the iteration cap is still used when its KKT
/// residuals are this small.
const QP_ACCEPT: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InnerStatus {
    Solved,
    Infeasible,
    CutLimit,
    QpFailure,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InnerOutcome {
    pub z: LocalVars,
    pub duals: SubDuals,
    pub status: InnerStatus,
    pub qp_solves: usize,
    pub cuts_added: usize,
}

pub fn solve_convex_inner(
    fixed: &FixedPart,
    pools: &mut CutPools,
    zhat: &LocalVars,
    qp_opts: &QpOptions,
) -> InnerOutcome {
    let n = fixed.layout.n;
    let mut qp_solves = 0;
    let mut cuts_added = 0;
    let mut rounds = 0;
    loop {
        let (qp, map) = assemble(fixed, pools, zhat);
        let sol = match solve_qp_with(&qp, qp_opts) {
            Ok(s) => s,
            Err(_) => {
                return fail(zhat, InnerStatus::QpFailure, qp_solves, cuts_added);
            }
        };
        qp_solves += 1;
        match sol.status {
            QpStatus::Optimal => {}
            QpStatus::MaxIter if sol.kkt.max() <= QP_ACCEPT => {}
            QpStatus::Infeasible => {
                return fail(zhat, InnerStatus::Infeasible, qp_solves, cuts_added)
            }
            QpStatus::MaxIter => {
                return fail(zhat, InnerStatus::QpFailure, qp_solves, cuts_added)
            }
        }
        let z = LocalVars::from_vec(n, sol.x.iter().copied().collect());
        let mut violated = false;
        for circle in pools.circles.iter_mut() {
            if circle.excess(&z.data) > CIRCLE_TOL {
                violated = true;
                if rounds < MAX_CUT_ROUNDS {
                    let pt = (z.data[circle.x], z.data[circle.y]);
                    circle
                        .cuts
                        .push(outer_cut(pt, circle.radius).expect("violating point is off the origin"));
                    cuts_added += 1;
                }
            }
        }
        if !violated {
            let duals = map.duals(pools, &sol.nu, &sol.lambda, fixed.scale);
            return InnerOutcome {
                z,
                duals,
                status: InnerStatus::Solved,
                qp_solves,
                cuts_added,
            };
        }
        if rounds == MAX_CUT_ROUNDS {
            return InnerOutcome {
                z,
                duals: SubDuals::default(),
                status: InnerStatus::CutLimit,
                qp_solves,
                cuts_added,
            };
        }
        rounds += 1;
    }
}

fn fail(zhat: &LocalVars, status: InnerStatus, qp_solves: usize, cuts_added: usize) -> InnerOutcome {
    InnerOutcome {
        z: zhat.clone(),
        duals: SubDuals::default(),
        status,
        qp_solves,
        cuts_added,
    }
}
