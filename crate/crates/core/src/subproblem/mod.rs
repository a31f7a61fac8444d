//! One bus's nonconvex subproblem: sequential convex approximation whose
//! convex steps are solved by a cutting-plane QP loop.

mod builder;
mod cuts;
mod inner;
mod kkt;
mod linearize;
mod sca;
mod vars;

pub use builder::{
    alpha_rows, assemble, bounds, donut_cuts, Bound, Circle, CircleKind, CutPools, FixedPart,
    RowMap, SubDuals,
};
pub use cuts::{donut_halfspace, initial_octagon, outer_cut, Halfspace, Sense};
pub use inner::{solve_convex_inner, InnerOutcome, InnerStatus, CIRCLE_TOL, MAX_CUT_ROUNDS};
pub use kkt::{true_stationarity, StationarityReport};
pub use linearize::{
    line_power_rows, linearize_line_power, linearize_power_injection, power_injection_rows,
    AffineRow, BilinearRow,
};
pub use sca::{
    degree_of_feasibility, forward_from_voltages, initialize_zhat, injection_from_voltages,
    run_algorithm2, run_algorithm2_with, ScaSettings, SubStatus, SubproblemResult,
};
pub use vars::{Layout, LocalVars};
