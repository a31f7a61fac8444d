pub mod error;
pub mod network;
pub mod qp;
pub mod subproblem;
pub mod admm;
pub mod diagnostics;
pub mod oracle;
