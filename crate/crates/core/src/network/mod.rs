//! Network data: buses, lines, generator costs, and everything derived
//! from them (admittance matrix, per-bus local problem data).
//!
//! All electrical quantities are stored in per unit on `base_mva`.
//! Generator cost coefficients stay in $/h against MW, so evaluating a
//! cost always goes through [`Network::base_mva`].

mod admittance;
mod json;
mod local;
mod matpower;

use std::collections::VecDeque;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::ParseError;

pub use admittance::{build_admittance, AdmittanceMatrix};
pub use json::{from_json, to_json};
pub use local::{local_problem, LineData, LocalProblem};
pub use matpower::parse_matpower;

/// Input formats accepted by [`parse_case`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CaseFormat {
    MatpowerM,
    CanonicalJson,
}

impl CaseFormat {
    /// Guess the format from a file extension (`.m` or `.json`).
    pub fn from_extension(path: &std::path::Path) -> Option<Self> {
        match path.extension()?.to_str()? {
            "m" => Some(Self::MatpowerM),
            "json" => Some(Self::CanonicalJson),
            _ => None,
        }
    }
}

/// Knobs for the MATPOWER reader.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ParseOptions {
    /// Treat off-nominal transformer ratios and phase shifts as nominal
    /// instead of rejecting the case.
    pub ignore_taps: bool,
}

/// Quadratic generation cost `c2 P² + c1 P + c0` with `P` in MW.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostPoly {
    pub c2: f64,
    pub c1: f64,
    pub c0: f64,
}

impl CostPoly {
    pub fn eval_mw(&self, p_mw: f64) -> f64 {
        (self.c2 * p_mw + self.c1) * p_mw + self.c0
    }

    pub fn add(&self, other: &CostPoly) -> CostPoly {
        CostPoly {
            c2: self.c2 + other.c2,
            c1: self.c1 + other.c1,
            c0: self.c0 + other.c0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bus {
    /// Dense index, `0..N`.
    pub id: usize,
    /// Bus number as it appeared in the source case.
    pub ext_id: i64,
    pub pd: f64,
    pub qd: f64,
    pub pg_min: f64,
    pub pg_max: f64,
    pub qg_min: f64,
    pub qg_max: f64,
    pub v_min: f64,
    pub v_max: f64,
    /// Admittance to ground, including folded line charging.
    pub shunt: Complex64,
    /// Present iff the bus hosts generation.
    pub cost: Option<CostPoly>,
}

impl Bus {
    pub fn is_generator(&self) -> bool {
        self.cost.is_some()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Line {
    pub from: usize,
    pub to: usize,
    /// Series admittance `g + jb`.
    pub y: Complex64,
    /// Thermal rating from the source case (p.u. MVA); only becomes a
    /// constraint once a [`LineLimitKind`] is selected.
    pub rating: Option<f64>,
    pub i_max: Option<f64>,
    pub s_max: Option<f64>,
    pub p_max: Option<f64>,
}

impl Line {
    pub fn other(&self, bus: usize) -> usize {
        if self.from == bus {
            self.to
        } else {
            self.from
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Network {
    pub base_mva: f64,
    pub buses: Vec<Bus>,
    pub lines: Vec<Line>,
}

/// Which flow-line limit family is active.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LineLimitKind {
    #[default]
    None,
    Imax,
    Smax,
    Pmax,
}

/// Case modifications applied after parsing (demand scaling, bound
/// overrides, line-limit selection).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Overrides {
    pub scale_pd: f64,
    pub scale_qd: f64,
    /// New reactive lower bound for every generator bus, in MVAr.
    pub qg_min_mvar: Option<f64>,
    pub line_limit: LineLimitKind,
}

impl Default for Overrides {
    fn default() -> Self {
        Self {
            scale_pd: 1.0,
            scale_qd: 1.0,
            qg_min_mvar: None,
            line_limit: LineLimitKind::None,
        }
    }
}

/// One broken invariant found by [`validate`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub subject: Subject,
    pub message: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind", content = "index")]
pub enum Subject {
    Network,
    Bus(usize),
    Line(usize),
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.subject {
            Subject::Network => write!(f, "network: {}", self.message),
            Subject::Bus(i) => write!(f, "bus {i}: {}", self.message),
            Subject::Line(i) => write!(f, "line {i}: {}", self.message),
        }
    }
}

/// Parse a case in either supported format.
pub fn parse_case(text: &str, format: CaseFormat) -> Result<Network, ParseError> {
    parse_case_with(text, format, ParseOptions::default())
}

pub fn parse_case_with(
    text: &str,
    format: CaseFormat,
    options: ParseOptions,
) -> Result<Network, ParseError> {
    if text.trim().is_empty() {
        return Err(ParseError::Empty);
    }
    let net = match format {
        CaseFormat::MatpowerM => parse_matpower(text, options)?,
        CaseFormat::CanonicalJson => from_json(text)?,
    };
    net.check_connected()?;
    Ok(net)
}

impl Network {
    pub fn n_buses(&self) -> usize {
        self.buses.len()
    }

    pub fn generator_count(&self) -> usize {
        self.buses.iter().filter(|b| b.is_generator()).count()
    }

    /// Neighbor ids of every bus, ascending.
    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.buses.len()];
        for line in &self.lines {
            adj[line.from].push(line.to);
            adj[line.to].push(line.from);
        }
        for nbrs in &mut adj {
            nbrs.sort_unstable();
            nbrs.dedup();
        }
        adj
    }

    /// Index of the line joining `a` and `b`, if any.
    pub fn line_between(&self, a: usize, b: usize) -> Option<usize> {
        self.lines
            .iter()
            .position(|l| (l.from == a && l.to == b) || (l.from == b && l.to == a))
    }

    pub(crate) fn check_connected(&self) -> Result<(), ParseError> {
        let n = self.buses.len();
        if n == 0 {
            return Err(ParseError::Missing("bus".into()));
        }
        let adj = self.adjacency();
        let mut seen = vec![false; n];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        while let Some(b) = queue.pop_front() {
            for &nb in &adj[b] {
                if !seen[nb] {
                    seen[nb] = true;
                    queue.push_back(nb);
                }
            }
        }
        match seen.iter().position(|s| !s) {
            Some(bus) => Err(ParseError::Disconnected { root: 0, bus }),
            None => Ok(()),
        }
    }

    /// Apply case modifications, returning a new network.
    pub fn with_overrides(&self, ov: &Overrides) -> Network {
        let mut net = self.clone();
        for bus in &mut net.buses {
            bus.pd *= ov.scale_pd;
            bus.qd *= ov.scale_qd;
            if let (Some(q), true) = (ov.qg_min_mvar, bus.is_generator()) {
                bus.qg_min = q / self.base_mva;
            }
        }
        for line in &mut net.lines {
            line.i_max = None;
            line.s_max = None;
            line.p_max = None;
            match ov.line_limit {
                LineLimitKind::None => {}
                // rating is in MVA; at nominal voltage 1 p.u. current equals MVA
                LineLimitKind::Imax => line.i_max = line.rating,
                LineLimitKind::Smax => line.s_max = line.rating,
                LineLimitKind::Pmax => line.p_max = line.rating,
            }
        }
        net
    }

    /// Generation cost in $/h for per-unit real power `pg` at `bus`.
    pub fn cost_at(&self, bus: usize, pg: f64) -> f64 {
        self.buses[bus]
            .cost
            .map_or(0.0, |c| c.eval_mw(pg * self.base_mva))
    }
}

/// Check every bus and line invariant. Empty result means valid.
pub fn validate(net: &Network) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut push = |subject, message: String| out.push(Violation { subject, message });
    if !(net.base_mva > 0.0) {
        push(Subject::Network, format!("base_mva must be positive, got {}", net.base_mva));
    }
    for (i, bus) in net.buses.iter().enumerate() {
        let s = Subject::Bus(i);
        if bus.id != i {
            push(s, format!("id {} is not the dense index {i}", bus.id));
        }
        if bus.pg_min > bus.pg_max {
            push(s, format!("pg_min {} > pg_max {}", bus.pg_min, bus.pg_max));
        }
        if bus.qg_min > bus.qg_max {
            push(s, format!("qg_min {} > qg_max {}", bus.qg_min, bus.qg_max));
        }
        if !(bus.v_min > 0.0) {
            push(s, format!("v_min {} must be positive", bus.v_min));
        }
        if bus.v_min > bus.v_max {
            push(s, format!("v_min {} > v_max {}", bus.v_min, bus.v_max));
        }
        match bus.cost {
            Some(c) if c.c2 < 0.0 => push(s, format!("cost c2 {} is negative", c.c2)),
            None if bus.pg_min != 0.0
                || bus.pg_max != 0.0
                || bus.qg_min != 0.0
                || bus.qg_max != 0.0 =>
            {
                push(s, "non-generator bus has nonzero generation bounds".into())
            }
            _ => {}
        }
    }
    let n = net.buses.len();
    for (j, line) in net.lines.iter().enumerate() {
        let s = Subject::Line(j);
        if line.from == line.to {
            push(s, format!("line connects bus {} to itself", line.from));
        }
        if line.from >= n || line.to >= n {
            push(s, format!("endpoint out of range ({}, {})", line.from, line.to));
        }
        let limits = [line.i_max, line.s_max, line.p_max];
        if limits.iter().flatten().any(|v| !(*v > 0.0)) {
            push(s, "flow limits must be positive".into());
        }
    }
    out
}
