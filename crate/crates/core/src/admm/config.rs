use serde::{Deserialize, Serialize};

use crate::error::SolveError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "rule", content = "theta")]
pub enum StopRule {
    FixedIters,
    /// `max_k ‖E_k v − v_k‖₂ < θ`.
    Consensus(f64),
    /// `|f^(n) − f^(n−1)| < θ`.
    ObjectiveDecrement(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode", content = "rounds")]
pub enum NetUpdateMode {
    /// Least-squares form that carries the consensus duals.
    General,
    /// Plain mean of each component's copies.
    Average,
    /// Randomized pairwise averaging over the network, `rounds` exchanges.
    Gossip(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdmmConfig {
    pub rho: f64,
    pub max_admm_iters: usize,
    pub eps_sub: f64,
    pub max_sub_iter: usize,
    pub stop_rule: StopRule,
    pub net_update: NetUpdateMode,
    pub seed: u64,
    /// Keep each bus's cutting planes from one ADMM iteration to the next
    /// instead of restarting from the octagons.
    pub persist_cuts: bool,
    /// Record wall-clock time per iteration; off gives reproducible traces.
    pub timing: bool,
}

impl Default for AdmmConfig {
    fn default() -> Self {
        Self {
            rho: 1e6,
            max_admm_iters: 1000,
            eps_sub: 1e-10,
            max_sub_iter: 20,
            stop_rule: StopRule::FixedIters,
            net_update: NetUpdateMode::General,
            seed: 0,
            persist_cuts: false,
            timing: true,
        }
    }
}

impl AdmmConfig {
    pub fn validate(&self) -> Result<(), SolveError> {
        let bad = |m: String| Err(SolveError::InvalidConfig(m));
        if !(self.rho > 0.0 && self.rho.is_finite()) {
            return bad(format!("rho must be positive, got {}", self.rho));
        }
        if self.max_admm_iters == 0 {
            return bad("iteration budget must be at least 1".into());
        }
        if !(self.eps_sub > 0.0) {
            return bad(format!("eps_sub must be positive, got {}", self.eps_sub));
        }
        if self.max_sub_iter == 0 {
            return bad("max_sub_iter must be at least 1".into());
        }
        match self.stop_rule {
            StopRule::Consensus(t) | StopRule::ObjectiveDecrement(t) if !(t > 0.0) => {
                return bad(format!("stop threshold must be positive, got {t}"));
            }
            _ => {}
        }
        if self.net_update == NetUpdateMode::Gossip(0) {
            return bad("gossip needs at least one round".into());
        }
        Ok(())
    }
}
