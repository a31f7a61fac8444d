//! Net-variable and consensus-dual updates.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::network::{LocalProblem, Network};

/// Who holds a copy of each bus voltage, and which holders are joined by
/// a line.
#[derive(Debug, Clone, PartialEq)]
pub struct CopyMap {
    pub n_global: usize,
    /// For bus `s`: `(k, r)` pairs meaning slot `r` of bus `k` copies `s`.
    /// The owner `(s, 0)` comes first.
    pub holders: Vec<Vec<(usize, usize)>>,
    /// Lines among the holders of `s`, as index pairs into `holders[s]`.
    pub edges: Vec<Vec<(usize, usize)>>,
}

impl CopyMap {
    pub fn new(net: &Network, lps: &[LocalProblem]) -> Self {
        let n = net.n_buses();
        let mut holders = vec![Vec::new(); n];
        for lp in lps {
            for (r, &s) in lp.e_map.iter().enumerate() {
                holders[s].push((lp.k, r));
            }
        }
        for (s, h) in holders.iter_mut().enumerate() {
            h.sort_by_key(|&(k, _)| (k != s, k));
        }
        let edges = holders
            .iter()
            .map(|h| {
                let mut e = Vec::new();
                for i in 0..h.len() {
                    for j in i + 1..h.len() {
                        if net.line_between(h[i].0, h[j].0).is_some() {
                            e.push((i, j));
                        }
                    }
                }
                e
            })
            .collect();
        Self {
            n_global: n,
            holders,
            edges,
        }
    }

    /// Degree of net variable `s` (number of copies).
    pub fn degree(&self, s: usize) -> usize {
        self.holders[s].len()
    }

    /// Copy values of global component `j` (`j < N` real, else imaginary).
    fn gather(&self, j: usize, values: &[Vec<f64>], lps: &[LocalProblem]) -> Vec<f64> {
        let (s, part) = (j % self.n_global, j / self.n_global);
        self.holders[s]
            .iter()
            .map(|&(k, r)| values[k][part * lps[k].size() + r])
            .collect()
    }
}

/// `v = (Σ ĒᵀĒ)⁻¹ Σ Ēᵀ(v_k + y_k/ρ)`; `ĒᵀĒ` is diagonal with the copy
/// counts, so this is a per-component mean of `v_k + y_k/ρ`.
pub fn net_update_general(
    map: &CopyMap,
    lps: &[LocalProblem],
    copies: &[Vec<f64>],
    y: &[Vec<f64>],
    rho: f64,
) -> Vec<f64> {
    let shifted: Vec<Vec<f64>> = copies
        .iter()
        .zip(y)
        .map(|(c, yk)| c.iter().zip(yk).map(|(v, d)| v + d / rho).collect())
        .collect();
    net_update_average(map, lps, &shifted)
}

/// Per-component mean of the copies.
pub fn net_update_average(map: &CopyMap, lps: &[LocalProblem], copies: &[Vec<f64>]) -> Vec<f64> {
    (0..2 * map.n_global)
        .map(|j| {
            let vals = map.gather(j, copies, lps);
            vals.iter().sum::<f64>() / vals.len() as f64
        })
        .collect()
}

/// Synchronous randomized pairwise averaging: each round draws a random
/// maximal matching of `edges` and replaces each matched pair by its mean.
pub fn gossip_average<R: Rng>(
    values: &mut [f64],
    edges: &[(usize, usize)],
    rounds: usize,
    rng: &mut R,
) {
    let mut order: Vec<usize> = (0..edges.len()).collect();
    let mut busy = vec![false; values.len()];
    for _ in 0..rounds {
        order.shuffle(rng);
        busy.iter_mut().for_each(|b| *b = false);
        for &e in &order {
            let (i, j) = edges[e];
            if busy[i] || busy[j] {
                continue;
            }
            busy[i] = true;
            busy[j] = true;
            let m = 0.5 * (values[i] + values[j]);
            values[i] = m;
            values[j] = m;
        }
    }
}

/// Gossip on `v_k + y_k/ρ` for every component; the owner's value after
/// `rounds` exchanges becomes the net variable.
pub fn net_update_gossip<R: Rng>(
    map: &CopyMap,
    lps: &[LocalProblem],
    copies: &[Vec<f64>],
    y: &[Vec<f64>],
    rho: f64,
    rounds: usize,
    rng: &mut R,
) -> Vec<f64> {
    let shifted: Vec<Vec<f64>> = copies
        .iter()
        .zip(y)
        .map(|(c, yk)| c.iter().zip(yk).map(|(v, d)| v + d / rho).collect())
        .collect();
    (0..2 * map.n_global)
        .map(|j| {
            let mut vals = map.gather(j, &shifted, lps);
            gossip_average(&mut vals, &map.edges[j % map.n_global], rounds, rng);
            vals[0]
        })
        .collect()
}

/// `y_k ← y_k + ρ(v_k − Ē_k v)`.
pub fn dual_update(y_k: &mut [f64], v_k: &[f64], ev: &[f64], rho: f64) {
    for ((y, v), e) in y_k.iter_mut().zip(v_k).zip(ev) {
        *y += rho * (v - e);
    }
}

/// Dual update for every bus after a general net update. Per component,
/// `y_i ← ρ(d_i − mean(d))` with `d_i = (v_i − v) + y_i/ρ`, which equals
/// `y_i + ρ(v_i − v)` when `v` is the exact mean of `v_i + y_i/ρ`. Centering
/// the deviations keeps `Σ Ē_kᵀ y_k` at roundoff of `y/ρ` rather than of `v`.
pub fn dual_update_general(
    map: &CopyMap,
    lps: &[LocalProblem],
    y: &mut [Vec<f64>],
    copies: &[Vec<f64>],
    v: &[f64],
    rho: f64,
) {
    let mut d = Vec::new();
    for j in 0..2 * map.n_global {
        let (s, part) = (j % map.n_global, j / map.n_global);
        d.clear();
        for &(k, r) in &map.holders[s] {
            let i = part * lps[k].size() + r;
            d.push((copies[k][i] - v[j]) + y[k][i] / rho);
        }
        let c = d.iter().sum::<f64>() / d.len() as f64;
        for (&(k, r), di) in map.holders[s].iter().zip(&d) {
            y[k][part * lps[k].size() + r] = rho * (di - c);
        }
    }
}

/// `Ē_k v` stacked as `[re; im]`.
pub fn select_stacked(lp: &LocalProblem, v: &[f64]) -> Vec<f64> {
    let (re, im) = lp.select(v);
    re.into_iter().chain(im).collect()
}

/// `Σ_k Ē_kᵀ y_k`.
pub fn dual_sum(map: &CopyMap, lps: &[LocalProblem], y: &[Vec<f64>]) -> Vec<f64> {
    (0..2 * map.n_global)
        .map(|j| map.gather(j, y, lps).iter().sum())
        .collect()
}
