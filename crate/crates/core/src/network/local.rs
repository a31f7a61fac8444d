use nalgebra::DMatrix;
use num_complex::Complex64;

use super::{AdmittanceMatrix, CostPoly, Network};

/// Data for one line seen from the local bus, in neighbor order.
#[derive(Debug, Clone, PartialEq)]
pub struct LineData {
    pub line: usize,
    pub neighbor: usize,
    pub y: Complex64,
    pub i_max: Option<f64>,
    pub s_max: Option<f64>,
    pub p_max: Option<f64>,
}

/// Everything bus `k` needs to pose its own subproblem.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalProblem {
    pub k: usize,
    /// `N_k`: the bus itself, then its neighbors in ascending order.
    pub neighbors: Vec<usize>,
    /// Column of the global voltage vector copied into each local slot.
    pub e_map: Vec<usize>,
    pub g: Vec<f64>,
    pub b: Vec<f64>,
    /// Row `r` gives the real line current toward neighbor `r + 1`.
    pub c: DMatrix<f64>,
    pub d: DMatrix<f64>,
    pub lines: Vec<LineData>,
    pub v_min: Vec<f64>,
    pub v_max: Vec<f64>,
    pub pd: f64,
    pub qd: f64,
    pub pg_min: f64,
    pub pg_max: f64,
    pub qg_min: f64,
    pub qg_max: f64,
    pub cost: Option<CostPoly>,
    pub base_mva: f64,
}

impl LocalProblem {
    /// `|N_k|`.
    pub fn size(&self) -> usize {
        self.neighbors.len()
    }

    /// `E_k v` for a global vector laid out as `[v_re; v_im]`.
    pub fn select(&self, v_net: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let n_global = v_net.len() / 2;
        let re = self.e_map.iter().map(|&s| v_net[s]).collect();
        let im = self.e_map.iter().map(|&s| v_net[n_global + s]).collect();
        (re, im)
    }

    /// Injection box for `p + jq` (p.u.).
    pub fn injection_box(&self) -> ((f64, f64), (f64, f64)) {
        (
            (self.pg_min - self.pd, self.pg_max - self.pd),
            (self.qg_min - self.qd, self.qg_max - self.qd),
        )
    }
}

pub fn local_problem(net: &Network, y: &AdmittanceMatrix, k: usize) -> LocalProblem {
    let mut neighbors = vec![k];
    let mut nbrs: Vec<usize> = net
        .lines
        .iter()
        .filter(|l| l.from == k || l.to == k)
        .map(|l| l.other(k))
        .collect();
    nbrs.sort_unstable();
    nbrs.dedup();
    neighbors.extend(&nbrs);
    let n = neighbors.len();

    let g: Vec<f64> = neighbors.iter().map(|&s| y.g[(s, k)]).collect();
    let b: Vec<f64> = neighbors.iter().map(|&s| y.b[(s, k)]).collect();

    let mut c = DMatrix::zeros(n - 1, n);
    let mut d = DMatrix::zeros(n - 1, n);
    let mut lines = Vec::with_capacity(n - 1);
    for (r, &l) in nbrs.iter().enumerate() {
        let idx = net.line_between(k, l).expect("neighbor implies a line");
        let line = &net.lines[idx];
        c[(r, 0)] = line.y.re;
        c[(r, r + 1)] = -line.y.re;
        d[(r, 0)] = line.y.im;
        d[(r, r + 1)] = -line.y.im;
        lines.push(LineData {
            line: idx,
            neighbor: l,
            y: line.y,
            i_max: line.i_max,
            s_max: line.s_max,
            p_max: line.p_max,
        });
    }

    let bus = &net.buses[k];
    LocalProblem {
        k,
        e_map: neighbors.clone(),
        v_min: neighbors.iter().map(|&s| net.buses[s].v_min).collect(),
        v_max: neighbors.iter().map(|&s| net.buses[s].v_max).collect(),
        neighbors,
        g,
        b,
        c,
        d,
        lines,
        pd: bus.pd,
        qd: bus.qd,
        pg_min: bus.pg_min,
        pg_max: bus.pg_max,
        qg_min: bus.qg_min,
        qg_max: bus.qg_max,
        cost: bus.cost,
        base_mva: net.base_mva,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::build_admittance;
    use crate::network::tests::two_bus;

    #[test]
    fn two_bus_local_data() {
        let net = two_bus();
        let y = build_admittance(&net);
        let lp = local_problem(&net, &y, 0);
        assert_eq!(lp.neighbors, vec![0, 1]);
        assert_eq!(lp.g, vec![1.0, -1.0]);
        assert_eq!(lp.b, vec![-2.0, 2.0]);
        assert_eq!(lp.c.row(0).iter().copied().collect::<Vec<_>>(), vec![1.0, -1.0]);
        assert_eq!(lp.d.row(0).iter().copied().collect::<Vec<_>>(), vec![-2.0, 2.0]);

        let lp1 = local_problem(&net, &y, 1);
        assert_eq!(lp1.neighbors, vec![1, 0]);
        assert_eq!(lp1.select(&[1.0, 0.9, 0.0, 0.1]), (vec![0.9, 1.0], vec![0.1, 0.0]));
    }

    #[test]
    fn isolated_bus_has_empty_line_matrices() {
        let mut net = two_bus();
        net.buses.truncate(1);
        net.lines.clear();
        net.buses[0].shunt = Complex64::new(0.0, 0.5);
        let y = build_admittance(&net);
        let lp = local_problem(&net, &y, 0);
        assert_eq!(lp.size(), 1);
        assert_eq!(lp.c.nrows(), 0);
        assert_eq!(lp.d.nrows(), 0);
        assert_eq!(lp.b, vec![0.5]);
    }
}
