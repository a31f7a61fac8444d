use nalgebra::DMatrix;
use num_complex::Complex64;

use super::Network;

/// Bus admittance matrix `Y = G + jB`.
#[derive(Debug, Clone, PartialEq)]
pub struct AdmittanceMatrix {
    pub g: DMatrix<f64>,
    pub b: DMatrix<f64>,
}

impl AdmittanceMatrix {
    pub fn n(&self) -> usize {
        self.g.nrows()
    }

    pub fn entry(&self, l: usize, s: usize) -> Complex64 {
        Complex64::new(self.g[(l, s)], self.b[(l, s)])
    }

    /// Current injections `i = Y v` for voltages split into parts.
    pub fn currents(&self, v_re: &[f64], v_im: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let n = self.n();
        let mut i_re = vec![0.0; n];
        let mut i_im = vec![0.0; n];
        for l in 0..n {
            for s in 0..n {
                let (g, b) = (self.g[(l, s)], self.b[(l, s)]);
                i_re[l] += g * v_re[s] - b * v_im[s];
                i_im[l] += b * v_re[s] + g * v_im[s];
            }
        }
        (i_re, i_im)
    }
}

/// Diagonal: shunt plus the admittances of every incident line.
/// Off-diagonal: minus the admittance of the joining line.
pub fn build_admittance(net: &Network) -> AdmittanceMatrix {
    let n = net.n_buses();
    let mut g = DMatrix::zeros(n, n);
    let mut b = DMatrix::zeros(n, n);
    for bus in &net.buses {
        g[(bus.id, bus.id)] += bus.shunt.re;
        b[(bus.id, bus.id)] += bus.shunt.im;
    }
    for line in &net.lines {
        let (f, t, y) = (line.from, line.to, line.y);
        g[(f, f)] += y.re;
        b[(f, f)] += y.im;
        g[(t, t)] += y.re;
        b[(t, t)] += y.im;
        g[(f, t)] -= y.re;
        b[(f, t)] -= y.im;
        g[(t, f)] -= y.re;
        b[(t, f)] -= y.im;
    }
    AdmittanceMatrix { g, b }
}
