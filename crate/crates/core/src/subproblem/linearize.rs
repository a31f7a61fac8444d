//! Bilinear equality rows of the local problem and their first-order
//! expansions.

use super::vars::{Layout, LocalVars};

/// `Σ coeffs·z = rhs`.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineRow {
    pub coeffs: Vec<(usize, f64)>,
    pub rhs: f64,
}

impl AffineRow {
    /// `Σ coeffs·z − rhs`.
    pub fn residual(&self, z: &[f64]) -> f64 {
        self.coeffs.iter().map(|&(i, c)| c * z[i]).sum::<f64>() - self.rhs
    }
}

/// `Σ linear·z + Σ c·z_i·z_j = rhs`.
#[derive(Debug, Clone, PartialEq)]
pub struct BilinearRow {
    pub linear: Vec<(usize, f64)>,
    pub terms: Vec<(f64, usize, usize)>,
    pub rhs: f64,
}

impl BilinearRow {
    pub fn residual(&self, z: &[f64]) -> f64 {
        let lin: f64 = self.linear.iter().map(|&(i, c)| c * z[i]).sum();
        let bil: f64 = self.terms.iter().map(|&(c, i, j)| c * z[i] * z[j]).sum();
        lin + bil - self.rhs
    }

    /// Gradient of the residual at `z`, as sparse entries (may repeat).
    pub fn gradient(&self, z: &[f64]) -> Vec<(usize, f64)> {
        let mut g = self.linear.clone();
        for &(c, i, j) in &self.terms {
            g.push((i, c * z[j]));
            g.push((j, c * z[i]));
        }
        g
    }

    /// Constant Hessian entries `(i, j, value)`, symmetric.
    pub fn hessian(&self) -> Vec<(usize, usize, f64)> {
        self.terms
            .iter()
            .flat_map(|&(c, i, j)| [(i, j, c), (j, i, c)])
            .collect()
    }

    /// First-order Taylor expansion at `zhat`: `x·y ≈ x̂y + xŷ − x̂ŷ`.
    pub fn linearize(&self, zhat: &[f64]) -> AffineRow {
        let mut coeffs = self.linear.clone();
        let mut rhs = self.rhs;
        for &(c, i, j) in &self.terms {
            coeffs.push((i, c * zhat[j]));
            coeffs.push((j, c * zhat[i]));
            rhs += c * zhat[i] * zhat[j];
        }
        AffineRow { coeffs, rhs }
    }
}

/// Injection rows `p = v_re·i_re + v_im·i_im`, `q = v_im·i_re − v_re·i_im`
/// using the bus's own voltage.
pub fn power_injection_rows(layout: Layout) -> [BilinearRow; 2] {
    let (vr, vi) = (layout.v_re(0), layout.v_im(0));
    [
        BilinearRow {
            linear: vec![(Layout::P, 1.0)],
            terms: vec![(-1.0, vr, Layout::I_RE), (-1.0, vi, Layout::I_IM)],
            rhs: 0.0,
        },
        BilinearRow {
            linear: vec![(Layout::Q, 1.0)],
            terms: vec![(-1.0, vi, Layout::I_RE), (1.0, vr, Layout::I_IM)],
            rhs: 0.0,
        },
    ]
}

/// Line power rows, `p` rows first then `q` rows, one per line.
pub fn line_power_rows(layout: Layout) -> Vec<BilinearRow> {
    let (vr, vi) = (layout.v_re(0), layout.v_im(0));
    let m = layout.lines();
    let p_rows = (0..m).map(|r| BilinearRow {
        linear: vec![(layout.lp(r), 1.0)],
        terms: vec![(-1.0, vr, layout.li_re(r)), (-1.0, vi, layout.li_im(r))],
        rhs: 0.0,
    });
    let q_rows = (0..m).map(|r| BilinearRow {
        linear: vec![(layout.lq(r), 1.0)],
        terms: vec![(-1.0, vi, layout.li_re(r)), (1.0, vr, layout.li_im(r))],
        rhs: 0.0,
    });
    p_rows.chain(q_rows).collect()
}

pub fn linearize_power_injection(zhat: &LocalVars) -> Vec<AffineRow> {
    power_injection_rows(zhat.layout)
        .iter()
        .map(|r| r.linearize(&zhat.data))
        .collect()
}

pub fn linearize_line_power(zhat: &LocalVars) -> Vec<AffineRow> {
    line_power_rows(zhat.layout)
        .iter()
        .map(|r| r.linearize(&zhat.data))
        .collect()
}
