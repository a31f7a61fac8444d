//! Halfspaces approximating the annulus `v_min ≤ |v| ≤ v_max` and the
//! line-flow circles.

use serde::{Deserialize, Serialize};

use crate::error::CutError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sense {
    /// `a·x + b·y ≥ c`
    Geq,
    /// `a·x + b·y ≤ c`
    Leq,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Halfspace {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub sense: Sense,
}

impl Halfspace {
    pub fn lhs(&self, x: f64, y: f64) -> f64 {
        self.a * x + self.b * y
    }

    /// Amount by which `(x, y)` violates the cut, `<= 0` when satisfied.
    pub fn violation(&self, x: f64, y: f64) -> f64 {
        match self.sense {
            Sense::Geq => self.c - self.lhs(x, y),
            Sense::Leq => self.lhs(x, y) - self.c,
        }
    }

    pub fn contains(&self, x: f64, y: f64, tol: f64) -> bool {
        self.violation(x, y) <= tol
    }

    /// Coefficients in `a·x + b·y ≤ c` form.
    pub fn as_leq(&self) -> (f64, f64, f64) {
        match self.sense {
            Sense::Geq => (-self.a, -self.b, -self.c),
            Sense::Leq => (self.a, self.b, self.c),
        }
    }

    /// Point where the boundary line is closest to the origin.
    pub fn foot(&self) -> (f64, f64) {
        let nn = self.a * self.a + self.b * self.b;
        (self.a * self.c / nn, self.b * self.c / nn)
    }
}

fn check(point: (f64, f64), radius: f64) -> Result<(), CutError> {
    if !(radius > 0.0) {
        return Err(CutError::NonPositiveRadius(radius));
    }
    if point == (0.0, 0.0) {
        return Err(CutError::DegeneratePoint);
    }
    Ok(())
}

/// Tangent to the circle of radius `r` at the radial projection of
/// `point`, as `a·x + b·y` against `r²` (or `r` when `point` is on the
/// imaginary axis).
fn tangent(point: (f64, f64), r: f64) -> (f64, f64, f64) {
    let (re, im) = point;
    if re != 0.0 {
        let t = im / re;
        let a = re.signum() * (r * r / (1.0 + t * t)).sqrt();
        (a, a * t, r * r)
    } else {
        (0.0, im.signum(), r)
    }
}

/// Inner-circle cut through the radial projection of `v_check`:
/// keeps the side away from the origin.
pub fn donut_halfspace(v_check: (f64, f64), v_min: f64) -> Result<Halfspace, CutError> {
    check(v_check, v_min)?;
    let (a, b, c) = tangent(v_check, v_min);
    Ok(Halfspace {
        a,
        b,
        c,
        sense: Sense::Geq,
    })
}

/// Outer cut tangent to the circle of radius `radius`; used for the
/// voltage cap and for the line current and apparent power circles.
pub fn outer_cut(v_point: (f64, f64), radius: f64) -> Result<Halfspace, CutError> {
    check(v_point, radius)?;
    let (a, b, c) = tangent(v_point, radius);
    Ok(Halfspace {
        a,
        b,
        c,
        sense: Sense::Leq,
    })
}

/// Regular octagon circumscribing the circle of radius `v_max`, one cut
/// tangent at each multiple of π/4.
pub fn initial_octagon(v_max: f64) -> Result<Vec<Halfspace>, CutError> {
    const DIRS: [(f64, f64); 8] = [
        (1.0, 0.0),
        (1.0, 1.0),
        (0.0, 1.0),
        (-1.0, 1.0),
        (-1.0, 0.0),
        (-1.0, -1.0),
        (0.0, -1.0),
        (1.0, -1.0),
    ];
    DIRS.iter().map(|&d| outer_cut(d, v_max)).collect()
}
