//! Phase circulation around closed loops in `R^3 x SO(3)`.

use std::f64::consts::TAU;

use nalgebra::Vector3;

use super::spectral::Snapshot;
use crate::error::{Error, Result};
use crate::so3::{gauss_legendre, EulerAngles};

/// Rounding tolerance on `loop integral / h`.
pub const WINDING_TOL: f64 = 0.01;

/// Closed polyline in `(x, alpha, beta, gamma)`. The last point coincides with
/// the first, up to whole turns in `beta` and `gamma`.
#[derive(Debug, Clone, PartialEq)]
pub struct Loop {
    pub points: Vec<(Vector3<f64>, EulerAngles)>,
}

impl Loop {
    pub fn new(points: Vec<(Vector3<f64>, EulerAngles)>) -> Result<Self> {
        if points.len() < 3 {
            return Err(Error::InvalidConfig("a loop needs at least 3 points".into()));
        }
        let (x0, a0) = points[0];
        let (x1, a1) = points[points.len() - 1];
        let turns = |d: f64| (d / TAU - (d / TAU).round()).abs() < 1e-12;
        let closed = (x1 - x0).norm() < 1e-12
            && (a1.alpha - a0.alpha).abs() < 1e-12
            && turns(a1.beta - a0.beta)
            && turns(a1.gamma - a0.gamma);
        if !closed {
            return Err(Error::InvalidConfig("loop is not closed".into()));
        }
        Ok(Self { points })
    }

    /// Full turn in `beta` at fixed `x`, `alpha`, `gamma`.
    pub fn beta_circle(x: Vector3<f64>, alpha: f64, gamma: f64, n: usize) -> Self {
        let points = (0..=n)
            .map(|j| (x, EulerAngles::new(alpha, TAU * j as f64 / n as f64, gamma)))
            .collect();
        Self { points }
    }

    /// Circle of radius `radius` in the coordinate plane `(mu, nu)` of
    /// `(x1, x2, x3, alpha, beta, gamma)` around `center`.
    pub fn coordinate_circle(center: (Vector3<f64>, EulerAngles), mu: usize, nu: usize, radius: f64, n: usize) -> Self {
        let points = (0..=n)
            .map(|j| {
                let phi = TAU * (j % n) as f64 / n as f64;
                let mut y = [0.0; 6];
                y[..3].copy_from_slice(center.0.as_slice());
                y[3..].copy_from_slice(&center.1.to_array());
                y[mu] += radius * phi.cos();
                y[nu] += radius * phi.sin();
                (Vector3::new(y[0], y[1], y[2]), EulerAngles::new(y[3], y[4], y[5]))
            })
            .collect();
        Self { points }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Winding {
    pub n: i64,
    /// `loop integral / h` before rounding.
    pub value: f64,
    pub rounding_error: f64,
}

/// `loop integral of d_i S dx_i + d_r S d alpha_r`, each segment by 4-point
/// Gauss-Legendre.
pub fn loop_integral(snap: &Snapshot<'_>, lp: &Loop) -> Result<f64> {
    let (xs, ws) = gauss_legendre(4);
    let mut total = 0.0;
    for pair in lp.points.windows(2) {
        let (xa, aa) = pair[0];
        let (xb, ab) = pair[1];
        let dx = xb - xa;
        let da = ab.to_vector() - aa.to_vector();
        for (s, w) in xs.iter().zip(&ws) {
            let u = 0.5 * (s + 1.0);
            let x = xa + dx * u;
            let at = EulerAngles::from_array((aa.to_vector() + da * u).into());
            let h = snap.hydro(&x, at)?;
            total += 0.5 * w * (h.grad_x_s.dot(&dx) + h.grad_angle_s.dot(&da));
        }
    }
    Ok(total)
}

/// Winding number of the phase around `lp`.
pub fn circulation(snap: &Snapshot<'_>, lp: &Loop) -> Result<Winding> {
    let value = loop_integral(snap, lp)? / snap.field.consts.h();
    let n = value.round();
    let rounding_error = (value - n).abs();
    if rounding_error >= WINDING_TOL {
        return Err(Error::NonIntegerWinding { value });
    }
    Ok(Winding {
        n: n as i64,
        value,
        rounding_error,
    })
}
