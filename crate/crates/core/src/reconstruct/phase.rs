use nalgebra::Vector3;

use crate::constants::PhysicalConstants;
use crate::error::Result;
use crate::eulerian::{Snapshot, SpectralField};
use crate::lagrangian::phase_rate;
use crate::so3::{euler_a, gauss_legendre, EulerAngles};

/// A point of `R^3 x SO(3)`.
pub type Point = (Vector3<f64>, EulerAngles);

/// Phase gradients recovered from element velocities:
/// `d_r S = (hbar/c) (A_inv^T qdot)_r`, `d_i S = (hbar/c) (A_inv thetadot)_i`.
pub fn gradient_from_velocities(
    qdot: &Vector3<f64>,
    thetadot: &Vector3<f64>,
    at: EulerAngles,
    k: &PhysicalConstants,
) -> Result<(Vector3<f64>, Vector3<f64>)> {
    let a_inv = euler_a(at)?.a_inv;
    let s = k.hbar / k.c;
    Ok((a_inv * thetadot * s, a_inv.transpose() * qdot * s))
}

/// Reduce `a - b` to `(-h/2, h/2]`.
pub fn wrap_difference(a: f64, b: f64, h: f64) -> f64 {
    let d = (a - b) / h;
    (d - d.round()) * h
}

/// `S(to) - S(from)` by integrating the velocity-derived gradients along the
/// straight coordinate segment. The path starts as `segments` pieces of
/// 4-point Gauss-Legendre; a piece is bisected until its halves agree with it
/// to `1e-11 hbar`, which resolves paths that pass close to a node. Near a
/// node the integrand itself carries rounding noise, so refinement stops after
/// a fixed budget of pieces.
pub fn line_integral_phase(snap: &Snapshot<'_>, from: Point, to: Point, segments: usize) -> Result<f64> {
    let path = Path {
        snap,
        x0: from.0,
        dx: to.0 - from.0,
        a0: from.1.to_vector(),
        da: to.1.to_vector() - from.1.to_vector(),
        rule: gauss_legendre(4),
    };
    let n = segments.max(1);
    let tol = 1e-11 * snap.field.consts.hbar / n as f64;
    let mut budget = MAX_PIECES;
    let mut total = 0.0;
    for seg in 0..n {
        let (u0, u1) = (seg as f64 / n as f64, (seg + 1) as f64 / n as f64);
        let whole = path.piece(u0, u1)?;
        total += path.refine(u0, u1, whole, tol, &mut budget)?;
    }
    Ok(total)
}

const MAX_PIECES: usize = 1 << 14;

struct Path<'a, 'b> {
    snap: &'a Snapshot<'b>,
    x0: Vector3<f64>,
    dx: Vector3<f64>,
    a0: Vector3<f64>,
    da: Vector3<f64>,
    rule: (Vec<f64>, Vec<f64>),
}

impl Path<'_, '_> {
    fn piece(&self, u0: f64, u1: f64) -> Result<f64> {
        let k = self.snap.field.consts;
        let (xs, ws) = &self.rule;
        let mut total = 0.0;
        for (s, w) in xs.iter().zip(ws) {
            let u = u0 + 0.5 * (s + 1.0) * (u1 - u0);
            let x = self.x0 + self.dx * u;
            let at = EulerAngles::from_array((self.a0 + self.da * u).into());
            let h = self.snap.hydro(&x, at)?;
            let (gx, ga) = gradient_from_velocities(&h.velocity, &h.angle_rate, at, &k)?;
            total += 0.5 * w * (u1 - u0) * (gx.dot(&self.dx) + ga.dot(&self.da));
        }
        Ok(total)
    }

    fn refine(&self, u0: f64, u1: f64, whole: f64, tol: f64, budget: &mut usize) -> Result<f64> {
        let mid = 0.5 * (u0 + u1);
        let left = self.piece(u0, mid)?;
        let right = self.piece(mid, u1)?;
        *budget = budget.saturating_sub(2);
        let floor = 1e-12 * (left.abs() + right.abs());
        if (left + right - whole).abs() <= tol.max(floor) || *budget == 0 {
            return Ok(left + right);
        }
        Ok(self.refine(u0, mid, left, tol, budget)? + self.refine(mid, u1, right, tol, budget)?)
    }
}

/// Phase history at a fixed reference point, with the time gauge fixed by the
/// Hamilton-Jacobi equation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferenceGauge {
    pub point: Point,
    pub t: f64,
    /// `hbar arg psi_0` at the reference point.
    pub s_initial: f64,
    /// `S(ref, t)`
    pub s_now: f64,
    /// Gauge function `f(t) = (S(ref, t) - S(ref, 0)) / hbar`.
    pub f_t: f64,
}

/// Integrate `dS/dt = -(c/hbar) lambda_i S d_i S - Q` at the fixed point
/// `point` from 0 to `t` with `segments` pieces of 4-point Gauss-Legendre.
pub fn reference_gauge(field: &SpectralField, point: Point, t: f64, segments: usize) -> Result<ReferenceGauge> {
    let k = field.consts;
    let s_initial = k.hbar * field.at_time(0.0).psi(&point.0, point.1).arg();
    let (xs, ws) = gauss_legendre(4);
    let n = segments.max(1);
    let mut integral = 0.0;
    // Check the endpoints as well, so a node at t itself is reported.
    field.at_time(0.0).hydro(&point.0, point.1)?;
    field.at_time(t).hydro(&point.0, point.1)?;
    for seg in 0..n {
        for (s, w) in xs.iter().zip(&ws) {
            let tau = t * (seg as f64 + 0.5 * (s + 1.0)) / n as f64;
            let h = field.at_time(tau).hydro(&point.0, point.1)?;
            let dsdt = -k.c / k.hbar * h.lambda_s.dot(&h.grad_x_s) - h.quantum_potential;
            integral += 0.5 * w * t / n as f64 * dsdt;
        }
    }
    Ok(ReferenceGauge {
        point,
        t,
        s_initial,
        s_now: s_initial + integral,
        f_t: integral / k.hbar,
    })
}

/// Phase at `query` by the line-integral route from a gauged reference point.
pub fn line_integral_phase_from(
    gauge: &ReferenceGauge,
    snap: &Snapshot<'_>,
    query: Point,
    segments: usize,
) -> Result<f64> {
    Ok(gauge.s_now + line_integral_phase(snap, gauge.point, query, segments)?)
}

/// Side-by-side phase values from the two routes.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseComparison {
    pub weber: Vec<f64>,
    pub line: Vec<f64>,
    pub f_t: f64,
    /// Largest `|S_weber - S_line|` modulo `h`.
    pub max_discrepancy: f64,
}

/// Compare transported phases at `queries` (one Weber value each) with the
/// line-integral route from `reference`.
pub fn reconstruct_phase(
    field: &SpectralField,
    t: f64,
    reference: Point,
    queries: &[Point],
    weber: &[f64],
    segments: usize,
) -> Result<PhaseComparison> {
    let gauge = reference_gauge(field, reference, t, segments)?;
    let snap = field.at_time(t);
    let h = field.consts.h();
    let mut line = Vec::with_capacity(queries.len());
    let mut worst = 0.0f64;
    for (q, w) in queries.iter().zip(weber) {
        let s = line_integral_phase_from(&gauge, &snap, *q, segments)?;
        worst = worst.max(wrap_difference(*w, s, h).abs());
        line.push(s);
    }
    Ok(PhaseComparison {
        weber: weber.to_vec(),
        line,
        f_t: gauge.f_t,
        max_discrepancy: worst,
    })
}

/// Weber integrand evaluated from the Eulerian state, exposed for callers that
/// integrate phase outside the trajectory integrator.
pub fn weber_rate(snap: &Snapshot<'_>, p: Point) -> Result<f64> {
    let h = snap.hydro(&p.0, p.1)?;
    Ok(phase_rate(&h, &snap.field.consts))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wrapping() {
        let h = 2.0 * std::f64::consts::PI;
        assert!((wrap_difference(7.0, 0.5, h) - (6.5 - h)).abs() < 1e-14);
        assert!(wrap_difference(3.0 * h + 0.1, 0.1, h).abs() < 1e-12);
    }
}
