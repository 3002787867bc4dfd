//! Exact time evolution of the helicity spinor.
//!
//! Each Fourier mode obeys `i hbar dG/dt = c (k . J) G`. With `N = k^ . J / hbar`
//! the spin-1 identity `N^3 = N` gives the closed form
//! `exp(-i theta N) = 1 - i sin(theta) N + (cos(theta) - 1) N^2`, `theta = c |k| t`,
//! so propagation carries no time-discretization error at all.

use std::f64::consts::FRAC_1_SQRT_2;

use nalgebra::{Matrix3, Vector3};
use num_complex::Complex64;

use crate::constants::PhysicalConstants;
use crate::error::{Error, Result};
use crate::field::{rs_from_spinor, Fft3, GridSpec, SpinorField};

type C64 = Complex64;

/// Modes with amplitude below this fraction of the largest one are dropped
/// when a grid field is turned into a mode sum.
pub const MODE_TRUNCATION: f64 = 1e-13;

/// `|psi|^2 <= (3 / 8 pi^2) |G|^2` for every orientation.
pub const PSI_BOUND: f64 = 3.0 / (8.0 * std::f64::consts::PI * std::f64::consts::PI);

/// `k^ . J / hbar` for a unit vector (hbar-free).
pub fn helicity_generator(khat: &Vector3<f64>) -> Matrix3<C64> {
    let r = FRAC_1_SQRT_2;
    let (x, y, z) = (khat.x, khat.y, khat.z);
    let c = C64::new;
    let off_p = c(r * x, r * y);
    let off_m = c(r * x, -r * y);
    Matrix3::new(
        c(z, 0.0),
        off_m,
        c(0.0, 0.0),
        off_p,
        c(0.0, 0.0),
        off_m,
        c(0.0, 0.0),
        off_p,
        c(-z, 0.0),
    )
}

/// `exp(-i c t (k . J) / hbar)`
pub fn mode_propagator(k: &Vector3<f64>, t: f64, c: f64) -> Matrix3<C64> {
    let kn = k.norm();
    if kn == 0.0 || t == 0.0 {
        return Matrix3::identity();
    }
    let n = helicity_generator(&(k / kn));
    let (s, co) = (c * kn * t).sin_cos();
    let n2 = n * n;
    Matrix3::identity() - n * C64::new(0.0, s) + n2 * C64::new(co - 1.0, 0.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mode {
    pub k: Vector3<f64>,
    pub amp: Vector3<C64>,
}

/// Per-wavevector propagation matrices for a whole grid at time `t`.
#[derive(Debug, Clone)]
pub struct SpectralPropagator {
    pub t: f64,
    pub grid: GridSpec,
    pub matrices: Vec<Matrix3<C64>>,
}

impl SpectralPropagator {
    pub fn new(grid: &GridSpec, t: f64, c: f64) -> Self {
        let matrices = (0..grid.len())
            .map(|idx| {
                // Nyquist components are ambiguous in sign; average over both.
                let variants = grid_wavevectors(grid, idx);
                let w = 1.0 / variants.len() as f64;
                variants
                    .iter()
                    .map(|k| mode_propagator(k, t, c))
                    .fold(Matrix3::zeros(), |acc, m| acc + m)
                    * C64::new(w, 0.0)
            })
            .collect();
        Self {
            t,
            grid: *grid,
            matrices,
        }
    }

    pub fn apply(&self, field: &SpinorField) -> SpinorField {
        let fft = Fft3::new(&self.grid);
        let mut comps = split_components(field);
        for c in comps.iter_mut() {
            fft.forward(c);
        }
        for idx in 0..self.grid.len() {
            let g = Vector3::new(comps[0][idx], comps[1][idx], comps[2][idx]);
            let out = self.matrices[idx] * g;
            for a in 0..3 {
                comps[a][idx] = out[a];
            }
        }
        for c in comps.iter_mut() {
            fft.inverse(c);
        }
        join_components(self.grid, comps)
    }
}

/// All wavevectors aliasing to grid index `idx` (two per Nyquist axis).
fn grid_wavevectors(grid: &GridSpec, idx: usize) -> Vec<Vector3<f64>> {
    let ijk = grid.unravel(idx);
    let mut out = vec![Vector3::zeros()];
    for axis in 0..3 {
        let m = grid.mode_number(axis, ijk[axis]);
        let k = grid.wavenumber(axis, m);
        if grid.is_nyquist(axis, ijk[axis]) {
            let mut next = Vec::with_capacity(out.len() * 2);
            for v in &out {
                let mut a: Vector3<f64> = *v;
                a[axis] = k;
                let mut b = *v;
                b[axis] = -k;
                next.push(a);
                next.push(b);
            }
            out = next;
        } else {
            for v in out.iter_mut() {
                v[axis] = k;
            }
        }
    }
    out
}

fn split_components(field: &SpinorField) -> [Vec<C64>; 3] {
    [0, 1, 2].map(|a| field.g.iter().map(|g| g[a]).collect())
}

fn join_components(grid: GridSpec, comps: [Vec<C64>; 3]) -> SpinorField {
    SpinorField {
        grid,
        g: (0..grid.len())
            .map(|i| Vector3::new(comps[0][i], comps[1][i], comps[2][i]))
            .collect(),
    }
}

/// Evolve a grid spinor field to time `t` mode by mode.
pub fn evolve_spinor(g0: &SpinorField, t: f64, k: &PhysicalConstants) -> SpinorField {
    SpectralPropagator::new(&g0.grid, t, k.c).apply(g0)
}

/// The spinor field as an explicit sum of plane-wave modes, evaluable at any
/// `(x, t)`: spectral in space, exact in time.
#[derive(Debug, Clone)]
pub struct SpectralField {
    pub grid: GridSpec,
    pub consts: PhysicalConstants,
    pub modes: Vec<Mode>,
    rho_scale: f64,
}

impl SpectralField {
    /// Build from grid data, rejecting non-transverse initial fields.
    pub fn from_spinor(g: &SpinorField, consts: PhysicalConstants) -> Result<Self> {
        let field = Self::from_spinor_unchecked(g, consts);
        let worst = field.max_longitudinal();
        if worst > 1e-10 {
            return Err(Error::ConstraintViolation(format!(
                "initial field is not transverse: max |k . F_k| = {worst:e}"
            )));
        }
        Ok(field)
    }

    pub fn from_spinor_unchecked(g: &SpinorField, consts: PhysicalConstants) -> Self {
        let grid = g.grid;
        let fft = Fft3::new(&grid);
        let mut comps = split_components(g);
        let n = grid.len() as f64;
        for c in comps.iter_mut() {
            fft.forward(c);
            c.iter_mut().for_each(|v| *v /= n);
        }
        let mut modes = Vec::new();
        for idx in 0..grid.len() {
            let amp = Vector3::new(comps[0][idx], comps[1][idx], comps[2][idx]);
            let variants = grid_wavevectors(&grid, idx);
            let w = 1.0 / variants.len() as f64;
            for k in variants {
                modes.push(Mode {
                    k,
                    amp: amp * C64::new(w, 0.0),
                });
            }
        }
        let max_amp = modes.iter().map(|m| m.amp.norm()).fold(0.0, f64::max);
        modes.retain(|m| m.amp.norm() > MODE_TRUNCATION * max_amp);
        let max_g2 = g.g.iter().map(|v| v.norm_squared()).fold(0.0, f64::max);
        Self {
            grid,
            consts,
            modes,
            rho_scale: PSI_BOUND * max_g2,
        }
    }

    /// Construct directly from modes (wavevectors need not lie on a grid).
    pub fn from_modes(grid: GridSpec, consts: PhysicalConstants, modes: Vec<Mode>) -> Self {
        let mut f = Self {
            grid,
            consts,
            modes,
            rho_scale: 0.0,
        };
        let snap = f.at_time(0.0);
        let max_g2 = (0..grid.len())
            .map(|i| snap.local(&grid.point(i)).g.norm_squared())
            .fold(0.0, f64::max);
        f.rho_scale = PSI_BOUND * max_g2;
        f
    }

    /// Reference scale `max |psi|^2` used by the node threshold.
    pub fn rho_scale(&self) -> f64 {
        self.rho_scale
    }

    pub fn with_constants(&self, consts: PhysicalConstants) -> Self {
        Self { consts, ..self.clone() }
    }

    fn max_longitudinal(&self) -> f64 {
        self.modes
            .iter()
            .filter(|m| m.k.norm() > 0.0)
            .map(|m| {
                let f = rs_from_spinor(&m.amp);
                let kh = m.k / m.k.norm();
                (f[0] * kh.x + f[1] * kh.y + f[2] * kh.z).norm()
            })
            .fold(0.0, f64::max)
    }

    /// Freeze the mode amplitudes at time `t`.
    pub fn at_time(&self, t: f64) -> Snapshot<'_> {
        let amps = self
            .modes
            .iter()
            .map(|m| mode_propagator(&m.k, t, self.consts.c) * m.amp)
            .collect();
        Snapshot { field: self, t, amps }
    }

    /// Sample on the native grid at time `t`.
    pub fn to_grid(&self, t: f64) -> SpinorField {
        let snap = self.at_time(t);
        SpinorField {
            grid: self.grid,
            g: (0..self.grid.len())
                .map(|i| snap.local(&self.grid.point(i)).g)
                .collect(),
        }
    }
}

/// `G` and its spatial gradient at one point. `dg[i] = d_i G`.
#[derive(Debug, Clone, Copy)]
pub struct LocalSpinor {
    pub g: Vector3<C64>,
    pub dg: [Vector3<C64>; 3],
}

/// Mode amplitudes frozen at one instant.
#[derive(Debug, Clone)]
pub struct Snapshot<'a> {
    pub field: &'a SpectralField,
    pub t: f64,
    amps: Vec<Vector3<C64>>,
}

impl Snapshot<'_> {
    pub fn local(&self, x: &Vector3<f64>) -> LocalSpinor {
        let mut g = Vector3::zeros();
        let mut dg = [Vector3::zeros(); 3];
        for (m, amp) in self.field.modes.iter().zip(&self.amps) {
            let (s, c) = m.k.dot(x).sin_cos();
            let term = amp * C64::new(c, s);
            g += term;
            for i in 0..3 {
                if m.k[i] != 0.0 {
                    dg[i] += term * C64::new(0.0, m.k[i]);
                }
            }
        }
        LocalSpinor { g, dg }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::so3::SpinOperatorSet;

    #[test]
    fn helicity_generator_matches_j() {
        let ops = SpinOperatorSet::new(1.0);
        let k = Vector3::new(0.3, -0.5, 0.8).normalize();
        let expect = ops.j[0] * C64::new(k.x, 0.0) + ops.j[1] * C64::new(k.y, 0.0) + ops.j[2] * C64::new(k.z, 0.0);
        let n = helicity_generator(&k);
        assert!((n - expect).norm() < 1e-14);
        assert!((n * n * n - n).norm() < 1e-14);
    }

    #[test]
    fn propagator_is_unitary_and_composes() {
        let k = Vector3::new(1.0, 2.0, -0.5);
        let p1 = mode_propagator(&k, 0.3, 1.0);
        let p2 = mode_propagator(&k, 0.45, 1.0);
        let p12 = mode_propagator(&k, 0.75, 1.0);
        assert!((p1 * p1.adjoint() - Matrix3::identity()).norm() < 1e-14);
        assert!((p1 * p2 - p12).norm() < 1e-14);
        assert!((mode_propagator(&k, -0.3, 1.0) * p1 - Matrix3::identity()).norm() < 1e-14);
    }
}
