//! The four equivalent field descriptions and conversions among them:
//! `(E, B)`, the Riemann-Silberstein vector `F`, the helicity spinor `G_a`,
//! and the angular wavefunction `psi(x, alpha) = G_a u_a(alpha)`.

mod grid;
mod observables;

pub use grid::{spectral_derivative, Fft3, GridSpec};
pub use observables::{
    check_divergence, energy_angular, energy_em, energy_rs, energy_spinor, poynting_angular, poynting_em, poynting_rs,
    poynting_spinor, spinor_from_em_point, Observables,
};

use std::f64::consts::FRAC_1_SQRT_2;

use nalgebra::Vector3;
use num_complex::Complex64;

use crate::constants::PhysicalConstants;
use crate::error::{Error, Result};
use crate::so3::{AngularQuadrature, EulerAngles, SpinBasis};

pub type C64 = Complex64;

#[derive(Debug, Clone, PartialEq)]
pub struct EMFieldGrid {
    pub grid: GridSpec,
    pub e: Vec<Vector3<f64>>,
    pub b: Vec<Vector3<f64>>,
}

impl EMFieldGrid {
    pub fn new(grid: GridSpec, e: Vec<Vector3<f64>>, b: Vec<Vector3<f64>>) -> Result<Self> {
        check_len(grid.len(), e.len())?;
        check_len(grid.len(), b.len())?;
        if e.iter().chain(&b).any(|v| !v.iter().all(|x| x.is_finite())) {
            return Err(Error::ConstraintViolation("non-finite field entry".into()));
        }
        Ok(Self { grid, e, b })
    }

    /// Sample `(E(x), B(x))` on the grid.
    pub fn from_fn<F>(grid: GridSpec, f: F) -> Self
    where
        F: Fn(Vector3<f64>) -> (Vector3<f64>, Vector3<f64>),
    {
        let (e, b) = (0..grid.len()).map(|i| f(grid.point(i))).unzip();
        Self { grid, e, b }
    }

    /// `int (eps0/2)(E^2 + c^2 B^2) d^3x`
    pub fn energy(&self, k: &PhysicalConstants) -> f64 {
        let dv: f64 = self.grid.spacing.iter().product();
        self.e.iter().zip(&self.b).map(|(e, b)| energy_em(e, b, k)).sum::<f64>() * dv
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RSField {
    pub grid: GridSpec,
    pub f: Vec<Vector3<C64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpinorField {
    pub grid: GridSpec,
    /// `(G_1, G_0, G_-1)` per grid point.
    pub g: Vec<Vector3<C64>>,
}

impl SpinorField {
    pub fn new(grid: GridSpec, g: Vec<Vector3<C64>>) -> Result<Self> {
        check_len(grid.len(), g.len())?;
        Ok(Self { grid, g })
    }

    pub fn zeros(grid: GridSpec) -> Self {
        Self {
            grid,
            g: vec![Vector3::zeros(); grid.len()],
        }
    }

    /// `int G_a^* G_a d^3x`
    pub fn energy(&self) -> f64 {
        let dv: f64 = self.grid.spacing.iter().product();
        self.g.iter().map(|g| g.norm_squared()).sum::<f64>() * dv
    }

    pub fn psi_at(&self, idx: usize, angles: EulerAngles) -> C64 {
        psi_eval(&self.g[idx], angles)
    }

    pub fn from_em(f: &EMFieldGrid, k: &PhysicalConstants) -> Self {
        rs_to_spinor(&em_to_rs(f, k))
    }

    pub fn to_em(&self, k: &PhysicalConstants) -> EMFieldGrid {
        rs_to_em(&spinor_to_rs(self), k)
    }
}

fn check_len(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::ShapeMismatch { expected, found });
    }
    Ok(())
}

/// `F = sqrt(eps0/2) (E + i c B)`
pub fn rs_from_em(e: &Vector3<f64>, b: &Vector3<f64>, k: &PhysicalConstants) -> Vector3<C64> {
    let s = (k.eps0 / 2.0).sqrt();
    Vector3::from_fn(|i, _| C64::new(s * e[i], s * k.c * b[i]))
}

pub fn em_from_rs(f: &Vector3<C64>, k: &PhysicalConstants) -> (Vector3<f64>, Vector3<f64>) {
    let s = (k.eps0 / 2.0).sqrt();
    (f.map(|v| v.re / s), f.map(|v| v.im / (s * k.c)))
}

/// `G = U F`, written out component-wise.
pub fn spinor_from_rs(f: &Vector3<C64>) -> Vector3<C64> {
    let i = C64::i();
    Vector3::new(
        (-f[0] + i * f[1]) * FRAC_1_SQRT_2,
        f[2],
        (f[0] + i * f[1]) * FRAC_1_SQRT_2,
    )
}

/// `F = U^-1 G`
pub fn rs_from_spinor(g: &Vector3<C64>) -> Vector3<C64> {
    let i = C64::i();
    Vector3::new((g[2] - g[0]) * FRAC_1_SQRT_2, -i * (g[2] + g[0]) * FRAC_1_SQRT_2, g[1])
}

pub fn em_to_rs(f: &EMFieldGrid, k: &PhysicalConstants) -> RSField {
    RSField {
        grid: f.grid,
        f: f.e.iter().zip(&f.b).map(|(e, b)| rs_from_em(e, b, k)).collect(),
    }
}

pub fn rs_to_em(f: &RSField, k: &PhysicalConstants) -> EMFieldGrid {
    let (e, b) = f.f.iter().map(|v| em_from_rs(v, k)).unzip();
    EMFieldGrid { grid: f.grid, e, b }
}

pub fn rs_to_spinor(f: &RSField) -> SpinorField {
    SpinorField {
        grid: f.grid,
        g: f.f.iter().map(spinor_from_rs).collect(),
    }
}

pub fn spinor_to_rs(g: &SpinorField) -> RSField {
    RSField {
        grid: g.grid,
        f: g.g.iter().map(rs_from_spinor).collect(),
    }
}

/// `psi = G_a u_a(alpha)`
pub fn psi_eval(g: &Vector3<C64>, angles: EulerAngles) -> C64 {
    let u = SpinBasis::eval(angles);
    g[0] * u[0] + g[1] * u[1] + g[2] * u[2]
}

/// Project an angular function onto the spin-1 basis: `G_a = int psi u_a^* dOmega`.
pub fn spinor_from_psi<F: Fn(EulerAngles) -> C64>(psi: F, q: &AngularQuadrature) -> Vector3<C64> {
    let mut g = Vector3::zeros();
    for (node, w) in q.nodes.iter().zip(&q.weights) {
        let p = psi(*node) * *w;
        let u = SpinBasis::eval(*node);
        for a in 0..3 {
            g[a] += p * u[a].conj();
        }
    }
    g
}
