//! Madelung split of the angular wavefunction and the hydrodynamic fields
//! derived from it.

use nalgebra::{Matrix3, Vector3};
use num_complex::Complex64;

use super::spectral::{LocalSpinor, Snapshot, PSI_BOUND};
use crate::constants::PhysicalConstants;
use crate::error::{Error, Result};
use crate::field::{spectral_derivative, Fft3, SpinorField};
use crate::so3::{euler_a, AngularQuadrature, BodyFrameMatrix, EulerAngles, SpinBasis};

type C64 = Complex64;

/// Relative node threshold: points with `|psi|^2 < NODE_TAU * rho_scale` are nodes.
pub const NODE_TAU: f64 = 1e-6;

/// `psi` with first spatial, first angular and mixed derivatives at one point.
#[derive(Debug, Clone, Copy)]
pub struct PsiJet {
    pub psi: C64,
    pub dx: [C64; 3],
    pub da: [C64; 3],
    /// `dxa[i][r] = d_i d_r psi`
    pub dxa: [[C64; 3]; 3],
}

impl PsiJet {
    pub fn new(local: &LocalSpinor, angles: EulerAngles) -> Self {
        let jet = SpinBasis::jet(angles);
        let contract = |g: &Vector3<C64>, u: &[C64; 3]| g[0] * u[0] + g[1] * u[1] + g[2] * u[2];
        Self {
            psi: contract(&local.g, &jet.u),
            dx: [0, 1, 2].map(|i| contract(&local.dg[i], &jet.u)),
            da: [0, 1, 2].map(|r| contract(&local.g, &jet.du[r])),
            dxa: [0, 1, 2].map(|i| [0, 1, 2].map(|r| contract(&local.dg[i], &jet.du[r]))),
        }
    }
}

/// Hydrodynamic state at one point of `R^3 x SO(3)`.
#[derive(Debug, Clone, Copy)]
pub struct HydroFields {
    pub psi: C64,
    pub rho: f64,
    pub grad_x_rho: Vector3<f64>,
    pub grad_angle_rho: Vector3<f64>,
    /// Spatial phase gradient `d_i S`.
    pub grad_x_s: Vector3<f64>,
    /// Coordinate angular phase gradient `d_r S`.
    pub grad_angle_s: Vector3<f64>,
    /// Body-frame angular phase gradient `A_ir d_r S`.
    pub lambda_s: Vector3<f64>,
    /// Translational velocity `(c/hbar) A grad_angle_s`.
    pub velocity: Vector3<f64>,
    /// Angular velocity `(c/hbar) grad_x_s`.
    pub angular_velocity: Vector3<f64>,
    /// Euler-angle rates `A^T angular_velocity`.
    pub angle_rate: Vector3<f64>,
    pub quantum_potential: f64,
    /// `mixed_s[(i, r)] = d_i d_r S`
    pub mixed_s: Matrix3<f64>,
    /// Flow divergence `d_i v_i + lambda_i omega_i`.
    pub divergence: f64,
    pub frame: BodyFrameMatrix,
}

impl HydroFields {
    /// Phase-space velocity `(qdot, thetadot)`.
    pub fn flow(&self) -> [f64; 6] {
        let v = self.velocity;
        let w = self.angle_rate;
        [v.x, v.y, v.z, w.x, w.y, w.z]
    }
}

/// Build the hydrodynamic fields from a jet. `threshold` is the absolute node
/// density below which the point is rejected.
pub fn hydro_from_jet(jet: &PsiJet, angles: EulerAngles, k: &PhysicalConstants, threshold: f64) -> Result<HydroFields> {
    let frame = euler_a(angles)?;
    let rho = jet.psi.norm_sqr();
    if !(rho >= threshold) || rho == 0.0 {
        return Err(Error::NodeTooClose {
            density: rho,
            threshold,
        });
    }
    let inv = jet.psi.inv();
    let hbar = k.hbar;
    let grad_x_s = Vector3::from_fn(|i, _| hbar * (jet.dx[i] * inv).im);
    let grad_angle_s = Vector3::from_fn(|r, _| hbar * (jet.da[r] * inv).im);
    let a = frame.a;
    let lambda_s = a * grad_angle_s;
    let ratio = k.c / hbar;
    let velocity = lambda_s * ratio;
    let angular_velocity = grad_x_s * ratio;
    let angle_rate = a.transpose() * angular_velocity;

    let inv2 = inv * inv;
    let mut mixed_s = Matrix3::zeros();
    let mut curvature = 0.0;
    for i in 0..3 {
        let ai = (jet.psi.conj() * jet.dx[i]).re / rho;
        for r in 0..3 {
            mixed_s[(i, r)] = hbar * (jet.dxa[i][r] * inv - jet.dx[i] * jet.da[r] * inv2).im;
            if a[(i, r)] == 0.0 {
                continue;
            }
            let br = (jet.psi.conj() * jet.da[r]).re / rho;
            let m = ((jet.da[r].conj() * jet.dx[i]).re + (jet.psi.conj() * jet.dxa[i][r]).re) / rho;
            curvature += a[(i, r)] * (m - ai * br);
        }
    }
    let quantum_potential = -k.c * hbar * curvature;
    let grad_x_rho = Vector3::from_fn(|i, _| 2.0 * (jet.psi.conj() * jet.dx[i]).re);
    let grad_angle_rho = Vector3::from_fn(|r, _| 2.0 * (jet.psi.conj() * jet.da[r]).re);
    let divergence = 2.0 * ratio * a.component_mul(&mixed_s).sum();
    Ok(HydroFields {
        psi: jet.psi,
        rho,
        grad_x_rho,
        grad_angle_rho,
        grad_x_s,
        grad_angle_s,
        lambda_s,
        velocity,
        angular_velocity,
        angle_rate,
        quantum_potential,
        mixed_s,
        divergence,
        frame,
    })
}

impl Snapshot<'_> {
    pub fn jet(&self, x: &Vector3<f64>, angles: EulerAngles) -> PsiJet {
        PsiJet::new(&self.local(x), angles)
    }

    pub fn psi(&self, x: &Vector3<f64>, angles: EulerAngles) -> C64 {
        crate::field::psi_eval(&self.local(x).g, angles)
    }

    /// Absolute node threshold for this field.
    pub fn node_threshold(&self) -> f64 {
        NODE_TAU * self.field.rho_scale()
    }

    pub fn hydro(&self, x: &Vector3<f64>, angles: EulerAngles) -> Result<HydroFields> {
        hydro_from_jet(&self.jet(x, angles), angles, &self.field.consts, self.node_threshold())
    }
}

/// `G` and its spectral gradient at every grid point.
pub fn local_spinors(g: &SpinorField) -> Vec<LocalSpinor> {
    let fft = Fft3::new(&g.grid);
    let comps: [Vec<C64>; 3] = [0, 1, 2].map(|a| g.g.iter().map(|v| v[a]).collect());
    let d: [[Vec<C64>; 3]; 3] = [0, 1, 2].map(|i| [0, 1, 2].map(|a| spectral_derivative(&g.grid, &fft, &comps[a], i)));
    (0..g.grid.len())
        .map(|n| LocalSpinor {
            g: g.g[n],
            dg: [0, 1, 2].map(|i| Vector3::new(d[i][0][n], d[i][1][n], d[i][2][n])),
        })
        .collect()
}

/// Absolute node threshold `NODE_TAU * (3 / 8 pi^2) max |G|^2` for a grid field.
pub fn node_threshold(g: &SpinorField) -> f64 {
    NODE_TAU * PSI_BOUND * g.g.iter().map(|v| v.norm_squared()).fold(0.0, f64::max)
}

/// Hydrodynamic fields at `(grid index, orientation)` samples.
pub fn polar_decompose(
    g: &SpinorField,
    pts: &[(usize, EulerAngles)],
    k: &PhysicalConstants,
) -> Result<Vec<HydroFields>> {
    let locals = local_spinors(g);
    let threshold = node_threshold(g);
    pts.iter()
        .map(|&(idx, at)| hydro_from_jet(&PsiJet::new(&locals[idx], at), at, k, threshold))
        .collect()
}

/// Quantum potential at one grid point and orientation.
pub fn quantum_potential(g: &SpinorField, idx: usize, angles: EulerAngles, k: &PhysicalConstants) -> Result<f64> {
    Ok(polar_decompose(g, &[(idx, angles)], k)?[0].quantum_potential)
}

/// Samples falling inside the node tube.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeSet {
    pub threshold: f64,
    pub points: Vec<(usize, EulerAngles)>,
}

impl NodeSet {
    /// Scan every grid point against every quadrature node.
    pub fn scan(g: &SpinorField, q: &AngularQuadrature) -> Self {
        let threshold = node_threshold(g);
        let mut points = Vec::new();
        for (idx, gv) in g.g.iter().enumerate() {
            for at in &q.nodes {
                if crate::field::psi_eval(gv, *at).norm_sqr() < threshold {
                    points.push((idx, *at));
                }
            }
        }
        Self { threshold, points }
    }

    pub fn contains(&self, idx: usize, at: EulerAngles) -> bool {
        self.points.iter().any(|&(i, a)| i == idx && a == at)
    }
}
