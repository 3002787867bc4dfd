//! Initial fields used by the examples, tests and CLI.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::constants::PhysicalConstants;
use crate::error::{Error, Result};
use crate::eulerian::SpectralField;
use crate::field::{check_divergence, EMFieldGrid, GridSpec, SpinorField};

/// Divergence allowed in an initial field.
pub const DIVERGENCE_TOL: f64 = 1e-10;

/// One linearly polarized travelling component:
/// `E = amplitude * polarization * cos(k.x - c|k|t + phase)`, `B = k_hat x E / c`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlaneWave {
    pub amplitude: f64,
    pub k: [f64; 3],
    #[serde(default = "default_polarization")]
    pub polarization: [f64; 3],
    #[serde(default)]
    pub phase: f64,
}

fn default_polarization() -> [f64; 3] {
    [1.0, 0.0, 0.0]
}

impl PlaneWave {
    /// Unit wave vector along `z`, polarization along `x`.
    pub fn along_z(amplitude: f64, k: f64) -> Self {
        Self {
            amplitude,
            k: [0.0, 0.0, k],
            polarization: default_polarization(),
            phase: 0.0,
        }
    }

    fn validate(&self) -> Result<()> {
        let k = Vector3::from(self.k);
        let p = Vector3::from(self.polarization);
        if k.norm() == 0.0 {
            return Err(Error::InvalidConfig("plane wave needs a nonzero wave vector".into()));
        }
        if p.norm() == 0.0 || k.dot(&p).abs() > 1e-12 * k.norm() * p.norm() {
            return Err(Error::InvalidConfig(
                "polarization must be nonzero and transverse to k".into(),
            ));
        }
        Ok(())
    }

    /// `(E, B)` at `x`, time `t`.
    pub fn eval(&self, x: &Vector3<f64>, t: f64, c: f64) -> (Vector3<f64>, Vector3<f64>) {
        let k = Vector3::from(self.k);
        let pol = Vector3::from(self.polarization).normalize();
        let phase = k.dot(x) - c * k.norm() * t + self.phase;
        let e = pol * (self.amplitude * phase.cos());
        let b = k.normalize().cross(&e) / c;
        (e, b)
    }
}

/// Initial field choices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "preset", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialField {
    PlaneWave(PlaneWave),
    /// Sum of two counter-propagating waves:
    /// `E = amplitude * polarization * cos(k.x) cos(c|k|t)`.
    StandingWave {
        amplitude: f64,
        k: [f64; 3],
        #[serde(default = "default_polarization")]
        polarization: [f64; 3],
    },
    Superposition {
        components: Vec<PlaneWave>,
    },
}

impl InitialField {
    pub fn plane_wave(amplitude: f64, k: f64) -> Self {
        Self::PlaneWave(PlaneWave::along_z(amplitude, k))
    }

    pub fn standing_wave(amplitude: f64, k: f64) -> Self {
        Self::StandingWave {
            amplitude,
            k: [0.0, 0.0, k],
            polarization: default_polarization(),
        }
    }

    /// The travelling components making up the field.
    pub fn components(&self) -> Vec<PlaneWave> {
        match self {
            Self::PlaneWave(p) => vec![*p],
            Self::StandingWave {
                amplitude,
                k,
                polarization,
            } => {
                let fwd = PlaneWave {
                    amplitude: 0.5 * amplitude,
                    k: *k,
                    polarization: *polarization,
                    phase: 0.0,
                };
                let back = PlaneWave {
                    k: [-k[0], -k[1], -k[2]],
                    ..fwd
                };
                vec![fwd, back]
            }
            Self::Superposition { components } => components.clone(),
        }
    }

    /// Exact `(E, B)` at `x`, time `t`.
    pub fn eval(&self, x: &Vector3<f64>, t: f64, c: f64) -> (Vector3<f64>, Vector3<f64>) {
        self.components()
            .iter()
            .fold((Vector3::zeros(), Vector3::zeros()), |(e, b), p| {
                let (pe, pb) = p.eval(x, t, c);
                (e + pe, b + pb)
            })
    }

    /// Longest period among the components, `2 pi / (c |k|_min)`.
    pub fn period(&self, c: f64) -> f64 {
        let kmin = self
            .components()
            .iter()
            .map(|p| Vector3::from(p.k).norm())
            .fold(f64::INFINITY, f64::min);
        std::f64::consts::TAU / (c * kmin)
    }

    pub fn validate(&self, grid: &GridSpec) -> Result<()> {
        let comps = self.components();
        if comps.is_empty() {
            return Err(Error::InvalidConfig("superposition has no components".into()));
        }
        let lengths = grid.lengths();
        for p in &comps {
            p.validate()?;
            for a in 0..3 {
                let m = p.k[a] * lengths[a] / std::f64::consts::TAU;
                let periodic = (m - m.round()).abs() < 1e-9;
                let resolved = grid.dims[a] > 1 && 2.0 * m.round().abs() < grid.dims[a] as f64;
                if p.k[a] != 0.0 && !(periodic && resolved) {
                    return Err(Error::InvalidConfig(format!(
                        "k[{a}] = {} is not a resolved periodic wavenumber of the grid",
                        p.k[a]
                    )));
                }
            }
        }
        Ok(())
    }

    /// Sample on `grid` at time `t`.
    pub fn sample(&self, grid: GridSpec, t: f64, c: f64) -> EMFieldGrid {
        EMFieldGrid::from_fn(grid, |x| self.eval(&x, t, c))
    }

    /// Validated spectral field for the time-0 sample.
    pub fn build(&self, grid: GridSpec, consts: PhysicalConstants) -> Result<SpectralField> {
        consts.validate()?;
        grid.validate()?;
        self.validate(&grid)?;
        let em = self.sample(grid, 0.0, consts.c);
        let (de, db) = check_divergence(&em);
        if de.max(db) > DIVERGENCE_TOL {
            return Err(Error::ConstraintViolation(format!(
                "initial divergence {:e} exceeds {DIVERGENCE_TOL:e}",
                de.max(db)
            )));
        }
        SpectralField::from_spinor(&SpinorField::from_em(&em, &consts), consts)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn standing_wave_has_no_initial_magnetic_field() {
        let f = InitialField::standing_wave(1.0, 2.0 * PI);
        let (e, b) = f.eval(&Vector3::new(0.0, 0.0, 0.1), 0.0, 1.0);
        assert!(b.norm() < 1e-15);
        assert!((e.x - (0.2 * PI).cos()).abs() < 1e-15);
    }

    #[test]
    fn rejects_aperiodic_wavenumber() {
        let grid = GridSpec::line_z(16, 1.0);
        let f = InitialField::plane_wave(1.0, 3.0);
        assert!(matches!(f.validate(&grid), Err(Error::InvalidConfig(_))));
        let f = InitialField::plane_wave(1.0, 16.0 * PI);
        assert!(f.validate(&grid).is_err());
    }

    #[test]
    fn plane_wave_evolves_exactly() {
        let grid = GridSpec::line_z(32, 1.0);
        let k = PhysicalConstants {
            eps0: 2.0,
            ..Default::default()
        };
        let init = InitialField::plane_wave(1.0, 2.0 * PI);
        let field = init.build(grid, k).unwrap();
        let em = field.to_grid(0.3).to_em(&k);
        let exact = init.sample(grid, 0.3, 1.0);
        for p in 0..grid.len() {
            assert!((em.e[p] - exact.e[p]).norm() < 1e-12);
            assert!((em.b[p] - exact.b[p]).norm() < 1e-12);
        }
    }
}
