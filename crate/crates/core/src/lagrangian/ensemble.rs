use serde::{Deserialize, Serialize};

use super::trajectory::{integrate_ensemble, FluidLabel, Stepping, Trajectory};
use crate::error::{Error, Result};
use crate::eulerian::SpectralField;
use crate::so3::{EulerAngles, POLE_EPS};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Integrator {
    #[default]
    Rk4,
}

/// Cell-centred label lattice over `(q1, q2, q3, alpha, beta, gamma)`.
///
/// Axis `m` holds `counts[m]` points at `lower + (j + 1/2) (upper - lower) / counts`.
/// An axis with `lower == upper` collapses to that single value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleSpec {
    pub counts: [usize; 6],
    pub lower: [f64; 6],
    pub upper: [f64; 6],
    #[serde(default)]
    pub integrator: Integrator,
    pub dt: f64,
    pub t_final: f64,
}

impl EnsembleSpec {
    pub fn validate(&self) -> Result<()> {
        if self.counts.iter().any(|&n| n == 0) {
            return Err(Error::InvalidConfig("ensemble counts must be >= 1".into()));
        }
        for m in 0..6 {
            if !(self.lower[m].is_finite() && self.upper[m].is_finite()) || self.upper[m] < self.lower[m] {
                return Err(Error::InvalidConfig(format!("ensemble extent {m} is invalid")));
            }
        }
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::InvalidConfig("dt must be positive".into()));
        }
        if !(self.t_final.is_finite()) {
            return Err(Error::InvalidConfig("t_final must be finite".into()));
        }
        for a in self.axis_values(3) {
            if a.sin() < POLE_EPS || !(0.0..=std::f64::consts::PI).contains(&a) {
                return Err(Error::PoleSingularity { alpha: a });
            }
        }
        Ok(())
    }

    pub fn axis_values(&self, m: usize) -> Vec<f64> {
        let n = self.counts[m];
        let w = (self.upper[m] - self.lower[m]) / n as f64;
        (0..n).map(|j| self.lower[m] + (j as f64 + 0.5) * w).collect()
    }

    /// Cell widths; collapsed axes count as width 1.
    pub fn widths(&self) -> [f64; 6] {
        [0, 1, 2, 3, 4, 5].map(|m| {
            let w = (self.upper[m] - self.lower[m]) / self.counts[m] as f64;
            if w > 0.0 {
                w
            } else {
                1.0
            }
        })
    }

    pub fn cell_volume(&self) -> f64 {
        self.widths().iter().product()
    }

    pub fn len(&self) -> usize {
        self.counts.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Flat index with the last axis (gamma) fastest.
    pub fn index(&self, j: [usize; 6]) -> usize {
        let mut idx = 0;
        for m in 0..6 {
            idx = idx * self.counts[m] + j[m];
        }
        idx
    }

    pub fn unravel(&self, mut idx: usize) -> [usize; 6] {
        let mut j = [0; 6];
        for m in (0..6).rev() {
            j[m] = idx % self.counts[m];
            idx /= self.counts[m];
        }
        j
    }

    pub fn labels(&self) -> Vec<FluidLabel> {
        let axes: Vec<Vec<f64>> = (0..6).map(|m| self.axis_values(m)).collect();
        (0..self.len())
            .map(|idx| {
                let j = self.unravel(idx);
                let y = [0, 1, 2, 3, 4, 5].map(|m| axes[m][j[m]]);
                FluidLabel::new(
                    nalgebra::Vector3::new(y[0], y[1], y[2]),
                    EulerAngles::new(y[3], y[4], y[5]),
                )
            })
            .collect()
    }
}

/// Integrate every lattice label from 0 to `t_final`, guarding each step
/// against moving more than one grid cell.
pub fn trace_ensemble(field: &SpectralField, spec: &EnsembleSpec, record_every: usize) -> Result<Vec<Trajectory>> {
    spec.validate()?;
    let mut stepping = Stepping::new(0.0, spec.t_final, spec.dt).recording(record_every);
    let cell = field.grid.min_spacing();
    if cell.is_finite() {
        stepping = stepping.guarded(cell).guarding_axes(field.grid.dims.map(|n| n > 1));
    }
    Ok(integrate_ensemble(field, &spec.labels(), &stepping))
}
