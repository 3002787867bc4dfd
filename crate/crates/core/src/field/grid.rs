use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::Vector3;
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Periodic Cartesian grid, `x = (ix dx, iy dy, iz dz)`, stored z-fastest.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub dims: [usize; 3],
    pub spacing: [f64; 3],
}

impl GridSpec {
    pub fn new(dims: [usize; 3], spacing: [f64; 3]) -> Result<Self> {
        let g = Self { dims, spacing };
        g.validate()?;
        Ok(g)
    }

    /// A grid with `n` points along z over `[0, length)`, x and y collapsed.
    pub fn line_z(n: usize, length: f64) -> Self {
        Self {
            dims: [1, 1, n],
            spacing: [1.0, 1.0, length / n as f64],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.dims.iter().any(|&n| n == 0) {
            return Err(Error::InvalidConfig("grid dims must be >= 1".into()));
        }
        if self.spacing.iter().any(|&d| !(d.is_finite() && d > 0.0)) {
            return Err(Error::InvalidConfig("grid spacings must be positive".into()));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn lengths(&self) -> [f64; 3] {
        [0, 1, 2].map(|a| self.dims[a] as f64 * self.spacing[a])
    }

    pub fn index(&self, ix: usize, iy: usize, iz: usize) -> usize {
        (ix * self.dims[1] + iy) * self.dims[2] + iz
    }

    pub fn unravel(&self, idx: usize) -> [usize; 3] {
        let iz = idx % self.dims[2];
        let rest = idx / self.dims[2];
        [rest / self.dims[1], rest % self.dims[1], iz]
    }

    pub fn point(&self, idx: usize) -> Vector3<f64> {
        let [ix, iy, iz] = self.unravel(idx);
        Vector3::new(
            ix as f64 * self.spacing[0],
            iy as f64 * self.spacing[1],
            iz as f64 * self.spacing[2],
        )
    }

    /// Signed FFT mode number for index `i` along `axis`.
    pub fn mode_number(&self, axis: usize, i: usize) -> i64 {
        let n = self.dims[axis] as i64;
        let i = i as i64;
        if i <= n / 2 {
            i
        } else {
            i - n
        }
    }

    pub fn is_nyquist(&self, axis: usize, i: usize) -> bool {
        let n = self.dims[axis];
        n > 1 && n % 2 == 0 && i == n / 2
    }

    pub fn wavenumber(&self, axis: usize, m: i64) -> f64 {
        2.0 * PI * m as f64 / (self.dims[axis] as f64 * self.spacing[axis])
    }

    /// Smallest spacing over the non-degenerate axes.
    pub fn min_spacing(&self) -> f64 {
        (0..3)
            .filter(|&a| self.dims[a] > 1)
            .map(|a| self.spacing[a])
            .fold(f64::INFINITY, f64::min)
    }
}

/// Unnormalized 3-D FFT over a z-fastest buffer. Axes of length 1 are skipped.
pub struct Fft3 {
    dims: [usize; 3],
    forward: [Arc<dyn Fft<f64>>; 3],
    inverse: [Arc<dyn Fft<f64>>; 3],
}

impl Fft3 {
    pub fn new(grid: &GridSpec) -> Self {
        let mut planner = FftPlanner::new();
        let forward = grid.dims.map(|n| planner.plan_fft_forward(n));
        let inverse = grid.dims.map(|n| planner.plan_fft_inverse(n));
        Self {
            dims: grid.dims,
            forward,
            inverse,
        }
    }

    pub fn forward(&self, data: &mut [Complex64]) {
        self.run(data, false);
    }

    /// Inverse transform including the `1/N` normalization.
    pub fn inverse(&self, data: &mut [Complex64]) {
        self.run(data, true);
        let n = data.len() as f64;
        data.iter_mut().for_each(|v| *v /= n);
    }

    fn run(&self, data: &mut [Complex64], inverse: bool) {
        let [nx, ny, nz] = self.dims;
        let strides = [ny * nz, nz, 1];
        for axis in 0..3 {
            let n = self.dims[axis];
            if n == 1 {
                continue;
            }
            let plan = if inverse {
                &self.inverse[axis]
            } else {
                &self.forward[axis]
            };
            let stride = strides[axis];
            let mut line = vec![Complex64::new(0.0, 0.0); n];
            let mut scratch = vec![Complex64::new(0.0, 0.0); plan.get_inplace_scratch_len()];
            for start in line_starts(axis, [nx, ny, nz]) {
                for (k, v) in line.iter_mut().enumerate() {
                    *v = data[start + k * stride];
                }
                plan.process_with_scratch(&mut line, &mut scratch);
                for (k, v) in line.iter().enumerate() {
                    data[start + k * stride] = *v;
                }
            }
        }
    }
}

fn line_starts(axis: usize, [nx, ny, nz]: [usize; 3]) -> Vec<usize> {
    let mut out = Vec::new();
    match axis {
        0 => {
            for iy in 0..ny {
                for iz in 0..nz {
                    out.push(iy * nz + iz);
                }
            }
        }
        1 => {
            for ix in 0..nx {
                for iz in 0..nz {
                    out.push(ix * ny * nz + iz);
                }
            }
        }
        _ => {
            for ix in 0..nx {
                for iy in 0..ny {
                    out.push((ix * ny + iy) * nz);
                }
            }
        }
    }
    out
}

/// Spectral derivative along `axis` of a periodic complex scalar field.
/// The Nyquist mode derivative is set to zero.
pub fn spectral_derivative(grid: &GridSpec, fft: &Fft3, values: &[Complex64], axis: usize) -> Vec<Complex64> {
    let mut data = values.to_vec();
    if grid.dims[axis] == 1 {
        return vec![Complex64::new(0.0, 0.0); data.len()];
    }
    fft.forward(&mut data);
    for (idx, v) in data.iter_mut().enumerate() {
        let i = grid.unravel(idx)[axis];
        if grid.is_nyquist(axis, i) {
            *v = Complex64::new(0.0, 0.0);
        } else {
            let k = grid.wavenumber(axis, grid.mode_number(axis, i));
            *v *= Complex64::new(0.0, k);
        }
    }
    fft.inverse(&mut data);
    data
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn index_roundtrip() {
        let g = GridSpec::new([3, 4, 5], [1.0, 0.5, 0.25]).unwrap();
        for idx in 0..g.len() {
            let [ix, iy, iz] = g.unravel(idx);
            assert_eq!(g.index(ix, iy, iz), idx);
        }
        assert_eq!(g.index(0, 0, 1), 1);
    }

    #[test]
    fn fft_roundtrip_and_derivative() {
        let g = GridSpec::new([4, 1, 8], [PI / 2.0, 1.0, PI / 4.0]).unwrap();
        let fft = Fft3::new(&g);
        let vals: Vec<Complex64> = (0..g.len())
            .map(|i| {
                let p = g.point(i);
                Complex64::new(p.x.sin() + (2.0 * p.z).cos(), p.z.sin())
            })
            .collect();
        let mut data = vals.clone();
        fft.forward(&mut data);
        fft.inverse(&mut data);
        for (a, b) in data.iter().zip(&vals) {
            assert!((a - b).norm() < 1e-14);
        }
        let dz = spectral_derivative(&g, &fft, &vals, 2);
        for (i, v) in dz.iter().enumerate() {
            let p = g.point(i);
            let expect = Complex64::new(-2.0 * (2.0 * p.z).sin(), p.z.cos());
            assert!((v - expect).norm() < 1e-13);
        }
    }

    #[test]
    fn rejects_empty_axes() {
        assert!(GridSpec::new([0, 1, 1], [1.0; 3]).is_err());
        assert!(GridSpec::new([1, 1, 1], [1.0, -1.0, 1.0]).is_err());
    }
}
