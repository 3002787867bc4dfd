use num_complex::Complex64;

use crate::constants::PhysicalConstants;
use crate::error::{Error, Result};
use crate::field::{check_divergence, energy_em, EMFieldGrid, SpinorField};

/// Differences between a reference and a reconstructed field. L2 errors are
/// relative to the norm of the whole reference field `(E, cB)`, so a component
/// that vanishes in the reference does not inflate its error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorReport {
    /// Global phase removed from the reconstruction before comparing.
    pub phase: f64,
    /// Relative L2 error of the spinor, equal to that of `(E, cB)`.
    pub spinor_l2: f64,
    /// `|dE| / |(E, cB)|`
    pub e_l2: f64,
    /// `c |dB| / |(E, cB)|`
    pub b_l2: f64,
    pub e_max: f64,
    pub b_max: f64,
    /// `max(|div E|, |div B|)` of the reconstruction.
    pub divergence: f64,
    /// Relative mismatch of total energy.
    pub energy: f64,
    /// Grid points included in the comparison.
    pub points: usize,
}

fn rel(num: f64, den: f64) -> f64 {
    if den > 0.0 {
        (num / den).sqrt()
    } else {
        num.sqrt()
    }
}

/// Compare two grids of the same shape. With `mask = Some(frac)` only points
/// whose reference energy density exceeds `frac` of its maximum are used.
pub fn compare(
    reference: &SpinorField,
    reconstructed: &SpinorField,
    k: &PhysicalConstants,
    mask: Option<f64>,
) -> Result<ErrorReport> {
    if reference.grid != reconstructed.grid {
        return Err(Error::ShapeMismatch {
            expected: reference.grid.len(),
            found: reconstructed.grid.len(),
        });
    }
    let er = reference.to_em(k);
    let ec = reconstructed.to_em(k);
    let dens: Vec<f64> = reference.g.iter().map(|g| g.norm_squared()).collect();
    let top = dens.iter().cloned().fold(0.0, f64::max);
    let keep: Vec<bool> = dens.iter().map(|d| mask.is_none_or(|f| *d > f * top)).collect();

    let overlap: Complex64 = (0..keep.len())
        .filter(|&p| keep[p])
        .map(|p| reference.g[p].dotc(&reconstructed.g[p]))
        .sum();
    let phase = overlap.arg();
    let rot = Complex64::from_polar(1.0, -phase);
    let aligned = SpinorField {
        grid: reconstructed.grid,
        g: reconstructed.g.iter().map(|g| g * rot).collect(),
    };
    let ea = aligned.to_em(k);

    let mut acc = [0.0f64; 4];
    let mut e_max = 0.0f64;
    let mut b_max = 0.0f64;
    let mut energy = [0.0f64; 2];
    let mut points = 0;
    for p in (0..keep.len()).filter(|&p| keep[p]) {
        points += 1;
        acc[0] += (aligned.g[p] - reference.g[p]).norm_squared();
        acc[1] += reference.g[p].norm_squared();
        acc[2] += (ea.e[p] - er.e[p]).norm_squared();
        acc[3] += (ea.b[p] - er.b[p]).norm_squared() * k.c * k.c;
        e_max = e_max.max((ea.e[p] - er.e[p]).amax());
        b_max = b_max.max((ea.b[p] - er.b[p]).amax());
        energy[0] += energy_em(&er.e[p], &er.b[p], k);
        energy[1] += energy_em(&ec.e[p], &ec.b[p], k);
    }
    let (de, db) = check_divergence(&ec);
    let field_norm = acc[1] * 2.0 / k.eps0;
    Ok(ErrorReport {
        phase,
        spinor_l2: rel(acc[0], acc[1]),
        e_l2: rel(acc[2], field_norm),
        b_l2: rel(acc[3], field_norm),
        e_max,
        b_max,
        divergence: de.max(db),
        energy: if energy[0] > 0.0 {
            (energy[1] - energy[0]).abs() / energy[0]
        } else {
            energy[1].abs()
        },
        points,
    })
}

/// [`compare`] for fields given as `E, B` grids.
pub fn compare_em(
    reference: &EMFieldGrid,
    reconstructed: &EMFieldGrid,
    k: &PhysicalConstants,
    mask: Option<f64>,
) -> Result<ErrorReport> {
    compare(
        &SpinorField::from_em(reference, k),
        &SpinorField::from_em(reconstructed, k),
        k,
        mask,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::GridSpec;
    use nalgebra::Vector3;

    #[test]
    fn global_phase_is_ignored() {
        let grid = GridSpec::line_z(8, 1.0);
        let g: Vec<_> = (0..8)
            .map(|p| {
                Vector3::new(
                    Complex64::new(p as f64, 1.0),
                    Complex64::new(0.3, -0.2),
                    Complex64::new(0.0, 0.5),
                )
            })
            .collect();
        let a = SpinorField { grid, g: g.clone() };
        let rot = Complex64::from_polar(1.0, 0.9);
        let b = SpinorField {
            grid,
            g: g.iter().map(|v| v * rot).collect(),
        };
        let r = compare(&a, &b, &PhysicalConstants::default(), None).unwrap();
        assert!((r.phase - 0.9).abs() < 1e-12);
        assert!(r.spinor_l2 < 1e-14);
        assert!(r.e_l2 < 1e-14 && r.b_l2 < 1e-14);
        assert!(r.energy < 1e-14);
    }
}
