use nalgebra::Vector3;
use num_complex::Complex64;

use super::{rs_from_em, spectral_derivative, spinor_from_rs, EMFieldGrid, Fft3, SpinorField};
use crate::constants::PhysicalConstants;
use crate::so3::{apply_angular_operator, AngularOperator, AngularQuadrature, EulerAngles, SpinBasis, SpinOperatorSet};

/// Energy density and Poynting vector sampled on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Observables {
    pub energy_density: Vec<f64>,
    pub poynting: Vec<Vector3<f64>>,
}

impl Observables {
    pub fn from_em(f: &EMFieldGrid, k: &PhysicalConstants) -> Self {
        Self {
            energy_density: f.e.iter().zip(&f.b).map(|(e, b)| energy_em(e, b, k)).collect(),
            poynting: f.e.iter().zip(&f.b).map(|(e, b)| poynting_em(e, b, k)).collect(),
        }
    }

    pub fn from_spinor(s: &SpinorField, k: &PhysicalConstants) -> Self {
        let ops = SpinOperatorSet::new(k.hbar);
        Self {
            energy_density: s.g.iter().map(energy_spinor).collect(),
            poynting: s.g.iter().map(|g| poynting_spinor(g, &ops, k)).collect(),
        }
    }

    pub fn from_angular(s: &SpinorField, q: &AngularQuadrature, k: &PhysicalConstants) -> Self {
        Self {
            energy_density: s.g.iter().map(|g| energy_angular(g, q)).collect(),
            poynting: s.g.iter().map(|g| poynting_angular(g, q, k)).collect(),
        }
    }

    /// Largest pointwise disagreement with another route.
    pub fn max_difference(&self, other: &Observables) -> f64 {
        let de = self
            .energy_density
            .iter()
            .zip(&other.energy_density)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        let dp = self
            .poynting
            .iter()
            .zip(&other.poynting)
            .map(|(a, b)| (a - b).amax())
            .fold(0.0, f64::max);
        de.max(dp)
    }
}

pub fn energy_em(e: &Vector3<f64>, b: &Vector3<f64>, k: &PhysicalConstants) -> f64 {
    0.5 * k.eps0 * (e.norm_squared() + k.c * k.c * b.norm_squared())
}

pub fn energy_rs(f: &Vector3<Complex64>) -> f64 {
    f.norm_squared()
}

pub fn energy_spinor(g: &Vector3<Complex64>) -> f64 {
    g.norm_squared()
}

/// `int |psi|^2 dOmega`
pub fn energy_angular(g: &Vector3<Complex64>, q: &AngularQuadrature) -> f64 {
    q.integrate_real(|at| super::psi_eval(g, at).norm_sqr())
}

/// `eps0 c^2 (E x B)`
pub fn poynting_em(e: &Vector3<f64>, b: &Vector3<f64>, k: &PhysicalConstants) -> Vector3<f64> {
    e.cross(b) * (k.eps0 * k.c * k.c)
}

/// `(c/hbar) F^* s_i F`
pub fn poynting_rs(f: &Vector3<Complex64>, ops: &SpinOperatorSet, k: &PhysicalConstants) -> Vector3<f64> {
    Vector3::from_fn(|i, _| (f.dotc(&(ops.s[i] * f))).re * k.c / k.hbar)
}

/// `(c/hbar) G^* J_i G`
pub fn poynting_spinor(g: &Vector3<Complex64>, ops: &SpinOperatorSet, k: &PhysicalConstants) -> Vector3<f64> {
    Vector3::from_fn(|i, _| (g.dotc(&(ops.j[i] * g))).re * k.c / k.hbar)
}

/// `(c/hbar) int psi^* M_i psi dOmega`
pub fn poynting_angular(g: &Vector3<Complex64>, q: &AngularQuadrature, k: &PhysicalConstants) -> Vector3<f64> {
    let value = |at: EulerAngles| super::psi_eval(g, at);
    let grad = |at: EulerAngles| {
        let jet = SpinBasis::jet(at);
        [0, 1, 2].map(|r| (0..3).map(|a| g[a] * jet.du[r][a]).sum::<Complex64>())
    };
    let f = (value, grad);
    Vector3::from_fn(|i, _| {
        q.integrate(|at| {
            let m =
                apply_angular_operator(AngularOperator::M(i), &f, at, k.hbar).expect("quadrature nodes are interior");
            value(at).conj() * m
        })
        .re * k.c
            / k.hbar
    })
}

/// Pointwise conversion helper used by tests and the CLI.
pub fn spinor_from_em_point(e: &Vector3<f64>, b: &Vector3<f64>, k: &PhysicalConstants) -> Vector3<Complex64> {
    spinor_from_rs(&rs_from_em(e, b, k))
}

/// Max over the grid of `|div E|` and `|div B|`, by spectral differentiation.
pub fn check_divergence(f: &EMFieldGrid) -> (f64, f64) {
    let fft = Fft3::new(&f.grid);
    let div = |v: &[Vector3<f64>]| -> f64 {
        let mut acc = vec![0.0; v.len()];
        for axis in 0..3 {
            let comp: Vec<Complex64> = v.iter().map(|x| Complex64::new(x[axis], 0.0)).collect();
            let d = spectral_derivative(&f.grid, &fft, &comp, axis);
            for (a, dv) in acc.iter_mut().zip(d) {
                *a += dv.re;
            }
        }
        acc.iter().map(|x| x.abs()).fold(0.0, f64::max)
    };
    (div(&f.e), div(&f.b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::GridSpec;
    use std::f64::consts::PI;

    #[test]
    fn static_e_energy_and_flux() {
        let k = PhysicalConstants {
            eps0: 3.0,
            ..Default::default()
        };
        let e = Vector3::new(2.0, 0.0, 0.0);
        assert!((energy_em(&e, &Vector3::zeros(), &k) - 6.0).abs() < 1e-15);
        assert_eq!(poynting_em(&e, &Vector3::zeros(), &k), Vector3::zeros());
    }

    #[test]
    fn divergence_detection() {
        let g = GridSpec::new([32, 1, 1], [2.0 * PI / 32.0, 1.0, 1.0]).unwrap();
        let f = EMFieldGrid::from_fn(g, |x| (Vector3::new(x.x.sin(), 0.0, 0.0), Vector3::zeros()));
        let (de, db) = check_divergence(&f);
        assert!((de - 1.0).abs() < 1e-12);
        assert!(db < 1e-15);

        let f = EMFieldGrid::from_fn(g, |_| (Vector3::new(1.0, 2.0, 3.0), Vector3::zeros()));
        assert!(check_divergence(&f).0 < 1e-14);
    }
}
