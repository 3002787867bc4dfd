use nalgebra::{Matrix5, Matrix6};

use crate::error::{Error, Result};
use crate::lagrangian::FluidLabel;

/// Below this `|J|` the flow map is treated as singular.
pub const JACOBIAN_FLOOR: f64 = 1e-10;

/// Flow-map derivative and the derived volume factors for one label.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeformationData {
    /// `flow[(mu, nu)] = d xi^mu / d xi0^nu`
    pub flow: Matrix6<f64>,
    pub jacobian: f64,
    /// `cofactors[(mu, sigma)]`: signed minor of `flow` at `(mu, sigma)`.
    pub cofactors: Matrix6<f64>,
    /// Volume ratio including the `sin(alpha)` measure: `(sin alpha_t / sin alpha_0) J`.
    pub d: f64,
}

impl DeformationData {
    pub fn new(flow: Matrix6<f64>, alpha0: f64, alpha_t: f64) -> Result<Self> {
        let jacobian = flow.determinant();
        if !(jacobian.abs() >= JACOBIAN_FLOOR) {
            return Err(Error::DegenerateJacobian { jacobian });
        }
        Ok(Self {
            flow,
            jacobian,
            cofactors: cofactor_matrix(&flow),
            d: alpha_t.sin() / alpha0.sin() * jacobian,
        })
    }

    /// Max deviation of `sum_mu flow[(mu, nu)] cofactors[(mu, sigma)]` from `J delta`.
    pub fn cofactor_identity_error(&self) -> f64 {
        let prod = self.flow.transpose() * self.cofactors;
        (prod - Matrix6::identity() * self.jacobian).amax()
    }
}

fn minor(m: &Matrix6<f64>, row: usize, col: usize) -> f64 {
    let mut out = Matrix5::zeros();
    for (i, r) in (0..6).filter(|&r| r != row).enumerate() {
        for (j, c) in (0..6).filter(|&c| c != col).enumerate() {
            out[(i, j)] = m[(r, c)];
        }
    }
    out.determinant()
}

pub fn cofactor_matrix(m: &Matrix6<f64>) -> Matrix6<f64> {
    Matrix6::from_fn(|r, c| {
        let sign = if (r + c) % 2 == 0 { 1.0 } else { -1.0 };
        sign * minor(m, r, c)
    })
}

/// Step sizes of the auxiliary label cloud: `(space, angle)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CloudStep {
    pub space: f64,
    pub angle: f64,
}

impl CloudStep {
    /// `1e-4` of the domain length and `1e-4` rad.
    pub fn for_length(length: f64) -> Self {
        Self {
            space: 1e-4 * length,
            angle: 1e-4,
        }
    }

    pub fn along(&self, nu: usize) -> f64 {
        if nu < 3 {
            self.space
        } else {
            self.angle
        }
    }
}

/// The 12 displaced labels `label +/- step e_nu`, ordered `(nu, +), (nu, -)`.
pub fn cloud_labels(label: &FluidLabel, step: &CloudStep) -> [FluidLabel; 12] {
    let y = label.to_array();
    std::array::from_fn(|n| {
        let nu = n / 2;
        let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
        let mut z = y;
        z[nu] += sign * step.along(nu);
        FluidLabel::from_array(z)
    })
}

/// Centered-difference flow derivative from the evolved cloud endpoints.
pub fn flow_from_cloud(ends: &[[f64; 6]; 12], step: &CloudStep) -> Matrix6<f64> {
    let mut flow = Matrix6::zeros();
    for nu in 0..6 {
        let h = step.along(nu);
        for mu in 0..6 {
            flow[(mu, nu)] = (ends[2 * nu][mu] - ends[2 * nu + 1][mu]) / (2.0 * h);
        }
    }
    flow
}

/// Deformation from the evolved cloud around `label`.
pub fn deformation(
    label: &FluidLabel,
    ends: &[[f64; 6]; 12],
    alpha_t: f64,
    step: &CloudStep,
) -> Result<DeformationData> {
    DeformationData::new(flow_from_cloud(ends, step), label.theta0.alpha, alpha_t)
}
