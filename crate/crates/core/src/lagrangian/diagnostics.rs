use std::f64::consts::TAU;

use nalgebra::{Matrix3, Vector3};
use num_complex::Complex64;

use super::ensemble::EnsembleSpec;
use super::trajectory::{integrate_ensemble, FluidLabel, Stepping, Trajectory};
use crate::error::Result;
use crate::eulerian::{Snapshot, SpectralField};
use crate::field::{Fft3, GridSpec};
use crate::so3::{a_inv_derivatives, euler_a, levi_civita, AngularQuadrature, EulerAngles};

/// Per-sample residuals of the translational and angular Newton laws.
#[derive(Debug, Clone, PartialEq)]
pub struct NewtonResidual {
    pub times: Vec<f64>,
    pub translational: Vec<Vector3<f64>>,
    pub angular: Vec<Vector3<f64>>,
}

impl NewtonResidual {
    pub fn max_norm(&self) -> f64 {
        self.translational
            .iter()
            .chain(&self.angular)
            .map(|v| v.amax())
            .fold(0.0, f64::max)
    }
}

/// Step used for the finite-difference gradient of `Q`.
pub const Q_GRADIENT_STEP: f64 = 1e-3;

/// Gradients of the quantum potential in space and angle, fourth order.
pub fn quantum_potential_gradient(
    snap: &Snapshot<'_>,
    x: &Vector3<f64>,
    at: EulerAngles,
    h: f64,
) -> Result<(Vector3<f64>, Vector3<f64>)> {
    let mut gx = Vector3::zeros();
    let mut ga = Vector3::zeros();
    for mu in 0..6 {
        let mut q = [0.0; 4];
        for (slot, m) in [-2.0, -1.0, 1.0, 2.0].iter().enumerate() {
            let mut xs = *x;
            let mut a = at.to_array();
            if mu < 3 {
                xs[mu] += m * h;
            } else {
                a[mu - 3] += m * h;
            }
            q[slot] = snap.hydro(&xs, EulerAngles::from_array(a))?.quantum_potential;
        }
        let d = (8.0 * (q[2] - q[1]) - (q[3] - q[0])) / (12.0 * h);
        if mu < 3 {
            gx[mu] = d;
        } else {
            ga[mu - 3] = d;
        }
    }
    Ok((gx, ga))
}

/// Insert finite-difference accelerations of the stored velocities into the
/// Newton laws. Requires uniformly spaced samples; the first and last two
/// samples are skipped.
pub fn newton_residual(traj: &Trajectory, field: &SpectralField) -> Result<NewtonResidual> {
    let k = field.consts;
    let ratio = k.c / k.hbar;
    let n = traj.len();
    let mut out = NewtonResidual {
        times: Vec::new(),
        translational: Vec::new(),
        angular: Vec::new(),
    };
    if n < 5 {
        return Ok(out);
    }
    let tau = traj.times[1] - traj.times[0];
    let fd = |v: &[Vector3<f64>], j: usize| (8.0 * (v[j + 1] - v[j - 1]) - (v[j + 2] - v[j - 2])) / (12.0 * tau);
    for j in 2..n - 2 {
        let qdd = fd(&traj.qdot, j);
        let tdd = fd(&traj.thetadot, j);
        let at = traj.theta[j];
        let frame = euler_a(at)?;
        let (a, a_inv) = (frame.a, frame.a_inv);
        let qd = traj.qdot[j];
        let td = traj.thetadot[j];
        let snap = field.at_time(traj.times[j]);
        let (gx, ga) = quantum_potential_gradient(&snap, &traj.q[j], at, Q_GRADIENT_STEP)?;

        let body = a_inv * td;
        let mut rq = qdd + a * ga * ratio;
        for i in 0..3 {
            for jj in 0..3 {
                for kk in 0..3 {
                    rq[i] += levi_civita(i, jj, kk) * body[kk] * qd[jj];
                }
            }
        }
        let da = a_inv_derivatives(at);
        let mut conn = Matrix3::zeros();
        for r in 0..3 {
            conn += da[r] * td[r];
        }
        let rt = tdd + a.transpose() * (conn * td) + a.transpose() * gx * ratio;
        out.times.push(traj.times[j]);
        out.translational.push(rq);
        out.angular.push(rt);
    }
    Ok(out)
}

/// A closed chain of labels sampled uniformly in a loop parameter. The chain
/// excludes the repeated end point; `turns` gives the coordinate jump
/// accumulated over one circuit (whole turns in `beta`, `gamma`).
#[derive(Debug, Clone, PartialEq)]
pub struct LabelLoop {
    pub labels: Vec<FluidLabel>,
    pub turns: [f64; 6],
}

impl LabelLoop {
    pub fn beta_circle(q0: Vector3<f64>, alpha: f64, gamma: f64, n: usize) -> Self {
        Self {
            labels: (0..n)
                .map(|j| FluidLabel::new(q0, EulerAngles::new(alpha, TAU * j as f64 / n as f64, gamma)))
                .collect(),
            turns: [0.0, 0.0, 0.0, 0.0, TAU, 0.0],
        }
    }

    /// Circle of radius `radius` in coordinate plane `(mu, nu)`.
    pub fn coordinate_circle(center: FluidLabel, mu: usize, nu: usize, radius: f64, n: usize) -> Self {
        let c = center.to_array();
        Self {
            labels: (0..n)
                .map(|j| {
                    let phi = TAU * j as f64 / n as f64;
                    let mut y = c;
                    y[mu] += radius * phi.cos();
                    y[nu] += radius * phi.sin();
                    FluidLabel::from_array(y)
                })
                .collect(),
            turns: [0.0; 6],
        }
    }
}

/// Circulation `loop integral of g_{mu nu} xidot^nu dxi^mu` around the
/// material loop evolved to `t`, divided by `c l / hbar` so the result is an
/// action. Derivatives along the loop are spectral in the loop parameter.
pub fn circulation_transport(field: &SpectralField, lp: &LabelLoop, t: f64, dt: f64) -> Result<f64> {
    let k = field.consts;
    let n = lp.labels.len();
    let trajs = integrate_ensemble(field, &lp.labels, &Stepping::new(0.0, t, dt).recording(usize::MAX));
    let mut pts = Vec::with_capacity(n);
    for tr in &trajs {
        if let Some(e) = &tr.error {
            return Err(e.clone());
        }
        let last = tr.len() - 1;
        pts.push((tr.end_point().expect("non-empty"), tr.qdot[last], tr.thetadot[last]));
    }
    // Tangent d xi / ds with s in [0, 1).
    let grid = GridSpec {
        dims: [1, 1, n],
        spacing: [1.0, 1.0, 1.0 / n as f64],
    };
    let fft = Fft3::new(&grid);
    let mut tangent = vec![[0.0; 6]; n];
    for mu in 0..6 {
        let vals: Vec<Complex64> = (0..n)
            .map(|j| Complex64::new(pts[j].0[mu] - lp.turns[mu] * j as f64 / n as f64, 0.0))
            .collect();
        let d = crate::field::spectral_derivative(&grid, &fft, &vals, 2);
        for j in 0..n {
            tangent[j][mu] = d[j].re + lp.turns[mu];
        }
    }
    let mut total = 0.0;
    for j in 0..n {
        let (y, qd, td) = pts[j];
        let a_inv = euler_a(EulerAngles::new(y[3], y[4], y[5]))?.a_inv;
        let dq = Vector3::new(tangent[j][0], tangent[j][1], tangent[j][2]);
        let dth = Vector3::new(tangent[j][3], tangent[j][4], tangent[j][5]);
        // g_{i, 3+r} = l A_inv_ir
        total += k.l * (dq.dot(&(a_inv * td)) + qd.dot(&(a_inv * dth)));
    }
    Ok(total / n as f64 * k.hbar / (k.c * k.l))
}

/// Quadrature of the Lagrangian density over a label lattice at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActionSample {
    pub t: f64,
    pub kinetic: f64,
    pub internal: f64,
    /// `kinetic - internal`
    pub value: f64,
    /// `value / l`
    pub per_length: f64,
}

/// Evaluate the Lagrangian over `trajs` (one per lattice label of `spec`) at
/// stored sample `sample`. Failed trajectories are an error.
pub fn action_eval(
    field: &SpectralField,
    spec: &EnsembleSpec,
    trajs: &[Trajectory],
    sample: usize,
) -> Result<ActionSample> {
    let k = field.consts;
    let w = spec.cell_volume();
    let t = trajs.first().map(|tr| tr.times[sample]).unwrap_or(0.0);
    let snap0 = field.at_time(0.0);
    let snap = field.at_time(t);
    let mut kinetic = 0.0;
    let mut internal = 0.0;
    for tr in trajs {
        if let Some(e) = &tr.error {
            return Err(e.clone());
        }
        let label = tr.label;
        let rho0 = snap0.hydro(&label.q0, label.theta0)?.rho;
        let weight = k.l * w * rho0 * label.theta0.alpha.sin();
        let h = snap.hydro(&tr.q[sample], tr.theta[sample])?;
        kinetic += weight * tr.qdot[sample].dot(&(h.frame.a_inv * tr.thetadot[sample]));
        let cross = h.grad_x_rho.dot(&(h.frame.a * h.grad_angle_rho));
        internal += weight * 0.25 * k.c * k.c * cross / (h.rho * h.rho);
    }
    let value = kinetic - internal;
    Ok(ActionSample {
        t,
        kinetic,
        internal,
        value,
        per_length: value / k.l,
    })
}

/// Density-weighted angular average of element velocities at `x`:
/// `int rho v dOmega` over the quadrature nodes. Node samples contribute zero.
pub fn poynting_from_velocities(snap: &Snapshot<'_>, x: &Vector3<f64>, q: &AngularQuadrature) -> Vector3<f64> {
    let mut p = Vector3::zeros();
    for (at, w) in q.nodes.iter().zip(&q.weights) {
        if let Ok(h) = snap.hydro(x, *at) {
            p += h.velocity * (h.rho * w);
        }
    }
    p
}
