//! Pointwise residuals of the Eulerian fluid equations, evaluated with
//! fourth-order centered differences of the spectrally exact fields.

use nalgebra::{Matrix3, Vector3};
use num_complex::Complex64;

use super::hydro::{HydroFields, PsiJet};
use super::spectral::{Snapshot, SpectralField};
use crate::error::Result;
use crate::so3::{a_inv_derivatives, levi_civita, AngularQuadrature, EulerAngles};

/// Finite-difference steps in space, angle and time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResidualSteps {
    pub space: f64,
    pub angle: f64,
    pub time: f64,
}

impl ResidualSteps {
    /// Defaults scaled to the dominant period `period` (time step `1e-4 period`).
    pub fn for_period(period: f64, length: f64) -> Self {
        Self {
            space: 1e-3 * length,
            angle: 1e-3,
            time: 1e-4 * period,
        }
    }

    pub fn scaled(self, f: f64) -> Self {
        Self {
            space: self.space * f,
            angle: self.angle * f,
            time: self.time * f,
        }
    }
}

/// Max-norm residuals of the phase, continuity and force equations.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct EulerResiduals {
    /// `dS/dt + (c/hbar) lambda_i S d_i S + Q`
    pub hamilton_jacobi: f64,
    /// `d rho/dt + d_i(rho v_i) + lambda_i(rho omega_i)`
    pub continuity: f64,
    /// Transport of the angular velocity.
    pub angular_velocity: f64,
    /// Transport of the translational velocity with the Coriolis-type term.
    pub velocity: f64,
    /// Transport of the Euler-angle rates.
    pub angle_rate: f64,
    /// Translational law written with the Euler-angle rates.
    pub velocity_body: f64,
}

impl EulerResiduals {
    pub fn max(&self) -> f64 {
        [
            self.hamilton_jacobi,
            self.continuity,
            self.angular_velocity,
            self.velocity,
            self.angle_rate,
            self.velocity_body,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }

    fn absorb(&mut self, o: &EulerResiduals) {
        self.hamilton_jacobi = self.hamilton_jacobi.max(o.hamilton_jacobi);
        self.continuity = self.continuity.max(o.continuity);
        self.angular_velocity = self.angular_velocity.max(o.angular_velocity);
        self.velocity = self.velocity.max(o.velocity);
        self.angle_rate = self.angle_rate.max(o.angle_rate);
        self.velocity_body = self.velocity_body.max(o.velocity_body);
    }
}

const N_OBS: usize = 17;

/// `[v, omega, angle_rate, Q, rho v, rho omega, rho]`
fn observables(h: &HydroFields) -> [f64; N_OBS] {
    let mut o = [0.0; N_OBS];
    for i in 0..3 {
        o[i] = h.velocity[i];
        o[3 + i] = h.angular_velocity[i];
        o[6 + i] = h.angle_rate[i];
        o[10 + i] = h.rho * h.velocity[i];
        o[13 + i] = h.rho * h.angular_velocity[i];
    }
    o[9] = h.quantum_potential;
    o[16] = h.rho;
    o
}

fn shifted(x: &Vector3<f64>, at: EulerAngles, mu: usize, d: f64) -> (Vector3<f64>, EulerAngles) {
    let mut x = *x;
    let mut a = at.to_array();
    if mu < 3 {
        x[mu] += d;
    } else {
        a[mu - 3] += d;
    }
    (x, EulerAngles::from_array(a))
}

/// `(8 (f1 - f-1) - (f2 - f-2)) / 12 h`
fn five_point(fm2: f64, fm1: f64, fp1: f64, fp2: f64, h: f64) -> f64 {
    (8.0 * (fp1 - fm1) - (fp2 - fm2)) / (12.0 * h)
}

/// Residuals at a single point. `snaps` holds the field at `t - 2h .. t + 2h`.
fn point_residuals(
    snaps: &[Snapshot<'_>; 5],
    x: &Vector3<f64>,
    at: EulerAngles,
    steps: &ResidualSteps,
) -> Result<EulerResiduals> {
    let k = snaps[2].field.consts;
    let ratio = k.c / k.hbar;
    let center = snaps[2].hydro(x, at)?;
    // d[mu][n]: derivative of observable n along coordinate mu (6 = time).
    let mut d = [[0.0; N_OBS]; 7];
    for (mu, dm) in d.iter_mut().enumerate().take(6) {
        let h = if mu < 3 { steps.space } else { steps.angle };
        let mut vals = [[0.0; N_OBS]; 4];
        for (slot, m) in [-2.0, -1.0, 1.0, 2.0].iter().enumerate() {
            let (xs, a) = shifted(x, at, mu, m * h);
            vals[slot] = observables(&snaps[2].hydro(&xs, a)?);
        }
        for n in 0..N_OBS {
            dm[n] = five_point(vals[0][n], vals[1][n], vals[2][n], vals[3][n], h);
        }
    }
    let mut vals = [[0.0; N_OBS]; 4];
    let mut psis = [Complex64::default(); 4];
    for (slot, s) in [0usize, 1, 3, 4].iter().enumerate() {
        let h = snaps[*s].hydro(x, at)?;
        vals[slot] = observables(&h);
        psis[slot] = h.psi;
    }
    for n in 0..N_OBS {
        d[6][n] = five_point(vals[0][n], vals[1][n], vals[2][n], vals[3][n], steps.time);
    }
    let ds_dt = k.hbar * (8.0 * (psis[2] / psis[1]).arg() - (psis[3] / psis[0]).arg()) / (12.0 * steps.time);

    let a = center.frame.a;
    let a_inv = center.frame.a_inv;
    let v = center.velocity;
    let w = center.angular_velocity;
    let vc = center.angle_rate;
    let material = |n: usize| -> f64 { d[6][n] + (0..3).map(|j| v[j] * d[j][n] + vc[j] * d[3 + j][n]).sum::<f64>() };
    let grad_q = Vector3::from_fn(|i, _| d[i][9]);
    let angle_grad_q = Vector3::from_fn(|r, _| d[3 + r][9]);
    let lambda_q = a * angle_grad_q;

    let hj = ds_dt + ratio * center.lambda_s.dot(&center.grad_x_s) + center.quantum_potential;

    let mut cont = d[6][16];
    for i in 0..3 {
        cont += d[i][10 + i];
        for r in 0..3 {
            cont += a[(i, r)] * d[3 + r][13 + i];
        }
    }

    let mut r24 = Vector3::zeros();
    let mut r25 = Vector3::zeros();
    let mut r28 = Vector3::zeros();
    let mut r29 = Vector3::zeros();
    let da = a_inv_derivatives(at);
    // curvature[s] = A_is d_r(A_inv)_iq vc_q vc_r
    let mut conn = Matrix3::zeros();
    for r in 0..3 {
        conn += da[r] * vc[r];
    }
    let curvature = a.transpose() * (conn * vc);
    for i in 0..3 {
        let mut coriolis = 0.0;
        let mut body = 0.0;
        for j in 0..3 {
            for kk in 0..3 {
                let e = levi_civita(i, j, kk);
                if e == 0.0 {
                    continue;
                }
                coriolis += e * w[j] * v[kk];
                body += e * v[j] * (a_inv.row(kk) * vc)[0];
            }
        }
        r24[i] = material(3 + i) + ratio * grad_q[i];
        r25[i] = material(i) - coriolis + ratio * lambda_q[i];
        r28[i] = material(6 + i) + curvature[i] + ratio * (a.transpose() * grad_q)[i];
        r29[i] = material(i) + body + ratio * lambda_q[i];
    }
    Ok(EulerResiduals {
        hamilton_jacobi: hj.abs(),
        continuity: cont.abs(),
        angular_velocity: r24.amax(),
        velocity: r25.amax(),
        angle_rate: r28.amax(),
        velocity_body: r29.amax(),
    })
}

fn stencil(field: &SpectralField, t: f64, h: f64) -> [Snapshot<'_>; 5] {
    [-2.0, -1.0, 0.0, 1.0, 2.0].map(|m| field.at_time(t + m * h))
}

/// Max-norm residuals over a node-avoiding sample set at time `t`.
pub fn euler_residuals(
    field: &SpectralField,
    t: f64,
    pts: &[(Vector3<f64>, EulerAngles)],
    steps: &ResidualSteps,
) -> Result<EulerResiduals> {
    let snaps = stencil(field, t, steps.time);
    let mut out = EulerResiduals::default();
    for (x, at) in pts {
        out.absorb(&point_residuals(&snaps, x, *at, steps)?);
    }
    Ok(out)
}

/// `rho v_i = c Im(psi^* lambda_i psi)`, smooth through nodes.
fn angular_flux(jet: &PsiJet, at: EulerAngles, c: f64) -> Vector3<f64> {
    let a = crate::so3::body_frame_unchecked(at.alpha, at.beta).a;
    Vector3::from_fn(|i, _| {
        let lam: Complex64 = (0..3).map(|r| jet.da[r] * a[(i, r)]).sum();
        c * (jet.psi.conj() * lam).im
    })
}

/// Energy density `int rho dOmega` and flux `int rho v dOmega` at one point.
pub fn angular_moments(snap: &Snapshot<'_>, x: &Vector3<f64>, q: &AngularQuadrature) -> (f64, Vector3<f64>) {
    let local = snap.local(x);
    let c = snap.field.consts.c;
    let mut u = 0.0;
    let mut p = Vector3::zeros();
    for (at, w) in q.nodes.iter().zip(&q.weights) {
        let jet = PsiJet::new(&local, *at);
        u += w * jet.psi.norm_sqr();
        p += angular_flux(&jet, *at, c) * *w;
    }
    (u, p)
}

/// Angular average of the continuity equation: `du/dt + div(int rho v dOmega)`
/// at each sample point, which is Poynting's theorem. Returns the max norm.
pub fn poynting_theorem_residual(
    field: &SpectralField,
    t: f64,
    xs: &[Vector3<f64>],
    q: &AngularQuadrature,
    steps: &ResidualSteps,
) -> f64 {
    let snaps = stencil(field, t, steps.time);
    let mut worst = 0.0f64;
    for x in xs {
        let u: Vec<f64> = [0usize, 1, 3, 4]
            .iter()
            .map(|&s| angular_moments(&snaps[s], x, q).0)
            .collect();
        let mut r = five_point(u[0], u[1], u[2], u[3], steps.time);
        for i in 0..3 {
            let p: Vec<f64> = [-2.0, -1.0, 1.0, 2.0]
                .iter()
                .map(|m| {
                    let mut y = *x;
                    y[i] += m * steps.space;
                    angular_moments(&snaps[2], &y, q).1[i]
                })
                .collect();
            r += five_point(p[0], p[1], p[2], p[3], steps.space);
        }
        worst = worst.max(r.abs());
    }
    worst
}
