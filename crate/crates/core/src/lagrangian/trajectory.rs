//! Fluid-element paths guided by the Eulerian phase, with phase and
//! log-density carried along.

use std::fmt;

use nalgebra::Vector3;
use rayon::prelude::*;

use crate::constants::PhysicalConstants;
use crate::error::{Error, Result};
use crate::eulerian::{HydroFields, Snapshot, SpectralField};
use crate::so3::{euler_a, EulerAngles};

/// Initial position and orientation of a fluid element.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FluidLabel {
    pub q0: Vector3<f64>,
    pub theta0: EulerAngles,
}

impl FluidLabel {
    pub fn new(q0: Vector3<f64>, theta0: EulerAngles) -> Self {
        Self { q0, theta0 }
    }

    pub fn to_array(&self) -> [f64; 6] {
        let a = self.theta0.to_array();
        [self.q0.x, self.q0.y, self.q0.z, a[0], a[1], a[2]]
    }

    pub fn from_array(y: [f64; 6]) -> Self {
        Self {
            q0: Vector3::new(y[0], y[1], y[2]),
            theta0: EulerAngles::new(y[3], y[4], y[5]),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct TrajectoryFlags {
    pub pole: bool,
    pub node: bool,
    pub step: bool,
}

impl TrajectoryFlags {
    pub fn is_empty(&self) -> bool {
        !(self.pole || self.node || self.step)
    }

    fn record(&mut self, e: &Error) {
        match e {
            Error::PoleSingularity { .. } => self.pole = true,
            Error::NodeTooClose { .. } => self.node = true,
            Error::StepTooLarge { .. } => self.step = true,
            _ => {}
        }
    }
}

impl fmt::Display for TrajectoryFlags {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = Vec::new();
        if self.pole {
            parts.push("pole");
        }
        if self.node {
            parts.push("node");
        }
        if self.step {
            parts.push("step");
        }
        write!(f, "{}", parts.join("|"))
    }
}

/// One sampled path. Angles are stored as continuous coordinates; see
/// [`Trajectory::canonical_theta`] for the reduced form.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub label: FluidLabel,
    pub times: Vec<f64>,
    pub q: Vec<Vector3<f64>>,
    pub theta: Vec<EulerAngles>,
    pub qdot: Vec<Vector3<f64>>,
    pub thetadot: Vec<Vector3<f64>>,
    /// Phase carried along the path, including the initial phase.
    pub s_weber: Vec<f64>,
    /// `log rho` carried along the path; NaN when not transported.
    pub log_rho: Vec<f64>,
    pub flags: TrajectoryFlags,
    pub error: Option<Error>,
}

impl Trajectory {
    fn start(label: FluidLabel) -> Self {
        Self {
            label,
            times: Vec::new(),
            q: Vec::new(),
            theta: Vec::new(),
            qdot: Vec::new(),
            thetadot: Vec::new(),
            s_weber: Vec::new(),
            log_rho: Vec::new(),
            flags: TrajectoryFlags::default(),
            error: None,
        }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn ok(&self) -> bool {
        self.error.is_none()
    }

    /// Final phase-space point `(q, theta)`.
    pub fn end_point(&self) -> Option<[f64; 6]> {
        let k = self.len().checked_sub(1)?;
        let a = self.theta[k].to_array();
        Some([self.q[k].x, self.q[k].y, self.q[k].z, a[0], a[1], a[2]])
    }

    /// Angles reduced to canonical ranges, with the whole turns removed from
    /// `(beta, gamma)`.
    pub fn canonical_theta(&self, k: usize) -> (EulerAngles, [i64; 2]) {
        self.theta[k].canonical()
    }

    fn fail(&mut self, e: Error) {
        self.flags.record(&e);
        self.error = Some(e);
    }
}

/// Integration controls shared by a whole ensemble.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stepping {
    pub t0: f64,
    pub t_final: f64,
    /// Nominal step magnitude; the sign follows `t_final - t0`.
    pub dt: f64,
    /// Keep every `record_every`-th step (the final step is always kept).
    pub record_every: usize,
    /// Largest allowed translation per step; `None` disables the guard.
    pub max_displacement: Option<f64>,
    /// Axes counted by the guard. Along an unresolved axis the field is
    /// uniform, so motion there cannot skip a cell.
    pub guard_axes: [bool; 3],
}

impl Stepping {
    pub fn new(t0: f64, t_final: f64, dt: f64) -> Self {
        Self {
            t0,
            t_final,
            dt,
            record_every: 1,
            max_displacement: None,
            guard_axes: [true; 3],
        }
    }

    pub fn recording(mut self, every: usize) -> Self {
        self.record_every = every.max(1);
        self
    }

    pub fn guarded(mut self, limit: f64) -> Self {
        self.max_displacement = Some(limit);
        self
    }

    pub fn guarding_axes(mut self, axes: [bool; 3]) -> Self {
        self.guard_axes = axes;
        self
    }

    /// Number of steps and the signed step actually used.
    pub fn steps(&self) -> (usize, f64) {
        let span = self.t_final - self.t0;
        if span == 0.0 {
            return (0, 0.0);
        }
        let n = (span.abs() / self.dt.abs()).ceil().max(1.0) as usize;
        (n, span / n as f64)
    }
}

/// Phase-space state: `q, theta, S, log rho`.
type State = [f64; 8];

fn angles_of(y: &State) -> EulerAngles {
    EulerAngles::new(y[3], y[4], y[5])
}

fn rhs(snap: &Snapshot<'_>, y: &State) -> Result<State> {
    let x = Vector3::new(y[0], y[1], y[2]);
    let h = snap.hydro(&x, angles_of(y))?;
    let k = snap.field.consts;
    let mut dy = [0.0; 8];
    for i in 0..3 {
        dy[i] = h.velocity[i];
        dy[3 + i] = h.angle_rate[i];
    }
    dy[6] = phase_rate(&h, &k);
    dy[7] = -h.divergence;
    Ok(dy)
}

/// `(hbar/c) qdot^T A_inv thetadot - Q`
pub fn phase_rate(h: &HydroFields, k: &PhysicalConstants) -> f64 {
    k.hbar / k.c * h.velocity.dot(&(h.frame.a_inv * h.angle_rate)) - h.quantum_potential
}

fn axpy(y: &State, a: f64, d: &State) -> State {
    let mut out = *y;
    for (o, v) in out.iter_mut().zip(d) {
        *o += a * v;
    }
    out
}

struct Member {
    y: State,
    traj: Trajectory,
    alive: bool,
}

impl Member {
    fn push(&mut self, t: f64, y: &State, h: &HydroFields) {
        let tr = &mut self.traj;
        tr.times.push(t);
        tr.q.push(Vector3::new(y[0], y[1], y[2]));
        tr.theta.push(angles_of(y));
        tr.qdot.push(h.velocity);
        tr.thetadot.push(h.angle_rate);
        tr.s_weber.push(y[6]);
        tr.log_rho.push(y[7]);
    }
}

/// Integrate many labels in lockstep with classic RK4. Snapshots of the
/// field at the three stage times are shared across the ensemble.
pub fn integrate_ensemble(field: &SpectralField, labels: &[FluidLabel], stepping: &Stepping) -> Vec<Trajectory> {
    let t0 = stepping.t0;
    let snap0 = field.at_time(t0);
    let mut members: Vec<Member> = labels
        .par_iter()
        .map(|label| {
            let mut traj = Trajectory::start(*label);
            let x = label.q0;
            let mut y = [0.0; 8];
            y[..3].copy_from_slice(x.as_slice());
            y[3..6].copy_from_slice(&label.theta0.to_array());
            match snap0.hydro(&x, label.theta0) {
                Ok(h) => {
                    y[6] = field.consts.hbar * h.psi.arg();
                    y[7] = h.rho.ln();
                    let mut m = Member { y, traj, alive: true };
                    m.push(t0, &y, &h);
                    m
                }
                Err(e) => {
                    traj.fail(e);
                    Member { y, traj, alive: false }
                }
            }
        })
        .collect();

    let (n, dt) = stepping.steps();
    for step in 0..n {
        let t = t0 + step as f64 * dt;
        let last = step + 1 == n;
        let t_next = if last { stepping.t_final } else { t + dt };
        let s_mid = field.at_time(t + 0.5 * dt);
        let s_end = field.at_time(t_next);
        let s_start = field.at_time(t);
        let record = last || (step + 1) % stepping.record_every == 0;
        members.par_iter_mut().filter(|m| m.alive).for_each(|m| {
            let result = rk4_step(&s_start, &s_mid, &s_end, &m.y, dt).and_then(|y| {
                let x = Vector3::new(y[0], y[1], y[2]);
                let d = x - Vector3::new(m.y[0], m.y[1], m.y[2]);
                let moved = (0..3)
                    .filter(|&a| stepping.guard_axes[a])
                    .map(|a| d[a] * d[a])
                    .sum::<f64>()
                    .sqrt();
                if let Some(limit) = stepping.max_displacement {
                    if moved > limit {
                        return Err(Error::StepTooLarge {
                            displacement: moved,
                            limit,
                        });
                    }
                }
                let h = if record {
                    Some(s_end.hydro(&x, angles_of(&y))?)
                } else {
                    None
                };
                Ok((y, h))
            });
            match result {
                Ok((y, h)) => {
                    m.y = y;
                    if let Some(h) = h {
                        m.push(t_next, &y, &h);
                    }
                }
                Err(e) => {
                    m.traj.fail(e);
                    m.alive = false;
                }
            }
        });
    }
    members.into_iter().map(|m| m.traj).collect()
}

fn rk4_step(s0: &Snapshot<'_>, sm: &Snapshot<'_>, s1: &Snapshot<'_>, y: &State, dt: f64) -> Result<State> {
    let k1 = rhs(s0, y)?;
    let k2 = rhs(sm, &axpy(y, 0.5 * dt, &k1))?;
    let k3 = rhs(sm, &axpy(y, 0.5 * dt, &k2))?;
    let k4 = rhs(s1, &axpy(y, dt, &k3))?;
    let mut out = *y;
    for i in 0..8 {
        out[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    Ok(out)
}

/// Single guided trajectory from `t = 0` to `t_final`.
pub fn integrate_guided(field: &SpectralField, label: FluidLabel, t_final: f64, dt: f64) -> Trajectory {
    let stepping = Stepping::new(0.0, t_final, dt);
    integrate_ensemble(field, &[label], &stepping).remove(0)
}

/// Initial velocities `(qdot0, thetadot0)` from the initial phase gradients.
pub fn initial_velocity(
    label: &FluidLabel,
    grad_x_s: &Vector3<f64>,
    grad_angle_s: &Vector3<f64>,
    k: &PhysicalConstants,
) -> Result<(Vector3<f64>, Vector3<f64>)> {
    let frame = euler_a(label.theta0)?;
    let ratio = k.c / k.hbar;
    Ok((frame.a * grad_angle_s * ratio, frame.a.transpose() * grad_x_s * ratio))
}

/// Trajectory with the internal force switched off: the angular velocity is
/// constant and the translational velocity precesses about it.
/// `log_rho` is not transported (NaN).
pub fn integrate_classical(
    label: FluidLabel,
    qdot0: Vector3<f64>,
    omega0: Vector3<f64>,
    t_final: f64,
    dt: f64,
    k: &PhysicalConstants,
) -> Trajectory {
    let mut traj = Trajectory::start(label);
    // q, theta, v
    let mut y = [0.0; 9];
    y[..3].copy_from_slice(label.q0.as_slice());
    y[3..6].copy_from_slice(&label.theta0.to_array());
    y[6..].copy_from_slice(qdot0.as_slice());
    let mut s = 0.0;
    let f = |y: &[f64; 9]| -> Result<[f64; 9]> {
        let a = euler_a(EulerAngles::new(y[3], y[4], y[5]))?.a;
        let v = Vector3::new(y[6], y[7], y[8]);
        let rate = a.transpose() * omega0;
        let acc = omega0.cross(&v);
        Ok([v.x, v.y, v.z, rate.x, rate.y, rate.z, acc.x, acc.y, acc.z])
    };
    let push = |traj: &mut Trajectory, t: f64, y: &[f64; 9], s: f64| -> Result<()> {
        let at = EulerAngles::new(y[3], y[4], y[5]);
        let a = euler_a(at)?.a;
        traj.times.push(t);
        traj.q.push(Vector3::new(y[0], y[1], y[2]));
        traj.theta.push(at);
        traj.qdot.push(Vector3::new(y[6], y[7], y[8]));
        traj.thetadot.push(a.transpose() * omega0);
        traj.s_weber.push(s);
        traj.log_rho.push(f64::NAN);
        Ok(())
    };
    if let Err(e) = push(&mut traj, 0.0, &y, s) {
        traj.fail(e);
        return traj;
    }
    let (n, h) = Stepping::new(0.0, t_final, dt).steps();
    let ratio = k.hbar / k.c;
    let step = |y: &[f64; 9]| -> Result<[f64; 9]> {
        let k1 = f(y)?;
        let k2 = f(&add9(y, 0.5 * h, &k1))?;
        let k3 = f(&add9(y, 0.5 * h, &k2))?;
        let k4 = f(&add9(y, h, &k3))?;
        let mut out = *y;
        for i in 0..9 {
            out[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        Ok(out)
    };
    for j in 0..n {
        match step(&y) {
            Ok(next) => {
                // v . omega is conserved by the precession, so the phase rate is constant.
                s += h * ratio * Vector3::new(y[6], y[7], y[8]).dot(&omega0);
                y = next;
                if let Err(e) = push(&mut traj, (j + 1) as f64 * h, &y, s) {
                    traj.fail(e);
                    break;
                }
            }
            Err(e) => {
                traj.fail(e);
                break;
            }
        }
    }
    traj
}

fn add9(y: &[f64; 9], a: f64, d: &[f64; 9]) -> [f64; 9] {
    let mut out = *y;
    for i in 0..9 {
        out[i] += a * d[i];
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stepping_counts() {
        let s = Stepping::new(0.0, 1.0, 0.3);
        let (n, dt) = s.steps();
        assert_eq!(n, 4);
        assert!((dt - 0.25).abs() < 1e-15);
        let (n, dt) = Stepping::new(1.0, 0.0, 0.25).steps();
        assert_eq!(n, 4);
        assert!((dt + 0.25).abs() < 1e-15);
        assert_eq!(Stepping::new(0.5, 0.5, 0.1).steps().0, 0);
    }

    #[test]
    fn classical_precession() {
        let k = PhysicalConstants::default();
        let label = FluidLabel::new(Vector3::zeros(), EulerAngles::new(1.0, 0.2, 0.3));
        let w = Vector3::new(0.0, 0.0, 2.0);
        let v0 = Vector3::new(1.0, 0.0, 0.0);
        let tr = integrate_classical(label, v0, w, 1.0, 1e-3, &k);
        assert!(tr.ok(), "{:?}", tr.error);
        let v = tr.qdot.last().unwrap();
        let expect = Vector3::new(2f64.cos(), 2f64.sin(), 0.0);
        assert!((v - expect).norm() < 1e-9);
        let q = tr.q.last().unwrap();
        let qe = Vector3::new(2f64.sin() / 2.0, (1.0 - 2f64.cos()) / 2.0, 0.0);
        assert!((q - qe).norm() < 1e-9);
    }

    #[test]
    fn flags_display() {
        let f = TrajectoryFlags {
            pole: true,
            node: false,
            step: true,
        };
        assert_eq!(f.to_string(), "pole|step");
        assert_eq!(TrajectoryFlags::default().to_string(), "");
    }
}
