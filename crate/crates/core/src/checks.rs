//! The invariant suite behind `emhydro verify`.

use std::fmt;

use nalgebra::{Matrix3, Vector3};
use num_complex::Complex64;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::constants::PhysicalConstants;
use crate::error::Result;
use crate::eulerian::{
    circulation, euler_residuals, poynting_theorem_residual, Loop, Mode, ResidualSteps, SpectralField,
};
use crate::field::{
    check_divergence, em_from_rs, energy_angular, energy_em, energy_spinor, poynting_angular, poynting_em,
    poynting_spinor, rs_from_spinor, GridSpec,
};
use crate::io::{trajectory_rows, FieldSnapshot, RunConfig, TrajectoryRow};
use crate::lagrangian::{integrate_ensemble, newton_residual, poynting_from_velocities, EnsembleSpec, Stepping};
use crate::so3::{
    apply_angular_operator, levi_civita, AngularOperator, AngularQuadrature, BasisFunction, EulerAngles, SpinBasis,
    SpinOperatorSet,
};

type C64 = Complex64;

/// One named check: `value <= tolerance` passes.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
}

impl Check {
    pub fn new(name: impl Into<String>, value: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            value,
            tolerance,
        }
    }

    /// Residual of a discretized quantity: `fine` is measured with half the
    /// steps used for `coarse`. Passes when `fine` is below `floor` or when the
    /// halving reduced it at better than 3.5th order.
    pub fn converging(name: impl Into<String>, coarse: f64, fine: f64, floor: f64) -> Self {
        Self::new(name, fine, floor.max(coarse * 2f64.powf(-3.5)))
    }

    pub fn passed(&self) -> bool {
        self.value <= self.tolerance
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {} = {:.3e} (tol {:.1e})",
            if self.passed() { "PASS" } else { "FAIL" },
            self.name,
            self.value,
            self.tolerance
        )
    }
}

fn max_entry(m: &Matrix3<C64>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Representation algebra: unitarity of `U`, spin commutators, basis
/// orthonormality and angular-operator matrix elements.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlgebraReport {
    pub unitarity: f64,
    pub spin_commutators: f64,
    pub j_commutators: f64,
    pub j_closed_form: f64,
    pub orthonormality: f64,
    pub matrix_elements: f64,
}

pub fn representation_algebra(q: &AngularQuadrature, hbar: f64) -> AlgebraReport {
    let ops = SpinOperatorSet::new(hbar);
    let unitarity = max_entry(&(ops.u * ops.u.adjoint() - Matrix3::identity()));
    let commutator_error = |m: &[Matrix3<C64>; 3]| {
        let mut worst = 0.0f64;
        for i in 0..3 {
            for j in 0..3 {
                let mut rhs = Matrix3::zeros();
                for k in 0..3 {
                    rhs += m[k] * C64::new(0.0, hbar * levi_civita(i, j, k));
                }
                worst = worst.max(max_entry(&(m[i] * m[j] - m[j] * m[i] - rhs)));
            }
        }
        worst
    };
    let closed = SpinOperatorSet::j_closed_form(hbar);
    let j_closed_form = (0..3).map(|i| max_entry(&(ops.j[i] - closed[i]))).fold(0.0, f64::max);

    let mut orthonormality = 0.0f64;
    let mut matrix_elements = 0.0f64;
    for a in 0..3 {
        for b in 0..3 {
            let gram = q.integrate(|at| {
                let u = SpinBasis::eval(at);
                u[a].conj() * u[b]
            });
            let delta = if a == b { 1.0 } else { 0.0 };
            orthonormality = orthonormality.max((gram - delta).norm());
            for (i, ji) in ops.j.iter().enumerate() {
                let m = q.integrate(|at| {
                    let mu = apply_angular_operator(AngularOperator::M(i), &BasisFunction(b), at, hbar)
                        .expect("quadrature nodes are interior");
                    SpinBasis::eval(at)[a].conj() * mu
                });
                matrix_elements = matrix_elements.max((m - ji[(a, b)]).norm());
            }
        }
    }
    AlgebraReport {
        unitarity,
        spin_commutators: commutator_error(&ops.s),
        j_commutators: commutator_error(&ops.j),
        j_closed_form,
        orthonormality,
        matrix_elements,
    }
}

/// Deterministic pseudo-random spinors with entries in the unit square.
pub fn random_spinors(n: usize, seed: u64) -> Vec<Vector3<C64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| Vector3::from_fn(|_, _| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))))
        .collect()
}

/// Largest disagreement among the three routes to energy density and to the
/// Poynting vector, and between the field Poynting vector and the
/// density-weighted angular average of element velocities, over `fields`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObservableReport {
    pub energy: f64,
    pub poynting: f64,
    pub velocity_average: f64,
}

pub fn observable_consistency(
    fields: &[Vector3<C64>],
    q: &AngularQuadrature,
    k: &PhysicalConstants,
) -> ObservableReport {
    let ops = SpinOperatorSet::new(k.hbar);
    let point = GridSpec::new([1, 1, 1], [1.0, 1.0, 1.0]).expect("unit grid");
    let mut out = ObservableReport {
        energy: 0.0,
        poynting: 0.0,
        velocity_average: 0.0,
    };
    for g in fields {
        let (e, b) = em_from_rs(&rs_from_spinor(g), k);
        let u = [energy_em(&e, &b, k), energy_spinor(g), energy_angular(g, q)];
        let p = [
            poynting_em(&e, &b, k),
            poynting_spinor(g, &ops, k),
            poynting_angular(g, q, k),
        ];
        let scale = u[0].max(1.0);
        out.energy = out.energy.max(((u[0] - u[1]).abs().max((u[0] - u[2]).abs())) / scale);
        out.poynting = out
            .poynting
            .max(((p[0] - p[1]).amax().max((p[0] - p[2]).amax())) / scale);

        let uniform = SpectralField::from_modes(
            point,
            *k,
            vec![Mode {
                k: Vector3::zeros(),
                amp: *g,
            }],
        );
        let v = poynting_from_velocities(&uniform.at_time(0.0), &Vector3::zeros(), q);
        out.velocity_average = out.velocity_average.max((v - p[0]).amax() / scale);
    }
    out
}

/// Good-fluid sample points: offset grid points crossed with a few angles,
/// keeping those with `rho > frac * max rho`.
pub fn good_fluid_points(field: &SpectralField, t: f64, count: usize, frac: f64) -> Vec<(Vector3<f64>, EulerAngles)> {
    let snap = field.at_time(t);
    let grid = field.grid;
    let angles = [
        EulerAngles::new(0.7, 0.4, 0.3),
        EulerAngles::new(1.3, 2.1, 1.7),
        EulerAngles::new(2.2, 4.0, 5.1),
        EulerAngles::new(1.0, 5.5, 2.9),
    ];
    let stride = (grid.len() / count.max(1)).max(1);
    let shift = Vector3::from_fn(|a, _| 0.37 * grid.spacing[a]);
    let mut out = Vec::new();
    for p in (0..grid.len()).step_by(stride) {
        let x = grid.point(p) + shift;
        for at in angles {
            if let Ok(h) = snap.hydro(&x, at) {
                if h.rho > frac * field.rho_scale() {
                    out.push((x, at));
                }
            }
        }
    }
    out
}

/// A small lattice over the whole domain when the configuration has none.
pub fn default_lattice(grid: &GridSpec, t_final: f64, dt: f64) -> EnsembleSpec {
    use std::f64::consts::{PI, TAU};
    let l = grid.lengths();
    let counts = [0, 1, 2].map(|a| if grid.dims[a] > 1 { 4 } else { 1 });
    EnsembleSpec {
        counts: [counts[0], counts[1], counts[2], 4, 4, 2],
        lower: [0.0, 0.0, 0.0, 0.1, 0.0, 0.0],
        upper: [
            if counts[0] > 1 { l[0] } else { 0.0 },
            if counts[1] > 1 { l[1] } else { 0.0 },
            if counts[2] > 1 { l[2] } else { 0.0 },
            PI - 0.1,
            TAU,
            TAU,
        ],
        integrator: Default::default(),
        dt,
        t_final,
    }
}

fn table_difference(a: &[TrajectoryRow], b: &[TrajectoryRow]) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    let vals = |r: &TrajectoryRow| {
        [
            r.t,
            r.q1,
            r.q2,
            r.q3,
            r.theta1,
            r.theta2,
            r.theta3,
            r.qdot1,
            r.qdot2,
            r.qdot3,
            r.thetadot1,
            r.thetadot2,
            r.thetadot3,
            r.s_weber,
            r.log_rho,
        ]
    };
    let mut worst = 0.0f64;
    for (x, y) in a.iter().zip(b) {
        if x.label != y.label || x.flags != y.flags {
            return f64::INFINITY;
        }
        for (u, v) in vals(x).iter().zip(vals(y)) {
            let d = (u - v).abs() / u.abs().max(1.0);
            worst = worst.max(if d.is_nan() { 0.0 } else { d });
        }
    }
    worst
}

/// Relative difference between trajectory tables under `hbar -> 2 hbar` and
/// `l -> 2 l`.
pub fn parameter_independence(field: &SpectralField, spec: &EnsembleSpec) -> (f64, f64) {
    let k = field.consts;
    let labels = spec.labels();
    let stepping = Stepping::new(0.0, spec.t_final, spec.dt);
    let table = |k: PhysicalConstants| {
        let f = field.with_constants(k);
        trajectory_rows(&integrate_ensemble(&f, &labels, &stepping), &k)
    };
    let base = table(k);
    let hbar = table(PhysicalConstants {
        hbar: 2.0 * k.hbar,
        ..k
    });
    let l = table(PhysicalConstants { l: 2.0 * k.l, ..k });
    (table_difference(&base, &hbar), table_difference(&base, &l))
}

/// Run every check against `cfg`.
pub fn run_suite(cfg: &RunConfig) -> Result<Vec<Check>> {
    let k = cfg.constants;
    let mut out = Vec::new();

    let [na, nb, ng] = cfg.verify.quadrature;
    let q = AngularQuadrature::new(na, nb, ng)?;
    let alg = representation_algebra(&q, k.hbar);
    out.push(Check::new("algebra.unitarity", alg.unitarity, 1e-14));
    out.push(Check::new(
        "algebra.spin_commutators",
        alg.spin_commutators,
        1e-14 * k.hbar * k.hbar,
    ));
    out.push(Check::new(
        "algebra.j_commutators",
        alg.j_commutators,
        1e-14 * k.hbar * k.hbar,
    ));
    out.push(Check::new("algebra.j_closed_form", alg.j_closed_form, 1e-14 * k.hbar));
    out.push(Check::new("algebra.orthonormality", alg.orthonormality, 1e-10));
    out.push(Check::new(
        "algebra.matrix_elements",
        alg.matrix_elements,
        1e-10 * k.hbar,
    ));

    let fields = random_spinors(cfg.verify.random_fields, 0x5eed);
    let obs = observable_consistency(&fields, &q, &k);
    out.push(Check::new("observables.energy", obs.energy, 1e-8));
    out.push(Check::new("observables.poynting", obs.poynting, 1e-8));
    out.push(Check::new("observables.velocity_average", obs.velocity_average, 1e-8));

    let grid = cfg.grid_spec()?;
    let em0 = cfg.field.sample(grid, 0.0, k.c);
    let (de, db) = check_divergence(&em0);
    out.push(Check::new("field.initial_divergence", de.max(db), 1e-10));
    let field = cfg.build_field()?;
    let period = cfg.period();

    let e0 = field.to_grid(0.0).energy();
    let mut drift = 0.0f64;
    let mut times: Vec<f64> = cfg.times.iter().copied().chain([0.5 * period, period]).collect();
    times.sort_by(f64::total_cmp);
    times.dedup();
    for t in &times {
        let s = field.to_grid(*t);
        drift = drift.max((s.energy() - e0).abs() / e0.max(f64::MIN_POSITIVE));
        let snap = FieldSnapshot {
            t: *t,
            consts: k,
            spinor: s,
        };
        let back = FieldSnapshot::from_bytes(&snap.to_bytes())?;
        out.push(Check::new(
            format!("snapshot.round_trip(t={t})"),
            if back == snap { 0.0 } else { 1.0 },
            0.0,
        ));
    }
    out.push(Check::new("evolution.energy_drift", drift, 1e-12));

    let t = 0.125 * period;
    let length = grid.lengths().iter().cloned().fold(0.0, f64::max);
    let steps = ResidualSteps::for_period(period, length);
    let pts = good_fluid_points(&field, t, 8, 1e-2);
    let coarse = euler_residuals(&field, t, &pts, &steps)?;
    let fine = euler_residuals(&field, t, &pts, &steps.scaled(0.5))?;
    let scale = 1.0 / period;
    let rate = k.c / length * scale;
    let norms = [
        ("hamilton_jacobi", k.hbar * scale),
        ("continuity", field.rho_scale() * scale),
        ("angular_velocity", rate),
        ("velocity", k.c * scale),
        ("angle_rate", rate),
        ("velocity_body", k.c * scale),
    ];
    let pick = |r: &crate::eulerian::EulerResiduals| {
        [
            r.hamilton_jacobi,
            r.continuity,
            r.angular_velocity,
            r.velocity,
            r.angle_rate,
            r.velocity_body,
        ]
    };
    for ((name, norm), (c, f)) in norms.iter().zip(pick(&coarse).into_iter().zip(pick(&fine))) {
        out.push(Check::converging(format!("eulerian.{name}"), c / norm, f / norm, 1e-6));
    }
    let xs: Vec<Vector3<f64>> = pts.iter().map(|p| p.0).collect();
    let qp = AngularQuadrature::new(8, 16, 1)?;
    let energy_scale = field
        .to_grid(0.0)
        .g
        .iter()
        .map(|g| g.norm_squared())
        .fold(0.0, f64::max)
        * scale;
    let pt = poynting_theorem_residual(&field, t, &xs, &qp, &steps) / energy_scale;
    let pt_fine = poynting_theorem_residual(&field, t, &xs, &qp, &steps.scaled(0.5)) / energy_scale;
    out.push(Check::converging("eulerian.poynting_theorem", pt, pt_fine, 1e-6));

    if let Some((x, at)) = pts.first() {
        let w = circulation(&field.at_time(t), &Loop::beta_circle(*x, at.alpha, at.gamma, 1024));
        out.push(Check::new(
            "circulation.beta_loop_rounding",
            w.map_or(f64::INFINITY, |w| w.rounding_error),
            1e-8,
        ));
    }

    let short = (0.125 * period).min(cfg.ensemble.as_ref().map_or(f64::INFINITY, |e| e.t_final));
    let dt = cfg.ensemble.as_ref().map_or(1e-2 * period, |e| e.dt);
    let spec = default_lattice(&grid, short, dt);
    let (dh, dl) = parameter_independence(&field, &spec);
    out.push(Check::new("independence.hbar", dh, 1e-12));
    out.push(Check::new("independence.l", dl, 1e-12));

    let newton_dt = 1e-3 * period;
    let labels = &spec.labels()[..4.min(spec.len())];
    let newton = |dt: f64| -> Result<f64> {
        let mut worst = 0.0f64;
        for tr in integrate_ensemble(&field, labels, &Stepping::new(0.0, short, dt))
            .iter()
            .filter(|tr| tr.ok())
        {
            worst = worst.max(newton_residual(tr, &field)?.max_norm());
        }
        Ok(worst / (k.c * scale).max(rate))
    };
    out.push(Check::converging(
        "lagrangian.newton",
        newton(newton_dt)?,
        newton(0.5 * newton_dt)?,
        1e-6,
    ));
    Ok(out)
}
