//! Fields from trajectories: invert labels by backward integration, carry
//! density and phase forward, and project back onto the spin-1 basis.

use nalgebra::{Matrix6, Vector3};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::deformation::{cloud_labels, deformation, CloudStep, DeformationData};
use super::phase::{reference_gauge, Point};
use crate::constants::PhysicalConstants;
use crate::error::{Error, Result};
use crate::eulerian::SpectralField;
use crate::field::{EMFieldGrid, GridSpec, SpinorField};
use crate::lagrangian::{integrate_ensemble, FluidLabel, Stepping, Trajectory};
use crate::so3::{AngularQuadrature, EulerAngles, SpinBasis};

type C64 = Complex64;

/// How the current density is obtained from the initial one.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DensityRoute {
    /// `rho = rho_0 / D` with `D` from the label-cloud Jacobian.
    #[default]
    Jacobian,
    /// `rho` carried along the path by the flow divergence.
    Transport,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReconstructionConfig {
    /// `(n_alpha, n_beta, n_gamma)`
    pub quadrature: [usize; 3],
    pub dt: f64,
    /// Defaults to `CloudStep::for_length` of the longest grid axis.
    pub cloud: Option<CloudStep>,
    pub density: DensityRoute,
    /// Offset of the sampling lattice from the grid nodes, in cells.
    pub offset: [f64; 3],
    /// Point where the time gauge is fixed. Defaults to the densest query.
    pub reference: Option<Point>,
}

impl ReconstructionConfig {
    /// Jacobian density, half-cell offset, default cloud.
    pub fn new(quadrature: [usize; 3], dt: f64) -> Self {
        Self {
            quadrature,
            dt,
            cloud: None,
            density: DensityRoute::Jacobian,
            offset: [0.5; 3],
            reference: None,
        }
    }

    /// Sampling positions: grid nodes shifted by `offset` cells.
    pub fn sample_points(&self, grid: &GridSpec) -> Vec<Vector3<f64>> {
        let shift = Vector3::from_fn(|a, _| self.offset[a] * grid.spacing[a]);
        (0..grid.len()).map(|p| grid.point(p) + shift).collect()
    }

    pub fn cloud_step(&self, grid: &GridSpec) -> CloudStep {
        self.cloud.unwrap_or_else(|| {
            let len = (0..3)
                .filter(|&a| grid.dims[a] > 1)
                .map(|a| grid.lengths()[a])
                .fold(0.0, f64::max);
            CloudStep::for_length(if len > 0.0 { len } else { 1.0 })
        })
    }
}

/// A query point with its recovered label.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LabelMapSample {
    pub query: (Vector3<f64>, EulerAngles),
    pub t: f64,
    pub label: FluidLabel,
    /// Forward-map mismatch `|xi(label, t) - query|`, filled in after the
    /// forward pass (NaN until then).
    pub residual: f64,
}

fn backward(
    field: &SpectralField,
    queries: &[(Vector3<f64>, EulerAngles)],
    t: f64,
    dt: f64,
) -> Vec<Result<LabelMapSample>> {
    let starts: Vec<FluidLabel> = queries.iter().map(|(x, a)| FluidLabel::new(*x, *a)).collect();
    let back = integrate_ensemble(field, &starts, &Stepping::new(t, 0.0, dt).recording(usize::MAX));
    back.into_iter()
        .zip(queries)
        .map(|(tr, q)| match tr.error {
            Some(e) => Err(e),
            None => Ok(LabelMapSample {
                query: *q,
                t,
                label: FluidLabel::from_array(tr.end_point().expect("non-empty")),
                residual: f64::NAN,
            }),
        })
        .collect()
}

fn distance(a: &[f64; 6], q: &(Vector3<f64>, EulerAngles)) -> f64 {
    let b = q.1.to_array();
    let d = [
        a[0] - q.0.x,
        a[1] - q.0.y,
        a[2] - q.0.z,
        a[3] - b[0],
        a[4] - b[1],
        a[5] - b[2],
    ];
    d.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Labels for `queries` at time `t`, by integrating backward to 0 and checking
/// the forward re-integration.
pub fn invert_labels(
    field: &SpectralField,
    queries: &[(Vector3<f64>, EulerAngles)],
    t: f64,
    dt: f64,
) -> Vec<Result<LabelMapSample>> {
    let mut out = backward(field, queries, t, dt);
    let ok: Vec<usize> = (0..out.len()).filter(|&i| out[i].is_ok()).collect();
    let labels: Vec<FluidLabel> = ok.iter().map(|&i| out[i].as_ref().unwrap().label).collect();
    let fwd = integrate_ensemble(field, &labels, &Stepping::new(0.0, t, dt).recording(usize::MAX));
    for (i, tr) in ok.into_iter().zip(fwd) {
        match tr.error {
            Some(e) => out[i] = Err(e),
            None => {
                let s = out[i].as_mut().unwrap();
                s.residual = distance(&tr.end_point().unwrap(), &s.query);
            }
        }
    }
    out
}

/// Everything recovered for one query point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuerySample {
    pub map: LabelMapSample,
    pub deformation: DeformationData,
    pub rho0: f64,
    /// `rho_0 / D`
    pub rho_jacobian: f64,
    /// `rho` carried by the divergence along the path.
    pub rho_transport: f64,
    /// Transported phase at the query, initial phase included.
    pub s_weber: f64,
}

impl QuerySample {
    pub fn rho(&self, route: DensityRoute) -> f64 {
        match route {
            DensityRoute::Jacobian => self.rho_jacobian,
            DensityRoute::Transport => self.rho_transport,
        }
    }

    pub fn psi(&self, route: DensityRoute, k: &PhysicalConstants) -> C64 {
        C64::from_polar(self.rho(route).sqrt(), self.s_weber / k.hbar)
    }
}

/// Recover label, deformation, density and phase at every query point.
pub fn reconstruct_queries(
    field: &SpectralField,
    queries: &[(Vector3<f64>, EulerAngles)],
    t: f64,
    dt: f64,
    step: &CloudStep,
) -> Vec<Result<QuerySample>> {
    let maps = backward(field, queries, t, dt);
    let ok: Vec<usize> = (0..maps.len()).filter(|&i| maps[i].is_ok()).collect();
    let mut labels = Vec::with_capacity(ok.len() * 13);
    for &i in &ok {
        let l = maps[i].as_ref().unwrap().label;
        labels.push(l);
        labels.extend(cloud_labels(&l, step));
    }
    let fwd = integrate_ensemble(field, &labels, &Stepping::new(0.0, t, dt).recording(usize::MAX));
    let mut out: Vec<Result<QuerySample>> = maps.into_iter().map(|m| m.map(|_| unreachable_sample())).collect();
    for (n, &i) in ok.iter().enumerate() {
        let group = &fwd[13 * n..13 * n + 13];
        out[i] = assemble_sample(&group[0], &group[1..], queries[i], t, step);
    }
    out
}

fn unreachable_sample() -> QuerySample {
    QuerySample {
        map: LabelMapSample {
            query: (Vector3::zeros(), EulerAngles::new(0.0, 0.0, 0.0)),
            t: 0.0,
            label: FluidLabel::new(Vector3::zeros(), EulerAngles::new(0.0, 0.0, 0.0)),
            residual: f64::NAN,
        },
        deformation: DeformationData {
            flow: Matrix6::identity(),
            jacobian: 1.0,
            cofactors: Matrix6::identity(),
            d: 1.0,
        },
        rho0: 0.0,
        rho_jacobian: 0.0,
        rho_transport: 0.0,
        s_weber: 0.0,
    }
}

fn assemble_sample(
    center: &Trajectory,
    cloud: &[Trajectory],
    query: (Vector3<f64>, EulerAngles),
    t: f64,
    step: &CloudStep,
) -> Result<QuerySample> {
    for tr in std::iter::once(center).chain(cloud) {
        if let Some(e) = &tr.error {
            return Err(e.clone());
        }
    }
    let end = center.end_point().expect("non-empty");
    let last = center.len() - 1;
    let label = center.label;
    let deformation = if t == 0.0 {
        DeformationData::new(Matrix6::identity(), label.theta0.alpha, end[3])?
    } else {
        let ends: [[f64; 6]; 12] = std::array::from_fn(|n| cloud[n].end_point().expect("non-empty"));
        deformation(&label, &ends, end[3], step)?
    };
    if !(deformation.d > 0.0) {
        return Err(Error::DegenerateJacobian {
            jacobian: deformation.jacobian,
        });
    }
    let rho0 = center.log_rho[0].exp();
    Ok(QuerySample {
        map: LabelMapSample {
            query,
            t,
            label,
            residual: distance(&end, &query),
        },
        deformation,
        rho0,
        rho_jacobian: rho0 / deformation.d,
        rho_transport: center.log_rho[last].exp(),
        s_weber: center.s_weber[last],
    })
}

/// `G_a(x) = sum_n w_n psi(x, alpha_n) u_a^*(alpha_n)`; `psi` is grid-major,
/// quadrature-node-minor.
pub fn assemble_fields(
    grid: GridSpec,
    q: &AngularQuadrature,
    psi: &[C64],
    k: &PhysicalConstants,
) -> Result<(SpinorField, EMFieldGrid)> {
    let m = q.len();
    if psi.len() != grid.len() * m {
        return Err(Error::ShapeMismatch {
            expected: grid.len() * m,
            found: psi.len(),
        });
    }
    let basis: Vec<[C64; 3]> = q.nodes.iter().map(|n| SpinBasis::eval(*n)).collect();
    let g = (0..grid.len())
        .map(|p| {
            let mut acc = Vector3::zeros();
            for n in 0..m {
                let v = psi[p * m + n] * q.weights[n];
                for a in 0..3 {
                    acc[a] += v * basis[n][a].conj();
                }
            }
            acc
        })
        .collect();
    let spinor = SpinorField { grid, g };
    let em = spinor.to_em(k);
    Ok((spinor, em))
}

/// Reconstruction at one time on the (offset) sampling lattice of the grid.
#[derive(Debug, Clone)]
pub struct ReconstructedState {
    pub t: f64,
    pub points: Vec<Vector3<f64>>,
    pub quadrature: AngularQuadrature,
    /// Grid-major, node-minor. Zero where the query failed.
    pub psi: Vec<C64>,
    pub rho: Vec<f64>,
    /// Transported phase; NaN where the query failed.
    pub s: Vec<f64>,
    pub spinor: SpinorField,
    pub em: EMFieldGrid,
    /// Queries that hit a node, pole or degenerate map (set to `psi = 0`).
    pub failures: usize,
    pub max_inversion_residual: f64,
    pub min_d: f64,
    pub max_d: f64,
    /// Largest `|log D_jacobian - log D_transport|` over the queries.
    pub max_log_d_mismatch: f64,
    pub max_cofactor_error: f64,
    /// Time gauge at the reference point; NaN when no good-fluid reference
    /// could be integrated.
    pub f_t: f64,
    pub reference: Option<Point>,
}

/// Spectral reference spinor at `points`, on the layout of `grid`.
pub fn reference_spinor(field: &SpectralField, t: f64, points: &[Vector3<f64>]) -> SpinorField {
    let snap = field.at_time(t);
    SpinorField {
        grid: field.grid,
        g: points.iter().map(|x| snap.local(x).g).collect(),
    }
}

/// Full pipeline at time `t`: every grid point times every quadrature node.
pub fn reconstruct(field: &SpectralField, t: f64, cfg: &ReconstructionConfig) -> Result<ReconstructedState> {
    let [na, nb, ng] = cfg.quadrature;
    let q = AngularQuadrature::new(na, nb, ng)?;
    let grid = field.grid;
    let points = cfg.sample_points(&grid);
    let mut queries = Vec::with_capacity(grid.len() * q.len());
    for x in &points {
        for node in &q.nodes {
            queries.push((*x, *node));
        }
    }
    let step = cfg.cloud_step(&grid);
    let samples = reconstruct_queries(field, &queries, t, cfg.dt, &step);
    let k = field.consts;
    let mut psi = Vec::with_capacity(samples.len());
    let mut rho = Vec::with_capacity(samples.len());
    let mut s = Vec::with_capacity(samples.len());
    let mut failures = 0;
    let mut max_res = 0.0f64;
    let mut min_d = f64::INFINITY;
    let mut max_d = 0.0f64;
    let mut max_mis = 0.0f64;
    let mut max_cof = 0.0f64;
    for r in &samples {
        match r {
            Ok(smp) => {
                psi.push(smp.psi(cfg.density, &k));
                rho.push(smp.rho(cfg.density));
                s.push(smp.s_weber);
                max_res = max_res.max(smp.map.residual);
                min_d = min_d.min(smp.deformation.d);
                max_d = max_d.max(smp.deformation.d);
                max_mis = max_mis.max((smp.rho_jacobian.ln() - smp.rho_transport.ln()).abs());
                let scale = smp.deformation.jacobian.abs().max(1.0);
                max_cof = max_cof.max(smp.deformation.cofactor_identity_error() / scale);
            }
            Err(_) => {
                failures += 1;
                psi.push(C64::default());
                rho.push(0.0);
                s.push(f64::NAN);
            }
        }
    }
    let (spinor, em) = assemble_fields(grid, &q, &psi, &k)?;
    let reference = cfg.reference.or_else(|| {
        (0..queries.len())
            .filter(|&i| samples[i].is_ok())
            .max_by(|&a, &b| rho[a].total_cmp(&rho[b]))
            .map(|i| queries[i])
    });
    let f_t = reference
        .and_then(|p| reference_gauge(field, p, t, gauge_segments(t, cfg.dt)).ok())
        .map_or(f64::NAN, |g| g.f_t);
    Ok(ReconstructedState {
        t,
        points,
        quadrature: q,
        psi,
        rho,
        s,
        spinor,
        em,
        failures,
        max_inversion_residual: max_res,
        min_d,
        max_d,
        max_log_d_mismatch: max_mis,
        max_cofactor_error: max_cof,
        f_t,
        reference,
    })
}

fn gauge_segments(t: f64, dt: f64) -> usize {
    ((t.abs() / dt.abs()).ceil() as usize).max(1)
}
