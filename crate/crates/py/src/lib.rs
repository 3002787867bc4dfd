//! Python bindings. Vectors cross the boundary as tuples, fields as lists of
//! per-point tuples in grid order (z fastest).

use std::path::PathBuf;

use emhydro::checks::run_suite;
use emhydro::eulerian::SpectralField;
use emhydro::field::{em_from_rs, psi_eval, rs_from_em, rs_from_spinor, spinor_from_rs, GridSpec, SpinorField};
use emhydro::io::{FieldSnapshot, RunConfig};
use emhydro::lagrangian::{integrate_ensemble, FluidLabel, Stepping, Trajectory as CoreTrajectory};
use emhydro::presets::InitialField;
use emhydro::reconstruct::{compare, reconstruct, reference_spinor, ErrorReport, ReconstructionConfig};
use emhydro::so3::EulerAngles;
use emhydro::{Error, PhysicalConstants};
use nalgebra::Vector3;
use num_complex::Complex64;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

type V3 = (f64, f64, f64);
type C3 = (Complex64, Complex64, Complex64);

fn py_err(e: Error) -> PyErr {
    match e {
        Error::InvalidConfig(_) | Error::ShapeMismatch { .. } | Error::ConstraintViolation(_) => {
            PyValueError::new_err(e.to_string())
        }
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn v3(v: &Vector3<f64>) -> V3 {
    (v.x, v.y, v.z)
}

fn ang(a: EulerAngles) -> V3 {
    (a.alpha, a.beta, a.gamma)
}

fn c3(v: &Vector3<Complex64>) -> C3 {
    (v.x, v.y, v.z)
}

fn vec3<T: nalgebra::Scalar>(t: (T, T, T)) -> Vector3<T> {
    Vector3::new(t.0, t.1, t.2)
}

/// Physical constants `hbar, c, eps0, l`.
#[pyclass(name = "Constants", frozen, from_py_object)]
#[derive(Clone, Copy)]
struct PyConstants(PhysicalConstants);

#[pymethods]
impl PyConstants {
    #[new]
    #[pyo3(signature = (hbar = 1.0, c = 1.0, eps0 = 1.0, l = 1.0))]
    fn new(hbar: f64, c: f64, eps0: f64, l: f64) -> PyResult<Self> {
        let k = PhysicalConstants { hbar, c, eps0, l };
        k.validate().map_err(py_err)?;
        Ok(Self(k))
    }

    #[getter]
    fn hbar(&self) -> f64 {
        self.0.hbar
    }

    #[getter]
    fn c(&self) -> f64 {
        self.0.c
    }

    #[getter]
    fn eps0(&self) -> f64 {
        self.0.eps0
    }

    #[getter]
    fn l(&self) -> f64 {
        self.0.l
    }

    fn __repr__(&self) -> String {
        let k = self.0;
        format!("Constants(hbar={}, c={}, eps0={}, l={})", k.hbar, k.c, k.eps0, k.l)
    }
}

/// Exactly evolving free field on a periodic grid.
#[pyclass(name = "Field", frozen)]
struct PyField {
    field: SpectralField,
    period: f64,
}

impl PyField {
    fn build(init: InitialField, grid: GridSpec, k: PhysicalConstants) -> PyResult<Self> {
        let period = init.period(k.c);
        Ok(Self {
            field: init.build(grid, k).map_err(py_err)?,
            period,
        })
    }
}

#[pymethods]
impl PyField {
    /// Linearly polarized wave along z on an `n`-point line of length `length`.
    #[staticmethod]
    #[pyo3(signature = (amplitude, k, n, length = 1.0, constants = None))]
    fn plane_wave(amplitude: f64, k: f64, n: usize, length: f64, constants: Option<PyConstants>) -> PyResult<Self> {
        let consts = constants.map_or_else(PhysicalConstants::default, |c| c.0);
        Self::build(
            InitialField::plane_wave(amplitude, k),
            GridSpec::line_z(n, length),
            consts,
        )
    }

    /// Standing wave along z with `E = amplitude cos(kz) cos(ckt) x`.
    #[staticmethod]
    #[pyo3(signature = (amplitude, k, n, length = 1.0, constants = None))]
    fn standing_wave(amplitude: f64, k: f64, n: usize, length: f64, constants: Option<PyConstants>) -> PyResult<Self> {
        let consts = constants.map_or_else(PhysicalConstants::default, |c| c.0);
        Self::build(
            InitialField::standing_wave(amplitude, k),
            GridSpec::line_z(n, length),
            consts,
        )
    }

    /// Field described by a run configuration in TOML.
    #[staticmethod]
    fn from_config(toml: &str) -> PyResult<Self> {
        let cfg = RunConfig::from_toml(toml).map_err(py_err)?;
        Ok(Self {
            field: cfg.build_field().map_err(py_err)?,
            period: cfg.period(),
        })
    }

    #[getter]
    fn period(&self) -> f64 {
        self.period
    }

    #[getter]
    fn dims(&self) -> (usize, usize, usize) {
        let d = self.field.grid.dims;
        (d[0], d[1], d[2])
    }

    #[getter]
    fn constants(&self) -> PyConstants {
        PyConstants(self.field.consts)
    }

    /// Grid point coordinates.
    fn points(&self) -> Vec<V3> {
        let g = self.field.grid;
        (0..g.len()).map(|i| v3(&g.point(i))).collect()
    }

    /// Spinor `G` at every grid point.
    fn spinor(&self, t: f64) -> Vec<C3> {
        self.field.to_grid(t).g.iter().map(c3).collect()
    }

    /// `(E, B)` at every grid point.
    fn em(&self, t: f64) -> (Vec<V3>, Vec<V3>) {
        let em = self.field.to_grid(t).to_em(&self.field.consts);
        (em.e.iter().map(v3).collect(), em.b.iter().map(v3).collect())
    }

    fn energy(&self, t: f64) -> f64 {
        self.field.to_grid(t).energy()
    }

    /// Hydrodynamic fields at `(x, angles)`.
    fn hydro<'py>(&self, py: Python<'py>, t: f64, x: V3, angles: V3) -> PyResult<Bound<'py, PyDict>> {
        let h = self
            .field
            .at_time(t)
            .hydro(&vec3(x), EulerAngles::new(angles.0, angles.1, angles.2))
            .map_err(py_err)?;
        let d = PyDict::new(py);
        d.set_item("psi", h.psi)?;
        d.set_item("rho", h.rho)?;
        d.set_item("grad_x_s", v3(&h.grad_x_s))?;
        d.set_item("grad_angle_s", v3(&h.grad_angle_s))?;
        d.set_item("lambda_s", v3(&h.lambda_s))?;
        d.set_item("velocity", v3(&h.velocity))?;
        d.set_item("angular_velocity", v3(&h.angular_velocity))?;
        d.set_item("angle_rate", v3(&h.angle_rate))?;
        d.set_item("quantum_potential", h.quantum_potential)?;
        d.set_item("divergence", h.divergence)?;
        Ok(d)
    }

    /// Integrate labels `(x, y, z, alpha, beta, gamma)` from 0 to `t_final`.
    #[pyo3(signature = (labels, t_final, dt, record_every = 1))]
    fn trace(
        &self,
        labels: Vec<(f64, f64, f64, f64, f64, f64)>,
        t_final: f64,
        dt: f64,
        record_every: usize,
    ) -> PyResult<Vec<PyTrajectory>> {
        if !(dt > 0.0) || record_every == 0 {
            return Err(PyValueError::new_err("dt must be positive and record_every >= 1"));
        }
        let labels: Vec<FluidLabel> = labels
            .iter()
            .map(|l| FluidLabel::new(Vector3::new(l.0, l.1, l.2), EulerAngles::new(l.3, l.4, l.5)))
            .collect();
        let stepping = Stepping::new(0.0, t_final, dt).recording(record_every);
        Ok(integrate_ensemble(&self.field, &labels, &stepping)
            .into_iter()
            .map(PyTrajectory)
            .collect())
    }

    /// Rebuild the field at `t` from trajectories and compare with the exact
    /// solution.
    #[pyo3(signature = (t, quadrature = (2, 4, 1), dt = 0.01, mask = None))]
    fn reconstruct(
        &self,
        t: f64,
        quadrature: (usize, usize, usize),
        dt: f64,
        mask: Option<f64>,
    ) -> PyResult<PyReconstruction> {
        let cfg = ReconstructionConfig::new([quadrature.0, quadrature.1, quadrature.2], dt);
        let state = reconstruct(&self.field, t, &cfg).map_err(py_err)?;
        let reference = reference_spinor(&self.field, t, &state.points);
        let report = compare(&reference, &state.spinor, &self.field.consts, mask).map_err(py_err)?;
        Ok(PyReconstruction {
            t,
            points: state.points.iter().map(v3).collect(),
            spinor: state.spinor.g.iter().map(c3).collect(),
            reference: reference.g.iter().map(c3).collect(),
            failures: state.failures,
            max_inversion_residual: state.max_inversion_residual,
            report,
        })
    }

    /// Save the grid field at `t` as a binary snapshot.
    fn write_snapshot(&self, t: f64, path: PathBuf) -> PyResult<()> {
        FieldSnapshot {
            t,
            consts: self.field.consts,
            spinor: self.field.to_grid(t),
        }
        .write(&path)
        .map_err(py_err)
    }
}

/// Recorded path of one label.
#[pyclass(name = "Trajectory", frozen)]
struct PyTrajectory(CoreTrajectory);

#[pymethods]
impl PyTrajectory {
    #[getter]
    fn label(&self) -> (V3, V3) {
        (v3(&self.0.label.q0), ang(self.0.label.theta0))
    }

    #[getter]
    fn times(&self) -> Vec<f64> {
        self.0.times.clone()
    }

    #[getter]
    fn q(&self) -> Vec<V3> {
        self.0.q.iter().map(v3).collect()
    }

    #[getter]
    fn theta(&self) -> Vec<V3> {
        self.0.theta.iter().map(|a| ang(*a)).collect()
    }

    #[getter]
    fn qdot(&self) -> Vec<V3> {
        self.0.qdot.iter().map(v3).collect()
    }

    #[getter]
    fn thetadot(&self) -> Vec<V3> {
        self.0.thetadot.iter().map(v3).collect()
    }

    #[getter]
    fn s_weber(&self) -> Vec<f64> {
        self.0.s_weber.clone()
    }

    #[getter]
    fn log_rho(&self) -> Vec<f64> {
        self.0.log_rho.clone()
    }

    /// Why integration stopped early, if it did.
    #[getter]
    fn error(&self) -> Option<String> {
        self.0.error.as_ref().map(|e| e.to_string())
    }

    fn __len__(&self) -> usize {
        self.0.times.len()
    }
}

/// Reconstructed field with its exact counterpart and error summary.
#[pyclass(name = "Reconstruction", frozen)]
struct PyReconstruction {
    #[pyo3(get)]
    t: f64,
    #[pyo3(get)]
    points: Vec<V3>,
    #[pyo3(get)]
    spinor: Vec<C3>,
    /// Exact spinor at the same points.
    #[pyo3(get)]
    reference: Vec<C3>,
    /// Queries that hit a node, pole or degenerate map.
    #[pyo3(get)]
    failures: usize,
    #[pyo3(get)]
    max_inversion_residual: f64,
    report: ErrorReport,
}

#[pymethods]
impl PyReconstruction {
    /// Error summary: relative L2 errors, maxima, divergence, energy and the
    /// removed global phase.
    fn errors<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        report_dict(py, &self.report)
    }
}

fn report_dict<'py>(py: Python<'py>, r: &ErrorReport) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("phase", r.phase)?;
    d.set_item("spinor_l2", r.spinor_l2)?;
    d.set_item("e_l2", r.e_l2)?;
    d.set_item("b_l2", r.b_l2)?;
    d.set_item("e_max", r.e_max)?;
    d.set_item("b_max", r.b_max)?;
    d.set_item("divergence", r.divergence)?;
    d.set_item("energy", r.energy)?;
    d.set_item("points", r.points)?;
    Ok(d)
}

/// Read a snapshot: `(t, constants, dims, spacing, spinor)`.
#[pyfunction]
fn read_snapshot(path: PathBuf) -> PyResult<(f64, PyConstants, (usize, usize, usize), V3, Vec<C3>)> {
    let s = FieldSnapshot::read(&path).map_err(py_err)?;
    let g = s.grid();
    Ok((
        s.t,
        PyConstants(s.consts),
        (g.dims[0], g.dims[1], g.dims[2]),
        (g.spacing[0], g.spacing[1], g.spacing[2]),
        s.spinor.g.iter().map(c3).collect(),
    ))
}

/// Compare two spinor grids of equal length; a global phase is removed.
#[pyfunction]
#[pyo3(signature = (reference, candidate, constants = None, mask = None))]
fn compare_spinors<'py>(
    py: Python<'py>,
    reference: Vec<C3>,
    candidate: Vec<C3>,
    constants: Option<PyConstants>,
    mask: Option<f64>,
) -> PyResult<Bound<'py, PyDict>> {
    let grid = GridSpec::line_z(reference.len().max(1), 1.0);
    let field = |g: Vec<C3>| SpinorField::new(grid, g.into_iter().map(vec3).collect()).map_err(py_err);
    let k = constants.map_or_else(PhysicalConstants::default, |c| c.0);
    let r = compare(&field(reference)?, &field(candidate)?, &k, mask).map_err(py_err)?;
    report_dict(py, &r)
}

/// Spinor `G` of a point field `(E, B)`.
#[pyfunction]
#[pyo3(signature = (e, b, constants = None))]
fn spinor_from_em(e: V3, b: V3, constants: Option<PyConstants>) -> C3 {
    let k = constants.map_or_else(PhysicalConstants::default, |c| c.0);
    c3(&spinor_from_rs(&rs_from_em(&vec3(e), &vec3(b), &k)))
}

/// `(E, B)` of a point spinor.
#[pyfunction]
#[pyo3(signature = (g, constants = None))]
fn em_from_spinor(g: C3, constants: Option<PyConstants>) -> (V3, V3) {
    let k = constants.map_or_else(PhysicalConstants::default, |c| c.0);
    let (e, b) = em_from_rs(&rs_from_spinor(&vec3(g)), &k);
    (v3(&e), v3(&b))
}

/// Angular wavefunction `psi(alpha, beta, gamma)` of a point spinor.
#[pyfunction]
fn psi(g: C3, angles: V3) -> Complex64 {
    psi_eval(&vec3(g), EulerAngles::new(angles.0, angles.1, angles.2))
}

/// Run the invariant suite for a TOML configuration (the plane-wave demo by
/// default). Returns `(name, value, tolerance, passed)` rows.
#[pyfunction]
#[pyo3(signature = (toml = None))]
fn verify(py: Python<'_>, toml: Option<&str>) -> PyResult<Vec<(String, f64, f64, bool)>> {
    let cfg = match toml {
        Some(t) => RunConfig::from_toml(t).map_err(py_err)?,
        None => RunConfig::plane_wave_demo(),
    };
    let checks = py.detach(|| run_suite(&cfg)).map_err(py_err)?;
    Ok(checks
        .into_iter()
        .map(|c| (c.name.clone(), c.value, c.tolerance, c.passed()))
        .collect())
}

#[pymodule]
#[pyo3(name = "emhydro")]
fn emhydro_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyConstants>()?;
    m.add_class::<PyField>()?;
    m.add_class::<PyTrajectory>()?;
    m.add_class::<PyReconstruction>()?;
    m.add_function(wrap_pyfunction!(read_snapshot, m)?)?;
    m.add_function(wrap_pyfunction!(compare_spinors, m)?)?;
    m.add_function(wrap_pyfunction!(spinor_from_em, m)?)?;
    m.add_function(wrap_pyfunction!(em_from_spinor, m)?)?;
    m.add_function(wrap_pyfunction!(psi, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    Ok(())
}
