//! Euler-angle geometry of SO(3).
//!
//! Angles are `(alpha, beta, gamma)` with `alpha in [0, pi]` and the other two
//! periodic. The body-frame matrix `A` turns angular partial derivatives into
//! the real angular momentum operators, `lambda_i = A_ir d_r`, and its partner
//! `A_inv` (with `A_inv^T A = 1`) maps conjugate angular velocities back to the
//! vector angular velocity. Everything here is closed form; the only numerical
//! piece is the product quadrature over `dOmega = sin(alpha) dalpha dbeta dgamma`.

use std::f64::consts::{PI, SQRT_2};

use nalgebra::{Matrix3, Matrix6, Vector3};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Distance from `alpha in {0, pi}` (in `sin(alpha)`) below which angles are singular.
pub const POLE_EPS: f64 = 1e-9;

const TWO_PI: f64 = 2.0 * PI;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EulerAngles {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl EulerAngles {
    pub const fn new(alpha: f64, beta: f64, gamma: f64) -> Self {
        Self { alpha, beta, gamma }
    }

    pub fn from_array(a: [f64; 3]) -> Self {
        Self::new(a[0], a[1], a[2])
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.alpha, self.beta, self.gamma]
    }

    pub fn to_vector(self) -> Vector3<f64> {
        Vector3::new(self.alpha, self.beta, self.gamma)
    }

    pub fn is_pole_singular(&self) -> bool {
        self.alpha.sin() < POLE_EPS
    }

    pub fn check_pole(&self) -> Result<()> {
        if self.is_pole_singular() {
            Err(Error::PoleSingularity { alpha: self.alpha })
        } else {
            Ok(())
        }
    }

    /// Reduce `beta` and `gamma` to `[0, 2pi)`, returning the number of full
    /// turns removed from each.
    pub fn canonical(&self) -> (EulerAngles, [i64; 2]) {
        let (b, nb) = wrap_angle(self.beta);
        let (g, ng) = wrap_angle(self.gamma);
        (EulerAngles::new(self.alpha, b, g), [nb, ng])
    }
}

fn wrap_angle(x: f64) -> (f64, i64) {
    let turns = (x / TWO_PI).floor();
    let mut r = x - turns * TWO_PI;
    let mut n = turns as i64;
    if r >= TWO_PI {
        r -= TWO_PI;
        n += 1;
    }
    (r, n)
}

/// `A_ir(alpha, beta)` and its printed inverse partner `A_inv`.
///
/// Convention: `i` is the row, `r` the column. `lambda_i = A_ir d_r`,
/// `v_conj = A^T omega`, `omega = A_inv v_conj`, and `A_inv^T A = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BodyFrameMatrix {
    pub a: Matrix3<f64>,
    pub a_inv: Matrix3<f64>,
}

pub fn euler_a(angles: EulerAngles) -> Result<BodyFrameMatrix> {
    angles.check_pole()?;
    Ok(body_frame_unchecked(angles.alpha, angles.beta))
}

pub(crate) fn body_frame_unchecked(alpha: f64, beta: f64) -> BodyFrameMatrix {
    let (sa, ca) = alpha.sin_cos();
    let (sb, cb) = beta.sin_cos();
    let cot = ca / sa;
    let csc = 1.0 / sa;
    #[rustfmt::skip]
    let a = Matrix3::new(
        -cb, sb * cot, -sb * csc,
         sb, cb * cot, -cb * csc,
        0.0,     -1.0,       0.0,
    );
    #[rustfmt::skip]
    let a_inv = Matrix3::new(
        -cb,  0.0, -sa * sb,
         sb,  0.0, -sa * cb,
        0.0, -1.0,      -ca,
    );
    BodyFrameMatrix { a, a_inv }
}

/// Partial derivatives of `A_inv` with respect to `(alpha, beta, gamma)`.
pub fn a_inv_derivatives(angles: EulerAngles) -> [Matrix3<f64>; 3] {
    let (sa, ca) = angles.alpha.sin_cos();
    let (sb, cb) = angles.beta.sin_cos();
    #[rustfmt::skip]
    let d_alpha = Matrix3::new(
        0.0, 0.0, -ca * sb,
        0.0, 0.0, -ca * cb,
        0.0, 0.0,       sa,
    );
    #[rustfmt::skip]
    let d_beta = Matrix3::new(
         sb, 0.0, -sa * cb,
         cb, 0.0,  sa * sb,
        0.0, 0.0,      0.0,
    );
    [d_alpha, d_beta, Matrix3::zeros()]
}

/// Spin-1 basis `u_a` for `a = +1, 0, -1` (stored in that order) with
/// first angular derivatives.
#[derive(Debug, Clone, Copy)]
pub struct BasisJet {
    pub u: [Complex64; 3],
    /// `du[r][a] = d u_a / d alpha_r`.
    pub du: [[Complex64; 3]; 3],
}

pub struct SpinBasis;

impl SpinBasis {
    /// `sqrt(3) / (4 pi)`
    pub const C_PM: f64 = 0.137_832_223_855_448_02;
    /// `sqrt(3) / (2 sqrt(2) pi)`
    pub const C_0: f64 = 0.194_924_200_308_419_03;

    pub fn eval(angles: EulerAngles) -> [Complex64; 3] {
        Self::jet(angles).u
    }

    pub fn jet(angles: EulerAngles) -> BasisJet {
        let (sa, ca) = angles.alpha.sin_cos();
        let (sb, cb) = angles.beta.sin_cos();
        let e_minus = Complex64::new(cb, -sb);
        let e_plus = Complex64::new(cb, sb);
        let i = Complex64::i();
        let u = [
            e_minus * (Self::C_PM * sa),
            i * (Self::C_0 * ca),
            e_plus * (Self::C_PM * sa),
        ];
        let z = Complex64::new(0.0, 0.0);
        let du = [
            [
                e_minus * (Self::C_PM * ca),
                -i * (Self::C_0 * sa),
                e_plus * (Self::C_PM * ca),
            ],
            [-i * u[0], z, i * u[2]],
            [z, z, z],
        ];
        BasisJet { u, du }
    }
}

/// The spin-1 matrix algebra: `U`, `s_i`, and `J_i = U s_i U^-1`.
#[derive(Debug, Clone)]
pub struct SpinOperatorSet {
    pub hbar: f64,
    pub u: Matrix3<Complex64>,
    pub s: [Matrix3<Complex64>; 3],
    pub j: [Matrix3<Complex64>; 3],
}

impl SpinOperatorSet {
    pub fn new(hbar: f64) -> Self {
        let u = transform_u();
        let s = [0, 1, 2].map(|i| Matrix3::from_fn(|j, k| Complex64::new(0.0, -hbar * levi_civita(i, j, k))));
        let u_inv = u.adjoint();
        let j = s.map(|si| u * si * u_inv);
        Self { hbar, u, s, j }
    }

    /// Closed-form `J_i` as printed, independent of the `U s U^-1` route.
    pub fn j_closed_form(hbar: f64) -> [Matrix3<Complex64>; 3] {
        let r = hbar / SQRT_2;
        let c = |x: f64, y: f64| Complex64::new(x, y);
        let z = c(0.0, 0.0);
        [
            Matrix3::new(z, c(r, 0.0), z, c(r, 0.0), z, c(r, 0.0), z, c(r, 0.0), z),
            Matrix3::new(z, c(0.0, -r), z, c(0.0, r), z, c(0.0, -r), z, c(0.0, r), z),
            Matrix3::new(c(hbar, 0.0), z, z, z, z, z, z, z, c(-hbar, 0.0)),
        ]
    }
}

/// `U_ai` mapping the Cartesian Riemann-Silberstein components onto the
/// helicity-ordered spinor `(G_1, G_0, G_-1)`.
pub fn transform_u() -> Matrix3<Complex64> {
    let r = 1.0 / SQRT_2;
    let c = |x: f64, y: f64| Complex64::new(x, y);
    Matrix3::new(
        c(-r, 0.0),
        c(0.0, r),
        c(0.0, 0.0),
        c(0.0, 0.0),
        c(0.0, 0.0),
        c(1.0, 0.0),
        c(r, 0.0),
        c(0.0, r),
        c(0.0, 0.0),
    )
}

pub fn levi_civita(i: usize, j: usize, k: usize) -> f64 {
    match (i, j, k) {
        (0, 1, 2) | (1, 2, 0) | (2, 0, 1) => 1.0,
        (0, 2, 1) | (2, 1, 0) | (1, 0, 2) => -1.0,
        _ => 0.0,
    }
}

/// A complex function on SO(3) able to report its own first derivatives.
pub trait AngularFunction {
    fn value(&self, at: EulerAngles) -> Complex64;
    /// `(d_alpha f, d_beta f, d_gamma f)`
    fn gradient(&self, at: EulerAngles) -> [Complex64; 3];
}

impl<F, G> AngularFunction for (F, G)
where
    F: Fn(EulerAngles) -> Complex64,
    G: Fn(EulerAngles) -> [Complex64; 3],
{
    fn value(&self, at: EulerAngles) -> Complex64 {
        (self.0)(at)
    }
    fn gradient(&self, at: EulerAngles) -> [Complex64; 3] {
        (self.1)(at)
    }
}

/// One spin-1 basis function (index 0, 1, 2 for a = +1, 0, -1).
#[derive(Debug, Clone, Copy)]
pub struct BasisFunction(pub usize);

impl AngularFunction for BasisFunction {
    fn value(&self, at: EulerAngles) -> Complex64 {
        SpinBasis::jet(at).u[self.0]
    }
    fn gradient(&self, at: EulerAngles) -> [Complex64; 3] {
        let jet = SpinBasis::jet(at);
        [jet.du[0][self.0], jet.du[1][self.0], jet.du[2][self.0]]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AngularOperator {
    /// `M_i`, i in 0..3
    M(usize),
    /// `lambda_i = M_i / (-i hbar)`, i in 0..3
    Lambda(usize),
}

/// Apply `M_i` or `lambda_i` through the explicit differential forms.
pub fn apply_angular_operator(
    op: AngularOperator,
    f: &dyn AngularFunction,
    at: EulerAngles,
    hbar: f64,
) -> Result<Complex64> {
    at.check_pole()?;
    let [fa, fb, fg] = f.gradient(at);
    let (sa, ca) = at.alpha.sin_cos();
    let (sb, cb) = at.beta.sin_cos();
    let cot = ca / sa;
    let csc = 1.0 / sa;
    let lambda = |i: usize| -> Complex64 {
        match i {
            0 => -(fa * cb - fb * (sb * cot) + fg * (sb * csc)),
            1 => -(-fa * sb - fb * (cb * cot) + fg * (cb * csc)),
            _ => -fb,
        }
    };
    Ok(match op {
        AngularOperator::Lambda(i) => lambda(i),
        AngularOperator::M(i) => lambda(i) * Complex64::new(0.0, -hbar),
    })
}

/// `lambda_i f = A_ir d_r f` evaluated through the body-frame matrix.
pub fn lambda_via_body_frame(grad: [Complex64; 3], at: EulerAngles) -> Result<[Complex64; 3]> {
    let a = euler_a(at)?.a;
    Ok([0, 1, 2].map(|i| (0..3).map(|r| grad[r] * a[(i, r)]).sum()))
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        dp = if d != 0.0 { d } else { dp };
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Product rule for `int f dOmega`: Gauss-Legendre in `cos(alpha)`,
/// periodic trapezoid (half-step offset) in `beta` and `gamma`.
#[derive(Debug, Clone)]
pub struct AngularQuadrature {
    pub nodes: Vec<EulerAngles>,
    pub weights: Vec<f64>,
    pub orders: (usize, usize, usize),
}

impl AngularQuadrature {
    pub fn new(n_alpha: usize, n_beta: usize, n_gamma: usize) -> Result<Self> {
        if n_alpha == 0 || n_beta == 0 || n_gamma == 0 {
            return Err(Error::InvalidConfig("quadrature orders must be positive".into()));
        }
        let (xs, wx) = gauss_legendre(n_alpha);
        let db = TWO_PI / n_beta as f64;
        let dg = TWO_PI / n_gamma as f64;
        let mut nodes = Vec::with_capacity(n_alpha * n_beta * n_gamma);
        let mut weights = Vec::with_capacity(nodes.capacity());
        for (x, w) in xs.iter().zip(&wx) {
            let alpha = x.acos();
            for jb in 0..n_beta {
                let beta = (jb as f64 + 0.5) * db;
                for jg in 0..n_gamma {
                    let gamma = (jg as f64 + 0.5) * dg;
                    nodes.push(EulerAngles::new(alpha, beta, gamma));
                    weights.push(w * db * dg);
                }
            }
        }
        Ok(Self {
            nodes,
            weights,
            orders: (n_alpha, n_beta, n_gamma),
        })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate<F: Fn(EulerAngles) -> Complex64>(&self, f: F) -> Complex64 {
        self.nodes.iter().zip(&self.weights).map(|(n, w)| f(*n) * *w).sum()
    }

    pub fn integrate_real<F: Fn(EulerAngles) -> f64>(&self, f: F) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(n, w)| f(*n) * *w).sum()
    }
}

pub fn quadrature_integrate<F: Fn(EulerAngles) -> Complex64>(q: &AngularQuadrature, f: F) -> Complex64 {
    q.integrate(f)
}

/// Metric on `R^3 x SO(3)` in coordinates `(x_1, x_2, x_3, alpha, beta, gamma)`.
#[derive(Debug, Clone, Copy)]
pub struct ManifoldMetric {
    pub upper: Matrix6<f64>,
    pub lower: Matrix6<f64>,
    /// `sqrt(-g) = l^3 sin(alpha)`
    pub sqrt_neg_g: f64,
    pub l: f64,
}

pub fn metric_eval(angles: EulerAngles, l: f64) -> Result<ManifoldMetric> {
    let BodyFrameMatrix { a, a_inv } = euler_a(angles)?;
    let mut upper = Matrix6::zeros();
    let mut lower = Matrix6::zeros();
    for i in 0..3 {
        for r in 0..3 {
            upper[(i, 3 + r)] = a[(i, r)] / l;
            upper[(3 + r, i)] = a[(i, r)] / l;
            lower[(i, 3 + r)] = l * a_inv[(i, r)];
            lower[(3 + r, i)] = l * a_inv[(i, r)];
        }
    }
    Ok(ManifoldMetric {
        upper,
        lower,
        sqrt_neg_g: l.powi(3) * angles.alpha.sin(),
        l,
    })
}
