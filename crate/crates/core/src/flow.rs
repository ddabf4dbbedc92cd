//! Truncated flow normal forms near a p:q resonant elliptic point.
//!
//! All three models share
//! `z' = i mu1 z + i Phi(|z|^2) z + delta (z*)^{2q-1}`, with
//! `delta = alpha e^{i theta}`. The symmetry-breaking models add
//! `i mu2 (z*)^{q-1}` and the reversible non-conservative model further adds
//! `i A mu2 z^{q+1} + i B mu2 z (z*)^q`.
//!
//! Polar coordinates follow `z = sqrt(r) e^{i psi}`, so `r = |z|^2`.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Mat2;
use crate::normal_form::{NormalFormResult, ResonanceSpec, MAX_Q};
use crate::ode;
use crate::series::{Monomial, TruncatedSeries};

pub const DEFAULT_VALIDITY_RADIUS: f64 = 0.5;

/// Smallest accepted integration tolerance.
pub const MIN_ODE_TOL: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FlowModel {
    Symmetric,
    SymBreakConservative,
    ReversibleNonCons,
}

fn default_theta() -> f64 {
    FRAC_PI_2
}

fn default_radius() -> f64 {
    DEFAULT_VALIDITY_RADIUS
}

/// Real data selecting one truncated flow.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowParams {
    pub model: FlowModel,
    pub q: u32,
    pub mu1: f64,
    #[serde(default)]
    pub mu2: f64,
    /// `l1, l2, ...` of `Phi(r) = l1 r + l2 r^2 + ...`.
    pub phi_coeffs: Vec<f64>,
    pub alpha: f64,
    /// Argument of `delta`; only the symmetric model may leave `pi/2`.
    #[serde(default = "default_theta")]
    pub theta: f64,
    #[serde(default)]
    pub a: f64,
    #[serde(default)]
    pub b: f64,
    /// Bound on `|z|` beyond which the truncation is not trusted.
    #[serde(default = "default_radius")]
    pub validity_radius: f64,
}

impl FlowParams {
    pub fn symmetric(q: u32, mu: f64, phi_coeffs: Vec<f64>, alpha: f64) -> Result<Self> {
        Self {
            model: FlowModel::Symmetric,
            q,
            mu1: mu,
            mu2: 0.0,
            phi_coeffs,
            alpha,
            theta: FRAC_PI_2,
            a: 0.0,
            b: 0.0,
            validity_radius: DEFAULT_VALIDITY_RADIUS,
        }
        .validated()
    }

    pub fn sym_break(q: u32, mu1: f64, mu2: f64, phi_coeffs: Vec<f64>, alpha: f64) -> Result<Self> {
        Self {
            model: FlowModel::SymBreakConservative,
            ..Self::symmetric(q, mu1, phi_coeffs, alpha)?
        }
        .with_mu2(mu2)
    }

    #[allow(clippy::too_many_arguments)]
    pub fn reversible(q: u32, mu1: f64, mu2: f64, phi_coeffs: Vec<f64>, alpha: f64, a: f64, b: f64) -> Result<Self> {
        Self {
            model: FlowModel::ReversibleNonCons,
            mu2,
            a,
            b,
            ..Self::symmetric(q, mu1, phi_coeffs, alpha)?
        }
        .validated()
    }

    /// Leading-order flow of a symmetric normal form: `mu` is the detuning,
    /// `Phi` the rotation function and `delta = c_{0,2q-1} / lambda`.
    pub fn from_normal_form(nf: &NormalFormResult, spec: &ResonanceSpec) -> Result<Self> {
        let q = spec.q;
        let delta = nf.normalized_map.coeff(0, 2 * q - 1) / spec.lambda;
        if nf.degeneracy_flags.leading_nonidentical_degenerate || nf.degeneracy_flags.g1_degenerate {
            return Err(Error::Domain("degenerate normal form: g1 or A_{0,2q-1} vanishes".into()));
        }
        Self {
            theta: delta.arg().rem_euclid(TAU),
            ..Self::symmetric(q, nf.detuning, nf.omega_coeffs.clone(), delta.norm())?
        }
        .validated()
    }

    pub fn with_mu1(mut self, mu1: f64) -> Result<Self> {
        self.mu1 = mu1;
        self.validated()
    }

    pub fn with_mu2(mut self, mu2: f64) -> Result<Self> {
        self.mu2 = mu2;
        self.validated()
    }

    pub fn with_theta(mut self, theta: f64) -> Result<Self> {
        self.theta = theta;
        self.validated()
    }

    pub fn with_validity_radius(mut self, radius: f64) -> Result<Self> {
        self.validity_radius = radius;
        self.validated()
    }

    pub fn validated(self) -> Result<Self> {
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        let q = self.q;
        if q.is_multiple_of(2) || !(3..=MAX_Q).contains(&q) {
            return Err(Error::Unsupported(format!("q = {q}: only odd 3 <= q <= {MAX_Q} is supported")));
        }
        let reals = [self.mu1, self.mu2, self.alpha, self.theta, self.a, self.b, self.validity_radius];
        if reals.iter().chain(&self.phi_coeffs).any(|v| !v.is_finite()) {
            return Err(Error::Config("non-finite flow parameter".into()));
        }
        if self.validity_radius <= 0.0 {
            return Err(Error::Config("validity radius must be positive".into()));
        }
        match self.model {
            FlowModel::Symmetric => {
                if self.mu2 != 0.0 || self.a != 0.0 || self.b != 0.0 {
                    return Err(Error::Config("symmetric model requires mu2 = A = B = 0".into()));
                }
            }
            FlowModel::SymBreakConservative | FlowModel::ReversibleNonCons => {
                if (self.theta - FRAC_PI_2).abs() > 1e-12 {
                    return Err(Error::Config(
                        "symmetry-breaking models require theta = pi/2; rotate by rotate_to_reversible first".into(),
                    ));
                }
                if self.model == FlowModel::SymBreakConservative && (self.a != 0.0 || self.b != 0.0) {
                    return Err(Error::Config("A and B belong to the reversible non-conservative model".into()));
                }
            }
        }
        Ok(())
    }

    pub fn l1(&self) -> f64 {
        self.phi_coeffs.first().copied().unwrap_or(0.0)
    }

    /// `delta = alpha e^{i theta}`.
    pub fn delta(&self) -> Complex64 {
        Complex64::from_polar(self.alpha, self.theta)
    }

    pub fn phi(&self, r: f64) -> f64 {
        self.phi_coeffs.iter().rev().fold(0.0, |acc, l| (acc + l) * r)
    }

    pub fn phi_prime(&self, r: f64) -> f64 {
        self.phi_coeffs
            .iter()
            .enumerate()
            .rev()
            .fold(0.0, |acc, (j, l)| acc * r + (j + 1) as f64 * l)
    }

    /// `int_0^r Phi`.
    pub fn phi_integral(&self, r: f64) -> f64 {
        self.phi_coeffs
            .iter()
            .enumerate()
            .map(|(j, l)| l * r.powi(j as i32 + 2) / (j + 2) as f64)
            .sum()
    }

    /// Rotation angle that brings `delta` to `i alpha`.
    pub fn rotation_angle(&self) -> f64 {
        rotate_to_reversible(self.theta, self.q)
    }

    /// Angles of the involution lines on which symmetric equilibria sit:
    /// `omega + k pi/(2q)` for the symmetric model and `k pi/q` otherwise.
    pub fn axis_spacing(&self) -> f64 {
        match self.model {
            FlowModel::Symmetric => PI / (2 * self.q) as f64,
            _ => PI / self.q as f64,
        }
    }

    pub fn axis_offset(&self) -> f64 {
        match self.model {
            FlowModel::Symmetric => self.rotation_angle(),
            _ => 0.0,
        }
    }

    /// Angular distance from `psi` to the nearest involution line.
    pub fn axis_distance(&self, psi: f64) -> f64 {
        let s = self.axis_spacing();
        let x = (psi - self.axis_offset()).rem_euclid(s);
        x.min(s - x)
    }

    /// The cartesian field as a polynomial in `(z, z*)`.
    pub fn field_series(&self, max_degree: u32) -> TruncatedSeries {
        let q = self.q;
        let i = Complex64::i();
        let mut terms = vec![(Monomial::new(1, 0), i * self.mu1)];
        for (j, l) in self.phi_coeffs.iter().enumerate() {
            let j = j as u32 + 1;
            terms.push((Monomial::new(j + 1, j), i * l));
        }
        terms.push((Monomial::new(0, 2 * q - 1), self.delta()));
        terms.push((Monomial::new(0, q - 1), i * self.mu2));
        terms.push((Monomial::new(q + 1, 0), i * self.a * self.mu2));
        terms.push((Monomial::new(1, q), i * self.b * self.mu2));
        TruncatedSeries::from_terms(max_degree, terms)
    }
}

/// Polar state with `r = |z|^2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolarState {
    pub r: f64,
    pub psi: f64,
}

impl PolarState {
    /// Reduces `psi` to `[0, 2 pi)`; rejects negative `r`.
    pub fn new(r: f64, psi: f64) -> Result<Self> {
        if !(r >= 0.0) {
            return Err(Error::Domain(format!("r = {r} must be non-negative")));
        }
        Ok(Self {
            r,
            psi: psi.rem_euclid(TAU),
        })
    }

    pub fn from_z(z: Complex64) -> Self {
        Self {
            r: z.norm_sqr(),
            psi: z.arg().rem_euclid(TAU),
        }
    }

    pub fn to_z(&self) -> Complex64 {
        Complex64::from_polar(self.r.sqrt(), self.psi)
    }
}

/// `(F, dF/dz, dF/dz*)` of the cartesian field at `z`.
pub fn field_with_derivatives(p: &FlowParams, z: Complex64) -> (Complex64, Complex64, Complex64) {
    let q = p.q as i32;
    let i = Complex64::i();
    let zs = z.conj();
    let r = z.norm_sqr();
    let phi = p.phi(r);
    let dphi = p.phi_prime(r);
    let delta = p.delta();
    let zs_2q2 = zs.powi(2 * q - 2);
    let mut f = i * (p.mu1 + phi) * z + delta * zs_2q2 * zs;
    let mut fz = i * (p.mu1 + phi + r * dphi);
    let mut fzs = i * dphi * z * z + delta * (2 * q - 1) as f64 * zs_2q2;
    if p.mu2 != 0.0 {
        let zs_q2 = zs.powi(q - 2);
        let zq = z.powi(q);
        let zs_q = zs_q2 * zs * zs;
        f += i * p.mu2 * (zs_q2 * zs + p.a * zq * z + p.b * z * zs_q);
        fz += i * p.mu2 * (p.a * (q + 1) as f64 * zq + p.b * zs_q);
        fzs += i * p.mu2 * ((q - 1) as f64 * zs_q2 + p.b * q as f64 * z * zs_q2 * zs);
    }
    (f, fz, fzs)
}

/// `z'` of the truncated model.
pub fn vector_field_cartesian(p: &FlowParams, z: Complex64) -> Complex64 {
    field_with_derivatives(p, z).0
}

/// Real Jacobian `d(x', y')/d(x, y)` of the cartesian field.
pub fn jacobian_cartesian(p: &FlowParams, z: Complex64) -> Mat2 {
    let (_, fz, fzs) = field_with_derivatives(p, z);
    let dx = fz + fzs;
    let dy = Complex64::i() * (fz - fzs);
    Mat2::new(dx.re, dy.re, dx.im, dy.im)
}

/// `(r', psi')`.
///
/// Each monomial `i c z^m (z*)^k` contributes
/// `-2 c r^{(m+k+1)/2} sin((m-k-1) psi)` to `r'` and
/// `c r^{(m+k-1)/2} cos((m-k-1) psi)` to `psi'`.
pub fn vector_field_polar(p: &FlowParams, s: PolarState) -> Result<(f64, f64)> {
    if !(s.r >= 0.0) {
        return Err(Error::Domain(format!("r = {} must be non-negative", s.r)));
    }
    Ok(polar_unchecked(p, s.r, s.psi))
}

/// `sin` and `cos` of `theta - 2 q psi`, exact on the axes when
/// `theta = pi/2`.
fn delta_angle(p: &FlowParams, psi: f64) -> (f64, f64) {
    let x = 2.0 * p.q as f64 * psi;
    if p.theta == FRAC_PI_2 {
        let (s, c) = x.sin_cos();
        (c, s)
    } else {
        (p.theta - x).sin_cos()
    }
}

pub(crate) fn polar_unchecked(p: &FlowParams, r: f64, psi: f64) -> (f64, f64) {
    let qf = p.q as f64;
    let h = 0.5 * qf;
    let (sa, ca) = delta_angle(p, psi);
    let (s1, c1) = (qf * psi).sin_cos();
    let rq1 = r.powi(p.q as i32 - 1);

    // alpha term
    let mut dr = 2.0 * p.alpha * rq1 * r * ca;
    let mut dpsi = p.mu1 + p.phi(r) + p.alpha * rq1 * sa;
    if p.mu2 != 0.0 {
        let rh = r.powf(h);
        let rh1 = r.powf(h - 1.0);
        // mu2 (z*)^{q-1}
        dr += 2.0 * p.mu2 * rh * s1;
        dpsi += p.mu2 * rh1 * c1;
        // A mu2 z^{q+1}
        dr -= 2.0 * p.a * p.mu2 * rh * r * s1;
        dpsi += p.a * p.mu2 * rh * c1;
        // B mu2 z (z*)^q
        dr += 2.0 * p.b * p.mu2 * rh * r * s1;
        dpsi += p.b * p.mu2 * rh * c1;
    }
    (dr, dpsi)
}

/// Analytic Jacobian of `(r', psi')` with respect to `(r, psi)`; needs
/// `r > 0` when `mu2 != 0`.
pub fn polar_jacobian(p: &FlowParams, r: f64, psi: f64) -> Mat2 {
    let qf = p.q as f64;
    let h = 0.5 * qf;
    let (sa, ca) = delta_angle(p, psi);
    let (s1, c1) = (qf * psi).sin_cos();
    let rq2 = r.powi(p.q as i32 - 2);
    let rq1 = rq2 * r;

    let mut drr = 2.0 * p.alpha * qf * rq1 * ca;
    let mut drp = 4.0 * qf * p.alpha * rq1 * r * sa;
    let mut dpr = p.phi_prime(r) + p.alpha * (qf - 1.0) * rq2 * sa;
    let mut dpp = -2.0 * qf * p.alpha * rq1 * ca;
    if p.mu2 != 0.0 {
        let rh = r.powf(h);
        let rh1 = r.powf(h - 1.0);
        let rh2 = r.powf(h - 2.0);
        let ba = p.b - p.a;
        let apb = p.a + p.b;
        drr += 2.0 * p.mu2 * h * rh1 * s1 + 2.0 * p.mu2 * ba * (h + 1.0) * rh * s1;
        drp += 2.0 * p.mu2 * qf * rh * c1 + 2.0 * p.mu2 * ba * qf * rh * r * c1;
        dpr += p.mu2 * (h - 1.0) * rh2 * c1 + p.mu2 * apb * h * rh1 * c1;
        dpp -= p.mu2 * qf * rh1 * s1 + p.mu2 * apb * qf * rh * s1;
    }
    Mat2::new(drr, drp, dpr, dpp)
}

/// `H` with `r' = -dH/dpsi`, `psi' = dH/dr`.
pub fn hamiltonian(p: &FlowParams, s: PolarState) -> Result<f64> {
    if p.model == FlowModel::ReversibleNonCons {
        let scale = p.a.abs().max(p.b.abs()).max(1.0);
        if (p.b - p.a * (p.q as f64 + 1.0)).abs() > 1e-14 * scale {
            return Err(Error::Domain("non-Hamiltonian model: B != A(q+1)".into()));
        }
    }
    let qf = p.q as f64;
    let (r, psi) = (s.r, s.psi);
    let mut hval = p.mu1 * r + p.phi_integral(r) + p.alpha / qf * r.powi(p.q as i32) * delta_angle(p, psi).0;
    if p.mu2 != 0.0 {
        let rh = r.powf(0.5 * qf);
        hval += 2.0 / qf * p.mu2 * rh * (qf * psi).cos();
        hval += 2.0 * p.mu2 * p.a * rh * r * (qf * psi).cos();
    }
    Ok(hval)
}

/// `dz'/dz + dz'*/dz* = 2 Re(dF/dz)`; equals
/// `2 mu2 (B - (q+1) A) Im(z^q)` for these models.
pub fn divergence(p: &FlowParams, z: Complex64) -> f64 {
    2.0 * field_with_derivatives(p, z).1.re
}

/// `omega = (theta - pi/2) / (2q)`: the change `z -> z e^{i omega}` turns
/// `delta = alpha e^{i theta}` into `i alpha`.
pub fn rotate_to_reversible(theta: f64, q: u32) -> f64 {
    (theta - FRAC_PI_2) / (2 * q) as f64
}

/// Sampled solution of [`integrate`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub t: Vec<f64>,
    #[serde(with = "crate::json::complex_vec")]
    pub z: Vec<Complex64>,
    /// The orbit left the validity radius and was cut there.
    pub escaped: bool,
    /// The step size collapsed before `t_end` was reached.
    pub stalled: bool,
    #[serde(skip)]
    dz: Vec<Complex64>,
}

impl Trajectory {
    pub fn last(&self) -> Complex64 {
        *self.z.last().expect("trajectory has at least the initial point")
    }

    /// State at time `t` by cubic Hermite interpolation between accepted
    /// steps; clamps to the covered interval.
    pub fn at(&self, t: f64) -> Complex64 {
        let n = self.t.len();
        if t <= self.t[0] || n == 1 {
            return self.z[0];
        }
        if t >= self.t[n - 1] {
            return self.z[n - 1];
        }
        let j = self.t.partition_point(|&s| s <= t);
        let (a, b) = (j - 1, j);
        let c = |z: Complex64| [z.re, z.im];
        let v = ode::hermite(
            self.t[a],
            &c(self.z[a]),
            &c(self.dz[a]),
            self.t[b],
            &c(self.z[b]),
            &c(self.dz[b]),
            t,
        );
        Complex64::new(v[0], v[1])
    }

    /// Uniform resampling with step `dt`.
    pub fn resample(&self, dt: f64) -> Vec<(f64, Complex64)> {
        let t_end = *self.t.last().unwrap_or(&0.0);
        let n = (t_end / dt).floor() as usize;
        (0..=n).map(|i| i as f64 * dt).map(|t| (t, self.at(t))).collect()
    }
}

/// Adaptive Dormand-Prince 5(4) integration of the truncated model from
/// `z0` over `[0, t_end]`.
pub fn integrate(p: &FlowParams, z0: Complex64, t_end: f64, tol: f64) -> Result<Trajectory> {
    if !(tol >= MIN_ODE_TOL) {
        return Err(Error::Config(format!("ode tolerance {tol:.1e} below floor {MIN_ODE_TOL:.0e}")));
    }
    if !(t_end >= 0.0) {
        return Err(Error::Config("t_end must be non-negative".into()));
    }
    let rhs = |y: &[f64; 2]| {
        let f = vector_field_cartesian(p, Complex64::new(y[0], y[1]));
        [f.re, f.im]
    };
    let r2 = p.validity_radius * p.validity_radius;
    let path = ode::dopri45(rhs, [z0.re, z0.im], t_end, tol, |y| y[0] * y[0] + y[1] * y[1] <= r2);
    let to_c = |v: &[f64; 2]| Complex64::new(v[0], v[1]);
    Ok(Trajectory {
        t: path.t,
        z: path.y.iter().map(to_c).collect(),
        escaped: path.escaped,
        stalled: path.stalled,
        dz: path.dy.iter().map(to_c).collect(),
    })
}

/// Time-`t` map of the truncated flow and its real Jacobian, by `steps`
/// equal RK4 steps on the state and variational equations.
pub fn flow_map_rk4(p: &FlowParams, z0: Complex64, t: f64, steps: usize) -> (Complex64, Mat2) {
    let rhs = |y: &[f64; 6]| {
        let z = Complex64::new(y[0], y[1]);
        let f = vector_field_cartesian(p, z);
        let j = jacobian_cartesian(p, z);
        let m = Mat2::new(y[2], y[3], y[4], y[5]);
        let dm = j.mul(&m);
        [f.re, f.im, dm.a, dm.b, dm.c, dm.d]
    };
    let y = ode::rk4(rhs, [z0.re, z0.im, 1.0, 0.0, 0.0, 1.0], t, steps);
    (Complex64::new(y[0], y[1]), Mat2::new(y[2], y[3], y[4], y[5]))
}
