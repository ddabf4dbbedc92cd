//! Periodic orbits of the maps themselves: iteration, Newton on `f^q - id`,
//! orbit classification and symmetry pairing, and the residual of the flow
//! embedding.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::equilibria::find_equilibria;
use crate::error::{Error, Result};
use crate::flow::{flow_map_rk4, FlowParams};
use crate::json;
use crate::linalg::{geomspace, log_log_slope, Mat2};
use crate::normal_form::{embed_rotated, normalize, rotate_back, time_one_map, NormalFormResult, ResonanceSpec};
use crate::series::TruncatedSeries;

pub const NEWTON_TOL: f64 = 1e-13;
pub const NEWTON_MAX_ITER: usize = 60;
/// Newton correction, relative to `|z|`, at which iteration stops.
pub const NEWTON_STEP_TOL: f64 = 1e-10;
/// Accepted correction when iteration stalls at the roundoff floor.
pub const NEWTON_STALL_TOL: f64 = 1e-6;
/// Hausdorff distance below which two orbits are the same.
pub const ORBIT_DEDUP: f64 = 1e-8;
pub const CONSERVATIVE_TOL: f64 = 1e-9;
pub const DEGENERATE_TRACE_TOL: f64 = 1e-8;

/// A smooth planar map with an analytic Jacobian.
pub trait PlanarMap: Sync {
    fn apply(&self, z: Complex64) -> Complex64;

    /// Real Jacobian `d(x', y')/d(x, y)`.
    fn jacobian(&self, z: Complex64) -> Mat2;

    /// Taylor polynomial at the origin, when the map has one in closed form.
    fn taylor_series(&self, max_degree: u32) -> Option<TruncatedSeries>;
}

fn complex_jacobian(fz: Complex64, fzs: Complex64) -> Mat2 {
    let dx = fz + fzs;
    let dy = Complex64::i() * (fz - fzs);
    Mat2::new(dx.re, dy.re, dx.im, dy.im)
}

impl PlanarMap for TruncatedSeries {
    fn apply(&self, z: Complex64) -> Complex64 {
        self.eval(z)
    }

    fn jacobian(&self, z: Complex64) -> Mat2 {
        let (_, fz, fzs) = self.eval_with_derivatives(z);
        complex_jacobian(fz, fzs)
    }

    fn taylor_series(&self, max_degree: u32) -> Option<TruncatedSeries> {
        Some(self.with_max_degree(max_degree))
    }
}

/// Exactly area-preserving, centrally symmetric and reversible test map
/// `K o R o T o K`: a half kick `y += (alpha/2) (2x)^{2q-1}`, the twist
/// `z e^{i Omega(|z|^2)}`, the rotation by `2 pi p/q + mu`, and the half
/// kick again. Its resonant coefficient `c_{0,2q-1}` is `i alpha lambda` at
/// leading order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TwistKickMap {
    pub p: u32,
    pub q: u32,
    pub mu: f64,
    /// `Omega(rho) = sum_j twist[j] rho^{j+1}`.
    pub twist: Vec<f64>,
    pub alpha: f64,
}

impl TwistKickMap {
    pub fn new(p: u32, q: u32, mu: f64, twist: Vec<f64>, alpha: f64) -> Result<Self> {
        ResonanceSpec::new(p, q, true)?;
        Ok(Self { p, q, mu, twist, alpha })
    }

    fn angle(&self) -> f64 {
        TAU * self.p as f64 / self.q as f64 + self.mu
    }

    /// `Omega(rho)` and `Omega'(rho)`.
    fn omega(&self, rho: f64) -> (f64, f64) {
        let mut v = 0.0;
        let mut dv = 0.0;
        let mut rj = 1.0;
        for (j, g) in self.twist.iter().enumerate() {
            dv += (j + 1) as f64 * g * rj;
            rj *= rho;
            v += g * rj;
        }
        (v, dv)
    }

    fn kick(&self, z: Complex64) -> (Complex64, f64) {
        let n = 2 * self.q as i32 - 1;
        let s = 2.0 * z.re;
        let g = 0.5 * self.alpha * s.powi(n);
        let dg = self.alpha * n as f64 * s.powi(n - 1);
        (Complex64::new(z.re, z.im + g), dg)
    }

    fn twist_at(&self, z: Complex64) -> (Complex64, Mat2) {
        let rho = z.norm_sqr();
        let (phi, dphi) = self.omega(rho);
        let out = z * Complex64::from_polar(1.0, phi);
        let (c, s) = (phi.cos(), phi.sin());
        let (px, py) = (2.0 * z.re * dphi, 2.0 * z.im * dphi);
        let j = Mat2::new(c - out.im * px, -s - out.im * py, s + out.re * px, c + out.re * py);
        (out, j)
    }
}

fn after(outer: &TruncatedSeries, inner: &TruncatedSeries) -> TruncatedSeries {
    outer
        .compose(inner, &inner.conjugate())
        .expect("inner series vanish at the origin")
}

impl PlanarMap for TwistKickMap {
    fn apply(&self, z: Complex64) -> Complex64 {
        let (a, _) = self.kick(z);
        let (b, _) = self.twist_at(a);
        let c = b * Complex64::from_polar(1.0, self.angle());
        self.kick(c).0
    }

    fn jacobian(&self, z: Complex64) -> Mat2 {
        let (a, dg1) = self.kick(z);
        let (b, jt) = self.twist_at(a);
        let c = b * Complex64::from_polar(1.0, self.angle());
        let (_, dg2) = self.kick(c);
        let (co, si) = (self.angle().cos(), self.angle().sin());
        let rot = Mat2::new(co, -si, si, co);
        let k1 = Mat2::new(1.0, 0.0, dg1, 1.0);
        let k2 = Mat2::new(1.0, 0.0, dg2, 1.0);
        k2.mul(&rot).mul(&jt).mul(&k1)
    }

    fn taylor_series(&self, d: u32) -> Option<TruncatedSeries> {
        let i = Complex64::i();
        let z = TruncatedSeries::z(d);
        let n = 2 * self.q - 1;
        let kick = if n <= d {
            z.add(&z.add(&TruncatedSeries::zstar(d)).pow(n).scale(i * 0.5 * self.alpha))
        } else {
            z.clone()
        };
        let rho = z.mul(&TruncatedSeries::zstar(d));
        let mut u = TruncatedSeries::zero(d);
        let mut rho_j = rho.clone();
        for g in &self.twist {
            u = u.add(&rho_j.scale(Complex64::new(*g, 0.0)));
            rho_j = rho_j.mul(&rho);
        }
        let iu = u.scale(i);
        let mut term = TruncatedSeries::constant(d, Complex64::new(1.0, 0.0));
        let mut exp = term.clone();
        for k in 1..=(d / 2 + 1) {
            term = term.mul(&iu).scale(Complex64::new(1.0 / k as f64, 0.0));
            exp = exp.add(&term);
        }
        let twist = z.mul(&exp).scale(Complex64::from_polar(1.0, self.angle()));
        Some(after(&kick, &after(&twist, &kick)))
    }
}

/// `R_nu o phi_1`: the time-1 map of a truncated flow followed by the
/// resonant rotation, integrated with fixed-step RK4.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowMap {
    pub params: FlowParams,
    pub p: u32,
    pub steps: usize,
}

impl FlowMap {
    pub fn new(params: FlowParams, p: u32, steps: usize) -> Result<Self> {
        ResonanceSpec::new(p, params.q, true)?;
        if steps == 0 {
            return Err(Error::Config("RK4 step count must be positive".into()));
        }
        Ok(Self { params, p, steps })
    }

    fn nu(&self) -> Complex64 {
        Complex64::from_polar(1.0, TAU * self.p as f64 / self.params.q as f64)
    }
}

impl PlanarMap for FlowMap {
    fn apply(&self, z: Complex64) -> Complex64 {
        self.nu() * flow_map_rk4(&self.params, z, 1.0, self.steps).0
    }

    fn jacobian(&self, z: Complex64) -> Mat2 {
        let nu = self.nu();
        let rot = Mat2::new(nu.re, -nu.im, nu.im, nu.re);
        rot.mul(&flow_map_rk4(&self.params, z, 1.0, self.steps).1)
    }

    fn taylor_series(&self, d: u32) -> Option<TruncatedSeries> {
        Some(time_one_map(&self.params.field_series(d)).scale(self.nu()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Iterates {
    #[serde(with = "json::complex_vec")]
    pub points: Vec<Complex64>,
    /// An iterate left the disc `|z| <= radius`; later iterates are dropped.
    pub escaped: bool,
}

/// `z0, f(z0), ..., f^n(z0)`, stopping at the first iterate outside the
/// disc of the given radius.
pub fn iterate<M: PlanarMap + ?Sized>(map: &M, z0: Complex64, n: usize, radius: f64) -> Iterates {
    let mut points = Vec::with_capacity(n + 1);
    points.push(z0);
    let mut z = z0;
    for _ in 0..n {
        z = map.apply(z);
        if !(z.norm() <= radius) {
            return Iterates { points, escaped: true };
        }
        points.push(z);
    }
    Iterates { points, escaped: false }
}

/// `f^n(z)` and its Jacobian by the chain rule.
pub fn power_with_jacobian<M: PlanarMap + ?Sized>(map: &M, z: Complex64, n: u32) -> (Complex64, Mat2) {
    let mut w = z;
    let mut j = Mat2::IDENTITY;
    for _ in 0..n {
        j = map.jacobian(w).mul(&j);
        w = map.apply(w);
    }
    (w, j)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum OrbitKind {
    Elliptic,
    SaddleMap,
    SinkMap,
    SourceMap,
    NonConsSaddle,
    Degenerate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PartnerKind {
    /// `z -> -z`.
    Central,
    /// `z -> z*`.
    Reversible,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Partner {
    pub index: usize,
    pub kind: PartnerKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodicOrbit {
    #[serde(with = "json::complex_vec")]
    pub points: Vec<Complex64>,
    /// Eigenvalues of `D(f^q)` at `points[0]`.
    #[serde(with = "json::complex_pair")]
    pub multipliers: [Complex64; 2],
    pub kind: OrbitKind,
    pub jacobian_det: f64,
    pub trace: f64,
    /// `max_i |f(points[i]) - points[i+1 mod q]|`.
    pub closure: f64,
    pub partner: Option<Partner>,
}

/// Orbit of `z0` rotated so the point of smallest argument in `[0, 2 pi)`
/// comes first.
fn orbit_points<M: PlanarMap + ?Sized>(map: &M, z0: Complex64, period: u32) -> Vec<Complex64> {
    let mut pts = Vec::with_capacity(period as usize);
    let mut z = z0;
    for _ in 0..period {
        pts.push(z);
        z = map.apply(z);
    }
    let arg = |w: &Complex64| w.arg().rem_euclid(TAU);
    let start = (0..pts.len())
        .min_by(|&a, &b| arg(&pts[a]).total_cmp(&arg(&pts[b])))
        .unwrap_or(0);
    pts.rotate_left(start);
    pts
}

/// Multipliers, determinant, trace and kind of `D(f^q)` along the orbit.
pub fn classify_orbit<M: PlanarMap + ?Sized>(map: &M, orbit: &PeriodicOrbit) -> PeriodicOrbit {
    let period = orbit.points.len() as u32;
    let z0 = orbit.points[0];
    let (_, j) = power_with_jacobian(map, z0, period);
    let multipliers = j.eigenvalues();
    let det = j.det();
    let trace = j.trace();
    let n = orbit.points.len();
    let closure = (0..n)
        .map(|i| (map.apply(orbit.points[i]) - orbit.points[(i + 1) % n]).norm())
        .fold(0.0, f64::max);
    let kind = if (trace.abs() - 2.0).abs() < DEGENERATE_TRACE_TOL {
        OrbitKind::Degenerate
    } else if (det - 1.0).abs() < CONSERVATIVE_TOL {
        if trace.abs() < 2.0 {
            OrbitKind::Elliptic
        } else {
            OrbitKind::SaddleMap
        }
    } else {
        let (m0, m1) = (multipliers[0].norm(), multipliers[1].norm());
        let (lo, hi) = (m0.min(m1), m0.max(m1));
        let real = multipliers[0].im == 0.0;
        if real && lo < 1.0 && hi > 1.0 {
            OrbitKind::NonConsSaddle
        } else if hi < 1.0 {
            OrbitKind::SinkMap
        } else if lo > 1.0 {
            OrbitKind::SourceMap
        } else {
            OrbitKind::Degenerate
        }
    };
    PeriodicOrbit {
        points: orbit.points.clone(),
        multipliers,
        kind,
        jacobian_det: det,
        trace,
        closure,
        partner: orbit.partner,
    }
}

/// Where Newton starts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeedPolicy {
    /// Seeds at flow-predicted equilibria mapped back through the
    /// normal-form transform.
    pub flow_informed: bool,
    /// Polar fallback grid.
    pub blind: bool,
    /// Search radius; orbits leaving the disc are discarded. `None` picks
    /// `2 sqrt(|mu / g1|)` from the normal form.
    pub radius: Option<f64>,
    pub angles: usize,
    pub radii: usize,
    /// Absolute bound on `|f^q(z) - z|`.
    pub newton_tol: f64,
}

impl Default for SeedPolicy {
    fn default() -> Self {
        Self {
            flow_informed: true,
            blind: true,
            radius: None,
            angles: 24,
            radii: 8,
            newton_tol: NEWTON_TOL,
        }
    }
}

/// Orbits from each seeding and their union.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrbitSearch {
    pub orbits: Vec<PeriodicOrbit>,
    pub flow_informed: Vec<PeriodicOrbit>,
    pub blind: Vec<PeriodicOrbit>,
    /// Flow equilibria divided by the period.
    pub predicted: Option<usize>,
    pub radius: f64,
    pub diagnostics: Vec<String>,
}

/// `z - s` with `s` split into radial and angular parts about `z`, so that a
/// tangential correction follows the circle. A straight chord would shift the
/// radius by `|s|^2 / 2|z|`, which the twist amplifies into a large residual.
fn polar_update(z: Complex64, s: Complex64) -> Complex64 {
    let r = z.norm();
    if r == 0.0 || s.norm() > 0.5 * r {
        return z - s;
    }
    let u = s * z.conj() / r;
    Complex64::from_polar(r - u.re, z.arg() - u.im / r)
}

fn newton_fq<M: PlanarMap + ?Sized>(map: &M, z0: Complex64, period: u32, tol: f64) -> Option<Complex64> {
    let mut z = z0;
    let resid = |z: Complex64| power_with_jacobian(map, z, period);
    let (w, mut j) = resid(z);
    let mut f = w - z;
    let mut last_step = f64::INFINITY;
    for _ in 0..NEWTON_MAX_ITER {
        let Some(step) = j.sub(&Mat2::IDENTITY).solve([f.re, f.im]) else {
            break;
        };
        let step = Complex64::new(step[0], step[1]);
        last_step = step.norm();
        // a small residual alone is not enough where F is nearly flat along
        // the garland circle
        if f.norm() < tol && last_step <= NEWTON_STEP_TOL * z.norm() {
            return Some(z);
        }
        let mut t = 1.0;
        let mut moved = false;
        for _ in 0..20 {
            let zn = polar_update(z, step * t);
            let (wn, jn) = resid(zn);
            let fn_ = wn - zn;
            if fn_.norm().is_finite() && (fn_.norm() < f.norm() || fn_.norm() < tol) {
                z = zn;
                j = jn;
                f = fn_;
                moved = true;
                break;
            }
            t *= 0.5;
        }
        if !moved {
            break;
        }
    }
    (f.norm() < tol && last_step <= NEWTON_STALL_TOL * z.norm()).then_some(z)
}

fn hausdorff(a: &[Complex64], b: &[Complex64]) -> f64 {
    let one_way = |x: &[Complex64], y: &[Complex64]| {
        x.iter()
            .map(|p| y.iter().map(|q| (p - q).norm()).fold(f64::INFINITY, f64::min))
            .fold(0.0, f64::max)
    };
    one_way(a, b).max(one_way(b, a))
}

fn collect_orbits<M: PlanarMap + ?Sized>(
    map: &M,
    seeds: &[Complex64],
    period: u32,
    radius: f64,
    tol: f64,
) -> Vec<PeriodicOrbit> {
    let floor = 1e-6 * radius;
    let converged: Vec<Option<Complex64>> = seeds.par_iter().map(|&s| newton_fq(map, s, period, tol)).collect();
    let mut out: Vec<PeriodicOrbit> = Vec::new();
    for z in converged.into_iter().flatten() {
        let pts = orbit_points(map, z, period);
        if pts.iter().any(|p| p.norm() < floor || !(p.norm() <= radius)) {
            continue;
        }
        if out.iter().any(|o| hausdorff(&o.points, &pts) < ORBIT_DEDUP) {
            continue;
        }
        let raw = PeriodicOrbit {
            points: pts,
            multipliers: [Complex64::default(); 2],
            kind: OrbitKind::Degenerate,
            jacobian_det: 0.0,
            trace: 0.0,
            closure: 0.0,
            partner: None,
        };
        out.push(classify_orbit(map, &raw));
    }
    out.sort_by(|a, b| a.points[0].arg().rem_euclid(TAU).total_cmp(&b.points[0].arg().rem_euclid(TAU)));
    out
}

/// Normal form of the map's Taylor polynomial and the symmetric flow it
/// predicts; `None` for maps without a centrally symmetric Taylor series.
fn flow_prediction<M: PlanarMap + ?Sized>(map: &M, spec: &ResonanceSpec) -> Result<Option<(NormalFormResult, FlowParams)>> {
    let Some(series) = map.taylor_series(spec.default_max_degree()) else {
        return Ok(None);
    };
    if !series.is_centrally_symmetric() {
        return Ok(None);
    }
    let spec_nf = ResonanceSpec {
        symmetric: true,
        ..*spec
    };
    let nf = normalize(&series, &spec_nf)?;
    let params = FlowParams::from_normal_form(&nf, &spec_nf)?;
    Ok(Some((nf, params)))
}

/// Period-`period` orbits of `map` near the origin.
pub fn find_periodic_orbits<M: PlanarMap + ?Sized>(
    map: &M,
    spec: &ResonanceSpec,
    period: u32,
    policy: &SeedPolicy,
) -> Result<OrbitSearch> {
    if period == 0 {
        return Err(Error::Config("period must be positive".into()));
    }
    if !(policy.newton_tol > 0.0 && policy.newton_tol.is_finite()) {
        return Err(Error::Config(format!("newton tolerance must be positive, got {}", policy.newton_tol)));
    }
    let mut diagnostics = Vec::new();
    if period != spec.q {
        diagnostics.push(format!("period {period} differs from q = {}; results are unvalidated", spec.q));
    }
    let prediction = if policy.flow_informed || policy.radius.is_none() {
        flow_prediction(map, spec)?
    } else {
        None
    };
    if policy.flow_informed && prediction.is_none() {
        diagnostics.push("no centrally symmetric Taylor series; flow-informed seeding skipped".into());
    }
    let radius = match (policy.radius, &prediction) {
        (Some(r), _) => r,
        (None, Some((_, fp))) => 2.0 * (fp.mu1.abs() / fp.l1().abs()).sqrt(),
        (None, None) => return Err(Error::Config("a search radius is required for this map".into())),
    };
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::Config(format!("search radius must be positive, got {radius}")));
    }

    let mut predicted = None;
    let mut flow_orbits = Vec::new();
    if let (true, Some((nf, fp))) = (policy.flow_informed, prediction.as_ref()) {
        let fp = fp.clone().with_validity_radius(radius)?;
        let eqs = match find_equilibria(&fp) {
            Ok(e) => e,
            Err(Error::Solver(msg)) => {
                diagnostics.push(format!("flow equilibria: {msg}"));
                Vec::new()
            }
            Err(e) => return Err(e),
        };
        predicted = Some(eqs.len() / period as usize);
        let seeds: Vec<Complex64> = eqs.iter().map(|e| nf.transform.eval(e.z)).collect();
        flow_orbits = collect_orbits(map, &seeds, period, radius, policy.newton_tol);
        if !eqs.is_empty() && flow_orbits.is_empty() {
            return Err(Error::Solver(format!(
                "Newton failed from all {} flow-predicted seeds",
                eqs.len()
            )));
        }
    }

    let mut blind_orbits = Vec::new();
    if policy.blind {
        let mut seeds = Vec::with_capacity(policy.angles * policy.radii);
        for i in 0..policy.radii {
            let r = radius * (i as f64 + 0.5) / policy.radii as f64;
            for k in 0..policy.angles {
                let a = TAU * k as f64 / policy.angles as f64 + PI / policy.angles as f64 * (i % 2) as f64;
                seeds.push(Complex64::from_polar(r, a));
            }
        }
        blind_orbits = collect_orbits(map, &seeds, period, radius, policy.newton_tol);
    }

    let mut orbits = flow_orbits.clone();
    for o in &blind_orbits {
        if !orbits.iter().any(|x| hausdorff(&x.points, &o.points) < ORBIT_DEDUP) {
            orbits.push(o.clone());
        }
    }
    orbits.sort_by(|a, b| a.points[0].arg().rem_euclid(TAU).total_cmp(&b.points[0].arg().rem_euclid(TAU)));
    if predicted.is_some() && policy.blind && !same_orbit_set(&flow_orbits, &blind_orbits) {
        diagnostics.push(format!(
            "blind seeding found {} orbits, flow-informed seeding {}",
            blind_orbits.len(),
            flow_orbits.len()
        ));
    }
    if let Some(n) = predicted {
        if n != orbits.len() {
            diagnostics.push(format!("flow predicts {n} orbits, found {}", orbits.len()));
        }
    }
    Ok(OrbitSearch {
        orbits,
        flow_informed: flow_orbits,
        blind: blind_orbits,
        predicted,
        radius,
        diagnostics,
    })
}

/// True when every orbit of `a` has a match in `b` and vice versa.
pub fn same_orbit_set(a: &[PeriodicOrbit], b: &[PeriodicOrbit]) -> bool {
    a.len() == b.len()
        && a.iter().all(|x| b.iter().any(|y| hausdorff(&x.points, &y.points) < ORBIT_DEDUP))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[allow(non_camel_case_types)]
pub enum MapGarlandLabel {
    G11_qq,
    G22_qq,
    G_prime_2q_q_q_map,
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapGarland {
    pub orbits: Vec<PeriodicOrbit>,
    pub label: MapGarlandLabel,
    /// `(i, j, kind)` with `i < j`.
    pub pairs: Vec<(usize, usize, PartnerKind)>,
    pub diagnostics: Vec<String>,
}

const PAIR_TOL: f64 = 1e-8;

/// Matches orbits under `z -> -z` and `z -> z*` point-set-wise and labels
/// the garland. `symmetric` requests a diagnostic for centrally unpaired
/// orbits.
pub fn symmetry_pairing(orbits: &[PeriodicOrbit], symmetric: bool) -> MapGarland {
    let mut orbits = orbits.to_vec();
    let n = orbits.len();
    let mut pairs = Vec::new();
    let mut diagnostics = Vec::new();
    let images = |o: &PeriodicOrbit, f: &dyn Fn(Complex64) -> Complex64| o.points.iter().map(|&z| f(z)).collect::<Vec<_>>();
    for i in 0..n {
        let neg = images(&orbits[i], &|z| -z);
        let conj = images(&orbits[i], &|z| z.conj());
        for j in i + 1..n {
            if hausdorff(&neg, &orbits[j].points) < PAIR_TOL {
                pairs.push((i, j, PartnerKind::Central));
            }
            if hausdorff(&conj, &orbits[j].points) < PAIR_TOL {
                pairs.push((i, j, PartnerKind::Reversible));
            }
        }
    }
    for kind in [PartnerKind::Reversible, PartnerKind::Central] {
        for &(i, j, k) in pairs.iter().filter(|p| p.2 == kind) {
            orbits[i].partner = Some(Partner { index: j, kind: k });
            orbits[j].partner = Some(Partner { index: i, kind: k });
        }
    }
    if symmetric {
        for i in 0..n {
            if !pairs.iter().any(|&(a, b, k)| k == PartnerKind::Central && (a == i || b == i)) {
                diagnostics.push(format!("orbit {i} has no centrally symmetric partner"));
            }
        }
    }

    let count = |k: OrbitKind| orbits.iter().filter(|o| o.kind == k).count();
    let central: Vec<_> = pairs.iter().filter(|p| p.2 == PartnerKind::Central).collect();
    let label = if n == 4
        && count(OrbitKind::SaddleMap) == 2
        && count(OrbitKind::Elliptic) == 2
        && central.len() == 2
        && central.iter().all(|&&(i, j, _)| orbits[i].kind == orbits[j].kind)
    {
        MapGarlandLabel::G22_qq
    } else if n == 2 && count(OrbitKind::SaddleMap) == 1 && count(OrbitKind::Elliptic) == 1 {
        MapGarlandLabel::G11_qq
    } else if n == 4
        && count(OrbitKind::SinkMap) == 1
        && count(OrbitKind::SourceMap) == 1
        && orbits
            .iter()
            .filter(|o| !matches!(o.kind, OrbitKind::SinkMap | OrbitKind::SourceMap))
            .all(|o| (o.jacobian_det - 1.0).abs() < CONSERVATIVE_TOL)
        && pairs.iter().any(|&(i, j, k)| {
            k == PartnerKind::Reversible
                && matches!(
                    (orbits[i].kind, orbits[j].kind),
                    (OrbitKind::SinkMap, OrbitKind::SourceMap) | (OrbitKind::SourceMap, OrbitKind::SinkMap)
                )
        })
    {
        MapGarlandLabel::G_prime_2q_q_q_map
    } else {
        diagnostics.push(format!("{n} orbits match no garland pattern"));
        MapGarlandLabel::None
    };
    MapGarland {
        orbits,
        label,
        pairs,
        diagnostics,
    }
}

/// Fitted decay exponents of the embedding residuals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingResidual {
    /// `f o R_phi` against the time-1 map of the logarithmic field; `None`
    /// when the residual vanishes identically.
    pub order: Option<f64>,
    /// `f^q` against the time-1 map of the `q`-scaled field.
    pub order_q: Option<f64>,
    /// `f o R_phi` against the time-1 map of the leading-order field.
    pub order_leading: Option<f64>,
    pub radii: Vec<f64>,
    pub residuals: Vec<f64>,
    pub residuals_q: Vec<f64>,
    pub residuals_leading: Vec<f64>,
}

const RESIDUAL_ANGLES: usize = 16;

fn sampled_max(s: &TruncatedSeries, radii: &[f64]) -> Vec<f64> {
    radii
        .iter()
        .map(|&r| {
            (0..RESIDUAL_ANGLES)
                .map(|k| s.eval(Complex64::from_polar(r, TAU * k as f64 / RESIDUAL_ANGLES as f64)).norm())
                .fold(0.0, f64::max)
        })
        .collect()
}

fn clean(s: &TruncatedSeries, scale: f64) -> TruncatedSeries {
    let floor = 1e-13 * scale;
    TruncatedSeries::from_terms(s.max_degree(), s.terms().filter(|(_, c)| c.norm() > floor))
}

fn fitted(s: &TruncatedSeries, radii: &[f64]) -> (Option<f64>, Vec<f64>) {
    let ys = sampled_max(s, radii);
    if s.is_empty() || ys.iter().all(|&y| y == 0.0) {
        return (None, ys);
    }
    (log_log_slope(radii, &ys), ys)
}

/// Compares a resonant normal form with the time-1 maps of its embedding
/// flows on radii `|z| in [1e-3, 1e-2]`. Degree `D` normal forms are
/// treated as polynomials and compared through degree `2D + 1`.
pub fn embedding_residual(map: &TruncatedSeries, spec: &ResonanceSpec) -> Result<EmbeddingResidual> {
    let d = map.max_degree();
    let nf = normalize(map, spec)?;
    if !nf.changes.is_empty() {
        return Err(Error::Rejected("map is not in normal form; normalize it first".into()));
    }
    let emb = embed_rotated(&nf, spec)?;
    let big = 2 * d + 1;
    let poly = map.with_max_degree(big);
    let rotated = rotate_back(&poly, spec);
    let scale = poly.max_abs_coeff().max(1.0);

    let resid = clean(&rotated.sub(&time_one_map(&emb.field.with_max_degree(big))), scale);
    let resid_lead = clean(&rotated.sub(&time_one_map(&emb.leading_field.with_max_degree(big))), scale);
    let mut fq = poly.clone();
    for _ in 1..spec.q {
        fq = after(&poly, &fq);
    }
    let resid_q = clean(&fq.sub(&time_one_map(&emb.field_q.with_max_degree(big))), scale);

    let radii = geomspace(1e-3, 1e-2, 9);
    let (order, residuals) = fitted(&resid, &radii);
    let (order_q, residuals_q) = fitted(&resid_q, &radii);
    let (order_leading, residuals_leading) = fitted(&resid_lead, &radii);
    Ok(EmbeddingResidual {
        order,
        order_q,
        order_leading,
        radii,
        residuals,
        residuals_q,
        residuals_leading,
    })
}
