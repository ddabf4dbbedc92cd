//! Resonant normal forms of maps `z -> l z + ...` with `l` close to a
//! primitive q-th root of unity, and their embedding into flows.
//!
//! Map series store the full coefficients, so the linear part is `l` itself
//! and a monomial `z^m (z*)^k` is resonant iff `m - 1 - k` is a multiple of q.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::json;
use crate::series::{compose, Monomial, TruncatedSeries};

/// Values below this flag g1 or A_{0,2q-1} as degenerate.
pub const DEGENERACY_TOL: f64 = 1e-10;

/// Largest supported denominator.
pub const MAX_Q: u32 = 13;

const UNIT_MODULUS_TOL: f64 = 1e-12;

fn gcd(a: u32, b: u32) -> u32 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// The resonance `l = exp(2 pi i p/q)` together with the symmetry assumption
/// used by the elimination sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResonanceSpec {
    pub p: u32,
    pub q: u32,
    #[serde(with = "json::complex")]
    pub lambda: Complex64,
    /// Restrict normal forms to odd-degree monomials and require centrally
    /// symmetric input.
    pub symmetric: bool,
}

impl ResonanceSpec {
    /// Checks `0 < p < q`, `gcd(p, q) = 1` and odd `3 <= q <= 13`.
    pub fn new(p: u32, q: u32, symmetric: bool) -> Result<Self> {
        if q.is_multiple_of(2) {
            return Err(Error::Unsupported(format!(
                "q = {q} is even; only odd q >= 3 resonances are handled"
            )));
        }
        if !(3..=MAX_Q).contains(&q) {
            return Err(Error::Unsupported(format!(
                "q = {q} outside the supported range 3..={MAX_Q}"
            )));
        }
        if p == 0 || p >= q || gcd(p, q) != 1 {
            return Err(Error::Config(format!(
                "p = {p} must satisfy 0 < p < q with gcd(p, q) = 1"
            )));
        }
        Ok(Self {
            p,
            q,
            lambda: Complex64::from_polar(1.0, 2.0 * PI * p as f64 / q as f64),
            symmetric,
        })
    }

    /// Minimum of `|exp(2 pi i (p/q) j) - 1|` over `j` not divisible by q.
    pub fn resonance_gap(&self) -> f64 {
        2.0 * (PI / self.q as f64).sin()
    }

    /// Default truncation order `2q + 1`.
    pub fn default_max_degree(&self) -> u32 {
        2 * self.q + 1
    }
}

/// True iff `m - 1 - k` is a multiple of q.
pub fn is_resonant(m: u32, k: u32, spec: &ResonanceSpec) -> bool {
    (m as i64 - 1 - k as i64).rem_euclid(spec.q as i64) == 0
}

/// The integer `j` with `m - 1 - k = j q`, if any.
pub fn resonance_index(m: u32, k: u32, spec: &ResonanceSpec) -> Option<i64> {
    let d = m as i64 - 1 - k as i64;
    (d.rem_euclid(spec.q as i64) == 0).then(|| d / spec.q as i64)
}

/// Resonant monomials of degree `2..=order`, sorted by `(degree, m)`.
/// With `symmetric`, even-degree monomials are left out.
pub fn resonant_terms_up_to(order: u32, spec: &ResonanceSpec, symmetric: bool) -> Vec<Monomial> {
    (2..=order)
        .filter(|d| !symmetric || d % 2 == 1)
        .flat_map(|d| (0..=d).rev().map(move |k| Monomial::new(d - k, k)))
        .filter(|mono| is_resonant(mono.m, mono.k, spec))
        .collect()
}

/// One near-identity change `z = w + C w^m (w*)^k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Change {
    pub monomial: Monomial,
    #[serde(with = "json::complex")]
    pub coefficient: Complex64,
}

impl Change {
    /// `(Psi, conj Psi)` as series of the given order.
    pub fn as_series(&self, max_degree: u32) -> (TruncatedSeries, TruncatedSeries) {
        let psi = TruncatedSeries::z(max_degree).add(&TruncatedSeries::monomial(
            max_degree,
            self.monomial.m,
            self.monomial.k,
            self.coefficient,
        ));
        let psi_conj = psi.conjugate();
        (psi, psi_conj)
    }
}

fn check_linear_part(map: &TruncatedSeries) -> Result<Complex64> {
    let ell = map.linear_part();
    if (ell.norm() - 1.0).abs() > UNIT_MODULUS_TOL {
        return Err(Error::Domain(format!(
            "linear part {ell} is not of unit modulus"
        )));
    }
    if map.coeff(0, 0).norm() > 0.0 || map.coeff(0, 1).norm() > 0.0 {
        return Err(Error::Domain(
            "map must fix the origin with linear part l z (no constant or z* term)".into(),
        ));
    }
    Ok(ell)
}

fn divisor(ell: Complex64, mono: Monomial) -> Complex64 {
    ell.powu(mono.m) * ell.conj().powu(mono.k) - ell
}

/// Removes the coefficient of `target` by the change `z = w + C w^m (w*)^k`
/// with `C = A / (l^m (l*)^k - l)`.
///
/// The conjugated map `g` is obtained from `f(Psi) = Psi(g)`, i.e. the fixed
/// point of `g = f(Psi) - C g^m (g*)^k`, which gains `m + k - 1` correct
/// degrees per pass.
pub fn eliminate_term(
    map: &TruncatedSeries,
    target: Monomial,
    spec: &ResonanceSpec,
) -> Result<(TruncatedSeries, Change)> {
    if target.degree() < 2 {
        return Err(Error::Config(format!("{target} is not a nonlinear monomial")));
    }
    if is_resonant(target.m, target.k, spec) {
        return Err(Error::Rejected(format!(
            "resonant term not removable: {target}"
        )));
    }
    let ell = check_linear_part(map)?;
    eliminate_with(map, target, ell, spec)
}

fn eliminate_with(
    map: &TruncatedSeries,
    target: Monomial,
    ell: Complex64,
    spec: &ResonanceSpec,
) -> Result<(TruncatedSeries, Change)> {
    let a = map.coeff(target.m, target.k);
    if a == Complex64::default() {
        return Ok((
            map.clone(),
            Change {
                monomial: target,
                coefficient: Complex64::default(),
            },
        ));
    }
    let div = divisor(ell, target);
    if div.norm() < 0.5 * spec.resonance_gap() {
        return Err(Error::Domain(format!(
            "divisor {:.3e} for {target} is too small; detuning of the linear part is too large",
            div.norm()
        )));
    }
    let c = a / div;
    let change = Change {
        monomial: target,
        coefficient: c,
    };
    let d = map.max_degree();
    let (psi, psi_conj) = change.as_series(d);
    let h = compose(map, &psi, &psi_conj)?;

    let gain = target.degree() - 1;
    let passes = (d - 1).div_ceil(gain) + 1;
    let mut g = h.clone();
    for _ in 0..passes {
        let corr = g
            .pow(target.m)
            .mul(&g.conjugate().pow(target.k))
            .scale(c);
        g = h.sub(&corr);
    }
    Ok((g.with_coeff(target.m, target.k, Complex64::default()), change))
}

/// Flags reported alongside a normal form.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DegeneracyFlags {
    /// `|g1| < 1e-10`.
    pub g1_degenerate: bool,
    /// `|A_{0,2q-1}| < 1e-10`, or the truncation order is below `2q - 1`.
    pub leading_nonidentical_degenerate: bool,
    /// The identical resonances carry a radial (non-rotational) part above
    /// `1e-10`, i.e. `Omega` is not purely real.
    pub non_conservative: bool,
    /// Every monomial with `m - 1 - k = +-q` has zero coefficient. These are
    /// resonant, but vanish for centrally symmetric input.
    pub j_pm1_terms_vanish: bool,
}

/// Output of [`normalize`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalFormResult {
    pub normalized_map: TruncatedSeries,
    /// `g_1, g_2, ...` of the real rotation function `Omega(|z|^2)`.
    pub omega_coeffs: Vec<f64>,
    /// Radial companions of `omega_coeffs`; zero for area-preserving input.
    pub radial_coeffs: Vec<f64>,
    /// Raw identical resonances `A_{m,m-1} = c_{m,m-1} / l` for `m = 2, 3, ...`.
    #[serde(with = "json::complex_vec")]
    pub identical_resonances: Vec<Complex64>,
    /// `A_{0,2q-1} = c_{0,2q-1} / l`.
    #[serde(with = "json::complex")]
    pub leading_nonidentical: Complex64,
    /// Accumulated change `z = T(w)` from normal-form to original coordinates.
    pub transform: TruncatedSeries,
    /// `arg(l / lambda)`: the angle by which the linear part misses the
    /// resonance.
    pub detuning: f64,
    pub degeneracy_flags: DegeneracyFlags,
    pub changes: Vec<Change>,
}

/// Coefficients of `log(1 + u(t))` for `u = sum_{j>=1} u_j t^j`, indices
/// `1..=n` (entry 0 is unused and zero).
fn log1p_series(u: &[Complex64]) -> Vec<Complex64> {
    let n = u.len() - 1;
    let mut l = vec![Complex64::default(); n + 1];
    for i in 1..=n {
        let mut acc = u[i] * i as f64;
        for j in 1..i {
            acc -= l[j] * (j as f64) * u[i - j];
        }
        l[i] = acc / i as f64;
    }
    l
}

/// Brings `map` to its resonant normal form up to `map.max_degree()`.
///
/// Non-resonant monomials are removed in ascending degree and, within a
/// degree, ascending `m`. A linear part `l = lambda e^{i mu}` with small
/// `mu` is accepted; `mu` is reported as `detuning` and the near-resonant
/// monomials are kept.
pub fn normalize(map: &TruncatedSeries, spec: &ResonanceSpec) -> Result<NormalFormResult> {
    let ell = check_linear_part(map)?;
    if spec.symmetric && !map.is_centrally_symmetric() {
        return Err(Error::Rejected(
            "symmetric pipeline selected but the map has even-degree terms".into(),
        ));
    }
    let d = map.max_degree();
    let q = spec.q;
    let mut g = map.clone();
    let mut transform = TruncatedSeries::z(d);
    let mut changes = Vec::new();
    for deg in 2..=d {
        for m in 0..=deg {
            let k = deg - m;
            if is_resonant(m, k, spec) || g.coeff(m, k) == Complex64::default() {
                continue;
            }
            let (next, change) = eliminate_with(&g, Monomial::new(m, k), ell, spec)?;
            let (psi, psi_conj) = change.as_series(d);
            transform = compose(&transform, &psi, &psi_conj)?;
            changes.push(change);
            g = next;
        }
    }

    let n_ident = (d as usize).div_ceil(2);
    let identical: Vec<Complex64> = (2..=n_ident as u32).map(|m| g.coeff(m, m - 1) / ell).collect();
    let mut u = vec![Complex64::default(); identical.len() + 1];
    u[1..].copy_from_slice(&identical);
    let logs = log1p_series(&u);
    let omega_coeffs: Vec<f64> = logs[1..].iter().map(|c| c.im).collect();
    let radial_coeffs: Vec<f64> = logs[1..].iter().map(|c| c.re).collect();
    let leading = g.coeff(0, 2 * q - 1) / ell;

    let j_pm1_terms_vanish = g
        .terms()
        .all(|(mono, _)| !matches!(resonance_index(mono.m, mono.k, spec), Some(1 | -1)));
    let degeneracy_flags = DegeneracyFlags {
        g1_degenerate: omega_coeffs.first().is_none_or(|g1| g1.abs() < DEGENERACY_TOL),
        leading_nonidentical_degenerate: 2 * q - 1 > d || leading.norm() < DEGENERACY_TOL,
        non_conservative: radial_coeffs.iter().any(|r| r.abs() > DEGENERACY_TOL),
        j_pm1_terms_vanish,
    };
    Ok(NormalFormResult {
        normalized_map: g,
        omega_coeffs,
        radial_coeffs,
        identical_resonances: identical,
        leading_nonidentical: leading,
        transform,
        detuning: (ell / spec.lambda).arg(),
        degeneracy_flags,
        changes,
    })
}

/// `f~ = f o R_phi` with `phi = -2 pi p/q`: coefficient `c_{m,k}` becomes
/// `c_{m,k} lambda^{k-m}`.
pub fn rotate_back(map: &TruncatedSeries, spec: &ResonanceSpec) -> TruncatedSeries {
    let nu = spec.lambda;
    TruncatedSeries::from_terms(
        map.max_degree(),
        map.terms().map(|(mono, c)| {
            let e = mono.k as i32 - mono.m as i32;
            (mono, c * nu.powi(e))
        }),
    )
}

/// `L_X g = g_z X + g_{z*} conj(X)`.
pub fn lie_derivative(field: &TruncatedSeries, g: &TruncatedSeries) -> TruncatedSeries {
    g.d_dz()
        .mul(field)
        .add(&g.d_dzstar().mul(&field.conjugate()))
}

/// Time-1 map `exp(L_X) id` of the flow `z' = X(z, z*)` as a truncated
/// series. `X` must vanish at the origin.
pub fn time_one_map(field: &TruncatedSeries) -> TruncatedSeries {
    let d = field.max_degree();
    let mut term = TruncatedSeries::z(d);
    let mut sum = term.clone();
    for n in 1..=(4 * d as usize + 40) {
        term = lie_derivative(field, &term).scale(Complex64::new(1.0 / n as f64, 0.0));
        if term.is_empty() {
            break;
        }
        sum = sum.add(&term);
        if term.max_abs_coeff() < 1e-18 * sum.max_abs_coeff().max(1.0) && n > d as usize {
            break;
        }
    }
    sum
}

/// The vector field `X` with `exp(L_X) id = map`, for a map whose linear
/// part is `e^{i mu} z` with `|mu|` small.
pub fn flow_logarithm(map: &TruncatedSeries) -> Result<TruncatedSeries> {
    let ell = map.linear_part();
    if (ell.norm() - 1.0).abs() > UNIT_MODULUS_TOL || ell.arg().abs() > 0.5 {
        return Err(Error::Domain(format!(
            "flow logarithm needs a near-identity rotation, got linear part {ell}"
        )));
    }
    if map.coeff(0, 0).norm() > 0.0 || map.coeff(0, 1).norm() > 0.0 {
        return Err(Error::Domain("map must be l z + nonlinear terms".into()));
    }
    let d = map.max_degree();
    let lin = TruncatedSeries::monomial(d, 1, 0, Complex64::new(0.0, ell.arg()));
    let mut x = map.filter(|mono| mono.degree() >= 2).add(&lin);
    let scale = map.max_abs_coeff().max(1.0);
    for _ in 0..400 {
        let resid = map.sub(&time_one_map(&x)).filter(|mono| mono.degree() >= 2);
        if resid.max_abs_coeff() < 1e-16 * scale {
            return Ok(x);
        }
        x = x.add(&resid);
    }
    let resid = map.sub(&time_one_map(&x));
    if resid.max_abs_coeff() < 1e-12 * scale {
        Ok(x)
    } else {
        Err(Error::Solver(format!(
            "flow logarithm did not converge (residual {:.2e})",
            resid.max_abs_coeff()
        )))
    }
}

/// Vector fields into which a resonant normal form embeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Embedding {
    /// Leading-order field `nu^{-1} sum A_{m,k} z^m (z*)^k + i mu z`.
    pub leading_field: TruncatedSeries,
    /// `q` times the leading field, for `f^q`.
    pub leading_field_q: TruncatedSeries,
    /// Exact logarithm: its time-1 map reproduces `f o R_phi` to the
    /// truncation order.
    pub field: TruncatedSeries,
    /// `q` times `field`, whose time-1 map reproduces `f^q`.
    pub field_q: TruncatedSeries,
    pub detuning: f64,
}

/// Embeds the rotated normal form `f o R_phi` into a flow.
pub fn embed_rotated(map_nf: &NormalFormResult, spec: &ResonanceSpec) -> Result<Embedding> {
    let f = &map_nf.normalized_map;
    if let Some((mono, _)) = f
        .terms()
        .find(|(mono, _)| mono.degree() >= 2 && !is_resonant(mono.m, mono.k, spec))
    {
        return Err(Error::Rejected(format!(
            "non-resonant monomial {mono} present; normalize the map first"
        )));
    }
    let ell = check_linear_part(f)?;
    let mu = (ell / spec.lambda).arg();
    let d = f.max_degree();
    let nu_inv = spec.lambda.conj();
    let leading_field = f
        .filter(|mono| mono.degree() >= 2)
        .scale(nu_inv)
        .add(&TruncatedSeries::monomial(d, 1, 0, Complex64::new(0.0, mu)));
    let field = flow_logarithm(&rotate_back(f, spec))?;
    let qf = Complex64::new(spec.q as f64, 0.0);
    Ok(Embedding {
        leading_field_q: leading_field.scale(qf),
        leading_field,
        field_q: field.scale(qf),
        field,
        detuning: mu,
    })
}
