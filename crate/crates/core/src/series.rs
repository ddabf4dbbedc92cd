//! Truncated power series in the conjugate pair `(z, z*)`.
//!
//! A [`TruncatedSeries`] is the Taylor polynomial of a planar map or vector
//! field written in complex coordinates, `sum A_{m,k} z^m (z*)^k`, with every
//! monomial of total degree above `max_degree` discarded. Values are
//! immutable; every operation returns a new series.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Coefficients with magnitude below this are treated as exact zeros.
pub const DROPOUT_TOL: f64 = 1e-15;

/// Exponent pair of `z^m (z*)^k`.
///
/// Ordered by total degree first and then by `m`, which is also the order
/// used for serialization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Monomial {
    pub m: u32,
    pub k: u32,
}

impl Monomial {
    pub const fn new(m: u32, k: u32) -> Self {
        Self { m, k }
    }

    pub const fn degree(self) -> u32 {
        self.m + self.k
    }
}

impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.degree(), self.m).cmp(&(other.degree(), other.m))
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "z^{} z*^{}", self.m, self.k)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedSeries {
    max_degree: u32,
    coeffs: BTreeMap<Monomial, Complex64>,
}

fn significant(c: Complex64) -> bool {
    c.norm() >= DROPOUT_TOL && c.re.is_finite() && c.im.is_finite()
}

impl TruncatedSeries {
    /// The zero series.
    pub fn zero(max_degree: u32) -> Self {
        Self {
            max_degree,
            coeffs: BTreeMap::new(),
        }
    }

    /// The constant series `c`.
    pub fn constant(max_degree: u32, c: Complex64) -> Self {
        Self::from_terms(max_degree, [(Monomial::new(0, 0), c)])
    }

    /// The coordinate function `z`.
    pub fn z(max_degree: u32) -> Self {
        Self::monomial(max_degree, 1, 0, Complex64::new(1.0, 0.0))
    }

    /// The coordinate function `z*`.
    pub fn zstar(max_degree: u32) -> Self {
        Self::monomial(max_degree, 0, 1, Complex64::new(1.0, 0.0))
    }

    pub fn monomial(max_degree: u32, m: u32, k: u32, c: Complex64) -> Self {
        Self::from_terms(max_degree, [(Monomial::new(m, k), c)])
    }

    /// Builds a series from `(monomial, coefficient)` pairs. Repeated
    /// monomials are summed; terms above `max_degree` or below the dropout
    /// tolerance are discarded.
    pub fn from_terms<I>(max_degree: u32, terms: I) -> Self
    where
        I: IntoIterator<Item = (Monomial, Complex64)>,
    {
        let mut coeffs: BTreeMap<Monomial, Complex64> = BTreeMap::new();
        for (mono, c) in terms {
            if mono.degree() <= max_degree {
                *coeffs.entry(mono).or_default() += c;
            }
        }
        coeffs.retain(|_, c| significant(*c));
        Self { max_degree, coeffs }
    }

    pub fn max_degree(&self) -> u32 {
        self.max_degree
    }

    /// Coefficient of `z^m (z*)^k`; zero when absent.
    pub fn coeff(&self, m: u32, k: u32) -> Complex64 {
        self.coeffs
            .get(&Monomial::new(m, k))
            .copied()
            .unwrap_or_default()
    }

    /// Coefficient of `z`: the eigenvalue for maps, `i*mu` for flows.
    pub fn linear_part(&self) -> Complex64 {
        self.coeff(1, 0)
    }

    /// Stored terms in `(degree, m)` order.
    pub fn terms(&self) -> impl Iterator<Item = (Monomial, Complex64)> + '_ {
        self.coeffs.iter().map(|(m, c)| (*m, *c))
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Largest coefficient magnitude, zero for the empty series.
    pub fn max_abs_coeff(&self) -> f64 {
        self.coeffs.values().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Lowest total degree carrying a stored term.
    pub fn min_degree(&self) -> Option<u32> {
        self.coeffs.keys().next().map(|m| m.degree())
    }

    /// Same coefficients with a new truncation order; terms above it are
    /// dropped.
    pub fn with_max_degree(&self, max_degree: u32) -> Self {
        Self::from_terms(max_degree, self.terms())
    }

    /// Replaces (or removes, for zero) a single coefficient.
    pub fn with_coeff(mut self, m: u32, k: u32, c: Complex64) -> Self {
        let mono = Monomial::new(m, k);
        if mono.degree() <= self.max_degree && significant(c) {
            self.coeffs.insert(mono, c);
        } else {
            self.coeffs.remove(&mono);
        }
        self
    }

    /// Keeps only the terms accepted by `keep`.
    pub fn filter<F: Fn(Monomial) -> bool>(&self, keep: F) -> Self {
        Self {
            max_degree: self.max_degree,
            coeffs: self
                .coeffs
                .iter()
                .filter(|(m, _)| keep(**m))
                .map(|(m, c)| (*m, *c))
                .collect(),
        }
    }

    /// Multiplies every coefficient by `s`.
    pub fn scale(&self, s: Complex64) -> Self {
        Self::from_terms(self.max_degree, self.terms().map(|(m, c)| (m, c * s)))
    }

    /// Coefficient-wise sum, truncated at the smaller order.
    pub fn add(&self, other: &Self) -> Self {
        let d = self.max_degree.min(other.max_degree);
        Self::from_terms(d, self.terms().chain(other.terms()))
    }

    pub fn sub(&self, other: &Self) -> Self {
        let d = self.max_degree.min(other.max_degree);
        Self::from_terms(d, self.terms().chain(other.terms().map(|(m, c)| (m, -c))))
    }

    /// Product truncated at the smaller order.
    pub fn mul(&self, other: &Self) -> Self {
        let d = self.max_degree.min(other.max_degree);
        let n = ((d + 1) * (d + 2) / 2) as usize;
        let mut acc = vec![Complex64::default(); n];
        let rhs: Vec<(Monomial, Complex64)> = other.terms().collect();
        for (ma, ca) in self.terms() {
            if ma.degree() > d {
                break;
            }
            for &(mb, cb) in &rhs {
                let deg = ma.degree() + mb.degree();
                if deg > d {
                    break;
                }
                acc[dense_index(ma.m + mb.m, ma.k + mb.k)] += ca * cb;
            }
        }
        Self::from_dense(d, &acc)
    }

    /// `self^n` by repeated squaring.
    pub fn pow(&self, n: u32) -> Self {
        let mut result = Self::constant(self.max_degree, Complex64::new(1.0, 0.0));
        let mut base = self.clone();
        let mut e = n;
        while e > 0 {
            if e & 1 == 1 {
                result = result.mul(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(&base);
            }
        }
        result
    }

    /// Complex conjugate as a function of `(z, z*)`: swaps `m` and `k` and
    /// conjugates every coefficient.
    pub fn conjugate(&self) -> Self {
        Self {
            max_degree: self.max_degree,
            coeffs: self
                .coeffs
                .iter()
                .map(|(mono, c)| (Monomial::new(mono.k, mono.m), c.conj()))
                .collect(),
        }
    }

    /// True iff no even-degree monomial has a stored coefficient, i.e.
    /// `s(-z, -z*) = -s(z, z*)`.
    pub fn is_centrally_symmetric(&self) -> bool {
        self.coeffs.keys().all(|m| m.degree() % 2 == 1)
    }

    /// `d/dz`, keeping the truncation order.
    pub fn d_dz(&self) -> Self {
        Self::from_terms(
            self.max_degree,
            self.terms()
                .filter(|(mono, _)| mono.m > 0)
                .map(|(mono, c)| (Monomial::new(mono.m - 1, mono.k), c * mono.m as f64)),
        )
    }

    /// `d/dz*`, keeping the truncation order.
    pub fn d_dzstar(&self) -> Self {
        Self::from_terms(
            self.max_degree,
            self.terms()
                .filter(|(mono, _)| mono.k > 0)
                .map(|(mono, c)| (Monomial::new(mono.m, mono.k - 1), c * mono.k as f64)),
        )
    }

    /// Evaluates the coefficient table at `z` with precomputed power tables.
    pub fn eval(&self, z: Complex64) -> Complex64 {
        let (zp, zsp) = power_tables(z, self.max_degree);
        self.terms()
            .map(|(mono, c)| c * zp[mono.m as usize] * zsp[mono.k as usize])
            .sum()
    }

    /// Value together with `d/dz` and `d/dz*` at `z`.
    pub fn eval_with_derivatives(&self, z: Complex64) -> (Complex64, Complex64, Complex64) {
        let (zp, zsp) = power_tables(z, self.max_degree);
        let mut f = Complex64::default();
        let mut fz = Complex64::default();
        let mut fzs = Complex64::default();
        for (mono, c) in self.terms() {
            let (m, k) = (mono.m as usize, mono.k as usize);
            f += c * zp[m] * zsp[k];
            if m > 0 {
                fz += c * (m as f64) * zp[m - 1] * zsp[k];
            }
            if k > 0 {
                fzs += c * (k as f64) * zp[m] * zsp[k - 1];
            }
        }
        (f, fz, fzs)
    }

    /// `self(inner_z, inner_zstar)`; see [`compose`].
    pub fn compose(&self, inner_z: &Self, inner_zstar: &Self) -> Result<Self> {
        compose(self, inner_z, inner_zstar)
    }

    fn from_dense(max_degree: u32, acc: &[Complex64]) -> Self {
        let mut coeffs = BTreeMap::new();
        for deg in 0..=max_degree {
            for k in 0..=deg {
                let c = acc[dense_index(deg - k, k)];
                if significant(c) {
                    coeffs.insert(Monomial::new(deg - k, k), c);
                }
            }
        }
        Self { max_degree, coeffs }
    }
}

fn dense_index(m: u32, k: u32) -> usize {
    let d = m + k;
    (d * (d + 1) / 2 + k) as usize
}

fn power_tables(z: Complex64, n: u32) -> (Vec<Complex64>, Vec<Complex64>) {
    let mut zp = Vec::with_capacity(n as usize + 1);
    let mut zsp = Vec::with_capacity(n as usize + 1);
    let one = Complex64::new(1.0, 0.0);
    zp.push(one);
    zsp.push(one);
    for i in 1..=n as usize {
        zp.push(zp[i - 1] * z);
        zsp.push(zsp[i - 1] * z.conj());
    }
    (zp, zsp)
}

/// Substitutes `z -> inner_z`, `z* -> inner_zstar` into `outer`, truncating
/// at the common `max_degree`.
///
/// Both inner series must have zero constant term so that truncation commutes
/// with substitution.
pub fn compose(
    outer: &TruncatedSeries,
    inner_z: &TruncatedSeries,
    inner_zstar: &TruncatedSeries,
) -> Result<TruncatedSeries> {
    let d = outer.max_degree;
    if inner_z.max_degree != d || inner_zstar.max_degree != d {
        return Err(Error::Config(format!(
            "compose: mismatched max_degree (outer {}, inner {} / {})",
            d, inner_z.max_degree, inner_zstar.max_degree
        )));
    }
    if inner_z.coeff(0, 0) != Complex64::default() || inner_zstar.coeff(0, 0) != Complex64::default() {
        return Err(Error::Config(
            "compose: inner series must have zero constant term".into(),
        ));
    }
    let max_m = outer.coeffs.keys().map(|m| m.m).max().unwrap_or(0);
    let max_k = outer.coeffs.keys().map(|m| m.k).max().unwrap_or(0);

    let one = TruncatedSeries::constant(d, Complex64::new(1.0, 0.0));
    let mut zstar_pows = Vec::with_capacity(max_k as usize + 1);
    zstar_pows.push(one.clone());
    for k in 1..=max_k as usize {
        let next = zstar_pows[k - 1].mul(inner_zstar);
        zstar_pows.push(next);
    }

    // outer = sum_m z^m * S_m(z*), with S_m a linear combination of powers
    let mut result = TruncatedSeries::zero(d);
    let mut z_pow = one;
    for m in 0..=max_m {
        let row: Vec<(u32, Complex64)> = outer
            .coeffs
            .iter()
            .filter(|(mono, _)| mono.m == m)
            .map(|(mono, c)| (mono.k, *c))
            .collect();
        if !row.is_empty() {
            let mut s_m = TruncatedSeries::zero(d);
            for (k, c) in row {
                s_m = s_m.add(&zstar_pows[k as usize].scale(c));
            }
            result = result.add(&z_pow.mul(&s_m));
        }
        if m < max_m {
            z_pow = z_pow.mul(inner_z);
        }
    }
    Ok(result)
}

/// Functional form of [`TruncatedSeries::conjugate`].
pub fn conjugate_series(s: &TruncatedSeries) -> TruncatedSeries {
    s.conjugate()
}

/// Functional form of [`TruncatedSeries::is_centrally_symmetric`].
pub fn is_centrally_symmetric(s: &TruncatedSeries) -> bool {
    s.is_centrally_symmetric()
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TermJson {
    m: u32,
    k: u32,
    re: f64,
    im: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SeriesJson {
    max_degree: u32,
    terms: Vec<TermJson>,
}

impl Serialize for TruncatedSeries {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        SeriesJson {
            max_degree: self.max_degree,
            terms: self
                .terms()
                .map(|(mono, c)| TermJson {
                    m: mono.m,
                    k: mono.k,
                    re: c.re,
                    im: c.im,
                })
                .collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for TruncatedSeries {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = SeriesJson::deserialize(d)?;
        if raw.max_degree == 0 {
            return Err(serde::de::Error::custom("max_degree must be positive"));
        }
        for t in &raw.terms {
            if t.m + t.k > raw.max_degree {
                return Err(serde::de::Error::custom(format!(
                    "term z^{} z*^{} exceeds max_degree {}",
                    t.m, t.k, raw.max_degree
                )));
            }
            if !(t.re.is_finite() && t.im.is_finite()) {
                return Err(serde::de::Error::custom("non-finite coefficient"));
            }
        }
        Ok(Self::from_terms(
            raw.max_degree,
            raw.terms
                .into_iter()
                .map(|t| (Monomial::new(t.m, t.k), Complex64::new(t.re, t.im))),
        ))
    }
}
