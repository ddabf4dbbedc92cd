//! Shared test fixtures: random maps and a double-double complex evaluator
//! used as an independent oracle for the normal-form conjugacy.

#![allow(dead_code)]

use std::ops::{Add, Mul, Sub};

use garland_core::linalg::{geomspace, log_log_slope};
use garland_core::{Monomial, ResonanceSpec, TruncatedSeries};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use twofloat::TwoFloat;

/// Centrally symmetric map `lambda z + sum` of random odd-degree terms with
/// coefficients uniform in `[-amp, amp]^2`.
pub fn random_symmetric_map(spec: &ResonanceSpec, degree: u32, seed: u64, amp: f64) -> TruncatedSeries {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut terms = vec![(Monomial::new(1, 0), spec.lambda)];
    for d in (3..=degree).step_by(2) {
        for k in 0..=d {
            let c = Complex64::new(rng.gen_range(-amp..amp), rng.gen_range(-amp..amp));
            terms.push((Monomial::new(d - k, k), c));
        }
    }
    TruncatedSeries::from_terms(degree, terms)
}

pub fn random_disc_point(rng: &mut ChaCha8Rng, radius: f64) -> Complex64 {
    let r = radius * rng.gen::<f64>().sqrt();
    Complex64::from_polar(r, rng.gen_range(0.0..std::f64::consts::TAU))
}

/// Complex number with double-double parts. Only `+`, `-` and `*` are used.
#[derive(Debug, Clone, Copy)]
pub struct Dd {
    pub re: TwoFloat,
    pub im: TwoFloat,
}

impl Dd {
    pub fn new(c: Complex64) -> Self {
        Self {
            re: TwoFloat::from(c.re),
            im: TwoFloat::from(c.im),
        }
    }

    pub fn zero() -> Self {
        Self::new(Complex64::default())
    }

    pub fn one() -> Self {
        Self::new(Complex64::new(1.0, 0.0))
    }

    pub fn conj(self) -> Self {
        Self { re: self.re, im: -self.im }
    }

    /// Rounded to double precision.
    pub fn to_c64(self) -> Complex64 {
        Complex64::new(self.re.hi() + self.re.lo(), self.im.hi() + self.im.lo())
    }

    pub fn norm(self) -> f64 {
        self.to_c64().norm()
    }
}

impl Add for Dd {
    type Output = Dd;
    fn add(self, o: Dd) -> Dd {
        Dd {
            re: self.re + o.re,
            im: self.im + o.im,
        }
    }
}

impl Sub for Dd {
    type Output = Dd;
    fn sub(self, o: Dd) -> Dd {
        Dd {
            re: self.re - o.re,
            im: self.im - o.im,
        }
    }
}

impl Mul for Dd {
    type Output = Dd;
    fn mul(self, o: Dd) -> Dd {
        Dd {
            re: self.re * o.re - self.im * o.im,
            im: self.re * o.im + self.im * o.re,
        }
    }
}

/// Evaluates a series at `w` with every product carried in double-double.
pub fn eval_dd(s: &TruncatedSeries, w: Dd) -> Dd {
    let d = s.max_degree() as usize;
    let wc = w.conj();
    let mut pw = vec![Dd::one(); d + 1];
    let mut pc = vec![Dd::one(); d + 1];
    for i in 1..=d {
        pw[i] = pw[i - 1] * w;
        pc[i] = pc[i - 1] * wc;
    }
    s.terms().fold(Dd::zero(), |acc, (m, c)| {
        acc + Dd::new(c) * pw[m.m as usize] * pc[m.k as usize]
    })
}

/// Solves `t(u) = z` for a near-identity `t` by fixed-point iteration.
pub fn invert_dd(t: &TruncatedSeries, z: Dd) -> Dd {
    let mut u = z;
    for _ in 0..80 {
        u = u - (eval_dd(t, u) - z);
    }
    u
}

/// Fitted log-log slope of `max_angle |t^{-1}(f(t(w))) - n(w)|` over
/// `|w| in [1e-3, 1e-2]`.
pub fn conjugacy_order(f: &TruncatedSeries, t: &TruncatedSeries, n: &TruncatedSeries) -> (f64, Vec<f64>) {
    let radii = geomspace(1e-3, 1e-2, 9);
    let resid: Vec<f64> = radii
        .iter()
        .map(|&r| {
            (0..16)
                .map(|k| {
                    let w = Dd::new(Complex64::from_polar(r, std::f64::consts::TAU * (k as f64 + 0.37) / 16.0));
                    let image = invert_dd(t, eval_dd(f, eval_dd(t, w)));
                    (image - eval_dd(n, w)).norm()
                })
                .fold(0.0, f64::max)
        })
        .collect();
    (log_log_slope(&radii, &resid).unwrap_or(f64::NAN), resid)
}
