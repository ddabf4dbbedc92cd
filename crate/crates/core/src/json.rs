//! Serde adapters that write complex numbers as `{"re": .., "im": ..}`.

use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComplexObj {
    pub re: f64,
    pub im: f64,
}

impl From<Complex64> for ComplexObj {
    fn from(c: Complex64) -> Self {
        Self { re: c.re, im: c.im }
    }
}

impl From<ComplexObj> for Complex64 {
    fn from(c: ComplexObj) -> Self {
        Complex64::new(c.re, c.im)
    }
}

pub mod complex {
    use super::*;

    pub fn serialize<S: Serializer>(c: &Complex64, s: S) -> Result<S::Ok, S::Error> {
        ComplexObj::from(*c).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Complex64, D::Error> {
        ComplexObj::deserialize(d).map(Into::into)
    }
}

pub mod complex_vec {
    use super::*;

    pub fn serialize<S: Serializer>(v: &[Complex64], s: S) -> Result<S::Ok, S::Error> {
        let objs: Vec<ComplexObj> = v.iter().copied().map(Into::into).collect();
        objs.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Complex64>, D::Error> {
        Vec::<ComplexObj>::deserialize(d).map(|v| v.into_iter().map(Into::into).collect())
    }
}

pub mod complex_pair {
    use super::*;

    pub fn serialize<S: Serializer>(v: &[Complex64; 2], s: S) -> Result<S::Ok, S::Error> {
        [ComplexObj::from(v[0]), ComplexObj::from(v[1])].serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<[Complex64; 2], D::Error> {
        let [a, b] = <[ComplexObj; 2]>::deserialize(d)?;
        Ok([a.into(), b.into()])
    }
}
