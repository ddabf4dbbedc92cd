//! Resonant normal forms of centrally symmetric p:q elliptic points of
//! area-preserving planar maps (odd q), the truncated flow models they embed
//! into, and the garlands of equilibria and periodic orbits that appear when
//! the resonance is unfolded.
//!
//! The crate is organised bottom-up:
//!
//! * [`series`] truncated power series in `(z, z*)`;
//! * [`normal_form`] elimination of non-resonant monomials and flow embedding;
//! * [`flow`] the three truncated flow models, their polar forms and
//!   Hamiltonians, plus trajectory integration;
//! * [`equilibria`] equilibrium search, classification, garlands and
//!   pitchfork detection;
//! * [`atlas`] two-parameter region atlases;
//! * [`maps`] periodic orbits of the maps themselves.

// `!(x >= lo)` guards deliberately reject NaN as well
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod atlas;
pub mod equilibria;
pub mod error;
pub mod flow;
pub mod json;
pub mod linalg;
pub mod maps;
pub mod normal_form;
mod ode;
pub mod series;

pub use error::{Error, Result};
pub use flow::{FlowModel, FlowParams, PolarState};
pub use normal_form::{NormalFormResult, ResonanceSpec};
pub use series::{Monomial, TruncatedSeries};
