//! Zeros of derivatives of random polynomials with i.i.d. roots.
//!
//! The central object is the ratio
//!
//! ```text
//! S_n(z) = P^(k)(z) / (k! P(z)) = e_k(1/(z − Z_1), …, 1/(z − Z_n))
//! ```
//!
//! whose zeros are the zeros of `P^(k)` away from the roots of `P`. The crate
//! samples root sets, finds and certifies the zeros of `P^(k)`, compares their
//! empirical measure with the root law, audits Jensen-type bounds through
//! Möbius maps and estimates small-ball probabilities of `S_n`.
//!
//! Everything numeric is generic over [`Scalar`] (`f32` or `f64`); the
//! aliases below fix `f64`.

pub mod anticoncentration;
mod compensated;
pub mod error;
pub mod measures;
pub mod mobius;
pub mod polynomial;
pub mod rootfinding;
pub mod sampling;
pub mod scalar;
pub mod stats;

pub use error::{Error, Result};
pub use measures::{EmpiricalMeasure, Metric};
pub use mobius::{Extended, GeneralizedCircle, MobiusTransform};
pub use polynomial::{evaluate_sn, RootSet, SnValue};
pub use rootfinding::{derivative_zeros, AberthOptions, RootFindResult};
pub use sampling::{RootDistribution, SampleStream};
pub use scalar::Scalar;

pub type RootSet64 = RootSet<f64>;
pub type RootSet32 = RootSet<f32>;
pub type RootFindResult64 = RootFindResult<f64>;
pub type EmpiricalMeasure64 = EmpiricalMeasure<f64>;
pub type MobiusTransform64 = MobiusTransform<f64>;
pub type Extended64 = Extended<f64>;
pub type GeneralizedCircle64 = GeneralizedCircle<f64>;
pub type SnValue64 = SnValue<f64>;
