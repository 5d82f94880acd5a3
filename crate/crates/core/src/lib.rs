//! Heavy-tailed Pitman-Yor random measures and mixture models.
//!
//! Stick-breaking and subordinator draws live in [`measures`], tail envelopes
//! and the Hill estimator in [`tails`], parametric building blocks in
//! [`dists`], model specifications in [`models`], the slice sampler in
//! [`mcmc`] and the simulation scenarios in [`simstudy`].

pub mod data;
pub mod dists;
pub mod error;
pub mod mcmc;
pub mod measures;
pub mod models;
pub mod quad;
pub mod scalar;
pub mod simstudy;
pub mod special;
pub mod stats;
pub mod tails;

pub use data::Dataset;
pub use error::{Error, Result};
pub use scalar::Real;

pub type ErlangKernel = dists::ErlangKernel<f64>;
pub type ParetoTypeKernel = dists::ParetoTypeKernel<f64>;
pub type ParetoII = dists::ParetoII<f64>;
pub type LogGamma = dists::LogGamma<f64>;
pub type GumbelCopula = dists::GumbelCopula<f64>;
pub type EnvelopeParams = tails::EnvelopeParams<f64>;
pub type TailIndexEstimate = tails::TailIndexEstimate<f64>;

/// Seeded generator used by every chain and simulation in this crate.
pub type Rng = rand_chacha::ChaCha8Rng;

/// Generator for stream `stream` of a seed; distinct streams are independent.
pub fn seeded_rng(seed: u64, stream: u64) -> Rng {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
