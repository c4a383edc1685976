//! Physical-layer secret key generation over reconfigurable intelligent
//! surfaces: channel ensembles, probing, quantization, key rates, surface
//! optimization, attacks and defenses, and randomness auditing.
//!
//! Numeric types are generic over [`Real`] (`f32` or `f64`); the aliases
//! below fix the common `f64` instantiation.

pub mod adversary;
pub mod channel;
pub mod cli;
pub mod error;
pub mod experiments;
pub mod keygen;
pub mod keyrate;
pub mod optimize;
pub mod probing;
pub mod randomness;
pub mod ris;
pub mod scalar;
pub mod seed;
pub mod selftest;

pub use error::{Error, Result};
pub use scalar::Real;
pub use seed::Seed;

pub type ChannelStats = channel::ChannelStats<f64>;
pub type ChannelRealization = channel::ChannelRealization<f64>;
pub type RisConfig = ris::RisConfig<f64>;
pub type ProbeSession = probing::ProbeSession<f64>;
pub type ProbeRecord = probing::ProbeRecord<f64>;
pub type GaussObsModel = keyrate::GaussObsModel<f64>;
pub type OptOptions = optimize::OptOptions<f64>;
pub type CcsParams = adversary::CcsParams<f64>;
pub type AttackScenario = adversary::AttackScenario<f64>;
pub type Complex = num_complex::Complex<f64>;
