//! Sequential Monte Carlo on multimodal bridging sequences.
//!
//! * [`fk`]: exact finite-state Feynman-Kac objects and the asymptotic
//!   variance of the SMC estimator.
//! * [`smc`]: the particle sampler and a replication harness.
//! * [`bounds`]: variance bounds and their constants.
//! * [`potts`]: the three-colour mean-field Potts model and its bridging
//!   sequences.
//! * [`analysis`]: exact and simulated checks of the Potts model estimates.

pub mod analysis;
pub mod error;
pub mod bounds;
pub mod fk;
pub mod instances;
pub mod potts;
pub mod rng;
pub mod smc;

pub use error::{Error, Result};
