//! The three-colour mean-field Potts model.
//!
//! A configuration of `M` spins has probability proportional to
//! `exp(β̃ Σ_c n_c² / M)`, where `n_c` counts the spins of colour `c`.
//! Colours are stored as `0, 1, 2` and modes as `0..=3`, the last one being
//! the central mode.

mod bridging;
mod geometry;
mod glauber;
mod lattice;

pub use bridging::{BridgingKind, PottsBridging, StepSchedule};
pub use geometry::{
    center_distance, center_geometry, distance, drift_phi, embed, BarycentricGeometry,
    CenterGeometry, CENTERS, CENTRAL_MODE, DEFAULT_J0, DEFAULT_RHO,
};
pub use glauber::{glauber_step, GlauberTable, SpinConfiguration};
pub use lattice::{
    lattice_len, lattice_states, log_sum_exp, magnetisation_log_pmf, magnetisation_transitions, neumaier_sum, LogFactorials,
    MagnetisationPmf, MagnetisationState,
};

use serde::Serialize;

use crate::error::{invalid_param, Result};

/// Critical inverse temperature `2 log 2` of the three-colour model.
pub const BETA_C: f64 = 2.0 * std::f64::consts::LN_2;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PottsParams {
    /// Number of spins `M`.
    pub m: usize,
    pub beta_tilde: f64,
}

impl PottsParams {
    pub fn new(m: usize, beta_tilde: f64) -> Result<Self> {
        if m == 0 {
            return Err(invalid_param("need at least one spin"));
        }
        if !(beta_tilde >= 0.0 && beta_tilde.is_finite()) {
            return Err(invalid_param(format!("beta_tilde must be finite and ≥ 0, got {beta_tilde}")));
        }
        Ok(Self { m, beta_tilde })
    }

    /// The model at `β̃_c`.
    pub fn critical(m: usize) -> Result<Self> {
        Self::new(m, BETA_C)
    }
}
