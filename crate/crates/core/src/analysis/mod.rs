//! Exact and simulated checks of the estimates used for the Potts model:
//! growth of mode masses, drift and jump variance of the magnetisation chain,
//! curvature, couplings, hitting and escape times, the Riemann sum of a
//! Gaussian, the asymptotic log-likelihood and local total variation.

mod contour;
mod coupling;
mod curvature;
mod drift;
mod growth;
mod local_tv;
mod loglik;
mod metastability;
mod riemann;
mod series;
mod transport;

pub use contour::{contour_grid, ContourGrid, ContourPoint, LocalMaximum};
pub use coupling::{coupling_tail, run_coupling, CoupledGlauber, CouplingTail, TailRow};
pub use curvature::{curvature_check, restricted_transitions, CurvatureReport, PairSelection};
pub use drift::{drift_verify, jump_variance_floor, jump_variance_min, DriftReport, JumpVarianceReport};
pub use growth::{growth_constants_series, GrowthSeries};
pub use local_tv::{local_tv_profile, LocalTvProfile, LocalTvRow};
pub use loglik::{asymptotic_loglik, asymptotic_loglik_check, LogLikForm, LogLikReport};
pub use metastability::{
    escape_experiment, hitting_experiment, hitting_scaling, EscapeReport, HittingReport, HittingScaling,
    MagnetisationChain,
};
pub use riemann::{gaussian_moment_integral, riemann_gauss, riemann_gauss_log10_error, RiemannGauss};
pub use series::{linear_fit, LinearFit, SeriesReport, SeriesSummary};
pub use transport::{solve_transport, transport_brute_force, TransportInstance, TransportSolution};
