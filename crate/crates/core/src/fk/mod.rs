//! Finite-state Feynman-Kac structures: distributions, kernels, bridging
//! sequences, the exact asymptotic variance and metastable approximations.

mod distribution;
mod kernel;
mod metastable;
mod sequence;
mod variance;

pub use distribution::{FiniteDistribution, NORMALIZATION_TOL};
pub use kernel::{
    operator_gap_l2, sup_operator_distance, KernelRows, SubKernel, TransitionKernel,
    INVARIANCE_TOL, STOCHASTIC_TOL,
};
pub use metastable::{
    absorption_probabilities, metastable_kernel, metastable_t_kernel, AlphaRule,
    MetastableKernel, RegionStructure,
};
pub use sequence::{BridgingDocument, BridgingSequence, Partition};
pub use variance::{
    asymptotic_variance_exact, local_mixing, max_weight, mixing_constants,
    mixing_constants_with_local, MixingConstants, VarianceReport,
};
