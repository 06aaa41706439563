//! Fidelity of quantum states on finite-dimensional spaces and on finite
//! truncations of countably infinite diagonal states.
//!
//! The crate covers the fidelity `F(ρ, σ) = Tr √(√ρ σ √ρ)` and the quantities
//! built around it: Uhlmann-optimal purifications, the Bures angle, trace
//! distance, measurement-induced classical fidelities with the optimal and
//! lifted-truncation POVMs, the Helstrom measurement, and channel
//! entanglement fidelity.

// `!(x > 0.0)` is used on purpose: it rejects NaN along with the range.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channels;
pub mod error;
pub mod fidelity;
pub mod io;
pub mod linalg;
pub mod measurement;
pub mod random;
pub mod states;
pub mod suites;
pub mod truncation;

pub use channels::{entanglement_fidelity, KrausChannel, NamedChannel};
pub use error::{Error, Result};
pub use fidelity::{
    bures_angle, check_bounds, fidelity, fidelity_nested_root, trace_distance, uhlmann_optimal_purifications,
    FidelityReport,
};
pub use linalg::{CMatrix, CVector, HermitianMatrix, SpectralDecomposition, Tolerances};
pub use measurement::{
    classical_fidelity, fidelity_optimal_povm, helstrom_povm, induced_distribution, lifted_truncation_povm,
    ClassicalDistribution, Povm,
};
pub use states::{partial_trace_ancilla, purify, random_density, DensityMatrix, PureState, Purification};
pub use truncation::{epsilon_schedule, truncated_fidelity_sweep, SpectralStateGenerator, SweepConfig};
