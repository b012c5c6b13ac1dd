//! Resonances of the dual phase and decay of dual eigenvectors.

pub mod eigvec;
pub mod resonance;
pub mod uniformity;

pub use eigvec::{
    decay_measure, dual_eigenvector, inverse_iteration, origin_state_energy, kth_eigenvalue, least_squares, shifted_solve, DecayProfile,
    DualState,
};
pub use resonance::{resonance_gaps_check, resonances, DualPhase, ResonancePair, ResonanceSet};
pub use uniformity::{essential_degree_select, gamma_uniformity, gamma_uniformity_parts, DegreeCase};
