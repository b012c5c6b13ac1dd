//! Couplings, cocycles, Lyapunov exponents and rotation numbers.

pub mod cocycle;
pub mod coupling;
pub mod rotation;

pub use cocycle::{
    lyapunov_numeric, lyapunov_of, op_norm, sampler_product, transfer_product, CMat,
    CocycleSampler, LyapunovEstimate, ScaledProduct, Variant,
};
pub use coupling::{
    c_const_dual_triple, classify_region, closed_form_constants, dual_coupling, Coupling,
    ParameterSet, Region,
};
pub use rotation::{
    bump_weights, rotation_at, rotation_number, ConstantCocycle, ProjectiveCocycle,
    RenormalizedCocycle, RotationEstimate,
};
