//! The two concrete model families with their closed-form reference
//! quantities: a non-Hermitian two-level system and the one-dimensional
//! robotic-metamaterial chain.

mod metamaterial;
mod two_level;

pub use metamaterial::{
    metamaterial_complex_a_family, metamaterial_matrices, metamaterial_ramp_family,
    metamaterial_zero_mode, momentum_from_velocity, ramp_coupling, ramp_schedule,
    ramp_total_time, reciprocal_band_gap, InfinitePetermann, MetamaterialConfig,
    MetamaterialMatrices, ZeroModeInfo,
};
pub use two_level::{
    two_level_ag_along_detuning, two_level_closed_forms, two_level_family, Band,
    TwoLevelClosedForms, TwoLevelParams,
};
