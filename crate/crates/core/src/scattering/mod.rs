//! Two-body scattering: classical orbits and eikonal phases for the
//! long-range part, the identification operator `J`, and measured wave
//! operators.

mod orbit;
mod phase;

pub use orbit::{OrbitEnd, OrbitSolver};
pub use phase::{
    build_phase_function, eikonal_phase, eikonal_residual, EikonalOptions, EikonalValue, PhaseFunction, PhaseParams,
    ResidualSample, Sign,
};

#[cfg(feature = "std")]
mod identification;

#[cfg(feature = "std")]
pub use identification::{
    identification_apply, low_momentum_fraction, search_r0, Identification, RadiusSearch, DEFAULT_TABLE_NODES,
};

#[cfg(feature = "std")]
mod wave;

#[cfg(feature = "std")]
pub use wave::{
    completeness_defect, cook_wave_operator, default_checkpoints, intertwining_defect, modified_wave_operator,
    wave_map, wave_operator_at, EnergyWindow, WaveOperatorResult,
};
