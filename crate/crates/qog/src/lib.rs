//! Simulation and analysis toolkit for a two-mode optical gyroscope probed
//! with squeezed vacuum and read out by photon-number parity.
//!
//! The crate computes the rotation-sensing precision delta-Omega along four
//! pipelines:
//!
//! * `ideal` — lossless closed form,
//! * `markovian` — exponential photon decay (the weak-coupling limit),
//! * `exact` — direct integration of the non-Markovian memory-kernel
//!   equation for the mode amplitudes,
//! * `asymptotic` — the long-time closed form valid when both modes form a
//!   bound state with their environment.
//!
//! Modules follow the physical pipeline: [`spectral`] defines the bath,
//! [`volterra`] evolves the amplitudes, [`spectrum`] finds the bound states
//! that control the long-time behavior, [`probe`] turns amplitudes into the
//! parity signal, and [`sensitivity`] propagates it to delta-Omega.
//!
//! Everything is deterministic; data-parallel paths (feature `parallel`, on
//! by default) order their outputs by index and fall back to sequential loops
//! when the feature is disabled.

pub mod error;
mod history;
pub mod par;
pub mod probe;
pub mod quad;
pub mod sensitivity;
pub mod spectral;
pub mod spectrum;
pub mod volterra;

pub use error::{Error, Result};
pub use probe::{ideal_parity, parity_expectation, sagnac_map, ParityInputs};
pub use sensitivity::{
    error_propagation, exact_sensitivity, ideal_sensitivity, local_minima_envelope,
    markovian_sensitivity, power_law_fit, AsymptoticSensitivity, FitResult, Flag, Provenance,
    SensitivitySeries,
};
pub use spectral::{Frequency, SpectralDensity};
pub use spectrum::{
    analyze, bound_state_gradient, find_bound_state, self_energy, theta_density, BoundState,
    Regime, RegimeReport,
};
pub use volterra::{
    converged_solve, masteq_coefficients, solve, ProbeConfig, TimeGrid, Trajectory,
};
