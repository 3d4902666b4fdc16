//! Physical constants (SI, 2019 redefinition — exact values).
//!
//! All thermal conversions in the crate go through these two constants, so
//! they are defined in exactly one place.

/// Planck constant, J·s (exact).
pub const PLANCK: f64 = 6.626_070_15e-34;

/// Boltzmann constant, J/K (exact).
pub const BOLTZMANN: f64 = 1.380_649e-23;
