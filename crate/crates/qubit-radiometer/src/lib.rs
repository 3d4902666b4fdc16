// Validation guards are written as `!(x > 0.0)` so that NaN is rejected
// along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

//! Simulation and analysis toolkit for a microwave radiometer that senses
//! photon flux through the extra dephasing it induces in a dispersively
//! coupled superconducting qubit.
//!
//! The crate covers the full pipeline of such an instrument:
//!
//! - [`quantities`] — unit conventions, Bose–Einstein conversions, and the
//!   validated parameter records shared by every module.
//! - [`antenna`] — beam-splitter/Lorentzian model of the antenna resonator
//!   and the lossy link to the detector.
//! - [`dephasing`] — closed-form theory of dephasing under pulsed Lorentzian
//!   noise: the white-noise rate and its inverse, pulsed-filter correlators,
//!   the detector response function, and the full radiometer response.
//! - [`master_equation`] — exact cascaded-master-equation solution through a
//!   Gaussian ansatz for the P-function; the independent oracle for the
//!   analytic theory.
//! - [`ramsey`] — forward model and estimator for the Ramsey-based
//!   measurement: fringe synthesis with shot noise, sinusoid fits, and
//!   population extraction with uncertainties.
//! - [`calibration`] — the three-step calibration protocol extracting link
//!   transmissions and bath populations from families of dephasing spectra,
//!   plus system-noise assembly.
//! - [`metrics`] — single-photon-detector figures of merit, precision
//!   comparison against linear-amplifier radiometers, and dynamic range.
//! - [`config`] / [`workflows`] — TOML-driven front end used by the
//!   `qubit-radiometer` binary and the examples.
//!
//! Start with the runnable programs under `examples/`; each demonstrates one
//! capability end to end.

pub mod antenna;
pub mod calibration;
pub mod config;
pub mod constants;
pub mod dephasing;
pub mod error;
pub mod master_equation;
pub mod metrics;
pub mod numerics;
pub mod quantities;
pub mod ramsey;
pub mod workflows;

pub use error::{Error, Result};
