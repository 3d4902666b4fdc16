//! Beam-splitter / Lorentzian model of the antenna resonator and the lossy
//! link between the antenna and the detector input.
//!
//! Spectral quantities are photon fluxes per unit bandwidth in occupation
//! units, sampled on a caller-supplied grid of offsets from the antenna
//! resonance.

use crate::error::{Error, Result};
use crate::quantities::{BathPopulations, ModeParams};

/// Which physical quantity a [`SpectralDensity`] samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpectrumLabel {
    /// Output photon flux per unit bandwidth of the antenna resonator.
    AntennaOutput,
    /// Photon flux per unit bandwidth at the input of the readout cavity.
    ReadoutInput,
    /// Background-subtracted antenna output (classical radiometry contrast).
    CoolingContrast,
}

/// A sampled spectrum over offsets `f - f_a` (Hz).
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralDensity {
    grid: Vec<f64>,
    values: Vec<f64>,
    label: SpectrumLabel,
}

impl SpectralDensity {
    pub fn new(grid: Vec<f64>, values: Vec<f64>, label: SpectrumLabel) -> Result<Self> {
        if grid.len() != values.len() {
            return Err(Error::InvalidParameter(format!(
                "grid has {} points but values has {}",
                grid.len(),
                values.len()
            )));
        }
        if grid.is_empty() {
            return Err(Error::InvalidParameter("spectrum grid is empty".into()));
        }
        if grid.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidParameter(
                "spectrum grid must be strictly increasing".into(),
            ));
        }
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidParameter(
                "spectrum values must be finite and nonnegative".into(),
            ));
        }
        Ok(Self { grid, values, label })
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }
    pub fn values(&self) -> &[f64] {
        &self.values
    }
    pub fn label(&self) -> SpectrumLabel {
        self.label
    }
    pub fn len(&self) -> usize {
        self.grid.len()
    }
    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }
    /// Iterate over (offset, value) pairs.
    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.grid.iter().copied().zip(self.values.iter().copied())
    }
}

/// Power transmission of the antenna resonator at offset `df` (Hz) from its
/// resonance: 4 gamma (1 - gamma) / (1 + 16 pi^2 df^2 / kappa_a^2).
pub fn lorentzian_transmission(params: &ModeParams, df_hz: f64) -> f64 {
    let g = params.gamma();
    let x = 2.0 * std::f64::consts::TAU * df_hz / params.kappa_a();
    4.0 * g * (1.0 - g) / (1.0 + x * x)
}

/// Thermal population of the antenna mode:
/// gamma n_vts + (1 - gamma)(n_ext + n_add).
pub fn antenna_population(params: &ModeParams, baths: &BathPopulations) -> f64 {
    let g = params.gamma();
    g * baths.n_vts() + (1.0 - g) * (baths.n_ext() + baths.n_add())
}

/// Offsets spanning +-10 antenna linewidths with 401 points.
pub fn default_grid(params: &ModeParams) -> Vec<f64> {
    let half = 10.0 * params.kappa_a() / std::f64::consts::TAU;
    let n = 401usize;
    (0..n)
        .map(|i| -half + 2.0 * half * i as f64 / (n - 1) as f64)
        .collect()
}

/// Output photon flux per unit bandwidth of the antenna:
/// n_vts (t_a + t_leak) + (n_ext + n_add)(1 - t_a).
pub fn antenna_output_spectrum(
    params: &ModeParams,
    baths: &BathPopulations,
    grid: &[f64],
) -> Result<SpectralDensity> {
    let reflected = baths.n_ext() + baths.n_add();
    let values = grid
        .iter()
        .map(|&df| {
            let t_a = lorentzian_transmission(params, df);
            baths.n_vts() * (t_a + baths.t_leak()) + reflected * (1.0 - t_a)
        })
        .collect();
    SpectralDensity::new(grid.to_vec(), values, SpectrumLabel::AntennaOutput)
}

/// Photon flux per unit bandwidth at the readout-cavity input:
/// n_a_out t_loss eta_conv + n_loss (1 - t_loss).
pub fn readout_input_spectrum(
    params: &ModeParams,
    baths: &BathPopulations,
    grid: &[f64],
) -> Result<SpectralDensity> {
    let upstream = antenna_output_spectrum(params, baths, grid)?;
    let floor = baths.n_loss() * (1.0 - baths.t_loss());
    let scale = baths.t_loss() * params.conversion_efficiency();
    let values = upstream.values().iter().map(|v| v * scale + floor).collect();
    SpectralDensity::new(grid.to_vec(), values, SpectrumLabel::ReadoutInput)
}

/// Background-subtracted output spectrum of the classical radiometry branch:
/// n_vts t_a + n_add (1 - t_a). Peaked at df = 0 for n_vts > n_add, dipped
/// for n_vts < n_add, flat at the crossover.
pub fn classical_cooling_spectrum(
    params: &ModeParams,
    n_vts: f64,
    n_add: f64,
    grid: &[f64],
) -> Result<SpectralDensity> {
    if !(n_vts.is_finite() && n_vts >= 0.0 && n_add.is_finite() && n_add >= 0.0) {
        return Err(Error::InvalidParameter(
            "populations must be finite and nonnegative".into(),
        ));
    }
    let values = grid
        .iter()
        .map(|&df| {
            let t_a = lorentzian_transmission(params, df);
            n_vts * t_a + n_add * (1.0 - t_a)
        })
        .collect();
    SpectralDensity::new(grid.to_vec(), values, SpectrumLabel::CoolingContrast)
}
