//! Single-photon-detector view of the dephasing radiometer: quantum
//! efficiency and dark counts of the Ramsey sequence, precision comparison
//! against linear-amplifier radiometers, and dynamic range.

use crate::dephasing::gamma_th;
use crate::error::{Error, Result};
use crate::quantities::{ModeParams, PulseTiming, QubitParams};

/// Detector figures of merit. Unprimed values describe the bare cQED
/// detector; primed values fold in the parasitic white background present
/// while the converter pump is on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectorFigures {
    /// Quantum efficiency (bounded below 0.5 by the Ramsey readout).
    pub eta: f64,
    /// Dark-count probability per detection window.
    pub p_dc: f64,
    /// Efficiency including the parasitic background.
    pub eta_prime: f64,
    /// Dark counts including the parasitic background.
    pub p_dc_prime: f64,
    /// Parasitic dark-count probability (background-free window).
    pub p_dc0: f64,
    /// Dark-count rate from the parasitic photons, (p_dc' - p_dc)/tau_p.
    pub r_dc: f64,
    /// Dynamic range of the radiometer in dB.
    pub dynamic_range_db: f64,
}

impl DetectorFigures {
    /// Slope of the click number against input photon probability, which is
    /// the quantum efficiency by definition.
    pub fn n_click_slope(&self) -> f64 {
        self.eta
    }

    /// Precision advantage over an ideal quantum-limited amplifier.
    pub fn outperform(&self, params: &ModeParams, timing: &PulseTiming) -> f64 {
        outperform_ratio(self.eta, self.p_dc, params, timing, 1.0)
    }

    /// Precision advantage of the whole setup (parasitic background
    /// included) over a linear amplifier with system noise `n_sys_lin`.
    pub fn outperform_parasitic(
        &self,
        params: &ModeParams,
        timing: &PulseTiming,
        n_sys_lin: f64,
    ) -> f64 {
        outperform_ratio(self.eta_prime, self.p_dc_prime, params, timing, n_sys_lin)
    }
}

/// Inputs for the linear-amplifier precision benchmark.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrecisionInputs {
    /// Linear-amplifier system noise in photon units.
    pub n_sys_lin: f64,
    /// Detection bandwidth (rad/s).
    pub bandwidth_b: f64,
    /// Integration time (s).
    pub tau_int: f64,
    /// Relative gain fluctuation of the receiver.
    pub delta_g_over_g: f64,
}

impl PrecisionInputs {
    pub fn new(n_sys_lin: f64, bandwidth_b: f64, tau_int: f64, delta_g_over_g: f64) -> Result<Self> {
        if !(n_sys_lin >= 0.0 && bandwidth_b > 0.0 && tau_int > 0.0 && delta_g_over_g >= 0.0) {
            return Err(Error::InvalidParameter(
                "precision inputs must be nonnegative with positive bandwidth and time".into(),
            ));
        }
        Ok(Self {
            n_sys_lin,
            bandwidth_b,
            tau_int,
            delta_g_over_g,
        })
    }
}

/// Number of clicks for a click probability: N = ln(1/(1 - p)).
pub fn n_click(p_click: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&p_click) {
        return Err(Error::Domain(format!(
            "click probability must lie in [0, 1), got {p_click}"
        )));
    }
    Ok(-(-p_click).ln_1p())
}

/// Figures of merit of the Ramsey-sequence detector.
///
/// eta  = [A0 e^(-G2R tw) / (1 + A0 e^(-G2R tw))] chi^2/(chi^2 + kappa_r^2)
/// P_dc = ln(2 / (1 + A0 e^(-G2R tw)))
///
/// The primed versions multiply the exponent by the extra full-formula
/// dephasing from the parasitic background population `n_r_para`.
pub fn detector_figures(
    qubit: &QubitParams,
    params: &ModeParams,
    timing: &PulseTiming,
    a0: f64,
    n_r_para: f64,
) -> Result<DetectorFigures> {
    if !(a0 > 0.0 && a0 <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "initial contrast must lie in (0, 1], got {a0}"
        )));
    }
    if !(n_r_para >= 0.0) || !n_r_para.is_finite() {
        return Err(Error::Domain(format!(
            "parasitic population must be >= 0, got {n_r_para}"
        )));
    }
    let chi = params.chi();
    let kr = params.kappa_r();
    let dispersive_share = chi * chi / (chi * chi + kr * kr);
    let decay = a0 * (-qubit.gamma_2r * timing.tau_w()).exp();
    let eta = decay / (1.0 + decay) * dispersive_share;
    let p_dc = (2.0 / (1.0 + decay)).ln();

    let gamma_para = gamma_th(params, n_r_para)?;
    let decay_p = decay * (-gamma_para * timing.tau_p()).exp();
    let eta_prime = decay_p / (1.0 + decay_p) * dispersive_share;
    let p_dc_prime = (2.0 / (1.0 + decay_p)).ln();

    Ok(DetectorFigures {
        eta,
        p_dc,
        eta_prime,
        p_dc_prime,
        p_dc0: p_dc,
        r_dc: (p_dc_prime - p_dc) / timing.tau_p(),
        dynamic_range_db: dynamic_range(qubit, params)?,
    })
}

/// Relative precision of a total-power radiometer with linear amplification:
/// delta_n / n_sys = sqrt(2 pi/(B tau_int) + (dG/G)^2).
pub fn precision_linear(inputs: &PrecisionInputs) -> f64 {
    (std::f64::consts::TAU / (inputs.bandwidth_b * inputs.tau_int)
        + inputs.delta_g_over_g * inputs.delta_g_over_g)
        .sqrt()
}

/// Precision of the dephasing radiometer on the readout population after
/// `n_shots` windows: (1/(eta kappa_r tau_p)) sqrt(P_dc(1-P_dc)/N).
pub fn precision_dephasing(
    figures: &DetectorFigures,
    params: &ModeParams,
    timing: &PulseTiming,
    n_shots: u64,
) -> Result<f64> {
    if n_shots == 0 {
        return Err(Error::Domain("need at least one detection window".into()));
    }
    let p = figures.p_dc;
    Ok((p * (1.0 - p) / n_shots as f64).sqrt()
        / (figures.eta * params.kappa_r() * timing.tau_p()))
}

/// Precision advantage of the dephasing radiometer over a linear-amplifier
/// radiometer of equal bandwidth (B = kappa_r) and integration time:
///
/// delta_n_lin / delta_n_qu = n_sys_lin eta sqrt(2 pi kappa_r tau_p / (P_dc (1 - P_dc)))
pub fn outperform_ratio(
    eta: f64,
    p_dc: f64,
    params: &ModeParams,
    timing: &PulseTiming,
    n_sys_lin: f64,
) -> f64 {
    let krtp = params.kappa_r() * timing.tau_p();
    n_sys_lin * eta * (std::f64::consts::TAU * krtp / (p_dc * (1.0 - p_dc))).sqrt()
}

/// Dynamic range in dB: the usable population window spans from the
/// decoherence-fluctuation floor delta_Gamma_2R / kappa_r up to the
/// anharmonicity ceiling 2 pi (f_ge - f_ef) / chi.
pub fn dynamic_range(qubit: &QubitParams, params: &ModeParams) -> Result<f64> {
    let chi = params.chi();
    if chi == 0.0 {
        return Err(Error::Domain(
            "chi = 0: the radiometer has no population response".into(),
        ));
    }
    if qubit.delta_gamma_2r <= 0.0 {
        return Err(Error::Domain(
            "delta_gamma_2r must be positive to set the detection floor".into(),
        ));
    }
    let lower = qubit.delta_gamma_2r / params.kappa_r();
    let upper = std::f64::consts::TAU * (qubit.f_ge - qubit.f_ef) / chi.abs();
    Ok(10.0 * (upper / lower).log10())
}
