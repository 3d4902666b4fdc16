//! Forward model and estimator for the Ramsey-based radiometry measurement:
//! fringe amplitudes with and without antenna radiation, synthetic
//! single-shot data with binomial noise, sinusoid fits, and extraction of
//! the effective readout population with statistical uncertainty.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Binomial, Distribution};

use crate::dephasing::{gamma_th_slope, invert_gamma_th};
use crate::error::{Error, Result};
use crate::quantities::{ModeParams, PulseTiming, QubitParams};

/// Initial-contrast model of qubit initialization and single-shot readout.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReadoutModel {
    pub p_e_ini: f64,
    pub p_read_e_given_g: f64,
    pub p_read_g_given_e: f64,
}

impl ReadoutModel {
    pub fn ideal() -> Self {
        Self {
            p_e_ini: 0.0,
            p_read_e_given_g: 0.0,
            p_read_g_given_e: 0.0,
        }
    }

    /// Probability of a "g" readout when the sequence returns the qubit to
    /// its initial state.
    pub fn p_g0(&self) -> f64 {
        let p_g_ini = 1.0 - self.p_e_ini;
        p_g_ini * (1.0 - self.p_read_e_given_g) + self.p_e_ini * self.p_read_g_given_e
    }

    /// Initial fringe contrast A0 = P_g0 - P_e0.
    pub fn a0(&self) -> f64 {
        2.0 * self.p_g0() - 1.0
    }
}

impl From<&QubitParams> for ReadoutModel {
    fn from(q: &QubitParams) -> Self {
        Self {
            p_e_ini: q.p_e_ini,
            p_read_e_given_g: q.p_read_e_given_g,
            p_read_g_given_e: q.p_read_g_given_e,
        }
    }
}

/// A measured (or synthesized) Ramsey fringe: "g"-outcome probability per
/// phase point, with optional simulated single-shot counts.
#[derive(Debug, Clone, PartialEq)]
pub struct RamseyFringe {
    phases: Vec<f64>,
    p_click: Vec<f64>,
    counts: Option<Vec<u64>>,
    n_rep: u64,
}

impl RamseyFringe {
    pub fn new(
        phases: Vec<f64>,
        p_click: Vec<f64>,
        counts: Option<Vec<u64>>,
        n_rep: u64,
    ) -> Result<Self> {
        if phases.len() != p_click.len() {
            return Err(Error::InvalidParameter(
                "phases and p_click must have equal length".into(),
            ));
        }
        if p_click.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::InvalidParameter("p_click must lie in [0, 1]".into()));
        }
        if let Some(c) = &counts {
            if c.len() != phases.len() {
                return Err(Error::InvalidParameter("counts length mismatch".into()));
            }
            if c.iter().any(|&k| k > n_rep) {
                return Err(Error::InvalidParameter("counts exceed n_rep".into()));
            }
        }
        Ok(Self {
            phases,
            p_click,
            counts,
            n_rep,
        })
    }

    pub fn phases(&self) -> &[f64] {
        &self.phases
    }
    pub fn p_click(&self) -> &[f64] {
        &self.p_click
    }
    pub fn counts(&self) -> Option<&[u64]> {
        self.counts.as_deref()
    }
    pub fn n_rep(&self) -> u64 {
        self.n_rep
    }
}

/// Fitted sinusoid parameters of one fringe.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FringeFit {
    pub amplitude: f64,
    pub phase_offset: f64,
    pub amp_sigma: f64,
    pub offset: f64,
}

/// Fringe amplitude with the converter off: (1/2) exp(-Gamma_2R tau).
pub fn amp_off(qubit: &QubitParams, timing: &PulseTiming) -> f64 {
    0.5 * (-qubit.gamma_2r * timing.tau()).exp()
}

/// Amplitude ratio A_off / A_on = exp((Gamma_a_mean - Gamma_2R) tau_p).
///
/// The Gamma_2R tau_p offset reflects the bidirectional converter: while the
/// pump is on, the residual photons responsible for the inherent decoherence
/// are routed away from the cavity.
pub fn amp_ratio(gamma_a_mean: f64, qubit: &QubitParams, timing: &PulseTiming) -> f64 {
    ((gamma_a_mean - qubit.gamma_2r) * timing.tau_p()).exp()
}

/// Default phase grid: 21 points covering two full periods.
pub fn default_phase_grid() -> Vec<f64> {
    let n = 21;
    (0..n)
        .map(|i| 2.0 * std::f64::consts::TAU * i as f64 / n as f64)
        .collect()
}

/// Noise-free fringe probabilities p(phi) = 1/2 - A0 A cos(phi - phi0).
///
/// The initialization and readout errors enter only through the contrast
/// factor A0, which cancels in on/off amplitude ratios.
pub fn model_fringe(
    amplitude: f64,
    phase_offset: f64,
    readout: &ReadoutModel,
    phases: &[f64],
    n_rep: u64,
) -> Result<RamseyFringe> {
    if !(0.0..=0.5).contains(&amplitude) {
        return Err(Error::InvalidParameter(format!(
            "fringe amplitude must lie in [0, 0.5], got {amplitude}"
        )));
    }
    let a0 = readout.a0();
    let p: Vec<f64> = phases
        .iter()
        .map(|&phi| 0.5 - a0 * amplitude * (phi - phase_offset).cos())
        .collect();
    RamseyFringe::new(phases.to_vec(), p, None, n_rep)
}

/// Synthesize a fringe with binomial shot noise: `n_rep` single shots per
/// phase point on the default grid. Deterministic for a fixed seed.
pub fn synth_fringe(
    amplitude: f64,
    phase_offset: f64,
    readout: &ReadoutModel,
    timing: &PulseTiming,
    seed: u64,
) -> Result<RamseyFringe> {
    let phases = default_phase_grid();
    let ideal = model_fringe(amplitude, phase_offset, readout, &phases, timing.n_rep())?;
    let n = timing.n_rep();
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut counts = Vec::with_capacity(phases.len());
    let mut p_hat = Vec::with_capacity(phases.len());
    for &p in ideal.p_click() {
        let k = Binomial::new(n, p.clamp(0.0, 1.0))
            .map_err(|e| Error::InvalidParameter(format!("binomial: {e}")))?
            .sample(&mut rng);
        counts.push(k);
        p_hat.push(k as f64 / n as f64);
    }
    RamseyFringe::new(phases, p_hat, Some(counts), n)
}

/// Least-squares fit of p(phi) = c0 - A cos(phi - phi0).
///
/// Linearized as p = c0 + a cos(phi) + b sin(phi). With counts present the
/// fit is weighted by the per-point binomial variance (with add-one
/// smoothing so empty cells keep finite weight); without counts it is
/// unweighted with residual-based errors. `amp_sigma` comes from the
/// linearized covariance of (a, b).
pub fn fit_fringe(fringe: &RamseyFringe) -> Result<FringeFit> {
    let phases = fringe.phases();
    let p = fringe.p_click();
    if phases.len() < 8 {
        return Err(Error::Fit(format!(
            "need at least 8 phase points, got {}",
            phases.len()
        )));
    }
    let span = phases.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
        - phases.iter().cloned().fold(f64::INFINITY, f64::min);
    if span < std::f64::consts::TAU * (1.0 - 1e-9) {
        return Err(Error::Fit(format!(
            "phase grid spans {span:.3} rad; need at least 2 pi"
        )));
    }

    let weights: Vec<f64> = match fringe.counts() {
        Some(counts) => counts
            .iter()
            .map(|&k| {
                let n = fringe.n_rep() as f64;
                let ps = (k as f64 + 1.0) / (n + 2.0);
                n / (ps * (1.0 - ps))
            })
            .collect(),
        None => vec![1.0; phases.len()],
    };

    // normal equations for [c0, a, b]
    let mut m = [[0.0f64; 3]; 3];
    let mut rhs = [0.0f64; 3];
    for ((&phi, &y), &w) in phases.iter().zip(p).zip(&weights) {
        let row = [1.0, phi.cos(), phi.sin()];
        for i in 0..3 {
            for j in 0..3 {
                m[i][j] += w * row[i] * row[j];
            }
            rhs[i] += w * row[i] * y;
        }
    }
    let cov = invert_3x3(&m).ok_or_else(|| Error::Fit("degenerate phase design".into()))?;
    let mut beta = [0.0f64; 3];
    for (i, b) in beta.iter_mut().enumerate() {
        for j in 0..3 {
            *b += cov[i][j] * rhs[j];
        }
    }
    let (c0, a, b) = (beta[0], beta[1], beta[2]);

    // residual variance scaling for the unweighted case
    let scale = if fringe.counts().is_some() {
        1.0
    } else {
        let dof = (phases.len() - 3).max(1) as f64;
        let ss: f64 = phases
            .iter()
            .zip(p)
            .map(|(&phi, &y)| {
                let fit = c0 + a * phi.cos() + b * phi.sin();
                (y - fit) * (y - fit)
            })
            .sum();
        ss / dof
    };

    let amplitude = (a * a + b * b).sqrt();
    let phase_offset = (-b).atan2(-a);
    let amp_sigma = if amplitude > 1e-300 {
        let ga = a / amplitude;
        let gb = b / amplitude;
        (scale * (ga * ga * cov[1][1] + gb * gb * cov[2][2] + 2.0 * ga * gb * cov[1][2]))
            .max(0.0)
            .sqrt()
    } else {
        (scale * 0.5 * (cov[1][1] + cov[2][2])).max(0.0).sqrt()
    };
    Ok(FringeFit {
        amplitude,
        phase_offset,
        amp_sigma,
        offset: c0,
    })
}

fn invert_3x3(m: &[[f64; 3]; 3]) -> Option<[[f64; 3]; 3]> {
    let det = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
    if det.abs() < 1e-300 {
        return None;
    }
    let inv_det = 1.0 / det;
    let mut out = [[0.0f64; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            let (a, b, c, d) = (
                m[(j + 1) % 3][(i + 1) % 3],
                m[(j + 1) % 3][(i + 2) % 3],
                m[(j + 2) % 3][(i + 1) % 3],
                m[(j + 2) % 3][(i + 2) % 3],
            );
            out[i][j] = (a * d - b * c) * inv_det;
        }
    }
    Some(out)
}

/// Extract the effective readout population from a fitted on/off fringe pair:
///
/// Gamma_a = ln(A_off/A_on)/tau_p + Gamma_2R, then inverted through the
/// white-noise dephasing formula. The returned standard error propagates the
/// two amplitude errors and the supplied Gamma_2R fluctuation to first order.
pub fn estimate_n_r_eff(
    fit_on: &FringeFit,
    fit_off: &FringeFit,
    qubit: &QubitParams,
    timing: &PulseTiming,
    params: &ModeParams,
) -> Result<(f64, f64)> {
    if fit_on.amplitude <= 0.0 {
        return Err(Error::Estimation(
            "switch-on fringe amplitude is not positive".into(),
        ));
    }
    if fit_off.amplitude <= 0.0 {
        return Err(Error::Estimation(
            "switch-off fringe amplitude is not positive".into(),
        ));
    }
    let tau_p = timing.tau_p();
    let gamma_a = (fit_off.amplitude / fit_on.amplitude).ln() / tau_p + qubit.gamma_2r;
    if gamma_a < 0.0 {
        return Err(Error::Estimation(format!(
            "extracted rate {gamma_a:e} 1/s is negative; fringes are inconsistent"
        )));
    }
    let n = invert_gamma_th(params, gamma_a)?;
    let var_gamma = (fit_on.amp_sigma / fit_on.amplitude).powi(2) / (tau_p * tau_p)
        + (fit_off.amp_sigma / fit_off.amplitude).powi(2) / (tau_p * tau_p)
        + qubit.delta_gamma_2r * qubit.delta_gamma_2r;
    let slope = gamma_th_slope(params, n);
    let sigma = var_gamma.sqrt() / slope.max(1e-300);
    Ok((n, sigma))
}
