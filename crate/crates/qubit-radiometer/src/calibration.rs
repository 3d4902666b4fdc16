//! Three-step calibration protocol: detector response from added-noise
//! sweeps (step A), link transmissions from internal-bath sweeps (step B),
//! external and loss bath populations from the same sweep's intercepts
//! (step C), plus system-noise assembly.
//!
//! Uncertainty bookkeeping: every extracted quantity is a smooth function of
//! the per-detuning line-fit parameters, so standard errors come from a
//! first-order delta method with a numerically evaluated Jacobian over the
//! full fit vector. Shared references (the far-detuned slope normalization,
//! the common response estimates, the common t_loss) are therefore
//! correlated correctly without hand-maintained covariance formulas. The
//! point selection and combination weights are frozen at the unperturbed
//! estimate so the pipeline stays differentiable.

use std::fmt;

use crate::error::{Error, Result};
use crate::quantities::{BathPopulations, ModeParams, PulseTiming, QubitParams};

/// Which bath population a calibration sweep varied.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ControlVariable {
    NAdd,
    NVts,
}

impl ControlVariable {
    pub fn as_str(&self) -> &'static str {
        match self {
            ControlVariable::NAdd => "n_add",
            ControlVariable::NVts => "n_vts",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "n_add" => Ok(ControlVariable::NAdd),
            "n_vts" => Ok(ControlVariable::NVts),
            other => Err(Error::Config(format!(
                "unknown control_name `{other}` (expected n_add or n_vts)"
            ))),
        }
    }
}

impl fmt::Display for ControlVariable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One calibration measurement: effective readout population at a detuning
/// and a swept bath setting. `sigma` is the per-point standard error; when
/// absent the affected line is fitted unweighted.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRecord {
    pub delta_a: f64,
    pub control: ControlVariable,
    pub control_value: f64,
    pub n_r_eff: f64,
    pub sigma: Option<f64>,
}

/// A value with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Measurement {
    pub value: f64,
    pub sigma: f64,
}

impl Measurement {
    pub fn new(value: f64, sigma: f64) -> Self {
        Self { value, sigma }
    }

    /// |value - truth| <= k sigma
    pub fn covers(&self, truth: f64, k: f64) -> bool {
        (self.value - truth).abs() <= k * self.sigma
    }
}

/// Straight-line fit y = intercept + slope x with the parameter covariance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitLine {
    pub slope: f64,
    pub intercept: f64,
    pub slope_sigma: f64,
    pub intercept_sigma: f64,
    /// Covariance of (slope, intercept).
    pub covariance: f64,
}

/// Weighted least squares through the closed-form normal equations;
/// `points` are (x, y, sigma) with sigma > 0 taken as the true per-point
/// standard deviation.
pub fn fit_line_weighted(points: &[(f64, f64, f64)]) -> Result<FitLine> {
    if points.len() < 3 {
        return Err(Error::Fit(format!(
            "need at least 3 points for a line fit, got {}",
            points.len()
        )));
    }
    if points.iter().any(|(_, _, s)| !(*s > 0.0)) {
        return Err(Error::Fit("weighted fit requires sigma > 0".into()));
    }
    let (mut s, mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for &(x, y, sig) in points {
        let w = 1.0 / (sig * sig);
        s += w;
        sx += w * x;
        sy += w * y;
        sxx += w * x * x;
        sxy += w * x * y;
    }
    let det = s * sxx - sx * sx;
    if det <= 0.0 || det < 1e-12 * s * sxx {
        return Err(Error::Fit(
            "degenerate design: x values are not distinct".into(),
        ));
    }
    Ok(FitLine {
        slope: (s * sxy - sx * sy) / det,
        intercept: (sxx * sy - sx * sxy) / det,
        slope_sigma: (s / det).sqrt(),
        intercept_sigma: (sxx / det).sqrt(),
        covariance: -sx / det,
    })
}

/// Unweighted least squares with residual-based parameter errors; the
/// fallback when per-point sigmas are not supplied.
pub fn fit_line_unweighted(points: &[(f64, f64)]) -> Result<FitLine> {
    let unit: Vec<(f64, f64, f64)> = points.iter().map(|&(x, y)| (x, y, 1.0)).collect();
    let base = fit_line_weighted(&unit)?;
    let dof = (points.len() - 2).max(1) as f64;
    let ssr: f64 = points
        .iter()
        .map(|&(x, y)| {
            let r = y - base.intercept - base.slope * x;
            r * r
        })
        .sum();
    let scale = (ssr / dof).sqrt();
    Ok(FitLine {
        slope_sigma: base.slope_sigma * scale,
        intercept_sigma: base.intercept_sigma * scale,
        covariance: base.covariance * scale * scale,
        ..base
    })
}

/// Detector-response estimate at one detuning from step A.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EtaPoint {
    pub delta_a: f64,
    pub eta: Measurement,
    /// Far-detuned normalization point (response consistent with zero).
    pub is_reference: bool,
}

/// Step A output: response estimates plus the raw slopes they came from
/// (kept for joint error propagation in the later steps).
#[derive(Debug, Clone, PartialEq)]
pub struct EtaSpectrum {
    pub points: Vec<EtaPoint>,
    slopes: Vec<Measurement>,
    ref_indices: Vec<usize>,
}

impl EtaSpectrum {
    /// Inverse-variance mean of the far-detuned slopes.
    pub fn reference_slope(&self) -> Measurement {
        ivar_mean(
            &self
                .ref_indices
                .iter()
                .map(|&i| self.slopes[i])
                .collect::<Vec<_>>(),
        )
    }
}

/// Step B output: link transmissions plus the per-detuning lines they came
/// from (whose intercepts feed step C).
#[derive(Debug, Clone, PartialEq)]
pub struct LossCalibration {
    pub t_loss: Measurement,
    pub t_leak: Measurement,
    pub lines: Vec<(f64, FitLine)>,
}

/// Step C output.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BathCalibration {
    pub n_ext: Measurement,
    pub n_loss: Measurement,
}

/// Full-pipeline result with the joint covariance of
/// (t_loss, t_leak, n_ext, n_loss).
#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationFit {
    pub t_loss: Measurement,
    pub t_leak: Measurement,
    pub n_ext: Measurement,
    pub n_loss: Measurement,
    pub eta: Vec<EtaPoint>,
    pub covariance: [[f64; 4]; 4],
    /// True when every input record carried a sigma.
    pub weighted: bool,
}

/// System-noise decomposition referred to the antenna input.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemNoise {
    pub n_para: f64,
    pub n_shot: f64,
    pub n_sys: f64,
}

/// Parasitic white noise plus qubit-decoherence shot noise:
///
/// n_shot = ((chi^2 + kappa_r^2) kappa_r / (chi^2 kappa_r_c kappa_a t_loss))
///          * (Gamma_2R tau_w - ln A0) / tau_p
pub fn assemble_system_noise(
    qubit: &QubitParams,
    params: &ModeParams,
    baths: &BathPopulations,
    timing: &PulseTiming,
    a0: f64,
) -> Result<SystemNoise> {
    if !(a0 > 0.0 && a0 <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "initial contrast must lie in (0, 1], got {a0}"
        )));
    }
    let chi = params.chi();
    if chi == 0.0 {
        return Err(Error::Domain(
            "chi = 0 leaves the shot noise undefined".into(),
        ));
    }
    let kr = params.kappa_r();
    let n_para = baths.n_para();
    let shot_prefactor = (chi * chi + kr * kr) * kr
        / (chi * chi * params.kappa_r_c() * params.kappa_a() * baths.t_loss());
    let n_shot = shot_prefactor * (qubit.gamma_2r * timing.tau_w() - a0.ln()) / timing.tau_p();
    Ok(SystemNoise {
        n_para,
        n_shot,
        n_sys: n_para + n_shot,
    })
}

fn ivar_mean(ms: &[Measurement]) -> Measurement {
    let mut sw = 0.0;
    let mut swv = 0.0;
    for m in ms {
        let w = 1.0 / (m.sigma * m.sigma);
        sw += w;
        swv += w * m.value;
    }
    Measurement::new(swv / sw, (1.0 / sw).sqrt())
}

/// Group records by detuning (repeated detunings must agree to 1e-9
/// relative); each group becomes one line fit against the control value.
fn group_and_fit(
    records: &[SweepRecord],
    control: ControlVariable,
) -> Result<(Vec<f64>, Vec<FitLine>, bool)> {
    let mut filtered: Vec<&SweepRecord> =
        records.iter().filter(|r| r.control == control).collect();
    if filtered.is_empty() {
        return Err(Error::Protocol(format!("no records sweeping {control}")));
    }
    filtered.sort_by(|a, b| {
        a.delta_a
            .total_cmp(&b.delta_a)
            .then(a.control_value.total_cmp(&b.control_value))
    });
    let mut deltas = Vec::new();
    let mut lines = Vec::new();
    let mut all_weighted = true;
    let mut start = 0;
    while start < filtered.len() {
        let d = filtered[start].delta_a;
        let mut end = start;
        while end < filtered.len() && matches_delta(filtered[end].delta_a, d) {
            end += 1;
        }
        let group = &filtered[start..end];
        if group.len() < 3 {
            return Err(Error::Protocol(format!(
                "detuning {d:e} rad/s has only {} {control} settings; need at least 3",
                group.len()
            )));
        }
        let line = if group.iter().all(|r| r.sigma.is_some()) {
            let pts: Vec<(f64, f64, f64)> = group
                .iter()
                .map(|r| (r.control_value, r.n_r_eff, r.sigma.unwrap()))
                .collect();
            fit_line_weighted(&pts)?
        } else {
            all_weighted = false;
            let pts: Vec<(f64, f64)> =
                group.iter().map(|r| (r.control_value, r.n_r_eff)).collect();
            fit_line_unweighted(&pts)?
        };
        deltas.push(d);
        lines.push(line);
        start = end;
    }
    Ok((deltas, lines, all_weighted))
}

fn matches_delta(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1.0)
}

/// Calibration driver bound to the mode parameters. Detunings with
/// |delta_a| at or beyond the far threshold (default 4 |chi|) serve as the
/// white-noise reference where the detector response has died off.
#[derive(Debug, Clone, Copy)]
pub struct Calibrator {
    params: ModeParams,
    far_detuning_min: f64,
}

impl Calibrator {
    pub fn new(params: &ModeParams) -> Self {
        Self {
            params: *params,
            far_detuning_min: 4.0 * params.chi().abs(),
        }
    }

    pub fn with_far_threshold(mut self, min_abs_delta: f64) -> Self {
        self.far_detuning_min = min_abs_delta;
        self
    }

    pub fn far_threshold(&self) -> f64 {
        self.far_detuning_min
    }

    fn response_prefactor(&self) -> f64 {
        let kr = self.params.kappa_r();
        self.params.kappa_a() * self.params.kappa_r_c() / (kr * kr)
    }

    /// Step A: normalize the response-vs-added-noise slopes by the
    /// far-detuned slope; the deficit is the detector response,
    /// slope(delta)/slope(far) = 1 - eta(delta).
    pub fn step_a_eta(&self, records: &[SweepRecord]) -> Result<EtaSpectrum> {
        let (deltas, lines, _) = group_and_fit(records, ControlVariable::NAdd)?;
        let slopes: Vec<Measurement> = lines
            .iter()
            .map(|l| Measurement::new(l.slope, l.slope_sigma))
            .collect();
        let ref_indices: Vec<usize> = deltas
            .iter()
            .enumerate()
            .filter(|(_, d)| d.abs() >= self.far_detuning_min)
            .map(|(i, _)| i)
            .collect();
        if ref_indices.is_empty() {
            return Err(Error::Protocol(format!(
                "no far-detuned reference points (need |delta_a| >= {:e} rad/s)",
                self.far_detuning_min
            )));
        }
        let sref = ivar_mean(&ref_indices.iter().map(|&i| slopes[i]).collect::<Vec<_>>());
        let points = deltas
            .iter()
            .zip(&slopes)
            .map(|(&d, s)| {
                let eta = 1.0 - s.value / sref.value;
                let var = (s.sigma / sref.value).powi(2)
                    + (s.value * sref.sigma / (sref.value * sref.value)).powi(2);
                EtaPoint {
                    delta_a: d,
                    eta: Measurement::new(eta, var.sqrt()),
                    is_reference: d.abs() >= self.far_detuning_min,
                }
            })
            .collect();
        Ok(EtaSpectrum {
            points,
            slopes,
            ref_indices,
        })
    }

    /// Step B: fit response against the internal-bath population; the slope
    /// splits into a leakage floor (far detuned) and a response-weighted
    /// part whose normalization is t_loss.
    pub fn step_b_losses(
        &self,
        records: &[SweepRecord],
        eta: &EtaSpectrum,
    ) -> Result<LossCalibration> {
        let (deltas, lines, _) = group_and_fit(records, ControlVariable::NVts)?;
        let plan = self.plan(&deltas, eta, &lines)?;
        let mut theta0 = plan.theta_slopes_a(eta);
        theta0.extend(lines.iter().map(|l| l.slope));
        let mut sig: Vec<f64> = eta.slopes.iter().map(|s| s.sigma).collect();
        sig.extend(lines.iter().map(|l| l.slope_sigma));
        let na = eta.slopes.len();
        let nb = lines.len();
        let eval = |th: &[f64]| {
            let etas = plan.etas(&th[..na]);
            let (t_loss, t_leak) = plan.losses_from(&etas, &th[na..na + nb]);
            vec![t_loss, t_leak]
        };
        let (vals, cov) = delta_method(&theta0, &sig, &[], eval, 2)?;
        Ok(LossCalibration {
            t_loss: Measurement::new(vals[0], cov[0][0].max(0.0).sqrt()),
            t_leak: Measurement::new(vals[1], cov[1][1].max(0.0).sqrt()),
            lines: deltas.into_iter().zip(lines).collect(),
        })
    }

    /// Step C: the intercepts of the step-B lines split the same way; the
    /// response-weighted part carries n_ext, the floor carries n_loss.
    ///
    /// At t_loss = 1 the loss bath drops out of the model; n_loss is
    /// returned with infinite sigma.
    pub fn step_c_baths(
        &self,
        losses: &LossCalibration,
        eta: &EtaSpectrum,
        t_loss: Measurement,
    ) -> Result<BathCalibration> {
        let deltas: Vec<f64> = losses.lines.iter().map(|(d, _)| *d).collect();
        let lines: Vec<FitLine> = losses.lines.iter().map(|(_, l)| *l).collect();
        let plan = self.plan(&deltas, eta, &lines)?;
        let mut theta0 = plan.theta_slopes_a(eta);
        theta0.extend(lines.iter().map(|l| l.intercept));
        theta0.push(t_loss.value);
        let mut sig: Vec<f64> = eta.slopes.iter().map(|s| s.sigma).collect();
        sig.extend(lines.iter().map(|l| l.intercept_sigma));
        sig.push(t_loss.sigma);
        let na = eta.slopes.len();
        let nb = lines.len();
        let lossless = t_loss.value >= 1.0 - 1e-12;
        let eval = |th: &[f64]| {
            let etas = plan.etas(&th[..na]);
            let (n_ext, n_loss) = plan.baths(&etas, &th[na..na + nb], th[na + nb]);
            vec![n_ext, n_loss]
        };
        let (vals, cov) = delta_method(&theta0, &sig, &[], eval, 2)?;
        Ok(BathCalibration {
            n_ext: Measurement::new(vals[0], cov[0][0].max(0.0).sqrt()),
            n_loss: if lossless {
                Measurement::new(0.0, f64::INFINITY)
            } else {
                Measurement::new(vals[1], cov[1][1].max(0.0).sqrt())
            },
        })
    }

    /// Steps A–C as one jointly propagated pipeline over every line fit.
    pub fn run(&self, records: &[SweepRecord]) -> Result<CalibrationFit> {
        let (_, _, weighted_a) = group_and_fit(records, ControlVariable::NAdd)?;
        let eta = self.step_a_eta(records)?;
        let (deltas_b, lines_b, weighted_b) = group_and_fit(records, ControlVariable::NVts)?;
        let plan = self.plan(&deltas_b, &eta, &lines_b)?;

        // theta = [slopes_a..., (lambda_i, mu_i)...]
        let mut theta0 = plan.theta_slopes_a(&eta);
        let mut sig: Vec<f64> = eta.slopes.iter().map(|s| s.sigma).collect();
        let mut cov_pairs = Vec::new();
        let na = theta0.len();
        for (i, l) in lines_b.iter().enumerate() {
            theta0.push(l.slope);
            theta0.push(l.intercept);
            sig.push(l.slope_sigma);
            sig.push(l.intercept_sigma);
            let base = na + 2 * i;
            cov_pairs.push((base, base + 1, l.covariance));
        }
        let nb = lines_b.len();
        let eval = |th: &[f64]| {
            let etas = plan.etas(&th[..na]);
            let lambdas: Vec<f64> = (0..nb).map(|i| th[na + 2 * i]).collect();
            let mus: Vec<f64> = (0..nb).map(|i| th[na + 2 * i + 1]).collect();
            let (t_loss, t_leak) = plan.losses_from(&etas, &lambdas);
            let (n_ext, n_loss) = plan.baths(&etas, &mus, t_loss);
            vec![t_loss, t_leak, n_ext, n_loss]
        };
        let (vals, cov) = delta_method(&theta0, &sig, &cov_pairs, eval, 4)?;
        let mut covariance = [[0.0; 4]; 4];
        for (i, row) in covariance.iter_mut().enumerate() {
            for (j, c) in row.iter_mut().enumerate() {
                *c = cov[i][j];
            }
        }
        let lossless = vals[0] >= 1.0 - 1e-12;
        Ok(CalibrationFit {
            t_loss: Measurement::new(vals[0], covariance[0][0].max(0.0).sqrt()),
            t_leak: Measurement::new(vals[1], covariance[1][1].max(0.0).sqrt()),
            n_ext: Measurement::new(vals[2], covariance[2][2].max(0.0).sqrt()),
            n_loss: if lossless {
                Measurement::new(0.0, f64::INFINITY)
            } else {
                Measurement::new(vals[3], covariance[3][3].max(0.0).sqrt())
            },
            eta: eta.points.clone(),
            covariance,
            weighted: weighted_a && weighted_b,
        })
    }

    fn plan(
        &self,
        deltas_b: &[f64],
        eta: &EtaSpectrum,
        lines_b: &[FitLine],
    ) -> Result<PipelinePlan> {
        // match each internal-bath sweep line to a response estimate
        let mut eta_for_b = Vec::with_capacity(deltas_b.len());
        for &d in deltas_b {
            match eta.points.iter().position(|p| matches_delta(p.delta_a, d)) {
                Some(i) => eta_for_b.push(i),
                None => {
                    return Err(Error::Protocol(format!(
                        "no response estimate at detuning {d:e} rad/s"
                    )))
                }
            }
        }
        let ref_b: Vec<usize> = deltas_b
            .iter()
            .enumerate()
            .filter(|(_, d)| d.abs() >= self.far_detuning_min)
            .map(|(i, _)| i)
            .collect();
        if ref_b.is_empty() {
            return Err(Error::Protocol(
                "internal-bath sweep has no far-detuned reference points".into(),
            ));
        }
        // usable extraction points: clearly resolved response
        let usable: Vec<usize> = (0..deltas_b.len())
            .filter(|&i| {
                let p = &eta.points[eta_for_b[i]];
                !p.is_reference && p.eta.value >= (3.0 * p.eta.sigma).max(0.01)
            })
            .collect();
        if usable.is_empty() {
            return Err(Error::Protocol(
                "detector response consistent with zero everywhere; t_loss unidentifiable".into(),
            ));
        }

        let k = self.response_prefactor();
        let w_ref_lambda: Vec<f64> = lines_b
            .iter()
            .map(|l| 1.0 / (l.slope_sigma * l.slope_sigma))
            .collect();
        let w_ref_mu: Vec<f64> = lines_b
            .iter()
            .map(|l| 1.0 / (l.intercept_sigma * l.intercept_sigma))
            .collect();

        // frozen inverse-variance weights for the per-point combinations;
        // without them a weak-response point (small eta) would dominate the
        // average through its 1/eta amplification
        let lam_ref0: f64 = {
            let sw: f64 = ref_b.iter().map(|&i| w_ref_lambda[i]).sum();
            ref_b.iter().map(|&i| w_ref_lambda[i] * lines_b[i].slope).sum::<f64>() / sw
        };
        let var_lam_ref: f64 = 1.0 / ref_b.iter().map(|&i| w_ref_lambda[i]).sum::<f64>();
        let var_mu_ref: f64 = 1.0 / ref_b.iter().map(|&i| w_ref_mu[i]).sum::<f64>();

        let eta_val = |i: usize| eta.points[eta_for_b[i]].eta;
        let eta_max = usable.iter().map(|&i| eta_val(i).value).fold(0.0, f64::max);
        let strong: Vec<usize> = usable
            .iter()
            .copied()
            .filter(|&i| eta_val(i).value >= 0.5 * eta_max)
            .collect();
        let t0 = (strong
            .iter()
            .map(|&i| (lines_b[i].slope - lam_ref0) / (k * eta_val(i).value))
            .sum::<f64>()
            / strong.len() as f64)
            .abs()
            .clamp(0.01, 1.0);

        let mut w_t = Vec::with_capacity(usable.len());
        let mut w_x = Vec::with_capacity(usable.len());
        for &i in &usable {
            let e = eta_val(i);
            let denom = k * e.value;
            let var_t = (lines_b[i].slope_sigma.powi(2) + var_lam_ref) / (denom * denom)
                + (t0 * e.sigma / e.value).powi(2);
            w_t.push(1.0 / var_t);
            let var_x =
                (lines_b[i].intercept_sigma.powi(2) + var_mu_ref) / (denom * denom * t0 * t0);
            w_x.push(1.0 / var_x);
        }

        Ok(PipelinePlan {
            k,
            ref_a: eta.ref_indices.clone(),
            ref_b,
            usable,
            eta_for_b,
            w_slopes_a: eta
                .slopes
                .iter()
                .map(|s| 1.0 / (s.sigma * s.sigma))
                .collect(),
            w_ref_lambda,
            w_ref_mu,
            w_t,
            w_x,
        })
    }
}

/// Frozen structure of the extraction pipeline: which points are references,
/// which carry signal, and the combination weights. Evaluating it at
/// perturbed fit parameters is smooth, which the Jacobian relies on.
#[derive(Debug, Clone)]
struct PipelinePlan {
    k: f64,
    ref_a: Vec<usize>,
    ref_b: Vec<usize>,
    usable: Vec<usize>,
    eta_for_b: Vec<usize>,
    w_slopes_a: Vec<f64>,
    w_ref_lambda: Vec<f64>,
    w_ref_mu: Vec<f64>,
    w_t: Vec<f64>,
    w_x: Vec<f64>,
}

impl PipelinePlan {
    fn theta_slopes_a(&self, eta: &EtaSpectrum) -> Vec<f64> {
        eta.slopes.iter().map(|s| s.value).collect()
    }

    fn ref_mean(&self, values: &[f64], weights: &[f64], ids: &[usize]) -> f64 {
        let mut sw = 0.0;
        let mut swv = 0.0;
        for &i in ids {
            sw += weights[i];
            swv += weights[i] * values[i];
        }
        swv / sw
    }

    /// Response estimates from raw step-A slopes.
    fn etas(&self, slopes_a: &[f64]) -> Vec<f64> {
        let sref = self.ref_mean(slopes_a, &self.w_slopes_a, &self.ref_a);
        slopes_a.iter().map(|s| 1.0 - s / sref).collect()
    }

    fn losses_from(&self, etas: &[f64], lambdas: &[f64]) -> (f64, f64) {
        let lam_ref = self.ref_mean(lambdas, &self.w_ref_lambda, &self.ref_b);
        let mut sum = 0.0;
        let mut sw = 0.0;
        for (&i, &w) in self.usable.iter().zip(&self.w_t) {
            let eta_i = etas[self.eta_for_b[i]];
            sum += w * (lambdas[i] - lam_ref) / (self.k * eta_i);
            sw += w;
        }
        let t_loss = sum / sw;
        let t_leak = lam_ref / (self.k * t_loss);
        (t_loss, t_leak)
    }

    fn baths(&self, etas: &[f64], mus: &[f64], t_loss: f64) -> (f64, f64) {
        let mu_ref = self.ref_mean(mus, &self.w_ref_mu, &self.ref_b);
        let mut sum = 0.0;
        let mut sw = 0.0;
        for (&i, &w) in self.usable.iter().zip(&self.w_x) {
            let eta_i = etas[self.eta_for_b[i]];
            sum += w * (mu_ref - mus[i]) / (self.k * t_loss * eta_i);
            sw += w;
        }
        let n_ext = sum / sw;
        let n_loss = if (1.0 - t_loss).abs() > 1e-12 {
            (mu_ref / self.k - n_ext * t_loss) / (1.0 - t_loss)
        } else {
            0.0
        };
        (n_ext, n_loss)
    }
}

/// First-order error propagation with a numerically evaluated Jacobian.
/// `sigmas` are per-component standard deviations (zero skips the
/// component); `cov_pairs` adds symmetric off-diagonal covariance entries.
fn delta_method<F>(
    theta0: &[f64],
    sigmas: &[f64],
    cov_pairs: &[(usize, usize, f64)],
    f: F,
    n_out: usize,
) -> Result<(Vec<f64>, Vec<Vec<f64>>)>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    let y0 = f(theta0);
    if y0.len() != n_out {
        return Err(Error::Fit("pipeline output arity mismatch".into()));
    }
    let mut jac = vec![vec![0.0; theta0.len()]; n_out];
    let mut th = theta0.to_vec();
    for i in 0..theta0.len() {
        let h = 0.1 * sigmas[i];
        if h == 0.0 {
            continue;
        }
        th[i] = theta0[i] + h;
        let yp = f(&th);
        th[i] = theta0[i] - h;
        let ym = f(&th);
        th[i] = theta0[i];
        for k in 0..n_out {
            jac[k][i] = (yp[k] - ym[k]) / (2.0 * h);
        }
    }
    let mut cov = vec![vec![0.0; n_out]; n_out];
    for a in 0..n_out {
        for b in 0..n_out {
            let mut acc = 0.0;
            for i in 0..theta0.len() {
                acc += jac[a][i] * jac[b][i] * sigmas[i] * sigmas[i];
            }
            for &(i, j, v) in cov_pairs {
                acc += (jac[a][i] * jac[b][j] + jac[a][j] * jac[b][i]) * v;
            }
            cov[a][b] = acc;
        }
    }
    Ok((y0, cov))
}
