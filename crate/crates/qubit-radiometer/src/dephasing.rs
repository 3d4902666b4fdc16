//! Closed-form small-population theory of qubit dephasing induced by pulsed
//! Lorentzian thermal noise: the white-noise dephasing rate and its inverse,
//! the pulsed-filter correlators, the pulse-averaged dephasing rate, the
//! detector response function, and the full radiometer response.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::numerics::{quadrature::adaptive_gk15, roots::brent};
use crate::quantities::{BathPopulations, ModeParams, PulseTiming};

/// Probe population used to evaluate the detector response in its linear
/// regime. The pulse-averaged rate is exactly proportional to the population
/// in this theory, so any sufficiently small value gives the same response.
const ETA_PROBE: f64 = 1e-4;

/// Below this ratio of rate to cavity linewidth the closed linear inverse of
/// the white-noise formula is used directly instead of root bracketing.
const LINEAR_INVERT_THRESHOLD: f64 = 1e-8;

/// Rates entering the pulsed-noise correlators, captured from [`ModeParams`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrelatorKernel {
    kappa_a: f64,
    kappa_r: f64,
    kappa_r_c: f64,
    chi: f64,
    gamma: f64,
}

impl CorrelatorKernel {
    pub fn new(params: &ModeParams) -> Self {
        Self {
            kappa_a: params.kappa_a(),
            kappa_r: params.kappa_r(),
            kappa_r_c: params.kappa_r_c(),
            chi: params.chi(),
            gamma: params.gamma(),
        }
    }

    pub fn kappa_a(&self) -> f64 {
        self.kappa_a
    }
    pub fn kappa_r(&self) -> f64 {
        self.kappa_r
    }
    pub fn chi(&self) -> f64 {
        self.chi
    }
}

/// Sampled effective readout population versus antenna detuning, with
/// per-point standard errors and the timing it was taken at.
#[derive(Debug, Clone, PartialEq)]
pub struct DephasingSpectrum {
    detunings: Vec<f64>,
    n_r_eff: Vec<f64>,
    sigma: Vec<f64>,
    timing: PulseTiming,
}

impl DephasingSpectrum {
    pub fn new(
        detunings: Vec<f64>,
        n_r_eff: Vec<f64>,
        sigma: Vec<f64>,
        timing: PulseTiming,
    ) -> Result<Self> {
        if detunings.len() != n_r_eff.len() || detunings.len() != sigma.len() {
            return Err(Error::InvalidParameter(
                "spectrum detunings, values and sigmas must have equal length".into(),
            ));
        }
        if n_r_eff.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidParameter("n_r_eff must be >= 0".into()));
        }
        if sigma.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidParameter("sigma must be >= 0".into()));
        }
        Ok(Self {
            detunings,
            n_r_eff,
            sigma,
            timing,
        })
    }

    pub fn detunings(&self) -> &[f64] {
        &self.detunings
    }
    pub fn n_r_eff(&self) -> &[f64] {
        &self.n_r_eff
    }
    pub fn sigma(&self) -> &[f64] {
        &self.sigma
    }
    pub fn timing(&self) -> &PulseTiming {
        &self.timing
    }
}

/// White-noise photon-induced dephasing rate for a cavity population `n_r_th`:
///
/// (kappa_r / 2) [ Re sqrt((1 + i chi/kappa_r)^2 + 4 i chi n / kappa_r) - 1 ]
pub fn gamma_th(params: &ModeParams, n_r_th: f64) -> Result<f64> {
    if !(n_r_th >= 0.0) || !n_r_th.is_finite() {
        return Err(Error::Domain(format!(
            "thermal population must be >= 0, got {n_r_th}"
        )));
    }
    if n_r_th == 0.0 {
        // the square root collapses to 1 + i chi/kappa_r exactly
        return Ok(0.0);
    }
    let kr = params.kappa_r();
    let ct = params.chi() / kr;
    let one_ict = Complex64::new(1.0, ct);
    let z = one_ict * one_ict + Complex64::new(0.0, 4.0 * ct * n_r_th);
    Ok(0.5 * kr * (z.sqrt().re - 1.0))
}

/// d gamma_th / d n, used for first-order error propagation.
pub fn gamma_th_slope(params: &ModeParams, n_r_th: f64) -> f64 {
    let kr = params.kappa_r();
    let ct = params.chi() / kr;
    let one_ict = Complex64::new(1.0, ct);
    let z = one_ict * one_ict + Complex64::new(0.0, 4.0 * ct * n_r_th);
    (Complex64::new(0.0, ct) / z.sqrt()).re * kr
}

/// Unique population `n >= 0` with `gamma_th(params, n) = gamma`.
///
/// The forward map is strictly increasing, so a geometrically grown bracket
/// plus Brent's method is safe; the closed linear inverse is used only in the
/// deep small-rate regime where bracketing would chase rounding noise.
pub fn invert_gamma_th(params: &ModeParams, gamma: f64) -> Result<f64> {
    if !(gamma >= 0.0) || !gamma.is_finite() {
        return Err(Error::Domain(format!("rate must be >= 0, got {gamma}")));
    }
    if gamma == 0.0 {
        return Ok(0.0);
    }
    let kr = params.kappa_r();
    let chi = params.chi();
    if chi == 0.0 {
        return Err(Error::Domain(
            "chi = 0: dephasing carries no population information".into(),
        ));
    }
    let linear = gamma * (chi * chi + kr * kr) / (chi * chi * kr);
    if gamma / kr < LINEAR_INVERT_THRESHOLD {
        return Ok(linear);
    }
    let mut hi = linear.max(1e-12);
    let mut tries = 0;
    while gamma_th(params, hi)? < gamma {
        hi *= 2.0;
        tries += 1;
        if tries > 200 {
            return Err(Error::Convergence(format!(
                "could not bracket inverse for gamma = {gamma:e}"
            )));
        }
    }
    let f = |n: f64| gamma_th(params, n).unwrap_or(f64::NAN) - gamma;
    brent(f, 0.0, hi, 1e-18, 1e-12, 200)
}

/// (e^z - 1)/z, stable near z = 0.
fn phi1(z: Complex64) -> Complex64 {
    if z.norm() < 1e-5 {
        Complex64::new(1.0, 0.0) + z * 0.5 + z * z / 6.0 + z * z * z / 24.0
    } else {
        (z.exp() - 1.0) / z
    }
}

/// Filtered-noise correlator N(t, kappa, delta) for the readout mode driven
/// by the pulsed Lorentzian bath, per unit `n_vts`.
///
/// `kappa` is the effective (possibly complex) decay rate of the correlator
/// pair and `delta` the detuning of the noise line from the relevant cavity
/// resonance. Evaluated through exponential phi-functions, which keeps the
/// expression regular at kappa = kappa_a where the textbook grouping of terms
/// divides by (kappa_a - kappa).
pub fn correlator_n(
    kernel: &CorrelatorKernel,
    t: f64,
    kappa: Complex64,
    delta: f64,
    n_vts: f64,
) -> Result<Complex64> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::Domain(format!("time must be >= 0, got {t}")));
    }
    let ka = kernel.kappa_a;
    let pref = n_vts * ka * kernel.kappa_r_c * kernel.gamma * (1.0 - kernel.gamma);
    let i_delta = Complex64::new(0.0, delta);
    let p = (kappa - ka) * 0.5 + i_delta;
    let q = kappa - p;
    let s = (kappa - ka) * 0.5 - i_delta;
    let r = kappa - s;
    let em = (-kappa * t).exp();
    let inv_q = 1.0 / q;
    let inv_r = 1.0 / r;
    let value = phi1(-kappa * t) * (inv_q + inv_r) - em * (phi1(p * t) * inv_q + phi1(s * t) * inv_r);
    Ok(value * (pref * t))
}

/// Occupation contrast <D†D>(t) = <b_g†b_g> + <b_e†b_e> - 2 Re <b_g†b_e>
/// driving the dephasing integrand, valid on the whole window [0, tau]:
/// closed-form correlators while the pump is on, exponential ring-down after.
pub fn occupation_contrast(
    kernel: &CorrelatorKernel,
    t: f64,
    timing: &PulseTiming,
    delta_a: f64,
    n_vts: f64,
) -> Result<f64> {
    let chi = kernel.chi;
    let kr = Complex64::new(kernel.kappa_r, 0.0);
    let t_on = t.min(timing.tau_p());
    let gg = correlator_n(kernel, t_on, kr, delta_a - 0.5 * chi, n_vts)?;
    let ee = correlator_n(kernel, t_on, kr, delta_a + 0.5 * chi, n_vts)?;
    let ge = correlator_n(kernel, t_on, kr - Complex64::new(0.0, chi), delta_a, n_vts)?;
    if t <= timing.tau_p() {
        return Ok(gg.re + ee.re - 2.0 * ge.re);
    }
    let dt = t - timing.tau_p();
    let ring_diag = (-kernel.kappa_r * dt).exp();
    let ring_cross = (-(kr - Complex64::new(0.0, chi)) * dt).exp();
    Ok((gg.re + ee.re) * ring_diag - 2.0 * (ge * ring_cross).re)
}

/// Pulse-averaged dephasing rate induced by the transmitted (internal-bath)
/// Lorentzian noise at detuning `delta_a`:
///
/// (kappa_r / 2 tau_p) * integral_0^tau <D†D>(t) dt.
///
/// The pump-on part is integrated by adaptive Gauss–Kronrod quadrature; the
/// ring-down tail on [tau_p, tau] integrates in closed form.
pub fn mean_dephasing_transmitted(
    params: &ModeParams,
    n_vts: f64,
    timing: &PulseTiming,
    delta_a: f64,
) -> Result<f64> {
    if !(n_vts >= 0.0) || !n_vts.is_finite() {
        return Err(Error::Domain(format!("n_vts must be >= 0, got {n_vts}")));
    }
    if n_vts == 0.0 {
        return Ok(0.0);
    }
    let kernel = CorrelatorKernel::new(params);
    let chi = kernel.chi;
    let kr = kernel.kappa_r;
    let tau_p = timing.tau_p();
    let tau_w = timing.tau_w();

    let integrand =
        |t: f64| occupation_contrast(&kernel, t, timing, delta_a, n_vts).unwrap_or(f64::NAN);
    // Absolute tolerance chosen so the final rate is resolved to ~1e-12 1/s.
    let abs_tol = 1e-12 * 2.0 * tau_p / kr;
    let on_pulse = adaptive_gk15(&integrand, 0.0, tau_p, abs_tol, 1e-11)?;

    let krc = Complex64::new(kr, 0.0);
    let gg = correlator_n(&kernel, tau_p, krc, delta_a - 0.5 * chi, n_vts)?;
    let ee = correlator_n(&kernel, tau_p, krc, delta_a + 0.5 * chi, n_vts)?;
    let ge = correlator_n(&kernel, tau_p, krc - Complex64::new(0.0, chi), delta_a, n_vts)?;
    let tail_diag = (gg.re + ee.re) * (-(-kr * tau_w).exp_m1()) / kr;
    let kc = krc - Complex64::new(0.0, chi);
    let tail_cross = (ge * (1.0 - (-kc * tau_w).exp()) / kc).re;
    let tail = tail_diag - 2.0 * tail_cross;

    Ok(0.5 * kr / tau_p * (on_pulse + tail))
}

/// Dimensionless detector response at detuning `delta_a`: the fraction of the
/// internal-bath Lorentzian noise sensed by the qubit, normalized so that a
/// white input gives 1. Evaluated in the linear (small-population) regime.
pub fn eta_a(params: &ModeParams, timing: &PulseTiming, delta_a: f64) -> Result<f64> {
    let rate = mean_dephasing_transmitted(params, ETA_PROBE, timing, delta_a)?;
    let n_eff = invert_gamma_th(params, rate.max(0.0))?;
    let kr = params.kappa_r();
    Ok(n_eff / ETA_PROBE * kr * kr / (params.kappa_r_c() * params.kappa_a()))
}

/// Detector response sampled over a detuning grid (parallel over points).
pub fn eta_table(params: &ModeParams, timing: &PulseTiming, grid: &[f64]) -> Result<Vec<f64>> {
    grid.par_iter()
        .map(|&d| eta_a(params, timing, d))
        .collect()
}

/// Full radiometer response: effective readout population produced by all
/// four baths at detuning `delta_a`,
///
/// (kappa_a kappa_r_c / kappa_r^2) { n_vts t_loss eta
///   + (n_ext + n_add) t_loss (1 - eta) + n_loss (1 - t_loss)
///   + n_vts t_leak t_loss }.
pub fn radiometer_response(
    params: &ModeParams,
    baths: &BathPopulations,
    timing: &PulseTiming,
    delta_a: f64,
) -> Result<f64> {
    let eta = eta_a(params, timing, delta_a)?;
    Ok(response_from_eta(params, baths, eta))
}

/// Forward-model dephasing spectrum over a detuning grid: the radiometer
/// response at every point, with zero statistical error (the model is
/// deterministic).
pub fn model_spectrum(
    params: &ModeParams,
    baths: &BathPopulations,
    timing: &PulseTiming,
    grid: &[f64],
) -> Result<DephasingSpectrum> {
    let etas = eta_table(params, timing, grid)?;
    let values = etas
        .iter()
        .map(|&e| response_from_eta(params, baths, e))
        .collect();
    DephasingSpectrum::new(grid.to_vec(), values, vec![0.0; grid.len()], *timing)
}

/// Radiometer response with a precomputed detector response value; spectrum
/// scans evaluate `eta` once per detuning and reuse it across bath settings.
pub fn response_from_eta(params: &ModeParams, baths: &BathPopulations, eta: f64) -> f64 {
    let kr = params.kappa_r();
    let k = params.kappa_a() * params.kappa_r_c() / (kr * kr);
    k * (baths.n_vts() * baths.t_loss() * eta
        + (baths.n_ext() + baths.n_add()) * baths.t_loss() * (1.0 - eta)
        + baths.n_loss() * (1.0 - baths.t_loss())
        + baths.n_vts() * baths.t_leak() * baths.t_loss())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    const TAU: f64 = std::f64::consts::TAU;

    fn table_params() -> ModeParams {
        ModeParams::new(
            10.5e9,
            7.6011e9,
            2.8935e9,
            TAU * 3.1e6,
            TAU * 0.77e6,
            TAU * 0.06e6,
            TAU * 0.28e6,
            TAU * 0.12e6,
            1.0,
        )
        .unwrap()
    }

    fn timing() -> PulseTiming {
        PulseTiming::new(2.08e-6, 1.08e-6, 10_000).unwrap()
    }

    #[test]
    fn gamma_th_vacuum_is_zero() {
        assert_eq!(gamma_th(&table_params(), 0.0).unwrap(), 0.0);
    }

    #[test]
    fn gamma_th_matches_inferred_residual_population() {
        // n = 7e-3 should give a rate near 3e4 1/s
        let g = gamma_th(&table_params(), 7e-3).unwrap();
        assert!((g - 3.0e4).abs() < 0.2 * 3.0e4, "gamma = {g}");
        assert_relative_eq!(g, 3.40198e4, max_relative = 1e-4);
    }

    #[test]
    fn gamma_th_linearizes_at_small_population() {
        let p = table_params();
        let (chi, kr) = (p.chi(), p.kappa_r());
        let lin = chi * chi * kr / (chi * chi + kr * kr);
        let n = 1e-6;
        let exact = gamma_th(&p, n).unwrap() / n;
        assert!((exact - lin).abs() / lin < 1e-3);
    }

    #[test]
    fn gamma_th_rejects_negative() {
        assert!(gamma_th(&table_params(), -1e-3).is_err());
    }

    // Algebraic closed-form inverse of the white-noise rate, used as an
    // independent oracle for the bracketing implementation.
    fn invert_closed_form(params: &ModeParams, gamma: f64) -> f64 {
        let kr = params.kappa_r();
        let ct = params.chi() / kr;
        let big_r = 1.0 + 2.0 * gamma / kr;
        (big_r * (big_r * big_r - 1.0 + ct * ct).sqrt() - ct) / (2.0 * ct)
    }

    #[test]
    fn invert_gamma_th_at_zero() {
        assert_eq!(invert_gamma_th(&table_params(), 0.0).unwrap(), 0.0);
    }

    #[test]
    fn invert_gamma_th_reproduces_reported_band() {
        let n = invert_gamma_th(&table_params(), 3.0e4).unwrap();
        assert!((6.0e-3..=7.7e-3).contains(&n), "n = {n}");
        assert_relative_eq!(n, 6.1719370495e-3, max_relative = 1e-9);
    }

    #[test]
    fn invert_matches_algebraic_inverse() {
        let p = table_params();
        for g in [1e2, 1e4, 3e4, 1e6, 1e7] {
            let brent = invert_gamma_th(&p, g).unwrap();
            let closed = invert_closed_form(&p, g);
            assert_relative_eq!(brent, closed, max_relative = 1e-10);
        }
        assert!(invert_gamma_th(&p, -1.0).is_err());
    }

    proptest! {
        #[test]
        fn invert_roundtrip(n in 1e-6f64..10.0) {
            let p = table_params();
            let g = gamma_th(&p, n).unwrap();
            let back = invert_gamma_th(&p, g).unwrap();
            prop_assert!((back - n).abs() <= 1e-8 * n, "n={n}, back={back}");
        }
    }

    #[test]
    fn gamma_th_monotone_and_concave() {
        let p = table_params();
        let ns: Vec<f64> = (0..200).map(|i| i as f64 * 0.05).collect();
        let gs: Vec<f64> = ns.iter().map(|&n| gamma_th(&p, n).unwrap()).collect();
        for w in gs.windows(2) {
            assert!(w[1] > w[0]);
        }
        for w in gs.windows(3) {
            assert!(w[2] - w[1] <= w[1] - w[0] + 1e-9);
        }
    }

    #[test]
    fn correlator_vanishes_at_t_zero() {
        let k = CorrelatorKernel::new(&table_params());
        let n = correlator_n(&k, 0.0, Complex64::new(k.kappa_r, 0.0), 1e6, 1.0).unwrap();
        assert_eq!(n, Complex64::new(0.0, 0.0));
    }

    #[test]
    fn correlator_cross_terms_are_conjugate() {
        let p = table_params();
        let k = CorrelatorKernel::new(&p);
        let chi = p.chi();
        for t in [0.1e-6, 0.7e-6, 2.4e-6] {
            for d in [-2.0e6, 0.0, 5.0e6] {
                let ge = correlator_n(&k, t, Complex64::new(k.kappa_r, -chi), d, 1.0).unwrap();
                let eg = correlator_n(&k, t, Complex64::new(k.kappa_r, chi), d, 1.0).unwrap();
                assert_relative_eq!(ge.re, eg.re, max_relative = 1e-12);
                assert_relative_eq!(ge.im, -eg.im, max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn correlator_diagonal_real_and_nonnegative() {
        let p = table_params();
        let k = CorrelatorKernel::new(&p);
        let kr = Complex64::new(k.kappa_r, 0.0);
        // scan a grid of (t, delta) pairs; the diagonal correlator is a mode
        // population and must stay essentially real and nonnegative
        for i in 0..25 {
            for j in 0..25 {
                let t = 3.0e-6 * (i as f64 + 0.3) / 25.0;
                let d = -4.0e7 + 8.0e7 * j as f64 / 24.0;
                let n = correlator_n(&k, t, kr, d, 1.0).unwrap();
                assert!(n.re >= -1e-14, "re = {} at t={t}, d={d}", n.re);
                assert!(n.im.abs() < 1e-14 * n.re.abs().max(1e-6));
            }
        }
    }

    // Independent oracle: steady-state population of a Lorentzian filter fed
    // by the antenna's Lorentzian output, by direct frequency integration.
    fn steady_state_filter_oracle(p: &ModeParams, delta: f64) -> f64 {
        let (ka, kr, krc, g) = (p.kappa_a(), p.kappa_r(), p.kappa_r_c(), p.gamma());
        let t_a = |w: f64| 4.0 * g * (1.0 - g) / (1.0 + 4.0 * w * w / (ka * ka));
        let f = |w: f64| t_a(w - delta) * krc / (w * w + kr * kr / 4.0) / TAU;
        // adaptive Simpson, test-local so it shares nothing with the module
        #[allow(clippy::too_many_arguments)]
        fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, fa: f64, fm: f64, fb: f64, tol: f64, depth: u32) -> f64 {
            let m = 0.5 * (a + b);
            let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
            let (flm, frm) = (f(lm), f(rm));
            let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
            let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
            let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
            if depth == 0 || (left + right - whole).abs() < 15.0 * tol {
                left + right + (left + right - whole) / 15.0
            } else {
                simpson(f, a, m, fa, flm, fm, 0.5 * tol, depth - 1)
                    + simpson(f, m, b, fm, frm, fb, 0.5 * tol, depth - 1)
            }
        }
        let span = 4000.0 * ka.max(kr);
        let (a, b) = (-span, span);
        let m = 0.5 * (a + b);
        simpson(&f, a, b, f(a), f(m), f(b), 1e-13, 48)
    }

    #[test]
    fn correlator_steady_state_matches_filter_integral() {
        let p = table_params();
        let k = CorrelatorKernel::new(&p);
        let kr = Complex64::new(k.kappa_r, 0.0);
        for delta in [0.0, 0.5 * p.chi(), -1.3 * p.chi()] {
            let nss = correlator_n(&k, 100e-6, kr, delta, 1.0).unwrap().re;
            let oracle = steady_state_filter_oracle(&p, delta);
            assert_relative_eq!(nss, oracle, max_relative = 1e-6);
        }
    }

    #[test]
    fn correlator_regular_at_kappa_equals_kappa_a() {
        let p = table_params();
        let k = CorrelatorKernel::new(&p);
        let ka = k.kappa_a;
        // approach the nominally singular point kappa -> kappa_a, delta -> 0;
        // the evaluation must converge smoothly, with no cancellation blowup
        let exact = correlator_n(&k, 0.9e-6, Complex64::new(ka, 0.0), 0.0, 1.0).unwrap();
        for eps in [1e-3, 1e-6, 1e-9, 1e-12] {
            let near = correlator_n(&k, 0.9e-6, Complex64::new(ka * (1.0 + eps), 0.0), 0.0, 1.0)
                .unwrap();
            let rel = (near.re - exact.re).abs() / exact.re;
            assert!(rel < 3.0 * eps + 1e-12, "eps = {eps}: rel = {rel}");
        }
        assert!(exact.re.is_finite() && exact.re > 0.0);
    }

    #[test]
    fn mean_dephasing_zero_without_photons() {
        assert_eq!(
            mean_dephasing_transmitted(&table_params(), 0.0, &timing(), 1e6).unwrap(),
            0.0
        );
    }

    #[test]
    fn mean_dephasing_linearity_in_population() {
        let p = table_params();
        let d = 0.5 * p.chi();
        let g1 = mean_dephasing_transmitted(&p, 1e-4, &timing(), d).unwrap();
        let g2 = mean_dephasing_transmitted(&p, 2e-4, &timing(), d).unwrap();
        assert_relative_eq!(g2 / g1, 2.0, epsilon = 1e-12);
    }

    #[test]
    fn mean_dephasing_vanishes_far_detuned() {
        let p = table_params();
        let peak = mean_dephasing_transmitted(&p, 1.0, &timing(), 0.5 * p.chi()).unwrap();
        let far = mean_dephasing_transmitted(&p, 1.0, &timing(), 60.0 * p.chi()).unwrap();
        assert!(far < 1e-3 * peak, "far = {far}, peak = {peak}");
    }

    #[test]
    fn mean_dephasing_peaks_at_dressed_resonances() {
        let p = table_params();
        let chi = p.chi();
        // grid step 0.1 chi; peaks must land within one step of +-chi/2
        let step = 0.1 * chi;
        let grid: Vec<f64> = (-15..=15).map(|i| i as f64 * step).collect();
        let t = timing();
        let vals: Vec<f64> = grid
            .iter()
            .map(|&d| mean_dephasing_transmitted(&p, 1.0, &t, d).unwrap())
            .collect();
        let pos_max = grid
            .iter()
            .zip(&vals)
            .filter(|(d, _)| **d > 0.0)
            .max_by(|a, b| a.1.total_cmp(b.1))
            .unwrap()
            .0;
        let neg_max = grid
            .iter()
            .zip(&vals)
            .filter(|(d, _)| **d < 0.0)
            .max_by(|a, b| a.1.total_cmp(b.1))
            .unwrap()
            .0;
        assert!((pos_max - 0.5 * chi).abs() <= step + 1e-9);
        assert!((neg_max + 0.5 * chi).abs() <= step + 1e-9);
    }

    #[test]
    fn integrand_continuous_at_pump_switchoff() {
        let p = table_params();
        let k = CorrelatorKernel::new(&p);
        let t = timing();
        let d = 0.6 * p.chi();
        let tp = t.tau_p();
        let left = occupation_contrast(&k, tp * (1.0 - 1e-12), &t, d, 1.0).unwrap();
        let at = occupation_contrast(&k, tp, &t, d, 1.0).unwrap();
        let right = occupation_contrast(&k, tp * (1.0 + 1e-12), &t, d, 1.0).unwrap();
        assert_relative_eq!(left, at, max_relative = 1e-9);
        assert_relative_eq!(right, at, max_relative = 1e-9);
    }

    #[test]
    fn spectral_symmetry() {
        let p = table_params();
        let t = timing();
        for d in [0.3e6, 2.0e6, 11.0e6] {
            let plus = mean_dephasing_transmitted(&p, 1.0, &t, TAU * d).unwrap();
            let minus = mean_dephasing_transmitted(&p, 1.0, &t, -TAU * d).unwrap();
            assert_relative_eq!(plus, minus, max_relative = 1e-6);
        }
    }

    #[test]
    fn eta_bounded_and_vanishing_far_away() {
        let p = table_params();
        let t = timing();
        let grid: Vec<f64> = (-20..=20).map(|i| i as f64 * 0.15 * p.chi()).collect();
        let etas = eta_table(&p, &t, &grid).unwrap();
        for (d, e) in grid.iter().zip(&etas) {
            assert!(*e >= 0.0 && *e <= 1.0, "eta({d}) = {e}");
        }
        assert!(eta_a(&p, &t, 40.0 * p.chi()).unwrap() < 1e-3);
    }

    #[test]
    fn eta_peaks_narrow_with_longer_pulses() {
        let p = table_params();
        let base = timing();
        // outer half-width of the positive dressed-line peak
        let outer_half_width = |tau_p: f64| -> f64 {
            let t = base.with_tau_p(tau_p).unwrap();
            let grid: Vec<f64> = (0..240)
                .map(|i| 0.2 * p.chi() + i as f64 * (0.7 * p.chi() / 239.0))
                .collect();
            let etas = eta_table(&p, &t, &grid).unwrap();
            let (ipk, pk) = etas
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.total_cmp(b.1))
                .map(|(i, v)| (i, *v))
                .unwrap();
            let mut i = ipk;
            while i + 1 < grid.len() && etas[i] > 0.5 * pk {
                i += 1;
            }
            grid[i] - grid[ipk]
        };
        let short = outer_half_width(0.54e-6);
        let long = outer_half_width(2.5e-6);
        assert!(long < short, "short = {short:e}, long = {long:e}");
        // the long-pulse width approaches the linewidth-limited scale
        let linewidth = p.kappa_r().max(p.kappa_a());
        assert!(long < 1.2 * linewidth, "long = {long:e} vs kappa = {linewidth:e}");
    }

    #[test]
    fn response_zero_for_empty_baths() {
        let p = table_params();
        let b = BathPopulations::new(0.0, 0.0, 0.0, 0.0, 0.5, 0.0).unwrap();
        let v = radiometer_response(&p, &b, &timing(), 0.5 * p.chi()).unwrap();
        assert!(v.abs() < 1e-15);
    }

    #[test]
    fn response_flat_when_internal_matches_external() {
        let p = table_params();
        let t = timing();
        let b = BathPopulations::new(1.59, 0.59, 1.0, 1.59, 0.57, 0.0).unwrap();
        let vals: Vec<f64> = (-10..=10)
            .map(|i| radiometer_response(&p, &b, &t, i as f64 * 0.3 * p.chi()).unwrap())
            .collect();
        let (lo, hi) = vals
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &v| (l.min(v), h.max(v)));
        assert!(hi - lo < 1e-12 * hi, "spread = {}", hi - lo);
    }

    #[test]
    fn response_white_limit_matches_far_detuned_formula() {
        let p = table_params();
        let t = timing();
        let b = BathPopulations::new(1.59, 0.014, 0.5, 0.09, 0.57, 0.046).unwrap();
        let far = radiometer_response(&p, &b, &t, 80.0 * p.chi()).unwrap();
        let kr = p.kappa_r();
        let k = p.kappa_a() * p.kappa_r_c() / (kr * kr);
        let white = k
            * (b.n_loss() * (1.0 - b.t_loss())
                + b.n_vts() * b.t_leak() * b.t_loss()
                + (b.n_ext() + b.n_add()) * b.t_loss());
        assert_relative_eq!(far, white, max_relative = 1e-3);
    }

    #[test]
    fn dephasing_spectrum_validation() {
        let t = timing();
        assert!(DephasingSpectrum::new(vec![0.0], vec![0.1], vec![0.01], t).is_ok());
        assert!(DephasingSpectrum::new(vec![0.0], vec![-0.1], vec![0.01], t).is_err());
        assert!(DephasingSpectrum::new(vec![0.0], vec![0.1], vec![], t).is_err());
    }
}
