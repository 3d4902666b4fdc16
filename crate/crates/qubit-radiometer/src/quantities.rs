//! Unit conventions, thermal-occupation conversions, and the validated
//! parameter records shared by every other module.
//!
//! Convention: all linewidths and the dispersive shift are stored as angular
//! rates (rad/s); user-facing frequencies are plain Hz. Conversion between
//! the two happens at the configuration boundary, nowhere else.

use crate::constants::{BOLTZMANN, PLANCK};
use crate::error::{Error, Result};

fn require(cond: bool, what: &str) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::InvalidParameter(what.to_string()))
    }
}

/// Bose–Einstein occupation of a mode at frequency `f_hz` in equilibrium
/// with a bath at temperature `t_k`: 1/(exp(hf/kT) - 1).
pub fn bose_einstein(f_hz: f64, t_k: f64) -> Result<f64> {
    if !(f_hz > 0.0) || !f_hz.is_finite() {
        return Err(Error::Domain(format!("frequency must be positive, got {f_hz}")));
    }
    if !(t_k > 0.0) || !t_k.is_finite() {
        return Err(Error::Domain(format!("temperature must be positive, got {t_k}")));
    }
    let x = PLANCK * f_hz / (BOLTZMANN * t_k);
    Ok(1.0 / x.exp_m1())
}

/// Temperature at which a mode at `f_hz` has mean occupation `n`.
/// Inverse of [`bose_einstein`]: T = (hf/k) / ln(1 + 1/n).
pub fn temperature_of(f_hz: f64, n: f64) -> Result<f64> {
    if !(f_hz > 0.0) || !f_hz.is_finite() {
        return Err(Error::Domain(format!("frequency must be positive, got {f_hz}")));
    }
    if !(n > 0.0) || !n.is_finite() {
        return Err(Error::Domain(format!("occupation must be positive, got {n}")));
    }
    Ok(PLANCK * f_hz / (BOLTZMANN * (1.0 / n).ln_1p()))
}

/// Oscillator and qubit rates of the radiometer signal chain.
///
/// Frequencies (`f_*`) are in Hz; `chi` and the four `kappa_*` components are
/// angular rates in rad/s.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeParams {
    f_a: f64,
    f_r: f64,
    f_p: f64,
    chi: f64,
    kappa_r_c: f64,
    kappa_r_i: f64,
    kappa_a_c: f64,
    kappa_a_i: f64,
    conversion_efficiency: f64,
}

impl ModeParams {
    /// Build and validate a parameter record.
    ///
    /// Arguments, in order: antenna / readout-cavity / pump frequencies (Hz),
    /// dispersive shift (rad/s), readout external + internal rates (rad/s),
    /// antenna external + internal rates (rad/s), converter efficiency in [0, 1].
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        f_a: f64,
        f_r: f64,
        f_p: f64,
        chi: f64,
        kappa_r_c: f64,
        kappa_r_i: f64,
        kappa_a_c: f64,
        kappa_a_i: f64,
        conversion_efficiency: f64,
    ) -> Result<Self> {
        for (v, name) in [
            (f_a, "f_a"),
            (f_r, "f_r"),
            (f_p, "f_p"),
            (chi, "chi"),
            (kappa_r_c, "kappa_r_c"),
            (kappa_r_i, "kappa_r_i"),
            (kappa_a_c, "kappa_a_c"),
            (kappa_a_i, "kappa_a_i"),
            (conversion_efficiency, "conversion_efficiency"),
        ] {
            require(v.is_finite(), &format!("{name} must be finite"))?;
        }
        require(f_a > 0.0 && f_r > 0.0 && f_p > 0.0, "frequencies must be positive")?;
        require(
            kappa_r_c >= 0.0 && kappa_r_i >= 0.0 && kappa_a_c >= 0.0 && kappa_a_i >= 0.0,
            "all rates must be nonnegative",
        )?;
        require(kappa_r_c + kappa_r_i > 0.0, "kappa_r must be positive")?;
        require(kappa_a_c + kappa_a_i > 0.0, "kappa_a must be positive")?;
        require(
            (0.0..=1.0).contains(&conversion_efficiency),
            "conversion_efficiency must lie in [0, 1]",
        )?;
        Ok(Self {
            f_a,
            f_r,
            f_p,
            chi,
            kappa_r_c,
            kappa_r_i,
            kappa_a_c,
            kappa_a_i,
            conversion_efficiency,
        })
    }

    pub fn f_a(&self) -> f64 {
        self.f_a
    }
    pub fn f_r(&self) -> f64 {
        self.f_r
    }
    pub fn f_p(&self) -> f64 {
        self.f_p
    }
    /// Dispersive shift (rad/s).
    pub fn chi(&self) -> f64 {
        self.chi
    }
    pub fn kappa_r_c(&self) -> f64 {
        self.kappa_r_c
    }
    pub fn kappa_r_i(&self) -> f64 {
        self.kappa_r_i
    }
    pub fn kappa_a_c(&self) -> f64 {
        self.kappa_a_c
    }
    pub fn kappa_a_i(&self) -> f64 {
        self.kappa_a_i
    }
    /// Total readout-cavity linewidth (rad/s); exactly the sum of the parts.
    pub fn kappa_r(&self) -> f64 {
        self.kappa_r_c + self.kappa_r_i
    }
    /// Total antenna linewidth (rad/s).
    pub fn kappa_a(&self) -> f64 {
        self.kappa_a_c + self.kappa_a_i
    }
    /// Fractional absorption of the antenna: internal-bath weight
    /// kappa_a_i / kappa_a, always in [0, 1].
    pub fn gamma(&self) -> f64 {
        self.kappa_a_i / self.kappa_a()
    }
    /// Detuning of the down-converted antenna image from the readout cavity,
    /// 2 pi (f_a - f_r - f_p), in rad/s.
    pub fn delta_a(&self) -> f64 {
        2.0 * std::f64::consts::PI * (self.f_a - self.f_r - self.f_p)
    }
    pub fn conversion_efficiency(&self) -> f64 {
        self.conversion_efficiency
    }

    /// Copy with the antenna frequency retuned so that `delta_a()` equals the
    /// given angular detuning. Handy for spectrum scans.
    pub fn at_delta_a(&self, delta_a: f64) -> Self {
        let mut out = *self;
        out.f_a = self.f_r + self.f_p + delta_a / (2.0 * std::f64::consts::PI);
        out
    }
}

/// Mean thermal occupations of the four baths plus the two link transmissions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BathPopulations {
    n_vts: f64,
    n_ext: f64,
    n_add: f64,
    n_loss: f64,
    t_loss: f64,
    t_leak: f64,
}

impl BathPopulations {
    pub fn new(
        n_vts: f64,
        n_ext: f64,
        n_add: f64,
        n_loss: f64,
        t_loss: f64,
        t_leak: f64,
    ) -> Result<Self> {
        for (v, name) in [(n_vts, "n_vts"), (n_ext, "n_ext"), (n_add, "n_add"), (n_loss, "n_loss")]
        {
            require(v.is_finite() && v >= 0.0, &format!("{name} must be >= 0"))?;
        }
        require(
            t_loss.is_finite() && t_loss > 0.0 && t_loss <= 1.0,
            "t_loss must lie in (0, 1]",
        )?;
        require(
            t_leak.is_finite() && (0.0..1.0).contains(&t_leak),
            "t_leak must lie in [0, 1)",
        )?;
        Ok(Self {
            n_vts,
            n_ext,
            n_add,
            n_loss,
            t_loss,
            t_leak,
        })
    }

    pub fn n_vts(&self) -> f64 {
        self.n_vts
    }
    pub fn n_ext(&self) -> f64 {
        self.n_ext
    }
    pub fn n_add(&self) -> f64 {
        self.n_add
    }
    pub fn n_loss(&self) -> f64 {
        self.n_loss
    }
    pub fn t_loss(&self) -> f64 {
        self.t_loss
    }
    pub fn t_leak(&self) -> f64 {
        self.t_leak
    }

    /// Parasitic white noise referred to the antenna input:
    /// n_vts t_leak + n_loss (1 - t_loss)/t_loss.
    pub fn n_para(&self) -> f64 {
        self.n_vts * self.t_leak + self.n_loss * (1.0 - self.t_loss) / self.t_loss
    }

    pub fn with_n_add(&self, n_add: f64) -> Result<Self> {
        Self::new(self.n_vts, self.n_ext, n_add, self.n_loss, self.t_loss, self.t_leak)
    }

    pub fn with_n_vts(&self, n_vts: f64) -> Result<Self> {
        Self::new(n_vts, self.n_ext, self.n_add, self.n_loss, self.t_loss, self.t_leak)
    }
}

/// Ramsey/converter-pulse timing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PulseTiming {
    tau: f64,
    tau_p: f64,
    n_rep: u64,
}

impl PulseTiming {
    pub fn new(tau: f64, tau_p: f64, n_rep: u64) -> Result<Self> {
        require(tau.is_finite() && tau_p.is_finite(), "timing must be finite")?;
        require(tau_p > 0.0 && tau_p <= tau, "requires 0 < tau_p <= tau")?;
        require(n_rep >= 1, "n_rep must be at least 1")?;
        Ok(Self { tau, tau_p, n_rep })
    }

    /// Separation of the two pi/2 pulses (s).
    pub fn tau(&self) -> f64 {
        self.tau
    }
    /// Converter pump duration (s).
    pub fn tau_p(&self) -> f64 {
        self.tau_p
    }
    /// Wait between pump switch-off and the second pi/2 pulse (s).
    pub fn tau_w(&self) -> f64 {
        self.tau - self.tau_p
    }
    pub fn n_rep(&self) -> u64 {
        self.n_rep
    }

    /// Copy with a different pump duration, holding the wait `tau_w` fixed
    /// (as in the experiment, where the second pulse follows the pump).
    pub fn with_tau_p(&self, tau_p: f64) -> Result<Self> {
        Self::new(tau_p + self.tau_w(), tau_p, self.n_rep)
    }
}

/// Inherent qubit decoherence, initialization and readout errors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QubitParams {
    pub gamma_2r: f64,
    pub t1: f64,
    pub p_e_ini: f64,
    pub p_read_e_given_g: f64,
    pub p_read_g_given_e: f64,
    pub f_ge: f64,
    pub f_ef: f64,
    pub delta_gamma_2r: f64,
}

impl QubitParams {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        gamma_2r: f64,
        t1: f64,
        p_e_ini: f64,
        p_read_e_given_g: f64,
        p_read_g_given_e: f64,
        f_ge: f64,
        f_ef: f64,
        delta_gamma_2r: f64,
    ) -> Result<Self> {
        require(gamma_2r.is_finite() && gamma_2r > 0.0, "gamma_2r must be positive")?;
        require(t1.is_finite() && t1 > 0.0, "t1 must be positive")?;
        for (p, name) in [
            (p_e_ini, "p_e_ini"),
            (p_read_e_given_g, "p_read_e_given_g"),
            (p_read_g_given_e, "p_read_g_given_e"),
        ] {
            require(
                p.is_finite() && (0.0..1.0).contains(&p),
                &format!("{name} must lie in [0, 1)"),
            )?;
        }
        require(
            f_ge.is_finite() && f_ef.is_finite() && f_ge > f_ef && f_ef > 0.0,
            "requires f_ge > f_ef > 0 (negative transmon anharmonicity)",
        )?;
        require(
            delta_gamma_2r.is_finite() && delta_gamma_2r >= 0.0,
            "delta_gamma_2r must be >= 0",
        )?;
        Ok(Self {
            gamma_2r,
            t1,
            p_e_ini,
            p_read_e_given_g,
            p_read_g_given_e,
            f_ge,
            f_ef,
            delta_gamma_2r,
        })
    }
}
