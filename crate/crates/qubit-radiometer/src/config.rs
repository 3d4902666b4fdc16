//! TOML experiment configuration.
//!
//! User-facing convention matches how such parameters are tabulated:
//! frequencies in Hz, linewidths and the dispersive shift as cycles-per-
//! second values (kappa/2pi, chi/2pi in Hz). The conversion to angular rates
//! happens here, at the boundary, and nowhere else.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::master_equation::OracleConfig;
use crate::quantities::{BathPopulations, ModeParams, PulseTiming, QubitParams};

const TWO_PI: f64 = std::f64::consts::TAU;

/// A sweep axis: either explicit values or a uniform range.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum GridSpec {
    Values { values: Vec<f64> },
    Linspace { min: f64, max: f64, points: usize },
}

impl GridSpec {
    pub fn materialize(&self, name: &str) -> Result<Vec<f64>> {
        let out = match self {
            GridSpec::Values { values } => values.clone(),
            GridSpec::Linspace { min, max, points } => {
                if *points == 0 {
                    return Err(Error::Config(format!("sweep.{name}: points must be >= 1")));
                }
                if !(max >= min) {
                    return Err(Error::Config(format!("sweep.{name}: max must be >= min")));
                }
                if *points == 1 {
                    vec![*min]
                } else {
                    (0..*points)
                        .map(|i| min + (max - min) * i as f64 / (*points - 1) as f64)
                        .collect()
                }
            }
        };
        if out.is_empty() {
            return Err(Error::Config(format!("sweep.{name} is empty")));
        }
        if out.iter().any(|v| !v.is_finite()) {
            return Err(Error::Config(format!("sweep.{name} has non-finite entries")));
        }
        if out.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Config(format!(
                "sweep.{name} must be strictly increasing"
            )));
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ModeSection {
    pub f_a_hz: f64,
    pub f_r_hz: f64,
    pub f_p_hz: f64,
    pub chi_over_2pi_hz: f64,
    pub kappa_r_c_over_2pi_hz: f64,
    pub kappa_r_i_over_2pi_hz: f64,
    pub kappa_a_c_over_2pi_hz: f64,
    pub kappa_a_i_over_2pi_hz: f64,
    #[serde(default = "one")]
    pub conversion_efficiency: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct QubitSection {
    pub gamma_2r_per_s: f64,
    pub t1_s: f64,
    pub p_e_ini: f64,
    pub p_read_e_given_g: f64,
    pub p_read_g_given_e: f64,
    pub f_ge_hz: f64,
    pub f_ef_hz: f64,
    pub delta_gamma_2r_per_s: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct BathSection {
    pub n_vts: f64,
    pub n_ext: f64,
    pub n_add: f64,
    pub n_loss: f64,
    pub t_loss: f64,
    pub t_leak: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct TimingSection {
    pub tau_s: f64,
    pub tau_p_s: f64,
    pub n_rep: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    /// Detuning grid for the down-converted antenna image, f_a - f_r - f_p (Hz).
    pub delta_a_hz: GridSpec,
    /// Pump durations for spectrum families (s).
    pub tau_p_s: GridSpec,
    /// Added-noise settings for calibration sweeps.
    pub n_add: GridSpec,
    /// Internal-bath settings for calibration sweeps.
    pub n_vts: GridSpec,
    /// Probe populations for the master-equation comparison.
    pub n_probe: GridSpec,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct CalibrationSection {
    /// Reference detunings satisfy |delta_a| >= this multiple of chi.
    pub far_detuning_multiple: f64,
    /// Per-point noise scale for synthetic datasets.
    pub noise_sigma: f64,
    /// Seeded repetitions for synthetic recovery statistics.
    pub mc_runs: u32,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct OracleSection {
    pub epsilon: f64,
    pub rtol: f64,
    pub atol: f64,
    #[serde(default)]
    pub max_step_s: Option<f64>,
    #[serde(default)]
    pub isolate_cavity_when_off: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct PrecisionSection {
    /// Calibrated linear-amplifier system noise for the comparison ratio.
    pub n_sys_lin: f64,
}

/// Complete experiment description consumed by the workflows and the CLI.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub seed: u64,
    pub mode: ModeSection,
    pub qubit: QubitSection,
    pub baths: BathSection,
    pub timing: TimingSection,
    pub sweep: SweepSection,
    pub calibration: CalibrationSection,
    pub oracle: OracleSection,
    pub precision: PrecisionSection,
}

fn one() -> f64 {
    1.0
}

impl Default for ExperimentConfig {
    /// Parameters of the reference device: a 10.5 GHz antenna read out
    /// through a 7.6 GHz cavity with a 3.1 MHz dispersive shift.
    fn default() -> Self {
        Self {
            schema_version: 1,
            seed: 1,
            mode: ModeSection {
                f_a_hz: 10.5e9,
                f_r_hz: 7.6011e9,
                f_p_hz: 2.8935e9,
                chi_over_2pi_hz: 3.1e6,
                kappa_r_c_over_2pi_hz: 0.77e6,
                kappa_r_i_over_2pi_hz: 0.06e6,
                kappa_a_c_over_2pi_hz: 0.28e6,
                kappa_a_i_over_2pi_hz: 0.12e6,
                conversion_efficiency: 1.0,
            },
            qubit: QubitSection {
                gamma_2r_per_s: 1.0 / 24e-6,
                t1_s: 71e-6,
                p_e_ini: 0.03,
                p_read_e_given_g: 0.01,
                p_read_g_given_e: 0.04,
                f_ge_hz: 4.6820e9,
                f_ef_hz: 4.4487e9,
                delta_gamma_2r_per_s: 5.215e3,
            },
            baths: BathSection {
                n_vts: 1.59,
                n_ext: 0.014,
                n_add: 0.0,
                n_loss: 0.09,
                t_loss: 0.52,
                t_leak: 0.046,
            },
            timing: TimingSection {
                tau_s: 2.08e-6,
                tau_p_s: 1.08e-6,
                n_rep: 10_000,
            },
            sweep: SweepSection {
                // spans +-6 chi so the far wings double as calibration
                // reference points (|delta| >= 4 chi)
                delta_a_hz: GridSpec::Linspace {
                    min: -18.6e6,
                    max: 18.6e6,
                    points: 49,
                },
                tau_p_s: GridSpec::Values {
                    values: vec![0.54e-6, 1.08e-6, 2.5e-6],
                },
                n_add: GridSpec::Values {
                    values: vec![0.0, 0.8, 1.6, 2.4],
                },
                n_vts: GridSpec::Values {
                    values: vec![1.59, 2.05, 2.51, 2.97, 3.43, 3.89],
                },
                n_probe: GridSpec::Values {
                    values: vec![1e-3, 0.1, 2.0],
                },
            },
            calibration: CalibrationSection {
                far_detuning_multiple: 4.0,
                noise_sigma: 0.002,
                mc_runs: 1,
            },
            oracle: OracleSection {
                epsilon: 1e-8,
                rtol: 1e-10,
                atol: 1e-12,
                max_step_s: None,
                isolate_cavity_when_off: false,
            },
            precision: PrecisionSection { n_sys_lin: 1.54 },
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig =
            toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// Check every section by constructing the validated domain records.
    pub fn validate(&self) -> Result<()> {
        if self.schema_version != 1 {
            return Err(Error::Config(format!(
                "unsupported schema_version {}",
                self.schema_version
            )));
        }
        self.mode_params()?;
        self.qubit_params()?;
        self.bath_populations()?;
        self.pulse_timing()?;
        self.oracle_config()?;
        self.delta_a_grid()?;
        self.tau_p_grid()?;
        self.sweep.n_add.materialize("n_add")?;
        self.sweep.n_vts.materialize("n_vts")?;
        self.sweep.n_probe.materialize("n_probe")?;
        if !(self.calibration.far_detuning_multiple > 0.0) {
            return Err(Error::Config(
                "calibration.far_detuning_multiple must be positive".into(),
            ));
        }
        if !(self.calibration.noise_sigma >= 0.0) {
            return Err(Error::Config("calibration.noise_sigma must be >= 0".into()));
        }
        if self.calibration.mc_runs == 0 {
            return Err(Error::Config("calibration.mc_runs must be >= 1".into()));
        }
        if !(self.precision.n_sys_lin >= 0.0) {
            return Err(Error::Config("precision.n_sys_lin must be >= 0".into()));
        }
        Ok(())
    }

    pub fn mode_params(&self) -> Result<ModeParams> {
        let m = &self.mode;
        ModeParams::new(
            m.f_a_hz,
            m.f_r_hz,
            m.f_p_hz,
            TWO_PI * m.chi_over_2pi_hz,
            TWO_PI * m.kappa_r_c_over_2pi_hz,
            TWO_PI * m.kappa_r_i_over_2pi_hz,
            TWO_PI * m.kappa_a_c_over_2pi_hz,
            TWO_PI * m.kappa_a_i_over_2pi_hz,
            m.conversion_efficiency,
        )
        .map_err(into_config_error)
    }

    pub fn qubit_params(&self) -> Result<QubitParams> {
        let q = &self.qubit;
        QubitParams::new(
            q.gamma_2r_per_s,
            q.t1_s,
            q.p_e_ini,
            q.p_read_e_given_g,
            q.p_read_g_given_e,
            q.f_ge_hz,
            q.f_ef_hz,
            q.delta_gamma_2r_per_s,
        )
        .map_err(into_config_error)
    }

    pub fn bath_populations(&self) -> Result<BathPopulations> {
        let b = &self.baths;
        BathPopulations::new(b.n_vts, b.n_ext, b.n_add, b.n_loss, b.t_loss, b.t_leak)
            .map_err(into_config_error)
    }

    pub fn pulse_timing(&self) -> Result<PulseTiming> {
        let t = &self.timing;
        PulseTiming::new(t.tau_s, t.tau_p_s, t.n_rep).map_err(into_config_error)
    }

    pub fn oracle_config(&self) -> Result<OracleConfig> {
        let o = OracleConfig {
            epsilon: self.oracle.epsilon,
            rtol: self.oracle.rtol,
            atol: self.oracle.atol,
            max_step: self.oracle.max_step_s,
            isolate_cavity_when_off: self.oracle.isolate_cavity_when_off,
        };
        o.validate().map_err(into_config_error)?;
        Ok(o)
    }

    /// Detuning grid in angular units (rad/s).
    pub fn delta_a_grid(&self) -> Result<Vec<f64>> {
        Ok(self
            .sweep
            .delta_a_hz
            .materialize("delta_a_hz")?
            .into_iter()
            .map(|f| TWO_PI * f)
            .collect())
    }

    pub fn tau_p_grid(&self) -> Result<Vec<f64>> {
        let grid = self.sweep.tau_p_s.materialize("tau_p_s")?;
        if grid.iter().any(|&t| !(t > 0.0)) {
            return Err(Error::Config("sweep.tau_p_s must be positive".into()));
        }
        Ok(grid)
    }
}

fn into_config_error(e: Error) -> Error {
    match e {
        Error::InvalidParameter(msg) => Error::Config(msg),
        other => other,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn defaults_validate_and_convert() {
        let cfg = ExperimentConfig::default();
        cfg.validate().unwrap();
        let p = cfg.mode_params().unwrap();
        assert_relative_eq!(p.chi(), TWO_PI * 3.1e6, epsilon = 1.0);
        assert_relative_eq!(p.gamma(), 0.3, epsilon = 1e-12);
        let grid = cfg.delta_a_grid().unwrap();
        assert_eq!(grid.len(), 49);
        assert_relative_eq!(grid[0], -TWO_PI * 18.6e6, epsilon = 1.0);
    }

    #[test]
    fn toml_roundtrip() {
        let cfg = ExperimentConfig::default();
        let text = cfg.to_toml_string().unwrap();
        let back = ExperimentConfig::from_toml_str(&text).unwrap();
        assert_eq!(cfg, back);
    }

    #[test]
    fn rejects_bad_sections() {
        let mut cfg = ExperimentConfig::default();
        cfg.baths.t_loss = 0.0;
        assert!(matches!(cfg.validate(), Err(Error::Config(_))));

        let mut cfg = ExperimentConfig::default();
        cfg.timing.tau_p_s = 5e-6; // exceeds tau
        assert!(cfg.validate().is_err());

        let cfg = ExperimentConfig {
            schema_version: 7,
            ..Default::default()
        };
        assert!(cfg.validate().is_err());

        let mut cfg = ExperimentConfig::default();
        cfg.sweep.delta_a_hz = GridSpec::Values { values: vec![] };
        assert!(cfg.validate().is_err());

        let mut cfg = ExperimentConfig::default();
        cfg.sweep.delta_a_hz = GridSpec::Values {
            values: vec![1.0, 1.0],
        };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn rejects_unknown_keys() {
        let text = r#"
schema_version = 1
seed = 1
[mode]
f_a_hz = 10.5e9
bogus_key = 1.0
"#;
        assert!(ExperimentConfig::from_toml_str(text).is_err());
    }

    #[test]
    fn linspace_grid() {
        let g = GridSpec::Linspace {
            min: 0.0,
            max: 1.0,
            points: 5,
        };
        assert_eq!(g.materialize("x").unwrap(), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        let single = GridSpec::Linspace {
            min: 2.0,
            max: 3.0,
            points: 1,
        };
        assert_eq!(single.materialize("x").unwrap(), vec![2.0]);
    }
}
