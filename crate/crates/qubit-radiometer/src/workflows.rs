//! The four analysis workflows behind the command-line front end: dephasing
//! spectra, master-equation comparison, calibration, and detector metrics.
//!
//! Outputs are plot-ready CSV tables and JSON reports with a schema version.
//! Files are written to a temporary sibling and renamed, so a failing run
//! never leaves a partial output; identical config and seed give
//! byte-identical files.

use std::io::Write;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::calibration::{
    assemble_system_noise, Calibrator, ControlVariable, Measurement, SweepRecord,
};
use crate::config::ExperimentConfig;
use crate::dephasing::{eta_table, model_spectrum, response_from_eta};
use crate::error::{Error, Result};
use crate::master_equation::eta_a_oracle;
use crate::metrics::{detector_figures, outperform_ratio};
use crate::quantities::{temperature_of, BathPopulations};
use crate::ramsey::ReadoutModel;

const SCHEMA_VERSION: u32 = 1;

/// Serialized value-with-error pair.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct ValueSigma {
    pub value: f64,
    /// Standard error; null when the quantity is unidentifiable.
    pub sigma: Option<f64>,
}

impl From<Measurement> for ValueSigma {
    fn from(m: Measurement) -> Self {
        ValueSigma {
            value: m.value,
            sigma: m.sigma.is_finite().then_some(m.sigma),
        }
    }
}

fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let file_name = path
        .file_name()
        .ok_or_else(|| Error::Config(format!("output path {} has no file name", path.display())))?;
    let mut tmp = path.to_path_buf();
    tmp.set_file_name(format!(
        "{}.tmp-{}",
        file_name.to_string_lossy(),
        std::process::id()
    ));
    {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    std::fs::rename(&tmp, path)?;
    Ok(())
}

/// Forward-model dephasing spectra: one row per (tau_p, delta_a).
///
/// CSV columns: `tau_p_s, delta_a_rad_s, n_r_eff, sigma`. The forward model
/// is deterministic, so sigma is 0. Pump-duration sweeps hold the wait time
/// tau_w fixed, as in the pulse sequence.
pub fn cmd_spectra(cfg: &ExperimentConfig, out: &Path) -> Result<usize> {
    cfg.validate()?;
    let params = cfg.mode_params()?;
    let baths = cfg.bath_populations()?;
    let base = cfg.pulse_timing()?;
    let deltas = cfg.delta_a_grid()?;
    let tau_ps = cfg.tau_p_grid()?;

    let mut buf = Vec::new();
    writeln!(buf, "tau_p_s,delta_a_rad_s,n_r_eff,sigma")?;
    let mut rows = 0;
    for &tau_p in &tau_ps {
        let timing = base.with_tau_p(tau_p).map_err(|e| match e {
            Error::InvalidParameter(m) => Error::Config(format!("tau_p sweep: {m}")),
            other => other,
        })?;
        let spectrum = model_spectrum(&params, &baths, &timing, &deltas)?;
        for ((&d, &n), &s) in spectrum
            .detunings()
            .iter()
            .zip(spectrum.n_r_eff())
            .zip(spectrum.sigma())
        {
            writeln!(buf, "{tau_p},{d},{n},{s}")?;
            rows += 1;
        }
    }
    atomic_write(out, &buf)?;
    Ok(rows)
}

/// Comparison summary returned by [`cmd_oracle_compare`].
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct OracleCompareSummary {
    pub rows: usize,
    /// Largest |analytic - oracle| over probes in the linear regime
    /// (gamma * n_probe <= 0.05).
    pub max_diff_linear_regime: f64,
    /// Largest |analytic - oracle| over the remaining probes, if any.
    pub max_diff_beyond: Option<f64>,
}

/// Analytic detector response against the exact master-equation solution.
///
/// CSV columns: `delta_a_rad_s, n_probe, eta_analytic, eta_oracle, abs_diff`.
pub fn cmd_oracle_compare(cfg: &ExperimentConfig, out: &Path) -> Result<OracleCompareSummary> {
    cfg.validate()?;
    let params = cfg.mode_params()?;
    let timing = cfg.pulse_timing()?;
    let oracle_cfg = cfg.oracle_config()?;
    let deltas = cfg.delta_a_grid()?;
    let probes = cfg.sweep.n_probe.materialize("n_probe")?;
    let gamma = params.gamma();

    let analytic = eta_table(&params, &timing, &deltas)?;
    let mut buf = Vec::new();
    writeln!(buf, "delta_a_rad_s,n_probe,eta_analytic,eta_oracle,abs_diff")?;
    let mut max_linear: f64 = 0.0;
    let mut max_beyond: Option<f64> = None;
    let mut rows = 0;
    for &n_probe in &probes {
        use rayon::prelude::*;
        let oracle: Vec<f64> = deltas
            .par_iter()
            .map(|&d| eta_a_oracle(&params, &timing, d, n_probe, &oracle_cfg))
            .collect::<Result<_>>()
            .map_err(|e| {
                Error::Integration(format!("oracle failed at n_probe = {n_probe}: {e}"))
            })?;
        for ((&d, &a), &o) in deltas.iter().zip(&analytic).zip(&oracle) {
            let diff = (a - o).abs();
            writeln!(buf, "{d},{n_probe},{a},{o},{diff}")?;
            rows += 1;
            if gamma * n_probe <= 0.05 {
                max_linear = max_linear.max(diff);
            } else {
                max_beyond = Some(max_beyond.unwrap_or(0.0).max(diff));
            }
        }
    }
    atomic_write(out, &buf)?;
    Ok(OracleCompareSummary {
        rows,
        max_diff_linear_regime: max_linear,
        max_diff_beyond: max_beyond,
    })
}

/// Input source for [`cmd_calibrate`].
#[derive(Debug, Clone)]
pub enum CalibrateInput {
    /// Measured sweep tables (CSV files, concatenated).
    Files(Vec<PathBuf>),
    /// Generate sweeps from the configured truth values.
    Synthetic,
}

/// Recovery statistics over seeded synthetic runs.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct McSummary {
    pub runs: u32,
    pub within_2_sigma_t_loss: f64,
    pub within_2_sigma_t_leak: f64,
    pub within_2_sigma_n_ext: f64,
    pub within_2_sigma_n_loss: f64,
}

/// Calibration report mirroring the radiometric-results table: extracted
/// transmissions and populations, the derived noise budget, and the bath
/// temperatures at the antenna frequency.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct CalibrationReport {
    pub schema_version: u32,
    pub weighted_fit: bool,
    pub t_loss: ValueSigma,
    pub t_leak: ValueSigma,
    pub n_ext: ValueSigma,
    pub n_loss: ValueSigma,
    pub n_para: ValueSigma,
    pub n_shot: ValueSigma,
    pub n_sys: ValueSigma,
    pub n_a: ValueSigma,
    pub t_ext_k: ValueSigma,
    pub t_loss_bath_k: ValueSigma,
    pub t_para_k: ValueSigma,
    pub t_a_k: ValueSigma,
    pub t_sys_k: ValueSigma,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mc: Option<McSummary>,
}

/// Generate the two calibration sweeps from the configured truth values,
/// with Gaussian noise of scale `calibration.noise_sigma`. Deterministic in
/// the seed and independent of thread count.
pub fn synth_calibration_records(cfg: &ExperimentConfig, seed: u64) -> Result<Vec<SweepRecord>> {
    let params = cfg.mode_params()?;
    let timing = cfg.pulse_timing()?;
    let truth = cfg.bath_populations()?;
    let deltas = cfg.delta_a_grid()?;
    let n_adds = cfg.sweep.n_add.materialize("n_add")?;
    let n_vtss = cfg.sweep.n_vts.materialize("n_vts")?;
    let sigma = cfg.calibration.noise_sigma;

    let etas = eta_table(&params, &timing, &deltas)?;
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let gauss = |rng: &mut ChaCha12Rng| {
        let u1: f64 = rng.gen_range(1e-12..1.0);
        let u2: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
        (-2.0 * u1.ln()).sqrt() * u2.cos()
    };
    let mut out = Vec::new();
    for (&d, &eta) in deltas.iter().zip(&etas) {
        for &n_add in &n_adds {
            let b = truth.with_n_add(n_add)?;
            let noise = if sigma > 0.0 { sigma * gauss(&mut rng) } else { 0.0 };
            out.push(SweepRecord {
                delta_a: d,
                control: ControlVariable::NAdd,
                control_value: n_add,
                n_r_eff: (response_from_eta(&params, &b, eta) + noise).max(0.0),
                sigma: (sigma > 0.0).then_some(sigma),
            });
        }
        for &n_vts in &n_vtss {
            let b = truth.with_n_vts(n_vts)?;
            let noise = if sigma > 0.0 { sigma * gauss(&mut rng) } else { 0.0 };
            out.push(SweepRecord {
                delta_a: d,
                control: ControlVariable::NVts,
                control_value: n_vts,
                n_r_eff: (response_from_eta(&params, &b, eta) + noise).max(0.0),
                sigma: (sigma > 0.0).then_some(sigma),
            });
        }
    }
    Ok(out)
}

/// Write sweep records in the calibration CSV schema.
pub fn write_sweep_csv(path: &Path, records: &[SweepRecord]) -> Result<()> {
    let mut buf = Vec::new();
    writeln!(buf, "delta_a_rad_s,control_name,control_value,n_r_eff,sigma")?;
    for r in records {
        let sigma = r.sigma.map(|s| s.to_string()).unwrap_or_default();
        writeln!(
            buf,
            "{},{},{},{},{sigma}",
            r.delta_a, r.control, r.control_value, r.n_r_eff
        )?;
    }
    atomic_write(path, &buf)?;
    Ok(())
}

/// Read one calibration CSV. Returns the records and whether a sigma column
/// was present (absent sigma downgrades the fits to unweighted).
pub fn read_sweep_csv(path: &Path) -> Result<(Vec<SweepRecord>, bool)> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    let headers = reader
        .headers()
        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?
        .clone();
    let required = ["delta_a_rad_s", "control_name", "control_value", "n_r_eff"];
    for col in required {
        if !headers.iter().any(|h| h == col) {
            return Err(Error::Config(format!(
                "{}: missing required column `{col}`",
                path.display()
            )));
        }
    }
    for h in headers.iter() {
        if !required.contains(&h) && h != "sigma" {
            return Err(Error::Config(format!(
                "{}: unknown column `{h}`",
                path.display()
            )));
        }
    }
    let has_sigma = headers.iter().any(|h| h == "sigma");
    let idx = |name: &str| headers.iter().position(|h| h == name).unwrap();
    let (i_d, i_c, i_v, i_n) = (
        idx("delta_a_rad_s"),
        idx("control_name"),
        idx("control_value"),
        idx("n_r_eff"),
    );
    let i_s = has_sigma.then(|| idx("sigma"));

    let mut out = Vec::new();
    for (line, row) in reader.records().enumerate() {
        let row = row.map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let field = |i: usize| -> Result<f64> {
            row.get(i)
                .ok_or_else(|| Error::Config(format!("{}: short row {line}", path.display())))?
                .parse::<f64>()
                .map_err(|e| {
                    Error::Config(format!(
                        "{}: row {line}, column `{}`: {e}",
                        path.display(),
                        headers.get(i).unwrap_or("")
                    ))
                })
        };
        let sigma = match i_s {
            Some(i) => {
                let raw = row.get(i).unwrap_or("");
                if raw.is_empty() {
                    None
                } else {
                    Some(field(i)?)
                }
            }
            None => None,
        };
        out.push(SweepRecord {
            delta_a: field(i_d)?,
            control: ControlVariable::parse(row.get(i_c).unwrap_or(""))?,
            control_value: field(i_v)?,
            n_r_eff: field(i_n)?,
            sigma,
        });
    }
    Ok((out, has_sigma))
}

fn temperature_measurement(f_hz: f64, n: Measurement) -> ValueSigma {
    match temperature_of(f_hz, n.value) {
        Ok(t) => {
            let sigma = if n.sigma.is_finite() && n.value > 0.0 {
                let h = (0.5 * n.value).min(1e-6 * n.value.max(1e-9)).max(1e-12 * n.value);
                let up = temperature_of(f_hz, n.value + h).unwrap_or(t);
                let dn = temperature_of(f_hz, (n.value - h).max(n.value * 1e-3)).unwrap_or(t);
                Some(((up - dn) / (2.0 * h)).abs() * n.sigma)
            } else {
                None
            };
            ValueSigma {
                value: t,
                sigma,
            }
        }
        Err(_) => ValueSigma {
            value: f64::NAN,
            sigma: None,
        },
    }
}

/// Run the calibration pipeline and assemble the radiometric report.
pub fn cmd_calibrate(
    cfg: &ExperimentConfig,
    input: &CalibrateInput,
    out: &Path,
) -> Result<CalibrationReport> {
    cfg.validate()?;
    let params = cfg.mode_params()?;
    let qubit = cfg.qubit_params()?;
    let timing = cfg.pulse_timing()?;
    let nominal = cfg.bath_populations()?;
    let calibrator = Calibrator::new(&params)
        .with_far_threshold(cfg.calibration.far_detuning_multiple * params.chi().abs());

    let (records, warn_unweighted) = match input {
        CalibrateInput::Files(paths) => {
            if paths.is_empty() {
                return Err(Error::Config(
                    "no input files given (or pass --synthetic)".into(),
                ));
            }
            let mut all = Vec::new();
            let mut sigma_everywhere = true;
            for p in paths {
                let (mut recs, has_sigma) = read_sweep_csv(p)?;
                sigma_everywhere &= has_sigma && recs.iter().all(|r| r.sigma.is_some());
                all.append(&mut recs);
            }
            (all, !sigma_everywhere)
        }
        CalibrateInput::Synthetic => (synth_calibration_records(cfg, cfg.seed)?, false),
    };
    if warn_unweighted {
        eprintln!("warning: sigma column missing or incomplete; falling back to unweighted fits");
    }

    let fit = calibrator.run(&records)?;

    // noise budget at the calibrated values (nominal n_vts is known from
    // thermometry and treated as exact)
    let cal_baths = BathPopulations::new(
        nominal.n_vts(),
        fit.n_ext.value.max(0.0),
        0.0,
        fit.n_loss.value.max(0.0),
        fit.t_loss.value.clamp(1e-6, 1.0),
        fit.t_leak.value.clamp(0.0, 1.0 - 1e-12),
    )
    .map_err(|e| Error::Estimation(format!("calibrated values are unphysical: {e}")))?;
    let readout = ReadoutModel::from(&qubit);
    let sn = assemble_system_noise(&qubit, &params, &cal_baths, &timing, readout.a0())?;

    // delta-method gradients of the noise budget over
    // (t_loss, t_leak, n_ext, n_loss)
    let (t, l, nl) = (cal_baths.t_loss(), cal_baths.t_leak(), cal_baths.n_loss());
    let _ = l;
    let g_para = [-nl / (t * t), nominal.n_vts(), 0.0, (1.0 - t) / t];
    let g_shot = [-sn.n_shot / t, 0.0, 0.0, 0.0];
    let quad = |g: [f64; 4]| -> f64 {
        let mut acc = 0.0;
        for i in 0..4 {
            for j in 0..4 {
                acc += g[i] * g[j] * fit.covariance[i][j];
            }
        }
        acc.max(0.0).sqrt()
    };
    let g_sys = [
        g_para[0] + g_shot[0],
        g_para[1],
        g_para[2],
        g_para[3],
    ];
    let n_para = Measurement::new(sn.n_para, quad(g_para));
    let n_shot = Measurement::new(sn.n_shot, quad(g_shot));
    let n_sys = Measurement::new(sn.n_sys, quad(g_sys));

    // antenna-mode population from the calibrated external bath
    let gam = params.gamma();
    let n_a = Measurement::new(
        gam * nominal.n_vts() + (1.0 - gam) * fit.n_ext.value,
        (1.0 - gam) * fit.n_ext.sigma,
    );

    let mc = match input {
        CalibrateInput::Synthetic if cfg.calibration.mc_runs > 1 => {
            let truth = (
                nominal.t_loss(),
                nominal.t_leak(),
                nominal.n_ext(),
                nominal.n_loss(),
            );
            let runs = cfg.calibration.mc_runs;
            let mut hits = [0u32; 4];
            for k in 0..runs {
                let recs = synth_calibration_records(cfg, cfg.seed.wrapping_add(k as u64))?;
                let f = calibrator.run(&recs)?;
                for (slot, (m, tv)) in [
                    (f.t_loss, truth.0),
                    (f.t_leak, truth.1),
                    (f.n_ext, truth.2),
                    (f.n_loss, truth.3),
                ]
                .iter()
                .enumerate()
                {
                    if m.covers(*tv, 2.0) {
                        hits[slot] += 1;
                    }
                }
            }
            Some(McSummary {
                runs,
                within_2_sigma_t_loss: hits[0] as f64 / runs as f64,
                within_2_sigma_t_leak: hits[1] as f64 / runs as f64,
                within_2_sigma_n_ext: hits[2] as f64 / runs as f64,
                within_2_sigma_n_loss: hits[3] as f64 / runs as f64,
            })
        }
        _ => None,
    };

    let f_a = params.f_a();
    let report = CalibrationReport {
        schema_version: SCHEMA_VERSION,
        weighted_fit: fit.weighted,
        t_loss: fit.t_loss.into(),
        t_leak: fit.t_leak.into(),
        n_ext: fit.n_ext.into(),
        n_loss: fit.n_loss.into(),
        n_para: n_para.into(),
        n_shot: n_shot.into(),
        n_sys: n_sys.into(),
        n_a: n_a.into(),
        t_ext_k: temperature_measurement(f_a, fit.n_ext),
        t_loss_bath_k: temperature_measurement(f_a, fit.n_loss),
        t_para_k: temperature_measurement(f_a, n_para),
        t_a_k: temperature_measurement(f_a, n_a),
        t_sys_k: temperature_measurement(f_a, n_sys),
        mc,
    };
    let json =
        serde_json::to_string_pretty(&report).map_err(|e| Error::Config(e.to_string()))?;
    atomic_write(out, format!("{json}\n").as_bytes())?;
    Ok(report)
}

/// Detector figures of merit and the noise budget at the configured
/// operating point.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct MetricsReport {
    pub schema_version: u32,
    pub a0: f64,
    pub eta: f64,
    pub p_dc: f64,
    /// Parasitic background referred to the readout cavity.
    pub n_r_para: f64,
    pub eta_prime: f64,
    pub p_dc_prime: f64,
    /// Precision advantage over an ideal quantum-limited amplifier.
    pub outperform_ideal: f64,
    /// Same, with the parasitic background folded in.
    pub outperform_ideal_parasitic: f64,
    /// Against the calibrated amplifier chain (precision.n_sys_lin).
    pub outperform_calibrated_parasitic: f64,
    pub dynamic_range_db: f64,
    pub n_para: f64,
    pub n_shot: f64,
    pub n_sys: f64,
    pub t_sys_k: f64,
}

/// Evaluate the detector figures of merit workflow.
pub fn cmd_metrics(cfg: &ExperimentConfig, out: &Path) -> Result<MetricsReport> {
    cfg.validate()?;
    let params = cfg.mode_params()?;
    let qubit = cfg.qubit_params()?;
    let timing = cfg.pulse_timing()?;
    let baths = cfg.bath_populations()?;
    let readout = ReadoutModel::from(&qubit);
    let a0 = readout.a0();

    let kr = params.kappa_r();
    let k = params.kappa_a() * params.kappa_r_c() / (kr * kr);
    let sn = assemble_system_noise(&qubit, &params, &baths, &timing, a0)?;
    let n_r_para = sn.n_para * baths.t_loss() * k;
    let figures = detector_figures(&qubit, &params, &timing, a0, n_r_para)?;

    let report = MetricsReport {
        schema_version: SCHEMA_VERSION,
        a0,
        eta: figures.eta,
        p_dc: figures.p_dc,
        n_r_para,
        eta_prime: figures.eta_prime,
        p_dc_prime: figures.p_dc_prime,
        outperform_ideal: outperform_ratio(figures.eta, figures.p_dc, &params, &timing, 1.0),
        outperform_ideal_parasitic: outperform_ratio(
            figures.eta_prime,
            figures.p_dc_prime,
            &params,
            &timing,
            1.0,
        ),
        outperform_calibrated_parasitic: outperform_ratio(
            figures.eta_prime,
            figures.p_dc_prime,
            &params,
            &timing,
            cfg.precision.n_sys_lin,
        ),
        dynamic_range_db: figures.dynamic_range_db,
        n_para: sn.n_para,
        n_shot: sn.n_shot,
        n_sys: sn.n_sys,
        t_sys_k: temperature_of(params.f_a(), sn.n_sys)?,
    };
    let json =
        serde_json::to_string_pretty(&report).map_err(|e| Error::Config(e.to_string()))?;
    atomic_write(out, format!("{json}\n").as_bytes())?;
    Ok(report)
}
