//! Command-line front end for the radiometer toolkit. All real work lives in
//! the library; this binary parses arguments, loads the configuration, and
//! dispatches to the workflows.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use qubit_radiometer::config::{ExperimentConfig, GridSpec};
use qubit_radiometer::workflows::{
    cmd_calibrate, cmd_metrics, cmd_oracle_compare, cmd_spectra, CalibrateInput,
};

#[derive(Parser)]
#[command(
    name = "qubit-radiometer",
    about = "Dephasing-radiometer simulation and analysis workflows",
    version
)]
struct Cli {
    /// Experiment configuration (TOML); built-in reference parameters when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Override the RNG seed from the config.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads for grid scans (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Forward-model dephasing spectra over the configured detuning and
    /// pump-duration grids (CSV).
    Spectra {
        /// Output table path.
        #[arg(long, default_value = "spectra.csv")]
        out: PathBuf,
        /// Evaluate a single pump duration (seconds) instead of the sweep.
        #[arg(long)]
        tau_p: Option<f64>,
    },
    /// Compare the analytic detector response with the master-equation
    /// solution over the detuning grid (CSV + summary on stdout).
    OracleCompare {
        #[arg(long, default_value = "oracle_compare.csv")]
        out: PathBuf,
    },
    /// Extract link transmissions and bath populations from calibration
    /// sweeps (JSON report).
    Calibrate {
        /// Sweep tables in the calibration CSV schema.
        inputs: Vec<PathBuf>,
        /// Generate the sweeps from the configured truth values instead.
        #[arg(long)]
        synthetic: bool,
        /// Repeat the synthetic run over this many seeds and report
        /// recovery statistics.
        #[arg(long)]
        mc_runs: Option<u32>,
        #[arg(long, default_value = "calibration.json")]
        out: PathBuf,
    },
    /// Detector figures of merit, precision ratios, dynamic range, and the
    /// noise budget (JSON report).
    Metrics {
        #[arg(long, default_value = "metrics.json")]
        out: PathBuf,
    },
}

fn run(cli: Cli) -> qubit_radiometer::Result<()> {
    if let Some(jobs) = cli.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| qubit_radiometer::Error::Config(format!("--jobs: {e}")))?;
    }
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::from_path(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }

    match cli.command {
        Command::Spectra { out, tau_p } => {
            if let Some(tp) = tau_p {
                cfg.sweep.tau_p_s = GridSpec::Values { values: vec![tp] };
            }
            let rows = cmd_spectra(&cfg, &out)?;
            eprintln!("wrote {rows} rows to {}", out.display());
        }
        Command::OracleCompare { out } => {
            let summary = cmd_oracle_compare(&cfg, &out)?;
            println!(
                "max |eta_analytic - eta_oracle| in the linear regime (gamma n <= 0.05): {:.6}",
                summary.max_diff_linear_regime
            );
            if let Some(beyond) = summary.max_diff_beyond {
                println!("max deviation beyond the linear regime: {beyond:.6}");
            }
            eprintln!("wrote {} rows to {}", summary.rows, out.display());
        }
        Command::Calibrate {
            inputs,
            synthetic,
            mc_runs,
            out,
        } => {
            if let Some(runs) = mc_runs {
                cfg.calibration.mc_runs = runs;
            }
            let input = if synthetic {
                CalibrateInput::Synthetic
            } else {
                CalibrateInput::Files(inputs)
            };
            let report = cmd_calibrate(&cfg, &input, &out)?;
            println!(
                "t_loss = {:.4} +- {:.4}, t_leak = {:.4} +- {:.4}",
                report.t_loss.value,
                report.t_loss.sigma.unwrap_or(f64::NAN),
                report.t_leak.value,
                report.t_leak.sigma.unwrap_or(f64::NAN)
            );
            println!(
                "n_ext = {:.4} +- {:.4}, n_loss = {:.4} +- {:.4}, n_sys = {:.4}",
                report.n_ext.value,
                report.n_ext.sigma.unwrap_or(f64::NAN),
                report.n_loss.value,
                report.n_loss.sigma.unwrap_or(f64::NAN),
                report.n_sys.value
            );
            if let Some(mc) = &report.mc {
                println!(
                    "2-sigma recovery over {} runs: t_loss {:.1}%, t_leak {:.1}%, n_ext {:.1}%, n_loss {:.1}%",
                    mc.runs,
                    100.0 * mc.within_2_sigma_t_loss,
                    100.0 * mc.within_2_sigma_t_leak,
                    100.0 * mc.within_2_sigma_n_ext,
                    100.0 * mc.within_2_sigma_n_loss
                );
            }
            eprintln!("wrote report to {}", out.display());
        }
        Command::Metrics { out } => {
            let report = cmd_metrics(&cfg, &out)?;
            println!(
                "eta = {:.3}, P_dc = {:.4}; with parasitic background: eta' = {:.3}, P_dc' = {:.4}",
                report.eta, report.p_dc, report.eta_prime, report.p_dc_prime
            );
            println!(
                "outperformance: ideal {:.2}, ideal+parasitic {:.2}, calibrated {:.2}; dynamic range {:.1} dB",
                report.outperform_ideal,
                report.outperform_ideal_parasitic,
                report.outperform_calibrated_parasitic,
                report.dynamic_range_db
            );
            println!(
                "noise budget: n_para = {:.3}, n_shot = {:.3}, n_sys = {:.3} (T_sys = {:.3} K)",
                report.n_para, report.n_shot, report.n_sys, report.t_sys_k
            );
            eprintln!("wrote report to {}", out.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
