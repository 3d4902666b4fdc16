//! Dephasing spectra of the radiometer: effective readout population versus
//! antenna detuning for several converter pump durations.
//!
//!     cargo run --release --example dephasing_spectra

use qubit_radiometer::config::ExperimentConfig;
use qubit_radiometer::dephasing::{eta_table, response_from_eta};

fn main() -> qubit_radiometer::Result<()> {
    let cfg = ExperimentConfig::default();
    let params = cfg.mode_params()?;
    let baths = cfg.bath_populations()?;
    let base = cfg.pulse_timing()?;
    let chi = params.chi();

    let grid: Vec<f64> = (-30..=30).map(|i| i as f64 * 0.1 * chi).collect();
    let tau_ps = [0.54e-6, 1.08e-6, 2.5e-6];

    println!("# dephasing spectra, baths: n_vts = {}, n_ext = {}, n_loss = {}, t_loss = {}, t_leak = {}",
        baths.n_vts(), baths.n_ext(), baths.n_loss(), baths.t_loss(), baths.t_leak());
    println!("{:>12} {:>14} {:>14} {:>14}", "delta/chi", "tau_p=0.54us", "tau_p=1.08us", "tau_p=2.50us");

    let mut columns = Vec::new();
    for &tau_p in &tau_ps {
        let timing = base.with_tau_p(tau_p)?;
        let etas = eta_table(&params, &timing, &grid)?;
        let vals: Vec<f64> = etas
            .iter()
            .map(|&e| response_from_eta(&params, &baths, e))
            .collect();
        columns.push(vals);
    }
    for (i, &d) in grid.iter().enumerate() {
        println!(
            "{:>12.2} {:>14.5} {:>14.5} {:>14.5}",
            d / chi,
            columns[0][i],
            columns[1][i],
            columns[2][i]
        );
    }

    for (vals, tau_p) in columns.iter().zip(tau_ps) {
        let floor = vals[0];
        let peak = vals.iter().cloned().fold(f64::MIN, f64::max);
        let ipk = vals.iter().position(|&v| v == peak).unwrap();
        println!(
            "# tau_p = {:.2} us: floor {:.4}, peak {:.4} at delta = {:+.2} chi",
            tau_p * 1e6,
            floor,
            peak,
            grid[ipk] / chi
        );
    }
    println!("# longer pumps sharpen the dressed-line peaks toward delta = +-chi/2");
    Ok(())
}
