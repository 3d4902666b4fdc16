//! Radiative cooling and heating seen by classical radiometry: the
//! background-subtracted output spectrum of the antenna resonator turns from
//! a peak into a dip as the external bath is heated past the internal one.
//!
//!     cargo run --release --example radiative_cooling

use qubit_radiometer::antenna::{antenna_population, classical_cooling_spectrum, default_grid};
use qubit_radiometer::config::ExperimentConfig;
use qubit_radiometer::quantities::{bose_einstein, temperature_of};

fn main() -> qubit_radiometer::Result<()> {
    let cfg = ExperimentConfig::default();
    let params = cfg.mode_params()?;
    let baths = cfg.bath_populations()?;
    let n_vts = bose_einstein(params.f_a(), 1.03)?;

    println!(
        "# antenna at {:.4} GHz, gamma = {:.3}, internal bath n_vts = {:.3} (1.03 K)",
        params.f_a() / 1e9,
        params.gamma(),
        n_vts
    );

    let grid = default_grid(&params);
    let settings = [0.0, n_vts, 4.0];
    println!(
        "{:>12} {:>12} {:>12} {:>12}",
        "df (MHz)", "n_add=0", "n_add=n_vts", "n_add=4"
    );
    let spectra: Vec<_> = settings
        .iter()
        .map(|&n_add| classical_cooling_spectrum(&params, n_vts, n_add, &grid))
        .collect::<qubit_radiometer::Result<_>>()?;
    for i in (0..grid.len()).step_by(20) {
        println!(
            "{:>12.3} {:>12.4} {:>12.4} {:>12.4}",
            grid[i] / 1e6,
            spectra[0].values()[i],
            spectra[1].values()[i],
            spectra[2].values()[i]
        );
    }

    for (s, &n_add) in spectra.iter().zip(&settings) {
        let center = s.values()[grid.len() / 2];
        let edge = s.values()[0];
        let regime = if center > edge + 1e-9 {
            "peak (cooling: the mode radiates into a colder line)"
        } else if center < edge - 1e-9 {
            "dip (heating: the line is hotter than the internal bath)"
        } else {
            "flat (equilibrium)"
        };
        println!("# n_add = {n_add:.3}: center {center:.4} vs floor {edge:.4} -> {regime}");
    }

    let b0 = baths.with_n_add(0.0)?;
    let n_a = antenna_population(&params, &b0);
    println!(
        "# resulting antenna-mode population without added noise: n_a = {:.3} (T_a = {:.3} K)",
        n_a,
        temperature_of(params.f_a(), n_a)?
    );
    Ok(())
}
