//! Full calibration round trip: generate noisy sweep data at known truth
//! values, run the three-step extraction, and compare.
//!
//!     cargo run --release --example calibration_roundtrip

use qubit_radiometer::calibration::Calibrator;
use qubit_radiometer::config::{ExperimentConfig, GridSpec};
use qubit_radiometer::workflows::synth_calibration_records;

fn main() -> qubit_radiometer::Result<()> {
    let mut cfg = ExperimentConfig::default();
    cfg.sweep.delta_a_hz = GridSpec::Values {
        values: vec![
            -18.6e6, -15.5e6, -3.255e6, -2.7125e6, -2.4025e6, -2.0925e6, -1.55e6, -0.775e6,
            0.775e6, 1.55e6, 2.0925e6, 2.4025e6, 2.7125e6, 3.255e6, 15.5e6, 18.6e6,
        ],
    };
    let params = cfg.mode_params()?;
    let truth = cfg.bath_populations()?;
    let calibrator = Calibrator::new(&params)
        .with_far_threshold(cfg.calibration.far_detuning_multiple * params.chi().abs());

    println!(
        "# synthetic sweeps at sigma = {} per point, seed = {}",
        cfg.calibration.noise_sigma, cfg.seed
    );
    let records = synth_calibration_records(&cfg, cfg.seed)?;
    println!(
        "# {} records over {} detunings",
        records.len(),
        cfg.sweep.delta_a_hz.materialize("delta_a_hz")?.len()
    );

    let fit = calibrator.run(&records)?;

    println!("\n# detector response from step A:");
    println!("{:>12} {:>10} {:>10} {:>6}", "delta (MHz)", "eta", "sigma", "ref");
    for pt in &fit.eta {
        println!(
            "{:>12.3} {:>10.4} {:>10.4} {:>6}",
            pt.delta_a / std::f64::consts::TAU / 1e6,
            pt.eta.value,
            pt.eta.sigma,
            if pt.is_reference { "yes" } else { "" }
        );
    }

    println!("\n# recovered parameters:");
    println!("{:>10} {:>12} {:>12} {:>10} {:>8}", "param", "estimate", "sigma", "truth", "pull");
    for (name, m, tv) in [
        ("t_loss", fit.t_loss, truth.t_loss()),
        ("t_leak", fit.t_leak, truth.t_leak()),
        ("n_ext", fit.n_ext, truth.n_ext()),
        ("n_loss", fit.n_loss, truth.n_loss()),
    ] {
        println!(
            "{:>10} {:>12.5} {:>12.5} {:>10.4} {:>+8.2}",
            name,
            m.value,
            m.sigma,
            tv,
            (m.value - tv) / m.sigma
        );
    }
    Ok(())
}
