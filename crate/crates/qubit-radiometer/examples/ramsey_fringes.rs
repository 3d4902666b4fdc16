//! One radiometry measurement from raw fringes: synthesize switch-on and
//! switch-off Ramsey data with shot noise, fit both sinusoids, and recover
//! the effective readout population with its statistical uncertainty.
//!
//!     cargo run --release --example ramsey_fringes

use qubit_radiometer::config::ExperimentConfig;
use qubit_radiometer::dephasing::{invert_gamma_th, mean_dephasing_transmitted};
use qubit_radiometer::ramsey::{
    amp_off, amp_ratio, estimate_n_r_eff, fit_fringe, synth_fringe, ReadoutModel,
};

fn main() -> qubit_radiometer::Result<()> {
    let cfg = ExperimentConfig::default();
    let params = cfg.mode_params()?;
    let qubit = cfg.qubit_params()?;
    let timing = cfg.pulse_timing()?;
    let readout = ReadoutModel::from(&qubit);

    // true dephasing from the transmitted antenna noise on a dressed line
    let delta_a = 0.45 * params.chi();
    let gamma_true = mean_dephasing_transmitted(&params, cfg.baths.n_vts, &timing, delta_a)?;
    let n_true = invert_gamma_th(&params, gamma_true)?;
    println!(
        "# truth: average dephasing rate {:.3e} 1/s -> n_r_eff = {:.5}",
        gamma_true, n_true
    );
    println!(
        "# initial contrast A0 = {:.3}, n_rep = {} shots per phase point",
        readout.a0(),
        timing.n_rep()
    );

    let a_off_true = amp_off(&qubit, &timing);
    let a_on_true = a_off_true / amp_ratio(gamma_true, &qubit, &timing);
    let on = synth_fringe(a_on_true, 0.6, &readout, &timing, cfg.seed)?;
    let off = synth_fringe(a_off_true, 0.0, &readout, &timing, cfg.seed + 1)?;

    println!("{:>10} {:>12} {:>12}", "phase", "p_g (on)", "p_g (off)");
    for ((&phi, &pon), &poff) in on
        .phases()
        .iter()
        .zip(on.p_click())
        .zip(off.p_click())
        .step_by(2)
    {
        println!("{phi:>10.3} {pon:>12.4} {poff:>12.4}");
    }

    let fit_on = fit_fringe(&on)?;
    let fit_off = fit_fringe(&off)?;
    println!(
        "# fits: A_on = {:.4} +- {:.4} (phase {:+.3}), A_off = {:.4} +- {:.4}",
        fit_on.amplitude, fit_on.amp_sigma, fit_on.phase_offset, fit_off.amplitude, fit_off.amp_sigma
    );

    let (n_est, sigma) = estimate_n_r_eff(&fit_on, &fit_off, &qubit, &timing, &params)?;
    println!("# recovered n_r_eff = {n_est:.5} +- {sigma:.5} (truth {n_true:.5})");
    println!("# pull = {:+.2} sigma", (n_est - n_true) / sigma);
    Ok(())
}
