//! The radiometer as a single-photon detector: efficiency, dark counts,
//! precision advantage over linear amplification, dynamic range, and the
//! system-noise budget.
//!
//!     cargo run --release --example detector_benchmark

use qubit_radiometer::calibration::assemble_system_noise;
use qubit_radiometer::config::ExperimentConfig;
use qubit_radiometer::metrics::{
    detector_figures, precision_dephasing, precision_linear, PrecisionInputs,
};
use qubit_radiometer::quantities::temperature_of;
use qubit_radiometer::ramsey::ReadoutModel;

fn main() -> qubit_radiometer::Result<()> {
    let cfg = ExperimentConfig::default();
    let params = cfg.mode_params()?;
    let qubit = cfg.qubit_params()?;
    let timing = cfg.pulse_timing()?;
    let baths = cfg.bath_populations()?;
    let a0 = ReadoutModel::from(&qubit).a0();

    let sn = assemble_system_noise(&qubit, &params, &baths, &timing, a0)?;
    let kr = params.kappa_r();
    let n_r_para = sn.n_para * baths.t_loss() * params.kappa_a() * params.kappa_r_c() / (kr * kr);
    let f = detector_figures(&qubit, &params, &timing, a0, n_r_para)?;

    println!("# single-photon-detector figures (window tau_p = {:.2} us)", timing.tau_p() * 1e6);
    println!("quantum efficiency        eta   = {:.4}", f.eta);
    println!("dark-count probability    P_dc  = {:.4}", f.p_dc);
    println!("with parasitic background (n_r_para = {n_r_para:.4}):");
    println!("  eta'  = {:.4}", f.eta_prime);
    println!("  P_dc' = {:.4}  (= R_dc tau_p + P_dc0, R_dc = {:.3e} 1/s)", f.p_dc_prime, f.r_dc);

    println!("\n# precision against linear amplification (equal bandwidth and time)");
    println!("vs ideal quantum-limited amplifier:      {:.2}x", f.outperform(&params, &timing));
    println!(
        "vs ideal amplifier, background included:  {:.2}x",
        f.outperform_parasitic(&params, &timing, 1.0)
    );
    println!(
        "vs calibrated chain (n_sys_lin = {:.2}):   {:.2}x",
        cfg.precision.n_sys_lin,
        f.outperform_parasitic(&params, &timing, cfg.precision.n_sys_lin)
    );

    // absolute precisions after one second of windows
    let shots = (1.0 / timing.tau_p()) as u64;
    let qu = precision_dephasing(&f, &params, &timing, shots)?;
    let lin = precision_linear(&PrecisionInputs::new(1.0, kr, 1.0, 0.0)?);
    println!("\n# one-second integration: dephasing radiometer dn = {qu:.2e}, ideal linear dn = {lin:.2e}");

    println!("\n# dynamic range: {:.1} dB", f.dynamic_range_db);

    println!("\n# noise budget referred to the antenna input");
    println!("n_para = {:.4}", sn.n_para);
    println!("n_shot = {:.4}", sn.n_shot);
    println!(
        "n_sys  = {:.4}  (T_sys = {:.3} K)",
        sn.n_sys,
        temperature_of(params.f_a(), sn.n_sys)?
    );
    Ok(())
}
