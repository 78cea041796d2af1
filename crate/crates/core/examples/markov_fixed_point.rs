//! Purely dissipative coupling (α = 1) relaxes the population to the thermal
//! value −tanh(ε/2T).
//!
//! cargo run --release --example markov_fixed_point

use qthermo::{integrate, precompute, BlochState, ProbeConfig, QuadratureConfig, SpectralDensity};

fn main() -> qthermo::Result<()> {
    let (eps, temp): (f64, f64) = (0.5, 0.2);
    let target = -(eps / (2.0 * temp)).tanh();
    for eta in [0.01, 0.05] {
        let cfg = ProbeConfig {
            epsilon: eps,
            alpha: 1.0,
            temperature: temp,
            sd: SpectralDensity::ohmic(eta, 1.0)?,
            initial: BlochState::plus(),
            t_end: 200.0,
            dt: 0.05,
        };
        let ks = precompute(
            &cfg.kernel_params()?,
            cfg.t_end,
            cfg.dt,
            &QuadratureConfig::default(),
        )?;
        let tr = integrate(&cfg, &ks)?;
        let dz = tr.final_state().dz;
        println!(
            "eta = {eta}: dz(200) = {dz:.6}, thermal {target:.6}, gap {:.2e}",
            (dz - target).abs()
        );
    }
    Ok(())
}
