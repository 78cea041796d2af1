//! Classical Fisher information of σx and σz measurements against the QFI
//! along one trajectory, with the Cramér–Rao bound.
//!
//! cargo run --release --example measurement_hierarchy

use qthermo::metrology::{temperature_sensitivity, MetrologyResult};
use qthermo::{
    precompute, BlochState, ProbeConfig, QuadratureConfig, SpectralDensity, StencilConfig,
};

fn main() -> qthermo::Result<()> {
    let cfg = ProbeConfig {
        epsilon: 0.5,
        alpha: 0.5,
        temperature: 0.03,
        sd: SpectralDensity::ohmic(0.05, 1.0)?,
        initial: BlochState::plus(),
        t_end: 10.0,
        dt: 0.01,
    };
    let ks = precompute(
        &cfg.kernel_params()?,
        cfg.t_end,
        cfg.dt,
        &QuadratureConfig::default(),
    )?;
    let sens = temperature_sensitivity(&cfg, &ks, &StencilConfig::default())?;
    let rows = MetrologyResult::at_times(&sens, &[0.5, 1.0, 2.0, 5.0, 10.0])?;
    println!(
        "{:>5} {:>12} {:>12} {:>12} {:>12}",
        "t", "F_Q", "F_C x", "F_C z", "dT >="
    );
    for r in rows {
        println!(
            "{:>5} {:>12.4e} {:>12.4e} {:>12.4e} {:>12.4e}",
            r.t, r.qfi, r.cfi_x, r.cfi_z, r.qcrb
        );
    }
    Ok(())
}
