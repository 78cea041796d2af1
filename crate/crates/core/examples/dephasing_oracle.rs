//! Pure dephasing (α = 0): the integrated Bloch equations against the exact
//! decoherence function.
//!
//! cargo run --example dephasing_oracle

use qthermo::dynamics::dephasing_oracle;
use qthermo::witness::coherence;
use qthermo::{integrate, precompute, BlochState, ProbeConfig, QuadratureConfig, SpectralDensity};

fn main() -> qthermo::Result<()> {
    for temperature in [0.0, 0.2] {
        let cfg = ProbeConfig {
            epsilon: 0.5,
            alpha: 0.0,
            temperature,
            sd: SpectralDensity::ohmic(0.05, 1.0)?,
            initial: BlochState::plus(),
            t_end: 30.0,
            dt: 0.01,
        };
        let ks = precompute(
            &cfg.kernel_params()?,
            cfg.t_end,
            cfg.dt,
            &QuadratureConfig::default(),
        )?;
        let ode = coherence(&integrate(&cfg, &ks)?);
        let exact = coherence(&dephasing_oracle(&cfg)?);
        let worst = ode
            .iter()
            .zip(&exact)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        println!(
            "T = {temperature}: C(30) = {:.8} (exact {:.8}), max |error| = {worst:.2e}",
            ode.last().unwrap(),
            exact.last().unwrap()
        );
    }
    Ok(())
}
