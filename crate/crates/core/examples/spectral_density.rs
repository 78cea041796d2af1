//! Ohmic spectral density and its thermal weight.
//!
//! cargo run --example spectral_density

use qthermo::spectral::{thermal_factor, SpectralDensity};

fn main() -> qthermo::Result<()> {
    let sd = SpectralDensity::ohmic(0.05, 1.0)?;
    println!(
        "{:>8} {:>14} {:>14} {:>14}",
        "omega", "J", "coth T=0.2", "coth T=0.01"
    );
    for w in [0.01, 0.1, 0.5, 1.0, 2.0, 5.0, 20.0] {
        println!(
            "{w:>8} {:>14.6e} {:>14.6} {:>14.6}",
            sd.evaluate(w)?,
            thermal_factor(w, 0.2)?,
            thermal_factor(w, 0.01)?
        );
    }
    // J peaks at the cutoff
    let peak = (1..400).map(|i| i as f64 * 0.01).max_by(|a, b| {
        sd.evaluate(*a)
            .unwrap()
            .total_cmp(&sd.evaluate(*b).unwrap())
    });
    println!("peak of J at omega = {:.2}", peak.unwrap());
    Ok(())
}
