//! Low-temperature scaling of the QFI at early probing times, compared with
//! the exponentially suppressed Markovian benchmark.
//!
//! cargo run --release --example low_temperature_scaling

use qthermo::cli::{RunConfig, Session};
use qthermo::metrology::markov_comparator;

fn main() -> qthermo::Result<()> {
    let mut cfg = RunConfig::default();
    cfg.temperatures.max = 0.05;
    cfg.temperatures.count = 6;
    cfg.temp_times = vec![1.0, 2.0];
    let temps = cfg.temperatures.points();
    let mut session = Session::new(cfg)?;
    let sweep = session.temperature_sweep(&temps)?;
    for (k, t) in sweep.times.iter().enumerate() {
        println!("t = {t}");
        for r in &sweep.results[k] {
            let m = markov_comparator(0.5, r.temperature, 1)?;
            println!(
                "  T = {:.4}  F_Q = {:.4e}  F_Q / F_Markov = {:.3e}",
                r.temperature,
                r.qfi,
                r.qfi / m.fisher
            );
        }
        println!(
            "  slope of log F_Q vs log T: {:.3}",
            sweep.slopes[k].unwrap_or(f64::NAN)
        );
    }
    Ok(())
}
