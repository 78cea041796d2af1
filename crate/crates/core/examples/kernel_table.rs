//! Memory kernels at a few times, checked against the zero-temperature
//! closed forms of R and L.
//!
//! cargo run --example kernel_table

use qthermo::kernels::{evaluate_all, KernelParams, QuadratureConfig};
use qthermo::SpectralDensity;

fn main() -> qthermo::Result<()> {
    let sd = SpectralDensity::ohmic(0.05, 1.0)?;
    let q = QuadratureConfig::default();
    let warm = KernelParams::new(sd, 0.5, 0.2)?;
    let cold = warm.at_temperature(0.0)?;

    println!("T = 0.2");
    println!(
        "{:>6} {:>13} {:>13} {:>13} {:>13} {:>13} {:>13}",
        "t", "R", "K", "L", "X", "F", "G"
    );
    for t in [0.0, 0.5, 1.0, 2.0, 5.0, 10.0, 50.0] {
        let v = evaluate_all(&warm, t, &q)?;
        println!(
            "{t:>6} {:>13.6e} {:>13.6e} {:>13.6e} {:>13.6e} {:>13.6e} {:>13.6e}",
            v.r, v.k, v.l, v.x, v.f, v.g
        );
    }

    println!("\nT = 0 against closed forms");
    for t in [0.1, 1.0, 10.0] {
        let v = evaluate_all(&cold, t, &q)?;
        let r = 0.05 * t / (t * t + 1.0);
        let l = 0.05 * t * t / (1.0 + t * t);
        println!(
            "t = {t:>4}: R rel err {:.1e}, L rel err {:.1e}",
            (v.r - r).abs() / r,
            (v.l - l).abs() / l
        );
    }
    Ok(())
}
