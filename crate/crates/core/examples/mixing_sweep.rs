//! Quantum Fisher information for temperature against the mixing parameter
//! at several probing times.
//!
//! cargo run --release --example mixing_sweep

use qthermo::cli::{RunConfig, Session};

fn main() -> qthermo::Result<()> {
    let mut cfg = RunConfig::default();
    cfg.alphas.count = 11;
    let alphas = cfg.alphas.points();
    let mut session = Session::new(cfg)?;
    let sweep = session.alpha_sweep(&alphas, true)?;

    print!("{:>6}", "alpha");
    for t in &sweep.times {
        print!(" {:>12}", format!("F_Q(t={t})"));
    }
    println!();
    for p in &sweep.points {
        print!("{:>6.2}", p.witness.alpha);
        for f in &p.fisher {
            print!(" {:>12.5e}", f.qfi);
        }
        println!();
    }
    for (k, t) in sweep.times.iter().enumerate() {
        println!("t = {t}: best alpha {:.2}", sweep.argmax_qfi(k));
    }
    Ok(())
}
