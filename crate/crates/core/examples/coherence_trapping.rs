//! Coherence trapping across the mixing parameter: the non-Markovianity
//! witness and the residual |Δx| vanish for pure dephasing and pure
//! dissipation and peak in between.
//!
//! cargo run --release --example coherence_trapping

use qthermo::cli::{RunConfig, Session};

fn main() -> qthermo::Result<()> {
    let mut cfg = RunConfig::default();
    cfg.dt = 0.02;
    cfg.alphas.count = 11;
    let alphas = cfg.alphas.points();
    let mut session = Session::new(cfg)?;
    let sweep = session.alpha_sweep(&alphas, false)?;
    println!(
        "{:>6} {:>12} {:>12} {:>10}",
        "alpha", "N_C", "|dx| steady", "converged"
    );
    for p in &sweep.points {
        let w = &p.witness;
        println!(
            "{:>6.2} {:>12.6} {:>12.6} {:>10}",
            w.alpha, w.n_markov, w.steady_dx_abs, w.steady_converged
        );
    }
    Ok(())
}
