//! Coherence-based non-Markovianity and residual steady-state coherence.

use std::f64::consts::PI;
use std::io::Write;

use crate::dynamics::{Trajectory, PHYSICALITY_SLACK};
use crate::error::{domain, Result};

/// Default threshold below which coherence increments count as jitter.
pub const DEFAULT_RISE_TOL: f64 = 1e-10;
pub const DEFAULT_WINDOW_FRAC: f64 = 0.2;
pub const DEFAULT_CONV_TOL: f64 = 1e-4;

/// l1-norm of coherence, `C = √(Δx² + Δy²)`, per trajectory sample.
pub fn coherence(traj: &Trajectory) -> Vec<f64> {
    traj.states.iter().map(|s| s.transverse()).collect()
}

/// Sum of coherence increments larger than `rise_tol`.
pub fn non_markovianity(coherence: &[f64], rise_tol: f64) -> Result<f64> {
    if coherence.len() < 2 {
        return domain("non-Markovianity needs at least two samples");
    }
    Ok(coherence
        .windows(2)
        .map(|w| w[1] - w[0])
        .filter(|&d| d > rise_tol)
        .fold(0.0, |acc, d| acc + d))
}

/// Long-time `|Δx|` over the trailing `window_frac` of the horizon.
///
/// For ε > 0 the estimate is the average over the whole precession periods at
/// the end of the window; `converged` requires the one-period running average
/// to vary by less than `conv_tol` across the window. For ε = 0 the raw
/// spread of `|Δx|` is tested instead.
pub fn steady_coherence(traj: &Trajectory, window_frac: f64, conv_tol: f64) -> Result<(f64, bool)> {
    if !(window_frac > 0.0 && window_frac <= 1.0) {
        return domain(format!(
            "window fraction must lie in (0, 1], got {window_frac}"
        ));
    }
    let n = traj.states.len() - 1;
    let dt = traj.config.dt;
    let t_end = traj.grid[n];
    let window = window_frac * t_end;
    let start = n - ((window / dt).floor() as usize).min(n);
    let abs_dx: Vec<f64> = traj.states.iter().map(|s| s.dx.abs()).collect();

    let eps = traj.config.epsilon;
    if eps == 0.0 {
        if n - start < 1 {
            return domain("steady-state window holds fewer than two samples");
        }
        let tail = &abs_dx[start..];
        let mean = trapezoid(tail, dt) / ((tail.len() - 1) as f64 * dt);
        let (lo, hi) = tail
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| {
                (a.min(x), b.max(x))
            });
        return Ok((mean, hi - lo < conv_tol));
    }

    let period = 2.0 * PI / eps;
    let whole = (window / period).floor();
    if whole < 2.0 {
        return domain(format!(
            "steady-state window {window} holds {whole} precession periods (need >= 2 of {period})"
        ));
    }
    // running integral of |Δx|
    let mut cum = Vec::with_capacity(n + 1);
    cum.push(0.0);
    for i in 0..n {
        cum.push(cum[i] + 0.5 * dt * (abs_dx[i] + abs_dx[i + 1]));
    }
    let integral_at = |t: f64| {
        let x = (t / dt).clamp(0.0, n as f64);
        let i = (x.floor() as usize).min(n.saturating_sub(1));
        let frac = x - i as f64;
        cum[i] + frac * (cum[i + 1] - cum[i])
    };
    let span = whole * period;
    let value = (cum[n] - integral_at(t_end - span)) / span;

    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in start..=n {
        let t0 = traj.grid[i];
        if t0 + period > t_end {
            break;
        }
        let avg = (integral_at(t0 + period) - cum[i]) / period;
        lo = lo.min(avg);
        hi = hi.max(avg);
    }
    Ok((value, hi - lo < conv_tol))
}

fn trapezoid(y: &[f64], dt: f64) -> f64 {
    y.windows(2).map(|w| 0.5 * dt * (w[0] + w[1])).sum()
}

/// Coherence series and its summary statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct WitnessReport {
    pub alpha: f64,
    pub coherence: Vec<f64>,
    pub n_markov: f64,
    pub steady_dx_abs: f64,
    pub steady_converged: bool,
}

impl WitnessReport {
    pub fn analyze(
        traj: &Trajectory,
        rise_tol: f64,
        window_frac: f64,
        conv_tol: f64,
    ) -> Result<Self> {
        let c = coherence(traj);
        if let Some(bad) = c.iter().position(|&v| v > 1.0 + PHYSICALITY_SLACK) {
            return domain(format!("coherence {} exceeds 1 at sample {bad}", c[bad]));
        }
        let n_markov = non_markovianity(&c, rise_tol)?;
        let (steady_dx_abs, steady_converged) = steady_coherence(traj, window_frac, conv_tol)?;
        Ok(Self {
            alpha: traj.config.alpha,
            coherence: c,
            n_markov,
            steady_dx_abs,
            steady_converged,
        })
    }

    pub fn with_defaults(traj: &Trajectory) -> Result<Self> {
        Self::analyze(
            traj,
            DEFAULT_RISE_TOL,
            DEFAULT_WINDOW_FRAC,
            DEFAULT_CONV_TOL,
        )
    }

    pub const CSV_HEADER: &'static str = "alpha,N_C,steady_dx_abs,converged";

    pub fn write_csv_row<W: Write>(&self, mut out: W) -> Result<()> {
        use crate::csv::num;
        writeln!(
            out,
            "{},{},{},{}",
            num(self.alpha),
            num(self.n_markov),
            num(self.steady_dx_abs),
            self.steady_converged
        )?;
        Ok(())
    }
}
