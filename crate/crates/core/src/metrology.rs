//! Temperature sensitivity of the probe: quantum and classical Fisher
//! information, Cramér–Rao bounds and the Markovian comparator.

use std::io::Write;

use rayon::prelude::*;

use crate::dynamics::{
    grid_index, integrate, BlochState, ProbeConfig, Trajectory, PHYSICALITY_SLACK,
};
use crate::error::{domain, Error, Result};
use crate::kernels::{precompute, KernelSet, QuadratureConfig};

/// Step of the temperature finite difference, relative to `T`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StencilConfig {
    pub delta_rel: f64,
}

impl Default for StencilConfig {
    fn default() -> Self {
        Self { delta_rel: 1e-7 }
    }
}

impl StencilConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.delta_rel > 1e-12 && self.delta_rel < 1e-3) {
            return Err(Error::Config(format!(
                "delta_rel must lie in (1e-12, 1e-3), got {}",
                self.delta_rel
            )));
        }
        Ok(())
    }
}

/// Five-point central difference from samples at `x-2h, x-h, x+h, x+2h`.
#[inline]
pub fn central_five(fm2: f64, fm1: f64, fp1: f64, fp2: f64, h: f64) -> f64 {
    ((fm2 - fp2) + 8.0 * (fp1 - fm1)) / (12.0 * h)
}

/// Five-point central derivative of a scalar function.
pub fn derivative(mut f: impl FnMut(f64) -> f64, x: f64, h: f64) -> f64 {
    central_five(f(x - 2.0 * h), f(x - h), f(x + h), f(x + 2.0 * h), h)
}

fn central_five_state(s: [&BlochState; 4], h: f64) -> BlochState {
    BlochState::new(
        central_five(s[0].dx, s[1].dx, s[2].dx, s[3].dx, h),
        central_five(s[0].dy, s[1].dy, s[2].dy, s[3].dy, h),
        central_five(s[0].dz, s[1].dz, s[2].dz, s[3].dz, h),
    )
}

/// Trajectory at `T` together with `∂_T Δ` on every grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct Sensitivity {
    pub trajectory: Trajectory,
    pub derivative: Vec<BlochState>,
}

fn shifts(temperature: f64, stencil: &StencilConfig) -> Result<(f64, [f64; 4])> {
    stencil.validate()?;
    if !(temperature > 0.0) {
        return domain(format!(
            "temperature derivative needs T > 0, got {temperature}"
        ));
    }
    let h = stencil.delta_rel * temperature;
    if temperature - 2.0 * h <= 0.0 {
        return domain(format!(
            "stencil reaches non-positive temperature (T = {temperature}, delta = {h})"
        ));
    }
    Ok((
        h,
        [
            temperature - 2.0 * h,
            temperature - h,
            temperature + h,
            temperature + 2.0 * h,
        ],
    ))
}

/// Kernel sets at the four stencil temperatures around a base set.
#[derive(Debug, Clone, PartialEq)]
pub struct StencilKernels {
    pub step: f64,
    pub sets: [KernelSet; 4],
}

impl StencilKernels {
    /// Rebuilds only the temperature-dependent kernels of `base`.
    pub fn build(base: &KernelSet, stencil: &StencilConfig) -> Result<Self> {
        let (step, temps) = shifts(base.params().temperature, stencil)?;
        let sets: Result<Vec<KernelSet>> = temps
            .par_iter()
            .map(|&t| base.with_temperature(t))
            .collect();
        let sets: [KernelSet; 4] = sets?.try_into().expect("four stencil temperatures");
        Ok(Self { step, sets })
    }

    pub fn temperatures(&self) -> [f64; 4] {
        [0, 1, 2, 3].map(|j| self.sets[j].params().temperature)
    }
}

/// Trajectory at `T` and its temperature derivative from prebuilt stencil kernels.
pub fn sensitivity_with(
    cfg: &ProbeConfig,
    base: &KernelSet,
    stencil: &StencilKernels,
) -> Result<Sensitivity> {
    let trajectory = integrate(cfg, base)?;
    let shifted: Result<Vec<Trajectory>> = stencil
        .sets
        .par_iter()
        .map(|ks| {
            integrate(
                &ProbeConfig {
                    temperature: ks.params().temperature,
                    ..*cfg
                },
                ks,
            )
        })
        .collect();
    let shifted = shifted?;
    let derivative = (0..trajectory.states.len())
        .map(|i| {
            central_five_state(
                [
                    &shifted[0].states[i],
                    &shifted[1].states[i],
                    &shifted[2].states[i],
                    &shifted[3].states[i],
                ],
                stencil.step,
            )
        })
        .collect();
    Ok(Sensitivity {
        trajectory,
        derivative,
    })
}

/// Simulates at `T` and at the four stencil temperatures, reusing the
/// temperature-independent kernels of `base`.
pub fn temperature_sensitivity(
    cfg: &ProbeConfig,
    base: &KernelSet,
    stencil: &StencilConfig,
) -> Result<Sensitivity> {
    cfg.validate()?;
    let steps = cfg.steps()?;
    let base = if base.steps() > steps && base.dt() == cfg.dt {
        base.truncated(steps)?
    } else {
        base.clone()
    };
    let shifted = StencilKernels::build(&base, stencil)?;
    sensitivity_with(cfg, &base, &shifted)
}

/// `∂_T Δ(t_eval)` from four simulations at shifted temperatures.
#[allow(non_snake_case)]
pub fn d_bloch_dT(
    cfg: &ProbeConfig,
    t_eval: f64,
    stencil: &StencilConfig,
    quad: &QuadratureConfig,
) -> Result<BlochState> {
    cfg.validate()?;
    let (h, temps) = shifts(cfg.temperature, stencil)?;
    let i = grid_index(t_eval, cfg.dt, cfg.steps()?)?;
    if i == 0 {
        return Ok(BlochState::default());
    }
    let run = ProbeConfig {
        t_end: t_eval,
        ..*cfg
    };
    // full build at one shifted temperature, noise kernels only for the rest
    let first = precompute(
        &run.kernel_params()?.at_temperature(temps[0])?,
        t_eval,
        cfg.dt,
        quad,
    )?;
    let states: Result<Vec<BlochState>> = temps
        .par_iter()
        .enumerate()
        .map(|(j, &temp)| {
            let ks = if j == 0 {
                first.clone()
            } else {
                first.with_temperature(temp)?
            };
            Ok(integrate(
                &ProbeConfig {
                    temperature: temp,
                    ..run
                },
                &ks,
            )?
            .states[i])
        })
        .collect();
    let s = states?;
    Ok(central_five_state([&s[0], &s[1], &s[2], &s[3]], h))
}

/// Threshold on `|Δ|²` above which the state is treated as pure.
pub const PURE_STATE_THRESHOLD: f64 = 1.0 - 1e-12;

/// Quantum Fisher information of a qubit from its Bloch vector and derivative.
pub fn qfi(delta: &BlochState, ddelta: &BlochState) -> Result<f64> {
    if !delta.is_finite() || !ddelta.is_finite() {
        return Err(Error::Numeric("non-finite Bloch data in QFI".into()));
    }
    let n2 = delta.norm_sq();
    if n2 > 1.0 + PHYSICALITY_SLACK {
        return domain(format!("|Δ|² = {n2} exceeds 1"));
    }
    let d2 = ddelta.norm_sq();
    let proj = delta.dot(ddelta);
    if n2 > PURE_STATE_THRESHOLD {
        if proj.abs() >= 1e-8 * d2.sqrt() && d2 > 0.0 {
            return Err(Error::Numeric(format!(
                "derivative leaves the pure-state sphere (Δ·∂Δ = {proj:e}, |∂Δ| = {:e})",
                d2.sqrt()
            )));
        }
        return Ok(d2);
    }
    Ok(d2 + proj * proj / (1.0 - n2))
}

/// Measured Pauli observable.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X,
    Z,
}

/// Classical Fisher information of a projective Pauli measurement.
pub fn cfi(axis: Axis, delta: &BlochState, ddelta: &BlochState) -> Result<f64> {
    let (a, d) = match axis {
        Axis::X => (delta.dx, ddelta.dx),
        Axis::Z => (delta.dz, ddelta.dz),
    };
    if !a.is_finite() || !d.is_finite() {
        return Err(Error::Numeric("non-finite Bloch data in CFI".into()));
    }
    if a.abs() >= 1.0 {
        if d == 0.0 {
            return Ok(0.0);
        }
        return Err(Error::Numeric(format!(
            "CFI diverges: Δ = {a} with nonzero derivative {d:e}"
        )));
    }
    Ok(d * d / (1.0 - a * a))
}

/// Cramér–Rao bound `1/√(M F)`; infinite for vanishing information.
pub fn qcrb(fisher: f64, shots: u64) -> Result<f64> {
    if !(fisher >= 0.0) || shots == 0 {
        return domain(format!(
            "need F >= 0 and M >= 1, got F = {fisher}, M = {shots}"
        ));
    }
    if fisher == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(1.0 / (shots as f64 * fisher).sqrt())
}

/// Low-temperature Markovian benchmark.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarkovComparator {
    /// `ε² e^(−ε/T) / (2T⁴)`
    pub fisher: f64,
    /// `2T⁴ e^(ε/T) / (M ε²)`
    pub variance_bound: f64,
}

pub fn markov_comparator(epsilon: f64, temperature: f64, shots: u64) -> Result<MarkovComparator> {
    if !(epsilon.is_finite() && epsilon > 0.0) {
        return domain(format!(
            "Markovian comparator needs epsilon > 0, got {epsilon}"
        ));
    }
    if !(temperature.is_finite() && temperature > 0.0) || shots == 0 {
        return domain(format!(
            "need T > 0 and M >= 1, got T = {temperature}, M = {shots}"
        ));
    }
    let t4 = temperature.powi(4);
    let e2 = epsilon * epsilon;
    Ok(MarkovComparator {
        fisher: e2 * (-epsilon / temperature).exp() / (2.0 * t4),
        variance_bound: 2.0 * t4 * (epsilon / temperature).exp() / (shots as f64 * e2),
    })
}

/// Fisher-information summary at one `(t, T, α)` point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetrologyResult {
    pub t: f64,
    pub temperature: f64,
    pub alpha: f64,
    pub qfi: f64,
    pub cfi_x: f64,
    pub cfi_z: f64,
    pub qcrb: f64,
    pub markov_fisher: f64,
}

impl MetrologyResult {
    pub fn evaluate(
        t: f64,
        cfg: &ProbeConfig,
        delta: &BlochState,
        ddelta: &BlochState,
    ) -> Result<Self> {
        let q = qfi(delta, ddelta)?;
        let markov_fisher = if cfg.epsilon > 0.0 {
            markov_comparator(cfg.epsilon, cfg.temperature, 1)?.fisher
        } else {
            f64::NAN
        };
        Ok(Self {
            t,
            temperature: cfg.temperature,
            alpha: cfg.alpha,
            qfi: q,
            cfi_x: cfi(Axis::X, delta, ddelta)?,
            cfi_z: cfi(Axis::Z, delta, ddelta)?,
            qcrb: qcrb(q, 1)?,
            markov_fisher,
        })
    }

    /// One result per requested time of a sensitivity run.
    pub fn at_times(sens: &Sensitivity, times: &[f64]) -> Result<Vec<Self>> {
        let cfg = &sens.trajectory.config;
        let steps = sens.trajectory.states.len() - 1;
        times
            .iter()
            .map(|&t| {
                let i = grid_index(t, cfg.dt, steps)?;
                Self::evaluate(
                    sens.trajectory.grid[i],
                    cfg,
                    &sens.trajectory.states[i],
                    &sens.derivative[i],
                )
            })
            .collect()
    }

    pub const CSV_HEADER: &'static str = "t,T,alpha,qfi,cfi_x,cfi_z,qcrb,markov_fisher";

    pub fn write_csv_row<W: Write>(&self, mut out: W) -> Result<()> {
        use crate::csv::num;
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            num(self.t),
            num(self.temperature),
            num(self.alpha),
            num(self.qfi),
            num(self.cfi_x),
            num(self.cfi_z),
            num(self.qcrb),
            num(self.markov_fisher)
        )?;
        Ok(())
    }
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return domain("slope fit needs at least two paired points");
    }
    if xs.iter().chain(ys).any(|&v| !(v > 0.0) || !v.is_finite()) {
        return domain("slope fit needs positive finite data");
    }
    let n = xs.len() as f64;
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return domain("slope fit needs distinct abscissae");
    }
    Ok(sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::SpectralDensity;
    use proptest::prelude::*;

    #[test]
    fn stencil_exact_for_quartics() {
        let d = derivative(|t| t.powi(4), 1.0, 1e-3);
        assert!((d - 4.0).abs() < 1e-11, "{d}");
        let d = derivative(|t| 3.0 * t.powi(3) - t * t + 2.0, 0.7, 0.05);
        assert!((d - (9.0 * 0.49 - 1.4)).abs() < 1e-12);
    }

    #[test]
    fn stencil_analytic_functions() {
        for x in [0.2f64, 0.5, 1.3] {
            let h = 1e-3;
            let cases: [(&dyn Fn(f64) -> f64, f64); 3] = [
                (&f64::sin, x.cos()),
                (&f64::exp, x.exp()),
                (&|t: f64| t.powi(3), 3.0 * x * x),
            ];
            for (f, exact) in cases {
                let d = derivative(f, x, h);
                assert!(((d - exact) / exact).abs() < 1e-10, "x={x}: {d} vs {exact}");
            }
        }
    }

    #[test]
    fn stencil_config_range() {
        assert!(StencilConfig::default().validate().is_ok());
        assert!(StencilConfig { delta_rel: 1e-2 }.validate().is_err());
        assert!(StencilConfig { delta_rel: 1e-13 }.validate().is_err());
    }

    #[test]
    fn qfi_examples() {
        let z = BlochState::default();
        assert_eq!(qfi(&BlochState::new(0.3, 0.1, 0.2), &z).unwrap(), 0.0);
        assert!((qfi(&z, &BlochState::new(0.1, 0.2, 0.3)).unwrap() - 0.14).abs() < 1e-15);
        let v = qfi(
            &BlochState::new(0.6, 0.0, 0.0),
            &BlochState::new(0.1, 0.0, 0.0),
        )
        .unwrap();
        assert!((v - 0.015625).abs() < 1e-15);
        assert!(qfi(&BlochState::new(1.1, 0.0, 0.0), &z).is_err());
    }

    #[test]
    fn qfi_pure_state_guard() {
        let plus = BlochState::plus();
        assert_eq!(qfi(&plus, &BlochState::default()).unwrap(), 0.0);
        // tangent derivative of a pure state
        assert!((qfi(&plus, &BlochState::new(0.0, 0.3, 0.0)).unwrap() - 0.09).abs() < 1e-15);
        assert!(matches!(
            qfi(&plus, &BlochState::new(0.1, 0.0, 0.0)),
            Err(Error::Numeric(_))
        ));
    }

    #[test]
    fn cfi_examples() {
        let d = BlochState::new(0.0, 0.0, 0.0);
        assert_eq!(
            cfi(Axis::X, &BlochState::new(0.4, 0.0, 0.0), &d).unwrap(),
            0.0
        );
        let v = cfi(
            Axis::X,
            &BlochState::new(0.0, 0.5, 0.0),
            &BlochState::new(0.2, 0.0, 0.0),
        )
        .unwrap();
        assert!((v - 0.04).abs() < 1e-15);
        assert_eq!(cfi(Axis::X, &BlochState::plus(), &d).unwrap(), 0.0);
        assert!(cfi(
            Axis::Z,
            &BlochState::new(0.0, 0.0, -1.0),
            &BlochState::new(0.0, 0.0, 0.1)
        )
        .is_err());
    }

    #[test]
    fn bounds() {
        assert_eq!(qcrb(4.0, 1).unwrap(), 0.5);
        assert!((qcrb(1.0, 100).unwrap() - 0.1).abs() < 1e-16);
        assert_eq!(qcrb(0.0, 1).unwrap(), f64::INFINITY);
        assert!(qcrb(1.0, 0).is_err());
        let m = markov_comparator(0.5, 0.5, 1).unwrap();
        assert!((m.variance_bound - 0.5 * std::f64::consts::E).abs() < 1e-14);
        assert!((m.fisher * m.variance_bound - 1.0).abs() < 1e-14);
        assert!(
            markov_comparator(0.5, 0.01, 1).unwrap().fisher
                < markov_comparator(0.5, 0.05, 1).unwrap().fisher
        );
        assert!(markov_comparator(0.0, 0.5, 1).is_err());
    }

    #[test]
    fn slope_fit() {
        let xs = [0.01, 0.02, 0.04];
        let ys: Vec<f64> = xs.iter().map(|x| 3.0 * x * x).collect();
        assert!((loglog_slope(&xs, &ys).unwrap() - 2.0).abs() < 1e-12);
        assert!(loglog_slope(&xs, &[1.0, 0.0, 1.0]).is_err());
    }

    #[test]
    fn uncoupled_probe_has_no_sensitivity() {
        let cfg = ProbeConfig {
            epsilon: 0.5,
            alpha: 0.5,
            temperature: 0.2,
            sd: SpectralDensity::ohmic(0.0, 1.0).unwrap(),
            initial: BlochState::plus(),
            t_end: 2.0,
            dt: 0.1,
        };
        let d = d_bloch_dT(
            &cfg,
            2.0,
            &StencilConfig::default(),
            &QuadratureConfig::default(),
        )
        .unwrap();
        assert_eq!(d, BlochState::default());
        let low = ProbeConfig {
            temperature: 1e-9,
            ..cfg
        };
        assert!(d_bloch_dT(
            &low,
            2.0,
            &StencilConfig { delta_rel: 1e-4 },
            &QuadratureConfig::default()
        )
        .is_ok());
        let zero = ProbeConfig {
            temperature: 0.0,
            ..cfg
        };
        assert!(d_bloch_dT(
            &zero,
            2.0,
            &StencilConfig::default(),
            &QuadratureConfig::default()
        )
        .is_err());
    }

    fn ball() -> impl Strategy<Value = BlochState> {
        (
            0.0f64..0.999,
            0.0f64..std::f64::consts::PI,
            0.0f64..std::f64::consts::TAU,
        )
            .prop_map(|(r, th, ph)| {
                BlochState::new(
                    r * th.sin() * ph.cos(),
                    r * th.sin() * ph.sin(),
                    r * th.cos(),
                )
            })
    }

    proptest! {
        #[test]
        fn classical_never_exceeds_quantum(s in ball(), a in -1.0f64..1.0, b in -1.0f64..1.0, c in -1.0f64..1.0) {
            let d = BlochState::new(a, b, c);
            let q = qfi(&s, &d).unwrap();
            for axis in [Axis::X, Axis::Z] {
                let f = cfi(axis, &s, &d).unwrap();
                prop_assert!(f >= 0.0);
                prop_assert!(f <= q * (1.0 + 1e-8) + 1e-300);
            }
        }

        #[test]
        fn qfi_at_least_derivative_norm(s in ball(), a in -1.0f64..1.0, b in -1.0f64..1.0) {
            let d = BlochState::new(a, b, 0.3);
            prop_assert!(qfi(&s, &d).unwrap() >= d.norm_sq() * (1.0 - 1e-15));
        }
    }
}
