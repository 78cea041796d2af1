//! Generalized Bloch equations and their fixed-step integration.

use std::f64::consts::PI;
use std::io::Write;
use std::ops::{Add, Mul, Sub};

use rayon::prelude::*;

use crate::error::{domain, Error, Result};
use crate::kernels::{grid_time, step_count, KernelParams, KernelSet, KernelValues};
use crate::quadrature::{self, Tolerance};
use crate::spectral::{omega_thermal_factor, SpectralDensity};

/// Allowed excess of `|Δ|²` over 1 before a state is declared unphysical.
pub const PHYSICALITY_SLACK: f64 = 1e-8;

/// Bloch vector `(Δx, Δy, Δz)`; also used for its time and temperature derivatives.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BlochState {
    pub dx: f64,
    pub dy: f64,
    pub dz: f64,
}

impl BlochState {
    pub const fn new(dx: f64, dy: f64, dz: f64) -> Self {
        Self { dx, dy, dz }
    }

    /// The |+⟩ state on the equator.
    pub const fn plus() -> Self {
        Self::new(1.0, 0.0, 0.0)
    }

    pub fn norm_sq(&self) -> f64 {
        self.dot(self)
    }

    pub fn dot(&self, o: &Self) -> f64 {
        self.dx * o.dx + self.dy * o.dy + self.dz * o.dz
    }

    pub fn is_finite(&self) -> bool {
        self.dx.is_finite() && self.dy.is_finite() && self.dz.is_finite()
    }

    /// Transverse length `√(Δx² + Δy²)`.
    pub fn transverse(&self) -> f64 {
        self.dx.hypot(self.dy)
    }
}

impl Add for BlochState {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.dx + o.dx, self.dy + o.dy, self.dz + o.dz)
    }
}

impl Sub for BlochState {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::new(self.dx - o.dx, self.dy - o.dy, self.dz - o.dz)
    }
}

impl Mul<f64> for BlochState {
    type Output = Self;
    fn mul(self, s: f64) -> Self {
        Self::new(self.dx * s, self.dy * s, self.dz * s)
    }
}

/// Physical scenario plus time grid for one trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbeConfig {
    pub epsilon: f64,
    pub alpha: f64,
    pub temperature: f64,
    pub sd: SpectralDensity,
    pub initial: BlochState,
    pub t_end: f64,
    pub dt: f64,
}

impl ProbeConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::Config(format!(
                "alpha must lie in [0, 1], got {}",
                self.alpha
            )));
        }
        if !self.initial.is_finite() || self.initial.norm_sq() > 1.0 + PHYSICALITY_SLACK {
            return Err(Error::Config(format!(
                "initial Bloch vector {:?} lies outside the unit ball",
                self.initial
            )));
        }
        step_count(self.t_end, self.dt).map_err(|e| Error::Config(e.to_string()))?;
        self.kernel_params().map(|_| ())
    }

    pub fn kernel_params(&self) -> Result<KernelParams> {
        KernelParams::new(self.sd, self.epsilon, self.temperature)
    }

    pub fn steps(&self) -> Result<usize> {
        step_count(self.t_end, self.dt)
    }
}

/// Coefficients of the α-dependent terms.
#[derive(Debug, Clone, Copy)]
struct Mixing {
    /// 4α(α − 1): interference between the two coupling channels
    cross: f64,
    /// 4(α − 1)²: dephasing channel
    dephasing: f64,
    /// 4α²: dissipative channel
    dissipative: f64,
}

impl Mixing {
    fn new(alpha: f64) -> Self {
        Self {
            cross: 4.0 * alpha * (alpha - 1.0),
            dephasing: 4.0 * (alpha - 1.0) * (alpha - 1.0),
            dissipative: 4.0 * alpha * alpha,
        }
    }
}

#[inline]
fn rhs_mixed(s: &BlochState, k: &KernelValues, eps: f64, m: &Mixing) -> BlochState {
    BlochState {
        dx: -eps * s.dy - m.cross * k.g - m.cross * s.dz * k.k - m.dephasing * s.dx * k.r,
        dy: s.dx * (eps + m.dissipative * k.x) + m.cross * (k.f - k.l)
            - s.dy * (m.dissipative * k.k + m.dephasing * k.r)
            - m.cross * s.dz * k.x,
        dz: -m.dissipative * k.g - m.dissipative * s.dz * k.k - m.cross * s.dx * k.r,
    }
}

/// Time derivative of the Bloch vector for the given kernel values.
pub fn rhs(
    state: &BlochState,
    kernels: &KernelValues,
    epsilon: f64,
    alpha: f64,
) -> Result<BlochState> {
    if !state.is_finite() || !kernels.is_finite() || !epsilon.is_finite() || !alpha.is_finite() {
        return Err(Error::Numeric("non-finite input to Bloch equations".into()));
    }
    Ok(rhs_mixed(state, kernels, epsilon, &Mixing::new(alpha)))
}

/// Bloch vector sampled on the integration grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub grid: Vec<f64>,
    pub states: Vec<BlochState>,
    pub config: ProbeConfig,
}

impl Trajectory {
    pub fn final_state(&self) -> BlochState {
        *self
            .states
            .last()
            .expect("trajectory holds at least the initial state")
    }

    /// State at the grid point nearest to `t`, which must lie on the grid.
    pub fn state_at(&self, t: f64) -> Result<BlochState> {
        let i = grid_index(t, self.config.dt, self.states.len() - 1)?;
        Ok(self.states[i])
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        use crate::csv::num;
        writeln!(out, "t,dx,dy,dz")?;
        for (t, s) in self.grid.iter().zip(&self.states) {
            writeln!(out, "{},{},{},{}", num(*t), num(s.dx), num(s.dy), num(s.dz))?;
        }
        Ok(())
    }
}

/// Index of grid time `t`; errors if `t` is off grid or beyond `steps`.
pub fn grid_index(t: f64, dt: f64, steps: usize) -> Result<usize> {
    let x = t / dt;
    let i = x.round();
    if !(i >= 0.0) || (x - i).abs() > 1e-6 || i as usize > steps {
        return domain(format!(
            "time {t} is not on the grid (dt = {dt}, {steps} steps)"
        ));
    }
    Ok(i as usize)
}

fn check_kernels(cfg: &ProbeConfig, ks: &KernelSet, steps: usize) -> Result<()> {
    let p = ks.params();
    if p.sd != cfg.sd || p.epsilon != cfg.epsilon || p.temperature != cfg.temperature {
        return Err(Error::Config(format!(
            "kernel set built for (eps={}, T={}, {:?}) but probe uses (eps={}, T={}, {:?})",
            p.epsilon, p.temperature, p.sd, cfg.epsilon, cfg.temperature, cfg.sd
        )));
    }
    if ks.dt() != cfg.dt || ks.steps() < steps {
        return Err(Error::Config(format!(
            "kernel grid (dt={}, {} steps) does not cover probe grid (dt={}, {} steps)",
            ks.dt(),
            ks.steps(),
            cfg.dt,
            steps
        )));
    }
    Ok(())
}

/// Classical RK4 with kernel samples taken at `t`, `t + dt/2` and `t + dt`.
pub fn integrate(cfg: &ProbeConfig, ks: &KernelSet) -> Result<Trajectory> {
    cfg.validate()?;
    let steps = cfg.steps()?;
    check_kernels(cfg, ks, steps)?;
    let m = Mixing::new(cfg.alpha);
    let eps = cfg.epsilon;
    let h = cfg.dt;
    let full = ks.values();
    let half = ks.half_values();

    let mut states = Vec::with_capacity(steps + 1);
    let mut s = cfg.initial;
    states.push(s);
    for i in 0..steps {
        let k1 = rhs_mixed(&s, &full[i], eps, &m);
        let k2 = rhs_mixed(&(s + k1 * (0.5 * h)), &half[i], eps, &m);
        let k3 = rhs_mixed(&(s + k2 * (0.5 * h)), &half[i], eps, &m);
        let k4 = rhs_mixed(&(s + k3 * h), &full[i + 1], eps, &m);
        s = s + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
        let t = grid_time(i + 1, h);
        if !s.is_finite() {
            return Err(Error::Numeric(format!(
                "Bloch vector became non-finite at t = {t}"
            )));
        }
        let n2 = s.norm_sq();
        if n2 > 1.0 + PHYSICALITY_SLACK {
            return Err(Error::Unphysical {
                t,
                norm_sq: n2,
                slack: PHYSICALITY_SLACK,
            });
        }
        states.push(s);
    }
    Ok(Trajectory {
        grid: (0..=steps).map(|i| grid_time(i, h)).collect(),
        states,
        config: *cfg,
    })
}

/// Decoherence exponent of the pure-dephasing problem,
/// `Γ(t) = 4 ∫ J(ω) coth(ω/2T) (1 − cos ωt)/ω² dω`.
///
/// Computed by its own frequency quadrature, independent of the kernel tables.
pub fn dephasing_exponent(sd: &SpectralDensity, temperature: f64, t: f64) -> Result<f64> {
    if !(t.is_finite() && t >= 0.0) {
        return domain(format!("time must be finite and >= 0, got {t}"));
    }
    if !(temperature.is_finite() && temperature >= 0.0) {
        return domain(format!(
            "temperature must be finite and >= 0, got {temperature}"
        ));
    }
    if t == 0.0 || sd.eta() == 0.0 {
        return Ok(0.0);
    }
    let wc = sd.omega_c();
    let upper = 45.0 * wc;
    // quarter-period panels for the cos(ωt) factor
    let panels = ((upper / (0.25 * wc)).max(upper * 4.0 * t / (2.0 * PI))).ceil() as usize;
    let integrand = |w: f64| {
        let half_sin = (0.5 * w * t).sin();
        // J coth (1 − cos ωt)/ω² written as (J/ω)(ω coth) · 2 sin²(ωt/2)/ω²
        let v = sd.weight_over_omega(w)
            * omega_thermal_factor(w, temperature, wc)
            * 2.0
            * half_sin
            * half_sin
            / (w * w);
        [4.0 * v]
    };
    let tol = Tolerance {
        abs: 1e-14,
        rel: 1e-12,
    };
    let r = quadrature::integrate(
        integrand,
        &quadrature::uniform_breaks(0.0, upper, panels),
        tol,
        1_000_000,
    )?;
    Ok(r.value[0])
}

/// Analytic trajectory for α = 0: `Δz` is frozen, the transverse vector
/// precesses at `ε` and shrinks by `exp(−Γ(t))`.
pub fn dephasing_oracle(cfg: &ProbeConfig) -> Result<Trajectory> {
    if cfg.alpha != 0.0 {
        return domain(format!(
            "dephasing oracle requires alpha = 0, got {}",
            cfg.alpha
        ));
    }
    cfg.validate()?;
    let steps = cfg.steps()?;
    let grid: Vec<f64> = (0..=steps).map(|i| grid_time(i, cfg.dt)).collect();
    let states: Result<Vec<BlochState>> = grid
        .par_iter()
        .map(|&t| {
            if t == 0.0 {
                return Ok(cfg.initial);
            }
            let decay = (-dephasing_exponent(&cfg.sd, cfg.temperature, t)?).exp();
            let (s, c) = (cfg.epsilon * t).sin_cos();
            let d0 = cfg.initial;
            Ok(BlochState::new(
                decay * (d0.dx * c - d0.dy * s),
                decay * (d0.dx * s + d0.dy * c),
                d0.dz,
            ))
        })
        .collect();
    Ok(Trajectory {
        grid,
        states: states?,
        config: *cfg,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kv(r: f64, k: f64, l: f64, x: f64, f: f64, g: f64) -> KernelValues {
        KernelValues { r, k, l, x, f, g }
    }

    #[test]
    fn pure_dephasing_conserves_population() {
        let k = kv(0.3, 0.2, 0.1, 0.05, 0.07, 0.11);
        for s in [
            BlochState::new(0.3, -0.2, 0.5),
            BlochState::new(0.0, 0.0, 1.0),
        ] {
            let d = rhs(&s, &k, 0.5, 0.0).unwrap();
            assert_eq!(d.dz, 0.0);
        }
    }

    #[test]
    fn free_precession() {
        let d = rhs(&BlochState::plus(), &KernelValues::default(), 0.5, 0.3).unwrap();
        assert_eq!(d, BlochState::new(0.0, 0.5, 0.0));
    }

    #[test]
    fn mixed_coupling_sign() {
        let (r, k, l, x, f, g) = (0.013, 0.021, 0.034, 0.005, 0.017, 0.009);
        let d = rhs(
            &BlochState::new(0.0, 0.0, 1.0),
            &kv(r, k, l, x, f, g),
            0.5,
            0.5,
        )
        .unwrap();
        assert!((d.dx - (g + k)).abs() < 1e-17);
        // dΔy: c_mix (F − L) − c_mix X  with c_mix = −1
        assert!((d.dy - (-(f - l) + x)).abs() < 1e-17);
        // dΔz: −G − K
        assert!((d.dz - (-g - k)).abs() < 1e-17);
    }

    #[test]
    fn cross_terms_vanish_at_endpoints() {
        for alpha in [0.0, 1.0] {
            let m = Mixing::new(alpha);
            assert_eq!(m.cross, 0.0);
            // the inhomogeneous F − L term must drop out exactly
            let d = rhs(
                &BlochState::default(),
                &kv(0.0, 0.0, 0.7, 0.0, 0.3, 0.0),
                0.0,
                alpha,
            )
            .unwrap();
            assert_eq!(d.dy, 0.0);
        }
    }

    #[test]
    fn rejects_non_finite() {
        let bad = kv(f64::NAN, 0.0, 0.0, 0.0, 0.0, 0.0);
        assert!(matches!(
            rhs(&BlochState::plus(), &bad, 0.5, 0.5),
            Err(Error::Numeric(_))
        ));
    }

    #[test]
    fn zero_temperature_exponent_closed_form() {
        let sd = SpectralDensity::ohmic(0.05, 1.0).unwrap();
        for t in [0.5, 3.0, 20.0, 50.0] {
            let g = dephasing_exponent(&sd, 0.0, t).unwrap();
            let exact = 2.0 * 0.05 * (1.0f64 + t * t).ln();
            assert!(
                (g - exact).abs() < 1e-9 * exact.max(1.0),
                "t={t}: {g} vs {exact}"
            );
        }
        assert_eq!(dephasing_exponent(&sd, 0.2, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn oracle_needs_pure_dephasing() {
        let cfg = ProbeConfig {
            epsilon: 0.5,
            alpha: 0.2,
            temperature: 0.0,
            sd: SpectralDensity::ohmic(0.05, 1.0).unwrap(),
            initial: BlochState::plus(),
            t_end: 1.0,
            dt: 0.1,
        };
        assert!(dephasing_oracle(&cfg).is_err());
        let free = ProbeConfig {
            alpha: 0.0,
            sd: SpectralDensity::ohmic(0.0, 1.0).unwrap(),
            ..cfg
        };
        let tr = dephasing_oracle(&free).unwrap();
        assert_eq!(tr.states[0], BlochState::plus());
        let last = tr.final_state();
        assert!((last.dx - 0.5f64.cos()).abs() < 1e-15);
        assert!((last.dy - 0.5f64.sin()).abs() < 1e-15);
    }

    #[test]
    fn config_checks() {
        let cfg = ProbeConfig {
            epsilon: 0.5,
            alpha: 1.5,
            temperature: 0.2,
            sd: SpectralDensity::ohmic(0.05, 1.0).unwrap(),
            initial: BlochState::plus(),
            t_end: 1.0,
            dt: 0.1,
        };
        assert!(cfg.validate().is_err());
        let c = ProbeConfig {
            alpha: 0.5,
            initial: BlochState::new(1.0, 0.5, 0.0),
            ..cfg
        };
        assert!(c.validate().is_err());
        let c = ProbeConfig {
            alpha: 0.5,
            dt: 0.3,
            ..cfg
        };
        assert!(c.validate().is_err());
        assert!(grid_index(0.25, 0.1, 10).is_err());
        assert_eq!(grid_index(0.3, 0.1, 10).unwrap(), 3);
        assert!(grid_index(1.2, 0.1, 10).is_err());
    }
}
