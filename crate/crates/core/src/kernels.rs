//! Time-dependent Bloch-equation coefficients.
//!
//! The six coefficients are frequency integrals over `[0, ∞)` of the spectral
//! density against trigonometric kernels:
//!
//! ```text
//! R_t = ∫ J coth(ω/2T) sin(tω)/ω
//! K_t = ∫ J coth(ω/2T) [ε sin(εt) cos(tω) − ω cos(εt) sin(tω)] / (ε² − ω²)
//! X_t = ∫ J coth(ω/2T) [−ω sin(εt) sin(tω) − ε cos(εt) cos(tω) + ε] / (ε² − ω²)
//! L_t = ∫ J (1 − cos(tω))/ω
//! F_t = ∫ J [ε sin(εt) sin(tω) + ω cos(εt) cos(tω) − ω] / (ε² − ω²)
//! G_t = ∫ J [ω sin(εt) cos(tω) − ε cos(εt) sin(tω)] / (ε² − ω²)
//! ```
//!
//! `R, K, X` (the "noise" group) carry the thermal factor; `L, F, G` (the
//! "dissipation" group) do not. The two groups share one panel layout and one
//! set of `sin(tω), cos(tω)` evaluations but are refined independently, so the
//! dissipation group is bit-for-bit independent of temperature.
//!
//! Every numerator vanishes at `ω = ε`; within the resonance guard the ratio is
//! replaced by its Taylor series in `u = ω − ε`.

use std::f64::consts::PI;
use std::io::Write;

use rayon::prelude::*;

use crate::error::{domain, Error, Result};
use crate::quadrature::{self, PanelEstimate, Tolerance, NODES};
use crate::spectral::{omega_thermal_factor, SpectralDensity};

/// Physical inputs shared by all six kernels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelParams {
    pub sd: SpectralDensity,
    pub epsilon: f64,
    pub temperature: f64,
}

impl KernelParams {
    pub fn new(sd: SpectralDensity, epsilon: f64, temperature: f64) -> Result<Self> {
        if !(epsilon.is_finite() && epsilon >= 0.0) {
            return domain(format!(
                "qubit splitting must be finite and >= 0, got {epsilon}"
            ));
        }
        if !(temperature.is_finite() && temperature >= 0.0) {
            return domain(format!(
                "temperature must be finite and >= 0, got {temperature}"
            ));
        }
        Ok(Self {
            sd,
            epsilon,
            temperature,
        })
    }

    /// Same bath and splitting at another temperature.
    pub fn at_temperature(&self, temperature: f64) -> Result<Self> {
        Self::new(self.sd, self.epsilon, temperature)
    }
}

/// Numerical controls for the frequency integrals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Hard cap on the integration range, in units of ω_c.
    pub omega_max_factor: f64,
    /// Minimum number of panels per period `2π/t` of the integrand.
    pub panels_per_oscillation: usize,
    /// Half-width of the series region around `ω = ε`, in units of ω_c.
    pub resonance_guard: f64,
    /// Panel budget per group before giving up.
    pub max_panels: usize,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            rel_tol: 1e-9,
            abs_tol: 1e-12,
            omega_max_factor: 60.0,
            panels_per_oscillation: 4,
            resonance_guard: 1e-4,
            max_panels: 200_000,
        }
    }
}

impl QuadratureConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0 && self.abs_tol > 0.0) {
            return domain("quadrature tolerances must be > 0");
        }
        if !(self.omega_max_factor >= 10.0) {
            return domain("omega_max_factor must be >= 10");
        }
        if self.panels_per_oscillation < 2 {
            return domain("panels_per_oscillation must be >= 2");
        }
        if !(self.resonance_guard > 0.0 && self.resonance_guard < 0.1) {
            return domain("resonance_guard must lie in (0, 0.1)");
        }
        if self.max_panels == 0 {
            return domain("max_panels must be positive");
        }
        Ok(())
    }

    fn tolerance(&self) -> Tolerance {
        Tolerance {
            abs: self.abs_tol,
            rel: self.rel_tol,
        }
    }
}

/// The six coefficients at one instant.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct KernelValues {
    pub r: f64,
    pub k: f64,
    pub l: f64,
    pub x: f64,
    pub f: f64,
    pub g: f64,
}

impl KernelValues {
    pub fn as_array(&self) -> [f64; 6] {
        [self.r, self.k, self.l, self.x, self.f, self.g]
    }

    pub fn is_finite(&self) -> bool {
        self.as_array().iter().all(|v| v.is_finite())
    }
}

/// Which kernel groups to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Groups {
    Both,
    Noise,
}

const TAYLOR_TERMS: usize = 5;

/// Numerator `(a0 + a1 ω) sin(tω) + (b0 + b1 ω) cos(tω) + e0 + e1 ω`.
#[derive(Debug, Clone, Copy)]
struct Numerator {
    a0: f64,
    a1: f64,
    b0: f64,
    b1: f64,
    e0: f64,
    e1: f64,
}

impl Numerator {
    #[inline]
    fn eval(&self, w: f64, sin_tw: f64, cos_tw: f64) -> f64 {
        (self.a0 + self.a1 * w) * sin_tw
            + (self.b0 + self.b1 * w) * cos_tw
            + (self.e0 + self.e1 * w)
    }

    /// Taylor coefficients `N⁽ⁿ⁾(ε)/n!`, n = 1..=TAYLOR_TERMS. `N(ε)` is zero.
    fn taylor_at_resonance(&self, eps: f64, t: f64) -> [f64; TAYLOR_TERMS] {
        let theta = eps * t;
        let (s, c) = theta.sin_cos();
        // k-th ω-derivatives of sin(tω), cos(tω) at ω = ε
        let dsin = |k: usize| {
            let p = t.powi(k as i32);
            p * match k % 4 {
                0 => s,
                1 => c,
                2 => -s,
                _ => -c,
            }
        };
        let dcos = |k: usize| {
            let p = t.powi(k as i32);
            p * match k % 4 {
                0 => c,
                1 => -s,
                2 => -c,
                _ => s,
            }
        };
        let a = self.a0 + self.a1 * eps;
        let b = self.b0 + self.b1 * eps;
        let mut out = [0.0; TAYLOR_TERMS];
        let mut fact = 1.0;
        for (i, slot) in out.iter_mut().enumerate() {
            let n = i + 1;
            fact *= n as f64;
            let nf = n as f64;
            let mut d =
                a * dsin(n) + nf * self.a1 * dsin(n - 1) + b * dcos(n) + nf * self.b1 * dcos(n - 1);
            if n == 1 {
                d += self.e1;
            }
            *slot = d / fact;
        }
        out
    }
}

/// Per-time data: sin/cos of εt, the four bracketed numerators, and their
/// resonance series.
struct TimeContext {
    t: f64,
    eps: f64,
    nums: [Numerator; 4],
    taylor: [[f64; TAYLOR_TERMS]; 4],
}

const BR_K: usize = 0;
const BR_X: usize = 1;
const BR_F: usize = 2;
const BR_G: usize = 3;

impl TimeContext {
    fn new(eps: f64, t: f64) -> Self {
        let (s, c) = (eps * t).sin_cos();
        let nums = [
            // K: ε s cos(tω) − c ω sin(tω)
            Numerator {
                a0: 0.0,
                a1: -c,
                b0: eps * s,
                b1: 0.0,
                e0: 0.0,
                e1: 0.0,
            },
            // X: −s ω sin(tω) − ε c cos(tω) + ε
            Numerator {
                a0: 0.0,
                a1: -s,
                b0: -eps * c,
                b1: 0.0,
                e0: eps,
                e1: 0.0,
            },
            // F: ε s sin(tω) + c ω cos(tω) − ω
            Numerator {
                a0: eps * s,
                a1: 0.0,
                b0: 0.0,
                b1: c,
                e0: 0.0,
                e1: -1.0,
            },
            // G: s ω cos(tω) − ε c sin(tω)
            Numerator {
                a0: -eps * c,
                a1: 0.0,
                b0: 0.0,
                b1: s,
                e0: 0.0,
                e1: 0.0,
            },
        ];
        let mut taylor = [[0.0; TAYLOR_TERMS]; 4];
        for (slot, num) in taylor.iter_mut().zip(nums.iter()) {
            *slot = num.taylor_at_resonance(eps, t);
        }
        Self {
            t,
            eps,
            nums,
            taylor,
        }
    }

    /// `N(ω)/(ε² − ω²)` for bracket `j`.
    #[inline]
    fn bracket(&self, j: usize, nf: &NodeFactors, sin_tw: f64, cos_tw: f64) -> f64 {
        if nf.guard {
            let u = nf.u;
            let c = &self.taylor[j];
            let mut poly = c[TAYLOR_TERMS - 1];
            for n in (0..TAYLOR_TERMS - 1).rev() {
                poly = poly * u + c[n];
            }
            // ε² − (ε+u)² = −u (2ε + u)
            -poly / (2.0 * self.eps + u)
        } else {
            self.nums[j].eval(nf.omega, sin_tw, cos_tw) * nf.inv_d
        }
    }
}

/// Time-independent factors at one quadrature node.
#[derive(Debug, Clone, Copy)]
struct NodeFactors {
    omega: f64,
    /// J(ω)/ω
    env: f64,
    /// J(ω)·coth(ω/2T)
    jcoth: f64,
    inv_omega: f64,
    /// 1/((ε − ω)(ε + ω))
    inv_d: f64,
    u: f64,
    guard: bool,
}

/// Integration ranges and guard width derived from the parameters.
#[derive(Debug, Clone, Copy)]
struct Ranges {
    /// Upper limit of the dissipation group (temperature independent).
    upper_dissipation: f64,
    /// Upper limit of the noise group (>= upper_dissipation).
    upper_noise: f64,
    /// Minimum panel count on `[0, upper_dissipation]` (panel width <= ω_c/4).
    min_panels: usize,
    guard: f64,
}

impl Ranges {
    fn new(p: &KernelParams, q: &QuadratureConfig) -> Result<Self> {
        let wc = p.sd.omega_c();
        let eta = p.sd.eta();
        let cap = q.omega_max_factor * wc;
        let step = 0.25 * wc;
        // The tail bounds below hold for ω >= max(2ε, 1):
        //   dissipation integrands <= 5 η e^{−ω/ω_c}
        //   noise integrands       <= 4 η e^{−ω/ω_c} (ω + 2T)
        let start = (2.0 * p.epsilon).max(1.0);
        if start > cap {
            return domain(format!(
                "omega_max_factor {} too small for epsilon {}",
                q.omega_max_factor, p.epsilon
            ));
        }
        let target = 0.1 * q.abs_tol;
        let diss_tail = |w: f64| 5.0 * eta * wc * (-w / wc).exp();
        let noise_tail = |w: f64| 4.0 * eta * wc * (-w / wc).exp() * (w + wc + 2.0 * p.temperature);

        let mut steps = (start / step).ceil() as usize;
        while (steps as f64) * step < cap && diss_tail(steps as f64 * step) >= target {
            steps += 1;
        }
        let upper_dissipation = (steps as f64 * step).min(cap);
        let mut upper_noise = upper_dissipation;
        while upper_noise < cap && noise_tail(upper_noise) >= target {
            upper_noise = (upper_noise + step).min(cap);
        }
        if diss_tail(upper_dissipation) >= q.abs_tol || noise_tail(upper_noise) >= q.abs_tol {
            return domain(format!(
                "neglected tail beyond {cap} exceeds abs_tol; raise omega_max_factor"
            ));
        }
        Ok(Self {
            upper_dissipation,
            upper_noise,
            min_panels: steps.max(1),
            guard: q.resonance_guard * wc,
        })
    }
}

/// Panels between exact phase evaluations.
const PHASE_ANCHOR: usize = 16;

/// Cached node factors for one panel layout.
struct NodeTable {
    panels: usize,
    extra: usize,
    width: f64,
    nodes: Vec<NodeFactors>,
}

/// Evaluates the six kernels, reusing node factors between nearby times.
///
/// Results do not depend on call order or on what was cached: a cold
/// evaluator returns bit-identical values.
pub struct KernelEvaluator {
    params: KernelParams,
    quad: QuadratureConfig,
    ranges: Ranges,
    table: Option<NodeTable>,
}

impl KernelEvaluator {
    pub fn new(params: KernelParams, quad: QuadratureConfig) -> Result<Self> {
        quad.validate()?;
        let ranges = Ranges::new(&params, &quad)?;
        Ok(Self {
            params,
            quad,
            ranges,
            table: None,
        })
    }

    pub fn params(&self) -> &KernelParams {
        &self.params
    }

    fn node_factors(&self, omega: f64) -> NodeFactors {
        let eps = self.params.epsilon;
        let env = self.params.sd.weight_over_omega(omega);
        let wcoth = omega_thermal_factor(omega, self.params.temperature, self.params.sd.omega_c());
        let u = omega - eps;
        let guard = eps > 0.0 && u.abs() < self.ranges.guard;
        NodeFactors {
            omega,
            env,
            jcoth: env * wcoth,
            inv_omega: 1.0 / omega,
            inv_d: 1.0 / ((eps - omega) * (eps + omega)),
            u,
            guard,
        }
    }

    #[inline]
    fn noise_sample(tc: &TimeContext, nf: &NodeFactors, sin_tw: f64, cos_tw: f64) -> [f64; 3] {
        [
            nf.jcoth * sin_tw * nf.inv_omega,
            nf.jcoth * tc.bracket(BR_K, nf, sin_tw, cos_tw),
            nf.jcoth * tc.bracket(BR_X, nf, sin_tw, cos_tw),
        ]
    }

    #[inline]
    fn dissipation_sample(
        tc: &TimeContext,
        nf: &NodeFactors,
        sin_tw: f64,
        cos_tw: f64,
    ) -> [f64; 3] {
        let jw = nf.env * nf.omega;
        [
            nf.env * (1.0 - cos_tw),
            jw * tc.bracket(BR_F, nf, sin_tw, cos_tw),
            jw * tc.bracket(BR_G, nf, sin_tw, cos_tw),
        ]
    }

    fn layout(&self, t: f64) -> (usize, usize, f64) {
        let r = &self.ranges;
        let per_osc = self.quad.panels_per_oscillation as f64;
        let osc = (r.upper_dissipation * per_osc * t / (2.0 * PI)).ceil();
        let panels = if osc.is_finite() && osc > r.min_panels as f64 {
            osc as usize
        } else {
            r.min_panels
        };
        let width = r.upper_dissipation / panels as f64;
        let extra = ((r.upper_noise - r.upper_dissipation) / width)
            .ceil()
            .max(0.0) as usize;
        (panels, extra, width)
    }

    fn ensure_table(&mut self, panels: usize, extra: usize, width: f64) {
        if let Some(tab) = &self.table {
            if tab.panels == panels && tab.extra == extra {
                return;
            }
        }
        let mut nodes = Vec::with_capacity((panels + extra) * NODES);
        for i in 0..panels + extra {
            let (a, b) = chunk_bound(i, panels, width, self.ranges.upper_dissipation);
            for w in quadrature::panel_nodes(a, b) {
                nodes.push(self.node_factors(w));
            }
        }
        self.table = Some(NodeTable {
            panels,
            extra,
            width,
            nodes,
        });
    }

    /// All six kernels at time `t`.
    pub fn evaluate(&mut self, t: f64) -> Result<KernelValues> {
        self.evaluate_groups(t, Groups::Both)
    }

    /// Only `R, K, X`; `L, F, G` are returned as zero.
    pub fn evaluate_noise(&mut self, t: f64) -> Result<KernelValues> {
        self.evaluate_groups(t, Groups::Noise)
    }

    fn evaluate_groups(&mut self, t: f64, groups: Groups) -> Result<KernelValues> {
        if !(t.is_finite() && t >= 0.0) {
            return domain(format!("kernel time must be finite and >= 0, got {t}"));
        }
        if t == 0.0 {
            return Ok(KernelValues::default());
        }
        let (panels, extra, width) = self.layout(t);
        self.ensure_table(panels, extra, width);
        let tc = TimeContext::new(self.params.epsilon, t);
        let tab = self.table.as_ref().expect("table just built");

        let mut noise = Vec::with_capacity(panels + extra);
        let mut diss = Vec::with_capacity(if groups == Groups::Both { panels } else { 0 });
        let mut ns = [[0.0; 3]; NODES];
        let mut ds = [[0.0; 3]; NODES];
        // Panels are uniform, so node j of panel i+1 is node j of panel i
        // shifted by `width`: advance the phases by a rotation and re-anchor
        // every few panels to keep rounding drift below 1e-14.
        let (rot_s, rot_c) = (t * tab.width).sin_cos();
        let mut phase = [(0.0, 0.0); NODES];
        for i in 0..panels + extra {
            let chunk = &tab.nodes[i * NODES..(i + 1) * NODES];
            let with_diss = groups == Groups::Both && i < panels;
            let anchor = i % PHASE_ANCHOR == 0 || i == panels;
            for (j, nf) in chunk.iter().enumerate() {
                phase[j] = if anchor {
                    (t * nf.omega).sin_cos()
                } else {
                    let (s, c) = phase[j];
                    (s * rot_c + c * rot_s, c * rot_c - s * rot_s)
                };
                let (sin_tw, cos_tw) = phase[j];
                ns[j] = Self::noise_sample(&tc, nf, sin_tw, cos_tw);
                if with_diss {
                    ds[j] = Self::dissipation_sample(&tc, nf, sin_tw, cos_tw);
                }
            }
            let a = chunk_bound(i, panels, tab.width, self.ranges.upper_dissipation);
            noise.push(quadrature::combine(a.0, a.1, &ns));
            if with_diss {
                diss.push(quadrature::combine(a.0, a.1, &ds));
            }
        }

        let noise = self.refine_group(noise, &tc, t, "R/K/X", Self::noise_sample)?;
        let mut out = KernelValues {
            r: noise[0],
            k: noise[1],
            x: noise[2],
            ..Default::default()
        };
        if groups == Groups::Both {
            let d = self.refine_group(diss, &tc, t, "L/F/G", Self::dissipation_sample)?;
            out.l = d[0];
            out.f = d[1];
            out.g = d[2];
        }
        Ok(out)
    }

    fn refine_group(
        &self,
        panels: Vec<PanelEstimate<3>>,
        tc: &TimeContext,
        t: f64,
        name: &'static str,
        sample: fn(&TimeContext, &NodeFactors, f64, f64) -> [f64; 3],
    ) -> Result<[f64; 3]> {
        let mut f = |w: f64| {
            let nf = self.node_factors(w);
            let (s, c) = (tc.t * w).sin_cos();
            sample(tc, &nf, s, c)
        };
        match quadrature::refine(panels, &mut f, self.quad.tolerance(), self.quad.max_panels) {
            Ok(r) => Ok(r.value),
            Err(r) => Err(Error::Quadrature {
                kernel: name,
                t,
                estimate: r.error.iter().cloned().fold(0.0, f64::max),
                panels: r.panels,
            }),
        }
    }
}

fn chunk_bound(i: usize, panels: usize, width: f64, upper: f64) -> (f64, f64) {
    if i < panels {
        let a = i as f64 * width;
        let b = if i + 1 == panels {
            upper
        } else {
            (i + 1) as f64 * width
        };
        (a, b)
    } else {
        let k = (i - panels) as f64;
        (upper + k * width, upper + (k + 1.0) * width)
    }
}

/// All six kernels at one time.
pub fn evaluate_all(p: &KernelParams, t: f64, q: &QuadratureConfig) -> Result<KernelValues> {
    KernelEvaluator::new(*p, *q)?.evaluate(t)
}

pub fn kernel_r(p: &KernelParams, t: f64, q: &QuadratureConfig) -> Result<f64> {
    Ok(evaluate_all(p, t, q)?.r)
}

pub fn kernel_k(p: &KernelParams, t: f64, q: &QuadratureConfig) -> Result<f64> {
    Ok(evaluate_all(p, t, q)?.k)
}

pub fn kernel_l(p: &KernelParams, t: f64, q: &QuadratureConfig) -> Result<f64> {
    Ok(evaluate_all(p, t, q)?.l)
}

pub fn kernel_x(p: &KernelParams, t: f64, q: &QuadratureConfig) -> Result<f64> {
    Ok(evaluate_all(p, t, q)?.x)
}

pub fn kernel_f(p: &KernelParams, t: f64, q: &QuadratureConfig) -> Result<f64> {
    Ok(evaluate_all(p, t, q)?.f)
}

pub fn kernel_g(p: &KernelParams, t: f64, q: &QuadratureConfig) -> Result<f64> {
    Ok(evaluate_all(p, t, q)?.g)
}

/// Kernel samples on a uniform grid `{0, dt, …, t_end}` and its midpoints.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelSet {
    params: KernelParams,
    quad: QuadratureConfig,
    dt: f64,
    grid: Vec<f64>,
    values: Vec<KernelValues>,
    half_values: Vec<KernelValues>,
}

const CHUNK: usize = 128;

/// Number of `dt` steps spanning `t_end`.
pub fn step_count(t_end: f64, dt: f64) -> Result<usize> {
    if !(dt > 0.0 && dt.is_finite() && t_end.is_finite() && t_end >= dt) {
        return domain(format!(
            "need 0 < dt <= t_end, got dt = {dt}, t_end = {t_end}"
        ));
    }
    let n = (t_end / dt).round();
    if (n * dt - t_end).abs() > 1e-9 * t_end {
        return domain(format!("t_end = {t_end} is not a multiple of dt = {dt}"));
    }
    Ok(n as usize)
}

/// `i`-th grid time.
#[inline]
pub fn grid_time(i: usize, dt: f64) -> f64 {
    i as f64 * dt
}

/// Midpoint between grid times `i` and `i + 1`.
#[inline]
pub fn half_time(i: usize, dt: f64) -> f64 {
    (i as f64 + 0.5) * dt
}

fn sample_times(steps: usize, dt: f64) -> Vec<f64> {
    (0..2 * steps + 1)
        .map(|j| {
            if j % 2 == 0 {
                grid_time(j / 2, dt)
            } else {
                half_time(j / 2, dt)
            }
        })
        .collect()
}

fn split(samples: Vec<KernelValues>) -> (Vec<KernelValues>, Vec<KernelValues>) {
    let mut values = Vec::with_capacity(samples.len() / 2 + 1);
    let mut half = Vec::with_capacity(samples.len() / 2);
    for (j, v) in samples.into_iter().enumerate() {
        if j % 2 == 0 {
            values.push(v);
        } else {
            half.push(v);
        }
    }
    (values, half)
}

fn eval_chunks(
    params: KernelParams,
    quad: QuadratureConfig,
    times: &[f64],
    noise_only: bool,
) -> Result<Vec<KernelValues>> {
    KernelEvaluator::new(params, quad)?;
    let chunks: Vec<Result<Vec<KernelValues>>> = times
        .par_chunks(CHUNK)
        .map(|chunk| {
            let mut ev = KernelEvaluator::new(params, quad)?;
            chunk
                .iter()
                .map(|&t| {
                    if noise_only {
                        ev.evaluate_noise(t)
                    } else {
                        ev.evaluate(t)
                    }
                })
                .collect()
        })
        .collect();
    let mut out = Vec::with_capacity(times.len());
    for c in chunks {
        out.extend(c?);
    }
    Ok(out)
}

/// Samples all six kernels on `{0, dt, …, t_end}` plus midpoints.
pub fn precompute(
    p: &KernelParams,
    t_end: f64,
    dt: f64,
    q: &QuadratureConfig,
) -> Result<KernelSet> {
    let steps = step_count(t_end, dt)?;
    let times = sample_times(steps, dt);
    let samples = eval_chunks(*p, *q, &times, false)?;
    let (values, half_values) = split(samples);
    Ok(KernelSet {
        params: *p,
        quad: *q,
        dt,
        grid: (0..=steps).map(|i| grid_time(i, dt)).collect(),
        values,
        half_values,
    })
}

impl KernelSet {
    /// Builds a set from externally supplied samples (e.g. synthetic kernels).
    pub fn from_samples(
        params: KernelParams,
        dt: f64,
        values: Vec<KernelValues>,
        half_values: Vec<KernelValues>,
    ) -> Result<Self> {
        if values.len() < 2 || half_values.len() + 1 != values.len() {
            return Err(Error::Config(format!(
                "need N+1 grid samples and N midpoints, got {} and {}",
                values.len(),
                half_values.len()
            )));
        }
        if !(dt > 0.0) {
            return domain("dt must be > 0");
        }
        let steps = values.len() - 1;
        Ok(Self {
            params,
            quad: QuadratureConfig::default(),
            dt,
            grid: (0..=steps).map(|i| grid_time(i, dt)).collect(),
            values,
            half_values,
        })
    }

    /// Rebuilds `R, K, X` at another temperature and reuses `L, F, G`.
    pub fn with_temperature(&self, temperature: f64) -> Result<Self> {
        let params = self.params.at_temperature(temperature)?;
        let times = sample_times(self.steps(), self.dt);
        let noise = eval_chunks(params, self.quad, &times, true)?;
        let (nv, nh) = split(noise);
        let merge = |old: &[KernelValues], new: Vec<KernelValues>| -> Vec<KernelValues> {
            old.iter()
                .zip(new)
                .map(|(o, n)| KernelValues {
                    r: n.r,
                    k: n.k,
                    x: n.x,
                    ..*o
                })
                .collect()
        };
        Ok(Self {
            params,
            quad: self.quad,
            dt: self.dt,
            grid: self.grid.clone(),
            values: merge(&self.values, nv),
            half_values: merge(&self.half_values, nh),
        })
    }

    /// Copy restricted to the first `steps` steps.
    pub fn truncated(&self, steps: usize) -> Result<Self> {
        if steps == 0 || steps > self.steps() {
            return domain(format!("cannot truncate {} steps to {steps}", self.steps()));
        }
        Ok(Self {
            params: self.params,
            quad: self.quad,
            dt: self.dt,
            grid: self.grid[..=steps].to_vec(),
            values: self.values[..=steps].to_vec(),
            half_values: self.half_values[..steps].to_vec(),
        })
    }

    pub fn params(&self) -> &KernelParams {
        &self.params
    }

    pub fn quadrature(&self) -> &QuadratureConfig {
        &self.quad
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn steps(&self) -> usize {
        self.grid.len() - 1
    }

    pub fn t_end(&self) -> f64 {
        grid_time(self.steps(), self.dt)
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn values(&self) -> &[KernelValues] {
        &self.values
    }

    pub fn half_values(&self) -> &[KernelValues] {
        &self.half_values
    }

    /// Writes `t,R,K,L,X,F,G` rows for the grid points.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "t,R,K,L,X,F,G")?;
        for (t, v) in self.grid.iter().zip(&self.values) {
            writeln!(
                out,
                "{},{},{},{},{},{},{}",
                crate::csv::num(*t),
                crate::csv::num(v.r),
                crate::csv::num(v.k),
                crate::csv::num(v.l),
                crate::csv::num(v.x),
                crate::csv::num(v.f),
                crate::csv::num(v.g)
            )?;
        }
        Ok(())
    }
}
