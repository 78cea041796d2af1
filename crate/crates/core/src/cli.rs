//! Run configuration, kernel cache and the sweep drivers behind the `qthermo`
//! binary. Everything here is usable as a library; the binary only parses
//! flags.

use std::collections::HashMap;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;

use rayon::prelude::*;

use crate::csv::num;
use crate::dynamics::{integrate, BlochState, ProbeConfig, Trajectory};
use crate::error::{Error, Result};
use crate::kernels::{precompute, step_count, KernelParams, KernelSet, QuadratureConfig};
use crate::metrology::{
    loglog_slope, markov_comparator, sensitivity_with, MetrologyResult, Sensitivity, StencilConfig,
    StencilKernels,
};
use crate::plot::{Plot, Series, Style};
use crate::spectral::SpectralDensity;
use crate::witness::{coherence, WitnessReport};

/// Grid spacing of a sweep axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Spacing {
    Linear,
    Log,
}

/// Closed sweep interval sampled at `count` points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRange {
    pub min: f64,
    pub max: f64,
    pub count: usize,
    pub spacing: Spacing,
}

impl SweepRange {
    pub fn points(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.min];
        }
        let last = (self.count - 1) as f64;
        (0..self.count)
            .map(|i| {
                if i + 1 == self.count {
                    return self.max;
                }
                let f = i as f64 / last;
                match self.spacing {
                    Spacing::Linear => self.min + f * (self.max - self.min),
                    Spacing::Log => self.min * (self.max / self.min).powf(f),
                }
            })
            .collect()
    }

    fn validate(&self, name: &str) -> Result<()> {
        let bad = |why: &str| Err(Error::Config(format!("{name} range {self:?}: {why}")));
        if self.count == 0 {
            return bad("empty");
        }
        if !(self.min.is_finite() && self.max.is_finite()) {
            return bad("bounds must be finite");
        }
        if self.count > 1 && !(self.max > self.min) {
            return bad("must be strictly increasing");
        }
        if self.spacing == Spacing::Log && !(self.min > 0.0) {
            return bad("log spacing needs a positive lower bound");
        }
        Ok(())
    }
}

/// Everything a run needs; defaults reproduce the reference scenario
/// (ε = 0.5, T = 0.2, η = 0.05, ω_c = 1, α = 0.5).
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub epsilon: f64,
    pub temperature: f64,
    pub eta: f64,
    pub omega_c: f64,
    pub alpha: f64,
    pub dt: f64,
    pub t_end: f64,
    /// Horizon of the trajectories used for witness and steady-state values.
    pub steady_t_end: f64,
    pub quad: QuadratureConfig,
    pub stencil: StencilConfig,
    pub alphas: SweepRange,
    pub temperatures: SweepRange,
    /// Probing times for Fisher information in α sweeps.
    pub alpha_times: Vec<f64>,
    /// Probing times for Fisher information in temperature sweeps.
    pub temp_times: Vec<f64>,
    /// Upper end of the low-temperature slope fit.
    pub fit_temp_max: f64,
    pub rise_tol: f64,
    pub window_frac: f64,
    pub conv_tol: f64,
    pub out_dir: PathBuf,
    /// Worker threads; 0 uses every core.
    pub workers: usize,
    pub svg: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            epsilon: 0.5,
            temperature: 0.2,
            eta: 0.05,
            omega_c: 1.0,
            alpha: 0.5,
            dt: 0.01,
            t_end: 50.0,
            steady_t_end: 200.0,
            quad: QuadratureConfig::default(),
            stencil: StencilConfig::default(),
            alphas: SweepRange {
                min: 0.0,
                max: 1.0,
                count: 21,
                spacing: Spacing::Linear,
            },
            temperatures: SweepRange {
                min: 0.01,
                max: 0.5,
                count: 15,
                spacing: Spacing::Log,
            },
            alpha_times: vec![1.0, 5.0, 20.0, 50.0],
            temp_times: vec![1.0, 2.0, 5.0],
            fit_temp_max: 0.05,
            rise_tol: crate::witness::DEFAULT_RISE_TOL,
            window_frac: crate::witness::DEFAULT_WINDOW_FRAC,
            conv_tol: crate::witness::DEFAULT_CONV_TOL,
            out_dir: PathBuf::from("out"),
            workers: 0,
            svg: false,
        }
    }
}

fn parse_num<T: FromStr>(key: &str, v: &str) -> Result<T> {
    v.trim()
        .parse()
        .map_err(|_| Error::Config(format!("{key}: cannot parse {v:?}")))
}

fn parse_list(key: &str, v: &str) -> Result<Vec<f64>> {
    v.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| parse_num(key, s))
        .collect()
}

fn parse_bool(key: &str, v: &str) -> Result<bool> {
    match v.trim() {
        "true" | "1" | "yes" | "on" => Ok(true),
        "false" | "0" | "no" | "off" => Ok(false),
        _ => Err(Error::Config(format!(
            "{key}: expected a boolean, got {v:?}"
        ))),
    }
}

fn strictly_increasing(name: &str, xs: &[f64]) -> Result<()> {
    if xs.is_empty()
        || xs.windows(2).any(|w| !(w[1] > w[0]))
        || xs.iter().any(|x| !(x.is_finite() && *x > 0.0))
    {
        return Err(Error::Config(format!(
            "{name} must be nonempty, positive and strictly increasing: {xs:?}"
        )));
    }
    Ok(())
}

impl RunConfig {
    /// Sets one `key = value` entry.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        match key.trim() {
            "epsilon" => self.epsilon = parse_num(key, v)?,
            "temperature" | "temp" => self.temperature = parse_num(key, v)?,
            "eta" => self.eta = parse_num(key, v)?,
            "omega_c" => self.omega_c = parse_num(key, v)?,
            "alpha" => self.alpha = parse_num(key, v)?,
            "dt" => self.dt = parse_num(key, v)?,
            "t_end" => self.t_end = parse_num(key, v)?,
            "steady_t_end" => self.steady_t_end = parse_num(key, v)?,
            "rel_tol" => self.quad.rel_tol = parse_num(key, v)?,
            "abs_tol" => self.quad.abs_tol = parse_num(key, v)?,
            "omega_max_factor" => self.quad.omega_max_factor = parse_num(key, v)?,
            "panels_per_oscillation" => self.quad.panels_per_oscillation = parse_num(key, v)?,
            "resonance_guard" => self.quad.resonance_guard = parse_num(key, v)?,
            "max_panels" => self.quad.max_panels = parse_num(key, v)?,
            "delta_rel" => self.stencil.delta_rel = parse_num(key, v)?,
            "alpha_min" => self.alphas.min = parse_num(key, v)?,
            "alpha_max" => self.alphas.max = parse_num(key, v)?,
            "alpha_count" => self.alphas.count = parse_num(key, v)?,
            "temp_min" => self.temperatures.min = parse_num(key, v)?,
            "temp_max" => self.temperatures.max = parse_num(key, v)?,
            "temp_count" => self.temperatures.count = parse_num(key, v)?,
            "temp_spacing" => {
                self.temperatures.spacing = match v {
                    "log" => Spacing::Log,
                    "linear" => Spacing::Linear,
                    _ => {
                        return Err(Error::Config(format!(
                            "temp_spacing: expected log or linear, got {v:?}"
                        )))
                    }
                }
            }
            "alpha_times" => self.alpha_times = parse_list(key, v)?,
            "temp_times" => self.temp_times = parse_list(key, v)?,
            "fit_temp_max" => self.fit_temp_max = parse_num(key, v)?,
            "rise_tol" => self.rise_tol = parse_num(key, v)?,
            "window_frac" => self.window_frac = parse_num(key, v)?,
            "conv_tol" => self.conv_tol = parse_num(key, v)?,
            "out" | "out_dir" => self.out_dir = PathBuf::from(v),
            "workers" => self.workers = parse_num(key, v)?,
            "svg" => self.svg = parse_bool(key, v)?,
            other => {
                return Err(Error::Config(format!(
                    "unknown configuration key {other:?}"
                )))
            }
        }
        Ok(())
    }

    /// Applies a flat `key = value` text (with `#` comments) on top of `self`.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!(
                    "line {}: expected key = value, got {line:?}",
                    n + 1
                ))
            })?;
            self.set(k, v)?;
        }
        Ok(())
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let mut cfg = Self::default();
        cfg.apply_text(&fs::read_to_string(path)?)?;
        Ok(cfg)
    }

    pub fn spectral_density(&self) -> Result<SpectralDensity> {
        SpectralDensity::ohmic(self.eta, self.omega_c)
    }

    pub fn probe(&self, alpha: f64, temperature: f64, t_end: f64) -> Result<ProbeConfig> {
        Ok(ProbeConfig {
            epsilon: self.epsilon,
            alpha,
            temperature,
            sd: self.spectral_density()?,
            initial: BlochState::plus(),
            t_end,
            dt: self.dt,
        })
    }

    /// Smallest grid time at or above every requested probing time.
    fn horizon(&self, times: &[f64]) -> f64 {
        times.iter().cloned().fold(self.dt, f64::max)
    }

    pub fn validate(&self) -> Result<()> {
        self.quad.validate()?;
        self.stencil.validate()?;
        self.probe(self.alpha, self.temperature, self.t_end)?
            .validate()?;
        step_count(self.steady_t_end, self.dt)?;
        self.alphas.validate("alpha")?;
        if self.alphas.min < 0.0 || self.alphas.max > 1.0 {
            return Err(Error::Config("alpha sweep must stay inside [0, 1]".into()));
        }
        self.temperatures.validate("temperature")?;
        if !(self.temperatures.min * (1.0 - 2.0 * self.stencil.delta_rel) > 0.0) {
            return Err(Error::Config(format!(
                "temperature sweep must start above 0 so stencil shifts stay positive, got {}",
                self.temperatures.min
            )));
        }
        strictly_increasing("alpha_times", &self.alpha_times)?;
        strictly_increasing("temp_times", &self.temp_times)?;
        for &t in self.alpha_times.iter().chain(&self.temp_times) {
            step_count(t, self.dt).map_err(|e| Error::Config(format!("probing time {t}: {e}")))?;
        }
        if !(self.fit_temp_max > 0.0) {
            return Err(Error::Config("fit_temp_max must be > 0".into()));
        }
        Ok(())
    }
}

/// Runs `f` on a pool with the configured number of workers.
pub fn with_workers<R: Send>(workers: usize, f: impl FnOnce() -> R + Send) -> Result<R> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(f))
}

type CacheKey = [u64; 11];

/// Process-wide store of kernel tables keyed by bath, gap, temperature, step
/// and quadrature settings. A cached table with a longer horizon serves
/// shorter runs.
#[derive(Default)]
pub struct KernelCache {
    sets: HashMap<CacheKey, Arc<KernelSet>>,
    stencils: HashMap<CacheKey, Arc<StencilKernels>>,
}

fn cache_key(p: &KernelParams, dt: f64, q: &QuadratureConfig, extra: f64) -> CacheKey {
    [
        p.sd.eta().to_bits(),
        p.sd.omega_c().to_bits(),
        p.epsilon.to_bits(),
        p.temperature.to_bits(),
        dt.to_bits(),
        q.rel_tol.to_bits(),
        q.abs_tol.to_bits(),
        q.omega_max_factor.to_bits(),
        q.panels_per_oscillation as u64,
        q.resonance_guard.to_bits() ^ (q.max_panels as u64).rotate_left(17),
        extra.to_bits(),
    ]
}

impl KernelCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.sets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sets.is_empty()
    }

    /// Kernel table covering `[0, horizon]`.
    pub fn kernels(
        &mut self,
        p: &KernelParams,
        horizon: f64,
        dt: f64,
        q: &QuadratureConfig,
    ) -> Result<Arc<KernelSet>> {
        let steps = step_count(horizon, dt)?;
        let key = cache_key(p, dt, q, 0.0);
        if let Some(ks) = self.sets.get(&key) {
            if ks.steps() >= steps {
                return Ok(ks.clone());
            }
        }
        let ks = Arc::new(precompute(p, horizon, dt, q)?);
        self.sets.insert(key, ks.clone());
        Ok(ks)
    }

    /// Base table over exactly `[0, horizon]` plus its four stencil neighbours.
    pub fn stencil(
        &mut self,
        p: &KernelParams,
        horizon: f64,
        dt: f64,
        q: &QuadratureConfig,
        stencil: &StencilConfig,
    ) -> Result<(Arc<KernelSet>, Arc<StencilKernels>)> {
        let steps = step_count(horizon, dt)?;
        let key = cache_key(p, dt, q, stencil.delta_rel);
        let base = self.kernels(p, horizon, dt, q)?;
        let base = if base.steps() == steps {
            base
        } else {
            Arc::new(base.truncated(steps)?)
        };
        if let Some(st) = self.stencils.get(&key) {
            if st.sets[0].steps() == steps {
                return Ok((base, st.clone()));
            }
        }
        let st = Arc::new(StencilKernels::build(&base, stencil)?);
        self.stencils.insert(key, st.clone());
        Ok((base, st))
    }
}

/// One point of an α sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct AlphaPoint {
    pub witness: WitnessReport,
    /// Fisher information at each requested probing time.
    pub fisher: Vec<MetrologyResult>,
    /// `F_Q` on the whole grid up to the last probing time.
    pub qfi_series: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlphaSweep {
    pub times: Vec<f64>,
    pub points: Vec<AlphaPoint>,
}

impl AlphaSweep {
    /// Grid value of α with the largest `F_Q` at probing time index `k`.
    pub fn argmax_qfi(&self, k: usize) -> f64 {
        let best = self
            .points
            .iter()
            .max_by(|a, b| a.fisher[k].qfi.total_cmp(&b.fisher[k].qfi))
            .expect("nonempty sweep");
        best.witness.alpha
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TemperatureSweep {
    pub times: Vec<f64>,
    pub temperatures: Vec<f64>,
    /// Indexed `[time][temperature]`.
    pub results: Vec<Vec<MetrologyResult>>,
    /// Low-temperature log–log slope of `F_Q` per probing time.
    pub slopes: Vec<Option<f64>>,
}

/// A configuration together with its kernel cache.
pub struct Session {
    cfg: RunConfig,
    cache: KernelCache,
}

fn qfi_series(s: &Sensitivity) -> Result<Vec<f64>> {
    s.trajectory
        .states
        .iter()
        .zip(&s.derivative)
        .map(|(d, dd)| crate::metrology::qfi(d, dd))
        .collect()
}

impl Session {
    pub fn new(cfg: RunConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self {
            cfg,
            cache: KernelCache::new(),
        })
    }

    pub fn config(&self) -> &RunConfig {
        &self.cfg
    }

    pub fn cache(&self) -> &KernelCache {
        &self.cache
    }

    fn params(&self, temperature: f64) -> Result<KernelParams> {
        KernelParams::new(self.cfg.spectral_density()?, self.cfg.epsilon, temperature)
    }

    pub fn kernels(&mut self, temperature: f64, horizon: f64) -> Result<Arc<KernelSet>> {
        let p = self.params(temperature)?;
        self.cache.kernels(&p, horizon, self.cfg.dt, &self.cfg.quad)
    }

    /// Trajectory for the configured α and T over `[0, t_end]`.
    pub fn trajectory(&mut self) -> Result<Trajectory> {
        let cfg = self
            .cfg
            .probe(self.cfg.alpha, self.cfg.temperature, self.cfg.t_end)?;
        let ks = self.kernels(cfg.temperature, cfg.t_end)?;
        integrate(&cfg, &ks)
    }

    /// Kernel table at the configured temperature over `[0, t_end]`.
    pub fn kernel_table(&mut self) -> Result<KernelSet> {
        let ks = self.kernels(self.cfg.temperature, self.cfg.t_end)?;
        let steps = step_count(self.cfg.t_end, self.cfg.dt)?;
        if ks.steps() == steps {
            Ok((*ks).clone())
        } else {
            ks.truncated(steps)
        }
    }

    /// Witness and Fisher information at every α of the grid and the
    /// configured temperature. `with_fisher = false` skips the stencil runs.
    pub fn alpha_sweep(&mut self, alphas: &[f64], with_fisher: bool) -> Result<AlphaSweep> {
        let c = self.cfg.clone();
        if c.epsilon > 0.0 {
            let period = 2.0 * std::f64::consts::PI / c.epsilon;
            if c.window_frac * c.steady_t_end < 2.0 * period {
                return Err(Error::Config(format!(
                    "steady-state window {} x {} is shorter than two precession periods ({})",
                    c.window_frac,
                    c.steady_t_end,
                    2.0 * period
                )));
            }
        }
        let temp = c.temperature;
        let fisher_end = c.horizon(&c.alpha_times);
        let base_long = self.kernels(temp, c.steady_t_end.max(fisher_end))?;
        let stencil = if with_fisher {
            let p = self.params(temp)?;
            Some(
                self.cache
                    .stencil(&p, fisher_end, c.dt, &c.quad, &c.stencil)?,
            )
        } else {
            None
        };
        let points: Result<Vec<AlphaPoint>> = alphas
            .par_iter()
            .map(|&alpha| {
                let steady = integrate(&c.probe(alpha, temp, c.steady_t_end)?, &base_long)?;
                let witness =
                    WitnessReport::analyze(&steady, c.rise_tol, c.window_frac, c.conv_tol)?;
                let (fisher, qfi_series) = match &stencil {
                    Some((base, st)) => {
                        let sens = sensitivity_with(&c.probe(alpha, temp, fisher_end)?, base, st)?;
                        (
                            MetrologyResult::at_times(&sens, &c.alpha_times)?,
                            qfi_series(&sens)?,
                        )
                    }
                    None => (Vec::new(), Vec::new()),
                };
                Ok(AlphaPoint {
                    witness,
                    fisher,
                    qfi_series,
                })
            })
            .collect();
        Ok(AlphaSweep {
            times: c.alpha_times.clone(),
            points: points?,
        })
    }

    /// Fisher information over the temperature grid at the configured α.
    pub fn temperature_sweep(&mut self, temperatures: &[f64]) -> Result<TemperatureSweep> {
        let c = self.cfg.clone();
        let horizon = c.horizon(&c.temp_times);
        let mut per_temp = Vec::with_capacity(temperatures.len());
        for &temp in temperatures {
            let p = self.params(temp)?;
            let (base, st) = self.cache.stencil(&p, horizon, c.dt, &c.quad, &c.stencil)?;
            let sens = sensitivity_with(&c.probe(c.alpha, temp, horizon)?, &base, &st)?;
            per_temp.push(MetrologyResult::at_times(&sens, &c.temp_times)?);
        }
        let results: Vec<Vec<MetrologyResult>> = (0..c.temp_times.len())
            .map(|k| per_temp.iter().map(|row| row[k]).collect())
            .collect();
        let slopes = results
            .iter()
            .map(|row| {
                let (xs, ys): (Vec<f64>, Vec<f64>) = row
                    .iter()
                    .filter(|r| r.temperature <= c.fit_temp_max * (1.0 + 1e-12) && r.qfi > 0.0)
                    .map(|r| (r.temperature, r.qfi))
                    .unzip();
                loglog_slope(&xs, &ys).ok()
            })
            .collect();
        Ok(TemperatureSweep {
            times: c.temp_times.clone(),
            temperatures: temperatures.to_vec(),
            results,
            slopes,
        })
    }
}

fn create(dir: &Path, name: &str) -> Result<(PathBuf, BufWriter<File>)> {
    fs::create_dir_all(dir)?;
    let path = dir.join(name);
    Ok((path.clone(), BufWriter::new(File::create(&path)?)))
}

fn write_svg(dir: &Path, name: &str, plot: &Plot) -> Result<PathBuf> {
    let (path, mut w) = create(dir, name)?;
    w.write_all(plot.to_svg().as_bytes())?;
    w.flush()?;
    Ok(path)
}

fn time_label(t: f64) -> String {
    let s = format!("{t}");
    s.replace('-', "m")
}

/// Writes `trajectory.csv` (and SVGs when enabled).
pub fn run_trajectory(session: &mut Session) -> Result<Vec<PathBuf>> {
    let tr = session.trajectory()?;
    let dir = session.cfg.out_dir.clone();
    let (path, mut w) = create(&dir, "trajectory.csv")?;
    tr.write_csv(&mut w)?;
    w.flush()?;
    let mut out = vec![path];
    if session.cfg.svg {
        let c = coherence(&tr);
        let pts = |f: &dyn Fn(usize) -> f64| {
            tr.grid
                .iter()
                .enumerate()
                .map(|(i, &t)| (t, f(i)))
                .collect::<Vec<_>>()
        };
        let plot = Plot::new(
            format!("alpha = {}", tr.config.alpha),
            "t",
            "Bloch components",
        )
        .with(Series::new("C", pts(&|i| c[i])))
        .with(Series::new("dx", pts(&|i| tr.states[i].dx)).styled(Style::Dashed))
        .with(Series::new("dy", pts(&|i| tr.states[i].dy)).styled(Style::Dashed))
        .with(Series::new("dz", pts(&|i| tr.states[i].dz)).styled(Style::Dotted));
        out.push(write_svg(&dir, "trajectory.svg", &plot)?);
    }
    Ok(out)
}

fn write_alpha_sweep(dir: &Path, stem: &str, sweep: &AlphaSweep) -> Result<Vec<PathBuf>> {
    let (path, mut w) = create(dir, &format!("{stem}.csv"))?;
    let with_fisher = sweep.points.first().map_or(false, |p| !p.fisher.is_empty());
    write!(w, "{}", WitnessReport::CSV_HEADER)?;
    if with_fisher {
        for t in &sweep.times {
            write!(w, ",qfi_t{}", time_label(*t))?;
        }
    }
    writeln!(w)?;
    for p in &sweep.points {
        let mut row = Vec::new();
        p.witness.write_csv_row(&mut row)?;
        let row = String::from_utf8(row).expect("ascii csv");
        write!(w, "{}", row.trim_end())?;
        for f in &p.fisher {
            write!(w, ",{}", num(f.qfi))?;
        }
        writeln!(w)?;
    }
    w.flush()?;
    let mut out = vec![path];
    if with_fisher {
        let (path, mut w) = create(dir, &format!("{stem}_fisher.csv"))?;
        writeln!(w, "{}", MetrologyResult::CSV_HEADER)?;
        for p in &sweep.points {
            for f in &p.fisher {
                f.write_csv_row(&mut w)?;
            }
        }
        w.flush()?;
        out.push(path);
    }
    Ok(out)
}

fn alpha_plots(sweep: &AlphaSweep) -> (Plot, Option<Plot>) {
    let nc = sweep
        .points
        .iter()
        .map(|p| (p.witness.alpha, p.witness.n_markov))
        .collect();
    let dx = sweep
        .points
        .iter()
        .map(|p| (p.witness.alpha, p.witness.steady_dx_abs))
        .collect();
    let witness = Plot::new("coherence witness", "alpha", "value")
        .with(Series::new("N_C", nc))
        .with(Series::new("|dx| steady", dx).styled(Style::Dashed));
    let fisher = sweep
        .points
        .first()
        .filter(|p| !p.fisher.is_empty())
        .map(|_| {
            sweep.times.iter().enumerate().fold(
                Plot::new("QFI vs mixing", "alpha", "F_Q").log_y(),
                |plot, (k, t)| {
                    let pts = sweep
                        .points
                        .iter()
                        .map(|p| (p.witness.alpha, p.fisher[k].qfi))
                        .collect();
                    plot.with(Series::new(format!("t = {t}"), pts))
                },
            )
        });
    (witness, fisher)
}

/// Writes `sweep_alpha.csv` and `sweep_alpha_fisher.csv`.
pub fn run_sweep_alpha(session: &mut Session) -> Result<Vec<PathBuf>> {
    let alphas = session.cfg.alphas.points();
    let sweep = session.alpha_sweep(&alphas, true)?;
    let dir = session.cfg.out_dir.clone();
    let mut out = write_alpha_sweep(&dir, "sweep_alpha", &sweep)?;
    if session.cfg.svg {
        let (w, f) = alpha_plots(&sweep);
        out.push(write_svg(&dir, "sweep_alpha_witness.svg", &w)?);
        if let Some(f) = f {
            out.push(write_svg(&dir, "sweep_alpha_qfi.svg", &f)?);
        }
    }
    Ok(out)
}

/// Writes `{stem}.csv` and the low-temperature fit in `{stem}_slopes.csv`.
fn write_temperature_sweep(
    dir: &Path,
    stem: &str,
    sweep: &TemperatureSweep,
    fit_max: f64,
) -> Result<Vec<PathBuf>> {
    let (path, mut w) = create(dir, &format!("{stem}.csv"))?;
    writeln!(w, "{}", MetrologyResult::CSV_HEADER)?;
    for row in &sweep.results {
        for r in row {
            r.write_csv_row(&mut w)?;
        }
    }
    w.flush()?;
    let (slopes, mut w) = create(dir, &format!("{stem}_slopes.csv"))?;
    writeln!(w, "t,T_max,slope")?;
    for (t, s) in sweep.times.iter().zip(&sweep.slopes) {
        let s = s.map_or_else(|| "nan".to_string(), num);
        writeln!(w, "{},{},{s}", num(*t), num(fit_max))?;
    }
    w.flush()?;
    Ok(vec![path, slopes])
}

fn temperature_plots(sweep: &TemperatureSweep, epsilon: f64) -> (Plot, Plot) {
    let mut qfi = Plot::new("QFI vs temperature", "T", "Fisher information")
        .log_x()
        .log_y();
    let mut cfi = Plot::new("measured Fisher information", "T", "F_C")
        .log_x()
        .log_y();
    for (k, t) in sweep.times.iter().enumerate() {
        let row = &sweep.results[k];
        qfi = qfi.with(Series::new(
            format!("F_Q t = {t}"),
            row.iter().map(|r| (r.temperature, r.qfi)).collect(),
        ));
        cfi = cfi
            .with(Series::new(
                format!("x t = {t}"),
                row.iter().map(|r| (r.temperature, r.cfi_x)).collect(),
            ))
            .with(
                Series::new(
                    format!("z t = {t}"),
                    row.iter().map(|r| (r.temperature, r.cfi_z)).collect(),
                )
                .styled(Style::Dashed),
            );
    }
    if let (Some(first), Some(&t0)) = (sweep.results.first(), sweep.temperatures.first()) {
        let scale = first[0].qfi / (t0 * t0);
        let guide = sweep
            .temperatures
            .iter()
            .map(|&t| (t, scale * t * t))
            .collect();
        qfi = qfi.with(Series::new("T^2", guide).styled(Style::Dashed));
    }
    if epsilon > 0.0 {
        let markov = sweep
            .temperatures
            .iter()
            .filter_map(|&t| markov_comparator(epsilon, t, 1).ok().map(|m| (t, m.fisher)))
            .collect();
        qfi = qfi.with(Series::new("Markov", markov).styled(Style::Dotted));
    }
    (qfi, cfi)
}

/// Writes `sweep_temperature.csv` and `sweep_temperature_slopes.csv`.
pub fn run_sweep_temperature(session: &mut Session) -> Result<Vec<PathBuf>> {
    let temps = session.cfg.temperatures.points();
    let sweep = session.temperature_sweep(&temps)?;
    let dir = session.cfg.out_dir.clone();
    let mut out =
        write_temperature_sweep(&dir, "sweep_temperature", &sweep, session.cfg.fit_temp_max)?;
    if session.cfg.svg {
        let (q, c) = temperature_plots(&sweep, session.cfg.epsilon);
        out.push(write_svg(&dir, "sweep_temperature_qfi.svg", &q)?);
        out.push(write_svg(&dir, "sweep_temperature_cfi.svg", &c)?);
    }
    Ok(out)
}

/// Writes `kernels.csv` on `[0, t_end]` at the configured temperature.
pub fn dump_kernels(session: &mut Session) -> Result<Vec<PathBuf>> {
    let ks = session.kernel_table()?;
    let (path, mut w) = create(&session.cfg.out_dir, "kernels.csv")?;
    ks.write_csv(&mut w)?;
    w.flush()?;
    Ok(vec![path])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Figure {
    Fig1,
    Fig2,
    Fig3,
}

impl FromStr for Figure {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fig1" => Ok(Self::Fig1),
            "fig2" => Ok(Self::Fig2),
            "fig3" => Ok(Self::Fig3),
            _ => Err(Error::Config(format!(
                "unknown figure {s:?} (expected fig1, fig2 or fig3)"
            ))),
        }
    }
}

const SHOWCASE_ALPHAS: [f64; 3] = [0.0, 0.5, 1.0];

/// Coherence trapping: equatorial path, `C(t)` for three couplings and the
/// witness across the α grid.
fn reproduce_fig1(session: &mut Session) -> Result<Vec<PathBuf>> {
    let c = session.cfg.clone();
    let dir = c.out_dir.clone();
    let base = session.kernels(c.temperature, c.steady_t_end)?;
    let runs: Result<Vec<Trajectory>> = SHOWCASE_ALPHAS
        .par_iter()
        .map(|&a| integrate(&c.probe(a, c.temperature, c.steady_t_end)?, &base))
        .collect();
    let runs = runs?;
    let mut out = Vec::new();

    let (path, mut w) = create(&dir, "fig1_trajectory.csv")?;
    runs[1].write_csv(&mut w)?;
    w.flush()?;
    out.push(path);

    let (path, mut w) = create(&dir, "fig1_coherence.csv")?;
    writeln!(w, "t,alpha,C")?;
    let coh: Vec<Vec<f64>> = runs.iter().map(coherence).collect();
    for (k, tr) in runs.iter().enumerate() {
        for (i, t) in tr.grid.iter().enumerate() {
            writeln!(w, "{},{},{}", num(*t), num(tr.config.alpha), num(coh[k][i]))?;
        }
    }
    w.flush()?;
    out.push(path);

    let sweep = session.alpha_sweep(&c.alphas.points(), false)?;
    out.extend(write_alpha_sweep(&dir, "fig1_alpha", &sweep)?);

    let eq = runs[1].states.iter().map(|s| (s.dx, s.dy)).collect();
    out.push(write_svg(
        &dir,
        "fig1_equator.svg",
        &Plot::new("equatorial path, alpha = 0.5", "dx", "dy").with(Series::new("path", eq)),
    )?);
    let plot = runs
        .iter()
        .zip(&coh)
        .fold(Plot::new("coherence", "t", "C"), |p, (tr, ck)| {
            p.with(Series::new(
                format!("alpha = {}", tr.config.alpha),
                tr.grid.iter().copied().zip(ck.iter().copied()).collect(),
            ))
        });
    out.push(write_svg(&dir, "fig1_coherence.svg", &plot)?);
    out.push(write_svg(&dir, "fig1_witness.svg", &alpha_plots(&sweep).0)?);
    Ok(out)
}

/// QFI against time for three couplings and against α at the probing times.
fn reproduce_fig2(session: &mut Session) -> Result<Vec<PathBuf>> {
    let c = session.cfg.clone();
    let dir = c.out_dir.clone();
    let sweep = session.alpha_sweep(&c.alphas.points(), true)?;
    let mut out = write_alpha_sweep(&dir, "fig2_alpha", &sweep)?;

    let dt = c.dt;
    let shown: Vec<&AlphaPoint> = SHOWCASE_ALPHAS
        .iter()
        .filter_map(|a| {
            sweep
                .points
                .iter()
                .find(|p| (p.witness.alpha - a).abs() < 1e-12)
        })
        .collect();
    let (path, mut w) = create(&dir, "fig2_qfi_time.csv")?;
    writeln!(w, "t,alpha,qfi")?;
    for p in &shown {
        for (i, q) in p.qfi_series.iter().enumerate() {
            writeln!(
                w,
                "{},{},{}",
                num(i as f64 * dt),
                num(p.witness.alpha),
                num(*q)
            )?;
        }
    }
    w.flush()?;
    out.push(path);

    let time_plot = shown
        .iter()
        .fold(Plot::new("QFI vs time", "t", "F_Q"), |plot, p| {
            let pts = p
                .qfi_series
                .iter()
                .enumerate()
                .map(|(i, q)| (i as f64 * dt, *q))
                .collect();
            plot.with(Series::new(format!("alpha = {}", p.witness.alpha), pts))
        });
    out.push(write_svg(&dir, "fig2_qfi_time.svg", &time_plot)?);
    if let Some(f) = alpha_plots(&sweep).1 {
        out.push(write_svg(&dir, "fig2_qfi_alpha.svg", &f)?);
    }
    Ok(out)
}

/// Low-temperature scaling of the QFI and the measured Fisher information.
fn reproduce_fig3(session: &mut Session) -> Result<Vec<PathBuf>> {
    let c = session.cfg.clone();
    let sweep = session.temperature_sweep(&c.temperatures.points())?;
    let mut out = write_temperature_sweep(&c.out_dir, "fig3_temperature", &sweep, c.fit_temp_max)?;
    let (q, f) = temperature_plots(&sweep, c.epsilon);
    out.push(write_svg(&c.out_dir, "fig3_qfi.svg", &q)?);
    out.push(write_svg(&c.out_dir, "fig3_cfi.svg", &f)?);
    Ok(out)
}

/// Writes the CSV data and SVG plots of one figure.
pub fn reproduce(session: &mut Session, fig: Figure) -> Result<Vec<PathBuf>> {
    match fig {
        Figure::Fig1 => reproduce_fig1(session),
        Figure::Fig2 => reproduce_fig2(session),
        Figure::Fig3 => reproduce_fig3(session),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        RunConfig::default().validate().unwrap();
        let a = RunConfig::default().alphas.points();
        assert_eq!(a.len(), 21);
        assert_eq!(a[0], 0.0);
        assert_eq!(a[20], 1.0);
        assert!((a[10] - 0.5).abs() < 1e-15);
        let t = RunConfig::default().temperatures.points();
        assert_eq!(t[0], 0.01);
        assert_eq!(*t.last().unwrap(), 0.5);
        assert!(t.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn parses_key_value_text() {
        let mut c = RunConfig::default();
        c.apply_text("# scenario\nalpha = 0.25\n temp=0.1 # inline\nalpha_times = 1, 2.5\nsvg = true\ntemp_spacing = linear\n\n")
            .unwrap();
        assert_eq!(c.alpha, 0.25);
        assert_eq!(c.temperature, 0.1);
        assert_eq!(c.alpha_times, vec![1.0, 2.5]);
        assert!(c.svg);
        assert_eq!(c.temperatures.spacing, Spacing::Linear);
        assert!(c.apply_text("bogus = 1").is_err());
        assert!(c.apply_text("alpha 0.3").is_err());
        assert!(c.apply_text("alpha = x").is_err());
    }

    #[test]
    fn rejects_bad_ranges() {
        let mut c = RunConfig::default();
        c.alphas.max = 1.5;
        assert!(c.validate().is_err());
        let mut c = RunConfig::default();
        c.temperatures.min = 0.0;
        assert!(c.validate().is_err());
        let mut c = RunConfig::default();
        c.alpha_times = vec![5.0, 1.0];
        assert!(c.validate().is_err());
        let mut c = RunConfig::default();
        c.temp_times = vec![1.005];
        assert!(c.validate().is_err());
        let mut c = RunConfig::default();
        c.alphas.count = 0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn figure_names() {
        assert_eq!("fig2".parse::<Figure>().unwrap(), Figure::Fig2);
        assert!("fig4".parse::<Figure>().is_err());
    }

    #[test]
    fn cache_serves_shorter_horizons() {
        let mut cfg = RunConfig::default();
        cfg.dt = 0.1;
        let mut s = Session::new(cfg).unwrap();
        let long = s.kernels(0.2, 2.0).unwrap();
        let short = s.kernels(0.2, 1.0).unwrap();
        assert!(Arc::ptr_eq(&long, &short));
        assert_eq!(s.cache().len(), 1);
        s.kernels(0.3, 1.0).unwrap();
        assert_eq!(s.cache().len(), 2);
    }
}
