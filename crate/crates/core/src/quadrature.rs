//! Composite Gauss–Kronrod (7/15) quadrature with adaptive bisection.
//!
//! Each panel is integrated with the 15-point Kronrod rule; the embedded
//! 7-point Gauss–Legendre rule on the same nodes supplies the error estimate
//! `|K15 − G7|`. Integrands are vector valued so several related integrals
//! can share one set of function evaluations.

use crate::error::{Error, Result};

/// Kronrod abscissae on [-1, 1], positive half, descending. Odd entries are
/// the Gauss–Legendre 7-point nodes.
pub const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];

/// Kronrod weights matching `XGK`.
pub const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

/// Gauss weights for `XGK[1]`, `XGK[3]`, `XGK[5]`, `XGK[7]`.
pub const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// Number of nodes per panel.
pub const NODES: usize = 15;

/// Node positions of one panel `[a, b]`, ordered left to right.
pub fn panel_nodes(a: f64, b: f64) -> [f64; NODES] {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut x = [0.0; NODES];
    for k in 0..7 {
        x[k] = center - half * XGK[k];
        x[NODES - 1 - k] = center + half * XGK[k];
    }
    x[7] = center;
    x
}

/// Kronrod and Gauss weights aligned with [`panel_nodes`].
pub const fn panel_weights() -> ([f64; NODES], [f64; NODES]) {
    let mut wk = [0.0; NODES];
    let mut wg = [0.0; NODES];
    let mut k = 0;
    while k < 7 {
        wk[k] = WGK[k];
        wk[NODES - 1 - k] = WGK[k];
        if k % 2 == 1 {
            wg[k] = WG[k / 2];
            wg[NODES - 1 - k] = WG[k / 2];
        }
        k += 1;
    }
    wk[7] = WGK[7];
    wg[7] = WG[3];
    (wk, wg)
}

pub(crate) const WEIGHTS: ([f64; NODES], [f64; NODES]) = panel_weights();

/// Kronrod value and error estimate of one panel for an `N`-vector integrand.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PanelEstimate<const N: usize> {
    pub a: f64,
    pub b: f64,
    pub value: [f64; N],
    pub error: [f64; N],
}

/// Combines 15 integrand samples (in [`panel_nodes`] order) into a panel estimate.
pub fn combine<const N: usize>(a: f64, b: f64, samples: &[[f64; N]; NODES]) -> PanelEstimate<N> {
    let (wk, wg) = &WEIGHTS;
    let half = 0.5 * (b - a);
    let mut kron = [0.0; N];
    let mut gauss = [0.0; N];
    for (j, s) in samples.iter().enumerate() {
        for c in 0..N {
            kron[c] += wk[j] * s[c];
            gauss[c] += wg[j] * s[c];
        }
    }
    let mut value = [0.0; N];
    let mut error = [0.0; N];
    for c in 0..N {
        value[c] = kron[c] * half;
        error[c] = ((kron[c] - gauss[c]) * half).abs();
    }
    PanelEstimate { a, b, value, error }
}

/// Applies the 7/15 rule to `f` on `[a, b]`.
pub fn gk15<const N: usize>(
    f: &mut impl FnMut(f64) -> [f64; N],
    a: f64,
    b: f64,
) -> PanelEstimate<N> {
    let nodes = panel_nodes(a, b);
    let mut samples = [[0.0; N]; NODES];
    for (s, &x) in samples.iter_mut().zip(nodes.iter()) {
        *s = f(x);
    }
    combine(a, b, &samples)
}

/// Absolute/relative tolerance pair; a component is converged when its
/// summed error is at most `max(abs, rel·|value|)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
}

impl Tolerance {
    fn bound(&self, value: f64) -> f64 {
        self.abs.max(self.rel * value.abs())
    }
}

/// Outcome of an adaptive integration.
#[derive(Debug, Clone, PartialEq)]
pub struct Integral<const N: usize> {
    pub value: [f64; N],
    pub error: [f64; N],
    pub panels: usize,
}

/// Refines `panels` by bisection until every component meets `tol`.
///
/// `panels` must tile the integration range in ascending order. The final sum
/// runs left to right over the refined tiling, so results depend only on the
/// inputs and not on refinement history.
pub fn refine<const N: usize>(
    mut panels: Vec<PanelEstimate<N>>,
    f: &mut impl FnMut(f64) -> [f64; N],
    tol: Tolerance,
    max_panels: usize,
) -> std::result::Result<Integral<N>, Integral<N>> {
    loop {
        let (value, error) = totals(&panels);
        let mut worst_ratio = 0.0f64;
        for c in 0..N {
            worst_ratio = worst_ratio.max(error[c] / tol.bound(value[c]));
        }
        if worst_ratio <= 1.0 || !worst_ratio.is_finite() {
            let out = Integral {
                value,
                error,
                panels: panels.len(),
            };
            return if worst_ratio.is_finite() {
                Ok(out)
            } else {
                Err(out)
            };
        }
        if panels.len() >= max_panels {
            return Err(Integral {
                value,
                error,
                panels: panels.len(),
            });
        }
        // bisect the panel contributing most to the worst normalised error
        let mut pick = 0;
        let mut pick_score = -1.0;
        for (i, p) in panels.iter().enumerate() {
            let mut score = 0.0f64;
            for c in 0..N {
                score = score.max(p.error[c] / tol.bound(value[c]));
            }
            if score > pick_score {
                pick_score = score;
                pick = i;
            }
        }
        let p = panels[pick];
        let mid = 0.5 * (p.a + p.b);
        if !(mid > p.a && mid < p.b) {
            return Err(Integral {
                value,
                error,
                panels: panels.len(),
            });
        }
        let left = gk15(f, p.a, mid);
        let right = gk15(f, mid, p.b);
        panels[pick] = left;
        panels.insert(pick + 1, right);
    }
}

fn totals<const N: usize>(panels: &[PanelEstimate<N>]) -> ([f64; N], [f64; N]) {
    let mut value = [0.0; N];
    let mut error = [0.0; N];
    for p in panels {
        for c in 0..N {
            value[c] += p.value[c];
            error[c] += p.error[c];
        }
    }
    (value, error)
}

/// Adaptive integration of `f` over the partition given by `breaks`
/// (ascending, at least two points).
pub fn integrate<const N: usize>(
    mut f: impl FnMut(f64) -> [f64; N],
    breaks: &[f64],
    tol: Tolerance,
    max_panels: usize,
) -> Result<Integral<N>> {
    if breaks.len() < 2 || breaks.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Domain(
            "quadrature breakpoints must be strictly increasing".into(),
        ));
    }
    let panels: Vec<_> = breaks
        .windows(2)
        .map(|w| gk15(&mut f, w[0], w[1]))
        .collect();
    refine(panels, &mut f, tol, max_panels).map_err(|r| Error::Quadrature {
        kernel: "integrand",
        t: f64::NAN,
        estimate: r.error.iter().cloned().fold(0.0, f64::max),
        panels: r.panels,
    })
}

/// Uniform partition of `[a, b]` into `n` panels.
pub fn uniform_breaks(a: f64, b: f64, n: usize) -> Vec<f64> {
    let h = (b - a) / n as f64;
    (0..=n)
        .map(|i| if i == n { b } else { a + i as f64 * h })
        .collect()
}
