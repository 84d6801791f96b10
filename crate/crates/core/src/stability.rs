//! Isotherms in α: pressure, minima and inflections of `F`, interval
//! classification, lever-rule free energy and the Maxwell cross relation.

use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::numerics::{par_map, richardson_derivative};
use crate::spectral::SpectralOptions;
use crate::thermo::ensemble;

#[derive(Clone, Debug, PartialEq)]
pub struct Isotherm {
    pub t: f64,
    pub alpha: Vec<f64>,
    pub f: Vec<f64>,
    pub valid: Vec<bool>,
}

impl Isotherm {
    pub fn new(t: f64, alpha: Vec<f64>, f: Vec<f64>, valid: Vec<bool>) -> Result<Self> {
        if alpha.len() != f.len() || alpha.len() != valid.len() {
            return Err(Error::InvalidArgument("isotherm arrays differ in length".into()));
        }
        if alpha.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidArgument("alpha grid must be strictly increasing".into()));
        }
        Ok(Isotherm { t, alpha, f, valid })
    }

    /// `F(α)` on the model at temperature `t`; points with `Z <= 0` are marked invalid.
    pub fn compute(p: &ModelParams, t: f64, alpha: &[f64], opts: &SpectralOptions) -> Result<Self> {
        let pts = par_map(alpha, |&a| -> Result<(f64, bool)> {
            let pt = ensemble(&p.with_alpha(a), None, opts)?.potentials(t)?;
            Ok((pt.f, pt.valid()))
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
        let (f, valid) = pts.into_iter().unzip();
        Isotherm::new(t, alpha.to_vec(), f, valid)
    }

    /// Free energy at `a` by linear interpolation of the grid.
    pub fn interpolate(&self, a: f64) -> Result<f64> {
        let n = self.alpha.len();
        if n == 0 || a < self.alpha[0] || a > self.alpha[n - 1] {
            return Err(Error::Domain(format!("alpha {a} outside the isotherm grid")));
        }
        let j = self.alpha.partition_point(|&x| x <= a).clamp(1, n - 1);
        let (a0, a1) = (self.alpha[j - 1], self.alpha[j]);
        let w = (a - a0) / (a1 - a0);
        Ok(self.f[j - 1] * (1.0 - w) + self.f[j] * w)
    }

    /// Every other grid point.
    fn halved(&self) -> Isotherm {
        let pick = |v: &Vec<f64>| v.iter().step_by(2).copied().collect();
        Isotherm {
            t: self.t,
            alpha: pick(&self.alpha),
            f: pick(&self.f),
            valid: self.valid.iter().step_by(2).copied().collect(),
        }
    }
}

/// `p_α = -∂F/∂α` with a Richardson-refined central difference.
pub fn pressure_from<F>(mut free_energy: F, alpha: f64, rel_step: f64) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    let h = rel_step * alpha.abs().max(1e-2);
    let mut err = None;
    let d = richardson_derivative(
        |a| match free_energy(a) {
            Ok(v) => v,
            Err(e) => {
                err.get_or_insert(e);
                f64::NAN
            }
        },
        alpha,
        h,
    );
    match err {
        Some(e) => Err(e),
        None => Ok(-d),
    }
}

/// Free energy at `(T, α)`, refusing points with `Z <= 0`.
pub fn valid_free_energy(p: &ModelParams, t: f64, alpha: f64, opts: &SpectralOptions) -> Result<f64> {
    let pt = ensemble(&p.with_alpha(alpha), None, opts)?.potentials(t)?;
    if !pt.valid() {
        return Err(Error::InvalidPoint(format!("Z <= 0 at T = {t}, alpha = {alpha}")));
    }
    Ok(pt.f)
}

pub fn pressure_alpha(p: &ModelParams, t: f64, alpha: f64, opts: &SpectralOptions) -> Result<f64> {
    pressure_from(|a| valid_free_energy(p, t, a, opts), alpha, 1e-3)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }
}

/// One pair of neighbouring minima and the structure between them.
#[derive(Clone, Debug, PartialEq)]
pub struct Binodal {
    pub interval: Interval,
    /// `F` at the two minima.
    pub f_ends: (f64, f64),
    /// Empty when the two minima enclose no inflection pair.
    pub spinodal: Option<Interval>,
    pub metastable: Vec<Interval>,
    /// `|F2 - F1| / (α2 - α1)`.
    pub pressure: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SpinodalResult {
    pub minima: Vec<f64>,
    pub minima_f: Vec<f64>,
    pub inflections: Vec<f64>,
    pub binodals: Vec<Binodal>,
    /// Stretches between minima interrupted by invalid (`Z <= 0`) points.
    pub indeterminate: Vec<Interval>,
    /// The minima count survived halving the grid.
    pub stable: bool,
}

impl SpinodalResult {
    pub fn spinodal_intervals(&self) -> Vec<Interval> {
        self.binodals.iter().filter_map(|b| b.spinodal).collect()
    }

    /// Metastable and spinodal pieces tile each binodal without overlap.
    pub fn partition_holds(&self, tol: f64) -> bool {
        self.binodals.iter().all(|b| {
            let mut pieces: Vec<Interval> = b.metastable.clone();
            pieces.extend(b.spinodal);
            pieces.sort_by(|x, y| x.lo.total_cmp(&y.lo));
            let covered: f64 = pieces.iter().map(Interval::width).sum();
            let contiguous = pieces.windows(2).all(|w| (w[1].lo - w[0].hi).abs() <= tol);
            let ends = pieces.first().map_or(true, |f| (f.lo - b.interval.lo).abs() <= tol)
                && pieces.last().map_or(true, |l| (l.hi - b.interval.hi).abs() <= tol);
            pieces.iter().all(|i| i.width() >= -tol)
                && contiguous
                && ends
                && (covered - b.interval.width()).abs() <= tol
        })
    }
}

/// Vertex of the parabola through three points, clamped to their span.
fn parabola_vertex(x: [f64; 3], y: [f64; 3]) -> (f64, f64) {
    let d1 = (y[1] - y[0]) / (x[1] - x[0]);
    let d2 = (y[2] - y[1]) / (x[2] - x[1]);
    let c = (d2 - d1) / (x[2] - x[0]);
    if c.abs() < f64::MIN_POSITIVE {
        return (x[1], y[1]);
    }
    let b = d1 - c * (x[0] + x[1]);
    let xv = (-b / (2.0 * c)).clamp(x[0], x[2]);
    (xv, y[0] + d1 * (xv - x[0]) + c * (xv - x[0]) * (xv - x[1]))
}

struct Extrema {
    minima: Vec<(f64, f64)>,
    inflections: Vec<f64>,
}

fn extrema_of_run(a: &[f64], f: &[f64]) -> Extrema {
    let mut minima = Vec::new();
    let mut inflections = Vec::new();
    let n = a.len();
    for i in 1..n.saturating_sub(1) {
        let left = f[i] - f[i - 1];
        let right = f[i + 1] - f[i];
        if left < 0.0 && right >= 0.0 {
            minima.push(parabola_vertex([a[i - 1], a[i], a[i + 1]], [f[i - 1], f[i], f[i + 1]]));
        }
    }
    // second differences live at interior nodes; zero crossings by linear interpolation
    let second: Vec<(f64, f64)> = (1..n.saturating_sub(1))
        .map(|i| {
            let h1 = a[i] - a[i - 1];
            let h2 = a[i + 1] - a[i];
            let c = 2.0 * ((f[i + 1] - f[i]) / h2 - (f[i] - f[i - 1]) / h1) / (h1 + h2);
            (a[i], c)
        })
        .collect();
    for w in second.windows(2) {
        let ((x0, c0), (x1, c1)) = (w[0], w[1]);
        if c0 != 0.0 && c1 != 0.0 && c0.signum() != c1.signum() {
            inflections.push(x0 + (x1 - x0) * c0 / (c0 - c1));
        }
    }
    Extrema { minima, inflections }
}

fn analyze(iso: &Isotherm) -> SpinodalResult {
    let mut out = SpinodalResult::default();
    let n = iso.alpha.len();
    // maximal runs of valid points
    let mut runs: Vec<(usize, usize)> = Vec::new();
    let mut i = 0;
    while i < n {
        if !iso.valid[i] {
            i += 1;
            continue;
        }
        let start = i;
        while i < n && iso.valid[i] {
            i += 1;
        }
        runs.push((start, i));
    }
    let mut run_of_min: Vec<usize> = Vec::new();
    for (r, &(s, e)) in runs.iter().enumerate() {
        let ex = extrema_of_run(&iso.alpha[s..e], &iso.f[s..e]);
        for (x, y) in ex.minima {
            out.minima.push(x);
            out.minima_f.push(y);
            run_of_min.push(r);
        }
        out.inflections.extend(ex.inflections);
    }
    for k in 0..out.minima.len().saturating_sub(1) {
        let (a1, a2) = (out.minima[k], out.minima[k + 1]);
        let interval = Interval { lo: a1, hi: a2 };
        if run_of_min[k] != run_of_min[k + 1] {
            out.indeterminate.push(interval);
            continue;
        }
        let inside: Vec<f64> = out.inflections.iter().copied().filter(|&x| x > a1 && x < a2).collect();
        let (f1, f2) = (out.minima_f[k], out.minima_f[k + 1]);
        let (spinodal, metastable) = match (inside.first(), inside.last()) {
            (Some(&lo), Some(&hi)) if inside.len() >= 2 => (
                Some(Interval { lo, hi }),
                vec![Interval { lo: a1, hi: lo }, Interval { lo: hi, hi: a2 }],
            ),
            _ => (None, vec![interval]),
        };
        out.binodals.push(Binodal {
            interval,
            f_ends: (f1, f2),
            spinodal,
            metastable,
            pressure: ((f2 - f1) / (a2 - a1)).abs(),
        });
    }
    out
}

/// Minima, inflections and interval classification of one isotherm.
pub fn spinodal_analysis(iso: &Isotherm) -> Result<SpinodalResult> {
    if iso.valid.iter().filter(|v| **v).count() < 5 {
        return Err(Error::InvalidArgument("spinodal analysis needs >= 5 valid points".into()));
    }
    let mut res = analyze(iso);
    let coarse = analyze(&iso.halved());
    res.stable = coarse.minima.len() == res.minima.len();
    Ok(res)
}

/// Lever-rule free energy at `alpha` inside a binodal; checked against the
/// homogeneous `F` from the isotherm.
pub fn heterogeneous_free_energy(res: &SpinodalResult, iso: &Isotherm, alpha: f64) -> Result<f64> {
    let b = res
        .binodals
        .iter()
        .find(|b| b.interval.contains(alpha))
        .ok_or_else(|| Error::Domain(format!("alpha {alpha} lies in no binodal")))?;
    let (a1, a2) = (b.interval.lo, b.interval.hi);
    let (f1, f2) = b.f_ends;
    let het = (a2 - alpha) / (a2 - a1) * f1 + (alpha - a1) / (a2 - a1) * f2;
    let hom = iso.interpolate(alpha)?;
    if het > hom + 1e-12 * hom.abs().max(1.0) {
        return Err(Error::Classification(format!(
            "lever rule gives F_het = {het} above F = {hom} at alpha = {alpha}"
        )));
    }
    Ok(het)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MaxwellCheck {
    pub ds_dalpha: f64,
    pub dp_dt: f64,
    pub residual: f64,
    /// The stencil touched a point with `Z <= 0`; the residual is not meaningful.
    pub flagged: bool,
}

/// `∂S/∂α` against `∂p/∂T` for a free-energy surface `F(T, α)` by central differences.
pub fn maxwell_check_fn<F>(free_energy: F, t: f64, alpha: f64, rel_step: f64) -> Result<MaxwellCheck>
where
    F: Fn(f64, f64) -> Result<(f64, bool)>,
{
    let ht = rel_step * t;
    let ha = rel_step * alpha.abs().max(1e-2);
    let mut flagged = false;
    let mut err = None;
    let mut eval = |tt: f64, aa: f64| match free_energy(tt, aa) {
        Ok((f, valid)) => {
            flagged |= !valid;
            f
        }
        Err(e) => {
            err.get_or_insert(e);
            f64::NAN
        }
    };
    // S = -∂F/∂T and p = -∂F/∂α; the mixed partial is symmetric
    let f_pp = eval(t + ht, alpha + ha);
    let f_pm = eval(t + ht, alpha - ha);
    let f_mp = eval(t - ht, alpha + ha);
    let f_mm = eval(t - ht, alpha - ha);
    if let Some(e) = err {
        return Err(e);
    }
    let s = |fa_p: f64, fa_m: f64| -(fa_p - fa_m) / (2.0 * ht);
    let ds_dalpha = (s(f_pp, f_mp) - s(f_pm, f_mm)) / (2.0 * ha);
    let p = |f_p: f64, f_m: f64| -(f_p - f_m) / (2.0 * ha);
    let dp_dt = (p(f_pp, f_pm) - p(f_mp, f_mm)) / (2.0 * ht);
    let scale = ds_dalpha.abs().max(dp_dt.abs()).max(f64::EPSILON);
    Ok(MaxwellCheck { ds_dalpha, dp_dt, residual: (ds_dalpha - dp_dt).abs() / scale, flagged })
}

/// Maxwell check where `∂S/∂α` uses the analytic entropy and `∂p/∂T` the
/// finite-difference pressure, so the two sides are computed independently.
pub fn maxwell_check(p: &ModelParams, t: f64, alpha: f64, opts: &SpectralOptions) -> Result<MaxwellCheck> {
    let rel = 1e-3;
    let ht = rel * t;
    let ha = rel * alpha.abs().max(1e-2);
    let mut flagged = false;
    let mut point = |tt: f64, aa: f64| -> Result<crate::thermo::ThermoPoint> {
        let pt = ensemble(&p.with_alpha(aa), None, opts)?.potentials(tt)?;
        flagged |= !pt.valid();
        Ok(pt)
    };
    let ds_dalpha = (point(t, alpha + ha)?.s - point(t, alpha - ha)?.s) / (2.0 * ha);
    let mut pressure = |tt: f64| -> Result<f64> {
        Ok(-(point(tt, alpha + ha)?.f - point(tt, alpha - ha)?.f) / (2.0 * ha))
    };
    let dp_dt = (pressure(t + ht)? - pressure(t - ht)?) / (2.0 * ht);
    let scale = ds_dalpha.abs().max(dp_dt.abs()).max(f64::EPSILON);
    Ok(MaxwellCheck { ds_dalpha, dp_dt, residual: (ds_dalpha - dp_dt).abs() / scale, flagged })
}
