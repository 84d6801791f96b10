//! Small numerical kernels shared by the physics modules.

use crate::error::{Error, Result};

/// Neumaier-compensated accumulator.
#[derive(Clone, Copy, Debug, Default)]
pub struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = CompensatedSum::new();
        for x in iter {
            s.add(x);
        }
        s
    }
}

/// Bisection for a sign change of `f` on `[lo, hi]`, stopping when `done(a, b)`.
pub fn bisect<F, D>(mut f: F, mut lo: f64, mut hi: f64, done: D, max_iter: usize) -> Result<f64>
where
    F: FnMut(f64) -> f64,
    D: Fn(f64, f64) -> bool,
{
    let mut flo = f(lo);
    let fhi = f(hi);
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo.signum() == fhi.signum() || flo.is_nan() || fhi.is_nan() {
        return Err(Error::NoConvergence(format!("no sign change on [{lo}, {hi}]")));
    }
    for _ in 0..max_iter {
        if done(lo, hi) {
            return Ok(0.5 * (lo + hi));
        }
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if fm == 0.0 {
            return Ok(mid);
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    if done(lo, hi) {
        Ok(0.5 * (lo + hi))
    } else {
        Err(Error::NoConvergence(format!("bisection did not converge on [{lo}, {hi}]")))
    }
}

/// Bisection on a boolean predicate that is `false` at `lo` and `true` at `hi`
/// (or the reverse); returns the final bracket.
pub fn bisect_predicate<P>(mut pred: P, mut lo: f64, mut hi: f64, width: f64) -> (f64, f64)
where
    P: FnMut(f64) -> bool,
{
    let plo = pred(lo);
    while (hi - lo).abs() > width {
        let mid = 0.5 * (lo + hi);
        if pred(mid) == plo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (lo, hi)
}

/// Central difference with one Richardson step: `(4 D(h/2) - D(h)) / 3`.
pub fn richardson_derivative<F>(mut f: F, x: f64, h: f64) -> f64
where
    F: FnMut(f64) -> f64,
{
    let d1 = (f(x + h) - f(x - h)) / (2.0 * h);
    let h2 = 0.5 * h;
    let d2 = (f(x + h2) - f(x - h2)) / (2.0 * h2);
    (4.0 * d2 - d1) / 3.0
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Ordinary least squares `y = slope x + intercept`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> Result<LinearFit> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::InvalidArgument("linear fit needs >= 2 paired points".into()));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidArgument("degenerate abscissae".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = x.iter().zip(y).map(|(a, b)| (b - slope * a - intercept).powi(2)).sum();
    let r_squared = if syy == 0.0 { 1.0 } else { 1.0 - ss_res / syy };
    Ok(LinearFit { slope, intercept, r_squared })
}

/// `n` evenly spaced points on `[lo, hi]` (inclusive).
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect(),
    }
}

/// Parallel map when the `parallel` feature is on, sequential otherwise.
/// Output order always follows input order.
pub fn par_map<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        items.par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.iter().map(f).collect()
    }
}
