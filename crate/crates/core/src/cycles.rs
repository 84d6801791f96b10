//! Reversible Carnot and Stirling cycles on the `(T, α)` state surface.
//!
//! Heat on an isotherm is `T ΔS`, heat on an isochore is `ΔU`, and every
//! work is the first-law residual `ΔU - Q`. Heat absorbed by and work done on
//! the system are positive.

use std::collections::{BTreeMap, HashMap};

use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::numerics::{linspace, par_map};
use crate::spectral::SpectralOptions;
use crate::thermo::{ensemble, Ensemble};

/// Equilibrium state at one `(T, α)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct State {
    pub t: f64,
    pub alpha: f64,
    pub s: f64,
    pub u: f64,
    pub f: f64,
    pub valid: bool,
}

/// Anything that can produce equilibrium states.
pub trait StateSurface: Sync {
    fn state(&self, t: f64, alpha: f64) -> Result<State>;

    /// True when `t` is at or below the highest zero of `Z` at this `α`.
    fn in_zero_region(&self, _t: f64, _alpha: f64) -> Result<bool> {
        Ok(false)
    }
}

/// The model itself: one spectrum per `α`.
#[derive(Clone, Copy, Debug)]
pub struct ModelSurface {
    pub params: ModelParams,
    pub opts: SpectralOptions,
}

impl ModelSurface {
    pub fn new(params: ModelParams, opts: SpectralOptions) -> Self {
        ModelSurface { params, opts }
    }

    pub fn ensemble(&self, alpha: f64) -> Result<Ensemble> {
        ensemble(&self.params.with_alpha(alpha), None, &self.opts)
    }
}

pub fn state_from(ens: &Ensemble, t: f64, alpha: f64) -> Result<State> {
    let pt = ens.potentials(t)?;
    Ok(State { t, alpha, s: pt.s, u: pt.u, f: pt.f, valid: pt.valid() })
}

impl StateSurface for ModelSurface {
    fn state(&self, t: f64, alpha: f64) -> Result<State> {
        state_from(&self.ensemble(alpha)?, t, alpha)
    }

    fn in_zero_region(&self, t: f64, alpha: f64) -> Result<bool> {
        self.ensemble(alpha)?.in_zero_region(t, &self.opts)
    }
}

/// [`ModelSurface`] with ensembles precomputed on a fixed set of `α` values.
///
/// Lookups hit the cache only for bit-identical `α`; anything else is solved afresh.
pub struct CachedSurface {
    pub inner: ModelSurface,
    cache: HashMap<u64, Ensemble>,
}

impl CachedSurface {
    pub fn new(inner: ModelSurface, alphas: &[f64]) -> Result<Self> {
        let built = par_map(alphas, |&a| inner.ensemble(a));
        let mut cache = HashMap::with_capacity(alphas.len());
        for (&a, e) in alphas.iter().zip(built) {
            cache.insert(a.to_bits(), e?);
        }
        Ok(CachedSurface { inner, cache })
    }

    fn with_ensemble<R>(&self, alpha: f64, f: impl FnOnce(&Ensemble) -> Result<R>) -> Result<R> {
        match self.cache.get(&alpha.to_bits()) {
            Some(e) => f(e),
            None => f(&self.inner.ensemble(alpha)?),
        }
    }
}

impl StateSurface for CachedSurface {
    fn state(&self, t: f64, alpha: f64) -> Result<State> {
        self.with_ensemble(alpha, |e| state_from(e, t, alpha))
    }

    fn in_zero_region(&self, t: f64, alpha: f64) -> Result<bool> {
        self.with_ensemble(alpha, |e| e.in_zero_region(t, &self.inner.opts))
    }
}

/// A surface given by a closure, for synthetic tests.
pub struct FnSurface<F>(pub F);

impl<F> StateSurface for FnSurface<F>
where
    F: Fn(f64, f64) -> State + Sync,
{
    fn state(&self, t: f64, alpha: f64) -> Result<State> {
        Ok((self.0)(t, alpha))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AlphaRoot {
    pub alpha: f64,
    pub root_count: usize,
    pub residual: f64,
}

/// Smallest `α` in `bracket` with `S(T, α) = s_target`.
///
/// The bracket is scanned on `scan_steps` points; invalid points split it and
/// no root is sought across them. Each root is bisected to `|Δα| <= 1e-8`.
pub fn solve_alpha<M: StateSurface + ?Sized>(
    model: &M,
    t: f64,
    s_target: f64,
    bracket: (f64, f64),
    scan_steps: usize,
) -> Result<AlphaRoot> {
    if !(bracket.0 < bracket.1) || scan_steps < 2 {
        return Err(Error::InvalidArgument("alpha bracket must be non-empty".into()));
    }
    let grid = linspace(bracket.0, bracket.1, scan_steps);
    let states = par_map(&grid, |&a| model.state(t, a)).into_iter().collect::<Result<Vec<_>>>()?;
    let (mut s_min, mut s_max) = (f64::INFINITY, f64::NEG_INFINITY);
    for st in states.iter().filter(|s| s.valid) {
        s_min = s_min.min(st.s);
        s_max = s_max.max(st.s);
    }
    let mut brackets = Vec::new();
    for w in states.windows(2) {
        if !(w[0].valid && w[1].valid) {
            continue;
        }
        let (d0, d1) = (w[0].s - s_target, w[1].s - s_target);
        if d0 == 0.0 {
            brackets.push((w[0].alpha, w[0].alpha));
        } else if d0.signum() != d1.signum() && d1 != 0.0 {
            brackets.push((w[0].alpha, w[1].alpha));
        }
    }
    if let Some(last) = states.last().filter(|s| s.valid && s.s == s_target) {
        brackets.push((last.alpha, last.alpha));
    }
    let Some(&(mut lo, mut hi)) = brackets.first() else {
        return Err(Error::NoSolution { target: s_target, min: s_min, max: s_max });
    };
    let mut d_lo = model.state(t, lo)?.s - s_target;
    while hi - lo > 1e-8 {
        let mid = 0.5 * (lo + hi);
        let d = model.state(t, mid)?.s - s_target;
        if d == 0.0 {
            lo = mid;
            hi = mid;
            break;
        }
        if d.signum() == d_lo.signum() {
            lo = mid;
            d_lo = d;
        } else {
            hi = mid;
        }
    }
    let alpha = 0.5 * (lo + hi);
    let residual = (model.state(t, alpha)?.s - s_target).abs();
    Ok(AlphaRoot { alpha, root_count: brackets.len(), residual })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Direction {
    #[default]
    Engine,
    Refrigerator,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CycleKind {
    Carnot,
    Stirling,
}

impl std::str::FromStr for CycleKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "carnot" => Ok(CycleKind::Carnot),
            "stirling" => Ok(CycleKind::Stirling),
            other => Err(Error::InvalidArgument(format!("cycle kind '{other}' (expected carnot|stirling)"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CarnotSpec {
    pub t1: f64,
    pub t2: f64,
    pub s1: f64,
    pub s2: f64,
    pub bracket: (f64, f64),
    pub scan_steps: usize,
    pub direction: Direction,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StirlingSpec {
    pub t1: f64,
    pub t2: f64,
    pub alpha1: f64,
    pub alpha2: f64,
    pub direction: Direction,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Leg {
    pub q: f64,
    pub w: f64,
    pub du: f64,
    pub ds: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CycleResult {
    pub kind: CycleKind,
    pub direction: Direction,
    /// In traversal order of the engine direction.
    pub corners: [State; 4],
    /// `legs[i]` runs between consecutive corners in the traversal direction.
    pub legs: [Leg; 4],
    pub w_total: f64,
    pub q_in: f64,
    pub q_out: f64,
    pub eta: f64,
    pub eta_classical: f64,
    pub cop: f64,
    pub r_alpha: Option<f64>,
    pub energy_residual: f64,
    pub entropy_residual: f64,
    /// Zero enclosed area, or a corner with `Z <= 0`.
    pub degenerate: bool,
    pub touches_zero_region: bool,
    /// Net work is delivered by the system (`W_T < 0`); only then is `η <= 1` guaranteed.
    pub produces_work: bool,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum LegKind {
    Isotherm,
    Adiabat,
    Isochore,
}

fn run_cycle(
    kind: CycleKind,
    direction: Direction,
    corners: [State; 4],
    legs_kind: [LegKind; 4],
    eta_classical: f64,
    r_alpha: Option<f64>,
) -> CycleResult {
    let order: [usize; 5] = match direction {
        Direction::Engine => [0, 1, 2, 3, 0],
        Direction::Refrigerator => [0, 3, 2, 1, 0],
    };
    let leg_of = |a: usize, b: usize| -> LegKind {
        // leg i joins corners i and i+1 (mod 4) in engine order
        if (a + 1) % 4 == b { legs_kind[a] } else { legs_kind[b] }
    };
    let mut legs = [Leg { q: 0.0, w: 0.0, du: 0.0, ds: 0.0 }; 4];
    for i in 0..4 {
        let (a, b) = (order[i], order[i + 1]);
        let (sa, sb) = (&corners[a], &corners[b]);
        let du = sb.u - sa.u;
        let ds = sb.s - sa.s;
        let q = match leg_of(a, b) {
            LegKind::Isotherm => sa.t * ds,
            LegKind::Adiabat => 0.0,
            LegKind::Isochore => du,
        };
        legs[i] = Leg { q, w: du - q, du, ds };
    }
    let w_total: f64 = legs.iter().map(|l| l.w).sum();
    let q_in: f64 = legs.iter().map(|l| l.q).filter(|q| *q > 0.0).sum();
    let q_out: f64 = legs.iter().map(|l| l.q).filter(|q| *q < 0.0).sum();
    let energy_residual = legs.iter().map(|l| l.du).sum::<f64>().abs();
    let entropy_residual = legs.iter().map(|l| l.ds).sum::<f64>().abs();
    let zero_area = w_total.abs() <= 1e-14 * q_in.abs().max(1.0) || q_in == 0.0;
    let touches_zero_region = corners.iter().any(|c| !c.valid);
    let (eta, cop) = if zero_area {
        (0.0, 0.0)
    } else {
        match direction {
            Direction::Engine => (w_total.abs() / q_in, q_out.abs() / w_total.abs()),
            Direction::Refrigerator => (q_out.abs() / q_in, q_in / w_total.abs()),
        }
    };
    CycleResult {
        kind,
        direction,
        corners,
        legs,
        w_total,
        q_in,
        q_out,
        eta,
        eta_classical,
        cop,
        r_alpha,
        energy_residual,
        entropy_residual,
        degenerate: zero_area || touches_zero_region,
        touches_zero_region,
        produces_work: w_total < 0.0,
    }
}

impl CycleResult {
    /// Tags the cycle as touching the zero region when `zero` is set.
    pub fn mark_zero_region(mut self, zero: bool) -> Self {
        self.touches_zero_region |= zero;
        self.degenerate |= zero;
        self
    }
}

/// Carnot cycle `(T2,S1) → (T2,S2) → (T1,S2) → (T1,S1)` with corners from [`solve_alpha`].
pub fn carnot_cycle<M: StateSurface + ?Sized>(model: &M, spec: &CarnotSpec) -> Result<CycleResult> {
    if !(spec.t1 < spec.t2) || spec.s1 > spec.s2 {
        return Err(Error::InvalidArgument("Carnot cycle needs T1 < T2 and S1 <= S2".into()));
    }
    let targets = [(spec.t2, spec.s1), (spec.t2, spec.s2), (spec.t1, spec.s2), (spec.t1, spec.s1)];
    let mut corners = Vec::with_capacity(4);
    let mut zero = false;
    for (leg, &(t, s)) in targets.iter().enumerate() {
        let root = solve_alpha(model, t, s, spec.bracket, spec.scan_steps)
            .map_err(|e| Error::CycleInfeasible { leg, reason: e.to_string() })?;
        corners.push(model.state(t, root.alpha)?);
        zero |= model.in_zero_region(t, root.alpha)?;
    }
    let r = carnot_from_corners([corners[0], corners[1], corners[2], corners[3]], spec.direction)?;
    Ok(r.mark_zero_region(zero))
}

/// Carnot cycle on already solved corners.
pub fn carnot_from_corners(corners: [State; 4], direction: Direction) -> Result<CycleResult> {
    let (t1, t2) = (corners[3].t, corners[0].t);
    let r_alpha = (corners[0].alpha / corners[1].alpha) / (corners[3].alpha / corners[2].alpha);
    Ok(run_cycle(
        CycleKind::Carnot,
        direction,
        corners,
        [LegKind::Isotherm, LegKind::Adiabat, LegKind::Isotherm, LegKind::Adiabat],
        1.0 - t1 / t2,
        r_alpha.is_finite().then_some(r_alpha),
    ))
}

/// Classical Stirling efficiency with the monatomic-gas heat capacity.
pub fn stirling_classical(t1: f64, t2: f64, alpha1: f64, alpha2: f64) -> f64 {
    let dt = t2 - t1;
    if dt == 0.0 {
        return 0.0;
    }
    dt / (t2 + 2.5 * dt / (alpha2 / alpha1).ln())
}

/// Stirling cycle `(T2,α1) → (T2,α2) → (T1,α2) → (T1,α1)`.
pub fn stirling_cycle<M: StateSurface + ?Sized>(model: &M, spec: &StirlingSpec) -> Result<CycleResult> {
    if spec.t1 > spec.t2 || !(spec.alpha1 < spec.alpha2) || spec.alpha1 <= 0.0 {
        return Err(Error::InvalidArgument("Stirling cycle needs T1 <= T2 and 0 < alpha1 < alpha2".into()));
    }
    let pts = [(spec.t2, spec.alpha1), (spec.t2, spec.alpha2), (spec.t1, spec.alpha2), (spec.t1, spec.alpha1)];
    let mut corners = Vec::with_capacity(4);
    let mut zero = false;
    for (leg, &(t, a)) in pts.iter().enumerate() {
        corners.push(model.state(t, a).map_err(|e| Error::CycleInfeasible { leg, reason: e.to_string() })?);
        zero |= model.in_zero_region(t, a)?;
    }
    let r = stirling_from_corners([corners[0], corners[1], corners[2], corners[3]], spec.direction);
    Ok(r.mark_zero_region(zero))
}

pub fn stirling_from_corners(corners: [State; 4], direction: Direction) -> CycleResult {
    let (t1, t2) = (corners[3].t, corners[0].t);
    let (a1, a2) = (corners[0].alpha, corners[1].alpha);
    run_cycle(
        CycleKind::Stirling,
        direction,
        corners,
        [LegKind::Isotherm, LegKind::Isochore, LegKind::Isotherm, LegKind::Isochore],
        stirling_classical(t1, t2, a1, a2),
        None,
    )
}

/// One cell of an efficiency grid.
#[derive(Clone, Debug, PartialEq)]
pub struct GridCell {
    pub t1: f64,
    pub t2: f64,
    /// `(S1, S2)` for Carnot, `(α1, α2)` for Stirling.
    pub x1: f64,
    pub x2: f64,
    pub result: std::result::Result<CycleResult, String>,
}

impl GridCell {
    pub fn feasible(&self) -> bool {
        self.result.is_ok()
    }

    pub fn eta(&self) -> Option<f64> {
        self.result.as_ref().ok().map(|r| r.eta)
    }

    pub fn delta_eta(&self) -> Option<f64> {
        self.result.as_ref().ok().map(|r| r.eta - r.eta_classical)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GridRanges {
    pub temperatures: Vec<f64>,
    /// Entropies for Carnot, asymmetries for Stirling.
    pub coordinates: Vec<f64>,
    /// α search bracket and scan resolution for Carnot corners.
    pub bracket: (f64, f64),
    pub scan_steps: usize,
}

/// Every ordered pair `T1 < T2` and `x1 < x2` of the grids, in index order.
pub fn efficiency_grid<M: StateSurface + ?Sized>(model: &M, kind: CycleKind, ranges: &GridRanges) -> Result<Vec<GridCell>> {
    let ts = &ranges.temperatures;
    let xs = &ranges.coordinates;
    if ts.is_empty() || xs.is_empty() {
        return Err(Error::InvalidArgument("empty cycle grid".into()));
    }
    // corner states shared by many cells
    let points: Vec<(usize, usize)> =
        (0..ts.len()).flat_map(|i| (0..xs.len()).map(move |j| (i, j))).collect();
    let solved = par_map(&points, |&(i, j)| -> std::result::Result<(State, bool), String> {
        let (t, x) = (ts[i], xs[j]);
        let alpha = match kind {
            CycleKind::Carnot => solve_alpha(model, t, x, ranges.bracket, ranges.scan_steps)
                .map_err(|e| e.to_string())?
                .alpha,
            CycleKind::Stirling => x,
        };
        let state = model.state(t, alpha).map_err(|e| e.to_string())?;
        let zero = model.in_zero_region(t, alpha).map_err(|e| e.to_string())?;
        Ok((state, zero))
    });
    let table: BTreeMap<(usize, usize), std::result::Result<(State, bool), String>> =
        points.into_iter().zip(solved).collect();
    let pairs = |n: usize| -> Vec<(usize, usize)> {
        let mut v: Vec<(usize, usize)> = (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b))).collect();
        if n == 1 {
            v.push((0, 0));
        }
        v
    };
    let mut cells = Vec::new();
    for &(i1, i2) in &pairs(ts.len()) {
        for &(j1, j2) in &pairs(xs.len()) {
            let keys = [(i2, j1), (i2, j2), (i1, j2), (i1, j1)];
            let mut corners = Vec::with_capacity(4);
            let mut zero = false;
            let mut failure = None;
            for (leg, k) in keys.iter().enumerate() {
                match &table[k] {
                    Ok((s, z)) => {
                        corners.push(*s);
                        zero |= *z;
                    }
                    Err(e) => {
                        failure = Some(format!("corner {leg}: {e}"));
                        break;
                    }
                }
            }
            let result = match failure {
                Some(e) => Err(e),
                None => {
                    let c = [corners[0], corners[1], corners[2], corners[3]];
                    match kind {
                        CycleKind::Carnot if i1 == i2 => Err("T1 = T2".to_string()),
                        CycleKind::Carnot => carnot_from_corners(c, Direction::Engine).map_err(|e| e.to_string()),
                        CycleKind::Stirling if j1 == j2 => Err("alpha1 = alpha2".to_string()),
                        CycleKind::Stirling => Ok(stirling_from_corners(c, Direction::Engine)),
                    }
                    .map(|r| r.mark_zero_region(zero))
                }
            };
            cells.push(GridCell { t1: ts[i1], t2: ts[i2], x1: xs[j1], x2: xs[j2], result });
        }
    }
    Ok(cells)
}

/// Maximum `η` per `(x1, x2)` pair over all temperature pairs.
pub fn max_eta_by_coordinates(cells: &[GridCell]) -> Vec<((f64, f64), f64)> {
    project(cells, |c| (c.x1, c.x2))
}

/// Maximum `η` per `(T1, T2)` pair over all coordinate pairs.
pub fn max_eta_by_temperatures(cells: &[GridCell]) -> Vec<((f64, f64), f64)> {
    project(cells, |c| (c.t1, c.t2))
}

fn project<K: Fn(&GridCell) -> (f64, f64)>(cells: &[GridCell], key: K) -> Vec<((f64, f64), f64)> {
    let mut out: Vec<((f64, f64), f64)> = Vec::new();
    for c in cells {
        let Some(eta) = c.eta() else { continue };
        let k = key(c);
        match out.iter_mut().find(|(kk, _)| *kk == k) {
            Some((_, best)) => *best = best.max(eta),
            None => out.push((k, eta)),
        }
    }
    out
}
