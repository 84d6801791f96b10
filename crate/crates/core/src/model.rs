//! Model parameters, block Hamiltonians, the size-rescaling scheme and the
//! zero-temperature BCS gap equation.

use crate::algebra::{embed3, spin_operators, OperatorMatrix};
use crate::blocks::{BlockLabel, SectorKey, Sizes};
use crate::error::{Error, Result};
use crate::half::HalfInt;
use crate::numerics::{bisect, linear_fit};
use crate::spectral::SpectralOptions;
use crate::thermo::{pairing_gap, GapOperator};

/// Pairing-constant scale `G0` of the rescaling scheme (GHz).
pub const G0: f64 = 3.006;
/// Numerator of `f(N_p) = a / (2 N_p + b)`.
pub const RESCALE_A: f64 = 2.7289;
/// Offset of `f(N_p) = a / (2 N_p + b)`.
pub const RESCALE_B: f64 = 0.73029;

/// Hamiltonian constants (GHz), chemical potentials (GHz) and system sizes.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModelParams {
    /// Zero-field splitting `D`.
    pub d: f64,
    /// Strain (Lipkin) constant `E`.
    pub e: f64,
    /// Pairing constant `G`.
    pub pairing: f64,
    /// Qubit-ensemble coupling `g`.
    pub coupling: f64,
    /// Asymmetry of the coupling; `alpha = 1` is the Hermitian point.
    pub alpha: f64,
    pub eps1: f64,
    pub eps2: f64,
    pub mu_s: f64,
    pub mu_qb: f64,
    pub sizes: Sizes,
}

impl Default for ModelParams {
    fn default() -> Self {
        ModelParams {
            d: 2.878,
            e: 0.26,
            pairing: 1.73,
            coupling: 1.0,
            alpha: 1.0,
            eps1: -1.0,
            eps2: 1.0,
            mu_s: 0.0,
            mu_qb: 0.0,
            sizes: Sizes { omega: HalfInt::from_int(4), omega1: 2, omega2: 2 },
        }
    }
}

impl ModelParams {
    pub fn with_alpha(mut self, alpha: f64) -> Self {
        self.alpha = alpha;
        self
    }

    pub fn with_coupling(mut self, g: f64) -> Self {
        self.coupling = g;
        self
    }

    pub fn with_sizes(mut self, sizes: Sizes) -> Self {
        self.sizes = sizes;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("D", self.d),
            ("E", self.e),
            ("G", self.pairing),
            ("g", self.coupling),
            ("alpha", self.alpha),
            ("eps1", self.eps1),
            ("eps2", self.eps2),
            ("muS", self.mu_s),
            ("muQb", self.mu_qb),
        ];
        if let Some((name, v)) = fields.iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!("{name} = {v} is not finite")));
        }
        if self.d < 0.0 || self.pairing < 0.0 || self.alpha < 0.0 {
            return Err(Error::InvalidArgument("D, G and alpha must be non-negative".into()));
        }
        Sizes::new(self.sizes.omega, self.sizes.omega1, self.sizes.omega2)?;
        Ok(())
    }

    /// Constant offset of the pair-number operator, `N_qb = Sz1 + Sz2 + (Ω1 + Ω2)/2`.
    pub fn pair_offset(&self) -> f64 {
        0.5 * (self.sizes.omega1 + self.sizes.omega2) as f64
    }
}

/// The pieces of a block Hamiltonian, `H(α) = base + α · raising`.
#[derive(Clone, Debug)]
pub struct BlockOperators {
    pub key: SectorKey,
    /// Everything that does not depend on `α`.
    pub base: OperatorMatrix,
    /// `g (Sz1 + Sz2) S+` on the NV factor.
    pub raising: OperatorMatrix,
    /// Collective pair correlator `(S+1 + S+2)(S-1 + S-2)`.
    pub pair_correlator: OperatorMatrix,
    /// Diagonal of `Sz1 + Sz2`.
    pub qubit_sz: Vec<f64>,
}

impl BlockOperators {
    pub fn new(p: &ModelParams, key: SectorKey) -> Result<Self> {
        let q1 = spin_operators(key.s1)?;
        let q2 = spin_operators(key.s2)?;
        let nv = spin_operators(key.s)?;
        let (i1, i2, i3) = (
            OperatorMatrix::identity(key.s1.multiplet()),
            OperatorMatrix::identity(key.s2.multiplet()),
            OperatorMatrix::identity(key.s.multiplet()),
        );
        let sz1 = embed3(&q1.sz, &i2, &i3);
        let sz2 = embed3(&i1, &q2.sz, &i3);
        let sp = &embed3(&q1.splus, &i2, &i3) + &embed3(&i1, &q2.splus, &i3);
        let sm = &embed3(&q1.sminus, &i2, &i3) + &embed3(&i1, &q2.sminus, &i3);
        let pair_correlator = &sp * &sm;
        let nz = embed3(&i1, &i2, &nv.sz);
        let np = embed3(&i1, &i2, &nv.splus);
        let nm = embed3(&i1, &i2, &nv.sminus);
        let qsz = &sz1 + &sz2;

        let qubit = &(&sz1.scale(p.eps1) + &sz2.scale(p.eps2)) - &pair_correlator.scale(p.pairing);
        let quad = (&(&np * &np) + &(&nm * &nm)).scale(0.5 * p.e);
        let ensemble = &(&nz * &nz).scale(p.d) + &quad;
        let lowering = (&qsz * &nm).scale(p.coupling);
        let base = &(&qubit + &ensemble) + &lowering;
        let raising = (&qsz * &np).scale(p.coupling);
        let qubit_sz = qsz.diagonal().iter().map(|z| z.re).collect();
        Ok(BlockOperators { key, base, raising, pair_correlator, qubit_sz })
    }

    pub fn hamiltonian(&self, alpha: f64) -> OperatorMatrix {
        &self.base + &self.raising.scale(alpha)
    }
}

/// Real block Hamiltonian on `(2s1+1)(2s2+1)(2S+1)` states; symmetric at `α = 1`.
pub fn build_block_hamiltonian(p: &ModelParams, b: &BlockLabel) -> Result<OperatorMatrix> {
    let ops = BlockOperators::new(p, b.key())?;
    if ops.base.dim() != b.dim {
        return Err(Error::Internal(format!("block {} has dim {} != {}", b.id(), ops.base.dim(), b.dim)));
    }
    Ok(ops.hamiltonian(p.alpha))
}

/// `f(N_p) = 2.7289 / (2 N_p + 0.73029)`.
pub fn rescale_factor(n_pairs: i64) -> f64 {
    RESCALE_A / (2.0 * n_pairs as f64 + RESCALE_B)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RescaledParams {
    pub pairing: f64,
    pub coupling: f64,
    pub e: f64,
    pub t: f64,
    pub delta0: f64,
}

/// Size rescaling: `G_r = G0 f(N_p)`, `g_r = g/√N_S`, `E_r = E/N_S`, `T_r = T/Δ0`.
///
/// `delta0` defaults to `D` when `None`.
pub fn rescale(p: &ModelParams, n_pairs: i64, n_nv: i64, t: f64, delta0: Option<f64>) -> Result<RescaledParams> {
    if n_pairs < 1 || n_nv < 1 {
        return Err(Error::InvalidArgument("N_p and N_S must be >= 1".into()));
    }
    let delta0 = delta0.unwrap_or(p.d);
    if delta0 <= 0.0 {
        return Err(Error::InvalidArgument("Delta0 must be positive".into()));
    }
    Ok(RescaledParams {
        pairing: G0 * rescale_factor(n_pairs),
        coupling: p.coupling / (n_nv as f64).sqrt(),
        e: p.e / n_nv as f64,
        t: t / delta0,
        delta0,
    })
}

/// Solves `1 = G Σ_k 1/(2 sqrt(Δ² + ε_k²))` for `Δ >= 0`; returns 0 below critical coupling.
pub fn solve_gap_t0(g: f64, levels: &[f64]) -> Result<f64> {
    if levels.is_empty() {
        return Err(Error::InvalidArgument("empty level list".into()));
    }
    if g <= 0.0 {
        return Ok(0.0);
    }
    let residual = |delta: f64| -> f64 {
        g * levels.iter().map(|e| 0.5 / (delta * delta + e * e).sqrt()).sum::<f64>() - 1.0
    };
    if levels.iter().all(|&e| e != 0.0) && residual(0.0) <= 0.0 {
        return Ok(0.0);
    }
    let hi = 0.5 * g * levels.len() as f64;
    let lo = hi * 1e-300_f64.max(f64::MIN_POSITIVE);
    if residual(hi) >= 0.0 {
        return Ok(hi);
    }
    let root = bisect(residual, lo, hi, |a, b| (b - a) <= 1e-10 * b.abs(), 400)?;
    Ok(root)
}

/// One `N_p` of a rescaling fit.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RescalingPoint {
    pub n_pairs: i64,
    /// Pairing constant whose low-temperature gap hits the target (GHz).
    pub pairing: f64,
    /// `G / G0`.
    pub ratio: f64,
    pub residual: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RescalingFit {
    pub a: f64,
    pub b: f64,
    pub points: Vec<RescalingPoint>,
}

impl RescalingFit {
    pub fn factor(&self, n_pairs: i64) -> f64 {
        self.a / (2.0 * n_pairs as f64 + self.b)
    }
}

/// Fits `y = a / (2 N_p + b)` through the linearisation `1/y = (2/a) N_p + b/a`.
///
/// A single point keeps `b` at [`RESCALE_B`] and interpolates `a` exactly.
pub fn fit_rescaling_points(n_pairs: &[i64], ratios: &[f64]) -> Result<(f64, f64)> {
    if n_pairs.is_empty() || n_pairs.len() != ratios.len() {
        return Err(Error::InvalidArgument("rescaling fit needs matching non-empty lists".into()));
    }
    if ratios.iter().any(|r| !(*r > 0.0)) {
        return Err(Error::InvalidArgument("rescaling ratios must be positive".into()));
    }
    if n_pairs.len() == 1 {
        return Ok((ratios[0] * (2.0 * n_pairs[0] as f64 + RESCALE_B), RESCALE_B));
    }
    let x: Vec<f64> = n_pairs.iter().map(|&n| n as f64).collect();
    let y: Vec<f64> = ratios.iter().map(|r| 1.0 / r).collect();
    let fit = linear_fit(&x, &y)?;
    let a = 2.0 / fit.slope;
    Ok((a, fit.intercept * a))
}

/// For each `N_p`, the pairing constant whose gap at `t_low` (with `g = 0`)
/// equals `target`, and the fit of `G / g0` to `a / (2 N_p + b)`.
///
/// The NV factor decouples at `g = 0`, so the smallest NV space is used.
pub fn fit_rescaling(
    base: &ModelParams,
    n_pairs: &[i64],
    g0: f64,
    target: f64,
    t_low: f64,
    gap: GapOperator,
    opts: &SpectralOptions,
) -> Result<RescalingFit> {
    if !(target > 0.0 && g0 > 0.0 && t_low > 0.0) {
        return Err(Error::InvalidArgument("target, G0 and T must be positive".into()));
    }
    let mut pairings = Vec::with_capacity(n_pairs.len());
    for &np in n_pairs {
        let sizes = Sizes::new(HalfInt::from_twice(1), np, np)?;
        let p = ModelParams { coupling: 0.0, sizes, ..*base };
        let fail = |reason: String| Error::NoConvergence(format!("N_p = {np}: {reason}"));
        let delta = |g: f64| pairing_gap(&ModelParams { pairing: g, ..p }, t_low, gap, opts);
        let mut hi = 1.0;
        let mut doublings = 0;
        while delta(hi).map_err(|e| fail(e.to_string()))? < target {
            hi *= 2.0;
            doublings += 1;
            if doublings > 60 {
                return Err(fail(format!("gap stays below {target}")));
            }
        }
        let g = bisect(
            |g| delta(g).map(|d| d - target).unwrap_or(f64::NAN),
            0.0,
            hi,
            |a, b| (b - a) <= 1e-10 * b,
            400,
        )
        .map_err(|e| fail(e.to_string()))?;
        pairings.push(g);
    }
    let ratios: Vec<f64> = pairings.iter().map(|g| g / g0).collect();
    let (a, b) = fit_rescaling_points(n_pairs, &ratios)?;
    let points = n_pairs
        .iter()
        .zip(pairings.iter().zip(&ratios))
        .map(|(&n, (&g, &r))| RescalingPoint { n_pairs: n, pairing: g, ratio: r, residual: r - a / (2.0 * n as f64 + b) })
        .collect();
    Ok(RescalingFit { a, b, points })
}
