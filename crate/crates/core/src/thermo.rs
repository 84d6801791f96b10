//! Grand partition function over block spectra, its zeros, thermodynamic
//! potentials, thermal expectation values and the pairing gap.
//!
//! All sums are taken relative to `exp(-β K_min)`, `K = E - μ_S N - μ_qb N_qb`,
//! so `Z` is carried as a sign and `ln|Z|` and never overflows.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::numerics::{bisect, richardson_derivative, CompensatedSum};
use crate::spectral::{SpectralOptions, SpectrumSet};

/// Operator whose thermal average estimates the pairing gap.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum GapOperator {
    /// `(S+1 + S+2)(S-1 + S-2)`.
    #[default]
    Collective,
    /// Pair number `Sz1 + Sz2 + (Ω1 + Ω2)/2`.
    Diagonal,
}

impl std::str::FromStr for GapOperator {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "collective" => Ok(GapOperator::Collective),
            "diagonal" => Ok(GapOperator::Diagonal),
            other => Err(Error::InvalidArgument(format!("gap operator '{other}' (expected collective|diagonal)"))),
        }
    }
}

/// One eigenvalue with everything the Boltzmann sums need.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Level {
    pub energy: Complex64,
    pub weight: f64,
    /// Multiplicity-weighted mean NV particle number of the merged blocks.
    pub n_nv: f64,
    pub n_qb: f64,
    /// `L_nᵀ O R_n` of the observable carried along, if any.
    pub observable: Option<Complex64>,
}

/// Weighted level list at fixed parameters and chemical potentials.
#[derive(Clone, Debug)]
pub struct Ensemble {
    pub levels: Vec<Level>,
    pub mu_s: f64,
    pub mu_qb: f64,
    pub near_defective: bool,
    /// Shifted energies `K = E - μ_S N - μ_qb N_qb`.
    shifted: Vec<Complex64>,
    k_min: f64,
}

enum ZeroSearch {
    Zero(f64),
    Dominated,
    Exhausted,
}

impl Ensemble {
    pub fn new(levels: Vec<Level>, mu_s: f64, mu_qb: f64) -> Result<Self> {
        if levels.is_empty() {
            return Err(Error::InvalidArgument("empty ensemble".into()));
        }
        let shifted: Vec<Complex64> =
            levels.iter().map(|l| l.energy - mu_s * l.n_nv - mu_qb * l.n_qb).collect();
        let k_min = shifted.iter().map(|k| k.re).fold(f64::INFINITY, f64::min);
        Ok(Ensemble { levels, mu_s, mu_qb, near_defective: false, shifted, k_min })
    }

    /// Levels of a spectrum set; with `gap` set the matching observable is attached
    /// (the collective form needs eigenvectors).
    pub fn from_spectra(set: &SpectrumSet, gap: Option<GapOperator>) -> Result<Self> {
        let p = &set.params;
        let offset = p.pair_offset();
        let mut levels = Vec::new();
        for spec in &set.spectra {
            let obs: Option<Vec<Complex64>> = match gap {
                None => None,
                Some(GapOperator::Diagonal) => {
                    Some(spec.qubit_m.iter().map(|m| Complex64::new(m + offset, 0.0)).collect())
                }
                Some(GapOperator::Collective) => {
                    let ops = crate::model::BlockOperators::new(p, spec.key)?;
                    Some(spec.expectations(&ops.pair_correlator)?)
                }
            };
            let merged = p.mu_s == 0.0;
            let groups: Vec<(f64, f64)> = if merged {
                let w: f64 = spec.blocks.iter().map(|b| b.1 as f64).sum();
                let n: f64 = spec.blocks.iter().map(|b| b.0 as f64 * b.1 as f64).sum::<f64>() / w;
                vec![(w, n)]
            } else {
                spec.blocks.iter().map(|b| (b.1 as f64, b.0 as f64)).collect()
            };
            for (i, &z) in spec.eigenvalues.iter().enumerate() {
                for &(w, n) in &groups {
                    levels.push(Level {
                        energy: z,
                        weight: w,
                        n_nv: n,
                        n_qb: spec.qubit_m[i] + offset,
                        observable: obs.as_ref().map(|o| o[i]),
                    });
                }
            }
        }
        let mut ens = Ensemble::new(levels, p.mu_s, p.mu_qb)?;
        ens.near_defective = set.near_defective();
        Ok(ens)
    }

    pub fn shifted_energies(&self) -> &[Complex64] {
        &self.shifted
    }

    /// Largest `|Im K|`.
    pub fn max_gamma(&self) -> f64 {
        self.shifted.iter().map(|k| k.im.abs()).fold(0.0, f64::max)
    }

    /// Boltzmann weights `w e^{-β(K - K_min)}` (complex).
    fn scaled_weight(&self, i: usize, beta: f64) -> Complex64 {
        let k = self.shifted[i] - self.k_min;
        self.levels[i].weight * (-beta * k).exp()
    }

    /// `Σ Re[w e^{-β(K-K_min)} f(level)]` with compensated summation.
    fn moment<F: Fn(usize) -> Complex64>(&self, beta: f64, f: F) -> f64 {
        (0..self.levels.len())
            .map(|i| (self.scaled_weight(i, beta) * f(i)).re)
            .collect::<CompensatedSum>()
            .value()
    }

    pub fn partition_function(&self, beta: f64) -> SignedLog {
        let scaled = self.moment(beta, |_| Complex64::new(1.0, 0.0));
        SignedLog::from_scaled(scaled, -beta * self.k_min)
    }

    /// Ground-level contribution and the rest, both scaled by `e^{β K_min}`.
    pub fn dominant_split(&self, beta: f64, tie_tol: f64) -> DominantSplit {
        let mut z0 = CompensatedSum::new();
        let mut rest = CompensatedSum::new();
        for i in 0..self.levels.len() {
            let w = self.scaled_weight(i, beta).re;
            if self.shifted[i].re - self.k_min <= tie_tol {
                z0.add(w);
            } else {
                rest.add(w);
            }
        }
        DominantSplit { z0: z0.value(), z_prime: rest.value(), ln_scale: -beta * self.k_min }
    }

    /// Sign changes of `Z` on an increasing temperature grid, refined to relative `1e-8`.
    pub fn find_zeros(&self, t_grid: &[f64]) -> Result<Vec<ZeroRecord>> {
        validate_grid(t_grid)?;
        let sign_at = |t: f64| self.partition_function(1.0 / t).sign;
        let mut out = Vec::new();
        let mut prev = sign_at(t_grid[0]);
        for w in t_grid.windows(2) {
            let next = sign_at(w[1]);
            if next != prev {
                let t = bisect(
                    |t| self.partition_function(1.0 / t).sign as f64,
                    w[0],
                    w[1],
                    |a, b| (b - a) <= 1e-8 * b,
                    200,
                )?;
                out.push(ZeroRecord { t, bracket: (w[0], w[1]), signs: (prev, next) });
            }
            prev = next;
        }
        Ok(out)
    }

    /// Zeros with grid doubling until the count is stable (up to `max_doublings`).
    pub fn find_zeros_stable(&self, t_grid: &[f64], max_doublings: usize) -> Result<ZeroScan> {
        let mut grid = t_grid.to_vec();
        let mut zeros = self.find_zeros(&grid)?;
        for _ in 0..max_doublings {
            let finer = refine_grid(&grid);
            let next = self.find_zeros(&finer)?;
            let stable = next.len() == zeros.len();
            grid = finer;
            zeros = next;
            if stable {
                return Ok(ZeroScan { zeros, grid_points: grid.len(), stable: true });
            }
        }
        Ok(ZeroScan { zeros, grid_points: grid.len(), stable: false })
    }

    /// Largest temperature where `Z` vanishes; `0` when `Z > 0` for every `T`.
    ///
    /// Scans `β` upward from `0` with a step resolving the fastest oscillation,
    /// and stops once the real ground level provably dominates every complex pair.
    pub fn critical_temperature(&self, opts: &SpectralOptions) -> Result<f64> {
        let beta_max = 1e3;
        match self.first_zero_beta(beta_max, opts)? {
            ZeroSearch::Zero(beta) => Ok(1.0 / beta),
            ZeroSearch::Dominated => Ok(0.0),
            ZeroSearch::Exhausted => {
                Err(Error::NoConvergence(format!("no zero of Z and no dominance up to beta = {beta_max}")))
            }
        }
    }

    /// True when some zero of `Z` lies at a temperature `>= t`, i.e. `t <= T_c`.
    pub fn in_zero_region(&self, t: f64, opts: &SpectralOptions) -> Result<bool> {
        Ok(matches!(self.first_zero_beta(1.0 / t, opts)?, ZeroSearch::Zero(b) if b <= 1.0 / t))
    }

    fn first_zero_beta(&self, beta_max: f64, opts: &SpectralOptions) -> Result<ZeroSearch> {
        let gamma = self.max_gamma();
        let complex: Vec<usize> =
            (0..self.levels.len()).filter(|&i| !opts.is_real(self.shifted[i])).collect();
        if complex.is_empty() {
            return Ok(ZeroSearch::Dominated);
        }
        let step = (std::f64::consts::PI / (8.0 * gamma)).min(0.05);
        let ground_real: f64 = (0..self.levels.len())
            .filter(|&i| opts.is_real(self.shifted[i]) && self.shifted[i].re - self.k_min <= opts.tie_tol)
            .map(|i| self.levels[i].weight)
            .sum();
        let dominated = |beta: f64| -> bool {
            if ground_real == 0.0 {
                return false;
            }
            let bound: f64 = complex
                .iter()
                .map(|&i| {
                    let gap = self.shifted[i].re - self.k_min;
                    if gap <= opts.tie_tol {
                        f64::INFINITY
                    } else {
                        self.levels[i].weight * (-beta * gap).exp()
                    }
                })
                .sum();
            ground_real > bound
        };
        let mut b0 = 0.0;
        let mut s0 = self.partition_function(1e-300).sign;
        while b0 < beta_max {
            let b1 = b0 + step;
            let s1 = self.partition_function(b1).sign;
            if s1 != s0 {
                let beta = bisect(
                    |b| self.partition_function(b).sign as f64,
                    b0.max(1e-300),
                    b1,
                    |a, b| (b - a) <= 1e-10 * b,
                    400,
                )?;
                return Ok(ZeroSearch::Zero(beta));
            }
            if dominated(b1) {
                return Ok(ZeroSearch::Dominated);
            }
            b0 = b1;
            s0 = s1;
        }
        Ok(ZeroSearch::Exhausted)
    }

    /// Analytic potentials at one temperature.
    pub fn potentials(&self, t: f64) -> Result<ThermoPoint> {
        if !(t > 0.0) || !t.is_finite() {
            return Err(Error::InvalidArgument(format!("temperature {t} must be positive")));
        }
        let beta = 1.0 / t;
        let z = self.partition_function(beta);
        if z.scaled.abs() < Z_FLOOR {
            return Err(Error::DivisionByZero(format!("|Z| below floor at T = {t}")));
        }
        let zs = z.scaled;
        // moments of K - K_min keep S and C_V free of cancellation near T = 0
        let excess = |i: usize| self.shifted[i] - self.k_min;
        let x_mean = self.moment(beta, excess) / zs;
        let x2_mean = self.moment(beta, |i| excess(i) * excess(i)) / zs;
        let n_mean = self.moment(beta, |i| Complex64::new(self.levels[i].n_nv, 0.0)) / zs;
        let nq_mean = self.moment(beta, |i| Complex64::new(self.levels[i].n_qb, 0.0)) / zs;
        let mu_n = self.mu_s * n_mean + self.mu_qb * nq_mean;
        let u = self.k_min + x_mean + mu_n;
        let f = -t * z.ln_abs + mu_n;
        let s = beta * x_mean + zs.abs().ln();
        let cv = beta * beta * (x2_mean - x_mean * x_mean);
        Ok(ThermoPoint {
            t,
            z_sign: z.sign,
            ln_abs_z: z.ln_abs,
            f,
            u,
            s,
            cv,
            gap: None,
            z_nonpositive: z.sign <= 0,
            near_defective: self.near_defective,
        })
    }

    /// `S` from `-∂F/∂T` and `C_V` from `∂U/∂T` by Richardson-refined central
    /// differences with relative step `rel_step`.
    pub fn finite_difference_check(&self, t: f64, rel_step: f64) -> Result<FiniteDifference> {
        let h = rel_step * t;
        let mut err = None;
        let mut eval = |tt: f64| match self.potentials(tt) {
            Ok(pt) => pt,
            Err(e) => {
                err = Some(e);
                ThermoPoint::nan(tt)
            }
        };
        let s = -richardson_derivative(|tt| eval(tt).f, t, h);
        let cv = richardson_derivative(|tt| eval(tt).u, t, h);
        match err {
            Some(e) => Err(e),
            None => Ok(FiniteDifference { entropy: s, heat_capacity: cv }),
        }
    }

    /// `(1/Z) Σ w e^{-βK} ⟨L|O|R⟩` using the attached observable. Returns the
    /// real part and the absolute imaginary residue.
    pub fn thermal_expectation(&self, t: f64) -> Result<(f64, f64)> {
        if self.levels.iter().any(|l| l.observable.is_none()) {
            return Err(Error::InvalidArgument("ensemble carries no observable".into()));
        }
        let beta = 1.0 / t;
        let z = self.partition_function(beta);
        if z.scaled == 0.0 || z.scaled.abs() < Z_FLOOR {
            return Err(Error::DivisionByZero(format!("Z = 0 at T = {t}")));
        }
        let mut re = CompensatedSum::new();
        let mut im = CompensatedSum::new();
        for (i, l) in self.levels.iter().enumerate() {
            let v = self.scaled_weight(i, beta) * l.observable.unwrap();
            re.add(v.re);
            im.add(v.im);
        }
        Ok((re.value() / z.scaled, (im.value() / z.scaled).abs()))
    }
}

/// Smallest `|Z|·e^{β K_min}` accepted before a point is declared invalid.
pub const Z_FLOOR: f64 = 1e-300;

/// `Z = sign · exp(ln_abs)`; `scaled` is `Z e^{β K_min}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SignedLog {
    pub sign: i8,
    pub ln_abs: f64,
    pub scaled: f64,
}

impl SignedLog {
    fn from_scaled(scaled: f64, ln_scale: f64) -> Self {
        let sign = if scaled > 0.0 {
            1
        } else if scaled < 0.0 {
            -1
        } else {
            0
        };
        SignedLog { sign, ln_abs: scaled.abs().ln() + ln_scale, scaled }
    }

    pub fn value(&self) -> f64 {
        self.sign as f64 * self.ln_abs.exp()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DominantSplit {
    pub z0: f64,
    pub z_prime: f64,
    /// Both parts are multiplied by `exp(ln_scale)` in absolute terms.
    pub ln_scale: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ZeroRecord {
    pub t: f64,
    pub bracket: (f64, f64),
    pub signs: (i8, i8),
}

#[derive(Clone, Debug, PartialEq)]
pub struct ZeroScan {
    pub zeros: Vec<ZeroRecord>,
    pub grid_points: usize,
    pub stable: bool,
}

impl ZeroScan {
    pub fn critical_temperature(&self) -> f64 {
        self.zeros.iter().map(|z| z.t).fold(0.0, f64::max)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ThermoPoint {
    pub t: f64,
    pub z_sign: i8,
    pub ln_abs_z: f64,
    pub f: f64,
    pub u: f64,
    pub s: f64,
    pub cv: f64,
    pub gap: Option<f64>,
    pub z_nonpositive: bool,
    pub near_defective: bool,
}

impl ThermoPoint {
    fn nan(t: f64) -> Self {
        ThermoPoint {
            t,
            z_sign: 0,
            ln_abs_z: f64::NAN,
            f: f64::NAN,
            u: f64::NAN,
            s: f64::NAN,
            cv: f64::NAN,
            gap: None,
            z_nonpositive: true,
            near_defective: false,
        }
    }

    pub fn valid(&self) -> bool {
        !self.z_nonpositive
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FiniteDifference {
    pub entropy: f64,
    pub heat_capacity: f64,
}

fn validate_grid(t_grid: &[f64]) -> Result<()> {
    if t_grid.is_empty() {
        return Err(Error::InvalidArgument("empty temperature grid".into()));
    }
    if t_grid[0] <= 0.0 || t_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument("temperature grid must be positive and increasing".into()));
    }
    Ok(())
}

fn refine_grid(grid: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(2 * grid.len());
    for w in grid.windows(2) {
        out.push(w[0]);
        out.push(0.5 * (w[0] + w[1]));
    }
    out.extend(grid.last());
    out
}

/// `Δ = (G/2) sqrt(max(0, ⟨O⟩))` from an ensemble carrying the gap observable.
pub fn gap_from_expectation(pairing: f64, expectation: f64) -> Result<f64> {
    if expectation < -1e-8 {
        return Err(Error::NumericalQuality(format!("negative pair correlator {expectation}")));
    }
    Ok(0.5 * pairing * expectation.max(0.0).sqrt())
}

/// Spectra and ensemble for one parameter point.
pub fn ensemble(p: &ModelParams, gap: Option<GapOperator>, opts: &SpectralOptions) -> Result<Ensemble> {
    let vectors = gap == Some(GapOperator::Collective);
    let set = SpectrumSet::new(p, vectors, opts)?;
    Ensemble::from_spectra(&set, gap)
}

pub fn partition_function(p: &ModelParams, beta: f64, opts: &SpectralOptions) -> Result<SignedLog> {
    if !(beta > 0.0) {
        return Err(Error::InvalidArgument("beta must be positive".into()));
    }
    Ok(ensemble(p, None, opts)?.partition_function(beta))
}

pub fn critical_temperature(p: &ModelParams, opts: &SpectralOptions) -> Result<f64> {
    ensemble(p, None, opts)?.critical_temperature(opts)
}

/// Potentials at `(p, T)`, with the pairing gap when `gap` is set and `Z > 0`.
pub fn potentials(p: &ModelParams, t: f64, gap: Option<GapOperator>, opts: &SpectralOptions) -> Result<ThermoPoint> {
    let ens = ensemble(p, gap, opts)?;
    let mut pt = ens.potentials(t)?;
    if gap.is_some() && pt.valid() {
        let (o, _) = ens.thermal_expectation(t)?;
        pt.gap = Some(gap_from_expectation(p.pairing, o)?);
    }
    Ok(pt)
}

/// Pairing gap at `(p, T)`; needs `Z > 0`.
pub fn pairing_gap(p: &ModelParams, t: f64, gap: GapOperator, opts: &SpectralOptions) -> Result<f64> {
    let ens = ensemble(p, Some(gap), opts)?;
    if ens.partition_function(1.0 / t).sign <= 0 {
        return Err(Error::Domain(format!("Z <= 0 at T = {t}")));
    }
    let (o, _) = ens.thermal_expectation(t)?;
    gap_from_expectation(p.pairing, o)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::blocks::Sizes;
    use crate::half::HalfInt;
    use proptest::prelude::*;

    fn toy(energies: &[Complex64]) -> Ensemble {
        Ensemble::new(
            energies
                .iter()
                .map(|&e| Level { energy: e, weight: 1.0, n_nv: 0.0, n_qb: 0.0, observable: None })
                .collect(),
            0.0,
            0.0,
        )
        .unwrap()
    }

    #[test]
    fn two_level_closed_forms() {
        let ens = toy(&[Complex64::new(-1.0, 0.0), Complex64::new(1.0, 0.0)]);
        for &t in &[0.3, 1.0, 4.0] {
            let b = 1.0 / t;
            let pt = ens.potentials(t).unwrap();
            assert!((pt.u + b.tanh()).abs() < 1e-13);
            assert!((pt.s - ((2.0 * b.cosh()).ln() - b * b.tanh())).abs() < 1e-12);
            assert!((pt.f - pt.u + t * pt.s).abs() < 1e-12);
        }
    }

    #[test]
    fn single_pair_zero_and_tc() {
        let (eps, gamma) = (0.4, 0.7);
        let ens = toy(&[Complex64::new(eps, gamma), Complex64::new(eps, -gamma)]);
        let beta = 1.3;
        let z = ens.partition_function(beta).value();
        assert!((z - 2.0 * (-beta * eps).exp() * (beta * gamma).cos()).abs() < 1e-14);
        let tc = ens.critical_temperature(&SpectralOptions::default()).unwrap();
        assert!((tc - 2.0 * gamma / std::f64::consts::PI).abs() < 1e-9 * tc);
        let grid: Vec<f64> = (10..=400).map(|i| 0.005 * i as f64).collect();
        let scan = ens.find_zeros_stable(&grid, 3).unwrap();
        assert!(scan.stable);
        assert!((scan.critical_temperature() - tc).abs() < 1e-7 * tc);
        // every zero satisfies β γ = (2k+1) π/2
        for zr in &scan.zeros {
            let k = (gamma / zr.t / std::f64::consts::PI - 0.5).round();
            assert!((gamma / zr.t - (2.0 * k + 1.0) * std::f64::consts::FRAC_PI_2).abs() < 1e-6);
        }
    }

    #[test]
    fn dominated_spectrum_has_no_zero() {
        let ens = toy(&[
            Complex64::new(-2.0, 0.0),
            Complex64::new(1.0, 0.5),
            Complex64::new(1.0, -0.5),
        ]);
        assert_eq!(ens.critical_temperature(&SpectralOptions::default()).unwrap(), 0.0);
    }

    #[test]
    fn signed_log_survives_large_beta() {
        let ens = toy(&[Complex64::new(-30.0, 0.0), Complex64::new(5.0, 0.0)]);
        let z = ens.partition_function(1e3);
        assert_eq!(z.sign, 1);
        assert!((z.ln_abs - 3e4).abs() < 1e-9);
    }

    #[test]
    fn infinite_temperature_counts_states() {
        let p = ModelParams { coupling: 1.73, alpha: 0.36, ..Default::default() };
        let ens = ensemble(&p, None, &SpectralOptions::default()).unwrap();
        let z = ens.partition_function(1e-12).value();
        assert!((z - 16_777_216.0).abs() < 1e-3, "{z}");
    }

    #[test]
    fn small_system_identity_expectation() {
        let p = ModelParams { coupling: 1.0, alpha: 0.7, ..Default::default() }
            .with_sizes(Sizes::new(HalfInt::from_int(1), 1, 1).unwrap());
        let mut ens = ensemble(&p, None, &SpectralOptions::default()).unwrap();
        for l in &mut ens.levels {
            l.observable = Some(Complex64::new(1.0, 0.0));
        }
        let (v, im) = ens.thermal_expectation(0.8).unwrap();
        assert!((v - 1.0).abs() < 1e-14 && im < 1e-14);
    }

    #[test]
    fn gap_vanishes_without_pairing() {
        let p = ModelParams { pairing: 0.0, coupling: 0.0, ..Default::default() };
        let g = pairing_gap(&p, 0.5, GapOperator::Collective, &SpectralOptions::default()).unwrap();
        assert_eq!(g, 0.0);
    }

    #[test]
    fn mu_shift_is_scalar_per_level() {
        let sizes = Sizes::new(HalfInt::HALF, 1, 1).unwrap();
        let base = ModelParams { coupling: 0.5, alpha: 0.8, ..Default::default() }.with_sizes(sizes);
        let shifted = ModelParams { mu_s: 0.3, mu_qb: -0.2, ..base };
        let o = SpectralOptions::default();
        let e0 = ensemble(&base, None, &o).unwrap();
        let e1 = ensemble(&shifted, None, &o).unwrap();
        // Z(μ) = Σ w e^{-β(E - μ_S N - μ_qb N_qb)} by direct expansion
        let beta = 0.9;
        let direct: f64 = e1
            .levels
            .iter()
            .map(|l| {
                (l.weight * (-beta * (l.energy - 0.3 * l.n_nv + 0.2 * l.n_qb)).exp()).re
            })
            .sum();
        assert!((e1.partition_function(beta).value() - direct).abs() < 1e-12 * direct);
        assert!(e0.partition_function(beta).value() > 0.0);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn legendre_and_fd_on_random_real_spectra(
            energies in proptest::collection::vec(-3.0f64..3.0, 2..8),
            t in 0.2f64..5.0,
        ) {
            let ens = toy(&energies.iter().map(|&e| Complex64::new(e, 0.0)).collect::<Vec<_>>());
            let pt = ens.potentials(t).unwrap();
            prop_assert!((pt.f - (pt.u - t * pt.s)).abs() <= 1e-9 * pt.f.abs().max(1.0));
            let fd = ens.finite_difference_check(t, 1e-3).unwrap();
            prop_assert!((fd.entropy - pt.s).abs() <= 1e-6 * pt.s.abs().max(1.0));
            prop_assert!((fd.heat_capacity - pt.cv).abs() <= 1e-5 * pt.cv.abs().max(1e-2));
        }

        #[test]
        fn blockwise_sum_equals_merged(split in 1usize..6, t in 0.1f64..4.0) {
            let energies: Vec<Complex64> = (0..6).map(|i| Complex64::new(0.3 * i as f64 - 0.7, 0.0)).collect();
            let ens = toy(&energies);
            let mut merged = CompensatedSum::new();
            for chunk in energies.chunks(split) {
                merged.add(toy(chunk).partition_function(1.0 / t).value());
            }
            let z = ens.partition_function(1.0 / t).value();
            prop_assert!((z - merged.value()).abs() <= 1e-12 * z);
        }
    }
}
