//! Brute-force reference on the full fermionic Fock space.
//!
//! Modes are bit positions of a `u32` occupation word; creation and
//! annihilation carry the Jordan-Wigner parity of all lower modes. Only tiny
//! systems are accepted.

use std::collections::BTreeMap;

use faer::Mat;
use num_complex::Complex64;

use crate::algebra::OperatorMatrix;
use crate::blocks::{enumerate_blocks, Sizes};
use crate::error::{Error, Result};
use crate::half::HalfInt;
use crate::model::ModelParams;
use crate::spectral::run_evd;

/// Largest accepted Fock dimension.
pub const MAX_LOG2_DIM: i64 = 16;

/// Occupation-number basis of `4Ω` NV modes followed by `2(Ω1+Ω2)` pair-level modes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FockSpace {
    pub sizes: Sizes,
    pub nv_modes: usize,
    pub qb_modes: usize,
    pub dim: usize,
}

impl FockSpace {
    pub fn new(sizes: Sizes) -> Result<Self> {
        let log2 = sizes.log2_dimension();
        if log2 > MAX_LOG2_DIM {
            return Err(Error::Refused(format!("Fock dimension 2^{log2} exceeds 2^{MAX_LOG2_DIM}")));
        }
        let nv_modes = 2 * sizes.omega.twice() as usize;
        let qb_modes = 2 * (sizes.omega1 + sizes.omega2) as usize;
        Ok(FockSpace { sizes, nv_modes, qb_modes, dim: 1 << log2 })
    }

    fn sublevels(&self) -> usize {
        self.nv_modes / 2
    }

    /// NV mode of `level ∈ {0, 1}` at sublevel `k`.
    pub fn nv_mode(&self, level: usize, k: usize) -> usize {
        level * self.sublevels() + k
    }

    /// Pair-level mode `m ∈ ±1..=±Ω_i` of level `i ∈ {0, 1}`.
    pub fn qb_mode(&self, i: usize, m: i64) -> usize {
        let omega = [self.sizes.omega1, self.sizes.omega2];
        let base = self.nv_modes + if i == 0 { 0 } else { 2 * omega[0] as usize };
        let slot = if m > 0 { m - 1 } else { omega[i] - m - 1 };
        base + slot as usize
    }

    fn level_size(&self, i: usize) -> i64 {
        [self.sizes.omega1, self.sizes.omega2][i]
    }
}

#[derive(Clone, Copy, Debug)]
enum Ladder {
    Create(usize),
    Annihilate(usize),
}

/// Applies a product of ladder operators (rightmost first) to a basis word.
fn apply_string(ops: &[Ladder], mut state: u32) -> Option<(u32, f64)> {
    let mut sign = 1.0;
    for op in ops.iter().rev() {
        let (mode, create) = match *op {
            Ladder::Create(j) => (j, true),
            Ladder::Annihilate(j) => (j, false),
        };
        let bit = 1u32 << mode;
        if (state & bit != 0) == create {
            return None;
        }
        if (state & (bit - 1)).count_ones() % 2 == 1 {
            sign = -sign;
        }
        state ^= bit;
    }
    Some((state, sign))
}

/// Real sparse matrix stored by rows.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseOp {
    dim: usize,
    rows: Vec<BTreeMap<usize, f64>>,
}

impl SparseOp {
    pub fn zeros(dim: usize) -> Self {
        SparseOp { dim, rows: vec![BTreeMap::new(); dim] }
    }

    pub fn diagonal(values: &[f64]) -> Self {
        let mut m = Self::zeros(values.len());
        for (i, &v) in values.iter().enumerate() {
            m.add_entry(i, i, v);
        }
        m
    }

    fn from_strings(dim: usize, terms: &[(f64, Vec<Ladder>)]) -> Self {
        let mut m = Self::zeros(dim);
        for col in 0..dim {
            for (c, ops) in terms {
                if let Some((row, sign)) = apply_string(ops, col as u32) {
                    m.add_entry(row as usize, col, c * sign);
                }
            }
        }
        m
    }

    fn add_entry(&mut self, i: usize, j: usize, v: f64) {
        *self.rows[i].entry(j).or_insert(0.0) += v;
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.rows[i].get(&j).copied().unwrap_or(0.0)
    }

    pub fn add(&self, other: &Self) -> Self {
        self.add_scaled(other, 1.0)
    }

    pub fn add_scaled(&self, other: &Self, c: f64) -> Self {
        let mut out = self.clone();
        for (i, row) in other.rows.iter().enumerate() {
            for (&j, &v) in row {
                out.add_entry(i, j, c * v);
            }
        }
        out
    }

    pub fn scale(&self, c: f64) -> Self {
        SparseOp::zeros(self.dim).add_scaled(self, c)
    }

    pub fn mul(&self, rhs: &Self) -> Self {
        let mut out = Self::zeros(self.dim);
        for (i, row) in self.rows.iter().enumerate() {
            for (&k, &a) in row {
                for (&j, &b) in &rhs.rows[k] {
                    out.add_entry(i, j, a * b);
                }
            }
        }
        out
    }

    pub fn transpose(&self) -> Self {
        let mut out = Self::zeros(self.dim);
        for (i, row) in self.rows.iter().enumerate() {
            for (&j, &v) in row {
                out.add_entry(j, i, v);
            }
        }
        out
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        let d = self.add_scaled(other, -1.0);
        d.rows.iter().flat_map(|r| r.values()).fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn to_dense(&self) -> Mat<f64> {
        Mat::from_fn(self.dim, self.dim, |i, j| self.get(i, j))
    }

    pub fn to_operator(&self) -> OperatorMatrix {
        let dense: Vec<f64> = (0..self.dim * self.dim).map(|x| self.get(x / self.dim, x % self.dim)).collect();
        OperatorMatrix::from_real_rows(self.dim, &dense)
    }
}

/// Collective operators on the Fock space.
#[derive(Clone, Debug)]
pub struct FockOperators {
    pub space: FockSpace,
    /// NV quasispin `S+ = Σ_k c†_{2k} c_{1k}` and its adjoint.
    pub nv_plus: SparseOp,
    pub nv_minus: SparseOp,
    pub nv_z: SparseOp,
    /// Pair creation `s+_i = Σ_{m>0} c†_{i,m} c†_{i,-m}` per level.
    pub pair_plus: [SparseOp; 2],
    pub pair_minus: [SparseOp; 2],
    pub pair_z: [SparseOp; 2],
    /// NV fermion number.
    pub n_nv: SparseOp,
    /// Number of pairs, `(N_1 + N_2)/2`.
    pub n_qb: SparseOp,
}

impl FockOperators {
    pub fn new(space: FockSpace) -> Self {
        let dim = space.dim;
        let occupation = |modes: &[usize]| -> Vec<f64> {
            (0..dim).map(|s| modes.iter().filter(|&&j| s >> j & 1 == 1).count() as f64).collect()
        };
        let subl = space.sublevels();
        let plus_terms: Vec<(f64, Vec<Ladder>)> = (0..subl)
            .map(|k| (1.0, vec![Ladder::Create(space.nv_mode(1, k)), Ladder::Annihilate(space.nv_mode(0, k))]))
            .collect();
        let nv_plus = SparseOp::from_strings(dim, &plus_terms);
        let nv_minus = nv_plus.transpose();
        let upper: Vec<usize> = (0..subl).map(|k| space.nv_mode(1, k)).collect();
        let lower: Vec<usize> = (0..subl).map(|k| space.nv_mode(0, k)).collect();
        let (nu, nl) = (occupation(&upper), occupation(&lower));
        let nv_z = SparseOp::diagonal(&nu.iter().zip(&nl).map(|(a, b)| 0.5 * (a - b)).collect::<Vec<_>>());
        let n_nv = SparseOp::diagonal(&nu.iter().zip(&nl).map(|(a, b)| a + b).collect::<Vec<_>>());

        let level = |i: usize| -> (SparseOp, SparseOp, Vec<f64>) {
            let omega = space.level_size(i);
            let terms: Vec<(f64, Vec<Ladder>)> = (1..=omega)
                .map(|m| (1.0, vec![Ladder::Create(space.qb_mode(i, m)), Ladder::Create(space.qb_mode(i, -m))]))
                .collect();
            let plus = SparseOp::from_strings(dim, &terms);
            let modes: Vec<usize> = (1..=omega).flat_map(|m| [space.qb_mode(i, m), space.qb_mode(i, -m)]).collect();
            (plus.transpose(), plus, occupation(&modes))
        };
        let (m1, p1, n1) = level(0);
        let (m2, p2, n2) = level(1);
        let z = |n: &[f64], omega: i64| -> SparseOp {
            SparseOp::diagonal(&n.iter().map(|x| 0.5 * (x - omega as f64)).collect::<Vec<_>>())
        };
        let pair_z = [z(&n1, space.sizes.omega1), z(&n2, space.sizes.omega2)];
        let n_qb = SparseOp::diagonal(&n1.iter().zip(&n2).map(|(a, b)| 0.5 * (a + b)).collect::<Vec<_>>());
        FockOperators {
            space,
            nv_plus,
            nv_minus,
            nv_z,
            pair_plus: [p1, p2],
            pair_minus: [m1, m2],
            pair_z,
            n_nv,
            n_qb,
        }
    }

    /// `(s+1 + s+2)(s-1 + s-2)`.
    pub fn pair_correlator(&self) -> SparseOp {
        let plus = self.pair_plus[0].add(&self.pair_plus[1]);
        let minus = self.pair_minus[0].add(&self.pair_minus[1]);
        plus.mul(&minus)
    }

    pub fn hamiltonian(&self, p: &ModelParams) -> SparseOp {
        let qz = self.pair_z[0].add(&self.pair_z[1]);
        let pairing = self.pair_z[0]
            .scale(p.eps1)
            .add_scaled(&self.pair_z[1], p.eps2)
            .add_scaled(&self.pair_correlator(), -p.pairing);
        let sp2 = self.nv_plus.mul(&self.nv_plus);
        let sm2 = self.nv_minus.mul(&self.nv_minus);
        let nv = self.nv_z.mul(&self.nv_z).scale(p.d).add_scaled(&sp2.add(&sm2), 0.5 * p.e);
        let ladder = self.nv_plus.scale(p.alpha).add(&self.nv_minus);
        pairing.add(&nv).add_scaled(&qz.mul(&ladder), p.coupling)
    }

    /// `H - μ_S N_NV - μ_qb N_qb`.
    pub fn grand_hamiltonian(&self, p: &ModelParams) -> SparseOp {
        self.hamiltonian(p).add_scaled(&self.n_nv, -p.mu_s).add_scaled(&self.n_qb, -p.mu_qb)
    }

    /// Casimir `S_z² + (S+S- + S-S+)/2` of the NV quasispin.
    pub fn nv_casimir(&self) -> SparseOp {
        casimir(&self.nv_z, &self.nv_plus, &self.nv_minus)
    }

    pub fn pair_casimir(&self, i: usize) -> SparseOp {
        casimir(&self.pair_z[i], &self.pair_plus[i], &self.pair_minus[i])
    }
}

fn casimir(z: &SparseOp, plus: &SparseOp, minus: &SparseOp) -> SparseOp {
    z.mul(z).add_scaled(&plus.mul(minus).add(&minus.mul(plus)), 0.5)
}

pub fn fock_operators(p: &ModelParams) -> Result<FockOperators> {
    p.validate()?;
    Ok(FockOperators::new(FockSpace::new(p.sizes)?))
}

/// The full many-body Hamiltonian.
pub fn fock_hamiltonian(p: &ModelParams) -> Result<OperatorMatrix> {
    Ok(fock_operators(p)?.hamiltonian(p).to_operator())
}

/// Eigenvalues of the full Hamiltonian, unsorted.
pub fn fock_spectrum(p: &ModelParams) -> Result<Vec<Complex64>> {
    let h = fock_operators(p)?.hamiltonian(p).to_dense();
    Ok(run_evd(h.as_ref(), false)?.0)
}

/// `Tr e^{-β(H - μN)}` from the full eigenvalue list.
pub fn fock_partition(p: &ModelParams, beta: f64) -> Result<f64> {
    let k = fock_operators(p)?.grand_hamiltonian(p).to_dense();
    let vals = run_evd(k.as_ref(), false)?.0;
    let z: Complex64 = vals.iter().map(|e| (-beta * e).exp()).sum();
    Ok(z.re)
}

/// `Tr(e^{-β(H - μN)} O) / Tr e^{-β(H - μN)}` from a matrix exponential.
///
/// Independent of any eigenvector: the exponential is taken by scaling and
/// squaring after shifting by the smallest diagonal element.
pub fn fock_expectation(o: &SparseOp, p: &ModelParams, beta: f64) -> Result<f64> {
    let ops = fock_operators(p)?;
    if o.dim() != ops.space.dim {
        return Err(Error::InvalidArgument(format!("operator dim {} != Fock dim {}", o.dim(), ops.space.dim)));
    }
    let k = ops.grand_hamiltonian(p).to_dense();
    let shift = (0..k.nrows()).map(|i| k[(i, i)]).fold(f64::INFINITY, f64::min);
    let a = Mat::from_fn(k.nrows(), k.ncols(), |i, j| -beta * (k[(i, j)] - if i == j { shift } else { 0.0 }));
    let w = expm(&a);
    let z: f64 = (0..w.nrows()).map(|i| w[(i, i)]).sum();
    if !(z.is_finite() && z != 0.0) {
        return Err(Error::DivisionByZero(format!("Fock trace {z} at beta = {beta}")));
    }
    let mut num = 0.0;
    for (i, row) in o.rows.iter().enumerate() {
        for (&j, &v) in row {
            num += w[(j, i)] * v;
        }
    }
    Ok(num / z)
}

fn expm(a: &Mat<f64>) -> Mat<f64> {
    let n = a.nrows();
    let norm = (0..n).map(|i| (0..n).map(|j| a[(i, j)].abs()).sum::<f64>()).fold(0.0, f64::max);
    let squarings = if norm > 0.5 { (norm / 0.5).log2().ceil() as i32 } else { 0 };
    let scaled = a * faer::Scale(0.5f64.powi(squarings));
    let mut term = Mat::<f64>::identity(n, n);
    let mut sum = Mat::<f64>::identity(n, n);
    for m in 1..=20 {
        term = &term * &scaled * faer::Scale(1.0 / m as f64);
        sum += &term;
    }
    for _ in 0..squarings {
        sum = &sum * &sum;
    }
    sum
}

/// Sector label `(N, 2S, 2s1, 2s2)`.
pub type SectorCount = BTreeMap<(i64, i64, i64, i64), u128>;

/// Dimension of every sector as implied by the block enumeration.
pub fn block_counts(sizes: Sizes) -> Result<SectorCount> {
    let mut out = SectorCount::new();
    for b in enumerate_blocks(sizes)? {
        let key = (b.nv.n, b.nv.s.twice(), b.qb.s1.twice(), b.qb.s2.twice());
        *out.entry(key).or_insert(0) += b.mult * b.dim as u128;
    }
    Ok(out)
}

/// Dimension of every joint eigenspace of `N`, `S²`, `s1²`, `s2²` on the Fock space.
///
/// A generic linear combination of the commuting Casimirs is diagonalized and
/// each eigenvalue decoded against all admissible labels.
pub fn casimir_counts(sizes: Sizes) -> Result<SectorCount> {
    let space = FockSpace::new(sizes)?;
    let ops = FockOperators::new(space);
    let weights = [std::f64::consts::SQRT_2, 3f64.sqrt(), 5f64.sqrt(), std::f64::consts::PI];
    let c = ops
        .nv_casimir()
        .scale(weights[0])
        .add_scaled(&ops.pair_casimir(0), weights[1])
        .add_scaled(&ops.pair_casimir(1), weights[2])
        .add_scaled(&ops.n_nv, weights[3]);
    let vals = run_evd(c.to_dense().as_ref(), false)?.0;

    let quad = |twice: i64| -> f64 {
        let s = 0.5 * twice as f64;
        s * (s + 1.0)
    };
    let mut labels = Vec::new();
    for n in 0..=space.nv_modes as i64 {
        for s in 0..=sizes.omega.twice() {
            for s1 in 0..=sizes.omega1 {
                for s2 in 0..=sizes.omega2 {
                    let v = weights[0] * quad(s) + weights[1] * quad(s1) + weights[2] * quad(s2) + weights[3] * n as f64;
                    labels.push(((n, s, s1, s2), v));
                }
            }
        }
    }
    let mut out = SectorCount::new();
    for e in vals {
        let (key, v) = labels
            .iter()
            .min_by(|a, b| (a.1 - e.re).abs().total_cmp(&(b.1 - e.re).abs()))
            .ok_or_else(|| Error::Internal("no sector labels".into()))?;
        if (v - e.re).abs() > 1e-6 || e.im.abs() > 1e-6 {
            return Err(Error::NumericalQuality(format!("Casimir eigenvalue {e} matches no sector")));
        }
        *out.entry(*key).or_insert(0) += 1;
    }
    Ok(out)
}

/// Largest distance in a greedy nearest-neighbour matching of two multisets;
/// infinite when the sizes differ.
pub fn multiset_distance(a: &[Complex64], b: &[Complex64]) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    let mut used = vec![false; b.len()];
    let mut worst = 0.0f64;
    let mut sorted: Vec<Complex64> = a.to_vec();
    sorted.sort_by(|x, y| x.re.total_cmp(&y.re).then(x.im.total_cmp(&y.im)));
    for x in sorted {
        let (j, d) = b
            .iter()
            .enumerate()
            .filter(|(j, _)| !used[*j])
            .map(|(j, y)| (j, (x - y).norm()))
            .min_by(|p, q| p.1.total_cmp(&q.1))
            .expect("sizes agree");
        used[j] = true;
        worst = worst.max(d);
    }
    worst
}

/// Multiplicity-weighted union of all block spectra.
pub fn block_spectrum_multiset(p: &ModelParams) -> Result<Vec<Complex64>> {
    let mut out = Vec::new();
    for b in enumerate_blocks(p.sizes)? {
        let h = crate::model::build_block_hamiltonian(p, &b)?;
        let vals = crate::spectral::eigenvalues(&h)?;
        for _ in 0..b.mult {
            out.extend_from_slice(&vals);
        }
    }
    Ok(out)
}

/// The smallest test system, `Ω = 1/2`, `Ω1 = Ω2 = 1`.
pub fn tiny_sizes() -> Sizes {
    Sizes { omega: HalfInt::from_twice(1), omega1: 1, omega2: 1 }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::thermo::{ensemble, GapOperator};
    use crate::spectral::SpectralOptions;

    fn tiny(alpha: f64, g: f64) -> ModelParams {
        ModelParams { sizes: tiny_sizes(), ..Default::default() }.with_alpha(alpha).with_coupling(g)
    }

    #[test]
    fn dimension_and_guard() {
        assert_eq!(FockSpace::new(tiny_sizes()).unwrap().dim, 64);
        assert!(matches!(FockSpace::new(Sizes::from_counts(8, 2).unwrap()), Err(Error::Refused(_))));
    }

    #[test]
    fn quasispin_closure() {
        let ops = FockOperators::new(FockSpace::new(Sizes { omega: HalfInt::from_int(1), omega1: 1, omega2: 2 }).unwrap());
        let comm = ops.nv_plus.mul(&ops.nv_minus).add_scaled(&ops.nv_minus.mul(&ops.nv_plus), -1.0);
        assert!(comm.max_abs_diff(&ops.nv_z.scale(2.0)) < 1e-12);
        for i in 0..2 {
            let c = ops.pair_plus[i].mul(&ops.pair_minus[i]).add_scaled(&ops.pair_minus[i].mul(&ops.pair_plus[i]), -1.0);
            assert!(c.max_abs_diff(&ops.pair_z[i].scale(2.0)) < 1e-12);
        }
    }

    #[test]
    fn symmetric_at_unit_alpha() {
        let ops = fock_operators(&tiny(1.0, 1.0)).unwrap();
        let h = ops.hamiltonian(&tiny(1.0, 1.0));
        assert!(h.max_abs_diff(&h.transpose()) < 1e-14);
        let h = ops.hamiltonian(&tiny(0.4, 1.0));
        assert!(h.max_abs_diff(&h.transpose()) > 0.1);
    }

    #[test]
    fn casimir_counts_match_blocks() {
        for sizes in [tiny_sizes(), Sizes { omega: HalfInt::from_int(1), omega1: 1, omega2: 1 }, Sizes { omega: HalfInt::from_twice(1), omega1: 2, omega2: 1 }] {
            assert_eq!(casimir_counts(sizes).unwrap(), block_counts(sizes).unwrap());
        }
    }

    #[test]
    fn spectra_match_blocks() {
        for (a, g) in [(1.0, 1.0), (0.4, 1.73), (0.2, 2.5)] {
            let p = tiny(a, g);
            let d = multiset_distance(&fock_spectrum(&p).unwrap(), &block_spectrum_multiset(&p).unwrap());
            assert!(d < 1e-8, "alpha={a} g={g}: {d}");
        }
    }

    #[test]
    fn partition_limits_and_factorization() {
        let p = tiny(0.4, 1.73);
        assert!((fock_partition(&p, 1e-12).unwrap() - 64.0).abs() < 1e-9);
        let free = tiny(0.4, 0.0);
        let nv_only = ModelParams { pairing: 0.0, eps1: 0.0, eps2: 0.0, ..free };
        let qb_only = ModelParams { d: 0.0, e: 0.0, ..free };
        for beta in [0.1, 1.0, 5.0] {
            // each factor sees the other subsystem as a flat degeneracy
            let z = fock_partition(&free, beta).unwrap();
            let z_nv = fock_partition(&nv_only, beta).unwrap() / 16.0;
            let z_qb = fock_partition(&qb_only, beta).unwrap() / 4.0;
            assert!((z - z_nv * z_qb).abs() < 1e-10 * z);
        }
    }

    #[test]
    fn expectation_matches_pipeline() {
        let opts = SpectralOptions::default();
        for (a, g) in [(1.0, 1.0), (0.4, 1.73)] {
            let p = tiny(a, g);
            let ops = fock_operators(&p).unwrap();
            let ens = ensemble(&p, Some(GapOperator::Collective), &opts).unwrap();
            for beta in [0.1, 1.0, 5.0] {
                let fock = fock_expectation(&ops.pair_correlator(), &p, beta).unwrap();
                let (blocks, _) = ens.thermal_expectation(1.0 / beta).unwrap();
                assert!((fock - blocks).abs() < 1e-8 * fock.abs().max(1.0), "{fock} vs {blocks}");
                let id = fock_expectation(&SparseOp::diagonal(&vec![1.0; 64]), &p, beta).unwrap();
                assert!((id - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn chemical_potentials_match_pipeline() {
        let opts = SpectralOptions::default();
        let p = ModelParams { mu_s: 0.3, mu_qb: -0.2, ..tiny(0.4, 1.73) };
        let ens = ensemble(&p, None, &opts).unwrap();
        for beta in [0.1, 1.0, 5.0] {
            let z = fock_partition(&p, beta).unwrap();
            let zb = ens.partition_function(beta).value();
            assert!((z - zb).abs() < 1e-8 * z.abs(), "{z} vs {zb}");
        }
    }
}
