//! Non-symmetric eigendecomposition of block Hamiltonians, biorthogonal
//! left/right pairing, spectrum classification and exceptional points.

use std::collections::BTreeMap;

use faer::dyn_stack::{MemBuffer, MemStack};
use faer::linalg::evd::{evd_real, evd_scratch, ComputeEigenvectors};
use faer::linalg::solvers::DenseSolveCore;
use faer::diag::Diag;
use faer::{c64, Mat, MatRef, Par};
use num_complex::Complex64;

use crate::algebra::OperatorMatrix;
use crate::blocks::{enumerate_blocks, SectorKey};
use crate::error::{Error, Result};
use crate::model::{BlockOperators, ModelParams};
use crate::numerics::{bisect_predicate, linear_fit, linspace, par_map};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpectralOptions {
    /// An eigenvalue is real when `|Im E| <= im_tol * max(1, |E|)`.
    pub im_tol: f64,
    /// Eigenvalues closer than this (GHz) are treated as one level.
    pub tie_tol: f64,
    /// `|<L|R>|` of unit vectors below this marks a near-defective block.
    pub defect_tol: f64,
}

impl Default for SpectralOptions {
    fn default() -> Self {
        SpectralOptions { im_tol: 1e-9, tie_tol: 1e-7, defect_tol: 1e-6 }
    }
}

impl SpectralOptions {
    pub fn is_real(&self, z: Complex64) -> bool {
        z.im.abs() <= self.im_tol * z.norm().max(1.0)
    }
}

fn cmp_re_im(a: &Complex64, b: &Complex64) -> std::cmp::Ordering {
    a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im))
}

pub(crate) fn run_evd(a: MatRef<'_, f64>, vectors: bool) -> Result<(Vec<Complex64>, Option<Mat<c64>>)> {
    let n = a.nrows();
    if n == 0 {
        return Ok((Vec::new(), vectors.then(|| Mat::zeros(0, 0))));
    }
    let want = if vectors { ComputeEigenvectors::Yes } else { ComputeEigenvectors::No };
    let mut s_re = Diag::<f64>::zeros(n);
    let mut s_im = Diag::<f64>::zeros(n);
    let mut u = if vectors { Some(Mat::<f64>::zeros(n, n)) } else { None };
    let mut mem = MemBuffer::new(evd_scratch::<f64>(
        n,
        ComputeEigenvectors::No,
        want,
        Par::Seq,
        Default::default(),
    ));
    evd_real(
        a,
        s_re.as_mut(),
        s_im.as_mut(),
        None,
        u.as_mut().map(|m| m.as_mut()),
        Par::Seq,
        MemStack::new(&mut mem),
        Default::default(),
    )
    .map_err(|e| Error::SolverFailure { block: String::new(), reason: format!("{e:?}") })?;

    let mut vals = Vec::with_capacity(n);
    let mut vecs = vectors.then(|| Mat::<c64>::zeros(n, n));
    let mut j = 0;
    while j < n {
        let (re, im) = (s_re[j], s_im[j]);
        if im == 0.0 || j + 1 == n {
            vals.push(Complex64::new(re, im));
            if let (Some(v), Some(u)) = (vecs.as_mut(), u.as_ref()) {
                for i in 0..n {
                    v[(i, j)] = c64::new(u[(i, j)], 0.0);
                }
            }
            j += 1;
        } else {
            vals.push(Complex64::new(re, im));
            vals.push(Complex64::new(re, -im));
            if let (Some(v), Some(u)) = (vecs.as_mut(), u.as_ref()) {
                for i in 0..n {
                    v[(i, j)] = c64::new(u[(i, j)], u[(i, j + 1)]);
                    v[(i, j + 1)] = c64::new(u[(i, j)], -u[(i, j + 1)]);
                }
            }
            j += 2;
        }
    }
    Ok((vals, vecs))
}

/// Eigenvalues of a real matrix, unsorted.
pub fn eigenvalues(h: &OperatorMatrix) -> Result<Vec<Complex64>> {
    let a = h.to_real()?;
    Ok(run_evd(a.as_ref(), false)?.0)
}

fn normalize_columns(m: &mut Mat<c64>) {
    for j in 0..m.ncols() {
        let norm = (0..m.nrows()).map(|i| m[(i, j)].norm_sqr()).sum::<f64>().sqrt();
        if norm > 0.0 {
            for i in 0..m.nrows() {
                m[(i, j)] /= norm;
            }
        }
    }
}

/// Bilinear pairing `yᵀ x` (no conjugation): left vectors are eigenvectors of `Hᵀ`.
fn pair(y: &Mat<c64>, jy: usize, x: &Mat<c64>, jx: usize) -> c64 {
    (0..x.nrows()).map(|i| y[(i, jy)] * x[(i, jx)]).sum()
}

/// Full biorthogonal eigensystem of one real matrix.
#[derive(Clone, Debug)]
pub struct Eigensystem {
    /// Sorted by `(Re, Im)`.
    pub eigenvalues: Vec<Complex64>,
    /// Columns `R_n`, unit 2-norm.
    pub right: Mat<c64>,
    /// Columns `L_n` with `L_mᵀ R_n = δ_mn`.
    pub left: Mat<c64>,
    /// `L̂_nᵀ R̂_n` of the unit-normalised vectors before rescaling.
    pub biorth_norms: Vec<Complex64>,
    pub near_defective: bool,
}

impl Eigensystem {
    /// `L_nᵀ O R_n`.
    pub fn expectation(&self, op: &OperatorMatrix, n: usize) -> Complex64 {
        let dim = self.right.nrows();
        let r: Vec<Complex64> = (0..dim).map(|i| self.right[(i, n)]).collect();
        let or = op.apply(&r);
        (0..dim).map(|i| self.left[(i, n)] * or[i]).sum()
    }
}

/// Right vectors from `H`, left vectors from `Hᵀ`, matched by eigenvalue and
/// biorthonormalised within clusters of (near-)degenerate levels.
pub fn diagonalize(h: &OperatorMatrix, opts: &SpectralOptions) -> Result<Eigensystem> {
    let a = h.to_real()?;
    let n = a.nrows();
    let (vals_r, right) = run_evd(a.as_ref(), true)?;
    let at = a.transpose().to_owned();
    let (vals_l, left_raw) = run_evd(at.as_ref(), true)?;
    let (mut right, mut left_raw) = (right.unwrap(), left_raw.unwrap());
    normalize_columns(&mut right);
    normalize_columns(&mut left_raw);

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| cmp_re_im(&vals_r[i], &vals_r[j]));
    let eigenvalues: Vec<Complex64> = order.iter().map(|&i| vals_r[i]).collect();
    let right = Mat::<c64>::from_fn(n, n, |i, j| right[(i, order[j])]);

    // greedy conjugate-aware matching of left partners
    let mut used = vec![false; n];
    let mut left = Mat::<c64>::zeros(n, n);
    for (j, lam) in eigenvalues.iter().enumerate() {
        let mut best: Option<(usize, bool, f64)> = None;
        for (k, mu) in vals_l.iter().enumerate() {
            if used[k] {
                continue;
            }
            for conj in [false, true] {
                let m = if conj { mu.conj() } else { *mu };
                let d = (m - lam).norm();
                if best.map_or(true, |(_, _, bd)| d < bd) {
                    best = Some((k, conj, d));
                }
            }
        }
        let (k, conj, _) = best.ok_or_else(|| Error::Internal("left eigenvector matching failed".into()))?;
        used[k] = true;
        for i in 0..n {
            let y = left_raw[(i, k)];
            left[(i, j)] = if conj { y.conj() } else { y };
        }
    }

    // clusters of consecutive levels within tie_tol
    let mut biorth_norms = vec![Complex64::new(0.0, 0.0); n];
    let mut near_defective = false;
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && (eigenvalues[end] - eigenvalues[end - 1]).norm() <= opts.tie_tol {
            end += 1;
        }
        let k = end - start;
        let m = Mat::<c64>::from_fn(k, k, |a, b| pair(&left, start + a, &right, start + b));
        if k == 1 {
            let s = m[(0, 0)];
            biorth_norms[start] = s;
            if s.norm() < opts.defect_tol {
                near_defective = true;
            }
            if s.norm() > 0.0 {
                for i in 0..n {
                    left[(i, start)] /= s;
                }
            }
        } else {
            // L_c <- L_c M^{-T} so that L_cᵀ R_c = I
            let minv = m.partial_piv_lu().inverse();
            let lc = Mat::<c64>::from_fn(n, k, |i, b| {
                (0..k).map(|a| left[(i, start + a)] * minv[(b, a)]).sum()
            });
            let det_scale = m.partial_piv_lu();
            let mut logdet = 0.0;
            for a in 0..k {
                logdet += det_scale.U()[(a, a)].norm().ln();
            }
            let quality = (logdet / k as f64).exp();
            if !(quality >= opts.defect_tol) {
                near_defective = true;
            }
            for b in 0..k {
                biorth_norms[start + b] = Complex64::new(quality, 0.0);
                for i in 0..n {
                    left[(i, start + b)] = lc[(i, b)];
                }
            }
        }
        start = end;
    }
    Ok(Eigensystem { eigenvalues, right, left, biorth_norms, near_defective })
}

/// Complex-pair structure of a spectrum.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Classification {
    pub real_levels: Vec<f64>,
    /// `(ε, γ)` with `γ > 0` for each pair `ε ± iγ`.
    pub complex_pairs: Vec<(f64, f64)>,
}

pub fn classify(eigenvalues: &[Complex64], opts: &SpectralOptions) -> Result<Classification> {
    let mut out = Classification::default();
    let mut upper = Vec::new();
    let mut lower = Vec::new();
    for &z in eigenvalues {
        if opts.is_real(z) {
            out.real_levels.push(z.re);
        } else if z.im > 0.0 {
            upper.push(z);
        } else {
            lower.push(z);
        }
    }
    let mut used = vec![false; lower.len()];
    for z in upper {
        let best = lower
            .iter()
            .enumerate()
            .filter(|(i, _)| !used[*i])
            .min_by(|a, b| (a.1.conj() - z).norm().total_cmp(&(b.1.conj() - z).norm()));
        match best {
            Some((i, w)) if (w.conj() - z).norm() <= 1e-6 * z.norm().max(1.0) => {
                used[i] = true;
                out.complex_pairs.push((0.5 * (z.re + w.re), 0.5 * (z.im - w.im)));
            }
            _ => return Err(Error::Internal(format!("eigenvalue {z} has no conjugate partner"))),
        }
    }
    if used.iter().any(|u| !u) {
        return Err(Error::Internal("unpaired eigenvalue with negative imaginary part".into()));
    }
    out.real_levels.sort_by(f64::total_cmp);
    out.complex_pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(out)
}

/// Spectrum of all blocks sharing one quasispin content `(S, s1, s2)`.
#[derive(Clone, Debug)]
pub struct BlockSpectrum {
    pub key: SectorKey,
    /// `(N, mult)` of every NV sector with this quasispin.
    pub blocks: Vec<(i64, u128)>,
    /// Sorted by `(Re, Im)`.
    pub eigenvalues: Vec<Complex64>,
    /// Conserved `Sz1 + Sz2` of each eigenvalue.
    pub qubit_m: Vec<f64>,
    /// Biorthogonal vectors in the full block basis, when requested.
    pub vectors: Option<(Mat<c64>, Mat<c64>)>,
    pub biorth_norms: Vec<Complex64>,
    pub near_defective: bool,
}

impl BlockSpectrum {
    pub fn total_mult(&self) -> u128 {
        self.blocks.iter().map(|b| b.1).sum()
    }

    /// `L_nᵀ O R_n` for every eigenvalue; needs vectors.
    pub fn expectations(&self, op: &OperatorMatrix) -> Result<Vec<Complex64>> {
        let (right, left) = self
            .vectors
            .as_ref()
            .ok_or_else(|| Error::Internal("spectrum computed without eigenvectors".into()))?;
        let dim = right.nrows();
        Ok((0..self.eigenvalues.len())
            .map(|n| {
                let r: Vec<Complex64> = (0..dim).map(|i| right[(i, n)]).collect();
                let or = op.apply(&r);
                (0..dim).map(|i| left[(i, n)] * or[i]).sum()
            })
            .collect())
    }

    pub fn max_abs_imag(&self) -> f64 {
        self.eigenvalues.iter().map(|z| z.im.abs()).fold(0.0, f64::max)
    }
}

/// Basis indices of each conserved-`(Sz1+Sz2)` subspace, keyed by `2(Sz1+Sz2)`.
pub fn qubit_subspaces(qubit_sz: &[f64]) -> BTreeMap<i64, Vec<usize>> {
    let mut map: BTreeMap<i64, Vec<usize>> = BTreeMap::new();
    for (i, &m) in qubit_sz.iter().enumerate() {
        map.entry((2.0 * m).round() as i64).or_default().push(i);
    }
    map
}

fn submatrix(a: &Mat<f64>, idx: &[usize]) -> Mat<f64> {
    Mat::from_fn(idx.len(), idx.len(), |i, j| a[(idx[i], idx[j])])
}

/// Diagonalises a block sector by sector of the conserved qubit projection.
pub fn diagonalize_block(
    ops: &BlockOperators,
    alpha: f64,
    vectors: bool,
    opts: &SpectralOptions,
) -> Result<BlockSpectrum> {
    let h = ops.hamiltonian(alpha);
    let a = h.to_real()?;
    let dim = a.nrows();
    let fail = |e: Error| match e {
        Error::SolverFailure { reason, .. } => {
            Error::SolverFailure { block: format!("{:?}", ops.key), reason }
        }
        other => other,
    };
    let mut eigen: Vec<(Complex64, f64, usize)> = Vec::with_capacity(dim);
    let mut right = vectors.then(|| Mat::<c64>::zeros(dim, dim));
    let mut left = vectors.then(|| Mat::<c64>::zeros(dim, dim));
    let mut norms = vec![Complex64::new(1.0, 0.0); dim];
    let mut near_defective = false;
    let mut col = 0;
    for (twice_m, idx) in qubit_subspaces(&ops.qubit_sz) {
        let sub = submatrix(&a, &idx);
        let m = twice_m as f64 / 2.0;
        if vectors {
            let es = diagonalize(&OperatorMatrix::from_real_rows(idx.len(), &{
                let mut rows = Vec::with_capacity(idx.len() * idx.len());
                for i in 0..idx.len() {
                    for j in 0..idx.len() {
                        rows.push(sub[(i, j)]);
                    }
                }
                rows
            }), opts)
            .map_err(fail)?;
            near_defective |= es.near_defective;
            let (r, l) = (right.as_mut().unwrap(), left.as_mut().unwrap());
            for (n, &z) in es.eigenvalues.iter().enumerate() {
                for (i, &row) in idx.iter().enumerate() {
                    r[(row, col)] = es.right[(i, n)];
                    l[(row, col)] = es.left[(i, n)];
                }
                norms[col] = es.biorth_norms[n];
                eigen.push((z, m, col));
                col += 1;
            }
        } else {
            let (vals, _) = run_evd(sub.as_ref(), false).map_err(fail)?;
            for z in vals {
                eigen.push((z, m, col));
                col += 1;
            }
        }
    }
    eigen.sort_by(|a, b| cmp_re_im(&a.0, &b.0));
    let perm: Vec<usize> = eigen.iter().map(|e| e.2).collect();
    let vectors = match (right, left) {
        (Some(r), Some(l)) => Some((
            Mat::from_fn(dim, dim, |i, j| r[(i, perm[j])]),
            Mat::from_fn(dim, dim, |i, j| l[(i, perm[j])]),
        )),
        _ => None,
    };
    Ok(BlockSpectrum {
        key: ops.key,
        blocks: Vec::new(),
        eigenvalues: eigen.iter().map(|e| e.0).collect(),
        qubit_m: eigen.iter().map(|e| e.1).collect(),
        vectors,
        biorth_norms: perm.iter().map(|&j| norms[j]).collect(),
        near_defective,
    })
}

/// All block spectra of a parameter point, one per distinct `(S, s1, s2)`.
#[derive(Clone, Debug)]
pub struct SpectrumSet {
    pub params: ModelParams,
    pub spectra: Vec<BlockSpectrum>,
}

/// Distinct quasispin contents with the `(N, mult)` of the blocks carrying them.
pub fn sector_table(p: &ModelParams) -> Result<Vec<(SectorKey, Vec<(i64, u128)>)>> {
    let mut map: BTreeMap<SectorKey, Vec<(i64, u128)>> = BTreeMap::new();
    for b in enumerate_blocks(p.sizes)? {
        map.entry(b.key()).or_default().push((b.nv.n, b.mult));
    }
    Ok(map.into_iter().collect())
}

impl SpectrumSet {
    pub fn new(p: &ModelParams, vectors: bool, opts: &SpectralOptions) -> Result<Self> {
        p.validate()?;
        let sectors = sector_table(p)?;
        let spectra = par_map(&sectors, |(key, blocks)| {
            let ops = BlockOperators::new(p, *key)?;
            let mut spec = diagonalize_block(&ops, p.alpha, vectors, opts)?;
            spec.blocks = blocks.clone();
            Ok(spec)
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
        Ok(SpectrumSet { params: *p, spectra })
    }

    pub fn max_abs_imag(&self) -> f64 {
        self.spectra.iter().map(BlockSpectrum::max_abs_imag).fold(0.0, f64::max)
    }

    pub fn near_defective(&self) -> bool {
        self.spectra.iter().any(|s| s.near_defective)
    }

    /// Every eigenvalue with its total multiplicity, for multiset comparisons.
    pub fn weighted_eigenvalues(&self) -> Vec<(Complex64, u128)> {
        let mut out = Vec::new();
        for s in &self.spectra {
            let m = s.total_mult();
            out.extend(s.eigenvalues.iter().map(|&z| (z, m)));
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GroundState {
    /// Lowest-`Re` eigenvalue, reported with `Im >= 0`.
    pub energy: Complex64,
    pub is_complex: bool,
    pub gamma: f64,
    /// Multiplicity-weighted degeneracy (a conjugate pair counts once).
    pub degeneracy: f64,
}

pub fn ground_state_info(spectra: &[BlockSpectrum], opts: &SpectralOptions) -> Result<GroundState> {
    let lowest = spectra
        .iter()
        .flat_map(|s| s.eigenvalues.iter())
        .map(|z| z.re)
        .fold(f64::INFINITY, f64::min);
    if !lowest.is_finite() {
        return Err(Error::InvalidArgument("no eigenvalues".into()));
    }
    let mut degeneracy = 0.0;
    let mut energy = Complex64::new(lowest, 0.0);
    let mut is_complex = false;
    for s in spectra {
        let m = s.total_mult() as f64;
        for &z in &s.eigenvalues {
            if (z.re - lowest).abs() > opts.tie_tol {
                continue;
            }
            if opts.is_real(z) {
                degeneracy += m;
            } else if z.im > 0.0 {
                degeneracy += m;
                if !is_complex || z.im > energy.im {
                    energy = z;
                }
                is_complex = true;
            }
        }
    }
    Ok(GroundState { energy, is_complex, gamma: energy.im.abs(), degeneracy })
}

/// Sweep parameter for exceptional-point searches.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SweepParam {
    Alpha,
    Coupling,
}

impl SweepParam {
    pub fn name(self) -> &'static str {
        match self {
            SweepParam::Alpha => "alpha",
            SweepParam::Coupling => "g",
        }
    }

    pub fn apply(self, p: &ModelParams, x: f64) -> ModelParams {
        match self {
            SweepParam::Alpha => p.with_alpha(x),
            SweepParam::Coupling => p.with_coupling(x),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Sweep {
    pub param: SweepParam,
    pub lo: f64,
    pub hi: f64,
    pub coarse_steps: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EpLocation {
    pub param: SweepParam,
    pub value: f64,
    pub bracket: (f64, f64),
    pub key: SectorKey,
    /// `2(Sz1 + Sz2)` of the subspace where the pair coalesces.
    pub twice_qubit_m: i64,
    /// `Re E` of the coalescing pair.
    pub re_energy: f64,
}

/// The real matrices of every conserved subspace of every block at one point.
struct Subspaces {
    items: Vec<(SectorKey, i64, Mat<f64>)>,
}

impl Subspaces {
    fn new(p: &ModelParams) -> Result<Self> {
        let sectors = sector_table(p)?;
        let mut items = Vec::new();
        for (key, _) in sectors {
            let ops = BlockOperators::new(p, key)?;
            let a = ops.hamiltonian(p.alpha).to_real()?;
            for (m, idx) in qubit_subspaces(&ops.qubit_sz) {
                items.push((key, m, submatrix(&a, &idx)));
            }
        }
        Ok(Subspaces { items })
    }
}

fn complex_pair_count(a: &Mat<f64>, opts: &SpectralOptions) -> Result<(usize, Vec<Complex64>)> {
    let (vals, _) = run_evd(a.as_ref(), false)?;
    let n = vals.iter().filter(|z| !opts.is_real(**z) && z.im > 0.0).count();
    Ok((n, vals))
}

fn subspace_matrix(p: &ModelParams, key: SectorKey, twice_m: i64) -> Result<Mat<f64>> {
    let ops = BlockOperators::new(p, key)?;
    let a = ops.hamiltonian(p.alpha).to_real()?;
    let idx = qubit_subspaces(&ops.qubit_sz).remove(&twice_m).unwrap_or_default();
    Ok(submatrix(&a, &idx))
}

/// Locates every change in the number of complex-conjugate pairs of any
/// conserved subspace along the sweep, refined by bisection to `precision`.
pub fn find_eps(p: &ModelParams, sweep: &Sweep, precision: f64, opts: &SpectralOptions) -> Result<Vec<EpLocation>> {
    if !(sweep.lo < sweep.hi) || sweep.coarse_steps < 2 {
        return Err(Error::InvalidArgument("sweep needs lo < hi and >= 2 steps".into()));
    }
    let grid = linspace(sweep.lo, sweep.hi, sweep.coarse_steps);
    let counts: Vec<Vec<usize>> = par_map(&grid, |&x| -> Result<Vec<usize>> {
        let q = sweep.param.apply(p, x);
        Subspaces::new(&q)?
            .items
            .iter()
            .map(|(_, _, a)| complex_pair_count(a, opts).map(|c| c.0))
            .collect()
    })
    .into_iter()
    .collect::<Result<_>>()?;
    let layout: Vec<(SectorKey, i64)> =
        Subspaces::new(p)?.items.into_iter().map(|(k, m, _)| (k, m)).collect();

    let mut jobs = Vec::new();
    for w in 0..grid.len() - 1 {
        for (j, &(key, m)) in layout.iter().enumerate() {
            if counts[w][j] != counts[w + 1][j] {
                jobs.push((grid[w], grid[w + 1], key, m, counts[w][j], counts[w + 1][j]));
            }
        }
    }
    let found = par_map(&jobs, |&(lo, hi, key, m, c_lo, c_hi)| -> Result<EpLocation> {
        let count_at = |x: f64| -> usize {
            subspace_matrix(&sweep.param.apply(p, x), key, m)
                .and_then(|a| complex_pair_count(&a, opts))
                .map(|c| c.0)
                .unwrap_or(usize::MAX)
        };
        let (a, b) = bisect_predicate(|x| count_at(x) != c_lo, lo, hi, precision);
        let broken_side = if c_hi > c_lo { b } else { a };
        let (_, vals) = complex_pair_count(&subspace_matrix(&sweep.param.apply(p, broken_side), key, m)?, opts)?;
        let newest = vals
            .iter()
            .filter(|z| !opts.is_real(**z) && z.im > 0.0)
            .min_by(|x, y| x.im.total_cmp(&y.im))
            .copied()
            .unwrap_or_default();
        Ok(EpLocation {
            param: sweep.param,
            value: 0.5 * (a + b),
            bracket: (a, b),
            key,
            twice_qubit_m: m,
            re_energy: newest.re,
        })
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let mut found = found;
    found.sort_by(|x, y| x.value.total_cmp(&y.value).then(x.re_energy.total_cmp(&y.re_energy)));
    Ok(found)
}

/// `max_n |Im E_n|` over every block at one parameter point (eigenvalues only).
pub fn max_imag_indicator(p: &ModelParams) -> Result<f64> {
    let subs = Subspaces::new(p)?;
    let mut worst: f64 = 0.0;
    for (_, _, a) in &subs.items {
        let (vals, _) = run_evd(a.as_ref(), false)?;
        worst = vals.iter().map(|z| z.im.abs()).fold(worst, f64::max);
    }
    Ok(worst)
}

/// Whether any eigenvalue at `p` is complex.
pub fn is_broken(p: &ModelParams, opts: &SpectralOptions) -> Result<bool> {
    let subs = Subspaces::new(p)?;
    for (_, _, a) in &subs.items {
        if complex_pair_count(a, opts)?.0 > 0 {
            return Ok(true);
        }
    }
    Ok(false)
}

/// Nearest boundary of the real-spectrum region when walking from `alpha = 1`
/// in steps of `step` (signed) up to `limit`.
pub fn first_ep_from_unity(
    p: &ModelParams,
    step: f64,
    limit: f64,
    precision: f64,
    opts: &SpectralOptions,
) -> Result<Option<f64>> {
    let mut prev = 1.0;
    if is_broken(&p.with_alpha(prev), opts)? {
        return Err(Error::NumericalQuality("spectrum is complex at alpha = 1".into()));
    }
    loop {
        let next = prev + step;
        let beyond = if step > 0.0 { next > limit } else { next < limit };
        let next = if beyond { limit } else { next };
        if is_broken(&p.with_alpha(next), opts)? {
            let (a, b) = bisect_predicate(
                |x| is_broken(&p.with_alpha(x), opts).unwrap_or(true),
                prev,
                next,
                precision,
            );
            return Ok(Some(0.5 * (a + b)));
        }
        if beyond || next == limit {
            return Ok(None);
        }
        prev = next;
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FirstEpRow {
    pub coupling: f64,
    pub alpha_below: Option<f64>,
    pub alpha_above: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FirstEpTable {
    pub rows: Vec<FirstEpRow>,
    /// Relative spread `(max - min)/mean` of `alpha_below` over the upper half of the grid.
    pub below_upper_half_spread: Option<f64>,
    /// Linear fit of `alpha_above` against `g`.
    pub above_fit: Option<crate::numerics::LinearFit>,
}

/// First exceptional points below and above `alpha = 1` for each coupling.
pub fn first_eps_about_unity(
    p: &ModelParams,
    g_grid: &[f64],
    alpha_range: (f64, f64),
    step: f64,
    precision: f64,
    opts: &SpectralOptions,
) -> Result<FirstEpTable> {
    let rows = par_map(g_grid, |&g| -> Result<FirstEpRow> {
        let q = p.with_coupling(g);
        Ok(FirstEpRow {
            coupling: g,
            alpha_below: first_ep_from_unity(&q, -step, alpha_range.0, precision, opts)?,
            alpha_above: first_ep_from_unity(&q, step, alpha_range.1, precision, opts)?,
        })
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;

    let upper: Vec<f64> = rows[rows.len() / 2..].iter().filter_map(|r| r.alpha_below).collect();
    let below_upper_half_spread = (!upper.is_empty()).then(|| {
        let mean = upper.iter().sum::<f64>() / upper.len() as f64;
        let (lo, hi) = upper.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
        (hi - lo) / mean
    });
    let (gx, ay): (Vec<f64>, Vec<f64>) =
        rows.iter().filter_map(|r| r.alpha_above.map(|a| (r.coupling, a))).unzip();
    let above_fit = linear_fit(&gx, &ay).ok();
    Ok(FirstEpTable { rows, below_upper_half_spread, above_fit })
}
