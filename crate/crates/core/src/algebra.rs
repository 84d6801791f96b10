//! Dense su(2) matrices and tensor products.
//!
//! All matrices are stored row-major with complex entries. The spin basis is
//! always ordered `m = s, s-1, ..., -s`.

use std::ops::{Add, Mul, Sub};

use faer::Mat;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::half::HalfInt;

#[derive(Clone, Debug, PartialEq)]
pub struct OperatorMatrix {
    dim: usize,
    entries: Vec<Complex64>,
}

impl OperatorMatrix {
    pub fn zeros(dim: usize) -> Self {
        OperatorMatrix { dim, entries: vec![Complex64::new(0.0, 0.0); dim * dim] }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = Complex64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = Complex64::new(d, 0.0);
        }
        m
    }

    /// Builds a matrix from row-major real entries.
    pub fn from_real_rows(dim: usize, rows: &[f64]) -> Self {
        assert_eq!(rows.len(), dim * dim, "entries must be dim x dim");
        OperatorMatrix { dim, entries: rows.iter().map(|&x| Complex64::new(x, 0.0)).collect() }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }

    pub fn scale(&self, c: f64) -> Self {
        self.scale_complex(Complex64::new(c, 0.0))
    }

    pub fn scale_complex(&self, c: Complex64) -> Self {
        OperatorMatrix { dim: self.dim, entries: self.entries.iter().map(|&x| x * c).collect() }
    }

    pub fn transpose(&self) -> Self {
        let n = self.dim;
        let mut t = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn matmul(&self, rhs: &Self) -> Self {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch");
        let n = self.dim;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self[(i, k)];
                if a == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..n {
                    out.entries[i * n + j] += a * rhs.entries[k * n + j];
                }
            }
        }
        out
    }

    pub fn commutator(&self, rhs: &Self) -> Self {
        &self.matmul(rhs) - &rhs.matmul(self)
    }

    /// Largest entry magnitude.
    pub fn max_abs(&self) -> f64 {
        self.entries.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn max_abs_imag(&self) -> f64 {
        self.entries.iter().map(|z| z.im.abs()).fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, rhs: &Self) -> f64 {
        (self - rhs).max_abs()
    }

    pub fn is_diagonal(&self) -> bool {
        let n = self.dim;
        (0..n).all(|i| (0..n).all(|j| i == j || self[(i, j)].norm() == 0.0))
    }

    pub fn diagonal(&self) -> Vec<Complex64> {
        (0..self.dim).map(|i| self[(i, i)]).collect()
    }

    /// Real part as a faer matrix; fails if any entry has an imaginary part.
    pub fn to_real(&self) -> Result<Mat<f64>> {
        if self.max_abs_imag() > 0.0 {
            return Err(Error::Internal("operator has imaginary entries".into()));
        }
        let n = self.dim;
        Ok(Mat::from_fn(n, n, |i, j| self.entries[i * n + j].re))
    }

    pub fn apply(&self, v: &[Complex64]) -> Vec<Complex64> {
        let n = self.dim;
        (0..n).map(|i| (0..n).map(|j| self.entries[i * n + j] * v[j]).sum()).collect()
    }
}

impl std::ops::Index<(usize, usize)> for OperatorMatrix {
    type Output = Complex64;
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.entries[i * self.dim + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for OperatorMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.entries[i * self.dim + j]
    }
}

impl Add for &OperatorMatrix {
    type Output = OperatorMatrix;
    fn add(self, rhs: &OperatorMatrix) -> OperatorMatrix {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch");
        OperatorMatrix {
            dim: self.dim,
            entries: self.entries.iter().zip(&rhs.entries).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &OperatorMatrix {
    type Output = OperatorMatrix;
    fn sub(self, rhs: &OperatorMatrix) -> OperatorMatrix {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch");
        OperatorMatrix {
            dim: self.dim,
            entries: self.entries.iter().zip(&rhs.entries).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Mul for &OperatorMatrix {
    type Output = OperatorMatrix;
    fn mul(self, rhs: &OperatorMatrix) -> OperatorMatrix {
        self.matmul(rhs)
    }
}

#[derive(Clone, Debug)]
pub struct SpinOperators {
    pub sz: OperatorMatrix,
    pub splus: OperatorMatrix,
    pub sminus: OperatorMatrix,
    pub sx: OperatorMatrix,
    pub sy: OperatorMatrix,
}

/// Spin-`s` matrices in the `|s, m>` basis.
pub fn spin_operators(s: HalfInt) -> Result<SpinOperators> {
    if s.twice() < 0 {
        return Err(Error::InvalidArgument(format!("spin {s} is negative")));
    }
    let dim = s.multiplet();
    let ms: Vec<f64> = s.projections().map(HalfInt::value).collect();
    let sz = OperatorMatrix::from_real_diagonal(&ms);
    let sv = s.value();
    let mut splus = OperatorMatrix::zeros(dim);
    // row i holds m_i; S+ maps m_{i+1} -> m_i = m_{i+1} + 1
    for i in 0..dim.saturating_sub(1) {
        let m = ms[i + 1];
        splus[(i, i + 1)] = Complex64::new((sv * (sv + 1.0) - m * (m + 1.0)).sqrt(), 0.0);
    }
    let sminus = splus.transpose();
    let sx = (&splus + &sminus).scale(0.5);
    let sy = (&splus - &sminus).scale_complex(Complex64::new(0.0, -0.5));
    Ok(SpinOperators { sz, splus, sminus, sx, sy })
}

/// Spin matrices from a float spin value; rejects non-half-integers.
pub fn spin_operators_f64(s: f64) -> Result<SpinOperators> {
    spin_operators(HalfInt::from_f64(s)?)
}

/// Kronecker product `A ⊗ B`.
pub fn kron(a: &OperatorMatrix, b: &OperatorMatrix) -> OperatorMatrix {
    let (na, nb) = (a.dim, b.dim);
    let n = na * nb;
    let mut out = OperatorMatrix::zeros(n);
    for ia in 0..na {
        for ja in 0..na {
            let x = a[(ia, ja)];
            if x == Complex64::new(0.0, 0.0) {
                continue;
            }
            for ib in 0..nb {
                for jb in 0..nb {
                    out[(ia * nb + ib, ja * nb + jb)] = x * b[(ib, jb)];
                }
            }
        }
    }
    out
}

/// `A ⊗ B ⊗ C` on the (qubit 1) ⊗ (qubit 2) ⊗ (NV) product space.
pub fn embed3(a: &OperatorMatrix, b: &OperatorMatrix, c: &OperatorMatrix) -> OperatorMatrix {
    kron(&kron(a, b), c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn spin_half() {
        let ops = spin_operators(HalfInt::HALF).unwrap();
        assert_eq!(ops.sz.diagonal(), vec![c(0.5), c(-0.5)]);
        assert_eq!(ops.splus[(0, 1)], c(1.0));
        assert_eq!(ops.splus[(1, 0)], c(0.0));
        assert_eq!(ops.splus[(0, 0)], c(0.0));
    }

    #[test]
    fn singlet_is_zero() {
        let ops = spin_operators(HalfInt::ZERO).unwrap();
        for m in [&ops.sz, &ops.splus, &ops.sminus, &ops.sx, &ops.sy] {
            assert_eq!(m.dim(), 1);
            assert_eq!(m.max_abs(), 0.0);
        }
    }

    #[test]
    fn spin_one_ladder() {
        let ops = spin_operators(HalfInt::from_int(1)).unwrap();
        let r2 = 2f64.sqrt();
        assert!((ops.splus[(0, 1)].re - r2).abs() < 1e-15);
        assert!((ops.splus[(1, 2)].re - r2).abs() < 1e-15);
    }

    #[test]
    fn rejects_non_half_integer() {
        assert!(matches!(spin_operators_f64(0.7), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn commutation_relations_and_casimir() {
        for twice in 0..=30 {
            let s = HalfInt::from_twice(twice);
            let o = spin_operators(s).unwrap();
            let comm = o.sz.commutator(&o.splus);
            assert!(comm.max_abs_diff(&o.splus) < 1e-12, "s = {s}");
            let comm = o.sz.commutator(&o.sminus);
            assert!(comm.max_abs_diff(&o.sminus.scale(-1.0)) < 1e-12);
            let comm = o.splus.commutator(&o.sminus);
            assert!(comm.max_abs_diff(&o.sz.scale(2.0)) < 1e-12);
            let cas = &(&(&o.sx * &o.sx) + &(&o.sy * &o.sy)) + &(&o.sz * &o.sz);
            let sv = s.value();
            let expect = OperatorMatrix::identity(s.multiplet()).scale(sv * (sv + 1.0));
            assert!(cas.max_abs_diff(&expect) < 1e-12 * (1.0 + sv * sv), "s = {s}");
        }
    }

    #[test]
    fn quadrupole_combination_is_real() {
        for twice in 0..=10 {
            let o = spin_operators(HalfInt::from_twice(twice)).unwrap();
            let a = &(&o.sx * &o.sx) - &(&o.sy * &o.sy);
            let b = (&(&o.splus * &o.splus) + &(&o.sminus * &o.sminus)).scale(0.5);
            assert!(a.max_abs_diff(&b) < 1e-12);
            assert_eq!(b.max_abs_imag(), 0.0);
        }
    }

    #[test]
    fn kron_examples() {
        let i6 = kron(&OperatorMatrix::identity(2), &OperatorMatrix::identity(3));
        assert_eq!(i6, OperatorMatrix::identity(6));
        let z = kron(&OperatorMatrix::from_real_diagonal(&[1.0, -1.0]), &OperatorMatrix::identity(2));
        assert_eq!(z, OperatorMatrix::from_real_diagonal(&[1.0, 1.0, -1.0, -1.0]));
    }

    #[test]
    fn embed3_examples() {
        let s1 = spin_operators(HalfInt::HALF).unwrap();
        let s2 = spin_operators(HalfInt::from_int(1)).unwrap();
        let nv = spin_operators(HalfInt::from_twice(3)).unwrap();
        let (i1, i2, i3) = (
            OperatorMatrix::identity(2),
            OperatorMatrix::identity(3),
            OperatorMatrix::identity(4),
        );
        assert_eq!(embed3(&i1, &i2, &i3), OperatorMatrix::identity(24));
        let a = embed3(&s1.sz, &i2, &i3);
        let b = embed3(&i1, &i2, &nv.splus);
        assert_eq!(a.commutator(&b).max_abs(), 0.0);
        let zz = &embed3(&s1.sz, &i2, &i3) + &embed3(&i1, &s2.sz, &i3);
        assert!(zz.is_diagonal());
    }

    fn mat2() -> impl Strategy<Value = OperatorMatrix> {
        proptest::collection::vec(-2.0f64..2.0, 4)
            .prop_map(|v| OperatorMatrix::from_real_rows(2, &v))
    }

    proptest! {
        #[test]
        fn kron_mixed_product(a in mat2(), b in mat2(), cm in mat2(), d in mat2()) {
            let lhs = &kron(&a, &b) * &kron(&cm, &d);
            let rhs = kron(&(&a * &cm), &(&b * &d));
            prop_assert!(lhs.max_abs_diff(&rhs) < 1e-12);
        }
    }
}
