//! Irreducible sectors of the NV ensemble and the two pairing levels.
//!
//! The NV space (two levels, `2Ω` sublevels each) splits by particle number
//! `N`, seniority-like label `τ` (half the number of singly occupied
//! sublevels) and coupling index `k`, carrying quasispin `S = τ - k`. Each
//! pairing level `i` (degeneracy `2Ω_i`) splits into quasispins `s_i`. All
//! multiplicities are computed with arbitrary-precision integers.

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::half::HalfInt;

fn factorial(n: i64) -> BigUint {
    debug_assert!(n >= 0);
    (1..=n as u64).fold(BigUint::one(), |acc, k| acc * k)
}

fn to_u128(x: &BigUint, what: &str) -> Result<u128> {
    x.to_u128()
        .ok_or_else(|| Error::InvalidArgument(format!("{what} multiplicity exceeds 128 bits")))
}

/// Number of spin-`(τ-k)` multiplets among `2τ` spins one-half.
pub fn d_s(tau: HalfInt, k: i64) -> Result<BigUint> {
    if tau.twice() < 0 || k < 0 || 2 * k > tau.twice() {
        return Err(Error::InvalidArgument(format!("d_S needs 0 <= k <= tau (tau={tau}, k={k})")));
    }
    let two_tau = tau.twice();
    let num = factorial(two_tau) * BigUint::from((two_tau - 2 * k + 1) as u64);
    let den = factorial(k) * factorial(two_tau - k + 1);
    debug_assert!((&num % &den).is_zero());
    Ok(num / den)
}

/// Multiplicity `D_S(N, τ, k)` of an NV sector.
pub fn nv_multiplicity(omega: HalfInt, n: i64, tau: HalfInt, k: i64) -> Result<BigUint> {
    let two_omega = omega.twice();
    let two_tau = tau.twice();
    // ν1 = N/2 - τ and ν2 = 2Ω - τ - N/2, both integers
    let twice_nu1 = n - two_tau;
    let twice_nu2 = 2 * two_omega - two_tau - n;
    if two_omega <= 0
        || two_tau < 0
        || twice_nu1 < 0
        || twice_nu2 < 0
        || twice_nu1 % 2 != 0
        || twice_nu2 % 2 != 0
    {
        return Err(Error::InvalidArgument(format!(
            "inadmissible NV sector Omega={omega}, N={n}, tau={tau}"
        )));
    }
    let (nu1, nu2) = (twice_nu1 / 2, twice_nu2 / 2);
    let configs = factorial(two_omega) / (factorial(two_tau) * factorial(nu1) * factorial(nu2));
    Ok(configs * d_s(tau, k)?)
}

/// Number of spin-`s` multiplets among `2τ_qb` spins one-half.
pub fn g_qb(tau_qb: HalfInt, s: HalfInt) -> Result<BigUint> {
    let diff = tau_qb - s;
    if s.twice() < 0 || diff.twice() < 0 || !diff.is_integer() {
        return Err(Error::InvalidArgument(format!("g_qb needs tau_qb - s in N (tau_qb={tau_qb}, s={s})")));
    }
    let a = diff.as_int().unwrap_or(0);
    let b = (tau_qb + s).twice() / 2 + 1;
    let num = factorial(tau_qb.twice()) * BigUint::from(s.multiplet() as u64);
    let den = factorial(a) * factorial(b);
    debug_assert!((&num % &den).is_zero());
    Ok(num / den)
}

/// Multiplicity `d(Ω_i, s)` of quasispin `s` on a pairing level with `Ω_i` pair slots.
pub fn qubit_level_multiplicity(omega_i: i64, s: HalfInt) -> Result<BigUint> {
    if omega_i <= 0 || s.twice() < 0 || s.twice() > omega_i {
        return Err(Error::InvalidArgument(format!("quasispin {s} not in [0, {omega_i}/2]")));
    }
    let mut total = BigUint::zero();
    let mut tau = s;
    // the (Ω_i - 2τ)! factor bounds the sum at 2τ <= Ω_i
    while tau.twice() <= omega_i {
        let active = tau.twice();
        let choose = factorial(omega_i) / (factorial(active) * factorial(omega_i - active));
        let blocked = BigUint::one() << (omega_i - active) as usize;
        total += choose * blocked * g_qb(tau, s)?;
        tau = tau + HalfInt::from_int(1);
    }
    Ok(total)
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct NvBlockLabel {
    pub n: i64,
    pub tau: HalfInt,
    pub k: i64,
    pub s: HalfInt,
    pub mult: u128,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct QubitBlockLabel {
    pub s1: HalfInt,
    pub s2: HalfInt,
    pub mult: u128,
}

/// Quasispin content that fixes a block Hamiltonian: `(S, s1, s2)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SectorKey {
    pub s: HalfInt,
    pub s1: HalfInt,
    pub s2: HalfInt,
}

impl SectorKey {
    pub fn dim(&self) -> usize {
        self.s1.multiplet() * self.s2.multiplet() * self.s.multiplet()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct BlockLabel {
    pub nv: NvBlockLabel,
    pub qb: QubitBlockLabel,
    pub dim: usize,
    pub mult: u128,
}

impl BlockLabel {
    pub fn key(&self) -> SectorKey {
        SectorKey { s: self.nv.s, s1: self.qb.s1, s2: self.qb.s2 }
    }

    pub fn id(&self) -> String {
        format!(
            "N{}_tau{}_k{}_s1{}_s2{}",
            self.nv.n, self.nv.tau, self.nv.k, self.qb.s1, self.qb.s2
        )
    }
}

/// System sizes: `2Ω` NV sublevels and two pairing levels with `Ω1`, `Ω2` slots.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Sizes {
    pub omega: HalfInt,
    pub omega1: i64,
    pub omega2: i64,
}

impl Sizes {
    pub fn new(omega: HalfInt, omega1: i64, omega2: i64) -> Result<Self> {
        if omega.twice() <= 0 || omega1 <= 0 || omega2 <= 0 {
            return Err(Error::InvalidArgument("all sizes must be positive".into()));
        }
        Ok(Sizes { omega, omega1, omega2 })
    }

    /// `N_S = 2Ω` NVs and `N_p` pairs on each level.
    pub fn from_counts(n_nv: i64, n_pairs: i64) -> Result<Self> {
        Self::new(HalfInt::from_twice(n_nv), n_pairs, n_pairs)
    }

    /// `log2` of the full Fock dimension, `4Ω + 2(Ω1 + Ω2)`.
    pub fn log2_dimension(&self) -> i64 {
        2 * self.omega.twice() + 2 * (self.omega1 + self.omega2)
    }

    /// Number of NVs, `N_S = 2Ω`.
    pub fn n_nv(&self) -> i64 {
        self.omega.twice()
    }
}

pub fn enumerate_nv_blocks(omega: HalfInt) -> Result<Vec<NvBlockLabel>> {
    let two_omega = omega.twice();
    let mut out = Vec::new();
    for n in 0..=2 * two_omega {
        for two_tau in 0..=two_omega {
            let twice_nu1 = n - two_tau;
            let twice_nu2 = 2 * two_omega - two_tau - n;
            if twice_nu1 < 0 || twice_nu2 < 0 || twice_nu1 % 2 != 0 {
                continue;
            }
            let tau = HalfInt::from_twice(two_tau);
            for k in 0..=two_tau / 2 {
                let mult = nv_multiplicity(omega, n, tau, k)?;
                out.push(NvBlockLabel {
                    n,
                    tau,
                    k,
                    s: HalfInt::from_twice(two_tau - 2 * k),
                    mult: to_u128(&mult, "NV")?,
                });
            }
        }
    }
    Ok(out)
}

/// Quasispins and multiplicities of one pairing level.
pub fn enumerate_level(omega_i: i64) -> Result<Vec<(HalfInt, u128)>> {
    (0..=omega_i)
        .map(|twice| {
            let s = HalfInt::from_twice(twice);
            Ok((s, to_u128(&qubit_level_multiplicity(omega_i, s)?, "qubit")?))
        })
        .collect()
}

/// Every admissible `(N, τ, k, s1, s2)`, ordered lexicographically.
pub fn enumerate_blocks(sizes: Sizes) -> Result<Vec<BlockLabel>> {
    let nv = enumerate_nv_blocks(sizes.omega)?;
    let l1 = enumerate_level(sizes.omega1)?;
    let l2 = enumerate_level(sizes.omega2)?;
    let mut out = Vec::with_capacity(nv.len() * l1.len() * l2.len());
    for b in &nv {
        for &(s1, m1) in &l1 {
            for &(s2, m2) in &l2 {
                let qmult = m1
                    .checked_mul(m2)
                    .ok_or_else(|| Error::InvalidArgument("qubit multiplicity overflow".into()))?;
                let mult = b
                    .mult
                    .checked_mul(qmult)
                    .ok_or_else(|| Error::InvalidArgument("block multiplicity overflow".into()))?;
                out.push(BlockLabel {
                    nv: b.clone(),
                    qb: QubitBlockLabel { s1, s2, mult: qmult },
                    dim: s1.multiplet() * s2.multiplet() * b.s.multiplet(),
                    mult,
                });
            }
        }
    }
    Ok(out)
}

/// Exact `Σ mult · dim` over blocks.
pub fn total_dimension(blocks: &[BlockLabel]) -> BigUint {
    blocks.iter().map(|b| BigUint::from(b.mult) * BigUint::from(b.dim as u64)).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn h(twice: i64) -> HalfInt {
        HalfInt::from_twice(twice)
    }

    fn big(x: u64) -> BigUint {
        BigUint::from(x)
    }

    #[test]
    fn d_s_values() {
        for two_tau in 0..12 {
            assert_eq!(d_s(h(two_tau), 0).unwrap(), big(1));
        }
        assert_eq!(d_s(h(2), 1).unwrap(), big(1));
        assert!(d_s(h(2), 2).is_err());
        assert!(d_s(h(2), -1).is_err());
    }

    /// Brute force: count states of `2τ` spins one-half by total `M`; the
    /// number of spin-`S` multiplets is `#(M = S) - #(M = S + 1)`.
    fn brute_multiplets(two_tau: u32) -> Vec<(i64, u64)> {
        let mut by_twice_m = std::collections::BTreeMap::<i64, u64>::new();
        for bits in 0u32..(1 << two_tau) {
            let up = bits.count_ones() as i64;
            *by_twice_m.entry(2 * up - two_tau as i64).or_default() += 1;
        }
        let count = |m: i64| by_twice_m.get(&m).copied().unwrap_or(0);
        let mut out = Vec::new();
        let mut twice_s = two_tau as i64;
        while twice_s >= 0 {
            out.push((twice_s, count(twice_s) - count(twice_s + 2)));
            twice_s -= 2;
        }
        out
    }

    #[test]
    fn d_s_matches_brute_force_and_completeness() {
        for two_tau in 0..=12u32 {
            let brute = brute_multiplets(two_tau);
            let mut sum = BigUint::zero();
            for (k, &(twice_s, count)) in brute.iter().enumerate() {
                let d = d_s(h(two_tau as i64), k as i64).unwrap();
                assert_eq!(d, big(count), "tau={}/2 k={k}", two_tau);
                sum += d * big(twice_s as u64 + 1);
            }
            assert_eq!(sum, BigUint::one() << two_tau as usize);
        }
    }

    #[test]
    fn nv_multiplicity_examples() {
        assert_eq!(nv_multiplicity(h(1), 1, h(1), 0).unwrap(), big(1));
        assert_eq!(nv_multiplicity(h(1), 0, h(0), 0).unwrap(), big(1));
        assert!(nv_multiplicity(h(1), 3, h(0), 0).is_err());
    }

    #[test]
    fn nv_completeness() {
        for two_omega in [1, 2, 3, 4, 8, 20] {
            let blocks = enumerate_nv_blocks(h(two_omega)).unwrap();
            let sum: BigUint =
                blocks.iter().map(|b| BigUint::from(b.mult) * big(b.s.multiplet() as u64)).sum();
            assert_eq!(sum, BigUint::one() << (2 * two_omega) as usize, "2Omega = {two_omega}");
        }
    }

    #[test]
    fn g_qb_values() {
        for twice in 0..10 {
            assert_eq!(g_qb(h(twice), h(twice)).unwrap(), big(1));
        }
        assert_eq!(g_qb(h(2), h(0)).unwrap(), big(1));
        assert_eq!(g_qb(h(4), h(0)).unwrap(), big(2));
        assert!(g_qb(h(1), h(3)).is_err());
        // four spins one-half: 2 singlets, 3 triplets, 1 quintet
        let brute = brute_multiplets(4);
        for (twice_s, count) in brute {
            assert_eq!(g_qb(h(4), h(twice_s)).unwrap(), big(count));
        }
    }

    #[test]
    fn qubit_level_values() {
        assert_eq!(qubit_level_multiplicity(1, h(1)).unwrap(), big(1));
        assert_eq!(qubit_level_multiplicity(1, h(0)).unwrap(), big(2));
        assert_eq!(qubit_level_multiplicity(2, h(0)).unwrap(), big(5));
        assert_eq!(qubit_level_multiplicity(2, h(1)).unwrap(), big(4));
        assert_eq!(qubit_level_multiplicity(2, h(2)).unwrap(), big(1));
        assert!(qubit_level_multiplicity(2, h(3)).is_err());
        for omega in 1..=8 {
            let sum: BigUint = enumerate_level(omega)
                .unwrap()
                .iter()
                .map(|&(s, m)| BigUint::from(m) * big(s.multiplet() as u64))
                .sum();
            assert_eq!(sum, BigUint::one() << (2 * omega) as usize);
        }
    }

    #[test]
    fn enumerate_small_and_full_sizes() {
        let small = enumerate_blocks(Sizes::new(h(1), 1, 1).unwrap()).unwrap();
        assert_eq!(total_dimension(&small), big(64));
        let full = enumerate_blocks(Sizes::new(h(8), 2, 2).unwrap()).unwrap();
        assert_eq!(total_dimension(&full), big(16_777_216));
    }

    #[test]
    fn enumeration_is_sorted_and_unique() {
        let blocks = enumerate_blocks(Sizes::new(h(4), 2, 1).unwrap()).unwrap();
        let keys: Vec<_> =
            blocks.iter().map(|b| (b.nv.n, b.nv.tau, b.nv.k, b.qb.s1, b.qb.s2)).collect();
        let mut sorted = keys.clone();
        sorted.sort();
        sorted.dedup();
        assert_eq!(keys, sorted);
        assert!(blocks.iter().all(|b| b.mult > 0 && b.dim >= 1));
    }

    #[test]
    fn large_sizes_do_not_overflow() {
        let blocks = enumerate_blocks(Sizes::new(h(20), 8, 8).unwrap()).unwrap();
        assert_eq!(total_dimension(&blocks), BigUint::one() << 72usize);
    }
}
