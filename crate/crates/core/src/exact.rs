//! Exact rational arithmetic for the homology layer.
//!
//! The persistence engine runs over a checked i128 rational and retries with
//! arbitrary precision if anything overflows; witness extraction and the
//! cochain solver always use `BigRational`.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

/// Coefficient field for the reduction: exact rationals with a checked fast
/// path.
pub trait Coef: Clone + PartialEq + std::fmt::Debug {
    fn one() -> Self;
    fn vanishes(&self) -> bool;
    fn neg(&self) -> Self;
    fn checked_add(&self, other: &Self) -> Option<Self>;
    fn checked_sub(&self, other: &Self) -> Option<Self>;
    fn checked_mul(&self, other: &Self) -> Option<Self>;
    fn checked_div(&self, other: &Self) -> Option<Self>;
    fn to_big(&self) -> BigRational;
}

/// i128 rational, normalized, with overflow surfaced as `None`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QSmall {
    num: i128,
    den: i128,
}

impl QSmall {
    pub fn new(num: i128, den: i128) -> Option<QSmall> {
        if den == 0 {
            return None;
        }
        let mut q = QSmall { num, den };
        q.normalize()?;
        Some(q)
    }

    fn normalize(&mut self) -> Option<()> {
        if self.num == 0 {
            self.den = 1;
            return Some(());
        }
        if self.den < 0 {
            self.num = self.num.checked_neg()?;
            self.den = self.den.checked_neg()?;
        }
        let g = self.num.abs().gcd(&self.den);
        self.num /= g;
        self.den /= g;
        Some(())
    }
}

impl Coef for QSmall {
    fn one() -> Self {
        QSmall { num: 1, den: 1 }
    }

    fn vanishes(&self) -> bool {
        self.num == 0
    }

    fn neg(&self) -> Self {
        QSmall {
            num: -self.num,
            den: self.den,
        }
    }

    fn checked_add(&self, other: &Self) -> Option<Self> {
        let num = self
            .num
            .checked_mul(other.den)?
            .checked_add(other.num.checked_mul(self.den)?)?;
        let den = self.den.checked_mul(other.den)?;
        QSmall::new(num, den)
    }

    fn checked_sub(&self, other: &Self) -> Option<Self> {
        let num = self
            .num
            .checked_mul(other.den)?
            .checked_sub(other.num.checked_mul(self.den)?)?;
        let den = self.den.checked_mul(other.den)?;
        QSmall::new(num, den)
    }

    fn checked_mul(&self, other: &Self) -> Option<Self> {
        QSmall::new(
            self.num.checked_mul(other.num)?,
            self.den.checked_mul(other.den)?,
        )
    }

    fn checked_div(&self, other: &Self) -> Option<Self> {
        if other.num == 0 {
            return None;
        }
        QSmall::new(
            self.num.checked_mul(other.den)?,
            self.den.checked_mul(other.num)?,
        )
    }

    fn to_big(&self) -> BigRational {
        BigRational::new(BigInt::from(self.num), BigInt::from(self.den))
    }
}

impl Coef for BigRational {
    fn one() -> Self {
        <BigRational as One>::one()
    }

    fn vanishes(&self) -> bool {
        <BigRational as Zero>::is_zero(self)
    }

    fn neg(&self) -> Self {
        -self.clone()
    }

    fn checked_add(&self, other: &Self) -> Option<Self> {
        Some(self + other)
    }

    fn checked_sub(&self, other: &Self) -> Option<Self> {
        Some(self - other)
    }

    fn checked_mul(&self, other: &Self) -> Option<Self> {
        Some(self * other)
    }

    fn checked_div(&self, other: &Self) -> Option<Self> {
        if <BigRational as Zero>::is_zero(other) {
            None
        } else {
            Some(self / other)
        }
    }

    fn to_big(&self) -> BigRational {
        self.clone()
    }
}

/// Sparse rational vector: sorted (index, value) pairs, values nonzero.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SparseVec {
    pub entries: Vec<(u32, BigRational)>,
}

impl SparseVec {
    pub fn from_entries(mut entries: Vec<(u32, BigRational)>) -> SparseVec {
        entries.sort_by_key(|e| e.0);
        entries.retain(|(_, v)| !v.is_zero());
        SparseVec { entries }
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, index: u32) -> Option<&BigRational> {
        self.entries
            .binary_search_by_key(&index, |e| e.0)
            .ok()
            .map(|i| &self.entries[i].1)
    }

    /// First (lowest-index) nonzero entry.
    pub fn pivot(&self) -> Option<(u32, &BigRational)> {
        self.entries.first().map(|(i, v)| (*i, v))
    }

    /// self += c * other, merging sorted entry lists.
    pub fn add_scaled(&mut self, c: &BigRational, other: &SparseVec) {
        if c.is_zero() || other.is_zero() {
            return;
        }
        let mut out = Vec::with_capacity(self.entries.len() + other.entries.len());
        let (mut i, mut j) = (0usize, 0usize);
        while i < self.entries.len() || j < other.entries.len() {
            match (self.entries.get(i), other.entries.get(j)) {
                (Some((ia, va)), Some((ib, vb))) => {
                    if ia < ib {
                        out.push((*ia, va.clone()));
                        i += 1;
                    } else if ib < ia {
                        out.push((*ib, c * vb));
                        j += 1;
                    } else {
                        let v = va + c * vb;
                        if !v.is_zero() {
                            out.push((*ia, v));
                        }
                        i += 1;
                        j += 1;
                    }
                }
                (Some((ia, va)), None) => {
                    out.push((*ia, va.clone()));
                    i += 1;
                }
                (None, Some((ib, vb))) => {
                    out.push((*ib, c * vb));
                    j += 1;
                }
                (None, None) => unreachable!(),
            }
        }
        self.entries = out;
    }

    pub fn scale(&mut self, c: &BigRational) {
        if c.is_zero() {
            self.entries.clear();
            return;
        }
        for (_, v) in &mut self.entries {
            *v *= c;
        }
    }

    /// Dot product with another sparse vector.
    #[cfg(test)]
    pub fn dot(&self, other: &SparseVec) -> BigRational {
        let mut acc: BigRational = Zero::zero();
        let (mut i, mut j) = (0usize, 0usize);
        while i < self.entries.len() && j < other.entries.len() {
            let (ia, va) = &self.entries[i];
            let (ib, vb) = &other.entries[j];
            if ia < ib {
                i += 1;
            } else if ib < ia {
                j += 1;
            } else {
                acc += va * vb;
                i += 1;
                j += 1;
            }
        }
        acc
    }

    /// Clear denominators and common factors: the primitive integer vector.
    pub fn to_integer(&self) -> Vec<(u32, BigInt)> {
        if self.entries.is_empty() {
            return Vec::new();
        }
        let mut lcm: BigInt = One::one();
        for (_, v) in &self.entries {
            lcm = lcm.lcm(v.denom());
        }
        let mut out: Vec<(u32, BigInt)> = self
            .entries
            .iter()
            .map(|(i, v)| (*i, v.numer() * (&lcm / v.denom())))
            .collect();
        let mut g: BigInt = Zero::zero();
        for (_, v) in &out {
            g = g.gcd(&v.abs());
        }
        if !g.is_zero() && !g.is_one() {
            for (_, v) in &mut out {
                *v = &*v / &g;
            }
        }
        out
    }
}

/// An incrementally maintained reduced column-echelon basis of a rational
/// span: each basis vector has a distinct pivot row, unit pivot entry, and
/// zeros at the pivots of all other basis vectors.
#[derive(Debug, Default)]
pub struct EchelonBasis {
    basis: Vec<SparseVec>,
    pivots: Vec<u32>,
}

impl EchelonBasis {
    pub fn new() -> Self {
        EchelonBasis::default()
    }

    #[cfg(test)]
    pub fn rank(&self) -> usize {
        self.basis.len()
    }

    /// Reduce `v` against the basis in place; the residue has zeros at
    /// every basis pivot.
    pub fn reduce(&self, v: &mut SparseVec) {
        for (q, &p) in self.basis.iter().zip(&self.pivots) {
            if let Some(c) = v.get(p) {
                let c = -c.clone();
                v.add_scaled(&c, q);
            }
        }
    }

    /// Insert a vector into the span; returns true if the rank grew.
    pub fn insert(&mut self, mut v: SparseVec) -> bool {
        self.reduce(&mut v);
        let Some((p, pv)) = v.pivot() else {
            return false;
        };
        let inv = <BigRational as One>::one() / pv.clone();
        let p = p.to_owned();
        v.scale(&inv);
        // keep the basis fully reduced
        for (q, _) in self.basis.iter_mut().zip(&self.pivots) {
            if let Some(c) = q.get(p) {
                let c = -c.clone();
                q.add_scaled(&c, &v);
            }
        }
        self.basis.push(v);
        self.pivots.push(p);
        true
    }

    /// Does the span contain `v`?
    #[cfg(test)]
    pub fn contains(&self, v: &SparseVec) -> bool {
        let mut w = v.clone();
        self.reduce(&mut w);
        w.is_zero()
    }

    /// A functional vanishing on the span with nonzero pairing against `v`,
    /// or None when `v` lies in the span.
    pub fn annihilator_hitting(&self, v: &SparseVec) -> Option<SparseVec> {
        let mut res = v.clone();
        self.reduce(&mut res);
        let (p_res, _) = res.pivot()?;
        let mut entries = vec![(p_res, <BigRational as One>::one())];
        for (q, &p) in self.basis.iter().zip(&self.pivots) {
            if let Some(c) = q.get(p_res) {
                entries.push((p, -c.clone()));
            }
        }
        Some(SparseVec::from_entries(entries))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn qsmall_arithmetic() {
        let a = QSmall::new(1, 2).unwrap();
        let b = QSmall::new(1, 3).unwrap();
        assert_eq!(a.checked_add(&b).unwrap(), QSmall::new(5, 6).unwrap());
        assert_eq!(a.checked_mul(&b).unwrap(), QSmall::new(1, 6).unwrap());
        assert_eq!(a.checked_div(&b).unwrap(), QSmall::new(3, 2).unwrap());
        assert!(QSmall::new(i128::MAX, 1)
            .unwrap()
            .checked_add(&QSmall::one())
            .is_none());
    }

    #[test]
    fn echelon_rank_and_membership() {
        let mut basis = EchelonBasis::new();
        let v1 = SparseVec::from_entries(vec![(0, q(1, 1)), (1, q(1, 1))]);
        let v2 = SparseVec::from_entries(vec![(1, q(1, 1)), (2, q(1, 1))]);
        let v3 = SparseVec::from_entries(vec![(0, q(1, 1)), (2, q(-1, 1))]);
        assert!(basis.insert(v1.clone()));
        assert!(basis.insert(v2.clone()));
        assert!(!basis.insert(v3.clone())); // v3 = v1 - v2
        assert_eq!(basis.rank(), 2);
        assert!(basis.contains(&v3));
    }

    #[test]
    fn annihilator_pairs_nonzero() {
        let mut basis = EchelonBasis::new();
        basis.insert(SparseVec::from_entries(vec![(0, q(1, 1)), (1, q(2, 1))]));
        let target = SparseVec::from_entries(vec![(0, q(1, 1)), (2, q(1, 1))]);
        let alpha = basis.annihilator_hitting(&target).unwrap();
        for b in &basis.basis {
            assert!(alpha.dot(b).is_zero());
        }
        assert!(!alpha.dot(&target).is_zero());
        assert!(basis
            .annihilator_hitting(&SparseVec::from_entries(vec![(0, q(2, 1)), (1, q(4, 1))]))
            .is_none());
    }

    #[test]
    fn integer_scaling_is_primitive() {
        let v = SparseVec::from_entries(vec![(0, q(2, 3)), (5, q(4, 3))]);
        let ints = v.to_integer();
        assert_eq!(ints[0].1, BigInt::from(1));
        assert_eq!(ints[1].1, BigInt::from(2));
    }
}
