//! Truncated multivariate Taylor expansions ("jets") at a fixed base point.
//!
//! A [`Jet`] of order `J` in `dim` variables stores the derivatives
//! `c_α = ∂^α f(x₀)` for `|α| ≤ J`, so that `f = Σ c_α (x − x₀)^α / α!`.
//! With this convention a partial derivative is a pure index shift, and the
//! product picks up binomial weights (Leibniz rule).
//!
//! Orders are tracked exactly: every partial derivative costs one order, and
//! asking a jet of order zero for a derivative is a hard error.

use std::collections::{BTreeMap, HashMap};
use std::sync::OnceLock;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub type MultiIndex = SmallVec<[u8; 8]>;

/// Real coordinates `x¹..x^d`, or complex coordinates `z¹..zⁿ, z̄¹..z̄ⁿ`
/// treated as independent variables.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Frame {
    Real,
    Complex,
}

const BINOM_MAX: usize = 62;

fn binom_table() -> &'static Vec<Vec<u64>> {
    static TABLE: OnceLock<Vec<Vec<u64>>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut t = vec![vec![0u64; BINOM_MAX + 1]; BINOM_MAX + 1];
        for n in 0..=BINOM_MAX {
            t[n][0] = 1;
            for k in 1..=n {
                t[n][k] = t[n - 1][k - 1] + if k < n { t[n - 1][k] } else { 0 };
            }
        }
        t
    })
}

pub fn binomial(n: usize, k: usize) -> u64 {
    assert!(n <= BINOM_MAX, "binomial table exhausted at n = {n}");
    if k > n {
        0
    } else {
        binom_table()[n][k]
    }
}

pub fn factorial(n: usize) -> BigInt {
    (1..=n).fold(BigInt::from(1), |acc, k| acc * BigInt::from(k))
}

/// `α!` for a multi-index.
pub fn multi_factorial(alpha: &[u8]) -> BigInt {
    alpha
        .iter()
        .fold(BigInt::from(1), |acc, &a| acc * factorial(a as usize))
}

pub fn degree(alpha: &[u8]) -> u32 {
    alpha.iter().map(|&a| a as u32).sum()
}

/// All multi-indices of `dim` entries with total degree `≤ max_deg`,
/// ordered by degree and then lexicographically.
pub fn multi_indices(dim: usize, max_deg: u32) -> Vec<MultiIndex> {
    let mut out = Vec::new();
    for deg in 0..=max_deg {
        let mut cur: MultiIndex = SmallVec::from_elem(0, dim);
        fill_degree(&mut cur, 0, deg, &mut out);
    }
    out
}

fn fill_degree(cur: &mut MultiIndex, pos: usize, rem: u32, out: &mut Vec<MultiIndex>) {
    if pos + 1 == cur.len() {
        cur[pos] = rem as u8;
        out.push(cur.clone());
        return;
    }
    if cur.is_empty() {
        if rem == 0 {
            out.push(cur.clone());
        }
        return;
    }
    for k in (0..=rem).rev() {
        cur[pos] = k as u8;
        fill_degree(cur, pos + 1, rem - k, out);
    }
    cur[pos] = 0;
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Jet {
    dim: usize,
    order: u32,
    coeffs: BTreeMap<MultiIndex, Scalar>,
}

impl Jet {
    pub fn zero(dim: usize, order: u32) -> Self {
        Self {
            dim,
            order,
            coeffs: BTreeMap::new(),
        }
    }

    pub fn constant(dim: usize, order: u32, c: Scalar) -> Self {
        let mut j = Self::zero(dim, order);
        if !c.is_zero() {
            j.coeffs.insert(SmallVec::from_elem(0, dim), c);
        }
        j
    }

    pub fn one(dim: usize, order: u32) -> Self {
        Self::constant(dim, order, Scalar::one())
    }

    /// The coordinate function `x^i` around a base point where it takes the
    /// value `at`.
    pub fn coordinate(dim: usize, order: u32, i: usize, at: Scalar) -> Self {
        assert!(i < dim, "coordinate {i} out of range for dim {dim}");
        let mut j = Self::constant(dim, order, at);
        if order >= 1 {
            let mut e: MultiIndex = SmallVec::from_elem(0, dim);
            e[i] = 1;
            j.coeffs.insert(e, Scalar::one());
        }
        j
    }

    /// `coef · (x − x₀)^α`.
    pub fn monomial(dim: usize, order: u32, alpha: &[u8], coef: Scalar) -> Self {
        assert_eq!(alpha.len(), dim);
        let mut j = Self::zero(dim, order);
        if degree(alpha) <= order && !coef.is_zero() {
            j.coeffs.insert(
                SmallVec::from_slice(alpha),
                coef.mul_bigint(&multi_factorial(alpha)),
            );
        }
        j
    }

    /// Build from derivative coefficients `c_α = ∂^α f(x₀)`; entries with
    /// `|α| > order` and zeros are dropped.
    pub fn from_derivatives<I>(dim: usize, order: u32, it: I) -> Self
    where
        I: IntoIterator<Item = (MultiIndex, Scalar)>,
    {
        let mut j = Self::zero(dim, order);
        for (alpha, c) in it {
            assert_eq!(alpha.len(), dim);
            if degree(&alpha) <= order {
                let e = j.coeffs.entry(alpha).or_default();
                *e += &c;
            }
        }
        j.coeffs.retain(|_, c| !c.is_zero());
        j
    }

    /// Build from Taylor coefficients `t_α` of `Σ t_α (x − x₀)^α`.
    pub fn from_taylor<I>(dim: usize, order: u32, it: I) -> Self
    where
        I: IntoIterator<Item = (MultiIndex, Scalar)>,
    {
        Self::from_derivatives(
            dim,
            order,
            it.into_iter().map(|(a, t)| {
                let f = multi_factorial(&a);
                (a, t.mul_bigint(&f))
            }),
        )
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Derivative coefficients, sorted by multi-index.
    pub fn derivatives(&self) -> impl Iterator<Item = (&MultiIndex, &Scalar)> {
        self.coeffs.iter()
    }

    pub fn derivative(&self, alpha: &[u8]) -> Scalar {
        self.coeffs.get(alpha).cloned().unwrap_or_default()
    }

    /// Taylor coefficient `∂^α f(x₀) / α!`.
    pub fn taylor_coeff(&self, alpha: &[u8]) -> Scalar {
        let c = self.derivative(alpha);
        if c.is_zero() {
            return c;
        }
        c.try_div(&Scalar::from_bigint(multi_factorial(alpha)))
            .expect("factorials are nonzero")
    }

    /// Value at the base point.
    pub fn eval0(&self) -> Scalar {
        self.coeffs
            .get(&SmallVec::<[u8; 8]>::from_elem(0, self.dim)[..])
            .cloned()
            .unwrap_or_default()
    }

    /// Drop everything above `order` (no-op if already lower).
    pub fn truncate(&self, order: u32) -> Jet {
        if order >= self.order {
            return self.clone();
        }
        Jet {
            dim: self.dim,
            order,
            coeffs: self
                .coeffs
                .iter()
                .filter(|(a, _)| degree(a) <= order)
                .map(|(a, c)| (a.clone(), c.clone()))
                .collect(),
        }
    }

    fn check_compat(&self, other: &Jet) -> Result<()> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch(self.dim, other.dim));
        }
        if self.order != other.order {
            return Err(Error::OrderMismatch(self.order, other.order));
        }
        Ok(())
    }

    /// Exact sum; operands must agree in dimension and order.
    pub fn try_add(&self, other: &Jet) -> Result<Jet> {
        self.check_compat(other)?;
        Ok(self.add_truncated(other))
    }

    pub fn try_sub(&self, other: &Jet) -> Result<Jet> {
        self.check_compat(other)?;
        Ok(self.add_truncated(&other.neg()))
    }

    /// Truncated Cauchy product; operands must agree in dimension and order.
    pub fn try_mul(&self, other: &Jet) -> Result<Jet> {
        self.check_compat(other)?;
        Ok(self.mul_truncated(other))
    }

    /// Sum at the smaller of the two orders.
    pub fn add_truncated(&self, other: &Jet) -> Jet {
        assert_eq!(self.dim, other.dim, "jet dimension mismatch");
        let order = self.order.min(other.order);
        let mut out = self.truncate(order);
        for (a, c) in &other.coeffs {
            if degree(a) > order {
                continue;
            }
            let e = out.coeffs.entry(a.clone()).or_default();
            *e += c;
            if e.is_zero() {
                out.coeffs.remove(a);
            }
        }
        out
    }

    pub fn sub_truncated(&self, other: &Jet) -> Jet {
        self.add_truncated(&other.neg())
    }

    /// Product at the smaller of the two orders.
    pub fn mul_truncated(&self, other: &Jet) -> Jet {
        assert_eq!(self.dim, other.dim, "jet dimension mismatch");
        let order = self.order.min(other.order);
        // constant factors are common (flat models, scalar prefactors)
        if other.coeffs.len() == 1 {
            if let Some(c) = other.const_only() {
                return self.truncate(order).scale(c);
            }
        }
        if self.coeffs.len() == 1 {
            if let Some(c) = self.const_only() {
                return other.truncate(order).scale(c);
            }
        }
        let (da, lhs) = self.integer_form(order);
        let (db, mut rhs) = other.integer_form(order);
        rhs.sort_by_key(|t| t.0);
        let mut acc: HashMap<MultiIndex, (BigInt, BigInt)> = HashMap::new();
        for (dl, a, ar, ai) in &lhs {
            for (dr, b, br, bi) in &rhs {
                if dl + dr > order {
                    break;
                }
                let mut weight: u64 = 1;
                let mut gamma: MultiIndex = SmallVec::with_capacity(self.dim);
                for k in 0..self.dim {
                    let g = a[k] as usize + b[k] as usize;
                    weight = weight
                        .checked_mul(binomial(g, a[k] as usize))
                        .expect("binomial weight overflow");
                    gamma.push(g as u8);
                }
                let mut re = ar * br;
                let mut im = BigInt::zero();
                if !ai.is_zero() || !bi.is_zero() {
                    re -= ai * bi;
                    im = ar * bi + ai * br;
                }
                if weight != 1 {
                    re *= weight;
                    im *= weight;
                }
                let e = acc.entry(gamma).or_default();
                e.0 += re;
                e.1 += im;
            }
        }
        let den = da * db;
        Jet {
            dim: self.dim,
            order,
            coeffs: acc
                .into_iter()
                .filter(|(_, (re, im))| !re.is_zero() || !im.is_zero())
                .map(|(g, (re, im))| {
                    let c = Scalar::new(
                        BigRational::new(re, den.clone()),
                        BigRational::new(im, den.clone()),
                    );
                    (g, c)
                })
                .collect(),
        }
    }

    /// Coefficients up to `order` over a common denominator `D`:
    /// `(D, [(|α|, α, D·Re c_α, D·Im c_α)])`.
    fn integer_form(&self, order: u32) -> (BigInt, Vec<(u32, &MultiIndex, BigInt, BigInt)>) {
        let kept: Vec<(u32, &MultiIndex, &Scalar)> = self
            .coeffs
            .iter()
            .map(|(a, c)| (degree(a), a, c))
            .filter(|(d, _, _)| *d <= order)
            .collect();
        let mut den = BigInt::one();
        for (_, _, c) in &kept {
            for q in [c.re(), c.im()] {
                if !q.denom().is_one() {
                    den = den.lcm(q.denom());
                }
            }
        }
        let scaled = |q: &BigRational| -> BigInt {
            if q.is_zero() {
                BigInt::zero()
            } else if q.denom().is_one() {
                q.numer() * &den
            } else {
                q.numer() * (&den / q.denom())
            }
        };
        let out = kept
            .into_iter()
            .map(|(d, a, c)| (d, a, scaled(c.re()), scaled(c.im())))
            .collect();
        (den, out)
    }

    fn const_only(&self) -> Option<&Scalar> {
        let (a, c) = self.coeffs.iter().next()?;
        if a.iter().all(|&x| x == 0) {
            Some(c)
        } else {
            None
        }
    }

    pub fn scale(&self, c: &Scalar) -> Jet {
        if c.is_zero() {
            return Jet::zero(self.dim, self.order);
        }
        if c.is_one() {
            return self.clone();
        }
        Jet {
            dim: self.dim,
            order: self.order,
            coeffs: self
                .coeffs
                .iter()
                .map(|(a, v)| (a.clone(), v * c))
                .collect(),
        }
    }

    pub fn neg(&self) -> Jet {
        Jet {
            dim: self.dim,
            order: self.order,
            coeffs: self.coeffs.iter().map(|(a, v)| (a.clone(), -v)).collect(),
        }
    }

    /// Formal partial derivative `∂_i`; the result has order `J − 1`.
    pub fn partial(&self, i: usize) -> Result<Jet> {
        if i >= self.dim {
            return Err(Error::DimensionMismatch(i, self.dim));
        }
        if self.order == 0 {
            return Err(Error::BudgetUnderflow(format!(
                "∂_{} of an order-0 jet",
                i + 1
            )));
        }
        let coeffs = self
            .coeffs
            .iter()
            .filter(|(a, _)| a[i] > 0)
            .map(|(a, c)| {
                let mut b = a.clone();
                b[i] -= 1;
                (b, c.clone())
            })
            .collect();
        Ok(Jet {
            dim: self.dim,
            order: self.order - 1,
            coeffs,
        })
    }

    /// Multiplicative inverse at the same order.
    pub fn invert(&self) -> Result<Jet> {
        let a0 = self.eval0();
        if a0.is_zero() {
            return Err(Error::Singular(
                "jet with vanishing constant term".to_string(),
            ));
        }
        let inv0 = a0.inv()?;
        let mut out: BTreeMap<MultiIndex, Scalar> = BTreeMap::new();
        let nonconst: Vec<(&MultiIndex, &Scalar)> = self
            .coeffs
            .iter()
            .filter(|(a, _)| a.iter().any(|&x| x > 0))
            .collect();
        for gamma in multi_indices(self.dim, self.order) {
            if gamma.iter().all(|&x| x == 0) {
                out.insert(gamma, inv0.clone());
                continue;
            }
            let mut acc = Scalar::zero();
            for (alpha, ca) in &nonconst {
                if alpha.iter().zip(gamma.iter()).any(|(a, g)| a > g) {
                    continue;
                }
                let beta: MultiIndex = gamma.iter().zip(alpha.iter()).map(|(g, a)| g - a).collect();
                if let Some(cb) = out.get(&beta) {
                    let w: u64 = (0..self.dim)
                        .map(|k| binomial(gamma[k] as usize, alpha[k] as usize))
                        .product();
                    acc += &(*ca * cb).mul_bigint(&BigInt::from(w));
                }
            }
            if !acc.is_zero() {
                out.insert(gamma, -(&acc * &inv0));
            }
        }
        Ok(Jet {
            dim: self.dim,
            order: self.order,
            coeffs: out,
        })
    }

    /// Integer power; negative exponents go through [`Jet::invert`].
    pub fn pow(&self, e: i32) -> Result<Jet> {
        let base = if e < 0 { self.invert()? } else { self.clone() };
        let mut acc = Jet::one(self.dim, self.order);
        for _ in 0..e.unsigned_abs() {
            acc = acc.mul_truncated(&base);
        }
        Ok(acc)
    }

    /// Complex conjugation of the represented function. In a complex frame
    /// the roles of `zᵏ` and `z̄ᵏ` are exchanged as well.
    pub fn conjugate(&self, frame: Frame) -> Jet {
        let n = self.dim / 2;
        let coeffs = self
            .coeffs
            .iter()
            .map(|(a, c)| {
                let mut b = a.clone();
                if frame == Frame::Complex {
                    for k in 0..n {
                        b.swap(k, n + k);
                    }
                }
                (b, c.conj())
            })
            .collect();
        Jet {
            dim: self.dim,
            order: self.order,
            coeffs,
        }
    }

    /// True if no stored derivative involves a `z̄` direction.
    pub fn is_holomorphic(&self) -> bool {
        let n = self.dim / 2;
        self.coeffs.keys().all(|a| a[n..].iter().all(|&x| x == 0))
    }

    /// True if no stored derivative involves a `z` direction.
    pub fn is_antiholomorphic(&self) -> bool {
        let n = self.dim / 2;
        self.coeffs.keys().all(|a| a[..n].iter().all(|&x| x == 0))
    }
}

/// Inverse of a square matrix of jets by Gauss–Jordan elimination, pivoting
/// on entries with nonzero constant term.
pub fn invert_matrix(m: &[Vec<Jet>]) -> Result<Vec<Vec<Jet>>> {
    let d = m.len();
    if d == 0 {
        return Ok(Vec::new());
    }
    let dim = m[0][0].dim();
    let order = m
        .iter()
        .flat_map(|row| row.iter().map(Jet::order))
        .min()
        .unwrap_or(0);
    let mut a: Vec<Vec<Jet>> = m
        .iter()
        .map(|row| row.iter().map(|j| j.truncate(order)).collect())
        .collect();
    let mut inv: Vec<Vec<Jet>> = (0..d)
        .map(|i| {
            (0..d)
                .map(|j| {
                    if i == j {
                        Jet::one(dim, order)
                    } else {
                        Jet::zero(dim, order)
                    }
                })
                .collect()
        })
        .collect();
    for col in 0..d {
        let pivot = (col..d)
            .find(|&r| !a[r][col].eval0().is_zero())
            .ok_or_else(|| Error::Singular("matrix singular at the base point".into()))?;
        a.swap(col, pivot);
        inv.swap(col, pivot);
        let p = a[col][col].invert()?;
        for k in 0..d {
            a[col][k] = a[col][k].mul_truncated(&p);
            inv[col][k] = inv[col][k].mul_truncated(&p);
        }
        for r in 0..d {
            if r == col || a[r][col].is_zero() {
                continue;
            }
            let f = a[r][col].clone();
            for k in 0..d {
                let t = f.mul_truncated(&a[col][k]);
                a[r][k] = a[r][k].sub_truncated(&t);
                let t = f.mul_truncated(&inv[col][k]);
                inv[r][k] = inv[r][k].sub_truncated(&t);
            }
        }
    }
    Ok(inv)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use smallvec::smallvec;

    fn x(dim: usize, order: u32, i: usize) -> Jet {
        Jet::coordinate(dim, order, i, Scalar::zero())
    }

    fn c(dim: usize, order: u32, v: i64) -> Jet {
        Jet::constant(dim, order, Scalar::from_int(v))
    }

    /// Geometric series Σ (−1)^k x^k as Taylor coefficients, by hand.
    fn one_over_one_plus_x(order: u32) -> Jet {
        Jet::from_taylor(
            1,
            order,
            (0..=order).map(|k| {
                let s = if k % 2 == 0 { 1 } else { -1 };
                (smallvec![k as u8], Scalar::from_int(s))
            }),
        )
    }

    #[test]
    fn addition_cancels() {
        let a = c(1, 2, 1).try_add(&x(1, 2, 0)).unwrap();
        let b = c(1, 2, 2).try_sub(&x(1, 2, 0)).unwrap();
        assert_eq!(a.try_add(&b).unwrap(), c(1, 2, 3));
        assert_eq!(a.try_add(&Jet::zero(1, 2)).unwrap(), a);
    }

    #[test]
    fn mismatch_is_structural_error() {
        assert_eq!(
            x(1, 2, 0).try_add(&x(1, 3, 0)),
            Err(Error::OrderMismatch(2, 3))
        );
        assert_eq!(
            x(1, 2, 0).try_mul(&x(2, 2, 0)),
            Err(Error::DimensionMismatch(1, 2))
        );
    }

    #[test]
    fn geometric_series_identity() {
        // 1/(1+x) + x/(1+x) = 1; long division gives x/(1+x) = x − x² + …
        let a = one_over_one_plus_x(2);
        let b = Jet::from_taylor(
            1,
            2,
            [
                (smallvec![1], Scalar::from_int(1)),
                (smallvec![2], Scalar::from_int(-1)),
            ],
        );
        assert_eq!(a.try_add(&b).unwrap(), c(1, 2, 1));
    }

    #[test]
    fn products() {
        let a = c(1, 2, 1).try_add(&x(1, 2, 0)).unwrap();
        let b = c(1, 2, 1).try_sub(&x(1, 2, 0)).unwrap();
        let expect = Jet::from_taylor(
            1,
            2,
            [
                (smallvec![0], Scalar::one()),
                (smallvec![2], Scalar::from_int(-1)),
            ],
        );
        assert_eq!(a.try_mul(&b).unwrap(), expect);
        assert_eq!(a.try_mul(&Jet::one(1, 2)).unwrap(), a);
        // 1/(1+x)² = Σ (−1)^k (k+1) x^k
        let sq = one_over_one_plus_x(3)
            .try_mul(&one_over_one_plus_x(3))
            .unwrap();
        let expect = Jet::from_taylor(
            1,
            3,
            (0..=3).map(|k| {
                let s = if k % 2 == 0 { 1 } else { -1 };
                (smallvec![k as u8], Scalar::from_int(s * (k as i64 + 1)))
            }),
        );
        assert_eq!(sq, expect);
    }

    #[test]
    fn partials() {
        let half_sq = Jet::monomial(2, 3, &[2, 0], Scalar::ratio(1, 2));
        assert_eq!(half_sq.partial(0).unwrap(), x(2, 2, 0));
        assert!(x(2, 3, 0).partial(1).unwrap().is_zero());
        assert_eq!(x(2, 3, 0).partial(1).unwrap().order(), 2);
        // d/dx 1/(1+x) = −1/(1+x)²
        let d = one_over_one_plus_x(4).partial(0).unwrap();
        let expect = Jet::from_taylor(
            1,
            3,
            (0..=3).map(|k| {
                let s = if k % 2 == 0 { -1 } else { 1 };
                (smallvec![k as u8], Scalar::from_int(s * (k as i64 + 1)))
            }),
        );
        assert_eq!(d, expect);
        assert!(matches!(
            c(1, 0, 1).partial(0),
            Err(Error::BudgetUnderflow(_))
        ));
    }

    #[test]
    fn inversion() {
        assert_eq!(
            c(1, 3, 2).invert().unwrap(),
            Jet::constant(1, 3, Scalar::ratio(1, 2))
        );
        let a = c(1, 2, 1).try_add(&x(1, 2, 0)).unwrap();
        assert_eq!(a.invert().unwrap(), one_over_one_plus_x(2));
        assert!(matches!(x(1, 2, 0).invert(), Err(Error::Singular(_))));
    }

    #[test]
    fn conjugation() {
        let ix = x(2, 2, 0).scale(&Scalar::i());
        assert_eq!(ix.conjugate(Frame::Real), ix.neg());
        let z = x(2, 2, 0);
        let zb = x(2, 2, 1);
        assert_eq!(z.conjugate(Frame::Complex), zb);
    }

    #[test]
    fn eval0_values() {
        assert_eq!(
            c(1, 2, 3).try_add(&x(1, 2, 0)).unwrap().eval0(),
            Scalar::from_int(3)
        );
        assert_eq!(Jet::zero(2, 2).eval0(), Scalar::zero());
        assert_eq!(one_over_one_plus_x(5).eval0(), Scalar::one());
    }

    #[test]
    fn matrix_inverse() {
        let dim = 2;
        let o = 3;
        let m = vec![
            vec![c(dim, o, 1).add_truncated(&x(dim, o, 0)), x(dim, o, 1)],
            vec![x(dim, o, 0), c(dim, o, 2)],
        ];
        let inv = invert_matrix(&m).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                let mut s = Jet::zero(dim, o);
                for k in 0..2 {
                    s = s.add_truncated(&m[i][k].mul_truncated(&inv[k][j]));
                }
                let expect = if i == j {
                    c(dim, o, 1)
                } else {
                    Jet::zero(dim, o)
                };
                assert_eq!(s, expect);
            }
        }
    }

    const DIM: usize = 2;
    const ORDER: u32 = 4;

    fn arb_jet() -> impl Strategy<Value = Jet> {
        proptest::collection::vec(((0u8..3, 0u8..3), -4i64..5, 1i64..4), 0..5).prop_map(|terms| {
            Jet::from_derivatives(
                DIM,
                ORDER,
                terms
                    .into_iter()
                    .map(|((a, b), p, q)| (smallvec![a, b], Scalar::ratio(p, q))),
            )
        })
    }

    fn arb_complex_jet() -> impl Strategy<Value = Jet> {
        (arb_jet(), arb_jet()).prop_map(|(a, b)| a.add_truncated(&b.scale(&Scalar::i())))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn ring_axioms(a in arb_complex_jet(), b in arb_complex_jet(), c in arb_complex_jet()) {
            let ab_c = a.try_mul(&b).unwrap().try_mul(&c).unwrap();
            let a_bc = a.try_mul(&b.try_mul(&c).unwrap()).unwrap();
            prop_assert_eq!(ab_c, a_bc);
            let lhs = a.try_mul(&b.try_add(&c).unwrap()).unwrap();
            let rhs = a.try_mul(&b).unwrap().try_add(&a.try_mul(&c).unwrap()).unwrap();
            prop_assert_eq!(lhs, rhs);
            prop_assert_eq!(a.try_mul(&b).unwrap(), b.try_mul(&a).unwrap());
        }

        #[test]
        fn mixed_partials_commute(a in arb_complex_jet()) {
            let xy = a.partial(0).unwrap().partial(1).unwrap();
            let yx = a.partial(1).unwrap().partial(0).unwrap();
            prop_assert_eq!(xy, yx);
        }

        #[test]
        fn inverse_property(a in arb_complex_jet()) {
            // force a(0) = 5/3
            let shift = Jet::constant(DIM, ORDER, &Scalar::ratio(5, 3) - &a.eval0());
            let a = a.try_add(&shift).unwrap();
            let prod = a.try_mul(&a.invert().unwrap()).unwrap();
            prop_assert_eq!(prod, Jet::one(DIM, ORDER));
        }

        #[test]
        fn conjugation_is_an_involutive_automorphism(a in arb_complex_jet(), b in arb_complex_jet()) {
            for frame in [Frame::Real, Frame::Complex] {
                prop_assert_eq!(a.conjugate(frame).conjugate(frame), a.clone());
                let lhs = a.try_mul(&b).unwrap().conjugate(frame);
                let rhs = a.conjugate(frame).try_mul(&b.conjugate(frame)).unwrap();
                prop_assert_eq!(lhs, rhs);
            }
        }
    }
}
