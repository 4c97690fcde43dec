//! The truncated Fedosov algebra `W ⊗ Λ`.
//!
//! A [`Section`] is a finite sum of terms `ħ^h · f · y^α ⊗ dx^J`, where the
//! symmetric factor is stored as an exponent vector `α` (so
//! `dx¹ ∨ dx¹ = y₁²` with no combinatorial prefactor), the antisymmetric
//! factor as a bitmask `J` of strictly increasing frame indices, and the
//! coefficient `f` as a [`Jet`]. Symmetric insertion `i_s(∂_i)` is the
//! derivative `∂/∂y^i`.
//!
//! Every section carries explicit truncation caps; terms with
//! `Deg = 2h + |α|` above `max_deg` are never stored.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use crate::error::{Error, Result};
use crate::jets::{degree, factorial, Frame, Jet, MultiIndex};
use crate::scalar::Scalar;

/// Truncation window: `2h + deg_s ≤ max_deg` and `h ≤ max_h`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Caps {
    pub max_deg: u32,
    pub max_h: u32,
}

impl Caps {
    pub fn new(max_deg: u32) -> Self {
        Self {
            max_deg,
            max_h: max_deg / 2,
        }
    }

    fn admits(&self, key: &TermKey) -> bool {
        key.h <= self.max_h && key.total_degree() <= self.max_deg
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TermKey {
    pub h: u32,
    /// Exponent vector of the symmetric part.
    pub sym: MultiIndex,
    /// Bitmask of the antisymmetric part.
    pub asym: u32,
}

impl TermKey {
    pub fn new(h: u32, sym: &[u8], asym: &[usize]) -> (Self, i32) {
        let mut mask = 0u32;
        let mut sign = 1;
        for (p, &i) in asym.iter().enumerate() {
            if mask & (1 << i) != 0 {
                return (
                    Self {
                        h,
                        sym: SmallVec::from_slice(sym),
                        asym: 0,
                    },
                    0,
                );
            }
            // bring i into sorted position among the ones already placed
            let later = asym[..p].iter().filter(|&&j| j > i).count();
            if later % 2 == 1 {
                sign = -sign;
            }
            mask |= 1 << i;
        }
        (
            Self {
                h,
                sym: SmallVec::from_slice(sym),
                asym: mask,
            },
            sign,
        )
    }

    pub fn deg_s(&self) -> u32 {
        degree(&self.sym)
    }

    pub fn deg_a(&self) -> u32 {
        self.asym.count_ones()
    }

    pub fn total_degree(&self) -> u32 {
        2 * self.h + self.deg_s()
    }

    pub fn asym_indices(&self) -> Vec<usize> {
        (0..32).filter(|i| self.asym & (1 << i) != 0).collect()
    }
}

/// Sign of `dx^A ∧ dx^B` relative to the sorted union; zero on overlap.
pub fn wedge_sign(a: u32, b: u32) -> i32 {
    if a & b != 0 {
        return 0;
    }
    let mut inversions = 0;
    let mut bb = b;
    while bb != 0 {
        let j = bb.trailing_zeros();
        // indices of a above j must move past dx^j
        inversions += (a >> (j + 1)).count_ones();
        bb &= bb - 1;
    }
    if inversions % 2 == 0 {
        1
    } else {
        -1
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Section {
    dim: usize,
    frame: Frame,
    caps: Caps,
    jet_order: u32,
    terms: BTreeMap<TermKey, Jet>,
}

impl Section {
    pub fn zero(dim: usize, frame: Frame, caps: Caps, jet_order: u32) -> Self {
        assert!(dim <= 32, "frame dimension above 32 is not supported");
        Self {
            dim,
            frame,
            caps,
            jet_order,
            terms: BTreeMap::new(),
        }
    }

    /// `f ⊗ 1`.
    pub fn function(f: &Jet, frame: Frame, caps: Caps) -> Self {
        let mut s = Self::zero(f.dim(), frame, caps, f.order());
        s.add_term(TermKey::new(0, &vec![0; f.dim()], &[]).0, f.clone());
        s
    }

    /// Same shape, no terms.
    pub fn zero_like(&self) -> Self {
        Self::zero(self.dim, self.frame, self.caps, self.jet_order)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn frame(&self) -> Frame {
        self.frame
    }

    pub fn caps(&self) -> Caps {
        self.caps
    }

    /// Reliable jet order shared by all coefficients.
    pub fn jet_order(&self) -> u32 {
        self.jet_order
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&TermKey, &Jet)> {
        self.terms.iter()
    }

    pub fn get(&self, key: &TermKey) -> Option<&Jet> {
        self.terms.get(key)
    }

    fn lower_order(&mut self, order: u32) {
        if order < self.jet_order {
            self.jet_order = order;
            let terms = std::mem::take(&mut self.terms);
            self.terms = terms
                .into_iter()
                .map(|(k, j)| (k, j.truncate(order)))
                .filter(|(_, j)| !j.is_zero())
                .collect();
        }
    }

    /// Add `jet` to the coefficient of `key`. Keys outside the caps are
    /// dropped; a lower jet order lowers the order of the whole section.
    pub fn add_term(&mut self, key: TermKey, jet: Jet) {
        debug_assert_eq!(key.sym.len(), self.dim);
        if !self.caps.admits(&key) {
            return;
        }
        self.lower_order(jet.order());
        let jet = jet.truncate(self.jet_order);
        if jet.is_zero() {
            return;
        }
        match self.terms.get_mut(&key) {
            Some(existing) => {
                let s = existing.add_truncated(&jet);
                if s.is_zero() {
                    self.terms.remove(&key);
                } else {
                    *existing = s;
                }
            }
            None => {
                self.terms.insert(key, jet);
            }
        }
    }

    fn check_compat(&self, other: &Section) -> Result<()> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch(self.dim, other.dim));
        }
        if self.frame != other.frame {
            return Err(Error::Structure("frame mismatch".into()));
        }
        if self.caps != other.caps {
            return Err(Error::Structure(format!(
                "caps mismatch: {:?} vs {:?}",
                self.caps, other.caps
            )));
        }
        Ok(())
    }

    fn map_terms<F>(&self, mut f: F) -> Section
    where
        F: FnMut(&TermKey, &Jet) -> Option<(TermKey, Jet)>,
    {
        let mut out = self.zero_like();
        for (k, j) in &self.terms {
            if let Some((k2, j2)) = f(k, j) {
                out.add_term(k2, j2);
            }
        }
        out
    }

    fn filter(&self, mut keep: impl FnMut(&TermKey) -> bool) -> Section {
        self.map_terms(|k, j| keep(k).then(|| (k.clone(), j.clone())))
    }

    pub fn add(&self, other: &Section) -> Result<Section> {
        self.check_compat(other)?;
        let mut out = self.clone();
        out.lower_order(other.jet_order);
        for (k, j) in &other.terms {
            out.add_term(k.clone(), j.clone());
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Section) -> Result<Section> {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Section {
        self.map_terms(|k, j| Some((k.clone(), j.neg())))
    }

    pub fn scale(&self, c: &Scalar) -> Section {
        self.map_terms(|k, j| Some((k.clone(), j.scale(c))))
    }

    /// Multiply every coefficient by a function.
    pub fn mul_jet(&self, f: &Jet) -> Section {
        let mut out = self.zero_like();
        out.lower_order(f.order());
        for (k, j) in &self.terms {
            out.add_term(k.clone(), j.mul_truncated(f));
        }
        out
    }

    /// Multiply by `ħ^k`.
    pub fn mul_hbar(&self, k: u32) -> Section {
        self.map_terms(|key, j| {
            let mut key = key.clone();
            key.h += k;
            Some((key, j.clone()))
        })
    }

    /// Same terms in a different truncation window.
    pub fn with_caps(&self, caps: Caps) -> Section {
        let mut out = Section::zero(self.dim, self.frame, caps, self.jet_order);
        for (k, j) in &self.terms {
            out.add_term(k.clone(), j.clone());
        }
        out
    }

    /// Truncate all coefficients to `order`.
    pub fn with_jet_order(&self, order: u32) -> Section {
        let mut out = self.clone();
        out.lower_order(order);
        out
    }

    pub fn max_deg_s(&self) -> u32 {
        self.terms.keys().map(TermKey::deg_s).max().unwrap_or(0)
    }

    pub fn max_total_degree(&self) -> Option<u32> {
        self.terms.keys().map(TermKey::total_degree).max()
    }

    pub fn min_total_degree(&self) -> Option<u32> {
        self.terms.keys().map(TermKey::total_degree).min()
    }

    /// Part of total degree `k` (`a^{(k)}`).
    pub fn component(&self, k: u32) -> Section {
        self.filter(|key| key.total_degree() == k)
    }

    /// Part of total degree `k` and symmetric degree `s` (`a^{(k)}_s`).
    pub fn component_s(&self, k: u32, s: u32) -> Section {
        self.filter(|key| key.total_degree() == k && key.deg_s() == s)
    }

    /// Part of antisymmetric degree `l`.
    pub fn asym_part(&self, l: u32) -> Section {
        self.filter(|key| key.deg_a() == l)
    }

    /// Symmetric/antisymmetric degree zero part (the symbol map σ).
    pub fn sigma(&self) -> Section {
        self.filter(|key| key.deg_s() == 0 && key.asym == 0)
    }

    /// Coefficient functions of `ħ⁰, ħ¹, …, ħ^{max_h}` in the σ-part.
    pub fn hbar_coefficients(&self) -> Vec<Jet> {
        let mut out = vec![Jet::zero(self.dim, self.jet_order); self.caps.max_h as usize + 1];
        for (k, j) in &self.terms {
            if k.deg_s() == 0 && k.asym == 0 {
                out[k.h as usize] = j.clone();
            }
        }
        out
    }

    /// Lowest term (in key order) of a nonzero section together with its
    /// first nonzero derivative coefficient. `None` means exactly zero.
    pub fn first_defect(&self) -> Option<(TermKey, MultiIndex, Scalar)> {
        let (k, j) = self.terms.iter().next()?;
        let (a, c) = j.derivatives().next()?;
        Some((k.clone(), a.clone(), c.clone()))
    }

    /// `∂^α/∂y^α` on the symmetric part (iterated `i_s`).
    pub fn insert_sym(&self, alpha: &[u8]) -> Section {
        self.map_terms(|k, j| {
            if k.sym.iter().zip(alpha).any(|(s, a)| s < a) {
                return None;
            }
            let mut w = BigInt::from(1);
            let mut sym = k.sym.clone();
            for i in 0..self.dim {
                for t in 0..alpha[i] {
                    w *= BigInt::from(sym[i] - t);
                }
                sym[i] -= alpha[i];
            }
            Some((
                TermKey {
                    h: k.h,
                    sym,
                    asym: k.asym,
                },
                j.scale(&Scalar::from_bigint(w)),
            ))
        })
    }
}

impl fmt::Display for Section {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (n, (k, j)) in self.terms.iter().enumerate() {
            if n > 0 {
                write!(f, " + ")?;
            }
            write!(
                f,
                "ħ^{} y^{:?} dx^{:?} [",
                k.h,
                k.sym.as_slice(),
                k.asym_indices()
            )?;
            for (m, (a, c)) in j.derivatives().enumerate() {
                if m > 0 {
                    write!(f, ", ")?;
                }
                write!(f, "∂{:?}:{}", a.as_slice(), c)?;
            }
            write!(f, "]")?;
        }
        Ok(())
    }
}

/// The undeformed fibrewise product `(f⊗α)(g⊗β) = f∨g ⊗ α∧β`.
pub fn fib_mul(a: &Section, b: &Section) -> Result<Section> {
    a.check_compat(b)?;
    Ok(fib_mul_window(a, b, 0, a.caps.max_deg))
}

/// Fibrewise product with an extra `ħ^h_shift`, keeping only output terms
/// with total degree `≤ max_deg`.
fn fib_mul_window(a: &Section, b: &Section, h_shift: u32, max_deg: u32) -> Section {
    let mut out = a.zero_like();
    out.lower_order(b.jet_order);
    let rhs: Vec<(&TermKey, &Jet, u32)> = b
        .terms
        .iter()
        .map(|(k, j)| (k, j, k.total_degree()))
        .collect();
    for (ka, ja) in &a.terms {
        let da = ka.total_degree() + 2 * h_shift;
        for (kb, jb, db) in &rhs {
            if da + db > max_deg {
                continue;
            }
            let sign = wedge_sign(ka.asym, kb.asym);
            if sign == 0 {
                continue;
            }
            let sym: MultiIndex = ka
                .sym
                .iter()
                .zip(kb.sym.iter())
                .map(|(x, y)| x + y)
                .collect();
            let key = TermKey {
                h: ka.h + kb.h + h_shift,
                sym,
                asym: ka.asym | kb.asym,
            };
            let mut j = ja.mul_truncated(jb);
            if sign < 0 {
                j = j.neg();
            }
            out.add_term(key, j);
        }
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PairingKind {
    /// `Λ^{ij} = −Λ^{ji}` (fibrewise Weyl product).
    Antisymmetric,
    /// Only holomorphic-left / antiholomorphic-right entries (fibrewise Wick).
    OneDirectional,
}

/// The bivector contracted by the fibrewise products, entries as jets.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PairingTensor {
    dim: usize,
    kind: PairingKind,
    entries: Vec<Vec<Jet>>,
}

impl PairingTensor {
    /// Validates the shape; pairings that are neither antisymmetric nor
    /// one-directional are rejected.
    pub fn new(frame: Frame, entries: Vec<Vec<Jet>>) -> Result<Self> {
        let d = entries.len();
        if entries.iter().any(|row| row.len() != d) {
            return Err(Error::InvalidPairing("matrix is not square".into()));
        }
        let antisym =
            (0..d).all(|i| (0..d).all(|j| entries[i][j].add_truncated(&entries[j][i]).is_zero()));
        if antisym {
            return Ok(Self {
                dim: d,
                kind: PairingKind::Antisymmetric,
                entries,
            });
        }
        if frame == Frame::Complex {
            let n = d / 2;
            let one_dir =
                (0..d).all(|i| (0..d).all(|j| (i < n && j >= n) || entries[i][j].is_zero()));
            if one_dir {
                return Ok(Self {
                    dim: d,
                    kind: PairingKind::OneDirectional,
                    entries,
                });
            }
        }
        Err(Error::InvalidPairing(
            "neither antisymmetric nor holomorphic-to-antiholomorphic".into(),
        ))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> PairingKind {
        self.kind
    }

    pub fn entry(&self, i: usize, j: usize) -> &Jet {
        &self.entries[i][j]
    }

    pub fn entries(&self) -> &[Vec<Jet>] {
        &self.entries
    }

    fn nonzero(&self) -> Vec<(usize, usize, &Jet)> {
        let mut v = Vec::new();
        for i in 0..self.dim {
            for j in 0..self.dim {
                if !self.entries[i][j].is_zero() {
                    v.push((i, j, &self.entries[i][j]));
                }
            }
        }
        v
    }
}

/// All ways of writing `r` as an ordered sum of `parts` nonnegative integers.
fn compositions(r: u32, parts: usize) -> Vec<Vec<u32>> {
    if parts == 0 {
        return if r == 0 { vec![vec![]] } else { vec![] };
    }
    let mut out = Vec::new();
    for first in (0..=r).rev() {
        for mut rest in compositions(r - first, parts - 1) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

/// `Λ^{(r)}(a, b)` without the `(iħ/2)^r` prefactor and without shifting ħ:
/// `(1/r!) P^{i₁j₁}…P^{i_r j_r} (i_s(∂_{i₁})…a)(i_s(∂_{j₁})…b)`.
pub fn lambda_r(a: &Section, b: &Section, p: &PairingTensor, r: u32) -> Result<Section> {
    a.check_compat(b)?;
    Ok(lambda_r_window(
        a,
        b,
        p,
        r,
        0,
        a.caps.max_deg,
        &Scalar::one(),
    ))
}

/// Sum over multiplicity patterns `m` of pairings:
/// `Σ_m Π (P_p)^{m_p}/m_p! · (∂^{α(m)} a)(∂^{β(m)} b)`.
fn lambda_r_window(
    a: &Section,
    b: &Section,
    p: &PairingTensor,
    r: u32,
    h_shift: u32,
    max_deg: u32,
    prefactor: &Scalar,
) -> Section {
    let pairs = p.nonzero();
    let mut out = a.zero_like();
    if r == 0 {
        let prod = fib_mul_window(a, b, h_shift, max_deg);
        return prod.scale(prefactor);
    }
    let mut a_cache: BTreeMap<MultiIndex, Section> = BTreeMap::new();
    let mut b_cache: BTreeMap<MultiIndex, Section> = BTreeMap::new();
    let mut powers: Vec<Vec<Jet>> = pairs
        .iter()
        .map(|(_, _, j)| vec![Jet::one(j.dim(), j.order())])
        .collect();
    for m in compositions(r, pairs.len()) {
        let mut alpha: MultiIndex = SmallVec::from_elem(0, a.dim);
        let mut beta: MultiIndex = SmallVec::from_elem(0, a.dim);
        for (q, &(i, j, _)) in pairs.iter().enumerate() {
            alpha[i] += m[q] as u8;
            beta[j] += m[q] as u8;
        }
        let da = a_cache
            .entry(alpha.clone())
            .or_insert_with(|| a.insert_sym(&alpha));
        if da.is_zero() {
            continue;
        }
        let db = b_cache
            .entry(beta.clone())
            .or_insert_with(|| b.insert_sym(&beta));
        if db.is_zero() {
            continue;
        }
        let mut coef: Option<Jet> = None;
        let mut denom = BigInt::from(1);
        for (q, &(_, _, pj)) in pairs.iter().enumerate() {
            let k = m[q] as usize;
            if k == 0 {
                continue;
            }
            while powers[q].len() <= k {
                let next = powers[q].last().unwrap().mul_truncated(pj);
                powers[q].push(next);
            }
            denom *= factorial(k);
            coef = Some(match coef {
                None => powers[q][k].clone(),
                Some(c) => c.mul_truncated(&powers[q][k]),
            });
        }
        let scalar = prefactor
            .try_div(&Scalar::from_bigint(denom))
            .expect("nonzero factorial");
        let coef = coef.expect("r > 0").scale(&scalar);
        let lhs = da.mul_jet(&coef);
        let prod = fib_mul_window(&lhs, db, h_shift, max_deg);
        out = out.add(&prod).expect("same shape");
    }
    out
}

/// The fibrewise deformed product `Σ_r (iħ/2)^r Λ^{(r)}(a, b)`; with the
/// Poisson tensor this is `a ∘ b`, with the Wick pairing `a ∘′ b`.
pub fn star_fiber(a: &Section, b: &Section, p: &PairingTensor) -> Result<Section> {
    star_fiber_upto(a, b, p, a.caps.max_deg)
}

/// [`star_fiber`] restricted to output total degree `≤ max_deg`.
pub fn star_fiber_upto(
    a: &Section,
    b: &Section,
    p: &PairingTensor,
    max_deg: u32,
) -> Result<Section> {
    a.check_compat(b)?;
    if p.dim() != a.dim {
        return Err(Error::DimensionMismatch(p.dim(), a.dim));
    }
    let max_deg = max_deg.min(a.caps.max_deg);
    let rmax = a.max_deg_s().min(b.max_deg_s()).min(a.caps.max_h);
    let half_i = Scalar::complex(Scalar::zero(), Scalar::ratio(1, 2));
    let mut out = a.zero_like();
    let mut pref = Scalar::one();
    for r in 0..=rmax {
        let term = lambda_r_window(a, b, p, r, r, max_deg, &pref);
        out = out.add(&term)?;
        pref = &pref * &half_i;
    }
    Ok(out)
}

/// Split into parts of even and odd antisymmetric degree.
fn parity_split(a: &Section) -> (Section, Section) {
    (
        a.filter(|k| k.deg_a() % 2 == 0),
        a.filter(|k| k.deg_a() % 2 == 1),
    )
}

/// `[a, b] = a∘b − (−1)^{kl} b∘a` for the product defined by `p`, extended
/// bilinearly over the antisymmetric-degree parts.
pub fn graded_commutator(a: &Section, b: &Section, p: &PairingTensor) -> Result<Section> {
    graded_commutator_upto(a, b, p, a.caps.max_deg)
}

pub fn graded_commutator_upto(
    a: &Section,
    b: &Section,
    p: &PairingTensor,
    max_deg: u32,
) -> Result<Section> {
    let ab = star_fiber_upto(a, b, p, max_deg)?;
    let ba = star_fiber_upto(b, a, p, max_deg)?;
    let (_, a_odd) = parity_split(a);
    let (_, b_odd) = parity_split(b);
    // (−1)^{kl} b∘a = b∘a − 2 b_odd∘a_odd
    let odd = star_fiber_upto(&b_odd, &a_odd, p, max_deg)?;
    ab.sub(&ba)?.add(&odd.scale(&Scalar::from_int(2)))
}

/// `ad(a) = [a, ·]`.
pub fn ad<'a>(a: &'a Section, p: &'a PairingTensor) -> impl Fn(&Section) -> Result<Section> + 'a {
    move |b| graded_commutator(a, b, p)
}

/// `(i/ħ)[a, b]`, computed only up to output total degree `max_deg`. Errors
/// if that needs product terms beyond the caps.
pub fn i_over_hbar_commutator(
    a: &Section,
    b: &Section,
    p: &PairingTensor,
    max_deg: u32,
) -> Result<Section> {
    if max_deg + 2 > a.caps.max_deg {
        return Err(Error::WindowExceeded(format!(
            "(i/ħ)·ad up to degree {} needs product degree {} > cap {}",
            max_deg,
            max_deg + 2,
            a.caps.max_deg
        )));
    }
    let c = graded_commutator_upto(a, b, p, max_deg + 2)?;
    Ok(div_hbar(&c)?.scale(&Scalar::i()))
}

/// Shift all ħ-powers down by one.
pub fn div_hbar(a: &Section) -> Result<Section> {
    if let Some((k, _)) = a.terms.iter().find(|(k, _)| k.h == 0) {
        return Err(Error::NotDivisible(format!(
            "term y^{:?} dx^{:?} has no ħ factor",
            k.sym.as_slice(),
            k.asym_indices()
        )));
    }
    Ok(a.map_terms(|k, j| {
        let mut k = k.clone();
        k.h -= 1;
        Some((k, j.clone()))
    }))
}

/// `δa = (1 ⊗ dx^i) i_s(∂_i) a`.
pub fn delta(a: &Section) -> Section {
    let mut out = a.zero_like();
    for (k, j) in &a.terms {
        for i in 0..a.dim {
            if k.sym[i] == 0 || k.asym & (1 << i) != 0 {
                continue;
            }
            let mut sym = k.sym.clone();
            let mult = sym[i];
            sym[i] -= 1;
            let sign = wedge_sign(1 << i, k.asym);
            let key = TermKey {
                h: k.h,
                sym,
                asym: k.asym | (1 << i),
            };
            out.add_term(key, j.scale(&Scalar::from_int(sign as i64 * mult as i64)));
        }
    }
    out
}

/// `δ⁻¹a = (1/(k+l)) (dx^i ⊗ 1) i_a(∂_i) a` on each homogeneous part,
/// zero where `k + l = 0`.
pub fn delta_inv(a: &Section) -> Section {
    let mut out = a.zero_like();
    for (k, j) in &a.terms {
        let kl = k.deg_s() + k.deg_a();
        if kl == 0 {
            continue;
        }
        let norm = Scalar::ratio(1, kl as i64);
        for (pos, i) in k.asym_indices().into_iter().enumerate() {
            let mut sym = k.sym.clone();
            sym[i] += 1;
            let key = TermKey {
                h: k.h,
                sym,
                asym: k.asym & !(1 << i),
            };
            let sign = if pos % 2 == 0 { 1 } else { -1 };
            out.add_term(key, j.scale(&norm.mul_int(sign)));
        }
    }
    out
}

/// Christoffel symbols `Γ^k_{ij}` of a torsion-free connection, as jets.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Connection {
    dim: usize,
    gamma: Vec<Jet>,
}

impl Connection {
    pub fn new(dim: usize, gamma: Vec<Jet>) -> Self {
        assert_eq!(gamma.len(), dim * dim * dim);
        Self { dim, gamma }
    }

    pub fn flat(dim: usize, order: u32) -> Self {
        Self::new(dim, vec![Jet::zero(dim, order); dim * dim * dim])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `Γ^k_{ij}`.
    pub fn get(&self, k: usize, i: usize, j: usize) -> &Jet {
        &self.gamma[(k * self.dim + i) * self.dim + j]
    }

    pub fn get_mut(&mut self, k: usize, i: usize, j: usize) -> &mut Jet {
        &mut self.gamma[(k * self.dim + i) * self.dim + j]
    }

    pub fn order(&self) -> u32 {
        self.gamma.iter().map(Jet::order).min().unwrap_or(0)
    }
}

/// `∇a = (1 ⊗ dx^i) ∇_{∂_i} a`, with `∇_{∂_i} dx^j = −Γ^j_{ik} dx^k` on
/// every symmetric and antisymmetric slot.
pub fn nabla(a: &Section, conn: &Connection) -> Result<Section> {
    if conn.dim() != a.dim {
        return Err(Error::DimensionMismatch(conn.dim(), a.dim));
    }
    let d = a.dim;
    let mut out = a.zero_like();
    out.lower_order(a.jet_order.saturating_sub(1).min(conn.order()));
    // nonzero Γ^j_{ik}, grouped by i
    let mut by_i: Vec<Vec<(usize, usize, &Jet)>> = vec![Vec::new(); d];
    for j in 0..d {
        for i in 0..d {
            for k in 0..d {
                let g = conn.get(j, i, k);
                if !g.is_zero() {
                    by_i[i].push((j, k, g));
                }
            }
        }
    }
    for (key, f) in &a.terms {
        for i in 0..d {
            let mut inner = a.zero_like();
            inner.lower_order(out.jet_order);
            inner.add_term(key.clone(), f.partial(i)?);
            for &(j, k, g) in &by_i[i] {
                let gf = g.mul_truncated(f).neg();
                // symmetric slots: −Γ^j_{ik} y^k ∂/∂y^j
                if key.sym[j] > 0 {
                    let mut sym = key.sym.clone();
                    let mult = sym[j];
                    sym[j] -= 1;
                    sym[k] += 1;
                    inner.add_term(
                        TermKey {
                            h: key.h,
                            sym,
                            asym: key.asym,
                        },
                        gf.scale(&Scalar::from_int(mult as i64)),
                    );
                }
                // antisymmetric slots: −Γ^j_{ik} dx^k ∧ i_a(∂_j)
                if key.asym & (1 << j) != 0 {
                    let pos = (key.asym & ((1 << j) - 1)).count_ones();
                    let rest = key.asym & !(1 << j);
                    let s2 = wedge_sign(1 << k, rest);
                    if s2 != 0 {
                        let sign = s2 * if pos % 2 == 0 { 1 } else { -1 };
                        inner.add_term(
                            TermKey {
                                h: key.h,
                                sym: key.sym.clone(),
                                asym: rest | (1 << k),
                            },
                            gf.scale(&Scalar::from_int(sign as i64)),
                        );
                    }
                }
            }
            for (k2, j2) in inner.terms {
                let sign = wedge_sign(1 << i, k2.asym);
                if sign == 0 {
                    continue;
                }
                let key2 = TermKey {
                    h: k2.h,
                    sym: k2.sym,
                    asym: k2.asym | (1 << i),
                };
                out.add_term(key2, if sign < 0 { j2.neg() } else { j2 });
            }
        }
    }
    Ok(out)
}

fn require_complex(a: &Section) -> Result<usize> {
    if a.frame != Frame::Complex {
        return Err(Error::UnsupportedFrame);
    }
    Ok(a.dim / 2)
}

/// `Δ = ω^{k l̄} i_s(Z_k) i_s(Z̄_l)`; `ginv[k][l] = ω^{k l̄}`.
pub fn laplacian(a: &Section, ginv: &[Vec<Jet>]) -> Result<Section> {
    let n = require_complex(a)?;
    let mut out = a.zero_like();
    for k in 0..n {
        for l in 0..n {
            let g = &ginv[k][l];
            if g.is_zero() {
                continue;
            }
            let mut alpha: MultiIndex = SmallVec::from_elem(0, a.dim);
            alpha[k] += 1;
            alpha[n + l] += 1;
            out = out.add(&a.insert_sym(&alpha).mul_jet(g))?;
        }
    }
    Ok(out)
}

fn exp_hbar_laplacian(a: &Section, ginv: &[Vec<Jet>], sign: i64) -> Result<Section> {
    require_complex(a)?;
    let mut out = a.clone();
    let mut term = a.clone();
    let mut m = 1i64;
    loop {
        term = laplacian(&term, ginv)?
            .mul_hbar(1)
            .scale(&Scalar::ratio(sign, m));
        if term.is_zero() {
            break;
        }
        out = out.add(&term)?;
        m += 1;
    }
    Ok(out)
}

/// `S = e^{ħΔ}`.
pub fn s_op(a: &Section, ginv: &[Vec<Jet>]) -> Result<Section> {
    exp_hbar_laplacian(a, ginv, 1)
}

/// `S⁻¹ = e^{−ħΔ}`.
pub fn s_inv(a: &Section, ginv: &[Vec<Jet>]) -> Result<Section> {
    exp_hbar_laplacian(a, ginv, -1)
}

/// Complex conjugation `C`; in a complex frame also exchanges `dzᵏ ↔ dz̄ᵏ`.
pub fn conj_c(a: &Section) -> Section {
    let n = a.dim / 2;
    let frame = a.frame;
    a.map_terms(|k, j| {
        let jet = j.conjugate(frame);
        if frame == Frame::Real {
            return Some((k.clone(), jet));
        }
        let mut sym = k.sym.clone();
        for t in 0..n {
            sym.swap(t, n + t);
        }
        let swapped: Vec<usize> = k
            .asym_indices()
            .into_iter()
            .map(|i| if i < n { i + n } else { i - n })
            .collect();
        let (key, sign) = TermKey::new(k.h, &sym, &swapped);
        Some((key, if sign < 0 { jet.neg() } else { jet }))
    })
}

/// `P_ħ = (−1)^{deg_ħ}`.
pub fn parity_p(a: &Section) -> Section {
    a.map_terms(|k, j| Some((k.clone(), if k.h % 2 == 1 { j.neg() } else { j.clone() })))
}

/// Symmetric forms of type `(k, l)`: `k` holomorphic and `l`
/// antiholomorphic factors.
pub fn pi_type(a: &Section, k: u32, l: u32) -> Result<Section> {
    let n = require_complex(a)?;
    Ok(a.filter(|key| degree(&key.sym[..n]) == k && degree(&key.sym[n..]) == l))
}
