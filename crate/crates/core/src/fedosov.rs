//! Fedosov recursions, the star products `∗` and `∗′`, and their
//! verification.
//!
//! All graded objects are kept as vectors of total-degree components so
//! every component carries its own reliable jet order: with input jets of
//! order `J`, `r^{(m)}` is reliable to order `J − m + 1` and `τ(f)^{(k)}` to
//! order `J − k`.

use std::collections::HashMap;
use std::sync::{Arc, RwLock};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::galg::{
    conj_c, delta, delta_inv, div_hbar, i_over_hbar_commutator, lambda_r, nabla, parity_p, pi_type,
    star_fiber_upto, Caps, PairingTensor, Section, TermKey,
};
use crate::geometry::{ChartModel, ConnectionKind};
use crate::jets::{multi_indices, Frame, Jet};
use crate::report::Report;
use crate::scalar::{Scalar, ScalarRepr};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Weyl,
    Wick,
}

impl Kind {
    pub fn as_str(self) -> &'static str {
        match self {
            Kind::Weyl => "weyl",
            Kind::Wick => "wick",
        }
    }
}

impl std::str::FromStr for Kind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "weyl" => Ok(Kind::Weyl),
            "wick" => Ok(Kind::Wick),
            _ => Err(Error::Parse(format!(
                "unknown kind `{s}` (expected weyl or wick)"
            ))),
        }
    }
}

/// Coefficients `c_r` of `f ∗ g = Σ ħ^r c_r` at the base point, and
/// `M_r = c_r / (i/2)^r`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "StarSeriesRepr", try_from = "StarSeriesRepr")]
pub struct StarSeries {
    pub coeffs: Vec<Scalar>,
    pub m_values: Vec<Scalar>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct Indexed {
    h: u32,
    #[serde(flatten)]
    value: ScalarRepr,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
struct StarSeriesRepr {
    coeffs: Vec<Indexed>,
    m_values: Vec<Indexed>,
}

impl From<StarSeries> for StarSeriesRepr {
    fn from(s: StarSeries) -> Self {
        let idx = |v: &[Scalar]| {
            v.iter()
                .enumerate()
                .map(|(h, c)| Indexed {
                    h: h as u32,
                    value: c.into(),
                })
                .collect()
        };
        Self {
            coeffs: idx(&s.coeffs),
            m_values: idx(&s.m_values),
        }
    }
}

impl TryFrom<StarSeriesRepr> for StarSeries {
    type Error = Error;
    fn try_from(r: StarSeriesRepr) -> Result<Self> {
        let read = |v: &[Indexed]| -> Result<Vec<Scalar>> {
            v.iter()
                .enumerate()
                .map(|(n, e)| {
                    if e.h as usize != n {
                        return Err(Error::Parse(format!("entry {n} has h = {}", e.h)));
                    }
                    Scalar::try_from(&e.value)
                })
                .collect()
        };
        Ok(Self {
            coeffs: read(&r.coeffs)?,
            m_values: read(&r.m_values)?,
        })
    }
}

impl StarSeries {
    pub fn from_coeffs(coeffs: Vec<Scalar>) -> Self {
        let m_values = coeffs
            .iter()
            .enumerate()
            .map(|(r, c)| c * &half_i().pow(-(r as i32)).expect("nonzero"))
            .collect();
        Self { coeffs, m_values }
    }
}

fn half_i() -> Scalar {
    Scalar::complex(Scalar::zero(), Scalar::ratio(1, 2))
}

/// A section of antisymmetric degree zero split by total degree.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Lift {
    parts: Vec<Section>,
}

impl Lift {
    pub fn parts(&self) -> &[Section] {
        &self.parts
    }

    /// `a^{(k)}`, or `None` beyond the computed degree.
    pub fn part(&self, k: u32) -> Option<&Section> {
        self.parts.get(k as usize)
    }

    pub fn max_degree(&self) -> u32 {
        self.parts.len() as u32 - 1
    }

    /// `a^{(k)}_s`; zero beyond the computed window is an error.
    pub fn component_s(&self, k: u32, s: u32) -> Result<Section> {
        self.part(k)
            .map(|p| p.component_s(k, s))
            .ok_or_else(|| Error::WindowExceeded(format!("lift component of degree {k}")))
    }

    pub fn map(&self, f: impl Fn(&Section) -> Section) -> Lift {
        Lift {
            parts: self.parts.iter().map(f).collect(),
        }
    }
}

/// Solved Fedosov data for one model, product kind and ħ-order.
pub struct FedosovContext {
    model: ChartModel,
    kind: Kind,
    order: u32,
    caps: Caps,
    curvature: Section,
    /// `r^{(m)}` for `m = 0..=K+2`.
    r: Vec<Section>,
    cache: RwLock<HashMap<(Jet, u32), Arc<Lift>>>,
}

impl std::fmt::Debug for FedosovContext {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FedosovContext")
            .field("model", &self.model.name())
            .field("kind", &self.kind)
            .field("order", &self.order)
            .finish()
    }
}

impl FedosovContext {
    /// Jet order needed for a star product through `ħ^order`.
    pub fn jet_order_for(order: u32) -> u32 {
        2 * order + 4
    }

    /// Total degree to which lifts are computed: `K = 2N + 1`.
    pub fn tau_degree_for(order: u32) -> u32 {
        2 * order + 1
    }

    pub fn new(model: ChartModel, kind: Kind, order: u32) -> Result<Self> {
        let need = Self::jet_order_for(order);
        if model.jet_order() < need {
            return Err(Error::BudgetUnderflow(format!(
                "model jets have order {}, order {order} needs {need}",
                model.jet_order()
            )));
        }
        if kind == Kind::Wick {
            if model.frame() != Frame::Complex {
                return Err(Error::UnsupportedFrame);
            }
            if model.connection_kind() != ConnectionKind::Kaehler {
                return Err(Error::InvalidModel(
                    "the Wick construction requires the Kähler connection".into(),
                ));
            }
        }
        let k = Self::tau_degree_for(order);
        let caps = Caps::new(k + 3);
        let curvature = model.curvature_section(caps);
        let mut ctx = Self {
            model,
            kind,
            order,
            caps,
            curvature,
            r: Vec::new(),
            cache: RwLock::new(HashMap::new()),
        };
        ctx.solve_r()?;
        Ok(ctx)
    }

    pub fn model(&self) -> &ChartModel {
        &self.model
    }

    pub fn kind(&self) -> Kind {
        self.kind
    }

    /// ħ-order `N` of the star product.
    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn tau_degree(&self) -> u32 {
        Self::tau_degree_for(self.order)
    }

    pub fn caps(&self) -> Caps {
        self.caps
    }

    pub fn dim(&self) -> usize {
        self.model.dim()
    }

    pub fn frame(&self) -> Frame {
        self.model.frame()
    }

    pub fn curvature(&self) -> &Section {
        &self.curvature
    }

    /// `r^{(m)}` for `m ≤ K + 2`.
    pub fn r(&self) -> &[Section] {
        &self.r
    }

    pub fn pairing(&self) -> &PairingTensor {
        match self.kind {
            Kind::Weyl => self.model.poisson(),
            Kind::Wick => self.model.wick_pairing().expect("checked in new"),
        }
    }

    fn zero(&self, order: u32) -> Section {
        Section::zero(self.dim(), self.frame(), self.caps, order)
    }

    fn zero_r(&self, m: usize) -> &Section {
        &self.r[m]
    }

    /// `R^{(m)} + ∇r^{(m)} + (i/ħ) Σ_{a+b=m+2} r^{(a)} ∘ r^{(b)}`, the
    /// right-hand side of the Fedosov equation in total degree `m`.
    pub fn fedosov_rhs(&self, m: u32) -> Result<Section> {
        let m = m as usize;
        let mut out = nabla(self.zero_r(m), self.model.connection())?;
        if m == 2 {
            out = out.add(&self.curvature)?;
        }
        let mut quad = self.zero(self.model.jet_order());
        for a in 3..m {
            let b = m + 2 - a;
            if b < 3 || b >= self.r.len() {
                continue;
            }
            let p = star_fiber_upto(&self.r[a], &self.r[b], self.pairing(), (m + 2) as u32)?;
            quad = quad.add(&p)?;
        }
        if !quad.is_zero() {
            out = out.add(&div_hbar(&quad)?.scale(&Scalar::i()))?;
        }
        Ok(out)
    }

    fn solve_r(&mut self) -> Result<()> {
        let top = self.tau_degree() + 2;
        let order = self.model.jet_order();
        self.r = vec![self.zero(order); top as usize + 1];
        for m in 2..top {
            let rhs = self.fedosov_rhs(m)?;
            self.r[m as usize + 1] = delta_inv(&rhs);
        }
        Ok(())
    }

    /// Add `jet · key` to `r^{(m)}`; used for sensitivity checks.
    pub fn perturb_r(&mut self, m: usize, key: TermKey, jet: Jet) {
        self.r[m].add_term(key, jet);
        self.cache.write().expect("cache lock").clear();
    }

    /// `(i/ħ) ad(r)` applied to `parts`, output degree `l`.
    fn ad_r(&self, parts: &[Section], l: u32) -> Result<Section> {
        let mut out = self.zero(self.model.jet_order());
        for m in 3..=l + 2 {
            let j = l + 2 - m;
            let (Some(rm), Some(a)) = (self.r.get(m as usize), parts.get(j as usize)) else {
                if self.r.get(m as usize).is_none()
                    && parts.get(j as usize).is_some_and(|a| !a.is_zero())
                {
                    return Err(Error::WindowExceeded(format!("r^({m}) is not computed")));
                }
                continue;
            };
            if rm.is_zero() || a.is_zero() {
                continue;
            }
            out = out.add(&i_over_hbar_commutator(rm, a, self.pairing(), l)?)?;
        }
        Ok(out)
    }

    /// `(Da)^{(l)}` for `l = 0..=max_out`, with `D = −δ + ∇ + (i/ħ)ad(r)`.
    /// Parts of `a` beyond `parts.len()` are taken as zero.
    pub fn apply_d(&self, parts: &[Section], max_out: u32) -> Result<Vec<Section>> {
        if max_out + 2 > self.tau_degree() + 2 {
            return Err(Error::WindowExceeded(format!(
                "D up to degree {max_out} needs r beyond degree {}",
                self.tau_degree() + 2
            )));
        }
        let conn = self.model.connection();
        (0..=max_out)
            .map(|l| {
                let mut out = self.ad_r(parts, l)?;
                if let Some(a) = parts.get(l as usize) {
                    out = out.add(&nabla(a, conn)?)?;
                }
                if let Some(a) = parts.get(l as usize + 1) {
                    out = out.sub(&delta(a))?;
                }
                Ok(out)
            })
            .collect()
    }

    /// `τ(f)` to total degree `K`.
    pub fn tau(&self, f: &Jet) -> Result<Arc<Lift>> {
        self.tau_to(f, self.tau_degree())
    }

    /// `τ(f)` to total degree `max_deg ≤ K + 2`.
    pub fn tau_to(&self, f: &Jet, max_deg: u32) -> Result<Arc<Lift>> {
        if f.dim() != self.dim() {
            return Err(Error::DimensionMismatch(f.dim(), self.dim()));
        }
        if max_deg > self.tau_degree() + 2 {
            return Err(Error::WindowExceeded(format!(
                "τ to degree {max_deg} needs r beyond degree {}",
                self.tau_degree() + 2
            )));
        }
        if let Some(hit) = self
            .cache
            .read()
            .expect("cache lock")
            .get(&(f.clone(), max_deg))
        {
            return Ok(hit.clone());
        }
        let conn = self.model.connection();
        let mut parts = vec![Section::function(f, self.frame(), self.caps)];
        for s in 0..max_deg {
            let mut x = nabla(&parts[s as usize], conn)?;
            x = x.add(&self.ad_r(&parts, s)?)?;
            parts.push(delta_inv(&x));
        }
        let lift = Arc::new(Lift { parts });
        self.cache
            .write()
            .expect("cache lock")
            .insert((f.clone(), max_deg), lift.clone());
        Ok(lift)
    }

    /// `c_s` of `σ(a ∘ b)` as jets, for `s ≤ n`.
    pub fn sigma_product(&self, a: &Lift, b: &Lift, n: u32) -> Result<Vec<Jet>> {
        let p = self.pairing();
        let mut out = Vec::with_capacity(n as usize + 1);
        for s in 0..=n {
            let mut c: Option<Jet> = None;
            for da in 0..=2 * s {
                let db = 2 * s - da;
                // deg_s of both factors equals the number of contractions r
                for r in 0..=da.min(db) {
                    if (da - r) % 2 != 0 || (db - r) % 2 != 0 {
                        continue;
                    }
                    let x = a.component_s(da, r)?;
                    let y = b.component_s(db, r)?;
                    if x.is_zero() || y.is_zero() {
                        continue;
                    }
                    let pref = half_i().pow(r as i32)?;
                    let prod = lambda_r(&x, &y, p, r)?;
                    for (key, j) in prod.terms() {
                        debug_assert!(key.deg_s() == 0 && key.asym == 0);
                        let j = j.scale(&pref);
                        c = Some(match c {
                            None => j,
                            Some(acc) => acc.add_truncated(&j),
                        });
                    }
                    if c.is_none() {
                        c = Some(Jet::zero(self.dim(), prod.jet_order()));
                    }
                }
            }
            out.push(c.unwrap_or_else(|| Jet::zero(self.dim(), a.parts[0].jet_order())));
        }
        Ok(out)
    }

    /// `c_0, …, c_n` of `f ∗ g` as jets around the base point. Inputs are
    /// truncated to order `2n`, so `c_s` is reliable to order `2n − 2s`.
    pub fn star_jets(&self, f: &Jet, g: &Jet, n: u32) -> Result<Vec<Jet>> {
        self.star_jets_full(&f.truncate(2 * n), &g.truncate(2 * n), n)
    }

    /// As [`Self::star_jets`] without truncating the inputs.
    pub fn star_jets_full(&self, f: &Jet, g: &Jet, n: u32) -> Result<Vec<Jet>> {
        let tf = self.tau_to(f, 2 * n)?;
        let tg = self.tau_to(g, 2 * n)?;
        self.sigma_product(&tf, &tg, n)
    }

    /// `f ∗ g` through `ħ^N` at the base point.
    pub fn star(&self, f: &Jet, g: &Jet) -> Result<StarSeries> {
        self.star_upto(f, g, self.order)
    }

    pub fn star_upto(&self, f: &Jet, g: &Jet, n: u32) -> Result<StarSeries> {
        if n > self.order {
            return Err(Error::WindowExceeded(format!(
                "ħ^{n} requested from a context of order {}",
                self.order
            )));
        }
        let c = self.star_jets(f, g, n)?;
        Ok(StarSeries::from_coeffs(c.iter().map(Jet::eval0).collect()))
    }

    /// `M_s(f, g)(x₀)` from the closed formula in homogeneous lift
    /// components: for Weyl type
    /// `Σ_{k ≤ (s−1)/2} Σ_{l ≤ k} (−4)^k Λ^{(s−2k)}(τ(f)^{(s−2k+4l)}_{s−2k}, τ(g)^{(s+2k−4l)}_{s−2k})`,
    /// for Wick type
    /// `Σ_{k ≤ s} Σ_{l ≤ k} (−2i)^k Λ′^{(s−k)}(τ′(f)^{(s−k+2l)}_{s−k}, τ′(g)^{(s+k−2l)}_{s−k})`.
    pub fn m_via_tau(&self, f: &Jet, g: &Jet, s: u32) -> Result<Scalar> {
        if s > self.order {
            return Err(Error::WindowExceeded(format!(
                "M_{s} beyond order {}",
                self.order
            )));
        }
        let tf = self.tau(f)?;
        let tg = self.tau(g)?;
        let p = self.pairing();
        let mut total = Scalar::zero();
        let mut add = |r: u32, da: i64, db: i64, weight: Scalar| -> Result<()> {
            if da < 0 || db < 0 {
                return Ok(());
            }
            let x = tf.component_s(da as u32, r)?;
            let y = tg.component_s(db as u32, r)?;
            for (_, j) in lambda_r(&x, &y, p, r)?.terms() {
                total += &(&weight * &j.eval0());
            }
            Ok(())
        };
        let s_i = s as i64;
        match self.kind {
            Kind::Weyl => {
                if s == 0 {
                    return Ok(&f.eval0() * &g.eval0());
                }
                for k in 0..=(s_i - 1) / 2 {
                    let w = Scalar::from_int(-4).pow(k as i32)?;
                    for l in 0..=k {
                        add(
                            (s_i - 2 * k) as u32,
                            s_i - 2 * k + 4 * l,
                            s_i + 2 * k - 4 * l,
                            w.clone(),
                        )?;
                    }
                }
            }
            Kind::Wick => {
                let m2i = Scalar::complex(Scalar::zero(), Scalar::from_int(-2));
                for k in 0..=s_i {
                    let w = m2i.pow(k as i32)?;
                    for l in 0..=k {
                        add(
                            (s_i - k) as u32,
                            s_i - k + 2 * l,
                            s_i + k - 2 * l,
                            w.clone(),
                        )?;
                    }
                }
            }
        }
        Ok(total)
    }

    /// `{f, g} = Λ^{ij} ∂_i f ∂_j g` at the base point.
    pub fn poisson_bracket(&self, f: &Jet, g: &Jet) -> Result<Scalar> {
        self.contract_first(self.model.poisson(), f, g, |_, _| true)
    }

    fn contract_first(
        &self,
        p: &PairingTensor,
        f: &Jet,
        g: &Jet,
        keep: impl Fn(usize, usize) -> bool,
    ) -> Result<Scalar> {
        let d = self.dim();
        let mut acc = Scalar::zero();
        for i in 0..d {
            let fi = f.partial(i)?.eval0();
            if fi.is_zero() {
                continue;
            }
            for j in 0..d {
                if !keep(i, j) {
                    continue;
                }
                let e = p.entry(i, j).eval0();
                if e.is_zero() {
                    continue;
                }
                acc += &(&(&e * &fi) * &g.partial(j)?.eval0());
            }
        }
        Ok(acc)
    }

    /// Exact checks of the Fedosov equation and the structure of `r`.
    pub fn verify_flatness(&self) -> Report {
        let mut rep = Report::new(format!("flatness/{}", self.kind.as_str()));
        for m in 2..=self.tau_degree() + 1 {
            match self.fedosov_rhs(m) {
                Ok(rhs) => match rhs.sub(&delta(&self.r[m as usize + 1])) {
                    Ok(res) => rep.section_zero(format!("fedosov_equation_degree_{m}"), &res),
                    Err(e) => rep.error(format!("fedosov_equation_degree_{m}"), &e),
                },
                Err(e) => rep.error(format!("fedosov_equation_degree_{m}"), &e),
            }
        }
        rep
    }

    /// Structural properties of `r`: form degree one, `δ⁻¹r = 0`, lowest
    /// degree three, and the reality/type properties of the kind.
    pub fn verify_r(&self) -> Report {
        let mut rep = Report::new(format!("r/{}", self.kind.as_str()));
        let mut bad_form = Scalar::zero();
        let mut low = Scalar::zero();
        for (m, part) in self.r.iter().enumerate() {
            for (key, j) in part.terms() {
                if key.deg_a() != 1 && bad_form.is_zero() {
                    bad_form = j
                        .derivatives()
                        .next()
                        .map(|(_, c)| c.clone())
                        .unwrap_or_default();
                }
                if m < 3 && low.is_zero() {
                    low = j
                        .derivatives()
                        .next()
                        .map(|(_, c)| c.clone())
                        .unwrap_or_default();
                }
            }
            rep.section_zero(format!("delta_inv_r_degree_{m}"), &delta_inv(part));
            match self.kind {
                Kind::Weyl => {
                    rep.section_zero(
                        format!("conj_r_degree_{m}"),
                        &conj_c(part).sub(part).expect("same shape"),
                    );
                    rep.section_zero(
                        format!("parity_r_degree_{m}"),
                        &parity_p(part).sub(part).expect("same shape"),
                    );
                }
                Kind::Wick => {
                    rep.section_zero(
                        format!("conj_r_degree_{m}"),
                        &conj_c(part).sub(part).expect("same shape"),
                    );
                    for p in 0..=m as u32 {
                        for (a, b) in [(0, p), (p, 0)] {
                            match pi_type(part, a, b) {
                                Ok(s) => rep.section_zero(format!("pi_{a}_{b}_r_degree_{m}"), &s),
                                Err(e) => rep.error(format!("pi_{a}_{b}_r_degree_{m}"), &e),
                            }
                        }
                    }
                }
            }
        }
        rep.scalar_zero("r_form_degree_one", bad_form);
        rep.scalar_zero("r_lowest_degree_three", low);
        let r3 = delta_inv(&self.curvature);
        rep.section_zero(
            "r3_equals_delta_inv_R",
            &r3.sub(&self.r[3]).expect("same shape"),
        );
        rep
    }

    /// `D(D a) = 0` on each sample, within the window `K − 1`.
    pub fn verify_d_squared(&self, samples: &[Vec<Section>]) -> Report {
        let mut rep = Report::new(format!("d_squared/{}", self.kind.as_str()));
        let top = self.tau_degree() - 1;
        for (n, a) in samples.iter().enumerate() {
            let res = self
                .apply_d(a, top + 1)
                .and_then(|da| self.apply_d(&da, top));
            match res {
                Ok(dda) => {
                    for (l, part) in dda.iter().enumerate() {
                        rep.section_zero(format!("sample_{n}_degree_{l}"), part);
                    }
                }
                Err(e) => rep.error(format!("sample_{n}"), &e),
            }
        }
        rep
    }

    /// Properties of the lift of `f`.
    pub fn verify_tau(&self, f: &Jet) -> Report {
        let mut rep = Report::new(format!("tau/{}", self.kind.as_str()));
        if let Err(e) = self.verify_tau_inner(f, &mut rep) {
            rep.error("tau", &e);
        }
        rep
    }

    fn verify_tau_inner(&self, f: &Jet, rep: &mut Report) -> Result<()> {
        let k = self.tau_degree();
        let t = self.tau(f)?;
        let sigma: Vec<Jet> = t
            .parts
            .iter()
            .enumerate()
            .fold(Vec::new(), |mut acc, (deg, p)| {
                for (key, j) in p.terms() {
                    if key.deg_s() == 0 && key.asym == 0 {
                        acc.push(if deg == 0 {
                            j.sub_truncated(f)
                        } else {
                            j.clone()
                        });
                    }
                }
                if deg == 0 && p.is_zero() && !f.is_zero() {
                    acc.push(f.neg());
                }
                acc
            });
        let first = sigma
            .into_iter()
            .find(|j| !j.is_zero())
            .unwrap_or(Jet::zero(self.dim(), 0));
        rep.jet_zero("sigma_tau_is_identity", &first);
        let mut form = Scalar::zero();
        for p in &t.parts {
            if p.terms().any(|(key, _)| key.deg_a() != 0) {
                form = Scalar::one();
            }
        }
        rep.scalar_zero("tau_form_degree_zero", form);
        let dt = self.apply_d(&t.parts, k - 1)?;
        for (l, part) in dt.iter().enumerate() {
            rep.section_zero(format!("d_tau_degree_{l}"), part);
        }
        let cf = f.conjugate(self.frame());
        let tc = self.tau(&cf)?;
        for (deg, (a, b)) in t.parts.iter().zip(&tc.parts).enumerate() {
            rep.section_zero(format!("conj_tau_degree_{deg}"), &conj_c(a).sub(b)?);
            if self.kind == Kind::Weyl {
                rep.section_zero(format!("parity_tau_degree_{deg}"), &parity_p(a).sub(a)?);
            }
        }
        Ok(())
    }

    /// Star-product axioms on a triple, through `ħ^N`.
    pub fn verify_axioms(&self, f: &Jet, g: &Jet, h: &Jet) -> Report {
        let mut rep = Report::new(format!("axioms/{}", self.kind.as_str()));
        if let Err(e) = self.verify_axioms_inner(f, g, h, &mut rep) {
            rep.error("axioms", &e);
        }
        rep
    }

    /// `Σ_{u+t=s} c_t(c_u(f,g), h) − c_t(f, c_u(g,h))` at the base point.
    pub fn associativity_defects(&self, f: &Jet, g: &Jet, h: &Jet) -> Result<Vec<Scalar>> {
        let n = self.order;
        let fg = self.star_jets(f, g, n)?;
        let gh = self.star_jets(g, h, n)?;
        let mut out = vec![Scalar::zero(); n as usize + 1];
        for u in 0..=n {
            let left = self.star_upto(&fg[u as usize], h, n - u)?;
            let right = self.star_upto(f, &gh[u as usize], n - u)?;
            for t in 0..=(n - u) {
                let s = (t + u) as usize;
                out[s] += &left.coeffs[t as usize];
                out[s] -= &right.coeffs[t as usize];
            }
        }
        Ok(out)
    }

    fn verify_axioms_inner(&self, f: &Jet, g: &Jet, h: &Jet, rep: &mut Report) -> Result<()> {
        let n = self.order;
        let d = self.dim();
        for (s, defect) in self.associativity_defects(f, g, h)?.into_iter().enumerate() {
            rep.scalar_zero(format!("associativity_hbar_{s}"), defect);
        }
        let fg = self.star(f, g)?;
        rep.scalar_zero(
            "m0_is_product",
            &fg.m_values[0] - &(&f.eval0() * &g.eval0()),
        );
        let one = Jet::one(d, f.order());
        let f1 = self.star(f, &one)?;
        let one_f = self.star(&one, f)?;
        for t in 1..=n as usize {
            rep.scalar_zero(format!("unit_right_m{t}"), f1.m_values[t].clone());
            rep.scalar_zero(format!("unit_left_m{t}"), one_f.m_values[t].clone());
        }
        let frame = self.frame();
        let conj = self.star(&g.conjugate(frame), &f.conjugate(frame))?;
        for t in 0..=n as usize {
            // conj(M_t(f,g)) = (−1)^t M_t(ḡ, f̄)
            let mut rhs = conj.m_values[t].clone();
            if t % 2 == 1 {
                rhs = -rhs;
            }
            rep.scalar_zero(format!("conjugation_m{t}"), &fg.m_values[t].conj() - &rhs);
        }
        let gf = self.star(g, f)?;
        let bracket = self.poisson_bracket(f, g)?;
        if n >= 1 {
            let antisym = &fg.m_values[1] - &gf.m_values[1];
            rep.scalar_zero(
                "m1_antisymmetrization_is_twice_poisson",
                &antisym - &bracket.mul_int(2),
            );
            rep.info(
                "m1_antisymmetrization_minus_poisson",
                &antisym - &bracket,
                "nonzero by the factor-two normalization of M_1 against the bracket",
            );
        }
        match self.kind {
            Kind::Weyl => {
                for s in 0..=n as usize {
                    let mut rhs = gf.m_values[s].clone();
                    if s % 2 == 1 {
                        rhs = -rhs;
                    }
                    rep.scalar_zero(format!("weyl_symmetry_m{s}"), &fg.m_values[s] - &rhs);
                }
                let fr = f.add_truncated(&f.conjugate(frame));
                let gr = g.add_truncated(&g.conjugate(frame));
                let real = self.star(&fr, &gr)?;
                for s in 0..=n as usize {
                    let m = &real.m_values[s];
                    rep.scalar_zero(format!("weyl_reality_m{s}"), Scalar::real(m.im().clone()));
                }
                if n >= 1 {
                    rep.scalar_zero("weyl_first_order", &fg.m_values[1] - &bracket);
                }
            }
            Kind::Wick => {
                if n >= 1 {
                    let nn = self.model.n();
                    // iΛ(∂f, ∂̄g)
                    let display =
                        self.contract_first(self.model.poisson(), f, g, |i, j| i < nn && j >= nn)?;
                    let c1 = &fg.coeffs[1] - &(&Scalar::i() * &display);
                    rep.scalar_zero("wick_first_order_display", c1);
                }
            }
        }
        Ok(())
    }

    /// `m_via_tau` against the `σ(τ ∘ τ)` pipeline for `s ≤ N`.
    pub fn verify_formula(&self, f: &Jet, g: &Jet) -> Report {
        let mut rep = Report::new(format!("m_formula/{}", self.kind.as_str()));
        match self.star(f, g) {
            Ok(series) => {
                for s in 0..=self.order {
                    match self.m_via_tau(f, g, s) {
                        Ok(m) => {
                            rep.scalar_zero(format!("m{s}"), &m - &series.m_values[s as usize])
                        }
                        Err(e) => rep.error(format!("m{s}"), &e),
                    }
                }
            }
            Err(e) => rep.error("star", &e),
        }
        rep
    }

    /// Wick-type properties: absorption of holomorphic right and
    /// antiholomorphic left factors, vanishing projections of the lifts,
    /// and independence of `M′_r(f, g)(x₀)` from non-holomorphic jets of
    /// `f` and non-antiholomorphic jets of `g`.
    pub fn verify_wick_type(&self, h: &Jet, f_holo: &Jet, g_anti: &Jet) -> Report {
        let mut rep = Report::new("wick_type");
        if let Err(e) = self.verify_wick_type_inner(h, f_holo, g_anti, &mut rep) {
            rep.error("wick_type", &e);
        }
        rep
    }

    fn verify_wick_type_inner(&self, h: &Jet, f: &Jet, g: &Jet, rep: &mut Report) -> Result<()> {
        if self.kind != Kind::Wick {
            return Err(Error::UnsupportedFrame);
        }
        rep.flag("input_holomorphic", f.is_holomorphic(), "");
        rep.flag("input_antiholomorphic", g.is_antiholomorphic(), "");
        let n = self.order;
        let hf = self.star_jets_full(h, f, n)?;
        let gh = self.star_jets_full(g, h, n)?;
        rep.jet_zero("h_star_f_m0", &hf[0].sub_truncated(&h.mul_truncated(f)));
        rep.jet_zero("g_star_h_m0", &gh[0].sub_truncated(&g.mul_truncated(h)));
        for s in 1..=n as usize {
            rep.jet_zero(format!("h_star_f_hbar_{s}"), &hf[s]);
            rep.jet_zero(format!("g_star_h_hbar_{s}"), &gh[s]);
        }
        let nn = self.model.n() as u32;
        let tf = self.tau(f)?;
        let tg = self.tau(g)?;
        for (deg, (a, b)) in tf.parts.iter().zip(&tg.parts).enumerate() {
            for p in 1..=deg as u32 {
                rep.section_zero(
                    format!("pi_0_{p}_tau_holomorphic_degree_{deg}"),
                    &pi_type(a, 0, p)?,
                );
                rep.section_zero(
                    format!("pi_{p}_0_tau_antiholomorphic_degree_{deg}"),
                    &pi_type(b, p, 0)?,
                );
            }
        }
        // perturbations with an antiholomorphic (resp. holomorphic) factor
        let d = self.dim();
        let base = self.star(h, g)?;
        let order = h.order().min(g.order());
        for (tag, anti, holo) in [("a", 1u8, 0u8), ("b", 1, 1), ("c", 1, 3), ("d", 2, 1)] {
            for k in 0..nn as usize {
                let mut alpha = vec![0u8; d];
                alpha[nn as usize + k] = anti;
                alpha[k] = holo;
                let m = Jet::monomial(d, order, &alpha, Scalar::one());
                let s1 = self.star(&h.add_truncated(&m), g)?;
                for r in 0..=n as usize {
                    rep.scalar_zero(
                        format!("first_argument_type_1_0_{tag}{k}_m{r}"),
                        &s1.m_values[r] - &base.m_values[r],
                    );
                }
                let mut beta = vec![0u8; d];
                beta[k] = anti;
                beta[nn as usize + k] = holo;
                let m = Jet::monomial(d, order, &beta, Scalar::one());
                let s2 = self.star(h, &g.add_truncated(&m))?;
                for r in 0..=n as usize {
                    rep.scalar_zero(
                        format!("second_argument_type_0_1_{tag}{k}_m{r}"),
                        &s2.m_values[r] - &base.m_values[r],
                    );
                }
            }
        }
        Ok(())
    }

    /// Jet-locality: `M_s` has order `s` in each argument, and the lift
    /// components have the orders of their differential operators.
    pub fn verify_order(&self, f: &Jet, g: &Jet, s_max: u32) -> Report {
        let mut rep = Report::new(format!("order/{}", self.kind.as_str()));
        if let Err(e) = self.verify_order_inner(f, g, s_max, &mut rep) {
            rep.error("order", &e);
        }
        rep
    }

    /// `(k, deg_s, operator order)` for the lift components up to `kmax`.
    fn component_orders(&self, kmax: u32) -> Vec<(u32, u32, u32)> {
        let mut out = vec![(0, 0, 0)];
        for k in 1..=kmax {
            match self.kind {
                Kind::Weyl => {
                    for l in 0..=k / 4 {
                        if k > 4 * l {
                            out.push((k, k - 4 * l, k - 2 * l));
                        }
                    }
                }
                Kind::Wick => {
                    for l in 0..=k / 2 {
                        if k > 2 * l {
                            out.push((k, k - 2 * l, k - l));
                        }
                    }
                }
            }
        }
        out
    }

    fn verify_order_inner(&self, f: &Jet, g: &Jet, s_max: u32, rep: &mut Report) -> Result<()> {
        let s_max = s_max.min(self.order);
        let d = self.dim();
        let order = f.order().min(g.order());
        let base = self.star_upto(f, g, s_max)?;
        for s in 0..=s_max {
            for alpha in multi_indices(d, s + 1)
                .into_iter()
                .filter(|a| a.iter().map(|&x| x as u32).sum::<u32>() == s + 1)
            {
                let m = Jet::monomial(d, order, &alpha, Scalar::one());
                // keep the perturbation visible to the lifts
                let keep = 2 * s + 1;
                let value = |a: &Jet, b: &Jet| -> Result<Scalar> {
                    let c = self.star_jets_full(&a.truncate(keep), &b.truncate(keep), s)?;
                    Ok(
                        StarSeries::from_coeffs(c.iter().map(Jet::eval0).collect()).m_values
                            [s as usize]
                            .clone(),
                    )
                };
                let left = value(&f.add_truncated(&m), g)?;
                let right = value(f, &g.add_truncated(&m))?;
                let tag: String = alpha.iter().map(|a| a.to_string()).collect();
                rep.scalar_zero(
                    format!("m{s}_first_argument_{tag}"),
                    &left - &base.m_values[s as usize],
                );
                rep.scalar_zero(
                    format!("m{s}_second_argument_{tag}"),
                    &right - &base.m_values[s as usize],
                );
            }
        }
        let kmax = (2 * s_max).min(self.tau_degree());
        let comps = self.component_orders(kmax);
        let f = &f.truncate(kmax + 1);
        let t = self.tau_to(f, kmax)?;
        let at0 = |lift: &Lift, k: u32, s: u32| -> Result<Section> {
            let c = lift.component_s(k, s)?;
            Ok(c.with_jet_order(0))
        };
        let max_op = comps.iter().map(|c| c.2).max().unwrap_or(0);
        for deg in 1..=max_op + 1 {
            for alpha in multi_indices(d, deg)
                .into_iter()
                .filter(|a| a.iter().map(|&x| x as u32).sum::<u32>() == deg)
            {
                let m = Jet::monomial(d, f.order(), &alpha, Scalar::one());
                let tm = self.tau_to(&f.add_truncated(&m), kmax)?;
                let tag: String = alpha.iter().map(|a| a.to_string()).collect();
                for &(k, s, op) in comps.iter().filter(|c| c.2 < deg) {
                    rep.section_zero(
                        format!("tau_{k}_{s}_order_{op}_perturbation_{tag}"),
                        &at0(&tm, k, s)?.sub(&at0(&t, k, s)?)?,
                    );
                }
            }
        }
        Ok(())
    }

    /// Deterministic sample sections for `D² = 0` built from `f` and `g`.
    pub fn d_squared_samples(&self, f: &Jet, g: &Jet) -> Vec<Vec<Section>> {
        let d = self.dim();
        let mut samples = Vec::new();
        for (n, coef) in [f, g].into_iter().enumerate() {
            let mut parts = vec![self.zero(coef.order()); 4];
            let mut sym = vec![0u8; d];
            sym[n % d] = 1;
            parts[1].add_term(TermKey::new(0, &sym, &[]).0, coef.clone());
            sym[(n + 1) % d] += 1;
            parts[2].add_term(TermKey::new(0, &sym, &[(n + 1) % d]).0, coef.clone());
            parts[2].add_term(TermKey::new(1, &vec![0; d], &[n % d]).0, coef.neg());
            sym[0] += 1;
            parts[3].add_term(TermKey::new(0, &sym, &[]).0, coef.clone());
            samples.push(parts);
        }
        samples
    }

    /// The full suite for this context on the given inputs.
    pub fn verify_suite(&self, inputs: &SuiteInputs) -> Report {
        let mut rep = Report::new(format!("{}/{}", self.model.name(), self.kind.as_str()));
        rep.extend(self.verify_flatness());
        rep.extend(self.verify_r());
        rep.extend(self.verify_d_squared(&self.d_squared_samples(&inputs.f, &inputs.g)));
        rep.extend(self.verify_tau(&inputs.f));
        rep.extend(self.verify_axioms(&inputs.f, &inputs.g, &inputs.h));
        rep.extend(self.verify_formula(&inputs.f, &inputs.g));
        rep.extend(self.verify_order(&inputs.f, &inputs.g, self.order.min(inputs.order_checks)));
        if self.kind == Kind::Wick {
            if let (Some(fh), Some(ga)) = (&inputs.holomorphic, &inputs.antiholomorphic) {
                rep.extend(self.verify_wick_type(&inputs.h, fh, ga));
            }
        }
        rep
    }
}

/// Functions driving [`FedosovContext::verify_suite`].
#[derive(Clone, Debug)]
pub struct SuiteInputs {
    pub f: Jet,
    pub g: Jet,
    pub h: Jet,
    pub holomorphic: Option<Jet>,
    pub antiholomorphic: Option<Jet>,
    /// Highest `s` for the jet-locality checks.
    pub order_checks: u32,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{
        coordinate_jets, flat_kaehler, flat_symplectic, fubini_study, poincare_disc,
    };

    fn q(p: i64, r: i64) -> Scalar {
        Scalar::ratio(p, r)
    }

    fn z0() -> Vec<Scalar> {
        vec![Scalar::complex(q(1, 3), q(1, 4))]
    }

    fn fs_ctx(kind: Kind, n: u32) -> FedosovContext {
        let j = FedosovContext::jet_order_for(n);
        FedosovContext::new(fubini_study(1, &z0(), &q(3, 2), j).unwrap(), kind, n).unwrap()
    }

    #[test]
    fn flat_r_vanishes_and_moyal_first_order() {
        let base = [q(1, 2), q(-1, 3)];
        let m = flat_symplectic(1, &base, FedosovContext::jet_order_for(3)).unwrap();
        let ctx = FedosovContext::new(m, Kind::Weyl, 3).unwrap();
        assert!(ctx.r().iter().all(Section::is_zero));
        let x = coordinate_jets(&base, ctx.model().jet_order());
        let s = ctx.star(&x[0], &x[1]).unwrap();
        assert_eq!(s.coeffs[0], &base[0] * &base[1]);
        assert_eq!(s.coeffs[1], half_i());
        assert!(s.coeffs[2..].iter().all(Scalar::is_zero));
    }

    #[test]
    fn flat_tau_is_taylor_expansion() {
        let base = [Scalar::zero(), Scalar::zero()];
        let m = flat_symplectic(1, &base, 8).unwrap();
        let ctx = FedosovContext::new(m, Kind::Weyl, 2).unwrap();
        let x = coordinate_jets(&base, 8);
        let f = x[0]
            .mul_truncated(&x[0])
            .mul_truncated(&x[1])
            .add_truncated(&x[1]);
        let t = ctx.tau(&f).unwrap();
        for k in 0..=ctx.tau_degree() {
            let part = t.part(k).unwrap();
            for (key, j) in part.terms() {
                assert_eq!(key.h, 0);
                let alpha = key.sym.as_slice();
                // coefficient of y^α is ∂^α f / α! as a jet
                let mut d = f.clone();
                for (i, &a) in alpha.iter().enumerate() {
                    for _ in 0..a {
                        d = d.partial(i).unwrap();
                    }
                }
                let fact = crate::jets::multi_factorial(alpha);
                let expect = d.scale(&Scalar::from_bigint(fact).inv().unwrap());
                assert_eq!(j, &expect.truncate(j.order()));
            }
        }
    }

    #[test]
    fn wick_flat_normal_order() {
        let m = flat_kaehler(1, &[q(1, 2)], FedosovContext::jet_order_for(2)).unwrap();
        let ctx = FedosovContext::new(m, Kind::Wick, 2).unwrap();
        let z = ctx.model().coordinates();
        let a = ctx.star(&z[0], &z[1]).unwrap();
        let b = ctx.star(&z[1], &z[0]).unwrap();
        assert_eq!(&a.coeffs[1] - &b.coeffs[1], Scalar::from_int(2));
        assert!(b.coeffs[1..].iter().all(Scalar::is_zero));
    }

    #[test]
    fn fs_flatness_both_kinds() {
        for kind in [Kind::Weyl, Kind::Wick] {
            let ctx = fs_ctx(kind, 2);
            let rep = ctx.verify_flatness();
            assert!(rep.passed(), "{rep}");
            let rep = ctx.verify_r();
            assert!(rep.passed(), "{rep}");
            assert!(!ctx.r()[3].is_zero());
        }
    }

    #[test]
    fn fs_suite_order_two() {
        for kind in [Kind::Weyl, Kind::Wick] {
            let ctx = fs_ctx(kind, 2);
            let z = ctx.model().coordinates();
            let j = ctx.model().jet_order();
            let f = z[0].mul_truncated(&z[1]).add_truncated(&z[0]);
            let g = Jet::one(2, j)
                .add_truncated(&z[0].mul_truncated(&z[0]))
                .invert()
                .unwrap();
            let h = z[1]
                .add_truncated(&Jet::constant(2, j, q(2, 1)))
                .mul_truncated(&z[1]);
            let inputs = SuiteInputs {
                f,
                g,
                h,
                holomorphic: Some(z[0].mul_truncated(&z[0])),
                antiholomorphic: Some(z[1].add_truncated(&z[1].mul_truncated(&z[1]))),
                order_checks: 2,
            };
            let rep = ctx.verify_suite(&inputs);
            assert!(rep.passed(), "{rep}");
        }
    }

    #[test]
    fn disc_flatness() {
        let j = FedosovContext::jet_order_for(2);
        let m = poincare_disc(&z0(), &Scalar::one(), j).unwrap();
        let ctx = FedosovContext::new(m, Kind::Wick, 2).unwrap();
        assert!(ctx.verify_flatness().passed());
    }

    #[test]
    fn perturbed_r_breaks_associativity() {
        let mut ctx = fs_ctx(Kind::Weyl, 3);
        let z = ctx.model().coordinates();
        let key = TermKey::new(0, &[2, 1], &[1]).0;
        ctx.perturb_r(3, key, z[0].mul_truncated(&z[1]).scale(&q(1, 5)));
        let d = ctx
            .associativity_defects(&z[0], &z[1], &z[0].mul_truncated(&z[1]))
            .unwrap();
        assert!(d.iter().any(|x| !x.is_zero()));
    }

    #[test]
    fn star_series_repr_round_trip() {
        let s = StarSeries::from_coeffs(vec![q(1, 2), Scalar::complex(q(0, 1), q(-3, 7))]);
        let c1 = Scalar::complex(q(0, 1), q(-3, 7));
        assert_eq!(s.m_values[1], &c1 * &Scalar::complex(q(0, 1), q(-2, 1)));
        let repr: StarSeriesRepr = s.clone().into();
        assert_eq!(StarSeries::try_from(repr).unwrap(), s);
    }
}
