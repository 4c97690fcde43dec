//! Acceptance suite: one PASS/FAIL line per criterion, exact equality
//! throughout.

use std::collections::BTreeMap;
use std::time::Instant;

use fedosov_core::fedosov::{FedosovContext, Kind};
use fedosov_core::galg::{s_inv, s_op, star_fiber, Caps, Section, TermKey};
use fedosov_core::geometry::{
    coordinate_jets, flat_kaehler, flat_symplectic, fubini_study, poincare_disc, ChartModel,
};
use fedosov_core::{Frame, Jet, Scalar};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn q(p: i64, r: i64) -> Scalar {
    Scalar::ratio(p, r)
}

fn c(a: (i64, i64), b: (i64, i64)) -> Scalar {
    Scalar::complex(q(a.0, a.1), q(b.0, b.1))
}

/// Polynomials in two variables with exact coefficients; the oracle side
/// never touches jets or sections.
#[derive(Clone, Debug, Default)]
struct Poly(BTreeMap<(u32, u32), Scalar>);

impl Poly {
    fn random(rng: &mut impl Rng, max_deg: u32, complex: bool) -> Poly {
        let mut p = Poly::default();
        for _ in 0..rng.gen_range(2..=5) {
            let a = rng.gen_range(0..=max_deg);
            let b = rng.gen_range(0..=max_deg - a);
            let im = if complex { rng.gen_range(-3..=3) } else { 0 };
            let v = c(
                (rng.gen_range(-4..=4), rng.gen_range(1..=3)),
                (im, rng.gen_range(1..=3)),
            );
            let e = p.0.entry((a, b)).or_default();
            *e += &v;
        }
        p
    }

    fn monomial(a: u32, b: u32) -> Poly {
        Poly([((a, b), Scalar::one())].into_iter().collect())
    }

    fn partial(&self, var: usize) -> Poly {
        let mut out = Poly::default();
        for (&(a, b), v) in &self.0 {
            let (k, key) = if var == 0 {
                (a, (a.wrapping_sub(1), b))
            } else {
                (b, (a, b.wrapping_sub(1)))
            };
            if k > 0 {
                *out.0.entry(key).or_default() += &v.mul_int(k as i64);
            }
        }
        out
    }

    fn partial_n(&self, a: u32, b: u32) -> Poly {
        let mut p = self.clone();
        for _ in 0..a {
            p = p.partial(0);
        }
        for _ in 0..b {
            p = p.partial(1);
        }
        p
    }

    fn eval(&self, x: &[Scalar; 2]) -> Scalar {
        let mut acc = Scalar::zero();
        for (&(a, b), v) in &self.0 {
            let term = v * &(&x[0].pow(a as i32).unwrap() * &x[1].pow(b as i32).unwrap());
            acc += &term;
        }
        acc
    }

    fn to_jet(&self, base: &[Scalar], order: u32) -> Jet {
        let x = coordinate_jets(base, order);
        let mut acc = Jet::zero(2, order);
        for (&(a, b), v) in &self.0 {
            let mut t = Jet::constant(2, order, v.clone());
            for _ in 0..a {
                t = t.mul_truncated(&x[0]);
            }
            for _ in 0..b {
                t = t.mul_truncated(&x[1]);
            }
            acc = acc.add_truncated(&t);
        }
        acc
    }
}

fn binom(n: u32, k: u32) -> i64 {
    (0..k).fold(1i64, |acc, i| acc * (n - i) as i64 / (i + 1) as i64)
}

fn fact(n: u32) -> i64 {
    (1..=n as i64).product()
}

fn random_base(rng: &mut impl Rng) -> Scalar {
    c(
        (rng.gen_range(-3..=3), rng.gen_range(2..=5)),
        (rng.gen_range(-3..=3), rng.gen_range(2..=5)),
    )
}

/// A random rational function `p / (1 + t)` with `t` vanishing at the base
/// point, as a jet.
fn random_rational(rng: &mut impl Rng, base: &[Scalar], order: u32) -> Jet {
    let num = Poly::random(rng, 3, true).to_jet(base, order);
    let den = Poly::random(rng, 2, true).to_jet(base, order);
    let shift = Jet::constant(2, order, &Scalar::from_int(2) - &den.eval0());
    // den − den(x₀) + 2 has value 2 at the base point
    num.mul_truncated(&den.add_truncated(&shift).invert().unwrap())
}

fn fs(base: &Scalar, n: u32) -> ChartModel {
    fubini_study(
        1,
        std::slice::from_ref(base),
        &q(3, 2),
        FedosovContext::jet_order_for(n),
    )
    .unwrap()
}

fn ctx(model: ChartModel, kind: Kind, n: u32) -> FedosovContext {
    FedosovContext::new(model, kind, n).unwrap()
}

struct Outcome {
    passed: bool,
    notes: Vec<String>,
}

impl Outcome {
    fn new() -> Self {
        Self {
            passed: true,
            notes: Vec::new(),
        }
    }

    fn check(&mut self, ok: bool, what: impl FnOnce() -> String) {
        if !ok {
            self.passed = false;
            if self.notes.len() < 5 {
                self.notes.push(what());
            }
        }
    }

    fn report(&mut self, rep: &fedosov_core::report::Report) {
        for f in rep.failures() {
            self.check(false, || {
                format!("{}/{} defect {} {}", rep.title, f.name, f.defect, f.detail)
            });
        }
    }
}

fn moyal(rng: &mut ChaCha8Rng) -> Outcome {
    let mut out = Outcome::new();
    let n = 6;
    for _ in 0..20 {
        let base = [
            q(rng.gen_range(-5..=5), rng.gen_range(1..=4)),
            q(rng.gen_range(-5..=5), rng.gen_range(1..=4)),
        ];
        let j = FedosovContext::jet_order_for(n);
        let cx = ctx(flat_symplectic(1, &base, j).unwrap(), Kind::Weyl, n);
        let f = Poly::random(rng, 4, true);
        let g = Poly::random(rng, 4, true);
        let got = cx.star(&f.to_jet(&base, j), &g.to_jet(&base, j)).unwrap();
        // c_r = (i/2)^r / r! Σ_k C(r,k) (−1)^{r−k} ∂₁^k∂₂^{r−k} f · ∂₁^{r−k}∂₂^k g
        for r in 0..=n {
            let mut acc = Scalar::zero();
            for k in 0..=r {
                let sign = if (r - k) % 2 == 0 { 1 } else { -1 };
                let t = &f.partial_n(k, r - k).eval(&base) * &g.partial_n(r - k, k).eval(&base);
                acc += &t.mul_int(sign * binom(r, k));
            }
            let expect = &acc
                * &(&Scalar::complex(Scalar::zero(), q(1, 2))
                    .pow(r as i32)
                    .unwrap()
                    * &q(1, fact(r)));
            out.check(got.coeffs[r as usize] == expect, || {
                format!("c_{r}: {} vs Moyal {}", got.coeffs[r as usize], expect)
            });
        }
    }
    out
}

fn normal_order(rng: &mut ChaCha8Rng) -> Outcome {
    let mut out = Outcome::new();
    let n = 6;
    for trial in 0..8 {
        let z0 = random_base(rng);
        let base = [z0.clone(), z0.conj()];
        let j = FedosovContext::jet_order_for(n);
        let cx = ctx(flat_kaehler(1, &[z0], j).unwrap(), Kind::Wick, n);
        let z = coordinate_jets(&base, j);
        let a = cx.star(&z[0], &z[1]).unwrap();
        let b = cx.star(&z[1], &z[0]).unwrap();
        for r in 0..=n as usize {
            let diff = &a.coeffs[r] - &b.coeffs[r];
            let expect = if r == 1 {
                Scalar::from_int(2)
            } else {
                Scalar::zero()
            };
            out.check(diff == expect, || format!("[z, zb]_* at ħ^{r}: {diff}"));
        }
        if trial < 5 {
            let f = Poly::random(rng, 4, true);
            let g = Poly::random(rng, 4, true);
            let got = cx.star(&f.to_jet(&base, j), &g.to_jet(&base, j)).unwrap();
            // c_r = 2^r / r! ∂_z^r f ∂_zb^r g
            for r in 0..=n {
                let t = &f.partial_n(r, 0).eval(&base) * &g.partial_n(0, r).eval(&base);
                let expect = &t * &q(1 << r, fact(r));
                out.check(got.coeffs[r as usize] == expect, || {
                    format!(
                        "c_{r}: {} vs normal order {}",
                        got.coeffs[r as usize], expect
                    )
                });
            }
        }
    }
    out
}

fn first_order_display(rng: &mut ChaCha8Rng) -> Outcome {
    let mut out = Outcome::new();
    let lambda = q(3, 2);
    for z0 in [q(0, 1), c((1, 2), (-1, 3)), c((-2, 5), (3, 7))] {
        let base = [z0.clone(), z0.conj()];
        let cx = ctx(fs(&z0, 1), Kind::Wick, 1);
        let j = cx.model().jet_order();
        for _ in 0..3 {
            let f = Poly::random(rng, 3, true);
            let g = Poly::random(rng, 3, true);
            let got = cx.star(&f.to_jet(&base, j), &g.to_jet(&base, j)).unwrap();
            // ω^{1 1̄} = (1 + |z|²)² / λ and Λ(∂f, ∂̄g) = (2/i) ω^{1 1̄} ∂f ∂̄g
            let s = &Scalar::one() + &Scalar::real(z0.norm_sqr());
            let ginv = &(&s * &s) * &lambda.inv().unwrap();
            let lam = &(&Scalar::complex(Scalar::zero(), Scalar::from_int(-2)) * &ginv)
                * &(&f.partial(0).eval(&base) * &g.partial(1).eval(&base));
            // (iħ/2) M₁ = iħ Λ(∂f, ∂̄g)
            let expect_m1 = lam.mul_int(2);
            out.check(got.m_values[1] == expect_m1, || {
                format!(
                    "M'_1 at {z0}: {} vs 2Λ(∂f,∂̄g) = {}",
                    got.m_values[1], expect_m1
                )
            });
            out.check(got.coeffs[1] == &Scalar::i() * &lam, || {
                format!("c_1 at {z0}")
            });
        }
    }
    out
}

fn sample_lifts(rng: &mut ChaCha8Rng, cx: &FedosovContext) -> Vec<Vec<Section>> {
    let j = cx.model().jet_order();
    let base = cx.model().base_point().to_vec();
    let f = random_rational(rng, &base, j);
    let g = random_rational(rng, &base, j);
    let mut samples = cx.d_squared_samples(&f, &g);
    let caps = cx.caps();
    for _ in 0..2 {
        let mut parts = Vec::new();
        for deg in 0..=3u32 {
            let mut s = Section::zero(2, cx.frame(), caps, j);
            for _ in 0..2 {
                let h = rng.gen_range(0..=deg / 2);
                let ds = deg - 2 * h;
                let a = rng.gen_range(0..=ds) as u8;
                let asym: Vec<usize> = match rng.gen_range(0..3) {
                    0 => vec![],
                    1 => vec![rng.gen_range(0..2)],
                    _ => vec![0, 1],
                };
                let (key, _) = TermKey::new(h, &[a, ds as u8 - a], &asym);
                s.add_term(key, random_rational(rng, &base, j));
            }
            parts.push(s);
        }
        samples.push(parts);
    }
    samples
}

fn flatness(rng: &mut ChaCha8Rng) -> Outcome {
    let mut out = Outcome::new();
    let n = 3;
    let z0 = c((1, 3), (1, 4));
    let models = [
        fs(&z0, n),
        poincare_disc(
            std::slice::from_ref(&z0),
            &q(1, 2),
            FedosovContext::jet_order_for(n),
        )
        .unwrap(),
    ];
    for m in models {
        for kind in [Kind::Weyl, Kind::Wick] {
            let cx = ctx(m.clone(), kind, n);
            out.report(&cx.verify_flatness());
            let samples = sample_lifts(rng, &cx);
            out.report(&cx.verify_d_squared(&samples));
        }
    }
    out
}

fn associativity(rng: &mut ChaCha8Rng) -> Outcome {
    let mut out = Outcome::new();
    let z0 = c((1, 3), (1, 4));
    for kind in [Kind::Weyl, Kind::Wick] {
        let cx = ctx(fs(&z0, 3), kind, 3);
        let base = cx.model().base_point().to_vec();
        let j = cx.model().jet_order();
        for _ in 0..10 {
            let f = random_rational(rng, &base, j);
            let g = random_rational(rng, &base, j);
            let h = random_rational(rng, &base, j);
            let d = cx.associativity_defects(&f, &g, &h).unwrap();
            for (s, x) in d.iter().enumerate() {
                out.check(x.is_zero(), || format!("{kind:?} ħ^{s} defect {x}"));
            }
        }
    }
    // sensitivity: a perturbed r must break associativity
    let mut cx = ctx(fs(&z0, 3), Kind::Weyl, 3);
    let base = cx.model().base_point().to_vec();
    let j = cx.model().jet_order();
    let z = coordinate_jets(&base, j);
    cx.perturb_r(
        3,
        TermKey::new(0, &[2, 1], &[1]).0,
        z[0].mul_truncated(&z[1]).scale(&q(1, 5)),
    );
    let f = random_rational(rng, &base, j);
    let d = cx.associativity_defects(&f, &z[1], &z[0]).unwrap();
    out.check(d.iter().any(|x| !x.is_zero()), || {
        "perturbed r stayed associative".into()
    });
    out
}

fn weyl_symmetry(rng: &mut ChaCha8Rng) -> Outcome {
    let mut out = Outcome::new();
    let z0 = c((-1, 2), (1, 5));
    for (kind, n) in [(Kind::Weyl, 4), (Kind::Wick, 3)] {
        let cx = ctx(fs(&z0, n), kind, n);
        let base = cx.model().base_point().to_vec();
        let j = cx.model().jet_order();
        for _ in 0..3 {
            let f = random_rational(rng, &base, j);
            let g = random_rational(rng, &base, j);
            let rep = cx.verify_axioms(&f, &g, &Jet::one(2, j));
            for chk in rep.checks.iter().filter(|c| {
                !c.informational
                    && (c.name.starts_with("weyl_") || c.name.starts_with("conjugation"))
            }) {
                out.check(chk.passed, || {
                    format!("{kind:?} {} defect {}", chk.name, chk.defect)
                });
            }
        }
        if kind == Kind::Weyl {
            out.report(&cx.verify_r());
        }
    }
    out
}

fn wick_type(rng: &mut ChaCha8Rng) -> Outcome {
    let mut out = Outcome::new();
    let n = 3;
    let z0 = c((2, 5), (-1, 4));
    let j = FedosovContext::jet_order_for(n);
    for m in [
        flat_kaehler(1, std::slice::from_ref(&z0), j).unwrap(),
        fs(&z0, n),
    ] {
        let cx = ctx(m, Kind::Wick, n);
        let base = cx.model().base_point().to_vec();
        let holo = |rng: &mut ChaCha8Rng| {
            let mut p = Poly::default();
            for k in 0..=3 {
                p.0.insert(
                    (k, 0),
                    c((rng.gen_range(-3..=3), 2), (rng.gen_range(-3..=3), 3)),
                );
            }
            let num = p.to_jet(&base, j);
            let den = Poly::monomial(1, 0).to_jet(&base, j);
            let shift = Jet::constant(2, j, &Scalar::from_int(3) - &den.eval0());
            num.mul_truncated(&den.add_truncated(&shift).invert().unwrap())
        };
        for _ in 0..10 {
            let f = holo(rng);
            let g = f.conjugate(Frame::Complex);
            let h = random_rational(rng, &base, j);
            let hf = cx.star_jets_full(&h, &f, n).unwrap();
            let gh = cx.star_jets_full(&g, &h, n).unwrap();
            out.check(hf[0] == h.mul_truncated(&f).truncate(hf[0].order()), || {
                "h*f at ħ^0".into()
            });
            out.check(gh[0] == g.mul_truncated(&h).truncate(gh[0].order()), || {
                "g*h at ħ^0".into()
            });
            for s in 1..=n as usize {
                out.check(hf[s].is_zero(), || format!("h*'f has ħ^{s} term"));
                out.check(gh[s].is_zero(), || format!("g*'h has ħ^{s} term"));
            }
        }
        for _ in 0..2 {
            let f = holo(rng);
            let g = holo(rng).conjugate(Frame::Complex);
            let h = random_rational(rng, &base, j);
            out.report(&cx.verify_wick_type(&h, &f, &g));
        }
        out.report(&cx.verify_r());
    }
    out
}

fn formula(rng: &mut ChaCha8Rng) -> (Outcome, Vec<String>) {
    let mut out = Outcome::new();
    let mut info = Vec::new();
    let z0 = c((1, 3), (-1, 2));
    let base_r = [q(1, 2), q(-2, 3)];
    let weyl = [
        ctx(
            flat_symplectic(1, &base_r, FedosovContext::jet_order_for(4)).unwrap(),
            Kind::Weyl,
            4,
        ),
        ctx(fs(&z0, 4), Kind::Weyl, 4),
    ];
    for cx in &weyl {
        let base = cx.model().base_point().to_vec();
        let j = cx.model().jet_order();
        for _ in 0..3 {
            let f = random_rational(rng, &base, j);
            let g = random_rational(rng, &base, j);
            out.report(&cx.verify_formula(&f, &g));
        }
    }
    let j = FedosovContext::jet_order_for(4);
    let wick = [
        ctx(
            flat_kaehler(1, std::slice::from_ref(&z0), j).unwrap(),
            Kind::Wick,
            4,
        ),
        ctx(fs(&z0, 4), Kind::Wick, 4),
    ];
    let mut mismatches = 0;
    for cx in &wick {
        let base = cx.model().base_point().to_vec();
        for _ in 0..3 {
            let f = random_rational(rng, &base, j);
            let g = random_rational(rng, &base, j);
            let rep = cx.verify_formula(&f, &g);
            for chk in rep.failures() {
                mismatches += 1;
                info.push(format!(
                    "Wick formula {} on {}: defect {}",
                    chk.name,
                    cx.model().name(),
                    chk.defect
                ));
            }
        }
    }
    if mismatches == 0 {
        info.push(
            "Wick formula (s = r reading) matches the direct pipeline exactly for s <= 4".into(),
        );
    }
    (out, info)
}

fn s_equivalence(rng: &mut ChaCha8Rng) -> Outcome {
    let mut out = Outcome::new();
    let caps = Caps::new(6);
    let order = 4;
    let z0 = c((1, 4), (2, 5));
    for m in [
        flat_kaehler(1, std::slice::from_ref(&z0), order).unwrap(),
        fubini_study(1, std::slice::from_ref(&z0), &q(3, 2), order).unwrap(),
    ] {
        let ginv = m.kaehler_inverse().unwrap().clone();
        let weyl = m.poisson();
        let wick = m.wick_pairing().unwrap();
        for _ in 0..50 {
            let a = random_section(rng, caps, order);
            let b = random_section(rng, caps, order);
            let lhs = star_fiber(&a, &b, weyl).unwrap();
            let sa = s_op(&a, &ginv).unwrap();
            let sb = s_op(&b, &ginv).unwrap();
            let rhs = s_inv(&star_fiber(&sa, &sb, wick).unwrap(), &ginv).unwrap();
            let res = lhs.sub(&rhs).unwrap();
            out.check(res.is_zero(), || format!("{}: residual {}", m.name(), res));
        }
    }
    out
}

fn random_section(rng: &mut impl Rng, caps: Caps, order: u32) -> Section {
    let mut s = Section::zero(2, Frame::Complex, caps, order);
    for _ in 0..rng.gen_range(1..=4) {
        let h = rng.gen_range(0..=1);
        let ds = rng.gen_range(0..=3u8);
        let a = rng.gen_range(0..=ds);
        let asym: Vec<usize> = match rng.gen_range(0..4) {
            0 | 1 => vec![],
            2 => vec![rng.gen_range(0..2)],
            _ => vec![0, 1],
        };
        let (key, _) = TermKey::new(h, &[a, ds - a], &asym);
        let mut j = Jet::zero(2, order);
        for _ in 0..rng.gen_range(1..=3) {
            let x = rng.gen_range(0..=2u8);
            let y = rng.gen_range(0..=2u8);
            j = j.add_truncated(&Jet::monomial(
                2,
                order,
                &[x, y],
                c(
                    (rng.gen_range(-3..=3), rng.gen_range(1..=3)),
                    (rng.gen_range(-3..=3), rng.gen_range(1..=3)),
                ),
            ));
        }
        s.add_term(key, j);
    }
    s
}

fn locality(rng: &mut ChaCha8Rng) -> Outcome {
    let mut out = Outcome::new();
    let n = 3;
    let j = FedosovContext::jet_order_for(n);
    let z0 = c((1, 5), (1, 3));
    let contexts = [
        ctx(
            flat_symplectic(1, &[q(1, 3), q(-1, 2)], j).unwrap(),
            Kind::Weyl,
            n,
        ),
        ctx(
            flat_kaehler(1, std::slice::from_ref(&z0), j).unwrap(),
            Kind::Wick,
            n,
        ),
        ctx(fs(&z0, n), Kind::Weyl, n),
        ctx(fs(&z0, n), Kind::Wick, n),
    ];
    for cx in &contexts {
        let base = cx.model().base_point().to_vec();
        let f = random_rational(rng, &base, j);
        let g = random_rational(rng, &base, j);
        out.report(&cx.verify_order(&f, &g, 3));
    }
    out
}

fn geometry_validation() -> Outcome {
    let mut out = Outcome::new();
    let z0 = c((1, 3), (-1, 4));
    let zs = [c((1, 3), (-1, 4)), c((-1, 5), (1, 2))];
    let zero2 = [Scalar::zero(), Scalar::zero()];
    let models = [
        flat_symplectic(1, &[q(1, 2), q(2, 3)], 5).unwrap(),
        flat_symplectic(2, &[q(1, 2), q(2, 3), zero2[0].clone(), q(-1, 1)], 4).unwrap(),
        flat_kaehler(1, std::slice::from_ref(&z0), 5).unwrap(),
        flat_kaehler(2, &zs, 4).unwrap(),
        fubini_study(1, std::slice::from_ref(&z0), &q(3, 2), 6).unwrap(),
        fubini_study(2, &zs, &q(5, 4), 4).unwrap(),
        poincare_disc(std::slice::from_ref(&z0), &q(1, 2), 6).unwrap(),
    ];
    for m in &models {
        out.report(&m.validate());
    }
    // one perturbed Christoffel entry
    let m = fubini_study(1, std::slice::from_ref(&z0), &q(3, 2), 5).unwrap();
    let mut conn = m.connection().clone();
    let order = conn.order();
    *conn.get_mut(1, 1, 1) = conn
        .get(1, 1, 1)
        .add_truncated(&Jet::constant(2, order, q(1, 9)));
    let bad = m.clone().with_connection(conn).unwrap().validate();
    out.check(!bad.passed(), || "perturbed Γ not detected".into());
    // one perturbed ω entry
    let mut omega = m.omega().clone();
    omega[1][0] = omega[1][0].add_truncated(&Jet::constant(2, 5, q(1, 7)));
    let bad = m.clone().with_omega(omega).validate();
    out.check(!bad.passed(), || "perturbed ω not detected".into());
    // transposed ω
    let omega = m.omega().clone();
    let t: Vec<Vec<Jet>> = (0..2)
        .map(|i| (0..2).map(|k| omega[k][i].clone()).collect())
        .collect();
    let bad = m.with_omega(t).validate();
    out.check(
        bad.find("hermitian_positive_at_base_point")
            .is_some_and(|c| !c.passed),
        || "transposed ω passes the Hermitian check".into(),
    );
    out
}

fn main() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_f3d0);
    let mut all = true;
    let mut extra = Vec::new();
    let mut run = |n: u32, title: &str, f: &mut dyn FnMut(&mut ChaCha8Rng) -> Outcome| {
        let t = Instant::now();
        let o = f(&mut rng);
        let tag = if o.passed { "PASS" } else { "FAIL" };
        println!(
            "criterion {n:>2} [{tag}] {title} ({:.1}s)",
            t.elapsed().as_secs_f64()
        );
        for note in &o.notes {
            println!("             {note}");
        }
        all &= o.passed;
    };
    run(
        1,
        "Moyal reduction on flat R^2, 20 pairs, r <= 6",
        &mut moyal,
    );
    run(
        2,
        "normal-order reduction on flat C^1, r <= 6",
        &mut normal_order,
    );
    run(
        3,
        "first-order display on Fubini-Study n=1 at three base points",
        &mut first_order_display,
    );
    run(
        4,
        "flatness and D^2 = 0 on Fubini-Study and the disc, both kinds, N = 3",
        &mut flatness,
    );
    run(
        5,
        "associativity through hbar^3, 10 rational triples, both kinds",
        &mut associativity,
    );
    run(
        6,
        "Weyl symmetry, reality and conjugation involutions",
        &mut weyl_symmetry,
    );
    run(
        7,
        "Wick type: absorption, type (1,0)/(0,1) locality, vanishing projections of r'",
        &mut wick_type,
    );
    run(
        8,
        "closed M_s formula against the direct pipeline, s <= 4",
        &mut |rng| {
            let (o, info) = formula(rng);
            extra = info;
            o
        },
    );
    run(
        9,
        "S-equivalence of fibrewise Weyl and Wick products, 50 sections",
        &mut s_equivalence,
    );
    run(
        10,
        "jet-locality of M_s and lift components, s <= 3",
        &mut locality,
    );
    run(11, "geometry validation and fault injection", &mut |_| {
        geometry_validation()
    });
    for line in extra {
        println!("note: {line}");
    }
    if !all {
        std::process::exit(1);
    }
}
