//! Chart models: symplectic form, Poisson tensor, connection and curvature
//! as jets around a rational base point.
//!
//! Conventions: `ω = ½ ω_{ij} dx^i ∧ dx^j`, `Λ^{ij} ω_{kj} = δ^i_k`, and
//! `R^t_{jkl} = ∂_kΓ^t_{lj} − ∂_lΓ^t_{kj} + Γ^t_{km}Γ^m_{lj} − Γ^t_{lm}Γ^m_{kj}`.
//! Complex frames order the coordinates `z¹..zⁿ, z̄¹..z̄ⁿ`, and a Kähler form
//! `ω = (i/2) ω_{k l̄} dzᵏ ∧ dz̄ˡ` is stored through its real-frame matrix
//! `ω_{k,n+l} = (i/2) ω_{k l̄}`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::galg::{pi_type, Caps, Connection, PairingTensor, Section, TermKey};
use crate::jets::{invert_matrix, Frame, Jet};
use crate::report::Report;
use crate::scalar::Scalar;

pub type JetMatrix = Vec<Vec<Jet>>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConnectionKind {
    /// Levi-Civita connection of the Kähler metric (pure type).
    Kaehler,
    /// `ω(∇_X Y, Z) = ⅓(∂_X ω)(Y, Z) + ⅓(∂_Y ω)(X, Z)` relative to the
    /// coordinate connection; symplectic and torsion-free for any `ω`.
    Canonical,
}

#[derive(Clone, Debug)]
pub struct ChartModel {
    name: String,
    n: usize,
    frame: Frame,
    base_point: Vec<Scalar>,
    jet_order: u32,
    omega: JetMatrix,
    /// `ω^{k l̄}` (complex frames only).
    kaehler_inverse: Option<JetMatrix>,
    poisson: PairingTensor,
    wick: Option<PairingTensor>,
    connection: Connection,
    connection_kind: ConnectionKind,
    /// `R^t_{jkl}` flattened as `((t·d + j)·d + k)·d + l`.
    riemann: Vec<Jet>,
}

fn two_over_i() -> Scalar {
    Scalar::complex(Scalar::zero(), Scalar::from_int(-2))
}

fn i_over_two() -> Scalar {
    Scalar::complex(Scalar::zero(), Scalar::ratio(1, 2))
}

fn zero_matrix(d: usize, dim: usize, order: u32) -> JetMatrix {
    vec![vec![Jet::zero(dim, order); d]; d]
}

/// Coordinate jets of all frame variables around `base` (length `d`).
pub fn coordinate_jets(base: &[Scalar], order: u32) -> Vec<Jet> {
    let d = base.len();
    (0..d)
        .map(|i| Jet::coordinate(d, order, i, base[i].clone()))
        .collect()
}

/// Full frame base point from `n` complex coordinate values.
pub fn complex_base_point(z: &[Scalar]) -> Vec<Scalar> {
    z.iter()
        .cloned()
        .chain(z.iter().map(Scalar::conj))
        .collect()
}

impl ChartModel {
    /// Model on a real frame from a symplectic matrix `ω_{ij}`, using the
    /// canonical symplectic connection.
    pub fn from_symplectic(
        name: impl Into<String>,
        base_point: Vec<Scalar>,
        omega: JetMatrix,
    ) -> Result<Self> {
        let d = base_point.len();
        if !d.is_multiple_of(2) || d == 0 {
            return Err(Error::InvalidModel(format!("odd frame dimension {d}")));
        }
        Self::assemble(
            name.into(),
            Frame::Real,
            base_point,
            omega,
            None,
            ConnectionKind::Canonical,
        )
    }

    /// Kähler model from the Hermitian matrix `ω_{k l̄}` given as jets in
    /// the complex frame around `base_point` (`n` values of `z`).
    pub fn from_hermitian(
        name: impl Into<String>,
        z_base: &[Scalar],
        hermitian: JetMatrix,
        connection: ConnectionKind,
    ) -> Result<Self> {
        let n = z_base.len();
        if hermitian.len() != n || hermitian.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidModel("Hermitian matrix must be n×n".into()));
        }
        let d = 2 * n;
        let dim = hermitian[0][0].dim();
        if dim != d {
            return Err(Error::DimensionMismatch(dim, d));
        }
        let order = hermitian
            .iter()
            .flatten()
            .map(Jet::order)
            .min()
            .unwrap_or(0);
        let mut omega = zero_matrix(d, d, order);
        for k in 0..n {
            for l in 0..n {
                let w = hermitian[k][l].truncate(order).scale(&i_over_two());
                omega[n + l][k] = w.neg();
                omega[k][n + l] = w;
            }
        }
        let kinv = invert_matrix(&transpose(&hermitian))?;
        Self::assemble(
            name.into(),
            Frame::Complex,
            complex_base_point(z_base),
            omega,
            Some(kinv),
            connection,
        )
    }

    /// Kähler model with `ω_{k l̄} = ∂_k ∂_{l̄} K`; the potential jet loses
    /// two orders.
    pub fn from_kaehler_potential(
        name: impl Into<String>,
        z_base: &[Scalar],
        potential: &Jet,
        connection: ConnectionKind,
    ) -> Result<Self> {
        let n = z_base.len();
        let mut h = Vec::with_capacity(n);
        for k in 0..n {
            let dk = potential.partial(k)?;
            let mut row = Vec::with_capacity(n);
            for l in 0..n {
                row.push(dk.partial(n + l)?);
            }
            h.push(row);
        }
        Self::from_hermitian(name, z_base, h, connection)
    }

    fn assemble(
        name: String,
        frame: Frame,
        base_point: Vec<Scalar>,
        omega: JetMatrix,
        kaehler_inverse: Option<JetMatrix>,
        connection_kind: ConnectionKind,
    ) -> Result<Self> {
        let d = base_point.len();
        let n = d / 2;
        let order = omega.iter().flatten().map(Jet::order).min().unwrap_or(0);
        let poisson_entries = match &kaehler_inverse {
            Some(g) => {
                let mut p = zero_matrix(d, d, order);
                for k in 0..n {
                    for l in 0..n {
                        let e = g[k][l].truncate(order).scale(&two_over_i());
                        p[n + l][k] = e.neg();
                        p[k][n + l] = e;
                    }
                }
                p
            }
            // Λ Ωᵀ = 1
            None => invert_matrix(&transpose(&omega))?,
        };
        let poisson = PairingTensor::new(frame, poisson_entries)?;
        let wick = match &kaehler_inverse {
            Some(g) => {
                let four_over_i = Scalar::complex(Scalar::zero(), Scalar::from_int(-4));
                let mut p = zero_matrix(d, d, order);
                for k in 0..n {
                    for l in 0..n {
                        p[k][n + l] = g[k][l].truncate(order).scale(&four_over_i);
                    }
                }
                Some(PairingTensor::new(frame, p)?)
            }
            None => None,
        };
        let connection = match (connection_kind, &kaehler_inverse) {
            (ConnectionKind::Kaehler, Some(g)) => kaehler_connection(&omega, g)?,
            (ConnectionKind::Kaehler, None) => {
                return Err(Error::InvalidModel(
                    "Kähler connection needs a complex frame".into(),
                ))
            }
            (ConnectionKind::Canonical, _) => canonical_connection(&omega, poisson.entries())?,
        };
        let riemann = riemann_tensor(&connection)?;
        Ok(Self {
            name,
            n,
            frame,
            base_point,
            jet_order: order,
            omega,
            kaehler_inverse,
            poisson,
            wick,
            connection,
            connection_kind,
            riemann,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        2 * self.n
    }

    pub fn frame(&self) -> Frame {
        self.frame
    }

    /// Values of all frame coordinates at the base point.
    pub fn base_point(&self) -> &[Scalar] {
        &self.base_point
    }

    pub fn jet_order(&self) -> u32 {
        self.jet_order
    }

    pub fn omega(&self) -> &JetMatrix {
        &self.omega
    }

    /// `ω_{k l̄}`, recovered from the stored real-frame matrix.
    pub fn hermitian(&self) -> Option<JetMatrix> {
        if self.frame != Frame::Complex {
            return None;
        }
        let n = self.n;
        Some(
            (0..n)
                .map(|k| {
                    (0..n)
                        .map(|l| self.omega[k][n + l].scale(&two_over_i()))
                        .collect()
                })
                .collect(),
        )
    }

    pub fn kaehler_inverse(&self) -> Option<&JetMatrix> {
        self.kaehler_inverse.as_ref()
    }

    pub fn poisson(&self) -> &PairingTensor {
        &self.poisson
    }

    pub fn wick_pairing(&self) -> Option<&PairingTensor> {
        self.wick.as_ref()
    }

    pub fn connection(&self) -> &Connection {
        &self.connection
    }

    pub fn connection_kind(&self) -> ConnectionKind {
        self.connection_kind
    }

    /// `R^t_{jkl}`.
    pub fn riemann(&self, t: usize, j: usize, k: usize, l: usize) -> &Jet {
        let d = self.dim();
        &self.riemann[((t * d + j) * d + k) * d + l]
    }

    /// Coordinate jets of the frame variables at this model's order.
    pub fn coordinates(&self) -> Vec<Jet> {
        coordinate_jets(&self.base_point, self.jet_order)
    }

    /// `ω_{it} R^t_{jkl}`.
    pub fn lowered_riemann(&self, i: usize, j: usize, k: usize, l: usize) -> Jet {
        let d = self.dim();
        let mut acc = Jet::zero(d, self.riemann(0, 0, 0, 0).order());
        for t in 0..d {
            let w = &self.omega[i][t];
            if w.is_zero() {
                continue;
            }
            acc = acc.add_truncated(&w.mul_truncated(self.riemann(t, j, k, l)));
        }
        acc
    }

    /// `R = ¼ ω_{it} R^t_{jkl} dx^i ∨ dx^j ⊗ dx^k ∧ dx^l`.
    pub fn curvature_section(&self, caps: Caps) -> Section {
        let d = self.dim();
        let quarter = Scalar::ratio(1, 4);
        let mut out = Section::zero(d, self.frame, caps, self.riemann(0, 0, 0, 0).order());
        for i in 0..d {
            for j in 0..d {
                for k in 0..d {
                    for l in 0..d {
                        if k == l {
                            continue;
                        }
                        let w = self.lowered_riemann(i, j, k, l);
                        if w.is_zero() {
                            continue;
                        }
                        let mut sym = vec![0u8; d];
                        sym[i] += 1;
                        sym[j] += 1;
                        let (key, sign) = TermKey::new(0, &sym, &[k, l]);
                        out.add_term(key, w.scale(&quarter.mul_int(sign as i64)));
                    }
                }
            }
        }
        out
    }

    /// Replace the connection without recomputing anything else except the
    /// curvature (fault injection and custom connections).
    pub fn with_connection(mut self, conn: Connection) -> Result<Self> {
        self.riemann = riemann_tensor(&conn)?;
        self.connection = conn;
        Ok(self)
    }

    /// Replace the symplectic matrix, keeping every derived quantity.
    pub fn with_omega(mut self, omega: JetMatrix) -> Self {
        self.omega = omega;
        self
    }

    /// Exact checks of every model invariant.
    pub fn validate(&self) -> Report {
        let d = self.dim();
        let mut rep = Report::new(format!("model {}", self.name));
        let conn = &self.connection;

        let mut antisym = Jet::zero(d, self.jet_order);
        let mut inverse = Jet::zero(d, self.jet_order);
        for i in 0..d {
            for j in 0..d {
                let s = self.omega[i][j].add_truncated(&self.omega[j][i]);
                antisym = first_nonzero(antisym, s);
                let mut acc = Jet::zero(d, self.jet_order);
                for m in 0..d {
                    acc = acc
                        .add_truncated(&self.poisson.entry(i, m).mul_truncated(&self.omega[j][m]));
                }
                if i == j {
                    acc = acc.sub_truncated(&Jet::one(d, self.jet_order));
                }
                inverse = first_nonzero(inverse, acc);
            }
        }
        rep.jet_zero("omega_antisymmetric", &antisym);
        rep.jet_zero("poisson_inverts_omega", &inverse);

        let mut closed = Jet::zero(d, self.jet_order.saturating_sub(1));
        let mut torsion = Jet::zero(d, conn.order());
        let mut nabla_omega = Jet::zero(d, conn.order());
        for a in 0..d {
            for b in 0..d {
                for c in 0..d {
                    match (
                        self.omega[b][c].partial(a),
                        self.omega[c][a].partial(b),
                        self.omega[a][b].partial(c),
                    ) {
                        (Ok(x), Ok(y), Ok(z)) => {
                            closed = first_nonzero(closed, x.add_truncated(&y).add_truncated(&z))
                        }
                        (Err(e), _, _) | (_, Err(e), _) | (_, _, Err(e)) => {
                            rep.error("omega_closed", &e);
                            return rep;
                        }
                    }
                    torsion =
                        first_nonzero(torsion, conn.get(a, b, c).sub_truncated(conn.get(a, c, b)));
                    // ∇_a ω_{bc} = ∂_a ω_{bc} − Γ^m_{ab} ω_{mc} − Γ^m_{ac} ω_{bm}
                    let mut acc = self.omega[b][c].partial(a).expect("checked above");
                    for m in 0..d {
                        acc = acc
                            .sub_truncated(&conn.get(m, a, b).mul_truncated(&self.omega[m][c]))
                            .sub_truncated(&conn.get(m, a, c).mul_truncated(&self.omega[b][m]));
                    }
                    nabla_omega = first_nonzero(nabla_omega, acc);
                }
            }
        }
        rep.jet_zero("omega_closed", &closed);
        rep.jet_zero("torsion_free", &torsion);
        rep.jet_zero("nabla_omega_zero", &nabla_omega);

        let mut sym_ij = Jet::zero(d, self.jet_order);
        let mut anti_kl = Jet::zero(d, self.jet_order);
        for i in 0..d {
            for j in 0..d {
                for k in 0..d {
                    for l in 0..d {
                        let w = self.lowered_riemann(i, j, k, l);
                        sym_ij = first_nonzero(
                            sym_ij,
                            w.sub_truncated(&self.lowered_riemann(j, i, k, l)),
                        );
                        anti_kl = first_nonzero(
                            anti_kl,
                            w.add_truncated(&self.lowered_riemann(i, j, l, k)),
                        );
                    }
                }
            }
        }
        rep.jet_zero("curvature_symmetric_ij", &sym_ij);
        rep.jet_zero("curvature_antisymmetric_kl", &anti_kl);

        if self.frame == Frame::Complex {
            self.validate_kaehler(&mut rep);
        }
        rep
    }

    fn validate_kaehler(&self, rep: &mut Report) {
        let n = self.n;
        let d = self.dim();
        let base_ok = (0..n).all(|k| self.base_point[n + k] == self.base_point[k].conj());
        rep.flag("base_point_conjugate_pairs", base_ok, "");

        let mut type11 = Jet::zero(d, self.jet_order);
        for a in 0..d {
            for b in 0..d {
                if (a < n) == (b < n) {
                    type11 = first_nonzero(type11, self.omega[a][b].clone());
                }
            }
        }
        rep.jet_zero("omega_type_1_1", &type11);

        let h = self.hermitian().expect("complex frame");
        let mut herm = Jet::zero(d, self.jet_order);
        for k in 0..n {
            for l in 0..n {
                herm = first_nonzero(
                    herm,
                    h[k][l].conjugate(Frame::Complex).sub_truncated(&h[l][k]),
                );
            }
        }
        rep.jet_zero("hermitian", &herm);

        let at0: Vec<Vec<Scalar>> = h
            .iter()
            .map(|row| row.iter().map(Jet::eval0).collect())
            .collect();
        let minors = leading_minors(&at0);
        let positive = minors
            .iter()
            .all(|m| m.is_real() && num_traits::Signed::is_positive(m.re()));
        let detail = minors
            .iter()
            .map(|m| m.to_string())
            .collect::<Vec<_>>()
            .join(", ");
        rep.flag(
            "hermitian_positive_at_base_point",
            positive,
            format!("leading minors: {detail}"),
        );

        let mut mixed = Jet::zero(d, self.connection.order());
        for k in 0..d {
            for i in 0..d {
                for j in 0..d {
                    let pure = (k < n) == (i < n) && (i < n) == (j < n);
                    if !pure {
                        mixed = first_nonzero(mixed, self.connection.get(k, i, j).clone());
                    }
                }
            }
        }
        match self.connection_kind {
            ConnectionKind::Kaehler => rep.jet_zero("christoffel_pure_type", &mixed),
            ConnectionKind::Canonical => {
                let defect = mixed
                    .derivatives()
                    .next()
                    .map(|(_, c)| c.clone())
                    .unwrap_or_default();
                rep.info(
                    "christoffel_pure_type",
                    defect,
                    "canonical connection need not be of pure type",
                );
            }
        }

        if self.connection_kind == ConnectionKind::Kaehler {
            let r = self.curvature_section(Caps::new(4));
            let p20 = pi_type(&r, 2, 0).expect("complex frame");
            let p02 = pi_type(&r, 0, 2).expect("complex frame");
            rep.section_zero("curvature_type_2_0_vanishes", &p20);
            rep.section_zero("curvature_type_0_2_vanishes", &p02);
        }
    }
}

fn first_nonzero(acc: Jet, next: Jet) -> Jet {
    if acc.is_zero() {
        next
    } else {
        acc
    }
}

fn transpose(m: &JetMatrix) -> JetMatrix {
    let d = m.len();
    (0..d)
        .map(|i| (0..d).map(|j| m[j][i].clone()).collect())
        .collect()
}

/// Leading principal minors of a scalar matrix, by exact elimination.
pub fn leading_minors(m: &[Vec<Scalar>]) -> Vec<Scalar> {
    (1..=m.len())
        .map(|k| {
            let sub: Vec<Vec<Scalar>> = m[..k].iter().map(|r| r[..k].to_vec()).collect();
            determinant(sub)
        })
        .collect()
}

pub fn determinant(mut a: Vec<Vec<Scalar>>) -> Scalar {
    let n = a.len();
    let mut det = Scalar::one();
    for col in 0..n {
        let Some(p) = (col..n).find(|&r| !a[r][col].is_zero()) else {
            return Scalar::zero();
        };
        if p != col {
            a.swap(p, col);
            det = -det;
        }
        det = &det * &a[col][col];
        let inv = a[col][col].inv().expect("nonzero pivot");
        for r in col + 1..n {
            let f = &a[r][col] * &inv;
            if f.is_zero() {
                continue;
            }
            for c in col..n {
                let t = &f * &a[col][c];
                a[r][c] = &a[r][c] - &t;
            }
        }
    }
    det
}

/// `Γ^k_{ij} = ω^{k m̄} ∂_i ω_{j m̄}` and its conjugate block; all mixed
/// components vanish.
fn kaehler_connection(omega: &JetMatrix, kinv: &JetMatrix) -> Result<Connection> {
    let d = omega.len();
    let n = d / 2;
    let order = omega[0][0].order();
    let h: JetMatrix = (0..n)
        .map(|k| {
            (0..n)
                .map(|l| omega[k][n + l].scale(&two_over_i()))
                .collect()
        })
        .collect();
    let mut conn = Connection::flat(d, order.saturating_sub(1));
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let mut hol = Jet::zero(d, order.saturating_sub(1));
                let mut anti = Jet::zero(d, order.saturating_sub(1));
                for m in 0..n {
                    hol = hol.add_truncated(&kinv[k][m].mul_truncated(&h[j][m].partial(i)?));
                    anti = anti.add_truncated(&kinv[m][k].mul_truncated(&h[m][j].partial(n + i)?));
                }
                *conn.get_mut(k, i, j) = hol;
                *conn.get_mut(n + k, n + i, n + j) = anti;
            }
        }
    }
    Ok(conn)
}

/// `Γ^l_{ij} = −⅓ (∂_i ω_{jk} + ∂_j ω_{ik}) Λ^{kl}`.
fn canonical_connection(omega: &JetMatrix, poisson: &[Vec<Jet>]) -> Result<Connection> {
    let d = omega.len();
    let order = omega[0][0].order();
    let third = Scalar::ratio(-1, 3);
    let mut conn = Connection::flat(d, order.saturating_sub(1));
    for l in 0..d {
        for i in 0..d {
            for j in 0..d {
                let mut acc = Jet::zero(d, order.saturating_sub(1));
                for k in 0..d {
                    if poisson[k][l].is_zero() {
                        continue;
                    }
                    let s = omega[j][k]
                        .partial(i)?
                        .add_truncated(&omega[i][k].partial(j)?);
                    acc = acc.add_truncated(&s.mul_truncated(&poisson[k][l]));
                }
                *conn.get_mut(l, i, j) = acc.scale(&third);
            }
        }
    }
    Ok(conn)
}

fn riemann_tensor(conn: &Connection) -> Result<Vec<Jet>> {
    let d = conn.dim();
    let order = conn.order().saturating_sub(1);
    let mut dgamma = Vec::with_capacity(d * d * d * d);
    // ∂_k Γ^t_{lj} indexed [k][t][l][j]
    for k in 0..d {
        for t in 0..d {
            for l in 0..d {
                for j in 0..d {
                    dgamma.push(conn.get(t, l, j).partial(k)?);
                }
            }
        }
    }
    let dg = |k: usize, t: usize, l: usize, j: usize| &dgamma[((k * d + t) * d + l) * d + j];
    let mut out = Vec::with_capacity(d * d * d * d);
    for t in 0..d {
        for j in 0..d {
            for k in 0..d {
                for l in 0..d {
                    let mut acc = dg(k, t, l, j).sub_truncated(dg(l, t, k, j));
                    for m in 0..d {
                        acc = acc
                            .add_truncated(&conn.get(t, k, m).mul_truncated(conn.get(m, l, j)))
                            .sub_truncated(&conn.get(t, l, m).mul_truncated(conn.get(m, k, j)));
                    }
                    out.push(acc.truncate(order));
                }
            }
        }
    }
    Ok(out)
}

/// Flat `ℝ²ⁿ` with `ω = Σ dxᵏ ∧ dx^{n+k}`, so `Λ^{k,n+k} = 1`.
pub fn flat_symplectic(n: usize, base_point: &[Scalar], order: u32) -> Result<ChartModel> {
    let d = 2 * n;
    if base_point.len() != d {
        return Err(Error::InvalidModel(format!(
            "flat-symplectic:{n} needs {d} base point coordinates"
        )));
    }
    let mut omega = zero_matrix(d, d, order);
    for k in 0..n {
        omega[k][n + k] = Jet::one(d, order);
        omega[n + k][k] = Jet::one(d, order).neg();
    }
    ChartModel::from_symplectic(format!("flat-symplectic:{n}"), base_point.to_vec(), omega)
}

/// Flat `ℂⁿ` with `ω_{k l̄} = δ_{kl}`.
pub fn flat_kaehler(n: usize, z_base: &[Scalar], order: u32) -> Result<ChartModel> {
    if z_base.len() != n {
        return Err(Error::InvalidModel(format!(
            "flat-kaehler:{n} needs {n} base point values"
        )));
    }
    let d = 2 * n;
    let h = (0..n)
        .map(|k| {
            (0..n)
                .map(|l| {
                    if k == l {
                        Jet::one(d, order)
                    } else {
                        Jet::zero(d, order)
                    }
                })
                .collect()
        })
        .collect();
    ChartModel::from_hermitian(
        format!("flat-kaehler:{n}"),
        z_base,
        h,
        ConnectionKind::Kaehler,
    )
}

/// `ω_{k l̄} = λ ∂_k ∂_{l̄} log(1 ± |z|²)` in closed rational form:
/// `λ (δ_{kl}/(1 ± s) ∓ z̄_k z_l/(1 ± s)²)`.
fn projective_hermitian(
    z_base: &[Scalar],
    scale: &Scalar,
    sign: i64,
    order: u32,
) -> Result<JetMatrix> {
    let n = z_base.len();
    let d = 2 * n;
    let coords = coordinate_jets(&complex_base_point(z_base), order);
    let mut s = Jet::zero(d, order);
    for k in 0..n {
        s = s.add_truncated(&coords[k].mul_truncated(&coords[n + k]));
    }
    let denom = Jet::one(d, order).add_truncated(&s.scale(&Scalar::from_int(sign)));
    let inv = denom
        .invert()
        .map_err(|_| Error::InvalidModel("base point outside the chart domain".into()))?;
    let inv2 = inv.mul_truncated(&inv);
    let mut h = Vec::with_capacity(n);
    for k in 0..n {
        let mut row = Vec::with_capacity(n);
        for l in 0..n {
            let mut e = coords[n + k]
                .mul_truncated(&coords[l])
                .mul_truncated(&inv2)
                .scale(&Scalar::from_int(-sign));
            if k == l {
                e = e.add_truncated(&inv);
            }
            row.push(e.scale(scale));
        }
        h.push(row);
    }
    Ok(h)
}

fn check_scale(scale: &Scalar) -> Result<()> {
    if !scale.is_real() || !num_traits::Signed::is_positive(scale.re()) {
        return Err(Error::InvalidModel(format!(
            "scale must be a positive rational, got {scale}"
        )));
    }
    Ok(())
}

/// Fubini–Study metric on the affine chart of `ℂPⁿ`.
pub fn fubini_study(n: usize, z_base: &[Scalar], scale: &Scalar, order: u32) -> Result<ChartModel> {
    fubini_study_with(n, z_base, scale, order, ConnectionKind::Kaehler)
}

pub fn fubini_study_with(
    n: usize,
    z_base: &[Scalar],
    scale: &Scalar,
    order: u32,
    connection: ConnectionKind,
) -> Result<ChartModel> {
    check_scale(scale)?;
    if z_base.len() != n {
        return Err(Error::InvalidModel(format!(
            "fubini-study:{n} needs {n} base point values"
        )));
    }
    let h = projective_hermitian(z_base, scale, 1, order)?;
    ChartModel::from_hermitian(format!("fubini-study:{n}"), z_base, h, connection)
}

/// Poincaré metric on the unit disc (`n = 1`) or ball.
pub fn poincare_disc(z_base: &[Scalar], scale: &Scalar, order: u32) -> Result<ChartModel> {
    check_scale(scale)?;
    let r2: num_rational::BigRational = z_base.iter().map(Scalar::norm_sqr).sum();
    if r2 >= num_rational::BigRational::from_integer(1.into()) {
        return Err(Error::InvalidModel(
            "base point must lie inside the unit disc".into(),
        ));
    }
    let h = projective_hermitian(z_base, scale, -1, order)?;
    ChartModel::from_hermitian("poincare-disc", z_base, h, ConnectionKind::Kaehler)
}
