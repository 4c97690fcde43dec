//! Model selection: built-in names and JSON model files.

use std::path::Path;

use fedosov_core::geometry::{
    complex_base_point, flat_kaehler, flat_symplectic, fubini_study_with, poincare_disc,
    ChartModel, ConnectionKind,
};
use fedosov_core::{Frame, Scalar};
use serde::Deserialize;

use crate::error::CliError;
use crate::expr::{lower, parse};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Symplectic,
    Kaehler,
}

/// Contents of a `--model-file`. Either `builtin` (with optional `scale`)
/// or `kind` and `n` with one of `kahlerPotential` / `omegaMatrix`.
///
/// For `kind: "symplectic"` the matrix is `ω_{ij}` in `x1..x2n`; for
/// `kind: "kaehler"` it is the Hermitian matrix `h_{k l̄}` with
/// `ω = (i/2) h_{k l̄} dz^k ∧ dz̄^l`.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct ModelFile {
    pub name: Option<String>,
    pub builtin: Option<String>,
    pub scale: Option<String>,
    pub kind: Option<ModelKind>,
    pub n: Option<usize>,
    pub base_point: Option<Vec<String>>,
    pub kahler_potential: Option<String>,
    pub omega_matrix: Option<Vec<Vec<String>>>,
    pub connection: Option<ConnectionKind>,
}

#[derive(Clone, Debug)]
pub enum ModelSource {
    Builtin(String),
    File(ModelFile),
}

impl ModelSource {
    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let file = serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Ok(ModelSource::File(file))
    }
}

/// Overrides from the command line.
#[derive(Clone, Debug, Default)]
pub struct ModelOptions {
    pub at: Option<String>,
    pub scale: Option<String>,
    pub connection: Option<ConnectionKind>,
}

fn constant(src: &str) -> Result<Scalar, CliError> {
    parse(src)?.constant()
}

/// Parse a comma-separated base point. Complex frames take either `n`
/// values of `z` or `2n` reals read as `(Re z, Im z)` pairs; real frames
/// take `2n` reals.
pub fn base_point(values: &[Scalar], frame: Frame, n: usize) -> Result<Vec<Scalar>, CliError> {
    let all_real = values.iter().all(Scalar::is_real);
    match frame {
        Frame::Real if values.len() == 2 * n && all_real => Ok(values.to_vec()),
        Frame::Real => Err(CliError::Config(format!(
            "a real frame of dimension {} needs {} real base point values",
            2 * n,
            2 * n
        ))),
        Frame::Complex if values.len() == n => Ok(values.to_vec()),
        Frame::Complex if values.len() == 2 * n && all_real => Ok(values
            .chunks(2)
            .map(|p| &p[0] + &(&Scalar::i() * &p[1]))
            .collect()),
        Frame::Complex => Err(CliError::Config(format!(
            "a complex frame with n = {n} needs {n} complex values or {} real (Re, Im) values",
            2 * n
        ))),
    }
}

fn split_values(list: &str) -> Result<Vec<Scalar>, CliError> {
    list.split(',').map(|s| constant(s.trim())).collect()
}

fn builtin_parts(spec: &str) -> Result<(&str, usize), CliError> {
    let (name, n) = match spec.split_once(':') {
        Some((name, n)) => (
            name,
            n.parse::<usize>()
                .ok()
                .filter(|&n| n > 0)
                .ok_or_else(|| CliError::Config(format!("bad dimension in `{spec}`")))?,
        ),
        None => (spec, 1),
    };
    Ok((name, n))
}

fn builtin_frame(name: &str) -> Result<Frame, CliError> {
    match name {
        "flat-symplectic" => Ok(Frame::Real),
        "flat-kaehler" | "fubini-study" | "poincare-disc" => Ok(Frame::Complex),
        _ => Err(CliError::Config(format!(
            "unknown model `{name}` (expected flat-symplectic, flat-kaehler, fubini-study or poincare-disc)"
        ))),
    }
}

fn build_builtin(
    spec: &str,
    at: Option<Vec<Scalar>>,
    scale: Option<Scalar>,
    connection: Option<ConnectionKind>,
    order: u32,
) -> Result<ChartModel, CliError> {
    let (name, n) = builtin_parts(spec)?;
    let frame = builtin_frame(name)?;
    let base = match at {
        Some(v) => base_point(&v, frame, n)?,
        None => vec![Scalar::zero(); if frame == Frame::Real { 2 * n } else { n }],
    };
    if scale.is_some() && !matches!(name, "fubini-study" | "poincare-disc") {
        return Err(CliError::Config(format!("`{name}` takes no scale")));
    }
    let scale = scale.unwrap_or_else(Scalar::one);
    let model = match name {
        "flat-symplectic" => flat_symplectic(n, &base, order)?,
        "flat-kaehler" => flat_kaehler(n, &base, order)?,
        "fubini-study" => fubini_study_with(
            n,
            &base,
            &scale,
            order,
            connection.unwrap_or(ConnectionKind::Kaehler),
        )?,
        _ => poincare_disc(&base, &scale, order)?,
    };
    match (connection, name) {
        (Some(kind), "flat-symplectic") if kind != ConnectionKind::Canonical => Err(
            CliError::Config("flat-symplectic only carries the canonical connection".into()),
        ),
        (Some(kind), "flat-kaehler" | "poincare-disc") if kind != model.connection_kind() => {
            let h = model.hermitian().expect("complex frame");
            Ok(ChartModel::from_hermitian(model.name(), &base, h, kind)?)
        }
        _ => Ok(model),
    }
}

fn build_file(file: &ModelFile, opts: &ModelOptions, order: u32) -> Result<ChartModel, CliError> {
    let at = match (&opts.at, &file.base_point) {
        (Some(list), _) => Some(split_values(list)?),
        (None, Some(v)) => Some(v.iter().map(|s| constant(s)).collect::<Result<_, _>>()?),
        (None, None) => None,
    };
    if let Some(spec) = &file.builtin {
        if file.kind.is_some() || file.kahler_potential.is_some() || file.omega_matrix.is_some() {
            return Err(CliError::Config(
                "`builtin` excludes `kind`, `kahlerPotential` and `omegaMatrix`".into(),
            ));
        }
        let scale = opts
            .scale
            .as_deref()
            .or(file.scale.as_deref())
            .map(constant)
            .transpose()?;
        return build_builtin(spec, at, scale, opts.connection.or(file.connection), order);
    }
    let kind = file
        .kind
        .ok_or_else(|| CliError::Config("model file needs `builtin` or `kind`".into()))?;
    let n = file
        .n
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Config("model file needs `n` ≥ 1".into()))?;
    let name = file.name.clone().unwrap_or_else(|| "user".into());
    let frame = match kind {
        ModelKind::Symplectic => Frame::Real,
        ModelKind::Kaehler => Frame::Complex,
    };
    let base = match at {
        Some(v) => base_point(&v, frame, n)?,
        None => vec![Scalar::zero(); if frame == Frame::Real { 2 * n } else { n }],
    };
    let matrix = |rows: &Vec<Vec<String>>, size: usize, point: &[Scalar]| {
        if rows.len() != size || rows.iter().any(|r| r.len() != size) {
            return Err(CliError::Config(format!(
                "omegaMatrix must be {size}×{size}"
            )));
        }
        rows.iter()
            .map(|r| {
                r.iter()
                    .map(|s| lower(&parse(s)?, frame, point, order))
                    .collect()
            })
            .collect::<Result<Vec<Vec<_>>, CliError>>()
    };
    let model =
        match kind {
            ModelKind::Symplectic => {
                if file.kahler_potential.is_some() {
                    return Err(CliError::Config(
                        "a symplectic model takes `omegaMatrix`".into(),
                    ));
                }
                if file
                    .connection
                    .is_some_and(|c| c != ConnectionKind::Canonical)
                {
                    return Err(CliError::Config(
                        "a symplectic model carries the canonical connection".into(),
                    ));
                }
                let rows = file.omega_matrix.as_ref().ok_or_else(|| {
                    CliError::Config("a symplectic model needs `omegaMatrix`".into())
                })?;
                ChartModel::from_symplectic(name, base.clone(), matrix(rows, 2 * n, &base)?)?
            }
            ModelKind::Kaehler => {
                let conn = opts
                    .connection
                    .or(file.connection)
                    .unwrap_or(ConnectionKind::Kaehler);
                let point = complex_base_point(&base);
                match (&file.kahler_potential, &file.omega_matrix) {
                    (Some(k), None) => {
                        let pot = lower(&parse(k)?, frame, &point, order + 2)?;
                        ChartModel::from_kaehler_potential(name, &base, &pot, conn)?
                    }
                    (None, Some(rows)) => {
                        ChartModel::from_hermitian(name, &base, matrix(rows, n, &point)?, conn)?
                    }
                    _ => return Err(CliError::Config(
                        "a Kähler model needs exactly one of `kahlerPotential` and `omegaMatrix`"
                            .into(),
                    )),
                }
            }
        };
    let report = model.validate();
    if !report.passed() {
        let failed: Vec<_> = report.failures().map(|c| c.name.clone()).collect();
        return Err(CliError::Config(format!(
            "model `{}` fails validation: {}",
            model.name(),
            failed.join(", ")
        )));
    }
    Ok(model)
}

/// Build the chart model at jet order `order`.
pub fn build(
    source: &ModelSource,
    opts: &ModelOptions,
    order: u32,
) -> Result<ChartModel, CliError> {
    match source {
        ModelSource::Builtin(spec) => {
            let at = opts.at.as_deref().map(split_values).transpose()?;
            let scale = opts.scale.as_deref().map(constant).transpose()?;
            build_builtin(spec, at, scale, opts.connection, order)
        }
        ModelSource::File(file) => build_file(file, opts, order),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn opts(at: &str) -> ModelOptions {
        ModelOptions {
            at: Some(at.into()),
            ..Default::default()
        }
    }

    #[test]
    fn base_point_conventions() {
        let m = build(
            &ModelSource::Builtin("flat-kaehler:1".into()),
            &opts("0,0"),
            4,
        )
        .unwrap();
        assert_eq!(m.base_point(), &[Scalar::zero(), Scalar::zero()]);
        let m = build(
            &ModelSource::Builtin("fubini-study:1".into()),
            &opts("1/2, -1/3"),
            4,
        )
        .unwrap();
        let z = Scalar::complex(Scalar::ratio(1, 2), Scalar::ratio(-1, 3));
        assert_eq!(m.base_point(), &[z.clone(), z.conj()]);
        let m = build(
            &ModelSource::Builtin("fubini-study".into()),
            &opts("1/2 - i/3"),
            4,
        )
        .unwrap();
        assert_eq!(m.base_point()[0], z);
        assert!(build(
            &ModelSource::Builtin("flat-symplectic:1".into()),
            &opts("i,0"),
            4
        )
        .is_err());
        assert!(build(&ModelSource::Builtin("poincare-disc".into()), &opts("2"), 4).is_err());
        assert!(build(
            &ModelSource::Builtin("sphere:2".into()),
            &ModelOptions::default(),
            4
        )
        .is_err());
    }

    #[test]
    fn user_models_match_builtins() {
        let file: ModelFile = serde_json::from_str(
            r#"{"kind": "kaehler", "n": 1, "basePoint": ["1/3 + i/4"], "kahlerPotential": "z1*zb1"}"#,
        )
        .unwrap();
        let m = build(&ModelSource::File(file), &ModelOptions::default(), 4).unwrap();
        let flat = build(
            &ModelSource::Builtin("flat-kaehler".into()),
            &opts("1/3 + i/4"),
            4,
        )
        .unwrap();
        assert_eq!(m.omega(), flat.omega());

        let file: ModelFile = serde_json::from_str(
            r#"{"kind": "symplectic", "n": 1, "omegaMatrix": [["0", "1"], ["-1", "0"]]}"#,
        )
        .unwrap();
        let m = build(&ModelSource::File(file), &ModelOptions::default(), 4).unwrap();
        assert_eq!(m.poisson().entry(0, 1).eval0(), Scalar::one());

        let file: ModelFile = serde_json::from_str(
            r#"{"kind": "symplectic", "n": 1, "omegaMatrix": [["0", "1 + x1"], ["-1", "0"]]}"#,
        )
        .unwrap();
        assert!(build(&ModelSource::File(file), &ModelOptions::default(), 4).is_err());

        let file: ModelFile =
            serde_json::from_str(r#"{"kind": "kaehler", "n": 1, "kahlerPotential": "-z1*zb1"}"#)
                .unwrap();
        let err = build(&ModelSource::File(file), &ModelOptions::default(), 4).unwrap_err();
        assert!(err.to_string().contains("hermitian_positive"), "{err}");
    }

    #[test]
    fn builtin_in_file_with_scale() {
        let file: ModelFile = serde_json::from_str(
            r#"{"builtin": "fubini-study:1", "scale": "3/2", "basePoint": ["0"]}"#,
        )
        .unwrap();
        let m = build(&ModelSource::File(file), &ModelOptions::default(), 4).unwrap();
        let direct = fubini_study_with(
            1,
            &[Scalar::zero()],
            &Scalar::ratio(3, 2),
            4,
            ConnectionKind::Kaehler,
        )
        .unwrap();
        assert_eq!(m.omega(), direct.omega());
        assert!(serde_json::from_str::<ModelFile>(r#"{"builtin": "x", "colour": 1}"#).is_err());
    }
}
