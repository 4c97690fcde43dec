//! Command-line front end for `fedosov-core`.

pub mod error;
pub mod expr;
pub mod model;

use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use fedosov_core::fedosov::{FedosovContext, Kind, StarSeries, SuiteInputs};
use fedosov_core::geometry::{ChartModel, ConnectionKind};
use fedosov_core::report::Report;
use fedosov_core::{Frame, Jet, Scalar};
use serde::{Deserialize, Serialize};

pub use error::CliError;
use expr::{lower, parse, Expr};
use model::{ModelOptions, ModelSource};

#[derive(Debug, Parser)]
#[command(
    name = "fedosov",
    version,
    about = "Exact Fedosov star products on chart models"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compute f ∗ g at the base point.
    Star(PairArgs),
    /// Tabulate M_r(f, g) for r ≤ N.
    Mtable(PairArgs),
    /// Run the invariant suite for a model and kind.
    Verify(VerifyArgs),
    /// Model checks.
    #[command(subcommand)]
    Model(ModelCommand),
}

#[derive(Debug, Subcommand)]
pub enum ModelCommand {
    /// Check the geometric invariants of a model.
    Validate(ValidateArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum KindArg {
    Weyl,
    Wick,
}

impl From<KindArg> for Kind {
    fn from(k: KindArg) -> Kind {
        match k {
            KindArg::Weyl => Kind::Weyl,
            KindArg::Wick => Kind::Wick,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ConnectionArg {
    Kaehler,
    Canonical,
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
pub struct ModelSelect {
    /// Built-in model: flat-symplectic:n, flat-kaehler:n, fubini-study:n,
    /// poincare-disc.
    #[arg(long)]
    pub model: Option<String>,
    /// JSON model file.
    #[arg(long, value_name = "PATH")]
    pub model_file: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    #[command(flatten)]
    pub select: ModelSelect,
    /// Base point, comma separated. Complex frames take n values of z or
    /// 2n reals as (Re, Im) pairs.
    #[arg(long, allow_hyphen_values = true)]
    pub at: Option<String>,
    /// Positive rational scale of the Fubini-Study or disc metric.
    #[arg(long)]
    pub scale: Option<String>,
    #[arg(long, value_enum)]
    pub connection: Option<ConnectionArg>,
    /// Truncation order N in ħ.
    #[arg(long, default_value_t = 2)]
    pub order: u32,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct PairArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, value_enum, default_value_t = KindArg::Weyl)]
    pub kind: KindArg,
    #[arg(allow_hyphen_values = true)]
    pub f: String,
    #[arg(allow_hyphen_values = true)]
    pub g: String,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, value_enum, default_value_t = KindArg::Weyl)]
    pub kind: KindArg,
    /// Inputs f, g, h; defaults are fixed rational functions.
    #[arg(num_args = 0..=3, allow_hyphen_values = true)]
    pub inputs: Vec<String>,
    /// Holomorphic test function for the Wick-type checks.
    #[arg(long, allow_hyphen_values = true)]
    pub holomorphic: Option<String>,
    /// Antiholomorphic test function for the Wick-type checks.
    #[arg(long, allow_hyphen_values = true)]
    pub antiholomorphic: Option<String>,
    /// Highest s for the jet-locality checks.
    #[arg(long, default_value_t = 2)]
    pub order_checks: u32,
    /// Emit only failing checks.
    #[arg(long)]
    pub failures_only: bool,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long)]
    pub failures_only: bool,
}

/// One exact value in the output, rationals as `"p/q"` strings.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Entry {
    pub h: usize,
    pub re: String,
    pub im: String,
}

impl Entry {
    fn new(h: usize, v: &Scalar) -> Self {
        Self {
            h,
            re: v.re_string(),
            im: v.im_string(),
        }
    }

    pub fn value(&self) -> Result<Scalar, CliError> {
        Ok(Scalar::from_parts_str(&self.re, &self.im)?)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct StarOutput {
    pub model: String,
    pub kind: Kind,
    pub order: u32,
    pub base_point: Vec<Scalar>,
    pub f: String,
    pub g: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub coeffs: Vec<Entry>,
    pub m_values: Vec<Entry>,
}

impl StarOutput {
    /// The series this output was produced from.
    pub fn series(&self) -> Result<StarSeries, CliError> {
        let coeffs = self
            .coeffs
            .iter()
            .map(Entry::value)
            .collect::<Result<_, _>>()?;
        Ok(StarSeries::from_coeffs(coeffs))
    }
}

#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "camelCase")]
struct ReportOutput<'a> {
    model: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    kind: Option<Kind>,
    order: u32,
    jet_order: u32,
    base_point: &'a [Scalar],
    #[serde(skip_serializing_if = "Option::is_none")]
    inputs: Option<Vec<String>>,
    passed: bool,
    report: Report,
}

struct Prepared {
    model: ChartModel,
    order: u32,
}

fn prepare(args: &ModelArgs) -> Result<Prepared, CliError> {
    let source = match (&args.select.model, &args.select.model_file) {
        (Some(spec), None) => ModelSource::Builtin(spec.clone()),
        (None, Some(path)) => ModelSource::from_file(path)?,
        _ => {
            return Err(CliError::Config(
                "give exactly one of --model and --model-file".into(),
            ))
        }
    };
    let opts = ModelOptions {
        at: args.at.clone(),
        scale: args.scale.clone(),
        connection: args.connection.map(|c| match c {
            ConnectionArg::Kaehler => ConnectionKind::Kaehler,
            ConnectionArg::Canonical => ConnectionKind::Canonical,
        }),
    };
    let model = model::build(&source, &opts, FedosovContext::jet_order_for(args.order))?;
    Ok(Prepared {
        model,
        order: args.order,
    })
}

fn context(p: Prepared, kind: Kind) -> Result<FedosovContext, CliError> {
    if kind == Kind::Wick && p.model.frame() != Frame::Complex {
        return Err(CliError::Config(format!(
            "kind wick requires a complex-frame model, `{}` is real",
            p.model.name()
        )));
    }
    if kind == Kind::Wick && p.model.connection_kind() != ConnectionKind::Kaehler {
        return Err(CliError::Config(
            "kind wick requires the Kähler connection".into(),
        ));
    }
    Ok(FedosovContext::new(p.model, kind, p.order)?)
}

fn input(src: &str, cx: &FedosovContext) -> Result<(Expr, Jet), CliError> {
    let e = parse(src)?;
    let m = cx.model();
    let j = lower(&e, m.frame(), m.base_point(), m.jet_order())?;
    Ok((e, j))
}

fn write_json<T: Serialize>(out: &mut dyn Write, value: &T) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).expect("serializable output");
    writeln!(out, "{text}").map_err(io_error)
}

fn io_error(e: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("cannot write output: {e}"))
}

fn write_csv(out: &mut dyn Write, header: &[&str], rows: Vec<Vec<String>>) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header).map_err(io_error)?;
    for r in rows {
        w.write_record(&r).map_err(io_error)?;
    }
    w.flush().map_err(io_error)
}

fn star(args: &PairArgs, tabulate: bool, out: &mut dyn Write) -> Result<bool, CliError> {
    let cx = context(prepare(&args.model)?, args.kind.into())?;
    let (fe, f) = input(&args.f, &cx)?;
    let (ge, g) = input(&args.g, &cx)?;
    let series = cx.star(&f, &g)?;
    let entries = |v: &[Scalar]| {
        v.iter()
            .enumerate()
            .map(|(h, c)| Entry::new(h, c))
            .collect::<Vec<_>>()
    };
    let result = StarOutput {
        model: cx.model().name().to_string(),
        kind: cx.kind(),
        order: cx.order(),
        base_point: cx.model().base_point().to_vec(),
        f: fe.to_string(),
        g: ge.to_string(),
        coeffs: if tabulate {
            Vec::new()
        } else {
            entries(&series.coeffs)
        },
        m_values: entries(&series.m_values),
    };
    match (args.model.format, tabulate) {
        (Format::Json, _) => write_json(out, &result)?,
        (Format::Csv, true) => write_csv(
            out,
            &["h", "m_re", "m_im"],
            result
                .m_values
                .iter()
                .map(|e| vec![e.h.to_string(), e.re.clone(), e.im.clone()])
                .collect(),
        )?,
        (Format::Csv, false) => write_csv(
            out,
            &["h", "c_re", "c_im", "m_re", "m_im"],
            result
                .coeffs
                .iter()
                .zip(&result.m_values)
                .map(|(c, m)| {
                    vec![
                        c.h.to_string(),
                        c.re.clone(),
                        c.im.clone(),
                        m.re.clone(),
                        m.im.clone(),
                    ]
                })
                .collect(),
        )?,
    }
    Ok(true)
}

fn emit_report(
    out: &mut dyn Write,
    format: Format,
    mut payload: ReportOutput<'_>,
    failures_only: bool,
) -> Result<bool, CliError> {
    let passed = payload.report.passed();
    payload.passed = passed;
    if failures_only {
        payload
            .report
            .checks
            .retain(|c| !c.passed && !c.informational);
    }
    match format {
        Format::Json => write_json(out, &payload)?,
        Format::Csv => write_csv(
            out,
            &["name", "status", "defect_re", "defect_im", "detail"],
            payload
                .report
                .checks
                .iter()
                .map(|c| {
                    let status = match (c.informational, c.passed) {
                        (true, _) => "info",
                        (false, true) => "pass",
                        (false, false) => "fail",
                    };
                    vec![
                        c.name.clone(),
                        status.into(),
                        c.defect.re_string(),
                        c.defect.im_string(),
                        c.detail.clone(),
                    ]
                })
                .collect(),
        )?,
    }
    Ok(passed)
}

/// Default suite inputs per frame: `f, g, h, holomorphic, antiholomorphic`.
fn default_inputs(frame: Frame) -> [&'static str; 5] {
    match frame {
        Frame::Real => ["1/(2 + x1^2 + x2^2)", "x1^2*x2 + x2", "x1 + x2^3", "", ""],
        Frame::Complex => [
            "1/(2 + z1*zb1)",
            "z1^2*zb1 + zb1",
            "z1 + zb1^2",
            "z1^2 + 3*z1",
            "zb1^3 - zb1",
        ],
    }
}

fn verify(args: &VerifyArgs, out: &mut dyn Write) -> Result<bool, CliError> {
    let cx = context(prepare(&args.model)?, args.kind.into())?;
    let defaults = default_inputs(cx.frame());
    let src: Vec<&str> = (0..3)
        .map(|k| args.inputs.get(k).map_or(defaults[k], String::as_str))
        .collect();
    let (fe, f) = input(src[0], &cx)?;
    let (ge, g) = input(src[1], &cx)?;
    let (he, h) = input(src[2], &cx)?;
    let mut names = vec![fe.to_string(), ge.to_string(), he.to_string()];
    let (mut holomorphic, mut antiholomorphic) = (None, None);
    if cx.kind() == Kind::Wick {
        let (hs, as_) = (
            args.holomorphic.as_deref().unwrap_or(defaults[3]),
            args.antiholomorphic.as_deref().unwrap_or(defaults[4]),
        );
        let (he, hj) = input(hs, &cx)?;
        let (ae, aj) = input(as_, &cx)?;
        names.push(he.to_string());
        names.push(ae.to_string());
        holomorphic = Some(hj);
        antiholomorphic = Some(aj);
    }
    let inputs = SuiteInputs {
        f,
        g,
        h,
        holomorphic,
        antiholomorphic,
        order_checks: args.order_checks,
    };
    let report = cx.verify_suite(&inputs);
    let payload = ReportOutput {
        model: cx.model().name(),
        kind: Some(cx.kind()),
        order: cx.order(),
        jet_order: cx.model().jet_order(),
        base_point: cx.model().base_point(),
        inputs: Some(names),
        passed: false,
        report,
    };
    emit_report(out, args.model.format, payload, args.failures_only)
}

fn validate(args: &ValidateArgs, out: &mut dyn Write) -> Result<bool, CliError> {
    let p = prepare(&args.model)?;
    let m = &p.model;
    let payload = ReportOutput {
        model: m.name(),
        kind: None,
        order: p.order,
        jet_order: m.jet_order(),
        base_point: m.base_point(),
        inputs: None,
        passed: false,
        report: m.validate(),
    };
    emit_report(out, args.model.format, payload, args.failures_only)
}

/// Execute a parsed command, writing artifacts to `out`. `Ok(false)` means
/// some requested check failed.
pub fn run(cli: &Cli, out: &mut dyn Write) -> Result<bool, CliError> {
    match &cli.command {
        Command::Star(a) => star(a, false, out),
        Command::Mtable(a) => star(a, true, out),
        Command::Verify(a) => verify(a, out),
        Command::Model(ModelCommand::Validate(a)) => validate(a, out),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_args(args: &[&str]) -> (Result<bool, CliError>, String) {
        let cli =
            Cli::try_parse_from(std::iter::once("fedosov").chain(args.iter().copied())).unwrap();
        let mut buf = Vec::new();
        let r = run(&cli, &mut buf);
        (r, String::from_utf8(buf).unwrap())
    }

    #[test]
    fn normal_order_pair() {
        let (r, text) = run_args(&[
            "star",
            "--model",
            "flat-kaehler:1",
            "--kind",
            "wick",
            "--order",
            "3",
            "--at",
            "0,0",
            "z1",
            "zb1",
        ]);
        assert!(r.unwrap());
        let out: StarOutput = serde_json::from_str(&text).unwrap();
        let s = out.series().unwrap();
        assert_eq!(
            s.coeffs,
            vec![
                Scalar::zero(),
                Scalar::from_int(2),
                Scalar::zero(),
                Scalar::zero()
            ]
        );
        // M₁ = 2·(2/i)
        let m1 = Scalar::complex(Scalar::zero(), Scalar::from_int(-4));
        assert_eq!(out.m_values[1].value().unwrap(), m1);
        assert_eq!(out.base_point, vec![Scalar::zero(), Scalar::zero()]);
    }

    #[test]
    fn wick_on_real_model_is_a_config_error() {
        let (r, _) = run_args(&[
            "star",
            "--model",
            "flat-symplectic:1",
            "--kind",
            "wick",
            "x1",
            "x2",
        ]);
        assert!(matches!(r, Err(CliError::Config(_))));
    }

    #[test]
    fn star_output_round_trips() {
        let (r, text) = run_args(&[
            "star",
            "--model",
            "fubini-study:1",
            "--at",
            "1/2,-1/3",
            "--order",
            "2",
            "1/(1 + z1*zb1)",
            "z1 - i*zb1^2",
        ]);
        assert!(r.unwrap());
        let parsed: StarOutput = serde_json::from_str(&text).unwrap();
        let again = serde_json::to_string_pretty(&parsed).unwrap();
        assert_eq!(again.trim_end(), text.trim_end());
        let s = parsed.series().unwrap();
        let m: Vec<Scalar> = parsed.m_values.iter().map(|e| e.value().unwrap()).collect();
        assert_eq!(s.m_values, m);
        assert!(!text.contains('.'), "no floats in {text}");
    }

    #[test]
    fn mtable_csv() {
        let (r, text) = run_args(&[
            "mtable",
            "--model",
            "flat-symplectic:1",
            "--order",
            "2",
            "--format",
            "csv",
            "x1",
            "x2",
        ]);
        assert!(r.unwrap());
        assert_eq!(text, "h,m_re,m_im\n0,0,0\n1,1,0\n2,0,0\n");
    }

    #[test]
    fn singular_input() {
        let (r, _) = run_args(&["star", "--model", "flat-kaehler:1", "1/z1", "zb1"]);
        assert_eq!(r.unwrap_err(), CliError::Singularity("z1".into()));
    }
}
