//! Verification reports with exact defects.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::galg::Section;
use crate::jets::Jet;
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    /// First nonzero coefficient of the residual; zero on pass.
    pub defect: Scalar,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub detail: String,
    /// Informational entries never fail a report.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub informational: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Report {
    pub title: String,
    pub checks: Vec<Check>,
}

impl Report {
    pub fn new(title: impl Into<String>) -> Self {
        Self {
            title: title.into(),
            checks: Vec::new(),
        }
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed || c.informational)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed && !c.informational)
    }

    pub fn find(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn extend(&mut self, other: Report) {
        let prefix = other.title;
        self.checks.extend(other.checks.into_iter().map(|mut c| {
            c.name = format!("{prefix}/{}", c.name);
            c
        }));
    }

    /// Record `residual == 0`.
    pub fn scalar_zero(&mut self, name: impl Into<String>, residual: Scalar) {
        let passed = residual.is_zero();
        self.checks.push(Check {
            name: name.into(),
            passed,
            defect: residual,
            detail: String::new(),
            informational: false,
        });
    }

    /// Record that a jet vanishes identically at its reliable order.
    pub fn jet_zero(&mut self, name: impl Into<String>, residual: &Jet) {
        let (defect, detail) = match residual.derivatives().next() {
            None => (Scalar::zero(), String::new()),
            Some((a, c)) => (c.clone(), format!("at ∂^{:?}", a.as_slice())),
        };
        self.checks.push(Check {
            name: name.into(),
            passed: defect.is_zero(),
            defect,
            detail,
            informational: false,
        });
    }

    /// Record that a section vanishes.
    pub fn section_zero(&mut self, name: impl Into<String>, residual: &Section) {
        let (defect, detail) = match residual.first_defect() {
            None => (Scalar::zero(), String::new()),
            Some((k, a, c)) => (
                c,
                format!(
                    "ħ^{} y^{:?} dx^{:?} at ∂^{:?}",
                    k.h,
                    k.sym.as_slice(),
                    k.asym_indices(),
                    a.as_slice()
                ),
            ),
        };
        self.checks.push(Check {
            name: name.into(),
            passed: defect.is_zero(),
            defect,
            detail,
            informational: false,
        });
    }

    pub fn flag(&mut self, name: impl Into<String>, passed: bool, detail: impl Into<String>) {
        self.checks.push(Check {
            name: name.into(),
            passed,
            defect: if passed {
                Scalar::zero()
            } else {
                Scalar::one()
            },
            detail: detail.into(),
            informational: false,
        });
    }

    pub fn info(&mut self, name: impl Into<String>, value: Scalar, detail: impl Into<String>) {
        self.checks.push(Check {
            name: name.into(),
            passed: value.is_zero(),
            defect: value,
            detail: detail.into(),
            informational: true,
        });
    }

    /// Propagate an error as a failed check rather than aborting the report.
    pub fn error(&mut self, name: impl Into<String>, err: &crate::Error) {
        self.flag(name, false, err.to_string());
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{}", self.title)?;
        for c in &self.checks {
            let tag = match (c.informational, c.passed) {
                (true, _) => "INFO",
                (false, true) => "PASS",
                (false, false) => "FAIL",
            };
            write!(f, "  [{tag}] {}", c.name)?;
            if !c.defect.is_zero() {
                write!(f, " defect={}", c.defect)?;
            }
            if !c.detail.is_empty() {
                write!(f, " ({})", c.detail)?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}
