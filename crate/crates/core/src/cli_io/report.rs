//! Verification report and its deterministic JSON encoding.

use std::collections::BTreeMap;
use std::io;

use serde::Serialize;
use serde_json::ser::Formatter;

use crate::error::{HexError, Result};
use crate::geodesic_flow::MuDecision;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub status: Status,
    /// Worst residual met; `null` when the check could not be evaluated.
    pub max_residual: Option<f64>,
    pub tolerance: f64,
    /// Grid or sample description, e.g. `"20x20"` or `"100 geodesics"`.
    pub grid: String,
    /// Location of the worst residual or of the failure.
    pub witness: Option<BTreeMap<String, f64>>,
    /// Check-specific scalars, e.g. negative-control values.
    pub detail: BTreeMap<String, f64>,
    pub error: Option<String>,
}

impl CheckResult {
    pub fn new(name: &str, tolerance: f64, grid: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            status: Status::Fail,
            max_residual: None,
            tolerance,
            grid: grid.into(),
            witness: None,
            detail: BTreeMap::new(),
            error: None,
        }
    }

    pub fn passed(&self) -> bool {
        self.status == Status::Pass
    }

    /// Sets the residual and passes iff it is below the tolerance.
    pub fn judge(mut self, residual: f64) -> Self {
        self.max_residual = Some(residual);
        self.status = if residual < self.tolerance { Status::Pass } else { Status::Fail };
        self
    }

    pub fn and(mut self, ok: bool) -> Self {
        if !ok {
            self.status = Status::Fail;
        }
        self
    }

    pub fn at(mut self, pairs: &[(&str, f64)]) -> Self {
        self.witness = Some(pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect());
        self
    }

    pub fn with(mut self, key: &str, value: f64) -> Self {
        self.detail.insert(key.into(), value);
        self
    }

    /// A failed check carrying the error and, when the error has one, its location.
    pub fn failed(mut self, err: &HexError) -> Self {
        self.status = Status::Fail;
        self.error = Some(err.to_string());
        if let Some(w) = error_witness(err) {
            self.witness = Some(w);
        }
        self
    }
}

/// The point an error refers to, if any.
pub fn error_witness(err: &HexError) -> Option<BTreeMap<String, f64>> {
    let pairs: Vec<(&str, f64)> = match *err {
        HexError::DegenerateMetric { u, v, .. }
        | HexError::NotASolution { u, v, .. }
        | HexError::ComplexRoots { u, v }
        | HexError::RepeatedRoots { u, v }
        | HexError::NonTransversal { u, v } => vec![("u", u), ("v", v)],
        HexError::NoRealIntersection { z, y } | HexError::SlopeAmbiguity { z, y } => vec![("z", z), ("y", y)],
        HexError::PositivityViolation { at, .. } => vec![("s", at)],
        HexError::DeltaVanished { s } | HexError::ConstraintDrift { s, .. } => vec![("s", s)],
        HexError::DomainExit { t, .. } => vec![("t", t)],
        HexError::NegativeDiscriminant { r, .. } | HexError::IntervalExhausted { r } => vec![("r", r)],
        _ => return None,
    };
    Some(pairs.into_iter().map(|(k, v)| (k.to_string(), v)).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationReport {
    pub schema_version: u32,
    pub command: String,
    pub family: String,
    pub seed: u64,
    pub grid_n: usize,
    pub mu: Option<MuDecision>,
    /// Constant Gaussian curvature, when the family has one.
    pub curvature_constant: Option<f64>,
    pub checks: Vec<CheckResult>,
    pub all_passed: bool,
    pub outputs: Vec<String>,
}

impl VerificationReport {
    pub fn check(&self, name: &str) -> Option<&CheckResult> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn exit_code(&self) -> i32 {
        if self.all_passed {
            0
        } else {
            1
        }
    }
}

/// Pretty JSON with every float written as `d.dddddddddddddddde±x`
/// (17 significant digits).
struct FixedFloat<'a> {
    inner: serde_json::ser::PrettyFormatter<'a>,
}

macro_rules! forward {
    ($($name:ident($($arg:ident: $t:ty),*);)*) => {
        $(
            fn $name<W: ?Sized + io::Write>(&mut self, w: &mut W $(, $arg: $t)*) -> io::Result<()> {
                self.inner.$name(w $(, $arg)*)
            }
        )*
    };
}

impl Formatter for FixedFloat<'_> {
    fn write_f64<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        write!(w, "{value:.16e}")
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(w, value as f64)
    }

    forward! {
        begin_array();
        end_array();
        begin_array_value(first: bool);
        end_array_value();
        begin_object();
        end_object();
        begin_object_key(first: bool);
        end_object_key();
        begin_object_value();
        end_object_value();
    }
}

pub fn to_fixed_json<S: Serialize>(value: &S) -> Result<String> {
    let mut buf = Vec::new();
    let fmt = FixedFloat { inner: serde_json::ser::PrettyFormatter::with_indent(b"  ") };
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, fmt);
    value.serialize(&mut ser).map_err(|e| HexError::Io(e.to_string()))?;
    buf.push(b'\n');
    String::from_utf8(buf).map_err(|e| HexError::Io(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_have_seventeen_digits() {
        let s = to_fixed_json(&serde_json::json!({"x": 0.1, "y": [1.0, -2.5e-300], "n": 3})).unwrap();
        assert!(s.contains("1.0000000000000001e-1"), "{s}");
        assert!(s.contains("1.0000000000000000e0"));
        assert!(s.contains("-2.5000000000000000e-300"));
        assert!(s.contains("\"n\": 3"));
        let back: serde_json::Value = serde_json::from_str(&s).unwrap();
        assert_eq!(back["x"].as_f64(), Some(0.1));
    }

    #[test]
    fn nan_becomes_null() {
        let s = to_fixed_json(&vec![f64::NAN]).unwrap();
        assert!(s.contains("null"));
    }
}
