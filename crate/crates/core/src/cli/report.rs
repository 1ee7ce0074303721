use std::fmt::Write as _;
use std::io;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::ser::{CompactFormatter, Formatter, PrettyFormatter};
use serde_json::Value;

use super::AppError;
use crate::thermo::LambdaCurve;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Text,
}

/// One measured quantity of an invariant suite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metric {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    pub passed: bool,
}

impl Metric {
    /// Passes when `value ≤ threshold`.
    pub fn at_most(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        Metric {
            name: name.into(),
            value,
            threshold,
            passed: value <= threshold,
        }
    }

    /// Passes when `value ≥ threshold`.
    pub fn at_least(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        Metric {
            name: name.into(),
            value,
            threshold,
            passed: value >= threshold,
        }
    }

    pub fn flag(name: impl Into<String>, ok: bool) -> Self {
        Metric {
            name: name.into(),
            value: if ok { 1.0 } else { 0.0 },
            threshold: 1.0,
            passed: ok,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteResult {
    pub name: String,
    pub passed: bool,
    pub metrics: Vec<Metric>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl SuiteResult {
    pub fn from_metrics(name: &str, metrics: Vec<Metric>) -> Self {
        SuiteResult {
            name: name.to_string(),
            passed: metrics.iter().all(|m| m.passed),
            metrics,
            error: None,
        }
    }

    pub fn errored(name: &str, metrics: Vec<Metric>, error: String) -> Self {
        SuiteResult {
            name: name.to_string(),
            passed: false,
            metrics,
            error: Some(error),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CylinderValue {
    pub word: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumPayload {
    pub beta: f64,
    pub depth: usize,
    pub dimension: usize,
    pub lambda: f64,
    pub residual_right: f64,
    pub residual_left: f64,
    pub iterations: usize,
    pub h: Vec<CylinderValue>,
    pub nu: Vec<CylinderValue>,
    /// `(k, ‖λ^{−k}𝓛^k 1 − ν(1)h‖_∞)` for the last sweeps up to 60.
    pub rpf_tail: Vec<(usize, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidatePayload {
    pub matrix: Vec<String>,
    pub n: usize,
    pub primitive: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub primitivity_exponent: Option<usize>,
    pub depth: usize,
    pub cylinders: usize,
    pub potential_depth: usize,
    pub h_min: f64,
    pub h_max: f64,
    pub h_exceeds_one: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub holder_exponent: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub holder_constant: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BetaStarPayload {
    pub beta_star: f64,
    pub lambda_at: f64,
    pub bracket: (f64, f64),
    pub iterations: usize,
    pub depth_used: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KmsPayload {
    pub monomial: String,
    pub beta_star: f64,
    pub re: f64,
    pub im: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KmsPairRecord {
    pub a: String,
    pub b: String,
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KmsCheckPayload {
    pub beta_star: f64,
    pub tol: f64,
    pub max_delta: f64,
    pub pairs: Vec<KmsPairRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Payload {
    Validate(ValidatePayload),
    Spectrum(SpectrumPayload),
    Curve(LambdaCurve),
    BetaStar(BetaStarPayload),
    Kms(KmsPayload),
    KmsCheck(KmsCheckPayload),
    Check,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub elapsed_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportDocument {
    pub command: String,
    pub config_hash: String,
    pub payload: Payload,
    pub suites: Vec<SuiteResult>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timing: Option<Timing>,
}

impl ReportDocument {
    pub fn passed(&self) -> bool {
        self.suites.iter().all(|s| s.passed)
    }
}

/// Writes every float with 17 significant digits; layout is delegated.
struct Sci17<F>(F);

impl<F: Formatter> Formatter for Sci17<F> {
    fn write_f64<W: ?Sized + io::Write>(&mut self, w: &mut W, v: f64) -> io::Result<()> {
        write!(w, "{v:.16e}")
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, w: &mut W, v: f32) -> io::Result<()> {
        self.write_f64(w, v as f64)
    }

    fn begin_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }

    fn end_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }

    fn begin_array_value<W: ?Sized + io::Write>(
        &mut self,
        w: &mut W,
        first: bool,
    ) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }

    fn end_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }

    fn begin_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }

    fn end_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }

    fn begin_object_key<W: ?Sized + io::Write>(
        &mut self,
        w: &mut W,
        first: bool,
    ) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }

    fn begin_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }

    fn end_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

/// JSON with 17-significant-digit floats, pretty or compact.
pub fn to_json_bytes<T: Serialize>(value: &T, pretty: bool) -> serde_json::Result<Vec<u8>> {
    let mut out = Vec::new();
    if pretty {
        let mut ser =
            serde_json::Serializer::with_formatter(&mut out, Sci17(PrettyFormatter::new()));
        value.serialize(&mut ser)?;
        out.push(b'\n');
    } else {
        let mut ser = serde_json::Serializer::with_formatter(&mut out, Sci17(CompactFormatter));
        value.serialize(&mut ser)?;
    }
    Ok(out)
}

fn scalar(v: &Value) -> String {
    match v {
        Value::Null => "null".into(),
        Value::Bool(b) => b.to_string(),
        Value::Number(n) => match (n.as_u64(), n.as_i64(), n.as_f64()) {
            (Some(u), _, _) => u.to_string(),
            (None, Some(i), _) => i.to_string(),
            (_, _, Some(f)) => format!("{f:.16e}"),
            _ => n.to_string(),
        },
        Value::String(s) => s.clone(),
        _ => unreachable!("containers are flattened"),
    }
}

fn flatten(prefix: &str, v: &Value, out: &mut Vec<(String, String)>) {
    let key = |k: &str| {
        if prefix.is_empty() {
            k.to_string()
        } else {
            format!("{prefix}.{k}")
        }
    };
    match v {
        Value::Object(map) => map.iter().for_each(|(k, v)| flatten(&key(k), v, out)),
        Value::Array(items) => items
            .iter()
            .enumerate()
            .for_each(|(i, v)| flatten(&key(&i.to_string()), v, out)),
        _ => out.push((prefix.to_string(), scalar(v))),
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn flattened(doc: &ReportDocument) -> Vec<(String, String)> {
    let value = serde_json::to_value(doc).expect("report serializes");
    let mut rows = Vec::new();
    flatten("", &value, &mut rows);
    rows
}

pub fn render(doc: &ReportDocument, format: Format) -> Vec<u8> {
    match format {
        Format::Json => to_json_bytes(doc, true).expect("report serializes"),
        Format::Csv => match &doc.payload {
            Payload::Curve(curve) => curve.to_csv().into_bytes(),
            _ => {
                let mut s = String::from("field,value\n");
                for (k, v) in flattened(doc) {
                    writeln!(s, "{},{}", csv_field(&k), csv_field(&v)).expect("write to string");
                }
                s.into_bytes()
            }
        },
        Format::Text => {
            let mut value = serde_json::to_value(doc).expect("report serializes");
            value.as_object_mut().expect("object").remove("suites");
            let mut rows = Vec::new();
            flatten("", &value, &mut rows);
            let width = rows.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
            let mut s = String::new();
            for (k, v) in rows {
                writeln!(s, "{k:<width$}  {v}").expect("write to string");
            }
            for suite in &doc.suites {
                let verdict = if suite.passed { "pass" } else { "FAIL" };
                writeln!(s, "[{verdict}] {}", suite.name).expect("write to string");
                for m in &suite.metrics {
                    let mark = if m.passed { " " } else { "!" };
                    writeln!(
                        s,
                        "  {mark} {:<32} {:.16e}  (threshold {:.16e})",
                        m.name, m.value, m.threshold
                    )
                    .expect("write to string");
                }
                if let Some(e) = &suite.error {
                    writeln!(s, "  ! error: {e}").expect("write to string");
                }
            }
            writeln!(s, "status  {}", if doc.passed() { "ok" } else { "FAILED" })
                .expect("write to string");
            s.into_bytes()
        }
    }
}

pub fn emit_report(
    doc: &ReportDocument,
    format: Format,
    out: Option<&Path>,
) -> Result<(), AppError> {
    let bytes = render(doc, format);
    match out {
        Some(path) => std::fs::write(path, &bytes)
            .map_err(|e| AppError::Io(format!("{}: {e}", path.display()))),
        None => {
            use std::io::Write;
            let mut stdout = io::stdout().lock();
            stdout
                .write_all(&bytes)
                .and_then(|_| stdout.flush())
                .map_err(|e| AppError::Io(format!("stdout: {e}")))
        }
    }
}
