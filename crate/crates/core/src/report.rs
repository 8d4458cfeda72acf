//! Stable encodings of reports.
//!
//! JSON floats are written with 17 significant digits (enough to round-trip
//! any `f64`) in exponent notation with trailing zeros trimmed; non-finite
//! values become `null`. A [`BoundReport`] is encoded with exactly the keys
//! `method`, `eps_lower`, `eps_raw`, `risk_lower`, `lambda_star` and
//! `params`; `gamma_star` and `flags` live inside `params`.
//!
//! Sweep CSV files start with a `# manifest: {...}` comment line followed
//! by the header `value,strong_eps,fano_eps,strong_risk,fano_risk,ratio`.

use std::io;

use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};
use serde_json::{json, Value};

use crate::applications::ComparisonReport;
use crate::converse::BoundReport;

/// Version of the JSON report layout and the CSV column order.
pub const FORMAT_VERSION: u32 = 1;

pub const CSV_HEADER: &str = "value,strong_eps,fano_eps,strong_risk,fano_risk,ratio";

/// `x` with 17 significant digits, e.g. `7.2388191924099101e0`; `None` for
/// non-finite input.
pub fn format_f64(x: f64) -> Option<String> {
    if !x.is_finite() {
        return None;
    }
    let s = format!("{x:.16e}");
    let (mantissa, exponent) = s.split_once('e').expect("exponent notation");
    let mantissa = if mantissa.contains('.') {
        mantissa.trim_end_matches('0').trim_end_matches('.')
    } else {
        mantissa
    };
    Some(format!("{mantissa}e{exponent}"))
}

/// Finite numbers as JSON numbers, everything else as `null`.
fn num(x: f64) -> Value {
    serde_json::Number::from_f64(x).map_or(Value::Null, Value::Number)
}

fn opt_num(x: Option<f64>) -> Value {
    x.map_or(Value::Null, num)
}

pub fn bound_report_json(report: &BoundReport) -> Value {
    let mut params = match &report.params {
        Value::Object(map) => Value::Object(map.clone()),
        Value::Null => json!({}),
        other => json!({ "value": other }),
    };
    params["gamma_star"] = opt_num(report.gamma_star);
    params["flags"] = serde_json::to_value(&report.flags).expect("unit enum");
    json!({
        "method": report.method,
        "eps_lower": num(report.eps_lower),
        "eps_raw": num(report.eps_raw),
        "risk_lower": opt_num(report.risk_lower),
        "lambda_star": opt_num(report.lambda_star),
        "params": params,
    })
}

pub fn comparison_json(report: &ComparisonReport) -> Value {
    json!({
        "app": report.app,
        "config": report.config,
        "strong": bound_report_json(&report.strong),
        "fano": bound_report_json(&report.fano),
        "asymptote": num(report.asymptote),
        "ratio": opt_num(report.ratio),
    })
}

/// Provenance embedded in every output file.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub config: Value,
    pub seed: Option<u64>,
    pub version: String,
    pub format_version: u32,
    pub timestamp: String,
}

impl RunManifest {
    pub fn new(command: impl Into<String>, config: Value, seed: Option<u64>, timestamp: impl Into<String>) -> Self {
        Self {
            command: command.into(),
            config,
            seed,
            version: env!("CARGO_PKG_VERSION").to_string(),
            format_version: FORMAT_VERSION,
            timestamp: timestamp.into(),
        }
    }
}

/// A report document: `{"manifest": ..., "report": ...}`.
pub fn document(manifest: &RunManifest, report: Value) -> Value {
    json!({ "manifest": manifest, "report": report })
}

/// Pretty-printing formatter that writes floats via [`format_f64`].
struct Sig17<'a>(PrettyFormatter<'a>);

impl Formatter for Sig17<'_> {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        match format_f64(value) {
            Some(s) => writer.write_all(s.as_bytes()),
            None => writer.write_all(b"null"),
        }
    }

    fn begin_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }

    fn end_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }

    fn begin_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
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

    fn begin_object_key<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }

    fn begin_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }

    fn end_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

/// Compact formatter with the same float encoding, for one-line embeds.
struct Sig17Compact;

impl Formatter for Sig17Compact {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        match format_f64(value) {
            Some(s) => writer.write_all(s.as_bytes()),
            None => writer.write_all(b"null"),
        }
    }
}

fn encode(value: &impl Serialize, formatter: impl Formatter) -> String {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, formatter);
    value.serialize(&mut ser).expect("serialising to memory");
    String::from_utf8(out).expect("serde_json writes UTF-8")
}

/// Indented JSON with 17-digit floats and a trailing newline.
pub fn to_json_string(value: &impl Serialize) -> String {
    let mut s = encode(value, Sig17(PrettyFormatter::with_indent(b"  ")));
    s.push('\n');
    s
}

/// Single-line JSON with 17-digit floats.
pub fn to_json_compact(value: &impl Serialize) -> String {
    encode(value, Sig17Compact)
}

fn cell(x: Option<f64>) -> String {
    x.and_then(format_f64).unwrap_or_default()
}

/// One CSV row per swept value.
pub fn sweep_csv(manifest: &RunManifest, values: &[f64], reports: &[ComparisonReport]) -> String {
    assert_eq!(values.len(), reports.len(), "one report per value");
    let mut out = format!("# manifest: {}\n{CSV_HEADER}\n", to_json_compact(manifest));
    for (v, r) in values.iter().zip(reports) {
        // The Fano ε of the sparse-recovery baseline is not defined; it is
        // reported as NaN internally and left empty here.
        let row = [
            cell(Some(*v)),
            cell(Some(r.strong.eps_lower)),
            cell((!r.fano.eps_raw.is_nan()).then_some(r.fano.eps_lower)),
            cell(r.strong.risk_lower),
            cell(r.fano.risk_lower),
            cell(r.ratio),
        ];
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::applications::{cs_bound, density_bound, CsConfig, DensityConfig};

    #[test]
    fn seventeen_digits_round_trip() {
        for x in [0.1, 1.0, -2.5e-300, 7.238_819_192_409_91, f64::MAX, f64::MIN_POSITIVE, 1.0 / 3.0] {
            let s = format_f64(x).unwrap();
            assert_eq!(s.parse::<f64>().unwrap().to_bits(), x.to_bits(), "{s}");
        }
        assert_eq!(format_f64(1.0).unwrap(), "1e0");
        assert_eq!(format_f64(0.25).unwrap(), "2.5e-1");
        assert_eq!(format_f64(f64::NAN), None);
    }

    #[test]
    fn bound_report_has_exactly_the_contract_keys() {
        let r = density_bound(&DensityConfig::new(1e11, 1.0, 0.1)).unwrap();
        let v = bound_report_json(&r.strong);
        let keys: Vec<&String> = v.as_object().unwrap().keys().collect();
        assert_eq!(keys, ["eps_lower", "eps_raw", "lambda_star", "method", "params", "risk_lower"]);
        assert!(v["params"]["flags"].is_array());
        assert!(v["params"].get("gamma_star").is_some());
    }

    #[test]
    fn json_round_trips_values_exactly() {
        let r = density_bound(&DensityConfig::new(1e11, 1.0, 0.1)).unwrap();
        let text = to_json_string(&comparison_json(&r));
        let back: Value = serde_json::from_str(&text).unwrap();
        assert_eq!(back["strong"]["eps_lower"].as_f64().unwrap().to_bits(), r.strong.eps_lower.to_bits());
        assert_eq!(to_json_string(&back), text);
    }

    #[test]
    fn csv_layout() {
        let cfg = CsConfig::new(1e6, 128.0, 0.05, 0.05);
        let r = cs_bound(&cfg).unwrap();
        let m = RunManifest::new("sweep", json!({}), None, "t");
        let csv = sweep_csv(&m, &[1e6], &[r]);
        let lines: Vec<&str> = csv.lines().collect();
        assert!(lines[0].starts_with("# manifest: {"));
        assert_eq!(lines[1], CSV_HEADER);
        assert_eq!(lines[2].split(',').count(), 6);
        assert_eq!(lines[2].split(',').nth(2), Some(""));
    }
}
