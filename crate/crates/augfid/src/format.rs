//! Channel files, built-in channel aliases, Bloch-vector labels and the
//! CSV/JSON table writers.

use std::fmt::Write as _;
use std::path::Path;

use augfid_core::channels::{extremal_restricted, PauliChannel, ProcessMatrix, RestrictedChi, Sense};
use augfid_core::distributions::BlochVector;
use augfid_core::linalg::ComplexMatrix;
use num_complex::Complex64;
use serde::Deserialize;
use serde_json::{Map, Value};

use crate::error::CliError;
use crate::manifest::RunManifest;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct Entry {
    re: f64,
    #[serde(default)]
    im: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RestrictedFields {
    chi00: f64,
    chi11: f64,
    chi22: f64,
    chi33: f64,
    chi03: f64,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum ChannelFile {
    Full { n_qubits: usize, chi: Vec<Vec<Entry>> },
    Restricted { restricted: RestrictedFields },
    Pauli { pauli: [f64; 4] },
}

/// Parses a χ-matrix document. Physicality is left to the caller.
pub fn parse_channel_json(text: &str) -> Result<ProcessMatrix, CliError> {
    let file: ChannelFile =
        serde_json::from_str(text).map_err(|e| CliError::Parse(format!("channel file: {e}")))?;
    match file {
        ChannelFile::Full { n_qubits, chi } => {
            let rows = chi.len();
            let mut data = Vec::with_capacity(rows * rows);
            for row in &chi {
                if row.len() != rows {
                    return Err(CliError::Parse(format!("chi row of length {} in a {rows}-row matrix", row.len())));
                }
                data.extend(row.iter().map(|e| Complex64::new(e.re, e.im)));
            }
            let m = ComplexMatrix::from_vec(rows, rows, data).map_err(|e| CliError::Parse(e.to_string()))?;
            ProcessMatrix::new(n_qubits, m).map_err(|e| CliError::Parse(format!("channel file: {e}")))
        }
        ChannelFile::Restricted { restricted: r } => {
            Ok(RestrictedChi { chi00: r.chi00, chi11: r.chi11, chi22: r.chi22, chi33: r.chi33, chi03: r.chi03 }.embed())
        }
        ChannelFile::Pauli { pauli } => {
            ProcessMatrix::from_diagonal(1, &pauli).map_err(|e| CliError::Parse(e.to_string()))
        }
    }
}

/// Serializes a process matrix in the full file layout.
pub fn channel_to_json(pm: &ProcessMatrix) -> Value {
    let chi = pm.chi();
    let rows: Vec<Value> = (0..chi.rows())
        .map(|r| {
            Value::Array(
                (0..chi.cols())
                    .map(|c| {
                        let z = chi[(r, c)];
                        serde_json::json!({ "re": z.re, "im": z.im })
                    })
                    .collect(),
            )
        })
        .collect();
    serde_json::json!({ "n_qubits": pm.n_qubits(), "chi": rows })
}

/// A channel named on the command line: a built-in alias or a file path.
#[derive(Debug, Clone)]
pub struct LoadedChannel {
    pub label: String,
    pub process: ProcessMatrix,
    /// `(path, contents)` when read from disk.
    pub source: Option<(String, Vec<u8>)>,
}

/// Table 1 channels of the reference study.
pub const PC1: [f64; 4] = [0.985, 0.012, 0.002, 0.001];
pub const PC2: [f64; 4] = [0.985, 0.010, 0.004, 0.001];

/// Resolves `pc1`, `pc2`, `depol:<χ00>`, `ext-min:<χ00>` and `ext-max:<χ00>`.
pub fn alias(name: &str) -> Option<Result<ProcessMatrix, CliError>> {
    let level = |s: &str| -> Result<f64, CliError> {
        s.parse::<f64>().map_err(|_| CliError::Parse(format!("bad chi00 in channel alias '{name}'")))
    };
    let domain = |e: augfid_core::Error| CliError::Domain(format!("channel '{name}': {e}"));
    let out = match name.split_once(':') {
        None if name == "pc1" => Ok(PauliChannel::new(PC1).map_err(domain).map(|p| p.to_process())),
        None if name == "pc2" => Ok(PauliChannel::new(PC2).map_err(domain).map(|p| p.to_process())),
        Some(("depol", x)) => level(x).map(|c| ProcessMatrix::depolarizing(1, c).map_err(domain)),
        Some(("ext-min", x)) => level(x).map(|c| extremal_restricted(c, Sense::Min).map(|r| r.embed()).map_err(domain)),
        Some(("ext-max", x)) => level(x).map(|c| extremal_restricted(c, Sense::Max).map(|r| r.embed()).map_err(domain)),
        _ => return None,
    };
    Some(out.and_then(|r| r))
}

/// An alias, or else a channel file.
pub fn load_channel(arg: &str) -> Result<LoadedChannel, CliError> {
    if let Some(pm) = alias(arg) {
        return Ok(LoadedChannel { label: arg.to_string(), process: pm?, source: None });
    }
    let bytes = std::fs::read(Path::new(arg)).map_err(|e| CliError::Parse(format!("{arg}: {e}")))?;
    let text = std::str::from_utf8(&bytes).map_err(|_| CliError::Parse(format!("{arg}: not UTF-8")))?;
    let process = parse_channel_json(text).map_err(|e| match e {
        CliError::Parse(m) => CliError::Parse(format!("{arg}: {m}")),
        other => other,
    })?;
    Ok(LoadedChannel { label: arg.to_string(), process, source: Some((arg.to_string(), bytes)) })
}

const AXIS_LABELS: [(&str, BlochVector); 6] = [
    ("+x", BlochVector::PLUS_X),
    ("-x", BlochVector::MINUS_X),
    ("+y", BlochVector::PLUS_Y),
    ("-y", BlochVector::MINUS_Y),
    ("+z", BlochVector::PLUS_Z),
    ("-z", BlochVector::MINUS_Z),
];

/// `+x`, `-z`, `y` (same as `+y`), or an explicit direction `x:y:z`, normalized.
pub fn parse_center(s: &str) -> Result<BlochVector, CliError> {
    let t = s.trim();
    let key = if t.len() == 1 { format!("+{t}") } else { t.to_string() };
    if let Some((_, v)) = AXIS_LABELS.iter().find(|(l, _)| *l == key) {
        return Ok(*v);
    }
    let parts: Vec<&str> = t.split(':').collect();
    if parts.len() != 3 {
        return Err(CliError::Parse(format!("center '{s}' is neither an axis label nor x:y:z")));
    }
    let mut c = [0.0; 3];
    for (x, p) in c.iter_mut().zip(&parts) {
        *x = p.trim().parse().map_err(|_| CliError::Parse(format!("center '{s}': bad component '{p}'")))?;
    }
    BlochVector::normalized(c[0], c[1], c[2]).map_err(|e| CliError::Domain(format!("center '{s}': {e}")))
}

/// Axis label of `v`, or `x:y:z` at full precision.
pub fn center_label(v: &BlochVector) -> String {
    if let Some((l, _)) = AXIS_LABELS.iter().find(|(_, a)| a == v) {
        return (*l).to_string();
    }
    let [x, y, z] = v.to_array();
    format!("{}:{}:{}", num(x), num(y), num(z))
}

/// Fixed 17-significant-digit rendering used for every CSV number.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

#[derive(Debug, Clone, PartialEq)]
pub enum Field {
    Num(f64),
    Int(u64),
    Bool(bool),
    Text(String),
}

impl Field {
    fn csv(&self) -> String {
        match self {
            Field::Num(x) => num(*x),
            Field::Int(n) => n.to_string(),
            Field::Bool(b) => b.to_string(),
            Field::Text(s) => s.clone(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Field::Num(x) => serde_json::Number::from_f64(*x).map(Value::Number).unwrap_or(Value::Null),
            Field::Int(n) => Value::from(*n),
            Field::Bool(b) => Value::Bool(*b),
            Field::Text(s) => Value::String(s.clone()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

/// A command result: named columns, rows, and extra `key: value` metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Field>>,
    pub meta: Vec<(String, String)>,
    /// Single-object results render as one JSON object.
    pub single: bool,
}

impl Table {
    pub fn new(columns: &[&'static str]) -> Self {
        Self { columns: columns.to_vec(), rows: Vec::new(), meta: Vec::new(), single: false }
    }

    pub fn object(fields: Vec<(&'static str, Field)>) -> Self {
        let (columns, row): (Vec<_>, Vec<_>) = fields.into_iter().unzip();
        Self { columns, rows: vec![row], meta: Vec::new(), single: true }
    }

    pub fn push(&mut self, row: Vec<Field>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn meta(mut self, key: &str, value: impl ToString) -> Self {
        self.meta.push((key.to_string(), value.to_string()));
        self
    }

    pub fn render(&self, manifest: &RunManifest, format: Format) -> String {
        match format {
            Format::Csv => self.render_csv(manifest),
            Format::Json => self.render_json(manifest),
        }
    }

    fn render_csv(&self, manifest: &RunManifest) -> String {
        let mut out = String::new();
        for (k, v) in manifest.header_lines().iter().chain(&self.meta) {
            let _ = writeln!(out, "# {k}: {v}");
        }
        let _ = writeln!(out, "{}", self.columns.join(","));
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(Field::csv).collect();
            let _ = writeln!(out, "{}", cells.join(","));
        }
        out
    }

    fn render_json(&self, manifest: &RunManifest) -> String {
        let mut root = Map::new();
        root.insert("manifest".into(), serde_json::to_value(manifest).unwrap_or(Value::Null));
        if !self.meta.is_empty() {
            let meta: Map<String, Value> = self.meta.iter().map(|(k, v)| (k.clone(), Value::String(v.clone()))).collect();
            root.insert("meta".into(), Value::Object(meta));
        }
        if self.single && self.rows.len() == 1 {
            let obj: Map<String, Value> =
                self.columns.iter().zip(&self.rows[0]).map(|(c, f)| (c.to_string(), f.json())).collect();
            root.insert("result".into(), Value::Object(obj));
        } else {
            root.insert("columns".into(), Value::from(self.columns.clone()));
            let rows: Vec<Value> = self.rows.iter().map(|r| Value::Array(r.iter().map(Field::json).collect())).collect();
            root.insert("rows".into(), Value::Array(rows));
        }
        let mut s = serde_json::to_string_pretty(&Value::Object(root)).unwrap_or_default();
        s.push('\n');
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use augfid_core::fidelity::uniform_avg;
    use proptest::prelude::*;

    #[test]
    fn parses_the_three_layouts() {
        let full = r#"{"n_qubits": 1, "chi": [
            [{"re": 1, "im": 0}, {"re": 0, "im": 0}, {"re": 0, "im": 0}, {"re": 0, "im": 0}],
            [{"re": 0, "im": 0}, {"re": 0, "im": 0}, {"re": 0, "im": 0}, {"re": 0, "im": 0}],
            [{"re": 0, "im": 0}, {"re": 0, "im": 0}, {"re": 0, "im": 0}, {"re": 0, "im": 0}],
            [{"re": 0, "im": 0}, {"re": 0, "im": 0}, {"re": 0, "im": 0}, {"re": 0, "im": 0}]]}"#;
        assert_eq!(parse_channel_json(full).unwrap().chi00(), 1.0);
        let r = r#"{"restricted": {"chi00": 0.985, "chi11": 0.012, "chi22": 0.002, "chi33": 0.001, "chi03": 0.0}}"#;
        assert!((uniform_avg(&parse_channel_json(r).unwrap()) - 0.99).abs() < 1e-12);
        let p = r#"{"pauli": [0.985, 0.010, 0.004, 0.001]}"#;
        assert!(parse_channel_json(p).unwrap().validate(1e-10).is_valid(1e-10));
    }

    #[test]
    fn full_layout_round_trips() {
        let pm = extremal_restricted(0.9, Sense::Min).unwrap().embed();
        let back = parse_channel_json(&channel_to_json(&pm).to_string()).unwrap();
        assert_eq!(back, pm);
    }

    #[test]
    fn rejects_malformed_documents() {
        for bad in ["{", r#"{"pauli": [1, 0, 0]}"#, r#"{"n_qubits": 3, "chi": []}"#, r#"{"n_qubits": 1, "chi": [[{"re": 1}]]}"#] {
            assert!(matches!(parse_channel_json(bad), Err(CliError::Parse(_))), "{bad}");
        }
    }

    #[test]
    fn aliases() {
        let pc1 = alias("pc1").unwrap().unwrap();
        assert_eq!(pc1.entry(1, 1).re, 0.012);
        assert!((alias("ext-min:0.985").unwrap().unwrap().entry(0, 3).re) < 0.0);
        assert!(matches!(alias("depol:abc"), Some(Err(CliError::Parse(_)))));
        assert!(matches!(alias("depol:1.5"), Some(Err(CliError::Domain(_)))));
        assert!(alias("chi.json").is_none());
    }

    #[test]
    fn centers() {
        assert_eq!(parse_center("-x").unwrap(), BlochVector::MINUS_X);
        assert_eq!(parse_center("z").unwrap(), BlochVector::PLUS_Z);
        let v = parse_center("1:1:0").unwrap();
        assert!((v.norm_squared() - 1.0).abs() < 1e-15);
        assert!(parse_center("0:0:0").is_err() && parse_center("up").is_err());
        assert_eq!(center_label(&BlochVector::MINUS_Y), "-y");
    }

    proptest! {
        #[test]
        fn csv_numbers_round_trip(x in any::<f64>().prop_filter("finite", |x| x.is_finite())) {
            prop_assert_eq!(num(x).parse::<f64>().unwrap(), x);
        }
    }
}
