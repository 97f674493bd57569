//! Report tables and their JSON and CSV serializations.
//!
//! Every fractional number goes through [`Fixed4`] so output is byte-stable: four
//! fractional digits, ties rounded to even on the shortest decimal form of the value.

use std::fmt;
use std::io::{self, Write};
use std::path::Path;
use std::str::FromStr;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("cannot write {path}: {source}")]
    WriteFailure {
        path: String,
        #[source]
        source: io::Error,
    },
    #[error("csv output needs a destination directory")]
    CsvNeedsDirectory,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim().to_ascii_lowercase().as_str() {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            other => Err(format!("unknown format `{other}` (expected json or csv)")),
        }
    }
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Format::Json => "json",
            Format::Csv => "csv",
        })
    }
}

/// A decimal with exactly four fractional digits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Fixed4(i64);

impl Fixed4 {
    pub const SCALE: i64 = 10_000;

    pub fn from_units(units: i64) -> Self {
        Fixed4(units)
    }

    pub fn units(self) -> i64 {
        self.0
    }

    /// Rounds half to even, deciding ties on the shortest decimal that round-trips to `x`.
    pub fn from_f64(x: f64) -> Self {
        if !x.is_finite() {
            debug_assert!(false, "non-finite value in report: {x}");
            return Fixed4(0);
        }
        let text = format!("{}", x.abs());
        let (int, frac) = text.split_once('.').unwrap_or((&text, ""));
        let int: i64 = int.parse().expect("float display has an integer part");
        let mut digits: Vec<u8> = frac.bytes().map(|b| b - b'0').collect();
        digits.resize(digits.len().max(4), 0);
        let kept = digits[..4].iter().fold(0i64, |acc, d| acc * 10 + i64::from(*d));
        let rest = &digits[4..];
        let up = match rest.first() {
            None => false,
            Some(d) if *d > 5 => true,
            Some(d) if *d < 5 => false,
            Some(_) if rest[1..].iter().any(|d| *d != 0) => true,
            Some(_) => kept % 2 == 1,
        };
        let units = int * Self::SCALE + kept + i64::from(up);
        Fixed4(if x < 0.0 { -units } else { units })
    }

    pub fn to_f64(self) -> f64 {
        self.0 as f64 / Self::SCALE as f64
    }
}

impl fmt::Display for Fixed4 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sign = if self.0 < 0 { "-" } else { "" };
        let a = self.0.unsigned_abs();
        write!(f, "{sign}{}.{:04}", a / 10_000, a % 10_000)
    }
}

impl From<f64> for Fixed4 {
    fn from(x: f64) -> Self {
        Fixed4::from_f64(x)
    }
}

impl Serialize for Fixed4 {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(self.to_f64())
    }
}

impl<'de> Deserialize<'de> for Fixed4 {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        f64::deserialize(d).map(Fixed4::from_f64)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FindingRow {
    pub version: String,
    pub file: String,
    pub test: String,
    pub smell: String,
    pub count: u64,
    pub denominator: u64,
    /// Empty when the smell could not occur in the test.
    pub density: Option<Fixed4>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActionRow {
    pub from_version: String,
    pub to_version: String,
    pub file: String,
    pub test: String,
    pub smell: String,
    pub location: String,
    /// `kind: before -> after` per change, `; `-separated.
    pub changes: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RateRow {
    pub smell: String,
    pub actions: u64,
    pub symptoms: u64,
    pub rate: Fixed4,
    pub symptomatic_tests: u64,
    pub refactored_tests: u64,
    pub percent_refactored: Fixed4,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimeseriesRow {
    pub index: u64,
    pub version: String,
    pub timestamp: i64,
    pub tests: u64,
    pub smell: String,
    pub symptoms: u64,
    pub symptomatic_tests: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub version: String,
    pub smell: String,
    pub tests: u64,
    pub symptomatic_tests: u64,
    pub percent_symptomatic: Fixed4,
    pub mean_count: Fixed4,
    pub count_n: u64,
    pub count_min: Option<Fixed4>,
    pub count_q1: Option<Fixed4>,
    pub count_median: Option<Fixed4>,
    pub count_q3: Option<Fixed4>,
    pub count_max: Option<Fixed4>,
    pub count_mean: Option<Fixed4>,
    pub density_n: u64,
    pub density_min: Option<Fixed4>,
    pub density_q1: Option<Fixed4>,
    pub density_median: Option<Fixed4>,
    pub density_q3: Option<Fixed4>,
    pub density_max: Option<Fixed4>,
    pub density_mean: Option<Fixed4>,
}

/// Row type of one report table.
pub trait Table: Serialize + DeserializeOwned {
    const NAME: &'static str;
    const COLUMNS: &'static [&'static str];
}

impl Table for FindingRow {
    const NAME: &'static str = "findings";
    const COLUMNS: &'static [&'static str] = &["version", "file", "test", "smell", "count", "denominator", "density"];
}

impl Table for ActionRow {
    const NAME: &'static str = "actions";
    const COLUMNS: &'static [&'static str] =
        &["from_version", "to_version", "file", "test", "smell", "location", "changes"];
}

impl Table for RateRow {
    const NAME: &'static str = "rates";
    const COLUMNS: &'static [&'static str] = &[
        "smell",
        "actions",
        "symptoms",
        "rate",
        "symptomatic_tests",
        "refactored_tests",
        "percent_refactored",
    ];
}

impl Table for TimeseriesRow {
    const NAME: &'static str = "timeseries";
    const COLUMNS: &'static [&'static str] =
        &["index", "version", "timestamp", "tests", "smell", "symptoms", "symptomatic_tests"];
}

impl Table for SummaryRow {
    const NAME: &'static str = "summaries";
    const COLUMNS: &'static [&'static str] = &[
        "version",
        "smell",
        "tests",
        "symptomatic_tests",
        "percent_symptomatic",
        "mean_count",
        "count_n",
        "count_min",
        "count_q1",
        "count_median",
        "count_q3",
        "count_max",
        "count_mean",
        "density_n",
        "density_min",
        "density_q1",
        "density_median",
        "density_q3",
        "density_max",
        "density_mean",
    ];
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KneeInfo {
    pub quantile: Fixed4,
    pub threshold: Fixed4,
    pub score: Fixed4,
    pub steps: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankingInfo {
    pub statistic: String,
    pub ranking: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimilarityInfo {
    pub statistic: String,
    pub from_version: String,
    pub to_version: String,
    pub similarity: Fixed4,
}

/// Everything about a run that is not a table row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportMeta {
    pub tool: String,
    pub tool_version: String,
    pub project: String,
    pub mode: String,
    pub versions: u64,
    pub long_step_threshold: u64,
    /// Present when the threshold was derived from the corpus.
    pub threshold_derivation: Option<KneeInfo>,
    pub smells: Vec<String>,
    pub diagnostics: u64,
    pub rankings: Vec<RankingInfo>,
    pub similarities: Vec<SimilarityInfo>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub meta: ReportMeta,
    pub findings: Vec<FindingRow>,
    pub actions: Vec<ActionRow>,
    pub rates: Vec<RateRow>,
    pub timeseries: Vec<TimeseriesRow>,
    pub summaries: Vec<SummaryRow>,
}

/// Pretty JSON printer that writes every float with four fractional digits.
struct FixedFormatter<'a>(serde_json::ser::PrettyFormatter<'a>);

impl serde_json::ser::Formatter for FixedFormatter<'_> {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        write!(w, "{}", Fixed4::from_f64(value))
    }
    fn write_f32<W: ?Sized + Write>(&mut self, w: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(w, f64::from(value))
    }
    fn begin_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }
    fn end_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }
    fn begin_array_value<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }
    fn end_array_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }
    fn begin_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }
    fn end_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }
    fn begin_object_key<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }
    fn begin_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }
    fn end_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

pub fn render_json(report: &Report) -> String {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, FixedFormatter(Default::default()));
    report.serialize(&mut ser).expect("report types always serialize");
    out.push(b'\n');
    String::from_utf8(out).expect("serde_json writes UTF-8")
}

fn cell(value: &serde_json::Value) -> String {
    match value {
        serde_json::Value::Null => String::new(),
        serde_json::Value::String(s) => s.clone(),
        serde_json::Value::Number(n) => match n.as_f64() {
            Some(f) if n.is_f64() => Fixed4::from_f64(f).to_string(),
            _ => n.to_string(),
        },
        other => other.to_string(),
    }
}

/// One table as CSV text with a header row.
pub fn render_csv<T: Table>(rows: &[T]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(T::COLUMNS).expect("in-memory write");
    for row in rows {
        let value = serde_json::to_value(row).expect("rows serialize");
        let record: Vec<String> = T::COLUMNS.iter().map(|c| cell(&value[*c])).collect();
        w.write_record(&record).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("cells are UTF-8")
}

pub fn parse_csv<T: Table>(text: &str) -> Result<Vec<T>, csv::Error> {
    csv::Reader::from_reader(text.as_bytes()).deserialize().collect()
}

/// The meta block as `key,value` rows, nested values as JSON.
pub fn render_meta_csv(meta: &ReportMeta) -> String {
    let value = serde_json::to_value(meta).expect("meta serializes");
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["key", "value"]).expect("in-memory write");
    if let serde_json::Value::Object(map) = value {
        for (k, v) in map {
            let text = match &v {
                serde_json::Value::Array(_) | serde_json::Value::Object(_) => {
                    let mut buf = Vec::new();
                    let mut ser = serde_json::Serializer::with_formatter(
                        &mut buf,
                        FixedFormatter(serde_json::ser::PrettyFormatter::with_indent(b"")),
                    );
                    v.serialize(&mut ser).expect("value serializes");
                    String::from_utf8(buf).expect("UTF-8").replace('\n', "")
                }
                other => cell(other),
            };
            w.write_record([k.as_str(), text.as_str()]).expect("in-memory write");
        }
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("cells are UTF-8")
}

/// File name and contents of every CSV table.
pub fn render_csv_tables(report: &Report) -> Vec<(&'static str, String)> {
    vec![
        ("meta.csv", render_meta_csv(&report.meta)),
        ("findings.csv", render_csv(&report.findings)),
        ("actions.csv", render_csv(&report.actions)),
        ("rates.csv", render_csv(&report.rates)),
        ("timeseries.csv", render_csv(&report.timeseries)),
        ("summaries.csv", render_csv(&report.summaries)),
    ]
}

/// Writes `contents` through a temporary file in the same directory, then renames it.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<(), ReportError> {
    let fail = |source: io::Error| ReportError::WriteFailure {
        path: path.display().to_string(),
        source,
    };
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(fail)?;
    tmp.write_all(contents).map_err(fail)?;
    tmp.as_file().sync_all().map_err(fail)?;
    tmp.persist(path).map_err(|e| fail(e.error))?;
    Ok(())
}

/// Writes the report; `destination` is a file for JSON and a directory for CSV.
///
/// Without a destination JSON goes to standard output.
pub fn emit_report(report: &Report, format: Format, destination: Option<&Path>) -> Result<(), ReportError> {
    match (format, destination) {
        (Format::Json, Some(path)) => write_atomic(path, render_json(report).as_bytes()),
        (Format::Json, None) => io::stdout()
            .lock()
            .write_all(render_json(report).as_bytes())
            .map_err(|source| ReportError::WriteFailure {
                path: "<stdout>".into(),
                source,
            }),
        (Format::Csv, Some(dir)) => {
            std::fs::create_dir_all(dir).map_err(|source| ReportError::WriteFailure {
                path: dir.display().to_string(),
                source,
            })?;
            for (name, text) in render_csv_tables(report) {
                write_atomic(&dir.join(name), text.as_bytes())?;
            }
            Ok(())
        }
        (Format::Csv, None) => Err(ReportError::CsvNeedsDirectory),
    }
}
