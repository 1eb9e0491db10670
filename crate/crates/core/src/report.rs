//! Run manifests and canonical JSON/CSV emission.
//!
//! JSON output is an envelope `{manifest, report}` with keys sorted at every
//! level and floats written in shortest round-trip form, so a report parses
//! back bit-identically. CSV output is a flat table; every row carries the
//! id of the manifest that produced it.

use std::collections::BTreeMap;
use std::fs::{File, OpenOptions};
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::quadruples::{CountRecord, GapCertificate, QuadrupleFamily};

/// Version of the JSON and CSV layouts.
pub const SCHEMA_VERSION: u32 = 1;

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Environment variable naming the default cache directory.
pub const CACHE_DIR_ENV: &str = "DIVMOMENT_CACHE_DIR";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Json,
    Csv,
}

impl FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(Self::Json),
            "csv" => Ok(Self::Csv),
            other => Err(Error::InvalidArgument(format!("unknown format '{other}', expected json or csv"))),
        }
    }
}

/// Provenance of one run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunManifest {
    /// Hash of command, parameters, version, caches and seed. Timestamps are
    /// left out so reruns with the same inputs share an id.
    pub id: String,
    pub command: String,
    pub params: BTreeMap<String, String>,
    pub started: String,
    pub ended: String,
    pub tool_version: String,
    pub schema_version: u32,
    pub input_caches: Vec<String>,
    pub seed: Option<u64>,
}

impl RunManifest {
    pub fn start(
        command: &str,
        params: BTreeMap<String, String>,
        input_caches: Vec<String>,
        seed: Option<u64>,
    ) -> Self {
        let now = timestamp();
        let mut m = Self {
            id: String::new(),
            command: command.to_string(),
            params,
            started: now.clone(),
            ended: now,
            tool_version: TOOL_VERSION.to_string(),
            schema_version: SCHEMA_VERSION,
            input_caches,
            seed,
        };
        m.id = m.compute_id();
        m
    }

    pub fn finish(&mut self) {
        self.ended = timestamp();
    }

    /// Forty hex digits of a SHA-256 over the identifying fields.
    pub fn compute_id(&self) -> String {
        let mut h = Sha256::new();
        let mut field = |s: &str| {
            h.update((s.len() as u64).to_le_bytes());
            h.update(s.as_bytes());
        };
        field(&self.command);
        for (k, v) in &self.params {
            field(k);
            field(v);
        }
        field(&self.tool_version);
        field(&self.schema_version.to_string());
        for c in &self.input_caches {
            field(c);
        }
        field(&self.seed.map(|s| s.to_string()).unwrap_or_default());
        let digest = h.finalize();
        digest.iter().take(20).map(|b| format!("{b:02x}")).collect()
    }
}

fn timestamp() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
}

fn to_value<T: Serialize>(value: &T) -> Result<Value> {
    serde_json::to_value(value).map_err(|e| Error::InvalidArgument(format!("cannot serialize report: {e}")))
}

/// Canonical JSON envelope; keys come out sorted because `Value` objects are
/// ordered maps.
pub fn to_json<T: Serialize>(manifest: &RunManifest, report: &T) -> Result<String> {
    let envelope = BTreeMap::from([("manifest", to_value(manifest)?), ("report", to_value(report)?)]);
    let mut text = serde_json::to_string_pretty(&envelope)
        .map_err(|e| Error::InvalidArgument(format!("cannot serialize report: {e}")))?;
    text.push('\n');
    Ok(text)
}

/// Inverse of [`to_json`].
pub fn from_json<T: DeserializeOwned>(text: &str) -> Result<(RunManifest, T)> {
    #[derive(Deserialize)]
    struct Envelope<R> {
        manifest: RunManifest,
        report: R,
    }
    let env: Envelope<T> = serde_json::from_str(text).map_err(|e| Error::Format {
        path: "<json>".into(),
        reason: e.to_string(),
    })?;
    Ok((env.manifest, env.report))
}

/// A header plus string rows, ready for CSV.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

fn cell(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

fn flatten_into(prefix: &str, v: &Value, out: &mut BTreeMap<String, String>) {
    let key = |k: &str| if prefix.is_empty() { k.to_string() } else { format!("{prefix}.{k}") };
    match v {
        Value::Object(map) => map.iter().for_each(|(k, x)| flatten_into(&key(k), x, out)),
        Value::Array(items) => items
            .iter()
            .enumerate()
            .for_each(|(i, x)| flatten_into(&key(&i.to_string()), x, out)),
        leaf => {
            out.insert(prefix.to_string(), cell(leaf));
        }
    }
}

impl Table {
    /// One row whose columns are the dotted paths of `value`, sorted.
    pub fn flatten<T: Serialize>(value: &T) -> Result<Self> {
        let mut cols = BTreeMap::new();
        flatten_into("", &to_value(value)?, &mut cols);
        Ok(Self {
            header: cols.keys().cloned().collect(),
            rows: vec![cols.into_values().collect()],
        })
    }

    /// Columns `l, m1..m4, n1..n4, multiplicity`; `l` is blank for families
    /// that mix kernels.
    pub fn families(families: &[QuadrupleFamily]) -> Self {
        let mut header = vec!["l".to_string()];
        header.extend((1..=4).map(|i| format!("m{i}")));
        header.extend((1..=4).map(|i| format!("n{i}")));
        header.push("multiplicity".into());
        let rows = families
            .iter()
            .map(|f| {
                let mut row = vec![f.kernel().map(|l| l.to_string()).unwrap_or_default()];
                row.extend(f.ms.iter().map(|m| m.to_string()));
                row.extend(f.ns().iter().map(|n| n.to_string()));
                row.push(f.multiplicity.to_string());
                row
            })
            .collect();
        Self { header, rows }
    }

    /// Columns `N, delta, count, bound_ratio`.
    pub fn counts(records: &[CountRecord]) -> Self {
        Self {
            header: ["N", "delta", "count", "bound_ratio"].map(String::from).to_vec(),
            rows: records
                .iter()
                .map(|r| vec![r.n.to_string(), r.delta.to_string(), r.count.to_string(), r.bound_ratio.to_string()])
                .collect(),
        }
    }

    /// Certificates sorted by ratio, smallest first.
    pub fn certificates(certs: &[GapCertificate]) -> Self {
        let mut sorted: Vec<&GapCertificate> = certs.iter().collect();
        sorted.sort_by(|a, b| a.ratio().total_cmp(&b.ratio()).then(a.ns.cmp(&b.ns)));
        let mut header: Vec<String> = (1..=4).map(|i| format!("n{i}")).collect();
        header.extend((1..=4).map(|i| format!("s{i}")));
        header.extend(["alpha_star", "lower_bound", "ratio", "exact_zero"].map(String::from));
        let rows = sorted
            .into_iter()
            .map(|c| {
                let mut row: Vec<String> = c.ns.iter().map(|n| n.to_string()).collect();
                row.extend(c.signs.iter().map(|s| s.to_string()));
                row.extend([
                    c.alpha_star.to_string(),
                    c.lower_bound.to_string(),
                    c.ratio().to_string(),
                    c.exact_zero.to_string(),
                ]);
                row
            })
            .collect();
        Self { header, rows }
    }

    /// Stacks rows of tables that share a header.
    pub fn append(&mut self, other: Table) -> Result<()> {
        if self.header.is_empty() {
            *self = other;
            return Ok(());
        }
        if self.header != other.header {
            return Err(Error::InvalidArgument("cannot stack tables with different columns".into()));
        }
        self.rows.extend(other.rows);
        Ok(())
    }
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    Error::Format {
        path: path.to_path_buf(),
        reason: e.to_string(),
    }
}

/// Writes `table` with a trailing `manifest_id` column. A header is written
/// only when the target is new or empty; appending to a file whose header
/// differs is refused.
pub fn write_csv(table: &Table, manifest: &RunManifest, path: Option<&Path>) -> Result<()> {
    let mut header = table.header.clone();
    header.push("manifest_id".into());
    let sink: Box<dyn Write> = match path {
        None => Box::new(std::io::stdout().lock()),
        Some(p) => {
            let existing = existing_header(p)?;
            if let Some(h) = &existing {
                if *h != header {
                    return Err(Error::Format {
                        path: p.to_path_buf(),
                        reason: "existing CSV has different columns".into(),
                    });
                }
            }
            let file = OpenOptions::new()
                .create(true)
                .append(true)
                .open(p)
                .map_err(|e| Error::io(p, e))?;
            if existing.is_some() {
                return write_rows(table, manifest, None, Box::new(file), p);
            }
            Box::new(file)
        }
    };
    write_rows(table, manifest, Some(&header), sink, path.unwrap_or(Path::new("<stdout>")))
}

fn write_rows(table: &Table, manifest: &RunManifest, header: Option<&[String]>, sink: Box<dyn Write>, path: &Path) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(sink);
    if let Some(h) = header {
        w.write_record(h).map_err(|e| csv_err(path, e))?;
    }
    for row in &table.rows {
        w.write_record(row.iter().map(String::as_str).chain([manifest.id.as_str()]))
            .map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn existing_header(path: &Path) -> Result<Option<Vec<String>>> {
    let mut file = match File::open(path) {
        Ok(f) => f,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
        Err(e) => return Err(Error::io(path, e)),
    };
    let mut probe = [0u8; 1];
    if file.read(&mut probe).map_err(|e| Error::io(path, e))? == 0 {
        return Ok(None);
    }
    let mut r = csv::ReaderBuilder::new().has_headers(false).from_path(path).map_err(|e| csv_err(path, e))?;
    match r.records().next() {
        Some(rec) => Ok(Some(rec.map_err(|e| csv_err(path, e))?.iter().map(String::from).collect())),
        None => Ok(None),
    }
}

/// Writes JSON to `path`, or to standard output.
pub fn write_json<T: Serialize>(report: &T, manifest: &RunManifest, path: Option<&Path>) -> Result<()> {
    let text = to_json(manifest, report)?;
    match path {
        None => std::io::stdout()
            .lock()
            .write_all(text.as_bytes())
            .map_err(|e| Error::io("<stdout>", e)),
        Some(p) => std::fs::write(p, text).map_err(|e| Error::io(p, e)),
    }
}

/// Emits `report` as JSON, or as the flattened one-row table in CSV.
pub fn emit_report<T: Serialize>(report: &T, manifest: &RunManifest, format: OutputFormat, path: Option<&Path>) -> Result<()> {
    match format {
        OutputFormat::Json => write_json(report, manifest, path),
        OutputFormat::Csv => write_csv(&Table::flatten(report)?, manifest, path),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::sieve_divisors;
    use crate::moments::{moment_integral, Family, MomentOptions, MomentSpec, Resources};
    use crate::par::Exec;
    use crate::special_sums::{compute_c1, SumReport};

    fn manifest() -> RunManifest {
        RunManifest::start("test", BTreeMap::from([("T".into(), "100".into())]), vec![], Some(7))
    }

    #[test]
    fn id_ignores_timestamps() {
        let a = manifest();
        let mut b = a.clone();
        b.started = "later".into();
        assert_eq!(a.id, b.compute_id());
        assert_eq!(a.id.len(), 40);
        let mut c = a.clone();
        c.seed = Some(8);
        assert_ne!(a.id, c.compute_id());
    }

    #[test]
    fn moment_report_round_trips_bitwise() {
        let spec = MomentSpec::new(Family::Delta, 4, 1000.0, 500.0, 7.3).unwrap();
        let table = sieve_divisors(2000).unwrap();
        let opts = MomentOptions {
            exec: Exec::Sequential,
            ..Default::default()
        };
        let report = moment_integral(&spec, &Resources::with_table(&table), &opts).unwrap();
        let m = manifest();
        let text = to_json(&m, &report).unwrap();
        let (m2, back) = from_json::<crate::moments::MomentReport>(&text).unwrap();
        assert_eq!(m2, m);
        assert_eq!(back.direct_value.to_bits(), report.direct_value.to_bits());
        assert_eq!(back, report);
        assert_eq!(to_json(&m2, &back).unwrap(), text);
    }

    #[test]
    fn json_keys_sorted() {
        let table = sieve_divisors(100).unwrap();
        let r = compute_c1(10, &table, Exec::Sequential).unwrap();
        let text = to_json(&manifest(), &r).unwrap();
        let keys: Vec<usize> = ["\"bound_form\"", "\"family_count\"", "\"u\"", "\"value\"", "\"which\"", "\"z\""]
            .iter()
            .map(|k| text.find(k).unwrap())
            .collect();
        assert!(keys.windows(2).all(|w| w[0] < w[1]));
        assert!(text.find("\"manifest\"").unwrap() < text.find("\"report\"").unwrap());
    }

    #[test]
    fn csv_header_on_first_write_only() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sums.csv");
        let table = sieve_divisors(100).unwrap();
        let r: SumReport = compute_c1(10, &table, Exec::Sequential).unwrap();
        let m = manifest();
        emit_report(&r, &m, OutputFormat::Csv, Some(&path)).unwrap();
        emit_report(&r, &m, OutputFormat::Csv, Some(&path)).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 3);
        assert_eq!(lines[0], "bound_form,family_count,u,value,which,z,manifest_id");
        assert_eq!(lines[1], lines[2]);
        assert!(lines[1].ends_with(&m.id));
        let other = Table::counts(&[]);
        assert!(write_csv(&other, &m, Some(&path)).is_err());
    }

    #[test]
    fn certificates_sorted_by_ratio() {
        let cert = |ns: [u64; 4], alpha: f64| GapCertificate {
            ns,
            signs: [1, 1, -1, -1],
            alpha_star: alpha,
            lower_bound: 1.0,
            exact_zero: false,
        };
        let t = Table::certificates(&[cert([1, 2, 3, 4], 0.5), cert([1, 1, 1, 2], 0.1), cert([2, 2, 2, 3], -0.3)]);
        let ratios: Vec<&str> = t.rows.iter().map(|r| r[10].as_str()).collect();
        assert_eq!(ratios, ["0.1", "0.3", "0.5"]);
    }

    #[test]
    fn family_rows() {
        let fams = crate::quadruples::enumerate_two_two(9, Exec::Sequential).unwrap();
        let t = Table::families(&fams);
        assert_eq!(t.header[0], "l");
        assert_eq!(t.header.len(), 10);
        assert!(t.rows.iter().any(|r| r[5..9] == ["1", "9", "4", "4"] || r[5..9] == ["4", "4", "1", "9"]));
    }

    #[test]
    fn format_parsing() {
        assert_eq!("csv".parse::<OutputFormat>().unwrap(), OutputFormat::Csv);
        assert!("xml".parse::<OutputFormat>().is_err());
    }
}
