//! CSV and JSON emission of result rows.
//!
//! Both formats start with the artifact version and the full resolved
//! configuration, so a file can be regenerated from its own header.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde_json::{json, Map, Value};

use super::{Config, ResultRow};
use crate::error::{Error, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
    Both,
}

impl FromStr for OutputFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            "both" => Ok(Self::Both),
            other => Err(Error::Config(format!("unknown output format {other:?} (csv, json, both)"))),
        }
    }
}

fn num(v: f64) -> String {
    format!("{v:.11e}")
}

fn opt<T>(v: Option<T>, f: impl Fn(T) -> String) -> String {
    v.map(f).unwrap_or_default()
}

fn axis_paths(cfg: &Config, rows: &[ResultRow]) -> Vec<String> {
    let width = rows.first().map_or(0, |r| r.values.len());
    cfg.sweep.axes.iter().take(width).map(|a| a.path.clone()).collect()
}

/// Writes `#` header lines, the column header and one line per row. Floats
/// carry 12 significant digits; fields of failed rows are left empty.
pub fn write_csv<W: Write>(mut out: W, cfg: &Config, rows: &[ResultRow]) -> Result<()> {
    writeln!(out, "# magnomech {VERSION}")?;
    for line in cfg.to_text()?.lines() {
        writeln!(out, "# {line}")?;
    }
    let paths = axis_paths(cfg, rows);
    let mut cols: Vec<String> = (1..=paths.len()).map(|k| format!("i{k}")).collect();
    cols.extend(paths.iter().cloned());
    cols.extend(
        ["E_cavity", "E_magnon", "E_phonon", "nu_minus_phonon", "stable", "validity_pass", "error_code"]
            .map(String::from),
    );
    writeln!(out, "{}", cols.join(","))?;
    for r in rows {
        let mut fields: Vec<String> = r.index.iter().map(usize::to_string).collect();
        fields.extend(r.values.iter().map(|&v| num(v)));
        let e = r.entanglement;
        fields.push(opt(e, |e| num(e.cavity)));
        fields.push(opt(e, |e| num(e.magnon)));
        fields.push(opt(e, |e| num(e.phonon)));
        fields.push(opt(r.min_symplectic, |n| num(n.phonon)));
        fields.push(opt(r.stable, |b| b.to_string()));
        fields.push(opt(r.validity_pass, |b| b.to_string()));
        fields.push(r.error_code.unwrap_or_default().to_string());
        writeln!(out, "{}", fields.join(","))?;
    }
    Ok(())
}

fn row_object(paths: &[String], r: &ResultRow) -> Value {
    let mut m = Map::new();
    for (k, i) in r.index.iter().enumerate() {
        m.insert(format!("i{}", k + 1), json!(i));
    }
    for (p, v) in paths.iter().zip(&r.values) {
        m.insert(p.clone(), json!(v));
    }
    let e = r.entanglement;
    let n = r.min_symplectic;
    m.insert("E_cavity".into(), json!(e.map(|e| e.cavity)));
    m.insert("E_magnon".into(), json!(e.map(|e| e.magnon)));
    m.insert("E_phonon".into(), json!(e.map(|e| e.phonon)));
    m.insert("nu_minus_cavity".into(), json!(n.map(|n| n.cavity)));
    m.insert("nu_minus_magnon".into(), json!(n.map(|n| n.magnon)));
    m.insert("nu_minus_phonon".into(), json!(n.map(|n| n.phonon)));
    m.insert("stable".into(), json!(r.stable));
    m.insert("rwa_suspect".into(), json!(r.rwa_suspect));
    m.insert("validity_pass".into(), json!(r.validity_pass));
    m.insert("error_code".into(), json!(r.error_code));
    m.insert("error".into(), json!(r.error));
    Value::Object(m)
}

/// Writes `{"header": {...}, "params": {...}, "rows": [...]}`.
pub fn write_json<W: Write>(mut out: W, cfg: &Config, rows: &[ResultRow]) -> Result<()> {
    let paths = axis_paths(cfg, rows);
    let doc = json!({
        "header": {
            "artifact": "magnomech",
            "version": VERSION,
            "config": cfg.to_text()?.lines().collect::<Vec<_>>(),
        },
        "params": serde_json::to_value(cfg.resolved_params()?).map_err(|e| Error::Config(e.to_string()))?,
        "axes": paths,
        "rows": rows.iter().map(|r| row_object(&paths, r)).collect::<Vec<_>>(),
    });
    serde_json::to_writer_pretty(&mut out, &doc).map_err(|e| Error::Io(e.into()))?;
    writeln!(out)?;
    Ok(())
}

pub fn to_json_pretty<T: serde::Serialize + ?Sized>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| Error::Io(e.into()))?;
    s.push('\n');
    Ok(s)
}

/// Writes `<dir>/<stem>.csv` and/or `<dir>/<stem>.json`, creating `dir`.
pub fn write_outputs(
    dir: &Path,
    stem: &str,
    format: OutputFormat,
    cfg: &Config,
    rows: &[ResultRow],
) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    if matches!(format, OutputFormat::Csv | OutputFormat::Both) {
        let path = dir.join(format!("{stem}.csv"));
        let mut w = BufWriter::new(File::create(&path)?);
        write_csv(&mut w, cfg, rows)?;
        w.flush()?;
        written.push(path);
    }
    if matches!(format, OutputFormat::Json | OutputFormat::Both) {
        let path = dir.join(format!("{stem}.json"));
        let mut w = BufWriter::new(File::create(&path)?);
        write_json(&mut w, cfg, rows)?;
        w.flush()?;
        written.push(path);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::steadystate::PairValues;

    fn rows() -> Vec<ResultRow> {
        let ok = ResultRow {
            index: vec![0],
            values: vec![0.5],
            entanglement: Some(PairValues { cavity: 1.0, magnon: 0.25, phonon: 0.125 }),
            min_symplectic: Some(PairValues { cavity: 0.1, magnon: 0.2, phonon: 0.3 }),
            stable: Some(true),
            rwa_suspect: Some(false),
            validity_pass: Some(true),
            error_code: None,
            error: None,
        };
        let bad = ResultRow {
            index: vec![1],
            values: vec![1.0],
            entanglement: None,
            min_symplectic: None,
            stable: Some(false),
            rwa_suspect: None,
            validity_pass: None,
            error_code: Some("unstable"),
            error: Some("drift matrix is not Hurwitz".into()),
        };
        vec![ok, bad]
    }

    #[test]
    fn csv_layout() {
        let cfg = Config::parse("sweep.axis1 = squeeze_r 0.5 1 2").unwrap();
        let mut buf = Vec::new();
        write_csv(&mut buf, &cfg, &rows()).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let body: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
        assert!(text.starts_with("# magnomech "));
        assert!(text.contains("# site2.phonon_freq_hz = "));
        assert_eq!(body[0], "i1,squeeze_r,E_cavity,E_magnon,E_phonon,nu_minus_phonon,stable,validity_pass,error_code");
        assert_eq!(
            body[1],
            "0,5.00000000000e-1,1.00000000000e0,2.50000000000e-1,1.25000000000e-1,3.00000000000e-1,true,true,"
        );
        assert_eq!(body[2], "1,1.00000000000e0,,,,,false,,unstable");
    }

    #[test]
    fn json_mirrors_rows() {
        let cfg = Config::parse("sweep.axis1 = squeeze_r 0.5 1 2").unwrap();
        let mut buf = Vec::new();
        write_json(&mut buf, &cfg, &rows()).unwrap();
        let v: Value = serde_json::from_slice(&buf).unwrap();
        assert_eq!(v["header"]["version"], VERSION);
        assert_eq!(v["rows"].as_array().unwrap().len(), 2);
        assert_eq!(v["rows"][0]["squeeze_r"], 0.5);
        assert_eq!(v["rows"][0]["E_phonon"], 0.125);
        assert!(v["rows"][1]["E_phonon"].is_null());
        assert_eq!(v["rows"][1]["error_code"], "unstable");
        assert!(v["params"]["sites"][0]["phonon_freq"].as_f64().unwrap() > 0.0);
    }

    #[test]
    fn format_names() {
        assert_eq!("both".parse::<OutputFormat>().unwrap(), OutputFormat::Both);
        assert!("xml".parse::<OutputFormat>().is_err());
    }
}
