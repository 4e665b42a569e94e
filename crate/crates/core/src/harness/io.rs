//! Plain-text data files and CSV/JSON artifacts.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use nalgebra::DVector;
use serde::Serialize;

use super::study::CoverageReport;
use crate::error::{CgfdError, Result};

/// Header comment carried by every output file.
pub fn header_line(config_hash: &str, seed: u64) -> String {
    format!("config_hash={config_hash} seed={seed}")
}

/// One observation per line, components separated by commas. Blank lines and
/// lines starting with `#` are skipped.
pub fn read_rows<R: BufRead>(reader: R) -> Result<Vec<Vec<f64>>> {
    let mut rows = Vec::new();
    for (no, line) in reader.lines().enumerate() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let row = t
            .split(',')
            .map(|f| f.trim().parse::<f64>().map_err(|e| CgfdError::BadShape(format!("line {}: {e}", no + 1))))
            .collect::<Result<Vec<f64>>>()?;
        if row.iter().any(|v| !v.is_finite()) {
            return Err(CgfdError::NonFinite(format!("line {}", no + 1)));
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(CgfdError::EmptyData);
    }
    Ok(rows)
}

pub fn read_data_file(path: &Path) -> Result<Vec<Vec<f64>>> {
    read_rows(BufReader::new(File::open(path)?))
}

pub fn write_samples_csv<W: Write>(mut w: W, header: &str, samples: &[DVector<f64>], dim: usize) -> Result<()> {
    writeln!(w, "# {header}")?;
    let cols: Vec<String> = (0..dim).map(|i| format!("theta{i}")).collect();
    writeln!(w, "{}", cols.join(","))?;
    for s in samples {
        let f: Vec<String> = s.iter().map(|v| v.to_string()).collect();
        writeln!(w, "{}", f.join(","))?;
    }
    Ok(())
}

/// Pretty JSON with the header stored under `"header"` alongside the payload.
pub fn write_json<W: Write, T: Serialize>(mut w: W, header: &str, value: &T) -> Result<()> {
    #[derive(Serialize)]
    struct Wrapped<'a, T> {
        header: &'a str,
        #[serde(flatten)]
        body: &'a T,
    }
    serde_json::to_writer_pretty(&mut w, &Wrapped { header, body: value }).map_err(|e| CgfdError::Io(e.into()))?;
    writeln!(w)?;
    Ok(())
}

pub fn write_report_csv<W: Write>(mut w: W, report: &CoverageReport) -> Result<()> {
    writeln!(w, "# {}", header_line(&report.config_hash, report.seed))?;
    writeln!(w, "functional,boundary,truth,nominal,empirical,covered,replicates,se")?;
    for r in &report.rows {
        let se = r.se.map(|s| s.to_string()).unwrap_or_default();
        writeln!(w, "{},{},{},{},{},{},{},{}", r.functional, r.boundary, r.truth, r.nominal, r.empirical, r.covered, r.replicates, se)?;
    }
    Ok(())
}

pub fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    Ok(BufWriter::new(File::create(path)?))
}
