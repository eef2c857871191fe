//! Table and report serialization: RFC-4180-style CSV with a header row for
//! fringe tables, flat `key = value` text for fit and figure-of-merit
//! reports.

use std::fs::File;
use std::path::Path;

use noon_sim::analysis::FitResult;
use noon_sim::detect::{FringeRow, FringeTable};

pub const FRINGE_HEADER: [&str; 8] = [
    "hwp3_deg",
    "phase_deg",
    "p_twofold",
    "p_threefold_unheralded",
    "p_fourfold",
    "c_twofold",
    "c_threefold_unheralded",
    "c_fourfold",
];

fn fmt_count(value: Option<f64>) -> String {
    match value {
        None => String::new(),
        Some(v) => format!("{v}"),
    }
}

/// Writes a fringe table as CSV; count cells are empty for analytic runs.
pub fn write_fringe_csv(path: &Path, table: &FringeTable) -> Result<(), String> {
    let file = File::create(path).map_err(|e| format!("cannot create {}: {e}", path.display()))?;
    let mut w = csv::Writer::from_writer(file);
    w.write_record(FRINGE_HEADER)
        .map_err(|e| e.to_string())?;
    for row in &table.rows {
        w.write_record([
            format!("{}", row.hwp3_deg),
            format!("{}", row.phase_deg),
            format!("{}", row.p_twofold),
            format!("{}", row.p_threefold_unheralded),
            format!("{}", row.p_fourfold),
            fmt_count(row.c_twofold),
            fmt_count(row.c_threefold_unheralded),
            fmt_count(row.c_fourfold),
        ])
        .map_err(|e| e.to_string())?;
    }
    w.flush().map_err(|e| e.to_string())
}

fn parse_field(record: &csv::StringRecord, idx: usize, line: u64) -> Result<f64, String> {
    let raw = record
        .get(idx)
        .ok_or_else(|| format!("line {line}: missing column {}", FRINGE_HEADER[idx]))?;
    raw.parse::<f64>()
        .map_err(|_| format!("line {line}: '{raw}' is not a number"))
}

fn parse_count(record: &csv::StringRecord, idx: usize, line: u64) -> Result<Option<f64>, String> {
    match record.get(idx) {
        None | Some("") => Ok(None),
        Some(raw) => raw
            .parse::<f64>()
            .map(Some)
            .map_err(|_| format!("line {line}: '{raw}' is not a number")),
    }
}

/// Reads a fringe table CSV back.
pub fn read_fringe_csv(path: &Path) -> Result<FringeTable, String> {
    let file = File::open(path).map_err(|e| format!("cannot open {}: {e}", path.display()))?;
    let mut r = csv::Reader::from_reader(file);
    {
        let headers = r.headers().map_err(|e| e.to_string())?;
        let expected: Vec<&str> = FRINGE_HEADER.to_vec();
        let got: Vec<&str> = headers.iter().collect();
        if got != expected {
            return Err(format!(
                "unexpected header {got:?} (expected {expected:?})"
            ));
        }
    }
    let mut rows = Vec::new();
    for (i, record) in r.records().enumerate() {
        let line = i as u64 + 2;
        let record = record.map_err(|e| e.to_string())?;
        rows.push(FringeRow {
            hwp3_deg: parse_field(&record, 0, line)?,
            phase_deg: parse_field(&record, 1, line)?,
            p_twofold: parse_field(&record, 2, line)?,
            p_threefold_unheralded: parse_field(&record, 3, line)?,
            p_fourfold: parse_field(&record, 4, line)?,
            c_twofold: parse_count(&record, 5, line)?,
            c_threefold_unheralded: parse_count(&record, 6, line)?,
            c_fourfold: parse_count(&record, 7, line)?,
        });
    }
    Ok(FringeTable { rows, pulses_per_point: None, seed: None })
}

/// Writes a two-column scan (e.g. HOM or HWP2 calibration) as CSV.
pub fn write_scan_csv(
    path: &Path,
    header: [&str; 2],
    rows: &[(f64, f64)],
) -> Result<(), String> {
    let file = File::create(path).map_err(|e| format!("cannot create {}: {e}", path.display()))?;
    let mut w = csv::Writer::from_writer(file);
    w.write_record(header).map_err(|e| e.to_string())?;
    for &(a, b) in rows {
        w.write_record([format!("{a}"), format!("{b}")])
            .map_err(|e| e.to_string())?;
    }
    w.flush().map_err(|e| e.to_string())
}

/// Flat `key = value` record of a fit result.
pub fn fit_report(fit: &FitResult) -> String {
    let mut s = String::new();
    let mut kv = |k: &str, v: f64| s.push_str(&format!("{k} = {v}\n"));
    kv("offset", fit.offset);
    kv("offset_err", fit.offset_err);
    kv("amplitude", fit.amplitude);
    kv("amplitude_err", fit.amplitude_err);
    kv("phase_rad", fit.phase);
    kv("phase_err", fit.phase_err);
    kv("frequency", fit.frequency as f64);
    kv("visibility", fit.visibility);
    kv("visibility_err", fit.visibility_err);
    s.push_str(&format!("over_unity_flagged = {}\n", fit.over_unity_flagged));
    s
}
