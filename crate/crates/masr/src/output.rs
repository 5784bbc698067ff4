//! CSV rows, per-run JSON traces and a plain-text summary.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::runner::RunRecord;
use crate::Result;

pub const CSV_HEADER: [&str; 10] = [
    "scenario",
    "scheme",
    "seed",
    "sweep_name",
    "sweep_value",
    "ao_iters",
    "rate_bpshz",
    "secondary_snr_db",
    "feasible",
    "runtime_s",
];

pub const CSV_FILE: &str = "runs.csv";
pub const TRACE_DIR: &str = "traces";

fn csv_row(r: &RunRecord) -> [String; 10] {
    [
        r.scenario.clone(),
        r.scheme.clone(),
        r.seed.to_string(),
        r.sweep_name.clone(),
        r.sweep_value.map_or(String::new(), |v| v.to_string()),
        r.ao_iters.to_string(),
        r.rate_bpshz.to_string(),
        r.secondary_snr_db.to_string(),
        r.feasible().to_string(),
        format!("{:.3}", r.runtime_s),
    ]
}

pub fn write_csv<W: Write>(out: W, records: &[RunRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in records {
        w.write_record(csv_row(r))?;
    }
    w.flush()?;
    Ok(())
}

/// Write `runs.csv` and one `traces/<stem>.json` per record under `dir`.
pub fn write_results(dir: &Path, records: &[RunRecord]) -> Result<()> {
    let traces = dir.join(TRACE_DIR);
    fs::create_dir_all(&traces)?;
    write_csv(fs::File::create(dir.join(CSV_FILE))?, records)?;
    for r in records {
        fs::write(traces.join(format!("{}.json", r.stem())), serde_json::to_string_pretty(r)?)?;
    }
    Ok(())
}

pub fn read_trace(path: &Path) -> Result<RunRecord> {
    Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
}

/// A trace file itself, or every `.json` file in a results directory (or its trace
/// subdirectory), sorted by name.
pub fn trace_files(path: &Path) -> Result<Vec<PathBuf>> {
    if path.is_file() {
        return Ok(vec![path.to_path_buf()]);
    }
    let dir = if path.join(TRACE_DIR).is_dir() { path.join(TRACE_DIR) } else { path.to_path_buf() };
    let mut files: Vec<PathBuf> = fs::read_dir(dir)?
        .map(|e| e.map(|e| e.path()))
        .collect::<std::io::Result<_>>()?;
    files.retain(|p| p.extension().is_some_and(|e| e == "json"));
    files.sort();
    Ok(files)
}

/// Mean rate and feasible count per (scenario, scheme, sweep value).
pub fn summary(records: &[RunRecord]) -> String {
    let mut groups: BTreeMap<(String, String, String), Vec<&RunRecord>> = BTreeMap::new();
    for r in records {
        let value = r.sweep_value.map_or(String::new(), |v| format!("{}={v}", r.sweep_name));
        groups.entry((r.scenario.clone(), value, r.scheme.clone())).or_default().push(r);
    }
    let mut out = String::new();
    for ((scenario, value, scheme), rs) in groups {
        let ok: Vec<f64> = rs.iter().filter(|r| r.feasible()).map(|r| r.rate_bpshz).collect();
        let mean = if ok.is_empty() { f64::NAN } else { ok.iter().sum::<f64>() / ok.len() as f64 };
        out += &format!("{scenario} {value:<18} {scheme:<15} mean rate {mean:8.4} bps/Hz  feasible {}/{}\n", ok.len(), rs.len());
    }
    out
}
