use std::path::{Path, PathBuf};

use anyhow::{bail, Result};
use survmult::cmapss::SubsetId;

use crate::output::{read_report, ReportRecord};

/// Sort key placing FD001..FD004 first, then other names alphabetically.
fn dataset_order(name: &str) -> (u8, String) {
    match name.parse::<SubsetId>() {
        Ok(id) => (0, id.name().to_string()),
        Err(_) => (1, name.to_string()),
    }
}

/// Fixed-width table of A/D/O per `(ε, δ)`, one line per record after the
/// header, values at 4 decimals.
pub fn render_table(records: &[ReportRecord]) -> String {
    let mut sorted: Vec<&ReportRecord> = records.iter().collect();
    sorted.sort_by(|a, b| {
        dataset_order(&a.dataset)
            .cmp(&dataset_order(&b.dataset))
            .then(a.epsilon.total_cmp(&b.epsilon))
            .then(a.delta.total_cmp(&b.delta))
    });
    let mut out = format!(
        "{:<8} {:>8} {:>8} {:>6} {:>10} {:>12} {:>10}\n",
        "dataset", "epsilon", "delta", "size", "ambiguity", "discrepancy", "obscurity"
    );
    for r in sorted {
        out.push_str(&format!(
            "{:<8} {:>8.4} {:>8.4} {:>6} {:>10.4} {:>12.4} {:>10.4}\n",
            r.dataset, r.epsilon, r.delta, r.rashomon_size, r.ambiguity, r.discrepancy, r.obscurity
        ));
    }
    out
}

/// `report_*.csv` files in `dir`.
pub fn find_reports(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut found = Vec::new();
    for entry in std::fs::read_dir(dir)? {
        let path = entry?.path();
        let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("");
        if name.starts_with("report_") && name.ends_with(".csv") {
            found.push(path);
        }
    }
    found.sort();
    if found.is_empty() {
        bail!("no report_*.csv files in {}", dir.display());
    }
    Ok(found)
}

pub fn render_reports(paths: &[PathBuf]) -> Result<String> {
    let mut all = Vec::new();
    for p in paths {
        all.extend(read_report(p)?);
    }
    Ok(render_table(&all))
}
