//! CSV, SVG and text artifacts. Every writer goes through a temporary file
//! and a rename, so a failed run never leaves a half-written output behind.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use serde::{Deserialize, Serialize};
use survmult::rashomon::{MultiplicityReport, RashomonSummary, ReportRow};

pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".partial");
    let tmp = PathBuf::from(tmp);
    std::fs::write(&tmp, contents).with_context(|| format!("writing {}", tmp.display()))?;
    std::fs::rename(&tmp, path).with_context(|| format!("renaming to {}", path.display()))?;
    Ok(())
}

pub fn report_path(out: &Path, dataset: &str) -> PathBuf {
    out.join(format!("report_{dataset}.csv"))
}

pub fn rashomon_path(out: &Path, dataset: &str) -> PathBuf {
    out.join(format!("rashomon_{dataset}.csv"))
}

pub fn models_path(out: &Path, dataset: &str) -> PathBuf {
    out.join(format!("models_{dataset}.csv"))
}

pub fn cube_path(out: &Path, dataset: &str) -> PathBuf {
    out.join(format!("cube_{dataset}.txt"))
}

pub fn heatmap_path(out: &Path, dataset: &str, metric: &str) -> PathBuf {
    out.join(format!("heatmap_{dataset}_{metric}.svg"))
}

/// One line of `report_<subset>.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRecord {
    pub dataset: String,
    pub config_hash: String,
    pub epsilon: f64,
    pub delta: f64,
    pub rashomon_size: usize,
    pub ambiguity: f64,
    pub discrepancy: f64,
    pub obscurity: f64,
}

fn to_csv<T: Serialize>(records: &[T]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in records {
        w.serialize(r)?;
    }
    w.into_inner().context("flushing csv")
}

fn from_csv<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let mut r = csv::Reader::from_path(path).with_context(|| format!("opening {}", path.display()))?;
    r.deserialize()
        .enumerate()
        .map(|(i, rec)| rec.with_context(|| format!("{}: bad record {}", path.display(), i + 1)))
        .collect()
}

pub fn report_records(report: &MultiplicityReport, config_hash: &str) -> Vec<ReportRecord> {
    report
        .rows
        .iter()
        .map(|r| ReportRecord {
            dataset: report.dataset_id.clone(),
            config_hash: config_hash.to_string(),
            epsilon: r.epsilon,
            delta: r.delta,
            rashomon_size: r.rashomon_size,
            ambiguity: r.ambiguity,
            discrepancy: r.discrepancy,
            obscurity: r.obscurity,
        })
        .collect()
}

pub fn write_report(path: &Path, report: &MultiplicityReport, config_hash: &str) -> Result<()> {
    write_atomic(path, &to_csv(&report_records(report, config_hash))?)
}

/// Reads a report CSV and checks the multiplicity invariants.
pub fn read_report(path: &Path) -> Result<Vec<ReportRecord>> {
    let records: Vec<ReportRecord> = from_csv(path)?;
    ensure!(!records.is_empty(), "{} holds no rows", path.display());
    let report = MultiplicityReport {
        dataset_id: records[0].dataset.clone(),
        rows: records
            .iter()
            .map(|r| ReportRow {
                epsilon: r.epsilon,
                delta: r.delta,
                ambiguity: r.ambiguity,
                discrepancy: r.discrepancy,
                obscurity: r.obscurity,
                rashomon_size: r.rashomon_size,
            })
            .collect(),
    };
    report
        .check_invariants()
        .with_context(|| format!("{} violates report invariants", path.display()))?;
    Ok(records)
}

/// One line of `models_<subset>.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelRecord {
    pub dataset: String,
    pub config_hash: String,
    pub model: usize,
    pub id: String,
    pub seed: u64,
    pub metric: String,
    pub performance: f64,
    pub brier_at_t: f64,
    pub c_index: f64,
}

pub fn write_models(path: &Path, records: &[ModelRecord]) -> Result<()> {
    write_atomic(path, &to_csv(records)?)
}

pub fn read_models(path: &Path) -> Result<Vec<ModelRecord>> {
    let records: Vec<ModelRecord> = from_csv(path)?;
    for (k, r) in records.iter().enumerate() {
        if r.model != k {
            bail!("{}: model {} listed at position {k}", path.display(), r.model);
        }
    }
    Ok(records)
}

/// One line of `rashomon_<subset>.csv`: size and score ranges per `ε`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RashomonRecord {
    pub dataset: String,
    pub config_hash: String,
    pub epsilon: f64,
    pub rashomon_size: usize,
    pub metric: String,
    pub performance_min: f64,
    pub performance_max: f64,
    pub c_index_min: f64,
    pub c_index_max: f64,
}

pub fn write_rashomon(
    path: &Path,
    dataset: &str,
    config_hash: &str,
    metric: &str,
    performance: &[RashomonSummary],
    c_index: &[RashomonSummary],
) -> Result<()> {
    let records: Vec<RashomonRecord> = performance
        .iter()
        .zip(c_index)
        .map(|(p, c)| RashomonRecord {
            dataset: dataset.to_string(),
            config_hash: config_hash.to_string(),
            epsilon: p.epsilon,
            rashomon_size: p.size,
            metric: metric.to_string(),
            performance_min: p.performance_min,
            performance_max: p.performance_max,
            c_index_min: c.performance_min,
            c_index_max: c.performance_max,
        })
        .collect();
    write_atomic(path, &to_csv(&records)?)
}

pub fn read_rashomon(path: &Path) -> Result<Vec<RashomonRecord>> {
    from_csv(path)
}

/// Fill colour for a value on the fixed `[0, 1]` scale: white at 0, dark blue
/// at 1, each channel moving linearly in between.
pub fn shade(value: f64) -> (u8, u8, u8) {
    let v = value.clamp(0.0, 1.0);
    let lerp = |a: f64, b: f64| (a + (b - a) * v).round() as u8;
    (lerp(255.0, 8.0), lerp(255.0, 48.0), lerp(255.0, 107.0))
}

pub const HEATMAP_METRICS: [&str; 3] = ["ambiguity", "discrepancy", "obscurity"];

fn metric_value(row: &ReportRow, metric: &str) -> f64 {
    match metric {
        "ambiguity" => row.ambiguity,
        "discrepancy" => row.discrepancy,
        _ => row.obscurity,
    }
}

/// ε × δ heatmap of one measure: rows are ε values, columns δ values.
pub fn heatmap_svg(report: &MultiplicityReport, metric: &str, config_hash: &str) -> String {
    let mut eps: Vec<f64> = report.rows.iter().map(|r| r.epsilon).collect();
    eps.dedup();
    let mut deltas: Vec<f64> = report.rows.iter().map(|r| r.delta).collect();
    deltas.sort_by(f64::total_cmp);
    deltas.dedup();

    let (cw, ch, left, top) = (90.0, 48.0, 80.0, 60.0);
    let width = left + cw * deltas.len() as f64 + 20.0;
    let height = top + ch * eps.len() as f64 + 70.0;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, "<!-- config_hash: {config_hash} -->");
    let _ = writeln!(s, "<metadata>config_hash={config_hash}; scale=[0,1]</metadata>");
    let _ = writeln!(
        s,
        r#"<text x="{left}" y="20" font-size="14">{} {metric}</text>"#,
        report.dataset_id
    );
    let _ = writeln!(s, r#"<text x="{}" y="{}">δ</text>"#, left + cw * deltas.len() as f64 / 2.0, top - 24.0);
    let _ = writeln!(s, r#"<text x="10" y="{}">ε</text>"#, top + ch * eps.len() as f64 / 2.0);
    for (j, d) in deltas.iter().enumerate() {
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="middle">{d:.2}</text>"#,
            left + cw * (j as f64 + 0.5),
            top - 6.0
        );
    }
    for (i, e) in eps.iter().enumerate() {
        let y = top + ch * i as f64;
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="end">{e:.2}</text>"#,
            left - 8.0,
            y + ch / 2.0 + 4.0
        );
        for (j, d) in deltas.iter().enumerate() {
            let Some(row) = report.rows.iter().find(|r| r.epsilon == *e && r.delta == *d) else {
                continue;
            };
            let v = metric_value(row, metric);
            let (r, g, b) = shade(v);
            let x = left + cw * j as f64;
            let ink = if v > 0.5 { "#ffffff" } else { "#000000" };
            let _ = writeln!(
                s,
                r##"<rect x="{x}" y="{y}" width="{cw}" height="{ch}" fill="#{r:02x}{g:02x}{b:02x}" stroke="#888888" data-value="{v}"/>"##
            );
            let _ = writeln!(
                s,
                r#"<text x="{}" y="{}" text-anchor="middle" fill="{ink}">{v:.4}</text>"#,
                x + cw / 2.0,
                y + ch / 2.0 + 4.0
            );
        }
    }
    let ly = top + ch * eps.len() as f64 + 25.0;
    let lw = cw * deltas.len() as f64;
    let _ = writeln!(
        s,
        r##"<defs><linearGradient id="scale"><stop offset="0" stop-color="#ffffff"/><stop offset="1" stop-color="#08306b"/></linearGradient></defs>"##
    );
    let _ = writeln!(s, r##"<rect x="{left}" y="{ly}" width="{lw}" height="12" fill="url(#scale)" stroke="#888888"/>"##);
    let _ = writeln!(s, r#"<text x="{left}" y="{}">0</text>"#, ly + 28.0);
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="end">1</text>"#, left + lw, ly + 28.0);
    s.push_str("</svg>\n");
    s
}
