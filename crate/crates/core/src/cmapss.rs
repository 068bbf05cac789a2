//! CMAPSS turbofan telemetry and its survival reformulation.
//!
//! Raw files are whitespace-separated with 26 columns per row: unit number,
//! cycle, three operational settings and 21 sensors. Each engine becomes one
//! survival observation: its final cycle is the event time, administratively
//! censored at [`CensoringPolicy::censor_time`], and its covariates are the
//! per-channel mean and least-squares slope over the first `feature_window`
//! cycles only, so the features never see the outcome.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::survival::SurvivalDataset;

pub const N_SETTINGS: usize = 3;
pub const N_SENSORS: usize = 21;
pub const N_COLUMNS: usize = 2 + N_SETTINGS + N_SENSORS;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SubsetId {
    FD001,
    FD002,
    FD003,
    FD004,
}

impl SubsetId {
    pub const ALL: [SubsetId; 4] = [SubsetId::FD001, SubsetId::FD002, SubsetId::FD003, SubsetId::FD004];

    pub fn name(self) -> &'static str {
        match self {
            SubsetId::FD001 => "FD001",
            SubsetId::FD002 => "FD002",
            SubsetId::FD003 => "FD003",
            SubsetId::FD004 => "FD004",
        }
    }

    /// Engines in the canonical training file.
    pub fn canonical_units(self) -> usize {
        match self {
            SubsetId::FD001 | SubsetId::FD003 => 100,
            SubsetId::FD002 | SubsetId::FD004 => 260,
        }
    }

    /// File name of the canonical training file, e.g. `train_FD001.txt`.
    pub fn train_file_name(self) -> String {
        format!("train_{}.txt", self.name())
    }
}

impl std::fmt::Display for SubsetId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for SubsetId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SubsetId::ALL
            .into_iter()
            .find(|id| id.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::domain(format!("unknown CMAPSS subset {s:?}")))
    }
}

/// Channel names in file order: `op_set_1..3`, `sensor_1..21`.
pub fn channel_names() -> Vec<String> {
    (1..=N_SETTINGS)
        .map(|k| format!("op_set_{k}"))
        .chain((1..=N_SENSORS).map(|k| format!("sensor_{k}")))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct TelemetryRecord {
    pub unit: u32,
    pub cycle: u32,
    pub settings: [f64; N_SETTINGS],
    pub sensors: [f64; N_SENSORS],
}

impl TelemetryRecord {
    /// Value of channel `c` in [`channel_names`] order.
    pub fn channel(&self, c: usize) -> f64 {
        if c < N_SETTINGS {
            self.settings[c]
        } else {
            self.sensors[c - N_SETTINGS]
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RawTelemetry {
    pub subset: SubsetId,
    pub records: Vec<TelemetryRecord>,
}

impl RawTelemetry {
    /// Distinct unit numbers in order of first appearance.
    pub fn units(&self) -> Vec<u32> {
        let mut seen = std::collections::HashSet::new();
        self.records.iter().map(|r| r.unit).filter(|u| seen.insert(*u)).collect()
    }

    /// Records grouped per unit, in order of first appearance.
    pub fn by_unit(&self) -> Vec<(u32, Vec<&TelemetryRecord>)> {
        let mut index: HashMap<u32, usize> = HashMap::new();
        let mut groups: Vec<(u32, Vec<&TelemetryRecord>)> = Vec::new();
        for r in &self.records {
            let k = *index.entry(r.unit).or_insert_with(|| {
                groups.push((r.unit, Vec::new()));
                groups.len() - 1
            });
            groups[k].1.push(r);
        }
        groups
    }

    /// Renders the records in the whitespace-separated input format.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for r in &self.records {
            let _ = write!(out, "{} {}", r.unit, r.cycle);
            for v in r.settings.iter().chain(&r.sensors) {
                let _ = write!(out, " {v}");
            }
            out.push('\n');
        }
        out
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }
}

/// Reads a CMAPSS training file.
pub fn parse_cmapss(path: impl AsRef<Path>, subset: SubsetId) -> Result<RawTelemetry> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_cmapss_str(&text, subset)
}

/// Parses CMAPSS text. Blank lines are ignored; every other line must hold
/// 26 numeric fields, and each unit's cycles must run 1, 2, 3, ... in order.
pub fn parse_cmapss_str(text: &str, subset: SubsetId) -> Result<RawTelemetry> {
    let mut records = Vec::new();
    let mut last_cycle: HashMap<u32, u32> = HashMap::new();
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.is_empty() {
            continue;
        }
        if fields.len() != N_COLUMNS {
            return Err(Error::Format(format!(
                "line {line_no}: expected {N_COLUMNS} columns, found {}",
                fields.len()
            )));
        }
        let int = |s: &str, what: &str| -> Result<u32> {
            s.parse::<u32>()
                .or_else(|_| {
                    s.parse::<f64>()
                        .ok()
                        .filter(|v| v.fract() == 0.0 && *v >= 0.0 && *v <= u32::MAX as f64)
                        .map(|v| v as u32)
                        .ok_or(())
                })
                .map_err(|_| Error::Parse {
                    line: line_no,
                    message: format!("{what} {s:?} is not a non-negative integer"),
                })
        };
        let unit = int(fields[0], "unit number")?;
        let cycle = int(fields[1], "cycle")?;
        let mut values = [0.0; N_SETTINGS + N_SENSORS];
        for (v, s) in values.iter_mut().zip(&fields[2..]) {
            *v = s.parse::<f64>().ok().filter(|x| x.is_finite()).ok_or_else(|| Error::Parse {
                line: line_no,
                message: format!("value {s:?} is not a finite number"),
            })?;
        }
        let expected = last_cycle.get(&unit).map_or(1, |c| c + 1);
        if cycle != expected {
            return Err(Error::Parse {
                line: line_no,
                message: format!("unit {unit} jumps to cycle {cycle}, expected {expected}"),
            });
        }
        last_cycle.insert(unit, cycle);
        let mut settings = [0.0; N_SETTINGS];
        let mut sensors = [0.0; N_SENSORS];
        settings.copy_from_slice(&values[..N_SETTINGS]);
        sensors.copy_from_slice(&values[N_SETTINGS..]);
        records.push(TelemetryRecord {
            unit,
            cycle,
            settings,
            sensors,
        });
    }
    if records.is_empty() {
        return Err(Error::Format("file contains no telemetry rows".into()));
    }
    Ok(RawTelemetry { subset, records })
}

/// Administrative censoring.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CensoringPolicy {
    pub censor_time: f64,
}

impl CensoringPolicy {
    pub const DEFAULT_CENSOR_TIME: f64 = 250.0;

    pub fn new(censor_time: f64) -> Result<Self> {
        if !(censor_time > 0.0 && censor_time.is_finite()) {
            return Err(Error::domain(format!("censor time must be positive, got {censor_time}")));
        }
        Ok(CensoringPolicy { censor_time })
    }

    /// `(time, event)` for an engine whose last recorded cycle is `final_cycle`.
    pub fn apply(&self, final_cycle: f64) -> (f64, bool) {
        if final_cycle > self.censor_time {
            (self.censor_time, false)
        } else {
            (final_cycle, true)
        }
    }
}

impl Default for CensoringPolicy {
    fn default() -> Self {
        CensoringPolicy {
            censor_time: Self::DEFAULT_CENSOR_TIME,
        }
    }
}

/// What to do with an engine shorter than the feature window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ShortUnitPolicy {
    #[default]
    Skip,
    Error,
}

pub const DEFAULT_FEATURE_WINDOW: usize = 30;

/// Result of the survival reformulation.
#[derive(Debug, Clone)]
pub struct Reformulated {
    pub dataset: SurvivalDataset,
    /// Units dropped for having fewer than `feature_window` cycles.
    pub skipped_units: Vec<u32>,
}

/// Mean and least-squares slope (per cycle) of `values` sampled at cycles
/// `1..=len`.
pub fn mean_and_slope(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let x_mean = (n + 1.0) / 2.0;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (k, &y) in values.iter().enumerate() {
        let dx = (k + 1) as f64 - x_mean;
        sxy += dx * (y - mean);
        sxx += dx * dx;
    }
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    (mean, slope)
}

/// Feature names produced by [`to_survival`]: `<channel>_mean`, `<channel>_slope`.
pub fn feature_names() -> Vec<String> {
    channel_names()
        .into_iter()
        .flat_map(|c| [format!("{c}_mean"), format!("{c}_slope")])
        .collect()
}

/// One survival observation per engine.
pub fn to_survival(
    raw: &RawTelemetry,
    policy: CensoringPolicy,
    feature_window: usize,
    short_units: ShortUnitPolicy,
) -> Result<Reformulated> {
    if feature_window == 0 {
        return Err(Error::domain("feature window must be positive"));
    }
    let mut rows = Vec::new();
    let mut times = Vec::new();
    let mut events = Vec::new();
    let mut ids = Vec::new();
    let mut skipped_units = Vec::new();
    let mut window = vec![0.0; feature_window];

    for (unit, records) in raw.by_unit() {
        if records.len() < feature_window {
            match short_units {
                ShortUnitPolicy::Skip => {
                    skipped_units.push(unit);
                    continue;
                }
                ShortUnitPolicy::Error => {
                    return Err(Error::domain(format!(
                        "unit {unit} has {} cycles, fewer than the feature window of {feature_window}",
                        records.len()
                    )));
                }
            }
        }
        let final_cycle = records.iter().map(|r| r.cycle).max().unwrap_or(0);
        let (time, event) = policy.apply(final_cycle as f64);

        let mut row = Vec::with_capacity(2 * (N_SETTINGS + N_SENSORS));
        for c in 0..N_SETTINGS + N_SENSORS {
            for (w, r) in window.iter_mut().zip(records.iter().filter(|r| r.cycle as usize <= feature_window)) {
                *w = r.channel(c);
            }
            let (mean, slope) = mean_and_slope(&window);
            row.push(mean);
            row.push(slope);
        }
        rows.push(row);
        times.push(time);
        events.push(event);
        ids.push(unit as u64);
    }
    if rows.is_empty() {
        return Err(Error::domain("no engine has enough cycles for the feature window"));
    }
    let dataset = SurvivalDataset::new(rows, times, events, feature_names())?.with_ids(ids)?;
    Ok(Reformulated { dataset, skipped_units })
}

/// Sample variance with `n - 1` in the denominator; zero for a single value.
fn sample_variance(values: &[f64]) -> f64 {
    let n = values.len();
    if n < 2 {
        return 0.0;
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64
}

/// Default variance threshold for constant-column detection.
pub const CONSTANT_TOLERANCE: f64 = 1e-12;

/// Columns whose sample variance is at most `tolerance`.
pub fn constant_features(data: &SurvivalDataset, tolerance: f64) -> Result<Vec<usize>> {
    if tolerance.is_nan() || tolerance < 0.0 {
        return Err(Error::domain(format!("tolerance must be non-negative, got {tolerance}")));
    }
    Ok((0..data.n_features())
        .filter(|&j| sample_variance(&data.column(j)) <= tolerance)
        .collect())
}

/// Removes constant columns; returns the reduced dataset and removed names.
pub fn drop_constant_features(data: &SurvivalDataset, tolerance: f64) -> Result<(SurvivalDataset, Vec<String>)> {
    let constant = constant_features(data, tolerance)?;
    let keep: Vec<usize> = (0..data.n_features()).filter(|j| !constant.contains(j)).collect();
    if keep.is_empty() {
        return Err(Error::domain("every feature column is constant"));
    }
    let removed = constant.iter().map(|&j| data.feature_names()[j].clone()).collect();
    Ok((data.select_features(&keep)?, removed))
}

/// Seeded engine-level split: rows are permuted and the first
/// `ceil(ratio * n)` go to training.
pub fn split_train_test(data: &SurvivalDataset, ratio: f64, seed: u64) -> Result<(SurvivalDataset, SurvivalDataset)> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::domain(format!("split ratio must lie in (0, 1), got {ratio}")));
    }
    let n = data.n_obs();
    let n_train = (ratio * n as f64).ceil() as usize;
    if n_train == 0 || n_train >= n {
        return Err(Error::domain(format!(
            "split of {n} rows at ratio {ratio} leaves one side empty"
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    Ok((data.subset(&order[..n_train]), data.subset(&order[n_train..])))
}

/// Writes a survival dataset as CSV: `id`, feature columns, `time`, `event`.
pub fn survival_to_csv(data: &SurvivalDataset) -> String {
    let mut out = String::from("id");
    for name in data.feature_names() {
        out.push(',');
        out.push_str(name);
    }
    out.push_str(",time,event\n");
    for i in 0..data.n_obs() {
        let _ = write!(out, "{}", data.ids()[i]);
        for v in data.row(i) {
            let _ = write!(out, ",{v}");
        }
        let _ = writeln!(out, ",{},{}", data.times()[i], u8::from(data.events()[i]));
    }
    out
}

/// Parses the CSV written by [`survival_to_csv`].
pub fn survival_from_csv(text: &str) -> Result<SurvivalDataset> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().ok_or_else(|| Error::Format("empty dataset file".into()))?;
    let columns: Vec<&str> = header.split(',').collect();
    let w = columns.len();
    if w < 3 || columns[0] != "id" || columns[w - 2] != "time" || columns[w - 1] != "event" {
        return Err(Error::Format("header must be `id,<features...>,time,event`".into()));
    }
    let names: Vec<String> = columns[1..w - 2].iter().map(|s| s.to_string()).collect();
    let (mut rows, mut times, mut events, mut ids) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for (idx, line) in lines {
        let line_no = idx + 1;
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != w {
            return Err(Error::Parse {
                line: line_no,
                message: format!("expected {w} fields, found {}", fields.len()),
            });
        }
        let num = |s: &str| {
            s.parse::<f64>().map_err(|_| Error::Parse {
                line: line_no,
                message: format!("{s:?} is not a number"),
            })
        };
        ids.push(fields[0].parse::<u64>().map_err(|_| Error::Parse {
            line: line_no,
            message: format!("id {:?} is not an integer", fields[0]),
        })?);
        rows.push(fields[1..w - 2].iter().map(|s| num(s)).collect::<Result<Vec<_>>>()?);
        times.push(num(fields[w - 2])?);
        events.push(match fields[w - 1] {
            "1" => true,
            "0" => false,
            other => {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!("event flag {other:?} must be 0 or 1"),
                })
            }
        });
    }
    SurvivalDataset::new(rows, times, events, names)?.with_ids(ids)
}

/// A synthetic fleet in the CMAPSS layout, for demos and tests.
///
/// Every engine degrades at its own rate; lifetimes shrink with the rate,
/// and sensors drift with accumulated wear plus Gaussian-like noise, so the
/// early-window slopes carry signal about the failure time. `op_set_3` and
/// `sensor_1` are held constant as in the single-condition subsets.
pub fn synthetic_fleet(subset: SubsetId, units: usize, seed: u64) -> RawTelemetry {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(subset as u64);
    let base: [f64; N_SENSORS] = [
        518.67, 642.5, 1590.0, 1408.0, 14.62, 21.61, 553.4, 2388.0, 9065.0, 1.3, 47.5, 521.4, 2388.0, 8140.0, 8.44,
        0.03, 392.0, 2388.0, 100.0, 38.8, 23.29,
    ];
    // Wear sensitivity per sensor; zero keeps the sensor flat apart from noise.
    let gain: [f64; N_SENSORS] = [
        0.0, 0.5, 6.0, 9.0, 0.0, 0.0, -0.9, 0.08, 8.0, 0.0, 0.27, -0.75, 0.08, 5.0, 0.04, 0.0, 1.5, 0.0, 0.0, -0.6,
        -0.35,
    ];
    let noise: [f64; N_SENSORS] = [
        0.0, 0.5, 6.0, 9.0, 0.0, 0.001, 0.9, 0.07, 8.0, 0.0, 0.27, 0.75, 0.07, 5.0, 0.04, 0.0, 1.5, 0.0, 0.0, 0.18,
        0.1,
    ];
    let normal = |rng: &mut ChaCha8Rng| -> f64 {
        // Irwin–Hall approximation, mean 0 and unit variance.
        (0..12).map(|_| rng.random::<f64>()).sum::<f64>() - 6.0
    };
    let mut records = Vec::new();
    for unit in 1..=units as u32 {
        let rate: f64 = 0.5 + 1.5 * rng.random::<f64>();
        let life = (100.0 + 110.0 / rate + 15.0 * normal(&mut rng)).round().max(60.0) as u32;
        let offset = 0.3 * normal(&mut rng);
        for cycle in 1..=life {
            let wear = rate * (cycle as f64 / 100.0) + 0.2 * (cycle as f64 / life as f64).powi(4);
            let settings = [
                0.002 * normal(&mut rng),
                0.0003 * normal(&mut rng),
                100.0,
            ];
            let mut sensors = [0.0; N_SENSORS];
            for (s, sensor) in sensors.iter_mut().enumerate() {
                *sensor = base[s] + gain[s] * (wear + offset) + noise[s] * normal(&mut rng);
            }
            records.push(TelemetryRecord {
                unit,
                cycle,
                settings,
                sensors,
            });
        }
    }
    RawTelemetry { subset, records }
}
