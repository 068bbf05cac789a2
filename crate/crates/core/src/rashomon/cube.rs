use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use super::select_reference;
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::forest::SurvivalForest;
use crate::metrics::{MetricKind, PerformanceScore};
use crate::survival::SurvivalDataset;

/// Time at which each cube entry is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum EvalTime {
    /// Each observation's own recorded time `t_i`.
    #[default]
    OwnTime,
    /// One shared horizon for every observation (sensitivity analysis only).
    Common(f64),
}

/// `m x n` matrix of risks `f_k(x_i, t_i)` with one performance score per
/// model and the index of the best-performing (reference) model.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionCube {
    n_models: usize,
    n_obs: usize,
    risks: Vec<f64>,
    performances: Vec<PerformanceScore>,
    model_ids: Vec<String>,
    reference_index: usize,
    annotations: BTreeMap<String, String>,
}

impl PredictionCube {
    /// Builds a cube from per-model risk rows; the reference is the
    /// best-scoring model (lowest index on ties).
    pub fn new(rows: Vec<Vec<f64>>, performances: Vec<PerformanceScore>, model_ids: Vec<String>) -> Result<Self> {
        let m = rows.len();
        if m == 0 {
            return Err(Error::domain("a prediction cube needs at least one model"));
        }
        let n = rows[0].len();
        if n == 0 {
            return Err(Error::domain("a prediction cube needs at least one observation"));
        }
        if performances.len() != m || model_ids.len() != m {
            return Err(Error::domain(format!(
                "{m} risk rows but {} performances and {} model ids",
                performances.len(),
                model_ids.len()
            )));
        }
        let mut risks = Vec::with_capacity(m * n);
        for (k, row) in rows.into_iter().enumerate() {
            if row.len() != n {
                return Err(Error::domain(format!("risk row {k} has {} entries, expected {n}", row.len())));
            }
            if let Some(v) = row.iter().find(|v| !(0.0..=1.0).contains(*v)) {
                return Err(Error::domain(format!("risk {v} in row {k} is outside [0, 1]")));
            }
            risks.extend(row);
        }
        if let Some(id) = model_ids.iter().find(|id| id.is_empty() || id.chars().any(char::is_whitespace)) {
            return Err(Error::domain(format!("model id {id:?} must be non-empty without whitespace")));
        }
        let reference_index = select_reference(&performances)?;
        Ok(PredictionCube {
            n_models: m,
            n_obs: n,
            risks,
            performances,
            model_ids,
            reference_index,
            annotations: BTreeMap::new(),
        })
    }

    pub fn n_models(&self) -> usize {
        self.n_models
    }

    pub fn n_obs(&self) -> usize {
        self.n_obs
    }

    pub fn risk(&self, model: usize, obs: usize) -> f64 {
        self.risks[model * self.n_obs + obs]
    }

    pub fn row(&self, model: usize) -> &[f64] {
        &self.risks[model * self.n_obs..(model + 1) * self.n_obs]
    }

    pub fn performances(&self) -> &[PerformanceScore] {
        &self.performances
    }

    pub fn model_ids(&self) -> &[String] {
        &self.model_ids
    }

    pub fn reference_index(&self) -> usize {
        self.reference_index
    }

    /// Free-form `key value` metadata carried through the cube file.
    pub fn annotations(&self) -> &BTreeMap<String, String> {
        &self.annotations
    }

    pub fn annotate(&mut self, key: &str, value: &str) -> Result<()> {
        let ok = |s: &str| !s.is_empty() && !s.contains(['\n', '\r']);
        if !ok(key) || key.contains(char::is_whitespace) || !ok(value) {
            return Err(Error::domain(format!("invalid annotation {key:?} = {value:?}")));
        }
        self.annotations.insert(key.to_string(), value.to_string());
        Ok(())
    }

    /// Serialises the cube in the text matrix format:
    ///
    /// ```text
    /// survmult-cube 1
    /// m <models>
    /// n <observations>
    /// metric <kind> <orientation> <horizon|none>
    /// reference <index>
    /// @<key> <value>            (zero or more annotations)
    /// models
    /// <id> <performance>        (m lines)
    /// risks
    /// <r_k1> ... <r_kn>         (m lines, row-major)
    /// ```
    ///
    /// Numbers use the shortest representation that parses back exactly.
    pub fn to_text(&self) -> String {
        let perf = &self.performances[0];
        let mut out = String::new();
        let _ = writeln!(out, "survmult-cube 1");
        let _ = writeln!(out, "m {}", self.n_models);
        let _ = writeln!(out, "n {}", self.n_obs);
        let horizon = perf.horizon.map_or("none".to_string(), |h| h.to_string());
        let _ = writeln!(out, "metric {} {} {}", perf.metric_kind.name(), perf.orientation.name(), horizon);
        let _ = writeln!(out, "reference {}", self.reference_index);
        for (k, v) in &self.annotations {
            let _ = writeln!(out, "@{k} {v}");
        }
        out.push_str("models\n");
        for (id, p) in self.model_ids.iter().zip(&self.performances) {
            let _ = writeln!(out, "{id} {}", p.value);
        }
        out.push_str("risks\n");
        for k in 0..self.n_models {
            let line: Vec<String> = self.row(k).iter().map(|v| v.to_string()).collect();
            out.push_str(&line.join(" "));
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim_end()));
        let mut next = |what: &str| {
            lines
                .next()
                .ok_or_else(|| Error::Format(format!("cube file ends before {what}")))
        };
        let parse_err = |line: usize, message: String| Error::Parse { line, message };

        let (ln, magic) = next("header")?;
        if magic != "survmult-cube 1" {
            return Err(parse_err(ln, format!("unsupported cube header {magic:?}")));
        }
        let field = |(ln, line): (usize, &str), key: &str| -> Result<String> {
            line.strip_prefix(key)
                .and_then(|rest| rest.strip_prefix(' '))
                .map(str::to_string)
                .ok_or_else(|| parse_err(ln, format!("expected `{key} ...`")))
        };
        let count = |(ln, line): (usize, &str), key: &str| -> Result<usize> {
            field((ln, line), key)?
                .parse()
                .map_err(|e| parse_err(ln, format!("bad {key}: {e}")))
        };
        let m = count(next("m")?, "m")?;
        let n = count(next("n")?, "n")?;

        let (ln, metric_line) = next("metric")?;
        let metric = field((ln, metric_line), "metric")?;
        let parts: Vec<&str> = metric.split(' ').collect();
        if parts.len() != 3 {
            return Err(parse_err(ln, "metric line needs kind, orientation and horizon".into()));
        }
        let kind: MetricKind = parts[0].parse().map_err(|e: Error| parse_err(ln, e.to_string()))?;
        if kind.orientation().name() != parts[1] {
            return Err(parse_err(ln, format!("orientation {} does not match {}", parts[1], kind.name())));
        }
        let horizon = match parts[2] {
            "none" => None,
            h => Some(h.parse::<f64>().map_err(|e| parse_err(ln, format!("bad horizon: {e}")))?),
        };
        let stated_reference = count(next("reference")?, "reference")?;

        let mut annotations = BTreeMap::new();
        loop {
            let (ln, line) = next("models")?;
            if line == "models" {
                break;
            }
            let Some(rest) = line.strip_prefix('@') else {
                return Err(parse_err(ln, format!("expected `models`, found {line:?}")));
            };
            let (k, v) = rest
                .split_once(' ')
                .ok_or_else(|| parse_err(ln, "annotation needs a key and a value".into()))?;
            annotations.insert(k.to_string(), v.to_string());
        }

        let mut ids = Vec::with_capacity(m);
        let mut performances = Vec::with_capacity(m);
        for _ in 0..m {
            let (ln, line) = next("model line")?;
            let (id, value) = line
                .split_once(' ')
                .ok_or_else(|| parse_err(ln, "model line needs an id and a performance".into()))?;
            let value: f64 = value.parse().map_err(|e| parse_err(ln, format!("bad performance: {e}")))?;
            ids.push(id.to_string());
            performances.push(PerformanceScore::new(value, kind, horizon));
        }
        let (ln, line) = next("risks")?;
        if line != "risks" {
            return Err(parse_err(ln, format!("expected `risks`, found {line:?}")));
        }
        let mut rows = Vec::with_capacity(m);
        for _ in 0..m {
            let (ln, line) = next("risk row")?;
            let row = line
                .split(' ')
                .map(|v| v.parse::<f64>().map_err(|e| parse_err(ln, format!("bad risk {v:?}: {e}"))))
                .collect::<Result<Vec<_>>>()?;
            if row.len() != n {
                return Err(parse_err(ln, format!("risk row has {} entries, expected {n}", row.len())));
            }
            rows.push(row);
        }
        let mut cube = PredictionCube::new(rows, performances, ids)?;
        if cube.reference_index != stated_reference {
            return Err(Error::Format(format!(
                "stated reference {stated_reference} is not the best model ({})",
                cube.reference_index
            )));
        }
        cube.annotations = annotations;
        Ok(cube)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_text(&text)
    }
}

/// Risks of one model for every test observation.
pub fn cube_row(model: &SurvivalForest, test: &SurvivalDataset, eval: EvalTime) -> Result<Vec<f64>> {
    (0..test.n_obs())
        .map(|i| {
            let t = match eval {
                EvalTime::OwnTime => test.times()[i],
                EvalTime::Common(h) => h,
            };
            model.predict_risk(test.row(i), t).map_err(|e| Error::Prediction {
                model: 0,
                observation: i,
                source: Box::new(e),
            })
        })
        .collect()
}

/// Evaluates every model on every test observation at its own time.
pub fn build_prediction_cube(
    models: &[SurvivalForest],
    test: &SurvivalDataset,
    performances: Vec<PerformanceScore>,
) -> Result<PredictionCube> {
    build_prediction_cube_with(models, test, performances, EvalTime::OwnTime, Execution::default())
}

pub fn build_prediction_cube_with(
    models: &[SurvivalForest],
    test: &SurvivalDataset,
    performances: Vec<PerformanceScore>,
    eval: EvalTime,
    execution: Execution,
) -> Result<PredictionCube> {
    let rows = execution.try_map_indexed(models.len(), |k| {
        cube_row(&models[k], test, eval).map_err(|e| match e {
            Error::Prediction {
                observation, source, ..
            } => Error::Prediction {
                model: k,
                observation,
                source,
            },
            other => other,
        })
    })?;
    let ids = models.iter().map(|f| f.hyperparams().id()).collect();
    PredictionCube::new(rows, performances, ids)
}
