//! Browser bindings. Each export takes and returns JSON strings so the page
//! needs no generated glue beyond what wasm-bindgen emits.
//!
//! The plain `*_json` functions hold the logic and are what the native tests
//! exercise; the `#[wasm_bindgen]` wrappers only translate errors.

use rase::io::{read_csv, TaskKind};
use rase::{compute_mms, screen, sis_rank, CriterionSpec, Dataset, ExampleId, ExampleSpec, RaseConfig, ScreeningResult, Warning};
use serde::{Deserialize, Serialize};
use wasm_bindgen::prelude::*;

/// Rows of the ranking shown on the page.
const SHOWN: usize = 25;

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Screening {
    criterion: String,
    #[serde(default)]
    b1: Option<usize>,
    #[serde(default)]
    b2: Option<usize>,
    #[serde(default)]
    d_max: Option<usize>,
    #[serde(default)]
    iterations: usize,
    #[serde(default)]
    seed: u64,
}

impl Screening {
    fn config(&self) -> Result<RaseConfig, String> {
        let criterion = CriterionSpec::from_name(&self.criterion)
            .ok_or_else(|| format!("unknown criterion `{}`", self.criterion))?;
        let mut cfg = RaseConfig::new(criterion);
        if let Some(b1) = self.b1 {
            cfg.b1 = b1;
        }
        cfg.b2 = self.b2;
        cfg.d_max = self.d_max;
        cfg.iterations = self.iterations;
        cfg.seed = self.seed;
        cfg.workers = 1;
        Ok(cfg)
    }
}

#[derive(Deserialize)]
struct ExampleRequest {
    example: String,
    #[serde(default)]
    n: Option<usize>,
    #[serde(default)]
    p: Option<usize>,
    #[serde(default)]
    data_seed: u64,
    #[serde(flatten)]
    screening: Screening,
}

#[derive(Deserialize)]
struct CsvRequest {
    response: String,
    task: String,
    #[serde(default)]
    standardize: bool,
    #[serde(flatten)]
    screening: Screening,
}

#[derive(Serialize)]
struct Row {
    rank: usize,
    feature: String,
    eta_hat: f64,
    selected: bool,
    signal: bool,
}

#[derive(Serialize)]
struct Report {
    n: usize,
    p: usize,
    d_max: usize,
    b2: usize,
    rows: Vec<Row>,
    /// Per-round inclusion estimates for the features in `rows`.
    history: Vec<Vec<f64>>,
    warnings: Vec<Warning>,
    /// Only for simulated data: signals (1-based) and the minimum model size
    /// each method needs to cover them.
    #[serde(skip_serializing_if = "Option::is_none")]
    signal_set: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    mms: Option<Mms>,
}

#[derive(Serialize)]
struct Mms {
    rase: usize,
    sis: usize,
}

fn report(data: &Dataset, result: &ScreeningResult, signals: Option<&[usize]>) -> Report {
    let config = &result.diagnostics.config;
    let rows: Vec<Row> = result
        .ranking
        .iter()
        .take(SHOWN)
        .enumerate()
        .map(|(r, &j)| Row {
            rank: r + 1,
            feature: data.feature_name(j),
            eta_hat: result.eta_hat[j],
            selected: result.selected.contains(&j),
            signal: signals.is_some_and(|s| s.contains(&j)),
        })
        .collect();
    let history = result
        .eta_history
        .iter()
        .map(|round| result.ranking.iter().take(SHOWN).map(|&j| round[j]).collect())
        .collect();
    Report {
        n: data.n(),
        p: data.p(),
        d_max: config.d_max,
        b2: config.b2,
        rows,
        history,
        warnings: result.diagnostics.warnings.clone(),
        signal_set: signals.map(|s| s.iter().map(|j| j + 1).collect()),
        mms: None,
    }
}

fn to_json<T: Serialize>(v: &T) -> Result<String, String> {
    serde_json::to_string(v).map_err(|e| e.to_string())
}

/// Generates a benchmark example, screens it, and scores the ranking
/// against the known signals alongside marginal correlation screening.
pub fn screen_example_json(request: &str) -> Result<String, String> {
    let req: ExampleRequest = serde_json::from_str(request).map_err(|e| format!("request: {e}"))?;
    let id = ExampleId::parse(&req.example).ok_or_else(|| format!("unknown example `{}`", req.example))?;
    let spec = ExampleSpec {
        n: req.n,
        p: req.p,
        ..ExampleSpec::new(id, req.data_seed)
    };
    let labeled = spec.generate().map_err(|e| e.to_string())?;
    let result = screen(&labeled.data, &req.screening.config()?).map_err(|e| e.to_string())?;
    let signals = &labeled.signal_set;
    let mut out = report(&labeled.data, &result, Some(signals));
    out.mms = Some(Mms {
        rase: compute_mms(&result.ranking, signals).map_err(|e| e.to_string())?,
        sis: compute_mms(&sis_rank(&labeled.data).ranking, signals).map_err(|e| e.to_string())?,
    });
    to_json(&out)
}

/// Screens a CSV pasted or loaded into the page.
pub fn screen_csv_json(csv: &str, request: &str) -> Result<String, String> {
    let req: CsvRequest = serde_json::from_str(request).map_err(|e| format!("request: {e}"))?;
    let task = TaskKind::parse(&req.task).ok_or_else(|| format!("unknown task `{}`", req.task))?;
    let mut data = read_csv(csv.as_bytes(), &req.response, task).map_err(|e| e.to_string())?;
    if req.standardize {
        data = data.standardize();
    }
    let result = screen(&data, &req.screening.config()?).map_err(|e| e.to_string())?;
    to_json(&report(&data, &result, None))
}

/// Default shape and task of an example, for filling in the form.
pub fn example_info_json(name: &str) -> Result<String, String> {
    let id = ExampleId::parse(name).ok_or_else(|| format!("unknown example `{name}`"))?;
    let spec = ExampleSpec::new(id, 0);
    let (n, p) = spec.shape();
    let task = match id {
        ExampleId::Ex5 | ExampleId::Ex6 => "classification",
        _ => "regression",
    };
    to_json(&serde_json::json!({"example": id.name(), "n": n, "p": p, "task": task, "signals": id.signal_count()}))
}

#[wasm_bindgen]
pub fn screen_example(request: &str) -> Result<String, JsError> {
    screen_example_json(request).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn screen_csv(csv: &str, request: &str) -> Result<String, JsError> {
    screen_csv_json(csv, request).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn example_info(name: &str) -> Result<String, JsError> {
    example_info_json(name).map_err(|e| JsError::new(&e))
}
