//! Replication studies: run several screeners over freshly generated
//! datasets, score each full ranking by its minimum model size (the
//! shortest prefix containing every signal) and summarize with quantiles.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::baselines::sis_rank;
use crate::clock::Stopwatch;
use crate::criteria::CriterionSpec;
use crate::data::{Dataset, Task};
use crate::datagen::{ExampleId, ExampleSpec};
use crate::error::{invalid, Error, Result};
use crate::io::{read_csv_path, TaskKind};
use crate::parallel::{map_indexed, with_workers};
use crate::rng::derive_seed;
use crate::screening::{screen, RaseConfig};

pub const DEFAULT_QUANTILES: [f64; 5] = [0.05, 0.25, 0.5, 0.75, 0.95];
pub const DEFAULT_REPLICATIONS: usize = 200;

/// Length of the shortest ranking prefix that contains every signal.
pub fn compute_mms(ranking: &[usize], signal_set: &[usize]) -> Result<usize> {
    if signal_set.is_empty() {
        return Err(Error::Contract("signal set is empty".into()));
    }
    let mut position = vec![usize::MAX; ranking.len()];
    for (pos, &j) in ranking.iter().enumerate() {
        if j < position.len() {
            position[j] = pos;
        }
    }
    let mut worst = 0;
    for &j in signal_set {
        match position.get(j) {
            Some(&pos) if pos != usize::MAX => worst = worst.max(pos),
            _ => return Err(Error::Contract(format!("signal {j} is not in the ranking"))),
        }
    }
    Ok(worst + 1)
}

/// Linear-interpolation quantile of sorted values at `h = (n - 1) * prob`.
pub fn quantile(sorted: &[f64], prob: f64) -> Result<f64> {
    if sorted.is_empty() {
        return Err(invalid("values", "empty input"));
    }
    if !(prob > 0.0 && prob < 1.0) {
        return Err(invalid("prob", format!("{prob} outside (0, 1)")));
    }
    let h = (sorted.len() - 1) as f64 * prob;
    let lo = h.floor() as usize;
    let frac = h - lo as f64;
    Ok(match sorted.get(lo + 1) {
        Some(&hi) if frac > 0.0 => sorted[lo] + frac * (hi - sorted[lo]),
        _ => sorted[lo],
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MethodKind {
    Sis,
    /// Ranks the true signals first; a sanity reference.
    Oracle,
    Rase { config: RaseConfig },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MethodEntry {
    pub name: String,
    #[serde(flatten)]
    pub kind: MethodKind,
}

impl MethodEntry {
    /// Parses `sis`, `oracle` or `rase[T]-<criterion>`, where `T` is the
    /// number of re-weighting iterations (default 0).
    pub fn from_name(name: &str) -> Option<Self> {
        let kind = match name {
            "sis" => MethodKind::Sis,
            "oracle" => MethodKind::Oracle,
            _ => {
                let rest = name.strip_prefix("rase")?;
                let (iters, crit) = rest.split_once('-')?;
                let iterations = if iters.is_empty() { 0 } else { iters.parse().ok()? };
                let mut config = RaseConfig::new(CriterionSpec::from_name(crit)?);
                config.iterations = iterations;
                MethodKind::Rase { config }
            }
        };
        Some(Self {
            name: name.to_string(),
            kind,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExternalData {
    pub data: PathBuf,
    pub response: String,
    pub task: TaskKind,
    /// 1-based feature positions, as in the simulate sidecar.
    pub signal_set: Vec<usize>,
    #[serde(default)]
    pub standardize: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DataSource {
    Example(ExampleSpec),
    External(ExternalData),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GridParam {
    B1,
    B2,
    DMax,
}

impl GridParam {
    pub fn name(self) -> &'static str {
        match self {
            GridParam::B1 => "b1",
            GridParam::B2 => "b2",
            GridParam::DMax => "d_max",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s {
            "b1" => Some(GridParam::B1),
            "b2" => Some(GridParam::B2),
            "d_max" => Some(GridParam::DMax),
            _ => None,
        }
    }

    fn apply(self, cfg: &mut RaseConfig, value: usize) {
        match self {
            GridParam::B1 => cfg.b1 = value,
            GridParam::B2 => cfg.b2 = Some(value),
            GridParam::DMax => cfg.d_max = Some(value),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridAxis {
    pub param: GridParam,
    pub values: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchConfig {
    pub example: DataSource,
    pub replications: usize,
    pub methods: Vec<MethodEntry>,
    pub quantiles: Vec<f64>,
    pub master_seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<Vec<GridAxis>>,
    /// Thread count; 0 uses every available core.
    #[serde(default)]
    pub workers: usize,
}

fn config_err(path: &str, reason: impl Into<String>) -> Error {
    Error::Config {
        path: path.to_string(),
        reason: reason.into(),
    }
}

fn as_usize(v: &Value, path: &str) -> Result<usize> {
    v.as_u64()
        .map(|x| x as usize)
        .ok_or_else(|| config_err(path, "expected a non-negative integer"))
}

fn parse_example(v: &Value) -> Result<DataSource> {
    let path = "$.example";
    match v {
        Value::String(s) => {
            let id = ExampleId::parse(s).ok_or_else(|| config_err(path, format!("unknown example `{s}`")))?;
            Ok(DataSource::Example(ExampleSpec::new(id, 0)))
        }
        Value::Object(obj) if obj.contains_key("data") => serde_json::from_value(v.clone())
            .map(DataSource::External)
            .map_err(|e| config_err(path, e.to_string())),
        Value::Object(obj) => {
            let id = obj
                .get("id")
                .and_then(Value::as_str)
                .ok_or_else(|| config_err(&format!("{path}.id"), "expected an example id"))?;
            let id = ExampleId::parse(id).ok_or_else(|| config_err(&format!("{path}.id"), format!("unknown example `{id}`")))?;
            let mut spec = ExampleSpec::new(id, 0);
            for (key, val) in obj {
                let sub = format!("{path}.{key}");
                match key.as_str() {
                    "id" | "seed" => {}
                    "n" => spec.n = Some(as_usize(val, &sub)?),
                    "p" => spec.p = Some(as_usize(val, &sub)?),
                    _ => return Err(config_err(&sub, "unknown key")),
                }
            }
            Ok(DataSource::Example(spec))
        }
        _ => Err(config_err(path, "expected an example id or object")),
    }
}

/// Applies `{"iterations": 1, "criterion": "ebic", ...}` overrides.
fn apply_overrides(cfg: &mut RaseConfig, obj: &Map<String, Value>, path: &str) -> Result<()> {
    let mut gamma = None;
    let mut k = None;
    for (key, val) in obj {
        let sub = format!("{path}.{key}");
        match key.as_str() {
            "name" => {}
            "b1" => cfg.b1 = as_usize(val, &sub)?,
            "b2" => cfg.b2 = Some(as_usize(val, &sub)?),
            "d_max" => cfg.d_max = Some(as_usize(val, &sub)?),
            "iterations" => cfg.iterations = as_usize(val, &sub)?,
            "n_select" => cfg.n_select = Some(as_usize(val, &sub)?),
            "c0" => cfg.c0 = val.as_f64().ok_or_else(|| config_err(&sub, "expected a number"))?,
            "gamma" => gamma = Some(val.as_f64().ok_or_else(|| config_err(&sub, "expected a number"))?),
            "k" => k = Some(as_usize(val, &sub)?),
            "criterion" => {
                cfg.criterion = match val {
                    Value::String(s) => {
                        CriterionSpec::from_name(s).ok_or_else(|| config_err(&sub, format!("unknown criterion `{s}`")))?
                    }
                    other => serde_json::from_value(other.clone()).map_err(|e| config_err(&sub, e.to_string()))?,
                }
            }
            _ => return Err(config_err(&sub, "unknown key")),
        }
    }
    match (&mut cfg.criterion, gamma, k) {
        (CriterionSpec::LinearEbic { gamma: g } | CriterionSpec::GlmEbic { gamma: g }, Some(v), _) => *g = v,
        (_, Some(_), _) => return Err(config_err(&format!("{path}.gamma"), "only the eBIC criteria take gamma")),
        _ => {}
    }
    match (&mut cfg.criterion, k) {
        (CriterionSpec::KnnLoo { k: kk }, Some(v)) => *kk = v,
        (_, Some(_)) => return Err(config_err(&format!("{path}.k"), "only the kNN criterion takes k")),
        _ => {}
    }
    Ok(())
}

fn parse_method(v: &Value, path: &str) -> Result<MethodEntry> {
    let unknown = |name: &str| config_err(path, format!("unknown method `{name}`"));
    match v {
        Value::String(s) => MethodEntry::from_name(s).ok_or_else(|| unknown(s)),
        Value::Object(obj) if obj.contains_key("kind") => {
            serde_json::from_value(v.clone()).map_err(|e| config_err(path, e.to_string()))
        }
        Value::Object(obj) if obj.len() == 1 => {
            let (key, val) = obj.iter().next().expect("one entry");
            let mut entry = MethodEntry::from_name(key).ok_or_else(|| unknown(key))?;
            let sub = format!("{path}.{key}");
            let overrides = val.as_object().ok_or_else(|| config_err(&sub, "expected an object of overrides"))?;
            if let Some(name) = overrides.get("name") {
                entry.name = name
                    .as_str()
                    .ok_or_else(|| config_err(&format!("{sub}.name"), "expected a string"))?
                    .to_string();
            }
            match &mut entry.kind {
                MethodKind::Rase { config } => apply_overrides(config, overrides, &sub)?,
                _ if overrides.keys().all(|k| k == "name") => {}
                _ => return Err(config_err(&sub, "this method takes no parameters")),
            }
            Ok(entry)
        }
        _ => Err(config_err(path, "expected a method name or a single-key object")),
    }
}

fn parse_grid(v: &Value) -> Result<Vec<GridAxis>> {
    let path = "$.grid";
    match v {
        Value::Object(obj) => obj
            .iter()
            .map(|(key, vals)| {
                let sub = format!("{path}.{key}");
                let param = GridParam::parse(key).ok_or_else(|| config_err(&sub, "grid axes are b1, b2 and d_max"))?;
                let values = vals
                    .as_array()
                    .ok_or_else(|| config_err(&sub, "expected an array"))?
                    .iter()
                    .enumerate()
                    .map(|(i, x)| as_usize(x, &format!("{sub}[{i}]")))
                    .collect::<Result<_>>()?;
                Ok(GridAxis { param, values })
            })
            .collect(),
        Value::Array(_) => serde_json::from_value(v.clone()).map_err(|e| config_err(path, e.to_string())),
        _ => Err(config_err(path, "expected an object mapping axis to values")),
    }
}

impl BenchConfig {
    pub fn new(example: DataSource, methods: Vec<MethodEntry>, master_seed: u64) -> Self {
        Self {
            example,
            replications: DEFAULT_REPLICATIONS,
            methods,
            quantiles: DEFAULT_QUANTILES.to_vec(),
            master_seed,
            grid: None,
            workers: 0,
        }
    }

    /// Parses the JSON config format. Errors name the offending JSON path.
    pub fn from_json(text: &str) -> Result<Self> {
        let v: Value = serde_json::from_str(text).map_err(|e| config_err("$", e.to_string()))?;
        Self::from_value(&v)
    }

    pub fn from_value(v: &Value) -> Result<Self> {
        let obj = v.as_object().ok_or_else(|| config_err("$", "expected an object"))?;
        let mut example = None;
        let mut cfg = Self::new(DataSource::Example(ExampleSpec::new(ExampleId::Ex1, 0)), Vec::new(), 0);
        let mut saw_methods = false;
        for (key, val) in obj {
            let path = format!("$.{key}");
            match key.as_str() {
                "example" => example = Some(parse_example(val)?),
                "replications" => cfg.replications = as_usize(val, &path)?,
                "master_seed" => cfg.master_seed = val.as_u64().ok_or_else(|| config_err(&path, "expected a non-negative integer"))?,
                "workers" => cfg.workers = as_usize(val, &path)?,
                "grid" => cfg.grid = Some(parse_grid(val)?),
                "quantiles" => {
                    cfg.quantiles = val
                        .as_array()
                        .ok_or_else(|| config_err(&path, "expected an array"))?
                        .iter()
                        .enumerate()
                        .map(|(i, q)| q.as_f64().ok_or_else(|| config_err(&format!("{path}[{i}]"), "expected a number")))
                        .collect::<Result<_>>()?
                }
                "methods" => {
                    saw_methods = true;
                    cfg.methods = val
                        .as_array()
                        .ok_or_else(|| config_err(&path, "expected an array"))?
                        .iter()
                        .enumerate()
                        .map(|(i, m)| parse_method(m, &format!("{path}[{i}]")))
                        .collect::<Result<_>>()?
                }
                _ => return Err(config_err(&path, "unknown key")),
            }
        }
        cfg.example = example.ok_or_else(|| config_err("$.example", "missing"))?;
        if !saw_methods {
            return Err(config_err("$.methods", "missing"));
        }
        cfg.validate_shape()?;
        Ok(cfg)
    }

    fn validate_shape(&self) -> Result<()> {
        if self.replications == 0 {
            return Err(config_err("$.replications", "must be at least 1"));
        }
        if self.methods.is_empty() {
            return Err(config_err("$.methods", "at least one method is required"));
        }
        for (i, m) in self.methods.iter().enumerate() {
            if self.methods[..i].iter().any(|o| o.name == m.name) {
                return Err(config_err(&format!("$.methods[{i}]"), format!("duplicate method name `{}`", m.name)));
            }
        }
        for (i, q) in self.quantiles.iter().enumerate() {
            if !(*q > 0.0 && *q < 1.0) {
                return Err(config_err(&format!("$.quantiles[{i}]"), format!("{q} outside (0, 1)")));
            }
            if i > 0 && self.quantiles[i - 1] >= *q {
                return Err(config_err(&format!("$.quantiles[{i}]"), "probabilities must be strictly increasing"));
            }
        }
        if self.quantiles.is_empty() {
            return Err(config_err("$.quantiles", "at least one probability is required"));
        }
        if let Some(axes) = &self.grid {
            if axes.is_empty() || axes.len() > 2 {
                return Err(config_err("$.grid", "expected one or two axes"));
            }
            for axis in axes {
                if axis.values.is_empty() {
                    return Err(config_err(&format!("$.grid.{}", axis.param.name()), "axis is empty"));
                }
            }
        }
        Ok(())
    }
}

/// Data plus signal set for one replication.
struct Source {
    fixed: Option<(Dataset, Vec<usize>)>,
    spec: Option<ExampleSpec>,
    n: usize,
    p: usize,
    task: Task,
}

impl Source {
    fn open(example: &DataSource) -> Result<Self> {
        match example {
            DataSource::Example(spec) => {
                spec.validate().map_err(|e| config_err("$.example", e.to_string()))?;
                let (n, p) = spec.shape();
                let task = match spec.id {
                    ExampleId::Ex5 => Task::Classification(2),
                    ExampleId::Ex6 => Task::Classification(4),
                    _ => Task::Regression,
                };
                Ok(Self {
                    fixed: None,
                    spec: Some(spec.clone()),
                    n,
                    p,
                    task,
                })
            }
            DataSource::External(ext) => {
                let mut data = read_csv_path(&ext.data, &ext.response, ext.task)?;
                if ext.standardize {
                    data = data.standardize();
                }
                let (n, p, task) = (data.n(), data.p(), data.task());
                let mut signals = Vec::with_capacity(ext.signal_set.len());
                for (i, &j) in ext.signal_set.iter().enumerate() {
                    if j == 0 || j > p {
                        return Err(config_err(&format!("$.example.signal_set[{i}]"), format!("{j} outside 1..={p}")));
                    }
                    signals.push(j - 1);
                }
                if signals.is_empty() {
                    return Err(config_err("$.example.signal_set", "must be nonempty"));
                }
                Ok(Self {
                    fixed: Some((data, signals)),
                    spec: None,
                    n,
                    p,
                    task,
                })
            }
        }
    }

    fn replication(&self, seed: u64) -> Result<(Dataset, Vec<usize>)> {
        match (&self.fixed, &self.spec) {
            (Some((data, signals)), _) => Ok((data.clone(), signals.clone())),
            (None, Some(spec)) => {
                let spec = ExampleSpec { seed, ..spec.clone() };
                let labeled = spec.generate()?;
                Ok((labeled.data, labeled.signal_set))
            }
            (None, None) => unreachable!("source has data or a generator"),
        }
    }
}

/// Fail-fast pass: every method must accept the data before anything runs.
fn validate_methods(cfg: &BenchConfig, src: &Source) -> Result<()> {
    let mut problems = Vec::new();
    for (i, m) in cfg.methods.iter().enumerate() {
        if let MethodKind::Rase { config } = &m.kind {
            let check = config
                .criterion
                .check(src.task, src.n)
                .and_then(|_| config.resolve(src.n, src.p).map(|_| ()))
                .and_then(|_| {
                    if config.iterations > 0 && src.p < 3 {
                        Err(invalid("p", "iterative screening needs at least 3 features"))
                    } else {
                        Ok(())
                    }
                });
            if let Err(e) = check {
                problems.push(format!("$.methods[{i}] ({}): {e}", m.name));
            }
        }
    }
    if problems.is_empty() {
        Ok(())
    } else {
        Err(config_err("$.methods", problems.join("; ")))
    }
}

/// Full feature ranking from one method.
pub fn method_ranking(kind: &MethodKind, data: &Dataset, signal_set: &[usize], seed: u64) -> Result<Vec<usize>> {
    match kind {
        MethodKind::Sis => Ok(sis_rank(data).ranking),
        MethodKind::Oracle => {
            let mut ranking: Vec<usize> = signal_set.to_vec();
            ranking.sort_unstable();
            ranking.extend((0..data.p()).filter(|j| !signal_set.contains(j)));
            Ok(ranking)
        }
        MethodKind::Rase { config } => {
            let cfg = RaseConfig {
                seed,
                workers: 0,
                ..config.clone()
            };
            Ok(screen(data, &cfg)?.ranking)
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Failure {
    pub replication: usize,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub name: String,
    /// One entry per replication; failed replications score `p`.
    pub mms: Vec<usize>,
    pub quantiles: Vec<f64>,
    pub mean_seconds: f64,
    pub failures: Vec<Failure>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MmsTable {
    pub config: BenchConfig,
    pub p: usize,
    pub signal_count: usize,
    /// Seed of each replication's dataset stream.
    pub replication_seeds: Vec<u64>,
    pub methods: Vec<MethodSummary>,
}

impl MmsTable {
    /// Equality ignoring wall-clock timings.
    pub fn same_outcome(&self, other: &Self) -> bool {
        self.p == other.p
            && self.replication_seeds == other.replication_seeds
            && self.methods.len() == other.methods.len()
            && self
                .methods
                .iter()
                .zip(&other.methods)
                .all(|(a, b)| a.name == b.name && a.mms == b.mms && a.quantiles == b.quantiles && a.failures == b.failures)
    }

    pub fn method(&self, name: &str) -> Option<&MethodSummary> {
        self.methods.iter().find(|m| m.name == name)
    }

    pub fn to_text(&self) -> String {
        let width = self.methods.iter().map(|m| m.name.len()).max().unwrap_or(6).max(6);
        let mut out = format!("{:<width$}", "method");
        for q in &self.config.quantiles {
            out.push_str(&format!(" {:>9}", format!("{}%", trim(q * 100.0))));
        }
        out.push_str(&format!(" {:>10}\n", "seconds"));
        for m in &self.methods {
            out.push_str(&format!("{:<width$}", m.name));
            for v in &m.quantiles {
                out.push_str(&format!(" {:>9}", trim(*v)));
            }
            out.push_str(&format!(" {:>10.3}\n", m.mean_seconds));
        }
        out
    }

    /// Columns `method,quantile_prob,value`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("method,quantile_prob,value\n");
        for m in &self.methods {
            for (q, v) in self.config.quantiles.iter().zip(&m.quantiles) {
                out.push_str(&format!("{},{q},{v}\n", m.name));
            }
        }
        out
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

fn trim(v: f64) -> String {
    if v.fract() == 0.0 {
        format!("{v:.0}")
    } else {
        format!("{v:.2}")
    }
}

pub fn run_bench(cfg: &BenchConfig) -> Result<MmsTable> {
    cfg.validate_shape()?;
    let src = Source::open(&cfg.example)?;
    validate_methods(cfg, &src)?;
    let seeds: Vec<u64> = (0..cfg.replications).map(|r| derive_seed(cfg.master_seed, &[r as u64])).collect();
    let per_rep = with_workers(cfg.workers, || {
        map_indexed(
            cfg.replications,
            || (),
            |_, r| {
                let (data, signals) = match src.replication(seeds[r]) {
                    Ok(x) => x,
                    Err(e) => {
                        let msg = format!("data generation failed: {e}");
                        return vec![(Err(msg), 0.0); cfg.methods.len()];
                    }
                };
                cfg.methods
                    .iter()
                    .enumerate()
                    .map(|(m, entry)| {
                        let clock = Stopwatch::start();
                        let seed = derive_seed(cfg.master_seed, &[r as u64, m as u64]);
                        let mms = method_ranking(&entry.kind, &data, &signals, seed)
                            .and_then(|ranking| compute_mms(&ranking, &signals))
                            .map_err(|e| e.to_string());
                        (mms, clock.seconds())
                    })
                    .collect::<Vec<_>>()
            },
        )
    })?;
    let signal_count = match &src.fixed {
        Some((_, s)) => s.len(),
        None => src.spec.as_ref().map_or(0, |s| s.id.signal_count()),
    };
    let mut methods = Vec::with_capacity(cfg.methods.len());
    for (m, entry) in cfg.methods.iter().enumerate() {
        let mut mms = Vec::with_capacity(cfg.replications);
        let mut failures = Vec::new();
        let mut seconds = 0.0;
        for (r, rep) in per_rep.iter().enumerate() {
            let (outcome, secs) = &rep[m];
            seconds += secs;
            match outcome {
                Ok(v) => mms.push(*v),
                Err(message) => {
                    mms.push(src.p);
                    failures.push(Failure {
                        replication: r,
                        message: message.clone(),
                    });
                }
            }
        }
        let mut sorted: Vec<f64> = mms.iter().map(|&v| v as f64).collect();
        sorted.sort_by(f64::total_cmp);
        let quantiles = cfg.quantiles.iter().map(|&q| quantile(&sorted, q)).collect::<Result<_>>()?;
        methods.push(MethodSummary {
            name: entry.name.clone(),
            mms,
            quantiles,
            mean_seconds: seconds / cfg.replications as f64,
            failures,
        });
    }
    Ok(MmsTable {
        config: cfg.clone(),
        p: src.p,
        signal_count,
        replication_seeds: seeds,
        methods,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridRow {
    pub method: String,
    /// `(axis, value)` pairs in axis order.
    pub cell: Vec<(GridParam, usize)>,
    pub median_mms: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridTable {
    pub axes: Vec<GridAxis>,
    pub rows: Vec<GridRow>,
    /// The full table behind every cell, in row-major cell order.
    pub cells: Vec<MmsTable>,
}

impl GridTable {
    /// Long format: `method,<axis...>,median_mms`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("method");
        for axis in &self.axes {
            out.push(',');
            out.push_str(axis.param.name());
        }
        out.push_str(",median_mms\n");
        for row in &self.rows {
            out.push_str(&row.method);
            for (_, v) in &row.cell {
                out.push_str(&format!(",{v}"));
            }
            out.push_str(&format!(",{}\n", row.median_mms));
        }
        out
    }
}

/// Sweeps every screening method over the grid cells (row-major over the
/// axes); non-screening methods are skipped.
pub fn run_grid(cfg: &BenchConfig) -> Result<GridTable> {
    cfg.validate_shape()?;
    let axes = cfg.grid.clone().ok_or_else(|| config_err("$.grid", "missing"))?;
    let methods: Vec<MethodEntry> = cfg
        .methods
        .iter()
        .filter(|m| matches!(m.kind, MethodKind::Rase { .. }))
        .cloned()
        .collect();
    if methods.is_empty() {
        return Err(config_err("$.methods", "a grid needs at least one screening method"));
    }
    let mut cells: Vec<Vec<(GridParam, usize)>> = vec![Vec::new()];
    for axis in &axes {
        cells = cells
            .into_iter()
            .flat_map(|prefix| {
                axis.values.iter().map(move |&v| {
                    let mut c = prefix.clone();
                    c.push((axis.param, v));
                    c
                })
            })
            .collect();
    }
    let mut rows = Vec::new();
    let mut tables = Vec::new();
    for cell in cells {
        let mut sub = BenchConfig {
            methods: methods.clone(),
            grid: None,
            ..cfg.clone()
        };
        for m in &mut sub.methods {
            if let MethodKind::Rase { config } = &mut m.kind {
                for &(param, v) in &cell {
                    param.apply(config, v);
                }
            }
        }
        let table = run_bench(&sub)?;
        for m in &table.methods {
            let mut sorted: Vec<f64> = m.mms.iter().map(|&v| v as f64).collect();
            sorted.sort_by(f64::total_cmp);
            rows.push(GridRow {
                method: m.name.clone(),
                cell: cell.clone(),
                median_mms: quantile(&sorted, 0.5)?,
            });
        }
        tables.push(table);
    }
    Ok(GridTable {
        axes,
        rows,
        cells: tables,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngStream;
    use proptest::prelude::*;
    use rand::seq::SliceRandom;

    #[test]
    fn mms_examples() {
        assert_eq!(compute_mms(&[3, 1, 2, 0], &[1, 3]).unwrap(), 2);
        let identity: Vec<usize> = (0..1000).collect();
        assert_eq!(compute_mms(&identity, &[999]).unwrap(), 1000);
        assert!(compute_mms(&[0, 1, 2], &[]).is_err());
        assert!(compute_mms(&[0, 1, 2], &[5]).is_err());
    }

    proptest! {
        #[test]
        fn mms_matches_prefix_scan(seed in 0u64..10_000, p in 4usize..60) {
            let mut rng = RngStream::from_seed(seed);
            let mut ranking: Vec<usize> = (0..p).collect();
            ranking.shuffle(&mut rng);
            let mut signals: Vec<usize> = (0..p).collect();
            signals.shuffle(&mut rng);
            signals.truncate(4);
            let scan = (1..=p).find(|&len| signals.iter().all(|s| ranking[..len].contains(s))).unwrap();
            let mms = compute_mms(&ranking, &signals).unwrap();
            prop_assert_eq!(mms, scan);
            prop_assert!(mms >= signals.len());
            let top: Vec<usize> = ranking[..4].to_vec();
            prop_assert_eq!(compute_mms(&ranking, &top).unwrap(), 4);
        }
    }

    #[test]
    fn quantile_examples() {
        assert_eq!(quantile(&[1.0, 2.0, 3.0, 4.0, 5.0], 0.5).unwrap(), 3.0);
        assert_eq!(quantile(&[1.0, 2.0, 3.0, 4.0], 0.5).unwrap(), 2.5);
        assert!((quantile(&[10.0, 20.0], 0.95).unwrap() - 19.5).abs() < 1e-12);
        assert_eq!(quantile(&[7.0], 0.05).unwrap(), 7.0);
        assert!(quantile(&[], 0.5).is_err());
        assert!(quantile(&[1.0], 1.0).is_err());
    }

    fn small_ex1() -> DataSource {
        DataSource::Example(ExampleSpec {
            n: Some(60),
            p: Some(40),
            ..ExampleSpec::new(ExampleId::Ex1, 0)
        })
    }

    fn quick_rase(name: &str) -> MethodEntry {
        let mut m = MethodEntry::from_name(name).unwrap();
        if let MethodKind::Rase { config } = &mut m.kind {
            config.b1 = 10;
            config.b2 = Some(30);
        }
        m
    }

    #[test]
    fn method_names_parse() {
        let m = MethodEntry::from_name("rase1-ebic").unwrap();
        let MethodKind::Rase { config } = m.kind else { panic!() };
        assert_eq!(config.iterations, 1);
        assert_eq!(config.criterion, CriterionSpec::linear_ebic());
        assert!(matches!(MethodEntry::from_name("sis").unwrap().kind, MethodKind::Sis));
        assert!(MethodEntry::from_name("rase-foo").is_none());
        assert!(MethodEntry::from_name("lasso").is_none());
    }

    #[test]
    fn parses_smoke_config() {
        let cfg = BenchConfig::from_json(r#"{"example": "ex1", "replications": 2, "methods": ["sis"], "master_seed": 1}"#).unwrap();
        assert_eq!(cfg.replications, 2);
        assert_eq!(cfg.quantiles, DEFAULT_QUANTILES.to_vec());
        assert_eq!(cfg.methods[0].name, "sis");
    }

    #[test]
    fn parses_overrides_and_grid() {
        let cfg = BenchConfig::from_json(
            r#"{"example": {"id": "ex1", "n": 50, "p": 80}, "methods": [{"rase-bic": {"iterations": 1, "criterion": "ebic", "gamma": 0.3, "b1": 7}}],
                "master_seed": 3, "grid": {"b2": [10, 20], "d_max": [2, 3, 4]}}"#,
        )
        .unwrap();
        let MethodKind::Rase { config } = &cfg.methods[0].kind else { panic!() };
        assert_eq!(config.iterations, 1);
        assert_eq!(config.b1, 7);
        assert_eq!(config.criterion, CriterionSpec::LinearEbic { gamma: 0.3 });
        assert_eq!(cfg.methods[0].name, "rase-bic");
        let grid = cfg.grid.unwrap();
        assert_eq!(grid.len(), 2);
        let DataSource::Example(spec) = cfg.example else { panic!() };
        assert_eq!(spec.shape(), (50, 80));
    }

    fn config_error_path(text: &str) -> String {
        match BenchConfig::from_json(text) {
            Err(Error::Config { path, .. }) => path,
            other => panic!("expected a config error, got {other:?}"),
        }
    }

    #[test]
    fn errors_name_json_paths() {
        assert_eq!(config_error_path(r#"{"example": "ex1", "methods": ["sis", "lasso"]}"#), "$.methods[1]");
        assert_eq!(config_error_path(r#"{"example": "ex9", "methods": ["sis"]}"#), "$.example");
        assert_eq!(config_error_path(r#"{"example": "ex1", "methods": ["sis"], "quantiles": [0.5, 0.25]}"#), "$.quantiles[1]");
        assert_eq!(config_error_path(r#"{"example": "ex1", "methods": ["sis"], "replications": -1}"#), "$.replications");
        assert_eq!(config_error_path(r#"{"example": "ex1", "methods": [{"rase-bic": {"bogus": 1}}]}"#), "$.methods[0].rase-bic.bogus");
        assert_eq!(config_error_path(r#"{"example": "ex1", "methods": ["sis"], "extra": 1}"#), "$.extra");
        assert_eq!(config_error_path(r#"{"methods": ["sis"]}"#), "$.example");
        assert_eq!(config_error_path(r#"{"example": "ex1"}"#), "$.methods");
        assert_eq!(config_error_path("{"), "$");
    }

    #[test]
    fn incompatible_methods_fail_before_running() {
        let mut cfg = BenchConfig::new(small_ex1(), vec![quick_rase("rase-glm-bic"), quick_rase("rase-bic"), quick_rase("rase-svm")], 0);
        cfg.replications = 1;
        match run_bench(&cfg) {
            Err(Error::Config { path, reason }) => {
                assert_eq!(path, "$.methods");
                assert!(reason.contains("$.methods[0]") && !reason.contains("$.methods[1]"), "{reason}");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn oracle_method_is_perfect() {
        let mut cfg = BenchConfig::new(small_ex1(), vec![MethodEntry::from_name("oracle").unwrap()], 5);
        cfg.replications = 3;
        let table = run_bench(&cfg).unwrap();
        let m = table.method("oracle").unwrap();
        assert_eq!(m.mms, vec![4, 4, 4]);
        assert!(m.quantiles.iter().all(|&q| q == 4.0));
        assert_eq!(table.to_csv().lines().count(), 1 + 5);
    }

    #[test]
    fn single_replication_has_flat_quantiles() {
        let mut cfg = BenchConfig::new(small_ex1(), vec![MethodEntry::from_name("sis").unwrap()], 2);
        cfg.replications = 1;
        let table = run_bench(&cfg).unwrap();
        let m = &table.methods[0];
        assert!(m.quantiles.iter().all(|&q| q == m.mms[0] as f64));
    }

    #[test]
    fn bench_is_reproducible_across_workers() {
        let methods = vec![MethodEntry::from_name("sis").unwrap(), quick_rase("rase1-ebic")];
        let mut cfg = BenchConfig::new(small_ex1(), methods, 11);
        cfg.replications = 3;
        cfg.workers = 1;
        let base = run_bench(&cfg).unwrap();
        for workers in [4, 0] {
            cfg.workers = workers;
            assert!(run_bench(&cfg).unwrap().same_outcome(&base));
        }
        for m in &base.methods {
            assert!(m.mms.iter().all(|&v| (4..=40).contains(&v)));
            assert!(m.quantiles.windows(2).all(|w| w[0] <= w[1]));
        }
        let json: Value = serde_json::from_str(&base.to_json().unwrap()).unwrap();
        assert_eq!(json["methods"][1]["mms"].as_array().unwrap().len(), 3);
        assert_eq!(json["replication_seeds"].as_array().unwrap().len(), 3);
        assert!(base.to_text().starts_with("method"));
    }

    #[test]
    fn one_cell_grid_matches_bench() {
        let mut cfg = BenchConfig::new(small_ex1(), vec![MethodEntry::from_name("sis").unwrap(), quick_rase("rase-bic")], 4);
        cfg.replications = 3;
        cfg.grid = Some(vec![GridAxis {
            param: GridParam::B2,
            values: vec![30],
        }]);
        let grid = run_grid(&cfg).unwrap();
        let bench = run_bench(&BenchConfig {
            methods: vec![quick_rase("rase-bic")],
            grid: None,
            ..cfg.clone()
        })
        .unwrap();
        assert_eq!(grid.rows.len(), 1);
        assert_eq!(grid.rows[0].median_mms, bench.methods[0].quantiles[2]);
    }

    #[test]
    fn grid_has_one_row_per_cell() {
        let mut cfg = BenchConfig::new(small_ex1(), vec![quick_rase("rase-bic")], 4);
        cfg.replications = 1;
        cfg.grid = Some(vec![
            GridAxis {
                param: GridParam::B1,
                values: vec![2, 3],
            },
            GridAxis {
                param: GridParam::DMax,
                values: vec![2, 3, 4],
            },
        ]);
        let grid = run_grid(&cfg).unwrap();
        assert_eq!(grid.rows.len(), 6);
        let csv = grid.to_csv();
        assert_eq!(csv.lines().next().unwrap(), "method,b1,d_max,median_mms");
        assert_eq!(csv.lines().count(), 7);
        assert_eq!(grid.cells[5].config.methods[0].kind, {
            let mut m = quick_rase("rase-bic");
            if let MethodKind::Rase { config } = &mut m.kind {
                config.b1 = 3;
                config.d_max = Some(4);
            }
            m.kind
        });
    }

    #[test]
    fn external_data_source() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("toy.csv");
        let labeled = ExampleSpec {
            n: Some(50),
            p: Some(30),
            ..ExampleSpec::new(ExampleId::Ex1, 9)
        }
        .generate()
        .unwrap();
        let mut file = std::fs::File::create(&path).unwrap();
        crate::io::write_csv(&labeled.data, &mut file).unwrap();
        let ext = serde_json::json!({
            "example": {"data": path, "response": "y", "task": "regression", "signal_set": [1, 2, 3, 4]},
            "replications": 2,
            "methods": ["oracle", "sis"],
        });
        let cfg = BenchConfig::from_value(&ext).unwrap();
        let table = run_bench(&cfg).unwrap();
        assert_eq!(table.method("oracle").unwrap().mms, vec![4, 4]);
        let sis = &table.method("sis").unwrap().mms;
        assert_eq!(sis[0], sis[1]);

        let bad = serde_json::json!({
            "example": {"data": path, "response": "y", "task": "regression", "signal_set": [0]},
            "methods": ["sis"],
        });
        assert!(run_bench(&BenchConfig::from_value(&bad).unwrap()).is_err());
    }
}
