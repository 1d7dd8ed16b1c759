//! Experiment specs: the method x mode x horizon x seed cross-product over one
//! data source, with `results.csv` and `manifest.json` outputs.

use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::{run_on_matrix, write_rows, Mode, ResultRow, RunConfig};
use crate::ingest::{
    parse_loop_csv, select_neighbors, LabelThresholds, LoopMatrix, NeighborSet, DEFAULT_WARM_START,
};
use crate::registry::{MethodId, Strategy};
use crate::synth::{gen_corridor, CorridorConfig};

pub const DEFAULT_HORIZONS: [usize; 5] = [1, 5, 10, 15, 20];
pub const RESULTS_FILE: &str = "results.csv";
pub const MANIFEST_FILE: &str = "manifest.json";
/// Neighbors on each side of the target.
pub const NEIGHBORS_PER_SIDE: usize = 4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
pub enum DataSource {
    Files { loops: PathBuf, meta: PathBuf },
    Synthetic(CorridorConfig),
}

fn default_modes() -> Vec<Mode> {
    vec![Mode::Offline, Mode::Online]
}

fn default_horizons() -> Vec<usize> {
    DEFAULT_HORIZONS.to_vec()
}

fn default_seeds() -> Vec<u64> {
    vec![0]
}

fn default_n_lags() -> usize {
    5
}

fn default_n_init() -> usize {
    DEFAULT_WARM_START
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub data: DataSource,
    /// Target sensor id; the synthetic corridor defaults to its center.
    #[serde(default)]
    pub target: Option<String>,
    /// Label written to the `location` column; defaults to the target id.
    #[serde(default)]
    pub location: Option<String>,
    #[serde(default)]
    pub thresholds: LabelThresholds,
    pub methods: Vec<MethodId>,
    #[serde(default = "default_modes")]
    pub modes: Vec<Mode>,
    #[serde(default = "default_horizons")]
    pub horizons: Vec<usize>,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default = "default_n_lags")]
    pub n_lags: usize,
    #[serde(default = "default_n_init")]
    pub n_init: usize,
    #[serde(default)]
    pub strategy: Strategy,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    /// When false, `runtime_s` is written as 0 so reruns are byte-identical.
    #[serde(default = "yes")]
    pub record_runtime: bool,
}

/// 1-based line of the first occurrence of `"key"`, or line 1.
fn key_line(text: &str, key: &str) -> (usize, usize) {
    let needle = format!("\"{key}\"");
    text.lines()
        .enumerate()
        .find_map(|(i, l)| l.find(&needle).map(|c| (i + 1, c + 1)))
        .unwrap_or((1, 1))
}

impl ExperimentSpec {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text, path)
    }

    /// Parses and validates; relative data and output paths resolve against
    /// the directory of `origin`.
    pub fn parse(text: &str, origin: &Path) -> Result<Self> {
        let spec_err = |(line, column): (usize, usize), message: String| Error::Spec {
            path: origin.to_path_buf(),
            line,
            column,
            message,
        };
        let mut spec: Self = serde_json::from_str(text)
            .map_err(|e| spec_err((e.line(), e.column()), e.to_string()))?;
        if let Err((key, message)) = spec.check() {
            return Err(spec_err(key_line(text, key), message));
        }
        let base = origin.parent().unwrap_or(Path::new(""));
        let anchor = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let DataSource::Files { loops, meta } = &mut spec.data {
            anchor(loops);
            anchor(meta);
        }
        if let Some(out) = spec.output_dir.as_mut() {
            anchor(out);
        }
        Ok(spec)
    }

    /// Semantic checks, naming the offending key.
    fn check(&self) -> std::result::Result<(), (&'static str, String)> {
        let nonempty = |key: &'static str, empty: bool| {
            if empty {
                Err((key, format!("{key} must not be empty")))
            } else {
                Ok(())
            }
        };
        nonempty("methods", self.methods.is_empty())?;
        nonempty("modes", self.modes.is_empty())?;
        nonempty("horizons", self.horizons.is_empty())?;
        nonempty("seeds", self.seeds.is_empty())?;
        if self.horizons.contains(&0) {
            return Err(("horizons", "horizons must be >= 1".into()));
        }
        if self.n_lags == 0 {
            return Err(("n_lags", "n_lags must be >= 1".into()));
        }
        if self.n_init == 0 {
            return Err(("n_init", "n_init must be >= 1".into()));
        }
        self.thresholds
            .validate()
            .map_err(|e| ("thresholds", e.to_string()))?;
        if self.strategy == Strategy::NaiveRegression {
            if let Some(m) = self.methods.iter().find(|&&m| m != MethodId::NM) {
                return Err((
                    "strategy",
                    format!("the speed-regression strategy requires NM, got {m}"),
                ));
            }
        }
        match &self.data {
            DataSource::Synthetic(c) => c.validate().map_err(|e| ("synthetic", e.to_string()))?,
            DataSource::Files { .. } if self.target.is_none() => {
                return Err(("files", "file data needs a \"target\" sensor".into()))
            }
            DataSource::Files { .. } => {}
        }
        Ok(())
    }

    pub fn target_id(&self) -> String {
        match (&self.target, &self.data) {
            (Some(t), _) => t.clone(),
            (None, DataSource::Synthetic(c)) => CorridorConfig::sensor_id(c.target_sensor()),
            (None, DataSource::Files { .. }) => String::new(),
        }
    }

    pub fn location_label(&self) -> String {
        self.location.clone().unwrap_or_else(|| self.target_id())
    }

    /// Keeps only `seed`.
    pub fn override_seed(&mut self, seed: u64) {
        self.seeds = vec![seed];
    }

    /// The run cross-product in method, mode, horizon, seed order.
    pub fn runs(&self) -> Vec<RunConfig> {
        let location = self.location_label();
        let mut out = Vec::new();
        for &method in &self.methods {
            for &mode in &self.modes {
                for &horizon in &self.horizons {
                    for &seed in &self.seeds {
                        out.push(RunConfig {
                            seed,
                            n_lags: self.n_lags,
                            n_init: self.n_init,
                            thresholds: self.thresholds,
                            strategy: self.strategy,
                            ..RunConfig::new(method, mode, horizon, location.clone())
                        });
                    }
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub matrix: LoopMatrix,
    pub neighbors: NeighborSet,
}

pub fn load_dataset(spec: &ExperimentSpec) -> Result<Dataset> {
    let (matrix, meta) = match &spec.data {
        DataSource::Files { loops, meta } => {
            for p in [loops, meta] {
                if !p.is_file() {
                    return Err(Error::Config(format!(
                        "data file {} not found",
                        p.display()
                    )));
                }
            }
            parse_loop_csv(loops, meta)?
        }
        DataSource::Synthetic(cfg) => {
            let c = gen_corridor(cfg)?;
            (c.matrix, c.meta)
        }
    };
    let neighbors = select_neighbors(&meta, &spec.target_id(), NEIGHBORS_PER_SIDE)?;
    Ok(Dataset { matrix, neighbors })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RunStatus {
    Ok,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub method: MethodId,
    pub mode: Mode,
    pub horizon: usize,
    pub seed: u64,
    pub status: RunStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub spec: ExperimentSpec,
    pub n_runs: usize,
    pub n_failed: usize,
    pub runs: Vec<RunRecord>,
}

#[derive(Debug)]
pub struct RunOutcome {
    pub config: RunConfig,
    pub result: Result<crate::eval::EvalReport>,
}

/// Runs every configuration on a pool of `workers` threads (0 = rayon's
/// default). Outcomes keep the order of [`ExperimentSpec::runs`].
pub fn execute(spec: &ExperimentSpec, data: &Dataset, workers: usize) -> Result<Vec<RunOutcome>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Config(format!("cannot start {workers} workers: {e}")))?;
    let runs = spec.runs();
    Ok(pool.install(|| {
        runs.into_par_iter()
            .map(|config| {
                let result = run_on_matrix(&config, &data.matrix, &data.neighbors);
                match &result {
                    Ok(r) => log::info!(
                        "{} {} h={} seed={}: UMF1 {:.3}",
                        config.method,
                        config.mode,
                        config.horizon,
                        config.seed,
                        r.umf1
                    ),
                    Err(e) => log::error!(
                        "{} {} h={} seed={} failed: {e}",
                        config.method,
                        config.mode,
                        config.horizon,
                        config.seed
                    ),
                }
                RunOutcome { config, result }
            })
            .collect()
    }))
}

/// Rows of the successful runs.
pub fn result_rows(outcomes: &[RunOutcome], record_runtime: bool) -> Vec<ResultRow> {
    outcomes
        .iter()
        .filter_map(|o| o.result.as_ref().ok())
        .flat_map(|r| r.rows())
        .map(|mut row| {
            if !record_runtime {
                row.runtime_s = 0.0;
            }
            row
        })
        .collect()
}

pub fn manifest(spec: &ExperimentSpec, outcomes: &[RunOutcome]) -> Manifest {
    let runs: Vec<RunRecord> = outcomes
        .iter()
        .map(|o| RunRecord {
            method: o.config.method,
            mode: o.config.mode,
            horizon: o.config.horizon,
            seed: o.config.seed,
            status: if o.result.is_ok() {
                RunStatus::Ok
            } else {
                RunStatus::Failed
            },
            error: o.result.as_ref().err().map(|e| e.to_string()),
        })
        .collect();
    Manifest {
        spec: spec.clone(),
        n_runs: runs.len(),
        n_failed: runs
            .iter()
            .filter(|r| r.status == RunStatus::Failed)
            .count(),
        runs,
    }
}

/// Writes `bytes` to `path` through a temporary file in the same directory.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

pub fn write_outputs(
    spec: &ExperimentSpec,
    outcomes: &[RunOutcome],
    out_dir: &Path,
) -> Result<Manifest> {
    std::fs::create_dir_all(out_dir)?;
    let mut csv = Vec::new();
    write_rows(&result_rows(outcomes, spec.record_runtime), &mut csv)?;
    let m = manifest(spec, outcomes);
    let mut json = serde_json::to_vec_pretty(&m)?;
    json.push(b'\n');
    write_atomic(&out_dir.join(RESULTS_FILE), &csv)?;
    write_atomic(&out_dir.join(MANIFEST_FILE), &json)?;
    Ok(m)
}

/// Loads the data, runs everything, writes both output files. Data errors
/// return before anything is written.
pub fn run_experiment(spec: &ExperimentSpec, out_dir: &Path, workers: usize) -> Result<Manifest> {
    let data = load_dataset(spec)?;
    let outcomes = execute(spec, &data, workers)?;
    write_outputs(spec, &outcomes, out_dir)
}

#[cfg(test)]
mod tests {
    use super::*;

    const SPEC: &str = r#"{
  "data": {"synthetic": {"n_slots": 3000, "seed": 5}},
  "methods": ["NM", "HT"],
  "modes": ["offline", "online"],
  "horizons": [1, 5],
  "n_init": 500,
  "record_runtime": false
}"#;

    fn parse(text: &str) -> Result<ExperimentSpec> {
        ExperimentSpec::parse(text, Path::new("dir/spec.json"))
    }

    #[test]
    fn defaults_and_cross_product() {
        let s = parse(SPEC).unwrap();
        assert_eq!(s.seeds, vec![0]);
        assert_eq!(s.target_id(), "SYN-4");
        let runs = s.runs();
        assert_eq!(runs.len(), 8);
        assert_eq!(
            (runs[0].method, runs[0].mode, runs[0].horizon),
            (MethodId::NM, Mode::Offline, 1)
        );
        assert_eq!(
            (runs[7].method, runs[7].mode, runs[7].horizon),
            (MethodId::HT, Mode::Online, 5)
        );
        let d = parse(r#"{"data": {"synthetic": {}}, "methods": ["NB"]}"#).unwrap();
        assert_eq!(d.horizons, DEFAULT_HORIZONS.to_vec());
        assert_eq!(d.modes, vec![Mode::Offline, Mode::Online]);
    }

    #[test]
    fn diagnostics_point_at_the_line() {
        let bad = SPEC.replace("\"modes\": [\"offline\", \"online\"]", "\"modes\": []");
        match parse(&bad) {
            Err(Error::Spec { line, message, .. }) => {
                assert_eq!(line, 4);
                assert!(message.contains("modes"));
            }
            other => panic!("{other:?}"),
        }
        match parse(&SPEC.replace("\"HT\"", "\"XGB\"")) {
            Err(Error::Spec { line: 3, .. }) => {}
            other => panic!("{other:?}"),
        }
        match parse(&SPEC.replace("\"horizons\": [1, 5]", "\"horizons\": [0]")) {
            Err(Error::Spec { line: 5, .. }) => {}
            other => panic!("{other:?}"),
        }
        assert!(
            parse(r#"{"data": {"files": {"loops": "a", "meta": "b"}}, "methods": ["NM"]}"#)
                .is_err()
        );
        assert!(parse(&SPEC.replace("\"n_init\"", "\"n_inti\"")).is_err());
    }

    #[test]
    fn relative_paths_follow_the_spec_file() {
        let s = parse(r#"{"data": {"files": {"loops": "l.csv", "meta": "/abs/m.csv"}}, "target": "X", "methods": ["NM"]}"#)
            .unwrap();
        match s.data {
            DataSource::Files { loops, meta } => {
                assert_eq!(loops, Path::new("dir/l.csv"));
                assert_eq!(meta, Path::new("/abs/m.csv"));
            }
            _ => unreachable!(),
        }
    }

    #[test]
    fn missing_file_writes_nothing() {
        let dir = tempfile::tempdir().unwrap();
        let s = parse(r#"{"data": {"files": {"loops": "/nope/l.csv", "meta": "/nope/m.csv"}}, "target": "X", "methods": ["NM"]}"#)
            .unwrap();
        let out = dir.path().join("out");
        assert!(run_experiment(&s, &out, 1).is_err());
        assert!(!out.exists());
    }

    #[test]
    fn failures_are_recorded_not_fatal() {
        let mut s = parse(SPEC).unwrap();
        // Too few instances for a warm start of this size.
        s.n_init = 2990;
        s.horizons = vec![1, 20];
        let data = load_dataset(&s).unwrap();
        let outcomes = execute(&s, &data, 1).unwrap();
        let m = manifest(&s, &outcomes);
        assert_eq!(m.n_runs, 8);
        assert_eq!(m.n_failed, 4);
        assert!(m
            .runs
            .iter()
            .filter(|r| r.horizon == 20)
            .all(|r| r.status == RunStatus::Failed && r.error.is_some()));
        assert_eq!(result_rows(&outcomes, false).len(), 16);
    }
}
