//! Prequential (test-then-train) evaluation and class metrics.

use std::collections::VecDeque;
use std::fmt;
use std::io::Write;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{
    build_instances, LabelThresholds, LoopMatrix, NeighborSet, WindowSpec, DEFAULT_WARM_START,
};
use crate::registry::{build_learner, LearnerContext, MethodId, Strategy};
use crate::types::{Classifier, CongestionLevel, LabeledInstance, N_CLASSES};

/// Length of the trailing window behind [`EvalReport::recent_umf1`].
pub const RECENT_WINDOW: usize = DEFAULT_WARM_START;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Frozen after the warm start.
    Offline,
    /// Keeps learning after every prediction.
    Online,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Offline => "offline",
            Mode::Online => "online",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "offline" => Ok(Mode::Offline),
            "online" => Ok(Mode::Online),
            _ => Err(Error::Config(format!("unknown mode {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub method: MethodId,
    pub mode: Mode,
    pub horizon: usize,
    pub n_lags: usize,
    pub location: String,
    pub seed: u64,
    pub n_init: usize,
    pub thresholds: LabelThresholds,
    pub strategy: Strategy,
}

impl RunConfig {
    pub fn new(method: MethodId, mode: Mode, horizon: usize, location: impl Into<String>) -> Self {
        Self {
            method,
            mode,
            horizon,
            n_lags: WindowSpec::default().n_lags,
            location: location.into(),
            seed: 0,
            n_init: DEFAULT_WARM_START,
            thresholds: LabelThresholds::default(),
            strategy: Strategy::Classification,
        }
    }

    pub fn window(&self) -> WindowSpec {
        WindowSpec {
            n_lags: self.n_lags,
            horizon: self.horizon,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.window().validate()?;
        self.thresholds.validate()?;
        if self.n_init == 0 {
            return Err(Error::Config("n_init must be >= 1".into()));
        }
        if self.strategy == Strategy::NaiveRegression && self.method != MethodId::NM {
            return Err(Error::Config(
                "the speed-regression strategy requires NM".into(),
            ));
        }
        Ok(())
    }

    pub fn learner_context(&self, target_position: usize) -> LearnerContext {
        LearnerContext {
            window: self.window(),
            target_position,
            thresholds: self.thresholds,
            n_init: self.n_init,
            seed: self.seed,
            strategy: self.strategy,
        }
    }
}

/// Rows are true classes, columns predicted classes.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix(pub [[u64; N_CLASSES]; N_CLASSES]);

impl ConfusionMatrix {
    pub fn record(&mut self, truth: CongestionLevel, predicted: CongestionLevel) {
        self.0[truth.index()][predicted.index()] += 1;
    }

    fn remove(&mut self, truth: CongestionLevel, predicted: CongestionLevel) {
        self.0[truth.index()][predicted.index()] -= 1;
    }

    pub fn total(&self) -> u64 {
        self.0.iter().flatten().sum()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

fn ratio(num: f64, den: f64) -> f64 {
    if den > 0.0 {
        num / den
    } else {
        0.0
    }
}

/// One-vs-rest precision, recall and F1 per class; 0/0 counts as 0.
pub fn f1_scores(cm: &ConfusionMatrix) -> [ClassMetrics; N_CLASSES] {
    let mut out = [ClassMetrics::default(); N_CLASSES];
    for (c, m) in out.iter_mut().enumerate() {
        let tp = cm.0[c][c] as f64;
        let predicted: f64 = (0..N_CLASSES).map(|r| cm.0[r][c] as f64).sum();
        let actual: f64 = cm.0[c].iter().map(|&v| v as f64).sum();
        m.precision = ratio(tp, predicted);
        m.recall = ratio(tp, actual);
        m.f1 = ratio(2.0 * m.precision * m.recall, m.precision + m.recall);
    }
    out
}

/// Unweighted mean of the three per-class F1 scores.
pub fn umf1(f1: [f64; N_CLASSES]) -> f64 {
    f1.iter().sum::<f64>() / N_CLASSES as f64
}

pub fn umf1_of(cm: &ConfusionMatrix) -> f64 {
    umf1(f1_scores(cm).map(|m| m.f1))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub config: RunConfig,
    pub confusion: ConfusionMatrix,
    pub per_class: [ClassMetrics; N_CLASSES],
    pub umf1: f64,
    pub n_eval: u64,
    /// Wall-clock seconds spent on the evaluated region.
    pub runtime_s: f64,
    /// UMF1 over the last [`RECENT_WINDOW`] predictions.
    pub recent_umf1: f64,
}

impl EvalReport {
    fn assemble(
        config: &RunConfig,
        confusion: ConfusionMatrix,
        recent: &ConfusionMatrix,
        runtime_s: f64,
    ) -> Self {
        let per_class = f1_scores(&confusion);
        Self {
            config: config.clone(),
            confusion,
            per_class,
            umf1: umf1(per_class.map(|m| m.f1)),
            n_eval: confusion.total(),
            runtime_s: (runtime_s * 1000.0).round() / 1000.0,
            recent_umf1: umf1_of(recent),
        }
    }

    pub fn f1(&self, class: CongestionLevel) -> f64 {
        self.per_class[class.index()].f1
    }

    /// Three class rows followed by the summary row.
    pub fn rows(&self) -> Vec<ResultRow> {
        let c = &self.config;
        let row = |class: String, m: ClassMetrics| ResultRow {
            method: c.method.to_string(),
            location: c.location.clone(),
            mode: c.mode.to_string(),
            horizon: c.horizon,
            seed: c.seed,
            class,
            precision: m.precision,
            recall: m.recall,
            f1: m.f1,
            umf1: self.umf1,
            n_eval: self.n_eval,
            runtime_s: self.runtime_s,
        };
        let mut rows: Vec<ResultRow> = CongestionLevel::ALL
            .iter()
            .map(|l| row(l.as_str().to_string(), self.per_class[l.index()]))
            .collect();
        let mean = |f: fn(&ClassMetrics) -> f64| {
            self.per_class.iter().map(f).sum::<f64>() / N_CLASSES as f64
        };
        rows.push(row(
            SUMMARY_CLASS.into(),
            ClassMetrics {
                precision: mean(|m| m.precision),
                recall: mean(|m| m.recall),
                f1: self.umf1,
            },
        ));
        rows
    }
}

/// `class` value of summary rows.
pub const SUMMARY_CLASS: &str = "ALL";

pub const RESULT_COLUMNS: [&str; 12] = [
    "method",
    "location",
    "mode",
    "horizon",
    "seed",
    "class",
    "precision",
    "recall",
    "f1",
    "umf1",
    "n_eval",
    "runtime_s",
];

/// One line of `results.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub method: String,
    pub location: String,
    pub mode: String,
    pub horizon: usize,
    pub seed: u64,
    pub class: String,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub umf1: f64,
    pub n_eval: u64,
    pub runtime_s: f64,
}

pub fn write_rows<W: Write>(rows: &[ResultRow], writer: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(writer);
    w.write_record(RESULT_COLUMNS)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, thiserror::Error)]
#[error("run aborted at instance {index}: {source}")]
pub struct RunError {
    pub index: usize,
    #[source]
    pub source: Error,
    /// Metrics over the predictions made before the failure.
    pub partial: Box<EvalReport>,
}

/// Warm start on the first `n_init` instances, then predict each remaining
/// instance before (in online mode) learning from it.
pub fn prequential_run(
    stream: &[LabeledInstance],
    learner: &mut dyn Classifier,
    cfg: &RunConfig,
) -> std::result::Result<EvalReport, RunError> {
    let mut cm = ConfusionMatrix::default();
    let mut recent = ConfusionMatrix::default();
    let abort = |index, source, cm, recent: &ConfusionMatrix, secs| RunError {
        index,
        source,
        partial: Box::new(EvalReport::assemble(cfg, cm, recent, secs)),
    };
    if let Err(e) = cfg.validate() {
        return Err(abort(0, e, cm, &recent, 0.0));
    }
    if stream.len() <= cfg.n_init {
        let e = Error::InsufficientData {
            len: stream.len(),
            n_init: cfg.n_init,
        };
        return Err(abort(0, e, cm, &recent, 0.0));
    }
    for (i, inst) in stream[..cfg.n_init].iter().enumerate() {
        if let Err(e) = learner.learn_one(&inst.features, inst.target) {
            return Err(abort(i, e, cm, &recent, 0.0));
        }
    }

    let mut window: VecDeque<(CongestionLevel, CongestionLevel)> =
        VecDeque::with_capacity(RECENT_WINDOW + 1);
    let start = Instant::now();
    for (offset, inst) in stream[cfg.n_init..].iter().enumerate() {
        let index = cfg.n_init + offset;
        let predicted = match learner.predict_one(&inst.features).and_then(|s| s.argmax()) {
            Ok(p) => p,
            Err(e) => return Err(abort(index, e, cm, &recent, start.elapsed().as_secs_f64())),
        };
        cm.record(inst.target, predicted);
        recent.record(inst.target, predicted);
        window.push_back((inst.target, predicted));
        if window.len() > RECENT_WINDOW {
            let (t, p) = window.pop_front().expect("non-empty");
            recent.remove(t, p);
        }
        if cfg.mode == Mode::Online {
            if let Err(e) = learner.learn_one(&inst.features, inst.target) {
                return Err(abort(index, e, cm, &recent, start.elapsed().as_secs_f64()));
            }
        }
    }
    Ok(EvalReport::assemble(
        cfg,
        cm,
        &recent,
        start.elapsed().as_secs_f64(),
    ))
}

/// Builds instances for `cfg`'s window and runs a freshly built learner.
pub fn run_on_matrix(cfg: &RunConfig, data: &LoopMatrix, nb: &NeighborSet) -> Result<EvalReport> {
    cfg.validate()?;
    let stream = build_instances(data, nb, &cfg.window(), &cfg.thresholds)?;
    let mut learner = build_learner(cfg.method, &cfg.learner_context(nb.target_position))?;
    learner.reset(cfg.seed);
    prequential_run(&stream, learner.as_mut(), cfg).map_err(|e| Error::Aborted {
        index: e.index,
        source: Box::new(e.source),
    })
}

/// One report per horizon, in the given order; a failed horizon does not
/// stop the others.
pub fn horizon_sweep(
    base: &RunConfig,
    horizons: &[usize],
    data: &LoopMatrix,
    nb: &NeighborSet,
) -> Result<Vec<Result<EvalReport>>> {
    if horizons.is_empty() || horizons.contains(&0) {
        return Err(Error::Config("horizons must be non-empty and >= 1".into()));
    }
    Ok(horizons
        .iter()
        .map(|&h| {
            let cfg = RunConfig {
                horizon: h,
                ..base.clone()
            };
            run_on_matrix(&cfg, data, nb)
        })
        .collect())
}
