//! Method roster and learner construction.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::elm::{OsElm, OselmConfig};
use crate::ensembles::{Aee, Arf, ArfConfig, BaggingConfig, BoostConfig, Dwm, OnlineBoost, OzaBag};
use crate::error::{Error, Result};
use crate::ingest::{LabelThresholds, WindowSpec};
use crate::learners::{
    GaussianNb, KnnConfig, KnnWindow, LinearKind, LinearModel, NaiveMemory, PersistenceSource,
};
use crate::trees::HoeffdingTree;
use crate::types::{fingerprint_of, ClassScores, Classifier, CongestionLevel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum MethodId {
    NM,
    NB,
    KNNA,
    P,
    PA,
    SGD,
    HT,
    HAT,
    HATT,
    DWM,
    AEE,
    OB,
    OZB,
    OZBA,
    ARF,
    OSELM,
}

impl MethodId {
    pub const ALL: [MethodId; 16] = [
        MethodId::NM,
        MethodId::NB,
        MethodId::KNNA,
        MethodId::P,
        MethodId::PA,
        MethodId::SGD,
        MethodId::HT,
        MethodId::HAT,
        MethodId::HATT,
        MethodId::DWM,
        MethodId::AEE,
        MethodId::OB,
        MethodId::OZB,
        MethodId::OZBA,
        MethodId::ARF,
        MethodId::OSELM,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            MethodId::NM => "NM",
            MethodId::NB => "NB",
            MethodId::KNNA => "KNNA",
            MethodId::P => "P",
            MethodId::PA => "PA",
            MethodId::SGD => "SGD",
            MethodId::HT => "HT",
            MethodId::HAT => "HAT",
            MethodId::HATT => "HATT",
            MethodId::DWM => "DWM",
            MethodId::AEE => "AEE",
            MethodId::OB => "OB",
            MethodId::OZB => "OZB",
            MethodId::OZBA => "OZBA",
            MethodId::ARF => "ARF",
            MethodId::OSELM => "OSELM",
        }
    }

    pub fn is_tree(self) -> bool {
        matches!(self, MethodId::HT | MethodId::HAT | MethodId::HATT)
    }
}

impl fmt::Display for MethodId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MethodId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown method {s:?}")))
    }
}

/// How the class forecast is produced.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    /// Predict the level directly.
    #[default]
    Classification,
    /// Forecast the speed, then label it (naive model only).
    NaiveRegression,
}

/// Everything a learner needs to know about the stream it will see.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LearnerContext {
    pub window: WindowSpec,
    pub target_position: usize,
    pub thresholds: LabelThresholds,
    pub n_init: usize,
    pub seed: u64,
    pub strategy: Strategy,
}

/// Carried-forward speed, labeled with the run's thresholds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpeedThenLabel {
    model: NaiveMemory,
    thresholds: LabelThresholds,
}

impl Classifier for SpeedThenLabel {
    fn name(&self) -> &str {
        "NM"
    }

    fn predict_one(&self, features: &[f64]) -> Result<ClassScores> {
        let speed = self.model.predict_speed(features)?;
        Ok(crate::types::one_hot(self.thresholds.label(speed)))
    }

    fn learn_one(&mut self, features: &[f64], target: CongestionLevel) -> Result<()> {
        self.model.learn_one(features, target)
    }

    fn reset(&mut self, seed: u64) {
        self.model.reset(seed)
    }

    fn fingerprint(&self) -> u64 {
        fingerprint_of(self)
    }
}

pub fn build_learner(method: MethodId, ctx: &LearnerContext) -> Result<Box<dyn Classifier>> {
    if ctx.strategy == Strategy::NaiveRegression && method != MethodId::NM {
        return Err(Error::Config(format!(
            "the speed-regression strategy is only defined for NM, not {method}"
        )));
    }
    let seed = ctx.seed;
    Ok(match method {
        MethodId::NM => {
            let source = PersistenceSource {
                feature_index: ctx.window.latest_target_feature(ctx.target_position),
                thresholds: ctx.thresholds,
            };
            let nm = NaiveMemory::with_persistence(source);
            match ctx.strategy {
                Strategy::Classification => Box::new(nm),
                Strategy::NaiveRegression => Box::new(SpeedThenLabel {
                    model: nm,
                    thresholds: ctx.thresholds,
                }),
            }
        }
        MethodId::NB => Box::new(GaussianNb::new()),
        MethodId::KNNA => Box::new(KnnWindow::new(KnnConfig::default())),
        MethodId::P => Box::new(LinearModel::new(LinearKind::Perceptron)),
        MethodId::PA => Box::new(LinearModel::new(LinearKind::passive_aggressive())),
        MethodId::SGD => Box::new(LinearModel::new(LinearKind::sgd())),
        MethodId::HT => Box::new(HoeffdingTree::vfdt()),
        MethodId::HAT => Box::new(HoeffdingTree::adaptive()),
        MethodId::HATT => Box::new(HoeffdingTree::efdt()),
        MethodId::DWM => Box::new(Dwm::default()),
        MethodId::AEE => Box::new(Aee::default()),
        MethodId::OB => Box::new(OnlineBoost::new(BoostConfig::default(), seed)?),
        MethodId::OZB => Box::new(OzaBag::new(BaggingConfig::default(), seed)?),
        MethodId::OZBA => Box::new(OzaBag::new(BaggingConfig::with_adwin(), seed)?),
        MethodId::ARF => Box::new(Arf::new(ArfConfig::default(), seed)?),
        MethodId::OSELM => Box::new(OsElm::new(
            OselmConfig {
                init_size: ctx.n_init,
                ..OselmConfig::default()
            },
            seed,
        )?),
    })
}
