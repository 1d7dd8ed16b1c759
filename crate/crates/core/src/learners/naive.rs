use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::LabelThresholds;
use crate::types::{fingerprint_of, one_hot, ClassScores, Classifier, CongestionLevel};

/// Where the naive model reads the most recent observation when it is
/// carried inside the feature window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PersistenceSource {
    /// Index of the latest target-sensor speed in the feature vector.
    pub feature_index: usize,
    pub thresholds: LabelThresholds,
}

/// Naive memory baseline: the next level equals the last one seen.
///
/// Without a [`PersistenceSource`] the last level is whatever `learn_one`
/// stored most recently (free-flow before any learning). With one, the last
/// level is read from the newest target-sensor speed in the features, so the
/// prediction never depends on whether the model is being updated.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct NaiveMemory {
    last_label: Option<CongestionLevel>,
    source: Option<PersistenceSource>,
}

impl NaiveMemory {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_persistence(source: PersistenceSource) -> Self {
        Self {
            last_label: None,
            source: Some(source),
        }
    }

    pub fn last_label(&self) -> Option<CongestionLevel> {
        self.last_label
    }

    /// Regression form: the carried-forward speed itself.
    pub fn predict_speed(&self, features: &[f64]) -> Result<f64> {
        let src = self
            .source
            .ok_or_else(|| Error::Config("speed persistence needs a feature source".into()))?;
        features
            .get(src.feature_index)
            .copied()
            .ok_or(Error::Shape {
                expected: src.feature_index + 1,
                actual: features.len(),
            })
    }
}

impl Classifier for NaiveMemory {
    fn name(&self) -> &str {
        "NM"
    }

    fn predict_one(&self, features: &[f64]) -> Result<ClassScores> {
        let level = match self.source {
            Some(src) => src.thresholds.label(self.predict_speed(features)?),
            None => self.last_label.unwrap_or_default(),
        };
        Ok(one_hot(level))
    }

    fn learn_one(&mut self, _features: &[f64], target: CongestionLevel) -> Result<()> {
        self.last_label = Some(target);
        Ok(())
    }

    fn reset(&mut self, _seed: u64) {
        self.last_label = None;
    }

    fn fingerprint(&self) -> u64 {
        fingerprint_of(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use CongestionLevel::*;

    fn predict(m: &NaiveMemory) -> CongestionLevel {
        m.predict_one(&[1.0, 2.0]).unwrap().argmax().unwrap()
    }

    #[test]
    fn remembers_last_label() {
        let mut m = NaiveMemory::new();
        assert_eq!(predict(&m), FreeFlow);
        m.learn_one(&[0.0], Congestion).unwrap();
        assert_eq!(predict(&m), Congestion);
        m.learn_one(&[0.0], Bottleneck).unwrap();
        m.learn_one(&[0.0], FreeFlow).unwrap();
        assert_eq!(predict(&m), FreeFlow);
        m.reset(0);
        assert_eq!(m.last_label(), None);
    }

    #[test]
    fn persistence_reads_the_window() {
        let m = NaiveMemory::with_persistence(PersistenceSource {
            feature_index: 1,
            thresholds: LabelThresholds::default(),
        });
        let p = |x: f64| m.predict_one(&[99.0, x]).unwrap().argmax().unwrap();
        assert_eq!(p(10.0), Bottleneck);
        assert_eq!(p(30.0), Congestion);
        assert_eq!(p(60.0), FreeFlow);
        assert_eq!(m.predict_speed(&[99.0, 31.5]).unwrap(), 31.5);
        assert!(m.predict_one(&[1.0]).is_err());
    }
}
