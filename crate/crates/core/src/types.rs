//! Domain types shared by every learner and the evaluation harness.

use std::collections::hash_map::DefaultHasher;
use std::fmt;
use std::hash::Hasher;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of congestion classes.
pub const N_CLASSES: usize = 3;

/// Traffic phase of a road segment, ordered by ordinal index.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, Default,
)]
#[serde(rename_all = "kebab-case")]
pub enum CongestionLevel {
    #[default]
    FreeFlow = 0,
    Congestion = 1,
    Bottleneck = 2,
}

impl CongestionLevel {
    pub const ALL: [CongestionLevel; N_CLASSES] = [
        CongestionLevel::FreeFlow,
        CongestionLevel::Congestion,
        CongestionLevel::Bottleneck,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(index: usize) -> Option<Self> {
        Self::ALL.get(index).copied()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            CongestionLevel::FreeFlow => "free-flow",
            CongestionLevel::Congestion => "congestion",
            CongestionLevel::Bottleneck => "bottleneck",
        }
    }
}

impl fmt::Display for CongestionLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CongestionLevel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| Error::InvalidInput(format!("unknown congestion level {s:?}")))
    }
}

/// Speed reading in miles per hour.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct SpeedValue(f64);

impl SpeedValue {
    /// Readings above this are treated as sensor faults.
    pub const MAX_MPH: f64 = 150.0;

    pub fn new(mph: f64) -> Result<Self> {
        if mph.is_finite() && (0.0..=Self::MAX_MPH).contains(&mph) {
            Ok(Self(mph))
        } else {
            Err(Error::InvalidInput(format!(
                "speed {mph} outside [0, {}] mph",
                Self::MAX_MPH
            )))
        }
    }

    pub fn mph(self) -> f64 {
        self.0
    }
}

/// Per-class score vector. Only the argmax is contractually meaningful;
/// margin-based learners emit raw margins.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct ClassScores(pub [f64; N_CLASSES]);

impl ClassScores {
    pub fn zeros() -> Self {
        Self([0.0; N_CLASSES])
    }

    pub fn get(&self, level: CongestionLevel) -> f64 {
        self.0[level.index()]
    }

    pub fn argmax(&self) -> Result<CongestionLevel> {
        argmax_class(self)
    }

    /// Rescales non-negative scores to sum to one; all-zero stays all-zero.
    pub fn normalized(mut self) -> Self {
        let total: f64 = self.0.iter().sum();
        if total > 0.0 && total.is_finite() {
            self.0.iter_mut().for_each(|s| *s /= total);
        }
        self
    }

    /// Softmax over log-scores, used by likelihood-based learners.
    pub fn softmax(log_scores: [f64; N_CLASSES]) -> Self {
        let max = log_scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut out = [0.0; N_CLASSES];
        for (o, l) in out.iter_mut().zip(log_scores) {
            *o = (l - max).exp();
        }
        Self(out).normalized()
    }
}

/// Class with the maximal score; ties go to the lowest ordinal.
pub fn argmax_class(scores: &ClassScores) -> Result<CongestionLevel> {
    let mut best = 0;
    for (index, &value) in scores.0.iter().enumerate() {
        if !value.is_finite() {
            return Err(Error::InvalidScore { index, value });
        }
        if value > scores.0[best] {
            best = index;
        }
    }
    Ok(CongestionLevel::ALL[best])
}

pub fn one_hot(level: CongestionLevel) -> ClassScores {
    let mut s = [0.0; N_CLASSES];
    s[level.index()] = 1.0;
    ClassScores(s)
}

/// One supervised example: lagged neighborhood speeds and the congestion
/// level observed `horizon` slots after the last lag.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledInstance {
    pub features: Vec<f64>,
    pub target: CongestionLevel,
    /// Raw target-sensor speed behind `target`.
    pub target_speed: f64,
    /// 5-minute slot index of the target.
    pub target_time: usize,
    pub location_id: String,
}

/// Uniform incremental-learner interface: one instance per update.
///
/// `predict_one` takes `&self`, so prediction can never mutate state.
/// `reset(seed)` followed by an identical call sequence must reproduce
/// identical outputs.
pub trait Classifier: Send {
    fn name(&self) -> &str;

    fn predict_one(&self, features: &[f64]) -> Result<ClassScores>;

    fn learn_one(&mut self, features: &[f64], target: CongestionLevel) -> Result<()>;

    fn reset(&mut self, seed: u64);

    /// Digest of the complete learner state.
    fn fingerprint(&self) -> u64;
}

impl Classifier for Box<dyn Classifier> {
    fn name(&self) -> &str {
        (**self).name()
    }

    fn predict_one(&self, features: &[f64]) -> Result<ClassScores> {
        (**self).predict_one(features)
    }

    fn learn_one(&mut self, features: &[f64], target: CongestionLevel) -> Result<()> {
        (**self).learn_one(features, target)
    }

    fn reset(&mut self, seed: u64) {
        (**self).reset(seed)
    }

    fn fingerprint(&self) -> u64 {
        (**self).fingerprint()
    }
}

/// Hash of a value's serialized form.
pub(crate) fn fingerprint_of<T: Serialize + ?Sized>(value: &T) -> u64 {
    let bytes = serde_json::to_vec(value).expect("learner state serializes");
    let mut h = DefaultHasher::new();
    h.write(&bytes);
    h.finish()
}

pub(crate) fn check_finite(features: &[f64]) -> Result<()> {
    match features.iter().position(|v| !v.is_finite()) {
        Some(i) => Err(Error::InvalidInput(format!(
            "non-finite feature at index {i}"
        ))),
        None => Ok(()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn argmax_examples() {
        let c = |a, b, c| argmax_class(&ClassScores([a, b, c])).unwrap();
        assert_eq!(c(0.1, 0.7, 0.2), CongestionLevel::Congestion);
        assert_eq!(c(0.5, 0.5, 0.0), CongestionLevel::FreeFlow);
        assert_eq!(c(0.0, 0.0, 1.0), CongestionLevel::Bottleneck);
        assert_eq!(c(0.0, 0.3, 0.3), CongestionLevel::Congestion);
    }

    #[test]
    fn argmax_rejects_non_finite() {
        let err = argmax_class(&ClassScores([0.1, f64::NAN, 0.2])).unwrap_err();
        assert!(matches!(err, Error::InvalidScore { index: 1, .. }));
        assert!(argmax_class(&ClassScores([f64::INFINITY, 0.0, 0.0])).is_err());
    }

    #[test]
    fn one_hot_examples() {
        assert_eq!(one_hot(CongestionLevel::FreeFlow).0, [1.0, 0.0, 0.0]);
        assert_eq!(one_hot(CongestionLevel::Congestion).0, [0.0, 1.0, 0.0]);
        assert_eq!(one_hot(CongestionLevel::Bottleneck).0, [0.0, 0.0, 1.0]);
        for c in CongestionLevel::ALL {
            assert_eq!(argmax_class(&one_hot(c)).unwrap(), c);
        }
    }

    #[test]
    fn ordinal_order_is_fixed() {
        assert!(CongestionLevel::FreeFlow < CongestionLevel::Congestion);
        assert!(CongestionLevel::Congestion < CongestionLevel::Bottleneck);
        for (i, c) in CongestionLevel::ALL.iter().enumerate() {
            assert_eq!(c.index(), i);
            assert_eq!(c.as_str().parse::<CongestionLevel>().unwrap(), *c);
        }
    }

    #[test]
    fn speed_bounds() {
        assert!(SpeedValue::new(0.0).is_ok());
        assert!(SpeedValue::new(150.0).is_ok());
        assert!(SpeedValue::new(150.1).is_err());
        assert!(SpeedValue::new(-0.5).is_err());
        assert!(SpeedValue::new(f64::NAN).is_err());
    }

    #[test]
    fn softmax_sums_to_one() {
        let s = ClassScores::softmax([-1000.0, -1001.0, -2000.0]);
        assert!((s.0.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert_eq!(s.argmax().unwrap(), CongestionLevel::FreeFlow);
    }
}
