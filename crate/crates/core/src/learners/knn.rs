use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::drift::Adwin;
use crate::error::Result;
use crate::types::{
    check_finite, fingerprint_of, one_hot, ClassScores, Classifier, CongestionLevel, N_CLASSES,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KnnConfig {
    pub k: usize,
    pub max_window: usize,
    /// ADWIN confidence on the 0/1 error stream; `None` disables shrinking.
    pub adwin_delta: Option<f64>,
}

impl Default for KnnConfig {
    fn default() -> Self {
        Self {
            k: 5,
            max_window: 1000,
            adwin_delta: Some(crate::drift::DEFAULT_DELTA),
        }
    }
}

/// Sliding-window k-nearest-neighbors over raw features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnnWindow {
    cfg: KnnConfig,
    buffer: VecDeque<(Vec<f64>, CongestionLevel)>,
    adwin: Option<Adwin>,
}

impl KnnWindow {
    pub fn new(cfg: KnnConfig) -> Self {
        assert!(cfg.k >= 1 && cfg.max_window >= 1);
        Self {
            cfg,
            buffer: VecDeque::with_capacity(cfg.max_window + 1),
            adwin: cfg.adwin_delta.map(Adwin::new),
        }
    }

    pub fn len(&self) -> usize {
        self.buffer.len()
    }

    pub fn is_empty(&self) -> bool {
        self.buffer.is_empty()
    }

    pub fn front(&self) -> Option<&(Vec<f64>, CongestionLevel)> {
        self.buffer.front()
    }

    pub fn detector(&self) -> Option<&Adwin> {
        self.adwin.as_ref()
    }
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

impl Classifier for KnnWindow {
    fn name(&self) -> &str {
        if self.adwin.is_some() {
            "KNNA"
        } else {
            "KNN"
        }
    }

    fn predict_one(&self, features: &[f64]) -> Result<ClassScores> {
        if self.buffer.is_empty() {
            return Ok(one_hot(CongestionLevel::FreeFlow));
        }
        let mut dists: Vec<(f64, usize)> = self
            .buffer
            .iter()
            .enumerate()
            .map(|(i, (x, _))| (sq_dist(x, features), i))
            .collect();
        let k = self.cfg.k.min(dists.len());
        // Equal distances resolve toward older entries.
        let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
        if k < dists.len() {
            dists.select_nth_unstable_by(k - 1, cmp);
        }
        let mut votes = [0.0; N_CLASSES];
        for &(_, i) in &dists[..k] {
            votes[self.buffer[i].1.index()] += 1.0 / k as f64;
        }
        Ok(ClassScores(votes))
    }

    fn learn_one(&mut self, features: &[f64], target: CongestionLevel) -> Result<()> {
        check_finite(features)?;
        let wrong = match self.adwin {
            Some(_) => Some(self.predict_one(features)?.argmax()? != target),
            None => None,
        };
        if let (Some(wrong), Some(adwin)) = (wrong, self.adwin.as_mut()) {
            if adwin.insert(f64::from(u8::from(wrong)))? {
                let keep = adwin.width();
                while self.buffer.len() > keep {
                    self.buffer.pop_front();
                }
            }
        }
        self.buffer.push_back((features.to_vec(), target));
        while self.buffer.len() > self.cfg.max_window {
            self.buffer.pop_front();
        }
        Ok(())
    }

    fn reset(&mut self, _seed: u64) {
        *self = Self::new(self.cfg);
    }

    fn fingerprint(&self) -> u64 {
        fingerprint_of(self)
    }
}
