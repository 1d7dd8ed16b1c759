//! Per-class Gaussian feature summaries and information-gain split search.

use serde::{Deserialize, Serialize};
use statrs::function::erf::erf;

use crate::learners::standardize::VARIANCE_FLOOR;
use crate::types::{ClassScores, CongestionLevel, N_CLASSES};

/// Weighted running mean and squared-deviation sum.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Gaussian {
    pub weight: f64,
    pub mean: f64,
    pub m2: f64,
}

impl Gaussian {
    pub fn add(&mut self, x: f64, w: f64) {
        let total = self.weight + w;
        let d = x - self.mean;
        self.mean += w * d / total;
        self.m2 += w * d * (x - self.mean);
        self.weight = total;
    }

    pub fn variance(&self) -> f64 {
        if self.weight > 0.0 {
            (self.m2 / self.weight).max(0.0)
        } else {
            0.0
        }
    }

    /// Estimated weight of observations `<= threshold`.
    pub fn weight_at_or_below(&self, threshold: f64) -> f64 {
        if self.weight == 0.0 {
            return 0.0;
        }
        let sd = self.variance().sqrt();
        if sd < 1e-9 {
            return if self.mean <= threshold {
                self.weight
            } else {
                0.0
            };
        }
        let z = (threshold - self.mean) / (sd * std::f64::consts::SQRT_2);
        self.weight * 0.5 * (1.0 + erf(z))
    }

    pub fn log_density(&self, x: f64) -> f64 {
        let var = self.variance().max(VARIANCE_FLOOR);
        let d = x - self.mean;
        -0.5 * ((2.0 * std::f64::consts::PI * var).ln() + d * d / var)
    }
}

/// Class-conditional summary of one numeric feature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureObserver {
    pub per_class: [Gaussian; N_CLASSES],
    pub min: f64,
    pub max: f64,
}

impl Default for FeatureObserver {
    fn default() -> Self {
        Self {
            per_class: [Gaussian::default(); N_CLASSES],
            min: f64::INFINITY,
            max: f64::NEG_INFINITY,
        }
    }
}

impl FeatureObserver {
    pub fn add(&mut self, x: f64, class: CongestionLevel, w: f64) {
        self.per_class[class.index()].add(x, w);
        self.min = self.min.min(x);
        self.max = self.max.max(x);
    }

    /// `n` thresholds evenly spaced strictly inside `[min, max]`.
    pub fn candidate_thresholds(&self, n: usize) -> Vec<f64> {
        if !(self.max > self.min) {
            return Vec::new();
        }
        let step = (self.max - self.min) / (n + 1) as f64;
        (1..=n).map(|i| self.min + step * i as f64).collect()
    }

    /// Per-class weights routed left (`<= threshold`) and right.
    pub fn partition(&self, threshold: f64) -> ([f64; N_CLASSES], [f64; N_CLASSES]) {
        let mut left = [0.0; N_CLASSES];
        let mut right = [0.0; N_CLASSES];
        for (c, g) in self.per_class.iter().enumerate() {
            let l = g.weight_at_or_below(threshold).clamp(0.0, g.weight);
            left[c] = l;
            right[c] = g.weight - l;
        }
        (left, right)
    }
}

pub fn entropy(dist: &[f64; N_CLASSES]) -> f64 {
    let total: f64 = dist.iter().sum();
    if total <= 0.0 {
        return 0.0;
    }
    dist.iter()
        .filter(|&&w| w > 0.0)
        .map(|&w| {
            let p = w / total;
            -p * p.log2()
        })
        .sum()
}

pub fn info_gain(
    parent: &[f64; N_CLASSES],
    left: &[f64; N_CLASSES],
    right: &[f64; N_CLASSES],
) -> f64 {
    let total: f64 = parent.iter().sum();
    if total <= 0.0 {
        return 0.0;
    }
    let wl: f64 = left.iter().sum();
    let wr: f64 = right.iter().sum();
    entropy(parent) - (wl * entropy(left) + wr * entropy(right)) / total
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitCandidate {
    pub feature: usize,
    pub threshold: f64,
    pub gain: f64,
}

/// Best threshold of one feature, if any candidate exists.
pub fn best_for_feature(
    obs: &FeatureObserver,
    feature: usize,
    class_weights: &[f64; N_CLASSES],
    n_candidates: usize,
) -> Option<SplitCandidate> {
    let mut best: Option<SplitCandidate> = None;
    for threshold in obs.candidate_thresholds(n_candidates) {
        let (l, r) = obs.partition(threshold);
        let gain = info_gain(class_weights, &l, &r);
        if best.is_none_or(|b| gain > b.gain) {
            best = Some(SplitCandidate {
                feature,
                threshold,
                gain,
            });
        }
    }
    best
}

/// Candidates for every feature, sorted by decreasing gain (ties by index).
pub fn rank_splits(
    observers: &[FeatureObserver],
    class_weights: &[f64; N_CLASSES],
    n_candidates: usize,
) -> Vec<SplitCandidate> {
    let mut all: Vec<SplitCandidate> = observers
        .iter()
        .enumerate()
        .filter_map(|(f, o)| best_for_feature(o, f, class_weights, n_candidates))
        .collect();
    all.sort_by(|a, b| b.gain.total_cmp(&a.gain).then(a.feature.cmp(&b.feature)));
    all
}

/// Naive-Bayes class scores from per-class feature Gaussians.
pub fn naive_bayes_scores(
    observers: &[FeatureObserver],
    class_weights: &[f64; N_CLASSES],
    x: &[f64],
) -> ClassScores {
    let total: f64 = class_weights.iter().sum();
    let mut logp = [f64::NEG_INFINITY; N_CLASSES];
    for (c, lp) in logp.iter_mut().enumerate() {
        if class_weights[c] <= 0.0 {
            continue;
        }
        let mut s = (class_weights[c] / total).ln();
        for (o, &v) in observers.iter().zip(x) {
            s += o.per_class[c].log_density(v);
        }
        *lp = s;
    }
    if logp.iter().all(|l| *l == f64::NEG_INFINITY) {
        return ClassScores::zeros();
    }
    ClassScores::softmax(logp)
}
