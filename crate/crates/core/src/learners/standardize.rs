use serde::{Deserialize, Serialize};

/// Smallest variance used when scaling, in squared input units.
pub const VARIANCE_FLOOR: f64 = 1e-6;

/// Running per-feature z-scoring (Welford moments).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct OnlineStandardizer {
    count: f64,
    mean: Vec<f64>,
    m2: Vec<f64>,
}

impl OnlineStandardizer {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn count(&self) -> f64 {
        self.count
    }

    pub fn update(&mut self, x: &[f64]) {
        if self.mean.len() != x.len() {
            self.mean = vec![0.0; x.len()];
            self.m2 = vec![0.0; x.len()];
            self.count = 0.0;
        }
        self.count += 1.0;
        for ((m, s), &v) in self.mean.iter_mut().zip(self.m2.iter_mut()).zip(x) {
            let d = v - *m;
            *m += d / self.count;
            *s += d * (v - *m);
        }
    }

    /// Identity until two samples have been seen.
    pub fn transform(&self, x: &[f64]) -> Vec<f64> {
        if self.count < 2.0 || self.mean.len() != x.len() {
            return x.to_vec();
        }
        x.iter()
            .zip(&self.mean)
            .zip(&self.m2)
            .map(|((&v, &m), &s)| (v - m) / (s / self.count).max(VARIANCE_FLOOR).sqrt())
            .collect()
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn variance(&self) -> Vec<f64> {
        self.m2.iter().map(|s| s / self.count.max(1.0)).collect()
    }
}
