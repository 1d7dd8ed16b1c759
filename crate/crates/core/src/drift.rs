//! ADWIN adaptive-windowing change detector.
//!
//! The window is stored as an exponential histogram: row `i` holds up to
//! [`MAX_BUCKETS`] buckets, each summarizing `2^i` consecutive inputs. After
//! every insert each bucket boundary is tested as a cut between an older
//! sub-window `W0` and a newer `W1`; while some cut's mean difference reaches
//! the threshold, the oldest bucket is dropped.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_DELTA: f64 = 0.002;

/// Buckets per histogram row.
pub const MAX_BUCKETS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
struct Bucket {
    total: f64,
    /// Sum of squared deviations from the bucket mean.
    m2: f64,
}

/// Cut threshold for sub-windows of `n0` and `n1` items out of `width`.
pub fn cut_threshold(n0: usize, n1: usize, width: usize, delta: f64) -> f64 {
    let (n0, n1) = (n0 as f64, n1 as f64);
    let m = n0 * n1 / (n0 + n1);
    ((1.0 / (2.0 * m)) * (4.0 * width as f64 / delta).ln()).sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Adwin {
    delta: f64,
    /// `rows[i]` buckets hold `2^i` items each; front is oldest.
    rows: Vec<VecDeque<Bucket>>,
    width: usize,
    total: f64,
    m2: f64,
    detections: usize,
}

impl Default for Adwin {
    fn default() -> Self {
        Self::new(DEFAULT_DELTA)
    }
}

impl Adwin {
    pub fn new(delta: f64) -> Self {
        assert!(delta > 0.0 && delta < 1.0, "ADWIN delta must lie in (0, 1)");
        Self {
            delta,
            rows: Vec::new(),
            width: 0,
            total: 0.0,
            m2: 0.0,
            detections: 0,
        }
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn mean(&self) -> f64 {
        if self.width == 0 {
            0.0
        } else {
            self.total / self.width as f64
        }
    }

    pub fn variance(&self) -> f64 {
        if self.width == 0 {
            0.0
        } else {
            self.m2 / self.width as f64
        }
    }

    /// Number of changes detected since construction.
    pub fn detections(&self) -> usize {
        self.detections
    }

    pub fn n_buckets(&self) -> usize {
        self.rows.iter().map(VecDeque::len).sum()
    }

    pub fn reset(&mut self) {
        *self = Self::new(self.delta);
    }

    /// Adds one observation (clamped to `[0, 1]`) and reports whether the
    /// window was shrunk because of a detected change.
    pub fn insert(&mut self, x: f64) -> Result<bool> {
        if !x.is_finite() {
            return Err(Error::InvalidInput(format!("ADWIN input {x}")));
        }
        let x = x.clamp(0.0, 1.0);
        self.push(x);
        let mut changed = false;
        while self.width > 1 && self.find_cut() {
            self.drop_oldest();
            changed = true;
        }
        if changed {
            self.detections += 1;
        }
        Ok(changed)
    }

    fn push(&mut self, x: f64) {
        if self.width > 0 {
            let mean = self.mean();
            let n = self.width as f64;
            self.m2 += n * (x - mean) * (x - mean) / (n + 1.0);
        }
        self.width += 1;
        self.total += x;
        if self.rows.is_empty() {
            self.rows.push(VecDeque::new());
        }
        self.rows[0].push_back(Bucket { total: x, m2: 0.0 });
        self.compress();
    }

    fn compress(&mut self) {
        let mut row = 0;
        while row < self.rows.len() && self.rows[row].len() > MAX_BUCKETS {
            let a = self.rows[row].pop_front().expect("row over capacity");
            let b = self.rows[row].pop_front().expect("row over capacity");
            let cap = (1usize << row) as f64;
            let (ma, mb) = (a.total / cap, b.total / cap);
            let merged = Bucket {
                total: a.total + b.total,
                m2: a.m2 + b.m2 + cap * cap * (ma - mb) * (ma - mb) / (2.0 * cap),
            };
            if row + 1 == self.rows.len() {
                self.rows.push(VecDeque::new());
            }
            self.rows[row + 1].push_back(merged);
            row += 1;
        }
    }

    fn find_cut(&self) -> bool {
        let mut n0 = 0usize;
        let mut sum0 = 0.0;
        // Oldest buckets live in the highest rows.
        for (row, buckets) in self.rows.iter().enumerate().rev() {
            let cap = 1usize << row;
            for b in buckets {
                n0 += cap;
                sum0 += b.total;
                let n1 = self.width - n0;
                if n1 == 0 {
                    return false;
                }
                let mu0 = sum0 / n0 as f64;
                let mu1 = (self.total - sum0) / n1 as f64;
                if (mu0 - mu1).abs() >= cut_threshold(n0, n1, self.width, self.delta) {
                    return true;
                }
            }
        }
        false
    }

    fn drop_oldest(&mut self) {
        let row = self
            .rows
            .iter()
            .rposition(|r| !r.is_empty())
            .expect("non-empty window");
        let cap = 1usize << row;
        let b = self.rows[row].pop_front().expect("non-empty row");
        let n = self.width as f64;
        let nb = cap as f64;
        let rest = n - nb;
        if rest > 0.0 {
            let mean_b = b.total / nb;
            let mean_rest = (self.total - b.total) / rest;
            self.m2 -= b.m2 + nb * rest / n * (mean_b - mean_rest) * (mean_b - mean_rest);
            self.m2 = self.m2.max(0.0);
        } else {
            self.m2 = 0.0;
        }
        self.width -= cap;
        self.total -= b.total;
        while self.rows.last().is_some_and(VecDeque::is_empty) {
            self.rows.pop();
        }
        if self.width == 0 {
            self.total = 0.0;
        }
    }

    /// Per-bucket capacities, newest first.
    #[cfg(test)]
    fn capacities(&self) -> Vec<usize> {
        self.rows
            .iter()
            .enumerate()
            .flat_map(|(row, b)| b.iter().rev().map(move |_| 1usize << row))
            .collect()
    }

    #[cfg(test)]
    fn bucket_mean(&self) -> f64 {
        let t: f64 = self.rows.iter().flatten().map(|b| b.total).sum();
        t / self.width as f64
    }
}
