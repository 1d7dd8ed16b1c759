//! One-vs-rest linear classifiers: perceptron, passive-aggressive (PA-I)
//! and logistic SGD. All consume online-standardized features.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::learners::standardize::OnlineStandardizer;
use crate::types::{
    argmax_class, check_finite, fingerprint_of, ClassScores, Classifier, CongestionLevel, N_CLASSES,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum LinearKind {
    Perceptron,
    /// PA-I with aggressiveness `c`.
    PassiveAggressive {
        c: f64,
    },
    /// Logistic loss, constant learning rate.
    Sgd {
        eta: f64,
    },
}

impl LinearKind {
    pub fn passive_aggressive() -> Self {
        LinearKind::PassiveAggressive { c: 1.0 }
    }

    pub fn sgd() -> Self {
        LinearKind::Sgd { eta: 0.01 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    kind: LinearKind,
    /// Row per class.
    weights: Vec<Vec<f64>>,
    bias: [f64; N_CLASSES],
    scaler: OnlineStandardizer,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

impl LinearModel {
    pub fn new(kind: LinearKind) -> Self {
        Self {
            kind,
            weights: Vec::new(),
            bias: [0.0; N_CLASSES],
            scaler: OnlineStandardizer::new(),
        }
    }

    pub fn kind(&self) -> LinearKind {
        self.kind
    }

    pub fn weights(&self) -> &[Vec<f64>] {
        &self.weights
    }

    pub fn bias(&self) -> [f64; N_CLASSES] {
        self.bias
    }

    fn ensure_dim(&mut self, d: usize) -> Result<()> {
        if self.weights.is_empty() {
            self.weights = vec![vec![0.0; d]; N_CLASSES];
            Ok(())
        } else if self.weights[0].len() != d {
            Err(Error::Shape {
                expected: self.weights[0].len(),
                actual: d,
            })
        } else {
            Ok(())
        }
    }

    /// Raw margins `w_c . z + b_c` on already standardized input.
    pub fn margins(&self, z: &[f64]) -> [f64; N_CLASSES] {
        let mut out = self.bias;
        if !self.weights.is_empty() {
            for (o, w) in out.iter_mut().zip(&self.weights) {
                *o += dot(w, z);
            }
        }
        out
    }

    /// One update on standardized features.
    pub fn step(&mut self, z: &[f64], target: CongestionLevel) -> Result<()> {
        self.ensure_dim(z.len())?;
        match self.kind {
            LinearKind::Perceptron => self.perceptron_step(z, target),
            LinearKind::PassiveAggressive { c } => self.pa_step(z, target, c),
            LinearKind::Sgd { eta } => self.sgd_step(z, target, eta),
        }
        if self
            .weights
            .iter()
            .flatten()
            .chain(&self.bias)
            .any(|w| !w.is_finite())
        {
            return Err(Error::Numeric("non-finite linear weights".into()));
        }
        Ok(())
    }

    fn perceptron_step(&mut self, z: &[f64], target: CongestionLevel) {
        let predicted = argmax_class(&ClassScores(self.margins(z))).unwrap_or_default();
        if predicted == target {
            return;
        }
        let (t, p) = (target.index(), predicted.index());
        for (f, &v) in z.iter().enumerate() {
            self.weights[t][f] += v;
            self.weights[p][f] -= v;
        }
        self.bias[t] += 1.0;
        self.bias[p] -= 1.0;
    }

    fn pa_step(&mut self, z: &[f64], target: CongestionLevel, c: f64) {
        let norm2 = dot(z, z);
        if norm2 == 0.0 {
            return;
        }
        let margins = self.margins(z);
        for (k, &m) in margins.iter().enumerate() {
            let y = if k == target.index() { 1.0 } else { -1.0 };
            let loss = (1.0 - y * m).max(0.0);
            if loss == 0.0 {
                continue;
            }
            let tau = c.min(loss / norm2);
            for (w, &v) in self.weights[k].iter_mut().zip(z) {
                *w += tau * y * v;
            }
            self.bias[k] += tau * y;
        }
    }

    fn sgd_step(&mut self, z: &[f64], target: CongestionLevel, eta: f64) {
        let margins = self.margins(z);
        for (k, &m) in margins.iter().enumerate() {
            let y = if k == target.index() { 1.0 } else { 0.0 };
            let g = y - sigmoid(m);
            if g == 0.0 {
                continue;
            }
            for (w, &v) in self.weights[k].iter_mut().zip(z) {
                *w += eta * g * v;
            }
            self.bias[k] += eta * g;
        }
    }
}

impl Classifier for LinearModel {
    fn name(&self) -> &str {
        match self.kind {
            LinearKind::Perceptron => "P",
            LinearKind::PassiveAggressive { .. } => "PA",
            LinearKind::Sgd { .. } => "SGD",
        }
    }

    fn predict_one(&self, features: &[f64]) -> Result<ClassScores> {
        if let Some(w) = self.weights.first() {
            if w.len() != features.len() {
                return Err(Error::Shape {
                    expected: w.len(),
                    actual: features.len(),
                });
            }
        }
        Ok(ClassScores(self.margins(&self.scaler.transform(features))))
    }

    fn learn_one(&mut self, features: &[f64], target: CongestionLevel) -> Result<()> {
        check_finite(features)?;
        self.ensure_dim(features.len())?;
        self.scaler.update(features);
        let z = self.scaler.transform(features);
        self.step(&z, target)
    }

    fn reset(&mut self, _seed: u64) {
        *self = Self::new(self.kind);
    }

    fn fingerprint(&self) -> u64 {
        fingerprint_of(self)
    }
}
