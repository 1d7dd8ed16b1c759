//! Online-sequential extreme learning machine.

use std::collections::hash_map::DefaultHasher;
use std::hash::Hasher;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::ingest::DEFAULT_WARM_START;
use crate::learners::OnlineStandardizer;
use crate::types::{check_finite, ClassScores, Classifier, CongestionLevel, N_CLASSES};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OselmConfig {
    pub hidden_units: usize,
    pub ridge: f64,
    /// Instances buffered before the batch initialization runs.
    pub init_size: usize,
}

impl Default for OselmConfig {
    fn default() -> Self {
        Self {
            hidden_units: 1500,
            ridge: 1e-3,
            init_size: DEFAULT_WARM_START,
        }
    }
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// Solves `a x = b` for symmetric `a`: Cholesky first, then partial-pivot LU.
pub fn solve_symmetric(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if let Some(ch) = a.clone().cholesky() {
        return Ok(ch.solve(b));
    }
    let lu = a.clone().lu();
    let diag = lu.u().diagonal();
    let max = diag.amax();
    let min = diag.iter().fold(f64::INFINITY, |m, v| m.min(v.abs()));
    if !(max > 0.0) || min / max < 1e-13 {
        return Err(Error::Singular(
            "normal matrix is singular; use a positive ridge".into(),
        ));
    }
    lu.solve(b)
        .ok_or_else(|| Error::Singular("normal matrix is singular; use a positive ridge".into()))
}

#[derive(Debug, Clone)]
enum Phase {
    Initializing(Vec<(Vec<f64>, CongestionLevel)>),
    Sequential { beta: DMatrix<f64>, p: DMatrix<f64> },
}

#[derive(Debug, Clone)]
pub struct OsElm {
    cfg: OselmConfig,
    seed: u64,
    /// `hidden × d`, drawn on the first instance.
    input_weights: Option<DMatrix<f64>>,
    biases: Option<DVector<f64>>,
    scaler: OnlineStandardizer,
    phase: Phase,
}

impl OsElm {
    pub fn new(cfg: OselmConfig, seed: u64) -> Result<Self> {
        if cfg.hidden_units == 0 || cfg.init_size == 0 || !(cfg.ridge >= 0.0) {
            return Err(Error::Config(format!("invalid OS-ELM settings {cfg:?}")));
        }
        Ok(Self {
            cfg,
            seed,
            input_weights: None,
            biases: None,
            scaler: OnlineStandardizer::new(),
            phase: Phase::Initializing(Vec::new()),
        })
    }

    pub fn config(&self) -> &OselmConfig {
        &self.cfg
    }

    pub fn is_initialized(&self) -> bool {
        matches!(self.phase, Phase::Sequential { .. })
    }

    pub fn input_weights(&self) -> Option<&DMatrix<f64>> {
        self.input_weights.as_ref()
    }

    pub fn beta(&self) -> Option<&DMatrix<f64>> {
        match &self.phase {
            Phase::Sequential { beta, .. } => Some(beta),
            Phase::Initializing(_) => None,
        }
    }

    pub fn p_matrix(&self) -> Option<&DMatrix<f64>> {
        match &self.phase {
            Phase::Sequential { p, .. } => Some(p),
            Phase::Initializing(_) => None,
        }
    }

    fn ensure_weights(&mut self, d: usize) -> Result<()> {
        match &self.input_weights {
            Some(w) if w.ncols() != d => Err(Error::Shape {
                expected: w.ncols(),
                actual: d,
            }),
            Some(_) => Ok(()),
            None => {
                let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
                let n = self.cfg.hidden_units;
                let w = DMatrix::from_fn(n, d, |_, _| rng.random_range(-1.0..=1.0));
                let b = DVector::from_fn(n, |_, _| rng.random_range(-1.0..=1.0));
                self.input_weights = Some(w);
                self.biases = Some(b);
                Ok(())
            }
        }
    }

    /// Hidden-layer activation row for one instance.
    pub fn hidden_row(&self, features: &[f64]) -> Result<DVector<f64>> {
        let (Some(w), Some(b)) = (&self.input_weights, &self.biases) else {
            return Err(Error::Uninitialized);
        };
        if features.len() != w.ncols() {
            return Err(Error::Shape {
                expected: w.ncols(),
                actual: features.len(),
            });
        }
        let z = DVector::from_vec(self.scaler.transform(features));
        Ok((w * z + b).map(sigmoid))
    }

    /// Batch ridge solve on the warm set; freezes feature scaling.
    pub fn initialize(&mut self, warm: &[(Vec<f64>, CongestionLevel)]) -> Result<()> {
        let Some((first, _)) = warm.first() else {
            return Err(Error::InsufficientData { len: 0, n_init: 1 });
        };
        self.ensure_weights(first.len())?;
        if self.scaler.count() == 0.0 {
            for (x, _) in warm {
                check_finite(x)?;
                self.scaler.update(x);
            }
        }
        let n = self.cfg.hidden_units;
        let mut h = DMatrix::zeros(warm.len(), n);
        let mut t = DMatrix::zeros(warm.len(), N_CLASSES);
        for (i, (x, y)) in warm.iter().enumerate() {
            h.set_row(i, &self.hidden_row(x)?.transpose());
            t[(i, y.index())] = 1.0;
        }
        let ht = h.transpose();
        let mut gram = &ht * &h;
        for i in 0..n {
            gram[(i, i)] += self.cfg.ridge;
        }
        let p = solve_symmetric(&gram, &DMatrix::identity(n, n))?;
        let p = (&p + p.transpose()) * 0.5;
        let beta = &p * (&ht * &t);
        if beta.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric(
                "non-finite output weights after initialization".into(),
            ));
        }
        self.phase = Phase::Sequential { beta, p };
        Ok(())
    }

    /// One recursive-least-squares step on a precomputed hidden row.
    /// On a non-finite result the state is left untouched.
    pub fn update_hidden(&mut self, h: &DVector<f64>, target: CongestionLevel) -> Result<()> {
        let Phase::Sequential { beta, p } = &mut self.phase else {
            return Err(Error::Uninitialized);
        };
        let ph = &*p * h;
        let denom = 1.0 + h.dot(&ph);
        let p_new = &*p - &ph * ph.transpose() / denom;
        let k = &p_new * h;
        let residual = crate::types::one_hot(target)
            .0
            .iter()
            .enumerate()
            .map(|(c, t)| t - h.dot(&beta.column(c)))
            .collect::<Vec<_>>();
        let mut beta_new = beta.clone();
        for (c, r) in residual.iter().enumerate() {
            let mut col = beta_new.column_mut(c);
            col += &k * *r;
        }
        if !denom.is_finite()
            || p_new.iter().any(|v| !v.is_finite())
            || beta_new.iter().any(|v| !v.is_finite())
        {
            return Err(Error::Numeric(
                "non-finite recursive update; state rolled back".into(),
            ));
        }
        *p = p_new;
        *beta = beta_new;
        Ok(())
    }
}

impl Classifier for OsElm {
    fn name(&self) -> &str {
        "OSELM"
    }

    fn predict_one(&self, features: &[f64]) -> Result<ClassScores> {
        let Phase::Sequential { beta, .. } = &self.phase else {
            return Err(Error::Uninitialized);
        };
        check_finite(features)?;
        let h = self.hidden_row(features)?;
        let s = beta.transpose() * h;
        Ok(ClassScores([s[0], s[1], s[2]]))
    }

    fn learn_one(&mut self, features: &[f64], target: CongestionLevel) -> Result<()> {
        check_finite(features)?;
        self.ensure_weights(features.len())?;
        if let Phase::Initializing(buffer) = &mut self.phase {
            self.scaler.update(features);
            buffer.push((features.to_vec(), target));
            if buffer.len() >= self.cfg.init_size {
                let warm = std::mem::take(buffer);
                return self.initialize(&warm);
            }
            return Ok(());
        }
        let h = self.hidden_row(features)?;
        self.update_hidden(&h, target)
    }

    fn reset(&mut self, seed: u64) {
        *self = Self::new(self.cfg, seed).expect("validated");
    }

    fn fingerprint(&self) -> u64 {
        let mut h = DefaultHasher::new();
        h.write_u64(self.seed);
        let mut put = |m: &[f64]| m.iter().for_each(|v| h.write_u64(v.to_bits()));
        if let Some(w) = &self.input_weights {
            put(w.as_slice());
        }
        put(self.scaler.mean());
        match &self.phase {
            Phase::Initializing(buf) => {
                for (x, y) in buf {
                    put(x);
                    put(&[y.index() as f64]);
                }
            }
            Phase::Sequential { beta, p } => {
                put(beta.as_slice());
                put(p.as_slice());
            }
        }
        h.finish()
    }
}
