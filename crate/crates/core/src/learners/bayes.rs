//! Gaussian naive Bayes with streaming per-class moments.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::learners::standardize::VARIANCE_FLOOR;
use crate::types::{
    check_finite, fingerprint_of, one_hot, ClassScores, Classifier, CongestionLevel, N_CLASSES,
};

/// Score given to classes that have never been observed.
pub const UNSEEN_CLASS_SCORE: f64 = -1e300;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GaussianNb {
    dim: Option<usize>,
    counts: [f64; N_CLASSES],
    /// `mean[c][f]`
    mean: Vec<Vec<f64>>,
    m2: Vec<Vec<f64>>,
}

impl GaussianNb {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn class_count(&self, class: CongestionLevel) -> f64 {
        self.counts[class.index()]
    }

    /// Class-conditional (mean, population variance) of one feature.
    pub fn moments(&self, class: CongestionLevel, feature: usize) -> (f64, f64) {
        let c = class.index();
        let n = self.counts[c];
        if n == 0.0 {
            return (0.0, 0.0);
        }
        (self.mean[c][feature], self.m2[c][feature] / n)
    }

    pub fn priors(&self) -> [f64; N_CLASSES] {
        let total: f64 = self.counts.iter().sum();
        let mut p = [0.0; N_CLASSES];
        if total > 0.0 {
            for (p, c) in p.iter_mut().zip(self.counts) {
                *p = c / total;
            }
        }
        p
    }

    fn check_dim(&mut self, features: &[f64]) -> Result<()> {
        match self.dim {
            Some(d) if d != features.len() => Err(Error::Shape {
                expected: d,
                actual: features.len(),
            }),
            Some(_) => Ok(()),
            None => {
                self.dim = Some(features.len());
                self.mean = vec![vec![0.0; features.len()]; N_CLASSES];
                self.m2 = vec![vec![0.0; features.len()]; N_CLASSES];
                Ok(())
            }
        }
    }

    /// Log prior plus summed Gaussian log-likelihoods, per class.
    pub fn log_posteriors(&self, features: &[f64]) -> Result<[f64; N_CLASSES]> {
        if let Some(d) = self.dim {
            if d != features.len() {
                return Err(Error::Shape {
                    expected: d,
                    actual: features.len(),
                });
            }
        }
        let total: f64 = self.counts.iter().sum();
        let mut out = [UNSEEN_CLASS_SCORE; N_CLASSES];
        for (c, o) in out.iter_mut().enumerate() {
            let n = self.counts[c];
            if n == 0.0 {
                continue;
            }
            let mut lp = (n / total).ln();
            for (f, &x) in features.iter().enumerate() {
                let var = (self.m2[c][f] / n).max(VARIANCE_FLOOR);
                let d = x - self.mean[c][f];
                lp -= 0.5 * ((2.0 * std::f64::consts::PI * var).ln() + d * d / var);
            }
            *o = lp.max(UNSEEN_CLASS_SCORE / 2.0);
        }
        Ok(out)
    }
}

impl Classifier for GaussianNb {
    fn name(&self) -> &str {
        "NB"
    }

    fn predict_one(&self, features: &[f64]) -> Result<ClassScores> {
        if self.counts.iter().all(|&c| c == 0.0) {
            return Ok(one_hot(CongestionLevel::FreeFlow));
        }
        Ok(ClassScores(self.log_posteriors(features)?))
    }

    fn learn_one(&mut self, features: &[f64], target: CongestionLevel) -> Result<()> {
        check_finite(features)?;
        self.check_dim(features)?;
        let c = target.index();
        self.counts[c] += 1.0;
        let n = self.counts[c];
        for ((m, s), &x) in self.mean[c]
            .iter_mut()
            .zip(self.m2[c].iter_mut())
            .zip(features)
        {
            let d = x - *m;
            *m += d / n;
            *s += d * (x - *m);
        }
        Ok(())
    }

    fn reset(&mut self, _seed: u64) {
        *self = Self::new();
    }

    fn fingerprint(&self) -> u64 {
        fingerprint_of(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use CongestionLevel::*;

    #[test]
    fn separated_clusters() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut nb = GaussianNb::new();
        for _ in 0..200 {
            let a: Vec<f64> = (0..45).map(|_| rng.random_range(-1.0..1.0)).collect();
            let b: Vec<f64> = (0..45)
                .map(|_| 60.0 + rng.random_range(-1.0..1.0))
                .collect();
            nb.learn_one(&a, FreeFlow).unwrap();
            nb.learn_one(&b, Bottleneck).unwrap();
        }
        let q = vec![0.1; 45];
        assert_eq!(nb.predict_one(&q).unwrap().argmax().unwrap(), FreeFlow);
        let q = vec![59.0; 45];
        assert_eq!(nb.predict_one(&q).unwrap().argmax().unwrap(), Bottleneck);
    }

    #[test]
    fn single_class_dominates() {
        let mut nb = GaussianNb::new();
        for i in 0..50 {
            nb.learn_one(&[i as f64, 3.0], Congestion).unwrap();
        }
        for q in [[-100.0, 0.0], [0.0, 3.0], [1e4, -1e4]] {
            assert_eq!(nb.predict_one(&q).unwrap().argmax().unwrap(), Congestion);
        }
        assert_eq!(nb.priors(), [0.0, 1.0, 0.0]);
    }

    #[test]
    fn cold_start_and_shape_errors() {
        let mut nb = GaussianNb::new();
        assert_eq!(nb.predict_one(&[1.0]).unwrap().argmax().unwrap(), FreeFlow);
        nb.learn_one(&[1.0, 2.0], FreeFlow).unwrap();
        assert!(matches!(
            nb.learn_one(&[1.0], FreeFlow),
            Err(Error::Shape {
                expected: 2,
                actual: 1
            })
        ));
        assert!(nb.predict_one(&[1.0, 2.0, 3.0]).is_err());
    }

    #[test]
    fn streaming_moments_match_batch() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut nb = GaussianNb::new();
        let mut rows: Vec<(Vec<f64>, CongestionLevel)> = Vec::new();
        for _ in 0..1000 {
            let c = CongestionLevel::ALL[rng.random_range(0..3)];
            let x: Vec<f64> = (0..5)
                .map(|f| 1e3 + f as f64 * 10.0 + rng.random_range(0.0..70.0))
                .collect();
            nb.learn_one(&x, c).unwrap();
            rows.push((x, c));
        }
        for c in CongestionLevel::ALL {
            let xs: Vec<&Vec<f64>> = rows.iter().filter(|r| r.1 == c).map(|r| &r.0).collect();
            let n = xs.len() as f64;
            assert_eq!(nb.class_count(c), n);
            for f in 0..5 {
                let mean = xs.iter().map(|x| x[f]).sum::<f64>() / n;
                let var = xs.iter().map(|x| (x[f] - mean).powi(2)).sum::<f64>() / n;
                let (m, v) = nb.moments(c, f);
                assert!(((m - mean) / mean).abs() < 1e-9);
                assert!(((v - var) / var).abs() < 1e-9);
            }
        }
        assert!((nb.priors().iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }
}
