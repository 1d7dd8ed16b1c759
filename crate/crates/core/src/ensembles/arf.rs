//! Adaptive random forest.

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::drift::Adwin;
use crate::ensembles::member::{poisson_draw, weighted_sum};
use crate::error::{Error, Result};
use crate::trees::{HoeffdingConfig, HoeffdingTree, TreeVariant};
use crate::types::{check_finite, fingerprint_of, ClassScores, Classifier, CongestionLevel};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum SubspacePolicy {
    /// `ceil(sqrt(d))` features drawn per tree.
    RandomSqrt,
    /// Every tree uses these feature indices.
    Fixed(Vec<usize>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArfConfig {
    pub n_members: usize,
    pub lambda: f64,
    pub warning_delta: f64,
    pub drift_delta: f64,
    pub tree: HoeffdingConfig,
    pub subspace: SubspacePolicy,
    /// One Poisson draw per instance shared by all members.
    pub shared_draw: bool,
}

impl Default for ArfConfig {
    fn default() -> Self {
        Self {
            n_members: 10,
            lambda: 6.0,
            warning_delta: 0.01,
            drift_delta: 0.001,
            tree: HoeffdingConfig::default(),
            subspace: SubspacePolicy::RandomSqrt,
            shared_draw: false,
        }
    }
}

pub fn subspace_size(n_features: usize) -> usize {
    ((n_features as f64).sqrt().ceil() as usize).clamp(1, n_features.max(1))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct SubTree {
    tree: HoeffdingTree,
    features: Vec<usize>,
}

impl SubTree {
    fn project(&self, x: &[f64]) -> Vec<f64> {
        self.features.iter().map(|&f| x[f]).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArfMember {
    current: SubTree,
    background: Option<SubTree>,
    warning: Adwin,
    drift: Adwin,
    evaluated: f64,
    correct: f64,
}

impl ArfMember {
    pub fn features(&self) -> &[usize] {
        &self.current.features
    }

    pub fn has_background(&self) -> bool {
        self.background.is_some()
    }

    pub fn accuracy(&self) -> f64 {
        if self.evaluated > 0.0 {
            self.correct / self.evaluated
        } else {
            0.0
        }
    }

    pub fn tree(&self) -> &HoeffdingTree {
        &self.current.tree
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Arf {
    cfg: ArfConfig,
    members: Vec<ArfMember>,
    n_features: Option<usize>,
    drifts: u64,
    warnings: u64,
    rng: ChaCha8Rng,
}

impl Arf {
    pub fn new(cfg: ArfConfig, seed: u64) -> Result<Self> {
        cfg.tree.validate()?;
        let delta_ok = |d: f64| d > 0.0 && d < 1.0;
        if cfg.n_members == 0
            || !(cfg.lambda > 0.0 && cfg.lambda.is_finite())
            || !delta_ok(cfg.warning_delta)
            || !delta_ok(cfg.drift_delta)
            || matches!(&cfg.subspace, SubspacePolicy::Fixed(f) if f.is_empty())
        {
            return Err(Error::Config(format!("invalid ARF settings {cfg:?}")));
        }
        Ok(Self {
            cfg,
            members: Vec::new(),
            n_features: None,
            drifts: 0,
            warnings: 0,
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }

    pub fn members(&self) -> &[ArfMember] {
        &self.members
    }

    pub fn drifts(&self) -> u64 {
        self.drifts
    }

    pub fn warnings(&self) -> u64 {
        self.warnings
    }

    fn new_subtree(&mut self, d: usize) -> Result<SubTree> {
        let features = match &self.cfg.subspace {
            SubspacePolicy::RandomSqrt => {
                let mut f = sample(&mut self.rng, d, subspace_size(d)).into_vec();
                f.sort_unstable();
                f
            }
            SubspacePolicy::Fixed(f) => {
                if let Some(&bad) = f.iter().find(|&&i| i >= d) {
                    return Err(Error::Config(format!(
                        "subspace index {bad} out of range for {d} features"
                    )));
                }
                f.clone()
            }
        };
        Ok(SubTree {
            tree: HoeffdingTree::new(self.cfg.tree, TreeVariant::Vfdt)?,
            features,
        })
    }

    fn initialize(&mut self, d: usize) -> Result<()> {
        for _ in 0..self.cfg.n_members {
            let current = self.new_subtree(d)?;
            self.members.push(ArfMember {
                current,
                background: None,
                warning: Adwin::new(self.cfg.warning_delta),
                drift: Adwin::new(self.cfg.drift_delta),
                evaluated: 0.0,
                correct: 0.0,
            });
        }
        self.n_features = Some(d);
        Ok(())
    }
}

impl Classifier for Arf {
    fn name(&self) -> &str {
        "ARF"
    }

    fn predict_one(&self, features: &[f64]) -> Result<ClassScores> {
        if let Some(d) = self.n_features {
            if features.len() != d {
                return Err(Error::Shape {
                    expected: d,
                    actual: features.len(),
                });
            }
        }
        let scores = self
            .members
            .iter()
            .map(|m| {
                Ok((
                    m.accuracy(),
                    m.current.tree.predict_one(&m.current.project(features))?,
                ))
            })
            .collect::<Result<Vec<_>>>()?;
        if scores.iter().all(|(w, _)| *w == 0.0) {
            return Ok(weighted_sum(scores.iter().map(|(_, s)| (1.0, s))));
        }
        Ok(weighted_sum(scores.iter().map(|(w, s)| (*w, s))))
    }

    fn learn_one(&mut self, features: &[f64], target: CongestionLevel) -> Result<()> {
        check_finite(features)?;
        match self.n_features {
            None => self.initialize(features.len())?,
            Some(d) if d != features.len() => {
                return Err(Error::Shape {
                    expected: d,
                    actual: features.len(),
                })
            }
            Some(_) => {}
        }
        let d = features.len();
        let shared = self
            .cfg
            .shared_draw
            .then(|| poisson_draw(&mut self.rng, self.cfg.lambda));
        for i in 0..self.members.len() {
            let k = match shared {
                Some(k) => k,
                None => poisson_draw(&mut self.rng, self.cfg.lambda),
            };
            let m = &mut self.members[i];
            let x = m.current.project(features);
            let correct = m.current.tree.predict_one(&x)?.argmax()? == target;
            m.evaluated += 1.0;
            m.correct += f64::from(u8::from(correct));
            if k > 0 {
                m.current.tree.learn_weighted(&x, target, k as f64)?;
                if let Some(bg) = m.background.as_mut() {
                    let xb = bg.project(features);
                    bg.tree.learn_weighted(&xb, target, k as f64)?;
                }
            }
            let err = f64::from(u8::from(!correct));
            let warned = m.warning.insert(err)?;
            let drifted = m.drift.insert(err)?;
            if drifted {
                let replacement = match self.members[i].background.take() {
                    Some(bg) => bg,
                    None => self.new_subtree(d)?,
                };
                let m = &mut self.members[i];
                m.current = replacement;
                m.warning = Adwin::new(self.cfg.warning_delta);
                m.drift = Adwin::new(self.cfg.drift_delta);
                m.evaluated = 0.0;
                m.correct = 0.0;
                self.drifts += 1;
            } else if warned {
                self.warnings += 1;
                let bg = self.new_subtree(d)?;
                let m = &mut self.members[i];
                m.background = Some(bg);
                m.warning = Adwin::new(self.cfg.warning_delta);
            }
        }
        Ok(())
    }

    fn reset(&mut self, seed: u64) {
        *self = Self::new(self.cfg.clone(), seed).expect("validated");
    }

    fn fingerprint(&self) -> u64 {
        fingerprint_of(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use CongestionLevel::*;

    fn stream(seed: u64, n: usize, d: usize, flip_at: usize) -> Vec<(Vec<f64>, CongestionLevel)> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|i| {
                let x: Vec<f64> = (0..d).map(|_| rng.random_range(10.0..60.0)).collect();
                let high = x.iter().take(3).sum::<f64>() / 3.0 > 35.0;
                let y = if high != (i >= flip_at) {
                    FreeFlow
                } else {
                    Bottleneck
                };
                (x, y)
            })
            .collect()
    }

    #[test]
    fn subspace_of_45_features_is_7() {
        assert_eq!(subspace_size(45), 7);
        let mut arf = Arf::new(ArfConfig::default(), 0).unwrap();
        arf.learn_one(&[20.0; 45], FreeFlow).unwrap();
        for m in arf.members() {
            assert_eq!(m.features().len(), 7);
            assert!(m.features().windows(2).all(|w| w[0] < w[1]));
        }
    }

    #[test]
    fn identical_members_match_single_tree() {
        let cfg = ArfConfig {
            subspace: SubspacePolicy::Fixed(vec![0, 1, 2, 5]),
            shared_draw: true,
            ..ArfConfig::default()
        };
        let mut many = Arf::new(cfg.clone(), 3).unwrap();
        let mut one = Arf::new(
            ArfConfig {
                n_members: 1,
                ..cfg
            },
            3,
        )
        .unwrap();
        for (x, y) in stream(1, 6000, 8, 3000) {
            let (a, b) = (many.predict_one(&x).unwrap(), one.predict_one(&x).unwrap());
            assert_eq!(a.argmax().unwrap(), b.argmax().unwrap());
            assert!(a.0.iter().zip(b.0).all(|(p, q)| (p - q).abs() < 1e-12));
            many.learn_one(&x, y).unwrap();
            one.learn_one(&x, y).unwrap();
        }
        let t = one.members()[0].tree();
        assert!(many.members().iter().all(|m| m.tree() == t));
    }

    #[test]
    fn reproducible_and_read_only_predictions() {
        let data = stream(2, 3000, 10, usize::MAX);
        let run = || {
            let mut a = Arf::new(ArfConfig::default(), 42).unwrap();
            for (x, y) in &data {
                a.learn_one(x, *y).unwrap();
            }
            a
        };
        let a = run();
        let fp = a.fingerprint();
        a.predict_one(&data[0].0).unwrap();
        assert_eq!(fp, a.fingerprint());
        assert_eq!(fp, run().fingerprint());
    }

    #[test]
    fn drift_replaces_members() {
        let mut a = Arf::new(ArfConfig::default(), 1).unwrap();
        for (x, y) in stream(3, 12_000, 9, 6000) {
            a.learn_one(&x, y).unwrap();
        }
        assert!(a.drifts() >= 1);
        assert!(a.warnings() >= a.drifts().min(1));
    }
}
