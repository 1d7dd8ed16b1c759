use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::learners::GaussianNb;
use crate::trees::HoeffdingTree;
use crate::types::{fingerprint_of, ClassScores, Classifier, CongestionLevel};

/// Base learner type used to build ensemble members.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum MemberKind {
    #[default]
    Ht,
    Hat,
    Hatt,
    Nb,
}

impl MemberKind {
    pub fn build(self) -> Member {
        match self {
            MemberKind::Ht => Member::Tree(HoeffdingTree::vfdt()),
            MemberKind::Hat => Member::Tree(HoeffdingTree::adaptive()),
            MemberKind::Hatt => Member::Tree(HoeffdingTree::efdt()),
            MemberKind::Nb => Member::Nb(GaussianNb::new()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Member {
    Tree(HoeffdingTree),
    Nb(GaussianNb),
}

impl Member {
    /// Trains with integer multiplicity `k`.
    pub fn learn_repeated(&mut self, x: &[f64], y: CongestionLevel, k: u64) -> Result<()> {
        for _ in 0..k {
            self.learn_one(x, y)?;
        }
        Ok(())
    }

    /// Trains once with instance weight `w`; non-tree members round `w`.
    pub fn learn_weighted(&mut self, x: &[f64], y: CongestionLevel, w: f64) -> Result<()> {
        match self {
            Member::Tree(t) => t.learn_weighted(x, y, w),
            Member::Nb(_) => self.learn_repeated(x, y, w.round() as u64),
        }
    }

    pub fn predicts_correctly(&self, x: &[f64], y: CongestionLevel) -> Result<bool> {
        Ok(self.predict_one(x)?.argmax()? == y)
    }
}

impl Classifier for Member {
    fn name(&self) -> &str {
        match self {
            Member::Tree(t) => t.name(),
            Member::Nb(n) => n.name(),
        }
    }

    fn predict_one(&self, features: &[f64]) -> Result<ClassScores> {
        match self {
            Member::Tree(t) => t.predict_one(features),
            Member::Nb(n) => n.predict_one(features),
        }
    }

    fn learn_one(&mut self, features: &[f64], target: CongestionLevel) -> Result<()> {
        match self {
            Member::Tree(t) => t.learn_one(features, target),
            Member::Nb(n) => n.learn_one(features, target),
        }
    }

    fn reset(&mut self, seed: u64) {
        match self {
            Member::Tree(t) => t.reset(seed),
            Member::Nb(n) => n.reset(seed),
        }
    }

    fn fingerprint(&self) -> u64 {
        fingerprint_of(self)
    }
}

/// One Poisson(`lambda`) draw.
pub fn poisson_draw<R: Rng + ?Sized>(rng: &mut R, lambda: f64) -> u64 {
    if lambda <= 0.0 {
        return 0;
    }
    Poisson::new(lambda)
        .expect("positive finite rate")
        .sample(rng) as u64
}

/// Sum of normalized member scores; cold start when nothing votes.
pub(crate) fn weighted_sum<'a>(
    parts: impl IntoIterator<Item = (f64, &'a ClassScores)>,
) -> ClassScores {
    let mut acc = [0.0; 3];
    for (w, s) in parts {
        let n = s.normalized();
        for (a, v) in acc.iter_mut().zip(n.0) {
            *a += w * v;
        }
    }
    if acc.iter().sum::<f64>() > 0.0 {
        ClassScores(acc).normalized()
    } else {
        crate::types::one_hot(CongestionLevel::FreeFlow)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn poisson_mean_near_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 100_000;
        let total: u64 = (0..n).map(|_| poisson_draw(&mut rng, 1.0)).sum();
        let mean = total as f64 / n as f64;
        assert!((mean - 1.0).abs() <= 0.02, "{mean}");
    }

    #[test]
    fn tiny_rate_draws_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!((0..10_000).all(|_| poisson_draw(&mut rng, 1e-9) == 0));
    }
}
