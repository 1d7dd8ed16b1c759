//! Online bagging and boosting with Poisson resampling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::drift::Adwin;
use crate::ensembles::member::{poisson_draw, weighted_sum, Member, MemberKind};
use crate::error::{Error, Result};
use crate::types::{check_finite, fingerprint_of, ClassScores, Classifier, CongestionLevel};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BaggingConfig {
    pub n_members: usize,
    pub lambda: f64,
    pub member: MemberKind,
    /// Per-member ADWIN on the pre-training error; `None` is plain bagging.
    pub adwin_delta: Option<f64>,
}

impl Default for BaggingConfig {
    fn default() -> Self {
        Self {
            n_members: 10,
            lambda: 1.0,
            member: MemberKind::Ht,
            adwin_delta: None,
        }
    }
}

impl BaggingConfig {
    pub fn with_adwin() -> Self {
        Self {
            adwin_delta: Some(crate::drift::DEFAULT_DELTA),
            ..Self::default()
        }
    }

    fn validate(&self) -> Result<()> {
        if self.n_members == 0 || !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(Error::Config(format!("invalid bagging settings {self:?}")));
        }
        Ok(())
    }
}

/// Swaps the member whose detector reports the highest error for a fresh one.
fn reset_worst(
    members: &mut [Member],
    detectors: &mut [Adwin],
    kind: MemberKind,
    delta: f64,
) -> usize {
    let worst = detectors
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.mean().total_cmp(&b.1.mean()).then(b.0.cmp(&a.0)))
        .map(|(i, _)| i)
        .expect("non-empty ensemble");
    members[worst] = kind.build();
    detectors[worst] = Adwin::new(delta);
    worst
}

/// Oza bagging, optionally with per-member ADWIN resets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OzaBag {
    cfg: BaggingConfig,
    members: Vec<Member>,
    detectors: Vec<Adwin>,
    updates: Vec<u64>,
    replacements: u64,
    last_replaced: Option<usize>,
    rng: ChaCha8Rng,
}

impl OzaBag {
    pub fn new(cfg: BaggingConfig, seed: u64) -> Result<Self> {
        cfg.validate()?;
        if let Some(d) = cfg.adwin_delta {
            if !(d > 0.0 && d < 1.0) {
                return Err(Error::Config(format!("ADWIN delta {d} outside (0, 1)")));
            }
        }
        Ok(Self {
            cfg,
            members: (0..cfg.n_members).map(|_| cfg.member.build()).collect(),
            detectors: match cfg.adwin_delta {
                Some(d) => vec![Adwin::new(d); cfg.n_members],
                None => Vec::new(),
            },
            updates: vec![0; cfg.n_members],
            replacements: 0,
            last_replaced: None,
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }

    pub fn members(&self) -> &[Member] {
        &self.members
    }

    /// learn_one calls received by each member slot.
    pub fn update_counts(&self) -> &[u64] {
        &self.updates
    }

    pub fn replacements(&self) -> u64 {
        self.replacements
    }

    /// Slot of the most recent detector-driven replacement.
    pub fn last_replaced(&self) -> Option<usize> {
        self.last_replaced
    }

    pub fn member_fingerprints(&self) -> Vec<u64> {
        self.members.iter().map(|m| m.fingerprint()).collect()
    }
}

impl Classifier for OzaBag {
    fn name(&self) -> &str {
        if self.cfg.adwin_delta.is_some() {
            "OZBA"
        } else {
            "OZB"
        }
    }

    fn predict_one(&self, features: &[f64]) -> Result<ClassScores> {
        let scores = self
            .members
            .iter()
            .map(|m| m.predict_one(features))
            .collect::<Result<Vec<_>>>()?;
        Ok(weighted_sum(scores.iter().map(|s| (1.0, s))))
    }

    fn learn_one(&mut self, features: &[f64], target: CongestionLevel) -> Result<()> {
        check_finite(features)?;
        let mut changed = false;
        for i in 0..self.members.len() {
            if let Some(det) = self.detectors.get_mut(i) {
                let wrong = !self.members[i].predicts_correctly(features, target)?;
                changed |= det.insert(f64::from(u8::from(wrong)))?;
            }
            let k = poisson_draw(&mut self.rng, self.cfg.lambda);
            self.members[i].learn_repeated(features, target, k)?;
            self.updates[i] += k;
        }
        if changed {
            let delta = self.cfg.adwin_delta.expect("detectors imply a delta");
            let i = reset_worst(
                &mut self.members,
                &mut self.detectors,
                self.cfg.member,
                delta,
            );
            self.last_replaced = Some(i);
            self.replacements += 1;
        }
        Ok(())
    }

    fn reset(&mut self, seed: u64) {
        *self = Self::new(self.cfg, seed).expect("validated");
    }

    fn fingerprint(&self) -> u64 {
        fingerprint_of(self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoostConfig {
    pub n_members: usize,
    pub member: MemberKind,
    pub adwin_delta: Option<f64>,
}

impl Default for BoostConfig {
    fn default() -> Self {
        Self {
            n_members: 10,
            member: MemberKind::Ht,
            adwin_delta: Some(crate::drift::DEFAULT_DELTA),
        }
    }
}

const EPS_CLAMP: f64 = 1e-6;

/// Oza-Russell online boosting with per-member ADWIN resets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OnlineBoost {
    cfg: BoostConfig,
    members: Vec<Member>,
    lambda_sc: Vec<f64>,
    lambda_sw: Vec<f64>,
    detectors: Vec<Adwin>,
    replacements: u64,
    rng: ChaCha8Rng,
}

impl OnlineBoost {
    pub fn new(cfg: BoostConfig, seed: u64) -> Result<Self> {
        if cfg.n_members == 0 || cfg.adwin_delta.is_some_and(|d| !(d > 0.0 && d < 1.0)) {
            return Err(Error::Config(format!("invalid boosting settings {cfg:?}")));
        }
        Ok(Self {
            cfg,
            members: (0..cfg.n_members).map(|_| cfg.member.build()).collect(),
            lambda_sc: vec![0.0; cfg.n_members],
            lambda_sw: vec![0.0; cfg.n_members],
            detectors: match cfg.adwin_delta {
                Some(d) => vec![Adwin::new(d); cfg.n_members],
                None => Vec::new(),
            },
            replacements: 0,
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }

    pub fn members(&self) -> &[Member] {
        &self.members
    }

    pub fn replacements(&self) -> u64 {
        self.replacements
    }

    /// Weighted error `lambda_sw / (lambda_sc + lambda_sw)`, clamped.
    pub fn member_error(&self, i: usize) -> f64 {
        let total = self.lambda_sc[i] + self.lambda_sw[i];
        if total <= 0.0 {
            return 0.5;
        }
        (self.lambda_sw[i] / total).clamp(EPS_CLAMP, 1.0 - EPS_CLAMP)
    }

    pub fn vote_weight(&self, i: usize) -> f64 {
        let e = self.member_error(i);
        ((1.0 - e) / e).ln()
    }

    pub fn member_fingerprints(&self) -> Vec<u64> {
        self.members.iter().map(|m| m.fingerprint()).collect()
    }

    /// Trains the ensemble and returns the instance weight handed to each
    /// member in turn.
    pub fn learn_traced(&mut self, features: &[f64], target: CongestionLevel) -> Result<Vec<f64>> {
        check_finite(features)?;
        let mut trace = Vec::with_capacity(self.members.len());
        let mut changed = false;
        let mut lambda_d = 1.0;
        for i in 0..self.members.len() {
            trace.push(lambda_d);
            if let Some(det) = self.detectors.get_mut(i) {
                let wrong = !self.members[i].predicts_correctly(features, target)?;
                changed |= det.insert(f64::from(u8::from(wrong)))?;
            }
            let k = poisson_draw(&mut self.rng, lambda_d);
            self.members[i].learn_repeated(features, target, k)?;
            if self.members[i].predicts_correctly(features, target)? {
                self.lambda_sc[i] += lambda_d;
                let n = self.lambda_sc[i] + self.lambda_sw[i];
                lambda_d *= n / (2.0 * self.lambda_sc[i]);
            } else {
                self.lambda_sw[i] += lambda_d;
                let n = self.lambda_sc[i] + self.lambda_sw[i];
                lambda_d *= n / (2.0 * self.lambda_sw[i]);
            }
        }
        if changed {
            let delta = self.cfg.adwin_delta.expect("detectors imply a delta");
            let i = reset_worst(
                &mut self.members,
                &mut self.detectors,
                self.cfg.member,
                delta,
            );
            self.lambda_sc[i] = 0.0;
            self.lambda_sw[i] = 0.0;
            self.replacements += 1;
        }
        Ok(trace)
    }
}

impl Classifier for OnlineBoost {
    fn name(&self) -> &str {
        "OB"
    }

    fn predict_one(&self, features: &[f64]) -> Result<ClassScores> {
        let scores = self
            .members
            .iter()
            .map(|m| m.predict_one(features))
            .collect::<Result<Vec<_>>>()?;
        // Members no better than chance carry no vote.
        let weights: Vec<f64> = (0..self.members.len())
            .map(|i| self.vote_weight(i).max(0.0))
            .collect();
        if weights.iter().all(|&w| w == 0.0) {
            return Ok(weighted_sum(scores.iter().map(|s| (1.0, s))));
        }
        Ok(weighted_sum(weights.into_iter().zip(&scores)))
    }

    fn learn_one(&mut self, features: &[f64], target: CongestionLevel) -> Result<()> {
        self.learn_traced(features, target).map(|_| ())
    }

    fn reset(&mut self, seed: u64) {
        *self = Self::new(self.cfg, seed).expect("validated");
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

    fn separable(seed: u64, n: usize) -> Vec<(Vec<f64>, CongestionLevel)> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| {
                let x: Vec<f64> = (0..4).map(|_| rng.random_range(10.0..60.0)).collect();
                let y = if x[1] > 45.0 {
                    FreeFlow
                } else if x[1] > 25.0 {
                    Congestion
                } else {
                    Bottleneck
                };
                (x, y)
            })
            .collect()
    }

    #[test]
    fn vanishing_rate_never_trains() {
        let cfg = BaggingConfig {
            lambda: 1e-9,
            ..BaggingConfig::default()
        };
        let mut b = OzaBag::new(cfg, 3).unwrap();
        for (x, y) in separable(0, 2000) {
            b.learn_one(&x, y).unwrap();
        }
        assert!(b.update_counts().iter().all(|&c| c == 0));
        assert_eq!(
            b.predict_one(&[50.0; 4]).unwrap().argmax().unwrap(),
            FreeFlow
        );
        assert_eq!(
            b.predict_one(&[10.0; 4]).unwrap().argmax().unwrap(),
            FreeFlow
        );
    }

    #[test]
    fn same_seed_same_updates() {
        let data = separable(1, 3000);
        let run = |seed| {
            let mut b = OzaBag::new(BaggingConfig::with_adwin(), seed).unwrap();
            for (x, y) in &data {
                b.learn_one(x, *y).unwrap();
            }
            (b.update_counts().to_vec(), b.fingerprint())
        };
        assert_eq!(run(9), run(9));
        assert_ne!(run(9).0, run(10).0);
    }

    #[test]
    fn predict_is_read_only() {
        let mut b = OzaBag::new(BaggingConfig::default(), 0).unwrap();
        for (x, y) in separable(2, 1000) {
            b.learn_one(&x, y).unwrap();
        }
        let before = b.fingerprint();
        for (x, _) in separable(3, 100) {
            b.predict_one(&x).unwrap();
        }
        assert_eq!(before, b.fingerprint());
    }

    /// Feature 1 above 35 is free-flow before the flip, bottleneck after.
    fn flip(seed: u64, n: usize, at: usize) -> Vec<(Vec<f64>, CongestionLevel)> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|i| {
                let x: Vec<f64> = (0..4).map(|_| rng.random_range(10.0..60.0)).collect();
                let y = if (x[1] > 35.0) != (i >= at) {
                    FreeFlow
                } else {
                    Bottleneck
                };
                (x, y)
            })
            .collect()
    }

    #[test]
    fn adwin_resets_one_member_at_a_time() {
        let mut b = OzaBag::new(BaggingConfig::with_adwin(), 5).unwrap();
        let fresh = MemberKind::Ht.build().fingerprint();
        let mut resets = 0;
        for (x, y) in flip(4, 12_000, 6000) {
            let before = b.member_fingerprints();
            let counts_before = b.update_counts().to_vec();
            let replacements = b.replacements();
            b.learn_one(&x, y).unwrap();
            if b.replacements() == replacements {
                continue;
            }
            resets += 1;
            let r = b.last_replaced().unwrap();
            let after = b.member_fingerprints();
            assert_eq!(after[r], fresh);
            for i in (0..10).filter(|&i| i != r && b.update_counts()[i] == counts_before[i]) {
                assert_eq!(before[i], after[i], "member {i} changed without training");
            }
        }
        assert!(resets >= 1);
    }

    #[test]
    fn perfect_member_weight_is_clamped() {
        let mut ob = OnlineBoost::new(
            BoostConfig {
                n_members: 1,
                adwin_delta: None,
                ..BoostConfig::default()
            },
            0,
        )
        .unwrap();
        ob.lambda_sc[0] = 1e9;
        assert_eq!(ob.member_error(0), EPS_CLAMP);
        let w = ob.vote_weight(0);
        assert!((w - ((1.0 - EPS_CLAMP) / EPS_CLAMP).ln()).abs() < 1e-9);
    }

    #[test]
    fn misclassification_raises_next_weight() {
        let mut ob = OnlineBoost::new(
            BoostConfig {
                n_members: 2,
                member: MemberKind::Nb,
                adwin_delta: None,
            },
            0,
        )
        .unwrap();
        for _ in 0..20 {
            ob.members[0].learn_one(&[0.0], FreeFlow).unwrap();
        }
        ob.lambda_sc[0] = 3.0;
        let trace = ob.learn_traced(&[0.0], Bottleneck).unwrap();
        assert_eq!(ob.lambda_sw[0], 1.0);
        assert_eq!(trace, vec![1.0, 2.0]);
    }

    #[test]
    fn boosting_at_least_single_member_on_separable_stream() {
        let data = separable(7, 20_000);
        let mut ob = OnlineBoost::new(BoostConfig::default(), 7).unwrap();
        let mut solo = MemberKind::Ht.build();
        let (mut ok_b, mut ok_s) = (0, 0);
        for (x, y) in &data {
            ok_b += usize::from(ob.predict_one(x).unwrap().argmax().unwrap() == *y);
            ok_s += usize::from(solo.predict_one(x).unwrap().argmax().unwrap() == *y);
            ob.learn_one(x, *y).unwrap();
            solo.learn_one(x, *y).unwrap();
        }
        assert!(ok_b >= ok_s, "boost {ok_b} vs single {ok_s}");
    }
}
