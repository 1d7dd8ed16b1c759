//! Weighted expert pools: DWM and AEE.

use serde::{Deserialize, Serialize};

use crate::ensembles::member::{Member, MemberKind};
use crate::error::{Error, Result};
use crate::types::{
    check_finite, fingerprint_of, one_hot, ClassScores, Classifier, CongestionLevel, N_CLASSES,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Expert {
    pub member: Member,
    pub weight: f64,
}

impl Expert {
    fn fresh(kind: MemberKind, weight: f64) -> Self {
        Self {
            member: kind.build(),
            weight,
        }
    }
}

fn weighted_vote(experts: &[Expert], x: &[f64]) -> Result<[f64; N_CLASSES]> {
    let mut votes = [0.0; N_CLASSES];
    for e in experts {
        votes[e.member.predict_one(x)?.argmax()?.index()] += e.weight;
    }
    Ok(votes)
}

fn scale_to_max_one(experts: &mut [Expert]) {
    let max = experts.iter().map(|e| e.weight).fold(0.0, f64::max);
    if max > 0.0 {
        experts.iter_mut().for_each(|e| e.weight /= max);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DwmConfig {
    pub beta: f64,
    pub theta: f64,
    pub period: usize,
    pub member: MemberKind,
}

impl Default for DwmConfig {
    fn default() -> Self {
        Self {
            beta: 0.5,
            theta: 0.01,
            period: 50,
            member: MemberKind::Ht,
        }
    }
}

/// Dynamic Weighted Majority.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dwm {
    cfg: DwmConfig,
    experts: Vec<Expert>,
    seen: u64,
    experts_added: u64,
}

impl Dwm {
    pub fn new(cfg: DwmConfig) -> Result<Self> {
        if !(cfg.beta > 0.0 && cfg.beta < 1.0) || !(cfg.theta >= 0.0) || cfg.period == 0 {
            return Err(Error::Config(format!("invalid DWM settings {cfg:?}")));
        }
        Ok(Self {
            cfg,
            experts: vec![Expert::fresh(cfg.member, 1.0)],
            seen: 0,
            experts_added: 0,
        })
    }

    pub fn experts(&self) -> &[Expert] {
        &self.experts
    }

    /// Experts created after the initial one.
    pub fn experts_added(&self) -> u64 {
        self.experts_added
    }
}

impl Default for Dwm {
    fn default() -> Self {
        Self::new(DwmConfig::default()).expect("defaults are valid")
    }
}

impl Classifier for Dwm {
    fn name(&self) -> &str {
        "DWM"
    }

    fn predict_one(&self, features: &[f64]) -> Result<ClassScores> {
        let votes = weighted_vote(&self.experts, features)?;
        if votes.iter().sum::<f64>() <= 0.0 {
            return Ok(one_hot(CongestionLevel::FreeFlow));
        }
        Ok(ClassScores(votes).normalized())
    }

    fn learn_one(&mut self, features: &[f64], target: CongestionLevel) -> Result<()> {
        check_finite(features)?;
        self.seen += 1;
        let boundary = self.seen.is_multiple_of(self.cfg.period as u64);
        let mut votes = [0.0; N_CLASSES];
        for e in &mut self.experts {
            let local = e.member.predict_one(features)?.argmax()?;
            if boundary && local != target {
                e.weight *= self.cfg.beta;
            }
            votes[local.index()] += e.weight;
        }
        if boundary {
            let global = ClassScores(votes).argmax()?;
            scale_to_max_one(&mut self.experts);
            let theta = self.cfg.theta;
            self.experts.retain(|e| e.weight >= theta);
            if global != target {
                self.experts.push(Expert::fresh(self.cfg.member, 1.0));
                self.experts_added += 1;
            }
        }
        for e in &mut self.experts {
            e.member.learn_one(features, target)?;
        }
        Ok(())
    }

    fn reset(&mut self, _seed: u64) {
        *self = Self::new(self.cfg).expect("validated");
    }

    fn fingerprint(&self) -> u64 {
        fingerprint_of(self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AeeConfig {
    pub beta: f64,
    pub gamma: f64,
    pub max_experts: usize,
    pub member: MemberKind,
}

impl Default for AeeConfig {
    fn default() -> Self {
        Self {
            beta: 0.5,
            gamma: 0.1,
            max_experts: 10,
            member: MemberKind::Ht,
        }
    }
}

/// Additive expert ensemble.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aee {
    cfg: AeeConfig,
    experts: Vec<Expert>,
}

impl Aee {
    pub fn new(cfg: AeeConfig) -> Result<Self> {
        if !(cfg.beta > 0.0 && cfg.beta < 1.0) || !(cfg.gamma > 0.0) || cfg.max_experts == 0 {
            return Err(Error::Config(format!("invalid AEE settings {cfg:?}")));
        }
        Ok(Self {
            cfg,
            experts: vec![Expert::fresh(cfg.member, 1.0)],
        })
    }

    pub fn experts(&self) -> &[Expert] {
        &self.experts
    }

    pub fn total_weight(&self) -> f64 {
        self.experts.iter().map(|e| e.weight).sum()
    }

    fn prune(&mut self) {
        while self.experts.len() > self.cfg.max_experts {
            // Lowest weight goes; among equals the oldest.
            let worst = self
                .experts
                .iter()
                .enumerate()
                .min_by(|a, b| a.1.weight.total_cmp(&b.1.weight).then(a.0.cmp(&b.0)))
                .map(|(i, _)| i)
                .expect("non-empty pool");
            self.experts.remove(worst);
        }
    }
}

impl Default for Aee {
    fn default() -> Self {
        Self::new(AeeConfig::default()).expect("defaults are valid")
    }
}

impl Classifier for Aee {
    fn name(&self) -> &str {
        "AEE"
    }

    fn predict_one(&self, features: &[f64]) -> Result<ClassScores> {
        let top = self
            .experts
            .iter()
            .map(|e| e.weight)
            .fold(f64::NEG_INFINITY, f64::max);
        let leaders: Vec<&Expert> = self.experts.iter().filter(|e| e.weight == top).collect();
        if let [only] = leaders.as_slice() {
            return only.member.predict_one(features);
        }
        let votes = weighted_vote(&self.experts, features)?;
        if votes.iter().sum::<f64>() <= 0.0 {
            return Ok(one_hot(CongestionLevel::FreeFlow));
        }
        Ok(ClassScores(votes).normalized())
    }

    fn learn_one(&mut self, features: &[f64], target: CongestionLevel) -> Result<()> {
        check_finite(features)?;
        let ensemble_wrong = self.predict_one(features)?.argmax()? != target;
        for e in &mut self.experts {
            if e.member.predict_one(features)?.argmax()? != target {
                e.weight *= self.cfg.beta;
            }
        }
        if ensemble_wrong {
            let w = self.cfg.gamma * self.total_weight();
            self.experts.push(Expert::fresh(self.cfg.member, w));
            self.prune();
        }
        scale_to_max_one(&mut self.experts);
        for e in &mut self.experts {
            e.member.learn_one(features, target)?;
        }
        Ok(())
    }

    fn reset(&mut self, _seed: u64) {
        *self = Self::new(self.cfg).expect("validated");
    }

    fn fingerprint(&self) -> u64 {
        fingerprint_of(self)
    }
}
