use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::drift::Adwin;
use crate::error::{Error, Result};
use crate::trees::stats::{
    info_gain, naive_bayes_scores, rank_splits, FeatureObserver, SplitCandidate,
};
use crate::types::{
    check_finite, fingerprint_of, one_hot, ClassScores, Classifier, CongestionLevel, N_CLASSES,
};

/// Hoeffding bound `sqrt(R^2 ln(1/delta) / (2n))`.
pub fn hoeffding_bound(range: f64, delta: f64, n: f64) -> Result<f64> {
    if !(range > 0.0) || !(delta > 0.0 && delta < 1.0) || !(n >= 1.0) {
        return Err(Error::Domain(format!(
            "hoeffding bound needs R > 0, 0 < delta < 1, n >= 1 (got {range}, {delta}, {n})"
        )));
    }
    Ok((range * range * (1.0 / delta).ln() / (2.0 * n)).sqrt())
}

/// Range of information gain over three classes.
pub fn gain_range() -> f64 {
    (N_CLASSES as f64).log2()
}

/// Errors on an alternate and its original must both span this many
/// instances before they are compared.
const ALTERNATE_MIN_WIDTH: usize = 300;
/// Confidence of the alternate-versus-original error comparison.
const ALTERNATE_SWAP_DELTA: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LeafPrediction {
    MajorityClass,
    /// Per leaf, whichever of majority class and naive Bayes has been more
    /// accurate on the instances the leaf has seen.
    NaiveBayesAdaptive,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HoeffdingConfig {
    pub grace_period: usize,
    pub split_confidence: f64,
    pub tie_threshold: f64,
    pub leaf_prediction: LeafPrediction,
    pub n_split_candidates: usize,
}

impl Default for HoeffdingConfig {
    fn default() -> Self {
        Self {
            grace_period: 200,
            split_confidence: 1e-7,
            tie_threshold: 0.05,
            leaf_prediction: LeafPrediction::NaiveBayesAdaptive,
            n_split_candidates: 10,
        }
    }
}

impl HoeffdingConfig {
    pub fn validate(&self) -> Result<()> {
        if self.grace_period == 0
            || !(self.split_confidence > 0.0 && self.split_confidence < 1.0)
            || !(self.tie_threshold >= 0.0)
            || self.n_split_candidates == 0
        {
            return Err(Error::Config(format!(
                "invalid Hoeffding tree settings {self:?}"
            )));
        }
        Ok(())
    }
}

/// Which tree-growing policy is active.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum TreeVariant {
    /// Plain VFDT.
    Vfdt,
    /// ADWIN per node with alternate subtrees.
    Adaptive { delta: f64 },
    /// Splits as soon as they beat not splitting; internal nodes keep
    /// statistics and periodically revisit their split.
    Efdt,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct NodeStats {
    class_weights: [f64; N_CLASSES],
    observers: Vec<FeatureObserver>,
    weight_at_last_check: f64,
    mc_correct: f64,
    nb_correct: f64,
}

impl NodeStats {
    fn new(n_features: usize) -> Self {
        Self {
            class_weights: [0.0; N_CLASSES],
            observers: vec![FeatureObserver::default(); n_features],
            weight_at_last_check: 0.0,
            mc_correct: 0.0,
            nb_correct: 0.0,
        }
    }

    fn weight(&self) -> f64 {
        self.class_weights.iter().sum()
    }

    fn n_classes_seen(&self) -> usize {
        self.class_weights.iter().filter(|&&w| w > 0.0).count()
    }

    fn majority(&self) -> ClassScores {
        if self.weight() == 0.0 {
            return one_hot(CongestionLevel::FreeFlow);
        }
        ClassScores(self.class_weights).normalized()
    }

    fn naive_bayes(&self, x: &[f64]) -> ClassScores {
        naive_bayes_scores(&self.observers, &self.class_weights, x)
    }

    fn predict(&self, x: &[f64], mode: LeafPrediction) -> ClassScores {
        match mode {
            LeafPrediction::NaiveBayesAdaptive
                if self.weight() > 0.0 && self.nb_correct > self.mc_correct =>
            {
                self.naive_bayes(x)
            }
            _ => self.majority(),
        }
    }

    fn observe(&mut self, x: &[f64], y: CongestionLevel, w: f64, track_accuracy: bool) {
        if track_accuracy && self.weight() > 0.0 {
            let mc = self.majority().argmax().unwrap_or_default();
            let nb = self.naive_bayes(x).argmax().unwrap_or_default();
            if mc == y {
                self.mc_correct += w;
            }
            if nb == y {
                self.nb_correct += w;
            }
        }
        self.class_weights[y.index()] += w;
        for (o, &v) in self.observers.iter_mut().zip(x) {
            o.add(v, y, w);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct SplitNode {
    feature: usize,
    threshold: f64,
    children: [Box<Node>; 2],
    /// Class weights this node held while it was a leaf.
    leaf_history: [f64; N_CLASSES],
    /// Running statistics kept after the split (EFDT only).
    stats: Option<NodeStats>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
enum NodeKind {
    Leaf(NodeStats),
    Split(SplitNode),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Node {
    kind: NodeKind,
    detector: Option<Adwin>,
    alternate: Option<Box<Node>>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct TreeCounters {
    pub splits: usize,
    pub alternates_created: usize,
    pub alternates_promoted: usize,
    pub alternates_dropped: usize,
    pub resplits: usize,
}

struct Ctx<'a> {
    cfg: &'a HoeffdingConfig,
    variant: TreeVariant,
    n_features: usize,
}

impl Ctx<'_> {
    fn new_leaf(&self) -> Node {
        Node {
            kind: NodeKind::Leaf(NodeStats::new(self.n_features)),
            detector: match self.variant {
                TreeVariant::Adaptive { delta } => Some(Adwin::new(delta)),
                _ => None,
            },
            alternate: None,
        }
    }

    fn bound(&self, n: f64) -> f64 {
        hoeffding_bound(gain_range(), self.cfg.split_confidence, n.max(1.0))
            .expect("validated configuration")
    }
}

impl Node {
    fn leaf_for(&self, x: &[f64]) -> &NodeStats {
        let mut node = self;
        loop {
            match &node.kind {
                NodeKind::Leaf(s) => return s,
                NodeKind::Split(s) => {
                    node = &s.children[usize::from(x[s.feature] > s.threshold)];
                }
            }
        }
    }

    fn learn(
        &mut self,
        x: &[f64],
        y: CongestionLevel,
        w: f64,
        ctx: &Ctx,
        counters: &mut TreeCounters,
    ) {
        if let TreeVariant::Adaptive { .. } = ctx.variant {
            self.track_error(x, y, w, ctx, counters);
        }
        match &mut self.kind {
            NodeKind::Leaf(stats) => {
                stats.observe(
                    x,
                    y,
                    w,
                    ctx.cfg.leaf_prediction == LeafPrediction::NaiveBayesAdaptive,
                );
                if stats.weight() - stats.weight_at_last_check >= ctx.cfg.grace_period as f64 {
                    stats.weight_at_last_check = stats.weight();
                    if let Some(best) = attempt_split(stats, ctx) {
                        self.split_on(best, ctx);
                        counters.splits += 1;
                    }
                }
            }
            NodeKind::Split(split) => {
                if let Some(stats) = split.stats.as_mut() {
                    stats.observe(x, y, w, false);
                    if stats.weight() - stats.weight_at_last_check >= ctx.cfg.grace_period as f64 {
                        stats.weight_at_last_check = stats.weight();
                        if let Some(better) = reevaluate(split, ctx) {
                            split.feature = better.feature;
                            split.threshold = better.threshold;
                            split.children = [Box::new(ctx.new_leaf()), Box::new(ctx.new_leaf())];
                            counters.resplits += 1;
                        }
                    }
                }
                let branch = usize::from(x[split.feature] > split.threshold);
                split.children[branch].learn(x, y, w, ctx, counters);
            }
        }
    }

    /// Feeds this node's 0/1 error to its detector and manages the
    /// alternate subtree.
    fn track_error(
        &mut self,
        x: &[f64],
        y: CongestionLevel,
        w: f64,
        ctx: &Ctx,
        counters: &mut TreeCounters,
    ) {
        let wrong = self
            .leaf_for(x)
            .predict(x, ctx.cfg.leaf_prediction)
            .argmax()
            .unwrap_or_default()
            != y;
        let detector = self
            .detector
            .as_mut()
            .expect("adaptive nodes carry a detector");
        let changed = detector
            .insert(f64::from(u8::from(wrong)))
            .expect("0/1 input");

        let is_split = matches!(self.kind, NodeKind::Split(_));
        if changed && is_split && self.alternate.is_none() {
            self.alternate = Some(Box::new(ctx.new_leaf()));
            counters.alternates_created += 1;
        } else if let Some(alt) = &self.alternate {
            let own = self.detector.as_ref().expect("adaptive");
            let other = alt.detector.as_ref().expect("adaptive");
            if own.width() >= ALTERNATE_MIN_WIDTH && other.width() >= ALTERNATE_MIN_WIDTH {
                let (old_err, alt_err) = (own.mean(), other.mean());
                let n = 1.0 / own.width() as f64 + 1.0 / other.width() as f64;
                let bound =
                    (2.0 * old_err * (1.0 - old_err) * (2.0 / ALTERNATE_SWAP_DELTA).ln() * n)
                        .sqrt();
                if bound < old_err - alt_err {
                    let alt = self.alternate.take().expect("checked");
                    *self = *alt;
                    counters.alternates_promoted += 1;
                } else if bound < alt_err - old_err {
                    self.alternate = None;
                    counters.alternates_dropped += 1;
                }
            }
        }
        if let Some(alt) = self.alternate.as_mut() {
            alt.learn(x, y, w, ctx, counters);
        }
    }

    fn split_on(&mut self, best: SplitCandidate, ctx: &Ctx) {
        let NodeKind::Leaf(stats) =
            std::mem::replace(&mut self.kind, NodeKind::Leaf(NodeStats::new(0)))
        else {
            unreachable!("only leaves split");
        };
        let leaf_history = stats.class_weights;
        let kept = match ctx.variant {
            TreeVariant::Efdt => Some(NodeStats {
                weight_at_last_check: stats.weight(),
                ..stats
            }),
            _ => None,
        };
        self.kind = NodeKind::Split(SplitNode {
            feature: best.feature,
            threshold: best.threshold,
            children: [Box::new(ctx.new_leaf()), Box::new(ctx.new_leaf())],
            leaf_history,
            stats: kept,
        });
    }

    fn count_nodes(&self) -> usize {
        match &self.kind {
            NodeKind::Leaf(_) => 1,
            NodeKind::Split(s) => 1 + s.children.iter().map(|c| c.count_nodes()).sum::<usize>(),
        }
    }

    fn depth(&self) -> usize {
        match &self.kind {
            NodeKind::Leaf(_) => 0,
            NodeKind::Split(s) => 1 + s.children.iter().map(|c| c.depth()).max().unwrap_or(0),
        }
    }

    fn observed_weights(&self, acc: &mut [f64; N_CLASSES]) {
        match &self.kind {
            NodeKind::Leaf(s) => acc
                .iter_mut()
                .zip(s.class_weights)
                .for_each(|(a, w)| *a += w),
            NodeKind::Split(s) => {
                acc.iter_mut()
                    .zip(s.leaf_history)
                    .for_each(|(a, w)| *a += w);
                s.children.iter().for_each(|c| c.observed_weights(acc));
            }
        }
    }

    fn export(&self, depth: usize, out: &mut String) {
        let pad = "  ".repeat(depth);
        match &self.kind {
            NodeKind::Leaf(s) => {
                let _ = writeln!(
                    out,
                    "{pad}leaf counts=[{}, {}, {}]",
                    s.class_weights[0], s.class_weights[1], s.class_weights[2]
                );
            }
            NodeKind::Split(s) => {
                let _ = writeln!(out, "{pad}feature {} <= {}", s.feature, s.threshold);
                s.children.iter().for_each(|c| c.export(depth + 1, out));
            }
        }
    }
}

fn attempt_split(stats: &NodeStats, ctx: &Ctx) -> Option<SplitCandidate> {
    if stats.n_classes_seen() < 2 {
        return None;
    }
    let ranked = rank_splits(
        &stats.observers,
        &stats.class_weights,
        ctx.cfg.n_split_candidates,
    );
    let best = *ranked.first()?;
    if best.gain <= 1e-12 {
        return None;
    }
    let eps = ctx.bound(stats.weight());
    // Efdt compares against not splitting; Vfdt against the runner-up.
    let rival = match ctx.variant {
        TreeVariant::Efdt => 0.0,
        _ => ranked.get(1).map_or(0.0, |s| s.gain.max(0.0)),
    };
    (best.gain - rival > eps || eps < ctx.cfg.tie_threshold).then_some(best)
}

fn reevaluate(split: &SplitNode, ctx: &Ctx) -> Option<SplitCandidate> {
    let stats = split.stats.as_ref()?;
    let ranked = rank_splits(
        &stats.observers,
        &stats.class_weights,
        ctx.cfg.n_split_candidates,
    );
    let best = *ranked.first()?;
    if best.feature == split.feature {
        return None;
    }
    let (l, r) = stats.observers[split.feature].partition(split.threshold);
    let current = info_gain(&stats.class_weights, &l, &r);
    (best.gain - current > ctx.bound(stats.weight())).then_some(best)
}

/// Incremental Hoeffding-bound decision tree over numeric features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HoeffdingTree {
    cfg: HoeffdingConfig,
    variant: TreeVariant,
    root: Option<Box<Node>>,
    n_features: usize,
    counters: TreeCounters,
    seen: f64,
}

impl HoeffdingTree {
    pub fn new(cfg: HoeffdingConfig, variant: TreeVariant) -> Result<Self> {
        cfg.validate()?;
        if let TreeVariant::Adaptive { delta } = variant {
            if !(delta > 0.0 && delta < 1.0) {
                return Err(Error::Config(format!("ADWIN delta {delta} outside (0, 1)")));
            }
        }
        Ok(Self {
            cfg,
            variant,
            root: None,
            n_features: 0,
            counters: TreeCounters::default(),
            seen: 0.0,
        })
    }

    pub fn vfdt() -> Self {
        Self::new(HoeffdingConfig::default(), TreeVariant::Vfdt).expect("defaults are valid")
    }

    pub fn adaptive() -> Self {
        Self::new(
            HoeffdingConfig::default(),
            TreeVariant::Adaptive {
                delta: crate::drift::DEFAULT_DELTA,
            },
        )
        .expect("defaults are valid")
    }

    pub fn efdt() -> Self {
        Self::new(HoeffdingConfig::default(), TreeVariant::Efdt).expect("defaults are valid")
    }

    pub fn config(&self) -> &HoeffdingConfig {
        &self.cfg
    }

    pub fn variant(&self) -> TreeVariant {
        self.variant
    }

    pub fn counters(&self) -> TreeCounters {
        self.counters
    }

    /// Total training weight received.
    pub fn weight_seen(&self) -> f64 {
        self.seen
    }

    pub fn node_count(&self) -> usize {
        self.root.as_ref().map_or(0, |r| r.count_nodes())
    }

    pub fn depth(&self) -> usize {
        self.root.as_ref().map_or(0, |r| r.depth())
    }

    /// Root split as `(feature, threshold)`, if the root has split.
    pub fn root_split(&self) -> Option<(usize, f64)> {
        match &self.root.as_ref()?.kind {
            NodeKind::Split(s) => Some((s.feature, s.threshold)),
            NodeKind::Leaf(_) => None,
        }
    }

    /// Class weights absorbed by current leaves plus those frozen into
    /// split nodes when they stopped being leaves.
    pub fn observed_weights(&self) -> [f64; N_CLASSES] {
        let mut acc = [0.0; N_CLASSES];
        if let Some(r) = &self.root {
            r.observed_weights(&mut acc);
        }
        acc
    }

    pub fn has_alternate(&self) -> bool {
        self.root.as_ref().is_some_and(|r| r.alternate.is_some())
    }

    /// Indented text dump, one node per line.
    pub fn export_text(&self) -> String {
        let mut out = String::new();
        if let Some(r) = &self.root {
            r.export(0, &mut out);
        }
        out
    }

    pub fn learn_weighted(&mut self, x: &[f64], y: CongestionLevel, weight: f64) -> Result<()> {
        check_finite(x)?;
        if self.root.is_none() {
            self.n_features = x.len();
        } else if x.len() != self.n_features {
            return Err(Error::Shape {
                expected: self.n_features,
                actual: x.len(),
            });
        }
        if weight <= 0.0 {
            return Ok(());
        }
        let ctx = Ctx {
            cfg: &self.cfg,
            variant: self.variant,
            n_features: self.n_features,
        };
        let root = self.root.get_or_insert_with(|| Box::new(ctx.new_leaf()));
        root.learn(x, y, weight, &ctx, &mut self.counters);
        self.seen += weight;
        Ok(())
    }
}

impl Classifier for HoeffdingTree {
    fn name(&self) -> &str {
        match self.variant {
            TreeVariant::Vfdt => "HT",
            TreeVariant::Adaptive { .. } => "HAT",
            TreeVariant::Efdt => "HATT",
        }
    }

    fn predict_one(&self, features: &[f64]) -> Result<ClassScores> {
        let Some(root) = &self.root else {
            return Ok(one_hot(CongestionLevel::FreeFlow));
        };
        if features.len() != self.n_features {
            return Err(Error::Shape {
                expected: self.n_features,
                actual: features.len(),
            });
        }
        Ok(root
            .leaf_for(features)
            .predict(features, self.cfg.leaf_prediction))
    }

    fn learn_one(&mut self, features: &[f64], target: CongestionLevel) -> Result<()> {
        self.learn_weighted(features, target, 1.0)
    }

    fn reset(&mut self, _seed: u64) {
        self.root = None;
        self.n_features = 0;
        self.counters = TreeCounters::default();
        self.seen = 0.0;
    }

    fn fingerprint(&self) -> u64 {
        fingerprint_of(self)
    }
}
