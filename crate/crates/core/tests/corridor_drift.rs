//! Learners on the simulated corridor before and after a mean swap at the
//! target sensor.

use driftlane::ensembles::{Arf, ArfConfig};
use driftlane::eval::{horizon_sweep, Mode, RunConfig};
use driftlane::ingest::{
    build_instances, select_neighbors, LabelThresholds, WindowSpec, DEFAULT_WARM_START,
};
use driftlane::synth::{gen_corridor, inject_label_flip, CorridorConfig};
use driftlane::trees::HoeffdingTree;
use driftlane::{Classifier, CongestionLevel, LabeledInstance};

const FLIP: usize = 25_000;

fn flipped_stream(seed: u64) -> Vec<LabeledInstance> {
    let cfg = inject_label_flip(
        &CorridorConfig {
            seed,
            ..Default::default()
        },
        FLIP,
    );
    let c = gen_corridor(&cfg).unwrap();
    let nb = select_neighbors(&c.meta, &CorridorConfig::sensor_id(cfg.target_sensor()), 4).unwrap();
    build_instances(
        &c.matrix,
        &nb,
        &WindowSpec::default(),
        &LabelThresholds::default(),
    )
    .unwrap()
}

/// Per-instance correctness after a warm start; learns only when `online`.
fn hits(
    stream: &[LabeledInstance],
    learner: &mut dyn Classifier,
    online: bool,
) -> Vec<(usize, bool)> {
    for inst in &stream[..DEFAULT_WARM_START] {
        learner.learn_one(&inst.features, inst.target).unwrap();
    }
    stream[DEFAULT_WARM_START..]
        .iter()
        .map(|inst| {
            let ok = learner
                .predict_one(&inst.features)
                .unwrap()
                .argmax()
                .unwrap()
                == inst.target;
            if online {
                learner.learn_one(&inst.features, inst.target).unwrap();
            }
            (inst.target_time, ok)
        })
        .collect()
}

fn accuracy(h: &[(usize, bool)], from: usize, to: usize) -> f64 {
    let w: Vec<bool> = h
        .iter()
        .filter(|(t, _)| (from..to).contains(t))
        .map(|p| p.1)
        .collect();
    w.iter().filter(|&&b| b).count() as f64 / w.len() as f64
}

#[test]
fn frozen_tree_fails_while_adaptive_tree_recovers() {
    for seed in 0..3 {
        let s = flipped_stream(seed);
        let frozen = hits(&s, &mut HoeffdingTree::vfdt(), false);
        let adaptive = hits(&s, &mut HoeffdingTree::adaptive(), true);
        let frozen_acc = accuracy(&frozen, FLIP, 50_000);
        let recovered = accuracy(&adaptive, FLIP + 4000, FLIP + 5000);
        assert!(frozen_acc < 0.5, "seed {seed}: frozen {frozen_acc}");
        assert!(recovered > 0.8, "seed {seed}: adaptive {recovered}");
    }
}

#[test]
fn online_forest_beats_frozen_forest_after_flip() {
    use driftlane::eval::{umf1_of, ConfusionMatrix};
    let s = flipped_stream(4);
    let post = |online: bool| {
        let mut arf = Arf::new(ArfConfig::default(), 4).unwrap();
        let mut cm = ConfusionMatrix::default();
        for inst in &s[..DEFAULT_WARM_START] {
            arf.learn_one(&inst.features, inst.target).unwrap();
        }
        for inst in &s[DEFAULT_WARM_START..] {
            let p = arf.predict_one(&inst.features).unwrap().argmax().unwrap();
            if inst.target_time >= FLIP {
                cm.record(inst.target, p);
            }
            if online {
                arf.learn_one(&inst.features, inst.target).unwrap();
            }
        }
        umf1_of(&cm)
    };
    let (online, frozen) = (post(true), post(false));
    assert!(online - frozen >= 0.1, "online {online} frozen {frozen}");
}

#[test]
fn congestion_fades_with_horizon() {
    let cfg = CorridorConfig {
        seed: 2,
        ..Default::default()
    };
    let c = gen_corridor(&cfg).unwrap();
    let nb = select_neighbors(&c.meta, "SYN-4", 4).unwrap();
    let base = RunConfig::new(driftlane::registry::MethodId::HATT, Mode::Online, 1, "SYN");
    let reports = horizon_sweep(&base, &[1, 5, 10, 20], &c.matrix, &nb).unwrap();
    assert_eq!(reports.len(), 4);
    let reports: Vec<_> = reports.into_iter().map(Result::unwrap).collect();
    assert_eq!(
        reports.iter().map(|r| r.config.horizon).collect::<Vec<_>>(),
        [1, 5, 10, 20]
    );
    let cong = |i: usize| reports[i].f1(CongestionLevel::Congestion);
    assert!(cong(3) < cong(0), "h=1 {} h=20 {}", cong(0), cong(3));

    let single = horizon_sweep(&base, &[1], &c.matrix, &nb)
        .unwrap()
        .pop()
        .unwrap()
        .unwrap();
    assert_eq!(single.confusion, reports[0].confusion);
}
