mod common;

use common::*;
use driftlane::drift::Adwin;

#[test]
fn exact_window_oracle_sanity() {
    // A stationary constant never cuts; a 0 -> 1 step always does.
    assert_eq!(exact_window_detections(&[0.0; 500], 0.002), 0);
    let step: Vec<f64> = (0..400).map(|i| f64::from(u8::from(i >= 200))).collect();
    assert!(exact_window_detections(&step, 0.002) >= 1);
}

#[test]
fn fixture_matches_the_oracle() {
    let computed = oracle_fixture();
    if std::env::var_os("DRIFTLANE_WRITE_FIXTURES").is_some() {
        let text = serde_json::to_string_pretty(&computed).unwrap() + "\n";
        std::fs::write(FP_FIXTURE, text).unwrap();
    }
    assert_eq!(load_fixture(), computed);
}

#[test]
fn bucketed_detector_tracks_the_exact_one_on_steps() {
    // Both must see the same 0.2 -> 0.8 shift.
    for seed in 0..5 {
        let mut xs = bernoulli(seed, 0.2, 1000);
        xs.extend(bernoulli(seed + 100, 0.8, 300));
        let mut a = Adwin::new(0.002);
        let hits: usize = xs.iter().map(|&x| usize::from(a.insert(x).unwrap())).sum();
        assert!(hits >= 1);
        assert!(exact_window_detections(&xs, 0.002) >= 1);
    }
}
