#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const FP_FIXTURE: &str = concat!(
    env!("CARGO_MANIFEST_DIR"),
    "/tests/fixtures/adwin_false_positives.json"
);
pub const FP_SEEDS: u64 = 10;
pub const FP_LEN: usize = 10_000;
pub const FP_RATE: f64 = 0.2;

/// Bernoulli(`p`) 0/1 stream.
pub fn bernoulli(seed: u64, p: f64, n: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| if rng.random::<f64>() < p { 1.0 } else { 0.0 })
        .collect()
}

/// Adaptive windowing over the raw window: every split point is tested,
/// and one element is dropped from the old end per positive test. Returns
/// the number of inserts that shrank the window.
pub fn exact_window_detections(xs: &[f64], delta: f64) -> usize {
    let mut window: std::collections::VecDeque<f64> = Default::default();
    let mut detections = 0;
    for &x in xs {
        window.push_back(x);
        let mut shrank = false;
        loop {
            let w = window.len();
            if w < 2 {
                break;
            }
            let total: f64 = window.iter().sum();
            let mut head = 0.0;
            let mut cut = false;
            for (i, v) in window.iter().take(w - 1).enumerate() {
                head += v;
                let (a, b) = ((i + 1) as f64, (w - i - 1) as f64);
                let diff = (head / a - (total - head) / b).abs();
                let harmonic = 1.0 / (1.0 / a + 1.0 / b);
                let eps = ((4.0 * w as f64 / delta).ln() / (2.0 * harmonic)).sqrt();
                if diff >= eps {
                    cut = true;
                    break;
                }
            }
            if !cut {
                break;
            }
            window.pop_front();
            shrank = true;
        }
        detections += usize::from(shrank);
    }
    detections
}

#[derive(Debug, serde::Deserialize, serde::Serialize, PartialEq)]
pub struct FpFixture {
    pub delta: f64,
    pub rate: f64,
    pub length: usize,
    pub seeds: Vec<u64>,
    pub per_seed: Vec<usize>,
    /// Total over all seeds.
    pub ceiling: usize,
}

pub fn oracle_fixture() -> FpFixture {
    let seeds: Vec<u64> = (0..FP_SEEDS).collect();
    let per_seed: Vec<usize> = seeds
        .iter()
        .map(|&s| exact_window_detections(&bernoulli(s, FP_RATE, FP_LEN), 0.002))
        .collect();
    FpFixture {
        delta: 0.002,
        rate: FP_RATE,
        length: FP_LEN,
        ceiling: per_seed.iter().sum(),
        seeds,
        per_seed,
    }
}

pub fn load_fixture() -> FpFixture {
    serde_json::from_str(&std::fs::read_to_string(FP_FIXTURE).expect("fixture present"))
        .expect("fixture parses")
}
