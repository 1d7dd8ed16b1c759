//! Seeded three-phase corridor simulator.
//!
//! A hidden phase chain evolves at the corridor head; sensor `i` replays it
//! `i * propagation_delay` slots later. Sensor 0 is the most upstream.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{AtrMeta, LabelThresholds, LoopMatrix};
use crate::types::CongestionLevel;

pub const SPEED_CLAMP: (f64, f64) = (0.0, 80.0);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseParams {
    pub mean: f64,
    pub std: f64,
    /// Mean of the geometric dwell time, in slots. Infinite means the
    /// phase is never left.
    pub dwell_mean: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseModel {
    pub free_flow: PhaseParams,
    pub congestion: PhaseParams,
    pub bottleneck: PhaseParams,
}

impl Default for PhaseModel {
    fn default() -> Self {
        Self {
            free_flow: PhaseParams {
                mean: 58.0,
                std: 4.0,
                dwell_mean: 60.0,
            },
            congestion: PhaseParams {
                mean: 32.0,
                std: 5.0,
                dwell_mean: 2.0,
            },
            bottleneck: PhaseParams {
                mean: 10.0,
                std: 6.0,
                dwell_mean: 30.0,
            },
        }
    }
}

impl PhaseModel {
    pub fn params(&self, phase: CongestionLevel) -> &PhaseParams {
        match phase {
            CongestionLevel::FreeFlow => &self.free_flow,
            CongestionLevel::Congestion => &self.congestion,
            CongestionLevel::Bottleneck => &self.bottleneck,
        }
    }

    /// Means ordered and on the matching side of the thresholds.
    pub fn validate(&self, th: &LabelThresholds) -> Result<()> {
        for p in [self.free_flow, self.congestion, self.bottleneck] {
            if !p.mean.is_finite() || !(p.std >= 0.0) || !(p.dwell_mean >= 1.0) {
                return Err(Error::Config(format!("invalid phase parameters {p:?}")));
            }
        }
        let (f, c, b) = (
            self.free_flow.mean,
            self.congestion.mean,
            self.bottleneck.mean,
        );
        if !(f > th.free_flow_above
            && b < th.bottleneck_below
            && c >= th.bottleneck_below
            && c <= th.free_flow_above)
        {
            return Err(Error::Config(format!(
                "phase means {f}/{c}/{b} do not match thresholds {}/{}",
                th.free_flow_above, th.bottleneck_below
            )));
        }
        Ok(())
    }

    fn with_swapped_extremes(mut self) -> Self {
        std::mem::swap(&mut self.free_flow.mean, &mut self.bottleneck.mean);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DriftChange {
    /// Exchange the free-flow and bottleneck speed means.
    SwapExtremeMeans,
    Replace(PhaseModel),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftEvent {
    pub slot: usize,
    /// Affected sensors; all when absent.
    #[serde(default)]
    pub sensors: Option<Vec<usize>>,
    pub change: DriftChange,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CorridorConfig {
    pub n_sensors: usize,
    /// Slots per sensor hop.
    pub propagation_delay: usize,
    pub n_slots: usize,
    pub seed: u64,
    pub thresholds: LabelThresholds,
    pub phases: PhaseModel,
    pub drift: Vec<DriftEvent>,
}

impl Default for CorridorConfig {
    fn default() -> Self {
        Self {
            n_sensors: 9,
            propagation_delay: 4,
            n_slots: 50_000,
            seed: 0,
            thresholds: LabelThresholds::default(),
            phases: PhaseModel::default(),
            drift: Vec::new(),
        }
    }
}

impl CorridorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_sensors == 0 || self.n_slots == 0 {
            return Err(Error::Config("n_sensors and n_slots must be >= 1".into()));
        }
        self.thresholds.validate()?;
        self.phases.validate(&self.thresholds)?;
        if self.drift.windows(2).any(|w| w[0].slot >= w[1].slot) {
            return Err(Error::Config(
                "drift slots must be strictly increasing".into(),
            ));
        }
        for e in &self.drift {
            if let Some(bad) = e.sensors.iter().flatten().find(|&&s| s >= self.n_sensors) {
                return Err(Error::Config(format!(
                    "drift names sensor {bad} of {}",
                    self.n_sensors
                )));
            }
        }
        Ok(())
    }

    /// Center sensor, the natural prediction target.
    pub fn target_sensor(&self) -> usize {
        self.n_sensors / 2
    }

    pub fn sensor_id(i: usize) -> String {
        format!("SYN-{i}")
    }

    /// One route, mileposts 0, 1, 2, ...
    pub fn metadata(&self) -> Vec<AtrMeta> {
        (0..self.n_sensors)
            .map(|i| AtrMeta {
                sensor_id: Self::sensor_id(i),
                route: "SYN".into(),
                milepost: i as f64,
            })
            .collect()
    }
}

/// Adds an abrupt swap of the free-flow and bottleneck means on the target
/// sensor from `slot` on.
pub fn inject_label_flip(cfg: &CorridorConfig, slot: usize) -> CorridorConfig {
    let mut out = cfg.clone();
    out.drift.push(DriftEvent {
        slot,
        sensors: Some(vec![cfg.target_sensor()]),
        change: DriftChange::SwapExtremeMeans,
    });
    out.drift.sort_by_key(|e| e.slot);
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct Corridor {
    pub matrix: LoopMatrix,
    pub meta: Vec<AtrMeta>,
    /// Phase at the head for every chain step; sensor `i` at slot `t`
    /// shows `head_phases[t + (n_sensors - 1 - i) * delay]`.
    pub head_phases: Vec<CongestionLevel>,
}

impl Corridor {
    pub fn sensor_phase(
        &self,
        cfg: &CorridorConfig,
        sensor: usize,
        slot: usize,
    ) -> CongestionLevel {
        self.head_phases[slot + (cfg.n_sensors - 1 - sensor) * cfg.propagation_delay]
    }
}

fn leave_probability(p: &PhaseParams) -> f64 {
    if p.dwell_mean.is_finite() {
        1.0 / p.dwell_mean
    } else {
        0.0
    }
}

fn phase_chain(len: usize, phases: &PhaseModel, rng: &mut ChaCha8Rng) -> Vec<CongestionLevel> {
    use CongestionLevel::*;
    let mut out = Vec::with_capacity(len);
    let mut state = FreeFlow;
    for _ in 0..len {
        out.push(state);
        if rng.random::<f64>() < leave_probability(phases.params(state)) {
            state = match state {
                FreeFlow | Bottleneck => Congestion,
                Congestion => {
                    if rng.random::<f64>() < 0.5 {
                        FreeFlow
                    } else {
                        Bottleneck
                    }
                }
            };
        }
    }
    out
}

/// Civil date from days since 1970-01-01.
fn civil_from_days(z: i64) -> (i64, u32, u32) {
    let z = z + 719_468;
    let era = z.div_euclid(146_097);
    let doe = z.rem_euclid(146_097);
    let yoe = (doe - doe / 1460 + doe / 36_524 - doe / 146_096) / 365;
    let doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    let mp = (5 * doy + 2) / 153;
    let d = (doy - (153 * mp + 2) / 5 + 1) as u32;
    let m = if mp < 10 { mp + 3 } else { mp - 9 } as u32;
    (yoe + era * 400 + i64::from(m <= 2), m, d)
}

/// Timestamp of a 5-minute slot counted from 2015-01-01 00:00.
pub fn slot_timestamp(slot: usize) -> String {
    const EPOCH_DAYS: i64 = 16_436;
    let minutes = slot as i64 * 5;
    let (y, m, d) = civil_from_days(EPOCH_DAYS + minutes / 1440);
    let mm = minutes % 1440;
    format!("{y:04}-{m:02}-{d:02} {:02}:{:02}", mm / 60, mm % 60)
}

pub fn gen_corridor(cfg: &CorridorConfig) -> Result<Corridor> {
    cfg.validate()?;
    let n = cfg.n_sensors;
    let span = (n - 1) * cfg.propagation_delay;
    let mut chain_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut noise_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    noise_rng.set_stream(1);
    let head = phase_chain(cfg.n_slots + span, &cfg.phases, &mut chain_rng);

    let mut models = vec![cfg.phases; n];
    let mut pending = cfg.drift.iter().peekable();
    let mut speeds = Vec::with_capacity(cfg.n_slots * n);
    for t in 0..cfg.n_slots {
        while let Some(e) = pending.next_if(|e| e.slot <= t) {
            for (s, model) in models.iter_mut().enumerate() {
                if e.sensors.as_ref().is_some_and(|v| !v.contains(&s)) {
                    continue;
                }
                *model = match &e.change {
                    DriftChange::SwapExtremeMeans => model.with_swapped_extremes(),
                    DriftChange::Replace(p) => *p,
                };
            }
        }
        for (s, model) in models.iter().enumerate() {
            let phase = head[t + span - s * cfg.propagation_delay];
            let p = model.params(phase);
            let z: f64 = noise_rng.sample(StandardNormal);
            speeds.push((p.mean + p.std * z).clamp(SPEED_CLAMP.0, SPEED_CLAMP.1));
        }
    }
    let matrix = LoopMatrix::new(
        (0..cfg.n_slots).map(slot_timestamp).collect(),
        (0..n).map(CorridorConfig::sensor_id).collect(),
        speeds,
    )?;
    Ok(Corridor {
        matrix,
        meta: cfg.metadata(),
        head_phases: head,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use CongestionLevel::*;

    fn small(n_slots: usize) -> CorridorConfig {
        CorridorConfig {
            n_slots,
            seed: 3,
            ..CorridorConfig::default()
        }
    }

    #[test]
    fn timestamps_advance_by_five_minutes() {
        assert_eq!(slot_timestamp(0), "2015-01-01 00:00");
        assert_eq!(slot_timestamp(1), "2015-01-01 00:05");
        assert_eq!(slot_timestamp(288), "2015-01-02 00:00");
        assert_eq!(slot_timestamp(288 * 59), "2015-03-01 00:00");
        assert_eq!(slot_timestamp(288 * 365), "2016-01-01 00:00");
    }

    #[test]
    fn endless_free_flow_without_noise() {
        let mut cfg = small(2000);
        cfg.phases.free_flow.dwell_mean = f64::INFINITY;
        cfg.phases.free_flow.std = 0.0;
        let c = gen_corridor(&cfg).unwrap();
        for s in 0..9 {
            assert!(c
                .matrix
                .column(s)
                .all(|v| cfg.thresholds.label(v) == FreeFlow));
        }
    }

    #[test]
    fn deterministic_per_seed() {
        let a = gen_corridor(&small(3000)).unwrap();
        let b = gen_corridor(&small(3000)).unwrap();
        assert_eq!(a, b);
        let mut other = small(3000);
        other.seed = 4;
        assert_ne!(gen_corridor(&other).unwrap().matrix, a.matrix);
    }

    #[test]
    fn chain_never_jumps_between_extremes() {
        let c = gen_corridor(&small(50_000)).unwrap();
        for w in c.head_phases.windows(2) {
            let jump = matches!(
                (w[0], w[1]),
                (FreeFlow, Bottleneck) | (Bottleneck, FreeFlow)
            );
            assert!(!jump);
        }
    }

    #[test]
    fn default_mix_has_short_rare_congestion() {
        let cfg = small(50_000);
        let c = gen_corridor(&cfg).unwrap();
        let target = cfg.target_sensor();
        let labels: Vec<_> = c
            .matrix
            .column(target)
            .map(|v| cfg.thresholds.label(v))
            .collect();
        let congested = labels.iter().filter(|&&l| l == Congestion).count();
        assert!((congested as f64) / 50_000.0 < 0.15, "{congested}");
        let mut runs = Vec::new();
        let mut run = 0;
        for l in &labels {
            if *l == Congestion {
                run += 1;
            } else if run > 0 {
                runs.push(run);
                run = 0;
            }
        }
        runs.sort_unstable();
        assert!(runs[runs.len() / 2] <= 2);
        let agree = (0..50_000)
            .filter(|&t| labels[t] == c.sensor_phase(&cfg, target, t))
            .count();
        assert!(agree as f64 / 50_000.0 >= 0.99, "{agree}");
    }

    #[test]
    fn noiseless_downstream_is_shifted_upstream() {
        let mut cfg = small(5000);
        for p in [
            &mut cfg.phases.free_flow,
            &mut cfg.phases.congestion,
            &mut cfg.phases.bottleneck,
        ] {
            p.std = 0.0;
        }
        let c = gen_corridor(&cfg).unwrap();
        let d = cfg.propagation_delay;
        for s in 1..9 {
            for t in d..5000 {
                assert_eq!(c.matrix.get(t, s), c.matrix.get(t - d, s - 1));
            }
        }
    }

    #[test]
    fn flip_at_zero_equals_swapped_target_from_start() {
        let mut cfg = small(4000);
        for p in [
            &mut cfg.phases.free_flow,
            &mut cfg.phases.congestion,
            &mut cfg.phases.bottleneck,
        ] {
            p.std = 0.0;
        }
        let plain = gen_corridor(&cfg).unwrap();
        let flipped = gen_corridor(&inject_label_flip(&cfg, 0)).unwrap();
        let target = cfg.target_sensor();
        for t in 0..4000 {
            for s in 0..9 {
                let (a, b) = (plain.matrix.get(t, s), flipped.matrix.get(t, s));
                if s != target {
                    assert_eq!(a, b);
                } else {
                    let mirrored = match a {
                        58.0 => 10.0,
                        10.0 => 58.0,
                        v => v,
                    };
                    assert_eq!(b, mirrored);
                }
            }
        }
    }

    #[test]
    fn flip_past_end_is_inert() {
        let cfg = small(3000);
        let a = gen_corridor(&cfg).unwrap();
        let b = gen_corridor(&inject_label_flip(&cfg, 10_000)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn rejects_inconsistent_configs() {
        let mut cfg = small(10);
        cfg.phases.free_flow.mean = 40.0;
        assert!(matches!(gen_corridor(&cfg), Err(Error::Config(_))));
        let mut cfg = small(10);
        cfg.drift = inject_label_flip(&inject_label_flip(&cfg, 5), 5).drift;
        assert!(gen_corridor(&cfg).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let c = gen_corridor(&small(300)).unwrap();
        let mut buf = Vec::new();
        c.matrix.write_csv(&mut buf).unwrap();
        let back =
            crate::ingest::read_loop_csv(buf.as_slice(), std::path::Path::new("mem")).unwrap();
        assert_eq!(back.n_rows(), 300);
        for t in 0..300 {
            for s in 0..9 {
                assert_eq!(back.get(t, s), c.matrix.get(t, s));
            }
        }
    }
}
