//! Loop-detector CSV ingestion, neighborhood selection and lagged instance
//! construction.
//!
//! Data files carry a `timestamp` column followed by one column per sensor,
//! one row per 5-minute slot. Metadata files map each sensor to a route and
//! milepost. Features are flattened sensor-major (milepost ascending) and
//! lag-minor (oldest first).

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{CongestionLevel, LabeledInstance, SpeedValue};

/// One week of 5-minute slots.
pub const DEFAULT_WARM_START: usize = 7 * 24 * 12;

/// Neighborhoods spanning more than this are flagged.
pub const MAX_NEIGHBOR_SPAN_MILES: f64 = 6.0;

/// Dense time-by-sensor speed grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoopMatrix {
    timestamps: Vec<String>,
    sensor_ids: Vec<String>,
    /// Row-major, `timestamps.len() * sensor_ids.len()` entries.
    speeds: Vec<f64>,
}

impl LoopMatrix {
    pub fn new(timestamps: Vec<String>, sensor_ids: Vec<String>, speeds: Vec<f64>) -> Result<Self> {
        if speeds.len() != timestamps.len() * sensor_ids.len() {
            return Err(Error::InvalidInput(format!(
                "{} speeds for {} rows x {} sensors",
                speeds.len(),
                timestamps.len(),
                sensor_ids.len()
            )));
        }
        for (i, &s) in speeds.iter().enumerate() {
            SpeedValue::new(s).map_err(|_| {
                Error::InvalidInput(format!(
                    "invalid speed {s} at row {}, sensor {}",
                    i / sensor_ids.len(),
                    sensor_ids[i % sensor_ids.len()]
                ))
            })?;
        }
        Ok(Self {
            timestamps,
            sensor_ids,
            speeds,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.timestamps.len()
    }

    pub fn n_sensors(&self) -> usize {
        self.sensor_ids.len()
    }

    pub fn sensor_ids(&self) -> &[String] {
        &self.sensor_ids
    }

    pub fn timestamps(&self) -> &[String] {
        &self.timestamps
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.speeds[row * self.sensor_ids.len() + col]
    }

    pub fn row(&self, row: usize) -> &[f64] {
        let n = self.sensor_ids.len();
        &self.speeds[row * n..(row + 1) * n]
    }

    pub fn column_index(&self, sensor_id: &str) -> Option<usize> {
        self.sensor_ids.iter().position(|s| s == sensor_id)
    }

    pub fn column(&self, col: usize) -> impl Iterator<Item = f64> + '_ {
        (0..self.n_rows()).map(move |r| self.get(r, col))
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(
            std::iter::once("timestamp").chain(self.sensor_ids.iter().map(|s| s.as_str())),
        )?;
        for (r, ts) in self.timestamps.iter().enumerate() {
            let mut record = Vec::with_capacity(self.n_sensors() + 1);
            record.push(ts.clone());
            record.extend(self.row(r).iter().map(|v| v.to_string()));
            w.write_record(&record)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Sensor placement metadata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtrMeta {
    pub sensor_id: String,
    pub route: String,
    pub milepost: f64,
}

pub fn write_meta_csv<W: Write>(meta: &[AtrMeta], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["sensor_id", "route", "milepost"])?;
    for m in meta {
        w.write_record([m.sensor_id.clone(), m.route.clone(), m.milepost.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Parses a data file and its metadata file.
pub fn parse_loop_csv(path: &Path, meta_path: &Path) -> Result<(LoopMatrix, Vec<AtrMeta>)> {
    let matrix = read_loop_csv(File::open(path)?, path)?;
    let meta = read_meta_csv(File::open(meta_path)?, meta_path)?;
    for id in matrix.sensor_ids() {
        if !meta.iter().any(|m| &m.sensor_id == id) {
            return Err(Error::MissingMetadata(id.clone()));
        }
    }
    Ok((matrix, meta))
}

/// Parses a data CSV. `origin` only labels diagnostics; row numbers are
/// 1-based file lines, the header being line 1.
pub fn read_loop_csv<R: Read>(reader: R, origin: &Path) -> Result<LoopMatrix> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(reader);
    let header = rdr.headers()?.clone();
    if header.len() < 2 {
        return Err(Error::Format {
            path: origin.to_path_buf(),
            row: 1,
            message: "header needs a timestamp column and at least one sensor".into(),
        });
    }
    let sensor_ids: Vec<String> = header
        .iter()
        .skip(1)
        .map(|s| s.trim().to_string())
        .collect();
    let width = header.len();

    let mut timestamps = Vec::new();
    let mut speeds = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let row = i + 2;
        let record = record?;
        if record.len() != width {
            return Err(Error::Format {
                path: origin.to_path_buf(),
                row,
                message: format!("expected {width} fields, found {}", record.len()),
            });
        }
        timestamps.push(record[0].to_string());
        for (field, id) in record.iter().skip(1).zip(&sensor_ids) {
            let value_err = |message: String| Error::Value {
                path: origin.to_path_buf(),
                row,
                column: id.clone(),
                message,
            };
            let v: f64 = field
                .trim()
                .parse()
                .map_err(|_| value_err(format!("not a number: {field:?}")))?;
            let v = SpeedValue::new(v).map_err(|e| value_err(e.to_string()))?;
            speeds.push(v.mph());
        }
    }
    Ok(LoopMatrix {
        timestamps,
        sensor_ids,
        speeds,
    })
}

pub fn read_meta_csv<R: Read>(reader: R, origin: &Path) -> Result<Vec<AtrMeta>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(reader);
    let mut out: Vec<AtrMeta> = Vec::new();
    for (i, rec) in rdr.deserialize::<AtrMeta>().enumerate() {
        let row = i + 2;
        let m = rec.map_err(|e| Error::Format {
            path: origin.to_path_buf(),
            row,
            message: e.to_string(),
        })?;
        if !m.milepost.is_finite() || m.milepost < 0.0 {
            return Err(Error::Value {
                path: origin.to_path_buf(),
                row,
                column: "milepost".into(),
                message: format!("invalid milepost {}", m.milepost),
            });
        }
        if out
            .iter()
            .any(|o| o.sensor_id == m.sensor_id || (o.route == m.route && o.milepost == m.milepost))
        {
            return Err(Error::Format {
                path: origin.to_path_buf(),
                row,
                message: format!("duplicate sensor or placement for {}", m.sensor_id),
            });
        }
        out.push(m);
    }
    Ok(out)
}

/// Target sensor with `k` upstream and `k` downstream neighbors, sorted by
/// milepost.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeighborSet {
    pub sensor_ids: Vec<String>,
    /// Position of the target inside `sensor_ids`.
    pub target_position: usize,
    /// Largest milepost distance from the target.
    pub span_miles: f64,
}

impl NeighborSet {
    pub fn target(&self) -> &str {
        &self.sensor_ids[self.target_position]
    }

    pub fn exceeds_span(&self) -> bool {
        self.span_miles > MAX_NEIGHBOR_SPAN_MILES
    }
}

pub fn select_neighbors(meta: &[AtrMeta], target: &str, k: usize) -> Result<NeighborSet> {
    let t = meta
        .iter()
        .find(|m| m.sensor_id == target)
        .ok_or_else(|| Error::UnknownSensor(target.to_string()))?;
    let mut route: Vec<&AtrMeta> = meta.iter().filter(|m| m.route == t.route).collect();
    route.sort_by(|a, b| a.milepost.total_cmp(&b.milepost));
    let pos = route
        .iter()
        .position(|m| m.sensor_id == target)
        .expect("target is on its own route");

    let insufficient = |side, found| Error::InsufficientNeighbors {
        target: target.to_string(),
        side,
        needed: k,
        found,
    };
    if pos < k {
        return Err(insufficient("upstream", pos));
    }
    let after = route.len() - pos - 1;
    if after < k {
        return Err(insufficient("downstream", after));
    }

    let members = &route[pos - k..=pos + k];
    let span_miles = members
        .iter()
        .map(|m| (m.milepost - t.milepost).abs())
        .fold(0.0, f64::max);
    let nb = NeighborSet {
        sensor_ids: members.iter().map(|m| m.sensor_id.clone()).collect(),
        target_position: k,
        span_miles,
    };
    if nb.exceeds_span() {
        log::warn!(
            "neighborhood of {target} spans {span_miles:.2} miles (> {MAX_NEIGHBOR_SPAN_MILES})"
        );
    }
    Ok(nb)
}

/// Lag window and forecasting horizon, both in slots.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowSpec {
    pub n_lags: usize,
    pub horizon: usize,
}

impl Default for WindowSpec {
    fn default() -> Self {
        Self {
            n_lags: 5,
            horizon: 1,
        }
    }
}

impl WindowSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_lags == 0 || self.horizon == 0 {
            return Err(Error::Config(format!(
                "n_lags and horizon must be >= 1 (got {} and {})",
                self.n_lags, self.horizon
            )));
        }
        Ok(())
    }

    /// Index of the most recent target-sensor reading in a flattened
    /// feature vector.
    pub fn latest_target_feature(&self, target_position: usize) -> usize {
        target_position * self.n_lags + self.n_lags - 1
    }
}

/// Speed thresholds separating the three phases. Both are exclusive: a
/// speed equal to either threshold is congestion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LabelThresholds {
    pub free_flow_above: f64,
    pub bottleneck_below: f64,
}

impl Default for LabelThresholds {
    fn default() -> Self {
        Self {
            free_flow_above: 42.0,
            bottleneck_below: 22.0,
        }
    }
}

impl LabelThresholds {
    pub fn new(free_flow_above: f64, bottleneck_below: f64) -> Result<Self> {
        let th = Self {
            free_flow_above,
            bottleneck_below,
        };
        th.validate()?;
        Ok(th)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.bottleneck_below > 0.0 && self.bottleneck_below < self.free_flow_above)
            || !self.free_flow_above.is_finite()
        {
            return Err(Error::Config(format!(
                "thresholds must satisfy 0 < bottleneck_below ({}) < free_flow_above ({})",
                self.bottleneck_below, self.free_flow_above
            )));
        }
        Ok(())
    }

    pub fn label(&self, mph: f64) -> CongestionLevel {
        if mph > self.free_flow_above {
            CongestionLevel::FreeFlow
        } else if mph < self.bottleneck_below {
            CongestionLevel::Bottleneck
        } else {
            CongestionLevel::Congestion
        }
    }
}

pub fn label_speed(s: SpeedValue, th: &LabelThresholds) -> CongestionLevel {
    th.label(s.mph())
}

/// Builds one instance per target slot `t` whose window
/// `t-h-n_lags+1 ..= t-h` lies inside the matrix, in ascending `t`.
pub fn build_instances(
    m: &LoopMatrix,
    nb: &NeighborSet,
    spec: &WindowSpec,
    th: &LabelThresholds,
) -> Result<Vec<LabeledInstance>> {
    spec.validate()?;
    let cols = nb
        .sensor_ids
        .iter()
        .map(|id| {
            m.column_index(id)
                .ok_or_else(|| Error::UnknownSensor(id.clone()))
        })
        .collect::<Result<Vec<_>>>()?;
    let target_col = cols[nb.target_position];

    let needed = spec.n_lags + spec.horizon;
    if m.n_rows() < needed {
        return Err(Error::EmptyStream {
            rows: m.n_rows(),
            needed,
        });
    }

    let first_t = needed - 1;
    let mut out = Vec::with_capacity(m.n_rows() - first_t);
    for t in first_t..m.n_rows() {
        let oldest = t - spec.horizon + 1 - spec.n_lags;
        let mut features = Vec::with_capacity(cols.len() * spec.n_lags);
        for &c in &cols {
            features.extend((oldest..oldest + spec.n_lags).map(|r| m.get(r, c)));
        }
        let target_speed = m.get(t, target_col);
        out.push(LabeledInstance {
            features,
            target: th.label(target_speed),
            target_speed,
            target_time: t,
            location_id: nb.target().to_string(),
        });
    }
    Ok(out)
}

/// Splits off the first `n_init` instances for warm-start training.
pub fn split_warm_start<T>(stream: &[T], n_init: usize) -> Result<(&[T], &[T])> {
    if stream.len() <= n_init {
        return Err(Error::InsufficientData {
            len: stream.len(),
            n_init,
        });
    }
    Ok(stream.split_at(n_init))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn meta_route(mileposts: &[f64]) -> Vec<AtrMeta> {
        mileposts
            .iter()
            .enumerate()
            .map(|(i, &mp)| AtrMeta {
                sensor_id: format!("S{i}"),
                route: "I-5".into(),
                milepost: mp,
            })
            .collect()
    }

    /// Cell value encodes (slot, sensor) as slot + sensor / 100.
    fn encoded_matrix(rows: usize, sensors: usize) -> LoopMatrix {
        let ids = (0..sensors).map(|i| format!("S{i}")).collect();
        let ts = (0..rows).map(|r| r.to_string()).collect();
        let speeds = (0..rows)
            .flat_map(|r| (0..sensors).map(move |c| (r % 140) as f64 + c as f64 / 100.0))
            .collect();
        LoopMatrix::new(ts, ids, speeds).unwrap()
    }

    #[test]
    fn parse_small_file() {
        let data = "timestamp,a,b\n0,55.5,60\n1,30,12.25\n2,0,150\n";
        let m = read_loop_csv(data.as_bytes(), Path::new("d.csv")).unwrap();
        assert_eq!((m.n_rows(), m.n_sensors()), (3, 2));
        assert_eq!(m.get(1, 1), 12.25);
        assert_eq!(m.sensor_ids(), &["a".to_string(), "b".to_string()]);
    }

    #[test]
    fn parse_errors_carry_coordinates() {
        let ragged = "timestamp,a,b\n0,1,2\n1,3\n";
        match read_loop_csv(ragged.as_bytes(), Path::new("d.csv")) {
            Err(Error::Format { row, .. }) => assert_eq!(row, 3),
            other => panic!("unexpected {other:?}"),
        }
        let bad = "timestamp,a,b\n0,1,x\n";
        match read_loop_csv(bad.as_bytes(), Path::new("d.csv")) {
            Err(Error::Value { row, column, .. }) => assert_eq!((row, column.as_str()), (2, "b")),
            other => panic!("unexpected {other:?}"),
        }
        let range = "timestamp,a\n0,151\n";
        assert!(matches!(
            read_loop_csv(range.as_bytes(), Path::new("d.csv")),
            Err(Error::Value { .. })
        ));
        let empty_cell = "timestamp,a\n0,\n";
        assert!(read_loop_csv(empty_cell.as_bytes(), Path::new("d.csv")).is_err());
    }

    #[test]
    fn missing_metadata_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let d = dir.path().join("d.csv");
        let mm = dir.path().join("m.csv");
        std::fs::write(&d, "timestamp,a,b\n0,1,2\n").unwrap();
        std::fs::write(&mm, "sensor_id,route,milepost\na,I-5,1.0\n").unwrap();
        assert!(matches!(parse_loop_csv(&d, &mm), Err(Error::MissingMetadata(id)) if id == "b"));
    }

    #[test]
    fn neighbors_middle_of_route() {
        let meta = meta_route(&[0.0, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0]);
        let nb = select_neighbors(&meta, "S4", 4).unwrap();
        let want: Vec<String> = (0..9).map(|i| format!("S{i}")).collect();
        assert_eq!(nb.sensor_ids, want);
        assert_eq!(nb.target(), "S4");
        assert!(!nb.exceeds_span());
    }

    #[test]
    fn neighbors_at_route_start_fail() {
        let meta = meta_route(&[0.0, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0]);
        match select_neighbors(&meta, "S0", 4) {
            Err(Error::InsufficientNeighbors { side, found, .. }) => {
                assert_eq!((side, found), ("upstream", 0))
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(
            select_neighbors(&meta, "S7", 4),
            Err(Error::InsufficientNeighbors {
                side: "downstream",
                ..
            })
        ));
    }

    #[test]
    fn neighbors_match_brute_force() {
        // Shuffled input order, extra sensors on another route and beyond the window.
        let mut meta = meta_route(&[16.0, 0.0, 8.0, 2.0, 14.0, 6.0, 4.0, 12.0, 10.0, 18.0, 20.0]);
        meta.push(AtrMeta {
            sensor_id: "X".into(),
            route: "SR-520".into(),
            milepost: 8.5,
        });
        let nb = select_neighbors(&meta, "S2", 4).unwrap();

        // Oracle: the 4 closest smaller and 4 closest larger mileposts on the route.
        let target_mp = 8.0;
        let same: Vec<&AtrMeta> = meta.iter().filter(|m| m.route == "I-5").collect();
        let mut below: Vec<_> = same.iter().filter(|m| m.milepost < target_mp).collect();
        below.sort_by(|a, b| (target_mp - a.milepost).total_cmp(&(target_mp - b.milepost)));
        let mut above: Vec<_> = same.iter().filter(|m| m.milepost > target_mp).collect();
        above.sort_by(|a, b| (a.milepost - target_mp).total_cmp(&(b.milepost - target_mp)));
        let mut picked: Vec<f64> = below[..4]
            .iter()
            .chain(&above[..4])
            .map(|m| m.milepost)
            .chain([target_mp])
            .collect();
        picked.sort_by(f64::total_cmp);

        let got: Vec<f64> = nb
            .sensor_ids
            .iter()
            .map(|id| meta.iter().find(|m| &m.sensor_id == id).unwrap().milepost)
            .collect();
        assert_eq!(got, picked);
        assert_eq!(got, vec![0.0, 2.0, 4.0, 6.0, 8.0, 10.0, 12.0, 14.0, 16.0]);
        assert!(nb.exceeds_span());
    }

    #[test]
    fn label_examples() {
        let th = LabelThresholds::default();
        let l = |v| label_speed(SpeedValue::new(v).unwrap(), &th);
        assert_eq!(l(55.0), CongestionLevel::FreeFlow);
        assert_eq!(l(30.0), CongestionLevel::Congestion);
        assert_eq!(l(42.0), CongestionLevel::Congestion);
        assert_eq!(l(22.0), CongestionLevel::Congestion);
        assert_eq!(l(21.999), CongestionLevel::Bottleneck);
        assert_eq!(l(42.001), CongestionLevel::FreeFlow);
    }

    #[test]
    fn thresholds_validate() {
        assert!(LabelThresholds::new(42.0, 22.0).is_ok());
        assert!(LabelThresholds::new(22.0, 42.0).is_err());
        assert!(LabelThresholds::new(42.0, 0.0).is_err());
    }

    #[test]
    fn instance_shape_and_count() {
        let m = encoded_matrix(30, 9);
        let meta = meta_route(&[0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0]);
        let nb = select_neighbors(&meta, "S4", 4).unwrap();
        let th = LabelThresholds::default();
        let spec = WindowSpec::default();
        let inst = build_instances(&m, &nb, &spec, &th).unwrap();
        assert_eq!(inst[0].features.len(), 45);
        assert_eq!(inst.len(), 30 - 5 - 1 + 1);
        // sensor-major, lag-minor, oldest first
        assert_eq!(inst[0].features[0], 0.0);
        assert_eq!(inst[0].features[4], 4.0);
        assert_eq!(inst[0].features[5], 0.01);
        assert_eq!(inst[0].target_time, 5);
        assert_eq!(inst[0].target_speed, 5.04);
        assert_eq!(inst[0].features[spec.latest_target_feature(4)], 4.04);
    }

    #[test]
    fn boundary_rows_yield_one_instance() {
        let m = encoded_matrix(8, 9);
        let meta = meta_route(&[0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0]);
        let nb = select_neighbors(&meta, "S4", 4).unwrap();
        let spec = WindowSpec {
            n_lags: 5,
            horizon: 3,
        };
        let inst = build_instances(&m, &nb, &spec, &LabelThresholds::default()).unwrap();
        assert_eq!(inst.len(), 1);
        let short = encoded_matrix(7, 9);
        assert!(matches!(
            build_instances(&short, &nb, &spec, &LabelThresholds::default()),
            Err(Error::EmptyStream { rows: 7, needed: 8 })
        ));
    }

    #[test]
    fn count_formula_matches_enumeration() {
        // The year-long count is an application of the same formula.
        let meta = meta_route(&[0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0]);
        let nb = select_neighbors(&meta, "S4", 4).unwrap();
        for rows in [6usize, 7, 12, 40] {
            let m = encoded_matrix(rows, 9);
            for n_lags in 1..=5 {
                for horizon in 1..=3 {
                    let spec = WindowSpec { n_lags, horizon };
                    let enumerated = (0..rows).filter(|&t| t + 1 >= horizon + n_lags).count();
                    match build_instances(&m, &nb, &spec, &LabelThresholds::default()) {
                        Ok(v) => {
                            assert_eq!(v.len(), enumerated);
                            assert_eq!(v.len(), rows - n_lags - horizon + 1);
                        }
                        Err(_) => assert_eq!(enumerated, 0),
                    }
                }
            }
        }
        // A full year of slots at n_lags=5, h=1.
        assert_eq!(105120 - 5 - 1 + 1, 105115);
    }

    #[test]
    fn warm_start_split() {
        let s: Vec<u32> = (0..2017).collect();
        let (w, t) = split_warm_start(&s, DEFAULT_WARM_START).unwrap();
        assert_eq!((w.len(), t.len()), (2016, 1));
        assert_eq!(t[0], 2016);
        assert!(matches!(
            split_warm_start(&s[..2016], 2016),
            Err(Error::InsufficientData {
                len: 2016,
                n_init: 2016
            })
        ));
        assert_eq!(DEFAULT_WARM_START, 2016);
    }

    proptest! {
        #[test]
        fn no_leakage_past_horizon(n_lags in 1usize..6, horizon in 1usize..12, extra in 0usize..20) {
            let rows = n_lags + horizon + extra;
            let m = encoded_matrix(rows, 9);
            let meta = meta_route(&[0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0]);
            let nb = select_neighbors(&meta, "S4", 4).unwrap();
            let spec = WindowSpec { n_lags, horizon };
            let inst = build_instances(&m, &nb, &spec, &LabelThresholds::default()).unwrap();
            prop_assert_eq!(inst.len(), rows - n_lags - horizon + 1);
            for i in &inst {
                let max_slot = i.features.iter().map(|v| v.floor() as usize).max().unwrap();
                prop_assert_eq!(max_slot, i.target_time - horizon);
            }
        }

        #[test]
        fn label_is_monotone(a in 0.0f64..150.0, b in 0.0f64..150.0) {
            let th = LabelThresholds::default();
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            prop_assert!(th.label(lo) >= th.label(hi));
        }

        #[test]
        fn csv_round_trip(rows in 1usize..20, cols in 1usize..6, seed in any::<u64>()) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let speeds: Vec<f64> = (0..rows * cols).map(|_| rng.random_range(0.0..150.0)).collect();
            let m = LoopMatrix::new(
                (0..rows).map(|r| format!("2015-01-01 {r}")).collect(),
                (0..cols).map(|c| format!("id{c}")).collect(),
                speeds,
            ).unwrap();
            let mut buf = Vec::new();
            m.write_csv(&mut buf).unwrap();
            let back = read_loop_csv(buf.as_slice(), Path::new("mem")).unwrap();
            prop_assert_eq!(back, m);
        }
    }
}
