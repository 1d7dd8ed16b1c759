//! Summaries of `results.csv`: a Markdown UMF1 table and per-class
//! F1-versus-horizon SVG charts.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::io::Read;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::eval::{Mode, ResultRow, RESULT_COLUMNS, SUMMARY_CLASS};
use crate::experiment::write_atomic;
use crate::registry::MethodId;
use crate::types::CongestionLevel;

pub const TABLE_FILE: &str = "umf1.md";

/// Reads and checks every row; errors name the 1-based data row.
pub fn read_results<R: Read>(reader: R, origin: &Path) -> Result<Vec<ResultRow>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(reader);
    let bad = |row, message: String| Error::Format {
        path: origin.to_path_buf(),
        row,
        message,
    };
    let header = rdr.headers().map_err(|e| bad(0, e.to_string()))?.clone();
    if header.iter().ne(RESULT_COLUMNS) {
        return Err(bad(
            0,
            format!("header must be {}", RESULT_COLUMNS.join(",")),
        ));
    }
    let mut rows = Vec::new();
    for (i, rec) in rdr.deserialize::<ResultRow>().enumerate() {
        let row = i + 1;
        let r = rec.map_err(|e| bad(row, e.to_string()))?;
        r.method
            .parse::<MethodId>()
            .map_err(|e| bad(row, e.to_string()))?;
        r.mode
            .parse::<Mode>()
            .map_err(|e| bad(row, e.to_string()))?;
        if r.class != SUMMARY_CLASS {
            r.class
                .parse::<CongestionLevel>()
                .map_err(|e| bad(row, e.to_string()))?;
        }
        for (name, v) in [
            ("precision", r.precision),
            ("recall", r.recall),
            ("f1", r.f1),
            ("umf1", r.umf1),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(bad(row, format!("{name} {v} outside [0, 1]")));
            }
        }
        if r.horizon == 0 {
            return Err(bad(row, "horizon must be >= 1".into()));
        }
        rows.push(r);
    }
    Ok(rows)
}

pub fn load_results(path: &Path) -> Result<Vec<ResultRow>> {
    read_results(std::fs::File::open(path)?, path)
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Methods in roster order, as they occur in `rows`.
fn methods_of(rows: &[ResultRow]) -> Vec<String> {
    let present: BTreeSet<MethodId> = rows.iter().filter_map(|r| r.method.parse().ok()).collect();
    present.into_iter().map(|m| m.to_string()).collect()
}

/// One table per horizon; rows are methods, columns are offline and online
/// UMF1 per location, averaged over seeds.
pub fn umf1_table(rows: &[ResultRow]) -> String {
    let mut cells: BTreeMap<(usize, &str, &str, &str), Vec<f64>> = BTreeMap::new();
    for r in rows.iter().filter(|r| r.class == SUMMARY_CLASS) {
        cells
            .entry((
                r.horizon,
                r.method.as_str(),
                r.location.as_str(),
                r.mode.as_str(),
            ))
            .or_default()
            .push(r.umf1);
    }
    let horizons: BTreeSet<usize> = rows.iter().map(|r| r.horizon).collect();
    let locations: BTreeSet<&str> = rows.iter().map(|r| r.location.as_str()).collect();
    let modes = [Mode::Offline, Mode::Online];

    let mut out = String::from("# UMF1\n");
    for h in horizons {
        let methods: Vec<String> = methods_of(rows)
            .into_iter()
            .filter(|m| cells.keys().any(|k| k.0 == h && k.1 == m))
            .collect();
        let _ = write!(out, "\n## h = {h}\n\n| Method |");
        for loc in &locations {
            for mode in modes {
                let _ = write!(out, " {loc} {mode} |");
            }
        }
        out.push_str("\n|---|");
        out.push_str(&"---:|".repeat(locations.len() * modes.len()));
        out.push('\n');
        for m in &methods {
            let _ = write!(out, "| {m} |");
            for loc in &locations {
                for mode in modes {
                    match cells.get(&(h, m.as_str(), *loc, mode.as_str())) {
                        Some(v) => {
                            let _ = write!(out, " {:.3} |", mean(v));
                        }
                        None => out.push_str(" - |"),
                    }
                }
            }
            out.push('\n');
        }
    }
    out
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
        .replace('\'', "&apos;")
}

fn file_stem(s: &str) -> String {
    s.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '_' {
                c
            } else {
                '_'
            }
        })
        .collect()
}

const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf",
];

/// F1 against horizon for one location and class; solid lines are online,
/// dashed offline.
pub fn f1_chart(rows: &[ResultRow], location: &str, class: CongestionLevel) -> String {
    let (w, h) = (640.0, 400.0);
    let (left, right, top, bottom) = (60.0, 180.0, 40.0, 50.0);
    let (pw, ph) = (w - left - right, h - top - bottom);

    let mine: Vec<&ResultRow> = rows
        .iter()
        .filter(|r| r.location == location && r.class == class.as_str())
        .collect();
    let horizons: Vec<usize> = mine
        .iter()
        .map(|r| r.horizon)
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let x_of = |hz: usize| {
        let (lo, hi) = (horizons[0] as f64, horizons[horizons.len() - 1] as f64);
        if hi > lo {
            left + (hz as f64 - lo) / (hi - lo) * pw
        } else {
            left + pw / 2.0
        }
    };
    let y_of = |f1: f64| top + (1.0 - f1) * ph;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#
    );
    let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="24" text-anchor="middle" font-family="sans-serif" font-size="15">{} - {} F1</text>"#,
        left + pw / 2.0,
        xml_escape(location),
        class
    );
    for i in 0..=4 {
        let v = i as f64 / 4.0;
        let y = y_of(v);
        let _ = writeln!(
            s,
            r##"<line x1="{left}" y1="{y}" x2="{}" y2="{y}" stroke="#ddd"/><text x="{}" y="{}" text-anchor="end" font-family="sans-serif" font-size="11">{v:.2}</text>"##,
            left + pw,
            left - 6.0,
            y + 4.0
        );
    }
    for &hz in &horizons {
        let x = x_of(hz);
        let _ = writeln!(
            s,
            r#"<text x="{x}" y="{}" text-anchor="middle" font-family="sans-serif" font-size="11">{hz}</text>"#,
            top + ph + 16.0
        );
    }
    let _ = writeln!(
        s,
        r##"<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="#444"/>"##
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle" font-family="sans-serif" font-size="12">horizon (slots)</text>"#,
        left + pw / 2.0,
        h - 12.0
    );
    let _ = writeln!(
        s,
        r#"<text x="16" y="{}" text-anchor="middle" font-family="sans-serif" font-size="12" transform="rotate(-90 16 {})">F1</text>"#,
        top + ph / 2.0,
        top + ph / 2.0
    );

    let mut legend_y = top + 6.0;
    for (mi, method) in methods_of(&mine.iter().map(|r| (*r).clone()).collect::<Vec<_>>())
        .iter()
        .enumerate()
    {
        let color = PALETTE[mi % PALETTE.len()];
        for mode in [Mode::Offline, Mode::Online] {
            let mut by_h: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
            for r in mine
                .iter()
                .filter(|r| &r.method == method && r.mode == mode.as_str())
            {
                by_h.entry(r.horizon).or_default().push(r.f1);
            }
            if by_h.is_empty() {
                continue;
            }
            let dash = if mode == Mode::Offline {
                r#" stroke-dasharray="6 4""#
            } else {
                ""
            };
            let points: Vec<String> = by_h
                .iter()
                .map(|(&hz, v)| format!("{:.2},{:.2}", x_of(hz), y_of(mean(v))))
                .collect();
            let _ = writeln!(
                s,
                r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="2"{dash}/>"#,
                points.join(" ")
            );
            for p in &points {
                let (x, y) = p.split_once(',').expect("formatted pair");
                let _ = writeln!(s, r#"<circle cx="{x}" cy="{y}" r="3" fill="{color}"/>"#);
            }
            let lx = left + pw + 14.0;
            let _ = writeln!(
                s,
                r#"<line x1="{lx}" y1="{legend_y}" x2="{}" y2="{legend_y}" stroke="{color}" stroke-width="2"{dash}/><text x="{}" y="{}" font-family="sans-serif" font-size="11">{} {mode}</text>"#,
                lx + 24.0,
                lx + 30.0,
                legend_y + 4.0,
                xml_escape(method)
            );
            legend_y += 16.0;
        }
    }
    s.push_str("</svg>\n");
    s
}

/// Writes the Markdown table and one chart per (location, class); returns
/// the written paths.
pub fn write_report(rows: &[ResultRow], out_dir: &Path) -> Result<Vec<PathBuf>> {
    if rows.is_empty() {
        return Err(Error::InvalidInput("results contain no rows".into()));
    }
    std::fs::create_dir_all(out_dir)?;
    let mut written = Vec::new();
    let table = out_dir.join(TABLE_FILE);
    write_atomic(&table, umf1_table(rows).as_bytes())?;
    written.push(table);
    let locations: BTreeSet<&str> = rows.iter().map(|r| r.location.as_str()).collect();
    for loc in locations {
        for class in CongestionLevel::ALL {
            let path = out_dir.join(format!("f1_{}_{}.svg", file_stem(loc), class));
            write_atomic(&path, f1_chart(rows, loc, class).as_bytes())?;
            written.push(path);
        }
    }
    Ok(written)
}
