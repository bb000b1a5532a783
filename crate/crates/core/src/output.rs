//! Run artifacts: BER tables as CSV, log-scale SVG plots and a JSON
//! manifest.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::config::{parse_config, ExperimentConfig};
use crate::error::{Error, Result};
use crate::sim::{sort_records, BerRecord, SweepResult};

pub const CSV_HEADER: &str = "scheme,user,stream_class,stream_idx,snr_db,bits,errors,ber,ci_low,ci_high";

/// Records as CSV text, sorted, one row per record.
pub fn records_to_csv(records: &[BerRecord]) -> String {
    let mut rows = records.to_vec();
    sort_records(&mut rows);
    let mut out = String::with_capacity(64 * (rows.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in &rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            r.scheme, r.user, r.stream_class, r.stream_idx, r.snr_db, r.bits, r.errors, r.ber, r.ci_low, r.ci_high
        );
    }
    out
}

/// Seconds since the Unix epoch.
pub fn unix_time() -> f64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    /// The resolved configuration as TOML.
    pub config: String,
    pub tool_version: String,
    pub seed: u64,
    pub started_unix: f64,
    pub finished_unix: f64,
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn new(config: &ExperimentConfig, started_unix: f64) -> Result<Self> {
        Ok(Self {
            config: config.to_toml()?,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            seed: config.seed,
            started_unix,
            finished_unix: started_unix,
            outputs: Vec::new(),
        })
    }

    pub fn echoed_config(&self) -> Result<ExperimentConfig> {
        parse_config(&self.config)
    }
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|source| Error::Io { path: path.display().to_string(), source })
}

fn stem_for(rho: f64, multiple: bool) -> String {
    if multiple {
        format!("ber_rho{rho}")
    } else {
        "ber".to_string()
    }
}

/// Writes one CSV (and optionally one SVG) per sweep plus `manifest.json`
/// into `out_dir`, returning every path written.
pub fn emit_outputs(results: &[SweepResult], manifest: &mut RunManifest, out_dir: &Path, plot: bool) -> Result<Vec<PathBuf>> {
    if results.iter().all(|r| r.records.is_empty()) {
        return Err(Error::Argument("no records to write".into()));
    }
    fs::create_dir_all(out_dir).map_err(|source| Error::Io { path: out_dir.display().to_string(), source })?;
    let multiple = results.len() > 1;
    let mut written = Vec::new();
    for sweep in results {
        let stem = stem_for(sweep.csi_rho, multiple);
        let csv = out_dir.join(format!("{stem}.csv"));
        write_file(&csv, &records_to_csv(&sweep.records))?;
        written.push(csv);
        if plot {
            let svg = out_dir.join(format!("{stem}.svg"));
            let title = format!("BER vs SNR (csi_rho = {})", sweep.csi_rho);
            write_file(&svg, &render_svg(&sweep.records, &title))?;
            written.push(svg);
        }
    }
    manifest.finished_unix = unix_time();
    manifest.outputs = written
        .iter()
        .map(|p| p.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default())
        .collect();
    let path = out_dir.join("manifest.json");
    let json = serde_json::to_string_pretty(manifest).map_err(|e| Error::Argument(format!("manifest: {e}")))?;
    write_file(&path, &json)?;
    written.push(path);
    Ok(written)
}

const PALETTE: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"];

/// BER against SNR on a log axis, one polyline per
/// `(scheme, user, stream class, stream group)`. Zero-BER points are left
/// out.
pub fn render_svg(records: &[BerRecord], title: &str) -> String {
    let mut rows = records.to_vec();
    sort_records(&mut rows);
    let mut series: Vec<(String, Vec<(f64, f64)>)> = Vec::new();
    for r in &rows {
        let name = format!("{} u{} {} #{}", r.scheme, r.user, r.stream_class, r.stream_idx);
        let idx = match series.iter().position(|(n, _)| *n == name) {
            Some(i) => i,
            None => {
                series.push((name, Vec::new()));
                series.len() - 1
            }
        };
        if r.ber > 0.0 {
            series[idx].1.push((r.snr_db, r.ber));
        }
    }
    let (w, h) = (760.0, 480.0);
    let (left, right, top, bottom) = (70.0, 230.0, 40.0, 50.0);
    let pw = w - left - right;
    let ph = h - top - bottom;
    let snr_min = rows.iter().map(|r| r.snr_db).fold(f64::INFINITY, f64::min);
    let snr_max = rows.iter().map(|r| r.snr_db).fold(f64::NEG_INFINITY, f64::max);
    let (snr_min, snr_max) = if snr_min < snr_max { (snr_min, snr_max) } else { (snr_min - 1.0, snr_min + 1.0) };
    let min_ber = series.iter().flat_map(|(_, p)| p.iter().map(|q| q.1)).fold(1.0, f64::min);
    let decades = (-min_ber.log10()).ceil().clamp(1.0, 12.0);
    let x = |snr: f64| left + (snr - snr_min) / (snr_max - snr_min) * pw;
    let y = |ber: f64| top + (-ber.log10() / decades) * ph;

    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" font-family="sans-serif" font-size="12">"#);
    let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="22" text-anchor="middle" font-size="14">{title}</text>"#, left + pw / 2.0);
    for d in 0..=decades as i32 {
        let yy = top + d as f64 / decades * ph;
        let _ = writeln!(s, r##"<line x1="{left}" y1="{yy:.1}" x2="{:.1}" y2="{yy:.1}" stroke="#ddd"/>"##, left + pw);
        let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" text-anchor="end">1e-{d}</text>"#, left - 6.0, yy + 4.0);
    }
    let ticks: Vec<f64> = {
        let mut v: Vec<f64> = rows.iter().map(|r| r.snr_db).collect();
        v.sort_by(f64::total_cmp);
        v.dedup();
        v
    };
    for t in &ticks {
        let xx = x(*t);
        let _ = writeln!(s, r#"<text x="{xx:.1}" y="{:.1}" text-anchor="middle">{t}</text>"#, top + ph + 18.0);
    }
    let _ = writeln!(s, r#"<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#);
    let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">SNR (dB)</text>"#, left + pw / 2.0, h - 12.0);
    let _ = writeln!(s, r#"<text x="18" y="{:.1}" text-anchor="middle" transform="rotate(-90 18 {:.1})">BER</text>"#, top + ph / 2.0, top + ph / 2.0);
    for (i, (name, points)) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let dash = if i / PALETTE.len() % 2 == 1 { r#" stroke-dasharray="5 3""# } else { "" };
        if !points.is_empty() {
            let path: Vec<String> = points.iter().map(|&(a, b)| format!("{:.1},{:.1}", x(a), y(b))).collect();
            let _ = writeln!(s, r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"{dash}/>"#, path.join(" "));
            for &(a, b) in points {
                let _ = writeln!(s, r#"<circle cx="{:.1}" cy="{:.1}" r="2.5" fill="{color}"/>"#, x(a), y(b));
            }
        }
        let ly = top + 14.0 * i as f64 + 6.0;
        let lx = left + pw + 12.0;
        let _ = writeln!(s, r#"<line x1="{lx:.1}" y1="{ly:.1}" x2="{:.1}" y2="{ly:.1}" stroke="{color}" stroke-width="2"{dash}/>"#, lx + 20.0);
        let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}">{name}</text>"#, lx + 26.0, ly + 4.0);
    }
    s.push_str("</svg>\n");
    s
}
