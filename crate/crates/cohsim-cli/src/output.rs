//! Plot-ready emitters: one CSV and one JSON-lines file per command, plus
//! the resolved config echo. Columns are fixed-order and rows are written in
//! deterministic grid-then-record order, so identical runs produce identical
//! bytes.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use cohsim::circuit::EnsembleResult;
use serde::Serialize;

use crate::config::{RunFile, SweepPoint};

pub const SWEEP_COLUMNS: &str = "l,delta_x,p_y,p_m,p_e,p_R,r_d,probe,step,t,index,mean,stderr,n";

/// Render a float with enough digits to round-trip.
fn fmt_f64(x: f64) -> String {
    if x == x.trunc() && x.abs() < 1e15 {
        format!("{x:.1}")
    } else {
        format!("{x}")
    }
}

#[derive(Serialize)]
struct JsonRecord<'a> {
    l: usize,
    delta_x: f64,
    p_y: f64,
    p_m: f64,
    p_e: f64,
    #[serde(rename = "p_R")]
    p_r: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    r_d: Option<f64>,
    probe: &'a str,
    step: u64,
    t: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    index: Option<usize>,
    mean: f64,
    stderr: f64,
    n: usize,
}

/// Accumulates the three output files for a sweep-shaped command.
pub struct SweepWriter {
    stem: PathBuf,
    csv: String,
    jsonl: String,
}

impl SweepWriter {
    pub fn new(stem: &Path, echo: &RunFile) -> Result<Self> {
        let mut csv = String::new();
        writeln!(csv, "{SWEEP_COLUMNS}").unwrap();
        let mut jsonl = String::new();
        let config_line = serde_json::json!({ "type": "config", "config": echo });
        writeln!(jsonl, "{config_line}").unwrap();
        Ok(Self { stem: stem.to_path_buf(), csv, jsonl })
    }

    pub fn push_point(&mut self, point: &SweepPoint, ensemble: &EnsembleResult) {
        for rec in &ensemble.records {
            let cfg = &point.config;
            writeln!(
                self.csv,
                "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
                point.l,
                fmt_f64(point.delta_x),
                fmt_f64(cfg.p_y),
                fmt_f64(cfg.p_m),
                fmt_f64(cfg.p_e),
                fmt_f64(cfg.p_r),
                point.r_d.map(fmt_f64).unwrap_or_default(),
                rec.probe.label(),
                rec.step,
                fmt_f64(rec.t),
                rec.index.map(|i| i.to_string()).unwrap_or_default(),
                fmt_f64(rec.mean),
                fmt_f64(rec.stderr),
                rec.n
            )
            .unwrap();
            let json = JsonRecord {
                l: point.l,
                delta_x: point.delta_x,
                p_y: cfg.p_y,
                p_m: cfg.p_m,
                p_e: cfg.p_e,
                p_r: cfg.p_r,
                r_d: point.r_d,
                probe: rec.probe.label(),
                step: rec.step,
                t: rec.t,
                index: rec.index,
                mean: rec.mean,
                stderr: rec.stderr,
                n: rec.n,
            };
            let mut line = serde_json::json!({ "type": "record" });
            line.as_object_mut().unwrap().insert(
                "record".into(),
                serde_json::to_value(&json).expect("serializable record"),
            );
            writeln!(self.jsonl, "{line}").unwrap();
        }
    }

    /// Write `<stem>.csv`, `<stem>.jsonl` and `<stem>.config.toml`.
    pub fn finish(self, echo: &RunFile) -> Result<(PathBuf, PathBuf, PathBuf)> {
        let csv_path = self.stem.with_extension("csv");
        let jsonl_path = self.stem.with_extension("jsonl");
        let config_path = self.stem.with_extension("config.toml");
        std::fs::write(&csv_path, &self.csv)
            .with_context(|| format!("writing {}", csv_path.display()))?;
        std::fs::write(&jsonl_path, &self.jsonl)
            .with_context(|| format!("writing {}", jsonl_path.display()))?;
        std::fs::write(&config_path, echo.to_toml()?)
            .with_context(|| format!("writing {}", config_path.display()))?;
        Ok((csv_path, jsonl_path, config_path))
    }
}

/// Parse a sweep CSV back into collapse curve points for one probe,
/// optionally restricted to a single sample time.
pub fn parse_sweep_csv(
    text: &str,
    probe: &str,
    t_filter: Option<f64>,
) -> Result<Vec<cohsim::collapse::CurvePoint>> {
    let mut lines = text.lines();
    let header = lines.next().context("empty data file")?;
    let columns: Vec<&str> = header.split(',').collect();
    let col = |name: &str| {
        columns
            .iter()
            .position(|&c| c == name)
            .with_context(|| format!("missing column {name:?} in {header:?}"))
    };
    let (l_col, x_col, probe_col, t_col, mean_col, err_col) = (
        col("l")?,
        col("delta_x")?,
        col("probe")?,
        col("t")?,
        col("mean")?,
        col("stderr")?,
    );
    let mut points = Vec::new();
    for (lineno, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        let field = |i: usize| -> Result<&str> {
            fields.get(i).copied().with_context(|| format!("short row at line {}", lineno + 2))
        };
        if field(probe_col)? != probe {
            continue;
        }
        let t: f64 = field(t_col)?.parse().context("bad t")?;
        if let Some(want) = t_filter {
            if (t - want).abs() > 1e-9 {
                continue;
            }
        }
        points.push(cohsim::collapse::CurvePoint {
            l: field(l_col)?.parse().context("bad l")?,
            x: field(x_col)?.parse().context("bad delta_x")?,
            value: field(mean_col)?.parse().context("bad mean")?,
            stderr: field(err_col)?.parse().context("bad stderr")?,
        });
    }
    Ok(points)
}

/// Distinct `t` values present for a probe in a sweep CSV.
pub fn sample_times(text: &str, probe: &str) -> Result<Vec<f64>> {
    let mut lines = text.lines();
    let header = lines.next().context("empty data file")?;
    let columns: Vec<&str> = header.split(',').collect();
    let probe_col =
        columns.iter().position(|&c| c == "probe").context("no probe column")?;
    let t_col = columns.iter().position(|&c| c == "t").context("no t column")?;
    let mut seen: Vec<f64> = Vec::new();
    for line in lines {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.get(probe_col) == Some(&probe) {
            if let Some(Ok(t)) = fields.get(t_col).map(|s| s.parse::<f64>()) {
                if !seen.iter().any(|&s| (s - t).abs() < 1e-9) {
                    seen.push(t);
                }
            }
        }
    }
    seen.sort_by(f64::total_cmp);
    Ok(seen)
}
