//! Run summaries as JSON; histogram and conditional-probability curve as CSV.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::counting_stats::{p_second_given_first, LimitResult};
use crate::drake_model::DrakeScenario;
use crate::mc_engine::RunSummary;
use crate::numeric::format_sig;

pub const TOOL_NAME: &str = "drake";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");
pub const SIG_DIGITS: usize = 6;

/// Expectation values at which the conditional probability is usually quoted.
pub const PAPER_GRID: [f64; 5] = [0.051, 0.5, 1.0, 2.0, 4.0];

pub const DEFAULT_CURVE_MIN: f64 = 1e-3;
pub const DEFAULT_CURVE_MAX: f64 = 1e2;
pub const DEFAULT_CURVE_POINTS: usize = 101;

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("invalid curve range: {0}")]
    Range(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("summary document: {0}")]
    Json(#[from] serde_json::Error),
}

impl ReportError {
    pub fn io(path: &Path, source: io::Error) -> Self {
        ReportError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Spacing {
    Linear,
    Log,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub n_civ: f64,
    pub p_second: f64,
}

impl CurvePoint {
    pub fn at(n_civ: f64) -> Self {
        CurvePoint {
            n_civ,
            p_second: p_second_given_first(n_civ).expect("grid points are non-negative"),
        }
    }
}

/// Conditional second-civilization probability on an inclusive grid.
pub fn emit_curve(
    n_min: f64,
    n_max: f64,
    n_points: usize,
    spacing: Spacing,
) -> Result<Vec<CurvePoint>, ReportError> {
    if !(n_min.is_finite() && n_max.is_finite()) {
        return Err(ReportError::Range("bounds must be finite".into()));
    }
    if n_min < 0.0 {
        return Err(ReportError::Range(format!(
            "min must be >= 0 (got {n_min})"
        )));
    }
    if n_min >= n_max {
        return Err(ReportError::Range(format!(
            "requires min < max (got {n_min} and {n_max})"
        )));
    }
    if n_points < 2 {
        return Err(ReportError::Range("at least 2 points are required".into()));
    }
    if spacing == Spacing::Log && n_min <= 0.0 {
        return Err(ReportError::Range("log spacing requires min > 0".into()));
    }
    let last = (n_points - 1) as f64;
    let points = (0..n_points)
        .map(|i| {
            let t = i as f64 / last;
            let n = if i == 0 {
                n_min
            } else if i == n_points - 1 {
                n_max
            } else {
                match spacing {
                    Spacing::Linear => n_min + t * (n_max - n_min),
                    Spacing::Log => (n_min.ln() + t * (n_max.ln() - n_min.ln())).exp(),
                }
            };
            CurvePoint::at(n)
        })
        .collect();
    Ok(points)
}

pub fn paper_points() -> Vec<CurvePoint> {
    PAPER_GRID.iter().map(|&n| CurvePoint::at(n)).collect()
}

pub fn write_curve_csv<W: Write>(points: &[CurvePoint], mut out: W) -> io::Result<()> {
    writeln!(out, "n_civ,p_second_given_first")?;
    for p in points {
        writeln!(
            out,
            "{},{}",
            format_sig(p.n_civ, SIG_DIGITS),
            format_sig(p.p_second, SIG_DIGITS)
        )?;
    }
    out.flush()
}

/// Human-readable copies of the headline fractions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisplayFractions {
    pub frac_alone_galaxy: String,
    pub frac_alone_universe: String,
    pub frac_below_limit: String,
    pub frac_alone_galaxy_truncated: String,
    pub frac_alone_universe_truncated: String,
}

impl DisplayFractions {
    fn of(s: &RunSummary) -> Self {
        let f = |x| format_sig(x, SIG_DIGITS);
        DisplayFractions {
            frac_alone_galaxy: f(s.frac_alone_galaxy),
            frac_alone_universe: f(s.frac_alone_universe),
            frac_below_limit: f(s.frac_below_limit),
            frac_alone_galaxy_truncated: f(s.frac_alone_galaxy_truncated),
            frac_alone_universe_truncated: f(s.frac_alone_universe_truncated),
        }
    }
}

/// The JSON summary of a run. `generated_at` (Unix seconds) is the only
/// field that differs between identical runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryDocument {
    pub tool: String,
    pub version: String,
    pub generated_at: u64,
    pub scenario: Option<DrakeScenario>,
    pub limits: Vec<LimitResult>,
    pub summary: RunSummary,
    pub display: DisplayFractions,
}

impl SummaryDocument {
    pub fn to_json(&self) -> Result<String, ReportError> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Self, ReportError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn write(&self, path: &Path) -> Result<(), ReportError> {
        let json = self.to_json()?;
        std::fs::write(path, json).map_err(|e| ReportError::io(path, e))
    }
}

pub fn emit_summary(
    summary: &RunSummary,
    limits: &[LimitResult],
    scenario: Option<&DrakeScenario>,
) -> SummaryDocument {
    let generated_at = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    SummaryDocument {
        tool: TOOL_NAME.to_string(),
        version: TOOL_VERSION.to_string(),
        generated_at,
        scenario: scenario.cloned(),
        limits: limits.to_vec(),
        summary: summary.clone(),
        display: DisplayFractions::of(summary),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HistogramRow {
    pub bin_low_log10: f64,
    pub bin_high_log10: f64,
    pub count: u64,
    pub density: f64,
}

/// Underflow row, one row per bin, overflow row. Density is
/// `count / (n_samples * bin_width)`; the unbounded rows carry density 0.
pub fn emit_histogram(summary: &RunSummary) -> Vec<HistogramRow> {
    let h = &summary.histogram;
    let n = summary.n_samples.max(1) as f64;
    let width = h.spec.bin_width();
    let mut rows = Vec::with_capacity(h.counts.len() + 2);
    rows.push(HistogramRow {
        bin_low_log10: f64::NEG_INFINITY,
        bin_high_log10: h.spec.log10_min,
        count: h.underflow,
        density: 0.0,
    });
    for (i, &count) in h.counts.iter().enumerate() {
        let (low, high) = h.spec.edges(i);
        rows.push(HistogramRow {
            bin_low_log10: low,
            bin_high_log10: high,
            count,
            density: count as f64 / (n * width),
        });
    }
    rows.push(HistogramRow {
        bin_low_log10: h.spec.log10_max,
        bin_high_log10: f64::INFINITY,
        count: h.overflow,
        density: 0.0,
    });
    rows
}

pub fn write_histogram_csv<W: Write>(summary: &RunSummary, mut out: W) -> io::Result<()> {
    writeln!(out, "bin_low_log10,bin_high_log10,count,density")?;
    for r in emit_histogram(summary) {
        writeln!(
            out,
            "{},{},{},{}",
            format_sig(r.bin_low_log10, SIG_DIGITS),
            format_sig(r.bin_high_log10, SIG_DIGITS),
            r.count,
            format_sig(r.density, SIG_DIGITS)
        )?;
    }
    out.flush()
}

/// Creates `path` and hands a buffered writer to `f`, attaching the path to
/// any I/O error.
pub fn write_file<F>(path: &Path, f: F) -> Result<(), ReportError>
where
    F: FnOnce(&mut BufWriter<File>) -> io::Result<()>,
{
    let file = File::create(path).map_err(|e| ReportError::io(path, e))?;
    let mut w = BufWriter::new(file);
    f(&mut w).map_err(|e| ReportError::io(path, e))
}
