//! Chunked, deterministic Monte Carlo over a [`DrakeScenario`].
//!
//! The sample index space is cut into chunks of [`CHUNK_SIZE`] draws. Chunk
//! `k` draws from [`substream`]`(seed, k)`, and chunk results are merged in
//! chunk order, so the output does not depend on the number of workers.

use std::io::{self, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::counting_stats::{lower_limit, scale_limit_to_galaxy, CountingError, LimitResult};
use crate::drake_model::{DrakeModel, DrakeScenario, ScenarioError};
use crate::numeric::{format_sig, nonfinite};
use crate::priors::{builtin_registry, PriorRegistry};
use crate::rng::substream;

pub const CHUNK_SIZE: u64 = 1 << 16;

#[derive(Debug, Error)]
pub enum EngineError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Counting(#[from] CountingError),
    #[error("thread pool: {0}")]
    ThreadPool(String),
}

/// Binning of `log10(n_g)`. Values below `log10_min` (including zero
/// products) land in the underflow bin, values at or above `log10_max` in
/// the overflow bin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistogramSpec {
    pub log10_min: f64,
    pub log10_max: f64,
    pub n_bins: usize,
}

impl Default for HistogramSpec {
    fn default() -> Self {
        HistogramSpec {
            log10_min: -120.0,
            log10_max: 20.0,
            n_bins: 280,
        }
    }
}

impl HistogramSpec {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.log10_min.is_finite() && self.log10_max.is_finite()) {
            return Err("log10_min and log10_max must be finite".into());
        }
        if self.log10_min >= self.log10_max {
            return Err(format!(
                "requires log10_min < log10_max (got {} and {})",
                self.log10_min, self.log10_max
            ));
        }
        if self.n_bins == 0 {
            return Err("n_bins must be at least 1".into());
        }
        Ok(())
    }

    pub fn bin_width(&self) -> f64 {
        (self.log10_max - self.log10_min) / self.n_bins as f64
    }

    /// `[low, high)` edges of regular bin `i`.
    pub fn edges(&self, i: usize) -> (f64, f64) {
        let w = self.bin_width();
        let low = self.log10_min + w * i as f64;
        let high = if i + 1 == self.n_bins {
            self.log10_max
        } else {
            self.log10_min + w * (i + 1) as f64
        };
        (low, high)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub spec: HistogramSpec,
    pub counts: Vec<u64>,
    pub underflow: u64,
    pub overflow: u64,
}

impl Histogram {
    pub fn new(spec: HistogramSpec) -> Self {
        Histogram {
            spec,
            counts: vec![0; spec.n_bins],
            underflow: 0,
            overflow: 0,
        }
    }

    pub fn fill(&mut self, log10: f64) {
        let s = &self.spec;
        if log10 < s.log10_min {
            self.underflow += 1;
        } else if log10 >= s.log10_max {
            self.overflow += 1;
        } else {
            let i = ((log10 - s.log10_min) / s.bin_width()) as usize;
            let mut i = i.min(s.n_bins - 1);
            // Float division can land one bin off at an edge.
            while i > 0 && log10 < s.edges(i).0 {
                i -= 1;
            }
            while i + 1 < s.n_bins && log10 >= s.edges(i).1 {
                i += 1;
            }
            self.counts[i] += 1;
        }
    }

    pub fn merge(&mut self, other: &Histogram) {
        debug_assert_eq!(self.spec, other.spec);
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        self.underflow += other.underflow;
        self.overflow += other.overflow;
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum::<u64>() + self.underflow + self.overflow
    }
}

/// Cut points in `log10(n_g)`; all comparisons are strict `<`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    /// `n_g < 1`
    pub alone_galaxy_log10: f64,
    /// `n_o < 1`, i.e. `n_g < stars_galaxy / stars_universe`
    pub alone_universe_log10: f64,
    /// `n_g` below the Galaxy-scaled lower limit
    pub limit_log10: f64,
}

impl Thresholds {
    pub fn for_scenario(scenario: &DrakeScenario) -> Result<(Self, LimitResult), CountingError> {
        let limit = scale_limit_to_galaxy(
            lower_limit(scenario.truncation_confidence)?,
            scenario.stars_galaxy,
            scenario.stars_universe,
        )?;
        let thresholds = Thresholds {
            alone_galaxy_log10: 0.0,
            alone_universe_log10: -scenario.star_ratio().log10(),
            limit_log10: limit.n_lower.log10(),
        };
        Ok((thresholds, limit))
    }
}

/// Raw threshold tallies. `*_above_limit` count samples that are alone but
/// not below the limit.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ThresholdCounts {
    pub alone_galaxy: u64,
    pub alone_universe: u64,
    pub below_limit: u64,
    pub alone_galaxy_above_limit: u64,
    pub alone_universe_above_limit: u64,
}

impl ThresholdCounts {
    fn record(&mut self, x: f64, t: &Thresholds) {
        let below = x < t.limit_log10;
        if below {
            self.below_limit += 1;
        }
        if x < t.alone_galaxy_log10 {
            self.alone_galaxy += 1;
            if !below {
                self.alone_galaxy_above_limit += 1;
            }
        }
        if x < t.alone_universe_log10 {
            self.alone_universe += 1;
            if !below {
                self.alone_universe_above_limit += 1;
            }
        }
    }

    fn merge(&mut self, o: &ThresholdCounts) {
        self.alone_galaxy += o.alone_galaxy;
        self.alone_universe += o.alone_universe;
        self.below_limit += o.below_limit;
        self.alone_galaxy_above_limit += o.alone_galaxy_above_limit;
        self.alone_universe_above_limit += o.alone_universe_above_limit;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuantilePoint {
    pub q: f64,
    #[serde(with = "nonfinite")]
    pub log10_n_g: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub n_samples: u64,
    pub seed: u64,
    pub histogram: Histogram,
    pub thresholds: Thresholds,
    /// Galaxy-scaled limit used for truncation.
    pub limit: LimitResult,
    pub counts: ThresholdCounts,
    pub frac_alone_galaxy: f64,
    pub frac_alone_universe: f64,
    pub frac_below_limit: f64,
    pub frac_alone_galaxy_truncated: f64,
    pub frac_alone_universe_truncated: f64,
    pub quantiles: Vec<QuantilePoint>,
}

impl RunSummary {
    /// Four-fraction comparison block, six significant digits.
    pub fn table(&self) -> String {
        let f = |x: f64| format_sig(x, 6);
        format!(
            "{:<24}{:>14}{:>22}\n{:<24}{:>14}{:>22}\n{:<24}{:>14}{:>22}\nfraction below limit ({} C.L., n_g < {}): {}\n",
            "",
            "galaxy",
            "observable universe",
            "P(n_civ < 1)",
            f(self.frac_alone_galaxy),
            f(self.frac_alone_universe),
            "with lower limit",
            f(self.frac_alone_galaxy_truncated),
            f(self.frac_alone_universe_truncated),
            f(self.limit.confidence),
            f(self.limit.n_lower),
            f(self.frac_below_limit),
        )
    }
}

/// `log10(n_g)` of every draw, in sample-index order.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleStream {
    log10: Vec<f64>,
}

impl SampleStream {
    pub fn new(log10: Vec<f64>) -> Self {
        SampleStream { log10 }
    }

    pub fn values(&self) -> &[f64] {
        &self.log10
    }

    pub fn len(&self) -> usize {
        self.log10.len()
    }

    pub fn is_empty(&self) -> bool {
        self.log10.is_empty()
    }

    pub fn count_below(&self, log10_threshold: f64) -> u64 {
        self.log10.iter().filter(|&&x| x < log10_threshold).count() as u64
    }

    /// Exact fraction of draws with `log10(n_g) < log10_threshold`.
    pub fn fraction_below(&self, log10_threshold: f64) -> f64 {
        if self.log10.is_empty() {
            return 0.0;
        }
        self.count_below(log10_threshold) as f64 / self.log10.len() as f64
    }

    /// Linear-interpolated empirical quantiles (Hyndman-Fan type 7).
    pub fn quantiles(&self, levels: &[f64]) -> Vec<QuantilePoint> {
        let mut sorted = self.log10.clone();
        sorted.sort_by(f64::total_cmp);
        levels
            .iter()
            .map(|&q| QuantilePoint {
                q,
                log10_n_g: sorted_quantile(&sorted, q),
            })
            .collect()
    }

    /// One value per line, shortest round-trip representation.
    pub fn write_raw<W: Write>(&self, mut out: W) -> io::Result<()> {
        for x in &self.log10 {
            writeln!(out, "{x}")?;
        }
        out.flush()
    }
}

fn sorted_quantile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    let (a, b) = (sorted[lo], sorted[hi]);
    if lo == hi || a == b || !a.is_finite() {
        return a;
    }
    a + (h - lo as f64) * (b - a)
}

#[derive(Debug)]
struct ChunkResult {
    samples: Vec<f64>,
    histogram: Histogram,
    counts: ThresholdCounts,
}

fn run_chunk(
    model: &DrakeModel,
    scenario: &DrakeScenario,
    thresholds: &Thresholds,
    chunk: u64,
) -> ChunkResult {
    let start = chunk * CHUNK_SIZE;
    let len = CHUNK_SIZE.min(scenario.n_samples - start) as usize;
    let mut rng = substream(scenario.seed, chunk);
    let mut histogram = Histogram::new(scenario.histogram);
    let mut counts = ThresholdCounts::default();
    let mut samples = Vec::with_capacity(len);
    for _ in 0..len {
        let x = model.draw_n_civ(&mut rng).log10();
        histogram.fill(x);
        counts.record(x, thresholds);
        samples.push(x);
    }
    ChunkResult {
        samples,
        histogram,
        counts,
    }
}

/// A finished run: the summary plus the full sample stream.
#[derive(Debug, Clone)]
pub struct Run {
    pub summary: RunSummary,
    pub samples: SampleStream,
}

#[derive(Debug, Clone, Copy)]
pub struct Engine<'r> {
    registry: &'r PriorRegistry,
    threads: Option<usize>,
}

impl Default for Engine<'static> {
    fn default() -> Self {
        Engine::new(builtin_registry())
    }
}

impl<'r> Engine<'r> {
    pub fn new(registry: &'r PriorRegistry) -> Self {
        Engine {
            registry,
            threads: None,
        }
    }

    /// Worker count; `None` uses the global rayon pool. Does not affect
    /// results.
    pub fn with_threads(mut self, threads: Option<usize>) -> Self {
        self.threads = threads;
        self
    }

    pub fn run(&self, scenario: &DrakeScenario) -> Result<Run, EngineError> {
        let model = scenario.compile(self.registry)?;
        let (thresholds, limit) = Thresholds::for_scenario(scenario)?;
        let n_chunks = scenario.n_samples.div_ceil(CHUNK_SIZE);
        let work = || -> Vec<ChunkResult> {
            (0..n_chunks)
                .into_par_iter()
                .map(|k| run_chunk(&model, scenario, &thresholds, k))
                .collect()
        };
        let chunks = match self.threads {
            None => work(),
            Some(n) => rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| EngineError::ThreadPool(e.to_string()))?
                .install(work),
        };

        let mut histogram = Histogram::new(scenario.histogram);
        let mut counts = ThresholdCounts::default();
        let mut samples = Vec::with_capacity(scenario.n_samples as usize);
        for chunk in chunks {
            histogram.merge(&chunk.histogram);
            counts.merge(&chunk.counts);
            samples.extend_from_slice(&chunk.samples);
        }
        let samples = SampleStream::new(samples);
        let summary = summarize(scenario, histogram, thresholds, limit, counts, &samples);
        Ok(Run { summary, samples })
    }
}

fn summarize(
    scenario: &DrakeScenario,
    histogram: Histogram,
    thresholds: Thresholds,
    limit: LimitResult,
    counts: ThresholdCounts,
    samples: &SampleStream,
) -> RunSummary {
    let n = scenario.n_samples as f64;
    let surviving = scenario.n_samples - counts.below_limit;
    let truncated = |above: u64| {
        if surviving == 0 {
            0.0
        } else {
            above as f64 / surviving as f64
        }
    };
    RunSummary {
        n_samples: scenario.n_samples,
        seed: scenario.seed,
        histogram,
        thresholds,
        limit,
        counts,
        frac_alone_galaxy: counts.alone_galaxy as f64 / n,
        frac_alone_universe: counts.alone_universe as f64 / n,
        frac_below_limit: counts.below_limit as f64 / n,
        frac_alone_galaxy_truncated: truncated(counts.alone_galaxy_above_limit),
        frac_alone_universe_truncated: truncated(counts.alone_universe_above_limit),
        quantiles: samples.quantiles(&scenario.quantiles),
    }
}

/// Runs `scenario` with the built-in prior kinds.
pub fn run(scenario: &DrakeScenario) -> Result<RunSummary, EngineError> {
    Ok(Engine::default().run(scenario)?.summary)
}
