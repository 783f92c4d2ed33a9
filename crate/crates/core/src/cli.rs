//! `drake` command-line front end.
//!
//! Exit codes: 0 success, 1 runtime or I/O failure, 2 usage or validation
//! error.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::counting_stats::{
    lower_limit, p_at_least_one, p_second_given_first, per_planet_limit, scale_limit_to_galaxy,
    LimitResult, LimitScope,
};
use crate::drake_model::{DrakeScenario, DEFAULT_STARS_GALAXY, DEFAULT_STARS_UNIVERSE};
use crate::mc_engine::{Engine, EngineError};
use crate::numeric::format_sig;
use crate::priors::builtin_registry;
use crate::reporting::{
    emit_curve, emit_summary, paper_points, write_curve_csv, write_file, write_histogram_csv,
    ReportError, Spacing, DEFAULT_CURVE_MAX, DEFAULT_CURVE_MIN, DEFAULT_CURVE_POINTS, SIG_DIGITS,
};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io(_) => 1,
            CliError::Usage(_) | CliError::Validation(_) => 2,
        }
    }
}

impl From<ReportError> for CliError {
    fn from(e: ReportError) -> Self {
        match e {
            ReportError::Range(_) => CliError::Usage(e.to_string()),
            _ => CliError::Io(e.to_string()),
        }
    }
}

impl From<EngineError> for CliError {
    fn from(e: EngineError) -> Self {
        match e {
            EngineError::ThreadPool(_) => CliError::Io(e.to_string()),
            _ => CliError::Validation(e.to_string()),
        }
    }
}

fn stdout_err(e: std::io::Error) -> CliError {
    CliError::Io(format!("<stdout>: {e}"))
}

/// Where `sample` writes its outputs. Relative paths are resolved against
/// the directory holding the scenario file.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Outputs {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub summary: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub histogram: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub curve: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub raw_samples: Option<PathBuf>,
}

impl Outputs {
    fn entries(&self) -> [(&'static str, Option<&PathBuf>); 4] {
        [
            ("summary", self.summary.as_ref()),
            ("histogram", self.histogram.as_ref()),
            ("curve", self.curve.as_ref()),
            ("raw_samples", self.raw_samples.as_ref()),
        ]
    }

    fn resolve(&mut self, base: &Path) {
        for p in [
            &mut self.summary,
            &mut self.histogram,
            &mut self.curve,
            &mut self.raw_samples,
        ]
        .into_iter()
        .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
    }
}

/// On-disk experiment definition, JSON with `schema_version` 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub schema_version: u32,
    pub scenario: DrakeScenario,
    /// Confidence levels of the lower limits to report.
    #[serde(default)]
    pub limits: Vec<f64>,
    #[serde(default)]
    pub outputs: Outputs,
}

impl ScenarioFile {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let file: ScenarioFile = serde_json::from_str(text)
            .map_err(|e| CliError::Validation(format!("scenario file: {e}")))?;
        file.validate()?;
        Ok(file)
    }

    /// Reads and validates `path`. Relative output paths are rebased onto the
    /// file's directory.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        let mut file = Self::parse(&text)
            .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        file.outputs.resolve(base);
        Ok(file)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(CliError::Validation(format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        self.scenario
            .validate(builtin_registry())
            .map_err(|e| CliError::Validation(e.to_string()))?;
        if let Some(c) = self.limits.iter().find(|c| !(**c > 0.0 && **c < 1.0)) {
            return Err(CliError::Validation(format!(
                "limit confidence {c} outside (0, 1)"
            )));
        }
        for (name, path) in self.outputs.entries() {
            if path.is_some_and(|p| p.as_os_str().is_empty()) {
                return Err(CliError::Validation(format!("outputs.{name}: empty path")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Parser)]
#[command(name = "drake", version, about = "Drake-equation counting statistics")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Lower limits implied by one observed civilization.
    Limit(LimitArgs),
    /// Occurrence probability for an expectation value.
    Prob(ProbArgs),
    /// Run the Monte Carlo described by a scenario file.
    Sample(SampleArgs),
    /// Tabulate P(second civilization | first) as CSV.
    Curve(CurveArgs),
}

#[derive(Debug, Args)]
pub struct LimitArgs {
    /// Confidence level in (0, 1)
    #[arg(long, allow_negative_numbers = true)]
    pub confidence: f64,
    #[arg(long, default_value_t = DEFAULT_STARS_GALAXY, allow_negative_numbers = true)]
    pub stars_galaxy: f64,
    #[arg(long, default_value_t = DEFAULT_STARS_UNIVERSE, allow_negative_numbers = true)]
    pub stars_universe: f64,
    /// Habitable-zone planets in the observable universe; adds a per-planet limit.
    #[arg(long, allow_negative_numbers = true)]
    pub habitable: Option<f64>,
}

#[derive(Debug, Args)]
pub struct ProbArgs {
    /// Expected number of civilizations.
    #[arg(long = "n", allow_negative_numbers = true)]
    pub n_civ: f64,
    /// Probability of a second civilization given that one exists.
    #[arg(long)]
    pub given_one: bool,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    /// Scenario file (JSON)
    pub scenario: PathBuf,
    /// Override the scenario's sample count.
    #[arg(long)]
    pub samples: Option<u64>,
    /// Override the scenario's seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads (results do not depend on this).
    #[arg(long)]
    pub threads: Option<usize>,
    /// Summary JSON destination
    #[arg(long)]
    pub summary: Option<PathBuf>,
    /// Histogram CSV destination
    #[arg(long)]
    pub histogram: Option<PathBuf>,
    /// Second-civilization curve CSV destination
    #[arg(long)]
    pub curve: Option<PathBuf>,
    /// Raw log10(n_g) samples, one per line
    #[arg(long)]
    pub raw: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CurveArgs {
    #[arg(long, default_value_t = DEFAULT_CURVE_MIN, allow_negative_numbers = true)]
    pub min: f64,
    #[arg(long, default_value_t = DEFAULT_CURVE_MAX, allow_negative_numbers = true)]
    pub max: f64,
    #[arg(long, default_value_t = DEFAULT_CURVE_POINTS)]
    pub points: usize,
    #[arg(long, value_enum, default_value_t = Spacing::Log)]
    pub spacing: Spacing,
    /// CSV destination; standard output when omitted.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    /// Also print the five reference points.
    #[arg(long)]
    pub paper_points: bool,
}

fn percent(c: f64) -> String {
    format!("{}%", format_sig(c * 100.0, SIG_DIGITS))
}

fn sig(x: f64) -> String {
    format_sig(x, SIG_DIGITS)
}

pub fn cmd_limit(args: &LimitArgs, out: &mut dyn Write) -> Result<Vec<LimitResult>, CliError> {
    let universe = lower_limit(args.confidence).map_err(|e| CliError::Usage(e.to_string()))?;
    let galaxy = scale_limit_to_galaxy(universe, args.stars_galaxy, args.stars_universe)
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let per_planet = args
        .habitable
        .map(|n| per_planet_limit(args.confidence, n))
        .transpose()
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let cl = percent(args.confidence);
    let w = |out: &mut dyn Write| -> std::io::Result<()> {
        writeln!(
            out,
            "n_o > {} at {cl} C.L. (observable universe, {} stars)",
            sig(universe.n_lower),
            sig(args.stars_universe)
        )?;
        writeln!(
            out,
            "n_g > {} at {cl} C.L. (galaxy, {} stars)",
            sig(galaxy.n_lower),
            sig(args.stars_galaxy)
        )?;
        if let (Some(f), Some(n)) = (per_planet, args.habitable) {
            writeln!(
                out,
                "f > {} at {cl} C.L. (per habitable planet, N_H = {})",
                sig(f),
                sig(n)
            )?;
        }
        Ok(())
    };
    w(out).map_err(stdout_err)?;
    Ok(vec![universe, galaxy])
}

pub fn cmd_prob(args: &ProbArgs, out: &mut dyn Write) -> Result<f64, CliError> {
    let n = args.n_civ;
    let (label, p) = if args.given_one {
        ("P(n_obs >= 2 | n, n_obs >= 1)", p_second_given_first(n))
    } else {
        ("P(n_obs >= 1 | n)", p_at_least_one(n))
    };
    let p = p.map_err(|e| CliError::Usage(e.to_string()))?;
    writeln!(out, "{label} = {} for n = {}", sig(p), sig(n)).map_err(stdout_err)?;
    Ok(p)
}

pub fn cmd_sample(args: &SampleArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let mut file = ScenarioFile::load(&args.scenario)?;
    if let Some(n) = args.samples {
        file.scenario.n_samples = n;
    }
    if let Some(s) = args.seed {
        file.scenario.seed = s;
    }
    let overrides = [
        (&mut file.outputs.summary, &args.summary),
        (&mut file.outputs.histogram, &args.histogram),
        (&mut file.outputs.curve, &args.curve),
        (&mut file.outputs.raw_samples, &args.raw),
    ];
    for (slot, flag) in overrides {
        if flag.is_some() {
            slot.clone_from(flag);
        }
    }
    file.validate()?;

    let run = Engine::new(builtin_registry())
        .with_threads(args.threads)
        .run(&file.scenario)?;
    let summary = &run.summary;

    let mut limits = Vec::with_capacity(2 * file.limits.len());
    for &c in &file.limits {
        let u = lower_limit(c).map_err(|e| CliError::Validation(e.to_string()))?;
        let g = scale_limit_to_galaxy(u, file.scenario.stars_galaxy, file.scenario.stars_universe)
            .map_err(|e| CliError::Validation(e.to_string()))?;
        limits.extend([u, g]);
    }

    let outputs = &file.outputs;
    if let Some(path) = &outputs.summary {
        emit_summary(summary, &limits, Some(&file.scenario)).write(path)?;
    }
    if let Some(path) = &outputs.histogram {
        write_file(path, |w| write_histogram_csv(summary, w))?;
    }
    if let Some(path) = &outputs.curve {
        let pts = emit_curve(
            DEFAULT_CURVE_MIN,
            DEFAULT_CURVE_MAX,
            DEFAULT_CURVE_POINTS,
            Spacing::Log,
        )?;
        write_file(path, |w| write_curve_csv(&pts, w))?;
    }
    if let Some(path) = &outputs.raw_samples {
        write_file(path, |w| run.samples.write_raw(w))?;
    }

    let print = |out: &mut dyn Write| -> std::io::Result<()> {
        writeln!(out, "{} samples, seed {}", summary.n_samples, summary.seed)?;
        write!(out, "{}", summary.table())?;
        for l in &limits {
            writeln!(
                out,
                "{} > {} at {} C.L.",
                match l.scope {
                    LimitScope::Universe => "n_o",
                    LimitScope::Galaxy => "n_g",
                    LimitScope::Custom => "n",
                },
                sig(l.n_lower),
                percent(l.confidence)
            )?;
        }
        Ok(())
    };
    print(out).map_err(stdout_err)
}

pub fn cmd_curve(args: &CurveArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let pts = emit_curve(args.min, args.max, args.points, args.spacing)?;
    match &args.output {
        Some(path) => write_file(path, |w| write_curve_csv(&pts, w))?,
        None => write_curve_csv(&pts, &mut *out).map_err(stdout_err)?,
    }
    if args.paper_points {
        for p in paper_points() {
            writeln!(out, "n = {}: {}", sig(p.n_civ), sig(p.p_second)).map_err(stdout_err)?;
        }
    }
    Ok(())
}

/// Parses `argv` and runs the chosen subcommand; returns the exit code.
pub fn run<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                write!(err, "{text}")
            } else {
                write!(out, "{text}")
            };
            return code;
        }
    };
    let result = match &cli.command {
        Command::Limit(a) => cmd_limit(a, out).map(|_| ()),
        Command::Prob(a) => cmd_prob(a, out).map(|_| ()),
        Command::Sample(a) => cmd_sample(a, out),
        Command::Curve(a) => cmd_curve(a, out),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn call(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = run(
            std::iter::once("drake").chain(args.iter().copied()),
            &mut out,
            &mut err,
        );
        (
            code,
            String::from_utf8(out).unwrap(),
            String::from_utf8(err).unwrap(),
        )
    }

    #[test]
    fn limit_prints_both_scopes() {
        let (code, out, _) = call(&["limit", "--confidence", "0.95"]);
        assert_eq!(code, 0);
        assert!(out.contains("n_o > 0.0512933 at 95% C.L."), "{out}");
        assert!(out.contains("n_g > 7.69399e-13 at 95% C.L."), "{out}");
        assert!(!out.contains("f >"));
    }

    #[test]
    fn limit_domain_error_exits_2() {
        let (code, _, err) = call(&["limit", "--confidence", "1.5"]);
        assert_eq!(code, 2);
        assert!(err.contains("confidence"), "{err}");
        let (code, _, _) = call(&["limit", "--confidence", "abc"]);
        assert_eq!(code, 2);
    }

    #[test]
    fn prob_variants() {
        let (code, out, _) = call(&["prob", "--n", "1"]);
        assert_eq!(code, 0);
        assert!(out.contains("= 0.632121"), "{out}");
        let (_, out, _) = call(&["prob", "--n", "1", "--given-one"]);
        assert!(out.contains("= 0.418023"), "{out}");
        let (_, out, _) = call(&["prob", "--n", "0", "--given-one"]);
        assert!(out.contains("= 0 for"), "{out}");
        let (code, _, _) = call(&["prob", "--n", "-1"]);
        assert_eq!(code, 2);
    }

    #[test]
    fn curve_log_needs_positive_min() {
        let (code, _, err) = call(&["curve", "--min", "0", "--spacing", "log"]);
        assert_eq!(code, 2);
        assert!(err.contains("log spacing"), "{err}");
    }

    #[test]
    fn help_exits_zero() {
        let (code, out, _) = call(&["--help"]);
        assert_eq!(code, 0);
        assert!(out.contains("sample"));
    }

    #[test]
    fn scenario_file_checks() {
        let base = ScenarioFile {
            schema_version: 1,
            scenario: DrakeScenario::table1(10, 1),
            limits: vec![0.95],
            outputs: Outputs::default(),
        };
        assert!(base.validate().is_ok());
        let mut v2 = base.clone();
        v2.schema_version = 2;
        assert!(matches!(v2.validate(), Err(CliError::Validation(_))));
        let mut bad_limit = base.clone();
        bad_limit.limits.push(1.0);
        assert!(bad_limit.validate().is_err());
        let mut empty = base.clone();
        empty.outputs.summary = Some(PathBuf::new());
        assert!(empty.validate().is_err());
        let json = serde_json::to_string(&base).unwrap();
        assert_eq!(ScenarioFile::parse(&json).unwrap(), base);
        assert!(ScenarioFile::parse(r#"{"schema_version":1}"#).is_err());
    }
}
