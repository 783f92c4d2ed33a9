//! Poisson and binomial counting inference for a single observed
//! civilization.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numeric::one_minus_exp_neg;

/// Below this expectation the conditional second-event probability uses its
/// series expansion.
pub const SERIES_SWITCH: f64 = 1e-4;

const ROOT_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CountingError {
    #[error("expectation value must be non-negative (got {0})")]
    NegativeExpectation(f64),
    #[error("confidence level must lie strictly between 0 and 1 (got {0})")]
    Confidence(f64),
    #[error("at least one planet class is required")]
    NoClasses,
    #[error("planet class: {0}")]
    PlanetClass(String),
    #[error("star counts must satisfy stars_universe >= stars_galaxy > 0")]
    StarCounts,
    #[error("n_habitable must be positive (got {0})")]
    Habitable(f64),
    #[error("root solve did not bracket target probability {0}")]
    NoBracket(f64),
    #[error("closed-form limit {closed} disagrees with root solve {solved}")]
    RootMismatch { closed: f64, solved: f64 },
}

fn check_expectation(n: f64) -> Result<(), CountingError> {
    if n >= 0.0 {
        Ok(())
    } else {
        Err(CountingError::NegativeExpectation(n))
    }
}

/// `P(n_obs >= 1 | n) = 1 - e^(-n)`.
pub fn p_at_least_one(n_civ: f64) -> Result<f64, CountingError> {
    check_expectation(n_civ)?;
    Ok(one_minus_exp_neg(n_civ))
}

/// Same as [`p_at_least_one`] for an expectation given by its natural log.
pub fn p_at_least_one_ln(ln_n_civ: f64) -> f64 {
    one_minus_exp_neg(ln_n_civ.exp())
}

/// Exact binomial form `1 - (1 - p)^N`.
pub fn p_at_least_one_exact(p_life: f64, n_habitable: u64) -> f64 {
    one_minus_exp_neg(-(n_habitable as f64) * (-p_life).ln_1p())
}

/// `P(n_obs >= 2 | n)`.
pub fn p_at_least_two(n_civ: f64) -> Result<f64, CountingError> {
    check_expectation(n_civ)?;
    // 1 - (1 + n) e^(-n)
    Ok(one_minus_exp_neg(n_civ) - n_civ * (-n_civ).exp())
}

/// One class of habitable planets.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlanetClass {
    pub n_habitable: f64,
    pub p_life: f64,
}

impl PlanetClass {
    pub fn new(n_habitable: f64, p_life: f64) -> Result<Self, CountingError> {
        if !(n_habitable.is_finite() && n_habitable > 0.0) {
            return Err(CountingError::PlanetClass(format!(
                "n_habitable must be positive (got {n_habitable})"
            )));
        }
        if !(0.0..=1.0).contains(&p_life) {
            return Err(CountingError::PlanetClass(format!(
                "p_life must lie in [0, 1] (got {p_life})"
            )));
        }
        Ok(PlanetClass {
            n_habitable,
            p_life,
        })
    }

    pub fn expectation(&self) -> f64 {
        self.n_habitable * self.p_life
    }
}

/// Occurrence probability over several planet classes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassesProbability {
    /// `1 - prod_i (1 - p_i)^N_i`
    pub exact: f64,
    /// `1 - exp(-sum_i N_i p_i)`
    pub poisson: f64,
    /// `sum_i N_i p_i`
    pub expectation: f64,
}

pub fn p_at_least_one_classes(
    classes: &[PlanetClass],
) -> Result<ClassesProbability, CountingError> {
    if classes.is_empty() {
        return Err(CountingError::NoClasses);
    }
    let ln_none: f64 = classes
        .iter()
        .map(|c| c.n_habitable * (-c.p_life).ln_1p())
        .sum();
    let expectation: f64 = classes.iter().map(PlanetClass::expectation).sum();
    Ok(ClassesProbability {
        exact: one_minus_exp_neg(-ln_none),
        poisson: one_minus_exp_neg(expectation),
        expectation,
    })
}

/// `P(n_obs >= 2 | n, n_obs >= 1)`: the chance of a second civilization
/// given that one exists.
pub fn p_second_given_first(n_civ: f64) -> Result<f64, CountingError> {
    check_expectation(n_civ)?;
    if n_civ == 0.0 {
        return Ok(0.0);
    }
    if n_civ < SERIES_SWITCH {
        // n/2 - n^2/12; the n^3 coefficient vanishes.
        return Ok(n_civ / 2.0 - n_civ * n_civ / 12.0);
    }
    if n_civ.is_infinite() {
        return Ok(1.0);
    }
    Ok(p_at_least_two(n_civ)? / one_minus_exp_neg(n_civ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LimitScope {
    Universe,
    Galaxy,
    Custom,
}

/// A lower limit on an expectation value at a given confidence level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LimitResult {
    pub confidence: f64,
    pub n_lower: f64,
    pub scope: LimitScope,
    /// Ratio applied to the universe-level limit to reach this scope.
    pub star_ratio: f64,
}

/// Bisection for the expectation `n` at which the increasing function
/// `prob(n)` reaches `target`.
pub fn solve_expectation<F>(prob: F, target: f64) -> Result<f64, CountingError>
where
    F: Fn(f64) -> f64,
{
    let mut lo = 0.0_f64;
    let mut hi = 1.0_f64;
    while prob(hi) < target {
        hi *= 2.0;
        if hi > 1e6 {
            return Err(CountingError::NoBracket(target));
        }
    }
    if prob(lo) > target {
        return Err(CountingError::NoBracket(target));
    }
    while hi - lo > ROOT_TOLERANCE * hi.max(1e-300) {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if prob(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Smallest expectation not excluded by observing at least one event:
/// `1 - e^(-n) = 1 - confidence`, i.e. `n = -ln(confidence)`.
///
/// The closed form is cross-checked against a bisection on
/// [`p_at_least_one`].
pub fn lower_limit(confidence: f64) -> Result<LimitResult, CountingError> {
    if !(confidence > 0.0 && confidence < 1.0) {
        return Err(CountingError::Confidence(confidence));
    }
    let closed = -confidence.ln();
    let solved = solve_expectation(one_minus_exp_neg, 1.0 - confidence)?;
    // The root is conditioned by 1/confidence: an ulp in the target moves it
    // by eps/confidence.
    let tolerance = (ROOT_TOLERANCE * closed.max(1.0)).max(4.0 * f64::EPSILON / confidence);
    if (closed - solved).abs() > tolerance {
        return Err(CountingError::RootMismatch { closed, solved });
    }
    Ok(LimitResult {
        confidence,
        n_lower: closed,
        scope: LimitScope::Universe,
        star_ratio: 1.0,
    })
}

/// Rescales a universe-level limit to the Galaxy by the star-count ratio.
pub fn scale_limit_to_galaxy(
    limit: LimitResult,
    stars_galaxy: f64,
    stars_universe: f64,
) -> Result<LimitResult, CountingError> {
    if !(stars_galaxy > 0.0 && stars_universe >= stars_galaxy && stars_universe.is_finite()) {
        return Err(CountingError::StarCounts);
    }
    let ratio = stars_galaxy / stars_universe;
    Ok(LimitResult {
        confidence: limit.confidence,
        n_lower: limit.n_lower * ratio,
        scope: LimitScope::Galaxy,
        star_ratio: limit.star_ratio * ratio,
    })
}

/// Lower bound on the per-habitable-planet probability.
pub fn per_planet_limit(confidence: f64, n_habitable: f64) -> Result<f64, CountingError> {
    if !(n_habitable.is_finite() && n_habitable > 0.0) {
        return Err(CountingError::Habitable(n_habitable));
    }
    Ok(lower_limit(confidence)?.n_lower / n_habitable)
}
