//! Composition of factor draws into an expected number of civilizations.

use std::collections::HashSet;

use rand::RngCore;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mc_engine::HistogramSpec;
use crate::numeric::ln_to_log10;
use crate::priors::{Prior, PriorError, PriorRegistry, PriorSpec};

pub const DEFAULT_STARS_GALAXY: f64 = 3e11;
pub const DEFAULT_STARS_UNIVERSE: f64 = 2e22;
pub const DEFAULT_TRUNCATION_CONFIDENCE: f64 = 0.95;
pub const DEFAULT_QUANTILES: [f64; 9] = [0.01, 0.05, 0.1, 0.25, 0.5, 0.75, 0.9, 0.95, 0.99];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScenarioError {
    #[error("scenario has no factors")]
    NoFactors,
    #[error("duplicate factor name `{0}`")]
    DuplicateFactor(String),
    #[error("factor `{factor}`: {source}")]
    Prior {
        factor: String,
        #[source]
        source: PriorError,
    },
    #[error("factor `{factor}` is declared a fraction but its prior support [{lo}, {hi}] is not within [0, 1]")]
    NotAFraction { factor: String, lo: f64, hi: f64 },
    #[error("star counts must satisfy stars_universe >= stars_galaxy > 0 (got galaxy = {galaxy}, universe = {universe})")]
    StarCounts { galaxy: f64, universe: f64 },
    #[error("n_samples must be at least 1")]
    NoSamples,
    #[error("histogram: {0}")]
    Histogram(String),
    #[error("truncation_confidence must lie in (0, 1) (got {0})")]
    Confidence(f64),
    #[error("quantile level {0} outside [0, 1]")]
    Quantile(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Factor {
    pub name: String,
    pub prior: PriorSpec,
    #[serde(default)]
    pub is_fraction: bool,
}

impl Factor {
    pub fn new(name: &str, prior: PriorSpec, is_fraction: bool) -> Self {
        Factor {
            name: name.to_string(),
            prior,
            is_fraction,
        }
    }
}

fn default_stars_galaxy() -> f64 {
    DEFAULT_STARS_GALAXY
}

fn default_stars_universe() -> f64 {
    DEFAULT_STARS_UNIVERSE
}

fn default_truncation_confidence() -> f64 {
    DEFAULT_TRUNCATION_CONFIDENCE
}

fn default_quantiles() -> Vec<f64> {
    DEFAULT_QUANTILES.to_vec()
}

/// Full experiment definition: ordered factor priors, star counts and run
/// configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DrakeScenario {
    pub factors: Vec<Factor>,
    #[serde(default = "default_stars_galaxy")]
    pub stars_galaxy: f64,
    #[serde(default = "default_stars_universe")]
    pub stars_universe: f64,
    pub n_samples: u64,
    pub seed: u64,
    #[serde(default)]
    pub histogram: HistogramSpec,
    /// Confidence level of the lower limit used to truncate the sample.
    #[serde(default = "default_truncation_confidence")]
    pub truncation_confidence: f64,
    #[serde(default = "default_quantiles")]
    pub quantiles: Vec<f64>,
}

impl DrakeScenario {
    pub fn new(factors: Vec<Factor>, n_samples: u64, seed: u64) -> Self {
        DrakeScenario {
            factors,
            stars_galaxy: DEFAULT_STARS_GALAXY,
            stars_universe: DEFAULT_STARS_UNIVERSE,
            n_samples,
            seed,
            histogram: HistogramSpec::default(),
            truncation_confidence: DEFAULT_TRUNCATION_CONFIDENCE,
            quantiles: default_quantiles(),
        }
    }

    /// The seven-factor rate form with the literature priors: star formation
    /// rate, planet fraction, habitable planets per system, life (rate
    /// model), intelligence, communication, and signalling lifetime.
    pub fn table1(n_samples: u64, seed: u64) -> Self {
        let factors = vec![
            Factor::new("R_star", PriorSpec::log_uniform(1.0, 100.0), false),
            Factor::new("f_p", PriorSpec::log_uniform(0.1, 1.0), true),
            Factor::new("n_e", PriorSpec::log_uniform(0.1, 1.0), false),
            Factor::new(
                "f_l",
                PriorSpec::life_rate(PriorSpec::log_normal(1.0, 50.0)),
                true,
            ),
            Factor::new("f_i", PriorSpec::log_uniform(0.001, 1.0), true),
            Factor::new("f_c", PriorSpec::log_uniform(0.01, 1.0), true),
            Factor::new("L", PriorSpec::log_uniform(1e2, 1e10), false),
        ];
        Self::new(factors, n_samples, seed)
    }

    /// `stars_universe / stars_galaxy`.
    pub fn star_ratio(&self) -> f64 {
        self.stars_universe / self.stars_galaxy
    }

    /// Rescales a Galaxy expectation to the observable universe, assuming the
    /// same per-planet probability.
    pub fn scale_to_universe(&self, n_g: f64) -> f64 {
        n_g * self.star_ratio()
    }

    pub fn validate(&self, registry: &PriorRegistry) -> Result<(), ScenarioError> {
        self.compile(registry).map(|_| ())
    }

    pub fn compile(&self, registry: &PriorRegistry) -> Result<DrakeModel, ScenarioError> {
        if self.factors.is_empty() {
            return Err(ScenarioError::NoFactors);
        }
        let mut seen = HashSet::new();
        let mut priors = Vec::with_capacity(self.factors.len());
        for factor in &self.factors {
            if !seen.insert(factor.name.as_str()) {
                return Err(ScenarioError::DuplicateFactor(factor.name.clone()));
            }
            let prior = registry
                .build(&factor.prior)
                .map_err(|source| ScenarioError::Prior {
                    factor: factor.name.clone(),
                    source,
                })?;
            if factor.is_fraction {
                let (lo, hi) = prior.support();
                if lo < 0.0 || hi > 1.0 {
                    return Err(ScenarioError::NotAFraction {
                        factor: factor.name.clone(),
                        lo,
                        hi,
                    });
                }
            }
            priors.push((factor.name.clone(), prior));
        }
        let (galaxy, universe) = (self.stars_galaxy, self.stars_universe);
        if !(galaxy.is_finite() && universe.is_finite() && galaxy > 0.0 && universe >= galaxy) {
            return Err(ScenarioError::StarCounts { galaxy, universe });
        }
        if self.n_samples == 0 {
            return Err(ScenarioError::NoSamples);
        }
        self.histogram
            .validate()
            .map_err(ScenarioError::Histogram)?;
        let c = self.truncation_confidence;
        if !(c > 0.0 && c < 1.0) {
            return Err(ScenarioError::Confidence(c));
        }
        if let Some(&q) = self.quantiles.iter().find(|q| !(0.0..=1.0).contains(*q)) {
            return Err(ScenarioError::Quantile(q));
        }
        Ok(DrakeModel { factors: priors })
    }
}

/// An expected count carried as its natural logarithm. Zero is represented
/// by `ln = -inf`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct NCiv {
    ln: f64,
}

impl NCiv {
    pub const ZERO: NCiv = NCiv {
        ln: f64::NEG_INFINITY,
    };

    pub fn from_ln(ln: f64) -> Self {
        NCiv { ln }
    }

    pub fn from_linear(value: f64) -> Self {
        NCiv { ln: value.ln() }
    }

    pub fn ln(self) -> f64 {
        self.ln
    }

    pub fn log10(self) -> f64 {
        ln_to_log10(self.ln)
    }

    pub fn is_zero(self) -> bool {
        self.ln == f64::NEG_INFINITY
    }

    /// Linear value; underflows to zero below the double range.
    pub fn linear(self) -> f64 {
        self.ln.exp()
    }

    /// Linear value when it is a normal double (or exactly zero).
    pub fn linear_checked(self) -> Option<f64> {
        let v = self.ln.exp();
        (self.is_zero() || v.is_normal()).then_some(v)
    }

    pub fn scaled(self, factor: f64) -> Self {
        NCiv {
            ln: self.ln + factor.ln(),
        }
    }
}

/// A compiled scenario: validated priors in factor order.
#[derive(Debug)]
pub struct DrakeModel {
    factors: Vec<(String, Box<dyn Prior>)>,
}

impl DrakeModel {
    pub fn factor_names(&self) -> impl Iterator<Item = &str> {
        self.factors.iter().map(|(n, _)| n.as_str())
    }

    /// Product of one draw per factor, summed in log space.
    pub fn draw_n_civ(&self, rng: &mut dyn RngCore) -> NCiv {
        let mut ln = 0.0;
        for (_, prior) in &self.factors {
            ln += prior.sample_ln(rng);
        }
        // A zero draw contributes -inf; every other ln draw is finite.
        NCiv::from_ln(ln)
    }

    /// One linear draw per factor, consuming the stream exactly like
    /// [`DrakeModel::draw_n_civ`].
    pub fn draw_factors(&self, rng: &mut dyn RngCore) -> Vec<f64> {
        self.factors.iter().map(|(_, p)| p.sample(rng)).collect()
    }
}

/// Count form: habitable-zone planets times per-planet probability.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpectationModel {
    pub n_habitable: f64,
    pub p_life: f64,
}

impl ExpectationModel {
    pub fn new(n_habitable: f64, p_life: f64) -> Result<Self, String> {
        if !(n_habitable.is_finite() && n_habitable > 0.0) {
            return Err(format!("n_habitable must be positive (got {n_habitable})"));
        }
        if !(0.0..=1.0).contains(&p_life) {
            return Err(format!("p_life must lie in [0, 1] (got {p_life})"));
        }
        Ok(ExpectationModel {
            n_habitable,
            p_life,
        })
    }

    pub fn expectation(&self) -> f64 {
        self.n_habitable * self.p_life
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::priors::builtin_registry;
    use crate::rng::substream;

    fn fixed_scenario(values: &[f64]) -> DrakeScenario {
        let factors = values
            .iter()
            .enumerate()
            .map(|(i, &v)| Factor::new(&format!("x{i}"), PriorSpec::fixed(v), false))
            .collect();
        DrakeScenario::new(factors, 1, 0)
    }

    #[test]
    fn identity_product() {
        let model = fixed_scenario(&[1.0; 7])
            .compile(builtin_registry())
            .unwrap();
        let n = model.draw_n_civ(&mut substream(0, 0));
        assert_eq!(n.ln(), 0.0);
        assert_eq!(n.linear(), 1.0);
    }

    #[test]
    fn fixed_product_matches_direct_multiplication() {
        let values = [10.0, 0.5, 0.5, 1e-40, 0.01, 0.1, 1e4];
        let exact: f64 = values.iter().product();
        // 10 * 0.5 * 0.5 * 1e-40 * 0.01 * 0.1 * 1e4
        assert!((exact / 2.5e-39 - 1.0).abs() < 1e-14);
        let model = fixed_scenario(&values).compile(builtin_registry()).unwrap();
        let n = model.draw_n_civ(&mut substream(0, 0));
        assert!((n.linear() / exact - 1.0).abs() < 1e-12, "{}", n.linear());
    }

    #[test]
    fn zero_factor_gives_zero_product() {
        let model = fixed_scenario(&[5.0, 0.0, 3.0])
            .compile(builtin_registry())
            .unwrap();
        let n = model.draw_n_civ(&mut substream(0, 0));
        assert!(n.is_zero());
        assert_eq!(n.linear_checked(), Some(0.0));
        assert_eq!(n.log10(), f64::NEG_INFINITY);
    }

    #[test]
    fn deep_underflow_stays_in_log_domain() {
        let n = NCiv::from_ln(-1000.0);
        assert_eq!(n.linear(), 0.0);
        assert_eq!(n.linear_checked(), None);
        assert!((n.log10() + 1000.0 / std::f64::consts::LN_10).abs() < 1e-10);
    }

    #[test]
    fn universe_scaling() {
        let s = DrakeScenario::table1(1, 0);
        assert!((s.star_ratio() - 6.666_666_666_666_667e10).abs() < 1.0);
        assert!((s.scale_to_universe(1.5e-11) - 1.0).abs() < 1e-12);
        assert_eq!(s.scale_to_universe(0.0), 0.0);
        assert!((s.scale_to_universe(7.694e-13) - 0.051_293).abs() < 1e-5);
        let ln_form = NCiv::from_linear(1.5e-11).scaled(s.star_ratio());
        assert!((ln_form.linear() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn expectation_examples() {
        let m = ExpectationModel::new(4e21, 2.5e-24).unwrap();
        assert!((m.expectation() - 0.01).abs() < 1e-15);
        assert_eq!(ExpectationModel::new(1.0, 1.0).unwrap().expectation(), 1.0);
        assert_eq!(ExpectationModel::new(1e9, 0.0).unwrap().expectation(), 0.0);
        assert!(ExpectationModel::new(0.0, 0.5).is_err());
        assert!(ExpectationModel::new(10.0, 1.5).is_err());
    }

    #[test]
    fn scenario_validation() {
        let reg = builtin_registry();
        assert!(DrakeScenario::table1(10, 1).validate(reg).is_ok());
        assert_eq!(
            DrakeScenario::new(vec![], 10, 1).validate(reg),
            Err(ScenarioError::NoFactors)
        );
        let mut dup = fixed_scenario(&[1.0, 2.0]);
        dup.factors[1].name = "x0".into();
        assert_eq!(
            dup.validate(reg),
            Err(ScenarioError::DuplicateFactor("x0".into()))
        );
        let mut frac = fixed_scenario(&[1.0]);
        frac.factors[0] = Factor::new("f", PriorSpec::log_uniform(0.5, 2.0), true);
        assert!(matches!(
            frac.validate(reg),
            Err(ScenarioError::NotAFraction { .. })
        ));
        let mut lognormal_frac = fixed_scenario(&[1.0]);
        lognormal_frac.factors[0] = Factor::new("f", PriorSpec::log_normal(0.0, 1.0), true);
        assert!(lognormal_frac.validate(reg).is_err());
        let mut stars = fixed_scenario(&[1.0]);
        stars.stars_universe = 1e10;
        assert!(matches!(
            stars.validate(reg),
            Err(ScenarioError::StarCounts { .. })
        ));
        let mut zero = fixed_scenario(&[1.0]);
        zero.n_samples = 0;
        assert_eq!(zero.validate(reg), Err(ScenarioError::NoSamples));
        let mut bad_prior = fixed_scenario(&[1.0]);
        bad_prior.factors[0].prior = PriorSpec::log_uniform(2.0, 1.0);
        let err = bad_prior.validate(reg).unwrap_err();
        assert!(
            err.to_string().starts_with("factor `x0`: log_uniform.lo"),
            "{err}"
        );
    }
}
