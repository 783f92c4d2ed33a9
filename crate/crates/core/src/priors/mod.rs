//! Per-factor prior distributions.
//!
//! A [`PriorSpec`] is the serialized, tagged description of a distribution
//! (`{"kind":"log_uniform","lo":0.1,"hi":1}`). A [`PriorRegistry`] maps each
//! `kind` to a builder that validates the parameters and produces a
//! [`Prior`] trait object; the engine only ever talks to the trait.

mod builtin;
mod registry;

use std::fmt;

use rand::RngCore;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use thiserror::Error;

pub use builtin::{Fixed, LifeRate, LogNormal, LogUniform};
pub use registry::{builtin_registry, PriorBuilder, PriorRegistry};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PriorError {
    #[error("unknown prior kind `{0}`")]
    UnknownKind(String),
    #[error("{kind}: missing parameter `{param}`")]
    MissingParam { kind: String, param: String },
    #[error("{kind}: parameter `{param}` must be a number")]
    NotANumber { kind: String, param: String },
    #[error("{kind}: unexpected parameter `{param}`")]
    UnexpectedParam { kind: String, param: String },
    #[error("{kind}.{field}: {rule}")]
    Invalid {
        kind: String,
        field: String,
        rule: String,
    },
    #[error("quantile level {0} outside [0, 1]")]
    QuantileOutOfRange(f64),
}

impl PriorError {
    pub(crate) fn invalid(kind: &str, field: &str, rule: impl Into<String>) -> Self {
        PriorError::Invalid {
            kind: kind.to_string(),
            field: field.to_string(),
            rule: rule.into(),
        }
    }
}

/// Tagged description of one factor's sampling distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriorSpec {
    pub kind: String,
    #[serde(flatten)]
    pub params: Map<String, Value>,
}

impl PriorSpec {
    pub fn new(kind: impl Into<String>) -> Self {
        PriorSpec {
            kind: kind.into(),
            params: Map::new(),
        }
    }

    pub fn with(mut self, key: &str, value: impl Into<Value>) -> Self {
        self.params.insert(key.to_string(), value.into());
        self
    }

    pub fn log_uniform(lo: f64, hi: f64) -> Self {
        Self::new(LogUniform::KIND).with("lo", lo).with("hi", hi)
    }

    pub fn log_normal(mu_ln: f64, sigma_ln: f64) -> Self {
        Self::new(LogNormal::KIND)
            .with("mu_ln", mu_ln)
            .with("sigma_ln", sigma_ln)
    }

    pub fn fixed(value: f64) -> Self {
        Self::new(Fixed::KIND).with("value", value)
    }

    pub fn life_rate(rate_prior: PriorSpec) -> Self {
        let nested = serde_json::to_value(rate_prior).expect("prior spec serializes");
        Self::new(LifeRate::KIND).with("rate_prior", nested)
    }

    /// Rejects any parameter not listed in `allowed`.
    pub fn expect_only(&self, allowed: &[&str]) -> Result<(), PriorError> {
        match self.params.keys().find(|k| !allowed.contains(&k.as_str())) {
            Some(k) => Err(PriorError::UnexpectedParam {
                kind: self.kind.clone(),
                param: k.clone(),
            }),
            None => Ok(()),
        }
    }

    pub fn param(&self, name: &str) -> Result<&Value, PriorError> {
        self.params
            .get(name)
            .ok_or_else(|| PriorError::MissingParam {
                kind: self.kind.clone(),
                param: name.to_string(),
            })
    }

    pub fn number(&self, name: &str) -> Result<f64, PriorError> {
        self.param(name)?
            .as_f64()
            .ok_or_else(|| PriorError::NotANumber {
                kind: self.kind.clone(),
                param: name.to_string(),
            })
    }
}

impl fmt::Display for PriorSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}",
            serde_json::to_string(self).map_err(|_| fmt::Error)?
        )
    }
}

/// A validated, sampleable distribution over a non-negative factor.
pub trait Prior: fmt::Debug + Send + Sync {
    fn kind(&self) -> &'static str;

    /// Closed bounds of the support. `hi` may be `+inf`.
    fn support(&self) -> (f64, f64);

    /// One draw on the linear scale.
    fn sample(&self, rng: &mut dyn RngCore) -> f64;

    /// Natural log of one draw. Consumes the stream exactly like
    /// [`Prior::sample`], so both agree for the same stream state, but stays
    /// finite where the linear value would underflow.
    fn sample_ln(&self, rng: &mut dyn RngCore) -> f64;

    /// Inverse CDF for `q` already known to lie in `[0, 1]`.
    fn quantile_unchecked(&self, q: f64) -> f64;

    fn quantile(&self, q: f64) -> Result<f64, PriorError> {
        if !(0.0..=1.0).contains(&q) {
            return Err(PriorError::QuantileOutOfRange(q));
        }
        Ok(self.quantile_unchecked(q))
    }

    fn spec(&self) -> PriorSpec;
}

/// Checks `spec` against the built-in kinds.
pub fn validate(spec: &PriorSpec) -> Result<(), PriorError> {
    builtin_registry().build(spec).map(|_| ())
}

/// Draws one value from `spec` using the built-in kinds.
pub fn sample(spec: &PriorSpec, rng: &mut dyn RngCore) -> Result<f64, PriorError> {
    Ok(builtin_registry().build(spec)?.sample(rng))
}

pub fn quantile(spec: &PriorSpec, q: f64) -> Result<f64, PriorError> {
    builtin_registry().build(spec)?.quantile(q)
}
