use rand::{Rng, RngCore};
use rand_distr::{Distribution, StandardNormal};
use statrs::distribution::{ContinuousCDF, Normal};

use super::{Prior, PriorError, PriorRegistry, PriorSpec};
use crate::numeric::{ln_one_minus_exp_neg_exp, one_minus_exp_neg};

/// Density proportional to `1/x` on `[lo, hi]`.
#[derive(Debug, Clone, PartialEq)]
pub struct LogUniform {
    lo: f64,
    hi: f64,
    ln_lo: f64,
    ln_width: f64,
}

impl LogUniform {
    pub const KIND: &'static str = "log_uniform";

    pub fn new(lo: f64, hi: f64) -> Result<Self, PriorError> {
        if !(lo.is_finite() && lo > 0.0) {
            return Err(PriorError::invalid(
                Self::KIND,
                "lo",
                "must be a finite positive number",
            ));
        }
        if !hi.is_finite() {
            return Err(PriorError::invalid(Self::KIND, "hi", "must be finite"));
        }
        if lo >= hi {
            return Err(PriorError::invalid(
                Self::KIND,
                "lo",
                format!("requires lo < hi (lo = {lo}, hi = {hi})"),
            ));
        }
        let ln_lo = lo.ln();
        Ok(LogUniform {
            lo,
            hi,
            ln_lo,
            ln_width: hi.ln() - ln_lo,
        })
    }

    pub fn from_spec(spec: &PriorSpec) -> Result<Self, PriorError> {
        spec.expect_only(&["lo", "hi"])?;
        Self::new(spec.number("lo")?, spec.number("hi")?)
    }

    fn ln_at(&self, u: f64) -> f64 {
        (self.ln_lo + u * self.ln_width).min(self.hi.ln())
    }
}

impl Prior for LogUniform {
    fn kind(&self) -> &'static str {
        Self::KIND
    }

    fn support(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    fn sample(&self, rng: &mut dyn RngCore) -> f64 {
        self.ln_at(rng.random::<f64>())
            .exp()
            .clamp(self.lo, self.hi)
    }

    fn sample_ln(&self, rng: &mut dyn RngCore) -> f64 {
        self.ln_at(rng.random::<f64>())
    }

    fn quantile_unchecked(&self, q: f64) -> f64 {
        match q {
            0.0 => self.lo,
            1.0 => self.hi,
            _ => self.ln_at(q).exp().clamp(self.lo, self.hi),
        }
    }

    fn spec(&self) -> PriorSpec {
        PriorSpec::log_uniform(self.lo, self.hi)
    }
}

/// `ln(x) ~ Normal(mu_ln, sigma_ln^2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LogNormal {
    mu_ln: f64,
    sigma_ln: f64,
}

impl LogNormal {
    pub const KIND: &'static str = "log_normal";

    pub fn new(mu_ln: f64, sigma_ln: f64) -> Result<Self, PriorError> {
        if !mu_ln.is_finite() {
            return Err(PriorError::invalid(Self::KIND, "mu_ln", "must be finite"));
        }
        if !(sigma_ln.is_finite() && sigma_ln > 0.0) {
            return Err(PriorError::invalid(
                Self::KIND,
                "sigma_ln",
                format!("requires sigma_ln > 0 (got {sigma_ln})"),
            ));
        }
        Ok(LogNormal { mu_ln, sigma_ln })
    }

    pub fn from_spec(spec: &PriorSpec) -> Result<Self, PriorError> {
        spec.expect_only(&["mu_ln", "sigma_ln"])?;
        Self::new(spec.number("mu_ln")?, spec.number("sigma_ln")?)
    }
}

impl Prior for LogNormal {
    fn kind(&self) -> &'static str {
        Self::KIND
    }

    fn support(&self) -> (f64, f64) {
        (0.0, f64::INFINITY)
    }

    fn sample(&self, rng: &mut dyn RngCore) -> f64 {
        self.sample_ln(rng).exp()
    }

    fn sample_ln(&self, rng: &mut dyn RngCore) -> f64 {
        // Ziggurat; exact tails.
        let z: f64 = StandardNormal.sample(rng);
        self.mu_ln + self.sigma_ln * z
    }

    fn quantile_unchecked(&self, q: f64) -> f64 {
        match q {
            0.0 => 0.0,
            1.0 => f64::INFINITY,
            _ => {
                let z = Normal::standard().inverse_cdf(q);
                (self.mu_ln + self.sigma_ln * z).exp()
            }
        }
    }

    fn spec(&self) -> PriorSpec {
        PriorSpec::log_normal(self.mu_ln, self.sigma_ln)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Fixed {
    value: f64,
}

impl Fixed {
    pub const KIND: &'static str = "fixed";

    pub fn new(value: f64) -> Result<Self, PriorError> {
        if !(value.is_finite() && value >= 0.0) {
            return Err(PriorError::invalid(
                Self::KIND,
                "value",
                format!("must be a finite non-negative number (got {value})"),
            ));
        }
        Ok(Fixed { value })
    }

    pub fn from_spec(spec: &PriorSpec) -> Result<Self, PriorError> {
        spec.expect_only(&["value"])?;
        Self::new(spec.number("value")?)
    }
}

impl Prior for Fixed {
    fn kind(&self) -> &'static str {
        Self::KIND
    }

    fn support(&self) -> (f64, f64) {
        (self.value, self.value)
    }

    fn sample(&self, _rng: &mut dyn RngCore) -> f64 {
        self.value
    }

    fn sample_ln(&self, _rng: &mut dyn RngCore) -> f64 {
        self.value.ln()
    }

    fn quantile_unchecked(&self, _q: f64) -> f64 {
        self.value
    }

    fn spec(&self) -> PriorSpec {
        PriorSpec::fixed(self.value)
    }
}

/// `1 - e^(-rate)`, capped at the largest double below 1 (the exact value
/// is always below 1).
fn life_fraction(rate: f64) -> f64 {
    one_minus_exp_neg(rate).min(1.0 - f64::EPSILON / 2.0)
}

/// `1 - e^(-x)` with `x` drawn from a rate prior, as used for the fraction of
/// habitable planets where life arises.
#[derive(Debug)]
pub struct LifeRate {
    rate: Box<dyn Prior>,
}

impl LifeRate {
    pub const KIND: &'static str = "life_rate";

    pub fn new(rate: Box<dyn Prior>) -> Result<Self, PriorError> {
        if rate.kind() == Self::KIND {
            return Err(PriorError::invalid(
                Self::KIND,
                "rate_prior",
                "must not itself be a life_rate prior",
            ));
        }
        if rate.support().0 < 0.0 {
            return Err(PriorError::invalid(
                Self::KIND,
                "rate_prior",
                "support must be non-negative",
            ));
        }
        Ok(LifeRate { rate })
    }

    pub fn from_spec(spec: &PriorSpec, registry: &PriorRegistry) -> Result<Self, PriorError> {
        spec.expect_only(&["rate_prior"])?;
        let nested: PriorSpec = serde_json::from_value(spec.param("rate_prior")?.clone())
            .map_err(|e| PriorError::invalid(Self::KIND, "rate_prior", e.to_string()))?;
        if nested.kind == Self::KIND {
            return Err(PriorError::invalid(
                Self::KIND,
                "rate_prior",
                "must not itself be a life_rate prior",
            ));
        }
        Self::new(registry.build(&nested)?)
    }
}

impl Prior for LifeRate {
    fn kind(&self) -> &'static str {
        Self::KIND
    }

    fn support(&self) -> (f64, f64) {
        let (lo, hi) = self.rate.support();
        (life_fraction(lo), life_fraction(hi))
    }

    fn sample(&self, rng: &mut dyn RngCore) -> f64 {
        life_fraction(self.rate.sample(rng))
    }

    fn sample_ln(&self, rng: &mut dyn RngCore) -> f64 {
        ln_one_minus_exp_neg_exp(self.rate.sample_ln(rng))
    }

    fn quantile_unchecked(&self, q: f64) -> f64 {
        life_fraction(self.rate.quantile_unchecked(q))
    }

    fn spec(&self) -> PriorSpec {
        PriorSpec::life_rate(self.rate.spec())
    }
}
