use std::collections::BTreeMap;
use std::fmt;
use std::sync::OnceLock;

use super::builtin::{Fixed, LifeRate, LogNormal, LogUniform};
use super::{Prior, PriorError, PriorSpec};

/// Turns a spec of one kind into a validated prior. Receives the registry so
/// composite kinds can build their nested priors.
pub type PriorBuilder =
    Box<dyn Fn(&PriorSpec, &PriorRegistry) -> Result<Box<dyn Prior>, PriorError> + Send + Sync>;

/// Name -> builder table for prior kinds.
pub struct PriorRegistry {
    builders: BTreeMap<String, PriorBuilder>,
}

impl PriorRegistry {
    pub fn empty() -> Self {
        PriorRegistry {
            builders: BTreeMap::new(),
        }
    }

    /// Registry holding `log_uniform`, `log_normal`, `fixed` and `life_rate`.
    pub fn with_builtins() -> Self {
        let mut reg = Self::empty();
        reg.register(LogUniform::KIND, |spec, _| {
            Ok(Box::new(LogUniform::from_spec(spec)?))
        });
        reg.register(LogNormal::KIND, |spec, _| {
            Ok(Box::new(LogNormal::from_spec(spec)?))
        });
        reg.register(Fixed::KIND, |spec, _| Ok(Box::new(Fixed::from_spec(spec)?)));
        reg.register(LifeRate::KIND, |spec, reg| {
            Ok(Box::new(LifeRate::from_spec(spec, reg)?))
        });
        reg
    }

    /// Adds or replaces the builder for `kind`.
    pub fn register<F>(&mut self, kind: &str, builder: F)
    where
        F: Fn(&PriorSpec, &PriorRegistry) -> Result<Box<dyn Prior>, PriorError>
            + Send
            + Sync
            + 'static,
    {
        self.builders.insert(kind.to_string(), Box::new(builder));
    }

    pub fn contains(&self, kind: &str) -> bool {
        self.builders.contains_key(kind)
    }

    pub fn kinds(&self) -> impl Iterator<Item = &str> {
        self.builders.keys().map(String::as_str)
    }

    pub fn build(&self, spec: &PriorSpec) -> Result<Box<dyn Prior>, PriorError> {
        let builder = self
            .builders
            .get(&spec.kind)
            .ok_or_else(|| PriorError::UnknownKind(spec.kind.clone()))?;
        builder(spec, self)
    }
}

impl Default for PriorRegistry {
    fn default() -> Self {
        Self::with_builtins()
    }
}

impl fmt::Debug for PriorRegistry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.builders.keys()).finish()
    }
}

pub fn builtin_registry() -> &'static PriorRegistry {
    static REGISTRY: OnceLock<PriorRegistry> = OnceLock::new();
    REGISTRY.get_or_init(PriorRegistry::with_builtins)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::substream;

    #[test]
    fn builtins_registered() {
        let kinds: Vec<_> = builtin_registry().kinds().collect();
        assert_eq!(kinds, ["fixed", "life_rate", "log_normal", "log_uniform"]);
    }

    #[test]
    fn custom_kind_can_be_registered() {
        let mut reg = PriorRegistry::with_builtins();
        // a "percent" kind: fixed value given in percent
        reg.register("percent", |spec, _| {
            spec.expect_only(&["value"])?;
            let v = spec.number("value")? / 100.0;
            Ok(Box::new(Fixed::new(v).map_err(|_| {
                PriorError::invalid("percent", "value", "must be in [0, 100]")
            })?))
        });
        let p = reg
            .build(&PriorSpec::new("percent").with("value", 25.0))
            .unwrap();
        assert_eq!(p.sample(&mut substream(0, 0)), 0.25);
        assert!(builtin_registry()
            .build(&PriorSpec::new("percent").with("value", 25.0))
            .is_err());
    }

    #[test]
    fn life_rate_resolves_nested_kind_through_registry() {
        let mut reg = PriorRegistry::empty();
        reg.register(LifeRate::KIND, |spec, reg| {
            Ok(Box::new(LifeRate::from_spec(spec, reg)?))
        });
        let spec = PriorSpec::life_rate(PriorSpec::fixed(1.0));
        assert_eq!(
            reg.build(&spec).unwrap_err(),
            PriorError::UnknownKind("fixed".into())
        );
    }
}
