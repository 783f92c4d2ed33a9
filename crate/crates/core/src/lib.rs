//! Drake-equation uncertainty propagation treated as a low-statistics
//! counting experiment.
//!
//! - [`priors`]: per-factor distributions behind a name-keyed registry
//! - [`drake_model`]: scenario definition and log-space factor products
//! - [`counting_stats`]: occurrence probabilities and lower limits
//! - [`mc_engine`]: chunked, reproducible Monte Carlo runs
//! - [`reporting`]: JSON summaries and CSV exports
//! - [`cli`]: the `drake` command-line front end

pub mod cli;
pub mod counting_stats;
pub mod drake_model;
pub mod mc_engine;
pub mod numeric;
pub mod priors;
pub mod reporting;
pub mod rng;

pub use counting_stats::{LimitResult, LimitScope, PlanetClass};
pub use drake_model::{DrakeModel, DrakeScenario, ExpectationModel, Factor, NCiv};
pub use mc_engine::{Engine, HistogramSpec, Run, RunSummary, SampleStream};
pub use priors::{Prior, PriorRegistry, PriorSpec};
