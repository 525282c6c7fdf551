//! Scenario runner, inequality fuzzer and report emission for the `qdini-core`
//! convergence diagnostics.
//!
//! A [`Scenario`] is a JSON document that binds operator sequences, channels and
//! functional families by name and lists checks with their expected statuses.
//! [`run_scenario`] resolves it under a seed, runs every check and produces a
//! deterministic [`Report`]. [`inequality_fuzz`] exercises the underlying
//! inequalities on random instances.

pub mod builtin;
pub mod error;
pub mod fuzz;
pub mod report;
pub mod run;
pub mod scenario;

pub use builtin::{builtin_names, builtin_scenario};
pub use error::{CliError, Result};
pub use fuzz::{inequality_fuzz, suite_names, FuzzReport};
pub use report::{CheckReport, Expectation, Report};
pub use run::{budget_from_env, run_scenario, RunOptions, DEFAULT_BUDGET};
pub use scenario::{load_scenario, Bindings, Scenario};

/// Loads `builtin:NAME` from the registry or a scenario file from disk.
pub fn load_target(target: &str) -> Result<Scenario> {
    match target.strip_prefix("builtin:") {
        Some(name) => builtin_scenario(name),
        None => load_scenario(target),
    }
}
