//! Registry of built-in scenarios, stored as scenario files under `scenarios/`.

use crate::error::{CliError, Result};
use crate::scenario::Scenario;

const REGISTRY: &[(&str, &str)] = &[
    ("entropy-discontinuity", include_str!("../scenarios/entropy-discontinuity.json")),
    ("simon-dct", include_str!("../scenarios/simon-dct.json")),
    ("re-sum", include_str!("../scenarios/re-sum.json")),
    ("re-domination", include_str!("../scenarios/re-domination.json")),
    ("channel-mi-depolarizing", include_str!("../scenarios/channel-mi-depolarizing.json")),
    ("appendix-ladder", include_str!("../scenarios/appendix-ladder.json")),
    ("choi-rank-bound", include_str!("../scenarios/choi-rank-bound.json")),
];

pub fn builtin_names() -> Vec<&'static str> {
    REGISTRY.iter().map(|(name, _)| *name).collect()
}

pub fn builtin_scenario(name: &str) -> Result<Scenario> {
    let (_, text) = REGISTRY.iter().find(|(n, _)| *n == name).ok_or_else(|| CliError::UnknownBuiltin {
        name: name.to_string(),
        available: builtin_names().into_iter().map(String::from).collect(),
    })?;
    Scenario::from_json(text, &format!("builtin:{name}"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_builtin_parses_and_resolves() {
        for name in builtin_names() {
            let s = builtin_scenario(name).unwrap();
            assert_eq!(s.name, name);
            s.resolve(0).unwrap();
        }
    }

    #[test]
    fn unknown_name_lists_registry() {
        let err = builtin_scenario("foo").unwrap_err().to_string();
        assert!(err.contains("foo") && err.contains("simon-dct"), "{err}");
    }
}
