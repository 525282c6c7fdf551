use qdini::report::Expectation;
use qdini::{builtin_names, builtin_scenario, load_scenario, run_scenario, CliError, RunOptions, Scenario};
use qdini_core::Execution;

const SMALL: &str = r#"{
  "version": 1,
  "name": "small",
  "sequences": {
    "rho": {
      "kind": "interpolate",
      "limit": { "kind": "geometric", "dim": 4, "ratio": 0.5 },
      "target": { "kind": "basis", "dim": 4, "index": 0 }
    }
  },
  "families": { "S": { "kind": "entropy" }, "halfS": { "kind": "scaled", "factor": 0.5, "of": "S" } },
  "checks": [
    {
      "label": "dct",
      "expected": "EXPECTED",
      "n_max": 8,
      "run": { "kind": "dct-basic", "f": "S", "g": "halfS", "sequence": "rho" }
    }
  ]
}"#;

fn small(expected: &str) -> Scenario {
    Scenario::from_json(&SMALL.replace("EXPECTED", expected), "small").unwrap()
}

#[test]
fn builtins_round_trip_through_files() {
    let dir = tempfile::tempdir().unwrap();
    for name in builtin_names() {
        let s = builtin_scenario(name).unwrap();
        let path = dir.path().join(format!("{name}.json"));
        std::fs::write(&path, s.to_json().unwrap()).unwrap();
        assert_eq!(load_scenario(&path).unwrap(), s, "{name}");
    }
}

#[test]
fn builtins_match_their_expectations() {
    for name in builtin_names() {
        let r = run_scenario(&builtin_scenario(name).unwrap(), 0, &RunOptions::default()).unwrap();
        assert!(r.all_matched(), "{name}: {}", r.to_json().unwrap());
    }
}

#[test]
fn missing_binding_is_named() {
    let text = SMALL.replace("EXPECTED", "consistent").replace(r#""sequence": "rho""#, r#""sequence": "nope""#);
    let err = Scenario::from_json(&text, "small").unwrap_err().to_string();
    assert!(err.contains("'nope'") && err.contains("check 'dct'"), "{err}");
}

#[test]
fn unknown_fields_and_versions_are_rejected() {
    let text =
        SMALL.replace("EXPECTED", "consistent").replace(r#""name": "small","#, r#""name": "small", "extra": 1,"#);
    assert!(matches!(Scenario::from_json(&text, "x"), Err(CliError::Parse { .. })));
    let text = SMALL.replace("EXPECTED", "consistent").replace(r#""version": 1"#, r#""version": 2"#);
    assert!(Scenario::from_json(&text, "x").unwrap_err().to_string().contains("version"));
}

#[test]
fn planted_mismatch_is_flagged() {
    let r = run_scenario(&small("violated"), 0, &RunOptions::default()).unwrap();
    assert!(!r.all_matched());
    assert_eq!(r.summary.mismatched, 1);
    assert_eq!(r.checks[0].observed, Expectation::Consistent);
    let ok = run_scenario(&small("consistent"), 0, &RunOptions::default()).unwrap();
    assert!(ok.all_matched());
}

#[test]
fn budget_is_enforced_before_running() {
    let opts = RunOptions { budget: 10.0, ..RunOptions::default() };
    match run_scenario(&small("consistent"), 0, &opts) {
        Err(CliError::Budget { estimate, budget }) => assert!(estimate > budget),
        other => panic!("expected a budget error, got {other:?}"),
    }
}

#[test]
fn window_overrides_take_precedence() {
    let opts = RunOptions { n_max: Some(3), m_max: Some(2), ..RunOptions::default() };
    let r = run_scenario(&small("consistent"), 0, &opts).unwrap();
    assert_eq!((r.checks[0].n_max, r.checks[0].m_max), (3, 2));
}

#[test]
fn csv_has_one_row_per_cell() {
    let r = run_scenario(
        &builtin_scenario("simon-dct").unwrap(),
        0,
        &RunOptions { exec: Execution::Sequential, ..Default::default() },
    )
    .unwrap();
    let mut buf = Vec::new();
    r.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("check,sequence,n,m,mu,gap,tail,flags"));
    let cells: usize = r.checks.iter().flat_map(|c| &c.verdict.grids).map(|g| g.cells.len()).sum();
    assert_eq!(lines.count(), cells);
}

#[test]
fn report_json_parses_back() {
    let r = run_scenario(&builtin_scenario("re-domination").unwrap(), 3, &RunOptions::default()).unwrap();
    let back: qdini::Report = serde_json::from_str(&r.to_json().unwrap()).unwrap();
    assert_eq!(back.to_json().unwrap(), r.to_json().unwrap());
}
