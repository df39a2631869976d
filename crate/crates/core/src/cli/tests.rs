use super::*;

#[test]
fn builtin_corpus_passes() {
    let entries = run_corpus(&corpus_sources(None).unwrap(), &Config::default());
    for e in &entries {
        assert!(e.passed(), "{}: exit {} {:?}", e.name, e.exit_code, e.mismatches);
    }
    assert_eq!(corpus_exit_code(&entries), EXIT_OK);
}

#[test]
fn fixtures_round_trip() {
    for (name, text) in CORPUS {
        let p = ProblemFile::from_json(text).unwrap_or_else(|e| panic!("{name}: {e}"));
        let again = ProblemFile::from_json(&p.to_json()).unwrap();
        assert_eq!(p, again, "{name}");
        assert_eq!(p.to_json(), again.to_json(), "{name}");
    }
}

#[test]
fn reports_are_deterministic() {
    let cfg = Config::default();
    for (name, text) in CORPUS.iter().take(4) {
        let p = ProblemFile::from_json(text).unwrap();
        assert_eq!(run_problem(&p, &cfg).payload_json(), run_problem(&p, &cfg).payload_json(), "{name}");
    }
}

#[test]
fn malformed_polynomial_reports_location() {
    let text = CORPUS.iter().find(|(n, _)| *n == "square.json").unwrap().1.replace("x1^2", "x1^^2");
    match ProblemFile::from_json(&text) {
        Err(Error::Parse { location, message }) => {
            assert!(location.starts_with("line "), "{location}");
            assert!(message.contains("parse error"), "{message}");
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn corrupted_expectation_fails_corpus() {
    let (name, text) = CORPUS.iter().find(|(n, _)| *n == "kkt_degenerate.json").unwrap();
    let bad = text.replacen("\"CertifiedNo\"", "\"CertifiedYes\"", 1);
    let entries = run_corpus(&[(name.to_string(), bad)], &Config::default());
    assert!(!entries[0].passed());
    assert_eq!(corpus_exit_code(&entries), EXIT_INCONSISTENT);
}

#[test]
fn wrong_operation_for_kind_is_input_error() {
    let mut p = ProblemFile::from_json(CORPUS[0].1).unwrap();
    p.queries = vec![Query { id: "bad".into(), op: QueryOp::RegValue { u: vec![0.0], y: vec![0.0] }, expect: vec![] }];
    let r = run_problem(&p, &Config::default());
    assert_eq!(r.exit_code, EXIT_INPUT);
    assert!(r.results[0].message.as_ref().unwrap().contains("\"bad\""));
}

#[test]
fn off_graph_basepoint_is_input_error() {
    let mut p = ProblemFile::from_json(CORPUS.iter().find(|(n, _)| *n == "square.json").unwrap().1).unwrap();
    p.queries = vec![Query { id: "off".into(), op: QueryOp::MetricRegularity { u: vec![1.0], y: vec![0.0] }, expect: vec![] }];
    assert_eq!(run_problem(&p, &Config::default()).exit_code, EXIT_INPUT);
}

#[test]
fn exit_codes_by_error() {
    assert_eq!(exit_code_of(&Error::Inconsistency("x".into())), Some(EXIT_INCONSISTENT));
    assert_eq!(exit_code_of(&Error::Validation("x".into())), Some(EXIT_INPUT));
    assert_eq!(exit_code_of(&Error::ConditionFailed("(v)".into())), None);
}

#[test]
fn wildcard_paths() {
    let v = json!({ "a": [{ "r": 1.0 }, { "r": 2.0 }] });
    let le = |b| Expectation { path: "/a/*/r".into(), equals: None, approx: None, tol: None, le: Some(b), ge: None };
    assert!(check_expectations(&v, &[le(2.0)]).is_empty());
    assert_eq!(check_expectations(&v, &[le(1.5)]).len(), 1);
    let missing = Expectation { path: "/b".into(), equals: Some(json!(1)), approx: None, tol: None, le: None, ge: None };
    assert_eq!(check_expectations(&v, &[missing]).len(), 1);
}
