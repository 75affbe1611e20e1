use std::sync::Arc;

use num_rational::Ratio;

use factgraph::agents::SymbolicBackend;
use factgraph::evaluation::{
    load_dataset, macro_f1, read_dataset, run_eval, EvalError, EvalOptions, RecordOutcome,
};
use factgraph::pipeline::{Label, PipelineConfig, Verifier};

fn dataset() -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/eval/dataset.jsonl")
}

fn verifier() -> Verifier {
    Verifier::new(
        PipelineConfig::default(),
        Arc::new(SymbolicBackend::default()),
        None,
    )
    .unwrap()
}

#[test]
fn four_record_fixture() {
    let mut report = Vec::new();
    let s = run_eval(
        load_dataset(&dataset(), None).unwrap(),
        &verifier(),
        EvalOptions::default(),
        Some(&mut report),
    )
    .unwrap();
    let predicted: Vec<Label> = s.outcomes.iter().map(|o| o.predicted).collect();
    use Label::{Refuted as R, Supported as S};
    assert_eq!(predicted, [S, S, R, R]);
    assert!((s.metrics.macro_f1 - 11.0 / 15.0).abs() < 1e-12);
    assert_eq!(s.metrics.errors, 1);
    assert!(s.outcomes[3].error.as_deref().unwrap().contains("evidence"));
    assert_eq!(s.metrics.per_hop.len(), 2);
    assert!((s.metrics.per_hop[&2] - 1.0 / 3.0).abs() < 1e-12);

    let lines: Vec<RecordOutcome> = String::from_utf8(report)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(lines, s.outcomes);
    let ids: Vec<&str> = lines.iter().map(|o| o.claim_id.as_str()).collect();
    assert_eq!(ids, ["e1", "e2", "e3", "e4"]);
}

#[test]
fn metrics_agree_with_report_pairs() {
    let s = run_eval(
        load_dataset(&dataset(), None).unwrap(),
        &verifier(),
        EvalOptions {
            workers: 3,
            chunk_size: 2,
            ..EvalOptions::default()
        },
        None::<Vec<u8>>,
    )
    .unwrap();
    let pairs: Vec<(Label, Label)> = s.outcomes.iter().map(|o| (o.gold, o.predicted)).collect();
    assert_eq!(
        macro_f1::<f64>(&pairs).unwrap().confusion,
        s.metrics.confusion
    );
    assert_eq!(
        macro_f1::<Ratio<i64>>(&pairs).unwrap().macro_f1,
        Ratio::new(11, 15)
    );
}

#[test]
fn abort_on_error_stops_at_failed_record() {
    let err = run_eval(
        load_dataset(&dataset(), None).unwrap(),
        &verifier(),
        EvalOptions {
            abort_on_error: true,
            ..EvalOptions::default()
        },
        None::<Vec<u8>>,
    )
    .unwrap_err();
    assert!(matches!(err, EvalError::Record { ref claim_id, .. } if claim_id == "e4"));
}

#[test]
fn malformed_line_reports_line_number() {
    let text =
        "{\"id\": 1, \"claim\": \"c\", \"label\": \"SUPPORTS\"}\n{\"id\": 2, \"claim\": \"c\"}\n";
    let out: Vec<_> = read_dataset(text.as_bytes(), Some("fever")).collect();
    assert_eq!(out[0].as_ref().unwrap().claim_id, "1");
    let err = out[1].as_ref().unwrap_err().to_string();
    assert!(err.contains('2'), "{err}");
}

#[test]
fn hops_outside_hover_rejected() {
    let text = "{\"id\": \"a\", \"claim\": \"c\", \"label\": \"REFUTES\", \"hops\": 2, \"dataset\": \"scifact\"}\n";
    assert!(read_dataset(text.as_bytes(), None).next().unwrap().is_err());
}
