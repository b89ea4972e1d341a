use std::path::Path;

use cpscreen::data::{load_benchmark, load_report, load_sequences, load_similarity, save_report};
use cpscreen::eval::{Aggregate, EvaluationReport, Failure, TargetResult};
use cpscreen::kernels::FeatureVector;
use cpscreen::Error;

fn write(dir: &Path, name: &str, text: &str) -> std::path::PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn parse_line(e: Error) -> u64 {
    match e {
        Error::Parse { line, .. } => line,
        other => panic!("expected a parse error, got {other:?}"),
    }
}

const SIM: &str = "id,A,B\nA,1.0,0.25\nB,0.25,2.0\n";

#[test]
fn loads_a_benchmark() {
    let dir = tempfile::tempdir().unwrap();
    let sim = write(dir.path(), "s.csv", SIM);
    let lig = write(
        dir.path(),
        "l.tsv",
        "target_id\tligand_id\tlabel\tfingerprint\nA\tx1\t6.5\t1,4,9\nB\tx2\t7.25\t\nA\tx3\t5\t0\n",
    );
    let bench = load_benchmark(&lig, &sim).unwrap();
    assert_eq!(bench.ids(), ["A", "B"]);
    let a = bench.target("A").unwrap();
    assert_eq!(a.ligand_ids, ["x1", "x3"]);
    assert_eq!(a.dataset.labels, [6.5, 5.0]);
    assert_eq!(a.dataset.inputs[0], FeatureVector::Sparse(vec![1, 4, 9]));
    assert_eq!(bench.target("B").unwrap().dataset.inputs[0], FeatureVector::Sparse(vec![]));
    assert_eq!(bench.similarity.get("A", "B").unwrap(), 0.25);
}

#[test]
fn similarity_errors_carry_line_numbers() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        ("name,A,B\nA,1,0\nB,0,1\n", 1),
        ("id,A,B\nA,1,0\nB,0\n", 3),
        ("id,A,B\nA,1,0\nC,0,1\n", 3),
        ("id,A,B\nA,1,zero\nB,0,1\n", 2),
        ("id,A,B\nA,1,0\n", 2),
    ];
    for (text, line) in cases {
        let p = write(dir.path(), "s.csv", text);
        assert_eq!(parse_line(load_similarity(&p).unwrap_err()), line, "{text:?}");
    }
    let p = write(dir.path(), "s.csv", "id,A,B\nA,1,0.5\nB,0.4,1\n");
    assert!(matches!(load_similarity(&p), Err(Error::Validation(_))));
    assert!(matches!(load_similarity(&dir.path().join("absent.csv")), Err(Error::Io { .. })));
}

#[test]
fn ligand_table_errors() {
    let dir = tempfile::tempdir().unwrap();
    let sim = write(dir.path(), "s.csv", SIM);
    let header = "target_id\tligand_id\tlabel\tfingerprint\n";
    let cases = [
        ("target\tligand\tlabel\tfp\nA\tx\t1\t1\n".to_string(), Some(1)),
        (format!("{header}A\tx\t1\t1\nA\ty\tNaN\t2\n"), Some(3)),
        (format!("{header}A\tx\t1\t3,2\n"), Some(2)),
        (format!("{header}C\tx\t1\t1\n"), None),
    ];
    for (text, line) in cases {
        let lig = write(dir.path(), "l.tsv", &text);
        let err = load_benchmark(&lig, &sim).unwrap_err();
        match line {
            Some(l) => assert_eq!(parse_line(err), l, "{text:?}"),
            None => assert!(matches!(err, Error::Validation(_))),
        }
    }
}

#[test]
fn fasta_records() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "t.fasta", ">A desc\nMKV\nLAT\n\n>B\nPPQ\n");
    assert_eq!(load_sequences(&p).unwrap(), vec![("A".into(), "MKVLAT".into()), ("B".into(), "PPQ".into())]);
    let p = write(dir.path(), "bad.fasta", "MKV\n>A\nLL\n");
    assert_eq!(parse_line(load_sequences(&p).unwrap_err()), 1);
}

#[test]
fn report_round_trip() {
    let report = EvaluationReport {
        method: "avg_clo(3)".into(),
        per_target: vec![TargetResult { target_id: "A".into(), per_draw_rmse: vec![0.5, 1.5], mean: 1.0, median: 1.0 }],
        aggregate: Some(Aggregate { median: 1.0, mean: 1.0 }),
        failures: vec![Failure { target_id: "B".into(), draw: 1, message: "no model".into() }],
    };
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r.json");
    save_report(&report, &path).unwrap();
    assert_eq!(load_report(&path).unwrap(), report);

    let p = write(dir.path(), "bad.json", "{\n  \"method\": 3\n}");
    assert_eq!(parse_line(load_report(&p).unwrap_err()), 2);
}
