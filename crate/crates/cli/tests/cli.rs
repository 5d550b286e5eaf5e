use std::process::Command;

use serde_json::Value;
use succession::{parse_prior, predictive_after_run, predictive_table, simulate_conditional, SimulationConfig};
use succession_cli::run;

fn invoke(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("succession").chain(args.iter().copied());
    let code = run(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn json(args: &[&str]) -> Value {
    let mut full = vec!["--format", "json"];
    full.extend_from_slice(args);
    let (code, out, err) = invoke(&full);
    assert_eq!(code, 0, "{err}");
    serde_json::from_str(&out).expect("single JSON document")
}

fn assert_schema(doc: &Value) {
    let obj = doc.as_object().expect("object");
    for key in [
        "command",
        "prior",
        "n",
        "inputs",
        "value",
        "decimal",
        "exact",
        "method",
        "error_bound",
    ] {
        assert!(obj.contains_key(key), "missing {key} in {doc}");
    }
    assert!(doc["command"].is_string());
    assert!(doc["prior"].is_string());
    assert!(doc["n"].is_u64());
    assert!(doc["inputs"].is_object());
    assert!(doc["value"].is_f64());
    assert!(doc["method"].is_string());
    assert!(doc["error_bound"].as_f64().unwrap() >= 0.0);
    match &doc["exact"] {
        Value::Null => {}
        Value::String(s) => {
            let (p, q) = s.split_once('/').expect("p/q");
            assert!(p.parse::<u128>().is_ok() && q.parse::<u128>().is_ok(), "{s}");
        }
        other => panic!("exact must be null or a string, got {other}"),
    }
}

#[test]
fn sunrise_text_output() {
    let (code, out, _) = invoke(&["sunrise"]);
    assert_eq!(code, 0);
    assert!(out.contains("0.99999945"));
    assert!(out.contains("1826214/1826215"));
}

#[test]
fn predict_point_mass() {
    let (code, out, _) = invoke(&["predict", "--prior", "point:0.5", "--successes", "7"]);
    assert_eq!(code, 0);
    assert!(out.contains("0.50000000"), "{out}");
}

#[test]
fn two_coin_json_matches_library_bit_for_bit() {
    let doc = json(&["predict", "--prior", "discrete:0.9@0.5,0.1@0.5", "--successes", "5"]);
    assert_schema(&doc);
    assert_eq!(doc["exact"], "265721/295250");
    let lib = predictive_after_run(&parse_prior("discrete:0.9@0.5,0.1@0.5").unwrap(), 5).unwrap();
    assert_eq!(doc["value"].as_f64().unwrap().to_bits(), lib.value.to_bits());
    assert_eq!(doc["decimal"], "0.89998645");
}

#[test]
fn every_command_emits_the_schema() {
    let commands: [&[&str]; 8] = [
        &["predict", "--prior", "beta:2,3", "--successes", "4", "--failures", "2"],
        &["sunrise", "--days", "10"],
        &["table", "--prior", "uniform", "--n-max", "5"],
        &["ratio", "--prior", "beta:2,1", "--n", "100"],
        &[
            "simulate",
            "--prior",
            "uniform",
            "--successes",
            "3",
            "--trials",
            "20000",
            "--seed",
            "1",
        ],
        &[
            "simulate",
            "--prior",
            "uniform",
            "--successes",
            "3",
            "--trials",
            "20000",
            "--estimator",
            "weighted",
        ],
        &["bruteforce", "--prior", "discrete:1@1,0@1", "--successes", "1"],
        &["turkey", "--feed-days", "20", "--prior", "uniform"],
    ];
    for args in commands {
        let doc = json(args);
        assert_schema(&doc);
        assert_eq!(doc["command"], args[0]);
    }
}

#[test]
fn simulate_json_carries_the_estimate() {
    let doc = json(&[
        "simulate",
        "--prior",
        "point:1/2",
        "--successes",
        "0",
        "--trials",
        "5000",
        "--seed",
        "42",
    ]);
    let est = &doc["estimate"];
    assert_eq!(est["total_trials"], 5000);
    assert_eq!(est["estimator"], "rejection");
    let config = SimulationConfig::new(parse_prior("point:1/2").unwrap(), 0, 5000, 42).unwrap();
    let lib = simulate_conditional(&config).unwrap();
    assert_eq!(est["p_hat"].as_f64().unwrap().to_bits(), lib.p_hat.to_bits());
    assert_eq!(est["stderr"].as_f64().unwrap().to_bits(), lib.stderr.to_bits());
}

#[test]
fn turkey_json_has_rows_and_scenario() {
    let doc = json(&["turkey", "--feed-days", "1000", "--prior", "uniform"]);
    assert_eq!(doc["exact"], "1000/1001");
    let rows = doc["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 1000);
    assert_eq!(rows[999]["fed"], false);
    assert_eq!(rows[0]["fed"], true);
    assert!(doc["scenario"]["cumulative_log_loss"].as_f64().unwrap() > 0.0);
}

#[test]
fn table_csv_round_trips() {
    let (code, out, _) = invoke(&[
        "--format",
        "csv",
        "table",
        "--prior",
        "discrete:0.9@0.5,0.1@0.5",
        "--n-max",
        "12",
    ]);
    assert_eq!(code, 0);
    let mut reader = csv::Reader::from_reader(out.as_bytes());
    let headers = reader.headers().unwrap().clone();
    assert_eq!(
        &headers,
        vec!["n", "value", "decimal", "exact", "method", "error_bound"]
    );
    let lib = predictive_table(&parse_prior("discrete:0.9@0.5,0.1@0.5").unwrap(), 12).unwrap();
    let records: Vec<_> = reader.records().map(Result::unwrap).collect();
    assert_eq!(records.len(), lib.rows.len());
    for (rec, (n, r)) in records.iter().zip(&lib.rows) {
        assert_eq!(rec[0].parse::<u64>().unwrap(), *n);
        assert_eq!(rec[1].parse::<f64>().unwrap().to_bits(), r.value.to_bits());
        let exact = r.exact.as_ref().unwrap();
        assert_eq!(rec[3], format!("{}/{}", exact.numer(), exact.denom()));
    }
}

#[test]
fn single_record_csv_has_a_header() {
    let (code, out, _) = invoke(&["--format", "csv", "--digits", "3", "sunrise", "--days", "1"]);
    assert_eq!(code, 0);
    let mut reader = csv::Reader::from_reader(out.as_bytes());
    assert_eq!(&reader.headers().unwrap()[0], "command");
    let rec = reader.records().next().unwrap().unwrap();
    assert_eq!(&rec[4], "0.667");
    assert_eq!(&rec[5], "2/3");
}

#[test]
fn digits_round_half_even() {
    // 1/8 = 0.125 exactly: ties go to the even digit.
    let (_, out, _) = invoke(&["--digits", "2", "predict", "--prior", "point:1/8", "--successes", "1"]);
    assert!(out.contains("0.12\n"), "{out}");
    let (_, out, _) = invoke(&["--digits", "2", "predict", "--prior", "point:3/8", "--successes", "1"]);
    assert!(out.contains("0.38\n"), "{out}");
}

#[test]
fn exit_codes() {
    assert_eq!(invoke(&["predict", "--prior", "point:0", "--successes", "1"]).0, 3);
    assert_eq!(invoke(&["turkey", "--feed-days", "2", "--prior", "point:1"]).0, 3);
    assert_eq!(
        invoke(&["bruteforce", "--prior", "discrete:1/2@1", "--successes", "21"]).0,
        4
    );
    assert_eq!(
        invoke(&["simulate", "--prior", "point:0", "--successes", "1", "--trials", "100"]).0,
        5
    );
    assert_eq!(invoke(&["predict", "--prior", "beta:0,1", "--successes", "1"]).0, 2);
    assert_eq!(invoke(&["predict", "--successes", "x"]).0, 2);
    assert_eq!(invoke(&["frobnicate"]).0, 2);
    assert_eq!(invoke(&["ratio", "--prior", "point:1/2", "--n", "3"]).0, 2);
    let (code, out, _) = invoke(&["--help"]);
    assert_eq!(code, 0);
    assert!(out.contains("sunrise"));
}

fn binary(args: &[&str], envs: &[(&str, &str)]) -> std::process::Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_succession"));
    cmd.args(args);
    for (k, v) in envs {
        cmd.env(k, v);
    }
    cmd.output().unwrap()
}

#[test]
fn errors_go_to_stderr() {
    let out = binary(&["predict", "--prior", "point:0", "--successes", "1"], &[]);
    assert_eq!(out.status.code(), Some(3));
    assert!(out.stdout.is_empty());
    assert!(String::from_utf8_lossy(&out.stderr).contains("probability zero"));
}

#[test]
fn tolerance_override_from_environment() {
    let args = [
        "--format",
        "json",
        "predict",
        "--prior",
        "table:0:1,0.5:3,1:0",
        "--successes",
        "40",
    ];
    let tight = binary(&args, &[]);
    let loose = binary(&args, &[("SUCCESSION_TOL", "1e-3")]);
    assert!(tight.status.success() && loose.status.success());
    let tight: Value = serde_json::from_slice(&tight.stdout).unwrap();
    let loose: Value = serde_json::from_slice(&loose.stdout).unwrap();
    assert!(tight["error_bound"].as_f64().unwrap() <= 1e-10);
    assert!(loose["error_bound"].as_f64().unwrap() <= 1e-3);
    assert!((tight["value"].as_f64().unwrap() - loose["value"].as_f64().unwrap()).abs() <= 1e-3);

    let bad = binary(&args, &[("SUCCESSION_TOL", "fast")]);
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn seed_determines_simulate_output() {
    let args = [
        "--format",
        "json",
        "simulate",
        "--prior",
        "beta:2,2",
        "--successes",
        "4",
        "--trials",
        "100000",
        "--seed",
        "99",
    ];
    let reference = binary(&args, &[("RAYON_NUM_THREADS", "1")]);
    for threads in ["1", "3", "8"] {
        let again = binary(&args, &[("RAYON_NUM_THREADS", threads)]);
        assert_eq!(again.stdout, reference.stdout, "threads={threads}");
    }
    let mut other = args;
    other[10] = "100";
    assert_ne!(binary(&other, &[]).stdout, reference.stdout);
}
