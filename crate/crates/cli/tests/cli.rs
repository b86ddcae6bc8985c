use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use trendopt_cli::DesignDocument;

fn trendopt(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_trendopt"))
        .args(args)
        .env_remove("TRENDOPT_ORACLE_BUDGET")
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn json(out: &Output) -> Value {
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).unwrap()
}

const TABLE1_CSV: &str = "\
order,0:1,0.025:1,0.125:1,0.25:1,0.25:0.5,0.25:0.1
pi_0,71,73,77,83,100,100
pi_1,97,98,100,100,98,86
pi_2,100,100,95,83,80,69
";

#[test]
fn table1_golden_csv() {
    let out = trendopt(&[
        "efficiency",
        "--v",
        "7",
        "--k",
        "4",
        "--table1",
        "--format",
        "csv",
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout(&out), TABLE1_CSV);
}

#[test]
fn custom_grid_matches_table_columns() {
    let out = trendopt(&[
        "efficiency",
        "--v",
        "7",
        "--k",
        "4",
        "--grid",
        "1/40:1,10/40:1/2",
    ]);
    let j = json(&out);
    assert_eq!(
        j["percent"],
        serde_json::json!([[73, 100], [98, 98], [100, 80]])
    );
    assert_eq!(j["rows"], serde_json::json!(["pi_0", "pi_1", "pi_2"]));
    assert_eq!(j["breakpoints"][0]["upper"], serde_json::json!(0.05));
    assert_eq!(j["breakpoints"][2]["upper"], serde_json::json!("inf"));
}

#[test]
fn efficiency_needs_a_grid() {
    let out = trendopt(&["efficiency", "--v", "7", "--k", "4"]);
    assert_eq!(out.status.code(), Some(1));
    let out = trendopt(&[
        "efficiency",
        "--v",
        "7",
        "--k",
        "4",
        "--table1",
        "--grid",
        "0:1",
    ]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn plot_data_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("curves.dat");
    let out = trendopt(&[
        "efficiency",
        "--v",
        "7",
        "--k",
        "4",
        "--table1",
        "--points",
        "11",
        "--plot-data",
        path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let text = std::fs::read_to_string(&path).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 13);
    assert!(lines[1].starts_with("# lambda0/lambda1 pi_0 pi_1 pi_2"));
    assert_eq!(lines[2].split_whitespace().count(), 4);
}

#[test]
fn design_uses_pi2_without_block_variance() {
    let out = trendopt(&[
        "design",
        "--v",
        "7",
        "--k",
        "4",
        "--b",
        "21",
        "--lambda0",
        "0",
        "--lambda1",
        "1",
    ]);
    let j = json(&out);
    assert_eq!(j["order"], serde_json::json!([1, 2, 2, 1]));
    assert_eq!(j["certificate"]["order_kind"], "pi_2");
    assert_eq!(j["certificate"]["optimal"], true);
    assert_eq!(j["certificate"]["trace"], serde_json::json!(72.0));
    assert_eq!(j["schema_version"], "1");
}

#[test]
fn design_csv_is_k_rows_of_b_labels() {
    let out = trendopt(&[
        "design",
        "--v",
        "7",
        "--k",
        "4",
        "--b",
        "21",
        "--lambda0",
        "0",
        "--lambda1",
        "1",
        "--format",
        "csv",
    ]);
    assert!(out.status.success());
    let text = stdout(&out);
    let rows: Vec<Vec<usize>> = text
        .lines()
        .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 4);
    assert!(rows.iter().all(|r| r.len() == 21));
    assert_eq!(rows[0], rows[3]);
    assert_eq!(rows[1], rows[2]);
    assert_eq!((rows[0][0], rows[1][0]), (1, 2));
}

#[test]
fn infeasible_block_count_reports_smallest_b() {
    let out = trendopt(&[
        "design",
        "--v",
        "7",
        "--k",
        "4",
        "--b",
        "10",
        "--lambda0",
        "0",
        "--lambda1",
        "1",
    ]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("smallest feasible b: 21"), "{err}");
    let out = trendopt(&["sba", "--v", "5", "--kstar", "3", "--b", "7"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn invalid_inputs_exit_one() {
    for args in [
        vec![
            "design",
            "--v",
            "7",
            "--k",
            "4",
            "--b",
            "21",
            "--lambda0",
            "0.3",
            "--lambda1",
            "1",
        ],
        vec![
            "design",
            "--v",
            "7",
            "--k",
            "4",
            "--b",
            "21",
            "--lambda0",
            "0",
        ],
        vec!["order", "--v", "7", "--k", "4"],
        vec![
            "order",
            "--v",
            "7",
            "--k",
            "4",
            "--lambda0",
            "abc",
            "--lambda1",
            "1",
        ],
        vec!["order", "--v", "7", "--k", "4", "--frobnicate"],
        vec!["nonsense"],
        vec![
            "order",
            "--v",
            "7",
            "--k",
            "4",
            "--lambda0",
            "0",
            "--lambda1",
            "1",
            "--format",
            "xml",
        ],
    ] {
        let out = trendopt(&args);
        assert_eq!(out.status.code(), Some(1), "{args:?}");
        assert!(!out.stderr.is_empty());
    }
    assert_eq!(trendopt(&["--help"]).status.code(), Some(0));
    assert_eq!(trendopt(&["--version"]).status.code(), Some(0));
}

#[test]
fn variance_components_with_infinity() {
    let out = trendopt(&[
        "order",
        "--v",
        "7",
        "--k",
        "4",
        "--sigma-beta2",
        "inf",
        "--sigma-theta2",
        "inf",
    ]);
    let j = json(&out);
    assert_eq!(j["lambda0"], serde_json::json!(0.25));
    assert_eq!(j["lambda1"], serde_json::json!(1.0));
    assert_eq!(j["kind"], "pi_1");

    let agree = trendopt(&[
        "order",
        "--v",
        "7",
        "--k",
        "4",
        "--sigma-beta2",
        "1",
        "--sigma-theta2",
        "1",
        "--lambda0",
        "0.2",
        "--lambda1",
        "0.5",
    ]);
    assert!(agree.status.success());
    let clash = trendopt(&[
        "order",
        "--v",
        "7",
        "--k",
        "4",
        "--sigma-beta2",
        "1",
        "--sigma-theta2",
        "1",
        "--lambda0",
        "0.2",
        "--lambda1",
        "0.5000001",
    ]);
    assert_eq!(clash.status.code(), Some(1));
}

#[test]
fn order_reports_ntf_with_trend_loadings() {
    let out = trendopt(&[
        "order",
        "--v",
        "3",
        "--k",
        "8",
        "--lambda0",
        "0.125",
        "--lambda1",
        "1",
    ]);
    let j = json(&out);
    assert_eq!(j["kind"], "pi_NTF");
    let h: Vec<f64> = serde_json::from_value(j["stats"]["h"].clone()).unwrap();
    let n: Vec<usize> = serde_json::from_value(j["stats"]["n"].clone()).unwrap();
    let half = 1.0 / 168f64.sqrt();
    for (n, h) in n.iter().zip(&h) {
        let want = if n % 2 == 1 { half } else { 0.0 };
        assert!((h.abs() - want).abs() < 1e-11);
    }
}

#[test]
fn round_trip_through_analyze() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("design.json");
    let p = path.to_str().unwrap();
    let out = trendopt(&[
        "design",
        "--v",
        "5",
        "--k",
        "7",
        "--b",
        "10",
        "--sigma-eps2",
        "2",
        "--sigma-beta2",
        "1",
        "--sigma-theta2",
        "3",
        "--output",
        p,
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let doc: DesignDocument =
        serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    doc.validate().unwrap();
    assert!(doc.variance_components.is_some());
    assert_eq!(doc.lambda0, 1.0 / 9.0);

    let reencoded: DesignDocument =
        serde_json::from_str(&serde_json::to_string(&doc).unwrap()).unwrap();
    assert_eq!(reencoded, doc);

    let analyzed = json(&trendopt(&["analyze", "--design", p]));
    let built = doc.certificate.as_ref().unwrap()["trace"].as_f64().unwrap();
    let again = analyzed["trace"].as_f64().unwrap();
    assert!((built - again).abs() <= 1e-12);
    assert_eq!(analyzed["completely_symmetric"], true);

    let verified = json(&trendopt(&["verify", "--design", p]));
    assert_eq!(verified["optimal"], true);
}

#[test]
fn analyze_csv_cells() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cells.csv");
    std::fs::write(&path, "1,2,3\n2,3,1\n3,1,2\n").unwrap();
    let p = path.to_str().unwrap();
    let j = json(&trendopt(&[
        "analyze",
        "--design",
        p,
        "--lambda0",
        "0",
        "--lambda1",
        "1",
    ]));
    assert_eq!(j["v"], 3);
    assert_eq!(j["trace"], serde_json::json!(3.0));
    let missing = trendopt(&["analyze", "--design", p]);
    assert_eq!(missing.status.code(), Some(1));
    let absent = trendopt(&["analyze", "--design", "/nonexistent/x.json"]);
    assert_eq!(absent.status.code(), Some(1));
}

#[test]
fn output_is_deterministic() {
    let args = [
        "design",
        "--v",
        "5",
        "--k",
        "4",
        "--b",
        "10",
        "--lambda0",
        "1/10",
        "--lambda1",
        "1/3",
    ];
    let a = trendopt(&args);
    let b = trendopt(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let text = stdout(&a);
    let j: Value = serde_json::from_str(&text).unwrap();
    let trace = j["certificate"]["trace"].as_f64().unwrap();
    assert_eq!(
        format!("{trace}"),
        format!("{}", format!("{trace:.11e}").parse::<f64>().unwrap())
    );
    assert_eq!(j["lambda1"].as_f64().unwrap(), 1.0 / 3.0);
}

#[test]
fn verify_exhaustive_and_budget() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("d.json");
    let p = path.to_str().unwrap();
    let built = trendopt(&[
        "design",
        "--v",
        "3",
        "--k",
        "3",
        "--b",
        "3",
        "--lambda0",
        "0.1",
        "--lambda1",
        "0.5",
        "-o",
        p,
    ]);
    assert!(built.status.success());
    let j = json(&trendopt(&["verify", "--design", p, "--exhaustive"]));
    assert_eq!(j["matches_enumeration"], true);
    assert_eq!(j["exhaustive"]["designs"], 19683);

    let out = trendopt(&["verify", "--design", p, "--exhaustive", "--budget", "100"]);
    assert_eq!(out.status.code(), Some(3));
    let out = Command::new(env!("CARGO_BIN_EXE_trendopt"))
        .args(["verify", "--design", p, "--exhaustive"])
        .env("TRENDOPT_ORACLE_BUDGET", "100")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn oracle_agrees_with_formula() {
    let j = json(&trendopt(&[
        "oracle",
        "--v",
        "3",
        "--k",
        "6",
        "--lambda0",
        "0.05",
        "--lambda1",
        "0.7",
    ]));
    assert_eq!(j["agrees"], true);
    assert_eq!(j["evaluated"], "729");
    let csv = stdout(&trendopt(&[
        "oracle",
        "--v",
        "3",
        "--k",
        "6",
        "--lambda0",
        "0.05",
        "--lambda1",
        "0.7",
        "--format",
        "csv",
    ]));
    assert!(csv.starts_with("key,value\n"));
    assert!(csv.contains("agrees,true"));
    let over = trendopt(&[
        "oracle",
        "--v",
        "5",
        "--k",
        "12",
        "--lambda0",
        "0",
        "--lambda1",
        "1",
    ]);
    assert_eq!(over.status.code(), Some(3));
}

#[test]
fn sba_output() {
    let j = json(&trendopt(&["sba", "--v", "5", "--kstar", "3", "--b", "10"]));
    assert_eq!(j["report"]["is_sba"], true);
    assert_eq!(j["rows"].as_array().unwrap().len(), 3);
    let csv = stdout(&trendopt(&[
        "sba", "--v", "3", "--kstar", "3", "--b", "3", "--format", "csv",
    ]));
    assert_eq!(csv.lines().count(), 3);
}

#[test]
fn schema_file_is_valid_json() {
    let schema =
        Path::new(env!("CARGO_MANIFEST_DIR")).join("../../docs/design-document.schema.json");
    let text = std::fs::read_to_string(schema).unwrap();
    let v: Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["properties"]["schema_version"]["const"], "1");
}
