use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use nalgebra::{DMatrix, DVector};
use netred_core::cluster::dissimilarity_position;
use netred_core::gramian::network_gramian;
use netred_core::sys2::validate;
use serde_json::Value;
use tempfile::TempDir;

const FOUR_VERTEX: &str = r#"{
  "schema_version": "1",
  "n": 4,
  "m": 2,
  "masses": [1.0, 2.0, 1.0, 2.0],
  "damping": {
    "kind": "dense",
    "matrix": [[4, -2, 0, -1], [-2, 2, 0, 0], [0, 0, 3.5, -3], [-1, 0, -3, 4]]
  },
  "stiffness_edges": [[1, 2, 1], [1, 3, 2], [1, 4, 1], [2, 3, 1], [2, 4, 1], [3, 4, 2]],
  "input_matrix": [[1, 0], [0, 0], [0, 0], [0, 1]]
}"#;

fn netred(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_netred"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    fs::write(&p, text).unwrap();
    p
}

fn json(p: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(p).unwrap()).unwrap()
}

fn generate(dir: &TempDir, name: &str, n: usize, seed: u64) -> PathBuf {
    let p = dir.path().join(name);
    let out = netred(&[
        "generate",
        "--n",
        &n.to_string(),
        "--seed",
        &seed.to_string(),
        "--out",
        path_str(&p),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    p
}

fn matrix(v: &Value) -> Vec<Vec<f64>> {
    v.as_array()
        .unwrap()
        .iter()
        .map(|r| {
            r.as_array()
                .unwrap()
                .iter()
                .map(|x| x.as_f64().unwrap())
                .collect()
        })
        .collect()
}

#[test]
fn generate_is_valid_and_deterministic() {
    let dir = TempDir::new().unwrap();
    let a = generate(&dir, "a.json", 70, 1);
    let b = generate(&dir, "b.json", 70, 1);
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    let out = netred(&["validate", path_str(&a)]);
    assert_eq!(code(&out), 0);
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), "pass");
    let file = json(&a);
    assert_eq!(file["n"], 70);
    assert_eq!(file["m"], 5);

    let p = dir.path().join("one.json");
    assert_eq!(
        code(&netred(&["generate", "--n", "1", "--out", path_str(&p)])),
        2
    );
}

#[test]
fn full_order_reduction_round_trips_the_file() {
    let dir = TempDir::new().unwrap();
    let g = generate(&dir, "g.json", 12, 3);
    let prefix = dir.path().join("full");
    let out = netred(&[
        "reduce",
        path_str(&g),
        "--r",
        "12",
        "--out",
        path_str(&prefix),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let reduced = dir.path().join("full.network.json");
    assert_eq!(fs::read(&g).unwrap(), fs::read(&reduced).unwrap());
    let report = json(&dir.path().join("full.report.json"));
    assert!(report["error_h2"].as_f64().unwrap() <= 1e-8);
}

#[test]
fn four_vertex_network_with_forced_partition() {
    let dir = TempDir::new().unwrap();
    let net = write(&dir, "four.json", FOUR_VERTEX);
    let part = write(
        &dir,
        "part.json",
        r#"{"schema_version": "1", "n": 4, "clusters": [[1], [2], [3, 4]]}"#,
    );
    let prefix = dir.path().join("fourr");
    let out = netred(&[
        "reduce",
        path_str(&net),
        "--partition",
        path_str(&part),
        "--out",
        path_str(&prefix),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));

    let red = json(&dir.path().join("fourr.network.json"));
    assert_eq!(red["n"], 3);
    assert_eq!(red["masses"], serde_json::json!([1.0, 2.0, 3.0]));
    assert_eq!(
        matrix(&red["damping"]["matrix"]),
        vec![
            vec![4.0, -2.0, -1.0],
            vec![-2.0, 2.0, 0.0],
            vec![-1.0, 0.0, 1.5]
        ]
    );
    assert_eq!(
        red["stiffness_edges"],
        serde_json::json!([[1, 2, 1.0], [1, 3, 3.0], [2, 3, 2.0]])
    );
    assert_eq!(
        matrix(&red["input_matrix"]),
        vec![vec![1.0, 0.0], vec![0.0, 0.0], vec![0.0, 1.0]]
    );

    let report = json(&dir.path().join("fourr.report.json"));
    assert_eq!(report["strategy"], "partition");
    assert!(report["error_h2"].as_f64().unwrap() > 0.0);
    for phase in [
        "gramian",
        "dissimilarity",
        "clustering",
        "projection",
        "error",
        "total",
    ] {
        assert!(report["timings_ms"][phase].as_f64().unwrap() >= 0.0);
    }
    let written = json(&dir.path().join("fourr.partition.json"));
    assert_eq!(written["clusters"], serde_json::json!([[1], [2], [3, 4]]));

    let bad = write(
        &dir,
        "bad.json",
        r#"{"schema_version": "1", "n": 4, "clusters": [[1, 2], [2, 3, 4]]}"#,
    );
    let out = netred(&[
        "reduce",
        path_str(&net),
        "--partition",
        path_str(&bad),
        "--out",
        path_str(&prefix),
    ]);
    assert_eq!(code(&out), 4);
    let out = netred(&[
        "reduce",
        path_str(&net),
        "--partition",
        path_str(&part),
        "--r",
        "2",
        "--out",
        path_str(&prefix),
    ]);
    assert_eq!(code(&out), 2);
}

#[test]
fn sweep_writes_one_row_per_run() {
    let dir = TempDir::new().unwrap();
    let g = generate(&dir, "g.json", 15, 2);
    let csv = dir.path().join("sweep.csv");
    let out = netred(&[
        "sweep",
        path_str(&g),
        "--r",
        "3,7,15",
        "--trials",
        "4",
        "--out",
        path_str(&csv),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("strategy,r,trial,seed,error_h2,wall_ms"));
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 3 * (2 + 4));
    for row in &rows {
        assert_eq!(row.len(), 6);
        let err: f64 = row[4].parse().unwrap();
        let digits = row[4].split('e').next().unwrap().replace(['.', '-'], "");
        assert_eq!(digits.len(), 17);
        if row[1] == "15" {
            assert!(err <= 1e-8);
        } else {
            assert!(err > 0.0);
        }
    }
    assert_eq!(rows.iter().filter(|r| r[0] == "random").count(), 12);

    let again = dir.path().join("again.csv");
    netred(&[
        "sweep",
        path_str(&g),
        "--r",
        "3,7,15",
        "--trials",
        "4",
        "--out",
        path_str(&again),
    ]);
    let strip = |t: &str| -> Vec<String> {
        t.lines()
            .map(|l| l.rsplit_once(',').unwrap().0.to_string())
            .collect()
    };
    assert_eq!(strip(&text), strip(&fs::read_to_string(&again).unwrap()));

    let single = dir.path().join("single.csv");
    let out = netred(&[
        "sweep",
        path_str(&g),
        "--r",
        "15",
        "--trials",
        "1",
        "--out",
        path_str(&single),
    ]);
    assert_eq!(code(&out), 0);
    assert_eq!(fs::read_to_string(&single).unwrap().lines().count(), 1 + 3);
}

#[test]
fn two_vertex_dendrogram() {
    let dir = TempDir::new().unwrap();
    let g = write(
        &dir,
        "two.json",
        r#"{"schema_version": "1", "n": 2, "m": 1, "masses": [1.0, 3.0],
            "damping": {"kind": "edges", "edges": [[1, 2, 0.5]], "alpha": 0.5},
            "stiffness_edges": [[1, 2, 2.0]], "input_matrix": [[1.0], [-0.5]]}"#,
    );
    let tree = dir.path().join("t.nwk");
    let out = netred(&["dendrogram", path_str(&g), "--out", path_str(&tree)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));

    let sys = validate(
        DVector::from_vec(vec![1.0, 3.0]),
        DMatrix::from_row_slice(2, 2, &[1.0, -0.5, -0.5, 2.0]),
        DMatrix::from_row_slice(2, 2, &[2.0, -2.0, -2.0, 2.0]),
        DMatrix::from_row_slice(2, 1, &[1.0, -0.5]),
    )
    .unwrap();
    let h = dissimilarity_position(&sys, &network_gramian(&sys).unwrap())
        .unwrap()
        .get(0, 1);
    assert!(h > 0.0);
    assert_eq!(
        fs::read_to_string(&tree).unwrap().trim(),
        format!("(1:{h},2:{h});")
    );
}

#[test]
fn dendrogram_formats_cover_every_leaf() {
    let dir = TempDir::new().unwrap();
    let g = generate(&dir, "g.json", 20, 5);
    let newick = dir.path().join("t.nwk");
    let dot = dir.path().join("t.dot");
    assert_eq!(
        code(&netred(&[
            "dendrogram",
            path_str(&g),
            "--out",
            path_str(&newick)
        ])),
        0
    );
    assert_eq!(
        code(&netred(&[
            "dendrogram",
            path_str(&g),
            "--format",
            "dot",
            "--variant",
            "velocity",
            "--out",
            path_str(&dot)
        ])),
        0
    );

    let text = fs::read_to_string(&newick).unwrap();
    assert!(text.trim_end().ends_with(';'));
    let mut leaves: Vec<usize> = text
        .split(['(', ')', ',', ';'])
        .filter_map(|tok| tok.split(':').next().filter(|s| !s.is_empty()))
        .filter_map(|s| s.trim().parse().ok())
        .collect();
    leaves.sort_unstable();
    assert_eq!(leaves, (1..=20).collect::<Vec<_>>());
    let lengths: Vec<f64> = text
        .split(':')
        .skip(1)
        .map(|s| s.split([',', ')']).next().unwrap().parse().unwrap())
        .collect();
    assert_eq!(lengths.len(), 2 * 19);
    assert!(lengths.iter().all(|&b| b >= 0.0));

    let text = fs::read_to_string(&dot).unwrap();
    let heights: Vec<f64> = text
        .lines()
        .filter(|l| l.contains("[label=") && !l.contains("shape=box"))
        .map(|l| l.split('"').nth(1).unwrap().parse().unwrap())
        .collect();
    assert_eq!(heights.len(), 19);
    assert!(heights.windows(2).all(|w| w[0] <= w[1]));
    assert_eq!(text.lines().filter(|l| l.contains("shape=box")).count(), 20);

    assert_eq!(
        code(&netred(&[
            "dendrogram",
            path_str(&g),
            "--format",
            "svg",
            "--out",
            path_str(&dot)
        ])),
        2
    );
}

#[test]
fn validate_reports_clauses_and_exit_codes() {
    let dir = TempDir::new().unwrap();
    let good = write(&dir, "four.json", FOUR_VERTEX);
    assert_eq!(code(&netred(&["validate", path_str(&good)])), 0);

    let negated = write(
        &dir,
        "neg.json",
        &FOUR_VERTEX.replace("[1.0, 2.0, 1.0, 2.0]", "[1.0, -2.0, 1.0, 2.0]"),
    );
    let out = netred(&["validate", path_str(&negated)]);
    assert_eq!(code(&out), 4);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(
        stdout.contains("[mass] mass 2 is not positive (-2)"),
        "{stdout}"
    );

    let positive = FOUR_VERTEX.replace("[3, 4, 2]", "[3, 4, -2]");
    let out = netred(&["validate", path_str(&write(&dir, "pos.json", &positive))]);
    assert_eq!(code(&out), 4);
    assert!(String::from_utf8_lossy(&out.stdout).contains("[stiffness]"));

    let truncated = write(&dir, "cut.json", &FOUR_VERTEX[..FOUR_VERTEX.len() / 2]);
    assert_eq!(code(&netred(&["validate", path_str(&truncated)])), 3);
    let shape = write(
        &dir,
        "shape.json",
        &FOUR_VERTEX.replace("\"n\": 4", "\"n\": 5"),
    );
    assert_eq!(code(&netred(&["validate", path_str(&shape)])), 3);

    let missing = dir.path().join("missing.json");
    assert_eq!(code(&netred(&["validate", path_str(&missing)])), 1);
    assert_eq!(
        code(&netred(&[
            "reduce",
            path_str(&negated),
            "--r",
            "2",
            "--out",
            "x"
        ])),
        4
    );
    assert_eq!(code(&netred(&["frobnicate"])), 2);
}
