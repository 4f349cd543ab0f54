use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use hslice_core::cube::{EdgeId, SliceOutcome, Vertex};
use hslice_core::io::parse_collection;
use serde_json::Value;

fn hslice(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hslice"))
        .current_dir(dir)
        .args(args)
        .env_remove("HSLICE_SEED")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn gen_then_verify_levels() {
    let d = tempfile::tempdir().unwrap();
    let o = hslice(
        d.path(),
        &["gen", "--kind", "levels", "--n", "3", "--output", "g"],
    );
    assert_eq!(o.status.code(), Some(0));
    let c = json(&d.path().join("g/collection.json"));
    let b: Vec<&str> = c["hyperplanes"]
        .as_array()
        .unwrap()
        .iter()
        .map(|h| h["b"].as_str().unwrap())
        .collect();
    assert_eq!(b, ["-2", "0", "2"]);
    let o = hslice(
        d.path(),
        &["verify", "--input", "g/collection.json", "--output", "v"],
    );
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).trim(), "12/12 sliced");
    let r = json(&d.path().join("v/report.json"));
    assert_eq!(r["is_cover"], Value::Bool(true));
    assert_eq!(
        fs::read_to_string(d.path().join("v/unsliced.csv")).unwrap(),
        "base_bits_hex,flip_index\n"
    );
    let m = json(&d.path().join("v/manifest.json"));
    assert_eq!(m["subcommand"], "verify");
    assert_eq!(m["seed"], 0);
}

#[test]
fn gen_random_unit_rows() {
    let d = tempfile::tempdir().unwrap();
    let o = hslice(
        d.path(),
        &[
            "gen",
            "--kind",
            "random-unit",
            "--n",
            "8",
            "--k",
            "5",
            "--seed",
            "11",
        ],
    );
    assert_eq!(o.status.code(), Some(0));
    let c = json(&d.path().join("hslice-out/collection.json"));
    let planes = c["hyperplanes"].as_array().unwrap();
    assert_eq!(planes.len(), 5);
    for p in planes {
        let sq: f64 = p["a"]
            .as_array()
            .unwrap()
            .iter()
            .map(|x| x.as_f64().unwrap().powi(2))
            .sum();
        assert!((sq.sqrt() - 1.0).abs() <= 1e-12);
        assert_eq!(p["b"].as_f64(), Some(0.0));
    }
    let o = hslice(d.path(), &["gen", "--kind", "diagonal", "--n", "8"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn witness_finds_unsliced_edge() {
    let d = tempfile::tempdir().unwrap();
    hslice(
        d.path(),
        &[
            "gen",
            "--kind",
            "random-unit",
            "--n",
            "16",
            "--k",
            "1",
            "--seed",
            "3",
            "--output",
            "g",
        ],
    );
    let o = hslice(
        d.path(),
        &[
            "witness",
            "--input",
            "g/collection.json",
            "--output",
            "w",
            "--seed",
            "9",
            "--claims",
            "--trials",
            "500",
        ],
    );
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    assert!(stdout(&o).starts_with("found edge"));
    let r = json(&d.path().join("w/report.json"));
    assert_eq!(r["result"]["status"], "found");
    assert_eq!(r["seed"], 9);
    assert_eq!(r["params"], "paper");
    let edge = &r["result"]["edge"];
    let e = EdgeId::new(
        &Vertex::from_hex(16, edge["base_bits_hex"].as_str().unwrap()).unwrap(),
        edge["flip_index"].as_u64().unwrap() as usize,
    );
    let c = parse_collection(
        &fs::read_to_string(d.path().join("g/collection.json")).unwrap(),
        None,
    )
    .unwrap();
    assert!(c.slices_edge(0, &e).unwrap() != SliceOutcome::Sliced);
    let claims = fs::read_to_string(d.path().join("w/claims.csv")).unwrap();
    assert!(claims.lines().count() >= 2);
}

#[test]
fn lab_bundled_cases() {
    let d = tempfile::tempdir().unwrap();
    let o = hslice(d.path(), &["lab", "--trials", "20000"]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let csv = fs::read_to_string(d.path().join("hslice-out/lab.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().skip(1).collect();
    assert!(rows.len() >= 10);
    assert!(rows.iter().all(|r| !r.ends_with(",fail")));
}

#[test]
fn decompose_and_scales() {
    let d = tempfile::tempdir().unwrap();
    fs::write(d.path().join("m.json"), "[[1, 2, 3, 4], [4, -3, 2, 1]]").unwrap();
    let o = hslice(
        d.path(),
        &["decompose", "--input", "m.json", "--output", "dec"],
    );
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("verification passed"));
    let r = json(&d.path().join("dec/report.json"));
    assert_eq!(r["result"]["k1"], serde_json::json!([0, 1]));

    fs::write(d.path().join("v.json"), "[1000000, 10000, 100, 1]").unwrap();
    let o = hslice(
        d.path(),
        &[
            "scales", "--input", "v.json", "--delta", "1", "--brute", "--output", "sc",
        ],
    );
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).trim(), "4 scales of size >= 1 (optimum 4)");
}

#[test]
fn exit_codes_and_env() {
    let d = tempfile::tempdir().unwrap();
    hslice(
        d.path(),
        &["gen", "--kind", "levels", "--n", "10", "--output", "g"],
    );
    let o = hslice(
        d.path(),
        &["verify", "--input", "g/collection.json", "--cap", "8"],
    );
    assert_eq!(o.status.code(), Some(3));
    let o = hslice(d.path(), &["verify"]);
    assert_eq!(o.status.code(), Some(2));
    let o = hslice(
        d.path(),
        &[
            "witness",
            "--input",
            "g/collection.json",
            "--params",
            "rho0=oops",
        ],
    );
    assert_eq!(o.status.code(), Some(2));
    fs::write(
        d.path().join("bad.json"),
        "{\"n\": 2, \"hyperplanes\": [{\"a\": [1], \"b\": 0}]}",
    )
    .unwrap();
    let o = hslice(d.path(), &["verify", "--input", "bad.json"]);
    assert_eq!(o.status.code(), Some(2));
    let o = hslice(d.path(), &["nonsense"]);
    assert_eq!(o.status.code(), Some(2));

    let o = Command::new(env!("CARGO_BIN_EXE_hslice"))
        .current_dir(d.path())
        .args(["gen", "--kind", "levels", "--n", "4"])
        .env("HSLICE_SEED", "77")
        .env("HSLICE_OUTPUT", "from-env")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(json(&d.path().join("from-env/manifest.json"))["seed"], 77);
}
