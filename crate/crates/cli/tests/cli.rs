use std::path::PathBuf;
use std::process::{Command, Output};

fn algebras() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../algebras")
}

fn cyclohom(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cyclohom")).args(args).env_remove("CYCLOHOM_THREADS").output().expect("binary runs")
}

fn dual() -> String {
    algebras().join("dual.json").to_string_lossy().into_owned()
}

fn json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).expect("json report")
}

fn row_dims(report: &serde_json::Value, table: usize, row: usize) -> Vec<u64> {
    report["tables"][table]["rows"][row]["entries"]
        .as_array()
        .unwrap()
        .iter()
        .map(|e| e["dim"].as_u64().expect("exact entry"))
        .collect()
}

#[test]
fn hochschild_of_dual_numbers() {
    let out = cyclohom(&["hh", "--algebra", &dual(), "--degrees", "0..3", "--format", "json"]);
    assert_eq!(out.status.code(), Some(0));
    let r = json(&out);
    assert_eq!(r["schema"], 1);
    assert_eq!(row_dims(&r, 0, 0), vec![2, 1, 1, 1]);
    assert_eq!(r["tables"][0]["rows"][0]["entries"][0]["evidence"], "exact");
}

#[test]
fn morita_suite_passes() {
    let out = cyclohom(&["verify", "morita", "--p", "3"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("M_2(F_3)"));
    assert!(!text.contains("FAIL"));
}

#[test]
fn tiny_stage_budget_reports_bounds() {
    let out = cyclohom(&["hpbar", "--algebra", &dual(), "--degrees", "-2..2", "--max-stages", "4", "--format", "json"]);
    assert_eq!(out.status.code(), Some(2));
    let r = json(&out);
    assert_eq!(r["status"], "not_stabilized");
    let entries = r["tables"][0]["rows"][0]["entries"].as_array().unwrap();
    assert!(entries.iter().any(|e| e["evidence"] == "bounds" && e["lower"].as_u64() <= e["upper"].as_u64()));
}

#[test]
fn parse_errors_carry_line_and_column() {
    let dir = std::env::temp_dir().join(format!("cyclohom-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let bad = dir.join("bad.json");
    std::fs::write(&bad, "{\n  \"p\": 3,\n  \"basis\": [\"1\" \"x\"]\n}\n").unwrap();
    let out = cyclohom(&["hh", "--algebra", bad.to_str().unwrap()]);
    std::fs::remove_dir_all(&dir).ok();
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("line 3, column"), "{err}");
}

#[test]
fn unknown_flag_and_missing_file_exit_one() {
    assert_eq!(cyclohom(&["hh", "--bogus"]).status.code(), Some(1));
    assert_eq!(cyclohom(&["hh", "--algebra", "missing.json"]).status.code(), Some(1));
    assert_eq!(cyclohom(&["hh", "--algebra", &dual(), "--p", "5"]).status.code(), Some(1));
    assert_eq!(cyclohom(&["--help"]).status.code(), Some(0));
}

#[test]
fn reports_do_not_depend_on_thread_count() {
    let strip = |o: Output| {
        let mut r = json(&o);
        r.as_object_mut().unwrap().remove("wall_clock_ms");
        serde_json::to_vec(&r).unwrap()
    };
    for args in [
        &["compare", "--algebra", "product:field,field", "--format", "json"][..],
        &["verify", "tensor", "--p", "3", "--seed", "11", "--format", "json"][..],
    ] {
        let one = cyclohom(&[args, &["--threads", "1"]].concat());
        let two = cyclohom(&[args, &["--threads", "2"]].concat());
        assert_eq!(one.status.code(), two.status.code());
        assert_eq!(strip(one), strip(two));
    }
}

#[test]
fn csv_lists_every_entry() {
    let out = cyclohom(&["hc", "--algebra", "field", "--p", "5", "--degrees", "0..3", "--format", "csv"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().filter(|l| l.starts_with("dim,")).count(), 4);
    assert!(text.ends_with("status,,,,ok,,,,\n"));
}

#[test]
fn tate_of_trivial_module() {
    let out = cyclohom(&["tate", "--module", "trivial:3", "--kind", "tate", "--p", "3", "--degrees", "-4..4", "--format", "json"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let r = json(&out);
    assert_eq!(row_dims(&r, 0, 0), vec![1; 9]);
}
