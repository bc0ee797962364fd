//! Acceptance criteria C1–C10. Each test prints one `C<n> PASS|FAIL` line.
//!
//! Every quantity is an exact dimension over a prime field, so the only
//! tolerance is equality.

use std::sync::Mutex;

use cyclohom_cli::args::Suite;
use cyclohom_cli::report::{Body, Outcome, Table};
use cyclohom_cli::suites::{run_suite, SuiteConfig};

/// Allowed difference between two dimensions.
const DIM_TOLERANCE: usize = 0;
/// Wall-clock limit of a single criterion.
const TIME_LIMIT_SECS: u64 = 180;

/// The heavy criteria each use a few GB; run one at a time.
static SERIAL: Mutex<()> = Mutex::new(());

fn suite(s: Suite, p: Option<u32>) -> Body {
    run_suite(s, &SuiteConfig { p, ..SuiteConfig::default() }).expect("suite runs")
}

#[allow(clippy::absurd_extreme_comparisons)]
fn close(x: usize, y: usize) -> bool {
    x.abs_diff(y) <= DIM_TOLERANCE
}

fn dims(t: &Table, label: &str) -> Option<Vec<usize>> {
    t.row(label)?.entries.iter().map(|e| e.dim()).collect()
}

/// Prints the verdict line and fails the test on anything but a pass.
fn verdict(id: u32, title: &str, bodies: &[Body], extra: &[(String, bool)], start: std::time::Instant) {
    let secs = start.elapsed().as_secs();
    let mut problems: Vec<String> = bodies
        .iter()
        .flat_map(|b| &b.checks)
        .filter(|c| c.outcome != Outcome::Pass)
        .map(|c| format!("{:?}: {} {:?}", c.outcome, c.name, c.detail))
        .collect();
    problems.extend(extra.iter().filter(|(_, ok)| !ok).map(|(n, _)| n.clone()));
    if secs > TIME_LIMIT_SECS {
        problems.push(format!("took {secs} s, limit {TIME_LIMIT_SECS} s"));
    }
    let checks: usize = bodies.iter().flat_map(|b| &b.checks).map(|c| c.checked).sum::<usize>() + extra.len();
    let word = if problems.is_empty() { "PASS" } else { "FAIL" };
    println!("C{id} {word} {title} ({checks} identities, {secs} s)");
    for p in &problems {
        println!("    {p}");
    }
    assert!(problems.is_empty(), "C{id} failed");
}

#[test]
fn c01_structural_relations() {
    let _g = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let start = std::time::Instant::now();
    let b = suite(Suite::Relations, None);
    let extra = vec![("relations suite ran checks".to_string(), b.checks.len() > 100)];
    verdict(1, "structural relations on the corpus over F_2, F_3, F_5", &[b], &extra, start);
}

#[test]
fn c02_tate() {
    let _g = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let start = std::time::Instant::now();
    let b = suite(Suite::Tate, None);
    verdict(2, "Tate homology of cyclic groups against the brute-force oracle", &[b], &[], start);
}

#[test]
fn c03_tensor_power() {
    let _g = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let start = std::time::Instant::now();
    let b = suite(Suite::Tensor, None);
    let extra = vec![(
        "50 samples per prime".to_string(),
        b.checks.iter().filter(|c| c.name.contains("is tight")).all(|c| c.checked == 50),
    )];
    verdict(3, "tensor powers over F_3 and F_5", &[b], &extra, start);
}

#[test]
fn c04_hochschild_oracle() {
    let _g = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let start = std::time::Instant::now();
    let b = suite(Suite::Hochschild, None);
    let t = b.table("HH").expect("HH table");
    // values of the bar-complex oracle
    let frozen: [(&str, [usize; 5]); 4] = [
        ("F_3", [1, 0, 0, 0, 0]),
        ("F_3[x]/x^2", [2, 1, 1, 1, 1]),
        ("F_2[x]/x^2", [2, 2, 2, 2, 2]),
        ("M_2(F_5)", [1, 0, 0, 0, 0]),
    ];
    let extra: Vec<(String, bool)> = frozen
        .iter()
        .map(|(label, want)| {
            let got = dims(t, label);
            let ok = got.as_ref().is_some_and(|g| g.iter().zip(want).all(|(&x, &y)| close(x, y)));
            (format!("HH({label}) = {want:?}, got {got:?}"), ok)
        })
        .collect();
    verdict(4, "lattice HH equals the bar-complex oracle in degrees 0..4", &[b], &extra, start);
}

#[test]
fn c05_morita() {
    let _g = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let start = std::time::Instant::now();
    let b = suite(Suite::Morita, Some(3));
    let t = b.table("HP-bar").expect("HP-bar table");
    let (k, m) = (dims(t, "F_3"), dims(t, "M_2(F_3)"));
    let ok = matches!((&k, &m), (Some(k), Some(m)) if k.iter().zip(m).all(|(&x, &y)| close(x, y)));
    let certified = t.rows.iter().flat_map(|r| &r.entries).all(|e| matches!(e, cyclohom_cli::report::Entry::Certified { .. }));
    let extra = vec![
        (format!("certified HP-bar(M_2(F_3)) {m:?} = HP-bar(F_3) {k:?}"), ok),
        ("every entry carries a certificate".to_string(), certified),
        ("within 12 columns".to_string(), b.certificates.iter().all(|c| c.stage + c.steps + c.lookahead <= 12)),
    ];
    verdict(5, "Morita invariance of HP-bar on [-2,2]", &[b], &extra, start);
}

#[test]
fn c06_comparison() {
    let _g = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let start = std::time::Instant::now();
    let b = suite(Suite::Comparison, Some(3));
    let maps = b.checks.iter().filter(|c| c.name.ends_with(" is an isomorphism")).count();
    // five ungraded algebras with l, r, R and exterior_dg with r, R
    let extra = vec![(format!("{maps} of 17 comparison maps checked"), maps == 17)];
    verdict(6, "comparison maps l, r, R are isomorphisms on [-2,2]", &[b], &extra, start);
}

#[test]
fn c07_ground_field() {
    let _g = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let start = std::time::Instant::now();
    let b = suite(Suite::Ground, None);
    let t = b.table("HP of the ground field").expect("HP table");
    let extra: Vec<(String, bool)> = [2, 3, 5]
        .iter()
        .map(|p| {
            let got = dims(t, &format!("F_{p}"));
            let ok = got.as_ref().is_some_and(|g| g.iter().zip([1, 0, 1, 0, 1]).all(|(&x, y)| close(x, y)));
            (format!("HP(F_{p}) = [1, 0, 1, 0, 1], got {got:?}"), ok)
        })
        .collect();
    verdict(7, "HP of F_p and the alternating lattice multipliers", &[b], &extra, start);
}

#[test]
fn c08_edgewise() {
    let _g = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let start = std::time::Instant::now();
    let b = suite(Suite::Edgewise, Some(3));
    let t = b.table("HC").expect("HC table");
    let extra: Vec<(String, bool)> = ["F_3", "F_3[x]/x^2"]
        .iter()
        .map(|a| {
            let (x, y) = (dims(t, a), dims(t, &format!("i_3^* {a}")));
            let ok = matches!((&x, &y), (Some(x), Some(y)) if x.len() == 4 && x.iter().zip(y).all(|(&u, &v)| close(u, v)));
            (format!("HC(i_3^* {a}) {y:?} = HC({a}) {x:?}"), ok)
        })
        .collect();
    verdict(8, "HC of the 3-fold edgewise subdivision in degrees 0..3", &[b], &extra, start);
}

#[test]
fn c09_conjugate() {
    let _g = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let start = std::time::Instant::now();
    let b = suite(Suite::Conjugate, Some(3));
    verdict(9, "conjugate spectral sequence against HP-bar", &[b], &[], start);
}

#[test]
fn c10_additivity() {
    let _g = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let start = std::time::Instant::now();
    let b = suite(Suite::Additivity, Some(3));
    let tables = b.tables.len();
    let extra = vec![(format!("{tables} of 9 theories compared"), tables == 9)];
    verdict(10, "every theory of F_3xF_3 is twice that of F_3", &[b], &extra, start);
}
