use std::process::{Command, Output};

use num_rational::BigRational;
use num_traits::One;

fn qif(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qif-shuffle"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(args: &[&str]) -> String {
    let out = qif(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn field<'a>(text: &'a str, key: &str) -> &'a str {
    text.lines()
        .find_map(|l| l.strip_prefix(key)?.strip_prefix(": "))
        .unwrap_or_else(|| panic!("no {key} in {text}"))
}

fn decimal(text: &str, key: &str) -> f64 {
    let v = field(text, key);
    // Exact values print as "a/b (decimal)".
    let v = v.split_once(" (").map_or(v, |(_, d)| d.trim_end_matches(')'));
    v.parse().unwrap()
}

fn code(args: &[&str]) -> i32 {
    qif(args).status.code().unwrap()
}

#[test]
fn vuln_binary_anchor() {
    let out = stdout(&["vuln", "--mech", "krr-shuffle", "--n", "200", "--k", "2", "--p", "0.9"]);
    assert!((decimal(&out, "posterior_v") - 0.5225).abs() < 5e-4);
    assert_eq!(decimal(&out, "prior_v"), 0.5);
    for key in ["mechanism", "n", "k", "p", "epsilon", "multiplicative_leakage", "additive_leakage"] {
        field(&out, key);
    }
}

#[test]
fn vuln_trivial_shuffle() {
    let out = stdout(&["vuln", "--mech", "shuffle", "--n", "1", "--k", "2"]);
    assert_eq!(decimal(&out, "posterior_v"), 1.0);
}

#[test]
fn vuln_oracle_exact() {
    let out = stdout(&[
        "vuln", "--mech", "krr-shuffle", "--n", "3", "--k", "2", "--p", "0.75", "--method", "oracle", "--exact",
    ]);
    assert!(field(&out, "posterior_v").starts_with("5/8"));
    assert!(field(&out, "multiplicative_leakage").starts_with("5/4"));
    assert!(field(&out, "additive_leakage").starts_with("1/8"));
}

#[test]
fn vuln_methods_agree() {
    let args = |m| ["vuln", "--mech", "krr-shuffle", "--n", "4", "--k", "3", "--p", "3/5", "--method", m, "--exact"];
    let closed = stdout(&args("closed"));
    assert_eq!(field(&closed, "posterior_v"), field(&stdout(&args("sum")), "posterior_v"));
    assert_eq!(field(&closed, "posterior_v"), field(&stdout(&args("oracle")), "posterior_v"));
}

#[test]
fn epsilon_is_accepted() {
    let out = stdout(&["vuln", "--mech", "krr", "--n", "5", "--epsilon", &3f64.ln().to_string()]);
    assert!((decimal(&out, "p") - 0.75).abs() < 1e-12);
    assert!((decimal(&out, "epsilon") - 3f64.ln()).abs() < 1e-9);
}

#[test]
fn exit_codes() {
    assert_eq!(code(&["vuln", "--mech", "krr", "--n", "3", "--p", "0.3"]), 1);
    assert_eq!(code(&["vuln", "--mech", "krr", "--n", "3", "--k", "4", "--p", "1.5"]), 1);
    assert_eq!(code(&["vuln", "--mech", "krr", "--n", "3", "--p", "0.7", "--epsilon", "1"]), 1);
    assert_eq!(code(&["vuln", "--mech", "krr", "--n", "3"]), 1);
    assert_eq!(code(&["vuln", "--mech", "nope", "--n", "3"]), 1);
    assert_eq!(code(&["vuln", "--mech", "shuffle", "--n", "9", "--k", "3", "--method", "oracle"]), 2);
    assert_eq!(code(&["channel", "--kind", "krr", "--n", "30", "--p", "1"]), 2);
    assert_eq!(code(&["channel", "--kind", "krr", "--n", "4", "--p", "1", "--cap", "15"]), 2);
    assert_eq!(code(&["check", "--suite", "nope"]), 1);
    assert_eq!(code(&["--help"]), 0);
}

#[test]
fn abo_examples() {
    let out = stdout(&["abo", "--n", "201", "--p", "0.8", "--known-a", "0"]);
    assert!((decimal(&out, "abo_posterior_v") - 0.52111).abs() < 1e-4);
    let out = stdout(&["abo", "--n", "201", "--p", "1.0", "--known-a", "50"]);
    assert_eq!(decimal(&out, "abo_posterior_v"), 1.0);
    let out = stdout(&["abo", "--n", "1", "--p", "0.8", "--known-a", "0"]);
    assert!(field(&out, "abo_posterior_v").starts_with("4/5"));
    assert_eq!(code(&["abo", "--n", "5", "--p", "0.8", "--known-a", "5"]), 1);
    assert_eq!(code(&["abo", "--n", "5", "--p", "0.8"]), 1);
}

#[test]
fn abo_sweep_csv() {
    let out = stdout(&["abo", "--n", "11", "--p", "1,0.8", "--sweep-known"]);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines[0], "known_a_fraction,p,abo_posterior_v");
    assert_eq!(lines.len(), 1 + 2 * 11);
    assert!(lines[1].starts_with("0,0.8,"));
    assert!(lines[11].starts_with("1,0.8,"));
    assert_eq!(lines[12], "0,1,1");
}

fn csv(text: &str) -> (Vec<String>, Vec<(String, Vec<String>)>) {
    let mut lines = text.lines();
    let header = lines.next().unwrap().split(',').skip(1).map(String::from).collect();
    let rows = lines
        .map(|l| {
            let mut cells = l.split(',').map(String::from);
            (cells.next().unwrap(), cells.collect())
        })
        .collect();
    (header, rows)
}

#[test]
fn channel_reduced_entry() {
    let out = stdout(&["channel", "--kind", "ns-reduced", "--n", "3", "--k", "2", "--p", "0.75", "--exact"]);
    let (header, rows) = csv(&out);
    let col = header.iter().position(|h| h == "a:2b:1").unwrap();
    let (_, aab) = rows.iter().find(|(l, _)| l == "aab").unwrap();
    assert_eq!(aab[col], "33/64");
    let sn = stdout(&["channel", "--kind", "sn-reduced", "--n", "3", "--k", "2", "--p", "0.75", "--exact"]);
    assert_eq!(out, sn);
}

#[test]
fn channel_identity_and_stochastic() {
    let out = stdout(&["channel", "--kind", "shuffle-reduced", "--n", "1", "--k", "2"]);
    assert_eq!(out, "secret,a:1b:0,a:0b:1\na,1,0\nb,0,1\n");
    for kind in ["krr", "ns", "sn", "krr-reduced", "shuffle"] {
        let out = stdout(&["channel", "--kind", kind, "--n", "2", "--k", "3", "--p", "0.5"]);
        let (_, rows) = csv(&out);
        for (label, cells) in rows {
            let sum: BigRational = cells.iter().map(|c| c.parse::<BigRational>().unwrap()).sum();
            assert!(sum.is_one(), "{kind} row {label}");
        }
    }
}

#[test]
fn intro_channels_need_epsilon() {
    let out = stdout(&["channel", "--kind", "intro-mprime", "--n", "3", "--epsilon", "1"]);
    assert_eq!(out.lines().next().unwrap(), "secret,0,1");
    assert_eq!(out.lines().count(), 1 + 8);
    assert_eq!(code(&["channel", "--kind", "intro-m", "--n", "3", "--p", "0.7"]), 1);
}

#[test]
fn sweep_rows_and_order() {
    let out = stdout(&[
        "sweep", "--mech", "shuffle,krr-shuffle", "--n-start", "1", "--n-end", "3", "--p", "0.9,0.6",
    ]);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines[0], "mechanism,n,k,p,method,posterior_v");
    assert_eq!(
        &lines[1..],
        [
            "shuffle,1,2,1,closed,1",
            "shuffle,2,2,1,closed,0.75",
            "shuffle,3,2,1,closed,0.75",
            "krr-shuffle,1,2,0.6,closed,0.6",
            "krr-shuffle,1,2,0.9,closed,0.9",
            "krr-shuffle,2,2,0.6,closed,0.55",
            "krr-shuffle,2,2,0.9,closed,0.7",
            "krr-shuffle,3,2,0.6,closed,0.55",
            "krr-shuffle,3,2,0.9,closed,0.7",
        ]
    );
}

#[test]
fn sweep_empty_range_is_header_only() {
    let out = stdout(&["sweep", "--mech", "krr", "--n-start", "10", "--n-end", "1", "--p", "0.9"]);
    assert_eq!(out, "mechanism,n,k,p,method,posterior_v\n");
}

#[test]
fn sweep_general_k_anchors() {
    let out = stdout(&[
        "sweep", "--mech", "shuffle", "--k", "3", "--n-start", "100", "--n-end", "1000", "--n-step", "900",
    ]);
    let values: Vec<f64> = out
        .lines()
        .skip(1)
        .map(|l| l.rsplit(',').next().unwrap().parse().unwrap())
        .collect();
    assert_eq!(values.len(), 2);
    assert!((values[0] - 0.3826).abs() < 5e-4, "{}", values[0]);
    assert!((values[1] - 0.3488).abs() < 5e-4, "{}", values[1]);
}

#[test]
fn sweep_output_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let path = dir.path().join(name);
        let path_str = path.to_str().unwrap();
        stdout(&[
            "sweep", "--exact", "--mech", "krr,krr-shuffle,shuffle", "--k", "3", "--n-start", "1", "--n-end", "12",
            "--p", "1/3,0.5,0.9,1", "--out", path_str,
        ]);
        std::fs::read(&path).unwrap()
    };
    let a = run("a.csv");
    assert_eq!(a, run("b.csv"));
    let text = String::from_utf8(a).unwrap();
    assert!(!text.contains('\r'));
    assert_eq!(text.lines().count(), 1 + 12 * 4 * 2 + 12);
}

#[test]
fn unwritable_output_fails() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("missing").join("out.csv");
    let out = qif(&["sweep", "--mech", "krr", "--n-start", "1", "--n-end", "2", "--p", "1", "--out", path.to_str().unwrap()]);
    assert!(!out.status.success());
}

#[test]
fn check_suites_report_by_name() {
    let out = stdout(&["check", "--suite", "commute", "--max-n", "3"]);
    assert!(out.contains("PASS NS = SN"));
    assert!(out.contains("PASS NSʳ = SʳNʳ"));
    assert!(out.trim_end().ends_with("PASS commute"));
    let out = stdout(&["check", "--suite", "brown", "--max-n", "8"]);
    assert!(out.contains("Brown"));
}
