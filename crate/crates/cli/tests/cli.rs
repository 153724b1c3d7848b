use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn ktrellis(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ktrellis"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn workspace() -> TempDir {
    let dir = TempDir::new().unwrap();
    fs::write(dir.path().join("f2.kernel"), "2 2\n10\n11\n").unwrap();
    fs::write(dir.path().join("k4.kernel"), "4 4\n1000\n1100\n1010\n1111\n").unwrap();
    fs::write(dir.path().join("code.frozen"), "0\n1\n2\n4\n8\n").unwrap();
    fs::write(dir.path().join("code.toml"), "kernel = \"k4.kernel\"\nm = 2\nfrozen = \"code.frozen\"\n").unwrap();
    dir
}

#[test]
fn plan_report_for_f2() {
    let dir = workspace();
    let o = ktrellis(dir.path(), &["plan", "f2.kernel", "--report", "--export", "f2.json"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.lines().any(|l| l == "total\t1\t1\t0"), "{text}");
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("f2.json")).unwrap()).unwrap();
    assert_eq!(json["total"]["adds"], 1);
    assert_eq!(json["total"]["comps"], 1);
    let brief = stdout(&ktrellis(dir.path(), &["plan", "f2.kernel"]));
    assert_eq!(brief, "f2\tl=2\tadds=1\tcomps=1\n");
}

#[test]
fn verify_random_passes_and_is_deterministic() {
    let dir = workspace();
    let args = ["verify", "--random", "6", "--trials", "100", "--seed", "7"];
    let a = ktrellis(dir.path(), &args);
    assert_eq!(a.status.code(), Some(0), "{}", stdout(&a));
    assert!(stdout(&a).ends_with("PASS\n"));
    let b = ktrellis(dir.path(), &args);
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn verify_kernel_file() {
    let dir = workspace();
    let o = ktrellis(dir.path(), &["verify", "--kernel", "k4.kernel", "--trials", "5", "--seed", "1"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("llr_checks\t320\n"));
}

#[test]
fn decode_noiseless_all_zero() {
    let dir = workspace();
    fs::write(dir.path().join("zero.llr"), "4 ".repeat(16)).unwrap();
    for list in ["1", "4"] {
        let o = ktrellis(dir.path(), &["decode", "--spec", "code.toml", "--llrs", "zero.llr", "--list", list]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        let text = stdout(&o);
        assert!(text.starts_with(&format!("u\t{0}\nc\t{0}\n", "0".repeat(16))), "{text}");
    }
}

#[test]
fn simulate_is_deterministic() {
    let dir = workspace();
    let run = |out: &str| {
        let o = ktrellis(
            dir.path(),
            &["simulate", "--spec", "code.toml", "--snr", "0:4:2", "--trials", "300", "--list", "2", "--seed", "3", "--out", out],
        );
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        fs::read_to_string(dir.path().join(out)).unwrap()
    };
    let a = run("a.tsv");
    assert_eq!(a, run("b.tsv"));
    let rows: Vec<&str> = a.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows[0], "ebn0_db\ttrials\terrors\tfer\tavg_adds\tavg_comps");
    assert_eq!(rows.len(), 4);
    assert!(rows[1].starts_with("0.000\t300\t"));
}

#[test]
fn sc_average_ops_equal_compiled_cost() {
    let dir = workspace();
    let o = ktrellis(dir.path(), &["simulate", "--spec", "code.toml", "--snr", "1:1:1", "--trials", "50"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let row: Vec<&str> = text.lines().last().unwrap().split('\t').collect();
    fs::write(dir.path().join("r.llr"), "1 -2 0.5 3 ".repeat(4)).unwrap();
    let d = stdout(&ktrellis(dir.path(), &["decode", "--spec", "code.toml", "--llrs", "r.llr"]));
    let adds = d.lines().find_map(|l| l.strip_prefix("adds\t")).unwrap();
    let comps = d.lines().find_map(|l| l.strip_prefix("comps\t")).unwrap();
    assert_eq!(row[4], format!("{adds}.000"));
    assert_eq!(row[5], format!("{comps}.000"));
}

#[test]
fn malformed_inputs_name_the_line() {
    let dir = workspace();
    fs::write(dir.path().join("bad.kernel"), "2 2\n10\n1x\n").unwrap();
    let o = ktrellis(dir.path(), &["plan", "bad.kernel"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 3"), "{}", stderr(&o));

    fs::write(dir.path().join("bad.llr"), "1 2\n3 oops\n").unwrap();
    let o = ktrellis(dir.path(), &["decode", "--spec", "code.toml", "--llrs", "bad.llr"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 2"), "{}", stderr(&o));

    fs::write(dir.path().join("short.llr"), "1 2 3\n").unwrap();
    let o = ktrellis(dir.path(), &["decode", "--spec", "code.toml", "--llrs", "short.llr"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("expected 16 LLRs"), "{}", stderr(&o));

    fs::write(dir.path().join("bad.toml"), "kernel = \"k4.kernel\"\nm = 2\nlist = 3\n").unwrap();
    let o = ktrellis(dir.path(), &["decode", "--spec", "bad.toml", "--llrs", "bad.llr"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 3"), "{}", stderr(&o));
}

#[test]
fn usage_errors_exit_2() {
    let dir = workspace();
    assert_eq!(ktrellis(dir.path(), &["verify"]).status.code(), Some(2));
    assert_eq!(ktrellis(dir.path(), &["bogus"]).status.code(), Some(2));
    let o = ktrellis(dir.path(), &["simulate", "--spec", "code.toml", "--snr", "3:1:1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(ktrellis(dir.path(), &["plan", "missing.kernel"]).status.code() == Some(2));
}
