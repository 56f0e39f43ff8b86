use std::path::PathBuf;
use std::process::{Command, Output};

fn psikit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_psikit")).current_dir(env!("CARGO_MANIFEST_DIR")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn scratch(name: &str, text: &str) -> PathBuf {
    let p = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join(name);
    std::fs::write(&p, text).unwrap();
    p
}

#[test]
fn run_and_verify() {
    let o = psikit(&["run", "tests/fig1.pir", "--passes=ssa,ifconvert,out-of-ssa", "--verify"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.contains("func @psi_ssa"));
    assert!(!out.contains("psi("));
    assert!(out.contains("verify @psi_ssa: 32 trials, 0 excluded, 0 mismatches"));
}

#[test]
fn evaluates_arguments() {
    let o = psikit(&["run", "tests/fig1.pir", "--args", "0,-4"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("@psi_ssa(0, -4) = ret -5"));
}

#[test]
fn missing_ssa_is_an_error() {
    let o = psikit(&["run", "tests/fig1.pir", "--passes=out-of-ssa"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("out-of-ssa requires ssa earlier in the pipeline"));
}

#[test]
fn unknown_pass_is_an_error() {
    let o = psikit(&["run", "tests/fig1.pir", "--passes=ssa,sparkle"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("unknown pass `sparkle`"));
}

#[test]
fn parse_errors_exit_one() {
    let p = scratch("broken.pir", "func @f( {\n");
    let o = psikit(&["run", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(!stderr(&o).is_empty());
}

#[test]
fn dumps_intermediate_forms() {
    let o = psikit(&["run", "tests/fig1.pir", "--passes=ssa,ifconvert,out-of-ssa", "--dump-after=ifconvert"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.contains("; @psi_ssa after ifconvert"));
    assert!(out.contains("%x = psi(%p ? %a, !%p ? %b)"), "{out}");
}

#[test]
fn stats_text_and_csv() {
    let o = psikit(&["run", "tests/fig1.pir", "--stats"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    for row in ["psi-normalize", "psi-congruence", "phi-congruence", "total copies"] {
        assert!(out.lines().any(|l| l.starts_with(row)), "{row}\n{out}");
    }
    let o = psikit(&["run", "tests/fig1.pir", "--stats", "--stats-format", "csv"]);
    let out = stdout(&o);
    assert!(out.contains("file,row,no-ifconv,ifconv,ifconv+folding,no-ifconv+promote,ifconv+promote,ifconv+folding+promote"));
    assert!(out.contains("tests/fig1.pir,total copies,0,0,0,0,0,0"));
}

#[test]
fn several_files_in_order() {
    let p = scratch("second.pir", "func @second(%u) {\nb0:\n  %v = add %u, 1\n  ret %v\n}\n");
    let o = psikit(&["run", "tests/fig1.pir", p.to_str().unwrap(), "--passes=ssa,out-of-ssa"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    let (a, b) = (out.find("func @psi_ssa").unwrap(), out.find("func @second").unwrap());
    assert!(a < b);
    assert!(out.contains("== tests/fig1.pir"));
}

#[test]
fn fuzz_small_run() {
    let o = psikit(&["fuzz", "--trials", "40", "--vectors", "8"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.contains("fuzz ssa,fold,ifconvert,psi-promote,out-of-ssa: 80 programs"), "{out}");
    assert!(out.contains(" 0 mismatches, 0 failures"), "{out}");
}

#[test]
fn output_is_deterministic() {
    let args = ["run", "tests/fig1.pir", "--passes=ssa,ifconvert,psi-promote,out-of-ssa", "--verify", "--stats", "--seed", "3"];
    assert_eq!(stdout(&psikit(&args)), stdout(&psikit(&args)));
    let fuzz = ["fuzz", "--trials", "10", "--seed", "5"];
    assert_eq!(stdout(&psikit(&fuzz)), stdout(&psikit(&fuzz)));
}

#[test]
fn help_lists_passes() {
    let o = psikit(&["run", "--help"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("--passes"));
}
