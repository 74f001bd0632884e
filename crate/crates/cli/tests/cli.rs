use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ctorsion"))
}

/// Writes `body` to a fresh spec file under the target temp dir.
fn spec(name: &str, body: &str) -> PathBuf {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("cli-specs");
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn stdout(args: &[&str]) -> String {
    let out = run(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn lines(s: &str) -> Vec<&str> {
    s.lines().collect()
}

#[test]
fn gen_examples() {
    let zeta = spec("zeta.txt", "ratios.tail: affine 1,1\nmultipliers: full\n");
    let base = spec("base2.txt", "ratios.tail: constant 2\nmultipliers: base\n");
    let gap = spec("gap6.txt", "ratios.tail: constant 6\nmultipliers: gap-third\n");
    let p = |f: &PathBuf| f.to_str().unwrap().to_string();
    assert_eq!(lines(&stdout(&["gen", "--spec", &p(&zeta), "--count", "7"])), ["1", "2", "4", "6", "12", "18", "24"]);
    assert_eq!(lines(&stdout(&["gen", "--spec", &p(&base), "--count", "4"])), ["1", "2", "4", "8"]);
    assert_eq!(lines(&stdout(&["gen", "--spec", &p(&gap), "--count", "5"])), ["1", "3", "4", "5", "6"]);
}

#[test]
fn digits_examples() {
    let base = spec("digits-base2.txt", "ratios.tail: constant 2\nmultipliers: base\n");
    let b = base.to_str().unwrap();
    let half = stdout(&["digits", "1/2", "--spec", b, "--count", "4"]);
    assert!(half.contains("digits: 1, 0, 0, 0\n"), "{half}");
    assert!(half.contains("tail: zero\n"));
    let third = stdout(&["digits", "1/3", "--spec", b, "--count", "6"]);
    assert!(third.contains("digits: 0, 1, 0, 1, 0, 1\n"), "{third}");
    assert!(third.contains("tail: periodic 0, 1\n"));
    assert!(third.contains("supp (to 6): 2, 4, 6\n"));
    let three = spec("digits-222.txt", "ratios.prefix: 2, 2, 2\nratios.tail: constant 5\nmultipliers: full\n");
    let eighths = stdout(&["digits", "5/8", "--spec", three.to_str().unwrap(), "--count", "3"]);
    assert!(eighths.contains("digits: 1, 0, 1\n"), "{eighths}");
    assert!(eighths.contains("supp^q (to 3): 1, 3\n"));
}

#[test]
fn member_examples() {
    let zeta = spec("member-zeta.txt", "ratios.tail: affine 1,1\nmultipliers: full\n");
    let base = spec("member-base2.txt", "ratios.tail: constant 2\nmultipliers: base\n");
    let per = spec("member-23.txt", "ratios.tail: periodic 2, 3\nmultipliers: base\n");
    let z = zeta.to_str().unwrap();
    for x in ["1/7", "355/113", "9999/10000"] {
        assert!(stdout(&["member", x, "--spec", z]).contains("verdict: member\n"), "{x}");
    }
    let third = stdout(&["member", "1/3", "--spec", base.to_str().unwrap()]);
    assert!(third.contains("verdict: non-member\n"), "{third}");
    assert!(third.contains("= 1/3 "), "{third}");
    assert!(stdout(&["member", "0", "--spec", base.to_str().unwrap()]).contains("verdict: member\n"));
    let third = stdout(&["member", "1/3", "--spec", per.to_str().unwrap()]);
    assert!(third.contains("verdict: member\n") && third.contains("a_2 x"), "{third}");
}

#[test]
fn member_json_is_versioned() {
    let base = spec("json-base2.txt", "ratios.tail: constant 2\nmultipliers: base\n");
    let out = stdout(&["member", "1/3", "--spec", base.to_str().unwrap(), "--format", "json"]);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["format_version"], 1);
    assert_eq!(v["verdict"]["status"], "non_member");
    assert_eq!(v["verdict"]["witness"]["norm"], "1/3");
}

#[test]
fn conditions_report_violations() {
    let base = spec("cond-base2.txt", "ratios.tail: constant 2\nmultipliers: base\n");
    let out = stdout(&["conditions", "1/3", "--spec", base.to_str().unwrap(), "--set", "residue 2 0", "--horizon", "100"]);
    assert!(out.contains("a1    violated"), "{out}");
    assert!(out.contains("stays >= 1/2"), "{out}");

    let body = "ratios.tail: affine 1,1\nmultipliers: full\ndigits:\ntail: prescribed 301\nlayer: squares => constant 1\n";
    let sparse = spec("cond-sparse.txt", body);
    let s = sparse.to_str().unwrap();
    let out = stdout(&["conditions", "--spec", s, "--set", "squares", "--horizon", "300"]);
    assert!(out.contains("b2    violated"), "{out}");
    assert!(out.contains("r = 128"), "{out}");
    let base_only = spec("cond-sparse-base.txt", &body.replace("full", "base"));
    let out = stdout(&["conditions", "--spec", base_only.to_str().unwrap(), "--set", "squares", "--horizon", "300"]);
    assert!(out.contains("b2    satisfied"), "{out}");
    let family = stdout(&["conditions", "--spec", s, "--horizon", "300"]);
    assert!(family.contains("[supp]") && family.contains("[boundary - 1]"), "{family}");
}

#[test]
fn witness_folds_and_confirms() {
    let body = "ratios.tail: affine 1,1\nmultipliers: base\ndigits:\ntail: prescribed 301\n\
                layer: squares => below-top 1\nrule: non-cofinite\n";
    let w = spec("witness.txt", body);
    let out = stdout(&["witness", "--spec", w.to_str().unwrap()]);
    assert!(out.contains(": confirmed"), "{out}");
    // the folded digit of a maximal digit is 1
    let digits_line = out.lines().find(|l| l.starts_with("digits:")).unwrap();
    let digits: Vec<u64> = digits_line[7..].split(',').map(|t| t.trim().parse().unwrap()).collect();
    assert_eq!(digits[8], 1);
    assert_eq!(digits[7], 0);
}

#[test]
fn certificate_examples() {
    let out = stdout(&["certificate", "3", "100", "--case", "1a"]);
    assert!(out.contains("t = 6") && out.contains("attained 9/50 >= 3/40"), "{out}");
    let out = stdout(&["certificate", "97", "100", "--case", "1b"]);
    assert!(out.contains("t = 6") && out.contains("attained 9/50 >= 3/40"), "{out}");
    let out = stdout(&["certificate", "1", "40", "--case", "1a"]);
    assert!(out.contains("t = 8") && out.contains("attained 1/5 >= 3/40"), "{out}");
    let miss = run(&["certificate", "50", "100"]);
    assert_eq!(miss.status.code(), Some(2));
}

#[test]
fn verify_passes_and_repeats() {
    let a = run(&["verify", "lemma22", "--seed", "7", "--scale", "1000"]);
    assert!(a.status.success());
    let text = String::from_utf8(a.stdout.clone()).unwrap();
    assert!(text.starts_with("lemma22: pass"), "{text}");
    assert!(text.contains("1000 exact checks"), "{text}");
    let b = run(&["verify", "lemma22", "--seed", "7", "--scale", "1000"]);
    assert_eq!(a.stdout, b.stdout);
    let j1 = run(&["verify", "inclusion-chain", "--seed", "3", "--format", "json"]);
    let j2 = run(&["verify", "inclusion-chain", "--seed", "3", "--format", "json"]);
    assert!(j1.status.success());
    assert_eq!(j1.stdout, j2.stdout);
}

#[test]
fn verify_failures_carry_repro_and_exit_nonzero() {
    // a scale of 1 leaves the certificate ranges empty, which is not a pass
    let out = run(&["verify", "theorem41-dichotomy", "--seed", "5", "--scale", "1"]);
    assert_eq!(out.status.code(), Some(1));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("reproduce: ctorsion verify theorem41-dichotomy --seed 5 --scale 1"), "{text}");
    let unknown = run(&["verify", "no-such-suite"]);
    assert_eq!(unknown.status.code(), Some(2));
}

#[test]
fn parse_errors_report_lines() {
    let bad = spec("bad.txt", "# comment\nratios.tail: constant 2\nmultipliers: sideways\n");
    let out = run(&["gen", "--spec", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("line 3"), "{err}");
}
