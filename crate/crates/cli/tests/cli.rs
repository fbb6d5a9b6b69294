use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn rcw(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rcw"))
        .args(args)
        .current_dir(dir)
        .env_remove("RCW_LOG")
        .output()
        .expect("rcw runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn certificate_round_trip_and_tampering() {
    let dir = tempfile::tempdir().unwrap();
    let o = rcw(dir.path(), &["decide", "rc", "--arity", "4", "--m", "6", "--cert", "w.json"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("fails"));
    let o = rcw(dir.path(), &["verify", "w.json"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));

    let text = fs::read_to_string(dir.path().join("w.json")).unwrap();
    let tampered = text.replacen("\"schema_version\": \"1\"", "\"schema_version\": \"2\"", 1);
    fs::write(dir.path().join("t.json"), tampered).unwrap();
    let o = rcw(dir.path(), &["verify", "t.json"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stdout(&o).starts_with("rejected t.json: schema"));
}

#[test]
fn seven_holds() {
    let dir = tempfile::tempdir().unwrap();
    let o = rcw(dir.path(), &["decide", "rc", "--arity", "4", "--m", "7", "--mode", "complete"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("holds_at_bound"), "{}", stdout(&o));
}

#[test]
fn usage_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(rcw(dir.path(), &["decide", "rc", "--arity", "4"]).status.code(), Some(1));
    assert_eq!(rcw(dir.path(), &["decide", "rc", "--arity", "4", "--m", "9"]).status.code(), Some(1));
    assert_eq!(rcw(dir.path(), &["verify", "missing.json"]).status.code(), Some(1));
    assert_eq!(rcw(dir.path(), &["matrix", "rc", "--arity", "2", "--m-range", "5..3"]).status.code(), Some(1));
    let o = Command::new(env!("CARGO_BIN_EXE_rcw"))
        .args(["verify", "x.json"])
        .env("RCW_LOG", "loud")
        .current_dir(dir.path())
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn jobs_do_not_change_output() {
    let mut runs = Vec::new();
    for jobs in ["1", "8"] {
        let dir = tempfile::tempdir().unwrap();
        let o = rcw(
            dir.path(),
            &["--jobs", jobs, "matrix", "rc", "--arity", "4", "--m-range", "3..6", "--cert-dir", "c"],
        );
        assert_eq!(o.status.code(), Some(0));
        let mut files: Vec<(String, Vec<u8>)> = fs::read_dir(dir.path().join("c"))
            .unwrap()
            .map(|e| {
                let e = e.unwrap();
                (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
            })
            .collect();
        files.sort();
        runs.push((o.stdout, files));
    }
    assert_eq!(runs[0], runs[1]);
    assert_eq!(runs[0].1.len(), 3);
}

#[test]
fn reduce_is_seed_determined() {
    let dir = tempfile::tempdir().unwrap();
    let members: Vec<Vec<u32>> = (0..12).map(|j| (5 * j..5 * j + 3 + j % 3).collect()).collect();
    fs::write(dir.path().join("fam.json"), serde_json::to_string(&members).unwrap()).unwrap();
    let args = ["reduce", "--n", "2", "--family", "fam.json", "--oracle-seed", "11", "--trace", "t.jsonl", "--out", "s.json"];
    let a = rcw(dir.path(), &args);
    assert_eq!(a.status.code(), Some(0), "{}", String::from_utf8_lossy(&a.stderr));
    let trace = fs::read(dir.path().join("t.jsonl")).unwrap();
    let sel = fs::read(dir.path().join("s.json")).unwrap();
    let b = rcw(dir.path(), &args);
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(trace, fs::read(dir.path().join("t.jsonl")).unwrap());
    assert_eq!(sel, fs::read(dir.path().join("s.json")).unwrap());
    assert!(stdout(&a).contains("valid"));

    fs::write(dir.path().join("small.json"), "[[0,1,2,3,4]]").unwrap();
    let o = rcw(dir.path(), &["reduce", "--n", "4", "--family", "small.json", "--oracle-seed", "1"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn fraisse_build_check_and_cap() {
    let dir = tempfile::tempdir().unwrap();
    let o = rcw(dir.path(), &["fraisse", "build", "--arity", "2", "--stages", "3", "--out", "a.txt"]);
    assert_eq!(o.status.code(), Some(0));
    rcw(dir.path(), &["fraisse", "build", "--arity", "2", "--stages", "3", "--out", "b.txt"]);
    assert_eq!(fs::read(dir.path().join("a.txt")).unwrap(), fs::read(dir.path().join("b.txt")).unwrap());
    let o = rcw(dir.path(), &["fraisse", "check", "a.txt"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("0 violations") && stdout(&o).contains("0 misses"), "{}", stdout(&o));

    let o = rcw(dir.path(), &["fraisse", "build", "--arity", "2", "--stages", "4", "--out", "c.txt"]);
    assert_eq!(o.status.code(), Some(1));
    let o = rcw(dir.path(), &["fraisse", "build", "--arity", "2", "--stages", "4", "--out", "p.txt", "--partial-ok"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("partial"));
    let o = rcw(dir.path(), &["fraisse", "resume", "p.txt", "--cap", "10000", "--out", "r.txt"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("stage 4 complete, 7204 atoms"), "{}", stdout(&o));
    rcw(dir.path(), &["fraisse", "build", "--arity", "2", "--stages", "4", "--out", "d.txt", "--cap", "10000"]);
    assert_eq!(fs::read(dir.path().join("r.txt")).unwrap(), fs::read(dir.path().join("d.txt")).unwrap());

    // an entry that breaks the selection rule
    let text = fs::read_to_string(dir.path().join("a.txt")).unwrap();
    let line = text.lines().find(|l| l.starts_with("sel ")).unwrap().to_string();
    let words: Vec<&str> = line.split_whitespace().collect();
    let broken = text.replacen(&line, &format!("sel {} {{0}}", words[1]), 1);
    fs::write(dir.path().join("bad.txt"), broken).unwrap();
    let o = rcw(dir.path(), &["fraisse", "check", "bad.txt"]);
    assert_ne!(o.status.code(), Some(0));
}

#[test]
fn zoo_eval_and_descriptor() {
    let dir = tempfile::tempdir().unwrap();
    let o = rcw(
        dir.path(),
        &["zoo", "eval", "--model", "vlines", "--params", "4", "--principle", "nrc_fin", "--n", "6", "--support-budget", "4", "--cert", "z.json", "--descriptor", "m.json"],
    );
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("fails") && stdout(&o).contains("certificate verified"));
    assert_eq!(rcw(dir.path(), &["verify", "z.json"]).status.code(), Some(0));
    let o = rcw(
        dir.path(),
        &["zoo", "eval", "--model-file", "m.json", "--principle", "nrc_fin", "--n", "8", "--support-budget", "0"],
    );
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("holds_at_bound"), "{}", stdout(&o));
    let o = rcw(dir.path(), &["zoo", "eval", "--model", "bfm", "--principle", "nope", "--n", "2", "--support-budget", "0"]);
    assert_eq!(o.status.code(), Some(1));
}
