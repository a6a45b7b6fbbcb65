use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use decwatt_core::fixtures::ten_model_samples;
use decwatt_core::jsonl;
use decwatt_core::pipeline::{AnomalyFlag, Disposition, RuleId};
use decwatt_core::report::values_missing_from_table;

fn root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn run(bin: &str, args: &[&str]) -> Output {
    let exe = match bin {
        "session" => env!("CARGO_BIN_EXE_decwatt-session"),
        "pipeline" => env!("CARGO_BIN_EXE_decwatt-pipeline"),
        "report" => env!("CARGO_BIN_EXE_decwatt-report"),
        _ => unreachable!(),
    };
    Command::new(exe).args(args).output().unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn interrupted_session_resumes_to_the_same_submission() {
    let dir = tempfile::tempdir().unwrap();
    let assets = root().join("assets");
    let sim = root().join("configs/sim/example.toml");
    let ck_full = dir.path().join("full.ckpt");
    let full = dir.path().join("full.json");
    let out = run(
        "session",
        &["run", "--assets", p(&assets), "--drop", "3", "--checkpoint", p(&ck_full), "--sim", p(&sim), "--submission", p(&full)],
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));

    let ck = dir.path().join("step.ckpt");
    let step = dir.path().join("step.json");
    let out = run(
        "session",
        &["run", "--assets", p(&assets), "--drop", "3", "--checkpoint", p(&ck), "--sim", p(&sim), "--max-pairs", "1"],
    );
    assert_eq!(out.status.code(), Some(3));
    let again = run(
        "session",
        &["run", "--assets", p(&assets), "--checkpoint", p(&ck), "--sim", p(&sim)],
    );
    assert_eq!(again.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&again.stderr).contains("already exists"));

    let mut invocations = 1;
    loop {
        let out = run("session", &["resume", "--checkpoint", p(&ck), "--max-pairs", "1", "--submission", p(&step)]);
        invocations += 1;
        match out.status.code() {
            Some(0) => break,
            Some(3) => assert!(invocations < 20),
            c => panic!("exit {c:?}: {}", String::from_utf8_lossy(&out.stderr)),
        }
    }
    assert_eq!(invocations, 6);
    assert_eq!(fs::read(&step).unwrap(), fs::read(&full).unwrap());
}

#[test]
fn drop_below_three_is_refused() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(
        "session",
        &[
            "run",
            "--assets",
            p(&root().join("assets")),
            "--drop",
            "2",
            "--checkpoint",
            p(&dir.path().join("c")),
            "--sim",
            p(&root().join("configs/sim/example.toml")),
        ],
    );
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("drop target 2%"));
}

#[test]
fn baseline_reports_display_rate() {
    let out = run("session", &["baseline", "--sim", p(&root().join("configs/sim/example.toml"))]);
    assert!(out.status.success());
    // 150 mA screen on 4000 mAh
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), "delta_screen 3.7500 %/h");
}

#[test]
fn pipeline_and_reports_from_collected_samples() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let raw = d.join("raw.jsonl");
    jsonl::write_file(&raw, &ten_model_samples()).unwrap();
    let cleaned = d.join("clean.jsonl");
    let review = d.join("review.jsonl");

    let out = run("pipeline", &["clean", "--in", p(&raw), "--out", p(&cleaned), "--review", p(&review)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!cleaned.exists());
    let mut flags: Vec<AnomalyFlag> = jsonl::read_file(&review).unwrap();
    let records: std::collections::BTreeSet<_> =
        flags.iter().filter(|f| f.rule == RuleId::MadOutlier).map(|f| &f.record).collect();
    assert_eq!(records.len(), 3);
    for f in &mut flags {
        f.disposition = Disposition::ReviewedDrop;
    }
    jsonl::write_file(&review, &flags).unwrap();

    let out = run("pipeline", &["clean", "--in", p(&raw), "--out", p(&cleaned), "--review", p(&review)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("records 360 kept 357 dropped 3"));

    let aggs = d.join("aggs.jsonl");
    assert!(run("pipeline", &["merge", "--in", p(&cleaned), "--out", p(&aggs)]).status.success());
    let seq = d.join("aggs-seq.jsonl");
    assert!(run("pipeline", &["--sequential", "merge", "--in", p(&cleaned), "--out", p(&seq)]).status.success());
    assert_eq!(fs::read(&aggs).unwrap(), fs::read(&seq).unwrap());

    let stats = d.join("stats.json");
    let out = run("pipeline", &["stats", "--in", p(&aggs), "--out", p(&stats)]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("models 10 devices 30"));

    let figs = d.join("figs");
    for args in [
        vec!["top", "--metric", "play", "--res", "hd", "--n", "30"],
        vec!["top", "--metric", "decode", "--res", "fhd", "--n", "5"],
        vec!["model", "--name", "Aster 5"],
        vec!["scatter", "--model", "Aster 5"],
    ] {
        let mut a = args.clone();
        a.extend(["--in", p(&aggs), "--out", p(&figs)]);
        let out = run("report", &a);
        assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    }
    for stem in ["top_play_hd", "top_decode_fhd", "model_aster-5", "scatter_aster-5"] {
        let csv = fs::read(figs.join(format!("{stem}.csv"))).unwrap();
        let svg = fs::read_to_string(figs.join(format!("{stem}.svg"))).unwrap();
        assert!(csv.ends_with(b"\r\n"));
        assert!(values_missing_from_table(&svg, &csv).unwrap().is_empty(), "{stem}");
    }
    let top = fs::read_to_string(figs.join("top_play_hd.csv")).unwrap();
    assert_eq!(top.lines().count(), 11);

    let out = run("report", &["model", "--name", "Aster5", "--in", p(&aggs), "--out", p(&figs)]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Aster 5"));
}
