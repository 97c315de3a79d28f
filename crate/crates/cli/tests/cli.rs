use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn regclass(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_regclass")).args(args).env_remove("REGCLASS_OUT").output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn synth(dir: &Path) -> PathBuf {
    let o = regclass(&["synth", "--out", dir.to_str().unwrap(), "--seed", "3"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    dir.join("manifest.toml")
}

fn run(study: &str, manifest: &Path, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec![
        "run",
        study,
        "--manifest",
        manifest.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--seed",
        "5",
        "--iterations",
        "6",
        "--trees",
        "10",
    ];
    args.extend_from_slice(extra);
    regclass(&args)
}

#[test]
fn validate_reports_admitted_synthetic_suite() {
    let dir = TempDir::new().unwrap();
    let manifest = synth(dir.path());
    let o = regclass(&["validate", manifest.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = String::from_utf8(o.stdout).unwrap();
    for name in ["synth_low", "synth_mid", "synth_high"] {
        assert!(text.contains(name), "{text}");
    }
}

#[test]
fn validate_fails_when_nothing_is_admitted() {
    let dir = TempDir::new().unwrap();
    let mut csv = String::from("id,a,b,bug\n");
    for i in 0..30 {
        csv.push_str(&format!("m{i},{},{},{}\n", i, i % 7, u8::from(i % 5 == 0)));
    }
    fs::write(dir.path().join("small.csv"), csv).unwrap();
    fs::write(
        dir.path().join("manifest.toml"),
        "[[dataset]]\npath = \"small.csv\"\nname = \"small\"\ntarget_column = \"bug\"\nid_column = \"id\"\n",
    )
    .unwrap();
    let manifest = dir.path().join("manifest.toml");
    let o = regclass(&["validate", manifest.to_str().unwrap()]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stdout).contains("EPV"));
    let o = run("rq1", &manifest, &dir.path().join("out"), &[]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("no admitted datasets"), "{}", stderr(&o));
}

#[test]
fn malformed_input_exits_with_one() {
    let dir = TempDir::new().unwrap();
    assert_eq!(code(&regclass(&["validate", dir.path().join("missing.toml").to_str().unwrap()])), 1);
    fs::write(dir.path().join("bad.toml"), "[[dataset]]\nname = 3\n").unwrap();
    assert_eq!(code(&regclass(&["validate", dir.path().join("bad.toml").to_str().unwrap()])), 1);
    assert_eq!(code(&regclass(&["run", "nonsense"])), 1);
    assert_eq!(code(&regclass(&["--help"])), 0);
}

#[test]
fn run_then_report_round_trips() {
    let dir = TempDir::new().unwrap();
    let manifest = synth(&dir.path().join("data"));
    let out = dir.path().join("out");
    let o = run("rq1", &manifest, &out, &[]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let root = out.join("rq1");
    for f in ["run.json", "summary.json", "summary.csv", "datasets.csv", "synth_mid/prefilter.json"] {
        assert!(root.join(f).is_file(), "missing {f}");
    }
    let iter_csv = fs::read_to_string(root.join("synth_mid/random_forest_classification_iterations.csv")).unwrap();
    assert_eq!(iter_csv.lines().count(), 7);
    let summary = fs::read_to_string(root.join("summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 4);
    let o = regclass(&["report", root.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(String::from_utf8_lossy(&o.stdout).contains("synth_low"));
    assert!(fs::read_dir(root.join("report")).unwrap().count() > 0);
}

#[test]
fn tampered_output_is_detected() {
    let dir = TempDir::new().unwrap();
    let manifest = synth(&dir.path().join("data"));
    let out = dir.path().join("out");
    assert_eq!(code(&run("r2", &manifest, &out, &[])), 0);
    let root = out.join("r2");
    let target = root.join("summary.csv");
    let mut text = fs::read_to_string(&target).unwrap();
    text.push_str("extra\n");
    fs::write(&target, text).unwrap();
    let o = regclass(&["report", root.to_str().unwrap()]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("summary.csv"), "{}", stderr(&o));
}

#[test]
fn existing_output_needs_force() {
    let dir = TempDir::new().unwrap();
    let manifest = synth(&dir.path().join("data"));
    let out = dir.path().join("out");
    assert_eq!(code(&run("r2", &manifest, &out, &[])), 0);
    let again = run("r2", &manifest, &out, &[]);
    assert_eq!(code(&again), 1);
    assert!(stderr(&again).contains("--force"), "{}", stderr(&again));
    assert_eq!(code(&run("r2", &manifest, &out, &["--force"])), 0);
}

#[test]
fn ratio_sweep_covers_the_grid() {
    let dir = TempDir::new().unwrap();
    let manifest = synth(&dir.path().join("data"));
    let out = dir.path().join("out");
    let o = run("ratio-sweep", &manifest, &out, &["--grid", "5:50:5"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let sweep = fs::read_to_string(out.join("ratio-sweep/synth_mid/sweep_random_forest.csv")).unwrap();
    assert_eq!(sweep.lines().count(), 11);
    assert_eq!(code(&run("ratio-sweep", &manifest, &dir.path().join("o2"), &["--grid", "50:5:5"])), 1);
}

#[test]
fn rq2_writes_rank_shift_files() {
    let dir = TempDir::new().unwrap();
    let manifest = synth(&dir.path().join("data"));
    let out = dir.path().join("out");
    let o = run("rq2", &manifest, &out, &["--ranks", "1,2"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let files: Vec<String> = walk(&out.join("rq2"));
    assert!(files.iter().any(|f| f.contains("shift")), "{files:?}");
    let o = run("rq2", &manifest, &dir.path().join("o2"), &["--importance", "impurity", "--learners", "knn"]);
    assert_eq!(code(&o), 1, "{}", stderr(&o));
}

#[test]
fn thread_count_leaves_outputs_unchanged() {
    let dir = TempDir::new().unwrap();
    let manifest = synth(&dir.path().join("data"));
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    assert_eq!(code(&run("rq1", &manifest, &a, &["--threads", "1"])), 0);
    assert_eq!(code(&run("rq1", &manifest, &b, &["--threads", "4"])), 0);
    let fa = walk(&a);
    assert_eq!(fa, walk(&b));
    for f in fa {
        assert_eq!(fs::read(a.join(&f)).unwrap(), fs::read(b.join(&f)).unwrap(), "{f}");
    }
}

fn walk(root: &Path) -> Vec<String> {
    fn go(base: &Path, dir: &Path, out: &mut Vec<String>) {
        for e in fs::read_dir(dir).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                go(base, &p, out);
            } else {
                out.push(p.strip_prefix(base).unwrap().to_string_lossy().into_owned());
            }
        }
    }
    let mut out = Vec::new();
    go(root, root, &mut out);
    out.sort();
    out
}
