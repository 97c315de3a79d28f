//! Acceptance suite: one PASS/FAIL/SKIP line per criterion.
//!
//! Runs without the libtest harness so the lines are never captured;
//! criteria run sequentially so wall-clock budgets are measured without
//! competing test threads. The optional corpus tier reads a manifest of
//! Tera-PROMISE CSVs from `REGCLASS_PROMISE_MANIFEST`.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use rand::Rng;
use rand_distr::StandardNormal;
use regclass_core::corpus::{epv, load_dataset};
use regclass_core::harness::{auc, bootstrap_split, normalize_scores, run_bootstrap, HarnessOptions};
use regclass_core::learners::{Family, LearnerSpec, Mode};
use regclass_core::seed::{derive_seed, rng_from_seed, StudyRng};
use regclass_core::stats::{
    cohens_d, scott_knott_esd, wilcoxon_exact_p, wilcoxon_normal_p, Magnitude, RankTable, SkEsdOptions,
};
use regclass_core::study::{
    prepare_admitted, rank_features, rank_shifts, run_rq1, ImportanceMethod, StudyConfig, StudyDataset,
};
use regclass_core::synthetic::{heavy_noise_counts, single_signal};
use regclass_core::{DatasetManifest, EpvMode};

enum Outcome {
    Pass(String),
    Fail(String),
    Skip(String),
}

fn verdict(ok: bool, detail: String) -> Outcome {
    if ok {
        Outcome::Pass(detail)
    } else {
        Outcome::Fail(detail)
    }
}

fn rng(label: &str, i: u64) -> StudyRng {
    rng_from_seed(derive_seed(2024, &[label.into(), i.into()]))
}

// 1 ---------------------------------------------------------------------

fn table(entries: &[(&str, usize)]) -> RankTable {
    RankTable {
        treatments: entries.iter().map(|(n, _)| n.to_string()).collect(),
        assigned_rank: entries.iter().map(|(_, r)| *r).collect(),
        mean_metric: vec![0.0; entries.len()],
    }
}

fn rank_shift_example() -> Outcome {
    let regression = table(&[("cbo", 1), ("loc", 1)]);
    let discretized = table(&[("loc", 1), ("cbo", 2)]);
    let r = rank_shifts("example", &regression, &discretized, 13, &[1]).unwrap();
    let s = r.entries[0].shift;
    verdict(s == 1.0 / 13.0, format!("Shifts(1) = {s:.4}, expected 1/13"))
}

// 2 ---------------------------------------------------------------------

/// Published overview rows: name, DR (%), files, features, EPV.
const OVERVIEW: [(&str, f64, f64, usize, f64); 17] = [
    ("Eclipse-2.0", 14.5, 6729.0, 32, 30.0),
    ("Eclipse-2.1", 10.8, 7888.0, 32, 30.0),
    ("Eclipse-3.0", 14.8, 10593.0, 32, 49.0),
    ("Camel-1.2", 35.5, 608.0, 20, 11.0),
    ("Mylyn", 13.2, 1862.0, 15, 16.0),
    ("PDE", 14.0, 1497.0, 15, 14.0),
    ("Prop-1", 14.8, 18471.0, 20, 137.0),
    ("Prop-2", 10.6, 23014.0, 20, 122.0),
    ("Prop-3", 11.5, 10274.0, 20, 59.0),
    ("Prop-4", 9.6, 8718.0, 20, 42.0),
    ("Prop-5", 15.3, 8516.0, 20, 65.0),
    ("Xalan-2.5", 48.2, 803.0, 20, 19.0),
    ("Xalan-2.6", 46.4, 885.0, 20, 21.0),
    ("Lucene-2.4", 59.7, 340.0, 20, 10.0),
    ("Poi-2.5", 64.4, 385.0, 20, 12.0),
    ("Poi-3.0", 63.6, 442.0, 20, 14.0),
    ("Xerces-1.4", 74.3, 588.0, 20, 22.0),
];

fn epv_reproduction() -> Outcome {
    let mut misses = Vec::new();
    for (name, dr, files, features, published) in OVERVIEW {
        let e = epv(dr / 100.0 * files, files, features, EpvMode::DefectiveCount);
        if (e - published).abs() > 1.0 {
            misses.push(format!("{name} {e:.2} vs {published}"));
        }
    }
    let matched = OVERVIEW.len() - misses.len();
    verdict(misses.is_empty(), format!("{matched}/17 rows within ±1; mismatches: [{}]", misses.join(", ")))
}

// 3 ---------------------------------------------------------------------

fn brute_force_auc(scores: &[f64], labels: &[bool]) -> f64 {
    let (mut twice_wins, mut pairs) = (0u64, 0u64);
    for (i, _) in labels.iter().enumerate().filter(|(_, &l)| l) {
        for (j, _) in labels.iter().enumerate().filter(|(_, &l)| !l) {
            pairs += 1;
            twice_wins += if scores[i] > scores[j] {
                2
            } else if scores[i] == scores[j] {
                1
            } else {
                0
            };
        }
    }
    twice_wins as f64 / (2 * pairs) as f64
}

fn random_instance(r: &mut StudyRng, max_n: usize) -> (Vec<f64>, Vec<bool>) {
    loop {
        let n = r.random_range(2..=max_n);
        let levels = r.random_range(1..=n);
        let s: Vec<f64> = (0..n).map(|_| r.random_range(0..levels) as f64 / levels as f64).collect();
        let l: Vec<bool> = (0..n).map(|_| r.random_bool(0.4)).collect();
        if l.iter().any(|&b| b) && l.iter().any(|&b| !b) {
            return (s, l);
        }
    }
}

fn auc_oracle() -> Outcome {
    let mut r = rng("auc", 0);
    let mut mismatches = 0;
    for _ in 0..1000 {
        let (s, l) = random_instance(&mut r, 50);
        if auc(&s, &l).unwrap().to_bits() != brute_force_auc(&s, &l).to_bits() {
            mismatches += 1;
        }
    }
    verdict(mismatches == 0, format!("{mismatches}/1000 bitwise mismatches"))
}

// 4 ---------------------------------------------------------------------

fn oob_mass() -> Outcome {
    let total: f64 = (0..500)
        .map(|i| bootstrap_split(1000, &mut rng("oob", i)).test.len() as f64 / 1000.0)
        .sum();
    let mean = total / 500.0;
    verdict((0.358..=0.378).contains(&mean), format!("mean out-of-sample fraction {mean:.4}"))
}

// 5 ---------------------------------------------------------------------

fn wilcoxon_paths() -> Outcome {
    let exact6 = wilcoxon_exact_p(&[0.3, 1.2, 0.7, 2.5, 0.05, 1.9]).unwrap();
    let mut r = rng("wilcoxon", 0);
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let n = r.random_range(10..=12);
        let d: Vec<f64> = (0..n).map(|_| r.sample::<f64, _>(StandardNormal) + 0.3).collect();
        worst = worst.max((wilcoxon_exact_p(&d).unwrap() - wilcoxon_normal_p(&d).unwrap()).abs());
    }
    verdict(
        exact6 == 0.03125 && worst <= 0.02,
        format!("exact p(n=6) = {exact6}; max |exact - approx| over 200 = {worst:.4}"),
    )
}

// 6 ---------------------------------------------------------------------

fn cohens_d_bands() -> Outcome {
    let boundaries = [
        (0.2, Magnitude::Negligible),
        (0.5, Magnitude::Small),
        (0.8, Magnitude::Medium),
        (0.2 + 1e-9, Magnitude::Small),
        (0.5 + 1e-9, Magnitude::Medium),
        (0.8 + 1e-9, Magnitude::Large),
    ];
    let bands_ok = boundaries.iter().all(|&(d, m)| Magnitude::from_d(d) == m && Magnitude::from_d(-d) == m);
    let mut r = rng("cohen", 0);
    let mut worst_anti: f64 = 0.0;
    let mut worst_affine: f64 = 0.0;
    for _ in 0..1000 {
        let na = r.random_range(2..40);
        let nb = r.random_range(2..40);
        let a: Vec<f64> = (0..na).map(|_| r.sample::<f64, _>(StandardNormal)).collect();
        let b: Vec<f64> = (0..nb).map(|_| r.sample::<f64, _>(StandardNormal) + 0.5).collect();
        let d = cohens_d(&a, &b).unwrap().d;
        worst_anti = worst_anti.max((d + cohens_d(&b, &a).unwrap().d).abs());
        let (shift, scale) = (r.random_range(-100.0..100.0), r.random_range(0.01..100.0));
        let t = |x: &[f64]| x.iter().map(|v| v * scale + shift).collect::<Vec<f64>>();
        worst_affine = worst_affine.max((cohens_d(&t(&a), &t(&b)).unwrap().d - d).abs() / (1.0 + d.abs()));
    }
    verdict(
        bands_ok && worst_anti <= 1e-12 && worst_affine <= 1e-9,
        format!("bands {bands_ok}; antisymmetry err {worst_anti:.1e}; affine err {worst_affine:.1e}"),
    )
}

// 7 ---------------------------------------------------------------------

fn normal_sample(r: &mut StudyRng, n: usize, mean: f64) -> Vec<f64> {
    (0..n).map(|_| mean + r.sample::<f64, _>(StandardNormal)).collect()
}

fn sk_esd_behaviour() -> Outcome {
    let mut separated = 0;
    let mut collapsed = 0;
    for seed in 0..100 {
        let mut r = rng("sk-separated", seed);
        let d = vec![
            ("a".to_string(), normal_sample(&mut r, 100, 0.0)),
            ("b".to_string(), normal_sample(&mut r, 100, 0.0)),
            ("c".to_string(), normal_sample(&mut r, 100, -3.0)),
        ];
        let t = scott_knott_esd(&d, SkEsdOptions::default()).unwrap();
        if [t.rank_of("a"), t.rank_of("b"), t.rank_of("c")] == [Some(1), Some(1), Some(2)] {
            separated += 1;
        }
        let mut r = rng("sk-identical", seed);
        let d: Vec<(String, Vec<f64>)> =
            ["a", "b", "c"].iter().map(|n| (n.to_string(), normal_sample(&mut r, 100, 0.0))).collect();
        if scott_knott_esd(&d, SkEsdOptions::default()).unwrap().n_ranks() == 1 {
            collapsed += 1;
        }
    }
    verdict(
        separated >= 95 && collapsed >= 90,
        format!("ranks {{1,1,2}} in {separated}/100; single rank in {collapsed}/100"),
    )
}

// 8 ---------------------------------------------------------------------

fn permutation_importance_sanity() -> Outcome {
    let spec = LearnerSpec::new(Family::RandomForest, Mode::Classification);
    let mut sole_first = 0;
    for seed in 0..100 {
        let ds = single_signal(500, 5, seed);
        let run = run_bootstrap(&ds, &spec, &HarnessOptions::new(100, seed)).unwrap();
        let ranks = rank_features(&run, ImportanceMethod::Permutation).unwrap();
        if ranks.members(1) == ["signal"] {
            sole_first += 1;
        }
    }
    verdict(sole_first >= 95, format!("signal is sole rank 1 in {sole_first}/100 runs"))
}

// 9 ---------------------------------------------------------------------

fn regclass(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_regclass")).args(args).env_remove("REGCLASS_OUT").output().unwrap()
}

fn files_under(root: &Path) -> Vec<PathBuf> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for e in fs::read_dir(dir).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push(p.strip_prefix(root).unwrap().to_path_buf());
            }
        }
    }
    out.sort();
    out
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    let synth = regclass(&["synth", "--out", data.to_str().unwrap()]);
    if !synth.status.success() {
        return Outcome::Fail(format!("synth failed: {}", String::from_utf8_lossy(&synth.stderr)));
    }
    let manifest = data.join("manifest.toml");
    let mut outs = Vec::new();
    for threads in ["1", "8"] {
        let out = dir.path().join(format!("t{threads}"));
        let o = regclass(&[
            "run",
            "rq1",
            "--manifest",
            manifest.to_str().unwrap(),
            "--seed",
            "42",
            "--iterations",
            "50",
            "--threads",
            threads,
            "--out",
            out.to_str().unwrap(),
        ]);
        if !o.status.success() {
            return Outcome::Fail(format!("run failed: {}", String::from_utf8_lossy(&o.stderr)));
        }
        outs.push(out);
    }
    let (a, b) = (files_under(&outs[0]), files_under(&outs[1]));
    if a != b {
        return Outcome::Fail("file lists differ".into());
    }
    let differing: Vec<String> = a
        .iter()
        .filter(|f| fs::read(outs[0].join(f)).unwrap() != fs::read(outs[1].join(f)).unwrap())
        .map(|f| f.display().to_string())
        .collect();
    verdict(differing.is_empty(), format!("{} files compared; differing: {differing:?}", a.len()))
}

// 10 --------------------------------------------------------------------

fn monotone_invariance() -> Outcome {
    let mut r = rng("normalize", 0);
    let mut mismatches = 0;
    let mut checked = 0;
    while checked < 1000 {
        let n = r.random_range(2..60);
        let (lo, hi) = (r.random_range(-1e3..0.0), r.random_range(0.0..1e3));
        let s: Vec<f64> = (0..n).map(|_| r.random_range(lo..hi)).collect();
        let l: Vec<bool> = (0..n).map(|_| r.random_bool(0.5)).collect();
        if s.iter().all(|v| *v == s[0]) || !l.contains(&true) || !l.contains(&false) {
            continue;
        }
        checked += 1;
        if auc(&normalize_scores(&s), &l).unwrap() != auc(&s, &l).unwrap() {
            mismatches += 1;
        }
    }
    verdict(mismatches == 0, format!("{mismatches}/1000 mismatches"))
}

// 11 --------------------------------------------------------------------

fn promise_tier() -> Outcome {
    let Ok(path) = std::env::var("REGCLASS_PROMISE_MANIFEST") else {
        return Outcome::Skip("set REGCLASS_PROMISE_MANIFEST to a manifest of the PROMISE CSVs".into());
    };
    let iterations = std::env::var("REGCLASS_PROMISE_ITERATIONS").ok().and_then(|v| v.parse().ok()).unwrap_or(100);
    let manifest = match DatasetManifest::from_path(Path::new(&path)) {
        Ok(m) => m,
        Err(e) => return Outcome::Fail(format!("manifest: {e}")),
    };
    let mut datasets = Vec::new();
    for entry in &manifest.entries {
        match load_dataset(entry) {
            Ok(ds) => datasets.push(StudyDataset { dataset: ds, prefer: entry.prefer.clone() }),
            Err(e) => return Outcome::Fail(format!("{}: {e}", entry.name)),
        }
    }
    let cfg = StudyConfig { repetitions: iterations, master_seed: 1, ..StudyConfig::default() };
    let report = match prepare_admitted(&datasets, &cfg).and_then(|p| run_rq1(&p, &cfg)) {
        Ok((report, _)) => report,
        Err(e) => return Outcome::Fail(e.to_string()),
    };
    let mut ok = true;
    let mut notes = Vec::new();
    for (name, disc, reg) in [("Eclipse-2.0", 0.84, 0.84), ("Prop-4", 0.72, 0.77)] {
        match report.rows.iter().find(|r| r.dataset.eq_ignore_ascii_case(name)) {
            Some(row) => {
                let close = (row.mean_auc_discretized - disc).abs() <= 0.05
                    && (row.mean_auc_regression - reg).abs() <= 0.05;
                ok &= close;
                notes.push(format!("{name} {:.3}/{:.3}", row.mean_auc_discretized, row.mean_auc_regression));
            }
            None => {
                ok = false;
                notes.push(format!("{name} missing"));
            }
        }
    }
    let majority = |pred: &dyn Fn(f64) -> bool, want_positive: bool| {
        let rows: Vec<_> = report.rows.iter().filter(|r| pred(r.defective_ratio)).collect();
        let agreeing = rows
            .iter()
            .filter(|r| (r.mean_auc_regression > r.mean_auc_discretized) == want_positive)
            .count();
        (agreeing, rows.len())
    };
    let (lo_agree, lo_n) = majority(&|dr| dr < 0.15, true);
    let (hi_agree, hi_n) = majority(&|dr| dr > 0.35, false);
    ok &= 2 * lo_agree > lo_n && 2 * hi_agree > hi_n;
    notes.push(format!("DR<15% regression ahead {lo_agree}/{lo_n}; DR>35% discretized ahead {hi_agree}/{hi_n}"));
    verdict(ok, notes.join("; "))
}

// 12 --------------------------------------------------------------------

fn r2_decoupling() -> Outcome {
    let ds = heavy_noise_counts(500, 7);
    let run = run_bootstrap(&ds, &LearnerSpec::new(Family::RandomForest, Mode::Regression), &HarnessOptions::new(100, 7))
        .unwrap();
    let r2: Vec<f64> = run.valid().filter_map(|i| i.r_squared).collect();
    let mean_r2 = r2.iter().sum::<f64>() / r2.len() as f64;
    let mean_auc = run.mean_auc();
    verdict(mean_auc >= 0.7 && mean_r2 <= 0.3, format!("mean AUC {mean_auc:.3}, mean R² {mean_r2:.3}"))
}

// -----------------------------------------------------------------------

type Criterion = (u32, &'static str, Duration, fn() -> Outcome);

/// Criteria that cannot pass as stated. They still report FAIL, but do not
/// abort the suite; one that starts passing does.
const UNATTAINABLE: [(u32, &str); 1] = [(
    2,
    "the Eclipse-2.1 row's published EPV (30) does not follow from its own DR, file and feature counts",
)];

fn main() {
    let secs = Duration::from_secs;
    let criteria: [Criterion; 12] = [
        (1, "rank-shift worked example", secs(1), rank_shift_example),
        (2, "EPV of the published overview", secs(1), epv_reproduction),
        (3, "AUC equals all-pairs oracle", secs(5), auc_oracle),
        (4, "out-of-sample mass", secs(5), oob_mass),
        (5, "Wilcoxon exact vs approximate", secs(10), wilcoxon_paths),
        (6, "Cohen's d bands and invariances", secs(5), cohens_d_bands),
        (7, "SK-ESD separation and collapse", secs(30), sk_esd_behaviour),
        (8, "permutation importance sanity", secs(180), permutation_importance_sanity),
        (9, "thread-count determinism", secs(120), determinism),
        (10, "AUC invariant to normalization", secs(5), monotone_invariance),
        (11, "PROMISE corpus reproduction", secs(2 * 3600), promise_tier),
        (12, "low R² with useful AUC", secs(120), r2_decoupling),
    ];
    let mut failed = Vec::new();
    let mut stale = Vec::new();
    for (id, name, budget, check) in criteria {
        let started = Instant::now();
        let outcome = check();
        let elapsed = started.elapsed();
        let timing = format!("{:.2}s of {}s", elapsed.as_secs_f64(), budget.as_secs());
        let (tag, detail) = match outcome {
            Outcome::Pass(d) if elapsed <= budget => ("PASS", d),
            Outcome::Pass(d) => ("FAIL", format!("{d}; over time budget")),
            Outcome::Fail(d) => ("FAIL", d),
            Outcome::Skip(d) => ("SKIP", d),
        };
        let known = UNATTAINABLE.iter().find(|(k, _)| *k == id).map(|(_, why)| *why);
        match (tag, known) {
            ("FAIL", Some(why)) => println!("[FAIL] criterion {id:>2} {name}: {detail} ({timing}); unattainable: {why}"),
            _ => println!("[{tag}] criterion {id:>2} {name}: {detail} ({timing})"),
        }
        match (tag, known) {
            ("FAIL", None) => failed.push(id),
            ("PASS", Some(_)) => stale.push(id),
            _ => {}
        }
    }
    if !failed.is_empty() {
        eprintln!("failed criteria: {failed:?}");
    }
    if !stale.is_empty() {
        eprintln!("criteria listed as unattainable now pass: {stale:?}");
    }
    if !(failed.is_empty() && stale.is_empty()) {
        std::process::exit(1);
    }
}
