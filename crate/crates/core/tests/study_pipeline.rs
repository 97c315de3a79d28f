use regclass_core::corpus::{load_dataset, summarize};
use regclass_core::learners::{Family, Hyperparameters};
use regclass_core::prefilter::prefilter;
use regclass_core::study::{
    prepare_admitted, run_importance_comparison, run_preliminary, run_r2_study, run_ratio_sweep, run_rq1, run_rq2,
    ImportanceMethod, PreparedDataset, StudyConfig, StudyDataset,
};
use regclass_core::synthetic::{all_noise, metric_like, suite, write_datasets};
use regclass_core::{DatasetManifest, DefectDataset, EpvMode, Error, Matrix};

fn quick_config() -> StudyConfig {
    StudyConfig {
        repetitions: 12,
        master_seed: 9,
        hyperparameters: Hyperparameters { trees: 15, ..Hyperparameters::default() },
        ..StudyConfig::default()
    }
}

fn prepared(cfg: &StudyConfig) -> Vec<PreparedDataset> {
    let sds: Vec<StudyDataset> = suite(1).into_iter().map(StudyDataset::from).collect();
    prepare_admitted(&sds, cfg).unwrap()
}

fn with_column(ds: &DefectDataset, name: &str, values: Vec<f64>) -> DefectDataset {
    let mut cols: Vec<Vec<f64>> = (0..ds.n_features()).map(|j| ds.features.column(j)).collect();
    cols.push(values);
    let mut names = ds.feature_names.clone();
    names.push(name.into());
    DefectDataset::new(
        ds.name.clone(),
        ds.module_ids.clone(),
        names,
        Matrix::from_columns(&cols).unwrap(),
        ds.defect_counts.clone(),
    )
    .unwrap()
}

#[test]
fn written_suite_loads_back_identically() {
    let dir = tempfile::tempdir().unwrap();
    let datasets = suite(3);
    let manifest = DatasetManifest::from_path(&write_datasets(dir.path(), &datasets).unwrap()).unwrap();
    assert_eq!(manifest.entries.len(), 3);
    for (entry, original) in manifest.entries.iter().zip(&datasets) {
        let loaded = load_dataset(entry).unwrap();
        assert_eq!(loaded.feature_names, original.feature_names);
        assert_eq!(loaded.features, original.features);
        assert_eq!(loaded.defect_counts, original.defect_counts);
        assert!(loaded.source_digest.is_some());
        assert!(summarize(&loaded, EpvMode::DefectiveCount).admitted, "{}", loaded.name);
    }
}

#[test]
fn prefilter_drops_monotone_copy_and_honours_preference() {
    let base = metric_like("m", 400, 0.3, 2);
    let copy: Vec<f64> = base.features.column(0).iter().map(|v| 3.0 * v + 1.0).collect();
    let ds = with_column(&base, "loc_copy", copy);
    let report = prefilter(&ds, 0.7, 0.9, &[]).unwrap();
    let kept_loc = report.kept.iter().filter(|f| f.starts_with("loc")).count();
    assert_eq!(kept_loc, 1, "{:?}", report.kept);
    let preferred = prefilter(&ds, 0.7, 0.9, &["loc_copy".to_string()]).unwrap();
    assert!(preferred.kept.contains(&"loc_copy".to_string()));
    assert!(!preferred.kept.contains(&"loc".to_string()));
}

#[test]
fn prefilter_drops_linear_combination_as_redundant() {
    let base = metric_like("m", 400, 0.3, 4);
    // equal-variance terms, so no single column dominates the sum
    let combo: Vec<f64> = base.features.rows().map(|r| 2.57 * r[3] + 2.03 * r[4] + r[5]).collect();
    let ds = with_column(&base, "sum_small", combo);
    let report = prefilter(&ds, 0.7, 0.9, &[]).unwrap();
    assert!(!report.dropped_redundant.is_empty(), "{report:?}");
    assert_eq!(report.kept.len(), 6);
}

#[test]
fn nothing_admitted_is_an_error() {
    let tiny = all_noise(60, 5, 0.2, 1);
    let err = prepare_admitted(&[StudyDataset::from(tiny)], &quick_config()).unwrap_err();
    assert!(matches!(err, Error::InvalidInput(ref m) if m.contains("no admitted datasets")));
}

#[test]
fn rq1_rows_are_sorted_and_consistent() {
    let cfg = quick_config();
    let (report, pairs) = run_rq1(&prepared(&cfg), &cfg).unwrap();
    assert_eq!(report.rows.len(), 3);
    assert!(report.rows.windows(2).all(|w| w[0].defective_ratio <= w[1].defective_ratio));
    for (row, s) in report.rows.iter().zip(&report.ratio_series) {
        assert_eq!(row.dataset, s.dataset);
        assert!(row.n_pairs >= 10);
        assert!((0.0..=1.0).contains(&row.p_value));
        assert!(row.mean_auc_discretized > 0.6 && row.mean_auc_regression > 0.6, "{row:?}");
        assert!(s.ratios.iter().all(|r| r.is_finite() && *r > 0.0));
    }
    for pair in &pairs {
        let a: Vec<_> = pair.discretized.iterations.iter().map(|i| &i.split_digest).collect();
        let b: Vec<_> = pair.regression.iterations.iter().map(|i| &i.split_digest).collect();
        assert_eq!(a, b);
    }
}

#[test]
fn rq2_shifts_are_bounded_and_summarized() {
    let cfg = quick_config();
    let (reports, _) = run_rq2(&prepared(&cfg), &cfg, ImportanceMethod::Permutation).unwrap();
    assert_eq!(reports.len(), 1);
    let r = &reports[0];
    assert_eq!(r.datasets.len(), 3);
    assert_eq!(r.per_rank.iter().map(|s| s.k).collect::<Vec<_>>(), vec![1, 2, 3]);
    for d in &r.datasets {
        let pn = d.shifts.pn as f64;
        for e in &d.shifts.entries {
            // each feature moves at most pn - 1 ranks and appears at most twice
            assert!(e.shift >= 0.0 && e.shift <= 2.0 * (pn - 1.0), "{e:?}");
        }
    }
}

#[test]
fn impurity_rank_shifts_need_tree_families() {
    let cfg = StudyConfig { families: vec![Family::Knn], ..quick_config() };
    let err = run_rq2(&prepared(&cfg), &cfg, ImportanceMethod::Impurity).unwrap_err();
    assert!(matches!(err, Error::Unsupported(_)));
}

#[test]
fn importance_comparison_uses_one_set_of_runs() {
    let cfg = quick_config();
    let (cmp, pairs) = run_importance_comparison(&prepared(&cfg), &cfg).unwrap();
    assert_eq!(cmp.permutation.datasets.len(), cmp.impurity.datasets.len());
    assert!(pairs.iter().all(|p| p.discretized.valid().all(|i| i.impurity_importance.is_some())));
}

#[test]
fn ratio_sweep_hits_grid() {
    let cfg = StudyConfig { ratio_grid: vec![0.1, 0.2, 0.3], repetitions: 8, ..quick_config() };
    let data = prepared(&cfg);
    let report = run_ratio_sweep(&data[1..2], &cfg).unwrap();
    let d = &report.datasets[0];
    assert_eq!(d.points.len(), 3);
    for p in &d.points {
        assert!((p.actual_ratio - p.target_ratio).abs() < 0.01, "{p:?}");
    }
    if let Some(rho) = d.spearman_rho {
        assert!((-1.0..=1.0).contains(&rho));
    }
}

#[test]
fn r2_and_preliminary_studies_run() {
    let cfg = StudyConfig { families: vec![Family::Statistical, Family::DecisionTree], ..quick_config() };
    let data = prepared(&cfg);
    let (r2, runs) = run_r2_study(&data, &cfg).unwrap();
    assert_eq!(r2.rows.len(), 6);
    assert_eq!(runs.len(), 6);
    assert!(r2.rows.iter().all(|r| r.mean_r_squared <= 1.0 && r.n_pairs > 0));
    let (prelim, runs) = run_preliminary(&data, &cfg).unwrap();
    assert_eq!(runs.len(), 12);
    assert_eq!(prelim.average_ranks.len(), 4);
    assert!(prelim.average_ranks.iter().any(|r| r.best));
    assert!(prelim.average_ranks.iter().all(|r| r.average_rank >= 1.0));
}
