//! `regclass`: validate defect datasets, run the comparison studies, and
//! report on finished runs.

mod persist;
mod plots;
mod render;

use std::fmt;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use regclass_core::corpus::{load_dataset, summarize, DatasetManifest, EpvMode};
use regclass_core::harness::BootstrapRun;
use regclass_core::learners::{Family, Hyperparameters};
use regclass_core::prefilter::{prefilter, DEFAULT_CORRELATION_THRESHOLD, DEFAULT_REDUNDANCY_CUTOFF};
use regclass_core::study::{
    self, parse_grid, ArmPair, ImportanceMethod, PreparedDataset, StudyConfig, StudyDataset,
};
use regclass_core::synthetic;

use persist::{
    fmt_f64, iterations_table, normalized_command, path_component, read_record, verify, DatasetDigest, RunRecord,
    RunWriter, SUMMARY_FILE,
};
use render::{plot_files, report_text, summary_table, StudyOutput};

/// An error caused by the user's input or environment (exit code 1).
#[derive(Debug)]
pub struct UserError(pub String);

impl fmt::Display for UserError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UserError {}

#[derive(Parser)]
#[command(name = "regclass", version, about = "Discretized vs regression-based defect classifier studies")]
struct Cli {
    /// More log output (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Summarize the datasets of a manifest and check admission.
    Validate {
        manifest: PathBuf,
        #[arg(long, default_value = "defective-count")]
        epv_mode: EpvMode,
        #[arg(long, default_value_t = DEFAULT_CORRELATION_THRESHOLD)]
        corr_threshold: f64,
        #[arg(long, default_value_t = DEFAULT_REDUNDANCY_CUTOFF)]
        redun_cutoff: f64,
    },
    /// Run a study and write its results.
    Run(RunArgs),
    /// Verify a finished run and print its tables; plots are regenerated
    /// under `<run_dir>/report/`.
    Report { run_dir: PathBuf },
    /// Write a synthetic dataset suite with a manifest.
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum StudyName {
    Prelim,
    Rq1,
    Rq2,
    RatioSweep,
    R2,
    ImportanceCmp,
}

impl StudyName {
    fn as_str(self) -> &'static str {
        match self {
            StudyName::Prelim => "prelim",
            StudyName::Rq1 => "rq1",
            StudyName::Rq2 => "rq2",
            StudyName::RatioSweep => "ratio-sweep",
            StudyName::R2 => "r2",
            StudyName::ImportanceCmp => "importance-cmp",
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ImportanceArg {
    Permutation,
    Impurity,
}

#[derive(clap::Args)]
struct RunArgs {
    study: StudyName,
    #[arg(long)]
    manifest: PathBuf,
    /// Output root; results go to `<out>/<study>/`.
    #[arg(long, env = "REGCLASS_OUT", default_value = "regclass-out")]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Bootstrap repetitions per dataset and learner.
    #[arg(long, default_value_t = 100)]
    iterations: usize,
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long)]
    threads: Option<usize>,
    /// Comma-separated learner families.
    #[arg(long, value_delimiter = ',')]
    learners: Vec<Family>,
    #[arg(long, default_value_t = DEFAULT_CORRELATION_THRESHOLD)]
    corr_threshold: f64,
    #[arg(long, default_value_t = DEFAULT_REDUNDANCY_CUTOFF)]
    redun_cutoff: f64,
    #[arg(long, default_value_t = 100)]
    trees: usize,
    #[arg(long, default_value_t = 10)]
    knn_k: usize,
    /// Defective-ratio grid in percent, `start:stop:step`.
    #[arg(long, default_value = "5:50:5")]
    grid: String,
    /// Ranks compared by the shift analyses.
    #[arg(long, value_delimiter = ',', default_value = "1,2,3")]
    ranks: Vec<usize>,
    /// Importance method for rq2.
    #[arg(long, value_enum, default_value = "permutation")]
    importance: ImportanceArg,
    #[arg(long, default_value = "defective-count")]
    epv_mode: EpvMode,
    /// Replace an existing output directory.
    #[arg(long)]
    force: bool,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

/// 1 for user and configuration errors, 2 for internal failures.
fn exit_code(e: &anyhow::Error) -> u8 {
    for cause in e.chain() {
        if let Some(core) = cause.downcast_ref::<regclass_core::Error>() {
            return if core.is_user_error() { 1 } else { 2 };
        }
        if cause.is::<UserError>() || cause.is::<std::io::Error>() || cause.is::<serde_json::Error>() {
            return 1;
        }
    }
    2
}

fn dispatch(cmd: Command) -> Result<ExitCode> {
    match cmd {
        Command::Validate { manifest, epv_mode, corr_threshold, redun_cutoff } => {
            cmd_validate(&manifest, epv_mode, corr_threshold, redun_cutoff)
        }
        Command::Run(args) => cmd_run(args).map(|_| ExitCode::SUCCESS),
        Command::Report { run_dir } => cmd_report(&run_dir).map(|_| ExitCode::SUCCESS),
        Command::Synth { out, seed } => {
            let manifest = synthetic::write_datasets(&out, &synthetic::suite(seed))?;
            println!("wrote {}", manifest.display());
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn load_manifest(path: &Path) -> Result<Vec<StudyDataset>> {
    let manifest = DatasetManifest::from_path(path)?;
    if manifest.entries.is_empty() {
        return Err(UserError(format!("{}: no datasets", path.display())).into());
    }
    manifest
        .entries
        .iter()
        .map(|e| Ok(StudyDataset { dataset: load_dataset(e)?, prefer: e.prefer.clone() }))
        .collect()
}

fn cmd_validate(manifest: &Path, mode: EpvMode, corr: f64, redun: f64) -> Result<ExitCode> {
    let datasets = load_manifest(manifest)?;
    let header: Vec<String> =
        ["dataset", "modules", "features", "defective_ratio", "epv", "facra", "status"].map(String::from).to_vec();
    let mut rows = Vec::new();
    let mut admitted = 0;
    for sd in &datasets {
        let s = summarize(&sd.dataset, mode);
        let facra = prefilter(&sd.dataset, corr, redun, &sd.prefer).map_or("-".to_string(), |r| r.kept.len().to_string());
        admitted += usize::from(s.admitted);
        rows.push(vec![
            s.name.clone(),
            s.n_modules.to_string(),
            s.n_features.to_string(),
            format!("{:.1}%", 100.0 * s.defective_ratio),
            format!("{:.2}", s.epv),
            facra,
            match &s.rejection_reason {
                None => "admitted".to_string(),
                Some(r) => format!("rejected: {r}"),
            },
        ]);
    }
    print!("{}", render::text_table(&(header, rows)));
    if admitted == 0 {
        eprintln!("no dataset admitted");
        return Ok(ExitCode::from(1));
    }
    Ok(ExitCode::SUCCESS)
}

fn build_config(args: &RunArgs) -> Result<StudyConfig> {
    let default_families = match args.study {
        StudyName::Prelim => Family::ALL.to_vec(),
        _ => vec![Family::RandomForest],
    };
    let families = if args.learners.is_empty() { default_families } else { args.learners.clone() };
    if args.study == StudyName::ImportanceCmp && families != [Family::RandomForest] {
        return Err(UserError("importance-cmp runs the random_forest family only".into()).into());
    }
    if args.trees == 0 || args.knn_k == 0 {
        return Err(UserError("--trees and --knn-k must be positive".into()).into());
    }
    let hyperparameters = Hyperparameters { trees: args.trees, knn_k: args.knn_k, ..Hyperparameters::default() };
    let cfg = StudyConfig {
        repetitions: args.iterations,
        master_seed: args.seed,
        families,
        hyperparameters,
        corr_threshold: args.corr_threshold,
        redun_cutoff: args.redun_cutoff,
        ratio_grid: parse_grid(&args.grid)?,
        ranks: args.ranks.clone(),
        epv_mode: args.epv_mode,
    };
    cfg.validate()?;
    Ok(cfg)
}

fn write_run(w: &mut RunWriter, run: &BootstrapRun) -> Result<()> {
    let (h, rows) = iterations_table(run);
    let rel = format!(
        "{}/{}_{}_iterations.csv",
        path_component(&run.dataset),
        run.learner.family,
        run.learner.mode
    );
    w.write_csv(&rel, &h, &rows)
}

fn write_pairs(w: &mut RunWriter, pairs: &[ArmPair]) -> Result<()> {
    for p in pairs {
        write_run(w, &p.discretized)?;
        write_run(w, &p.regression)?;
    }
    Ok(())
}

fn write_rq2_details(w: &mut RunWriter, r: &regclass_core::study::Rq2Report) -> Result<()> {
    let method = serde_json::to_value(r.method)?.as_str().unwrap_or_default().to_string();
    for d in &r.datasets {
        let dir = path_component(&d.dataset);
        for (arm, table) in [("discretized", &d.ranks_discretized), ("regression", &d.ranks_regression)] {
            let (h, rows) = render::rank_table(table, fmt_f64);
            w.write_csv(&format!("{dir}/feature_ranks_{}_{method}_{arm}.csv", r.family), &h, &rows)?;
        }
        let header: Vec<String> = ["rank", "shift", "regression_at_rank", "discretized_at_rank"].map(String::from).to_vec();
        let rows = d
            .shifts
            .entries
            .iter()
            .map(|e| {
                vec![
                    e.k.to_string(),
                    fmt_f64(e.shift),
                    e.features_at_k_first.join(" "),
                    e.features_at_k_second.join(" "),
                ]
            })
            .collect::<Vec<_>>();
        w.write_csv(&format!("{dir}/shifts_{}_{method}.csv", r.family), &header, &rows)?;
    }
    Ok(())
}

fn cmd_run(args: RunArgs) -> Result<()> {
    let started = Instant::now();
    let cfg = build_config(&args)?;
    if let Some(n) = args.threads {
        if n == 0 {
            return Err(UserError("--threads must be positive".into()).into());
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().context("configuring worker threads")?;
    }
    let datasets = load_manifest(&args.manifest)?;
    let prepared: Vec<PreparedDataset> = study::prepare_admitted(&datasets, &cfg)?;
    let root = args.out.join(args.study.as_str());
    let mut w = RunWriter::create(&root, args.force)?;

    let header: Vec<String> = ["dataset", "modules", "features", "defective_ratio", "epv", "admitted", "facra"]
        .map(String::from)
        .to_vec();
    let rows: Vec<Vec<String>> = prepared
        .iter()
        .map(|p| {
            vec![
                p.summary.name.clone(),
                p.summary.n_modules.to_string(),
                p.summary.n_features.to_string(),
                fmt_f64(p.summary.defective_ratio),
                fmt_f64(p.summary.epv),
                p.summary.admitted.to_string(),
                p.prefilter.kept.len().to_string(),
            ]
        })
        .collect();
    w.write_csv("datasets.csv", &header, &rows)?;
    for p in &prepared {
        w.write_json(&format!("{}/prefilter.json", path_component(&p.data.name)), &p.prefilter)?;
    }

    let output = match args.study {
        StudyName::Prelim => {
            let (report, runs) = study::run_preliminary(&prepared, &cfg)?;
            for r in &runs {
                write_run(&mut w, r)?;
            }
            for d in &report.datasets {
                let (h, rows) = render::rank_table(&d.ranks, fmt_f64);
                w.write_csv(&format!("{}/learner_ranks.csv", path_component(&d.dataset)), &h, &rows)?;
            }
            StudyOutput::Prelim(report)
        }
        StudyName::Rq1 => {
            let (report, pairs) = study::run_rq1(&prepared, &cfg)?;
            write_pairs(&mut w, &pairs)?;
            StudyOutput::Rq1(report)
        }
        StudyName::Rq2 => {
            let method = match args.importance {
                ImportanceArg::Permutation => ImportanceMethod::Permutation,
                ImportanceArg::Impurity => ImportanceMethod::Impurity,
            };
            let (reports, pairs) = study::run_rq2(&prepared, &cfg, method)?;
            write_pairs(&mut w, &pairs)?;
            for r in &reports {
                write_rq2_details(&mut w, r)?;
            }
            StudyOutput::Rq2(reports)
        }
        StudyName::RatioSweep => {
            let report = study::run_ratio_sweep(&prepared, &cfg)?;
            for d in &report.datasets {
                let header: Vec<String> = ["target_ratio", "actual_ratio", "mean_auc_discretized", "mean_auc_regression", "mean_auc_ratio"]
                    .map(String::from)
                    .to_vec();
                let rows = d
                    .points
                    .iter()
                    .map(|p| {
                        [p.target_ratio, p.actual_ratio, p.mean_auc_discretized, p.mean_auc_regression, p.mean_auc_ratio]
                            .map(fmt_f64)
                            .to_vec()
                    })
                    .collect::<Vec<_>>();
                w.write_csv(&format!("{}/sweep_{}.csv", path_component(&d.dataset), d.family), &header, &rows)?;
            }
            StudyOutput::RatioSweep(report)
        }
        StudyName::R2 => {
            let (report, runs) = study::run_r2_study(&prepared, &cfg)?;
            for r in &runs {
                write_run(&mut w, r)?;
            }
            StudyOutput::R2(report)
        }
        StudyName::ImportanceCmp => {
            let (cmp, pairs) = study::run_importance_comparison(&prepared, &cfg)?;
            write_pairs(&mut w, &pairs)?;
            write_rq2_details(&mut w, &cmp.permutation)?;
            write_rq2_details(&mut w, &cmp.impurity)?;
            StudyOutput::ImportanceCmp(cmp)
        }
    };

    w.write_json(SUMMARY_FILE, &output)?;
    let (h, rows) = summary_table(&output, fmt_f64);
    w.write_csv("summary.csv", &h, &rows)?;
    for (rel, svg) in plot_files(&output) {
        w.write_bytes(&rel, svg.as_bytes())?;
    }
    let record = RunRecord {
        tool: "regclass".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        study: args.study.as_str().into(),
        command: normalized_command(&std::env::args().collect::<Vec<_>>()),
        config: cfg,
        datasets: datasets
            .iter()
            .map(|sd| DatasetDigest {
                name: sd.dataset.name.clone(),
                source_sha256: sd.dataset.source_digest.clone(),
                data_sha256: sd.dataset.digest(),
            })
            .collect(),
        files: Vec::new(),
    };
    let root = w.finish(record)?;
    print!("{}", report_text(&output));
    eprintln!("wrote {} in {:.1}s", root.display(), started.elapsed().as_secs_f64());
    Ok(())
}

fn cmd_report(run_dir: &Path) -> Result<()> {
    let record = read_record(run_dir)?;
    verify(run_dir, &record)?;
    let text = std::fs::read_to_string(run_dir.join(SUMMARY_FILE))
        .map_err(|e| UserError(format!("missing {SUMMARY_FILE}: {e}")))?;
    let output: StudyOutput =
        serde_json::from_str(&text).map_err(|e| UserError(format!("corrupt {SUMMARY_FILE}: {e}")))?;
    println!("study {} (seed {}, {} iterations)", record.study, record.config.master_seed, record.config.repetitions);
    print!("{}", report_text(&output));
    let report_dir = run_dir.join("report");
    for (rel, svg) in plot_files(&output) {
        let path = report_dir.join(rel);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
        }
        std::fs::write(&path, svg).with_context(|| format!("writing {}", path.display()))?;
    }
    eprintln!("plots regenerated under {}", report_dir.display());
    Ok(())
}
