//! Experiment orchestration: learner ranking, paired discretized versus
//! regression-based comparisons, importance rank shifts, and the follow-up
//! studies on defective ratio, R² and importance method.

use std::collections::BTreeMap;

use log::info;
use serde::{Deserialize, Serialize};

use crate::corpus::{resample_to_ratio, summarize, DatasetSummary, DefectDataset, EpvMode};
use crate::error::{Error, Result};
use crate::harness::{run_bootstrap, BootstrapRun, HarnessOptions};
use crate::learners::{Family, Hyperparameters, LearnerSpec, Mode};
use crate::prefilter::{prefilter, PrefilterReport, DEFAULT_CORRELATION_THRESHOLD, DEFAULT_REDUNDANCY_CUTOFF};
use crate::seed::{derive_seed, rng_from_seed};
use crate::stats::{
    compare_paired, mean, sample_variance, scott_knott_esd, spearman, wilcoxon_signed_rank, Direction, Magnitude,
    RankTable, SkEsdOptions, WilcoxonMethod,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyConfig {
    pub repetitions: usize,
    pub master_seed: u64,
    pub families: Vec<Family>,
    pub hyperparameters: Hyperparameters,
    pub corr_threshold: f64,
    pub redun_cutoff: f64,
    pub ratio_grid: Vec<f64>,
    /// Ranks compared in rank-shift analyses.
    pub ranks: Vec<usize>,
    pub epv_mode: EpvMode,
}

impl Default for StudyConfig {
    fn default() -> Self {
        Self {
            repetitions: 100,
            master_seed: 0,
            families: vec![Family::RandomForest],
            hyperparameters: Hyperparameters::default(),
            corr_threshold: DEFAULT_CORRELATION_THRESHOLD,
            redun_cutoff: DEFAULT_REDUNDANCY_CUTOFF,
            ratio_grid: default_ratio_grid(),
            ranks: vec![1, 2, 3],
            epv_mode: EpvMode::default(),
        }
    }
}

/// 5% to 50% in steps of 5%.
pub fn default_ratio_grid() -> Vec<f64> {
    (1..=10).map(|i| (i * 5) as f64 / 100.0).collect()
}

/// Parse `start:stop:step` in percent, e.g. `5:50:5`.
pub fn parse_grid(spec: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = spec.split(':').collect();
    let bad = || Error::InvalidInput(format!("grid {spec:?} is not start:stop:step in percent"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let nums: Vec<u32> = parts.iter().map(|p| p.trim().parse().map_err(|_| bad())).collect::<Result<_>>()?;
    let (start, stop, step) = (nums[0], nums[1], nums[2]);
    if step == 0 || start == 0 || stop >= 100 || start > stop {
        return Err(bad());
    }
    Ok((start..=stop).step_by(step as usize).map(|p| p as f64 / 100.0).collect())
}

impl StudyConfig {
    pub fn validate(&self) -> Result<()> {
        if self.repetitions == 0 {
            return Err(Error::InvalidInput("repetitions must be at least 1".into()));
        }
        if self.families.is_empty() {
            return Err(Error::InvalidInput("no learner families selected".into()));
        }
        if self.ratio_grid.iter().any(|&r| !(r > 0.0 && r < 1.0)) || self.ratio_grid.windows(2).any(|w| w[1] <= w[0])
        {
            return Err(Error::InvalidInput("ratio grid must be strictly increasing within (0, 1)".into()));
        }
        if self.ranks.is_empty() || self.ranks.contains(&0) {
            return Err(Error::InvalidInput("rank list must be non-empty and 1-based".into()));
        }
        Ok(())
    }

    fn options(&self, impurity: bool) -> HarnessOptions {
        HarnessOptions { repetitions: self.repetitions, master_seed: self.master_seed, impurity_importance: impurity }
    }

    fn spec(&self, family: Family, mode: Mode) -> LearnerSpec {
        LearnerSpec::new(family, mode).with_params(self.hyperparameters.clone())
    }
}

/// A loaded dataset with its preferred cluster representatives.
#[derive(Debug, Clone)]
pub struct StudyDataset {
    pub dataset: DefectDataset,
    pub prefer: Vec<String>,
}

impl From<DefectDataset> for StudyDataset {
    fn from(dataset: DefectDataset) -> Self {
        Self { dataset, prefer: Vec::new() }
    }
}

/// Admission summary, pre-filter outcome, and the dataset restricted to
/// the surviving features.
#[derive(Debug, Clone)]
pub struct PreparedDataset {
    pub summary: DatasetSummary,
    pub prefilter: PrefilterReport,
    pub data: DefectDataset,
}

pub fn prepare(sd: &StudyDataset, cfg: &StudyConfig) -> Result<PreparedDataset> {
    let ds = &sd.dataset;
    let summary = summarize(ds, cfg.epv_mode);
    let report = prefilter(ds, cfg.corr_threshold, cfg.redun_cutoff, &sd.prefer)?;
    let kept: Vec<String> = ds.feature_names.iter().filter(|f| report.kept.contains(f)).cloned().collect();
    let data = ds.select_features(&kept)?;
    Ok(PreparedDataset { summary, prefilter: report, data })
}

/// Prepare every dataset and keep the admitted ones.
pub fn prepare_admitted(datasets: &[StudyDataset], cfg: &StudyConfig) -> Result<Vec<PreparedDataset>> {
    let mut out = Vec::new();
    for sd in datasets {
        let p = prepare(sd, cfg)?;
        if p.summary.admitted {
            out.push(p);
        } else {
            log::warn!(
                "{}: not admitted ({})",
                p.summary.name,
                p.summary.rejection_reason.as_deref().unwrap_or("unknown")
            );
        }
    }
    if out.is_empty() {
        return Err(Error::InvalidInput("no admitted datasets".into()));
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ImportanceMethod {
    Permutation,
    Impurity,
}

/// Scott-Knott ESD ranking of features by their per-iteration importance.
pub fn rank_features(run: &BootstrapRun, method: ImportanceMethod) -> Result<RankTable> {
    if run.n_valid() < 2 {
        return Err(Error::InvalidInput(format!("{}: fewer than 2 valid iterations", run.dataset)));
    }
    let mut dists = Vec::with_capacity(run.feature_names.len());
    for (j, name) in run.feature_names.iter().enumerate() {
        let values = match method {
            ImportanceMethod::Permutation => run.permutation_values(j),
            ImportanceMethod::Impurity => run.impurity_values(j).ok_or_else(|| {
                Error::Unsupported(format!("{} did not record impurity importance", run.learner.id()))
            })?,
        };
        dists.push((name.clone(), values));
    }
    scott_knott_esd(&dists, SkEsdOptions::default())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShiftEntry {
    pub k: usize,
    pub shift: f64,
    pub features_at_k_first: Vec<String>,
    pub features_at_k_second: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShiftReport {
    pub dataset: String,
    pub pn: usize,
    pub entries: Vec<ShiftEntry>,
}

/// Normalized total rank displacement, per requested rank `k`, of the
/// features each table places at rank `k`.
pub fn rank_shifts(
    dataset: &str,
    first: &RankTable,
    second: &RankTable,
    pn: usize,
    ks: &[usize],
) -> Result<ShiftReport> {
    if pn == 0 {
        return Err(Error::InvalidInput("feature count must be at least 1".into()));
    }
    let mut a: Vec<&String> = first.treatments.iter().collect();
    let mut b: Vec<&String> = second.treatments.iter().collect();
    a.sort();
    b.sort();
    if a != b {
        return Err(Error::InvalidInput(format!("{dataset}: rank tables cover different features")));
    }
    let entries = ks
        .iter()
        .map(|&k| {
            let at_first: Vec<String> = first.members(k).into_iter().map(String::from).collect();
            let at_second: Vec<String> = second.members(k).into_iter().map(String::from).collect();
            let displacement = |names: &[String], other: &RankTable| -> usize {
                names.iter().map(|v| other.rank_of(v).expect("same feature set").abs_diff(k)).sum()
            };
            let total = displacement(&at_first, second) + displacement(&at_second, first);
            ShiftEntry {
                k,
                shift: total as f64 / pn as f64,
                features_at_k_first: at_first,
                features_at_k_second: at_second,
            }
        })
        .collect();
    Ok(ShiftReport { dataset: dataset.to_string(), pn, entries })
}

/// Both arms of one family on one dataset, sharing every split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArmPair {
    pub discretized: BootstrapRun,
    pub regression: BootstrapRun,
}

impl ArmPair {
    /// AUC pairs (discretized, regression) for iterations valid in both arms.
    pub fn paired_auc(&self) -> (Vec<f64>, Vec<f64>) {
        self.discretized
            .iterations
            .iter()
            .zip(&self.regression.iterations)
            .filter_map(|(d, r)| Some((d.auc?, r.auc?)))
            .unzip()
    }
}

pub fn run_arms(ds: &DefectDataset, family: Family, cfg: &StudyConfig, impurity: bool) -> Result<ArmPair> {
    let opts = cfg.options(impurity);
    let discretized = run_bootstrap(ds, &cfg.spec(family, Mode::Classification), &opts)?;
    let regression = run_bootstrap(ds, &cfg.spec(family, Mode::Regression), &opts)?;
    for (d, r) in discretized.iterations.iter().zip(&regression.iterations) {
        if d.iteration != r.iteration || d.split_digest != r.split_digest {
            return Err(Error::Internal(format!(
                "{}: arms used different splits at iteration {}",
                ds.name, d.iteration
            )));
        }
    }
    Ok(ArmPair { discretized, regression })
}

// ---------------------------------------------------------------------------
// Preliminary learner ranking

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreliminaryDataset {
    pub dataset: String,
    pub ranks: RankTable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AverageRank {
    pub learner: String,
    pub average_rank: f64,
    pub best: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreliminaryReport {
    pub datasets: Vec<PreliminaryDataset>,
    pub average_ranks: Vec<AverageRank>,
}

/// Rank learners on one dataset by their AUC distributions.
pub fn rank_learners(aucs: &[(String, Vec<f64>)]) -> Result<RankTable> {
    scott_knott_esd(aucs, SkEsdOptions::default())
}

/// Mean rank of each learner across tables; the lowest is flagged best.
/// Rows follow the order of the first table's treatments sorted by name.
pub fn average_ranks(tables: &[RankTable]) -> Vec<AverageRank> {
    let mut sums: BTreeMap<&str, (f64, usize)> = BTreeMap::new();
    for t in tables {
        for (name, &r) in t.treatments.iter().zip(&t.assigned_rank) {
            let e = sums.entry(name.as_str()).or_insert((0.0, 0));
            e.0 += r as f64;
            e.1 += 1;
        }
    }
    let mut rows: Vec<AverageRank> = sums
        .into_iter()
        .map(|(name, (s, c))| AverageRank { learner: name.to_string(), average_rank: s / c as f64, best: false })
        .collect();
    if let Some(best) = rows.iter().map(|r| r.average_rank).min_by(f64::total_cmp) {
        rows.iter_mut().filter(|r| r.average_rank == best).for_each(|r| r.best = true);
    }
    rows
}

pub fn run_preliminary(datasets: &[PreparedDataset], cfg: &StudyConfig) -> Result<(PreliminaryReport, Vec<BootstrapRun>)> {
    cfg.validate()?;
    let mut per_dataset = Vec::new();
    let mut runs = Vec::new();
    for p in datasets {
        let mut aucs = Vec::new();
        for &family in &cfg.families {
            for mode in [Mode::Classification, Mode::Regression] {
                let spec = cfg.spec(family, mode);
                info!("prelim: {} {}", p.data.name, spec.short_name());
                let run = run_bootstrap(&p.data, &spec, &cfg.options(false))?;
                aucs.push((spec.short_name().to_string(), run.auc_values()));
                runs.push(run);
            }
        }
        per_dataset.push(PreliminaryDataset { dataset: p.data.name.clone(), ranks: rank_learners(&aucs)? });
    }
    let tables: Vec<RankTable> = per_dataset.iter().map(|d| d.ranks.clone()).collect();
    Ok((PreliminaryReport { datasets: per_dataset, average_ranks: average_ranks(&tables) }, runs))
}

// ---------------------------------------------------------------------------
// Discretized versus regression-based performance

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rq1Row {
    pub dataset: String,
    pub family: Family,
    pub defective_ratio: f64,
    pub mean_auc_discretized: f64,
    pub mean_auc_regression: f64,
    pub p_value: f64,
    /// Positive when the regression-based arm scores higher.
    pub cohens_d: f64,
    pub magnitude: Magnitude,
    pub direction: Direction,
    pub n_pairs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioSeries {
    pub dataset: String,
    pub family: Family,
    pub defective_ratio: f64,
    /// Per-iteration AUC(discretized) / AUC(regression-based).
    pub ratios: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rq1Report {
    /// Sorted by family, then defective ratio.
    pub rows: Vec<Rq1Row>,
    pub ratio_series: Vec<RatioSeries>,
}

fn auc_ratios(disc: &[f64], reg: &[f64]) -> Vec<f64> {
    disc.iter().zip(reg).filter(|(_, &r)| r > 0.0).map(|(d, r)| d / r).collect()
}

/// Compare the two arms of a pair: paired Wilcoxon and Cohen's d on AUCs.
pub fn compare_arms(dataset: &DefectDataset, family: Family, pair: &ArmPair) -> Result<(Rq1Row, RatioSeries)> {
    let (disc, reg) = pair.paired_auc();
    if disc.len() < 2 {
        return Err(Error::InvalidInput(format!("{}: fewer than 2 paired iterations", dataset.name)));
    }
    let cmp = compare_paired(&reg, &disc)?;
    let row = Rq1Row {
        dataset: dataset.name.clone(),
        family,
        defective_ratio: dataset.defective_ratio(),
        mean_auc_discretized: pair.discretized.mean_auc(),
        mean_auc_regression: pair.regression.mean_auc(),
        p_value: cmp.p_value,
        cohens_d: cmp.cohens_d,
        magnitude: cmp.magnitude,
        direction: cmp.direction,
        n_pairs: disc.len(),
    };
    let series = RatioSeries {
        dataset: dataset.name.clone(),
        family,
        defective_ratio: row.defective_ratio,
        ratios: auc_ratios(&disc, &reg),
    };
    Ok((row, series))
}

pub fn run_rq1(datasets: &[PreparedDataset], cfg: &StudyConfig) -> Result<(Rq1Report, Vec<ArmPair>)> {
    cfg.validate()?;
    let mut rows = Vec::new();
    let mut series = Vec::new();
    let mut pairs = Vec::new();
    for &family in &cfg.families {
        for p in datasets {
            info!("rq1: {} {family}", p.data.name);
            let pair = run_arms(&p.data, family, cfg, false)?;
            let (row, s) = compare_arms(&p.data, family, &pair)?;
            rows.push(row);
            series.push(s);
            pairs.push(pair);
        }
    }
    let key = |f: Family, dr: f64, name: &str| (f, ordered(dr), name.to_string());
    rows.sort_by_key(|r| key(r.family, r.defective_ratio, &r.dataset));
    series.sort_by_key(|s| key(s.family, s.defective_ratio, &s.dataset));
    Ok((Rq1Report { rows, ratio_series: series }, pairs))
}

/// Total-order key for finite floats.
fn ordered(x: f64) -> i64 {
    let bits = x.to_bits() as i64;
    if bits < 0 {
        bits ^ i64::MAX
    } else {
        bits
    }
}

// ---------------------------------------------------------------------------
// Importance rank shifts

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rq2Dataset {
    pub dataset: String,
    pub ranks_discretized: RankTable,
    pub ranks_regression: RankTable,
    pub shifts: ShiftReport,
    /// Some rank group holds more than half of the features.
    pub tie_dominated: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankSummary {
    pub k: usize,
    pub mean_shift: f64,
    pub variance: f64,
    /// Wilcoxon signed-rank p of the observed shifts against all zeros.
    pub p_value_vs_zero: f64,
    pub no_signal: bool,
    pub n_datasets: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rq2Report {
    pub family: Family,
    pub method: ImportanceMethod,
    pub datasets: Vec<Rq2Dataset>,
    pub per_rank: Vec<RankSummary>,
}

fn tie_dominated(t: &RankTable) -> bool {
    (1..=t.n_ranks()).any(|k| 2 * t.members(k).len() > t.treatments.len())
}

/// Rank-shift analysis over already-computed arm pairs.
pub fn shifts_from_pairs(
    pairs: &[ArmPair],
    family: Family,
    method: ImportanceMethod,
    ks: &[usize],
) -> Result<Rq2Report> {
    let mut datasets = Vec::new();
    for pair in pairs {
        let name = &pair.discretized.dataset;
        let first = rank_features(&pair.regression, method)?;
        let second = rank_features(&pair.discretized, method)?;
        let pn = pair.discretized.feature_names.len();
        let shifts = rank_shifts(name, &first, &second, pn, ks)?;
        let tie = tie_dominated(&first) || tie_dominated(&second);
        datasets.push(Rq2Dataset {
            dataset: name.clone(),
            ranks_discretized: second,
            ranks_regression: first,
            shifts,
            tie_dominated: tie,
        });
    }
    let per_rank = ks
        .iter()
        .enumerate()
        .map(|(i, &k)| {
            let values: Vec<f64> = datasets.iter().map(|d| d.shifts.entries[i].shift).collect();
            let zeros = vec![0.0; values.len()];
            let w = wilcoxon_signed_rank(&values, &zeros)?;
            Ok(RankSummary {
                k,
                mean_shift: mean(&values),
                variance: if values.len() > 1 { sample_variance(&values) } else { 0.0 },
                p_value_vs_zero: w.p_value,
                no_signal: w.method == WilcoxonMethod::NoSignal,
                n_datasets: values.len(),
            })
        })
        .collect::<Result<_>>()?;
    Ok(Rq2Report { family, method, datasets, per_rank })
}

pub fn run_rq2(
    datasets: &[PreparedDataset],
    cfg: &StudyConfig,
    method: ImportanceMethod,
) -> Result<(Vec<Rq2Report>, Vec<ArmPair>)> {
    cfg.validate()?;
    let mut reports = Vec::new();
    let mut all = Vec::new();
    for &family in &cfg.families {
        if method == ImportanceMethod::Impurity && !family.has_impurity_importance() {
            return Err(Error::Unsupported(format!("impurity importance is not defined for {family}")));
        }
        let mut pairs = Vec::new();
        for p in datasets {
            info!("rq2: {} {family}", p.data.name);
            pairs.push(run_arms(&p.data, family, cfg, method == ImportanceMethod::Impurity)?);
        }
        reports.push(shifts_from_pairs(&pairs, family, method, &cfg.ranks)?);
        all.extend(pairs);
    }
    Ok((reports, all))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImportanceComparison {
    pub permutation: Rq2Report,
    pub impurity: Rq2Report,
}

/// The rank-shift analysis under both importance methods, on one set of
/// forest runs.
pub fn run_importance_comparison(
    datasets: &[PreparedDataset],
    cfg: &StudyConfig,
) -> Result<(ImportanceComparison, Vec<ArmPair>)> {
    cfg.validate()?;
    let family = Family::RandomForest;
    let mut pairs = Vec::new();
    for p in datasets {
        info!("importance-cmp: {}", p.data.name);
        pairs.push(run_arms(&p.data, family, cfg, true)?);
    }
    let permutation = shifts_from_pairs(&pairs, family, ImportanceMethod::Permutation, &cfg.ranks)?;
    let impurity = shifts_from_pairs(&pairs, family, ImportanceMethod::Impurity, &cfg.ranks)?;
    Ok((ImportanceComparison { permutation, impurity }, pairs))
}

// ---------------------------------------------------------------------------
// Defective-ratio sweep

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub target_ratio: f64,
    pub actual_ratio: f64,
    pub mean_auc_discretized: f64,
    pub mean_auc_regression: f64,
    pub mean_auc_ratio: f64,
    pub auc_ratios: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepDataset {
    pub dataset: String,
    pub family: Family,
    pub points: Vec<SweepPoint>,
    /// Spearman correlation of target ratio with mean AUC ratio; `None`
    /// when either side is constant.
    pub spearman_rho: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioSweepReport {
    pub datasets: Vec<SweepDataset>,
}

/// Spearman correlation, or `None` when it is undefined.
pub fn correlation_or_degenerate(x: &[f64], y: &[f64]) -> Option<f64> {
    spearman(x, y).ok().filter(|r| r.is_finite())
}

pub fn run_ratio_sweep(datasets: &[PreparedDataset], cfg: &StudyConfig) -> Result<RatioSweepReport> {
    cfg.validate()?;
    let mut out = Vec::new();
    for &family in &cfg.families {
        for p in datasets {
            let mut points = Vec::new();
            for (gi, &ratio) in cfg.ratio_grid.iter().enumerate() {
                let mut rng = rng_from_seed(derive_seed(
                    cfg.master_seed,
                    &["resample".into(), p.data.name.as_str().into(), gi.into()],
                ));
                let mut resampled = resample_to_ratio(&p.data, ratio, &mut rng)?;
                resampled.name = format!("{}@{:.0}", p.data.name, ratio * 100.0);
                info!("ratio-sweep: {} {family}", resampled.name);
                let pair = run_arms(&resampled, family, cfg, false)?;
                let (disc, reg) = pair.paired_auc();
                let ratios = auc_ratios(&disc, &reg);
                points.push(SweepPoint {
                    target_ratio: ratio,
                    actual_ratio: resampled.defective_ratio(),
                    mean_auc_discretized: pair.discretized.mean_auc(),
                    mean_auc_regression: pair.regression.mean_auc(),
                    mean_auc_ratio: mean(&ratios),
                    auc_ratios: ratios,
                });
            }
            let xs: Vec<f64> = points.iter().map(|q| q.target_ratio).collect();
            let ys: Vec<f64> = points.iter().map(|q| q.mean_auc_ratio).collect();
            out.push(SweepDataset {
                dataset: p.data.name.clone(),
                family,
                spearman_rho: correlation_or_degenerate(&xs, &ys),
                points,
            });
        }
    }
    Ok(RatioSweepReport { datasets: out })
}

// ---------------------------------------------------------------------------
// R² versus AUC

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct R2Row {
    pub dataset: String,
    pub family: Family,
    pub mean_r_squared: f64,
    pub mean_auc: f64,
    /// Spearman correlation of per-iteration AUC and R²; `None` when
    /// degenerate.
    pub spearman_auc_r2: Option<f64>,
    pub n_pairs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct R2Report {
    pub rows: Vec<R2Row>,
}

/// AUC/R² association within one regression-arm run.
pub fn r2_row(run: &BootstrapRun) -> R2Row {
    let (aucs, r2s): (Vec<f64>, Vec<f64>) = run.valid().filter_map(|r| Some((r.auc?, r.r_squared?))).unzip();
    R2Row {
        dataset: run.dataset.clone(),
        family: run.learner.family,
        mean_r_squared: mean(&r2s),
        mean_auc: mean(&aucs),
        spearman_auc_r2: correlation_or_degenerate(&aucs, &r2s),
        n_pairs: aucs.len(),
    }
}

pub fn run_r2_study(datasets: &[PreparedDataset], cfg: &StudyConfig) -> Result<(R2Report, Vec<BootstrapRun>)> {
    cfg.validate()?;
    let mut rows = Vec::new();
    let mut runs = Vec::new();
    for &family in &cfg.families {
        for p in datasets {
            info!("r2: {} {family}", p.data.name);
            let run = run_bootstrap(&p.data, &cfg.spec(family, Mode::Regression), &cfg.options(false))?;
            rows.push(r2_row(&run));
            runs.push(run);
        }
    }
    Ok((R2Report { rows }, runs))
}
