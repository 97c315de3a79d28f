//! Study outputs as tables and plots. Both `run` and `report` go through
//! these functions, so a report regenerates exactly what a run emitted.

use regclass_core::stats::RankTable;
use regclass_core::study::{
    ImportanceComparison, PreliminaryReport, R2Report, RatioSweepReport, Rq1Report, Rq2Report,
};
use serde::{Deserialize, Serialize};

use crate::persist::{fmt_f64, path_component};
use crate::plots;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "study", content = "report", rename_all = "kebab-case")]
pub enum StudyOutput {
    Prelim(PreliminaryReport),
    Rq1(Rq1Report),
    Rq2(Vec<Rq2Report>),
    RatioSweep(RatioSweepReport),
    R2(R2Report),
    ImportanceCmp(ImportanceComparison),
}

pub type Table = (Vec<String>, Vec<Vec<String>>);
type Fmt = fn(f64) -> String;

fn strings(v: &[&str]) -> Vec<String> {
    v.iter().map(|s| s.to_string()).collect()
}

pub fn short(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.4}")
    } else {
        fmt_f64(v)
    }
}

fn rq2_rank_rows(r: &Rq2Report, f: Fmt, rows: &mut Vec<Vec<String>>) {
    for s in &r.per_rank {
        rows.push(vec![
            r.family.to_string(),
            serde_plain(&r.method),
            s.k.to_string(),
            f(s.mean_shift),
            f(s.variance),
            f(s.p_value_vs_zero),
            s.n_datasets.to_string(),
        ]);
    }
}

fn serde_plain<T: Serialize>(v: &T) -> String {
    serde_json::to_value(v).ok().and_then(|j| j.as_str().map(String::from)).unwrap_or_default()
}

/// The headline table of a study.
pub fn summary_table(out: &StudyOutput, f: Fmt) -> Table {
    match out {
        StudyOutput::Prelim(r) => (
            strings(&["learner", "average_rank", "best"]),
            r.average_ranks
                .iter()
                .map(|a| vec![a.learner.clone(), f(a.average_rank), if a.best { "yes" } else { "" }.to_string()])
                .collect(),
        ),
        StudyOutput::Rq1(r) => (
            strings(&[
                "dataset",
                "family",
                "mean_auc_discretized",
                "mean_auc_regression",
                "p_value",
                "cohens_d",
                "magnitude",
                "defective_ratio",
            ]),
            r.rows
                .iter()
                .map(|row| {
                    vec![
                        row.dataset.clone(),
                        row.family.to_string(),
                        f(row.mean_auc_discretized),
                        f(row.mean_auc_regression),
                        f(row.p_value),
                        f(row.cohens_d),
                        row.magnitude.letter().to_string(),
                        f(row.defective_ratio),
                    ]
                })
                .collect(),
        ),
        StudyOutput::Rq2(reports) => {
            let mut rows = Vec::new();
            for r in reports {
                rq2_rank_rows(r, f, &mut rows);
            }
            (strings(&["family", "importance", "rank", "mean_shift", "variance", "p_vs_zero", "datasets"]), rows)
        }
        StudyOutput::ImportanceCmp(c) => {
            let mut rows = Vec::new();
            rq2_rank_rows(&c.permutation, f, &mut rows);
            rq2_rank_rows(&c.impurity, f, &mut rows);
            (strings(&["family", "importance", "rank", "mean_shift", "variance", "p_vs_zero", "datasets"]), rows)
        }
        StudyOutput::RatioSweep(r) => (
            strings(&["dataset", "family", "points", "spearman_rho"]),
            r.datasets
                .iter()
                .map(|d| {
                    vec![
                        d.dataset.clone(),
                        d.family.to_string(),
                        d.points.len().to_string(),
                        d.spearman_rho.map_or_else(|| "degenerate".to_string(), f),
                    ]
                })
                .collect(),
        ),
        StudyOutput::R2(r) => (
            strings(&["dataset", "family", "mean_r_squared", "mean_auc", "spearman_auc_r2", "pairs"]),
            r.rows
                .iter()
                .map(|row| {
                    vec![
                        row.dataset.clone(),
                        row.family.to_string(),
                        f(row.mean_r_squared),
                        f(row.mean_auc),
                        row.spearman_auc_r2.map_or_else(|| "NA".into(), f),
                        row.n_pairs.to_string(),
                    ]
                })
                .collect(),
        ),
    }
}

pub fn rank_table(t: &RankTable, f: Fmt) -> Table {
    (
        strings(&["treatment", "rank", "mean"]),
        t.treatments
            .iter()
            .zip(&t.assigned_rank)
            .zip(&t.mean_metric)
            .map(|((n, r), m)| vec![n.clone(), r.to_string(), f(*m)])
            .collect(),
    )
}

pub fn shift_table(r: &Rq2Report, f: Fmt) -> Table {
    let mut rows = Vec::new();
    for d in &r.datasets {
        for e in &d.shifts.entries {
            rows.push(vec![
                d.dataset.clone(),
                e.k.to_string(),
                f(e.shift),
                e.features_at_k_first.join(" "),
                e.features_at_k_second.join(" "),
                if d.tie_dominated { "yes" } else { "" }.to_string(),
            ]);
        }
    }
    (
        strings(&["dataset", "rank", "shift", "regression_at_rank", "discretized_at_rank", "tie_dominated"]),
        rows,
    )
}

/// Fixed-width text rendering.
pub fn text_table((header, rows): &Table) -> String {
    let mut widths: Vec<usize> = header.iter().map(|h| h.chars().count()).collect();
    for r in rows {
        for (w, c) in widths.iter_mut().zip(r) {
            *w = (*w).max(c.chars().count());
        }
    }
    let line = |cells: &[String]| {
        cells
            .iter()
            .zip(&widths)
            .map(|(c, w)| format!("{c:<w$}"))
            .collect::<Vec<_>>()
            .join("  ")
            .trim_end()
            .to_string()
    };
    let mut out = line(header);
    out.push('\n');
    out.push_str(&widths.iter().map(|w| "-".repeat(*w)).collect::<Vec<_>>().join("  "));
    out.push('\n');
    for r in rows {
        out.push_str(&line(r));
        out.push('\n');
    }
    out
}

/// Human-readable report: the headline table plus per-dataset detail.
pub fn report_text(out: &StudyOutput) -> String {
    let mut s = text_table(&summary_table(out, short));
    match out {
        StudyOutput::Prelim(r) => {
            for d in &r.datasets {
                s.push_str(&format!("\n{}: learner ranks by AUC\n", d.dataset));
                s.push_str(&text_table(&rank_table(&d.ranks, short)));
            }
        }
        StudyOutput::Rq2(reports) => {
            for r in reports {
                s.push_str(&format!("\nrank shifts ({}, {} importance)\n", r.family, serde_plain(&r.method)));
                s.push_str(&text_table(&shift_table(r, short)));
            }
        }
        StudyOutput::ImportanceCmp(c) => {
            for r in [&c.permutation, &c.impurity] {
                s.push_str(&format!("\nrank shifts ({} importance)\n", serde_plain(&r.method)));
                s.push_str(&text_table(&shift_table(r, short)));
            }
        }
        StudyOutput::RatioSweep(r) => {
            for d in &r.datasets {
                s.push_str(&format!("\n{} ({}): mean AUC ratio by defective ratio\n", d.dataset, d.family));
                let rows = d
                    .points
                    .iter()
                    .map(|p| {
                        vec![
                            short(p.target_ratio),
                            short(p.mean_auc_discretized),
                            short(p.mean_auc_regression),
                            short(p.mean_auc_ratio),
                        ]
                    })
                    .collect();
                s.push_str(&text_table(&(strings(&["ratio", "auc_discretized", "auc_regression", "auc_ratio"]), rows)));
            }
        }
        StudyOutput::Rq1(_) | StudyOutput::R2(_) => {}
    }
    s
}

fn shift_plots(r: &Rq2Report, prefix: &str, out: &mut Vec<(String, String)>) {
    for (i, s) in r.per_rank.iter().enumerate() {
        let bars: Vec<(String, f64)> = r.datasets.iter().map(|d| (d.dataset.clone(), d.shifts.entries[i].shift)).collect();
        let title = format!("Rank {} shifts, {} ({} importance)", s.k, r.family, serde_plain(&r.method));
        out.push((
            format!("{prefix}shifts_{}_{}_k{}.svg", r.family, serde_plain(&r.method), s.k),
            plots::bars(&title, "Shifts(k)", &bars, Some(s.mean_shift)),
        ));
    }
}

/// Every plot of a study as (relative path, SVG text).
pub fn plot_files(out: &StudyOutput) -> Vec<(String, String)> {
    let mut files = Vec::new();
    match out {
        StudyOutput::Prelim(r) => {
            let bars: Vec<(String, f64)> = r.average_ranks.iter().map(|a| (a.learner.clone(), a.average_rank)).collect();
            files.push(("average_ranks.svg".into(), plots::bars("Average Scott-Knott ESD rank (lower is better)", "average rank", &bars, None)));
        }
        StudyOutput::Rq1(r) => {
            let mut families: Vec<_> = r.ratio_series.iter().map(|s| s.family).collect();
            families.dedup();
            for fam in families {
                let groups: Vec<(String, Vec<f64>)> = r
                    .ratio_series
                    .iter()
                    .filter(|s| s.family == fam)
                    .map(|s| (format!("{} ({:.0}%)", s.dataset, 100.0 * s.defective_ratio), s.ratios.clone()))
                    .collect();
                files.push((
                    format!("auc_ratio_{fam}.svg"),
                    plots::boxplot(
                        &format!("AUC ratio discretized / regression-based ({fam}), by defective ratio"),
                        "AUC ratio",
                        &groups,
                        Some(1.0),
                    ),
                ));
            }
        }
        StudyOutput::Rq2(reports) => {
            for r in reports {
                shift_plots(r, "", &mut files);
            }
        }
        StudyOutput::ImportanceCmp(c) => {
            shift_plots(&c.permutation, "", &mut files);
            shift_plots(&c.impurity, "", &mut files);
        }
        StudyOutput::RatioSweep(r) => {
            for d in &r.datasets {
                let groups: Vec<(String, Vec<f64>)> =
                    d.points.iter().map(|p| (format!("{:.0}%", 100.0 * p.target_ratio), p.auc_ratios.clone())).collect();
                files.push((
                    format!("{}/ratio_sweep_{}.svg", path_component(&d.dataset), d.family),
                    plots::boxplot(&format!("{}: AUC ratio by defective ratio", d.dataset), "AUC ratio", &groups, Some(1.0)),
                ));
            }
        }
        StudyOutput::R2(r) => {
            let pts: Vec<(String, f64, f64)> =
                r.rows.iter().map(|row| (row.dataset.clone(), row.mean_r_squared, row.mean_auc)).collect();
            files.push(("r2_vs_auc.svg".into(), plots::scatter("Mean R² against mean AUC", "mean R²", "mean AUC", &pts)));
        }
    }
    files
}
