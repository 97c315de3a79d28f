//! Synthetic defect datasets with known structure, used by tests, benchmarks
//! and the `synth` command.

use std::fs;
use std::path::{Path, PathBuf};

use rand::Rng;
use rand_distr::{Distribution, LogNormal, Poisson, StandardNormal};

use crate::corpus::{DatasetManifest, DefectDataset, ManifestEntry};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::seed::{derive_seed, rng_from_seed, StudyRng};

fn normal(rng: &mut StudyRng) -> f64 {
    rng.sample(StandardNormal)
}

fn logistic(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

fn build(name: &str, names: Vec<String>, columns: Vec<Vec<f64>>, counts: Vec<u32>) -> DefectDataset {
    let ids = (1..=counts.len()).map(|i| format!("m{i}")).collect();
    let features = Matrix::from_columns(&columns).expect("columns share a length");
    DefectDataset::new(name, ids, names, features, counts).expect("generated data are valid")
}

fn noise_columns(n: usize, k: usize, rng: &mut StudyRng) -> (Vec<String>, Vec<Vec<f64>>) {
    let names = (1..=k).map(|j| format!("noise_{j}")).collect();
    let cols = (0..k).map(|_| (0..n).map(|_| normal(rng)).collect()).collect();
    (names, cols)
}

/// One informative feature `signal` plus `n_noise` independent noise
/// features. Roughly a third of the modules are defective.
pub fn single_signal(n: usize, n_noise: usize, seed: u64) -> DefectDataset {
    let mut rng = rng_from_seed(derive_seed(seed, &["single_signal".into()]));
    let signal: Vec<f64> = (0..n).map(|_| normal(&mut rng)).collect();
    let (noise_names, noise) = noise_columns(n, n_noise, &mut rng);
    let counts = signal
        .iter()
        .map(|&s| {
            if rng.random_bool(logistic(3.0 * s - 1.5)) {
                1 + Poisson::new((0.5 * s).exp()).unwrap().sample(&mut rng) as u32
            } else {
                0
            }
        })
        .collect();
    let mut names = vec!["signal".to_string()];
    names.extend(noise_names);
    let mut cols = vec![signal];
    cols.extend(noise);
    build("single_signal", names, cols, counts)
}

/// Defectiveness follows a threshold on `signal`, but defective modules get
/// heavy-tailed counts unrelated to the features.
pub fn heavy_noise_counts(n: usize, seed: u64) -> DefectDataset {
    let mut rng = rng_from_seed(derive_seed(seed, &["heavy_noise".into()]));
    let tail: LogNormal<f64> = LogNormal::new(1.0, 1.2).unwrap();
    let signal: Vec<f64> = (0..n).map(|_| normal(&mut rng)).collect();
    let (noise_names, noise) = noise_columns(n, 3, &mut rng);
    let counts = signal
        .iter()
        .map(|&s| {
            if rng.random_bool(logistic(4.0 * (s - 0.5))) {
                1 + tail.sample(&mut rng).floor().min(500.0) as u32
            } else {
                0
            }
        })
        .collect();
    let mut names = vec!["signal".to_string()];
    names.extend(noise_names);
    let mut cols = vec![signal];
    cols.extend(noise);
    build("heavy_noise_counts", names, cols, counts)
}

/// Features and defects drawn independently.
pub fn all_noise(n: usize, n_features: usize, defective_ratio: f64, seed: u64) -> DefectDataset {
    let mut rng = rng_from_seed(derive_seed(seed, &["all_noise".into()]));
    let (names, cols) = noise_columns(n, n_features, &mut rng);
    let counts = (0..n).map(|_| u32::from(rng.random_bool(defective_ratio))).collect();
    build("all_noise", names, cols, counts)
}

/// A dataset whose defect counts follow a log-linear model in two size-like
/// features, with intercept tuned to hit roughly `defective_ratio`.
pub fn metric_like(name: &str, n: usize, defective_ratio: f64, seed: u64) -> DefectDataset {
    let mut rng = rng_from_seed(derive_seed(seed, &["metric_like".into(), name.into()]));
    let loc: Vec<f64> = (0..n).map(|_| (4.0 + normal(&mut rng)).exp().round()).collect();
    let cbo: Vec<f64> = (0..n).map(|_| (2.0 + 0.8 * normal(&mut rng)).exp().round()).collect();
    let lcom: Vec<f64> = (0..n).map(|_| (1.0 + normal(&mut rng)).exp().round()).collect();
    let noc: Vec<f64> = (0..n).map(|_| rng.random_range(0..4) as f64).collect();
    let dit: Vec<f64> = (0..n).map(|_| rng.random_range(1..6) as f64).collect();
    let moa: Vec<f64> = (0..n).map(|_| rng.random_range(0..10) as f64).collect();
    let score: Vec<f64> = (0..n)
        .map(|i| 0.9 * (loc[i].ln_1p() - 4.0) + 0.6 * (cbo[i].ln_1p() - 2.0) + 0.8 * normal(&mut rng))
        .collect();
    let mut sorted = score.clone();
    sorted.sort_by(f64::total_cmp);
    let cut_at = ((1.0 - defective_ratio) * n as f64).round() as usize;
    let cut = sorted[cut_at.min(n - 1)];
    let counts = score
        .iter()
        .map(|&s| if s >= cut { 1 + Poisson::new((0.7 * (s - cut)).exp()).unwrap().sample(&mut rng) as u32 } else { 0 })
        .collect();
    let names = ["loc", "cbo", "lcom", "noc", "dit", "moa"].map(String::from).to_vec();
    build(name, names, vec![loc, cbo, lcom, noc, dit, moa], counts)
}

/// Three metric-like datasets at low, middle and high defective ratios.
pub fn suite(seed: u64) -> Vec<DefectDataset> {
    vec![
        metric_like("synth_low", 800, 0.10, seed),
        metric_like("synth_mid", 400, 0.25, seed),
        metric_like("synth_high", 400, 0.45, seed),
    ]
}

/// Write datasets as CSV plus a `manifest.toml` into `dir`; returns the
/// manifest path.
pub fn write_datasets(dir: &Path, datasets: &[DefectDataset]) -> Result<PathBuf> {
    fs::create_dir_all(dir).map_err(|source| Error::Io { path: dir.to_path_buf(), source })?;
    let mut manifest = DatasetManifest::default();
    for ds in datasets {
        let file = format!("{}.csv", ds.name);
        ds.write_csv(&dir.join(&file))?;
        manifest.entries.push(ManifestEntry {
            path: PathBuf::from(file),
            name: ds.name.clone(),
            target_column: "bug".into(),
            drop_columns: vec![],
            id_column: Some("id".into()),
            prefer: vec![],
        });
    }
    let path = dir.join("manifest.toml");
    fs::write(&path, manifest.to_toml()).map_err(|source| Error::Io { path: path.clone(), source })?;
    Ok(path)
}


#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_ratios_are_close_to_targets() {
        for (ds, target) in suite(7).iter().zip([0.10, 0.25, 0.45]) {
            assert!((ds.defective_ratio() - target).abs() < 0.02, "{} {}", ds.name, ds.defective_ratio());
        }
    }

    #[test]
    fn generators_are_deterministic() {
        assert_eq!(single_signal(100, 5, 3), single_signal(100, 5, 3));
        assert_ne!(single_signal(100, 5, 3), single_signal(100, 5, 4));
        let ds = single_signal(500, 5, 0);
        assert_eq!(ds.n_features(), 6);
        assert!(ds.defective_ratio() > 0.15 && ds.defective_ratio() < 0.5);
    }
}
