//! Defect datasets: ingestion, admission criteria, discretization, and
//! ratio-controlled resampling.

use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::seed::sha256_hex;

/// Minimum events-per-variable (exclusive) for a dataset to be admitted.
pub const EPV_THRESHOLD: f64 = 10.0;
/// Maximum defective ratio (exclusive) for a dataset to be admitted.
pub const MAX_DEFECTIVE_RATIO: f64 = 0.80;

/// Module-level software metrics with their defect counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DefectDataset {
    pub name: String,
    pub module_ids: Vec<String>,
    pub feature_names: Vec<String>,
    pub features: Matrix,
    pub defect_counts: Vec<u32>,
    /// SHA-256 of the source file, when loaded from disk.
    pub source_digest: Option<String>,
}

impl DefectDataset {
    pub fn new(
        name: impl Into<String>,
        module_ids: Vec<String>,
        feature_names: Vec<String>,
        features: Matrix,
        defect_counts: Vec<u32>,
    ) -> Result<Self> {
        let ds = Self {
            name: name.into(),
            module_ids,
            feature_names,
            features,
            defect_counts,
            source_digest: None,
        };
        ds.validate()?;
        Ok(ds)
    }

    fn validate(&self) -> Result<()> {
        let n = self.defect_counts.len();
        let p = self.feature_names.len();
        if n < 2 {
            return Err(Error::InvalidInput(format!("{}: need at least 2 modules, got {n}", self.name)));
        }
        if p < 1 {
            return Err(Error::InvalidInput(format!("{}: no feature columns", self.name)));
        }
        if self.features.n_rows() != n || self.features.n_cols() != p {
            return Err(Error::InvalidInput(format!(
                "{}: feature matrix is {}x{}, expected {n}x{p}",
                self.name,
                self.features.n_rows(),
                self.features.n_cols()
            )));
        }
        if self.module_ids.len() != n {
            return Err(Error::InvalidInput(format!(
                "{}: {} module ids for {n} rows",
                self.name,
                self.module_ids.len()
            )));
        }
        let mut seen = HashSet::new();
        for f in &self.feature_names {
            if f.is_empty() {
                return Err(Error::InvalidInput(format!("{}: empty feature name", self.name)));
            }
            if !seen.insert(f.as_str()) {
                return Err(Error::InvalidInput(format!("{}: duplicate feature name {f:?}", self.name)));
            }
        }
        if let Some(v) = self.features.as_slice().iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!("{}: non-finite feature value {v}", self.name)));
        }
        Ok(())
    }

    pub fn n_modules(&self) -> usize {
        self.defect_counts.len()
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    pub fn labels(&self) -> Vec<bool> {
        discretize(&self.defect_counts)
    }

    pub fn counts_f64(&self) -> Vec<f64> {
        self.defect_counts.iter().map(|&c| f64::from(c)).collect()
    }

    pub fn n_defective(&self) -> usize {
        self.defect_counts.iter().filter(|&&c| c >= 1).count()
    }

    pub fn defective_ratio(&self) -> f64 {
        self.n_defective() as f64 / self.n_modules() as f64
    }

    pub fn feature_index(&self, name: &str) -> Option<usize> {
        self.feature_names.iter().position(|f| f == name)
    }

    /// Restrict to the named features, in the given order.
    pub fn select_features(&self, names: &[String]) -> Result<DefectDataset> {
        let idx = names
            .iter()
            .map(|n| {
                self.feature_index(n)
                    .ok_or_else(|| Error::InvalidInput(format!("{}: unknown feature {n:?}", self.name)))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(DefectDataset {
            name: self.name.clone(),
            module_ids: self.module_ids.clone(),
            feature_names: names.to_vec(),
            features: self.features.select_columns(&idx),
            defect_counts: self.defect_counts.clone(),
            source_digest: self.source_digest.clone(),
        })
    }

    pub fn select_rows(&self, rows: &[usize]) -> DefectDataset {
        DefectDataset {
            name: self.name.clone(),
            module_ids: rows.iter().map(|&r| self.module_ids[r].clone()).collect(),
            feature_names: self.feature_names.clone(),
            features: self.features.select_rows(rows),
            defect_counts: rows.iter().map(|&r| self.defect_counts[r]).collect(),
            source_digest: self.source_digest.clone(),
        }
    }

    /// Content digest over names, features, and counts.
    pub fn digest(&self) -> String {
        let mut bytes = Vec::new();
        for f in &self.feature_names {
            bytes.extend_from_slice(f.as_bytes());
            bytes.push(0);
        }
        for v in self.features.as_slice() {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
        for c in &self.defect_counts {
            bytes.extend_from_slice(&c.to_le_bytes());
        }
        sha256_hex(&bytes)
    }

    /// Write as comma-separated text with an `id` column first and the
    /// defect counts in a trailing `bug` column.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let io = |source| Error::Io { path: path.to_path_buf(), source };
        let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
        let mut header = vec!["id".to_string()];
        header.extend(self.feature_names.iter().cloned());
        header.push("bug".to_string());
        w.write_record(&header).map_err(|e| csv_error(path, e))?;
        for i in 0..self.n_modules() {
            let mut rec = vec![self.module_ids[i].clone()];
            rec.extend(self.features.row(i).iter().map(|v| v.to_string()));
            rec.push(self.defect_counts[i].to_string());
            w.write_record(&rec).map_err(|e| csv_error(path, e))?;
        }
        w.flush().map_err(io)
    }
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    Error::Format { path: path.to_path_buf(), message: e.to_string() }
}

/// One dataset entry of a manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestEntry {
    pub path: PathBuf,
    pub name: String,
    pub target_column: String,
    #[serde(default)]
    pub drop_columns: Vec<String>,
    #[serde(default)]
    pub id_column: Option<String>,
    /// Features preferred as cluster representatives, most preferred first.
    #[serde(default)]
    pub prefer: Vec<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetManifest {
    #[serde(default, rename = "dataset")]
    pub entries: Vec<ManifestEntry>,
}

impl DatasetManifest {
    /// Parse a TOML manifest. Relative dataset paths resolve against the
    /// manifest's directory.
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
        let mut manifest = Self::parse(&text)?;
        let base = path.parent().unwrap_or_else(|| Path::new(""));
        for e in &mut manifest.entries {
            if e.path.is_relative() {
                e.path = base.join(&e.path);
            }
        }
        Ok(manifest)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let manifest: DatasetManifest = toml::from_str(text).map_err(|e| Error::Manifest(e.to_string()))?;
        let mut names = HashSet::new();
        for e in &manifest.entries {
            if e.drop_columns.iter().any(|c| c == &e.target_column) {
                return Err(Error::Manifest(format!(
                    "{}: target column {:?} is listed in drop_columns",
                    e.name, e.target_column
                )));
            }
            if !names.insert(e.name.as_str()) {
                return Err(Error::Manifest(format!("duplicate dataset name {:?}", e.name)));
            }
        }
        Ok(manifest)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("manifest serializes")
    }
}

fn detect_delimiter(path: &Path, text: &str) -> u8 {
    let ext = path.extension().and_then(|e| e.to_str()).unwrap_or("");
    if ext.eq_ignore_ascii_case("tsv") || ext.eq_ignore_ascii_case("tab") {
        return b'\t';
    }
    let header = text.lines().next().unwrap_or("");
    if header.contains('\t') && !header.contains(',') {
        b'\t'
    } else {
        b','
    }
}

/// Load one manifest entry into a dataset.
pub fn load_dataset(entry: &ManifestEntry) -> Result<DefectDataset> {
    let path = entry.path.as_path();
    let bytes = fs::read(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
    let text = std::str::from_utf8(&bytes)
        .map_err(|e| Error::Format { path: path.to_path_buf(), message: format!("not UTF-8: {e}") })?;
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(detect_delimiter(path, text))
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());

    let header: Vec<String> = reader
        .headers()
        .map_err(|e| csv_error(path, e))?
        .iter()
        .map(str::to_string)
        .collect();
    let find = |col: &str| header.iter().position(|h| h == col);
    let target = find(&entry.target_column).ok_or_else(|| Error::Format {
        path: path.to_path_buf(),
        message: format!("missing target column {:?}", entry.target_column),
    })?;
    let id_col = match &entry.id_column {
        Some(c) => Some(find(c).ok_or_else(|| Error::Format {
            path: path.to_path_buf(),
            message: format!("missing id column {c:?}"),
        })?),
        None => None,
    };
    for c in &entry.drop_columns {
        if find(c).is_none() {
            return Err(Error::Format { path: path.to_path_buf(), message: format!("missing drop column {c:?}") });
        }
    }
    let feature_cols: Vec<usize> = (0..header.len())
        .filter(|&j| j != target && Some(j) != id_col && !entry.drop_columns.contains(&header[j]))
        .collect();
    let feature_names: Vec<String> = feature_cols.iter().map(|&j| header[j].clone()).collect();
    let mut seen = HashSet::new();
    for (k, f) in feature_names.iter().enumerate() {
        if f.is_empty() {
            return Err(Error::Format {
                path: path.to_path_buf(),
                message: format!("column {} has an empty name", feature_cols[k] + 1),
            });
        }
        if !seen.insert(f.as_str()) {
            return Err(Error::Format { path: path.to_path_buf(), message: format!("duplicate feature name {f:?}") });
        }
    }

    let mut data = Vec::new();
    let mut counts = Vec::new();
    let mut ids = Vec::new();
    for (i, record) in reader.records().enumerate() {
        // header is line 1
        let line = i + 2;
        let record = record.map_err(|e| csv_error(path, e))?;
        let cell = |j: usize| -> Result<f64> {
            let raw = record.get(j).unwrap_or("");
            let column = header[j].clone();
            if raw.is_empty() || raw.eq_ignore_ascii_case("na") || raw == "?" {
                return Err(Error::Cell { path: path.to_path_buf(), row: line, column, message: "missing value".into() });
            }
            match raw.parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(v),
                _ => Err(Error::Cell {
                    path: path.to_path_buf(),
                    row: line,
                    column,
                    message: format!("non-numeric value {raw:?}"),
                }),
            }
        };
        for &j in &feature_cols {
            data.push(cell(j)?);
        }
        let y = cell(target)?;
        if y < 0.0 {
            return Err(Error::Cell {
                path: path.to_path_buf(),
                row: line,
                column: header[target].clone(),
                message: "negative defect count".into(),
            });
        }
        counts.push(y.round() as u32);
        ids.push(match id_col {
            Some(j) => record.get(j).unwrap_or("").to_string(),
            None => format!("{}", i + 1),
        });
    }
    let features = Matrix::new(counts.len(), feature_names.len(), data)?;
    let mut ds = DefectDataset::new(entry.name.clone(), ids, feature_names, features, counts)?;
    ds.source_digest = Some(sha256_hex(&bytes));
    Ok(ds)
}

/// Which class counts as the "event" in events-per-variable.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EpvMode {
    /// Defective modules, whatever their share (reproduces published EPVs).
    #[default]
    DefectiveCount,
    /// The less frequent of the two classes.
    MinorityClass,
}

impl std::str::FromStr for EpvMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "defective-count" => Ok(EpvMode::DefectiveCount),
            "minority-class" => Ok(EpvMode::MinorityClass),
            other => Err(Error::InvalidInput(format!("unknown EPV mode {other:?}"))),
        }
    }
}

/// EPV from event counts.
pub fn epv(n_defective: f64, n_modules: f64, n_features: usize, mode: EpvMode) -> f64 {
    let events = match mode {
        EpvMode::DefectiveCount => n_defective,
        EpvMode::MinorityClass => n_defective.min(n_modules - n_defective),
    };
    events / n_features as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub name: String,
    pub n_modules: usize,
    pub n_features: usize,
    pub defective_ratio: f64,
    pub epv: f64,
    pub admitted: bool,
    pub rejection_reason: Option<String>,
}

pub fn summarize(ds: &DefectDataset, mode: EpvMode) -> DatasetSummary {
    let n = ds.n_modules();
    let n_def = ds.n_defective();
    let defective_ratio = n_def as f64 / n as f64;
    let epv = epv(n_def as f64, n as f64, ds.n_features(), mode);
    let mut reasons = Vec::new();
    if epv <= EPV_THRESHOLD {
        reasons.push("EPV ≤ 10");
    }
    if defective_ratio >= MAX_DEFECTIVE_RATIO {
        reasons.push("defective ratio ≥ 80%");
    }
    DatasetSummary {
        name: ds.name.clone(),
        n_modules: n,
        n_features: ds.n_features(),
        defective_ratio,
        epv,
        admitted: reasons.is_empty(),
        rejection_reason: (!reasons.is_empty()).then(|| reasons.join("; ")),
    }
}

/// A module is defective iff it has at least one defect.
pub fn discretize(counts: &[u32]) -> Vec<bool> {
    counts.iter().map(|&c| c >= 1).collect()
}

/// Resample `ds` with replacement, keeping its size, so that exactly
/// `round(N * target_ratio)` rows are defective.
pub fn resample_to_ratio<R: Rng + ?Sized>(ds: &DefectDataset, target_ratio: f64, rng: &mut R) -> Result<DefectDataset> {
    if !(target_ratio > 0.0 && target_ratio < 1.0) {
        return Err(Error::InvalidInput(format!("target ratio {target_ratio} outside (0, 1)")));
    }
    let (defective, clean): (Vec<usize>, Vec<usize>) = (0..ds.n_modules()).partition(|&i| ds.defect_counts[i] >= 1);
    if defective.is_empty() || clean.is_empty() {
        return Err(Error::InvalidInput(format!(
            "{}: resampling needs both defective and clean modules",
            ds.name
        )));
    }
    let n = ds.n_modules();
    let n_def = (n as f64 * target_ratio).round() as usize;
    let mut rows = Vec::with_capacity(n);
    rows.extend((0..n_def).map(|_| defective[rng.random_range(0..defective.len())]));
    rows.extend((n_def..n).map(|_| clean[rng.random_range(0..clean.len())]));
    rows.shuffle(rng);
    Ok(ds.select_rows(&rows))
}
