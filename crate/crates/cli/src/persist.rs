//! Run directories: file writing with content digests, the run record, and
//! integrity checks.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use regclass_core::harness::BootstrapRun;
use regclass_core::seed::sha256_hex;
use regclass_core::study::StudyConfig;
use serde::{Deserialize, Serialize};

use crate::UserError;

pub const RECORD_FILE: &str = "run.json";
pub const SUMMARY_FILE: &str = "summary.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileEntry {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetDigest {
    pub name: String,
    pub source_sha256: Option<String>,
    pub data_sha256: String,
}

/// Provenance of one `run` invocation. Wall-clock time is printed but not
/// stored so that identical runs produce identical records.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub tool: String,
    pub version: String,
    pub study: String,
    /// Command line without output-location and thread-count flags.
    pub command: Vec<String>,
    pub config: StudyConfig,
    pub datasets: Vec<DatasetDigest>,
    pub files: Vec<FileEntry>,
}

/// Flags that affect where or how fast a run executes, not what it computes.
const LOCATION_FLAGS: [&str; 3] = ["--out", "--threads", "--force"];

pub fn normalized_command(args: &[String]) -> Vec<String> {
    let mut out = vec!["regclass".to_string()];
    let mut skip_value = false;
    for a in args.iter().skip(1) {
        if skip_value {
            skip_value = false;
            continue;
        }
        if let Some(flag) = LOCATION_FLAGS.iter().find(|f| a == *f || a.starts_with(&format!("{f}="))) {
            skip_value = a == flag && *flag != "--force";
            continue;
        }
        out.push(a.clone());
    }
    out
}

/// Make a dataset name safe for use as a directory name.
pub fn path_component(name: &str) -> String {
    name.chars()
        .map(|c| if c.is_ascii_alphanumeric() || matches!(c, '.' | '-' | '_') { c } else { '_' })
        .collect()
}

pub struct RunWriter {
    root: PathBuf,
    files: Vec<FileEntry>,
}

impl RunWriter {
    /// Create the run directory. An existing non-empty directory is an
    /// error unless `force` is set, in which case it is cleared.
    pub fn create(root: &Path, force: bool) -> Result<Self> {
        if root.exists() {
            let non_empty = fs::read_dir(root).with_context(|| format!("reading {}", root.display()))?.next().is_some();
            if non_empty {
                if !force {
                    return Err(UserError(format!(
                        "output directory {} already exists; pass --force to overwrite",
                        root.display()
                    ))
                    .into());
                }
                fs::remove_dir_all(root).with_context(|| format!("clearing {}", root.display()))?;
            }
        }
        fs::create_dir_all(root).with_context(|| format!("creating {}", root.display()))?;
        Ok(Self { root: root.to_path_buf(), files: Vec::new() })
    }

    pub fn write_bytes(&mut self, rel: &str, bytes: &[u8]) -> Result<()> {
        let path = self.root.join(rel);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
        }
        fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
        self.files.push(FileEntry { path: rel.to_string(), sha256: sha256_hex(bytes) });
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, rel: &str, value: &T) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write_bytes(rel, text.as_bytes())
    }

    pub fn write_csv(&mut self, rel: &str, header: &[String], rows: &[Vec<String>]) -> Result<()> {
        let bytes = csv_bytes(header, rows)?;
        self.write_bytes(rel, &bytes)
    }

    pub fn finish(mut self, mut record: RunRecord) -> Result<PathBuf> {
        self.files.sort_by(|a, b| a.path.cmp(&b.path));
        record.files = self.files;
        let mut text = serde_json::to_string_pretty(&record)?;
        text.push('\n');
        let path = self.root.join(RECORD_FILE);
        fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
        Ok(self.root)
    }
}

pub fn csv_bytes(header: &[String], rows: &[Vec<String>]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.into_inner().map_err(|e| anyhow::anyhow!("{e}"))
}

pub fn fmt_f64(v: f64) -> String {
    if v.is_finite() {
        format!("{v}")
    } else if v.is_nan() {
        "NA".to_string()
    } else if v > 0.0 {
        "Inf".to_string()
    } else {
        "-Inf".to_string()
    }
}

pub fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_string(), fmt_f64)
}

/// One row per bootstrap iteration.
pub fn iterations_table(run: &BootstrapRun) -> (Vec<String>, Vec<Vec<String>>) {
    let mut header: Vec<String> = ["iteration", "status", "auc", "r_squared", "oob_fraction", "split_digest"]
        .map(String::from)
        .to_vec();
    header.extend(run.feature_names.iter().map(|f| format!("perm_{f}")));
    let has_impurity = run.iterations.iter().any(|r| r.impurity_importance.is_some());
    if has_impurity {
        header.extend(run.feature_names.iter().map(|f| format!("impurity_{f}")));
    }
    let rows = run
        .iterations
        .iter()
        .map(|r| {
            let mut row = vec![
                r.iteration.to_string(),
                serde_json::to_value(r.status).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default(),
                fmt_opt(r.auc),
                fmt_opt(r.r_squared),
                fmt_f64(r.oob_fraction),
                r.split_digest.clone(),
            ];
            let p = run.feature_names.len();
            if r.permutation_importance.len() == p {
                row.extend(r.permutation_importance.iter().map(|v| fmt_f64(*v)));
            } else {
                row.extend(std::iter::repeat_n("NA".to_string(), p));
            }
            if has_impurity {
                match &r.impurity_importance {
                    Some(v) => row.extend(v.iter().map(|x| fmt_f64(*x))),
                    None => row.extend(std::iter::repeat_n("NA".to_string(), p)),
                }
            }
            row
        })
        .collect();
    (header, rows)
}

pub fn read_record(run_dir: &Path) -> Result<RunRecord> {
    let path = run_dir.join(RECORD_FILE);
    let text = fs::read_to_string(&path)
        .map_err(|e| UserError(format!("no run record at {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| UserError(format!("corrupt run record {}: {e}", path.display())).into())
}

/// Check every recorded file against its digest.
pub fn verify(run_dir: &Path, record: &RunRecord) -> Result<()> {
    for f in &record.files {
        let path = run_dir.join(&f.path);
        let bytes = fs::read(&path).map_err(|e| UserError(format!("integrity error: {}: {e}", f.path)))?;
        let actual = sha256_hex(&bytes);
        if actual != f.sha256 {
            return Err(UserError(format!(
                "integrity error: {} has digest {actual}, run record says {}",
                f.path, f.sha256
            ))
            .into());
        }
    }
    Ok(())
}
