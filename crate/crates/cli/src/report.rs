//! Canonical JSON, atomic file output and batch bookkeeping.

use std::io::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;

/// Pretty JSON with keys sorted at every level and a trailing newline.
/// Non-finite numbers become `null`.
pub fn canonical_json<T: Serialize>(value: &T) -> Result<String> {
    // serde_json's Value map is ordered by key unless `preserve_order` is
    // enabled, which this crate does not do.
    let v = serde_json::to_value(value)?;
    let mut s = serde_json::to_string_pretty(&v)?;
    s.push('\n');
    Ok(s)
}

/// Writes through a temporary file in the target directory and renames it
/// into place, so readers never see a partial file.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)
        .with_context(|| format!("creating a temporary file in {}", dir.display()))?;
    tmp.write_all(contents.as_bytes())?;
    tmp.persist(path)
        .with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    write_atomic(path, &canonical_json(value)?)
}

/// Output file stem for an input path.
pub fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "input".into())
}

#[derive(Debug, Serialize)]
struct ErrorRecord<'a> {
    input: String,
    error: &'a str,
}

/// Result of processing one input: the report to write and an optional plot.
pub struct Processed<R> {
    pub report: R,
    pub svg: Option<String>,
}

/// What a batch run produced; the exit status is nonzero iff `failed > 0`.
#[derive(Debug, Default, PartialEq, Eq)]
pub struct BatchSummary {
    pub succeeded: usize,
    pub failed: usize,
}

/// Expands directories into their files with one of `extensions`, sorted by
/// name. Plain files are taken as given.
pub fn expand_inputs(inputs: &[PathBuf], extensions: &[&str]) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for p in inputs {
        if p.is_dir() {
            let mut found: Vec<PathBuf> = std::fs::read_dir(p)
                .with_context(|| format!("listing {}", p.display()))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|f| {
                    f.is_file()
                        && f.extension()
                            .and_then(|e| e.to_str())
                            .is_some_and(|e| extensions.contains(&e))
                })
                .collect();
            found.sort();
            out.extend(found);
        } else {
            out.push(p.clone());
        }
    }
    if out.is_empty() {
        anyhow::bail!("no input files");
    }
    Ok(out)
}

/// Writes per-input outputs in input order. Each success gives
/// `<stem>.json` (and `<stem>.svg` when a plot was made); each failure gives
/// `<stem>.error.json`. Without `keep_going` writing stops after the first
/// failure.
pub fn write_batch<R: Serialize>(
    out_dir: &Path,
    inputs: &[PathBuf],
    results: Vec<Result<Processed<R>>>,
    keep_going: bool,
) -> Result<BatchSummary> {
    let mut summary = BatchSummary::default();
    for (input, result) in inputs.iter().zip(results) {
        let stem = stem(input);
        match result {
            Ok(p) => {
                write_json(&out_dir.join(format!("{stem}.json")), &p.report)?;
                if let Some(svg) = p.svg {
                    write_atomic(&out_dir.join(format!("{stem}.svg")), &svg)?;
                }
                summary.succeeded += 1;
            }
            Err(e) => {
                let message = format!("{e:#}");
                eprintln!("error: {}: {message}", input.display());
                write_json(
                    &out_dir.join(format!("{stem}.error.json")),
                    &ErrorRecord {
                        input: input.display().to_string(),
                        error: &message,
                    },
                )?;
                summary.failed += 1;
                if !keep_going {
                    break;
                }
            }
        }
    }
    Ok(summary)
}
