//! Directory layout helpers shared by the subcommands.
//!
//! A dataset directory holds either flat NIfTI files named `<case>.nii.gz`
//! or one sub-directory per case with files named after their role
//! (`t1w.nii.gz`, `seg.nii.gz`, ...). Plain `.nii` is accepted everywhere.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::ToolkitConfig;
use crate::fail::Failure;

/// File name without the `.nii.gz` / `.nii` suffix, if it is a NIfTI file.
pub fn nifti_stem(path: &Path) -> Option<String> {
    let name = path.file_name()?.to_str()?;
    name.strip_suffix(".nii.gz").or_else(|| name.strip_suffix(".nii")).filter(|s| !s.is_empty()).map(str::to_string)
}

fn entries(dir: &Path) -> Result<Vec<PathBuf>, Failure> {
    let rd = std::fs::read_dir(dir).map_err(|e| Failure::Io(format!("{}: {e}", dir.display())))?;
    let mut out = Vec::new();
    for entry in rd {
        out.push(entry.map_err(|e| Failure::Io(format!("{}: {e}", dir.display())))?.path());
    }
    out.sort();
    Ok(out)
}

/// NIfTI files directly inside `dir`, keyed by stem.
pub fn nifti_files(dir: &Path) -> Result<BTreeMap<String, PathBuf>, Failure> {
    let mut out = BTreeMap::new();
    for p in entries(dir)? {
        if p.is_file() {
            if let Some(stem) = nifti_stem(&p) {
                if out.insert(stem.clone(), p).is_some() {
                    return Err(Failure::Invalid(format!("{}: both {stem}.nii and {stem}.nii.gz", dir.display())));
                }
            }
        }
    }
    Ok(out)
}

/// Case sub-directories of `dir`, sorted by name.
pub fn case_dirs(dir: &Path) -> Result<Vec<(String, PathBuf)>, Failure> {
    let mut out = Vec::new();
    for p in entries(dir)? {
        if p.is_dir() {
            if let Some(name) = p.file_name().and_then(|n| n.to_str()) {
                out.push((name.to_string(), p.clone()));
            }
        }
    }
    Ok(out)
}

/// `<dir>/<name>.nii.gz` or `<dir>/<name>.nii`, whichever exists.
pub fn find_volume(dir: &Path, name: &str) -> Option<PathBuf> {
    [format!("{name}.nii.gz"), format!("{name}.nii")].into_iter().map(|f| dir.join(f)).find(|p| p.is_file())
}

/// Label maps of a dataset keyed by case: flat `<case>.nii.gz` files plus
/// `<case>/seg.nii.gz` inside case directories.
pub fn label_files(dir: &Path) -> Result<BTreeMap<String, PathBuf>, Failure> {
    let mut out = nifti_files(dir)?;
    for (case, sub) in case_dirs(dir)? {
        if let Some(seg) = find_volume(&sub, "seg") {
            if out.insert(case.clone(), seg).is_some() {
                return Err(Failure::Invalid(format!("{}: case {case} appears twice", dir.display())));
            }
        }
    }
    Ok(out)
}

pub fn output_dir(flag: Option<PathBuf>, cfg: &ToolkitConfig) -> Result<PathBuf, Failure> {
    let dir = flag
        .or_else(|| cfg.output_dir.clone())
        .ok_or_else(|| Failure::Invalid("no output directory: pass --output-dir or set output_dir".into()))?;
    create_dir(&dir)?;
    Ok(dir)
}

pub fn create_dir(dir: &Path) -> Result<(), Failure> {
    std::fs::create_dir_all(dir).map_err(|e| Failure::Io(format!("{}: {e}", dir.display())))
}

pub fn write_json<V: Serialize + ?Sized>(path: &Path, value: &V) -> Result<(), Failure> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))
}
