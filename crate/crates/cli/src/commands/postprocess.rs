use std::path::{Path, PathBuf};

use lesionkit::{apply_rules, nifti, Connectivity};
use rayon::prelude::*;

use crate::config::ToolkitConfig;
use crate::dataset::{create_dir, label_files};
use crate::fail::{at, Failure};

#[derive(clap::Args, Debug)]
pub struct Args {
    /// Label map, or a directory of them
    #[arg(long)]
    pub input: PathBuf,

    /// Output file, or directory when the input is a directory
    #[arg(long)]
    pub output: PathBuf,

    /// Whole-tumour components below this size are erased
    #[arg(long)]
    pub wt_min: Option<usize>,

    /// NETC components below this size become ET
    #[arg(long)]
    pub netc_min: Option<usize>,

    /// SNFH components below this size are erased
    #[arg(long)]
    pub snfh_min: Option<usize>,

    /// ET components below this size are erased
    #[arg(long)]
    pub et_min: Option<usize>,

    #[arg(long, value_parser = super::parse_connectivity)]
    pub connectivity: Option<Connectivity>,
}

pub fn run(args: Args, cfg: &mut ToolkitConfig) -> Result<(), Failure> {
    let r = &mut cfg.postprocess;
    for (flag, slot) in [
        (args.wt_min, &mut r.wt_min_voxels),
        (args.netc_min, &mut r.netc_min_voxels),
        (args.snfh_min, &mut r.snfh_min_voxels),
        (args.et_min, &mut r.et_min_voxels),
    ] {
        if let Some(v) = flag {
            *slot = v;
        }
    }
    if let Some(c) = args.connectivity {
        r.connectivity = c;
    }
    let cfg = &*cfg;

    if args.input.is_dir() {
        create_dir(&args.output)?;
        let cases = label_files(&args.input)?;
        cases
            .par_iter()
            .map(|(case, path)| process(path, &args.output.join(format!("{case}.nii.gz")), cfg))
            .collect::<Result<Vec<()>, Failure>>()?;
        Ok(())
    } else {
        if let Some(parent) = args.output.parent().filter(|p| !p.as_os_str().is_empty()) {
            create_dir(parent)?;
        }
        process(&args.input, &args.output, cfg)
    }
}

fn process(input: &Path, output: &Path, cfg: &ToolkitConfig) -> Result<(), Failure> {
    let labels = nifti::load_labels(input, &cfg.labels).map_err(at(input))?;
    let cleaned = apply_rules(&labels, &cfg.postprocess);
    let changed = labels.data().iter().zip(cleaned.data()).filter(|(a, b)| a != b).count();
    log::info!("{}: {changed} voxel(s) changed", input.display());
    nifti::save_labels(&cleaned, output, &cfg.labels).map_err(at(output))?;
    Ok(())
}
