use std::path::PathBuf;

use lesionkit::{has_lesions, mask_large_lesions, nifti, Connectivity};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::ToolkitConfig;
use crate::dataset::{label_files, output_dir, write_json};
use crate::fail::{at, Failure};

#[derive(clap::Args, Debug)]
pub struct Args {
    /// Label maps (`<case>.nii.gz` or `<case>/seg.nii.gz`)
    #[arg(long)]
    pub input_dir: PathBuf,

    #[arg(long)]
    pub output_dir: Option<PathBuf>,

    /// Lesions with more voxels than this are erased
    #[arg(long, default_value_t = 1000)]
    pub tau: usize,

    #[arg(long, value_parser = super::parse_connectivity, default_value = "26")]
    pub connectivity: Connectivity,
}

#[derive(Debug, Serialize)]
struct Manifest {
    tau: usize,
    connectivity: u8,
    kept: Vec<String>,
    dropped: Vec<String>,
}

pub fn run(args: Args, cfg: &mut ToolkitConfig) -> Result<(), Failure> {
    let out = output_dir(args.output_dir.clone(), cfg)?;
    let cfg = &*cfg;
    let cases = label_files(&args.input_dir)?;
    let kept = cases
        .par_iter()
        .map(|(case, path)| {
            let labels = nifti::load_labels(path, &cfg.labels).map_err(at(path))?;
            let small = mask_large_lesions(&labels, args.tau, args.connectivity)?;
            if !has_lesions(&small) {
                return Ok(false);
            }
            let dest = out.join(format!("{case}.nii.gz"));
            nifti::save_labels(&small, &dest, &cfg.labels).map_err(at(&dest))?;
            Ok(true)
        })
        .collect::<Result<Vec<bool>, Failure>>()?;

    let mut manifest =
        Manifest { tau: args.tau, connectivity: args.connectivity.neighbors(), kept: Vec::new(), dropped: Vec::new() };
    for (case, keep) in cases.keys().zip(kept) {
        if keep { &mut manifest.kept } else { &mut manifest.dropped }.push(case.clone());
    }
    log::info!("{} case(s) kept, {} dropped", manifest.kept.len(), manifest.dropped.len());
    write_json(&out.join("mask_small.json"), &manifest)
}
