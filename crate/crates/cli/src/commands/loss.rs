use std::path::PathBuf;

use lesionkit::{loss_terms, merge_labels, nifti};

use crate::config::ToolkitConfig;
use crate::dataset::write_json;
use crate::fail::{at, Failure};

#[derive(clap::Args, Debug)]
pub struct Args {
    /// 4D WT/TC/ET probability file
    #[arg(long)]
    pub pred: PathBuf,

    /// Ground-truth label map
    #[arg(long)]
    pub gt: PathBuf,

    /// Write the terms here instead of stdout
    #[arg(long)]
    pub output: Option<PathBuf>,
}

pub fn run(args: Args, cfg: &mut ToolkitConfig) -> Result<(), Failure> {
    let p = nifti::load_probability::<f64>(&args.pred).map_err(at(&args.pred))?;
    let g = nifti::load_labels(&args.gt, &cfg.labels).map_err(at(&args.gt))?;
    let terms = loss_terms(&p, &merge_labels(&g), &cfg.loss).map_err(at(&args.pred))?;
    match &args.output {
        Some(path) => write_json(path, &terms),
        None => {
            println!("{}", serde_json::to_string_pretty(&terms)?);
            Ok(())
        }
    }
}
