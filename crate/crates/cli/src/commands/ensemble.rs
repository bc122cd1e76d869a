use std::path::{Path, PathBuf};

use clap::ValueEnum;
use lesionkit::{
    max_ensemble, mean_ensemble, merge_labels, nifti, simple_ensemble_channels, unmerge_labels, ChannelMask, Channels,
    ProbabilityVolume,
};

use crate::config::ToolkitConfig;
use crate::fail::{at, Failure};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    /// Voxel-wise mean, then binarize
    Mean,
    /// Iterative performance-weighted voting
    Simple,
    /// Voxel-wise maximum of exactly two inputs
    Max,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Kind {
    /// 4D inputs are probabilities, 3D inputs are label maps
    Auto,
    Probability,
    Labels,
}

#[derive(clap::Args, Debug)]
pub struct Args {
    #[arg(long, value_enum)]
    pub method: Method,

    /// Predictions of the same case: 4D WT/TC/ET probability files or label maps
    #[arg(long, num_args = 1.., required = true)]
    pub inputs: Vec<PathBuf>,

    #[arg(long)]
    pub output: PathBuf,

    #[arg(long, value_enum, default_value = "auto")]
    pub kind: Kind,

    /// Binarization threshold for probabilities (overrides `simple.binarize_threshold`)
    #[arg(long)]
    pub threshold: Option<f64>,
}

enum Inputs {
    Probability(Vec<ProbabilityVolume<f32>>),
    Labels(Vec<ChannelMask>),
}

fn is_probability(path: &Path) -> Result<bool, Failure> {
    let h = nifti::read_header(path).map_err(at(path))?;
    Ok(h.dims.len() == 4 && h.dims[3] > 1)
}

fn load(args: &Args, cfg: &ToolkitConfig) -> Result<Inputs, Failure> {
    let kind = match args.kind {
        Kind::Auto => {
            let first = is_probability(&args.inputs[0])?;
            for p in &args.inputs[1..] {
                if is_probability(p)? != first {
                    return Err(Failure::Invalid("inputs mix probability and label files".into()));
                }
            }
            if first {
                Kind::Probability
            } else {
                Kind::Labels
            }
        }
        k => k,
    };
    Ok(if kind == Kind::Probability {
        let vols =
            args.inputs.iter().map(|p| nifti::load_probability::<f32>(p).map_err(at(p))).collect::<Result<_, _>>()?;
        Inputs::Probability(vols)
    } else {
        let masks = args
            .inputs
            .iter()
            .map(|p| nifti::load_labels(p, &cfg.labels).map(|l| merge_labels(&l)).map_err(at(p)))
            .collect::<Result<_, _>>()?;
        Inputs::Labels(masks)
    })
}

pub fn run(args: Args, cfg: &mut ToolkitConfig) -> Result<(), Failure> {
    if let Some(t) = args.threshold {
        cfg.simple.binarize_threshold = t;
    }
    cfg.validate()?;
    let threshold = cfg.simple.binarize_threshold as f32;
    let inputs = load(&args, cfg)?;
    let out = &args.output;

    let fused = match (args.method, inputs) {
        (Method::Max, inputs) => {
            if args.inputs.len() != 2 {
                return Err(Failure::Invalid(format!("max takes exactly 2 inputs, got {}", args.inputs.len())));
            }
            match inputs {
                Inputs::Probability(v) => {
                    let m = max_ensemble(&v[0], &v[1])?;
                    nifti::save_probability(&m, out).map_err(at(out))?;
                    return Ok(());
                }
                Inputs::Labels(v) => {
                    Channels::try_from_fn(|c| v[0].channel(c).zip_map(v[1].channel(c), |a, b| a || b))?
                }
            }
        }
        (Method::Mean, Inputs::Probability(v)) => mean_ensemble(&v, threshold)?,
        (Method::Mean, Inputs::Labels(v)) => {
            let p: Vec<ProbabilityVolume<f32>> = v.iter().map(|m| m.to_probability()).collect();
            mean_ensemble(&p, 0.5)?
        }
        (Method::Simple, Inputs::Probability(v)) => {
            let masks: Vec<ChannelMask> = v.iter().map(|p| p.binarize(threshold)).collect();
            simple_ensemble_channels(&masks, &cfg.simple)?
        }
        (Method::Simple, Inputs::Labels(v)) => simple_ensemble_channels(&v, &cfg.simple)?,
    };
    nifti::save_labels(&unmerge_labels(&fused), out, &cfg.labels).map_err(at(out))?;
    Ok(())
}
