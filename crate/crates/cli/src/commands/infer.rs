use std::path::{Path, PathBuf};

use clap::ValueEnum;
use lesionkit::inference::{tta_fuse_files, ConstantPredictor, IdentityPredictor, PhantomOracle, ThresholdPredictor};
use lesionkit::preprocess::ChannelRole;
use lesionkit::{
    apply_rules, nifti, predict_patient, unmerge_labels, FlipAxis, Image, LabelVolume, Predictor, ScalarVolume,
    TtaConfig,
};
use rayon::prelude::*;

use crate::config::ToolkitConfig;
use crate::dataset::{case_dirs, find_volume, output_dir};
use crate::fail::{at, Failure};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PredictorKind {
    /// Same probability everywhere (`--value`)
    Constant,
    /// Echo the first channel as all three outputs
    Identity,
    /// Fixed 0.25 / 0.5 / 0.75 thresholds on the `--source` channel
    Threshold,
    /// Decode labels stored as intensities 0, 1/3, 2/3, 1 in the first channel
    Phantom,
    /// Precomputed `<case>_<flipcode>.nii.gz` probability files in `--predictions`
    Files,
}

#[derive(clap::Args, Debug)]
pub struct Args {
    /// Preprocessed cases, one sub-directory each (not used by `files`)
    #[arg(long, required_unless_present = "predictions")]
    pub input_dir: Option<PathBuf>,

    #[arg(long)]
    pub output_dir: Option<PathBuf>,

    #[arg(long, value_enum, default_value = "threshold")]
    pub predictor: PredictorKind,

    /// Output of the constant predictor
    #[arg(long, default_value_t = 0.5)]
    pub value: f32,

    /// Channel read by the threshold predictor
    #[arg(long, default_value = "flair")]
    pub source: String,

    /// Average over flip combinations (and noise) from the `tta` config
    #[arg(long)]
    pub tta: bool,

    /// Directory with precomputed predictions for `--predictor files`
    #[arg(long)]
    pub predictions: Option<PathBuf>,

    /// Skip the small-component cleanup rules
    #[arg(long)]
    pub no_postprocess: bool,
}

pub fn run(args: Args, cfg: &mut ToolkitConfig) -> Result<(), Failure> {
    cfg.validate()?;
    let out = output_dir(args.output_dir.clone(), cfg)?;
    let cfg = &*cfg;
    let rules = (!args.no_postprocess).then_some(&cfg.postprocess);

    if args.predictor == PredictorKind::Files {
        let dir = args
            .predictions
            .as_deref()
            .ok_or_else(|| Failure::Invalid("--predictor files needs --predictions".into()))?;
        return infer_files(dir, &out, &args, cfg);
    }
    let input = args.input_dir.as_deref().ok_or_else(|| Failure::Invalid("--input-dir is required".into()))?;

    let roles = cfg.channels.roles();
    let channels = roles.len();
    let predictor: Box<dyn Predictor<f32>> = match args.predictor {
        PredictorKind::Constant => {
            if !(0.0..=1.0).contains(&args.value) {
                return Err(Failure::Invalid(format!("--value must lie in [0, 1], got {}", args.value)));
            }
            Box::new(ConstantPredictor { value: args.value, channels })
        }
        PredictorKind::Identity => Box::new(IdentityPredictor { channels }),
        PredictorKind::Threshold => {
            let source = roles
                .iter()
                .position(|r| r.name() == args.source)
                .ok_or_else(|| Failure::Invalid(format!("source channel {} is not configured", args.source)))?;
            Box::new(ThresholdPredictor::<f32>::new(channels, source)?)
        }
        PredictorKind::Phantom => Box::new(PhantomOracle { channels }),
        PredictorKind::Files => unreachable!("handled above"),
    };
    let tta = args.tta.then_some(&cfg.tta);

    let cases = case_dirs(input)?;
    if cases.is_empty() {
        return Err(Failure::Invalid(format!("{}: no case directories", input.display())));
    }
    cases
        .par_iter()
        .map(|(case, dir)| {
            log::info!("infer {case}");
            let image = load_image(dir, roles)?;
            let labels =
                predict_patient(&image, predictor.as_ref(), &cfg.sliding_window, tta, rules).map_err(at(dir))?;
            save(&labels, &out, case, cfg)
        })
        .collect::<Result<Vec<()>, Failure>>()?;
    Ok(())
}

fn load_image(dir: &Path, roles: &[ChannelRole]) -> Result<Image<f32>, Failure> {
    let vols = roles
        .iter()
        .map(|r| {
            let path = find_volume(dir, r.name())
                .ok_or_else(|| Failure::Invalid(format!("{}: missing {}.nii.gz", dir.display(), r.name())))?;
            nifti::load_scalar::<f32>(&path).map_err(at(&path))
        })
        .collect::<Result<Vec<ScalarVolume<f32>>, Failure>>()?;
    Image::new(vols).map_err(at(dir))
}

fn save(labels: &LabelVolume, out: &Path, case: &str, cfg: &ToolkitConfig) -> Result<(), Failure> {
    let path = out.join(format!("{case}.nii.gz"));
    nifti::save_labels(labels, &path, &cfg.labels).map_err(at(&path))?;
    Ok(())
}

fn infer_files(dir: &Path, out: &Path, args: &Args, cfg: &ToolkitConfig) -> Result<(), Failure> {
    let tta =
        if args.tta { cfg.tta.clone() } else { TtaConfig { flip_axes: Vec::<FlipAxis>::new(), ..cfg.tta.clone() } };
    let cases: Vec<String> = crate::dataset::nifti_files(dir)?
        .into_keys()
        .filter_map(|stem| stem.strip_suffix("_id").map(str::to_string))
        .collect();
    if cases.is_empty() {
        return Err(Failure::Invalid(format!("{}: no <case>_id.nii.gz predictions", dir.display())));
    }
    cases
        .par_iter()
        .map(|case| {
            log::info!("fuse {case}");
            let probs = tta_fuse_files::<f32>(dir, case, &tta).map_err(at(dir))?;
            let labels = unmerge_labels(&probs.binarize(0.5));
            let labels = match args.no_postprocess {
                true => labels,
                false => apply_rules(&labels, &cfg.postprocess),
            };
            save(&labels, out, case, cfg)
        })
        .collect::<Result<Vec<()>, Failure>>()?;
    Ok(())
}
