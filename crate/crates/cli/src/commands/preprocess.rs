use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use lesionkit::nifti;
use lesionkit::preprocess::{ChannelRole, InputChannelSet};
use lesionkit::spatial::resample_labels_isotropic;
use lesionkit::{
    canonicalize_orientation, merge_labels, percentile_rescale, resample_isotropic, subtraction_sequence, ScalarVolume,
};
use rayon::prelude::*;

use crate::config::ToolkitConfig;
use crate::dataset::{case_dirs, create_dir, find_volume, output_dir};
use crate::fail::{at, Failure};

#[derive(clap::Args, Debug)]
pub struct Args {
    /// Directory with one sub-directory per case holding `<role>.nii.gz` files
    #[arg(long)]
    pub input_dir: PathBuf,

    #[arg(long)]
    pub output_dir: Option<PathBuf>,

    /// Isotropic target spacing in mm (overrides `target_spacing`)
    #[arg(long)]
    pub spacing: Option<f64>,

    /// Keep the input grid
    #[arg(long, conflicts_with = "spacing")]
    pub no_resample: bool,

    /// Keep the stored axis order and direction
    #[arg(long)]
    pub no_canonicalize: bool,

    /// Append the subtraction channel to the configured channel set
    #[arg(long)]
    pub subtraction: bool,
}

pub fn run(args: Args, cfg: &mut ToolkitConfig) -> Result<(), Failure> {
    if let Some(s) = args.spacing {
        cfg.target_spacing = Some(s);
    }
    if args.no_resample {
        cfg.target_spacing = None;
    }
    if args.no_canonicalize {
        cfg.canonicalize = false;
    }
    if args.subtraction && !cfg.channels.roles().contains(&ChannelRole::Subtraction) {
        let mut roles = cfg.channels.roles().to_vec();
        roles.push(ChannelRole::Subtraction);
        cfg.channels = InputChannelSet::new(roles)?;
    }
    cfg.validate()?;

    let out = output_dir(args.output_dir, cfg)?;
    let cases = case_dirs(&args.input_dir)?;
    if cases.is_empty() {
        return Err(Failure::Invalid(format!("{}: no case directories", args.input_dir.display())));
    }
    let cfg = &*cfg;
    cases
        .par_iter()
        .map(|(case, dir)| {
            log::info!("preprocess {case}");
            let dest = out.join(case);
            create_dir(&dest)?;
            preprocess_case(dir, &dest, cfg)
        })
        .collect::<Result<Vec<()>, Failure>>()?;
    Ok(())
}

fn spatial(vol: ScalarVolume<f32>, cfg: &ToolkitConfig) -> lesionkit::Result<ScalarVolume<f32>> {
    let vol = if cfg.canonicalize { canonicalize_orientation(&vol)? } else { vol };
    match cfg.target_spacing {
        Some(s) => resample_isotropic(&vol, s),
        None => Ok(vol),
    }
}

/// Rescaled channels of one case plus its label map if present.
pub fn preprocess_case(dir: &Path, dest: &Path, cfg: &ToolkitConfig) -> Result<(), Failure> {
    let wanted = cfg.channels.roles();
    let mut needed: Vec<ChannelRole> = wanted.iter().copied().filter(|r| *r != ChannelRole::Subtraction).collect();
    if wanted.contains(&ChannelRole::Subtraction) {
        for r in [ChannelRole::T1c, ChannelRole::T1w] {
            if !needed.contains(&r) {
                needed.push(r);
            }
        }
    }

    let mut rescaled = BTreeMap::new();
    let mut shape = None;
    for role in needed {
        let path = find_volume(dir, role.name())
            .ok_or_else(|| Failure::Invalid(format!("{}: missing {}.nii.gz", dir.display(), role.name())))?;
        let vol = nifti::load_scalar::<f32>(&path).map_err(at(&path))?;
        let vol = spatial(vol, cfg).map_err(at(&path))?;
        if *shape.get_or_insert(vol.shape()) != vol.shape() {
            return Err(Failure::Invalid(format!("{}: channel shapes differ", dir.display())));
        }
        rescaled.insert(role.name(), percentile_rescale(&vol, &cfg.rescale).map_err(at(&path))?);
    }
    if wanted.contains(&ChannelRole::Subtraction) {
        let sub = subtraction_sequence(&rescaled["t1c"], &rescaled["t1w"])?;
        rescaled.insert(ChannelRole::Subtraction.name(), sub);
    }
    for role in wanted {
        let path = dest.join(format!("{}.nii.gz", role.name()));
        nifti::save_scalar(&rescaled[role.name()], &path).map_err(at(&path))?;
    }

    if let Some(path) = find_volume(dir, "seg") {
        let mut labels = nifti::load_labels(&path, &cfg.labels).map_err(at(&path))?;
        if cfg.canonicalize {
            labels = canonicalize_orientation(&labels)?;
        }
        if let Some(s) = cfg.target_spacing {
            labels = resample_labels_isotropic(&labels, s)?;
        }
        if Some(labels.shape()) != shape {
            return Err(Failure::Invalid(format!("{}: label map shape differs from images", path.display())));
        }
        let seg = dest.join("seg.nii.gz");
        nifti::save_labels(&labels, &seg, &cfg.labels).map_err(at(&seg))?;
        let merged = dest.join("seg_merged.nii.gz");
        nifti::save_channel_mask(&merge_labels(&labels), &merged).map_err(at(&merged))?;
    }
    Ok(())
}
