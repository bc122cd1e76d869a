use std::path::PathBuf;

use clap::ValueEnum;
use lesionkit::{connected_components, merge_labels, nifti, BoundingBox, Channel, Connectivity, Label};
use serde::Serialize;

use crate::config::ToolkitConfig;
use crate::dataset::write_json;
use crate::fail::{at, Failure};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Select {
    /// Any non-background voxel (whole tumour)
    Wt,
    /// NETC or ET
    Tc,
    Et,
    Netc,
    Snfh,
}

#[derive(clap::Args, Debug)]
pub struct Args {
    /// Label map or binary mask
    pub input: PathBuf,

    #[arg(long, value_parser = super::parse_connectivity, default_value = "26")]
    pub connectivity: Connectivity,

    /// Which voxels form the mask
    #[arg(long, value_enum, default_value = "wt")]
    pub select: Select,

    /// Write the table here instead of stdout
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Serialize)]
struct Component {
    id: u32,
    size: usize,
    bbox: BoundingBox,
}

#[derive(Debug, Serialize)]
struct Table {
    connectivity: u8,
    count: usize,
    total_voxels: usize,
    components: Vec<Component>,
}

pub fn run(args: Args, cfg: &mut ToolkitConfig) -> Result<(), Failure> {
    let labels = nifti::load_labels(&args.input, &cfg.labels).map_err(at(&args.input))?;
    let mask = match args.select {
        Select::Wt => merge_labels(&labels).channel(Channel::Wt).clone(),
        Select::Tc => merge_labels(&labels).channel(Channel::Tc).clone(),
        Select::Et => labels.label_mask(Label::Et),
        Select::Netc => labels.label_mask(Label::Netc),
        Select::Snfh => labels.label_mask(Label::Snfh),
    };
    let cc = connected_components(&mask, args.connectivity);
    let components: Vec<Component> =
        cc.component_ids().map(|id| Component { id, size: cc.size(id), bbox: cc.bounding_box(id) }).collect();
    let table = Table {
        connectivity: args.connectivity.neighbors(),
        count: cc.count(),
        total_voxels: mask.popcount(),
        components,
    };
    match &args.output {
        Some(path) => write_json(path, &table),
        None => {
            println!("{}", serde_json::to_string_pretty(&table)?);
            Ok(())
        }
    }
}
