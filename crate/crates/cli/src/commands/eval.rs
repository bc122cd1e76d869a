use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use lesionkit::stats::{mean, median, std_dev};
use lesionkit::{evaluate_patient, nifti, Connectivity, EvalConfig};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::Value;

use crate::config::ToolkitConfig;
use crate::dataset::{label_files, output_dir, write_json};
use crate::fail::{at, Failure};

#[derive(clap::Args, Debug)]
pub struct Args {
    /// Ground-truth label maps (`<case>.nii.gz` or `<case>/seg.nii.gz`)
    #[arg(long)]
    pub gt_dir: PathBuf,

    /// Predicted label maps, same layout
    #[arg(long)]
    pub pred_dir: PathBuf,

    #[arg(long)]
    pub output_dir: Option<PathBuf>,

    /// Lesion dilation radius in voxels (overrides `eval.dilation_radius`)
    #[arg(long)]
    pub dilation_radius: Option<usize>,

    #[arg(long, value_parser = super::parse_connectivity)]
    pub connectivity: Option<Connectivity>,

    /// HD95 penalty in mm (overrides `eval.hd_penalty`)
    #[arg(long)]
    pub hd_penalty: Option<f64>,

    /// Do not print the summary table
    #[arg(long)]
    pub quiet: bool,
}

/// Mean, median and population std of one metric over cases.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Aggregate {
    pub mean: f64,
    pub median: f64,
    pub std: f64,
    /// Cases with a finite value.
    pub n: usize,
}

#[derive(Debug, Serialize)]
struct Summary<'a> {
    cases: Vec<&'a str>,
    eval: &'a EvalConfig,
    metrics: BTreeMap<String, BTreeMap<String, Aggregate>>,
}

pub fn run(args: Args, cfg: &mut ToolkitConfig) -> Result<(), Failure> {
    if let Some(r) = args.dilation_radius {
        cfg.eval.dilation_radius = r;
    }
    if let Some(c) = args.connectivity {
        cfg.eval.connectivity = c;
    }
    if let Some(p) = args.hd_penalty {
        cfg.eval.hd_penalty = p;
    }
    cfg.validate()?;
    let out = output_dir(args.output_dir, cfg)?;

    let gt = label_files(&args.gt_dir)?;
    let pred = label_files(&args.pred_dir)?;
    let missing: Vec<&str> = gt.keys().filter(|k| !pred.contains_key(*k)).map(String::as_str).collect();
    if !missing.is_empty() {
        return Err(Failure::Invalid(format!("no prediction for case(s): {}", missing.join(", "))));
    }
    for extra in pred.keys().filter(|k| !gt.contains_key(*k)) {
        log::warn!("prediction {extra} has no ground truth, skipped");
    }
    if gt.is_empty() {
        return Err(Failure::Invalid(format!("{}: no label maps", args.gt_dir.display())));
    }

    let cfg = &*cfg;
    let pairs: Vec<(&String, &PathBuf, &PathBuf)> = gt.iter().map(|(k, g)| (k, g, &pred[k])).collect();
    let reports = pairs
        .par_iter()
        .map(|(case, g, p)| {
            log::info!("eval {case}");
            let report = score(g, p, cfg)?;
            let value = serde_json::to_value(&report)?;
            write_json(&out.join(format!("{case}.json")), &value)?;
            Ok(value)
        })
        .collect::<Result<Vec<Value>, Failure>>()?;

    let metrics = aggregate(&reports);
    let summary = Summary { cases: gt.keys().map(String::as_str).collect(), eval: &cfg.eval, metrics };
    write_json(&out.join("summary.json"), &summary)?;
    if !args.quiet {
        print!("{}", table(&summary.metrics, reports.len()));
    }
    Ok(())
}

fn score(gt: &Path, pred: &Path, cfg: &ToolkitConfig) -> Result<lesionkit::MetricsReport, Failure> {
    let g = nifti::load_labels(gt, &cfg.labels).map_err(at(gt))?;
    let p = nifti::load_labels(pred, &cfg.labels).map_err(at(pred))?;
    evaluate_patient(&g, &p, &cfg.eval).map_err(at(pred))
}

/// Per group (`wt`, `tc`, `et`, `mean`) and metric, statistics of the numeric
/// values found in the per-case report documents. Nulls (NaN) are skipped.
pub fn aggregate(reports: &[Value]) -> BTreeMap<String, BTreeMap<String, Aggregate>> {
    let mut columns: BTreeMap<String, BTreeMap<String, Vec<f64>>> = BTreeMap::new();
    for r in reports {
        let Some(groups) = r.as_object() else { continue };
        for (group, metrics) in groups {
            let Some(metrics) = metrics.as_object() else { continue };
            for (name, v) in metrics {
                let col = columns.entry(group.clone()).or_default().entry(name.clone()).or_default();
                if let Some(x) = v.as_f64() {
                    col.push(x);
                }
            }
        }
    }
    columns
        .into_iter()
        .map(|(group, metrics)| {
            let stats = metrics
                .into_iter()
                .map(|(name, v)| {
                    let agg = Aggregate { mean: mean(&v), median: median(&v), std: std_dev(&v), n: v.len() };
                    (name, agg)
                })
                .collect();
            (group, stats)
        })
        .collect()
}

fn table(metrics: &BTreeMap<String, BTreeMap<String, Aggregate>>, cases: usize) -> String {
    let groups = ["wt", "tc", "et", "mean"];
    let rows = ["ldsc", "cdsc", "lhd95", "chd95", "fp", "fn"];
    let mut s = format!("{cases} case(s), mean ± std\n{:<8}", "metric");
    for g in groups {
        s.push_str(&format!("{:>22}", g.to_uppercase()));
    }
    s.push('\n');
    for row in rows {
        s.push_str(&format!("{row:<8}"));
        for g in groups {
            let cell = match metrics.get(g).and_then(|m| m.get(row)) {
                Some(a) => format!("{:.4} ± {:.4}", a.mean, a.std),
                None => "-".to_string(),
            };
            s.push_str(&format!("{cell:>22}"));
        }
        s.push('\n');
    }
    s
}
