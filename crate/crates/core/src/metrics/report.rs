use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::preprocess::merge_labels;
use crate::volume::{Channel, LabelVolume};

use super::{dice, hd95, lesionwise_metrics, EvalConfig};

/// Scores for one of the WT / TC / ET channels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelMetrics {
    pub ldsc: f64,
    pub cdsc: f64,
    pub lhd95: f64,
    pub chd95: f64,
    #[serde(rename = "fp")]
    pub false_positives: usize,
    #[serde(rename = "fn")]
    pub false_negatives: usize,
    pub gt_lesions: usize,
    pub pred_lesions: usize,
}

/// Cross-label means of [`LabelMetrics`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeanMetrics {
    pub ldsc: f64,
    pub cdsc: f64,
    pub lhd95: f64,
    pub chd95: f64,
    pub fp: f64,
    #[serde(rename = "fn")]
    pub fn_: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub wt: LabelMetrics,
    pub tc: LabelMetrics,
    pub et: LabelMetrics,
    pub mean: MeanMetrics,
}

impl MetricsReport {
    pub fn label(&self, c: Channel) -> &LabelMetrics {
        match c {
            Channel::Wt => &self.wt,
            Channel::Tc => &self.tc,
            Channel::Et => &self.et,
        }
    }
}

/// Full per-patient report: cumulative and lesion-wise scores for each
/// merged channel plus their means.
pub fn evaluate_patient(gt: &LabelVolume, pred: &LabelVolume, cfg: &EvalConfig) -> Result<MetricsReport> {
    cfg.validate()?;
    gt.geometry().check_same_shape(pred.geometry())?;
    let gm = merge_labels(gt);
    let pm = merge_labels(pred);

    let mut per_label = Vec::with_capacity(3);
    let mut counted = Vec::with_capacity(3);
    for c in Channel::ALL {
        let (g, p) = (gm.channel(c), pm.channel(c));
        let lw = lesionwise_metrics(g, p, cfg)?;
        per_label.push(LabelMetrics {
            ldsc: lw.ldsc,
            cdsc: dice(g, p)?,
            lhd95: lw.lhd95,
            chd95: hd95(g, p, cfg)?,
            false_positives: lw.false_positives,
            false_negatives: lw.false_negatives,
            gt_lesions: lw.num_gt,
            pred_lesions: lw.num_pred,
        });
        counted.push(!(cfg.skip_empty_channels && lw.num_gt == 0 && lw.num_pred == 0));
    }

    let included: Vec<&LabelMetrics> =
        per_label.iter().zip(&counted).filter_map(|(m, &keep)| keep.then_some(m)).collect();
    let avg = |f: &dyn Fn(&LabelMetrics) -> f64| {
        if included.is_empty() {
            f64::NAN
        } else {
            included.iter().map(|m| f(m)).sum::<f64>() / included.len() as f64
        }
    };
    let mean = MeanMetrics {
        ldsc: avg(&|m| m.ldsc),
        cdsc: avg(&|m| m.cdsc),
        lhd95: avg(&|m| m.lhd95),
        chd95: avg(&|m| m.chd95),
        fp: avg(&|m| m.false_positives as f64),
        fn_: avg(&|m| m.false_negatives as f64),
    };
    let [wt, tc, et]: [LabelMetrics; 3] = per_label.try_into().expect("three channels");
    Ok(MetricsReport { wt, tc, et, mean })
}
