//! Lesion matching and lesion-wise Dice / HD95.

use serde::{Deserialize, Serialize};

use crate::components::{connected_components, dilate, ComponentLabeling};
use crate::error::Result;
use crate::volume::{BoundingBox, Mask};

use super::distance::hd95_nonempty;
use super::{dice_from_counts, EvalConfig};

/// Outcome of matching predicted components against ground-truth lesions.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchResult {
    /// `matches[i]` lists the predicted component ids overlapping dilated
    /// ground-truth lesion `i + 1`, ascending.
    pub matches: Vec<Vec<u32>>,
    /// Ground-truth lesions without any overlapping prediction (FN).
    pub unmatched_gt: Vec<u32>,
    /// Predicted components overlapping no dilated lesion (FP).
    pub unmatched_pred: Vec<u32>,
    pub num_pred: usize,
}

impl MatchResult {
    pub fn num_gt(&self) -> usize {
        self.matches.len()
    }

    pub fn false_negatives(&self) -> usize {
        self.unmatched_gt.len()
    }

    pub fn false_positives(&self) -> usize {
        self.unmatched_pred.len()
    }
}

fn match_labelings(gt: &ComponentLabeling, pred: &ComponentLabeling, cfg: &EvalConfig) -> MatchResult {
    let shape = gt.geometry().shape;
    let mut matched_pred = vec![false; pred.count() + 1];
    let mut matches = Vec::with_capacity(gt.count());
    let mut unmatched_gt = Vec::new();

    for id in gt.component_ids() {
        let region = gt.bounding_box(id).expanded(cfg.dilation_radius, shape);
        let lesion = gt.ids().crop(&region).map(|&v| v == id);
        let grown = dilate(&lesion, cfg.dilation_radius, cfg.connectivity);
        let pred_ids = pred.ids().crop(&region);

        let mut hits: Vec<u32> =
            grown.data().iter().zip(pred_ids.data()).filter_map(|(&g, &p)| (g && p > 0).then_some(p)).collect();
        hits.sort_unstable();
        hits.dedup();
        if hits.is_empty() {
            unmatched_gt.push(id);
        }
        for &p in &hits {
            matched_pred[p as usize] = true;
        }
        matches.push(hits);
    }

    let unmatched_pred = pred.component_ids().filter(|&p| !matched_pred[p as usize]).collect();
    MatchResult { matches, unmatched_gt, unmatched_pred, num_pred: pred.count() }
}

/// Match connected components of `pred` to the dilated lesions of `gt`.
pub fn match_lesions(gt: &Mask, pred: &Mask, cfg: &EvalConfig) -> Result<MatchResult> {
    gt.geometry().check_same_shape(pred.geometry())?;
    let gl = connected_components(gt, cfg.connectivity);
    let pl = connected_components(pred, cfg.connectivity);
    Ok(match_labelings(&gl, &pl, cfg))
}

/// Score of one ground-truth lesion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LesionScore {
    pub id: u32,
    pub size: usize,
    pub matched: Vec<u32>,
    pub dice: f64,
    pub hd95: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LesionwiseMetrics {
    pub ldsc: f64,
    pub lhd95: f64,
    pub false_positives: usize,
    pub false_negatives: usize,
    pub num_gt: usize,
    pub num_pred: usize,
    pub lesions: Vec<LesionScore>,
}

/// Lesion-wise Dice and HD95 with FP/FN penalties:
/// `lDSC = Σ dice_i / (N_gt + FP)`,
/// `lHD95 = (Σ hd95_i + penalty · (FN + FP)) / (N_gt + FP)`,
/// where sums run over matched lesions.
pub fn lesionwise_metrics(gt: &Mask, pred: &Mask, cfg: &EvalConfig) -> Result<LesionwiseMetrics> {
    gt.geometry().check_same_shape(pred.geometry())?;
    let gl = connected_components(gt, cfg.connectivity);
    let pl = connected_components(pred, cfg.connectivity);
    let m = match_labelings(&gl, &pl, cfg);

    let mut lesions = Vec::with_capacity(gl.count());
    for (i, matched) in m.matches.iter().enumerate() {
        let id = i as u32 + 1;
        let size = gl.size(id);
        if matched.is_empty() {
            lesions.push(LesionScore { id, size, matched: Vec::new(), dice: 0.0, hd95: cfg.hd_penalty });
            continue;
        }
        let bbox = matched.iter().fold(gl.bounding_box(id), |b: BoundingBox, &p| b.union(&pl.bounding_box(p)));
        let region = bbox.expanded(1, gt.shape());
        let lesion = gl.ids().crop(&region).map(|&v| v == id);
        let predicted = pl.ids().crop(&region).map(|&v| v > 0 && matched.binary_search(&v).is_ok());

        let (mut inter, mut total) = (0usize, 0usize);
        for (&a, &b) in lesion.data().iter().zip(predicted.data()) {
            inter += usize::from(a && b);
            total += usize::from(a) + usize::from(b);
        }
        let local = BoundingBox { min: [0; 3], max: lesion.shape() };
        lesions.push(LesionScore {
            id,
            size,
            matched: matched.clone(),
            dice: dice_from_counts(inter, total),
            hd95: hd95_nonempty(&lesion, &predicted, local),
        });
    }

    let fp = m.false_positives();
    let fn_ = m.false_negatives();
    let denom = gl.count() + fp;
    let (ldsc, lhd95) = if denom == 0 {
        (1.0, 0.0)
    } else {
        let matched = lesions.iter().filter(|l| !l.matched.is_empty());
        let (dsum, hsum) = matched.fold((0.0, 0.0), |(d, h), l| (d + l.dice, h + l.hd95));
        (dsum / denom as f64, (hsum + cfg.hd_penalty * (fn_ + fp) as f64) / denom as f64)
    };
    Ok(LesionwiseMetrics {
        ldsc,
        lhd95,
        false_positives: fp,
        false_negatives: fn_,
        num_gt: gl.count(),
        num_pred: pl.count(),
        lesions,
    })
}
