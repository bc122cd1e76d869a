//! Cumulative and lesion-wise segmentation metrics.
//!
//! Lesion-wise scores follow the lesion-matching convention of the BraTS
//! 2023 evaluation: ground-truth lesions are dilated before matching, and
//! unmatched lesions on either side are charged a zero Dice and a fixed
//! HD95 penalty. All parameters live in [`EvalConfig`].

mod distance;
mod lesion;
mod report;

use serde::{Deserialize, Serialize};

use crate::components::Connectivity;
use crate::error::{Error, Result};
use crate::volume::Mask;

pub use distance::{edt, hd95, surface};
pub use lesion::{lesionwise_metrics, match_lesions, LesionScore, LesionwiseMetrics, MatchResult};
pub use report::{evaluate_patient, LabelMetrics, MeanMetrics, MetricsReport};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvalConfig {
    /// Unit-dilation steps applied to each ground-truth lesion before matching.
    pub dilation_radius: usize,
    pub connectivity: Connectivity,
    /// HD95 charged for an empty-vs-nonempty comparison and for every
    /// unmatched lesion (mm).
    pub hd_penalty: f64,
    /// Leave channels where both masks are empty out of the cross-label mean
    /// instead of scoring them as perfect.
    pub skip_empty_channels: bool,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            dilation_radius: 3,
            connectivity: Connectivity::TwentySix,
            hd_penalty: 373.13,
            skip_empty_channels: false,
        }
    }
}

impl EvalConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.hd_penalty > 0.0) || !self.hd_penalty.is_finite() {
            return Err(Error::validation(format!("hd_penalty must be > 0, got {}", self.hd_penalty)));
        }
        Ok(())
    }
}

/// Dice similarity `2|a∩b| / (|a|+|b|)`; two empty masks score 1.
pub fn dice(a: &Mask, b: &Mask) -> Result<f64> {
    a.geometry().check_same_shape(b.geometry())?;
    let (mut inter, mut total) = (0usize, 0usize);
    for (&x, &y) in a.data().iter().zip(b.data()) {
        inter += usize::from(x && y);
        total += usize::from(x) + usize::from(y);
    }
    Ok(dice_from_counts(inter, total))
}

pub(crate) fn dice_from_counts(intersection: usize, total: usize) -> f64 {
    if total == 0 {
        1.0
    } else {
        2.0 * intersection as f64 / total as f64
    }
}
