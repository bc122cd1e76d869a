//! Intensity rescaling, subtraction channel, label merging and small-lesion masking.

use serde::{Deserialize, Serialize};

use crate::components::{connected_components, Connectivity};
use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::stats::percentile_in_place;
use crate::volume::{ChannelMask, Label, LabelVolume, ScalarVolume, Volume};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RescaleConfig {
    pub lower_percentile: f64,
    pub upper_percentile: f64,
}

impl Default for RescaleConfig {
    fn default() -> Self {
        RescaleConfig { lower_percentile: 0.1, upper_percentile: 99.9 }
    }
}

impl RescaleConfig {
    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = (self.lower_percentile, self.upper_percentile);
        if !(0.0..100.0).contains(&lo) || !(hi > 0.0 && hi <= 100.0) || lo >= hi {
            return Err(Error::validation(format!(
                "percentiles must satisfy 0 <= lower < upper <= 100, got ({lo}, {hi})"
            )));
        }
        Ok(())
    }
}

/// Role of one input channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChannelRole {
    T1w,
    T1c,
    T2w,
    Flair,
    Subtraction,
}

impl ChannelRole {
    pub fn name(self) -> &'static str {
        match self {
            ChannelRole::T1w => "t1w",
            ChannelRole::T1c => "t1c",
            ChannelRole::T2w => "t2w",
            ChannelRole::Flair => "flair",
            ChannelRole::Subtraction => "subtraction",
        }
    }
}

/// Ordered channel roles fed to the predictor.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<ChannelRole>", into = "Vec<ChannelRole>")]
pub struct InputChannelSet(Vec<ChannelRole>);

impl InputChannelSet {
    pub fn new(roles: Vec<ChannelRole>) -> Result<Self> {
        if roles.is_empty() {
            return Err(Error::validation("channel set is empty"));
        }
        for (i, r) in roles.iter().enumerate() {
            if roles[..i].contains(r) {
                return Err(Error::validation(format!("channel role {} listed twice", r.name())));
            }
        }
        Ok(InputChannelSet(roles))
    }

    /// (t1w, t1c, t2w, flair).
    pub fn standard() -> Self {
        use ChannelRole::*;
        InputChannelSet(vec![T1w, T1c, T2w, Flair])
    }

    /// (t1w, t1c, subtraction, flair): t2w swapped for the subtraction channel.
    pub fn with_subtraction() -> Self {
        use ChannelRole::*;
        InputChannelSet(vec![T1w, T1c, Subtraction, Flair])
    }

    pub fn roles(&self) -> &[ChannelRole] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl Default for InputChannelSet {
    fn default() -> Self {
        Self::standard()
    }
}

impl TryFrom<Vec<ChannelRole>> for InputChannelSet {
    type Error = Error;

    fn try_from(v: Vec<ChannelRole>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<InputChannelSet> for Vec<ChannelRole> {
    fn from(s: InputChannelSet) -> Self {
        s.0
    }
}

/// Clamp-rescale intensities to [0, 1] between two percentiles of all voxels.
///
/// A degenerate range (upper == lower percentile value) yields all zeros and
/// logs a warning.
pub fn percentile_rescale<T: Real>(vol: &ScalarVolume<T>, cfg: &RescaleConfig) -> Result<ScalarVolume<T>> {
    cfg.validate()?;
    let (lo, hi) = rescale_bounds(vol, cfg)?;
    if !(hi > lo) {
        log::warn!("percentile rescale: degenerate intensity range [{lo}, {hi}], output set to zero");
        return Ok(vol.map(|_| T::zero()));
    }
    let range = hi - lo;
    Ok(vol.map(|&v| ((v - lo) / range).max(T::zero()).min(T::one())))
}

/// The (lower, upper) percentile values used by [`percentile_rescale`].
pub fn rescale_bounds<T: Real>(vol: &ScalarVolume<T>, cfg: &RescaleConfig) -> Result<(T, T)> {
    if vol.is_empty() {
        return Err(Error::validation("cannot rescale an empty volume"));
    }
    let mut scratch = vol.data().to_vec();
    let lo = percentile_in_place(&mut scratch, cfg.lower_percentile)?;
    let hi = percentile_in_place(&mut scratch, cfg.upper_percentile)?;
    Ok((lo, hi))
}

/// Per-voxel squared difference `(t1c - t1w)^2` of two rescaled channels.
pub fn subtraction_sequence<T: Real>(t1c: &ScalarVolume<T>, t1w: &ScalarVolume<T>) -> Result<ScalarVolume<T>> {
    t1c.zip_map(t1w, |a, b| (a - b) * (a - b))
}

/// Nested (WT, TC, ET) targets from a label map.
pub fn merge_labels(labels: &LabelVolume) -> ChannelMask {
    let wt = labels.foreground();
    let tc = labels.map(|&l| matches!(l, Label::Netc | Label::Et));
    let et = labels.label_mask(Label::Et);
    ChannelMask::new(wt, tc, et).expect("channels share the label geometry")
}

/// Inverse of [`merge_labels`]; non-nested voxels resolve by priority ET > TC > WT.
pub fn unmerge_labels(mask: &ChannelMask) -> LabelVolume {
    let [wt, tc, et] = mask.as_array();
    let data = wt
        .data()
        .iter()
        .zip(tc.data())
        .zip(et.data())
        .map(|((&w, &t), &e)| {
            if e {
                Label::Et
            } else if t {
                Label::Netc
            } else if w {
                Label::Snfh
            } else {
                Label::Background
            }
        })
        .collect();
    Volume::from_vec(mask.geometry().clone(), data).expect("same geometry")
}

/// Erase every lesion (WT component) larger than `tau` voxels.
pub fn mask_large_lesions(labels: &LabelVolume, tau: usize, conn: Connectivity) -> Result<LabelVolume> {
    if tau == 0 {
        return Err(Error::validation("tau must be >= 1"));
    }
    let lesions = connected_components(&labels.foreground(), conn);
    let large = lesions.select(|id| lesions.size(id) > tau);
    labels.zip_map(&large, |l, drop| if drop { Label::Background } else { l })
}

pub fn has_lesions(labels: &LabelVolume) -> bool {
    labels.data().iter().any(|l| l.is_foreground())
}
