//! Size-threshold cleanup of a final label map.
//!
//! Rules run once, in this order, each on the output of the previous one:
//!
//! 1. whole-tumour components (union of all labels) below `wt_min_voxels` are erased;
//! 2. NETC components below `netc_min_voxels` become ET;
//! 3. SNFH components below `snfh_min_voxels` are erased;
//! 4. ET components below `et_min_voxels` are erased.
//!
//! "Below" is strict: a component of exactly the threshold size survives.

use serde::{Deserialize, Serialize};

use crate::components::{connected_components, Connectivity};
use crate::volume::{Label, LabelVolume, Mask};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PostprocessRules {
    pub wt_min_voxels: usize,
    pub netc_min_voxels: usize,
    pub snfh_min_voxels: usize,
    pub et_min_voxels: usize,
    pub connectivity: Connectivity,
}

impl Default for PostprocessRules {
    fn default() -> Self {
        PostprocessRules {
            wt_min_voxels: 25,
            netc_min_voxels: 20,
            snfh_min_voxels: 20,
            et_min_voxels: 10,
            connectivity: Connectivity::TwentySix,
        }
    }
}

impl PostprocessRules {
    /// Rules that leave every input unchanged.
    pub fn identity() -> Self {
        PostprocessRules {
            wt_min_voxels: 0,
            netc_min_voxels: 0,
            snfh_min_voxels: 0,
            et_min_voxels: 0,
            ..Self::default()
        }
    }
}

/// Voxels of components of `mask` with fewer than `min` voxels.
fn small_components(mask: &Mask, min: usize, conn: Connectivity) -> Option<Mask> {
    if min == 0 {
        return None;
    }
    let labeling = connected_components(mask, conn);
    if labeling.sizes().iter().all(|&s| s >= min) {
        return None;
    }
    Some(labeling.select(|id| labeling.size(id) < min))
}

fn relabel(labels: &mut LabelVolume, region: &Mask, to: Label) {
    for (l, &hit) in labels.data_mut().iter_mut().zip(region.data()) {
        if hit {
            *l = to;
        }
    }
}

pub fn apply_rules(labels: &LabelVolume, rules: &PostprocessRules) -> LabelVolume {
    let conn = rules.connectivity;
    let mut out = labels.clone();

    if let Some(small) = small_components(&out.foreground(), rules.wt_min_voxels, conn) {
        relabel(&mut out, &small, Label::Background);
    }
    let steps = [
        (Label::Netc, rules.netc_min_voxels, Label::Et),
        (Label::Snfh, rules.snfh_min_voxels, Label::Background),
        (Label::Et, rules.et_min_voxels, Label::Background),
    ];
    for (label, min, to) in steps {
        if let Some(small) = small_components(&out.label_mask(label), min, conn) {
            relabel(&mut out, &small, to);
        }
    }
    out
}
