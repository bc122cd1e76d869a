//! Toolkit for volumetric lesion segmentation pipelines on brain MRI.
//!
//! The crate covers the parts of a segmentation workflow that do not need a
//! neural network: NIfTI I/O, intensity preprocessing, label conversion,
//! connected components, cumulative and lesion-wise metrics, training-loss
//! values, ensemble fusion, postprocessing rules and a sliding-window /
//! test-time-augmentation harness around an abstract patch predictor.
//!
//! Numeric code is generic over [`Real`] (`f32` or `f64`); the aliases at the
//! crate root pick a concrete precision.
//!
//! ```
//! use lesionkit::{evaluate_patient, EvalConfig, Geometry, Label, LabelVolume};
//!
//! let g = Geometry::with_shape([16, 16, 16]).unwrap();
//! let gt = LabelVolume::from_fn(g, |[i, j, k]| {
//!     if (4..8).contains(&i) && (4..8).contains(&j) && (4..8).contains(&k) {
//!         Label::Et
//!     } else {
//!         Label::Background
//!     }
//! });
//! let report = evaluate_patient(&gt, &gt, &EvalConfig::default()).unwrap();
//! assert_eq!(report.et.ldsc, 1.0);
//! ```

pub mod components;
pub mod ensemble;
pub mod error;
pub mod inference;
pub mod losses;
pub mod metrics;
pub mod nifti;
pub mod postprocess;
pub mod preprocess;
pub mod scalar;
pub mod spatial;
pub mod stats;
pub mod volume;

#[cfg(any(test, feature = "oracles"))]
pub mod oracle;

pub use components::{connected_components, dilate, ComponentLabeling, Connectivity};
pub use ensemble::{
    max_ensemble, mean_ensemble, simple_ensemble, simple_ensemble_channels, SimpleConfig, SimpleFusion,
};
pub use error::{Error, Result};
pub use inference::{
    predict_patient, sliding_window_infer, tta_infer, window_origins, FlipAxis, Predictor, SlidingWindowConfig,
    TtaConfig,
};
pub use losses::{blob_loss, dice_ce_loss, final_loss, loss_terms, soft_dice_loss, LossConfig, LossTerms};
pub use metrics::{dice, edt, evaluate_patient, hd95, lesionwise_metrics, match_lesions, EvalConfig, MetricsReport};
pub use postprocess::{apply_rules, PostprocessRules};
pub use preprocess::{
    has_lesions, mask_large_lesions, merge_labels, percentile_rescale, subtraction_sequence, unmerge_labels,
    RescaleConfig,
};
pub use scalar::Real;
pub use spatial::{canonicalize_orientation, resample_isotropic};
pub use volume::{
    AxisDirection, BoundingBox, Channel, ChannelMask, Channels, Geometry, Image, Label, LabelCodes, LabelVolume, Mask,
    ProbabilityVolume, ScalarVolume, Volume,
};

pub type ScalarVolumeF32 = ScalarVolume<f32>;
pub type ScalarVolumeF64 = ScalarVolume<f64>;
pub type ProbabilityVolumeF32 = ProbabilityVolume<f32>;
pub type ProbabilityVolumeF64 = ProbabilityVolume<f64>;
pub type ImageF32 = Image<f32>;
pub type ImageF64 = Image<f64>;
