//! Sliding-window inference and test-time augmentation around an abstract
//! patch predictor.
//!
//! No network runs here. A [`Predictor`] is anything that maps an image patch
//! to a WT / TC / ET probability patch of the same spatial shape; a few toy
//! predictors are provided for testing and for the command-line pipeline.

use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nifti;
use crate::postprocess::{apply_rules, PostprocessRules};
use crate::preprocess::unmerge_labels;
use crate::scalar::Real;
use crate::volume::{
    BoundingBox, Channel, Channels, Image, Label, LabelVolume, ProbabilityVolume, ScalarVolume, Volume,
};

pub trait Predictor<T: Real>: Sync {
    /// Number of image channels expected in every patch.
    fn input_channels(&self) -> usize;

    /// Predict WT / TC / ET probabilities for one patch.
    fn predict(&self, patch: &Image<T>) -> Result<ProbabilityVolume<T>>;

    /// Whether `predict` may be called from several threads at once.
    fn is_concurrent(&self) -> bool {
        true
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SlidingWindowConfig {
    pub patch_size: [usize; 3],
    /// Fraction of a patch shared by neighbouring windows, in `[0, 1)`.
    pub overlap: f64,
}

impl Default for SlidingWindowConfig {
    fn default() -> Self {
        SlidingWindowConfig { patch_size: [192, 192, 32], overlap: 0.75 }
    }
}

impl SlidingWindowConfig {
    pub fn validate(&self) -> Result<()> {
        if self.patch_size.contains(&0) {
            return Err(Error::validation(format!("patch_size must be positive, got {:?}", self.patch_size)));
        }
        if !(self.overlap >= 0.0 && self.overlap < 1.0) {
            return Err(Error::validation(format!("overlap must lie in [0, 1), got {}", self.overlap)));
        }
        Ok(())
    }

    pub fn strides(&self) -> [usize; 3] {
        self.patch_size.map(|p| ((p as f64 * (1.0 - self.overlap)).floor() as usize).max(1))
    }
}

/// Window start positions along one axis of length `n >= patch`: every
/// multiple of `stride` whose window fits, plus a final window flush with the end.
pub fn window_origins(n: usize, patch: usize, stride: usize) -> Vec<usize> {
    assert!(patch >= 1 && patch <= n && stride >= 1);
    let mut out: Vec<usize> = (0..).map(|k| k * stride).take_while(|&o| o + patch <= n).collect();
    if out.last() != Some(&(n - patch)) {
        out.push(n - patch);
    }
    out
}

/// Number of windows covering each position along one axis.
fn coverage(n: usize, patch: usize, origins: &[usize]) -> Vec<u32> {
    let mut c = vec![0u32; n];
    for &o in origins {
        for v in &mut c[o..o + patch] {
            *v += 1;
        }
    }
    c
}

fn pad_image<T: Real>(image: &Image<T>, padded: [usize; 3], before: [usize; 3]) -> Result<Image<T>> {
    let g = image.geometry().reshaped(padded);
    let shape = image.shape();
    let channels = image
        .channels()
        .iter()
        .map(|ch| {
            Volume::from_fn(g.clone(), |[i, j, k]| {
                let src = [i.wrapping_sub(before[0]), j.wrapping_sub(before[1]), k.wrapping_sub(before[2])];
                if src[0] < shape[0] && src[1] < shape[1] && src[2] < shape[2] {
                    ch.get(src)
                } else {
                    T::zero()
                }
            })
        })
        .collect();
    Image::new(channels)
}

fn check_output<T: Real>(out: &ProbabilityVolume<T>, shape: [usize; 3]) -> Result<()> {
    if out.shape() != shape {
        return Err(Error::Contract(format!("predicted patch has shape {:?}, expected {:?}", out.shape(), shape)));
    }
    out.validate_range().map_err(|e| Error::Contract(e.to_string()))
}

/// Uniformly blended sliding-window prediction over the whole image.
///
/// Images smaller than the patch along an axis are zero-padded symmetrically
/// and the padding is cropped from the result. Accumulation runs in `f64` in
/// window order, so the output does not depend on the thread count and
/// overlapping identical `f32` predictions average back to the same bits.
pub fn sliding_window_infer<T: Real, P: Predictor<T> + ?Sized>(
    image: &Image<T>,
    predictor: &P,
    cfg: &SlidingWindowConfig,
) -> Result<ProbabilityVolume<T>> {
    cfg.validate()?;
    if image.num_channels() != predictor.input_channels() {
        return Err(Error::validation(format!(
            "image has {} channels, predictor expects {}",
            image.num_channels(),
            predictor.input_channels()
        )));
    }
    let shape = image.shape();
    let patch = cfg.patch_size;
    let padded: [usize; 3] = std::array::from_fn(|a| shape[a].max(patch[a]));
    let before: [usize; 3] = std::array::from_fn(|a| (padded[a] - shape[a]) / 2);
    let padded_image;
    let work = if padded == shape {
        image
    } else {
        padded_image = pad_image(image, padded, before)?;
        &padded_image
    };

    let strides = cfg.strides();
    let origins: [Vec<usize>; 3] = std::array::from_fn(|a| window_origins(padded[a], patch[a], strides[a]));
    let mut windows = Vec::with_capacity(origins.iter().map(Vec::len).product());
    for &i in &origins[0] {
        for &j in &origins[1] {
            for &k in &origins[2] {
                windows.push(BoundingBox { min: [i, j, k], max: [i + patch[0], j + patch[1], k + patch[2]] });
            }
        }
    }

    let run = |b: &BoundingBox| -> Result<ProbabilityVolume<T>> {
        let crop = Image::new(work.channels().iter().map(|c| c.crop(b)).collect())?;
        let out = predictor.predict(&crop)?;
        check_output(&out, patch)?;
        Ok(out)
    };

    let geometry = work.geometry().clone();
    let mut acc = vec![vec![0.0f64; geometry.len()]; 3];
    let mut add = |b: &BoundingBox, out: &ProbabilityVolume<T>| {
        for (c, pv) in out.as_array().iter().enumerate() {
            let mut src = pv.data().iter();
            for i in b.min[0]..b.max[0] {
                for j in b.min[1]..b.max[1] {
                    let start = geometry.index([i, j, b.min[2]]);
                    for (a, &v) in acc[c][start..start + patch[2]].iter_mut().zip(&mut src) {
                        *a += v.as_f64();
                    }
                }
            }
        }
    };

    if predictor.is_concurrent() {
        let chunk = rayon::current_num_threads().max(1);
        for group in windows.chunks(chunk) {
            let outs: Vec<Result<ProbabilityVolume<T>>> = group.par_iter().map(run).collect();
            for (b, out) in group.iter().zip(outs) {
                add(b, &out?);
            }
        }
    } else {
        for b in &windows {
            add(b, &run(b)?);
        }
    }
    log::debug!("sliding window: {} windows over {:?}", windows.len(), padded);

    let cov: [Vec<u32>; 3] = std::array::from_fn(|a| coverage(padded[a], patch[a], &origins[a]));
    let channels = Channels::try_from_fn(|c| {
        let sums = &acc[c as usize];
        let full = Volume::from_fn(geometry.clone(), |[i, j, k]| {
            let n = f64::from(cov[0][i] * cov[1][j] * cov[2][k]);
            T::of(sums[geometry.index([i, j, k])] / n)
        });
        if padded == shape {
            full.with_geometry(image.geometry().clone())
        } else {
            let keep = BoundingBox { min: before, max: std::array::from_fn(|a| before[a] + shape[a]) };
            full.crop(&keep).with_geometry(image.geometry().clone())
        }
    })?;
    Ok(channels)
}

/// Anatomical plane to mirror across during test-time augmentation.
///
/// On canonically oriented volumes the sagittal flip reverses voxel axis 0
/// (left-right) and the coronal flip reverses axis 1 (posterior-anterior).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FlipAxis {
    Sagittal,
    Coronal,
}

impl FlipAxis {
    pub fn axis(self) -> usize {
        match self {
            FlipAxis::Sagittal => 0,
            FlipAxis::Coronal => 1,
        }
    }

    fn letter(self) -> char {
        match self {
            FlipAxis::Sagittal => 's',
            FlipAxis::Coronal => 'c',
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TtaConfig {
    pub flip_axes: Vec<FlipAxis>,
    /// Standard deviation of additive Gaussian input noise. Zero disables noise.
    pub noise_sigma: f64,
    pub seed: u64,
}

impl Default for TtaConfig {
    fn default() -> Self {
        TtaConfig { flip_axes: vec![FlipAxis::Sagittal, FlipAxis::Coronal], noise_sigma: 0.0, seed: 0 }
    }
}

impl TtaConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return Err(Error::validation(format!("noise_sigma must be >= 0, got {}", self.noise_sigma)));
        }
        let mut axes = self.flip_axes.clone();
        axes.sort();
        axes.dedup();
        if axes.len() != self.flip_axes.len() {
            return Err(Error::validation("flip_axes contains duplicates"));
        }
        Ok(())
    }

    /// Every subset of `flip_axes`, the empty one first.
    pub fn combinations(&self) -> Vec<Vec<FlipAxis>> {
        let k = self.flip_axes.len();
        (0..1usize << k)
            .map(|bits| (0..k).filter(|b| bits >> b & 1 == 1).map(|b| self.flip_axes[b]).collect())
            .collect()
    }
}

/// File-name code of one flip combination: `id` for none, otherwise the
/// letters `s` (sagittal) and `c` (coronal) in that order.
pub fn flip_code(flips: &[FlipAxis]) -> String {
    let mut sorted = flips.to_vec();
    sorted.sort();
    if sorted.is_empty() {
        "id".to_string()
    } else {
        sorted.into_iter().map(FlipAxis::letter).collect()
    }
}

fn flip_all<V: Copy>(vol: &Volume<V>, flips: &[FlipAxis]) -> Volume<V> {
    flips.iter().fold(vol.clone(), |v, f| v.flip_axis(f.axis()))
}

fn mean_of<T: Real>(sum: Vec<Vec<f64>>, n: usize, like: &ProbabilityVolume<T>) -> Result<ProbabilityVolume<T>> {
    let n = n as f64;
    Channels::try_from_fn(|c| {
        let data = sum[c as usize].iter().map(|&s| T::of(s / n)).collect();
        Volume::from_vec(like.geometry().clone(), data)
    })
}

fn accumulate<T: Real>(sum: &mut [Vec<f64>], p: &ProbabilityVolume<T>) {
    for (s, ch) in sum.iter_mut().zip(p.as_array()) {
        for (a, &v) in s.iter_mut().zip(ch.data()) {
            *a += v.as_f64();
        }
    }
}

/// Mean of sliding-window predictions over all flip combinations, each with
/// optional seeded Gaussian noise added to the flipped input.
pub fn tta_infer<T: Real, P: Predictor<T> + ?Sized>(
    image: &Image<T>,
    predictor: &P,
    cfg: &TtaConfig,
    swcfg: &SlidingWindowConfig,
) -> Result<ProbabilityVolume<T>> {
    cfg.validate()?;
    let combos = cfg.combinations();
    let mut sum: Option<Vec<Vec<f64>>> = None;
    let mut last = None;
    for (n, flips) in combos.iter().enumerate() {
        let mut input = image.map_channels(|c| flip_all(c, flips));
        if cfg.noise_sigma > 0.0 {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(n as u64);
            let normal = Normal::new(0.0, cfg.noise_sigma).map_err(|e| Error::validation(e.to_string()))?;
            input = input.map_channels(|c| c.map(|&v| v + T::of(normal.sample(&mut rng))));
        }
        let pred = sliding_window_infer(&input, predictor, swcfg)?;
        let pred = Channels::new(
            flip_all(pred.channel(Channel::Wt), flips),
            flip_all(pred.channel(Channel::Tc), flips),
            flip_all(pred.channel(Channel::Et), flips),
        )?;
        let s = sum.get_or_insert_with(|| vec![vec![0.0; pred.channel(Channel::Wt).len()]; 3]);
        accumulate(s, &pred);
        last = Some(pred);
    }
    let like = last.expect("at least the identity combination");
    mean_of(sum.expect("at least one combination"), combos.len(), &like)
}

/// Fuse externally produced predictions stored as `<case>_<flipcode>.nii.gz`
/// in `dir`, one per flip combination of `cfg` (see [`flip_code`]).
///
/// Each file holds the 4D WT / TC / ET prediction made on the flipped input;
/// it is flipped back before averaging.
pub fn tta_fuse_files<T: Real>(dir: impl AsRef<Path>, case: &str, cfg: &TtaConfig) -> Result<ProbabilityVolume<T>> {
    cfg.validate()?;
    let combos = cfg.combinations();
    let mut sum: Option<Vec<Vec<f64>>> = None;
    let mut first: Option<ProbabilityVolume<T>> = None;
    for flips in &combos {
        let path = dir.as_ref().join(format!("{case}_{}.nii.gz", flip_code(flips)));
        let p: ProbabilityVolume<T> = nifti::load_probability(&path)?;
        if let Some(f) = &first {
            f.geometry().check_same_shape(p.geometry())?;
        }
        let p = Channels::new(
            flip_all(p.channel(Channel::Wt), flips),
            flip_all(p.channel(Channel::Tc), flips),
            flip_all(p.channel(Channel::Et), flips),
        )?;
        let s = sum.get_or_insert_with(|| vec![vec![0.0; p.channel(Channel::Wt).len()]; 3]);
        accumulate(s, &p);
        first.get_or_insert(p);
    }
    let like = first.expect("at least the identity combination");
    mean_of(sum.expect("at least one combination"), combos.len(), &like)
}

/// Full prediction for one patient: inference (optionally with TTA),
/// binarization at 0.5, conversion to labels and optional cleanup rules.
pub fn predict_patient<T: Real, P: Predictor<T> + ?Sized>(
    image: &Image<T>,
    predictor: &P,
    swcfg: &SlidingWindowConfig,
    tta: Option<&TtaConfig>,
    rules: Option<&PostprocessRules>,
) -> Result<LabelVolume> {
    let probs = match tta {
        Some(t) => tta_infer(image, predictor, t, swcfg)?,
        None => sliding_window_infer(image, predictor, swcfg)?,
    };
    let labels = unmerge_labels(&probs.binarize(T::of(0.5)));
    Ok(match rules {
        Some(r) => apply_rules(&labels, r),
        None => labels,
    })
}

/// Outputs the same probability everywhere.
#[derive(Debug, Clone, Copy)]
pub struct ConstantPredictor<T> {
    pub value: T,
    pub channels: usize,
}

impl<T: Real> Predictor<T> for ConstantPredictor<T> {
    fn input_channels(&self) -> usize {
        self.channels
    }

    fn predict(&self, patch: &Image<T>) -> Result<ProbabilityVolume<T>> {
        Ok(Channels::filled(patch.geometry().clone(), self.value))
    }
}

/// Echoes image channel 0 into all three output channels.
#[derive(Debug, Clone, Copy)]
pub struct IdentityPredictor {
    pub channels: usize,
}

impl<T: Real> Predictor<T> for IdentityPredictor {
    fn input_channels(&self) -> usize {
        self.channels
    }

    fn predict(&self, patch: &Image<T>) -> Result<ProbabilityVolume<T>> {
        let c = patch.channel(0);
        Channels::new(c.clone(), c.clone(), c.clone())
    }
}

/// Hard WT / TC / ET thresholds applied to one image channel.
#[derive(Debug, Clone, Copy)]
pub struct ThresholdPredictor<T> {
    pub channels: usize,
    pub source: usize,
    pub thresholds: [T; 3],
}

impl<T: Real> ThresholdPredictor<T> {
    pub fn new(channels: usize, source: usize) -> Result<Self> {
        if source >= channels {
            return Err(Error::validation(format!("source channel {source} out of {channels}")));
        }
        Ok(ThresholdPredictor { channels, source, thresholds: [T::of(0.25), T::of(0.5), T::of(0.75)] })
    }
}

impl<T: Real> Predictor<T> for ThresholdPredictor<T> {
    fn input_channels(&self) -> usize {
        self.channels
    }

    fn predict(&self, patch: &Image<T>) -> Result<ProbabilityVolume<T>> {
        let src = patch.channel(self.source);
        Channels::try_from_fn(|c| {
            let t = self.thresholds[c as usize];
            Ok(src.map(|&v| if v >= t { T::one() } else { T::zero() }))
        })
    }
}

/// Recovers labels encoded as intensities by [`PhantomOracle::encode`].
///
/// The decoding looks only at the voxel value, so the oracle is insensitive
/// to window position, padding and flips.
#[derive(Debug, Clone, Copy)]
pub struct PhantomOracle {
    pub channels: usize,
}

impl PhantomOracle {
    /// Intensity of each label: background 0, NETC 1/3, SNFH 2/3, ET 1.
    pub fn encode<T: Real>(labels: &LabelVolume) -> ScalarVolume<T> {
        labels.map(|&l| T::of(l as u8 as f64 / 3.0))
    }

    fn decode<T: Real>(v: T) -> Label {
        let code = (v.as_f64() * 3.0).round().clamp(0.0, 3.0) as usize;
        Label::ALL[code]
    }
}

impl<T: Real> Predictor<T> for PhantomOracle {
    fn input_channels(&self) -> usize {
        self.channels
    }

    fn predict(&self, patch: &Image<T>) -> Result<ProbabilityVolume<T>> {
        let labels = patch.channel(0).map(|&v| Self::decode(v));
        let one = |b: bool| if b { T::one() } else { T::zero() };
        Channels::new(
            labels.map(|&l| one(l.is_foreground())),
            labels.map(|&l| one(matches!(l, Label::Netc | Label::Et))),
            labels.map(|&l| one(l == Label::Et)),
        )
    }
}
