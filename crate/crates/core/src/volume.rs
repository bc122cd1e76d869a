//! Volume containers and voxel-grid geometry.
//!
//! Voxel data is stored row-major over axis order (0, 1, 2): axis 2 is the
//! fastest-varying index, so voxel `(i, j, k)` lives at
//! `(i * shape[1] + j) * shape[2] + k`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Anatomical direction in which a voxel axis increases.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AxisDirection {
    LeftToRight,
    RightToLeft,
    PosteriorToAnterior,
    AnteriorToPosterior,
    InferiorToSuperior,
    SuperiorToInferior,
}

impl AxisDirection {
    /// World axis this direction runs along: 0 = left/right, 1 = posterior/anterior,
    /// 2 = inferior/superior.
    pub fn world_axis(self) -> usize {
        use AxisDirection::*;
        match self {
            LeftToRight | RightToLeft => 0,
            PosteriorToAnterior | AnteriorToPosterior => 1,
            InferiorToSuperior | SuperiorToInferior => 2,
        }
    }

    /// True when the direction matches the RAS+ world axis sense.
    pub fn is_positive(self) -> bool {
        use AxisDirection::*;
        matches!(self, LeftToRight | PosteriorToAnterior | InferiorToSuperior)
    }

    pub fn from_world(axis: usize, positive: bool) -> Self {
        use AxisDirection::*;
        match (axis, positive) {
            (0, true) => LeftToRight,
            (0, false) => RightToLeft,
            (1, true) => PosteriorToAnterior,
            (1, false) => AnteriorToPosterior,
            (2, true) => InferiorToSuperior,
            _ => SuperiorToInferior,
        }
    }

    pub fn reversed(self) -> Self {
        Self::from_world(self.world_axis(), !self.is_positive())
    }

    /// Two-letter code such as `"LR"` (from left, towards right).
    pub fn code(self) -> &'static str {
        use AxisDirection::*;
        match self {
            LeftToRight => "LR",
            RightToLeft => "RL",
            PosteriorToAnterior => "PA",
            AnteriorToPosterior => "AP",
            InferiorToSuperior => "IS",
            SuperiorToInferior => "SI",
        }
    }
}

pub const CANONICAL_ORIENTATION: [AxisDirection; 3] =
    [AxisDirection::LeftToRight, AxisDirection::PosteriorToAnterior, AxisDirection::InferiorToSuperior];

/// Shape, spacing, orientation and origin of a voxel grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Geometry {
    pub shape: [usize; 3],
    /// Millimetres per voxel along each axis.
    pub spacing: [f64; 3],
    pub orientation: [AxisDirection; 3],
    /// World position (mm, RAS+) of the centre of voxel (0, 0, 0).
    pub origin: [f64; 3],
}

impl Geometry {
    pub fn new(shape: [usize; 3], spacing: [f64; 3]) -> Result<Self> {
        let geometry = Geometry { shape, spacing, orientation: CANONICAL_ORIENTATION, origin: [0.0; 3] };
        geometry.validate()?;
        Ok(geometry)
    }

    /// Unit-spacing canonical geometry.
    pub fn with_shape(shape: [usize; 3]) -> Result<Self> {
        Self::new(shape, [1.0; 3])
    }

    pub fn validate(&self) -> Result<()> {
        if self.shape.contains(&0) {
            return Err(Error::validation(format!("shape entries must be >= 1, got {:?}", self.shape)));
        }
        if self.spacing.iter().any(|&s| !(s > 0.0) || !s.is_finite()) {
            return Err(Error::validation(format!("spacing entries must be finite and > 0, got {:?}", self.spacing)));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_canonical(&self) -> bool {
        self.orientation == CANONICAL_ORIENTATION
    }

    #[inline]
    pub fn index(&self, [i, j, k]: [usize; 3]) -> usize {
        (i * self.shape[1] + j) * self.shape[2] + k
    }

    #[inline]
    pub fn coords(&self, idx: usize) -> [usize; 3] {
        let k = idx % self.shape[2];
        let rest = idx / self.shape[2];
        [rest / self.shape[1], rest % self.shape[1], k]
    }

    /// Same grid with a different shape; used for crops and patches.
    pub(crate) fn reshaped(&self, shape: [usize; 3]) -> Geometry {
        Geometry { shape, ..self.clone() }
    }

    pub(crate) fn check_same_shape(&self, other: &Geometry) -> Result<()> {
        if self.shape != other.shape {
            return Err(Error::GeometryMismatch { left: self.shape, right: other.shape });
        }
        Ok(())
    }
}

/// Axis-aligned voxel box, inclusive lower and exclusive upper corner.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub min: [usize; 3],
    pub max: [usize; 3],
}

impl BoundingBox {
    pub fn of_voxel(c: [usize; 3]) -> Self {
        BoundingBox { min: c, max: [c[0] + 1, c[1] + 1, c[2] + 1] }
    }

    pub fn include(&mut self, c: [usize; 3]) {
        for a in 0..3 {
            self.min[a] = self.min[a].min(c[a]);
            self.max[a] = self.max[a].max(c[a] + 1);
        }
    }

    pub fn union(&self, other: &BoundingBox) -> BoundingBox {
        let mut out = *self;
        for a in 0..3 {
            out.min[a] = out.min[a].min(other.min[a]);
            out.max[a] = out.max[a].max(other.max[a]);
        }
        out
    }

    /// Grow by `margin` voxels on every side, clipped to `shape`.
    pub fn expanded(&self, margin: usize, shape: [usize; 3]) -> BoundingBox {
        let mut out = *self;
        for a in 0..3 {
            out.min[a] = out.min[a].saturating_sub(margin);
            out.max[a] = (out.max[a] + margin).min(shape[a]);
        }
        out
    }

    pub fn shape(&self) -> [usize; 3] {
        [self.max[0] - self.min[0], self.max[1] - self.min[1], self.max[2] - self.min[2]]
    }
}

/// A dense 3D grid of voxel values sharing one geometry.
#[derive(Debug, Clone, PartialEq)]
pub struct Volume<V> {
    geometry: Geometry,
    data: Vec<V>,
}

impl<V: Copy> Volume<V> {
    pub fn from_vec(geometry: Geometry, data: Vec<V>) -> Result<Self> {
        geometry.validate()?;
        if data.len() != geometry.len() {
            return Err(Error::validation(format!(
                "data length {} does not match shape {:?} ({} voxels)",
                data.len(),
                geometry.shape,
                geometry.len()
            )));
        }
        Ok(Volume { geometry, data })
    }

    pub fn filled(geometry: Geometry, value: V) -> Self {
        let n = geometry.len();
        Volume { geometry, data: vec![value; n] }
    }

    pub fn from_fn(geometry: Geometry, mut f: impl FnMut([usize; 3]) -> V) -> Self {
        let data = (0..geometry.len()).map(|i| f(geometry.coords(i))).collect();
        Volume { geometry, data }
    }

    pub fn geometry(&self) -> &Geometry {
        &self.geometry
    }

    pub fn shape(&self) -> [usize; 3] {
        self.geometry.shape
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[V] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [V] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<V> {
        self.data
    }

    #[inline]
    pub fn get(&self, c: [usize; 3]) -> V {
        self.data[self.geometry.index(c)]
    }

    #[inline]
    pub fn set(&mut self, c: [usize; 3], v: V) {
        let idx = self.geometry.index(c);
        self.data[idx] = v;
    }

    pub fn map<W: Copy>(&self, f: impl FnMut(&V) -> W) -> Volume<W> {
        Volume { geometry: self.geometry.clone(), data: self.data.iter().map(f).collect() }
    }

    pub fn zip_map<U: Copy, W: Copy>(&self, other: &Volume<U>, mut f: impl FnMut(V, U) -> W) -> Result<Volume<W>> {
        self.geometry.check_same_shape(&other.geometry)?;
        Ok(Volume {
            geometry: self.geometry.clone(),
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect(),
        })
    }

    pub fn with_geometry(mut self, geometry: Geometry) -> Result<Self> {
        if geometry.len() != self.data.len() {
            return Err(Error::validation("geometry does not match data length"));
        }
        self.geometry = geometry;
        Ok(self)
    }

    /// Copy out the sub-grid covered by `bbox`.
    pub fn crop(&self, bbox: &BoundingBox) -> Volume<V> {
        let shape = bbox.shape();
        let geometry = self.geometry.reshaped(shape);
        let mut data = Vec::with_capacity(geometry.len());
        for i in bbox.min[0]..bbox.max[0] {
            for j in bbox.min[1]..bbox.max[1] {
                let start = self.geometry.index([i, j, bbox.min[2]]);
                data.extend_from_slice(&self.data[start..start + shape[2]]);
            }
        }
        Volume { geometry, data }
    }

    /// Reverse voxel order along `axis` without touching orientation metadata.
    pub fn flip_axis(&self, axis: usize) -> Volume<V> {
        let n = self.geometry.shape[axis];
        Volume::from_fn(self.geometry.clone(), |mut c| {
            c[axis] = n - 1 - c[axis];
            self.get(c)
        })
    }
}

impl<V: Copy> Volume<V>
where
    V: PartialEq,
{
    pub fn count(&self, value: V) -> usize {
        self.data.iter().filter(|&&v| v == value).count()
    }
}

/// Binary voxel mask.
pub type Mask = Volume<bool>;

impl Mask {
    pub fn popcount(&self) -> usize {
        self.data.iter().filter(|&&b| b).count()
    }

    pub fn any(&self) -> bool {
        self.data.iter().any(|&b| b)
    }

    /// Tight box around the foreground, `None` for an empty mask.
    pub fn bounding_box(&self) -> Option<BoundingBox> {
        let mut bbox: Option<BoundingBox> = None;
        for (idx, _) in self.data.iter().enumerate().filter(|(_, &b)| b) {
            let c = self.geometry.coords(idx);
            match bbox.as_mut() {
                Some(b) => b.include(c),
                None => bbox = Some(BoundingBox::of_voxel(c)),
            }
        }
        bbox
    }
}

/// Real-valued single-channel volume, e.g. one MRI sequence.
pub type ScalarVolume<T> = Volume<T>;

impl<T: Real> ScalarVolume<T> {
    /// `value >= threshold` per voxel.
    pub fn threshold(&self, threshold: T) -> Mask {
        self.map(|&v| v >= threshold)
    }
}

/// Tissue class of a voxel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
#[repr(u8)]
pub enum Label {
    #[default]
    Background = 0,
    /// Non-enhancing tumour core.
    Netc = 1,
    /// Surrounding non-enhancing FLAIR hyperintensity.
    Snfh = 2,
    /// Enhancing tumour.
    Et = 3,
}

impl Label {
    pub const ALL: [Label; 4] = [Label::Background, Label::Netc, Label::Snfh, Label::Et];

    pub fn is_foreground(self) -> bool {
        self != Label::Background
    }
}

pub type LabelVolume = Volume<Label>;

impl LabelVolume {
    pub fn foreground(&self) -> Mask {
        self.map(|l| l.is_foreground())
    }

    pub fn label_mask(&self, label: Label) -> Mask {
        self.map(|&l| l == label)
    }

    /// Voxel count per label, indexed by the label's discriminant.
    pub fn histogram(&self) -> [usize; 4] {
        let mut h = [0usize; 4];
        for &l in &self.data {
            h[l as usize] += 1;
        }
        h
    }
}

/// On-disk integer codes for each label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LabelCodes {
    pub background: u8,
    pub netc: u8,
    pub snfh: u8,
    pub et: u8,
}

impl Default for LabelCodes {
    fn default() -> Self {
        LabelCodes { background: 0, netc: 1, snfh: 2, et: 3 }
    }
}

impl LabelCodes {
    pub fn validate(&self) -> Result<()> {
        let codes = [self.background, self.netc, self.snfh, self.et];
        for a in 0..4 {
            for b in a + 1..4 {
                if codes[a] == codes[b] {
                    return Err(Error::validation(format!("label codes must be distinct, got {codes:?}")));
                }
            }
        }
        Ok(())
    }

    pub fn encode(&self, label: Label) -> u8 {
        match label {
            Label::Background => self.background,
            Label::Netc => self.netc,
            Label::Snfh => self.snfh,
            Label::Et => self.et,
        }
    }

    pub fn decode(&self, code: i64) -> Option<Label> {
        Label::ALL.into_iter().find(|&l| i64::from(self.encode(l)) == code)
    }
}

/// Index of each channel in the three-channel network representation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Channel {
    /// Whole tumour: NETC ∪ SNFH ∪ ET.
    Wt = 0,
    /// Tumour core: NETC ∪ ET.
    Tc = 1,
    Et = 2,
}

impl Channel {
    pub const ALL: [Channel; 3] = [Channel::Wt, Channel::Tc, Channel::Et];

    pub fn name(self) -> &'static str {
        match self {
            Channel::Wt => "wt",
            Channel::Tc => "tc",
            Channel::Et => "et",
        }
    }
}

/// Three co-registered volumes ordered (WT, TC, ET).
#[derive(Debug, Clone, PartialEq)]
pub struct Channels<V> {
    channels: [Volume<V>; 3],
}

impl<V: Copy> Channels<V> {
    pub fn new(wt: Volume<V>, tc: Volume<V>, et: Volume<V>) -> Result<Self> {
        wt.geometry().check_same_shape(tc.geometry())?;
        wt.geometry().check_same_shape(et.geometry())?;
        Ok(Channels { channels: [wt, tc, et] })
    }

    pub fn filled(geometry: Geometry, value: V) -> Self {
        Channels {
            channels: [
                Volume::filled(geometry.clone(), value),
                Volume::filled(geometry.clone(), value),
                Volume::filled(geometry, value),
            ],
        }
    }

    pub fn geometry(&self) -> &Geometry {
        self.channels[0].geometry()
    }

    pub fn shape(&self) -> [usize; 3] {
        self.geometry().shape
    }

    pub fn channel(&self, c: Channel) -> &Volume<V> {
        &self.channels[c as usize]
    }

    pub fn channel_mut(&mut self, c: Channel) -> &mut Volume<V> {
        &mut self.channels[c as usize]
    }

    pub fn as_array(&self) -> &[Volume<V>; 3] {
        &self.channels
    }

    pub fn into_array(self) -> [Volume<V>; 3] {
        self.channels
    }

    pub fn iter(&self) -> impl Iterator<Item = (Channel, &Volume<V>)> {
        Channel::ALL.into_iter().zip(self.channels.iter())
    }

    pub fn map<W: Copy>(&self, mut f: impl FnMut(&V) -> W) -> Channels<W> {
        Channels {
            channels: [self.channels[0].map(&mut f), self.channels[1].map(&mut f), self.channels[2].map(&mut f)],
        }
    }

    pub fn try_from_fn(mut f: impl FnMut(Channel) -> Result<Volume<V>>) -> Result<Self> {
        let [a, b, c] = Channel::ALL;
        Self::new(f(a)?, f(b)?, f(c)?)
    }
}

/// Binary (WT, TC, ET) channels.
pub type ChannelMask = Channels<bool>;

/// Real-valued (WT, TC, ET) channels with values in [0, 1].
pub type ProbabilityVolume<T> = Channels<T>;

impl<T: Real> ProbabilityVolume<T> {
    /// Rejects any value outside [0, 1] (NaN included).
    pub fn validate_range(&self) -> Result<()> {
        for (c, vol) in self.iter() {
            if let Some(v) = vol.data().iter().find(|&&v| !(v >= T::zero() && v <= T::one())) {
                return Err(Error::validation(format!("probability channel {} holds {v} outside [0, 1]", c.name())));
            }
        }
        Ok(())
    }

    pub fn binarize(&self, threshold: T) -> ChannelMask {
        self.map(|&v| v >= threshold)
    }
}

impl ChannelMask {
    pub fn to_probability<T: Real>(&self) -> ProbabilityVolume<T> {
        self.map(|&b| if b { T::one() } else { T::zero() })
    }
}

/// Multi-channel scalar image (one volume per MRI sequence).
#[derive(Debug, Clone, PartialEq)]
pub struct Image<T> {
    channels: Vec<ScalarVolume<T>>,
}

impl<T: Real> Image<T> {
    pub fn new(channels: Vec<ScalarVolume<T>>) -> Result<Self> {
        let first = channels.first().ok_or_else(|| Error::validation("image needs at least one channel"))?;
        for c in &channels[1..] {
            first.geometry().check_same_shape(c.geometry())?;
        }
        Ok(Image { channels })
    }

    pub fn geometry(&self) -> &Geometry {
        self.channels[0].geometry()
    }

    pub fn shape(&self) -> [usize; 3] {
        self.geometry().shape
    }

    pub fn num_channels(&self) -> usize {
        self.channels.len()
    }

    pub fn channels(&self) -> &[ScalarVolume<T>] {
        &self.channels
    }

    pub fn channel(&self, i: usize) -> &ScalarVolume<T> {
        &self.channels[i]
    }

    pub fn map_channels(&self, f: impl FnMut(&ScalarVolume<T>) -> ScalarVolume<T>) -> Image<T> {
        Image { channels: self.channels.iter().map(f).collect() }
    }
}
