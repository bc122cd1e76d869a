//! Forward values of the soft Dice, DiceCE, blob and combined losses.
//!
//! All sums run in a fixed voxel order, so results are reproducible bit for bit.

use serde::{Deserialize, Serialize};

use crate::components::{connected_components, Connectivity};
use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::volume::{Channel, ChannelMask, Mask, ProbabilityVolume, ScalarVolume};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LossConfig {
    /// Added to numerator and denominator of the soft Dice ratio.
    pub smooth_epsilon: f64,
    /// Probabilities are clamped to `[eps, 1 - eps]` before taking logs.
    pub clamp_epsilon: f64,
    pub dice_weight: f64,
    pub ce_weight: f64,
    /// Weight of the global DiceCE term in the combined loss.
    pub global_weight: f64,
    /// Weight of the channel-averaged blob term in the combined loss.
    pub blob_weight: f64,
    /// Neighbourhood used to split targets into lesion instances.
    pub connectivity: Connectivity,
}

impl Default for LossConfig {
    fn default() -> Self {
        LossConfig {
            smooth_epsilon: 1e-5,
            clamp_epsilon: 1e-7,
            dice_weight: 1.0,
            ce_weight: 1.0,
            global_weight: 2.0,
            blob_weight: 1.0,
            connectivity: Connectivity::TwentySix,
        }
    }
}

impl LossConfig {
    pub fn validate(&self) -> Result<()> {
        let weights = [self.dice_weight, self.ce_weight, self.global_weight, self.blob_weight];
        if weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
            return Err(Error::validation(format!("loss weights must be >= 0, got {weights:?}")));
        }
        if !(self.smooth_epsilon > 0.0) || !(self.clamp_epsilon > 0.0 && self.clamp_epsilon < 0.5) {
            return Err(Error::validation(format!(
                "epsilons must be positive (clamp below 0.5), got smooth {} clamp {}",
                self.smooth_epsilon, self.clamp_epsilon
            )));
        }
        Ok(())
    }
}

fn check_pair<T: Real>(p: &ScalarVolume<T>, g: &Mask) -> Result<()> {
    p.geometry().check_same_shape(g.geometry())?;
    if let Some(idx) = p.data().iter().position(|&v| !(v >= T::zero() && v <= T::one())) {
        return Err(Error::validation(format!(
            "probability {} at voxel {:?} outside [0, 1]",
            p.data()[idx],
            p.geometry().coords(idx)
        )));
    }
    Ok(())
}

fn dice_ratio<T: Real>(intersection: T, sum_p: T, sum_g: T, eps: T) -> T {
    T::one() - (T::of(2.0) * intersection + eps) / (sum_p + sum_g + eps)
}

/// `1 - (2 Σ p·g + ε) / (Σ p + Σ g + ε)`.
pub fn soft_dice_loss<T: Real>(p: &ScalarVolume<T>, g: &Mask, cfg: &LossConfig) -> Result<T> {
    check_pair(p, g)?;
    let (mut inter, mut sp, mut sg) = (T::zero(), T::zero(), T::zero());
    for (&pv, &gv) in p.data().iter().zip(g.data()) {
        sp += pv;
        if gv {
            inter += pv;
            sg += T::one();
        }
    }
    Ok(dice_ratio(inter, sp, sg, T::of(cfg.smooth_epsilon)))
}

/// Mean binary cross-entropy with clamped probabilities.
pub fn binary_cross_entropy<T: Real>(p: &ScalarVolume<T>, g: &Mask, cfg: &LossConfig) -> Result<T> {
    check_pair(p, g)?;
    let eps = T::of(cfg.clamp_epsilon);
    let hi = T::one() - eps;
    let mut acc = T::zero();
    for (&pv, &gv) in p.data().iter().zip(g.data()) {
        let q = pv.max(eps).min(hi);
        acc += if gv { q.ln() } else { (T::one() - q).ln() };
    }
    Ok(-acc / T::of(p.len() as f64))
}

/// Channel mean of `dice_weight · soft Dice + ce_weight · BCE`.
pub fn dice_ce_loss<T: Real>(p: &ProbabilityVolume<T>, g: &ChannelMask, cfg: &LossConfig) -> Result<T> {
    cfg.validate()?;
    let mut acc = T::zero();
    for c in Channel::ALL {
        let (pc, gc) = (p.channel(c), g.channel(c));
        acc += T::of(cfg.dice_weight) * soft_dice_loss(pc, gc, cfg)?
            + T::of(cfg.ce_weight) * binary_cross_entropy(pc, gc, cfg)?;
    }
    Ok(acc / T::of(3.0))
}

/// Mean over lesion instances of the soft Dice loss evaluated with every
/// other lesion removed from the domain. An empty target scores 0.
pub fn blob_loss<T: Real>(p: &ScalarVolume<T>, g: &Mask, cfg: &LossConfig) -> Result<T> {
    check_pair(p, g)?;
    let lesions = connected_components(g, cfg.connectivity);
    let n = lesions.count();
    if n == 0 {
        return Ok(T::zero());
    }
    // Σp restricted to lesion i's domain = Σp over non-lesion voxels + Σp over lesion i.
    let mut outside = T::zero();
    let mut inside = vec![T::zero(); n];
    for (&pv, &id) in p.data().iter().zip(lesions.ids().data()) {
        if id == 0 {
            outside += pv;
        } else {
            inside[id as usize - 1] += pv;
        }
    }
    let eps = T::of(cfg.smooth_epsilon);
    let mut total = T::zero();
    for (i, &pi) in inside.iter().enumerate() {
        let size = T::of(lesions.sizes()[i] as f64);
        total += dice_ratio(pi, outside + pi, size, eps);
    }
    Ok(total / T::of(n as f64))
}

/// Individual terms of the combined loss.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossTerms<T> {
    pub dice_ce: T,
    /// Channel mean of [`blob_loss`].
    pub blob: T,
    /// `global_weight · dice_ce + blob_weight · blob`.
    pub total: T,
}

pub fn loss_terms<T: Real>(p: &ProbabilityVolume<T>, g: &ChannelMask, cfg: &LossConfig) -> Result<LossTerms<T>> {
    let dice_ce = dice_ce_loss(p, g, cfg)?;
    let mut blob = T::zero();
    for c in Channel::ALL {
        blob += blob_loss(p.channel(c), g.channel(c), cfg)?;
    }
    blob /= T::of(3.0);
    Ok(LossTerms { dice_ce, blob, total: T::of(cfg.global_weight) * dice_ce + T::of(cfg.blob_weight) * blob })
}

/// Combined loss: `2 · DiceCE + blob` under default weights.
pub fn final_loss<T: Real>(p: &ProbabilityVolume<T>, g: &ChannelMask, cfg: &LossConfig) -> Result<T> {
    Ok(loss_terms(p, g, cfg)?.total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::volume::{Geometry, Volume};

    fn g() -> Geometry {
        Geometry::with_shape([10, 10, 10]).unwrap()
    }

    fn block(lo: usize, hi: usize) -> Mask {
        Mask::from_fn(g(), |[i, j, k]| (lo..hi).contains(&i) && (lo..hi).contains(&j) && (lo..hi).contains(&k))
    }

    fn as_prob(m: &Mask) -> ScalarVolume<f64> {
        m.map(|&b| if b { 1.0 } else { 0.0 })
    }

    #[test]
    fn soft_dice_examples() {
        let cfg = LossConfig::default();
        let t = block(2, 5);
        assert_eq!(soft_dice_loss(&as_prob(&t), &t, &cfg).unwrap(), 0.0);

        let hundred = Mask::from_fn(g(), |[i, _, _]| i == 0);
        let zero = ScalarVolume::filled(g(), 0.0f64);
        let l = soft_dice_loss(&zero, &hundred, &cfg).unwrap();
        assert!((l - (1.0 - 1e-5 / (100.0 + 1e-5))).abs() < 1e-15);
        assert!(l > 0.9999998 && l < 1.0);

        let bad = ScalarVolume::filled(g(), 1.5f64);
        assert!(soft_dice_loss(&bad, &t, &cfg).is_err());
    }

    #[test]
    fn dice_ce_examples() {
        let cfg = LossConfig::default();
        let t = block(2, 5);
        let gm = ChannelMask::new(t.clone(), t.clone(), t.clone()).unwrap();
        let perfect = loss_terms(&gm.to_probability::<f64>(), &gm, &cfg).unwrap();
        let want = -(1.0f64 - 1e-7).ln();
        assert!((perfect.dice_ce - want).abs() < 1e-15);

        let half = ProbabilityVolume::filled(g(), 0.5f64);
        let empty = Mask::filled(g(), false);
        let bce = binary_cross_entropy(half.channel(Channel::Wt), &empty, &cfg).unwrap();
        assert!((bce - std::f64::consts::LN_2).abs() < 1e-12);
    }

    #[test]
    fn blob_examples() {
        let cfg = LossConfig::default();
        let t = block(2, 5);
        let p = as_prob(&t).map(|v| v * 0.7 + 0.1);
        assert!((blob_loss(&p, &t, &cfg).unwrap() - soft_dice_loss(&p, &t, &cfg).unwrap()).abs() < 1e-12);

        let two = Mask::from_fn(g(), |[i, j, k]| !(2..=7).contains(&i) && j < 2 && k < 2);
        assert!(blob_loss(&as_prob(&two), &two, &cfg).unwrap().abs() < 1e-12);

        let empty = Mask::filled(g(), false);
        assert_eq!(blob_loss(&ScalarVolume::filled(g(), 0.3f64), &empty, &cfg).unwrap(), 0.0);
    }

    #[test]
    fn empty_target_total_is_twice_dice_ce() {
        let cfg = LossConfig::default();
        let empty = Mask::filled(g(), false);
        let gm = ChannelMask::new(empty.clone(), empty.clone(), empty).unwrap();
        let p = ProbabilityVolume::filled(g(), 0.0f64);
        let t = loss_terms(&p, &gm, &cfg).unwrap();
        assert_eq!(t.blob, 0.0);
        assert_eq!(t.total, 2.0 * t.dice_ce);
    }

    #[test]
    fn f32_matches_f64() {
        let cfg = LossConfig::default();
        let t = block(3, 6);
        let p64: ScalarVolume<f64> = Volume::from_fn(g(), |[i, j, k]| ((i * 7 + j * 3 + k) % 10) as f64 / 10.0);
        let p32 = p64.map(|&v| v as f32);
        let a = soft_dice_loss(&p64, &t, &cfg).unwrap();
        let b = soft_dice_loss(&p32, &t, &cfg).unwrap();
        assert!((a - f64::from(b)).abs() < 1e-5);
    }
}
