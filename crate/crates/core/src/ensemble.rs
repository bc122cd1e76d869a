//! Fusion of several candidate segmentations.
//!
//! * mean fusion: average probabilities, then threshold;
//! * SIMPLE: iterative performance-weighted majority voting that discards
//!   candidates scoring far below the others;
//! * voxel-wise maximum of two probability volumes.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::dice;
use crate::scalar::Real;
use crate::stats;
use crate::volume::{Channel, ChannelMask, Channels, Mask, ProbabilityVolume, Volume};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimpleConfig {
    pub max_iterations: usize,
    /// Candidates scoring below `mean - drop_k · std` are discarded.
    pub drop_k: f64,
    /// Foreground where the weighted vote reaches this fraction of the total weight.
    pub vote_threshold: f64,
    /// Threshold used to binarize probability inputs.
    pub binarize_threshold: f64,
}

impl Default for SimpleConfig {
    fn default() -> Self {
        SimpleConfig { max_iterations: 10, drop_k: 1.0, vote_threshold: 0.5, binarize_threshold: 0.5 }
    }
}

impl SimpleConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iterations == 0 {
            return Err(Error::validation("max_iterations must be >= 1"));
        }
        if !(self.drop_k > 0.0) {
            return Err(Error::validation(format!("drop_k must be > 0, got {}", self.drop_k)));
        }
        if !(self.vote_threshold > 0.0 && self.vote_threshold < 1.0) {
            return Err(Error::validation(format!("vote_threshold must lie in (0, 1), got {}", self.vote_threshold)));
        }
        Ok(())
    }
}

fn check_inputs(shapes: impl Iterator<Item = [usize; 3]>) -> Result<()> {
    let mut first = None;
    for s in shapes {
        match first {
            None => first = Some(s),
            Some(f) if f != s => return Err(Error::GeometryMismatch { left: f, right: s }),
            _ => {}
        }
    }
    if first.is_none() {
        return Err(Error::validation("ensemble needs at least one input"));
    }
    Ok(())
}

/// Per-voxel mean of the inputs, thresholded with `>= threshold`.
pub fn mean_ensemble<T: Real>(inputs: &[ProbabilityVolume<T>], threshold: T) -> Result<ChannelMask> {
    check_inputs(inputs.iter().map(|p| p.shape()))?;
    let n = T::of(inputs.len() as f64);
    Channels::try_from_fn(|c| {
        let len = inputs[0].channel(c).len();
        let mut sum = vec![T::zero(); len];
        for p in inputs {
            for (s, &v) in sum.iter_mut().zip(p.channel(c).data()) {
                *s += v;
            }
        }
        let data = sum.into_iter().map(|s| s / n >= threshold).collect();
        Volume::from_vec(inputs[0].geometry().clone(), data)
    })
}

/// Result of a SIMPLE run on one channel.
#[derive(Debug, Clone, PartialEq)]
pub struct SimpleFusion {
    pub mask: Mask,
    /// Re-fusion steps performed after the initial majority vote.
    pub iterations: usize,
    pub converged: bool,
    /// Indices of candidates still voting at the end, ascending.
    pub survivors: Vec<usize>,
    /// Final Dice weight of each survivor.
    pub weights: Vec<f64>,
}

fn majority(inputs: &[&Mask], members: &[usize]) -> Vec<bool> {
    let n = members.len();
    let len = inputs[0].len();
    let mut votes = vec![0usize; len];
    for &m in members {
        for (v, &b) in votes.iter_mut().zip(inputs[m].data()) {
            *v += usize::from(b);
        }
    }
    // Exact ties count as foreground.
    votes.into_iter().map(|v| 2 * v >= n).collect()
}

fn weighted_vote(inputs: &[&Mask], members: &[usize], weights: &[f64], threshold: f64) -> Vec<bool> {
    let total: f64 = weights.iter().sum();
    if !(total > 0.0) {
        return majority(inputs, members);
    }
    let mut acc = vec![0.0f64; inputs[0].len()];
    for (&m, &w) in members.iter().zip(weights) {
        for (a, &b) in acc.iter_mut().zip(inputs[m].data()) {
            if b {
                *a += w;
            }
        }
    }
    acc.into_iter().map(|a| a >= threshold * total).collect()
}

/// SIMPLE label fusion of binary candidates.
///
/// Starts from an unweighted majority vote. Each iteration scores surviving
/// candidates by Dice against the current fusion, discards those below
/// `mean - drop_k · std` (never the last one), and re-fuses by a
/// Dice-weighted vote. Stops when the fusion no longer changes or after
/// `max_iterations` re-fusions.
pub fn simple_ensemble(inputs: &[Mask], cfg: &SimpleConfig) -> Result<SimpleFusion> {
    cfg.validate()?;
    check_inputs(inputs.iter().map(|m| m.shape()))?;
    let refs: Vec<&Mask> = inputs.iter().collect();
    let geometry = inputs[0].geometry().clone();

    let mut survivors: Vec<usize> = (0..inputs.len()).collect();
    let mut fused = Volume::from_vec(geometry.clone(), majority(&refs, &survivors))?;
    let mut weights = vec![1.0; survivors.len()];
    let mut iterations = 0;
    let mut converged = false;

    while iterations < cfg.max_iterations {
        iterations += 1;
        let scores: Vec<f64> = survivors.iter().map(|&s| dice(&inputs[s], &fused)).collect::<Result<_>>()?;
        let cutoff = stats::mean(&scores) - cfg.drop_k * stats::std_dev(&scores);
        let keep: Vec<bool> = scores.iter().map(|&s| !(s < cutoff)).collect();
        if keep.iter().any(|&k| k) {
            let mut next_s = Vec::new();
            let mut next_w = Vec::new();
            for ((&s, &w), &k) in survivors.iter().zip(&scores).zip(&keep) {
                if k {
                    next_s.push(s);
                    next_w.push(w);
                }
            }
            survivors = next_s;
            weights = next_w;
        } else {
            // Unreachable for finite scores; keep the best candidate regardless.
            let best = scores.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).map(|(i, _)| i).unwrap_or(0);
            survivors = vec![survivors[best]];
            weights = vec![scores[best]];
        }

        let next = Volume::from_vec(geometry.clone(), weighted_vote(&refs, &survivors, &weights, cfg.vote_threshold))?;
        if next == fused {
            converged = true;
            break;
        }
        fused = next;
    }

    Ok(SimpleFusion { mask: fused, iterations, converged, survivors, weights })
}

/// SIMPLE applied independently to each of the WT / TC / ET channels.
pub fn simple_ensemble_channels(inputs: &[ChannelMask], cfg: &SimpleConfig) -> Result<ChannelMask> {
    check_inputs(inputs.iter().map(|m| m.shape()))?;
    Channels::try_from_fn(|c: Channel| {
        let per: Vec<Mask> = inputs.iter().map(|m| m.channel(c).clone()).collect();
        Ok(simple_ensemble(&per, cfg)?.mask)
    })
}

/// Voxel-wise maximum of two probability volumes.
pub fn max_ensemble<T: Real>(a: &ProbabilityVolume<T>, b: &ProbabilityVolume<T>) -> Result<ProbabilityVolume<T>> {
    Channels::try_from_fn(|c| a.channel(c).zip_map(b.channel(c), |x, y| x.max(y)))
}
