//! Orientation canonicalization and isotropic resampling.

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::volume::{Geometry, LabelVolume, ScalarVolume, Volume, CANONICAL_ORIENTATION};

/// Permute and flip voxel axes so the volume runs L→R, P→A, I→S.
///
/// Voxel world positions are preserved: the origin moves to whichever voxel
/// becomes index (0, 0, 0). Idempotent.
pub fn canonicalize_orientation<V: Copy>(vol: &Volume<V>) -> Result<Volume<V>> {
    let g = vol.geometry();
    let mut source = [usize::MAX; 3];
    for (i, d) in g.orientation.iter().enumerate() {
        let a = d.world_axis();
        if source[a] != usize::MAX {
            return Err(Error::validation(format!(
                "degenerate orientation {}{}{}: two voxel axes share world axis {a}",
                g.orientation[0].code(),
                g.orientation[1].code(),
                g.orientation[2].code()
            )));
        }
        source[a] = i;
    }
    if g.is_canonical() {
        return Ok(vol.clone());
    }

    let flip = source.map(|s| !g.orientation[s].is_positive());
    let shape = source.map(|s| g.shape[s]);
    let spacing = source.map(|s| g.spacing[s]);

    // Input coordinates of the new first voxel, and its world position.
    let mut first = [0usize; 3];
    for a in 0..3 {
        if flip[a] {
            first[source[a]] = g.shape[source[a]] - 1;
        }
    }
    let mut origin = g.origin;
    for (i, d) in g.orientation.iter().enumerate() {
        let sign = if d.is_positive() { 1.0 } else { -1.0 };
        origin[d.world_axis()] += sign * g.spacing[i] * first[i] as f64;
    }

    let out_geometry = Geometry { shape, spacing, orientation: CANONICAL_ORIENTATION, origin };
    Ok(Volume::from_fn(out_geometry, |o| {
        let mut c = [0usize; 3];
        for a in 0..3 {
            c[source[a]] = if flip[a] { shape[a] - 1 - o[a] } else { o[a] };
        }
        vol.get(c)
    }))
}

fn check_target(target: f64) -> Result<()> {
    if !(target > 0.0) || !target.is_finite() {
        return Err(Error::validation(format!("target spacing must be > 0, got {target}")));
    }
    Ok(())
}

/// Output shape `ceil(shape * spacing / target)`, with a small tolerance so
/// exact multiples are not bumped up by rounding noise.
pub fn resampled_shape(g: &Geometry, target: f64) -> [usize; 3] {
    [0, 1, 2].map(|a| {
        let extent = g.shape[a] as f64 * g.spacing[a] / target;
        ((extent - 1e-9).ceil() as usize).max(1)
    })
}

fn resampled_geometry(g: &Geometry, target: f64) -> Geometry {
    Geometry { shape: resampled_shape(g, target), spacing: [target; 3], ..g.clone() }
}

fn is_at_spacing(g: &Geometry, target: f64) -> bool {
    g.spacing.iter().all(|&s| s == target)
}

/// Trilinear resampling to `target` mm isotropic. Samples outside the
/// input grid clamp to the nearest edge voxel.
pub fn resample_isotropic<T: Real>(vol: &ScalarVolume<T>, target: f64) -> Result<ScalarVolume<T>> {
    check_target(target)?;
    let g = vol.geometry();
    if is_at_spacing(g, target) {
        return Ok(vol.clone());
    }
    let scale = g.spacing.map(|s| target / s);
    let out_geometry = resampled_geometry(g, target);

    // Per-axis (lower index, upper index, upper weight) lookup tables.
    let tables: Vec<Vec<(usize, usize, T)>> = (0..3)
        .map(|a| {
            let n = g.shape[a];
            (0..out_geometry.shape[a])
                .map(|o| {
                    let x = (o as f64 * scale[a]).clamp(0.0, (n - 1) as f64);
                    let lo = x.floor() as usize;
                    let hi = (lo + 1).min(n - 1);
                    (lo, hi, T::of(x - lo as f64))
                })
                .collect()
        })
        .collect();

    Ok(Volume::from_fn(out_geometry, |[o0, o1, o2]| {
        let (i0, i1, wi) = tables[0][o0];
        let (j0, j1, wj) = tables[1][o1];
        let (k0, k1, wk) = tables[2][o2];
        let lerp = |a: T, b: T, w: T| a + (b - a) * w;
        let plane = |i| {
            let c0 = lerp(vol.get([i, j0, k0]), vol.get([i, j0, k1]), wk);
            let c1 = lerp(vol.get([i, j1, k0]), vol.get([i, j1, k1]), wk);
            lerp(c0, c1, wj)
        };
        lerp(plane(i0), plane(i1), wi)
    }))
}

/// Nearest-neighbour resampling of a label map to `target` mm isotropic.
pub fn resample_labels_isotropic(vol: &LabelVolume, target: f64) -> Result<LabelVolume> {
    check_target(target)?;
    let g = vol.geometry();
    if is_at_spacing(g, target) {
        return Ok(vol.clone());
    }
    let scale = g.spacing.map(|s| target / s);
    let out_geometry = resampled_geometry(g, target);
    let tables: Vec<Vec<usize>> = (0..3)
        .map(|a| {
            (0..out_geometry.shape[a]).map(|o| ((o as f64 * scale[a]).round() as usize).min(g.shape[a] - 1)).collect()
        })
        .collect();
    Ok(Volume::from_fn(out_geometry, |[o0, o1, o2]| vol.get([tables[0][o0], tables[1][o1], tables[2][o2]])))
}
