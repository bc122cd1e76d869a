//! Exact Euclidean distance transform, surface extraction and HD95.

use crate::error::Result;
use crate::scalar::Real;
use crate::stats::percentile_in_place;
use crate::volume::{BoundingBox, Mask, Volume};

use super::EvalConfig;

/// Squared-distance lower envelope along one line (Felzenszwalb–Huttenlocher),
/// skipping infinite samples. `weight` is the squared voxel spacing.
fn envelope_1d<T: Real>(f: &[T], weight: T, out: &mut [T], v: &mut [usize], z: &mut [T]) {
    let n = f.len();
    let inf = T::infinity();
    let Some(first) = f.iter().position(|x| x.is_finite()) else {
        out.iter_mut().for_each(|o| *o = inf);
        return;
    };
    let two = T::of(2.0);
    let mut k = 0usize;
    v[0] = first;
    z[0] = -inf;
    z[1] = inf;
    for q in first + 1..n {
        if !f[q].is_finite() {
            continue;
        }
        let qf = T::of(q as f64);
        let fq = f[q] + weight * qf * qf;
        let mut s;
        loop {
            let vk = T::of(v[k] as f64);
            s = (fq - (f[v[k]] + weight * vk * vk)) / (two * weight * (qf - vk));
            // z[0] is -inf, so this stops at k == 0.
            if s <= z[k] {
                k -= 1;
            } else {
                break;
            }
        }
        k += 1;
        v[k] = q;
        z[k] = s;
        z[k + 1] = inf;
    }
    k = 0;
    for (p, o) in out.iter_mut().enumerate() {
        let pf = T::of(p as f64);
        while z[k + 1] < pf {
            k += 1;
        }
        let d = pf - T::of(v[k] as f64);
        *o = weight * d * d + f[v[k]];
    }
}

/// Exact Euclidean distance (mm) from every voxel centre to the nearest
/// foreground voxel centre. Foreground maps to 0; an empty mask yields +∞.
pub fn edt<T: Real>(mask: &Mask, spacing: [f64; 3]) -> Volume<T> {
    let g = mask.geometry().clone();
    let shape = g.shape;
    let mut d: Vec<T> = mask.data().iter().map(|&b| if b { T::zero() } else { T::infinity() }).collect();

    let longest = *shape.iter().max().unwrap();
    let mut line = vec![T::zero(); longest];
    let mut out = vec![T::zero(); longest];
    let mut v = vec![0usize; longest];
    let mut z = vec![T::zero(); longest + 1];
    let strides = [shape[1] * shape[2], shape[2], 1];

    for axis in [2usize, 1, 0] {
        let n = shape[axis];
        let weight = T::of(spacing[axis] * spacing[axis]);
        let (oa, ob) = match axis {
            0 => (1, 2),
            1 => (0, 2),
            _ => (0, 1),
        };
        for a in 0..shape[oa] {
            for b in 0..shape[ob] {
                let base = a * strides[oa] + b * strides[ob];
                let step = strides[axis];
                for t in 0..n {
                    line[t] = d[base + t * step];
                }
                envelope_1d(&line[..n], weight, &mut out[..n], &mut v[..n], &mut z[..n + 1]);
                for t in 0..n {
                    d[base + t * step] = out[t];
                }
            }
        }
    }
    for x in d.iter_mut() {
        *x = x.sqrt();
    }
    Volume::from_vec(g, d).expect("edt keeps the mask geometry")
}

/// Foreground voxels with at least one 6-neighbour that is background or
/// outside the grid.
pub fn surface(mask: &Mask) -> Mask {
    let g = mask.geometry();
    let [n0, n1, n2] = g.shape;
    Volume::from_fn(g.clone(), |[i, j, k]| {
        if !mask.get([i, j, k]) {
            return false;
        }
        i == 0
            || j == 0
            || k == 0
            || i + 1 == n0
            || j + 1 == n1
            || k + 1 == n2
            || !mask.get([i - 1, j, k])
            || !mask.get([i + 1, j, k])
            || !mask.get([i, j - 1, k])
            || !mask.get([i, j + 1, k])
            || !mask.get([i, j, k - 1])
            || !mask.get([i, j, k + 1])
    })
}

/// Distances from every surface voxel of `from` to the surface of `to`.
fn directed_surface_distances(from_surface: &Mask, to_surface: &Mask, spacing: [f64; 3]) -> Vec<f64> {
    let dist = edt::<f64>(to_surface, spacing);
    from_surface.data().iter().zip(dist.data()).filter_map(|(&s, &d)| s.then_some(d)).collect()
}

/// Symmetric 95th-percentile surface distance of two non-empty masks,
/// evaluated on a crop that holds both (plus a one-voxel margin so the
/// surfaces are unchanged).
pub(crate) fn hd95_nonempty(a: &Mask, b: &Mask, bbox: BoundingBox) -> f64 {
    let spacing = a.geometry().spacing;
    let crop = bbox.expanded(1, a.shape());
    let sa = surface(&a.crop(&crop));
    let sb = surface(&b.crop(&crop));
    let mut dab = directed_surface_distances(&sa, &sb, spacing);
    let mut dba = directed_surface_distances(&sb, &sa, spacing);
    let pa = percentile_in_place(&mut dab, 95.0).expect("non-empty surface");
    let pb = percentile_in_place(&mut dba, 95.0).expect("non-empty surface");
    pa.max(pb)
}

/// 95th-percentile Hausdorff distance (mm) between the surfaces of `a` and `b`.
///
/// Both empty gives 0; exactly one empty gives `cfg.hd_penalty`.
pub fn hd95(a: &Mask, b: &Mask, cfg: &EvalConfig) -> Result<f64> {
    a.geometry().check_same_shape(b.geometry())?;
    match (a.bounding_box(), b.bounding_box()) {
        (None, None) => Ok(0.0),
        (None, Some(_)) | (Some(_), None) => Ok(cfg.hd_penalty),
        (Some(ba), Some(bb)) => Ok(hd95_nonempty(a, b, ba.union(&bb))),
    }
}
