//! Slow, direct reference implementations used to cross-check the fast
//! kernels in tests. Everything here favours obviousness over speed.

use std::collections::{BTreeSet, HashSet, VecDeque};

use crate::components::Connectivity;
use crate::ensemble::SimpleConfig;
use crate::postprocess::PostprocessRules;
use crate::volume::{Label, LabelVolume, Mask};

fn coords(shape: [usize; 3], idx: usize) -> [usize; 3] {
    [idx / (shape[1] * shape[2]), (idx / shape[2]) % shape[1], idx % shape[2]]
}

fn index(shape: [usize; 3], c: [usize; 3]) -> usize {
    (c[0] * shape[1] + c[1]) * shape[2] + c[2]
}

fn adjacent(a: [usize; 3], b: [usize; 3], conn: Connectivity) -> bool {
    let d: Vec<usize> = (0..3).map(|i| a[i].abs_diff(b[i])).collect();
    if d.iter().any(|&x| x > 1) {
        return false;
    }
    let moved = d.iter().sum::<usize>();
    match conn {
        Connectivity::Six => moved == 1,
        Connectivity::Eighteen => moved == 1 || moved == 2,
        Connectivity::TwentySix => moved >= 1,
    }
}

fn neighbours(shape: [usize; 3], c: [usize; 3], conn: Connectivity) -> Vec<[usize; 3]> {
    let mut out = Vec::new();
    for i in c[0].saturating_sub(1)..=(c[0] + 1).min(shape[0] - 1) {
        for j in c[1].saturating_sub(1)..=(c[1] + 1).min(shape[1] - 1) {
            for k in c[2].saturating_sub(1)..=(c[2] + 1).min(shape[2] - 1) {
                if adjacent(c, [i, j, k], conn) {
                    out.push([i, j, k]);
                }
            }
        }
    }
    out
}

/// Breadth-first flood fill. Components are sorted voxel-index lists,
/// ordered by their smallest index.
pub fn flood_fill_components(mask: &Mask, conn: Connectivity) -> Vec<Vec<usize>> {
    let shape = mask.shape();
    let data = mask.data();
    let mut seen = vec![false; data.len()];
    let mut out = Vec::new();
    for start in 0..data.len() {
        if !data[start] || seen[start] {
            continue;
        }
        let mut comp = Vec::new();
        let mut queue = VecDeque::from([start]);
        seen[start] = true;
        while let Some(v) = queue.pop_front() {
            comp.push(v);
            for n in neighbours(shape, coords(shape, v), conn) {
                let ni = index(shape, n);
                if data[ni] && !seen[ni] {
                    seen[ni] = true;
                    queue.push_back(ni);
                }
            }
        }
        comp.sort_unstable();
        out.push(comp);
    }
    out
}

fn physical_distance(a: [usize; 3], b: [usize; 3], spacing: [f64; 3]) -> f64 {
    (0..3)
        .map(|i| {
            let d = (a[i] as f64 - b[i] as f64) * spacing[i];
            d * d
        })
        .sum::<f64>()
        .sqrt()
}

/// Distance from every voxel to the nearest foreground voxel, by exhaustive search.
pub fn brute_edt(mask: &Mask, spacing: [f64; 3]) -> Vec<f64> {
    let shape = mask.shape();
    let fg: Vec<[usize; 3]> = (0..mask.len()).filter(|&i| mask.data()[i]).map(|i| coords(shape, i)).collect();
    (0..mask.len())
        .map(|i| {
            let c = coords(shape, i);
            fg.iter().map(|&f| physical_distance(c, f, spacing)).fold(f64::INFINITY, f64::min)
        })
        .collect()
}

/// Foreground voxels touching background or the grid border through a face.
pub fn brute_surface(mask: &Mask) -> Vec<[usize; 3]> {
    let shape = mask.shape();
    let mut out = Vec::new();
    for i in 0..mask.len() {
        if !mask.data()[i] {
            continue;
        }
        let c = coords(shape, i);
        let on_border = (0..3).any(|a| c[a] == 0 || c[a] == shape[a] - 1);
        let faces = neighbours(shape, c, Connectivity::Six);
        if on_border || faces.iter().any(|&n| !mask.get(n)) {
            out.push(c);
        }
    }
    out
}

/// Linear-interpolation percentile of unsorted values.
pub fn percentile(values: &[f64], p: f64) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let rank = p / 100.0 * (v.len() - 1) as f64;
    let lo = rank.floor() as usize;
    let hi = rank.ceil() as usize;
    let w = rank - lo as f64;
    v[lo] * (1.0 - w) + v[hi] * w
}

/// Symmetric HD95 from all pairwise surface distances.
pub fn brute_hd95(a: &Mask, b: &Mask, penalty: f64) -> f64 {
    let spacing = a.geometry().spacing;
    let sa = brute_surface(a);
    let sb = brute_surface(b);
    match (sa.is_empty(), sb.is_empty()) {
        (true, true) => return 0.0,
        (true, false) | (false, true) => return penalty,
        _ => {}
    }
    let directed = |from: &[[usize; 3]], to: &[[usize; 3]]| -> f64 {
        let d: Vec<f64> = from
            .iter()
            .map(|&f| to.iter().map(|&t| physical_distance(f, t, spacing)).fold(f64::INFINITY, f64::min))
            .collect();
        percentile(&d, 95.0)
    };
    directed(&sa, &sb).max(directed(&sb, &sa))
}

fn voxel_set(mask: &Mask) -> HashSet<usize> {
    (0..mask.len()).filter(|&i| mask.data()[i]).collect()
}

/// `2|A ∩ B| / (|A| + |B|)` on index sets; 1 when both are empty.
pub fn set_dice(a: &Mask, b: &Mask) -> f64 {
    let sa = voxel_set(a);
    let sb = voxel_set(b);
    if sa.is_empty() && sb.is_empty() {
        return 1.0;
    }
    2.0 * sa.intersection(&sb).count() as f64 / (sa.len() + sb.len()) as f64
}

/// Voxels within `radius` graph steps of `seeds` under `conn`.
pub fn bfs_dilate(shape: [usize; 3], seeds: &[usize], radius: usize, conn: Connectivity) -> HashSet<usize> {
    let mut depth: std::collections::HashMap<usize, usize> = seeds.iter().map(|&s| (s, 0)).collect();
    let mut queue: VecDeque<usize> = seeds.iter().copied().collect();
    while let Some(v) = queue.pop_front() {
        let d = depth[&v];
        if d == radius {
            continue;
        }
        for n in neighbours(shape, coords(shape, v), conn) {
            let ni = index(shape, n);
            if let std::collections::hash_map::Entry::Vacant(e) = depth.entry(ni) {
                e.insert(d + 1);
                queue.push_back(ni);
            }
        }
    }
    depth.into_keys().collect()
}

/// Lesion-wise result: `(ldsc, lhd95, false_positives, false_negatives)`.
pub fn lesionwise(gt: &Mask, pred: &Mask, radius: usize, conn: Connectivity, penalty: f64) -> (f64, f64, usize, usize) {
    let shape = gt.shape();
    let gl = flood_fill_components(gt, conn);
    let pl = flood_fill_components(pred, conn);
    let mut pred_hit = vec![false; pl.len()];
    let mut dice_sum = 0.0;
    let mut hd_sum = 0.0;
    let mut fn_ = 0;
    for lesion in &gl {
        let grown = bfs_dilate(shape, lesion, radius, conn);
        let hits: Vec<usize> = (0..pl.len()).filter(|&p| pl[p].iter().any(|v| grown.contains(v))).collect();
        if hits.is_empty() {
            fn_ += 1;
            continue;
        }
        let mut lm = Mask::filled(gt.geometry().clone(), false);
        for &v in lesion {
            lm.data_mut()[v] = true;
        }
        let mut pm = Mask::filled(gt.geometry().clone(), false);
        for &p in &hits {
            pred_hit[p] = true;
            for &v in &pl[p] {
                pm.data_mut()[v] = true;
            }
        }
        dice_sum += set_dice(&lm, &pm);
        hd_sum += brute_hd95(&lm, &pm, penalty);
    }
    let fp = pred_hit.iter().filter(|&&h| !h).count();
    let denom = gl.len() + fp;
    if denom == 0 {
        return (1.0, 0.0, 0, 0);
    }
    let ldsc = dice_sum / denom as f64;
    let lhd = (hd_sum + penalty * (fp + fn_) as f64) / denom as f64;
    (ldsc, lhd, fp, fn_)
}

/// The four cleanup rules, each re-deriving components from scratch.
pub fn postprocess(labels: &LabelVolume, rules: &PostprocessRules) -> LabelVolume {
    let conn = rules.connectivity;
    let mut out = labels.clone();
    let mut rule = |select: &dyn Fn(Label) -> bool, min: usize, to: Label| {
        let m = out.map(|&l| select(l));
        for comp in flood_fill_components(&m, conn) {
            if comp.len() < min {
                for v in comp {
                    out.data_mut()[v] = to;
                }
            }
        }
    };
    rule(&|l| l != Label::Background, rules.wt_min_voxels, Label::Background);
    rule(&|l| l == Label::Netc, rules.netc_min_voxels, Label::Et);
    rule(&|l| l == Label::Snfh, rules.snfh_min_voxels, Label::Background);
    rule(&|l| l == Label::Et, rules.et_min_voxels, Label::Background);
    out
}

/// Plain re-statement of SIMPLE fusion. Returns the fused mask and the
/// surviving candidate indices.
pub fn simple(inputs: &[Mask], cfg: &SimpleConfig) -> (Mask, BTreeSet<usize>) {
    let geometry = inputs[0].geometry().clone();
    let len = inputs[0].len();
    let vote = |alive: &BTreeSet<usize>, w: &dyn Fn(usize) -> f64, thr: f64| -> Mask {
        let total: f64 = alive.iter().map(|&i| w(i)).sum();
        let mut m = Mask::filled(geometry.clone(), false);
        for v in 0..len {
            let yes: f64 = alive.iter().filter(|&&i| inputs[i].data()[v]).map(|&i| w(i)).sum();
            m.data_mut()[v] = yes >= thr * total;
        }
        m
    };
    let mut alive: BTreeSet<usize> = (0..inputs.len()).collect();
    let mut fused = vote(&alive, &|_| 1.0, 0.5);
    for _ in 0..cfg.max_iterations {
        let score: Vec<(usize, f64)> = alive.iter().map(|&i| (i, set_dice(&inputs[i], &fused))).collect();
        let n = score.len() as f64;
        let mean = score.iter().map(|s| s.1).sum::<f64>() / n;
        let var = score.iter().map(|s| (s.1 - mean).powi(2)).sum::<f64>() / n;
        let cut = mean - cfg.drop_k * var.sqrt();
        let kept: Vec<(usize, f64)> = score.into_iter().filter(|s| s.1 >= cut).collect();
        alive = kept.iter().map(|s| s.0).collect();
        let weight = |i: usize| kept.iter().find(|s| s.0 == i).map_or(0.0, |s| s.1);
        let total: f64 = kept.iter().map(|s| s.1).sum();
        let next = if total > 0.0 { vote(&alive, &weight, cfg.vote_threshold) } else { vote(&alive, &|_| 1.0, 0.5) };
        if next == fused {
            break;
        }
        fused = next;
    }
    (fused, alive)
}

/// Window starts along one axis: all stride multiples that fit, then the
/// flush-right start if it is not already there.
pub fn window_grid(n: usize, patch: usize, overlap: f64) -> Vec<usize> {
    let stride = ((patch as f64 * (1.0 - overlap)) as usize).max(1);
    let last = n - patch;
    let mut out: Vec<usize> = (0..=last).filter(|o| o % stride == 0).collect();
    if !out.contains(&last) {
        out.push(last);
    }
    out
}

/// How many windows of the 3D grid cover each voxel.
pub fn coverage_counts(shape: [usize; 3], patch: [usize; 3], overlap: f64) -> Vec<u32> {
    let grids: Vec<Vec<usize>> = (0..3).map(|a| window_grid(shape[a], patch[a], overlap)).collect();
    let mut counts = vec![0u32; shape.iter().product()];
    for &i in &grids[0] {
        for &j in &grids[1] {
            for &k in &grids[2] {
                for a in i..i + patch[0] {
                    for b in j..j + patch[1] {
                        for c in k..k + patch[2] {
                            counts[index(shape, [a, b, c])] += 1;
                        }
                    }
                }
            }
        }
    }
    counts
}
