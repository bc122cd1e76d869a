use lesionkit::metrics::surface;
use lesionkit::oracle;
use lesionkit::{
    dice, edt, evaluate_patient, hd95, lesionwise_metrics, match_lesions, Channel, Connectivity, EvalConfig, Geometry,
    Label, LabelVolume, Mask,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn blank(shape: [usize; 3]) -> Mask {
    Mask::filled(Geometry::with_shape(shape).unwrap(), false)
}

fn cube(m: &mut Mask, lo: [usize; 3], side: usize) {
    for i in lo[0]..lo[0] + side {
        for j in lo[1]..lo[1] + side {
            for k in lo[2]..lo[2] + side {
                m.set([i, j, k], true);
            }
        }
    }
}

/// A few random boxes, so masks look like lesions rather than noise.
fn blobby(rng: &mut ChaCha8Rng, g: &Geometry, boxes: usize) -> Mask {
    let mut m = Mask::filled(g.clone(), false);
    let s = g.shape;
    for _ in 0..boxes {
        let lo: [usize; 3] = std::array::from_fn(|a| rng.random_range(0..s[a]));
        let hi: [usize; 3] = std::array::from_fn(|a| (lo[a] + rng.random_range(1..4)).min(s[a]));
        for i in lo[0]..hi[0] {
            for j in lo[1]..hi[1] {
                for k in lo[2]..hi[2] {
                    m.set([i, j, k], true);
                }
            }
        }
    }
    m
}

#[test]
fn dice_examples() {
    let mut a = blank([6, 6, 6]);
    cube(&mut a, [0, 0, 0], 2);
    assert_eq!(dice(&a, &a).unwrap(), 1.0);
    let mut far = blank([6, 6, 6]);
    cube(&mut far, [4, 4, 4], 2);
    assert_eq!(dice(&a, &far).unwrap(), 0.0);
    let mut half = blank([6, 6, 6]);
    cube(&mut half, [1, 0, 0], 2);
    assert_eq!(dice(&a, &half).unwrap(), 0.5);
    assert_eq!(dice(&blank([2, 2, 2]), &blank([2, 2, 2])).unwrap(), 1.0);
    assert!(dice(&a, &blank([6, 6, 5])).is_err());
}

#[test]
fn edt_matches_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(200);
    for n in 0..30 {
        let shape: [usize; 3] = std::array::from_fn(|_| rng.random_range(1..=12));
        let spacing: [f64; 3] = std::array::from_fn(|_| rng.random_range(0.5..2.5));
        let g = Geometry::new(shape, spacing).unwrap();
        let m = Mask::from_fn(g, |_| rng.random_bool(0.05));
        let fast = edt::<f64>(&m, spacing);
        let slow = oracle::brute_edt(&m, spacing);
        for (i, (&a, &b)) in fast.data().iter().zip(&slow).enumerate() {
            if b.is_infinite() {
                assert!(a.is_infinite());
            } else {
                assert!((a - b).abs() < 1e-6, "case {n} voxel {i}: {a} vs {b}");
            }
            assert_eq!(a == 0.0, m.data()[i]);
        }
    }
}

#[test]
fn surface_examples_and_oracle() {
    let mut one = blank([3, 3, 3]);
    one.set([1, 1, 1], true);
    assert_eq!(surface(&one), one);
    let full = Mask::filled(Geometry::with_shape([3, 3, 3]).unwrap(), true);
    assert_eq!(surface(&full).popcount(), 26);

    let mut rng = ChaCha8Rng::seed_from_u64(201);
    for _ in 0..20 {
        let m = Mask::from_fn(Geometry::with_shape([8, 9, 7]).unwrap(), |_| rng.random_bool(0.6));
        let s = surface(&m);
        let want = oracle::brute_surface(&m);
        assert_eq!(s.popcount(), want.len());
        assert!(want.iter().all(|&c| s.get(c)));
    }
}

#[test]
fn hd95_examples() {
    let cfg = EvalConfig::default();
    let mut a = blank([10, 10, 10]);
    cube(&mut a, [2, 2, 2], 3);
    assert_eq!(hd95(&a, &a, &cfg).unwrap(), 0.0);
    assert_eq!(hd95(&blank([10, 10, 10]), &a, &cfg).unwrap(), 373.13);
    assert_eq!(hd95(&blank([10, 10, 10]), &blank([10, 10, 10]), &cfg).unwrap(), 0.0);
    let mut p = blank([10, 10, 10]);
    p.set([1, 1, 1], true);
    let mut q = blank([10, 10, 10]);
    q.set([8, 1, 1], true);
    assert_eq!(hd95(&p, &q, &cfg).unwrap(), 7.0);
}

#[test]
fn hd95_matches_brute_force_and_is_symmetric() {
    let cfg = EvalConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    for n in 0..40 {
        let shape: [usize; 3] = std::array::from_fn(|_| rng.random_range(2..=12));
        let spacing: [f64; 3] = std::array::from_fn(|_| rng.random_range(0.5..2.0));
        let g = Geometry::new(shape, spacing).unwrap();
        let a = blobby(&mut rng, &g, 3);
        let b = blobby(&mut rng, &g, 3);
        let fast = hd95(&a, &b, &cfg).unwrap();
        let slow = oracle::brute_hd95(&a, &b, cfg.hd_penalty);
        assert!((fast - slow).abs() < 1e-6, "case {n}: {fast} vs {slow}");
        assert_eq!(fast, hd95(&b, &a, &cfg).unwrap());
    }
}

#[test]
fn matching_examples() {
    let cfg = EvalConfig::default();
    let mut gt = blank([30, 30, 30]);
    cube(&mut gt, [3, 3, 3], 3);
    let m = match_lesions(&gt, &gt, &cfg).unwrap();
    assert_eq!((m.matches.len(), m.false_positives(), m.false_negatives()), (1, 0, 0));

    let mut two = gt.clone();
    cube(&mut two, [20, 20, 20], 3);
    let m = match_lesions(&two, &blank([30, 30, 30]), &cfg).unwrap();
    assert_eq!((m.false_negatives(), m.false_positives()), (2, 0));

    let mut far = blank([30, 30, 30]);
    cube(&mut far, [22, 3, 22], 2);
    let m = match_lesions(&gt, &far, &cfg).unwrap();
    assert_eq!((m.false_negatives(), m.false_positives()), (1, 1));
}

#[test]
fn lesionwise_examples() {
    let cfg = EvalConfig::default();
    let mut gt = blank([30, 30, 30]);
    cube(&mut gt, [3, 3, 3], 3);
    let l = lesionwise_metrics(&gt, &gt, &cfg).unwrap();
    assert_eq!((l.ldsc, l.lhd95, l.false_positives, l.false_negatives), (1.0, 0.0, 0, 0));

    let mut with_fp = gt.clone();
    cube(&mut with_fp, [20, 20, 20], 2);
    let l = lesionwise_metrics(&gt, &with_fp, &cfg).unwrap();
    assert_eq!(l.ldsc, 0.5);

    let mut two = gt.clone();
    cube(&mut two, [20, 20, 20], 3);
    let l = lesionwise_metrics(&two, &gt, &cfg).unwrap();
    assert_eq!((l.ldsc, l.false_negatives), (0.5, 1));
}

#[test]
fn lesionwise_matches_loop_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(203);
    let g = Geometry::with_shape([18, 16, 14]).unwrap();
    for n in 0..40 {
        let cfg = EvalConfig {
            dilation_radius: rng.random_range(0..4),
            connectivity: [Connectivity::Six, Connectivity::Eighteen, Connectivity::TwentySix][n % 3],
            ..EvalConfig::default()
        };
        let gt = blobby(&mut rng, &g, 4);
        let pred = blobby(&mut rng, &g, 4);
        let l = lesionwise_metrics(&gt, &pred, &cfg).unwrap();
        let (ldsc, lhd, fp, fn_) =
            oracle::lesionwise(&gt, &pred, cfg.dilation_radius, cfg.connectivity, cfg.hd_penalty);
        assert_eq!((l.false_positives, l.false_negatives), (fp, fn_), "case {n}");
        assert!((l.ldsc - ldsc).abs() < 1e-12, "case {n}");
        assert!((l.lhd95 - lhd).abs() < 1e-6, "case {n}");
        assert!(l.ldsc <= 1.0);
    }
}

#[test]
fn single_matched_lesion_ldsc_equals_cdsc() {
    let cfg = EvalConfig::default();
    let mut gt = blank([20, 20, 20]);
    cube(&mut gt, [5, 5, 5], 4);
    let mut pred = blank([20, 20, 20]);
    cube(&mut pred, [6, 5, 5], 4);
    let l = lesionwise_metrics(&gt, &pred, &cfg).unwrap();
    assert_eq!(l.false_positives, 0);
    assert!((l.ldsc - dice(&gt, &pred).unwrap()).abs() < 1e-15);
}

#[test]
fn report_on_two_lesion_phantom() {
    let g = Geometry::with_shape([30, 30, 30]).unwrap();
    let mut gt = LabelVolume::filled(g, Label::Background);
    let mut pred = gt.clone();
    for i in 2..6 {
        for j in 2..6 {
            for k in 2..6 {
                gt.set([i, j, k], Label::Et);
                pred.set([i, j, k], Label::Et);
            }
        }
    }
    for i in 20..23 {
        for j in 20..23 {
            for k in 20..23 {
                gt.set([i, j, k], Label::Snfh);
            }
        }
    }
    let cfg = EvalConfig::default();
    let r = evaluate_patient(&gt, &pred, &cfg).unwrap();
    // WT: one lesion found, one missed.
    assert_eq!((r.wt.false_negatives, r.wt.false_positives), (1, 0));
    assert!((r.wt.ldsc - 0.5).abs() < 1e-12);
    assert!((r.wt.lhd95 - cfg.hd_penalty / 2.0).abs() < 1e-9);
    assert!((r.wt.cdsc - 2.0 * 64.0 / (91.0 + 64.0)).abs() < 1e-12);
    // TC and ET only contain the perfectly predicted lesion.
    for c in [Channel::Tc, Channel::Et] {
        let m = r.label(c);
        assert_eq!((m.ldsc, m.cdsc, m.lhd95, m.chd95), (1.0, 1.0, 0.0, 0.0));
    }
    let wt = oracle::brute_hd95(&gt.foreground(), &pred.foreground(), cfg.hd_penalty);
    assert!((r.wt.chd95 - wt).abs() < 1e-9);
    assert!((r.mean.ldsc - (0.5 + 2.0) / 3.0).abs() < 1e-12);
}

#[test]
fn dilation_radius_is_monotone() {
    let mut rng = ChaCha8Rng::seed_from_u64(204);
    let g = Geometry::with_shape([20, 20, 20]).unwrap();
    for _ in 0..20 {
        let gt = blobby(&mut rng, &g, 5);
        let pred = blobby(&mut rng, &g, 5);
        let mut last = (usize::MAX, usize::MAX);
        for radius in 0..6 {
            let cfg = EvalConfig { dilation_radius: radius, ..EvalConfig::default() };
            let m = match_lesions(&gt, &pred, &cfg).unwrap();
            let now = (m.false_positives(), m.false_negatives());
            assert!(now.0 <= last.0 && now.1 <= last.1);
            last = now;
        }
    }
}
