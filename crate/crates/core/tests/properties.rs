use lesionkit::{
    blob_loss, canonicalize_orientation, dice, hd95, match_lesions, max_ensemble, merge_labels, percentile_rescale,
    simple_ensemble, soft_dice_loss, unmerge_labels, AxisDirection, Connectivity, EvalConfig, Geometry, Label,
    LabelVolume, LossConfig, Mask, ProbabilityVolume, RescaleConfig, ScalarVolume, SimpleConfig,
};
use proptest::prelude::*;

const SHAPE: [usize; 3] = [5, 6, 4];
const N: usize = 5 * 6 * 4;

fn geometry() -> Geometry {
    Geometry::with_shape(SHAPE).unwrap()
}

fn mask_strategy() -> impl Strategy<Value = Mask> {
    prop::collection::vec(any::<bool>(), N).prop_map(|v| Mask::from_vec(geometry(), v).unwrap())
}

fn sparse_mask() -> impl Strategy<Value = Mask> {
    prop::collection::vec(prop::bool::weighted(0.15), N).prop_map(|v| Mask::from_vec(geometry(), v).unwrap())
}

fn prob_strategy() -> impl Strategy<Value = ScalarVolume<f64>> {
    prop::collection::vec(0.0f64..=1.0, N).prop_map(|v| ScalarVolume::from_vec(geometry(), v).unwrap())
}

fn labels_strategy() -> impl Strategy<Value = LabelVolume> {
    prop::collection::vec(0usize..4, N)
        .prop_map(|v| LabelVolume::from_vec(geometry(), v.into_iter().map(|i| Label::ALL[i]).collect()).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn merge_unmerge_round_trip(l in labels_strategy()) {
        let m = merge_labels(&l);
        for i in 0..N {
            let [wt, tc, et] = m.as_array();
            prop_assert!(!et.data()[i] || tc.data()[i]);
            prop_assert!(!tc.data()[i] || wt.data()[i]);
        }
        prop_assert_eq!(unmerge_labels(&m), l);
    }

    #[test]
    fn rescale_in_unit_range_and_monotone(v in prop::collection::vec(-1e4f64..1e4, N)) {
        let vol = ScalarVolume::from_vec(geometry(), v.clone()).unwrap();
        let r = percentile_rescale(&vol, &RescaleConfig::default()).unwrap();
        prop_assert!(r.data().iter().all(|&x| (0.0..=1.0).contains(&x)));
        let mut pairs: Vec<(f64, f64)> = v.iter().copied().zip(r.data().iter().copied()).collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        prop_assert!(pairs.windows(2).all(|w| w[0].1 <= w[1].1));
    }

    #[test]
    fn dice_and_hd95_symmetric(a in mask_strategy(), b in mask_strategy()) {
        prop_assert_eq!(dice(&a, &b).unwrap(), dice(&b, &a).unwrap());
        let cfg = EvalConfig::default();
        prop_assert_eq!(hd95(&a, &b, &cfg).unwrap(), hd95(&b, &a, &cfg).unwrap());
        if a.any() {
            prop_assert_eq!(dice(&a, &a).unwrap(), 1.0);
        }
    }

    #[test]
    fn blob_loss_ignores_lesion_order(p in prob_strategy(), g in sparse_mask()) {
        // Mirroring the grid reorders the components but not their losses.
        let cfg = LossConfig::default();
        let a = blob_loss(&p, &g, &cfg).unwrap();
        let b = blob_loss(&p.flip_axis(0).flip_axis(2), &g.flip_axis(0).flip_axis(2), &cfg).unwrap();
        prop_assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn losses_are_lipschitz_in_p(p in prob_strategy(), g in sparse_mask()) {
        let cfg = LossConfig::default();
        let delta = 1e-6;
        let q = p.map(|&v| (v + delta).min(1.0));
        let k = 10.0 * N as f64;
        let d1 = (soft_dice_loss(&p, &g, &cfg).unwrap() - soft_dice_loss(&q, &g, &cfg).unwrap()).abs();
        let d2 = (blob_loss(&p, &g, &cfg).unwrap() - blob_loss(&q, &g, &cfg).unwrap()).abs();
        prop_assert!(d1 <= k * delta && d2 <= k * delta);
    }

    #[test]
    fn matching_monotone_in_radius(gt in sparse_mask(), pred in sparse_mask(), r in 0usize..4) {
        let at = |radius| {
            let m = match_lesions(&gt, &pred, &EvalConfig { dilation_radius: radius, ..EvalConfig::default() }).unwrap();
            (m.false_positives(), m.false_negatives())
        };
        let (fp0, fn0) = at(r);
        let (fp1, fn1) = at(r + 1);
        prop_assert!(fp1 <= fp0 && fn1 <= fn0);
    }

    #[test]
    fn simple_permutation_invariant(ms in prop::collection::vec(mask_strategy(), 1..6), rot in 0usize..6) {
        let cfg = SimpleConfig::default();
        let mut rotated = ms.clone();
        let len = rotated.len();
        rotated.rotate_left(rot % len);
        prop_assert_eq!(simple_ensemble(&ms, &cfg).unwrap().mask, simple_ensemble(&rotated, &cfg).unwrap().mask);
    }

    #[test]
    fn max_ensemble_commutative(a in prob_strategy(), b in prob_strategy()) {
        let pa = ProbabilityVolume::new(a.clone(), b.clone(), a.clone()).unwrap();
        let pb = ProbabilityVolume::new(b.clone(), a.clone(), b).unwrap();
        prop_assert_eq!(max_ensemble(&pa, &pb).unwrap(), max_ensemble(&pb, &pa).unwrap());
    }

    #[test]
    fn canonicalize_idempotent(
        v in prop::collection::vec(-10.0f32..10.0, N),
        perm in 0usize..6,
        signs in 0u8..8,
    ) {
        let perms = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
        let p = perms[perm];
        let g = Geometry {
            orientation: [0, 1, 2].map(|a| AxisDirection::from_world(p[a], signs >> a & 1 == 0)),
            ..geometry()
        };
        let vol = ScalarVolume::from_vec(g, v).unwrap();
        let once = canonicalize_orientation(&vol).unwrap();
        prop_assert_eq!(canonicalize_orientation(&once).unwrap(), once);
    }

    #[test]
    fn components_cover_foreground(m in mask_strategy()) {
        for conn in [Connectivity::Six, Connectivity::Eighteen, Connectivity::TwentySix] {
            let l = lesionkit::connected_components(&m, conn);
            prop_assert_eq!(l.sizes().iter().sum::<usize>(), m.popcount());
            prop_assert!(l.sizes().iter().all(|&s| s > 0));
        }
    }
}
