mod common;

use std::path::Path;

use common::{run, s, snapshot, write_dataset};
use lesionkit::inference::flip_code;
use lesionkit::nifti;
use lesionkit::{
    connected_components, loss_terms, merge_labels, unmerge_labels, Channels, Connectivity, FlipAxis, Geometry, Label,
    LabelCodes, LabelVolume, ProbabilityVolume, ScalarVolume,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

fn read_json(path: &Path) -> Value {
    serde_json::from_slice(&std::fs::read(path).unwrap()).unwrap()
}

fn labels_dir(dir: &Path, seed: u64, n: usize) -> Vec<LabelVolume> {
    std::fs::create_dir_all(dir).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|c| {
            let l = common::tumour(&mut rng);
            nifti::save_labels(&l, dir.join(format!("p{c}.nii.gz")), &LabelCodes::default()).unwrap();
            l
        })
        .collect()
}

#[test]
fn eval_against_itself_is_perfect() {
    let tmp = tempfile::tempdir().unwrap();
    let gt = tmp.path().join("gt");
    labels_dir(&gt, 1, 3);
    let out = tmp.path().join("eval");
    assert_eq!(run(&["eval", "--gt-dir", s(&gt), "--pred-dir", s(&gt), "--output-dir", s(&out), "--quiet"]), 0);
    for c in 0..3 {
        let r = read_json(&out.join(format!("p{c}.json")));
        for group in ["wt", "tc", "et"] {
            assert_eq!(r[group]["ldsc"], 1.0);
            assert_eq!(r[group]["cdsc"], 1.0);
            assert_eq!(r[group]["fp"], 0);
            assert_eq!(r[group]["fn"], 0);
        }
    }
}

#[test]
fn summary_means_match_case_files() {
    let tmp = tempfile::tempdir().unwrap();
    let (gt, pred) = (tmp.path().join("gt"), tmp.path().join("pred"));
    labels_dir(&gt, 2, 4);
    labels_dir(&pred, 3, 4);
    let out = tmp.path().join("eval");
    assert_eq!(run(&["eval", "--gt-dir", s(&gt), "--pred-dir", s(&pred), "--output-dir", s(&out), "--quiet"]), 0);

    let cases: Vec<Value> = (0..4).map(|c| read_json(&out.join(format!("p{c}.json")))).collect();
    let summary = read_json(&out.join("summary.json"));
    assert_eq!(summary["cases"], serde_json::json!(["p0", "p1", "p2", "p3"]));
    for group in ["wt", "tc", "et", "mean"] {
        for metric in ["ldsc", "cdsc", "lhd95", "chd95", "fp", "fn"] {
            let v: Vec<f64> = cases.iter().map(|c| c[group][metric].as_f64().unwrap()).collect();
            let mean = v.iter().sum::<f64>() / v.len() as f64;
            let got = summary["metrics"][group][metric]["mean"].as_f64().unwrap();
            assert!((got - mean).abs() < 1e-12, "{group}.{metric}: {got} vs {mean}");
            let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / v.len() as f64;
            let std = summary["metrics"][group][metric]["std"].as_f64().unwrap();
            assert!((std - var.sqrt()).abs() < 1e-12);
        }
    }
}

#[test]
fn eval_accepts_case_directories() {
    let tmp = tempfile::tempdir().unwrap();
    let raw = tmp.path().join("raw");
    write_dataset(&raw, 4, 2);
    let out = tmp.path().join("eval");
    assert_eq!(run(&["eval", "--gt-dir", s(&raw), "--pred-dir", s(&raw), "--output-dir", s(&out), "--quiet"]), 0);
    assert!(out.join("case-000.json").is_file() && out.join("case-001.json").is_file());
}

#[test]
fn zero_thresholds_keep_label_bytes() {
    let tmp = tempfile::tempdir().unwrap();
    let input = tmp.path().join("in");
    labels_dir(&input, 5, 2);
    let out = tmp.path().join("out");
    let argv = ["postprocess", "--input", s(&input), "--output", s(&out)];
    let zeros = ["--wt-min", "0", "--netc-min", "0", "--snfh-min", "0", "--et-min", "0"];
    assert_eq!(run(&[&argv[..], &zeros[..]].concat()), 0);
    for c in 0..2 {
        let name = format!("p{c}.nii.gz");
        assert_eq!(std::fs::read(input.join(&name)).unwrap(), std::fs::read(out.join(&name)).unwrap());
    }

    // Single-file form with default rules removes an isolated speck.
    let g = Geometry::with_shape([12, 12, 12]).unwrap();
    let mut l = LabelVolume::filled(g, Label::Background);
    l.set([2, 2, 2], Label::Et);
    for i in 5..9 {
        for j in 5..9 {
            for k in 5..9 {
                l.set([i, j, k], Label::Snfh);
            }
        }
    }
    let file = tmp.path().join("one.nii");
    nifti::save_labels(&l, &file, &LabelCodes::default()).unwrap();
    let cleaned = tmp.path().join("sub/one.nii.gz");
    assert_eq!(run(&["postprocess", "--input", s(&file), "--output", s(&cleaned)]), 0);
    let back = nifti::load_labels(&cleaned, &LabelCodes::default()).unwrap();
    assert_eq!(back.get([2, 2, 2]), Label::Background);
    assert_eq!(back.count(Label::Snfh), 64);
}

#[test]
fn simple_ensemble_of_identical_inputs() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("labels");
    let l = labels_dir(&dir, 6, 1).remove(0);
    let input = dir.join("p0.nii.gz");
    for method in ["simple", "mean"] {
        let out = tmp.path().join(format!("{method}.nii.gz"));
        let i = s(&input);
        assert_eq!(run(&["ensemble", "--method", method, "--inputs", i, i, i, "--output", s(&out)]), 0);
        assert_eq!(nifti::load_labels(&out, &LabelCodes::default()).unwrap(), l);
        assert_eq!(std::fs::read(&out).unwrap(), std::fs::read(&input).unwrap());
    }

    // Probability inputs: binarized once, so the fused labels equal a single binarization.
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let g = l.geometry().clone();
    let p: ProbabilityVolume<f32> =
        Channels::try_from_fn(|_| Ok(ScalarVolume::from_fn(g.clone(), |_| rng.random_range(0.0f32..=1.0)))).unwrap();
    let prob = tmp.path().join("prob.nii.gz");
    nifti::save_probability(&p, &prob).unwrap();
    let out = tmp.path().join("fused.nii.gz");
    let pr = s(&prob);
    assert_eq!(run(&["ensemble", "--method", "simple", "--inputs", pr, pr, pr, "--output", s(&out)]), 0);
    let want = unmerge_labels(&p.binarize(0.5));
    assert_eq!(nifti::load_labels(&out, &LabelCodes::default()).unwrap(), want);

    let out = tmp.path().join("max.nii.gz");
    assert_eq!(run(&["ensemble", "--method", "max", "--inputs", pr, pr, "--output", s(&out)]), 0);
    let m: ProbabilityVolume<f32> = nifti::load_probability(&out).unwrap();
    assert_eq!(m, p);
    assert_eq!(run(&["ensemble", "--method", "max", "--inputs", pr, pr, pr, "--output", s(&out)]), 1);
    let i = s(&input);
    assert_eq!(run(&["ensemble", "--method", "mean", "--inputs", pr, i, "--output", s(&out)]), 1);
}

#[test]
fn components_table() {
    let tmp = tempfile::tempdir().unwrap();
    let g = Geometry::with_shape([10, 10, 10]).unwrap();
    let l = LabelVolume::from_fn(g, |[i, j, k]| match (i, j, k) {
        (1..=2, 1..=2, 1..=2) => Label::Et,
        (3, 3, 3) => Label::Netc,
        (7..=8, 7, 7) => Label::Snfh,
        _ => Label::Background,
    });
    let file = tmp.path().join("m.nii.gz");
    nifti::save_labels(&l, &file, &LabelCodes::default()).unwrap();
    for (conn, n) in [("6", 3), ("26", 2)] {
        let out = tmp.path().join(format!("c{conn}.json"));
        assert_eq!(run(&["components", s(&file), "--connectivity", conn, "--output", s(&out)]), 0);
        let t = read_json(&out);
        assert_eq!(t["count"], n);
        let cc = connected_components(&l.foreground(), Connectivity::try_from(conn.parse::<u8>().unwrap()).unwrap());
        let sizes: Vec<u64> = t["components"].as_array().unwrap().iter().map(|c| c["size"].as_u64().unwrap()).collect();
        assert_eq!(sizes, cc.sizes().iter().map(|&x| x as u64).collect::<Vec<_>>());
        assert_eq!(t["total_voxels"], 11);
    }
    let out = tmp.path().join("et.json");
    assert_eq!(run(&["components", s(&file), "--select", "et", "--output", s(&out)]), 0);
    let t = read_json(&out);
    assert_eq!(t["components"][0]["bbox"]["min"], serde_json::json!([1, 1, 1]));
    assert_eq!(t["components"][0]["bbox"]["max"], serde_json::json!([3, 3, 3]));
    assert_eq!(run(&["components", s(&file), "--connectivity", "8"]), 1);
}

#[test]
fn loss_terms_from_files() {
    let tmp = tempfile::tempdir().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let l = common::tumour(&mut rng);
    let g = l.geometry().clone();
    let p: ProbabilityVolume<f32> =
        Channels::try_from_fn(|_| Ok(ScalarVolume::from_fn(g.clone(), |_| rng.random_range(0.0f32..=1.0)))).unwrap();
    let (pf, gf) = (tmp.path().join("p.nii.gz"), tmp.path().join("g.nii.gz"));
    nifti::save_probability(&p, &pf).unwrap();
    nifti::save_labels(&l, &gf, &LabelCodes::default()).unwrap();
    let out = tmp.path().join("loss.json");
    assert_eq!(run(&["loss", "--pred", s(&pf), "--gt", s(&gf), "--output", s(&out)]), 0);
    let v = read_json(&out);
    let p64: ProbabilityVolume<f64> = nifti::load_probability(&pf).unwrap();
    let want = loss_terms(&p64, &merge_labels(&l), &Default::default()).unwrap();
    assert_eq!(v["dice_ce"].as_f64().unwrap(), want.dice_ce);
    assert_eq!(v["blob"].as_f64().unwrap(), want.blob);
    assert_eq!(v["total"].as_f64().unwrap(), want.total);
}

#[test]
fn mask_small_filters_cases() {
    let tmp = tempfile::tempdir().unwrap();
    let input = tmp.path().join("in");
    std::fs::create_dir(&input).unwrap();
    let g = Geometry::with_shape([16, 16, 16]).unwrap();
    let big = |[i, j, k]: [usize; 3]| i < 11 && j < 11 && k < 11;
    let codes = LabelCodes::default();
    let only_big = LabelVolume::from_fn(g.clone(), |c| if big(c) { Label::Snfh } else { Label::Background });
    let mixed = LabelVolume::from_fn(g, |c| match c {
        c if big(c) => Label::Snfh,
        [14, 14, 13..=15] => Label::Et,
        _ => Label::Background,
    });
    nifti::save_labels(&only_big, input.join("a.nii.gz"), &codes).unwrap();
    nifti::save_labels(&mixed, input.join("b.nii.gz"), &codes).unwrap();
    let out = tmp.path().join("out");
    assert_eq!(run(&["mask-small", "--input-dir", s(&input), "--output-dir", s(&out)]), 0);
    let m = read_json(&out.join("mask_small.json"));
    assert_eq!(m["kept"], serde_json::json!(["b"]));
    assert_eq!(m["dropped"], serde_json::json!(["a"]));
    assert!(!out.join("a.nii.gz").exists());
    let b = nifti::load_labels(out.join("b.nii.gz"), &codes).unwrap();
    assert_eq!(b.histogram(), [16 * 16 * 16 - 3, 0, 0, 3]);
}

#[test]
fn file_predictor_fuses_flipped_predictions() {
    let tmp = tempfile::tempdir().unwrap();
    let preds = tmp.path().join("preds");
    std::fs::create_dir(&preds).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let truth = common::tumour(&mut rng);
    let p: ProbabilityVolume<f32> = merge_labels(&truth).to_probability();
    let combos: [&[FlipAxis]; 4] =
        [&[], &[FlipAxis::Sagittal], &[FlipAxis::Coronal], &[FlipAxis::Sagittal, FlipAxis::Coronal]];
    for flips in combos {
        // What a network would output on the flipped input.
        let flipped = p.map_channels_flip(flips);
        nifti::save_probability(&flipped, preds.join(format!("case_{}.nii.gz", flip_code(flips)))).unwrap();
    }
    let out = tmp.path().join("out");
    let argv = ["infer", "--predictor", "files", "--predictions", s(&preds), "--output-dir", s(&out), "--tta"];
    assert_eq!(run(&[&argv[..], &["--no-postprocess"][..]].concat()), 0);
    assert_eq!(nifti::load_labels(out.join("case.nii.gz"), &LabelCodes::default()).unwrap(), truth);
}

trait FlipExt {
    fn map_channels_flip(&self, flips: &[FlipAxis]) -> Self;
}

impl FlipExt for ProbabilityVolume<f32> {
    fn map_channels_flip(&self, flips: &[FlipAxis]) -> Self {
        let [a, b, c] = self.as_array().clone().map(|v| flips.iter().fold(v, |v, f| v.flip_axis(f.axis())));
        Channels::new(a, b, c).unwrap()
    }
}

#[test]
fn preprocess_then_infer_with_phantom() {
    let tmp = tempfile::tempdir().unwrap();
    let raw = tmp.path().join("raw");
    let names = write_dataset(&raw, 10, 2);
    let pre = tmp.path().join("pre");
    assert_eq!(run(&["preprocess", "--input-dir", s(&raw), "--output-dir", s(&pre), "--subtraction"]), 0);
    for name in &names {
        for role in ["t1w", "t1c", "t2w", "flair", "subtraction"] {
            let v: ScalarVolume<f32> = nifti::load_scalar(pre.join(name).join(format!("{role}.nii.gz"))).unwrap();
            assert_eq!(v.shape(), [20, 18, 18], "{role}");
            assert_eq!(v.geometry().spacing, [1.0; 3]);
            assert!(v.data().iter().all(|x| (0.0..=1.0).contains(x)), "{role}");
        }
        let seg = nifti::load_labels(pre.join(name).join("seg.nii.gz"), &LabelCodes::default()).unwrap();
        let merged = nifti::load_channel_mask(pre.join(name).join("seg_merged.nii.gz")).unwrap();
        assert_eq!(merged, merge_labels(&seg));
    }

    // Encode the preprocessed labels as the phantom's input channel.
    let enc = tmp.path().join("enc");
    for name in &names {
        let seg = nifti::load_labels(pre.join(name).join("seg.nii.gz"), &LabelCodes::default()).unwrap();
        std::fs::create_dir_all(enc.join(name)).unwrap();
        let x: ScalarVolume<f32> = lesionkit::inference::PhantomOracle::encode(&seg);
        for role in ["t1w", "t1c", "t2w", "flair"] {
            nifti::save_scalar(&x, enc.join(name).join(format!("{role}.nii.gz"))).unwrap();
        }
    }
    let cfg = tmp.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"sliding_window": {"patch_size": [8, 8, 8], "overlap": 0.25}}"#).unwrap();
    let out = tmp.path().join("out");
    let argv =
        ["--config", s(&cfg), "infer", "--input-dir", s(&enc), "--output-dir", s(&out), "--predictor", "phantom"];
    assert_eq!(run(&[&argv[..], &["--tta", "--no-postprocess"][..]].concat()), 0);
    for name in &names {
        let seg = nifti::load_labels(pre.join(name).join("seg.nii.gz"), &LabelCodes::default()).unwrap();
        let got = nifti::load_labels(out.join(format!("{name}.nii.gz")), &LabelCodes::default()).unwrap();
        assert_eq!(got.data(), seg.data());
    }
}

#[test]
fn thread_count_does_not_change_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let raw = tmp.path().join("raw");
    write_dataset(&raw, 12, 2);
    let cfg = tmp.path().join("cfg.json");
    std::fs::write(
        &cfg,
        r#"{"sliding_window": {"patch_size": [12, 12, 8], "overlap": 0.5}, "tta": {"noise_sigma": 0.05}}"#,
    )
    .unwrap();
    let mut snaps = Vec::new();
    for threads in ["1", "3"] {
        let out = tmp.path().join(format!("t{threads}"));
        let argv = ["--config", s(&cfg), "--threads", threads, "--seed", "5", "infer", "--input-dir", s(&raw)];
        assert_eq!(run(&[&argv[..], &["--output-dir", s(&out), "--tta"][..]].concat()), 0);
        snaps.push(snapshot(&out));
    }
    assert_eq!(snaps[0], snaps[1]);
}

#[test]
fn exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let missing = tmp.path().join("missing");
    let out = tmp.path().join("out");
    assert_eq!(run(&["--help"]), 0);
    assert_eq!(run(&["--version"]), 0);
    assert_eq!(run(&["eval", "--help"]), 0);
    assert_eq!(run(&[]), 1);
    assert_eq!(run(&["frobnicate"]), 1);
    assert_eq!(run(&["eval", "--gt-dir", "a", "--pred-dir", "b", "--bogus"]), 1);
    assert_eq!(run(&["eval", "--gt-dir", s(&missing), "--pred-dir", s(&missing), "--output-dir", s(&out)]), 2);
    assert_eq!(run(&["components", s(&missing.join("x.nii.gz"))]), 2);
    assert_eq!(run(&["--config", s(&missing.join("c.json")), "components", "x.nii"]), 2);

    let bad = tmp.path().join("bad.json");
    std::fs::write(&bad, r#"{"eval": {"dilation": 2}}"#).unwrap();
    assert_eq!(run(&["--config", s(&bad), "components", "x.nii"]), 1);
    std::fs::write(&bad, r#"{"schema_version": 2}"#).unwrap();
    assert_eq!(run(&["--config", s(&bad), "components", "x.nii"]), 1);
    std::fs::write(&bad, "not json").unwrap();
    assert_eq!(run(&["--config", s(&bad), "components", "x.nii"]), 1);

    // Shape mismatch and unknown label codes are data errors.
    let (gt, pred) = (tmp.path().join("gt"), tmp.path().join("pred"));
    std::fs::create_dir_all(&gt).unwrap();
    std::fs::create_dir_all(&pred).unwrap();
    let codes = LabelCodes::default();
    let a = LabelVolume::filled(Geometry::with_shape([4, 4, 4]).unwrap(), Label::Background);
    let b = LabelVolume::filled(Geometry::with_shape([4, 4, 5]).unwrap(), Label::Background);
    nifti::save_labels(&a, gt.join("x.nii.gz"), &codes).unwrap();
    nifti::save_labels(&b, pred.join("x.nii.gz"), &codes).unwrap();
    assert_eq!(run(&["eval", "--gt-dir", s(&gt), "--pred-dir", s(&pred), "--output-dir", s(&out)]), 1);
    std::fs::remove_file(pred.join("x.nii.gz")).unwrap();
    assert_eq!(run(&["eval", "--gt-dir", s(&gt), "--pred-dir", s(&pred), "--output-dir", s(&out)]), 1);

    let odd = ScalarVolume::filled(Geometry::with_shape([3, 3, 3]).unwrap(), 7.0f32);
    let odd_path = tmp.path().join("odd.nii.gz");
    nifti::save_scalar(&odd, &odd_path).unwrap();
    assert_eq!(run(&["components", s(&odd_path)]), 1);
}

#[test]
fn binary_prints_effective_config() {
    let tmp = tempfile::tempdir().unwrap();
    let file = tmp.path().join("cfg.json");
    std::fs::write(&file, r#"{"eval": {"dilation_radius": 1}, "threads": 2}"#).unwrap();
    let out = std::process::Command::new(env!("CARGO_BIN_EXE_lesionkit"))
        .args(["--seed", "9", "--threads", "1", "config"])
        .env("LESIONKIT_CONFIG", &file)
        .output()
        .unwrap();
    assert!(out.status.success());
    let cfg: lesionkit_cli::ToolkitConfig = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(cfg.eval.dilation_radius, 1);
    assert_eq!(cfg.tta.seed, 9);
    assert_eq!(cfg.threads, 1);

    let version = std::process::Command::new(env!("CARGO_BIN_EXE_lesionkit")).arg("--version").output().unwrap();
    let text = String::from_utf8(version.stdout).unwrap();
    assert!(text.contains(env!("CARGO_PKG_VERSION")) && text.contains("config schema 1"), "{text}");

    let bad = std::process::Command::new(env!("CARGO_BIN_EXE_lesionkit")).arg("nope").output().unwrap();
    assert_eq!(bad.status.code(), Some(1));
}
