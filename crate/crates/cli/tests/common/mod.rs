#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use lesionkit::nifti;
use lesionkit::{Geometry, Label, LabelCodes, LabelVolume, ScalarVolume};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const SHAPE: [usize; 3] = [20, 18, 12];
pub const SPACING: [f64; 3] = [1.0, 1.0, 1.5];

/// Nested ellipsoidal tumour: NETC core, ET rim, SNFH halo.
pub fn tumour(rng: &mut ChaCha8Rng) -> LabelVolume {
    let g = Geometry::new(SHAPE, SPACING).unwrap();
    let c: [f64; 3] = [rng.random_range(7.0..13.0), rng.random_range(7.0..11.0), rng.random_range(4.0..8.0)];
    let r = rng.random_range(4.0..6.0);
    LabelVolume::from_fn(g, |[i, j, k]| {
        let d = ((i as f64 - c[0]).powi(2) + (j as f64 - c[1]).powi(2) + ((k as f64 - c[2]) * 1.5).powi(2)).sqrt();
        if d < 0.35 * r {
            Label::Netc
        } else if d < 0.6 * r {
            Label::Et
        } else if d < r {
            Label::Snfh
        } else {
            Label::Background
        }
    })
}

fn intensity(labels: &LabelVolume, rng: &mut ChaCha8Rng, levels: [f32; 4]) -> ScalarVolume<f32> {
    let mut v = labels.map(|&l| levels[l as usize]);
    for x in v.data_mut() {
        *x += rng.random_range(-6.0..6.0);
    }
    v
}

/// `<dir>/<case>/{t1w,t1c,t2w,flair,seg}.nii.gz` for `n` synthetic cases.
pub fn write_dataset(dir: &Path, seed: u64, n: usize) -> Vec<String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let codes = LabelCodes::default();
    let mut names = Vec::new();
    for c in 0..n {
        let name = format!("case-{c:03}");
        let case = dir.join(&name);
        std::fs::create_dir_all(&case).unwrap();
        let labels = tumour(&mut rng);
        // Background, NETC, SNFH, ET.
        let levels = [
            ("t1w", [200.0, 120.0, 170.0, 180.0]),
            ("t1c", [200.0, 130.0, 180.0, 420.0]),
            ("t2w", [150.0, 380.0, 330.0, 300.0]),
            ("flair", [100.0, 280.0, 205.0, 400.0]),
        ];
        for (role, lv) in levels {
            nifti::save_scalar(&intensity(&labels, &mut rng, lv), case.join(format!("{role}.nii.gz"))).unwrap();
        }
        nifti::save_labels(&labels, case.join("seg.nii.gz"), &codes).unwrap();
        names.push(name);
    }
    names
}

/// Relative path to file contents for every file below `root`.
pub fn snapshot(root: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    fn walk(root: &Path, dir: &Path, out: &mut BTreeMap<PathBuf, Vec<u8>>) {
        for e in std::fs::read_dir(dir).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                walk(root, &p, out);
            } else {
                out.insert(p.strip_prefix(root).unwrap().to_path_buf(), std::fs::read(&p).unwrap());
            }
        }
    }
    let mut out = BTreeMap::new();
    walk(root, root, &mut out);
    out
}

pub fn run(args: &[&str]) -> i32 {
    let mut argv = vec!["lesionkit"];
    argv.extend_from_slice(args);
    lesionkit_cli::run(argv)
}

pub fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}
