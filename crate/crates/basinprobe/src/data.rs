//! Dataset construction: synthetic polynomial regression, IDX image
//! ingestion, channel-wise normalization, attack sets with intentionally
//! wrong labels, and a seeded synthetic image-classification generator used
//! as the desk-scale stand-in when no IDX corpus is available.

use crate::error::{Error, Result};
use crate::idx;
use crate::linalg::Mat;
use crate::net::TargetsRef;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Train,
    Test,
    Attack,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub enum Labels {
    /// Real-valued targets, one row per sample.
    Real(Mat),
    /// Class indices.
    Class(Vec<usize>),
}

impl Labels {
    pub fn len(&self) -> usize {
        match self {
            Labels::Real(m) => m.rows(),
            Labels::Class(c) => c.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn targets(&self) -> TargetsRef<'_> {
        match self {
            Labels::Real(m) => TargetsRef::Real(m),
            Labels::Class(c) => TargetsRef::Class(c),
        }
    }

    pub fn classes(&self) -> Option<&[usize]> {
        match self {
            Labels::Class(c) => Some(c),
            Labels::Real(_) => None,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LabeledDataset {
    pub inputs: Mat,
    pub labels: Labels,
    pub role: Role,
}

impl LabeledDataset {
    pub fn new(inputs: Mat, labels: Labels, role: Role) -> Result<Self> {
        let ds = LabeledDataset { inputs, labels, role };
        ds.validate()?;
        Ok(ds)
    }

    pub fn validate(&self) -> Result<()> {
        if self.inputs.rows() != self.labels.len() {
            return Err(Error::Shape(format!(
                "{} input rows vs {} labels",
                self.inputs.rows(),
                self.labels.len()
            )));
        }
        if !self.inputs.is_finite() {
            return Err(Error::NonFinite { what: "dataset inputs".into(), sample: None });
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.inputs.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn input_dim(&self) -> usize {
        self.inputs.cols()
    }

    /// Smallest class count consistent with the labels (max index + 1).
    pub fn num_classes(&self) -> Option<usize> {
        self.labels.classes().map(|c| c.iter().max().map_or(0, |m| m + 1))
    }

    /// Copy of the samples at `indices`, in the given order.
    pub fn select(&self, indices: &[usize]) -> LabeledDataset {
        let d = self.input_dim();
        let mut inputs = Mat::zeros(indices.len(), d);
        for (row, &i) in indices.iter().enumerate() {
            inputs.row_mut(row).copy_from_slice(self.inputs.row(i));
        }
        let labels = match &self.labels {
            Labels::Real(m) => {
                let mut y = Mat::zeros(indices.len(), m.cols());
                for (row, &i) in indices.iter().enumerate() {
                    y.row_mut(row).copy_from_slice(m.row(i));
                }
                Labels::Real(y)
            }
            Labels::Class(c) => Labels::Class(indices.iter().map(|&i| c[i]).collect()),
        };
        LabeledDataset { inputs, labels, role: self.role }
    }
}

/// The cubic used by the polynomial fitting experiment.
pub fn cubic_target(x: f64) -> f64 {
    x * x * x - 3.0 * x * x - x + 1.0
}

pub const POLY_INTERVAL: (f64, f64) = (-1.5, 3.5);

/// Scalar regression set y = x³ − 3x² − x + 1 + N(0, noise_sd²), x uniform
/// on `POLY_INTERVAL`. Deterministic per seed.
pub fn gen_poly(n: usize, noise_sd: f64, seed: u64) -> Result<LabeledDataset> {
    gen_poly_on(n, noise_sd, seed, POLY_INTERVAL.0, POLY_INTERVAL.1)
}

pub fn gen_poly_on(n: usize, noise_sd: f64, seed: u64, lo: f64, hi: f64) -> Result<LabeledDataset> {
    if n == 0 {
        return Err(Error::InvalidSpec("gen_poly needs n >= 1".into()));
    }
    if !(lo < hi) {
        return Err(Error::InvalidSpec(format!("bad interval [{lo}, {hi}]")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut xs = Mat::zeros(n, 1);
    let mut ys = Mat::zeros(n, 1);
    for i in 0..n {
        let x = lo + (hi - lo) * rng.random::<f64>();
        let noise: f64 = rng.sample(StandardNormal);
        xs[(i, 0)] = x;
        ys[(i, 0)] = cubic_target(x) + noise_sd * noise;
    }
    LabeledDataset::new(xs, Labels::Real(ys), Role::Train)
}

/// Channel statistics captured by `normalize_channelwise`, reusable on a
/// held-out split. Each input coordinate is its own channel.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ChannelStats {
    pub mean: Vec<f64>,
    pub sd: Vec<f64>,
}

const SD_FLOOR: f64 = 1e-8;

/// Standardize every input column to mean 0 and sd 1 (population sd, floored
/// at 1e-8 so constant channels map to zero).
pub fn normalize_channelwise(ds: &LabeledDataset) -> Result<(LabeledDataset, ChannelStats)> {
    let n = ds.len();
    if n < 2 {
        return Err(Error::InvalidSpec(format!("normalization needs N >= 2, got {n}")));
    }
    let d = ds.input_dim();
    let mut mean = vec![0.0; d];
    for i in 0..n {
        for (m, &x) in mean.iter_mut().zip(ds.inputs.row(i)) {
            *m += x;
        }
    }
    for m in &mut mean {
        *m /= n as f64;
    }
    let mut var = vec![0.0; d];
    for i in 0..n {
        for ((v, &m), &x) in var.iter_mut().zip(&mean).zip(ds.inputs.row(i)) {
            let c = x - m;
            *v += c * c;
        }
    }
    let sd: Vec<f64> = var.iter().map(|v| (v / n as f64).sqrt().max(SD_FLOOR)).collect();
    let stats = ChannelStats { mean, sd };
    Ok((apply_channel_stats(ds, &stats)?, stats))
}

/// Apply previously computed channel statistics (e.g. train statistics to a
/// test split).
pub fn apply_channel_stats(ds: &LabeledDataset, stats: &ChannelStats) -> Result<LabeledDataset> {
    let d = ds.input_dim();
    if stats.mean.len() != d || stats.sd.len() != d {
        return Err(Error::Shape(format!(
            "stats dimension {} vs input dim {d}",
            stats.mean.len()
        )));
    }
    let mut out = ds.clone();
    for i in 0..out.len() {
        let row = out.inputs.row_mut(i);
        for j in 0..d {
            row[j] = (row[j] - stats.mean[j]) / stats.sd[j];
        }
    }
    Ok(out)
}

/// Recipe for an attack set: every emitted label differs from the source
/// label of the same sample.
#[derive(Clone, Debug)]
pub struct AttackSpec<'a> {
    pub source: &'a LabeledDataset,
    pub relabel_seed: u64,
    pub num_classes: usize,
}

/// Relabel every sample with a wrong class drawn uniformly from the other
/// num_classes − 1 labels. Deterministic per relabel_seed.
pub fn build_attack_set(spec: &AttackSpec<'_>) -> Result<LabeledDataset> {
    if spec.num_classes < 2 {
        return Err(Error::InvalidSpec(format!(
            "attack relabeling needs num_classes >= 2, got {}",
            spec.num_classes
        )));
    }
    let orig = spec
        .source
        .labels
        .classes()
        .ok_or_else(|| Error::InvalidSpec("attack set needs class labels".into()))?;
    if let Some(&bad) = orig.iter().find(|&&c| c >= spec.num_classes) {
        return Err(Error::InvalidSpec(format!(
            "source label {bad} out of range for {} classes",
            spec.num_classes
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.relabel_seed);
    let wrong: Vec<usize> = orig
        .iter()
        .map(|&c| {
            let r = rng.random_range(0..spec.num_classes - 1);
            if r < c {
                r
            } else {
                r + 1
            }
        })
        .collect();
    LabeledDataset::new(spec.source.inputs.clone(), Labels::Class(wrong), Role::Attack)
}

/// Split into (first n samples, remainder), both in original order.
pub fn split_first_n(ds: &LabeledDataset, n: usize) -> Result<(LabeledDataset, LabeledDataset)> {
    if n == 0 || n > ds.len() {
        return Err(Error::InvalidSpec(format!(
            "split point {n} out of range 1..={}",
            ds.len()
        )));
    }
    let head_idx: Vec<usize> = (0..n).collect();
    let tail_idx: Vec<usize> = (n..ds.len()).collect();
    Ok((ds.select(&head_idx), ds.select(&tail_idx)))
}

/// Load an image/label IDX pair: pixels scaled to [0, 1], labels as class
/// indices, sample order preserved. Images are flattened row-major.
pub fn load_idx(images_path: &Path, labels_path: &Path) -> Result<LabeledDataset> {
    let images = idx::read_idx(images_path, 3)?;
    let labels = idx::read_idx(labels_path, 1)?;
    let n = images.dims[0];
    if labels.dims[0] != n {
        return Err(Error::Format {
            offset: 4,
            message: format!(
                "{} images but {} labels ({} vs {})",
                n,
                labels.dims[0],
                images_path.display(),
                labels_path.display()
            ),
        });
    }
    let d = images.dims[1] * images.dims[2];
    let data: Vec<f64> = images.data.iter().map(|&b| b as f64 / 255.0).collect();
    let inputs = Mat::from_vec(n, d, data);
    let classes: Vec<usize> = labels.data.iter().map(|&b| b as usize).collect();
    LabeledDataset::new(inputs, Labels::Class(classes), Role::Train)
}

/// Write a class-labeled dataset as an IDX pair with `rows * cols` pixels
/// per sample. Pixels must lie in [0, 1]; values are scaled back to bytes,
/// so a dataset produced by `load_idx` round-trips bit-exactly.
pub fn save_idx(
    ds: &LabeledDataset,
    images_path: &Path,
    labels_path: &Path,
    rows: usize,
    cols: usize,
) -> Result<()> {
    if rows * cols != ds.input_dim() {
        return Err(Error::Shape(format!(
            "{rows}x{cols} does not match input dim {}",
            ds.input_dim()
        )));
    }
    let classes = ds
        .labels
        .classes()
        .ok_or_else(|| Error::InvalidSpec("save_idx needs class labels".into()))?;
    if let Some(&c) = classes.iter().find(|&&c| c > u8::MAX as usize) {
        return Err(Error::InvalidSpec(format!("class {c} does not fit in a byte")));
    }
    let pixels: Vec<u8> = ds
        .inputs
        .data()
        .iter()
        .map(|&x| (x * 255.0).round().clamp(0.0, 255.0) as u8)
        .collect();
    idx::write_idx(images_path, &[ds.len(), rows, cols], &pixels)?;
    let bytes: Vec<u8> = classes.iter().map(|&c| c as u8).collect();
    idx::write_idx(labels_path, &[ds.len()], &bytes)?;
    Ok(())
}

/// Seeded synthetic image-classification task: per-class prototypes built
/// from random smooth bumps, per-sample integer translation jitter plus
/// pixel noise. Pixels are clamped to [0, 1] so the set survives IDX
/// round-trips.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SyntheticImageSpec {
    pub classes: usize,
    pub side: usize,
    pub n: usize,
    pub noise_sd: f64,
    pub max_shift: i64,
    pub prototype_seed: u64,
    pub sample_seed: u64,
}

impl Default for SyntheticImageSpec {
    fn default() -> Self {
        SyntheticImageSpec {
            classes: 10,
            side: 14,
            n: 1024,
            noise_sd: 0.12,
            max_shift: 1,
            prototype_seed: 7,
            sample_seed: 1,
        }
    }
}

pub fn gen_image_classes(spec: &SyntheticImageSpec) -> Result<LabeledDataset> {
    if spec.classes < 2 || spec.side == 0 || spec.n == 0 {
        return Err(Error::InvalidSpec(format!("bad synthetic image spec: {spec:?}")));
    }
    let side = spec.side;
    let d = side * side;

    // Class prototypes: a few Gaussian bumps each, min-max scaled to [0, 1].
    let mut proto_rng = ChaCha8Rng::seed_from_u64(spec.prototype_seed);
    let mut prototypes: Vec<Vec<f64>> = Vec::with_capacity(spec.classes);
    for _ in 0..spec.classes {
        let mut img = vec![0.0f64; d];
        let bumps = 3 + proto_rng.random_range(0..3);
        for _ in 0..bumps {
            let cx = proto_rng.random::<f64>() * side as f64;
            let cy = proto_rng.random::<f64>() * side as f64;
            let width = 1.0 + proto_rng.random::<f64>() * (side as f64 / 4.0);
            let amp = 0.5 + proto_rng.random::<f64>();
            for r in 0..side {
                for c in 0..side {
                    let dx = c as f64 - cx;
                    let dy = r as f64 - cy;
                    img[r * side + c] += amp * (-(dx * dx + dy * dy) / (2.0 * width * width)).exp();
                }
            }
        }
        let lo = img.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = img.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let span = (hi - lo).max(1e-12);
        for x in &mut img {
            *x = (*x - lo) / span;
        }
        prototypes.push(img);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(spec.sample_seed);
    let mut inputs = Mat::zeros(spec.n, d);
    let mut classes = Vec::with_capacity(spec.n);
    for i in 0..spec.n {
        let class = i % spec.classes;
        classes.push(class);
        let dx = rng.random_range(-spec.max_shift..=spec.max_shift);
        let dy = rng.random_range(-spec.max_shift..=spec.max_shift);
        let proto = &prototypes[class];
        let row = inputs.row_mut(i);
        for r in 0..side {
            for c in 0..side {
                let sr = r as i64 - dy;
                let sc = c as i64 - dx;
                let base = if sr >= 0 && sr < side as i64 && sc >= 0 && sc < side as i64 {
                    proto[sr as usize * side + sc as usize]
                } else {
                    0.0
                };
                let noise: f64 = rng.sample(StandardNormal);
                row[r * side + c] = (base + spec.noise_sd * noise).clamp(0.0, 1.0);
            }
        }
    }
    LabeledDataset::new(inputs, Labels::Class(classes), Role::Train)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cubic_values() {
        assert_eq!(cubic_target(0.0), 1.0);
        assert_eq!(cubic_target(1.0), -2.0);
    }

    #[test]
    fn gen_poly_noiseless_lies_on_cubic() {
        let ds = gen_poly(5, 0.0, 42).unwrap();
        assert_eq!(ds.len(), 5);
        if let Labels::Real(y) = &ds.labels {
            for i in 0..5 {
                let x = ds.inputs[(i, 0)];
                assert!((POLY_INTERVAL.0..=POLY_INTERVAL.1).contains(&x));
                assert_eq!(y[(i, 0)], cubic_target(x));
            }
        } else {
            panic!("expected real labels");
        }
    }

    #[test]
    fn gen_poly_is_pure_in_seed() {
        let a = gen_poly(16, 0.1, 9).unwrap();
        let b = gen_poly(16, 0.1, 9).unwrap();
        assert_eq!(a.inputs.data(), b.inputs.data());
        let c = gen_poly(16, 0.1, 10).unwrap();
        assert_ne!(a.inputs.data(), c.inputs.data());
    }

    #[test]
    fn normalize_two_samples() {
        let ds = LabeledDataset::new(
            Mat::from_vec(2, 1, vec![0.0, 2.0]),
            Labels::Class(vec![0, 1]),
            Role::Train,
        )
        .unwrap();
        let (norm, stats) = normalize_channelwise(&ds).unwrap();
        assert_eq!(norm.inputs.data(), &[-1.0, 1.0]);
        assert_eq!(stats.mean, vec![1.0]);
        assert_eq!(stats.sd, vec![1.0]);
    }

    #[test]
    fn normalize_constant_channel_maps_to_zero() {
        let ds = LabeledDataset::new(
            Mat::from_vec(3, 2, vec![5.0, 1.0, 5.0, 2.0, 5.0, 3.0]),
            Labels::Class(vec![0, 1, 0]),
            Role::Train,
        )
        .unwrap();
        let (norm, _) = normalize_channelwise(&ds).unwrap();
        for i in 0..3 {
            assert_eq!(norm.inputs[(i, 0)], 0.0);
        }
    }

    #[test]
    fn train_stats_leave_test_mean_nonzero() {
        let train = LabeledDataset::new(
            Mat::from_vec(2, 1, vec![0.0, 2.0]),
            Labels::Class(vec![0, 1]),
            Role::Train,
        )
        .unwrap();
        let test = LabeledDataset::new(
            Mat::from_vec(2, 1, vec![10.0, 12.0]),
            Labels::Class(vec![0, 1]),
            Role::Test,
        )
        .unwrap();
        let (_, stats) = normalize_channelwise(&train).unwrap();
        let mapped = apply_channel_stats(&test, &stats).unwrap();
        let mean: f64 = mapped.inputs.data().iter().sum::<f64>() / 2.0;
        assert!(mean.abs() > 1.0);
    }

    #[test]
    fn two_class_attack_flips_every_label() {
        let ds = LabeledDataset::new(
            Mat::from_vec(4, 1, vec![0.0, 1.0, 2.0, 3.0]),
            Labels::Class(vec![0, 1, 1, 0]),
            Role::Train,
        )
        .unwrap();
        let attack = build_attack_set(&AttackSpec { source: &ds, relabel_seed: 3, num_classes: 2 }).unwrap();
        assert_eq!(attack.labels.classes().unwrap(), &[1, 0, 0, 1]);
        assert_eq!(attack.role, Role::Attack);
    }

    #[test]
    fn attack_rejects_binary_degenerate() {
        let ds = LabeledDataset::new(Mat::from_vec(1, 1, vec![0.0]), Labels::Class(vec![0]), Role::Train).unwrap();
        assert!(build_attack_set(&AttackSpec { source: &ds, relabel_seed: 0, num_classes: 1 }).is_err());
    }

    #[test]
    fn attack_wrong_labels_roughly_uniform() {
        // 10 classes, 1000 samples: chi-square over the 9 wrong labels per
        // source class, pooled. dof = 9·10 − 10 = 80;99th percentile ≈ 112.3.
        let n = 1000;
        let classes: Vec<usize> = (0..n).map(|i| i % 10).collect();
        let ds = LabeledDataset::new(Mat::zeros(n, 1), Labels::Class(classes.clone()), Role::Train).unwrap();
        let attack = build_attack_set(&AttackSpec { source: &ds, relabel_seed: 11, num_classes: 10 }).unwrap();
        let wrong = attack.labels.classes().unwrap();
        let mut chi2 = 0.0;
        for orig in 0..10 {
            let idx: Vec<usize> = (0..n).filter(|&i| classes[i] == orig).collect();
            let expected = idx.len() as f64 / 9.0;
            for lab in 0..10 {
                if lab == orig {
                    continue;
                }
                let count = idx.iter().filter(|&&i| wrong[i] == lab).count() as f64;
                chi2 += (count - expected) * (count - expected) / expected;
            }
        }
        assert!(chi2 < 112.3, "chi-square {chi2} too large for uniform wrong labels");
    }

    #[test]
    fn split_partitions_in_order() {
        let ds = gen_poly(10, 0.0, 1).unwrap();
        let (head, tail) = split_first_n(&ds, 10).unwrap();
        assert_eq!(head.len(), 10);
        assert!(tail.is_empty());
        let (head, tail) = split_first_n(&ds, 3).unwrap();
        assert_eq!(head.len(), 3);
        assert_eq!(tail.len(), 7);
        assert_eq!(head.inputs.row(2), ds.inputs.row(2));
        assert_eq!(tail.inputs.row(0), ds.inputs.row(3));
        assert!(split_first_n(&ds, 0).is_err());
        assert!(split_first_n(&ds, 11).is_err());
    }

    #[test]
    fn idx_fixture_roundtrips_exactly() {
        let dir = tempfile::tempdir().unwrap();
        let img1 = dir.path().join("a-images.idx");
        let lab1 = dir.path().join("a-labels.idx");
        // 3 hand-crafted 2x2 images.
        idx::write_idx(&img1, &[3, 2, 2], &[0, 64, 128, 255, 1, 2, 3, 4, 250, 251, 252, 253]).unwrap();
        idx::write_idx(&lab1, &[3], &[7, 0, 9]).unwrap();
        let ds = load_idx(&img1, &lab1).unwrap();
        assert_eq!(ds.len(), 3);
        assert_eq!(ds.inputs[(0, 3)], 1.0);
        assert_eq!(ds.labels.classes().unwrap(), &[7, 0, 9]);

        let img2 = dir.path().join("b-images.idx");
        let lab2 = dir.path().join("b-labels.idx");
        save_idx(&ds, &img2, &lab2, 2, 2).unwrap();
        assert_eq!(std::fs::read(&img1).unwrap(), std::fs::read(&img2).unwrap());
        assert_eq!(std::fs::read(&lab1).unwrap(), std::fs::read(&lab2).unwrap());

        let reloaded = load_idx(&img2, &lab2).unwrap();
        assert_eq!(reloaded.inputs.data(), ds.inputs.data());
    }

    #[test]
    fn idx_count_mismatch_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let img = dir.path().join("images.idx");
        let lab = dir.path().join("labels.idx");
        idx::write_idx(&img, &[2, 1, 1], &[1, 2]).unwrap();
        idx::write_idx(&lab, &[3], &[0, 1, 2]).unwrap();
        let err = load_idx(&img, &lab).unwrap_err();
        assert!(err.to_string().contains("2 images but 3 labels"), "{err}");
    }

    #[test]
    fn synthetic_images_are_deterministic_and_clamped() {
        let spec = SyntheticImageSpec { n: 40, ..Default::default() };
        let a = gen_image_classes(&spec).unwrap();
        let b = gen_image_classes(&spec).unwrap();
        assert_eq!(a.inputs.data(), b.inputs.data());
        assert!(a.inputs.data().iter().all(|&x| (0.0..=1.0).contains(&x)));
        assert_eq!(a.labels.classes().unwrap()[..10], (0..10).collect::<Vec<_>>()[..]);
    }
}
