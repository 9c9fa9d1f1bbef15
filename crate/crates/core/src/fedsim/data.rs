use std::f64::consts::PI;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

/// Distance between adjacent class means in feature space.
pub const CLASS_SEPARATION: f64 = 3.0;

/// Row-major feature matrix with one integer label per row.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: Vec<f64>,
    dim: usize,
    labels: Vec<usize>,
    num_classes: usize,
}

impl Dataset {
    pub fn new(features: Vec<f64>, dim: usize, labels: Vec<usize>, num_classes: usize) -> Result<Self> {
        if dim == 0 || num_classes == 0 {
            return Err(Error::domain("dataset needs dim >= 1 and num_classes >= 1"));
        }
        if features.len() != dim * labels.len() {
            return Err(Error::domain(format!(
                "{} feature values do not form {} rows of width {dim}",
                features.len(),
                labels.len()
            )));
        }
        if let Some(bad) = labels.iter().find(|&&l| l >= num_classes) {
            return Err(Error::domain(format!("label {bad} outside [0, {num_classes})")));
        }
        Ok(Self {
            features,
            dim,
            labels,
            num_classes,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.dim..(i + 1) * self.dim]
    }

    pub fn label(&self, i: usize) -> usize {
        self.labels[i]
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.num_classes];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }

    /// Rows at `indices`, in the given order.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        let mut features = Vec::with_capacity(indices.len() * self.dim);
        for &i in indices {
            features.extend_from_slice(self.row(i));
        }
        Dataset {
            features,
            dim: self.dim,
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            num_classes: self.num_classes,
        }
    }
}

/// Centre of class `k`. Classes sit on a circle in the first two feature
/// dimensions (on a line when `dim == 1`) with adjacent centres
/// [`CLASS_SEPARATION`] apart.
pub fn class_mean(k: usize, num_classes: usize, dim: usize) -> Vec<f64> {
    let mut mean = vec![0.0; dim];
    if num_classes < 2 {
        return mean;
    }
    if dim == 1 {
        mean[0] = CLASS_SEPARATION * (k as f64 - (num_classes - 1) as f64 / 2.0);
        return mean;
    }
    let radius = CLASS_SEPARATION / (2.0 * (PI / num_classes as f64).sin());
    let angle = 2.0 * PI * k as f64 / num_classes as f64;
    mean[0] = radius * angle.cos();
    mean[1] = radius * angle.sin();
    mean
}

/// Gaussian blobs with unit within-class variance. Labels cycle
/// `0, 1, .., K-1, 0, ..` so class counts differ by at most one.
pub fn make_synthetic(num_samples: usize, dim: usize, num_classes: usize, seed: u64) -> Result<Dataset> {
    if num_samples == 0 || dim == 0 || num_classes == 0 {
        return Err(Error::domain("num_samples, dim and num_classes must be at least 1"));
    }
    if num_classes > num_samples {
        return Err(Error::domain(format!(
            "cannot spread {num_samples} samples over {num_classes} classes"
        )));
    }
    let means: Vec<Vec<f64>> = (0..num_classes).map(|k| class_mean(k, num_classes, dim)).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut features = Vec::with_capacity(num_samples * dim);
    let mut labels = Vec::with_capacity(num_samples);
    for i in 0..num_samples {
        let label = i % num_classes;
        for &m in &means[label] {
            let noise: f64 = StandardNormal.sample(&mut rng);
            features.push(m + noise);
        }
        labels.push(label);
    }
    Dataset::new(features, dim, labels, num_classes)
}

/// Index sets of an IID split: seeded shuffle, then round-robin dealing.
/// Each shard keeps its indices in ascending order.
pub fn partition_indices(len: usize, n: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if n == 0 {
        return Err(Error::domain("need at least one shard"));
    }
    if n > len {
        return Err(Error::domain(format!("cannot split {len} samples into {n} shards")));
    }
    let mut order: Vec<usize> = (0..len).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut shards = vec![Vec::with_capacity(len / n + 1); n];
    for (pos, idx) in order.into_iter().enumerate() {
        shards[pos % n].push(idx);
    }
    for shard in &mut shards {
        shard.sort_unstable();
    }
    Ok(shards)
}

pub fn partition_iid(ds: &Dataset, n: usize, seed: u64) -> Result<Vec<Dataset>> {
    Ok(partition_indices(ds.len(), n, seed)?
        .iter()
        .map(|idx| ds.subset(idx))
        .collect())
}

/// Seeded train/held-out split; both sides keep the original row order.
pub fn split_holdout(ds: &Dataset, fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::domain(format!("holdout fraction must lie in (0, 1), got {fraction}")));
    }
    let test_len = ((ds.len() as f64) * fraction).round() as usize;
    if test_len == 0 || test_len >= ds.len() {
        return Err(Error::domain(format!(
            "holdout fraction {fraction} leaves an empty side for {} samples",
            ds.len()
        )));
    }
    let mut order: Vec<usize> = (0..ds.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let (test, train) = order.split_at_mut(test_len);
    train.sort_unstable();
    test.sort_unstable();
    Ok((ds.subset(train), ds.subset(test)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn synthetic_is_deterministic_and_balanced() {
        let a = make_synthetic(100, 2, 2, 7).unwrap();
        let b = make_synthetic(100, 2, 2, 7).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, make_synthetic(100, 2, 2, 8).unwrap());
        let counts = make_synthetic(103, 3, 4, 1).unwrap().class_counts();
        let (lo, hi) = (counts.iter().min().unwrap(), counts.iter().max().unwrap());
        assert!(hi - lo <= 1, "{counts:?}");
    }

    #[test]
    fn synthetic_rejects_bad_shapes() {
        assert!(make_synthetic(0, 2, 2, 0).is_err());
        assert!(make_synthetic(3, 2, 4, 0).is_err());
    }

    #[test]
    fn adjacent_means_are_separated() {
        for (k, d) in [(2, 2), (3, 2), (5, 4), (3, 1)] {
            for c in 0..k {
                let a = class_mean(c, k, d);
                let b = class_mean((c + 1) % k, k, d);
                let gap = a.iter().zip(&b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
                if d == 1 && c + 1 == k {
                    continue;
                }
                assert!((gap - CLASS_SEPARATION).abs() < 1e-9, "k={k} d={d}: {gap}");
            }
        }
    }

    /// Closed-form two-class LDA, fitted and scored on the same blobs.
    fn lda_accuracy(ds: &Dataset) -> f64 {
        let mut mean = [[0.0; 2]; 2];
        let counts = ds.class_counts();
        for i in 0..ds.len() {
            let k = ds.label(i);
            for (m, x) in mean[k].iter_mut().zip(ds.row(i)) {
                *m += x / counts[k] as f64;
            }
        }
        let mut cov = [[0.0; 2]; 2];
        for i in 0..ds.len() {
            let m = mean[ds.label(i)];
            let d = [ds.row(i)[0] - m[0], ds.row(i)[1] - m[1]];
            for r in 0..2 {
                for c in 0..2 {
                    cov[r][c] += d[r] * d[c] / (ds.len() - 2) as f64;
                }
            }
        }
        let det = cov[0][0] * cov[1][1] - cov[0][1] * cov[1][0];
        let inv = [[cov[1][1] / det, -cov[0][1] / det], [-cov[1][0] / det, cov[0][0] / det]];
        let diff = [mean[1][0] - mean[0][0], mean[1][1] - mean[0][1]];
        let w = [
            inv[0][0] * diff[0] + inv[0][1] * diff[1],
            inv[1][0] * diff[0] + inv[1][1] * diff[1],
        ];
        let mid = [(mean[0][0] + mean[1][0]) / 2.0, (mean[0][1] + mean[1][1]) / 2.0];
        let correct = (0..ds.len())
            .filter(|&i| {
                let x = ds.row(i);
                let score = w[0] * (x[0] - mid[0]) + w[1] * (x[1] - mid[1]);
                (score > 0.0) == (ds.label(i) == 1)
            })
            .count();
        correct as f64 / ds.len() as f64
    }

    #[test]
    fn blobs_are_linearly_separable_enough() {
        for seed in [0, 7, 42] {
            let acc = lda_accuracy(&make_synthetic(2000, 2, 2, seed).unwrap());
            assert!(acc > 0.9, "seed {seed}: {acc}");
        }
    }

    #[test]
    fn exact_division_partition() {
        let shards = partition_indices(100, 10, 3).unwrap();
        assert!(shards.iter().all(|s| s.len() == 10));
        let mut all: Vec<usize> = shards.concat();
        all.sort_unstable();
        assert_eq!(all, (0..100).collect::<Vec<_>>());
    }

    #[test]
    fn identity_partition() {
        let ds = make_synthetic(50, 3, 2, 5).unwrap();
        let shards = partition_iid(&ds, 1, 9).unwrap();
        assert_eq!(shards, vec![ds]);
    }

    #[test]
    fn too_many_shards() {
        assert!(partition_indices(5, 6, 0).is_err());
        assert!(partition_indices(5, 0, 0).is_err());
    }

    #[test]
    fn shards_track_global_class_mix() {
        // 200-sample shards: the binomial spread (about 3.5 pp) keeps every shard
        // well inside the band across all seeds.
        let ds = make_synthetic(2000, 2, 2, 11).unwrap();
        let global = ds.class_counts()[0] as f64 / ds.len() as f64;
        for seed in 0..50 {
            for shard in partition_iid(&ds, 10, seed).unwrap() {
                assert!(shard.len() >= 20);
                let share = shard.class_counts()[0] as f64 / shard.len() as f64;
                assert!((share - global).abs() <= 0.15 + 1e-12, "seed {seed}: {share}");
            }
        }
    }

    #[test]
    fn holdout_split_is_a_cover() {
        let ds = make_synthetic(100, 2, 2, 1).unwrap();
        let (train, test) = split_holdout(&ds, 0.2, 4).unwrap();
        assert_eq!((train.len(), test.len()), (80, 20));
        assert!(split_holdout(&ds, 1.0, 4).is_err());
        assert_eq!(split_holdout(&ds, 0.2, 4).unwrap(), (train, test));
    }

    proptest! {
        #[test]
        fn partition_is_disjoint_exact_cover(len in 1usize..300, n in 1usize..40, seed in any::<u64>()) {
            prop_assume!(n <= len);
            let shards = partition_indices(len, n, seed).unwrap();
            prop_assert_eq!(shards.len(), n);
            let sizes: Vec<usize> = shards.iter().map(Vec::len).collect();
            prop_assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
            let mut seen = vec![false; len];
            for idx in shards.iter().flatten() {
                prop_assert!(!seen[*idx]);
                seen[*idx] = true;
            }
            prop_assert!(seen.into_iter().all(|s| s));
        }
    }
}
