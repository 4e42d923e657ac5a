//! Accuracy assessment: confusion matrices, overall/average accuracy and
//! Cohen's kappa, and the per-class train/test split of reference pixels.

#[allow(unused_imports)]
use num_traits::Float;

use alloc::vec;
use alloc::vec::Vec;
use rand::Rng;
use thiserror::Error;

use crate::raster::ClassMap;
use crate::seed::stage_rng;

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("confusion matrix is empty")]
    EmptyMatrix,
    #[error("true and predicted label lists differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("label {0} outside 1..={1}")]
    LabelOutOfRange(u16, u16),
    #[error("class {class} has only {count} labeled pixels (need more than {min})")]
    ClassTooSmall { class: u16, count: usize, min: usize },
    #[error("training fraction {0} outside (0, 1]")]
    BadFraction(f64),
}

/// K x K count matrix; rows index the reference (true) class, columns the
/// predicted class.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionMatrix {
    k: usize,
    counts: Vec<u64>,
}

impl ConfusionMatrix {
    pub fn new(k: usize) -> Self {
        ConfusionMatrix { k, counts: vec![0; k * k] }
    }

    pub fn from_labels(
        truth: &[u16],
        predicted: &[u16],
        num_classes: u16,
    ) -> Result<Self, MetricsError> {
        if truth.len() != predicted.len() {
            return Err(MetricsError::LengthMismatch(truth.len(), predicted.len()));
        }
        let mut cm = ConfusionMatrix::new(usize::from(num_classes));
        for (&t, &p) in truth.iter().zip(predicted) {
            for v in [t, p] {
                if v == 0 || v > num_classes {
                    return Err(MetricsError::LabelOutOfRange(v, num_classes));
                }
            }
            cm.record(t, p);
        }
        Ok(cm)
    }

    #[inline]
    pub fn classes(&self) -> usize {
        self.k
    }

    #[inline]
    pub fn record(&mut self, truth: u16, predicted: u16) {
        self.counts[(usize::from(truth) - 1) * self.k + usize::from(predicted) - 1] += 1;
    }

    #[inline]
    pub fn get(&self, truth: usize, predicted: usize) -> u64 {
        self.counts[truth * self.k + predicted]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn row_sum(&self, truth: usize) -> u64 {
        (0..self.k).map(|p| self.get(truth, p)).sum()
    }

    pub fn col_sum(&self, predicted: usize) -> u64 {
        (0..self.k).map(|t| self.get(t, predicted)).sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.k).map(|i| self.get(i, i)).sum()
    }

    /// Element-wise sum, for pooling runs.
    pub fn merge(&mut self, other: &ConfusionMatrix) {
        debug_assert_eq!(self.k, other.k);
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
    }
}

/// Summary accuracy figures of one confusion matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Metrics {
    /// Overall accuracy: trace / total.
    pub oa: f64,
    /// Average accuracy: mean per-class recall over non-empty rows.
    pub aa: f64,
    /// Cohen's kappa: (p_o - p_e) / (1 - p_e).
    pub kappa: f64,
    /// Set when p_e = 1 forced the kappa convention (1 for perfect
    /// agreement, else 0).
    pub degenerate_kappa: bool,
}

/// OA, AA and kappa of a confusion matrix.
pub fn metrics(cm: &ConfusionMatrix) -> Result<Metrics, MetricsError> {
    let total = cm.total();
    if total == 0 {
        return Err(MetricsError::EmptyMatrix);
    }
    let t = total as f64;
    let oa = cm.trace() as f64 / t;
    let mut recall_sum = 0.0;
    let mut populated = 0usize;
    for class in 0..cm.classes() {
        let row = cm.row_sum(class);
        if row > 0 {
            recall_sum += cm.get(class, class) as f64 / row as f64;
            populated += 1;
        }
    }
    let aa = recall_sum / populated.max(1) as f64;
    let pe = (0..cm.classes())
        .map(|i| cm.row_sum(i) as f64 * cm.col_sum(i) as f64)
        .sum::<f64>()
        / (t * t);
    let (kappa, degenerate) = if (1.0 - pe).abs() < 1e-15 {
        (if (oa - 1.0).abs() < 1e-15 { 1.0 } else { 0.0 }, true)
    } else {
        ((oa - pe) / (1.0 - pe), false)
    };
    Ok(Metrics { oa, aa, kappa, degenerate_kappa: degenerate })
}

/// Parameters of the reference-sample split.
#[derive(Debug, Clone, Copy)]
pub struct SplitParams {
    /// Fraction of each class drawn for training.
    pub fraction: f64,
    /// Per-class floor on the training count.
    pub min_per_class: usize,
}

impl Default for SplitParams {
    fn default() -> Self {
        SplitParams { fraction: 0.01, min_per_class: 20 }
    }
}

/// Train/test split over the labeled pixels of a class map.
#[derive(Debug, Clone)]
pub struct ReferenceSplit {
    /// Flat pixel indices of the training samples, ascending.
    pub train: Vec<usize>,
    /// Flat pixel indices of the test samples, ascending.
    pub test: Vec<usize>,
    /// Set when some class contributed every pixel to training.
    pub empty_test_warning: bool,
}

/// Split the labeled pixels: per class, `max(round(fraction * n), min)`
/// samples drawn uniformly without replacement become training, the rest
/// test. Rounding is half-up. Classes are drawn in ascending id order from
/// one seeded stream, so the split is a deterministic function of
/// `(map, params, seed)`.
pub fn split_reference(
    map: &ClassMap,
    params: &SplitParams,
    seed: u64,
) -> Result<ReferenceSplit, MetricsError> {
    if !(params.fraction > 0.0 && params.fraction <= 1.0) {
        return Err(MetricsError::BadFraction(params.fraction));
    }
    let mut per_class: Vec<Vec<usize>> = vec![Vec::new(); usize::from(map.num_classes()) + 1];
    for (p, &label) in map.labels().iter().enumerate() {
        if label > 0 {
            per_class[usize::from(label)].push(p);
        }
    }
    let mut rng = stage_rng(seed, "split-reference", 0);
    let mut train = Vec::new();
    let mut test = Vec::new();
    let mut empty_test_warning = false;
    for (class, pool) in per_class.iter_mut().enumerate().skip(1) {
        let n = pool.len();
        if n <= params.min_per_class {
            return Err(MetricsError::ClassTooSmall {
                class: class as u16,
                count: n,
                min: params.min_per_class,
            });
        }
        let wanted = (params.fraction * n as f64 + 0.5).floor() as usize;
        let n_train = wanted.max(params.min_per_class).min(n);
        if n_train == n {
            empty_test_warning = true;
        }
        for i in 0..n_train {
            let j = rng.random_range(i..n);
            pool.swap(i, j);
        }
        train.extend_from_slice(&pool[..n_train]);
        test.extend_from_slice(&pool[n_train..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok(ReferenceSplit { train, test, empty_test_warning })
}

/// Per-class training counts the split would draw from the given pool
/// sizes, without materializing a map.
pub fn training_counts(pool_sizes: &[usize], params: &SplitParams) -> Vec<usize> {
    pool_sizes
        .iter()
        .map(|&n| {
            let wanted = (params.fraction * n as f64 + 0.5).floor() as usize;
            wanted.max(params.min_per_class).min(n)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::raster::ClassMap;

    fn cm(k: usize, entries: &[&[u64]]) -> ConfusionMatrix {
        let mut m = ConfusionMatrix::new(k);
        for (t, row) in entries.iter().enumerate() {
            for (p, &count) in row.iter().enumerate() {
                for _ in 0..count {
                    m.record(t as u16 + 1, p as u16 + 1);
                }
            }
        }
        m
    }

    #[test]
    fn perfect_prediction_is_diagonal() {
        let m = ConfusionMatrix::from_labels(&[1, 2, 3, 1], &[1, 2, 3, 1], 3).unwrap();
        assert_eq!(m.trace(), 4);
        assert_eq!(m.total(), 4);
        let s = metrics(&m).unwrap();
        assert_eq!((s.oa, s.aa, s.kappa), (1.0, 1.0, 1.0));
    }

    #[test]
    fn all_predicted_first_class_fills_first_column() {
        let m = ConfusionMatrix::from_labels(&[1, 2, 2, 3], &[1, 1, 1, 1], 3).unwrap();
        assert_eq!(m.col_sum(0), 4);
        assert_eq!(m.col_sum(1), 0);
    }

    #[test]
    fn counting_matches_hand_tally() {
        use rand::Rng;
        let mut rng = crate::seed::stage_rng(51, "test-confusion", 0);
        let truth: Vec<u16> = (0..500).map(|_| rng.random_range(1..=4)).collect();
        let pred: Vec<u16> = (0..500).map(|_| rng.random_range(1..=4)).collect();
        let m = ConfusionMatrix::from_labels(&truth, &pred, 4).unwrap();
        for t in 0..4u16 {
            for p in 0..4u16 {
                let count = truth
                    .iter()
                    .zip(&pred)
                    .filter(|&(&a, &b)| a == t + 1 && b == p + 1)
                    .count() as u64;
                assert_eq!(m.get(usize::from(t), usize::from(p)), count);
            }
        }
    }

    #[test]
    fn known_metrics_fixture() {
        // p_o = 0.8, p_e = 0.5 -> kappa 0.6; recalls 0.9 and 0.7 -> aa 0.8.
        let m = cm(2, &[&[45, 5], &[15, 35]]);
        let s = metrics(&m).unwrap();
        assert!((s.oa - 0.80).abs() < 1e-12);
        assert!((s.aa - 0.80).abs() < 1e-12);
        assert!((s.kappa - 0.60).abs() < 1e-12);
    }

    #[test]
    fn anti_diagonal_kappa_is_minus_one() {
        let m = cm(2, &[&[0, 10], &[10, 0]]);
        let s = metrics(&m).unwrap();
        assert_eq!(s.oa, 0.0);
        assert!((s.kappa + 1.0).abs() < 1e-12);
    }

    #[test]
    fn degenerate_single_class_kappa() {
        // Truth and prediction both concentrated in one class: p_e = 1.
        let m = cm(2, &[&[10, 0], &[0, 0]]);
        let s = metrics(&m).unwrap();
        assert!(s.degenerate_kappa);
        assert_eq!(s.kappa, 1.0);
        // Mass split across row 1 / column 2 keeps p_e = 0: plain kappa 0.
        let m2 = cm(2, &[&[0, 10], &[0, 0]]);
        let s2 = metrics(&m2).unwrap();
        assert!(!s2.degenerate_kappa);
        assert_eq!(s2.kappa, 0.0);
    }

    #[test]
    fn aa_skips_empty_rows() {
        let m = cm(3, &[&[8, 2, 0], &[0, 0, 0], &[1, 0, 9]]);
        let s = metrics(&m).unwrap();
        assert!((s.aa - (0.8 + 0.9) / 2.0).abs() < 1e-12);
    }

    #[test]
    fn metric_bounds_on_random_matrices() {
        use rand::Rng;
        let mut rng = crate::seed::stage_rng(52, "test-bounds", 0);
        for _ in 0..2000 {
            let k = rng.random_range(2..6);
            let mut m = ConfusionMatrix::new(k);
            let mut total = 0u64;
            for t in 0..k {
                for p in 0..k {
                    let c = rng.random_range(0..20u64);
                    for _ in 0..c {
                        m.record(t as u16 + 1, p as u16 + 1);
                    }
                    total += c;
                }
            }
            if total == 0 {
                continue;
            }
            let s = metrics(&m).unwrap();
            assert!((0.0..=1.0).contains(&s.oa));
            assert!((0.0..=1.0).contains(&s.aa));
            assert!((-1.0..=1.0).contains(&s.kappa));
        }
    }

    fn map_with_counts(counts: &[usize]) -> ClassMap {
        let total: usize = counts.iter().sum();
        let cols = 101;
        let rows = total / cols + 1;
        let mut labels = vec![0u16; rows * cols];
        let mut at = 0;
        for (class, &n) in counts.iter().enumerate() {
            for _ in 0..n {
                labels[at] = class as u16 + 1;
                at += 1;
            }
        }
        ClassMap::new(rows, cols, counts.len() as u16, labels).unwrap()
    }

    #[test]
    fn split_reproduces_study_counts() {
        // Pool sizes from the six-class reference with 1% / min-20 rules.
        let pools = [290, 2166, 4186, 1108, 2927, 838];
        let wanted = [20, 22, 42, 20, 29, 20];
        let counts = training_counts(&pools, &SplitParams::default());
        assert_eq!(counts, wanted);
        let map = map_with_counts(&pools);
        let split = split_reference(&map, &SplitParams::default(), 0).unwrap();
        let mut per_class = vec![0usize; 6];
        for &p in &split.train {
            per_class[usize::from(map.labels()[p]) - 1] += 1;
        }
        assert_eq!(per_class, wanted);
        assert_eq!(split.train.len() + split.test.len(), pools.iter().sum::<usize>());
    }

    #[test]
    fn split_is_disjoint_and_exhaustive() {
        let map = map_with_counts(&[50, 80, 120]);
        let split = split_reference(&map, &SplitParams::default(), 7).unwrap();
        let mut all: Vec<usize> = split.train.iter().chain(&split.test).copied().collect();
        all.sort_unstable();
        let labeled: Vec<usize> = (0..map.labels().len())
            .filter(|&p| map.labels()[p] > 0)
            .collect();
        assert_eq!(all, labeled);
        let overlap = split.train.iter().filter(|p| split.test.contains(p)).count();
        assert_eq!(overlap, 0);
    }

    #[test]
    fn full_fraction_empties_test_with_warning() {
        let map = map_with_counts(&[30, 40]);
        let params = SplitParams { fraction: 1.0, min_per_class: 20 };
        let split = split_reference(&map, &params, 3).unwrap();
        assert!(split.test.is_empty());
        assert!(split.empty_test_warning);
    }

    #[test]
    fn small_class_is_rejected() {
        let map = map_with_counts(&[20, 100]);
        assert_eq!(
            split_reference(&map, &SplitParams::default(), 0).unwrap_err(),
            MetricsError::ClassTooSmall { class: 1, count: 20, min: 20 }
        );
    }

    #[test]
    fn split_deterministic_per_seed() {
        let map = map_with_counts(&[60, 90]);
        let a = split_reference(&map, &SplitParams::default(), 5).unwrap();
        let b = split_reference(&map, &SplitParams::default(), 5).unwrap();
        assert_eq!(a.train, b.train);
        let c = split_reference(&map, &SplitParams::default(), 6).unwrap();
        assert_ne!(a.train, c.train);
    }
}
