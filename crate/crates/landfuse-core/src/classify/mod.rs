//! Supervised classifiers over stacked feature vectors: a one-vs-one SVM
//! with an RBF kernel trained by SMO, a random forest of CART trees, and an
//! RBF network with per-class k-means centers.
//!
//! All trainers are deterministic functions of the training set, the
//! hyperparameters, and a seed; every tie (votes, argmax scores, grid
//! search) resolves toward the smallest class id or the smallest parameter.

pub mod forest;
pub mod rbfnn;
pub mod svm;

use alloc::vec;
use alloc::vec::Vec;
use thiserror::Error;

use crate::linalg::Matrix;

#[derive(Debug, Error, PartialEq)]
pub enum TrainError {
    #[error("labels and features disagree in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("class {0} has no training samples")]
    EmptyClass(u16),
    #[error("class label {0} outside 1..={1}")]
    LabelOutOfRange(u16, u16),
    #[error("training features contain non-finite values")]
    NonFinite,
    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("need at least 2 classes")]
    SingleClass,
    #[error("cross-validation grid is empty")]
    EmptyGrid,
    #[error("a cross-validation fold lost a class even under stratification")]
    FoldMissingClass,
    #[error("linear solve failed during training: {0}")]
    Solve(#[from] crate::linalg::LinalgError),
}

/// Labeled feature vectors; classes run 1..=num_classes and each one must
/// appear at least once.
#[derive(Debug, Clone)]
pub struct TrainingSet {
    x: Matrix,
    y: Vec<u16>,
    num_classes: u16,
}

impl TrainingSet {
    pub fn new(x: Matrix, y: Vec<u16>, num_classes: u16) -> Result<Self, TrainError> {
        if x.rows() != y.len() {
            return Err(TrainError::LengthMismatch(x.rows(), y.len()));
        }
        if !x.is_finite() {
            return Err(TrainError::NonFinite);
        }
        let mut seen = vec![false; usize::from(num_classes) + 1];
        for &label in &y {
            if label == 0 || label > num_classes {
                return Err(TrainError::LabelOutOfRange(label, num_classes));
            }
            seen[usize::from(label)] = true;
        }
        if let Some(missing) = (1..=num_classes).find(|&c| !seen[usize::from(c)]) {
            return Err(TrainError::EmptyClass(missing));
        }
        Ok(TrainingSet { x, y, num_classes })
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    #[inline]
    pub fn dimension(&self) -> usize {
        self.x.cols()
    }

    #[inline]
    pub fn num_classes(&self) -> u16 {
        self.num_classes
    }

    #[inline]
    pub fn features(&self) -> &Matrix {
        &self.x
    }

    #[inline]
    pub fn labels(&self) -> &[u16] {
        &self.y
    }

    #[inline]
    pub fn sample(&self, i: usize) -> &[f64] {
        self.x.row(i)
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0usize; usize::from(self.num_classes) + 1];
        for &label in &self.y {
            counts[usize::from(label)] += 1;
        }
        counts
    }

    /// Subset by sample indices.
    pub fn subset(&self, indices: &[usize]) -> TrainingSet {
        let mut x = Matrix::zeros(indices.len(), self.dimension());
        let mut y = Vec::with_capacity(indices.len());
        for (row, &i) in indices.iter().enumerate() {
            x.row_mut(row).copy_from_slice(self.x.row(i));
            y.push(self.y[i]);
        }
        TrainingSet { x, y, num_classes: self.num_classes }
    }
}

/// Classifier selector shared by the CLI and the model container.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClassifierKind {
    Svm,
    RandomForest,
    Rbfnn,
}

impl ClassifierKind {
    pub fn name(&self) -> &'static str {
        match self {
            ClassifierKind::Svm => "svm",
            ClassifierKind::RandomForest => "rf",
            ClassifierKind::Rbfnn => "rbfnn",
        }
    }
}

/// Argmax over class scores with ties resolving to the smallest class id.
/// `scores[k]` belongs to class `k + 1`.
pub(crate) fn argmax_class(scores: &[f64]) -> u16 {
    let mut best = 0usize;
    for (i, &s) in scores.iter().enumerate().skip(1) {
        if s > scores[best] {
            best = i;
        }
    }
    best as u16 + 1
}

/// Vote-count argmax with the same smallest-id tie rule.
pub(crate) fn argmax_votes(votes: &[u32]) -> u16 {
    let mut best = 0usize;
    for (i, &v) in votes.iter().enumerate().skip(1) {
        if v > votes[best] {
            best = i;
        }
    }
    best as u16 + 1
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn training_set_validation() {
        let x = Matrix::from_vec(3, 1, vec![0.0, 1.0, 2.0]).unwrap();
        assert!(TrainingSet::new(x.clone(), vec![1, 2, 1], 2).is_ok());
        assert_eq!(
            TrainingSet::new(x.clone(), vec![1, 1, 1], 2).unwrap_err(),
            TrainError::EmptyClass(2)
        );
        assert_eq!(
            TrainingSet::new(x.clone(), vec![1, 2, 3], 2).unwrap_err(),
            TrainError::LabelOutOfRange(3, 2)
        );
        assert_eq!(
            TrainingSet::new(x.clone(), vec![1, 2], 2).unwrap_err(),
            TrainError::LengthMismatch(3, 2)
        );
        let bad = Matrix::from_vec(2, 1, vec![f64::NAN, 0.0]).unwrap();
        assert_eq!(
            TrainingSet::new(bad, vec![1, 2], 2).unwrap_err(),
            TrainError::NonFinite
        );
    }

    #[test]
    fn tie_breaks_pick_smallest_class() {
        assert_eq!(argmax_class(&[1.0, 1.0, 0.5]), 1);
        assert_eq!(argmax_votes(&[3, 5, 5]), 2);
    }
}
