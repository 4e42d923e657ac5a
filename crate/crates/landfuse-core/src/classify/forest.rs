//! Random forest of CART trees: bootstrap sampling, Gini splits over
//! ceil(sqrt(d)) candidate features per node, majority voting.

#[allow(unused_imports)]
use num_traits::Float;

use alloc::vec;
use alloc::vec::Vec;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::linalg::Matrix;
use crate::seed::{derive_seed, stage_rng};

use super::{argmax_votes, TrainError, TrainingSet};

#[derive(Debug, Clone)]
pub struct ForestParams {
    pub trees: usize,
    /// Candidate features per node; defaults to ceil(sqrt(d)).
    pub mtry: Option<usize>,
    /// Nodes with fewer samples become leaves.
    pub min_samples_split: usize,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams { trees: 200, mtry: None, min_samples_split: 2 }
    }
}

/// Tree node: either a threshold split or a leaf carrying class votes.
#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Split { feature: u32, threshold: f64, left: u32, right: u32 },
    Leaf { counts: Vec<u32> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    /// Class voted by this tree (leaf-majority, smallest id on ties).
    pub fn predict(&self, x: &[f64]) -> u16 {
        let mut at = 0usize;
        loop {
            match &self.nodes[at] {
                Node::Split { feature, threshold, left, right } => {
                    at = if x[*feature as usize] <= *threshold {
                        *left as usize
                    } else {
                        *right as usize
                    };
                }
                Node::Leaf { counts } => return argmax_votes(counts),
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForestModel {
    pub num_classes: u16,
    pub dimension: usize,
    pub trees: Vec<Tree>,
    /// Per-tree bootstrap seed, derived from the training seed.
    pub seeds: Vec<u64>,
}

fn gini(counts: &[u32], total: u32) -> f64 {
    if total == 0 {
        return 0.0;
    }
    let t = f64::from(total);
    1.0 - counts.iter().map(|&c| (f64::from(c) / t).powi(2)).sum::<f64>()
}

struct TreeBuilder<'a> {
    set: &'a TrainingSet,
    mtry: usize,
    min_samples_split: usize,
    nodes: Vec<Node>,
}

impl<'a> TreeBuilder<'a> {
    /// Grow a node over `samples` (indices into the training set, possibly
    /// repeated by the bootstrap). Returns the node id.
    fn grow(&mut self, samples: &mut [usize], rng: &mut ChaCha8Rng) -> u32 {
        let k = usize::from(self.set.num_classes());
        let mut counts = vec![0u32; k];
        for &i in samples.iter() {
            counts[usize::from(self.set.labels()[i]) - 1] += 1;
        }
        let total = samples.len() as u32;
        let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
        if pure || samples.len() < self.min_samples_split {
            self.nodes.push(Node::Leaf { counts });
            return self.nodes.len() as u32 - 1;
        }
        // Sample mtry candidate features without replacement, then evaluate
        // them in ascending index order so the tie rule (smallest feature,
        // then smallest threshold) is order-independent.
        let d = self.set.dimension();
        let mut features: Vec<usize> = (0..d).collect();
        for i in 0..self.mtry.min(d) {
            let j = rng.random_range(i..d);
            features.swap(i, j);
        }
        let mut candidates = features[..self.mtry.min(d)].to_vec();
        candidates.sort_unstable();

        let parent_gini = gini(&counts, total);
        let mut best: Option<(usize, f64, f64)> = None; // feature, threshold, decrease
        let mut values: Vec<(f64, u16)> = Vec::with_capacity(samples.len());
        for &f in &candidates {
            values.clear();
            values.extend(
                samples.iter().map(|&i| (self.set.features().get(i, f), self.set.labels()[i])),
            );
            values.sort_by(|a, b| a.0.total_cmp(&b.0));
            let mut left_counts = vec![0u32; k];
            let mut left_total = 0u32;
            for w in 0..values.len() - 1 {
                left_counts[usize::from(values[w].1) - 1] += 1;
                left_total += 1;
                if values[w].0 == values[w + 1].0 {
                    continue;
                }
                let threshold = (values[w].0 + values[w + 1].0) / 2.0;
                let mut right_counts = counts.clone();
                for (rc, lc) in right_counts.iter_mut().zip(&left_counts) {
                    *rc -= lc;
                }
                let right_total = total - left_total;
                let weighted = (f64::from(left_total) * gini(&left_counts, left_total)
                    + f64::from(right_total) * gini(&right_counts, right_total))
                    / f64::from(total);
                let decrease = parent_gini - weighted;
                let better = match best {
                    None => decrease > 0.0,
                    Some((_, _, best_dec)) => decrease > best_dec,
                };
                if better {
                    best = Some((f, threshold, decrease));
                }
            }
        }
        let Some((feature, threshold, _)) = best else {
            self.nodes.push(Node::Leaf { counts });
            return self.nodes.len() as u32 - 1;
        };
        // Partition in place around the threshold, preserving relative order.
        let mut left: Vec<usize> = Vec::new();
        let mut right: Vec<usize> = Vec::new();
        for &i in samples.iter() {
            if self.set.features().get(i, feature) <= threshold {
                left.push(i);
            } else {
                right.push(i);
            }
        }
        let at = self.nodes.len();
        self.nodes.push(Node::Leaf { counts: Vec::new() }); // placeholder
        let left_id = self.grow(&mut left, rng);
        let right_id = self.grow(&mut right, rng);
        self.nodes[at] = Node::Split {
            feature: feature as u32,
            threshold,
            left: left_id,
            right: right_id,
        };
        at as u32
    }
}

/// Train the forest: each tree bootstraps `n` samples with replacement from
/// its own derived seed and grows fully (stop on purity or fewer than two
/// samples).
pub fn train(set: &TrainingSet, params: &ForestParams, seed: u64) -> Result<ForestModel, TrainError> {
    if set.len() < 2 {
        return Err(TrainError::TooFewSamples { needed: 2, got: set.len() });
    }
    let d = set.dimension();
    let mtry = params.mtry.unwrap_or_else(|| (d as f64).sqrt().ceil() as usize).max(1);
    let n = set.len();
    let mut trees = Vec::with_capacity(params.trees);
    let mut seeds = Vec::with_capacity(params.trees);
    for t in 0..params.trees {
        let tree_seed = derive_seed(seed, "tree", t as u64);
        seeds.push(tree_seed);
        let mut rng = stage_rng(tree_seed, "bootstrap", 0);
        let mut samples: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
        let mut builder = TreeBuilder {
            set,
            mtry,
            min_samples_split: params.min_samples_split,
            nodes: Vec::new(),
        };
        let root = builder.grow(&mut samples, &mut rng);
        debug_assert_eq!(root, 0);
        trees.push(Tree { nodes: builder.nodes });
    }
    Ok(ForestModel { num_classes: set.num_classes(), dimension: d, trees, seeds })
}

/// Majority vote over the trees, smallest class id on ties.
pub fn predict(model: &ForestModel, x: &Matrix) -> Vec<u16> {
    (0..x.rows())
        .map(|r| {
            let row = x.row(r);
            let mut votes = vec![0u32; usize::from(model.num_classes)];
            for tree in &model.trees {
                votes[usize::from(tree.predict(row)) - 1] += 1;
            }
            argmax_votes(&votes)
        })
        .collect()
}
