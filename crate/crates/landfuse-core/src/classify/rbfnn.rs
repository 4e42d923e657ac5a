//! Radial basis function network: per-class k-means centers (so clusters
//! never mix classes), widths from the member distance spread, and output
//! weights from a ridge-stabilized least-squares fit to one-hot targets.

#[allow(unused_imports)]
use num_traits::Float;

use alloc::vec;
use alloc::vec::Vec;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::linalg::{self, dist_sq, Matrix};
use crate::seed::stage_rng;

use super::{argmax_class, TrainError, TrainingSet};

#[derive(Debug, Clone)]
pub struct RbfnnParams {
    pub centers_per_class: usize,
    pub kmeans_max_iter: usize,
    pub kmeans_tol: f64,
    pub ridge: f64,
}

impl Default for RbfnnParams {
    fn default() -> Self {
        RbfnnParams { centers_per_class: 5, kmeans_max_iter: 100, kmeans_tol: 1e-6, ridge: 1e-8 }
    }
}

#[derive(Debug, Clone)]
pub struct RbfnnModel {
    /// Hidden-unit centers as rows.
    pub centers: Matrix,
    /// Gaussian width per center.
    pub widths: Vec<f64>,
    /// Output weights, (centers + 1) x K; the last row is the bias.
    pub weights: Matrix,
    pub num_classes: u16,
}

/// K-means with k-means++ seeding; returns centers and member lists.
/// Clusters that end up empty are dropped.
fn kmeans(
    points: &[&[f64]],
    k: usize,
    rng: &mut ChaCha8Rng,
    max_iter: usize,
    tol: f64,
) -> Vec<(Vec<f64>, Vec<usize>)> {
    let n = points.len();
    let d = points[0].len();
    let k = k.min(n);
    // k-means++: first center uniform, the rest sampled with probability
    // proportional to the squared distance to the nearest chosen center.
    let mut centers: Vec<Vec<f64>> = Vec::with_capacity(k);
    centers.push(points[rng.random_range(0..n)].to_vec());
    let mut d2: Vec<f64> = points.iter().map(|p| dist_sq(p, &centers[0])).collect();
    while centers.len() < k {
        let total: f64 = d2.iter().sum();
        let chosen = if total <= 0.0 {
            // All remaining points coincide with a center; any index works.
            rng.random_range(0..n)
        } else {
            let mut target = rng.random_range(0.0..total);
            let mut pick = n - 1;
            for (i, &w) in d2.iter().enumerate() {
                if target < w {
                    pick = i;
                    break;
                }
                target -= w;
            }
            pick
        };
        centers.push(points[chosen].to_vec());
        for (i, p) in points.iter().enumerate() {
            d2[i] = d2[i].min(dist_sq(p, centers.last().unwrap()));
        }
    }
    let mut assignment = vec![0usize; n];
    for _ in 0..max_iter {
        // Assign to the nearest center, smallest index on ties.
        for (i, p) in points.iter().enumerate() {
            let mut best = 0usize;
            let mut best_d = dist_sq(p, &centers[0]);
            for (c, center) in centers.iter().enumerate().skip(1) {
                let dd = dist_sq(p, center);
                if dd < best_d {
                    best_d = dd;
                    best = c;
                }
            }
            assignment[i] = best;
        }
        // Recompute; empty clusters keep their position.
        let mut shift: f64 = 0.0;
        for (c, center) in centers.iter_mut().enumerate() {
            let members: Vec<usize> =
                (0..n).filter(|&i| assignment[i] == c).collect();
            if members.is_empty() {
                continue;
            }
            let mut new_center = vec![0.0; d];
            for &i in &members {
                for (slot, &v) in new_center.iter_mut().zip(points[i]) {
                    *slot += v;
                }
            }
            for slot in new_center.iter_mut() {
                *slot /= members.len() as f64;
            }
            shift = shift.max(dist_sq(center, &new_center).sqrt());
            *center = new_center;
        }
        if shift <= tol {
            break;
        }
    }
    // Final assignment and member collection.
    for (i, p) in points.iter().enumerate() {
        let mut best = 0usize;
        let mut best_d = dist_sq(p, &centers[0]);
        for (c, center) in centers.iter().enumerate().skip(1) {
            let dd = dist_sq(p, center);
            if dd < best_d {
                best_d = dd;
                best = c;
            }
        }
        assignment[i] = best;
    }
    centers
        .into_iter()
        .enumerate()
        .filter_map(|(c, center)| {
            let members: Vec<usize> = (0..n).filter(|&i| assignment[i] == c).collect();
            if members.is_empty() {
                None
            } else {
                Some((center, members))
            }
        })
        .collect()
}

/// Train the network. Centers come from a per-class k-means with
/// `k = min(centers_per_class, class count)`; each width is the population
/// standard deviation of the cluster members about their center (floored at
/// 1e-6, singleton clusters borrowing the median width of the others), and
/// the output weights solve the one-hot least-squares problem through the
/// normal equations with a small ridge.
pub fn train(set: &TrainingSet, params: &RbfnnParams, seed: u64) -> Result<RbfnnModel, TrainError> {
    let k = usize::from(set.num_classes());
    if set.len() < k {
        return Err(TrainError::TooFewSamples { needed: k, got: set.len() });
    }
    let mut rng = stage_rng(seed, "rbfnn-kmeans", 0);
    let mut centers: Vec<Vec<f64>> = Vec::new();
    let mut member_dists: Vec<Vec<f64>> = Vec::new();
    for class in 1..=set.num_classes() {
        let idx: Vec<usize> = (0..set.len()).filter(|&i| set.labels()[i] == class).collect();
        let points: Vec<&[f64]> = idx.iter().map(|&i| set.sample(i)).collect();
        let clusters = kmeans(
            &points,
            params.centers_per_class,
            &mut rng,
            params.kmeans_max_iter,
            params.kmeans_tol,
        );
        for (center, members) in clusters {
            let dists: Vec<f64> =
                members.iter().map(|&m| dist_sq(points[m], &center).sqrt()).collect();
            centers.push(center);
            member_dists.push(dists);
        }
    }
    // Widths: population standard deviation of the member samples about the
    // center (the RMS distance to the centroid); singletons borrow the
    // median of the multi-member widths.
    let mut widths = vec![0.0f64; centers.len()];
    let mut multi: Vec<f64> = Vec::new();
    for (c, dists) in member_dists.iter().enumerate() {
        if dists.len() >= 2 {
            let ms = dists.iter().map(|d| d * d).sum::<f64>() / dists.len() as f64;
            widths[c] = ms.sqrt().max(1e-6);
            multi.push(widths[c]);
        }
    }
    let fallback = if multi.is_empty() {
        1e-6
    } else {
        multi.sort_by(f64::total_cmp);
        let mid = multi.len() / 2;
        if multi.len() % 2 == 1 {
            multi[mid]
        } else {
            (multi[mid - 1] + multi[mid]) / 2.0
        }
    };
    for (c, dists) in member_dists.iter().enumerate() {
        if dists.len() < 2 {
            widths[c] = fallback;
        }
    }
    let c = centers.len();
    let mut center_matrix = Matrix::zeros(c, set.dimension());
    for (row, center) in centers.iter().enumerate() {
        center_matrix.row_mut(row).copy_from_slice(center);
    }
    // Design matrix with bias column, one-hot targets.
    let n = set.len();
    let mut design = Matrix::zeros(n, c + 1);
    for i in 0..n {
        for (j, center) in centers.iter().enumerate() {
            let w = widths[j];
            design.set(i, j, (-dist_sq(set.sample(i), center) / (2.0 * w * w)).exp());
        }
        design.set(i, c, 1.0);
    }
    let mut targets = Matrix::zeros(n, k);
    for i in 0..n {
        targets.set(i, usize::from(set.labels()[i]) - 1, 1.0);
    }
    // Normal equations (A'A + ridge I) W = A'T.
    let mut ata = Matrix::zeros(c + 1, c + 1);
    for i in 0..=c {
        for j in i..=c {
            let mut acc = 0.0;
            for r in 0..n {
                acc += design.get(r, i) * design.get(r, j);
            }
            ata.set(i, j, acc);
            ata.set(j, i, acc);
        }
    }
    for i in 0..=c {
        ata.set(i, i, ata.get(i, i) + params.ridge);
    }
    let mut atb = Matrix::zeros(c + 1, k);
    for i in 0..=c {
        for class in 0..k {
            let mut acc = 0.0;
            for r in 0..n {
                acc += design.get(r, i) * targets.get(r, class);
            }
            atb.set(i, class, acc);
        }
    }
    let weights = linalg::solve_systems(ata, atb)?;
    Ok(RbfnnModel { centers: center_matrix, widths, weights, num_classes: set.num_classes() })
}

/// Hidden activations plus bias for one input row.
pub fn activations(model: &RbfnnModel, x: &[f64]) -> Vec<f64> {
    let c = model.centers.rows();
    let mut a = Vec::with_capacity(c + 1);
    for j in 0..c {
        let w = model.widths[j];
        a.push((-dist_sq(model.centers.row(j), x) / (2.0 * w * w)).exp());
    }
    a.push(1.0);
    a
}

/// Output scores per class for one input row.
pub fn scores(model: &RbfnnModel, x: &[f64]) -> Vec<f64> {
    let a = activations(model, x);
    (0..usize::from(model.num_classes))
        .map(|class| {
            a.iter().enumerate().map(|(j, &aj)| aj * model.weights.get(j, class)).sum()
        })
        .collect()
}

/// Argmax of the output layer, smallest class id on ties.
pub fn predict(model: &RbfnnModel, x: &Matrix) -> Vec<u16> {
    (0..x.rows()).map(|r| argmax_class(&scores(model, x.row(r)))).collect()
}
