//! Support vector machine: RBF kernel, SMO solver with maximal-violating-
//! pair selection, one-vs-one multiclass voting, and 5-fold cross-validation
//! over a (C, gamma) grid.

#[allow(unused_imports)]
use num_traits::Float;

use alloc::vec;
use alloc::vec::Vec;
use rand::Rng;

use crate::linalg::{dist_sq, Matrix};
use crate::seed::stage_rng;

use super::{argmax_votes, TrainError, TrainingSet};

/// Hyperparameters and the model-selection grid.
#[derive(Debug, Clone)]
pub struct SvmParams {
    /// Box-constraint candidates, ascending.
    pub c_grid: Vec<f64>,
    /// RBF `gamma` candidates, ascending; kernel is `exp(-gamma ||x-y||^2)`.
    pub gamma_grid: Vec<f64>,
    pub folds: usize,
    /// SMO stops when the maximal KKT violation falls below this.
    pub kkt_tol: f64,
    /// Work cap per binary machine, counted in kernel evaluations.
    pub max_kernel_evals: u64,
}

impl Default for SvmParams {
    fn default() -> Self {
        SvmParams {
            // 4x-stepped grids: C in 2^-2..2^10, gamma in 2^-10..2^2.
            c_grid: (0..7).map(|i| 2f64.powi(-2 + 2 * i)).collect(),
            gamma_grid: (0..7).map(|i| 2f64.powi(-10 + 2 * i)).collect(),
            folds: 5,
            kkt_tol: 1e-3,
            max_kernel_evals: 1_000_000,
        }
    }
}

impl SvmParams {
    /// Single-combination parameters, skipping cross-validation.
    pub fn fixed(c: f64, gamma: f64) -> Self {
        SvmParams { c_grid: vec![c], gamma_grid: vec![gamma], ..SvmParams::default() }
    }
}

/// One trained binary machine of the one-vs-one ensemble.
#[derive(Debug, Clone)]
pub struct BinarySvm {
    /// Class voted for when the decision value is non-negative.
    pub class_pos: u16,
    pub class_neg: u16,
    /// Support vectors as rows.
    pub support_vectors: Matrix,
    /// Per support vector `alpha_i * y_i`.
    pub coefficients: Vec<f64>,
    pub bias: f64,
    pub converged: bool,
}

impl BinarySvm {
    /// Decision value `sum_i coeff_i k(sv_i, x) + b`.
    pub fn decision(&self, x: &[f64], gamma: f64) -> f64 {
        let mut acc = self.bias;
        for (i, coeff) in self.coefficients.iter().enumerate() {
            acc += coeff * (-gamma * dist_sq(self.support_vectors.row(i), x)).exp();
        }
        acc
    }
}

/// One-vs-one SVM ensemble with the selected kernel parameters.
#[derive(Debug, Clone)]
pub struct SvmModel {
    pub c: f64,
    pub gamma: f64,
    pub num_classes: u16,
    pub machines: Vec<BinarySvm>,
    /// Mean cross-validation accuracy of the selected grid point; 1.0 when
    /// the grid had a single combination and CV was skipped.
    pub cv_accuracy: f64,
    /// False when any machine hit the work cap before meeting the KKT
    /// tolerance (the best iterate so far is kept).
    pub converged: bool,
}

/// Dual-feasibility report of one binary machine, exposed for verification.
#[derive(Debug, Clone, Copy)]
pub struct DualFeasibility {
    pub max_box_violation: f64,
    pub equality_residual: f64,
}

struct SmoResult {
    alphas: Vec<f64>,
    bias: f64,
    converged: bool,
}

/// SMO on the dual problem: minimize 1/2 a'Qa - e'a with 0 <= a <= C and
/// y'a = 0, Q_ij = y_i y_j k(x_i, x_j). Working pairs are the maximal
/// violating pair; gradients update in O(n) per iteration on a cached Gram
/// matrix.
fn smo_binary(gram: &Matrix, y: &[f64], c: f64, tol: f64, max_kernel_evals: u64) -> SmoResult {
    let n = y.len();
    let mut alpha = vec![0.0f64; n];
    let mut grad = vec![-1.0f64; n];
    // Each iteration touches two Gram rows; budget the iteration count in
    // kernel-evaluation equivalents, with a floor to handle tiny problems.
    let max_iter = ((max_kernel_evals / (2 * n as u64)).max(100)) as usize;
    const TAU: f64 = 1e-12;
    let mut converged = false;
    for _ in 0..max_iter {
        // Maximal violating pair.
        let mut i_up: Option<usize> = None;
        let mut g_max = f64::NEG_INFINITY;
        let mut i_low: Option<usize> = None;
        let mut g_min = f64::INFINITY;
        for t in 0..n {
            let v = -y[t] * grad[t];
            let in_up = (y[t] > 0.0 && alpha[t] < c) || (y[t] < 0.0 && alpha[t] > 0.0);
            let in_low = (y[t] > 0.0 && alpha[t] > 0.0) || (y[t] < 0.0 && alpha[t] < c);
            if in_up && v > g_max {
                g_max = v;
                i_up = Some(t);
            }
            if in_low && v < g_min {
                g_min = v;
                i_low = Some(t);
            }
        }
        let (i, j) = match (i_up, i_low) {
            (Some(i), Some(j)) => (i, j),
            _ => {
                converged = true;
                break;
            }
        };
        if g_max - g_min <= tol {
            converged = true;
            break;
        }
        // Two-variable update (quadratic form along the feasible direction).
        let q_ii = gram.get(i, i);
        let q_jj = gram.get(j, j);
        let q_ij = gram.get(i, j);
        let (old_ai, old_aj) = (alpha[i], alpha[j]);
        if y[i] != y[j] {
            let quad = (q_ii + q_jj + 2.0 * q_ij).max(TAU);
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 && alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = diff;
            } else if diff <= 0.0 && alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let quad = (q_ii + q_jj - 2.0 * q_ij).max(TAU);
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > c {
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }
        let (d_i, d_j) = (alpha[i] - old_ai, alpha[j] - old_aj);
        if d_i == 0.0 && d_j == 0.0 {
            converged = true;
            break;
        }
        let (yi, yj) = (y[i], y[j]);
        for t in 0..n {
            grad[t] += y[t] * yi * gram.get(t, i) * d_i + y[t] * yj * gram.get(t, j) * d_j;
        }
    }
    // Bias from the free support vectors, or the violation midpoint when
    // every multiplier sits on the box.
    let mut free_sum = 0.0;
    let mut free_count = 0usize;
    for t in 0..n {
        if alpha[t] > 0.0 && alpha[t] < c {
            // grad_t = (Q alpha)_t - 1 = y_t * f_nb(x_t) - 1 where f_nb is
            // the decision value without bias; a free SV has y_t f(x_t) = 1,
            // so b = y_t - f_nb(x_t).
            let f_nb = (grad[t] + 1.0) * y[t];
            free_sum += y[t] - f_nb;
            free_count += 1;
        }
    }
    let bias = if free_count > 0 {
        free_sum / free_count as f64
    } else {
        let mut g_max = f64::NEG_INFINITY;
        let mut g_min = f64::INFINITY;
        for t in 0..n {
            let v = -y[t] * grad[t];
            let in_up = (y[t] > 0.0 && alpha[t] < c) || (y[t] < 0.0 && alpha[t] > 0.0);
            let in_low = (y[t] > 0.0 && alpha[t] > 0.0) || (y[t] < 0.0 && alpha[t] < c);
            if in_up && v > g_max {
                g_max = v;
            }
            if in_low && v < g_min {
                g_min = v;
            }
        }
        if g_max.is_finite() && g_min.is_finite() {
            (g_max + g_min) / 2.0
        } else {
            0.0
        }
    };
    SmoResult { alphas: alpha, bias, converged }
}

fn rbf_gram(set: &TrainingSet, indices: &[usize], gamma: f64) -> Matrix {
    let n = indices.len();
    let mut gram = Matrix::zeros(n, n);
    for a in 0..n {
        gram.set(a, a, 1.0);
        for b in a + 1..n {
            let k = (-gamma * dist_sq(set.sample(indices[a]), set.sample(indices[b]))).exp();
            gram.set(a, b, k);
            gram.set(b, a, k);
        }
    }
    gram
}

/// Train the one-vs-one machines on the given sample indices.
fn train_machines(
    set: &TrainingSet,
    indices: &[usize],
    c: f64,
    gamma: f64,
    params: &SvmParams,
) -> Vec<BinarySvm> {
    let k = set.num_classes();
    let mut machines = Vec::new();
    for class_pos in 1..=k {
        for class_neg in class_pos + 1..=k {
            let pair_idx: Vec<usize> = indices
                .iter()
                .copied()
                .filter(|&i| set.labels()[i] == class_pos || set.labels()[i] == class_neg)
                .collect();
            let y: Vec<f64> = pair_idx
                .iter()
                .map(|&i| if set.labels()[i] == class_pos { 1.0 } else { -1.0 })
                .collect();
            if pair_idx.is_empty() || y.iter().all(|&v| v > 0.0) || y.iter().all(|&v| v < 0.0) {
                // A fold can lack one side of the pair; an empty machine
                // votes for the positive class through its zero decision.
                machines.push(BinarySvm {
                    class_pos,
                    class_neg,
                    support_vectors: Matrix::zeros(0, set.dimension()),
                    coefficients: Vec::new(),
                    bias: 0.0,
                    converged: true,
                });
                continue;
            }
            let gram = rbf_gram(set, &pair_idx, gamma);
            // Gram assembly costs n(n-1)/2 kernel evaluations; the remaining
            // budget goes to the solver iterations.
            let assembly = (pair_idx.len() * (pair_idx.len() - 1) / 2) as u64;
            let budget = params.max_kernel_evals.saturating_sub(assembly).max(1);
            let result = smo_binary(&gram, &y, c, params.kkt_tol, budget);
            let mut sv_rows = Vec::new();
            let mut coeffs = Vec::new();
            for (slot, &i) in pair_idx.iter().enumerate() {
                if result.alphas[slot] > 0.0 {
                    sv_rows.push(i);
                    coeffs.push(result.alphas[slot] * y[slot]);
                }
            }
            let mut support_vectors = Matrix::zeros(sv_rows.len(), set.dimension());
            for (row, &i) in sv_rows.iter().enumerate() {
                support_vectors.row_mut(row).copy_from_slice(set.sample(i));
            }
            machines.push(BinarySvm {
                class_pos,
                class_neg,
                support_vectors,
                coefficients: coeffs,
                bias: result.bias,
                converged: result.converged,
            });
        }
    }
    machines
}

fn predict_with(machines: &[BinarySvm], gamma: f64, num_classes: u16, x: &[f64]) -> u16 {
    let mut votes = vec![0u32; usize::from(num_classes)];
    for m in machines {
        let winner = if m.decision(x, gamma) >= 0.0 { m.class_pos } else { m.class_neg };
        votes[usize::from(winner) - 1] += 1;
    }
    argmax_votes(&votes)
}

/// Build `folds` index groups; plain shuffled folding first, falling back to
/// per-class round-robin stratification when a fold's training side would
/// lose a class.
fn make_folds(set: &TrainingSet, folds: usize, seed: u64) -> Result<Vec<Vec<usize>>, TrainError> {
    let n = set.len();
    let mut rng = stage_rng(seed, "svm-folds", 0);
    let mut order: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        let j = rng.random_range(0..=i);
        order.swap(i, j);
    }
    let mut plain: Vec<Vec<usize>> = vec![Vec::new(); folds];
    for (pos, &i) in order.iter().enumerate() {
        plain[pos % folds].push(i);
    }
    let covers = |groups: &[Vec<usize>]| -> bool {
        for held in 0..groups.len() {
            let mut seen = vec![false; usize::from(set.num_classes()) + 1];
            for (g, group) in groups.iter().enumerate() {
                if g == held {
                    continue;
                }
                for &i in group {
                    seen[usize::from(set.labels()[i])] = true;
                }
            }
            if (1..=set.num_classes()).any(|c| !seen[usize::from(c)]) {
                return false;
            }
        }
        true
    };
    if covers(&plain) {
        return Ok(plain);
    }
    // Stratified: deal each class round-robin across folds in shuffled order.
    let mut stratified: Vec<Vec<usize>> = vec![Vec::new(); folds];
    for class in 1..=set.num_classes() {
        let mut members: Vec<usize> =
            (0..n).filter(|&i| set.labels()[i] == class).collect();
        for i in (1..members.len()).rev() {
            let j = rng.random_range(0..=i);
            members.swap(i, j);
        }
        for (pos, &i) in members.iter().enumerate() {
            stratified[pos % folds].push(i);
        }
    }
    if covers(&stratified) {
        Ok(stratified)
    } else {
        Err(TrainError::FoldMissingClass)
    }
}

/// Train with 5-fold grid selection: the (C, gamma) pair maximizing mean
/// fold accuracy wins, ties resolving to the smallest C then the smallest
/// gamma; the final machines retrain on the full set.
pub fn train(set: &TrainingSet, params: &SvmParams, seed: u64) -> Result<SvmModel, TrainError> {
    if set.num_classes() < 2 {
        return Err(TrainError::SingleClass);
    }
    if params.c_grid.is_empty() || params.gamma_grid.is_empty() {
        return Err(TrainError::EmptyGrid);
    }
    let single_combo = params.c_grid.len() == 1 && params.gamma_grid.len() == 1;
    let (best_c, best_gamma, best_acc) = if single_combo {
        (params.c_grid[0], params.gamma_grid[0], 1.0)
    } else {
        if set.len() < params.folds {
            return Err(TrainError::TooFewSamples { needed: params.folds, got: set.len() });
        }
        let folds = make_folds(set, params.folds, seed)?;
        let mut c_sorted = params.c_grid.clone();
        c_sorted.sort_by(f64::total_cmp);
        let mut gamma_sorted = params.gamma_grid.clone();
        gamma_sorted.sort_by(f64::total_cmp);
        let mut best = (c_sorted[0], gamma_sorted[0], f64::NEG_INFINITY);
        for &c in &c_sorted {
            for &gamma in &gamma_sorted {
                let mut acc_sum = 0.0;
                for held in 0..folds.len() {
                    let train_idx: Vec<usize> = folds
                        .iter()
                        .enumerate()
                        .filter(|&(g, _)| g != held)
                        .flat_map(|(_, group)| group.iter().copied())
                        .collect();
                    let machines = train_machines(set, &train_idx, c, gamma, params);
                    let mut hits = 0usize;
                    for &i in &folds[held] {
                        if predict_with(&machines, gamma, set.num_classes(), set.sample(i))
                            == set.labels()[i]
                        {
                            hits += 1;
                        }
                    }
                    acc_sum += hits as f64 / folds[held].len().max(1) as f64;
                }
                let acc = acc_sum / folds.len() as f64;
                if acc > best.2 {
                    best = (c, gamma, acc);
                }
            }
        }
        best
    };
    let all: Vec<usize> = (0..set.len()).collect();
    let machines = train_machines(set, &all, best_c, best_gamma, params);
    let converged = machines.iter().all(|m| m.converged);
    Ok(SvmModel {
        c: best_c,
        gamma: best_gamma,
        num_classes: set.num_classes(),
        machines,
        cv_accuracy: best_acc,
        converged,
    })
}

/// Predict class ids for the rows of `x` by one-vs-one voting.
pub fn predict(model: &SvmModel, x: &Matrix) -> Vec<u16> {
    (0..x.rows())
        .map(|r| predict_with(&model.machines, model.gamma, model.num_classes, x.row(r)))
        .collect()
}

/// Dual feasibility of each machine against the box and equality
/// constraints, recomputed from the stored coefficients.
pub fn dual_feasibility(model: &SvmModel) -> Vec<DualFeasibility> {
    model
        .machines
        .iter()
        .map(|m| {
            let mut box_violation = 0.0f64;
            let mut equality = 0.0f64;
            for &coeff in &m.coefficients {
                let alpha = coeff.abs();
                box_violation = box_violation.max(alpha - model.c).max(-alpha);
                equality += coeff; // sum alpha_i y_i
            }
            DualFeasibility { max_box_violation: box_violation, equality_residual: equality.abs() }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn blobs(n_per: usize, centers: &[(f64, f64)], labels: &[u16], spread: f64, seed: u64) -> TrainingSet {
        let mut rng = stage_rng(seed, "test-svm-blobs", 0);
        let n = n_per * centers.len();
        let mut x = Matrix::zeros(n, 2);
        let mut y = Vec::with_capacity(n);
        for (ci, (&(cx, cy), &label)) in centers.iter().zip(labels).enumerate() {
            for i in 0..n_per {
                let row = ci * n_per + i;
                x.set(row, 0, cx + rng.random_range(-spread..spread));
                x.set(row, 1, cy + rng.random_range(-spread..spread));
                y.push(label);
            }
        }
        let k = *labels.iter().max().unwrap();
        TrainingSet::new(x, y, k).unwrap()
    }

    #[test]
    fn separated_blobs_reach_full_training_accuracy() {
        // Construction margin far above the spread: separability is certain.
        let set = blobs(20, &[(0.0, 0.0), (10.0, 10.0)], &[1, 2], 0.5, 71);
        let model = train(&set, &SvmParams::default(), 7).unwrap();
        let pred = predict(&model, set.features());
        assert_eq!(pred, set.labels());
        assert!(model.converged);
    }

    #[test]
    fn single_sample_per_class_memorizes() {
        let x = Matrix::from_vec(3, 2, vec![0.0, 0.0, 5.0, 0.0, 0.0, 5.0]).unwrap();
        let set = TrainingSet::new(x, vec![1, 2, 3], 3).unwrap();
        let model = train(&set, &SvmParams::fixed(10.0, 0.5), 7).unwrap();
        assert_eq!(predict(&model, set.features()), vec![1, 2, 3]);
    }

    #[test]
    fn xor_layout_is_separated_by_rbf() {
        // Four clusters in XOR arrangement; a linear machine cannot split
        // them but the RBF machine must.
        let set = blobs(
            10,
            &[(0.0, 0.0), (6.0, 6.0), (0.0, 6.0), (6.0, 0.0)],
            &[1, 1, 2, 2],
            0.4,
            72,
        );
        let model = train(&set, &SvmParams::default(), 9).unwrap();
        let pred = predict(&model, set.features());
        let hits = pred.iter().zip(set.labels()).filter(|(a, b)| a == b).count();
        assert_eq!(hits, set.len());
        // The trained decision function itself separates an exhaustive grid
        // around each cluster center consistently with the cluster label.
        for (cx, cy, want) in [(0.0, 0.0, 1), (6.0, 6.0, 1), (0.0, 6.0, 2), (6.0, 0.0, 2)] {
            for dx in [-0.3, 0.0, 0.3] {
                for dy in [-0.3, 0.0, 0.3] {
                    let x = Matrix::from_vec(1, 2, vec![cx + dx, cy + dy]).unwrap();
                    assert_eq!(predict(&model, &x)[0], want);
                }
            }
        }
    }

    #[test]
    fn prediction_agrees_with_decision_replay() {
        let set = blobs(15, &[(0.0, 0.0), (4.0, 4.0), (8.0, 0.0)], &[1, 2, 3], 0.8, 73);
        let model = train(&set, &SvmParams::fixed(4.0, 0.25), 11).unwrap();
        let pred = predict(&model, set.features());
        // Replay the vote from stored coefficients through an independent
        // kernel evaluation.
        for (r, &want) in pred.iter().enumerate() {
            let x = set.sample(r);
            let mut votes = vec![0u32; 3];
            for m in &model.machines {
                let mut f = m.bias;
                for (i, &coeff) in m.coefficients.iter().enumerate() {
                    let sv = m.support_vectors.row(i);
                    let d2: f64 = sv.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum();
                    f += coeff * (-model.gamma * d2).exp();
                }
                let winner = if f >= 0.0 { m.class_pos } else { m.class_neg };
                votes[usize::from(winner) - 1] += 1;
            }
            let mut best = 0;
            for (i, &v) in votes.iter().enumerate().skip(1) {
                if v > votes[best] {
                    best = i;
                }
            }
            assert_eq!(want, best as u16 + 1);
        }
    }

    #[test]
    fn dual_constraints_hold_at_convergence() {
        let set = blobs(20, &[(0.0, 0.0), (3.0, 3.0)], &[1, 2], 1.0, 74);
        let model = train(&set, &SvmParams::fixed(2.0, 0.5), 13).unwrap();
        for feas in dual_feasibility(&model) {
            assert!(feas.max_box_violation <= 1e-9);
            assert!(feas.equality_residual <= 1e-6);
        }
    }

    #[test]
    fn cv_tie_prefers_smallest_parameters() {
        // A trivially separable set: many grid points reach accuracy 1, the
        // smallest C then gamma must win.
        let set = blobs(10, &[(0.0, 0.0), (50.0, 50.0)], &[1, 2], 0.1, 75);
        let params = SvmParams {
            c_grid: vec![1.0, 4.0],
            gamma_grid: vec![0.25, 1.0],
            ..SvmParams::default()
        };
        let model = train(&set, &params, 17).unwrap();
        assert_eq!(model.c, 1.0);
        assert_eq!(model.gamma, 0.25);
        assert!((model.cv_accuracy - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_single_class_and_empty_grid() {
        let x = Matrix::from_vec(2, 1, vec![0.0, 1.0]).unwrap();
        let set = TrainingSet::new(x, vec![1, 1], 1).unwrap();
        assert_eq!(train(&set, &SvmParams::default(), 0).unwrap_err(), TrainError::SingleClass);
        let set2 = blobs(3, &[(0.0, 0.0), (5.0, 5.0)], &[1, 2], 0.1, 76);
        let empty = SvmParams { c_grid: vec![], ..SvmParams::default() };
        assert_eq!(train(&set2, &empty, 0).unwrap_err(), TrainError::EmptyGrid);
    }

    #[test]
    fn deterministic_across_runs() {
        let set = blobs(12, &[(0.0, 0.0), (2.5, 2.5), (5.0, 0.0)], &[1, 2, 3], 0.9, 77);
        let a = train(&set, &SvmParams::default(), 5).unwrap();
        let b = train(&set, &SvmParams::default(), 5).unwrap();
        assert_eq!(a.c, b.c);
        assert_eq!(a.gamma, b.gamma);
        let xa = predict(&a, set.features());
        let xb = predict(&b, set.features());
        assert_eq!(xa, xb);
    }
}
