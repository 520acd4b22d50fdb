//! Shared oracles and generators for the integration and acceptance suites.
//!
//! Everything here recomputes results through an independent route: the
//! Jacobi eigensolver checks the power iteration, the batch-rebuild
//! competition oracle checks the incremental split search, and exact u128
//! binomials check the partition-entropy approximation.

#![allow(dead_code)]

use ndarray::{Array1, Array2};

use gbmdl::ball::{build_ball, GranularBall};
use gbmdl::boundary::{populate_boundary, ClassContext};
use gbmdl::coding::{
    ball_total, partition_entropy_code, selection_code_core_boundary, selection_code_two_ball,
    CodingConstants,
};
use gbmdl::competition::{candidate_directions, granularity, GranularityRule};
use gbmdl::dataset::{LabeledDataset, RawTable};
use gbmdl::rng::SplitMix64;

// ---------------------------------------------------------------------------
// random data
// ---------------------------------------------------------------------------

pub fn normal(rng: &mut SplitMix64) -> f64 {
    let u1 = rng.next_f64().max(1e-12);
    let u2 = rng.next_f64();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

pub fn uniform_matrix(rng: &mut SplitMix64, n: usize, d: usize) -> Array2<f64> {
    let mut x = Array2::zeros((n, d));
    for i in 0..n {
        for j in 0..d {
            x[[i, j]] = rng.next_f64();
        }
    }
    x
}

/// Random labeled dataset made of per-class Gaussian blobs clipped to
/// [0, 1]; every class receives at least one sample.
pub fn random_blob_dataset(
    rng: &mut SplitMix64,
    n: usize,
    d: usize,
    n_classes: usize,
) -> LabeledDataset<f64> {
    let blob_count = n_classes * 2;
    let centers: Vec<Vec<f64>> = (0..blob_count)
        .map(|_| (0..d).map(|_| rng.next_f64()).collect())
        .collect();
    let scales: Vec<f64> = (0..blob_count).map(|_| 0.02 + 0.1 * rng.next_f64()).collect();

    let mut x = Array2::zeros((n, d));
    let mut y = Vec::with_capacity(n);
    for i in 0..n {
        let class = if i < n_classes {
            i
        } else {
            rng.next_below(n_classes as u64) as usize
        };
        let blob = 2 * class + rng.next_below(2) as usize;
        for j in 0..d {
            let v = centers[blob][j] + scales[blob] * normal(rng);
            x[[i, j]] = v.clamp(0.0, 1.0);
        }
        y.push(class);
    }
    LabeledDataset {
        x,
        y,
        n_classes,
        label_names: (0..n_classes).map(|c| format!("c{c}")).collect(),
    }
}

/// Raw-table version of [`random_blob_dataset`] for cross-validation runs.
pub fn random_blob_table(
    rng: &mut SplitMix64,
    n: usize,
    d: usize,
    n_classes: usize,
) -> RawTable<f64> {
    let ds = random_blob_dataset(rng, n, d, n_classes);
    RawTable {
        feature_names: (0..d).map(|j| format!("f{j}")).collect(),
        rows: (0..n).map(|i| ds.x.row(i).to_vec()).collect(),
        labels: ds.y.iter().map(|&c| ds.label_names[c].clone()).collect(),
    }
}

// ---------------------------------------------------------------------------
// eigensolver oracle
// ---------------------------------------------------------------------------

/// Full eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.
/// Returns (eigenvalues, eigenvectors-as-columns), unsorted.
pub fn jacobi_eigen(mut a: Array2<f64>) -> (Vec<f64>, Array2<f64>) {
    let d = a.nrows();
    let mut v: Array2<f64> = Array2::eye(d);
    for _ in 0..100 {
        let mut off = 0.0;
        for p in 0..d {
            for q in (p + 1)..d {
                off += a[[p, q]] * a[[p, q]];
            }
        }
        if off.sqrt() < 1e-15 {
            break;
        }
        for p in 0..d {
            for q in (p + 1)..d {
                if a[[p, q]].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[[q, q]] - a[[p, p]]) / (2.0 * a[[p, q]]);
                let t = if theta >= 0.0 {
                    1.0 / (theta + (theta * theta + 1.0).sqrt())
                } else {
                    1.0 / (theta - (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..d {
                    let akp = a[[k, p]];
                    let akq = a[[k, q]];
                    a[[k, p]] = c * akp - s * akq;
                    a[[k, q]] = s * akp + c * akq;
                }
                for k in 0..d {
                    let apk = a[[p, k]];
                    let aqk = a[[q, k]];
                    a[[p, k]] = c * apk - s * aqk;
                    a[[q, k]] = s * apk + c * aqk;
                }
                for k in 0..d {
                    let vkp = v[[k, p]];
                    let vkq = v[[k, q]];
                    v[[k, p]] = c * vkp - s * vkq;
                    v[[k, q]] = s * vkp + c * vkq;
                }
            }
        }
    }
    let eigenvalues = (0..d).map(|j| a[[j, j]]).collect();
    (eigenvalues, v)
}

/// Dominant unit eigenvector from the Jacobi oracle.
pub fn jacobi_dominant(a: Array2<f64>) -> Array1<f64> {
    let d = a.nrows();
    let (values, vectors) = jacobi_eigen(a);
    let mut best = 0;
    for j in 1..d {
        if values[j] > values[best] {
            best = j;
        }
    }
    let mut v: Array1<f64> = vectors.column(best).to_owned();
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.mapv_inplace(|x| x / norm);
    v
}

// ---------------------------------------------------------------------------
// exact binomial oracle
// ---------------------------------------------------------------------------

/// `ln C(n, k)` from the exact u128 binomial (valid for n <= 30 and far
/// beyond).
pub fn ln_binomial_exact(n: usize, k: usize) -> f64 {
    let mut value: u128 = 1;
    let k = k.min(n - k);
    for i in 0..k {
        value = value * (n - i) as u128 / (i + 1) as u128;
    }
    (value as f64).ln()
}

// ---------------------------------------------------------------------------
// batch-rebuild competition oracle
// ---------------------------------------------------------------------------

/// A random class context plus a ball over a subset of its positives.
pub struct RandomBallCase {
    pub ctx: ClassContext<f64>,
    pub ball: GranularBall<f64>,
    pub rule: GranularityRule,
}

pub fn random_ball_case(rng: &mut SplitMix64, max_n: usize) -> RandomBallCase {
    let d = 1 + rng.next_below(5) as usize;
    let n_ball = 2 + rng.next_below((max_n - 1) as u64) as usize;
    let extra = rng.next_below(10) as usize;
    let n_pos = n_ball + extra;
    let n_neg = rng.next_below(25) as usize; // sometimes zero

    let x_pos = uniform_matrix(rng, n_pos, d);
    let x_neg = uniform_matrix(rng, n_neg, d);
    let mut ctx = ClassContext {
        class_id: 0,
        x_pos,
        x_neg,
        prior: 0.2 + 0.6 * rng.next_f64(),
        delta_pos: Vec::new(),
        n_min: 1,
    };
    ctx.delta_pos = (0..ctx.n_pos())
        .map(|i| ctx.nearest_negative(&ctx.x_pos.row(i)))
        .collect();
    let rule = granularity(n_pos, d);
    ctx.n_min = rule.n_min;

    // Ball over a random subset (ascending ids) of the positives.
    let mut ids: Vec<usize> = (0..n_pos).collect();
    rng.shuffle(&mut ids);
    let mut members = ids[..n_ball].to_vec();
    members.sort_unstable();

    let constants = CodingConstants::default();
    let mut ball = build_ball(&members, &ctx.x_pos.view(), 0).unwrap();
    populate_boundary(&mut ball, &ctx, constants.eps_r);
    RandomBallCase { ctx, ball, rule }
}

fn rebuild_child_cost(
    members: &[usize],
    ctx: &ClassContext<f64>,
    constants: &CodingConstants<f64>,
) -> f64 {
    let mut child = build_ball(members, &ctx.x_pos.view(), ctx.class_id).unwrap();
    populate_boundary(&mut child, ctx, constants.eps_r);
    ball_total(&child, ctx, constants).total
}

/// Two-ball search with every candidate child rebuilt from scratch. Mirrors
/// the documented enumeration order and tie-breaks without any incremental
/// statistics.
pub fn naive_best_two_ball(
    case: &RandomBallCase,
    constants: &CodingConstants<f64>,
) -> Option<(f64, Vec<usize>, Vec<usize>)> {
    let ball = &case.ball;
    let ctx = &case.ctx;
    let n = ball.n();
    let n_min = case.rule.n_min;
    if n < 2 * n_min {
        return None;
    }
    let dirs = candidate_directions(ball, ctx);
    if dirs.is_empty() {
        return None;
    }
    let selection: f64 = selection_code_two_ball(n, dirs.len());

    let mut best: Option<(f64, Vec<usize>, Vec<usize>)> = None;
    for v in &dirs {
        let mut keyed: Vec<(f64, usize)> = ball
            .members
            .iter()
            .map(|&i| {
                let t: f64 = ctx
                    .x_pos
                    .row(i)
                    .iter()
                    .zip(v.iter())
                    .map(|(&a, &b)| a * b)
                    .sum();
                (t, i)
            })
            .collect();
        keyed.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
        let order: Vec<usize> = keyed.into_iter().map(|(_, i)| i).collect();
        for k in n_min..=(n - n_min) {
            let left = &order[..k];
            let right = &order[k..];
            let total = partition_entropy_code::<f64>(n, k).unwrap()
                + selection
                + rebuild_child_cost(left, ctx, constants)
                + rebuild_child_cost(right, ctx, constants);
            if best.as_ref().is_none_or(|(b, _, _)| total < *b) {
                let mut l = left.to_vec();
                let mut r = right.to_vec();
                l.sort_unstable();
                r.sort_unstable();
                best = Some((total, l, r));
            }
        }
    }
    best
}

/// Core-boundary search with batch-rebuilt children.
pub fn naive_best_core_boundary(
    case: &RandomBallCase,
    constants: &CodingConstants<f64>,
) -> Option<(f64, Vec<usize>, Vec<usize>)> {
    let ball = &case.ball;
    let ctx = &case.ctx;
    let n = ball.n();
    let n_min = case.rule.n_min;
    if n < 2 * n_min || !ctx.has_negatives() {
        return None;
    }
    let mut order = ball.members.clone();
    order.sort_by(|&a, &b| {
        ctx.delta_pos[b]
            .partial_cmp(&ctx.delta_pos[a])
            .unwrap()
            .then(a.cmp(&b))
    });
    let selection: f64 = selection_code_core_boundary(n);

    let mut best: Option<(f64, Vec<usize>, Vec<usize>)> = None;
    for n_bd in n_min..=(n - n_min) {
        let n_core = n - n_bd;
        let core = &order[..n_core];
        let bd = &order[n_core..];
        let total = partition_entropy_code::<f64>(n, n_core).unwrap()
            + selection
            + rebuild_child_cost(core, ctx, constants)
            + rebuild_child_cost(bd, ctx, constants);
        if best.as_ref().is_none_or(|(b, _, _)| total < *b) {
            let mut l = core.to_vec();
            let mut r = bd.to_vec();
            l.sort_unstable();
            r.sort_unstable();
            best = Some((total, l, r));
        }
    }
    best
}

/// True when all projections along every candidate direction and all member
/// deltas are pairwise distinct, the precondition for exact decomposition
/// agreement between oracle and implementation.
pub fn keys_are_distinct(case: &RandomBallCase) -> bool {
    let ball = &case.ball;
    let ctx = &case.ctx;
    let mut deltas: Vec<f64> = ball.members.iter().map(|&i| ctx.delta_pos[i]).collect();
    deltas.sort_by(|a, b| a.partial_cmp(b).unwrap());
    if deltas.windows(2).any(|w| w[0] == w[1]) {
        return false;
    }
    for v in candidate_directions(ball, ctx) {
        let mut t: Vec<f64> = ball
            .members
            .iter()
            .map(|&i| {
                ctx.x_pos
                    .row(i)
                    .iter()
                    .zip(v.iter())
                    .map(|(&a, &b)| a * b)
                    .sum()
            })
            .collect();
        t.sort_by(|a, b| a.partial_cmp(b).unwrap());
        if t.windows(2).any(|w| w[0] == w[1]) {
            return false;
        }
    }
    true
}

/// Relative-or-absolute closeness for description lengths.
pub fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * f64::max(1.0, f64::max(a.abs(), b.abs()))
}

/// Normalize a two-child decomposition into an unordered partition: the
/// child containing the smallest member id comes first. Two near-antipodal
/// directions can realize the same bipartition with the sides mirrored at
/// exactly equal length, so decompositions are compared as partitions.
pub fn as_partition(left: &[usize], right: &[usize]) -> (Vec<usize>, Vec<usize>) {
    if left.first() <= right.first() {
        (left.to_vec(), right.to_vec())
    } else {
        (right.to_vec(), left.to_vec())
    }
}
