//! Local model competition: for one unresolved ball, compare the single-ball,
//! two-ball, and core-boundary explanations by total description length and
//! apply the conservative selection rule.
//!
//! All tie-breaks are deterministic and fixed: candidate directions keep
//! their assembly order, cuts are scanned in ascending position, boundary
//! sizes in ascending order, and on exact length ties the single-ball model
//! beats the two-ball model beats the core-boundary model.

use ndarray::{Array1, ArrayView1};
use serde::{Deserialize, Serialize};

use crate::ball::{covariance_and_pca, canonicalize_sign, squared_distance, GranularBall};
use crate::boundary::{boundary_risk, ClassContext};
use crate::coding::{
    ball_total, class_length, intrusion_length, margin_length, partition_entropy_code,
    selection_code_core_boundary, selection_code_two_ball, CodingConstants,
};
use crate::float::Float;

/// Class-adaptive granularity: candidate `alpha` and the minimum admissible
/// child-ball size derived from class size and feature dimension.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GranularityRule {
    pub alpha: usize,
    pub n_min: usize,
}

/// `alpha_c = ceil(min(sqrt(n_c) / ln(sqrt(d + 2)), d + 2))`;
/// `n_min = 1` for tiny classes, else `min(floor(n_c / 2), max(2, alpha_c))`.
pub fn granularity(n_c: usize, d: usize) -> GranularityRule {
    let sqrt_nc = (n_c as f64).sqrt();
    let log_term = ((d as f64) + 2.0).sqrt().ln();
    let alpha = (sqrt_nc / log_term).min(d as f64 + 2.0).ceil() as usize;
    let n_min = if n_c <= 3 {
        1
    } else {
        (n_c / 2).min(alpha.max(2))
    };
    GranularityRule { alpha, n_min }
}

/// The three candidate local explanations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LocalModel {
    SingleBall,
    TwoBall,
    CoreBoundary,
}

impl std::fmt::Display for LocalModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            LocalModel::SingleBall => write!(f, "single_ball"),
            LocalModel::TwoBall => write!(f, "two_ball"),
            LocalModel::CoreBoundary => write!(f, "core_boundary"),
        }
    }
}

/// An accepted binary decomposition; member ids sorted ascending per child.
/// For the core-boundary model, `left` is the core and `right` the
/// boundary-sensitive child.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Decomposition {
    pub left: Vec<usize>,
    pub right: Vec<usize>,
}

/// Outcome of the three-way competition for one ball.
#[derive(Debug, Clone)]
pub struct CandidateDecision<T> {
    pub model: LocalModel,
    pub l_single: T,
    /// `None` encodes an infeasible candidate (length +inf).
    pub l_two: Option<T>,
    pub l_core_boundary: Option<T>,
    pub decomposition: Option<Decomposition>,
}

fn ceil_sqrt(n: usize) -> usize {
    (n as f64).sqrt().ceil() as usize
}

fn dot<T: Float>(a: &ArrayView1<T>, b: &Array1<T>) -> T {
    a.iter().zip(b.iter()).map(|(&x, &y)| x * y).sum()
}

/// Normalize to unit length with first-nonzero-component-positive sign;
/// `None` for vectors whose norm is zero or not representable.
fn unit_canonical<T: Float>(v: Array1<T>) -> Option<Array1<T>> {
    let norm = v.iter().map(|&x| x * x).sum::<T>().sqrt();
    if !norm.is_normal() {
        return None;
    }
    Some(canonicalize_sign(v.mapv(|x| x / norm)))
}

/// Assemble the data-induced split directions in fixed order: principal
/// covariance direction, negative-evidence direction, safe-boundary contrast
/// direction, variance-dominant coordinate axis. Zero-norm candidates are
/// dropped and near-duplicates (|dot| > 1 - 1e-9) keep the earlier entry.
pub fn candidate_directions<T: Float>(
    ball: &GranularBall<T>,
    ctx: &ClassContext<T>,
) -> Vec<Array1<T>> {
    let d = ball.d();
    let mut raw: Vec<Array1<T>> = Vec::with_capacity(4);

    if ball.n() >= 2 {
        if let Ok((_, Some(v))) = covariance_and_pca(ball, &ctx.x_pos.view()) {
            raw.push(v);
        }
    }

    if ctx.has_negatives() {
        // Mean of the k nearest negatives to the center, pointed away from.
        let k = ctx.n_neg().min(ceil_sqrt(ball.n()));
        let dists: Vec<T> = (0..ctx.n_neg())
            .map(|i| squared_distance(&ctx.x_neg.row(i), &ball.center.view()))
            .collect();
        let mut order: Vec<usize> = (0..ctx.n_neg()).collect();
        order.sort_by(|&a, &b| dists[a].partial_cmp(&dists[b]).unwrap().then(a.cmp(&b)));
        let mut mean: Array1<T> = Array1::zeros(d);
        for &i in order.iter().take(k) {
            mean = mean + ctx.x_neg.row(i);
        }
        let kt = T::from_count(k);
        let v_neg = ball.center.clone() - mean.mapv(|x| x / kt);
        raw.push(v_neg);

        // Contrast between the h safest and h most exposed members.
        let h = 1.max((ball.n() / 2).min(ceil_sqrt(ball.n())));
        let mut by_delta_desc = ball.members.clone();
        by_delta_desc.sort_by(|&a, &b| {
            ctx.delta_pos[b]
                .partial_cmp(&ctx.delta_pos[a])
                .unwrap()
                .then(a.cmp(&b))
        });
        let mut by_delta_asc = ball.members.clone();
        by_delta_asc.sort_by(|&a, &b| {
            ctx.delta_pos[a]
                .partial_cmp(&ctx.delta_pos[b])
                .unwrap()
                .then(a.cmp(&b))
        });
        let ht = T::from_count(h);
        let mut safe_mean: Array1<T> = Array1::zeros(d);
        for &i in by_delta_desc.iter().take(h) {
            safe_mean = safe_mean + ctx.x_pos.row(i);
        }
        let mut risky_mean: Array1<T> = Array1::zeros(d);
        for &i in by_delta_asc.iter().take(h) {
            risky_mean = risky_mean + ctx.x_pos.row(i);
        }
        raw.push(safe_mean.mapv(|x| x / ht) - risky_mean.mapv(|x| x / ht));
    }

    // Variance-dominant coordinate axis; max-variance ties take the lowest
    // feature index.
    let mut j_star = 0;
    for j in 1..d {
        if ball.variances[j] > ball.variances[j_star] {
            j_star = j;
        }
    }
    let mut axis = Array1::zeros(d);
    axis[j_star] = T::one();
    raw.push(axis);

    let near_one = T::one() - T::cast(1e-9);
    let mut dirs: Vec<Array1<T>> = Vec::with_capacity(raw.len());
    for v in raw {
        if let Some(u) = unit_canonical(v) {
            let duplicate = dirs.iter().any(|w| dot(&w.view(), &u).abs() > near_one);
            if !duplicate {
                dirs.push(u);
            }
        }
    }
    dirs
}

/// Member ids sorted by projection onto `v`, ties by ascending member id.
fn projection_order<T: Float>(
    ball: &GranularBall<T>,
    v: &Array1<T>,
    ctx: &ClassContext<T>,
) -> Vec<usize> {
    let mut keyed: Vec<(T, usize)> = ball
        .members
        .iter()
        .map(|&i| (dot(&ctx.x_pos.row(i), v), i))
        .collect();
    keyed.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
    keyed.into_iter().map(|(_, i)| i).collect()
}

/// Total description length of one candidate child given its member set and
/// incrementally maintained sufficient statistics. Radius, average boundary
/// risk, and the center's nearest-negative distance are computed exactly.
fn child_cost<T: Float>(
    members: &[usize],
    sum1: &Array1<T>,
    sum2: &Array1<T>,
    ctx: &ClassContext<T>,
    constants: &CodingConstants<T>,
) -> T {
    let n = members.len();
    let nt = T::from_count(n);
    let d = sum1.len();
    let two = T::cast(2.0);
    let two_pi = two * T::PI();

    let mut center = Array1::zeros(d);
    let mut gauss = T::zero();
    for j in 0..d {
        let mean = sum1[j] / nt;
        center[j] = mean;
        let var = (sum2[j] / nt - mean * mean).max(T::zero());
        gauss = gauss + T::one() + (two_pi * var.max(constants.eps_v)).ln();
    }
    let data = nt / two * gauss + T::from_count(d) * T::from_count(n.max(2)).ln();

    let mut separation = T::zero();
    if ctx.has_negatives() {
        let mut max_sq = T::zero();
        for &i in members {
            let sq = squared_distance(&ctx.x_pos.row(i), &center.view());
            if sq > max_sq {
                max_sq = sq;
            }
        }
        let r_eff = max_sq.sqrt().max(constants.eps_r);

        let rho_sum: T = members
            .iter()
            .map(|&i| boundary_risk(ctx.delta_pos[i], r_eff))
            .sum();
        let rho_bar = rho_sum / nt;

        let delta_mu = ctx.nearest_negative(&center.view());
        let omega = (r_eff - delta_mu).max(T::zero()) / r_eff;
        separation = intrusion_length(n, rho_bar, constants) + margin_length(n, omega);
    }

    data + separation + class_length(ctx.prior)
}

/// Optimal two-ball description length and decomposition, or `None` when the
/// candidate is infeasible (`n < 2 n_min` or no usable directions).
pub fn best_two_ball<T: Float>(
    ball: &GranularBall<T>,
    ctx: &ClassContext<T>,
    rule: &GranularityRule,
    constants: &CodingConstants<T>,
) -> Option<(T, Decomposition)> {
    let n = ball.n();
    let n_min = rule.n_min;
    if n < 2 * n_min {
        return None;
    }
    let dirs = candidate_directions(ball, ctx);
    if dirs.is_empty() {
        return None;
    }
    let selection = selection_code_two_ball::<T>(n, dirs.len());
    let d = ball.d();

    let mut best: Option<(T, usize, usize)> = None;
    let mut left_sum1: Array1<T> = Array1::zeros(d);
    let mut left_sum2: Array1<T> = Array1::zeros(d);
    let mut right_sum1: Array1<T> = Array1::zeros(d);
    let mut right_sum2: Array1<T> = Array1::zeros(d);
    for (dir_idx, v) in dirs.iter().enumerate() {
        let order = projection_order(ball, v, ctx);
        left_sum1.fill(T::zero());
        left_sum2.fill(T::zero());
        for k in 1..n {
            let row = ctx.x_pos.row(order[k - 1]);
            for j in 0..d {
                let x = row[j];
                left_sum1[j] = left_sum1[j] + x;
                left_sum2[j] = left_sum2[j] + x * x;
            }
            if k < n_min || k > n - n_min {
                continue;
            }
            for j in 0..d {
                right_sum1[j] = ball.sum1[j] - left_sum1[j];
                right_sum2[j] = ball.sum2[j] - left_sum2[j];
            }
            let total = partition_entropy_code::<T>(n, k).expect("admissible cut")
                + selection
                + child_cost(&order[..k], &left_sum1, &left_sum2, ctx, constants)
                + child_cost(&order[k..], &right_sum1, &right_sum2, ctx, constants);
            if best.map_or(true, |(b, _, _)| total < b) {
                best = Some((total, dir_idx, k));
            }
        }
    }

    let (length, dir_idx, k) = best?;
    let order = projection_order(ball, &dirs[dir_idx], ctx);
    let mut left = order[..k].to_vec();
    let mut right = order[k..].to_vec();
    left.sort_unstable();
    right.sort_unstable();
    Some((length, Decomposition { left, right }))
}

/// Optimal core-boundary description length and decomposition, or `None`
/// when infeasible (`n < 2 n_min`, or no negatives to rank members by).
pub fn best_core_boundary<T: Float>(
    ball: &GranularBall<T>,
    ctx: &ClassContext<T>,
    rule: &GranularityRule,
    constants: &CodingConstants<T>,
) -> Option<(T, Decomposition)> {
    let n = ball.n();
    let n_min = rule.n_min;
    if n < 2 * n_min || !ctx.has_negatives() {
        return None;
    }

    // Descending nearest-negative distance, ties by ascending member id:
    // safest members first, most exposed last.
    let mut order = ball.members.clone();
    order.sort_by(|&a, &b| {
        ctx.delta_pos[b]
            .partial_cmp(&ctx.delta_pos[a])
            .unwrap()
            .then(a.cmp(&b))
    });

    let selection = selection_code_core_boundary::<T>(n);
    let d = ball.d();
    let mut core_sum1 = ball.sum1.clone();
    let mut core_sum2 = ball.sum2.clone();
    let mut bd_sum1: Array1<T> = Array1::zeros(d);
    let mut bd_sum2: Array1<T> = Array1::zeros(d);

    let mut best: Option<(T, usize)> = None;
    for n_bd in 1..n {
        let row = ctx.x_pos.row(order[n - n_bd]);
        for j in 0..d {
            let x = row[j];
            core_sum1[j] = core_sum1[j] - x;
            core_sum2[j] = core_sum2[j] - x * x;
            bd_sum1[j] = bd_sum1[j] + x;
            bd_sum2[j] = bd_sum2[j] + x * x;
        }
        if n_bd < n_min || n_bd > n - n_min {
            continue;
        }
        let n_core = n - n_bd;
        let total = partition_entropy_code::<T>(n, n_core).expect("admissible size")
            + selection
            + child_cost(&order[..n_core], &core_sum1, &core_sum2, ctx, constants)
            + child_cost(&order[n_core..], &bd_sum1, &bd_sum2, ctx, constants);
        if best.map_or(true, |(b, _)| total < b) {
            best = Some((total, n_bd));
        }
    }

    let (length, n_bd) = best?;
    let n_core = n - n_bd;
    let mut left = order[..n_core].to_vec();
    let mut right = order[n_core..].to_vec();
    left.sort_unstable();
    right.sort_unstable();
    Some((length, Decomposition { left, right }))
}

/// Run the three-way competition with the conservative selection rule: a
/// decomposition wins only when its length beats the single-ball length by
/// more than `eps_mdl`.
pub fn compete<T: Float>(
    ball: &GranularBall<T>,
    ctx: &ClassContext<T>,
    rule: &GranularityRule,
    constants: &CodingConstants<T>,
) -> CandidateDecision<T> {
    let l_single = ball_total(ball, ctx, constants).total;
    let two = best_two_ball(ball, ctx, rule, constants);
    let core_boundary = best_core_boundary(ball, ctx, rule, constants);
    let l_two = two.as_ref().map(|(l, _)| *l);
    let l_core_boundary = core_boundary.as_ref().map(|(l, _)| *l);

    let mut chosen = LocalModel::SingleBall;
    let mut best = l_single;
    if let Some(l) = l_two {
        if l < best {
            best = l;
            chosen = LocalModel::TwoBall;
        }
    }
    if let Some(l) = l_core_boundary {
        if l < best {
            best = l;
            chosen = LocalModel::CoreBoundary;
        }
    }

    let model = if chosen != LocalModel::SingleBall && best < l_single - constants.eps_mdl {
        chosen
    } else {
        LocalModel::SingleBall
    };
    let decomposition = match model {
        LocalModel::SingleBall => None,
        LocalModel::TwoBall => two.map(|(_, dec)| dec),
        LocalModel::CoreBoundary => core_boundary.map(|(_, dec)| dec),
    };

    CandidateDecision {
        model,
        l_single,
        l_two,
        l_core_boundary,
        decomposition,
    }
}
