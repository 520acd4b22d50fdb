//! Granular-ball statistics: center, per-feature variances, radius,
//! first/second-order sufficient statistics, and the dominant covariance
//! direction.
//!
//! Sufficient statistics make child balls cheap to derive during split
//! search: sums add and subtract exactly, while radii are always recomputed
//! over the actual members because separation costs depend on them.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};

use crate::error::{Error, Result};
use crate::float::Float;

/// One class-conditional ball over rows of a class-positive matrix.
#[derive(Debug, Clone)]
pub struct GranularBall<T> {
    pub class_id: usize,
    /// Row indices into the class-positive matrix, ascending.
    pub members: Vec<usize>,
    pub center: Array1<T>,
    /// Population variances per feature, clipped at zero.
    pub variances: Array1<T>,
    /// Euclidean radius: max member distance from the center.
    pub radius: T,
    /// First-order sums per feature.
    pub sum1: Array1<T>,
    /// Second-order sums per feature.
    pub sum2: Array1<T>,
    /// Average boundary risk; zero until populated against class context.
    pub avg_boundary_risk: T,
    /// Nearest-negative distance of the center; zero until populated.
    pub center_neg_dist: T,
}

impl<T: Float> GranularBall<T> {
    pub fn n(&self) -> usize {
        self.members.len()
    }

    pub fn d(&self) -> usize {
        self.center.len()
    }
}

/// Numerically floored radius and variances used inside coding terms.
#[derive(Debug, Clone)]
pub struct EffectiveQuantities<T> {
    pub radius: T,
    pub variances: Array1<T>,
}

/// Build a ball from member rows, computing every statistic in a single
/// accumulation pass plus one radius pass.
pub fn build_ball<T: Float>(
    members: &[usize],
    x_pos: &ArrayView2<T>,
    class_id: usize,
) -> Result<GranularBall<T>> {
    if members.is_empty() {
        return Err(Error::EmptyBall);
    }
    let d = x_pos.ncols();
    let mut sum1 = Array1::zeros(d);
    let mut sum2 = Array1::zeros(d);
    for &i in members {
        let row = x_pos.row(i);
        for j in 0..d {
            let v = row[j];
            sum1[j] = sum1[j] + v;
            sum2[j] = sum2[j] + v * v;
        }
    }
    let mut ball = GranularBall {
        class_id,
        members: members.to_vec(),
        center: Array1::zeros(d),
        variances: Array1::zeros(d),
        radius: T::zero(),
        sum1,
        sum2,
        avg_boundary_risk: T::zero(),
        center_neg_dist: T::zero(),
    };
    finish_from_sums(&mut ball, x_pos);
    Ok(ball)
}

/// Derive center, variances, and radius from the stored sufficient
/// statistics and the exact member set.
fn finish_from_sums<T: Float>(ball: &mut GranularBall<T>, x_pos: &ArrayView2<T>) {
    let n = T::from_count(ball.n());
    let d = ball.d();
    for j in 0..d {
        let mean = ball.sum1[j] / n;
        let var = ball.sum2[j] / n - mean * mean;
        // Rounding can push tiny variances slightly negative.
        debug_assert!(var >= -T::epsilon().sqrt(), "variance underflow: {var:?}");
        ball.center[j] = mean;
        ball.variances[j] = var.max(T::zero());
    }
    ball.radius = radius_over(&ball.members, &ball.center.view(), x_pos);
}

fn radius_over<T: Float>(members: &[usize], center: &ArrayView1<T>, x_pos: &ArrayView2<T>) -> T {
    let mut max_sq = T::zero();
    for &i in members {
        let sq = squared_distance(&x_pos.row(i), center);
        if sq > max_sq {
            max_sq = sq;
        }
    }
    max_sq.sqrt()
}

pub fn squared_distance<T: Float>(a: &ArrayView1<T>, b: &ArrayView1<T>) -> T {
    let mut acc = T::zero();
    for (&x, &y) in a.iter().zip(b.iter()) {
        let diff = x - y;
        acc = acc + diff * diff;
    }
    acc
}

pub fn distance<T: Float>(a: &ArrayView1<T>, b: &ArrayView1<T>) -> T {
    squared_distance(a, b).sqrt()
}

/// Floor the radius and variances by `eps_r` / `eps_v`.
pub fn effective<T: Float>(ball: &GranularBall<T>, eps_r: T, eps_v: T) -> EffectiveQuantities<T> {
    EffectiveQuantities {
        radius: ball.radius.max(eps_r),
        variances: ball.variances.mapv(|v| v.max(eps_v)),
    }
}

/// Effective radius only; cheaper when variances are not needed.
pub fn effective_radius<T: Float>(ball: &GranularBall<T>, eps_r: T) -> T {
    ball.radius.max(eps_r)
}

/// Split a parent into `left_members` and the remainder. Left sums are
/// accumulated incrementally, right sums fall out by subtraction; centers and
/// variances come from each child's own sums, radii are recomputed exactly.
pub fn split_stats<T: Float>(
    parent: &GranularBall<T>,
    left_members: &[usize],
    x_pos: &ArrayView2<T>,
) -> Result<(GranularBall<T>, GranularBall<T>)> {
    if left_members.is_empty() || left_members.len() >= parent.n() {
        return Err(Error::ImproperSubset);
    }
    let mut in_left = vec![false; x_pos.nrows()];
    for &i in left_members {
        if !parent.members.contains(&i) {
            return Err(Error::ImproperSubset);
        }
        in_left[i] = true;
    }

    let d = parent.d();
    let mut left_sum1 = Array1::zeros(d);
    let mut left_sum2 = Array1::zeros(d);
    for &i in left_members {
        let row = x_pos.row(i);
        for j in 0..d {
            let v = row[j];
            left_sum1[j] = left_sum1[j] + v;
            left_sum2[j] = left_sum2[j] + v * v;
        }
    }

    let right_members: Vec<usize> = parent
        .members
        .iter()
        .copied()
        .filter(|&i| !in_left[i])
        .collect();
    let right_sum1 = &parent.sum1 - &left_sum1;
    let right_sum2 = &parent.sum2 - &left_sum2;

    let mut left = GranularBall {
        class_id: parent.class_id,
        members: left_members.to_vec(),
        center: Array1::zeros(d),
        variances: Array1::zeros(d),
        radius: T::zero(),
        sum1: left_sum1,
        sum2: left_sum2,
        avg_boundary_risk: T::zero(),
        center_neg_dist: T::zero(),
    };
    let mut right = GranularBall {
        class_id: parent.class_id,
        members: right_members,
        center: Array1::zeros(d),
        variances: Array1::zeros(d),
        radius: T::zero(),
        sum1: right_sum1,
        sum2: right_sum2,
        avg_boundary_risk: T::zero(),
        center_neg_dist: T::zero(),
    };
    finish_from_sums(&mut left, x_pos);
    finish_from_sums(&mut right, x_pos);
    Ok((left, right))
}

/// Population covariance of the ball plus its dominant eigenvector.
///
/// The eigenvector comes from power iteration with a deterministic start
/// (normalized all-ones). Iteration stops when the eigen-residual
/// `||cov v - (v' cov v) v||` drops to 1e-8, when successive iterates differ
/// by less than 1e-9 in norm, or after 20000 iterations; the cap is sized so
/// near-degenerate spectra still reach the residual target. The result is
/// `None` when the covariance is numerically zero (trace below 1e-18) or the
/// iteration collapses to the zero vector. Signs are canonicalized so the
/// first nonzero component is positive.
pub fn covariance_and_pca<T: Float>(
    ball: &GranularBall<T>,
    x_pos: &ArrayView2<T>,
) -> Result<(Array2<T>, Option<Array1<T>>)> {
    if ball.n() < 2 {
        return Err(Error::TooFewMembers {
            needed: 2,
            got: ball.n(),
        });
    }
    let d = ball.d();
    let n = T::from_count(ball.n());
    let mut cov = Array2::zeros((d, d));
    for &i in &ball.members {
        let row = x_pos.row(i);
        for a in 0..d {
            let da = row[a] - ball.center[a];
            for b in a..d {
                let db = row[b] - ball.center[b];
                cov[[a, b]] = cov[[a, b]] + da * db;
            }
        }
    }
    for a in 0..d {
        for b in a..d {
            let v = cov[[a, b]] / n;
            cov[[a, b]] = v;
            cov[[b, a]] = v;
        }
    }

    let trace: T = (0..d).map(|j| cov[[j, j]]).sum();
    if trace < T::cast(1e-18) {
        return Ok((cov, None));
    }

    let mut v = Array1::from_elem(d, T::one() / T::from_count(d).sqrt());
    let diff_tol = T::cast(1e-9);
    let residual_tol = T::cast(1e-8);
    for _ in 0..20_000 {
        let w = matvec(&cov, &v);
        let norm = w.iter().map(|&x| x * x).sum::<T>().sqrt();
        if norm == T::zero() || !norm.is_finite() {
            return Ok((cov, None));
        }
        // Residual of the current unit iterate: ||w - (v.w) v||. Returning
        // the certified iterate keeps the eigenpair guarantee tight.
        let rayleigh: T = v.iter().zip(w.iter()).map(|(&a, &b)| a * b).sum();
        let residual = v
            .iter()
            .zip(w.iter())
            .map(|(&vi, &wi)| {
                let r = wi - rayleigh * vi;
                r * r
            })
            .sum::<T>()
            .sqrt();
        if residual <= residual_tol {
            break;
        }
        let next = w.mapv(|x| x / norm);
        let diff = next
            .iter()
            .zip(v.iter())
            .map(|(&a, &b)| (a - b) * (a - b))
            .sum::<T>()
            .sqrt();
        v = next;
        if diff < diff_tol {
            break;
        }
    }
    Ok((cov, Some(canonicalize_sign(v))))
}

fn matvec<T: Float>(m: &Array2<T>, v: &Array1<T>) -> Array1<T> {
    let d = v.len();
    let mut out = Array1::zeros(d);
    for a in 0..d {
        let mut acc = T::zero();
        for b in 0..d {
            acc = acc + m[[a, b]] * v[b];
        }
        out[a] = acc;
    }
    out
}

/// Flip the vector so its first nonzero component is positive.
pub fn canonicalize_sign<T: Float>(mut v: Array1<T>) -> Array1<T> {
    for &x in v.iter() {
        if x != T::zero() {
            if x < T::zero() {
                v.mapv_inplace(|y| -y);
            }
            break;
        }
    }
    v
}
