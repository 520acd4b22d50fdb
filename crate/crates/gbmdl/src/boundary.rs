//! Negative boundary evidence: nearest-negative distances, relative and
//! average boundary risk, and the normalized overlap ratio.
//!
//! Sample-level nearest-negative distances depend only on the class split,
//! never on the ball partition, so they are computed once per class by exact
//! exhaustive scan and cached in the class context. Center queries cannot be
//! precomputed and run on demand. When a class has no negatives, every
//! boundary-related quantity is defined to be zero.

use ndarray::{Array2, ArrayView1};

use crate::ball::{effective_radius, squared_distance, GranularBall};
use crate::dataset::LabeledDataset;
use crate::float::Float;

/// Immutable per-class view: positives, negatives, prior, cached
/// nearest-negative distances, and the minimum admissible child-ball size.
#[derive(Debug, Clone)]
pub struct ClassContext<T> {
    pub class_id: usize,
    pub x_pos: Array2<T>,
    pub x_neg: Array2<T>,
    /// Smoothed empirical prior `(n_c + 1) / (n + C)`.
    pub prior: T,
    /// Nearest-negative distance per positive row; zero-filled when there
    /// are no negatives.
    pub delta_pos: Vec<T>,
    pub n_min: usize,
}

impl<T: Float> ClassContext<T> {
    /// Assemble the context for `class_id` from a training dataset.
    pub fn new(dataset: &LabeledDataset<T>, class_id: usize, n_min: usize) -> Self {
        let d = dataset.d();
        let pos_rows: Vec<usize> = (0..dataset.n()).filter(|&i| dataset.y[i] == class_id).collect();
        let neg_rows: Vec<usize> = (0..dataset.n()).filter(|&i| dataset.y[i] != class_id).collect();

        let mut x_pos = Array2::zeros((pos_rows.len(), d));
        for (r, &i) in pos_rows.iter().enumerate() {
            x_pos.row_mut(r).assign(&dataset.x.row(i));
        }
        let mut x_neg = Array2::zeros((neg_rows.len(), d));
        for (r, &i) in neg_rows.iter().enumerate() {
            x_neg.row_mut(r).assign(&dataset.x.row(i));
        }

        let n = T::from_count(dataset.n());
        let c = T::from_count(dataset.n_classes);
        let prior = (T::from_count(pos_rows.len()) + T::one()) / (n + c);

        let mut ctx = Self {
            class_id,
            x_pos,
            x_neg,
            prior,
            delta_pos: Vec::new(),
            n_min,
        };
        ctx.delta_pos = (0..ctx.x_pos.nrows())
            .map(|i| ctx.nearest_negative(&ctx.x_pos.row(i)))
            .collect();
        ctx
    }

    pub fn n_pos(&self) -> usize {
        self.x_pos.nrows()
    }

    pub fn n_neg(&self) -> usize {
        self.x_neg.nrows()
    }

    pub fn has_negatives(&self) -> bool {
        self.n_neg() > 0
    }

    /// Exact exhaustive nearest-negative distance; zero when there are no
    /// negatives.
    pub fn nearest_negative(&self, query: &ArrayView1<T>) -> T {
        if !self.has_negatives() {
            return T::zero();
        }
        let mut best = T::infinity();
        for row in self.x_neg.rows() {
            let sq = squared_distance(&row, query);
            if sq < best {
                best = sq;
            }
        }
        best.sqrt()
    }
}

/// Nearest-negative distance of an arbitrary point.
pub fn nearest_negative_point<T: Float>(query: &ArrayView1<T>, ctx: &ClassContext<T>) -> T {
    ctx.nearest_negative(query)
}

/// Relative boundary risk `1 / (1 + (delta / r_eff)^2)`.
pub fn boundary_risk<T: Float>(delta: T, r_eff: T) -> T {
    let u = delta / r_eff;
    T::one() / (T::one() + u * u)
}

/// Mean boundary risk of the ball's members against its effective radius;
/// zero when the class has no negatives.
pub fn average_boundary_risk<T: Float>(ball: &GranularBall<T>, ctx: &ClassContext<T>, eps_r: T) -> T {
    if !ctx.has_negatives() {
        return T::zero();
    }
    let r_eff = effective_radius(ball, eps_r);
    let total: T = ball
        .members
        .iter()
        .map(|&i| boundary_risk(ctx.delta_pos[i], r_eff))
        .sum();
    total / T::from_count(ball.n())
}

/// Normalized overlap ratio `max(0, r_eff - delta(center)) / r_eff`; zero
/// when the class has no negatives. Reads the ball's populated
/// `center_neg_dist`.
pub fn overlap_ratio<T: Float>(ball: &GranularBall<T>, ctx: &ClassContext<T>, eps_r: T) -> T {
    if !ctx.has_negatives() {
        return T::zero();
    }
    let r_eff = effective_radius(ball, eps_r);
    (r_eff - ball.center_neg_dist).max(T::zero()) / r_eff
}

/// Fill the ball's boundary fields (`avg_boundary_risk`, `center_neg_dist`).
pub fn populate_boundary<T: Float>(ball: &mut GranularBall<T>, ctx: &ClassContext<T>, eps_r: T) {
    ball.center_neg_dist = ctx.nearest_negative(&ball.center.view());
    ball.avg_boundary_risk = average_boundary_risk(ball, ctx, eps_r);
}
