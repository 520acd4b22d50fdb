//! Description-length terms, all in nats: data encoding under a diagonal
//! Gaussian, intrusion and margin separation penalties, the class-assignment
//! term, the partition-entropy code, and the candidate-selection codes.

use serde::{Deserialize, Serialize};

use crate::ball::GranularBall;
use crate::boundary::{overlap_ratio, ClassContext};
use crate::error::{Error, Result};
use crate::float::Float;

/// Numerical constants shared across coding, training, and prediction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CodingConstants<T> {
    /// Radius floor.
    pub eps_r: T,
    /// Variance floor.
    pub eps_v: T,
    /// Logarithm clip floor for `1 - rho`.
    pub eps_num: T,
    /// Conservative selection margin, absolute nats.
    pub eps_mdl: T,
}

impl<T: Float> Default for CodingConstants<T> {
    fn default() -> Self {
        Self {
            eps_r: T::cast(1e-10),
            eps_v: T::cast(1e-10),
            eps_num: T::cast(1e-12),
            eps_mdl: T::cast(1e-6),
        }
    }
}

/// Per-ball description-length breakdown.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BallCost<T> {
    pub data: T,
    pub intrusion: T,
    pub margin: T,
    pub class_assignment: T,
    pub total: T,
}

/// Data encoding length
/// `(n/2) * sum_j [1 + ln(2 pi v_eff_j)] + d * ln(max(n, 2))` using
/// effective (floored) variances.
pub fn data_length<T: Float>(ball: &GranularBall<T>, constants: &CodingConstants<T>) -> T {
    let n = T::from_count(ball.n());
    let two = T::cast(2.0);
    let two_pi = two * T::PI();
    let per_feature: T = ball
        .variances
        .iter()
        .map(|&v| T::one() + (two_pi * v.max(constants.eps_v)).ln())
        .sum();
    let model_term = T::from_count(ball.d()) * T::from_count(ball.n().max(2)).ln();
    n / two * per_feature + model_term
}

/// Intrusion penalty `n * (-ln max(1 - rho_bar, eps_num))`.
///
/// A class without negatives stores `rho_bar = 0`, which makes this zero.
pub fn intrusion_length<T: Float>(n: usize, rho_bar: T, constants: &CodingConstants<T>) -> T {
    T::from_count(n) * -(T::one() - rho_bar).max(constants.eps_num).ln()
}

/// Margin penalty `n * ln(1 + omega)`.
pub fn margin_length<T: Float>(n: usize, omega: T) -> T {
    T::from_count(n) * (T::one() + omega).ln()
}

/// Class assignment term `-ln(prior)`.
pub fn class_length<T: Float>(prior: T) -> T {
    -prior.ln()
}

/// Full per-ball cost; requires the ball's boundary fields to be populated.
pub fn ball_total<T: Float>(
    ball: &GranularBall<T>,
    ctx: &ClassContext<T>,
    constants: &CodingConstants<T>,
) -> BallCost<T> {
    let data = data_length(ball, constants);
    let intrusion = intrusion_length(ball.n(), ball.avg_boundary_risk, constants);
    let margin = margin_length(ball.n(), overlap_ratio(ball, ctx, constants.eps_r));
    let class_assignment = class_length(ctx.prior);
    BallCost {
        data,
        intrusion,
        margin,
        class_assignment,
        total: data + intrusion + margin + class_assignment,
    }
}

/// Membership-pattern code `n * H(n_left/n, n_right/n)` in nats.
pub fn partition_entropy_code<T: Float>(n_total: usize, n_left: usize) -> Result<T> {
    if n_left == 0 || n_left >= n_total {
        return Err(Error::DegeneratePartition { n_total, n_left });
    }
    let n = T::from_count(n_total);
    let p = T::from_count(n_left) / n;
    let q = T::one() - p;
    Ok(n * (-p * p.ln() - q * q.ln()))
}

/// Selection code for the two-ball search: ordered cut plus direction choice.
pub fn selection_code_two_ball<T: Float>(n: usize, n_directions: usize) -> T {
    T::from_count(n.max(2)).ln() + T::from_count(n_directions.max(1)).ln()
}

/// Selection code for the admissible boundary-size search.
pub fn selection_code_core_boundary<T: Float>(n: usize) -> T {
    T::from_count(n.max(2)).ln()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ball::build_ball;
    use approx::assert_relative_eq;
    use ndarray::{array, Array2};

    fn constants() -> CodingConstants<f64> {
        CodingConstants::default()
    }

    fn no_neg_context(x_pos: Array2<f64>) -> ClassContext<f64> {
        let n_pos = x_pos.nrows();
        let mut ctx = ClassContext {
            class_id: 0,
            x_pos,
            x_neg: Array2::zeros((0, 0)),
            prior: 0.5,
            delta_pos: Vec::new(),
            n_min: 1,
        };
        ctx.delta_pos = vec![0.0; n_pos];
        ctx
    }

    #[test]
    fn data_length_of_two_point_unit_interval() {
        let x = array![[0.0], [1.0]];
        let ball = build_ball(&[0, 1], &x.view(), 0).unwrap();
        // 1 * (1 + ln(pi/2)) + ln 2 = 1 + ln(pi)
        assert_relative_eq!(
            data_length(&ball, &constants()),
            2.144729885849400,
            max_relative = 1e-14
        );
    }

    #[test]
    fn singleton_data_length_is_floor_determined() {
        let x = array![[0.3]];
        let ball = build_ball(&[0], &x.view(), 0).unwrap();
        let expected = 0.5 * (1.0 + (2.0 * std::f64::consts::PI * 1e-10).ln()) + 2.0f64.ln();
        assert_relative_eq!(data_length(&ball, &constants()), expected, max_relative = 1e-14);
        assert_relative_eq!(expected, -9.400839751205610, max_relative = 1e-14);
    }

    #[test]
    fn data_length_first_term_is_linear_in_n() {
        // Doubling n at fixed effective variance doubles the Gaussian term.
        let x = array![[0.0], [1.0], [0.0], [1.0]];
        let small = build_ball(&[0, 1], &x.view(), 0).unwrap();
        let large = build_ball(&[0, 1, 2, 3], &x.view(), 0).unwrap();
        assert_eq!(small.variances[0], large.variances[0]);
        let c = constants();
        let gauss_small = data_length(&small, &c) - 1.0 * 2.0f64.ln();
        let gauss_large = data_length(&large, &c) - 1.0 * 4.0f64.ln();
        assert_relative_eq!(gauss_large, 2.0 * gauss_small, max_relative = 1e-12);
    }

    #[test]
    fn intrusion_reference_points() {
        let c = constants();
        assert_eq!(intrusion_length(5, 0.0, &c), 0.0);
        assert_relative_eq!(
            intrusion_length(7, 1.0 - (-1.0f64).exp(), &c),
            7.0,
            max_relative = 1e-12
        );
        // Full risk activates the clip.
        assert_relative_eq!(
            intrusion_length(3, 1.0, &c),
            3.0 * -(1e-12f64).ln(),
            max_relative = 1e-12
        );
    }

    #[test]
    fn margin_reference_points() {
        assert_eq!(margin_length(10, 0.0), 0.0);
        assert_relative_eq!(margin_length(10, 0.6), 4.700036292457356, max_relative = 1e-14);
        assert_relative_eq!(margin_length(1, 1.0), 2.0f64.ln(), max_relative = 1e-15);
    }

    #[test]
    fn class_length_reference_points() {
        // Balanced three-class prior (50 + 1) / (150 + 3) = 1/3.
        assert_relative_eq!(class_length(51.0 / 153.0), 3.0f64.ln(), max_relative = 1e-14);
        assert_relative_eq!(class_length(0.5), 2.0f64.ln(), max_relative = 1e-15);
    }

    #[test]
    fn ball_total_adds_the_four_terms() {
        let x = array![[0.1], [0.3]];
        let mut ctx = no_neg_context(x);
        ctx.x_neg = array![[10.3]];
        ctx.delta_pos = vec![10.2, 10.0];
        let mut ball = build_ball(&[0, 1], &ctx.x_pos.view(), 0).unwrap();
        crate::boundary::populate_boundary(&mut ball, &ctx, 1e-10);
        let cost = ball_total(&ball, &ctx, &constants());
        assert_relative_eq!(
            cost.total,
            cost.data + cost.intrusion + cost.margin + cost.class_assignment,
            max_relative = 1e-15
        );
        // A negative at distance ~10 adds almost no intrusion and no margin.
        assert!(cost.intrusion < 0.1);
        assert_eq!(cost.margin, 0.0);
    }

    #[test]
    fn ball_total_without_negatives_drops_separation() {
        let ctx = no_neg_context(array![[0.1], [0.3]]);
        let mut ball = build_ball(&[0, 1], &ctx.x_pos.view(), 0).unwrap();
        crate::boundary::populate_boundary(&mut ball, &ctx, 1e-10);
        let cost = ball_total(&ball, &ctx, &constants());
        assert_eq!(cost.intrusion, 0.0);
        assert_eq!(cost.margin, 0.0);
        assert_relative_eq!(
            cost.total,
            cost.data + cost.class_assignment,
            max_relative = 1e-15
        );
    }

    #[test]
    fn partition_code_reference_points() {
        assert_relative_eq!(
            partition_entropy_code::<f64>(4, 2).unwrap(),
            4.0 * 2.0f64.ln(),
            max_relative = 1e-15
        );
        assert_relative_eq!(
            partition_entropy_code::<f64>(10, 1).unwrap(),
            3.250829733914482,
            max_relative = 1e-14
        );
    }

    #[test]
    fn partition_code_is_symmetric() {
        for k in 1..7usize {
            let a: f64 = partition_entropy_code(7, k).unwrap();
            let b: f64 = partition_entropy_code(7, 7 - k).unwrap();
            assert_relative_eq!(a, b, max_relative = 1e-13);
        }
    }

    #[test]
    fn partition_code_rejects_degenerate_sizes() {
        assert!(partition_entropy_code::<f64>(5, 0).is_err());
        assert!(partition_entropy_code::<f64>(5, 5).is_err());
    }

    #[test]
    fn selection_codes() {
        assert_relative_eq!(selection_code_two_ball::<f64>(2, 1), 2.0f64.ln(), max_relative = 1e-15);
        assert_relative_eq!(
            selection_code_two_ball::<f64>(100, 4),
            100.0f64.ln() + 4.0f64.ln(),
            max_relative = 1e-15
        );
        // Zero directions clamp the second term away.
        assert_relative_eq!(
            selection_code_two_ball::<f64>(10, 0),
            10.0f64.ln(),
            max_relative = 1e-15
        );
        assert_relative_eq!(
            selection_code_core_boundary::<f64>(2),
            2.0f64.ln(),
            max_relative = 1e-15
        );
        assert_relative_eq!(
            selection_code_core_boundary::<f64>(1),
            2.0f64.ln(),
            max_relative = 1e-15
        );
        let n = std::f64::consts::E.powi(3).round() as usize;
        assert_relative_eq!(selection_code_core_boundary::<f64>(n), 2.995732273553991, max_relative = 1e-12);
    }

    #[test]
    fn gaussian_nll_identity_when_floor_inactive() {
        // With v = v_eff the first term equals the exact per-sample NLL sum.
        let x = array![[0.0, 0.2], [0.4, 0.9], [0.8, 0.1], [0.2, 0.6]];
        let members = [0, 1, 2, 3];
        let ball = build_ball(&members, &x.view(), 0).unwrap();
        let c = constants();
        let two_pi = 2.0 * std::f64::consts::PI;
        let mut nll = 0.0;
        for &i in &members {
            for j in 0..2 {
                let v = ball.variances[j];
                let diff = x[[i, j]] - ball.center[j];
                nll += 0.5 * ((two_pi * v).ln() + diff * diff / v);
            }
        }
        let expected = nll + 2.0 * (4.0f64).ln();
        assert_relative_eq!(data_length(&ball, &c), expected, max_relative = 1e-12);
    }
}
