//! Prediction by class-level mixture coding: per-ball energies are
//! aggregated within each class through a shifted log-sum-exp, the class
//! prior is charged, and the class with the minimum coding cost wins.

use ndarray::{Array2, ArrayView1};

use crate::error::{Error, Result};
use crate::float::Float;
use crate::trainer::{Floors, StableBall, TrainedModel};

/// Per-ball energy breakdown exposed in explanations.
#[derive(Debug, Clone)]
pub struct BallEnergy<T> {
    pub ball: usize,
    pub gaussian: T,
    pub boundary: T,
    pub outside: T,
    pub weight: T,
}

/// Scores for every class plus the winning index and, per class, the
/// contributing ball energies.
#[derive(Debug, Clone)]
pub struct PredictionExplanation<T> {
    pub scores: Vec<T>,
    pub winner: usize,
    pub per_ball: Vec<Vec<BallEnergy<T>>>,
}

/// Prediction-time effective radius and variances:
/// `r = max(radius, r0, eps_r)`, `v_j = max(v_j, eta_j, r^2/d, eps_v)`.
pub fn predictive_effective<T: Float>(
    ball: &StableBall<T>,
    floors: &Floors<T>,
    eps_r: T,
    eps_v: T,
) -> (T, Vec<T>) {
    let r = ball.radius.max(floors.r0).max(eps_r);
    let d = T::from_count(ball.center.len());
    let r_sq_over_d = r * r / d;
    let variances = ball
        .variance
        .iter()
        .zip(floors.eta.iter())
        .map(|(&v, &eta)| v.max(eta).max(r_sq_over_d).max(eps_v))
        .collect();
    (r, variances)
}

/// Gaussian, boundary-risk, and outside-ball energies of `x` against one
/// stable ball.
pub fn ball_energy<T: Float>(
    x: &ArrayView1<T>,
    ball: &StableBall<T>,
    floors: &Floors<T>,
    eps_r: T,
    eps_v: T,
    eps_num: T,
) -> (T, T, T) {
    let (r_pred, v_pred) = predictive_effective(ball, floors, eps_r, eps_v);
    let two = T::cast(2.0);
    let two_pi = two * T::PI();

    let mut quad = T::zero();
    let mut log_det = T::zero();
    let mut dist_sq = T::zero();
    for j in 0..ball.center.len() {
        let diff = x[j] - ball.center[j];
        quad = quad + diff * diff / v_pred[j];
        log_det = log_det + (two_pi * v_pred[j]).ln();
        dist_sq = dist_sq + diff * diff;
    }
    let gaussian = (quad + log_det) / two;

    let boundary = -(T::one() - ball.avg_boundary_risk).max(eps_num).ln();

    let dist = dist_sq.sqrt();
    let outside = (T::one() + (dist - r_pred).max(T::zero()) / r_pred).ln();

    (gaussian, boundary, outside)
}

/// Class-level mixture coding cost
/// `S_c = -ln(prior) - ln(sum_k w_k exp(-E_k))`, evaluated with the minimum
/// energy shifted out so the result stays finite for any finite energies.
pub fn class_score<T: Float>(x: &ArrayView1<T>, model: &TrainedModel<T>, class_id: usize) -> T {
    let c = &model.constants;
    let energies: Vec<(T, T)> = model.classes[class_id]
        .iter()
        .map(|ball| {
            let (g, b, o) = ball_energy(x, ball, &model.floors, c.eps_r, c.eps_v, c.eps_num);
            (g + b + o, ball.weight)
        })
        .collect();
    score_from_energies(model.priors[class_id], &energies)
}

/// Shifted log-sum-exp over `(energy, weight)` pairs.
pub fn score_from_energies<T: Float>(prior: T, energies: &[(T, T)]) -> T {
    let min_energy = energies
        .iter()
        .map(|&(e, _)| e)
        .fold(T::infinity(), |acc, e| acc.min(e));
    let mix: T = energies
        .iter()
        .map(|&(e, w)| w * (min_energy - e).exp())
        .sum();
    -prior.ln() + min_energy - mix.ln()
}

/// Predicted class id for a normalized query.
pub fn predict<T: Float>(x: &ArrayView1<T>, model: &TrainedModel<T>) -> Result<usize> {
    check_dimensions(x, model)?;
    let mut winner = 0;
    let mut best = class_score(x, model, 0);
    for c in 1..model.n_classes() {
        let score = class_score(x, model, c);
        if score < best {
            best = score;
            winner = c;
        }
    }
    Ok(winner)
}

/// Predicted class id plus the full score and per-ball energy breakdown.
pub fn predict_explain<T: Float>(
    x: &ArrayView1<T>,
    model: &TrainedModel<T>,
) -> Result<(usize, PredictionExplanation<T>)> {
    check_dimensions(x, model)?;
    let c = &model.constants;
    let mut scores = Vec::with_capacity(model.n_classes());
    let mut per_ball = Vec::with_capacity(model.n_classes());
    for class_id in 0..model.n_classes() {
        let energies: Vec<BallEnergy<T>> = model.classes[class_id]
            .iter()
            .enumerate()
            .map(|(k, ball)| {
                let (g, b, o) = ball_energy(x, ball, &model.floors, c.eps_r, c.eps_v, c.eps_num);
                BallEnergy {
                    ball: k,
                    gaussian: g,
                    boundary: b,
                    outside: o,
                    weight: ball.weight,
                }
            })
            .collect();
        let pairs: Vec<(T, T)> = energies
            .iter()
            .map(|e| (e.gaussian + e.boundary + e.outside, e.weight))
            .collect();
        scores.push(score_from_energies(model.priors[class_id], &pairs));
        per_ball.push(energies);
    }

    let mut winner = 0;
    for c in 1..scores.len() {
        if scores[c] < scores[winner] {
            winner = c;
        }
    }
    Ok((
        winner,
        PredictionExplanation {
            scores,
            winner,
            per_ball,
        },
    ))
}

/// Predict every row of a normalized matrix.
pub fn predict_batch<T: Float>(x: &Array2<T>, model: &TrainedModel<T>) -> Result<Vec<usize>> {
    x.rows().into_iter().map(|row| predict(&row, model)).collect()
}

fn check_dimensions<T: Float>(x: &ArrayView1<T>, model: &TrainedModel<T>) -> Result<()> {
    if x.len() != model.d() {
        return Err(Error::DimensionMismatch {
            expected: model.d(),
            actual: x.len(),
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coding::CodingConstants;
    use crate::dataset::LabeledDataset;
    use crate::trainer::fit;
    use approx::assert_relative_eq;
    use ndarray::array;

    fn unit_floors(d: usize) -> Floors<f64> {
        Floors {
            r0: 0.0,
            eta: vec![0.0; d],
        }
    }

    fn plain_ball(center: Vec<f64>, variance: Vec<f64>, radius: f64) -> StableBall<f64> {
        StableBall {
            center,
            variance,
            radius,
            n: 1,
            avg_boundary_risk: 0.0,
            weight: 1.0,
        }
    }

    #[test]
    fn predictive_effective_orderings() {
        let floors = Floors {
            r0: 0.2,
            eta: vec![0.01],
        };
        // Singleton ball: every floor is active.
        let singleton = plain_ball(vec![0.5], vec![0.0], 0.0);
        let (r, v) = predictive_effective(&singleton, &floors, 1e-10, 1e-10);
        assert_eq!(r, 0.2);
        assert_relative_eq!(v[0], (0.2f64 * 0.2).max(0.01), max_relative = 1e-15);

        // Large ball: every floor inactive, the stored variance survives.
        let large = plain_ball(vec![0.5], vec![0.9], 0.6);
        let (r, v) = predictive_effective(&large, &floors, 1e-10, 1e-10);
        assert_eq!(r, 0.6);
        assert_eq!(v[0], 0.9);

        // Wide radius pushes the r^2/d floor above the stored variance.
        let wide = plain_ball(vec![0.5], vec![0.9], 1.5);
        let (_, v) = predictive_effective(&wide, &floors, 1e-10, 1e-10);
        assert_eq!(v[0], 2.25);

        // Radius between eps_r and r0 is floored to r0.
        let small = plain_ball(vec![0.5], vec![0.9], 0.05);
        let (r, _) = predictive_effective(&small, &floors, 1e-10, 1e-10);
        assert_eq!(r, 0.2);
    }

    #[test]
    fn gaussian_energy_vanishes_at_center_with_unit_entropy_variance() {
        let v = 1.0 / (2.0 * std::f64::consts::PI);
        let ball = plain_ball(vec![0.3], vec![v], 1.0);
        let floors = unit_floors(1);
        // r^2/d = 1 would dominate; force the radius floor below the variance.
        let ball = StableBall { radius: 0.1, ..ball };
        let (g, b, o) = ball_energy(&array![0.3].view(), &ball, &floors, 1e-10, 1e-10, 1e-12);
        assert!(g.abs() < 1e-12, "gaussian energy {g}");
        assert_eq!(b, 0.0);
        assert_eq!(o, 0.0);
    }

    #[test]
    fn outside_penalty_reference_points() {
        let ball = plain_ball(vec![0.0], vec![1.0], 0.5);
        let floors = unit_floors(1);
        // On or inside the effective radius: zero.
        let (_, _, o) = ball_energy(&array![0.4].view(), &ball, &floors, 1e-10, 1e-10, 1e-12);
        assert_eq!(o, 0.0);
        // At twice the effective radius: ln 2.
        let (_, _, o) = ball_energy(&array![1.0].view(), &ball, &floors, 1e-10, 1e-10, 1e-12);
        assert_relative_eq!(o, 2.0f64.ln(), max_relative = 1e-12);
    }

    #[test]
    fn boundary_energy_uses_stored_risk() {
        let mut ball = plain_ball(vec![0.0], vec![1.0], 0.5);
        ball.avg_boundary_risk = 1.0 - (-1.0f64).exp();
        let floors = unit_floors(1);
        let (_, b, _) = ball_energy(&array![0.0].view(), &ball, &floors, 1e-10, 1e-10, 1e-12);
        assert_relative_eq!(b, 1.0, max_relative = 1e-12);
    }

    #[test]
    fn single_ball_score_is_prior_plus_energy() {
        let prior = 0.25;
        let energies = [(3.7, 1.0)];
        let s: f64 = score_from_energies(prior, &energies);
        assert_relative_eq!(s, -(0.25f64).ln() + 3.7, max_relative = 1e-14);
    }

    #[test]
    fn duplicate_balls_match_single_ball_score() {
        let single: f64 = score_from_energies(0.5, &[(2.0, 1.0)]);
        let double: f64 = score_from_energies(0.5, &[(2.0, 0.5), (2.0, 0.5)]);
        assert_relative_eq!(single, double, max_relative = 1e-14);
    }

    #[test]
    fn lse_survives_overflow_energies() {
        // Frozen reference for w = (0.5, 0.5), prior = 0.5,
        // energies = (700, 710), computed at 40-digit precision.
        let s: f64 = score_from_energies(0.5, &[(700.0, 0.5), (710.0, 0.5)]);
        assert!(s.is_finite());
        assert_relative_eq!(s, 701.3862489622207, max_relative = 1e-12);
        // Past exp underflow the naive path degenerates while the shifted
        // evaluation stays finite.
        let naive = -(0.5f64).ln() - (0.5 * (-800.0f64).exp() + 0.5 * (-810.0f64).exp()).ln();
        assert!(naive.is_infinite());
        let shifted: f64 = score_from_energies(0.5, &[(800.0, 0.5), (810.0, 0.5)]);
        assert!(shifted.is_finite());
        let extreme: f64 = score_from_energies(0.5, &[(1e4, 1.0)]);
        assert!(extreme.is_finite());
    }

    #[test]
    fn lse_matches_direct_sum_when_safe() {
        let energies = [(1.0, 0.25), (2.5, 0.5), (0.5, 0.25)];
        let shifted: f64 = score_from_energies(0.4, &energies);
        let direct = -(0.4f64).ln()
            - energies
                .iter()
                .map(|&(e, w)| w * (-e).exp())
                .sum::<f64>()
                .ln();
        assert_relative_eq!(shifted, direct, max_relative = 1e-12);
    }

    fn mirror_model() -> TrainedModel<f64> {
        let ds = LabeledDataset {
            x: array![[0.0], [1.0]],
            y: vec![0, 1],
            n_classes: 2,
            label_names: vec!["a".into(), "b".into()],
        };
        fit(&ds, &CodingConstants::default(), 2035).unwrap()
    }

    #[test]
    fn nearer_singleton_wins_by_symmetry() {
        let model = mirror_model();
        assert_eq!(predict(&array![0.1].view(), &model).unwrap(), 0);
        assert_eq!(predict(&array![0.9].view(), &model).unwrap(), 1);
    }

    #[test]
    fn exact_symmetry_breaks_to_lowest_class_index() {
        let model = mirror_model();
        assert_eq!(predict(&array![0.5].view(), &model).unwrap(), 0);
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let model = mirror_model();
        assert!(matches!(
            predict(&array![0.1, 0.2].view(), &model),
            Err(Error::DimensionMismatch { expected: 1, actual: 2 })
        ));
    }

    #[test]
    fn explanation_reproduces_scores() {
        let model = mirror_model();
        let (winner, expl) = predict_explain(&array![0.3].view(), &model).unwrap();
        assert_eq!(winner, expl.winner);
        for c in 0..2 {
            let pairs: Vec<(f64, f64)> = expl.per_ball[c]
                .iter()
                .map(|e| (e.gaussian + e.boundary + e.outside, e.weight))
                .collect();
            let recomputed = score_from_energies(model.priors[c], &pairs);
            assert!((recomputed - expl.scores[c]).abs() < 1e-12);
        }
    }

    #[test]
    fn prediction_is_bit_stable() {
        let model = mirror_model();
        let a = class_score(&array![0.37].view(), &model, 0);
        let b = class_score(&array![0.37].view(), &model, 0);
        assert_eq!(a.to_bits(), b.to_bits());
    }
}
