//! Training loop: per-class FIFO processing of unresolved balls under local
//! MDL competition, stable-ball collection, prediction-floor estimation, and
//! model assembly.

use std::collections::VecDeque;
use std::time::Instant;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::ball::{build_ball, GranularBall};
use crate::boundary::{populate_boundary, ClassContext};
use crate::coding::CodingConstants;
use crate::competition::{compete, granularity, GranularityRule, LocalModel};
use crate::dataset::{LabeledDataset, NormalizationParams};
use crate::error::{Error, Result};
use crate::float::Float;
use crate::rng::RNG_ID;

/// Serialized form of one stable ball.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StableBall<T> {
    pub center: Vec<T>,
    pub variance: Vec<T>,
    pub radius: T,
    pub n: usize,
    pub avg_boundary_risk: T,
    /// Mixture weight `n / n_c`.
    pub weight: T,
}

/// Prediction-time lower bounds on radius and per-feature variance.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Floors<T> {
    pub r0: T,
    pub eta: Vec<T>,
}

/// Provenance carried alongside a model. Training time is measured at fit
/// time and intentionally absent from saved model files, which must be
/// byte-identical across reruns.
#[derive(Debug, Clone)]
pub struct ModelMetadata {
    pub seed: u64,
    pub unit: &'static str,
    pub format_version: u64,
    pub rng: &'static str,
    pub train_seconds: Option<f64>,
}

/// The complete trained classifier.
#[derive(Debug, Clone)]
pub struct TrainedModel<T> {
    pub normalization: NormalizationParams<T>,
    pub label_names: Vec<String>,
    pub priors: Vec<T>,
    /// Stable balls per class, in emission order.
    pub classes: Vec<Vec<StableBall<T>>>,
    pub floors: Floors<T>,
    pub constants: CodingConstants<T>,
    pub metadata: ModelMetadata,
}

impl<T: Float> TrainedModel<T> {
    pub fn n_classes(&self) -> usize {
        self.classes.len()
    }

    pub fn d(&self) -> usize {
        self.normalization.mins.len()
    }

    pub fn total_balls(&self) -> usize {
        self.classes.iter().map(Vec::len).sum()
    }
}

/// One line of the training trace: a ball was popped and either emitted
/// directly (too small to split) or run through the competition.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TraceRecord<T> {
    pub class_id: usize,
    pub ball: usize,
    pub n: usize,
    pub event: TraceEvent<T>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TraceEvent<T> {
    /// Below `2 n_min`: emitted stable without competition.
    SmallBall,
    Compete {
        l_single: T,
        l_two: Option<T>,
        l_core_boundary: Option<T>,
        chosen: LocalModel,
        #[serde(skip_serializing_if = "Option::is_none")]
        children: Option<(usize, usize)>,
        #[serde(skip_serializing_if = "Option::is_none")]
        child_sizes: Option<(usize, usize)>,
    },
}

/// Full training byproducts kept out of the model file: the trace, stable
/// ball memberships (sidecar), and the per-class competition counters.
#[derive(Debug, Clone, Default)]
pub struct TrainingTrace<T> {
    pub records: Vec<TraceRecord<T>>,
    /// Member ids of each emitted stable ball, grouped by class.
    pub memberships: Vec<Vec<Vec<usize>>>,
    pub compete_counts: Vec<usize>,
}

/// Result of training one class: stable balls in emission order.
pub struct ClassTraining<T> {
    pub stable: Vec<GranularBall<T>>,
    pub compete_count: usize,
}

/// Run the recursive queue for one class.
///
/// The root ball holds the whole positive set; balls below `2 n_min` are
/// emitted directly, everything else runs the competition. Winning
/// decompositions push both children back onto the FIFO queue.
pub fn train_class<T: Float>(
    ctx: &ClassContext<T>,
    rule: &GranularityRule,
    constants: &CodingConstants<T>,
    mut trace: Option<&mut Vec<TraceRecord<T>>>,
) -> Result<ClassTraining<T>> {
    if ctx.n_pos() == 0 {
        return Err(Error::EmptyClass(format!("class {}", ctx.class_id)));
    }
    let x_pos = ctx.x_pos.view();
    let all: Vec<usize> = (0..ctx.n_pos()).collect();
    let mut root = build_ball(&all, &x_pos, ctx.class_id)?;
    populate_boundary(&mut root, ctx, constants.eps_r);

    let mut next_id = 0usize;
    let mut queue: VecDeque<(usize, GranularBall<T>)> = VecDeque::new();
    queue.push_back((next_id, root));
    next_id += 1;

    let mut stable = Vec::new();
    let mut compete_count = 0usize;
    while let Some((ball_id, ball)) = queue.pop_front() {
        if ball.n() < 2 * rule.n_min {
            if let Some(t) = trace.as_deref_mut() {
                t.push(TraceRecord {
                    class_id: ctx.class_id,
                    ball: ball_id,
                    n: ball.n(),
                    event: TraceEvent::SmallBall,
                });
            }
            stable.push(ball);
            continue;
        }

        compete_count += 1;
        let decision = compete(&ball, ctx, rule, constants);
        match decision.model {
            LocalModel::SingleBall => {
                if let Some(t) = trace.as_deref_mut() {
                    t.push(TraceRecord {
                        class_id: ctx.class_id,
                        ball: ball_id,
                        n: ball.n(),
                        event: TraceEvent::Compete {
                            l_single: decision.l_single,
                            l_two: decision.l_two,
                            l_core_boundary: decision.l_core_boundary,
                            chosen: LocalModel::SingleBall,
                            children: None,
                            child_sizes: None,
                        },
                    });
                }
                stable.push(ball);
            }
            model => {
                let dec = decision
                    .decomposition
                    .as_ref()
                    .ok_or_else(|| Error::Invariant("accepted split without decomposition".into()))?;
                let accepted = match model {
                    LocalModel::TwoBall => decision.l_two,
                    LocalModel::CoreBoundary => decision.l_core_boundary,
                    LocalModel::SingleBall => unreachable!(),
                };
                let accepted = accepted
                    .ok_or_else(|| Error::Invariant("accepted split without length".into()))?;
                if !(accepted < decision.l_single - constants.eps_mdl) {
                    return Err(Error::Invariant(
                        "accepted split does not satisfy the MDL descent margin".into(),
                    ));
                }

                let mut left = build_ball(&dec.left, &x_pos, ctx.class_id)?;
                let mut right = build_ball(&dec.right, &x_pos, ctx.class_id)?;
                populate_boundary(&mut left, ctx, constants.eps_r);
                populate_boundary(&mut right, ctx, constants.eps_r);
                let left_id = next_id;
                let right_id = next_id + 1;
                next_id += 2;
                if let Some(t) = trace.as_deref_mut() {
                    t.push(TraceRecord {
                        class_id: ctx.class_id,
                        ball: ball_id,
                        n: ball.n(),
                        event: TraceEvent::Compete {
                            l_single: decision.l_single,
                            l_two: decision.l_two,
                            l_core_boundary: decision.l_core_boundary,
                            chosen: model,
                            children: Some((left_id, right_id)),
                            child_sizes: Some((left.n(), right.n())),
                        },
                    });
                }
                queue.push_back((left_id, left));
                queue.push_back((right_id, right));
            }
        }
    }

    // Conservation: stable members partition the positive set.
    let mut seen: Vec<usize> = stable.iter().flat_map(|b| b.members.iter().copied()).collect();
    seen.sort_unstable();
    if seen != all {
        return Err(Error::Invariant(format!(
            "stable balls of class {} do not partition its samples",
            ctx.class_id
        )));
    }
    if compete_count > 2 * ctx.n_pos() - 1 {
        return Err(Error::Invariant(format!(
            "competition count {} exceeds bound for class {}",
            compete_count, ctx.class_id
        )));
    }

    Ok(ClassTraining {
        stable,
        compete_count,
    })
}

/// Prediction floors from the stable balls and the full training matrix:
/// `r0` is the nearest-rank 5th percentile of the strictly positive stable
/// radii (falling back to `eps_r`), `eta_j` is 1e-3 times the global
/// population variance of feature `j`, floored at `eps_v`.
pub fn estimate_floors<T: Float>(
    stable_per_class: &[Vec<GranularBall<T>>],
    x_train: &Array2<T>,
    constants: &CodingConstants<T>,
) -> Floors<T> {
    let mut positive_radii: Vec<T> = stable_per_class
        .iter()
        .flatten()
        .map(|b| b.radius)
        .filter(|&r| r > T::zero())
        .collect();
    let r0 = if positive_radii.is_empty() {
        constants.eps_r
    } else {
        positive_radii.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let rank = (5 * positive_radii.len() + 99) / 100; // ceil(0.05 n), >= 1
        positive_radii[rank.max(1) - 1]
    };

    let n = T::from_count(x_train.nrows());
    let scale = T::cast(1e-3);
    let eta = (0..x_train.ncols())
        .map(|j| {
            let col = x_train.column(j);
            let mean = col.iter().copied().sum::<T>() / n;
            let var = col.iter().map(|&v| (v - mean) * (v - mean)).sum::<T>() / n;
            (scale * var).max(constants.eps_v)
        })
        .collect();

    Floors { r0, eta }
}

/// Fit a model on a normalized training dataset. The recorded normalization
/// is the identity; use [`fit_normalized`] to embed the raw-unit parameters.
pub fn fit<T: Float>(
    dataset: &LabeledDataset<T>,
    constants: &CodingConstants<T>,
    seed: u64,
) -> Result<TrainedModel<T>> {
    fit_traced(dataset, constants, seed, false).map(|(model, _)| model)
}

/// Fit and also return the training trace, stable memberships, and
/// competition counters.
pub fn fit_traced<T: Float>(
    dataset: &LabeledDataset<T>,
    constants: &CodingConstants<T>,
    seed: u64,
    with_records: bool,
) -> Result<(TrainedModel<T>, TrainingTrace<T>)> {
    let start = Instant::now();
    let counts = dataset.class_counts();
    for (c, &count) in counts.iter().enumerate() {
        if count == 0 {
            return Err(Error::EmptyClass(
                dataset
                    .label_names
                    .get(c)
                    .cloned()
                    .unwrap_or_else(|| c.to_string()),
            ));
        }
    }

    let d = dataset.d();
    let mut classes = Vec::with_capacity(dataset.n_classes);
    let mut priors = Vec::with_capacity(dataset.n_classes);
    let mut trace = TrainingTrace::default();
    let mut stable_per_class: Vec<Vec<GranularBall<T>>> = Vec::with_capacity(dataset.n_classes);

    for class_id in 0..dataset.n_classes {
        let rule = granularity(counts[class_id], d);
        let ctx = ClassContext::new(dataset, class_id, rule.n_min);
        priors.push(ctx.prior);
        let mut records = if with_records { Some(Vec::new()) } else { None };
        let trained = train_class(&ctx, &rule, constants, records.as_mut())?;
        if let Some(records) = records {
            trace.records.extend(records);
        }
        trace.compete_counts.push(trained.compete_count);
        trace
            .memberships
            .push(trained.stable.iter().map(|b| b.members.clone()).collect());
        stable_per_class.push(trained.stable);
    }

    let floors = estimate_floors(&stable_per_class, &dataset.x, constants);

    for (class_id, stable) in stable_per_class.iter().enumerate() {
        let n_c = T::from_count(counts[class_id]);
        let balls = stable
            .iter()
            .map(|b| StableBall {
                center: b.center.to_vec(),
                variance: b.variances.to_vec(),
                radius: b.radius,
                n: b.n(),
                avg_boundary_risk: b.avg_boundary_risk,
                weight: T::from_count(b.n()) / n_c,
            })
            .collect();
        classes.push(balls);
    }

    let model = TrainedModel {
        normalization: NormalizationParams {
            mins: vec![T::zero(); d],
            maxs: vec![T::one(); d],
        },
        label_names: dataset.label_names.clone(),
        priors,
        classes,
        floors,
        constants: *constants,
        metadata: ModelMetadata {
            seed,
            unit: "nats",
            format_version: crate::model_io::FORMAT_VERSION,
            rng: RNG_ID,
            train_seconds: Some(start.elapsed().as_secs_f64()),
        },
    };
    Ok((model, trace))
}

/// Fit with explicit normalization parameters recorded into the model, the
/// usual entry point when training from raw tables.
pub fn fit_normalized<T: Float>(
    dataset: &LabeledDataset<T>,
    normalization: NormalizationParams<T>,
    constants: &CodingConstants<T>,
    seed: u64,
) -> Result<TrainedModel<T>> {
    let mut model = fit(dataset, constants, seed)?;
    model.normalization = normalization;
    Ok(model)
}
