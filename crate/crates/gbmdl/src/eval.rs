//! Cross-validation harness: stratified folds, Accuracy and Macro-F1,
//! per-phase wall-clock timings, and report rendering.
//!
//! Folds run independently (in parallel via rayon) and are reduced in fold
//! order, so everything in a report except the wall-clock timings is
//! deterministic for fixed inputs.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ball::squared_distance;
use crate::coding::CodingConstants;
use crate::dataset::{
    complement, fit_normalizer, stratified_folds, transform, LabelEncoding, RawTable,
};
use crate::error::{Error, Result};
use crate::float::Float;
use crate::predictor::predict;
use crate::rng::RNG_ID;
use crate::trainer::fit;

pub const REPORT_FORMAT_VERSION: u64 = 1;

/// Metrics and timings of one fold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldMetrics<T> {
    pub fold: usize,
    pub accuracy: T,
    pub macro_f1: T,
    pub train_seconds: f64,
    pub predict_seconds: f64,
    pub stable_balls: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
}

/// Aggregates over folds; standard deviations use the sample (n-1) form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregates {
    pub accuracy: MeanStd,
    pub macro_f1: MeanStd,
    pub train_seconds: MeanStd,
    pub predict_seconds: MeanStd,
    pub stable_balls: MeanStd,
}

/// Full cross-validation report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport<T> {
    pub format_version: u64,
    pub dataset: String,
    pub k: usize,
    pub seed: u64,
    pub rng: String,
    pub constants: CodingConstants<T>,
    pub folds: Vec<FoldMetrics<T>>,
    pub aggregates: Aggregates,
}

/// Fraction of exact label matches.
pub fn accuracy<T: Float>(y_true: &[usize], y_pred: &[usize]) -> Result<T> {
    if y_true.len() != y_pred.len() || y_true.is_empty() {
        return Err(Error::LengthMismatch {
            left: y_true.len(),
            right: y_pred.len(),
        });
    }
    let hits = y_true
        .iter()
        .zip(y_pred.iter())
        .filter(|(a, b)| a == b)
        .count();
    Ok(T::from_count(hits) / T::from_count(y_true.len()))
}

/// Unweighted mean F1 over the union of classes appearing in the true or
/// predicted labels; any 0/0 ratio is defined as 0.
pub fn macro_f1<T: Float>(y_true: &[usize], y_pred: &[usize]) -> Result<T> {
    if y_true.len() != y_pred.len() || y_true.is_empty() {
        return Err(Error::LengthMismatch {
            left: y_true.len(),
            right: y_pred.len(),
        });
    }
    let mut classes: Vec<usize> = y_true.iter().chain(y_pred.iter()).copied().collect();
    classes.sort_unstable();
    classes.dedup();

    let mut f1_sum = T::zero();
    for &c in &classes {
        let tp = y_true
            .iter()
            .zip(y_pred.iter())
            .filter(|&(&t, &p)| t == c && p == c)
            .count();
        let fp = y_true
            .iter()
            .zip(y_pred.iter())
            .filter(|&(&t, &p)| t != c && p == c)
            .count();
        let fn_ = y_true
            .iter()
            .zip(y_pred.iter())
            .filter(|&(&t, &p)| t == c && p != c)
            .count();
        let precision = ratio_or_zero::<T>(tp, tp + fp);
        let recall = ratio_or_zero::<T>(tp, tp + fn_);
        let denom = precision + recall;
        let f1 = if denom == T::zero() {
            T::zero()
        } else {
            T::cast(2.0) * precision * recall / denom
        };
        f1_sum = f1_sum + f1;
    }
    Ok(f1_sum / T::from_count(classes.len()))
}

fn ratio_or_zero<T: Float>(num: usize, den: usize) -> T {
    if den == 0 {
        T::zero()
    } else {
        T::from_count(num) / T::from_count(den)
    }
}

/// 1-nearest-neighbor predictions, lowest-index tie-break. Sanity baseline
/// only.
pub fn baseline_1nn<T: Float>(
    train_x: &ndarray::Array2<T>,
    train_y: &[usize],
    test_x: &ndarray::Array2<T>,
) -> Vec<usize> {
    test_x
        .rows()
        .into_iter()
        .map(|q| {
            let mut best = 0usize;
            let mut best_sq = T::infinity();
            for (i, row) in train_x.rows().into_iter().enumerate() {
                let sq = squared_distance(&row, &q);
                if sq < best_sq {
                    best_sq = sq;
                    best = i;
                }
            }
            train_y[best]
        })
        .collect()
}

/// Run stratified k-fold cross-validation over a raw table. Normalization
/// and model floors are fitted per fold on the training portion only.
pub fn cross_validate<T: Float>(
    table: &RawTable<T>,
    dataset_name: &str,
    k: usize,
    seed: u64,
    constants: &CodingConstants<T>,
) -> Result<EvalReport<T>> {
    let encoding = LabelEncoding::fit(&table.labels);
    let y_global: Vec<usize> = table
        .labels
        .iter()
        .map(|l| encoding.index_of(l).expect("label fitted above"))
        .collect();
    let plan = stratified_folds(&y_global, k, seed)?;

    let folds: Vec<FoldMetrics<T>> = plan
        .folds
        .par_iter()
        .enumerate()
        .map(|(fold_idx, test_idx)| -> Result<FoldMetrics<T>> {
            let train_idx = complement(test_idx, table.n());
            let train_table = table.subset(&train_idx);
            let test_table = table.subset(test_idx);

            let params = fit_normalizer(&train_table);
            let train_ds = transform(&train_table, &params, Some(&encoding))?;

            let t0 = Instant::now();
            let model = fit(&train_ds, constants, seed)?;
            let train_seconds = t0.elapsed().as_secs_f64();

            let test_ds = transform(&test_table, &params, Some(&encoding))?;
            let t1 = Instant::now();
            let y_pred: Vec<usize> = test_ds
                .x
                .rows()
                .into_iter()
                .map(|row| predict(&row, &model))
                .collect::<Result<_>>()?;
            let predict_seconds = t1.elapsed().as_secs_f64();

            Ok(FoldMetrics {
                fold: fold_idx,
                accuracy: accuracy(&test_ds.y, &y_pred)?,
                macro_f1: macro_f1(&test_ds.y, &y_pred)?,
                train_seconds,
                predict_seconds,
                stable_balls: model.total_balls(),
            })
        })
        .collect::<Result<_>>()?;

    let aggregates = aggregate(&folds);
    Ok(EvalReport {
        format_version: REPORT_FORMAT_VERSION,
        dataset: dataset_name.to_string(),
        k,
        seed,
        rng: RNG_ID.to_string(),
        constants: *constants,
        folds,
        aggregates,
    })
}

/// Recompute aggregates from per-fold values.
pub fn aggregate<T: Float>(folds: &[FoldMetrics<T>]) -> Aggregates {
    Aggregates {
        accuracy: mean_std(folds.iter().map(|f| f.accuracy.to_f64().unwrap())),
        macro_f1: mean_std(folds.iter().map(|f| f.macro_f1.to_f64().unwrap())),
        train_seconds: mean_std(folds.iter().map(|f| f.train_seconds)),
        predict_seconds: mean_std(folds.iter().map(|f| f.predict_seconds)),
        stable_balls: mean_std(folds.iter().map(|f| f.stable_balls as f64)),
    }
}

fn mean_std(values: impl Iterator<Item = f64>) -> MeanStd {
    let values: Vec<f64> = values.collect();
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let std = if values.len() < 2 {
        0.0
    } else {
        (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)).sqrt()
    };
    MeanStd { mean, std }
}

/// Aligned-text rendering of the deterministic part of a report (metrics and
/// ball counts; timings live in the JSON form only).
pub fn render_text<T: Float>(report: &EvalReport<T>) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "dataset: {}    folds: {}    seed: {}    rng: {}\n",
        report.dataset, report.k, report.seed, report.rng
    ));
    out.push_str(&format!(
        "{:<12}{}\n",
        "accuracy",
        format_mean_std(&report.aggregates.accuracy)
    ));
    out.push_str(&format!(
        "{:<12}{}\n",
        "macro_f1",
        format_mean_std(&report.aggregates.macro_f1)
    ));
    out.push_str(&format!(
        "{:<12}{:.1}\n",
        "balls", report.aggregates.stable_balls.mean
    ));
    out.push_str(&format!(
        "{:<6}{:>10}{:>10}{:>8}\n",
        "fold", "accuracy", "macro_f1", "balls"
    ));
    for f in &report.folds {
        out.push_str(&format!(
            "{:<6}{:>10.4}{:>10.4}{:>8}\n",
            f.fold,
            f.accuracy.to_f64().unwrap(),
            f.macro_f1.to_f64().unwrap(),
            f.stable_balls
        ));
    }
    out
}

fn format_mean_std(ms: &MeanStd) -> String {
    format!("{:.4} \u{00b1} {:.4}", ms.mean, ms.std)
}
