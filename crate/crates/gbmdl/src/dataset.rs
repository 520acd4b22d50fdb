//! Tabular data loading, label encoding, leakage-free Min-Max normalization,
//! and deterministic stratified fold assignment.
//!
//! Normalization parameters are always fitted on training rows only and then
//! applied unchanged to test rows, so transformed test values may leave the
//! `[0, 1]` interval; the predictor's outside-ball penalty handles that case.

use std::io::Read;
use std::path::Path;
use std::str::FromStr;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::float::Float;
use crate::rng::SplitMix64;

/// How the label column of a CSV file is identified.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LabelColumn {
    Name(String),
    Index(usize),
}

impl FromStr for LabelColumn {
    type Err = std::convert::Infallible;

    /// All-digit arguments select a 0-based column position, anything else a
    /// header name.
    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        if !s.is_empty() && s.bytes().all(|b| b.is_ascii_digit()) {
            Ok(LabelColumn::Index(s.parse().expect("digits")))
        } else {
            Ok(LabelColumn::Name(s.to_string()))
        }
    }
}

/// Parsed CSV table: raw (unnormalized) features plus raw label strings.
#[derive(Debug, Clone)]
pub struct RawTable<T> {
    pub feature_names: Vec<String>,
    pub rows: Vec<Vec<T>>,
    pub labels: Vec<String>,
}

impl<T: Float> RawTable<T> {
    pub fn n(&self) -> usize {
        self.rows.len()
    }

    pub fn d(&self) -> usize {
        self.rows.first().map_or(0, Vec::len)
    }

    /// Row subset in the given index order.
    pub fn subset(&self, indices: &[usize]) -> RawTable<T> {
        RawTable {
            feature_names: self.feature_names.clone(),
            rows: indices.iter().map(|&i| self.rows[i].clone()).collect(),
            labels: indices.iter().map(|&i| self.labels[i].clone()).collect(),
        }
    }
}

/// Per-feature Min-Max parameters, in raw units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizationParams<T> {
    pub mins: Vec<T>,
    pub maxs: Vec<T>,
}

impl<T: Float> NormalizationParams<T> {
    pub fn d(&self) -> usize {
        self.mins.len()
    }

    /// Normalize a single raw value of feature `j`. Constant features map
    /// to zero.
    pub fn scale(&self, j: usize, value: T) -> T {
        let range = self.maxs[j] - self.mins[j];
        if range == T::zero() {
            T::zero()
        } else {
            (value - self.mins[j]) / range
        }
    }
}

/// Dense label encoding; class ids are positions in first-appearance order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelEncoding {
    names: Vec<String>,
}

impl LabelEncoding {
    pub fn fit(labels: &[String]) -> Self {
        let mut names: Vec<String> = Vec::new();
        for label in labels {
            if !names.contains(label) {
                names.push(label.clone());
            }
        }
        Self { names }
    }

    pub fn from_names(names: Vec<String>) -> Self {
        Self { names }
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.names.iter().position(|n| n == label)
    }

    pub fn name(&self, class_id: usize) -> &str {
        &self.names[class_id]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }
}

/// Normalized feature matrix with encoded integer labels.
#[derive(Debug, Clone)]
pub struct LabeledDataset<T> {
    /// `n x d` feature matrix; entries lie in `[0, 1]` for training data.
    pub x: Array2<T>,
    /// Class id per row, dense in `0..n_classes`.
    pub y: Vec<usize>,
    pub n_classes: usize,
    pub label_names: Vec<String>,
}

impl<T: Float> LabeledDataset<T> {
    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn d(&self) -> usize {
        self.x.ncols()
    }

    /// Per-class sample counts.
    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0usize; self.n_classes];
        for &c in &self.y {
            counts[c] += 1;
        }
        counts
    }
}

/// Disjoint fold index sets for stratified cross-validation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub seed: u64,
    pub k: usize,
    pub folds: Vec<Vec<usize>>,
}

impl FoldPlan {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("fold plan serializes")
    }
}

/// Load a CSV file with a header row; every non-label cell must parse as a
/// finite number.
pub fn load_csv<T: Float>(path: &Path, label_column: &LabelColumn) -> Result<RawTable<T>> {
    let file = std::fs::File::open(path)?;
    read_table(file, label_column)
}

fn read_table<T: Float, R: Read>(reader: R, label_column: &LabelColumn) -> Result<RawTable<T>> {
    let mut csv_reader = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let header: Vec<String> = csv_reader
        .headers()?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();

    let label_idx = match label_column {
        LabelColumn::Name(name) => header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::MissingLabelColumn(name.clone()))?,
        LabelColumn::Index(idx) => {
            if *idx >= header.len() {
                return Err(Error::MissingLabelColumn(idx.to_string()));
            }
            *idx
        }
    };
    if header.len() < 2 {
        return Err(Error::NoFeatureColumns);
    }

    let feature_names: Vec<String> = header
        .iter()
        .enumerate()
        .filter(|(j, _)| *j != label_idx)
        .map(|(_, h)| h.clone())
        .collect();

    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for (row_idx, record) in csv_reader.records().enumerate() {
        let record = record?;
        let mut row = Vec::with_capacity(feature_names.len());
        for (j, cell) in record.iter().enumerate() {
            if j == label_idx {
                labels.push(cell.trim().to_string());
                continue;
            }
            let cell = cell.trim();
            let value: T = cell.parse().map_err(|_| Error::BadCell {
                row: row_idx + 1,
                column: header[j].clone(),
                value: cell.to_string(),
            })?;
            if !value.is_finite() {
                return Err(Error::BadCell {
                    row: row_idx + 1,
                    column: header[j].clone(),
                    value: cell.to_string(),
                });
            }
            row.push(value);
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::EmptyTable);
    }

    Ok(RawTable {
        feature_names,
        rows,
        labels,
    })
}

/// Column-wise extrema of the given rows.
pub fn fit_normalizer<T: Float>(table: &RawTable<T>) -> NormalizationParams<T> {
    let d = table.d();
    let mut mins = table.rows[0].clone();
    let mut maxs = table.rows[0].clone();
    for row in &table.rows[1..] {
        for j in 0..d {
            if row[j] < mins[j] {
                mins[j] = row[j];
            }
            if row[j] > maxs[j] {
                maxs[j] = row[j];
            }
        }
    }
    NormalizationParams { mins, maxs }
}

/// Apply Min-Max normalization and label encoding.
///
/// With `encoding = None` a fresh encoding is fitted from the table's labels;
/// with an existing encoding, unknown labels are rejected. Values outside the
/// fitted range are *not* clamped.
pub fn transform<T: Float>(
    table: &RawTable<T>,
    params: &NormalizationParams<T>,
    encoding: Option<&LabelEncoding>,
) -> Result<LabeledDataset<T>> {
    if table.d() != params.d() {
        return Err(Error::DimensionMismatch {
            expected: params.d(),
            actual: table.d(),
        });
    }

    let owned;
    let encoding = match encoding {
        Some(e) => e,
        None => {
            owned = LabelEncoding::fit(&table.labels);
            &owned
        }
    };

    let n = table.n();
    let d = table.d();
    let mut x = Array2::zeros((n, d));
    for (i, row) in table.rows.iter().enumerate() {
        for j in 0..d {
            x[[i, j]] = params.scale(j, row[j]);
        }
    }

    let mut y = Vec::with_capacity(n);
    for label in &table.labels {
        let class_id = encoding
            .index_of(label)
            .ok_or_else(|| Error::UnknownLabel(label.clone()))?;
        y.push(class_id);
    }

    Ok(LabeledDataset {
        x,
        y,
        n_classes: encoding.len(),
        label_names: encoding.names().to_vec(),
    })
}

/// Deterministic stratified fold assignment.
///
/// Per class, indices are shuffled by SplitMix64 Fisher-Yates (one stream for
/// the whole plan, classes visited in ascending id order) and dealt
/// round-robin into `k` folds. The dealing cursor continues across classes so
/// no fold stays empty when `k` approaches `n`. Fold contents are stored
/// sorted ascending.
pub fn stratified_folds(y: &[usize], k: usize, seed: u64) -> Result<FoldPlan> {
    if k < 2 {
        return Err(Error::TooFewFolds(k));
    }
    if k > y.len() {
        return Err(Error::TooManyFolds { k, n: y.len() });
    }

    let n_classes = y.iter().copied().max().map_or(0, |m| m + 1);
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); n_classes];
    for (i, &c) in y.iter().enumerate() {
        by_class[c].push(i);
    }

    let mut rng = SplitMix64::new(seed);
    let mut folds: Vec<Vec<usize>> = vec![Vec::new(); k];
    let mut cursor = 0usize;
    for indices in &mut by_class {
        rng.shuffle(indices);
        for &idx in indices.iter() {
            folds[cursor % k].push(idx);
            cursor += 1;
        }
    }
    for fold in &mut folds {
        fold.sort_unstable();
    }

    Ok(FoldPlan { seed, k, folds })
}

/// Indices not contained in `fold`, ascending. Assumes `fold` is sorted.
pub fn complement(fold: &[usize], n: usize) -> Vec<usize> {
    let mut out = Vec::with_capacity(n - fold.len());
    let mut it = fold.iter().copied().peekable();
    for i in 0..n {
        if it.peek() == Some(&i) {
            it.next();
        } else {
            out.push(i);
        }
    }
    out
}
