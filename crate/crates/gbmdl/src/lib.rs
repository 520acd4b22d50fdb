//! Boundary-aware granular-ball classifier built on minimum-description-
//! length model competition.
//!
//! Each class is represented by a set of stable granular balls: groups of
//! same-class samples summarized by center, radius, per-feature variances,
//! and count. Training recursively evaluates every unresolved ball against
//! three local explanations — keep it whole, split it geometrically, or peel
//! off its boundary-exposed members — and keeps whichever encodes the data in
//! the fewest nats, with penalties for intruding into or overlapping
//! other-class territory. Prediction compares class-level mixture coding
//! costs over the stable balls.
//!
//! The numeric core is generic over [`Float`] (`f32` or `f64`); the aliases
//! below fix the common entry points at each precision.
//!
//! ```
//! use gbmdl::coding::CodingConstants;
//! use gbmdl::dataset::{fit_normalizer, transform, RawTable};
//! use gbmdl::predictor::predict;
//! use gbmdl::trainer::fit;
//!
//! let table = RawTable {
//!     feature_names: vec!["x".into()],
//!     rows: vec![vec![1.0], vec![2.0], vec![8.0], vec![9.0]],
//!     labels: vec!["a".into(), "a".into(), "b".into(), "b".into()],
//! };
//! let params = fit_normalizer(&table);
//! let ds = transform(&table, &params, None).unwrap();
//! let model = fit(&ds, &CodingConstants::default(), 2035).unwrap();
//! let q = ndarray::array![params.scale(0, 1.5)];
//! assert_eq!(predict(&q.view(), &model).unwrap(), 0);
//! ```

pub mod ball;
pub mod boundary;
pub mod coding;
pub mod competition;
pub mod dataset;
pub mod error;
pub mod eval;
pub mod float;
pub mod model_io;
pub mod predictor;
pub mod rng;
pub mod trainer;

pub use error::{Error, Result};
pub use float::Float;

/// Double-precision aliases, the defaults for the CLI and tools.
pub type LabeledDataset64 = dataset::LabeledDataset<f64>;
pub type CodingConstants64 = coding::CodingConstants<f64>;
pub type TrainedModel64 = trainer::TrainedModel<f64>;
pub type EvalReport64 = eval::EvalReport<f64>;

/// Single-precision aliases.
pub type LabeledDataset32 = dataset::LabeledDataset<f32>;
pub type CodingConstants32 = coding::CodingConstants<f32>;
pub type TrainedModel32 = trainer::TrainedModel<f32>;
pub type EvalReport32 = eval::EvalReport<f32>;
