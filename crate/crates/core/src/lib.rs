//! A verification toolkit and benchmark harness for on-line handwritten
//! signatures.
//!
//! The crate covers the full desk-scale pipeline:
//!
//! - [`ingest`]: canonical signature / manifest / comparison-list / score
//!   file formats with strict validation;
//! - [`preprocess`]: uniform resampling, channel z-normalization,
//!   zero-pressure removal, and coordinate scaling;
//! - [`features`]: per-sample time-function extractors, global statistics,
//!   and truncated path signatures;
//! - [`alignment`]: classic DTW, differentiable soft-DTW with analytic
//!   gradients, a triplet loss, and DTW pre-alignment;
//! - [`scoring`]: tanh-estimator normalization, weighted fusion,
//!   threshold scorers, and orientation handling;
//! - [`eval`]: FAR/FRR sweeps, equal error rate, forgery breakdowns, and the
//!   points-based team ranking.
//!
//! All numeric code is generic over the scalar type through the [`Real`]
//! trait; `f64` is the default precision and `f32` is supported throughout.
//! Type aliases at the crate root pin the common instantiations.

pub mod alignment;
pub mod error;
pub mod eval;
pub mod features;
pub mod ingest;
pub mod kvfmt;
pub mod preprocess;
mod scalar;
pub mod scoring;

pub use error::{Error, Result};
pub use scalar::Real;

/// Double-precision raw signature.
pub type RawSignature64 = ingest::RawSignature<f64>;
/// Single-precision raw signature.
pub type RawSignature32 = ingest::RawSignature<f32>;
/// Double-precision feature matrix.
pub type TimeFunctionMatrix64 = features::TimeFunctionMatrix<f64>;
/// Single-precision feature matrix.
pub type TimeFunctionMatrix32 = features::TimeFunctionMatrix<f32>;
/// Double-precision global feature vector.
pub type GlobalFeatureVector64 = features::GlobalFeatureVector<f64>;
/// Single-precision global feature vector.
pub type GlobalFeatureVector32 = features::GlobalFeatureVector<f32>;
/// Double-precision DTW outcome.
pub type AlignmentResult64 = alignment::AlignmentResult<f64>;
/// Single-precision DTW outcome.
pub type AlignmentResult32 = alignment::AlignmentResult<f32>;
/// Double-precision labeled score.
pub type ScoreRecord64 = eval::ScoreRecord<f64>;
/// Single-precision labeled score.
pub type ScoreRecord32 = eval::ScoreRecord<f32>;
/// Double-precision evaluation report.
pub type EvalReport64 = eval::EvalReport<f64>;
/// Single-precision evaluation report.
pub type EvalReport32 = eval::EvalReport<f32>;
