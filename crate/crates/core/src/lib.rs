//! Compression-based dissimilarity between byte strings, with sizes corrected
//! for each compressor's constant per-file overhead, applied to composer
//! classification of piano scores.
//!
//! The numeric parts (measures, the offset fit, the classifier) are generic
//! over [`Scalar`]; the aliases below fix the two instantiations the rest of
//! the workspace uses: `f64` for bulk work and [`Exact`] rationals where
//! results must be compared for equality.

pub mod calibration;
pub mod classify;
pub mod compressor;
pub mod encoding;
pub mod measures;
pub mod scalar;
pub mod stats;

pub use scalar::Scalar;

/// Floating point scalar used for distance matrices and reports.
pub type Real = f64;
/// Arbitrary-precision rational scalar.
pub type Exact = num_rational::BigRational;

pub type DistanceMatrix = measures::DistanceMatrix<Real>;
pub type ExactDistanceMatrix = measures::DistanceMatrix<Exact>;
pub type OffsetModel = calibration::OffsetModel<Real>;
pub type ExactOffsetModel = calibration::OffsetModel<Exact>;
pub type CalibrationPoint = calibration::CalibrationPoint<Real>;
