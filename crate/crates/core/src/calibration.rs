//! Estimating a compressor's constant per-file overhead.
//!
//! Random byte strings are incompressible, so their compressed size grows
//! with slope close to one byte per input byte; the intercept of a
//! least-squares line through `(length, mean compressed size)` is the part of
//! every compressed file that carries no information about the input.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::compressor::{CompressError, SizeOracle};
use crate::scalar::Scalar;

pub const DEFAULT_MAX_LEN: usize = 100;
pub const DEFAULT_TRIALS: usize = 5;

#[derive(Debug, Error)]
pub enum CalibrationError {
    #[error("need at least two distinct input lengths to fit a line")]
    Degenerate,
    #[error("invalid calibration parameters: {0}")]
    InvalidParameters(String),
    #[error(transparent)]
    Compressor(#[from] CompressError),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CalibrationPoint<T> {
    pub input_length: u64,
    pub mean_size: T,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OffsetModel<T> {
    /// Compressed bytes per input byte.
    pub slope: T,
    pub intercept: T,
    /// Intercept rounded half-up, clamped to `[0, smallest observed mean size]`.
    pub offset: u64,
    pub compressor_id: String,
}

impl<T: Scalar> OffsetModel<T> {
    /// The intercept rounded half-up, before clamping. Differs from `offset`
    /// when a compressor's empty-input output is shorter than its per-file
    /// overhead on non-empty input (bzip2 writes a 14-byte stream for "").
    pub fn rounded_intercept(&self) -> i64 {
        self.intercept.round_half_up()
    }
}

/// `trials_per_length` uniform random byte strings for every length in `0..=max_len`.
pub fn generate_random_inputs(
    max_len: usize,
    trials_per_length: usize,
    seed: u64,
) -> Vec<(usize, Vec<u8>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity((max_len + 1) * trials_per_length);
    for len in 0..=max_len {
        for _ in 0..trials_per_length {
            let mut bytes = vec![0u8; len];
            rng.fill(&mut bytes[..]);
            out.push((len, bytes));
        }
    }
    out
}

/// Ordinary least squares of `mean_size` on `input_length`.
pub fn fit_line<T: Scalar>(points: &[CalibrationPoint<T>]) -> Result<OffsetModel<T>, CalibrationError> {
    let distinct = points
        .iter()
        .map(|p| p.input_length)
        .collect::<std::collections::BTreeSet<_>>()
        .len();
    if distinct < 2 {
        return Err(CalibrationError::Degenerate);
    }

    let n = T::from_usize(points.len()).expect("point count fits scalar");
    let xs: Vec<T> = points.iter().map(|p| T::from_size(p.input_length)).collect();
    let sum = |v: &mut dyn Iterator<Item = T>| v.fold(T::zero(), |a, b| a + b);
    let mean_x = sum(&mut xs.iter().cloned()) / n.clone();
    let mean_y = sum(&mut points.iter().map(|p| p.mean_size.clone())) / n;

    let mut sxy = T::zero();
    let mut sxx = T::zero();
    for (x, p) in xs.iter().zip(points) {
        let dx = x.clone() - mean_x.clone();
        sxy = sxy + dx.clone() * (p.mean_size.clone() - mean_y.clone());
        sxx = sxx + dx.clone() * dx;
    }
    let slope = sxy / sxx;
    let intercept = mean_y - slope.clone() * mean_x;

    let floor_min = points
        .iter()
        .map(|p| p.mean_size.floor_value())
        .min_by(|a, b| a.partial_cmp(b).expect("finite sizes"))
        .and_then(|m| m.to_i64())
        .unwrap_or(0)
        .max(0);
    let offset = intercept.round_half_up().clamp(0, floor_min) as u64;

    Ok(OffsetModel { slope, intercept, offset, compressor_id: String::new() })
}

/// Compresses random inputs, averages sizes per length and fits the line.
pub fn estimate_offset<T: Scalar>(
    oracle: &dyn SizeOracle,
    max_len: usize,
    trials: usize,
    seed: u64,
) -> Result<(OffsetModel<T>, Vec<CalibrationPoint<T>>), CalibrationError> {
    if max_len < 1 || trials < 1 {
        return Err(CalibrationError::InvalidParameters(format!(
            "max_len = {max_len} and trials = {trials} must both be at least 1"
        )));
    }
    let inputs = generate_random_inputs(max_len, trials, seed);
    let sizes: Vec<u64> = inputs
        .par_iter()
        .map(|(_, bytes)| oracle.size(bytes))
        .collect::<Result<_, _>>()?;

    let trials_t = T::from_usize(trials).expect("trial count fits scalar");
    let points: Vec<CalibrationPoint<T>> = sizes
        .chunks(trials)
        .enumerate()
        .map(|(len, chunk)| {
            let total = chunk.iter().fold(T::zero(), |acc, &s| acc + T::from_size(s));
            CalibrationPoint { input_length: len as u64, mean_size: total / trials_t.clone() }
        })
        .collect();

    let mut model = fit_line(&points)?;
    model.compressor_id = oracle.id().to_string();
    Ok((model, points))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::exact;
    use num_rational::BigRational;

    struct Affine {
        a: u64,
        b: u64,
    }

    impl SizeOracle for Affine {
        fn id(&self) -> &str {
            "affine"
        }
        fn size(&self, input: &[u8]) -> Result<u64, CompressError> {
            Ok(self.a * input.len() as u64 + self.b)
        }
    }

    fn pts(f: impl Fn(u64) -> i64) -> Vec<CalibrationPoint<BigRational>> {
        (0..=100)
            .map(|l| CalibrationPoint { input_length: l, mean_size: exact(f(l), 1) })
            .collect()
    }

    #[test]
    fn random_inputs_shape() {
        let c = generate_random_inputs(100, 5, 42);
        assert_eq!(c.len(), 505);
        assert!(c.iter().enumerate().all(|(i, (l, b))| *l == i / 5 && b.len() == *l));
        assert_eq!(c, generate_random_inputs(100, 5, 42));
        assert_ne!(c, generate_random_inputs(100, 5, 43));
        let zero = generate_random_inputs(0, 3, 9);
        assert_eq!(zero.len(), 3);
        assert!(zero.iter().all(|(l, b)| *l == 0 && b.is_empty()));
    }

    #[test]
    fn exact_affine_fit() {
        let m = fit_line(&pts(|l| l as i64 + 45)).unwrap();
        assert_eq!(m.slope, exact(1, 1));
        assert_eq!(m.intercept, exact(45, 1));
        assert_eq!(m.offset, 45);

        let m = fit_line(&pts(|_| 45)).unwrap();
        assert_eq!(m.slope, exact(0, 1));
        assert_eq!(m.intercept, exact(45, 1));
        assert_eq!(m.offset, 45);
    }

    #[test]
    fn offset_is_clamped() {
        // Intercept 50 but the smallest observed size is 47.
        let points = vec![
            CalibrationPoint { input_length: 0, mean_size: 47.0 },
            CalibrationPoint { input_length: 10, mean_size: 63.0 },
            CalibrationPoint { input_length: 20, mean_size: 60.0 },
        ];
        let m = fit_line(&points).unwrap();
        assert!(m.intercept > 47.0);
        assert_eq!(m.offset, 47);

        let negative = vec![
            CalibrationPoint { input_length: 1, mean_size: 1.0 },
            CalibrationPoint { input_length: 2, mean_size: 5.0 },
        ];
        assert_eq!(fit_line(&negative).unwrap().offset, 0);
    }

    #[test]
    fn degenerate_lengths() {
        let same = vec![
            CalibrationPoint { input_length: 5, mean_size: 1.0 },
            CalibrationPoint { input_length: 5, mean_size: 2.0 },
        ];
        assert!(matches!(fit_line(&same), Err(CalibrationError::Degenerate)));
        assert!(matches!(fit_line::<f64>(&[]), Err(CalibrationError::Degenerate)));
    }

    #[test]
    fn mock_compressors_recover_offset() {
        let (m, points) = estimate_offset::<BigRational>(&Affine { a: 1, b: 45 }, 100, 5, 1).unwrap();
        assert_eq!((m.offset, m.slope.clone()), (45, exact(1, 1)));
        assert_eq!(m.compressor_id, "affine");
        assert_eq!(points.len(), 101);
        let (m, _) = estimate_offset::<BigRational>(&Affine { a: 2, b: 10 }, 100, 5, 1).unwrap();
        assert_eq!((m.offset, m.slope), (10, exact(2, 1)));
        let (m, _) = estimate_offset::<f64>(&Affine { a: 2, b: 10 }, 100, 5, 1).unwrap();
        assert_eq!((m.offset, m.slope, m.intercept), (10, 2.0, 10.0));
    }

    #[test]
    fn invalid_parameters() {
        assert!(estimate_offset::<f64>(&Affine { a: 1, b: 0 }, 0, 5, 1).is_err());
        assert!(estimate_offset::<f64>(&Affine { a: 1, b: 0 }, 10, 0, 1).is_err());
    }
}
