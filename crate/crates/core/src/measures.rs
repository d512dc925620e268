//! Compression-based dissimilarities and pairwise distance matrices.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::compressor::{CachedCompressor, CompressError, CompressorSpec, SizeCache, SizeOracle};
use crate::scalar::Scalar;

#[derive(Debug, Error)]
pub enum MeasureError {
    #[error("zero denominator")]
    ZeroDenominator,
    #[error("compressed size {size} of {item} does not exceed offset {offset}")]
    OffsetTooLarge { item: String, size: u64, offset: u64 },
    #[error("compressing {item}: {source}")]
    Compressor {
        item: String,
        #[source]
        source: CompressError,
    },
    #[error("empty corpus")]
    EmptyCorpus,
}

/// Which dissimilarity to form from compressed sizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum MeasureSpec {
    Cdm,
    CdmOffset { offset: u64 },
    Ncd,
}

impl MeasureSpec {
    pub fn offset(&self) -> Option<u64> {
        match self {
            MeasureSpec::CdmOffset { offset } => Some(*offset),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            MeasureSpec::Cdm => "cdm",
            MeasureSpec::CdmOffset { .. } => "cdm-offset",
            MeasureSpec::Ncd => "ncd",
        }
    }
}

impl std::fmt::Display for MeasureSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            MeasureSpec::CdmOffset { offset } => write!(f, "cdm-offset({offset})"),
            other => f.write_str(other.name()),
        }
    }
}

/// `C(xy) / (C(x) + C(y))`.
pub fn cdm<T: Scalar>(c_x: u64, c_y: u64, c_xy: u64) -> Result<T, MeasureError> {
    let denom = c_x + c_y;
    if denom == 0 {
        return Err(MeasureError::ZeroDenominator);
    }
    Ok(T::from_size(c_xy) / T::from_size(denom))
}

/// CDM over offset-corrected sizes `C(·) - offset`. Any common positive scale
/// applied to the corrected sizes cancels, so none is taken.
pub fn cdm_offset<T: Scalar>(c_x: u64, c_y: u64, c_xy: u64, offset: u64) -> Result<T, MeasureError> {
    for (item, size) in [("x", c_x), ("y", c_y), ("xy", c_xy)] {
        if size <= offset && offset > 0 {
            return Err(MeasureError::OffsetTooLarge { item: item.into(), size, offset });
        }
    }
    cdm(c_x - offset, c_y - offset, c_xy - offset)
}

/// `(C(xy) - min(C(x), C(y))) / max(C(x), C(y))`, clamped below at zero.
pub fn ncd<T: Scalar>(c_x: u64, c_y: u64, c_xy: u64) -> Result<T, MeasureError> {
    let max = c_x.max(c_y);
    if max == 0 {
        return Err(MeasureError::ZeroDenominator);
    }
    Ok(T::from_size(c_xy.saturating_sub(c_x.min(c_y))) / T::from_size(max))
}

pub fn dissimilarity<T: Scalar>(
    measure: MeasureSpec,
    c_x: u64,
    c_y: u64,
    c_xy: u64,
) -> Result<T, MeasureError> {
    match measure {
        MeasureSpec::Cdm => cdm(c_x, c_y, c_xy),
        MeasureSpec::CdmOffset { offset } => cdm_offset(c_x, c_y, c_xy, offset),
        MeasureSpec::Ncd => ncd(c_x, c_y, c_xy),
    }
}

/// One labelled corpus item and the byte string that gets compressed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorpusItem {
    pub id: String,
    pub label: String,
    pub bytes: Vec<u8>,
}

/// All compressed sizes a distance matrix needs: `C(x_i)` and `C(x_i x_j)`
/// for `i <= j`, the lower-index item written first.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairSizes {
    pub ids: Vec<String>,
    pub labels: Vec<String>,
    pub single: Vec<u64>,
    /// Row-major `n × n`, filled symmetrically.
    pub joint: Vec<u64>,
    pub compressor_id: String,
}

impl PairSizes {
    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn joint(&self, i: usize, j: usize) -> u64 {
        self.joint[i * self.len() + j]
    }

    pub fn min_single(&self) -> Option<(usize, u64)> {
        self.single.iter().copied().enumerate().min_by_key(|&(i, s)| (s, i))
    }
}

/// Computes every size the matrix needs, in parallel, through `oracle`.
pub fn compute_sizes(
    corpus: &[CorpusItem],
    oracle: &dyn SizeOracle,
) -> Result<PairSizes, MeasureError> {
    if corpus.is_empty() {
        return Err(MeasureError::EmptyCorpus);
    }
    let n = corpus.len();
    let single: Vec<u64> = corpus
        .par_iter()
        .map(|item| {
            oracle.size(&item.bytes).map_err(|source| MeasureError::Compressor {
                item: item.id.clone(),
                source,
            })
        })
        .collect::<Result<_, _>>()?;

    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i..n).map(move |j| (i, j))).collect();
    let pair_sizes: Vec<u64> = pairs
        .par_iter()
        .map(|&(i, j)| {
            let (x, y) = (&corpus[i].bytes, &corpus[j].bytes);
            let mut xy = Vec::with_capacity(x.len() + y.len());
            xy.extend_from_slice(x);
            xy.extend_from_slice(y);
            oracle.size(&xy).map_err(|source| MeasureError::Compressor {
                item: format!("{}+{}", corpus[i].id, corpus[j].id),
                source,
            })
        })
        .collect::<Result<_, _>>()?;

    let mut joint = vec![0u64; n * n];
    for (&(i, j), &s) in pairs.iter().zip(&pair_sizes) {
        joint[i * n + j] = s;
        joint[j * n + i] = s;
    }
    Ok(PairSizes {
        ids: corpus.iter().map(|c| c.id.clone()).collect(),
        labels: corpus.iter().map(|c| c.label.clone()).collect(),
        single,
        joint,
        compressor_id: oracle.id().to_string(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub compressor_id: String,
    pub measure: MeasureSpec,
}

/// Square dissimilarity matrix over a labelled corpus. The diagonal holds the
/// self-dissimilarity, which is not zero for compression-based measures.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix<T> {
    pub labels: Vec<(String, String)>,
    values: Vec<T>,
    pub provenance: Provenance,
}

impl<T: Scalar> DistanceMatrix<T> {
    /// Builds a matrix from row-major values; the caller guarantees symmetry.
    pub fn from_values(
        labels: Vec<(String, String)>,
        values: Vec<T>,
        provenance: Provenance,
    ) -> Self {
        assert_eq!(values.len(), labels.len() * labels.len(), "matrix must be n × n");
        Self { labels, values, provenance }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn get(&self, i: usize, j: usize) -> &T {
        &self.values[i * self.len() + j]
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn item_id(&self, i: usize) -> &str {
        &self.labels[i].0
    }

    pub fn class_label(&self, i: usize) -> &str {
        &self.labels[i].1
    }

    /// Applies `f` to every off-diagonal entry.
    pub fn map_off_diagonal(&self, f: impl Fn(&T) -> T) -> Self {
        let n = self.len();
        let values = self
            .values
            .iter()
            .enumerate()
            .map(|(idx, v)| if idx / n == idx % n { v.clone() } else { f(v) })
            .collect();
        Self { labels: self.labels.clone(), values, provenance: self.provenance.clone() }
    }
}

/// Forms the matrix for `measure` from precomputed sizes; only the ratio is
/// recomputed, so sweeping measures never recompresses.
pub fn matrix_from_sizes<T: Scalar>(
    sizes: &PairSizes,
    measure: MeasureSpec,
) -> Result<DistanceMatrix<T>, MeasureError> {
    let n = sizes.len();
    if n == 0 {
        return Err(MeasureError::EmptyCorpus);
    }
    if let Some(offset) = measure.offset() {
        if let Some((i, size)) = sizes.single.iter().copied().enumerate().find(|&(_, s)| s <= offset) {
            return Err(MeasureError::OffsetTooLarge { item: sizes.ids[i].clone(), size, offset });
        }
    }
    let mut values = vec![T::zero(); n * n];
    for i in 0..n {
        for j in i..n {
            let v: T = dissimilarity(measure, sizes.single[i], sizes.single[j], sizes.joint(i, j))
                .map_err(|e| match e {
                    MeasureError::OffsetTooLarge { size, offset, .. } => MeasureError::OffsetTooLarge {
                        item: format!("{}+{}", sizes.ids[i], sizes.ids[j]),
                        size,
                        offset,
                    },
                    other => other,
                })?;
            values[i * n + j] = v.clone();
            values[j * n + i] = v;
        }
    }
    let labels = sizes.ids.iter().cloned().zip(sizes.labels.iter().cloned()).collect();
    Ok(DistanceMatrix::from_values(
        labels,
        values,
        Provenance { compressor_id: sizes.compressor_id.clone(), measure },
    ))
}

/// Distance matrix of `corpus` under `spec`, using the shared size cache.
pub fn pairwise_matrix<T: Scalar>(
    corpus: &[CorpusItem],
    spec: &CompressorSpec,
    measure: MeasureSpec,
    cache: &SizeCache,
) -> Result<DistanceMatrix<T>, MeasureError> {
    let sizes = compute_sizes(corpus, &CachedCompressor::new(spec, cache))?;
    matrix_from_sizes(&sizes, measure)
}
