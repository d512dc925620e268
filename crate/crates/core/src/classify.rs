//! Leave-one-out K-nearest-neighbour classification over a distance matrix.
//!
//! Neighbours are ranked by `(distance, item index)`. The predicted label is
//! the most frequent among the `k` nearest; a tie between labels goes to the
//! label whose neighbours have the smallest sum of ranks, then to the
//! lexicographically smallest label. Every step depends only on the order of
//! distances, never on their magnitude.

use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

use crate::measures::DistanceMatrix;
use crate::scalar::Scalar;

pub const DEFAULT_K: usize = 5;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ClassifyError {
    #[error("k = {k} out of range for {n} items (need 1 <= k <= n - 1)")]
    KOutOfRange { k: usize, n: usize },
    #[error("query index {index} out of range for {n} items")]
    QueryOutOfRange { index: usize, n: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LooItem {
    pub item_id: String,
    pub true_label: String,
    pub predicted_label: String,
    pub correct: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LooResult {
    pub k: usize,
    pub per_item: Vec<LooItem>,
}

impl LooResult {
    pub fn correct(&self) -> usize {
        self.per_item.iter().filter(|i| i.correct).count()
    }

    pub fn total(&self) -> usize {
        self.per_item.len()
    }

    pub fn accuracy(&self) -> f64 {
        if self.per_item.is_empty() {
            0.0
        } else {
            self.correct() as f64 / self.total() as f64
        }
    }

    pub fn outcomes(&self) -> Vec<bool> {
        self.per_item.iter().map(|i| i.correct).collect()
    }
}

/// Indices of the `k` nearest items to `query`, nearest first.
pub fn nearest<T: Scalar>(
    matrix: &DistanceMatrix<T>,
    query: usize,
    k: usize,
) -> Result<Vec<usize>, ClassifyError> {
    let n = matrix.len();
    if query >= n {
        return Err(ClassifyError::QueryOutOfRange { index: query, n });
    }
    if k == 0 || k >= n {
        return Err(ClassifyError::KOutOfRange { k, n });
    }
    let mut others: Vec<usize> = (0..n).filter(|&j| j != query).collect();
    others.sort_by(|&a, &b| {
        matrix
            .get(query, a)
            .partial_cmp(matrix.get(query, b))
            .expect("distances are comparable")
            .then(a.cmp(&b))
    });
    others.truncate(k);
    Ok(others)
}

pub fn knn_predict<T: Scalar>(
    matrix: &DistanceMatrix<T>,
    query: usize,
    k: usize,
) -> Result<String, ClassifyError> {
    let neighbours = nearest(matrix, query, k)?;
    // label -> (votes, rank sum)
    let mut tally: BTreeMap<&str, (usize, usize)> = BTreeMap::new();
    for (rank, &j) in neighbours.iter().enumerate() {
        let entry = tally.entry(matrix.class_label(j)).or_default();
        entry.0 += 1;
        entry.1 += rank + 1;
    }
    let (label, _) = tally
        .into_iter()
        .min_by(|(la, (va, ra)), (lb, (vb, rb))| vb.cmp(va).then(ra.cmp(rb)).then(la.cmp(lb)))
        .expect("k >= 1 neighbours");
    Ok(label.to_string())
}

pub fn leave_one_out<T: Scalar>(
    matrix: &DistanceMatrix<T>,
    k: usize,
) -> Result<LooResult, ClassifyError> {
    let n = matrix.len();
    if k == 0 || k >= n {
        return Err(ClassifyError::KOutOfRange { k, n });
    }
    let per_item = (0..n)
        .map(|i| {
            let predicted = knn_predict(matrix, i, k)?;
            let truth = matrix.class_label(i);
            Ok(LooItem {
                item_id: matrix.item_id(i).to_string(),
                true_label: truth.to_string(),
                correct: predicted == truth,
                predicted_label: predicted,
            })
        })
        .collect::<Result<_, ClassifyError>>()?;
    Ok(LooResult { k, per_item })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::{MeasureSpec, Provenance};

    pub(crate) fn matrix(labels: &[&str], d: impl Fn(usize, usize) -> f64) -> DistanceMatrix<f64> {
        let n = labels.len();
        let mut values = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                values[i * n + j] = if i == j { 0.5 } else { d(i.min(j), i.max(j)) };
            }
        }
        DistanceMatrix::from_values(
            labels.iter().enumerate().map(|(i, l)| (format!("item{i}"), l.to_string())).collect(),
            values,
            Provenance { compressor_id: "test".into(), measure: MeasureSpec::Cdm },
        )
    }

    #[test]
    fn forced_majority() {
        let m = matrix(&["A", "A", "B"], |_, _| 0.5);
        assert_eq!(knn_predict(&m, 2, 2).unwrap(), "A");
    }

    #[test]
    fn majority_of_five() {
        // Query 0; neighbours 1..=5 labelled A A B B B.
        let m = matrix(&["Q", "A", "A", "B", "B", "B", "C"], |i, j| {
            if i == 0 { if j == 6 { 0.9 } else { 0.1 * j as f64 } } else { 0.7 }
        });
        assert_eq!(knn_predict(&m, 0, 5).unwrap(), "B");
    }

    #[test]
    fn label_tie_goes_to_closer_neighbours() {
        // A at 0.3 and 0.5 (sum 0.8), B at 0.4 and 0.6 (sum 1.0): ranks A {1,3}, B {2,4}.
        let dist = [0.0, 0.3, 0.5, 0.4, 0.6];
        let m = matrix(&["Q", "A", "A", "B", "B"], |i, j| if i == 0 { dist[j] } else { 0.9 });
        assert_eq!(knn_predict(&m, 0, 4).unwrap(), "A");
        // Mirror the distances and B wins.
        let dist = [0.0, 0.4, 0.6, 0.3, 0.5];
        let m = matrix(&["Q", "A", "A", "B", "B"], |i, j| if i == 0 { dist[j] } else { 0.9 });
        assert_eq!(knn_predict(&m, 0, 4).unwrap(), "B");
        // Equal rank sums fall back to the label name.
        let dist = [0.0, 0.1, 0.4, 0.2, 0.3];
        let m = matrix(&["Q", "B", "B", "A", "A"], |i, j| if i == 0 { dist[j] } else { 0.9 });
        assert_eq!(knn_predict(&m, 0, 4).unwrap(), "A");
    }

    #[test]
    fn separated_clusters() {
        let labels = ["A", "A", "A", "B", "B", "B"];
        let m = matrix(&labels, |i, j| if (i < 3) == (j < 3) { 0.1 } else { 0.9 });
        let r = leave_one_out(&m, 2).unwrap();
        assert_eq!(r.accuracy(), 1.0);
        assert_eq!(r.total(), 6);
    }

    #[test]
    fn all_equal_distances_hand_traced() {
        let labels = ["A", "A", "A", "B", "B", "B"];
        let m = matrix(&labels, |_, _| 0.5);
        // k = 5: every query sees all five others; the opposite class has 3 votes.
        let r = leave_one_out(&m, 5).unwrap();
        assert_eq!(r.correct(), 0);
        assert!(r.per_item.iter().all(|i| i.predicted_label != i.true_label));
        // k = 4: neighbours are the four lowest other indices.
        // Queries 0,1,2 see A,A,B,B: tie, A holds ranks {1,2} -> A.
        // Queries 3,4,5 see three or more A -> A.
        let r = leave_one_out(&m, 4).unwrap();
        let predicted: Vec<&str> = r.per_item.iter().map(|i| i.predicted_label.as_str()).collect();
        assert_eq!(predicted, vec!["A"; 6]);
        assert_eq!(r.correct(), 3);
    }

    #[test]
    fn single_class() {
        let m = matrix(&["A", "A", "A"], |i, j| (i + j) as f64 / 10.0);
        assert_eq!(leave_one_out(&m, 2).unwrap().accuracy(), 1.0);
    }

    #[test]
    fn k_out_of_range() {
        let m = matrix(&["A", "B", "A"], |_, _| 0.5);
        assert_eq!(leave_one_out(&m, 0), Err(ClassifyError::KOutOfRange { k: 0, n: 3 }));
        assert_eq!(leave_one_out(&m, 3), Err(ClassifyError::KOutOfRange { k: 3, n: 3 }));
        assert!(knn_predict(&m, 5, 1).is_err());
    }

    #[test]
    fn self_is_never_a_neighbour() {
        // The diagonal is the smallest entry in every row.
        let m = matrix(&["A", "B", "A", "B"], |i, j| 0.6 + 0.01 * (i + j) as f64)
            .map_off_diagonal(|v| v + 1.0);
        for q in 0..4 {
            assert!(!nearest(&m, q, 3).unwrap().contains(&q));
        }
    }
}
