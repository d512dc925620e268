//! Exact one-sided McNemar test for paired correct/incorrect outcomes.

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::Serialize;
use thiserror::Error;

use crate::classify::LooResult;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum StatsError {
    #[error("result vectors differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("results cover different items (first mismatch at position {position}: {left} vs {right})")]
    CorpusMismatch { position: usize, left: String, right: String },
}

/// Cells of the paired confusion matrix. Method 1 is the baseline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct ConfusionCounts {
    /// Both correct.
    pub a: u64,
    /// Method 1 correct, method 2 incorrect.
    pub b: u64,
    /// Method 1 incorrect, method 2 correct.
    pub c: u64,
    /// Both incorrect.
    pub d: u64,
}

impl ConfusionCounts {
    pub fn total(&self) -> u64 {
        self.a + self.b + self.c + self.d
    }

    pub fn method1_correct(&self) -> u64 {
        self.a + self.b
    }

    pub fn method2_correct(&self) -> u64 {
        self.a + self.c
    }
}

pub fn confusion_from_results(x: &[bool], y: &[bool]) -> Result<ConfusionCounts, StatsError> {
    if x.len() != y.len() {
        return Err(StatsError::LengthMismatch(x.len(), y.len()));
    }
    let mut counts = ConfusionCounts::default();
    for (&xi, &yi) in x.iter().zip(y) {
        match (xi, yi) {
            (true, true) => counts.a += 1,
            (true, false) => counts.b += 1,
            (false, true) => counts.c += 1,
            (false, false) => counts.d += 1,
        }
    }
    Ok(counts)
}

/// `2^-(b+c) * sum_{k=0}^{b} C(b+c, k)`: the probability of at most `b`
/// discordant pairs favouring method 1 if both methods were equally accurate.
pub fn mcnemar_exact(b: u64, c: u64) -> BigRational {
    let n = b + c;
    let mut term = BigUint::one();
    let mut tail = BigUint::zero();
    for k in 0..=b {
        tail += &term;
        // C(n, k+1) = C(n, k) * (n - k) / (k + 1)
        term = term * BigUint::from(n - k) / BigUint::from(k + 1);
    }
    BigRational::new(tail.into(), (BigUint::one() << n).into())
}

pub fn to_f64(p: &BigRational) -> f64 {
    p.to_f64().unwrap_or(f64::NAN)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MethodComparison {
    pub counts: ConfusionCounts,
    /// One-sided p for "method 2 is more accurate than method 1".
    #[serde(serialize_with = "serialize_ratio")]
    pub p_value: BigRational,
    pub method1_correct: u64,
    pub method2_correct: u64,
}

impl MethodComparison {
    pub fn p_f64(&self) -> f64 {
        to_f64(&self.p_value)
    }

    pub fn method2_better(&self) -> bool {
        self.method2_correct > self.method1_correct
    }
}

fn serialize_ratio<S: serde::Serializer>(p: &BigRational, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_f64(to_f64(p))
}

pub fn compare_methods(x: &LooResult, y: &LooResult) -> Result<MethodComparison, StatsError> {
    if x.total() != y.total() {
        return Err(StatsError::LengthMismatch(x.total(), y.total()));
    }
    if let Some((position, (l, r))) = x
        .per_item
        .iter()
        .zip(&y.per_item)
        .enumerate()
        .find(|(_, (l, r))| l.item_id != r.item_id)
    {
        return Err(StatsError::CorpusMismatch {
            position,
            left: l.item_id.clone(),
            right: r.item_id.clone(),
        });
    }
    let counts = confusion_from_results(&x.outcomes(), &y.outcomes())?;
    Ok(MethodComparison {
        counts,
        p_value: mcnemar_exact(counts.b, counts.c),
        method1_correct: counts.method1_correct(),
        method2_correct: counts.method2_correct(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classify::LooItem;
    use crate::scalar::exact;

    fn loo(outcomes: &[bool]) -> LooResult {
        LooResult {
            k: 5,
            per_item: outcomes
                .iter()
                .enumerate()
                .map(|(i, &ok)| LooItem {
                    item_id: format!("p{i}"),
                    true_label: "A".into(),
                    predicted_label: if ok { "A" } else { "B" }.into(),
                    correct: ok,
                })
                .collect(),
        }
    }

    #[test]
    fn confusion_counts() {
        let c = confusion_from_results(&[true, true, false], &[true, false, true]).unwrap();
        assert_eq!(c, ConfusionCounts { a: 1, b: 1, c: 1, d: 0 });
        let same = [true, false, false, true];
        let c = confusion_from_results(&same, &same).unwrap();
        assert_eq!((c.b, c.c), (0, 0));
        assert_eq!(
            confusion_from_results(&[true], &[]),
            Err(StatsError::LengthMismatch(1, 0))
        );
    }

    #[test]
    fn offset_experiment_table() {
        // 40 both correct, 1 lost, 8 gained, 26 both wrong.
        let mut x = vec![true; 40];
        let mut y = vec![true; 40];
        x.push(true);
        y.push(false);
        x.extend([false; 8]);
        y.extend([true; 8]);
        x.extend([false; 26]);
        y.extend([false; 26]);
        let c = confusion_from_results(&x, &y).unwrap();
        assert_eq!(c, ConfusionCounts { a: 40, b: 1, c: 8, d: 26 });
        assert_eq!(c.total(), 75);
        assert_eq!((c.method1_correct(), c.method2_correct()), (41, 48));
    }

    #[test]
    fn exact_values() {
        assert_eq!(mcnemar_exact(1, 8), exact(10, 512));
        assert!((to_f64(&mcnemar_exact(1, 8)) - 0.019_531_25).abs() < 1e-12);
        assert_eq!(mcnemar_exact(0, 0), exact(1, 1));
        assert_eq!(mcnemar_exact(0, 5), exact(1, 32));
        assert_eq!(mcnemar_exact(3, 0), exact(1, 1));
    }

    #[test]
    fn compare_identical_and_dominating() {
        let x = loo(&[true, false, true, false]);
        let r = compare_methods(&x, &x).unwrap();
        assert_eq!((r.counts.b, r.counts.c), (0, 0));
        assert_eq!(r.p_value, exact(1, 1));

        let mut xs = vec![true; 10];
        xs.extend([false; 10]);
        let mut ys = xs.clone();
        for y in ys.iter_mut().skip(10).take(5) {
            *y = true;
        }
        let r = compare_methods(&loo(&xs), &loo(&ys)).unwrap();
        assert_eq!((r.counts.b, r.counts.c), (0, 5));
        assert_eq!(r.p_value, exact(1, 32));
        assert!(r.method2_better());
    }

    #[test]
    fn compare_rejects_different_corpora() {
        let x = loo(&[true, true]);
        let mut y = loo(&[true, true]);
        y.per_item[1].item_id = "other".into();
        assert!(matches!(compare_methods(&x, &y), Err(StatsError::CorpusMismatch { position: 1, .. })));
        assert!(matches!(compare_methods(&x, &loo(&[true])), Err(StatsError::LengthMismatch(2, 1))));
    }
}
