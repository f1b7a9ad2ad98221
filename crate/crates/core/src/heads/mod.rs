//! Supervised heads over embeddings and the repeated-split evaluation harness.

mod eval;
mod head;

pub use eval::{compare_paired, evaluate_repeated, LabeledSet, PairedTest, RepeatedEval, SeedResult};
pub use head::{fit_head, Head, HeadConfig, Labels, Task};

use crate::{Error, Result};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Seeds and train/val/test fractions for repeated evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitPlan {
    pub seeds: Vec<u64>,
    pub train: f64,
    pub val: f64,
    pub test: f64,
}

impl Default for SplitPlan {
    fn default() -> Self {
        SplitPlan {
            seeds: (0..10).collect(),
            train: 0.6,
            val: 0.2,
            test: 0.2,
        }
    }
}

impl SplitPlan {
    pub fn validate(&self) -> Result<()> {
        let parts = [self.train, self.val, self.test];
        if parts.iter().any(|p| !(*p > 0.0)) || (parts.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(Error::invalid("split fractions must be positive and sum to 1"));
        }
        if self.seeds.is_empty() {
            return Err(Error::invalid("split plan needs at least one seed"));
        }
        Ok(())
    }
}

/// Disjoint train/val/test parts of a labeled set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Split<T> {
    pub train: Vec<T>,
    pub val: Vec<T>,
    pub test: Vec<T>,
}

/// Seeded shuffle of `items` cut by the plan's fractions.
pub fn split<T: Clone>(items: &[T], plan: &SplitPlan, seed: u64) -> Result<Split<T>> {
    plan.validate()?;
    let n = items.len();
    if n < 5 {
        return Err(Error::InsufficientData(format!("split needs at least 5 labeled items, got {n}")));
    }
    let n_train = ((plan.train * n as f64).round() as usize).clamp(1, n - 2);
    let n_val = ((plan.val * n as f64).round() as usize).clamp(1, n - n_train - 1);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let pick = |r: &[usize]| r.iter().map(|&i| items[i].clone()).collect();
    Ok(Split {
        train: pick(&order[..n_train]),
        val: pick(&order[n_train..n_train + n_val]),
        test: pick(&order[n_train + n_val..]),
    })
}

/// Unweighted mean of per-class F1 over the classes seen in either input.
pub fn macro_f1(pred: &[usize], truth: &[usize]) -> Result<f64> {
    if pred.len() != truth.len() {
        return Err(Error::DimensionMismatch {
            expected: truth.len(),
            actual: pred.len(),
        });
    }
    if pred.is_empty() {
        return Err(Error::InsufficientData("macro_f1 of an empty set".into()));
    }
    let k = pred.iter().chain(truth).max().expect("non-empty") + 1;
    let mut tp = vec![0usize; k];
    let mut fp = vec![0usize; k];
    let mut fneg = vec![0usize; k];
    for (&p, &t) in pred.iter().zip(truth) {
        if p == t {
            tp[p] += 1;
        } else {
            fp[p] += 1;
            fneg[t] += 1;
        }
    }
    let f1s: Vec<f64> = (0..k)
        .filter(|&c| tp[c] + fp[c] + fneg[c] > 0)
        .map(|c| 2.0 * tp[c] as f64 / (2 * tp[c] + fp[c] + fneg[c]) as f64)
        .collect();
    Ok(f1s.iter().sum::<f64>() / f1s.len() as f64)
}

/// Pearson correlation per output column of row-major `n x outputs`
/// matrices, averaged. With `fisher_z` the average is taken in z-space.
pub fn pearson_mean(pred: &[f64], truth: &[f64], outputs: usize, fisher_z: bool) -> Result<f64> {
    if outputs == 0 || pred.len() != truth.len() || !pred.len().is_multiple_of(outputs) {
        return Err(Error::DimensionMismatch {
            expected: truth.len(),
            actual: pred.len(),
        });
    }
    let mut rs = Vec::with_capacity(outputs);
    for o in 0..outputs {
        let p: Vec<f64> = pred.iter().skip(o).step_by(outputs).copied().collect();
        let t: Vec<f64> = truth.iter().skip(o).step_by(outputs).copied().collect();
        rs.push(crate::stats::pearson(&p, &t, &format!("output {o}"))?);
    }
    Ok(if fisher_z {
        let lim = 1.0 - 1e-15;
        let z = rs.iter().map(|r| r.clamp(-lim, lim).atanh()).sum::<f64>() / outputs as f64;
        z.tanh()
    } else {
        rs.iter().sum::<f64>() / outputs as f64
    })
}

/// Equal-count rank bins labelled `1..=n_bins`; ties go by index.
pub fn bin_scores(scores: &[f64], n_bins: usize) -> Result<Vec<usize>> {
    if n_bins < 2 {
        return Err(Error::invalid("bin_scores needs n_bins >= 2"));
    }
    if scores.len() < n_bins {
        return Err(Error::InsufficientData(format!(
            "{} scores for {n_bins} bins",
            scores.len()
        )));
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::NonFinite("scores to bin".into()));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].partial_cmp(&scores[b]).expect("finite").then(a.cmp(&b)));
    let n = scores.len();
    let mut bins = vec![0; n];
    for (rank, &i) in order.iter().enumerate() {
        bins[i] = rank * n_bins / n + 1;
    }
    Ok(bins)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;

    #[test]
    fn split_sizes_and_cover() {
        let ids: Vec<u32> = (0..10).collect();
        let plan = SplitPlan::default();
        let s = split(&ids, &plan, 3).unwrap();
        assert_eq!((s.train.len(), s.val.len(), s.test.len()), (6, 2, 2));
        assert_eq!(s, split(&ids, &plan, 3).unwrap());
        let mut all: Vec<u32> = s.train.iter().chain(&s.val).chain(&s.test).copied().collect();
        all.sort();
        assert_eq!(all, ids);
        assert!(split(&ids[..4], &plan, 0).is_err());
    }

    #[test]
    fn macro_f1_cases() {
        assert_eq!(macro_f1(&[0, 1, 1, 0], &[0, 1, 1, 0]).unwrap(), 1.0);
        assert_eq!(macro_f1(&[1, 0, 0, 1], &[0, 1, 1, 0]).unwrap(), 0.0);
        // pred [A,A,B], true [A,B,B]: A tp1 fp1 fn0, B tp1 fp0 fn1
        assert!((macro_f1(&[0, 0, 1], &[0, 1, 1]).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        // class 2 absent in both inputs, class 3 only predicted
        assert!((macro_f1(&[0, 3], &[0, 1]).unwrap() - (1.0 + 0.0 + 0.0) / 3.0).abs() < 1e-15);
    }

    #[test]
    fn pearson_cases() {
        let t: Vec<f64> = (0..20).map(|i| (i * i) as f64).collect();
        let neg: Vec<f64> = t.iter().map(|v| -v).collect();
        assert!((pearson_mean(&t, &t, 1, false).unwrap() - 1.0).abs() < 1e-12);
        assert!((pearson_mean(&neg, &t, 1, false).unwrap() + 1.0).abs() < 1e-12);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let t: Vec<f64> = (0..1000).map(|_| rng.random::<f64>()).collect();
        let mut s = t.clone();
        s.shuffle(&mut rng);
        assert!(pearson_mean(&s, &t, 1, false).unwrap().abs() < 0.1);
        assert!(matches!(
            pearson_mean(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0], 1, false),
            Err(Error::ZeroVariance(_))
        ));
    }

    #[test]
    fn pearson_multi_output_and_fisher() {
        // column 0 perfectly correlated, column 1 perfectly anti-correlated
        let pred = [1.0, 3.0, 2.0, 2.0, 3.0, 1.0];
        let truth = [1.0, 1.0, 2.0, 2.0, 3.0, 3.0];
        assert!(pearson_mean(&pred, &truth, 2, false).unwrap().abs() < 1e-12);
        let pred = [1.0, 1.0, 2.0, 2.0, 4.0, 4.0];
        let r = crate::stats::pearson(&[1.0, 2.0, 4.0], &[1.0, 2.0, 3.0], "x").unwrap();
        assert!((pearson_mean(&pred, &truth, 2, true).unwrap() - r).abs() < 1e-12);
    }

    #[test]
    fn bins_cases() {
        let s: Vec<f64> = (0..100).map(|i| ((i * 37) % 100) as f64).collect();
        let b = bin_scores(&s, 10).unwrap();
        for k in 1..=10 {
            assert_eq!(b.iter().filter(|&&x| x == k).count(), 10);
        }
        assert_eq!(bin_scores(&[1.0, 2.0, 3.0, 4.0], 2).unwrap(), vec![1, 1, 2, 2]);
        assert_eq!(bin_scores(&[5.0; 4], 2).unwrap(), vec![1, 1, 2, 2]);
        assert!(bin_scores(&[1.0], 2).is_err());
    }

    proptest! {
        #[test]
        fn macro_f1_order_invariant(pairs in proptest::collection::vec((0usize..4, 0usize..4), 1..40), seed in any::<u64>()) {
            let (p, t): (Vec<usize>, Vec<usize>) = pairs.iter().copied().unzip();
            let mut shuffled = pairs.clone();
            shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
            let (p2, t2): (Vec<usize>, Vec<usize>) = shuffled.into_iter().unzip();
            prop_assert!((macro_f1(&p, &t).unwrap() - macro_f1(&p2, &t2).unwrap()).abs() < 1e-12);
        }

        #[test]
        fn bins_monotone_invariant(s in proptest::collection::vec(-100.0f64..100.0, 4..60), k in 2usize..5) {
            let s: Vec<f64> = s.into_iter().map(|v| v.round()).collect();
            let t: Vec<f64> = s.iter().map(|v| (v / 20.0).exp() * 3.0 - 1.0).collect();
            let b = bin_scores(&s, k).unwrap();
            prop_assert_eq!(&b, &bin_scores(&t, k).unwrap());
            let counts: Vec<usize> = (1..=k).map(|c| b.iter().filter(|&&x| x == c).count()).collect();
            prop_assert!(counts.iter().max().unwrap() - counts.iter().min().unwrap() <= 1);
        }
    }
}
