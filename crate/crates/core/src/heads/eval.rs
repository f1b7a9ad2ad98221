use super::head::{fit_head, HeadConfig, Labels};
use super::{split, SplitPlan};
use crate::stats::{mean, paired_t_greater, std_dev};
use crate::{Error, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Rows of a design matrix that carry labels, with their labels in the
/// same order.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSet {
    pub rows: Vec<usize>,
    pub labels: Labels,
}

impl LabeledSet {
    pub fn new(rows: Vec<usize>, labels: Labels) -> Result<Self> {
        if rows.len() != labels.len() {
            return Err(Error::DimensionMismatch {
                expected: rows.len(),
                actual: labels.len(),
            });
        }
        Ok(LabeledSet { rows, labels })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedResult {
    pub seed: u64,
    pub metric: f64,
    pub steps: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepeatedEval {
    pub per_seed: Vec<SeedResult>,
    pub mean: f64,
    /// Population SD across seeds.
    pub sd: f64,
}

impl RepeatedEval {
    pub fn metrics(&self) -> Vec<f64> {
        self.per_seed.iter().map(|s| s.metric).collect()
    }
}

/// Fits a head per plan seed on that seed's split and scores the test part
/// (Macro-F1 for classes, mean Pearson for values). Seeds run in parallel;
/// results keep plan order.
pub fn evaluate_repeated(
    x: &[f64],
    dim: usize,
    set: &LabeledSet,
    plan: &SplitPlan,
    cfg: &HeadConfig,
) -> Result<RepeatedEval> {
    plan.validate()?;
    let positions: Vec<usize> = (0..set.rows.len()).collect();
    let run = |&seed: &u64| -> Result<SeedResult> {
        let s = split(&positions, plan, seed)?;
        let xs: Vec<f64> = set
            .rows
            .iter()
            .flat_map(|&r| x[r * dim..(r + 1) * dim].iter().copied())
            .collect();
        let head = fit_head(&xs, dim, &set.labels, &s.train, &s.val, cfg)?;
        let xt: Vec<f64> = s
            .test
            .iter()
            .flat_map(|&i| xs[i * dim..(i + 1) * dim].iter().copied())
            .collect();
        let metric = head.score(&xt, &set.labels.subset(&s.test), cfg.fisher_z)?;
        Ok(SeedResult {
            seed,
            metric,
            steps: head.steps,
        })
    };
    let results: Vec<Result<SeedResult>> = plan.seeds.par_iter().map(run).collect();
    let mut per_seed = Vec::with_capacity(results.len());
    for (r, &seed) in results.into_iter().zip(&plan.seeds) {
        per_seed.push(r.map_err(|e| Error::SeedFailed {
            seed,
            source: Box::new(e),
        })?);
    }
    let m: Vec<f64> = per_seed.iter().map(|s| s.metric).collect();
    Ok(RepeatedEval {
        mean: mean(&m),
        sd: std_dev(&m),
        per_seed,
    })
}

/// One-sided paired t-test that `a` beats `b` seed by seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairedTest {
    pub mean_gap: f64,
    pub t: f64,
    pub p: f64,
}

pub fn compare_paired(a: &RepeatedEval, b: &RepeatedEval) -> Result<PairedTest> {
    let sa: Vec<u64> = a.per_seed.iter().map(|s| s.seed).collect();
    let sb: Vec<u64> = b.per_seed.iter().map(|s| s.seed).collect();
    if sa != sb {
        return Err(Error::invalid("paired comparison needs the same seed list"));
    }
    let (ma, mb) = (a.metrics(), b.metrics());
    let (t, p) = paired_t_greater(&ma, &mb)?;
    Ok(PairedTest {
        mean_gap: mean(&ma) - mean(&mb),
        t,
        p,
    })
}
