use super::{macro_f1, pearson_mean};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Classification,
    Regression,
}

/// Targets aligned with the rows of a design matrix.
#[derive(Debug, Clone, PartialEq)]
pub enum Labels {
    Classes(Vec<usize>),
    /// Row-major `n x outputs` real targets.
    Values { outputs: usize, data: Vec<f64> },
}

impl Labels {
    pub fn len(&self) -> usize {
        match self {
            Labels::Classes(c) => c.len(),
            Labels::Values { outputs, data } => data.len() / outputs.max(&1),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn task(&self) -> Task {
        match self {
            Labels::Classes(_) => Task::Classification,
            Labels::Values { .. } => Task::Regression,
        }
    }

    /// Labels of the given rows, in that order.
    pub fn subset(&self, rows: &[usize]) -> Labels {
        match self {
            Labels::Classes(c) => Labels::Classes(rows.iter().map(|&r| c[r]).collect()),
            Labels::Values { outputs, data } => Labels::Values {
                outputs: *outputs,
                data: rows
                    .iter()
                    .flat_map(|&r| data[r * outputs..(r + 1) * outputs].iter().copied())
                    .collect(),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HeadConfig {
    pub learning_rate: f64,
    pub momentum: f64,
    pub l2: f64,
    /// Upper bound on full-batch gradient steps.
    pub max_steps: usize,
    /// Steps between validation checks.
    pub eval_every: usize,
    /// Validation checks without improvement before stopping.
    pub patience: usize,
    /// Average per-output Pearson in Fisher-z space.
    pub fisher_z: bool,
}

impl Default for HeadConfig {
    fn default() -> Self {
        HeadConfig {
            learning_rate: 0.1,
            momentum: 0.9,
            l2: 0.0,
            max_steps: 2000,
            eval_every: 10,
            patience: 5,
            fisher_z: false,
        }
    }
}

/// A linear layer over standardized inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Head {
    pub task: Task,
    pub dim: usize,
    pub outputs: usize,
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
    /// Row-major `outputs x dim`.
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
    /// Gradient steps taken before stopping.
    pub steps: usize,
    pub stopped_early: bool,
    pub best_val: f64,
}

impl Head {
    fn logits(&self, x: &[f64]) -> Vec<f64> {
        let z: Vec<f64> = x
            .iter()
            .zip(self.mean.iter().zip(&self.scale))
            .map(|(v, (m, s))| (v - m) / s)
            .collect();
        (0..self.outputs)
            .map(|o| {
                self.bias[o]
                    + self.weights[o * self.dim..(o + 1) * self.dim]
                        .iter()
                        .zip(&z)
                        .map(|(w, v)| w * v)
                        .sum::<f64>()
            })
            .collect()
    }

    /// Class probabilities (classification) or predicted values (regression)
    /// for one input row.
    pub fn predict_row(&self, x: &[f64]) -> Vec<f64> {
        let mut l = self.logits(x);
        if self.task == Task::Classification {
            softmax_in_place(&mut l);
        }
        l
    }

    /// Arg-max class per row; ties go to the lower class.
    pub fn predict_classes(&self, x: &[f64]) -> Vec<usize> {
        x.chunks(self.dim)
            .map(|r| {
                let p = self.logits(r);
                let mut best = 0;
                for (c, v) in p.iter().enumerate() {
                    if *v > p[best] {
                        best = c;
                    }
                }
                best
            })
            .collect()
    }

    pub fn predict_values(&self, x: &[f64]) -> Vec<f64> {
        x.chunks(self.dim).flat_map(|r| self.logits(r)).collect()
    }

    /// Macro-F1 or mean Pearson of the head on the given rows.
    pub fn score(&self, x: &[f64], labels: &Labels, fisher_z: bool) -> Result<f64> {
        match labels {
            Labels::Classes(c) => macro_f1(&self.predict_classes(x), c),
            Labels::Values { outputs, data } => pearson_mean(&self.predict_values(x), data, *outputs, fisher_z),
        }
    }
}

impl Head {
    /// Early-stopping criterion: Macro-F1 for classes, negative mean squared
    /// error for values (Pearson ignores scale, so it cannot rank fits).
    fn val_criterion(&self, x: &[f64], labels: &Labels) -> f64 {
        match labels {
            Labels::Classes(_) => self.score(x, labels, false).unwrap_or(f64::NEG_INFINITY),
            Labels::Values { data, .. } => {
                let p = self.predict_values(x);
                -p.iter().zip(data).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / p.len() as f64
            }
        }
    }
}

fn softmax_in_place(l: &mut [f64]) {
    let m = l.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut s = 0.0;
    for v in l.iter_mut() {
        *v = (*v - m).exp();
        s += *v;
    }
    l.iter_mut().for_each(|v| *v /= s);
}

fn rows_of(x: &[f64], dim: usize, idx: &[usize]) -> Vec<f64> {
    idx.iter().flat_map(|&i| x[i * dim..(i + 1) * dim].iter().copied()).collect()
}

/// Full-batch gradient training of a linear head on `train` rows of the
/// row-major matrix `x`, keeping the parameters with the best validation
/// metric. Classification minimizes softmax cross-entropy, regression mean
/// squared error.
pub fn fit_head(
    x: &[f64],
    dim: usize,
    labels: &Labels,
    train: &[usize],
    val: &[usize],
    cfg: &HeadConfig,
) -> Result<Head> {
    if dim == 0 || !x.len().is_multiple_of(dim) || x.len() / dim != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: labels.len() * dim.max(1),
            actual: x.len(),
        });
    }
    if train.is_empty() || val.is_empty() {
        return Err(Error::InsufficientData("head needs non-empty train and val sets".into()));
    }
    if train.iter().any(|t| val.contains(t)) {
        return Err(Error::invalid("train and val rows overlap"));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("head inputs".into()));
    }
    let n = train.len();
    let xt = rows_of(x, dim, train);
    let xv = rows_of(x, dim, val);
    let yt = labels.subset(train);
    let yv = labels.subset(val);
    let (task, outputs) = match &yt {
        Labels::Classes(c) => {
            let k = labels_classes(labels);
            if c.iter().all(|&v| v == c[0]) {
                return Err(Error::InsufficientData("training set has a single class".into()));
            }
            (Task::Classification, k)
        }
        Labels::Values { outputs, .. } => (Task::Regression, *outputs),
    };

    let mut mean = vec![0.0; dim];
    let mut scale = vec![0.0; dim];
    for r in xt.chunks(dim) {
        for k in 0..dim {
            mean[k] += r[k] / n as f64;
        }
    }
    for r in xt.chunks(dim) {
        for k in 0..dim {
            scale[k] += (r[k] - mean[k]).powi(2) / n as f64;
        }
    }
    scale.iter_mut().for_each(|s| *s = if *s > 1e-24 { s.sqrt() } else { 1.0 });
    let z: Vec<f64> = xt
        .chunks(dim)
        .flat_map(|r| (0..dim).map(|k| (r[k] - mean[k]) / scale[k]).collect::<Vec<_>>())
        .collect();

    let mut head = Head {
        task,
        dim,
        outputs,
        mean,
        scale,
        weights: vec![0.0; outputs * dim],
        bias: vec![0.0; outputs],
        steps: 0,
        stopped_early: false,
        best_val: f64::NEG_INFINITY,
    };
    let mut best = head.clone();
    let mut stale = 0;
    let mut vw = vec![0.0; outputs * dim];
    let mut vb = vec![0.0; outputs];
    let eval_every = cfg.eval_every.max(1);
    for step in 1..=cfg.max_steps {
        let mut gw = vec![0.0; outputs * dim];
        let mut gb = vec![0.0; outputs];
        for (i, zr) in z.chunks(dim).enumerate() {
            let mut out: Vec<f64> = (0..outputs)
                .map(|o| head.bias[o] + head.weights[o * dim..(o + 1) * dim].iter().zip(zr).map(|(w, v)| w * v).sum::<f64>())
                .collect();
            match &yt {
                Labels::Classes(c) => {
                    softmax_in_place(&mut out);
                    out[c[i]] -= 1.0;
                }
                Labels::Values { data, .. } => {
                    for o in 0..outputs {
                        out[o] -= data[i * outputs + o];
                    }
                }
            }
            for o in 0..outputs {
                let g = out[o] / n as f64;
                gb[o] += g;
                for k in 0..dim {
                    gw[o * dim + k] += g * zr[k];
                }
            }
        }
        for (k, g) in gw.iter_mut().enumerate() {
            *g += cfg.l2 * head.weights[k];
            vw[k] = cfg.momentum * vw[k] + *g;
            head.weights[k] -= cfg.learning_rate * vw[k];
        }
        for o in 0..outputs {
            vb[o] = cfg.momentum * vb[o] + gb[o];
            head.bias[o] -= cfg.learning_rate * vb[o];
        }
        head.steps = step;
        if head.weights.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("head weights diverged".into()));
        }
        if step % eval_every == 0 || step == cfg.max_steps {
            let m = head.val_criterion(&xv, &yv);
            if m > best.best_val {
                head.best_val = m;
                best = head.clone();
                stale = 0;
            } else {
                stale += 1;
                if stale >= cfg.patience {
                    best.steps = step;
                    best.stopped_early = true;
                    return Ok(best);
                }
            }
        }
    }
    if best.best_val == f64::NEG_INFINITY {
        // Validation never produced a defined metric; keep the final fit.
        best = head;
    }
    best.steps = cfg.max_steps;
    Ok(best)
}

fn labels_classes(labels: &Labels) -> usize {
    match labels {
        Labels::Classes(c) => c.iter().max().map_or(0, |m| m + 1),
        Labels::Values { .. } => 0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn separable_two_class_reaches_full_train_accuracy() {
        // classes split by x0 + x1 > 0 with margin
        let pts = [
            (1.0, 2.0, 1),
            (2.0, 0.5, 1),
            (0.3, 1.5, 1),
            (3.0, -1.0, 1),
            (-1.0, -2.0, 0),
            (-2.0, 0.2, 0),
            (0.5, -2.5, 0),
            (-0.4, -0.9, 0),
        ];
        let x: Vec<f64> = pts.iter().flat_map(|p| [p.0, p.1]).collect();
        let y = Labels::Classes(pts.iter().map(|p| p.2).collect());
        let all: Vec<usize> = (0..8).collect();
        let cfg = HeadConfig {
            max_steps: 3000,
            patience: 1000,
            ..HeadConfig::default()
        };
        // train and val must be disjoint: validate on a copy of the rows
        let mut x2 = x.clone();
        x2.extend_from_slice(&x);
        let mut y2 = pts.iter().map(|p| p.2).collect::<Vec<_>>();
        y2.extend(pts.iter().map(|p| p.2));
        let val: Vec<usize> = (8..16).collect();
        let h = fit_head(&x2, 2, &Labels::Classes(y2), &all, &val, &cfg).unwrap();
        let xt = rows_of(&x, 2, &all);
        assert_eq!(h.score(&xt, &y, false).unwrap(), 1.0);
        assert!(h.predict_row(&[1.0, 1.0]).iter().sum::<f64>() - 1.0 < 1e-12);
    }

    #[test]
    fn single_class_rejected() {
        let x = vec![0.0, 1.0, 2.0, 3.0];
        let y = Labels::Classes(vec![1, 1, 1, 0]);
        assert!(fit_head(&x, 1, &y, &[0, 1, 2], &[3], &HeadConfig::default()).is_err());
    }

    #[test]
    fn constant_regression_target_surfaces_error() {
        let x: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let y = Labels::Values {
            outputs: 1,
            data: vec![2.0; 10],
        };
        let h = fit_head(&x, 1, &y, &[0, 1, 2, 3, 4, 5], &[6, 7], &HeadConfig::default()).unwrap();
        let test = rows_of(&x, 1, &[8, 9]);
        assert!(matches!(h.score(&test, &y.subset(&[8, 9]), false), Err(Error::ZeroVariance(_))));
    }

    #[test]
    fn stops_early_when_val_flat() {
        let x: Vec<f64> = vec![-2.0, -1.0, 1.0, 2.0, 3.0];
        let y = Labels::Classes(vec![0, 0, 1, 1, 1]);
        let cfg = HeadConfig::default();
        let h = fit_head(&x, 1, &y, &[0, 1, 2, 3], &[4], &cfg).unwrap();
        assert!(h.stopped_early);
        assert_eq!(h.steps, cfg.eval_every * (cfg.patience + 1));
    }

    #[test]
    fn regression_recovers_linear_map() {
        let x: Vec<f64> = (0..40).map(|i| (i as f64 * 0.37).sin()).collect();
        let y = Labels::Values {
            outputs: 1,
            data: x.iter().map(|v| 3.0 * v - 1.0).collect(),
        };
        let train: Vec<usize> = (0..30).collect();
        let val: Vec<usize> = (30..40).collect();
        let h = fit_head(&x, 1, &y, &train, &val, &HeadConfig::default()).unwrap();
        let p = h.predict_values(&[0.5]);
        assert!((p[0] - 0.5).abs() < 1e-3, "{p:?}");
    }
}
