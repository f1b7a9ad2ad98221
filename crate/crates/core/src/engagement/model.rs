use crate::stats::{mean, std_dev};
use crate::{Error, Result};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExpectationConfig {
    pub hidden: usize,
    pub learning_rate: f64,
    pub momentum: f64,
    pub l2: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    /// Epochs without validation improvement before stopping.
    pub patience: usize,
    pub seed: u64,
}

impl Default for ExpectationConfig {
    fn default() -> Self {
        ExpectationConfig {
            hidden: 32,
            learning_rate: 0.01,
            momentum: 0.9,
            l2: 0.0,
            batch_size: 128,
            max_epochs: 100,
            patience: 5,
            seed: 0,
        }
    }
}

/// One tanh hidden layer plus a linear skip path, on standardized inputs
/// and target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpectationModel {
    pub dim: usize,
    pub hidden: usize,
    x_mean: Vec<f64>,
    x_scale: Vec<f64>,
    y_mean: f64,
    y_scale: f64,
    /// `w1 (hidden x dim) | b1 | v (hidden) | u (dim) | c`
    params: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpectationReport {
    pub r2_train: f64,
    pub r2_val: f64,
    pub r2_test: f64,
    pub epochs: usize,
    pub best_epoch: usize,
}

struct Layout {
    dim: usize,
    hidden: usize,
}

impl Layout {
    fn w1(&self) -> usize {
        0
    }
    fn b1(&self) -> usize {
        self.hidden * self.dim
    }
    fn v(&self) -> usize {
        self.b1() + self.hidden
    }
    fn u(&self) -> usize {
        self.v() + self.hidden
    }
    fn c(&self) -> usize {
        self.u() + self.dim
    }
    fn len(&self) -> usize {
        self.c() + 1
    }
}

impl ExpectationModel {
    fn layout(&self) -> Layout {
        Layout {
            dim: self.dim,
            hidden: self.hidden,
        }
    }

    fn standardize(&self, row: &[f64], out: &mut [f64]) {
        for j in 0..self.dim {
            out[j] = (row[j] - self.x_mean[j]) / self.x_scale[j];
        }
    }

    /// Forward pass on a standardized row; fills `h` with hidden activations.
    fn forward(&self, z: &[f64], h: &mut [f64]) -> f64 {
        let l = self.layout();
        let p = &self.params;
        let mut y = p[l.c()];
        for k in 0..self.hidden {
            let w = &p[l.w1() + k * self.dim..l.w1() + (k + 1) * self.dim];
            let a = p[l.b1() + k] + w.iter().zip(z).map(|(a, b)| a * b).sum::<f64>();
            h[k] = a.tanh();
            y += p[l.v() + k] * h[k];
        }
        y + p[l.u()..l.u() + self.dim].iter().zip(z).map(|(a, b)| a * b).sum::<f64>()
    }

    /// Predictions in target units for row-major `x`.
    pub fn predict(&self, x: &[f64]) -> Result<Vec<f64>> {
        if !x.len().is_multiple_of(self.dim.max(1)) {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                actual: x.len(),
            });
        }
        let mut z = vec![0.0; self.dim];
        let mut h = vec![0.0; self.hidden];
        Ok(x.chunks(self.dim)
            .map(|row| {
                self.standardize(row, &mut z);
                self.forward(&z, &mut h) * self.y_scale + self.y_mean
            })
            .collect())
    }
}

/// Coefficient of determination; `NaN` when the truth is constant.
pub fn r_squared(pred: &[f64], truth: &[f64]) -> f64 {
    let m = mean(truth);
    let ss_tot: f64 = truth.iter().map(|t| (t - m) * (t - m)).sum();
    let ss_res: f64 = pred.iter().zip(truth).map(|(p, t)| (p - t) * (p - t)).sum();
    if ss_tot > 0.0 {
        1.0 - ss_res / ss_tot
    } else {
        f64::NAN
    }
}

/// Trains the expectation model on `train`, keeping the epoch with the
/// lowest validation MSE, and reports R² on every part.
pub fn fit_expectation(
    x: &[f64],
    dim: usize,
    y: &[f64],
    train: &[usize],
    val: &[usize],
    test: &[usize],
    cfg: &ExpectationConfig,
) -> Result<(ExpectationModel, ExpectationReport)> {
    if dim == 0 || x.len() != y.len() * dim {
        return Err(Error::DimensionMismatch {
            expected: y.len() * dim,
            actual: x.len(),
        });
    }
    if train.is_empty() || val.is_empty() || test.is_empty() {
        return Err(Error::InsufficientData("expectation model needs train, val and test rows".into()));
    }
    if cfg.batch_size == 0 || cfg.hidden == 0 || !(cfg.learning_rate > 0.0) {
        return Err(Error::invalid("expectation model needs hidden, batch_size and learning_rate > 0"));
    }
    if let Some(i) = y.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite(format!("target row {i}")));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("expectation features".into()));
    }
    let col = |j: usize| -> Vec<f64> { train.iter().map(|&i| x[i * dim + j]).collect() };
    let x_mean: Vec<f64> = (0..dim).map(|j| mean(&col(j))).collect();
    let x_scale: Vec<f64> = (0..dim)
        .map(|j| {
            let s = std_dev(&col(j));
            if s > 1e-12 {
                s
            } else {
                1.0
            }
        })
        .collect();
    let yt: Vec<f64> = train.iter().map(|&i| y[i]).collect();
    let y_sd = std_dev(&yt);
    let mut model = ExpectationModel {
        dim,
        hidden: cfg.hidden,
        x_mean,
        x_scale,
        y_mean: mean(&yt),
        y_scale: if y_sd > 1e-12 { y_sd } else { 1.0 },
        params: Vec::new(),
    };
    let l = model.layout();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut params = vec![0.0; l.len()];
    let b_in = 1.0 / (dim as f64).sqrt();
    let b_h = 1.0 / (cfg.hidden as f64).sqrt();
    for v in &mut params[l.w1()..l.v()] {
        *v = rng.random_range(-b_in..=b_in);
    }
    for v in &mut params[l.v()..l.u()] {
        *v = rng.random_range(-b_h..=b_h);
    }
    model.params = params;

    let zrows = |rows: &[usize], m: &ExpectationModel| -> Vec<f64> {
        let mut out = vec![0.0; rows.len() * dim];
        for (k, &i) in rows.iter().enumerate() {
            m.standardize(&x[i * dim..(i + 1) * dim], &mut out[k * dim..(k + 1) * dim]);
        }
        out
    };
    let zt = zrows(train, &model);
    let zv = zrows(val, &model);
    let yz: Vec<f64> = train.iter().map(|&i| (y[i] - model.y_mean) / model.y_scale).collect();
    let yv: Vec<f64> = val.iter().map(|&i| (y[i] - model.y_mean) / model.y_scale).collect();
    let val_mse = |m: &ExpectationModel| -> f64 {
        let mut h = vec![0.0; m.hidden];
        zv.chunks(dim)
            .zip(&yv)
            .map(|(z, t)| {
                let e = m.forward(z, &mut h) - t;
                e * e
            })
            .sum::<f64>()
            / yv.len() as f64
    };

    let mut velocity = vec![0.0; l.len()];
    let mut grad = vec![0.0; l.len()];
    let mut h = vec![0.0; cfg.hidden];
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut best = (val_mse(&model), model.params.clone(), 0usize);
    let mut epochs = 0;
    let mut since_best = 0;
    for epoch in 1..=cfg.max_epochs {
        epochs = epoch;
        order.shuffle(&mut rng);
        for batch in order.chunks(cfg.batch_size) {
            grad.iter_mut().for_each(|g| *g = 0.0);
            let scale = 1.0 / batch.len() as f64;
            for &r in batch {
                let z = &zt[r * dim..(r + 1) * dim];
                let e = (model.forward(z, &mut h) - yz[r]) * scale;
                let p = &model.params;
                grad[l.c()] += e;
                for j in 0..dim {
                    grad[l.u() + j] += e * z[j];
                }
                for k in 0..cfg.hidden {
                    grad[l.v() + k] += e * h[k];
                    let da = e * p[l.v() + k] * (1.0 - h[k] * h[k]);
                    grad[l.b1() + k] += da;
                    let w = &mut grad[l.w1() + k * dim..l.w1() + (k + 1) * dim];
                    for j in 0..dim {
                        w[j] += da * z[j];
                    }
                }
            }
            for ((p, v), g) in model.params.iter_mut().zip(&mut velocity).zip(&grad) {
                *v = cfg.momentum * *v - cfg.learning_rate * (g + cfg.l2 * *p);
                *p += *v;
            }
        }
        let m = val_mse(&model);
        if !m.is_finite() || model.params.iter().any(|p| !p.is_finite()) {
            return Err(Error::NonFinite(format!(
                "expectation model diverged at epoch {epoch} (validation MSE {m}); lower the learning rate"
            )));
        }
        if m < best.0 {
            best = (m, model.params.clone(), epoch);
            since_best = 0;
        } else {
            since_best += 1;
            if since_best >= cfg.patience {
                break;
            }
        }
    }
    model.params = best.1;
    let r2 = |rows: &[usize]| -> Result<f64> {
        let xs: Vec<f64> = rows.iter().flat_map(|&i| x[i * dim..(i + 1) * dim].iter().copied()).collect();
        let truth: Vec<f64> = rows.iter().map(|&i| y[i]).collect();
        Ok(r_squared(&model.predict(&xs)?, &truth))
    };
    let report = ExpectationReport {
        r2_train: r2(train)?,
        r2_val: r2(val)?,
        r2_test: r2(test)?,
        epochs,
        best_epoch: best.2,
    };
    Ok((model, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::heads::{split, SplitPlan};
    use rand_distr::{Distribution, StandardNormal};

    fn data(n: usize, dim: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n * dim).map(|_| StandardNormal.sample(&mut rng)).collect()
    }

    fn parts(n: usize) -> (Vec<usize>, Vec<usize>, Vec<usize>) {
        let s = split(&(0..n).collect::<Vec<_>>(), &SplitPlan::default(), 0).unwrap();
        (s.train, s.val, s.test)
    }

    #[test]
    fn linear_target_is_recovered() {
        let (n, d) = (2000, 5);
        let x = data(n, d, 1);
        let y: Vec<f64> = x.chunks(d).map(|r| 3.0 * r[0] - 2.0 * r[2] + 0.5 * r[4] + 7.0).collect();
        let (tr, va, te) = parts(n);
        let (m, rep) = fit_expectation(&x, d, &y, &tr, &va, &te, &ExpectationConfig::default()).unwrap();
        assert!(rep.r2_test >= 0.99, "{rep:?}");
        assert_eq!(m.predict(&x).unwrap().len(), n);
    }

    #[test]
    fn nonlinear_target_beats_linear_part() {
        let (n, d) = (3000, 2);
        let x = data(n, d, 2);
        let y: Vec<f64> = x.chunks(d).map(|r| (r[0] * r[1]).tanh() + r[0].abs()).collect();
        let (tr, va, te) = parts(n);
        let (_, rep) = fit_expectation(&x, d, &y, &tr, &va, &te, &ExpectationConfig::default()).unwrap();
        assert!(rep.r2_test > 0.8, "{rep:?}");
    }

    #[test]
    fn noise_target_has_no_skill() {
        let (n, d) = (10_000, 4);
        let x = data(n, d, 3);
        let y = data(n, 1, 4);
        let (tr, va, te) = parts(n);
        let (_, rep) = fit_expectation(&x, d, &y, &tr, &va, &te, &ExpectationConfig::default()).unwrap();
        assert!(rep.r2_test.abs() < 0.05, "{rep:?}");
    }

    #[test]
    fn duplicated_columns_converge() {
        let n = 500;
        let base = data(n, 1, 5);
        let x: Vec<f64> = base.iter().flat_map(|&v| [v, v, v]).collect();
        let y: Vec<f64> = base.iter().map(|v| 2.0 * v).collect();
        let (tr, va, te) = parts(n);
        let (_, rep) = fit_expectation(&x, 3, &y, &tr, &va, &te, &ExpectationConfig::default()).unwrap();
        assert!(rep.r2_test > 0.95);
    }

    #[test]
    fn divergence_is_reported() {
        let n = 200;
        let x = data(n, 2, 6);
        let y: Vec<f64> = x.chunks(2).map(|r| r[0] * 1e3).collect();
        let (tr, va, te) = parts(n);
        let cfg = ExpectationConfig {
            learning_rate: 50.0,
            momentum: 0.99,
            max_epochs: 1000,
            patience: 1000,
            ..ExpectationConfig::default()
        };
        assert!(matches!(fit_expectation(&x, 2, &y, &tr, &va, &te, &cfg), Err(Error::NonFinite(_))));
        let mut bad = y.clone();
        bad[3] = f64::NAN;
        assert!(matches!(
            fit_expectation(&x, 2, &bad, &tr, &va, &te, &ExpectationConfig::default()),
            Err(Error::NonFinite(_))
        ));
    }
}
