//! Small descriptive-statistics helpers shared across modules.
//!
//! Standard deviations are population SDs (divide by N) throughout.

use crate::{Error, Result};
use statrs::distribution::{ContinuousCDF, Normal, StudentsT};

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Population variance.
pub fn variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / xs.len() as f64
}

/// Population standard deviation.
pub fn std_dev(xs: &[f64]) -> f64 {
    variance(xs).sqrt()
}

/// Sample standard deviation (N - 1), used only for t statistics.
pub fn sample_std_dev(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    (xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64).sqrt()
}

/// Pearson product-moment correlation.
///
/// `what` names the quantity in the zero-variance error.
pub fn pearson(xs: &[f64], ys: &[f64], what: &str) -> Result<f64> {
    if xs.len() != ys.len() {
        return Err(Error::DimensionMismatch {
            expected: xs.len(),
            actual: ys.len(),
        });
    }
    if xs.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "{what}: need at least 2 pairs, got {}",
            xs.len()
        )));
    }
    if xs.iter().chain(ys).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite(what.to_string()));
    }
    let mx = mean(xs);
    let my = mean(ys);
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let dx = x - mx;
        let dy = y - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    // Relative guard: a column of identical floats can leave rounding residue.
    let scale_x = xs.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(1.0);
    let scale_y = ys.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(1.0);
    let n = xs.len() as f64;
    if sxx <= 1e-24 * n * scale_x * scale_x || syy <= 1e-24 * n * scale_y * scale_y {
        return Err(Error::ZeroVariance(what.to_string()));
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Standard-normal CDF.
pub fn normal_cdf(z: f64) -> f64 {
    Normal::new(0.0, 1.0).expect("unit normal").cdf(z)
}

/// Upper-tail probability of Student's t with `df` degrees of freedom.
pub fn student_t_sf(t: f64, df: f64) -> f64 {
    StudentsT::new(0.0, 1.0, df).expect("valid df").sf(t)
}

/// One-sided paired t-test of `mean(a - b) > 0`. Returns `(t, p)`.
///
/// When every difference is identical the t statistic is undefined; a
/// positive constant gap returns `p = 0` and a zero or negative one `p = 1`.
pub fn paired_t_greater(a: &[f64], b: &[f64]) -> Result<(f64, f64)> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            actual: b.len(),
        });
    }
    if a.len() < 2 {
        return Err(Error::InsufficientData(
            "paired t-test needs at least 2 pairs".into(),
        ));
    }
    let diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let m = mean(&diffs);
    let sd = sample_std_dev(&diffs);
    if sd <= 1e-12 * m.abs().max(1e-12) {
        return Ok(if m > 0.0 {
            (f64::INFINITY, 0.0)
        } else {
            (if m < 0.0 { f64::NEG_INFINITY } else { 0.0 }, 1.0)
        });
    }
    let t = m / (sd / (diffs.len() as f64).sqrt());
    Ok((t, student_t_sf(t, (diffs.len() - 1) as f64)))
}
