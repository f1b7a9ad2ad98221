//! Edge-contrastive objectives and their local gradients.

use super::tensor::{dot, norm};
use crate::{Error, Result};

/// Cosine similarity; `None` when either vector has zero norm.
pub fn cosine(a: &[f64], b: &[f64]) -> Option<f64> {
    let na = norm(a);
    let nb = norm(b);
    if na == 0.0 || nb == 0.0 {
        return None;
    }
    Some((dot(a, b) / (na * nb)).clamp(-1.0, 1.0))
}

fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// `max(||a - p|| - ||a - n|| + margin, 0)` with Euclidean distances on
/// the raw (unnormalised) vectors.
pub fn triplet_loss(anchor: &[f64], pos: &[f64], neg: &[f64], margin: f64) -> f64 {
    (euclidean(anchor, pos) - euclidean(anchor, neg) + margin).max(0.0)
}

/// Gradients of [`triplet_loss`] w.r.t. anchor, positive and negative,
/// scaled by `coef`. Zero when the hinge is inactive.
pub(crate) fn triplet_grad(
    anchor: &[f64],
    pos: &[f64],
    neg: &[f64],
    margin: f64,
    coef: f64,
) -> (f64, [Vec<f64>; 3]) {
    let d = anchor.len();
    let dp = euclidean(anchor, pos);
    let dn = euclidean(anchor, neg);
    let loss = (dp - dn + margin).max(0.0);
    let mut ga = vec![0.0; d];
    let mut gp = vec![0.0; d];
    let mut gn = vec![0.0; d];
    if loss > 0.0 {
        for k in 0..d {
            if dp > 0.0 {
                let u = coef * (anchor[k] - pos[k]) / dp;
                ga[k] += u;
                gp[k] -= u;
            }
            if dn > 0.0 {
                let v = coef * (anchor[k] - neg[k]) / dn;
                ga[k] -= v;
                gn[k] += v;
            }
        }
    }
    (loss, [ga, gp, gn])
}

/// Multiple-negatives ranking loss over a row-major `b x b` score matrix
/// whose diagonal holds the positive pairs:
/// mean over rows of `-log softmax(scale * S[i, :])[i]`.
pub fn mnr_loss(scores: &[f64], b: usize, scale: f64) -> Result<f64> {
    mnr_loss_grad(scores, b, scale, None).map(|(l, _)| l)
}

fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// Loss and `dL/dS`. With `weights`, row `i` contributes `w_i / sum(w)`
/// instead of `1 / b`.
pub(crate) fn mnr_loss_grad(
    scores: &[f64],
    b: usize,
    scale: f64,
    weights: Option<&[f64]>,
) -> Result<(f64, Vec<f64>)> {
    if b == 0 {
        return Err(Error::invalid("mnr_loss needs a batch of at least 1"));
    }
    if scores.len() != b * b {
        return Err(Error::DimensionMismatch {
            expected: b * b,
            actual: scores.len(),
        });
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::NonFinite("mnr_loss score matrix".into()));
    }
    let total_w: f64 = weights.map_or(b as f64, |w| w.iter().sum());
    let mut loss = 0.0;
    let mut grad = vec![0.0; b * b];
    let mut logits = vec![0.0; b];
    for i in 0..b {
        let row = &scores[i * b..(i + 1) * b];
        for j in 0..b {
            logits[j] = scale * row[j];
        }
        let lse = log_sum_exp(&logits);
        let coef = weights.map_or(1.0, |w| w[i]) / total_w;
        loss += coef * (lse - logits[i]);
        for j in 0..b {
            let p = (logits[j] - lse).exp();
            let target = if i == j { 1.0 } else { 0.0 };
            grad[i * b + j] = coef * scale * (p - target);
        }
    }
    Ok((loss, grad))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn triplet_cases() {
        let a = [0.0, 0.0];
        assert_eq!(triplet_loss(&a, &[1.0, 0.0], &[3.0, 0.0], 1.0), 0.0);
        assert_eq!(triplet_loss(&a, &[2.0, 0.0], &[0.0, 1.0], 1.0), 2.0);
        assert_eq!(triplet_loss(&a, &[0.3, 0.4], &[0.3, 0.4], 0.7), 0.7);
    }

    #[test]
    fn mnr_closed_forms() {
        assert_eq!(mnr_loss(&[0.3], 1, 20.0).unwrap(), 0.0);
        assert_abs_diff_eq!(mnr_loss(&[0.2; 4], 2, 7.0).unwrap(), 2f64.ln(), epsilon = 1e-12);
        // diagonal 1, off-diagonal -0.5, scale 20 => gap * scale = 30
        let b = 4;
        let mut s = vec![-0.5; b * b];
        for i in 0..b {
            s[i * b + i] = 1.0;
        }
        let oracle = (1.0 + (b as f64 - 1.0) * (-30.0f64).exp()).ln();
        let l = mnr_loss(&s, b, 20.0).unwrap();
        assert_abs_diff_eq!(l, oracle, epsilon = 1e-15);
        assert!(l < 1e-9);
    }

    #[test]
    fn mnr_rejects_non_finite() {
        assert!(mnr_loss(&[f64::NAN, 0.0, 0.0, 0.0], 2, 1.0).is_err());
    }

    #[test]
    fn mnr_grad_matches_finite_differences() {
        let b = 3;
        let s: Vec<f64> = (0..9).map(|i| ((i * 7 % 5) as f64 - 2.0) / 3.0).collect();
        let w = [1.0, 2.0, 0.5];
        let (_, g) = mnr_loss_grad(&s, b, 5.0, Some(&w)).unwrap();
        for k in 0..9 {
            let mut hi = s.clone();
            let mut lo = s.clone();
            hi[k] += 1e-6;
            lo[k] -= 1e-6;
            let fd = (mnr_loss_grad(&hi, b, 5.0, Some(&w)).unwrap().0
                - mnr_loss_grad(&lo, b, 5.0, Some(&w)).unwrap().0)
                / 2e-6;
            assert_abs_diff_eq!(fd, g[k], epsilon = 1e-7);
        }
    }

    proptest! {
        #[test]
        fn mnr_nonnegative(b in 1usize..6, seed in proptest::collection::vec(-1.0f64..1.0, 36), scale in 0.1f64..30.0) {
            let s: Vec<f64> = seed.into_iter().take(b * b).collect();
            prop_assert!(mnr_loss(&s, b, scale).unwrap() >= 0.0);
        }

        #[test]
        fn cosine_scale_invariant(v in proptest::collection::vec(-5.0f64..5.0, 4),
                                  w in proptest::collection::vec(-5.0f64..5.0, 4),
                                  a in 0.01f64..100.0, c in 0.01f64..100.0) {
            let va: Vec<f64> = v.iter().map(|x| x * a).collect();
            let wc: Vec<f64> = w.iter().map(|x| x * c).collect();
            match (cosine(&v, &w), cosine(&va, &wc)) {
                (Some(x), Some(y)) => prop_assert!((x - y).abs() < 1e-9),
                (None, None) => {}
                _ => prop_assert!(false),
            }
        }
    }
}
