use crate::stats::normal_cdf;
use crate::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Alternative {
    /// `a` tends to be smaller than `b`.
    Less,
    /// `a` tends to be larger than `b`.
    Greater,
    #[default]
    TwoSided,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MannWhitney {
    /// `U` of sample `a`: pairs with `a > b`, ties counting one half.
    pub u: f64,
    pub p: f64,
    pub exact: bool,
}

/// Smaller sample size up to which the null distribution is enumerated.
pub const EXACT_MAX_SMALL: usize = 8;
/// With ties, exact enumeration also needs `n + m` at most this.
pub const EXACT_MAX_TIED_TOTAL: usize = 400;

/// Mann-Whitney U test.
///
/// Exact when the smaller sample has at most [`EXACT_MAX_SMALL`] values
/// (conditional on the observed ties); otherwise the normal approximation
/// with tie and continuity corrections.
pub fn mann_whitney(a: &[f64], b: &[f64], alternative: Alternative) -> Result<MannWhitney> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::InsufficientData("Mann-Whitney needs two nonempty samples".into()));
    }
    if a.iter().chain(b).any(|v| v.is_nan()) {
        return Err(Error::NonFinite("Mann-Whitney sample".into()));
    }
    let (n, m) = (a.len(), b.len());
    let mut pooled: Vec<(f64, bool)> = a.iter().map(|&v| (v, true)).chain(b.iter().map(|&v| (v, false))).collect();
    pooled.sort_by(|x, y| x.0.total_cmp(&y.0));
    // doubled midranks keep everything in integers
    let big_n = n + m;
    let mut rank2 = vec![0u64; big_n];
    let mut tie_sum = 0.0;
    let mut has_ties = false;
    let mut i = 0;
    while i < big_n {
        let mut j = i;
        while j + 1 < big_n && pooled[j + 1].0 == pooled[i].0 {
            j += 1;
        }
        let t = (j - i + 1) as f64;
        if j > i {
            has_ties = true;
            tie_sum += t * t * t - t;
        }
        for r in &mut rank2[i..=j] {
            *r = (i + j + 2) as u64;
        }
        i = j + 1;
    }
    let r_a2: u64 = pooled.iter().zip(&rank2).filter(|(p, _)| p.1).map(|(_, r)| r).sum();
    let u = r_a2 as f64 / 2.0 - (n * (n + 1)) as f64 / 2.0;
    let nm = (n * m) as f64;

    let small = n.min(m);
    if small <= EXACT_MAX_SMALL && (!has_ties || big_n <= EXACT_MAX_TIED_TOTAL) {
        // distribution of U for the smaller sample, in half units
        let dist = if has_ties {
            tied_distribution(&rank2, small)
        } else {
            untied_distribution(small, big_n - small)
        };
        let u_small2 = if n == small {
            (2.0 * u).round() as usize
        } else {
            (2.0 * (nm - u)).round() as usize
        };
        let le: f64 = dist[..=u_small2.min(dist.len() - 1)].iter().sum();
        let ge: f64 = dist[u_small2.min(dist.len())..].iter().sum();
        // orient to sample a
        let (p_le, p_ge) = if n == small { (le, ge) } else { (ge, le) };
        let p = match alternative {
            Alternative::Less => p_le,
            Alternative::Greater => p_ge,
            Alternative::TwoSided => 2.0 * p_le.min(p_ge),
        };
        return Ok(MannWhitney {
            u,
            p: p.clamp(0.0, 1.0),
            exact: true,
        });
    }

    Ok(MannWhitney {
        u,
        p: normal_p(u, n, m, tie_sum, alternative),
        exact: false,
    })
}

/// Normal approximation with tie and continuity corrections.
fn normal_p(u: f64, n: usize, m: usize, tie_sum: f64, alternative: Alternative) -> f64 {
    let nm = (n * m) as f64;
    let mu = nm / 2.0;
    let nf = (n + m) as f64;
    let var = nm / 12.0 * ((nf + 1.0) - tie_sum / (nf * (nf - 1.0)));
    if var <= 0.0 {
        return 1.0;
    }
    let sd = var.sqrt();
    let p = match alternative {
        Alternative::Greater => 1.0 - normal_cdf((u - mu - 0.5) / sd),
        Alternative::Less => normal_cdf((u - mu + 0.5) / sd),
        Alternative::TwoSided => 2.0 * (1.0 - normal_cdf(((u - mu).abs() - 0.5).max(0.0) / sd)),
    };
    p.clamp(0.0, 1.0)
}

/// Probability of each `2U` value for a size-`k` sample against `l` others
/// without ties: coefficients of the Gaussian binomial `[k + l choose k]`.
fn untied_distribution(k: usize, l: usize) -> Vec<f64> {
    let max_u = k * l;
    let mut c = vec![0.0; max_u + 1];
    c[0] = 1.0;
    let mut deg = 0;
    for i in 1..=k {
        // multiply by (1 - q^(l+i)), then divide by (1 - q^i)
        let s = l + i;
        let new_deg = deg + s;
        let mut tmp = vec![0.0; new_deg + 1];
        tmp[..=deg].copy_from_slice(&c[..=deg]);
        for d in s..=new_deg {
            tmp[d] -= c[d - s];
        }
        let out_deg = new_deg - i;
        for d in 0..=out_deg {
            let prev = if d >= i { c[d - i] } else { 0.0 };
            c[d] = tmp[d] + prev;
        }
        deg = out_deg;
        let total: f64 = c[..=deg].iter().sum();
        c[..=deg].iter_mut().for_each(|v| *v /= total);
    }
    // spread onto half-unit grid
    let mut half = vec![0.0; 2 * max_u + 1];
    for (u, p) in c.iter().enumerate() {
        half[2 * u] = p.max(0.0);
    }
    half
}

/// Exact null for tied data: subsets of size `k` of the doubled midranks,
/// indexed by `2U`.
fn tied_distribution(rank2: &[u64], k: usize) -> Vec<f64> {
    let max_sum: usize = {
        let mut r: Vec<u64> = rank2.to_vec();
        r.sort_unstable_by(|a, b| b.cmp(a));
        r[..k].iter().sum::<u64>() as usize
    };
    // dp[j][s]: weight of j-subsets with doubled rank sum s
    let mut dp = vec![vec![0.0f64; max_sum + 1]; k + 1];
    dp[0][0] = 1.0;
    for &r in rank2 {
        let r = r as usize;
        for j in (1..=k).rev() {
            let (lo, hi) = dp.split_at_mut(j);
            let prev = &lo[j - 1];
            let cur = &mut hi[0];
            for s in (r..=max_sum).rev() {
                if prev[s - r] != 0.0 {
                    cur[s] += prev[s - r];
                }
            }
        }
    }
    let total: f64 = dp[k].iter().sum();
    let base = k * (k + 1);
    let mut out = vec![0.0; max_sum.saturating_sub(base) + 1];
    for (s, w) in dp[k].iter().enumerate() {
        if *w > 0.0 {
            // 2U = sum(2r) - k(k+1)
            out[s - base] += w / total;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn exact_small_example() {
        let r = mann_whitney(&[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0], Alternative::Less).unwrap();
        assert_eq!(r.u, 0.0);
        assert!((r.p - 0.05).abs() < 1e-12);
        assert!(r.exact);
        let g = mann_whitney(&[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0], Alternative::Greater).unwrap();
        assert!((g.p - 1.0).abs() < 1e-12);
        let t = mann_whitney(&[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0], Alternative::TwoSided).unwrap();
        assert!((t.p - 0.1).abs() < 1e-12);
        // swapping samples mirrors the statistic
        let s = mann_whitney(&[4.0, 5.0, 6.0], &[1.0, 2.0, 3.0], Alternative::Greater).unwrap();
        assert_eq!(s.u, 9.0);
        assert!((s.p - 0.05).abs() < 1e-12);
    }

    #[test]
    fn identical_samples() {
        let a = [1.0, 2.0, 3.0, 4.0, 5.0];
        let r = mann_whitney(&a, &a, Alternative::TwoSided).unwrap();
        assert!(r.p >= 0.99);
        assert!(mann_whitney(&a, &a, Alternative::Greater).unwrap().p >= 0.49);
        let big: Vec<f64> = (0..50).map(f64::from).collect();
        assert!(mann_whitney(&big, &big, Alternative::TwoSided).unwrap().p >= 0.99);
        assert_eq!(mann_whitney(&[2.0; 20], &[2.0; 20], Alternative::Less).unwrap().p, 1.0);
    }

    /// Brute force over every split of the pooled values.
    fn brute(a: &[f64], b: &[f64]) -> (f64, f64) {
        let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
        let n = a.len();
        let u_of = |xs: &[f64], ys: &[f64]| -> f64 {
            xs.iter()
                .map(|x| ys.iter().map(|y| if x > y { 1.0 } else if x == y { 0.5 } else { 0.0 }).sum::<f64>())
                .sum()
        };
        let u0 = u_of(a, b);
        let (mut le, mut total) = (0.0, 0.0);
        for mask in 0u32..(1 << pooled.len()) {
            if mask.count_ones() as usize != n {
                continue;
            }
            let xs: Vec<f64> = (0..pooled.len()).filter(|i| mask & (1 << i) != 0).map(|i| pooled[i]).collect();
            let ys: Vec<f64> = (0..pooled.len()).filter(|i| mask & (1 << i) == 0).map(|i| pooled[i]).collect();
            total += 1.0;
            if u_of(&xs, &ys) <= u0 + 1e-9 {
                le += 1.0;
            }
        }
        (u0, le / total)
    }

    #[test]
    fn exact_matches_brute_force_with_and_without_ties() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for trial in 0..30 {
            let n = rng.random_range(1..=5);
            let m = rng.random_range(1..=7);
            let gen = |rng: &mut ChaCha8Rng| -> f64 {
                if trial % 2 == 0 {
                    rng.random_range(0..4) as f64
                } else {
                    rng.random::<f64>()
                }
            };
            let a: Vec<f64> = (0..n).map(|_| gen(&mut rng)).collect();
            let b: Vec<f64> = (0..m).map(|_| gen(&mut rng)).collect();
            let (u, p) = brute(&a, &b);
            let r = mann_whitney(&a, &b, Alternative::Less).unwrap();
            assert_eq!(r.u, u);
            assert!((r.p - p).abs() < 1e-9, "{a:?} {b:?}: {} vs {p}", r.p);
        }
    }

    #[test]
    fn approximation_agrees_at_eight() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..20 {
            let a: Vec<f64> = (0..8).map(|_| rng.random::<f64>()).collect();
            let b: Vec<f64> = (0..8).map(|_| rng.random::<f64>() + 0.2).collect();
            let exact = mann_whitney(&a, &b, Alternative::TwoSided).unwrap();
            assert!(exact.exact);
            let approx = normal_p(exact.u, 8, 8, 0.0, Alternative::TwoSided);
            assert!((exact.p - approx).abs() < 0.02, "{} vs {approx}", exact.p);
        }
    }

    #[test]
    fn large_one_small_side_is_exact() {
        let a = [10.0, 11.0, 12.0];
        let b: Vec<f64> = (0..5000).map(|i| i as f64 / 1000.0).collect();
        let r = mann_whitney(&a, &b, Alternative::Greater).unwrap();
        assert!(r.exact);
        assert!((r.p - 1.0 / (5003.0 * 5002.0 * 5001.0 / 6.0)).abs() < 1e-15);
    }

    #[test]
    fn shifted_normal_samples_are_detected() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let a: Vec<f64> = (0..300).map(|_| rng.random::<f64>() + 0.3).collect();
        let b: Vec<f64> = (0..300).map(|_| rng.random::<f64>()).collect();
        let r = mann_whitney(&a, &b, Alternative::Greater).unwrap();
        assert!(!r.exact && r.p < 1e-6);
        assert!(mann_whitney(&a, &b, Alternative::Less).unwrap().p > 0.99);
        assert!(mann_whitney(&[], &b, Alternative::Less).is_err());
    }
}
