//! k-means over embeddings, silhouette/elbow diagnostics for choosing k,
//! and per-group profile summaries.

use crate::stats::{mean, std_dev};
use crate::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Distance {
    #[default]
    Euclidean,
    /// Rows are scaled to unit length first.
    Cosine,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KmeansConfig {
    pub max_iters: usize,
    pub distance: Distance,
}

impl Default for KmeansConfig {
    fn default() -> Self {
        KmeansConfig {
            max_iters: 300,
            distance: Distance::Euclidean,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClusterAssignment {
    pub k: usize,
    pub dim: usize,
    /// Cluster index per row, `0..k`.
    pub labels: Vec<usize>,
    /// Row-major `k x dim`.
    pub centroids: Vec<f64>,
    /// Sum of squared distances to the assigned centroid.
    pub inertia: f64,
    /// Inertia after every Lloyd iteration.
    pub inertia_trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// Empty clusters re-seeded from the farthest point.
    pub reseeds: usize,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn check_rows(data: &[f64], dim: usize) -> Result<usize> {
    if dim == 0 || !data.len().is_multiple_of(dim) {
        return Err(Error::DimensionMismatch {
            expected: dim,
            actual: data.len(),
        });
    }
    if data.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("clustering input".into()));
    }
    Ok(data.len() / dim)
}

/// Rows as used for distances under `distance`.
fn prepare(data: &[f64], dim: usize, distance: Distance) -> Result<Vec<f64>> {
    match distance {
        Distance::Euclidean => Ok(data.to_vec()),
        Distance::Cosine => {
            let mut out = data.to_vec();
            for (i, row) in out.chunks_mut(dim).enumerate() {
                let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
                if norm == 0.0 {
                    return Err(Error::invalid(format!("row {i} has zero norm; cosine distance undefined")));
                }
                row.iter_mut().for_each(|v| *v /= norm);
            }
            Ok(out)
        }
    }
}

/// Nearest centroid; ties go to the lower cluster index.
fn nearest(row: &[f64], centroids: &[f64], dim: usize) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (c, cen) in centroids.chunks(dim).enumerate() {
        let d = sq_dist(row, cen);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

/// Lloyd's algorithm with farthest-point seeding: the first centre is a
/// row drawn with `seed`, each next one the row farthest from the centres
/// chosen so far (lowest index on ties).
pub fn kmeans(data: &[f64], dim: usize, k: usize, seed: u64, cfg: &KmeansConfig) -> Result<ClusterAssignment> {
    let n = check_rows(data, dim)?;
    if k == 0 || k > n {
        return Err(Error::invalid(format!("k must be in 1..={n}, got {k}")));
    }
    let x = prepare(data, dim, cfg.distance)?;
    let row = |i: usize| &x[i * dim..(i + 1) * dim];

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let first = rng.random_range(0..n);
    let mut centroids = row(first).to_vec();
    let mut min_d: Vec<f64> = (0..n).map(|i| sq_dist(row(i), row(first))).collect();
    for _ in 1..k {
        let far = (0..n).fold(0, |b, i| if min_d[i] > min_d[b] { i } else { b });
        centroids.extend_from_slice(row(far));
        for i in 0..n {
            min_d[i] = min_d[i].min(sq_dist(row(i), row(far)));
        }
    }

    let mut labels = vec![usize::MAX; n];
    let mut trace = Vec::new();
    let mut reseeds = 0;
    let mut converged = false;
    let mut iterations = 0;
    while iterations < cfg.max_iters {
        iterations += 1;
        let assigned: Vec<(usize, f64)> = (0..n).into_par_iter().map(|i| nearest(row(i), &centroids, dim)).collect();
        let new_labels: Vec<usize> = assigned.iter().map(|a| a.0).collect();
        if new_labels == labels {
            converged = true;
            iterations -= 1;
            break;
        }
        labels = new_labels;
        let mut dists: Vec<f64> = assigned.iter().map(|a| a.1).collect();
        // empty clusters take the point farthest from its centroid
        loop {
            let mut sizes = vec![0usize; k];
            labels.iter().for_each(|&l| sizes[l] += 1);
            let Some(empty) = sizes.iter().position(|&s| s == 0) else { break };
            let far = (0..n)
                .filter(|&i| sizes[labels[i]] > 1)
                .fold(None, |b: Option<usize>, i| match b {
                    Some(j) if dists[j] >= dists[i] => Some(j),
                    _ => Some(i),
                })
                .expect("k <= n leaves a cluster with two points");
            labels[far] = empty;
            dists[far] = 0.0;
            centroids[empty * dim..(empty + 1) * dim].copy_from_slice(row(far));
            reseeds += 1;
        }
        let mut sums = vec![0.0; k * dim];
        let mut counts = vec![0usize; k];
        for i in 0..n {
            let l = labels[i];
            counts[l] += 1;
            sums[l * dim..(l + 1) * dim].iter_mut().zip(row(i)).for_each(|(s, v)| *s += v);
        }
        for c in 0..k {
            for j in 0..dim {
                centroids[c * dim + j] = sums[c * dim + j] / counts[c] as f64;
            }
        }
        trace.push(inertia_of(&x, dim, &labels, &centroids));
    }
    let inertia = inertia_of(&x, dim, &labels, &centroids);
    Ok(ClusterAssignment {
        k,
        dim,
        labels,
        centroids,
        inertia,
        inertia_trace: trace,
        iterations,
        converged,
        reseeds,
    })
}

fn inertia_of(x: &[f64], dim: usize, labels: &[usize], centroids: &[f64]) -> f64 {
    labels
        .iter()
        .enumerate()
        .map(|(i, &l)| sq_dist(&x[i * dim..(i + 1) * dim], &centroids[l * dim..(l + 1) * dim]))
        .sum()
}

/// Per-row silhouette `(b - a) / max(a, b)` with Euclidean (or cosine-
/// normalised) distances; rows in singleton clusters score 0.
pub fn silhouette(data: &[f64], dim: usize, labels: &[usize], distance: Distance) -> Result<Vec<f64>> {
    let n = check_rows(data, dim)?;
    if labels.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: labels.len(),
        });
    }
    let k = labels.iter().max().map_or(0, |m| m + 1);
    if k < 2 {
        return Err(Error::invalid("silhouette needs at least 2 clusters"));
    }
    let x = prepare(data, dim, distance)?;
    let mut sizes = vec![0usize; k];
    labels.iter().for_each(|&l| sizes[l] += 1);
    Ok((0..n)
        .into_par_iter()
        .map(|i| {
            let ri = &x[i * dim..(i + 1) * dim];
            let mut sums = vec![0.0; k];
            for j in 0..n {
                if j != i {
                    sums[labels[j]] += sq_dist(ri, &x[j * dim..(j + 1) * dim]).sqrt();
                }
            }
            let own = labels[i];
            if sizes[own] <= 1 {
                return 0.0;
            }
            let a = sums[own] / (sizes[own] - 1) as f64;
            let b = (0..k)
                .filter(|&c| c != own && sizes[c] > 0)
                .map(|c| sums[c] / sizes[c] as f64)
                .fold(f64::INFINITY, f64::min);
            let m = a.max(b);
            if m > 0.0 {
                (b - a) / m
            } else {
                0.0
            }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KDiagnostic {
    pub k: usize,
    pub inertia: f64,
    pub silhouette: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KSelection {
    pub per_k: Vec<KDiagnostic>,
    /// Highest mean silhouette (smaller k on ties).
    pub recommended: usize,
    /// Knee of the inertia curve: the k farthest below the chord joining
    /// its end points. Advisory only.
    pub elbow: usize,
}

/// Runs k-means for every k in `ks` and reports inertia and mean
/// silhouette.
pub fn select_k(
    data: &[f64],
    dim: usize,
    ks: std::ops::RangeInclusive<usize>,
    seed: u64,
    cfg: &KmeansConfig,
) -> Result<KSelection> {
    let n = check_rows(data, dim)?;
    if *ks.start() < 2 || *ks.end() >= n || ks.is_empty() {
        return Err(Error::invalid(format!(
            "k range {}..={} must lie within 2..={}",
            ks.start(),
            ks.end(),
            n.saturating_sub(1)
        )));
    }
    let mut per_k = Vec::new();
    for k in ks {
        let a = kmeans(data, dim, k, seed, cfg)?;
        let s = silhouette(data, dim, &a.labels, cfg.distance)?;
        per_k.push(KDiagnostic {
            k,
            inertia: a.inertia,
            silhouette: mean(&s),
        });
    }
    let recommended = per_k
        .iter()
        .fold(&per_k[0], |b, d| if d.silhouette > b.silhouette { d } else { b })
        .k;
    Ok(KSelection {
        elbow: elbow(&per_k),
        per_k,
        recommended,
    })
}

fn elbow(per_k: &[KDiagnostic]) -> usize {
    let (first, last) = (&per_k[0], &per_k[per_k.len() - 1]);
    if per_k.len() < 3 || first.inertia == last.inertia {
        return first.k;
    }
    let span_k = (last.k - first.k) as f64;
    let span_i = first.inertia - last.inertia;
    per_k
        .iter()
        .map(|d| {
            let xk = (d.k - first.k) as f64 / span_k;
            let yi = (first.inertia - d.inertia) / span_i;
            (d.k, yi - xk)
        })
        .fold((first.k, f64::NEG_INFINITY), |b, c| if c.1 > b.1 { c } else { b })
        .0
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ColumnSummary {
    pub mean: f64,
    pub sd: f64,
    pub min: f64,
    pub max: f64,
}

fn summarize(xs: &[f64]) -> ColumnSummary {
    ColumnSummary {
        mean: mean(xs),
        sd: std_dev(xs),
        min: xs.iter().copied().fold(f64::INFINITY, f64::min),
        max: xs.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupProfile {
    pub group: usize,
    pub size: usize,
    /// Mean of each moral z column, in input order.
    pub moral_mean: Vec<f64>,
    /// Member counts per partisanship bin `1..=n_bins`.
    pub partisanship: Vec<usize>,
    pub metadata: BTreeMap<String, ColumnSummary>,
}

/// Per-group summaries. `moral` is row-major with `moral_dim` columns;
/// `partisanship` holds a bin `1..=n_bins` per row. Empty groups are
/// skipped with a warning.
pub fn group_profiles(
    labels: &[usize],
    k: usize,
    moral: &[f64],
    moral_dim: usize,
    partisanship: Option<(&[usize], usize)>,
    metadata: &BTreeMap<String, Vec<f64>>,
) -> Result<Vec<GroupProfile>> {
    let n = labels.len();
    if moral.len() != n * moral_dim {
        return Err(Error::DimensionMismatch {
            expected: n * moral_dim,
            actual: moral.len(),
        });
    }
    if let Some((bins, nb)) = partisanship {
        if bins.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: bins.len(),
            });
        }
        if let Some(b) = bins.iter().find(|&&b| b == 0 || b > nb) {
            return Err(Error::invalid(format!("partisanship bin {b} outside 1..={nb}")));
        }
    }
    for (name, col) in metadata {
        if col.len() != n {
            return Err(Error::invalid(format!("metadata column '{name}' has {} rows, expected {n}", col.len())));
        }
    }
    if let Some(l) = labels.iter().find(|&&l| l >= k) {
        return Err(Error::invalid(format!("group {l} outside 0..{k}")));
    }
    let mut out = Vec::new();
    for g in 0..k {
        let members: Vec<usize> = (0..n).filter(|&i| labels[i] == g).collect();
        if members.is_empty() {
            log::warn!("group {g} is empty; omitted from profiles");
            continue;
        }
        let moral_mean = (0..moral_dim)
            .map(|j| mean(&members.iter().map(|&i| moral[i * moral_dim + j]).collect::<Vec<_>>()))
            .collect();
        let partisanship = match partisanship {
            Some((bins, nb)) => {
                let mut h = vec![0; nb];
                members.iter().for_each(|&i| h[bins[i] - 1] += 1);
                h
            }
            None => Vec::new(),
        };
        let metadata = metadata
            .iter()
            .map(|(name, col)| (name.clone(), summarize(&members.iter().map(|&i| col[i]).collect::<Vec<_>>())))
            .collect();
        out.push(GroupProfile {
            group: g,
            size: members.len(),
            moral_mean,
            partisanship,
            metadata,
        });
    }
    Ok(out)
}

/// Gaussian blobs around `centers` (row-major, `dim` columns) with
/// `per_center` points each; returns points and their center index.
pub fn gaussian_blobs(centers: &[f64], dim: usize, per_center: usize, sd: f64, seed: u64) -> Result<(Vec<f64>, Vec<usize>)> {
    let k = check_rows(centers, dim)?;
    if !(sd >= 0.0) {
        return Err(Error::invalid("blob sd must be >= 0"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = Vec::with_capacity(k * per_center * dim);
    let mut y = Vec::with_capacity(k * per_center);
    for c in 0..k {
        for _ in 0..per_center {
            for j in 0..dim {
                let z: f64 = StandardNormal.sample(&mut rng);
                x.push(centers[c * dim + j] + sd * z);
            }
            y.push(c);
        }
    }
    Ok((x, y))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn one_dimensional_pairs() {
        let x = [0.0, 0.1, 10.0, 10.1];
        for seed in 0..5 {
            let a = kmeans(&x, 1, 2, seed, &KmeansConfig::default()).unwrap();
            assert_eq!(a.labels[0], a.labels[1]);
            assert_eq!(a.labels[2], a.labels[3]);
            assert_ne!(a.labels[0], a.labels[2]);
            assert!(a.converged);
        }
    }

    #[test]
    fn k_one_and_k_n() {
        let x = [1.0, 2.0, 3.0, 6.0, 0.0, -2.0];
        let a = kmeans(&x, 2, 1, 0, &KmeansConfig::default()).unwrap();
        assert!((a.centroids[0] - 4.0 / 3.0).abs() < 1e-12);
        assert!((a.centroids[1] - 2.0).abs() < 1e-12);
        let var_x = crate::stats::variance(&[1.0, 3.0, 0.0]);
        let var_y = crate::stats::variance(&[2.0, 6.0, -2.0]);
        assert!((a.inertia - 3.0 * (var_x + var_y)).abs() < 1e-12);
        let b = kmeans(&x, 2, 3, 0, &KmeansConfig::default()).unwrap();
        assert_eq!(b.inertia, 0.0);
        assert!(kmeans(&x, 2, 4, 0, &KmeansConfig::default()).is_err());
    }

    fn four_blobs(seed: u64) -> (Vec<f64>, Vec<usize>) {
        let centers = [
            2.0, 0.0, 0.0, 0.0, 0.0, //
            0.0, 2.0, 0.0, 0.0, -1.0, //
            -1.0, -1.0, 2.0, 2.0, 0.0, //
            0.0, 0.0, -2.0, 0.0, 2.0,
        ];
        gaussian_blobs(&centers, 5, 50, 0.3, seed).unwrap()
    }

    #[test]
    fn recovers_four_and_two_blobs() {
        for seed in 0..3 {
            let (x, _) = four_blobs(seed);
            let s = select_k(&x, 5, 2..=10, seed, &KmeansConfig::default()).unwrap();
            assert_eq!(s.recommended, 4, "{s:?}");
            assert_eq!(s.elbow, 4);
        }
        let (x, _) = gaussian_blobs(&[0.0, 0.0, 5.0, 5.0], 2, 40, 0.3, 1).unwrap();
        assert_eq!(select_k(&x, 2, 2..=6, 0, &KmeansConfig::default()).unwrap().recommended, 2);
    }

    #[test]
    fn separated_silhouette_near_one() {
        let (x, y) = gaussian_blobs(&[0.0, 100.0], 1, 30, 0.1, 2).unwrap();
        let s = silhouette(&x, 1, &y, Distance::Euclidean).unwrap();
        assert!(mean(&s) > 0.99);
    }

    #[test]
    fn cosine_ignores_scale() {
        let x = [1.0, 0.0, 5.0, 0.1, 0.0, 1.0, 0.1, 7.0];
        let a = kmeans(&x, 2, 2, 0, &KmeansConfig { distance: Distance::Cosine, ..KmeansConfig::default() }).unwrap();
        assert_eq!(a.labels[0], a.labels[1]);
        assert_eq!(a.labels[2], a.labels[3]);
        assert!(kmeans(&[0.0, 0.0, 1.0, 1.0], 2, 1, 0, &KmeansConfig { distance: Distance::Cosine, ..KmeansConfig::default() }).is_err());
    }

    #[test]
    fn profiles() {
        let labels = [0, 0, 1, 1, 1];
        let moral = [1.0, 0.0, 3.0, 0.0, -1.0, 1.0, -1.0, 2.0, -2.0, -3.0];
        let mut meta = BTreeMap::new();
        meta.insert("followers".to_string(), vec![1.0, 3.0, 2.0, 2.0, 8.0]);
        let p = group_profiles(&labels, 3, &moral, 2, Some((&[1, 2, 2, 2, 1], 2)), &meta).unwrap();
        assert_eq!(p.len(), 2);
        assert_eq!(p[0].moral_mean, vec![2.0, 0.0]);
        assert_eq!(p[1].moral_mean, vec![-4.0 / 3.0, 0.0]);
        assert_eq!(p[1].partisanship, vec![1, 2]);
        assert_eq!(p[1].metadata["followers"].max, 8.0);
        let single = group_profiles(&[0; 5], 1, &moral, 2, None, &BTreeMap::new()).unwrap();
        assert!((single[0].moral_mean[0]).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn inertia_never_increases(seed in any::<u64>(), k in 1usize..8) {
            let (x, _) = gaussian_blobs(&[0.0, 0.0, 3.0, 0.0, 0.0, 3.0], 2, 15, 1.5, seed).unwrap();
            let a = kmeans(&x, 2, k, seed, &KmeansConfig::default()).unwrap();
            for w in a.inertia_trace.windows(2) {
                prop_assert!(w[1] <= w[0] + 1e-9);
            }
            prop_assert_eq!(&a, &kmeans(&x, 2, k, seed, &KmeansConfig::default()).unwrap());
            if k >= 2 {
                let s = silhouette(&x, 2, &a.labels, Distance::Euclidean).unwrap();
                prop_assert!(s.iter().all(|v| (-1.0..=1.0).contains(v)));
            }
        }
    }
}
