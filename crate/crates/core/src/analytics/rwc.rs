use crate::graph::{top_indegree, EdgeType, SocialGraph};
use crate::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// How a walk picks the next out-neighbor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NeighborChoice {
    #[default]
    Uniform,
    Weighted,
}

/// Where a walk ended and how many steps it took.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Walk {
    pub end: usize,
    pub steps: usize,
}

/// Follows random out-edges of `etype` from `start`.
///
/// The walk stops after `max_len` steps, on entering a node already on the
/// walk, on entering a node flagged in `stop`, or at a node without
/// out-neighbors. A start node flagged in `stop` ends the walk at once.
pub fn random_walk<R: Rng + ?Sized>(
    g: &SocialGraph,
    etype: EdgeType,
    start: usize,
    max_len: usize,
    stop: &[bool],
    choice: NeighborChoice,
    rng: &mut R,
) -> Walk {
    let mut visited = vec![start];
    let mut cur = start;
    if stop.get(start).copied().unwrap_or(false) {
        return Walk { end: start, steps: 0 };
    }
    for step in 1..=max_len {
        let out: Vec<_> = g.out_edges(etype, cur).collect();
        if out.is_empty() {
            return Walk { end: cur, steps: step - 1 };
        }
        let next = match choice {
            NeighborChoice::Uniform => out[rng.random_range(0..out.len())].dst,
            NeighborChoice::Weighted => {
                let total: f64 = out.iter().map(|e| e.weight).sum();
                let mut r = rng.random::<f64>() * total;
                let mut pick = out[out.len() - 1].dst;
                for e in &out {
                    if r < e.weight {
                        pick = e.dst;
                        break;
                    }
                    r -= e.weight;
                }
                pick
            }
        };
        if visited.contains(&next) || stop.get(next).copied().unwrap_or(false) {
            return Walk { end: next, steps: step };
        }
        visited.push(next);
        cur = next;
    }
    Walk { end: cur, steps: max_len }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RwcConfig {
    /// Walks started from each bin.
    pub n_walks: usize,
    pub max_len: usize,
    /// Per-bin share of highest in-degree nodes that halt walks.
    pub authoritative_fraction: f64,
    pub choice: NeighborChoice,
    pub seed: u64,
}

impl Default for RwcConfig {
    fn default() -> Self {
        RwcConfig {
            n_walks: 10_000,
            max_len: 10,
            authoritative_fraction: 0.04,
            choice: NeighborChoice::Uniform,
            seed: 0,
        }
    }
}

/// Empirical `Pr(start bin | end bin)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RwcMatrix {
    pub n_bins: usize,
    /// Walk tallies, row = start bin, column = end bin.
    pub counts: Vec<u64>,
    /// `counts[a][b] / landings[b]`; NaN for end bins nobody reached.
    pub values: Vec<f64>,
    pub landings: Vec<u64>,
    pub n_walks: usize,
    pub max_len: usize,
    pub authoritative: Vec<usize>,
}

impl RwcMatrix {
    /// Entry for 1-based start bin `a` and end bin `b`.
    pub fn get(&self, a: usize, b: usize) -> f64 {
        self.values[(a - 1) * self.n_bins + (b - 1)]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.values.chunks(self.n_bins).map(|r| r.to_vec()).collect()
    }
}

/// Authoritative set: top `ceil(fraction * size)` nodes by in-degree inside
/// each bin, unioned and sorted.
pub fn authoritative_nodes(
    g: &SocialGraph,
    etype: EdgeType,
    bins: &[usize],
    n_bins: usize,
    fraction: f64,
) -> Result<Vec<usize>> {
    if !(0.0..=1.0).contains(&fraction) {
        return Err(Error::invalid(format!("authoritative fraction {fraction} outside [0, 1]")));
    }
    let members = bin_members(g, bins, n_bins)?;
    let mut out = Vec::new();
    for m in members.iter().filter(|m| !m.is_empty()) {
        let k = (fraction * m.len() as f64).ceil() as usize;
        if k > 0 {
            out.extend(top_indegree(g, etype, k, Some(m), false)?);
        }
    }
    out.sort_unstable();
    Ok(out)
}

fn bin_members(g: &SocialGraph, bins: &[usize], n_bins: usize) -> Result<Vec<Vec<usize>>> {
    if bins.len() != g.node_count() {
        return Err(Error::DimensionMismatch {
            expected: g.node_count(),
            actual: bins.len(),
        });
    }
    if n_bins == 0 {
        return Err(Error::invalid("n_bins must be >= 1"));
    }
    let mut members = vec![Vec::new(); n_bins];
    for (v, &b) in bins.iter().enumerate() {
        if b == 0 || b > n_bins {
            return Err(Error::invalid(format!("node {v} has bin {b} outside 1..={n_bins}")));
        }
        members[b - 1].push(v);
    }
    Ok(members)
}

/// Runs `n_walks` walks from uniformly drawn nodes of every bin and
/// tabulates where they end. Walk `i` draws from stream `i` of the seed, so
/// the result does not depend on thread scheduling.
pub fn rwc_matrix(g: &SocialGraph, etype: EdgeType, bins: &[usize], n_bins: usize, cfg: &RwcConfig) -> Result<RwcMatrix> {
    let members = bin_members(g, bins, n_bins)?;
    let authoritative = authoritative_nodes(g, etype, bins, n_bins, cfg.authoritative_fraction)?;
    rwc_with_stop_set(g, etype, bins, &members, authoritative, cfg)
}

/// Like [`rwc_matrix`] with an explicit stop set.
pub fn rwc_matrix_with_stop(
    g: &SocialGraph,
    etype: EdgeType,
    bins: &[usize],
    n_bins: usize,
    stop_nodes: &[usize],
    cfg: &RwcConfig,
) -> Result<RwcMatrix> {
    let members = bin_members(g, bins, n_bins)?;
    if let Some(&bad) = stop_nodes.iter().find(|&&v| v >= g.node_count()) {
        return Err(Error::invalid(format!("stop node {bad} out of range")));
    }
    let mut stop = stop_nodes.to_vec();
    stop.sort_unstable();
    stop.dedup();
    rwc_with_stop_set(g, etype, bins, &members, stop, cfg)
}

fn rwc_with_stop_set(
    g: &SocialGraph,
    etype: EdgeType,
    bins: &[usize],
    members: &[Vec<usize>],
    authoritative: Vec<usize>,
    cfg: &RwcConfig,
) -> Result<RwcMatrix> {
    if cfg.n_walks == 0 {
        return Err(Error::invalid("n_walks must be >= 1"));
    }
    let n_bins = members.len();
    let mut stop = vec![false; g.node_count()];
    for &v in &authoritative {
        stop[v] = true;
    }
    let total = (n_bins * cfg.n_walks) as u64;
    let counts = (0..total)
        .into_par_iter()
        .fold(
            || vec![0u64; n_bins * n_bins],
            |mut acc, i| {
                let a = (i / cfg.n_walks as u64) as usize;
                if members[a].is_empty() {
                    return acc;
                }
                let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
                rng.set_stream(i);
                let start = members[a][rng.random_range(0..members[a].len())];
                let w = random_walk(g, etype, start, cfg.max_len, &stop, cfg.choice, &mut rng);
                acc[a * n_bins + bins[w.end] - 1] += 1;
                acc
            },
        )
        .reduce(
            || vec![0u64; n_bins * n_bins],
            |mut a, b| {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                a
            },
        );
    let landings: Vec<u64> = (0..n_bins).map(|b| (0..n_bins).map(|a| counts[a * n_bins + b]).sum()).collect();
    let values = (0..n_bins * n_bins)
        .map(|i| {
            let l = landings[i % n_bins];
            if l == 0 {
                f64::NAN
            } else {
                counts[i] as f64 / l as f64
            }
        })
        .collect();
    Ok(RwcMatrix {
        n_bins,
        counts,
        values,
        landings,
        n_walks: cfg.n_walks,
        max_len: cfg.max_len,
        authoritative,
    })
}
