use super::{Edge, EdgeType, SocialGraph};
use crate::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// A synthetic graph with its ground-truth group of every node.
#[derive(Debug, Clone)]
pub struct PlantedPartition {
    pub graph: SocialGraph,
    pub groups: Vec<usize>,
}

/// Directed planted-partition graph of `retweet` edges with unit weight.
///
/// Nodes are split into `groups` contiguous blocks of near-equal size; each
/// ordered pair `u != v` gets an edge with probability `p_in` inside a
/// block and `p_out` across blocks.
pub fn generate_planted_partition(
    n: usize,
    groups: usize,
    p_in: f64,
    p_out: f64,
    seed: u64,
) -> Result<PlantedPartition> {
    if groups == 0 || groups > n.max(1) {
        return Err(Error::invalid(format!("groups must be in 1..={n}")));
    }
    if !(0.0 <= p_out && p_out < p_in && p_in <= 1.0) {
        return Err(Error::invalid(format!(
            "need 0 <= p_out < p_in <= 1, got p_in={p_in} p_out={p_out}"
        )));
    }
    let labels: Vec<usize> = (0..n).map(|v| v * groups / n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = Vec::new();
    for u in 0..n {
        for v in 0..n {
            if u == v {
                continue;
            }
            let p = if labels[u] == labels[v] { p_in } else { p_out };
            // Draw unconditionally so the stream layout is independent of p.
            let r: f64 = rng.random();
            if r < p {
                edges.push(Edge {
                    src: u,
                    dst: v,
                    etype: EdgeType::Retweet,
                    weight: 1.0,
                });
            }
        }
    }
    let (graph, _) = SocialGraph::with_indexed_nodes(n, edges)?;
    Ok(PlantedPartition {
        graph,
        groups: labels,
    })
}

/// Node features for a planted partition: a one-hot group indicator
/// followed by `noise_dims` extra columns, all with additive
/// `N(0, sigma^2)` noise.
pub fn group_features(
    groups: &[usize],
    n_groups: usize,
    noise_dims: usize,
    sigma: f64,
    seed: u64,
) -> Result<Vec<Vec<f64>>> {
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(Error::invalid("sigma must be finite and >= 0"));
    }
    if let Some(&g) = groups.iter().find(|&&g| g >= n_groups) {
        return Err(Error::invalid(format!("group {g} outside 0..{n_groups}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(groups
        .iter()
        .map(|&g| {
            (0..n_groups + noise_dims)
                .map(|c| {
                    let z: f64 = rng.sample(StandardNormal);
                    f64::from(u8::from(c == g)) + sigma * z
                })
                .collect()
        })
        .collect())
}
