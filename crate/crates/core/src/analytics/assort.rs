use crate::graph::{Edge, EdgeType, SocialGraph};
use crate::stats::pearson;
use crate::{Error, Result};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

fn check_attr(g: &SocialGraph, attr: &[f64]) -> Result<()> {
    if attr.len() != g.node_count() {
        return Err(Error::DimensionMismatch {
            expected: g.node_count(),
            actual: attr.len(),
        });
    }
    if attr.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("node attribute".into()));
    }
    Ok(())
}

/// Pearson correlation of `(attr[src], attr[dst])` over the edges of
/// `etype`, ignoring edge weights.
pub fn assortativity(g: &SocialGraph, attr: &[f64], etype: EdgeType) -> Result<f64> {
    check_attr(g, attr)?;
    let edges = g.edges(etype);
    if edges.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "assortativity needs at least 2 {etype} edges, got {}",
            edges.len()
        )));
    }
    let xs: Vec<f64> = edges.iter().map(|e| attr[e.src]).collect();
    let ys: Vec<f64> = edges.iter().map(|e| attr[e.dst]).collect();
    pearson(&xs, &ys, "edge endpoint attributes")
}

/// Which incident edges define a node's neighborhood.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NeighborScope {
    #[default]
    Union,
    Out,
    In,
}

/// Pearson correlation between each node's attribute and the edge-weighted
/// mean attribute of its neighbors. Nodes without neighbors are skipped.
pub fn weighted_neighbor_corr(g: &SocialGraph, attr: &[f64], etype: EdgeType, scope: NeighborScope) -> Result<f64> {
    check_attr(g, attr)?;
    let (own, nbr) = neighbor_means(g, attr, etype, scope);
    if own.is_empty() {
        return Err(Error::InsufficientData("every node is isolated".into()));
    }
    pearson(&own, &nbr, "neighbor-weighted attributes")
}

pub(crate) fn neighbor_means(g: &SocialGraph, attr: &[f64], etype: EdgeType, scope: NeighborScope) -> (Vec<f64>, Vec<f64>) {
    let mut own = Vec::new();
    let mut nbr = Vec::new();
    for v in 0..g.node_count() {
        let (mut sw, mut sx) = (0.0, 0.0);
        if scope != NeighborScope::In {
            for e in g.out_edges(etype, v) {
                sw += e.weight;
                sx += e.weight * attr[e.dst];
            }
        }
        if scope != NeighborScope::Out {
            for e in g.in_edges(etype, v) {
                sw += e.weight;
                sx += e.weight * attr[e.src];
            }
        }
        if sw > 0.0 {
            own.push(attr[v]);
            nbr.push(sx / sw);
        }
    }
    (own, nbr)
}

/// Null graph: destinations stay, sources are permuted across the edges of
/// each type. Parallel edges and self-loops that arise are kept, so every
/// node's in-degree and in-weight are unchanged.
pub fn shuffle_null(g: &SocialGraph, seed: u64) -> SocialGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut per_type: BTreeMap<EdgeType, Vec<Edge>> = BTreeMap::new();
    for et in g.etypes() {
        let edges = g.edges(et);
        let mut srcs: Vec<usize> = edges.iter().map(|e| e.src).collect();
        srcs.shuffle(&mut rng);
        per_type.insert(
            et,
            edges.iter().zip(srcs).map(|(e, src)| Edge { src, ..*e }).collect(),
        );
    }
    SocialGraph::assemble(g.ids().to_vec(), per_type)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::pearson;
    use proptest::prelude::*;

    fn rt(src: usize, dst: usize, weight: f64) -> Edge {
        Edge {
            src,
            dst,
            etype: EdgeType::Retweet,
            weight,
        }
    }

    fn graph(n: usize, edges: &[(usize, usize, f64)]) -> SocialGraph {
        SocialGraph::with_indexed_nodes(n, edges.iter().map(|&(a, b, w)| rt(a, b, w))).unwrap().0
    }

    #[test]
    fn assortativity_cases() {
        let g = graph(4, &[(0, 1, 1.0), (1, 0, 1.0), (2, 3, 1.0), (3, 2, 1.0)]);
        let attr = [1.0, 1.0, 5.0, 5.0];
        assert!((assortativity(&g, &attr, EdgeType::Retweet).unwrap() - 1.0).abs() < 1e-12);

        let g = graph(4, &[(0, 1, 1.0), (2, 3, 1.0)]);
        assert!(matches!(
            assortativity(&g, &[0.0, 1.0, 0.0, 1.0], EdgeType::Retweet),
            Err(Error::ZeroVariance(_))
        ));

        // toy graph against a direct pairwise oracle, weights ignored
        let g = graph(4, &[(0, 1, 5.0), (1, 2, 1.0), (2, 3, 2.0), (3, 0, 1.0)]);
        let a = [0.1, 0.4, 0.3, 0.9];
        let want = pearson(&[0.1, 0.4, 0.3, 0.9], &[0.4, 0.3, 0.9, 0.1], "x").unwrap();
        assert!((assortativity(&g, &a, EdgeType::Retweet).unwrap() - want).abs() < 1e-12);
        assert!(assortativity(&g, &a, EdgeType::Mention).is_err());
    }

    #[test]
    fn neighbor_corr_cases() {
        let mut edges = Vec::new();
        for c in [0usize, 3] {
            for i in c..c + 3 {
                for j in c..c + 3 {
                    if i != j {
                        edges.push((i, j, 1.0));
                    }
                }
            }
        }
        let g = graph(6, &edges);
        let attr = [0.2, 0.2, 0.2, 0.7, 0.7, 0.7];
        assert!((weighted_neighbor_corr(&g, &attr, EdgeType::Retweet, NeighborScope::Union).unwrap() - 1.0).abs() < 1e-12);

        let g = graph(4, &[(0, 1, 1.0), (0, 2, 3.0), (3, 1, 1.0)]);
        let attr = [0.5, 0.0, 1.0, 0.2];
        let (own, nbr) = neighbor_means(&g, &attr, EdgeType::Retweet, NeighborScope::Out);
        assert_eq!(own, vec![0.5, 0.2]);
        assert_eq!(nbr, vec![0.75, 0.0]);
        let (own, nbr) = neighbor_means(&g, &attr, EdgeType::Retweet, NeighborScope::Union);
        assert_eq!(own, attr.to_vec());
        // node 1 hears from 0 (0.5) and 3 (0.2)
        assert_eq!(nbr, vec![0.75, 0.35, 0.5, 0.0]);
        let want = pearson(&own, &nbr, "x").unwrap();
        assert_eq!(weighted_neighbor_corr(&g, &attr, EdgeType::Retweet, NeighborScope::Union).unwrap(), want);

        let empty = graph(3, &[]);
        assert!(matches!(
            weighted_neighbor_corr(&empty, &[0.0; 3], EdgeType::Retweet, NeighborScope::Union),
            Err(Error::InsufficientData(_))
        ));
    }

    #[test]
    fn one_regular_equivalence() {
        // each node has exactly one out-neighbor and nothing else counts
        let g = graph(5, &[(0, 1, 2.0), (1, 2, 1.0), (2, 3, 4.0), (3, 4, 1.0), (4, 0, 1.0)]);
        let attr = [0.3, 0.1, 0.8, 0.5, 0.9];
        let a = assortativity(&g, &attr, EdgeType::Retweet).unwrap();
        let w = weighted_neighbor_corr(&g, &attr, EdgeType::Retweet, NeighborScope::Out).unwrap();
        assert!((a - w).abs() < 1e-12);
    }

    #[test]
    fn single_edge_shuffle_is_identity() {
        let g = graph(2, &[(0, 1, 3.0)]);
        assert_eq!(shuffle_null(&g, 7), g);
    }

    proptest! {
        #[test]
        fn shuffle_preserves_in_degree(edges in proptest::collection::vec((0usize..15, 0usize..15, 1u8..4), 0..60), seed in any::<u64>()) {
            let es: Vec<(usize, usize, f64)> = edges.iter().map(|&(a, b, w)| (a, b, f64::from(w))).collect();
            let g = graph(15, &es);
            let s = shuffle_null(&g, seed);
            prop_assert_eq!(s.edge_count(EdgeType::Retweet), g.edge_count(EdgeType::Retweet));
            for v in 0..15 {
                prop_assert_eq!(s.in_degree(EdgeType::Retweet, v), g.in_degree(EdgeType::Retweet, v));
                prop_assert_eq!(s.weighted_in_degree(EdgeType::Retweet, v), g.weighted_in_degree(EdgeType::Retweet, v));
            }
            let mut a: Vec<usize> = g.edges(EdgeType::Retweet).iter().map(|e| e.src).collect();
            let mut b: Vec<usize> = s.edges(EdgeType::Retweet).iter().map(|e| e.src).collect();
            a.sort_unstable();
            b.sort_unstable();
            prop_assert_eq!(a, b);
        }
    }
}
