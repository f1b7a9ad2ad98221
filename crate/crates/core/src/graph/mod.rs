//! Typed, weighted, directed interaction multigraph.
//!
//! Users are nodes. An aggregated edge `src -> dst` of type `etype` carries
//! the number of interactions as its weight; `src` is the acting user (the
//! retweeter or mentioner) and `dst` the user being retweeted or mentioned.
//!
//! External ids are remapped once to dense indices `0..N` sorted by id
//! (numerically when every id is an unsigned integer), so "ascending
//! NodeId" and "ascending dense index" coincide.

mod io;
mod synth;

pub use io::{load_edges, write_edges, EdgeFormat};
pub use synth::{generate_planted_partition, group_features, PlantedPartition};

use crate::{Error, Result};
use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;

/// Interaction type of an edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EdgeType {
    Retweet,
    Mention,
}

impl EdgeType {
    pub const ALL: [EdgeType; 2] = [EdgeType::Retweet, EdgeType::Mention];

    pub fn as_str(self) -> &'static str {
        match self {
            EdgeType::Retweet => "retweet",
            EdgeType::Mention => "mention",
        }
    }
}

impl fmt::Display for EdgeType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EdgeType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "retweet" | "rt" => Ok(EdgeType::Retweet),
            "mention" => Ok(EdgeType::Mention),
            _ => Err(Error::UnknownEdgeType {
                tag: s.to_string(),
                allowed: EdgeType::ALL.map(|e| e.as_str()).join(", "),
            }),
        }
    }
}

impl serde::Serialize for EdgeType {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

impl<'de> serde::Deserialize<'de> for EdgeType {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// An aggregated edge between dense node indices.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub src: usize,
    pub dst: usize,
    pub etype: EdgeType,
    pub weight: f64,
}

/// Compressed adjacency: `offsets[v]..offsets[v+1]` indexes into `edge_ix`,
/// whose entries index the layer's edge list.
#[derive(Debug, Clone, Default, PartialEq)]
struct Adjacency {
    offsets: Vec<usize>,
    edge_ix: Vec<usize>,
}

impl Adjacency {
    fn build(n: usize, edges: &[Edge], key: impl Fn(&Edge) -> usize) -> Self {
        let mut counts = vec![0usize; n + 1];
        for e in edges {
            counts[key(e) + 1] += 1;
        }
        for i in 0..n {
            counts[i + 1] += counts[i];
        }
        let mut cursor = counts.clone();
        let mut edge_ix = vec![0usize; edges.len()];
        for (i, e) in edges.iter().enumerate() {
            let k = key(e);
            edge_ix[cursor[k]] = i;
            cursor[k] += 1;
        }
        Adjacency {
            offsets: counts,
            edge_ix,
        }
    }

    fn range(&self, v: usize) -> &[usize] {
        &self.edge_ix[self.offsets[v]..self.offsets[v + 1]]
    }

    fn degree(&self, v: usize) -> usize {
        self.offsets[v + 1] - self.offsets[v]
    }
}

/// All edges of one type plus out- and in-adjacency over them.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Layer {
    edges: Vec<Edge>,
    out: Adjacency,
    inc: Adjacency,
}

impl Layer {
    fn new(n: usize, mut edges: Vec<Edge>) -> Self {
        edges.sort_by_key(|a| (a.src, a.dst));
        let out = Adjacency::build(n, &edges, |e| e.src);
        let inc = Adjacency::build(n, &edges, |e| e.dst);
        Layer { edges, out, inc }
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }
}

/// Counters reported while building a graph.
#[derive(Debug, Clone, Default, PartialEq, serde::Serialize)]
pub struct BuildReport {
    pub raw_edges: usize,
    pub merged_duplicates: usize,
    pub self_loops_dropped: usize,
}

/// Immutable interaction graph. Safe to share across threads for reads.
#[derive(Debug, Clone, PartialEq)]
pub struct SocialGraph {
    ids: Vec<String>,
    index: HashMap<String, usize>,
    layers: BTreeMap<EdgeType, Layer>,
}

impl SocialGraph {
    /// Builds a graph over the given node ids from dense-index edges.
    ///
    /// Duplicate `(src, dst, etype)` edges are merged by summing weights and
    /// self-loops are dropped. Every weight must be finite and at least 1.
    pub fn from_edges(
        ids: Vec<String>,
        edges: impl IntoIterator<Item = Edge>,
    ) -> Result<(Self, BuildReport)> {
        let n = ids.len();
        let mut report = BuildReport::default();
        let mut merged: HashMap<(usize, usize, EdgeType), f64> = HashMap::new();
        let mut order: Vec<(usize, usize, EdgeType)> = Vec::new();
        for e in edges {
            report.raw_edges += 1;
            if e.src >= n || e.dst >= n {
                return Err(Error::invalid(format!(
                    "edge {}->{} references a node outside 0..{n}",
                    e.src, e.dst
                )));
            }
            if !e.weight.is_finite() || e.weight < 1.0 {
                return Err(Error::invalid(format!(
                    "edge {}->{} has weight {} (must be >= 1)",
                    e.src, e.dst, e.weight
                )));
            }
            if e.src == e.dst {
                report.self_loops_dropped += 1;
                continue;
            }
            let key = (e.src, e.dst, e.etype);
            match merged.get_mut(&key) {
                Some(w) => {
                    *w += e.weight;
                    report.merged_duplicates += 1;
                }
                None => {
                    merged.insert(key, e.weight);
                    order.push(key);
                }
            }
        }
        let mut per_type: BTreeMap<EdgeType, Vec<Edge>> = BTreeMap::new();
        for key in order {
            let (src, dst, etype) = key;
            per_type.entry(etype).or_default().push(Edge {
                src,
                dst,
                etype,
                weight: merged[&key],
            });
        }
        Ok((Self::assemble(ids, per_type), report))
    }

    /// Graph with `n` nodes whose ids are their decimal indices.
    pub fn with_indexed_nodes(
        n: usize,
        edges: impl IntoIterator<Item = Edge>,
    ) -> Result<(Self, BuildReport)> {
        Self::from_edges((0..n).map(|i| i.to_string()).collect(), edges)
    }

    pub(crate) fn assemble(ids: Vec<String>, per_type: BTreeMap<EdgeType, Vec<Edge>>) -> Self {
        let n = ids.len();
        let index = ids
            .iter()
            .enumerate()
            .map(|(i, s)| (s.clone(), i))
            .collect();
        let layers = per_type
            .into_iter()
            .map(|(k, edges)| (k, Layer::new(n, edges)))
            .collect();
        SocialGraph { ids, index, layers }
    }

    pub fn empty() -> Self {
        Self::assemble(Vec::new(), BTreeMap::new())
    }

    pub fn node_count(&self) -> usize {
        self.ids.len()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn id(&self, node: usize) -> &str {
        &self.ids[node]
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    /// Edge types that have at least one edge.
    pub fn etypes(&self) -> impl Iterator<Item = EdgeType> + '_ {
        self.layers.keys().copied()
    }

    pub fn layer(&self, etype: EdgeType) -> Option<&Layer> {
        self.layers.get(&etype)
    }

    /// Edges of one type, sorted by `(src, dst)`.
    pub fn edges(&self, etype: EdgeType) -> &[Edge] {
        self.layers.get(&etype).map(|l| l.edges()).unwrap_or(&[])
    }

    pub fn edge_count(&self, etype: EdgeType) -> usize {
        self.edges(etype).len()
    }

    pub fn total_edge_count(&self) -> usize {
        self.layers.values().map(|l| l.edges.len()).sum()
    }

    pub fn out_edges(&self, etype: EdgeType, node: usize) -> impl Iterator<Item = &Edge> + '_ {
        self.adjacent(etype, node, true)
    }

    pub fn in_edges(&self, etype: EdgeType, node: usize) -> impl Iterator<Item = &Edge> + '_ {
        self.adjacent(etype, node, false)
    }

    fn adjacent(&self, etype: EdgeType, node: usize, out: bool) -> impl Iterator<Item = &Edge> + '_ {
        let layer = self.layers.get(&etype);
        let ix: &[usize] = match layer {
            Some(l) if out => l.out.range(node),
            Some(l) => l.inc.range(node),
            None => &[],
        };
        ix.iter().map(move |&i| &layer.expect("non-empty range").edges[i])
    }

    pub fn out_degree(&self, etype: EdgeType, node: usize) -> usize {
        self.layers.get(&etype).map_or(0, |l| l.out.degree(node))
    }

    pub fn in_degree(&self, etype: EdgeType, node: usize) -> usize {
        self.layers.get(&etype).map_or(0, |l| l.inc.degree(node))
    }

    pub fn weighted_in_degree(&self, etype: EdgeType, node: usize) -> f64 {
        self.in_edges(etype, node).map(|e| e.weight).sum()
    }

    /// True when the node has no edge of any type.
    pub fn is_isolated(&self, node: usize) -> bool {
        self.layers
            .values()
            .all(|l| l.out.degree(node) == 0 && l.inc.degree(node) == 0)
    }

    /// Returns a graph over the same nodes keeping only edges accepted by `keep`.
    pub fn retain_edges(&self, mut keep: impl FnMut(&Edge) -> bool) -> SocialGraph {
        let per_type = self
            .layers
            .iter()
            .map(|(&k, l)| (k, l.edges.iter().filter(|e| keep(e)).copied().collect()))
            .collect();
        Self::assemble(self.ids.clone(), per_type)
    }

    /// Drops nodes with no remaining edges, preserving id order.
    pub fn drop_isolated(&self) -> SocialGraph {
        let keep: Vec<bool> = (0..self.node_count()).map(|v| !self.is_isolated(v)).collect();
        let mut remap = vec![usize::MAX; self.node_count()];
        let mut ids = Vec::new();
        for (v, &k) in keep.iter().enumerate() {
            if k {
                remap[v] = ids.len();
                ids.push(self.ids[v].clone());
            }
        }
        let per_type = self
            .layers
            .iter()
            .map(|(&k, l)| {
                let edges = l
                    .edges
                    .iter()
                    .map(|e| Edge {
                        src: remap[e.src],
                        dst: remap[e.dst],
                        ..*e
                    })
                    .collect();
                (k, edges)
            })
            .collect();
        Self::assemble(ids, per_type)
    }

    /// Per-type node and edge counts.
    pub fn stats(&self) -> GraphStats {
        GraphStats {
            nodes: self.node_count(),
            isolated: (0..self.node_count()).filter(|&v| self.is_isolated(v)).count(),
            per_etype: self
                .layers
                .iter()
                .map(|(&k, l)| {
                    let w: f64 = l.edges.iter().map(|e| e.weight).sum();
                    (
                        k,
                        EtypeStats {
                            edges: l.edges.len(),
                            total_weight: w,
                        },
                    )
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct EtypeStats {
    pub edges: usize,
    pub total_weight: f64,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct GraphStats {
    pub nodes: usize,
    pub isolated: usize,
    pub per_etype: BTreeMap<EdgeType, EtypeStats>,
}

/// Removes edges of `etype` whose weight is below `w_min`.
///
/// Other edge types are untouched. With `drop_isolated`, nodes left without
/// any edge are removed and the remaining nodes re-indexed in id order.
pub fn filter_min_weight(
    g: &SocialGraph,
    etype: EdgeType,
    w_min: f64,
    drop_isolated: bool,
) -> Result<SocialGraph> {
    if !(w_min >= 1.0) {
        return Err(Error::invalid(format!("w_min must be >= 1, got {w_min}")));
    }
    let filtered = g.retain_edges(|e| e.etype != etype || e.weight >= w_min);
    Ok(if drop_isolated {
        filtered.drop_isolated()
    } else {
        filtered
    })
}

/// The `k` nodes with the highest in-degree for `etype`, optionally
/// restricted to `within`. Ties go to the lower node index.
///
/// `weighted` ranks by summed in-edge weight instead of in-edge count.
/// When `k` exceeds the candidate count every candidate is returned.
pub fn top_indegree(
    g: &SocialGraph,
    etype: EdgeType,
    k: usize,
    within: Option<&[usize]>,
    weighted: bool,
) -> Result<Vec<usize>> {
    if k == 0 {
        return Err(Error::invalid("top_indegree: k must be >= 1"));
    }
    let mut candidates: Vec<usize> = match within {
        Some(set) => {
            let mut v = set.to_vec();
            v.sort_unstable();
            v.dedup();
            v
        }
        None => (0..g.node_count()).collect(),
    };
    let score = |v: usize| {
        if weighted {
            g.weighted_in_degree(etype, v)
        } else {
            g.in_degree(etype, v) as f64
        }
    };
    candidates.sort_by(|&a, &b| score(b).total_cmp(&score(a)).then(a.cmp(&b)));
    candidates.truncate(k);
    Ok(candidates)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn e(src: usize, dst: usize, w: f64) -> Edge {
        Edge {
            src,
            dst,
            etype: EdgeType::Retweet,
            weight: w,
        }
    }

    #[test]
    fn duplicates_merge_and_self_loops_drop() {
        let (g, rep) =
            SocialGraph::with_indexed_nodes(3, [e(0, 1, 1.0), e(0, 1, 2.0), e(2, 2, 1.0)]).unwrap();
        assert_eq!(g.edges(EdgeType::Retweet), &[e(0, 1, 3.0)]);
        assert_eq!(rep.merged_duplicates, 1);
        assert_eq!(rep.self_loops_dropped, 1);
    }

    #[test]
    fn filter_keeps_heavy_edges() {
        let (g, _) =
            SocialGraph::with_indexed_nodes(4, [e(0, 1, 1.0), e(1, 2, 2.0), e(2, 3, 3.0)]).unwrap();
        let f = filter_min_weight(&g, EdgeType::Retweet, 2.0, false).unwrap();
        let w: Vec<f64> = f.edges(EdgeType::Retweet).iter().map(|e| e.weight).collect();
        assert_eq!(w, vec![2.0, 3.0]);
        assert_eq!(filter_min_weight(&g, EdgeType::Retweet, 1.0, false).unwrap(), g);
    }

    #[test]
    fn filter_all_light_edges_with_drop_gives_empty_graph() {
        let (g, _) = SocialGraph::with_indexed_nodes(3, [e(0, 1, 1.0), e(1, 2, 1.0)]).unwrap();
        let f = filter_min_weight(&g, EdgeType::Retweet, 2.0, true).unwrap();
        assert_eq!(f.node_count(), 0);
        assert_eq!(f.total_edge_count(), 0);
    }

    #[test]
    fn filter_rejects_small_threshold() {
        let g = SocialGraph::empty();
        assert!(filter_min_weight(&g, EdgeType::Retweet, 0.5, false).is_err());
    }

    #[test]
    fn top_indegree_star_and_ties() {
        let star: Vec<Edge> = (1..=5).map(|i| e(i, 0, 1.0)).collect();
        let (g, _) = SocialGraph::with_indexed_nodes(6, star).unwrap();
        assert_eq!(top_indegree(&g, EdgeType::Retweet, 1, None, false).unwrap(), vec![0]);

        let (g, _) = SocialGraph::with_indexed_nodes(4, [e(0, 2, 1.0), e(0, 1, 1.0)]).unwrap();
        assert_eq!(top_indegree(&g, EdgeType::Retweet, 1, None, false).unwrap(), vec![1]);
        let all = top_indegree(&g, EdgeType::Retweet, 4, None, false).unwrap();
        assert_eq!(all.len(), 4);
        // k beyond the subset returns the whole subset
        assert_eq!(
            top_indegree(&g, EdgeType::Retweet, 10, Some(&[3, 2]), false).unwrap(),
            vec![2, 3]
        );
    }

    #[test]
    fn weighted_indegree_ranking() {
        let (g, _) =
            SocialGraph::with_indexed_nodes(4, [e(0, 1, 1.0), e(2, 1, 1.0), e(0, 3, 5.0)]).unwrap();
        assert_eq!(top_indegree(&g, EdgeType::Retweet, 1, None, false).unwrap(), vec![1]);
        assert_eq!(top_indegree(&g, EdgeType::Retweet, 1, None, true).unwrap(), vec![3]);
    }

    fn arb_edges() -> impl Strategy<Value = (usize, Vec<(usize, usize, bool, u8)>)> {
        (1usize..12).prop_flat_map(|n| {
            (
                Just(n),
                proptest::collection::vec((0..n, 0..n, any::<bool>(), 1u8..5), 0..40),
            )
        })
    }

    proptest! {
        #[test]
        fn degree_sums_match_edge_counts((n, raw) in arb_edges()) {
            let edges = raw.iter().map(|&(s, d, m, w)| Edge {
                src: s,
                dst: d,
                etype: if m { EdgeType::Mention } else { EdgeType::Retweet },
                weight: w as f64,
            });
            let (g, _) = SocialGraph::with_indexed_nodes(n, edges).unwrap();
            for et in EdgeType::ALL {
                let outs: usize = (0..n).map(|v| g.out_degree(et, v)).sum();
                let ins: usize = (0..n).map(|v| g.in_degree(et, v)).sum();
                prop_assert_eq!(outs, g.edge_count(et));
                prop_assert_eq!(ins, g.edge_count(et));
                for v in 0..n {
                    for edge in g.out_edges(et, v) {
                        prop_assert_eq!(edge.src, v);
                        prop_assert_eq!(g.in_edges(et, edge.dst).filter(|x| *x == edge).count(), 1);
                    }
                }
            }
            prop_assert_eq!(&filter_min_weight(&g, EdgeType::Retweet, 1.0, false).unwrap(), &g);
            let mut perm = top_indegree(&g, EdgeType::Retweet, n, None, false).unwrap();
            perm.sort_unstable();
            prop_assert_eq!(perm, (0..n).collect::<Vec<_>>());
        }
    }
}
