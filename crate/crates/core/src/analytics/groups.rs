use crate::features::RecordTable;
use crate::graph::{EdgeType, SocialGraph};
use crate::{Error, Result};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::collections::BTreeMap;

/// Observed and permutation-null communication proportions between groups.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupRatioMatrix {
    pub n_groups: usize,
    /// Row `x`, column `y`: share of `x`'s interaction weight aimed at `y`.
    pub p: Vec<f64>,
    pub p_rand: Vec<f64>,
    /// `p / p_rand`; NaN where either is undefined or `p_rand` is 0.
    pub ratio: Vec<f64>,
    pub null_reps: usize,
}

impl GroupRatioMatrix {
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.ratio[x * self.n_groups + y]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.ratio.chunks(self.n_groups).map(|r| r.to_vec()).collect()
    }
}

fn check_groups(n: usize, groups: &[usize], n_groups: usize) -> Result<()> {
    if groups.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: groups.len(),
        });
    }
    if n_groups < 2 {
        return Err(Error::invalid("group ratios need at least 2 groups"));
    }
    if let Some((v, g)) = groups.iter().enumerate().find(|(_, &g)| g >= n_groups) {
        return Err(Error::invalid(format!("node {v} has group {g} outside 0..{n_groups}")));
    }
    Ok(())
}

/// Weighted `x -> y` proportions; rows with no outgoing weight are NaN.
fn proportions(g: &SocialGraph, etype: EdgeType, groups: &[usize], n_groups: usize) -> Vec<f64> {
    let mut w = vec![0.0; n_groups * n_groups];
    for e in g.edges(etype) {
        w[groups[e.src] * n_groups + groups[e.dst]] += e.weight;
    }
    for row in w.chunks_mut(n_groups) {
        let t: f64 = row.iter().sum();
        row.iter_mut().for_each(|v| *v = if t > 0.0 { *v / t } else { f64::NAN });
    }
    w
}

/// `P(X <- Y) / P_rand(X <- Y)`, where `X` is the acting (source) group and
/// `Y` the group whose content it engages with. The null proportion is the
/// mean over `null_reps` random permutations of the node labels.
pub fn group_ratio(
    g: &SocialGraph,
    groups: &[usize],
    n_groups: usize,
    etype: EdgeType,
    null_reps: usize,
    seed: u64,
) -> Result<GroupRatioMatrix> {
    check_groups(g.node_count(), groups, n_groups)?;
    if null_reps == 0 {
        return Err(Error::invalid("null_reps must be >= 1"));
    }
    let p = proportions(g, etype, groups, n_groups);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut labels = groups.to_vec();
    let mut sum = vec![0.0; n_groups * n_groups];
    let mut defined = vec![0usize; n_groups];
    for _ in 0..null_reps {
        labels.shuffle(&mut rng);
        let q = proportions(g, etype, &labels, n_groups);
        for x in 0..n_groups {
            if q[x * n_groups].is_nan() {
                continue;
            }
            defined[x] += 1;
            for y in 0..n_groups {
                sum[x * n_groups + y] += q[x * n_groups + y];
            }
        }
    }
    let p_rand: Vec<f64> = (0..n_groups * n_groups)
        .map(|i| {
            let d = defined[i / n_groups];
            if d == 0 {
                f64::NAN
            } else {
                sum[i] / d as f64
            }
        })
        .collect();
    let ratio = p
        .iter()
        .zip(&p_rand)
        .map(|(&a, &b)| if b > 0.0 { a / b } else { f64::NAN })
        .collect();
    Ok(GroupRatioMatrix {
        n_groups,
        p,
        p_rand,
        ratio,
        null_reps,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InOutRatio {
    pub group: usize,
    /// `P/P_rand(X <- X)`
    pub in_ratio: f64,
    /// `P/P_rand(X <- X')` with `X'` every other group.
    pub out_ratio: f64,
}

pub fn in_out_group_ratio(m: &GroupRatioMatrix) -> Vec<InOutRatio> {
    let k = m.n_groups;
    (0..k)
        .map(|x| {
            let ratio = |a: f64, b: f64| if b > 0.0 { a / b } else { f64::NAN };
            let p_out: f64 = (0..k).filter(|&y| y != x).map(|y| m.p[x * k + y]).sum();
            let r_out: f64 = (0..k).filter(|&y| y != x).map(|y| m.p_rand[x * k + y]).sum();
            InOutRatio {
                group: x,
                in_ratio: ratio(m.p[x * k + x], m.p_rand[x * k + x]),
                out_ratio: ratio(p_out, r_out),
            }
        })
        .collect()
}

/// One record retweeted (or mentioned) by a user.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RetweetEvent {
    pub record: usize,
    pub retweeter: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ComboRow {
    /// Five-bit foundation mask.
    pub combo: u8,
    pub out_count: u64,
    pub in_count: u64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComboTable {
    /// Author group.
    pub group: usize,
    /// Combinations with `in_count >= min_in_count`, highest ratio first.
    pub ranked: Vec<ComboRow>,
    /// Combinations dropped by the in-group count filter.
    pub filtered: Vec<ComboRow>,
}

/// Per author group `X` and foundation combination `m`, the out-group to
/// in-group engagement ratio `C(X, X', m) / C(X, X, m)`.
pub fn moral_combo_ratio(
    records: &RecordTable,
    events: &[RetweetEvent],
    groups: &[usize],
    n_groups: usize,
    min_in_count: u64,
) -> Result<Vec<ComboTable>> {
    if let Some((v, g)) = groups.iter().enumerate().find(|(_, &g)| g >= n_groups) {
        return Err(Error::invalid(format!("node {v} has group {g} outside 0..{n_groups}")));
    }
    let recs = records.records();
    let mut counts: Vec<BTreeMap<u8, (u64, u64)>> = vec![BTreeMap::new(); n_groups];
    for (i, ev) in events.iter().enumerate() {
        let r = recs
            .get(ev.record)
            .ok_or_else(|| Error::invalid(format!("event {i} references missing record {}", ev.record)))?;
        let (Some(&ga), Some(&gr)) = (groups.get(r.author), groups.get(ev.retweeter)) else {
            return Err(Error::invalid(format!("event {i} references a node without a group")));
        };
        let c = counts[ga].entry(r.moral_mask()).or_default();
        if ga == gr {
            c.1 += 1;
        } else {
            c.0 += 1;
        }
    }
    Ok(counts
        .into_iter()
        .enumerate()
        .map(|(group, m)| {
            let (mut ranked, mut filtered) = (Vec::new(), Vec::new());
            for (combo, (out_count, in_count)) in m {
                let row = ComboRow {
                    combo,
                    out_count,
                    in_count,
                    ratio: if in_count > 0 {
                        out_count as f64 / in_count as f64
                    } else {
                        f64::NAN
                    },
                };
                if in_count >= min_in_count.max(1) {
                    ranked.push(row);
                } else {
                    filtered.push(row);
                }
            }
            ranked.sort_by(|a, b| b.ratio.total_cmp(&a.ratio).then(a.combo.cmp(&b.combo)));
            ComboTable { group, ranked, filtered }
        })
        .collect())
}

/// Foundation names present in a combination mask, joined with `+`.
pub fn combo_label(mask: u8) -> String {
    const NAMES: [&str; 5] = ["care", "fairness", "loyalty", "authority", "purity"];
    let parts: Vec<&str> = (0..5).filter(|b| mask & (1 << b) != 0).map(|b| NAMES[b]).collect();
    if parts.is_empty() {
        "none".into()
    } else {
        parts.join("+")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::{Engagement, Record};
    use crate::graph::{generate_planted_partition, Edge};
    use rand::Rng;

    fn rt(src: usize, dst: usize, weight: f64) -> Edge {
        Edge {
            src,
            dst,
            etype: EdgeType::Retweet,
            weight,
        }
    }

    #[test]
    fn within_group_edges() {
        let (g, _) = SocialGraph::with_indexed_nodes(4, vec![rt(0, 1, 1.0), rt(1, 0, 1.0), rt(2, 3, 2.0)]).unwrap();
        let m = group_ratio(&g, &[0, 0, 1, 1], 2, EdgeType::Retweet, 100, 1).unwrap();
        assert!(m.get(0, 0) > 1.0 && m.get(1, 1) > 1.0);
        assert_eq!(m.get(0, 1), 0.0);
        assert_eq!(m.get(1, 0), 0.0);
        let io = in_out_group_ratio(&m);
        assert!(io.iter().all(|r| r.in_ratio > 1.0 && r.out_ratio == 0.0));
    }

    #[test]
    fn toy_counts_match_enumeration() {
        // 6 nodes, groups {0,1,2} and {3,4,5}
        let edges = vec![rt(0, 1, 1.0), rt(0, 3, 2.0), rt(1, 4, 1.0), rt(3, 4, 1.0), rt(4, 5, 3.0), rt(5, 0, 1.0)];
        let (g, _) = SocialGraph::with_indexed_nodes(6, edges).unwrap();
        let groups = [0, 0, 0, 1, 1, 1];
        let m = group_ratio(&g, &groups, 2, EdgeType::Retweet, 1, 0).unwrap();
        // group 0 acts with weight 4: 1 inside, 3 outside; group 1 with 5: 4 inside, 1 outside
        assert_eq!(m.p, vec![0.25, 0.75, 0.2, 0.8]);

        // exact null: mean over all 20 equal-size relabelings
        let nodes: Vec<usize> = (0..6).collect();
        let mut exact = [0.0f64; 4];
        let mut defined = [0usize; 2];
        for a in 0..6 {
            for b in a + 1..6 {
                for c in b + 1..6 {
                    let lab: Vec<usize> = nodes.iter().map(|&v| usize::from(!(v == a || v == b || v == c))).collect();
                    let q = proportions(&g, EdgeType::Retweet, &lab, 2);
                    for x in 0..2 {
                        if !q[2 * x].is_nan() {
                            defined[x] += 1;
                            exact[2 * x] += q[2 * x];
                            exact[2 * x + 1] += q[2 * x + 1];
                        }
                    }
                }
            }
        }
        let m = group_ratio(&g, &groups, 2, EdgeType::Retweet, 20_000, 5).unwrap();
        for i in 0..4 {
            let want = exact[i] / defined[i / 2] as f64;
            assert!((m.p_rand[i] - want).abs() < 0.01, "{i}: {} vs {want}", m.p_rand[i]);
        }
    }

    #[test]
    fn random_groups_are_near_one() {
        let pp = generate_planted_partition(1000, 1, 0.012, 0.0, 3).unwrap();
        assert!(pp.graph.edge_count(EdgeType::Retweet) > 10_000);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let groups: Vec<usize> = (0..1000).map(|_| rng.random_range(0..3)).collect();
        let m = group_ratio(&pp.graph, &groups, 3, EdgeType::Retweet, 100, 2).unwrap();
        assert!(m.ratio.iter().all(|r| (r - 1.0).abs() < 0.1), "{:?}", m.ratio);
        assert!(in_out_group_ratio(&m).iter().all(|r| (r.in_ratio - 1.0).abs() < 0.1 && (r.out_ratio - 1.0).abs() < 0.1));
    }

    #[test]
    fn identity_grouping_smoke() {
        let (g, _) = SocialGraph::with_indexed_nodes(3, vec![rt(0, 1, 1.0), rt(1, 2, 1.0)]).unwrap();
        let m = group_ratio(&g, &[0, 1, 2], 3, EdgeType::Retweet, 10, 0).unwrap();
        assert_eq!(m.p[1], 1.0);
        assert!(m.p[6].is_nan());
        assert!(group_ratio(&g, &[0, 0, 0], 1, EdgeType::Retweet, 10, 0).is_err());
    }

    fn record(author: usize, moral: [u8; 10]) -> Record {
        Record {
            author,
            ordinal: 0,
            text: None,
            toxicity: [0.0; 6],
            engagement: Engagement::default(),
            moral,
        }
    }

    #[test]
    fn combo_counts() {
        let care = [1, 0, 0, 0, 0, 0, 0, 0, 0, 0];
        let care_purity = [0, 1, 0, 0, 0, 0, 0, 0, 1, 0];
        let none = [0; 10];
        let recs = RecordTable::new(vec![record(0, care), record(0, care_purity), record(2, none), record(2, care)]).unwrap();
        let groups = [0, 0, 1, 1];
        let ev = |record, retweeter| RetweetEvent { record, retweeter };
        let events = [
            ev(0, 1), ev(0, 2), ev(0, 3), ev(0, 1), // care: out 2, in 2
            ev(1, 2), ev(1, 3), ev(1, 1), // care+purity: out 2, in 1
            ev(2, 3), ev(2, 0), // none from group 1: in 1, out 1
            ev(3, 0), // care from group 1: out 1, in 0
        ];
        let t = moral_combo_ratio(&recs, &events, &groups, 2, 1).unwrap();
        let r0: Vec<(u8, f64)> = t[0].ranked.iter().map(|r| (r.combo, r.ratio)).collect();
        assert_eq!(r0, vec![(0b10001, 2.0), (0b00001, 1.0)]);
        assert_eq!(t[1].ranked.len(), 1);
        assert_eq!(t[1].ranked[0].ratio, 1.0);
        assert_eq!(t[1].filtered.len(), 1);
        assert_eq!(t[1].filtered[0].out_count, 1);
        let t = moral_combo_ratio(&recs, &events, &groups, 2, 2).unwrap();
        assert_eq!(t[0].ranked.len(), 1);
        assert_eq!(combo_label(0b10001), "care+purity");
        assert_eq!(combo_label(0), "none");
    }
}
