//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit when
//! any criterion fails.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use socweave::analytics::{assortativity, rwc_matrix, rwc_matrix_with_stop, shuffle_null, RwcConfig};
use socweave::cluster::{gaussian_blobs, kmeans, select_k, KmeansConfig};
use socweave::embedder::{
    mnr_loss, train, triplet_loss, Activation, Architecture, Batch, EmbedModel, LossKind, Objective, TrainConfig,
};
use socweave::engagement::{detect_anchors, synth_timelines, toxicity_delta, DeltaConfig, ResidualScope, SynthTimelineConfig};
use socweave::features::{aggregate_moral, transform_engagement, zscore_columns, FeatureBlock, FeatureTable, ScoreTable};
use socweave::graph::{generate_planted_partition, group_features, Edge, EdgeType, SocialGraph};
use socweave::heads::{fit_head, macro_f1, split, HeadConfig, Labels, SplitPlan};
use socweave::labeling::{
    combine_labels, label_from_hashtags, label_from_media, label_propagation, Lexicon, Provenance, SeedLabels, Side,
};
use socweave::stats::{mean, paired_t_greater, std_dev};
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn criterion(name: &str, budget: Duration, f: impl FnOnce() -> Outcome) -> bool {
    let t = Instant::now();
    let o = f();
    let took = t.elapsed();
    let in_time = took <= budget;
    let pass = o.pass && in_time;
    println!(
        "{} {name}: {} [{:.1}s, budget {}s{}]",
        if pass { "PASS" } else { "FAIL" },
        o.detail,
        took.as_secs_f64(),
        budget.as_secs(),
        if in_time { "" } else { ", over budget" }
    );
    pass
}

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-6)
}

fn loss_correctness() -> Outcome {
    let mut worst: f64 = 0.0;
    for seed in 0..20u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = 8;
        let x: Vec<Vec<f64>> = (0..n).map(|_| (0..3).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
        let y: Vec<Vec<f64>> = (0..n).map(|_| (0..2).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
        let f = FeatureTable::new(
            (0..n).map(|i| i.to_string()).collect(),
            vec![FeatureBlock::from_rows("a", &x).unwrap(), FeatureBlock::from_rows("b", &y).unwrap()],
        )
        .unwrap();
        for loss in [LossKind::Triplet, LossKind::MultipleNegatives] {
            let arch = Architecture {
                block_dims: vec![3, 2],
                block_width: 4,
                embed_dim: 3,
                depth: 2,
                activation: Activation::Tanh,
                etypes: vec![EdgeType::Retweet],
                directional: seed % 2 == 1,
            };
            let mut model = EmbedModel::new(arch, seed).unwrap();
            let batch = Batch {
                etype: EdgeType::Retweet,
                src: vec![0, 1, 2, 3],
                dst: vec![4, 5, 6, 7],
                neg: vec![7, 0, 4, 2],
                weights: None,
            };
            let obj = Objective {
                loss,
                margin: 1.0,
                scale: 5.0,
            };
            let mut grad = model.params().zeros_like();
            model.batch_loss(&f, &batch, &obj, Some(&mut grad)).unwrap();
            let h = 1e-5;
            for k in 0..grad.len() {
                let orig = model.params().data()[k];
                model.params_mut().data_mut()[k] = orig + h;
                let hi = model.batch_loss(&f, &batch, &obj, None).unwrap();
                model.params_mut().data_mut()[k] = orig - h;
                let lo = model.batch_loss(&f, &batch, &obj, None).unwrap();
                model.params_mut().data_mut()[k] = orig;
                worst = worst.max(rel_err((hi - lo) / (2.0 * h), grad[k]));
            }
        }
    }
    let b1 = mnr_loss(&[0.37], 1, 20.0).unwrap();
    let b2 = mnr_loss(&[0.4; 4], 2, 20.0).unwrap();
    let ln2_err = (b2 - 2f64.ln()).abs();
    let triplet_zero = triplet_loss(&[0.0, 0.0], &[1.0, 0.0], &[3.0, 0.0], 1.0);
    let pass = worst < 1e-3 && b1.abs() < 1e-9 && ln2_err < 1e-9 && triplet_zero == 0.0;
    outcome(
        pass,
        format!("max rel FD error {worst:.2e} over 20 seeds (tol 1e-3); B=1 loss {b1:e}; |uniform B=2 - ln2| {ln2_err:.1e}"),
    )
}

fn rows(x: &[f64], d: usize, idx: &[usize]) -> Vec<f64> {
    idx.iter().flat_map(|&i| x[i * d..(i + 1) * d].iter().copied()).collect()
}

const NODES: usize = 2000;
const NOISE_DIMS: usize = 100;
/// Feature noise putting the features-only baseline near 0.80 Macro-F1.
const HOMOPHILY_SIGMA: f64 = 0.5;
const INDUCTIVE_SIGMA: f64 = 0.45;

fn planted_task(seed: u64, sigma: f64) -> (SocialGraph, Vec<usize>, Vec<Vec<f64>>, FeatureTable) {
    let pp = generate_planted_partition(NODES, 4, 0.05, 0.002, seed).unwrap();
    let xr = group_features(&pp.groups, 4, NOISE_DIMS, sigma, seed + 1000).unwrap();
    let f = FeatureTable::new(pp.graph.ids().to_vec(), vec![FeatureBlock::from_rows("x", &xr).unwrap()]).unwrap();
    (pp.graph, pp.groups, xr, f)
}

fn train_cfg(seed: u64) -> TrainConfig {
    TrainConfig {
        embed_dim: 32,
        block_width: 32,
        epochs: 10,
        learning_rate: 0.0005,
        loss: LossKind::Triplet,
        seed,
        ..TrainConfig::default()
    }
}

fn f1_on(head_x: &[f64], d: usize, groups: &[usize], train_idx: &[usize], val: &[usize], test: &[usize]) -> f64 {
    let y = Labels::Classes(groups.to_vec());
    let h = fit_head(head_x, d, &y, train_idx, val, &HeadConfig::default()).unwrap();
    let truth: Vec<usize> = test.iter().map(|&i| groups[i]).collect();
    macro_f1(&h.predict_classes(&rows(head_x, d, test)), &truth).unwrap()
}

fn homophily() -> Outcome {
    let (mut emb, mut base) = (Vec::new(), Vec::new());
    for seed in 0..10u64 {
        let (g, groups, xr, f) = planted_task(seed, HOMOPHILY_SIGMA);
        let (m, _) = train(&g, &f, &train_cfg(seed)).unwrap();
        let e = m.infer_all(&f).unwrap();
        let all: Vec<usize> = (0..NODES).collect();
        let s = split(&all, &SplitPlan::default(), seed).unwrap();
        emb.push(f1_on(&e.data, 32, &groups, &s.train, &s.val, &s.test));
        base.push(f1_on(&xr.concat(), 4 + NOISE_DIMS, &groups, &s.train, &s.val, &s.test));
    }
    let gain = 100.0 * (mean(&emb) - mean(&base));
    let (t, p) = paired_t_greater(&emb, &base).unwrap();
    outcome(
        gain >= 5.0 && p < 0.05,
        format!(
            "embedding F1 {:.3} vs features {:.3}: +{gain:.1} pts (need >= 5), paired t {t:.2}, p {p:.2e} (need < 0.05)",
            mean(&emb),
            mean(&base)
        ),
    )
}

fn inductive() -> Outcome {
    let (mut inside, mut held_out) = (Vec::new(), Vec::new());
    for seed in 0..10u64 {
        let (g, groups, _, f) = planted_task(seed, INDUCTIVE_SIGMA);
        let mut order: Vec<usize> = (0..NODES).collect();
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed + 7));
        let held = order[..NODES / 5].to_vec();
        let mut is_held = vec![false; NODES];
        held.iter().for_each(|&h| is_held[h] = true);
        let g = g.retain_edges(|e| !is_held[e.src] && !is_held[e.dst]);
        let (m, _) = train(&g, &f, &train_cfg(seed)).unwrap();
        let e = m.infer_all(&f).unwrap();
        let s = split(&order[NODES / 5..], &SplitPlan::default(), seed).unwrap();
        let y = Labels::Classes(groups.clone());
        let h = fit_head(&e.data, 32, &y, &s.train, &s.val, &HeadConfig::default()).unwrap();
        let score = |idx: &[usize]| {
            let truth: Vec<usize> = idx.iter().map(|&i| groups[i]).collect();
            macro_f1(&h.predict_classes(&rows(&e.data, 32, idx)), &truth).unwrap()
        };
        inside.push(score(&s.test));
        held_out.push(score(&held));
    }
    let gap = 100.0 * (mean(&inside) - mean(&held_out));
    outcome(
        gap.abs() < 5.0,
        format!(
            "in-graph test F1 {:.3}, held-out F1 {:.3}: gap {gap:.1} pts (need < 5)",
            mean(&inside),
            mean(&held_out)
        ),
    )
}

fn graph(n: usize, edges: &[(usize, usize)]) -> SocialGraph {
    SocialGraph::with_indexed_nodes(
        n,
        edges.iter().map(|&(src, dst)| Edge {
            src,
            dst,
            etype: EdgeType::Retweet,
            weight: 1.0,
        }),
    )
    .unwrap()
    .0
}

/// Exact end-bin distribution of walks from `start` by enumerating every path.
fn walk_oracle(adj: &[Vec<usize>], stop: &[bool], bins: &[usize], start: usize, max_len: usize, out: &mut [f64], p: f64) {
    fn go(
        adj: &[Vec<usize>],
        stop: &[bool],
        bins: &[usize],
        path: &mut Vec<usize>,
        max_len: usize,
        out: &mut [f64],
        p: f64,
    ) {
        let cur = *path.last().unwrap();
        if path.len() - 1 == max_len || adj[cur].is_empty() {
            out[bins[cur] - 1] += p;
            return;
        }
        let q = p / adj[cur].len() as f64;
        for &nx in &adj[cur] {
            if path.contains(&nx) || stop[nx] {
                out[bins[nx] - 1] += q;
            } else {
                path.push(nx);
                go(adj, stop, bins, path, max_len, out, q);
                path.pop();
            }
        }
    }
    if stop[start] {
        out[bins[start] - 1] += p;
        return;
    }
    go(adj, stop, bins, &mut vec![start], max_len, out, p);
}

fn rwc() -> Outcome {
    let mut notes = Vec::new();
    let mut pass = true;

    let mut cliques = Vec::new();
    for base in [0, 4] {
        for a in 0..4 {
            for b in 0..4 {
                if a != b {
                    cliques.push((base + a, base + b));
                }
            }
        }
    }
    let g = graph(8, &cliques);
    let bins = [1, 1, 1, 1, 2, 2, 2, 2];
    let cfg = RwcConfig {
        n_walks: 5000,
        authoritative_fraction: 0.0,
        ..RwcConfig::default()
    };
    let m = rwc_matrix(&g, EdgeType::Retweet, &bins, 2, &cfg).unwrap();
    let exact = m.get(1, 1) == 1.0 && m.get(2, 2) == 1.0 && m.get(1, 2) == 0.0 && m.get(2, 1) == 0.0;
    pass &= exact;
    notes.push(format!("cliques exact {exact}"));

    let edges = [(0, 1), (1, 2), (2, 0), (1, 3), (3, 4), (4, 0), (2, 4), (0, 3)];
    let bins5 = [1, 1, 2, 2, 3];
    let stop = [false, false, false, false, true];
    let g5 = graph(5, &edges);
    let mut adj = vec![Vec::new(); 5];
    for &(s, d) in &edges {
        adj[s].push(d);
    }
    adj.iter_mut().for_each(|a| a.sort_unstable());
    let max_len = 4;
    let n_bins = 3;
    let mut oracle = vec![vec![0.0; n_bins]; n_bins];
    for a in 1..=n_bins {
        let members: Vec<usize> = (0..5).filter(|&v| bins5[v] == a).collect();
        for &v in &members {
            walk_oracle(&adj, &stop, &bins5, v, max_len, &mut oracle[a - 1], 1.0 / members.len() as f64);
        }
    }
    // Equal walks per start bin: Pr(start a | end b) = P(b | a) / sum_a' P(b | a').
    let cfg5 = RwcConfig {
        n_walks: 100_000,
        max_len,
        seed: 11,
        ..RwcConfig::default()
    };
    let m5 = rwc_matrix_with_stop(&g5, EdgeType::Retweet, &bins5, n_bins, &[4], &cfg5).unwrap();
    let mut max_dev: f64 = 0.0;
    for b in 0..n_bins {
        let col: f64 = (0..n_bins).map(|a| oracle[a][b]).sum();
        for a in 0..n_bins {
            let want = oracle[a][b] / col;
            max_dev = max_dev.max((m5.get(a + 1, b + 1) - want).abs());
        }
    }
    pass &= max_dev <= 0.02;
    notes.push(format!("5-node oracle max dev {max_dev:.4} (tol 0.02)"));

    let pp = generate_planted_partition(1000, 2, 0.02, 0.001, 5).unwrap();
    let bins2: Vec<usize> = pp.groups.iter().map(|g| g + 1).collect();
    let cfg2 = RwcConfig {
        n_walks: 10_000,
        seed: 5,
        ..RwcConfig::default()
    };
    let m2 = rwc_matrix(&pp.graph, EdgeType::Retweet, &bins2, 2, &cfg2).unwrap();
    let dominant = m2.get(1, 1) > m2.get(2, 1) && m2.get(2, 2) > m2.get(1, 2);
    pass &= dominant;
    notes.push(format!(
        "echo chambers diag {:.3}/{:.3} vs off {:.3}/{:.3}",
        m2.get(1, 1),
        m2.get(2, 2),
        m2.get(2, 1),
        m2.get(1, 2)
    ));
    outcome(pass, notes.join("; "))
}

fn assort() -> Outcome {
    let pp = generate_planted_partition(2000, 2, 0.01, 0.001, 3).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let attr: Vec<f64> = pp.groups.iter().map(|&g| g as f64 + rng.random_range(-0.5..0.5)).collect();
    let edges = pp.graph.edge_count(EdgeType::Retweet);
    let r = assortativity(&pp.graph, &attr, EdgeType::Retweet).unwrap();
    let null: Vec<f64> = (0..20)
        .map(|s| assortativity(&shuffle_null(&pp.graph, s), &attr, EdgeType::Retweet).unwrap())
        .collect();
    let worst = null.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    outcome(
        r >= 0.3 && worst < 0.05,
        format!("{edges} edges: r {r:.3} (need >= 0.3); max |r| over 20 shuffles {worst:.4} (need < 0.05)"),
    )
}

fn delta_p(shift: f64, seed: u64) -> (f64, usize) {
    let cfg = SynthTimelineConfig {
        shift,
        seed,
        ..SynthTimelineConfig::default()
    };
    let st = synth_timelines(&cfg).unwrap();
    let anchors = detect_anchors(&st.records, &st.actual, &st.expected, "synthetic", 2.0, ResidualScope::Global).unwrap();
    let dc = DeltaConfig {
        k: cfg.window,
        ..DeltaConfig::default()
    };
    let r = toxicity_delta(&st.records, &anchors, &dc).unwrap();
    (r.test.map_or(f64::NAN, |t| t.p), anchors.len())
}

fn engagement() -> Outcome {
    let (p_shift, _) = delta_p(0.5, 1);
    let control: Vec<f64> = (0..20).map(|s| delta_p(0.0, 100 + s).0).collect();
    let quiet = control.iter().filter(|&&p| p > 0.05).count();
    let cfg = SynthTimelineConfig {
        authors: 500,
        shift: 0.0,
        seed: 9,
        ..SynthTimelineConfig::default()
    };
    let st = synth_timelines(&cfg).unwrap();
    let anchors = detect_anchors(&st.records, &st.actual, &st.expected, "synthetic", 2.0, ResidualScope::Global).unwrap();
    let rate = 100.0 * anchors.len() as f64 / st.records.len() as f64;
    outcome(
        p_shift < 0.01 && quiet >= 18 && (rate - 4.55).abs() <= 0.5,
        format!(
            "planted shift p {p_shift:.2e} (need < 0.01); control p > 0.05 in {quiet}/20 (need >= 18); anchor rate {rate:.2}% over {} records (need 4.55 +/- 0.5)",
            st.records.len()
        ),
    )
}

fn pseudo_labels() -> Outcome {
    let lex = Lexicon::builtin();
    let mut bad = Vec::new();
    let mut check = |name: &str, ok: bool| {
        if !ok {
            bad.push(name.to_string());
        }
    };
    check("#MAGA #KAG #Resist", label_from_hashtags("#MAGA #KAG #Resist", &lex) == Some(Side::Right));
    check("#Resist", label_from_hashtags("#Resist", &lex) == Some(Side::Left));
    check("#MAGA #Resist", label_from_hashtags("#MAGA #Resist", &lex).is_none());
    let fb = label_from_media(&["foxnews", "breitbart"], &lex);
    check("foxnews+breitbart", fb.side == Some(Side::Right) && fb.mean_rating == Some(4.5));
    let hmc = label_from_media(&["huffpost", "msnbc", "cnn"], &lex);
    check(
        "huffpost+msnbc+cnn",
        hmc.side == Some(Side::Left) && (hmc.mean_rating.unwrap() - 4.0 / 3.0).abs() < 1e-12,
    );
    check("reuters+npr", label_from_media(&["reuters", "npr"], &lex).side.is_none());
    check("one endorsement", label_from_media(&["breitbart"], &lex).side.is_none());
    check(
        "conflict",
        combine_labels(Some(Side::Left), Some(Side::Right)) == Some((Side::Left, Provenance::Hashtag)),
    );
    check("media only", combine_labels(None, Some(Side::Right)) == Some((Side::Right, Provenance::Media)));
    check("none", combine_labels(None, None).is_none());

    let star = graph(5, &[(0, 1), (0, 2), (3, 0), (4, 0)]);
    let mut seeds = SeedLabels::new(5);
    seeds.set(0, Side::Left, Provenance::Hashtag);
    let p = label_propagation(&star, &seeds, &[], 1).unwrap();
    check("star", p.labels.iter().all(|s| *s == Some(Side::Left)));
    let path = graph(3, &[(0, 1), (1, 2)]);
    let mut seeds = SeedLabels::new(3);
    seeds.set(0, Side::Left, Provenance::Hashtag);
    seeds.set(2, Side::Right, Provenance::Hashtag);
    check("path tie", label_propagation(&path, &seeds, &[], 10).unwrap().labels[1].is_none());
    check("no seeds", label_propagation(&path, &SeedLabels::new(3), &[], 10).is_err());
    outcome(bad.is_empty(), if bad.is_empty() { "13 examples exact".into() } else { format!("failed: {}", bad.join(", ")) })
}

fn transforms() -> Outcome {
    let t = transform_engagement(0.0, 1.0).unwrap();
    let truth = [(0, 0, 0.0), (1, 0, 0.5), (0, 1, 0.5), (1, 1, 1.0)];
    let table_ok = truth.iter().all(|&(v, w, want)| aggregate_moral(v, w).unwrap() == want)
        && aggregate_moral(2, 0).is_err();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut st = ScoreTable::new(500);
    st.insert("care", (0..500).map(|_| rng.random_range(0.0..3.0)).collect()).unwrap();
    st.insert("purity", (0..500).map(|_| 10.0 + rng.random_range(0.0..0.01)).collect()).unwrap();
    let z = zscore_columns(&st, &["care", "purity"]).unwrap();
    let worst = ["care", "purity"]
        .iter()
        .map(|c| {
            let col = z.get(c).unwrap();
            mean(col).abs().max((std_dev(col) - 1.0).abs())
        })
        .fold(0.0f64, f64::max);
    outcome(
        (t + 3.32).abs() <= 0.01 && table_ok && worst < 1e-9,
        format!("transform_engagement(0, 1) = {t:.4}; moral truth table {table_ok}; zscore max |mean|,|sd-1| {worst:.1e}"),
    )
}

fn clustering() -> Outcome {
    // Moral archetypes over (care, fairness, loyalty, authority, purity).
    let centers = [
        0.9, 0.9, 0.1, 0.1, 0.1, //
        0.1, 0.1, 0.9, 0.9, 0.9, //
        0.9, 0.9, 0.9, 0.9, 0.9, //
        0.1, 0.1, 0.1, 0.1, 0.1,
    ];
    let cfg = KmeansConfig::default();
    let mut hits = 0;
    let mut monotone = true;
    for seed in 0..10u64 {
        let (data, _) = gaussian_blobs(&centers, 5, 50, 0.1, seed).unwrap();
        let sel = select_k(&data, 5, 2..=8, seed, &cfg).unwrap();
        if sel.recommended == 4 {
            hits += 1;
        }
        for k in 1..=8 {
            let a = kmeans(&data, 5, k, seed, &cfg).unwrap();
            monotone &= a.inertia_trace.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12));
        }
    }
    outcome(
        hits == 10 && monotone,
        format!("k=4 recovered in {hits}/10 seeds; inertia non-increasing in every run: {monotone}"),
    )
}

fn csv_files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "csv"))
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap()))
        .collect();
    v.sort();
    v
}

fn determinism() -> Outcome {
    let bin = env!("CARGO_BIN_EXE_socweave");
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("config.json");
    std::fs::write(
        &cfg,
        r#"{"seed": 5, "deterministic": true,
            "synth": {"nodes": 300, "noise_dims": 10},
            "train": {"epochs": 2, "loss": "triplet", "learning_rate": 0.0005, "workers": 2},
            "split": {"seeds": [0, 1, 2]},
            "approval": {"synthetic": {"authors": 20, "records_per_author": 100}},
            "analysis": {"rwc": {"n_walks": 2000}, "null_reps": 5, "shuffles": 3},
            "cluster": {"k_max": 5}}"#,
    )
    .unwrap();
    let steps: [&[&str]; 9] = [
        &["synth"],
        &["embed", "train"],
        &["embed", "export"],
        &["eval"],
        &["graph", "filter"],
        &["analyze", "ratio"],
        &["--set", "data.scores=__LABELS__", "analyze", "rwc"],
        &["approve", "--synthetic"],
        &["cluster"],
    ];
    let mut outputs = Vec::new();
    for run in ["a", "b"] {
        let out = tmp.path().join(run);
        for step in steps {
            let labels = out.join("labels.csv").to_string_lossy().into_owned();
            let args: Vec<String> = step.iter().map(|s| s.replace("__LABELS__", &format!("\"{labels}\""))).collect();
            let status = Command::new(bin)
                .arg("--config")
                .arg(&cfg)
                .arg("--set")
                .arg(format!("output_dir=\"{}\"", out.display()))
                .args(&args)
                .output()
                .unwrap();
            if !status.status.success() {
                return outcome(
                    false,
                    format!("`{}` failed: {}", step.join(" "), String::from_utf8_lossy(&status.stderr)),
                );
            }
        }
        outputs.push(csv_files(&out));
    }
    let same = outputs[0] == outputs[1];
    outcome(
        same && outputs[0].len() >= 10,
        format!("{} CSV outputs across {} commands byte-identical on rerun: {same}", outputs[0].len(), steps.len()),
    )
}

fn main() {
    let mins = |m: u64| Duration::from_secs(60 * m);
    let results = [
        criterion("loss correctness", Duration::from_secs(10), loss_correctness),
        criterion("homophily learning", mins(5), homophily),
        criterion("inductive contract", mins(5), inductive),
        criterion("random-walk controversy", mins(1), rwc),
        criterion("assortativity and null", mins(1), assort),
        criterion("engagement pipeline", mins(2), engagement),
        criterion("pseudo-labeling", mins(1), pseudo_labels),
        criterion("transforms", mins(1), transforms),
        criterion("clustering", mins(1), clustering),
        criterion("cli determinism", mins(5), determinism),
    ];
    let passed = results.iter().filter(|&&p| p).count();
    println!("acceptance: {passed}/{} criteria passed", results.len());
    if passed != results.len() {
        std::process::exit(1);
    }
}
