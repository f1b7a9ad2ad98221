use super::loss::{mnr_loss_grad, triplet_grad};
use super::model::{Activation, Architecture, EdgeSide, EmbedModel, ForwardCache};
use super::tensor::{affine, affine_backward, dot, norm};
use crate::features::FeatureTable;
use crate::graph::{EdgeType, SocialGraph};
use crate::{Error, Result};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::weighted::WeightedAliasIndex;
use rand_distr::Distribution;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    /// One uniformly drawn negative per positive edge, Euclidean hinge.
    Triplet,
    /// In-batch negatives, softmax over scaled cosine scores.
    #[default]
    MultipleNegatives,
}

/// How edge weights enter training.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Weighting {
    /// Every aggregated edge counts once.
    None,
    /// Edges drawn with probability proportional to weight.
    #[default]
    Sampling,
    /// Edges visited once, per-instance loss scaled by weight.
    LossScaling,
}

/// Loss settings shared by training and gradient checks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Objective {
    pub loss: LossKind,
    pub margin: f64,
    pub scale: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub embed_dim: usize,
    pub block_width: usize,
    pub depth: usize,
    pub activation: Activation,
    pub learning_rate: f64,
    pub momentum: f64,
    /// L2 penalty coefficient added to every gradient step.
    pub weight_decay: f64,
    pub epochs: usize,
    pub batch_size: usize,
    /// Triplet margin.
    pub margin: f64,
    pub loss: LossKind,
    /// Multiplier on cosine scores inside the multiple-negatives softmax.
    pub scale: f64,
    /// Edge types visited round-robin; empty means every type in the graph.
    pub schedule: Vec<EdgeType>,
    pub directional: bool,
    pub weighting: Weighting,
    pub seed: u64,
    /// Row chunks processed in parallel per batch; gradients are summed in
    /// chunk order so results do not depend on thread scheduling.
    pub workers: usize,
    /// Edges per edge type in the fixed probe set behind `epoch_loss`.
    pub probe_edges: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            embed_dim: 32,
            block_width: 32,
            depth: 1,
            activation: Activation::Tanh,
            learning_rate: 0.01,
            momentum: 0.9,
            weight_decay: 0.0,
            epochs: 10,
            batch_size: 64,
            margin: 1.0,
            loss: LossKind::MultipleNegatives,
            scale: 20.0,
            schedule: Vec::new(),
            directional: false,
            weighting: Weighting::Sampling,
            seed: 0,
            workers: 1,
            probe_edges: 512,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.embed_dim == 0 || self.block_width == 0 || self.depth == 0 {
            return Err(Error::invalid("embed_dim, block_width and depth must be >= 1"));
        }
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::invalid("learning_rate must be finite and >= 0"));
        }
        if !(self.weight_decay >= 0.0 && self.weight_decay.is_finite()) {
            return Err(Error::invalid("weight_decay must be finite and >= 0"));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::invalid("momentum must lie in [0, 1)"));
        }
        if self.batch_size == 0 {
            return Err(Error::invalid("batch_size must be >= 1"));
        }
        match self.loss {
            LossKind::Triplet if !(self.margin > 0.0) => {
                Err(Error::invalid("triplet margin must be > 0"))
            }
            LossKind::MultipleNegatives if self.batch_size < 2 => {
                Err(Error::invalid("multiple-negatives loss needs batch_size >= 2"))
            }
            LossKind::MultipleNegatives if !(self.scale > 0.0 && self.scale.is_finite()) => {
                Err(Error::invalid("scale must be finite and > 0"))
            }
            _ => Ok(()),
        }
    }

    pub fn objective(&self) -> Objective {
        Objective {
            loss: self.loss,
            margin: self.margin,
            scale: self.scale,
        }
    }
}

/// A batch of positive edges of one type, with triplet negatives when used.
#[derive(Debug, Clone, PartialEq)]
pub struct Batch {
    pub etype: EdgeType,
    pub src: Vec<usize>,
    pub dst: Vec<usize>,
    pub neg: Vec<usize>,
    /// Per-instance loss weights; `None` weighs all rows equally.
    pub weights: Option<Vec<f64>>,
}

impl Batch {
    pub fn len(&self) -> usize {
        self.src.len()
    }

    pub fn is_empty(&self) -> bool {
        self.src.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    /// Mean loss on a fixed probe set; entry 0 is before any update,
    /// entry `e` after epoch `e`.
    pub epoch_loss: Vec<f64>,
    /// Mean minibatch loss seen during each epoch.
    pub train_loss: Vec<f64>,
    pub steps: usize,
    /// Scheduled edge types that had no edges.
    pub skipped: Vec<EdgeType>,
}

/// Cosine of every row pair plus what its gradient needs.
fn cosine_rows(a: &[f64], b: &[f64], rows_a: usize, rows_b: usize, d: usize) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let na: Vec<f64> = (0..rows_a).map(|i| norm(&a[i * d..(i + 1) * d])).collect();
    let nb: Vec<f64> = (0..rows_b).map(|j| norm(&b[j * d..(j + 1) * d])).collect();
    let mut s = vec![0.0; rows_a * rows_b];
    for i in 0..rows_a {
        for j in 0..rows_b {
            if na[i] > 0.0 && nb[j] > 0.0 {
                s[i * rows_b + j] = dot(&a[i * d..(i + 1) * d], &b[j * d..(j + 1) * d]) / (na[i] * nb[j]);
            }
        }
    }
    (s, na, nb)
}

impl EmbedModel {
    fn forward_chunks(&self, f: &FeatureTable, nodes: &[usize], workers: usize) -> (Vec<ForwardCache>, Vec<f64>) {
        let size = nodes.len().div_ceil(workers.max(1)).max(1);
        let caches: Vec<ForwardCache> = if workers > 1 {
            nodes
                .par_chunks(size)
                .map(|c| self.forward(self.gather(f, c), c.len()))
                .collect()
        } else {
            nodes
                .chunks(size)
                .map(|c| self.forward(self.gather(f, c), c.len()))
                .collect()
        };
        let out = caches.iter().flat_map(|c| c.output().iter().copied()).collect();
        (caches, out)
    }

    fn backward_chunks(&self, caches: &[ForwardCache], d_out: &[f64], grad: &mut [f64], workers: usize) {
        let d = self.embed_dim();
        let mut offsets = Vec::with_capacity(caches.len());
        let mut off = 0;
        for c in caches {
            offsets.push(off);
            off += c.output().len() / d;
        }
        let run = |(c, &o): (&ForwardCache, &usize)| {
            let rows = c.output().len() / d;
            let mut g = vec![0.0; grad.len()];
            self.backward(c, &d_out[o * d..(o + rows) * d], &mut g);
            g
        };
        let parts: Vec<Vec<f64>> = if workers > 1 {
            caches.par_iter().zip(&offsets).map(run).collect()
        } else {
            caches.iter().zip(&offsets).map(run).collect()
        };
        for p in parts {
            for (g, v) in grad.iter_mut().zip(p) {
                *g += v;
            }
        }
    }

    /// Loss of one batch and, when `grad` is given, its gradient with
    /// respect to every parameter (accumulated into `grad`).
    pub fn batch_loss(
        &self,
        f: &FeatureTable,
        batch: &Batch,
        obj: &Objective,
        grad: Option<&mut [f64]>,
    ) -> Result<f64> {
        self.batch_loss_workers(f, batch, obj, grad, 1)
    }

    pub(crate) fn batch_loss_workers(
        &self,
        f: &FeatureTable,
        batch: &Batch,
        obj: &Objective,
        grad: Option<&mut [f64]>,
        workers: usize,
    ) -> Result<f64> {
        self.check_table(f)?;
        let b = batch.len();
        if b == 0 || batch.dst.len() != b {
            return Err(Error::invalid("batch needs matching non-empty src and dst"));
        }
        if obj.loss == LossKind::Triplet && batch.neg.len() != b {
            return Err(Error::invalid("triplet batch needs one negative per edge"));
        }
        if let Some(w) = &batch.weights {
            if w.len() != b || w.iter().any(|&x| !(x > 0.0 && x.is_finite())) {
                return Err(Error::invalid("batch weights must be positive, one per edge"));
            }
        }
        let d = self.embed_dim();
        let ts = self.projection_tensor(batch.etype, EdgeSide::Source)?;
        let tt = self.projection_tensor(batch.etype, EdgeSide::Target)?;
        let ws = self.params().tensor(ts);
        let wt = self.params().tensor(tt);

        let (cs, us) = self.forward_chunks(f, &batch.src, workers);
        let (cd, ud) = self.forward_chunks(f, &batch.dst, workers);
        let a = affine(&us, b, d, ws, None, d);
        let p = affine(&ud, b, d, wt, None, d);

        let total_w: f64 = batch.weights.as_ref().map_or(b as f64, |w| w.iter().sum());
        let coef = |i: usize| batch.weights.as_ref().map_or(1.0, |w| w[i]) / total_w;

        match obj.loss {
            LossKind::MultipleNegatives => {
                let (s, na, np) = cosine_rows(&a, &p, b, b, d);
                let (loss, ds) = mnr_loss_grad(&s, b, obj.scale, batch.weights.as_deref())?;
                let Some(grad) = grad else { return Ok(loss) };
                let mut da = vec![0.0; b * d];
                let mut dp = vec![0.0; b * d];
                for i in 0..b {
                    for j in 0..b {
                        let g = ds[i * b + j];
                        if g == 0.0 || na[i] == 0.0 || np[j] == 0.0 {
                            continue;
                        }
                        let sij = s[i * b + j];
                        let (ai, pj) = (&a[i * d..(i + 1) * d], &p[j * d..(j + 1) * d]);
                        for k in 0..d {
                            da[i * d + k] += g * (pj[k] / (na[i] * np[j]) - sij * ai[k] / (na[i] * na[i]));
                            dp[j * d + k] += g * (ai[k] / (na[i] * np[j]) - sij * pj[k] / (np[j] * np[j]));
                        }
                    }
                }
                self.backprop_pair(&cs, &cd, &us, &ud, &da, &dp, ts, tt, grad, workers);
                Ok(loss)
            }
            LossKind::Triplet => {
                let (cn, un) = self.forward_chunks(f, &batch.neg, workers);
                let n = affine(&un, b, d, wt, None, d);
                let mut loss = 0.0;
                let mut da = vec![0.0; b * d];
                let mut dp = vec![0.0; b * d];
                let mut dn = vec![0.0; b * d];
                for i in 0..b {
                    let r = i * d..(i + 1) * d;
                    let (l, [ga, gp, gn]) =
                        triplet_grad(&a[r.clone()], &p[r.clone()], &n[r.clone()], obj.margin, coef(i));
                    loss += coef(i) * l;
                    da[r.clone()].copy_from_slice(&ga);
                    dp[r.clone()].copy_from_slice(&gp);
                    dn[r].copy_from_slice(&gn);
                }
                let Some(grad) = grad else { return Ok(loss) };
                let specs = self.params().specs();
                let dun = {
                    let dw = &mut grad[specs[tt].range()];
                    affine_backward(&un, b, d, wt, d, &dn, dw, None)
                };
                self.backprop_pair(&cs, &cd, &us, &ud, &da, &dp, ts, tt, grad, workers);
                self.backward_chunks(&cn, &dun, grad, workers);
                Ok(loss)
            }
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn backprop_pair(
        &self,
        cs: &[ForwardCache],
        cd: &[ForwardCache],
        us: &[f64],
        ud: &[f64],
        da: &[f64],
        dp: &[f64],
        ts: usize,
        tt: usize,
        grad: &mut [f64],
        workers: usize,
    ) {
        let d = self.embed_dim();
        let b = us.len() / d;
        let specs = self.params().specs();
        let dus = affine_backward(us, b, d, self.params().tensor(ts), d, da, &mut grad[specs[ts].range()], None);
        let dud = affine_backward(ud, b, d, self.params().tensor(tt), d, dp, &mut grad[specs[tt].range()], None);
        self.backward_chunks(cs, &dus, grad, workers);
        self.backward_chunks(cd, &dud, grad, workers);
    }
}

struct EtypeData {
    etype: EdgeType,
    src: Vec<usize>,
    dst: Vec<usize>,
    weight: Vec<f64>,
    alias: Option<WeightedAliasIndex<f64>>,
}

/// Trains a fresh model on the edges of `g` using node features `f`.
///
/// `f` must be row-aligned with the graph's node order and every endpoint
/// of a scheduled edge must have features. Nodes outside all edges are
/// still valid inference inputs afterwards.
pub fn train(g: &SocialGraph, f: &FeatureTable, cfg: &TrainConfig) -> Result<(EmbedModel, TrainReport)> {
    cfg.validate()?;
    if f.ids() != g.ids() {
        return Err(Error::invalid("feature table rows must follow the graph's node order"));
    }
    let schedule: Vec<EdgeType> = if cfg.schedule.is_empty() {
        g.etypes().collect()
    } else {
        cfg.schedule.clone()
    };
    let mut data = Vec::new();
    let mut skipped = Vec::new();
    for &et in &schedule {
        let edges = g.edges(et);
        if edges.is_empty() {
            log::warn!("edge type {et} has no edges; skipped");
            skipped.push(et);
            continue;
        }
        for e in edges {
            for v in [e.src, e.dst] {
                if !f.is_present(v) {
                    return Err(Error::invalid(format!("training endpoint {} has no features", g.id(v))));
                }
            }
        }
        let weight: Vec<f64> = edges.iter().map(|e| e.weight).collect();
        let alias = match cfg.weighting {
            Weighting::Sampling => Some(
                WeightedAliasIndex::new(weight.clone()).map_err(|e| Error::invalid(format!("edge weights: {e}")))?,
            ),
            _ => None,
        };
        data.push(EtypeData {
            etype: et,
            src: edges.iter().map(|e| e.src).collect(),
            dst: edges.iter().map(|e| e.dst).collect(),
            weight,
            alias,
        });
    }
    if data.is_empty() {
        return Err(Error::InsufficientData("no edges for any scheduled edge type".into()));
    }
    let arch = Architecture {
        block_dims: f.block_dims(),
        block_width: cfg.block_width,
        embed_dim: cfg.embed_dim,
        depth: cfg.depth,
        activation: cfg.activation,
        etypes: schedule.iter().copied().filter(|e| !skipped.contains(e)).collect(),
        directional: cfg.directional,
    };
    let mut model = EmbedModel::new(arch, cfg.seed)?;
    let candidates: Vec<usize> = (0..f.len()).filter(|&i| f.is_present(i)).collect();
    let obj = cfg.objective();

    let mut probe_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    probe_rng.set_stream(2);
    let probe = probe_batches(&data, cfg, &candidates, &mut probe_rng);
    let probe_loss = |m: &EmbedModel| -> Result<f64> {
        let mut total = 0.0;
        for b in &probe {
            total += m.batch_loss_workers(f, b, &obj, None, cfg.workers)?;
        }
        Ok(total / probe.len() as f64)
    };

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(1);
    let mut report = TrainReport {
        epoch_loss: vec![probe_loss(&model)?],
        train_loss: Vec::with_capacity(cfg.epochs),
        steps: 0,
        skipped,
    };
    let mut grad = model.params().zeros_like();
    for epoch in 0..cfg.epochs {
        let queues: Vec<Vec<Batch>> = data
            .iter()
            .map(|et| epoch_batches(et, cfg, &candidates, &mut rng))
            .collect();
        let rounds = queues.iter().map(Vec::len).max().unwrap_or(0);
        let mut sum = 0.0;
        let mut count = 0usize;
        for r in 0..rounds {
            for q in &queues {
                let Some(batch) = q.get(r) else { continue };
                grad.iter_mut().for_each(|v| *v = 0.0);
                let loss = model.batch_loss_workers(f, batch, &obj, Some(&mut grad), cfg.workers)?;
                if !loss.is_finite() || grad.iter().any(|v| !v.is_finite()) {
                    return Err(Error::NonFinite(format!("gradient at epoch {epoch}")));
                }
                if cfg.weight_decay > 0.0 {
                    for (g, p) in grad.iter_mut().zip(model.params().data()) {
                        *g += cfg.weight_decay * p;
                    }
                }
                model.sgd_step(&grad, cfg.learning_rate, cfg.momentum);
                sum += loss;
                count += 1;
                report.steps += 1;
            }
        }
        report.train_loss.push(sum / count.max(1) as f64);
        report.epoch_loss.push(probe_loss(&model)?);
        log::debug!("epoch {epoch}: probe loss {:.6}", report.epoch_loss[epoch + 1]);
    }
    Ok((model, report))
}

fn make_batch(et: &EtypeData, picks: &[usize], cfg: &TrainConfig, candidates: &[usize], rng: &mut ChaCha8Rng) -> Batch {
    let neg = if cfg.loss == LossKind::Triplet {
        picks.iter().map(|_| candidates[rng.random_range(0..candidates.len())]).collect()
    } else {
        Vec::new()
    };
    Batch {
        etype: et.etype,
        src: picks.iter().map(|&i| et.src[i]).collect(),
        dst: picks.iter().map(|&i| et.dst[i]).collect(),
        neg,
        weights: (cfg.weighting == Weighting::LossScaling).then(|| picks.iter().map(|&i| et.weight[i]).collect()),
    }
}

fn split_batches(et: &EtypeData, order: &[usize], cfg: &TrainConfig, candidates: &[usize], rng: &mut ChaCha8Rng) -> Vec<Batch> {
    let min_len = if cfg.loss == LossKind::MultipleNegatives { 2 } else { 1 };
    order
        .chunks(cfg.batch_size)
        .filter(|c| c.len() >= min_len)
        .map(|c| make_batch(et, c, cfg, candidates, rng))
        .collect()
}

/// One epoch worth of batches: `m` edges, either a shuffled pass or
/// `m` weight-proportional draws.
fn epoch_batches(et: &EtypeData, cfg: &TrainConfig, candidates: &[usize], rng: &mut ChaCha8Rng) -> Vec<Batch> {
    let m = et.src.len();
    let order: Vec<usize> = match &et.alias {
        Some(alias) => (0..m).map(|_| alias.sample(rng)).collect(),
        None => {
            let mut o: Vec<usize> = (0..m).collect();
            o.shuffle(rng);
            o
        }
    };
    split_batches(et, &order, cfg, candidates, rng)
}

fn probe_batches(data: &[EtypeData], cfg: &TrainConfig, candidates: &[usize], rng: &mut ChaCha8Rng) -> Vec<Batch> {
    let mut out = Vec::new();
    for et in data {
        let mut o: Vec<usize> = (0..et.src.len()).collect();
        o.shuffle(rng);
        o.truncate(cfg.probe_edges.max(cfg.batch_size.min(o.len())));
        let mut batches = split_batches(et, &o, cfg, candidates, rng);
        if batches.is_empty() {
            // A lone edge still gets a probe under the multiple-negatives loss.
            batches.push(make_batch(et, &o, cfg, candidates, rng));
        }
        out.extend(batches);
    }
    out
}
