use super::loss::cosine;
use super::tensor::{affine, affine_backward, Params};
use crate::features::FeatureTable;
use crate::graph::EdgeType;
use crate::matrix_file::EmbeddingMatrix;
use crate::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::sync::atomic::{AtomicUsize, Ordering};

/// Nonlinearity applied after each post-concatenation dense layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    #[default]
    Tanh,
    Identity,
}

/// Shape of the representation stack and projection heads.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Architecture {
    /// Input width of each feature block, in table order.
    pub block_dims: Vec<usize>,
    /// Output width of every per-block linear map.
    pub block_width: usize,
    /// Embedding dimension `d`.
    pub embed_dim: usize,
    /// Number of dense layers after concatenation (at least 1).
    pub depth: usize,
    pub activation: Activation,
    /// Edge types that get projection matrices.
    pub etypes: Vec<EdgeType>,
    /// Separate source/target projections per edge type.
    pub directional: bool,
}

impl Architecture {
    pub fn validate(&self) -> Result<()> {
        if self.block_dims.is_empty() || self.block_dims.contains(&0) {
            return Err(Error::invalid("every feature block needs a positive width"));
        }
        if self.embed_dim == 0 || self.block_width == 0 || self.depth == 0 {
            return Err(Error::invalid("embed_dim, block_width and depth must be >= 1"));
        }
        Ok(())
    }

    fn shapes(&self) -> Vec<(String, usize, usize)> {
        let mut s = Vec::new();
        for (b, &dim) in self.block_dims.iter().enumerate() {
            s.push((format!("block{b}.weight"), self.block_width, dim));
            s.push((format!("block{b}.bias"), 1, self.block_width));
        }
        let mut inp = self.block_width * self.block_dims.len();
        for l in 0..self.depth {
            s.push((format!("dense{l}.weight"), self.embed_dim, inp));
            s.push((format!("dense{l}.bias"), 1, self.embed_dim));
            inp = self.embed_dim;
        }
        for et in &self.etypes {
            if self.directional {
                s.push((format!("proj.{et}.out"), self.embed_dim, self.embed_dim));
                s.push((format!("proj.{et}.in"), self.embed_dim, self.embed_dim));
            } else {
                s.push((format!("proj.{et}"), self.embed_dim, self.embed_dim));
            }
        }
        s
    }
}

/// Which endpoint of a directed edge a vector belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgeSide {
    Source,
    Target,
}

/// Role of the first argument of [`EmbedModel::edge_score`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DirectionRole {
    /// First vector is the edge source.
    Forward,
    /// First vector is the edge target.
    Reverse,
}

#[derive(Debug, Clone, PartialEq)]
struct Layout {
    blocks: Vec<(usize, usize)>,
    dense: Vec<(usize, usize)>,
    /// (source, target) projection tensor per edge type; equal when shared.
    proj: BTreeMap<EdgeType, (usize, usize)>,
}

impl Layout {
    fn new(arch: &Architecture, p: &Params) -> Self {
        let idx = |n: String| p.find(&n).expect("tensor declared by shapes()");
        Layout {
            blocks: (0..arch.block_dims.len())
                .map(|b| (idx(format!("block{b}.weight")), idx(format!("block{b}.bias"))))
                .collect(),
            dense: (0..arch.depth)
                .map(|l| (idx(format!("dense{l}.weight")), idx(format!("dense{l}.bias"))))
                .collect(),
            proj: arch
                .etypes
                .iter()
                .map(|&et| {
                    let pair = if arch.directional {
                        (idx(format!("proj.{et}.out")), idx(format!("proj.{et}.in")))
                    } else {
                        let t = idx(format!("proj.{et}"));
                        (t, t)
                    };
                    (et, pair)
                })
                .collect(),
        }
    }
}

/// Trainable user-representation module plus per-edge-type projections.
#[derive(Debug)]
pub struct EmbedModel {
    arch: Architecture,
    params: Params,
    layout: Layout,
    /// Momentum buffer, same layout as `params`.
    velocity: Vec<f64>,
    degenerate_scores: AtomicUsize,
}

impl Clone for EmbedModel {
    fn clone(&self) -> Self {
        EmbedModel {
            arch: self.arch.clone(),
            params: self.params.clone(),
            layout: self.layout.clone(),
            velocity: self.velocity.clone(),
            degenerate_scores: AtomicUsize::new(self.degenerate_scores.load(Ordering::Relaxed)),
        }
    }
}

impl PartialEq for EmbedModel {
    fn eq(&self, other: &Self) -> bool {
        self.arch == other.arch && self.params == other.params
    }
}

/// Activations kept from a forward pass for backpropagation.
pub(crate) struct ForwardCache {
    rows: usize,
    inputs: Vec<Vec<f64>>,
    concat: Vec<f64>,
    /// Output of every dense layer after activation; the last is `u`.
    acts: Vec<Vec<f64>>,
}

impl ForwardCache {
    pub(crate) fn output(&self) -> &[f64] {
        self.acts.last().expect("depth >= 1")
    }
}

impl EmbedModel {
    /// Fresh model with weights and biases drawn from
    /// `uniform(-1/sqrt(fan_in), 1/sqrt(fan_in))`.
    pub fn new(arch: Architecture, seed: u64) -> Result<Self> {
        arch.validate()?;
        let mut params = Params::from_shapes(&arch.shapes());
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let specs = params.specs().to_vec();
        for (t, spec) in specs.iter().enumerate() {
            // Biases share the fan-in of their weight matrix (the preceding spec).
            let fan_in = if spec.name.ends_with(".bias") {
                specs[t - 1].cols
            } else {
                spec.cols
            };
            let bound = 1.0 / (fan_in as f64).sqrt();
            for v in params.tensor_mut(t) {
                *v = rng.random_range(-bound..=bound);
            }
        }
        Self::from_params(arch, params)
    }

    pub fn from_params(arch: Architecture, params: Params) -> Result<Self> {
        arch.validate()?;
        let expected = Params::from_shapes(&arch.shapes());
        if expected.specs() != params.specs() {
            return Err(Error::Format("parameter layout does not match architecture".into()));
        }
        if params.data().iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("model parameters".into()));
        }
        let layout = Layout::new(&arch, &params);
        let velocity = params.zeros_like();
        Ok(EmbedModel {
            arch,
            params,
            layout,
            velocity,
            degenerate_scores: AtomicUsize::new(0),
        })
    }

    pub fn architecture(&self) -> &Architecture {
        &self.arch
    }

    pub fn params(&self) -> &Params {
        &self.params
    }

    /// Raw parameter access for finite-difference checks.
    pub fn params_mut(&mut self) -> &mut Params {
        &mut self.params
    }

    pub fn velocity(&self) -> &[f64] {
        &self.velocity
    }

    pub(crate) fn set_velocity(&mut self, v: Vec<f64>) -> Result<()> {
        if v.len() != self.params.len() {
            return Err(Error::DimensionMismatch {
                expected: self.params.len(),
                actual: v.len(),
            });
        }
        self.velocity = v;
        Ok(())
    }

    /// Momentum SGD: `v = momentum * v + grad; p -= lr * v`.
    pub(crate) fn sgd_step(&mut self, grad: &[f64], lr: f64, momentum: f64) {
        for ((p, v), g) in self.params.data_mut().iter_mut().zip(&mut self.velocity).zip(grad) {
            *v = momentum * *v + g;
            *p -= lr * *v;
        }
    }

    pub fn embed_dim(&self) -> usize {
        self.arch.embed_dim
    }

    /// Number of zero-norm projections met by [`edge_score`](Self::edge_score).
    pub fn degenerate_score_count(&self) -> usize {
        self.degenerate_scores.load(Ordering::Relaxed)
    }

    fn check_blocks(&self, blocks: &[&[f64]]) -> Result<()> {
        if blocks.len() != self.arch.block_dims.len() {
            return Err(Error::DimensionMismatch {
                expected: self.arch.block_dims.len(),
                actual: blocks.len(),
            });
        }
        for (b, &dim) in blocks.iter().zip(&self.arch.block_dims) {
            if b.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    actual: b.len(),
                });
            }
        }
        Ok(())
    }

    pub(crate) fn check_table(&self, f: &FeatureTable) -> Result<()> {
        let dims = f.block_dims();
        if dims != self.arch.block_dims {
            return Err(Error::invalid(format!(
                "feature blocks {dims:?} do not match model blocks {:?}",
                self.arch.block_dims
            )));
        }
        Ok(())
    }

    /// Gathers block inputs for `nodes` from a feature table.
    pub(crate) fn gather(&self, f: &FeatureTable, nodes: &[usize]) -> Vec<Vec<f64>> {
        f.blocks()
            .iter()
            .map(|b| {
                let mut v = Vec::with_capacity(nodes.len() * b.dim());
                for &n in nodes {
                    v.extend_from_slice(b.row(n));
                }
                v
            })
            .collect()
    }

    pub(crate) fn forward(&self, inputs: Vec<Vec<f64>>, rows: usize) -> ForwardCache {
        let w = self.arch.block_width;
        let nb = self.arch.block_dims.len();
        let mut concat = vec![0.0; rows * w * nb];
        for (b, (&(wt, bt), x)) in self.layout.blocks.iter().zip(&inputs).enumerate() {
            let dim = self.arch.block_dims[b];
            let h = affine(x, rows, dim, self.params.tensor(wt), Some(self.params.tensor(bt)), w);
            for r in 0..rows {
                concat[r * w * nb + b * w..r * w * nb + (b + 1) * w]
                    .copy_from_slice(&h[r * w..(r + 1) * w]);
            }
        }
        let mut acts: Vec<Vec<f64>> = Vec::with_capacity(self.arch.depth);
        let mut inp_dim = w * nb;
        for &(wt, bt) in &self.layout.dense {
            let x = acts.last().unwrap_or(&concat);
            let mut z = affine(
                x,
                rows,
                inp_dim,
                self.params.tensor(wt),
                Some(self.params.tensor(bt)),
                self.arch.embed_dim,
            );
            if self.arch.activation == Activation::Tanh {
                z.iter_mut().for_each(|v| *v = v.tanh());
            }
            acts.push(z);
            inp_dim = self.arch.embed_dim;
        }
        ForwardCache {
            rows,
            inputs,
            concat,
            acts,
        }
    }

    /// Accumulates parameter gradients for `d loss / d u` into `grad`.
    pub(crate) fn backward(&self, cache: &ForwardCache, d_out: &[f64], grad: &mut [f64]) {
        let rows = cache.rows;
        let d = self.arch.embed_dim;
        let w = self.arch.block_width;
        let nb = self.arch.block_dims.len();
        let specs = self.params.specs();
        let mut delta = d_out.to_vec();
        for l in (0..self.arch.depth).rev() {
            let (wt, bt) = self.layout.dense[l];
            if self.arch.activation == Activation::Tanh {
                for (g, a) in delta.iter_mut().zip(&cache.acts[l]) {
                    *g *= 1.0 - a * a;
                }
            }
            let (x, inp_dim) = if l == 0 {
                (&cache.concat, w * nb)
            } else {
                (&cache.acts[l - 1], d)
            };
            let (dw, db) = split_two(grad, specs[wt].range(), specs[bt].range());
            delta = affine_backward(x, rows, inp_dim, self.params.tensor(wt), d, &delta, dw, Some(db));
        }
        for (b, &(wt, bt)) in self.layout.blocks.iter().enumerate() {
            let dim = self.arch.block_dims[b];
            let mut dh = vec![0.0; rows * w];
            for r in 0..rows {
                dh[r * w..(r + 1) * w]
                    .copy_from_slice(&delta[r * w * nb + b * w..r * w * nb + (b + 1) * w]);
            }
            let (dw, db) = split_two(grad, specs[wt].range(), specs[bt].range());
            affine_backward(&cache.inputs[b], rows, dim, self.params.tensor(wt), w, &dh, dw, Some(db));
        }
    }

    /// Embedding of one node from its feature blocks. Needs no graph.
    pub fn user_repr(&self, blocks: &[&[f64]]) -> Result<Vec<f64>> {
        self.check_blocks(blocks)?;
        let inputs = blocks.iter().map(|b| b.to_vec()).collect();
        Ok(self.forward(inputs, 1).acts.pop().expect("depth >= 1"))
    }

    pub(crate) fn projection_tensor(&self, etype: EdgeType, side: EdgeSide) -> Result<usize> {
        let &(src, dst) = self
            .layout
            .proj
            .get(&etype)
            .ok_or_else(|| Error::invalid(format!("model has no projection for edge type {etype}")))?;
        Ok(match side {
            EdgeSide::Source => src,
            EdgeSide::Target => dst,
        })
    }

    /// `u W^T` for the projection of `etype` on the given side.
    pub fn project(&self, u: &[f64], etype: EdgeType, side: EdgeSide) -> Result<Vec<f64>> {
        let d = self.arch.embed_dim;
        if !u.len().is_multiple_of(d) {
            return Err(Error::DimensionMismatch {
                expected: d,
                actual: u.len(),
            });
        }
        let t = self.projection_tensor(etype, side)?;
        Ok(affine(u, u.len() / d, d, self.params.tensor(t), None, d))
    }

    /// Cosine similarity of the projected embeddings of an `etype` edge.
    ///
    /// A zero-norm projection scores 0 and bumps
    /// [`degenerate_score_count`](Self::degenerate_score_count).
    pub fn edge_score(&self, u_i: &[f64], u_j: &[f64], etype: EdgeType, role: DirectionRole) -> Result<f64> {
        let d = self.arch.embed_dim;
        for u in [u_i, u_j] {
            if u.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    actual: u.len(),
                });
            }
        }
        let (src, dst) = match role {
            DirectionRole::Forward => (u_i, u_j),
            DirectionRole::Reverse => (u_j, u_i),
        };
        let a = self.project(src, etype, EdgeSide::Source)?;
        let b = self.project(dst, etype, EdgeSide::Target)?;
        Ok(cosine(&a, &b).unwrap_or_else(|| {
            self.degenerate_scores.fetch_add(1, Ordering::Relaxed);
            0.0
        }))
    }

    /// Embeds every row of `f`. Rows without features come back as zeros
    /// with `missing` set.
    pub fn infer_all(&self, f: &FeatureTable) -> Result<Embeddings> {
        self.check_table(f)?;
        let d = self.arch.embed_dim;
        let n = f.len();
        let mut data = vec![0.0; n * d];
        let nodes: Vec<usize> = (0..n).filter(|&i| f.is_present(i)).collect();
        for chunk in nodes.chunks(512) {
            let cache = self.forward(self.gather(f, chunk), chunk.len());
            for (k, &node) in chunk.iter().enumerate() {
                data[node * d..(node + 1) * d].copy_from_slice(&cache.output()[k * d..(k + 1) * d]);
            }
        }
        Ok(Embeddings {
            ids: f.ids().to_vec(),
            dim: d,
            data,
            missing: (0..n).map(|i| !f.is_present(i)).collect(),
        })
    }
}

fn split_two(
    buf: &mut [f64],
    a: std::ops::Range<usize>,
    b: std::ops::Range<usize>,
) -> (&mut [f64], &mut [f64]) {
    // Bias always follows its weight directly.
    debug_assert_eq!(a.end, b.start);
    let (left, right) = buf.split_at_mut(b.start);
    (&mut left[a], &mut right[..b.len()])
}

/// Row-major `N x d` embedding matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Embeddings {
    pub ids: Vec<String>,
    pub dim: usize,
    pub data: Vec<f64>,
    pub missing: Vec<bool>,
}

impl Embeddings {
    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn to_matrix(&self) -> Result<EmbeddingMatrix> {
        EmbeddingMatrix::new(self.ids.clone(), self.dim, self.data.iter().map(|&v| v as f32).collect())
    }

    /// Rows taken from any id-indexed feature table, for baselines.
    pub fn from_features(f: &FeatureTable) -> Self {
        let dim = f.width();
        let mut data = Vec::with_capacity(f.len() * dim);
        for i in 0..f.len() {
            data.extend(f.concat_row(i));
        }
        Embeddings {
            ids: f.ids().to_vec(),
            dim,
            data,
            missing: (0..f.len()).map(|i| !f.is_present(i)).collect(),
        }
    }
}
