//! Flat parameter storage and the few dense kernels the model needs.

use serde::{Deserialize, Serialize};

/// Shape and position of one tensor inside a flat parameter buffer.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TensorSpec {
    pub name: String,
    pub rows: usize,
    pub cols: usize,
    pub offset: usize,
}

impl TensorSpec {
    pub fn len(&self) -> usize {
        self.rows * self.cols
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn range(&self) -> std::ops::Range<usize> {
        self.offset..self.offset + self.len()
    }
}

/// All trainable values in one contiguous `Vec<f64>`, addressed by spec.
#[derive(Debug, Clone, PartialEq)]
pub struct Params {
    specs: Vec<TensorSpec>,
    data: Vec<f64>,
}

impl Params {
    pub fn from_shapes(shapes: &[(String, usize, usize)]) -> Self {
        let mut specs = Vec::with_capacity(shapes.len());
        let mut offset = 0;
        for (name, rows, cols) in shapes {
            specs.push(TensorSpec {
                name: name.clone(),
                rows: *rows,
                cols: *cols,
                offset,
            });
            offset += rows * cols;
        }
        Params {
            specs,
            data: vec![0.0; offset],
        }
    }

    pub(crate) fn from_parts(specs: Vec<TensorSpec>, data: Vec<f64>) -> Self {
        Params { specs, data }
    }

    pub fn specs(&self) -> &[TensorSpec] {
        &self.specs
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn tensor(&self, t: usize) -> &[f64] {
        &self.data[self.specs[t].range()]
    }

    pub fn tensor_mut(&mut self, t: usize) -> &mut [f64] {
        let r = self.specs[t].range();
        &mut self.data[r]
    }

    pub fn find(&self, name: &str) -> Option<usize> {
        self.specs.iter().position(|s| s.name == name)
    }

    pub fn zeros_like(&self) -> Vec<f64> {
        vec![0.0; self.data.len()]
    }
}

/// `out[r][o] = bias[o] + sum_k x[r][k] * w[o][k]` for `rows` rows.
pub fn affine(x: &[f64], rows: usize, inp: usize, w: &[f64], bias: Option<&[f64]>, outp: usize) -> Vec<f64> {
    debug_assert_eq!(x.len(), rows * inp);
    debug_assert_eq!(w.len(), outp * inp);
    let mut out = vec![0.0; rows * outp];
    for r in 0..rows {
        let xr = &x[r * inp..(r + 1) * inp];
        let orow = &mut out[r * outp..(r + 1) * outp];
        for (o, slot) in orow.iter_mut().enumerate() {
            let wr = &w[o * inp..(o + 1) * inp];
            let mut acc = bias.map_or(0.0, |b| b[o]);
            for k in 0..inp {
                acc += xr[k] * wr[k];
            }
            *slot = acc;
        }
    }
    out
}

/// Backward of [`affine`]: accumulates `dw += dout^T x`, `db += colsum(dout)`
/// and returns `dx = dout w`.
#[allow(clippy::too_many_arguments)]
pub fn affine_backward(
    x: &[f64],
    rows: usize,
    inp: usize,
    w: &[f64],
    outp: usize,
    dout: &[f64],
    dw: &mut [f64],
    db: Option<&mut [f64]>,
) -> Vec<f64> {
    let mut dx = vec![0.0; rows * inp];
    for r in 0..rows {
        let xr = &x[r * inp..(r + 1) * inp];
        let dor = &dout[r * outp..(r + 1) * outp];
        let dxr = &mut dx[r * inp..(r + 1) * inp];
        for o in 0..outp {
            let g = dor[o];
            if g == 0.0 {
                continue;
            }
            let wr = &w[o * inp..(o + 1) * inp];
            let dwr = &mut dw[o * inp..(o + 1) * inp];
            for k in 0..inp {
                dwr[k] += g * xr[k];
                dxr[k] += g * wr[k];
            }
        }
    }
    if let Some(db) = db {
        for r in 0..rows {
            for o in 0..outp {
                db[o] += dout[r * outp + o];
            }
        }
    }
    dx
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}
