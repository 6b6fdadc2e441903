//! Axis-by-axis application of dense 1D matrices to row-major tensors.

use rayon::prelude::*;

/// Dense row-major matrix acting along one tensor axis.
#[derive(Debug, Clone, PartialEq)]
pub struct AxisMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl AxisMatrix {
    pub fn from_fn(rows: usize, cols: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        AxisMatrix { rows, cols, data }
    }

    pub fn row_vector(v: Vec<f64>) -> Self {
        AxisMatrix {
            rows: 1,
            cols: v.len(),
            data: v,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }
}

const PAR_THRESHOLD: usize = 1 << 14;

/// Applies `m` along `axis` of a tensor with the given shape. The output has
/// `shape[axis]` replaced by `m.rows()`.
pub fn apply_axis(input: &[f64], shape: &[usize], axis: usize, m: &AxisMatrix) -> Vec<f64> {
    let len = shape[axis];
    assert_eq!(len, m.cols, "matrix width does not match axis length");
    let inner: usize = shape[axis + 1..].iter().product();
    let outer: usize = shape[..axis].iter().product();
    debug_assert_eq!(input.len(), outer * len * inner);
    let rows = m.rows;
    let mut out = vec![0.0; outer * rows * inner];
    let kernel = |(idx, chunk): (usize, &mut [f64])| {
        let o = idx / rows;
        let i = idx % rows;
        let block = &input[o * len * inner..(o + 1) * len * inner];
        let w = m.row(i);
        if inner == 1 {
            chunk[0] = w.iter().zip(block).map(|(a, b)| a * b).sum();
        } else {
            for (j, &wj) in w.iter().enumerate() {
                if wj == 0.0 {
                    continue;
                }
                let src = &block[j * inner..(j + 1) * inner];
                for (c, s) in chunk.iter_mut().zip(src) {
                    *c += wj * s;
                }
            }
        }
    };
    if out.len() * len >= PAR_THRESHOLD {
        out.par_chunks_mut(inner)
            .enumerate()
            .with_min_len((PAR_THRESHOLD / (len * inner)).max(1))
            .for_each(kernel);
    } else {
        out.chunks_mut(inner).enumerate().for_each(kernel);
    }
    out
}

/// Applies one matrix per listed axis, in order.
pub fn apply_axes(input: &[f64], shape: &[usize], ops: &[(usize, &AxisMatrix)]) -> Vec<f64> {
    let mut shape = shape.to_vec();
    let mut data = input.to_vec();
    for &(axis, m) in ops {
        data = apply_axis(&data, &shape, axis, m);
        shape[axis] = m.rows;
    }
    data
}

/// `out[b * v.len() + k] = base[b] * v[k]`.
pub fn outer_with(base: &[f64], v: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(base.len() * v.len());
    for &b in base {
        out.extend(v.iter().map(|&vk| b * vk));
    }
    out
}

/// `acc[b * v.len() + k] += base[b] * v[k]`.
pub fn add_outer(acc: &mut [f64], base: &[f64], v: &[f64]) {
    let m = v.len();
    debug_assert_eq!(acc.len(), base.len() * m);
    let body = |(chunk, &b): (&mut [f64], &f64)| {
        if b != 0.0 {
            for (c, &vk) in chunk.iter_mut().zip(v) {
                *c += b * vk;
            }
        }
    };
    if acc.len() >= PAR_THRESHOLD {
        acc.par_chunks_mut(m).zip(base.par_iter()).for_each(body);
    } else {
        acc.chunks_mut(m).zip(base.iter()).for_each(body);
    }
}
