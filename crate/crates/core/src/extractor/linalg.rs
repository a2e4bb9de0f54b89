//! Dense row-major kernels used by the encoder's forward and backward passes.

use alloc::vec;
use alloc::vec::Vec;

/// `a (m x k) * b (k x n) + bias`, bias broadcast over rows.
pub(crate) fn affine(a: &[f64], b: &[f64], bias: &[f64], m: usize, k: usize, n: usize) -> Vec<f64> {
    let mut out = vec![0.0; m * n];
    for i in 0..m {
        let row = &mut out[i * n..(i + 1) * n];
        row.copy_from_slice(bias);
        for p in 0..k {
            let av = a[i * k + p];
            for (o, bv) in row.iter_mut().zip(&b[p * n..(p + 1) * n]) {
                *o += av * bv;
            }
        }
    }
    out
}

/// Backward of `y = x w + bias` for `x (m x k)`, `w (k x n)`:
/// accumulates `dw += x^T dy`, `dbias += colsum(dy)` and returns `dx = dy w^T`.
pub(crate) fn affine_backward(
    x: &[f64],
    w: &[f64],
    dy: &[f64],
    m: usize,
    k: usize,
    n: usize,
    dw: &mut [f64],
    dbias: &mut [f64],
) -> Vec<f64> {
    let mut dx = vec![0.0; m * k];
    for i in 0..m {
        let dyr = &dy[i * n..(i + 1) * n];
        for (db, g) in dbias.iter_mut().zip(dyr) {
            *db += g;
        }
        for p in 0..k {
            let xv = x[i * k + p];
            let wr = &w[p * n..(p + 1) * n];
            let dwr = &mut dw[p * n..(p + 1) * n];
            let mut acc = 0.0;
            for j in 0..n {
                dwr[j] += xv * dyr[j];
                acc += dyr[j] * wr[j];
            }
            dx[i * k + p] = acc;
        }
    }
    dx
}

pub(crate) const LN_EPS: f64 = 1e-5;

pub(crate) struct LayerNormCache {
    pub(crate) xhat: Vec<f64>,
    pub(crate) inv_std: Vec<f64>,
}

/// Row-wise layer normalization with gain and bias.
pub(crate) fn layer_norm(
    x: &[f64],
    gain: &[f64],
    bias: &[f64],
    rows: usize,
    cols: usize,
) -> (Vec<f64>, LayerNormCache) {
    let mut out = vec![0.0; rows * cols];
    let mut xhat = vec![0.0; rows * cols];
    let mut inv_std = vec![0.0; rows];
    for r in 0..rows {
        let row = &x[r * cols..(r + 1) * cols];
        let mean = row.iter().sum::<f64>() / cols as f64;
        let var = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / cols as f64;
        let is = 1.0 / libm::sqrt(var + LN_EPS);
        inv_std[r] = is;
        for c in 0..cols {
            let xh = (row[c] - mean) * is;
            xhat[r * cols + c] = xh;
            out[r * cols + c] = xh * gain[c] + bias[c];
        }
    }
    (out, LayerNormCache { xhat, inv_std })
}

pub(crate) fn layer_norm_backward(
    cache: &LayerNormCache,
    gain: &[f64],
    dy: &[f64],
    rows: usize,
    cols: usize,
    dgain: &mut [f64],
    dbias: &mut [f64],
) -> Vec<f64> {
    let mut dx = vec![0.0; rows * cols];
    let nf = cols as f64;
    for r in 0..rows {
        let xh = &cache.xhat[r * cols..(r + 1) * cols];
        let g = &dy[r * cols..(r + 1) * cols];
        let mut sum_d = 0.0;
        let mut sum_dx = 0.0;
        for c in 0..cols {
            dgain[c] += g[c] * xh[c];
            dbias[c] += g[c];
            let d = g[c] * gain[c];
            sum_d += d;
            sum_dx += d * xh[c];
        }
        let is = cache.inv_std[r];
        for c in 0..cols {
            let d = g[c] * gain[c];
            dx[r * cols + c] = is / nf * (nf * d - sum_d - xh[c] * sum_dx);
        }
    }
    dx
}

const GELU_C: f64 = 0.797_884_560_802_865_4; // sqrt(2 / pi)

/// tanh approximation of GELU.
pub(crate) fn gelu(x: f64) -> f64 {
    0.5 * x * (1.0 + libm::tanh(GELU_C * (x + 0.044715 * x * x * x)))
}

pub(crate) fn gelu_grad(x: f64) -> f64 {
    let t = libm::tanh(GELU_C * (x + 0.044715 * x * x * x));
    0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * GELU_C * (1.0 + 3.0 * 0.044715 * x * x)
}

/// In-place numerically stable softmax.
pub(crate) fn softmax_in_place(v: &mut [f64]) {
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for x in v.iter_mut() {
        *x = libm::exp(*x - max);
        sum += *x;
    }
    for x in v.iter_mut() {
        *x /= sum;
    }
}

/// Sinusoidal position encoding for position `pos`, added to `row`.
pub(crate) fn add_position(row: &mut [f64], pos: usize) {
    let h = row.len();
    for i in 0..h / 2 {
        let freq = libm::pow(10_000.0, -2.0 * i as f64 / h as f64);
        let angle = pos as f64 * freq;
        row[2 * i] += libm::sin(angle);
        row[2 * i + 1] += libm::cos(angle);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fd<F: Fn(f64) -> f64>(f: F, x: f64) -> f64 {
        let e = 1e-6;
        (f(x + e) - f(x - e)) / (2.0 * e)
    }

    #[test]
    fn gelu_derivative_matches_finite_difference() {
        for x in [-3.0, -0.7, 0.0, 0.4, 2.5] {
            assert!((gelu_grad(x) - fd(gelu, x)).abs() < 1e-8, "x = {x}");
        }
    }

    #[test]
    fn affine_small() {
        // [1 2] * [[1 0],[0 1]] + [1 1]
        let y = affine(&[1.0, 2.0], &[1.0, 0.0, 0.0, 1.0], &[1.0, 1.0], 1, 2, 2);
        assert_eq!(y, vec![2.0, 3.0]);
    }

    #[test]
    fn layer_norm_rows_are_standardized() {
        let x = [1.0, 2.0, 3.0, 4.0, -1.0, 0.0, 5.0, 8.0];
        let (y, _) = layer_norm(&x, &[1.0; 4], &[0.0; 4], 2, 4);
        for r in 0..2 {
            let row = &y[r * 4..r * 4 + 4];
            let mean: f64 = row.iter().sum::<f64>() / 4.0;
            let var: f64 = row.iter().map(|v| v * v).sum::<f64>() / 4.0;
            assert!(mean.abs() < 1e-12);
            assert!((var - 1.0).abs() < 1e-4);
        }
    }

    #[test]
    fn softmax_is_stable() {
        let mut v = [1e4, 0.0, -1e4];
        softmax_in_place(&mut v);
        assert_eq!(v, [1.0, 0.0, 0.0]);
    }
}
