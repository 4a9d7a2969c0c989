//! Small numeric kernels shared by the scoring heads and the loss.

use ndarray::{ArrayView1, ArrayViewMut1};

#[inline]
pub fn dot(a: ArrayView1<'_, f64>, b: ArrayView1<'_, f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

/// Numerically stable log(sum(exp(xs))). Empty input gives -inf.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    if max == f64::INFINITY {
        return f64::INFINITY;
    }
    max + xs.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}

/// Max-shifted softmax.
pub fn softmax(xs: &[f64]) -> Vec<f64> {
    let mut out = xs.to_vec();
    softmax_in_place(ndarray::ArrayViewMut1::from(out.as_mut_slice()));
    out
}

pub fn softmax_in_place(mut xs: ArrayViewMut1<'_, f64>) {
    if xs.is_empty() {
        return;
    }
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for x in xs.iter_mut() {
        *x = (*x - max).exp();
        sum += *x;
    }
    for x in xs.iter_mut() {
        *x /= sum;
    }
}

/// Given softmax output `p` and upstream gradient `dp`, the gradient with
/// respect to the softmax input.
pub fn softmax_backward(p: ArrayView1<'_, f64>, dp: ArrayView1<'_, f64>) -> ndarray::Array1<f64> {
    let inner = dot(p, dp);
    p.iter().zip(dp.iter()).map(|(pi, di)| pi * (di - inner)).collect()
}
