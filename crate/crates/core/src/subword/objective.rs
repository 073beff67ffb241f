//! Negative-sampling objective for a single `(input, context)` pair.
//!
//! The hidden vector `h` is the mean of the input rows. With output vector
//! `u_p` for the observed context and `u_n` for each sampled negative, the
//! loss is
//!
//! ```text
//! L = -log σ(u_p·h) - Σ_n log σ(-u_n·h)
//! ```
//!
//! Everything here is in `f64` so it can be checked against finite
//! differences; the trainer applies the same update in `f32`.

pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn hidden(input_rows: &[Vec<f64>]) -> Vec<f64> {
    let dim = input_rows.first().map_or(0, Vec::len);
    let mut h = vec![0.0; dim];
    for row in input_rows {
        for (acc, v) in h.iter_mut().zip(row) {
            *acc += v;
        }
    }
    let n = input_rows.len() as f64;
    h.iter_mut().for_each(|v| *v /= n);
    h
}

pub fn loss(input_rows: &[Vec<f64>], positive: &[f64], negatives: &[Vec<f64>]) -> f64 {
    let h = hidden(input_rows);
    let mut l = -sigmoid(dot(positive, &h)).ln();
    for u in negatives {
        l -= sigmoid(-dot(u, &h)).ln();
    }
    l
}

#[derive(Clone, Debug, PartialEq)]
pub struct Gradients {
    /// dL/dh.
    pub hidden: Vec<f64>,
    /// dL/d(row) for every input row; identical for all rows.
    pub input_row: Vec<f64>,
    pub positive: Vec<f64>,
    pub negatives: Vec<Vec<f64>>,
}

/// Coefficient `σ(u·h) - label` shared by dL/du and the u-term of dL/dh.
pub fn residual(u: &[f64], h: &[f64], label: bool) -> f64 {
    sigmoid(dot(u, h)) - if label { 1.0 } else { 0.0 }
}

pub fn gradients(input_rows: &[Vec<f64>], positive: &[f64], negatives: &[Vec<f64>]) -> Gradients {
    let h = hidden(input_rows);
    let mut grad_h = vec![0.0; h.len()];

    let mut out_grad = |u: &[f64], label: bool| {
        let r = residual(u, &h, label);
        for (g, v) in grad_h.iter_mut().zip(u) {
            *g += r * v;
        }
        h.iter().map(|v| r * v).collect::<Vec<f64>>()
    };
    let positive_grad = out_grad(positive, true);
    let negative_grads = negatives.iter().map(|u| out_grad(u, false)).collect();

    let n = input_rows.len() as f64;
    let input_row = grad_h.iter().map(|g| g / n).collect();
    Gradients {
        hidden: grad_h,
        input_row,
        positive: positive_grad,
        negatives: negative_grads,
    }
}
