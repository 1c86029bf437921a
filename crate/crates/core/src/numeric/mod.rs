//! Minimal differentiable numeric layer.
//!
//! Everything the trainer needs and nothing more: causal dilated 1-D
//! convolution with exact adjoints, a small square-matrix type with the
//! trace-of-powers series and its gradient, a bias-corrected Adam
//! optimizer, and a numerically stable softmax pair. All arithmetic is
//! `f64`; all functions are pure over caller-owned buffers.

pub mod adam;
pub mod conv;
pub mod matrix;

pub use adam::{AdamConfig, AdamState};
pub use conv::{causal_dilated_conv, causal_dilated_conv_backward};
pub use matrix::{trace_power_series, Matrix};

/// Numerically stable softmax: shifts by the maximum before exponentiating.
pub fn softmax(raw: &[f64]) -> Vec<f64> {
    let max = raw.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = raw.iter().map(|&v| (v - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.iter().map(|&e| e / sum).collect()
}

/// Backward pass of [`softmax`]: given the forward output `s` and the
/// upstream gradient `g` with respect to `s`, accumulates the gradient with
/// respect to the raw inputs into `out` (adding, not overwriting).
///
/// Uses `d raw_p = s_p · (g_p − Σ_i g_i·s_i)`.
pub fn softmax_backward_accumulate(s: &[f64], g: &[f64], out: &mut [f64]) {
    debug_assert_eq!(s.len(), g.len());
    debug_assert_eq!(s.len(), out.len());
    let inner: f64 = g.iter().zip(s).map(|(gi, si)| gi * si).sum();
    for p in 0..s.len() {
        out[p] += s[p] * (g[p] - inner);
    }
}
