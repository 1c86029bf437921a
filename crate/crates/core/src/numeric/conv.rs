//! Causal dilated 1-D convolution and its exact adjoint.
//!
//! The forward map is `output[t] = Σ_j kernel[j] · input[t − (k_w−1−j)·d]`
//! with out-of-range samples treated as zero (causal left-padding), so the
//! last kernel tap reads the current sample and earlier taps read strictly
//! older ones. Output length equals input length and `output[t]` never
//! depends on `input[t']` for `t' > t`.

use crate::error::{Error, Result};

/// Applies a causal dilated convolution, returning a sequence of the same
/// length as `input`.
pub fn causal_dilated_conv(input: &[f64], kernel: &[f64], dilation: usize) -> Result<Vec<f64>> {
    validate(input, kernel, dilation)?;
    let k_w = kernel.len();
    let mut out = vec![0.0; input.len()];
    for (t, o) in out.iter_mut().enumerate() {
        let mut acc = 0.0;
        for (j, &w) in kernel.iter().enumerate() {
            let reach = (k_w - 1 - j) * dilation;
            if reach <= t {
                acc += w * input[t - reach];
            }
        }
        *o = acc;
    }
    Ok(out)
}

/// Exact adjoint of [`causal_dilated_conv`]: given the upstream gradient
/// with respect to the output, returns gradients with respect to the input
/// and the kernel.
pub fn causal_dilated_conv_backward(
    upstream: &[f64],
    input: &[f64],
    kernel: &[f64],
    dilation: usize,
) -> Result<(Vec<f64>, Vec<f64>)> {
    validate(input, kernel, dilation)?;
    if upstream.len() != input.len() {
        return Err(Error::InvalidArgument(format!(
            "upstream length {} does not match input length {}",
            upstream.len(),
            input.len()
        )));
    }
    let k_w = kernel.len();
    let mut grad_input = vec![0.0; input.len()];
    let mut grad_kernel = vec![0.0; k_w];
    for (t, &u) in upstream.iter().enumerate() {
        for (j, &w) in kernel.iter().enumerate() {
            let reach = (k_w - 1 - j) * dilation;
            if reach <= t {
                grad_kernel[j] += u * input[t - reach];
                grad_input[t - reach] += u * w;
            }
        }
    }
    Ok((grad_input, grad_kernel))
}

fn validate(input: &[f64], kernel: &[f64], dilation: usize) -> Result<()> {
    if input.is_empty() {
        return Err(Error::InvalidArgument("convolution input is empty".into()));
    }
    if kernel.is_empty() {
        return Err(Error::InvalidArgument("convolution kernel is empty".into()));
    }
    if dilation == 0 {
        return Err(Error::InvalidArgument("dilation must be >= 1".into()));
    }
    Ok(())
}
