//! Per-target prediction networks with attention gating.
//!
//! The model holds `n` small subnetworks, one per variable. Network `k`
//! predicts variable `k` from all `n` series: each input channel is scaled
//! by a softmax weight taken from column `k` of a learned attention matrix
//! (the target's own channel is additionally delayed one timestep so the
//! network cannot copy the current sample), passed through a per-channel
//! stack of causal dilated convolutions with ReLU between layers, and the
//! channel outputs are combined by a single aggregation kernel (`n`
//! weights + bias) shared by every network.
//!
//! All parameters live in one flat `Vec<f64>` addressed through
//! [`ParamLayout`], which keeps the optimizer, finite-difference checks,
//! and checkpointing trivial.

use std::ops::Range;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::io::atomic_write;
use crate::numeric::{
    causal_dilated_conv, causal_dilated_conv_backward, softmax, softmax_backward_accumulate,
    Matrix,
};

/// Architecture hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    /// Number of variables (and of subnetworks).
    pub n: usize,
    /// Convolution layers per channel stack.
    pub layers: usize,
    /// Kernel width of every convolution layer.
    pub kernel_width: usize,
    /// Dilation of layer `l` is `dilation_base^l`.
    pub dilation_base: usize,
    /// Initial value of diagonal attention entries (off-diagonals start at 1).
    pub alpha_diag: f64,
}

impl ModelConfig {
    /// Checks ranges; returns a configuration error naming the bad field.
    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::Config(format!("n must be >= 2, got {}", self.n)));
        }
        if self.layers == 0 {
            return Err(Error::Config("layers must be >= 1".into()));
        }
        if self.kernel_width == 0 {
            return Err(Error::Config("kernel_width must be >= 1".into()));
        }
        if self.dilation_base == 0 {
            return Err(Error::Config("dilation_base must be >= 1".into()));
        }
        if !self.alpha_diag.is_finite() {
            return Err(Error::Config(format!(
                "alpha_diag must be finite, got {}",
                self.alpha_diag
            )));
        }
        Ok(())
    }
}

/// Steps of history a stack can see: `1 + (k_w−1)·Σ_{l<L} d^l`.
pub fn receptive_field(layers: usize, kernel_width: usize, dilation_base: usize) -> usize {
    let mut span = 0usize;
    let mut dil = 1usize;
    for _ in 0..layers {
        span += (kernel_width - 1) * dil;
        dil *= dilation_base;
    }
    1 + span
}

/// Smallest layer count whose receptive field covers `max_lag_hint` steps.
pub fn depth_for_hint(max_lag_hint: usize, kernel_width: usize, dilation_base: usize) -> Result<usize> {
    if kernel_width < 2 && max_lag_hint > 1 {
        return Err(Error::Config(format!(
            "kernel_width {kernel_width} can never reach a lag hint of {max_lag_hint}"
        )));
    }
    let mut layers = 1;
    while receptive_field(layers, kernel_width, dilation_base) < max_lag_hint {
        layers += 1;
        if layers > 64 {
            return Err(Error::Config(format!(
                "no feasible depth reaches lag hint {max_lag_hint} (dilation_base {dilation_base})"
            )));
        }
    }
    Ok(layers)
}

/// Addressing scheme for the flat parameter vector.
///
/// Regions, in order: raw attention (`n²`, row-major, entry `(i, k)` is the
/// weight of `i` as a candidate cause of `k`), convolution kernels
/// (`n²·L·k_w`, ordered by target, channel, layer), shared aggregation
/// weights (`n`), shared bias (1).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ParamLayout {
    n: usize,
    layers: usize,
    kernel_width: usize,
}

impl ParamLayout {
    pub fn new(cfg: &ModelConfig) -> Self {
        ParamLayout {
            n: cfg.n,
            layers: cfg.layers,
            kernel_width: cfg.kernel_width,
        }
    }

    /// Total parameter count: `n² + n²·L·k_w + n + 1`.
    pub fn total(&self) -> usize {
        let n = self.n;
        n * n + n * n * self.layers * self.kernel_width + n + 1
    }

    /// Index of the raw attention entry for cause `i`, target `k`.
    pub fn attention(&self, i: usize, k: usize) -> usize {
        i * self.n + k
    }

    /// Slice range of the layer-`l` kernel in target `k`'s channel-`i` stack.
    pub fn kernel(&self, k: usize, i: usize, l: usize) -> Range<usize> {
        let base = self.n * self.n
            + ((k * self.n + i) * self.layers + l) * self.kernel_width;
        base..base + self.kernel_width
    }

    /// Index of shared aggregation weight for channel `i`.
    pub fn shared_weight(&self, i: usize) -> usize {
        self.n * self.n + self.n * self.n * self.layers * self.kernel_width + i
    }

    /// Index of the shared bias.
    pub fn shared_bias(&self) -> usize {
        self.shared_weight(self.n)
    }

    /// Human-readable name of parameter `idx`, for diagnostics.
    pub fn describe(&self, idx: usize) -> String {
        let n = self.n;
        let att = n * n;
        let kernels = att + n * n * self.layers * self.kernel_width;
        if idx < att {
            format!("attention[{}][{}]", idx / n, idx % n)
        } else if idx < kernels {
            let rel = idx - att;
            let j = rel % self.kernel_width;
            let rest = rel / self.kernel_width;
            let l = rest % self.layers;
            let rest = rest / self.layers;
            format!("kernel[target {}][channel {}][layer {}][{}]", rest / n, rest % n, l, j)
        } else if idx < kernels + n {
            format!("shared_weight[{}]", idx - kernels)
        } else {
            "shared_bias".to_string()
        }
    }
}

/// Intermediate values of one forward pass, kept for the backward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    target: usize,
    /// Softmax of attention column `target`.
    softmax: Vec<f64>,
    /// Per channel: the (possibly delayed) raw series before gating.
    bases: Vec<Vec<f64>>,
    /// Per channel, per layer: the input sequence fed to that conv layer.
    layer_inputs: Vec<Vec<Vec<f64>>>,
    /// Per channel, per layer: the conv output before any activation.
    pre_acts: Vec<Vec<Vec<f64>>>,
    /// Per channel: final stack output (after the last, linear layer).
    channel_outs: Vec<Vec<f64>>,
}

impl ForwardCache {
    /// Softmax attention weights used for the gate.
    pub fn softmax(&self) -> &[f64] {
        &self.softmax
    }
}

/// The full set of subnetworks over a flat parameter vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    cfg: ModelConfig,
    layout: ParamLayout,
    params: Vec<f64>,
}

/// On-disk checkpoint payload.
#[derive(Serialize, Deserialize)]
struct CheckpointFile {
    format_version: u32,
    config: ModelConfig,
    params: Vec<f64>,
}

const CHECKPOINT_VERSION: u32 = 1;

impl Model {
    /// Initializes a model: attention diagonal at `alpha_diag`, attention
    /// off-diagonals at 1, kernels uniform in (−0.05, 0.05), shared weights
    /// uniform in ±1/√n, bias 0. Draw order is fixed by the layout, so a
    /// seeded RNG yields a reproducible model.
    ///
    /// Kernels start near zero on purpose: early in training the attention
    /// gradient is proportional to the kernels, so small kernels keep the
    /// attention near its init until the stacks have organized enough for
    /// attention updates to reflect each channel's real predictive value.
    pub fn init(cfg: ModelConfig, rng: &mut impl Rng) -> Result<Self> {
        cfg.validate()?;
        let layout = ParamLayout::new(&cfg);
        let mut params = vec![0.0; layout.total()];
        for i in 0..cfg.n {
            for k in 0..cfg.n {
                params[layout.attention(i, k)] = if i == k { cfg.alpha_diag } else { 1.0 };
            }
        }
        for k in 0..cfg.n {
            for i in 0..cfg.n {
                for l in 0..cfg.layers {
                    for idx in layout.kernel(k, i, l) {
                        params[idx] = rng.gen_range(-0.05..0.05);
                    }
                }
            }
        }
        // Equal positive shared weights: a channel that starts behind a
        // near-zero or negative aggregation weight learns its kernels
        // slower and can lose the attention race on init luck alone, so
        // every channel starts with the same 1/√n gain (kernels carry the
        // randomness and any sign flips).
        let gain = ((cfg.n as f64).sqrt()).recip();
        for i in 0..cfg.n {
            params[layout.shared_weight(i)] = gain;
        }
        params[layout.shared_bias()] = 0.0;
        Ok(Model { cfg, layout, params })
    }

    /// Rebuilds a model from explicit parameters (checkpoint restore).
    pub fn from_params(cfg: ModelConfig, params: Vec<f64>) -> Result<Self> {
        cfg.validate()?;
        let layout = ParamLayout::new(&cfg);
        if params.len() != layout.total() {
            return Err(Error::InvalidArgument(format!(
                "expected {} parameters for this architecture, got {}",
                layout.total(),
                params.len()
            )));
        }
        if let Some(idx) = params.iter().position(|p| !p.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "non-finite parameter {}",
                layout.describe(idx)
            )));
        }
        Ok(Model { cfg, layout, params })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.cfg
    }

    pub fn layout(&self) -> &ParamLayout {
        &self.layout
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    /// A zeroed gradient buffer matching the parameter vector.
    pub fn zero_grads(&self) -> Vec<f64> {
        vec![0.0; self.params.len()]
    }

    /// Receptive field of each channel stack.
    pub fn receptive_field(&self) -> usize {
        receptive_field(self.cfg.layers, self.cfg.kernel_width, self.cfg.dilation_base)
    }

    /// Raw (pre-softmax) attention as a matrix; entry `(i, k)` scores `i`
    /// as a cause of `k`.
    pub fn raw_attention(&self) -> Matrix {
        let n = self.cfg.n;
        let mut m = Matrix::zeros(n);
        for i in 0..n {
            for k in 0..n {
                m.set(i, k, self.params[self.layout.attention(i, k)]);
            }
        }
        m
    }

    /// Column-wise softmax of the attention matrix; every column sums to 1.
    pub fn softmax_attention(&self) -> Matrix {
        let n = self.cfg.n;
        let mut m = Matrix::zeros(n);
        for k in 0..n {
            let col: Vec<f64> = (0..n)
                .map(|i| self.params[self.layout.attention(i, k)])
                .collect();
            let s = softmax(&col);
            for i in 0..n {
                m.set(i, k, s[i]);
            }
        }
        m
    }

    /// The gate inputs of network `k`: channel `i` is the raw series `x_i`
    /// (the target's own channel delayed one step) scaled by the softmax
    /// weight of attention column `k`.
    pub fn attention_gate(&self, dataset: &Dataset, k: usize) -> (Vec<Vec<f64>>, Vec<f64>) {
        let n = self.cfg.n;
        let t_len = dataset.len();
        let col: Vec<f64> = (0..n)
            .map(|i| self.params[self.layout.attention(i, k)])
            .collect();
        let s = softmax(&col);
        let mut gated = Vec::with_capacity(n);
        for i in 0..n {
            let mut channel = vec![0.0; t_len];
            if i == k {
                for t in 1..t_len {
                    channel[t] = s[i] * dataset.series(i)[t - 1];
                }
            } else {
                for t in 0..t_len {
                    channel[t] = s[i] * dataset.series(i)[t];
                }
            }
            gated.push(channel);
        }
        (gated, s)
    }

    /// Predicts variable `k` over the whole series, returning the
    /// prediction and the cached intermediates needed by [`Model::backward`].
    pub fn forward(&self, dataset: &Dataset, k: usize) -> Result<(Vec<f64>, ForwardCache)> {
        let n = self.cfg.n;
        if dataset.n() != n {
            return Err(Error::InvalidArgument(format!(
                "model expects {} variables, dataset has {}",
                n,
                dataset.n()
            )));
        }
        if k >= n {
            return Err(Error::InvalidArgument(format!("target {k} out of range")));
        }
        let rf = self.receptive_field();
        let t_len = dataset.len();
        if t_len < rf {
            return Err(Error::Config(format!(
                "series length {t_len} is shorter than the receptive field {rf}"
            )));
        }

        let (gated, s) = self.attention_gate(dataset, k);
        let mut bases = Vec::with_capacity(n);
        for i in 0..n {
            let mut base = vec![0.0; t_len];
            if i == k {
                base[1..t_len].copy_from_slice(&dataset.series(i)[..t_len - 1]);
            } else {
                base.copy_from_slice(dataset.series(i));
            }
            bases.push(base);
        }

        let mut layer_inputs = vec![Vec::with_capacity(self.cfg.layers); n];
        let mut pre_acts = vec![Vec::with_capacity(self.cfg.layers); n];
        let mut channel_outs = Vec::with_capacity(n);
        for (i, gated_channel) in gated.into_iter().enumerate() {
            let mut h = gated_channel;
            for l in 0..self.cfg.layers {
                let kernel = &self.params[self.layout.kernel(k, i, l)];
                let dilation = self.cfg.dilation_base.pow(l as u32);
                let z = causal_dilated_conv(&h, kernel, dilation)?;
                layer_inputs[i].push(h);
                pre_acts[i].push(z.clone());
                h = if l + 1 < self.cfg.layers {
                    z.into_iter().map(|v| v.max(0.0)).collect()
                } else {
                    z
                };
            }
            channel_outs.push(h);
        }

        let bias = self.params[self.layout.shared_bias()];
        let mut pred = vec![bias; t_len];
        for (i, out) in channel_outs.iter().enumerate() {
            let w = self.params[self.layout.shared_weight(i)];
            for t in 0..t_len {
                pred[t] += w * out[t];
            }
        }

        Ok((
            pred,
            ForwardCache {
                target: k,
                softmax: s,
                bases,
                layer_inputs,
                pre_acts,
                channel_outs,
            },
        ))
    }

    /// Accumulates `d loss / d params` into `grads`, given the gradient of
    /// the loss with respect to the prediction of network `cache.target`.
    pub fn backward(
        &self,
        cache: &ForwardCache,
        upstream: &[f64],
        grads: &mut [f64],
    ) -> Result<()> {
        if grads.len() != self.params.len() {
            return Err(Error::InvalidArgument(format!(
                "gradient buffer holds {}, model has {} parameters",
                grads.len(),
                self.params.len()
            )));
        }
        let t_len = cache.bases[0].len();
        if upstream.len() != t_len {
            return Err(Error::InvalidArgument(format!(
                "upstream length {} does not match series length {}",
                upstream.len(),
                t_len
            )));
        }
        let n = self.cfg.n;
        let k = cache.target;

        grads[self.layout.shared_bias()] += upstream.iter().sum::<f64>();

        let mut gate_grads = vec![0.0; n];
        for i in 0..n {
            let w = self.params[self.layout.shared_weight(i)];
            let out = &cache.channel_outs[i];
            grads[self.layout.shared_weight(i)] +=
                upstream.iter().zip(out).map(|(u, o)| u * o).sum::<f64>();

            // Walk the stack backwards; `g` is the gradient w.r.t. the
            // output of conv layer `l` (post-activation for l < L−1).
            let mut g: Vec<f64> = upstream.iter().map(|u| u * w).collect();
            for l in (0..self.cfg.layers).rev() {
                if l + 1 < self.cfg.layers {
                    for (gv, z) in g.iter_mut().zip(&cache.pre_acts[i][l]) {
                        if *z <= 0.0 {
                            *gv = 0.0;
                        }
                    }
                }
                let kernel = &self.params[self.layout.kernel(k, i, l)];
                let dilation = self.cfg.dilation_base.pow(l as u32);
                let (g_in, g_kernel) = causal_dilated_conv_backward(
                    &g,
                    &cache.layer_inputs[i][l],
                    kernel,
                    dilation,
                )?;
                for (slot, gk) in self.layout.kernel(k, i, l).zip(g_kernel) {
                    grads[slot] += gk;
                }
                g = g_in;
            }

            // g is now the gradient w.r.t. the gated channel s_i · base_i.
            gate_grads[i] = g.iter().zip(&cache.bases[i]).map(|(gv, b)| gv * b).sum();
        }

        let mut raw_col_grads = vec![0.0; n];
        softmax_backward_accumulate(&cache.softmax, &gate_grads, &mut raw_col_grads);
        for i in 0..n {
            grads[self.layout.attention(i, k)] += raw_col_grads[i];
        }
        Ok(())
    }

    /// Serializes the model (architecture + parameters) as JSON.
    pub fn to_json_string(&self) -> String {
        let file = CheckpointFile {
            format_version: CHECKPOINT_VERSION,
            config: self.cfg.clone(),
            params: self.params.clone(),
        };
        let mut text = serde_json::to_string_pretty(&file).expect("checkpoint serializes");
        text.push('\n');
        text
    }

    /// Restores a model from checkpoint JSON; `path` labels errors.
    pub fn from_json_str(text: &str, path: &Path) -> Result<Self> {
        let file: CheckpointFile = serde_json::from_str(text)
            .map_err(|e| Error::parse(path, e.line(), e.to_string()))?;
        if file.format_version != CHECKPOINT_VERSION {
            return Err(Error::parse(
                path,
                1,
                format!(
                    "unsupported checkpoint version {} (expected {})",
                    file.format_version, CHECKPOINT_VERSION
                ),
            ));
        }
        Model::from_params(file.config, file.params)
            .map_err(|e| Error::parse(path, 1, e.to_string()))
    }

    /// Writes a checkpoint file atomically.
    pub fn save(&self, path: &Path) -> Result<()> {
        atomic_write(path, self.to_json_string().as_bytes())
    }

    /// Reads a checkpoint file.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json_str(&text, path)
    }
}

/// Mean squared error over timesteps `warmup..`, the per-network fit loss.
///
/// The first `warmup` predictions see zero-padding rather than history, so
/// they are excluded from the mean.
pub fn local_loss(pred: &[f64], actual: &[f64], warmup: usize) -> Result<f64> {
    if pred.len() != actual.len() {
        return Err(Error::InvalidArgument(format!(
            "prediction length {} vs actual length {}",
            pred.len(),
            actual.len()
        )));
    }
    if warmup >= pred.len() {
        return Err(Error::InvalidArgument(format!(
            "warmup {} leaves no samples out of {}",
            warmup,
            pred.len()
        )));
    }
    let count = (pred.len() - warmup) as f64;
    let sum: f64 = pred[warmup..]
        .iter()
        .zip(&actual[warmup..])
        .map(|(p, a)| (p - a) * (p - a))
        .sum();
    Ok(sum / count)
}

/// Gradient of [`local_loss`] with respect to the prediction.
pub fn local_loss_grad(pred: &[f64], actual: &[f64], warmup: usize) -> Result<Vec<f64>> {
    if pred.len() != actual.len() || warmup >= pred.len() {
        // Reuse the forward validation for identical error messages.
        local_loss(pred, actual, warmup)?;
    }
    let count = (pred.len() - warmup) as f64;
    let mut g = vec![0.0; pred.len()];
    for t in warmup..pred.len() {
        g[t] = 2.0 * (pred[t] - actual[t]) / count;
    }
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn small_cfg(n: usize) -> ModelConfig {
        ModelConfig {
            n,
            layers: 2,
            kernel_width: 2,
            dilation_base: 2,
            alpha_diag: 0.0,
        }
    }

    fn random_dataset(n: usize, t_len: usize, seed: u64) -> Dataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let series = (0..n)
            .map(|_| (0..t_len).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .collect();
        Dataset::new((0..n).map(|i| format!("x{i}")).collect(), series).unwrap()
    }

    #[test]
    fn receptive_field_matches_direct_formula() {
        assert_eq!(receptive_field(1, 2, 4), 2);
        assert_eq!(receptive_field(2, 2, 4), 6);
        assert_eq!(receptive_field(3, 2, 4), 22);
        assert_eq!(receptive_field(2, 3, 2), 7, "1 + 2·(1+2)");
    }

    #[test]
    fn depth_for_hint_picks_smallest_sufficient_depth() {
        assert_eq!(depth_for_hint(2, 2, 4).unwrap(), 1);
        assert_eq!(depth_for_hint(6, 2, 4).unwrap(), 2);
        assert_eq!(depth_for_hint(7, 2, 4).unwrap(), 3);
        assert_eq!(depth_for_hint(22, 2, 4).unwrap(), 3);
        assert!(depth_for_hint(5, 1, 4).is_err(), "width-1 kernels reach nothing");
    }

    #[test]
    fn parameter_count_matches_architecture_arithmetic() {
        let cfg = ModelConfig {
            n: 5,
            layers: 3,
            kernel_width: 2,
            dilation_base: 4,
            alpha_diag: 0.0,
        };
        let layout = ParamLayout::new(&cfg);
        assert_eq!(layout.total(), 5 * 5 + 5 * (3 * 5 * 2) + (5 + 1));
    }

    #[test]
    fn layout_regions_are_disjoint_and_cover_everything() {
        let cfg = small_cfg(3);
        let layout = ParamLayout::new(&cfg);
        let mut seen = vec![false; layout.total()];
        let mut mark = |idx: usize| {
            assert!(!seen[idx], "index {idx} addressed twice");
            seen[idx] = true;
        };
        for i in 0..3 {
            for k in 0..3 {
                mark(layout.attention(i, k));
            }
        }
        for k in 0..3 {
            for i in 0..3 {
                for l in 0..cfg.layers {
                    for idx in layout.kernel(k, i, l) {
                        mark(idx);
                    }
                }
            }
        }
        for i in 0..3 {
            mark(layout.shared_weight(i));
        }
        mark(layout.shared_bias());
        assert!(seen.iter().all(|&s| s), "layout must cover every slot");
    }

    #[test]
    fn describe_names_each_region() {
        let cfg = small_cfg(3);
        let layout = ParamLayout::new(&cfg);
        assert_eq!(layout.describe(layout.attention(2, 1)), "attention[2][1]");
        assert_eq!(
            layout.describe(layout.kernel(1, 2, 0).start),
            "kernel[target 1][channel 2][layer 0][0]"
        );
        assert_eq!(layout.describe(layout.shared_weight(0)), "shared_weight[0]");
        assert_eq!(layout.describe(layout.shared_bias()), "shared_bias");
    }

    #[test]
    fn initialization_sets_attention_and_bias_exactly() {
        let cfg = ModelConfig {
            alpha_diag: 0.25,
            ..small_cfg(4)
        };
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let model = Model::init(cfg, &mut rng).unwrap();
        let layout = *model.layout();
        for i in 0..4 {
            for k in 0..4 {
                let expected = if i == k { 0.25 } else { 1.0 };
                assert_eq!(model.params()[layout.attention(i, k)], expected);
            }
        }
        assert_eq!(model.params()[layout.shared_bias()], 0.0);
    }

    #[test]
    fn gate_uses_uniform_weights_for_equal_columns() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut model = Model::init(small_cfg(3), &mut rng).unwrap();
        let layout = *model.layout();
        // Make column 1 all-equal.
        for i in 0..3 {
            model.params_mut()[layout.attention(i, 1)] = 1.0;
        }
        let ds = random_dataset(3, 8, 3);
        let (gated, s) = model.attention_gate(&ds, 1);
        for w in &s {
            assert!((w - 1.0 / 3.0).abs() < 1e-12, "uniform softmax expected");
        }
        // Non-target channels are plain scaled copies.
        for t in 0..8 {
            assert!((gated[0][t] - ds.series(0)[t] / 3.0).abs() < 1e-12);
        }
        // Own channel is delayed one step.
        assert_eq!(gated[1][0], 0.0);
        for t in 1..8 {
            assert!((gated[1][t] - ds.series(1)[t - 1] / 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn gate_softmax_matches_closed_form_example() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut model = Model::init(small_cfg(3), &mut rng).unwrap();
        let layout = *model.layout();
        let raw = [2.0, 0.0, 0.0];
        for i in 0..3 {
            model.params_mut()[layout.attention(i, 0)] = raw[i];
        }
        let ds = random_dataset(3, 8, 4);
        let (_, s) = model.attention_gate(&ds, 0);
        let e2 = 2.0f64.exp();
        assert!((s[0] - e2 / (e2 + 2.0)).abs() < 1e-12);
        assert!((s[1] - 1.0 / (e2 + 2.0)).abs() < 1e-12);
        assert!((s[2] - 1.0 / (e2 + 2.0)).abs() < 1e-12);
        let sum: f64 = s.iter().sum();
        assert!((sum - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_parameters_predict_zero() {
        let cfg = small_cfg(3);
        let layout = ParamLayout::new(&cfg);
        let model = Model::from_params(cfg, vec![0.0; layout.total()]).unwrap();
        let ds = random_dataset(3, 10, 5);
        let (pred, _) = model.forward(&ds, 0).unwrap();
        assert!(pred.iter().all(|&p| p == 0.0));
    }

    #[test]
    fn too_short_series_is_a_config_error_naming_both_lengths() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let model = Model::init(small_cfg(3), &mut rng).unwrap();
        let rf = model.receptive_field();
        let ds = random_dataset(3, rf - 1, 7);
        let err = model.forward(&ds, 0).unwrap_err();
        match err {
            Error::Config(msg) => {
                assert!(msg.contains(&rf.to_string()), "message should name RF: {msg}");
                assert!(
                    msg.contains(&(rf - 1).to_string()),
                    "message should name T: {msg}"
                );
            }
            other => panic!("expected config error, got {other}"),
        }
    }

    #[test]
    fn prediction_at_t_ignores_targets_current_sample() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let model = Model::init(small_cfg(3), &mut rng).unwrap();
        let ds = random_dataset(3, 12, 9);
        let (pred, _) = model.forward(&ds, 1).unwrap();

        let mut bumped_series: Vec<Vec<f64>> = ds.all_series().to_vec();
        let t_probe = 7;
        bumped_series[1][t_probe] += 10.0;
        let bumped = Dataset::new(ds.names().to_vec(), bumped_series).unwrap();
        let (pred2, _) = model.forward(&bumped, 1).unwrap();
        assert_eq!(
            pred[t_probe], pred2[t_probe],
            "own-channel delay must hide the current sample"
        );
        // But strictly later predictions may (and here do) change.
        assert!(
            pred[t_probe + 1] != pred2[t_probe + 1],
            "the sample must still matter one step later"
        );
    }

    #[test]
    fn channels_stay_isolated_until_aggregation() {
        // Zeroing the shared weight of channel i must make the prediction
        // invariant to variable i (for i != target): depthwise isolation.
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let mut model = Model::init(small_cfg(3), &mut rng).unwrap();
        let layout = *model.layout();
        model.params_mut()[layout.shared_weight(2)] = 0.0;
        let ds = random_dataset(3, 12, 11);
        let (pred, _) = model.forward(&ds, 0).unwrap();

        let mut changed: Vec<Vec<f64>> = ds.all_series().to_vec();
        for v in changed[2].iter_mut() {
            *v += 3.0;
        }
        let ds2 = Dataset::new(ds.names().to_vec(), changed).unwrap();
        let (pred2, _) = model.forward(&ds2, 0).unwrap();
        for t in 0..12 {
            assert_eq!(pred[t], pred2[t], "channel 2 must not leak at t={t}");
        }
    }

    #[test]
    fn local_loss_matches_hand_computed_values() {
        assert_eq!(local_loss(&[1.0, 2.0], &[1.0, 2.0], 0).unwrap(), 0.0);
        assert_eq!(local_loss(&[2.0, 3.0, 4.0], &[1.0, 2.0, 3.0], 0).unwrap(), 1.0);
        assert_eq!(local_loss(&[0.0, 0.0], &[1.0, 3.0], 0).unwrap(), 5.0);
        // Warmup drops the first samples from the mean.
        assert_eq!(local_loss(&[9.0, 1.0], &[0.0, 1.0], 1).unwrap(), 0.0);
        assert!(local_loss(&[1.0], &[1.0, 2.0], 0).is_err());
        assert!(local_loss(&[1.0, 2.0], &[1.0, 2.0], 2).is_err());
    }

    #[test]
    fn full_model_gradient_matches_finite_differences() {
        let cfg = small_cfg(3);
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let model = Model::init(cfg, &mut rng).unwrap();
        let ds = random_dataset(3, 14, 13);
        let warmup = model.receptive_field();

        let loss_of = |params: &[f64]| -> f64 {
            let m = Model::from_params(model.config().clone(), params.to_vec()).unwrap();
            let mut total = 0.0;
            for k in 0..3 {
                let (pred, _) = m.forward(&ds, k).unwrap();
                total += local_loss(&pred, ds.series(k), warmup).unwrap();
            }
            total
        };

        let mut grads = model.zero_grads();
        for k in 0..3 {
            let (pred, cache) = model.forward(&ds, k).unwrap();
            let upstream = local_loss_grad(&pred, ds.series(k), warmup).unwrap();
            model.backward(&cache, &upstream, &mut grads).unwrap();
        }

        let h = 1e-5;
        let mut fd = vec![0.0; grads.len()];
        let mut params = model.params().to_vec();
        for p in 0..params.len() {
            let orig = params[p];
            params[p] = orig + h;
            let plus = loss_of(&params);
            params[p] = orig - h;
            let minus = loss_of(&params);
            params[p] = orig;
            fd[p] = (plus - minus) / (2.0 * h);
        }
        let num: f64 = grads
            .iter()
            .zip(&fd)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        let den: f64 = fd.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-12);
        assert!(
            num / den < 1e-6,
            "analytic vs finite-difference gradient mismatch: rel {}",
            num / den
        );
    }

    #[test]
    fn checkpoint_round_trip_is_bit_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let model = Model::init(small_cfg(4), &mut rng).unwrap();
        let text = model.to_json_string();
        let back = Model::from_json_str(&text, Path::new("ckpt.json")).unwrap();
        assert_eq!(model.params().len(), back.params().len());
        for (a, b) in model.params().iter().zip(back.params()) {
            assert_eq!(a.to_bits(), b.to_bits(), "parameters must survive bit-exactly");
        }
        assert_eq!(text, back.to_json_string(), "write-read-write is stable");
    }

    #[test]
    fn checkpoint_rejects_wrong_version_and_shape() {
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        let model = Model::init(small_cfg(3), &mut rng).unwrap();
        let good = model.to_json_string();
        let bad_version = good.replace("\"format_version\": 1", "\"format_version\": 9");
        assert!(Model::from_json_str(&bad_version, Path::new("c.json")).is_err());

        let cfg = small_cfg(3);
        assert!(Model::from_params(cfg, vec![0.0; 5]).is_err());
    }
}
