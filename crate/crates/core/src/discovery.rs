//! End-to-end causal discovery: joint training of all subnetworks under
//! the hybrid loss, then graph extraction from the learned attention.
//!
//! The training objective is the sum of every network's warmup-excluded
//! prediction MSE, plus `alpha_weight` times the differentiable acyclicity
//! penalty on the attention matrix, plus `l1_weight` times the L1 norm of
//! the shared aggregation weights (bias excluded). One Adam step per epoch
//! updates all parameters jointly; the shared kernel naturally accumulates
//! gradient from every network. Training is serial and fully determined by
//! the seed.
//!
//! Extraction softmaxes each attention column, rescales it to `[0, 1]` by
//! column min-max (a degenerate all-equal column yields no candidates),
//! keeps entries at or above the threshold, routes surviving off-diagonal
//! edges through greedy cycle breaking, and keeps self-loops only when
//! self-causation mode is on.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::constraints::{acyclicity_penalty, break_cycles, PenaltyConfig};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::graph::{AdjacencyMatrix, CausalEdge, CausalGraph};
use crate::model::{depth_for_hint, local_loss, local_loss_grad, Model, ModelConfig};
use crate::numeric::{AdamConfig, AdamState, Matrix};

/// Hyperparameters of a discovery run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DiscoveryConfig {
    /// Optimization epochs (one joint Adam step each).
    pub epochs: usize,
    /// Adam learning rate.
    pub lr: f64,
    /// Dilation of conv layer `l` is `dilation_base^l`.
    pub dilation_base: usize,
    /// Width of every convolution kernel.
    pub kernel_width: usize,
    /// Largest lag the network should be able to see; the layer count is
    /// chosen as the smallest one whose receptive field covers it.
    pub max_lag_hint: usize,
    /// Initial attention diagonal (off-diagonals start at 1).
    pub alpha_diag: f64,
    /// Weight of the acyclicity penalty in the loss.
    pub alpha_weight: f64,
    /// Weight of the shared-kernel L1 term in the loss.
    pub l1_weight: f64,
    /// Cycle-length discount inside the penalty.
    pub beta: f64,
    /// Trace truncation depth of the penalty; defaults to the variable
    /// count, which detects every simple cycle.
    pub penalty_depth: Option<usize>,
    /// Extraction threshold on min-max-rescaled softmax attention.
    pub threshold: f64,
    /// Keep self-loops in the output graph (and let the target's own
    /// delayed channel count as a detected cause).
    pub self_causation: bool,
    /// Seed fixing initialization (training itself is deterministic).
    pub seed: u64,
}

impl Default for DiscoveryConfig {
    fn default() -> Self {
        DiscoveryConfig {
            epochs: 1000,
            lr: 0.01,
            dilation_base: 4,
            kernel_width: 2,
            max_lag_hint: 8,
            alpha_diag: 0.0,
            alpha_weight: 0.1,
            l1_weight: 0.01,
            beta: 1.0,
            penalty_depth: None,
            threshold: 0.7,
            self_causation: false,
            seed: 0,
        }
    }
}

impl DiscoveryConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::Config("epochs must be >= 1".into()));
        }
        if !self.lr.is_finite() || self.lr <= 0.0 {
            return Err(Error::Config(format!("lr must be finite and > 0, got {}", self.lr)));
        }
        if self.dilation_base == 0 {
            return Err(Error::Config("dilation_base must be >= 1".into()));
        }
        if self.kernel_width == 0 {
            return Err(Error::Config("kernel_width must be >= 1".into()));
        }
        if self.max_lag_hint == 0 {
            return Err(Error::Config("max_lag_hint must be >= 1".into()));
        }
        if !self.alpha_diag.is_finite() {
            return Err(Error::Config(format!(
                "alpha_diag must be finite, got {}",
                self.alpha_diag
            )));
        }
        for (name, w) in [("alpha_weight", self.alpha_weight), ("l1_weight", self.l1_weight)] {
            if !w.is_finite() || w < 0.0 {
                return Err(Error::Config(format!("{name} must be finite and >= 0, got {w}")));
            }
        }
        if !self.beta.is_finite() || self.beta <= 0.0 {
            return Err(Error::Config(format!("beta must be finite and > 0, got {}", self.beta)));
        }
        if let Some(depth) = self.penalty_depth {
            if depth == 0 {
                return Err(Error::Config("penalty_depth must be >= 1".into()));
            }
        }
        if !(0.0..=1.0).contains(&self.threshold) {
            return Err(Error::Config(format!(
                "threshold must lie in [0, 1], got {}",
                self.threshold
            )));
        }
        Ok(())
    }

    /// The architecture this config induces for an `n`-variable dataset.
    pub fn model_config(&self, n: usize) -> Result<ModelConfig> {
        let layers = depth_for_hint(self.max_lag_hint, self.kernel_width, self.dilation_base)?;
        Ok(ModelConfig {
            n,
            layers,
            kernel_width: self.kernel_width,
            dilation_base: self.dilation_base,
            alpha_diag: self.alpha_diag,
        })
    }

    fn penalty_config(&self, n: usize) -> PenaltyConfig {
        PenaltyConfig {
            beta: self.beta,
            depth: self.penalty_depth.unwrap_or(n),
            alpha_weight: self.alpha_weight,
        }
    }
}

/// Loss components of one epoch; raw (unweighted) penalty and L1 values.
#[derive(Debug, Clone, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub total: f64,
    /// Warmup-excluded MSE of each network.
    pub mse: Vec<f64>,
    pub penalty: f64,
    pub l1: f64,
}

/// Full per-epoch history plus the final attention state.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingTrace {
    pub records: Vec<EpochRecord>,
    /// Loss weights needed to recombine record components into totals.
    pub alpha_weight: f64,
    pub l1_weight: f64,
    pub final_raw_attention: Matrix,
    pub final_softmax_attention: Matrix,
}

/// Everything a discovery run produces.
#[derive(Debug, Clone)]
pub struct DiscoveryOutcome {
    pub graph: CausalGraph,
    pub model: Model,
    pub trace: TrainingTrace,
}

/// Evaluates the full training loss and its gradient for every parameter.
/// Returns the component breakdown alongside the gradient vector.
pub fn global_loss(
    model: &Model,
    dataset: &Dataset,
    cfg: &DiscoveryConfig,
) -> Result<(EpochRecord, Vec<f64>)> {
    let n = dataset.n();
    let warmup = model.receptive_field();
    let mut grads = model.zero_grads();

    let mut mse = Vec::with_capacity(n);
    for k in 0..n {
        let (pred, cache) = model.forward(dataset, k)?;
        let actual = dataset.series(k);
        mse.push(local_loss(&pred, actual, warmup)?);
        let upstream = local_loss_grad(&pred, actual, warmup)?;
        model.backward(&cache, &upstream, &mut grads)?;
    }

    let (penalty, penalty_grad) = acyclicity_penalty(&model.raw_attention(), &cfg.penalty_config(n))?;
    let layout = *model.layout();
    for i in 0..n {
        for k in 0..n {
            grads[layout.attention(i, k)] += cfg.alpha_weight * penalty_grad.get(i, k);
        }
    }

    let mut l1 = 0.0;
    for i in 0..n {
        let w = model.params()[layout.shared_weight(i)];
        l1 += w.abs();
        if w != 0.0 {
            grads[layout.shared_weight(i)] += cfg.l1_weight * w.signum();
        }
    }

    let total = mse.iter().sum::<f64>() + cfg.alpha_weight * penalty + cfg.l1_weight * l1;
    if !total.is_finite() {
        return Err(Error::NonFinite {
            context: "global loss".into(),
        });
    }
    Ok((
        EpochRecord {
            epoch: 0,
            total,
            mse,
            penalty,
            l1,
        },
        grads,
    ))
}

/// Trains a fresh model on the dataset: `cfg.epochs` joint Adam steps over
/// the global loss. Returns the model and the per-epoch trace. Divergence
/// (non-finite loss or gradient) aborts with the offending epoch.
pub fn train(dataset: &Dataset, cfg: &DiscoveryConfig) -> Result<(Model, TrainingTrace)> {
    cfg.validate()?;
    let n = dataset.n();
    if n < 2 {
        return Err(Error::InvalidArgument(
            "discovery needs at least 2 variables".into(),
        ));
    }
    let model_cfg = cfg.model_config(n)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut model = Model::init(model_cfg, &mut rng)?;
    let rf = model.receptive_field();
    if dataset.len() < rf {
        return Err(Error::Config(format!(
            "series length {} is shorter than the receptive field {}",
            dataset.len(),
            rf
        )));
    }

    let adam_cfg = AdamConfig {
        lr: cfg.lr,
        ..AdamConfig::default()
    };
    let mut adam = AdamState::new(model.params().len());
    let layout = *model.layout();
    let mut records = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        let (mut record, grads) = global_loss(&model, dataset, cfg).map_err(|e| match e {
            Error::NonFinite { context } => Error::Diverged { epoch, context },
            other => other,
        })?;
        record.epoch = epoch;
        records.push(record);
        adam.step(&adam_cfg, model.params_mut(), &grads, |i| layout.describe(i))
            .map_err(|e| match e {
                Error::NonFinite { context } => Error::Diverged { epoch, context },
                other => other,
            })?;
    }

    let trace = TrainingTrace {
        records,
        alpha_weight: cfg.alpha_weight,
        l1_weight: cfg.l1_weight,
        final_raw_attention: model.raw_attention(),
        final_softmax_attention: model.softmax_attention(),
    };
    Ok((model, trace))
}

/// Per-column candidate scores: softmax attention rescaled to `[0, 1]` by
/// column min-max. A degenerate column (max − min ≤ 1e−9) rescales to all
/// zeros, i.e. produces no candidates.
fn rescaled_scores(softmax_attention: &Matrix) -> Matrix {
    let n = softmax_attention.n();
    let mut scores = Matrix::zeros(n);
    for k in 0..n {
        let col: Vec<f64> = (0..n).map(|i| softmax_attention.get(i, k)).collect();
        let min = col.iter().cloned().fold(f64::INFINITY, f64::min);
        let max = col.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let span = max - min;
        if span > 1e-9 {
            for i in 0..n {
                scores.set(i, k, (col[i] - min) / span);
            }
        }
    }
    scores
}

/// Reads the causal graph out of a trained model: threshold the rescaled
/// attention scores, break any directed cycles among the survivors
/// (removing the weakest edge of each cycle), and keep self-loops only in
/// self-causation mode. Edge weights carry the softmax attention score.
pub fn extract_graph(model: &Model, cfg: &DiscoveryConfig) -> CausalGraph {
    let softmax_attention = model.softmax_attention();
    let n = softmax_attention.n();
    let scores = rescaled_scores(&softmax_attention);

    let mut candidates = AdjacencyMatrix::new(n);
    let mut self_loops = Vec::new();
    for k in 0..n {
        for i in 0..n {
            if scores.get(i, k) < cfg.threshold {
                continue;
            }
            if i == k {
                if cfg.self_causation {
                    self_loops.push(k);
                }
            } else {
                candidates.set(i, k, true);
            }
        }
    }

    // Rescaled scores saturate at 1.0 for every column maximum, so they
    // cannot rank edges across columns; cycle breaking compares the raw
    // softmax scores instead.
    let dag = break_cycles(&softmax_attention, &candidates);
    let mut edges: Vec<CausalEdge> = dag
        .edges()
        .map(|(i, k)| CausalEdge {
            cause: i,
            effect: k,
            lag: None,
            weight: Some(softmax_attention.get(i, k)),
        })
        .collect();
    for k in self_loops {
        edges.push(CausalEdge {
            cause: k,
            effect: k,
            lag: None,
            weight: Some(softmax_attention.get(k, k)),
        });
    }
    edges.sort_by_key(|e| (e.cause, e.effect));
    CausalGraph::new(n, edges).expect("extraction produces valid edges by construction")
}

/// Full pipeline: train, then extract. The output graph is a DAG whenever
/// self-causation is disabled.
pub fn discover(dataset: &Dataset, cfg: &DiscoveryConfig) -> Result<DiscoveryOutcome> {
    let (model, trace) = train(dataset, cfg)?;
    let graph = extract_graph(&model, cfg);
    Ok(DiscoveryOutcome { graph, model, trace })
}
