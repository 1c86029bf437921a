//! Synthetic benchmark generator with known ground-truth causal structure.
//!
//! The pipeline samples a random DAG with lagged, weighted edges, draws a
//! smooth spline series for every root variable, and propagates values in
//! topological order: each non-root is the weighted sum of its parents'
//! lagged samples plus Gaussian noise. A burn-in of `max_lag` extra steps
//! is generated and discarded so every retained sample has full history.
//! Everything is driven by one seed through fixed per-purpose substreams,
//! making output byte-deterministic.

pub mod spline;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::graph::{CausalEdge, CausalGraph};
pub use spline::NaturalCubicSpline;

/// Derives an independent stream seed from a base seed, so that the graph
/// structure, each root series, and each noise sequence get decorrelated
/// generators that never shift when another consumer draws more values.
pub fn derive_seed(base: u64, stream: u64) -> u64 {
    // splitmix64 finalizer over a stream-offset input.
    let mut z = base ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// One generated causal edge: `cause → effect` with a positive lag and a
/// nonzero linear weight.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GenEdge {
    pub cause: usize,
    pub effect: usize,
    pub lag: usize,
    pub weight: f64,
}

/// The sampled ground-truth structure behind a synthetic dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruthGraph {
    pub n: usize,
    pub edges: Vec<GenEdge>,
}

impl GroundTruthGraph {
    /// View as a general causal graph (lags and weights attached).
    pub fn graph(&self) -> CausalGraph {
        let edges = self
            .edges
            .iter()
            .map(|e| CausalEdge {
                cause: e.cause,
                effect: e.effect,
                lag: Some(e.lag),
                weight: Some(e.weight),
            })
            .collect();
        CausalGraph::new(self.n, edges).expect("generated edges are always valid")
    }

    /// Edges pointing into `effect`.
    pub fn parents_of(&self, effect: usize) -> impl Iterator<Item = &GenEdge> {
        self.edges.iter().filter(move |e| e.effect == effect)
    }
}

/// Generation parameters. `weight_min..weight_max` bounds the magnitude of
/// edge weights (sign is random); `control_points` defaults to
/// `max(4, t/10)` spline knots when unset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenConfig {
    /// Number of variables.
    pub n: usize,
    /// Number of causal edges.
    pub d: usize,
    /// Retained timesteps per variable.
    #[serde(rename = "t")]
    pub t_len: usize,
    /// Largest possible edge lag; each edge draws its lag from `1..=max_lag`.
    pub max_lag: usize,
    /// Standard deviation of the additive Gaussian noise on non-roots.
    pub noise_sigma: f64,
    /// Smallest edge-weight magnitude.
    pub weight_min: f64,
    /// Largest edge-weight magnitude.
    pub weight_max: f64,
    /// Spline knots per root series; default `max(4, t/10)`.
    pub control_points: Option<usize>,
    /// Master seed; fixes graph, roots, and noise.
    pub seed: u64,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            n: 4,
            d: 2,
            t_len: 40,
            max_lag: 2,
            noise_sigma: 0.01,
            weight_min: 0.5,
            weight_max: 1.5,
            control_points: None,
            seed: 0,
        }
    }
}

impl GenConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::Config(format!("n must be >= 2, got {}", self.n)));
        }
        let max_edges = self.n * (self.n - 1) / 2;
        if self.d > max_edges {
            return Err(Error::Config(format!(
                "d={} exceeds the {} forward pairs available for n={}",
                self.d, max_edges, self.n
            )));
        }
        if self.max_lag == 0 {
            return Err(Error::Config("max_lag must be >= 1".into()));
        }
        if self.t_len <= self.max_lag {
            return Err(Error::Config(format!(
                "t={} must exceed max_lag={}",
                self.t_len, self.max_lag
            )));
        }
        if !self.noise_sigma.is_finite() || self.noise_sigma < 0.0 {
            return Err(Error::Config(format!(
                "noise_sigma must be finite and >= 0, got {}",
                self.noise_sigma
            )));
        }
        if !self.weight_min.is_finite()
            || !self.weight_max.is_finite()
            || self.weight_min <= 0.0
            || self.weight_max < self.weight_min
        {
            return Err(Error::Config(format!(
                "weight range [{}, {}] must satisfy 0 < min <= max",
                self.weight_min, self.weight_max
            )));
        }
        if let Some(c) = self.control_points {
            if c < 2 {
                return Err(Error::Config(format!(
                    "control_points must be >= 2, got {c}"
                )));
            }
        }
        Ok(())
    }

    /// Spline knots per root series after applying the default rule.
    pub fn effective_control_points(&self) -> usize {
        self.control_points.unwrap_or_else(|| (self.t_len / 10).max(4))
    }
}

/// Samples a random lagged DAG: a uniform topological order, `d` distinct
/// order-respecting pairs, lags uniform in `1..=max_lag`, and weights with
/// magnitude uniform in the given range and random sign. Edges come back
/// sorted by `(cause, effect)`.
pub fn random_dag(
    n: usize,
    d: usize,
    max_lag: usize,
    weight_range: (f64, f64),
    rng: &mut impl Rng,
) -> Result<GroundTruthGraph> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!("n must be >= 2, got {n}")));
    }
    let max_edges = n * (n - 1) / 2;
    if d > max_edges {
        return Err(Error::InvalidArgument(format!(
            "cannot place {d} edges among {max_edges} forward pairs"
        )));
    }
    if max_lag == 0 {
        return Err(Error::InvalidArgument("max_lag must be >= 1".into()));
    }
    let (w_min, w_max) = weight_range;
    if w_min.is_nan() || w_max.is_nan() || w_min <= 0.0 || w_max < w_min {
        return Err(Error::InvalidArgument(format!(
            "weight range [{w_min}, {w_max}] must satisfy 0 < min <= max"
        )));
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);

    let mut pairs = Vec::with_capacity(max_edges);
    for p in 0..n {
        for q in p + 1..n {
            pairs.push((order[p], order[q]));
        }
    }
    let chosen = rand::seq::index::sample(rng, pairs.len(), d);

    let mut edges: Vec<GenEdge> = chosen
        .iter()
        .map(|idx| {
            let (cause, effect) = pairs[idx];
            let lag = rng.gen_range(1..=max_lag);
            let magnitude = if w_min == w_max {
                w_min
            } else {
                rng.gen_range(w_min..w_max)
            };
            let weight = if rng.gen_bool(0.5) { magnitude } else { -magnitude };
            GenEdge {
                cause,
                effect,
                lag,
                weight,
            }
        })
        .collect();
    edges.sort_by_key(|e| (e.cause, e.effect));
    Ok(GroundTruthGraph { n, edges })
}

/// Draws one smooth root series of length `len`: a natural cubic spline
/// through `control_points` uniformly spaced knots over `[0, len−1]` with
/// values uniform in `[−1, 1]`, sampled at the integers.
pub fn generate_root_series(
    len: usize,
    control_points: usize,
    rng: &mut impl Rng,
) -> Result<Vec<f64>> {
    if len < 2 {
        return Err(Error::InvalidArgument(format!(
            "series length must be >= 2, got {len}"
        )));
    }
    if control_points < 2 {
        return Err(Error::InvalidArgument(format!(
            "control_points must be >= 2, got {control_points}"
        )));
    }
    let span = (len - 1) as f64;
    let knots: Vec<f64> = (0..control_points)
        .map(|j| span * j as f64 / (control_points - 1) as f64)
        .collect();
    let values: Vec<f64> = (0..control_points)
        .map(|_| rng.gen_range(-1.0..1.0))
        .collect();
    let curve = NaturalCubicSpline::new(knots, values)?;
    Ok((0..len).map(|t| curve.eval(t as f64)).collect())
}

/// Standard normal sample via the Box–Muller transform.
fn sample_gaussian(rng: &mut impl Rng) -> f64 {
    let u1: f64 = 1.0 - rng.gen::<f64>(); // in (0, 1], keeps ln finite
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// Topological order of the graph, smallest index first among ready nodes.
fn topological_order(graph: &GroundTruthGraph) -> Result<Vec<usize>> {
    let n = graph.n;
    let mut in_degree = vec![0usize; n];
    for e in &graph.edges {
        in_degree[e.effect] += 1;
    }
    let mut order = Vec::with_capacity(n);
    let mut ready: Vec<bool> = in_degree.iter().map(|&deg| deg == 0).collect();
    let mut placed = vec![false; n];
    while order.len() < n {
        let next = (0..n).find(|&v| ready[v] && !placed[v]).ok_or_else(|| {
            Error::InvalidArgument("ground-truth graph contains a cycle".into())
        })?;
        placed[next] = true;
        order.push(next);
        for e in graph.edges.iter().filter(|e| e.cause == next) {
            in_degree[e.effect] -= 1;
            if in_degree[e.effect] == 0 {
                ready[e.effect] = true;
            }
        }
    }
    Ok(order)
}

/// Simulates the structural equations over the graph: roots are spline
/// series, every other variable is the weighted lagged sum of its parents
/// plus `N(0, σ²)` noise. Generates `t + max_lag` steps and drops the first
/// `max_lag` (burn-in), so retained samples always have full history.
pub fn propagate(graph: &GroundTruthGraph, cfg: &GenConfig) -> Result<Dataset> {
    cfg.validate()?;
    if graph.n != cfg.n {
        return Err(Error::InvalidArgument(format!(
            "graph has {} variables, config says {}",
            graph.n, cfg.n
        )));
    }
    let n = cfg.n;
    let total = cfg.t_len + cfg.max_lag;
    let control = cfg.effective_control_points();
    let order = topological_order(graph)?;

    let mut series: Vec<Vec<f64>> = vec![Vec::new(); n];
    for &j in &order {
        let parents: Vec<&GenEdge> = graph.parents_of(j).collect();
        if parents.is_empty() {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, 1 + j as u64));
            series[j] = generate_root_series(total, control, &mut rng)?;
        } else {
            let mut rng =
                ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, 1 + (n + j) as u64));
            let mut x = vec![0.0; total];
            for (t, slot) in x.iter_mut().enumerate() {
                let mut acc = 0.0;
                for e in &parents {
                    if t >= e.lag {
                        acc += e.weight * series[e.cause][t - e.lag];
                    }
                }
                *slot = acc + cfg.noise_sigma * sample_gaussian(&mut rng);
            }
            series[j] = x;
        }
    }

    let names = (0..n).map(|i| format!("x{i}")).collect();
    let retained = series
        .into_iter()
        .map(|s| s[cfg.max_lag..].to_vec())
        .collect();
    Dataset::new(names, retained)
}

/// Full generation pipeline: sample the DAG, then simulate it.
pub fn generate_dataset(cfg: &GenConfig) -> Result<(Dataset, GroundTruthGraph)> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, 0));
    let graph = random_dag(
        cfg.n,
        cfg.d,
        cfg.max_lag,
        (cfg.weight_min, cfg.weight_max),
        &mut rng,
    )?;
    let dataset = propagate(&graph, cfg)?;
    Ok((dataset, graph))
}
