//! Acyclicity machinery: a differentiable cycle penalty on the attention
//! matrix, a DFS-based DAG check, and greedy post-hoc cycle elimination.
//!
//! The penalty is the β-weighted trace-of-powers series applied to a
//! smoothed adjacency surrogate: each attention column is softmaxed, the
//! weights are squared (nonnegative and smooth), and the diagonal is zeroed
//! so that self-weights are never treated as cycles — self-loops are either
//! allowed (self-causation mode) or dropped at extraction, and in both
//! cases the diagonal must stay a safe place for softmax mass to settle
//! when a variable has no genuine cause.

use crate::error::{Error, Result};
use crate::graph::AdjacencyMatrix;
use crate::numeric::{softmax, softmax_backward_accumulate, trace_power_series, Matrix};

/// Parameters of the cycle penalty.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PenaltyConfig {
    /// Discount applied per cycle length: length-`k` cycles weigh `beta^k`.
    pub beta: f64,
    /// Longest cycle length included in the series; `n` suffices because
    /// longer closed walks must revisit a vertex.
    pub depth: usize,
    /// Multiplier applied to the penalty inside the global training loss.
    pub alpha_weight: f64,
}

impl PenaltyConfig {
    pub fn validate(&self) -> Result<()> {
        if self.beta.is_nan() || self.beta <= 0.0 {
            return Err(Error::Config(format!("beta must be > 0, got {}", self.beta)));
        }
        if self.depth == 0 {
            return Err(Error::Config("penalty depth must be >= 1".into()));
        }
        if self.alpha_weight.is_nan() || self.alpha_weight < 0.0 {
            return Err(Error::Config(format!(
                "alpha_weight must be >= 0, got {}",
                self.alpha_weight
            )));
        }
        Ok(())
    }
}

/// Penalty value and gradient for an explicitly given nonnegative matrix:
/// `Σ_{k=1..depth} β^k · tr(m^k)`.
pub fn cycle_penalty_on(m: &Matrix, cfg: &PenaltyConfig) -> Result<(f64, Matrix)> {
    cfg.validate()?;
    trace_power_series(m, cfg.beta, cfg.depth)
}

/// Differentiable acyclicity penalty over raw attention.
///
/// Builds the surrogate adjacency `Ã[i][k] = softmax(col k)[i]²` with a
/// zeroed diagonal, evaluates the trace-of-powers series on it, and chains
/// the gradient all the way back to the raw attention entries. Returns
/// `(value, d value / d raw_attention)`.
pub fn acyclicity_penalty(raw_attention: &Matrix, cfg: &PenaltyConfig) -> Result<(f64, Matrix)> {
    cfg.validate()?;
    let n = raw_attention.n();

    let mut softmax_cols: Vec<Vec<f64>> = Vec::with_capacity(n);
    let mut surrogate = Matrix::zeros(n);
    for k in 0..n {
        let col: Vec<f64> = (0..n).map(|i| raw_attention.get(i, k)).collect();
        let s = softmax(&col);
        for i in 0..n {
            if i != k {
                surrogate.set(i, k, s[i] * s[i]);
            }
        }
        softmax_cols.push(s);
    }

    let (value, grad_surrogate) = trace_power_series(&surrogate, cfg.beta, cfg.depth)?;

    let mut grad_raw = Matrix::zeros(n);
    for (k, s) in softmax_cols.iter().enumerate() {
        // d surrogate[i][k] / d s_i = 2·s_i for i ≠ k; the clamped diagonal
        // entry carries no gradient.
        let mut grad_s = vec![0.0; n];
        for i in 0..n {
            if i != k {
                grad_s[i] = grad_surrogate.get(i, k) * 2.0 * s[i];
            }
        }
        let mut grad_col = vec![0.0; n];
        softmax_backward_accumulate(s, &grad_s, &mut grad_col);
        for i in 0..n {
            grad_raw.set(i, k, grad_col[i]);
        }
    }
    Ok((value, grad_raw))
}

/// True when depth-first search finds no directed cycle. Self-loops count
/// as cycles unless `ignore_diagonal` is set.
pub fn is_dag(adj: &AdjacencyMatrix, ignore_diagonal: bool) -> bool {
    let n = adj.n();
    if !ignore_diagonal {
        for i in 0..n {
            if adj.get(i, i) {
                return false;
            }
        }
    }
    find_cycle(adj).is_none()
}

/// Finds one directed cycle among off-diagonal edges, returned as its edge
/// sequence, or `None` when the graph (diagonal aside) is acyclic.
/// Deterministic: vertices and neighbors are explored in ascending order.
fn find_cycle(adj: &AdjacencyMatrix) -> Option<Vec<(usize, usize)>> {
    const WHITE: u8 = 0;
    const GRAY: u8 = 1;
    const BLACK: u8 = 2;

    fn dfs(
        v: usize,
        adj: &AdjacencyMatrix,
        color: &mut [u8],
        path: &mut Vec<(usize, usize)>,
    ) -> Option<Vec<(usize, usize)>> {
        color[v] = GRAY;
        for w in 0..adj.n() {
            if w == v || !adj.get(v, w) {
                continue;
            }
            if color[w] == GRAY {
                // Cycle: the chain suffix starting at w, closed by (v, w).
                let start = path
                    .iter()
                    .position(|&(src, _)| src == w)
                    .unwrap_or(path.len());
                let mut cycle: Vec<(usize, usize)> = path[start..].to_vec();
                cycle.push((v, w));
                return Some(cycle);
            }
            if color[w] == WHITE {
                path.push((v, w));
                if let Some(cycle) = dfs(w, adj, color, path) {
                    return Some(cycle);
                }
                path.pop();
            }
        }
        color[v] = BLACK;
        None
    }

    let n = adj.n();
    let mut color = vec![WHITE; n];
    for v in 0..n {
        if color[v] == WHITE {
            let mut path = Vec::new();
            if let Some(cycle) = dfs(v, adj, &mut color, &mut path) {
                return Some(cycle);
            }
        }
    }
    None
}

/// Greedy cycle elimination: while a directed cycle exists, remove the
/// cycle edge with the lowest score (ties broken by lexicographic
/// `(cause, effect)` order) and repeat. Diagonal entries are left untouched
/// and never treated as cycles. Only removes edges — never adds.
pub fn break_cycles(scores: &Matrix, edges: &AdjacencyMatrix) -> AdjacencyMatrix {
    assert_eq!(scores.n(), edges.n(), "score matrix must match edge matrix");
    let mut out = edges.clone();
    while let Some(cycle) = find_cycle(&out) {
        let victim = cycle
            .iter()
            .copied()
            .min_by(|&(i1, j1), &(i2, j2)| {
                scores
                    .get(i1, j1)
                    .partial_cmp(&scores.get(i2, j2))
                    .expect("scores must be comparable")
                    .then((i1, j1).cmp(&(i2, j2)))
            })
            .expect("cycle is never empty");
        out.set(victim.0, victim.1, false);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn cfg(beta: f64, depth: usize) -> PenaltyConfig {
        PenaltyConfig {
            beta,
            depth,
            alpha_weight: 0.1,
        }
    }

    #[test]
    fn strictly_triangular_matrices_have_zero_penalty() {
        // Upper, lower, and a permuted ordering — all DAGs, all exactly 0.
        let upper = Matrix::from_rows(&[
            vec![0.0, 0.4, 0.9],
            vec![0.0, 0.0, 0.3],
            vec![0.0, 0.0, 0.0],
        ])
        .unwrap();
        let lower = upper.transpose();
        let chain_2_0_1 = Matrix::from_rows(&[
            vec![0.0, 0.7, 0.0],
            vec![0.0, 0.0, 0.0],
            vec![0.8, 0.0, 0.0],
        ])
        .unwrap();
        for m in [upper, lower, chain_2_0_1] {
            let (value, _) = cycle_penalty_on(&m, &cfg(1.0, 3)).unwrap();
            assert_eq!(value, 0.0, "acyclic matrix must score exactly 0");
        }
    }

    #[test]
    fn symmetric_half_cycle_scores_half() {
        let m = Matrix::from_rows(&[vec![0.0, 0.5], vec![0.5, 0.0]]).unwrap();
        let (value, _) = cycle_penalty_on(&m, &cfg(1.0, 2)).unwrap();
        assert!((value - 0.5).abs() < 1e-15, "tr(m²) = 2·0.25, got {value}");
    }

    #[test]
    fn penalty_matches_independent_power_loop_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let n = 5;
        let mut raw = Matrix::zeros(n);
        for i in 0..n {
            for j in 0..n {
                raw.set(i, j, rng.gen_range(-1.0..1.5));
            }
        }
        let pc = cfg(0.8, n);
        let (value, _) = acyclicity_penalty(&raw, &pc).unwrap();

        // Oracle: rebuild the surrogate by hand and sum β^k·tr(Ã^k) with
        // explicit matrix powers.
        let mut surrogate = Matrix::zeros(n);
        for k in 0..n {
            let col: Vec<f64> = (0..n).map(|i| raw.get(i, k)).collect();
            let max = col.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let exps: Vec<f64> = col.iter().map(|v| (v - max).exp()).collect();
            let sum: f64 = exps.iter().sum();
            for i in 0..n {
                if i != k {
                    let s = exps[i] / sum;
                    surrogate.set(i, k, s * s);
                }
            }
        }
        let mut oracle = 0.0;
        let mut power = surrogate.clone();
        for k in 1..=pc.depth {
            oracle += pc.beta.powi(k as i32) * power.trace();
            power = power.matmul(&surrogate);
        }
        let rel = (value - oracle).abs() / oracle.abs().max(1e-12);
        assert!(rel < 1e-12, "penalty {value} vs oracle {oracle}");
    }

    #[test]
    fn penalty_gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        let n = 4;
        let mut raw = Matrix::zeros(n);
        for i in 0..n {
            for j in 0..n {
                raw.set(i, j, rng.gen_range(-1.0..1.0));
            }
        }
        let pc = cfg(0.9, 4);
        let (_, grad) = acyclicity_penalty(&raw, &pc).unwrap();

        let h = 1e-6;
        for i in 0..n {
            for j in 0..n {
                let mut plus = raw.clone();
                let mut minus = raw.clone();
                plus.set(i, j, raw.get(i, j) + h);
                minus.set(i, j, raw.get(i, j) - h);
                let fd = (acyclicity_penalty(&plus, &pc).unwrap().0
                    - acyclicity_penalty(&minus, &pc).unwrap().0)
                    / (2.0 * h);
                let rel = (grad.get(i, j) - fd).abs() / fd.abs().max(1e-8);
                assert!(
                    rel < 1e-4,
                    "grad({i},{j}): analytic {} vs fd {fd}",
                    grad.get(i, j)
                );
            }
        }
    }

    #[test]
    fn dag_check_handles_chains_cycles_and_self_loops() {
        let mut chain = AdjacencyMatrix::new(3);
        chain.set(0, 1, true);
        chain.set(1, 2, true);
        assert!(is_dag(&chain, false));

        let mut two_cycle = AdjacencyMatrix::new(2);
        two_cycle.set(0, 1, true);
        two_cycle.set(1, 0, true);
        assert!(!is_dag(&two_cycle, false));

        let mut self_loop = AdjacencyMatrix::new(2);
        self_loop.set(1, 1, true);
        assert!(is_dag(&self_loop, true), "diagonal ignored on request");
        assert!(!is_dag(&self_loop, false), "diagonal counted by default");
    }

    #[test]
    fn dag_check_agrees_with_trace_series_on_random_binary_matrices() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..200 {
            let n = 4;
            let mut adj = AdjacencyMatrix::new(n);
            let mut m = Matrix::zeros(n);
            for i in 0..n {
                for j in 0..n {
                    if i != j && rng.gen_bool(0.35) {
                        adj.set(i, j, true);
                        m.set(i, j, 1.0);
                    }
                }
            }
            let (value, _) = trace_power_series(&m, 1.0, n).unwrap();
            assert_eq!(
                is_dag(&adj, false),
                value == 0.0,
                "trace series and DFS disagree on {adj:?}"
            );
        }
    }

    #[test]
    fn break_cycles_leaves_acyclic_graphs_unchanged() {
        let mut adj = AdjacencyMatrix::new(4);
        adj.set(0, 1, true);
        adj.set(1, 3, true);
        adj.set(0, 2, true);
        let scores = Matrix::zeros(4);
        let out = break_cycles(&scores, &adj);
        assert_eq!(out, adj);
    }

    #[test]
    fn break_cycles_drops_the_weaker_edge_of_a_two_cycle() {
        let mut adj = AdjacencyMatrix::new(2);
        adj.set(0, 1, true);
        adj.set(1, 0, true);
        let mut scores = Matrix::zeros(2);
        scores.set(0, 1, 0.9);
        scores.set(1, 0, 0.2);
        let out = break_cycles(&scores, &adj);
        assert!(out.get(0, 1), "stronger edge survives");
        assert!(!out.get(1, 0), "weaker edge removed");
    }

    #[test]
    fn break_cycles_ties_resolve_to_the_lexicographically_first_edge() {
        let mut adj = AdjacencyMatrix::new(2);
        adj.set(0, 1, true);
        adj.set(1, 0, true);
        let mut scores = Matrix::zeros(2);
        scores.set(0, 1, 0.5);
        scores.set(1, 0, 0.5);
        let out = break_cycles(&scores, &adj);
        assert!(!out.get(0, 1), "lexicographically first edge is removed on ties");
        assert!(out.get(1, 0));
    }

    #[test]
    fn break_cycles_is_idempotent_and_never_adds_edges() {
        let mut rng = ChaCha8Rng::seed_from_u64(24);
        for _ in 0..100 {
            let n = rng.gen_range(2..=5);
            let mut adj = AdjacencyMatrix::new(n);
            let mut scores = Matrix::zeros(n);
            for i in 0..n {
                for j in 0..n {
                    if i != j && rng.gen_bool(0.5) {
                        adj.set(i, j, true);
                        scores.set(i, j, rng.gen_range(0.0..1.0));
                    }
                }
            }
            let once = break_cycles(&scores, &adj);
            assert!(is_dag(&once, true), "output must be acyclic");
            for (i, j) in once.edges() {
                assert!(adj.get(i, j), "edge {i}->{j} was invented");
            }
            let twice = break_cycles(&scores, &once);
            assert_eq!(once, twice, "second application must be a no-op");
        }
    }

    #[test]
    fn break_cycles_preserves_self_loops() {
        let mut adj = AdjacencyMatrix::new(2);
        adj.set(0, 0, true);
        adj.set(0, 1, true);
        adj.set(1, 0, true);
        let mut scores = Matrix::zeros(2);
        scores.set(0, 1, 0.9);
        scores.set(1, 0, 0.1);
        let out = break_cycles(&scores, &adj);
        assert!(out.get(0, 0), "self-loop must pass through untouched");
        assert!(out.get(0, 1));
        assert!(!out.get(1, 0));
    }

    #[test]
    fn invalid_penalty_configs_are_rejected() {
        let m = Matrix::zeros(2);
        assert!(cycle_penalty_on(&m, &cfg(0.0, 2)).is_err());
        assert!(cycle_penalty_on(&m, &cfg(1.0, 0)).is_err());
        assert!(acyclicity_penalty(
            &m,
            &PenaltyConfig {
                beta: 1.0,
                depth: 2,
                alpha_weight: -0.5
            }
        )
        .is_err());
    }
}
