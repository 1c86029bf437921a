//! Scoring predicted causal graphs against ground truth.
//!
//! The structural hamming distance (SHD) counts the minimum number of edge
//! operations — insertion, deletion, reversal — turning one graph into the
//! other; an anti-parallel mismatch therefore costs 1 (one reversal), not
//! 2. Precision/recall/F1 are direction-exact: a reversed edge is a false
//! positive and leaves the true edge as a false negative. Self-loops are
//! compared like ordinary edges when self-causation mode is on and dropped
//! from both graphs when off.

use crate::error::{Error, Result};
use crate::graph::{AdjacencyMatrix, CausalGraph};
use crate::io::atomic_write;
use std::path::Path;

/// Minimum edit distance between two directed graphs under insertion,
/// deletion, and reversal, computed pairwise.
pub fn shd(pred: &AdjacencyMatrix, truth: &AdjacencyMatrix) -> Result<usize> {
    if pred.n() != truth.n() {
        return Err(Error::InvalidArgument(format!(
            "graph sizes differ: {} vs {}",
            pred.n(),
            truth.n()
        )));
    }
    let n = pred.n();
    let mut total = 0;
    for i in 0..n {
        if pred.get(i, i) != truth.get(i, i) {
            total += 1;
        }
        for j in i + 1..n {
            let p = (pred.get(i, j), pred.get(j, i));
            let t = (truth.get(i, j), truth.get(j, i));
            if p == t {
                continue;
            }
            let diffs = (p.0 != t.0) as usize + (p.1 != t.1) as usize;
            total += if diffs == 1 {
                1
            } else {
                // Both directions differ: either a pure reversal (one edge
                // flips side, cost 1) or none vs both (two ops).
                let p_single = p.0 ^ p.1;
                let t_single = t.0 ^ t.1;
                if p_single && t_single {
                    1
                } else {
                    2
                }
            };
        }
    }
    Ok(total)
}

/// Direction-exact counts and ratios; zero denominators yield 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrfResult {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub tp: usize,
    pub fp: usize,
    pub fn_count: usize,
    /// Anti-parallel pairs: predicted one way, true the other.
    pub reversed: usize,
    pub precision_defined: bool,
    pub recall_defined: bool,
    pub f1_defined: bool,
}

/// Precision, recall, and F1 with exact direction matching.
pub fn precision_recall_f1(pred: &AdjacencyMatrix, truth: &AdjacencyMatrix) -> Result<PrfResult> {
    if pred.n() != truth.n() {
        return Err(Error::InvalidArgument(format!(
            "graph sizes differ: {} vs {}",
            pred.n(),
            truth.n()
        )));
    }
    let n = pred.n();
    let (mut tp, mut fp, mut fn_count, mut reversed) = (0, 0, 0, 0);
    for i in 0..n {
        for j in 0..n {
            match (pred.get(i, j), truth.get(i, j)) {
                (true, true) => tp += 1,
                (true, false) => fp += 1,
                (false, true) => fn_count += 1,
                (false, false) => {}
            }
            if i < j {
                let anti_1 = pred.get(i, j) && !pred.get(j, i) && truth.get(j, i) && !truth.get(i, j);
                let anti_2 = pred.get(j, i) && !pred.get(i, j) && truth.get(i, j) && !truth.get(j, i);
                if anti_1 || anti_2 {
                    reversed += 1;
                }
            }
        }
    }
    let precision_defined = tp + fp > 0;
    let recall_defined = tp + fn_count > 0;
    let precision = if precision_defined {
        tp as f64 / (tp + fp) as f64
    } else {
        0.0
    };
    let recall = if recall_defined {
        tp as f64 / (tp + fn_count) as f64
    } else {
        0.0
    };
    let f1_defined = precision + recall > 0.0;
    let f1 = if f1_defined {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    };
    Ok(PrfResult {
        precision,
        recall,
        f1,
        tp,
        fp,
        fn_count,
        reversed,
        precision_defined,
        recall_defined,
        f1_defined,
    })
}

/// Full evaluation of a predicted graph against ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub shd: usize,
    /// `shd / d` with `d` the ground-truth edge count (after self-loop
    /// filtering); when `d = 0` the raw `shd` is reported instead.
    pub avg_shd: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub tp: usize,
    pub fp: usize,
    pub fn_count: usize,
    pub reversed: usize,
    /// Whether self-loops participated in the comparison.
    pub self_loops_counted: bool,
    pub precision_defined: bool,
    pub recall_defined: bool,
    pub f1_defined: bool,
}

impl MetricsReport {
    /// Compares `pred` against `truth`. With `count_self_loops` off,
    /// diagonal edges are removed from both graphs before scoring.
    pub fn compare(truth: &CausalGraph, pred: &CausalGraph, count_self_loops: bool) -> Result<Self> {
        if truth.n() != pred.n() {
            return Err(Error::InvalidArgument(format!(
                "prediction has {} variables, truth has {}",
                pred.n(),
                truth.n()
            )));
        }
        let mut truth_adj = truth.adjacency();
        let mut pred_adj = pred.adjacency();
        if !count_self_loops {
            for i in 0..truth_adj.n() {
                truth_adj.set(i, i, false);
                pred_adj.set(i, i, false);
            }
        }
        let shd_value = shd(&pred_adj, &truth_adj)?;
        let prf = precision_recall_f1(&pred_adj, &truth_adj)?;
        let d = truth_adj.edge_count();
        let avg_shd = if d > 0 {
            shd_value as f64 / d as f64
        } else {
            shd_value as f64
        };
        Ok(MetricsReport {
            shd: shd_value,
            avg_shd,
            precision: prf.precision,
            recall: prf.recall,
            f1: prf.f1,
            tp: prf.tp,
            fp: prf.fp,
            fn_count: prf.fn_count,
            reversed: prf.reversed,
            self_loops_counted: count_self_loops,
            precision_defined: prf.precision_defined,
            recall_defined: prf.recall_defined,
            f1_defined: prf.f1_defined,
        })
    }

    /// Key-value rendering, one `name=value` per line.
    pub fn to_key_value_string(&self) -> String {
        format!(
            "shd={}\navg_shd={}\nprecision={}\nrecall={}\nf1={}\ntp={}\nfp={}\nfn={}\nreversed={}\nself_loops_counted={}\nprecision_defined={}\nrecall_defined={}\nf1_defined={}\n",
            self.shd,
            self.avg_shd,
            self.precision,
            self.recall,
            self.f1,
            self.tp,
            self.fp,
            self.fn_count,
            self.reversed,
            self.self_loops_counted,
            self.precision_defined,
            self.recall_defined,
            self.f1_defined,
        )
    }

    /// Column names of [`MetricsReport::to_csv_row`].
    pub fn csv_header() -> &'static str {
        "shd,avg_shd,precision,recall,f1,tp,fp,fn,reversed"
    }

    /// One-line CSV rendering for sweep aggregation.
    pub fn to_csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{}",
            self.shd,
            self.avg_shd,
            self.precision,
            self.recall,
            self.f1,
            self.tp,
            self.fp,
            self.fn_count,
            self.reversed,
        )
    }

    /// Writes the key-value report atomically.
    pub fn write_key_value(&self, path: &Path) -> Result<()> {
        atomic_write(path, self.to_key_value_string().as_bytes())
    }

    /// Writes the CSV form (header + one row) atomically.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let text = format!("{}\n{}\n", Self::csv_header(), self.to_csv_row());
        atomic_write(path, text.as_bytes())
    }
}
