//! Time-lagged causal graph discovery from multivariate time series.
//!
//! The library trains one small convolutional predictor per variable, each
//! gated by a learned attention column over all variables. A differentiable
//! acyclicity penalty on the attention matrix steers the joint solution
//! towards a DAG, and a thresholding/cycle-breaking step extracts the final
//! graph. Alongside discovery the crate ships a synthetic benchmark
//! generator with known ground truth, structural-distance metrics, and the
//! file formats used by the `laggraph` CLI.
//!
//! Typical flow:
//!
//! ```no_run
//! use laggraph::datagen::{generate_dataset, GenConfig};
//! use laggraph::discovery::{discover, DiscoveryConfig};
//! use laggraph::metrics::MetricsReport;
//!
//! let gen = GenConfig { seed: 7, ..GenConfig::default() };
//! let (dataset, truth) = generate_dataset(&gen).unwrap();
//! let cfg = DiscoveryConfig { seed: 7, max_lag_hint: 3, ..DiscoveryConfig::default() };
//! let outcome = discover(&dataset, &cfg).unwrap();
//! let report = MetricsReport::compare(&truth.graph(), &outcome.graph, false).unwrap();
//! println!("f1 = {}", report.f1);
//! ```

// Numeric kernels keep index-based loops where several slices share the
// same index arithmetic; iterator chains would obscure the stencil shapes.
#![allow(clippy::needless_range_loop)]

pub mod constraints;
pub mod datagen;
pub mod dataset;
pub mod discovery;
pub mod error;
pub mod fit;
pub mod graph;
pub mod io;
pub mod metrics;
pub mod model;
pub mod numeric;

pub use error::{Error, Result};
