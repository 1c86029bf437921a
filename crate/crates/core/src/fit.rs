//! Generalization measurement: train on a chronological prefix of a series,
//! score the held-out suffix, and report how the train/test MSE gap evolves
//! as the sample size grows.
//!
//! Every measurement uses a 70%/30% chronological split — the model never
//! sees the tail of the series during training, and causal convolutions
//! never look forward, so scoring the tail of a full-series forward pass
//! leaks nothing from the future into any prediction.

use rayon::prelude::*;

use crate::datagen::{generate_dataset, GenConfig};
use crate::dataset::Dataset;
use crate::discovery::{train, DiscoveryConfig};
use crate::error::{Error, Result};
use crate::io::atomic_write;
use crate::model::{receptive_field, Model};

/// Timesteps in the chronological training prefix: 70% of the series,
/// rounded down. The remaining 30% is the held-out test suffix.
pub fn train_prefix_len(t_len: usize) -> usize {
    t_len * 7 / 10
}

/// Seed-averaged train/test MSE at one sample size.
#[derive(Debug, Clone, PartialEq)]
pub struct FitRow {
    pub size: usize,
    pub train_mse: f64,
    pub test_mse: f64,
    /// `test_mse - train_mse`; the overfitting margin.
    pub gap: f64,
}

/// Mean squared one-step prediction error of the final model over the
/// half-open timestep range `range`, averaged over all networks.
fn range_mse(model: &Model, dataset: &Dataset, range: std::ops::Range<usize>) -> Result<f64> {
    let n = dataset.n();
    let mut total = 0.0;
    for k in 0..n {
        let (pred, _) = model.forward(dataset, k)?;
        let actual = dataset.series(k);
        let mut sum = 0.0;
        for t in range.clone() {
            let err = pred[t] - actual[t];
            sum += err * err;
        }
        total += sum / range.len() as f64;
    }
    Ok(total / n as f64)
}

/// Trains on the 70% prefix of `dataset` and returns `(train_mse, test_mse)`
/// for the final model, both averaged over networks. Train MSE covers the
/// prefix minus the receptive-field warmup; test MSE covers the suffix,
/// with each prediction keeping its true (past-only) history.
pub fn fit_once(dataset: &Dataset, cfg: &DiscoveryConfig) -> Result<(f64, f64)> {
    cfg.validate()?;
    let t_len = dataset.len();
    let train_len = train_prefix_len(t_len);
    let model_cfg = cfg.model_config(dataset.n())?;
    let rf = receptive_field(
        model_cfg.layers,
        model_cfg.kernel_width,
        model_cfg.dilation_base,
    );
    if train_len <= rf {
        return Err(Error::Config(format!(
            "70% training prefix has {train_len} timesteps, which does not exceed \
             the receptive field {rf}; use a longer series"
        )));
    }
    let prefix = Dataset::new(
        dataset.names().to_vec(),
        dataset
            .all_series()
            .iter()
            .map(|s| s[..train_len].to_vec())
            .collect(),
    )?;
    let (model, _) = train(&prefix, cfg)?;
    let train_mse = range_mse(&model, &prefix, rf..train_len)?;
    let test_mse = range_mse(&model, dataset, train_len..t_len)?;
    Ok((train_mse, test_mse))
}

/// Builds the fit table: for every size in `sizes`, generates `n_seeds`
/// datasets (seeds `gen.seed + 0..n_seeds`, with `t` overridden to the
/// size), measures [`fit_once`] on each, and reports the seed means.
/// The discovery seed stays fixed so only the data varies across repeats.
/// Cells run in parallel; results are deterministic for fixed inputs.
pub fn fit_report(
    gen: &GenConfig,
    discovery: &DiscoveryConfig,
    sizes: &[usize],
    n_seeds: u64,
) -> Result<Vec<FitRow>> {
    if sizes.is_empty() {
        return Err(Error::Config("fit report needs at least one size".into()));
    }
    if n_seeds == 0 {
        return Err(Error::Config("fit report needs at least one seed".into()));
    }
    gen.validate()?;
    discovery.validate()?;

    let cells: Vec<(usize, u64)> = sizes
        .iter()
        .flat_map(|&size| (0..n_seeds).map(move |s| (size, s)))
        .collect();
    let measured: Vec<Result<(usize, f64, f64)>> = cells
        .par_iter()
        .map(|&(size, s)| {
            let cell_gen = GenConfig {
                t_len: size,
                seed: gen.seed + s,
                ..gen.clone()
            };
            let (dataset, _) = generate_dataset(&cell_gen)?;
            let (train_mse, test_mse) = fit_once(&dataset, discovery)?;
            Ok((size, train_mse, test_mse))
        })
        .collect();

    let mut rows = Vec::with_capacity(sizes.len());
    for &size in sizes {
        let mut train_sum = 0.0;
        let mut test_sum = 0.0;
        for cell in &measured {
            match cell {
                Ok((cell_size, train_mse, test_mse)) if *cell_size == size => {
                    train_sum += train_mse;
                    test_sum += test_mse;
                }
                Ok(_) => {}
                Err(e) => {
                    return Err(Error::Config(format!("fit cell failed: {e}")));
                }
            }
        }
        let train_mse = train_sum / n_seeds as f64;
        let test_mse = test_sum / n_seeds as f64;
        rows.push(FitRow {
            size,
            train_mse,
            test_mse,
            gap: test_mse - train_mse,
        });
    }
    Ok(rows)
}

/// Renders a fit table as CSV with columns `size,train_mse,test_mse,gap`.
pub fn fit_csv_string(rows: &[FitRow]) -> String {
    let mut out = String::from("size,train_mse,test_mse,gap\n");
    for row in rows {
        out.push_str(&format!(
            "{},{},{},{}\n",
            row.size, row.train_mse, row.test_mse, row.gap
        ));
    }
    out
}

/// Writes a fit table as CSV (see [`fit_csv_string`]), atomically.
pub fn write_fit_csv(rows: &[FitRow], path: &std::path::Path) -> Result<()> {
    atomic_write(path, fit_csv_string(rows).as_bytes())
}
