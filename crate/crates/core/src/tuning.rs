//! Validation grid search over `(λ, lengthscale)`.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::datasets::SnapshotSeries;
use crate::error::{invalid, Result};
use crate::inference::{err_metric, predict_series, summarize};
use crate::kernels::{median_pairwise_distance, KernelSpec};
use crate::learner::{fit_series, FitPath, OckModel};
use crate::linalg::Matrix;
use crate::scalar::Real;

pub const DEFAULT_LAMBDAS: [f64; 6] = [1e-12, 1e-10, 1e-8, 1e-6, 1e-4, 1e-2];
pub const DEFAULT_LENGTHSCALE_FACTORS: [f64; 5] = [0.1, 0.3, 1.0, 3.0, 10.0];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchSpace {
    pub lambdas: Vec<f64>,
    pub lengthscales: Vec<f64>,
}

/// Median pairwise distance between (up to 500) training states, or 1 when
/// all states coincide.
pub fn median_state_distance<T: Real>(train: &[SnapshotSeries<T>]) -> Result<f64> {
    let rows: usize = train.iter().map(SnapshotSeries::len).sum();
    let Some(first) = train.first() else {
        return invalid("no training series");
    };
    let mut flat = Vec::with_capacity(rows * first.dim());
    for s in train {
        flat.extend_from_slice(s.states.as_slice());
    }
    let median = median_pairwise_distance(&Matrix::from_vec(rows, first.dim(), flat)?, 500).to_f64_lossy();
    Ok(if median > 0.0 { median } else { 1.0 })
}

impl SearchSpace {
    /// The default log grids, with lengthscales as multiples of the median
    /// pairwise distance between training states.
    pub fn default_for<T: Real>(train: &[SnapshotSeries<T>]) -> Result<Self> {
        let base = median_state_distance(train)?;
        Ok(Self {
            lambdas: DEFAULT_LAMBDAS.to_vec(),
            lengthscales: DEFAULT_LENGTHSCALE_FACTORS.iter().map(|f| f * base).collect(),
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.lambdas.is_empty() || self.lengthscales.is_empty() {
            return invalid("search grids must be nonempty");
        }
        if self.lambdas.iter().chain(&self.lengthscales).any(|v| !(*v > 0.0) || !v.is_finite()) {
            return invalid("search grid values must be positive and finite");
        }
        Ok(())
    }

    pub fn is_single(&self) -> bool {
        self.lambdas.len() == 1 && self.lengthscales.len() == 1
    }
}

/// Everything a search needs apart from the data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct SearchConfig<T> {
    /// Kernel family and its non-lengthscale parameters.
    pub kernel: KernelSpec<T>,
    pub path: FitPath,
    pub standardize: bool,
    pub substeps: usize,
    pub space: SearchSpace,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridScore {
    pub lambda: f64,
    pub lengthscale: f64,
    /// Mean validation Err; infinite when a prediction diverged or the fit
    /// failed.
    pub validation_err: f64,
    pub fit_seconds: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchReport {
    pub scores: Vec<GridScore>,
    pub chosen_lambda: f64,
    pub chosen_lengthscale: f64,
    pub searched: bool,
    pub refit_seconds: f64,
    pub total_seconds: f64,
    pub refit_segments: usize,
}

/// Mean Err of `model` over `series`, `+∞` if any prediction diverges.
pub fn mean_err<T: Real>(model: &OckModel<T>, series: &[SnapshotSeries<T>], substeps: usize) -> Result<f64> {
    if series.is_empty() {
        return invalid("no series to score");
    }
    let preds = predict_series(model, series, substeps)?;
    let errs = series
        .iter()
        .zip(&preds)
        .map(|(s, p)| err_metric(s, p).map(|e| e.to_f64_lossy()))
        .collect::<Result<Vec<_>>>()?;
    Ok(summarize(&errs, false).mean)
}

/// Scores every grid point on `validation` after fitting on `train`, then
/// refits the winner on `train ∪ validation`. A 1×1 grid skips scoring.
pub fn grid_search<T: Real>(
    train: &[SnapshotSeries<T>],
    validation: &[SnapshotSeries<T>],
    cfg: &SearchConfig<T>,
) -> Result<(OckModel<T>, SearchReport)> {
    cfg.space.validate()?;
    let started = Instant::now();
    let mut scores = Vec::new();
    let searched = !cfg.space.is_single() && !validation.is_empty();
    let (mut best_l, mut best_s) = (cfg.space.lambdas[0], cfg.space.lengthscales[0]);
    if searched {
        let mut best = f64::INFINITY;
        for &lambda in &cfg.space.lambdas {
            for &ls in &cfg.space.lengthscales {
                let t0 = Instant::now();
                let spec = cfg.kernel.with_lengthscale(T::lit(ls));
                let outcome = fit_series(train, &spec, T::lit(lambda), cfg.path, cfg.standardize)
                    .and_then(|m| mean_err(&m, validation, cfg.substeps));
                let (validation_err, failure) = match outcome {
                    Ok(e) if e.is_finite() => (e, None),
                    Ok(_) => (f64::INFINITY, Some("prediction diverged".to_string())),
                    Err(e) => (f64::INFINITY, Some(e.to_string())),
                };
                log::debug!("lambda={lambda:e} lengthscale={ls:.4} err={validation_err:.5}");
                if validation_err < best {
                    best = validation_err;
                    best_l = lambda;
                    best_s = ls;
                }
                scores.push(GridScore {
                    lambda,
                    lengthscale: ls,
                    validation_err,
                    fit_seconds: t0.elapsed().as_secs_f64(),
                    failure,
                });
            }
        }
    }
    let mut all: Vec<SnapshotSeries<T>> = train.to_vec();
    all.extend_from_slice(validation);
    let t0 = Instant::now();
    let spec = cfg.kernel.with_lengthscale(T::lit(best_s));
    let model = fit_series(&all, &spec, T::lit(best_l), cfg.path, cfg.standardize)?;
    let refit_seconds = t0.elapsed().as_secs_f64();
    let refit_segments = model.fit_report().map_or(0, |r| r.segments);
    Ok((
        model,
        SearchReport {
            scores,
            chosen_lambda: best_l,
            chosen_lengthscale: best_s,
            searched,
            refit_seconds,
            total_seconds: started.elapsed().as_secs_f64(),
            refit_segments,
        },
    ))
}
