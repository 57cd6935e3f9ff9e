//! Experiment configurations, the built-in desk presets, and the
//! split → search → refit → test pipeline behind `ock train`.

use std::path::PathBuf;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::datasets::{generate, load_csv, split, CsvOptions, GeneratorConfig, SnapshotSeries, System};
use crate::error::{invalid, Result};
use crate::inference::{err_metric, null_model_err, predict_series, summarize, ErrSummary};
use crate::kernels::KernelSpec;
use crate::learner::{FitPath, OckModel};
use crate::pde::PdeConfig;
use crate::tuning::{grid_search, median_state_distance, SearchConfig, SearchReport, SearchSpace};

pub const PRESET_NAMES: [&str; 5] = [
    "fhn-desk",
    "lorenz63-desk",
    "lorenz96-16-desk",
    "lorenz96-128-desk",
    "pde-desk",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatasetSource {
    Generate(GeneratorConfig),
    Csv { path: PathBuf },
}

/// One ODE learning experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub dataset: DatasetSource,
    pub kernel: KernelSpec<f64>,
    pub path: FitPath,
    pub lambdas: Vec<f64>,
    pub lengthscales: Vec<f64>,
    /// Read `lengthscales` as multiples of the median pairwise distance
    /// between training states.
    pub relative_lengthscales: bool,
    pub standardize: bool,
    /// Train, validation, test fractions by trajectory.
    pub split: [f64; 3],
    pub split_seed: u64,
    pub substeps: usize,
    pub output_dir: PathBuf,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if let DatasetSource::Generate(g) = &self.dataset {
            g.validate()?;
        }
        self.kernel.validate()?;
        SearchSpace {
            lambdas: self.lambdas.clone(),
            lengthscales: self.lengthscales.clone(),
        }
        .validate()?;
        if self.substeps == 0 {
            return invalid("substeps must be at least 1");
        }
        if self.split.iter().any(|f| !(*f >= 0.0)) || !(self.split[0] > 0.0) {
            return invalid("split fractions must be nonnegative with a positive train share");
        }
        Ok(())
    }

    pub fn load_dataset(&self) -> Result<Vec<SnapshotSeries<f64>>> {
        match &self.dataset {
            DatasetSource::Generate(g) => generate(g),
            DatasetSource::Csv { path } => {
                if !path.exists() {
                    return invalid(format!("dataset {} does not exist", path.display()));
                }
                load_csv(path, CsvOptions::default())
            }
        }
    }

    pub fn search_space(&self, train: &[SnapshotSeries<f64>]) -> Result<SearchSpace> {
        let lengthscales = if self.relative_lengthscales {
            let median = median_state_distance(train)?;
            self.lengthscales.iter().map(|f| f * median).collect()
        } else {
            self.lengthscales.clone()
        };
        Ok(SearchSpace {
            lambdas: self.lambdas.clone(),
            lengthscales,
        })
    }
}

fn generator(system: System, n_traj: usize, n_snap: usize, t_span: (f64, f64), seed: u64) -> GeneratorConfig {
    let mut g = GeneratorConfig::new(system);
    g.n_trajectories = n_traj;
    g.n_snapshots = n_snap;
    g.t_span = t_span;
    g.noise_std = 0.0;
    g.seed = seed;
    g
}

fn lorenz96_desk(dim: usize) -> ExperimentConfig {
    let mut g = generator(System::Lorenz96, 12, 101, (0.0, 2.0), 96).with_dimension(dim);
    g.noise_std = 0.0;
    ExperimentConfig {
        dataset: DatasetSource::Generate(g),
        kernel: KernelSpec::Gaussian { lengthscale: 1.0 },
        path: FitPath::Implicit,
        lambdas: vec![1e-8],
        lengthscales: vec![1.0],
        relative_lengthscales: true,
        standardize: false,
        split: [0.8, 0.0, 0.2],
        split_seed: 0,
        substeps: 10,
        output_dir: PathBuf::from(format!("out/lorenz96-{dim}-desk")),
    }
}

/// A named ODE preset. `pde-desk` is a PDE study; see [`pde_preset`].
pub fn experiment_preset(name: &str) -> Result<ExperimentConfig> {
    Ok(match name {
        "fhn-desk" => ExperimentConfig {
            dataset: DatasetSource::Generate(generator(System::Fhn, 10, 50, (0.0, 50.0), 1)),
            kernel: KernelSpec::Gaussian { lengthscale: 1.0 },
            path: FitPath::Implicit,
            lambdas: vec![1e-6, 1e-4, 1e-2],
            lengthscales: vec![0.5, 1.0, 2.0],
            relative_lengthscales: false,
            standardize: false,
            split: [0.6, 0.2, 0.2],
            split_seed: 0,
            substeps: 10,
            output_dir: PathBuf::from("out/fhn-desk"),
        },
        "lorenz63-desk" => ExperimentConfig {
            dataset: DatasetSource::Generate(generator(System::Lorenz63, 20, 201, (0.0, 2.0), 63)),
            kernel: KernelSpec::Gaussian { lengthscale: 10.0 },
            path: FitPath::Implicit,
            lambdas: vec![1e-12, 1e-10, 1e-8],
            lengthscales: vec![3.0, 10.0, 30.0],
            relative_lengthscales: false,
            standardize: false,
            split: [0.6, 0.15, 0.25],
            split_seed: 0,
            substeps: 10,
            output_dir: PathBuf::from("out/lorenz63-desk"),
        },
        "lorenz96-16-desk" => lorenz96_desk(16),
        "lorenz96-128-desk" => lorenz96_desk(128),
        "pde-desk" => return invalid("pde-desk is a PDE study preset; use it with pde-study"),
        other => {
            return invalid(format!(
                "unknown preset '{other}'; known: {}",
                PRESET_NAMES.join(", ")
            ))
        }
    })
}

/// Grid sizes and fit settings of a PDE refinement study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PdeStudyConfig {
    pub sizes: Vec<(usize, usize)>,
    pub fit: PdeConfig,
    pub output_dir: PathBuf,
}

pub fn pde_preset(name: &str) -> Result<PdeStudyConfig> {
    match name {
        "pde-desk" => Ok(PdeStudyConfig {
            sizes: vec![(100, 10), (200, 20), (400, 40), (800, 80)],
            fit: PdeConfig {
                lambda1: 1e-12,
                lambda2: 1e-12,
                ..PdeConfig::default()
            },
            output_dir: PathBuf::from("out/pde-desk"),
        }),
        other if PRESET_NAMES.contains(&other) => invalid(format!("{other} is an ODE preset")),
        other => invalid(format!("unknown preset '{other}'")),
    }
}

/// Per-trajectory scores of a prediction run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryScore {
    pub series_id: u64,
    pub err: f64,
    pub one_step_err: f64,
    pub null_err: f64,
    pub diverged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub trajectories: Vec<TrajectoryScore>,
    pub err: ErrSummary,
    pub one_step_err: ErrSummary,
    pub null_err: ErrSummary,
}

/// Scores a model on `series`, predicting each from its first snapshot.
pub fn evaluate_model(model: &OckModel<f64>, series: &[SnapshotSeries<f64>], substeps: usize) -> Result<Evaluation> {
    let preds = predict_series(model, series, substeps)?;
    let mut trajectories = Vec::with_capacity(series.len());
    for (s, p) in series.iter().zip(&preds) {
        trajectories.push(TrajectoryScore {
            series_id: s.series_id,
            err: err_metric(s, p)?,
            one_step_err: crate::inference::one_step_err(s, model, substeps)?,
            null_err: null_model_err(s)?,
            diverged: p.diverged(),
        });
    }
    Ok(Evaluation::from_scores(trajectories))
}

impl Evaluation {
    pub fn from_scores(trajectories: Vec<TrajectoryScore>) -> Self {
        let col = |f: fn(&TrajectoryScore) -> f64| trajectories.iter().map(f).collect::<Vec<_>>();
        Self {
            err: summarize(&col(|t| t.err), false),
            one_step_err: summarize(&col(|t| t.one_step_err), false),
            null_err: summarize(&col(|t| t.null_err), false),
            trajectories,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub config: ExperimentConfig,
    pub n_train: usize,
    pub n_validation: usize,
    pub n_test: usize,
    pub search: SearchReport,
    pub chosen_lambda: f64,
    pub chosen_lengthscale: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub test: Option<Evaluation>,
    pub train_seconds: f64,
}

/// Splits, searches, refits on train ∪ validation, and scores the test part.
pub fn run_training(cfg: &ExperimentConfig) -> Result<(OckModel<f64>, TrainReport)> {
    cfg.validate()?;
    let data = cfg.load_dataset()?;
    let parts = split(&data, cfg.split, cfg.split_seed)?;
    let space = cfg.search_space(&parts.train)?;
    let search_cfg = SearchConfig {
        kernel: cfg.kernel,
        path: cfg.path,
        standardize: cfg.standardize,
        substeps: cfg.substeps,
        space,
    };
    let started = Instant::now();
    let (model, search) = grid_search(&parts.train, &parts.validation, &search_cfg)?;
    let train_seconds = started.elapsed().as_secs_f64();
    let test = if parts.test.is_empty() {
        None
    } else {
        Some(evaluate_model(&model, &parts.test, cfg.substeps)?)
    };
    Ok((
        model,
        TrainReport {
            config: cfg.clone(),
            n_train: parts.train.len(),
            n_validation: parts.validation.len(),
            n_test: parts.test.len(),
            chosen_lambda: search.chosen_lambda,
            chosen_lengthscale: search.chosen_lengthscale,
            search,
            test,
            train_seconds,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_resolve_and_validate() {
        for name in PRESET_NAMES {
            if name == "pde-desk" {
                assert!(pde_preset(name).is_ok());
                assert!(experiment_preset(name).is_err());
            } else {
                experiment_preset(name).unwrap().validate().unwrap();
                assert!(pde_preset(name).is_err());
            }
        }
        assert!(experiment_preset("nope").is_err());
    }

    #[test]
    fn lorenz96_presets_have_equal_segment_counts() {
        for name in ["lorenz96-16-desk", "lorenz96-128-desk"] {
            let cfg = experiment_preset(name).unwrap();
            let DatasetSource::Generate(g) = &cfg.dataset else { panic!() };
            let parts = split(&generate::<f64>(g).unwrap(), cfg.split, cfg.split_seed).unwrap();
            let segments: usize = parts.train.iter().map(|s| s.len() - 1).sum();
            assert_eq!(segments, 1000, "{name}");
        }
    }

    #[test]
    fn config_json_round_trip() {
        let cfg = experiment_preset("lorenz63-desk").unwrap();
        let text = serde_json::to_string(&cfg).unwrap();
        assert_eq!(serde_json::from_str::<ExperimentConfig>(&text).unwrap(), cfg);
    }
}
