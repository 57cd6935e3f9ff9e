use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use log::info;
use ock_core::datasets::split;
use ock_core::experiment::{experiment_preset, run_training, DatasetSource, ExperimentConfig};
use ock_core::kernels::KernelSpec;
use ock_core::learner::FitPath;
use ock_core::model_io::save_model;
use ock_core::tuning::{grid_search, GridScore, SearchConfig, SearchReport, DEFAULT_LAMBDAS, DEFAULT_LENGTHSCALE_FACTORS};
use serde::Serialize;

use crate::config::{ensure_parent, layered, parse_list, read_json, write_json};
use crate::error::{usage, CliResult};
use crate::table::fmt_value;
use crate::ExperimentArgs;

/// Base experiment when no preset is named: the dataset must come from
/// `--data` or the config file.
fn custom_experiment() -> ExperimentConfig {
    ExperimentConfig {
        dataset: DatasetSource::Csv { path: PathBuf::new() },
        kernel: KernelSpec::Gaussian { lengthscale: 1.0 },
        path: FitPath::Implicit,
        lambdas: DEFAULT_LAMBDAS.to_vec(),
        lengthscales: DEFAULT_LENGTHSCALE_FACTORS.to_vec(),
        relative_lengthscales: true,
        standardize: false,
        split: [0.6, 0.2, 0.2],
        split_seed: 0,
        substeps: 10,
        output_dir: PathBuf::from("out/train"),
    }
}

/// Experiment after preset, config file and flags, in rising priority.
pub fn resolve(a: &ExperimentArgs) -> CliResult<ExperimentConfig> {
    let base = match &a.preset {
        Some(name) => experiment_preset(name)?,
        None => custom_experiment(),
    };
    let overlay = a.config.as_deref().map(read_json).transpose()?;
    let mut cfg = layered(&base, overlay)?;
    if let Some(p) = &a.data {
        cfg.dataset = DatasetSource::Csv { path: p.clone() };
    }
    if let Some(k) = &a.kernel {
        let l = cfg.kernel.lengthscale();
        cfg.kernel = match k.as_str() {
            "gaussian" => KernelSpec::Gaussian { lengthscale: l },
            "rff" | "random_fourier" => match cfg.kernel {
                KernelSpec::RandomFourier { .. } => cfg.kernel,
                KernelSpec::Gaussian { .. } => KernelSpec::RandomFourier {
                    lengthscale: l,
                    features: 100,
                    seed: 0,
                },
            },
            other => return usage(format!("unknown kernel '{other}'; use gaussian or rff")),
        };
    }
    if a.features.is_some() || a.kernel_seed.is_some() {
        let KernelSpec::RandomFourier { lengthscale, features, seed } = cfg.kernel else {
            return usage("--features and --kernel-seed need the rff kernel");
        };
        cfg.kernel = KernelSpec::RandomFourier {
            lengthscale,
            features: a.features.unwrap_or(features),
            seed: a.kernel_seed.unwrap_or(seed),
        };
    }
    if let Some(p) = &a.path {
        cfg.path = FitPath::parse(p)?;
    }
    if let Some(s) = &a.lambdas {
        cfg.lambdas = parse_list(s)?;
    }
    if let Some(s) = &a.lengthscales {
        cfg.lengthscales = parse_list(s)?;
    }
    if let Some(v) = a.relative_lengthscales {
        cfg.relative_lengthscales = v;
    }
    if let Some(v) = a.standardize {
        cfg.standardize = v;
    }
    if let Some(s) = &a.split {
        let f = parse_list(s)?;
        let [tr, va, te] = f[..] else {
            return usage(format!("--split needs three fractions, got {}", f.len()));
        };
        cfg.split = [tr, va, te];
    }
    if let Some(v) = a.split_seed {
        cfg.split_seed = v;
    }
    if let Some(v) = a.substeps {
        cfg.substeps = v;
    }
    if let Some(d) = &a.output_dir {
        cfg.output_dir = d.clone();
    }
    if let DatasetSource::Csv { path } = &cfg.dataset {
        if path.as_os_str().is_empty() {
            return usage("no dataset: pass --data, a preset, or a config with a dataset");
        }
        if !path.exists() {
            return usage(format!("dataset {} does not exist", path.display()));
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

fn write_scores(path: &Path, scores: &[GridScore]) -> CliResult<()> {
    ensure_parent(path)?;
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "lambda,lengthscale,validation_err,fit_seconds,failure")?;
    for s in scores {
        let failure = s.failure.as_deref().unwrap_or("").replace([',', '\n'], " ");
        writeln!(
            w,
            "{},{},{},{},{failure}",
            s.lambda,
            s.lengthscale,
            fmt_value(s.validation_err),
            s.fit_seconds
        )?;
    }
    w.flush()?;
    Ok(())
}

pub fn run_train(a: &ExperimentArgs) -> CliResult<()> {
    let cfg = resolve(a)?;
    info!("training into {}", cfg.output_dir.display());
    let (model, report) = run_training(&cfg)?;
    let dir = &cfg.output_dir;
    std::fs::create_dir_all(dir)?;
    save_model(&dir.join("model.json"), &model)?;
    write_json(&dir.join("train_report.json"), &report)?;
    write_scores(&dir.join("grid_scores.csv"), &report.search.scores)?;
    println!(
        "chosen lambda {} lengthscale {} ({} train, {} validation, {} test series) in {:.3} s",
        report.chosen_lambda,
        report.chosen_lengthscale,
        report.n_train,
        report.n_validation,
        report.n_test,
        report.train_seconds
    );
    if let Some(t) = &report.test {
        println!(
            "test Err mean {} median {}; null mean {}",
            t.err.mean, t.err.median, t.null_err.mean
        );
    }
    println!("wrote {}", dir.display());
    Ok(())
}

#[derive(Debug, Serialize)]
struct TuneReport<'a> {
    config: &'a ExperimentConfig,
    n_train: usize,
    n_validation: usize,
    search: SearchReport,
}

pub fn run_tune(a: &ExperimentArgs) -> CliResult<()> {
    let cfg = resolve(a)?;
    let data = cfg.load_dataset()?;
    let parts = split(&data, cfg.split, cfg.split_seed)?;
    let space = cfg.search_space(&parts.train)?;
    if !space.is_single() && parts.validation.is_empty() {
        return usage("tuning a grid needs a validation share in --split");
    }
    let search_cfg = SearchConfig {
        kernel: cfg.kernel,
        path: cfg.path,
        standardize: cfg.standardize,
        substeps: cfg.substeps,
        space,
    };
    let (_, search) = grid_search(&parts.train, &parts.validation, &search_cfg)?;
    let dir = &cfg.output_dir;
    std::fs::create_dir_all(dir)?;
    write_scores(&dir.join("grid_scores.csv"), &search.scores)?;
    println!(
        "chosen lambda {} lengthscale {} over {} grid points",
        search.chosen_lambda,
        search.chosen_lengthscale,
        search.scores.len()
    );
    let report = TuneReport {
        config: &cfg,
        n_train: parts.train.len(),
        n_validation: parts.validation.len(),
        search,
    };
    write_json(&dir.join("tune_report.json"), &report)?;
    println!("wrote {}", dir.display());
    Ok(())
}
