use std::path::PathBuf;

use log::info;
use ock_core::datasets::{generate, save_csv, GeneratorConfig, System};
use ock_core::experiment::{experiment_preset, DatasetSource};
use ock_core::SnapshotSeries;

use crate::config::{ensure_parent, layered, read_json};
use crate::error::{usage, CliResult};
use crate::GenerateArgs;

/// Generator after preset, config file and flags, in rising priority.
pub fn resolve(a: &GenerateArgs) -> CliResult<GeneratorConfig> {
    let preset = match &a.preset {
        Some(name) => match experiment_preset(name)?.dataset {
            DatasetSource::Generate(g) => Some(g),
            DatasetSource::Csv { .. } => return usage(format!("preset {name} reads a CSV dataset")),
        },
        None => None,
    };
    let overlay = a.config.as_deref().map(read_json).transpose()?;
    let from_config = overlay
        .as_ref()
        .and_then(|v| v.get("system"))
        .map(|v| serde_json::from_value::<System>(v.clone()))
        .transpose()?;
    let system = match (&a.system, from_config, &preset) {
        (Some(s), _, _) => System::parse(s)?,
        (None, Some(s), _) => s,
        (None, None, Some(p)) => p.system,
        (None, None, None) => return usage("pass --system, --preset, or a config naming the system"),
    };
    // a preset for a different system is ignored
    let base = match preset {
        Some(p) if p.system == system => p,
        _ => GeneratorConfig::new(system),
    };
    let mut cfg = layered(&base, overlay)?;
    if let Some(d) = a.dim {
        if system != System::Lorenz96 && d != cfg.dimension {
            return usage(format!("{system:?} has fixed dimension {}", cfg.dimension));
        }
        cfg = cfg.with_dimension(d);
    }
    if let Some(v) = a.seed {
        cfg.seed = v;
    }
    if let Some(v) = a.trajectories {
        cfg.n_trajectories = v;
    }
    if let Some(v) = a.snapshots {
        cfg.n_snapshots = v;
    }
    if let Some(v) = a.t_start {
        cfg.t_span.0 = v;
    }
    if let Some(v) = a.t_end {
        cfg.t_span.1 = v;
    }
    if let Some(v) = a.noise {
        cfg.noise_std = v;
    }
    if let Some(v) = a.substeps {
        cfg.substeps = v;
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn metadata_path(output: &std::path::Path) -> PathBuf {
    output.with_extension("meta.json")
}

pub fn run(a: &GenerateArgs) -> CliResult<()> {
    let cfg = resolve(a)?;
    let data: Vec<SnapshotSeries<f64>> = generate(&cfg)?;
    ensure_parent(&a.output)?;
    save_csv(&a.output, &data)?;
    let meta = metadata_path(&a.output);
    cfg.write_metadata(&meta)?;
    info!("{} series of {} snapshots", data.len(), cfg.n_snapshots);
    println!("wrote {} and {}", a.output.display(), meta.display());
    Ok(())
}
