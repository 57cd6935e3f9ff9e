use std::fs::{self, File};
use std::io::BufWriter;
use std::time::Instant;

use ock_core::experiment::{pde_preset, PdeStudyConfig};
use ock_core::pde::{loglog_slope, pde_study, write_study_csv, StudyRow};
use serde::Serialize;

use crate::config::{layered, parse_sizes, read_json, write_json};
use crate::error::{usage, CliResult};
use crate::PdeStudyArgs;

pub fn resolve(a: &PdeStudyArgs) -> CliResult<PdeStudyConfig> {
    let base = pde_preset(&a.preset)?;
    let overlay = a.config.as_deref().map(read_json).transpose()?;
    let mut cfg = layered(&base, overlay)?;
    if let Some(s) = &a.sizes {
        cfg.sizes = parse_sizes(s)?;
    }
    let fit = &mut cfg.fit;
    if let Some(v) = a.features_alpha {
        fit.features_alpha = v;
    }
    if let Some(v) = a.features_f {
        fit.features_f = v;
    }
    if let Some(v) = a.lengthscale_alpha {
        fit.lengthscale_alpha = v;
    }
    if let Some(v) = a.lengthscale_f {
        fit.lengthscale_f = v;
    }
    if let Some(v) = a.lambda1 {
        fit.lambda1 = v;
    }
    if let Some(v) = a.lambda2 {
        fit.lambda2 = v;
    }
    if let Some(v) = a.seed {
        fit.seed = v;
    }
    if let Some(d) = &a.output_dir {
        cfg.output_dir = d.clone();
    }
    if cfg.sizes.is_empty() {
        return usage("no grid sizes given");
    }
    if let Some((n, m)) = cfg.sizes.iter().find(|(n, m)| *n < 2 || *m < 2) {
        return usage(format!("grid {n}x{m} is too small; both sides need at least 2 cells"));
    }
    Ok(cfg)
}

#[derive(Debug, Serialize)]
struct StudyReport<'a> {
    config: &'a PdeStudyConfig,
    rows: &'a [StudyRow],
    /// Log-log slopes of error against cell count `n·m`.
    alpha_slope: Option<f64>,
    f_slope: Option<f64>,
    seconds: f64,
}

pub fn run(a: &PdeStudyArgs) -> CliResult<()> {
    let cfg = resolve(a)?;
    let started = Instant::now();
    let rows = pde_study::<f64>(&cfg.sizes, &cfg.fit)?;
    let seconds = started.elapsed().as_secs_f64();
    let (alpha_slope, f_slope) = if rows.len() >= 2 {
        let cells: Vec<f64> = rows.iter().map(|r| (r.n * r.m) as f64).collect();
        let a: Vec<f64> = rows.iter().map(|r| r.alpha_err).collect();
        let f: Vec<f64> = rows.iter().map(|r| r.f_err).collect();
        (Some(loglog_slope(&cells, &a)?), Some(loglog_slope(&cells, &f)?))
    } else {
        (None, None)
    };
    fs::create_dir_all(&cfg.output_dir)?;
    write_study_csv(BufWriter::new(File::create(cfg.output_dir.join("study.csv"))?), &rows)?;
    let report = StudyReport {
        config: &cfg,
        rows: &rows,
        alpha_slope,
        f_slope,
        seconds,
    };
    write_json(&cfg.output_dir.join("study.json"), &report)?;
    for r in &rows {
        println!("{}x{}: alpha_err {:.4e} f_err {:.4e}", r.n, r.m, r.alpha_err, r.f_err);
    }
    if let (Some(sa), Some(sf)) = (alpha_slope, f_slope) {
        println!("log-log slope vs cell count: alpha {sa:.3}, f {sf:.3}");
    }
    println!("wrote {}", cfg.output_dir.display());
    Ok(())
}
