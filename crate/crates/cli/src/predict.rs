use std::collections::BTreeSet;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use ock_core::datasets::{read_csv, CsvOptions};
use ock_core::experiment::{Evaluation, TrajectoryScore};
use ock_core::inference::{err_metric, integrate, null_model_err, one_step_err};
use ock_core::model_io::load_model;
use ock_core::{OckModel, PredictedTrajectory, SnapshotSeries, VectorField};
use serde::Serialize;

use crate::config::{parse_list, write_json};
use crate::error::{usage, CliResult};
use crate::table::{fmt_value, read_predictions, write_predictions};
use crate::{EvaluateArgs, PredictArgs};

fn load(path: &Path) -> CliResult<OckModel<f64>> {
    if !path.exists() {
        return usage(format!("model {} does not exist", path.display()));
    }
    Ok(load_model(path)?)
}

/// Shared output times from the flags, if any were given.
fn time_grid(a: &PredictArgs) -> CliResult<Option<Vec<f64>>> {
    if let Some(s) = &a.times {
        return Ok(Some(parse_list(s)?));
    }
    if a.t_start.is_none() && a.t_end.is_none() && a.n_times.is_none() {
        return Ok(None);
    }
    let (Some(t1), Some(n)) = (a.t_end, a.n_times) else {
        return usage("an even time grid needs --t-end and --n-times");
    };
    let t0 = a.t_start.unwrap_or(0.0);
    if n < 2 || !(t1 > t0) {
        return usage("time grid needs --n-times >= 2 and --t-end > --t-start");
    }
    let h = (t1 - t0) / (n - 1) as f64;
    Ok(Some((0..n).map(|i| if i + 1 == n { t1 } else { t0 + h * i as f64 }).collect()))
}

pub fn run_predict(a: &PredictArgs) -> CliResult<()> {
    let model = load(&a.model)?;
    let dim = VectorField::<f64>::dim(&model);
    let text = fs::read_to_string(&a.initial)
        .map_err(|e| crate::error::CliError::Usage(format!("cannot read {}: {e}", a.initial.display())))?;
    let has_t = text.lines().next().is_some_and(|h| h.split(',').nth(1).map(str::trim) == Some("t"));
    let opts = CsvOptions {
        synthesize_dt: (!has_t).then_some(1.0),
    };
    let initial: Vec<SnapshotSeries<f64>> = read_csv(text.as_bytes(), opts)?;
    if let Some(s) = initial.iter().find(|s| s.dim() != dim) {
        return usage(format!(
            "initial condition of series {} has dimension {}, model has {dim}",
            s.series_id,
            s.dim()
        ));
    }
    let grid = time_grid(a)?;
    let mut preds: Vec<PredictedTrajectory<f64>> = Vec::with_capacity(initial.len());
    for s in &initial {
        let times = match &grid {
            Some(g) => g.clone(),
            None if has_t && s.len() >= 2 => s.times.clone(),
            None => return usage("no time grid: pass --times or --t-end with --n-times"),
        };
        let mut p = integrate(&model, s.state(0), &times, a.substeps)?;
        p.series_id = s.series_id;
        preds.push(p);
    }
    write_predictions(&a.output, &preds, dim)?;
    let diverged = preds.iter().filter(|p| p.diverged()).count();
    println!("wrote {} trajectories to {} ({diverged} diverged)", preds.len(), a.output.display());
    Ok(())
}

#[derive(Debug, Serialize)]
struct EvaluationReport<'a> {
    truth: &'a Path,
    pred: &'a Path,
    model: Option<&'a Path>,
    substeps: usize,
    #[serde(flatten)]
    evaluation: &'a Evaluation,
}

fn write_evaluation_csv(path: &Path, ev: &Evaluation) -> CliResult<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "series_id,err,one_step_err,null_err,diverged")?;
    for t in &ev.trajectories {
        writeln!(
            w,
            "{},{},{},{},{}",
            t.series_id,
            fmt_value(t.err),
            fmt_value(t.one_step_err),
            fmt_value(t.null_err),
            u8::from(t.diverged)
        )?;
    }
    writeln!(
        w,
        "mean,{},{},{},{}",
        fmt_value(ev.err.mean),
        fmt_value(ev.one_step_err.mean),
        fmt_value(ev.null_err.mean),
        ev.err.diverged
    )?;
    writeln!(
        w,
        "median,{},{},{},{}",
        fmt_value(ev.err.median),
        fmt_value(ev.one_step_err.median),
        fmt_value(ev.null_err.median),
        ev.err.diverged
    )?;
    w.flush()?;
    Ok(())
}

pub fn run_evaluate(a: &EvaluateArgs) -> CliResult<()> {
    for p in [&a.truth, &a.pred] {
        if !p.exists() {
            return usage(format!("{} does not exist", p.display()));
        }
    }
    let truth: Vec<SnapshotSeries<f64>> = ock_core::datasets::load_csv(&a.truth, CsvOptions::default())?;
    let (preds, flags) = read_predictions(&a.pred)?;
    let truth_ids: BTreeSet<u64> = truth.iter().map(|s| s.series_id).collect();
    let pred_ids: BTreeSet<u64> = flags.keys().copied().collect();
    if truth_ids != pred_ids {
        let missing: Vec<_> = truth_ids.symmetric_difference(&pred_ids).collect();
        return usage(format!("series ids differ between truth and prediction: {missing:?}"));
    }
    let model = a.model.as_deref().map(load).transpose()?;
    let mut scores = Vec::with_capacity(truth.len());
    for s in &truth {
        let p = preds.iter().find(|p| p.series_id == s.series_id);
        let diverged = flags[&s.series_id];
        let pred = PredictedTrajectory {
            series_id: s.series_id,
            times: if diverged { s.times.clone() } else { p.map_or_else(Vec::new, |p| p.times.clone()) },
            states: p.map_or_else(Vec::new, |p| (0..p.len()).map(|i| p.state(i).to_vec()).collect()),
            diverged_at: diverged.then(|| p.map_or(0, SnapshotSeries::len)),
        };
        if !diverged && pred.states.first().is_some_and(|x| x.len() != s.dim()) {
            return usage(format!("series {} has different dimensions in truth and prediction", s.series_id));
        }
        let one_step = match &model {
            Some(m) => one_step_err(s, m, a.substeps)?,
            None => f64::NAN,
        };
        scores.push(TrajectoryScore {
            series_id: s.series_id,
            err: err_metric(s, &pred)?,
            one_step_err: one_step,
            null_err: null_model_err(s)?,
            diverged,
        });
    }
    let ev = Evaluation::from_scores(scores);
    fs::create_dir_all(&a.output_dir)?;
    write_evaluation_csv(&a.output_dir.join("evaluation.csv"), &ev)?;
    let report = EvaluationReport {
        truth: &a.truth,
        pred: &a.pred,
        model: a.model.as_deref(),
        substeps: a.substeps,
        evaluation: &ev,
    };
    write_json(&a.output_dir.join("evaluation.json"), &report)?;
    println!(
        "Err mean {} median {}; null mean {} median {}",
        ev.err.mean, ev.err.median, ev.null_err.mean, ev.null_err.median
    );
    println!("wrote {}", a.output_dir.display());
    Ok(())
}
