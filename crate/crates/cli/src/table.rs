//! Trajectory CSVs exchanged between `predict` and `evaluate`.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use ock_core::datasets::{csv_header, read_csv, CsvOptions};
use ock_core::{PredictedTrajectory, SnapshotSeries};

use crate::config::ensure_parent;
use crate::error::{usage, CliResult};

/// Writes `series_id,t,x_1..x_d,diverged`. A diverged trajectory keeps its
/// rows up to the blow-up and carries `diverged = 1` on each of them.
pub fn write_predictions(path: &Path, preds: &[PredictedTrajectory<f64>], dim: usize) -> CliResult<()> {
    ensure_parent(path)?;
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "{},diverged", csv_header(dim))?;
    for p in preds {
        let flag = u8::from(p.diverged());
        for (t, x) in p.times.iter().zip(&p.states) {
            write!(w, "{},{t}", p.series_id)?;
            for v in x {
                write!(w, ",{v}")?;
            }
            writeln!(w, ",{flag}")?;
        }
    }
    w.flush()?;
    Ok(())
}

type Predictions = (Vec<SnapshotSeries<f64>>, BTreeMap<u64, bool>);

/// Reads a prediction CSV back into series plus per-series divergence
/// flags. A missing `diverged` column means no trajectory diverged.
pub fn read_predictions(path: &Path) -> CliResult<Predictions> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path)?;
    let header = rdr.headers()?.clone();
    let flag_col = header.iter().position(|h| h == "diverged");
    let mut kept = csv::WriterBuilder::new().from_writer(Vec::new());
    kept.write_record(header.iter().enumerate().filter(|(k, _)| Some(*k) != flag_col).map(|(_, h)| h))?;
    let mut flags = BTreeMap::new();
    for rec in rdr.records() {
        let rec = rec?;
        let id: u64 = match rec.get(0).map(str::parse) {
            Some(Ok(id)) => id,
            _ => return usage(format!("{}: bad series_id in row {:?}", path.display(), rec)),
        };
        let diverged = match flag_col.map(|k| rec.get(k).unwrap_or("")) {
            None | Some("0") | Some("false") => false,
            Some("1") | Some("true") => true,
            Some(other) => return usage(format!("{}: bad diverged flag '{other}'", path.display())),
        };
        *flags.entry(id).or_insert(false) |= diverged;
        kept.write_record(rec.iter().enumerate().filter(|(k, _)| Some(*k) != flag_col).map(|(_, v)| v))?;
    }
    let bytes = kept.into_inner().map_err(|e| crate::error::CliError::Usage(e.to_string()))?;
    let series = read_csv(bytes.as_slice(), CsvOptions::default())?;
    Ok((series, flags))
}

pub fn fmt_value(v: f64) -> String {
    if v.is_nan() {
        String::new()
    } else {
        format!("{v}")
    }
}
