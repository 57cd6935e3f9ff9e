//! Snapshot series, synthetic generators, CSV ingestion and splits.

use std::collections::{BTreeMap, HashSet};
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, OckError, Result};
use crate::inference::VectorField;
use crate::linalg::Matrix;
use crate::scalar::Real;

/// One observed trajectory: strictly increasing times with one state row per
/// time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct SnapshotSeries<T> {
    pub series_id: u64,
    pub times: Vec<T>,
    pub states: Matrix<T>,
}

impl<T: Real> SnapshotSeries<T> {
    pub fn new(series_id: u64, times: Vec<T>, states: Matrix<T>) -> Result<Self> {
        let s = Self {
            series_id,
            times,
            states,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.times.len() != self.states.nrows() {
            return invalid(format!(
                "series {}: {} times but {} states",
                self.series_id,
                self.times.len(),
                self.states.nrows()
            ));
        }
        if self.times.iter().any(|t| !t.is_finite()) || !self.states.is_finite() {
            return invalid(format!("series {} holds non-finite values", self.series_id));
        }
        if self.times.windows(2).any(|w| !(w[1] > w[0])) {
            return invalid(format!(
                "series {} times are not strictly increasing",
                self.series_id
            ));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.states.ncols()
    }

    pub fn state(&self, i: usize) -> &[T] {
        self.states.row(i)
    }
}

/// Synthetic system to simulate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum System {
    Fhn,
    Lorenz63,
    Lorenz96,
}

impl System {
    pub fn parse(name: &str) -> Result<Self> {
        match name.to_ascii_lowercase().as_str() {
            "fhn" | "fitzhugh-nagumo" => Ok(Self::Fhn),
            "lorenz63" | "l63" => Ok(Self::Lorenz63),
            "lorenz96" | "l96" => Ok(Self::Lorenz96),
            other => invalid(format!("unknown system '{other}'")),
        }
    }

    pub fn default_noise(self) -> f64 {
        match self {
            Self::Fhn => 0.12,
            Self::Lorenz63 => 0.5,
            Self::Lorenz96 => 0.0,
        }
    }

    pub fn default_params(self) -> BTreeMap<String, f64> {
        let pairs: &[(&str, f64)] = match self {
            Self::Fhn => &[("a", 0.7), ("b", 0.8), ("tau", 12.5), ("ri", 0.5)],
            Self::Lorenz63 => &[("sigma", 10.0), ("rho", 28.0), ("beta", 8.0 / 3.0)],
            Self::Lorenz96 => &[("forcing", 8.0)],
        };
        pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }
}

/// Full description of a synthetic dataset; serialized as the metadata
/// sidecar next to generated CSVs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorConfig {
    pub system: System,
    pub dimension: usize,
    pub params: BTreeMap<String, f64>,
    pub noise_std: f64,
    pub n_trajectories: usize,
    pub n_snapshots: usize,
    pub t_span: (f64, f64),
    /// Per-dimension `(low, high)` bounds for uniformly drawn initial states.
    pub init_box: Vec<(f64, f64)>,
    pub seed: u64,
    /// RK4 substeps per output interval.
    pub substeps: usize,
}

impl GeneratorConfig {
    /// Full-size defaults for a system; the desk presets shrink the
    /// trajectory counts.
    pub fn new(system: System) -> Self {
        let (dimension, n_traj, n_snap, t_span) = match system {
            System::Fhn => (2, 150, 201, (0.0, 50.0)),
            System::Lorenz63 => (3, 150, 201, (0.0, 2.0)),
            System::Lorenz96 => (16, 100, 243, (0.0, 5.0)),
        };
        let mut cfg = Self {
            system,
            dimension,
            params: system.default_params(),
            noise_std: system.default_noise(),
            n_trajectories: n_traj,
            n_snapshots: n_snap,
            t_span,
            init_box: Vec::new(),
            seed: 0,
            substeps: 20,
        };
        cfg.init_box = cfg.default_init_box();
        cfg
    }

    /// Same system at a different Lorenz96 dimension, resetting the box.
    pub fn with_dimension(mut self, dimension: usize) -> Self {
        self.dimension = dimension;
        self.init_box = self.default_init_box();
        self
    }

    pub fn default_init_box(&self) -> Vec<(f64, f64)> {
        match self.system {
            System::Fhn => vec![(-2.0, 2.0); 2],
            System::Lorenz63 => vec![(-10.0, 10.0), (-10.0, 10.0), (10.0, 30.0)],
            System::Lorenz96 => {
                let f = self.param("forcing");
                vec![(f - 1.0, f + 1.0); self.dimension]
            }
        }
    }

    fn param(&self, key: &str) -> f64 {
        self.params
            .get(key)
            .copied()
            .or_else(|| self.system.default_params().get(key).copied())
            .unwrap_or(f64::NAN)
    }

    pub fn validate(&self) -> Result<()> {
        let expected = match self.system {
            System::Fhn => Some(2),
            System::Lorenz63 => Some(3),
            System::Lorenz96 => None,
        };
        if let Some(d) = expected {
            if self.dimension != d {
                return invalid(format!("{:?} has dimension {d}, got {}", self.system, self.dimension));
            }
        } else if self.dimension < 4 {
            return invalid(format!(
                "Lorenz96 needs dimension at least 4, got {}",
                self.dimension
            ));
        }
        if !(self.noise_std >= 0.0) || !self.noise_std.is_finite() {
            return invalid("noise_std must be a nonnegative real");
        }
        if self.n_snapshots < 2 || self.n_trajectories == 0 {
            return invalid("need at least one trajectory with two snapshots");
        }
        if !(self.t_span.1 > self.t_span.0) {
            return invalid("t_span must be increasing");
        }
        if self.substeps == 0 {
            return invalid("substeps must be at least 1");
        }
        if self.init_box.len() != self.dimension
            || self.init_box.iter().any(|(lo, hi)| !(hi >= lo) || !lo.is_finite() || !hi.is_finite())
        {
            return invalid("init_box needs one finite (low, high) pair per dimension");
        }
        for (k, v) in &self.params {
            if !v.is_finite() {
                return invalid(format!("parameter {k} is not finite"));
            }
        }
        if self.system == System::Fhn && !(self.param("tau") != 0.0) {
            return invalid("FHN tau must be nonzero");
        }
        Ok(())
    }

    pub fn field<T: Real>(&self) -> Result<SystemField<T>> {
        self.validate()?;
        Ok(match self.system {
            System::Fhn => SystemField::Fhn {
                a: T::lit(self.param("a")),
                b: T::lit(self.param("b")),
                tau: T::lit(self.param("tau")),
                ri: T::lit(self.param("ri")),
            },
            System::Lorenz63 => SystemField::Lorenz63 {
                sigma: T::lit(self.param("sigma")),
                rho: T::lit(self.param("rho")),
                beta: T::lit(self.param("beta")),
            },
            System::Lorenz96 => SystemField::Lorenz96 {
                dim: self.dimension,
                forcing: T::lit(self.param("forcing")),
            },
        })
    }

    /// Uniform output instants over `t_span`.
    pub fn sample_times<T: Real>(&self) -> Vec<T> {
        let (t0, t1) = self.t_span;
        let n = self.n_snapshots;
        (0..n)
            .map(|i| T::lit(t0 + (t1 - t0) * i as f64 / (n - 1) as f64))
            .collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn write_metadata(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json())?;
        Ok(())
    }
}

/// Drift of one of the built-in systems.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SystemField<T> {
    /// `v̇ = v − v³/3 − w + RI`, `τ ẇ = v + a − b w`.
    Fhn { a: T, b: T, tau: T, ri: T },
    Lorenz63 { sigma: T, rho: T, beta: T },
    /// `ẋₖ = (xₖ₊₁ − xₖ₋₂) xₖ₋₁ − xₖ + F`, indices cyclic.
    Lorenz96 { dim: usize, forcing: T },
}

impl<T: Real> VectorField<T> for SystemField<T> {
    fn dim(&self) -> usize {
        match self {
            Self::Fhn { .. } => 2,
            Self::Lorenz63 { .. } => 3,
            Self::Lorenz96 { dim, .. } => *dim,
        }
    }

    fn eval_into(&self, x: &[T], out: &mut [T]) {
        match *self {
            Self::Fhn { a, b, tau, ri } => {
                let (v, w) = (x[0], x[1]);
                out[0] = v - v * v * v / T::lit(3.0) - w + ri;
                out[1] = (v + a - b * w) / tau;
            }
            Self::Lorenz63 { sigma, rho, beta } => {
                out[0] = sigma * (x[1] - x[0]);
                out[1] = x[0] * (rho - x[2]) - x[1];
                out[2] = x[0] * x[1] - beta * x[2];
            }
            Self::Lorenz96 { dim, forcing } => {
                for k in 0..dim {
                    let next = x[(k + 1) % dim];
                    let prev = x[(k + dim - 1) % dim];
                    let prev2 = x[(k + dim - 2) % dim];
                    out[k] = (next - prev2) * prev - x[k] + forcing;
                }
            }
        }
    }
}

/// Noiseless RK4 simulation sampled exactly at `times`.
pub fn simulate<T: Real, F: VectorField<T>>(
    field: &F,
    x0: &[T],
    times: &[T],
    substeps: usize,
) -> Result<Matrix<T>> {
    let traj = crate::inference::integrate(field, x0, times, substeps)?;
    if let Some(k) = traj.diverged_at {
        return Err(OckError::Numerical {
            message: "simulation diverged".into(),
            diagnostics: format!("first non-finite state at time index {k}"),
        });
    }
    Matrix::from_rows(&traj.states, x0.len())
}

/// Simulates every trajectory of `cfg` and adds observation noise.
///
/// Trajectory `i` draws its initial state and its noise from ChaCha8 stream
/// `i` of the configured seed, so trajectories are independent of one another
/// and of generation order.
pub fn generate<T: Real>(cfg: &GeneratorConfig) -> Result<Vec<SnapshotSeries<T>>> {
    let field = cfg.field::<T>()?;
    let times: Vec<T> = cfg.sample_times();
    let noise = if cfg.noise_std > 0.0 {
        Some(Normal::new(0.0, cfg.noise_std).map_err(|e| OckError::InvalidArgument(e.to_string()))?)
    } else {
        None
    };
    let mut out = Vec::with_capacity(cfg.n_trajectories);
    for i in 0..cfg.n_trajectories {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(i as u64);
        let x0: Vec<T> = cfg
            .init_box
            .iter()
            .map(|&(lo, hi)| T::lit(if hi > lo { rng.random_range(lo..hi) } else { lo }))
            .collect();
        let mut states = simulate(&field, &x0, &times, cfg.substeps)?;
        if let Some(noise) = &noise {
            for v in states.as_mut_slice() {
                *v += T::lit(noise.sample(&mut rng));
            }
        }
        out.push(SnapshotSeries::new(i as u64, times.clone(), states)?);
    }
    Ok(out)
}

fn expect_system(cfg: &GeneratorConfig, system: System) -> Result<()> {
    if cfg.system != system {
        return invalid(format!("expected a {system:?} config, got {:?}", cfg.system));
    }
    Ok(())
}

pub fn gen_fhn<T: Real>(cfg: &GeneratorConfig) -> Result<Vec<SnapshotSeries<T>>> {
    expect_system(cfg, System::Fhn)?;
    generate(cfg)
}

pub fn gen_lorenz63<T: Real>(cfg: &GeneratorConfig) -> Result<Vec<SnapshotSeries<T>>> {
    expect_system(cfg, System::Lorenz63)?;
    generate(cfg)
}

pub fn gen_lorenz96<T: Real>(cfg: &GeneratorConfig) -> Result<Vec<SnapshotSeries<T>>> {
    expect_system(cfg, System::Lorenz96)?;
    generate(cfg)
}

/// Options for [`load_csv`].
#[derive(Debug, Clone, Copy, Default)]
pub struct CsvOptions {
    /// When the file has no `t` column, assign times `0, Δt, 2Δt, …` in row
    /// order within each series.
    pub synthesize_dt: Option<f64>,
}

pub fn load_csv<T: Real>(path: &Path, opts: CsvOptions) -> Result<Vec<SnapshotSeries<T>>> {
    read_csv(File::open(path)?, opts)
}

/// Parses snapshot rows `series_id,t,x_1,…,x_d`, groups them by series and
/// sorts each series by time.
pub fn read_csv<T: Real, R: Read>(reader: R, opts: CsvOptions) -> Result<Vec<SnapshotSeries<T>>> {
    let mut rdr = csv::ReaderBuilder::new()
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header = rdr
        .headers()
        .map_err(|e| OckError::Parse {
            line: 1,
            message: e.to_string(),
        })?
        .clone();
    if header.get(0) != Some("series_id") {
        return Err(OckError::Parse {
            line: 1,
            message: "first column must be series_id".into(),
        });
    }
    let has_t = header.get(1) == Some("t");
    if !has_t && opts.synthesize_dt.is_none() {
        return Err(OckError::Parse {
            line: 1,
            message: "no t column; pass a fixed time step to synthesize times".into(),
        });
    }
    let first_state = if has_t { 2 } else { 1 };
    let d = header.len().saturating_sub(first_state);
    if d == 0 {
        return Err(OckError::Parse {
            line: 1,
            message: "no state columns".into(),
        });
    }

    // series id -> rows of (t, state, line)
    let mut groups: BTreeMap<u64, Vec<(f64, Vec<T>, usize)>> = BTreeMap::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| OckError::Parse {
            line: e.position().map_or(0, |p| p.line() as usize),
            message: e.to_string(),
        })?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        let perr = |message: String| OckError::Parse { line, message };
        if rec.len() != header.len() {
            return Err(perr(format!("expected {} fields, found {}", header.len(), rec.len())));
        }
        let id: u64 = rec[0]
            .parse()
            .map_err(|_| perr(format!("bad series_id '{}'", &rec[0])))?;
        let parse = |s: &str| -> Result<f64> {
            let v: f64 = s.parse().map_err(|_| perr(format!("bad number '{s}'")))?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(perr(format!("non-finite value '{s}'")))
            }
        };
        let group = groups.entry(id).or_default();
        let t = if has_t {
            parse(&rec[1])?
        } else {
            opts.synthesize_dt.unwrap_or(1.0) * group.len() as f64
        };
        let state = (first_state..rec.len())
            .map(|k| parse(&rec[k]).map(T::lit))
            .collect::<Result<Vec<T>>>()?;
        group.push((t, state, line));
    }

    let mut out = Vec::with_capacity(groups.len());
    for (id, mut rows) in groups {
        rows.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut seen = HashSet::new();
        for (t, _, line) in &rows {
            if !seen.insert(t.to_bits()) {
                return Err(OckError::Parse {
                    line: *line,
                    message: format!("duplicate time {t} in series {id}"),
                });
            }
        }
        let times = rows.iter().map(|r| T::lit(r.0)).collect();
        let states: Vec<Vec<T>> = rows.into_iter().map(|r| r.1).collect();
        out.push(SnapshotSeries::new(id, times, Matrix::from_rows(&states, d)?)?);
    }
    Ok(out)
}

pub fn csv_header(d: usize) -> String {
    let mut h = String::from("series_id,t");
    for k in 1..=d {
        h.push_str(&format!(",x_{k}"));
    }
    h
}

/// Writes series with shortest round-trip float formatting, so a reload is
/// bit-exact.
pub fn write_csv<T: Real, W: Write>(mut w: W, series: &[SnapshotSeries<T>]) -> Result<()> {
    let d = series.first().map_or(0, SnapshotSeries::dim);
    writeln!(w, "{}", csv_header(d))?;
    for s in series {
        for i in 0..s.len() {
            write!(w, "{},{}", s.series_id, s.times[i])?;
            for v in s.state(i) {
                write!(w, ",{v}")?;
            }
            writeln!(w)?;
        }
    }
    Ok(())
}

pub fn save_csv<T: Real>(path: &Path, series: &[SnapshotSeries<T>]) -> Result<()> {
    let mut f = std::io::BufWriter::new(File::create(path)?);
    write_csv(&mut f, series)?;
    f.flush()?;
    Ok(())
}

/// Train, validation and test parts of a dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct Split<T> {
    pub train: Vec<SnapshotSeries<T>>,
    pub validation: Vec<SnapshotSeries<T>>,
    pub test: Vec<SnapshotSeries<T>>,
}

/// Part sizes by largest remainder, with every positive fraction receiving
/// at least one series.
fn part_sizes(n: usize, fractions: [f64; 3]) -> Result<[usize; 3]> {
    if fractions.iter().any(|f| !(*f >= 0.0) || !f.is_finite()) {
        return invalid("split fractions must be nonnegative");
    }
    let total: f64 = fractions.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return invalid(format!("split fractions sum to {total}, expected 1"));
    }
    let parts = fractions.iter().filter(|f| **f > 0.0).count();
    if n < parts {
        return invalid(format!("cannot split {n} series into {parts} nonempty parts"));
    }
    let raw: Vec<f64> = fractions.iter().map(|f| f * n as f64).collect();
    let mut sizes = [0usize; 3];
    for k in 0..3 {
        // tolerate representation error such as 0.7 * 10 = 7.000000000000001
        sizes[k] = (raw[k] + 1e-9).floor() as usize;
    }
    let mut left = n - sizes.iter().sum::<usize>();
    let mut order: Vec<usize> = (0..3).collect();
    order.sort_by(|&a, &b| (raw[b] - sizes[b] as f64).total_cmp(&(raw[a] - sizes[a] as f64)));
    for &k in order.iter().cycle() {
        if left == 0 {
            break;
        }
        if fractions[k] > 0.0 {
            sizes[k] += 1;
            left -= 1;
        }
    }
    for k in 0..3 {
        if fractions[k] > 0.0 && sizes[k] == 0 {
            let donor = (0..3).max_by_key(|&j| sizes[j]).expect("three parts");
            sizes[donor] -= 1;
            sizes[k] = 1;
        }
    }
    Ok(sizes)
}

/// Partitions whole series into train/validation/test after a seeded shuffle.
pub fn split<T: Real>(series: &[SnapshotSeries<T>], fractions: [f64; 3], seed: u64) -> Result<Split<T>> {
    let sizes = part_sizes(series.len(), fractions)?;
    let mut idx: Vec<usize> = (0..series.len()).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let pick = |r: std::ops::Range<usize>| -> Vec<SnapshotSeries<T>> {
        idx[r].iter().map(|&i| series[i].clone()).collect()
    };
    Ok(Split {
        train: pick(0..sizes[0]),
        validation: pick(sizes[0]..sizes[0] + sizes[1]),
        test: pick(sizes[0] + sizes[1]..series.len()),
    })
}
