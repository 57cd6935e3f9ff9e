//! Field evaluation, fixed-step trajectory prediction and trajectory error
//! metrics.

use serde::{Deserialize, Serialize};

use crate::datasets::SnapshotSeries;
use crate::error::{invalid, Result};
use crate::linalg::Matrix;
use crate::scalar::Real;

/// Default RK4 substeps per output interval.
pub const DEFAULT_SUBSTEPS: usize = 10;

/// An autonomous vector field `ẋ = f(x)`.
pub trait VectorField<T: Real> {
    fn dim(&self) -> usize;

    /// Writes `f(x)` into `out`; both slices have length [`Self::dim`].
    fn eval_into(&self, x: &[T], out: &mut [T]);

    fn eval(&self, x: &[T]) -> Vec<T> {
        let mut out = vec![T::zero(); self.dim()];
        self.eval_into(x, &mut out);
        out
    }
}

impl<T: Real, V: VectorField<T> + ?Sized> VectorField<T> for &V {
    fn dim(&self) -> usize {
        (**self).dim()
    }

    fn eval_into(&self, x: &[T], out: &mut [T]) {
        (**self).eval_into(x, out)
    }
}

/// Adapts a closure `|x, out|` into a [`VectorField`].
pub struct FnField<F> {
    dim: usize,
    f: F,
}

impl<F> FnField<F> {
    pub fn new(dim: usize, f: F) -> Self {
        Self { dim, f }
    }
}

impl<T: Real, F: Fn(&[T], &mut [T])> VectorField<T> for FnField<F> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval_into(&self, x: &[T], out: &mut [T]) {
        (self.f)(x, out)
    }
}

/// The field that is identically zero: the null model.
#[derive(Debug, Clone, Copy)]
pub struct ZeroField(pub usize);

impl<T: Real> VectorField<T> for ZeroField {
    fn dim(&self) -> usize {
        self.0
    }

    fn eval_into(&self, _x: &[T], out: &mut [T]) {
        out.iter_mut().for_each(|o| *o = T::zero());
    }
}

/// Scratch buffers for classic fourth-order Runge–Kutta.
pub(crate) struct Rk4<T> {
    k1: Vec<T>,
    k2: Vec<T>,
    k3: Vec<T>,
    k4: Vec<T>,
    tmp: Vec<T>,
}

impl<T: Real> Rk4<T> {
    pub(crate) fn new(d: usize) -> Self {
        Self {
            k1: vec![T::zero(); d],
            k2: vec![T::zero(); d],
            k3: vec![T::zero(); d],
            k4: vec![T::zero(); d],
            tmp: vec![T::zero(); d],
        }
    }

    pub(crate) fn step<F: VectorField<T> + ?Sized>(&mut self, field: &F, x: &mut [T], h: T) {
        let half = h / T::lit(2.0);
        let sixth = h / T::lit(6.0);
        let two = T::lit(2.0);
        field.eval_into(x, &mut self.k1);
        for i in 0..x.len() {
            self.tmp[i] = x[i] + half * self.k1[i];
        }
        field.eval_into(&self.tmp, &mut self.k2);
        for i in 0..x.len() {
            self.tmp[i] = x[i] + half * self.k2[i];
        }
        field.eval_into(&self.tmp, &mut self.k3);
        for i in 0..x.len() {
            self.tmp[i] = x[i] + h * self.k3[i];
        }
        field.eval_into(&self.tmp, &mut self.k4);
        for i in 0..x.len() {
            x[i] += sixth * (self.k1[i] + two * self.k2[i] + two * self.k3[i] + self.k4[i]);
        }
    }
}

/// A predicted trajectory. When integration blew up, `states` stops before
/// the first non-finite state and `diverged_at` holds that time index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct PredictedTrajectory<T> {
    pub series_id: u64,
    pub times: Vec<T>,
    pub states: Vec<Vec<T>>,
    pub diverged_at: Option<usize>,
}

impl<T: Real> PredictedTrajectory<T> {
    pub fn diverged(&self) -> bool {
        self.diverged_at.is_some()
    }
}

/// Integrates `field` from `x0` at `times[0]` with `substeps` RK4 steps per
/// output interval, reporting states exactly at `times`.
pub fn integrate<T: Real, F: VectorField<T> + ?Sized>(
    field: &F,
    x0: &[T],
    times: &[T],
    substeps: usize,
) -> Result<PredictedTrajectory<T>> {
    if x0.len() != field.dim() {
        return invalid(format!(
            "initial condition has dimension {}, field has {}",
            x0.len(),
            field.dim()
        ));
    }
    if times.is_empty() {
        return invalid("time grid is empty");
    }
    if substeps == 0 {
        return invalid("substeps must be at least 1");
    }
    if times.windows(2).any(|w| !(w[1] > w[0])) {
        return invalid("time grid must be strictly increasing");
    }
    let mut rk = Rk4::new(x0.len());
    let mut x = x0.to_vec();
    let mut states = Vec::with_capacity(times.len());
    states.push(x.clone());
    let steps = T::from_count(substeps);
    let mut diverged_at = None;
    for (k, w) in times.windows(2).enumerate() {
        let h = (w[1] - w[0]) / steps;
        for _ in 0..substeps {
            rk.step(field, &mut x, h);
        }
        if x.iter().any(|v| !v.is_finite()) {
            diverged_at = Some(k + 1);
            break;
        }
        states.push(x.clone());
    }
    Ok(PredictedTrajectory {
        series_id: 0,
        times: times.to_vec(),
        states,
        diverged_at,
    })
}

/// `sqrt(Σ_{i≥2} (tᵢ − tᵢ₋₁) ‖yᵢ − ŷᵢ‖²)`.
///
/// A diverged prediction scores `+∞`.
pub fn err_metric<T: Real>(truth: &SnapshotSeries<T>, pred: &PredictedTrajectory<T>) -> Result<T> {
    if truth.times != pred.times {
        return invalid(format!(
            "prediction time grid does not match series {}",
            truth.series_id
        ));
    }
    if pred.diverged() {
        return Ok(T::infinity());
    }
    let rows: Vec<&[T]> = pred.states.iter().map(Vec::as_slice).collect();
    weighted_error(&truth.times, |i| truth.state(i), |i| rows[i])
}

fn weighted_error<'a, T: Real>(
    times: &[T],
    truth: impl Fn(usize) -> &'a [T],
    pred: impl Fn(usize) -> &'a [T],
) -> Result<T> {
    let mut acc = T::zero();
    for i in 1..times.len() {
        let (y, yh) = (truth(i), pred(i));
        if y.len() != yh.len() {
            return invalid("state dimension mismatch between truth and prediction");
        }
        let sq: T = y.iter().zip(yh).map(|(&a, &b)| (a - b) * (a - b)).sum();
        acc += (times[i] - times[i - 1]) * sq;
    }
    Ok(acc.sqrt())
}

/// Mean over consecutive pairs of the two-point error: each interval is
/// predicted from the true state at its start.
pub fn one_step_err<T: Real, F: VectorField<T> + ?Sized>(
    truth: &SnapshotSeries<T>,
    field: &F,
    substeps: usize,
) -> Result<T> {
    let n = truth.len();
    if n < 2 {
        return invalid("1-Err needs at least two snapshots");
    }
    let mut total = T::zero();
    for i in 1..n {
        let times = [truth.times[i - 1], truth.times[i]];
        let pred = integrate(field, truth.state(i - 1), &times, substeps)?;
        if pred.diverged() {
            return Ok(T::infinity());
        }
        let sq: T = truth
            .state(i)
            .iter()
            .zip(&pred.states[1])
            .map(|(&a, &b)| (a - b) * (a - b))
            .sum();
        total += ((times[1] - times[0]) * sq).sqrt();
    }
    Ok(total / T::from_count(n - 1))
}

/// Err of the model that predicts `x(t) = x(t₀)` throughout.
pub fn null_model_err<T: Real>(truth: &SnapshotSeries<T>) -> Result<T> {
    if truth.is_empty() {
        return invalid("series is empty");
    }
    let first = truth.state(0);
    weighted_error(&truth.times, |i| truth.state(i), |_| first)
}

/// Predicts every series from its first snapshot on its own time grid.
pub fn predict_series<T: Real, F: VectorField<T> + ?Sized>(
    field: &F,
    series: &[SnapshotSeries<T>],
    substeps: usize,
) -> Result<Vec<PredictedTrajectory<T>>> {
    series
        .iter()
        .map(|s| {
            let mut p = integrate(field, s.state(0), &s.times, substeps)?;
            p.series_id = s.series_id;
            Ok(p)
        })
        .collect()
}

/// Mean, median and sum of per-trajectory errors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrSummary {
    pub mean: f64,
    pub median: f64,
    pub sum: f64,
    pub count: usize,
    pub diverged: usize,
}

/// Aggregates errors. Infinite entries (diverged predictions) are counted in
/// `diverged` and kept in the statistics unless `exclude_diverged` is set.
pub fn summarize(errors: &[f64], exclude_diverged: bool) -> ErrSummary {
    let diverged = errors.iter().filter(|e| !e.is_finite()).count();
    let mut kept: Vec<f64> = if exclude_diverged {
        errors.iter().copied().filter(|e| e.is_finite()).collect()
    } else {
        errors.to_vec()
    };
    kept.sort_by(|a, b| a.total_cmp(b));
    let count = kept.len();
    let sum: f64 = kept.iter().sum();
    let median = match count {
        0 => f64::NAN,
        c if c % 2 == 1 => kept[c / 2],
        c => 0.5 * (kept[c / 2 - 1] + kept[c / 2]),
    };
    ErrSummary {
        mean: if count > 0 { sum / count as f64 } else { f64::NAN },
        median,
        sum,
        count,
        diverged,
    }
}

/// Evaluates `field` on every row of `z`.
pub fn eval_rows<T: Real, F: VectorField<T> + ?Sized>(field: &F, z: &Matrix<T>) -> Result<Matrix<T>> {
    if z.ncols() != field.dim() {
        return invalid(format!(
            "query dimension {} does not match field dimension {}",
            z.ncols(),
            field.dim()
        ));
    }
    let mut out = Matrix::zeros(z.nrows(), field.dim());
    for j in 0..z.nrows() {
        field.eval_into(z.row(j), out.row_mut(j));
    }
    Ok(out)
}

/// The learned field `f*` at every row of `z`.
pub fn eval_field<T: Real>(model: &crate::learner::OckModel<T>, z: &Matrix<T>) -> Result<Matrix<T>> {
    model.eval_rows(z)
}
