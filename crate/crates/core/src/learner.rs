//! Occupation kernel learning of a vector field from snapshot data.
//!
//! Snapshots are cut into two-sample segments. With a scalar kernel
//! `K = k · I` the ridge problem over the vector-valued RKHS reduces to one
//! `n × n` system with `d` right-hand sides,
//!
//! ```text
//! (M + λ n I) A = Y,    M[i][j] = ∬ k(xᵢ(s), xⱼ(t)) ds dt,    Yᵢ = xᵢ(bᵢ) − xᵢ(aᵢ)
//! ```
//!
//! and the learned field is `f(z) = Σᵢ [∮ k(z, xᵢ(t)) dt] αᵢ`. The explicit
//! path replaces `k` by random Fourier features `φ` and solves the `q × q`
//! system `(ΦᵀΦ + λ n I) B = Φᵀ Y` instead, with `f(z) = Bᵀ φ(z)`.

use log::{debug, warn};
use serde::{Deserialize, Serialize};

use crate::datasets::SnapshotSeries;
use crate::error::{invalid, OckError, Result};
use crate::inference::VectorField;
use crate::kernels::{BuiltKernel, FeatureMap, KernelSpec};
use crate::linalg::{solve_spd, Matrix, SolveReport};
use crate::quadrature::{double_quadrature_gram, Segment, SegmentNodes};
use crate::scalar::Real;

/// Segments plus their increments `x(b) − x(a)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingSet<T> {
    pub segments: Vec<Segment<T>>,
    /// `n × d`, row `i` is the increment over segment `i`.
    pub y: Matrix<T>,
    pub dim: usize,
    /// Input series that had fewer than two snapshots.
    pub skipped_series: usize,
}

impl<T: Real> TrainingSet<T> {
    pub fn from_segments(segments: Vec<Segment<T>>) -> Result<Self> {
        let Some(first) = segments.first() else {
            return invalid("no segments");
        };
        let dim = first.dim();
        for s in &segments {
            s.validate()?;
            if s.dim() != dim {
                return invalid("segments have inconsistent dimensions");
            }
        }
        let incs: Vec<Vec<T>> = segments.iter().map(Segment::increment).collect();
        Ok(Self {
            y: Matrix::from_rows(&incs, dim)?,
            segments,
            dim,
            skipped_series: 0,
        })
    }

    pub fn len(&self) -> usize {
        self.segments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    /// Same set with segments (and rows of `y`) reordered by `perm`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        Self {
            segments: perm.iter().map(|&i| self.segments[i].clone()).collect(),
            y: self.y.select_rows(perm),
            dim: self.dim,
            skipped_series: self.skipped_series,
        }
    }
}

/// One segment per consecutive snapshot pair of every series.
pub fn reshape_snapshots<T: Real>(series: &[SnapshotSeries<T>]) -> Result<TrainingSet<T>> {
    let mut segments = Vec::new();
    let mut skipped = 0;
    let mut dim = None;
    for s in series {
        s.validate()?;
        if s.len() < 2 {
            skipped += 1;
            continue;
        }
        match dim {
            None => dim = Some(s.dim()),
            Some(d) if d != s.dim() => {
                return invalid(format!(
                    "series {} has dimension {}, expected {d}",
                    s.series_id,
                    s.dim()
                ))
            }
            _ => {}
        }
        for i in 1..s.len() {
            segments.push(Segment::new(
                s.times[i - 1],
                s.times[i],
                s.state(i - 1).to_vec(),
                s.state(i).to_vec(),
                s.series_id,
                i - 1,
            )?);
        }
    }
    if skipped > 0 {
        warn!("skipped {skipped} series with fewer than two snapshots");
    }
    let mut set = TrainingSet::from_segments(segments)?;
    set.skipped_series = skipped;
    Ok(set)
}

/// Per-dimension z-scoring fitted on training data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct Standardizer<T> {
    pub mean: Vec<T>,
    pub scale: Vec<T>,
}

impl<T: Real> Standardizer<T> {
    pub fn fit(series: &[SnapshotSeries<T>]) -> Result<Self> {
        let d = series.first().map(SnapshotSeries::dim).unwrap_or(0);
        if d == 0 {
            return invalid("cannot standardize an empty dataset");
        }
        let mut count = 0usize;
        let mut mean = vec![T::zero(); d];
        for s in series {
            for r in s.states.rows_iter() {
                for (m, &v) in mean.iter_mut().zip(r) {
                    *m += v;
                }
                count += 1;
            }
        }
        let nc = T::from_count(count.max(1));
        mean.iter_mut().for_each(|m| *m /= nc);
        let mut var = vec![T::zero(); d];
        for s in series {
            for r in s.states.rows_iter() {
                for k in 0..d {
                    var[k] += (r[k] - mean[k]) * (r[k] - mean[k]);
                }
            }
        }
        let scale = var
            .into_iter()
            .map(|v| {
                let sd = (v / nc).sqrt();
                if sd > T::zero() {
                    sd
                } else {
                    T::one()
                }
            })
            .collect();
        Ok(Self { mean, scale })
    }

    pub fn forward(&self, x: &[T], out: &mut [T]) {
        for k in 0..x.len() {
            out[k] = (x[k] - self.mean[k]) / self.scale[k];
        }
    }

    pub fn transform_series(&self, s: &SnapshotSeries<T>) -> SnapshotSeries<T> {
        let mut states = s.states.clone();
        for i in 0..states.nrows() {
            let row = states.row_mut(i);
            for k in 0..row.len() {
                row[k] = (row[k] - self.mean[k]) / self.scale[k];
            }
        }
        SnapshotSeries {
            series_id: s.series_id,
            times: s.times.clone(),
            states,
        }
    }
}

/// Which solver produced a model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitPath {
    Implicit,
    Explicit,
}

impl FitPath {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "implicit" => Ok(Self::Implicit),
            "explicit" => Ok(Self::Explicit),
            other => invalid(format!("unknown fit path '{other}'")),
        }
    }
}

/// Learned coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "path", rename_all = "snake_case", bound = "T: Real")]
pub enum ModelWeights<T> {
    /// Support segments and the `n × d` coefficient matrix.
    Implicit {
        segments: Vec<Segment<T>>,
        alpha: Matrix<T>,
    },
    /// Feature map and the `q × d` weight matrix.
    Explicit {
        feature_map: FeatureMap<T>,
        weights: Matrix<T>,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitReport {
    pub segments: usize,
    pub solve: SolveReport,
}

/// A learned vector field. Immutable after fitting.
#[derive(Debug, Clone)]
pub struct OckModel<T> {
    kernel_spec: KernelSpec<T>,
    lambda: T,
    dim: usize,
    weights: ModelWeights<T>,
    standardizer: Option<Standardizer<T>>,
    report: Option<FitReport>,
    eval: Evaluator<T>,
}

#[derive(Debug, Clone)]
enum Evaluator<T> {
    Implicit {
        kernel: BuiltKernel<T>,
        nodes: SegmentNodes<T>,
    },
    Explicit,
}

impl<T: Real> OckModel<T> {
    /// Reassembles a model from stored parts, validating shapes.
    pub fn from_parts(
        kernel_spec: KernelSpec<T>,
        lambda: T,
        dim: usize,
        weights: ModelWeights<T>,
        standardizer: Option<Standardizer<T>>,
    ) -> Result<Self> {
        kernel_spec.validate()?;
        if !(lambda > T::zero()) {
            return invalid(format!("lambda must be positive, got {lambda}"));
        }
        if let Some(st) = &standardizer {
            if st.mean.len() != dim || st.scale.len() != dim {
                return invalid("standardizer dimension does not match model");
            }
        }
        let eval = match &weights {
            ModelWeights::Implicit { segments, alpha } => {
                if alpha.nrows() != segments.len() || alpha.ncols() != dim {
                    return invalid(format!(
                        "alpha is {:?}, expected ({}, {dim})",
                        alpha.shape(),
                        segments.len()
                    ));
                }
                let nodes = SegmentNodes::new(segments)?;
                if nodes.dim() != dim {
                    return invalid("segment dimension does not match model");
                }
                Evaluator::Implicit {
                    kernel: kernel_spec.build(dim)?,
                    nodes,
                }
            }
            ModelWeights::Explicit {
                feature_map,
                weights,
            } => {
                feature_map.validate()?;
                if feature_map.dim() != dim
                    || weights.nrows() != feature_map.feature_count()
                    || weights.ncols() != dim
                {
                    return invalid("feature map or weight shapes do not match model");
                }
                Evaluator::Explicit
            }
        };
        Ok(Self {
            kernel_spec,
            lambda,
            dim,
            weights,
            standardizer,
            report: None,
            eval,
        })
    }

    pub fn path(&self) -> FitPath {
        match self.weights {
            ModelWeights::Implicit { .. } => FitPath::Implicit,
            ModelWeights::Explicit { .. } => FitPath::Explicit,
        }
    }

    pub fn kernel_spec(&self) -> &KernelSpec<T> {
        &self.kernel_spec
    }

    pub fn lambda(&self) -> T {
        self.lambda
    }

    pub fn weights(&self) -> &ModelWeights<T> {
        &self.weights
    }

    pub fn standardizer(&self) -> Option<&Standardizer<T>> {
        self.standardizer.as_ref()
    }

    pub fn fit_report(&self) -> Option<&FitReport> {
        self.report.as_ref()
    }

    /// Implicit coefficients, if this is an implicit model.
    pub fn alpha(&self) -> Option<&Matrix<T>> {
        match &self.weights {
            ModelWeights::Implicit { alpha, .. } => Some(alpha),
            _ => None,
        }
    }

    /// Copy of the model with its coefficient matrix scaled by `c`.
    pub fn with_scaled_weights(&self, c: T) -> Self {
        let weights = match &self.weights {
            ModelWeights::Implicit { segments, alpha } => ModelWeights::Implicit {
                segments: segments.clone(),
                alpha: alpha.scaled(c),
            },
            ModelWeights::Explicit {
                feature_map,
                weights,
            } => ModelWeights::Explicit {
                feature_map: feature_map.clone(),
                weights: weights.scaled(c),
            },
        };
        self.with_weights(weights)
    }

    /// Copy of the model with replaced coefficients of identical shape.
    pub fn with_weights(&self, weights: ModelWeights<T>) -> Self {
        Self {
            weights,
            report: None,
            ..self.clone()
        }
    }

    /// Field values at every row of `z`, in the model's own coordinates.
    fn raw_field_rows(&self, z: &Matrix<T>) -> Result<Matrix<T>> {
        match (&self.eval, &self.weights) {
            (Evaluator::Implicit { kernel, nodes }, ModelWeights::Implicit { alpha, .. }) => {
                nodes.single_quadratures(z, kernel)?.matmul(alpha)
            }
            (Evaluator::Explicit, ModelWeights::Explicit { feature_map, weights }) => {
                feature_map.eval(z)?.matmul(weights)
            }
            _ => unreachable!("evaluator matches weights by construction"),
        }
    }

    /// `f*(zⱼ)` for every row `zⱼ` of `z`.
    pub fn eval_rows(&self, z: &Matrix<T>) -> Result<Matrix<T>> {
        if z.ncols() != self.dim {
            return invalid(format!(
                "query dimension {} does not match model dimension {}",
                z.ncols(),
                self.dim
            ));
        }
        match &self.standardizer {
            None => self.raw_field_rows(z),
            Some(st) => {
                let mut zs = z.clone();
                for j in 0..z.nrows() {
                    st.forward(z.row(j), zs.row_mut(j));
                }
                let mut out = self.raw_field_rows(&zs)?;
                for j in 0..out.nrows() {
                    for (o, &s) in out.row_mut(j).iter_mut().zip(&st.scale) {
                        *o *= s;
                    }
                }
                Ok(out)
            }
        }
    }
}

impl<T: Real> VectorField<T> for OckModel<T> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval_into(&self, x: &[T], out: &mut [T]) {
        let z = Matrix::from_vec(1, self.dim, x.to_vec()).expect("state has model dimension");
        let f = self.eval_rows(&z).expect("validated dimensions");
        out.copy_from_slice(f.row(0));
    }
}

fn check_lambda<T: Real>(lambda: T) -> Result<()> {
    if !(lambda > T::zero()) || !lambda.is_finite() {
        return invalid(format!("lambda must be positive and finite, got {lambda}"));
    }
    Ok(())
}

fn check_residual(report: &SolveReport) {
    if report.relative_residual > 1e-8 {
        warn!(
            "ridge system solved to relative residual {:.3e} via {:?}",
            report.relative_residual, report.method
        );
    }
}

/// Solves `(M + λ n I) A = Y` on the implicit kernel path.
pub fn fit_implicit<T: Real>(train: &TrainingSet<T>, spec: &KernelSpec<T>, lambda: T) -> Result<OckModel<T>> {
    check_lambda(lambda)?;
    if train.is_empty() {
        return invalid("training set has no segments");
    }
    let kernel = spec.build(train.dim)?;
    let mut system = double_quadrature_gram(&train.segments, &kernel)?;
    let n = train.len();
    system.add_diagonal(lambda * T::from_count(n));
    let (alpha, solve) = solve_spd(&system, &train.y)?;
    debug!("implicit fit: n={n}, {:?}, residual {:.3e}", solve.method, solve.relative_residual);
    check_residual(&solve);
    let mut model = OckModel::from_parts(
        *spec,
        lambda,
        train.dim,
        ModelWeights::Implicit {
            segments: train.segments.clone(),
            alpha,
        },
        None,
    )?;
    model.report = Some(FitReport { segments: n, solve });
    Ok(model)
}

/// `n × q` matrix of feature quadratures: row `i` is `∮ φ(xᵢ(t)) dt`.
pub fn feature_quadratures<T: Real>(segments: &[Segment<T>], map: &FeatureMap<T>) -> Result<Matrix<T>> {
    let nodes = SegmentNodes::new(segments)?;
    let phi = map.eval(&nodes.nodes)?;
    let half = T::lit(0.5);
    Ok(Matrix::from_fn(nodes.len(), map.feature_count(), |i, k| {
        let (s, e) = nodes.ends[i];
        half * nodes.steps[i] * (phi[(s, k)] + phi[(e, k)])
    }))
}

/// Solves `(ΦᵀΦ + λ n I) B = Φᵀ Y` on the explicit feature path.
pub fn fit_explicit<T: Real>(train: &TrainingSet<T>, spec: &KernelSpec<T>, lambda: T) -> Result<OckModel<T>> {
    check_lambda(lambda)?;
    if train.is_empty() {
        return invalid("training set has no segments");
    }
    let BuiltKernel::Features(map) = spec.build(train.dim)? else {
        return invalid("explicit fit requires a random Fourier kernel spec");
    };
    let phi = feature_quadratures(&train.segments, &map)?;
    let n = train.len();
    let mut system = phi.gram();
    system.add_diagonal(lambda * T::from_count(n));
    let rhs = phi.transpose_matmul(&train.y)?;
    let (weights, solve) = solve_spd(&system, &rhs)?;
    debug!(
        "explicit fit: n={n}, q={}, {:?}, residual {:.3e}",
        map.feature_count(),
        solve.method,
        solve.relative_residual
    );
    check_residual(&solve);
    let mut model = OckModel::from_parts(
        *spec,
        lambda,
        train.dim,
        ModelWeights::Explicit {
            feature_map: map,
            weights,
        },
        None,
    )?;
    model.report = Some(FitReport { segments: n, solve });
    Ok(model)
}

/// Fits on whole series, optionally z-scoring states first. The standardizer
/// is stored in the model and applied again at evaluation time.
pub fn fit_series<T: Real>(
    series: &[SnapshotSeries<T>],
    spec: &KernelSpec<T>,
    lambda: T,
    path: FitPath,
    standardize: bool,
) -> Result<OckModel<T>> {
    let standardizer = if standardize {
        Some(Standardizer::fit(series)?)
    } else {
        None
    };
    let train = match &standardizer {
        Some(st) => {
            let scaled: Vec<_> = series.iter().map(|s| st.transform_series(s)).collect();
            reshape_snapshots(&scaled)?
        }
        None => reshape_snapshots(series)?,
    };
    let mut model = match path {
        FitPath::Implicit => fit_implicit(&train, spec, lambda)?,
        FitPath::Explicit => fit_explicit(&train, spec, lambda)?,
    };
    model.standardizer = standardizer;
    Ok(model)
}

/// `(1/n) Σ ‖∮ f(xᵢ(t)) dt − xᵢ(bᵢ) + xᵢ(aᵢ)‖²` over all consecutive snapshot
/// pairs, with the trapezoid rule for `∮`.
pub fn weak_loss<T: Real, F: VectorField<T> + ?Sized>(field: &F, series: &[SnapshotSeries<T>]) -> Result<T> {
    let train = reshape_snapshots(series)?;
    if train.dim != field.dim() {
        return invalid("field and data dimensions differ");
    }
    let d = train.dim;
    let mut fa = vec![T::zero(); d];
    let mut fb = vec![T::zero(); d];
    let half = T::lit(0.5);
    let mut total = T::zero();
    for (i, seg) in train.segments.iter().enumerate() {
        field.eval_into(&seg.x_start, &mut fa);
        field.eval_into(&seg.x_end, &mut fb);
        let h = seg.step();
        for k in 0..d {
            let defect = half * h * (fa[k] + fb[k]) - train.y[(i, k)];
            total += defect * defect;
        }
    }
    Ok(total / T::from_count(train.len()))
}

/// `(1/n) ‖M α − Y‖²`, the data term of the reduced objective.
pub fn data_term<T: Real>(alpha: &Matrix<T>, train: &TrainingSet<T>, m: &Matrix<T>) -> Result<T> {
    check_objective_shapes(alpha, train, m)?;
    let r = m.matmul(alpha)?.sub(&train.y)?;
    let fro = r.frobenius_norm();
    Ok(fro * fro / T::from_count(train.len()))
}

/// `J(α) = (1/n) ‖M α − Y‖² + λ tr(αᵀ M α)`.
pub fn training_objective<T: Real>(alpha: &Matrix<T>, train: &TrainingSet<T>, m: &Matrix<T>, lambda: T) -> Result<T> {
    let data = data_term(alpha, train, m)?;
    let ma = m.matmul(alpha)?;
    let penalty: T = alpha
        .as_slice()
        .iter()
        .zip(ma.as_slice())
        .map(|(&a, &b)| a * b)
        .sum();
    Ok(data + lambda * penalty)
}

fn check_objective_shapes<T: Real>(alpha: &Matrix<T>, train: &TrainingSet<T>, m: &Matrix<T>) -> Result<()> {
    let n = train.len();
    if m.shape() != (n, n) || alpha.shape() != (n, train.dim) {
        return Err(OckError::InvalidArgument(format!(
            "objective shapes: alpha {:?}, M {:?}, expected n={n}, d={}",
            alpha.shape(),
            m.shape(),
            train.dim
        )));
    }
    Ok(())
}

/// The segment Gram matrix `M` of a training set under `spec`.
pub fn segment_gram<T: Real>(train: &TrainingSet<T>, spec: &KernelSpec<T>) -> Result<Matrix<T>> {
    double_quadrature_gram(&train.segments, &spec.build(train.dim)?)
}
