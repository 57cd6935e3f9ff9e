//! Learning `α(x)` and `f(u)` in `α(x) uₓ + u_y = f(u)` from gridded values
//! of `u`.
//!
//! Test functions are cell indicators, so the weak loss is the sum over
//! cells of the squared cell integral of `α uₓ + u_y − f(u)`. With feature
//! expansions `α = φ₁ᵀγ` and `f = φ₂ᵀδ` the cell residual is linear in
//! `(γ, δ)`:
//!
//! ```text
//! r = Ψ₁ᵀγ − Ψ₂ᵀδ + y,    C(γ, δ) = ‖r‖² + λ₁‖γ‖² + λ₂‖δ‖²
//! ```
//!
//! where column `c` of `Ψ₁` is `∬_c φ₁(x) uₓ`, of `Ψ₂` is `∬_c φ₂(u)`, and
//! `y_c = ∬_c u_y`.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, OckError, Result};
use crate::kernels::{rff_build, FeatureMap, KernelSpec};
use crate::linalg::{solve_spd, Matrix, SolveReport};
use crate::scalar::Real;

/// Solution values on a tensor grid; `u[(i, j)] = u(xᵢ, yⱼ)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct GridField<T> {
    pub x_nodes: Vec<T>,
    pub y_nodes: Vec<T>,
    pub u: Matrix<T>,
}

impl<T: Real> GridField<T> {
    pub fn new(x_nodes: Vec<T>, y_nodes: Vec<T>, u: Matrix<T>) -> Result<Self> {
        let g = Self { x_nodes, y_nodes, u };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        let increasing = |v: &[T]| v.windows(2).all(|w| w[1] > w[0]) && v.iter().all(|t| t.is_finite());
        if self.x_nodes.len() < 2 || self.y_nodes.len() < 2 {
            return invalid("grid needs at least two nodes per axis");
        }
        if !increasing(&self.x_nodes) || !increasing(&self.y_nodes) {
            return invalid("grid nodes must be finite and strictly increasing");
        }
        if self.u.shape() != (self.x_nodes.len(), self.y_nodes.len()) {
            return invalid(format!(
                "u has shape {:?}, expected ({}, {})",
                self.u.shape(),
                self.x_nodes.len(),
                self.y_nodes.len()
            ));
        }
        if !self.u.is_finite() {
            return invalid("u holds non-finite values");
        }
        Ok(())
    }

    /// Cells along x.
    pub fn n(&self) -> usize {
        self.x_nodes.len() - 1
    }

    /// Cells along y.
    pub fn m(&self) -> usize {
        self.y_nodes.len() - 1
    }

    pub fn cell_count(&self) -> usize {
        self.n() * self.m()
    }

    /// Column index of cell `(i, j)` in the cell matrices.
    #[inline]
    pub fn cell_index(&self, i: usize, j: usize) -> usize {
        i * self.m() + j
    }

    /// Uniform grid with `n × m` cells sampling `u`.
    pub fn sample(
        n: usize,
        m: usize,
        x_range: (f64, f64),
        y_range: (f64, f64),
        u: impl Fn(f64, f64) -> f64,
    ) -> Result<Self> {
        if n == 0 || m == 0 {
            return invalid("grid needs at least one cell per axis");
        }
        let axis = |k: usize, (lo, hi): (f64, f64)| -> Vec<f64> {
            (0..=k).map(|i| lo + (hi - lo) * i as f64 / k as f64).collect()
        };
        let xs = axis(n, x_range);
        let ys = axis(m, y_range);
        let vals = Matrix::from_fn(n + 1, m + 1, |i, j| T::lit(u(xs[i], ys[j])));
        Self::new(
            xs.into_iter().map(T::lit).collect(),
            ys.into_iter().map(T::lit).collect(),
            vals,
        )
    }
}

/// Cell integrals of `u_y`: `(hₓ/2)(u(xᵢ,yⱼ₊₁) + u(xᵢ₊₁,yⱼ₊₁) − u(xᵢ,yⱼ) − u(xᵢ₊₁,yⱼ))`,
/// exact in y by the fundamental theorem, trapezoid in x.
pub fn cell_uy_integrals<T: Real>(grid: &GridField<T>) -> Result<Vec<T>> {
    grid.validate()?;
    let u = &grid.u;
    let half = T::lit(0.5);
    let mut out = vec![T::zero(); grid.cell_count()];
    for i in 0..grid.n() {
        let hx = grid.x_nodes[i + 1] - grid.x_nodes[i];
        for j in 0..grid.m() {
            let top = u[(i, j + 1)] + u[(i + 1, j + 1)];
            let bottom = u[(i, j)] + u[(i + 1, j)];
            out[grid.cell_index(i, j)] = half * hx * (top - bottom);
        }
    }
    Ok(out)
}

/// `uₓ` at every node: three-point second-order differences, centred inside
/// and one-sided at the two x boundaries. Valid on non-uniform x nodes.
pub fn nodal_ux<T: Real>(grid: &GridField<T>) -> Result<Matrix<T>> {
    grid.validate()?;
    let nx = grid.x_nodes.len();
    if nx < 3 {
        return invalid("x derivative needs at least two cells along x");
    }
    let x = &grid.x_nodes;
    // weights of a quadratic through nodes (a, b, c), differentiated at `at`
    let weights = |a: usize, b: usize, c: usize, at: usize| -> [T; 3] {
        let (xa, xb, xc, t) = (x[a], x[b], x[c], x[at]);
        [
            ((t - xb) + (t - xc)) / ((xa - xb) * (xa - xc)),
            ((t - xa) + (t - xc)) / ((xb - xa) * (xb - xc)),
            ((t - xa) + (t - xb)) / ((xc - xa) * (xc - xb)),
        ]
    };
    let ny = grid.y_nodes.len();
    let mut out = Matrix::zeros(nx, ny);
    for i in 0..nx {
        let (a, b, c) = match i {
            0 => (0, 1, 2),
            _ if i == nx - 1 => (nx - 3, nx - 2, nx - 1),
            _ => (i - 1, i, i + 1),
        };
        let w = weights(a, b, c, i);
        for j in 0..ny {
            out[(i, j)] = w[0] * grid.u[(a, j)] + w[1] * grid.u[(b, j)] + w[2] * grid.u[(c, j)];
        }
    }
    Ok(out)
}

fn corner_trapezoid<T: Real>(grid: &GridField<T>, vals: impl Fn(usize, usize) -> T, i: usize, j: usize) -> T {
    let hx = grid.x_nodes[i + 1] - grid.x_nodes[i];
    let hy = grid.y_nodes[j + 1] - grid.y_nodes[j];
    let sum = (vals(i, j) + vals(i + 1, j)) + (vals(i, j + 1) + vals(i + 1, j + 1));
    hx * hy / T::lit(4.0) * sum
}

/// `q₁ × (n·m)` matrix; column `(i, j)` is the trapezoid estimate of
/// `∬_cell φ₁(x) uₓ dx dy`.
pub fn cell_ux_weighted<T: Real>(grid: &GridField<T>, map_alpha: &FeatureMap<T>) -> Result<Matrix<T>> {
    if map_alpha.dim() != 1 {
        return invalid("the α feature map must take scalar inputs");
    }
    let ux = nodal_ux(grid)?;
    let q = map_alpha.feature_count();
    let phi_x = map_alpha.eval(&Matrix::from_vec(grid.x_nodes.len(), 1, grid.x_nodes.clone())?)?;
    let mut out = Matrix::zeros(q, grid.cell_count());
    for k in 0..q {
        let row = out.row_mut(k);
        for i in 0..grid.n() {
            for j in 0..grid.m() {
                row[i * grid.m() + j] =
                    corner_trapezoid(grid, |a, b| phi_x[(a, k)] * ux[(a, b)], i, j);
            }
        }
    }
    Ok(out)
}

/// `q₂ × (n·m)` matrix; column `(i, j)` is the trapezoid estimate of
/// `∬_cell φ₂(u) dx dy`.
pub fn cell_f_features<T: Real>(grid: &GridField<T>, map_f: &FeatureMap<T>) -> Result<Matrix<T>> {
    grid.validate()?;
    if map_f.dim() != 1 {
        return invalid("the f feature map must take scalar inputs");
    }
    let (nx, ny) = grid.u.shape();
    let q = map_f.feature_count();
    // nodal features, node-major: row (a * ny + b)
    let phi_u = map_f.eval(&Matrix::from_vec(nx * ny, 1, grid.u.as_slice().to_vec())?)?;
    let mut out = Matrix::zeros(q, grid.cell_count());
    for k in 0..q {
        let row = out.row_mut(k);
        for i in 0..grid.n() {
            for j in 0..grid.m() {
                row[i * grid.m() + j] = corner_trapezoid(grid, |a, b| phi_u[(a * ny + b, k)], i, j);
            }
        }
    }
    Ok(out)
}

/// The assembled cell quantities of one grid.
#[derive(Debug, Clone)]
pub struct CellSystem<T> {
    /// `q₁ × (n·m)`.
    pub psi_alpha: Matrix<T>,
    /// `q₂ × (n·m)`.
    pub psi_f: Matrix<T>,
    /// `∬ u_y` per cell.
    pub y_cells: Vec<T>,
}

impl<T: Real> CellSystem<T> {
    pub fn assemble(grid: &GridField<T>, map_alpha: &FeatureMap<T>, map_f: &FeatureMap<T>) -> Result<Self> {
        Ok(Self {
            psi_alpha: cell_ux_weighted(grid, map_alpha)?,
            psi_f: cell_f_features(grid, map_f)?,
            y_cells: cell_uy_integrals(grid)?,
        })
    }

    pub fn cell_count(&self) -> usize {
        self.y_cells.len()
    }

    /// Per-cell residual `Ψ₁ᵀγ − Ψ₂ᵀδ + y`.
    pub fn residuals(&self, gamma: &[T], delta: &[T]) -> Result<Vec<T>> {
        if gamma.len() != self.psi_alpha.nrows() || delta.len() != self.psi_f.nrows() {
            return invalid("weight lengths do not match feature counts");
        }
        let mut r = self.y_cells.clone();
        for (k, &g) in gamma.iter().enumerate() {
            for (rc, &p) in r.iter_mut().zip(self.psi_alpha.row(k)) {
                *rc += g * p;
            }
        }
        for (k, &d) in delta.iter().enumerate() {
            for (rc, &p) in r.iter_mut().zip(self.psi_f.row(k)) {
                *rc -= d * p;
            }
        }
        Ok(r)
    }

    /// `‖Ψ₁ᵀγ − Ψ₂ᵀδ + y‖²`.
    pub fn data_term(&self, gamma: &[T], delta: &[T]) -> Result<T> {
        Ok(self.residuals(gamma, delta)?.iter().map(|&v| v * v).sum())
    }

    pub fn objective(&self, gamma: &[T], delta: &[T], lambda1: T, lambda2: T) -> Result<T> {
        let sq = |v: &[T]| v.iter().map(|&a| a * a).sum::<T>();
        Ok(self.data_term(gamma, delta)? + lambda1 * sq(gamma) + lambda2 * sq(delta))
    }
}

/// Learned PDE coefficient functions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct PdeModel<T> {
    pub gamma: Vec<T>,
    pub delta: Vec<T>,
    pub map_alpha: FeatureMap<T>,
    pub map_f: FeatureMap<T>,
    pub lambda1: T,
    pub lambda2: T,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solve: Option<SolveReport>,
}

impl<T: Real> PdeModel<T> {
    pub fn alpha_at(&self, s: T) -> T {
        feature_dot(&self.map_alpha, s, &self.gamma)
    }

    pub fn f_at(&self, z: T) -> T {
        feature_dot(&self.map_f, z, &self.delta)
    }
}

fn feature_dot<T: Real>(map: &FeatureMap<T>, s: T, w: &[T]) -> T {
    let mut phi = vec![T::zero(); map.feature_count()];
    map.features_into(&[s], &mut phi);
    phi.iter().zip(w).map(|(&a, &b)| a * b).sum()
}

pub fn eval_alpha<T: Real>(model: &PdeModel<T>, s: &[T]) -> Vec<T> {
    s.iter().map(|&v| model.alpha_at(v)).collect()
}

pub fn eval_f<T: Real>(model: &PdeModel<T>, z: &[T]) -> Vec<T> {
    z.iter().map(|&v| model.f_at(v)).collect()
}

/// Minimizes `C(γ, δ)` with a single factorization of the stacked normal
/// equations.
pub fn fit_pde_system<T: Real>(
    system: &CellSystem<T>,
    map_alpha: &FeatureMap<T>,
    map_f: &FeatureMap<T>,
    lambda1: T,
    lambda2: T,
) -> Result<PdeModel<T>> {
    if !(lambda1 > T::zero()) || !(lambda2 > T::zero()) {
        return invalid("PDE ridge parameters must be positive");
    }
    let q1 = system.psi_alpha.nrows();
    let q2 = system.psi_f.nrows();
    if q1 != map_alpha.feature_count() || q2 != map_f.feature_count() {
        return invalid("cell system does not match feature maps");
    }
    let cells = system.cell_count();
    // S = [Ψ₁; −Ψ₂], residual = Sᵀθ + y
    let mut stacked = Matrix::zeros(q1 + q2, cells);
    for k in 0..q1 {
        stacked.row_mut(k).copy_from_slice(system.psi_alpha.row(k));
    }
    for k in 0..q2 {
        for (o, &v) in stacked.row_mut(q1 + k).iter_mut().zip(system.psi_f.row(k)) {
            *o = -v;
        }
    }
    let mut normal = stacked.matmul_transpose(&stacked)?;
    for k in 0..q1 + q2 {
        normal[(k, k)] += if k < q1 { lambda1 } else { lambda2 };
    }
    let rhs_vec: Vec<T> = stacked.matvec(&system.y_cells)?.into_iter().map(|v| -v).collect();
    let rhs = Matrix::from_vec(q1 + q2, 1, rhs_vec)?;
    let (theta, report) = solve_spd(&normal, &rhs).map_err(|e| match e {
        OckError::Numerical { message, diagnostics } => OckError::Numerical {
            message: format!("PDE normal equations: {message}"),
            diagnostics,
        },
        other => other,
    })?;
    let theta = theta.column(0);
    Ok(PdeModel {
        gamma: theta[..q1].to_vec(),
        delta: theta[q1..].to_vec(),
        map_alpha: map_alpha.clone(),
        map_f: map_f.clone(),
        lambda1,
        lambda2,
        solve: Some(report),
    })
}

pub fn fit_pde<T: Real>(
    grid: &GridField<T>,
    map_alpha: &FeatureMap<T>,
    map_f: &FeatureMap<T>,
    lambda1: T,
    lambda2: T,
) -> Result<PdeModel<T>> {
    let system = CellSystem::assemble(grid, map_alpha, map_f)?;
    fit_pde_system(&system, map_alpha, map_f, lambda1, lambda2)
}

/// `Σ|pred − truth| / Σ|truth|` over `points`.
pub fn pde_l1_error<T: Real>(pred: impl Fn(T) -> T, truth: impl Fn(T) -> T, points: &[T]) -> Result<T> {
    let mut num = T::zero();
    let mut den = T::zero();
    for &p in points {
        let t = truth(p);
        num += (pred(p) - t).abs();
        den += t.abs();
    }
    if !(den > T::zero()) {
        return invalid("truth has zero L1 norm on the evaluation points");
    }
    Ok(num / den)
}

/// `u(x, y) = 1 / (1 + exp(y + sin(4π(arctan x − y))))`, which solves
/// `(1 + x²) uₓ + u_y = −u(1 − u)`.
pub fn testcase_u(x: f64, y: f64) -> f64 {
    let g = y + (4.0 * std::f64::consts::PI * (x.atan() - y)).sin();
    1.0 / (1.0 + g.exp())
}

pub fn testcase_alpha(x: f64) -> f64 {
    1.0 + x * x
}

pub fn testcase_f(u: f64) -> f64 {
    -u * (1.0 - u)
}

pub const TESTCASE_X_RANGE: (f64, f64) = (-4.0, 4.0);
pub const TESTCASE_Y_RANGE: (f64, f64) = (0.0, 1.0);

/// A sampled grid with the true `α` and `f`.
pub type Testcase<T> = (GridField<T>, fn(f64) -> f64, fn(f64) -> f64);

/// Uniform `n × m`-cell sampling of the logistic test solution on
/// `[−4, 4] × [0, 1]`, together with the true coefficient functions.
pub fn make_paper_testcase<T: Real>(n: usize, m: usize) -> Result<Testcase<T>> {
    if n < 2 || m < 2 {
        return invalid(format!("grid {n}x{m} too small; need at least 2x2 cells"));
    }
    let grid = GridField::sample(n, m, TESTCASE_X_RANGE, TESTCASE_Y_RANGE, testcase_u)?;
    Ok((grid, testcase_alpha, testcase_f))
}

/// Feature counts, lengthscales, ridge weights and seed of a PDE fit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PdeConfig {
    pub features_alpha: usize,
    pub features_f: usize,
    pub lengthscale_alpha: f64,
    pub lengthscale_f: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    pub seed: u64,
}

impl Default for PdeConfig {
    fn default() -> Self {
        Self {
            features_alpha: 100,
            features_f: 100,
            lengthscale_alpha: 1.0,
            lengthscale_f: 0.1,
            lambda1: 1e-8,
            lambda2: 1e-8,
            seed: 0,
        }
    }
}

impl PdeConfig {
    /// Both feature maps; the f map uses the next seed so the two draws are
    /// independent.
    pub fn feature_maps<T: Real>(&self) -> Result<(FeatureMap<T>, FeatureMap<T>)> {
        let a = KernelSpec::random_fourier(T::lit(self.lengthscale_alpha), self.features_alpha, self.seed)?;
        let f = KernelSpec::random_fourier(
            T::lit(self.lengthscale_f),
            self.features_f,
            self.seed.wrapping_add(1),
        )?;
        Ok((rff_build(&a, 1)?, rff_build(&f, 1)?))
    }
}

/// One row of the error-versus-resolution table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StudyRow {
    pub n: usize,
    pub m: usize,
    pub alpha_err: f64,
    pub f_err: f64,
}

/// L1 relative errors of a fitted model against the test case truth, with
/// `α` checked at the grid's x nodes and `f` at every nodal value of `u`.
pub fn testcase_errors<T: Real>(model: &PdeModel<T>, grid: &GridField<T>) -> Result<(f64, f64)> {
    let xs: Vec<f64> = grid.x_nodes.iter().map(|v| v.to_f64_lossy()).collect();
    let us: Vec<f64> = grid.u.as_slice().iter().map(|v| v.to_f64_lossy()).collect();
    let a = pde_l1_error(|s| model.alpha_at(T::lit(s)).to_f64_lossy(), testcase_alpha, &xs)?;
    let f = pde_l1_error(|z| model.f_at(T::lit(z)).to_f64_lossy(), testcase_f, &us)?;
    Ok((a, f))
}

/// Fits the test case on each grid size and records both errors.
pub fn pde_study<T: Real>(sizes: &[(usize, usize)], cfg: &PdeConfig) -> Result<Vec<StudyRow>> {
    let (map_a, map_f) = cfg.feature_maps::<T>()?;
    sizes
        .iter()
        .map(|&(n, m)| {
            let (grid, _, _) = make_paper_testcase::<T>(n, m)?;
            let model = fit_pde(&grid, &map_a, &map_f, T::lit(cfg.lambda1), T::lit(cfg.lambda2))?;
            let (alpha_err, f_err) = testcase_errors(&model, &grid)?;
            Ok(StudyRow { n, m, alpha_err, f_err })
        })
        .collect()
}

/// Least-squares slope of `log y` against `log x`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return invalid("slope needs at least two paired points");
    }
    if x.iter().chain(y).any(|v| !(*v > 0.0)) {
        return invalid("log-log slope needs positive values");
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    if sxx == 0.0 {
        return invalid("all x values coincide");
    }
    Ok(sxy / sxx)
}

/// Writes `n,m,alpha_err,f_err` rows.
pub fn write_study_csv<W: Write>(mut w: W, rows: &[StudyRow]) -> Result<()> {
    writeln!(w, "n,m,alpha_err,f_err")?;
    for r in rows {
        writeln!(w, "{},{},{},{}", r.n, r.m, r.alpha_err, r.f_err)?;
    }
    Ok(())
}

/// Reads a complete lattice of `x,y,u` triples.
pub fn read_grid_csv<T: Real, R: Read>(reader: R) -> Result<GridField<T>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let header = rdr
        .headers()
        .map_err(|e| OckError::Parse { line: 1, message: e.to_string() })?
        .clone();
    if header.iter().collect::<Vec<_>>() != ["x", "y", "u"] {
        return Err(OckError::Parse {
            line: 1,
            message: "grid header must be x,y,u".into(),
        });
    }
    let mut triples: Vec<(f64, f64, f64, usize)> = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| OckError::Parse {
            line: e.position().map_or(0, |p| p.line() as usize),
            message: e.to_string(),
        })?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        let mut v = [0.0; 3];
        for (k, slot) in v.iter_mut().enumerate() {
            *slot = rec[k].parse().ok().filter(|x: &f64| x.is_finite()).ok_or_else(|| OckError::Parse {
                line,
                message: format!("bad number '{}'", &rec[k]),
            })?;
        }
        triples.push((v[0], v[1], v[2], line));
    }
    let axis = |sel: fn(&(f64, f64, f64, usize)) -> f64| {
        let mut a: Vec<f64> = triples.iter().map(sel).collect();
        a.sort_by(|p, q| p.total_cmp(q));
        a.dedup();
        a
    };
    let xs = axis(|t| t.0);
    let ys = axis(|t| t.1);
    if xs.len() * ys.len() != triples.len() {
        return Err(OckError::Parse {
            line: 0,
            message: format!(
                "{} rows do not form a complete {}x{} lattice",
                triples.len(),
                xs.len(),
                ys.len()
            ),
        });
    }
    let mut u = Matrix::from_fn(xs.len(), ys.len(), |_, _| T::nan());
    for &(x, y, val, line) in &triples {
        let i = xs.binary_search_by(|p| p.total_cmp(&x)).expect("x on axis");
        let j = ys.binary_search_by(|p| p.total_cmp(&y)).expect("y on axis");
        if !u[(i, j)].is_nan() {
            return Err(OckError::Parse {
                line,
                message: format!("duplicate node ({x}, {y})"),
            });
        }
        u[(i, j)] = T::lit(val);
    }
    GridField::new(xs.into_iter().map(T::lit).collect(), ys.into_iter().map(T::lit).collect(), u)
}

pub fn write_grid_csv<T: Real, W: Write>(mut w: W, grid: &GridField<T>) -> Result<()> {
    writeln!(w, "x,y,u")?;
    for (i, x) in grid.x_nodes.iter().enumerate() {
        for (j, y) in grid.y_nodes.iter().enumerate() {
            writeln!(w, "{x},{y},{}", grid.u[(i, j)])?;
        }
    }
    Ok(())
}

pub const PDE_MODEL_FORMAT: &str = "ock-pde-model";
pub const PDE_MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
#[serde(bound = "T: Real")]
struct PdeModelFile<T> {
    format: String,
    format_version: u32,
    #[serde(flatten)]
    model: PdeModel<T>,
}

pub fn save_pde_model<T: Real>(path: &Path, model: &PdeModel<T>) -> Result<()> {
    let file = PdeModelFile {
        format: PDE_MODEL_FORMAT.into(),
        format_version: PDE_MODEL_FORMAT_VERSION,
        model: model.clone(),
    };
    std::fs::write(path, serde_json::to_string(&file).expect("model serializes"))?;
    Ok(())
}

pub fn load_pde_model<T: Real>(path: &Path) -> Result<PdeModel<T>> {
    let text = std::fs::read_to_string(path)?;
    let file: PdeModelFile<T> = serde_json::from_str(&text).map_err(|e| OckError::Format(e.to_string()))?;
    if file.format != PDE_MODEL_FORMAT || file.format_version != PDE_MODEL_FORMAT_VERSION {
        return Err(OckError::Format(format!(
            "unsupported PDE model file {} v{}",
            file.format, file.format_version
        )));
    }
    Ok(file.model)
}
