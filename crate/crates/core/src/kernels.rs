//! Scalar kernels, Gram blocks and random Fourier feature maps.
//!
//! Every vector-valued kernel in this crate has the separable form
//! `K(x, y) = k(x, y) · I`, so only the scalar part `k` is represented.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::linalg::{dot, Matrix};
use crate::scalar::Real;

/// Which scalar kernel backs a model, with its hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case", bound = "T: Real")]
pub enum KernelSpec<T> {
    /// `exp(−‖x−y‖² / (2 ℓ²))`
    Gaussian { lengthscale: T },
    /// Cosine features whose inner product approximates the Gaussian kernel
    /// of the same lengthscale.
    RandomFourier {
        lengthscale: T,
        features: usize,
        seed: u64,
    },
}

impl<T: Real> KernelSpec<T> {
    pub fn gaussian(lengthscale: T) -> Result<Self> {
        let spec = Self::Gaussian { lengthscale };
        spec.validate()?;
        Ok(spec)
    }

    pub fn random_fourier(lengthscale: T, features: usize, seed: u64) -> Result<Self> {
        let spec = Self::RandomFourier {
            lengthscale,
            features,
            seed,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn lengthscale(&self) -> T {
        match *self {
            Self::Gaussian { lengthscale } | Self::RandomFourier { lengthscale, .. } => lengthscale,
        }
    }

    /// Same variant with a different lengthscale.
    pub fn with_lengthscale(&self, lengthscale: T) -> Self {
        match *self {
            Self::Gaussian { .. } => Self::Gaussian { lengthscale },
            Self::RandomFourier { features, seed, .. } => Self::RandomFourier {
                lengthscale,
                features,
                seed,
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        let l = self.lengthscale();
        if !(l > T::zero()) || !l.is_finite() {
            return invalid(format!("lengthscale must be positive and finite, got {l}"));
        }
        if let Self::RandomFourier { features, .. } = self {
            if *features == 0 {
                return invalid("random Fourier feature count must be at least 1");
            }
        }
        Ok(())
    }

    /// Materializes the kernel for states of dimension `dim`.
    pub fn build(&self, dim: usize) -> Result<BuiltKernel<T>> {
        self.validate()?;
        match *self {
            Self::Gaussian { lengthscale } => Ok(BuiltKernel::Gaussian(Gaussian::new(lengthscale)?)),
            Self::RandomFourier { .. } => Ok(BuiltKernel::Features(rff_build(self, dim)?)),
        }
    }
}

/// A scalar positive-definite kernel on `R^d`.
pub trait Kernel<T: Real> {
    fn eval(&self, x: &[T], y: &[T]) -> T;

    /// `G[i][j] = k(Xᵢ, Yⱼ)`.
    fn gram(&self, x: &Matrix<T>, y: &Matrix<T>) -> Result<Matrix<T>> {
        check_dims(x, y)?;
        Ok(Matrix::from_fn(x.nrows(), y.nrows(), |i, j| {
            self.eval(x.row(i), y.row(j))
        }))
    }
}

fn check_dims<T: Real>(x: &Matrix<T>, y: &Matrix<T>) -> Result<()> {
    if x.ncols() != y.ncols() {
        return invalid(format!(
            "state dimension mismatch: {} vs {}",
            x.ncols(),
            y.ncols()
        ));
    }
    Ok(())
}

/// Gaussian kernel with a fixed lengthscale.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gaussian<T> {
    lengthscale: T,
    neg_inv_two_l2: T,
}

impl<T: Real> Gaussian<T> {
    pub fn new(lengthscale: T) -> Result<Self> {
        if !(lengthscale > T::zero()) || !lengthscale.is_finite() {
            return invalid(format!("lengthscale must be positive and finite, got {lengthscale}"));
        }
        Ok(Self {
            lengthscale,
            neg_inv_two_l2: -T::one() / (T::lit(2.0) * lengthscale * lengthscale),
        })
    }

    pub fn lengthscale(&self) -> T {
        self.lengthscale
    }

    #[inline]
    fn of_sq_dist(&self, d2: T) -> T {
        (d2.max(T::zero()) * self.neg_inv_two_l2).exp()
    }
}

impl<T: Real> Kernel<T> for Gaussian<T> {
    #[inline]
    fn eval(&self, x: &[T], y: &[T]) -> T {
        let d2: T = x.iter().zip(y).map(|(&a, &b)| (a - b) * (a - b)).sum();
        self.of_sq_dist(d2)
    }

    /// Distance-matrix route: `D = |x|² 1ᵀ − 2 X Yᵀ + 1 |y|²ᵀ`, clamped at
    /// zero, then `exp` applied entrywise.
    fn gram(&self, x: &Matrix<T>, y: &Matrix<T>) -> Result<Matrix<T>> {
        check_dims(x, y)?;
        let sx: Vec<T> = x.rows_iter().map(|r| dot(r, r)).collect();
        let sy: Vec<T> = y.rows_iter().map(|r| dot(r, r)).collect();
        let two = T::lit(2.0);
        let same = std::ptr::eq(x, y) || x == y;
        let mut g = if same { x.outer_gram() } else { x.matmul_transpose(y)? };
        for i in 0..x.nrows() {
            for (j, o) in g.row_mut(i).iter_mut().enumerate() {
                *o = self.of_sq_dist((sx[i] + sy[j]) - two * *o);
            }
            if same {
                g.row_mut(i)[i] = T::one();
            }
        }
        Ok(g)
    }
}

/// Plain inner product `xᵀy`. Not used for learning; handy as an exactly
/// integrable kernel when checking quadratures.
#[derive(Debug, Clone, Copy, Default)]
pub struct LinearKernel;

impl<T: Real> Kernel<T> for LinearKernel {
    fn eval(&self, x: &[T], y: &[T]) -> T {
        dot(x, y)
    }
}

/// Explicit feature map `φ(x) = √(2/q) · cos(W x + b)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct FeatureMap<T> {
    /// `q × d`, rows drawn from `N(0, ℓ⁻² I)`.
    pub frequencies: Matrix<T>,
    /// `q` phases on `[0, 2π)`.
    pub phases: Vec<T>,
    pub scale: T,
}

impl<T: Real> FeatureMap<T> {
    pub fn feature_count(&self) -> usize {
        self.frequencies.nrows()
    }

    pub fn dim(&self) -> usize {
        self.frequencies.ncols()
    }

    /// Writes `φ(x)` into `out` without allocating.
    #[inline]
    pub fn features_into(&self, x: &[T], out: &mut [T]) {
        for ((o, w), &b) in out
            .iter_mut()
            .zip(self.frequencies.rows_iter())
            .zip(&self.phases)
        {
            *o = self.scale * (dot(w, x) + b).cos();
        }
    }

    pub fn features(&self, x: &[T]) -> Result<Vec<T>> {
        if x.len() != self.dim() {
            return invalid(format!(
                "feature map expects dimension {}, got {}",
                self.dim(),
                x.len()
            ));
        }
        let mut out = vec![T::zero(); self.feature_count()];
        self.features_into(x, &mut out);
        Ok(out)
    }

    /// `n × q` matrix whose row `i` is `φ(Xᵢ)`.
    pub fn eval(&self, x: &Matrix<T>) -> Result<Matrix<T>> {
        rff_eval(self, x)
    }

    /// Sanity check for maps read from disk.
    pub fn validate(&self) -> Result<()> {
        if self.phases.len() != self.feature_count() || self.feature_count() == 0 {
            return invalid("feature map phases do not match frequency rows");
        }
        if !self.frequencies.is_finite() || !self.scale.is_finite() {
            return invalid("feature map holds non-finite parameters");
        }
        Ok(())
    }
}

impl<T: Real> Kernel<T> for FeatureMap<T> {
    fn eval(&self, x: &[T], y: &[T]) -> T {
        let q = self.feature_count();
        let mut fx = vec![T::zero(); q];
        let mut fy = vec![T::zero(); q];
        self.features_into(x, &mut fx);
        self.features_into(y, &mut fy);
        dot(&fx, &fy)
    }

    fn gram(&self, x: &Matrix<T>, y: &Matrix<T>) -> Result<Matrix<T>> {
        check_dims(x, y)?;
        let px = rff_eval(self, x)?;
        let py = rff_eval(self, y)?;
        px.matmul_transpose(&py)
    }
}

/// A kernel resolved from a [`KernelSpec`].
#[derive(Debug, Clone, PartialEq)]
pub enum BuiltKernel<T> {
    Gaussian(Gaussian<T>),
    Features(FeatureMap<T>),
}

impl<T: Real> Kernel<T> for BuiltKernel<T> {
    fn eval(&self, x: &[T], y: &[T]) -> T {
        match self {
            Self::Gaussian(k) => k.eval(x, y),
            Self::Features(k) => Kernel::eval(k, x, y),
        }
    }

    fn gram(&self, x: &Matrix<T>, y: &Matrix<T>) -> Result<Matrix<T>> {
        match self {
            Self::Gaussian(k) => k.gram(x, y),
            Self::Features(k) => k.gram(x, y),
        }
    }
}

fn check_finite<T: Real>(v: &[T]) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        invalid("non-finite state coordinate")
    }
}

/// Checked Gaussian kernel evaluation.
pub fn gaussian_eval<T: Real>(x: &[T], y: &[T], lengthscale: T) -> Result<T> {
    if x.len() != y.len() {
        return invalid(format!("dimension mismatch: {} vs {}", x.len(), y.len()));
    }
    check_finite(x)?;
    check_finite(y)?;
    Ok(Gaussian::new(lengthscale)?.eval(x, y))
}

/// `n × m` Gram block between the rows of `x` and the rows of `y`.
pub fn pairwise_gram<T: Real>(x: &Matrix<T>, y: &Matrix<T>, spec: &KernelSpec<T>) -> Result<Matrix<T>> {
    check_dims(x, y)?;
    spec.build(x.ncols())?.gram(x, y)
}

/// The full matrix-valued kernel `k(x, y) · I_d`.
pub fn matrix_kernel<T: Real, K: Kernel<T>>(kernel: &K, x: &[T], y: &[T]) -> Matrix<T> {
    Matrix::identity(x.len()).scaled(kernel.eval(x, y))
}

/// Draws a random Fourier feature map for `d`-dimensional inputs.
///
/// Frequencies and phases are sampled in `f64` from a ChaCha8 stream seeded by
/// the spec, so a given spec yields the same map on every platform.
pub fn rff_build<T: Real>(spec: &KernelSpec<T>, d: usize) -> Result<FeatureMap<T>> {
    let KernelSpec::RandomFourier {
        lengthscale,
        features,
        seed,
    } = *spec
    else {
        return invalid("rff_build requires a random Fourier kernel spec");
    };
    spec.validate()?;
    if d == 0 {
        return invalid("feature map dimension must be at least 1");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let inv_l = 1.0 / lengthscale.to_f64_lossy();
    let mut w = Vec::with_capacity(features * d);
    let mut phases = Vec::with_capacity(features);
    for _ in 0..features {
        for _ in 0..d {
            let z: f64 = rng.sample(StandardNormal);
            w.push(T::lit(z * inv_l));
        }
        let u: f64 = rng.random::<f64>();
        phases.push(T::lit(u * std::f64::consts::TAU));
    }
    Ok(FeatureMap {
        frequencies: Matrix::from_vec(features, d, w)?,
        phases,
        scale: T::lit((2.0 / features as f64).sqrt()),
    })
}

/// Evaluates the feature map on every row of `x`.
pub fn rff_eval<T: Real>(map: &FeatureMap<T>, x: &Matrix<T>) -> Result<Matrix<T>> {
    if x.ncols() != map.dim() && x.nrows() > 0 {
        return invalid(format!(
            "feature map expects dimension {}, got {}",
            map.dim(),
            x.ncols()
        ));
    }
    let q = map.feature_count();
    let mut out = Matrix::zeros(x.nrows(), q);
    for i in 0..x.nrows() {
        map.features_into(x.row(i), out.row_mut(i));
    }
    Ok(out)
}

/// Median Euclidean distance between distinct rows, on at most `max_points`
/// evenly strided rows. Used to place lengthscale grids.
pub fn median_pairwise_distance<T: Real>(x: &Matrix<T>, max_points: usize) -> T {
    let n = x.nrows();
    if n < 2 {
        return T::one();
    }
    let stride = (n / max_points.max(2)).max(1);
    let idx: Vec<usize> = (0..n).step_by(stride).collect();
    let mut d: Vec<f64> = Vec::with_capacity(idx.len() * idx.len() / 2);
    for (a, &i) in idx.iter().enumerate() {
        for &j in &idx[a + 1..] {
            let s: T = x
                .row(i)
                .iter()
                .zip(x.row(j))
                .map(|(&p, &q)| (p - q) * (p - q))
                .sum();
            d.push(s.sqrt().to_f64_lossy());
        }
    }
    if d.is_empty() {
        return T::one();
    }
    d.sort_by(|a, b| a.total_cmp(b));
    let med = d[d.len() / 2];
    if med > 0.0 {
        T::lit(med)
    } else {
        T::one()
    }
}
