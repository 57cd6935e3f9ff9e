//! Trapezoid quadratures over two-sample trajectory segments and grid cells.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::kernels::Kernel;
use crate::linalg::Matrix;
use crate::scalar::Real;

/// A trajectory piece observed only at its two ends.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct Segment<T> {
    pub t_start: T,
    pub t_end: T,
    pub x_start: Vec<T>,
    pub x_end: Vec<T>,
    pub series_id: u64,
    pub index_in_series: usize,
}

impl<T: Real> Segment<T> {
    pub fn new(
        t_start: T,
        t_end: T,
        x_start: Vec<T>,
        x_end: Vec<T>,
        series_id: u64,
        index_in_series: usize,
    ) -> Result<Self> {
        let seg = Self {
            t_start,
            t_end,
            x_start,
            x_end,
            series_id,
            index_in_series,
        };
        seg.validate()?;
        Ok(seg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t_end > self.t_start) || !self.t_start.is_finite() || !self.t_end.is_finite() {
            return invalid(format!(
                "segment {}:{} needs t_end > t_start, got [{}, {}]",
                self.series_id, self.index_in_series, self.t_start, self.t_end
            ));
        }
        if self.x_start.len() != self.x_end.len() || self.x_start.is_empty() {
            return invalid(format!(
                "segment {}:{} endpoint dimensions {} and {}",
                self.series_id,
                self.index_in_series,
                self.x_start.len(),
                self.x_end.len()
            ));
        }
        if !self.x_start.iter().chain(&self.x_end).all(|v| v.is_finite()) {
            return invalid(format!(
                "segment {}:{} has non-finite states",
                self.series_id, self.index_in_series
            ));
        }
        Ok(())
    }

    #[inline]
    pub fn step(&self) -> T {
        self.t_end - self.t_start
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.x_start.len()
    }

    /// `x(b) − x(a)`.
    pub fn increment(&self) -> Vec<T> {
        self.x_end
            .iter()
            .zip(&self.x_start)
            .map(|(&e, &s)| e - s)
            .collect()
    }
}

/// `∮ k(z, x(t)) dt ≈ (b − a)/2 · (k(z, x(a)) + k(z, x(b)))`.
pub fn single_quadrature<T: Real, K: Kernel<T>>(z: &[T], seg: &Segment<T>, kernel: &K) -> Result<T> {
    if z.len() != seg.dim() {
        return invalid(format!(
            "query dimension {} does not match segment dimension {}",
            z.len(),
            seg.dim()
        ));
    }
    let half = seg.step() / T::lit(2.0);
    Ok(half * (kernel.eval(z, &seg.x_start) + kernel.eval(z, &seg.x_end)))
}

/// Distinct endpoint states of a segment list.
///
/// Consecutive segments of one series that meet at the same instant and state
/// share a node, so each interior snapshot is evaluated once.
#[derive(Debug, Clone)]
pub struct SegmentNodes<T> {
    pub nodes: Matrix<T>,
    /// `(start node, end node)` per segment.
    pub ends: Vec<(usize, usize)>,
    pub steps: Vec<T>,
}

impl<T: Real> SegmentNodes<T> {
    pub fn new(segments: &[Segment<T>]) -> Result<Self> {
        let Some(first) = segments.first() else {
            return invalid("segment list is empty");
        };
        let d = first.dim();
        let mut flat: Vec<T> = Vec::with_capacity((segments.len() + 1) * d);
        let mut ends = Vec::with_capacity(segments.len());
        let mut count = 0usize;
        let mut prev: Option<&Segment<T>> = None;
        for seg in segments {
            if seg.dim() != d {
                return invalid(format!(
                    "segment {}:{} has dimension {}, expected {d}",
                    seg.series_id,
                    seg.index_in_series,
                    seg.dim()
                ));
            }
            let shared = prev.is_some_and(|p| {
                p.series_id == seg.series_id && p.t_end == seg.t_start && p.x_end == seg.x_start
            });
            let start = if shared {
                count - 1
            } else {
                flat.extend_from_slice(&seg.x_start);
                count += 1;
                count - 1
            };
            flat.extend_from_slice(&seg.x_end);
            count += 1;
            ends.push((start, count - 1));
            prev = Some(seg);
        }
        Ok(Self {
            nodes: Matrix::from_vec(count, d, flat)?,
            ends,
            steps: segments.iter().map(Segment::step).collect(),
        })
    }

    pub fn len(&self) -> usize {
        self.ends.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ends.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.nodes.ncols()
    }

    /// `p × n` matrix of single quadratures `∮ k(zⱼ, xᵢ(t)) dt` for every
    /// query row `zⱼ` and segment `i`.
    pub fn single_quadratures<K: Kernel<T>>(&self, z: &Matrix<T>, kernel: &K) -> Result<Matrix<T>> {
        let g = kernel.gram(z, &self.nodes)?;
        let half = T::lit(0.5);
        Ok(Matrix::from_fn(z.nrows(), self.len(), |j, i| {
            let (s, e) = self.ends[i];
            half * self.steps[i] * (g[(j, s)] + g[(j, e)])
        }))
    }

    /// Segment-pair Gram matrix from a precomputed node Gram matrix.
    pub fn double_quadratures_from_node_gram(&self, g: &Matrix<T>) -> Matrix<T> {
        let n = self.len();
        let quarter = T::lit(0.25);
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            let (si, ei) = self.ends[i];
            let gs = g.row(si);
            let ge = g.row(ei);
            for j in 0..=i {
                let (sj, ej) = self.ends[j];
                let sum = (gs[sj] + gs[ej]) + (ge[sj] + ge[ej]);
                let v = quarter * (self.steps[i] * self.steps[j]) * sum;
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        m
    }
}

/// `M[i][j] = (hᵢ hⱼ / 4) · Σ k(·,·)` over the four endpoint pairs of
/// segments `i` and `j`. Exactly symmetric.
pub fn double_quadrature_gram<T: Real, K: Kernel<T>>(segments: &[Segment<T>], kernel: &K) -> Result<Matrix<T>> {
    let nodes = SegmentNodes::new(segments)?;
    let g = kernel.gram(&nodes.nodes, &nodes.nodes)?;
    Ok(nodes.double_quadratures_from_node_gram(&g))
}

/// Trapezoid rule on one rectangular cell from its corner values:
/// `(hx · hy / 4) · Σ corners`.
pub fn cell_trapezoid_2d<T: Real>(values: [[T; 2]; 2], hx: T, hy: T) -> Result<T> {
    if !(hx > T::zero()) || !(hy > T::zero()) {
        return invalid(format!("cell sides must be positive, got {hx} x {hy}"));
    }
    if !values.iter().flatten().all(|v| v.is_finite()) {
        return invalid("non-finite cell corner value");
    }
    let sum = (values[0][0] + values[0][1]) + (values[1][0] + values[1][1]);
    Ok(hx * hy / T::lit(4.0) * sum)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{Gaussian, LinearKernel};

    fn seg(a: f64, b: f64, xs: &[f64], xe: &[f64]) -> Segment<f64> {
        Segment::new(a, b, xs.to_vec(), xe.to_vec(), 0, 0).unwrap()
    }

    #[test]
    fn stationary_segment_integrates_length() {
        let k = Gaussian::new(0.3).unwrap();
        let s = seg(1.0, 1.1, &[0.5, 0.5], &[0.5, 0.5]);
        assert!((single_quadrature(&[0.5, 0.5], &s, &k).unwrap() - 0.1).abs() < 1e-15);
    }

    #[test]
    fn wide_kernel_approaches_constant() {
        let k = Gaussian::new(1e8).unwrap();
        let s = seg(0.0, 2.5, &[0.0], &[0.0]);
        assert!((single_quadrature(&[1.0], &s, &k).unwrap() - 2.5).abs() < 1e-12);
    }

    #[test]
    fn trapezoid_value() {
        let k = Gaussian::new(1.0).unwrap();
        let s = seg(0.0, 1.0, &[0.0], &[1.0]);
        let v = single_quadrature(&[0.0], &s, &k).unwrap();
        assert!((v - 0.5 * (1.0 + (-0.5f64).exp())).abs() < 1e-15);
        assert!((v - 0.8032653).abs() < 1e-7);
    }

    #[test]
    fn single_quadrature_dimension_mismatch() {
        let k = Gaussian::new(1.0).unwrap();
        let s = seg(0.0, 1.0, &[0.0], &[1.0]);
        assert!(single_quadrature(&[0.0, 1.0], &s, &k).is_err());
    }

    #[test]
    fn stationary_double_quadrature() {
        let k = Gaussian::new(1.0).unwrap();
        let m = double_quadrature_gram(&[seg(0.0, 0.1, &[2.0], &[2.0])], &k).unwrap();
        assert!((m[(0, 0)] - 0.01).abs() < 1e-16);
    }

    #[test]
    fn product_kernel_is_exact_on_linear_path() {
        let m = double_quadrature_gram(&[seg(0.0, 1.0, &[0.0], &[1.0])], &LinearKernel).unwrap();
        assert_eq!(m[(0, 0)], 0.25);
    }

    #[test]
    fn empty_segments_rejected() {
        assert!(double_quadrature_gram::<f64, _>(&[], &LinearKernel).is_err());
    }

    #[test]
    fn degenerate_segment_rejected() {
        assert!(Segment::new(1.0, 1.0, vec![0.0], vec![0.0], 0, 0).is_err());
        assert!(Segment::new(0.0, 1.0, vec![0.0], vec![0.0, 1.0], 0, 0).is_err());
        assert!(Segment::new(0.0, 1.0, vec![f64::INFINITY], vec![0.0], 0, 0).is_err());
    }

    #[test]
    fn nodes_shared_within_series_only() {
        let a = Segment::new(0.0, 1.0, vec![0.0], vec![1.0], 0, 0).unwrap();
        let b = Segment::new(1.0, 2.0, vec![1.0], vec![3.0], 0, 1).unwrap();
        let c = Segment::new(2.0, 3.0, vec![3.0], vec![4.0], 1, 0).unwrap();
        let nodes = SegmentNodes::new(&[a, b, c]).unwrap();
        assert_eq!(nodes.ends, vec![(0, 1), (1, 2), (3, 4)]);
        assert_eq!(nodes.nodes.nrows(), 5);
    }

    #[test]
    fn mixed_dimensions_rejected() {
        let a = seg(0.0, 1.0, &[0.0], &[1.0]);
        let b = seg(0.0, 1.0, &[0.0, 0.0], &[1.0, 1.0]);
        assert!(SegmentNodes::new(&[a, b]).is_err());
    }

    #[test]
    fn cell_rule() {
        assert!((cell_trapezoid_2d::<f64>([[2.0, 2.0], [2.0, 2.0]], 0.5, 0.25).unwrap() - 0.25).abs() < 1e-16);
        // g = x + y on the unit square
        assert_eq!(cell_trapezoid_2d([[0.0, 1.0], [1.0, 2.0]], 1.0, 1.0).unwrap(), 1.0);
        assert_eq!(cell_trapezoid_2d([[1.0, -1.0], [-1.0, 1.0]], 0.3, 0.7).unwrap(), 0.0);
        assert!(cell_trapezoid_2d([[f64::NAN, 0.0], [0.0, 0.0]], 1.0, 1.0).is_err());
        assert!(cell_trapezoid_2d([[0.0, 0.0], [0.0, 0.0]], 0.0, 1.0).is_err());
    }
}
