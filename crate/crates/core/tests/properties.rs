use std::collections::BTreeSet;

use approx::assert_relative_eq;
use ock_core::datasets::{read_csv, split, write_csv, CsvOptions};
use ock_core::kernels::{pairwise_gram, KernelSpec};
use ock_core::quadrature::cell_trapezoid_2d;
use ock_core::{Matrix, SnapshotSeries};
use proptest::prelude::*;

fn points(n: usize, d: usize) -> impl Strategy<Value = Matrix<f64>> {
    prop::collection::vec(-5.0..5.0f64, n * d).prop_map(move |v| Matrix::from_vec(n, d, v).unwrap())
}

fn series_set(count: usize) -> Vec<SnapshotSeries<f64>> {
    (0..count)
        .map(|k| {
            let times = vec![0.0, 1.0];
            SnapshotSeries::new(k as u64, times, Matrix::from_fn(2, 1, |i, _| (k + i) as f64)).unwrap()
        })
        .collect()
}

proptest! {
    #[test]
    fn gram_is_symmetric_with_unit_diagonal(
        x in (1usize..30, 1usize..6).prop_flat_map(|(n, d)| points(n, d)),
        l in 0.05..10.0f64,
    ) {
        let g = pairwise_gram(&x, &x, &KernelSpec::gaussian(l).unwrap()).unwrap();
        prop_assert!(g.is_symmetric());
        for i in 0..x.nrows() {
            prop_assert_eq!(g[(i, i)], 1.0);
        }
        prop_assert!(g.as_slice().iter().all(|&v| (0.0..=1.0).contains(&v)));
    }

    #[test]
    fn trapezoid_is_exact_for_bilinear_functions(
        c in prop::array::uniform4(-10.0..10.0f64),
        x0 in -5.0..5.0f64,
        y0 in -5.0..5.0f64,
        hx in 0.01..3.0f64,
        hy in 0.01..3.0f64,
    ) {
        let f = |x: f64, y: f64| c[0] + c[1] * x + c[2] * y + c[3] * x * y;
        let values = [[f(x0, y0), f(x0, y0 + hy)], [f(x0 + hx, y0), f(x0 + hx, y0 + hy)]];
        let got = cell_trapezoid_2d(values, hx, hy).unwrap();
        let (x1, y1) = (x0 + hx, y0 + hy);
        let exact = c[0] * hx * hy
            + c[1] * (x1 * x1 - x0 * x0) / 2.0 * hy
            + c[2] * (y1 * y1 - y0 * y0) / 2.0 * hx
            + c[3] * (x1 * x1 - x0 * x0) * (y1 * y1 - y0 * y0) / 4.0;
        assert_relative_eq!(got, exact, epsilon = 1e-9, max_relative = 1e-9);
    }

    #[test]
    fn split_partitions_every_series_once(
        n in 3usize..60,
        a in 0.1..1.0f64,
        b in 0.1..1.0f64,
        c in 0.1..1.0f64,
        seed in any::<u64>(),
    ) {
        let total = a + b + c;
        let data = series_set(n);
        let parts = split(&data, [a / total, b / total, c / total], seed).unwrap();
        let ids: Vec<u64> = parts.train.iter().chain(&parts.validation).chain(&parts.test).map(|s| s.series_id).collect();
        prop_assert_eq!(ids.len(), n);
        prop_assert_eq!(ids.iter().collect::<BTreeSet<_>>().len(), n);
        prop_assert!(!parts.train.is_empty() && !parts.validation.is_empty() && !parts.test.is_empty());
        prop_assert_eq!(parts.clone(), split(&data, [a / total, b / total, c / total], seed).unwrap());
    }

    #[test]
    fn csv_round_trip_is_exact(
        values in prop::collection::vec(-1e6..1e6f64, 3 * 5 * 2),
        dt in 0.001..10.0f64,
    ) {
        let data: Vec<SnapshotSeries<f64>> = (0..3)
            .map(|k| {
                let times: Vec<f64> = (0..5).map(|i| i as f64 * dt).collect();
                let states = Matrix::from_vec(5, 2, values[k * 10..(k + 1) * 10].to_vec()).unwrap();
                SnapshotSeries::new(k as u64, times, states).unwrap()
            })
            .collect();
        let mut buf = Vec::new();
        write_csv(&mut buf, &data).unwrap();
        let back: Vec<SnapshotSeries<f64>> = read_csv(buf.as_slice(), CsvOptions::default()).unwrap();
        prop_assert_eq!(back, data);
    }
}

#[test]
fn split_sizes_follow_the_fractions() {
    let data = series_set(10);
    let parts = split(&data, [0.7, 0.1, 0.2], 3).unwrap();
    assert_eq!((parts.train.len(), parts.validation.len(), parts.test.len()), (7, 1, 2));
    assert!(split(&data, [0.7, 0.1, 0.3], 3).is_err());
    assert!(split(&series_set(2), [0.5, 0.25, 0.25], 3).is_err());
}
