//! Acceptance suite. Runs every criterion in sequence (so timings are not
//! disturbed by parallel tests) and prints one PASS/FAIL line each.

use std::process::ExitCode;
use std::time::Instant;

use ock_core::datasets::{generate, System};
use ock_core::experiment::{experiment_preset, pde_preset, run_training, DatasetSource};
use ock_core::inference::{integrate, FnField, VectorField};
use ock_core::kernels::{Gaussian, KernelSpec, LinearKernel};
use ock_core::learner::{data_term, fit_series, reshape_snapshots, segment_gram, training_objective, weak_loss, FitPath};
use ock_core::pde::{loglog_slope, pde_study};
use ock_core::quadrature::{double_quadrature_gram, Segment};
use ock_core::{GeneratorConfig, Matrix, SnapshotSeries};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn random_segments(n: usize, d: usize, seed: u64) -> Vec<Segment<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let a: f64 = rng.random_range(0.0..5.0);
            let h: f64 = rng.random_range(0.01..0.5);
            let xs: Vec<f64> = (0..d).map(|_| rng.random_range(-2.0..2.0)).collect();
            let xe: Vec<f64> = (0..d).map(|_| rng.random_range(-2.0..2.0)).collect();
            Segment::new(a, a + h, xs, xe, i as u64, 0).unwrap()
        })
        .collect()
}

fn oracle_k(x: &[f64], y: &[f64], l: f64) -> f64 {
    let mut s = 0.0;
    for k in 0..x.len() {
        s += (x[k] - y[k]) * (x[k] - y[k]);
    }
    (-s / (2.0 * l * l)).exp()
}

fn quadrature_oracle() -> Outcome {
    let l = 1.3;
    let segs = random_segments(100, 3, 11);
    let m = double_quadrature_gram(&segs, &Gaussian::new(l).unwrap()).unwrap();
    let mut worst: f64 = 0.0;
    for (i, a) in segs.iter().enumerate() {
        for (j, b) in segs.iter().enumerate() {
            let mut sum = 0.0;
            for p in [&a.x_start, &a.x_end] {
                for q in [&b.x_start, &b.x_end] {
                    sum += oracle_k(p, q, l);
                }
            }
            let expect = (a.t_end - a.t_start) * (b.t_end - b.t_start) / 4.0 * sum;
            worst = worst.max((m[(i, j)] - expect).abs());
        }
    }
    outcome(worst <= 1e-12, format!("max abs diff {worst:.2e} (tol 1e-12)"))
}

fn product_kernel_exactness() -> Outcome {
    let seg = Segment::new(0.0, 1.0, vec![0.0], vec![1.0], 0, 0).unwrap();
    let v: f64 = double_quadrature_gram(&[seg], &LinearKernel).unwrap()[(0, 0)];
    outcome((v - 0.25).abs() <= 1e-14, format!("value {v} vs 0.25 (tol 1e-14)"))
}

const FHN_LAMBDA: f64 = 1e-4;
const FHN_LENGTHSCALE: f64 = 1.0;

fn fhn_desk_data() -> Vec<SnapshotSeries<f64>> {
    let cfg = experiment_preset("fhn-desk").unwrap();
    let DatasetSource::Generate(g) = cfg.dataset else { unreachable!() };
    generate(&g).unwrap()
}

fn ridge_optimality(data: &[SnapshotSeries<f64>]) -> Outcome {
    let spec = KernelSpec::gaussian(FHN_LENGTHSCALE).unwrap();
    let model = fit_series(data, &spec, FHN_LAMBDA, FitPath::Implicit, false).unwrap();
    let train = reshape_snapshots(data).unwrap();
    let m = segment_gram(&train, &spec).unwrap();
    let alpha = model.alpha().unwrap();
    let j0 = training_objective(alpha, &train, &m, FHN_LAMBDA).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let scale = alpha.frobenius_norm() / (alpha.as_slice().len() as f64).sqrt();
    let mut margin = f64::INFINITY;
    for k in 0..100 {
        let eps = scale * 10f64.powi(-(k % 5));
        let pert = Matrix::from_fn(alpha.nrows(), alpha.ncols(), |_, _| eps * rng.random_range(-1.0..1.0));
        let j = training_objective(&alpha.add(&pert).unwrap(), &train, &m, FHN_LAMBDA).unwrap();
        margin = margin.min(j - j0);
    }
    outcome(
        margin >= -1e-9,
        format!("n={} min J(alpha+p)-J(alpha) = {margin:.3e} (tol -1e-9)", train.len()),
    )
}

fn weak_loss_reduction(data: &[SnapshotSeries<f64>]) -> Outcome {
    let spec = KernelSpec::gaussian(FHN_LENGTHSCALE).unwrap();
    let model = fit_series(data, &spec, FHN_LAMBDA, FitPath::Implicit, false).unwrap();
    let train = reshape_snapshots(data).unwrap();
    let m = segment_gram(&train, &spec).unwrap();
    let q = weak_loss(&model, data).unwrap();
    let dt = data_term(model.alpha().unwrap(), &train, &m).unwrap();
    let diff = (q - dt).abs();
    outcome(diff <= 1e-10, format!("weak loss {q:.6e} data term {dt:.6e} diff {diff:.2e} (tol 1e-10)"))
}

fn grid(n: usize, lo: [f64; 2], hi: [f64; 2]) -> Matrix<f64> {
    Matrix::from_fn(n * n, 2, |r, k| {
        let idx = if k == 0 { r / n } else { r % n };
        lo[k] + (hi[k] - lo[k]) * idx as f64 / (n - 1) as f64
    })
}

fn relative_rms(a: &Matrix<f64>, reference: &Matrix<f64>) -> f64 {
    let num: f64 = a.as_slice().iter().zip(reference.as_slice()).map(|(x, y)| (x - y) * (x - y)).sum();
    let den: f64 = reference.as_slice().iter().map(|y| y * y).sum();
    (num / den).sqrt()
}

fn path_equivalence(data: &[SnapshotSeries<f64>]) -> Outcome {
    let implicit = fit_series(data, &KernelSpec::gaussian(FHN_LENGTHSCALE).unwrap(), FHN_LAMBDA, FitPath::Implicit, false).unwrap();
    let rff = KernelSpec::random_fourier(FHN_LENGTHSCALE, 2000, 2024).unwrap();
    let explicit = fit_series(data, &rff, FHN_LAMBDA, FitPath::Explicit, false).unwrap();
    let z = grid(20, [-2.0, -2.0], [2.0, 2.0]);
    let fi = implicit.eval_rows(&z).unwrap();
    let fe = explicit.eval_rows(&z).unwrap();
    let r = relative_rms(&fe, &fi);
    outcome(r < 0.05, format!("relative RMS difference {:.2}% (tol 5%)", 100.0 * r))
}

fn linear_field_recovery() -> Outcome {
    let a = [[-0.1, 1.0], [-1.0, -0.1]];
    let field = FnField::new(2, move |x: &[f64], o: &mut [f64]| {
        o[0] = a[0][0] * x[0] + a[0][1] * x[1];
        o[1] = a[1][0] * x[0] + a[1][1] * x[1];
    });
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let times: Vec<f64> = (0..100).map(|i| i as f64 * 0.1).collect();
    let data: Vec<SnapshotSeries<f64>> = (0..20)
        .map(|k| {
            let x0 = [rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)];
            let p = integrate(&field, &x0, &times, 20).unwrap();
            let states = Matrix::from_rows(&p.states, 2).unwrap();
            SnapshotSeries::new(k, times.clone(), states).unwrap()
        })
        .collect();
    let model = fit_series(&data, &KernelSpec::gaussian(2.0).unwrap(), 1e-8, FitPath::Implicit, false).unwrap();
    let z = grid(20, [-1.0, -1.0], [1.0, 1.0]);
    let truth = Matrix::from_fn(z.nrows(), 2, |r, k| field.eval(z.row(r))[k]);
    let r = relative_rms(&model.eval_rows(&z).unwrap(), &truth);
    outcome(r < 0.05, format!("field RMS error {:.3}% of RMS magnitude (tol 5%)", 100.0 * r))
}

fn null_model_ordering() -> Outcome {
    let cfg = experiment_preset("lorenz63-desk").unwrap();
    let (_, report) = run_training(&cfg).unwrap();
    let test = report.test.expect("preset has a test split");
    let ratio = test.err.mean / test.null_err.mean;
    outcome(
        ratio <= 0.6 && report.n_train + report.n_validation == 15 && report.n_test == 5,
        format!(
            "train+val {} test {}; OCK Err {:.3} null Err {:.3} ratio {ratio:.3} (tol 0.6) at lambda {:e} lengthscale {}",
            report.n_train + report.n_validation,
            report.n_test,
            test.err.mean,
            test.null_err.mean,
            report.chosen_lambda,
            report.chosen_lengthscale
        ),
    )
}

fn lorenz96_equilibrium() -> Outcome {
    let mut worst: f64 = 0.0;
    for d in [16, 32, 128] {
        let cfg = GeneratorConfig::new(System::Lorenz96).with_dimension(d);
        let field = cfg.field::<f64>().unwrap();
        let v = field.eval(&vec![8.0; d]);
        worst = worst.max(v.iter().fold(0.0, |m, x| m.max(x.abs())));
    }
    outcome(worst <= 8.0 * f64::EPSILON, format!("max |dx/dt| at x = F: {worst:e}"))
}

fn pde_convergence() -> Outcome {
    let study = pde_preset("pde-desk").unwrap();
    let rows = pde_study::<f64>(&study.sizes, &study.fit).unwrap();
    let nm: Vec<f64> = rows.iter().map(|r| (r.n * r.m) as f64).collect();
    let a: Vec<f64> = rows.iter().map(|r| r.alpha_err).collect();
    let f: Vec<f64> = rows.iter().map(|r| r.f_err).collect();
    let monotone = |v: &[f64]| v.windows(2).all(|w| w[1] < w[0]);
    let sa = loglog_slope(&nm, &a).unwrap();
    let sf = loglog_slope(&nm, &f).unwrap();
    let in_band = |s: f64| (-1.4..=-0.6).contains(&s);
    let table: Vec<String> = rows
        .iter()
        .map(|r| format!("{}x{}: {:.2e}/{:.2e}", r.n, r.m, r.alpha_err, r.f_err))
        .collect();
    outcome(
        monotone(&a) && monotone(&f) && in_band(sa) && in_band(sf),
        format!("alpha/f errors [{}]; slopes {sa:.3} / {sf:.3} (band -1 +- 0.4)", table.join(", ")),
    )
}

fn gram_scaling() -> Outcome {
    let time = |d: usize| {
        let segs = random_segments(1000, d, 40 + d as u64);
        let k = Gaussian::new((d as f64).sqrt()).unwrap();
        double_quadrature_gram(&segs, &k).unwrap();
        (0..5)
            .map(|_| {
                let t = Instant::now();
                std::hint::black_box(double_quadrature_gram(&segs, &k).unwrap());
                t.elapsed().as_secs_f64()
            })
            .fold(f64::INFINITY, f64::min)
    };
    let t16 = time(16);
    let t128 = time(128);
    let ratio = t128 / t16;
    outcome(
        ratio <= 3.0,
        format!("d=16 {:.1} ms, d=128 {:.1} ms, ratio {ratio:.2} (tol 3)", 1e3 * t16, 1e3 * t128),
    )
}

fn integrator_order() -> Outcome {
    let f = FnField::new(1, |x: &[f64], o: &mut [f64]| o[0] = x[0]);
    let err = |s: usize| (integrate(&f, &[1.0], &[0.0, 1.0], s).unwrap().states[1][0] - 1f64.exp()).abs();
    let ratios: Vec<f64> = [4, 8, 16].iter().map(|&s| err(s) / err(2 * s)).collect();
    let min = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    outcome(
        min >= 8.0,
        format!(
            "error ratios on doubling substeps {:?} (tol 8)",
            ratios.iter().map(|r| format!("{r:.1}")).collect::<Vec<_>>()
        ),
    )
}

type Criterion<'a> = (&'static str, f64, Box<dyn Fn() -> Outcome + 'a>);

fn main() -> ExitCode {
    let fhn = fhn_desk_data();
    let criteria: Vec<Criterion> = vec![
        ("quadrature oracle equivalence", 5.0, Box::new(quadrature_oracle)),
        ("product kernel exactness", f64::INFINITY, Box::new(product_kernel_exactness)),
        ("ridge optimality", 30.0, Box::new(|| ridge_optimality(&fhn))),
        ("weak loss reduction", f64::INFINITY, Box::new(|| weak_loss_reduction(&fhn))),
        ("path equivalence", 60.0, Box::new(|| path_equivalence(&fhn))),
        ("linear field recovery", 60.0, Box::new(linear_field_recovery)),
        ("null-model ordering", 300.0, Box::new(null_model_ordering)),
        ("Lorenz96 equilibrium", f64::INFINITY, Box::new(lorenz96_equilibrium)),
        ("PDE convergence", 600.0, Box::new(pde_convergence)),
        ("Gram complexity scaling", f64::INFINITY, Box::new(gram_scaling)),
        ("integrator order", f64::INFINITY, Box::new(integrator_order)),
    ];
    let mut failed = 0;
    for (k, (name, budget, run)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let out = run();
        let secs = t.elapsed().as_secs_f64();
        let pass = out.pass && secs < *budget;
        if !pass {
            failed += 1;
        }
        let budget_note = if budget.is_finite() {
            format!(", budget {budget:.0} s")
        } else {
            String::new()
        };
        println!(
            "{} criterion {:>2} {name}: {} [{secs:.2} s{budget_note}]",
            if pass { "PASS" } else { "FAIL" },
            k + 1,
            out.detail
        );
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
