use ock_core::datasets::{generate, simulate, GeneratorConfig, System};
use ock_core::SnapshotSeries;

#[test]
fn lorenz63_stays_on_a_bounded_attractor() {
    let mut cfg = GeneratorConfig::new(System::Lorenz63);
    cfg.n_trajectories = 5;
    cfg.n_snapshots = 1001;
    cfg.t_span = (0.0, 10.0);
    cfg.noise_std = 0.0;
    let data: Vec<SnapshotSeries<f64>> = generate(&cfg).unwrap();
    for s in &data {
        for i in 0..s.len() {
            let r = s.state(i).iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!(r < 100.0, "|x| = {r} at snapshot {i}");
        }
    }
    let field = cfg.field::<f64>().unwrap();
    let times: Vec<f64> = (0..=100).map(|i| i as f64 * 0.01).collect();
    let start = simulate(&field, &[1.0, 1.0, 1.0], &times, 10).unwrap();
    assert_eq!(start.row(0), &[1.0, 1.0, 1.0]);
}

#[test]
fn fhn_default_parameters_oscillate() {
    let mut cfg = GeneratorConfig::new(System::Fhn);
    cfg.n_trajectories = 3;
    cfg.n_snapshots = 401;
    cfg.t_span = (0.0, 200.0);
    cfg.noise_std = 0.0;
    let data: Vec<SnapshotSeries<f64>> = generate(&cfg).unwrap();
    for s in &data {
        // late-time swing of the voltage variable, and repeated zero crossings
        // of its mean-removed signal
        let v: Vec<f64> = (200..s.len()).map(|i| s.state(i)[0]).collect();
        let (lo, hi) = v.iter().fold((f64::MAX, f64::MIN), |(a, b), &x| (a.min(x), b.max(x)));
        assert!(hi - lo > 2.0, "swing {}", hi - lo);
        let mean = v.iter().sum::<f64>() / v.len() as f64;
        let crossings = v.windows(2).filter(|w| (w[0] - mean) * (w[1] - mean) < 0.0).count();
        assert!(crossings >= 4, "{crossings} crossings");
    }
}

#[test]
fn noise_changes_observations_only() {
    let mut clean = GeneratorConfig::new(System::Lorenz63);
    clean.n_trajectories = 2;
    clean.n_snapshots = 50;
    clean.noise_std = 0.0;
    let mut noisy = clean.clone();
    noisy.noise_std = 0.5;
    let a: Vec<SnapshotSeries<f64>> = generate(&clean).unwrap();
    let b: Vec<SnapshotSeries<f64>> = generate(&noisy).unwrap();
    let mut sq = 0.0;
    let mut count = 0.0;
    for (x, y) in a.iter().zip(&b) {
        for (p, q) in x.states.as_slice().iter().zip(y.states.as_slice()) {
            sq += (p - q) * (p - q);
            count += 1.0;
        }
    }
    // residuals are the added noise alone, so their RMS is near 0.5
    let rms = (sq / count).sqrt();
    assert!((rms - 0.5).abs() < 0.1, "rms {rms}");
}
