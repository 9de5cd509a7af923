//! Monte-Carlo checks against reference simulation means. Each cell
//! runs its own replications, so these take a few seconds in release mode.

use foldkit::simbench::{gen_mixture, monte_carlo, BenchConfig, Estimator, MixtureModelSpec, Table, Variant};
use foldkit::rng::seeded;
use foldkit::Method;

fn cell(table: Table, estimator: Estimator, p: usize, n: usize, reps: usize) -> (f64, f64) {
    let mut config = BenchConfig::new(table, reps, 2024);
    config.n_list = vec![n];
    config.p_list = vec![p];
    config.estimators = vec![estimator];
    config.benchmark_reps = 100;
    let report = monte_carlo(&config).unwrap();
    let c = report.cell(estimator, p, n).unwrap();
    assert_eq!(c.failures, 0, "{} failed {} times", estimator.name(), c.failures);
    (c.mean, c.se)
}

fn variance(values: &[f64]) -> f64 {
    let m = values.iter().sum::<f64>() / values.len() as f64;
    values.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (values.len() - 1) as f64
}

#[test]
fn generator_matches_its_parameters() {
    let n = 10_000;
    let one = gen_mixture(&MixtureModelSpec::new(Variant::Example1, 5), n, &mut seeded(1)).unwrap();
    let ys = one.samples.ys();
    let ones = ys.iter().filter(|&&y| y == 1.0).count() as f64;
    assert!((ones - n as f64 * 0.5).abs() <= 3.0 * (n as f64 * 0.25).sqrt());
    let x12_given_0: Vec<f64> = one
        .samples
        .xs()
        .iter()
        .zip(ys)
        .filter(|(_, &y)| y == 0.0)
        .map(|(x, _)| x[(0, 1)])
        .collect();
    assert!((variance(&x12_given_0) / 0.1 - 1.0).abs() < 0.05);

    let two = gen_mixture(&MixtureModelSpec::new(Variant::Example2, 5), n, &mut seeded(2)).unwrap();
    let x11_given_1: Vec<f64> = two
        .samples
        .xs()
        .iter()
        .zip(two.samples.ys())
        .filter(|(_, &y)| y == 1.0)
        .map(|(x, _)| x[(0, 0)])
        .collect();
    assert!((variance(&x11_given_1) / 1.5 - 1.0).abs() < 0.05);
}

#[test]
fn table_one_reference_cells() {
    let (dr, _) = cell(Table::One, Estimator::Folded(Method::Dr), 5, 800, 100);
    assert!((dr - 0.119).abs() <= 0.03, "folded-DR n=800: {dr}");
    // Folded-SIR at n = 100 has the widest spread of any cell; 300
    // replications keep the Monte-Carlo error well inside the band.
    let (sir, _) = cell(Table::One, Estimator::Folded(Method::Sir), 5, 100, 300);
    assert!((sir - 1.115).abs() <= 0.1, "folded-SIR n=100: {sir}");
}

#[test]
fn table_two_reference_cells() {
    let (save, _) = cell(Table::Two, Estimator::Folded(Method::Save), 5, 800, 100);
    assert!((save - 0.123).abs() <= 0.04, "folded-SAVE n=800: {save}");
    let (sir, _) = cell(Table::Two, Estimator::Conventional(Method::Sir), 5, 800, 100);
    assert!((sir - 1.753).abs() <= 0.1, "SIR n=800: {sir}");
    let (dr, _) = cell(Table::Two, Estimator::Conventional(Method::Dr), 5, 800, 100);
    assert!((dr - 0.574).abs() <= 0.05, "DR n=800: {dr}");
}

#[test]
fn folded_beats_conventional_from_n_300() {
    let mut config = BenchConfig::new(Table::Two, 100, 7);
    config.n_list = vec![300, 500, 800];
    config.p_list = vec![5];
    config.benchmark_reps = 2000;
    let report = monte_carlo(&config).unwrap();
    let bench = report.benchmark(5).unwrap();
    let q = 4.0f64;
    for &n in &config.n_list {
        for method in Method::ALL {
            let folded = report.cell(Estimator::Folded(method), 5, n).unwrap();
            let plain = report.cell(Estimator::Conventional(method), 5, n).unwrap();
            assert!(folded.mean <= plain.mean, "{} n={n}", method.name());
        }
    }
    for c in &report.cells {
        assert!(c.mean <= bench.mean + 3.0 * bench.se, "{} n={}", c.estimator.name(), c.n);
        assert!(c.distances.iter().all(|&d| (0.0..=(2.0 * q).sqrt() + 1e-12).contains(&d)));
    }
}

#[test]
fn standard_error_scales_with_replications() {
    let est = Estimator::Folded(Method::Dr);
    let (_, se_small) = cell(Table::One, est, 5, 200, 50);
    let (_, se_large) = cell(Table::One, est, 5, 200, 200);
    let ratio = se_small / se_large;
    assert!((ratio / 2.0 - 1.0).abs() <= 0.3, "SE ratio {ratio}");
}

#[test]
fn reports_are_reproducible() {
    let mut config = BenchConfig::new(Table::Two, 6, 99);
    config.n_list = vec![120];
    config.p_list = vec![4];
    config.benchmark_reps = 50;
    let first = monte_carlo(&config).unwrap();
    let second = monte_carlo(&config).unwrap();
    assert_eq!(first, second);
}

#[test]
fn table_two_folded_save_at_p_ten() {
    let (save, _) = cell(Table::Two, Estimator::Folded(Method::Save), 10, 300, 50);
    assert!((save - 0.537).abs() <= 0.1, "folded-SAVE p=10 n=300: {save}");
}
