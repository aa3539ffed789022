use gradfit::basis::{BasisFamily, InputMap, TensorBasis};
use gradfit::gels::{self, FitConfig, Sampler, Surrogate};
use gradfit::indexset::MultiIndexSet;
use gradfit::stats::{self, InputDistribution};
use statrs::distribution::{ContinuousCDF, Normal};

fn hermite(dim: usize, q: usize) -> TensorBasis {
    TensorBasis::new(BasisFamily::HERMITE, MultiIndexSet::total_degree(dim, q).unwrap(), InputMap::Identity).unwrap()
}

#[test]
fn linear_surrogate_cdf_is_normal() {
    // 1.5 + 0.7 He₁ is N(1.5, 0.7²)
    let s = Surrogate::new(hermite(1, 1), vec![1.5, 0.7]).unwrap();
    let dist = InputDistribution::standard_normal(1).unwrap();
    let cdf = stats::surrogate_cdf(&s, &dist, 100_000, 3).unwrap();
    let normal = Normal::new(1.5, 0.7).unwrap();
    let ks = cdf.ks_distance(|x| normal.cdf(x));
    assert!(ks <= 0.01, "KS distance {ks}");
    let again = stats::surrogate_cdf(&s, &dist, 100_000, 3).unwrap();
    assert_eq!(cdf.values(), again.values());
}

#[test]
fn square_of_normal_has_unit_mean() {
    let f = |x: &[f64]| -> gradfit::Result<f64> { Ok(x[0] * x[0]) };
    let g = |x: &[f64]| -> gradfit::Result<Vec<f64>> { Ok(vec![2.0 * x[0]]) };
    let dist = InputDistribution::standard_normal(1).unwrap();
    let cfg = FitConfig::new(hermite(1, 2), 3, 100, Sampler::Distribution(dist.clone()), 5);
    let s = gels::fit(&f, Some(&g), &cfg).unwrap();
    assert!((stats::pce_mean(&s).unwrap() - 1.0).abs() < 1e-6);
    let mc = stats::monte_carlo(&f, &dist, 1_000_000, 17).unwrap();
    assert!((mc.mean - 1.0).abs() < 3.0 * mc.mean_std_error());
}

/// Moments of an arbitrary orthonormal expansion agree with sampling it.
#[test]
fn moments_and_parseval_agree_with_sampling() {
    let basis = hermite(3, 3);
    let coef: Vec<f64> = (0..basis.len()).map(|j| ((j * 7 + 3) % 11) as f64 / 10.0 - 0.5).collect();
    let s = Surrogate::new(basis, coef.clone()).unwrap();
    let dist = InputDistribution::standard_normal(3).unwrap();
    let n = 1_000_000;
    let mc = stats::surrogate_monte_carlo(&s, &dist, n, 99).unwrap();
    let mean = stats::pce_mean(&s).unwrap();
    let std = stats::pce_std(&s).unwrap();
    assert!((mc.mean - mean).abs() < 3.0 * mc.mean_std_error());
    let m4 = mc.cdf.values().iter().map(|v| (v - mc.mean).powi(4)).sum::<f64>() / n as f64;
    let se_std = ((m4 - mc.std.powi(4)) / n as f64).sqrt() / (2.0 * mc.std);
    assert!((mc.std - std).abs() < 3.0 * se_std, "{} vs {std} ± {se_std}", mc.std);

    let second: f64 = mc.cdf.values().iter().map(|v| v * v).sum::<f64>() / n as f64;
    let parseval: f64 = coef.iter().map(|a| a * a).sum();
    assert!((second / parseval - 1.0).abs() < 0.01);
}

#[test]
fn median_of_symmetric_output() {
    let f = |x: &[f64]| -> gradfit::Result<f64> { Ok(x[0].powi(3) - x[1]) };
    let dist = InputDistribution::standard_normal(2).unwrap();
    let mc = stats::monte_carlo(&f, &dist, 200_000, 1).unwrap();
    assert!((mc.cdf.eval(0.0) - 0.5).abs() < 0.01);
}
