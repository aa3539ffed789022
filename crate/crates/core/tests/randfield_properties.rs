use gradfit::randfield::{self, LognormalParams};
use gradfit::stats::{self, InputDistribution};
use nalgebra::DMatrix;

#[test]
fn covariance_reproduced_at_nodes() {
    let nodes = randfield::grid_nodes(5, -1.0, 1.0).unwrap();
    let model = randfield::build_eole(nodes.clone(), 0.6, 25).unwrap();
    let proj = model.projection(&nodes).unwrap();
    let dist = InputDistribution::standard_normal(25).unwrap();
    let n = 100_000;
    let draws = stats::sample_inputs_chunked(&dist, n, 4, |xi| proj.apply(xi)).unwrap();
    let mut cov = DMatrix::<f64>::zeros(25, 25);
    for g in &draws {
        for i in 0..25 {
            for j in 0..25 {
                cov[(i, j)] += g[i] * g[j];
            }
        }
    }
    cov /= n as f64;
    let target = model.truncated_covariance();
    let dev = (cov - target).amax();
    assert!(dev < 0.03, "max covariance deviation {dev}");
}

#[test]
fn eigenpairs_are_orthonormal_and_sorted() {
    let model = randfield::build_eole(randfield::grid_nodes(8, -1.0, 1.0).unwrap(), 0.2, 40).unwrap();
    let phi = model.eigvecs();
    let gram = phi.transpose() * phi;
    assert!((gram - DMatrix::identity(40, 40)).amax() < 1e-8);
    assert!(model.eigvals().windows(2).all(|w| w[0] >= w[1]));
    assert!(model.eigvals().iter().all(|&l| l > 1e-12));
}

/// Lognormal moments against trapezoid quadrature over the Gaussian density.
#[test]
fn lognormal_moment_identities() {
    let p = LognormalParams::DEFAULT;
    let h = 1e-3;
    let density = |g: f64| (-0.5 * g * g).exp() / (2.0 * std::f64::consts::PI).sqrt();
    let (mut m1, mut m2) = (0.0, 0.0);
    let steps = (24.0 / h) as i64;
    for k in -steps / 2..=steps / 2 {
        let g = k as f64 * h;
        let k = p.transform(g);
        m1 += k * density(g) * h;
        m2 += k * k * density(g) * h;
    }
    assert!((m1 - p.mean()).abs() < 1e-12);
    assert!(((m2 - m1 * m1).sqrt() - p.std()).abs() < 1e-12);
}
