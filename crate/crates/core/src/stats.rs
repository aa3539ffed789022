//! Moments from orthonormal expansions and Monte Carlo references.

use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::gels::{Surrogate, ValueFn};
pub use crate::sampling::{InputDistribution, Marginal};

/// Samples per independently seeded Monte Carlo chunk. Fixed so that results
/// do not depend on how chunks are spread over threads.
pub const MC_CHUNK: usize = 4096;

fn require_orthonormal(s: &Surrogate) -> Result<()> {
    if s.basis().is_orthonormal() {
        Ok(())
    } else {
        Err(Error::Contract(format!(
            "PCE moments need a normalized Hermite basis in standard-normal coordinates, got {} with {:?}",
            s.basis().family(),
            s.basis().map()
        )))
    }
}

/// Mean of the surrogate output: the coefficient of the constant polynomial.
pub fn pce_mean(s: &Surrogate) -> Result<f64> {
    require_orthonormal(s)?;
    Ok(s.coefficients()[0])
}

/// Standard deviation: `(Σ_{j≥2} α_j²)^{1/2}`.
pub fn pce_std(s: &Surrogate) -> Result<f64> {
    require_orthonormal(s)?;
    Ok(s.coefficients()[1..].iter().map(|a| a * a).sum::<f64>().sqrt())
}

/// Sorted samples; `eval` is the right-continuous step function.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalCdf {
    values: Vec<f64>,
}

impl EmpiricalCdf {
    pub fn new(mut values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::param("empty sample"));
        }
        if values.iter().any(|v| v.is_nan()) {
            return Err(Error::param("sample contains NaN"));
        }
        values.sort_by(f64::total_cmp);
        Ok(EmpiricalCdf { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Fraction of samples `≤ x`.
    pub fn eval(&self, x: f64) -> f64 {
        self.values.partition_point(|&v| v <= x) as f64 / self.values.len() as f64
    }

    /// Smallest sample value whose CDF reaches `prob`.
    pub fn quantile(&self, prob: f64) -> f64 {
        let n = self.values.len();
        let k = ((prob.clamp(0.0, 1.0) * n as f64).ceil() as usize).clamp(1, n);
        self.values[k - 1]
    }

    /// Kolmogorov–Smirnov distance to a continuous reference CDF.
    pub fn ks_distance(&self, cdf: impl Fn(f64) -> f64) -> f64 {
        let n = self.values.len() as f64;
        self.values
            .iter()
            .enumerate()
            .map(|(i, &v)| {
                let c = cdf(v);
                (c - i as f64 / n).abs().max(((i + 1) as f64 / n - c).abs())
            })
            .fold(0.0, f64::max)
    }

    /// Two-column CSV `value,probability`, one row per sample.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let n = self.values.len() as f64;
        for (i, v) in self.values.iter().enumerate() {
            writeln!(w, "{v:.17e},{:.17e}", (i + 1) as f64 / n)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct MonteCarlo {
    pub mean: f64,
    /// Unbiased sample standard deviation.
    pub std: f64,
    pub cdf: EmpiricalCdf,
}

impl MonteCarlo {
    /// Standard error of the mean.
    pub fn mean_std_error(&self) -> f64 {
        self.std / (self.cdf.len() as f64).sqrt()
    }
}

/// Draws `n` inputs in fixed-size chunks; chunk `k` uses ChaCha stream `k`
/// of `seed`.
pub fn sample_inputs_chunked<T: Send>(
    dist: &InputDistribution,
    n: usize,
    seed: u64,
    map: impl Fn(&[f64]) -> Result<T> + Sync,
) -> Result<Vec<T>> {
    let chunks = n.div_ceil(MC_CHUNK);
    let parts = (0..chunks)
        .into_par_iter()
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(k as u64);
            let len = MC_CHUNK.min(n - k * MC_CHUNK);
            (0..len)
                .map(|_| {
                    let x = dist.draw(&mut rng);
                    map(&x).map_err(|e| match e {
                        e @ Error::Evaluator { .. } => e,
                        other => Error::Evaluator {
                            point: x.clone(),
                            message: other.to_string(),
                        },
                    })
                })
                .collect::<Result<Vec<T>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(parts.into_iter().flatten().collect())
}

fn summarize(values: Vec<f64>) -> Result<MonteCarlo> {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Ok(MonteCarlo {
        mean,
        std: var.sqrt(),
        cdf: EmpiricalCdf::new(values)?,
    })
}

pub fn monte_carlo(f: ValueFn<'_>, dist: &InputDistribution, n: usize, seed: u64) -> Result<MonteCarlo> {
    if n < 2 {
        return Err(Error::param("Monte Carlo needs at least two samples"));
    }
    summarize(sample_inputs_chunked(dist, n, seed, f)?)
}

/// CDF of the surrogate output under `dist` (inputs in physical units).
pub fn surrogate_cdf(s: &Surrogate, dist: &InputDistribution, n: usize, seed: u64) -> Result<EmpiricalCdf> {
    if dist.dim() != s.basis().dim() {
        return Err(Error::param("distribution and surrogate dimensions differ"));
    }
    if n == 0 {
        return Err(Error::param("need at least one sample"));
    }
    EmpiricalCdf::new(sample_inputs_chunked(dist, n, seed, |x| s.eval(x))?)
}

/// Monte Carlo statistics of the surrogate itself.
pub fn surrogate_monte_carlo(s: &Surrogate, dist: &InputDistribution, n: usize, seed: u64) -> Result<MonteCarlo> {
    let f = |x: &[f64]| s.eval(x);
    monte_carlo(&f, dist, n, seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::{BasisFamily, InputMap, TensorBasis};
    use crate::gels::{fit, FitConfig, Sampler};
    use crate::indexset::MultiIndexSet;

    fn hermite(dim: usize, q: usize) -> TensorBasis {
        TensorBasis::new(BasisFamily::HERMITE, MultiIndexSet::total_degree(dim, q).unwrap(), InputMap::Identity).unwrap()
    }

    fn fit_normal(f: &(dyn Fn(&[f64]) -> Result<f64> + Sync), dim: usize, q: usize) -> Surrogate {
        let dist = InputDistribution::standard_normal(dim).unwrap();
        let cfg = FitConfig::new(hermite(dim, q), 30, 30, Sampler::Distribution(dist), 17);
        fit(f, None, &cfg).unwrap()
    }

    #[test]
    fn constant_expansion() {
        let mut c = vec![0.0; 6];
        c[0] = 4.5;
        let s = Surrogate::new(hermite(2, 2), c).unwrap();
        assert_eq!(pce_mean(&s).unwrap(), 4.5);
        assert_eq!(pce_std(&s).unwrap(), 0.0);
        let cdf = surrogate_cdf(&s, &InputDistribution::standard_normal(2).unwrap(), 100, 1).unwrap();
        assert_eq!(cdf.eval(4.4999), 0.0);
        assert_eq!(cdf.eval(4.5), 1.0);
    }

    #[test]
    fn moments_of_simple_functions() {
        let s = fit_normal(&|x| Ok(x[0]), 1, 3);
        assert!(pce_mean(&s).unwrap().abs() < 1e-8);
        let s = fit_normal(&|x| Ok(x[0] * x[0]), 1, 3);
        assert!((pce_mean(&s).unwrap() - 1.0).abs() < 1e-6);
        let s = fit_normal(&|x| Ok(1.5 - 2.5 * x[0]), 2, 2);
        assert!((pce_std(&s).unwrap() - 2.5).abs() < 1e-8);
        let s = fit_normal(&|x| Ok(x[0] * x[1]), 2, 2);
        assert!((pce_std(&s).unwrap() - 1.0).abs() < 1e-8);
    }

    #[test]
    fn physical_units_through_standardization() {
        // R ~ N(10000, 1000): f(R) = R / 1000 has mean 10 and std 1
        let basis = TensorBasis::new(
            BasisFamily::HERMITE,
            MultiIndexSet::total_degree(1, 2).unwrap(),
            InputMap::standardize(vec![10_000.0], vec![1_000.0]).unwrap(),
        )
        .unwrap();
        let dist = InputDistribution::new(vec![Marginal::normal(10_000.0, 1_000.0).unwrap()]).unwrap();
        let cfg = FitConfig::new(basis, 10, 10, Sampler::Distribution(dist), 4);
        let s = fit(&|x| Ok(x[0] / 1000.0), None, &cfg).unwrap();
        assert!((pce_mean(&s).unwrap() - 10.0).abs() < 1e-9);
        assert!((pce_std(&s).unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn non_orthonormal_basis_refused() {
        let basis = TensorBasis::new(BasisFamily::Monomial, MultiIndexSet::total_degree(1, 2).unwrap(), InputMap::Identity).unwrap();
        let s = Surrogate::new(basis, vec![1.0, 0.0, 0.0]).unwrap();
        assert!(matches!(pce_mean(&s), Err(Error::Contract(_))));
        assert!(matches!(pce_std(&s), Err(Error::Contract(_))));
    }

    #[test]
    fn monte_carlo_basics() {
        let d = InputDistribution::standard_normal(1).unwrap();
        let c = monte_carlo(&|_| Ok(3.0), &d, 1000, 2).unwrap();
        assert_eq!(c.std, 0.0);
        assert_eq!(c.mean, 3.0);
        assert!(monte_carlo(&|_| Ok(3.0), &d, 1, 2).is_err());

        let r = monte_carlo(&|x| Ok(x[0]), &d, 1_000_000, 9).unwrap();
        assert!(r.mean.abs() < 0.005);
        assert!((r.std - 1.0).abs() < 0.005);
        assert!((r.cdf.eval(0.0) - 0.5).abs() < 0.01);
        let median = r.cdf.quantile(0.5);
        assert!((r.cdf.eval(median) - 0.5).abs() < 0.01);
    }

    #[test]
    fn monte_carlo_is_reproducible() {
        let d = InputDistribution::standard_normal(2).unwrap();
        let f = |x: &[f64]| Ok(x[0] + x[1] * x[1]);
        let a = monte_carlo(&f, &d, 10_001, 5).unwrap();
        let b = monte_carlo(&f, &d, 10_001, 5).unwrap();
        assert_eq!(a.cdf, b.cdf);
        assert_eq!(a.mean, b.mean);
        let c = monte_carlo(&f, &d, 10_001, 6).unwrap();
        assert_ne!(a.cdf, c.cdf);
    }

    #[test]
    fn independent_of_thread_count() {
        let d = InputDistribution::standard_normal(2).unwrap();
        let f = |x: &[f64]| Ok(x[0].exp() - x[1]);
        let single = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let quad = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
        let a = single.install(|| monte_carlo(&f, &d, 50_000, 3).unwrap());
        let b = quad.install(|| monte_carlo(&f, &d, 50_000, 3).unwrap());
        assert_eq!(a.cdf, b.cdf);
        assert_eq!(a.mean.to_bits(), b.mean.to_bits());
    }

    #[test]
    fn evaluator_error_propagates() {
        let d = InputDistribution::standard_normal(1).unwrap();
        let f = |x: &[f64]| if x[0] > 2.0 { Err(Error::param("tail")) } else { Ok(x[0]) };
        assert!(matches!(monte_carlo(&f, &d, 10_000, 1), Err(Error::Evaluator { .. })));
    }

    #[test]
    fn cdf_steps_and_csv() {
        let cdf = EmpiricalCdf::new(vec![3.0, 1.0, 2.0, 2.0]).unwrap();
        assert_eq!(cdf.values(), &[1.0, 2.0, 2.0, 3.0]);
        assert_eq!(cdf.eval(0.5), 0.0);
        assert_eq!(cdf.eval(1.0), 0.25);
        assert_eq!(cdf.eval(2.0), 0.75);
        assert_eq!(cdf.eval(10.0), 1.0);
        assert_eq!(cdf.quantile(0.5), 2.0);
        let mut buf = Vec::new();
        cdf.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 4);
        assert!(text.lines().last().unwrap().ends_with("1.00000000000000000e0"));
        assert!(EmpiricalCdf::new(vec![]).is_err());
        assert!(EmpiricalCdf::new(vec![f64::NAN]).is_err());
    }
}
