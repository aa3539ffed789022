//! Gradient-enhanced least squares.
//!
//! For `m` points in `l` dimensions and a basis of size `M` the system has
//! `(l + 1) m` rows: the `m` value rows first, then one block of `m` rows per
//! partial derivative `∂_1, …, ∂_l`. Row `km + i` (0-based, `k ≥ 1`) holds
//! `∂_k P_j` at point `i`, so every point appears exactly once per block.

use std::fmt::Write as _;
use std::io::{BufRead, Write};

use nalgebra::{DMatrix, DVector, SVD};
use rayon::prelude::*;

use crate::basis::{BasisFamily, DomainBox, InputMap, TensorBasis};
use crate::error::{Error, Result};
use crate::indexset::MultiIndexSet;
use crate::sampling::{self, InputDistribution, PointSet};

/// Relative singular-value cutoff used unless the caller overrides it.
pub const DEFAULT_RANK_TOL: f64 = 1e-10;

/// Function values, optionally with gradients, at a point set.
#[derive(Debug, Clone, PartialEq)]
pub struct GradSamples {
    points: PointSet,
    values: Vec<f64>,
    gradients: Option<Vec<Vec<f64>>>,
}

impl GradSamples {
    pub fn new(points: PointSet, values: Vec<f64>, gradients: Option<Vec<Vec<f64>>>) -> Result<Self> {
        if values.len() != points.len() {
            return Err(Error::param(format!(
                "{} values for {} points",
                values.len(),
                points.len()
            )));
        }
        if let Some(g) = &gradients {
            if g.len() != points.len() || g.iter().any(|row| row.len() != points.dim()) {
                return Err(Error::param("gradient block must be m × l"));
            }
        }
        Ok(GradSamples {
            points,
            values,
            gradients,
        })
    }

    pub fn points(&self) -> &PointSet {
        &self.points
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn gradients(&self) -> Option<&[Vec<f64>]> {
        self.gradients.as_deref()
    }

    pub fn with_derivatives(&self) -> bool {
        self.gradients.is_some()
    }

    /// Same points and values with the gradient block dropped.
    pub fn without_derivatives(&self) -> GradSamples {
        GradSamples {
            points: self.points.clone(),
            values: self.values.clone(),
            gradients: None,
        }
    }

    /// Reads `x_1..x_l, f[, df_1..df_l]` rows. Lines starting with `#` are
    /// comments.
    pub fn read_csv<R: BufRead>(r: R, dim: usize) -> Result<GradSamples> {
        if dim == 0 {
            return Err(Error::param("dimension must be at least 1"));
        }
        let mut points = Vec::new();
        let mut values = Vec::new();
        let mut grads = Vec::new();
        let mut with_derivs = None;
        for (n, line) in r.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let row = sampling::parse_csv_row(line, n + 1)?;
            let has = if row.len() == 2 * dim + 1 {
                true
            } else if row.len() == dim + 1 {
                false
            } else {
                return Err(Error::format(
                    n + 1,
                    format!("expected {} or {} columns, found {}", dim + 1, 2 * dim + 1, row.len()),
                ));
            };
            if *with_derivs.get_or_insert(has) != has {
                return Err(Error::format(n + 1, "inconsistent column count"));
            }
            points.push(row[..dim].to_vec());
            values.push(row[dim]);
            if has {
                grads.push(row[dim + 1..].to_vec());
            }
        }
        let ps = PointSet::new(points, sampling::Provenance::Uniform, 0)?;
        GradSamples::new(ps, values, with_derivs.unwrap_or(false).then_some(grads))
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        for (i, p) in self.points.points().iter().enumerate() {
            let mut cols: Vec<String> = p.iter().map(|v| format!("{v:.17e}")).collect();
            cols.push(format!("{:.17e}", self.values[i]));
            if let Some(g) = &self.gradients {
                cols.extend(g[i].iter().map(|v| format!("{v:.17e}")));
            }
            writeln!(w, "{}", cols.join(","))?;
        }
        Ok(())
    }
}

/// Assembled least-squares system `A α ≈ F`.
#[derive(Debug, Clone)]
pub struct GradSystem {
    pub matrix: DMatrix<f64>,
    pub rhs: DVector<f64>,
    /// Number of sample points `m`.
    pub points: usize,
    pub dim: usize,
    pub with_derivatives: bool,
}

pub fn assemble(basis: &TensorBasis, samples: &GradSamples) -> Result<GradSystem> {
    assemble_weighted(basis, samples, 1.0)
}

/// Like [`assemble`] with every derivative row (and its right-hand side)
/// multiplied by `derivative_weight`.
pub fn assemble_weighted(basis: &TensorBasis, samples: &GradSamples, derivative_weight: f64) -> Result<GradSystem> {
    let dim = basis.dim();
    if samples.points().dim() != dim {
        return Err(Error::param(format!(
            "samples have dimension {}, basis has {dim}",
            samples.points().dim()
        )));
    }
    if !derivative_weight.is_finite() {
        return Err(Error::param("derivative weight must be finite"));
    }
    let m = samples.points().len();
    let cols = basis.len();
    let blocks = if samples.with_derivatives() { dim + 1 } else { 1 };
    let mut matrix = DMatrix::zeros(blocks * m, cols);
    let mut rhs = DVector::zeros(blocks * m);

    for (i, x) in samples.points().points().iter().enumerate() {
        let row = basis.design_row(x)?;
        matrix.row_mut(i).copy_from_slice(&row);
        rhs[i] = samples.values()[i];
        if let Some(grads) = samples.gradients() {
            let grows = basis.design_grad_rows(x)?;
            for k in 0..dim {
                let r = (k + 1) * m + i;
                for (j, v) in grows[k].iter().enumerate() {
                    matrix[(r, j)] = derivative_weight * v;
                }
                rhs[r] = derivative_weight * grads[i][k];
            }
        }
    }
    Ok(GradSystem {
        matrix,
        rhs,
        points: m,
        dim,
        with_derivatives: samples.with_derivatives(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitReport {
    pub residual_norm: f64,
    pub rank: usize,
    pub sigma_max: f64,
    /// Smallest singular value, including truncated ones.
    pub sigma_min: f64,
}

#[derive(Debug, Clone)]
pub struct LsqSolution {
    pub coefficients: Vec<f64>,
    pub report: FitReport,
}

fn singular_values(matrix: &DMatrix<f64>) -> Vec<f64> {
    let mut sv: Vec<f64> = matrix.singular_values().iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    sv
}

/// Singular values above `rank_tol · σ_max`.
pub fn numeric_rank(system: &GradSystem, rank_tol: f64) -> usize {
    matrix_rank(&system.matrix, rank_tol)
}

pub fn matrix_rank(matrix: &DMatrix<f64>, rank_tol: f64) -> usize {
    let sv = singular_values(matrix);
    let cut = rank_tol * sv.first().copied().unwrap_or(0.0);
    sv.iter().filter(|&&s| s > cut).count()
}

/// Minimum-norm least-squares solution through a truncated SVD.
pub fn solve_lsq(system: &GradSystem, rank_tol: f64) -> Result<LsqSolution> {
    let a = &system.matrix;
    if a.nrows() == 0 || a.ncols() == 0 {
        return Err(Error::Degeneracy("empty system".into()));
    }
    if a.amax() == 0.0 {
        return Err(Error::Degeneracy("system matrix is zero".into()));
    }
    let svd = SVD::new(a.clone(), true, true);
    let u = svd.u.as_ref().expect("requested U");
    let v_t = svd.v_t.as_ref().expect("requested Vᵀ");
    let sigma = &svd.singular_values;
    let sigma_max = sigma.max();
    let cut = rank_tol * sigma_max;

    let mut coeffs = DVector::zeros(a.ncols());
    let mut rank = 0;
    for i in 0..sigma.len() {
        if sigma[i] > cut {
            rank += 1;
            let proj = u.column(i).dot(&system.rhs) / sigma[i];
            coeffs += v_t.row(i).transpose() * proj;
        }
    }
    if rank == 0 {
        return Err(Error::Degeneracy("numeric rank is zero".into()));
    }
    let residual = a * &coeffs - &system.rhs;
    // Wide systems have ncols - nrows implicit zero singular values.
    let sigma_min = if a.nrows() < a.ncols() { 0.0 } else { sigma.min() };
    Ok(LsqSolution {
        coefficients: coeffs.iter().copied().collect(),
        report: FitReport {
            residual_norm: residual.norm(),
            rank,
            sigma_max,
            sigma_min,
        },
    })
}

/// A fitted expansion `Σ α_j P_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct Surrogate {
    basis: TensorBasis,
    coefficients: Vec<f64>,
    report: Option<FitReport>,
}

impl Surrogate {
    pub fn new(basis: TensorBasis, coefficients: Vec<f64>) -> Result<Self> {
        if coefficients.len() != basis.len() {
            return Err(Error::param(format!(
                "{} coefficients for a basis of size {}",
                coefficients.len(),
                basis.len()
            )));
        }
        Ok(Surrogate {
            basis,
            coefficients,
            report: None,
        })
    }

    pub fn with_report(mut self, report: FitReport) -> Self {
        self.report = Some(report);
        self
    }

    pub fn basis(&self) -> &TensorBasis {
        &self.basis
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn report(&self) -> Option<&FitReport> {
        self.report.as_ref()
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        let row = self.basis.design_row(x)?;
        Ok(row.iter().zip(&self.coefficients).map(|(p, a)| p * a).sum())
    }

    pub fn grad(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(self
            .basis
            .design_grad_rows(x)?
            .iter()
            .map(|row| row.iter().zip(&self.coefficients).map(|(p, a)| p * a).sum())
            .collect())
    }

    /// Versioned text form; floats carry 17 significant digits.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let list = |v: &[f64]| v.iter().map(|x| format!("{x:.16e}")).collect::<Vec<_>>().join(" ");
        let _ = writeln!(s, "gradfit-surrogate 1");
        let _ = writeln!(s, "family {}", self.basis.family());
        match self.basis.map() {
            InputMap::Identity => {
                let _ = writeln!(s, "map identity");
            }
            InputMap::Box(b) => {
                let _ = writeln!(s, "map box");
                let _ = writeln!(s, "lower {}", list(b.lower()));
                let _ = writeln!(s, "upper {}", list(b.upper()));
            }
            InputMap::Standardize { mean, std } => {
                let _ = writeln!(s, "map standardize");
                let _ = writeln!(s, "mean {}", list(mean));
                let _ = writeln!(s, "std {}", list(std));
            }
        }
        if let Some(r) = &self.report {
            let _ = writeln!(
                s,
                "report {} {:.16e} {:.16e} {:.16e}",
                r.rank, r.residual_norm, r.sigma_max, r.sigma_min
            );
        }
        let _ = writeln!(s, "indexset {}", self.basis.len());
        s.push_str(&self.basis.index_set().to_string());
        let _ = writeln!(s, "coefficients {}", self.coefficients.len());
        for c in &self.coefficients {
            let _ = writeln!(s, "{c:.16e}");
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Surrogate> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(n, l)| (n + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
            .peekable();
        let mut next = |what: &str| {
            lines
                .next()
                .ok_or_else(|| Error::format(0, format!("unexpected end of file, expected {what}")))
        };
        let keyed = |(n, line): (usize, &str), key: &str| -> Result<Vec<String>> {
            let mut it = line.split_whitespace();
            if it.next() != Some(key) {
                return Err(Error::format(n, format!("expected `{key}`")));
            }
            Ok(it.map(str::to_owned).collect())
        };
        let floats = |n: usize, v: &[String]| -> Result<Vec<f64>> {
            v.iter()
                .map(|t| t.parse::<f64>().map_err(|_| Error::format(n, format!("bad number `{t}`"))))
                .collect()
        };

        let head = next("header")?;
        if keyed(head, "gradfit-surrogate")? != ["1"] {
            return Err(Error::format(head.0, "unsupported surrogate version"));
        }
        let fam_line = next("family")?;
        let family: BasisFamily = keyed(fam_line, "family")?
            .first()
            .ok_or_else(|| Error::format(fam_line.0, "missing family"))?
            .parse()?;
        let map_line = next("map")?;
        let map_kind = keyed(map_line, "map")?;
        let map = match map_kind.first().map(String::as_str) {
            Some("identity") => InputMap::Identity,
            Some("box") => {
                let lo = next("lower")?;
                let lower = floats(lo.0, &keyed(lo, "lower")?)?;
                let hi = next("upper")?;
                let upper = floats(hi.0, &keyed(hi, "upper")?)?;
                InputMap::Box(DomainBox::new(lower, upper)?)
            }
            Some("standardize") => {
                let mu = next("mean")?;
                let mean = floats(mu.0, &keyed(mu, "mean")?)?;
                let sd = next("std")?;
                let std = floats(sd.0, &keyed(sd, "std")?)?;
                InputMap::standardize(mean, std)?
            }
            _ => return Err(Error::format(map_line.0, "unknown map kind")),
        };
        let mut line = next("indexset")?;
        let mut report = None;
        if line.1.starts_with("report") {
            let f = keyed(line, "report")?;
            if f.len() != 4 {
                return Err(Error::format(line.0, "report needs 4 fields"));
            }
            let rank = f[0].parse().map_err(|_| Error::format(line.0, "bad rank"))?;
            let v = floats(line.0, &f[1..])?;
            report = Some(FitReport {
                rank,
                residual_norm: v[0],
                sigma_max: v[1],
                sigma_min: v[2],
            });
            line = next("indexset")?;
        }
        let count: usize = keyed(line, "indexset")?
            .first()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| Error::format(line.0, "bad index count"))?;
        let mut block = String::new();
        for _ in 0..=count {
            block.push_str(next("index line")?.1);
            block.push('\n');
        }
        let set: MultiIndexSet = block.parse()?;
        let cl = next("coefficients")?;
        let ncoef: usize = keyed(cl, "coefficients")?
            .first()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| Error::format(cl.0, "bad coefficient count"))?;
        let mut coefficients = Vec::with_capacity(ncoef);
        for _ in 0..ncoef {
            let (n, l) = next("coefficient")?;
            coefficients.push(l.parse().map_err(|_| Error::format(n, "bad coefficient"))?);
        }
        if let Some((n, _)) = lines.next() {
            return Err(Error::format(n, "trailing content"));
        }
        let basis = TensorBasis::new(family, set, map)?;
        let s = Surrogate::new(basis, coefficients)?;
        Ok(match report {
            Some(r) => s.with_report(r),
            None => s,
        })
    }
}

/// Assemble and solve in one step.
pub fn fit_samples(basis: &TensorBasis, samples: &GradSamples, rank_tol: f64) -> Result<Surrogate> {
    let system = assemble(basis, samples)?;
    let sol = solve_lsq(&system, rank_tol)?;
    Ok(Surrogate::new(basis.clone(), sol.coefficients)?.with_report(sol.report))
}

/// How the initial `N` candidates are drawn.
#[derive(Debug, Clone, PartialEq)]
pub enum Sampler {
    Uniform(DomainBox),
    Lhs(DomainBox),
    Distribution(InputDistribution),
}

impl Sampler {
    pub fn draw(&self, n: usize, seed: u64) -> Result<PointSet> {
        match self {
            Sampler::Uniform(b) => sampling::uniform_random(b, n, seed),
            Sampler::Lhs(b) => sampling::lhs(b, n, seed),
            Sampler::Distribution(d) => d.sample(n, seed),
        }
    }
}

#[derive(Debug, Clone)]
pub struct FitConfig {
    pub basis: TensorBasis,
    /// Points kept for evaluation, `m`.
    pub points: usize,
    /// Candidates drawn before maxvol reduction, `N ≥ m`.
    pub candidates: usize,
    pub sampler: Sampler,
    pub seed: u64,
    pub rank_tol: f64,
    pub derivative_weight: f64,
}

impl FitConfig {
    pub fn new(basis: TensorBasis, points: usize, candidates: usize, sampler: Sampler, seed: u64) -> Self {
        FitConfig {
            basis,
            points,
            candidates,
            sampler,
            seed,
            rank_tol: DEFAULT_RANK_TOL,
            derivative_weight: 1.0,
        }
    }
}

pub type ValueFn<'a> = &'a (dyn Fn(&[f64]) -> Result<f64> + Sync);
pub type GradFn<'a> = &'a (dyn Fn(&[f64]) -> Result<Vec<f64>> + Sync);

fn at_point(x: &[f64], e: Error) -> Error {
    match e {
        e @ Error::Evaluator { .. } => e,
        other => Error::Evaluator {
            point: x.to_vec(),
            message: other.to_string(),
        },
    }
}

/// Candidate points for the configuration: draw `N`, reduce to `m` by
/// maxvol when `N > m`.
pub fn select_points(cfg: &FitConfig) -> Result<PointSet> {
    if cfg.points == 0 || cfg.points > cfg.candidates {
        return Err(Error::param(format!(
            "need 1 <= m <= N, got m={} N={}",
            cfg.points, cfg.candidates
        )));
    }
    let cand = cfg.sampler.draw(cfg.candidates, cfg.seed)?;
    if cand.dim() != cfg.basis.dim() {
        return Err(Error::param("sampler and basis dimensions differ"));
    }
    if cfg.candidates > cfg.points {
        sampling::maxvol_points(&cfg.basis, &cand, cfg.points)
    } else {
        Ok(cand)
    }
}

/// Evaluates `f` (and `grad`) at every point, in parallel.
pub fn evaluate(points: PointSet, f: ValueFn<'_>, grad: Option<GradFn<'_>>) -> Result<GradSamples> {
    let values = points
        .points()
        .par_iter()
        .map(|x| f(x).map_err(|e| at_point(x, e)))
        .collect::<Result<Vec<_>>>()?;
    let gradients = match grad {
        Some(g) => Some(
            points
                .points()
                .par_iter()
                .map(|x| {
                    let v = g(x).map_err(|e| at_point(x, e))?;
                    if v.len() != x.len() {
                        return Err(at_point(x, Error::param("gradient has wrong length")));
                    }
                    Ok(v)
                })
                .collect::<Result<Vec<_>>>()?,
        ),
        None => None,
    };
    GradSamples::new(points, values, gradients)
}

/// Sample, reduce, evaluate, assemble, solve.
pub fn fit(f: ValueFn<'_>, grad: Option<GradFn<'_>>, cfg: &FitConfig) -> Result<Surrogate> {
    let points = select_points(cfg)?;
    let samples = evaluate(points, f, grad)?;
    let system = assemble_weighted(&cfg.basis, &samples, cfg.derivative_weight)?;
    let sol = solve_lsq(&system, cfg.rank_tol)?;
    Ok(Surrogate::new(cfg.basis.clone(), sol.coefficients)?.with_report(sol.report))
}

/// `‖f - f̂‖₂ / ‖f‖₂` over discrete test points.
pub fn rel_l2_error(s: &Surrogate, f: ValueFn<'_>, test_points: &[Vec<f64>]) -> Result<f64> {
    if test_points.is_empty() {
        return Err(Error::param("need at least one test point"));
    }
    let pairs = test_points
        .par_iter()
        .map(|x| Ok((f(x).map_err(|e| at_point(x, e))?, s.eval(x)?)))
        .collect::<Result<Vec<(f64, f64)>>>()?;
    let num: f64 = pairs.iter().map(|(a, b)| (a - b).powi(2)).sum();
    let den: f64 = pairs.iter().map(|(a, _)| a * a).sum();
    if den == 0.0 {
        return Err(Error::Degeneracy("reference function vanishes on the test set".into()));
    }
    Ok((num / den).sqrt())
}

/// `(∫_a^b g²)^{1/2}` by the trapezoid rule on `n` equispaced nodes.
pub fn l2_norm_1d(g: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    assert!(n >= 2 && b > a);
    let h = (b - a) / (n - 1) as f64;
    let mut acc = 0.0;
    for i in 0..n {
        let w = if i == 0 || i == n - 1 { 0.5 } else { 1.0 };
        acc += w * g(a + i as f64 * h).powi(2);
    }
    (acc * h).sqrt()
}

/// `max |g|` over `n` equispaced nodes of `[a, b]`.
pub fn sup_norm_1d(g: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    assert!(n >= 2 && b > a);
    let h = (b - a) / (n - 1) as f64;
    (0..n).map(|i| g(a + i as f64 * h).abs()).fold(0.0, f64::max)
}
