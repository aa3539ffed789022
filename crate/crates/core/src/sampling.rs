//! Candidate point generation and maxvol reduction.

use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::basis::{DomainBox, TensorBasis};
use crate::error::{Error, Result};

/// Dominance tolerance for the square maxvol stage.
pub const MAXVOL_TOL: f64 = 0.01;
/// Hard cap on maxvol row swaps.
pub const MAXVOL_MAX_SWAPS: usize = 200;
/// Extra square-maxvol starts tried by [`maxvol_square`].
pub const MAXVOL_RESTARTS: usize = 8;

/// Seeded generator used everywhere randomness is needed.
pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    Uniform,
    Lhs,
    /// Drawn from an [`InputDistribution`].
    Distribution,
    MaxvolReduced,
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Provenance::Uniform => "uniform",
            Provenance::Lhs => "lhs",
            Provenance::Distribution => "distribution",
            Provenance::MaxvolReduced => "maxvol-reduced",
        })
    }
}

impl FromStr for Provenance {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform" => Ok(Provenance::Uniform),
            "lhs" => Ok(Provenance::Lhs),
            "distribution" => Ok(Provenance::Distribution),
            "maxvol-reduced" => Ok(Provenance::MaxvolReduced),
            other => Err(Error::param(format!("unknown provenance `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PointSet {
    points: Vec<Vec<f64>>,
    provenance: Provenance,
    seed: u64,
}

impl PointSet {
    pub fn new(points: Vec<Vec<f64>>, provenance: Provenance, seed: u64) -> Result<Self> {
        let dim = points
            .first()
            .ok_or_else(|| Error::param("point set must not be empty"))?
            .len();
        if dim == 0 || points.iter().any(|p| p.len() != dim) {
            return Err(Error::param("points must share a non-zero dimension"));
        }
        Ok(PointSet {
            points,
            provenance,
            seed,
        })
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.points[0].len()
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Subset in the order of `rows`, marked as maxvol-reduced.
    pub fn select(&self, rows: &[usize]) -> Result<PointSet> {
        let pts = rows
            .iter()
            .map(|&r| {
                self.points
                    .get(r)
                    .cloned()
                    .ok_or_else(|| Error::param(format!("row {r} out of range")))
            })
            .collect::<Result<Vec<_>>>()?;
        PointSet::new(pts, Provenance::MaxvolReduced, self.seed)
    }

    /// CSV with a `# seed=… provenance=…` header line.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "# seed={} provenance={}", self.seed, self.provenance)?;
        for p in &self.points {
            let row: Vec<String> = p.iter().map(|v| format!("{v:.17e}")).collect();
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(r: R) -> Result<PointSet> {
        let mut seed = 0;
        let mut provenance = Provenance::Uniform;
        let mut points = Vec::new();
        for (n, line) in r.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(comment) = line.strip_prefix('#') {
                for tok in comment.split_whitespace() {
                    if let Some(v) = tok.strip_prefix("seed=") {
                        seed = v.parse().map_err(|_| Error::format(n + 1, "bad seed"))?;
                    } else if let Some(v) = tok.strip_prefix("provenance=") {
                        provenance = v.parse()?;
                    }
                }
                continue;
            }
            points.push(parse_csv_row(line, n + 1)?);
        }
        PointSet::new(points, provenance, seed)
    }
}

pub(crate) fn parse_csv_row(line: &str, lineno: usize) -> Result<Vec<f64>> {
    line.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| Error::format(lineno, format!("not a number: `{}`", t.trim())))
        })
        .collect()
}

/// `n` i.i.d. uniform points in the box.
pub fn uniform_random(bx: &DomainBox, n: usize, seed: u64) -> Result<PointSet> {
    if n == 0 {
        return Err(Error::param("need at least one point"));
    }
    let mut rng = rng_from_seed(seed);
    let points = (0..n)
        .map(|_| {
            (0..bx.dim())
                .map(|k| {
                    let u: f64 = rng.random();
                    bx.lower()[k] + u * (bx.upper()[k] - bx.lower()[k])
                })
                .collect()
        })
        .collect();
    PointSet::new(points, Provenance::Uniform, seed)
}

/// Latin hypercube: in each dimension every one of the `n` equal strata
/// holds exactly one point.
pub fn lhs(bx: &DomainBox, n: usize, seed: u64) -> Result<PointSet> {
    if n == 0 {
        return Err(Error::param("need at least one point"));
    }
    let mut rng = rng_from_seed(seed);
    let dim = bx.dim();
    let mut points = vec![vec![0.0; dim]; n];
    let mut strata: Vec<usize> = (0..n).collect();
    for k in 0..dim {
        strata.shuffle(&mut rng);
        let width = (bx.upper()[k] - bx.lower()[k]) / n as f64;
        for (p, &s) in points.iter_mut().zip(&strata) {
            let u: f64 = rng.random();
            // Clamp so rounding never pushes a point into the next stratum.
            let v = bx.lower()[k] + (s as f64 + u) * width;
            p[k] = v.min(bx.lower()[k] + (s + 1) as f64 * width).min(bx.upper()[k]);
        }
    }
    PointSet::new(points, Provenance::Lhs, seed)
}

/// Marginal law of one input parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Marginal {
    Normal { mean: f64, std: f64 },
    Uniform { lower: f64, upper: f64 },
}

impl Marginal {
    pub fn normal(mean: f64, std: f64) -> Result<Self> {
        if !(std > 0.0) || !mean.is_finite() {
            return Err(Error::param("normal marginal needs finite mean and std > 0"));
        }
        Ok(Marginal::Normal { mean, std })
    }

    pub fn uniform(lower: f64, upper: f64) -> Result<Self> {
        if !(lower < upper) {
            return Err(Error::param("uniform marginal needs lower < upper"));
        }
        Ok(Marginal::Uniform { lower, upper })
    }

    fn draw<R: Rng>(&self, rng: &mut R) -> f64 {
        match *self {
            Marginal::Normal { mean, std } => {
                let z: f64 = rng.sample(StandardNormal);
                mean + std * z
            }
            Marginal::Uniform { lower, upper } => {
                let u: f64 = rng.random();
                lower + u * (upper - lower)
            }
        }
    }
}

/// Independent per-parameter input distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct InputDistribution {
    marginals: Vec<Marginal>,
}

impl InputDistribution {
    pub fn new(marginals: Vec<Marginal>) -> Result<Self> {
        if marginals.is_empty() {
            return Err(Error::param("distribution needs at least one parameter"));
        }
        Ok(InputDistribution { marginals })
    }

    pub fn standard_normal(dim: usize) -> Result<Self> {
        Self::new(vec![Marginal::Normal { mean: 0.0, std: 1.0 }; dim])
    }

    pub fn dim(&self) -> usize {
        self.marginals.len()
    }

    pub fn marginals(&self) -> &[Marginal] {
        &self.marginals
    }

    /// Per-parameter `(mean, std)` when every marginal is normal.
    pub fn normal_moments(&self) -> Option<(Vec<f64>, Vec<f64>)> {
        self.marginals
            .iter()
            .map(|m| match *m {
                Marginal::Normal { mean, std } => Some((mean, std)),
                Marginal::Uniform { .. } => None,
            })
            .collect::<Option<Vec<_>>>()
            .map(|v| v.into_iter().unzip())
    }

    pub fn draw<R: Rng>(&self, rng: &mut R) -> Vec<f64> {
        self.marginals.iter().map(|m| m.draw(rng)).collect()
    }

    pub fn sample(&self, n: usize, seed: u64) -> Result<PointSet> {
        if n == 0 {
            return Err(Error::param("need at least one point"));
        }
        let mut rng = rng_from_seed(seed);
        let points = (0..n).map(|_| self.draw(&mut rng)).collect();
        PointSet::new(points, Provenance::Distribution, seed)
    }
}

/// Design matrix (function rows only) of `basis` at `points`.
pub fn design_matrix(basis: &TensorBasis, points: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let m = basis.len();
    let mut data = Vec::with_capacity(points.len() * m);
    for p in points {
        data.extend(basis.design_row(p)?);
    }
    Ok(DMatrix::from_row_slice(points.len(), m, &data))
}

/// Selects `target_rows` rows of the `n × r` candidate matrix.
///
/// The first `r` rows come from square maxvol: start from a pivoted-LU row
/// choice, then swap rows until every entry of `C Ĉ⁻¹` is at most `1 + tol` in
/// modulus. The remaining `target_rows - r` rows are added greedily, each one
/// maximizing `det(ĈᵀĈ)` of the grown selection.
pub fn maxvol_select(candidates: &DMatrix<f64>, target_rows: usize, tol: f64) -> Result<Vec<usize>> {
    let (n, r) = candidates.shape();
    if r == 0 {
        return Err(Error::param("candidate matrix has no columns"));
    }
    if target_rows > n {
        return Err(Error::param(format!("cannot select {target_rows} rows from {n}")));
    }
    if target_rows < r {
        return Err(Error::param(format!(
            "target {target_rows} rows is below the column count {r}"
        )));
    }
    if !(tol >= 0.0) {
        return Err(Error::param("dominance tolerance must be non-negative"));
    }

    let square = maxvol_square(candidates, tol)?;
    let mut rows = square.rows;
    if target_rows > r {
        extend_greedy(candidates, &square.coefficients, &mut rows, target_rows);
    }
    Ok(rows)
}

/// Result of the square maxvol stage.
#[derive(Debug, Clone)]
pub struct MaxvolSquare {
    pub rows: Vec<usize>,
    /// `C Ĉ⁻¹` at termination.
    pub coefficients: DMatrix<f64>,
    /// Factor by which each swap multiplied `|det Ĉ|`.
    pub growth: Vec<f64>,
}

/// Square maxvol on an `n × r` matrix (`n ≥ r`).
///
/// Single-row swaps only reach a local maximum of `|det Ĉ|`, so the search is
/// restarted from up to [`MAXVOL_RESTARTS`] further pivoted-LU orderings, each
/// forcing one of the largest-norm rows to be the first pivot. The run with
/// the largest final volume is returned.
pub fn maxvol_square(candidates: &DMatrix<f64>, tol: f64) -> Result<MaxvolSquare> {
    let mut best = maxvol_from(candidates, pivoted_rows(candidates, None)?, tol)?;
    let mut best_vol = log_volume(candidates, &best.rows);
    let mut by_norm: Vec<usize> = (0..candidates.nrows()).collect();
    let norms: Vec<f64> = (0..candidates.nrows()).map(|i| candidates.row(i).norm()).collect();
    by_norm.sort_by(|&a, &b| norms[b].total_cmp(&norms[a]).then(a.cmp(&b)));
    for &first in by_norm.iter().take(MAXVOL_RESTARTS) {
        let Ok(start) = pivoted_rows(candidates, Some(first)) else {
            continue;
        };
        let run = maxvol_from(candidates, start, tol)?;
        let vol = log_volume(candidates, &run.rows);
        if vol > best_vol {
            best = run;
            best_vol = vol;
        }
    }
    Ok(best)
}

fn log_volume(c: &DMatrix<f64>, rows: &[usize]) -> f64 {
    c.select_rows(rows).lu().u().diagonal().iter().map(|v| v.abs().ln()).sum()
}

fn maxvol_from(candidates: &DMatrix<f64>, mut rows: Vec<usize>, tol: f64) -> Result<MaxvolSquare> {
    let mut coeffs = dominance_matrix(candidates, &rows)?;
    let mut growth = Vec::new();
    loop {
        let (i, j, val) = argmax_abs(&coeffs);
        if val <= 1.0 + tol {
            break;
        }
        if growth.len() == MAXVOL_MAX_SWAPS {
            return Err(Error::Convergence(format!(
                "maxvol did not reach dominance within {MAXVOL_MAX_SWAPS} swaps"
            )));
        }
        growth.push(val);
        // Rank-one update of C Ĉ⁻¹ after row j of Ĉ is replaced by row i of C.
        let pivot = coeffs[(i, j)];
        let col_j = coeffs.column(j).clone_owned();
        let mut row_i = coeffs.row(i).clone_owned();
        row_i[j] -= 1.0;
        coeffs -= (col_j / pivot) * row_i;
        rows[j] = i;
    }
    Ok(MaxvolSquare {
        rows,
        coefficients: coeffs,
        growth,
    })
}

/// Row choice of Gaussian elimination with partial pivoting, optionally with
/// `first` forced as the first pivot row.
fn pivoted_rows(c: &DMatrix<f64>, first: Option<usize>) -> Result<Vec<usize>> {
    let (n, r) = c.shape();
    let mut work = c.clone();
    let mut perm: Vec<usize> = (0..n).collect();
    let scale = c.amax();
    if scale == 0.0 {
        return Err(Error::Degeneracy("candidate matrix is zero".into()));
    }
    for k in 0..r {
        let (p, pv) = match first {
            Some(f) if k == 0 => (f, work[(f, 0)].abs()),
            _ => (k..n)
                .map(|i| (i, work[(i, k)].abs()))
                .fold((k, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best }),
        };
        if pv <= 1e-12 * scale {
            return Err(Error::Degeneracy(format!(
                "candidate matrix is rank deficient (column {k} has no pivot)"
            )));
        }
        work.swap_rows(k, p);
        perm.swap(k, p);
        let pivot_row = work.row(k).clone_owned();
        for i in k + 1..n {
            let f = work[(i, k)] / pivot_row[k];
            if f != 0.0 {
                for j in k..r {
                    work[(i, j)] -= f * pivot_row[j];
                }
            }
        }
    }
    perm.truncate(r);
    Ok(perm)
}

/// `C Ĉ⁻¹` for the square block `Ĉ` formed by `rows`.
pub fn dominance_matrix(c: &DMatrix<f64>, rows: &[usize]) -> Result<DMatrix<f64>> {
    let sub = c.select_rows(rows);
    let lu = sub.transpose().lu();
    // Solve Ĉᵀ Bᵀ = Cᵀ.
    let bt = lu
        .solve(&c.transpose())
        .ok_or_else(|| Error::Degeneracy("selected block is singular".into()))?;
    Ok(bt.transpose())
}

fn argmax_abs(m: &DMatrix<f64>) -> (usize, usize, f64) {
    let mut best = (0, 0, -1.0);
    // Row-major scan so ties resolve to the lowest row index.
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            let v = m[(i, j)].abs();
            if v > best.2 {
                best = (i, j, v);
            }
        }
    }
    best
}

/// Greedy rows beyond the square block. With `G = ĈᵀĈ`, adding row `c`
/// multiplies `det G` by `1 + cᵀG⁻¹c`, so the row with the largest quadratic
/// form is taken and `G⁻¹` is updated by Sherman–Morrison.
fn extend_greedy(c: &DMatrix<f64>, coeffs: &DMatrix<f64>, rows: &mut Vec<usize>, target: usize) {
    let n = c.nrows();
    let sub = c.select_rows(rows.as_slice());
    // G⁻¹ = Ĉ⁻¹ Ĉ⁻ᵀ and cᵀG⁻¹c = ‖c Ĉ⁻¹‖² for the square block.
    let sub_inv = sub.try_inverse().expect("dominant block is nonsingular");
    let mut g_inv = &sub_inv * sub_inv.transpose();
    let mut score: Vec<f64> = (0..n).map(|i| coeffs.row(i).norm_squared()).collect();
    let mut taken = vec![false; n];
    for &r in rows.iter() {
        taken[r] = true;
    }
    while rows.len() < target {
        let mut best = None;
        for i in (0..n).filter(|&i| !taken[i]) {
            if best.is_none_or(|(_, s)| score[i] > s) {
                best = Some((i, score[i]));
            }
        }
        let (pick, s) = best.expect("enough unselected rows remain");
        taken[pick] = true;
        rows.push(pick);
        let row = c.row(pick).transpose();
        let v = &g_inv * &row;
        let w = c * &v;
        for i in 0..n {
            score[i] -= w[i] * w[i] / (1.0 + s);
        }
        g_inv -= (&v * v.transpose()) / (1.0 + s);
    }
}

/// Algorithm step 2: keep the `m` candidate points best conditioned for
/// `basis`. Selection uses the value-only design matrix restricted to the
/// first `min(M, m)` basis functions, so that it is defined for any basis size.
pub fn maxvol_points(basis: &TensorBasis, candidates: &PointSet, m: usize) -> Result<PointSet> {
    if m > candidates.len() {
        return Err(Error::param(format!(
            "cannot keep {m} points out of {}",
            candidates.len()
        )));
    }
    let cols = basis.len().min(m);
    let sub = TensorBasis::new(
        basis.family(),
        basis.index_set().prefix(cols)?,
        basis.map().clone(),
    )?;
    let design = design_matrix(&sub, candidates.points())?;
    let rows = maxvol_select(&design, m, MAXVOL_TOL)?;
    candidates.select(&rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::{BasisFamily, InputMap};
    use crate::indexset::MultiIndexSet;

    fn unit_box(dim: usize) -> DomainBox {
        DomainBox::cube(dim, 0.0, 1.0).unwrap()
    }

    #[test]
    fn uniform_is_deterministic_and_in_box() {
        let a = uniform_random(&unit_box(2), 5, 7).unwrap();
        let b = uniform_random(&unit_box(2), 5, 7).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, uniform_random(&unit_box(2), 5, 8).unwrap());

        let bx = DomainBox::cube(2, -2.0, 2.0).unwrap();
        let big = uniform_random(&bx, 10_000, 3).unwrap();
        assert!(big.points().iter().all(|p| bx.contains(p)));
        assert!(uniform_random(&bx, 0, 3).is_err());
    }

    #[test]
    fn uniform_mean() {
        let pts = uniform_random(&unit_box(1), 100_000, 1).unwrap();
        let mean: f64 = pts.points().iter().map(|p| p[0]).sum::<f64>() / 1e5;
        assert!((mean - 0.5).abs() < 0.01);
    }

    fn assert_stratified(ps: &PointSet, bx: &DomainBox) {
        let n = ps.len();
        for k in 0..ps.dim() {
            let mut hits = vec![0; n];
            for p in ps.points() {
                let rel = (p[k] - bx.lower()[k]) / (bx.upper()[k] - bx.lower()[k]);
                let s = ((rel * n as f64).floor() as usize).min(n - 1);
                hits[s] += 1;
            }
            assert!(hits.iter().all(|&h| h == 1), "dimension {k}: {hits:?}");
        }
    }

    #[test]
    fn lhs_one_point_per_stratum() {
        let ps = lhs(&unit_box(1), 4, 9).unwrap();
        let mut xs: Vec<f64> = ps.points().iter().map(|p| p[0]).collect();
        xs.sort_by(f64::total_cmp);
        for (i, x) in xs.iter().enumerate() {
            assert!(*x >= i as f64 * 0.25 && *x < (i + 1) as f64 * 0.25);
        }
        let bx = DomainBox::new(vec![-1.0, 0.0, 2.0, -5.0, 0.0], vec![1.0, 3.0, 4.0, 5.0, 0.1]).unwrap();
        let ps = lhs(&bx, 100, 4).unwrap();
        assert_stratified(&ps, &bx);
        assert_eq!(ps, lhs(&bx, 100, 4).unwrap());
        assert!(lhs(&bx, 0, 4).is_err());
    }

    #[test]
    fn maxvol_picks_scaled_rows() {
        let c = DMatrix::from_row_slice(4, 2, &[1.0, 0.0, 0.0, 1.0, 10.0, 0.0, 0.0, 10.0]);
        let mut rows = maxvol_select(&c, 2, MAXVOL_TOL).unwrap();
        rows.sort();
        assert_eq!(rows, vec![2, 3]);
    }

    #[test]
    fn maxvol_identity_takes_everything() {
        let c = DMatrix::<f64>::identity(5, 5);
        let mut rows = maxvol_select(&c, 5, MAXVOL_TOL).unwrap();
        rows.sort();
        assert_eq!(rows, vec![0, 1, 2, 3, 4]);
    }

    #[test]
    fn maxvol_errors() {
        let c = DMatrix::from_row_slice(3, 2, &[1.0, 2.0, 2.0, 4.0, 3.0, 6.0]);
        assert!(matches!(maxvol_select(&c, 2, MAXVOL_TOL), Err(Error::Degeneracy(_))));
        let c = DMatrix::<f64>::identity(3, 2);
        assert!(matches!(maxvol_select(&c, 4, MAXVOL_TOL), Err(Error::Parameter(_))));
        assert!(matches!(maxvol_select(&c, 1, MAXVOL_TOL), Err(Error::Parameter(_))));
    }

    #[test]
    fn maxvol_dominance_and_rect_extension() {
        let mut rng = rng_from_seed(5);
        let c = DMatrix::from_fn(200, 6, |_, _| rng.sample::<f64, _>(StandardNormal));
        let rows = maxvol_select(&c, 15, MAXVOL_TOL).unwrap();
        assert_eq!(rows.len(), 15);
        let mut uniq = rows.clone();
        uniq.sort();
        uniq.dedup();
        assert_eq!(uniq.len(), 15);
        let b = dominance_matrix(&c, &rows[..6]).unwrap();
        assert!(b.amax() <= 1.0 + MAXVOL_TOL + 1e-12);
        // each greedy step must be the best single addition
        for k in 6..15 {
            let gram_det = |sel: &[usize]| {
                let s = c.select_rows(sel);
                (s.transpose() * s).determinant()
            };
            let chosen = gram_det(&rows[..=k]);
            for cand in (0..200).filter(|i| !rows[..k].contains(i)) {
                let mut trial = rows[..k].to_vec();
                trial.push(cand);
                assert!(gram_det(&trial) <= chosen * (1.0 + 1e-9));
            }
        }
    }

    #[test]
    fn maxvol_points_is_subset_of_candidates() {
        let bx = DomainBox::cube(2, -2.0, 2.0).unwrap();
        let basis = TensorBasis::new(
            BasisFamily::Chebyshev,
            MultiIndexSet::total_degree(2, 3).unwrap(),
            InputMap::Box(bx.clone()),
        )
        .unwrap();
        let cand = uniform_random(&bx, 500, 2).unwrap();
        let sel = maxvol_points(&basis, &cand, 20).unwrap();
        assert_eq!(sel.len(), 20);
        assert_eq!(sel.provenance(), Provenance::MaxvolReduced);
        for p in sel.points() {
            assert!(cand.points().contains(p));
        }
    }

    #[test]
    fn csv_round_trip() {
        let ps = lhs(&unit_box(3), 7, 42).unwrap();
        let mut buf = Vec::new();
        ps.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("# seed=42 provenance=lhs\n"));
        let back = PointSet::read_csv(buf.as_slice()).unwrap();
        assert_eq!(back, ps);
    }

    #[test]
    fn distribution_sampling() {
        let d = InputDistribution::new(vec![
            Marginal::normal(10_000.0, 1_000.0).unwrap(),
            Marginal::uniform(-1.0, 1.0).unwrap(),
        ])
        .unwrap();
        assert!(d.normal_moments().is_none());
        let ps = d.sample(20_000, 3).unwrap();
        let mean0 = ps.points().iter().map(|p| p[0]).sum::<f64>() / 20_000.0;
        assert!((mean0 - 10_000.0).abs() < 30.0);
        assert!(ps.points().iter().all(|p| (-1.0..=1.0).contains(&p[1])));
        assert!(Marginal::normal(0.0, 0.0).is_err());
        assert!(Marginal::uniform(1.0, 1.0).is_err());
    }
}
