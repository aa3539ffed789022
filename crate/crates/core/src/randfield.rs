//! EOLE expansion of a Gaussian random field and its lognormal transform.
//!
//! With nodes `η_1..η_n`, correlation `ρ(x, y) = exp(−‖x − y‖² / σ²)` and the
//! top `N` eigenpairs `(l_i, φ_i)` of `C_ηη`,
//!
//! ```text
//! g(x) = Σ_i ξ_i / √l_i · φ_iᵀ C_xη,      k(x) = exp(a + b g(x))
//! ```
//!
//! where `ξ` is standard normal and `C_xη = (ρ(x, η_j))_j`.

use std::io::Write;

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

/// Smallest eigenvalue accepted within the truncation.
pub const MIN_EIGENVALUE: f64 = 1e-12;
const ORTHONORMALITY_TOL: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct EoleModel {
    nodes: Vec<Vec<f64>>,
    sigma: f64,
    eigvals: Vec<f64>,
    /// Columns are `φ_i`, node-indexed.
    eigvecs: DMatrix<f64>,
    /// `Φ diag(1/√l)`; `g(x) = C_xηᵀ W ξ`.
    weights: DMatrix<f64>,
}

/// Regular `side × side` grid on `[lo, hi]²`, x varying fastest.
pub fn grid_nodes(side: usize, lo: f64, hi: f64) -> Result<Vec<Vec<f64>>> {
    if side == 0 || !(hi > lo) {
        return Err(Error::param("grid needs side >= 1 and lo < hi"));
    }
    let coord = |i: usize| {
        if side == 1 {
            0.5 * (lo + hi)
        } else {
            lo + (hi - lo) * i as f64 / (side - 1) as f64
        }
    };
    Ok((0..side)
        .flat_map(|r| (0..side).map(move |c| vec![coord(c), coord(r)]))
        .collect())
}

fn sq_dist(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum()
}

pub fn build_eole(nodes: Vec<Vec<f64>>, sigma: f64, n_terms: usize) -> Result<EoleModel> {
    if nodes.is_empty() {
        return Err(Error::param("EOLE needs at least one node"));
    }
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::param("correlation length must be positive"));
    }
    let dim = nodes[0].len();
    if dim == 0 || nodes.iter().any(|p| p.len() != dim) {
        return Err(Error::param("nodes must share a positive dimension"));
    }
    if n_terms == 0 || n_terms > nodes.len() {
        return Err(Error::param(format!(
            "truncation order {n_terms} must lie in 1..={}",
            nodes.len()
        )));
    }
    for i in 0..nodes.len() {
        for j in 0..i {
            if sq_dist(&nodes[i], &nodes[j]) == 0.0 {
                return Err(Error::param(format!("nodes {j} and {i} coincide")));
            }
        }
    }
    let n = nodes.len();
    let s2 = sigma * sigma;
    let c = DMatrix::from_fn(n, n, |i, j| (-sq_dist(&nodes[i], &nodes[j]) / s2).exp());
    let eig = SymmetricEigen::new(c);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    order.truncate(n_terms);

    let eigvals: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    if let Some((i, l)) = eigvals.iter().enumerate().find(|(_, &l)| l <= MIN_EIGENVALUE) {
        return Err(Error::Degeneracy(format!(
            "eigenvalue {} = {l:.3e} is not positive; truncation order {n_terms} too large for this grid",
            i + 1
        )));
    }
    let eigvecs = eig.eigenvectors.select_columns(&order);
    let gram = eigvecs.transpose() * &eigvecs;
    let dev = (gram - DMatrix::identity(n_terms, n_terms)).amax();
    if dev > ORTHONORMALITY_TOL {
        return Err(Error::Convergence(format!(
            "eigenvectors deviate from orthonormality by {dev:.3e}"
        )));
    }
    let mut weights = eigvecs.clone();
    for (k, l) in eigvals.iter().enumerate() {
        weights.column_mut(k).scale_mut(1.0 / l.sqrt());
    }
    Ok(EoleModel {
        nodes,
        sigma,
        eigvals,
        eigvecs,
        weights,
    })
}

impl EoleModel {
    pub fn nodes(&self) -> &[Vec<f64>] {
        &self.nodes
    }

    pub fn dim(&self) -> usize {
        self.nodes[0].len()
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn n_terms(&self) -> usize {
        self.eigvals.len()
    }

    /// Descending.
    pub fn eigvals(&self) -> &[f64] {
        &self.eigvals
    }

    pub fn eigvecs(&self) -> &DMatrix<f64> {
        &self.eigvecs
    }

    pub fn correlation(&self, x: &[f64], y: &[f64]) -> f64 {
        (-sq_dist(x, y) / (self.sigma * self.sigma)).exp()
    }

    /// `C_xη`.
    pub fn cross_correlation(&self, x: &[f64]) -> Result<DVector<f64>> {
        if x.len() != self.dim() {
            return Err(Error::param(format!(
                "query point has dimension {}, field has {}",
                x.len(),
                self.dim()
            )));
        }
        Ok(DVector::from_iterator(
            self.nodes.len(),
            self.nodes.iter().map(|eta| self.correlation(x, eta)),
        ))
    }

    /// `Σ l_i φ_i φ_iᵀ`.
    pub fn truncated_covariance(&self) -> DMatrix<f64> {
        let scaled = DMatrix::from_fn(self.nodes.len(), self.n_terms(), |r, c| {
            self.eigvecs[(r, c)] * self.eigvals[c]
        });
        scaled * self.eigvecs.transpose()
    }

    /// Linear map `ξ ↦ g(points)`, built once for repeated sampling.
    pub fn projection(&self, points: &[Vec<f64>]) -> Result<FieldProjection> {
        let mut matrix = DMatrix::zeros(points.len(), self.n_terms());
        for (r, x) in points.iter().enumerate() {
            let cx = self.cross_correlation(x)?;
            matrix.row_mut(r).copy_from(&(cx.transpose() * &self.weights));
        }
        Ok(FieldProjection { matrix })
    }
}

/// Rows map `ξ` to `g` at fixed query points.
#[derive(Debug, Clone)]
pub struct FieldProjection {
    pub matrix: DMatrix<f64>,
}

impl FieldProjection {
    pub fn n_terms(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn apply(&self, xi: &[f64]) -> Result<Vec<f64>> {
        if xi.len() != self.n_terms() {
            return Err(Error::param(format!(
                "expected {} standard-normal variables, got {}",
                self.n_terms(),
                xi.len()
            )));
        }
        Ok((&self.matrix * DVector::from_column_slice(xi)).iter().copied().collect())
    }
}

pub fn sample_gaussian_field(model: &EoleModel, xi: &[f64], points: &[Vec<f64>]) -> Result<Vec<f64>> {
    model.projection(points)?.apply(xi)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LognormalParams {
    a: f64,
    b: f64,
}

impl LognormalParams {
    /// Gives `k` mean 1 and standard deviation 0.3.
    pub const DEFAULT: LognormalParams = LognormalParams {
        a: -0.0430888,
        b: 0.29356,
    };

    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !(b >= 0.0) || !a.is_finite() || !b.is_finite() {
            return Err(Error::param("lognormal parameters need finite a and b >= 0"));
        }
        Ok(LognormalParams { a, b })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn transform(&self, g: f64) -> f64 {
        (self.a + self.b * g).exp()
    }

    /// Mean of `k` for unit-variance `g`.
    pub fn mean(&self) -> f64 {
        (self.a + self.b * self.b / 2.0).exp()
    }

    pub fn std(&self) -> f64 {
        let b2 = self.b * self.b;
        ((b2.exp() - 1.0) * (2.0 * self.a + b2).exp()).sqrt()
    }
}

impl Default for LognormalParams {
    fn default() -> Self {
        LognormalParams::DEFAULT
    }
}

pub fn lognormal_field(
    model: &EoleModel,
    params: LognormalParams,
    xi: &[f64],
    points: &[Vec<f64>],
) -> Result<Vec<f64>> {
    Ok(sample_gaussian_field(model, xi, points)?
        .into_iter()
        .map(|g| params.transform(g))
        .collect())
}

/// CSV rows `x, y, g, k` for 2D query points.
pub fn write_snapshot_csv<W: Write>(mut w: W, points: &[Vec<f64>], g: &[f64], k: &[f64]) -> Result<()> {
    if points.len() != g.len() || g.len() != k.len() {
        return Err(Error::param("snapshot columns have different lengths"));
    }
    writeln!(w, "x,y,g,k")?;
    for ((p, g), k) in points.iter().zip(g).zip(k) {
        if p.len() != 2 {
            return Err(Error::param("snapshots need 2D points"));
        }
        writeln!(w, "{:.17e},{:.17e},{:.17e},{:.17e}", p[0], p[1], g, k)?;
    }
    Ok(())
}

/// Average of `k` over a disc, by equal-weight midpoint quadrature.
///
/// `T(ξ) = mean_q k(x_q)` and `∂T/∂ξ_i = mean_q b k(x_q) W_qi` with `W` the
/// field projection at the quadrature points.
#[derive(Debug, Clone)]
pub struct SubregionAverage {
    projection: FieldProjection,
    params: LognormalParams,
    points: Vec<Vec<f64>>,
}

impl SubregionAverage {
    /// Quadrature points are the midpoints of a `resolution²` cell grid on
    /// `[lo, hi]²` that fall inside the disc.
    pub fn disc(
        model: &EoleModel,
        params: LognormalParams,
        center: [f64; 2],
        radius: f64,
        (lo, hi): (f64, f64),
        resolution: usize,
    ) -> Result<Self> {
        if model.dim() != 2 {
            return Err(Error::param("disc average needs a 2D field"));
        }
        if !(radius > 0.0) || resolution == 0 || !(hi > lo) {
            return Err(Error::param("disc average needs radius > 0, resolution >= 1, lo < hi"));
        }
        let h = (hi - lo) / resolution as f64;
        let mid = |i: usize| lo + (i as f64 + 0.5) * h;
        let points: Vec<Vec<f64>> = (0..resolution)
            .flat_map(|r| (0..resolution).map(move |c| vec![mid(c), mid(r)]))
            .filter(|p| sq_dist(p, &center) <= radius * radius)
            .collect();
        if points.is_empty() {
            return Err(Error::Degeneracy("disc contains no quadrature points".into()));
        }
        Ok(SubregionAverage {
            projection: model.projection(&points)?,
            params,
            points,
        })
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn n_terms(&self) -> usize {
        self.projection.n_terms()
    }

    pub fn value(&self, xi: &[f64]) -> Result<f64> {
        let g = self.projection.apply(xi)?;
        Ok(g.iter().map(|&g| self.params.transform(g)).sum::<f64>() / g.len() as f64)
    }

    pub fn grad(&self, xi: &[f64]) -> Result<Vec<f64>> {
        let g = self.projection.apply(xi)?;
        let q = g.len() as f64;
        let scaled = DVector::from_iterator(g.len(), g.iter().map(|&g| self.params.b * self.params.transform(g) / q));
        Ok((self.projection.matrix.transpose() * scaled).iter().copied().collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::{rng_from_seed, InputDistribution};

    #[test]
    fn single_node() {
        let m = build_eole(vec![vec![0.0, 0.0]], 1.0, 1).unwrap();
        assert_eq!(m.eigvals(), &[1.0]);
        assert!((m.eigvecs()[(0, 0)].abs() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn two_nodes_at_correlation_length() {
        let m = build_eole(vec![vec![0.0, 0.0], vec![0.3, 0.0]], 0.3, 2).unwrap();
        let e = (-1.0f64).exp();
        assert!((m.eigvals()[0] - (1.0 + e)).abs() < 1e-14);
        assert!((m.eigvals()[1] - (1.0 - e)).abs() < 1e-14);
    }

    #[test]
    fn truncation_and_validation() {
        let nodes = grid_nodes(4, -1.0, 1.0).unwrap();
        for n in [1, 5, 16] {
            let m = build_eole(nodes.clone(), 0.5, n).unwrap();
            assert!(m.eigvals().windows(2).all(|w| w[0] >= w[1]));
            let diag = m.truncated_covariance().diagonal();
            assert!(diag.iter().all(|&d| d <= 1.0 + 1e-12));
            if n == 16 {
                assert!(diag.iter().all(|&d| (d - 1.0).abs() < 1e-10));
            }
        }
        assert!(build_eole(nodes.clone(), 0.5, 17).is_err());
        assert!(build_eole(nodes.clone(), 0.0, 3).is_err());
        assert!(build_eole(vec![vec![0.0], vec![0.0]], 1.0, 1).is_err());
        // nearly coincident nodes make the trailing eigenvalue vanish
        let close = vec![vec![0.0], vec![1e-9], vec![1.0]];
        assert!(matches!(build_eole(close, 1.0, 3), Err(Error::Degeneracy(_))));
    }

    #[test]
    fn zero_and_linear_in_xi() {
        let nodes = grid_nodes(5, -1.0, 1.0).unwrap();
        let m = build_eole(nodes, 0.4, 10).unwrap();
        let q = vec![vec![0.1, 0.2], vec![-0.7, 0.9]];
        assert!(sample_gaussian_field(&m, &[0.0; 10], &q).unwrap().iter().all(|&g| g == 0.0));
        let xi: Vec<f64> = (0..10).map(|i| (i as f64 * 0.37).sin()).collect();
        let xi2: Vec<f64> = xi.iter().map(|v| 2.0 * v).collect();
        let g1 = sample_gaussian_field(&m, &xi, &q).unwrap();
        let g2 = sample_gaussian_field(&m, &xi2, &q).unwrap();
        for (a, b) in g1.iter().zip(&g2) {
            assert!((2.0 * a - b).abs() < 1e-13);
        }
        assert!(sample_gaussian_field(&m, &[0.0; 9], &q).is_err());
        assert!(sample_gaussian_field(&m, &xi, &[vec![0.0]]).is_err());
        let k = lognormal_field(&m, LognormalParams::DEFAULT, &[0.0; 10], &q).unwrap();
        assert!(k.iter().all(|&v| (v - 0.9578).abs() < 1e-4));
    }

    #[test]
    fn analytic_lognormal_moments() {
        let p = LognormalParams::DEFAULT;
        assert!((p.mean() - 1.0).abs() < 1e-6);
        assert!((p.std() - 0.3).abs() < 1e-5);
        assert!(LognormalParams::new(0.0, -1.0).is_err());
    }

    #[test]
    fn unit_variance_at_nodes() {
        let nodes = grid_nodes(3, -1.0, 1.0).unwrap();
        let m = build_eole(nodes.clone(), 0.8, 9).unwrap();
        let proj = m.projection(&nodes).unwrap();
        let dist = InputDistribution::standard_normal(9).unwrap();
        let mut rng = rng_from_seed(5);
        let draws = 100_000;
        let mut sum2 = vec![0.0; 9];
        for _ in 0..draws {
            let g = proj.apply(&dist.draw(&mut rng)).unwrap();
            for (s, v) in sum2.iter_mut().zip(g) {
                *s += v * v;
            }
        }
        for s in sum2 {
            assert!((s / draws as f64 - 1.0).abs() < 0.02);
        }
    }

    #[test]
    fn subregion_gradient_matches_differences() {
        let m = build_eole(grid_nodes(6, -1.0, 1.0).unwrap(), 0.5, 8).unwrap();
        let t = SubregionAverage::disc(&m, LognormalParams::DEFAULT, [0.2, -0.1], 0.5, (-1.0, 1.0), 20).unwrap();
        let xi: Vec<f64> = (0..8).map(|i| 0.3 * (i as f64).cos()).collect();
        let g = t.grad(&xi).unwrap();
        let h = 1e-6;
        for i in 0..8 {
            let mut up = xi.clone();
            let mut dn = xi.clone();
            up[i] += h;
            dn[i] -= h;
            let fd = (t.value(&up).unwrap() - t.value(&dn).unwrap()) / (2.0 * h);
            assert!((fd - g[i]).abs() < 1e-8 * (1.0 + g[i].abs()));
        }
    }

    #[test]
    fn snapshot_csv() {
        let mut out = Vec::new();
        write_snapshot_csv(&mut out, &[vec![0.0, 1.0]], &[0.5], &[1.5]).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert!(text.starts_with("x,y,g,k\n"));
        assert_eq!(text.lines().count(), 2);
        assert!(write_snapshot_csv(Vec::new(), &[vec![0.0]], &[0.5], &[1.5]).is_err());
    }
}
