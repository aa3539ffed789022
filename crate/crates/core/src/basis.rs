//! Univariate families and their tensor products.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::indexset::{MultiIndex, MultiIndexSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BasisFamily {
    /// First-kind Chebyshev `T_n` on `[-1, 1]`.
    Chebyshev,
    /// Probabilists' Hermite `He_n`, orthogonal under `exp(-x²/2)`.
    /// With `normalized` the polynomials are divided by `√(n!)` and become
    /// orthonormal under the standard normal density.
    Hermite { normalized: bool },
    Monomial,
}

impl BasisFamily {
    /// Normalized Hermite, the family used for PCE statistics.
    pub const HERMITE: BasisFamily = BasisFamily::Hermite { normalized: true };

    /// Whether `t` lies in the family's native domain. Evaluation outside it
    /// is allowed; callers can use this to flag extrapolation.
    pub fn in_native_domain(&self, t: f64) -> bool {
        match self {
            BasisFamily::Chebyshev => (-1.0..=1.0).contains(&t),
            _ => t.is_finite(),
        }
    }
}

impl fmt::Display for BasisFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            BasisFamily::Chebyshev => "chebyshev",
            BasisFamily::Hermite { normalized: true } => "hermite",
            BasisFamily::Hermite { normalized: false } => "hermite-raw",
            BasisFamily::Monomial => "monomial",
        };
        f.write_str(s)
    }
}

impl FromStr for BasisFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "chebyshev" | "cheb" => Ok(BasisFamily::Chebyshev),
            "hermite" => Ok(BasisFamily::HERMITE),
            "hermite-raw" => Ok(BasisFamily::Hermite { normalized: false }),
            "monomial" => Ok(BasisFamily::Monomial),
            other => Err(Error::param(format!("unknown basis family `{other}`"))),
        }
    }
}

/// Values `P_0(t), …, P_n(t)` of one family.
pub fn eval_1d_all(family: BasisFamily, n: usize, t: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(n + 1);
    out.push(1.0);
    if n == 0 {
        return out;
    }
    match family {
        BasisFamily::Chebyshev => {
            out.push(t);
            for k in 1..n {
                out.push(2.0 * t * out[k] - out[k - 1]);
            }
        }
        BasisFamily::Hermite { normalized } => {
            out.push(t);
            for k in 1..n {
                out.push(t * out[k] - k as f64 * out[k - 1]);
            }
            if normalized {
                let mut fact = 1.0;
                for (k, v) in out.iter_mut().enumerate().skip(1) {
                    fact *= k as f64;
                    *v /= fact.sqrt();
                }
            }
        }
        BasisFamily::Monomial => {
            for k in 0..n {
                out.push(out[k] * t);
            }
        }
    }
    out
}

/// Derivatives `P_0'(t), …, P_n'(t)`.
pub fn deriv_1d_all(family: BasisFamily, n: usize, t: f64) -> Vec<f64> {
    let mut out = vec![0.0; n + 1];
    if n == 0 {
        return out;
    }
    match family {
        BasisFamily::Chebyshev => {
            // T_k' = k U_{k-1}, second-kind recurrence
            let (mut u_prev, mut u) = (0.0, 1.0);
            for (k, d) in out.iter_mut().enumerate().skip(1) {
                *d = k as f64 * u;
                let next = 2.0 * t * u - u_prev;
                u_prev = u;
                u = next;
            }
        }
        BasisFamily::Hermite { normalized } => {
            let he = eval_1d_all(BasisFamily::Hermite { normalized: false }, n - 1, t);
            let mut fact = 1.0;
            for k in 1..=n {
                out[k] = k as f64 * he[k - 1];
                if normalized {
                    fact *= k as f64;
                    out[k] /= fact.sqrt();
                }
            }
        }
        BasisFamily::Monomial => {
            let mut pow = 1.0;
            for (k, d) in out.iter_mut().enumerate().skip(1) {
                *d = k as f64 * pow;
                pow *= t;
            }
        }
    }
    out
}

pub fn eval_1d(family: BasisFamily, n: usize, t: f64) -> f64 {
    eval_1d_all(family, n, t)[n]
}

pub fn deriv_1d(family: BasisFamily, n: usize, t: f64) -> f64 {
    deriv_1d_all(family, n, t)[n]
}

#[derive(Debug, Clone, PartialEq)]
pub struct DomainBox {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl DomainBox {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.is_empty() || lower.len() != upper.len() {
            return Err(Error::param("box bounds must be non-empty and of equal length"));
        }
        if lower.iter().zip(&upper).any(|(a, b)| !(a < b) || !a.is_finite() || !b.is_finite()) {
            return Err(Error::param("box requires finite lower[i] < upper[i]"));
        }
        Ok(DomainBox { lower, upper })
    }

    /// `[lo, hi]^dim`.
    pub fn cube(dim: usize, lo: f64, hi: f64) -> Result<Self> {
        Self::new(vec![lo; dim], vec![hi; dim])
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x.iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(v, (a, b))| *a <= *v && *v <= *b)
    }
}

/// Affine map from physical coordinates to the family's native coordinates.
#[derive(Debug, Clone, PartialEq)]
pub enum InputMap {
    Identity,
    /// `t = (2x - lo - hi) / (hi - lo)`, onto `[-1, 1]`.
    Box(DomainBox),
    /// `t = (x - mean) / std`, onto standard normal coordinates.
    Standardize { mean: Vec<f64>, std: Vec<f64> },
}

impl InputMap {
    pub fn standardize(mean: Vec<f64>, std: Vec<f64>) -> Result<Self> {
        if mean.len() != std.len() || mean.is_empty() {
            return Err(Error::param("mean and std must be non-empty and of equal length"));
        }
        if std.iter().any(|s| !(*s > 0.0)) {
            return Err(Error::param("standard deviations must be positive"));
        }
        Ok(InputMap::Standardize { mean, std })
    }

    fn dim(&self) -> Option<usize> {
        match self {
            InputMap::Identity => None,
            InputMap::Box(b) => Some(b.dim()),
            InputMap::Standardize { mean, .. } => Some(mean.len()),
        }
    }

    /// Native coordinate and chain-rule factor `dt/dx` in dimension `k`.
    #[inline]
    pub fn apply(&self, k: usize, x: f64) -> (f64, f64) {
        match self {
            InputMap::Identity => (x, 1.0),
            InputMap::Box(b) => {
                let width = b.upper[k] - b.lower[k];
                ((2.0 * x - b.lower[k] - b.upper[k]) / width, 2.0 / width)
            }
            InputMap::Standardize { mean, std } => ((x - mean[k]) / std[k], 1.0 / std[k]),
        }
    }
}

/// A family, an index set and the coordinate map, i.e. the ordered list of
/// tensor-product polynomials `P_1, …, P_M`.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorBasis {
    family: BasisFamily,
    index_set: MultiIndexSet,
    map: InputMap,
}

impl TensorBasis {
    pub fn new(family: BasisFamily, index_set: MultiIndexSet, map: InputMap) -> Result<Self> {
        if let Some(d) = map.dim() {
            if d != index_set.dim() {
                return Err(Error::param(format!(
                    "input map has dimension {d} but index set has {}",
                    index_set.dim()
                )));
            }
        }
        Ok(TensorBasis {
            family,
            index_set,
            map,
        })
    }

    pub fn with_box(family: BasisFamily, index_set: MultiIndexSet, bx: DomainBox) -> Result<Self> {
        Self::new(family, index_set, InputMap::Box(bx))
    }

    pub fn family(&self) -> BasisFamily {
        self.family
    }

    pub fn index_set(&self) -> &MultiIndexSet {
        &self.index_set
    }

    pub fn map(&self) -> &InputMap {
        &self.map
    }

    pub fn dim(&self) -> usize {
        self.index_set.dim()
    }

    pub fn len(&self) -> usize {
        self.index_set.len()
    }

    pub fn is_empty(&self) -> bool {
        self.index_set.is_empty()
    }

    /// Orthonormal w.r.t. the (standardized) Gaussian measure: normalized
    /// Hermite in native or standardized coordinates. The constant polynomial
    /// is always first.
    pub fn is_orthonormal(&self) -> bool {
        self.family == BasisFamily::HERMITE
            && matches!(self.map, InputMap::Identity | InputMap::Standardize { .. })
            && self.index_set.indices().first().is_some_and(MultiIndex::is_zero)
    }

    fn check_point(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::param(format!(
                "point has dimension {}, basis has {}",
                x.len(),
                self.dim()
            )));
        }
        Ok(())
    }

    fn check_index(&self, idx: &MultiIndex) -> Result<()> {
        if idx.dim() != self.dim() {
            return Err(Error::param(format!(
                "multi-index has dimension {}, basis has {}",
                idx.dim(),
                self.dim()
            )));
        }
        Ok(())
    }

    /// Native coordinates of `x` with per-dimension chain factors.
    pub fn to_native(&self, x: &[f64]) -> (Vec<f64>, Vec<f64>) {
        (0..x.len()).map(|k| self.map.apply(k, x[k])).unzip()
    }

    pub fn eval_multi(&self, idx: &MultiIndex, x: &[f64]) -> Result<f64> {
        self.check_point(x)?;
        self.check_index(idx)?;
        Ok(idx
            .degrees()
            .iter()
            .enumerate()
            .map(|(k, &n)| eval_1d(self.family, n, self.map.apply(k, x[k]).0))
            .product())
    }

    pub fn grad_multi(&self, idx: &MultiIndex, x: &[f64]) -> Result<Vec<f64>> {
        self.check_point(x)?;
        self.check_index(idx)?;
        let (t, scale) = self.to_native(x);
        let degs = idx.degrees();
        let vals: Vec<f64> = (0..degs.len()).map(|k| eval_1d(self.family, degs[k], t[k])).collect();
        Ok((0..degs.len())
            .map(|k| {
                let others: f64 = (0..degs.len()).filter(|&j| j != k).map(|j| vals[j]).product();
                deriv_1d(self.family, degs[k], t[k]) * scale[k] * others
            })
            .collect())
    }

    fn tables(&self, x: &[f64], with_derivs: bool) -> (Vec<Vec<f64>>, Vec<Vec<f64>>, Vec<f64>) {
        let n = self.index_set.max_degree();
        let (t, scale) = self.to_native(x);
        let vals = t.iter().map(|&tk| eval_1d_all(self.family, n, tk)).collect();
        let ders = if with_derivs {
            t.iter().map(|&tk| deriv_1d_all(self.family, n, tk)).collect()
        } else {
            Vec::new()
        };
        (vals, ders, scale)
    }

    /// `(P_1(x), …, P_M(x))` in index-set order.
    pub fn design_row(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_point(x)?;
        let (vals, _, _) = self.tables(x, false);
        Ok(self
            .index_set
            .iter()
            .map(|idx| {
                idx.degrees()
                    .iter()
                    .enumerate()
                    .map(|(k, &d)| vals[k][d])
                    .product()
            })
            .collect())
    }

    /// `l` rows; entry `(k, j)` is `∂_k P_j(x)`.
    pub fn design_grad_rows(&self, x: &[f64]) -> Result<Vec<Vec<f64>>> {
        self.check_point(x)?;
        let (vals, ders, scale) = self.tables(x, true);
        let dim = self.dim();
        let mut rows = vec![Vec::with_capacity(self.len()); dim];
        for idx in &self.index_set {
            let d = idx.degrees();
            for (k, row) in rows.iter_mut().enumerate() {
                let mut v = ders[k][d[k]] * scale[k];
                for j in (0..dim).filter(|&j| j != k) {
                    v *= vals[j][d[j]];
                }
                row.push(v);
            }
        }
        Ok(rows)
    }
}
