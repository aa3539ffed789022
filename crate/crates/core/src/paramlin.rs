//! Parametric linear systems `E(ξ) ẋ + A(ξ) x = B u(t)` with sensitivities.
//!
//! The dependence on the parameters is affine, `A(ξ) = A₀ + Σ ξ_i A_i` and
//! likewise for `E`, so every `A_i = ∂A/∂ξ_i` is a constant sparse matrix.
//! Differentiating the system gives, for each parameter,
//!
//! ```text
//! E ẋ_i + A x_i = B_i u − E_i ẋ − A_i x
//! ```
//!
//! which has the same left-hand side as the original system. One
//! factorization of `A` (or of the implicit-Euler step matrix `E/h + A`)
//! therefore serves `x` and all `l` sensitivities.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector, LU};
use nalgebra::Dyn;
use nalgebra_sparse::{CooMatrix, CsrMatrix};
use rayon::prelude::*;

use crate::error::{Error, Result};

pub type Csr = CsrMatrix<f64>;

/// Relative pivot size below which a factorization is declared singular.
const PIVOT_TOL: f64 = 1e-13;

pub fn spmv(m: &Csr, x: &DVector<f64>) -> DVector<f64> {
    let mut y = DVector::zeros(m.nrows());
    for (i, row) in m.row_iter().enumerate() {
        y[i] = row.col_indices().iter().zip(row.values()).map(|(&j, v)| v * x[j]).sum();
    }
    y
}

/// `Σ w_k M_k` for same-shape sparse matrices.
fn combine(n: usize, terms: &[(f64, &Csr)]) -> Csr {
    let mut coo = CooMatrix::new(n, n);
    for (w, m) in terms {
        if *w != 0.0 {
            for (i, j, v) in m.triplet_iter() {
                coo.push(i, j, w * v);
            }
        }
    }
    CsrMatrix::from(&coo)
}

pub fn to_dense(m: &Csr) -> DMatrix<f64> {
    DMatrix::from(m)
}

/// Dense LU with a relative singularity check.
#[derive(Debug, Clone)]
pub struct Factorization {
    lu: LU<f64, Dyn, Dyn>,
}

impl Factorization {
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if !m.is_square() || m.nrows() == 0 {
            return Err(Error::Factorization("matrix must be square and non-empty".into()));
        }
        let scale = m.amax();
        let lu = m.lu();
        let u = lu.u();
        let min_pivot = u.diagonal().iter().fold(f64::INFINITY, |acc, v| acc.min(v.abs()));
        if scale == 0.0 || !(min_pivot > PIVOT_TOL * scale) {
            return Err(Error::Factorization(format!(
                "matrix is singular (smallest pivot {min_pivot:.3e}, scale {scale:.3e})"
            )));
        }
        Ok(Factorization { lu })
    }

    pub fn solve(&self, rhs: &DVector<f64>) -> DVector<f64> {
        self.lu.solve(rhs).expect("factorization was checked nonsingular")
    }
}

#[derive(Debug, Clone)]
pub struct ParamLinearSystem {
    n: usize,
    e0: Csr,
    a0: Csr,
    e_params: Vec<Csr>,
    a_params: Vec<Csr>,
    b: DMatrix<f64>,
    b_params: Option<Vec<DMatrix<f64>>>,
}

impl ParamLinearSystem {
    /// Static system `A(ξ) x = B u`; `E` is zero.
    pub fn new(a0: Csr, a_params: Vec<Csr>, b: DMatrix<f64>) -> Result<Self> {
        let n = a0.nrows();
        if n == 0 || a0.ncols() != n {
            return Err(Error::param("A0 must be square and non-empty"));
        }
        if a_params.iter().any(|m| m.nrows() != n || m.ncols() != n) {
            return Err(Error::param("every A_i must be n × n"));
        }
        if b.nrows() != n || b.ncols() == 0 {
            return Err(Error::param("B must be n × d with d >= 1"));
        }
        let l = a_params.len();
        Ok(ParamLinearSystem {
            n,
            e0: CsrMatrix::zeros(n, n),
            a0,
            e_params: vec![CsrMatrix::zeros(n, n); l],
            a_params,
            b,
            b_params: None,
        })
    }

    /// Adds the mass matrix `E(ξ) = E₀ + Σ ξ_i E_i`; `e_params` must have one
    /// entry per parameter.
    pub fn with_mass(mut self, e0: Csr, e_params: Vec<Csr>) -> Result<Self> {
        let n = self.n;
        if e0.nrows() != n || e0.ncols() != n {
            return Err(Error::param("E0 must be n × n"));
        }
        if e_params.len() != self.l() || e_params.iter().any(|m| m.nrows() != n || m.ncols() != n) {
            return Err(Error::param("need one n × n E_i per parameter"));
        }
        self.e0 = e0;
        self.e_params = e_params;
        Ok(self)
    }

    /// Parameter-dependent input matrix, `B(ξ) = B + Σ ξ_i B_i`.
    pub fn with_input_derivatives(mut self, b_params: Vec<DMatrix<f64>>) -> Result<Self> {
        if b_params.len() != self.l() || b_params.iter().any(|m| m.shape() != self.b.shape()) {
            return Err(Error::param("need one B_i of B's shape per parameter"));
        }
        self.b_params = Some(b_params);
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn l(&self) -> usize {
        self.a_params.len()
    }

    pub fn inputs(&self) -> usize {
        self.b.ncols()
    }

    pub fn a0(&self) -> &Csr {
        &self.a0
    }

    pub fn a_param(&self, i: usize) -> &Csr {
        &self.a_params[i]
    }

    pub fn e_param(&self, i: usize) -> &Csr {
        &self.e_params[i]
    }

    pub fn b(&self) -> &DMatrix<f64> {
        &self.b
    }

    fn check_xi(&self, xi: &[f64]) -> Result<()> {
        if xi.len() != self.l() {
            return Err(Error::param(format!(
                "expected {} parameters, got {}",
                self.l(),
                xi.len()
            )));
        }
        Ok(())
    }

    fn check_u(&self, u: &DVector<f64>) -> Result<()> {
        if u.len() != self.inputs() {
            return Err(Error::param(format!(
                "input vector has length {}, B has {} columns",
                u.len(),
                self.inputs()
            )));
        }
        Ok(())
    }

    pub fn a_at(&self, xi: &[f64]) -> Result<Csr> {
        self.check_xi(xi)?;
        let mut terms = vec![(1.0, &self.a0)];
        terms.extend(xi.iter().copied().zip(self.a_params.iter()));
        Ok(combine(self.n, &terms))
    }

    pub fn e_at(&self, xi: &[f64]) -> Result<Csr> {
        self.check_xi(xi)?;
        let mut terms = vec![(1.0, &self.e0)];
        terms.extend(xi.iter().copied().zip(self.e_params.iter()));
        Ok(combine(self.n, &terms))
    }

    pub fn b_at(&self, xi: &[f64]) -> Result<DMatrix<f64>> {
        self.check_xi(xi)?;
        let mut b = self.b.clone();
        if let Some(bp) = &self.b_params {
            for (w, m) in xi.iter().zip(bp) {
                b += m * *w;
            }
        }
        Ok(b)
    }

    /// `B_i u`, zero unless input derivatives were supplied.
    fn b_param_times(&self, i: usize, u: &DVector<f64>) -> Option<DVector<f64>> {
        self.b_params.as_ref().map(|bp| &bp[i] * u)
    }

    /// Sparsity counts entering the cost of the sensitivity solve.
    pub fn sensitivity_cost(&self) -> SensitivityCost {
        let nonzero_rows = self
            .a_params
            .iter()
            .map(|m| m.row_iter().filter(|r| r.nnz() > 0).count())
            .sum();
        let nonzeros = self.a_params.iter().map(|m| m.nnz()).sum();
        SensitivityCost {
            n: self.n,
            l: self.l(),
            nonzero_rows,
            nonzeros,
        }
    }
}

/// Counts for the operation estimate `O(n³) + O(c₁ n²) + O(l n²) + O(c₂)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SensitivityCost {
    pub n: usize,
    pub l: usize,
    /// `c₁`: total number of non-zero rows over all `A_i`.
    pub nonzero_rows: usize,
    /// `c₂`: total number of non-zeros over all `A_i`.
    pub nonzeros: usize,
}

/// State and its parameter derivatives; `sens[i] = ∂x/∂ξ_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct SensitivitySolution {
    pub x: DVector<f64>,
    pub sens: Vec<DVector<f64>>,
}

/// DC solve: factor `A(ξ)` once, then `x = A⁻¹ B u` and
/// `x_i = A⁻¹ (B_i u − A_i x)`.
pub fn solve_dc_with_sens(sys: &ParamLinearSystem, xi: &[f64], u: &DVector<f64>) -> Result<SensitivitySolution> {
    sys.check_u(u)?;
    let a = sys.a_at(xi)?;
    let lu = Factorization::new(to_dense(&a))?;
    let b = sys.b_at(xi)?;
    let x = lu.solve(&(b * u));
    let sens = (0..sys.l())
        .into_par_iter()
        .map(|i| {
            let mut rhs = -spmv(&sys.a_params[i], &x);
            if let Some(bu) = sys.b_param_times(i, u) {
                rhs += bu;
            }
            lu.solve(&rhs)
        })
        .collect();
    Ok(SensitivitySolution { x, sens })
}

/// Block lower-triangular system of size `(l + 1) n` whose solution stacks
/// `x, x_1, …, x_l`.
#[derive(Debug, Clone)]
pub struct ExtendedSystem {
    pub e: Csr,
    pub a: Csr,
    pub b: DMatrix<f64>,
    pub n: usize,
    pub l: usize,
}

pub fn build_extended(sys: &ParamLinearSystem, xi: &[f64]) -> Result<ExtendedSystem> {
    let (n, l) = (sys.n(), sys.l());
    let size = (l + 1) * n;
    let a = sys.a_at(xi)?;
    let e = sys.e_at(xi)?;
    let b = sys.b_at(xi)?;

    let block_diag_and_col = |base: &Csr, params: &[Csr]| {
        let mut coo = CooMatrix::new(size, size);
        for blk in 0..=l {
            for (i, j, v) in base.triplet_iter() {
                coo.push(blk * n + i, blk * n + j, *v);
            }
        }
        for (k, m) in params.iter().enumerate() {
            for (i, j, v) in m.triplet_iter() {
                coo.push((k + 1) * n + i, j, *v);
            }
        }
        CsrMatrix::from(&coo)
    };

    let mut bt = DMatrix::zeros(size, sys.inputs());
    bt.rows_mut(0, n).copy_from(&b);
    if let Some(bp) = &sys.b_params {
        for (k, m) in bp.iter().enumerate() {
            bt.rows_mut((k + 1) * n, n).copy_from(m);
        }
    }
    Ok(ExtendedSystem {
        e: block_diag_and_col(&e, &sys.e_params),
        a: block_diag_and_col(&a, &sys.a_params),
        b: bt,
        n,
        l,
    })
}

impl ExtendedSystem {
    /// Solves the static extended system `Ã x̃ = B̃ u` with a fresh dense
    /// factorization of `Ã`.
    pub fn solve_dc(&self, u: &DVector<f64>) -> Result<SensitivitySolution> {
        if u.len() != self.b.ncols() {
            return Err(Error::param("input vector does not match B̃"));
        }
        let lu = Factorization::new(to_dense(&self.a))?;
        let stacked = lu.solve(&(&self.b * u));
        let n = self.n;
        Ok(SensitivitySolution {
            x: stacked.rows(0, n).into_owned(),
            sens: (1..=self.l).map(|k| stacked.rows(k * n, n).into_owned()).collect(),
        })
    }
}

/// States and sensitivities on a time grid; `sens[k][i]` is `∂x/∂ξ_i` at
/// `times[k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<DVector<f64>>,
    pub sens: Vec<Vec<DVector<f64>>>,
}

impl Trajectory {
    /// CSV rows `t, x_1..x_n, dx_1/dξ_1..dx_n/dξ_1, …`.
    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> Result<()> {
        for (k, t) in self.times.iter().enumerate() {
            let mut cols = vec![format!("{t:.17e}")];
            cols.extend(self.states[k].iter().map(|v| format!("{v:.17e}")));
            for s in &self.sens[k] {
                cols.extend(s.iter().map(|v| format!("{v:.17e}")));
            }
            writeln!(w, "{}", cols.join(","))?;
        }
        Ok(())
    }
}

/// Backward Euler on the DAE and on its parameter derivatives. The step
/// matrix `E/h + A` is refactored only when `h` changes.
pub fn integrate_dae_with_sens(
    sys: &ParamLinearSystem,
    xi: &[f64],
    input: impl Fn(f64) -> DVector<f64>,
    t_grid: &[f64],
    x0: Option<DVector<f64>>,
) -> Result<Trajectory> {
    let n = sys.n();
    if t_grid.len() < 2 {
        return Err(Error::param("time grid needs at least two points"));
    }
    if t_grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::param("time grid must be strictly increasing"));
    }
    let x0 = x0.unwrap_or_else(|| DVector::zeros(n));
    if x0.len() != n {
        return Err(Error::param("initial state has wrong length"));
    }
    let a = sys.a_at(xi)?;
    let e = sys.e_at(xi)?;
    let b = sys.b_at(xi)?;
    let a_dense = to_dense(&a);
    let e_dense = to_dense(&e);

    let mut states = vec![x0];
    let mut sens = vec![vec![DVector::zeros(n); sys.l()]];
    let mut cached: Option<(u64, Factorization)> = None;

    for k in 1..t_grid.len() {
        let h = t_grid[k] - t_grid[k - 1];
        if cached.as_ref().is_none_or(|(bits, _)| *bits != h.to_bits()) {
            let step = &e_dense / h + &a_dense;
            let lu = Factorization::new(step).map_err(|err| {
                Error::Factorization(format!("step {k} (t = {}): {err}", t_grid[k]))
            })?;
            cached = Some((h.to_bits(), lu));
        }
        let lu = &cached.as_ref().expect("just set").1;
        let u = input(t_grid[k]);
        sys.check_u(&u)?;
        let prev = &states[k - 1];
        let x = lu.solve(&(spmv(&e, prev) / h + &b * &u));
        let dx = (&x - prev) / h;
        let prev_sens = &sens[k - 1];
        let next_sens: Vec<DVector<f64>> = (0..sys.l())
            .into_par_iter()
            .map(|i| {
                let mut rhs = spmv(&e, &prev_sens[i]) / h - spmv(&sys.e_params[i], &dx) - spmv(&sys.a_params[i], &x);
                if let Some(bu) = sys.b_param_times(i, &u) {
                    rhs += bu;
                }
                lu.solve(&rhs)
            })
            .collect();
        states.push(x);
        sens.push(next_sens);
    }
    Ok(Trajectory {
        times: t_grid.to_vec(),
        states,
        sens,
    })
}

/// One netlist element. Node ids are arbitrary non-negative integers.
#[derive(Debug, Clone, PartialEq)]
pub enum Element {
    /// Conductance `1/ohms + ξ_param`.
    Resistor { a: usize, b: usize, ohms: f64, param: Option<usize> },
    /// Capacitance `farads + ξ_param`.
    Capacitor { a: usize, b: usize, farads: f64, param: Option<usize> },
    /// Current `amps` injected into `node`.
    Current { node: usize, amps: f64 },
}

/// Linear circuit in the netlist-lite text format:
///
/// ```text
/// R node_a node_b ohms [param_index]
/// C node_a node_b farads [param_index]
/// I node amps
/// GROUND node
/// ```
///
/// Parameter indices are 1-based. `#` starts a comment.
#[derive(Debug, Clone, PartialEq)]
pub struct Netlist {
    pub elements: Vec<Element>,
    pub ground: usize,
}

/// A compiled netlist: the parametric system, its input vector and the
/// netlist node id of every unknown.
#[derive(Debug, Clone)]
pub struct Circuit {
    pub system: ParamLinearSystem,
    pub input: DVector<f64>,
    pub nodes: Vec<usize>,
}

impl Netlist {
    pub fn param_count(&self) -> usize {
        self.elements
            .iter()
            .filter_map(|e| match e {
                Element::Resistor { param, .. } | Element::Capacitor { param, .. } => *param,
                Element::Current { .. } => None,
            })
            .max()
            .unwrap_or(0)
    }

    pub fn compile(&self) -> Result<Circuit> {
        let mut ids = BTreeSet::new();
        let mut adjacency: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for el in &self.elements {
            match *el {
                Element::Resistor { a, b, ohms, param } => {
                    if !(ohms > 0.0) || !ohms.is_finite() {
                        return Err(Error::param(format!("resistor {a}-{b} needs positive resistance")));
                    }
                    if a == b {
                        return Err(Error::param(format!("resistor {a}-{b} is shorted")));
                    }
                    if param == Some(0) {
                        return Err(Error::param("parameter indices are 1-based"));
                    }
                    ids.extend([a, b]);
                    adjacency.entry(a).or_default().push(b);
                    adjacency.entry(b).or_default().push(a);
                }
                Element::Capacitor { a, b, farads, param } => {
                    if !(farads >= 0.0) || a == b || param == Some(0) {
                        return Err(Error::param(format!("invalid capacitor {a}-{b}")));
                    }
                    ids.extend([a, b]);
                }
                Element::Current { node, .. } => {
                    if node == self.ground {
                        return Err(Error::param(format!(
                            "current injected into the ground node {node}"
                        )));
                    }
                    ids.insert(node);
                }
            }
        }
        if !ids.contains(&self.ground) {
            return Err(Error::param(format!("ground node {} is not connected", self.ground)));
        }
        // every node needs a resistive path to ground
        let mut seen = BTreeSet::from([self.ground]);
        let mut queue = VecDeque::from([self.ground]);
        while let Some(v) = queue.pop_front() {
            for &w in adjacency.get(&v).into_iter().flatten() {
                if seen.insert(w) {
                    queue.push_back(w);
                }
            }
        }
        if let Some(&lost) = ids.iter().find(|id| !seen.contains(id)) {
            return Err(Error::param(format!("node {lost} has no resistive path to ground")));
        }

        let nodes: Vec<usize> = ids.into_iter().filter(|&v| v != self.ground).collect();
        if nodes.is_empty() {
            return Err(Error::param("circuit has no unknown nodes"));
        }
        let index: BTreeMap<usize, usize> = nodes.iter().enumerate().map(|(i, &v)| (v, i)).collect();
        let n = nodes.len();
        let l = self.param_count();
        let mut a0 = CooMatrix::new(n, n);
        let mut e0 = CooMatrix::new(n, n);
        let mut a_params = vec![CooMatrix::new(n, n); l];
        let mut e_params = vec![CooMatrix::new(n, n); l];
        let mut sources = Vec::new();

        let stamp = |m: &mut CooMatrix<f64>, a: usize, b: usize, g: f64| {
            let (ia, ib) = (index.get(&a).copied(), index.get(&b).copied());
            if let Some(i) = ia {
                m.push(i, i, g);
            }
            if let Some(j) = ib {
                m.push(j, j, g);
            }
            if let (Some(i), Some(j)) = (ia, ib) {
                m.push(i, j, -g);
                m.push(j, i, -g);
            }
        };

        for el in &self.elements {
            match *el {
                Element::Resistor { a, b, ohms, param } => {
                    stamp(&mut a0, a, b, 1.0 / ohms);
                    if let Some(p) = param {
                        stamp(&mut a_params[p - 1], a, b, 1.0);
                    }
                }
                Element::Capacitor { a, b, farads, param } => {
                    stamp(&mut e0, a, b, farads);
                    if let Some(p) = param {
                        stamp(&mut e_params[p - 1], a, b, 1.0);
                    }
                }
                Element::Current { node, amps } => sources.push((index[&node], amps)),
            }
        }
        let mut bmat = DMatrix::zeros(n, sources.len().max(1));
        let mut input = DVector::zeros(sources.len().max(1));
        for (k, (row, amps)) in sources.iter().enumerate() {
            bmat[(*row, k)] = 1.0;
            input[k] = *amps;
        }
        let csr = |c: &CooMatrix<f64>| CsrMatrix::from(c);
        let system = ParamLinearSystem::new(csr(&a0), a_params.iter().map(csr).collect(), bmat)?
            .with_mass(csr(&e0), e_params.iter().map(csr).collect())?;
        Ok(Circuit { system, input, nodes })
    }
}

impl fmt::Display for Netlist {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "GROUND {}", self.ground)?;
        for el in &self.elements {
            match el {
                Element::Resistor { a, b, ohms, param } => {
                    write!(f, "R {a} {b} {ohms}")?;
                    if let Some(p) = param {
                        write!(f, " {p}")?;
                    }
                    writeln!(f)?;
                }
                Element::Capacitor { a, b, farads, param } => {
                    write!(f, "C {a} {b} {farads}")?;
                    if let Some(p) = param {
                        write!(f, " {p}")?;
                    }
                    writeln!(f)?;
                }
                Element::Current { node, amps } => writeln!(f, "I {node} {amps}")?,
            }
        }
        Ok(())
    }
}

impl FromStr for Netlist {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut elements = Vec::new();
        let mut ground = None;
        for (n, raw) in s.lines().enumerate() {
            let lineno = n + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split_whitespace().collect();
            let node = |t: &str| {
                t.parse::<usize>()
                    .map_err(|_| Error::format(lineno, format!("bad node id `{t}`")))
            };
            let num = |t: &str| {
                t.parse::<f64>()
                    .map_err(|_| Error::format(lineno, format!("bad value `{t}`")))
            };
            let param = |rest: &[&str]| -> Result<Option<usize>> {
                match rest {
                    [] => Ok(None),
                    [p] => p
                        .parse::<usize>()
                        .ok()
                        .filter(|&p| p >= 1)
                        .map(Some)
                        .ok_or_else(|| Error::format(lineno, "parameter index must be >= 1")),
                    _ => Err(Error::format(lineno, "too many fields")),
                }
            };
            match f.as_slice() {
                ["R", a, b, v, rest @ ..] => elements.push(Element::Resistor {
                    a: node(a)?,
                    b: node(b)?,
                    ohms: num(v)?,
                    param: param(rest)?,
                }),
                ["C", a, b, v, rest @ ..] => elements.push(Element::Capacitor {
                    a: node(a)?,
                    b: node(b)?,
                    farads: num(v)?,
                    param: param(rest)?,
                }),
                ["I", a, v] => elements.push(Element::Current {
                    node: node(a)?,
                    amps: num(v)?,
                }),
                ["GROUND", a] => {
                    if ground.replace(node(a)?).is_some() {
                        return Err(Error::format(lineno, "duplicate GROUND"));
                    }
                }
                _ => return Err(Error::format(lineno, format!("unrecognized line `{line}`"))),
            }
        }
        Ok(Netlist {
            elements,
            ground: ground.ok_or_else(|| Error::format(0, "missing GROUND line"))?,
        })
    }
}

/// Rectangular grid of unit resistors.
///
/// Nodes are numbered `1..=rows*cols` row by row. Each entry of
/// `param_edges` names a grid edge whose conductance becomes `1 + ξ_i`
/// (parameters numbered in list order).
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub rows: usize,
    pub cols: usize,
    pub injections: Vec<(usize, f64)>,
    pub param_edges: Vec<(usize, usize)>,
    pub ground: usize,
}

impl GridSpec {
    /// All grid edges, horizontal then vertical.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let id = |r: usize, c: usize| r * self.cols + c + 1;
        let mut out = Vec::new();
        for r in 0..self.rows {
            for c in 0..self.cols.saturating_sub(1) {
                out.push((id(r, c), id(r, c + 1)));
            }
        }
        for r in 0..self.rows.saturating_sub(1) {
            for c in 0..self.cols {
                out.push((id(r, c), id(r + 1, c)));
            }
        }
        out
    }

    pub fn netlist(&self) -> Result<Netlist> {
        if self.rows < 2 || self.cols < 2 {
            return Err(Error::param("grid must be at least 2 × 2"));
        }
        let count = self.rows * self.cols;
        let in_grid = |v: usize| (1..=count).contains(&v);
        if !in_grid(self.ground) {
            return Err(Error::param(format!("ground node {} is outside the grid", self.ground)));
        }
        for &(node, _) in &self.injections {
            if !in_grid(node) {
                return Err(Error::param(format!("injection node {node} is outside the grid")));
            }
        }
        let edges = self.edges();
        let mut param_of: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        for (k, &(a, b)) in self.param_edges.iter().enumerate() {
            let key = (a.min(b), a.max(b));
            if !edges.contains(&key) {
                return Err(Error::param(format!("{a}-{b} is not a grid edge")));
            }
            if param_of.insert(key, k + 1).is_some() {
                return Err(Error::param(format!("edge {a}-{b} parametrized twice")));
            }
        }
        let mut elements: Vec<Element> = edges
            .iter()
            .map(|&(a, b)| Element::Resistor {
                a,
                b,
                ohms: 1.0,
                param: param_of.get(&(a, b)).copied(),
            })
            .collect();
        elements.extend(self.injections.iter().map(|&(node, amps)| Element::Current { node, amps }));
        Ok(Netlist {
            elements,
            ground: self.ground,
        })
    }
}

pub fn resistor_grid(spec: &GridSpec) -> Result<Circuit> {
    spec.netlist()?.compile()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn csr_from_dense(m: &DMatrix<f64>) -> Csr {
        let mut coo = CooMatrix::new(m.nrows(), m.ncols());
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                if m[(i, j)] != 0.0 {
                    coo.push(i, j, m[(i, j)]);
                }
            }
        }
        CsrMatrix::from(&coo)
    }

    fn scalar(v: f64) -> Csr {
        csr_from_dense(&DMatrix::from_element(1, 1, v))
    }

    #[test]
    fn identity_sensitivity() {
        let n = 3;
        let eye = csr_from_dense(&DMatrix::identity(n, n));
        let sys = ParamLinearSystem::new(eye.clone(), vec![eye], DMatrix::identity(n, n)).unwrap();
        let u = DVector::from_vec(vec![1.0, 0.0, 0.0]);
        let sol = solve_dc_with_sens(&sys, &[0.0], &u).unwrap();
        assert_eq!(sol.x, u);
        assert_eq!(sol.sens[0], -u);
    }

    #[test]
    fn scalar_sensitivity() {
        let sys = ParamLinearSystem::new(scalar(2.0), vec![scalar(1.0)], DMatrix::from_element(1, 1, 1.0)).unwrap();
        let sol = solve_dc_with_sens(&sys, &[0.0], &DVector::from_element(1, 1.0)).unwrap();
        assert_eq!(sol.x[0], 0.5);
        assert_eq!(sol.sens[0][0], -0.25);
    }

    #[test]
    fn extended_matrix_structure() {
        let sys = ParamLinearSystem::new(scalar(2.0), vec![scalar(1.0)], DMatrix::from_element(1, 1, 3.0)).unwrap();
        let ext = build_extended(&sys, &[0.0]).unwrap();
        assert_eq!(to_dense(&ext.a), DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 1.0, 2.0]));
        assert_eq!(ext.b, DMatrix::from_row_slice(2, 1, &[3.0, 0.0]));
        let sol = ext.solve_dc(&DVector::from_element(1, 1.0)).unwrap();
        assert!((sol.x[0] - 1.5).abs() < 1e-15);
        assert!((sol.sens[0][0] + 0.75).abs() < 1e-15);
    }

    #[test]
    fn singular_matrix_reported() {
        let sys = ParamLinearSystem::new(scalar(1.0), vec![scalar(1.0)], DMatrix::from_element(1, 1, 1.0)).unwrap();
        let r = solve_dc_with_sens(&sys, &[-1.0], &DVector::from_element(1, 1.0));
        assert!(matches!(r, Err(Error::Factorization(_))));
        assert!(matches!(solve_dc_with_sens(&sys, &[], &DVector::from_element(1, 1.0)), Err(Error::Parameter(_))));
    }

    #[test]
    fn input_derivatives_enter_rhs() {
        // a x = (b0 + ξ) u: x = (b0 + ξ)/a, dx/dξ = 1/a
        let sys = ParamLinearSystem::new(scalar(4.0), vec![CsrMatrix::zeros(1, 1)], DMatrix::from_element(1, 1, 2.0))
            .unwrap()
            .with_input_derivatives(vec![DMatrix::from_element(1, 1, 1.0)])
            .unwrap();
        let u = DVector::from_element(1, 1.0);
        let sol = solve_dc_with_sens(&sys, &[0.0], &u).unwrap();
        assert!((sol.sens[0][0] - 0.25).abs() < 1e-15);
        let ext = build_extended(&sys, &[0.0]).unwrap().solve_dc(&u).unwrap();
        assert!((ext.sens[0][0] - 0.25).abs() < 1e-15);
    }

    #[test]
    fn two_by_two_grid_voltages() {
        let spec = GridSpec {
            rows: 2,
            cols: 2,
            injections: vec![(1, 1.0)],
            param_edges: vec![(1, 2)],
            ground: 4,
        };
        let c = resistor_grid(&spec).unwrap();
        assert_eq!(c.nodes, vec![1, 2, 3]);
        let sol = solve_dc_with_sens(&c.system, &[0.0], &c.input).unwrap();
        // 3×3 elimination of [[2,-1,-1],[-1,2,0],[-1,0,2]] v = (1,0,0)
        for (v, e) in sol.x.iter().zip([1.0, 0.5, 0.5]) {
            assert!((v - e).abs() < 1e-14);
        }
        let a_i = c.system.a_param(0);
        assert!(a_i.nnz() <= 4);
    }

    #[test]
    fn grounded_laplacian_is_spd() {
        let spec = GridSpec {
            rows: 4,
            cols: 5,
            injections: vec![(1, 1.0)],
            param_edges: vec![(1, 2), (7, 12), (19, 20)],
            ground: 20,
        };
        let c = resistor_grid(&spec).unwrap();
        let a = to_dense(c.system.a0());
        assert_eq!(a, a.transpose());
        assert!(a.clone().cholesky().is_some());
        for i in 0..3 {
            assert!(c.system.a_param(i).nnz() <= 4);
        }
        assert_eq!(c.system.a_param(2).nnz(), 1);
        let cost = c.system.sensitivity_cost();
        assert_eq!((cost.n, cost.l, cost.nonzero_rows, cost.nonzeros), (19, 3, 5, 9));
    }

    #[test]
    fn grid_validation() {
        let base = GridSpec {
            rows: 3,
            cols: 3,
            injections: vec![(1, 1.0)],
            param_edges: vec![],
            ground: 9,
        };
        assert!(resistor_grid(&GridSpec { rows: 1, ..base.clone() }).is_err());
        assert!(resistor_grid(&GridSpec { injections: vec![(10, 1.0)], ..base.clone() }).is_err());
        assert!(resistor_grid(&GridSpec { injections: vec![(9, 1.0)], ..base.clone() }).is_err());
        assert!(resistor_grid(&GridSpec { param_edges: vec![(1, 5)], ..base.clone() }).is_err());
        assert!(resistor_grid(&GridSpec { param_edges: vec![(1, 2), (2, 1)], ..base.clone() }).is_err());
        assert!(resistor_grid(&base).is_ok());
    }

    #[test]
    fn netlist_parse_and_floating_node() {
        let text = "# divider\nGROUND 0\nR 1 0 2.0 1\nR 1 2 1.0\nR 2 0 1.0\nI 1 1.0\n";
        let net: Netlist = text.parse().unwrap();
        assert_eq!(net.param_count(), 1);
        let again: Netlist = net.to_string().parse().unwrap();
        assert_eq!(again, net);
        let c = net.compile().unwrap();
        // node 1 sees 2Ω ∥ 2Ω = 1Ω
        let sol = solve_dc_with_sens(&c.system, &[0.0], &c.input).unwrap();
        assert!((sol.x[0] - 1.0).abs() < 1e-14);

        let floating: Netlist = "GROUND 0\nR 1 0 1\nR 2 3 1\nI 2 1".parse().unwrap();
        assert!(matches!(floating.compile(), Err(Error::Parameter(_))));
        assert!("GROUND 0\nR 1 0".parse::<Netlist>().is_err());
        assert!("R 1 0 1".parse::<Netlist>().is_err());
        assert!("GROUND 0\nR 1 0 1 0".parse::<Netlist>().is_err());
        assert!("GROUND 0\nX 1 0 1".parse::<Netlist>().is_err());
    }

    #[test]
    fn dae_with_zero_mass_is_repeated_dc() {
        let spec = GridSpec {
            rows: 3,
            cols: 3,
            injections: vec![(1, 2.0)],
            param_edges: vec![(1, 2), (5, 6)],
            ground: 9,
        };
        let c = resistor_grid(&spec).unwrap();
        let xi = [0.3, -0.2];
        let dc = solve_dc_with_sens(&c.system, &xi, &c.input).unwrap();
        let input = c.input.clone();
        let traj = integrate_dae_with_sens(&c.system, &xi, |_| input.clone(), &[0.0, 0.1, 0.25, 0.3], None).unwrap();
        for k in 1..4 {
            assert!((&traj.states[k] - &dc.x).amax() < 1e-12);
            for i in 0..2 {
                assert!((&traj.sens[k][i] - &dc.sens[i]).amax() < 1e-12);
            }
        }
    }

    #[test]
    fn dae_rejects_bad_grid() {
        let sys = ParamLinearSystem::new(scalar(1.0), vec![scalar(1.0)], DMatrix::from_element(1, 1, 1.0))
            .unwrap()
            .with_mass(scalar(1.0), vec![CsrMatrix::zeros(1, 1)])
            .unwrap();
        let u = |_: f64| DVector::from_element(1, 1.0);
        assert!(integrate_dae_with_sens(&sys, &[0.0], u, &[0.0], None).is_err());
        assert!(integrate_dae_with_sens(&sys, &[0.0], u, &[0.0, 0.0], None).is_err());
        // E/h + A = 1/h - 1 - 1/h... singular when xi = -1 - 1/h
        let r = integrate_dae_with_sens(&sys, &[-2.0], u, &[0.0, 1.0], None);
        assert!(matches!(r, Err(Error::Factorization(m)) if m.contains("step 1")));
    }
}
