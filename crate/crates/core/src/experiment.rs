//! Accuracy of value-only versus gradient-enhanced fits as the basis grows.
//!
//! Points are selected once, against the largest basis, and shared by every
//! basis size and both variants, so the two error columns differ only in the
//! presence of derivative rows.

use std::io::Write;

use rayon::prelude::*;

use crate::basis::{DomainBox, TensorBasis};
use crate::error::{Error, Result};
use crate::gels::{self, FitConfig, GradFn, ValueFn};
use crate::indexset::MultiIndexSet;

#[derive(Debug, Clone)]
pub struct CompareConfig {
    /// Largest basis; swept sizes are prefixes of its index set.
    pub fit: FitConfig,
    /// Basis sizes `M`, each at most the size of the full basis.
    pub sizes: Vec<usize>,
    pub test_points: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompareRow {
    pub basis_size: usize,
    pub err_with: f64,
    pub err_without: f64,
    pub rank_with: usize,
    pub rank_without: usize,
}

/// Prefix lengths at which a total-degree level is complete.
pub fn degree_levels(set: &MultiIndexSet) -> Vec<usize> {
    let idx = set.indices();
    (0..idx.len())
        .filter(|&k| k + 1 == idx.len() || idx[k + 1].total_degree() > idx[k].total_degree())
        .map(|k| k + 1)
        .collect()
}

/// `per_dim^l` points on a regular grid including the box corners.
pub fn regular_grid(bx: &DomainBox, per_dim: usize) -> Result<Vec<Vec<f64>>> {
    if per_dim < 2 {
        return Err(Error::param("regular grid needs at least 2 points per dimension"));
    }
    let l = bx.dim();
    let total = per_dim
        .checked_pow(l as u32)
        .filter(|&t| t <= 10_000_000)
        .ok_or_else(|| Error::param("regular grid too large"))?;
    Ok((0..total)
        .map(|mut k| {
            (0..l)
                .map(|d| {
                    let i = k % per_dim;
                    k /= per_dim;
                    let (lo, hi) = (bx.lower()[d], bx.upper()[d]);
                    lo + (hi - lo) * i as f64 / (per_dim - 1) as f64
                })
                .collect()
        })
        .collect())
}

pub fn compare(f: ValueFn<'_>, grad: GradFn<'_>, cfg: &CompareConfig) -> Result<Vec<CompareRow>> {
    let full = &cfg.fit.basis;
    if cfg.sizes.is_empty() {
        return Err(Error::param("no basis sizes to sweep"));
    }
    if let Some(&bad) = cfg.sizes.iter().find(|&&s| s == 0 || s > full.len()) {
        return Err(Error::param(format!(
            "basis size {bad} outside 1..={}",
            full.len()
        )));
    }
    if cfg.test_points.is_empty() {
        return Err(Error::param("no test points"));
    }
    let points = gels::select_points(&cfg.fit)?;
    let samples = gels::evaluate(points, f, Some(grad))?;
    let plain = samples.without_derivatives();
    let reference: Vec<f64> = cfg.test_points.par_iter().map(|x| f(x)).collect::<Result<_>>()?;

    cfg.sizes
        .par_iter()
        .map(|&size| {
            let set = full.index_set().prefix(size)?;
            let basis = TensorBasis::new(full.family(), set, full.map().clone())?;
            let with = gels::fit_samples(&basis, &samples, cfg.fit.rank_tol)?;
            let without = gels::fit_samples(&basis, &plain, cfg.fit.rank_tol)?;
            Ok(CompareRow {
                basis_size: size,
                err_with: test_error(&with, &reference, &cfg.test_points)?,
                err_without: test_error(&without, &reference, &cfg.test_points)?,
                rank_with: with.report().map_or(0, |r| r.rank),
                rank_without: without.report().map_or(0, |r| r.rank),
            })
        })
        .collect()
}

fn test_error(s: &gels::Surrogate, reference: &[f64], points: &[Vec<f64>]) -> Result<f64> {
    let mut num = 0.0;
    let mut den = 0.0;
    for (x, &fx) in points.iter().zip(reference) {
        let d = fx - s.eval(x)?;
        num += d * d;
        den += fx * fx;
    }
    if den == 0.0 {
        return Err(Error::Degeneracy("reference function vanishes on the test set".into()));
    }
    Ok((num / den).sqrt())
}

pub fn write_compare_csv<W: Write>(mut w: W, rows: &[CompareRow]) -> Result<()> {
    writeln!(w, "M,err_with,err_without,rank_with,rank_without")?;
    for r in rows {
        writeln!(
            w,
            "{},{:.17e},{:.17e},{},{}",
            r.basis_size, r.err_with, r.err_without, r.rank_with, r.rank_without
        )?;
    }
    Ok(())
}
