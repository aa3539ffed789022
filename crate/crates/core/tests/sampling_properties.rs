use gradfit::basis::DomainBox;
use gradfit::sampling::{self, rng_from_seed, MAXVOL_TOL};
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::Rng;
use rand_distr::StandardNormal;

fn gaussian_matrix(n: usize, r: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = rng_from_seed(seed);
    DMatrix::from_fn(n, r, |_, _| rng.sample::<f64, _>(StandardNormal))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn swaps_grow_volume_and_end_dominant(n in 4usize..60, r in 1usize..6, seed in 0u64..100_000) {
        prop_assume!(n >= r);
        let c = gaussian_matrix(n, r, seed);
        let sq = sampling::maxvol_square(&c, MAXVOL_TOL).unwrap();
        prop_assert!(sq.growth.iter().all(|&g| g > 1.0 + MAXVOL_TOL));
        prop_assert!(sq.coefficients.amax() <= 1.0 + MAXVOL_TOL + 1e-9);
        // the coefficient matrix is consistent with the final rows
        let fresh = sampling::dominance_matrix(&c, &sq.rows).unwrap();
        prop_assert!((fresh - &sq.coefficients).amax() < 1e-8);
        for (k, &row) in sq.rows.iter().enumerate() {
            prop_assert!((sq.coefficients[(row, k)] - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn rectangular_selection_is_distinct(n in 10usize..80, r in 1usize..5, extra in 0usize..6, seed in 0u64..100_000) {
        let target = (r + extra).min(n);
        let c = gaussian_matrix(n, r, seed);
        let rows = sampling::maxvol_select(&c, target, MAXVOL_TOL).unwrap();
        let mut sorted = rows.clone();
        sorted.sort_unstable();
        sorted.dedup();
        prop_assert_eq!(sorted.len(), target);
        prop_assert!(rows.iter().all(|&i| i < n));
    }

    #[test]
    fn lhs_stratifies_each_axis(n in 1usize..200, dim in 1usize..6, seed in 0u64..100_000) {
        let bx = DomainBox::new((0..dim).map(|d| -(d as f64)).collect(), (0..dim).map(|d| 1.0 + d as f64).collect()).unwrap();
        let ps = sampling::lhs(&bx, n, seed).unwrap();
        for d in 0..dim {
            let (lo, hi) = (bx.lower()[d], bx.upper()[d]);
            let mut seen = vec![false; n];
            for p in ps.points() {
                let cell = (((p[d] - lo) / (hi - lo)) * n as f64).floor().min(n as f64 - 1.0) as usize;
                prop_assert!(!seen[cell]);
                seen[cell] = true;
            }
        }
    }
}
