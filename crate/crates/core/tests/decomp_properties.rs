mod common;

use common::*;
use hopls::decomp::{hooi, hosvd, truncated_svd, HooiSettings, MlRank};
use hopls::{DenseTensor, Matrix};
use proptest::prelude::*;

/// Eigenvalues of a symmetric matrix by cyclic two-sided Jacobi rotations,
/// sorted descending.
fn symmetric_eigenvalues(a: &Matrix) -> Vec<f64> {
    let n = a.nrows();
    let mut a = a.clone();
    for _ in 0..100 {
        let off: f64 = (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j))).map(|(i, j)| a[[i, j]].powi(2)).sum();
        let diag: f64 = (0..n).map(|i| a[[i, i]].powi(2)).sum();
        if off <= 1e-30 * diag.max(1e-300) {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[[p, q]] == 0.0 {
                    continue;
                }
                let theta = (a[[q, q]] - a[[p, p]]) / (2.0 * a[[p, q]]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[[k, p]], a[[k, q]]);
                    a[[k, p]] = c * akp - s * akq;
                    a[[k, q]] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[[p, k]], a[[q, k]]);
                    a[[p, k]] = c * apk - s * aqk;
                    a[[q, k]] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut ev: Vec<f64> = (0..n).map(|i| a[[i, i]]).collect();
    ev.sort_by(|x, y| y.total_cmp(x));
    ev
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn singular_values_match_gram_eigenvalues(rows in 1usize..=20, cols in 1usize..=20, seed: u64) {
        let m = gaussian_matrix(&mut rng(seed), rows, cols);
        let k = rows.min(cols);
        let svd = truncated_svd(&m, k).unwrap();
        let gram = if rows >= cols { m.t().dot(&m) } else { m.dot(&m.t()) };
        let ev = symmetric_eigenvalues(&gram);
        let smax = svd.s[0];
        for (i, &s) in svd.s.iter().enumerate() {
            let oracle = ev[i].max(0.0).sqrt();
            prop_assert!((s - oracle).abs() <= 1e-8 * smax, "sigma_{} = {} vs {}", i, s, oracle);
        }
        prop_assert!(orthonormality_error(&svd.u) <= 1e-10);
        prop_assert!(orthonormality_error(&svd.v) <= 1e-10);
    }

    #[test]
    fn hooi_properties(dims in prop::collection::vec(2usize..=5, 3..=4), seed: u64, rank_seed: u64) {
        let t = gaussian_tensor(&mut rng(seed), &dims);
        let ranks: Vec<usize> = dims.iter().enumerate().map(|(k, &d)| 1 + ((rank_seed >> (4 * k)) as usize) % d).collect();
        let out = hooi(&t, &MlRank::new(ranks.clone()), &HooiSettings::default()).unwrap();

        for w in out.core_norm_history.windows(2) {
            prop_assert!(w[1] >= w[0] - 1e-12, "core norm decreased: {:?}", out.core_norm_history);
        }
        for f in &out.tucker.factors {
            prop_assert!(orthonormality_error(f) <= 1e-10);
        }
        prop_assert_eq!(out.tucker.core.dims(), &ranks[..]);

        // Pythagoras for orthonormal factors
        let approx = out.tucker.reconstruct().unwrap();
        let resid = t.sub(&approx).unwrap().fro_norm_sq();
        let total = t.fro_norm_sq();
        prop_assert!((resid + out.tucker.core.fro_norm_sq() - total).abs() <= 1e-8 * total);

        let again = hooi(&t, &MlRank::new(ranks), &HooiSettings::default()).unwrap();
        prop_assert_eq!(again, out);
    }

    #[test]
    fn full_rank_hosvd_reconstructs(dims in prop::collection::vec(1usize..=5, 2..=4), seed: u64) {
        let t = gaussian_tensor(&mut rng(seed), &dims);
        let tf = hosvd(&t, &MlRank::full(t.shape())).unwrap();
        let back = tf.reconstruct().unwrap();
        prop_assert!(rel_diff(back.data(), t.data()) <= 1e-10);
    }
}

#[test]
fn hooi_beats_random_subspaces() {
    // Monte-Carlo check: no random orthonormal subspace captures more energy
    let mut g = rng(99);
    let t = gaussian_tensor(&mut g, &[5, 4, 4]);
    let rank = MlRank::new(vec![2, 2, 2]);
    let best = hooi(&t, &rank, &HooiSettings::default()).unwrap().tucker.core.fro_norm_sq();
    for _ in 0..200 {
        let f: Vec<Matrix> = t.dims().iter().map(|&d| orthonormal(&mut g, d, 2)).collect();
        let refs: Vec<Option<&Matrix>> = f.iter().map(Some).collect();
        let energy = t.project(&refs).unwrap().fro_norm_sq();
        assert!(energy <= best + 1e-12);
    }
}

#[test]
fn hosvd_of_exact_low_rank_tucker_is_exact() {
    let mut g = rng(5);
    let core = gaussian_tensor(&mut g, &[2, 3, 2]);
    let factors = vec![orthonormal(&mut g, 6, 2), orthonormal(&mut g, 5, 3), orthonormal(&mut g, 4, 2)];
    let t = DenseTensor::tucker_product(&core, &factors).unwrap();
    let tf = hosvd(&t, &MlRank::new(vec![2, 3, 2])).unwrap();
    assert!(rel_diff(tf.reconstruct().unwrap().data(), t.data()) <= 1e-12);
    assert!((tf.core.fro_norm_sq() - core.fro_norm_sq()).abs() <= 1e-10 * core.fro_norm_sq());
}
