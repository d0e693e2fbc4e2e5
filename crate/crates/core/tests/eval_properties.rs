mod common;

use common::*;
use hopls::decomp::pinv;
use hopls::eval::{
    benchmark_case, candidate_grid, gen_hopls_model, generate, kfold_cv, q_squared, rmsep, BenchSettings, SynthSpec,
};
use hopls::{Algorithm, DenseTensor};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn q2_and_rmsep_rank_predictions_alike(n in 1usize..=6, m in 1usize..=4, seed: u64) {
        let mut g = rng(seed);
        let y = gaussian_tensor(&mut g, &[n, m]);
        let a = gaussian_tensor(&mut g, &[n, m]);
        let b = gaussian_tensor(&mut g, &[n, m]);
        let (qa, qb) = (q_squared(&y, &a).unwrap(), q_squared(&y, &b).unwrap());
        let (ra, rb) = (rmsep(&y, &a).unwrap(), rmsep(&y, &b).unwrap());
        prop_assert_eq!(ra < rb, qa > qb);
    }

    #[test]
    fn requested_snr_is_realized(case_ix in 0usize..6, snr in -10.0f64..20.0, seed: u64) {
        let case = ["1m", "2m", "3m", "1t", "2t", "mr"][case_ix];
        let pair = generate(&SynthSpec::preset(case, snr, seed).unwrap()).unwrap();
        for set in [&pair.calibration, &pair.validation] {
            let (sx, sy) = set.realized_snr();
            prop_assert!((sx - snr).abs() <= 0.01 && (sy - snr).abs() <= 0.01, "{} {} {}", case, sx, sy);
        }
    }
}

#[test]
fn validation_reuses_the_calibration_loadings() {
    let pair = generate(&SynthSpec::preset("2m", 5.0, 77).unwrap()).unwrap();
    let p = &pair.structure[0];
    // projector onto span(P) built from an independent pseudoinverse
    let proj = p.dot(&pinv(p).unwrap());
    for set in [&pair.calibration, &pair.validation] {
        let x1 = set.clean_x.matricize(0).unwrap();
        let resid = &x1 - &x1.dot(&proj.t());
        assert!(frob(&resid) <= 1e-10 * frob(&x1));
    }
    assert_ne!(pair.calibration.clean_x, pair.validation.clean_x);

    let again = generate(&SynthSpec::preset("2m", 5.0, 77).unwrap()).unwrap();
    assert_eq!(again, pair);
}

#[test]
fn cv_is_deterministic_and_finds_noiseless_structure() {
    let data = gen_hopls_model(&[20, 6, 6], &[20, 5, 5], 2, 2, 4).unwrap();
    let cal = &data.calibration;
    let grid = candidate_grid(Algorithm::Hopls, 3, 3);
    let a = kfold_cv(&cal.x, &cal.y, 5, &grid, Algorithm::Hopls, false).unwrap();
    let b = kfold_cv(&cal.x, &cal.y, 5, &grid, Algorithm::Hopls, false).unwrap();
    assert_eq!(a, b);
    assert!(a.best_q2 >= 0.99, "best {:?} q2 {}", a.best, a.best_q2);
    assert!(a.cells.len() <= 9);
}

#[test]
fn single_cell_grid() {
    let mut g = rng(2);
    let x = gaussian_tensor(&mut g, &[10, 3, 3]);
    let y = gaussian_tensor(&mut g, &[10, 2]);
    let r = kfold_cv(&x, &y, 5, &candidate_grid(Algorithm::Hopls2, 1, 1), Algorithm::Hopls2, true).unwrap();
    assert_eq!(r.cells.len(), 1);
    assert_eq!((r.best.r, r.best.lambda), (1, 1));
    assert_eq!(r.cells[0].fold_q2.len(), 5);
}

#[test]
fn benchmark_rows_are_reproducible() {
    let spec = SynthSpec::preset("2t", 0.0, 5).unwrap();
    let settings = BenchSettings {
        r_max: 3,
        lambda_max: 3,
        ..BenchSettings::default()
    };
    let a = benchmark_case(&spec, 2, &settings).unwrap();
    let b = benchmark_case(&spec, 2, &settings).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.len(), 2 * settings.methods.len());
    let keys: Vec<(usize, Algorithm)> = a.iter().map(|r| (r.repeat, r.method)).collect();
    assert_eq!(
        keys,
        vec![
            (0, Algorithm::Hopls),
            (0, Algorithm::Npls),
            (0, Algorithm::Pls),
            (1, Algorithm::Hopls),
            (1, Algorithm::Npls),
            (1, Algorithm::Pls)
        ]
    );
}

#[test]
fn exact_model_recovery_without_noise() {
    let data = gen_hopls_model(&[20, 10, 10], &[20, 10, 10], 5, 2, 1).unwrap();
    let cfg = hopls::FitConfig::with_lambda(5, 2, &[20, 10, 10], &[20, 10, 10]);
    let m = hopls::fit_hopls(&data.calibration.x, &data.calibration.y, &cfg).unwrap();
    let pred: DenseTensor = m.predict(&data.validation.x).unwrap();
    assert!(q_squared(&data.validation.y, &pred).unwrap() >= 0.99);
}

#[test]
fn noise_free_benchmark_is_nearly_perfect() {
    let spec = SynthSpec::preset("2m", f64::INFINITY, 3).unwrap();
    let rows = benchmark_case(&spec, 1, &BenchSettings::default()).unwrap();
    assert_eq!(rows.len(), 3);
    for r in rows.iter().filter(|r| r.method != Algorithm::Npls) {
        assert!(r.q2 >= 0.95, "{r:?}");
    }
    // Rank-one Y loadings cannot span generic 10×10 loading matrices with at
    // most 10 components, so N-PLS is capped well below the other two here.
    let npls = rows.iter().find(|r| r.method == Algorithm::Npls).unwrap();
    assert!(npls.q2.is_finite() && npls.q2 < 0.95, "{npls:?}");
}
