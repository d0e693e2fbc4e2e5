use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::cv::{candidate_grid, kfold_cv, Candidate};
use super::metrics::q_squared;
use super::synth::{generate, SynthSpec};
use super::EvalError;
use crate::regression::{Algorithm, FittedModel};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchSettings {
    pub folds: usize,
    pub r_max: usize,
    pub lambda_max: usize,
    pub center: bool,
    /// Estimators to compare; `hopls` is swapped for `hopls2` on matrix responses.
    pub methods: Vec<Algorithm>,
}

impl Default for BenchSettings {
    fn default() -> Self {
        BenchSettings {
            folds: 5,
            r_max: 10,
            lambda_max: 10,
            center: true,
            methods: vec![Algorithm::Hopls, Algorithm::Npls, Algorithm::Pls],
        }
    }
}

/// Outcome of one method on one repeat.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub repeat: usize,
    pub seed: u64,
    pub method: Algorithm,
    pub selected: Candidate,
    pub cv_q2: f64,
    pub q2: f64,
}

/// Seed used for repeat `k` of a run seeded with `base`.
pub fn repeat_seed(base: u64, k: usize) -> u64 {
    base.wrapping_add(k as u64)
}

/// Cross-validates on the calibration set, refits the selected setting on
/// all of it and scores the validation set, for every method and repeat.
/// Rows are ordered by `(repeat, method)` regardless of scheduling.
pub fn benchmark_case(spec: &SynthSpec, repeats: usize, settings: &BenchSettings) -> Result<Vec<BenchRow>, EvalError> {
    if repeats == 0 {
        return Err(EvalError::InvalidSpec("repeats must be at least 1".into()));
    }
    spec.validate()?;
    let per_repeat: Vec<Vec<BenchRow>> = (0..repeats)
        .into_par_iter()
        .map(|k| run_repeat(spec, k, settings))
        .collect::<Result<_, _>>()?;
    Ok(per_repeat.into_iter().flatten().collect())
}

fn run_repeat(spec: &SynthSpec, k: usize, settings: &BenchSettings) -> Result<Vec<BenchRow>, EvalError> {
    let seed = repeat_seed(spec.seed, k);
    let spec_k = SynthSpec {
        seed,
        noise_seed: repeat_seed(spec.noise_seed, k),
        ..spec.clone()
    };
    let data = generate(&spec_k)?;
    let cal = &data.calibration;
    let val = &data.validation;
    settings
        .methods
        .iter()
        .map(|&m| {
            let method = if m == Algorithm::Hopls && cal.y.order() == 2 { Algorithm::Hopls2 } else { m };
            let grid = candidate_grid(method, settings.r_max, settings.lambda_max);
            let cv = kfold_cv(&cal.x, &cal.y, settings.folds, &grid, method, settings.center)?;
            let model = FittedModel::fit(method, &cal.x, &cal.y, cv.best.r, cv.best.lambda, settings.center)?;
            let q2 = q_squared(&val.y, &model.predict(&val.x)?)?;
            Ok(BenchRow {
                repeat: k,
                seed,
                method,
                selected: cv.best,
                cv_q2: cv.best_q2,
                q2,
            })
        })
        .collect()
}

/// Five-number summary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

impl Summary {
    /// Linear-interpolation quantiles. `None` on empty input.
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        let q = |p: f64| {
            let pos = p * (v.len() - 1) as f64;
            let lo = pos.floor() as usize;
            let hi = pos.ceil() as usize;
            v[lo] + (v[hi] - v[lo]) * (pos - lo as f64)
        };
        Some(Summary {
            min: v[0],
            q1: q(0.25),
            median: q(0.5),
            q3: q(0.75),
            max: v[v.len() - 1],
        })
    }
}

pub fn median(values: &[f64]) -> Option<f64> {
    Summary::of(values).map(|s| s.median)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn summary_quantiles() {
        let s = Summary::of(&[4.0, 1.0, 3.0, 2.0, 5.0]).unwrap();
        assert_eq!((s.min, s.q1, s.median, s.q3, s.max), (1.0, 2.0, 3.0, 4.0, 5.0));
        assert_eq!(median(&[1.0, 2.0]), Some(1.5));
        assert_eq!(median(&[]), None);
    }
}
