use std::collections::{BTreeMap, BTreeSet};
use std::ops::Range;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::q_squared;
use super::EvalError;
use crate::regression::{Algorithm, FittedModel};
use crate::tensor::DenseTensor;

/// One hyperparameter setting: `r` components and `λ` loadings per mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Candidate {
    pub r: usize,
    pub lambda: usize,
}

/// Full `1..=r_max × 1..=lambda_max` grid; estimators without a loading
/// count get `λ = 1` only.
pub fn candidate_grid(algo: Algorithm, r_max: usize, lambda_max: usize) -> Vec<Candidate> {
    let lmax = if algo.uses_lambda() { lambda_max } else { 1 };
    let mut out = Vec::new();
    for r in 1..=r_max {
        for lambda in 1..=lmax {
            out.push(Candidate { r, lambda });
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvCell {
    pub r: usize,
    pub lambda: usize,
    pub mean_q2: f64,
    pub fold_q2: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub algorithm: Algorithm,
    pub folds: usize,
    /// Evaluated cells sorted by `(r, λ)`; pruned cells are absent.
    pub cells: Vec<CvCell>,
    pub best: Candidate,
    pub best_q2: f64,
}

impl CvReport {
    pub fn cell(&self, r: usize, lambda: usize) -> Option<&CvCell> {
        self.cells.iter().find(|c| c.r == r && c.lambda == lambda)
    }
}

/// Contiguous blocks along mode 0; the first `n mod k` folds get one extra sample.
pub fn fold_ranges(n: usize, folds: usize) -> Result<Vec<Range<usize>>, EvalError> {
    if folds < 2 || n < folds {
        return Err(EvalError::TooFewSamples { samples: n, folds });
    }
    let (base, extra) = (n / folds, n % folds);
    let mut start = 0;
    Ok((0..folds)
        .map(|k| {
            let len = base + usize::from(k < extra);
            let r = start..start + len;
            start += len;
            r
        })
        .collect())
}

struct FoldData {
    x_train: DenseTensor,
    y_train: DenseTensor,
    x_val: DenseTensor,
    y_val: DenseTensor,
}

fn split(x: &DenseTensor, y: &DenseTensor, val: &Range<usize>) -> Result<FoldData, EvalError> {
    let n = x.dims()[0];
    let train: Vec<usize> = (0..n).filter(|i| !val.contains(i)).collect();
    let val: Vec<usize> = val.clone().collect();
    Ok(FoldData {
        x_train: x.select_mode1(&train)?,
        y_train: y.select_mode1(&train)?,
        x_val: x.select_mode1(&val)?,
        y_val: y.select_mode1(&val)?,
    })
}

/// Largest component count the estimator accepts on `x`.
fn component_cap(algo: Algorithm, x: &DenseTensor) -> usize {
    match algo {
        Algorithm::Pls => x.dims()[0].min(x.numel() / x.dims()[0]),
        _ => usize::MAX,
    }
}

/// k-fold cross-validation of `candidates`.
///
/// For each `R`, `λ` is scanned upwards and the scan stops after the first
/// `λ` whose mean Q² falls below the previous one. Each (fold, λ) pair is fit
/// once at the largest still-active `R`; smaller `R` reuse its leading
/// components, which is exact because extraction is sequential.
pub fn kfold_cv(
    x: &DenseTensor,
    y: &DenseTensor,
    folds: usize,
    candidates: &[Candidate],
    algo: Algorithm,
    center: bool,
) -> Result<CvReport, EvalError> {
    if candidates.is_empty() {
        return Err(EvalError::InvalidSpec("no candidates".into()));
    }
    if x.dims()[0] != y.dims()[0] {
        return Err(EvalError::Shape(format!(
            "sample counts differ: {} vs {}",
            x.dims()[0],
            y.dims()[0]
        )));
    }
    let ranges = fold_ranges(x.dims()[0], folds)?;
    let data: Vec<FoldData> = ranges.iter().map(|r| split(x, y, r)).collect::<Result<_, _>>()?;

    let mut by_lambda: BTreeMap<usize, BTreeSet<usize>> = BTreeMap::new();
    for c in candidates {
        if c.r == 0 || c.lambda == 0 {
            return Err(EvalError::InvalidSpec(format!("invalid candidate {c:?}")));
        }
        let lambda = if algo.uses_lambda() { c.lambda } else { 1 };
        by_lambda.entry(lambda).or_default().insert(c.r);
    }

    let mut cells: Vec<CvCell> = Vec::new();
    let mut last_q2: BTreeMap<usize, f64> = BTreeMap::new();
    let mut pruned: BTreeSet<usize> = BTreeSet::new();
    for (&lambda, rs) in &by_lambda {
        let active: Vec<usize> = rs.iter().copied().filter(|r| !pruned.contains(r)).collect();
        let Some(&r_top) = active.last() else {
            continue;
        };
        let per_fold: Vec<Vec<f64>> = data
            .par_iter()
            .map(|fd| -> Result<Vec<f64>, EvalError> {
                let r_fit = r_top.min(component_cap(algo, &fd.x_train));
                let model = FittedModel::fit(algo, &fd.x_train, &fd.y_train, r_fit, lambda, center)?;
                active
                    .iter()
                    .map(|&r| {
                        let pred = model.truncated(r).predict(&fd.x_val)?;
                        q_squared(&fd.y_val, &pred)
                    })
                    .collect()
            })
            .collect::<Result<_, _>>()?;
        for (i, &r) in active.iter().enumerate() {
            let fold_q2: Vec<f64> = per_fold.iter().map(|f| f[i]).collect();
            let mean_q2 = fold_q2.iter().sum::<f64>() / fold_q2.len() as f64;
            if let Some(&prev) = last_q2.get(&r) {
                if mean_q2 < prev {
                    pruned.insert(r);
                }
            }
            last_q2.insert(r, mean_q2);
            cells.push(CvCell {
                r,
                lambda,
                mean_q2,
                fold_q2,
            });
        }
    }

    cells.sort_by_key(|c| (c.r, c.lambda));
    let mut best = &cells[0];
    for c in &cells[1..] {
        if c.mean_q2 > best.mean_q2 {
            best = c;
        }
    }
    Ok(CvReport {
        algorithm: algo,
        folds,
        best: Candidate {
            r: best.r,
            lambda: best.lambda,
        },
        best_q2: best.mean_q2,
        cells,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn folds_cover_every_sample_once() {
        for n in 5..23 {
            for k in 2..=5.min(n) {
                let r = fold_ranges(n, k).unwrap();
                assert_eq!(r.len(), k);
                assert_eq!(r[0].start, 0);
                assert_eq!(r.last().unwrap().end, n);
                for w in r.windows(2) {
                    assert_eq!(w[0].end, w[1].start);
                    assert!(w[0].len() >= w[1].len());
                }
            }
        }
        assert!(matches!(fold_ranges(3, 5), Err(EvalError::TooFewSamples { .. })));
        assert!(fold_ranges(10, 1).is_err());
    }

    #[test]
    fn grid_shapes() {
        assert_eq!(candidate_grid(Algorithm::Hopls, 3, 4).len(), 12);
        assert_eq!(candidate_grid(Algorithm::Pls, 3, 4).len(), 3);
        assert_eq!(candidate_grid(Algorithm::Npls, 1, 1), vec![Candidate { r: 1, lambda: 1 }]);
    }
}
