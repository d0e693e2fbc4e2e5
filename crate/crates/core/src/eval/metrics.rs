use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::tensor::DenseTensor;

/// Prediction quality of one response tensor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub q2: f64,
    pub rmsep: f64,
    /// Pearson correlation per column of the mode-0 unfolding.
    pub corr_per_column: Vec<f64>,
}

impl Metrics {
    pub fn compute(y_true: &DenseTensor, y_pred: &DenseTensor) -> Result<Self, EvalError> {
        Ok(Metrics {
            q2: q_squared(y_true, y_pred)?,
            rmsep: rmsep(y_true, y_pred)?,
            corr_per_column: corr_per_column(y_true, y_pred)?,
        })
    }
}

fn check_shapes(a: &DenseTensor, b: &DenseTensor) -> Result<(), EvalError> {
    if a.dims() != b.dims() {
        return Err(EvalError::Shape(format!(
            "truth has shape {:?}, prediction {:?}",
            a.dims(),
            b.dims()
        )));
    }
    Ok(())
}

fn sq_error(y_true: &DenseTensor, y_pred: &DenseTensor) -> f64 {
    y_true
        .data()
        .iter()
        .zip(y_pred.data())
        .map(|(a, b)| (a - b) * (a - b))
        .sum()
}

/// `1 − ‖Y − Ŷ‖² / ‖Y‖²` on the tensors as given (no centering).
pub fn q_squared(y_true: &DenseTensor, y_pred: &DenseTensor) -> Result<f64, EvalError> {
    check_shapes(y_true, y_pred)?;
    let denom = y_true.fro_norm_sq();
    if denom == 0.0 {
        return Err(EvalError::ZeroTruth);
    }
    Ok(1.0 - sq_error(y_true, y_pred) / denom)
}

/// Root of the mean squared elementwise error.
pub fn rmsep(y_true: &DenseTensor, y_pred: &DenseTensor) -> Result<f64, EvalError> {
    check_shapes(y_true, y_pred)?;
    Ok((sq_error(y_true, y_pred) / y_true.numel() as f64).sqrt())
}

/// Per-column Pearson correlation of the mode-0 unfoldings. A column with
/// zero variance on either side gets 0.
pub fn corr_per_column(y_true: &DenseTensor, y_pred: &DenseTensor) -> Result<Vec<f64>, EvalError> {
    check_shapes(y_true, y_pred)?;
    let a = y_true.matricize(0)?;
    let b = y_pred.matricize(0)?;
    let n = a.nrows() as f64;
    Ok(a.columns()
        .into_iter()
        .zip(b.columns())
        .map(|(ca, cb)| {
            let ma = ca.sum() / n;
            let mb = cb.sum() / n;
            let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
            for (x, y) in ca.iter().zip(cb.iter()) {
                let (dx, dy) = (x - ma, y - mb);
                sab += dx * dy;
                saa += dx * dx;
                sbb += dy * dy;
            }
            if saa == 0.0 || sbb == 0.0 {
                0.0
            } else {
                (sab / (saa.sqrt() * sbb.sqrt())).clamp(-1.0, 1.0)
            }
        })
        .collect())
}

/// Q² of each column of the mode-0 unfoldings; `None` where the true
/// column is all zero.
pub fn q_squared_per_column(y_true: &DenseTensor, y_pred: &DenseTensor) -> Result<Vec<Option<f64>>, EvalError> {
    check_shapes(y_true, y_pred)?;
    let a = y_true.matricize(0)?;
    let b = y_pred.matricize(0)?;
    Ok(a.columns()
        .into_iter()
        .zip(b.columns())
        .map(|(ca, cb)| {
            let denom = ca.dot(&ca);
            let err: f64 = ca.iter().zip(cb.iter()).map(|(x, y)| (x - y) * (x - y)).sum();
            (denom > 0.0).then(|| 1.0 - err / denom)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(dims: &[usize], data: &[f64]) -> DenseTensor {
        DenseTensor::from_vec(dims, data.to_vec()).unwrap()
    }

    #[test]
    fn q2_examples() {
        let y = t(&[2], &[1., 1.]);
        assert_eq!(q_squared(&y, &y).unwrap(), 1.0);
        assert_eq!(q_squared(&y, &t(&[2], &[0., 0.])).unwrap(), 0.0);
        assert_eq!(q_squared(&y, &t(&[2], &[1., 0.])).unwrap(), 0.5);
        assert_eq!(q_squared(&t(&[2], &[0., 0.]), &y), Err(EvalError::ZeroTruth));
    }

    #[test]
    fn per_column_q2() {
        let y = t(&[2, 2], &[1., 0., 1., 0.]);
        let p = t(&[2, 2], &[1., 3., 0., 0.]);
        assert_eq!(q_squared_per_column(&y, &p).unwrap(), vec![Some(0.5), None]);
    }

    #[test]
    fn rmsep_examples() {
        let z = t(&[2], &[0., 0.]);
        let p = t(&[2], &[3., 4.]);
        assert_eq!(rmsep(&p, &p).unwrap(), 0.0);
        assert!((rmsep(&z, &p).unwrap() - (25.0f64 / 2.0).sqrt()).abs() < 1e-15);
        assert!(matches!(rmsep(&z, &t(&[1, 2], &[0., 0.])), Err(EvalError::Shape(_))));
    }

    #[test]
    fn correlation_signs_and_degenerate_columns() {
        let a = t(&[3, 2], &[1., 5., 2., 5., 3., 5.]);
        let b = t(&[3, 2], &[-2., 1., -4., 2., -6., 3.]);
        let c = corr_per_column(&a, &b).unwrap();
        assert!((c[0] + 1.0).abs() < 1e-15);
        assert_eq!(c[1], 0.0);
    }
}
