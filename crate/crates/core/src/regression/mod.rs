//! Latent-variable regression estimators.
//!
//! * [`fit_hopls`]: tensor predictors, tensor responses (sum of
//!   rank-`(1, L_2, …, L_N)` / `(1, K_2, …, K_M)` Tucker blocks).
//! * [`fit_hopls2`]: tensor predictors, matrix responses.
//! * [`fit_pls_nipals`]: two-way PLS on matrices, used on mode-0
//!   unfoldings as the unfolded baseline.
//!
//! N-PLS is obtained as the `λ = 1` configuration of the HOPLS estimators,
//! where every block collapses to an outer product of vectors.

mod hopls;
mod hopls2;
mod pls;

pub use hopls::{fit_hopls, HoplsComponent, HoplsModel};
pub use hopls2::{fit_hopls2, Hopls2Component, Hopls2Model};
pub use pls::{fit_pls_nipals, fit_pls_tensor, fit_pls_with, PlsComponent, PlsConfig, PlsModel};

use ndarray::Array2;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::decomp::{thin_svd, DecompError};
use crate::tensor::{DenseTensor, Matrix, Shape, TensorError, Vector};

/// Residual threshold relative to the initial residual norm, used when
/// [`FitConfig::epsilon`] is unset.
pub const DEFAULT_RELATIVE_EPSILON: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RegressionError {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("no shared variance between predictors and responses")]
    NoSharedVariance,
    #[error("response is identically zero")]
    ZeroResponse,
    #[error(transparent)]
    Tensor(#[from] TensorError),
    #[error(transparent)]
    Decomp(#[from] DecompError),
}

/// Why component extraction ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopReason {
    /// All requested components were extracted.
    Completed,
    /// A residual norm fell to or below its threshold.
    ResidualBelowThreshold,
    /// The cross-covariance of the residuals vanished.
    NoSharedVariance,
    /// A component had no well-defined latent direction.
    DegenerateComponent,
}

/// Hyperparameters shared by the HOPLS estimators.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    /// Number of latent vectors `R`.
    pub n_components: usize,
    /// Loading counts `L_2, …, L_N` for the non-sample modes of X.
    pub x_ranks: Vec<usize>,
    /// Loading counts `K_2, …, K_M` for the non-sample modes of Y; unused
    /// for matrix responses.
    pub y_ranks: Vec<usize>,
    /// Absolute residual-norm threshold; `None` means
    /// [`DEFAULT_RELATIVE_EPSILON`] times each initial residual norm.
    pub epsilon: Option<f64>,
    /// Mode-0 mean-centering of X and Y.
    pub center: bool,
}

impl FitConfig {
    pub fn new(n_components: usize, x_ranks: Vec<usize>, y_ranks: Vec<usize>) -> Self {
        FitConfig {
            n_components,
            x_ranks,
            y_ranks,
            epsilon: None,
            center: true,
        }
    }

    /// `L_n = K_m = λ` on every non-sample mode, clamped to the mode size.
    pub fn with_lambda(n_components: usize, lambda: usize, x_dims: &[usize], y_dims: &[usize]) -> Self {
        let clamp = |dims: &[usize]| -> Vec<usize> {
            dims.iter().skip(1).map(|&d| lambda.min(d)).collect()
        };
        let y_ranks = if y_dims.len() > 2 { clamp(y_dims) } else { Vec::new() };
        FitConfig::new(n_components, clamp(x_dims), y_ranks)
    }

    /// `L_n = η·rank_n(X)`, `K_m = η·rank_m(Y)` (rounded up, at least 1),
    /// where `rank_n` is the numerical rank of the mode-`n` unfolding.
    pub fn with_eta(
        n_components: usize,
        eta: f64,
        x: &DenseTensor,
        y: &DenseTensor,
    ) -> Result<Self, RegressionError> {
        if !(eta > 0.0 && eta <= 1.0) {
            return Err(RegressionError::Config(format!("eta must lie in (0, 1], got {eta}")));
        }
        let ranks = |t: &DenseTensor| -> Result<Vec<usize>, RegressionError> {
            (1..t.order())
                .map(|mode| {
                    let r = numerical_rank(&t.matricize(mode)?)?;
                    Ok(((eta * r as f64).ceil() as usize).clamp(1, t.dims()[mode]))
                })
                .collect()
        };
        let y_ranks = if y.order() > 2 { ranks(y)? } else { Vec::new() };
        Ok(FitConfig::new(n_components, ranks(x)?, y_ranks))
    }

    pub fn without_centering(mut self) -> Self {
        self.center = false;
        self
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = Some(epsilon);
        self
    }

    fn validate_common(&self, x_dims: &[usize]) -> Result<(), RegressionError> {
        if self.n_components == 0 {
            return Err(RegressionError::Config("R must be at least 1".into()));
        }
        if let Some(e) = self.epsilon {
            if !(e >= 0.0) {
                return Err(RegressionError::Config(format!("epsilon must be >= 0, got {e}")));
            }
        }
        check_ranks("x", &self.x_ranks, x_dims)
    }

    /// Checks the configuration against tensor-X / tensor-Y shapes.
    pub fn validate_tensor(&self, x_dims: &[usize], y_dims: &[usize]) -> Result<(), RegressionError> {
        self.validate_common(x_dims)?;
        check_ranks("y", &self.y_ranks, y_dims)
    }

    /// Checks the configuration against tensor-X / matrix-Y shapes.
    pub fn validate_matrix(&self, x_dims: &[usize]) -> Result<(), RegressionError> {
        self.validate_common(x_dims)
    }
}

fn check_ranks(name: &str, ranks: &[usize], dims: &[usize]) -> Result<(), RegressionError> {
    if ranks.len() + 1 != dims.len() {
        return Err(RegressionError::Config(format!(
            "{name}: {} loading counts for an order-{} tensor",
            ranks.len(),
            dims.len()
        )));
    }
    for (k, (&r, &d)) in ranks.iter().zip(&dims[1..]).enumerate() {
        if r == 0 || r > d {
            return Err(RegressionError::Config(format!(
                "{name}: loading count {r} for mode {} of size {d}",
                k + 1
            )));
        }
    }
    Ok(())
}

fn numerical_rank(m: &Matrix) -> Result<usize, RegressionError> {
    let s = thin_svd(m)?.s;
    let smax = s.iter().copied().fold(0.0, f64::max);
    let tol = smax * f64::EPSILON * m.nrows().max(m.ncols()) as f64;
    Ok(s.iter().filter(|&&v| v > tol).count().max(1))
}

/// Removes the mode-0 mean. Returns the centered tensor and the mean as a
/// tensor with first mode of size one.
pub fn center_mode1(t: &DenseTensor) -> (DenseTensor, DenseTensor) {
    let n = t.dims()[0];
    let stride = t.numel() / n;
    let mut mean = vec![0.0; stride];
    for row in t.data().chunks(stride) {
        mean.iter_mut().zip(row).for_each(|(m, v)| *m += v);
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);
    let mut centered = Vec::with_capacity(t.numel());
    for row in t.data().chunks(stride) {
        centered.extend(row.iter().zip(&mean).map(|(v, m)| v - m));
    }
    let mean_shape = t.shape().with_dim(0, 1).expect("valid mode");
    (
        DenseTensor::from_parts(t.shape().clone(), centered),
        DenseTensor::from_parts(mean_shape, mean),
    )
}

/// Adds a mode-0 mean field (first mode of size one) to every sample.
pub fn add_mean_mode1(t: &DenseTensor, mean: &DenseTensor) -> Result<DenseTensor, RegressionError> {
    let stride = mean.numel();
    if mean.dims()[0] != 1 || t.dims()[1..] != mean.dims()[1..] {
        return Err(RegressionError::Shape(format!(
            "mean field {:?} incompatible with tensor {:?}",
            mean.dims(),
            t.dims()
        )));
    }
    let mut data = Vec::with_capacity(t.numel());
    for row in t.data().chunks(stride) {
        data.extend(row.iter().zip(mean.data()).map(|(v, m)| v + m));
    }
    Ok(DenseTensor::from_parts(t.shape().clone(), data))
}

/// Subtracts a mode-0 mean field from every sample.
pub(crate) fn sub_mean_mode1(t: &DenseTensor, mean: &DenseTensor) -> Result<DenseTensor, RegressionError> {
    if mean.dims()[0] != 1 || t.dims()[1..] != mean.dims()[1..] {
        return Err(RegressionError::Shape(format!(
            "mean field {:?} incompatible with tensor {:?}",
            mean.dims(),
            t.dims()
        )));
    }
    let mut data = Vec::with_capacity(t.numel());
    for row in t.data().chunks(mean.numel()) {
        data.extend(row.iter().zip(mean.data()).map(|(v, m)| v - m));
    }
    Ok(DenseTensor::from_parts(t.shape().clone(), data))
}

/// Latent-score weights corrected for sequential deflation.
///
/// With `t_r = E_r w_r` and `E_{r+1} = E_r − t_r a_rᵀ`, the scores of new
/// data are `T = X W (I + U)⁻¹` where `U` is the strictly upper triangle of
/// `AᵀW`. Returns `W (I + U)⁻¹`.
pub(crate) fn deflation_adjusted_weights(w: &Matrix, a: &Matrix) -> Matrix {
    let r = w.ncols();
    let mut out = w.clone();
    for col in 1..r {
        for s in 0..col {
            let coupling = a.column(s).dot(&w.column(col));
            if coupling != 0.0 {
                let prev = out.column(s).to_owned();
                out.column_mut(col).scaled_add(-coupling, &prev);
            }
        }
    }
    out
}

/// Row vector of the mode-0 unfolding of `[[core; 1, factors…]]`, i.e.
/// `core_(1) (F_{N-1} ⊗ … ⊗ F_1)ᵀ`.
pub(crate) fn block_loading_row(core: &DenseTensor, factors: &[Matrix]) -> Result<Vector, RegressionError> {
    let mut all = Vec::with_capacity(factors.len() + 1);
    all.push(Array2::ones((1, 1)));
    all.extend(factors.iter().cloned());
    let block = DenseTensor::tucker_product(core, &all)?;
    Ok(block.matricize(0)?.row(0).to_owned())
}

pub(crate) fn column_matrix(v: &Vector) -> Matrix {
    v.view().insert_axis(ndarray::Axis(1)).to_owned()
}

pub(crate) fn stack_columns(cols: &[Vector], rows: usize) -> Matrix {
    let mut m = Array2::zeros((rows, cols.len()));
    for (j, c) in cols.iter().enumerate() {
        m.column_mut(j).assign(c);
    }
    m
}

/// Which estimator to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Hopls,
    Hopls2,
    Npls,
    Pls,
}

impl Algorithm {
    pub fn name(&self) -> &'static str {
        match self {
            Algorithm::Hopls => "hopls",
            Algorithm::Hopls2 => "hopls2",
            Algorithm::Npls => "npls",
            Algorithm::Pls => "pls",
        }
    }

    /// Whether the estimator has a loading-count hyperparameter.
    pub fn uses_lambda(&self) -> bool {
        matches!(self, Algorithm::Hopls | Algorithm::Hopls2)
    }
}

impl std::str::FromStr for Algorithm {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "hopls" => Ok(Algorithm::Hopls),
            "hopls2" => Ok(Algorithm::Hopls2),
            "npls" => Ok(Algorithm::Npls),
            "pls" => Ok(Algorithm::Pls),
            other => Err(format!("unknown algorithm '{other}'")),
        }
    }
}

impl std::fmt::Display for Algorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// A fitted model of any kind, predicting tensors from tensors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "algorithm", content = "model", rename_all = "lowercase")]
pub enum FittedModel {
    Hopls(HoplsModel),
    Hopls2(Hopls2Model),
    Pls(PlsModel),
}

impl FittedModel {
    /// Fits `algo` with `R = n_components` and `λ` loadings per mode (λ is
    /// ignored by PLS and forced to one for N-PLS). N-PLS dispatches on the
    /// response order.
    pub fn fit(
        algo: Algorithm,
        x: &DenseTensor,
        y: &DenseTensor,
        n_components: usize,
        lambda: usize,
        center: bool,
    ) -> Result<Self, RegressionError> {
        let with_center = |cfg: FitConfig| if center { cfg } else { cfg.without_centering() };
        match algo {
            Algorithm::Pls => {
                let cfg = PlsConfig {
                    center,
                    ..PlsConfig::new(n_components)
                };
                Ok(FittedModel::Pls(fit_pls_tensor(x, y, &cfg)?))
            }
            Algorithm::Hopls | Algorithm::Npls if y.order() >= 3 => {
                let lambda = if algo == Algorithm::Npls { 1 } else { lambda };
                let cfg = with_center(FitConfig::with_lambda(n_components, lambda, x.dims(), y.dims()));
                Ok(FittedModel::Hopls(fit_hopls(x, y, &cfg)?))
            }
            Algorithm::Hopls2 | Algorithm::Npls if y.order() == 2 => {
                let lambda = if algo == Algorithm::Npls { 1 } else { lambda };
                let cfg = with_center(FitConfig::with_lambda(n_components, lambda, x.dims(), y.dims()));
                let ym = y.matricize(0)?;
                Ok(FittedModel::Hopls2(fit_hopls2(x, &ym, &cfg)?))
            }
            _ => Err(RegressionError::Shape(format!(
                "{algo} cannot model an order-{} response",
                y.order()
            ))),
        }
    }

    pub fn fit_with_config(
        algo: Algorithm,
        x: &DenseTensor,
        y: &DenseTensor,
        cfg: &FitConfig,
    ) -> Result<Self, RegressionError> {
        match algo {
            Algorithm::Pls => {
                let pcfg = PlsConfig {
                    center: cfg.center,
                    ..PlsConfig::new(cfg.n_components)
                };
                Ok(FittedModel::Pls(fit_pls_tensor(x, y, &pcfg)?))
            }
            _ if y.order() == 2 => Ok(FittedModel::Hopls2(fit_hopls2(x, &y.matricize(0)?, cfg)?)),
            _ => Ok(FittedModel::Hopls(fit_hopls(x, y, cfg)?)),
        }
    }

    pub fn predict(&self, x_new: &DenseTensor) -> Result<DenseTensor, RegressionError> {
        match self {
            FittedModel::Hopls(m) => m.predict(x_new),
            FittedModel::Hopls2(m) => Ok(DenseTensor::from_matrix(&m.predict(x_new)?)?),
            FittedModel::Pls(m) => m.predict_tensor(x_new),
        }
    }

    /// Number of components actually extracted.
    pub fn n_components(&self) -> usize {
        match self {
            FittedModel::Hopls(m) => m.n_components(),
            FittedModel::Hopls2(m) => m.n_components(),
            FittedModel::Pls(m) => m.n_components(),
        }
    }

    /// The model restricted to its first `r` components (sequential
    /// extraction makes this identical to fitting with `R = r`).
    pub fn truncated(&self, r: usize) -> Self {
        match self {
            FittedModel::Hopls(m) => FittedModel::Hopls(m.truncated(r)),
            FittedModel::Hopls2(m) => FittedModel::Hopls2(m.truncated(r)),
            FittedModel::Pls(m) => FittedModel::Pls(m.truncated(r)),
        }
    }

    pub fn x_residual_norms(&self) -> &[f64] {
        match self {
            FittedModel::Hopls(m) => &m.x_residual_norms,
            FittedModel::Hopls2(m) => &m.x_residual_norms,
            FittedModel::Pls(m) => &m.x_residual_norms,
        }
    }

    pub fn y_residual_norms(&self) -> &[f64] {
        match self {
            FittedModel::Hopls(m) => &m.y_residual_norms,
            FittedModel::Hopls2(m) => &m.y_residual_norms,
            FittedModel::Pls(m) => &m.y_residual_norms,
        }
    }

    pub fn stop_reason(&self) -> StopReason {
        match self {
            FittedModel::Hopls(m) => m.stop_reason,
            FittedModel::Hopls2(m) => m.stop_reason,
            FittedModel::Pls(m) => m.stop_reason,
        }
    }

    pub fn x_dims(&self) -> &[usize] {
        match self {
            FittedModel::Hopls(m) => &m.x_dims,
            FittedModel::Hopls2(m) => &m.x_dims,
            FittedModel::Pls(m) => &m.x_dims,
        }
    }
}

pub(crate) fn check_trailing(expected: &[usize], got: &[usize]) -> Result<(), RegressionError> {
    if expected.len() != got.len() || expected[1..] != got[1..] {
        return Err(RegressionError::Shape(format!(
            "new data {:?} does not match training layout {:?} beyond the sample mode",
            got, expected
        )));
    }
    Ok(())
}

pub(crate) fn residual_thresholds(cfg_eps: Option<f64>, x_norm: f64, y_norm: f64) -> (f64, f64) {
    match cfg_eps {
        Some(e) => (e, e),
        None => (DEFAULT_RELATIVE_EPSILON * x_norm, DEFAULT_RELATIVE_EPSILON * y_norm),
    }
}

/// Shape of a prediction with `n` samples and the given trailing dims.
pub(crate) fn with_samples(dims: &[usize], n: usize) -> Result<Shape, TensorError> {
    let mut d = dims.to_vec();
    d[0] = n;
    Shape::new(d)
}

pub(crate) fn vector_norm(v: &Vector) -> f64 {
    v.dot(v).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn centering_examples() {
        let t = DenseTensor::from_fn(&[3, 2, 2], |ix| (ix[1] * 2 + ix[2]) as f64).unwrap();
        let (c, _) = center_mode1(&t);
        assert!(c.data().iter().all(|&v| v == 0.0));

        let t = DenseTensor::from_fn(&[4, 2, 3], |ix| (ix[0] * 7 + ix[1] * 3 + ix[2]) as f64).unwrap();
        let (c, mean) = center_mode1(&t);
        assert_eq!(mean.dims(), &[1, 2, 3]);
        assert_eq!(add_mean_mode1(&c, &mean).unwrap(), t);
        let (_, residual_mean) = center_mode1(&c);
        assert!(residual_mean.data().iter().all(|v| v.abs() <= 1e-12));
    }

    #[test]
    fn lambda_constructor_clamps() {
        let cfg = FitConfig::with_lambda(3, 4, &[10, 3, 5], &[10, 6, 2]);
        assert_eq!(cfg.x_ranks, vec![3, 4]);
        assert_eq!(cfg.y_ranks, vec![4, 2]);
        let m = FitConfig::with_lambda(3, 4, &[10, 3, 5], &[10, 2]);
        assert!(m.y_ranks.is_empty());
    }

    #[test]
    fn eta_constructor_uses_mode_ranks() {
        // mode-1 rank 1, mode-2 rank 2
        let x = DenseTensor::from_fn(&[3, 4, 2], |ix| (ix[0] + 1) as f64 * if ix[2] == 0 { 1.0 } else { (ix[0] * ix[0]) as f64 }).unwrap();
        let y = DenseTensor::from_fn(&[3, 2, 2], |ix| (ix[0] + ix[1] + ix[2]) as f64).unwrap();
        let cfg = FitConfig::with_eta(2, 1.0, &x, &y).unwrap();
        assert_eq!(cfg.x_ranks, vec![1, 2]);
        let half = FitConfig::with_eta(2, 0.5, &x, &y).unwrap();
        assert_eq!(half.x_ranks, vec![1, 1]);
        assert!(FitConfig::with_eta(2, 0.0, &x, &y).is_err());
    }

    #[test]
    fn config_validation() {
        let cfg = FitConfig::new(2, vec![2, 2], vec![1, 3]);
        assert!(cfg.validate_tensor(&[5, 2, 2], &[5, 2, 3]).is_ok());
        assert!(cfg.validate_tensor(&[5, 2, 1], &[5, 2, 3]).is_err());
        assert!(cfg.validate_tensor(&[5, 2, 2, 2], &[5, 2, 3]).is_err());
        assert!(FitConfig::new(0, vec![1, 1], vec![1, 1])
            .validate_tensor(&[5, 2, 2], &[5, 2, 2])
            .is_err());
        assert!(cfg.clone().with_epsilon(-1.0).validate_matrix(&[5, 2, 2]).is_err());
    }

    #[test]
    fn adjusted_weights_solve_unit_triangular_system() {
        let w = array![[1.0, 0.5], [0.0, 1.0], [0.0, 0.0]];
        let a = array![[1.0, 0.0], [2.0, 1.0], [0.0, 3.0]];
        let adj = deflation_adjusted_weights(&w, &a);
        // (I + U) with U_{01} = a_0·w_1 = 0.5 + 2 = 2.5
        let ident = adj.dot(&array![[1.0, 2.5], [0.0, 1.0]]);
        assert!((ident - &w).iter().all(|v| v.abs() < 1e-15));
    }

    #[test]
    fn algorithm_parsing() {
        assert_eq!("npls".parse::<Algorithm>().unwrap(), Algorithm::Npls);
        assert!("cp".parse::<Algorithm>().is_err());
        assert_eq!(Algorithm::Hopls2.to_string(), "hopls2");
    }
}
