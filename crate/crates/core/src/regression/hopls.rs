use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::{
    block_loading_row, center_mode1, check_trailing, column_matrix, deflation_adjusted_weights,
    residual_thresholds, stack_columns, sub_mean_mode1, add_mean_mode1, with_samples, FitConfig,
    RegressionError, StopReason,
};
use crate::decomp::{hooi_cross_cov, leading_left_singular_vector, DecompError, HooiSettings, MlRank};
use crate::tensor::{DenseTensor, Matrix, Vector};

/// One extracted component: `t ∘ [[G; P…]]` for X and `t ∘ [[D; Q…]]` for Y.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HoplsComponent {
    /// Unit-norm latent vector over the samples.
    pub t: Vector,
    /// Column-orthonormal loadings `P^(1..N-1)`, one per non-sample mode of X.
    pub x_loadings: Vec<Matrix>,
    /// Column-orthonormal loadings `Q^(1..M-1)` for Y.
    pub y_loadings: Vec<Matrix>,
    /// Core `G`, shape `1 × L_2 × … × L_N`.
    pub x_core: DenseTensor,
    /// Core `D`, shape `1 × K_2 × … × K_M`.
    pub y_core: DenseTensor,
    pub hooi_sweeps: usize,
    pub hooi_converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HoplsModel {
    pub config: FitConfig,
    pub components: Vec<HoplsComponent>,
    pub x_mean: Option<DenseTensor>,
    pub y_mean: Option<DenseTensor>,
    pub x_dims: Vec<usize>,
    pub y_dims: Vec<usize>,
    /// `‖E_1‖, ‖E_2‖, …`: residual norms before the first and after every
    /// extracted component.
    pub x_residual_norms: Vec<f64>,
    pub y_residual_norms: Vec<f64>,
    pub stop_reason: StopReason,
}

/// Tensor-to-tensor HOPLS.
///
/// Per component: the mode-0 cross-covariance of the residuals is reduced
/// by HOOI to rank `(L_2…L_N, K_2…K_M)`, giving the loadings; `t` is the
/// leading left singular vector of the residual projected on the X
/// loadings; the cores are least-squares contractions; both residuals are
/// deflated by the fitted blocks.
pub fn fit_hopls(
    x: &DenseTensor,
    y: &DenseTensor,
    cfg: &FitConfig,
) -> Result<HoplsModel, RegressionError> {
    if x.order() < 3 || y.order() < 3 {
        return Err(RegressionError::Shape(format!(
            "tensor HOPLS needs order >= 3 on both sides, got {} and {}",
            x.order(),
            y.order()
        )));
    }
    if x.dims()[0] != y.dims()[0] {
        return Err(RegressionError::Shape(format!(
            "sample counts differ: {} vs {}",
            x.dims()[0],
            y.dims()[0]
        )));
    }
    cfg.validate_tensor(x.dims(), y.dims())?;

    let (mut e, x_mean) = if cfg.center {
        let (c, m) = center_mode1(x);
        (c, Some(m))
    } else {
        (x.clone(), None)
    };
    let (mut f, y_mean) = if cfg.center {
        let (c, m) = center_mode1(y);
        (c, Some(m))
    } else {
        (y.clone(), None)
    };

    let e_norm = e.fro_norm();
    let f_norm = f.fro_norm();
    if e_norm == 0.0 || f_norm == 0.0 {
        return Err(RegressionError::NoSharedVariance);
    }
    let (eps_x, eps_y) = residual_thresholds(cfg.epsilon, e_norm, f_norm);
    let nx = x.order() - 1;
    let mut ranks = cfg.x_ranks.clone();
    ranks.extend_from_slice(&cfg.y_ranks);
    let rank = MlRank::new(ranks);
    let settings = HooiSettings::default();

    let mut components = Vec::with_capacity(cfg.n_components);
    let mut x_norms = vec![e_norm];
    let mut y_norms = vec![f_norm];
    let mut stop_reason = StopReason::Completed;

    for _ in 0..cfg.n_components {
        let (en, fn_) = (e.fro_norm(), f.fro_norm());
        if !(en > eps_x && fn_ > eps_y) {
            stop_reason = StopReason::ResidualBelowThreshold;
            break;
        }
        let c = DenseTensor::cross_cov_mode1(&e, &f)?;
        if c.fro_norm() <= 1e-14 * en * fn_ {
            if components.is_empty() {
                return Err(RegressionError::NoSharedVariance);
            }
            stop_reason = StopReason::NoSharedVariance;
            break;
        }
        let outcome = hooi_cross_cov(&e, &f, &rank, &settings)?;
        let mut factors = outcome.tucker.factors;
        let y_loadings = factors.split_off(nx);
        let x_loadings = factors;

        let mut proj: Vec<Option<&Matrix>> = vec![None];
        proj.extend(x_loadings.iter().map(Some));
        let z = e.project(&proj)?;
        let t = match leading_left_singular_vector(&z.matricize(0)?) {
            Ok(t) => t,
            Err(DecompError::ZeroMatrix) => {
                stop_reason = StopReason::DegenerateComponent;
                break;
            }
            Err(err) => return Err(err.into()),
        };
        let t_col = column_matrix(&t);
        let x_core = z.mode_product_transposed(&t_col, 0)?;
        let mut yproj: Vec<Option<&Matrix>> = vec![Some(&t_col)];
        yproj.extend(y_loadings.iter().map(Some));
        let y_core = f.project(&yproj)?;

        let mut xf = vec![t_col.clone()];
        xf.extend(x_loadings.iter().cloned());
        e.sub_assign(&DenseTensor::tucker_product(&x_core, &xf)?)?;
        let mut yf = vec![t_col];
        yf.extend(y_loadings.iter().cloned());
        f.sub_assign(&DenseTensor::tucker_product(&y_core, &yf)?)?;
        x_norms.push(e.fro_norm());
        y_norms.push(f.fro_norm());

        components.push(HoplsComponent {
            t,
            x_loadings,
            y_loadings,
            x_core,
            y_core,
            hooi_sweeps: outcome.sweeps,
            hooi_converged: outcome.converged,
        });
    }

    Ok(HoplsModel {
        config: cfg.clone(),
        components,
        x_mean,
        y_mean,
        x_dims: x.dims().to_vec(),
        y_dims: y.dims().to_vec(),
        x_residual_norms: x_norms,
        y_residual_norms: y_norms,
        stop_reason,
    })
}

impl HoplsModel {
    pub fn n_components(&self) -> usize {
        self.components.len()
    }

    pub fn truncated(&self, r: usize) -> Self {
        let keep = r.min(self.components.len());
        let mut m = self.clone();
        m.components.truncate(keep);
        m.x_residual_norms.truncate(keep + 1);
        m.y_residual_norms.truncate(keep + 1);
        m
    }

    /// Rows `a_r = G_r(1) (P_r^(N-1) ⊗ … ⊗ P_r^(1))ᵀ` as columns, so that
    /// each X block unfolds to `t_r a_rᵀ`.
    pub fn x_block_rows(&self) -> Result<Matrix, RegressionError> {
        let cols: Vec<Vector> = self
            .components
            .iter()
            .map(|c| block_loading_row(&c.x_core, &c.x_loadings))
            .collect::<Result<_, _>>()?;
        Ok(stack_columns(&cols, self.x_features()))
    }

    /// `W` with columns `w_r = (P_r^(N-1) ⊗ … ⊗ P_r^(1)) G_r(1)⁺`.
    pub fn x_weights(&self) -> Result<Matrix, RegressionError> {
        let a = self.x_block_rows()?;
        let mut w = a.clone();
        for (r, c) in self.components.iter().enumerate() {
            let g2 = c.x_core.fro_norm_sq();
            let scale = if g2 > 0.0 { 1.0 / g2 } else { 0.0 };
            w.column_mut(r).mapv_inplace(|v| v * scale);
        }
        Ok(w)
    }

    /// Weights mapping centered new X (mode-0 unfolding) to latent scores,
    /// accounting for the sequential deflation between components.
    pub fn projection_weights(&self) -> Result<Matrix, RegressionError> {
        Ok(deflation_adjusted_weights(&self.x_weights()?, &self.x_block_rows()?))
    }

    /// `Q*` with columns `q*_r = D_r(1) (Q_r^(M-1) ⊗ … ⊗ Q_r^(1))ᵀ`.
    pub fn y_weights(&self) -> Result<Matrix, RegressionError> {
        let cols: Vec<Vector> = self
            .components
            .iter()
            .map(|c| block_loading_row(&c.y_core, &c.y_loadings))
            .collect::<Result<_, _>>()?;
        Ok(stack_columns(&cols, self.y_features()))
    }

    fn x_features(&self) -> usize {
        self.x_dims[1..].iter().product()
    }

    fn y_features(&self) -> usize {
        self.y_dims[1..].iter().product()
    }

    /// Latent scores of new observations (one row per sample).
    pub fn scores(&self, x_new: &DenseTensor) -> Result<Matrix, RegressionError> {
        check_trailing(&self.x_dims, x_new.dims())?;
        let xc = match &self.x_mean {
            Some(m) => sub_mean_mode1(x_new, m)?,
            None => x_new.clone(),
        };
        Ok(xc.matricize(0)?.dot(&self.projection_weights()?))
    }

    /// `Ŷ_(1) = X_(1) W* Q*ᵀ`, folded back to `(n, J_2, …, J_M)`, plus the
    /// training mean when centering was on.
    pub fn predict(&self, x_new: &DenseTensor) -> Result<DenseTensor, RegressionError> {
        let n = x_new.dims()[0];
        let t = self.scores(x_new)?;
        let y1 = if self.components.is_empty() {
            Array2::zeros((n, self.y_features()))
        } else {
            t.dot(&self.y_weights()?.t())
        };
        let out = DenseTensor::fold(&y1, 0, &with_samples(&self.y_dims, n)?)?;
        match &self.y_mean {
            Some(m) => add_mean_mode1(&out, m),
            None => Ok(out),
        }
    }

    /// `Σ_r [[D_r; t_r, Q_r…]]` plus the mean: the model's fit of the
    /// training responses.
    pub fn fitted_response(&self) -> Result<DenseTensor, RegressionError> {
        let shape = with_samples(&self.y_dims, self.y_dims[0])?;
        let mut acc = DenseTensor::zeros(shape);
        for c in &self.components {
            let mut f = vec![column_matrix(&c.t)];
            f.extend(c.y_loadings.iter().cloned());
            acc = acc.add(&DenseTensor::tucker_product(&c.y_core, &f)?)?;
        }
        match &self.y_mean {
            Some(m) => add_mean_mode1(&acc, m),
            None => Ok(acc),
        }
    }
}
