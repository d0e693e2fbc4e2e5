use ndarray::{Array2, Axis};
use serde::{Deserialize, Serialize};

use super::{
    block_loading_row, center_mode1, check_trailing, column_matrix, deflation_adjusted_weights,
    residual_thresholds, stack_columns, sub_mean_mode1, vector_norm, FitConfig, RegressionError,
    StopReason,
};
use crate::decomp::{hooi_cross_cov, pinv, HooiSettings, MlRank};
use crate::tensor::{DenseTensor, Matrix, Vector};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hopls2Component {
    /// Unit-norm latent vector.
    pub t: Vector,
    pub x_loadings: Vec<Matrix>,
    /// Core `G`, shape `1 × L_2 × … × L_N`.
    pub x_core: DenseTensor,
    /// Unit-norm Y loading `q`.
    pub q: Vector,
    /// Inner regression coefficient `d = uᵀt`.
    pub d: f64,
    /// Y latent vector `u = F q`.
    pub u: Vector,
    /// Weight mapping the deflated X residual (mode-0 unfolding) onto `t`.
    pub weight: Vector,
    pub hooi_sweeps: usize,
    pub hooi_converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hopls2Model {
    pub config: FitConfig,
    pub components: Vec<Hopls2Component>,
    pub x_mean: Option<DenseTensor>,
    pub y_mean: Option<Vector>,
    pub x_dims: Vec<usize>,
    pub y_cols: usize,
    pub x_residual_norms: Vec<f64>,
    pub y_residual_norms: Vec<f64>,
    pub stop_reason: StopReason,
}

/// Tensor-to-matrix HOPLS.
///
/// Per component: rank-`(1, L_2, …, L_N)` HOOI of `E ×_0 Fᵀ` yields the Y
/// loading `q` and the X loadings; `t` is the least-squares latent vector
/// for the resulting core (via its pseudoinverse), normalised to unit
/// length; `d = (F q)ᵀ t` carries all scale on the Y side.
pub fn fit_hopls2(
    x: &DenseTensor,
    y: &Matrix,
    cfg: &FitConfig,
) -> Result<Hopls2Model, RegressionError> {
    if x.order() < 3 {
        return Err(RegressionError::Shape(format!(
            "HOPLS2 needs an order >= 3 predictor, got order {}",
            x.order()
        )));
    }
    let n = x.dims()[0];
    if y.nrows() != n {
        return Err(RegressionError::Shape(format!(
            "sample counts differ: {} vs {}",
            n,
            y.nrows()
        )));
    }
    if y.ncols() == 0 {
        return Err(RegressionError::Shape("response has no columns".into()));
    }
    cfg.validate_matrix(x.dims())?;

    let (mut e, x_mean) = if cfg.center {
        let (c, m) = center_mode1(x);
        (c, Some(m))
    } else {
        (x.clone(), None)
    };
    let (mut f, y_mean) = if cfg.center {
        let mean = y.mean_axis(Axis(0)).expect("non-empty");
        (y - &mean.view().insert_axis(Axis(0)), Some(mean))
    } else {
        (y.clone(), None)
    };

    let e_norm = e.fro_norm();
    let f_norm = frob(&f);
    if e_norm == 0.0 || f_norm == 0.0 {
        return Err(RegressionError::NoSharedVariance);
    }
    let (eps_x, eps_y) = residual_thresholds(cfg.epsilon, e_norm, f_norm);
    let mut ranks = vec![1];
    ranks.extend_from_slice(&cfg.x_ranks);
    let rank = MlRank::new(ranks);
    let settings = HooiSettings::default();

    let mut components = Vec::with_capacity(cfg.n_components);
    let mut x_norms = vec![e_norm];
    let mut y_norms = vec![f_norm];
    let mut stop_reason = StopReason::Completed;

    for _ in 0..cfg.n_components {
        let (en, fn_) = (e.fro_norm(), frob(&f));
        if !(en > eps_x && fn_ > eps_y) {
            stop_reason = StopReason::ResidualBelowThreshold;
            break;
        }
        let c = e.mode_product(&f.t().to_owned(), 0)?;
        if c.fro_norm() <= 1e-14 * en * fn_ {
            if components.is_empty() {
                return Err(RegressionError::NoSharedVariance);
            }
            stop_reason = StopReason::NoSharedVariance;
            break;
        }
        let outcome = hooi_cross_cov(&DenseTensor::from_matrix(&f)?, &e, &rank, &settings)?;
        let mut factors = outcome.tucker.factors;
        let x_loadings = factors.split_off(1);
        let q: Vector = factors[0].column(0).to_owned();
        let c_core = outcome.tucker.core;

        let mut proj: Vec<Option<&Matrix>> = vec![None];
        proj.extend(x_loadings.iter().map(Some));
        let z = e.project(&proj)?;
        let g_row = c_core.matricize(0)?;
        let g_pinv = pinv(&g_row)?;
        let t_raw: Vector = z.matricize(0)?.dot(&g_pinv).column(0).to_owned();
        let t_norm = vector_norm(&t_raw);
        if !(t_norm > 0.0) {
            if components.is_empty() {
                return Err(RegressionError::NoSharedVariance);
            }
            stop_reason = StopReason::DegenerateComponent;
            break;
        }
        let t = &t_raw / t_norm;

        // weight in X-unfolding coordinates: (P ⊗ …) G^(C)+ / ‖t_raw‖
        let pinv_core = DenseTensor::fold(&g_pinv.t().to_owned(), 0, c_core.shape())?;
        let weight = block_loading_row(&pinv_core, &x_loadings)? / t_norm;

        let t_col = column_matrix(&t);
        let x_core = z.mode_product_transposed(&t_col, 0)?;
        let u: Vector = f.dot(&q);
        let d = u.dot(&t);

        let mut xf = vec![t_col];
        xf.extend(x_loadings.iter().cloned());
        e.sub_assign(&DenseTensor::tucker_product(&x_core, &xf)?)?;
        let tq = column_matrix(&t).dot(&q.view().insert_axis(Axis(0)));
        f.scaled_add(-d, &tq);
        x_norms.push(e.fro_norm());
        y_norms.push(frob(&f));

        components.push(Hopls2Component {
            t,
            x_loadings,
            x_core,
            q,
            d,
            u,
            weight,
            hooi_sweeps: outcome.sweeps,
            hooi_converged: outcome.converged,
        });
    }

    Ok(Hopls2Model {
        config: cfg.clone(),
        components,
        x_mean,
        y_mean,
        x_dims: x.dims().to_vec(),
        y_cols: y.ncols(),
        x_residual_norms: x_norms,
        y_residual_norms: y_norms,
        stop_reason,
    })
}

fn frob(m: &Matrix) -> f64 {
    m.iter().map(|v| v * v).sum::<f64>().sqrt()
}

impl Hopls2Model {
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

    fn x_features(&self) -> usize {
        self.x_dims[1..].iter().product()
    }

    /// Weight matrix `W`, one column per component.
    pub fn x_weights(&self) -> Matrix {
        let cols: Vec<Vector> = self.components.iter().map(|c| c.weight.clone()).collect();
        stack_columns(&cols, self.x_features())
    }

    pub fn x_block_rows(&self) -> Result<Matrix, RegressionError> {
        let cols: Vec<Vector> = self
            .components
            .iter()
            .map(|c| block_loading_row(&c.x_core, &c.x_loadings))
            .collect::<Result<_, _>>()?;
        Ok(stack_columns(&cols, self.x_features()))
    }

    pub fn projection_weights(&self) -> Result<Matrix, RegressionError> {
        Ok(deflation_adjusted_weights(&self.x_weights(), &self.x_block_rows()?))
    }

    /// Y loadings `Q`, one column per component.
    pub fn y_loadings(&self) -> Matrix {
        let cols: Vec<Vector> = self.components.iter().map(|c| c.q.clone()).collect();
        stack_columns(&cols, self.y_cols)
    }

    pub fn inner_coefficients(&self) -> Vector {
        self.components.iter().map(|c| c.d).collect()
    }

    pub fn scores(&self, x_new: &DenseTensor) -> Result<Matrix, RegressionError> {
        check_trailing(&self.x_dims, x_new.dims())?;
        let xc = match &self.x_mean {
            Some(m) => sub_mean_mode1(x_new, m)?,
            None => x_new.clone(),
        };
        Ok(xc.matricize(0)?.dot(&self.projection_weights()?))
    }

    /// `Ŷ = X_(1) W* D Qᵀ` plus the training mean.
    pub fn predict(&self, x_new: &DenseTensor) -> Result<Matrix, RegressionError> {
        let n = x_new.dims()[0];
        let t = self.scores(x_new)?;
        let mut out = if self.components.is_empty() {
            Array2::zeros((n, self.y_cols))
        } else {
            let dq = &self.y_loadings() * &self.inner_coefficients().view().insert_axis(Axis(0));
            t.dot(&dq.t())
        };
        if let Some(mean) = &self.y_mean {
            out += &mean.view().insert_axis(Axis(0));
        }
        Ok(out)
    }

    /// `Σ_r d_r t_r q_rᵀ` plus the mean.
    pub fn fitted_response(&self) -> Matrix {
        let n = self.x_dims[0];
        let mut acc = Array2::zeros((n, self.y_cols));
        for c in &self.components {
            let tq = column_matrix(&c.t).dot(&c.q.view().insert_axis(Axis(0)));
            acc.scaled_add(c.d, &tq);
        }
        if let Some(mean) = &self.y_mean {
            acc += &mean.view().insert_axis(Axis(0));
        }
        acc
    }
}
