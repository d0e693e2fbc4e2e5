use ndarray::{Array2, Axis};
use serde::{Deserialize, Serialize};

use super::{
    check_trailing, column_matrix, deflation_adjusted_weights, stack_columns, vector_norm,
    with_samples, RegressionError, StopReason,
};
use crate::tensor::{DenseTensor, Matrix, Vector};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlsConfig {
    pub n_components: usize,
    pub center: bool,
    /// Inner NIPALS iteration cap.
    pub max_iter: usize,
    /// Inner loop stops when `‖t − t_prev‖ ≤ tol · ‖t‖`.
    pub tol: f64,
}

impl PlsConfig {
    pub fn new(n_components: usize) -> Self {
        PlsConfig {
            n_components,
            center: true,
            max_iter: 500,
            tol: 1e-10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlsComponent {
    /// Unit-norm X weight.
    pub w: Vector,
    /// X score `t = E w`.
    pub t: Vector,
    /// X loading `p = Eᵀt / tᵀt`.
    pub p: Vector,
    /// Unit-norm Y weight.
    pub q: Vector,
    /// Y score `u = F q`.
    pub u: Vector,
    /// Inner regression coefficient `uᵀt / tᵀt`.
    pub d: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlsModel {
    pub config: PlsConfig,
    pub components: Vec<PlsComponent>,
    pub x_mean: Option<Vector>,
    pub y_mean: Option<Vector>,
    /// Training layouts; for matrix fits these are `[rows, cols]`.
    pub x_dims: Vec<usize>,
    pub y_dims: Vec<usize>,
    pub x_residual_norms: Vec<f64>,
    pub y_residual_norms: Vec<f64>,
    pub stop_reason: StopReason,
}

/// Two-way PLS by NIPALS with mean-centering.
pub fn fit_pls_nipals(x: &Matrix, y: &Matrix, n_components: usize) -> Result<PlsModel, RegressionError> {
    fit_pls_with(x, y, &PlsConfig::new(n_components))
}

/// PLS on the mode-0 unfoldings of tensor data ("unfolded PLS").
pub fn fit_pls_tensor(x: &DenseTensor, y: &DenseTensor, cfg: &PlsConfig) -> Result<PlsModel, RegressionError> {
    let mut model = fit_pls_with(&x.matricize(0)?, &y.matricize(0)?, cfg)?;
    model.x_dims = x.dims().to_vec();
    model.y_dims = y.dims().to_vec();
    Ok(model)
}

pub fn fit_pls_with(x: &Matrix, y: &Matrix, cfg: &PlsConfig) -> Result<PlsModel, RegressionError> {
    let (n, px) = x.dim();
    let (ny, py) = y.dim();
    if n != ny {
        return Err(RegressionError::Shape(format!("sample counts differ: {n} vs {ny}")));
    }
    if cfg.n_components == 0 || cfg.n_components > n.min(px) {
        return Err(RegressionError::Config(format!(
            "R = {} outside 1..={} for a {n}x{px} predictor",
            cfg.n_components,
            n.min(px)
        )));
    }
    if py == 0 || y.iter().all(|&v| v == 0.0) {
        return Err(RegressionError::ZeroResponse);
    }

    let (mut e, x_mean) = center_columns(x, cfg.center);
    let (mut f, y_mean) = center_columns(y, cfg.center);
    let e0 = frob(&e);
    let f0 = frob(&f);
    let mut x_norms = vec![e0];
    let mut y_norms = vec![f0];
    let mut components = Vec::with_capacity(cfg.n_components);
    let mut stop_reason = StopReason::Completed;
    if f0 == 0.0 {
        return Err(RegressionError::ZeroResponse);
    }

    for _ in 0..cfg.n_components {
        if frob(&e) <= 1e-12 * e0 || frob(&f) <= 1e-12 * f0 {
            stop_reason = StopReason::ResidualBelowThreshold;
            break;
        }
        let Some(comp) = nipals_component(&e, &f, cfg) else {
            stop_reason = StopReason::NoSharedVariance;
            break;
        };
        let tcol = column_matrix(&comp.t);
        e -= &tcol.dot(&comp.p.view().insert_axis(Axis(0)));
        f.scaled_add(-comp.d, &tcol.dot(&comp.q.view().insert_axis(Axis(0))));
        x_norms.push(frob(&e));
        y_norms.push(frob(&f));
        components.push(comp);
    }
    if components.is_empty() && stop_reason == StopReason::NoSharedVariance {
        return Err(RegressionError::NoSharedVariance);
    }

    Ok(PlsModel {
        config: cfg.clone(),
        components,
        x_mean,
        y_mean,
        x_dims: vec![n, px],
        y_dims: vec![n, py],
        x_residual_norms: x_norms,
        y_residual_norms: y_norms,
        stop_reason,
    })
}

fn nipals_component(e: &Matrix, f: &Matrix, cfg: &PlsConfig) -> Option<PlsComponent> {
    // start from the response column of largest norm
    let mut best = 0;
    let mut best_norm = -1.0;
    for (j, col) in f.columns().into_iter().enumerate() {
        let nrm = col.dot(&col);
        if nrm > best_norm {
            best_norm = nrm;
            best = j;
        }
    }
    let mut u: Vector = f.column(best).to_owned();
    let mut t_prev: Option<Vector> = None;
    let mut iterations = 0;
    let (mut w, mut t, mut q) = (u.clone(), u.clone(), u.clone());
    while iterations < cfg.max_iter {
        iterations += 1;
        w = e.t().dot(&u);
        let wn = vector_norm(&w);
        if wn == 0.0 {
            return None;
        }
        w /= wn;
        t = e.dot(&w);
        q = f.t().dot(&t);
        let qn = vector_norm(&q);
        if qn == 0.0 {
            return None;
        }
        q /= qn;
        u = f.dot(&q);
        if let Some(prev) = &t_prev {
            if vector_norm(&(&t - prev)) <= cfg.tol * vector_norm(&t) {
                break;
            }
        }
        t_prev = Some(t.clone());
    }
    let tt = t.dot(&t);
    if tt == 0.0 {
        return None;
    }
    let p = e.t().dot(&t) / tt;
    let d = u.dot(&t) / tt;
    Some(PlsComponent {
        w,
        t,
        p,
        q,
        u,
        d,
        iterations,
    })
}

fn center_columns(m: &Matrix, center: bool) -> (Matrix, Option<Vector>) {
    if !center {
        return (m.clone(), None);
    }
    let mean = m.mean_axis(Axis(0)).expect("non-empty");
    (m - &mean.view().insert_axis(Axis(0)), Some(mean))
}

fn frob(m: &Matrix) -> f64 {
    m.iter().map(|v| v * v).sum::<f64>().sqrt()
}

impl PlsModel {
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

    fn x_cols(&self) -> usize {
        self.x_dims[1..].iter().product()
    }

    fn y_cols(&self) -> usize {
        self.y_dims[1..].iter().product()
    }

    pub fn x_weights(&self) -> Matrix {
        let cols: Vec<Vector> = self.components.iter().map(|c| c.w.clone()).collect();
        stack_columns(&cols, self.x_cols())
    }

    pub fn x_loadings(&self) -> Matrix {
        let cols: Vec<Vector> = self.components.iter().map(|c| c.p.clone()).collect();
        stack_columns(&cols, self.x_cols())
    }

    /// `W (PᵀW)⁻¹`: maps centered X directly to the scores.
    pub fn projection_weights(&self) -> Matrix {
        deflation_adjusted_weights(&self.x_weights(), &self.x_loadings())
    }

    /// Regression coefficients `B` with `Ŷ = (X − x̄) B + ȳ`.
    pub fn coefficients(&self) -> Matrix {
        let qcols: Vec<Vector> = self.components.iter().map(|c| &c.q * c.d).collect();
        let qd = stack_columns(&qcols, self.y_cols());
        self.projection_weights().dot(&qd.t())
    }

    pub fn predict(&self, x_new: &Matrix) -> Result<Matrix, RegressionError> {
        if x_new.ncols() != self.x_cols() {
            return Err(RegressionError::Shape(format!(
                "new data has {} columns, model expects {}",
                x_new.ncols(),
                self.x_cols()
            )));
        }
        let xc = match &self.x_mean {
            Some(m) => x_new - &m.view().insert_axis(Axis(0)),
            None => x_new.clone(),
        };
        let mut out = if self.components.is_empty() {
            Array2::zeros((x_new.nrows(), self.y_cols()))
        } else {
            xc.dot(&self.coefficients())
        };
        if let Some(m) = &self.y_mean {
            out += &m.view().insert_axis(Axis(0));
        }
        Ok(out)
    }

    /// Predicts from tensor data laid out like the training predictors and
    /// folds the result back to the training response layout.
    pub fn predict_tensor(&self, x_new: &DenseTensor) -> Result<DenseTensor, RegressionError> {
        check_trailing(&self.x_dims, x_new.dims())?;
        let n = x_new.dims()[0];
        let y1 = self.predict(&x_new.matricize(0)?)?;
        Ok(DenseTensor::fold(&y1, 0, &with_samples(&self.y_dims, n)?)?)
    }
}
