//! Orthogonal low-multilinear-rank machinery: a deterministic SVD,
//! HOSVD and higher-order orthogonal iteration (HOOI).
//!
//! The SVD is a one-sided (Hestenes) Jacobi iteration. Singular triplets are
//! returned in non-increasing order of singular value, ties kept in the
//! order the iteration produced them, and every left singular vector is
//! signed so that its entry of largest magnitude is positive (lowest index
//! wins a tie). The right vector is flipped with it.

use ndarray::{Array1, Array2, Axis};
use thiserror::Error;

use crate::tensor::{DenseTensor, Matrix, Shape, TensorError, Vector};

const MAX_JACOBI_SWEEPS: usize = 75;
/// Singular values below this fraction of the largest are dropped by [`pinv`].
pub const PINV_RCOND: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DecompError {
    #[error("requested {k} singular triplets from a {rows}x{cols} matrix")]
    RankOutOfRange { k: usize, rows: usize, cols: usize },
    #[error("rank {rank} invalid for mode {mode} of size {dim}")]
    ModeRank { mode: usize, rank: usize, dim: usize },
    #[error("multilinear rank has {got} entries, tensor has order {expected}")]
    RankOrder { expected: usize, got: usize },
    #[error("matrix is identically zero; its leading singular direction is undefined")]
    ZeroMatrix,
    #[error("Jacobi SVD did not converge within {0} sweeps")]
    NoConvergence(usize),
    #[error("invalid HOOI settings: {0}")]
    Settings(String),
    #[error(transparent)]
    Tensor(#[from] TensorError),
}

/// Thin or truncated singular value decomposition `m ≈ U diag(s) Vᵀ`.
#[derive(Debug, Clone, PartialEq)]
pub struct Svd {
    pub u: Matrix,
    pub s: Vector,
    pub v: Matrix,
}

impl Svd {
    pub fn reconstruct(&self) -> Matrix {
        let us = &self.u * &self.s.view().insert_axis(Axis(0));
        us.dot(&self.v.t())
    }
}

/// Leading `k` singular triplets of `m`.
pub fn truncated_svd(m: &Matrix, k: usize) -> Result<Svd, DecompError> {
    let (rows, cols) = m.dim();
    if k == 0 || k > rows.min(cols) {
        return Err(DecompError::RankOutOfRange { k, rows, cols });
    }
    let full = thin_svd(m)?;
    Ok(Svd {
        u: full.u.slice(ndarray::s![.., ..k]).to_owned(),
        s: full.s.slice(ndarray::s![..k]).to_owned(),
        v: full.v.slice(ndarray::s![.., ..k]).to_owned(),
    })
}

/// All `min(rows, cols)` singular triplets.
pub fn thin_svd(m: &Matrix) -> Result<Svd, DecompError> {
    let (rows, cols) = m.dim();
    if rows >= cols {
        let (u, s, v) = jacobi_tall(m)?;
        Ok(finish(u, s, v))
    } else {
        let mt = m.t().to_owned();
        let (u, s, v) = jacobi_tall(&mt)?;
        Ok(finish(v, s, u))
    }
}

/// Unit-norm leading left singular vector.
pub fn leading_left_singular_vector(m: &Matrix) -> Result<Vector, DecompError> {
    if m.iter().all(|&v| v == 0.0) {
        return Err(DecompError::ZeroMatrix);
    }
    let svd = truncated_svd(m, 1)?;
    Ok(svd.u.column(0).to_owned())
}

/// Moore–Penrose pseudoinverse with relative cutoff [`PINV_RCOND`].
pub fn pinv(m: &Matrix) -> Result<Matrix, DecompError> {
    let (rows, cols) = m.dim();
    let svd = thin_svd(m)?;
    let smax = svd.s.iter().copied().fold(0.0, f64::max);
    let mut out = Array2::zeros((cols, rows));
    if smax == 0.0 {
        return Ok(out);
    }
    for (j, &sj) in svd.s.iter().enumerate() {
        if sj <= PINV_RCOND * smax {
            continue;
        }
        let vj = svd.v.column(j);
        let uj = svd.u.column(j);
        for a in 0..cols {
            let coef = vj[a] / sj;
            for b in 0..rows {
                out[[a, b]] += coef * uj[b];
            }
        }
    }
    Ok(out)
}

/// `k` orthonormal columns spanning the dominant left singular subspace of
/// `m`. Unlike [`truncated_svd`], `k` may exceed the column count; missing
/// directions are filled with an arbitrary orthonormal completion.
pub(crate) fn leading_left_vectors(m: &Matrix, k: usize) -> Result<Matrix, DecompError> {
    let (rows, cols) = m.dim();
    if k == 0 || k > rows {
        return Err(DecompError::RankOutOfRange { k, rows, cols });
    }
    // wide unfoldings: the Gram matrix has the same left singular vectors
    // and is far cheaper to diagonalise
    let svd = if cols > 2 * rows {
        thin_svd(&m.dot(&m.t()))?
    } else {
        thin_svd(m)?
    };
    Ok(complete_columns(&svd.u, k))
}

/// Leading `k` eigenvectors of a symmetric positive semidefinite `g`.
fn leading_gram_vectors(g: &Matrix, k: usize) -> Result<Matrix, DecompError> {
    let rows = g.nrows();
    if k == 0 || k > rows {
        return Err(DecompError::RankOutOfRange { k, rows, cols: rows });
    }
    Ok(complete_columns(&thin_svd(g)?.u, k))
}

fn complete_columns(u: &Matrix, k: usize) -> Matrix {
    let rows = u.nrows();
    let have = u.ncols().min(k);
    let mut columns: Vec<Vec<f64>> = (0..have).map(|j| u.column(j).to_vec()).collect();
    complete_orthonormal(&mut columns, rows, k);
    columns_to_matrix(&columns, rows)
}

/// One-sided Jacobi on a matrix with at least as many rows as columns.
/// Returns (left columns, singular values, right columns), unsorted.
fn jacobi_tall(a: &Matrix) -> Result<(Vec<Vec<f64>>, Vec<f64>, Vec<Vec<f64>>), DecompError> {
    let (m, n) = a.dim();
    let mut u: Vec<Vec<f64>> = (0..n).map(|j| a.column(j).to_vec()).collect();
    let mut v: Vec<Vec<f64>> = (0..n)
        .map(|j| {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            e
        })
        .collect();
    let tol = f64::EPSILON * (m.max(1) as f64);
    let tiny = f64::MIN_POSITIVE * 1e10;

    let mut converged = n <= 1;
    for _ in 0..MAX_JACOBI_SWEEPS {
        if converged {
            break;
        }
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let (alpha, beta, gamma) = {
                    let (up, uq) = (&u[p], &u[q]);
                    let mut alpha = 0.0;
                    let mut beta = 0.0;
                    let mut gamma = 0.0;
                    for (x, y) in up.iter().zip(uq) {
                        alpha += x * x;
                        beta += y * y;
                        gamma += x * y;
                    }
                    (alpha, beta, gamma)
                };
                if alpha < tiny || beta < tiny || gamma.abs() <= tol * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate_pair(&mut u, p, q, c, s);
                rotate_pair(&mut v, p, q, c, s);
            }
        }
        if !rotated {
            converged = true;
        }
    }
    if !converged {
        return Err(DecompError::NoConvergence(MAX_JACOBI_SWEEPS));
    }

    let mut sigma = Vec::with_capacity(n);
    for col in u.iter_mut() {
        let norm = col.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > tiny {
            col.iter_mut().for_each(|x| *x /= norm);
            sigma.push(norm);
        } else {
            sigma.push(0.0);
        }
    }
    // zero columns get an orthonormal completion
    let zero_slots: Vec<usize> = (0..n).filter(|&j| sigma[j] == 0.0).collect();
    if !zero_slots.is_empty() {
        let mut basis: Vec<Vec<f64>> = (0..n)
            .filter(|&j| sigma[j] > 0.0)
            .map(|j| u[j].clone())
            .collect();
        let keep = basis.len();
        complete_orthonormal(&mut basis, m, keep + zero_slots.len());
        for (slot, vec) in zero_slots.iter().zip(basis.into_iter().skip(keep)) {
            u[*slot] = vec;
        }
    }
    Ok((u, sigma, v))
}

fn rotate_pair(cols: &mut [Vec<f64>], p: usize, q: usize, c: f64, s: f64) {
    let (left, right) = cols.split_at_mut(q);
    let cp = &mut left[p];
    let cq = &mut right[0];
    for (x, y) in cp.iter_mut().zip(cq.iter_mut()) {
        let xp = *x;
        let xq = *y;
        *x = c * xp - s * xq;
        *y = s * xp + c * xq;
    }
}

/// Sorts by descending singular value and applies the sign convention.
fn finish(u: Vec<Vec<f64>>, s: Vec<f64>, v: Vec<Vec<f64>>) -> Svd {
    let mut order: Vec<usize> = (0..s.len()).collect();
    order.sort_by(|&a, &b| s[b].total_cmp(&s[a]));
    let rows_u = u.first().map_or(0, Vec::len);
    let rows_v = v.first().map_or(0, Vec::len);
    let k = order.len();
    let mut um = Array2::zeros((rows_u, k));
    let mut vm = Array2::zeros((rows_v, k));
    let mut sv = Array1::zeros(k);
    for (dst, &src) in order.iter().enumerate() {
        let sign = sign_of_largest(&u[src]);
        for i in 0..rows_u {
            um[[i, dst]] = sign * u[src][i];
        }
        for i in 0..rows_v {
            vm[[i, dst]] = sign * v[src][i];
        }
        sv[dst] = s[src];
    }
    Svd { u: um, s: sv, v: vm }
}

fn sign_of_largest(col: &[f64]) -> f64 {
    let mut best = 0.0f64;
    let mut sign = 1.0;
    for &x in col {
        if x.abs() > best {
            best = x.abs();
            sign = if x < 0.0 { -1.0 } else { 1.0 };
        }
    }
    sign
}

/// Extends orthonormal `columns` (length `dim` each) to `target` columns by
/// Gram–Schmidt on the standard basis.
fn complete_orthonormal(columns: &mut Vec<Vec<f64>>, dim: usize, target: usize) {
    let mut e = 0;
    while columns.len() < target && e < dim {
        let mut cand = vec![0.0; dim];
        cand[e] = 1.0;
        e += 1;
        for _ in 0..2 {
            for c in columns.iter() {
                let proj: f64 = c.iter().zip(&cand).map(|(a, b)| a * b).sum();
                cand.iter_mut().zip(c).for_each(|(x, ci)| *x -= proj * ci);
            }
        }
        let norm = cand.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.5 {
            cand.iter_mut().for_each(|x| *x /= norm);
            columns.push(cand);
        }
    }
}

fn columns_to_matrix(columns: &[Vec<f64>], rows: usize) -> Matrix {
    let mut m = Array2::zeros((rows, columns.len()));
    for (j, col) in columns.iter().enumerate() {
        for (i, &x) in col.iter().enumerate() {
            m[[i, j]] = x;
        }
    }
    m
}

/// Per-mode target ranks `(R_1, …, R_N)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MlRank(Vec<usize>);

impl MlRank {
    pub fn new(ranks: Vec<usize>) -> Self {
        MlRank(ranks)
    }

    pub fn full(shape: &Shape) -> Self {
        MlRank(shape.dims().to_vec())
    }

    pub fn ranks(&self) -> &[usize] {
        &self.0
    }

    pub fn validate(&self, shape: &Shape) -> Result<(), DecompError> {
        if self.0.len() != shape.order() {
            return Err(DecompError::RankOrder {
                expected: shape.order(),
                got: self.0.len(),
            });
        }
        for (mode, (&rank, &dim)) in self.0.iter().zip(shape.dims()).enumerate() {
            if rank == 0 || rank > dim {
                return Err(DecompError::ModeRank { mode, rank, dim });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HooiSettings {
    pub max_iters: usize,
    /// Sweeps stop once `|Δ‖core‖²| ≤ rel_tol · ‖core‖²`.
    pub rel_tol: f64,
}

impl Default for HooiSettings {
    fn default() -> Self {
        HooiSettings {
            max_iters: 50,
            rel_tol: 1e-8,
        }
    }
}

impl HooiSettings {
    pub fn validate(&self) -> Result<(), DecompError> {
        if self.max_iters == 0 {
            return Err(DecompError::Settings("max_iters must be at least 1".into()));
        }
        if !(self.rel_tol > 0.0) {
            return Err(DecompError::Settings("rel_tol must be positive".into()));
        }
        Ok(())
    }
}

/// Orthogonal Tucker model: `t ≈ [[core; factors…]]`.
#[derive(Debug, Clone, PartialEq)]
pub struct TuckerFactors {
    pub core: DenseTensor,
    pub factors: Vec<Matrix>,
}

impl TuckerFactors {
    pub fn reconstruct(&self) -> Result<DenseTensor, TensorError> {
        DenseTensor::tucker_product(&self.core, &self.factors)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HooiOutcome {
    pub tucker: TuckerFactors,
    pub sweeps: usize,
    pub converged: bool,
    /// `‖core‖_F²` after initialisation and after every sweep.
    pub core_norm_history: Vec<f64>,
}

/// Truncated HOSVD: factor `n` holds the leading left singular vectors of
/// the mode-`n` unfolding; the core is `t` projected on all factors.
pub fn hosvd(t: &DenseTensor, rank: &MlRank) -> Result<TuckerFactors, DecompError> {
    rank.validate(t.shape())?;
    let mut factors = Vec::with_capacity(t.order());
    for (mode, &r) in rank.ranks().iter().enumerate() {
        factors.push(leading_left_vectors(&t.matricize(mode)?, r)?);
    }
    let refs: Vec<Option<&Matrix>> = factors.iter().map(Some).collect();
    let core = t.project(&refs)?;
    Ok(TuckerFactors { core, factors })
}

/// Higher-order orthogonal iteration, initialised from [`hosvd`], updating
/// modes in ascending order within each sweep.
pub fn hooi(
    t: &DenseTensor,
    rank: &MlRank,
    settings: &HooiSettings,
) -> Result<HooiOutcome, DecompError> {
    settings.validate()?;
    let init = hosvd(t, rank)?;
    let mut factors = init.factors;
    let mut history = vec![init.core.fro_norm_sq()];
    let mut core = init.core;
    let mut converged = false;
    let mut sweeps = 0;
    let order = t.order();

    for _ in 0..settings.max_iters {
        sweeps += 1;
        for mode in 0..order {
            let refs: Vec<Option<&Matrix>> = factors
                .iter()
                .enumerate()
                .map(|(k, f)| if k == mode { None } else { Some(f) })
                .collect();
            let partial = t.project(&refs)?;
            factors[mode] = leading_left_vectors(&partial.matricize(mode)?, rank.ranks()[mode])?;
        }
        let refs: Vec<Option<&Matrix>> = factors.iter().map(Some).collect();
        core = t.project(&refs)?;
        let obj = core.fro_norm_sq();
        let prev = *history.last().expect("non-empty");
        history.push(obj);
        if (obj - prev).abs() <= settings.rel_tol * prev.abs() {
            converged = true;
            break;
        }
    }

    Ok(HooiOutcome {
        tucker: TuckerFactors { core, factors },
        sweeps,
        converged,
        core_norm_history: history,
    })
}

/// [`hooi`] of the cross-covariance `C = cross_cov_mode1(x, y)` without
/// forming `C`.
///
/// `rank` covers the modes of `C`: the trailing modes of `x`, then those of
/// `y`. Every unfolding Gram matrix of a projected `C` is assembled from the
/// projected samples and an `n × n` Gram matrix of the other side, so the
/// cost scales with the sample count instead of with `C`. The iteration is
/// the same as [`hooi`] on `C`: HOSVD start, ascending modes, same stopping
/// rule.
pub fn hooi_cross_cov(
    x: &DenseTensor,
    y: &DenseTensor,
    rank: &MlRank,
    settings: &HooiSettings,
) -> Result<HooiOutcome, DecompError> {
    settings.validate()?;
    if x.dims()[0] != y.dims()[0] {
        return Err(DecompError::Tensor(TensorError::DimensionMismatch(format!(
            "sample counts differ: {} vs {}",
            x.dims()[0],
            y.dims()[0]
        ))));
    }
    let nx = x.order() - 1;
    let mut c_dims: Vec<usize> = x.dims()[1..].to_vec();
    c_dims.extend_from_slice(&y.dims()[1..]);
    if c_dims.is_empty() {
        c_dims.push(1);
    }
    rank.validate(&Shape::new(c_dims.clone())?)?;
    let ranks = rank.ranks();

    // Gram of the unfolding along `mode` (a mode of `side`, 1-based) of
    // cross_cov(side, other) with `side` already projected elsewhere.
    let mode_gram = |side: &DenseTensor, other_flat: &Matrix, mode: usize| -> Result<Matrix, DecompError> {
        let k = other_flat.dot(&other_flat.t());
        let h = side.mode_product(&k, 0)?;
        Ok(side.matricize(mode)?.dot(&h.matricize(mode)?.t()))
    };
    let project_except = |t: &DenseTensor, factors: &[Matrix], skip: Option<usize>| -> Result<DenseTensor, DecompError> {
        let mut refs: Vec<Option<&Matrix>> = vec![None];
        refs.extend(factors.iter().enumerate().map(|(k, f)| if Some(k) == skip { None } else { Some(f) }));
        Ok(t.project(&refs)?)
    };
    let update = |xf: &mut Vec<Matrix>, yf: &mut Vec<Matrix>, init: bool| -> Result<(), DecompError> {
        let y_all = if init { y.clone() } else { project_except(y, yf, None)? };
        let y_flat = y_all.matricize(0)?;
        for m in 0..nx {
            let xs = if init { x.clone() } else { project_except(x, xf, Some(m))? };
            xf[m] = leading_gram_vectors(&mode_gram(&xs, &y_flat, m + 1)?, ranks[m])?;
        }
        let x_all = if init { x.clone() } else { project_except(x, xf, None)? };
        let x_flat = x_all.matricize(0)?;
        for m in 0..yf.len() {
            let ys = if init { y.clone() } else { project_except(y, yf, Some(m))? };
            yf[m] = leading_gram_vectors(&mode_gram(&ys, &x_flat, m + 1)?, ranks[nx + m])?;
        }
        Ok(())
    };
    let core_of = |xf: &[Matrix], yf: &[Matrix]| -> Result<DenseTensor, DecompError> {
        let xp = project_except(x, xf, None)?;
        let yp = project_except(y, yf, None)?;
        Ok(DenseTensor::cross_cov_mode1(&xp, &yp)?)
    };

    let mut xf: Vec<Matrix> = vec![Array2::zeros((0, 0)); nx];
    let mut yf: Vec<Matrix> = vec![Array2::zeros((0, 0)); y.order() - 1];
    update(&mut xf, &mut yf, true)?;
    let mut core = core_of(&xf, &yf)?;
    let mut history = vec![core.fro_norm_sq()];
    let mut converged = false;
    let mut sweeps = 0;
    for _ in 0..settings.max_iters {
        sweeps += 1;
        update(&mut xf, &mut yf, false)?;
        core = core_of(&xf, &yf)?;
        let obj = core.fro_norm_sq();
        let prev = *history.last().expect("non-empty");
        history.push(obj);
        if (obj - prev).abs() <= settings.rel_tol * prev.abs() {
            converged = true;
            break;
        }
    }
    xf.extend(yf);
    Ok(HooiOutcome {
        tucker: TuckerFactors { core, factors: xf },
        sweeps,
        converged,
        core_norm_history: history,
    })
}
