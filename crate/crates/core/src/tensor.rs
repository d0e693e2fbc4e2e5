//! Dense N-way tensors and the multilinear primitives the estimators are
//! written in.
//!
//! Storage is row-major: the last index varies fastest. Modes are addressed
//! with 0-based indices throughout the API, so "mode 0" is the sample mode.
//!
//! Mode-n matricization uses the column ordering in which the remaining modes
//! are enumerated in increasing order with the *first* remaining mode varying
//! fastest. With that ordering the mode-0 unfolding of a Tucker tensor is
//! `A0 · G_(0) · (A_{N-1} ⊗ … ⊗ A1)ᵀ`, which is the form the prediction
//! weights are expressed in.

use ndarray::linalg::general_mat_mul;
use ndarray::{Array1, Array2, ArrayView2, ArrayViewMut2};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Dense real matrix.
pub type Matrix = Array2<f64>;
/// Dense real vector.
pub type Vector = Array1<f64>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TensorError {
    #[error("shape must have at least one mode")]
    EmptyShape,
    #[error("dimension {index} of shape is zero")]
    ZeroDim { index: usize },
    #[error("element count of shape {0:?} overflows usize")]
    Overflow(Vec<usize>),
    #[error("data length {got} does not match shape {shape:?} (expected {expected})")]
    DataLength {
        shape: Vec<usize>,
        expected: usize,
        got: usize,
    },
    #[error("non-finite entry at flat index {0}")]
    NonFinite(usize),
    #[error("mode {mode} out of range for order-{order} tensor")]
    ModeOutOfRange { mode: usize, order: usize },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("shape mismatch: {left:?} vs {right:?}")]
    ShapeMismatch { left: Vec<usize>, right: Vec<usize> },
}

/// Ordered list of positive mode sizes.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct Shape(Vec<usize>);

impl Shape {
    pub fn new(dims: Vec<usize>) -> Result<Self, TensorError> {
        if dims.is_empty() {
            return Err(TensorError::EmptyShape);
        }
        if let Some(index) = dims.iter().position(|&d| d == 0) {
            return Err(TensorError::ZeroDim { index });
        }
        dims.iter()
            .try_fold(1usize, |acc, &d| acc.checked_mul(d))
            .ok_or_else(|| TensorError::Overflow(dims.clone()))?;
        Ok(Shape(dims))
    }

    pub fn dims(&self) -> &[usize] {
        &self.0
    }

    pub fn order(&self) -> usize {
        self.0.len()
    }

    pub fn numel(&self) -> usize {
        self.0.iter().product()
    }

    /// Row-major strides.
    pub fn strides(&self) -> Vec<usize> {
        let mut strides = vec![1; self.0.len()];
        for k in (0..self.0.len().saturating_sub(1)).rev() {
            strides[k] = strides[k + 1] * self.0[k + 1];
        }
        strides
    }

    /// Same shape with mode `mode` resized to `size`.
    pub fn with_dim(&self, mode: usize, size: usize) -> Result<Self, TensorError> {
        self.check_mode(mode)?;
        let mut dims = self.0.clone();
        dims[mode] = size;
        Shape::new(dims)
    }

    fn check_mode(&self, mode: usize) -> Result<(), TensorError> {
        if mode >= self.order() {
            Err(TensorError::ModeOutOfRange {
                mode,
                order: self.order(),
            })
        } else {
            Ok(())
        }
    }
}

impl TryFrom<Vec<usize>> for Shape {
    type Error = TensorError;
    fn try_from(dims: Vec<usize>) -> Result<Self, Self::Error> {
        Shape::new(dims)
    }
}

impl From<Shape> for Vec<usize> {
    fn from(s: Shape) -> Self {
        s.0
    }
}

#[derive(Deserialize)]
struct RawTensor {
    shape: Shape,
    data: Vec<f64>,
}

/// N-way array of finite `f64` values in row-major order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawTensor")]
pub struct DenseTensor {
    shape: Shape,
    data: Vec<f64>,
}

impl TryFrom<RawTensor> for DenseTensor {
    type Error = TensorError;
    fn try_from(raw: RawTensor) -> Result<Self, Self::Error> {
        DenseTensor::new(raw.shape, raw.data)
    }
}

impl DenseTensor {
    /// Validating constructor: length must match and every entry must be finite.
    pub fn new(shape: Shape, data: Vec<f64>) -> Result<Self, TensorError> {
        if data.len() != shape.numel() {
            return Err(TensorError::DataLength {
                shape: shape.dims().to_vec(),
                expected: shape.numel(),
                got: data.len(),
            });
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(TensorError::NonFinite(i));
        }
        Ok(DenseTensor { shape, data })
    }

    pub fn from_vec(dims: &[usize], data: Vec<f64>) -> Result<Self, TensorError> {
        DenseTensor::new(Shape::new(dims.to_vec())?, data)
    }

    pub(crate) fn from_parts(shape: Shape, data: Vec<f64>) -> Self {
        debug_assert_eq!(shape.numel(), data.len());
        DenseTensor { shape, data }
    }

    pub fn zeros(shape: Shape) -> Self {
        let n = shape.numel();
        DenseTensor {
            shape,
            data: vec![0.0; n],
        }
    }

    /// Builds a tensor by evaluating `f` at every multi-index, in row-major order.
    pub fn from_fn<F>(dims: &[usize], mut f: F) -> Result<Self, TensorError>
    where
        F: FnMut(&[usize]) -> f64,
    {
        let shape = Shape::new(dims.to_vec())?;
        let mut data = Vec::with_capacity(shape.numel());
        let mut idx = vec![0usize; dims.len()];
        for _ in 0..shape.numel() {
            data.push(f(&idx));
            increment(&mut idx, dims);
        }
        DenseTensor::new(shape, data)
    }

    /// Order-2 tensor holding the entries of `m`.
    pub fn from_matrix(m: &Matrix) -> Result<Self, TensorError> {
        let (r, c) = m.dim();
        DenseTensor::from_vec(&[r, c], m.iter().copied().collect())
    }

    /// Order-1 tensor holding the entries of `v`.
    pub fn from_vector(v: &Vector) -> Result<Self, TensorError> {
        DenseTensor::from_vec(&[v.len()], v.to_vec())
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn dims(&self) -> &[usize] {
        self.shape.dims()
    }

    pub fn order(&self) -> usize {
        self.shape.order()
    }

    pub fn numel(&self) -> usize {
        self.data.len()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn get(&self, index: &[usize]) -> f64 {
        self.data[self.flat_index(index)]
    }

    pub fn set(&mut self, index: &[usize], value: f64) {
        let i = self.flat_index(index);
        self.data[i] = value;
    }

    fn flat_index(&self, index: &[usize]) -> usize {
        assert_eq!(index.len(), self.order(), "index order mismatch");
        index
            .iter()
            .zip(self.dims())
            .fold(0, |acc, (&i, &d)| {
                assert!(i < d, "index {i} out of bounds for dim {d}");
                acc * d + i
            })
    }

    pub fn fro_norm_sq(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum()
    }

    pub fn fro_norm(&self) -> f64 {
        self.fro_norm_sq().sqrt()
    }

    /// Same data under a different shape with equal element count.
    pub fn reshape(&self, dims: &[usize]) -> Result<Self, TensorError> {
        let shape = Shape::new(dims.to_vec())?;
        if shape.numel() != self.numel() {
            return Err(TensorError::ShapeMismatch {
                left: self.dims().to_vec(),
                right: dims.to_vec(),
            });
        }
        Ok(DenseTensor::from_parts(shape, self.data.clone()))
    }

    /// Flat copy in storage (row-major) order.
    pub fn vectorize(&self) -> Vector {
        Array1::from(self.data.clone())
    }

    /// Mode-`mode` unfolding: `I_mode` rows, remaining modes on columns with
    /// the first remaining mode varying fastest.
    pub fn matricize(&self, mode: usize) -> Result<Matrix, TensorError> {
        self.shape.check_mode(mode)?;
        let dims = self.dims();
        let rows = dims[mode];
        let cols = self.numel() / rows;
        let mut out = vec![0.0; self.numel()];
        for (&v, off) in self.data.iter().zip(UnfoldOffsets::new(dims, mode)) {
            out[off] = v;
        }
        let out = Array2::from_shape_vec((rows, cols), out).expect("sizes agree");
        Ok(out)
    }

    /// Inverse of [`DenseTensor::matricize`].
    pub fn fold(m: &Matrix, mode: usize, target: &Shape) -> Result<Self, TensorError> {
        target.check_mode(mode)?;
        let dims = target.dims();
        let rows = dims[mode];
        let cols = target.numel() / rows;
        if m.dim() != (rows, cols) {
            return Err(TensorError::DimensionMismatch(format!(
                "matrix {:?} cannot fold into shape {:?} along mode {mode}",
                m.dim(),
                dims
            )));
        }
        let m = m.as_standard_layout();
        let flat = m.as_slice().expect("standard layout");
        let data = UnfoldOffsets::new(dims, mode).map(|off| flat[off]).collect();
        DenseTensor::new(target.clone(), data)
    }

    /// `self ×_mode a`: contracts mode `mode` with the columns of `a`.
    pub fn mode_product(&self, a: &Matrix, mode: usize) -> Result<Self, TensorError> {
        self.shape.check_mode(mode)?;
        let dims = self.dims();
        let (new_dim, inner) = a.dim();
        if inner != dims[mode] {
            return Err(TensorError::DimensionMismatch(format!(
                "matrix with {inner} columns cannot multiply mode {mode} of size {}",
                dims[mode]
            )));
        }
        let pre: usize = dims[..mode].iter().product();
        let post: usize = dims[mode + 1..].iter().product();
        let out_shape = self.shape.with_dim(mode, new_dim)?;
        let mut out = vec![0.0; pre * new_dim * post];
        if post == 1 {
            // trailing mode: one (pre × inner)·aᵀ product
            let src = ArrayView2::from_shape((pre, inner), &self.data).expect("sizes agree");
            let mut dst = ArrayViewMut2::from_shape((pre, new_dim), &mut out).expect("sizes agree");
            general_mat_mul(1.0, &src, &a.t(), 0.0, &mut dst);
        } else {
            for (src, dst) in self
                .data
                .chunks_exact(inner * post)
                .zip(out.chunks_exact_mut(new_dim * post))
            {
                let src = ArrayView2::from_shape((inner, post), src).expect("sizes agree");
                let mut dst = ArrayViewMut2::from_shape((new_dim, post), dst).expect("sizes agree");
                general_mat_mul(1.0, a, &src, 0.0, &mut dst);
            }
        }
        Ok(DenseTensor::from_parts(out_shape, out))
    }

    /// `self ×_mode aᵀ` without materialising the transpose.
    pub fn mode_product_transposed(&self, a: &Matrix, mode: usize) -> Result<Self, TensorError> {
        self.mode_product(&a.t().as_standard_layout().into_owned(), mode)
    }

    /// `g ×_0 t` for a tensor whose first mode has size one.
    pub fn mode1_vector_product(&self, t: &Vector) -> Result<Self, TensorError> {
        if self.dims()[0] != 1 {
            return Err(TensorError::DimensionMismatch(format!(
                "first mode must have size 1, got {}",
                self.dims()[0]
            )));
        }
        let out_shape = self.shape.with_dim(0, t.len())?;
        let mut data = Vec::with_capacity(out_shape.numel());
        for &ti in t.iter() {
            data.extend(self.data.iter().map(|&g| g * ti));
        }
        Ok(DenseTensor::from_parts(out_shape, data))
    }

    pub fn inner(&self, other: &DenseTensor) -> Result<f64, TensorError> {
        self.check_same_shape(other)?;
        Ok(self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum())
    }

    /// Contraction of `x` and `y` over their shared first mode. The result has
    /// shape `(I_2,…,I_N, J_2,…,J_M)`; when both inputs are vectors it is a
    /// shape-`(1)` scalar.
    pub fn cross_cov_mode1(x: &DenseTensor, y: &DenseTensor) -> Result<Self, TensorError> {
        let n = x.dims()[0];
        if y.dims()[0] != n {
            return Err(TensorError::DimensionMismatch(format!(
                "first-mode sizes differ: {} vs {}",
                n,
                y.dims()[0]
            )));
        }
        let px = x.numel() / n;
        let py = y.numel() / n;
        let xv = ArrayView2::from_shape((n, px), &x.data).expect("contiguous");
        let yv = ArrayView2::from_shape((n, py), &y.data).expect("contiguous");
        let c = xv.t().dot(&yv);
        let mut dims: Vec<usize> = x.dims()[1..].to_vec();
        dims.extend_from_slice(&y.dims()[1..]);
        if dims.is_empty() {
            dims.push(1);
        }
        let shape = Shape::new(dims)?;
        Ok(DenseTensor::from_parts(shape, c.iter().copied().collect()))
    }

    /// `[[core; factors[0], …, factors[N-1]]]`.
    pub fn tucker_product(core: &DenseTensor, factors: &[Matrix]) -> Result<Self, TensorError> {
        if factors.len() != core.order() {
            return Err(TensorError::DimensionMismatch(format!(
                "{} factors for order-{} core",
                factors.len(),
                core.order()
            )));
        }
        let mut out = core.clone();
        for (mode, a) in factors.iter().enumerate() {
            out = out.mode_product(a, mode)?;
        }
        Ok(out)
    }

    /// Multiplies every mode `k` for which `factors[k]` is present by its
    /// transpose, in ascending mode order.
    pub fn project(&self, factors: &[Option<&Matrix>]) -> Result<Self, TensorError> {
        if factors.len() != self.order() {
            return Err(TensorError::DimensionMismatch(format!(
                "{} factors for order-{} tensor",
                factors.len(),
                self.order()
            )));
        }
        let mut out = self.clone();
        for (mode, f) in factors.iter().enumerate() {
            if let Some(a) = f {
                out = out.mode_product_transposed(a, mode)?;
            }
        }
        Ok(out)
    }

    /// Sub-tensor of the given sample (mode-0) indices, in the order given.
    pub fn select_mode1(&self, indices: &[usize]) -> Result<Self, TensorError> {
        if indices.is_empty() {
            return Err(TensorError::DimensionMismatch("empty selection".into()));
        }
        let n = self.dims()[0];
        let stride = self.numel() / n;
        let mut data = Vec::with_capacity(indices.len() * stride);
        for &i in indices {
            if i >= n {
                return Err(TensorError::DimensionMismatch(format!(
                    "sample index {i} out of range for {n} samples"
                )));
            }
            data.extend_from_slice(&self.data[i * stride..(i + 1) * stride]);
        }
        let shape = self.shape.with_dim(0, indices.len())?;
        Ok(DenseTensor::from_parts(shape, data))
    }

    pub fn scaled(&self, factor: f64) -> Self {
        DenseTensor::from_parts(
            self.shape.clone(),
            self.data.iter().map(|v| v * factor).collect(),
        )
    }

    pub fn add(&self, other: &DenseTensor) -> Result<Self, TensorError> {
        self.check_same_shape(other)?;
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect();
        Ok(DenseTensor::from_parts(self.shape.clone(), data))
    }

    pub fn sub(&self, other: &DenseTensor) -> Result<Self, TensorError> {
        self.check_same_shape(other)?;
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect();
        Ok(DenseTensor::from_parts(self.shape.clone(), data))
    }

    pub fn sub_assign(&mut self, other: &DenseTensor) -> Result<(), TensorError> {
        self.check_same_shape(other)?;
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a -= b;
        }
        Ok(())
    }

    fn check_same_shape(&self, other: &DenseTensor) -> Result<(), TensorError> {
        if self.shape != other.shape {
            return Err(TensorError::ShapeMismatch {
                left: self.dims().to_vec(),
                right: other.dims().to_vec(),
            });
        }
        Ok(())
    }
}

/// Column strides of the mode-`mode` unfolding; zero for `mode` itself.
/// For each element in row-major order, its flat (row-major) position in
/// the mode-`mode` unfolding. Walks an odometer and updates the offset
/// incrementally.
struct UnfoldOffsets {
    dims: Vec<usize>,
    steps: Vec<usize>,
    idx: Vec<usize>,
    offset: usize,
    remaining: usize,
}

impl UnfoldOffsets {
    fn new(dims: &[usize], mode: usize) -> Self {
        let cols: usize = dims.iter().product::<usize>() / dims[mode];
        let mut steps = vec![0; dims.len()];
        let mut acc = 1;
        for (k, &d) in dims.iter().enumerate() {
            if k == mode {
                steps[k] = cols;
            } else {
                steps[k] = acc;
                acc *= d;
            }
        }
        UnfoldOffsets {
            dims: dims.to_vec(),
            steps,
            idx: vec![0; dims.len()],
            offset: 0,
            remaining: dims.iter().product(),
        }
    }
}

impl Iterator for UnfoldOffsets {
    type Item = usize;

    fn next(&mut self) -> Option<usize> {
        if self.remaining == 0 {
            return None;
        }
        self.remaining -= 1;
        let current = self.offset;
        for k in (0..self.dims.len()).rev() {
            self.idx[k] += 1;
            if self.idx[k] < self.dims[k] {
                self.offset += self.steps[k];
                break;
            }
            self.idx[k] = 0;
            self.offset -= (self.dims[k] - 1) * self.steps[k];
        }
        Some(current)
    }
}

/// Row-major odometer increment.
fn increment(idx: &mut [usize], dims: &[usize]) {
    for k in (0..dims.len()).rev() {
        idx[k] += 1;
        if idx[k] < dims[k] {
            return;
        }
        idx[k] = 0;
    }
}

/// Kronecker product `a ⊗ b`.
pub fn kron(a: &Matrix, b: &Matrix) -> Matrix {
    let (ar, ac) = a.dim();
    let (br, bc) = b.dim();
    let mut out = Array2::zeros((ar * br, ac * bc));
    for i in 0..ar {
        for j in 0..ac {
            let aij = a[[i, j]];
            for k in 0..br {
                for l in 0..bc {
                    out[[i * br + k, j * bc + l]] = aij * b[[k, l]];
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn example_222() -> DenseTensor {
        // x_{ijk} with 1-based (i,j,k): 1 + (i-1) + 2(j-1) + 4(k-1)
        DenseTensor::from_fn(&[2, 2, 2], |ix| (1 + ix[0] + 2 * ix[1] + 4 * ix[2]) as f64).unwrap()
    }

    /// Triple-loop oracle for the unfolding index map.
    fn matricize_oracle(t: &DenseTensor, mode: usize) -> Matrix {
        let d = t.dims();
        let mut m = Array2::zeros((d[mode], t.numel() / d[mode]));
        for i in 0..d[0] {
            for j in 0..d[1] {
                for k in 0..d[2] {
                    let ix = [i, j, k];
                    let rest: Vec<usize> = (0..3).filter(|&q| q != mode).collect();
                    let col = ix[rest[0]] + d[rest[0]] * ix[rest[1]];
                    m[[ix[mode], col]] = t.get(&ix);
                }
            }
        }
        m
    }

    #[test]
    fn shape_rejects_zero_and_empty() {
        assert_eq!(Shape::new(vec![]), Err(TensorError::EmptyShape));
        assert_eq!(Shape::new(vec![2, 0]), Err(TensorError::ZeroDim { index: 1 }));
        assert!(matches!(
            Shape::new(vec![usize::MAX, 2]),
            Err(TensorError::Overflow(_))
        ));
    }

    #[test]
    fn constructor_rejects_nan_and_bad_length() {
        assert!(matches!(
            DenseTensor::from_vec(&[2], vec![1.0, f64::NAN]),
            Err(TensorError::NonFinite(1))
        ));
        assert!(matches!(
            DenseTensor::from_vec(&[2, 2], vec![1.0; 3]),
            Err(TensorError::DataLength { .. })
        ));
    }

    #[test]
    fn matricize_worked_examples() {
        let t = example_222();
        assert_eq!(t.matricize(0).unwrap(), array![[1., 3., 5., 7.], [2., 4., 6., 8.]]);
        assert_eq!(t.matricize(2).unwrap(), array![[1., 2., 3., 4.], [5., 6., 7., 8.]]);
        for mode in 0..3 {
            assert_eq!(t.matricize(mode).unwrap(), matricize_oracle(&t, mode));
        }
    }

    #[test]
    fn matricize_order_one_and_bad_mode() {
        let v = DenseTensor::from_vec(&[3], vec![1., 2., 3.]).unwrap();
        let m = v.matricize(0).unwrap();
        assert_eq!(m.dim(), (3, 1));
        assert_eq!(m.column(0).to_vec(), vec![1., 2., 3.]);
        assert!(matches!(
            v.matricize(1),
            Err(TensorError::ModeOutOfRange { mode: 1, order: 1 })
        ));
    }

    #[test]
    fn fold_examples() {
        let m = array![[1., 3., 5., 7.], [2., 4., 6., 8.]];
        let shape = Shape::new(vec![2, 2, 2]).unwrap();
        assert_eq!(DenseTensor::fold(&m, 0, &shape).unwrap(), example_222());
        let s = DenseTensor::fold(&array![[4.5]], 0, &Shape::new(vec![1]).unwrap()).unwrap();
        assert_eq!(s.data(), &[4.5]);
        assert!(DenseTensor::fold(&m, 1, &Shape::new(vec![2, 3, 2]).unwrap()).is_err());
    }

    #[test]
    fn mode_product_examples() {
        let t = example_222();
        let y = t.mode_product(&array![[1., 1.]], 0).unwrap();
        assert_eq!(y.dims(), &[1, 2, 2]);
        assert_eq!(y.get(&[0, 0, 0]), 3.0);
        assert_eq!(y.get(&[0, 1, 0]), 7.0);
        assert_eq!(y.get(&[0, 0, 1]), 11.0);
        assert_eq!(y.get(&[0, 1, 1]), 15.0);
        for mode in 0..3 {
            assert_eq!(t.mode_product(&Array2::eye(2), mode).unwrap(), t);
            let z = t.mode_product(&Array2::zeros((3, 2)), mode).unwrap();
            assert!(z.data().iter().all(|&v| v == 0.0));
            assert_eq!(z.dims()[mode], 3);
        }
        assert!(t.mode_product(&Array2::zeros((2, 3)), 1).is_err());
        assert!(t.mode_product(&Array2::zeros((2, 2)), 3).is_err());
    }

    #[test]
    fn mode1_vector_product_examples() {
        let g = DenseTensor::from_vec(&[1], vec![2.0]).unwrap();
        let out = g.mode1_vector_product(&array![1.0, 3.0]).unwrap();
        assert_eq!(out.dims(), &[2]);
        assert_eq!(out.data(), &[2.0, 6.0]);

        let g = DenseTensor::from_vec(&[1, 2, 2], vec![1., 2., 3., 4.]).unwrap();
        let out = g.mode1_vector_product(&array![1.0, 0.0, 0.0]).unwrap();
        assert_eq!(&out.data()[..4], g.data());
        assert!(out.data()[4..].iter().all(|&v| v == 0.0));
        let zero = g.mode1_vector_product(&array![0.0, 0.0]).unwrap();
        assert_eq!(zero.fro_norm(), 0.0);
        assert!(example_222().mode1_vector_product(&array![1.0]).is_err());
    }

    #[test]
    fn inner_examples() {
        let a = DenseTensor::from_matrix(&array![[1., 2.], [3., 4.]]).unwrap();
        let b = DenseTensor::from_matrix(&array![[1., 0.], [0., 1.]]).unwrap();
        assert_eq!(a.inner(&b).unwrap(), 5.0);
        assert_eq!(a.inner(&a).unwrap(), a.fro_norm_sq());
        assert_eq!(a.inner(&DenseTensor::zeros(a.shape().clone())).unwrap(), 0.0);
        assert!(a.inner(&example_222()).is_err());
    }

    #[test]
    fn cross_cov_matrix_case_is_xt_y() {
        let x = array![[1., 2., 0.], [0., 1., 1.], [2., 0., 1.], [1., 1., 1.]];
        let y = array![[1., 0.], [2., 1.], [0., 3.], [1., 1.]];
        let c = DenseTensor::cross_cov_mode1(
            &DenseTensor::from_matrix(&x).unwrap(),
            &DenseTensor::from_matrix(&y).unwrap(),
        )
        .unwrap();
        assert_eq!(c.dims(), &[3, 2]);
        let expected = x.t().dot(&y);
        assert_eq!(c.data(), expected.iter().copied().collect::<Vec<_>>().as_slice());
        // X ×_1 Yᵀ on the matrix case
        let via_product = DenseTensor::from_matrix(&x)
            .unwrap()
            .mode_product(&y.t().to_owned(), 0)
            .unwrap();
        assert_eq!(via_product.matricize(0).unwrap(), expected.t().to_owned());
    }

    #[test]
    fn cross_cov_single_unit_column() {
        // x has one sample-mode column of unit norm per entry of the other modes
        let x = DenseTensor::from_vec(&[2, 1, 2], vec![0.6, 0.0, 0.8, 1.0]).unwrap();
        let c = DenseTensor::cross_cov_mode1(&x, &x).unwrap();
        assert_eq!(c.dims(), &[1, 2, 1, 2]);
        let xm = x.matricize(0).unwrap();
        let gram = xm.t().dot(&xm);
        assert_eq!(c.data(), gram.iter().copied().collect::<Vec<_>>().as_slice());
        let zero = DenseTensor::zeros(x.shape().clone());
        assert_eq!(DenseTensor::cross_cov_mode1(&zero, &x).unwrap().fro_norm(), 0.0);
        let bad = DenseTensor::zeros(Shape::new(vec![3, 2]).unwrap());
        assert!(DenseTensor::cross_cov_mode1(&x, &bad).is_err());
    }

    #[test]
    fn kron_examples() {
        assert_eq!(
            kron(&array![[1., 2.]], &array![[3.], [4.]]),
            array![[3., 6.], [4., 8.]]
        );
        assert_eq!(kron(&Array2::eye(2), &Array2::eye(3)), Array2::<f64>::eye(6));
        let z = kron(&array![[1., 2.], [3., 4.]], &Array2::zeros((2, 3)));
        assert_eq!(z.dim(), (4, 6));
        assert!(z.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn vectorize_examples() {
        let s = DenseTensor::from_vec(&[1], vec![7.0]).unwrap();
        assert_eq!(s.vectorize().to_vec(), vec![7.0]);
        let t = example_222();
        let v = t.vectorize();
        let mut sorted = v.to_vec();
        sorted.sort_by(f64::total_cmp);
        assert_eq!(sorted, (1..=8).map(f64::from).collect::<Vec<_>>());
        assert_eq!(v.dot(&v), 204.0);
        assert_eq!(DenseTensor::from_vec(t.dims(), v.to_vec()).unwrap(), t);
    }

    #[test]
    fn select_mode1_picks_rows() {
        let t = example_222();
        let s = t.select_mode1(&[1]).unwrap();
        assert_eq!(s.dims(), &[1, 2, 2]);
        // row-major over (j, k): x_{2,1,1}, x_{2,1,2}, x_{2,2,1}, x_{2,2,2}
        assert_eq!(s.data(), &[2., 6., 4., 8.]);
        assert!(t.select_mode1(&[2]).is_err());
    }
}
