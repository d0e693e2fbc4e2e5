//! Higher-order partial least squares: dense tensors, Tucker decompositions,
//! tensor regression and the evaluation harness around it.

pub mod decomp;
pub mod eval;
pub mod regression;
pub mod tensor;

pub use decomp::{hooi, hosvd, HooiSettings, MlRank, TuckerFactors};
pub use regression::{
    fit_hopls, fit_hopls2, fit_pls_nipals, Algorithm, FitConfig, FittedModel, HoplsModel,
    Hopls2Model, PlsModel, RegressionError,
};
pub use tensor::{DenseTensor, Matrix, Shape, TensorError, Vector};
