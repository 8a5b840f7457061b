//! Uncertainty estimation for binary neural classifiers.
//!
//! The core idea: probe a trained network by nudging each test point along
//! the sign of its input-loss gradient over a symmetric grid of step sizes
//! (an FGSM-style sweep), collect the predicted distributions, and summarize
//! their spread as mutual information. Points whose predictions flip under
//! tiny perturbations sit near the decision boundary, and those are exactly
//! the points the classifier tends to get wrong. An MC-dropout sampler is
//! included as the baseline, and both feed the same evaluation protocol
//! (accuracy/NPV/TPR over a threshold sweep, ROC/AUC, precision-recall).
//!
//! Numeric kernels are generic over the [`scalar::Scalar`] floating type;
//! the shipped pipelines use the `f64` aliases below.
//!
//! ```
//! use mcaa::network::MlpModel;
//! use mcaa::sampler::{score_testset, EpsilonGrid, ScoreMethod};
//! use mcaa::{Matrix, Real};
//!
//! let model = MlpModel::<Real>::new(2, (8, 8), 0.0, 7).unwrap();
//! let x = Matrix::from_vec(2, 2, vec![0.2, 0.8, -1.0, 1.5]).unwrap();
//! let method = ScoreMethod::McAa {
//!     grid: EpsilonGrid::symmetric(0.005, 0.0005).unwrap(),
//!     assumed_label: 0,
//! };
//! let scores = score_testset(&model, &x, &method).unwrap();
//! assert_eq!(scores.len(), 2);
//! ```

pub mod data;
pub mod error;
pub mod eval;
pub mod matrix;
pub mod model_io;
pub mod network;
pub mod sampler;
pub mod scalar;
pub mod seed;
pub mod standardize;
pub mod train;

pub use error::{Error, Result};
pub use matrix::Matrix;

/// Working precision of the shipped pipelines.
pub type Real = f64;
pub type RealMatrix = Matrix<Real>;
pub type RealModel = network::MlpModel<Real>;
pub type RealDataset = data::Dataset<Real>;
