//! Monte Carlo sampling of a trained network, two ways.
//!
//! MC-AA: compute the input-loss gradient once per point (label assumed, by
//! default class 0), then sweep a symmetric epsilon grid along the gradient
//! sign, collecting the deterministic prediction at each step. The sweep
//! straddles the point on both sides, so a point near the decision boundary
//! yields predictions on both sides of it and a large spread.
//!
//! MC-dropout: repeat the stochastic forward pass of a dropout-trained
//! network with fresh masks and collect the predictions.
//!
//! Either way the result is a [`McSamples`] stack of probability rows, and
//! uncertainty is its mutual information: H(mean row) minus mean row
//! entropy, in nats, bounded by ln 2 for two classes.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::network::{sign, MlpModel};
use crate::scalar::{real, real_of, Scalar};
use crate::seed;

/// Symmetric, evenly spaced perturbation magnitudes, always containing 0.
#[derive(Debug, Clone, PartialEq)]
pub struct EpsilonGrid<F> {
    eps_max: F,
    beta: F,
    values: Vec<F>,
}

impl<F: Scalar> EpsilonGrid<F> {
    /// Grid `{-m*beta, ..., -beta, 0, beta, ..., m*beta}` with `m` the
    /// largest step count that stays within `eps_max`. With the usual
    /// `beta = eps_max / 10` this yields 21 values.
    pub fn symmetric(eps_max: F, beta: F) -> Result<Self> {
        for (name, v) in [("eps_max", eps_max), ("beta", beta)] {
            if !v.is_finite() || v <= F::zero() {
                return Err(Error::Domain(format!("{name} must be finite and positive, got {v}")));
            }
        }
        if beta > eps_max {
            return Err(Error::Domain(format!("step {beta} exceeds eps_max {eps_max}")));
        }
        // Tolerant step count: eps_max/beta lands a hair under an integer
        // when the ratio is exact in intent but not in floats.
        let ratio = eps_max.to_f64().unwrap() / beta.to_f64().unwrap();
        let m = (ratio + 1e-9).floor() as i64;
        let values: Vec<F> = (-m..=m).map(|k| beta * real::<F>(k as f64)).collect();
        Ok(EpsilonGrid { eps_max, beta, values })
    }

    /// Explicit grid for fixtures and degenerate cases (e.g. `{0}`), still
    /// required to be strictly ascending, symmetric, and evenly spaced.
    pub fn from_values(values: Vec<F>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Domain("empty epsilon grid".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric("non-finite epsilon value".into()));
        }
        let n = values.len();
        for w in values.windows(2) {
            if w[1] <= w[0] {
                return Err(Error::Domain("epsilon values must be strictly ascending".into()));
            }
        }
        for i in 0..n {
            if values[i] != -values[n - 1 - i] {
                return Err(Error::Domain("epsilon grid must equal its own negation reversed".into()));
            }
        }
        let beta = if n >= 2 { values[1] - values[0] } else { F::zero() };
        if n >= 3 {
            let tol = real::<F>(1e-9) * values[n - 1].abs().max(F::one());
            for w in values.windows(2) {
                if ((w[1] - w[0]) - beta).abs() > tol {
                    return Err(Error::Domain("epsilon grid must be evenly spaced".into()));
                }
            }
        }
        let eps_max = values[n - 1];
        Ok(EpsilonGrid { eps_max, beta, values })
    }

    pub fn values(&self) -> &[F] {
        &self.values
    }

    pub fn eps_max(&self) -> F {
        self.eps_max
    }

    pub fn beta(&self) -> F {
        self.beta
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Which sampler produced a stack of probability rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SampleSource {
    McAa,
    McDropout,
}

impl SampleSource {
    pub fn name(self) -> &'static str {
        match self {
            SampleSource::McAa => "mcaa",
            SampleSource::McDropout => "mcdropout",
        }
    }
}

/// T stochastic predictions for one point; every row is a distribution over
/// the two classes (validated to 1e-9 at construction).
#[derive(Debug, Clone, PartialEq)]
pub struct McSamples<F> {
    probs: Matrix<F>,
    source: SampleSource,
}

impl<F: Scalar> McSamples<F> {
    pub fn new(probs: Matrix<F>, source: SampleSource) -> Result<Self> {
        if probs.cols() != 2 {
            return Err(Error::Dimension(format!("expected 2 columns of probabilities, got {}", probs.cols())));
        }
        if probs.rows() == 0 {
            return Err(Error::Domain("no samples".into()));
        }
        let tol = real::<F>(1e-9);
        for r in 0..probs.rows() {
            let row = probs.row(r);
            if row.iter().any(|&p| p < F::zero()) {
                return Err(Error::Numeric(format!("negative probability in sample row {r}")));
            }
            let sum: F = row.iter().copied().sum();
            if (sum - F::one()).abs() > tol {
                return Err(Error::Numeric(format!("sample row {r} sums to {sum}, not 1")));
            }
        }
        Ok(McSamples { probs, source })
    }

    /// Number of samples, T.
    pub fn len(&self) -> usize {
        self.probs.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.rows() == 0
    }

    pub fn probs(&self) -> &Matrix<F> {
        &self.probs
    }

    pub fn source(&self) -> SampleSource {
        self.source
    }

    /// Elementwise mean of the sample rows; itself a distribution.
    pub fn predictive_mean(&self) -> [F; 2] {
        let t = real_of::<F>(self.len());
        let sums = self.probs.col_sums();
        [sums[0] / t, sums[1] / t]
    }

    /// Entropy of the predictive mean, in nats; lies in [0, ln 2].
    pub fn predictive_entropy(&self) -> F {
        entropy2(self.predictive_mean())
    }

    /// Mutual information between prediction and sampling round:
    /// H(mean) - mean(H). Non-negative by Jensen; round-off is clamped away
    /// and a stack of identical rows gives exactly 0 (the mean of T copies
    /// is not bitwise exact for every T, so this case is short-circuited).
    pub fn mutual_information(&self) -> F {
        let first = self.probs.row(0).to_vec();
        if (1..self.len()).all(|r| self.probs.row(r) == first) {
            return F::zero();
        }
        let t = real_of::<F>(self.len());
        let mean_entropy =
            (0..self.len()).map(|r| entropy2([self.probs[(r, 0)], self.probs[(r, 1)]])).sum::<F>() / t;
        let mi = self.predictive_entropy() - mean_entropy;
        mi.max(F::zero()).min(ln2::<F>())
    }
}

fn ln2<F: Scalar>() -> F {
    real(std::f64::consts::LN_2)
}

/// Two-class entropy in nats, with the p ln p limit of 0 at p = 0 taken
/// exactly; clamped into [0, ln 2] against round-off.
fn entropy2<F: Scalar>(p: [F; 2]) -> F {
    let mut h = F::zero();
    for v in p {
        if v > F::zero() {
            h = h - v * v.ln();
        }
    }
    h.max(F::zero()).min(ln2::<F>())
}

/// MC-AA samples for one point (a 1 x d row).
///
/// The gradient is computed once; only the step size varies across the
/// grid. Each sample is the deterministic prediction at `x + eps * sign(g)`.
pub fn mcaa_sample<F: Scalar>(
    model: &MlpModel<F>,
    x: &Matrix<F>,
    grid: &EpsilonGrid<F>,
    assumed_label: usize,
) -> Result<McSamples<F>> {
    if x.rows() != 1 {
        return Err(Error::Dimension(format!("expected a single input row, got {}", x.rows())));
    }
    if assumed_label > 1 {
        return Err(Error::Domain(format!("assumed label {assumed_label} is not binary")));
    }
    let grad = model.input_gradient(x, &[assumed_label])?;
    let direction = sign(&grad);
    let mut rows = Matrix::zeros(grid.len(), 2);
    for (i, &eps) in grid.values().iter().enumerate() {
        let perturbed = x.scaled_add(&direction, eps);
        let (probs, _) = model.forward(&perturbed, false, 0)?;
        rows.row_mut(i).copy_from_slice(probs.row(0));
    }
    McSamples::new(rows, SampleSource::McAa)
}

/// MC-dropout samples for one point: `passes` stochastic forward passes
/// with masks drawn deterministically from `seed`.
pub fn mc_dropout_sample<F: Scalar>(
    model: &MlpModel<F>,
    x: &Matrix<F>,
    passes: usize,
    seed_value: u64,
) -> Result<McSamples<F>> {
    if x.rows() != 1 {
        return Err(Error::Dimension(format!("expected a single input row, got {}", x.rows())));
    }
    if passes < 2 {
        return Err(Error::Domain(format!("{passes} dropout passes cannot measure spread, need at least 2")));
    }
    if model.dropout_rate() == F::zero() {
        return Err(Error::Domain("MC-dropout needs a model trained with dropout".into()));
    }
    let mut rows = Matrix::zeros(passes, 2);
    for pass in 0..passes {
        let (probs, _) = model.forward(x, true, seed::derive(seed_value, pass as u64))?;
        rows.row_mut(pass).copy_from_slice(probs.row(0));
    }
    McSamples::new(rows, SampleSource::McDropout)
}

/// How to sample each test point in [`score_testset`].
#[derive(Debug, Clone)]
pub enum ScoreMethod<F> {
    McAa { grid: EpsilonGrid<F>, assumed_label: usize },
    /// `seed` is the run seed; each point derives its own stream from it,
    /// so results do not depend on scheduling order.
    McDropout { passes: usize, seed: u64 },
}

/// Per-point scoring result, in input order.
#[derive(Debug, Clone, PartialEq)]
pub struct PointScore<F> {
    pub index: usize,
    /// Argmax of the predictive mean; exact ties resolve to class 0.
    pub predicted: usize,
    pub p_mean: [F; 2],
    pub mi: F,
}

/// Score every row of `x`. Points are independent, so the loop runs on the
/// current rayon pool; output order always matches input order and is
/// bitwise identical regardless of thread count.
pub fn score_testset<F: Scalar>(
    model: &MlpModel<F>,
    x: &Matrix<F>,
    method: &ScoreMethod<F>,
) -> Result<Vec<PointScore<F>>> {
    if x.cols() != model.input_dim() {
        return Err(Error::Dimension(format!(
            "test features have {} columns, model expects {}",
            x.cols(),
            model.input_dim()
        )));
    }
    // Fail fast on method problems instead of once per point.
    if let ScoreMethod::McDropout { passes, .. } = method {
        if *passes < 2 {
            return Err(Error::Domain(format!("{passes} dropout passes cannot measure spread, need at least 2")));
        }
        if model.dropout_rate() == F::zero() {
            return Err(Error::Domain("MC-dropout needs a model trained with dropout".into()));
        }
    }

    (0..x.rows())
        .into_par_iter()
        .map(|i| {
            let row = x.single_row(i);
            let samples = match method {
                ScoreMethod::McAa { grid, assumed_label } => mcaa_sample(model, &row, grid, *assumed_label)?,
                ScoreMethod::McDropout { passes, seed } => {
                    mc_dropout_sample(model, &row, *passes, seed::derive(*seed, i as u64))?
                }
            };
            let p_mean = samples.predictive_mean();
            let predicted = usize::from(p_mean[1] > p_mean[0]);
            Ok(PointScore { index: i, predicted, p_mean, mi: samples.mutual_information() })
        })
        .collect()
}
