//! The classifier: a fixed-depth MLP for binary problems.
//!
//! Architecture is two ReLU hidden layers and a 2-way softmax head. Forward
//! passes record everything backward needs (pre-activations, post-activation
//! values, dropout masks), so gradients are an exact replay of the pass that
//! produced them; with dropout active the same mask is applied on the way
//! back. The training loss is class-weighted negative log likelihood.
//!
//! Dropout is inverted: kept units are scaled by 1/(1-p) at sample time, so
//! inference needs no rescaling and a disabled-dropout pass is literally the
//! identity on masks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::scalar::{real, real_of, Scalar};
use crate::standardize::StandardizerStats;

/// Probabilities are clamped into [PROB_CLAMP_MIN, 1] before any log.
pub const PROB_CLAMP_MIN: f64 = 1e-12;

/// Loss weights per class, `(class 0, class 1)`. Both strictly positive; the
/// minority class gets the larger weight on imbalanced problems.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassWeights<F> {
    pub class0: F,
    pub class1: F,
}

impl<F: Scalar> ClassWeights<F> {
    pub fn new(class0: F, class1: F) -> Result<Self> {
        let w = ClassWeights { class0, class1 };
        w.validate()?;
        Ok(w)
    }

    pub fn uniform() -> Self {
        ClassWeights { class0: F::one(), class1: F::one() }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("class0", self.class0), ("class1", self.class1)] {
            if !v.is_finite() || v <= F::zero() {
                return Err(Error::Domain(format!("class weight {name} must be finite and positive, got {v}")));
            }
        }
        Ok(())
    }

    pub fn for_label(&self, label: usize) -> F {
        if label == 0 {
            self.class0
        } else {
            self.class1
        }
    }
}

/// One affine layer; weights are `in_dim x out_dim`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer<F> {
    weights: Matrix<F>,
    bias: Vec<F>,
}

impl<F: Scalar> DenseLayer<F> {
    pub fn new(weights: Matrix<F>, bias: Vec<F>) -> Result<Self> {
        if bias.len() != weights.cols() {
            return Err(Error::Dimension(format!(
                "bias length {} does not match {} output units",
                bias.len(),
                weights.cols()
            )));
        }
        if let Some(bad) = bias.iter().find(|v| !v.is_finite()) {
            return Err(Error::Numeric(format!("non-finite bias entry {bad}")));
        }
        Ok(DenseLayer { weights, bias })
    }

    fn xavier(in_dim: usize, out_dim: usize, rng: &mut ChaCha8Rng) -> Self {
        // Glorot uniform: limit = sqrt(6 / (fan_in + fan_out)), bias at zero.
        let limit = (6.0 / (in_dim + out_dim) as f64).sqrt();
        let data: Vec<F> =
            (0..in_dim * out_dim).map(|_| real(rng.random_range(-limit..limit))).collect();
        DenseLayer {
            weights: Matrix::from_vec(in_dim, out_dim, data).expect("finite init"),
            bias: vec![F::zero(); out_dim],
        }
    }

    pub fn in_dim(&self) -> usize {
        self.weights.rows()
    }

    pub fn out_dim(&self) -> usize {
        self.weights.cols()
    }

    pub fn weights(&self) -> &Matrix<F> {
        &self.weights
    }

    /// Mutable weight access for optimizers and gradient checks. Callers
    /// must not change the shape.
    pub fn weights_mut(&mut self) -> &mut Matrix<F> {
        &mut self.weights
    }

    pub fn bias(&self) -> &[F] {
        &self.bias
    }

    pub fn bias_mut(&mut self) -> &mut [F] {
        &mut self.bias
    }

    fn affine(&self, x: &Matrix<F>) -> Matrix<F> {
        x.matmul(&self.weights).add_row_broadcast(&self.bias)
    }
}

/// Everything recorded about one hidden layer during a forward pass.
#[derive(Debug, Clone)]
pub struct LayerTrace<F> {
    /// Pre-activation z = a_prev W + b.
    pub(crate) pre: Matrix<F>,
    /// Post-activation (after ReLU and, if active, the dropout mask).
    pub(crate) post: Matrix<F>,
    /// Inverted-dropout mask actually applied; entries are 0 or 1/(1-p).
    pub(crate) mask: Option<Matrix<F>>,
}

/// Record of one forward pass, consumed by [`MlpModel::backward`].
#[derive(Debug, Clone)]
pub struct ForwardTrace<F> {
    pub(crate) input: Matrix<F>,
    pub(crate) hidden: [LayerTrace<F>; 2],
    pub(crate) logits: Matrix<F>,
    pub(crate) probs: Matrix<F>,
}

impl<F: Scalar> ForwardTrace<F> {
    pub fn batch_len(&self) -> usize {
        self.input.rows()
    }

    pub fn probs(&self) -> &Matrix<F> {
        &self.probs
    }

    /// Dropout mask applied to hidden layer `l` during this pass, if any.
    pub fn mask(&self, l: usize) -> Option<&Matrix<F>> {
        self.hidden[l].mask.as_ref()
    }
}

/// Loss gradients for one traced batch. `layers` runs input side to output
/// side, matching [`MlpModel::layer`] indices.
#[derive(Debug, Clone)]
pub struct Gradients<F> {
    pub layers: Vec<LayerGrad<F>>,
    pub d_input: Matrix<F>,
}

#[derive(Debug, Clone)]
pub struct LayerGrad<F> {
    pub d_weights: Matrix<F>,
    pub d_bias: Vec<F>,
}

/// Two-hidden-layer MLP with a 2-class softmax head.
///
/// Carries the standardization statistics of the data it was trained on, so
/// a serialized model is self-contained for scoring.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel<F> {
    layers: Vec<DenseLayer<F>>,
    dropout_rate: F,
    standardizer: Option<StandardizerStats<F>>,
}

impl<F: Scalar> MlpModel<F> {
    /// Fresh model with Glorot-uniform weights drawn from `seed`.
    pub fn new(input_dim: usize, hidden: (usize, usize), dropout_rate: F, seed: u64) -> Result<Self> {
        if input_dim == 0 || hidden.0 == 0 || hidden.1 == 0 {
            return Err(Error::Domain(format!(
                "layer widths must be positive, got input {input_dim}, hidden {hidden:?}"
            )));
        }
        Self::check_dropout(dropout_rate)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let layers = vec![
            DenseLayer::xavier(input_dim, hidden.0, &mut rng),
            DenseLayer::xavier(hidden.0, hidden.1, &mut rng),
            DenseLayer::xavier(hidden.1, 2, &mut rng),
        ];
        Ok(MlpModel { layers, dropout_rate, standardizer: None })
    }

    /// Assemble from explicit layers (deserialization, hand-built fixtures).
    pub fn from_parts(
        layers: Vec<DenseLayer<F>>,
        dropout_rate: F,
        standardizer: Option<StandardizerStats<F>>,
    ) -> Result<Self> {
        if layers.len() != 3 {
            return Err(Error::Dimension(format!("expected 3 layers, got {}", layers.len())));
        }
        for pair in layers.windows(2) {
            if pair[0].out_dim() != pair[1].in_dim() {
                return Err(Error::Dimension(format!(
                    "layer chain breaks: {} outputs feeding {} inputs",
                    pair[0].out_dim(),
                    pair[1].in_dim()
                )));
            }
        }
        if layers[2].out_dim() != 2 {
            return Err(Error::Dimension(format!(
                "output layer must have width 2, got {}",
                layers[2].out_dim()
            )));
        }
        Self::check_dropout(dropout_rate)?;
        if let Some(s) = &standardizer {
            if s.n_features() != layers[0].in_dim() {
                return Err(Error::Dimension(format!(
                    "standardizer covers {} features, model expects {}",
                    s.n_features(),
                    layers[0].in_dim()
                )));
            }
        }
        Ok(MlpModel { layers, dropout_rate, standardizer })
    }

    fn check_dropout(rate: F) -> Result<()> {
        if !rate.is_finite() || rate < F::zero() || rate >= F::one() {
            return Err(Error::Domain(format!("dropout rate must lie in [0, 1), got {rate}")));
        }
        Ok(())
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].in_dim()
    }

    pub fn hidden_dims(&self) -> (usize, usize) {
        (self.layers[0].out_dim(), self.layers[1].out_dim())
    }

    pub fn dropout_rate(&self) -> F {
        self.dropout_rate
    }

    pub fn layer(&self, l: usize) -> &DenseLayer<F> {
        &self.layers[l]
    }

    pub fn layer_mut(&mut self, l: usize) -> &mut DenseLayer<F> {
        &mut self.layers[l]
    }

    pub fn layers(&self) -> &[DenseLayer<F>] {
        &self.layers
    }

    pub fn standardizer(&self) -> Option<&StandardizerStats<F>> {
        self.standardizer.as_ref()
    }

    pub fn set_standardizer(&mut self, stats: Option<StandardizerStats<F>>) -> Result<()> {
        if let Some(s) = &stats {
            if s.n_features() != self.input_dim() {
                return Err(Error::Dimension(format!(
                    "standardizer covers {} features, model expects {}",
                    s.n_features(),
                    self.input_dim()
                )));
            }
        }
        self.standardizer = stats;
        Ok(())
    }

    /// Forward pass over a batch (rows are points, already standardized).
    ///
    /// `apply_dropout` draws fresh inverted-dropout masks from `seed`; the
    /// same `(model, x, seed)` triple always reproduces the pass bit for
    /// bit. With `apply_dropout = false` the seed is ignored and the pass is
    /// deterministic.
    pub fn forward(&self, x: &Matrix<F>, apply_dropout: bool, seed: u64) -> Result<(Matrix<F>, ForwardTrace<F>)> {
        if x.cols() != self.input_dim() {
            return Err(Error::Dimension(format!(
                "input has {} features, model expects {}",
                x.cols(),
                self.input_dim()
            )));
        }
        if !x.is_finite() {
            return Err(Error::Numeric("non-finite value in forward input".into()));
        }
        if apply_dropout && self.dropout_rate == F::zero() {
            return Err(Error::Domain("dropout requested on a model with dropout rate 0".into()));
        }

        let mut rng = apply_dropout.then(|| ChaCha8Rng::seed_from_u64(seed));
        let mut activation = x.clone();
        let mut hidden = Vec::with_capacity(2);
        for layer in &self.layers[..2] {
            let pre = layer.affine(&activation);
            let relu = pre.map(|v| if v > F::zero() { v } else { F::zero() });
            let (post, mask) = match &mut rng {
                Some(rng) => {
                    let mask = self.sample_mask(relu.rows(), relu.cols(), rng);
                    (relu.hadamard(&mask), Some(mask))
                }
                None => (relu, None),
            };
            activation = post.clone();
            hidden.push(LayerTrace { pre, post, mask });
        }
        let logits = self.layers[2].affine(&activation);
        let probs = softmax_rows(&logits);

        let hidden: [LayerTrace<F>; 2] = hidden.try_into().expect("exactly two hidden layers");
        let trace = ForwardTrace { input: x.clone(), hidden, logits, probs: probs.clone() };
        Ok((probs, trace))
    }

    fn sample_mask(&self, rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Matrix<F> {
        let keep = 1.0 - self.dropout_rate.to_f64().expect("dropout rate is finite");
        let scale = real::<F>(1.0 / keep);
        let data = (0..rows * cols)
            .map(|_| if rng.random::<f64>() < keep { scale } else { F::zero() })
            .collect();
        Matrix::from_vec(rows, cols, data).expect("mask entries are finite")
    }

    /// Gradients of the mean class-weighted NLL for the traced batch, with
    /// respect to every parameter and to the input.
    ///
    /// The trace must come from `forward` on this very model; a trace whose
    /// shapes do not chain with the current layers is rejected.
    pub fn backward(&self, trace: &ForwardTrace<F>, labels: &[usize], weights: &ClassWeights<F>) -> Result<Gradients<F>> {
        self.check_trace(trace)?;
        weights.validate()?;
        let n = trace.batch_len();
        if n == 0 {
            return Err(Error::Domain("cannot backpropagate an empty batch".into()));
        }
        if labels.len() != n {
            return Err(Error::Dimension(format!("{} labels for a batch of {n}", labels.len())));
        }
        if let Some(bad) = labels.iter().find(|&&y| y > 1) {
            return Err(Error::Domain(format!("label {bad} is not binary")));
        }

        // Softmax + weighted NLL collapse to w_y * (p - onehot(y)) / n at
        // the logits.
        let inv_n = F::one() / real_of::<F>(n);
        let mut d_logits = trace.probs.clone();
        for (i, &y) in labels.iter().enumerate() {
            let w = weights.for_label(y) * inv_n;
            let row = d_logits.row_mut(i);
            row[y] = row[y] - F::one();
            for v in row.iter_mut() {
                *v = *v * w;
            }
        }

        let mut layer_grads = vec![
            LayerGrad { d_weights: Matrix::zeros(0, 0), d_bias: Vec::new() },
            LayerGrad { d_weights: Matrix::zeros(0, 0), d_bias: Vec::new() },
            LayerGrad { d_weights: Matrix::zeros(0, 0), d_bias: Vec::new() },
        ];

        layer_grads[2] = LayerGrad {
            d_weights: trace.hidden[1].post.transpose_matmul(&d_logits),
            d_bias: d_logits.col_sums(),
        };

        let mut delta = d_logits.matmul_transpose(self.layers[2].weights());
        for l in (0..2).rev() {
            let t = &trace.hidden[l];
            if let Some(mask) = &t.mask {
                delta = delta.hadamard(mask);
            }
            // ReLU subgradient: zero at zero.
            delta = delta.zip_map(&t.pre, |d, z| if z > F::zero() { d } else { F::zero() });
            let upstream = if l == 0 { &trace.input } else { &trace.hidden[l - 1].post };
            layer_grads[l] = LayerGrad {
                d_weights: upstream.transpose_matmul(&delta),
                d_bias: delta.col_sums(),
            };
            delta = delta.matmul_transpose(self.layers[l].weights());
        }

        Ok(Gradients { layers: layer_grads, d_input: delta })
    }

    fn check_trace(&self, trace: &ForwardTrace<F>) -> Result<()> {
        let n = trace.input.rows();
        let dims_ok = trace.input.cols() == self.input_dim()
            && trace.hidden[0].pre.shape() == (n, self.layers[0].out_dim())
            && trace.hidden[0].post.shape() == (n, self.layers[0].out_dim())
            && trace.hidden[1].pre.shape() == (n, self.layers[1].out_dim())
            && trace.hidden[1].post.shape() == (n, self.layers[1].out_dim())
            && trace.logits.shape() == (n, 2)
            && trace.probs.shape() == (n, 2);
        if !dims_ok {
            return Err(Error::State("forward trace does not match this model's shapes".into()));
        }
        Ok(())
    }

    /// Gradient of the (unit-weight) NLL with respect to the input, with the
    /// given labels assumed true. Dropout is off: perturbation sampling runs
    /// on the deterministic network. Class weights only rescale each row by
    /// a positive factor, so they cannot change the sign pattern this feeds.
    pub fn input_gradient(&self, x: &Matrix<F>, assumed_labels: &[usize]) -> Result<Matrix<F>> {
        let (_, trace) = self.forward(x, false, 0)?;
        let grads = self.backward(&trace, assumed_labels, &ClassWeights::uniform())?;
        Ok(grads.d_input)
    }
}

/// Row-wise softmax with max subtraction; each output row sums to 1.
fn softmax_rows<F: Scalar>(logits: &Matrix<F>) -> Matrix<F> {
    let mut out = logits.clone();
    for r in 0..out.rows() {
        let row = out.row_mut(r);
        let max = row.iter().copied().fold(F::neg_infinity(), F::max);
        let mut sum = F::zero();
        for v in row.iter_mut() {
            *v = (*v - max).exp();
            sum += *v;
        }
        for v in row.iter_mut() {
            *v = *v / sum;
        }
    }
    out
}

/// Mean class-weighted negative log likelihood of `labels` under `probs`.
/// Probabilities pass through the [`PROB_CLAMP_MIN`] clamp before the log,
/// so a confidently wrong row costs a large finite amount, never infinity.
pub fn nll_loss<F: Scalar>(probs: &Matrix<F>, labels: &[usize], weights: &ClassWeights<F>) -> Result<F> {
    if probs.rows() == 0 {
        return Err(Error::Domain("empty batch has no loss".into()));
    }
    if probs.cols() != 2 {
        return Err(Error::Dimension(format!("expected 2 probability columns, got {}", probs.cols())));
    }
    if labels.len() != probs.rows() {
        return Err(Error::Dimension(format!("{} labels for {} rows", labels.len(), probs.rows())));
    }
    weights.validate()?;
    let floor = real::<F>(PROB_CLAMP_MIN);
    let mut total = F::zero();
    for (i, &y) in labels.iter().enumerate() {
        if y > 1 {
            return Err(Error::Domain(format!("label {y} is not binary")));
        }
        let p = probs[(i, y)].max(floor).min(F::one());
        total += -(weights.for_label(y) * p.ln());
    }
    Ok(total / real_of::<F>(probs.rows()))
}

/// Elementwise sign with `sign(0) = 0`; that convention leaves exactly-zero
/// gradient coordinates unperturbed.
pub fn sign<F: Scalar>(m: &Matrix<F>) -> Matrix<F> {
    m.map(|v| {
        if v > F::zero() {
            F::one()
        } else if v < F::zero() {
            -F::one()
        } else {
            F::zero()
        }
    })
}
