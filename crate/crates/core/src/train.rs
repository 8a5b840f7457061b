//! Minibatch training of the two-hidden-layer network with Adam.
//!
//! Every source of randomness (shuffling, dropout masks) derives from the
//! config seed through fixed streams, so a training run is a pure function
//! of (initial model, data, config).

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::network::{nll_loss, ClassWeights, Gradients, MlpModel};
use crate::scalar::{real, real_of, Scalar};
use crate::seed;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig<F> {
    pub learning_rate: F,
    pub epochs: usize,
    /// Rows per minibatch, shuffled fresh each epoch. 0 switches to
    /// timestep batching: one batch per distinct timestep, in time order,
    /// which requires the dataset to carry timesteps.
    pub batch_size: usize,
    pub class_weights: ClassWeights<F>,
    /// Must equal the model's own rate; kept in the config so a run is
    /// fully described by it.
    pub dropout_rate: F,
    pub seed: u64,
}

impl<F: Scalar> TrainConfig<F> {
    pub fn validate(&self) -> Result<()> {
        if !self.learning_rate.is_finite() || self.learning_rate <= F::zero() {
            return Err(Error::Domain(format!("learning rate must be finite and positive, got {}", self.learning_rate)));
        }
        if self.epochs == 0 {
            return Err(Error::Domain("zero epochs trains nothing".into()));
        }
        self.class_weights.validate()?;
        if !self.dropout_rate.is_finite() || self.dropout_rate < F::zero() || self.dropout_rate >= F::one() {
            return Err(Error::Domain(format!("dropout rate must lie in [0, 1), got {}", self.dropout_rate)));
        }
        Ok(())
    }
}

/// Loss trajectory entry; `epoch` is 1-based. The train loss is averaged
/// over the minibatch passes of the epoch (with dropout active if the model
/// uses it); the validation loss is a deterministic full pass.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochLoss<F> {
    pub epoch: usize,
    pub train_loss: F,
    pub val_loss: F,
}

struct LayerMoments<F> {
    m_weights: Matrix<F>,
    v_weights: Matrix<F>,
    m_bias: Vec<F>,
    v_bias: Vec<F>,
}

/// First and second moment estimates for every parameter, plus running
/// powers of the decay rates for bias correction.
pub struct AdamState<F> {
    step: u64,
    beta1: F,
    beta2: F,
    epsilon: F,
    beta1_power: F,
    beta2_power: F,
    layers: Vec<LayerMoments<F>>,
}

impl<F: Scalar> AdamState<F> {
    /// Zero moments shaped like `model`, with the standard decay rates
    /// 0.9 / 0.999 and epsilon 1e-8.
    pub fn new(model: &MlpModel<F>) -> Self {
        let layers = model
            .layers()
            .iter()
            .map(|l| LayerMoments {
                m_weights: Matrix::zeros(l.in_dim(), l.out_dim()),
                v_weights: Matrix::zeros(l.in_dim(), l.out_dim()),
                m_bias: vec![F::zero(); l.out_dim()],
                v_bias: vec![F::zero(); l.out_dim()],
            })
            .collect();
        AdamState {
            step: 0,
            beta1: real(0.9),
            beta2: real(0.999),
            epsilon: real(1e-8),
            beta1_power: F::one(),
            beta2_power: F::one(),
            layers,
        }
    }

    pub fn step(&self) -> u64 {
        self.step
    }
}

/// One Adam update of every model parameter in place.
///
/// Bias-corrected: m_hat = m / (1 - beta1^t), v_hat likewise, and the
/// parameter moves by -lr * m_hat / (sqrt(v_hat) + eps). Errors if the
/// update produces a non-finite parameter (diverged training surfaces here
/// instead of as NaN probabilities later).
pub fn adam_step<F: Scalar>(
    model: &mut MlpModel<F>,
    grads: &Gradients<F>,
    state: &mut AdamState<F>,
    learning_rate: F,
) -> Result<()> {
    if !learning_rate.is_finite() || learning_rate <= F::zero() {
        return Err(Error::Domain(format!("learning rate must be finite and positive, got {learning_rate}")));
    }
    if grads.layers.len() != model.layers().len() || state.layers.len() != model.layers().len() {
        return Err(Error::State(format!(
            "gradient/state layer counts ({}, {}) do not match the model ({})",
            grads.layers.len(),
            state.layers.len(),
            model.layers().len()
        )));
    }
    for l in 0..model.layers().len() {
        let shape = model.layer(l).weights().shape();
        if grads.layers[l].d_weights.shape() != shape || grads.layers[l].d_bias.len() != shape.1 {
            return Err(Error::State(format!("gradient shapes for layer {l} do not match the model")));
        }
        if state.layers[l].m_weights.shape() != shape || state.layers[l].m_bias.len() != shape.1 {
            return Err(Error::State(format!("optimizer state for layer {l} was built for a different model")));
        }
    }

    state.step += 1;
    state.beta1_power *= state.beta1;
    state.beta2_power *= state.beta2;
    let correction1 = F::one() - state.beta1_power;
    let correction2 = F::one() - state.beta2_power;
    let one = F::one();

    for l in 0..state.layers.len() {
        let grad = &grads.layers[l];
        let moments = &mut state.layers[l];
        let layer = model.layer_mut(l);
        let (rows, cols) = layer.weights().shape();
        for r in 0..rows {
            for c in 0..cols {
                let g = grad.d_weights[(r, c)];
                let m = &mut moments.m_weights[(r, c)];
                let v = &mut moments.v_weights[(r, c)];
                *m = state.beta1 * *m + (one - state.beta1) * g;
                *v = state.beta2 * *v + (one - state.beta2) * g * g;
                let m_hat = *m / correction1;
                let v_hat = *v / correction2;
                layer.weights_mut()[(r, c)] -= learning_rate * m_hat / (v_hat.sqrt() + state.epsilon);
            }
        }
        for c in 0..cols {
            let g = grad.d_bias[c];
            let m = &mut moments.m_bias[c];
            let v = &mut moments.v_bias[c];
            *m = state.beta1 * *m + (one - state.beta1) * g;
            *v = state.beta2 * *v + (one - state.beta2) * g * g;
            let m_hat = *m / correction1;
            let v_hat = *v / correction2;
            layer.bias_mut()[c] -= learning_rate * m_hat / (v_hat.sqrt() + state.epsilon);
        }
        if !layer.weights().is_finite() || layer.bias().iter().any(|b| !b.is_finite()) {
            return Err(Error::Numeric(format!("training diverged: non-finite parameter in layer {l}")));
        }
    }
    Ok(())
}

/// Row indices grouped by timestep, groups in ascending time order.
pub fn timestep_groups(timesteps: &[u32]) -> Vec<Vec<usize>> {
    let mut by_time: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
    for (i, &t) in timesteps.iter().enumerate() {
        by_time.entry(t).or_default().push(i);
    }
    by_time.into_values().collect()
}

/// Train `model` on `train_set`, tracking the validation loss each epoch.
/// Returns the trained model and the loss history.
pub fn train<F: Scalar>(
    mut model: MlpModel<F>,
    train_set: &Dataset<F>,
    val_set: &Dataset<F>,
    cfg: &TrainConfig<F>,
) -> Result<(MlpModel<F>, Vec<EpochLoss<F>>)> {
    cfg.validate()?;
    if cfg.dropout_rate != model.dropout_rate() {
        return Err(Error::State(format!(
            "config dropout rate {} does not match the model's {}",
            cfg.dropout_rate,
            model.dropout_rate()
        )));
    }
    if train_set.n_rows() == 0 {
        return Err(Error::Domain("empty training set".into()));
    }
    if val_set.n_rows() == 0 {
        return Err(Error::Domain("empty validation set".into()));
    }
    for (name, set) in [("training", train_set), ("validation", val_set)] {
        if set.n_features() != model.input_dim() {
            return Err(Error::Dimension(format!(
                "{name} set has {} features, model expects {}",
                set.n_features(),
                model.input_dim()
            )));
        }
    }
    let (zeros, ones) = train_set.class_counts();
    if zeros == 0 || ones == 0 {
        return Err(Error::Domain("training labels are single-class; nothing separates".into()));
    }

    let fixed_batches: Option<Vec<Vec<usize>>> = if cfg.batch_size == 0 {
        match train_set.timesteps() {
            Some(ts) => Some(timestep_groups(ts)),
            None => {
                return Err(Error::Domain("batch_size 0 asks for timestep batches, but the dataset has no timesteps".into()))
            }
        }
    } else {
        None
    };

    let shuffle_root = seed::derive(cfg.seed, 1);
    let dropout_root = seed::derive(cfg.seed, 2);
    let apply_dropout = model.dropout_rate() > F::zero();
    let mut adam = AdamState::new(&model);
    let mut history = Vec::with_capacity(cfg.epochs);
    let mut pass_counter = 0u64;

    for epoch in 1..=cfg.epochs {
        let batches: Vec<Vec<usize>> = match &fixed_batches {
            Some(groups) => groups.clone(),
            None => {
                let mut order: Vec<usize> = (0..train_set.n_rows()).collect();
                let mut rng = ChaCha8Rng::seed_from_u64(seed::derive(shuffle_root, epoch as u64));
                order.shuffle(&mut rng);
                order.chunks(cfg.batch_size).map(|c| c.to_vec()).collect()
            }
        };

        let mut loss_sum = F::zero();
        let mut rows_seen = 0usize;
        for batch in &batches {
            let x = train_set.features().gather_rows(batch);
            let labels: Vec<usize> = batch.iter().map(|&i| train_set.labels()[i]).collect();
            let (probs, trace) = model.forward(&x, apply_dropout, seed::derive(dropout_root, pass_counter))?;
            pass_counter += 1;
            let loss = nll_loss(&probs, &labels, &cfg.class_weights)?;
            loss_sum += loss * real_of::<F>(batch.len());
            rows_seen += batch.len();
            let grads = model.backward(&trace, &labels, &cfg.class_weights)?;
            adam_step(&mut model, &grads, &mut adam, cfg.learning_rate)?;
        }

        let (val_probs, _) = model.forward(val_set.features(), false, 0)?;
        let val_loss = nll_loss(&val_probs, val_set.labels(), &cfg.class_weights)?;
        history.push(EpochLoss {
            epoch,
            train_loss: loss_sum / real_of::<F>(rows_seen),
            val_loss,
        });
    }
    Ok((model, history))
}

/// Deterministic class predictions and the probability rows behind them.
/// An exact probability tie resolves to class 0.
pub fn predict<F: Scalar>(model: &MlpModel<F>, x: &Matrix<F>) -> Result<(Vec<usize>, Matrix<F>)> {
    let (probs, _) = model.forward(x, false, 0)?;
    let labels = (0..probs.rows()).map(|r| usize::from(probs[(r, 1)] > probs[(r, 0)])).collect();
    Ok((labels, probs))
}

/// Fraction of agreeing positions.
pub fn accuracy<F: Scalar>(predicted: &[usize], actual: &[usize]) -> Result<F> {
    if predicted.len() != actual.len() {
        return Err(Error::Dimension(format!(
            "{} predictions against {} labels",
            predicted.len(),
            actual.len()
        )));
    }
    if predicted.is_empty() {
        return Err(Error::Domain("accuracy of an empty set".into()));
    }
    let hits = predicted.iter().zip(actual).filter(|(p, a)| p == a).count();
    Ok(real_of::<F>(hits) / real_of::<F>(predicted.len()))
}
