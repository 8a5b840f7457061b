//! One JSON document describes a full experiment. Command-line flags
//! override exactly two of its fields (`seed` and `method`); everything
//! else lives in the file so the file is the experiment.
//!
//! A run's identity is the hash of (dataset, network, training, seed).
//! Method parameters are deliberately excluded: both scoring methods and
//! any eps_max sweep interrogate the same trained model, so they share its
//! run directory and write method-suffixed files instead of clobbering
//! each other.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Mcaa,
    Mcdropout,
}

impl Method {
    /// File-name suffix and user-facing name.
    pub fn name(self) -> &'static str {
        match self {
            Method::Mcaa => "mcaa",
            Method::Mcdropout => "mcdropout",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DatasetConfig {
    /// Two Gaussian clusters in the plane, half the points per class.
    Synthetic { n_points: usize, noise_std: f64, split: SplitConfig },
    Csv {
        path: PathBuf,
        label_column: String,
        /// Explicit feature list; omitted means every numeric column that
        /// is not the label, the timestep, or excluded.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        feature_columns: Option<Vec<String>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        timestep_column: Option<String>,
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        exclude_columns: Vec<String>,
        /// Raw label cell -> 0/1; rows with unmapped labels are dropped.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        label_map: Option<BTreeMap<String, usize>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        prune: Option<PruneConfig>,
        split: SplitConfig,
    },
}

impl DatasetConfig {
    pub fn split(&self) -> &SplitConfig {
        match self {
            DatasetConfig::Synthetic { split, .. } | DatasetConfig::Csv { split, .. } => split,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SplitConfig {
    /// Seeded shuffle cut into train/val/test by these fractions.
    Random { fractions: [f64; 3] },
    /// Timestep t <= train_end trains, t <= val_end validates, rest tests.
    Temporal { train_end: u32, val_end: u32 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PruneConfig {
    #[serde(default = "default_corr_cutoff")]
    pub corr_cutoff: f64,
    #[serde(default = "default_min_unique")]
    pub min_unique: usize,
}

fn default_corr_cutoff() -> f64 {
    mcaa::data::PruneParams::default().corr_cutoff
}

fn default_min_unique() -> usize {
    mcaa::data::PruneParams::default().min_unique
}

impl Default for PruneConfig {
    fn default() -> Self {
        PruneConfig { corr_cutoff: default_corr_cutoff(), min_unique: default_min_unique() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkConfig {
    pub hidden: [usize; 2],
    #[serde(default)]
    pub dropout_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainingConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    /// 0 = one batch per distinct timestep (needs a timestep column).
    pub batch_size: usize,
    #[serde(default = "default_class_weights")]
    pub class_weights: [f64; 2],
}

fn default_class_weights() -> [f64; 2] {
    [1.0, 1.0]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McaaConfig {
    pub eps_max: f64,
    /// Grid step; omitted means eps_max / 10 (a 21-point grid).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(default)]
    pub assumed_label: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McDropoutConfig {
    /// Stochastic forward passes per point. 21 matches the default
    /// MC-AA grid size, which keeps method comparisons even-handed.
    #[serde(default = "default_passes")]
    pub passes: usize,
}

fn default_passes() -> usize {
    21
}

impl Default for McDropoutConfig {
    fn default() -> Self {
        McDropoutConfig { passes: default_passes() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvaluationConfig {
    #[serde(default = "default_n_thresholds")]
    pub n_thresholds: usize,
}

fn default_n_thresholds() -> usize {
    mcaa::eval::DEFAULT_N_THRESHOLDS
}

impl Default for EvaluationConfig {
    fn default() -> Self {
        EvaluationConfig { n_thresholds: default_n_thresholds() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub candidates: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub dataset: DatasetConfig,
    pub network: NetworkConfig,
    pub training: TrainingConfig,
    #[serde(default = "default_method")]
    pub method: Method,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mcaa: Option<McaaConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mcdropout: Option<McDropoutConfig>,
    #[serde(default)]
    pub evaluation: EvaluationConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
    pub seed: u64,
}

fn default_method() -> Method {
    Method::Mcaa
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }

    /// Apply flag overrides, fill defaults that depend on other fields,
    /// and validate. The result is what every artifact embeds.
    pub fn resolve(mut self, seed: Option<u64>, method: Option<Method>) -> Result<Self> {
        if let Some(s) = seed {
            self.seed = s;
        }
        if let Some(m) = method {
            self.method = m;
        }
        if let Some(m) = self.mcaa.as_mut() {
            if m.beta.is_none() {
                m.beta = Some(m.eps_max / 10.0);
            }
        }
        self.validate()?;
        Ok(self)
    }

    /// Everything that can be rejected before touching data or weights.
    /// Deeper invariants (dataset contents, matrix shapes) are enforced by
    /// the operations themselves.
    pub fn validate(&self) -> Result<()> {
        let [h0, h1] = self.network.hidden;
        ensure!(h0 > 0 && h1 > 0, "hidden widths must be positive, got {:?}", self.network.hidden);
        let dr = self.network.dropout_rate;
        ensure!(dr.is_finite() && (0.0..1.0).contains(&dr), "dropout_rate must lie in [0, 1), got {dr}");

        let t = &self.training;
        ensure!(
            t.learning_rate.is_finite() && t.learning_rate > 0.0,
            "learning_rate must be finite and positive, got {}",
            t.learning_rate
        );
        ensure!(t.epochs > 0, "epochs must be at least 1");
        ensure!(
            t.class_weights.iter().all(|w| w.is_finite() && *w > 0.0),
            "class_weights must be finite and positive, got {:?}",
            t.class_weights
        );

        match &self.dataset {
            DatasetConfig::Synthetic { n_points, noise_std, split } => {
                ensure!(*n_points >= 2 && n_points % 2 == 0, "n_points must be even and at least 2, got {n_points}");
                ensure!(
                    noise_std.is_finite() && *noise_std > 0.0,
                    "noise_std must be finite and positive, got {noise_std}"
                );
                if matches!(split, SplitConfig::Temporal { .. }) {
                    bail!("synthetic data has no timesteps; use a random split");
                }
                if t.batch_size == 0 {
                    bail!("timestep batching (batch_size 0) needs a timestep column; synthetic data has none");
                }
            }
            DatasetConfig::Csv { timestep_column, prune, .. } => {
                if t.batch_size == 0 {
                    ensure!(timestep_column.is_some(), "timestep batching (batch_size 0) needs timestep_column");
                }
                if matches!(self.dataset.split(), SplitConfig::Temporal { .. }) {
                    ensure!(timestep_column.is_some(), "a temporal split needs timestep_column");
                }
                if let Some(p) = prune {
                    ensure!(
                        p.corr_cutoff.is_finite() && p.corr_cutoff > 0.0 && p.corr_cutoff <= 1.0,
                        "prune.corr_cutoff must lie in (0, 1], got {}",
                        p.corr_cutoff
                    );
                }
            }
        }
        match self.dataset.split() {
            SplitConfig::Random { fractions } => {
                ensure!(
                    fractions.iter().all(|f| f.is_finite() && *f > 0.0),
                    "split fractions must be positive, got {fractions:?}"
                );
                ensure!(
                    (fractions.iter().sum::<f64>() - 1.0).abs() <= 1e-9,
                    "split fractions must sum to 1, got {fractions:?}"
                );
            }
            SplitConfig::Temporal { train_end, val_end } => {
                ensure!(train_end < val_end, "temporal split needs train_end < val_end, got {train_end} >= {val_end}");
            }
        }

        match self.method {
            Method::Mcaa => {
                let Some(m) = &self.mcaa else {
                    bail!("method is mcaa but the config has no mcaa section");
                };
                ensure!(m.eps_max.is_finite() && m.eps_max > 0.0, "mcaa.eps_max must be finite and positive, got {}", m.eps_max);
                if let Some(b) = m.beta {
                    ensure!(b.is_finite() && b > 0.0 && b <= m.eps_max, "mcaa.beta must lie in (0, eps_max], got {b}");
                }
                ensure!(m.assumed_label <= 1, "mcaa.assumed_label must be 0 or 1, got {}", m.assumed_label);
            }
            Method::Mcdropout => {
                let Some(m) = &self.mcdropout else {
                    bail!("method is mcdropout but the config has no mcdropout section");
                };
                ensure!(m.passes >= 2, "mcdropout.passes must be at least 2, got {}", m.passes);
                ensure!(dr > 0.0, "mcdropout needs network.dropout_rate > 0");
            }
        }
        ensure!(self.evaluation.n_thresholds >= 2, "evaluation.n_thresholds must be at least 2");
        if let Some(s) = &self.sweep {
            ensure!(!s.candidates.is_empty(), "sweep.candidates must not be empty");
            ensure!(
                s.candidates.iter().all(|c| c.is_finite() && *c > 0.0),
                "sweep candidates must be finite and positive, got {:?}",
                s.candidates
            );
        }
        Ok(())
    }
}

/// What makes two runs the same run. Scoring and evaluation parameters are
/// left out on purpose; see the module comment.
#[derive(Serialize)]
struct RunIdentity<'a> {
    dataset: &'a DatasetConfig,
    network: &'a NetworkConfig,
    training: &'a TrainingConfig,
    seed: u64,
}

pub fn run_id(cfg: &ExperimentConfig) -> String {
    let ident = RunIdentity {
        dataset: &cfg.dataset,
        network: &cfg.network,
        training: &cfg.training,
        seed: cfg.seed,
    };
    let json = serde_json::to_string(&ident).expect("config serializes");
    let digest = Sha256::digest(json.as_bytes());
    let mut id = String::with_capacity(12);
    for b in &digest[..6] {
        id.push_str(&format!("{b:02x}"));
    }
    id
}

pub fn run_dir(out: &Path, cfg: &ExperimentConfig) -> PathBuf {
    out.join(run_id(cfg))
}
