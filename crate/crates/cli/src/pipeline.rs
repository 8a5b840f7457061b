//! The subcommands. Each one resolves the run directory from the config
//! hash, does its work through the library, and leaves artifacts that
//! embed their own provenance. Later stages find earlier stages' outputs
//! by convention (`model.json`, `scores-<method>.csv`), so a pipeline is
//! just the commands run in order against the same config and out root.

use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use mcaa::data::{self, CsvSchema, Dataset, FeatureSelection, LoadReport, PruneParams, RemovalRecord};
use mcaa::eval::{normalize_uncertainty, pr_curve, roc_auc, uncertainty_curves, UncertaintyRecord};
use mcaa::network::{ClassWeights, MlpModel};
use mcaa::sampler::{score_testset, EpsilonGrid, ScoreMethod};
use mcaa::seed;
use mcaa::standardize::StandardizerStats;
use mcaa::train::{train, TrainConfig};
use mcaa::{model_io, Real, RealDataset, RealMatrix, RealModel};
use serde::Serialize;

use crate::artifacts::{self, Provenance, SCORES_COLUMNS};
use crate::config::{run_dir, DatasetConfig, ExperimentConfig, Method, SplitConfig};

// Stream indices for seed::derive off the run seed. Training owns 1 and 2
// internally; these must stay clear of them.
const SYNTH_STREAM: u64 = 3;
const SPLIT_STREAM: u64 = 4;
const DROPOUT_SCORE_STREAM: u64 = 5;

pub struct Prepared {
    /// Standardized with statistics fitted on the train split.
    pub train: RealDataset,
    pub val: RealDataset,
    pub test: RealDataset,
    /// Test features in original units, for human-facing output.
    pub test_original: RealMatrix,
    pub stats: StandardizerStats<Real>,
    pub load: Option<LoadReport>,
    pub pruned: Vec<RemovalRecord>,
}

/// Load, prune, split, standardize. Deterministic in the config and seed,
/// so every command can rebuild the exact splits instead of persisting
/// them.
pub fn prepare(cfg: &ExperimentConfig) -> Result<Prepared> {
    let (full, load): (RealDataset, Option<LoadReport>) = match &cfg.dataset {
        DatasetConfig::Synthetic { n_points, noise_std, .. } => {
            let ds = data::gen_synthetic_2d(*n_points, *noise_std, seed::derive(cfg.seed, SYNTH_STREAM))?;
            (ds, None)
        }
        DatasetConfig::Csv {
            path,
            label_column,
            feature_columns,
            timestep_column,
            exclude_columns,
            label_map,
            ..
        } => {
            let schema = CsvSchema {
                label_column: label_column.clone(),
                features: match feature_columns {
                    Some(names) => FeatureSelection::Named(names.clone()),
                    None => FeatureSelection::Auto,
                },
                timestep_column: timestep_column.clone(),
                exclude_columns: exclude_columns.clone(),
                label_map: label_map.clone(),
            };
            let (ds, report) = data::load_csv(path, &schema)?;
            (ds, Some(report))
        }
    };

    let (full, pruned) = match &cfg.dataset {
        DatasetConfig::Csv { prune: Some(p), .. } => {
            let params = PruneParams { corr_cutoff: p.corr_cutoff, min_unique: p.min_unique };
            data::prune_features(&full, &params)?
        }
        _ => (full, Vec::new()),
    };
    ensure!(full.n_features() > 0, "no feature columns survived loading and pruning");

    let (train_set, val_set, test_set) = match cfg.dataset.split() {
        SplitConfig::Random { fractions: [a, b, c] } => {
            data::split_random(&full, (*a, *b, *c), seed::derive(cfg.seed, SPLIT_STREAM))?
        }
        SplitConfig::Temporal { train_end, val_end } => data::split_temporal(&full, *train_end, *val_end)?,
    };
    ensure!(test_set.n_rows() > 0, "test split is empty");

    let stats = StandardizerStats::fit(train_set.features())?;
    let test_original = test_set.features().clone();
    let standardize = |ds: &RealDataset| -> Result<RealDataset> {
        Ok(Dataset::new(
            stats.apply(ds.features())?,
            ds.labels().to_vec(),
            ds.timesteps().map(<[u32]>::to_vec),
            ds.feature_names().to_vec(),
        )?)
    };
    Ok(Prepared {
        train: standardize(&train_set)?,
        val: standardize(&val_set)?,
        test: standardize(&test_set)?,
        test_original,
        stats,
        load,
        pruned,
    })
}

#[derive(Serialize)]
struct DataReportDoc<'a> {
    command: &'a str,
    split_sizes: [usize; 3],
    train_class_counts: (usize, usize),
    feature_names: &'a [String],
    #[serde(skip_serializing_if = "Option::is_none")]
    load: &'a Option<LoadReport>,
    pruned: &'a [RemovalRecord],
    config: &'a ExperimentConfig,
}

pub fn cmd_train(cfg: &ExperimentConfig, out: &Path) -> Result<PathBuf> {
    let dir = run_dir(out, cfg);
    std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    println!("run {}", dir.display());

    let prepared = prepare(cfg)?;
    let model = MlpModel::new(
        prepared.train.n_features(),
        (cfg.network.hidden[0], cfg.network.hidden[1]),
        cfg.network.dropout_rate,
        cfg.seed,
    )?;
    let [w0, w1] = cfg.training.class_weights;
    let train_cfg = TrainConfig {
        learning_rate: cfg.training.learning_rate,
        epochs: cfg.training.epochs,
        batch_size: cfg.training.batch_size,
        class_weights: ClassWeights::new(w0, w1)?,
        dropout_rate: cfg.network.dropout_rate,
        seed: cfg.seed,
    };
    let (mut model, history) = train(model, &prepared.train, &prepared.val, &train_cfg)?;
    model.set_standardizer(Some(prepared.stats.clone()))?;

    let provenance = Provenance { command: "train".into(), config: cfg.clone() };
    model_io::save(&model, &dir.join("model.json"), Some(serde_json::to_value(&provenance)?))?;
    artifacts::write_csv(
        &dir.join("losses.csv"),
        "train",
        cfg,
        "epoch,train_loss,val_loss",
        history.iter().map(|e| format!("{},{},{}", e.epoch, e.train_loss, e.val_loss)),
    )?;
    artifacts::write_json(
        &dir.join("data-report.json"),
        &DataReportDoc {
            command: "train",
            split_sizes: [prepared.train.n_rows(), prepared.val.n_rows(), prepared.test.n_rows()],
            train_class_counts: prepared.train.class_counts(),
            feature_names: prepared.train.feature_names(),
            load: &prepared.load,
            pruned: &prepared.pruned,
            config: cfg,
        },
    )?;

    let last = history.last().expect("at least one epoch");
    println!("trained {} epochs: train loss {}, val loss {}", last.epoch, last.train_loss, last.val_loss);
    println!("wrote model.json, losses.csv, data-report.json");
    Ok(dir)
}

fn load_run_model(dir: &Path) -> Result<RealModel> {
    let path = dir.join("model.json");
    ensure!(path.exists(), "no model at {}; run train with this config first", path.display());
    let (model, _config) = model_io::load::<Real>(&path)?;
    Ok(model)
}

fn score_method(cfg: &ExperimentConfig) -> Result<ScoreMethod<Real>> {
    Ok(match cfg.method {
        Method::Mcaa => {
            let m = cfg.mcaa.as_ref().expect("validated");
            let beta = m.beta.expect("resolved");
            ScoreMethod::McAa {
                grid: EpsilonGrid::symmetric(m.eps_max, beta)?,
                assumed_label: m.assumed_label,
            }
        }
        Method::Mcdropout => {
            let m = cfg.mcdropout.as_ref().expect("validated");
            ScoreMethod::McDropout { passes: m.passes, seed: seed::derive(cfg.seed, DROPOUT_SCORE_STREAM) }
        }
    })
}

#[derive(Serialize)]
struct ScoreMetaDoc<'a> {
    command: &'a str,
    method: &'a str,
    n_test: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    grid_points: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    assumed_label: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    passes: Option<usize>,
    config: &'a ExperimentConfig,
}

pub fn cmd_score(cfg: &ExperimentConfig, out: &Path) -> Result<PathBuf> {
    let dir = run_dir(out, cfg);
    let model = load_run_model(&dir)?;
    let prepared = prepare(cfg)?;
    if let Some(stats) = model.standardizer() {
        ensure!(
            *stats == prepared.stats,
            "the stored model was standardized differently than this config's data; the run directory is stale"
        );
    }

    let method = score_method(cfg)?;
    let scores = score_testset(&model, prepared.test.features(), &method)?;
    let labels = prepared.test.labels();

    let name = cfg.method.name();
    artifacts::write_csv(
        &dir.join(format!("scores-{name}.csv")),
        "score",
        cfg,
        SCORES_COLUMNS,
        scores
            .iter()
            .map(|s| format!("{},{},{},{},{},{}", s.index, s.predicted, labels[s.index], s.p_mean[0], s.p_mean[1], s.mi)),
    )?;
    let (grid_points, assumed_label, passes) = match &method {
        ScoreMethod::McAa { grid, assumed_label } => (Some(grid.len()), Some(*assumed_label), None),
        ScoreMethod::McDropout { passes, .. } => (None, None, Some(*passes)),
    };
    artifacts::write_json(
        &dir.join(format!("metadata-{name}.json")),
        &ScoreMetaDoc {
            command: "score",
            method: name,
            n_test: scores.len(),
            grid_points,
            assumed_label,
            passes,
            config: cfg,
        },
    )?;

    let agree = scores.iter().filter(|s| s.predicted == labels[s.index]).count();
    println!("scored {} test points with {name} ({} predicted correctly)", scores.len(), agree);
    println!("wrote scores-{name}.csv, metadata-{name}.json");
    Ok(dir)
}

#[derive(Serialize)]
struct SummaryDoc<'a> {
    command: &'a str,
    method: &'a str,
    n_records: usize,
    n_incorrect: usize,
    scored_accuracy: f64,
    mean_mi: f64,
    auroc: f64,
    aupr: f64,
    config: &'a ExperimentConfig,
}

pub fn cmd_evaluate(cfg: &ExperimentConfig, out: &Path) -> Result<PathBuf> {
    let dir = run_dir(out, cfg);
    let name = cfg.method.name();
    let scores_path = dir.join(format!("scores-{name}.csv"));
    ensure!(scores_path.exists(), "no scores at {}; run score with this config first", scores_path.display());
    let (_prov, rows) = artifacts::read_scores(&scores_path)?;

    let records: Vec<UncertaintyRecord<Real>> = rows
        .iter()
        .map(|r| UncertaintyRecord { predicted: r.predicted, actual: r.actual, uncertainty: r.mi })
        .collect();

    // The threshold sweep goes to disk before the AUC attempt: a test set
    // the model gets entirely right has no ROC, but the sweep is still
    // well defined and still wanted.
    let curves = uncertainty_curves(&normalize_uncertainty(&records)?, cfg.evaluation.n_thresholds)?;
    artifacts::write_csv(
        &dir.join(format!("curves-{name}.csv")),
        "evaluate",
        cfg,
        "threshold,accuracy,npv,tpr,correct_certain,correct_uncertain,incorrect_certain,incorrect_uncertain",
        curves.iter().map(|r| {
            format!(
                "{},{},{},{},{},{},{},{}",
                r.t,
                r.accuracy,
                r.npv,
                r.tpr,
                r.counts.correct_certain,
                r.counts.correct_uncertain,
                r.counts.incorrect_certain,
                r.counts.incorrect_uncertain
            )
        }),
    )?;
    println!("wrote curves-{name}.csv");

    let (roc, auroc) = roc_auc(&records)?;
    let (pr, aupr) = pr_curve(&records)?;
    artifacts::write_csv(
        &dir.join(format!("roc-{name}.csv")),
        "evaluate",
        cfg,
        "fpr,tpr",
        roc.iter().map(|p| format!("{},{}", p.fpr, p.tpr)),
    )?;
    artifacts::write_csv(
        &dir.join(format!("pr-{name}.csv")),
        "evaluate",
        cfg,
        "recall,precision",
        pr.iter().map(|p| format!("{},{}", p.recall, p.precision)),
    )?;

    let n = records.len();
    let n_incorrect = records.iter().filter(|r| r.predicted != r.actual).count();
    artifacts::write_json(
        &dir.join(format!("summary-{name}.json")),
        &SummaryDoc {
            command: "evaluate",
            method: name,
            n_records: n,
            n_incorrect,
            scored_accuracy: (n - n_incorrect) as f64 / n as f64,
            mean_mi: records.iter().map(|r| r.uncertainty).sum::<f64>() / n as f64,
            auroc,
            aupr,
            config: cfg,
        },
    )?;
    println!("uncertainty AUROC {auroc}, AUPR {aupr} over {n} records");
    println!("wrote roc-{name}.csv, pr-{name}.csv, summary-{name}.json");
    Ok(dir)
}

#[derive(Serialize)]
struct SweepDoc<'a> {
    command: &'a str,
    method: &'a str,
    chosen_eps_max: f64,
    best_val_auroc: f64,
    config: &'a ExperimentConfig,
}

/// Validation-set AUROC for each eps_max candidate; ties go to the
/// smallest value. The grid keeps the default shape (beta = eps_max / 10)
/// so candidates differ only in reach, not in sample count.
pub fn cmd_sweep_epsmax(cfg: &ExperimentConfig, out: &Path) -> Result<PathBuf> {
    ensure!(cfg.method == Method::Mcaa, "sweep-epsmax tunes the mcaa grid; method is {}", cfg.method.name());
    let Some(sweep) = &cfg.sweep else {
        bail!("config has no sweep section");
    };
    let Some(mcaa_cfg) = &cfg.mcaa else {
        bail!("config has no mcaa section");
    };
    let dir = run_dir(out, cfg);
    let model = load_run_model(&dir)?;
    let prepared = prepare(cfg)?;
    ensure!(prepared.val.n_rows() > 0, "validation split is empty");

    let mut candidates = sweep.candidates.clone();
    candidates.sort_by(|a, b| a.partial_cmp(b).expect("validated finite"));
    candidates.dedup();

    let labels = prepared.val.labels();
    let mut table: Vec<(f64, f64)> = Vec::with_capacity(candidates.len());
    let mut best: Option<(f64, f64)> = None;
    for &eps in &candidates {
        let method = ScoreMethod::McAa {
            grid: EpsilonGrid::symmetric(eps, eps / 10.0)?,
            assumed_label: mcaa_cfg.assumed_label,
        };
        let scores = score_testset(&model, prepared.val.features(), &method)?;
        let records: Vec<UncertaintyRecord<Real>> = scores
            .iter()
            .map(|s| UncertaintyRecord { predicted: s.predicted, actual: labels[s.index], uncertainty: s.mi })
            .collect();
        let (_, auroc) = roc_auc(&records)
            .with_context(|| format!("validation AUROC is undefined at eps_max {eps}"))?;
        println!("eps_max {eps}: validation AUROC {auroc}");
        table.push((eps, auroc));
        // Strict > and ascending order keep the smallest of tied winners.
        if best.is_none_or(|(_, b)| auroc > b) {
            best = Some((eps, auroc));
        }
    }
    let (chosen, best_auroc) = best.expect("candidates are nonempty");

    artifacts::write_csv(
        &dir.join("sweep.csv"),
        "sweep-epsmax",
        cfg,
        "eps_max,val_auroc",
        table.iter().map(|(e, a)| format!("{e},{a}")),
    )?;
    artifacts::write_json(
        &dir.join("sweep.json"),
        &SweepDoc {
            command: "sweep-epsmax",
            method: "mcaa",
            chosen_eps_max: chosen,
            best_val_auroc: best_auroc,
            config: cfg,
        },
    )?;
    println!("chose eps_max {chosen} (validation AUROC {best_auroc})");
    println!("wrote sweep.csv, sweep.json");
    Ok(dir)
}

/// Train, score, and evaluate on the synthetic task, plus a point cloud of
/// (x1, x2, mi, label) over the test split in original units for plotting
/// the uncertainty band.
pub fn cmd_synth_demo(cfg: &ExperimentConfig, out: &Path) -> Result<PathBuf> {
    ensure!(
        matches!(cfg.dataset, DatasetConfig::Synthetic { .. }),
        "synth-demo needs a synthetic dataset config"
    );
    let dir = cmd_train(cfg, out)?;
    cmd_score(cfg, out)?;

    let prepared = prepare(cfg)?;
    let name = cfg.method.name();
    let (_prov, rows) = artifacts::read_scores(&dir.join(format!("scores-{name}.csv")))?;
    ensure!(rows.len() == prepared.test.n_rows(), "scores do not cover the test split");
    artifacts::write_csv(
        &dir.join("cloud.csv"),
        "synth-demo",
        cfg,
        "x1,x2,mi,label",
        rows.iter().map(|r| {
            format!(
                "{},{},{},{}",
                prepared.test_original[(r.index, 0)],
                prepared.test_original[(r.index, 1)],
                r.mi,
                r.actual
            )
        }),
    )?;
    println!("wrote cloud.csv");

    cmd_evaluate(cfg, out)?;
    Ok(dir)
}

/// Replay the pipeline recorded in an artifact's provenance. Stages are
/// rebuilt from scratch in their own out root, so a replayed artifact is
/// byte-identical to the original.
pub fn cmd_rerun(artifact: &Path, out: &Path) -> Result<PathBuf> {
    let prov = artifacts::provenance_of_file(artifact)?;
    let cfg = &prov.config;
    cfg.validate()?;
    println!("replaying {} from {}", prov.command, artifact.display());
    match prov.command.as_str() {
        "train" => cmd_train(cfg, out),
        "score" => {
            cmd_train(cfg, out)?;
            cmd_score(cfg, out)
        }
        "evaluate" => {
            cmd_train(cfg, out)?;
            cmd_score(cfg, out)?;
            cmd_evaluate(cfg, out)
        }
        "sweep-epsmax" => {
            cmd_train(cfg, out)?;
            cmd_sweep_epsmax(cfg, out)
        }
        "synth-demo" => cmd_synth_demo(cfg, out),
        other => bail!("unknown command {other:?} in the reproducibility header"),
    }
}
