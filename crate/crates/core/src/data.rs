//! Datasets: the in-memory container, a synthetic two-cluster generator,
//! CSV ingestion, feature pruning, and train/val/test splits.
//!
//! Ingestion is deliberately forgiving about rows and strict about schema:
//! a row whose label or timestep does not parse is dropped and counted,
//! while a feature column the schema names explicitly must parse in every
//! kept row or loading fails. Auto-selected columns that turn out
//! non-numeric are dropped and reported instead.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::scalar::{real, Scalar};

/// Feature matrix with aligned labels, optional timesteps, and column names.
/// Labels are always 0 or 1.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset<F> {
    features: Matrix<F>,
    labels: Vec<usize>,
    timesteps: Option<Vec<u32>>,
    feature_names: Vec<String>,
}

impl<F: Scalar> Dataset<F> {
    pub fn new(
        features: Matrix<F>,
        labels: Vec<usize>,
        timesteps: Option<Vec<u32>>,
        feature_names: Vec<String>,
    ) -> Result<Self> {
        if labels.len() != features.rows() {
            return Err(Error::Dimension(format!(
                "{} labels for {} feature rows",
                labels.len(),
                features.rows()
            )));
        }
        if let Some(bad) = labels.iter().find(|&&l| l > 1) {
            return Err(Error::Domain(format!("label {bad} is not binary")));
        }
        if let Some(ts) = &timesteps {
            if ts.len() != features.rows() {
                return Err(Error::Dimension(format!(
                    "{} timesteps for {} feature rows",
                    ts.len(),
                    features.rows()
                )));
            }
        }
        if feature_names.len() != features.cols() {
            return Err(Error::Dimension(format!(
                "{} feature names for {} columns",
                feature_names.len(),
                features.cols()
            )));
        }
        Ok(Dataset { features, labels, timesteps, feature_names })
    }

    /// Dataset without timesteps, columns named x1..xd.
    pub fn from_features(features: Matrix<F>, labels: Vec<usize>) -> Result<Self> {
        let names = (1..=features.cols()).map(|i| format!("x{i}")).collect();
        Dataset::new(features, labels, None, names)
    }

    pub fn n_rows(&self) -> usize {
        self.features.rows()
    }

    pub fn n_features(&self) -> usize {
        self.features.cols()
    }

    pub fn features(&self) -> &Matrix<F> {
        &self.features
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn timesteps(&self) -> Option<&[u32]> {
        self.timesteps.as_deref()
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn class_counts(&self) -> (usize, usize) {
        let ones = self.labels.iter().filter(|&&l| l == 1).count();
        (self.labels.len() - ones, ones)
    }

    /// Subset by row indices, in the given order. Indices may repeat.
    pub fn select_rows(&self, idx: &[usize]) -> Result<Self> {
        if let Some(&bad) = idx.iter().find(|&&i| i >= self.n_rows()) {
            return Err(Error::Domain(format!("row index {bad} out of range for {} rows", self.n_rows())));
        }
        Ok(Dataset {
            features: self.features.gather_rows(idx),
            labels: idx.iter().map(|&i| self.labels[i]).collect(),
            timesteps: self.timesteps.as_ref().map(|ts| idx.iter().map(|&i| ts[i]).collect()),
            feature_names: self.feature_names.clone(),
        })
    }

    fn select_columns(&self, keep: &[usize]) -> Self {
        let mut data = Vec::with_capacity(self.n_rows() * keep.len());
        for r in 0..self.n_rows() {
            let row = self.features.row(r);
            data.extend(keep.iter().map(|&c| row[c]));
        }
        Dataset {
            features: Matrix::from_vec(self.n_rows(), keep.len(), data).unwrap(),
            labels: self.labels.clone(),
            timesteps: self.timesteps.clone(),
            feature_names: keep.iter().map(|&c| self.feature_names[c].clone()).collect(),
        }
    }
}

/// Two Gaussian clusters in the plane: `n_total / 2` class-0 points around
/// (0, 0) and as many class-1 points around (1, 1), both with isotropic
/// standard deviation `noise_std`. Rows come out class 0 first.
pub fn gen_synthetic_2d<F: Scalar>(n_total: usize, noise_std: f64, seed: u64) -> Result<Dataset<F>> {
    if n_total < 2 || n_total % 2 != 0 {
        return Err(Error::Domain(format!("need an even number of points >= 2, got {n_total}")));
    }
    if !noise_std.is_finite() || noise_std <= 0.0 {
        return Err(Error::Domain(format!("noise std must be finite and positive, got {noise_std}")));
    }
    let noise = Normal::new(0.0, noise_std).map_err(|e| Error::Domain(format!("bad noise distribution: {e}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let half = n_total / 2;
    let mut data = Vec::with_capacity(n_total * 2);
    let mut labels = Vec::with_capacity(n_total);
    for (center, label) in [(0.0, 0usize), (1.0, 1usize)] {
        for _ in 0..half {
            data.push(real::<F>(center + noise.sample(&mut rng)));
            data.push(real::<F>(center + noise.sample(&mut rng)));
            labels.push(label);
        }
    }
    let features = Matrix::from_vec(n_total, 2, data)?;
    Dataset::new(features, labels, None, vec!["x1".into(), "x2".into()])
}

/// Which columns become features.
#[derive(Debug, Clone, PartialEq)]
pub enum FeatureSelection {
    /// Every column except label, timestep, and exclusions; columns with
    /// any non-numeric value are dropped and reported.
    Auto,
    /// Exactly these columns, in this order; a non-numeric value anywhere
    /// in them is a load error.
    Named(Vec<String>),
}

/// How to read a labeled CSV file. The file must have a header row.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvSchema {
    pub label_column: String,
    pub features: FeatureSelection,
    pub timestep_column: Option<String>,
    /// Dropped before feature selection; names absent from the header are
    /// ignored.
    pub exclude_columns: Vec<String>,
    /// Maps raw label cells to 0/1. Without it, cells must literally be
    /// integers 0 or 1. Rows whose label is absent from the map (or does
    /// not parse) are dropped and counted, which is how partially labeled
    /// data gets filtered.
    pub label_map: Option<BTreeMap<String, usize>>,
}

impl CsvSchema {
    pub fn auto(label_column: impl Into<String>) -> Self {
        CsvSchema {
            label_column: label_column.into(),
            features: FeatureSelection::Auto,
            timestep_column: None,
            exclude_columns: Vec::new(),
            label_map: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RemovalRecord {
    pub column: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct LoadReport {
    /// Data rows seen (header excluded).
    pub rows_read: usize,
    /// Rows skipped for an unusable label or timestep.
    pub rows_dropped: usize,
    /// Auto-selected columns removed for non-numeric content.
    pub columns_dropped: Vec<RemovalRecord>,
}

fn open_reader(path: &Path) -> Result<csv::Reader<std::fs::File>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(file))
}

fn parse_label(cell: &str, map: &Option<BTreeMap<String, usize>>) -> Option<usize> {
    match map {
        Some(m) => m.get(cell).copied(),
        None => match cell.parse::<i64>() {
            Ok(0) => Some(0),
            Ok(1) => Some(1),
            _ => None,
        },
    }
}

/// Load a CSV per `schema`. Two streaming passes: the first decides which
/// rows and columns survive, the second fills a preallocated matrix, so
/// memory stays proportional to the kept data. A zero-byte file yields an
/// empty dataset.
pub fn load_csv<F: Scalar>(path: &Path, schema: &CsvSchema) -> Result<(Dataset<F>, LoadReport)> {
    if let Some(m) = &schema.label_map {
        if let Some((k, v)) = m.iter().find(|(_, &v)| v > 1) {
            return Err(Error::Config(format!("label map sends '{k}' to {v}, which is not binary")));
        }
    }
    let meta = std::fs::metadata(path).map_err(|e| Error::io(path, e))?;
    if meta.len() == 0 {
        let timesteps = schema.timestep_column.as_ref().map(|_| Vec::new());
        let ds = Dataset::new(Matrix::zeros(0, 0), Vec::new(), timesteps, Vec::new())?;
        return Ok((ds, LoadReport::default()));
    }

    let mut reader = open_reader(path)?;
    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| Error::parse(path, 1, e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();
    let find = |name: &str| headers.iter().position(|h| h == name);

    let label_idx = find(&schema.label_column)
        .ok_or_else(|| Error::Config(format!("label column '{}' not found in {}", schema.label_column, path.display())))?;
    let timestep_idx = match &schema.timestep_column {
        Some(name) => Some(find(name).ok_or_else(|| {
            Error::Config(format!("timestep column '{name}' not found in {}", path.display()))
        })?),
        None => None,
    };
    let excluded: HashSet<&str> = schema.exclude_columns.iter().map(String::as_str).collect();
    if excluded.contains(schema.label_column.as_str()) {
        return Err(Error::Config(format!("label column '{}' cannot be excluded", schema.label_column)));
    }

    // Candidate feature columns as (name, header index).
    let candidates: Vec<(String, usize)> = match &schema.features {
        FeatureSelection::Auto => headers
            .iter()
            .enumerate()
            .filter(|&(i, h)| i != label_idx && Some(i) != timestep_idx && !excluded.contains(h.as_str()))
            .map(|(i, h)| (h.clone(), i))
            .collect(),
        FeatureSelection::Named(names) => names
            .iter()
            .map(|name| {
                let i = find(name).ok_or_else(|| {
                    Error::Config(format!("feature column '{name}' not found in {}", path.display()))
                })?;
                if i == label_idx || Some(i) == timestep_idx || excluded.contains(name.as_str()) {
                    return Err(Error::Config(format!(
                        "column '{name}' is named as a feature but also serves as label/timestep or is excluded"
                    )));
                }
                Ok((name.clone(), i))
            })
            .collect::<Result<_>>()?,
    };
    let strict = matches!(schema.features, FeatureSelection::Named(_));

    // Pass 1: decide row keep/drop and column survival.
    let mut report = LoadReport::default();
    let mut kept_rows: Vec<bool> = Vec::new();
    let mut alive = vec![true; candidates.len()];
    let mut death: Vec<Option<String>> = vec![None; candidates.len()];
    for record in reader.records() {
        let record = record.map_err(|e| Error::parse(path, report.rows_read + 2, e.to_string()))?;
        report.rows_read += 1;
        let line = report.rows_read + 1;

        let keep = parse_label(&record[label_idx], &schema.label_map).is_some()
            && timestep_idx.map_or(true, |i| record[i].parse::<u32>().is_ok());
        kept_rows.push(keep);
        if !keep {
            report.rows_dropped += 1;
            continue;
        }
        for (c, (name, col)) in candidates.iter().enumerate() {
            if !alive[c] {
                continue;
            }
            let cell = &record[*col];
            if cell.parse::<f64>().map_or(true, |v| !v.is_finite()) {
                if strict {
                    return Err(Error::parse(path, line, format!("column '{name}': cannot read '{cell}' as a number")));
                }
                alive[c] = false;
                death[c] = Some(format!("non-numeric value '{cell}' at line {line}"));
            }
        }
    }
    for (c, (name, _)) in candidates.iter().enumerate() {
        if !alive[c] {
            report.columns_dropped.push(RemovalRecord { column: name.clone(), reason: death[c].take().unwrap() });
        }
    }
    let survivors: Vec<(String, usize)> =
        candidates.into_iter().zip(&alive).filter(|(_, &a)| a).map(|(c, _)| c).collect();

    // Pass 2: fill the matrix for the rows pass 1 kept.
    let n_kept = kept_rows.iter().filter(|&&k| k).count();
    let mut data = Vec::with_capacity(n_kept * survivors.len());
    let mut labels = Vec::with_capacity(n_kept);
    let mut timesteps: Option<Vec<u32>> = timestep_idx.map(|_| Vec::with_capacity(n_kept));
    let mut reader = open_reader(path)?;
    for (r, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::parse(path, r + 2, e.to_string()))?;
        if !kept_rows.get(r).copied().unwrap_or(false) {
            continue;
        }
        let line = r + 2;
        labels.push(parse_label(&record[label_idx], &schema.label_map).ok_or_else(|| {
            Error::parse(path, line, "file changed between read passes".to_string())
        })?);
        if let (Some(ts), Some(i)) = (&mut timesteps, timestep_idx) {
            ts.push(record[i].parse::<u32>().map_err(|_| {
                Error::parse(path, line, "file changed between read passes".to_string())
            })?);
        }
        for (name, col) in &survivors {
            let v: f64 = record[*col].parse().map_err(|_| {
                Error::parse(path, line, format!("column '{name}': file changed between read passes"))
            })?;
            data.push(real::<F>(v));
        }
    }

    let features = Matrix::from_vec(n_kept, survivors.len(), data)?;
    let names = survivors.into_iter().map(|(n, _)| n).collect();
    let ds = Dataset::new(features, labels, timesteps, names)?;
    Ok((ds, report))
}

/// Cutoffs for [`prune_features`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PruneParams {
    /// Pairwise |Pearson r| above which the later column goes.
    pub corr_cutoff: f64,
    /// Columns with fewer distinct values than this go.
    pub min_unique: usize,
}

impl Default for PruneParams {
    fn default() -> Self {
        PruneParams { corr_cutoff: 0.9, min_unique: 10 }
    }
}

/// Drop uninformative columns in three passes: zero variance first, then
/// near-duplicates by correlation (keeping the earlier column of each
/// offending pair), then columns with too few distinct values. Row set and
/// labels are untouched.
pub fn prune_features<F: Scalar>(
    ds: &Dataset<F>,
    params: &PruneParams,
) -> Result<(Dataset<F>, Vec<RemovalRecord>)> {
    if !(params.corr_cutoff.is_finite() && params.corr_cutoff > 0.0 && params.corr_cutoff <= 1.0) {
        return Err(Error::Domain(format!("correlation cutoff must lie in (0, 1], got {}", params.corr_cutoff)));
    }
    if ds.n_rows() == 0 {
        return Err(Error::Domain("cannot prune features of an empty dataset".into()));
    }
    let n = ds.n_rows();
    let d = ds.n_features();
    let nf = real::<F>(n as f64);
    let mut removals = Vec::new();

    let col = |c: usize| (0..n).map(move |r| ds.features()[(r, c)]);
    let mut keep: Vec<usize> = Vec::new();
    for c in 0..d {
        let (mut lo, mut hi) = (ds.features()[(0, c)], ds.features()[(0, c)]);
        for v in col(c) {
            lo = lo.min(v);
            hi = hi.max(v);
        }
        if lo == hi {
            removals.push(RemovalRecord { column: ds.feature_names()[c].clone(), reason: "zero variance".into() });
        } else {
            keep.push(c);
        }
    }

    // Population moments for the correlation pass; zero-variance columns
    // are gone, so every std here is positive.
    let mean: Vec<F> = (0..d).map(|c| col(c).sum::<F>() / nf).collect();
    let std: Vec<F> = (0..d)
        .map(|c| (col(c).map(|v| (v - mean[c]) * (v - mean[c])).sum::<F>() / nf).sqrt())
        .collect();
    let corr = |a: usize, b: usize| {
        let cov = (0..n).map(|r| (ds.features()[(r, a)] - mean[a]) * (ds.features()[(r, b)] - mean[b])).sum::<F>() / nf;
        cov / (std[a] * std[b])
    };
    let mut uncorrelated: Vec<usize> = Vec::new();
    for &c in &keep {
        match uncorrelated.iter().find(|&&k| corr(k, c).abs() > real(params.corr_cutoff)) {
            Some(&k) => removals.push(RemovalRecord {
                column: ds.feature_names()[c].clone(),
                reason: format!("|r| = {:.3} with '{}'", corr(k, c).abs(), ds.feature_names()[k]),
            }),
            None => uncorrelated.push(c),
        }
    }

    let mut survivors: Vec<usize> = Vec::new();
    for &c in &uncorrelated {
        // Distinct by bit pattern, with -0.0 folded into +0.0.
        let distinct: BTreeSet<u64> =
            col(c).map(|v| (v.to_f64().unwrap() + 0.0).to_bits()).collect();
        if distinct.len() < params.min_unique {
            removals.push(RemovalRecord {
                column: ds.feature_names()[c].clone(),
                reason: format!("only {} distinct values", distinct.len()),
            });
        } else {
            survivors.push(c);
        }
    }

    Ok((ds.select_columns(&survivors), removals))
}

/// Split on the timestep column: rows with t <= `train_end` train, rows
/// with t <= `val_end` validate, the rest test.
pub fn split_temporal<F: Scalar>(
    ds: &Dataset<F>,
    train_end: u32,
    val_end: u32,
) -> Result<(Dataset<F>, Dataset<F>, Dataset<F>)> {
    let Some(ts) = ds.timesteps() else {
        return Err(Error::Domain("temporal split needs a dataset with timesteps".into()));
    };
    if train_end >= val_end {
        return Err(Error::Domain(format!("split boundaries must satisfy train_end < val_end, got {train_end} >= {val_end}")));
    }
    let mut parts: [Vec<usize>; 3] = [Vec::new(), Vec::new(), Vec::new()];
    for (i, &t) in ts.iter().enumerate() {
        let slot = if t <= train_end { 0 } else if t <= val_end { 1 } else { 2 };
        parts[slot].push(i);
    }
    Ok((ds.select_rows(&parts[0])?, ds.select_rows(&parts[1])?, ds.select_rows(&parts[2])?))
}

/// Seeded random split by fractions (largest-remainder rounding, remainder
/// ties to the earlier part). Rows are permuted once and cut contiguously.
pub fn split_random<F: Scalar>(
    ds: &Dataset<F>,
    fractions: (f64, f64, f64),
    seed: u64,
) -> Result<(Dataset<F>, Dataset<F>, Dataset<F>)> {
    let fracs = [fractions.0, fractions.1, fractions.2];
    if fracs.iter().any(|f| !f.is_finite() || *f <= 0.0) {
        return Err(Error::Domain(format!("split fractions must be positive, got {fracs:?}")));
    }
    if (fracs.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(Error::Domain(format!("split fractions must sum to 1, got {fracs:?}")));
    }
    let n = ds.n_rows();
    if n < 3 {
        return Err(Error::Domain(format!("cannot split {n} rows three ways")));
    }

    let exact: Vec<f64> = fracs.iter().map(|f| f * n as f64).collect();
    let mut sizes: Vec<usize> = exact.iter().map(|e| e.floor() as usize).collect();
    let mut leftover = n - sizes.iter().sum::<usize>();
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| {
        let (ra, rb) = (exact[a] - exact[a].floor(), exact[b] - exact[b].floor());
        rb.partial_cmp(&ra).unwrap().then(a.cmp(&b))
    });
    for &k in &order {
        if leftover == 0 {
            break;
        }
        sizes[k] += 1;
        leftover -= 1;
    }

    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let train = &perm[..sizes[0]];
    let val = &perm[sizes[0]..sizes[0] + sizes[1]];
    let test = &perm[sizes[0] + sizes[1]..];
    Ok((ds.select_rows(train)?, ds.select_rows(val)?, ds.select_rows(test)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    #[test]
    fn construction_is_validated() {
        let m = Matrix::from_vec(2, 2, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        assert!(Dataset::from_features(m.clone(), vec![0, 1]).is_ok());
        assert!(Dataset::from_features(m.clone(), vec![0]).is_err(), "label count");
        assert!(Dataset::from_features(m.clone(), vec![0, 2]).is_err(), "non-binary label");
        assert!(Dataset::new(m.clone(), vec![0, 1], Some(vec![1]), vec!["a".into(), "b".into()]).is_err());
        assert!(Dataset::new(m, vec![0, 1], None, vec!["a".into()]).is_err(), "name count");
    }

    #[test]
    fn select_rows_gathers_and_validates() {
        let m = Matrix::from_vec(3, 1, vec![10.0, 20.0, 30.0]).unwrap();
        let ds = Dataset::new(m, vec![0, 1, 0], Some(vec![5, 6, 7]), vec!["v".into()]).unwrap();
        let sub = ds.select_rows(&[2, 0]).unwrap();
        assert_eq!(sub.features().as_slice(), &[30.0, 10.0]);
        assert_eq!(sub.labels(), &[0, 0]);
        assert_eq!(sub.timesteps(), Some([7, 5].as_slice()));
        assert!(ds.select_rows(&[3]).is_err());
        assert_eq!(ds.select_rows(&[]).unwrap().n_rows(), 0);
    }

    #[test]
    fn synthetic_clusters_sit_where_they_should() {
        let ds = gen_synthetic_2d::<f64>(2000, 0.25, 42).unwrap();
        assert_eq!(ds.n_rows(), 2000);
        assert_eq!(ds.class_counts(), (1000, 1000));
        assert_eq!(ds.feature_names(), &["x1".to_string(), "x2".to_string()]);
        // First block is class 0 around the origin, second class 1 around
        // (1, 1); 1000 points pin each mean well within 0.05.
        for (range, center) in [(0..1000, 0.0), (1000..2000, 1.0)] {
            for c in 0..2 {
                let mean: f64 =
                    range.clone().map(|r| ds.features()[(r, c)]).sum::<f64>() / 1000.0;
                assert!((mean - center).abs() < 0.05, "col {c} mean {mean} vs {center}");
            }
        }
        assert_eq!(ds, gen_synthetic_2d::<f64>(2000, 0.25, 42).unwrap());
        assert_ne!(ds, gen_synthetic_2d::<f64>(2000, 0.25, 43).unwrap());
    }

    #[test]
    fn synthetic_rejects_bad_parameters() {
        assert!(gen_synthetic_2d::<f64>(7, 0.25, 1).is_err(), "odd count");
        assert!(gen_synthetic_2d::<f64>(0, 0.25, 1).is_err());
        assert!(gen_synthetic_2d::<f64>(10, 0.0, 1).is_err());
    }

    fn write_temp(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    #[test]
    fn auto_loading_drops_bad_rows_and_text_columns() {
        let file = write_temp(
            "id,ts,f1,f2,note,label\n\
             a1,1,0.5,1.0,ok,0\n\
             a2,1,0.25,2.0,fine,1\n\
             a3,2,0.75,3.0,meh,unknown\n\
             a4,2,1.5,4.0,good,1\n",
        );
        let schema = CsvSchema {
            label_column: "label".into(),
            features: FeatureSelection::Auto,
            timestep_column: Some("ts".into()),
            exclude_columns: vec!["id".into()],
            label_map: None,
        };
        let (ds, report) = load_csv::<f64>(file.path(), &schema).unwrap();
        assert_eq!(report.rows_read, 4);
        assert_eq!(report.rows_dropped, 1);
        assert_eq!(report.columns_dropped.len(), 1);
        assert_eq!(report.columns_dropped[0].column, "note");
        assert_eq!(ds.feature_names(), &["f1".to_string(), "f2".to_string()]);
        assert_eq!(ds.n_rows(), 3);
        assert_eq!(ds.labels(), &[0, 1, 1]);
        assert_eq!(ds.timesteps(), Some([1, 1, 2].as_slice()));
        assert_eq!(ds.features().row(2), &[1.5, 4.0]);
    }

    #[test]
    fn label_map_filters_and_translates() {
        let file = write_temp("v,cls\n1.0,licit\n2.0,illicit\n3.0,unknown\n4.0,illicit\n");
        let mut schema = CsvSchema::auto("cls");
        schema.label_map =
            Some([("licit".to_string(), 0), ("illicit".to_string(), 1)].into_iter().collect());
        let (ds, report) = load_csv::<f64>(file.path(), &schema).unwrap();
        assert_eq!(ds.labels(), &[0, 1, 1]);
        assert_eq!(ds.features().as_slice(), &[1.0, 2.0, 4.0]);
        assert_eq!(report.rows_dropped, 1);

        let bad = CsvSchema {
            label_map: Some([("licit".to_string(), 2)].into_iter().collect()),
            ..CsvSchema::auto("cls")
        };
        assert!(load_csv::<f64>(file.path(), &bad).is_err(), "non-binary map target");
    }

    #[test]
    fn named_selection_is_strict() {
        let file = write_temp("a,b,c,label\n1,x,3,0\n4,y,6,1\n");
        let named = |cols: &[&str]| CsvSchema {
            label_column: "label".into(),
            features: FeatureSelection::Named(cols.iter().map(|s| s.to_string()).collect()),
            timestep_column: None,
            exclude_columns: vec![],
            label_map: None,
        };
        let (ds, report) = load_csv::<f64>(file.path(), &named(&["c", "a"])).unwrap();
        assert_eq!(ds.feature_names(), &["c".to_string(), "a".to_string()]);
        assert_eq!(ds.features().row(0), &[3.0, 1.0]);
        assert!(report.columns_dropped.is_empty());

        assert!(load_csv::<f64>(file.path(), &named(&["b"])).is_err(), "text in a named column");
        assert!(load_csv::<f64>(file.path(), &named(&["missing"])).is_err());
        assert!(load_csv::<f64>(file.path(), &named(&["label"])).is_err(), "label as feature");
    }

    #[test]
    fn missing_label_column_and_empty_file() {
        let file = write_temp("a,b\n1,2\n");
        assert!(load_csv::<f64>(file.path(), &CsvSchema::auto("label")).is_err());

        let empty = write_temp("");
        let (ds, report) = load_csv::<f64>(empty.path(), &CsvSchema::auto("label")).unwrap();
        assert_eq!((ds.n_rows(), ds.n_features()), (0, 0));
        assert_eq!(report, LoadReport::default());
    }

    /// 24 rows engineered so each pruning stage removes exactly one column:
    /// `c` is constant, `b` duplicates `a` (r = 1), `d` cycles three values.
    fn prunable() -> Dataset<f64> {
        let n = 24;
        let mut rows = Vec::new();
        for i in 0..n {
            let a = i as f64;
            let b = 2.0 * a + 1.0;
            let c = 7.0;
            let d = (i % 3) as f64;
            let e = if i % 2 == 0 { a } else { -a };
            rows.push(vec![a, b, c, d, e]);
        }
        let labels = (0..n).map(|i| i % 2).collect();
        let names = ["a", "b", "c", "d", "e"].map(String::from).to_vec();
        Dataset::new(Matrix::from_rows(&rows).unwrap(), labels, None, names).unwrap()
    }

    #[test]
    fn pruning_removes_in_stage_order_and_keeps_the_earlier_duplicate() {
        let ds = prunable();
        let (pruned, removals) = prune_features(&ds, &PruneParams::default()).unwrap();
        assert_eq!(pruned.feature_names(), &["a".to_string(), "e".to_string()]);
        assert_eq!(pruned.n_rows(), ds.n_rows());
        assert_eq!(pruned.labels(), ds.labels());
        let summary: Vec<(&str, &str)> = removals
            .iter()
            .map(|r| (r.column.as_str(), r.reason.split(' ').next().unwrap()))
            .collect();
        assert_eq!(summary, vec![("c", "zero"), ("b", "|r|"), ("d", "only")]);
        assert!(removals[1].reason.contains("'a'"), "names the kept partner: {}", removals[1].reason);
    }

    #[test]
    fn pruning_validates_inputs() {
        let ds = prunable();
        assert!(prune_features(&ds, &PruneParams { corr_cutoff: 0.0, min_unique: 10 }).is_err());
        assert!(prune_features(&ds, &PruneParams { corr_cutoff: 1.5, min_unique: 10 }).is_err());
        let empty = ds.select_rows(&[]).unwrap();
        assert!(prune_features(&empty, &PruneParams::default()).is_err());
    }

    fn indexed_dataset(n: usize) -> Dataset<f64> {
        // Feature value = row index, so split membership is visible.
        let data: Vec<f64> = (0..n).map(|i| i as f64).collect();
        let labels = (0..n).map(|i| i % 2).collect();
        let ts = (1..=n as u32).collect();
        Dataset::new(Matrix::from_vec(n, 1, data).unwrap(), labels, Some(ts), vec!["i".into()]).unwrap()
    }

    #[test]
    fn temporal_split_partitions_by_boundaries() {
        let ds = indexed_dataset(10);
        let (train, val, test) = split_temporal(&ds, 5, 8).unwrap();
        assert_eq!(train.timesteps(), Some([1, 2, 3, 4, 5].as_slice()));
        assert_eq!(val.timesteps(), Some([6, 7, 8].as_slice()));
        assert_eq!(test.timesteps(), Some([9, 10].as_slice()));
        assert!(split_temporal(&ds, 8, 5).is_err());
        let no_time = Dataset::from_features(ds.features().clone(), ds.labels().to_vec()).unwrap();
        assert!(split_temporal(&no_time, 5, 8).is_err());
    }

    #[test]
    fn random_split_apportions_and_covers() {
        let ds = indexed_dataset(10);
        let (train, val, test) = split_random(&ds, (0.7, 0.1, 0.2), 9).unwrap();
        assert_eq!((train.n_rows(), val.n_rows(), test.n_rows()), (7, 1, 2));
        let mut seen: Vec<i64> = [&train, &val, &test]
            .iter()
            .flat_map(|d| (0..d.n_rows()).map(|r| d.features()[(r, 0)] as i64))
            .collect();
        seen.sort_unstable();
        assert_eq!(seen, (0..10).collect::<Vec<i64>>());

        let again = split_random(&ds, (0.7, 0.1, 0.2), 9).unwrap();
        assert_eq!(train, again.0);
        let other = split_random(&ds, (0.7, 0.1, 0.2), 10).unwrap();
        assert_ne!(train, other.0);
    }

    #[test]
    fn random_split_validates_fractions() {
        let ds = indexed_dataset(10);
        assert!(split_random(&ds, (0.5, 0.5, 0.5), 1).is_err(), "sum over 1");
        assert!(split_random(&ds, (0.8, 0.0, 0.2), 1).is_err(), "zero part");
        assert!(split_random(&indexed_dataset(2), (0.7, 0.1, 0.2), 1).is_err(), "too few rows");
    }

    #[test]
    fn seven_one_two_on_larger_sets() {
        let ds = indexed_dataset(12000);
        let (train, val, test) = split_random(&ds, (0.7, 0.1, 0.2), 3).unwrap();
        assert_eq!((train.n_rows(), val.n_rows(), test.n_rows()), (8400, 1200, 2400));
    }
}
