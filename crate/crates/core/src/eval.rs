//! Evaluating an uncertainty score against observed correctness.
//!
//! Every record pairs a prediction with the true label and an uncertainty
//! value. Treating "the classifier got it wrong" as the positive event turns
//! uncertainty into a detector score, and the usual machinery applies:
//!
//!   - a threshold sweep over min-max normalized uncertainty, with the
//!     four-state confusion (correct/incorrect x certain/uncertain) and the
//!     accuracy / NPV / TPR summaries at each threshold;
//!   - ROC and AUC on the raw scores, accumulated on the integer TP/FP
//!     ladder so the result equals the pairwise Wilcoxon statistic exactly;
//!   - a precision-recall curve with step-wise average precision.
//!
//! A record is "uncertain" at threshold t iff its normalized score is
//! strictly greater than t, so t = 1 marks everything certain.

use crate::error::{Error, Result};
use crate::scalar::{real_of, Scalar};

/// One scored prediction. Labels are 0 or 1; `uncertainty` is the raw score
/// (mutual information in the shipped pipelines) and need not be normalized.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UncertaintyRecord<F> {
    pub predicted: usize,
    pub actual: usize,
    pub uncertainty: F,
}

/// Record reduced to what the threshold sweep needs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalizedRecord<F> {
    pub correct: bool,
    /// Min-max normalized uncertainty in [0, 1]; 0 everywhere when all raw
    /// scores coincide.
    pub u_norm: F,
}

/// Four-state confusion at a fixed threshold. "Certain" plays the role of a
/// negative detector output, so correct-and-certain is the true negative.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ConfusionCounts {
    pub correct_certain: usize,
    pub correct_uncertain: usize,
    pub incorrect_certain: usize,
    pub incorrect_uncertain: usize,
}

impl ConfusionCounts {
    pub fn total(&self) -> usize {
        self.correct_certain + self.correct_uncertain + self.incorrect_certain + self.incorrect_uncertain
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdRow<F> {
    pub t: F,
    pub accuracy: F,
    pub npv: F,
    pub tpr: F,
    pub counts: ConfusionCounts,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RocPoint<F> {
    pub fpr: F,
    pub tpr: F,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrPoint<F> {
    pub recall: F,
    pub precision: F,
}

/// Threshold sweep, both curves, and both areas in one bundle.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveTable<F> {
    pub thresholds: Vec<ThresholdRow<F>>,
    pub roc: Vec<RocPoint<F>>,
    pub pr: Vec<PrPoint<F>>,
    pub auroc: F,
    pub aupr: F,
}

pub const DEFAULT_N_THRESHOLDS: usize = 101;

fn validate<F: Scalar>(records: &[UncertaintyRecord<F>]) -> Result<()> {
    if records.is_empty() {
        return Err(Error::Domain("no records to evaluate".into()));
    }
    for (i, r) in records.iter().enumerate() {
        if r.predicted > 1 || r.actual > 1 {
            return Err(Error::Domain(format!(
                "record {i} has non-binary labels (predicted {}, actual {})",
                r.predicted, r.actual
            )));
        }
        if !r.uncertainty.is_finite() {
            return Err(Error::Numeric(format!("record {i} has non-finite uncertainty {}", r.uncertainty)));
        }
    }
    Ok(())
}

/// Min-max normalization of the uncertainty scores; all-equal scores map to
/// 0 so the sweep still behaves (everything certain at every t).
pub fn normalize_uncertainty<F: Scalar>(records: &[UncertaintyRecord<F>]) -> Result<Vec<NormalizedRecord<F>>> {
    validate(records)?;
    let mut lo = records[0].uncertainty;
    let mut hi = lo;
    for r in records {
        lo = lo.min(r.uncertainty);
        hi = hi.max(r.uncertainty);
    }
    let range = hi - lo;
    Ok(records
        .iter()
        .map(|r| NormalizedRecord {
            correct: r.predicted == r.actual,
            u_norm: if range > F::zero() { (r.uncertainty - lo) / range } else { F::zero() },
        })
        .collect())
}

/// Confusion at threshold `t`; a record is uncertain iff `u_norm > t`.
pub fn confusion_at<F: Scalar>(records: &[NormalizedRecord<F>], t: F) -> ConfusionCounts {
    let mut c = ConfusionCounts::default();
    for r in records {
        let uncertain = r.u_norm > t;
        match (r.correct, uncertain) {
            (true, false) => c.correct_certain += 1,
            (true, true) => c.correct_uncertain += 1,
            (false, false) => c.incorrect_certain += 1,
            (false, true) => c.incorrect_uncertain += 1,
        }
    }
    c
}

/// Fraction of records the detector handles well: correct-and-certain plus
/// incorrect-and-uncertain.
pub fn metric_accuracy<F: Scalar>(c: &ConfusionCounts) -> Result<F> {
    let total = c.total();
    if total == 0 {
        return Err(Error::Domain("accuracy of an empty record set".into()));
    }
    Ok(real_of::<F>(c.correct_certain + c.incorrect_uncertain) / real_of::<F>(total))
}

/// Of everything flagged certain, the fraction actually correct; an empty
/// certain pool is vacuously perfect.
pub fn metric_npv<F: Scalar>(c: &ConfusionCounts) -> F {
    let denom = c.correct_certain + c.incorrect_certain;
    if denom == 0 {
        F::one()
    } else {
        real_of::<F>(c.correct_certain) / real_of::<F>(denom)
    }
}

/// Of everything actually incorrect, the fraction flagged uncertain; no
/// incorrect records is vacuously perfect.
pub fn metric_tpr<F: Scalar>(c: &ConfusionCounts) -> F {
    let denom = c.incorrect_certain + c.incorrect_uncertain;
    if denom == 0 {
        F::one()
    } else {
        real_of::<F>(c.incorrect_uncertain) / real_of::<F>(denom)
    }
}

/// Evenly spaced thresholds 0..=1 with the three summaries at each.
pub fn uncertainty_curves<F: Scalar>(
    records: &[NormalizedRecord<F>],
    n_thresholds: usize,
) -> Result<Vec<ThresholdRow<F>>> {
    if n_thresholds < 2 {
        return Err(Error::Domain(format!("need at least 2 thresholds to sweep, got {n_thresholds}")));
    }
    if records.is_empty() {
        return Err(Error::Domain("no records to evaluate".into()));
    }
    let last = real_of::<F>(n_thresholds - 1);
    (0..n_thresholds)
        .map(|k| {
            let t = real_of::<F>(k) / last;
            let counts = confusion_at(records, t);
            Ok(ThresholdRow {
                t,
                accuracy: metric_accuracy(&counts)?,
                npv: metric_npv(&counts),
                tpr: metric_tpr(&counts),
                counts,
            })
        })
        .collect()
}

/// Indices of `records` sorted by descending uncertainty, then the sizes of
/// each tie group in that order.
fn descending_groups<F: Scalar>(records: &[UncertaintyRecord<F>]) -> Vec<Vec<usize>> {
    let mut order: Vec<usize> = (0..records.len()).collect();
    // Finiteness was validated, so the comparison is total.
    order.sort_by(|&a, &b| records[b].uncertainty.partial_cmp(&records[a].uncertainty).unwrap());
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for idx in order {
        match groups.last_mut() {
            Some(g) if records[g[0]].uncertainty == records[idx].uncertainty => g.push(idx),
            _ => groups.push(vec![idx]),
        }
    }
    groups
}

/// ROC curve (positive class: incorrect prediction) and its area.
///
/// Tied scores advance TP and FP together, giving the diagonal tie segment,
/// and (0, 0) is prepended. The area accumulates the trapezoid numerator on
/// integer counts and divides once, which makes it the exact pairwise
/// statistic: every (positive, negative) pair contributes 2 to the numerator
/// when ranked correctly and 1 on a tie, and the denominator is 2 |P| |N|.
pub fn roc_auc<F: Scalar>(records: &[UncertaintyRecord<F>]) -> Result<(Vec<RocPoint<F>>, F)> {
    validate(records)?;
    let pos = records.iter().filter(|r| r.predicted != r.actual).count();
    let neg = records.len() - pos;
    if pos == 0 {
        return Err(Error::UndefinedAuc("every prediction is correct; the positive class is empty".into()));
    }
    if neg == 0 {
        return Err(Error::UndefinedAuc("every prediction is incorrect; the negative class is empty".into()));
    }

    let mut points = vec![RocPoint { fpr: F::zero(), tpr: F::zero() }];
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut numerator = 0u64;
    for group in descending_groups(records) {
        let group_pos = group.iter().filter(|&&i| records[i].predicted != records[i].actual).count();
        let group_neg = group.len() - group_pos;
        let tp_prev = tp;
        tp += group_pos;
        fp += group_neg;
        numerator += group_neg as u64 * (tp_prev + tp) as u64;
        points.push(RocPoint { fpr: real_of::<F>(fp) / real_of::<F>(neg), tpr: real_of::<F>(tp) / real_of::<F>(pos) });
    }
    let auc = F::from_u64(numerator).unwrap() / F::from_u64(2 * pos as u64 * neg as u64).unwrap();
    Ok((points, auc))
}

/// Precision-recall curve (positive class: incorrect prediction) and its
/// step-wise average precision. One point per distinct score, descending.
/// Defined whenever at least one record is a positive, even if all are.
pub fn pr_curve<F: Scalar>(records: &[UncertaintyRecord<F>]) -> Result<(Vec<PrPoint<F>>, F)> {
    validate(records)?;
    let pos = records.iter().filter(|r| r.predicted != r.actual).count();
    if pos == 0 {
        return Err(Error::UndefinedAuc(
            "every prediction is correct; precision-recall needs at least one positive".into(),
        ));
    }

    let mut points = Vec::new();
    let mut ap = F::zero();
    let mut recall_prev = F::zero();
    let (mut tp, mut flagged) = (0usize, 0usize);
    for group in descending_groups(records) {
        tp += group.iter().filter(|&&i| records[i].predicted != records[i].actual).count();
        flagged += group.len();
        let recall = real_of::<F>(tp) / real_of::<F>(pos);
        let precision = real_of::<F>(tp) / real_of::<F>(flagged);
        ap += (recall - recall_prev) * precision;
        recall_prev = recall;
        points.push(PrPoint { recall, precision });
    }
    Ok((points, ap))
}

/// The full protocol in one call. Fails with [`Error::UndefinedAuc`] when
/// the test outcomes are single-class; compose the pieces directly to keep
/// the threshold sweep in that situation.
pub fn evaluate<F: Scalar>(records: &[UncertaintyRecord<F>], n_thresholds: usize) -> Result<CurveTable<F>> {
    let normalized = normalize_uncertainty(records)?;
    let thresholds = uncertainty_curves(&normalized, n_thresholds)?;
    let (roc, auroc) = roc_auc(records)?;
    let (pr, aupr) = pr_curve(records)?;
    Ok(CurveTable { thresholds, roc, pr, auroc, aupr })
}
