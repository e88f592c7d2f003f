//! Precision-recall evaluation against ground truth and posterior-based FDR
//! estimation and thresholding.

use crate::error::{Error, Result};
use crate::model::{DeregulationMask, DeregulationScores};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrPoint {
    pub recall: f64,
    pub precision: f64,
}

/// Precision-recall curve swept over the distinct score values in descending
/// order; tied scores collapse into a single point. `auprc` is the
/// right-continuous step integral of the stored points.
#[derive(Debug, Clone, PartialEq)]
pub struct PrCurve {
    pub points: Vec<PrPoint>,
    pub auprc: f64,
}

/// Sweeps thresholds over the distinct scores (descending) and reports one
/// (recall, precision) point per threshold. Requires at least one positive
/// pair, otherwise recall is undefined.
pub fn pr_curve(scores: &DeregulationScores, truth: &DeregulationMask) -> Result<PrCurve> {
    if scores.sample_ids != truth.sample_ids || scores.target_ids != truth.target_ids {
        return Err(Error::IdMismatch {
            context: "scores vs ground truth".into(),
        });
    }
    let positives = truth.positive_count();
    if positives == 0 {
        return Err(Error::NoPositives);
    }

    let mut pairs: Vec<(f64, bool)> = scores
        .scores
        .iter()
        .copied()
        .zip(truth.values.iter().copied())
        .collect();
    pairs.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());

    let mut points = Vec::new();
    let mut tp = 0usize;
    let mut fp = 0usize;
    let mut k = 0usize;
    while k < pairs.len() {
        let threshold = pairs[k].0;
        while k < pairs.len() && pairs[k].0 == threshold {
            if pairs[k].1 {
                tp += 1;
            } else {
                fp += 1;
            }
            k += 1;
        }
        points.push(PrPoint {
            recall: tp as f64 / positives as f64,
            precision: tp as f64 / (tp + fp) as f64,
        });
    }

    let mut auprc = 0.0;
    let mut previous_recall = 0.0;
    for p in &points {
        auprc += (p.recall - previous_recall) * p.precision;
        previous_recall = p.recall;
    }
    Ok(PrCurve { points, auprc })
}

/// Posterior FDR estimates for every prefix of a descending score list: with
/// `S` the sum of the top `K` scores, the expected proportion of false
/// positives among those `K` calls is `(K - S) / K`.
pub fn estimate_fdr(sorted_scores: &[f64]) -> Vec<(usize, f64)> {
    debug_assert!(sorted_scores
        .windows(2)
        .all(|w| w[0] >= w[1]));
    debug_assert!(sorted_scores.iter().all(|s| (0.0..=1.0).contains(s)));
    let mut out = Vec::with_capacity(sorted_scores.len());
    let mut sum = 0.0f64;
    for (k, &s) in sorted_scores.iter().enumerate() {
        sum += s;
        let count = (k + 1) as f64;
        out.push((k + 1, ((count - sum) / count).max(0.0)));
    }
    out
}

/// Pairs called deregulated at an intended FDR level.
#[derive(Debug, Clone, PartialEq)]
pub struct FdrSelection {
    /// Smallest score among the selected pairs; 1.0 when nothing is selected.
    pub threshold: f64,
    /// (sample, target) pairs, in descending score order with lexicographic
    /// tie-breaks.
    pub selected: Vec<(String, String)>,
    /// Posterior FDR estimate of the selection; 0.0 when empty.
    pub estimated_fdr: f64,
}

/// Lowers the threshold from 1 and keeps the largest prefix whose estimated
/// FDR stays at or below `target_fdr`. Ties are broken by (sample, target)
/// identifier order, so the selection is independent of storage order.
pub fn select_at_fdr(scores: &DeregulationScores, target_fdr: f64) -> FdrSelection {
    let t = scores.target_ids.len();
    let mut order: Vec<usize> = (0..scores.scores.len()).collect();
    order.sort_by(|&a, &b| {
        scores.scores[b]
            .partial_cmp(&scores.scores[a])
            .unwrap()
            .then_with(|| {
                let (sa, ta) = (&scores.sample_ids[a / t], &scores.target_ids[a % t]);
                let (sb, tb) = (&scores.sample_ids[b / t], &scores.target_ids[b % t]);
                sa.cmp(sb).then(ta.cmp(tb))
            })
    });

    let sorted: Vec<f64> = order.iter().map(|&i| scores.scores[i]).collect();
    let mut best = 0usize;
    let mut best_fdr = 0.0f64;
    for (k, fdr) in estimate_fdr(&sorted) {
        if fdr <= target_fdr {
            best = k;
            best_fdr = fdr;
        }
    }

    let selected: Vec<(String, String)> = order[..best]
        .iter()
        .map(|&i| {
            (
                scores.sample_ids[i / t].clone(),
                scores.target_ids[i % t].clone(),
            )
        })
        .collect();
    FdrSelection {
        threshold: if best == 0 { 1.0 } else { sorted[best - 1] },
        selected,
        estimated_fdr: best_fdr,
    }
}
