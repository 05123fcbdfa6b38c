//! Greedy COCO-style matching and 101-point interpolated AP.

use crate::morphology::Overlap;

/// A prediction to be matched; higher scores are matched first, ties broken
/// by ascending id.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoredPrediction {
    pub id: i64,
    pub score: f64,
}

/// A ground-truth instance. Ignored instances may absorb a prediction but
/// count neither as hits nor misses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GroundTruth {
    pub id: i64,
    pub ignore: bool,
}

/// Result of matching one (image, category) group at one threshold.
/// Indices refer to the input slices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Matches {
    pub pred_to_gt: Vec<Option<usize>>,
    pub gt_to_pred: Vec<Option<usize>>,
}

/// Prediction indices in matching order.
pub fn score_order(preds: &[ScoredPrediction]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..preds.len()).collect();
    order.sort_by(|&a, &b| {
        preds[b]
            .score
            .total_cmp(&preds[a].score)
            .then(preds[a].id.cmp(&preds[b].id))
    });
    order
}

/// Matches each prediction, in score order, to the still-unmatched ground
/// truth with the highest IoU at or above `threshold_pct / 100`.
/// Non-ignored ground truths are preferred over ignored ones; equal IoUs go
/// to the lower ground-truth id.
pub fn match_instances(
    gt: &[GroundTruth],
    preds: &[ScoredPrediction],
    iou: impl Fn(usize, usize) -> Overlap,
    threshold_pct: u32,
) -> Matches {
    let mut pred_to_gt = vec![None; preds.len()];
    let mut gt_to_pred = vec![None; gt.len()];
    for p in score_order(preds) {
        let mut best: Option<(usize, Overlap)> = None;
        for (g, truth) in gt.iter().enumerate() {
            if gt_to_pred[g].is_some() {
                continue;
            }
            let o = iou(p, g);
            if !o.meets_percent(threshold_pct) {
                continue;
            }
            let better = match best {
                None => true,
                Some((b, bo)) => {
                    let (bi, gi) = (gt[b].ignore, truth.ignore);
                    if bi != gi {
                        bi && !gi
                    } else {
                        match o.cmp_iou(&bo) {
                            std::cmp::Ordering::Greater => true,
                            std::cmp::Ordering::Equal => truth.id < gt[b].id,
                            std::cmp::Ordering::Less => false,
                        }
                    }
                }
            };
            if better {
                best = Some((g, o));
            }
        }
        if let Some((g, _)) = best {
            pred_to_gt[p] = Some(g);
            gt_to_pred[g] = Some(p);
        }
    }
    Matches {
        pred_to_gt,
        gt_to_pred,
    }
}

/// A scored detection outcome feeding the precision/recall curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Detection {
    pub score: f64,
    /// Stable tie-break key (image id, prediction id).
    pub key: (i64, i64),
    pub true_positive: bool,
}

/// 101-point interpolated average precision. `None` when there is no
/// ground truth to recall.
pub fn average_precision(detections: &[Detection], num_gt: usize) -> Option<f64> {
    if num_gt == 0 {
        return None;
    }
    let mut dets: Vec<&Detection> = detections.iter().collect();
    dets.sort_by(|a, b| b.score.total_cmp(&a.score).then(a.key.cmp(&b.key)));

    let mut tp_cum = Vec::with_capacity(dets.len());
    let mut precision = Vec::with_capacity(dets.len());
    let (mut tp, mut fp) = (0usize, 0usize);
    for d in &dets {
        if d.true_positive {
            tp += 1;
        } else {
            fp += 1;
        }
        tp_cum.push(tp);
        precision.push(tp as f64 / (tp + fp) as f64);
    }
    for i in (0..precision.len().saturating_sub(1)).rev() {
        if precision[i + 1] > precision[i] {
            precision[i] = precision[i + 1];
        }
    }
    let mut sum = 0.0;
    let mut idx = 0;
    for r in 0..=100usize {
        // First detection whose recall reaches r / 100.
        while idx < tp_cum.len() && tp_cum[idx] * 100 < r * num_gt {
            idx += 1;
        }
        if idx < precision.len() {
            sum += precision[idx];
        }
    }
    Some(sum / 101.0)
}
