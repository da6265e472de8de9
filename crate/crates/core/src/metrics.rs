//! Detection evaluation under rotated IOU and rotated non-maximum suppression.

use crate::error::{Error, Result};
use crate::geom::{rotated_iou, OrientedBox};
use crate::targets::Detection;

pub const DEFAULT_IOU_THR: f64 = 0.5;
pub const DEFAULT_NMS_THR: f64 = 0.1;

/// Indices of `dets` by descending score; ties keep input order.
fn score_order(dets: &[Detection]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..dets.len()).collect();
    order.sort_by(|&a, &b| dets[b].score.total_cmp(&dets[a].score));
    order
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatchEntry {
    /// Index into the detection list that was matched.
    pub det_index: usize,
    pub score: f64,
    pub true_positive: bool,
}

/// Outcome of greedy matching; `entries` are in descending score order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MatchResult {
    pub entries: Vec<MatchEntry>,
    pub gt_matched: Vec<bool>,
}

impl MatchResult {
    pub fn true_positives(&self) -> usize {
        self.entries.iter().filter(|e| e.true_positive).count()
    }

    pub fn n_gt(&self) -> usize {
        self.gt_matched.len()
    }

    /// Pools per-image results into one ranking. Equal scores keep the
    /// order in which the images were supplied.
    pub fn pool<'a>(results: impl IntoIterator<Item = &'a MatchResult>) -> MatchResult {
        let mut pooled = MatchResult::default();
        for r in results {
            pooled.entries.extend_from_slice(&r.entries);
            pooled.gt_matched.extend_from_slice(&r.gt_matched);
        }
        pooled.entries.sort_by(|a, b| b.score.total_cmp(&a.score));
        pooled
    }
}

/// Greedy matching: detections in descending score each claim the
/// still-unmatched ground truth of highest IOU, if that IOU reaches `iou_thr`.
pub fn match_detections(dets: &[Detection], gts: &[OrientedBox], iou_thr: f64) -> MatchResult {
    let mut gt_matched = vec![false; gts.len()];
    let entries = score_order(dets)
        .into_iter()
        .map(|di| {
            let best = gts
                .iter()
                .enumerate()
                .filter(|(gi, _)| !gt_matched[*gi])
                .map(|(gi, g)| (gi, rotated_iou(&dets[di].obb, g)))
                .fold(None, |acc: Option<(usize, f64)>, (gi, iou)| match acc {
                    Some((_, best)) if best >= iou => acc,
                    _ => Some((gi, iou)),
                });
            let true_positive = match best {
                Some((gi, iou)) if iou >= iou_thr => {
                    gt_matched[gi] = true;
                    true
                }
                _ => false,
            };
            MatchEntry {
                det_index: di,
                score: dets[di].score,
                true_positive,
            }
        })
        .collect();
    MatchResult {
        entries,
        gt_matched,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrPoint {
    pub recall: f64,
    pub precision: f64,
    /// Score of the detection that closes this prefix.
    pub score: f64,
}

/// Cumulative precision/recall after each detection in score order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PrCurve {
    pub points: Vec<PrPoint>,
}

pub fn pr_curve(matches: &MatchResult, n_gt: usize) -> Result<PrCurve> {
    if n_gt == 0 {
        return Err(Error::GtEmpty);
    }
    let mut tp = 0usize;
    let points = matches
        .entries
        .iter()
        .enumerate()
        .map(|(i, e)| {
            if e.true_positive {
                tp += 1;
            }
            PrPoint {
                recall: tp as f64 / n_gt as f64,
                precision: tp as f64 / (i + 1) as f64,
                score: e.score,
            }
        })
        .collect();
    Ok(PrCurve { points })
}

/// Area under the precision envelope (precision made non-increasing from
/// right to left), integrated over recall.
pub fn average_precision(curve: &PrCurve) -> f64 {
    if curve.points.is_empty() {
        return 0.0;
    }
    let mut recall = Vec::with_capacity(curve.points.len() + 2);
    let mut precision = Vec::with_capacity(curve.points.len() + 2);
    recall.push(0.0);
    precision.push(0.0);
    for p in &curve.points {
        recall.push(p.recall);
        precision.push(p.precision);
    }
    recall.push(1.0);
    precision.push(0.0);
    for i in (0..precision.len() - 1).rev() {
        precision[i] = precision[i].max(precision[i + 1]);
    }
    (1..recall.len())
        .filter(|&i| recall[i] != recall[i - 1])
        .map(|i| (recall[i] - recall[i - 1]) * precision[i])
        .sum()
}

/// Maximum F1 over all score thresholds of the curve.
pub fn best_f1(curve: &PrCurve) -> f64 {
    curve
        .points
        .iter()
        .map(|p| {
            let s = p.precision + p.recall;
            if s > 0.0 {
                2.0 * p.precision * p.recall / s
            } else {
                0.0
            }
        })
        .fold(0.0, f64::max)
}

/// Greedy rotated NMS: keep the best remaining detection and drop every
/// other whose IOU with it exceeds `nms_thr`. Output is in score order.
pub fn rotated_nms(dets: &[Detection], nms_thr: f64) -> Vec<Detection> {
    let order = score_order(dets);
    let mut suppressed = vec![false; dets.len()];
    let mut kept = Vec::new();
    for (pos, &i) in order.iter().enumerate() {
        if suppressed[i] {
            continue;
        }
        kept.push(dets[i].clone());
        for &j in &order[pos + 1..] {
            if !suppressed[j] && rotated_iou(&dets[i].obb, &dets[j].obb) > nms_thr {
                suppressed[j] = true;
            }
        }
    }
    kept
}

/// Summary of a multi-image evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub ap: f64,
    pub best_f1: f64,
    pub curve: PrCurve,
    pub n_gt: usize,
    pub n_det: usize,
    pub true_positives: usize,
}

/// Matches each image independently, pools the rankings and scores them.
pub fn evaluate<'a>(
    images: impl IntoIterator<Item = (&'a [OrientedBox], &'a [Detection])>,
    iou_thr: f64,
) -> Result<EvalReport> {
    let per_image: Vec<MatchResult> = images
        .into_iter()
        .map(|(gts, dets)| match_detections(dets, gts, iou_thr))
        .collect();
    let pooled = MatchResult::pool(&per_image);
    let n_gt = pooled.n_gt();
    let curve = pr_curve(&pooled, n_gt)?;
    Ok(EvalReport {
        ap: average_precision(&curve),
        best_f1: best_f1(&curve),
        n_gt,
        n_det: pooled.entries.len(),
        true_positives: pooled.true_positives(),
        curve,
    })
}
