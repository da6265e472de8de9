//! Training objectives for the three heads, with analytic gradients with
//! respect to the predicted grids.
//!
//! - heatmap: penalty-reduced focal loss against the Gaussian targets,
//! - offset: L1 on the sub-cell center offsets,
//! - encoding: smooth-L1 on the polar distances, scaled per target by an
//!   IOU-derived weight that is held constant while differentiating.

use crate::codec::{decode, PolarEncoding};
use crate::error::{Error, Result};
use crate::geom::{rotated_iou, OrientedBox, Point2};
use crate::targets::{CenterMask, CenterTarget, EncodingGrid, Grid, HeatmapGrid, OffsetGrid};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossConfig {
    /// Focal exponent on the prediction.
    pub alpha: f64,
    /// Penalty-reduction exponent on `1 - Y`.
    pub beta: f64,
    /// Weight of the IOU term in the encoding loss.
    pub gamma: f64,
    /// Heatmap predictions are clamped to `[prob_clamp, 1 - prob_clamp]`.
    pub prob_clamp: f64,
    /// IOU is clamped to `[iou_clamp, 1]` before the logarithm.
    pub iou_clamp: f64,
    /// Lower bound on the smooth-L1 magnitude used as a divisor.
    pub ls_guard: f64,
}

impl Default for LossConfig {
    fn default() -> Self {
        Self {
            alpha: 2.0,
            beta: 4.0,
            gamma: 1.0,
            prob_clamp: 1e-6,
            iou_clamp: 1e-6,
            ls_guard: 1e-9,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossBreakdown {
    pub hm: f64,
    pub off: f64,
    pub encode: f64,
    pub total: f64,
}

pub fn total_loss(hm: f64, off: f64, encode: f64) -> LossBreakdown {
    LossBreakdown {
        hm,
        off,
        encode,
        total: hm + off + encode,
    }
}

/// A scalar loss and its gradient with respect to the predicted grid.
#[derive(Debug, Clone, PartialEq)]
pub struct LossWithGrad {
    pub value: f64,
    pub grad: Grid,
}

/// Focal loss of a predicted heatmap against Gaussian targets, normalised
/// by the number of targets `k`.
pub fn heatmap_loss(
    pred: &HeatmapGrid,
    gt: &HeatmapGrid,
    k: usize,
    cfg: &LossConfig,
) -> Result<LossWithGrad> {
    pred.check_shape(gt, "heatmap prediction vs target")?;
    if pred.channels() != 1 {
        return Err(Error::DimMismatch("heatmap must have one channel".into()));
    }
    if k == 0 {
        return Err(Error::InvalidArgument("heatmap loss needs K >= 1".into()));
    }
    let (lo, hi) = (cfg.prob_clamp, 1.0 - cfg.prob_clamp);
    let scale = -1.0 / k as f64;
    let mut grad = Grid::zeros(pred.width(), pred.height(), 1);
    let mut sum = 0.0;
    for (i, (&raw, &y)) in pred.data().iter().zip(gt.data()).enumerate() {
        let p = raw.clamp(lo, hi);
        let q = 1.0 - p;
        let (term, dterm) = if y >= 1.0 {
            let t = q.powf(cfg.alpha) * p.ln();
            let dt = -cfg.alpha * q.powf(cfg.alpha - 1.0) * p.ln() + q.powf(cfg.alpha) / p;
            (t, dt)
        } else {
            let w = (1.0 - y).powf(cfg.beta);
            let t = w * p.powf(cfg.alpha) * q.ln();
            let dt = w * (cfg.alpha * p.powf(cfg.alpha - 1.0) * q.ln() - p.powf(cfg.alpha) / q);
            (t, dt)
        };
        sum += term;
        if (lo..=hi).contains(&raw) {
            grad.data_mut()[i] = scale * dterm;
        }
    }
    Ok(LossWithGrad {
        value: scale * sum,
        grad,
    })
}

/// Mean absolute offset error over the masked center cells (both channels
/// summed per target). The subgradient at an exact tie is 0.
pub fn offset_loss(pred: &OffsetGrid, gt: &OffsetGrid, mask: &CenterMask) -> Result<LossWithGrad> {
    pred.check_shape(gt, "offset prediction vs target")?;
    if pred.channels() != 2 || mask.dims() != pred.dims() {
        return Err(Error::DimMismatch(
            "offset grids need two channels and a matching mask".into(),
        ));
    }
    let k = mask.count();
    if k == 0 {
        return Err(Error::EmptyMask);
    }
    let inv_k = 1.0 / k as f64;
    let mut grad = Grid::zeros(pred.width(), pred.height(), 2);
    let mut sum = 0.0;
    for (x, y) in mask.iter() {
        for c in 0..2 {
            let diff = pred.get(x, y, c) - gt.get(x, y, c);
            sum += diff.abs();
            let g = if diff > 0.0 {
                inv_k
            } else if diff < 0.0 {
                -inv_k
            } else {
                0.0
            };
            grad.set(x, y, c, g);
        }
    }
    Ok(LossWithGrad {
        value: sum * inv_k,
        grad,
    })
}

/// Smooth-L1 of `x1 - x2` and its derivative in `x1`.
pub fn smooth_l1(x1: f64, x2: f64) -> (f64, f64) {
    let d = x1 - x2;
    if d.abs() < 1.0 {
        (0.5 * d * d, d)
    } else {
        (d.abs() - 0.5, d.signum())
    }
}

/// Per-target weight `1 + gamma * (-ln IOU) / L_s` with both guards applied.
pub fn iou_weight(ls: f64, iou: f64, cfg: &LossConfig) -> f64 {
    let iou = iou.clamp(cfg.iou_clamp, 1.0);
    1.0 + cfg.gamma * (-iou.ln()) / ls.abs().max(cfg.ls_guard)
}

/// Diagnostics and gradient for one target of the encoding loss.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodingTerm {
    /// Weighted contribution `weight * smooth_l1`.
    pub loss: f64,
    pub smooth_l1: f64,
    /// Unclamped IOU of the decoded prediction against the ground truth.
    pub iou: f64,
    pub weight: f64,
    /// `weight * d smooth_l1 / d pred`.
    pub grad: Vec<f64>,
}

/// IOU of the box decoded from `distances` around `center` against `gt`;
/// 0 when the prediction does not decode.
pub fn predicted_iou(distances: &[f64], center: Point2, gt: &OrientedBox) -> f64 {
    PolarEncoding::new(center, distances.to_vec())
        .and_then(|enc| decode(&enc))
        .map(|b| rotated_iou(&b, gt))
        .unwrap_or(0.0)
}

/// IOU-weighted smooth-L1 for a single target. The weight is evaluated at
/// `pred` and treated as a constant in the gradient.
pub fn encoding_term(
    pred: &[f64],
    target: &[f64],
    center: Point2,
    gt: &OrientedBox,
    cfg: &LossConfig,
) -> Result<EncodingTerm> {
    if pred.len() != target.len() {
        return Err(Error::DimMismatch(format!(
            "prediction has {} channels, target {}",
            pred.len(),
            target.len()
        )));
    }
    let iou = predicted_iou(pred, center, gt);
    let (ls, dls) = smooth_l1_sum(pred, target);
    let weight = iou_weight(ls, iou, cfg);
    Ok(EncodingTerm {
        loss: weight * ls,
        smooth_l1: ls,
        iou,
        weight,
        grad: dls.into_iter().map(|g| weight * g).collect(),
    })
}

fn smooth_l1_sum(pred: &[f64], target: &[f64]) -> (f64, Vec<f64>) {
    let mut ls = 0.0;
    let grad = pred
        .iter()
        .zip(target)
        .map(|(&p, &t)| {
            let (v, d) = smooth_l1(p, t);
            ls += v;
            d
        })
        .collect();
    (ls, grad)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EncodingLoss {
    pub value: f64,
    pub grad: EncodingGrid,
    /// Per-target IOU weights, in target order.
    pub weights: Vec<f64>,
    /// Per-target IOUs, in target order.
    pub ious: Vec<f64>,
}

/// Encoding loss averaged over the targets. `targets` carries, for each
/// ground-truth box, its center cell and the ground-truth encoding.
pub fn encoding_loss(
    pred: &EncodingGrid,
    targets: &[CenterTarget],
    encodings: &EncodingGrid,
    cfg: &LossConfig,
) -> Result<EncodingLoss> {
    pred.check_shape(encodings, "encoding prediction vs target")?;
    if targets.is_empty() {
        return Err(Error::EmptyMask);
    }
    let inv_k = 1.0 / targets.len() as f64;
    let mut grad = Grid::zeros(pred.width(), pred.height(), pred.channels());
    let mut value = 0.0;
    let mut weights = Vec::with_capacity(targets.len());
    let mut ious = Vec::with_capacity(targets.len());
    for t in targets {
        let (x, y) = t.cell;
        let term = encoding_term(pred.cell(x, y), encodings.cell(x, y), t.center, &t.gt, cfg)?;
        value += term.loss;
        for (g, tg) in grad.cell_mut(x, y).iter_mut().zip(&term.grad) {
            *g += inv_k * tg;
        }
        weights.push(term.weight);
        ious.push(term.iou);
    }
    Ok(EncodingLoss {
        value: value * inv_k,
        grad,
        weights,
        ious,
    })
}

/// The encoding loss with externally fixed per-target weights. Its exact
/// gradient equals the one [`encoding_loss`] reports when `weights` are the
/// weights it returned.
pub fn encoding_loss_with_weights(
    pred: &EncodingGrid,
    targets: &[CenterTarget],
    encodings: &EncodingGrid,
    weights: &[f64],
) -> Result<LossWithGrad> {
    pred.check_shape(encodings, "encoding prediction vs target")?;
    if targets.is_empty() {
        return Err(Error::EmptyMask);
    }
    if weights.len() != targets.len() {
        return Err(Error::DimMismatch("one weight per target required".into()));
    }
    let inv_k = 1.0 / targets.len() as f64;
    let mut grad = Grid::zeros(pred.width(), pred.height(), pred.channels());
    let mut value = 0.0;
    for (t, &w) in targets.iter().zip(weights) {
        let (x, y) = t.cell;
        let (ls, dls) = smooth_l1_sum(pred.cell(x, y), encodings.cell(x, y));
        value += w * ls;
        for (g, d) in grad.cell_mut(x, y).iter_mut().zip(dls) {
            *g += inv_k * w * d;
        }
    }
    Ok(LossWithGrad {
        value: value * inv_k,
        grad,
    })
}
