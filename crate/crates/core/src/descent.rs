//! Gradient-descent fitting of a polar encoding to a single ground-truth box,
//! plus a naive angle-parameterized baseline loss for comparison.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::analysis::Curve;
use crate::codec::encode;
use crate::error::{Error, Result};
use crate::geom::{BoxParam, OrientedBox};
use crate::loss::{encoding_term, smooth_l1, LossConfig};

pub const DEFAULT_STEPS: usize = 200;
pub const DEFAULT_LEARNING_RATE: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitConfig {
    pub steps: usize,
    pub learning_rate: f64,
    /// Relative half-width of the uniform noise applied to each initial distance.
    pub init_perturbation: f64,
    pub seed: u64,
    pub loss: LossConfig,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            steps: DEFAULT_STEPS,
            learning_rate: DEFAULT_LEARNING_RATE,
            init_perturbation: 0.3,
            seed: 0,
            loss: LossConfig::default(),
        }
    }
}

impl FitConfig {
    fn validate(&self) -> Result<()> {
        if self.steps == 0 {
            return Err(Error::InvalidArgument("steps must be at least 1".into()));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "learning rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if !(0.0..f64::INFINITY).contains(&self.init_perturbation) {
            return Err(Error::InvalidArgument(format!(
                "perturbation must be non-negative, got {}",
                self.init_perturbation
            )));
        }
        Ok(())
    }
}

/// State before step `step` is applied.
#[derive(Debug, Clone, PartialEq)]
pub struct FitRecord {
    pub step: usize,
    pub loss: f64,
    pub iou: f64,
    pub distances: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitTrace {
    pub records: Vec<FitRecord>,
}

impl FitTrace {
    pub fn initial(&self) -> &FitRecord {
        &self.records[0]
    }

    pub fn last(&self) -> &FitRecord {
        self.records
            .last()
            .expect("trace always holds the initial state")
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// True when no step raised the loss by more than `tol`.
    pub fn is_non_increasing(&self, tol: f64) -> bool {
        self.records
            .windows(2)
            .all(|w| w[1].loss <= w[0].loss + tol)
    }
}

/// Fits `n` distances around the ground-truth center to `gt` by plain
/// gradient descent on the IOU-weighted smooth-L1 term.
pub fn fit_polar(gt: &OrientedBox, cfg: &FitConfig, n: usize) -> Result<FitTrace> {
    cfg.validate()?;
    let target = encode(gt, n)?;
    let center = target.center;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let p = cfg.init_perturbation;
    let mut pred: Vec<f64> = target
        .distances
        .iter()
        .map(|&d| {
            if p > 0.0 {
                d * (1.0 + rng.gen_range(-p..=p))
            } else {
                d
            }
        })
        .collect();

    let mut records = Vec::with_capacity(cfg.steps + 1);
    for step in 0..=cfg.steps {
        let term = encoding_term(&pred, &target.distances, center, gt, &cfg.loss)?;
        records.push(FitRecord {
            step,
            loss: term.loss,
            iou: term.iou,
            distances: pred.clone(),
        });
        if step == cfg.steps {
            break;
        }
        for (x, g) in pred.iter_mut().zip(&term.grad) {
            *x -= cfg.learning_rate * g;
        }
    }
    Ok(FitTrace { records })
}

/// Smooth-L1 summed over center, sides and angle, with no wraparound
/// handling of the angle.
pub fn angle_baseline_loss(pred: &BoxParam, gt: &BoxParam) -> f64 {
    [
        (pred.center.x, gt.center.x),
        (pred.center.y, gt.center.y),
        (pred.w, gt.w),
        (pred.h, gt.h),
        (pred.alpha, gt.alpha),
    ]
    .iter()
    .map(|&(a, b)| smooth_l1(a, b).0)
    .sum()
}

/// Loss between `proto` and its copy rotated by each `theta`, under the polar
/// encoding (first curve) and the angle baseline (second curve).
pub fn boundary_sweep_compare(
    proto: &OrientedBox,
    thetas: &[f64],
    n: usize,
    cfg: &LossConfig,
) -> Result<(Curve, Curve)> {
    if thetas.is_empty() {
        return Err(Error::BadSweep("no rotation angles given".into()));
    }
    let target = encode(proto, n)?;
    let gt_param = proto.to_param();
    let mut polar = Vec::with_capacity(thetas.len());
    let mut baseline = Vec::with_capacity(thetas.len());
    for &theta in thetas {
        let rotated = proto.rotated(theta);
        let pred = encode(&rotated, n)?;
        let term = encoding_term(
            &pred.distances,
            &target.distances,
            target.center,
            proto,
            cfg,
        )?;
        polar.push((theta, term.loss));
        baseline.push((theta, angle_baseline_loss(&rotated.to_param(), &gt_param)));
    }
    Ok((
        Curve {
            label: format!("polar n={n}"),
            points: polar,
        },
        Curve {
            label: "angle baseline".into(),
            points: baseline,
        },
    ))
}
