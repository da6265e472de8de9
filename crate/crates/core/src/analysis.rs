//! Curves describing how the polar representation reacts to rotation:
//! the boundary-distance function `d(phi)`, the summed sample difference
//! `S(theta)` between a box and its rotated copy, and the IOU lost to a
//! pure angle error.

use std::f64::consts::{FRAC_PI_2, PI};

use crate::codec::sample_angle;
use crate::error::{Error, Result};
use crate::geom::{rotated_iou, OrientedBox, Point2};

/// Default angular sweep step.
pub const DEFAULT_STEP: f64 = PI / 360.0;

/// Aspect ratios swept by default for the IOU sensitivity curves.
pub const DEFAULT_ASPECTS: [f64; 4] = [1.0, 2.0, 5.0, 10.0];

/// A labelled sequence of `(x, y)` samples with strictly increasing `x`.
#[derive(Debug, Clone, PartialEq)]
pub struct Curve {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

impl Curve {
    pub fn max_y(&self) -> f64 {
        self.points
            .iter()
            .map(|p| p.1)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Divides every `y` by the curve maximum (no-op when the maximum is 0).
    pub fn normalized(&self) -> Curve {
        let m = self.max_y();
        let points = if m > 0.0 {
            self.points.iter().map(|&(x, y)| (x, y / m)).collect()
        } else {
            self.points.clone()
        };
        Curve {
            label: self.label.clone(),
            points,
        }
    }

    /// Largest `|y[i+1] - y[i]|`.
    pub fn max_jump(&self) -> f64 {
        self.points
            .windows(2)
            .map(|w| (w[1].1 - w[0].1).abs())
            .fold(0.0, f64::max)
    }
}

/// Closed range `[start, end]` sampled every `step`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRange {
    pub start: f64,
    pub end: f64,
    pub step: f64,
}

impl SweepRange {
    pub fn new(start: f64, end: f64, step: f64) -> Self {
        Self { start, end, step }
    }

    pub fn values(&self) -> Result<Vec<f64>> {
        let Self { start, end, step } = *self;
        if !(start.is_finite() && end.is_finite() && step.is_finite()) {
            return Err(Error::BadSweep("non-finite sweep bounds".into()));
        }
        if step <= 0.0 {
            return Err(Error::BadSweep(format!(
                "step must be positive, got {step}"
            )));
        }
        if end < start {
            return Err(Error::BadSweep(format!("empty range [{start}, {end}]")));
        }
        let count = ((end - start) / step + 1e-9).floor() as usize + 1;
        Ok((0..count).map(|k| start + k as f64 * step).collect())
    }
}

/// Distance from the box center to its boundary along polar angle `phi`.
pub fn boundary_distance(obb: &OrientedBox, phi: f64) -> f64 {
    let c = obb.corners();
    let u = c[1] - c[0];
    let v = c[2] - c[1];
    let (half_u, half_v) = (0.5 * u.norm(), 0.5 * v.norm());
    let dir = Point2::from_polar(phi);
    let along_u = (dir.dot(u) / u.norm()).abs();
    let along_v = (dir.dot(v) / v.norm()).abs();
    let reach = |half: f64, along: f64| {
        if along > 0.0 {
            half / along
        } else {
            f64::INFINITY
        }
    };
    reach(half_u, along_u).min(reach(half_v, along_v))
}

/// Sum over the `n` sampling angles of `|d_0 - d_theta|`, where `d_theta`
/// belongs to the box rotated by `theta` about its center.
pub fn s_theta(obb: &OrientedBox, theta: f64, n: usize) -> f64 {
    // a half turn maps a rectangle onto itself
    let reduced = theta.rem_euclid(PI);
    let rotated = if reduced == 0.0 {
        *obb
    } else {
        obb.rotated(reduced)
    };
    (1..=n)
        .map(|i| {
            let phi = sample_angle(i, n);
            (boundary_distance(obb, phi) - boundary_distance(&rotated, phi)).abs()
        })
        .sum()
}

/// IOU between an `aspect x 1` box and its copy rotated by `theta`.
pub fn iou_vs_angle_error(aspect: f64, theta: f64) -> Result<f64> {
    if !(1.0..f64::INFINITY).contains(&aspect) {
        return Err(Error::InvalidArgument(format!(
            "aspect ratio must be >= 1, got {aspect}"
        )));
    }
    let b = prototype(aspect)?;
    Ok(rotated_iou(&b, &b.rotated(theta)))
}

/// Axis-aligned box of height 1 and width `aspect`, centred at the origin.
pub fn prototype(aspect: f64) -> Result<OrientedBox> {
    OrientedBox::from_center(Point2::new(0.0, 0.0), aspect, 1.0, 0.0)
}

/// Which family of curves to sample.
#[derive(Debug, Clone, PartialEq)]
pub enum SweepSpec {
    /// `S(theta)` for each `N`, on an `aspect x 1` box.
    STheta {
        aspect: f64,
        ns: Vec<usize>,
        range: SweepRange,
        normalize: bool,
    },
    /// `d(phi)` for the box and for its copy rotated by `theta`.
    DPhi {
        aspect: f64,
        theta: f64,
        range: SweepRange,
    },
    /// IOU against angle error for each aspect ratio.
    IouSensitivity {
        aspects: Vec<f64>,
        range: SweepRange,
    },
}

impl SweepSpec {
    pub fn s_theta_default(aspect: f64, ns: Vec<usize>) -> Self {
        SweepSpec::STheta {
            aspect,
            ns,
            range: SweepRange::new(0.0, PI, DEFAULT_STEP),
            normalize: false,
        }
    }

    pub fn iou_sensitivity_default() -> Self {
        SweepSpec::IouSensitivity {
            aspects: DEFAULT_ASPECTS.to_vec(),
            range: SweepRange::new(0.0, FRAC_PI_2, DEFAULT_STEP),
        }
    }
}

pub fn emit_curves(sweep: &SweepSpec) -> Result<Vec<Curve>> {
    match sweep {
        SweepSpec::STheta {
            aspect,
            ns,
            range,
            normalize,
        } => {
            if ns.is_empty() {
                return Err(Error::BadSweep("no N values given".into()));
            }
            if let Some(n) = ns.iter().find(|&&n| n < 3) {
                return Err(Error::InvalidArgument(format!(
                    "N must be at least 3, got {n}"
                )));
            }
            let b = prototype(*aspect)?;
            let xs = range.values()?;
            Ok(ns
                .iter()
                .map(|&n| {
                    let curve = Curve {
                        label: format!("s-theta n={n} aspect={aspect}"),
                        points: xs.iter().map(|&t| (t, s_theta(&b, t, n))).collect(),
                    };
                    if *normalize {
                        curve.normalized()
                    } else {
                        curve
                    }
                })
                .collect())
        }
        SweepSpec::DPhi {
            aspect,
            theta,
            range,
        } => {
            let b = prototype(*aspect)?;
            let r = b.rotated(*theta);
            let xs = range.values()?;
            Ok(vec![
                Curve {
                    label: format!("d-phi theta=0 aspect={aspect}"),
                    points: xs.iter().map(|&p| (p, boundary_distance(&b, p))).collect(),
                },
                Curve {
                    label: format!("d-phi theta={theta} aspect={aspect}"),
                    points: xs.iter().map(|&p| (p, boundary_distance(&r, p))).collect(),
                },
            ])
        }
        SweepSpec::IouSensitivity { aspects, range } => {
            if aspects.is_empty() {
                return Err(Error::BadSweep("no aspect ratios given".into()));
            }
            let xs = range.values()?;
            aspects
                .iter()
                .map(|&a| {
                    let points = xs
                        .iter()
                        .map(|&t| iou_vs_angle_error(a, t).map(|iou| (t, iou)))
                        .collect::<Result<Vec<_>>>()?;
                    Ok(Curve {
                        label: format!("iou aspect={a}"),
                        points,
                    })
                })
                .collect()
        }
    }
}

/// Largest gap between the max-normalised `S(theta)` curves at `n` and `4n`
/// over `range`; shrinks as the sampling gets denser.
pub fn s_theta_roughness(aspect: f64, n: usize, range: SweepRange) -> Result<f64> {
    let curves = emit_curves(&SweepSpec::STheta {
        aspect,
        ns: vec![n, 4 * n],
        range,
        normalize: true,
    })?;
    Ok(curves[0]
        .points
        .iter()
        .zip(&curves[1].points)
        .map(|(a, b)| (a.1 - b.1).abs())
        .fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn boundary_distance_examples() {
        let r = OrientedBox::axis_aligned(-2.0, -1.0, 2.0, 1.0).unwrap();
        assert_eq!(boundary_distance(&r, 0.0), 2.0);
        assert!((boundary_distance(&r, 0.5f64.atan()) - 5f64.sqrt()).abs() < 1e-12);
        assert_eq!(boundary_distance(&r, FRAC_PI_2), 1.0);
    }

    #[test]
    fn boundary_distance_has_period_pi() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let b = OrientedBox::from_center(
                Point2::new(rng.gen_range(-50.0..50.0), rng.gen_range(-50.0..50.0)),
                rng.gen_range(1.0..30.0),
                rng.gen_range(1.0..30.0),
                rng.gen_range(0.0..PI),
            )
            .unwrap();
            let phi = rng.gen_range(0.0..2.0 * PI);
            let (d0, d1) = (boundary_distance(&b, phi), boundary_distance(&b, phi + PI));
            assert!((d0 - d1).abs() <= 1e-12, "{d0} vs {d1}");
        }
    }

    #[test]
    fn rotation_shifts_distance_function() {
        let b = prototype(2.0).unwrap();
        let r = b.rotated(0.3);
        for k in 0..50 {
            let phi = k as f64 * 0.1;
            assert!((boundary_distance(&r, phi) - boundary_distance(&b, phi - 0.3)).abs() < 1e-12);
        }
    }

    #[test]
    fn s_theta_zeros() {
        let r = prototype(2.0).unwrap();
        assert_eq!(s_theta(&r, 0.0, 8), 0.0);
        assert_eq!(s_theta(&r, PI, 8), 0.0);
        assert!(s_theta(&r, FRAC_PI_2, 8) > 0.1);
        let sq = prototype(1.0).unwrap();
        assert!(s_theta(&sq, FRAC_PI_2, 8) < 1e-12);
        assert!(s_theta(&sq, 0.3, 8) > 0.0);
    }

    #[test]
    fn s_theta_is_reflection_symmetric_for_grid_aligned_boxes() {
        for (w, h) in [(7.0, 2.0), (2.0, 5.0), (3.0, 3.0)] {
            let r = OrientedBox::from_center(Point2::new(3.0, 1.0), w, h, 0.0).unwrap();
            for k in 1..60 {
                let t = k as f64 * PI / 60.0;
                assert!((s_theta(&r, t, 8) - s_theta(&r, PI - t, 8)).abs() < 1e-9);
                assert!(s_theta(&r, t, 8) >= 0.0);
            }
        }
        // a box tilted off the sampling grid breaks the mirror symmetry
        let tilted = OrientedBox::from_center(Point2::new(0.0, 0.0), 7.0, 2.0, 0.4).unwrap();
        assert!((s_theta(&tilted, 0.3, 8) - s_theta(&tilted, PI - 0.3, 8)).abs() > 1e-3);
    }

    #[test]
    fn iou_sensitivity_examples() {
        assert!((iou_vs_angle_error(1.0, FRAC_PI_2).unwrap() - 1.0).abs() < 1e-12);
        assert!((iou_vs_angle_error(2.0, FRAC_PI_2).unwrap() - 1.0 / 3.0).abs() < 1e-12);
        assert_eq!(iou_vs_angle_error(5.0, 0.0).unwrap(), 1.0);
        assert!(iou_vs_angle_error(0.5, 0.0).is_err());
    }

    #[test]
    fn iou_sensitivity_is_monotone_for_elongated_boxes() {
        let curves = emit_curves(&SweepSpec::IouSensitivity {
            aspects: vec![1.5, 2.0, 5.0, 10.0],
            range: SweepRange::new(0.0, FRAC_PI_2, DEFAULT_STEP),
        })
        .unwrap();
        for c in &curves {
            for w in c.points.windows(2) {
                assert!(w[1].1 <= w[0].1 + 1e-12, "{}: {:?}", c.label, w);
            }
        }
    }

    #[test]
    fn emitted_s_theta_curves_vanish_at_both_ends() {
        let curves = emit_curves(&SweepSpec::s_theta_default(2.0, vec![8, 32])).unwrap();
        assert_eq!(curves.len(), 2);
        for c in &curves {
            assert_eq!(c.points.len(), 361);
            assert_eq!(c.points[0].1, 0.0);
            assert!(c.points.last().unwrap().1 < 1e-12);
            assert!(c.points.windows(2).all(|w| w[1].0 > w[0].0));
        }
        let norm = emit_curves(&SweepSpec::STheta {
            aspect: 2.0,
            ns: vec![8],
            range: SweepRange::new(0.0, PI, DEFAULT_STEP),
            normalize: true,
        })
        .unwrap();
        assert_eq!(norm[0].max_y(), 1.0);
    }

    #[test]
    fn d_phi_curves_are_shifted_copies() {
        let theta = 0.5;
        let curves = emit_curves(&SweepSpec::DPhi {
            aspect: 3.0,
            theta,
            range: SweepRange::new(0.0, 2.0 * PI, 0.01),
        })
        .unwrap();
        let b = prototype(3.0).unwrap();
        for &(phi, d) in &curves[1].points {
            assert!((d - boundary_distance(&b, phi - theta)).abs() < 1e-12);
        }
    }

    #[test]
    fn bad_sweeps_are_rejected() {
        assert!(matches!(
            SweepRange::new(1.0, 0.0, 0.1).values(),
            Err(Error::BadSweep(_))
        ));
        assert!(matches!(
            SweepRange::new(0.0, 1.0, 0.0).values(),
            Err(Error::BadSweep(_))
        ));
        assert!(matches!(
            SweepRange::new(0.0, 1.0, -1.0).values(),
            Err(Error::BadSweep(_))
        ));
        assert_eq!(SweepRange::new(0.0, 0.0, 0.1).values().unwrap(), vec![0.0]);
        assert!(matches!(
            emit_curves(&SweepSpec::IouSensitivity {
                aspects: vec![],
                range: SweepRange::new(0.0, 1.0, 0.1)
            }),
            Err(Error::BadSweep(_))
        ));
    }

    #[test]
    fn denser_sampling_smooths_s_theta() {
        let range = SweepRange::new(0.0, PI, DEFAULT_STEP);
        let r: Vec<f64> = [4, 8, 16, 32]
            .iter()
            .map(|&n| s_theta_roughness(2.0, n, range).unwrap())
            .collect();
        assert!(r.windows(2).all(|w| w[1] < w[0]), "{r:?}");
        let locked = [
            0.350046293300,
            0.060686654348,
            0.021178195556,
            0.005670706533,
        ];
        for (got, want) in r.iter().zip(locked) {
            assert!((got - want).abs() < 1e-9, "{got} vs {want}");
        }
    }
}
