//! Polar encoding of oriented boxes.
//!
//! A box is summarised by its center and `N` center-to-boundary distances
//! sampled at angles `pi * i / N` for `i = 1..=N`. Because a rectangle is
//! centrally symmetric, those `N` samples describe `2N` boundary points,
//! and decoding recovers the box as the minimum-area rectangle around them.

use std::f64::consts::PI;

use crate::error::{degenerate, Error, Result};
use crate::geom::{convex_hull, min_bounding_box, OrientedBox, Point2};

/// Default number of sampling angles.
pub const DEFAULT_N: usize = 8;

/// Guard on the ray/edge intersection denominator.
const DENOM_GUARD: f64 = 1e-12;

/// Center plus `N` boundary distances; `distances[i - 1]` is sampled at
/// angle `pi * i / N`.
#[derive(Debug, Clone, PartialEq)]
pub struct PolarEncoding {
    pub center: Point2,
    pub distances: Vec<f64>,
}

impl PolarEncoding {
    /// Validated constructor: `N >= 3`, distances finite and positive.
    pub fn new(center: Point2, distances: Vec<f64>) -> Result<Self> {
        if distances.len() < 3 {
            return Err(Error::InvalidArgument(format!(
                "encoding needs N >= 3, got {}",
                distances.len()
            )));
        }
        if !center.is_finite() {
            return Err(Error::InvalidArgument("non-finite center".into()));
        }
        if let Some(d) = distances.iter().find(|d| !(d.is_finite() && **d > 0.0)) {
            return Err(Error::InvalidArgument(format!(
                "distance {d} is not positive"
            )));
        }
        Ok(Self { center, distances })
    }

    pub fn n(&self) -> usize {
        self.distances.len()
    }

    /// Sampling angle of the `i`-th distance (0-based).
    pub fn angle(&self, i: usize) -> f64 {
        sample_angle(i + 1, self.n())
    }
}

/// `pi * i / n` for the 1-based sample index `i`.
pub fn sample_angle(i: usize, n: usize) -> f64 {
    PI * i as f64 / n as f64
}

/// Corner polar coordinates around the box center, sorted by angle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SortedCornerFrame {
    pub center: Point2,
    /// Strictly increasing, each in `(-pi, pi]`.
    pub sorted_angles: [f64; 4],
    pub radii: [f64; 4],
}

impl SortedCornerFrame {
    /// The two corners bounding the edge hit by a ray at `theta`.
    ///
    /// Intervals are half-open on the left: `(a1, a2]`, `(a2, a3]`,
    /// `(a3, a4]` and the wrap-around `(-pi, a1] U (a4, pi]`.
    pub fn edge_for(&self, theta: f64) -> ((f64, f64), (f64, f64)) {
        let below = self.sorted_angles.partition_point(|&a| a < theta);
        let (j, k) = match below {
            0 | 4 => (3, 0),
            b => (b - 1, b),
        };
        (
            (self.radii[j], self.sorted_angles[j]),
            (self.radii[k], self.sorted_angles[k]),
        )
    }

    /// Distance from the center to the boundary along polar angle `theta`.
    pub fn distance_at(&self, theta: f64) -> Result<f64> {
        let ((rj, aj), (rk, ak)) = self.edge_for(wrap_angle(theta));
        let denom = rk * (theta - ak).sin() + rj * (aj - theta).sin();
        if denom.abs() < DENOM_GUARD {
            return Err(Error::NumericalGuard(format!(
                "edge denominator {denom:e} at angle {theta}"
            )));
        }
        Ok(rj * rk * (aj - ak).sin() / denom)
    }
}

/// Maps an angle into `(-pi, pi]`.
fn wrap_angle(theta: f64) -> f64 {
    let mut t = (theta + PI).rem_euclid(2.0 * PI) - PI;
    if t <= -PI {
        t += 2.0 * PI;
    }
    t
}

/// Polar angle of a corner vector. Corners below the center in image
/// coordinates (`dy > 0`) get negative angles; `dy == 0` counts as above.
fn corner_angle(dx: f64, dy: f64, z: f64) -> f64 {
    let a = (dx / z).clamp(-1.0, 1.0).acos();
    if dy > 0.0 {
        let neg = -a;
        if neg <= -PI {
            PI
        } else {
            neg
        }
    } else {
        a
    }
}

pub fn corner_frame(obb: &OrientedBox) -> Result<SortedCornerFrame> {
    let center = obb.center();
    let mut polar: Vec<(f64, f64)> = Vec::with_capacity(4);
    for &c in obb.corners() {
        let v = c - center;
        let z = v.norm();
        if z == 0.0 {
            return Err(degenerate("corner coincides with the box center"));
        }
        polar.push((corner_angle(v.x, v.y, z), z));
    }
    polar.sort_by(|a, b| a.0.total_cmp(&b.0));
    if polar.windows(2).any(|w| w[0].0 >= w[1].0) {
        return Err(degenerate("corner angles are not distinct"));
    }
    Ok(SortedCornerFrame {
        center,
        sorted_angles: std::array::from_fn(|i| polar[i].0),
        radii: std::array::from_fn(|i| polar[i].1),
    })
}

pub fn encode(obb: &OrientedBox, n: usize) -> Result<PolarEncoding> {
    if n < 3 {
        return Err(Error::InvalidArgument(format!(
            "N must be at least 3, got {n}"
        )));
    }
    let frame = corner_frame(obb)?;
    let distances = (1..=n)
        .map(|i| frame.distance_at(sample_angle(i, n)))
        .collect::<Result<Vec<_>>>()?;
    Ok(PolarEncoding {
        center: frame.center,
        distances,
    })
}

/// The `2N` boundary points implied by an encoding: each distance is placed
/// at its sampling angle and at the opposite angle.
pub fn decode_points(enc: &PolarEncoding) -> Vec<Point2> {
    let n = enc.n();
    let mut pts = Vec::with_capacity(2 * n);
    for (i, &d) in enc.distances.iter().enumerate() {
        let theta = sample_angle(i + 1, n);
        pts.push(enc.center + Point2::from_polar(theta) * d);
    }
    for (i, &d) in enc.distances.iter().enumerate() {
        let theta = sample_angle(i + 1, n) + PI;
        pts.push(enc.center + Point2::from_polar(theta) * d);
    }
    pts
}

pub fn decode(enc: &PolarEncoding) -> Result<OrientedBox> {
    let hull = convex_hull(&decode_points(enc))?;
    min_bounding_box(&hull)
}
