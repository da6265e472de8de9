//! Polar boundary encodings for oriented bounding boxes.
//!
//! The crate covers the full path from box annotations to detections without
//! a neural network in the loop:
//!
//! - [`geom`]: polygons, convex hull, clipped rotated IOU, minimum-area boxes.
//! - [`codec`]: encode a box as `N` center-to-boundary distances and decode it back.
//! - [`targets`]: center heatmap, offset and encoding target maps, peak extraction.
//! - [`loss`]: heatmap focal loss, offset L1, IOU-weighted smooth-L1, with gradients.
//! - [`metrics`]: greedy matching, PR curve, AP, best F1, rotated NMS.
//! - [`analysis`]: boundary-distance curves, sampled-difference curves, IOU sensitivity.
//! - [`descent`]: gradient-descent fitting harness and an angle-based baseline.
//! - [`io`]: the plain-text quad annotation format and CSV writers.

pub mod analysis;
pub mod codec;
pub mod descent;
pub mod error;
pub mod geom;
pub mod io;
pub mod loss;
pub mod metrics;
pub mod targets;

pub use codec::PolarEncoding;
pub use error::{Error, Result};
pub use geom::{OrientedBox, Point2, Polygon};
