//! Planar geometry primitives used by the codec and the evaluation code.
//!
//! Coordinates are image pixels with `y` growing downwards. Orientation and
//! angles, however, are always expressed in the usual mathematical y-up
//! sense: a polygon is counter-clockwise when its shoelace area is positive,
//! and a direction at angle `a` is the image vector `(cos a, -sin a)`.

use std::f64::consts::{FRAC_PI_2, PI};
use std::ops::{Add, Mul, Neg, Sub};

use crate::error::{degenerate, Error, Result};

/// Absolute tolerance (pixels) for collinearity and point-on-edge tests.
pub const EPS: f64 = 1e-9;

/// Relative tolerance used when validating that four corners form a rectangle.
pub const RECT_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dot(self, other: Point2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    /// z-component of the 2-D cross product.
    pub fn cross(self, other: Point2) -> f64 {
        self.x * other.y - self.y * other.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn distance(self, other: Point2) -> f64 {
        (self - other).norm()
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    /// Image-space unit vector pointing at polar angle `angle` (y-up sense).
    pub fn from_polar(angle: f64) -> Self {
        Self::new(angle.cos(), -angle.sin())
    }

    /// Rotates counter-clockwise (y-up sense) about `center`.
    pub fn rotate_about(self, center: Point2, angle: f64) -> Self {
        let (s, c) = sin_cos(angle);
        let d = self - center;
        Point2::new(center.x + d.x * c + d.y * s, center.y - d.x * s + d.y * c)
    }
}

impl Add for Point2 {
    type Output = Point2;
    fn add(self, rhs: Point2) -> Point2 {
        Point2::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl Sub for Point2 {
    type Output = Point2;
    fn sub(self, rhs: Point2) -> Point2 {
        Point2::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl Mul<f64> for Point2 {
    type Output = Point2;
    fn mul(self, rhs: f64) -> Point2 {
        Point2::new(self.x * rhs, self.y * rhs)
    }
}

impl Neg for Point2 {
    type Output = Point2;
    fn neg(self) -> Point2 {
        Point2::new(-self.x, -self.y)
    }
}

/// `(sin, cos)` that is exact for whole quarter turns.
pub(crate) fn sin_cos(angle: f64) -> (f64, f64) {
    let quarters = angle / FRAC_PI_2;
    if quarters.fract() == 0.0 && quarters.abs() < 1e15 {
        match (quarters as i64).rem_euclid(4) {
            0 => (0.0, 1.0),
            1 => (1.0, 0.0),
            2 => (0.0, -1.0),
            _ => (-1.0, 0.0),
        }
    } else {
        angle.sin_cos()
    }
}

/// Shoelace signed area. Positive for counter-clockwise order (y-up).
pub fn signed_area(vertices: &[Point2]) -> f64 {
    if vertices.len() < 3 {
        return 0.0;
    }
    let origin = vertices[0];
    let mut acc = 0.0;
    for i in 1..vertices.len() - 1 {
        acc += (vertices[i] - origin).cross(vertices[i + 1] - origin);
    }
    0.5 * acc
}

/// A simple polygon given by its ordered vertices.
#[derive(Debug, Clone, PartialEq)]
pub struct Polygon {
    vertices: Vec<Point2>,
}

impl Polygon {
    pub fn new(vertices: Vec<Point2>) -> Result<Self> {
        if vertices.len() < 3 {
            return Err(degenerate(format!(
                "polygon needs at least 3 vertices, got {}",
                vertices.len()
            )));
        }
        if let Some(p) = vertices.iter().find(|p| !p.is_finite()) {
            return Err(degenerate(format!("non-finite vertex {p:?}")));
        }
        Ok(Self { vertices })
    }

    pub fn vertices(&self) -> &[Point2] {
        &self.vertices
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn signed_area(&self) -> f64 {
        signed_area(&self.vertices)
    }

    pub fn area(&self) -> f64 {
        self.signed_area().abs()
    }

    /// The same polygon with counter-clockwise vertex order.
    pub fn to_ccw(&self) -> Polygon {
        let mut vertices = self.vertices.clone();
        if signed_area(&vertices) < 0.0 {
            vertices.reverse();
        }
        Polygon { vertices }
    }

    fn edges(&self) -> impl Iterator<Item = (Point2, Point2)> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| (self.vertices[i], self.vertices[(i + 1) % n]))
    }
}

/// Convex hull in counter-clockwise order, starting from the
/// lexicographically smallest vertex. Duplicates and collinear boundary
/// points are dropped.
pub fn convex_hull(points: &[Point2]) -> Result<Polygon> {
    if let Some(p) = points.iter().find(|p| !p.is_finite()) {
        return Err(degenerate(format!("non-finite point {p:?}")));
    }
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    pts.dedup_by(|a, b| (a.x - b.x).abs() <= EPS && (a.y - b.y).abs() <= EPS);
    if pts.len() < 3 {
        return Err(degenerate("fewer than 3 distinct points"));
    }

    // b turns strictly left of o->a by more than EPS pixels
    let left_turn = |o: Point2, a: Point2, b: Point2| {
        let base = a - o;
        base.cross(b - o) > EPS * base.norm()
    };

    let mut hull: Vec<Point2> = Vec::with_capacity(2 * pts.len());
    for &p in &pts {
        while hull.len() >= 2 && !left_turn(hull[hull.len() - 2], hull[hull.len() - 1], p) {
            hull.pop();
        }
        hull.push(p);
    }
    let lower_len = hull.len() + 1;
    for &p in pts.iter().rev().skip(1) {
        while hull.len() >= lower_len && !left_turn(hull[hull.len() - 2], hull[hull.len() - 1], p) {
            hull.pop();
        }
        hull.push(p);
    }
    hull.pop();

    if hull.len() < 3 {
        return Err(degenerate("all points are collinear"));
    }
    Ok(Polygon { vertices: hull })
}

/// Area of the intersection of two convex polygons, by clipping `a`
/// against each edge half-plane of `b`.
pub fn intersection_area(a: &Polygon, b: &Polygon) -> f64 {
    let a = a.to_ccw();
    let b = b.to_ccw();
    let mut subject = a.vertices;
    for (start, end) in b.edges() {
        if subject.len() < 3 {
            return 0.0;
        }
        subject = clip_half_plane(&subject, start, end);
    }
    if subject.len() < 3 {
        return 0.0;
    }
    signed_area(&subject).abs()
}

/// Keeps the part of `poly` left of the directed line `start -> end`.
fn clip_half_plane(poly: &[Point2], start: Point2, end: Point2) -> Vec<Point2> {
    let edge = end - start;
    let len = edge.norm();
    if len == 0.0 {
        return poly.to_vec();
    }
    let side = |p: Point2| edge.cross(p - start) / len;
    let mut out = Vec::with_capacity(poly.len() + 2);
    for i in 0..poly.len() {
        let cur = poly[i];
        let next = poly[(i + 1) % poly.len()];
        let (sc, sn) = (side(cur), side(next));
        let cur_in = sc >= -EPS;
        let next_in = sn >= -EPS;
        if cur_in {
            out.push(cur);
        }
        if cur_in != next_in && (sc - sn).abs() > 0.0 {
            let t = sc / (sc - sn);
            out.push(cur + (next - cur) * t);
        }
    }
    out
}

/// Intersection over union of two oriented boxes.
pub fn rotated_iou(a: &OrientedBox, b: &OrientedBox) -> f64 {
    if a == b {
        return 1.0;
    }
    let inter = intersection_area(&a.to_polygon(), &b.to_polygon());
    let union = a.area() + b.area() - inter;
    if union <= 0.0 {
        return 0.0;
    }
    (inter / union).clamp(0.0, 1.0)
}

/// Minimum-area enclosing rectangle of a convex hull.
///
/// For every hull edge the vertices are projected onto the edge direction
/// and its normal; the candidate rectangle spans the projection extremes
/// and the one with the smallest area wins. Projections are signed and
/// taken relative to the first hull vertex.
pub fn min_bounding_box(hull: &Polygon) -> Result<OrientedBox> {
    let verts = hull.vertices();
    if hull.area() <= 0.0 {
        return Err(degenerate("hull has zero area"));
    }
    let origin = verts[0];
    let mut best: Option<(f64, [Point2; 4])> = None;
    for (p, q) in hull.edges() {
        let edge = q - p;
        let len = edge.norm();
        if len <= EPS {
            continue;
        }
        let along = edge * (1.0 / len);
        let ortho = Point2::new(edge.y, -edge.x) * (1.0 / len);
        let (mut min_p, mut max_p) = (f64::INFINITY, f64::NEG_INFINITY);
        let (mut min_o, mut max_o) = (f64::INFINITY, f64::NEG_INFINITY);
        for &v in verts {
            let rel = v - origin;
            let pp = rel.dot(along);
            let po = rel.dot(ortho);
            min_p = min_p.min(pp);
            max_p = max_p.max(pp);
            min_o = min_o.min(po);
            max_o = max_o.max(po);
        }
        let area = (max_p - min_p) * (max_o - min_o);
        if best.as_ref().is_none_or(|(a, _)| area < *a) {
            let at = |sp: f64, so: f64| origin + along * sp + ortho * so;
            best = Some((
                area,
                [
                    at(min_p, min_o),
                    at(max_p, min_o),
                    at(max_p, max_o),
                    at(min_p, max_o),
                ],
            ));
        }
    }
    match best {
        Some((area, corners)) if area > 0.0 && area.is_finite() => Ok(OrientedBox { corners }),
        _ => Err(degenerate("no valid bounding box candidate")),
    }
}

/// A rectangle at arbitrary rotation, stored as its four corners in
/// cyclic order (either orientation).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrientedBox {
    corners: [Point2; 4],
}

impl OrientedBox {
    pub fn new(corners: [Point2; 4]) -> Result<Self> {
        Self::with_tolerance(corners, RECT_TOL)
    }

    /// Validates the corners as a rectangle with relative tolerance `rel_tol`.
    pub fn with_tolerance(corners: [Point2; 4], rel_tol: f64) -> Result<Self> {
        check_rectangle(&corners, rel_tol)?;
        Ok(Self { corners })
    }

    /// Box centred at `center` whose `width` side points along polar angle `angle`.
    pub fn from_center(center: Point2, width: f64, height: f64, angle: f64) -> Result<Self> {
        if !(width > 0.0 && height > 0.0) || !width.is_finite() || !height.is_finite() {
            return Err(Error::InvalidBox(format!(
                "side lengths must be positive, got {width} x {height}"
            )));
        }
        let (s, c) = sin_cos(angle);
        let u = Point2::new(c, -s) * (0.5 * width);
        let v = Point2::new(-s, -c) * (0.5 * height);
        Self::new([
            center - u - v,
            center + u - v,
            center + u + v,
            center - u + v,
        ])
    }

    pub fn axis_aligned(x0: f64, y0: f64, x1: f64, y1: f64) -> Result<Self> {
        Self::new([
            Point2::new(x0, y0),
            Point2::new(x1, y0),
            Point2::new(x1, y1),
            Point2::new(x0, y1),
        ])
    }

    pub fn corners(&self) -> &[Point2; 4] {
        &self.corners
    }

    pub fn center(&self) -> Point2 {
        let c = &self.corners;
        Point2::new(
            (c[0].x + c[1].x + c[2].x + c[3].x) / 4.0,
            (c[0].y + c[1].y + c[2].y + c[3].y) / 4.0,
        )
    }

    /// Length of the first edge (corner 0 to corner 1).
    pub fn width(&self) -> f64 {
        self.corners[0].distance(self.corners[1])
    }

    /// Length of the second edge (corner 1 to corner 2).
    pub fn height(&self) -> f64 {
        self.corners[1].distance(self.corners[2])
    }

    pub fn short_side(&self) -> f64 {
        self.width().min(self.height())
    }

    pub fn long_side(&self) -> f64 {
        self.width().max(self.height())
    }

    pub fn area(&self) -> f64 {
        signed_area(&self.corners).abs()
    }

    pub fn to_polygon(&self) -> Polygon {
        Polygon {
            vertices: self.corners.to_vec(),
        }
    }

    pub fn rotated(&self, angle: f64) -> Self {
        let c = self.center();
        Self {
            corners: self.corners.map(|p| p.rotate_about(c, angle)),
        }
    }

    pub fn translated(&self, dx: f64, dy: f64) -> Self {
        let d = Point2::new(dx, dy);
        Self {
            corners: self.corners.map(|p| p + d),
        }
    }

    /// Smallest signed distance from `p` to the box's edge lines, positive inside.
    pub fn inner_distance(&self, p: Point2) -> f64 {
        let poly = self.to_polygon().to_ccw();
        poly.edges()
            .map(|(a, b)| {
                let e = b - a;
                e.cross(p - a) / e.norm()
            })
            .fold(f64::INFINITY, f64::min)
    }

    pub fn contains(&self, p: Point2, tol: f64) -> bool {
        self.inner_distance(p) >= -tol
    }

    /// The 90-degree-range angle parameterization of this box.
    pub fn to_param(&self) -> BoxParam {
        let e0 = self.corners[1] - self.corners[0];
        let mut a0 = (-e0.y).atan2(e0.x).rem_euclid(PI);
        if a0 >= PI {
            a0 = 0.0;
        }
        let (alpha, w, h) = if a0 >= FRAC_PI_2 {
            (a0 - FRAC_PI_2, self.height(), self.width())
        } else {
            (a0, self.width(), self.height())
        };
        BoxParam {
            center: self.center(),
            w,
            h,
            alpha,
        }
    }
}

fn check_rectangle(c: &[Point2; 4], rel_tol: f64) -> Result<()> {
    if let Some(p) = c.iter().find(|p| !p.is_finite()) {
        return Err(Error::InvalidBox(format!("non-finite corner {p:?}")));
    }
    let e: [Point2; 4] = std::array::from_fn(|i| c[(i + 1) % 4] - c[i]);
    let len: [f64; 4] = e.map(Point2::norm);
    if len.iter().any(|&l| l <= 0.0) || signed_area(c) == 0.0 {
        return Err(Error::InvalidBox("zero-area box".into()));
    }
    for i in 0..2 {
        let (a, b) = (e[i], e[i + 2]);
        if a.cross(b).abs() > rel_tol * len[i] * len[i + 2] || a.dot(b) >= 0.0 {
            return Err(Error::InvalidBox(format!(
                "edges {i} and {} are not opposite and parallel",
                i + 2
            )));
        }
    }
    if e[0].dot(e[1]).abs() > rel_tol * len[0] * len[1] {
        return Err(Error::InvalidBox(
            "adjacent edges are not perpendicular".into(),
        ));
    }
    Ok(())
}

/// Center, side lengths and angle with `alpha` in `[0, pi/2)`; `w` is the
/// side running along `alpha`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoxParam {
    pub center: Point2,
    pub w: f64,
    pub h: f64,
    pub alpha: f64,
}

impl BoxParam {
    pub fn to_box(&self) -> Result<OrientedBox> {
        OrientedBox::from_center(self.center, self.w, self.h, self.alpha)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn p(x: f64, y: f64) -> Point2 {
        Point2::new(x, y)
    }

    fn unit_square() -> Vec<Point2> {
        vec![p(0.0, 0.0), p(1.0, 0.0), p(1.0, 1.0), p(0.0, 1.0)]
    }

    #[test]
    fn signed_area_orientation() {
        let mut sq = unit_square();
        assert_eq!(signed_area(&sq), 1.0);
        sq.reverse();
        assert_eq!(signed_area(&sq), -1.0);
        assert_eq!(signed_area(&[p(0.0, 0.0), p(1.0, 0.0), p(2.0, 0.0)]), 0.0);
    }

    // Vertices of the hull by brute force: an ordered pair (i, j) is a
    // counter-clockwise hull edge when no point lies strictly right of it
    // and collinear points fall inside the segment.
    fn brute_force_hull_vertices(pts: &[Point2]) -> Vec<Point2> {
        let mut out = Vec::new();
        for (i, &a) in pts.iter().enumerate() {
            for (j, &b) in pts.iter().enumerate() {
                if i == j || a == b {
                    continue;
                }
                let e = b - a;
                let ok = pts.iter().all(|&q| {
                    let c = e.cross(q - a);
                    c > 0.0 || (c == 0.0 && (q - a).dot(e) >= 0.0 && (q - b).dot(e) <= 0.0)
                });
                if ok && !out.contains(&a) {
                    out.push(a);
                }
            }
        }
        out
    }

    #[test]
    fn hull_drops_interior_and_collinear_points() {
        let mut pts = unit_square();
        pts.push(p(0.5, 0.5));
        let hull = convex_hull(&pts).unwrap();
        assert_eq!(hull.len(), 4);
        assert!(hull.signed_area() > 0.0);
        for v in unit_square() {
            assert!(hull.vertices().contains(&v));
        }

        let pts = [p(0.0, 0.0), p(1.0, 0.0), p(2.0, 0.0), p(0.0, 1.0)];
        let hull = convex_hull(&pts).unwrap();
        let mut expected = brute_force_hull_vertices(&pts);
        let mut got = hull.vertices().to_vec();
        let key = |a: &Point2, b: &Point2| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y));
        expected.sort_by(key);
        got.sort_by(key);
        assert_eq!(got, expected);
        assert_eq!(got, vec![p(0.0, 0.0), p(0.0, 1.0), p(2.0, 0.0)]);
    }

    #[test]
    fn hull_of_box_is_its_corners() {
        let b = OrientedBox::from_center(p(3.0, 4.0), 5.0, 2.0, 0.3).unwrap();
        let hull = convex_hull(b.corners()).unwrap();
        assert_eq!(hull.len(), 4);
        for c in b.corners() {
            assert!(hull.vertices().contains(c));
        }
    }

    #[test]
    fn hull_rejects_collinear_and_duplicates() {
        assert!(matches!(
            convex_hull(&[p(0.0, 0.0), p(1.0, 1.0), p(2.0, 2.0), p(3.0, 3.0)]),
            Err(Error::DegenerateInput(_))
        ));
        assert!(convex_hull(&[p(0.0, 0.0), p(0.0, 0.0), p(1.0, 1.0)]).is_err());
    }

    #[test]
    fn intersection_area_examples() {
        let a = Polygon::new(unit_square()).unwrap();
        assert_eq!(intersection_area(&a, &a), 1.0);
        let far = Polygon::new(unit_square().iter().map(|&v| v + p(3.0, 0.0)).collect()).unwrap();
        assert_eq!(intersection_area(&a, &far), 0.0);
        let half = Polygon::new(unit_square().iter().map(|&v| v + p(0.5, 0.0)).collect()).unwrap();
        assert!((intersection_area(&a, &half) - 0.5).abs() < 1e-12);
        assert!((intersection_area(&half, &a) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn iou_of_square_and_its_45_degree_rotation() {
        let a = OrientedBox::axis_aligned(0.0, 0.0, 1.0, 1.0).unwrap();
        let b = a.rotated(std::f64::consts::FRAC_PI_4);
        // octagon area 2(sqrt2 - 1); IOU simplifies to 1/sqrt2
        assert!((rotated_iou(&a, &b) - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
        assert_eq!(rotated_iou(&a, &a), 1.0);
        let far = a.translated(5.0, 5.0);
        assert_eq!(rotated_iou(&a, &far), 0.0);
    }

    fn dense_sweep_min_area(pts: &[Point2]) -> f64 {
        let steps = (PI / 1e-4).ceil() as usize;
        (0..=steps)
            .map(|k| {
                let a = k as f64 * 1e-4;
                let (u, v) = (p(a.cos(), a.sin()), p(-a.sin(), a.cos()));
                let (mut lu, mut hu, mut lv, mut hv) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
                for &q in pts {
                    lu = lu.min(q.dot(u));
                    hu = hu.max(q.dot(u));
                    lv = lv.min(q.dot(v));
                    hv = hv.max(q.dot(v));
                }
                (hu - lu) * (hv - lv)
            })
            .fold(f64::INFINITY, f64::min)
    }

    #[test]
    fn mbb_of_rectangle_and_triangle() {
        let r = OrientedBox::axis_aligned(1.0, 2.0, 5.0, 4.0).unwrap();
        let mbb = min_bounding_box(&convex_hull(r.corners()).unwrap()).unwrap();
        assert!((mbb.area() - 8.0).abs() < 1e-9);

        let tri = [p(0.0, 0.0), p(2.0, 0.0), p(1.0, 3f64.sqrt())];
        let mbb = min_bounding_box(&convex_hull(&tri).unwrap()).unwrap();
        assert!((mbb.area() - 2.0 * 3f64.sqrt()).abs() < 1e-9);
        let sweep = dense_sweep_min_area(&tri);
        assert!((sweep - 3.4641016).abs() < 1e-6);
        assert!(mbb.area() <= sweep * (1.0 + 1e-6));
        for &v in &tri {
            assert!(mbb.contains(v, 1e-9));
        }
    }

    #[test]
    fn mbb_rejects_flat_hull() {
        let poly = Polygon::new(vec![p(0.0, 0.0), p(1.0, 0.0), p(2.0, 0.0)]).unwrap();
        assert!(matches!(
            min_bounding_box(&poly),
            Err(Error::DegenerateInput(_))
        ));
    }

    #[test]
    fn box_validation() {
        assert!(OrientedBox::new([p(0.0, 0.0), p(2.0, 0.0), p(2.0, 1.0), p(0.0, 1.0)]).is_ok());
        // bow-tie ordering
        assert!(OrientedBox::new([p(0.0, 0.0), p(2.0, 1.0), p(2.0, 0.0), p(0.0, 1.0)]).is_err());
        // parallelogram
        assert!(OrientedBox::new([p(0.0, 0.0), p(2.0, 0.0), p(3.0, 1.0), p(1.0, 1.0)]).is_err());
        assert!(OrientedBox::new([p(0.0, 0.0); 4]).is_err());
        assert!(OrientedBox::from_center(p(0.0, 0.0), 0.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn quarter_turns_are_exact() {
        let b = OrientedBox::axis_aligned(0.0, 0.0, 4.0, 2.0).unwrap();
        let r = b.rotated(FRAC_PI_2);
        let xs: Vec<f64> = r.corners().iter().map(|c| c.x).collect();
        let ys: Vec<f64> = r.corners().iter().map(|c| c.y).collect();
        assert_eq!(
            xs.iter().cloned().fold(f64::MIN, f64::max)
                - xs.iter().cloned().fold(f64::MAX, f64::min),
            2.0
        );
        assert_eq!(
            ys.iter().cloned().fold(f64::MIN, f64::max)
                - ys.iter().cloned().fold(f64::MAX, f64::min),
            4.0
        );
        assert_eq!(r.center(), b.center());
        assert_eq!(b.rotated(PI).to_polygon().area(), 8.0);
    }

    #[test]
    fn param_roundtrip_and_range() {
        let b = OrientedBox::from_center(p(10.0, 20.0), 6.0, 2.0, 0.4).unwrap();
        let prm = b.to_param();
        assert!((prm.alpha - 0.4).abs() < 1e-12);
        assert!((prm.w - 6.0).abs() < 1e-12 && (prm.h - 2.0).abs() < 1e-12);

        let b = OrientedBox::from_center(p(0.0, 0.0), 6.0, 2.0, 2.0).unwrap();
        let prm = b.to_param();
        assert!((prm.alpha - (2.0 - FRAC_PI_2)).abs() < 1e-12);
        assert!((prm.w - 2.0).abs() < 1e-12 && (prm.h - 6.0).abs() < 1e-12);
        assert!(rotated_iou(&b, &prm.to_box().unwrap()) > 1.0 - 1e-12);
    }

    fn arb_box() -> impl Strategy<Value = OrientedBox> {
        (
            -50.0..50.0f64,
            -50.0..50.0f64,
            0.5..20.0f64,
            0.5..20.0f64,
            0.0..PI,
        )
            .prop_map(|(x, y, w, h, a)| OrientedBox::from_center(p(x, y), w, h, a).unwrap())
    }

    proptest! {
        #[test]
        fn hull_is_idempotent(pts in prop::collection::vec((-100.0..100.0f64, -100.0..100.0f64), 3..40)) {
            let pts: Vec<Point2> = pts.into_iter().map(|(x, y)| p(x, y)).collect();
            if let Ok(h) = convex_hull(&pts) {
                let h2 = convex_hull(h.vertices()).unwrap();
                prop_assert_eq!(h, h2);
            }
        }

        #[test]
        fn iou_is_bounded_and_symmetric(a in arb_box(), b in arb_box()) {
            let ab = rotated_iou(&a, &b);
            let ba = rotated_iou(&b, &a);
            prop_assert!((0.0..=1.0).contains(&ab));
            prop_assert!((ab - ba).abs() < 1e-9);
            prop_assert!((rotated_iou(&a, &a.translated(0.0, 0.0)) - 1.0).abs() < 1e-12);
        }

        #[test]
        fn mbb_contains_points_and_is_rotation_equivariant(
            pts in prop::collection::vec((-100.0..100.0f64, -100.0..100.0f64), 3..30),
            phi in 0.0..(2.0 * PI),
        ) {
            let pts: Vec<Point2> = pts.into_iter().map(|(x, y)| p(x, y)).collect();
            if let Ok(h) = convex_hull(&pts) {
                if h.area() < 1e-3 {
                    return Ok(());
                }
                let mbb = min_bounding_box(&h).unwrap();
                for &q in &pts {
                    prop_assert!(mbb.inner_distance(q) >= -1e-9);
                }
                let rot: Vec<Point2> = h.vertices().iter().map(|q| q.rotate_about(p(0.0, 0.0), phi)).collect();
                let mbb_rot = min_bounding_box(&convex_hull(&rot).unwrap()).unwrap();
                prop_assert!((mbb_rot.area() - mbb.area()).abs() <= 1e-9 * mbb.area());
            }
        }
    }
}
