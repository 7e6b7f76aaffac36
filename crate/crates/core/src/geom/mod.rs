//! Planar polygon primitives.
//!
//! All coordinates are assumed to be in a projected CRS with meter units;
//! nothing here reprojects or accounts for curvature.

mod bisect;
mod boundary;
mod index;
mod overlay;

pub use bisect::{bisect, Halves};
pub use boundary::{
    point_boundary_distance, point_segment_distance, ring_self_intersects, segments_intersect,
    shared_boundary_length,
};
pub use index::SpatialIndex;
pub use overlay::{intersection_area, rect_intersection_area};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default adjacency tolerance in meters.
pub const DEFAULT_ADJACENCY_TOL: f64 = 0.01;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn distance(self, other: Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn distance_sq(self, other: Point) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        dx * dx + dy * dy
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub(crate) fn sub(self, o: Point) -> Point {
        Point::new(self.x - o.x, self.y - o.y)
    }

    pub(crate) fn dot(self, o: Point) -> f64 {
        self.x * o.x + self.y * o.y
    }

    pub(crate) fn cross(self, o: Point) -> f64 {
        self.x * o.y - self.y * o.x
    }
}

/// Axis-aligned bounding box.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BBox {
    pub min: Point,
    pub max: Point,
}

impl BBox {
    pub fn of_points<'a>(pts: impl IntoIterator<Item = &'a Point>) -> Option<BBox> {
        let mut it = pts.into_iter();
        let first = *it.next()?;
        let mut b = BBox {
            min: first,
            max: first,
        };
        for p in it {
            b.min.x = b.min.x.min(p.x);
            b.min.y = b.min.y.min(p.y);
            b.max.x = b.max.x.max(p.x);
            b.max.y = b.max.y.max(p.y);
        }
        Some(b)
    }

    pub fn intersects(&self, o: &BBox, pad: f64) -> bool {
        self.min.x <= o.max.x + pad
            && o.min.x <= self.max.x + pad
            && self.min.y <= o.max.y + pad
            && o.min.y <= self.max.y + pad
    }

    pub fn contains(&self, p: Point) -> bool {
        p.x >= self.min.x && p.x <= self.max.x && p.y >= self.min.y && p.y <= self.max.y
    }

    pub fn width(&self) -> f64 {
        self.max.x - self.min.x
    }

    pub fn height(&self) -> f64 {
        self.max.y - self.min.y
    }

    pub fn diagonal(&self) -> f64 {
        self.width().hypot(self.height())
    }
}

/// Twice the signed area of a closed ring (positive when counter-clockwise).
pub(crate) fn ring_signed_area2(ring: &[Point]) -> f64 {
    ring.windows(2).map(|w| w[0].cross(w[1])).sum()
}

fn ring_length(ring: &[Point]) -> f64 {
    ring.windows(2).map(|w| w[0].distance(w[1])).sum()
}

/// Even-odd point in closed ring test. Points on the boundary may go either way.
pub(crate) fn ring_contains(ring: &[Point], p: Point) -> bool {
    let mut inside = false;
    for w in ring.windows(2) {
        let (a, b) = (w[0], w[1]);
        if (a.y > p.y) != (b.y > p.y) {
            let x = a.x + (p.y - a.y) / (b.y - a.y) * (b.x - a.x);
            if p.x < x {
                inside = !inside;
            }
        }
    }
    inside
}

/// Closes the ring, drops consecutive duplicates and enforces orientation.
fn normalize_ring(mut pts: Vec<Point>, ccw: bool) -> Result<Vec<Point>> {
    if pts.iter().any(|p| !p.is_finite()) {
        return Err(Error::InvalidGeometry("non-finite coordinate".into()));
    }
    pts.dedup();
    if pts.len() > 1 && pts.first() == pts.last() {
        pts.pop();
    }
    if pts.len() < 3 {
        return Err(Error::InvalidGeometry(format!(
            "ring has {} distinct vertices, need at least 3",
            pts.len()
        )));
    }
    pts.push(pts[0]);
    let a2 = ring_signed_area2(&pts);
    if a2 == 0.0 {
        return Err(Error::InvalidGeometry("zero-area ring".into()));
    }
    if (a2 > 0.0) != ccw {
        pts.reverse();
    }
    Ok(pts)
}

/// A simple polygon with optional holes. The exterior is stored counter-clockwise
/// and holes clockwise; every ring is closed (first point repeated last).
#[derive(Clone, Debug, PartialEq)]
pub struct Polygon {
    exterior: Vec<Point>,
    holes: Vec<Vec<Point>>,
}

impl Polygon {
    /// Builds a polygon from rings given in either orientation, open or closed.
    pub fn new(exterior: Vec<Point>, holes: Vec<Vec<Point>>) -> Result<Self> {
        let exterior = normalize_ring(exterior, true)?;
        let holes = holes
            .into_iter()
            .map(|h| normalize_ring(h, false))
            .collect::<Result<Vec<_>>>()?;
        let poly = Polygon { exterior, holes };
        if poly.signed_area2() <= 0.0 {
            return Err(Error::InvalidGeometry(
                "holes cover the whole exterior".into(),
            ));
        }
        Ok(poly)
    }

    pub fn from_coords(exterior: &[(f64, f64)]) -> Result<Self> {
        Polygon::new(
            exterior.iter().map(|&(x, y)| Point::new(x, y)).collect(),
            vec![],
        )
    }

    pub fn rect(x0: f64, y0: f64, x1: f64, y1: f64) -> Result<Self> {
        Polygon::from_coords(&[(x0, y0), (x1, y0), (x1, y1), (x0, y1)])
    }

    pub fn exterior(&self) -> &[Point] {
        &self.exterior
    }

    pub fn holes(&self) -> &[Vec<Point>] {
        &self.holes
    }

    pub fn rings(&self) -> impl Iterator<Item = &[Point]> {
        std::iter::once(self.exterior.as_slice()).chain(self.holes.iter().map(Vec::as_slice))
    }

    fn signed_area2(&self) -> f64 {
        self.rings().map(ring_signed_area2).sum()
    }

    /// Shoelace area of the exterior minus the holes.
    pub fn area(&self) -> f64 {
        0.5 * self.signed_area2()
    }

    pub fn perimeter(&self) -> f64 {
        self.rings().map(ring_length).sum()
    }

    /// Area-weighted centroid; holes subtract.
    pub fn centroid(&self) -> Point {
        // Shift to a local origin to keep the cross products well conditioned
        // with large projected coordinates.
        let o = self.exterior[0];
        let (mut cx, mut cy, mut a2) = (0.0, 0.0, 0.0);
        for ring in self.rings() {
            for w in ring.windows(2) {
                let p = w[0].sub(o);
                let q = w[1].sub(o);
                let c = p.cross(q);
                a2 += c;
                cx += (p.x + q.x) * c;
                cy += (p.y + q.y) * c;
            }
        }
        Point::new(o.x + cx / (3.0 * a2), o.y + cy / (3.0 * a2))
    }

    pub fn bbox(&self) -> BBox {
        BBox::of_points(&self.exterior).expect("exterior is non-empty")
    }

    /// Even-odd containment over all rings.
    pub fn contains(&self, p: Point) -> bool {
        ring_contains(&self.exterior, p) && !self.holes.iter().any(|h| ring_contains(h, p))
    }

    /// Checks ring simplicity and hole placement, which `new` does not.
    pub fn validate(&self) -> Result<()> {
        for (i, ring) in self.rings().enumerate() {
            if ring_self_intersects(ring) {
                return Err(Error::InvalidGeometry(format!("ring {i} self-intersects")));
            }
        }
        for (i, hole) in self.holes.iter().enumerate() {
            if !hole.iter().all(|&p| ring_contains(&self.exterior, p)) {
                return Err(Error::InvalidGeometry(format!(
                    "hole {i} is not inside the exterior"
                )));
            }
        }
        Ok(())
    }

    pub(crate) fn to_geo(&self) -> geo::Polygon<f64> {
        let ring =
            |r: &[Point]| geo::LineString::from(r.iter().map(|p| (p.x, p.y)).collect::<Vec<_>>());
        geo::Polygon::new(
            ring(&self.exterior),
            self.holes.iter().map(|h| ring(h)).collect(),
        )
    }
}

/// Convex hull (Andrew's monotone chain), counter-clockwise, open.
pub(crate) fn convex_hull(points: &[Point]) -> Vec<Point> {
    let mut pts: Vec<Point> = points.to_vec();
    pts.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let turn = |o: Point, a: Point, b: Point| a.sub(o).cross(b.sub(o));
    let mut lower: Vec<Point> = Vec::new();
    for &p in &pts {
        while lower.len() >= 2 && turn(lower[lower.len() - 2], lower[lower.len() - 1], p) <= 0.0 {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<Point> = Vec::new();
    for &p in pts.iter().rev() {
        while upper.len() >= 2 && turn(upper[upper.len() - 2], upper[upper.len() - 1], p) <= 0.0 {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

/// Unit direction of the long side of the minimum-area bounding rectangle.
pub(crate) fn min_rect_long_axis(poly: &Polygon) -> Option<Point> {
    let hull = convex_hull(poly.exterior());
    if hull.len() < 3 {
        return None;
    }
    let mut best: Option<(f64, Point)> = None;
    for i in 0..hull.len() {
        let a = hull[i];
        let b = hull[(i + 1) % hull.len()];
        let len = a.distance(b);
        if len == 0.0 {
            continue;
        }
        let e = Point::new((b.x - a.x) / len, (b.y - a.y) / len);
        let n = Point::new(-e.y, e.x);
        let (mut lo_e, mut hi_e, mut lo_n, mut hi_n) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
        for &p in &hull {
            let d = p.sub(a);
            let pe = d.dot(e);
            let pn = d.dot(n);
            lo_e = lo_e.min(pe);
            hi_e = hi_e.max(pe);
            lo_n = lo_n.min(pn);
            hi_n = hi_n.max(pn);
        }
        let (w, h) = (hi_e - lo_e, hi_n - lo_n);
        let area = w * h;
        // Small relative slack so congruent rectangles resolve to the first edge.
        if best.map_or(true, |(ba, _)| area < ba * (1.0 - 1e-12)) {
            let axis = if w >= h { e } else { n };
            best = Some((area, axis));
        }
    }
    best.map(|(_, axis)| axis)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn square_with_hole() -> Polygon {
        Polygon::new(
            vec![
                Point::new(0.0, 0.0),
                Point::new(2.0, 0.0),
                Point::new(2.0, 2.0),
                Point::new(0.0, 2.0),
            ],
            vec![vec![
                Point::new(0.5, 0.5),
                Point::new(1.5, 0.5),
                Point::new(1.5, 1.5),
                Point::new(0.5, 1.5),
            ]],
        )
        .unwrap()
    }

    fn l_shape() -> Polygon {
        Polygon::from_coords(&[
            (0.0, 0.0),
            (2.0, 0.0),
            (2.0, 1.0),
            (1.0, 1.0),
            (1.0, 2.0),
            (0.0, 2.0),
        ])
        .unwrap()
    }

    #[test]
    fn areas() {
        assert_eq!(Polygon::rect(0.0, 0.0, 1.0, 1.0).unwrap().area(), 1.0);
        assert_eq!(
            Polygon::from_coords(&[(0.0, 0.0), (1.0, 0.0), (0.0, 1.0)])
                .unwrap()
                .area(),
            0.5
        );
        assert_eq!(square_with_hole().area(), 3.0);
    }

    #[test]
    fn orientation_is_normalized() {
        let cw = Polygon::from_coords(&[(0.0, 0.0), (0.0, 1.0), (1.0, 1.0), (1.0, 0.0)]).unwrap();
        assert!(ring_signed_area2(cw.exterior()) > 0.0);
        let p = square_with_hole();
        assert!(ring_signed_area2(&p.holes()[0]) < 0.0);
        assert_eq!(p.exterior().first(), p.exterior().last());
    }

    #[test]
    fn degenerate_rings_rejected() {
        assert!(Polygon::from_coords(&[(0.0, 0.0), (1.0, 0.0), (2.0, 0.0)]).is_err());
        assert!(Polygon::from_coords(&[(0.0, 0.0), (1.0, 1.0)]).is_err());
        assert!(Polygon::from_coords(&[(0.0, 0.0), (f64::NAN, 0.0), (1.0, 1.0)]).is_err());
    }

    #[test]
    fn perimeters() {
        assert_eq!(Polygon::rect(0.0, 0.0, 1.0, 1.0).unwrap().perimeter(), 4.0);
        assert_eq!(Polygon::rect(0.0, 0.0, 2.0, 1.0).unwrap().perimeter(), 6.0);
        assert_eq!(square_with_hole().perimeter(), 12.0);
    }

    #[test]
    fn centroids() {
        let c = Polygon::rect(0.0, 0.0, 1.0, 1.0).unwrap().centroid();
        assert_relative_eq!(c.x, 0.5);
        assert_relative_eq!(c.y, 0.5);
        let t = Polygon::from_coords(&[(0.0, 0.0), (3.0, 0.0), (0.0, 3.0)])
            .unwrap()
            .centroid();
        assert_relative_eq!(t.x, 1.0, epsilon = 1e-12);
        assert_relative_eq!(t.y, 1.0, epsilon = 1e-12);
        // Three unit squares centred at (0.5,0.5), (1.5,0.5), (0.5,1.5), equal weights.
        let l = l_shape().centroid();
        assert_relative_eq!(l.x, 2.5 / 3.0, epsilon = 1e-12);
        assert_relative_eq!(l.y, 2.5 / 3.0, epsilon = 1e-12);
        let h = square_with_hole().centroid();
        assert_relative_eq!(h.x, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn centroid_with_large_offsets() {
        let p = Polygon::rect(500_000.0, 2_500_000.0, 500_010.0, 2_500_020.0).unwrap();
        let c = p.centroid();
        assert_relative_eq!(c.x, 500_005.0, epsilon = 1e-6);
        assert_relative_eq!(c.y, 2_500_010.0, epsilon = 1e-6);
    }

    #[test]
    fn validate_catches_bow_tie_and_stray_hole() {
        let bow = Polygon::from_coords(&[(0.0, 0.0), (2.0, 2.0), (2.0, 0.0), (0.0, 2.1)]).unwrap();
        assert!(bow.validate().is_err());
        let stray = Polygon::new(
            Polygon::rect(0.0, 0.0, 1.0, 1.0)
                .unwrap()
                .exterior()
                .to_vec(),
            vec![Polygon::rect(2.0, 2.0, 2.5, 2.5)
                .unwrap()
                .exterior()
                .to_vec()],
        );
        // exterior minus a disjoint hole still has positive signed area
        assert!(stray.unwrap().validate().is_err());
        assert!(square_with_hole().validate().is_ok());
    }

    #[test]
    fn long_axis_of_rectangle() {
        let r = Polygon::rect(0.0, 0.0, 2.0, 1.0).unwrap();
        let a = min_rect_long_axis(&r).unwrap();
        assert_relative_eq!(a.x.abs(), 1.0, epsilon = 1e-12);
        assert_relative_eq!(a.y, 0.0, epsilon = 1e-12);
        let tall = Polygon::rect(0.0, 0.0, 1.0, 3.0).unwrap();
        let a = min_rect_long_axis(&tall).unwrap();
        assert_relative_eq!(a.y.abs(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn containment() {
        let p = square_with_hole();
        assert!(p.contains(Point::new(0.25, 0.25)));
        assert!(!p.contains(Point::new(1.0, 1.0)));
        assert!(!p.contains(Point::new(3.0, 1.0)));
    }
}
