//! Intersection areas between polygons.

use geo::{Area, BooleanOps};

use super::{Point, Polygon};

/// Area of the intersection of two polygons.
pub fn intersection_area(a: &Polygon, b: &Polygon) -> f64 {
    if !a.bbox().intersects(&b.bbox(), 0.0) {
        return 0.0;
    }
    a.to_geo().intersection(&b.to_geo()).unsigned_area()
}

/// Area of `p` inside the axis-aligned rectangle, by clipping every ring
/// against the rectangle. Clipping a concave ring can leave zero-width bridges
/// along the rectangle edges; they carry no area, so the signed sum is exact.
pub fn rect_intersection_area(p: &Polygon, min: Point, max: Point) -> f64 {
    let mut total = 0.0;
    for ring in p.rings() {
        let mut pts: Vec<Point> = ring[..ring.len() - 1].to_vec();
        for edge in 0..4 {
            pts = clip(&pts, |q| match edge {
                0 => q.x - min.x,
                1 => max.x - q.x,
                2 => q.y - min.y,
                _ => max.y - q.y,
            });
            if pts.is_empty() {
                break;
            }
        }
        if pts.len() >= 3 {
            let n = pts.len();
            total += (0..n).map(|i| pts[i].cross(pts[(i + 1) % n])).sum::<f64>() * 0.5;
        }
    }
    total.max(0.0)
}

/// Sutherland-Hodgman against the half-plane `inside(q) >= 0`.
fn clip(pts: &[Point], inside: impl Fn(Point) -> f64) -> Vec<Point> {
    let n = pts.len();
    let mut out = Vec::with_capacity(n + 4);
    for i in 0..n {
        let a = pts[i];
        let b = pts[(i + 1) % n];
        let (da, db) = (inside(a), inside(b));
        if da >= 0.0 {
            out.push(a);
        }
        if (da >= 0.0) != (db >= 0.0) {
            let t = da / (da - db);
            out.push(Point::new(a.x + t * (b.x - a.x), a.y + t * (b.y - a.y)));
        }
    }
    out
}
