//! Boundary relations between rings: shared length and crossings.

use super::{BBox, Point, Polygon};

/// Largest sine of the angle between two edges that still counts as collinear.
const PARALLEL_SIN: f64 = 1e-2;

/// Length of `s`'s span that runs along `t` within `tol` of it.
fn overlap_along(p: Point, q: Point, r: Point, w: Point, tol: f64) -> f64 {
    let len = p.distance(q);
    let tlen = r.distance(w);
    if len == 0.0 || tlen == 0.0 {
        return 0.0;
    }
    let e = Point::new((q.x - p.x) / len, (q.y - p.y) / len);
    let f = Point::new((w.x - r.x) / tlen, (w.y - r.y) / tlen);
    if e.cross(f).abs() > PARALLEL_SIN {
        return 0.0;
    }
    let (ur, uw) = (r.sub(p).dot(e), w.sub(p).dot(e));
    let (hr, hw) = (e.cross(r.sub(p)), e.cross(w.sub(p)));
    if ur == uw {
        return 0.0;
    }
    let mut lo = ur.min(uw).max(0.0);
    let mut hi = ur.max(uw).min(len);
    if hi <= lo {
        return 0.0;
    }
    // Offset of t from s's line is linear in the projected coordinate.
    let h = |u: f64| hr + (hw - hr) * (u - ur) / (uw - ur);
    let slope = (hw - hr) / (uw - ur);
    if slope.abs() < 1e-15 {
        if h(lo).abs() > tol {
            return 0.0;
        }
    } else {
        let ua = ur + (-tol - hr) / slope;
        let ub = ur + (tol - hr) / slope;
        lo = lo.max(ua.min(ub));
        hi = hi.min(ua.max(ub));
    }
    (hi - lo).max(0.0)
}

fn directional(a: &Polygon, b: &Polygon, tol: f64) -> f64 {
    let mut total = 0.0;
    for ra in a.rings() {
        for s in ra.windows(2) {
            let sb = BBox::of_points(s).unwrap();
            for rb in b.rings() {
                for t in rb.windows(2) {
                    let tb = BBox::of_points(t).unwrap();
                    if !sb.intersects(&tb, tol) {
                        continue;
                    }
                    total += overlap_along(s[0], s[1], t[0], t[1], tol);
                }
            }
        }
    }
    total
}

/// Length of boundary the two polygons share, within `tol` meters.
///
/// Only near-collinear edge pairs contribute, so polygons that meet at a single
/// point share nothing. The result is the mean of the two directional measures
/// and therefore symmetric.
pub fn shared_boundary_length(a: &Polygon, b: &Polygon, tol: f64) -> f64 {
    if !a.bbox().intersects(&b.bbox(), tol) {
        return 0.0;
    }
    0.5 * (directional(a, b, tol) + directional(b, a, tol))
}

/// Euclidean distance from `p` to the closed segment `a`-`b`.
pub fn point_segment_distance(p: Point, a: Point, b: Point) -> f64 {
    let ab = b.sub(a);
    let len2 = ab.dot(ab);
    if len2 == 0.0 {
        return p.distance(a);
    }
    let t = (p.sub(a).dot(ab) / len2).clamp(0.0, 1.0);
    p.distance(Point::new(a.x + t * ab.x, a.y + t * ab.y))
}

/// Distance from `p` to the nearest point on any ring of `poly`.
pub fn point_boundary_distance(p: Point, poly: &Polygon) -> f64 {
    poly.rings()
        .flat_map(|r| r.windows(2))
        .map(|w| point_segment_distance(p, w[0], w[1]))
        .fold(f64::INFINITY, f64::min)
}

fn orient(a: Point, b: Point, c: Point) -> f64 {
    b.sub(a).cross(c.sub(a))
}

fn on_segment(a: Point, b: Point, p: Point) -> bool {
    p.x >= a.x.min(b.x) && p.x <= a.x.max(b.x) && p.y >= a.y.min(b.y) && p.y <= a.y.max(b.y)
}

/// Closed-segment intersection test, including touching and collinear overlap.
pub fn segments_intersect(a: Point, b: Point, c: Point, d: Point) -> bool {
    let d1 = orient(c, d, a);
    let d2 = orient(c, d, b);
    let d3 = orient(a, b, c);
    let d4 = orient(a, b, d);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    (d1 == 0.0 && on_segment(c, d, a))
        || (d2 == 0.0 && on_segment(c, d, b))
        || (d3 == 0.0 && on_segment(a, b, c))
        || (d4 == 0.0 && on_segment(a, b, d))
}

/// True when two non-adjacent edges of the closed ring touch or cross.
pub fn ring_self_intersects(ring: &[Point]) -> bool {
    let n = ring.len().saturating_sub(1);
    for i in 0..n {
        for j in (i + 1)..n {
            let adjacent = j == i + 1 || (i == 0 && j == n - 1);
            if adjacent {
                continue;
            }
            if segments_intersect(ring[i], ring[i + 1], ring[j], ring[j + 1]) {
                return true;
            }
        }
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn sq(x: f64, y: f64) -> Polygon {
        Polygon::rect(x, y, x + 1.0, y + 1.0).unwrap()
    }

    #[test]
    fn shared_edge() {
        assert_relative_eq!(
            shared_boundary_length(&sq(0.0, 0.0), &sq(1.0, 0.0), 0.01),
            1.0
        );
    }

    #[test]
    fn corner_contact_is_not_shared() {
        assert_eq!(
            shared_boundary_length(&sq(0.0, 0.0), &sq(1.0, 1.0), 0.01),
            0.0
        );
    }

    #[test]
    fn half_edge_overlap() {
        assert_relative_eq!(
            shared_boundary_length(&sq(0.0, 0.0), &sq(1.0, 0.5), 0.01),
            0.5
        );
    }

    #[test]
    fn disjoint_and_gap_beyond_tolerance() {
        assert_eq!(
            shared_boundary_length(&sq(0.0, 0.0), &sq(3.0, 0.0), 0.01),
            0.0
        );
        assert_eq!(
            shared_boundary_length(&sq(0.0, 0.0), &sq(1.05, 0.0), 0.01),
            0.0
        );
        assert_relative_eq!(
            shared_boundary_length(&sq(0.0, 0.0), &sq(1.005, 0.0), 0.01),
            1.0
        );
    }

    #[test]
    fn split_edge_on_one_side() {
        // The right neighbour's left edge is stored as two segments.
        let b = Polygon::from_coords(&[(1.0, 0.0), (2.0, 0.0), (2.0, 1.0), (1.0, 1.0), (1.0, 0.4)])
            .unwrap();
        let l = shared_boundary_length(&sq(0.0, 0.0), &b, 0.01);
        assert_relative_eq!(l, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn bow_tie() {
        let ring = [
            Point::new(0.0, 0.0),
            Point::new(1.0, 1.0),
            Point::new(1.0, 0.0),
            Point::new(0.0, 1.0),
            Point::new(0.0, 0.0),
        ];
        assert!(ring_self_intersects(&ring));
        let sq = sq(0.0, 0.0);
        assert!(!ring_self_intersects(sq.exterior()));
    }
}
