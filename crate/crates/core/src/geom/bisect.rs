//! Splitting a polygon in two along a straight cut.

use super::{min_rect_long_axis, ring_contains, ring_signed_area2, Point, Polygon};
use crate::error::{Error, Result};

/// Result of one bisection: the pieces on each side of the cut line.
///
/// Convex inputs always give one polygon per side. A concave input can fall
/// apart into several pieces on one side; those stay grouped with their side.
#[derive(Clone, Debug)]
pub struct Halves {
    pub first: Vec<Polygon>,
    pub second: Vec<Polygon>,
}

impl Halves {
    pub fn area(&self) -> (f64, f64) {
        let sum = |v: &[Polygon]| v.iter().map(Polygon::area).sum::<f64>();
        (sum(&self.first), sum(&self.second))
    }

    pub fn into_pieces(self) -> impl Iterator<Item = (usize, usize, Polygon)> {
        let a = self.first.into_iter().enumerate().map(|(i, p)| (0, i, p));
        let b = self.second.into_iter().enumerate().map(|(i, p)| (1, i, p));
        a.chain(b)
    }
}

/// Relative area below which a side of the cut counts as a sliver.
const SLIVER: f64 = 1e-6;

/// Cuts `p` through its centroid, perpendicular to the long axis of its
/// minimum-area bounding rectangle. Falls back to the orthogonal axis and then
/// to the two coordinate axes when a cut leaves a sliver.
pub fn bisect(p: &Polygon) -> Result<Halves> {
    let c = p.centroid();
    let total = p.area();
    let mut axes = Vec::with_capacity(4);
    if let Some(a) = min_rect_long_axis(p) {
        axes.push(a);
        axes.push(Point::new(-a.y, a.x));
    }
    let bb = p.bbox();
    if bb.width() >= bb.height() {
        axes.extend([Point::new(1.0, 0.0), Point::new(0.0, 1.0)]);
    } else {
        axes.extend([Point::new(0.0, 1.0), Point::new(1.0, 0.0)]);
    }
    for axis in axes {
        let halves = split_by_line(p, c, axis)?;
        let (a, b) = halves.area();
        if a >= SLIVER * total && b >= SLIVER * total {
            return Ok(halves);
        }
    }
    Err(Error::BisectFailed(format!(
        "every cut through ({}, {}) leaves a sliver",
        c.x, c.y
    )))
}

struct Crossing {
    point: Point,
    /// Position along the cut line.
    along: f64,
    /// True when the ring passes from the low side to the high side here.
    to_high: bool,
}

/// A run of ring vertices on one side, from one crossing to the next.
struct Chain {
    start: usize,
    end: usize,
    points: Vec<Point>,
}

/// Splits `p` by the line through `origin` perpendicular to `axis`. Points with
/// `(q - origin) . axis >= 0` form the second half.
pub(crate) fn split_by_line(p: &Polygon, origin: Point, axis: Point) -> Result<Halves> {
    let scale = p.bbox().diagonal();
    // Nudge the line off any vertex so every crossing is transversal.
    let mut offset = 0.0;
    let side = |q: Point, off: f64| q.sub(origin).dot(axis) - off;
    for k in 0..64 {
        if p.rings()
            .flatten()
            .all(|&q| side(q, offset).abs() > 1e-10 * scale)
        {
            break;
        }
        offset = 1e-9 * scale * (k + 1) as f64;
    }
    let dir = Point::new(-axis.y, axis.x);

    let mut crossings: Vec<Crossing> = Vec::new();
    let mut low_chains: Vec<Chain> = Vec::new();
    let mut high_chains: Vec<Chain> = Vec::new();
    let mut free_low: Vec<Vec<Point>> = Vec::new();
    let mut free_high: Vec<Vec<Point>> = Vec::new();

    for ring in p.rings() {
        let verts = &ring[..ring.len() - 1];
        let n = verts.len();
        let s: Vec<f64> = verts.iter().map(|&q| side(q, offset)).collect();
        let first_cross = (0..n).find(|&i| (s[i] >= 0.0) != (s[(i + 1) % n] >= 0.0));
        let Some(first_cross) = first_cross else {
            if s[0] >= 0.0 {
                free_high.push(ring.to_vec());
            } else {
                free_low.push(ring.to_vec());
            }
            continue;
        };
        let ring_first_id = crossings.len();
        // Walk the ring once starting at the first crossing edge.
        let mut current: Option<(usize, Vec<Point>)> = None;
        for step in 0..n {
            let i = (first_cross + step) % n;
            let j = (i + 1) % n;
            if let Some((_, pts)) = current.as_mut() {
                pts.push(verts[i]);
            }
            if (s[i] >= 0.0) != (s[j] >= 0.0) {
                let t = s[i] / (s[i] - s[j]);
                let a = verts[i];
                let b = verts[j];
                let point = Point::new(a.x + t * (b.x - a.x), a.y + t * (b.y - a.y));
                let id = crossings.len();
                crossings.push(Crossing {
                    point,
                    along: point.sub(origin).dot(dir),
                    to_high: s[j] >= 0.0,
                });
                if let Some((start, mut pts)) = current.take() {
                    pts.push(point);
                    let chain = Chain {
                        start,
                        end: id,
                        points: pts,
                    };
                    if s[i] >= 0.0 {
                        high_chains.push(chain);
                    } else {
                        low_chains.push(chain);
                    }
                }
                current = Some((id, vec![point]));
            }
        }
        // Close the chain that wraps around to the ring's first crossing.
        let (start, mut pts) = current.take().expect("ring has a crossing");
        pts.push(verts[first_cross]);
        pts.push(crossings[ring_first_id].point);
        let chain = Chain {
            start,
            end: ring_first_id,
            points: pts,
        };
        if s[first_cross] >= 0.0 {
            high_chains.push(chain);
        } else {
            low_chains.push(chain);
        }
    }

    // Pair crossings along the line into chords inside the polygon.
    let mut order: Vec<usize> = (0..crossings.len()).collect();
    order.sort_by(|&a, &b| crossings[a].along.total_cmp(&crossings[b].along));
    let mut partner = vec![usize::MAX; crossings.len()];
    for pair in order.chunks(2) {
        if let [a, b] = *pair {
            partner[a] = b;
            partner[b] = a;
        }
    }
    if partner.iter().any(|&x| x == usize::MAX) {
        return Err(Error::BisectFailed(
            "odd number of boundary crossings".into(),
        ));
    }

    let total = p.area().abs();
    let low = assemble(&low_chains, &partner, &crossings, free_low, total, false)?;
    let high = assemble(&high_chains, &partner, &crossings, free_high, total, true)?;
    Ok(Halves {
        first: low,
        second: high,
    })
}

fn assemble(
    chains: &[Chain],
    partner: &[usize],
    crossings: &[Crossing],
    free: Vec<Vec<Point>>,
    total: f64,
    high: bool,
) -> Result<Vec<Polygon>> {
    let mut by_start = vec![usize::MAX; crossings.len()];
    for (ci, ch) in chains.iter().enumerate() {
        by_start[ch.start] = ci;
    }
    let mut used = vec![false; chains.len()];
    let mut exteriors: Vec<Vec<Point>> = Vec::new();
    let mut holes: Vec<Vec<Point>> = Vec::new();
    for ci in 0..chains.len() {
        if used[ci] {
            continue;
        }
        let mut ring: Vec<Point> = Vec::new();
        let mut cur = ci;
        loop {
            if used[cur] {
                break;
            }
            used[cur] = true;
            ring.extend_from_slice(&chains[cur].points);
            let next_start = partner[chains[cur].end];
            debug_assert_eq!(crossings[next_start].to_high, high);
            let next = by_start[next_start];
            if next == usize::MAX {
                return Err(Error::BisectFailed("inconsistent chord pairing".into()));
            }
            cur = next;
        }
        ring.dedup();
        if ring.first() != ring.last() {
            ring.push(ring[0]);
        }
        let a2 = ring_signed_area2(&ring);
        if ring.len() < 4 || a2.abs() <= 1e-14 * total {
            continue;
        }
        if a2 > 0.0 {
            exteriors.push(ring);
        } else {
            holes.push(ring);
        }
    }
    for ring in free {
        if ring_signed_area2(&ring) > 0.0 {
            exteriors.push(ring);
        } else {
            holes.push(ring);
        }
    }

    let mut assigned: Vec<Vec<Vec<Point>>> = vec![Vec::new(); exteriors.len()];
    for hole in holes {
        let probe = hole[0];
        let owner = exteriors
            .iter()
            .enumerate()
            .filter(|(_, e)| ring_contains(e, probe))
            .min_by(|a, b| ring_signed_area2(a.1).total_cmp(&ring_signed_area2(b.1)))
            .map(|(i, _)| i);
        match owner {
            Some(i) => assigned[i].push(hole),
            None => return Err(Error::BisectFailed("hole lost its exterior".into())),
        }
    }
    exteriors
        .into_iter()
        .zip(assigned)
        .map(|(e, h)| Polygon::new(e, h))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn assert_conserves(p: &Polygon, h: &Halves) {
        let (a, b) = h.area();
        assert_relative_eq!(a + b, p.area(), max_relative = 1e-9);
    }

    #[test]
    fn rectangle_splits_into_squares() {
        let r = Polygon::rect(0.0, 0.0, 2.0, 1.0).unwrap();
        let h = bisect(&r).unwrap();
        assert_eq!(h.first.len(), 1);
        assert_eq!(h.second.len(), 1);
        for piece in h.first.iter().chain(&h.second) {
            assert_relative_eq!(piece.area(), 1.0, epsilon = 1e-12);
            assert_relative_eq!(piece.perimeter(), 4.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn unit_square_halves() {
        let r = Polygon::rect(0.0, 0.0, 1.0, 1.0).unwrap();
        let h = bisect(&r).unwrap();
        let (a, b) = h.area();
        assert_relative_eq!(a, 0.5, epsilon = 1e-12);
        assert_relative_eq!(b, 0.5, epsilon = 1e-12);
    }

    #[test]
    fn concave_l_shape() {
        let l = Polygon::from_coords(&[
            (0.0, 0.0),
            (2.0, 0.0),
            (2.0, 1.0),
            (1.0, 1.0),
            (1.0, 2.0),
            (0.0, 2.0),
        ])
        .unwrap();
        let h = bisect(&l).unwrap();
        assert_conserves(&l, &h);
    }

    #[test]
    fn u_shape_falls_apart_on_one_side() {
        // Cut along x through the centroid line hits both prongs of the U.
        let u = Polygon::from_coords(&[
            (0.0, 0.0),
            (3.0, 0.0),
            (3.0, 3.0),
            (2.0, 3.0),
            (2.0, 1.0),
            (1.0, 1.0),
            (1.0, 3.0),
            (0.0, 3.0),
        ])
        .unwrap();
        let h = split_by_line(&u, Point::new(0.0, 2.0), Point::new(0.0, 1.0)).unwrap();
        assert_eq!(h.first.len(), 1);
        assert_eq!(h.second.len(), 2);
        assert_conserves(&u, &h);
        for piece in &h.second {
            assert_relative_eq!(piece.area(), 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn hole_is_cut_or_kept() {
        let p = Polygon::new(
            Polygon::rect(0.0, 0.0, 4.0, 2.0)
                .unwrap()
                .exterior()
                .to_vec(),
            vec![Polygon::rect(0.5, 0.5, 1.5, 1.5)
                .unwrap()
                .exterior()
                .to_vec()],
        )
        .unwrap();
        // Cut at x = 2: the hole stays whole on the low side.
        let h = split_by_line(&p, Point::new(2.0, 0.0), Point::new(1.0, 0.0)).unwrap();
        assert_eq!(h.first[0].holes().len(), 1);
        assert_relative_eq!(h.first[0].area(), 3.0, epsilon = 1e-12);
        assert_relative_eq!(h.second[0].area(), 4.0, epsilon = 1e-12);
        // Cut at x = 1: the hole opens into both halves.
        let h = split_by_line(&p, Point::new(1.0, 0.0), Point::new(1.0, 0.0)).unwrap();
        assert_conserves(&p, &h);
        assert_eq!(h.first.len(), 1);
        assert_eq!(h.second.len(), 1);
        assert!(h.first[0].holes().is_empty());
        assert_relative_eq!(h.first[0].area(), 1.5, epsilon = 1e-12);
    }

    #[test]
    fn cut_through_vertex() {
        let diamond =
            Polygon::from_coords(&[(1.0, 0.0), (2.0, 1.0), (1.0, 2.0), (0.0, 1.0)]).unwrap();
        let h = split_by_line(&diamond, Point::new(1.0, 1.0), Point::new(1.0, 0.0)).unwrap();
        assert_conserves(&diamond, &h);
        let (a, b) = h.area();
        assert_relative_eq!(a, 1.0, epsilon = 1e-6);
        assert_relative_eq!(b, 1.0, epsilon = 1e-6);
    }
}
