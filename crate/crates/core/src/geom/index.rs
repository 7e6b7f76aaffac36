use rstar::primitives::{GeomWithData, Rectangle};
use rstar::{RTree, AABB};

use super::{BBox, Point, Polygon};

type CentroidEntry = GeomWithData<[f64; 2], usize>;
type BoxEntry = GeomWithData<Rectangle<[f64; 2]>, usize>;

/// Immutable R-tree over item bounding boxes and centroids. Items are
/// identified by their position in the construction order.
pub struct SpatialIndex {
    centroids: RTree<CentroidEntry>,
    boxes: RTree<BoxEntry>,
    len: usize,
}

impl SpatialIndex {
    pub fn new(items: impl IntoIterator<Item = (BBox, Point)>) -> Self {
        let mut cs = Vec::new();
        let mut bs = Vec::new();
        for (i, (b, c)) in items.into_iter().enumerate() {
            cs.push(CentroidEntry::new([c.x, c.y], i));
            bs.push(BoxEntry::new(
                Rectangle::from_corners([b.min.x, b.min.y], [b.max.x, b.max.y]),
                i,
            ));
        }
        let len = cs.len();
        SpatialIndex {
            centroids: RTree::bulk_load(cs),
            boxes: RTree::bulk_load(bs),
            len,
        }
    }

    pub fn from_polygons<'a>(polys: impl IntoIterator<Item = &'a Polygon>) -> Self {
        SpatialIndex::new(polys.into_iter().map(|p| (p.bbox(), p.centroid())))
    }

    pub fn from_points(points: &[Point]) -> Self {
        SpatialIndex::new(points.iter().map(|&p| (BBox { min: p, max: p }, p)))
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Items whose centroid lies within Euclidean distance `r` of `center`,
    /// in ascending id order.
    pub fn query_within_radius(&self, center: Point, r: f64) -> Vec<usize> {
        let mut out: Vec<usize> = self
            .centroids
            .locate_within_distance([center.x, center.y], r * r)
            .map(|e| e.data)
            .collect();
        out.sort_unstable();
        out
    }

    /// Items whose bounding box intersects `b` grown by `pad`, ascending.
    pub fn query_bbox(&self, b: &BBox, pad: f64) -> Vec<usize> {
        let env = AABB::from_corners(
            [b.min.x - pad, b.min.y - pad],
            [b.max.x + pad, b.max.y + pad],
        );
        let mut out: Vec<usize> = self
            .boxes
            .locate_in_envelope_intersecting(&env)
            .map(|e| e.data)
            .collect();
        out.sort_unstable();
        out
    }

    /// Nearest item by centroid distance, skipping ids for which `skip` holds.
    pub fn nearest_where(
        &self,
        p: Point,
        mut skip: impl FnMut(usize) -> bool,
    ) -> Option<(usize, f64)> {
        self.centroids
            .nearest_neighbor_iter_with_distance_2(&[p.x, p.y])
            .find(|(e, _)| !skip(e.data))
            .map(|(e, d2)| (e.data, d2.sqrt()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn grid_neighbors() {
        let pts: Vec<Point> = (0..5)
            .flat_map(|i| (0..5).map(move |j| Point::new(i as f64 * 100.0, j as f64 * 100.0)))
            .collect();
        let idx = SpatialIndex::from_points(&pts);
        let center = Point::new(200.0, 200.0);
        let hits = idx.query_within_radius(center, 150.0);
        // the centre itself plus 4 axis and 4 diagonal neighbours
        assert_eq!(hits.len(), 9);
        let self_id = pts.iter().position(|&p| p == center).unwrap();
        assert_eq!(hits.iter().filter(|&&h| h != self_id).count(), 8);
        assert_eq!(idx.query_within_radius(center, 50.0), vec![self_id]);
    }

    #[test]
    fn matches_exhaustive_scan() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let pts: Vec<Point> = (0..1000)
            .map(|_| Point::new(rng.gen_range(0.0..1000.0), rng.gen_range(0.0..1000.0)))
            .collect();
        let idx = SpatialIndex::from_points(&pts);
        for _ in 0..200 {
            let c = Point::new(rng.gen_range(-100.0..1100.0), rng.gen_range(-100.0..1100.0));
            let r = rng.gen_range(1.0..300.0);
            let brute: Vec<usize> = (0..pts.len())
                .filter(|&i| {
                    let dx = pts[i].x - c.x;
                    let dy = pts[i].y - c.y;
                    dx * dx + dy * dy <= r * r
                })
                .collect();
            assert_eq!(idx.query_within_radius(c, r), brute);
        }
    }
}
