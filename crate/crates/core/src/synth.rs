//! Seeded synthetic towns for demos and tests.
//!
//! A town is a jittered grid of quadrilateral parcels, with some 2x2 blocks
//! merged into larger parcels. Construction grows outward from a centre and
//! along two roads over three dates. A river band stays water, and a forest
//! reserve in one corner stays forest.

use std::path::Path;

use rand::Rng;

use crate::error::Result;
use crate::features::{
    assemble, distance_grid, kde_grid, normalize, scott_bandwidth, FeatureMatrix, GridSpec,
    SampleMode,
};
use crate::geom::{BBox, Point, Polygon};
use crate::io;
use crate::parcel::{CategorySet, Landscape, Parcel};
use crate::rng::stream;

pub const CATEGORIES: [&str; 4] = ["farmland", "construction", "water", "forest"];
pub const FARMLAND: usize = 0;
pub const CONSTRUCTION: usize = 1;
pub const WATER: usize = 2;
pub const FOREST: usize = 3;

const JITTER_STREAM: u64 = 1001;
const MERGE_STREAM: u64 = 1002;
const NOISE_STREAM: u64 = 1003;

#[derive(Clone, Debug, PartialEq)]
pub struct TownSpec {
    pub nx: usize,
    pub ny: usize,
    /// Nominal parcel side in meters.
    pub cell: f64,
    /// Vertex jitter as a fraction of the side.
    pub jitter: f64,
    /// Chance that an aligned 2x2 block becomes one parcel.
    pub merge_fraction: f64,
    pub seed: u64,
}

impl Default for TownSpec {
    fn default() -> Self {
        TownSpec {
            nx: 24,
            ny: 24,
            cell: 100.0,
            jitter: 0.2,
            merge_fraction: 0.15,
            seed: 7,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Town {
    /// One period before `t0`.
    pub t_prev: Landscape,
    pub t0: Landscape,
    pub t1: Landscape,
    /// Points sampled along the roads.
    pub roads: Vec<Point>,
    /// Commercial centres.
    pub centres: Vec<Point>,
    /// Points sampled along the river centre line.
    pub river: Vec<Point>,
    /// The forest reserve.
    pub reserve: Polygon,
}

struct Layout {
    width: f64,
    height: f64,
    centre: Point,
}

impl Layout {
    fn road_distance(&self, p: Point) -> f64 {
        let horizontal = (p.y - self.centre.y).abs();
        // A diagonal road from the centre towards the upper right.
        let d = Point::new(1.0, 0.6);
        let len = (d.x * d.x + d.y * d.y).sqrt();
        let v = p.sub(self.centre);
        let t = (v.dot(d) / len).max(0.0);
        let diag = (v.x - t * d.x / len).hypot(v.y - t * d.y / len);
        horizontal.min(diag)
    }

    fn river(&self, x: f64) -> f64 {
        0.18 * self.height + 0.05 * self.height * (x / self.width * std::f64::consts::TAU).sin()
    }

    fn in_reserve(&self, p: Point) -> bool {
        p.x < 0.28 * self.width && p.y > 0.7 * self.height
    }
}

fn classify(l: &Layout, p: Point, noise: f64, stage: f64) -> usize {
    if (p.y - l.river(p.x)).abs() < 0.04 * l.height {
        return WATER;
    }
    if l.in_reserve(p) {
        return FOREST;
    }
    let scale = l.width.min(l.height);
    let score = p.distance(l.centre) / scale + 0.8 * l.road_distance(p) / scale + noise;
    if score < stage {
        CONSTRUCTION
    } else {
        FARMLAND
    }
}

/// Builds a town. Dates use growing construction thresholds, so construction
/// never shrinks between dates.
pub fn town(spec: &TownSpec) -> Town {
    let (nx, ny, c) = (spec.nx, spec.ny, spec.cell);
    let mut jr = stream(spec.seed, &[JITTER_STREAM]);
    let mut verts = vec![Point::new(0.0, 0.0); (nx + 1) * (ny + 1)];
    for j in 0..=ny {
        for i in 0..=nx {
            let interior = i > 0 && i < nx && j > 0 && j < ny;
            let (dx, dy) = if interior {
                (
                    jr.gen_range(-spec.jitter..=spec.jitter) * c,
                    jr.gen_range(-spec.jitter..=spec.jitter) * c,
                )
            } else {
                (0.0, 0.0)
            };
            verts[j * (nx + 1) + i] = Point::new(i as f64 * c + dx, j as f64 * c + dy);
        }
    }
    let v = |i: usize, j: usize| verts[j * (nx + 1) + i];

    let mut mr = stream(spec.seed, &[MERGE_STREAM]);
    let mut owner: Vec<Option<usize>> = vec![None; nx * ny];
    let mut shapes: Vec<Polygon> = Vec::new();
    for j in (0..ny.saturating_sub(1)).step_by(2) {
        for i in (0..nx.saturating_sub(1)).step_by(2) {
            if mr.gen::<f64>() < spec.merge_fraction {
                let ring = vec![
                    v(i, j),
                    v(i + 1, j),
                    v(i + 2, j),
                    v(i + 2, j + 1),
                    v(i + 2, j + 2),
                    v(i + 1, j + 2),
                    v(i, j + 2),
                    v(i, j + 1),
                ];
                let id = shapes.len();
                shapes.push(Polygon::new(ring, vec![]).expect("merged block is valid"));
                for (a, b) in [(0, 0), (1, 0), (0, 1), (1, 1)] {
                    owner[(j + b) * nx + i + a] = Some(id);
                }
            }
        }
    }
    let mut order: Vec<Polygon> = Vec::new();
    let mut emitted = vec![false; shapes.len()];
    for j in 0..ny {
        for i in 0..nx {
            match owner[j * nx + i] {
                Some(id) if !emitted[id] => {
                    emitted[id] = true;
                    order.push(shapes[id].clone());
                }
                Some(_) => {}
                None => {
                    let ring = vec![v(i, j), v(i + 1, j), v(i + 1, j + 1), v(i, j + 1)];
                    order.push(Polygon::new(ring, vec![]).expect("jittered quad is valid"));
                }
            }
        }
    }

    let layout = Layout {
        width: nx as f64 * c,
        height: ny as f64 * c,
        centre: Point::new(0.55 * nx as f64 * c, 0.5 * ny as f64 * c),
    };
    let mut nr = stream(spec.seed, &[NOISE_STREAM]);
    let noise: Vec<f64> = order.iter().map(|_| nr.gen_range(-0.05..0.05)).collect();
    let cats = CategorySet::new(CATEGORIES).expect("fixed names");
    let dated = |stage: f64| {
        let parcels = order
            .iter()
            .enumerate()
            .map(|(n, poly)| {
                let cat = classify(&layout, poly.centroid(), noise[n], stage);
                Parcel::new(format!("p{n:04}"), poly.clone(), cat)
            })
            .collect();
        Landscape::new(parcels, cats.clone()).expect("unique ids")
    };

    let mut roads = Vec::new();
    let step = 25.0;
    let mut x = 0.0;
    while x <= layout.width {
        roads.push(Point::new(x, layout.centre.y));
        x += step;
    }
    let d = Point::new(1.0, 0.6);
    let len = (d.x * d.x + d.y * d.y).sqrt();
    let mut t = step;
    loop {
        let p = Point::new(
            layout.centre.x + t * d.x / len,
            layout.centre.y + t * d.y / len,
        );
        if p.x > layout.width || p.y > layout.height {
            break;
        }
        roads.push(p);
        t += step;
    }
    let centres = vec![
        layout.centre,
        Point::new(layout.centre.x + 4.0 * c, layout.centre.y + 2.5 * c),
    ];
    let mut river = Vec::new();
    let mut x = 0.0;
    while x <= layout.width {
        river.push(Point::new(x, layout.river(x)));
        x += step;
    }
    let reserve = Polygon::rect(0.0, 0.7 * layout.height, 0.28 * layout.width, layout.height)
        .expect("rectangle");

    Town {
        t_prev: dated(0.16),
        t0: dated(0.22),
        t1: dated(0.3),
        roads,
        centres,
        river,
        reserve,
    }
}

impl Town {
    /// The town's bounding box.
    pub fn extent(&self) -> BBox {
        let pts: Vec<Point> = self
            .t0
            .parcels()
            .iter()
            .flat_map(|p| p.geometry().exterior().to_vec())
            .collect();
        BBox::of_points(&pts).expect("town has parcels")
    }

    /// Normalized variables sampled at cell centroids: distance to roads,
    /// centres and river, and road density.
    pub fn features(&self, cells: &Landscape, cell_size: f64) -> Result<FeatureMatrix> {
        let spec = GridSpec::covering(self.extent(), cell_size)?;
        let bw = scott_bandwidth(&self.roads).expect("roads have many points");
        let grids = vec![
            (
                "road".to_string(),
                normalize(&distance_grid(&self.roads, spec)?)?,
            ),
            (
                "centre".to_string(),
                normalize(&distance_grid(&self.centres, spec)?)?,
            ),
            (
                "river".to_string(),
                normalize(&distance_grid(&self.river, spec)?)?,
            ),
            (
                "road_density".to_string(),
                normalize(&kde_grid(&self.roads, spec, bw)?)?,
            ),
        ];
        assemble(cells, &grids, SampleMode::Centroid)
    }

    /// Writes the maps, point sources and reserve as GeoJSON files:
    /// `t_prev`, `t0`, `t1`, `roads`, `centres`, `river` and `reserve`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        io::write_parcels(&self.t_prev, &dir.join("t_prev.geojson"))?;
        io::write_parcels(&self.t0, &dir.join("t0.geojson"))?;
        io::write_parcels(&self.t1, &dir.join("t1.geojson"))?;
        io::write_text(
            &dir.join("roads.geojson"),
            &io::points_to_string(&self.roads),
        )?;
        io::write_text(
            &dir.join("centres.geojson"),
            &io::points_to_string(&self.centres),
        )?;
        io::write_text(
            &dir.join("river.geojson"),
            &io::points_to_string(&self.river),
        )?;
        io::write_text(
            &dir.join("reserve.geojson"),
            &io::polygons_to_string(std::slice::from_ref(&self.reserve)),
        )
    }
}
