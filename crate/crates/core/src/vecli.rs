//! Landscape indices computed directly on parcel polygons.
//!
//! Same-category parcels that share boundary are merged into patches with a
//! union-find over the adjacency graph. Patch perimeter is the sum of member
//! perimeters minus twice the internal shared boundary, and patch centroid is
//! the area-weighted mean of the member centroids. Indices are then
//! evaluated per patch:
//!
//! * NP: number of patches
//! * LPI: largest patch area as a fraction of the landscape area
//! * ENN: mean distance from each patch centroid to the nearest same-category
//!   patch centroid, over patches that have one
//! * PARA: mean perimeter / area ratio

use std::collections::BTreeMap;

use log::warn;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{
    intersection_area, point_boundary_distance, ring_self_intersects, shared_boundary_length,
    Point, SpatialIndex,
};
use crate::parcel::{CategoryId, Landscape};

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TopologyReport {
    pub self_intersections: Vec<String>,
    pub overlaps: Vec<Overlap>,
    pub gaps: Vec<(String, String)>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Overlap {
    pub a: String,
    pub b: String,
    pub area: f64,
}

impl TopologyReport {
    pub fn is_clean(&self) -> bool {
        self.self_intersections.is_empty() && self.overlaps.is_empty() && self.gaps.is_empty()
    }
}

/// Flags self-intersecting rings, overlaps larger than `tol²` and gaps where a
/// vertex sits within `tol` of a neighbour without touching it.
pub fn topology_check(ls: &Landscape, tol: f64) -> TopologyReport {
    let ps = ls.parcels();
    let self_intersections = ps
        .par_iter()
        .filter(|p| p.geometry().rings().any(ring_self_intersects))
        .map(|p| p.id().to_string())
        .collect();
    let idx = ls.spatial_index();
    let touch = 1e-9
        * ps.iter()
            .map(|p| p.geometry().bbox().diagonal())
            .fold(1.0, f64::max);
    let pair_flags: Vec<(Vec<Overlap>, Vec<(String, String)>)> = (0..ps.len())
        .into_par_iter()
        .map(|i| {
            let mut overlaps = Vec::new();
            let mut gaps = Vec::new();
            let (a, ga) = (&ps[i], ps[i].geometry());
            for j in idx.query_bbox(&ga.bbox(), tol) {
                if j <= i {
                    continue;
                }
                let (b, gb) = (&ps[j], ps[j].geometry());
                let area = intersection_area(ga, gb);
                let floor = (tol * tol).max(1e-12 * a.area().min(b.area()));
                if area > floor {
                    overlaps.push(Overlap {
                        a: a.id().to_string(),
                        b: b.id().to_string(),
                        area,
                    });
                    continue;
                }
                if tol > 0.0 {
                    let near = |x: &[Point], other: &crate::geom::Polygon| {
                        x.iter().any(|&v| {
                            let d = point_boundary_distance(v, other);
                            d > touch && d <= tol && !other.contains(v)
                        })
                    };
                    let va: Vec<Point> = ga.rings().flatten().copied().collect();
                    let vb: Vec<Point> = gb.rings().flatten().copied().collect();
                    if near(&va, gb) || near(&vb, ga) {
                        gaps.push((a.id().to_string(), b.id().to_string()));
                    }
                }
            }
            (overlaps, gaps)
        })
        .collect();
    let mut report = TopologyReport {
        self_intersections,
        ..Default::default()
    };
    for (o, g) in pair_flags {
        report.overlaps.extend(o);
        report.gaps.extend(g);
    }
    report
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Patch {
    pub id: usize,
    pub category: CategoryId,
    /// Member parcel ids, sorted.
    pub members: Vec<String>,
    pub area: f64,
    pub perimeter: f64,
    pub centroid: Point,
}

struct UnionFind {
    parent: Vec<usize>,
    rank: Vec<u8>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
            rank: vec![0; n],
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return;
        }
        match self.rank[ra].cmp(&self.rank[rb]) {
            std::cmp::Ordering::Less => self.parent[ra] = rb,
            std::cmp::Ordering::Greater => self.parent[rb] = ra,
            std::cmp::Ordering::Equal => {
                self.parent[rb] = ra;
                self.rank[ra] += 1;
            }
        }
    }
}

/// Merges same-category parcels whose shared boundary exceeds `adjacency_tol`.
///
/// Output does not depend on parcel order: members are sorted by id, sums run
/// in that order, and patches are ordered by their smallest member id.
pub fn merge_patches(ls: &Landscape, adjacency_tol: f64) -> Vec<Patch> {
    let ps = ls.parcels();
    let idx = ls.spatial_index();
    let edges: Vec<(usize, usize, f64)> = (0..ps.len())
        .into_par_iter()
        .flat_map_iter(|i| {
            let gi = ps[i].geometry();
            idx.query_bbox(&gi.bbox(), adjacency_tol)
                .into_iter()
                .filter(move |&j| j > i && ps[j].category == ps[i].category)
                .filter_map(move |j| {
                    let l = shared_boundary_length(gi, ps[j].geometry(), adjacency_tol);
                    (l > adjacency_tol).then_some((i, j, l))
                })
                .collect::<Vec<_>>()
        })
        .collect();

    let mut uf = UnionFind::new(ps.len());
    for &(i, j, _) in &edges {
        uf.union(i, j);
    }
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for i in 0..ps.len() {
        groups.entry(uf.find(i)).or_default().push(i);
    }
    let mut internal: BTreeMap<usize, Vec<(&str, &str, f64)>> = BTreeMap::new();
    for &(i, j, l) in &edges {
        let (a, b) = if ps[i].id() <= ps[j].id() {
            (ps[i].id(), ps[j].id())
        } else {
            (ps[j].id(), ps[i].id())
        };
        internal.entry(uf.find(i)).or_default().push((a, b, l));
    }

    let mut patches: Vec<Patch> = groups
        .into_iter()
        .map(|(root, mut members)| {
            members.sort_by(|&a, &b| ps[a].id().cmp(ps[b].id()));
            let area: f64 = members.iter().map(|&m| ps[m].area()).sum();
            let mut shared = internal.remove(&root).unwrap_or_default();
            shared.sort_by(|x, y| (x.0, x.1).cmp(&(y.0, y.1)));
            let perimeter = members.iter().map(|&m| ps[m].perimeter()).sum::<f64>()
                - 2.0 * shared.iter().map(|s| s.2).sum::<f64>();
            let (cx, cy) = members.iter().fold((0.0, 0.0), |(x, y), &m| {
                let c = ps[m].centroid();
                (x + c.x * ps[m].area(), y + c.y * ps[m].area())
            });
            Patch {
                id: 0,
                category: ps[members[0]].category,
                members: members.iter().map(|&m| ps[m].id().to_string()).collect(),
                area,
                perimeter,
                centroid: Point::new(cx / area, cy / area),
            }
        })
        .collect();
    patches.sort_by(|a, b| a.members[0].cmp(&b.members[0]));
    for (i, p) in patches.iter_mut().enumerate() {
        p.id = i;
    }
    patches
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum FilterRule {
    #[default]
    None,
    /// Drop patches with area below `k` standard deviations of patch area.
    BelowKSigma { k: f64 },
    /// Drop patches below an absolute area in m².
    Absolute { min_area: f64 },
}

pub fn filter_small(patches: Vec<Patch>, rule: FilterRule) -> Vec<Patch> {
    let threshold = match rule {
        FilterRule::None => return patches,
        FilterRule::Absolute { min_area } => min_area,
        FilterRule::BelowKSigma { k } => {
            if patches.is_empty() {
                return patches;
            }
            let n = patches.len() as f64;
            let mean = patches.iter().map(|p| p.area).sum::<f64>() / n;
            let var = patches.iter().map(|p| (p.area - mean).powi(2)).sum::<f64>() / n;
            k * var.sqrt()
        }
    };
    patches
        .into_iter()
        .filter(|p| p.area >= threshold)
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CategoryMetrics {
    pub category: CategoryId,
    pub np: usize,
    pub lpi: f64,
    pub enn: Option<f64>,
    pub para: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LandscapeReport {
    pub format_version: u32,
    pub np: usize,
    pub lpi: f64,
    pub enn: Option<f64>,
    pub para: f64,
    #[serde(default)]
    pub per_category: Vec<CategoryMetrics>,
    #[serde(default)]
    pub filter: FilterRule,
    #[serde(default)]
    pub adjacency_tol: Option<f64>,
}

impl LandscapeReport {
    /// A report holding only the four landscape-level indices.
    pub fn from_indices(np: usize, lpi: f64, enn: Option<f64>, para: f64) -> Self {
        LandscapeReport {
            format_version: crate::io::FORMAT_VERSION,
            np,
            lpi,
            enn,
            para,
            per_category: Vec::new(),
            filter: FilterRule::None,
            adjacency_tol: None,
        }
    }
}

/// Mean nearest same-category centroid distance, or `None` when no
/// category has two patches.
fn mean_enn(patches: &[&Patch]) -> Option<f64> {
    let mut by_cat: BTreeMap<CategoryId, Vec<usize>> = BTreeMap::new();
    for (i, p) in patches.iter().enumerate() {
        by_cat.entry(p.category).or_default().push(i);
    }
    let mut sum = 0.0;
    let mut n = 0usize;
    for members in by_cat.values() {
        if members.len() < 2 {
            continue;
        }
        let pts: Vec<Point> = members.iter().map(|&i| patches[i].centroid).collect();
        let idx = SpatialIndex::from_points(&pts);
        for (k, &c) in pts.iter().enumerate() {
            let (_, d) = idx
                .nearest_where(c, |j| j == k)
                .expect("category has another patch");
            sum += d;
            n += 1;
        }
    }
    (n > 0).then(|| sum / n as f64)
}

fn summarize(patches: &[&Patch], total_area: f64) -> (usize, f64, Option<f64>, f64) {
    let np = patches.len();
    let lpi = patches.iter().map(|p| p.area).fold(0.0, f64::max) / total_area;
    let para = if np == 0 {
        0.0
    } else {
        patches.iter().map(|p| p.perimeter / p.area).sum::<f64>() / np as f64
    };
    (np, lpi, mean_enn(patches), para)
}

pub fn metrics(patches: &[Patch], total_landscape_area: f64) -> Result<LandscapeReport> {
    if !(total_landscape_area > 0.0) {
        return Err(Error::InvalidLandscape(
            "landscape area must be positive".into(),
        ));
    }
    let all: Vec<&Patch> = patches.iter().collect();
    let (np, lpi, enn, para) = summarize(&all, total_landscape_area);
    let mut cats: Vec<CategoryId> = patches.iter().map(|p| p.category).collect();
    cats.sort_unstable();
    cats.dedup();
    let per_category = cats
        .into_iter()
        .map(|c| {
            let sub: Vec<&Patch> = patches.iter().filter(|p| p.category == c).collect();
            let (np, lpi, enn, para) = summarize(&sub, total_landscape_area);
            CategoryMetrics {
                category: c,
                np,
                lpi,
                enn,
                para,
            }
        })
        .collect();
    let mut r = LandscapeReport::from_indices(np, lpi, enn, para);
    r.per_category = per_category;
    Ok(r)
}

/// Merge, filter and measure in one go.
pub fn landscape_report(
    ls: &Landscape,
    adjacency_tol: f64,
    filter: FilterRule,
) -> Result<LandscapeReport> {
    let patches = filter_small(merge_patches(ls, adjacency_tol), filter);
    let mut r = metrics(&patches, ls.total_area())?;
    r.filter = filter;
    r.adjacency_tol = Some(adjacency_tol);
    Ok(r)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Similarity {
    pub alpha: f64,
    /// Normalized difference per compared index.
    pub deltas: Vec<(String, f64)>,
    pub skipped: Vec<String>,
}

/// `1 - mean(delta)` over the indices available in both reports. NP, ENN and
/// PARA use the difference relative to the actual value; LPI, already a
/// fraction, uses the absolute difference.
pub fn li_similarity(sim: &LandscapeReport, actual: &LandscapeReport) -> Similarity {
    let mut deltas = Vec::new();
    let mut skipped = Vec::new();
    let mut relative = |name: &str, s: Option<f64>, a: Option<f64>| match (s, a) {
        (Some(s), Some(a)) if a != 0.0 => deltas.push((name.to_string(), (s - a).abs() / a.abs())),
        (Some(_), Some(_)) => {
            warn!("actual {name} is zero; skipping it in the similarity");
            skipped.push(name.to_string());
        }
        _ => skipped.push(name.to_string()),
    };
    relative("NP", Some(sim.np as f64), Some(actual.np as f64));
    relative("ENN", sim.enn, actual.enn);
    relative("PARA", Some(sim.para), Some(actual.para));
    deltas.insert(1, ("LPI".to_string(), (sim.lpi - actual.lpi).abs()));
    let alpha = 1.0 - deltas.iter().map(|d| d.1).sum::<f64>() / deltas.len() as f64;
    Similarity {
        alpha,
        deltas,
        skipped,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::Polygon;
    use crate::parcel::{CategorySet, Parcel};
    use approx::assert_relative_eq;

    fn ls(parts: &[(&str, (f64, f64, f64, f64), usize)]) -> Landscape {
        Landscape::new(
            parts
                .iter()
                .map(|&(id, (a, b, c, d), k)| {
                    Parcel::new(id, Polygon::rect(a, b, c, d).unwrap(), k)
                })
                .collect(),
            CategorySet::new(["a", "b", "c"]).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn clean_grid() {
        let mut parts = Vec::new();
        let names: Vec<String> = (0..9).map(|i| format!("p{i}")).collect();
        for i in 0..9 {
            let (x, y) = ((i % 3) as f64, (i / 3) as f64);
            parts.push((names[i].as_str(), (x, y, x + 1.0, y + 1.0), i % 2));
        }
        assert!(topology_check(&ls(&parts), 0.01).is_clean());
    }

    #[test]
    fn overlap_flagged() {
        let r = topology_check(
            &ls(&[
                ("a", (0.0, 0.0, 1.0, 1.0), 0),
                ("b", (0.5, 0.0, 1.5, 1.0), 0),
            ]),
            0.01,
        );
        assert_eq!(r.overlaps.len(), 1);
        assert_relative_eq!(r.overlaps[0].area, 0.5, epsilon = 1e-9);
    }

    #[test]
    fn gap_flagged() {
        let r = topology_check(
            &ls(&[
                ("a", (0.0, 0.0, 1.0, 1.0), 0),
                ("b", (1.005, 0.0, 2.0, 1.0), 0),
            ]),
            0.01,
        );
        assert_eq!(r.gaps, vec![("a".to_string(), "b".to_string())]);
        assert!(r.overlaps.is_empty());
    }

    #[test]
    fn bow_tie_flagged() {
        let bow = Polygon::from_coords(&[(0.0, 0.0), (2.0, 2.0), (2.0, 0.0), (0.0, 2.1)]).unwrap();
        let l = Landscape::new(
            vec![Parcel::new("bow", bow, 0)],
            CategorySet::new(["a", "b"]).unwrap(),
        )
        .unwrap();
        assert_eq!(topology_check(&l, 0.01).self_intersections, vec!["bow"]);
    }

    #[test]
    fn merge_basic_cases() {
        let same = merge_patches(
            &ls(&[
                ("a", (0.0, 0.0, 1.0, 1.0), 0),
                ("b", (1.0, 0.0, 2.0, 1.0), 0),
            ]),
            0.01,
        );
        assert_eq!(same.len(), 1);
        assert_relative_eq!(same[0].area, 2.0);
        assert_relative_eq!(same[0].perimeter, 6.0, epsilon = 1e-12);
        assert_relative_eq!(same[0].centroid.x, 1.0);
        let diff = merge_patches(
            &ls(&[
                ("a", (0.0, 0.0, 1.0, 1.0), 0),
                ("b", (1.0, 0.0, 2.0, 1.0), 1),
            ]),
            0.01,
        );
        assert_eq!(diff.len(), 2);
        let corner = merge_patches(
            &ls(&[
                ("a", (0.0, 0.0, 1.0, 1.0), 0),
                ("b", (1.0, 1.0, 2.0, 2.0), 0),
            ]),
            0.01,
        );
        assert_eq!(corner.len(), 2);
    }

    #[test]
    fn k_sigma_filter() {
        let mk = |a: f64| Patch {
            id: 0,
            category: 0,
            members: vec![],
            area: a,
            perimeter: 1.0,
            centroid: Point::new(0.0, 0.0),
        };
        let ps: Vec<Patch> = [1.0, 1.0, 1.0, 100.0].into_iter().map(mk).collect();
        assert_eq!(filter_small(ps.clone(), FilterRule::None), ps);
        assert_eq!(
            filter_small(ps.clone(), FilterRule::Absolute { min_area: 0.0 }),
            ps
        );
        assert!(filter_small(ps.clone(), FilterRule::BelowKSigma { k: 3.0 }).is_empty());
        assert_eq!(
            filter_small(ps, FilterRule::Absolute { min_area: 2.0 }).len(),
            1
        );
    }

    fn patch(cat: usize, c: (f64, f64), area: f64, perimeter: f64) -> Patch {
        Patch {
            id: 0,
            category: cat,
            members: vec![],
            area,
            perimeter,
            centroid: Point::new(c.0, c.1),
        }
    }

    #[test]
    fn single_patch() {
        let r = metrics(&[patch(0, (0.0, 0.0), 4.0, 8.0)], 4.0).unwrap();
        assert_eq!(r.np, 1);
        assert_eq!(r.lpi, 1.0);
        assert_eq!(r.enn, None);
        assert_eq!(r.para, 2.0);
    }

    #[test]
    fn enn_and_para() {
        let ps = [
            patch(0, (0.0, 0.0), 1.0, 4.0),
            patch(0, (3.0, 0.0), 1.0, 4.0),
            patch(0, (7.0, 0.0), 1.0, 4.0),
        ];
        let r = metrics(&ps, 10.0).unwrap();
        assert_relative_eq!(r.enn.unwrap(), 10.0 / 3.0, epsilon = 1e-12);
        let r = metrics(
            &[
                patch(0, (0.0, 0.0), 1.0, 4.0),
                patch(1, (5.0, 0.0), 4.0, 8.0),
            ],
            5.0,
        )
        .unwrap();
        assert_relative_eq!(r.para, 3.0);
        assert_eq!(r.per_category.len(), 2);
    }

    #[test]
    fn similarity() {
        let a = LandscapeReport::from_indices(13502, 0.419, Some(52.532), 0.112);
        assert_eq!(li_similarity(&a, &a).alpha, 1.0);
        let rf = LandscapeReport::from_indices(11023, 0.418, Some(48.029), 0.085);
        assert!((li_similarity(&rf, &a).alpha - 0.873).abs() <= 0.002);
        let nn = LandscapeReport::from_indices(11161, 0.426, Some(47.081), 0.085);
        assert!((li_similarity(&nn, &a).alpha - 0.869).abs() <= 0.002);
        let no_enn = LandscapeReport::from_indices(13502, 0.419, None, 0.112);
        let s = li_similarity(&no_enn, &a);
        assert_eq!(s.skipped, vec!["ENN"]);
        assert_eq!(s.deltas.len(), 3);
    }
}
