//! Spatial-variable grids and the per-parcel feature matrix.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{rect_intersection_area, BBox, Point, SpatialIndex};
use crate::parcel::{Landscape, Parcel};

pub const DEFAULT_CELL_SIZE: f64 = 30.0;

/// Grid geometry: lower-left origin, square cells, and dimensions.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridSpec {
    pub origin: Point,
    pub cell_size: f64,
    pub ncols: usize,
    pub nrows: usize,
}

impl GridSpec {
    /// Smallest grid anchored at `extent.min` that covers `extent`.
    pub fn covering(extent: BBox, cell_size: f64) -> Result<Self> {
        if !(cell_size > 0.0) {
            return Err(Error::Grid(format!(
                "cell size must be positive, got {cell_size}"
            )));
        }
        let ncols = ((extent.width() / cell_size).ceil() as usize).max(1);
        let nrows = ((extent.height() / cell_size).ceil() as usize).max(1);
        Ok(GridSpec {
            origin: extent.min,
            cell_size,
            ncols,
            nrows,
        })
    }

    pub fn cell_center(&self, col: usize, row: usize) -> Point {
        Point::new(
            self.origin.x + (col as f64 + 0.5) * self.cell_size,
            self.origin.y + (row as f64 + 0.5) * self.cell_size,
        )
    }

    pub fn extent(&self) -> BBox {
        BBox {
            min: self.origin,
            max: Point::new(
                self.origin.x + self.ncols as f64 * self.cell_size,
                self.origin.y + self.nrows as f64 * self.cell_size,
            ),
        }
    }

    /// Cell containing `p`. A point on a cell edge falls in the cell with the
    /// smaller column, then the smaller row.
    pub fn locate(&self, p: Point) -> Option<(usize, usize)> {
        let fx = (p.x - self.origin.x) / self.cell_size;
        let fy = (p.y - self.origin.y) / self.cell_size;
        if !(fx >= 0.0 && fy >= 0.0 && fx <= self.ncols as f64 && fy <= self.nrows as f64) {
            return None;
        }
        let col = (fx.ceil() as usize).saturating_sub(1);
        let row = (fy.ceil() as usize).saturating_sub(1);
        Some((col, row))
    }
}

/// A raster variable. Rows are counted from the bottom: row 0 is the
/// southernmost, so `values[row * ncols + col]`.
#[derive(Clone, Debug, PartialEq)]
pub struct VariableGrid {
    pub spec: GridSpec,
    pub values: Vec<f64>,
    pub nodata: Option<f64>,
}

impl VariableGrid {
    pub fn new(spec: GridSpec, values: Vec<f64>, nodata: Option<f64>) -> Result<Self> {
        if spec.ncols * spec.nrows != values.len() {
            return Err(Error::Grid(format!(
                "{}x{} grid needs {} values, got {}",
                spec.ncols,
                spec.nrows,
                spec.ncols * spec.nrows,
                values.len()
            )));
        }
        if !(spec.cell_size > 0.0) {
            return Err(Error::Grid("cell size must be positive".into()));
        }
        Ok(VariableGrid {
            spec,
            values,
            nodata,
        })
    }

    pub fn get(&self, col: usize, row: usize) -> f64 {
        self.values[row * self.spec.ncols + col]
    }

    pub fn is_nodata(&self, v: f64) -> bool {
        v.is_nan() || self.nodata == Some(v)
    }
}

fn fill(spec: GridSpec, f: impl Fn(Point) -> f64 + Sync) -> Vec<f64> {
    (0..spec.nrows)
        .into_par_iter()
        .flat_map_iter(|row| {
            let f = &f;
            (0..spec.ncols).map(move |col| f(spec.cell_center(col, row)))
        })
        .collect()
}

/// Euclidean distance from each cell centre to the nearest source point.
pub fn distance_grid(sources: &[Point], spec: GridSpec) -> Result<VariableGrid> {
    if sources.is_empty() {
        return Err(Error::Grid(
            "distance grid needs at least one source".into(),
        ));
    }
    let idx = SpatialIndex::from_points(sources);
    let values = fill(spec, |c| {
        idx.nearest_where(c, |_| false)
            .map_or(f64::INFINITY, |(_, d)| d)
    });
    VariableGrid::new(spec, values, None)
}

/// Scott's rule bandwidth for a bivariate sample: `sigma * n^(-1/6)` with
/// `sigma` the root mean of the two marginal variances.
pub fn scott_bandwidth(points: &[Point]) -> Option<f64> {
    let n = points.len();
    if n < 2 {
        return None;
    }
    let nf = n as f64;
    let (mx, my) = points
        .iter()
        .fold((0.0, 0.0), |(x, y), p| (x + p.x, y + p.y));
    let (mx, my) = (mx / nf, my / nf);
    let (vx, vy) = points.iter().fold((0.0, 0.0), |(x, y), p| {
        (x + (p.x - mx).powi(2), y + (p.y - my).powi(2))
    });
    let sigma = ((vx + vy) / (2.0 * (nf - 1.0))).sqrt();
    let h = sigma * nf.powf(-1.0 / 6.0);
    (h > 0.0).then_some(h)
}

/// Gaussian kernel density (points per m²) at each cell centre. Kernels are
/// truncated at eight bandwidths, where they are below 1e-13 of the peak.
pub fn kde_grid(sources: &[Point], spec: GridSpec, bandwidth: f64) -> Result<VariableGrid> {
    if sources.is_empty() {
        return Err(Error::Grid("density grid needs at least one source".into()));
    }
    if !(bandwidth > 0.0 && bandwidth.is_finite()) {
        return Err(Error::Grid(format!(
            "bandwidth must be positive, got {bandwidth}"
        )));
    }
    let idx = SpatialIndex::from_points(sources);
    let norm = 1.0 / (2.0 * std::f64::consts::PI * bandwidth * bandwidth);
    let inv = 1.0 / (2.0 * bandwidth * bandwidth);
    let values = fill(spec, |c| {
        idx.query_within_radius(c, 8.0 * bandwidth)
            .into_iter()
            .map(|i| (-c.distance_sq(sources[i]) * inv).exp())
            .sum::<f64>()
            * norm
    });
    VariableGrid::new(spec, values, None)
}

/// Min-max scaling of the valid cells to [0, 1]. A constant grid maps to 0.
pub fn normalize(g: &VariableGrid) -> Result<VariableGrid> {
    let valid = g.values.iter().copied().filter(|&v| !g.is_nodata(v));
    let (lo, hi) = valid.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
        (lo.min(v), hi.max(v))
    });
    if lo > hi {
        return Err(Error::Grid("grid has no valid cells".into()));
    }
    let range = hi - lo;
    let values = g
        .values
        .iter()
        .map(|&v| {
            if g.is_nodata(v) {
                v
            } else if range > 0.0 {
                ((v - lo) / range).clamp(0.0, 1.0)
            } else {
                0.0
            }
        })
        .collect();
    VariableGrid::new(g.spec, values, g.nodata)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SampleMode {
    #[default]
    Centroid,
    ArealMean,
}

impl std::str::FromStr for SampleMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "centroid" => Ok(SampleMode::Centroid),
            "areal_mean" | "areal-mean" => Ok(SampleMode::ArealMean),
            _ => Err(Error::InvalidConfig(format!("unknown sample mode {s:?}"))),
        }
    }
}

/// Value of grid `g` for a parcel.
pub fn sample(parcel: &Parcel, g: &VariableGrid, grid_name: &str, mode: SampleMode) -> Result<f64> {
    let err = |reason: String| Error::Sample {
        parcel: parcel.id().to_string(),
        grid: grid_name.to_string(),
        reason,
    };
    match mode {
        SampleMode::Centroid => {
            let c = parcel.centroid();
            let (col, row) = g
                .spec
                .locate(c)
                .ok_or_else(|| err(format!("centroid ({}, {}) outside grid extent", c.x, c.y)))?;
            let v = g.get(col, row);
            if g.is_nodata(v) {
                return Err(err(format!(
                    "centroid falls on a nodata cell ({col}, {row})"
                )));
            }
            Ok(v)
        }
        SampleMode::ArealMean => {
            let s = g.spec;
            let b = parcel.geometry().bbox();
            let cs = s.cell_size;
            let c0 = (((b.min.x - s.origin.x) / cs).floor().max(0.0)) as usize;
            let r0 = (((b.min.y - s.origin.y) / cs).floor().max(0.0)) as usize;
            let c1 = ((((b.max.x - s.origin.x) / cs).ceil()) as usize).min(s.ncols);
            let r1 = ((((b.max.y - s.origin.y) / cs).ceil()) as usize).min(s.nrows);
            let (mut wsum, mut vsum) = (0.0, 0.0);
            for row in r0..r1 {
                for col in c0..c1 {
                    let v = g.get(col, row);
                    if g.is_nodata(v) {
                        continue;
                    }
                    let min =
                        Point::new(s.origin.x + col as f64 * cs, s.origin.y + row as f64 * cs);
                    let max = Point::new(min.x + cs, min.y + cs);
                    let w = rect_intersection_area(parcel.geometry(), min, max);
                    wsum += w;
                    vsum += w * v;
                }
            }
            if wsum <= 0.0 {
                return Err(err("parcel covers no valid grid cell".into()));
            }
            Ok(vsum / wsum)
        }
    }
}

/// Parcel-by-variable matrix, row-major, rows in landscape order.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureMatrix {
    pub ids: Vec<String>,
    pub names: Vec<String>,
    values: Vec<f64>,
}

impl FeatureMatrix {
    pub fn new(ids: Vec<String>, names: Vec<String>, values: Vec<f64>) -> Result<Self> {
        if ids.len() * names.len() != values.len() {
            return Err(Error::LengthMismatch(format!(
                "{} rows x {} columns but {} values",
                ids.len(),
                names.len(),
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !(0.0..=1.0).contains(v)) {
            let p = names.len().max(1);
            return Err(Error::InvalidConfig(format!(
                "feature value {} for {} / {} is outside [0, 1]; normalize the grid first",
                values[i],
                ids[i / p],
                names[i % p]
            )));
        }
        Ok(FeatureMatrix { ids, names, values })
    }

    pub fn from_rows(ids: Vec<String>, names: Vec<String>, rows: &[Vec<f64>]) -> Result<Self> {
        let values = rows.iter().flatten().copied().collect();
        FeatureMatrix::new(ids, names, values)
    }

    pub fn nrows(&self) -> usize {
        self.ids.len()
    }

    pub fn ncols(&self) -> usize {
        self.names.len()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let p = self.ncols();
        &self.values[i * p..(i + 1) * p]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        (0..self.nrows()).map(move |i| self.row(i))
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Keeps the given rows, in the given order.
    pub fn select(&self, rows: &[usize]) -> FeatureMatrix {
        FeatureMatrix {
            ids: rows.iter().map(|&i| self.ids[i].clone()).collect(),
            names: self.names.clone(),
            values: rows
                .iter()
                .flat_map(|&i| self.row(i).iter().copied())
                .collect(),
        }
    }

    /// Checks that rows line up with the landscape's parcels.
    pub fn check_aligned(&self, ls: &Landscape) -> Result<()> {
        if self.nrows() != ls.len() {
            return Err(Error::LengthMismatch(format!(
                "{} feature rows for {} parcels",
                self.nrows(),
                ls.len()
            )));
        }
        for (id, p) in self.ids.iter().zip(ls.parcels()) {
            if id != p.id() {
                return Err(Error::LengthMismatch(format!(
                    "feature row {id:?} does not match parcel {:?}",
                    p.id()
                )));
            }
        }
        Ok(())
    }
}

/// Samples every grid for every parcel; columns follow the order of `grids`.
pub fn assemble(
    ls: &Landscape,
    grids: &[(String, VariableGrid)],
    mode: SampleMode,
) -> Result<FeatureMatrix> {
    let rows: Vec<Vec<f64>> = ls
        .parcels()
        .par_iter()
        .map(|p| {
            grids
                .iter()
                .map(|(name, g)| sample(p, g, name, mode))
                .collect()
        })
        .collect::<Result<_>>()?;
    FeatureMatrix::from_rows(
        ls.parcels().iter().map(|p| p.id().to_string()).collect(),
        grids.iter().map(|(n, _)| n.clone()).collect(),
        &rows,
    )
}
