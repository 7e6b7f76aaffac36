//! Parcel-level accuracy: overlay labeling and figure of merit.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::intersection_area;
use crate::parcel::{CategoryId, Landscape};

/// Labels each cell with the reference category it overlaps most.
/// Ties within 1e-9 of the cell area go to the smaller category id.
pub fn label_overlay(cells: &Landscape, reference: &Landscape) -> Result<Vec<CategoryId>> {
    if cells.categories() != reference.categories() {
        return Err(Error::InvalidLandscape(
            "cells and reference use different category tables".into(),
        ));
    }
    let k = cells.categories().len();
    let idx = reference.spatial_index();
    let refs = reference.parcels();
    let labels: Vec<Option<CategoryId>> = cells
        .parcels()
        .par_iter()
        .map(|cell| {
            let mut by_cat = vec![0.0; k];
            for j in idx.query_bbox(&cell.geometry().bbox(), 0.0) {
                by_cat[refs[j].category] += intersection_area(cell.geometry(), refs[j].geometry());
            }
            let best = by_cat.iter().copied().fold(0.0, f64::max);
            if best <= 1e-12 * cell.area() {
                return None;
            }
            let tie = 1e-9 * cell.area();
            by_cat.iter().position(|&a| a >= best - tie)
        })
        .collect();
    let missing: Vec<String> = labels
        .iter()
        .zip(cells.parcels())
        .filter(|(l, _)| l.is_none())
        .map(|(_, c)| c.id().to_string())
        .collect();
    if !missing.is_empty() {
        return Err(Error::Unlabelable(missing));
    }
    Ok(labels.into_iter().map(Option::unwrap).collect())
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WeightMode {
    #[default]
    Area,
    Count,
}

impl std::str::FromStr for WeightMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "area" => Ok(WeightMode::Area),
            "count" => Ok(WeightMode::Count),
            _ => Err(Error::InvalidConfig(format!(
                "unknown mode {s:?}, expected area or count"
            ))),
        }
    }
}

/// Change-agreement buckets.
///
/// * `a`: observed change the simulation missed
/// * `b`: observed change simulated with the right category
/// * `c`: observed change simulated with the wrong category
/// * `d`: simulated change where nothing changed
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ConfusionAreas {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

/// Sorts cells into the four buckets, weighting by `weights` (areas, or ones
/// for count mode). Cells unchanged in both maps contribute nothing.
pub fn categorize(
    initial: &[CategoryId],
    simulated: &[CategoryId],
    actual: &[CategoryId],
    weights: &[f64],
) -> Result<ConfusionAreas> {
    let n = initial.len();
    if simulated.len() != n || actual.len() != n || weights.len() != n {
        return Err(Error::LengthMismatch(format!(
            "initial {}, simulated {}, actual {}, weights {}",
            n,
            simulated.len(),
            actual.len(),
            weights.len()
        )));
    }
    let mut out = ConfusionAreas::default();
    for i in 0..n {
        let sim_changed = simulated[i] != initial[i];
        let act_changed = actual[i] != initial[i];
        let w = weights[i];
        match (sim_changed, act_changed) {
            (false, true) => out.a += w,
            (true, true) if simulated[i] == actual[i] => out.b += w,
            (true, true) => out.c += w,
            (true, false) => out.d += w,
            (false, false) => {}
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AccuracyReport {
    pub format_version: u32,
    pub fom: f64,
    pub pa: f64,
    pub ua: f64,
    pub confusion: ConfusionAreas,
    pub mode: WeightMode,
}

fn ratio(num: f64, den: f64) -> f64 {
    if den > 0.0 {
        num / den
    } else {
        0.0
    }
}

/// FoM = B/(A+B+C+D), PA = B/(A+B+C), UA = B/(B+C+D); a zero denominator gives 0.
pub fn figure_of_merit(c: ConfusionAreas, mode: WeightMode) -> AccuracyReport {
    AccuracyReport {
        format_version: crate::io::FORMAT_VERSION,
        fom: ratio(c.b, c.a + c.b + c.c + c.d),
        pa: ratio(c.b, c.a + c.b + c.c),
        ua: ratio(c.b, c.b + c.c + c.d),
        confusion: c,
        mode,
    }
}

/// Scores three category assignments over the same cells.
pub fn assess(
    initial: &Landscape,
    simulated: &Landscape,
    actual: &Landscape,
    mode: WeightMode,
) -> Result<AccuracyReport> {
    let weights: Vec<f64> = match mode {
        WeightMode::Area => initial.areas(),
        WeightMode::Count => vec![1.0; initial.len()],
    };
    let c = categorize(
        &initial.category_of(),
        &simulated.category_of(),
        &actual.category_of(),
        &weights,
    )?;
    Ok(figure_of_merit(c, mode))
}
