//! Land parcels, categories and landscapes.

use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{Point, Polygon, SpatialIndex};

pub type CategoryId = usize;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LandUseCategory {
    pub id: CategoryId,
    pub name: String,
}

/// Ordered category table with dense ids `0..K`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CategorySet {
    categories: Vec<LandUseCategory>,
}

impl CategorySet {
    pub fn new<S: Into<String>>(names: impl IntoIterator<Item = S>) -> Result<Self> {
        let categories: Vec<LandUseCategory> = names
            .into_iter()
            .enumerate()
            .map(|(id, n)| LandUseCategory { id, name: n.into() })
            .collect();
        let mut seen = HashSet::new();
        for c in &categories {
            if c.name.is_empty() {
                return Err(Error::InvalidLandscape("empty category name".into()));
            }
            if !seen.insert(c.name.as_str()) {
                return Err(Error::InvalidLandscape(format!(
                    "duplicate category name {:?}",
                    c.name
                )));
            }
        }
        Ok(CategorySet { categories })
    }

    pub fn len(&self) -> usize {
        self.categories.len()
    }

    pub fn is_empty(&self) -> bool {
        self.categories.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &LandUseCategory> {
        self.categories.iter()
    }

    pub fn names(&self) -> Vec<String> {
        self.categories.iter().map(|c| c.name.clone()).collect()
    }

    pub fn name(&self, id: CategoryId) -> &str {
        &self.categories[id].name
    }

    pub fn by_name(&self, name: &str) -> Option<CategoryId> {
        self.categories.iter().position(|c| c.name == name)
    }

    /// Resolves either a category name or a numeric id given as text.
    pub fn resolve(&self, key: &str) -> Result<CategoryId> {
        if let Some(id) = self.by_name(key) {
            return Ok(id);
        }
        match key.parse::<usize>() {
            Ok(id) if id < self.len() => Ok(id),
            _ => Err(Error::InvalidLandscape(format!("unknown category {key:?}"))),
        }
    }
}

/// A land parcel with cached measurements.
#[derive(Clone, Debug, PartialEq)]
pub struct Parcel {
    id: String,
    geometry: Polygon,
    pub category: CategoryId,
    parent_id: Option<String>,
    area: f64,
    perimeter: f64,
    centroid: Point,
}

impl Parcel {
    pub fn new(id: impl Into<String>, geometry: Polygon, category: CategoryId) -> Self {
        Parcel::with_parent(id, geometry, category, None)
    }

    pub fn with_parent(
        id: impl Into<String>,
        geometry: Polygon,
        category: CategoryId,
        parent_id: Option<String>,
    ) -> Self {
        let area = geometry.area();
        let perimeter = geometry.perimeter();
        let centroid = geometry.centroid();
        Parcel {
            id: id.into(),
            geometry,
            category,
            parent_id,
            area,
            perimeter,
            centroid,
        }
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn geometry(&self) -> &Polygon {
        &self.geometry
    }

    pub fn parent_id(&self) -> Option<&str> {
        self.parent_id.as_deref()
    }

    pub fn area(&self) -> f64 {
        self.area
    }

    pub fn perimeter(&self) -> f64 {
        self.perimeter
    }

    pub fn centroid(&self) -> Point {
        self.centroid
    }
}

/// A land-use map: parcels plus the category table they refer to.
#[derive(Clone, Debug, PartialEq)]
pub struct Landscape {
    parcels: Vec<Parcel>,
    categories: CategorySet,
    total_area: f64,
}

impl Landscape {
    pub fn new(parcels: Vec<Parcel>, categories: CategorySet) -> Result<Self> {
        let mut seen = HashSet::with_capacity(parcels.len());
        for p in &parcels {
            if !seen.insert(p.id.as_str()) {
                return Err(Error::InvalidLandscape(format!(
                    "duplicate parcel id {:?}",
                    p.id
                )));
            }
            if p.category >= categories.len() {
                return Err(Error::InvalidLandscape(format!(
                    "parcel {:?} has category {} but only {} categories exist",
                    p.id,
                    p.category,
                    categories.len()
                )));
            }
        }
        let total_area = parcels.iter().map(|p| p.area).sum();
        Ok(Landscape {
            parcels,
            categories,
            total_area,
        })
    }

    pub fn parcels(&self) -> &[Parcel] {
        &self.parcels
    }

    pub fn len(&self) -> usize {
        self.parcels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parcels.is_empty()
    }

    pub fn categories(&self) -> &CategorySet {
        &self.categories
    }

    pub fn total_area(&self) -> f64 {
        self.total_area
    }

    pub fn category_of(&self) -> Vec<CategoryId> {
        self.parcels.iter().map(|p| p.category).collect()
    }

    pub fn areas(&self) -> Vec<f64> {
        self.parcels.iter().map(|p| p.area).collect()
    }

    pub fn index_of(&self) -> HashMap<&str, usize> {
        self.parcels
            .iter()
            .enumerate()
            .map(|(i, p)| (p.id.as_str(), i))
            .collect()
    }

    /// Per-category area, indexed by category id.
    pub fn category_areas(&self) -> Vec<f64> {
        category_areas_of(
            &self.parcels.iter().map(|p| p.category).collect::<Vec<_>>(),
            &self.areas(),
            self.categories.len(),
        )
    }

    /// Same geometry with a new category assignment.
    pub fn with_assignment(&self, categories: &[CategoryId]) -> Result<Landscape> {
        if categories.len() != self.parcels.len() {
            return Err(Error::LengthMismatch(format!(
                "{} categories for {} parcels",
                categories.len(),
                self.parcels.len()
            )));
        }
        if let Some(&bad) = categories.iter().find(|&&c| c >= self.categories.len()) {
            return Err(Error::InvalidLandscape(format!(
                "category id {bad} out of range"
            )));
        }
        let mut out = self.clone();
        for (p, &c) in out.parcels.iter_mut().zip(categories) {
            p.category = c;
        }
        Ok(out)
    }

    pub fn spatial_index(&self) -> SpatialIndex {
        SpatialIndex::new(self.parcels.iter().map(|p| (p.geometry.bbox(), p.centroid)))
    }
}

pub(crate) fn category_areas_of(cats: &[CategoryId], areas: &[f64], k: usize) -> Vec<f64> {
    let mut out = vec![0.0; k];
    for (&c, &a) in cats.iter().zip(areas) {
        out[c] += a;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cats() -> CategorySet {
        CategorySet::new(["unused", "farmland", "construction"]).unwrap()
    }

    #[test]
    fn single_parcel_area() {
        let p = Parcel::new("a", Polygon::rect(0.0, 0.0, 10.0, 10.0).unwrap(), 1);
        let ls = Landscape::new(vec![p], cats()).unwrap();
        assert_eq!(ls.category_areas(), vec![0.0, 100.0, 0.0]);
    }

    #[test]
    fn empty_landscape_is_all_zero() {
        let ls = Landscape::new(vec![], cats()).unwrap();
        assert_eq!(ls.category_areas(), vec![0.0; 3]);
        assert_eq!(ls.total_area(), 0.0);
    }

    #[test]
    fn sums_by_category() {
        let ps = vec![
            Parcel::new("a", Polygon::rect(0.0, 0.0, 1.0, 1.0).unwrap(), 0),
            Parcel::new("b", Polygon::rect(1.0, 0.0, 3.0, 1.0).unwrap(), 2),
            Parcel::new("c", Polygon::rect(3.0, 0.0, 6.0, 1.0).unwrap(), 0),
        ];
        let ls = Landscape::new(ps, cats()).unwrap();
        let ca = ls.category_areas();
        assert_eq!(ca, vec![4.0, 0.0, 2.0]);
        assert!((ca.iter().sum::<f64>() - ls.total_area()).abs() < 1e-9);
    }

    #[test]
    fn rejects_duplicates_and_bad_categories() {
        let g = Polygon::rect(0.0, 0.0, 1.0, 1.0).unwrap();
        let dup = vec![
            Parcel::new("a", g.clone(), 0),
            Parcel::new("a", g.clone(), 0),
        ];
        assert!(Landscape::new(dup, cats()).is_err());
        assert!(Landscape::new(vec![Parcel::new("a", g, 7)], cats()).is_err());
        assert!(CategorySet::new(["x", "x"]).is_err());
    }

    #[test]
    fn reassignment_keeps_area() {
        let ps = vec![
            Parcel::new("a", Polygon::rect(0.0, 0.0, 1.0, 1.0).unwrap(), 0),
            Parcel::new("b", Polygon::rect(1.0, 0.0, 3.0, 1.0).unwrap(), 1),
        ];
        let ls = Landscape::new(ps, cats()).unwrap();
        let ls2 = ls.with_assignment(&[2, 2]).unwrap();
        assert_eq!(ls2.total_area(), ls.total_area());
        assert_eq!(ls2.category_areas(), vec![0.0, 0.0, 3.0]);
        assert!(ls.with_assignment(&[0]).is_err());
    }

    #[test]
    fn resolve_by_name_or_id() {
        let c = cats();
        assert_eq!(c.resolve("farmland").unwrap(), 1);
        assert_eq!(c.resolve("2").unwrap(), 2);
        assert!(c.resolve("water").is_err());
    }
}
