//! Minimum-cell lattice by repeated bisection.

use log::warn;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{bisect, Polygon};
use crate::parcel::{Landscape, Parcel};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubdivisionConfig {
    /// Stop splitting once a piece is no larger than this. Defaults to the mean
    /// parcel area of the input.
    #[serde(default)]
    pub target_area: Option<f64>,
    #[serde(default = "default_max_depth")]
    pub max_depth: u32,
}

fn default_max_depth() -> u32 {
    32
}

impl Default for SubdivisionConfig {
    fn default() -> Self {
        SubdivisionConfig {
            target_area: None,
            max_depth: default_max_depth(),
        }
    }
}

/// A parcel that could not be split and was kept whole.
#[derive(Clone, Debug, PartialEq)]
pub struct SubdivisionWarning {
    pub parcel_id: String,
    pub message: String,
}

#[derive(Clone, Debug)]
pub struct Subdivision {
    pub landscape: Landscape,
    pub target_area: f64,
    pub warnings: Vec<SubdivisionWarning>,
}

/// Bisects every parcel until each piece has area `<= target_area`.
///
/// Unsplit parcels keep their id. Split parcels are replaced by children with
/// ids `<id>/<path>`, where each path element is the side of the cut (`0` or
/// `1`) followed by a piece letter when that side fell apart. Children carry the
/// original parcel id as `parent_id`.
pub fn subdivide(ls: &Landscape, cfg: &SubdivisionConfig) -> Result<Subdivision> {
    let target = match cfg.target_area {
        Some(t) => t,
        None if ls.is_empty() => 1.0,
        None => ls.total_area() / ls.len() as f64,
    };
    if !(target > 0.0 && target.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "target_area must be positive, got {target}"
        )));
    }

    let results: Vec<(Vec<Parcel>, Option<SubdivisionWarning>)> = ls
        .parcels()
        .par_iter()
        .map(|p| split_parcel(p, target, cfg.max_depth))
        .collect();

    let mut parcels = Vec::new();
    let mut warnings = Vec::new();
    for (ps, w) in results {
        parcels.extend(ps);
        if let Some(w) = w {
            warn!("parcel {}: {}", w.parcel_id, w.message);
            warnings.push(w);
        }
    }
    Ok(Subdivision {
        landscape: Landscape::new(parcels, ls.categories().clone())?,
        target_area: target,
        warnings,
    })
}

fn split_parcel(
    p: &Parcel,
    target: f64,
    max_depth: u32,
) -> (Vec<Parcel>, Option<SubdivisionWarning>) {
    let parent = p.parent_id().unwrap_or(p.id()).to_string();
    if p.area() <= target || max_depth == 0 {
        let kept = Parcel::with_parent(p.id(), p.geometry().clone(), p.category, Some(parent));
        return (vec![kept], None);
    }
    let mut pieces: Vec<(String, Polygon)> = Vec::new();
    let mut failure = None;
    recurse(
        p.geometry().clone(),
        String::new(),
        0,
        target,
        max_depth,
        &mut pieces,
        &mut failure,
    );
    let warning = failure.map(|message| SubdivisionWarning {
        parcel_id: p.id().to_string(),
        message,
    });
    if pieces.len() == 1 {
        let kept = Parcel::with_parent(p.id(), p.geometry().clone(), p.category, Some(parent));
        return (vec![kept], warning);
    }
    let children = pieces
        .into_iter()
        .map(|(path, g)| {
            Parcel::with_parent(
                format!("{}/{}", p.id(), path),
                g,
                p.category,
                Some(parent.clone()),
            )
        })
        .collect();
    (children, warning)
}

fn recurse(
    poly: Polygon,
    path: String,
    depth: u32,
    target: f64,
    max_depth: u32,
    out: &mut Vec<(String, Polygon)>,
    failure: &mut Option<String>,
) {
    if poly.area() <= target || depth >= max_depth {
        out.push((path, poly));
        return;
    }
    match bisect(&poly) {
        Ok(halves) => {
            let multi = [halves.first.len() > 1, halves.second.len() > 1];
            for (side, i, piece) in halves.into_pieces() {
                let mut child = path.clone();
                child.push(if side == 0 { '0' } else { '1' });
                if multi[side] {
                    child.push_str(&piece_label(i));
                }
                recurse(piece, child, depth + 1, target, max_depth, out, failure);
            }
        }
        Err(e) => {
            if failure.is_none() {
                *failure = Some(format!("kept a piece of area {} whole: {e}", poly.area()));
            }
            out.push((path, poly));
        }
    }
}

fn piece_label(mut i: usize) -> String {
    let mut s = Vec::new();
    loop {
        s.push(b'a' + (i % 26) as u8);
        i /= 26;
        if i == 0 {
            break;
        }
        i -= 1;
    }
    s.reverse();
    String::from_utf8(s).unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parcel::CategorySet;

    fn single(poly: Polygon) -> Landscape {
        Landscape::new(
            vec![Parcel::new("p", poly, 1)],
            CategorySet::new(["a", "b"]).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn at_target_is_unchanged() {
        let ls = single(Polygon::rect(0.0, 0.0, 2.0, 2.0).unwrap());
        let out = subdivide(&ls, &SubdivisionConfig::default()).unwrap();
        assert_eq!(out.target_area, 4.0);
        assert_eq!(out.landscape.len(), 1);
        assert_eq!(out.landscape.parcels()[0].id(), "p");
        assert_eq!(
            out.landscape.parcels()[0].geometry(),
            ls.parcels()[0].geometry()
        );
    }

    #[test]
    fn square_into_four_cells() {
        let ls = single(Polygon::rect(0.0, 0.0, 2.0, 2.0).unwrap());
        let cfg = SubdivisionConfig {
            target_area: Some(1.0),
            ..Default::default()
        };
        let out = subdivide(&ls, &cfg).unwrap();
        assert_eq!(out.landscape.len(), 4);
        for c in out.landscape.parcels() {
            assert!((c.area() - 1.0).abs() < 1e-12);
            assert_eq!(c.parent_id(), Some("p"));
            assert_eq!(c.category, 1);
        }
        let ids: Vec<&str> = out.landscape.parcels().iter().map(|p| p.id()).collect();
        assert_eq!(ids, ["p/00", "p/01", "p/10", "p/11"]);
    }

    #[test]
    fn empty_landscape() {
        let ls = Landscape::new(vec![], CategorySet::new(["a", "b"]).unwrap()).unwrap();
        let out = subdivide(&ls, &SubdivisionConfig::default()).unwrap();
        assert!(out.landscape.is_empty());
    }

    #[test]
    fn max_depth_bounds_splitting() {
        let ls = single(Polygon::rect(0.0, 0.0, 16.0, 1.0).unwrap());
        let cfg = SubdivisionConfig {
            target_area: Some(1.0),
            max_depth: 2,
        };
        let out = subdivide(&ls, &cfg).unwrap();
        assert_eq!(out.landscape.len(), 4);
    }

    #[test]
    fn rejects_bad_target() {
        let ls = single(Polygon::rect(0.0, 0.0, 2.0, 2.0).unwrap());
        let cfg = SubdivisionConfig {
            target_area: Some(0.0),
            ..Default::default()
        };
        assert!(subdivide(&ls, &cfg).is_err());
    }

    #[test]
    fn piece_labels() {
        assert_eq!(piece_label(0), "a");
        assert_eq!(piece_label(25), "z");
        assert_eq!(piece_label(26), "aa");
    }
}
