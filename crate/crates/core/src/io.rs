//! File formats.
//!
//! Parcel maps use GeoJSON syntax with projected (metric) coordinates. An
//! optional top-level `categories` member declares the category table. Grids
//! are ESRI ASCII rasters. Tables are CSV, documents are JSON, and simulation
//! traces are JSON lines. Every writer is deterministic: numbers are printed in
//! shortest round-trip form and field order is fixed.

use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::assess::AccuracyReport;
use crate::demand::{CrossTab, Demand, Redistribution, TransitionMatrix};
use crate::engine::{
    default_radii, IterationRecord, RestrictedZone, Scenario, ScenarioConstraints, SimConfig,
    SimulationTrace, SweepTable,
};
use crate::error::{Error, Result};
use crate::features::{FeatureMatrix, GridSpec, SampleMode, VariableGrid};
use crate::geom::{Point, Polygon};
use crate::models::{ForestHyper, LogisticHyper, MlpHyper, ProbabilityModel};
use crate::parcel::{CategoryId, CategorySet, Landscape, Parcel};
use crate::subdivision::SubdivisionConfig;
use crate::vecli::{FilterRule, LandscapeReport, Similarity};

pub const FORMAT_VERSION: u32 = 1;

pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

// ---------------------------------------------------------------- parcels

#[derive(Deserialize)]
struct RawCollection {
    #[serde(rename = "type")]
    kind: String,
    #[serde(default)]
    categories: Option<Vec<String>>,
    features: Vec<Value>,
}

#[derive(Deserialize)]
struct RawFeature {
    geometry: Value,
    #[serde(default)]
    properties: serde_json::Map<String, Value>,
}

fn parse_position(v: &Value) -> std::result::Result<Point, String> {
    let a = v.as_array().ok_or("position is not an array")?;
    if a.len() < 2 {
        return Err("position has fewer than two coordinates".into());
    }
    let x = a[0].as_f64().ok_or("non-numeric coordinate")?;
    let y = a[1].as_f64().ok_or("non-numeric coordinate")?;
    Ok(Point::new(x, y))
}

fn parse_ring(v: &Value) -> std::result::Result<Vec<Point>, String> {
    v.as_array()
        .ok_or("ring is not an array")?
        .iter()
        .map(parse_position)
        .collect()
}

fn parse_polygon(v: &Value) -> std::result::Result<Polygon, String> {
    let rings = v.as_array().ok_or("polygon coordinates are not an array")?;
    let (ext, holes) = rings.split_first().ok_or("polygon has no rings")?;
    Polygon::new(
        parse_ring(ext)?,
        holes
            .iter()
            .map(parse_ring)
            .collect::<std::result::Result<_, _>>()?,
    )
    .map_err(|e| e.to_string())
}

/// The polygons of a Polygon or MultiPolygon geometry.
fn parse_polygons(geom: &Value) -> std::result::Result<Vec<Polygon>, String> {
    let kind = geom
        .get("type")
        .and_then(Value::as_str)
        .ok_or("geometry has no type")?;
    let coords = geom
        .get("coordinates")
        .ok_or("geometry has no coordinates")?;
    match kind {
        "Polygon" => Ok(vec![parse_polygon(coords)?]),
        "MultiPolygon" => coords
            .as_array()
            .ok_or("multipolygon coordinates are not an array")?
            .iter()
            .map(parse_polygon)
            .collect(),
        other => Err(format!("unsupported geometry type {other:?}")),
    }
}

fn parse_points(geom: &Value) -> std::result::Result<Vec<Point>, String> {
    let kind = geom
        .get("type")
        .and_then(Value::as_str)
        .ok_or("geometry has no type")?;
    let coords = geom
        .get("coordinates")
        .ok_or("geometry has no coordinates")?;
    match kind {
        "Point" => Ok(vec![parse_position(coords)?]),
        "MultiPoint" => parse_ring(coords),
        other => Err(format!("expected Point or MultiPoint, got {other:?}")),
    }
}

fn key_text(v: &Value) -> Option<String> {
    match v {
        Value::String(s) => Some(s.clone()),
        Value::Number(n) if n.is_i64() || n.is_u64() => Some(n.to_string()),
        _ => None,
    }
}

fn parse_collection(text: &str, path: &Path) -> Result<(Option<Vec<String>>, Vec<RawFeature>)> {
    let raw: RawCollection =
        serde_json::from_str(text).map_err(|e| Error::parse(path, e.to_string()))?;
    if raw.kind != "FeatureCollection" {
        return Err(Error::parse(
            path,
            format!("expected a FeatureCollection, got {:?}", raw.kind),
        ));
    }
    let features = raw
        .features
        .into_iter()
        .enumerate()
        .map(|(i, f)| {
            serde_json::from_value(f).map_err(|e| Error::parse(path, format!("feature {i}: {e}")))
        })
        .collect::<Result<_>>()?;
    Ok((raw.categories, features))
}

/// Parses a parcel map. `categories` overrides the file's own table; one of
/// the two must be present.
pub fn parse_parcels(
    text: &str,
    categories: Option<&CategorySet>,
    path: &Path,
) -> Result<Landscape> {
    let (declared, features) = parse_collection(text, path)?;
    let cats = match (categories, declared) {
        (Some(c), _) => c.clone(),
        (None, Some(names)) => {
            CategorySet::new(names).map_err(|e| Error::parse(path, e.to_string()))?
        }
        (None, None) => {
            return Err(Error::parse(
                path,
                "no category table: add a `categories` member or supply one",
            ))
        }
    };
    let mut parcels = Vec::with_capacity(features.len());
    let mut seen = HashSet::new();
    for (i, f) in features.iter().enumerate() {
        let err = |m: String| Error::parse(path, format!("feature {i}: {m}"));
        let id = f
            .properties
            .get("id")
            .and_then(key_text)
            .ok_or_else(|| err("missing string or integer `id`".into()))?;
        if !seen.insert(id.clone()) {
            return Err(err(format!("duplicate id {id:?}")));
        }
        let class = f
            .properties
            .get("luclass")
            .and_then(key_text)
            .ok_or_else(|| err("missing `luclass`".into()))?;
        let category = cats
            .resolve(&class)
            .map_err(|_| err(format!("unknown category {class:?}")))?;
        let parent = f
            .properties
            .get("parent_id")
            .filter(|v| !v.is_null())
            .map(key_text);
        let parent = match parent {
            Some(None) => return Err(err("`parent_id` must be a string or integer".into())),
            Some(Some(p)) => Some(p),
            None => None,
        };
        let polys = parse_polygons(&f.geometry).map_err(err)?;
        if polys.len() == 1 {
            parcels.push(Parcel::with_parent(
                id,
                polys.into_iter().next().unwrap(),
                category,
                parent,
            ));
        } else {
            for (k, poly) in polys.into_iter().enumerate() {
                let part = format!("{id}#{k}");
                if !seen.insert(part.clone()) {
                    return Err(err(format!("duplicate id {part:?}")));
                }
                parcels.push(Parcel::with_parent(part, poly, category, parent.clone()));
            }
        }
    }
    Landscape::new(parcels, cats).map_err(|e| Error::parse(path, e.to_string()))
}

pub fn read_parcels(path: &Path, categories: Option<&CategorySet>) -> Result<Landscape> {
    parse_parcels(&read_text(path)?, categories, path)
}

/// All polygons in a feature collection, ignoring properties.
pub fn read_polygons(path: &Path) -> Result<Vec<Polygon>> {
    let (_, features) = parse_collection(&read_text(path)?, path)?;
    let mut out = Vec::new();
    for (i, f) in features.iter().enumerate() {
        out.extend(
            parse_polygons(&f.geometry)
                .map_err(|m| Error::parse(path, format!("feature {i}: {m}")))?,
        );
    }
    Ok(out)
}

/// All points in a feature collection of Point or MultiPoint features.
pub fn read_points(path: &Path) -> Result<Vec<Point>> {
    let (_, features) = parse_collection(&read_text(path)?, path)?;
    let mut out = Vec::new();
    for (i, f) in features.iter().enumerate() {
        out.extend(
            parse_points(&f.geometry)
                .map_err(|m| Error::parse(path, format!("feature {i}: {m}")))?,
        );
    }
    Ok(out)
}

#[derive(Serialize)]
struct OutProps<'a> {
    id: &'a str,
    luclass: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    parent_id: Option<&'a str>,
}

#[derive(Serialize)]
struct OutGeometry {
    #[serde(rename = "type")]
    kind: &'static str,
    coordinates: Vec<Vec<[f64; 2]>>,
}

#[derive(Serialize)]
struct OutFeature<'a> {
    #[serde(rename = "type")]
    kind: &'static str,
    properties: OutProps<'a>,
    geometry: OutGeometry,
}

fn ring_coords(ring: &[Point]) -> Vec<[f64; 2]> {
    ring.iter().map(|p| [p.x, p.y]).collect()
}

/// A parcel map as text, one feature per line.
pub fn parcels_to_string(ls: &Landscape) -> String {
    let cats = ls.categories();
    let mut s = String::from("{\"type\":\"FeatureCollection\",\"categories\":");
    s.push_str(&serde_json::to_string(&cats.names()).unwrap());
    s.push_str(",\"features\":[");
    for (i, p) in ls.parcels().iter().enumerate() {
        let f = OutFeature {
            kind: "Feature",
            properties: OutProps {
                id: p.id(),
                luclass: cats.name(p.category),
                parent_id: p.parent_id(),
            },
            geometry: OutGeometry {
                kind: "Polygon",
                coordinates: p.geometry().rings().map(ring_coords).collect(),
            },
        };
        s.push_str(if i == 0 { "\n" } else { ",\n" });
        s.push_str(&serde_json::to_string(&f).unwrap());
    }
    s.push_str("\n]}\n");
    s
}

pub fn write_parcels(ls: &Landscape, path: &Path) -> Result<()> {
    write_text(path, &parcels_to_string(ls))
}

/// Points as a feature collection, for the point-source inputs of grid builders.
pub fn points_to_string(points: &[Point]) -> String {
    let mut s = String::from("{\"type\":\"FeatureCollection\",\"features\":[");
    for (i, p) in points.iter().enumerate() {
        s.push_str(if i == 0 { "\n" } else { ",\n" });
        let _ = write!(
            s,
            "{{\"type\":\"Feature\",\"properties\":{{}},\"geometry\":{{\"type\":\"Point\",\"coordinates\":{}}}}}",
            serde_json::to_string(&[p.x, p.y]).unwrap()
        );
    }
    s.push_str("\n]}\n");
    s
}

/// Polygons as a feature collection with no properties.
pub fn polygons_to_string(polys: &[Polygon]) -> String {
    let mut s = String::from("{\"type\":\"FeatureCollection\",\"features\":[");
    for (i, p) in polys.iter().enumerate() {
        let g = OutGeometry {
            kind: "Polygon",
            coordinates: p.rings().map(ring_coords).collect(),
        };
        s.push_str(if i == 0 { "\n" } else { ",\n" });
        let _ = write!(
            s,
            "{{\"type\":\"Feature\",\"properties\":{{}},\"geometry\":{}}}",
            serde_json::to_string(&g).unwrap()
        );
    }
    s.push_str("\n]}\n");
    s
}

// ---------------------------------------------------------------- grids

/// Parses an ESRI ASCII grid. The file lists the northernmost row first.
pub fn parse_grid(text: &str, path: &Path) -> Result<VariableGrid> {
    let err = |line: usize, m: String| Error::parse(path, format!("line {line}: {m}"));
    let mut header: BTreeMap<String, (usize, f64)> = BTreeMap::new();
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l)).peekable();
    while let Some(&(n, l)) = lines.peek() {
        let mut toks = l.split_whitespace();
        let Some(key) = toks.next() else {
            lines.next();
            continue;
        };
        if !key.starts_with(|c: char| c.is_ascii_alphabetic()) {
            break;
        }
        let val = toks
            .next()
            .ok_or_else(|| err(n, format!("missing value for {key}")))?
            .parse::<f64>()
            .map_err(|e| err(n, format!("bad value for {key}: {e}")))?;
        header.insert(key.to_ascii_lowercase(), (n, val));
        lines.next();
    }
    let get = |k: &str| header.get(k).copied();
    let need = |k: &str| get(k).ok_or_else(|| err(header.len() + 1, format!("header lacks {k}")));
    let count = |k: &str| -> Result<usize> {
        let (n, v) = need(k)?;
        if v < 1.0 || v.fract() != 0.0 {
            return Err(err(n, format!("{k} must be a positive integer, got {v}")));
        }
        Ok(v as usize)
    };
    let ncols = count("ncols")?;
    let nrows = count("nrows")?;
    let (_, cell_size) = need("cellsize")?;
    let corner = |c: &str, e: &str| -> Result<f64> {
        match (get(c), get(e)) {
            (Some((_, v)), _) => Ok(v),
            (None, Some((_, v))) => Ok(v - cell_size / 2.0),
            (None, None) => Err(err(header.len() + 1, format!("header lacks {c} or {e}"))),
        }
    };
    let origin = Point::new(
        corner("xllcorner", "xllcenter")?,
        corner("yllcorner", "yllcenter")?,
    );
    let nodata = get("nodata_value").map(|v| v.1);

    let mut file_rows: Vec<Vec<f64>> = Vec::with_capacity(nrows);
    let mut last_line = header.values().map(|v| v.0).max().unwrap_or(0);
    for (n, l) in lines {
        last_line = n;
        if l.trim().is_empty() {
            continue;
        }
        let row = l
            .split_whitespace()
            .map(|t| {
                t.parse::<f64>()
                    .map_err(|e| err(n, format!("bad value {t:?}: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        if row.len() != ncols {
            return Err(err(
                n,
                format!("expected {ncols} values, got {}", row.len()),
            ));
        }
        if file_rows.len() == nrows {
            return Err(err(n, format!("more than {nrows} data rows")));
        }
        file_rows.push(row);
    }
    if file_rows.len() != nrows {
        return Err(err(
            last_line,
            format!("expected {nrows} data rows, got {}", file_rows.len()),
        ));
    }
    let values: Vec<f64> = file_rows.into_iter().rev().flatten().collect();
    let spec = GridSpec {
        origin,
        cell_size,
        ncols,
        nrows,
    };
    VariableGrid::new(spec, values, nodata).map_err(|e| Error::parse(path, e.to_string()))
}

pub fn read_grid(path: &Path) -> Result<VariableGrid> {
    parse_grid(&read_text(path)?, path)
}

pub fn grid_to_string(g: &VariableGrid) -> String {
    let s = &g.spec;
    let mut out = format!(
        "ncols {}\nnrows {}\nxllcorner {}\nyllcorner {}\ncellsize {}\n",
        s.ncols, s.nrows, s.origin.x, s.origin.y, s.cell_size
    );
    if let Some(nd) = g.nodata {
        let _ = writeln!(out, "NODATA_value {nd}");
    }
    for row in (0..s.nrows).rev() {
        let line: Vec<String> = (0..s.ncols).map(|c| g.get(c, row).to_string()).collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    out
}

pub fn write_grid(g: &VariableGrid, path: &Path) -> Result<()> {
    write_text(path, &grid_to_string(g))
}

// ---------------------------------------------------------------- tables

fn csv_string(header: &[String], rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(header).unwrap();
    for r in rows {
        w.write_record(&r).unwrap();
    }
    String::from_utf8(w.into_inner().unwrap()).unwrap()
}

fn csv_records(text: &str, path: &Path) -> Result<(Vec<String>, Vec<(usize, Vec<String>)>)> {
    let mut r = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let header: Vec<String> = r
        .headers()
        .map_err(|e| Error::parse(path, e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| Error::parse(path, e.to_string()))?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        rows.push((line, rec.iter().map(str::to_string).collect()));
    }
    Ok((header, rows))
}

fn num(s: &str, line: usize, path: &Path) -> Result<f64> {
    s.parse::<f64>()
        .map_err(|e| Error::parse(path, format!("line {line}: bad number {s:?}: {e}")))
}

fn opt_num(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| x.to_string())
}

pub fn features_to_string(m: &FeatureMatrix) -> String {
    let mut header = vec!["id".to_string()];
    header.extend(m.names.iter().cloned());
    csv_string(
        &header,
        m.ids.iter().enumerate().map(|(i, id)| {
            let mut r = vec![id.clone()];
            r.extend(m.row(i).iter().map(f64::to_string));
            r
        }),
    )
}

pub fn write_features(m: &FeatureMatrix, path: &Path) -> Result<()> {
    write_text(path, &features_to_string(m))
}

pub fn read_features(path: &Path) -> Result<FeatureMatrix> {
    let (header, rows) = csv_records(&read_text(path)?, path)?;
    if header.first().map(String::as_str) != Some("id") {
        return Err(Error::parse(path, "first column must be `id`"));
    }
    let mut ids = Vec::with_capacity(rows.len());
    let mut values = Vec::with_capacity(rows.len() * (header.len() - 1));
    for (line, r) in rows {
        if r.len() != header.len() {
            return Err(Error::parse(
                path,
                format!("line {line}: expected {} fields", header.len()),
            ));
        }
        ids.push(r[0].clone());
        for v in &r[1..] {
            values.push(num(v, line, path)?);
        }
    }
    FeatureMatrix::new(ids, header[1..].to_vec(), values)
        .map_err(|e| Error::parse(path, e.to_string()))
}

pub fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    write_text(path, &s)
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    serde_json::from_str(&read_text(path)?).map_err(|e| Error::parse(path, e.to_string()))
}

/// Reads a JSON document carrying a `format_version` field, rejecting other versions.
pub fn read_versioned<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let v: Value = read_json(path)?;
    let found = v
        .get("format_version")
        .and_then(Value::as_u64)
        .ok_or_else(|| Error::parse(path, "missing format_version"))?;
    if found != u64::from(FORMAT_VERSION) {
        return Err(Error::FormatVersion {
            found: found as u32,
            expected: FORMAT_VERSION,
        });
    }
    serde_json::from_value(v).map_err(|e| Error::parse(path, e.to_string()))
}

pub fn write_model(m: &ProbabilityModel, path: &Path) -> Result<()> {
    write_json(m, path)
}

pub fn read_model(path: &Path) -> Result<ProbabilityModel> {
    read_versioned(path)
}

fn square_to_string(corner: &str, names: &[String], rows: &[Vec<f64>]) -> String {
    let mut header = vec![corner.to_string()];
    header.extend(names.iter().cloned());
    csv_string(
        &header,
        names.iter().zip(rows).map(|(n, r)| {
            let mut out = vec![n.clone()];
            out.extend(r.iter().map(f64::to_string));
            out
        }),
    )
}

/// Cross-tabulated areas, one row per starting category.
pub fn crosstab_to_string(ct: &CrossTab) -> String {
    square_to_string("from\\to", &ct.categories, &ct.areas)
}

pub fn transition_to_string(categories: &[String], tm: &TransitionMatrix) -> String {
    square_to_string("from\\to", categories, &tm.rows)
}

pub fn demand_to_string(d: &Demand) -> String {
    csv_string(
        &["category".into(), "target_area".into()],
        d.categories
            .iter()
            .zip(&d.targets)
            .map(|(c, t)| vec![c.clone(), t.to_string()]),
    )
}

pub fn write_demand(d: &Demand, path: &Path) -> Result<()> {
    if path.extension().is_some_and(|e| e == "json") {
        write_json(d, path)
    } else {
        write_text(path, &demand_to_string(d))
    }
}

/// Reads demand as JSON (`.json`) or two-column CSV.
pub fn read_demand(path: &Path) -> Result<Demand> {
    if path.extension().is_some_and(|e| e == "json") {
        return read_json(path);
    }
    let (header, rows) = csv_records(&read_text(path)?, path)?;
    if header != ["category", "target_area"] {
        return Err(Error::parse(path, "expected columns category,target_area"));
    }
    let mut d = Demand {
        categories: Vec::new(),
        targets: Vec::new(),
    };
    for (line, r) in rows {
        if r.len() != 2 {
            return Err(Error::parse(
                path,
                format!("line {line}: expected 2 fields"),
            ));
        }
        d.categories.push(r[0].clone());
        d.targets.push(num(&r[1], line, path)?);
    }
    Ok(d)
}

pub fn accuracy_to_csv(r: &AccuracyReport) -> String {
    let c = &r.confusion;
    csv_string(
        &["fom", "pa", "ua", "a", "b", "c", "d"].map(String::from),
        [vec![r.fom, r.pa, r.ua, c.a, c.b, c.c, c.d]
            .iter()
            .map(f64::to_string)
            .collect()],
    )
}

/// A landscape-index table with one labelled row per report and an optional
/// similarity column.
pub fn li_table(rows: &[(String, &LandscapeReport, Option<f64>)]) -> String {
    csv_string(
        &["label", "NP", "LPI", "ENN", "PARA", "similarity"].map(String::from),
        rows.iter().map(|(label, r, sim)| {
            vec![
                label.clone(),
                r.np.to_string(),
                r.lpi.to_string(),
                opt_num(r.enn),
                r.para.to_string(),
                opt_num(*sim),
            ]
        }),
    )
}

/// Landscape and per-category indices of one report.
pub fn report_to_csv(r: &LandscapeReport, categories: &CategorySet) -> String {
    let mut rows = vec![vec![
        "landscape".to_string(),
        r.np.to_string(),
        r.lpi.to_string(),
        opt_num(r.enn),
        r.para.to_string(),
    ]];
    for c in &r.per_category {
        rows.push(vec![
            categories.name(c.category).to_string(),
            c.np.to_string(),
            c.lpi.to_string(),
            opt_num(c.enn),
            c.para.to_string(),
        ]);
    }
    csv_string(
        &["scope", "NP", "LPI", "ENN", "PARA"].map(String::from),
        rows,
    )
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimilarityReport {
    pub format_version: u32,
    pub simulated: LandscapeReport,
    pub actual: LandscapeReport,
    pub similarity: Similarity,
}

pub fn sweep_to_csv(t: &SweepTable) -> String {
    csv_string(
        &["radius".into(), "fom".into()],
        t.rows
            .iter()
            .map(|r| vec![r.radius.to_string(), r.fom.to_string()]),
    )
}

#[derive(Serialize, Deserialize)]
struct TraceHeader {
    format_version: u32,
    categories: Vec<String>,
}

/// A header line followed by one line per iteration.
pub fn trace_to_string(t: &SimulationTrace) -> String {
    let mut s = serde_json::to_string(&TraceHeader {
        format_version: FORMAT_VERSION,
        categories: t.categories.clone(),
    })
    .unwrap();
    s.push('\n');
    for r in &t.records {
        s.push_str(&serde_json::to_string(r).unwrap());
        s.push('\n');
    }
    s
}

pub fn write_trace(t: &SimulationTrace, path: &Path) -> Result<()> {
    write_text(path, &trace_to_string(t))
}

pub fn read_trace(path: &Path) -> Result<SimulationTrace> {
    let text = read_text(path)?;
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty());
    let (_, first) = lines
        .next()
        .ok_or_else(|| Error::parse(path, "empty trace"))?;
    let header: TraceHeader =
        serde_json::from_str(first).map_err(|e| Error::parse(path, format!("line 1: {e}")))?;
    if header.format_version != FORMAT_VERSION {
        return Err(Error::FormatVersion {
            found: header.format_version,
            expected: FORMAT_VERSION,
        });
    }
    let records = lines
        .map(|(n, l)| {
            serde_json::from_str::<IterationRecord>(l)
                .map_err(|e| Error::parse(path, format!("line {}: {e}", n + 1)))
        })
        .collect::<Result<_>>()?;
    Ok(SimulationTrace {
        categories: header.categories,
        records,
    })
}

// ---------------------------------------------------------------- config

fn default_version() -> u32 {
    FORMAT_VERSION
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputsConfig {
    /// Parcel map at the start date.
    pub parcels: PathBuf,
    /// Parcel map at the end date, used for labels and scoring.
    #[serde(default)]
    pub actual: Option<PathBuf>,
    /// Existing model to use instead of training one.
    #[serde(default)]
    pub model: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GridKind {
    /// ESRI ASCII raster.
    File,
    /// Euclidean distance to the nearest point of a point file.
    Distance,
    /// Gaussian kernel density of a point file.
    Kde,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSource {
    pub name: String,
    pub kind: GridKind,
    pub path: PathBuf,
    /// KDE bandwidth in meters; Scott's rule when absent.
    #[serde(default)]
    pub bandwidth: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeaturesConfig {
    pub sample: SampleMode,
    /// Cell size of grids rasterised from point files.
    pub cell_size: f64,
    /// Rescale each grid to `[0, 1]` before sampling.
    pub normalize: bool,
    pub grids: Vec<GridSource>,
}

impl Default for FeaturesConfig {
    fn default() -> Self {
        FeaturesConfig {
            sample: SampleMode::Centroid,
            cell_size: crate::features::DEFAULT_CELL_SIZE,
            normalize: true,
            grids: Vec::new(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelChoice {
    Lr,
    Mlp,
    Rf,
}

impl std::str::FromStr for ModelChoice {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lr" => Ok(ModelChoice::Lr),
            "mlp" => Ok(ModelChoice::Mlp),
            "rf" => Ok(ModelChoice::Rf),
            _ => Err(Error::InvalidConfig(format!(
                "unknown model {s:?}; expected lr, mlp or rf"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub kind: ModelChoice,
    pub train_fraction: f64,
    /// Undersample training rows to equal class counts.
    pub balanced: bool,
    pub lr: LogisticHyper,
    pub mlp: MlpHyper,
    pub rf: ForestHyper,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            kind: ModelChoice::Rf,
            train_fraction: 0.7,
            balanced: false,
            lr: LogisticHyper::default(),
            mlp: MlpHyper::default(),
            rf: ForestHyper::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub preset: Scenario,
    /// Polygon files whose features become restricted zones.
    pub zones: Vec<PathBuf>,
    pub overlap_fraction: f64,
    /// Categories that zones block.
    pub development: Vec<String>,
    /// Category protected by the farmland preset.
    pub farmland: Option<String>,
    /// Extra forbidden (from, to) pairs.
    pub forbidden: Vec<(String, String)>,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            preset: Scenario::Unrestricted,
            zones: Vec::new(),
            overlap_fraction: 0.5,
            development: Vec::new(),
            farmland: None,
            forbidden: Vec::new(),
        }
    }
}

fn resolve_pairs(
    cats: &CategorySet,
    pairs: &[(String, String)],
) -> Result<Vec<(CategoryId, CategoryId)>> {
    pairs
        .iter()
        .map(|(a, b)| Ok((cats.resolve(a)?, cats.resolve(b)?)))
        .collect()
}

impl ScenarioConfig {
    /// Reads the zone files and resolves category names.
    pub fn build(&self, cats: &CategorySet) -> Result<ScenarioConstraints> {
        let mut zones = Vec::new();
        for p in &self.zones {
            for polygon in read_polygons(p)? {
                zones.push(RestrictedZone {
                    polygon,
                    overlap_fraction: self.overlap_fraction,
                });
            }
        }
        let development = self
            .development
            .iter()
            .map(|d| cats.resolve(d))
            .collect::<Result<Vec<_>>>()?;
        let farmland = self
            .farmland
            .as_deref()
            .map(|f| cats.resolve(f))
            .transpose()?;
        let mut sc = self.preset.constraints(zones, development, farmland)?;
        sc.forbidden.extend(resolve_pairs(cats, &self.forbidden)?);
        Ok(sc)
    }

    fn resolve_paths(&mut self, base: &Path) {
        self.zones.iter_mut().for_each(|z| *z = base.join(&*z));
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MarkovConfig {
    /// Parcel map one period before the start map.
    pub earlier: PathBuf,
    pub period_years: f64,
    pub base_year: f64,
    pub target_year: f64,
    #[serde(default)]
    pub forbidden: Vec<(String, String)>,
    #[serde(default)]
    pub redistribution: Redistribution,
}

impl MarkovConfig {
    pub fn forbidden_ids(&self, cats: &CategorySet) -> Result<Vec<(CategoryId, CategoryId)>> {
        resolve_pairs(cats, &self.forbidden)
    }
}

/// Exactly one of explicit targets (m² per category) or a Markov projection.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DemandConfig {
    #[serde(default)]
    pub targets: Option<BTreeMap<String, f64>>,
    #[serde(default)]
    pub markov: Option<MarkovConfig>,
}

impl DemandConfig {
    pub fn explicit(&self, cats: &CategorySet) -> Result<Option<Demand>> {
        let Some(t) = &self.targets else {
            return Ok(None);
        };
        for k in t.keys() {
            cats.resolve(k)?;
        }
        let targets = cats
            .names()
            .iter()
            .map(|n| {
                t.get(n)
                    .copied()
                    .ok_or_else(|| Error::InvalidConfig(format!("demand target for {n:?} missing")))
            })
            .collect::<Result<_>>()?;
        Ok(Some(Demand {
            categories: cats.names(),
            targets,
        }))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub radii: Vec<f64>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            radii: default_radii(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VecliConfig {
    pub adjacency_tol: f64,
    pub filter: FilterRule,
}

impl Default for VecliConfig {
    fn default() -> Self {
        VecliConfig {
            adjacency_tol: crate::geom::DEFAULT_ADJACENCY_TOL,
            filter: FilterRule::None,
        }
    }
}

/// The end-to-end workflow in one document.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_version")]
    pub format_version: u32,
    /// Overrides the simulation seed and seeds model training.
    #[serde(default)]
    pub seed: Option<u64>,
    pub categories: Vec<String>,
    pub inputs: InputsConfig,
    #[serde(default)]
    pub subdivision: SubdivisionConfig,
    #[serde(default)]
    pub features: FeaturesConfig,
    #[serde(default)]
    pub model: ModelConfig,
    #[serde(default)]
    pub simulation: SimConfig,
    #[serde(default)]
    pub scenario: ScenarioConfig,
    pub demand: DemandConfig,
    /// Run a radius sweep when present.
    #[serde(default)]
    pub sweep: Option<SweepConfig>,
    #[serde(default)]
    pub vecli: VecliConfig,
    pub output: OutputConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
}

/// Simulation settings and constraints for the `simulate` and `sweep` commands.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationFile {
    #[serde(default = "default_version")]
    pub format_version: u32,
    #[serde(default)]
    pub simulation: SimConfig,
    #[serde(default)]
    pub scenario: ScenarioConfig,
}

fn parse_config<T: DeserializeOwned>(text: &str, path: &Path) -> Result<T> {
    if path.extension().is_some_and(|e| e == "json") {
        serde_json::from_str(text).map_err(|e| Error::parse(path, e.to_string()))
    } else {
        toml::from_str(text).map_err(|e| Error::parse(path, e.to_string()))
    }
}

fn check_version(found: u32) -> Result<()> {
    if found != FORMAT_VERSION {
        return Err(Error::FormatVersion {
            found,
            expected: FORMAT_VERSION,
        });
    }
    Ok(())
}

fn base_dir(path: &Path) -> PathBuf {
    path.parent().map(Path::to_path_buf).unwrap_or_default()
}

impl RunConfig {
    /// Reads TOML, or JSON when the extension is `.json`. Relative paths are
    /// taken relative to the config file.
    pub fn read(path: &Path) -> Result<Self> {
        let mut c: RunConfig = parse_config(&read_text(path)?, path)?;
        check_version(c.format_version)?;
        c.resolve_paths(&base_dir(path));
        c.simulation.validate()?;
        if c.demand.targets.is_some() == c.demand.markov.is_some() {
            return Err(Error::InvalidConfig(
                "demand needs exactly one of `targets` or `markov`".into(),
            ));
        }
        Ok(c)
    }

    fn resolve_paths(&mut self, base: &Path) {
        let j = |p: &mut PathBuf| *p = base.join(&*p);
        j(&mut self.inputs.parcels);
        self.inputs.actual.iter_mut().for_each(j);
        self.inputs.model.iter_mut().for_each(j);
        self.features.grids.iter_mut().for_each(|g| j(&mut g.path));
        self.scenario.resolve_paths(base);
        if let Some(m) = &mut self.demand.markov {
            j(&mut m.earlier);
        }
        j(&mut self.output.dir);
    }

    pub fn category_set(&self) -> Result<CategorySet> {
        CategorySet::new(self.categories.iter().cloned())
    }
}

impl SimulationFile {
    pub fn read(path: &Path) -> Result<Self> {
        let mut c: SimulationFile = parse_config(&read_text(path)?, path)?;
        check_version(c.format_version)?;
        c.scenario.resolve_paths(&base_dir(path));
        c.simulation.validate()?;
        Ok(c)
    }
}
