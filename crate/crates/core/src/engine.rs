//! The vector CA loop.
//!
//! Each cell's chance of becoming category `k` is `Po^k * Ω^k * Pr^k * RA`, where:
//! - `Po` comes from a trained model.
//! - `Ω` is the neighborhood effect.
//! - `Pr` is the restriction mask.
//! - `RA` is a heavy-tailed random factor.
//!
//! Per iteration, cells whose best eligible probability clears the current
//! threshold go into a roulette pool. The pool is drawn without replacement
//! until the area quota for the iteration is met.
//!
//! `Ω` for cell `i` uses every other cell `j` whose centroid lies within the
//! neighborhood radius. The pairwise weight is
//! `exp(-d_ij / L) * (S_j / S_i) / (S_max / S_min)`, with `L` the decay length
//! (the radius by default). The per-category value is the share of total
//! neighbor weight held by cells of that category. A cell with no neighbors
//! gets the uniform vector `1/K`.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::assess::{assess, WeightMode};
use crate::demand::Demand;
use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::geom::{intersection_area, Polygon, SpatialIndex};
use crate::models::{predict_po, ProbabilityModel};
use crate::parcel::{CategoryId, CategorySet, Landscape};
use crate::rng::{self, stream};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    /// Centroid buffer radius in meters.
    pub neighborhood_radius: f64,
    /// Distance scale of the exponential decay; `None` uses the radius.
    pub decay_length: Option<f64>,
    /// Random-factor exponent, in `[1, 10]`.
    pub alpha: f64,
    pub iterations: usize,
    pub initial_threshold: f64,
    pub threshold_decay: f64,
    /// Consecutive under-quota iterations before the threshold decays.
    pub patience: usize,
    /// An iteration converting less than this fraction of its quota counts as stalled.
    pub stall_fraction: f64,
    /// Allowed demand overrun per category in m²; `None` uses the mean cell area.
    pub demand_slack: Option<f64>,
    pub seed: u64,
    /// Put every eligible (cell, category) pair in the pool instead of each
    /// cell's best category only.
    pub all_pairs: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            neighborhood_radius: 600.0,
            decay_length: None,
            alpha: 1.0,
            iterations: 10,
            initial_threshold: 0.8,
            threshold_decay: 0.9,
            patience: 1,
            stall_fraction: 0.1,
            demand_slack: None,
            seed: 0,
            all_pairs: false,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if !(self.neighborhood_radius > 0.0 && self.neighborhood_radius.is_finite()) {
            return bad(format!(
                "neighborhood radius {} must be positive",
                self.neighborhood_radius
            ));
        }
        if let Some(l) = self.decay_length {
            if !(l > 0.0 && l.is_finite()) {
                return bad(format!("decay length {l} must be positive"));
            }
        }
        if !(1.0..=10.0).contains(&self.alpha) {
            return bad(format!("alpha {} outside [1, 10]", self.alpha));
        }
        if self.iterations == 0 {
            return bad("iterations must be at least 1".into());
        }
        if !(0.0..=1.0).contains(&self.initial_threshold) {
            return bad(format!(
                "initial threshold {} outside [0, 1]",
                self.initial_threshold
            ));
        }
        if !(self.threshold_decay > 0.0 && self.threshold_decay < 1.0) {
            return bad(format!(
                "threshold decay {} outside (0, 1)",
                self.threshold_decay
            ));
        }
        if !(0.0..=1.0).contains(&self.stall_fraction) {
            return bad(format!(
                "stall fraction {} outside [0, 1]",
                self.stall_fraction
            ));
        }
        if self.patience == 0 {
            return bad("patience must be at least 1".into());
        }
        if let Some(s) = self.demand_slack {
            if !(s >= 0.0 && s.is_finite()) {
                return bad(format!("demand slack {s} must be non-negative"));
            }
        }
        Ok(())
    }

    pub fn decay(&self) -> f64 {
        self.decay_length.unwrap_or(self.neighborhood_radius)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RestrictedZone {
    pub polygon: Polygon,
    /// A cell is restricted when more than this fraction of its area lies in the zone.
    pub overlap_fraction: f64,
}

impl RestrictedZone {
    pub fn new(polygon: Polygon) -> Self {
        RestrictedZone {
            polygon,
            overlap_fraction: 0.5,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ScenarioConstraints {
    pub zones: Vec<RestrictedZone>,
    /// Categories that restricted zones block.
    pub development_categories: Vec<CategoryId>,
    /// Forbidden (from, to) transitions.
    pub forbidden: Vec<(CategoryId, CategoryId)>,
}

/// Constraint templates for the standard scenario studies.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scenario {
    /// Only the supplied zones restrict development.
    Unrestricted,
    /// Zones restrict development and farmland may not become a development category.
    Farmland,
    /// The supplied zones are protected areas; at least one is required.
    Eco,
}

impl std::str::FromStr for Scenario {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "unrestricted" => Ok(Scenario::Unrestricted),
            "farmland" => Ok(Scenario::Farmland),
            "eco" => Ok(Scenario::Eco),
            _ => Err(Error::InvalidConfig(format!(
                "unknown scenario {s:?}; expected unrestricted, farmland or eco"
            ))),
        }
    }
}

impl Scenario {
    pub fn constraints(
        self,
        zones: Vec<RestrictedZone>,
        development: Vec<CategoryId>,
        farmland: Option<CategoryId>,
    ) -> Result<ScenarioConstraints> {
        let mut sc = ScenarioConstraints {
            zones,
            development_categories: development,
            forbidden: Vec::new(),
        };
        match self {
            Scenario::Unrestricted => {}
            Scenario::Farmland => {
                let f = farmland.ok_or_else(|| {
                    Error::InvalidConfig("farmland scenario needs a farmland category".into())
                })?;
                sc.forbidden = sc
                    .development_categories
                    .iter()
                    .filter(|&&d| d != f)
                    .map(|&d| (f, d))
                    .collect();
            }
            Scenario::Eco => {
                if sc.zones.is_empty() {
                    return Err(Error::InvalidConfig(
                        "eco scenario needs at least one zone".into(),
                    ));
                }
            }
        }
        Ok(sc)
    }
}

/// Precomputed neighbor weights. Geometry is fixed during a run, so only the
/// category aggregation changes between iterations.
#[derive(Clone, Debug)]
pub struct Neighborhood {
    k: usize,
    weights: Vec<Vec<(usize, f64)>>,
}

impl Neighborhood {
    pub fn new(ls: &Landscape, radius: f64, decay: f64) -> Self {
        let idx = ls.spatial_index();
        Self::with_index(ls, &idx, radius, decay)
    }

    pub fn with_index(ls: &Landscape, idx: &SpatialIndex, radius: f64, decay: f64) -> Self {
        let areas = ls.areas();
        let s_max = areas.iter().copied().fold(0.0, f64::max);
        let s_min = areas.iter().copied().fold(f64::INFINITY, f64::min);
        let spread = s_max / s_min;
        let parcels = ls.parcels();
        let weights = (0..ls.len())
            .into_par_iter()
            .map(|i| {
                let ci = parcels[i].centroid();
                idx.query_within_radius(ci, radius)
                    .into_iter()
                    .filter(|&j| j != i)
                    .map(|j| {
                        let d = ci.distance(parcels[j].centroid());
                        (j, (-d / decay).exp() * (areas[j] / areas[i]) / spread)
                    })
                    .collect()
            })
            .collect();
        Neighborhood {
            k: ls.categories().len(),
            weights,
        }
    }

    /// The per-category effect on cell `i` under the assignment `cats`.
    pub fn effect(&self, i: usize, cats: &[CategoryId]) -> Vec<f64> {
        let mut out = vec![0.0; self.k];
        let mut total = 0.0;
        for &(j, w) in &self.weights[i] {
            out[cats[j]] += w;
            total += w;
        }
        if total > 0.0 {
            out.iter_mut().for_each(|v| *v /= total);
        } else {
            out.iter_mut().for_each(|v| *v = 1.0 / self.k as f64);
        }
        out
    }

    pub fn neighbors(&self, i: usize) -> &[(usize, f64)] {
        &self.weights[i]
    }
}

/// The neighborhood effect on cell `i` of `ls`, for one-off queries.
pub fn neighborhood_effect(
    i: usize,
    ls: &Landscape,
    idx: &SpatialIndex,
    radius: f64,
    decay: f64,
) -> Vec<f64> {
    let parcels = ls.parcels();
    let areas = ls.areas();
    let s_max = areas.iter().copied().fold(0.0, f64::max);
    let s_min = areas.iter().copied().fold(f64::INFINITY, f64::min);
    let ci = parcels[i].centroid();
    let mut out = vec![0.0; ls.categories().len()];
    let mut total = 0.0;
    for j in idx.query_within_radius(ci, radius) {
        if j == i {
            continue;
        }
        let d = ci.distance(parcels[j].centroid());
        let w = (-d / decay).exp() * (areas[j] / areas[i]) / (s_max / s_min);
        out[parcels[j].category] += w;
        total += w;
    }
    let k = out.len() as f64;
    if total > 0.0 {
        out.iter_mut().for_each(|v| *v /= total);
    } else {
        out.iter_mut().for_each(|v| *v = 1.0 / k);
    }
    out
}

/// `1 + (-ln y)^alpha` for `y` in `(0, 1]`.
pub fn random_factor_from_y(y: f64, alpha: f64) -> f64 {
    1.0 + (-y.ln()).max(0.0).powf(alpha)
}

pub fn random_factor(rng: &mut impl Rng, alpha: f64) -> f64 {
    // gen() is in [0, 1), so 1 - gen() is in (0, 1].
    random_factor_from_y(1.0 - rng.gen::<f64>(), alpha)
}

/// A `cells x K` matrix of 0/1 factors.
pub fn restriction_mask(ls: &Landscape, sc: &ScenarioConstraints) -> Result<Vec<Vec<u8>>> {
    let k = ls.categories().len();
    for &c in sc
        .development_categories
        .iter()
        .chain(sc.forbidden.iter().flat_map(|(a, b)| [a, b]))
    {
        if c >= k {
            return Err(Error::InvalidConfig(format!(
                "constraint category {c} out of range"
            )));
        }
    }
    for (zi, z) in sc.zones.iter().enumerate() {
        z.polygon
            .validate()
            .map_err(|e| Error::InvalidGeometry(format!("restricted zone {zi}: {e}")))?;
        if !(0.0..=1.0).contains(&z.overlap_fraction) {
            return Err(Error::InvalidConfig(format!(
                "zone {zi} overlap fraction {} outside [0, 1]",
                z.overlap_fraction
            )));
        }
    }
    let mut mask = vec![vec![1u8; k]; ls.len()];
    let parcels = ls.parcels();
    for (i, row) in mask.iter_mut().enumerate() {
        for &(from, to) in &sc.forbidden {
            if parcels[i].category == from {
                row[to] = 0;
            }
        }
    }
    if !sc.zones.is_empty() && !sc.development_categories.is_empty() {
        let idx = ls.spatial_index();
        let mut restricted = vec![false; ls.len()];
        for z in &sc.zones {
            for i in idx.query_bbox(&z.polygon.bbox(), 0.0) {
                if restricted[i] {
                    continue;
                }
                let p = &parcels[i];
                if intersection_area(p.geometry(), &z.polygon) > z.overlap_fraction * p.area() {
                    restricted[i] = true;
                }
            }
        }
        for (i, row) in mask.iter_mut().enumerate() {
            if restricted[i] {
                for &c in &sc.development_categories {
                    row[c] = 0;
                }
            }
        }
    }
    Ok(mask)
}

pub fn combined_probability(po: &[f64], omega: &[f64], pr: &[u8], ra: f64) -> Vec<f64> {
    po.iter()
        .zip(omega)
        .zip(pr)
        .map(|((p, o), &r)| p * o * f64::from(r) * ra)
        .collect()
}

/// Draws one id with probability proportional to its weight.
pub fn roulette_select(candidates: &[(usize, f64)], rng: &mut impl Rng) -> Result<usize> {
    let total: f64 = candidates.iter().map(|c| c.1.max(0.0)).sum();
    if !(total > 0.0) {
        return Err(Error::NoCandidate);
    }
    let u = rng.gen::<f64>() * total;
    let mut acc = 0.0;
    let mut last = None;
    for &(id, w) in candidates {
        if w > 0.0 {
            acc += w;
            last = Some(id);
            if u < acc {
                return Ok(id);
            }
        }
    }
    Ok(last.expect("positive total implies a positive weight"))
}

/// Orders a pool as repeated roulette draws without replacement would. Each
/// entry gets the key `ln(u) / w`; sorting keys in descending order gives the
/// same distribution over sequences as drawing one at a time and removing the
/// winner.
fn roulette_order(weights: &[f64], rng: &mut ChaCha8Rng) -> Vec<usize> {
    let mut keyed: Vec<(f64, usize)> = weights
        .iter()
        .enumerate()
        .filter(|(_, &w)| w > 0.0)
        .map(|(n, &w)| ((1.0 - rng.gen::<f64>()).ln() / w, n))
        .collect();
    keyed.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    keyed.into_iter().map(|(_, n)| n).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Conversion {
    pub cell: String,
    pub from: String,
    pub to: String,
    pub probability: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub threshold: f64,
    pub quota: f64,
    pub converted_area: f64,
    pub conversions: Vec<Conversion>,
    /// Target minus current area per category after the iteration.
    pub remaining: Vec<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SimulationTrace {
    pub categories: Vec<String>,
    pub records: Vec<IterationRecord>,
}

/// Everything a single iteration reads.
pub struct StepContext<'a> {
    pub landscape: &'a Landscape,
    pub po: &'a [Vec<f64>],
    pub mask: &'a [Vec<u8>],
    /// Forbidden (from, to) pairs, checked against each cell's current
    /// category since a cell may convert more than once in a run.
    pub forbidden: &'a [(CategoryId, CategoryId)],
    pub neighborhood: &'a Neighborhood,
    pub cfg: &'a SimConfig,
    pub targets: &'a [f64],
    pub slack: f64,
    /// Area to convert in this iteration.
    pub quota: f64,
}

/// One iteration on the assignment `state`, which is updated in place.
///
/// A cell of category `c` converts to `k` only if the gain stays within
/// `target[k] + slack` and the loss keeps `c` at or above `target[c] - slack`.
/// The second rule keeps shrinking categories from being overdrawn.
pub fn step(
    ctx: &StepContext,
    state: &mut [CategoryId],
    theta: f64,
    iteration: usize,
) -> IterationRecord {
    let ls = ctx.landscape;
    let cats = ls.categories();
    let k = cats.len();
    let areas = ls.areas();
    let mut current = crate::parcel::category_areas_of(state, &areas, k);
    let remaining: Vec<f64> = ctx
        .targets
        .iter()
        .zip(&current)
        .map(|(t, c)| t - c)
        .collect();
    let seed = ctx.cfg.seed;

    let snapshot: &[CategoryId] = state;
    let per_cell: Vec<Vec<(CategoryId, f64)>> = (0..ls.len())
        .into_par_iter()
        .map(|i| {
            let from = snapshot[i];
            let pr: Vec<u8> = (0..k)
                .map(|c| u8::from(ctx.mask[i][c] == 1 && !ctx.forbidden.contains(&(from, c))))
                .collect();
            if !(0..k).any(|c| c != from && remaining[c] > 0.0 && pr[c] == 1) {
                return Vec::new();
            }
            let mut r = stream(seed, &[rng::CELL, iteration as u64, i as u64]);
            let ra = random_factor(&mut r, ctx.cfg.alpha);
            let omega = ctx.neighborhood.effect(i, snapshot);
            let p = combined_probability(&ctx.po[i], &omega, &pr, ra);
            let mut eligible: Vec<(CategoryId, f64)> = (0..k)
                .filter(|&c| c != from && remaining[c] > 0.0 && p[c] >= theta && p[c] > 0.0)
                .map(|c| (c, p[c]))
                .collect();
            if !ctx.cfg.all_pairs {
                // Highest probability, smallest id on ties.
                let best = eligible
                    .iter()
                    .copied()
                    .reduce(|a, b| if b.1 > a.1 { b } else { a });
                eligible = best.into_iter().collect();
            }
            eligible
        })
        .collect();

    let pool: Vec<(usize, CategoryId, f64)> = per_cell
        .into_iter()
        .enumerate()
        .flat_map(|(i, v)| v.into_iter().map(move |(c, p)| (i, c, p)))
        .collect();
    let weights: Vec<f64> = pool.iter().map(|e| e.2).collect();
    let order = roulette_order(
        &weights,
        &mut stream(seed, &[rng::SELECT, iteration as u64]),
    );

    let mut converted = vec![false; ls.len()];
    let mut converted_area = 0.0;
    let mut conversions = Vec::new();
    for n in order {
        if converted_area >= ctx.quota {
            break;
        }
        let (i, to, p) = pool[n];
        if converted[i] {
            continue;
        }
        let from = state[i];
        let a = areas[i];
        let gain_ok = current[to] + a <= ctx.targets[to] + ctx.slack;
        let loss_ok = current[from] - a >= ctx.targets[from] - ctx.slack;
        if !(gain_ok && loss_ok) {
            continue;
        }
        state[i] = to;
        converted[i] = true;
        current[to] += a;
        current[from] -= a;
        converted_area += a;
        conversions.push(Conversion {
            cell: ls.parcels()[i].id().to_string(),
            from: cats.name(from).to_string(),
            to: cats.name(to).to_string(),
            probability: p,
        });
    }
    IterationRecord {
        iteration,
        threshold: theta,
        quota: ctx.quota,
        converted_area,
        conversions,
        remaining: ctx
            .targets
            .iter()
            .zip(&current)
            .map(|(t, c)| t - c)
            .collect(),
    }
}

#[derive(Clone, Debug)]
pub struct SimulationOutcome {
    pub landscape: Landscape,
    pub trace: SimulationTrace,
    /// Per-category deficit left above the slack; all zeros when demand was met.
    pub shortfall: Vec<f64>,
    pub warnings: Vec<String>,
    pub slack: f64,
}

impl SimulationOutcome {
    pub fn converged(&self) -> bool {
        self.shortfall.iter().all(|&s| s == 0.0)
    }
}

/// Runs the loop with model probabilities computed from `features`.
pub fn simulate(
    initial: &Landscape,
    model: &ProbabilityModel,
    features: &FeatureMatrix,
    cfg: &SimConfig,
    demand: &Demand,
    constraints: &ScenarioConstraints,
) -> Result<SimulationOutcome> {
    features.check_aligned(initial)?;
    if model.categories != initial.categories().names() {
        return Err(Error::InvalidConfig(format!(
            "model categories {:?} do not match landscape categories {:?}",
            model.categories,
            initial.categories().names()
        )));
    }
    let po = predict_po(model, features)?;
    simulate_with_po(initial, &po, cfg, demand, constraints)
}

/// Runs the loop with precomputed `Po` rows.
pub fn simulate_with_po(
    initial: &Landscape,
    po: &[Vec<f64>],
    cfg: &SimConfig,
    demand: &Demand,
    constraints: &ScenarioConstraints,
) -> Result<SimulationOutcome> {
    cfg.validate()?;
    demand.check(initial)?;
    let k = initial.categories().len();
    if po.len() != initial.len() {
        return Err(Error::LengthMismatch(format!(
            "{} probability rows for {} cells",
            po.len(),
            initial.len()
        )));
    }
    if let Some(bad) = po.iter().find(|r| r.len() != k) {
        return Err(Error::DimensionMismatch {
            expected: k,
            got: bad.len(),
        });
    }
    let mask = restriction_mask(initial, constraints)?;
    let neighborhood = Neighborhood::new(initial, cfg.neighborhood_radius, cfg.decay());
    let slack = cfg.demand_slack.unwrap_or_else(|| {
        if initial.is_empty() {
            0.0
        } else {
            initial.total_area() / initial.len() as f64
        }
    });
    let mut state = initial.category_of();
    let start = initial.category_areas();
    let n_total: f64 = demand
        .targets
        .iter()
        .zip(&start)
        .map(|(t, c)| (t - c).max(0.0))
        .sum();
    let quota = n_total / cfg.iterations as f64;
    let mut ctx = StepContext {
        landscape: initial,
        po,
        mask: &mask,
        forbidden: &constraints.forbidden,
        neighborhood: &neighborhood,
        cfg,
        targets: &demand.targets,
        slack,
        quota,
    };

    let mut trace = SimulationTrace {
        categories: initial.categories().names(),
        records: Vec::new(),
    };
    let mut theta = cfg.initial_threshold;
    let mut idle = 0;
    let met = |state: &[CategoryId]| {
        let cur = crate::parcel::category_areas_of(state, &initial.areas(), k);
        demand.targets.iter().zip(&cur).all(|(t, c)| t - c <= slack)
    };
    for it in 0..cfg.iterations {
        if met(&state) {
            break;
        }
        // Quota is N/M, raised when earlier iterations fell behind so the
        // remaining iterations can still meet demand.
        let cur = crate::parcel::category_areas_of(&state, &initial.areas(), k);
        let open: f64 = demand
            .targets
            .iter()
            .zip(&cur)
            .map(|(t, c)| (t - c).max(0.0))
            .sum();
        ctx.quota = quota.max(open / (cfg.iterations - it) as f64);
        let rec = step(&ctx, &mut state, theta, it);
        log::debug!(
            "iteration {it}: threshold {theta:.4}, converted {:.1} of {:.1} m²",
            rec.converted_area,
            rec.quota
        );
        if rec.converted_area < cfg.stall_fraction * rec.quota {
            idle += 1;
            if idle >= cfg.patience {
                theta = (theta * cfg.threshold_decay).max(1e-6);
                idle = 0;
            }
        } else {
            idle = 0;
        }
        trace.records.push(rec);
    }

    let cur = crate::parcel::category_areas_of(&state, &initial.areas(), k);
    let shortfall: Vec<f64> = demand
        .targets
        .iter()
        .zip(&cur)
        .map(|(t, c)| if t - c > slack { t - c } else { 0.0 })
        .collect();
    let mut warnings = Vec::new();
    for (c, &s) in shortfall.iter().enumerate() {
        if s > 0.0 {
            let w = format!(
                "demand for {} not met: {s:.1} m² short after {} iterations",
                initial.categories().name(c),
                trace.records.len()
            );
            log::warn!("{w}");
            warnings.push(w);
        }
    }
    Ok(SimulationOutcome {
        landscape: initial.with_assignment(&state)?,
        trace,
        shortfall,
        warnings,
        slack,
    })
}

/// Applies a trace's conversions to the initial landscape.
pub fn replay(initial: &Landscape, trace: &SimulationTrace) -> Result<Landscape> {
    let cats: &CategorySet = initial.categories();
    if trace.categories != cats.names() {
        return Err(Error::InvalidConfig(
            "trace categories do not match the landscape".into(),
        ));
    }
    let index = initial.index_of();
    let mut state = initial.category_of();
    for rec in &trace.records {
        for cv in &rec.conversions {
            let &i = index.get(cv.cell.as_str()).ok_or_else(|| {
                Error::InvalidLandscape(format!("trace names unknown cell {:?}", cv.cell))
            })?;
            let from = cats.resolve(&cv.from)?;
            if state[i] != from {
                return Err(Error::InvalidLandscape(format!(
                    "trace expects cell {:?} to be {} in iteration {}",
                    cv.cell, cv.from, rec.iteration
                )));
            }
            state[i] = cats.resolve(&cv.to)?;
        }
    }
    initial.with_assignment(&state)
}

pub fn default_radii() -> Vec<f64> {
    (1..=10).map(|i| f64::from(i) * 100.0).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub radius: f64,
    pub fom: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
    /// Radius with the highest FoM; the smallest such radius on ties.
    pub best_radius: Option<f64>,
}

/// One simulation per radius, scored with area-weighted FoM against `actual`.
#[allow(clippy::too_many_arguments)]
pub fn sweep_radius(
    initial: &Landscape,
    model: &ProbabilityModel,
    features: &FeatureMatrix,
    cfg: &SimConfig,
    demand: &Demand,
    constraints: &ScenarioConstraints,
    actual: &Landscape,
    radii: &[f64],
) -> Result<SweepTable> {
    features.check_aligned(initial)?;
    let po = predict_po(model, features)?;
    sweep_radius_with_po(initial, &po, cfg, demand, constraints, actual, radii)
}

pub fn sweep_radius_with_po(
    initial: &Landscape,
    po: &[Vec<f64>],
    cfg: &SimConfig,
    demand: &Demand,
    constraints: &ScenarioConstraints,
    actual: &Landscape,
    radii: &[f64],
) -> Result<SweepTable> {
    let mut radii = radii.to_vec();
    radii.sort_by(f64::total_cmp);
    let mut rows = Vec::with_capacity(radii.len());
    for r in radii {
        let c = SimConfig {
            neighborhood_radius: r,
            ..cfg.clone()
        };
        let out = simulate_with_po(initial, po, &c, demand, constraints)?;
        let report = assess(initial, &out.landscape, actual, WeightMode::Area)?;
        log::info!("radius {r}: FoM {:.4}", report.fom);
        rows.push(SweepRow {
            radius: r,
            fom: report.fom,
        });
    }
    let best_radius = rows
        .iter()
        .fold(None::<&SweepRow>, |b, r| match b {
            Some(b) if b.fom >= r.fom => Some(b),
            _ => Some(r),
        })
        .map(|r| r.radius);
    Ok(SweepTable { rows, best_radius })
}
