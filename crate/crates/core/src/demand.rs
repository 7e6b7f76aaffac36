//! Markov-chain projection of per-category land demand.

use serde::{Deserialize, Serialize};

use crate::assess::label_overlay;
use crate::error::{Error, Result};
use crate::parcel::{CategoryId, Landscape};

/// Area-weighted transition table: `areas[a][b]` is the area that was `a` at
/// the start of the period and `b` at the end.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrossTab {
    pub categories: Vec<String>,
    pub areas: Vec<Vec<f64>>,
    pub period_years: f64,
}

impl CrossTab {
    pub fn from_labels(
        categories: Vec<String>,
        from: &[CategoryId],
        to: &[CategoryId],
        areas: &[f64],
        period_years: f64,
    ) -> Result<Self> {
        if from.len() != to.len() || from.len() != areas.len() {
            return Err(Error::LengthMismatch(format!(
                "{} t0 labels, {} t1 labels, {} areas",
                from.len(),
                to.len(),
                areas.len()
            )));
        }
        let k = categories.len();
        let mut m = vec![vec![0.0; k]; k];
        for ((&a, &b), &w) in from.iter().zip(to).zip(areas) {
            m[a][b] += w;
        }
        Ok(CrossTab {
            categories,
            areas: m,
            period_years,
        })
    }

    pub fn total(&self) -> f64 {
        self.areas.iter().flatten().sum()
    }

    /// Areas at the start of the period (row sums).
    pub fn start_areas(&self) -> Vec<f64> {
        self.areas.iter().map(|r| r.iter().sum()).collect()
    }

    /// Areas at the end of the period (column sums).
    pub fn end_areas(&self) -> Vec<f64> {
        let k = self.categories.len();
        (0..k)
            .map(|b| self.areas.iter().map(|r| r[b]).sum())
            .collect()
    }
}

/// Cross-tabulates two observed maps on a shared cell lattice.
pub fn crosstab(
    t0: &Landscape,
    t1: &Landscape,
    cells: &Landscape,
    period_years: f64,
) -> Result<CrossTab> {
    let from = label_overlay(cells, t0)?;
    let to = label_overlay(cells, t1)?;
    CrossTab::from_labels(
        cells.categories().names(),
        &from,
        &to,
        &cells.areas(),
        period_years,
    )
}

/// Row-stochastic transition matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransitionMatrix {
    pub rows: Vec<Vec<f64>>,
}

impl TransitionMatrix {
    pub fn identity(k: usize) -> Self {
        TransitionMatrix {
            rows: (0..k)
                .map(|i| (0..k).map(|j| f64::from(u8::from(i == j))).collect())
                .collect(),
        }
    }

    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let k = rows.len();
        for (i, r) in rows.iter().enumerate() {
            if r.len() != k {
                return Err(Error::InvalidConfig(format!(
                    "row {i} has {} entries, expected {k}",
                    r.len()
                )));
            }
            if r.iter().any(|&v| !(0.0..=1.0).contains(&v)) {
                return Err(Error::InvalidConfig(format!(
                    "row {i} has an entry outside [0, 1]"
                )));
            }
            let s: f64 = r.iter().sum();
            if (s - 1.0).abs() > 1e-9 {
                return Err(Error::InvalidConfig(format!("row {i} sums to {s}")));
            }
        }
        Ok(TransitionMatrix { rows })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

/// Conditional transition probabilities; a row with no start area becomes an
/// identity row.
pub fn to_conditional(ct: &CrossTab) -> TransitionMatrix {
    let rows = ct
        .areas
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let s: f64 = r.iter().sum();
            if s > 0.0 {
                r.iter().map(|v| v / s).collect()
            } else {
                (0..r.len()).map(|j| f64::from(u8::from(i == j))).collect()
            }
        })
        .collect();
    TransitionMatrix { rows }
}

/// Where probability mass of a forbidden transition goes.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Redistribution {
    /// The parcel stays what it was.
    #[default]
    Persist,
    /// Spread over the row's remaining allowed entries in proportion to them.
    Proportional,
}

/// Zeroes forbidden transitions and reassigns their mass within the row.
pub fn constrain(
    tm: &TransitionMatrix,
    forbidden: &[(CategoryId, CategoryId)],
    how: Redistribution,
) -> Result<TransitionMatrix> {
    let k = tm.len();
    let mut banned = vec![vec![false; k]; k];
    for &(a, b) in forbidden {
        if a >= k || b >= k {
            return Err(Error::InvalidConfig(format!(
                "forbidden pair ({a}, {b}) out of range"
            )));
        }
        if a == b {
            return Err(Error::InvalidConfig(format!(
                "cannot forbid persistence of category {a}"
            )));
        }
        banned[a][b] = true;
    }
    let rows = tm
        .rows
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let moved: f64 = (0..k).filter(|&j| banned[i][j]).map(|j| r[j]).sum();
            let mut out: Vec<f64> = (0..k)
                .map(|j| if banned[i][j] { 0.0 } else { r[j] })
                .collect();
            if moved > 0.0 {
                let kept: f64 = out.iter().sum();
                match how {
                    Redistribution::Proportional if kept > 0.0 => {
                        for v in &mut out {
                            *v += moved * *v / kept;
                        }
                    }
                    _ => out[i] += moved,
                }
            }
            out
        })
        .collect();
    Ok(TransitionMatrix { rows })
}

/// `shares * tm^steps`.
pub fn project(shares: &[f64], tm: &TransitionMatrix, steps: u32) -> Result<Vec<f64>> {
    let k = tm.len();
    if shares.len() != k {
        return Err(Error::LengthMismatch(format!(
            "{} shares for {k} categories",
            shares.len()
        )));
    }
    let s: f64 = shares.iter().sum();
    if (s - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidConfig(format!(
            "shares sum to {s}, expected 1"
        )));
    }
    let mut v = shares.to_vec();
    for _ in 0..steps {
        let mut next = vec![0.0; k];
        for (i, &vi) in v.iter().enumerate() {
            for (j, n) in next.iter_mut().enumerate() {
                *n += vi * tm.rows[i][j];
            }
        }
        v = next;
    }
    Ok(v)
}

/// Number of transition periods between two years.
pub fn horizon_steps(base_year: f64, target_year: f64, period_years: f64) -> Result<u32> {
    if !(period_years > 0.0) || target_year < base_year {
        return Err(Error::InvalidConfig(format!(
            "cannot step from {base_year} to {target_year} in periods of {period_years}"
        )));
    }
    Ok(((target_year - base_year) / period_years).round() as u32)
}

/// Per-category target areas.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Demand {
    pub categories: Vec<String>,
    pub targets: Vec<f64>,
}

impl Demand {
    pub fn total(&self) -> f64 {
        self.targets.iter().sum()
    }

    /// Checks the demand against a landscape's categories and total area.
    pub fn check(&self, ls: &Landscape) -> Result<()> {
        if self.categories != ls.categories().names() {
            return Err(Error::InvalidConfig(format!(
                "demand categories {:?} do not match landscape categories {:?}",
                self.categories,
                ls.categories().names()
            )));
        }
        if self.targets.iter().any(|t| !(*t >= 0.0)) {
            return Err(Error::InvalidConfig(
                "demand targets must be non-negative".into(),
            ));
        }
        let (t, a) = (self.total(), ls.total_area());
        if (t - a).abs() > 1e-6 * a.max(f64::MIN_POSITIVE) {
            return Err(Error::InvalidConfig(format!(
                "demand totals {t} m² but the landscape covers {a} m²"
            )));
        }
        Ok(())
    }
}

pub fn to_demand(categories: Vec<String>, shares: &[f64], total_area: f64) -> Demand {
    Demand {
        categories,
        targets: shares.iter().map(|s| s * total_area).collect(),
    }
}
