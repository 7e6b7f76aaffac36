//! Transition-rule mining: models mapping a feature vector to a probability
//! over land-use categories.

mod forest;
mod logistic;
mod mlp;

pub use forest::{train_rf, Forest, ForestHyper};
pub use logistic::{train_lr, Logistic, LogisticHyper};
pub use mlp::{train_mlp, MlpHyper, MlpModel, Network};

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::assess::label_overlay;
use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::parcel::{CategoryId, Landscape};
use crate::rng::{self, stream};

/// Labelled rows with a reproducible train/holdout split.
#[derive(Clone, Debug)]
pub struct TrainingSet {
    pub x: FeatureMatrix,
    pub y: Vec<CategoryId>,
    pub categories: Vec<String>,
    pub train: Vec<usize>,
    pub holdout: Vec<usize>,
    pub seed: u64,
}

impl TrainingSet {
    /// Splits `round(train_fraction * n)` rows into training, the rest into holdout.
    pub fn new(
        x: FeatureMatrix,
        y: Vec<CategoryId>,
        categories: Vec<String>,
        train_fraction: f64,
        seed: u64,
    ) -> Result<Self> {
        if x.nrows() != y.len() {
            return Err(Error::LengthMismatch(format!(
                "{} rows but {} labels",
                x.nrows(),
                y.len()
            )));
        }
        if !(0.0..=1.0).contains(&train_fraction) {
            return Err(Error::InvalidConfig(format!(
                "train fraction {train_fraction} outside [0, 1]"
            )));
        }
        if let Some(&bad) = y.iter().find(|&&c| c >= categories.len()) {
            return Err(Error::Training(format!("label {bad} out of range")));
        }
        let n = y.len();
        let n_train = (train_fraction * n as f64).round() as usize;
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut stream(seed, &[rng::SPLIT]));
        let mut train = order[..n_train].to_vec();
        let mut holdout = order[n_train..].to_vec();
        train.sort_unstable();
        holdout.sort_unstable();
        Ok(TrainingSet {
            x,
            y,
            categories,
            train,
            holdout,
            seed,
        })
    }

    /// Undersamples the training rows so every present class has the count of
    /// the rarest one.
    pub fn balanced(mut self) -> Self {
        let k = self.categories.len();
        let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); k];
        for &i in &self.train {
            by_class[self.y[i]].push(i);
        }
        let Some(min) = by_class.iter().map(Vec::len).filter(|&l| l > 0).min() else {
            return self;
        };
        let mut r = stream(self.seed, &[rng::BALANCE]);
        let mut train: Vec<usize> = by_class
            .into_iter()
            .flat_map(|mut v| {
                v.shuffle(&mut r);
                v.truncate(min);
                v
            })
            .collect();
        train.sort_unstable();
        self.train = train;
        self
    }

    pub fn k(&self) -> usize {
        self.categories.len()
    }

    pub(crate) fn check_trainable(&self) -> Result<()> {
        let mut seen = vec![false; self.k()];
        for &i in &self.train {
            seen[self.y[i]] = true;
        }
        if seen.iter().filter(|&&s| s).count() < 2 {
            return Err(Error::Training(
                "training labels contain fewer than two categories".into(),
            ));
        }
        Ok(())
    }
}

/// Labels each t0 cell with its t1 category and splits the rows.
pub fn build_training_set(
    features: &FeatureMatrix,
    cells_t0: &Landscape,
    actual_t1: &Landscape,
    train_fraction: f64,
    seed: u64,
) -> Result<TrainingSet> {
    features.check_aligned(cells_t0)?;
    let y = label_overlay(cells_t0, actual_t1)?;
    TrainingSet::new(
        features.clone(),
        y,
        cells_t0.categories().names(),
        train_fraction,
        seed,
    )
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ModelKind {
    Lr {
        hyperparameters: LogisticHyper,
        parameters: Logistic,
    },
    Mlp {
        hyperparameters: MlpHyper,
        parameters: MlpModel,
    },
    Rf {
        hyperparameters: ForestHyper,
        parameters: Forest,
        oob_accuracy: Option<f64>,
    },
}

/// A trained model plus the metadata needed to use and reproduce it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbabilityModel {
    pub format_version: u32,
    pub categories: Vec<String>,
    pub feature_names: Vec<String>,
    pub seed: u64,
    pub holdout_accuracy: Option<f64>,
    #[serde(flatten)]
    pub kind: ModelKind,
}

impl ProbabilityModel {
    pub(crate) fn new(ts: &TrainingSet, kind: ModelKind) -> Self {
        let mut m = ProbabilityModel {
            format_version: crate::io::FORMAT_VERSION,
            categories: ts.categories.clone(),
            feature_names: ts.x.names.clone(),
            seed: ts.seed,
            holdout_accuracy: None,
            kind,
        };
        if !ts.holdout.is_empty() {
            m.holdout_accuracy = Some(accuracy(&m, &ts.x, &ts.y, &ts.holdout));
        }
        m
    }

    pub fn kind_name(&self) -> &'static str {
        match self.kind {
            ModelKind::Lr { .. } => "lr",
            ModelKind::Mlp { .. } => "mlp",
            ModelKind::Rf { .. } => "rf",
        }
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    fn predict_row(&self, x: &[f64]) -> Vec<f64> {
        match &self.kind {
            ModelKind::Lr { parameters, .. } => parameters.predict(x),
            ModelKind::Mlp { parameters, .. } => parameters.predict(x),
            ModelKind::Rf { parameters, .. } => parameters.predict(x),
        }
    }
}

/// Overall development probability for every row: an `n x K` matrix whose rows
/// are probability vectors.
pub fn predict_po(m: &ProbabilityModel, x: &FeatureMatrix) -> Result<Vec<Vec<f64>>> {
    use rayon::prelude::*;
    if x.ncols() != m.n_features() {
        return Err(Error::DimensionMismatch {
            expected: m.n_features(),
            got: x.ncols(),
        });
    }
    Ok((0..x.nrows())
        .into_par_iter()
        .map(|i| m.predict_row(x.row(i)))
        .collect())
}

pub(crate) fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &p) in v.iter().enumerate() {
        if p > v[best] {
            best = i;
        }
    }
    best
}

/// Fraction of `rows` whose most probable category matches the label.
pub fn accuracy(m: &ProbabilityModel, x: &FeatureMatrix, y: &[CategoryId], rows: &[usize]) -> f64 {
    if rows.is_empty() {
        return 0.0;
    }
    let hits = rows
        .iter()
        .filter(|&&i| argmax(&m.predict_row(x.row(i))) == y[i])
        .count();
    hits as f64 / rows.len() as f64
}

pub(crate) fn softmax_in_place(z: &mut [f64]) {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut s = 0.0;
    for v in z.iter_mut() {
        *v = (*v - max).exp();
        s += *v;
    }
    for v in z.iter_mut() {
        *v /= s;
    }
}
