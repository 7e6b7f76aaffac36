use rand::seq::{index, SliceRandom};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{argmax, ModelKind, ProbabilityModel, TrainingSet};
use crate::error::{Error, Result};
use crate::rng::{self, stream};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ForestHyper {
    pub trees: usize,
    /// Fraction of the training rows each tree sees.
    pub sample_fraction: f64,
    /// Draw each tree's rows with replacement instead of without.
    pub bootstrap: bool,
    pub max_depth: Option<usize>,
    pub min_leaf: usize,
    /// Features tried per split; `None` means `ceil(sqrt(p))`.
    pub max_features: Option<usize>,
}

impl Default for ForestHyper {
    fn default() -> Self {
        ForestHyper {
            trees: 80,
            sample_fraction: 0.7,
            bootstrap: false,
            max_depth: None,
            min_leaf: 1,
            max_features: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Node {
    Leaf {
        probs: Vec<f64>,
    },
    /// Rows with `x[feature] <= threshold` go to `left`.
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn predict(&self, x: &[f64]) -> &[f64] {
        let mut at = 0;
        loop {
            match &self.nodes[at] {
                Node::Leaf { probs } => return probs,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    at = if x[*feature] <= *threshold {
                        *left
                    } else {
                        *right
                    }
                }
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Forest {
    pub trees: Vec<Tree>,
}

impl Forest {
    /// Mean of the leaf class frequencies over all trees.
    pub fn predict(&self, x: &[f64]) -> Vec<f64> {
        let mut out: Vec<f64> = Vec::new();
        for t in &self.trees {
            let p = t.predict(x);
            if out.is_empty() {
                out = vec![0.0; p.len()];
            }
            out.iter_mut().zip(p).for_each(|(o, v)| *o += v);
        }
        let n = self.trees.len() as f64;
        out.iter_mut().for_each(|v| *v /= n);
        out
    }
}

fn gini(counts: &[f64], n: f64) -> f64 {
    1.0 - counts.iter().map(|c| (c / n) * (c / n)).sum::<f64>()
}

struct Builder<'a> {
    ts: &'a TrainingSet,
    hyper: &'a ForestHyper,
    mtry: usize,
    nodes: Vec<Node>,
}

impl Builder<'_> {
    fn leaf(&self, rows: &[usize]) -> Node {
        let mut probs = vec![0.0; self.ts.k()];
        for &i in rows {
            probs[self.ts.y[i]] += 1.0;
        }
        let n = rows.len() as f64;
        probs.iter_mut().for_each(|v| *v /= n);
        Node::Leaf { probs }
    }

    /// Lowest weighted Gini split on `feature`, as (impurity, threshold).
    fn best_on(&self, rows: &mut [usize], feature: usize) -> Option<(f64, f64)> {
        let x = &self.ts.x;
        rows.sort_by(|&a, &b| {
            x.row(a)[feature]
                .total_cmp(&x.row(b)[feature])
                .then(a.cmp(&b))
        });
        let k = self.ts.k();
        let n = rows.len();
        let mut right = vec![0.0; k];
        for &i in rows.iter() {
            right[self.ts.y[i]] += 1.0;
        }
        let mut left = vec![0.0; k];
        let min_leaf = self.hyper.min_leaf.max(1);
        let mut best: Option<(f64, f64)> = None;
        for pos in 0..n - 1 {
            let c = self.ts.y[rows[pos]];
            left[c] += 1.0;
            right[c] -= 1.0;
            let (a, b) = (x.row(rows[pos])[feature], x.row(rows[pos + 1])[feature]);
            let nl = pos + 1;
            if a == b || nl < min_leaf || n - nl < min_leaf {
                continue;
            }
            let (fl, fr) = (nl as f64, (n - nl) as f64);
            let imp = (fl * gini(&left, fl) + fr * gini(&right, fr)) / n as f64;
            if best.map_or(true, |(bi, _)| imp < bi) {
                best = Some((imp, a + (b - a) / 2.0));
            }
        }
        best
    }

    fn grow(&mut self, rows: &mut [usize], depth: usize, r: &mut impl Rng) -> usize {
        let id = self.nodes.len();
        self.nodes.push(Node::Leaf { probs: Vec::new() });
        let first = self.ts.y[rows[0]];
        let pure = rows.iter().all(|&i| self.ts.y[i] == first);
        let depth_ok = self.hyper.max_depth.map_or(true, |d| depth < d);
        if pure || !depth_ok || rows.len() < 2 * self.hyper.min_leaf.max(1) {
            self.nodes[id] = self.leaf(rows);
            return id;
        }
        let p = self.ts.x.ncols();
        let mut order: Vec<usize> = (0..p).collect();
        order.shuffle(r);
        let mut best: Option<(f64, usize, f64)> = None;
        // Try the sampled features first; only fall back to the rest when none
        // of them admits a split.
        for (tried, &f) in order.iter().enumerate() {
            if tried >= self.mtry && best.is_some() {
                break;
            }
            if let Some((imp, thr)) = self.best_on(rows, f) {
                if best.map_or(true, |(bi, _, _)| imp < bi) {
                    best = Some((imp, f, thr));
                }
            }
        }
        let Some((_, feature, threshold)) = best else {
            self.nodes[id] = self.leaf(rows);
            return id;
        };
        let x = &self.ts.x;
        rows.sort_by_key(|&i| x.row(i)[feature] > threshold);
        let split = rows.partition_point(|&i| x.row(i)[feature] <= threshold);
        let (l, rr) = rows.split_at_mut(split);
        let left = self.grow(l, depth + 1, r);
        let right = self.grow(rr, depth + 1, r);
        self.nodes[id] = Node::Split {
            feature,
            threshold,
            left,
            right,
        };
        id
    }
}

/// Random forest of Gini CART trees. Each tree draws its own rows and split
/// features from a stream keyed by its index, so the result does not depend
/// on how trees are scheduled across threads.
pub fn train_rf(ts: &TrainingSet, hyper: &ForestHyper) -> Result<ProbabilityModel> {
    ts.check_trainable()?;
    if hyper.trees == 0 {
        return Err(Error::InvalidConfig(
            "forest needs at least one tree".into(),
        ));
    }
    if !(hyper.sample_fraction > 0.0 && hyper.sample_fraction <= 1.0) {
        return Err(Error::InvalidConfig(format!(
            "sample fraction {} outside (0, 1]",
            hyper.sample_fraction
        )));
    }
    let p = ts.x.ncols();
    let mtry = hyper
        .max_features
        .unwrap_or_else(|| (p as f64).sqrt().ceil() as usize)
        .clamp(1, p.max(1));
    let n = ts.train.len();
    let n_sample = ((hyper.sample_fraction * n as f64).round() as usize).max(1);

    let grown: Vec<(Tree, Vec<bool>)> = (0..hyper.trees)
        .into_par_iter()
        .map(|t| {
            let mut r = stream(ts.seed, &[rng::TREE, t as u64]);
            let mut in_bag = vec![false; n];
            let mut rows: Vec<usize> = if hyper.bootstrap {
                (0..n_sample).map(|_| r.gen_range(0..n)).collect()
            } else {
                index::sample(&mut r, n, n_sample).into_vec()
            };
            for &i in &rows {
                in_bag[i] = true;
            }
            rows.sort_unstable();
            rows.iter_mut().for_each(|i| *i = ts.train[*i]);
            let mut b = Builder {
                ts,
                hyper,
                mtry,
                nodes: Vec::new(),
            };
            b.grow(&mut rows, 0, &mut r);
            (Tree { nodes: b.nodes }, in_bag)
        })
        .collect();

    let mut votes: Vec<Vec<f64>> = vec![Vec::new(); n];
    for (tree, in_bag) in &grown {
        for (pos, &i) in ts.train.iter().enumerate() {
            if in_bag[pos] {
                continue;
            }
            let pr = tree.predict(ts.x.row(i));
            let v = &mut votes[pos];
            if v.is_empty() {
                *v = vec![0.0; pr.len()];
            }
            v.iter_mut().zip(pr).for_each(|(a, b)| *a += b);
        }
    }
    let scored: Vec<bool> = votes
        .iter()
        .zip(&ts.train)
        .filter(|(v, _)| !v.is_empty())
        .map(|(v, &i)| argmax(v) == ts.y[i])
        .collect();
    let oob_accuracy = (!scored.is_empty())
        .then(|| scored.iter().filter(|&&h| h).count() as f64 / scored.len() as f64);

    Ok(ProbabilityModel::new(
        ts,
        ModelKind::Rf {
            hyperparameters: hyper.clone(),
            parameters: Forest {
                trees: grown.into_iter().map(|g| g.0).collect(),
            },
            oob_accuracy,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::super::fixtures::{separable, xor};
    use super::*;

    #[test]
    fn learns_xor() {
        let ts = xor(1000, 8);
        let m = train_rf(&ts, &ForestHyper::default()).unwrap();
        assert!(
            m.holdout_accuracy.unwrap() >= 0.95,
            "{:?}",
            m.holdout_accuracy
        );
    }

    #[test]
    fn pure_region_has_probability_one() {
        let ts = separable(400, 2);
        let m = train_rf(&ts, &ForestHyper::default()).unwrap();
        let ModelKind::Rf { parameters, .. } = &m.kind else {
            unreachable!()
        };
        assert_eq!(parameters.predict(&[0.95]), vec![0.0, 1.0]);
        assert_eq!(parameters.predict(&[0.05]), vec![1.0, 0.0]);
    }

    #[test]
    fn deterministic_under_seed() {
        let ts = xor(300, 4);
        let h = ForestHyper {
            trees: 10,
            ..Default::default()
        };
        assert_eq!(train_rf(&ts, &h).unwrap(), train_rf(&ts, &h).unwrap());
        let other = TrainingSet {
            seed: 5,
            ..ts.clone()
        };
        assert_ne!(
            train_rf(&ts, &h).unwrap().kind,
            train_rf(&other, &h).unwrap().kind
        );
    }

    #[test]
    fn oob_tracks_holdout() {
        let ts = xor(2000, 11);
        let m = train_rf(&ts, &ForestHyper::default()).unwrap();
        let ModelKind::Rf { oob_accuracy, .. } = m.kind else {
            unreachable!()
        };
        let oob = oob_accuracy.unwrap();
        assert!(
            (oob - m.holdout_accuracy.unwrap()).abs() <= 0.1,
            "{oob} vs {:?}",
            m.holdout_accuracy
        );
    }

    #[test]
    fn bootstrap_and_depth_limit() {
        let ts = xor(300, 6);
        let h = ForestHyper {
            trees: 5,
            bootstrap: true,
            max_depth: Some(1),
            ..Default::default()
        };
        let m = train_rf(&ts, &h).unwrap();
        let ModelKind::Rf { parameters, .. } = &m.kind else {
            unreachable!()
        };
        assert!(parameters.trees.iter().all(|t| t.nodes.len() <= 3));
    }
}
