use serde::{Deserialize, Serialize};

use super::{softmax_in_place, ModelKind, ProbabilityModel, TrainingSet};
use crate::error::Result;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LogisticHyper {
    pub learning_rate: f64,
    pub l2: f64,
    pub epochs: usize,
    /// Stop once the largest gradient component falls below this.
    pub tolerance: f64,
}

impl Default for LogisticHyper {
    fn default() -> Self {
        LogisticHyper {
            learning_rate: 0.5,
            l2: 1e-4,
            epochs: 3000,
            tolerance: 1e-7,
        }
    }
}

/// Multinomial logistic regression: one weight row per category, intercept last.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Logistic {
    pub weights: Vec<Vec<f64>>,
    pub epochs_run: usize,
}

impl Logistic {
    pub fn zeros(k: usize, p: usize) -> Self {
        Logistic {
            weights: vec![vec![0.0; p + 1]; k],
            epochs_run: 0,
        }
    }

    pub fn predict(&self, x: &[f64]) -> Vec<f64> {
        let mut z: Vec<f64> = self
            .weights
            .iter()
            .map(|w| {
                let (b, ws) = w.split_last().unwrap();
                ws.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + b
            })
            .collect();
        softmax_in_place(&mut z);
        z
    }
}

/// Full-batch gradient descent on mean cross-entropy plus an L2 penalty on
/// the non-intercept weights. Weights start at zero, so the fit is fully
/// determined by the data and hyperparameters.
pub fn train_lr(ts: &TrainingSet, hyper: &LogisticHyper) -> Result<ProbabilityModel> {
    ts.check_trainable()?;
    let (k, p) = (ts.k(), ts.x.ncols());
    let mut model = Logistic::zeros(k, p);
    let n = ts.train.len() as f64;
    let mut grad = vec![vec![0.0; p + 1]; k];
    for epoch in 0..hyper.epochs {
        for g in grad.iter_mut() {
            g.iter_mut().for_each(|v| *v = 0.0);
        }
        for &i in &ts.train {
            let x = ts.x.row(i);
            let prob = model.predict(x);
            for c in 0..k {
                let err = prob[c] - f64::from(u8::from(ts.y[i] == c));
                for j in 0..p {
                    grad[c][j] += err * x[j];
                }
                grad[c][p] += err;
            }
        }
        let mut max_g: f64 = 0.0;
        for c in 0..k {
            for j in 0..=p {
                let mut g = grad[c][j] / n;
                if j < p {
                    g += hyper.l2 * model.weights[c][j];
                }
                max_g = max_g.max(g.abs());
                model.weights[c][j] -= hyper.learning_rate * g;
            }
        }
        model.epochs_run = epoch + 1;
        if max_g < hyper.tolerance {
            break;
        }
    }
    Ok(ProbabilityModel::new(
        ts,
        ModelKind::Lr {
            hyperparameters: hyper.clone(),
            parameters: model,
        },
    ))
}
