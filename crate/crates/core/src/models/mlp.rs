use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{softmax_in_place, ModelKind, ProbabilityModel, TrainingSet};
use crate::error::{Error, Result};
use crate::rng::{self, stream};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MlpHyper {
    pub hidden_layers: usize,
    /// Candidate hidden widths; empty means twice the input dimension.
    pub hidden_widths: Vec<usize>,
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub folds: usize,
    pub l2: f64,
}

impl Default for MlpHyper {
    fn default() -> Self {
        MlpHyper {
            hidden_layers: 3,
            hidden_widths: Vec::new(),
            epochs: 300,
            learning_rate: 0.01,
            batch_size: 32,
            folds: 10,
            l2: 0.0,
        }
    }
}

/// Fully connected network with tanh hidden layers and a softmax output.
/// Parameters are stored flat, layer by layer: weights (row-major, out x in)
/// then biases.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Network {
    pub sizes: Vec<usize>,
    pub params: Vec<f64>,
}

impl Network {
    pub fn n_params(sizes: &[usize]) -> usize {
        sizes.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
    }

    /// Glorot-uniform weights, zero biases.
    pub fn init(sizes: Vec<usize>, rng: &mut impl Rng) -> Self {
        let mut params = Vec::with_capacity(Network::n_params(&sizes));
        for w in sizes.windows(2) {
            let limit = (6.0 / (w[0] + w[1]) as f64).sqrt();
            params.extend((0..w[0] * w[1]).map(|_| rng.gen_range(-limit..limit)));
            params.extend(std::iter::repeat(0.0).take(w[1]));
        }
        Network { sizes, params }
    }

    fn layers(&self) -> impl Iterator<Item = (usize, usize, usize)> + '_ {
        let mut off = 0;
        self.sizes.windows(2).map(move |w| {
            let start = off;
            off += w[0] * w[1] + w[1];
            (start, w[0], w[1])
        })
    }

    /// Activations of every layer; the last is the softmax output.
    fn forward(&self, x: &[f64]) -> Vec<Vec<f64>> {
        let n_layers = self.sizes.len() - 1;
        let mut acts = Vec::with_capacity(n_layers + 1);
        acts.push(x.to_vec());
        for (li, (off, nin, nout)) in self.layers().enumerate() {
            let input = &acts[li];
            let (w, b) = self.params[off..off + nin * nout + nout].split_at(nin * nout);
            let mut z: Vec<f64> = (0..nout)
                .map(|o| {
                    w[o * nin..(o + 1) * nin]
                        .iter()
                        .zip(input)
                        .map(|(a, b)| a * b)
                        .sum::<f64>()
                        + b[o]
                })
                .collect();
            if li + 1 == n_layers {
                softmax_in_place(&mut z);
            } else {
                z.iter_mut().for_each(|v| *v = v.tanh());
            }
            acts.push(z);
        }
        acts
    }

    pub fn predict(&self, x: &[f64]) -> Vec<f64> {
        self.forward(x).pop().unwrap()
    }

    /// Mean cross-entropy over the batch plus `l2 / 2 * |W|²`, and its gradient
    /// by backpropagation.
    pub fn loss_and_grad(&self, xs: &[&[f64]], ys: &[usize], l2: f64) -> (f64, Vec<f64>) {
        let mut grad = vec![0.0; self.params.len()];
        let mut loss = 0.0;
        let inv_n = 1.0 / xs.len() as f64;
        let layers: Vec<(usize, usize, usize)> = self.layers().collect();
        for (x, &y) in xs.iter().zip(ys) {
            let acts = self.forward(x);
            let out = acts.last().unwrap();
            loss -= out[y].max(f64::MIN_POSITIVE).ln() * inv_n;
            let mut delta: Vec<f64> = out
                .iter()
                .enumerate()
                .map(|(c, &p)| (p - f64::from(u8::from(c == y))) * inv_n)
                .collect();
            for li in (0..layers.len()).rev() {
                let (off, nin, nout) = layers[li];
                let input = &acts[li];
                for o in 0..nout {
                    let row = off + o * nin;
                    for i in 0..nin {
                        grad[row + i] += delta[o] * input[i];
                    }
                    grad[off + nin * nout + o] += delta[o];
                }
                if li > 0 {
                    let w = &self.params[off..off + nin * nout];
                    delta = (0..nin)
                        .map(|i| {
                            let s: f64 = (0..nout).map(|o| w[o * nin + i] * delta[o]).sum();
                            s * (1.0 - input[i] * input[i])
                        })
                        .collect();
                }
            }
        }
        if l2 > 0.0 {
            for &(off, nin, nout) in &layers {
                for j in off..off + nin * nout {
                    loss += 0.5 * l2 * self.params[j] * self.params[j];
                    grad[j] += l2 * self.params[j];
                }
            }
        }
        (loss, grad)
    }

    fn mean_loss(&self, xs: &[&[f64]], ys: &[usize]) -> f64 {
        let s: f64 = xs
            .iter()
            .zip(ys)
            .map(|(x, &y)| -self.predict(x)[y].max(f64::MIN_POSITIVE).ln())
            .sum();
        s / xs.len() as f64
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MlpModel {
    pub network: Network,
    pub selected_width: usize,
    pub selected_epochs: usize,
    /// Mean validation cross-entropy of the selected candidate.
    pub cv_loss: Option<f64>,
}

impl MlpModel {
    pub fn predict(&self, x: &[f64]) -> Vec<f64> {
        self.network.predict(x)
    }
}

struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    fn new(n: usize) -> Self {
        Adam {
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
        }
    }

    fn step(&mut self, params: &mut [f64], grad: &[f64], lr: f64) {
        const B1: f64 = 0.9;
        const B2: f64 = 0.999;
        self.t += 1;
        let c1 = 1.0 - B1.powi(self.t);
        let c2 = 1.0 - B2.powi(self.t);
        for j in 0..params.len() {
            self.m[j] = B1 * self.m[j] + (1.0 - B1) * grad[j];
            self.v[j] = B2 * self.v[j] + (1.0 - B2) * grad[j] * grad[j];
            params[j] -= lr * (self.m[j] / c1) / ((self.v[j] / c2).sqrt() + 1e-8);
        }
    }
}

/// Mini-batch Adam. Returns validation losses after each `eval_every` epochs
/// (and the last epoch) when `validation` is non-empty.
#[allow(clippy::too_many_arguments)]
fn fit(
    net: &mut Network,
    ts: &TrainingSet,
    rows: &[usize],
    validation: &[usize],
    epochs: usize,
    eval_every: usize,
    hyper: &MlpHyper,
    shuffle_key: u64,
) -> Vec<(usize, f64)> {
    let mut adam = Adam::new(net.params.len());
    let mut order = rows.to_vec();
    let mut r = stream(ts.seed, &[rng::MLP_SHUFFLE, shuffle_key]);
    let vx: Vec<&[f64]> = validation.iter().map(|&i| ts.x.row(i)).collect();
    let vy: Vec<usize> = validation.iter().map(|&i| ts.y[i]).collect();
    let mut curve = Vec::new();
    let bs = hyper.batch_size.max(1);
    for epoch in 1..=epochs {
        order.shuffle(&mut r);
        for batch in order.chunks(bs) {
            let xs: Vec<&[f64]> = batch.iter().map(|&i| ts.x.row(i)).collect();
            let ys: Vec<usize> = batch.iter().map(|&i| ts.y[i]).collect();
            let (_, g) = net.loss_and_grad(&xs, &ys, hyper.l2);
            adam.step(&mut net.params, &g, hyper.learning_rate);
        }
        if !validation.is_empty() && (epoch % eval_every == 0 || epoch == epochs) {
            curve.push((epoch, net.mean_loss(&vx, &vy)));
        }
    }
    curve
}

fn sizes(p: usize, width: usize, layers: usize, k: usize) -> Vec<usize> {
    let mut s = vec![p];
    s.extend(std::iter::repeat(width).take(layers));
    s.push(k);
    s
}

/// Trains a feed-forward network. K-fold cross-validation over the training
/// rows picks the hidden width and epoch count with the lowest mean validation
/// loss; the final network is then refit on all training rows.
pub fn train_mlp(ts: &TrainingSet, hyper: &MlpHyper) -> Result<ProbabilityModel> {
    ts.check_trainable()?;
    if hyper.epochs == 0 {
        return Err(Error::InvalidConfig("mlp epochs must be at least 1".into()));
    }
    let (p, k) = (ts.x.ncols(), ts.k());
    let widths = if hyper.hidden_widths.is_empty() {
        vec![(2 * p).max(2)]
    } else {
        hyper.hidden_widths.clone()
    };
    let eval_every = (hyper.epochs / 20).max(1);

    let folds = hyper.folds.min(ts.train.len());
    let (width, epochs, cv_loss) = if folds >= 2 {
        let mut shuffled = ts.train.clone();
        shuffled.shuffle(&mut stream(ts.seed, &[rng::FOLDS]));
        let jobs: Vec<(usize, usize)> = (0..widths.len())
            .flat_map(|w| (0..folds).map(move |f| (w, f)))
            .collect();
        let curves: Vec<Vec<(usize, f64)>> = jobs
            .par_iter()
            .map(|&(wi, f)| {
                let (val, tr): (Vec<(usize, usize)>, Vec<(usize, usize)>) = shuffled
                    .iter()
                    .copied()
                    .enumerate()
                    .partition(|(pos, _)| pos % folds == f);
                let val: Vec<usize> = val.into_iter().map(|x| x.1).collect();
                let tr: Vec<usize> = tr.into_iter().map(|x| x.1).collect();
                let mut net = Network::init(
                    sizes(p, widths[wi], hyper.hidden_layers, k),
                    &mut stream(ts.seed, &[rng::MLP_INIT, widths[wi] as u64, f as u64 + 1]),
                );
                fit(
                    &mut net,
                    ts,
                    &tr,
                    &val,
                    hyper.epochs,
                    eval_every,
                    hyper,
                    (wi * folds + f + 1) as u64,
                )
            })
            .collect();
        let mut best: Option<(usize, usize, f64)> = None;
        for (wi, width) in widths.iter().enumerate() {
            let fold_curves = &curves[wi * folds..(wi + 1) * folds];
            for (ci, &(epoch, _)) in fold_curves[0].iter().enumerate() {
                let mean = fold_curves.iter().map(|c| c[ci].1).sum::<f64>() / folds as f64;
                if best.map_or(true, |b| mean < b.2) {
                    best = Some((*width, epoch, mean));
                }
            }
        }
        let (w, e, l) = best.expect("at least one checkpoint");
        (w, e, Some(l))
    } else {
        (widths[0], hyper.epochs, None)
    };

    let mut net = Network::init(
        sizes(p, width, hyper.hidden_layers, k),
        &mut stream(ts.seed, &[rng::MLP_INIT, width as u64, 0]),
    );
    fit(&mut net, ts, &ts.train, &[], epochs, eval_every, hyper, 0);
    Ok(ProbabilityModel::new(
        ts,
        ModelKind::Mlp {
            hyperparameters: hyper.clone(),
            parameters: MlpModel {
                network: net,
                selected_width: width,
                selected_epochs: epochs,
                cv_loss,
            },
        },
    ))
}
