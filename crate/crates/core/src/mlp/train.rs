use super::{FeedforwardNetwork, Gradients};
use crate::{Error, Result};
use nalgebra::DMatrix;
use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Optimizer {
    Sgd,
    Adam,
    /// Exact minimizer of the training loss, only for networks without hidden layers.
    #[serde(rename = "lstsq")]
    LeastSquares,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainingConfig {
    pub optimizer: Optimizer,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
    pub validation_fraction: f64,
    pub patience: usize,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        TrainingConfig {
            optimizer: Optimizer::Adam,
            learning_rate: 1e-3,
            batch_size: 32,
            epochs: 200,
            seed: 0,
            validation_fraction: 0.1,
            patience: 50,
        }
    }
}

impl TrainingConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::invalid("learning_rate must be positive"));
        }
        if self.batch_size == 0 {
            return Err(Error::invalid("batch_size must be >= 1"));
        }
        if !(self.validation_fraction > 0.0 && self.validation_fraction < 1.0) {
            return Err(Error::invalid("validation_fraction must lie in (0, 1)"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
}

/// Losses are mean squared errors over all output entries.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub initial_val_loss: f64,
    pub best_epoch: usize,
    pub best_val_loss: f64,
    pub stopped_early: bool,
    pub history: Vec<EpochRecord>,
}

/// Seeded shuffle, returning `(train, validation)` row indices.
pub fn split_indices(n: usize, fraction: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n_val = ((fraction * n as f64).round() as usize).clamp(1, n.saturating_sub(1).max(1));
    let val = idx.split_off(n - n_val);
    (idx, val)
}

fn mse(net: &FeedforwardNetwork, x: ArrayView2<f64>, y: ArrayView2<f64>) -> Result<f64> {
    let pred = net.forward_batch(x)?;
    Ok((pred - y).iter().map(|e| e * e).sum::<f64>() / y.len().max(1) as f64)
}

struct AdamState {
    m: Gradients,
    v: Gradients,
    t: i32,
}

const BETA1: f64 = 0.9;
const BETA2: f64 = 0.999;
const EPS: f64 = 1e-8;

fn zeros_like(net: &FeedforwardNetwork) -> Gradients {
    Gradients {
        weights: net
            .weights()
            .iter()
            .map(|w| Array2::zeros(w.dim()))
            .collect(),
        biases: net
            .biases()
            .iter()
            .map(|b| Array1::zeros(b.len()))
            .collect(),
    }
}

fn apply_step(
    net: &mut FeedforwardNetwork,
    g: &Gradients,
    cfg: &TrainingConfig,
    adam: &mut AdamState,
) {
    let lr = cfg.learning_rate;
    let (ws, bs) = net.layers_mut();
    match cfg.optimizer {
        Optimizer::Sgd => {
            for (w, gw) in ws.iter_mut().zip(&g.weights) {
                w.scaled_add(-lr, gw);
            }
            for (b, gb) in bs.iter_mut().zip(&g.biases) {
                b.scaled_add(-lr, gb);
            }
        }
        Optimizer::LeastSquares => unreachable!("handled before the epoch loop"),
        Optimizer::Adam => {
            adam.t += 1;
            let c1 = 1.0 - BETA1.powi(adam.t);
            let c2 = 1.0 - BETA2.powi(adam.t);
            let upd = |p: &mut f64, g: f64, m: &mut f64, v: &mut f64| {
                *m = BETA1 * *m + (1.0 - BETA1) * g;
                *v = BETA2 * *v + (1.0 - BETA2) * g * g;
                *p -= lr * (*m / c1) / ((*v / c2).sqrt() + EPS);
            };
            for l in 0..ws.len() {
                ndarray::Zip::from(&mut ws[l])
                    .and(&g.weights[l])
                    .and(&mut adam.m.weights[l])
                    .and(&mut adam.v.weights[l])
                    .for_each(|p, &g, m, v| upd(p, g, m, v));
                ndarray::Zip::from(&mut bs[l])
                    .and(&g.biases[l])
                    .and(&mut adam.m.biases[l])
                    .and(&mut adam.v.biases[l])
                    .for_each(|p, &g, m, v| upd(p, g, m, v));
            }
        }
    }
}

fn fit_least_squares(
    net: &mut FeedforwardNetwork,
    inputs: ArrayView2<f64>,
    targets: ArrayView2<f64>,
    train_idx: &[usize],
    xv: ArrayView2<f64>,
    yv: ArrayView2<f64>,
    initial: f64,
) -> Result<TrainReport> {
    if net.sizes().len() != 2 {
        return Err(Error::invalid(
            "least squares needs a network without hidden layers",
        ));
    }
    let d = net.input_dim();
    let design = DMatrix::from_fn(train_idx.len(), d + 1, |i, j| {
        if j < d {
            inputs[[train_idx[i], j]]
        } else {
            1.0
        }
    });
    let rhs = DMatrix::from_fn(train_idx.len(), net.output_dim(), |i, j| {
        targets[[train_idx[i], j]]
    });
    let sol = design
        .svd(true, true)
        .solve(&rhs, 1e-12)
        .map_err(|e| Error::invalid(format!("least squares failed: {e}")))?;
    let (ws, bs) = net.layers_mut();
    for o in 0..sol.ncols() {
        for j in 0..d {
            ws[0][[o, j]] = sol[(j, o)];
        }
        bs[0][o] = sol[(d, o)];
    }
    let val_loss = mse(net, xv, yv)?;
    let train_loss = mse(
        net,
        inputs.select(Axis(0), train_idx).view(),
        targets.select(Axis(0), train_idx).view(),
    )?;
    if !val_loss.is_finite() {
        return Err(Error::NonFiniteLoss {
            epoch: 1,
            batch: 0,
            loss: val_loss,
        });
    }
    Ok(TrainReport {
        initial_val_loss: initial,
        best_epoch: 1,
        best_val_loss: val_loss,
        stopped_early: false,
        history: vec![EpochRecord {
            epoch: 1,
            train_loss,
            val_loss,
        }],
    })
}

/// Mini-batch training on already normalized data. The parameters with the
/// lowest validation loss (including the untrained ones) are kept.
pub fn train(
    net: &mut FeedforwardNetwork,
    inputs: ArrayView2<f64>,
    targets: ArrayView2<f64>,
    cfg: &TrainingConfig,
) -> Result<TrainReport> {
    cfg.validate()?;
    let n = inputs.nrows();
    if n < 2 {
        return Err(Error::EmptyDataset);
    }
    if targets.nrows() != n {
        return Err(Error::DimensionMismatch {
            context: "training targets",
            expected: n,
            found: targets.nrows(),
        });
    }
    if inputs.ncols() != net.input_dim() || targets.ncols() != net.output_dim() {
        return Err(Error::DimensionMismatch {
            context: "training data width",
            expected: net.input_dim(),
            found: inputs.ncols(),
        });
    }
    let (train_idx, val_idx) = split_indices(n, cfg.validation_fraction, cfg.seed);
    let xv = inputs.select(Axis(0), &val_idx);
    let yv = targets.select(Axis(0), &val_idx);
    let mut order = train_idx.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(1));
    let mut adam = AdamState {
        m: zeros_like(net),
        v: zeros_like(net),
        t: 0,
    };

    let initial = mse(net, xv.view(), yv.view())?;
    if cfg.optimizer == Optimizer::LeastSquares {
        return fit_least_squares(
            net,
            inputs,
            targets,
            &train_idx,
            xv.view(),
            yv.view(),
            initial,
        );
    }
    let mut best = (initial, 0usize, net.params_flat());
    let mut history = Vec::with_capacity(cfg.epochs);
    let mut stopped_early = false;

    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut rng);
        let mut sum = 0.0;
        for (b, chunk) in order.chunks(cfg.batch_size).enumerate() {
            let xb = inputs.select(Axis(0), chunk);
            let yb = targets.select(Axis(0), chunk);
            let (g, loss) = net.backprop(xb.view(), yb.view())?;
            if !loss.is_finite() || g.flat().iter().any(|v| !v.is_finite()) {
                log::error!("non-finite loss at epoch {epoch} batch {b}: {loss}");
                return Err(Error::NonFiniteLoss {
                    epoch,
                    batch: b,
                    loss,
                });
            }
            sum += 2.0 * loss * chunk.len() as f64;
            apply_step(net, &g, cfg, &mut adam);
        }
        let train_loss = sum / (train_idx.len() * net.output_dim()) as f64;
        let val_loss = mse(net, xv.view(), yv.view())?;
        if !val_loss.is_finite() {
            return Err(Error::NonFiniteLoss {
                epoch,
                batch: 0,
                loss: val_loss,
            });
        }
        log::debug!("epoch {epoch}: train {train_loss:.3e} val {val_loss:.3e}");
        history.push(EpochRecord {
            epoch,
            train_loss,
            val_loss,
        });
        if val_loss < best.0 {
            best = (val_loss, epoch, net.params_flat());
        } else if epoch - best.1 >= cfg.patience {
            stopped_early = true;
            break;
        }
    }
    net.set_params_flat(&best.2)?;
    Ok(TrainReport {
        initial_val_loss: initial,
        best_epoch: best.1,
        best_val_loss: best.0,
        stopped_early,
        history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mlp::{init_network, Activation};

    #[test]
    fn split_is_deterministic_and_disjoint() {
        let (a, b) = split_indices(100, 0.1, 5);
        let (c, d) = split_indices(100, 0.1, 5);
        assert_eq!((a.clone(), b.clone()), (c, d));
        assert_eq!(b.len(), 10);
        let mut all: Vec<_> = a.into_iter().chain(b).collect();
        all.sort();
        assert_eq!(all, (0..100).collect::<Vec<_>>());
    }

    #[test]
    fn bad_config_rejected() {
        let mut net = init_network(&[1, 1], Activation::Tanh, 0).unwrap();
        let x = Array2::zeros((4, 1));
        let cfg = TrainingConfig {
            validation_fraction: 1.0,
            ..TrainingConfig::default()
        };
        assert!(train(&mut net, x.view(), x.view(), &cfg).is_err());
    }

    #[test]
    fn diverging_sgd_reports_non_finite_loss() {
        let mut net = init_network(&[1, 1], Activation::Relu, 0).unwrap();
        let x = Array2::from_shape_fn((64, 1), |(i, _)| i as f64);
        let y = x.mapv(|v| 3.0 * v);
        let cfg = TrainingConfig {
            optimizer: Optimizer::Sgd,
            learning_rate: 10.0,
            epochs: 500,
            ..TrainingConfig::default()
        };
        assert!(matches!(
            train(&mut net, x.view(), y.view(), &cfg),
            Err(Error::NonFiniteLoss { .. })
        ));
    }
}
