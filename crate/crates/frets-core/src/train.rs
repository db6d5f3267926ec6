//! Training protocol: min-max normalization, Adam, the epoch loop with
//! best-model selection, and split evaluation.
//!
//! Everything is seeded and single-trajectory deterministic: the same config
//! on the same data reproduces the run bit for bit, including every logged
//! loss and metric (wall time excepted).

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::data::{SeriesMatrix, WindowedDataset};
use crate::error::{Error, Result};
use crate::metrics::Metrics;
use crate::model::{frets_backward, frets_forward, init_params, FreTsGrads, FreTsParams, ModelConfig};
use crate::rng;
use crate::tensor::RealTensor;

type T = RealTensor<f64>;

/// Per-channel min-max statistics, fit on the training split only.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MinMaxScaler {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl MinMaxScaler {
    pub fn fit(series: &SeriesMatrix) -> Self {
        let n = series.channels();
        let mut min = vec![f64::INFINITY; n];
        let mut max = vec![f64::NEG_INFINITY; n];
        for ch in 0..n {
            for t in 0..series.timestamps() {
                let v = series.value(ch, t);
                min[ch] = min[ch].min(v);
                max[ch] = max[ch].max(v);
            }
        }
        MinMaxScaler { min, max }
    }

    pub fn channels(&self) -> usize {
        self.min.len()
    }

    /// A channel whose training range collapsed to a point maps to 0.
    pub fn is_degenerate(&self, channel: usize) -> bool {
        self.max[channel] <= self.min[channel]
    }

    fn check(&self, n: usize) -> Result<()> {
        if n != self.channels() {
            return Err(Error::dimension(format!(
                "scaler fit on {} channels applied to {n}",
                self.channels()
            )));
        }
        Ok(())
    }

    /// Normalize a `N x W` window (or a whole series) channel by channel.
    pub fn apply(&self, x: &T) -> Result<T> {
        self.check(x.dim(0))?;
        let mut out = x.clone();
        let w = x.numel() / x.dim(0);
        for (ch, row) in out.data_mut().chunks_exact_mut(w).enumerate() {
            let (lo, hi) = (self.min[ch], self.max[ch]);
            let range = hi - lo;
            for v in row {
                *v = if range > 0.0 { (*v - lo) / range } else { 0.0 };
            }
        }
        Ok(out)
    }

    /// Map normalized values back to the original scale.
    pub fn invert(&self, x: &T) -> Result<T> {
        self.check(x.dim(0))?;
        let mut out = x.clone();
        let w = x.numel() / x.dim(0);
        for (ch, row) in out.data_mut().chunks_exact_mut(w).enumerate() {
            let (lo, hi) = (self.min[ch], self.max[ch]);
            let range = hi - lo;
            for v in row {
                *v = *v * range + lo;
            }
        }
        Ok(out)
    }

    /// Whole-series normalization.
    pub fn apply_series(&self, series: &SeriesMatrix) -> Result<SeriesMatrix> {
        SeriesMatrix::new(self.apply(series.values())?, series.names().to_vec())
    }
}

/// Adam hyperparameters and per-block moment estimates.
#[derive(Clone, Debug)]
pub struct AdamState {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub step: u64,
    m: FreTsParams,
    v: FreTsParams,
}

impl AdamState {
    pub fn new(params: &FreTsParams, lr: f64) -> Self {
        AdamState {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            step: 0,
            m: params.zeros_like(),
            v: params.zeros_like(),
        }
    }
}

/// One Adam update with bias-corrected moments. Rejects non-finite gradients
/// with the offending block named.
pub fn adam_step(params: &mut FreTsParams, grads: &FreTsGrads, state: &mut AdamState) -> Result<()> {
    for (name, g) in grads.named_blocks() {
        if !g.is_finite() {
            return Err(Error::Training(format!("non-finite gradient in block {name}")));
        }
    }
    state.step += 1;
    let t = state.step as i32;
    let bias1 = 1.0 - state.beta1.powi(t);
    let bias2 = 1.0 - state.beta2.powi(t);

    let gblocks = grads.named_blocks();
    let mut pblocks = params.named_blocks_mut();
    let mut mblocks = state.m.named_blocks_mut();
    let mut vblocks = state.v.named_blocks_mut();
    if gblocks.len() != pblocks.len() {
        return Err(Error::dimension(format!(
            "gradient has {} blocks, parameters have {}",
            gblocks.len(),
            pblocks.len()
        )));
    }
    for i in 0..gblocks.len() {
        let g = gblocks[i].1.data();
        let p = pblocks[i].1.data_mut();
        let m = mblocks[i].1.data_mut();
        let v = vblocks[i].1.data_mut();
        if g.len() != p.len() {
            return Err(Error::dimension(format!(
                "gradient block {} has {} entries, parameter has {}",
                gblocks[i].0,
                g.len(),
                p.len()
            )));
        }
        for j in 0..g.len() {
            m[j] = state.beta1 * m[j] + (1.0 - state.beta1) * g[j];
            v[j] = state.beta2 * v[j] + (1.0 - state.beta2) * g[j] * g[j];
            let m_hat = m[j] / bias1;
            let v_hat = v[j] / bias2;
            p[j] -= state.lr * m_hat / (v_hat.sqrt() + state.eps);
        }
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub lr: f64,
    pub batch_size: usize,
    pub epochs: usize,
    /// Stop after this many epochs without significant validation
    /// improvement; 0 disables early stopping.
    pub patience: usize,
    /// Improvement below this margin does not reset the patience counter.
    pub min_delta: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            lr: 1e-3,
            batch_size: 32,
            epochs: 100,
            patience: 10,
            min_delta: 0.0,
            seed: 0,
        }
    }
}

/// One line of the training log.
#[derive(Clone, Debug, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_mae: f64,
    pub val_rmse: f64,
    pub wall_secs: f64,
}

/// Result of a training run: the best-validation parameters and the log.
#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub params: FreTsParams,
    pub log: Vec<EpochRecord>,
    /// Epoch (1-based) whose parameters are returned; `None` for a 0-epoch run.
    pub best_epoch: Option<usize>,
    pub best_val: Option<Metrics<f64>>,
}

/// Minibatch Adam on MSE over seeded-shuffled training windows. After each
/// epoch the validation split is scored and the parameters with the best
/// validation MAE so far are retained; those are what the run returns.
pub fn train(
    model_cfg: &ModelConfig,
    train_set: &WindowedDataset,
    val_set: &WindowedDataset,
    cfg: &TrainConfig,
    mut on_epoch: impl FnMut(&EpochRecord),
) -> Result<TrainOutcome> {
    if train_set.is_empty() || val_set.is_empty() {
        return Err(Error::config("training and validation splits must be non-empty"));
    }
    if cfg.batch_size == 0 {
        return Err(Error::config("batch size must be at least 1"));
    }

    let mut params = init_params(model_cfg)?;
    if cfg.epochs == 0 {
        return Ok(TrainOutcome {
            params,
            log: Vec::new(),
            best_epoch: None,
            best_val: None,
        });
    }

    let mut adam = AdamState::new(&params, cfg.lr);
    let mut shuffle_stream = rng::derived(cfg.seed, "epoch-shuffle");
    let started = Instant::now();

    let mut best_params = params.clone();
    let mut best: Option<(usize, Metrics<f64>)> = None;
    let mut significant_best = f64::INFINITY;
    let mut stale_epochs = 0usize;
    let mut log = Vec::new();

    for epoch in 1..=cfg.epochs {
        let order = rng::shuffled_indices(&mut shuffle_stream, train_set.len());
        let mut loss_sum = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            let (inputs, targets) = train_set.gather(batch)?;
            let (loss, grads) = frets_backward(&inputs, &targets, &params, model_cfg)?;
            adam_step(&mut params, &grads, &mut adam)?;
            loss_sum += loss * batch.len() as f64;
        }
        let train_loss = loss_sum / train_set.len() as f64;

        let val = evaluate(&params, val_set, model_cfg, cfg.batch_size)?;
        let record = EpochRecord {
            epoch,
            train_loss,
            val_mae: val.mae,
            val_rmse: val.rmse,
            wall_secs: started.elapsed().as_secs_f64(),
        };
        on_epoch(&record);
        log.push(record);

        // Any strict improvement updates the retained parameters; only a
        // significant one (beyond min_delta) resets the patience counter.
        if best.map_or(true, |(_, b)| val.mae < b.mae) {
            best = Some((epoch, val));
            best_params = params.clone();
        }
        if val.mae < significant_best - cfg.min_delta {
            significant_best = val.mae;
            stale_epochs = 0;
        } else {
            stale_epochs += 1;
            if cfg.patience > 0 && stale_epochs >= cfg.patience {
                break;
            }
        }
    }

    let (best_epoch, best_val) = match best {
        Some((e, m)) => (Some(e), Some(m)),
        None => (None, None),
    };
    Ok(TrainOutcome {
        params: best_params,
        log,
        best_epoch,
        best_val,
    })
}

/// MAE/RMSE over every window of a split, on the normalized scale.
///
/// Error sums accumulate per window in index order, so the result is exactly
/// independent of the evaluation batch size.
pub fn evaluate(
    params: &FreTsParams,
    split: &WindowedDataset,
    model_cfg: &ModelConfig,
    batch_size: usize,
) -> Result<Metrics<f64>> {
    if split.is_empty() {
        return Err(Error::config("cannot evaluate an empty split"));
    }
    let batch = batch_size.max(1);
    let mut abs_sum = 0.0f64;
    let mut sq_sum = 0.0f64;
    let mut count = 0usize;
    let indices: Vec<usize> = (0..split.len()).collect();
    for chunk in indices.chunks(batch) {
        let (inputs, targets) = split.gather(chunk)?;
        let preds = frets_forward(&inputs, params, model_cfg)?;
        for (&p, &t) in preds.data().iter().zip(targets.data()) {
            let d = p - t;
            abs_sum += d.abs();
            sq_sum += d * d;
        }
        count += preds.numel();
    }
    Ok(Metrics {
        mae: abs_sum / count as f64,
        rmse: (sq_sum / count as f64).sqrt(),
    })
}
