//! The assembled FreTS forecasting model.
//!
//! Pipeline for one lookback window `X` of shape `N x L` (channels x steps):
//!
//! 1. dimension extension: `H[n,l,k] = X[n,l] * embed[k]`, lifting every
//!    scalar observation onto a learnable length-`d` embedding;
//! 2. frequency channel learner: transform along the channel axis, run the
//!    shared FreMLP stack on the embedding axis (bins and timestamps act as
//!    batch rows), transform back;
//! 3. frequency temporal learner: the same along the time axis, weights
//!    shared across channels;
//! 4. projection: per channel, flatten `L x d` and apply a two-layer FFN
//!    producing all `tau` horizon steps in one forward step.
//!
//! Either learner can be disabled (the FreCL / FreTL ablations), and
//! `channel_independent` mode drops the channel learner for long horizons.
//! A time-domain variant replaces both learners with plain real MLPs on the
//! same axes; it exists as the like-for-like baseline the frequency model is
//! measured against.
//!
//! Everything here is `f64`: the gradient and transform tolerances this model
//! is verified to leave no room for single precision.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fft;
use crate::fremlp::{
    fremlp_init_from_stream, fremlp_stack_backward, fremlp_stack_forward, Activation, FreMlpGrads,
    FreMlpParams,
};
use crate::rng;
use crate::tensor::{ComplexTensor, RealTensor};

type T = RealTensor<f64>;
type C = ComplexTensor<f64>;

/// Where the two learners operate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LearnerDomain {
    /// FreMLP on the transformed axis (the model this crate is about).
    Frequency,
    /// Plain real MLP on the same axes, no domain conversion. Baseline only.
    Time,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    /// Lookback window length L.
    pub lookback: usize,
    /// Forecast horizon tau.
    pub horizon: usize,
    /// Channel count N.
    pub channels: usize,
    /// Embedding width d.
    pub embed_dim: usize,
    /// Projection hidden width d_h.
    pub hidden_dim: usize,
    pub use_channel_learner: bool,
    pub use_temporal_learner: bool,
    /// Long-horizon mode: keeps only the temporal learner.
    pub channel_independent: bool,
    /// FreMLP stack depth per learner.
    pub fremlp_layers: usize,
    /// Activation for the learners and the projection hidden layer.
    pub activation: Activation,
    pub learner_domain: LearnerDomain,
    pub seed: u64,
}

impl ModelConfig {
    /// Defaults: d = 128, d_h = 256, one FreMLP layer, relu, both learners.
    pub fn new(channels: usize, lookback: usize, horizon: usize) -> Self {
        ModelConfig {
            lookback,
            horizon,
            channels,
            embed_dim: 128,
            hidden_dim: 256,
            use_channel_learner: true,
            use_temporal_learner: true,
            channel_independent: false,
            fremlp_layers: 1,
            activation: Activation::Relu,
            learner_domain: LearnerDomain::Frequency,
            seed: 0,
        }
    }

    /// Validate invariants and apply the `channel_independent` coercion.
    pub fn normalized(&self) -> Result<ModelConfig> {
        let mut cfg = self.clone();
        if cfg.channel_independent {
            cfg.use_channel_learner = false;
        }
        for (name, v) in [
            ("lookback", cfg.lookback),
            ("horizon", cfg.horizon),
            ("channels", cfg.channels),
            ("embed_dim", cfg.embed_dim),
            ("hidden_dim", cfg.hidden_dim),
            ("fremlp_layers", cfg.fremlp_layers),
        ] {
            if v == 0 {
                return Err(Error::config(format!("{name} must be at least 1")));
            }
        }
        if !cfg.use_channel_learner && !cfg.use_temporal_learner {
            return Err(Error::config("at least one learner must be enabled"));
        }
        Ok(cfg)
    }
}

/// Parameters of one learner: a FreMLP stack or its time-domain counterpart.
#[derive(Clone, Debug, PartialEq)]
pub enum LearnerParams {
    Frequency(Vec<FreMlpParams<f64>>),
    Time(Vec<RealMlpParams>),
}

/// One plain real MLP layer `act(X W + b)` on the embedding axis.
#[derive(Clone, Debug, PartialEq)]
pub struct RealMlpParams {
    pub w: T,
    pub b: T,
}

/// Full parameter set. Disabled learners carry no parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct FreTsParams {
    /// Dimension-extension embedding, length d.
    pub embed: T,
    pub channel: Option<LearnerParams>,
    pub temporal: Option<LearnerParams>,
    /// Projection FFN: (L*d) x d_h, d_h, d_h x tau, tau.
    pub proj_w1: T,
    pub proj_b1: T,
    pub proj_w2: T,
    pub proj_b2: T,
}

/// Gradient set mirroring [`FreTsParams`] block for block.
pub type FreTsGrads = FreTsParams;

impl FreTsParams {
    /// Same structure, every block zeroed. Used for gradient accumulators
    /// and optimizer moments.
    pub fn zeros_like(&self) -> FreTsParams {
        fn zl(t: &T) -> T {
            T::zeros(t.shape())
        }
        let learner = |l: &LearnerParams| match l {
            LearnerParams::Frequency(stack) => LearnerParams::Frequency(
                stack
                    .iter()
                    .map(|p| FreMlpParams {
                        w_r: zl(&p.w_r),
                        w_i: zl(&p.w_i),
                        b_r: zl(&p.b_r),
                        b_i: zl(&p.b_i),
                    })
                    .collect(),
            ),
            LearnerParams::Time(stack) => LearnerParams::Time(
                stack
                    .iter()
                    .map(|p| RealMlpParams {
                        w: zl(&p.w),
                        b: zl(&p.b),
                    })
                    .collect(),
            ),
        };
        FreTsParams {
            embed: zl(&self.embed),
            channel: self.channel.as_ref().map(learner),
            temporal: self.temporal.as_ref().map(learner),
            proj_w1: zl(&self.proj_w1),
            proj_b1: zl(&self.proj_b1),
            proj_w2: zl(&self.proj_w2),
            proj_b2: zl(&self.proj_b2),
        }
    }

    /// Flat view of every parameter block in a stable documented order:
    /// `embed`, channel stack, temporal stack, `proj_w1`, `proj_b1`,
    /// `proj_w2`, `proj_b2`. Learner stacks expand to
    /// `<learner>.<layer>.{w_r,w_i,b_r,b_i}` or `<learner>.<layer>.{w,b}`.
    pub fn named_blocks(&self) -> Vec<(String, &T)> {
        let mut out: Vec<(String, &T)> = vec![("embed".into(), &self.embed)];
        push_learner_blocks("channel", &self.channel, &mut out);
        push_learner_blocks("temporal", &self.temporal, &mut out);
        out.push(("proj_w1".into(), &self.proj_w1));
        out.push(("proj_b1".into(), &self.proj_b1));
        out.push(("proj_w2".into(), &self.proj_w2));
        out.push(("proj_b2".into(), &self.proj_b2));
        out
    }

    /// Mutable counterpart of [`named_blocks`](Self::named_blocks), same order.
    pub fn named_blocks_mut(&mut self) -> Vec<(String, &mut T)> {
        let mut out: Vec<(String, &mut T)> = vec![("embed".into(), &mut self.embed)];
        push_learner_blocks_mut("channel", &mut self.channel, &mut out);
        push_learner_blocks_mut("temporal", &mut self.temporal, &mut out);
        out.push(("proj_w1".into(), &mut self.proj_w1));
        out.push(("proj_b1".into(), &mut self.proj_b1));
        out.push(("proj_w2".into(), &mut self.proj_w2));
        out.push(("proj_b2".into(), &mut self.proj_b2));
        out
    }

    pub fn is_finite(&self) -> bool {
        self.named_blocks().iter().all(|(_, t)| t.is_finite())
    }
}

fn push_learner_blocks<'a>(name: &str, l: &'a Option<LearnerParams>, out: &mut Vec<(String, &'a T)>) {
    match l {
        None => {}
        Some(LearnerParams::Frequency(stack)) => {
            for (i, p) in stack.iter().enumerate() {
                out.push((format!("{name}.{i}.w_r"), &p.w_r));
                out.push((format!("{name}.{i}.w_i"), &p.w_i));
                out.push((format!("{name}.{i}.b_r"), &p.b_r));
                out.push((format!("{name}.{i}.b_i"), &p.b_i));
            }
        }
        Some(LearnerParams::Time(stack)) => {
            for (i, p) in stack.iter().enumerate() {
                out.push((format!("{name}.{i}.w"), &p.w));
                out.push((format!("{name}.{i}.b"), &p.b));
            }
        }
    }
}

fn push_learner_blocks_mut<'a>(
    name: &str,
    l: &'a mut Option<LearnerParams>,
    out: &mut Vec<(String, &'a mut T)>,
) {
    match l {
        None => {}
        Some(LearnerParams::Frequency(stack)) => {
            for (i, p) in stack.iter_mut().enumerate() {
                out.push((format!("{name}.{i}.w_r"), &mut p.w_r));
                out.push((format!("{name}.{i}.w_i"), &mut p.w_i));
                out.push((format!("{name}.{i}.b_r"), &mut p.b_r));
                out.push((format!("{name}.{i}.b_i"), &mut p.b_i));
            }
        }
        Some(LearnerParams::Time(stack)) => {
            for (i, p) in stack.iter_mut().enumerate() {
                out.push((format!("{name}.{i}.w"), &mut p.w));
                out.push((format!("{name}.{i}.b"), &mut p.b));
            }
        }
    }
}

/// Seeded parameter initialization. Weight blocks draw uniform
/// `[-1/sqrt(fan_in), 1/sqrt(fan_in)]`, biases start at zero; one stream
/// derived from `config.seed` fixes every draw.
pub fn init_params(config: &ModelConfig) -> Result<FreTsParams> {
    let cfg = config.normalized()?;
    let d = cfg.embed_dim;
    let mut stream = rng::derived(cfg.seed, "model-init");

    let draw_uniform = |n: usize, bound: f64, stream: &mut rng::DetRng| -> Vec<f64> {
        (0..n).map(|_| rng::uniform(stream, -bound, bound)).collect()
    };

    let embed = T::from_vec(&[d], draw_uniform(d, 1.0 / (d as f64).sqrt(), &mut stream))?;

    let learner = |enabled: bool, stream: &mut rng::DetRng| -> Result<Option<LearnerParams>> {
        if !enabled {
            return Ok(None);
        }
        Ok(Some(match cfg.learner_domain {
            LearnerDomain::Frequency => {
                let mut stack = Vec::with_capacity(cfg.fremlp_layers);
                for _ in 0..cfg.fremlp_layers {
                    stack.push(fremlp_init_from_stream(d, stream)?);
                }
                LearnerParams::Frequency(stack)
            }
            LearnerDomain::Time => {
                let bound = 1.0 / (d as f64).sqrt();
                let mut stack = Vec::with_capacity(cfg.fremlp_layers);
                for _ in 0..cfg.fremlp_layers {
                    let w = T::from_vec(&[d, d], (0..d * d).map(|_| rng::uniform(stream, -bound, bound)).collect())?;
                    stack.push(RealMlpParams {
                        w,
                        b: T::zeros(&[d]),
                    });
                }
                LearnerParams::Time(stack)
            }
        }))
    };
    let channel = learner(cfg.use_channel_learner, &mut stream)?;
    let temporal = learner(cfg.use_temporal_learner, &mut stream)?;

    let flat = cfg.lookback * d;
    let proj_w1 = T::from_vec(
        &[flat, cfg.hidden_dim],
        draw_uniform(flat * cfg.hidden_dim, 1.0 / (flat as f64).sqrt(), &mut stream),
    )?;
    let proj_w2 = T::from_vec(
        &[cfg.hidden_dim, cfg.horizon],
        draw_uniform(
            cfg.hidden_dim * cfg.horizon,
            1.0 / (cfg.hidden_dim as f64).sqrt(),
            &mut stream,
        ),
    )?;

    Ok(FreTsParams {
        embed,
        channel,
        temporal,
        proj_w1,
        proj_b1: T::zeros(&[cfg.hidden_dim]),
        proj_w2,
        proj_b2: T::zeros(&[cfg.horizon]),
    })
}

// ---------------------------------------------------------------------------
// Pipeline stages (public forms use the unbatched shapes)
// ---------------------------------------------------------------------------

/// `H[n,l,k] = X[n,l] * embed[k]`.
pub fn dimension_extension(x: &T, embed: &T) -> Result<T> {
    if x.rank() != 2 || embed.rank() != 1 {
        return Err(Error::dimension(format!(
            "dimension extension expects N x L input and a vector embedding, got {:?} and {:?}",
            x.shape(),
            embed.shape()
        )));
    }
    let mut shape = x.shape().to_vec();
    shape.push(embed.dim(0));
    extend_scalars(x, embed, &shape)
}

fn extend_scalars(x: &T, embed: &T, out_shape: &[usize]) -> Result<T> {
    let d = embed.dim(0);
    let ed = embed.data();
    let mut out = vec![0.0f64; x.numel() * d];
    for (block, &v) in out.chunks_exact_mut(d).zip(x.data()) {
        for (o, &e) in block.iter_mut().zip(ed) {
            *o = v * e;
        }
    }
    T::from_vec(out_shape, out)
}

/// Input spectrum of a frequency learner, kept from the forward pass so the
/// backward pass does not redo the transform.
struct FreqCache {
    /// Spectrum flattened to `rows x d` (the shape the MLP stack consumes).
    input_rows: C,
    /// Original bins shape for reshaping gradients back.
    bins_shape: Vec<usize>,
}

/// Learner along `axis` of a tensor whose trailing axis is the embedding.
/// In the frequency domain: transform, shared MLP stack on the embedding
/// axis (all bins and all other positions are batch rows), inverse
/// transform. In the time domain the stack applies directly.
fn learner_forward(
    x: &T,
    axis: usize,
    params: &LearnerParams,
    activation: Activation,
) -> Result<(T, Option<FreqCache>)> {
    let n = x.dim(axis);
    match params {
        LearnerParams::Frequency(stack) => {
            let spec = fft::rfft(x, axis)?;
            let bins_shape = spec.shape().to_vec();
            let d = *bins_shape.last().unwrap();
            let rows = spec.re.numel() / d;
            let yin = ComplexTensor::new(spec.re.reshape(&[rows, d])?, spec.im.reshape(&[rows, d])?)?;
            let yout = fremlp_stack_forward(&yin, stack, activation)?;
            let spec_out = ComplexTensor::new(
                yout.re.reshape(&bins_shape)?,
                yout.im.reshape(&bins_shape)?,
            )?;
            let out = fft::irfft(&spec_out, n, axis)?;
            Ok((
                out,
                Some(FreqCache {
                    input_rows: yin,
                    bins_shape,
                }),
            ))
        }
        LearnerParams::Time(stack) => Ok((real_stack_forward(x, stack, activation)?, None)),
    }
}

struct LearnerBackward {
    grads: LearnerParams,
    input_grad: T,
}

fn learner_backward(
    x: &T,
    axis: usize,
    params: &LearnerParams,
    activation: Activation,
    upstream: &T,
    cache: Option<&FreqCache>,
    faults: Faults,
) -> Result<LearnerBackward> {
    let n = x.dim(axis);
    match params {
        LearnerParams::Frequency(stack) => {
            // Upstream arrives in the time domain; pull it back through the
            // inverse transform, the MLP stack, then the forward transform.
            let dspec_out = fft::irfft_adjoint(upstream, axis)?;
            let bins_shape = dspec_out.shape().to_vec();
            let d = *bins_shape.last().unwrap();
            let rows = dspec_out.re.numel() / d;

            let recomputed;
            let yin = match cache {
                Some(c) => &c.input_rows,
                None => {
                    let spec = fft::rfft(x, axis)?;
                    recomputed = ComplexTensor::new(
                        spec.re.reshape(&[rows, d])?,
                        spec.im.reshape(&[rows, d])?,
                    )?;
                    &recomputed
                }
            };
            let up_re = dspec_out.re.reshape(&[rows, d])?;
            let up_im = dspec_out.im.reshape(&[rows, d])?;
            let (layer_grads, dspec_in_rows) = fremlp_stack_backward(yin, stack, &up_re, &up_im, activation)?;

            let dspec_in = ComplexTensor::new(
                dspec_in_rows.re.reshape(&bins_shape)?,
                dspec_in_rows.im.reshape(&bins_shape)?,
            )?;
            let input_grad = fft::rfft_adjoint_impl(&dspec_in, n, axis, !faults.unweighted_rfft_adjoint)?;
            Ok(LearnerBackward {
                grads: LearnerParams::Frequency(layer_grads.into_iter().map(strip_input).collect()),
                input_grad,
            })
        }
        LearnerParams::Time(stack) => {
            let (grads, input_grad) = real_stack_backward(x, stack, activation, upstream)?;
            Ok(LearnerBackward {
                grads: LearnerParams::Time(grads),
                input_grad,
            })
        }
    }
}

fn strip_input(g: FreMlpGrads<f64>) -> FreMlpParams<f64> {
    FreMlpParams {
        w_r: g.w_r,
        w_i: g.w_i,
        b_r: g.b_r,
        b_i: g.b_i,
    }
}

fn real_stack_forward(x: &T, stack: &[RealMlpParams], activation: Activation) -> Result<T> {
    if stack.is_empty() {
        return Err(Error::config("real mlp stack needs at least one layer"));
    }
    let shape = x.shape().to_vec();
    let d = *shape.last().unwrap();
    let rows = x.numel() / d;
    let mut cur = x.clone().reshape(&[rows, d])?;
    for layer in stack {
        cur = activation.apply(&cur.matmul(&layer.w)?.add_row_vector(layer.b.data())?);
    }
    cur.reshape(&shape)
}

fn real_stack_backward(
    x: &T,
    stack: &[RealMlpParams],
    activation: Activation,
    upstream: &T,
) -> Result<(Vec<RealMlpParams>, T)> {
    let shape = x.shape().to_vec();
    let d = *shape.last().unwrap();
    let rows = x.numel() / d;

    let mut inputs = Vec::with_capacity(stack.len());
    let mut pres = Vec::with_capacity(stack.len());
    let mut cur = x.clone().reshape(&[rows, d])?;
    for layer in stack {
        let pre = cur.matmul(&layer.w)?.add_row_vector(layer.b.data())?;
        inputs.push(cur);
        cur = activation.apply(&pre);
        pres.push(pre);
    }

    let mut grads: Vec<RealMlpParams> = Vec::with_capacity(stack.len());
    let mut up = upstream.clone().reshape(&[rows, d])?;
    for ((layer, input), pre) in stack.iter().zip(inputs.iter()).zip(pres.iter()).rev() {
        let mut dpre = up.clone();
        for (g, &p) in dpre.data_mut().iter_mut().zip(pre.data()) {
            *g *= activation.derivative(p);
        }
        let dw = input.matmul_at(&dpre)?;
        let db = T::from_vec(&[d], dpre.col_sums()?)?;
        up = dpre.matmul_bt(&layer.w)?;
        grads.push(RealMlpParams { w: dw, b: db });
    }
    grads.reverse();
    Ok((grads, up.reshape(&shape)?))
}

/// Channel learner on an `N x L x d` hidden tensor: one shared stack applied
/// to the spectrum taken along the channel axis, weights shared across all
/// timestamps and bins.
pub fn channel_learner(h: &T, params: &LearnerParams, activation: Activation) -> Result<T> {
    expect_rank3("channel_learner", h)?;
    Ok(learner_forward(h, 0, params, activation)?.0)
}

/// Temporal learner on an `N x L x d` tensor: spectrum along the time axis,
/// weights shared across channels and bins.
pub fn temporal_learner(z: &T, params: &LearnerParams, activation: Activation) -> Result<T> {
    expect_rank3("temporal_learner", z)?;
    Ok(learner_forward(z, 1, params, activation)?.0)
}

fn expect_rank3(ctx: &str, t: &T) -> Result<()> {
    if t.rank() != 3 {
        return Err(Error::dimension(format!(
            "{ctx} expects an N x L x d tensor, got {:?}",
            t.shape()
        )));
    }
    Ok(())
}

/// Per-channel two-layer FFN: flatten `L x d`, hidden layer with activation,
/// linear output of all `tau` steps at once.
pub fn projection(s: &T, w1: &T, b1: &T, w2: &T, b2: &T, activation: Activation) -> Result<T> {
    expect_rank3("projection", s)?;
    let (n, l, d) = (s.dim(0), s.dim(1), s.dim(2));
    let flat = s.clone().reshape(&[n, l * d])?;
    let hidden = activation.apply(&flat.matmul(w1)?.add_row_vector(b1.data())?);
    hidden.matmul(w2)?.add_row_vector(b2.data())
}

// ---------------------------------------------------------------------------
// Full model, batched
// ---------------------------------------------------------------------------

/// Test-only fault switches threaded through the backward pass.
#[derive(Clone, Copy, Default)]
pub(crate) struct Faults {
    pub unweighted_rfft_adjoint: bool,
}

fn check_batch_input(x: &T, cfg: &ModelConfig) -> Result<usize> {
    match x.shape() {
        [b, n, l] if *n == cfg.channels && *l == cfg.lookback => Ok(*b),
        other => Err(Error::config(format!(
            "input shape {other:?} does not match config (batch x {} x {})",
            cfg.channels, cfg.lookback
        ))),
    }
}

struct ForwardTrace {
    h: T,
    z: T,
    s: T,
    hidden_pre: T,
    hidden: T,
    pred: T,
    channel_cache: Option<FreqCache>,
    temporal_cache: Option<FreqCache>,
}

fn check_learner_presence(params: &FreTsParams, cfg: &ModelConfig) -> Result<()> {
    for (name, enabled, present) in [
        ("channel", cfg.use_channel_learner, params.channel.is_some()),
        ("temporal", cfg.use_temporal_learner, params.temporal.is_some()),
    ] {
        if enabled != present {
            return Err(Error::config(format!(
                "config has {name} learner {} but parameters {} it",
                if enabled { "enabled" } else { "disabled" },
                if present { "carry" } else { "lack" }
            )));
        }
    }
    Ok(())
}

fn forward_trace(x: &T, params: &FreTsParams, cfg: &ModelConfig) -> Result<ForwardTrace> {
    let b = check_batch_input(x, cfg)?;
    check_learner_presence(params, cfg)?;
    let (n, l, d) = (cfg.channels, cfg.lookback, cfg.embed_dim);

    let h = extend_scalars(x, &params.embed, &[b, n, l, d])?;

    let (z, channel_cache) = match &params.channel {
        Some(p) => learner_forward(&h, 1, p, cfg.activation)?,
        None => (h.clone(), None),
    };
    let (s, temporal_cache) = match &params.temporal {
        Some(p) => learner_forward(&z, 2, p, cfg.activation)?,
        None => (z.clone(), None),
    };

    let flat = s.clone().reshape(&[b * n, l * d])?;
    let hidden_pre = flat.matmul(&params.proj_w1)?.add_row_vector(params.proj_b1.data())?;
    let hidden = cfg.activation.apply(&hidden_pre);
    let pred = hidden
        .matmul(&params.proj_w2)?
        .add_row_vector(params.proj_b2.data())?
        .reshape(&[b, n, cfg.horizon])?;

    Ok(ForwardTrace {
        h,
        z,
        s,
        hidden_pre,
        hidden,
        pred,
        channel_cache,
        temporal_cache,
    })
}

/// Batched forward pass: `B x N x L` windows to `B x N x tau` forecasts.
/// Batch elements are independent; identical inputs give identical outputs.
pub fn frets_forward(x: &T, params: &FreTsParams, config: &ModelConfig) -> Result<T> {
    let cfg = config.normalized()?;
    Ok(forward_trace(x, params, &cfg)?.pred)
}

/// Convenience single-window forward: `N x L` to `N x tau`.
pub fn frets_forward_single(x: &T, params: &FreTsParams, config: &ModelConfig) -> Result<T> {
    if x.rank() != 2 {
        return Err(Error::dimension(format!(
            "single-window forward expects N x L, got {:?}",
            x.shape()
        )));
    }
    let (n, l) = (x.dim(0), x.dim(1));
    let batched = x.clone().reshape(&[1, n, l])?;
    let out = frets_forward(&batched, params, config)?;
    let tau = out.dim(2);
    out.reshape(&[n, tau])
}

/// Mean-squared-error loss and exact gradients for every parameter block.
/// Returns `(loss, grads)`.
pub fn frets_backward(
    x: &T,
    targets: &T,
    params: &FreTsParams,
    config: &ModelConfig,
) -> Result<(f64, FreTsGrads)> {
    frets_backward_impl(x, targets, params, config, 1.0, Faults::default())
}

/// Gradients of `scale * MSE`; gradients are linear in the loss scale.
pub fn frets_backward_scaled(
    x: &T,
    targets: &T,
    params: &FreTsParams,
    config: &ModelConfig,
    scale: f64,
) -> Result<(f64, FreTsGrads)> {
    frets_backward_impl(x, targets, params, config, scale, Faults::default())
}

/// Negative control: backward with the shared-bin adjoint weighting skipped.
/// Exists so the gradient-check suite can prove it detects a broken adjoint.
#[cfg(feature = "fault-injection")]
pub fn frets_backward_unweighted_adjoint(
    x: &T,
    targets: &T,
    params: &FreTsParams,
    config: &ModelConfig,
) -> Result<(f64, FreTsGrads)> {
    frets_backward_impl(
        x,
        targets,
        params,
        config,
        1.0,
        Faults {
            unweighted_rfft_adjoint: true,
        },
    )
}

fn frets_backward_impl(
    x: &T,
    targets: &T,
    params: &FreTsParams,
    config: &ModelConfig,
    loss_scale: f64,
    faults: Faults,
) -> Result<(f64, FreTsGrads)> {
    let cfg = config.normalized()?;
    let b = check_batch_input(x, &cfg)?;
    let (n, l, d, tau) = (cfg.channels, cfg.lookback, cfg.embed_dim, cfg.horizon);
    if targets.shape() != [b, n, tau] {
        return Err(Error::dimension(format!(
            "target shape {:?} does not match predictions {:?}",
            targets.shape(),
            [b, n, tau]
        )));
    }

    let trace = forward_trace(x, params, &cfg)?;
    let mut grads = params.zeros_like();

    // loss = scale * mean((pred - target)^2)
    let count = (b * n * tau) as f64;
    let diff = trace.pred.sub(targets)?;
    let loss = loss_scale * diff.sq_norm() / count;
    let dpred = diff.scale(2.0 * loss_scale / count).reshape(&[b * n, tau])?;

    // Projection.
    let dhidden = dpred.matmul_bt(&params.proj_w2)?;
    grads.proj_w2 = trace.hidden.matmul_at(&dpred)?;
    grads.proj_b2 = T::from_vec(&[tau], dpred.col_sums()?)?;
    let mut dhidden_pre = dhidden;
    for (g, &p) in dhidden_pre.data_mut().iter_mut().zip(trace.hidden_pre.data()) {
        *g *= cfg.activation.derivative(p);
    }
    let flat = trace.s.clone().reshape(&[b * n, l * d])?;
    grads.proj_w1 = flat.matmul_at(&dhidden_pre)?;
    grads.proj_b1 = T::from_vec(&[cfg.hidden_dim], dhidden_pre.col_sums()?)?;
    let mut dstage = dhidden_pre.matmul_bt(&params.proj_w1)?.reshape(&[b, n, l, d])?;

    // Temporal learner (axis 2 of [B, N, L, d]).
    if let Some(p) = &params.temporal {
        let back = learner_backward(
            &trace.z,
            2,
            p,
            cfg.activation,
            &dstage,
            trace.temporal_cache.as_ref(),
            faults,
        )?;
        grads.temporal = Some(back.grads);
        dstage = back.input_grad;
    }

    // Channel learner (axis 1).
    if let Some(p) = &params.channel {
        let back = learner_backward(
            &trace.h,
            1,
            p,
            cfg.activation,
            &dstage,
            trace.channel_cache.as_ref(),
            faults,
        )?;
        grads.channel = Some(back.grads);
        dstage = back.input_grad;
    }

    // Dimension extension: dEmbed[k] = sum over scalars X * dH[.., k].
    let mut dembed = vec![0.0f64; d];
    for (block, &v) in dstage.data().chunks_exact(d).zip(x.data()) {
        for (acc, &g) in dembed.iter_mut().zip(block) {
            *acc += v * g;
        }
    }
    grads.embed = T::from_vec(&[d], dembed)?;

    Ok((loss, grads))
}
