//! Frequency-domain MLP layer: complex affine map plus split activation.
//!
//! One layer computes, on a complex input `Y` of shape `m x d` with complex
//! weights `W = W_r + j W_i` (`d x d`) and bias `B = B_r + j B_i`:
//!
//! ```text
//! out.re = act(Y.re W_r - Y.im W_i + B_r)
//! out.im = act(Y.re W_i + Y.im W_r + B_i)
//! ```
//!
//! which is the complex product expanded into real arithmetic, with the
//! activation applied independently to the two parts. The backward pass
//! differentiates this split-real graph directly; no Wirtinger calculus is
//! involved anywhere.

use crate::error::{Error, Result};
use crate::rng;
use crate::scalar::{scalar_from_f64, Scalar};
use crate::tensor::{ComplexTensor, RealTensor};

/// Activation applied elementwise to the real and imaginary parts.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Relu,
    Identity,
}

impl Activation {
    pub fn apply<S: Scalar>(self, x: &RealTensor<S>) -> RealTensor<S> {
        match self {
            Activation::Relu => x.relu(),
            Activation::Identity => x.clone(),
        }
    }

    /// Derivative as a function of the pre-activation value.
    /// The relu subgradient at exactly 0 is 0.
    #[inline]
    pub fn derivative<S: Scalar>(self, pre: S) -> S {
        match self {
            Activation::Relu => {
                if pre > S::zero() {
                    S::one()
                } else {
                    S::zero()
                }
            }
            Activation::Identity => S::one(),
        }
    }
}

/// One layer's parameters in split real/imaginary form.
#[derive(Clone, Debug, PartialEq)]
pub struct FreMlpParams<S: Scalar> {
    pub w_r: RealTensor<S>,
    pub w_i: RealTensor<S>,
    pub b_r: RealTensor<S>,
    pub b_i: RealTensor<S>,
}

impl<S: Scalar> FreMlpParams<S> {
    /// Validate the square-weight / matching-bias invariants.
    pub fn new(w_r: RealTensor<S>, w_i: RealTensor<S>, b_r: RealTensor<S>, b_i: RealTensor<S>) -> Result<Self> {
        let d = match w_r.shape() {
            [a, b] if a == b => *a,
            other => {
                return Err(Error::dimension(format!(
                    "fremlp weight must be square, got {other:?}"
                )))
            }
        };
        if w_i.shape() != [d, d] {
            return Err(Error::dimension(format!(
                "fremlp real/imag weight shapes differ: {:?} vs {:?}",
                w_r.shape(),
                w_i.shape()
            )));
        }
        if b_r.shape() != [d] || b_i.shape() != [d] {
            return Err(Error::dimension(format!(
                "fremlp bias shapes {:?}/{:?} do not match width {d}",
                b_r.shape(),
                b_i.shape()
            )));
        }
        Ok(FreMlpParams { w_r, w_i, b_r, b_i })
    }

    /// Identity map: `W_r = I`, everything else zero.
    pub fn identity(d: usize) -> Self {
        FreMlpParams {
            w_r: RealTensor::identity(d),
            w_i: RealTensor::zeros(&[d, d]),
            b_r: RealTensor::zeros(&[d]),
            b_i: RealTensor::zeros(&[d]),
        }
    }

    pub fn width(&self) -> usize {
        self.w_r.dim(0)
    }

    pub fn is_finite(&self) -> bool {
        self.w_r.is_finite() && self.w_i.is_finite() && self.b_r.is_finite() && self.b_i.is_finite()
    }
}

/// Gradients for one layer plus the gradient with respect to its input.
#[derive(Clone, Debug)]
pub struct FreMlpGrads<S: Scalar> {
    pub w_r: RealTensor<S>,
    pub w_i: RealTensor<S>,
    pub b_r: RealTensor<S>,
    pub b_i: RealTensor<S>,
    pub input: ComplexTensor<S>,
}

fn check_input<S: Scalar>(y: &ComplexTensor<S>, params: &FreMlpParams<S>) -> Result<()> {
    let d = params.width();
    match y.shape() {
        [_, w] if *w == d => Ok(()),
        other => Err(Error::dimension(format!(
            "fremlp input shape {other:?} does not end in layer width {d}"
        ))),
    }
}

/// Pre-activation pair `(P, Q)` of one layer.
fn preactivations<S: Scalar>(y: &ComplexTensor<S>, params: &FreMlpParams<S>) -> Result<(RealTensor<S>, RealTensor<S>)> {
    let re_wr = y.re.matmul(&params.w_r)?;
    let im_wi = y.im.matmul(&params.w_i)?;
    let re_wi = y.re.matmul(&params.w_i)?;
    let im_wr = y.im.matmul(&params.w_r)?;
    let p = re_wr.sub(&im_wi)?.add_row_vector(params.b_r.data())?;
    let q = re_wi.add(&im_wr)?.add_row_vector(params.b_i.data())?;
    Ok((p, q))
}

/// Forward pass of one layer.
pub fn fremlp_forward<S: Scalar>(
    y: &ComplexTensor<S>,
    params: &FreMlpParams<S>,
    activation: Activation,
) -> Result<ComplexTensor<S>> {
    check_input(y, params)?;
    let (p, q) = preactivations(y, params)?;
    ComplexTensor::new(activation.apply(&p), activation.apply(&q))
}

/// Backward pass of one layer given the upstream gradient on the output's
/// real and imaginary parts. Pre-activations are recomputed from the stored
/// input, so no forward cache has to be threaded through callers.
pub fn fremlp_backward<S: Scalar>(
    y: &ComplexTensor<S>,
    params: &FreMlpParams<S>,
    upstream_re: &RealTensor<S>,
    upstream_im: &RealTensor<S>,
    activation: Activation,
) -> Result<FreMlpGrads<S>> {
    check_input(y, params)?;
    if upstream_re.shape() != y.shape() || upstream_im.shape() != y.shape() {
        return Err(Error::dimension(format!(
            "upstream gradient shapes {:?}/{:?} do not match input shape {:?}",
            upstream_re.shape(),
            upstream_im.shape(),
            y.shape()
        )));
    }
    let (p, q) = preactivations(y, params)?;

    // dP = G_re * act'(P), dQ = G_im * act'(Q)
    let dp = masked(upstream_re, &p, activation);
    let dq = masked(upstream_im, &q, activation);

    // dW_r = Y.re^T dP + Y.im^T dQ ; dW_i = Y.re^T dQ - Y.im^T dP
    let w_r = y.re.matmul_at(&dp)?.add(&y.im.matmul_at(&dq)?)?;
    let w_i = y.re.matmul_at(&dq)?.sub(&y.im.matmul_at(&dp)?)?;
    let b_r = RealTensor::from_vec(&[params.width()], dp.col_sums()?)?;
    let b_i = RealTensor::from_vec(&[params.width()], dq.col_sums()?)?;

    // dY.re = dP W_r^T + dQ W_i^T ; dY.im = dQ W_r^T - dP W_i^T
    let in_re = dp.matmul_bt(&params.w_r)?.add(&dq.matmul_bt(&params.w_i)?)?;
    let in_im = dq.matmul_bt(&params.w_r)?.sub(&dp.matmul_bt(&params.w_i)?)?;

    Ok(FreMlpGrads {
        w_r,
        w_i,
        b_r,
        b_i,
        input: ComplexTensor::new(in_re, in_im)?,
    })
}

fn masked<S: Scalar>(upstream: &RealTensor<S>, pre: &RealTensor<S>, activation: Activation) -> RealTensor<S> {
    match activation {
        Activation::Identity => upstream.clone(),
        Activation::Relu => {
            let mut out = upstream.clone();
            for (g, &p) in out.data_mut().iter_mut().zip(pre.data()) {
                *g = *g * activation.derivative(p);
            }
            out
        }
    }
}

/// Seeded initialization: weights i.i.d. uniform on `[-1/sqrt(d), 1/sqrt(d)]`,
/// biases zero.
pub fn fremlp_init<S: Scalar>(d: usize, seed: u64) -> Result<FreMlpParams<S>> {
    let mut stream = rng::derived(seed, "fremlp-init");
    fremlp_init_from_stream(d, &mut stream)
}

/// Same, drawing from an existing stream (used by whole-model init so one
/// seed fixes every parameter in a documented order).
pub fn fremlp_init_from_stream<S: Scalar>(d: usize, stream: &mut rng::DetRng) -> Result<FreMlpParams<S>> {
    if d == 0 {
        return Err(Error::config("fremlp width must be at least 1"));
    }
    let bound = 1.0 / (d as f64).sqrt();
    let mut draw = |n: usize| -> Vec<S> {
        (0..n)
            .map(|_| scalar_from_f64(rng::uniform(stream, -bound, bound)))
            .collect()
    };
    let w_r = RealTensor::from_vec(&[d, d], draw(d * d))?;
    let w_i = RealTensor::from_vec(&[d, d], draw(d * d))?;
    Ok(FreMlpParams {
        w_r,
        w_i,
        b_r: RealTensor::zeros(&[d]),
        b_i: RealTensor::zeros(&[d]),
    })
}

/// Sequential application of a stack of layers (depth 1 in the default
/// configuration).
pub fn fremlp_stack_forward<S: Scalar>(
    y: &ComplexTensor<S>,
    layers: &[FreMlpParams<S>],
    activation: Activation,
) -> Result<ComplexTensor<S>> {
    if layers.is_empty() {
        return Err(Error::config("fremlp stack needs at least one layer"));
    }
    let mut cur = y.clone();
    for layer in layers {
        cur = fremlp_forward(&cur, layer, activation)?;
    }
    Ok(cur)
}

/// Backward through a stack: re-runs the forward to recover every layer
/// input, then walks the chain in reverse. Returns per-layer gradients
/// (same order as `layers`) and the gradient at the stack input.
pub fn fremlp_stack_backward<S: Scalar>(
    y: &ComplexTensor<S>,
    layers: &[FreMlpParams<S>],
    upstream_re: &RealTensor<S>,
    upstream_im: &RealTensor<S>,
    activation: Activation,
) -> Result<(Vec<FreMlpGrads<S>>, ComplexTensor<S>)> {
    if layers.is_empty() {
        return Err(Error::config("fremlp stack needs at least one layer"));
    }
    let mut inputs = Vec::with_capacity(layers.len());
    let mut cur = y.clone();
    for layer in layers {
        let next = fremlp_forward(&cur, layer, activation)?;
        inputs.push(cur);
        cur = next;
    }

    let mut grads: Vec<FreMlpGrads<S>> = Vec::with_capacity(layers.len());
    let mut up_re = upstream_re.clone();
    let mut up_im = upstream_im.clone();
    for (layer, input) in layers.iter().zip(inputs.iter()).rev() {
        let g = fremlp_backward(input, layer, &up_re, &up_im, activation)?;
        up_re = g.input.re.clone();
        up_im = g.input.im.clone();
        grads.push(g);
    }
    grads.reverse();
    let input_grad = ComplexTensor::new(up_re, up_im)?;
    Ok((grads, input_grad))
}
