//! Frequency-domain MLP forecasting engine.
//!
//! The crate implements the FreTS architecture end to end: dense real/complex
//! tensors, the forward/inverse real FFT used for domain conversion, the
//! complex-weight FreMLP layer with hand-derived gradients, the assembled
//! model (dimension extension, frequency channel/temporal learners,
//! projection FFN), a deterministic Adam training loop with min-max
//! normalization and MAE/RMSE evaluation, dataset windowing and synthesis,
//! and executable verification suites for the energy-preservation and
//! global-convolution properties the design rests on.
//!
//! Numeric kernels ([`tensor`], [`fft`], [`fremlp`], [`metrics`]) are generic
//! over [`scalar::Scalar`]; the model and training layers pin `f64` via the
//! aliases below.

pub mod data;
pub mod error;
pub mod fft;
pub mod fremlp;
pub mod metrics;
pub mod model;
pub mod train;
pub mod verify;
pub mod rng;
pub mod scalar;
pub mod tensor;

pub use error::{Error, Result};

/// Double-precision tensor used by the model and training layers.
pub type TensorF64 = tensor::RealTensor<f64>;
/// Double-precision split-complex tensor.
pub type ComplexTensorF64 = tensor::ComplexTensor<f64>;
/// Single-precision variants, available for callers that trade precision for
/// footprint; the verification tolerances in this crate assume `f64`.
pub type TensorF32 = tensor::RealTensor<f32>;
pub type ComplexTensorF32 = tensor::ComplexTensor<f32>;
