//! Loss and evaluation metrics.

use crate::error::{Error, Result};
use crate::scalar::{scalar_from_usize, Scalar};
use crate::tensor::RealTensor;

/// Forecast quality summary. `rmse >= mae` does not hold in general and is
/// not asserted anywhere.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Metrics<S: Scalar> {
    pub mae: S,
    pub rmse: S,
}

fn check_shapes<S: Scalar>(pred: &RealTensor<S>, target: &RealTensor<S>) -> Result<()> {
    if pred.shape() != target.shape() {
        return Err(Error::dimension(format!(
            "prediction shape {:?} does not match target shape {:?}",
            pred.shape(),
            target.shape()
        )));
    }
    Ok(())
}

/// Mean of squared differences over all entries.
pub fn mse_loss<S: Scalar>(pred: &RealTensor<S>, target: &RealTensor<S>) -> Result<S> {
    check_shapes(pred, target)?;
    let n = scalar_from_usize::<S>(pred.numel());
    let sum: S = pred
        .data()
        .iter()
        .zip(target.data())
        .map(|(&p, &t)| (p - t) * (p - t))
        .sum();
    Ok(sum / n)
}

/// Mean absolute error and root mean squared error.
pub fn mae_rmse<S: Scalar>(pred: &RealTensor<S>, target: &RealTensor<S>) -> Result<Metrics<S>> {
    check_shapes(pred, target)?;
    let n = scalar_from_usize::<S>(pred.numel());
    let mut abs_sum = S::zero();
    let mut sq_sum = S::zero();
    for (&p, &t) in pred.data().iter().zip(target.data()) {
        let d = p - t;
        abs_sum += d.abs();
        sq_sum += d * d;
    }
    Ok(Metrics {
        mae: abs_sum / n,
        rmse: (sq_sum / n).sqrt(),
    })
}
