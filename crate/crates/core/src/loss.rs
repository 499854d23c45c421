//! Masked squared-error loss for the hierarchical head and the one-hot MSE
//! baseline, each with its exact gradient with respect to the raw outputs.
//!
//! Both losses act on post-sigmoid outputs; the chain rule through the
//! output nonlinearity lives in the model.

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum LossError {
    #[error("length mismatch: encoding {enc}, mask {mask}, output {out}")]
    LengthMismatch { enc: usize, mask: usize, out: usize },
    #[error("target index {target} out of range for {classes} classes")]
    IndexOutOfRange { target: usize, classes: usize },
}

/// A loss evaluation: the scalar value and its gradient with respect to the
/// output vector it was evaluated at.
#[derive(Clone, Debug, PartialEq)]
pub struct LossValue {
    pub value: f64,
    pub gradient: Vec<f64>,
}

/// Masked squared error: `Σ_s m_s (e_s - f_s)²` with gradient
/// `2 m_s (f_s - e_s)`. Components outside the mask contribute nothing and
/// receive zero gradient.
pub fn hierarchical_loss(enc: &[f64], mask: &[f64], out: &[f64]) -> Result<LossValue, LossError> {
    if enc.len() != mask.len() || enc.len() != out.len() {
        return Err(LossError::LengthMismatch {
            enc: enc.len(),
            mask: mask.len(),
            out: out.len(),
        });
    }
    let mut value = 0.0;
    let mut gradient = vec![0.0; out.len()];
    for (s, g) in gradient.iter_mut().enumerate() {
        let diff = enc[s] - out[s];
        value += mask[s] * diff * diff;
        *g = 2.0 * mask[s] * -diff;
    }
    Ok(LossValue { value, gradient })
}

/// Flat baseline: squared error against a one-hot target over the labeled
/// classes, `Σ_c (1[c = target] - f_c)²`, gradient `2 (f - onehot)`.
pub fn onehot_loss(target: usize, out: &[f64]) -> Result<LossValue, LossError> {
    if target >= out.len() {
        return Err(LossError::IndexOutOfRange {
            target,
            classes: out.len(),
        });
    }
    let mut value = 0.0;
    let mut gradient = vec![0.0; out.len()];
    for (c, g) in gradient.iter_mut().enumerate() {
        let e = if c == target { 1.0 } else { 0.0 };
        let diff = e - out[c];
        value += diff * diff;
        *g = -2.0 * diff;
    }
    Ok(LossValue { value, gradient })
}
