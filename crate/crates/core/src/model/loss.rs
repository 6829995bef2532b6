//! Loss values and their gradients with respect to network outputs.
//!
//! Every log argument is clamped to `[PROB_FLOOR, 1 - PROB_FLOOR]`; outside
//! that band the loss is flat and its gradient is zero.

use crate::error::{Result, SeganError};
use crate::numerics::Matrix;

pub const PROB_FLOOR: f64 = 1e-7;

#[inline]
fn clamp_prob(p: f64) -> (f64, bool) {
    let c = p.clamp(PROB_FLOOR, 1.0 - PROB_FLOOR);
    (c, c == p)
}

/// Masked absolute error `Σ m·|x − x̄|` over observed entries.
pub fn reconstruction_loss(x: &Matrix, x_bar: &Matrix, mask: &Matrix) -> Result<f64> {
    x.ensure_same_shape(x_bar, "reconstruction")?;
    x.ensure_same_shape(mask, "reconstruction mask")?;
    Ok(x.values()
        .iter()
        .zip(x_bar.values())
        .zip(mask.values())
        .map(|((a, b), m)| m * (a - b).abs())
        .sum())
}

/// Gradient of [`reconstruction_loss`] with respect to `x_bar`.
pub fn reconstruction_grad(x: &Matrix, x_bar: &Matrix, mask: &Matrix) -> Matrix {
    let diff = x_bar.sub(x);
    diff.zip_map(mask, |d, m| {
        m * if d > 0.0 {
            1.0
        } else if d < 0.0 {
            -1.0
        } else {
            0.0
        }
    })
}

/// Mean entrywise binary cross-entropy between the mask and the
/// discriminator's probabilities.
pub fn discriminator_loss(mask: &Matrix, m_hat: &Matrix) -> Result<f64> {
    mask.ensure_same_shape(m_hat, "discriminator output")?;
    if mask.is_empty() {
        return Ok(0.0);
    }
    let total: f64 = mask
        .values()
        .iter()
        .zip(m_hat.values())
        .map(|(&m, &p)| {
            let (p, _) = clamp_prob(p);
            -(m * p.ln() + (1.0 - m) * (1.0 - p).ln())
        })
        .sum();
    Ok(total / mask.len() as f64)
}

pub fn discriminator_loss_grad(mask: &Matrix, m_hat: &Matrix) -> Matrix {
    let count = mask.len().max(1) as f64;
    mask.zip_map(m_hat, |m, p| {
        let (c, inside) = clamp_prob(p);
        if inside {
            (-m / c + (1.0 - m) / (1.0 - c)) / count
        } else {
            0.0
        }
    })
}

/// Mean of `log(1 − D)` over the missing entries; 0 when nothing is missing.
pub fn adversarial_loss(mask: &Matrix, d_out: &Matrix) -> Result<f64> {
    mask.ensure_same_shape(d_out, "discriminator output")?;
    let missing = mask.values().iter().filter(|&&m| m == 0.0).count();
    if missing == 0 {
        return Ok(0.0);
    }
    let total: f64 = mask
        .values()
        .iter()
        .zip(d_out.values())
        .filter(|(&m, _)| m == 0.0)
        .map(|(_, &p)| (1.0 - clamp_prob(p).0).ln())
        .sum();
    Ok(total / missing as f64)
}

pub fn adversarial_loss_grad(mask: &Matrix, d_out: &Matrix) -> Matrix {
    let missing = mask.values().iter().filter(|&&m| m == 0.0).count().max(1) as f64;
    mask.zip_map(d_out, |m, p| {
        let (c, inside) = clamp_prob(p);
        if m == 0.0 && inside {
            -1.0 / (1.0 - c) / missing
        } else {
            0.0
        }
    })
}

fn check_labels(labels: &[Option<usize>], probs: &Matrix) -> Result<()> {
    if labels.len() != probs.cols() {
        return Err(SeganError::Shape(format!(
            "{} labels for {} probability columns",
            labels.len(),
            probs.cols()
        )));
    }
    if let Some(y) = labels.iter().flatten().find(|&&y| y >= probs.rows()) {
        return Err(SeganError::Shape(format!(
            "label {y} out of range for {} classes",
            probs.rows()
        )));
    }
    Ok(())
}

/// Mean cross-entropy over the samples that carry a label.
///
/// Returns 0 (and logs a warning) when no sample is labeled.
pub fn classifier_loss(labels: &[Option<usize>], probs: &Matrix) -> Result<f64> {
    check_labels(labels, probs)?;
    let labeled = labels.iter().filter(|y| y.is_some()).count();
    if labeled == 0 {
        log::warn!("classifier loss requested on a batch with no labeled samples");
        return Ok(0.0);
    }
    let total: f64 = labels
        .iter()
        .enumerate()
        .filter_map(|(i, y)| y.map(|y| -clamp_prob(probs.get(y, i)).0.ln()))
        .sum();
    Ok(total / labeled as f64)
}

pub fn classifier_loss_grad(labels: &[Option<usize>], probs: &Matrix) -> Matrix {
    let labeled = labels.iter().filter(|y| y.is_some()).count().max(1) as f64;
    let mut grad = Matrix::zeros(probs.rows(), probs.cols());
    for (i, y) in labels.iter().enumerate() {
        if let Some(y) = *y {
            let (c, inside) = clamp_prob(probs.get(y, i));
            if inside {
                grad.set(y, i, -1.0 / c / labeled);
            }
        }
    }
    grad
}
