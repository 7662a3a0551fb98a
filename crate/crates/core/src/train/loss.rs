//! Binary cross-entropy over a batch of pair probabilities.

use crate::tensor::{ops, Scalar, Tensor, TensorError};

const CLAMP_LO: f64 = 1e-7;

/// Mean of `-[y ln p + (1 - y) ln(1 - p)]`; probabilities are clamped to
/// `[1e-7, 1 - 1e-7]` first. Terms are summed in batch order.
pub fn bce_loss<T: Scalar>(
    predictions: &[Tensor<T>],
    labels: &[u8],
) -> Result<Tensor<T>, TensorError> {
    assert_eq!(predictions.len(), labels.len(), "one label per prediction");
    assert!(!predictions.is_empty(), "bce over an empty batch");
    let lo = T::from_f64(CLAMP_LO);
    let hi = T::one() - lo;
    let mut total: Option<Tensor<T>> = None;
    for (p, &y) in predictions.iter().zip(labels) {
        let p = ops::clamp(p, lo, hi);
        let term = if y == 1 {
            ops::neg(&ops::ln(&p))
        } else {
            ops::neg(&ops::ln(&ops::add_scalar(&ops::neg(&p), T::one())))
        };
        total = Some(match total {
            None => term,
            Some(acc) => ops::add(&acc, &term)?,
        });
    }
    let n = T::from_f64(predictions.len() as f64);
    Ok(ops::scale(&total.expect("non-empty batch"), T::one() / n))
}

/// Plain-float counterpart used in evaluation paths.
pub fn bce_scalar(p: f64, label: u8) -> f64 {
    let p = p.clamp(CLAMP_LO, 1.0 - CLAMP_LO);
    if label == 1 {
        -p.ln()
    } else {
        -(1.0 - p).ln()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::Tape;

    #[test]
    fn half_probability_gives_ln_two() {
        let preds = vec![Tensor::<f64>::scalar(0.5)];
        for y in [0u8, 1u8] {
            let loss = bce_loss(&preds, &[y]).unwrap();
            assert!((loss.item() - std::f64::consts::LN_2).abs() < 1e-12);
        }
    }

    #[test]
    fn perfect_predictions_have_tiny_loss() {
        let loss = bce_loss(
            &[Tensor::<f64>::scalar(1.0), Tensor::<f64>::scalar(0.0)],
            &[1, 0],
        )
        .unwrap();
        assert!(loss.item() < 1e-6);
    }

    #[test]
    fn gradient_at_half_is_minus_two() {
        // dL/dp of -ln(p) at p = 0.5
        let tape: Tape<f64> = Tape::new();
        let p = tape.watch(&Tensor::scalar(0.5));
        let loss = bce_loss(&[p.clone()], &[1]).unwrap();
        tape.backward(&loss).unwrap();
        assert!((tape.grad(&p).unwrap().item() + 2.0).abs() < 1e-12);
    }

    #[test]
    fn mean_over_batch() {
        let preds = vec![Tensor::<f64>::scalar(0.5), Tensor::<f64>::scalar(0.5)];
        let loss = bce_loss(&preds, &[1, 0]).unwrap();
        assert!((loss.item() - std::f64::consts::LN_2).abs() < 1e-12);
    }
}
