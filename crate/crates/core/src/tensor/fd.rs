//! Central finite-difference gradient oracle, independent of the tape.

/// Numeric gradient of a scalar function: `(f(x + eps e_i) - f(x - eps e_i)) / 2 eps`
/// per coordinate. `eps` of 1e-5 is appropriate for 64-bit evaluation.
pub fn finite_difference<F>(mut f: F, params: &[f64], eps: f64) -> Vec<f64>
where
    F: FnMut(&[f64]) -> f64,
{
    let mut grad = vec![0.0; params.len()];
    let mut work = params.to_vec();
    for i in 0..params.len() {
        let orig = work[i];
        work[i] = orig + eps;
        let hi = f(&work);
        work[i] = orig - eps;
        let lo = f(&work);
        work[i] = orig;
        grad[i] = (hi - lo) / (2.0 * eps);
    }
    grad
}

/// Numeric derivative of a single coordinate.
pub fn finite_difference_at<F>(mut f: F, params: &[f64], i: usize, eps: f64) -> f64
where
    F: FnMut(&[f64]) -> f64,
{
    let mut work = params.to_vec();
    let orig = work[i];
    work[i] = orig + eps;
    let hi = f(&work);
    work[i] = orig - eps;
    let lo = f(&work);
    (hi - lo) / (2.0 * eps)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_at_three() {
        let g = finite_difference(|p| p[0] * p[0], &[3.0], 1e-5);
        assert!((g[0] - 6.0).abs() < 1e-8);
    }

    #[test]
    fn multivariate() {
        // f(x, y) = x^2 y + sin(y)
        let f = |p: &[f64]| p[0] * p[0] * p[1] + p[1].sin();
        let at = [1.5, -0.7];
        let g = finite_difference(f, &at, 1e-6);
        assert!((g[0] - 2.0 * at[0] * at[1]).abs() < 1e-7);
        assert!((g[1] - (at[0] * at[0] + at[1].cos())).abs() < 1e-7);
    }
}
