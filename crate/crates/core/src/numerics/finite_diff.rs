use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Central-difference gradient of `f` at `point`, one coordinate at a time.
pub fn finite_diff_grad<T, F>(mut f: F, point: &[T], h: T) -> Result<Vec<T>>
where
    T: Scalar,
    F: FnMut(&[T]) -> T,
{
    if !(h > T::zero()) {
        return Err(Error::config("finite-difference step must be positive"));
    }
    let mut x = point.to_vec();
    let mut grad = Vec::with_capacity(x.len());
    for j in 0..x.len() {
        let orig = x[j];
        x[j] = orig + h;
        let plus = f(&x);
        x[j] = orig - h;
        let minus = f(&x);
        x[j] = orig;
        if !plus.is_finite() || !minus.is_finite() {
            return Err(Error::NonFinite(format!("function value near coordinate {j}")));
        }
        grad.push((plus - minus) / (h + h));
    }
    Ok(grad)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::sigmoid;

    #[test]
    fn quadratic_constant_and_sigmoid() {
        let g = finite_diff_grad(|x: &[f64]| x.iter().map(|v| v * v).sum(), &[1.0, 2.0], 1e-5).unwrap();
        assert!((g[0] - 2.0).abs() < 1e-8 && (g[1] - 4.0).abs() < 1e-8);
        let g = finite_diff_grad(|_: &[f64]| 3.0, &[1.0, 2.0, 3.0], 1e-5).unwrap();
        assert_eq!(g, vec![0.0; 3]);
        let g = finite_diff_grad(|x: &[f64]| sigmoid(x[0]), &[0.0], 1e-5).unwrap();
        assert!((g[0] - 0.25).abs() < 1e-9);
    }

    #[test]
    fn rejects_nonfinite_and_bad_step() {
        assert!(finite_diff_grad(|x: &[f64]| x[0].ln(), &[0.0], 1e-5).is_err());
        assert!(finite_diff_grad(|x: &[f64]| x[0], &[0.0], 0.0).is_err());
    }
}
