use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;

/// `1` if the playcount reaches the threshold `tau`, else `0`.
#[inline]
pub fn binarize<T: Scalar>(playcount: T, tau: T) -> T {
    if playcount >= tau {
        T::one()
    } else {
        T::zero()
    }
}

/// Confidence weight `1 + alpha·ln(1 + playcount/epsilon)`.
#[inline]
pub fn confidence<T: Scalar>(playcount: T, alpha: T, epsilon: T) -> T {
    T::one() + alpha * (playcount / epsilon).ln_1p()
}

/// Constants turning raw playcounts into preference and confidence values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Signal {
    pub tau: f64,
    pub alpha: f64,
    pub epsilon: f64,
}

impl Default for Signal {
    fn default() -> Self {
        Self {
            tau: 7.0,
            alpha: 2.0,
            epsilon: 1e-6,
        }
    }
}

impl Signal {
    #[inline]
    pub fn preference<T: Scalar>(&self, playcount: f64) -> T {
        binarize(T::of(playcount), T::of(self.tau))
    }

    #[inline]
    pub fn confidence<T: Scalar>(&self, playcount: f64) -> T {
        confidence(T::of(playcount), T::of(self.alpha), T::of(self.epsilon))
    }

    #[inline]
    pub fn is_relevant(&self, playcount: f64) -> bool {
        playcount >= self.tau
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn threshold_examples() {
        assert_eq!(binarize(7.0, 7.0), 1.0);
        assert_eq!(binarize(6.0, 7.0), 0.0);
        assert_eq!(binarize(0.0, 7.0), 0.0);
    }

    #[test]
    fn confidence_examples() {
        assert_eq!(confidence(0.0f64, 2.0, 1e-6), 1.0);
        // 1 + 2 ln(1 + 1e6) and 1 + 2 ln(1 + 7e6), evaluated at high precision
        assert!((confidence(1.0f64, 2.0, 1e-6) - 28.631023115927548).abs() < 1e-9);
        assert!((confidence(7.0f64, 2.0, 1e-6) - 32.52284169975344).abs() < 1e-9);
    }

    proptest! {
        #[test]
        fn binarize_is_monotone(a in 0.0f64..100.0, b in 0.0f64..100.0, tau in 1.0f64..20.0) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(binarize(lo, tau) <= binarize(hi, tau));
        }

        #[test]
        fn confidence_strictly_increasing(a in 0.0f64..1e4, d in 1e-3f64..10.0, alpha in 0.1f64..5.0) {
            prop_assert!(confidence(a + d, alpha, 1e-6) > confidence(a, alpha, 1e-6));
            prop_assert!(confidence(a, alpha, 1e-6) >= 1.0);
        }
    }
}
