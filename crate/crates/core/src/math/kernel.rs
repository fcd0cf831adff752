use serde::{Deserialize, Serialize};

/// Smoothing kernel over quantile levels, supported on [-1, 1].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kernel {
    #[default]
    Epanechnikov,
}

impl Kernel {
    #[inline]
    pub fn eval(self, t: f64) -> f64 {
        match self {
            Kernel::Epanechnikov => {
                if t.abs() <= 1.0 {
                    0.75 * (1.0 - t * t)
                } else {
                    0.0
                }
            }
        }
    }

    pub fn support(self) -> (f64, f64) {
        (-1.0, 1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn zero_outside_support() {
        let k = Kernel::Epanechnikov;
        assert_eq!(k.eval(1.5), 0.0);
        assert_eq!(k.eval(-1.0001), 0.0);
        assert_eq!(k.eval(1.0), 0.0);
        assert_eq!(k.eval(0.0), 0.75);
    }

    proptest! {
        #[test]
        fn symmetric_and_nonnegative(t in -2.0f64..2.0) {
            let k = Kernel::Epanechnikov;
            prop_assert!(k.eval(t) >= 0.0);
            prop_assert_eq!(k.eval(t), k.eval(-t));
        }
    }
}
