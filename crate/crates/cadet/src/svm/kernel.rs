//! Kernel functions over feature vectors.

use super::SvmError;

/// Kernel choice. The RBF width is expressed through `gamma`:
/// `k(a, b) = exp(-gamma * ||a - b||^2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KernelSpec {
    Linear,
    Rbf { gamma: f64 },
}

impl KernelSpec {
    /// The conventional default width for standardized features:
    /// `gamma = 1 / feature_count`.
    pub fn rbf_for_dimension(feature_count: usize) -> Self {
        KernelSpec::Rbf {
            gamma: 1.0 / feature_count.max(1) as f64,
        }
    }

    pub fn validate(&self) -> Result<(), SvmError> {
        match self {
            KernelSpec::Linear => Ok(()),
            KernelSpec::Rbf { gamma } if gamma.is_finite() && *gamma > 0.0 => Ok(()),
            KernelSpec::Rbf { gamma } => Err(SvmError::InvalidKernel(format!(
                "gamma must be positive and finite, got {gamma}"
            ))),
        }
    }

    /// Kernel value without the dimension check; callers must have
    /// validated that `a` and `b` have equal length.
    pub(crate) fn eval_raw(&self, a: &[f64], b: &[f64]) -> f64 {
        debug_assert_eq!(a.len(), b.len());
        match self {
            KernelSpec::Linear => dot(a, b),
            KernelSpec::Rbf { gamma } => (-gamma * squared_distance(a, b)).exp(),
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let d = x - y;
            d * d
        })
        .sum()
}

/// Evaluate the kernel on two vectors of equal dimension.
pub fn kernel_eval(kernel: &KernelSpec, a: &[f64], b: &[f64]) -> Result<f64, SvmError> {
    kernel.validate()?;
    if a.len() != b.len() {
        return Err(SvmError::DimensionMismatch {
            expected: a.len(),
            found: b.len(),
        });
    }
    Ok(kernel.eval_raw(a, b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn linear_is_the_dot_product() {
        let k = kernel_eval(&KernelSpec::Linear, &[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0]).unwrap();
        assert_eq!(k, 32.0);
    }

    #[test]
    fn rbf_of_identical_points_is_one() {
        let spec = KernelSpec::Rbf { gamma: 0.7 };
        let k = kernel_eval(&spec, &[1.5, -2.0], &[1.5, -2.0]).unwrap();
        assert_eq!(k, 1.0);
    }

    #[test]
    fn rbf_matches_closed_form() {
        // ||a - b||^2 = 1 + 4 = 5, gamma = 0.3
        let spec = KernelSpec::Rbf { gamma: 0.3 };
        let k = kernel_eval(&spec, &[0.0, 0.0], &[1.0, 2.0]).unwrap();
        assert!((k - (-1.5f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        assert!(matches!(
            kernel_eval(&KernelSpec::Linear, &[1.0], &[1.0, 2.0]),
            Err(SvmError::DimensionMismatch { expected: 1, found: 2 })
        ));
    }

    #[test]
    fn nonpositive_gamma_is_rejected() {
        for gamma in [0.0, -1.0, f64::NAN, f64::INFINITY] {
            assert!(matches!(
                kernel_eval(&KernelSpec::Rbf { gamma }, &[1.0], &[2.0]),
                Err(SvmError::InvalidKernel(_))
            ));
        }
    }

    #[test]
    fn default_rbf_width_is_reciprocal_dimension() {
        assert_eq!(
            KernelSpec::rbf_for_dimension(43),
            KernelSpec::Rbf { gamma: 1.0 / 43.0 }
        );
    }

    proptest! {
        #[test]
        fn kernels_are_symmetric(
            a in prop::collection::vec(-1e3f64..1e3, 4),
            b in prop::collection::vec(-1e3f64..1e3, 4),
            gamma in 1e-3f64..10.0,
        ) {
            for spec in [KernelSpec::Linear, KernelSpec::Rbf { gamma }] {
                let kab = kernel_eval(&spec, &a, &b).unwrap();
                let kba = kernel_eval(&spec, &b, &a).unwrap();
                prop_assert_eq!(kab, kba);
            }
        }

        /// Mathematically the value lies in (0, 1], but exp underflows to
        /// exactly 0 for very distant points, so the floor here is 0.
        #[test]
        fn rbf_lies_in_unit_interval(
            a in prop::collection::vec(-1e3f64..1e3, 3),
            b in prop::collection::vec(-1e3f64..1e3, 3),
            gamma in 1e-3f64..10.0,
        ) {
            let k = kernel_eval(&KernelSpec::Rbf { gamma }, &a, &b).unwrap();
            prop_assert!((0.0..=1.0).contains(&k));
        }
    }
}
