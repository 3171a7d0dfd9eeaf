use crate::error::{Error, Result};

/// Smooth test function with analytic first and second derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TestFunction {
    /// `exp(−(x−center)²/(2·width²))`.
    Gaussian { center: f64, width: f64 },
    Constant(f64),
}

impl TestFunction {
    pub fn gaussian(center: f64, width: f64) -> Result<Self> {
        if !(width > 0.0) || !width.is_finite() {
            return Err(Error::NonPositiveWidth(width));
        }
        Ok(TestFunction::Gaussian { center, width })
    }

    #[inline]
    pub fn value(&self, x: f64) -> f64 {
        match *self {
            TestFunction::Gaussian { center, width } => {
                let z = (x - center) / width;
                libm::exp(-0.5 * z * z)
            }
            TestFunction::Constant(c) => c,
        }
    }

    #[inline]
    pub fn grad(&self, x: f64) -> f64 {
        match *self {
            TestFunction::Gaussian { center, width } => {
                -(x - center) / (width * width) * self.value(x)
            }
            TestFunction::Constant(_) => 0.0,
        }
    }

    #[inline]
    pub fn laplacian(&self, x: f64) -> f64 {
        match *self {
            TestFunction::Gaussian { center, width } => {
                let w2 = width * width;
                let z = x - center;
                (z * z / (w2 * w2) - 1.0 / w2) * self.value(x)
            }
            TestFunction::Constant(_) => 0.0,
        }
    }

    /// Distance from the center beyond which `|h| < 1e-12`; infinite for constants.
    pub fn support_radius(&self) -> f64 {
        match *self {
            TestFunction::Gaussian { width, .. } => width * libm::sqrt(2.0 * 12.0 * core::f64::consts::LN_10),
            TestFunction::Constant(_) => f64::INFINITY,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn standard_gaussian_at_center() {
        let h = TestFunction::gaussian(0.0, 1.0).unwrap();
        assert_eq!(h.value(0.0), 1.0);
        assert_eq!(h.grad(0.0), 0.0);
        assert_eq!(h.laplacian(0.0), -1.0);
    }

    #[test]
    fn zero_width_is_rejected() {
        assert_eq!(
            TestFunction::gaussian(0.0, 0.0),
            Err(Error::NonPositiveWidth(0.0))
        );
    }

    #[test]
    fn support_radius_bounds_the_tail() {
        let h = TestFunction::gaussian(1.0, 0.5).unwrap();
        assert!(h.value(1.0 + h.support_radius()) <= 1.0001e-12);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]
        #[test]
        fn derivatives_match_central_differences(
            center in -3.0f64..3.0, width in 0.3f64..3.0, x in -6.0f64..6.0
        ) {
            let h = TestFunction::gaussian(center, width).unwrap();
            let eps = 1e-5;
            let fd1 = (h.value(x + eps) - h.value(x - eps)) / (2.0 * eps);
            let fd2 = (h.grad(x + eps) - h.grad(x - eps)) / (2.0 * eps);
            // absolute floor covers points where the derivative itself vanishes
            let scale1 = h.grad(x).abs().max(1e-4 / width);
            let scale2 = h.laplacian(x).abs().max(1e-4 / (width * width));
            prop_assert!((fd1 - h.grad(x)).abs() <= 1e-6 * scale1);
            prop_assert!((fd2 - h.laplacian(x)).abs() <= 1e-6 * scale2);
        }
    }
}
