//! Coefficients of the stochastic system for one species at one point.
//!
//! `M = √(2(d_q + d_q1 u¹ + d_q2 u²))` so that `½M²` is the effective
//! diffusivity, `c = α_q − α_q1 u¹ − α_q2 u²`, and the multiplicative
//! functional uses `c̃ = c + (∇M)²`, `C = −∇M`.

use crate::error::{Error, Result};
use crate::field::{DensityField, FieldSample};
use crate::params::{SktParameters, Species};

/// Sign of the `(∇M)²` correction in `c̃`.
///
/// `Minus` is a deliberate mutation used to show that the martingale check
/// detects the wrong choice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CorrectionSign {
    #[default]
    Plus,
    Minus,
}

impl CorrectionSign {
    #[inline]
    fn factor(self) -> f64 {
        match self {
            CorrectionSign::Plus => 1.0,
            CorrectionSign::Minus => -1.0,
        }
    }
}

/// Lower-triangular 2×2 matrix `[[a11, 0], [a21, a22]]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lower2 {
    pub a11: f64,
    pub a21: f64,
    pub a22: f64,
}

impl Lower2 {
    pub const IDENTITY: Lower2 = Lower2 {
        a11: 1.0,
        a21: 0.0,
        a22: 1.0,
    };
    pub const ZERO: Lower2 = Lower2 {
        a11: 0.0,
        a21: 0.0,
        a22: 0.0,
    };

    #[inline]
    pub fn mul(&self, rhs: &Lower2) -> Lower2 {
        Lower2 {
            a11: self.a11 * rhs.a11,
            a21: self.a21 * rhs.a11 + self.a22 * rhs.a21,
            a22: self.a22 * rhs.a22,
        }
    }

    /// `I + a·self + b·other`.
    #[inline]
    pub fn identity_plus(a: f64, lhs: &Lower2, b: f64, rhs: &Lower2) -> Lower2 {
        Lower2 {
            a11: 1.0 + a * lhs.a11 + b * rhs.a11,
            a21: a * lhs.a21 + b * rhs.a21,
            a22: 1.0 + a * lhs.a22 + b * rhs.a22,
        }
    }

    /// `self · (x, y)ᵀ`.
    #[inline]
    pub fn apply(&self, x: f64, y: f64) -> (f64, f64) {
        (self.a11 * x, self.a21 * x + self.a22 * y)
    }

    pub fn to_array(&self) -> [[f64; 2]; 2] {
        [[self.a11, 0.0], [self.a21, self.a22]]
    }

    pub fn is_finite(&self) -> bool {
        self.a11.is_finite() && self.a21.is_finite() && self.a22.is_finite()
    }
}

/// `k_q1 a1 + k_q2 a2` summed own species first, so that exchanging the
/// species reproduces every coefficient bit for bit.
#[inline]
fn pair(q: Species, (k1, k2): (f64, f64), a1: f64, a2: f64) -> f64 {
    match q {
        Species::One => k1 * a1 + k2 * a2,
        Species::Two => k2 * a2 + k1 * a1,
    }
}

#[inline]
fn radicand(p: &SktParameters, q: Species, u1: f64, u2: f64) -> Result<f64> {
    let r = p.base_diffusion(q) + pair(q, p.cross_diffusion(q), u1, u2);
    if r > 0.0 && r.is_finite() {
        Ok(r)
    } else {
        Err(Error::NonPositiveRadicand(r))
    }
}

/// `M = √(2(d_q + d_q1 u1 + d_q2 u2))`.
#[inline]
pub fn m_coeff(p: &SktParameters, q: Species, u1: f64, u2: f64) -> Result<f64> {
    radicand(p, q, u1, u2).map(|r| libm::sqrt(2.0 * r))
}

/// Spatial derivative of `M` along the field: `(d_q1 v1 + d_q2 v2) / M`.
#[inline]
pub fn grad_m(p: &SktParameters, q: Species, u1: f64, u2: f64, v1: f64, v2: f64) -> Result<f64> {
    let m = m_coeff(p, q, u1, u2)?;
    Ok(pair(q, p.cross_diffusion(q), v1, v2) / m)
}

#[inline]
pub fn c_coeff(p: &SktParameters, q: Species, u1: f64, u2: f64) -> f64 {
    p.growth(q) - pair(q, p.competition(q), u1, u2)
}

#[inline]
pub fn grad_c(p: &SktParameters, q: Species, v1: f64, v2: f64) -> f64 {
    -pair(q, p.competition(q), v1, v2)
}

/// All coefficients of species `q` at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointCoeffs {
    pub m: f64,
    pub grad_m: f64,
    pub c: f64,
    pub grad_c: f64,
    /// `c + (∇M)²`.
    pub ctilde: f64,
    /// `−∇M`.
    pub ccorr: f64,
    /// `d_q1 v¹ + d_q2 v²`, the gradient of the diffusivity.
    pub cross_v: f64,
}

impl PointCoeffs {
    /// Coefficients from already interpolated field values.
    #[inline]
    pub fn from_sample(
        p: &SktParameters,
        q: Species,
        s: &FieldSample,
        sign: CorrectionSign,
    ) -> Result<Self> {
        let m = m_coeff(p, q, s.u1, s.u2)?;
        let cross_v = pair(q, p.cross_diffusion(q), s.v1, s.v2);
        let gm = cross_v / m;
        let c = c_coeff(p, q, s.u1, s.u2);
        Ok(PointCoeffs {
            m,
            grad_m: gm,
            c,
            grad_c: grad_c(p, q, s.v1, s.v2),
            ctilde: c + sign.factor() * gm * gm,
            ccorr: -gm,
            cross_v,
        })
    }

    /// Constant-coefficient bundle with no correction terms (used by tests
    /// and synthetic scenarios).
    pub fn constant(m: f64, c: f64) -> Self {
        PointCoeffs {
            m,
            grad_m: 0.0,
            c,
            grad_c: 0.0,
            ctilde: c,
            ccorr: 0.0,
            cross_v: 0.0,
        }
    }

    /// Squared-gradient correction actually applied, `c̃ − c`.
    #[inline]
    fn correction(&self) -> f64 {
        self.ctilde - self.c
    }
}

/// Interpolates `field` at `x` and evaluates the coefficients there.
pub fn point_coeffs(
    p: &SktParameters,
    q: Species,
    field: &DensityField,
    x: f64,
    clamps: &mut u64,
) -> Result<PointCoeffs> {
    PointCoeffs::from_sample(p, q, &field.interpolate(x, clamps), CorrectionSign::Plus)
}

/// Drift and diffusion matrices of the gradient-augmented functional:
/// drift `[[c̃, 0], [∇c + (∇M)², c̃]]`, diffusion
/// `[[−∇M, 0], [−∇M, cross_v/M − ∇M]]`.
#[inline]
pub fn beta_coeffs(pc: &PointCoeffs) -> (Lower2, Lower2) {
    let drift = Lower2 {
        a11: pc.ctilde,
        a21: pc.grad_c + pc.correction(),
        a22: pc.ctilde,
    };
    let diffusion = Lower2 {
        a11: -pc.grad_m,
        a21: -pc.grad_m,
        a22: pc.cross_v / pc.m - pc.grad_m,
    };
    (drift, diffusion)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSpec;
    use proptest::prelude::*;

    fn params(d1: f64, d11: f64, d12: f64) -> SktParameters {
        SktParameters {
            d11,
            d12,
            ..SktParameters::diffusion_only(d1, 1.0)
        }
    }

    #[test]
    fn m_examples() {
        assert_eq!(m_coeff(&params(0.5, 0.0, 0.0), Species::One, 3.0, 9.0), Ok(1.0));
        assert_eq!(m_coeff(&params(1.0, 1.0, 0.0), Species::One, 1.0, 7.0), Ok(2.0));
        assert!(matches!(
            m_coeff(&params(1.0, 1.0, 0.0), Species::One, -2.0, 0.0),
            Err(Error::NonPositiveRadicand(_))
        ));
    }

    #[test]
    fn grad_m_examples() {
        assert_eq!(grad_m(&params(1.0, 0.0, 0.0), Species::One, 1.0, 1.0, 5.0, -3.0), Ok(0.0));
        assert_eq!(grad_m(&params(1.0, 1.0, 0.0), Species::One, 1.0, 0.0, 2.0, 0.0), Ok(1.0));
    }

    #[test]
    fn c_examples() {
        let zero = SktParameters::diffusion_only(1.0, 1.0);
        assert_eq!(c_coeff(&zero, Species::One, 2.0, 4.0), 0.0);
        assert_eq!(grad_c(&zero, Species::Two, 2.0, 4.0), 0.0);
        let p = SktParameters {
            a1: 1.0,
            a11: 0.5,
            a12: 0.25,
            ..zero
        };
        assert_eq!(c_coeff(&p, Species::One, 2.0, 4.0), -1.0);
        assert_eq!(grad_c(&p, Species::One, 2.0, 4.0), -2.0);
    }

    #[test]
    fn constant_fields_have_no_corrections() {
        let g = GridSpec::new(0.0, 1.0, 11).unwrap();
        let f = DensityField::from_initial(g, |_| 2.0, |_| 3.0).unwrap();
        let p = params(1.0, 0.3, 0.2);
        let mut clamps = 0;
        let pc = point_coeffs(&p, Species::One, &f, 0.37, &mut clamps).unwrap();
        assert_eq!(pc.ctilde, 0.0);
        assert_eq!(pc.ccorr, 0.0);

        let growth = SktParameters {
            a1: 1.0,
            ..SktParameters::diffusion_only(1.0, 1.0)
        };
        let pc = point_coeffs(&growth, Species::One, &f, 0.5, &mut clamps).unwrap();
        assert_eq!(pc.ctilde, 1.0);
        assert_eq!(pc.ccorr, 0.0);
    }

    #[test]
    fn beta_block_reduction() {
        let pc = PointCoeffs::constant(1.3, 0.7);
        let (drift, diff) = beta_coeffs(&pc);
        assert_eq!(drift, Lower2 { a11: 0.7, a21: 0.0, a22: 0.7 });
        assert_eq!(diff, Lower2::ZERO);
    }

    #[test]
    fn beta_diffusion_corner_entry() {
        let pc = PointCoeffs {
            m: 2.0,
            grad_m: 0.5,
            c: 0.0,
            grad_c: 0.0,
            ctilde: 0.25,
            ccorr: -0.5,
            cross_v: 1.0,
        };
        let (_, diff) = beta_coeffs(&pc);
        assert_eq!(diff.a22, 0.0);
        assert_eq!(diff.a11, -0.5);
        assert_eq!(diff.a21, -0.5);
    }

    #[test]
    fn flipped_sign_subtracts_the_correction() {
        let p = params(1.0, 1.0, 0.0);
        let s = FieldSample {
            u1: 1.0,
            u2: 0.0,
            v1: 2.0,
            v2: 0.0,
        };
        let plus = PointCoeffs::from_sample(&p, Species::One, &s, CorrectionSign::Plus).unwrap();
        let minus = PointCoeffs::from_sample(&p, Species::One, &s, CorrectionSign::Minus).unwrap();
        assert_eq!(plus.ctilde, 1.0);
        assert_eq!(minus.ctilde, -1.0);
        assert_eq!(beta_coeffs(&minus).0.a21, -1.0);
    }

    fn smooth_field() -> DensityField {
        let g = GridSpec::new(-6.0, 6.0, 1201).unwrap();
        DensityField::new(
            g,
            0.0,
            g.nodes().map(|x| 1.0 + libm::sin(x)).collect(),
            g.nodes().map(|x| 0.5 + 0.25 * libm::cos(2.0 * x)).collect(),
            g.nodes().map(libm::cos).collect(),
            g.nodes().map(|x| -0.5 * libm::sin(2.0 * x)).collect(),
        )
        .unwrap()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]
        #[test]
        fn half_m_squared_is_the_diffusivity(
            d in 0.01f64..5.0, dq1 in 0.0f64..2.0, dq2 in 0.0f64..2.0,
            u1 in 0.0f64..10.0, u2 in 0.0f64..10.0
        ) {
            let p = SktParameters { d21: dq1, d22: dq2, ..SktParameters::diffusion_only(1.0, d) };
            let m = m_coeff(&p, Species::Two, u1, u2).unwrap();
            let diffusivity = d + dq1 * u1 + dq2 * u2;
            prop_assert!((0.5 * m * m - diffusivity).abs() <= 4.0 * f64::EPSILON * diffusivity);
        }

        #[test]
        fn defining_identities_hold(
            u1 in 0.0f64..4.0, u2 in 0.0f64..4.0, v1 in -3.0f64..3.0, v2 in -3.0f64..3.0,
            a in -1.0f64..1.0
        ) {
            let p = SktParameters { d11: 0.2, d12: 0.4, a1: a, a11: 0.3, a12: 0.1,
                ..SktParameters::diffusion_only(0.5, 1.0) };
            let s = FieldSample { u1, u2, v1, v2 };
            let pc = PointCoeffs::from_sample(&p, Species::One, &s, CorrectionSign::Plus).unwrap();
            prop_assert!((pc.ctilde - pc.c - pc.grad_m * pc.grad_m).abs() <= 1e-15 * (1.0 + pc.c.abs()));
            prop_assert_eq!(pc.ccorr + pc.grad_m, 0.0);
            let (drift, _) = beta_coeffs(&pc);
            prop_assert_eq!(drift.a11, drift.a22);
            prop_assert_eq!(drift.to_array()[0][1], 0.0);
        }

        #[test]
        fn analytic_gradients_match_differences(x in -5.0f64..5.0, species in 0usize..2) {
            let q = Species::BOTH[species];
            let f = smooth_field();
            let p = SktParameters { d11: 0.2, d12: 0.4, d21: 0.3, d22: 0.1, a11: 0.3, a12: 0.1,
                a21: 0.2, a22: 0.5, ..SktParameters::diffusion_only(0.5, 0.7) };
            // analytic fields sampled directly, so only the chain rule is under test
            let at = |x: f64| FieldSample {
                u1: 1.0 + libm::sin(x), u2: 0.5 + 0.25 * libm::cos(2.0 * x),
                v1: libm::cos(x), v2: -0.5 * libm::sin(2.0 * x),
            };
            let eps = 1e-5;
            let m = |x: f64| { let s = at(x); m_coeff(&p, q, s.u1, s.u2).unwrap() };
            let c = |x: f64| { let s = at(x); c_coeff(&p, q, s.u1, s.u2) };
            let s = at(x);
            let gm = grad_m(&p, q, s.u1, s.u2, s.v1, s.v2).unwrap();
            let gc = grad_c(&p, q, s.v1, s.v2);
            let fd_m = (m(x + eps) - m(x - eps)) / (2.0 * eps);
            let fd_c = (c(x + eps) - c(x - eps)) / (2.0 * eps);
            prop_assert!((fd_m - gm).abs() <= 1e-6 * gm.abs().max(1e-3));
            prop_assert!((fd_c - gc).abs() <= 1e-6 * gc.abs().max(1e-3));
            // through the grid interpolant the gradient is second-order accurate
            let mut clamps = 0;
            let pc = point_coeffs(&p, q, &f, x, &mut clamps).unwrap();
            prop_assert!((pc.grad_m - gm).abs() < 1e-3);
        }
    }
}
