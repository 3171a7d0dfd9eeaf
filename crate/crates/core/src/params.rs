//! Model constants of the two-species SKT system.

use core::fmt;

use crate::error::{Error, Result};

/// Species label `q`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Species {
    One,
    Two,
}

impl Species {
    pub const BOTH: [Species; 2] = [Species::One, Species::Two];

    pub fn index(self) -> usize {
        match self {
            Species::One => 0,
            Species::Two => 1,
        }
    }

    pub fn other(self) -> Species {
        match self {
            Species::One => Species::Two,
            Species::Two => Species::One,
        }
    }
}

impl fmt::Display for Species {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Species::One => "1",
            Species::Two => "2",
        })
    }
}

/// The twelve constants of
/// `u^q_t = Δ(u^q (d_q + d_q1 u¹ + d_q2 u²)) + u^q (α_q − α_q1 u¹ − α_q2 u²)`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SktParameters {
    pub d1: f64,
    pub d2: f64,
    pub d11: f64,
    pub d12: f64,
    pub d21: f64,
    pub d22: f64,
    pub a1: f64,
    pub a2: f64,
    pub a11: f64,
    pub a12: f64,
    pub a21: f64,
    pub a22: f64,
}

impl SktParameters {
    /// Pure diffusion with rates `d1`, `d2` and no coupling.
    pub fn diffusion_only(d1: f64, d2: f64) -> Self {
        SktParameters {
            d1,
            d2,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (species, value) in [(Species::One, self.d1), (Species::Two, self.d2)] {
            if !(value > 0.0) || !value.is_finite() {
                return Err(Error::NonPositiveDiffusion { species, value });
            }
        }
        let nonnegative = [
            ("d11", self.d11),
            ("d12", self.d12),
            ("d21", self.d21),
            ("d22", self.d22),
            ("a11", self.a11),
            ("a12", self.a12),
            ("a21", self.a21),
            ("a22", self.a22),
        ];
        for (name, value) in nonnegative {
            if !(value >= 0.0) || !value.is_finite() {
                return Err(Error::NegativeRate { name, value });
            }
        }
        for (name, value) in [("a1", self.a1), ("a2", self.a2)] {
            if !value.is_finite() {
                return Err(Error::NegativeRate { name, value });
            }
        }
        Ok(())
    }

    /// `d_q`.
    pub fn base_diffusion(&self, q: Species) -> f64 {
        match q {
            Species::One => self.d1,
            Species::Two => self.d2,
        }
    }

    /// `(d_q1, d_q2)`.
    pub fn cross_diffusion(&self, q: Species) -> (f64, f64) {
        match q {
            Species::One => (self.d11, self.d12),
            Species::Two => (self.d21, self.d22),
        }
    }

    /// `α_q`.
    pub fn growth(&self, q: Species) -> f64 {
        match q {
            Species::One => self.a1,
            Species::Two => self.a2,
        }
    }

    /// `(α_q1, α_q2)`.
    pub fn competition(&self, q: Species) -> (f64, f64) {
        match q {
            Species::One => (self.a11, self.a12),
            Species::Two => (self.a21, self.a22),
        }
    }

    /// True when no coefficient depends on the densities, i.e. both
    /// equations are linear and decoupled.
    pub fn is_density_independent(&self) -> bool {
        [
            self.d11, self.d12, self.d21, self.d22, self.a11, self.a12, self.a21, self.a22,
        ]
        .iter()
        .all(|&r| r == 0.0)
    }

    /// The same model with the roles of the two species exchanged.
    pub fn swapped(&self) -> Self {
        SktParameters {
            d1: self.d2,
            d2: self.d1,
            d11: self.d22,
            d12: self.d21,
            d21: self.d12,
            d22: self.d11,
            a1: self.a2,
            a2: self.a1,
            a11: self.a22,
            a12: self.a21,
            a21: self.a12,
            a22: self.a11,
        }
    }
}
