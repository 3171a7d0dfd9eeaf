//! Density/gradient snapshots on the grid and the named initial profiles.

use alloc::string::ToString;
use alloc::vec::Vec;
use core::f64::consts::PI;
use core::fmt;
use core::str::FromStr;

use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::params::Species;

/// Values of `(u¹, u², v¹, v²)` at one position.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FieldSample {
    pub u1: f64,
    pub u2: f64,
    pub v1: f64,
    pub v2: f64,
}

impl FieldSample {
    pub fn u(&self, q: Species) -> f64 {
        match q {
            Species::One => self.u1,
            Species::Two => self.u2,
        }
    }

    pub fn v(&self, q: Species) -> f64 {
        match q {
            Species::One => self.v1,
            Species::Two => self.v2,
        }
    }
}

/// A time slice of both densities and their spatial gradients.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityField {
    pub grid: GridSpec,
    pub t: f64,
    pub u1: Vec<f64>,
    pub u2: Vec<f64>,
    pub v1: Vec<f64>,
    pub v2: Vec<f64>,
}

impl DensityField {
    pub fn new(
        grid: GridSpec,
        t: f64,
        u1: Vec<f64>,
        u2: Vec<f64>,
        v1: Vec<f64>,
        v2: Vec<f64>,
    ) -> Result<Self> {
        if [&u1, &u2, &v1, &v2].iter().any(|a| a.len() != grid.n) {
            return Err(Error::InvalidGrid("array length differs from node count"));
        }
        if !(t >= 0.0) || !t.is_finite() {
            return Err(Error::InvalidConfig("time label must be finite and nonnegative"));
        }
        for arr in [&u1, &u2, &v1, &v2] {
            if let Some(node) = arr.iter().position(|x| !x.is_finite()) {
                return Err(Error::NonFiniteField { node });
            }
        }
        for (species, arr) in [(Species::One, &u1), (Species::Two, &u2)] {
            if let Some(node) = arr.iter().position(|&x| x < 0.0) {
                return Err(Error::NegativeInitialData {
                    species,
                    node,
                    value: arr[node],
                });
            }
        }
        Ok(DensityField {
            grid,
            t,
            u1,
            u2,
            v1,
            v2,
        })
    }

    /// Builds a field from nodal densities; gradients by finite differences.
    pub fn from_densities(grid: GridSpec, t: f64, u1: Vec<f64>, u2: Vec<f64>) -> Result<Self> {
        let v1 = differentiate(&grid, &u1);
        let v2 = differentiate(&grid, &u2);
        Self::new(grid, t, u1, u2, v1, v2)
    }

    /// Samples `u1_0`, `u2_0` at the nodes at `t = 0`.
    pub fn from_initial(
        grid: GridSpec,
        u1_0: impl Fn(f64) -> f64,
        u2_0: impl Fn(f64) -> f64,
    ) -> Result<Self> {
        let u1 = grid.nodes().map(&u1_0).collect();
        let u2 = grid.nodes().map(&u2_0).collect();
        Self::from_densities(grid, 0.0, u1, u2)
    }

    pub fn zeros(grid: GridSpec, t: f64) -> Self {
        let z = alloc::vec![0.0; grid.n];
        DensityField {
            grid,
            t,
            u1: z.clone(),
            u2: z.clone(),
            v1: z.clone(),
            v2: z,
        }
    }

    pub fn u(&self, q: Species) -> &[f64] {
        match q {
            Species::One => &self.u1,
            Species::Two => &self.u2,
        }
    }

    pub fn v(&self, q: Species) -> &[f64] {
        match q {
            Species::One => &self.v1,
            Species::Two => &self.v2,
        }
    }

    pub fn node_sample(&self, i: usize) -> FieldSample {
        FieldSample {
            u1: self.u1[i],
            u2: self.u2[i],
            v1: self.v1[i],
            v2: self.v2[i],
        }
    }

    /// Piecewise-linear interpolation of all four arrays. Outside
    /// `[xmin, xmax]` the boundary node is returned and `clamps` is bumped.
    #[inline]
    pub fn interpolate(&self, x: f64, clamps: &mut u64) -> FieldSample {
        let g = &self.grid;
        if x < g.xmin {
            *clamps += 1;
            return self.node_sample(0);
        }
        if x > g.xmax {
            *clamps += 1;
            return self.node_sample(g.n - 1);
        }
        let dx = g.dx();
        let s = ((x - g.xmin) / dx).min((g.n - 1) as f64);
        let i = (s as usize).min(g.n - 2);
        // rounding in `s` must not spoil exactness at the nodes themselves
        let xi = g.xmin + i as f64 * dx;
        if x == xi {
            return self.node_sample(i);
        }
        if x == g.xmin + (i + 1) as f64 * dx {
            return self.node_sample(i + 1);
        }
        let f = s - i as f64;
        let lerp = |a: &[f64]| (1.0 - f) * a[i] + f * a[i + 1];
        FieldSample {
            u1: lerp(&self.u1),
            u2: lerp(&self.u2),
            v1: lerp(&self.v1),
            v2: lerp(&self.v2),
        }
    }

    /// Trapezoid-rule `∫ u^q dx` over the grid.
    pub fn mass(&self, q: Species) -> f64 {
        self.u(q)
            .iter()
            .enumerate()
            .map(|(i, u)| u * self.grid.trapezoid_weight(i))
            .sum()
    }

    /// The same snapshot with the species exchanged.
    pub fn swapped(&self) -> Self {
        DensityField {
            grid: self.grid,
            t: self.t,
            u1: self.u2.clone(),
            u2: self.u1.clone(),
            v1: self.v2.clone(),
            v2: self.v1.clone(),
        }
    }
}

/// Central differences inside, second-order one-sided at the two ends.
pub fn differentiate(grid: &GridSpec, u: &[f64]) -> Vec<f64> {
    let n = u.len();
    let h = grid.dx();
    let mut v = alloc::vec![0.0; n];
    for i in 1..n - 1 {
        v[i] = (u[i + 1] - u[i - 1]) / (2.0 * h);
    }
    v[0] = (-3.0 * u[0] + 4.0 * u[1] - u[2]) / (2.0 * h);
    v[n - 1] = (3.0 * u[n - 1] - 4.0 * u[n - 2] + u[n - 3]) / (2.0 * h);
    v
}

/// Named initial densities accepted in configuration files.
///
/// `gaussian(center,width,mass)` is `mass` times the normal density with
/// standard deviation `width`; `two-bumps(c1,c2,width,mass)` splits `mass`
/// equally between two such bumps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitialProfile {
    Gaussian { center: f64, width: f64, mass: f64 },
    Constant(f64),
    TwoBumps { c1: f64, c2: f64, width: f64, mass: f64 },
}

impl InitialProfile {
    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            InitialProfile::Gaussian {
                center,
                width,
                mass,
            } => mass * normal_density(x, center, width * width),
            InitialProfile::Constant(value) => value,
            InitialProfile::TwoBumps {
                c1,
                c2,
                width,
                mass,
            } => {
                let var = width * width;
                0.5 * mass * (normal_density(x, c1, var) + normal_density(x, c2, var))
            }
        }
    }

    fn validate(self) -> Result<Self> {
        let ok = match self {
            InitialProfile::Gaussian { width, mass, .. }
            | InitialProfile::TwoBumps { width, mass, .. } => width > 0.0 && mass >= 0.0,
            InitialProfile::Constant(v) => v >= 0.0,
        };
        if ok {
            Ok(self)
        } else {
            Err(Error::InvalidConfig(
                "profile needs positive width and nonnegative mass or value",
            ))
        }
    }
}

pub(crate) fn normal_density(x: f64, mean: f64, var: f64) -> f64 {
    let z = x - mean;
    libm::exp(-z * z / (2.0 * var)) / libm::sqrt(2.0 * PI * var)
}

impl FromStr for InitialProfile {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::BadProfile(s.to_string());
        let s_trim = s.trim();
        let open = s_trim.find('(').ok_or_else(bad)?;
        if !s_trim.ends_with(')') {
            return Err(bad());
        }
        let name = s_trim[..open].trim();
        let mut args = [0.0f64; 4];
        let mut count = 0;
        for part in s_trim[open + 1..s_trim.len() - 1].split(',') {
            if count == args.len() {
                return Err(bad());
            }
            args[count] = part.trim().parse().map_err(|_| bad())?;
            count += 1;
        }
        let profile = match (name, count) {
            ("gaussian", 3) => InitialProfile::Gaussian {
                center: args[0],
                width: args[1],
                mass: args[2],
            },
            ("constant", 1) => InitialProfile::Constant(args[0]),
            ("two-bumps", 4) => InitialProfile::TwoBumps {
                c1: args[0],
                c2: args[1],
                width: args[2],
                mass: args[3],
            },
            _ => return Err(bad()),
        };
        profile.validate()
    }
}

impl fmt::Display for InitialProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            InitialProfile::Gaussian {
                center,
                width,
                mass,
            } => write!(f, "gaussian({center},{width},{mass})"),
            InitialProfile::Constant(v) => write!(f, "constant({v})"),
            InitialProfile::TwoBumps {
                c1,
                c2,
                width,
                mass,
            } => write!(f, "two-bumps({c1},{c2},{width},{mass})"),
        }
    }
}
