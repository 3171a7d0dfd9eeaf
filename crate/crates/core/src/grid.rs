use crate::error::{Error, Result};

/// Uniform 1-D grid `x_i = xmin + i·dx`, `i = 0..n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub xmin: f64,
    pub xmax: f64,
    pub n: usize,
}

impl GridSpec {
    pub fn new(xmin: f64, xmax: f64, n: usize) -> Result<Self> {
        if !xmin.is_finite() || !xmax.is_finite() {
            return Err(Error::InvalidGrid("endpoints must be finite"));
        }
        if !(xmin < xmax) {
            return Err(Error::InvalidGrid("xmin must be below xmax"));
        }
        if n < 3 {
            return Err(Error::InvalidGrid("at least three nodes are required"));
        }
        Ok(GridSpec { xmin, xmax, n })
    }

    #[inline]
    pub fn dx(&self) -> f64 {
        (self.xmax - self.xmin) / (self.n - 1) as f64
    }

    #[inline]
    pub fn node(&self, i: usize) -> f64 {
        self.xmin + i as f64 * self.dx()
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n).map(move |i| self.node(i))
    }

    /// Trapezoid weight of node `i` (includes `dx`).
    #[inline]
    pub fn trapezoid_weight(&self, i: usize) -> f64 {
        if i == 0 || i + 1 == self.n {
            0.5 * self.dx()
        } else {
            self.dx()
        }
    }

    /// Halves the spacing, keeping the endpoints.
    pub fn refined(&self) -> GridSpec {
        GridSpec {
            xmin: self.xmin,
            xmax: self.xmax,
            n: 2 * self.n - 1,
        }
    }

    /// Grids equal up to rounding of the endpoints.
    pub fn matches(&self, other: &GridSpec) -> bool {
        let tol = 1e-12 * (self.xmax - self.xmin).abs().max(1.0);
        self.n == other.n
            && (self.xmin - other.xmin).abs() <= tol
            && (self.xmax - other.xmax).abs() <= tol
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_degenerate_grids() {
        assert!(GridSpec::new(0.0, 0.0, 10).is_err());
        assert!(GridSpec::new(1.0, 0.0, 10).is_err());
        assert!(GridSpec::new(0.0, 1.0, 2).is_err());
    }

    #[test]
    fn nodes_are_uniform() {
        let g = GridSpec::new(-8.0, 8.0, 161).unwrap();
        assert!((g.dx() - 0.1).abs() < 1e-15);
        assert_eq!(g.node(0), -8.0);
        assert!((g.node(160) - 8.0).abs() < 1e-12);
        let w: f64 = (0..g.n).map(|i| g.trapezoid_weight(i)).sum();
        assert!((w - 16.0).abs() < 1e-12);
        assert_eq!(g.refined().n, 321);
    }
}
