use libm::sqrt;

/// Monte Carlo mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimatorResult {
    pub mean: f64,
    /// Sample standard deviation over `√paths`.
    pub stderr: f64,
    pub paths: u64,
    /// Out-of-domain interpolation events seen while producing the samples.
    pub clamps: u64,
}

/// Welford accumulator, fed in a fixed order so results are reproducible.
#[derive(Debug, Clone, Copy, Default)]
pub struct Accumulator {
    n: u64,
    mean: f64,
    m2: f64,
}

impl Accumulator {
    #[inline]
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let delta = x - self.mean;
        self.mean += delta / self.n as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub fn count(&self) -> u64 {
        self.n
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn stderr(&self) -> f64 {
        if self.n < 2 {
            return 0.0;
        }
        let var = (self.m2 / (self.n - 1) as f64).max(0.0);
        sqrt(var / self.n as f64)
    }

    pub fn finish(&self, clamps: u64) -> EstimatorResult {
        EstimatorResult {
            mean: self.mean,
            stderr: self.stderr(),
            paths: self.n,
            clamps,
        }
    }
}

/// `√(Σ sᵢ²)` for independent errors.
pub fn combine_stderr(errors: impl IntoIterator<Item = f64>) -> f64 {
    sqrt(errors.into_iter().map(|s| s * s).sum::<f64>())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_two_pass_formulas() {
        let xs = [1.0, 4.0, 2.5, -3.0, 0.5, 7.25];
        let mut acc = Accumulator::default();
        xs.iter().for_each(|&x| acc.push(x));
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
        let r = acc.finish(3);
        assert!((r.mean - mean).abs() < 1e-14);
        assert!((r.stderr - (var / n).sqrt()).abs() < 1e-14);
        assert_eq!((r.paths, r.clamps), (6, 3));
    }

    #[test]
    fn constant_samples_have_zero_stderr() {
        let mut acc = Accumulator::default();
        (0..10).for_each(|_| acc.push(0.3));
        assert_eq!(acc.stderr(), 0.0);
        assert_eq!(combine_stderr([3.0, 4.0]), 5.0);
    }
}
