//! Euler–Maruyama steps for the position, the scalar and matrix
//! multiplicative functionals and the Jacobian of the flow, and whole-path
//! simulation on top of them.
//!
//! Forward paths solve `dξ = M dw` with left-endpoint coefficients.
//!
//! Reversed paths solve `dξ̂ = M∇M dθ + M dw̃`. The functional carried along
//! a reversed path is the forward functional composed with the inverse
//! flow: the forward increment seen on the reversed clock is `−dw̃` and the
//! coefficients belong to the far end of each step. The scheme therefore
//! evaluates the functional coefficients at the post-move position, feeds
//! them `−dW`, and multiplies matrix factors on the right.

use crate::coeffs::{beta_coeffs, CorrectionSign, Lower2, PointCoeffs};
use crate::error::{Error, Result};
use crate::field::DensityField;
use crate::noise::NoiseStream;
use crate::params::{SktParameters, Species};
use crate::test_fn::TestFunction;

/// One simulated particle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathState {
    pub xi: f64,
    pub eta: f64,
    pub beta: Lower2,
    /// Determinant of the flow Jacobian (a scalar in one dimension).
    pub jac: f64,
    pub theta: f64,
}

impl PathState {
    pub fn start(x: f64) -> Self {
        PathState {
            xi: x,
            eta: 1.0,
            beta: Lower2::IDENTITY,
            jac: 1.0,
            theta: 0.0,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.xi.is_finite()
            && self.eta.is_finite()
            && self.beta.is_finite()
            && self.jac.is_finite()
            && self.theta.is_finite()
    }

    /// `ξ' = ξ + M dW`.
    #[inline]
    pub fn step_forward(self, pc: &PointCoeffs, dtheta: f64, dw: f64) -> Self {
        PathState {
            xi: self.xi + pc.m * dw,
            theta: self.theta + dtheta,
            ..self
        }
    }

    /// `ξ̂' = ξ̂ + M∇M dθ + M dW`.
    #[inline]
    pub fn step_reversed(self, pc: &PointCoeffs, dtheta: f64, dw: f64) -> Self {
        PathState {
            xi: self.xi + pc.m * pc.grad_m * dtheta + pc.m * dw,
            theta: self.theta + dtheta,
            ..self
        }
    }

    /// `η' = η (1 + c̃ dθ + C dW)`.
    #[inline]
    pub fn step_eta(self, pc: &PointCoeffs, dtheta: f64, dw: f64) -> Self {
        PathState {
            eta: self.eta * (1.0 + pc.ctilde * dtheta + pc.ccorr * dw),
            ..self
        }
    }

    /// Exact solution of `dJ = ∇M J dw` over one step with frozen `∇M`.
    #[inline]
    pub fn step_jacobian(self, pc: &PointCoeffs, dtheta: f64, dw: f64) -> Self {
        let g = pc.grad_m;
        PathState {
            jac: self.jac * libm::exp(g * dw - 0.5 * g * g * dtheta),
            ..self
        }
    }

    /// `β' = (I + A dθ + B dW) β` with `(A, B)` from [`beta_coeffs`].
    #[inline]
    pub fn step_beta(self, pc: &PointCoeffs, dtheta: f64, dw: f64) -> Self {
        let (drift, diffusion) = beta_coeffs(pc);
        let factor = Lower2::identity_plus(dtheta, &drift, dw, &diffusion);
        PathState {
            beta: factor.mul(&self.beta),
            ..self
        }
    }

    /// `β' = β (I + A dθ + B dW)`, the factor order of a functional read
    /// backwards in time.
    #[inline]
    pub fn compose_beta(self, pc: &PointCoeffs, dtheta: f64, dw: f64) -> Self {
        let (drift, diffusion) = beta_coeffs(pc);
        let factor = Lower2::identity_plus(dtheta, &drift, dw, &diffusion);
        PathState {
            beta: self.beta.mul(&factor),
            ..self
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Reversed,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Functional<'a> {
    /// Scalar functional `η`.
    Eta,
    /// Matrix functional `β` acting on `(u, ∇u)`.
    Beta,
    /// `γ = η h(ξ) J`; also integrates `(½M²Δh + c h)(ξ) η J dθ`.
    Gamma(&'a TestFunction),
}

/// Supplies the field whose values freeze the coefficients of each step.
pub trait CoefficientSource {
    fn field_for_step(&self, step: usize) -> &DensityField;
}

impl CoefficientSource for DensityField {
    #[inline]
    fn field_for_step(&self, _step: usize) -> &DensityField {
        self
    }
}

/// Time-dependent coefficients read on the reversed clock: a path covering
/// `[0, t_m]` uses, at reversed step `s`, the snapshot that starts the
/// forward layer containing that step.
#[derive(Debug, Clone, Copy)]
pub struct ReversedClock<'a> {
    /// Snapshots at `t_0 .. t_{m-1}`.
    pub layers: &'a [DensityField],
    pub steps_per_layer: usize,
}

impl CoefficientSource for ReversedClock<'_> {
    #[inline]
    fn field_for_step(&self, step: usize) -> &DensityField {
        let back = step / self.steps_per_layer;
        let m = self.layers.len();
        &self.layers[m - 1 - back.min(m - 1)]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathSpec<'a> {
    pub direction: Direction,
    pub functional: Functional<'a>,
    pub species: Species,
    pub start: f64,
    pub horizon: f64,
    pub nsteps: usize,
    pub sign: CorrectionSign,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathOutcome {
    pub state: PathState,
    /// Left-endpoint quadrature of `(½M²Δh + c h)(ξ) η J dθ` (gamma only).
    pub drift_integral: f64,
    pub clamps: u64,
}

impl Default for PathOutcome {
    fn default() -> Self {
        PathOutcome {
            state: PathState::start(0.0),
            drift_integral: 0.0,
            clamps: 0,
        }
    }
}

impl PathOutcome {
    /// `γ(t) = η h(ξ) J` for the gamma functional's test function.
    pub fn gamma(&self, h: &TestFunction) -> f64 {
        self.state.eta * h.value(self.state.xi) * self.state.jac
    }
}

#[inline]
fn coeffs_at(
    params: &SktParameters,
    spec: &PathSpec<'_>,
    field: &DensityField,
    x: f64,
    clamps: &mut u64,
) -> Result<PointCoeffs> {
    PointCoeffs::from_sample(params, spec.species, &field.interpolate(x, clamps), spec.sign)
}

/// Runs `nsteps` Euler steps of size `horizon / nsteps` from `spec.start`.
pub fn simulate_path<S: CoefficientSource + ?Sized>(
    spec: &PathSpec<'_>,
    params: &SktParameters,
    source: &S,
    noise: &mut NoiseStream,
) -> Result<PathOutcome> {
    if spec.nsteps == 0 || !(spec.horizon > 0.0) {
        return Err(Error::InvalidConfig("path needs a positive horizon and at least one step"));
    }
    let dtheta = spec.horizon / spec.nsteps as f64;
    let mut state = PathState::start(spec.start);
    let mut clamps = 0u64;
    let mut integral = 0.0;

    match spec.direction {
        Direction::Forward => {
            for step in 0..spec.nsteps {
                let field = source.field_for_step(step);
                let pc = coeffs_at(params, spec, field, state.xi, &mut clamps)?;
                let dw = noise.increment(dtheta);
                let mut next = state.step_forward(&pc, dtheta, dw);
                match spec.functional {
                    Functional::Eta => {
                        next = next.step_eta(&pc, dtheta, dw).step_jacobian(&pc, dtheta, dw);
                    }
                    Functional::Beta => {
                        next = next.step_beta(&pc, dtheta, dw).step_jacobian(&pc, dtheta, dw);
                    }
                    Functional::Gamma(h) => {
                        let x = state.xi;
                        let generator = 0.5 * pc.m * pc.m * h.laplacian(x) + pc.c * h.value(x);
                        integral += generator * state.eta * state.jac * dtheta;
                        next = next.step_eta(&pc, dtheta, dw).step_jacobian(&pc, dtheta, dw);
                    }
                }
                if !next.is_finite() {
                    return Err(Error::NonFiniteState { step });
                }
                state = next;
            }
        }
        Direction::Reversed => {
            let mut out = [PathOutcome::default(); 1];
            simulate_reversed_batch(spec, params, source, core::slice::from_mut(noise), &mut out)?;
            return Ok(out[0]);
        }
    }

    Ok(PathOutcome {
        state,
        drift_integral: integral,
        clamps,
    })
}

/// Most reversed paths advanced together by [`simulate_reversed_batch`].
pub const LANES: usize = 4;

/// Reversed paths from `spec.start`, one per noise stream, advanced in
/// lockstep so independent paths overlap in the pipeline. Each lane does
/// exactly the arithmetic of a lone path, so results do not depend on the
/// batching.
pub fn simulate_reversed_batch<S: CoefficientSource + ?Sized>(
    spec: &PathSpec<'_>,
    params: &SktParameters,
    source: &S,
    noises: &mut [NoiseStream],
    out: &mut [PathOutcome],
) -> Result<()> {
    let lanes = noises.len();
    assert!(lanes <= LANES && out.len() == lanes, "batch holds at most LANES paths");
    if spec.nsteps == 0 || !(spec.horizon > 0.0) {
        return Err(Error::InvalidConfig("path needs a positive horizon and at least one step"));
    }
    if let Functional::Gamma(_) = spec.functional {
        return Err(Error::InvalidConfig("the gamma functional runs on forward paths"));
    }
    let dtheta = spec.horizon / spec.nsteps as f64;
    let mut state = [PathState::start(spec.start); LANES];
    let mut start_clamps = 0;
    let first = coeffs_at(params, spec, source.field_for_step(0), spec.start, &mut start_clamps)?;
    let mut clamps = [start_clamps; LANES];
    let mut here = [first; LANES];
    for step in 0..spec.nsteps {
        let field = source.field_for_step(step);
        let layer_changed = step > 0 && !core::ptr::eq(field, source.field_for_step(step - 1));
        for l in 0..lanes {
            if layer_changed {
                here[l] = coeffs_at(params, spec, field, state[l].xi, &mut clamps[l])?;
            }
            let dw = noises[l].increment(dtheta);
            let moved = state[l].step_reversed(&here[l], dtheta, dw);
            if !moved.xi.is_finite() {
                return Err(Error::NonFiniteState { step });
            }
            let there = coeffs_at(params, spec, field, moved.xi, &mut clamps[l])?;
            let next = match spec.functional {
                Functional::Eta => moved.step_eta(&there, dtheta, -dw),
                _ => moved.compose_beta(&there, dtheta, -dw),
            };
            if !next.is_finite() {
                return Err(Error::NonFiniteState { step });
            }
            state[l] = next;
            here[l] = there;
        }
    }
    for l in 0..lanes {
        out[l] = PathOutcome {
            state: state[l],
            drift_integral: 0.0,
            clamps: clamps[l],
        };
    }
    Ok(())
}
