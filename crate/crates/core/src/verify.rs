//! Executable checks of the weak formulation, the stochastic test-function
//! identity, flow monotonicity, the forward/reversed duality and oracle
//! agreement.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::coeffs::{CorrectionSign, PointCoeffs};
use crate::error::{Error, Result};
use crate::estimator::{combine_stderr, Accumulator};
use crate::field::DensityField;
use crate::mc::{Executor, FieldTrajectory};
use crate::noise::{derive_seed, NoiseStream};
use crate::params::{SktParameters, Species};
use crate::sde::{simulate_path, Direction, Functional, PathSpec};
use crate::test_fn::TestFunction;

/// Outcome of one check. `pass` is always `|statistic| <= tolerance`.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckReport {
    pub name: String,
    pub statistic: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub details: Vec<(String, f64)>,
}

impl CheckReport {
    pub fn new(name: impl Into<String>, statistic: f64, tolerance: f64, details: Vec<(String, f64)>) -> Self {
        CheckReport {
            name: name.into(),
            statistic,
            tolerance,
            pass: statistic.abs() <= tolerance,
            details,
        }
    }

    pub fn detail(&self, key: &str) -> Option<f64> {
        self.details.iter().find(|(k, _)| k == key).map(|&(_, v)| v)
    }
}

/// Monte Carlo settings shared by the path-based checks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CheckConfig {
    pub npaths: u64,
    pub nsteps: usize,
    pub seed: u64,
    pub sign: CorrectionSign,
}

fn inner(field: &DensityField, q: Species, g: impl Fn(usize, f64) -> f64) -> f64 {
    let u = field.u(q);
    (0..field.grid.n)
        .map(|i| field.grid.trapezoid_weight(i) * u[i] * g(i, field.grid.node(i)))
        .sum()
}

/// Weak-form defect `⟨u(T),h⟩ − ⟨u(0),h⟩ − Σ dt ⟨u(t_k), D Δh + c h⟩`
/// (left-rectangle in time, trapezoid in space; `D = ½M²`).
pub fn weak_residual(
    traj: &FieldTrajectory,
    params: &SktParameters,
    h: &TestFunction,
    q: Species,
    tolerance: f64,
) -> CheckReport {
    let (dq1, dq2) = params.cross_diffusion(q);
    let (aq1, aq2) = params.competition(q);
    let first = traj.first();
    let last = traj.last();
    let mut statistic = inner(last, q, |_, x| h.value(x)) - inner(first, q, |_, x| h.value(x));
    for w in traj.fields.windows(2) {
        let (f, dt) = (&w[0], w[1].t - w[0].t);
        let term = inner(f, q, |i, x| {
            let d = params.base_diffusion(q) + dq1 * f.u1[i] + dq2 * f.u2[i];
            let c = params.growth(q) - aq1 * f.u1[i] - aq2 * f.u2[i];
            d * h.laplacian(x) + c * h.value(x)
        });
        statistic -= dt * term;
    }
    CheckReport::new(
        format!("weak_residual[species={q}]"),
        statistic,
        tolerance,
        alloc::vec![("snapshots".into(), traj.len() as f64)],
    )
}

/// Mean over `starts` of `E[γ(t)] − h(y) − E[∫(½M²Δh + c h)(ξ) η J dθ]`
/// along forward paths in the frozen `field`; tolerance is three combined
/// standard errors.
#[allow(clippy::too_many_arguments)]
pub fn gamma_martingale<E: Executor>(
    field: &DensityField,
    params: &SktParameters,
    q: Species,
    h: &TestFunction,
    starts: &[f64],
    t: f64,
    cfg: &CheckConfig,
    exec: &E,
) -> Result<CheckReport> {
    let per_start = exec.map(starts.len(), &|k| {
        let spec = PathSpec {
            direction: Direction::Forward,
            functional: Functional::Gamma(h),
            species: q,
            start: starts[k],
            horizon: t,
            nsteps: cfg.nsteps,
            sign: cfg.sign,
        };
        let mut acc = Accumulator::default();
        let mut clamps = 0;
        for p in 0..cfg.npaths {
            let mut noise = NoiseStream::new(derive_seed(&[cfg.seed, k as u64, p]));
            let out = simulate_path(&spec, params, field, &mut noise)?;
            clamps += out.clamps;
            acc.push(out.gamma(h) - h.value(starts[k]) - out.drift_integral);
        }
        Ok(acc.finish(clamps))
    });
    let per_start = per_start.into_iter().collect::<Result<Vec<_>>>()?;
    let s = starts.len().max(1) as f64;
    let statistic = per_start.iter().map(|r| r.mean).sum::<f64>() / s;
    let stderr = combine_stderr(per_start.iter().map(|r| r.stderr)) / s;
    let clamps: u64 = per_start.iter().map(|r| r.clamps).sum();
    Ok(CheckReport::new(
        format!("gamma_martingale[species={q}]"),
        statistic,
        3.0 * stderr,
        alloc::vec![
            ("stderr".into(), stderr),
            ("starts".into(), starts.len() as f64),
            ("paths".into(), cfg.npaths as f64),
            ("clamps".into(), clamps as f64),
        ],
    ))
}

/// Runs the forward flow from the ordered `starts` with one shared noise
/// path at a time. The statistic counts adjacent pairs whose order is not
/// strictly preserved plus paths whose Jacobian is not positive.
pub fn flow_monotonicity<E: Executor>(
    field: &DensityField,
    params: &SktParameters,
    q: Species,
    starts: &[f64],
    t: f64,
    cfg: &CheckConfig,
    exec: &E,
) -> Result<CheckReport> {
    if starts.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::InvalidConfig("flow starts must be strictly increasing"));
    }
    let counts = exec.map(cfg.npaths as usize, &|p| {
        let seed = derive_seed(&[cfg.seed, p as u64]);
        let mut previous: Option<f64> = None;
        let (mut order, mut jac) = (0u64, 0u64);
        for &y in starts {
            let spec = PathSpec {
                direction: Direction::Forward,
                functional: Functional::Eta,
                species: q,
                start: y,
                horizon: t,
                nsteps: cfg.nsteps,
                sign: cfg.sign,
            };
            let out = simulate_path(&spec, params, field, &mut NoiseStream::new(seed))?;
            if !(out.state.jac > 0.0) {
                jac += 1;
            }
            if let Some(prev) = previous {
                if !(out.state.xi > prev) {
                    order += 1;
                }
            }
            previous = Some(out.state.xi);
        }
        Ok((order, jac))
    });
    let counts = counts.into_iter().collect::<Result<Vec<_>>>()?;
    let order: u64 = counts.iter().map(|c| c.0).sum();
    let jac: u64 = counts.iter().map(|c| c.1).sum();
    Ok(CheckReport::new(
        format!("flow_monotonicity[species={q}]"),
        (order + jac) as f64,
        0.0,
        alloc::vec![
            ("order_violations".into(), order as f64),
            ("nonpositive_jacobians".into(), jac as f64),
            ("starts".into(), starts.len() as f64),
            ("paths".into(), cfg.npaths as f64),
        ],
    ))
}

/// `|A − B|` with `A = Σ wᵢ h(xᵢ) E[η̂ u₀(ξ̂_{xᵢ})]` from reversed paths and
/// `B = Σ wᵢ u₀(yᵢ) E[η h(ξ_{yᵢ}) J]` from forward paths, both over `[0, t]`
/// in the frozen `field` whose own `u` plays `u₀`.
///
/// The tolerance adds to three combined standard errors a bound on the
/// piecewise-linear interpolation of `u₀` at the reversed endpoints.
#[allow(clippy::too_many_arguments)]
pub fn duality_pairing<E: Executor>(
    field: &DensityField,
    params: &SktParameters,
    q: Species,
    h: &TestFunction,
    t: f64,
    cfg: &CheckConfig,
    exec: &E,
) -> Result<CheckReport> {
    let grid = field.grid;
    let n = grid.n;
    let u0 = field.u(q);
    let jobs = exec.map(2 * n, &|j| {
        let (i, reversed) = (j / 2, j % 2 == 1);
        let x = grid.node(i);
        let spec = PathSpec {
            direction: if reversed { Direction::Reversed } else { Direction::Forward },
            functional: Functional::Eta,
            species: q,
            start: x,
            horizon: t,
            nsteps: cfg.nsteps,
            sign: cfg.sign,
        };
        let mut acc = Accumulator::default();
        let mut clamps = 0;
        for p in 0..cfg.npaths {
            let seed = derive_seed(&[cfg.seed, reversed as u64, i as u64, p]);
            let out = simulate_path(&spec, params, field, &mut NoiseStream::new(seed))?;
            clamps += out.clamps;
            let s = out.state;
            acc.push(if reversed {
                s.eta * field.interpolate(s.xi, &mut clamps).u(q)
            } else {
                s.eta * h.value(s.xi) * s.jac
            });
        }
        Ok(acc.finish(clamps))
    });
    let jobs = jobs.into_iter().collect::<Result<Vec<_>>>()?;

    let (mut a, mut b) = (0.0, 0.0);
    let (mut se_a, mut se_b) = (Vec::with_capacity(n), Vec::with_capacity(n));
    let mut weight_sum = 0.0;
    for i in 0..n {
        let w = grid.trapezoid_weight(i);
        let hx = h.value(grid.node(i));
        let (fwd, rev) = (&jobs[2 * i], &jobs[2 * i + 1]);
        a += w * hx * rev.mean;
        se_a.push(w * hx * rev.stderr);
        b += w * u0[i] * fwd.mean;
        se_b.push(w * u0[i] * fwd.stderr);
        weight_sum += (w * hx).abs();
    }
    let stderr = combine_stderr(se_a.into_iter().chain(se_b));

    let dx = grid.dx();
    let curvature = (1..n - 1)
        .map(|i| ((u0[i - 1] - 2.0 * u0[i] + u0[i + 1]) / (dx * dx)).abs())
        .fold(0.0, f64::max);
    let mut growth: f64 = 0.0;
    let mut clamps = 0;
    for i in 0..n {
        let pc = PointCoeffs::from_sample(params, q, &field.interpolate(grid.node(i), &mut clamps), cfg.sign)?;
        growth = growth.max(pc.ctilde.max(0.0));
    }
    let interpolation = dx * dx / 8.0 * curvature * weight_sum * libm::exp(growth * t);
    let clamps: u64 = jobs.iter().map(|r| r.clamps).sum();
    Ok(CheckReport::new(
        format!("duality_pairing[species={q}]"),
        (a - b).abs(),
        3.0 * stderr + interpolation,
        alloc::vec![
            ("reversed_side".into(), a),
            ("forward_side".into(), b),
            ("stderr".into(), stderr),
            ("interpolation_bound".into(), interpolation),
            ("clamps".into(), clamps as f64),
        ],
    ))
}

/// Sup over snapshots, nodes and species of `|u_mc − u_fd|`.
pub fn compare_mc_fd(mc: &FieldTrajectory, fd: &FieldTrajectory, tolerance: f64) -> Result<CheckReport> {
    if mc.len() != fd.len() {
        return Err(Error::GridMismatch);
    }
    let mut sup: f64 = 0.0;
    for (a, b) in mc.fields.iter().zip(&fd.fields) {
        if !a.grid.matches(&b.grid) || (a.t - b.t).abs() > 1e-9 * a.t.abs().max(1.0) {
            return Err(Error::GridMismatch);
        }
        for q in Species::BOTH {
            for (x, y) in a.u(q).iter().zip(b.u(q)) {
                sup = sup.max((x - y).abs());
            }
        }
    }
    Ok(CheckReport::new(
        "compare_mc_fd",
        sup,
        tolerance,
        alloc::vec![("snapshots".into(), mc.len() as f64)],
    ))
}

/// Pointwise agreement with a stderr-aware floor: node `i` passes when
/// `|value − reference| ≤ max(3·stderrᵢ, floor)`. The statistic is the worst
/// ratio of error to allowance, so the check passes when it is at most one.
pub fn pointwise_agreement(
    name: impl Into<String>,
    value: &[f64],
    reference: &[f64],
    stderr: &[f64],
    floor: f64,
) -> CheckReport {
    let mut worst: f64 = 0.0;
    let mut sup: f64 = 0.0;
    for i in 0..value.len() {
        let err = (value[i] - reference[i]).abs();
        sup = sup.max(err);
        worst = worst.max(err / (3.0 * stderr[i]).max(floor));
    }
    CheckReport::new(
        name,
        worst,
        1.0,
        alloc::vec![("sup_error".into(), sup), ("floor".into(), floor)],
    )
}
