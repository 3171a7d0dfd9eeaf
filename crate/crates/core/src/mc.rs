//! Monte Carlo estimation of `(u, ∇u)` from reversed paths carrying the
//! matrix functional, time-layered propagation, and the whole-interval
//! fixed-point closure.

use alloc::boxed::Box;
use alloc::vec;
use alloc::vec::Vec;

use crate::coeffs::CorrectionSign;
use crate::error::{Error, Result};
use crate::estimator::{Accumulator, EstimatorResult};
use crate::field::DensityField;
use crate::noise::{derive_seed, NoiseStream};
use crate::params::{SktParameters, Species};
use crate::sde::{
    simulate_reversed_batch, CoefficientSource, Direction, Functional, PathOutcome, PathSpec, ReversedClock, LANES,
};

const LAYER_STREAM: u64 = 0x4c41_5945_52;
const PICARD_STREAM: u64 = 0x5049_4341_5244;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    /// Paths per grid node and species.
    pub npaths: u64,
    /// Euler steps per time layer.
    pub substeps: usize,
    pub dt: f64,
    pub t_final: f64,
    pub picard_tol: f64,
    pub picard_max: usize,
    pub master_seed: u64,
    pub sign: CorrectionSign,
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.npaths < 1 {
            return Err(Error::InvalidConfig("npaths must be at least 1"));
        }
        if self.substeps < 1 {
            return Err(Error::InvalidConfig("substeps must be at least 1"));
        }
        if !(self.dt > 0.0) || !(self.dt <= self.t_final) || !self.t_final.is_finite() {
            return Err(Error::InvalidConfig("need 0 < dt <= T"));
        }
        if !(self.picard_tol > 0.0) {
            return Err(Error::InvalidConfig("picard_tol must be positive"));
        }
        let ratio = self.t_final / self.dt;
        if (ratio - libm::round(ratio)).abs() > 1e-9 * ratio.max(1.0) {
            return Err(Error::InvalidConfig("T must be an integer multiple of dt"));
        }
        Ok(())
    }

    /// Number of layers `T / dt`.
    pub fn layers(&self) -> usize {
        libm::round(self.t_final / self.dt) as usize
    }
}

/// Snapshots at `0, dt, 2dt, …`.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldTrajectory {
    pub fields: Vec<DensityField>,
}

impl FieldTrajectory {
    pub fn new(fields: Vec<DensityField>) -> Result<Self> {
        if fields.is_empty() {
            return Err(Error::InvalidConfig("trajectory needs at least one snapshot"));
        }
        if fields.iter().any(|f| !f.grid.matches(&fields[0].grid)) {
            return Err(Error::GridMismatch);
        }
        if fields.len() > 1 {
            let dt = fields[1].t - fields[0].t;
            if !(dt > 0.0) {
                return Err(Error::InvalidConfig("snapshot times must increase"));
            }
            for w in fields.windows(2) {
                if ((w[1].t - w[0].t) - dt).abs() > 1e-9 * dt.max(1e-300) + 1e-12 {
                    return Err(Error::InvalidConfig("snapshot spacing must be uniform"));
                }
            }
        }
        Ok(FieldTrajectory { fields })
    }

    pub fn dt(&self) -> f64 {
        if self.fields.len() < 2 {
            0.0
        } else {
            self.fields[1].t - self.fields[0].t
        }
    }

    pub fn first(&self) -> &DensityField {
        &self.fields[0]
    }

    pub fn last(&self) -> &DensityField {
        self.fields.last().expect("trajectory is never empty")
    }

    pub fn len(&self) -> usize {
        self.fields.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fields.is_empty()
    }
}

/// Runs independent jobs and returns their results in job order.
///
/// Implementations may schedule jobs on any number of threads; results must
/// not depend on the schedule.
pub trait Executor: Sync {
    fn map<T: Send>(&self, jobs: usize, f: &(dyn Fn(usize) -> T + Sync)) -> Vec<T>;
}

/// Runs every job on the calling thread.
#[derive(Debug, Clone, Copy, Default)]
pub struct Sequential;

impl Executor for Sequential {
    fn map<T: Send>(&self, jobs: usize, f: &(dyn Fn(usize) -> T + Sync)) -> Vec<T> {
        (0..jobs).map(f).collect()
    }
}

/// Estimates of `u^q(x)` and `∇u^q(x)` at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointEstimate {
    pub u: EstimatorResult,
    pub v: EstimatorResult,
    /// Interpolation lookups made for this point (clamps are counted in `u`).
    pub lookups: u64,
}

/// Monte Carlo representation of `(u, ∇u)(x)` after `horizon`: averages
/// `β̂ · (u, v)(ξ̂)` over reversed paths whose coefficients come from
/// `source` and whose end values are read from `terminal`.
#[allow(clippy::too_many_arguments)]
pub fn estimate_point_with<S: CoefficientSource + ?Sized>(
    params: &SktParameters,
    q: Species,
    x: f64,
    source: &S,
    terminal: &DensityField,
    horizon: f64,
    nsteps: usize,
    npaths: u64,
    sign: CorrectionSign,
    point_seed: u64,
) -> Result<PointEstimate> {
    let spec = PathSpec {
        direction: Direction::Reversed,
        functional: Functional::Beta,
        species: q,
        start: x,
        horizon,
        nsteps,
        sign,
    };
    let mut acc_u = Accumulator::default();
    let mut acc_v = Accumulator::default();
    let mut clamps = 0;
    let mut lookups = 0;
    let mut noises = [NoiseStream::new(0); LANES];
    let mut outs = [PathOutcome::default(); LANES];
    let mut path = 0;
    while path < npaths {
        let lanes = (npaths - path).min(LANES as u64) as usize;
        for (l, noise) in noises.iter_mut().take(lanes).enumerate() {
            *noise = NoiseStream::new(derive_seed(&[point_seed, path + l as u64]));
        }
        simulate_reversed_batch(&spec, params, source, &mut noises[..lanes], &mut outs[..lanes])?;
        for out in &outs[..lanes] {
            clamps += out.clamps;
            lookups += nsteps as u64 + 2;
            let end = terminal.interpolate(out.state.xi, &mut clamps);
            let (u, v) = out.state.beta.apply(end.u(q), end.v(q));
            acc_u.push(u);
            acc_v.push(v);
        }
        path += lanes as u64;
    }
    Ok(PointEstimate {
        u: acc_u.finish(clamps),
        v: acc_v.finish(0),
        lookups,
    })
}

/// [`estimate_point_with`] over one layer of length `dt` with coefficients
/// frozen from `field`.
pub fn estimate_point(
    params: &SktParameters,
    q: Species,
    x: f64,
    field: &DensityField,
    dt: f64,
    cfg: &SolverConfig,
    point_seed: u64,
) -> Result<PointEstimate> {
    estimate_point_with(
        params,
        q,
        x,
        field,
        field,
        dt,
        cfg.substeps,
        cfg.npaths,
        cfg.sign,
        point_seed,
    )
}

/// Diagnostics for one assembled snapshot.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerReport {
    pub index: usize,
    pub t: f64,
    pub min_u: [f64; 2],
    pub max_u: [f64; 2],
    /// Negative `u` estimates set to zero.
    pub clips: u64,
    pub clamps: u64,
    pub lookups: u64,
    /// Per species, per node standard errors of `u` and `v`.
    pub u_stderr: [Vec<f64>; 2],
    pub v_stderr: [Vec<f64>; 2],
}

impl LayerReport {
    pub fn clamp_fraction(&self) -> f64 {
        if self.lookups == 0 {
            0.0
        } else {
            self.clamps as f64 / self.lookups as f64
        }
    }

    pub fn max_u_stderr(&self) -> f64 {
        self.u_stderr
            .iter()
            .flatten()
            .fold(0.0, |a: f64, &b| a.max(b))
    }
}

/// Seed shared by both species at a node, so exchanging the species
/// exchanges the estimates exactly.
fn node_seed(master: u64, stream: u64, time_index: usize, node: usize) -> u64 {
    derive_seed(&[master, stream, time_index as u64, node as u64])
}

fn assemble(
    template: &DensityField,
    index: usize,
    t: f64,
    estimates: &[PointEstimate],
) -> Result<(DensityField, LayerReport)> {
    let n = template.grid.n;
    let mut u = [vec![0.0; n], vec![0.0; n]];
    let mut v = [vec![0.0; n], vec![0.0; n]];
    let mut u_se = [vec![0.0; n], vec![0.0; n]];
    let mut v_se = [vec![0.0; n], vec![0.0; n]];
    let (mut clips, mut clamps, mut lookups) = (0, 0, 0);
    for (j, e) in estimates.iter().enumerate() {
        let (i, s) = (j / 2, j % 2);
        let mut mean = e.u.mean;
        if mean < 0.0 {
            clips += 1;
            mean = 0.0;
        }
        u[s][i] = mean;
        v[s][i] = e.v.mean;
        u_se[s][i] = e.u.stderr;
        v_se[s][i] = e.v.stderr;
        clamps += e.u.clamps;
        lookups += e.lookups;
    }
    let min_max = |a: &[f64]| {
        a.iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)))
    };
    let (lo0, hi0) = min_max(&u[0]);
    let (lo1, hi1) = min_max(&u[1]);
    let [u1, u2] = u;
    let [v1, v2] = v;
    let field = DensityField::new(template.grid, t, u1, u2, v1, v2)?;
    let report = LayerReport {
        index,
        t,
        min_u: [lo0, lo1],
        max_u: [hi0, hi1],
        clips,
        clamps,
        lookups,
        u_stderr: u_se,
        v_stderr: v_se,
    };
    Ok((field, report))
}

/// Advances `field` by one layer `cfg.dt`. `index` is the index of the
/// produced snapshot and enters the noise seeds.
pub fn propagate_layer<E: Executor>(
    field: &DensityField,
    params: &SktParameters,
    cfg: &SolverConfig,
    index: usize,
    exec: &E,
) -> Result<(DensityField, LayerReport)> {
    let grid = field.grid;
    let results = exec.map(grid.n * 2, &|j| {
        let (i, q) = (j / 2, Species::BOTH[j % 2]);
        let seed = node_seed(cfg.master_seed, LAYER_STREAM, index, i);
        estimate_point(params, q, grid.node(i), field, cfg.dt, cfg, seed)
    });
    let estimates = results.into_iter().collect::<Result<Vec<_>>>()?;
    assemble(field, index, index as f64 * cfg.dt, &estimates)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayeredSolution {
    pub trajectory: FieldTrajectory,
    pub reports: Vec<LayerReport>,
}

/// Layer-by-layer solve from `initial` (taken as `t = 0`) to `cfg.t_final`,
/// freezing the coefficients of each layer at its starting snapshot.
pub fn solve_layered<E: Executor>(
    initial: &DensityField,
    params: &SktParameters,
    cfg: &SolverConfig,
    exec: &E,
    progress: &mut dyn FnMut(&LayerReport),
) -> Result<LayeredSolution> {
    params.validate()?;
    cfg.validate()?;
    let mut fields = Vec::with_capacity(cfg.layers() + 1);
    let mut reports = Vec::with_capacity(cfg.layers());
    fields.push(DensityField {
        t: 0.0,
        ..initial.clone()
    });
    for k in 1..=cfg.layers() {
        let (next, report) = propagate_layer(&fields[k - 1], params, cfg, k, exec)?;
        progress(&report);
        fields.push(next);
        reports.push(report);
    }
    Ok(LayeredSolution {
        trajectory: FieldTrajectory::new(fields)?,
        reports,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PicardSolution {
    pub trajectory: FieldTrajectory,
    pub reports: Vec<LayerReport>,
    pub iterations: usize,
    pub residual_history: Vec<f64>,
}

fn sup_difference(a: &FieldTrajectory, b: &FieldTrajectory) -> f64 {
    let mut sup: f64 = 0.0;
    for (fa, fb) in a.fields.iter().zip(&b.fields) {
        for (xa, xb) in [(&fa.u1, &fb.u1), (&fa.u2, &fb.u2), (&fa.v1, &fb.v1), (&fa.v2, &fb.v2)] {
            for (p, q) in xa.iter().zip(xb.iter()) {
                sup = sup.max((p - q).abs());
            }
        }
    }
    sup
}

/// One application of the whole-interval map: every snapshot `t_m` is
/// re-estimated from the initial data along paths of length `t_m` whose
/// coefficients are read from `current` on the reversed clock.
fn picard_map<E: Executor>(
    current: &FieldTrajectory,
    params: &SktParameters,
    cfg: &SolverConfig,
    exec: &E,
) -> Result<(FieldTrajectory, Vec<LayerReport>)> {
    let initial = current.first();
    let n = initial.grid.n;
    let layers = current.len() - 1;
    let jobs = layers * n * 2;
    let results = exec.map(jobs, &|j| {
        let m = j / (2 * n) + 1;
        let rem = j % (2 * n);
        let (i, q) = (rem / 2, Species::BOTH[rem % 2]);
        let clock = ReversedClock {
            layers: &current.fields[..m],
            steps_per_layer: cfg.substeps,
        };
        let seed = node_seed(cfg.master_seed, PICARD_STREAM, m, i);
        estimate_point_with(
            params,
            q,
            initial.grid.node(i),
            &clock,
            initial,
            m as f64 * cfg.dt,
            m * cfg.substeps,
            cfg.npaths,
            cfg.sign,
            seed,
        )
    });
    let estimates = results.into_iter().collect::<Result<Vec<_>>>()?;
    let mut fields = vec![initial.clone()];
    let mut reports = Vec::with_capacity(layers);
    for (k, chunk) in estimates.chunks(2 * n).enumerate() {
        let (field, report) = assemble(initial, k + 1, (k + 1) as f64 * cfg.dt, chunk)?;
        fields.push(field);
        reports.push(report);
    }
    Ok((FieldTrajectory::new(fields)?, reports))
}

/// Fixed-point iteration on the coefficient fields over the whole interval.
///
/// The first iterate holds the initial field constant in time. Common
/// random numbers are used across iterations, so the residual measures the
/// map alone. When no coefficient depends on the densities the map is
/// constant and one application is the fixed point.
pub fn solve_picard<E: Executor>(
    initial: &DensityField,
    params: &SktParameters,
    cfg: &SolverConfig,
    exec: &E,
    progress: &mut dyn FnMut(usize, f64),
) -> Result<PicardSolution> {
    params.validate()?;
    cfg.validate()?;
    let layers = cfg.layers();
    let mut current = FieldTrajectory::new(
        (0..=layers)
            .map(|k| DensityField {
                t: k as f64 * cfg.dt,
                ..initial.clone()
            })
            .collect(),
    )?;
    let mut history = Vec::new();
    let linear = params.is_density_independent();
    for iteration in 1..=cfg.picard_max.max(1) {
        let (next, reports) = picard_map(&current, params, cfg, exec)?;
        let residual = if linear {
            0.0
        } else {
            sup_difference(&next, &current)
        };
        history.push(residual);
        progress(iteration, residual);
        current = next;
        if residual <= cfg.picard_tol {
            return Ok(PicardSolution {
                trajectory: current,
                reports,
                iterations: iteration,
                residual_history: history,
            });
        }
    }
    Err(Error::NoConvergence {
        iterations: history.len(),
        residual: *history.last().unwrap_or(&f64::INFINITY),
        residual_history: history,
        last: Box::new(current),
    })
}
