//! Explicit finite-difference reference solver and the closed-form heat
//! solution for decoupled linear data.
//!
//! The scheme shares nothing with the Monte Carlo path code beyond the
//! field container: `u' = u + dt (δ²(uD) + c u)` with reflected ghost nodes.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::field::{normal_density, DensityField};
use crate::mc::FieldTrajectory;
use crate::params::{SktParameters, Species};

/// Largest admissible explicit step, `dx² / (2 max D)`.
pub fn cfl_limit(field: &DensityField, params: &SktParameters) -> f64 {
    let mut max_d: f64 = 0.0;
    for q in Species::BOTH {
        let (dq1, dq2) = params.cross_diffusion(q);
        for i in 0..field.grid.n {
            let d = params.base_diffusion(q) + dq1 * field.u1[i] + dq2 * field.u2[i];
            max_d = max_d.max(d);
        }
    }
    let dx = field.grid.dx();
    dx * dx / (2.0 * max_d)
}

fn species_rhs(field: &DensityField, params: &SktParameters, q: Species) -> Vec<f64> {
    let n = field.grid.n;
    let dx2 = field.grid.dx() * field.grid.dx();
    let (dq1, dq2) = params.cross_diffusion(q);
    let (aq1, aq2) = params.competition(q);
    let u = field.u(q);
    let w: Vec<f64> = (0..n)
        .map(|i| u[i] * (params.base_diffusion(q) + dq1 * field.u1[i] + dq2 * field.u2[i]))
        .collect();
    (0..n)
        .map(|i| {
            let left = if i == 0 { w[1] } else { w[i - 1] };
            let right = if i == n - 1 { w[n - 2] } else { w[i + 1] };
            let c = params.growth(q) - aq1 * field.u1[i] - aq2 * field.u2[i];
            (left - 2.0 * w[i] + right) / dx2 + c * u[i]
        })
        .collect()
}

/// One explicit Euler step of size `dt`.
pub fn fd_step(field: &DensityField, params: &SktParameters, dt: f64) -> Result<DensityField> {
    let admissible = cfl_limit(field, params);
    if !(dt > 0.0) || dt > admissible {
        return Err(Error::CflViolation { dt, admissible });
    }
    let r1 = species_rhs(field, params, Species::One);
    let r2 = species_rhs(field, params, Species::Two);
    let u1: Vec<f64> = field.u1.iter().zip(&r1).map(|(u, r)| u + dt * r).collect();
    let u2: Vec<f64> = field.u2.iter().zip(&r2).map(|(u, r)| u + dt * r).collect();
    DensityField::from_densities(field.grid, field.t + dt, u1, u2)
}

/// Integrates to `t_final`, recording a snapshot every `snapshot_dt`.
///
/// The step actually taken is the largest `snapshot_dt / k` not exceeding
/// `dt_fd`, so snapshots land on exact multiples of `snapshot_dt`.
pub fn fd_solve(
    initial: &DensityField,
    params: &SktParameters,
    t_final: f64,
    dt_fd: f64,
    snapshot_dt: f64,
) -> Result<FieldTrajectory> {
    params.validate()?;
    let start = DensityField {
        t: 0.0,
        ..initial.clone()
    };
    if t_final == 0.0 {
        return FieldTrajectory::new(vec![start]);
    }
    if !(t_final > 0.0) || !(snapshot_dt > 0.0) || !(dt_fd > 0.0) {
        return Err(Error::InvalidConfig("need positive T, snapshot spacing and step"));
    }
    let snapshots = libm::round(t_final / snapshot_dt) as usize;
    if snapshots == 0 || (snapshots as f64 * snapshot_dt - t_final).abs() > 1e-9 * t_final {
        return Err(Error::InvalidConfig("T must be an integer multiple of the snapshot spacing"));
    }
    let per = libm::ceil(snapshot_dt / dt_fd * (1.0 - 1e-12)) as usize;
    let dt = snapshot_dt / per as f64;

    let mut fields = Vec::with_capacity(snapshots + 1);
    fields.push(start);
    let mut current = fields[0].clone();
    for k in 1..=snapshots {
        for _ in 0..per {
            current = fd_step(&current, params, dt)?;
        }
        current.t = k as f64 * snapshot_dt;
        fields.push(current.clone());
    }
    FieldTrajectory::new(fields)
}

/// `e^{αt} · mass · N(x; center, width² + 2dt)`: Gaussian data carried by
/// `u_t = d u'' + α u`.
pub fn exact_linear(center: f64, width: f64, mass: f64, d: f64, alpha: f64, t: f64, x: f64) -> f64 {
    libm::exp(alpha * t) * mass * normal_density(x, center, width * width + 2.0 * d * t)
}
