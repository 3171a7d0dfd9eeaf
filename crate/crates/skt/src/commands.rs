//! What each subcommand does, independent of argument parsing.

use std::path::Path;
use std::time::Instant;

use serde_json::json;
use skt_core::fd::{cfl_limit, fd_solve};
use skt_core::mc::{solve_layered, solve_picard, LayerReport};
use skt_core::verify::{
    compare_mc_fd, duality_pairing, flow_monotonicity, gamma_martingale, weak_residual, CheckConfig,
};
use skt_core::{
    CheckReport, DensityField, Error, Executor, FieldTrajectory, Species, TestFunction,
};

use crate::config::{CheckKind, Mode, RunConfig};
use crate::output::{layer_json, report_json, write_json, write_trajectory_csv, JsonLines};
use crate::CliError;

pub fn initial_field(cfg: &RunConfig) -> Result<DensityField, CliError> {
    let [p1, p2] = cfg.initial;
    DensityField::from_initial(cfg.grid, |x| p1.eval(x), |x| p2.eval(x)).map_err(CliError::from_core)
}

/// Outcome of a Monte Carlo solve.
#[derive(Debug, Clone)]
pub struct McRun {
    pub trajectory: FieldTrajectory,
    pub reports: Vec<LayerReport>,
    pub picard: Option<(usize, Vec<f64>)>,
}

/// Runs the configured solver. Progress records go to `progress` when given.
pub fn solve_mc<E: Executor>(
    cfg: &RunConfig,
    exec: &E,
    mut progress: Option<&mut JsonLines>,
) -> Result<McRun, CliError> {
    let initial = initial_field(cfg)?;
    let mut sink_error = None;
    let result = match cfg.mode {
        Mode::Layered => {
            let mut cb = |r: &LayerReport| {
                if let Some(p) = progress.as_deref_mut() {
                    if let Err(e) = p.push(&layer_json(r)) {
                        sink_error.get_or_insert(e);
                    }
                }
            };
            solve_layered(&initial, &cfg.params, &cfg.solver, exec, &mut cb).map(|s| McRun {
                trajectory: s.trajectory,
                reports: s.reports,
                picard: None,
            })
        }
        Mode::Picard => {
            let mut cb = |iteration: usize, residual: f64| {
                if let Some(p) = progress.as_deref_mut() {
                    if let Err(e) = p.push(&json!({ "iteration": iteration, "residual": residual })) {
                        sink_error.get_or_insert(e);
                    }
                }
            };
            solve_picard(&initial, &cfg.params, &cfg.solver, exec, &mut cb).map(|s| McRun {
                trajectory: s.trajectory,
                reports: s.reports,
                picard: Some((s.iterations, s.residual_history)),
            })
        }
    };
    if let Some(e) = sink_error {
        return Err(e);
    }
    result.map_err(|e| match e {
        Error::NoConvergence {
            iterations,
            residual,
            ref residual_history,
            ..
        } => CliError::numerical(format!(
            "fixed-point iteration did not converge: {iterations} iterations, residual {residual}, history {residual_history:?}"
        )),
        other => CliError::from_core(other),
    })
}

/// Step of the finite-difference oracle for this configuration.
pub fn fd_step_size(cfg: &RunConfig, initial: &DensityField) -> f64 {
    cfg.fd
        .dt
        .unwrap_or_else(|| cfg.fd.cfl_fraction * cfl_limit(initial, &cfg.params))
}

/// Finite-difference solution with snapshots at the Monte Carlo layer times.
pub fn solve_fd(cfg: &RunConfig) -> Result<FieldTrajectory, CliError> {
    let initial = initial_field(cfg)?;
    let dt = fd_step_size(cfg, &initial);
    fd_solve(&initial, &cfg.params, cfg.solver.t_final, dt, cfg.solver.dt).map_err(CliError::from_core)
}

/// Finite-difference solution with a snapshot after every step.
pub fn solve_fd_every_step(cfg: &RunConfig) -> Result<FieldTrajectory, CliError> {
    let initial = initial_field(cfg)?;
    let dt = fd_step_size(cfg, &initial);
    let per_layer = (cfg.solver.dt / dt * (1.0 - 1e-12)).ceil();
    let step = cfg.solver.dt / per_layer;
    fd_solve(&initial, &cfg.params, cfg.solver.t_final, step, step).map_err(CliError::from_core)
}

fn gaussian([center, width]: [f64; 2]) -> Result<TestFunction, CliError> {
    TestFunction::gaussian(center, width).map_err(CliError::from_core)
}

/// Runs the configured checks in order.
pub fn run_checks<E: Executor>(cfg: &RunConfig, exec: &E) -> Result<Vec<CheckReport>, CliError> {
    let v = &cfg.verify;
    let field = initial_field(cfg)?;
    let check = |npaths: u64, salt: u64| CheckConfig {
        npaths,
        nsteps: v.nsteps,
        seed: skt_core::noise::derive_seed(&[cfg.solver.master_seed, salt]),
        sign: cfg.solver.sign,
    };
    let core = CliError::from_core;
    let mut out = Vec::new();
    for kind in &v.checks {
        match kind {
            CheckKind::WeakResidual => {
                let traj = solve_fd_every_step(cfg)?;
                let h = gaussian(v.weak_test_function)?;
                for q in Species::BOTH {
                    out.push(weak_residual(&traj, &cfg.params, &h, q, v.weak_tolerance));
                }
            }
            CheckKind::GammaMartingale => {
                for (k, &spec) in v.gamma_test_functions.iter().enumerate() {
                    let h = gaussian(spec)?;
                    for q in Species::BOTH {
                        let cc = check(v.gamma_paths, 1 + k as u64);
                        let mut r = gamma_martingale(&field, &cfg.params, q, &h, &[spec[0]], v.t, &cc, exec)
                            .map_err(core)?;
                        r.name = format!("{}[h=gaussian({},{})]", r.name, spec[0], spec[1]);
                        out.push(r);
                    }
                }
            }
            CheckKind::FlowMonotonicity => {
                let [a, b] = v.flow_span;
                let n = v.flow_starts;
                let starts: Vec<f64> = (0..n)
                    .map(|i| if n == 1 { a } else { a + (b - a) * i as f64 / (n - 1) as f64 })
                    .collect();
                for q in Species::BOTH {
                    out.push(
                        flow_monotonicity(&field, &cfg.params, q, &starts, v.t, &check(v.flow_paths, 100), exec)
                            .map_err(core)?,
                    );
                }
            }
            CheckKind::DualityPairing => {
                let h = gaussian(v.duality_test_function)?;
                for q in Species::BOTH {
                    out.push(
                        duality_pairing(&field, &cfg.params, q, &h, v.t, &check(v.duality_paths, 200), exec)
                            .map_err(core)?,
                    );
                }
            }
            CheckKind::CompareMcFd => {
                let mc = solve_mc(cfg, exec, None)?;
                let fd = solve_fd(cfg)?;
                out.push(compare_mc_fd(&mc.trajectory, &fd, v.compare_tolerance).map_err(core)?);
            }
        }
    }
    Ok(out)
}

fn picard_json(picard: &Option<(usize, Vec<f64>)>) -> serde_json::Value {
    match picard {
        Some((iterations, history)) => json!({ "iterations": iterations, "residual_history": history }),
        None => serde_json::Value::Null,
    }
}

fn counters(reports: &[LayerReport]) -> serde_json::Value {
    let clips: u64 = reports.iter().map(|r| r.clips).sum();
    let clamps: u64 = reports.iter().map(|r| r.clamps).sum();
    let lookups: u64 = reports.iter().map(|r| r.lookups).sum();
    json!({
        "clips": clips,
        "clamps": clamps,
        "lookups": lookups,
        "clamp_fraction": if lookups == 0 { 0.0 } else { clamps as f64 / lookups as f64 },
    })
}

fn prepare_out(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir)
        .map_err(|e| CliError::config(format!("cannot create output directory {}: {e}", dir.display())))
}

/// `solve-mc`: trajectory CSV, summary JSON and optional progress lines.
pub fn cmd_solve_mc<E: Executor>(cfg: &RunConfig, exec: &E, workers: usize) -> Result<(), CliError> {
    prepare_out(&cfg.out_dir)?;
    let mut progress = if cfg.progress {
        Some(JsonLines::create(&cfg.out_dir.join("progress.jsonl"))?)
    } else {
        None
    };
    let start = Instant::now();
    let run = solve_mc(cfg, exec, progress.as_mut())?;
    let runtime = start.elapsed().as_secs_f64();
    write_trajectory_csv(&cfg.out_dir.join("trajectory.csv"), &run.trajectory)?;
    let summary = json!({
        "command": "solve-mc",
        "mode": cfg.mode,
        "seed": cfg.solver.master_seed,
        "workers": workers,
        "runtime_seconds": runtime,
        "snapshots": run.trajectory.len(),
        "nodes": cfg.grid.n,
        "counters": counters(&run.reports),
        "picard": picard_json(&run.picard),
        "config": cfg.echo(),
    });
    write_json(&cfg.out_dir.join("summary.json"), &summary)
}

/// `solve-fd`: same outputs from the finite-difference oracle.
pub fn cmd_solve_fd(cfg: &RunConfig) -> Result<(), CliError> {
    prepare_out(&cfg.out_dir)?;
    let start = Instant::now();
    let traj = solve_fd(cfg)?;
    let runtime = start.elapsed().as_secs_f64();
    write_trajectory_csv(&cfg.out_dir.join("trajectory.csv"), &traj)?;
    let initial = initial_field(cfg)?;
    let summary = json!({
        "command": "solve-fd",
        "runtime_seconds": runtime,
        "snapshots": traj.len(),
        "nodes": cfg.grid.n,
        "fd_dt": fd_step_size(cfg, &initial),
        "config": cfg.echo(),
    });
    write_json(&cfg.out_dir.join("summary.json"), &summary)
}

fn write_reports(path: &Path, reports: &[CheckReport]) -> Result<(), CliError> {
    write_json(path, &serde_json::Value::Array(reports.iter().map(report_json).collect()))
}

fn failures(reports: &[CheckReport]) -> Result<(), CliError> {
    let failed: Vec<&str> = reports.iter().filter(|r| !r.pass).map(|r| r.name.as_str()).collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::check(format!("failed checks: {}", failed.join(", "))))
    }
}

/// `verify`: the check suite; `report.json` is written even when checks fail.
pub fn cmd_verify<E: Executor>(cfg: &RunConfig, exec: &E) -> Result<(), CliError> {
    prepare_out(&cfg.out_dir)?;
    let reports = run_checks(cfg, exec)?;
    write_reports(&cfg.out_dir.join("report.json"), &reports)?;
    failures(&reports)
}

/// `compare`: both solvers, both trajectories and the sup-norm comparison.
pub fn cmd_compare<E: Executor>(cfg: &RunConfig, exec: &E) -> Result<(), CliError> {
    prepare_out(&cfg.out_dir)?;
    let mc = solve_mc(cfg, exec, None)?;
    let fd = solve_fd(cfg)?;
    write_trajectory_csv(&cfg.out_dir.join("trajectory_mc.csv"), &mc.trajectory)?;
    write_trajectory_csv(&cfg.out_dir.join("trajectory_fd.csv"), &fd)?;
    let report = compare_mc_fd(&mc.trajectory, &fd, cfg.verify.compare_tolerance).map_err(CliError::from_core)?;
    write_reports(&cfg.out_dir.join("report.json"), std::slice::from_ref(&report))?;
    failures(std::slice::from_ref(&report))
}
