//! Acceptance run: ten criteria, one PASS/FAIL line each. Exits non-zero if
//! any criterion fails.

use std::process::Command;
use std::time::Instant;

use skt::commands::{fd_step_size, initial_field, run_checks, solve_fd, solve_fd_every_step};
use skt::config::{CheckKind, Overrides, RunConfig};
use skt::exec::Pool;
use skt_core::fd::exact_linear;
use skt_core::field::differentiate;
use skt_core::mc::{solve_layered, LayeredSolution};
use skt_core::noise::NoiseStream;
use skt_core::sde::simulate_path;
use skt_core::verify::{pointwise_agreement, weak_residual};
use skt_core::{
    CheckReport, CorrectionSign, Direction, Executor, Functional, PathSpec, PathState, Sequential,
    Species, TestFunction,
};

type Outcome = Result<(bool, String), String>;

fn scenario(name: &str) -> RunConfig {
    RunConfig::parse(&format!("scenario = \"{name}\"\n"), &Overrides::default()).expect("preset parses")
}

fn layered<E: Executor>(cfg: &RunConfig, exec: &E) -> Result<LayeredSolution, String> {
    let initial = initial_field(cfg).map_err(|e| e.to_string())?;
    solve_layered(&initial, &cfg.params, &cfg.solver, exec, &mut |_| {}).map_err(|e| e.to_string())
}

/// Worst pointwise agreement over all snapshots after the first and both
/// species, against the node values `reference(q, k)` of snapshot `k`.
fn agreement_over_layers(
    sol: &LayeredSolution,
    floor: f64,
    reference: impl Fn(Species, usize) -> Vec<f64>,
) -> CheckReport {
    let mut worst: Option<CheckReport> = None;
    for (k, field) in sol.trajectory.fields.iter().enumerate().skip(1) {
        let report = &sol.reports[k - 1];
        for q in Species::BOTH {
            let refv = reference(q, k);
            let r = pointwise_agreement(
                format!("layer {k} species {q}"),
                field.u(q),
                &refv,
                &report.u_stderr[q.index()],
                floor,
            );
            if worst.as_ref().map_or(true, |w| r.statistic > w.statistic) {
                worst = Some(r);
            }
        }
    }
    worst.expect("at least one layer")
}

fn describe(r: &CheckReport) -> String {
    format!(
        "{}: worst error/allowance {:.3}, sup error {:.2e}",
        r.name,
        r.statistic,
        r.detail("sup_error").unwrap_or(f64::NAN)
    )
}

fn linear_oracle(growth: bool) -> Outcome {
    let mut cfg = scenario(if growth { "growth" } else { "linear" });
    cfg.solver.npaths = 100_000;
    let start = Instant::now();
    let sol = layered(&cfg, &Sequential)?;
    let runtime = start.elapsed().as_secs_f64();
    let p = cfg.params;
    let r = agreement_over_layers(&sol, 5e-3, |q, k| {
        let field = &sol.trajectory.fields[k];
        field
            .grid
            .nodes()
            .map(|x| exact_linear(0.0, 1.0, 1.0, p.base_diffusion(q), p.growth(q), field.t, x))
            .collect()
    });
    let mut pass = r.pass;
    let mut text = format!("{}; single-worker solve {runtime:.1} s", describe(&r));
    if growth {
        let mass = sol.trajectory.last().mass(Species::One);
        let expected = (0.25f64).exp();
        let rel = (mass / expected - 1.0).abs();
        pass &= rel <= 1e-2;
        text.push_str(&format!("; mass {mass:.5} vs {expected:.5} (relative {rel:.2e})"));
    }
    Ok((pass, text))
}

fn structural(cross: &RunConfig) -> Outcome {
    let field = initial_field(cross).map_err(|e| e.to_string())?;
    let s = PathState::start(0.3);
    let mut pass = s.eta == 1.0 && s.jac == 1.0 && s.beta.to_array() == [[1.0, 0.0], [0.0, 1.0]];
    let h = TestFunction::gaussian(0.0, 1.0).map_err(|e| e.to_string())?;
    let mut paths = 0u64;
    let mut bad_jac = 0u64;
    let mut bad_beta = 0u64;
    for q in Species::BOTH {
        for (direction, functional) in [
            (Direction::Forward, Functional::Gamma(&h)),
            (Direction::Reversed, Functional::Beta),
        ] {
            for k in 0..21 {
                let spec = PathSpec {
                    direction,
                    functional,
                    species: q,
                    start: -2.0 + 0.2 * k as f64,
                    horizon: cross.verify.t,
                    nsteps: cross.verify.nsteps,
                    sign: CorrectionSign::Plus,
                };
                for path in 0..500u64 {
                    let mut noise = NoiseStream::new(skt_core::noise::derive_seed(&[99, k, path]));
                    let out = simulate_path(&spec, &cross.params, &field, &mut noise).map_err(|e| e.to_string())?;
                    paths += 1;
                    bad_jac += u64::from(!(out.state.jac > 0.0));
                    bad_beta += u64::from(out.state.beta.to_array()[0][1] != 0.0);
                }
            }
        }
    }
    pass &= bad_jac == 0 && bad_beta == 0;
    let mut cfg = cross.clone();
    cfg.verify.checks = vec![CheckKind::FlowMonotonicity];
    let reports = run_checks(&cfg, &Sequential).map_err(|e| e.to_string())?;
    let violations: f64 = reports.iter().map(|r| r.statistic).sum();
    pass &= reports.iter().all(|r| r.pass);
    Ok((
        pass,
        format!(
            "{paths} paths, {bad_jac} nonpositive Jacobians, {bad_beta} nonzero upper entries, \
             {violations} flow order violations"
        ),
    ))
}

fn checks_on(cfg: &RunConfig, kind: CheckKind) -> Result<Vec<CheckReport>, String> {
    let mut cfg = cfg.clone();
    cfg.verify.checks = vec![kind];
    run_checks(&cfg, &Sequential).map_err(|e| e.to_string())
}

fn worst_ratio(reports: &[CheckReport]) -> f64 {
    reports
        .iter()
        .map(|r| r.statistic.abs() / r.tolerance)
        .fold(0.0, f64::max)
}

fn gamma_suite(cfg: &RunConfig) -> Outcome {
    let reports = checks_on(cfg, CheckKind::GammaMartingale)?;
    let passed = reports.iter().filter(|r| r.pass).count();
    Ok((
        reports.len() == 6 && passed == 6,
        format!("{passed}/{} checks pass, worst |statistic|/tolerance {:.3}", reports.len(), worst_ratio(&reports)),
    ))
}

fn duality(linear: &RunConfig, cross: &RunConfig) -> Outcome {
    let mut pass = true;
    let mut text = Vec::new();
    for (label, cfg) in [("constant coefficients", linear), ("cross-diffusion", cross)] {
        let reports = checks_on(cfg, CheckKind::DualityPairing)?;
        pass &= reports.iter().all(|r| r.pass);
        text.push(format!("{label} worst ratio {:.3}", worst_ratio(&reports)));
    }
    Ok((pass, text.join(", ")))
}

fn weak_residual_refinement(linear: &RunConfig, cross: &RunConfig) -> Outcome {
    let mut pass = true;
    let mut text = Vec::new();
    for (label, base) in [("linear", linear), ("cross-diffusion", cross)] {
        let [c, w] = base.verify.weak_test_function;
        let h = TestFunction::gaussian(c, w).map_err(|e| e.to_string())?;
        let initial = initial_field(base).map_err(|e| e.to_string())?;
        let dt_fd = fd_step_size(base, &initial);
        let coarse_step = base.solver.dt / (base.solver.dt / dt_fd * (1.0 - 1e-12)).ceil();
        let mut fine = base.clone();
        fine.grid = base.grid.refined();
        fine.fd.dt = Some(coarse_step / 4.0);
        let coarse_traj = solve_fd_every_step(base).map_err(|e| e.to_string())?;
        let fine_traj = solve_fd_every_step(&fine).map_err(|e| e.to_string())?;
        for q in Species::BOTH {
            let a = weak_residual(&coarse_traj, &base.params, &h, q, f64::INFINITY).statistic.abs();
            let b = weak_residual(&fine_traj, &base.params, &h, q, f64::INFINITY).statistic.abs();
            let ratio = a / b;
            pass &= ratio >= 3.0;
            text.push(format!("{label} species {q}: {a:.2e} -> {b:.2e} (x{ratio:.2})"));
        }
    }
    Ok((pass, text.join(", ")))
}

fn gradient_consistency(cross: &RunConfig, sol: &LayeredSolution) -> Outcome {
    let end = sol.trajectory.last();
    let report = sol.reports.last().expect("layers");
    let n = end.grid.n;
    let mut pass = true;
    let mut text = Vec::new();
    for q in Species::BOTH {
        let du = differentiate(&cross.grid, end.u(q));
        let r = pointwise_agreement(
            format!("species {q}"),
            &end.v(q)[1..n - 1],
            &du[1..n - 1],
            &report.v_stderr[q.index()][1..n - 1],
            5e-2,
        );
        pass &= r.pass;
        text.push(describe(&r));
    }
    Ok((pass, text.join("; ")))
}

fn cli_determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let config = dir.path().join("cross.toml");
    std::fs::write(&config, "scenario = \"cross-diffusion\"\n").map_err(|e| e.to_string())?;
    let mut files = Vec::new();
    for workers in ["1", "8"] {
        let out = dir.path().join(format!("workers-{workers}"));
        let status = Command::new(env!("CARGO_BIN_EXE_skt"))
            .args(["solve-mc", "--config"])
            .arg(&config)
            .arg("--out")
            .arg(&out)
            .args(["--seed", "2024", "--workers", workers])
            .status()
            .map_err(|e| e.to_string())?;
        if !status.success() {
            return Err(format!("solve-mc with {workers} workers exited with {status}"));
        }
        files.push(std::fs::read(out.join("trajectory.csv")).map_err(|e| e.to_string())?);
    }
    Ok((
        files[0] == files[1],
        format!("trajectory.csv {} bytes, identical: {}", files[0].len(), files[0] == files[1]),
    ))
}

fn mutation(cross: &RunConfig) -> Outcome {
    let mut cfg = cross.clone();
    cfg.solver.sign = CorrectionSign::Minus;
    let reports = checks_on(&cfg, CheckKind::GammaMartingale)?;
    let failed = reports.iter().filter(|r| !r.pass).count();
    Ok((
        failed > 0,
        format!(
            "with the flipped sign {failed}/{} gamma checks fail, worst |statistic|/tolerance {:.2}",
            reports.len(),
            worst_ratio(&reports)
        ),
    ))
}

fn main() {
    let linear = scenario("linear");
    let cross = scenario("cross-diffusion");
    let workers = std::thread::available_parallelism().map_or(1, |n| n.get());
    let pool = Pool::new(workers).expect("thread pool");

    let mut cross_solution: Option<LayeredSolution> = None;
    let mut failures = 0;
    let mut run = |n: usize, title: &str, f: &mut dyn FnMut() -> Outcome| {
        let start = Instant::now();
        let outcome = f();
        let secs = start.elapsed().as_secs_f64();
        let (verdict, text) = match outcome {
            Ok((true, text)) => ("PASS", text),
            Ok((false, text)) => ("FAIL", text),
            Err(e) => ("FAIL", format!("error: {e}")),
        };
        if verdict == "FAIL" {
            failures += 1;
        }
        println!("criterion {n:>2} {verdict} {title} [{secs:.1} s]: {text}");
    };

    run(1, "linear oracle", &mut || linear_oracle(false));
    run(2, "growth consistency", &mut || linear_oracle(true));
    run(3, "cross-diffusion oracle", &mut || {
        let mut cfg = cross.clone();
        cfg.solver.npaths = 100_000;
        let sol = layered(&cfg, &pool)?;
        let fd = solve_fd(&cfg).map_err(|e| e.to_string())?;
        let worst = agreement_over_layers(&sol, 2e-2, |q, k| fd.fields[k].u(q).to_vec());
        let fraction = sol.reports.iter().map(|r| r.clamps).sum::<u64>() as f64
            / sol.reports.iter().map(|r| r.lookups).sum::<u64>() as f64;
        let out = (worst.pass, format!("{}; clamp fraction {fraction:.2e}", describe(&worst)));
        cross_solution = Some(sol);
        Ok(out)
    });
    run(4, "structural invariants", &mut || structural(&cross));
    run(5, "gamma martingale suite", &mut || gamma_suite(&cross));
    run(6, "duality pairing", &mut || duality(&linear, &cross));
    run(7, "weak residual refinement", &mut || weak_residual_refinement(&linear, &cross));
    run(8, "gradient representation", &mut || match &cross_solution {
        Some(sol) => gradient_consistency(&cross, sol),
        None => Err("criterion 3 produced no solution".into()),
    });
    run(9, "parallel determinism", &mut || cli_determinism());
    run(10, "mutation sensitivity", &mut || mutation(&cross));

    if failures > 0 {
        println!("{failures} criteria failed");
        std::process::exit(1);
    }
    println!("all criteria passed");
}
