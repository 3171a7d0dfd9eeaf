//! Run configuration: a TOML file with sections, resolved against the
//! defaults of a named scenario.
//!
//! ```toml
//! scenario = "cross-diffusion"
//!
//! [solver]
//! npaths = 20000
//! seed = 7
//! ```
//!
//! Every key is optional when a preset scenario is named; `custom` starts
//! from the linear defaults but requires `[params] d1, d2` and both initial
//! profiles.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use skt_core::{CorrectionSign, GridSpec, InitialProfile, SktParameters, SolverConfig, TestFunction};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    Linear,
    Growth,
    CrossDiffusion,
    Custom,
}

impl FromStr for Scenario {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        match s {
            "linear" => Ok(Scenario::Linear),
            "growth" => Ok(Scenario::Growth),
            "cross-diffusion" => Ok(Scenario::CrossDiffusion),
            "custom" => Ok(Scenario::Custom),
            other => Err(CliError::config(format!(
                "unknown scenario `{other}` (expected linear, growth, cross-diffusion or custom)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Layered,
    Picard,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckKind {
    WeakResidual,
    GammaMartingale,
    FlowMonotonicity,
    DualityPairing,
    CompareMcFd,
}

impl CheckKind {
    pub const ALL: [CheckKind; 5] = [
        CheckKind::WeakResidual,
        CheckKind::GammaMartingale,
        CheckKind::FlowMonotonicity,
        CheckKind::DualityPairing,
        CheckKind::CompareMcFd,
    ];
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    scenario: Option<String>,
    #[serde(default)]
    params: ParamsSection,
    #[serde(default)]
    grid: GridSection,
    #[serde(default)]
    initial: InitialSection,
    #[serde(default)]
    solver: SolverSection,
    #[serde(default)]
    fd: FdSection,
    #[serde(default)]
    verify: VerifySection,
    #[serde(default)]
    output: OutputSection,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ParamsSection {
    d1: Option<f64>,
    d2: Option<f64>,
    d11: Option<f64>,
    d12: Option<f64>,
    d21: Option<f64>,
    d22: Option<f64>,
    a1: Option<f64>,
    a2: Option<f64>,
    a11: Option<f64>,
    a12: Option<f64>,
    a21: Option<f64>,
    a22: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct GridSection {
    xmin: Option<f64>,
    xmax: Option<f64>,
    n: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct InitialSection {
    u1: Option<String>,
    u2: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct SolverSection {
    npaths: Option<u64>,
    substeps: Option<usize>,
    dt: Option<f64>,
    t_final: Option<f64>,
    picard_tol: Option<f64>,
    picard_max: Option<usize>,
    seed: Option<u64>,
    mode: Option<Mode>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FdSection {
    dt: Option<f64>,
    cfl_fraction: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct VerifySection {
    checks: Option<Vec<CheckKind>>,
    t: Option<f64>,
    nsteps: Option<usize>,
    gamma_paths: Option<u64>,
    gamma_test_functions: Option<Vec<[f64; 2]>>,
    duality_paths: Option<u64>,
    duality_test_function: Option<[f64; 2]>,
    flow_paths: Option<u64>,
    flow_starts: Option<usize>,
    flow_span: Option<[f64; 2]>,
    weak_test_function: Option<[f64; 2]>,
    weak_tolerance: Option<f64>,
    compare_tolerance: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct OutputSection {
    dir: Option<PathBuf>,
    progress: Option<bool>,
}

/// Settings of the verification suite.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifySettings {
    pub checks: Vec<CheckKind>,
    /// Horizon of the frozen-field path checks.
    pub t: f64,
    pub nsteps: usize,
    pub gamma_paths: u64,
    /// `(center, width)`; each path starts at the center of its function.
    pub gamma_test_functions: Vec<[f64; 2]>,
    pub duality_paths: u64,
    pub duality_test_function: [f64; 2],
    pub flow_paths: u64,
    pub flow_starts: usize,
    pub flow_span: [f64; 2],
    pub weak_test_function: [f64; 2],
    pub weak_tolerance: f64,
    pub compare_tolerance: f64,
}

/// Explicit step of the finite-difference oracle: a fixed value, or a
/// fraction of the stability bound of the initial field.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FdSettings {
    pub dt: Option<f64>,
    pub cfl_fraction: f64,
}

/// Fully resolved configuration of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub scenario: Scenario,
    pub params: SktParameters,
    pub grid: GridSpec,
    pub initial: [InitialProfile; 2],
    pub solver: SolverConfig,
    pub mode: Mode,
    pub fd: FdSettings,
    pub verify: VerifySettings,
    pub out_dir: PathBuf,
    pub progress: bool,
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub mode: Option<Mode>,
    pub out_dir: Option<PathBuf>,
    pub flip_correction_sign: bool,
    pub progress: bool,
}

fn cross_diffusion_params() -> SktParameters {
    SktParameters {
        d1: 0.25,
        d2: 0.25,
        d11: 0.05,
        d12: 0.1,
        d21: 0.1,
        d22: 0.05,
        a1: 0.5,
        a2: 0.5,
        a11: 0.25,
        a12: 0.25,
        a21: 0.25,
        a22: 0.25,
    }
}

struct Preset {
    params: SktParameters,
    initial: [&'static str; 2],
    t_final: f64,
    compare_tolerance: f64,
}

fn preset(s: Scenario) -> Preset {
    match s {
        Scenario::Linear | Scenario::Custom => Preset {
            params: SktParameters::diffusion_only(0.5, 1.0),
            initial: ["gaussian(0,1,1)", "gaussian(0,1,1)"],
            t_final: 0.25,
            compare_tolerance: 1e-2,
        },
        Scenario::Growth => Preset {
            params: SktParameters {
                a1: 1.0,
                ..SktParameters::diffusion_only(0.5, 1.0)
            },
            initial: ["gaussian(0,1,1)", "gaussian(0,1,1)"],
            t_final: 0.25,
            compare_tolerance: 1e-2,
        },
        Scenario::CrossDiffusion => Preset {
            params: cross_diffusion_params(),
            initial: ["two-bumps(-1.5,1.5,0.5,1)", "gaussian(0,0.5,1)"],
            t_final: 0.2,
            compare_tolerance: 2e-2,
        },
    }
}

fn parse_profile(text: &str) -> Result<InitialProfile, CliError> {
    text.parse().map_err(|e: skt_core::Error| CliError::config(e.to_string()))
}

impl RunConfig {
    /// Reads and resolves `path`. A missing or malformed file is a
    /// configuration error.
    pub fn load(path: &Path, overrides: &Overrides) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text, overrides)
    }

    pub fn parse(text: &str, overrides: &Overrides) -> Result<Self, CliError> {
        let file: FileConfig =
            toml::from_str(text).map_err(|e| CliError::config(format!("invalid config: {e}")))?;
        let scenario: Scenario = file.scenario.as_deref().unwrap_or("linear").parse()?;
        let pre = preset(scenario);

        if scenario == Scenario::Custom
            && (file.params.d1.is_none()
                || file.params.d2.is_none()
                || file.initial.u1.is_none()
                || file.initial.u2.is_none())
        {
            return Err(CliError::config(
                "scenario `custom` needs [params] d1, d2 and [initial] u1, u2",
            ));
        }

        let fp = &file.params;
        let d = pre.params;
        let params = SktParameters {
            d1: fp.d1.unwrap_or(d.d1),
            d2: fp.d2.unwrap_or(d.d2),
            d11: fp.d11.unwrap_or(d.d11),
            d12: fp.d12.unwrap_or(d.d12),
            d21: fp.d21.unwrap_or(d.d21),
            d22: fp.d22.unwrap_or(d.d22),
            a1: fp.a1.unwrap_or(d.a1),
            a2: fp.a2.unwrap_or(d.a2),
            a11: fp.a11.unwrap_or(d.a11),
            a12: fp.a12.unwrap_or(d.a12),
            a21: fp.a21.unwrap_or(d.a21),
            a22: fp.a22.unwrap_or(d.a22),
        };
        params.validate().map_err(CliError::from_core)?;

        let grid = GridSpec::new(
            file.grid.xmin.unwrap_or(-8.0),
            file.grid.xmax.unwrap_or(8.0),
            file.grid.n.unwrap_or(161),
        )
        .map_err(CliError::from_core)?;

        let initial = [
            parse_profile(file.initial.u1.as_deref().unwrap_or(pre.initial[0]))?,
            parse_profile(file.initial.u2.as_deref().unwrap_or(pre.initial[1]))?,
        ];

        let s = &file.solver;
        let solver = SolverConfig {
            npaths: s.npaths.unwrap_or(10_000),
            substeps: s.substeps.unwrap_or(5),
            dt: s.dt.unwrap_or(0.025),
            t_final: s.t_final.unwrap_or(pre.t_final),
            picard_tol: s.picard_tol.unwrap_or(5e-3),
            picard_max: s.picard_max.unwrap_or(10),
            master_seed: overrides.seed.or(s.seed).unwrap_or(1),
            sign: if overrides.flip_correction_sign {
                CorrectionSign::Minus
            } else {
                CorrectionSign::Plus
            },
        };
        solver.validate().map_err(CliError::from_core)?;

        let fd = FdSettings {
            dt: file.fd.dt,
            cfl_fraction: file.fd.cfl_fraction.unwrap_or(0.5),
        };
        if !(fd.cfl_fraction > 0.0 && fd.cfl_fraction <= 1.0) {
            return Err(CliError::config("fd.cfl_fraction must lie in (0, 1]"));
        }

        let v = file.verify;
        let verify = VerifySettings {
            checks: v.checks.unwrap_or_else(|| CheckKind::ALL.to_vec()),
            t: v.t.unwrap_or(0.05),
            nsteps: v.nsteps.unwrap_or(10),
            gamma_paths: v.gamma_paths.unwrap_or(100_000),
            gamma_test_functions: v
                .gamma_test_functions
                .unwrap_or_else(|| vec![[-2.0, 2.0], [-0.4, 2.0], [0.5, 2.0]]),
            duality_paths: v.duality_paths.unwrap_or(20_000),
            duality_test_function: v.duality_test_function.unwrap_or([0.5, 1.0]),
            flow_paths: v.flow_paths.unwrap_or(1000),
            flow_starts: v.flow_starts.unwrap_or(50),
            flow_span: v.flow_span.unwrap_or([-2.0, 2.0]),
            weak_test_function: v.weak_test_function.unwrap_or([0.5, 1.0]),
            weak_tolerance: v.weak_tolerance.unwrap_or(1e-3),
            compare_tolerance: v.compare_tolerance.unwrap_or(pre.compare_tolerance),
        };
        if !(verify.t > 0.0) || verify.nsteps == 0 || verify.flow_starts == 0 {
            return Err(CliError::config("verify.t, verify.nsteps and verify.flow_starts must be positive"));
        }
        let widths = verify
            .gamma_test_functions
            .iter()
            .chain([&verify.duality_test_function, &verify.weak_test_function]);
        for &[c, w] in widths {
            TestFunction::gaussian(c, w).map_err(CliError::from_core)?;
        }

        Ok(RunConfig {
            scenario,
            params,
            grid,
            initial,
            solver,
            mode: overrides.mode.or(s.mode).unwrap_or(Mode::Layered),
            fd,
            verify,
            out_dir: overrides
                .out_dir
                .clone()
                .or(file.output.dir)
                .unwrap_or_else(|| PathBuf::from("out")),
            progress: overrides.progress || file.output.progress.unwrap_or(false),
        })
    }

    /// The resolved configuration as JSON, for run summaries.
    pub fn echo(&self) -> serde_json::Value {
        let p = &self.params;
        let s = &self.solver;
        serde_json::json!({
            "scenario": self.scenario,
            "params": {
                "d1": p.d1, "d2": p.d2, "d11": p.d11, "d12": p.d12, "d21": p.d21, "d22": p.d22,
                "a1": p.a1, "a2": p.a2, "a11": p.a11, "a12": p.a12, "a21": p.a21, "a22": p.a22,
            },
            "grid": { "xmin": self.grid.xmin, "xmax": self.grid.xmax, "n": self.grid.n },
            "initial": { "u1": self.initial[0].to_string(), "u2": self.initial[1].to_string() },
            "solver": {
                "npaths": s.npaths, "substeps": s.substeps, "dt": s.dt, "t_final": s.t_final,
                "picard_tol": s.picard_tol, "picard_max": s.picard_max, "seed": s.master_seed,
                "mode": self.mode,
                "correction_sign": match s.sign { CorrectionSign::Plus => "plus", CorrectionSign::Minus => "minus" },
            },
            "fd": self.fd,
            "verify": self.verify,
        })
    }
}
