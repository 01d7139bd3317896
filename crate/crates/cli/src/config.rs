//! Run configuration: a TOML file with nested sections for the grid, time
//! horizon, phase materials, initial data, solver and norm knobs, and
//! output options. Validation reports every violation, not just the first.

use serde::{Deserialize, Serialize};
use std::path::Path;

use interflow::constitutive::{PhasePair, ViscosityModel};
use interflow::fixedpoint::SolveConfig;
use interflow::geometry::HeightField;
use interflow::grid::{Rank, StripGrid, TimeGrid, TwoPhaseField};
use interflow::norms::NormConfig;

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub grid: GridConfig,
    pub time: TimeConfig,
    pub phase: PhaseTable,
    pub sigma: f64,
    pub gamma_a: f64,
    pub initial: InitialConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    pub norms: NormsConfig,
    pub output: OutputConfig,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    #[serde(default = "default_dim")]
    pub dim: usize,
    pub n_h: usize,
    pub n_v: usize,
    pub l_h: f64,
    pub l_v: f64,
}

fn default_dim() -> usize {
    2
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct TimeConfig {
    pub horizon: f64,
    pub n_t: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct PhaseTable {
    #[serde(rename = "1")]
    pub one: PhaseConfig,
    #[serde(rename = "2")]
    pub two: PhaseConfig,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct PhaseConfig {
    pub rho: f64,
    pub viscosity: ViscosityConfig,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ViscosityConfig {
    /// "power-sum" | "power-shift" | "newtonian" | "table"
    pub family: String,
    #[serde(default)]
    pub nu: Option<f64>,
    #[serde(default)]
    pub d: Option<f64>,
    #[serde(default)]
    pub s: Option<Vec<f64>>,
    #[serde(default)]
    pub mu: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct InitialConfig {
    pub h0: HeightSpec,
    #[serde(default)]
    pub u0: VelocitySpec,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct HeightSpec {
    /// "zero" | "sine" | "fourier"
    pub kind: String,
    #[serde(default)]
    pub amplitude: Option<f64>,
    #[serde(default)]
    pub mode: Option<i64>,
    /// Rows `[mode, cos_coeff, sin_coeff]` for kind = "fourier".
    #[serde(default)]
    pub modes: Option<Vec<[f64; 3]>>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct VelocitySpec {
    /// "zero" | "modes"
    #[serde(default = "default_u0_kind")]
    pub kind: String,
    /// Rows `[component, mode, cos_coeff, sin_coeff]`; each mode rides a
    /// smooth vertical bump vanishing at the far fields.
    #[serde(default)]
    pub modes: Option<Vec<[f64; 4]>>,
}

fn default_u0_kind() -> String {
    "zero".to_string()
}

impl Default for VelocitySpec {
    fn default() -> Self {
        Self { kind: default_u0_kind(), modes: None }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    pub max_iter: usize,
    pub tol: f64,
    pub delta0_guard: f64,
    pub compat_tol: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self { max_iter: 25, tol: 1e-9, delta0_guard: 1e3, compat_tol: 1e-8 }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct NormsConfig {
    pub p: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: String,
    /// Velocity snapshots every `cadence` time nodes.
    #[serde(default = "default_cadence")]
    pub cadence: usize,
    #[serde(default = "default_formats")]
    pub formats: Vec<String>,
}

fn default_cadence() -> usize {
    1
}

fn default_formats() -> Vec<String> {
    vec!["tsv".to_string()]
}

/// Parse and validate a configuration file; every violated rule is listed.
pub fn load_config(path: &Path) -> Result<RunConfig, Vec<String>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| vec![format!("cannot read {}: {e}", path.display())])?;
    let cfg: RunConfig = toml::from_str(&text).map_err(|e| vec![format!("parse error: {e}")])?;
    let violations = validate(&cfg);
    if violations.is_empty() {
        Ok(cfg)
    } else {
        Err(violations)
    }
}

/// Collect all constraint violations of a parsed configuration.
pub fn validate(cfg: &RunConfig) -> Vec<String> {
    let mut errs = Vec::new();
    let g = &cfg.grid;
    if g.dim != 2 && g.dim != 3 {
        errs.push(format!("grid.dim must be 2 or 3, got {}", g.dim));
    }
    if g.n_h < 8 || g.n_h % 2 != 0 {
        errs.push(format!("grid.n_h must be even and >= 8, got {}", g.n_h));
    }
    if g.n_v < 8 {
        errs.push(format!("grid.n_v must be >= 8, got {}", g.n_v));
    }
    if !(g.l_h > 0.0) {
        errs.push(format!("grid.l_h must be positive, got {}", g.l_h));
    }
    if !(g.l_v > 0.0) {
        errs.push(format!("grid.l_v must be positive, got {}", g.l_v));
    }
    if !(cfg.time.horizon > 0.0) {
        errs.push(format!("time.horizon must be positive, got {}", cfg.time.horizon));
    }
    if cfg.time.n_t < 1 {
        errs.push("time.n_t must be >= 1".into());
    }
    for (label, ph) in [("phase.1", &cfg.phase.one), ("phase.2", &cfg.phase.two)] {
        if !(ph.rho > 0.0) {
            errs.push(format!("{label}.rho must be positive, got {}", ph.rho));
        }
        if let Err(e) = build_viscosity(&ph.viscosity) {
            errs.push(format!("{label}.viscosity: {e}"));
        }
    }
    if !(cfg.sigma > 0.0) {
        errs.push(format!("sigma must be positive, got {}", cfg.sigma));
    }
    if !(cfg.gamma_a >= 0.0) {
        errs.push(format!("gamma_a must be >= 0, got {}", cfg.gamma_a));
    }
    // Norm exponent: strictly above dim + 2.
    let pmin = (g.dim + 2) as f64;
    if !(cfg.norms.p > pmin) {
        errs.push(format!(
            "norms.p must satisfy p > dim + 2 = {pmin} strictly, got {}",
            cfg.norms.p
        ));
    }
    if cfg.norms.p == 1.5 || cfg.norms.p == 3.0 {
        errs.push("norms.p must avoid the excluded trace exponents 3/2 and 3".into());
    }
    if cfg.solver.max_iter < 1 {
        errs.push("solver.max_iter must be >= 1".into());
    }
    if !(cfg.solver.tol > 0.0) {
        errs.push("solver.tol must be positive".into());
    }
    if !(cfg.solver.delta0_guard > 0.0) {
        errs.push("solver.delta0_guard must be positive".into());
    }
    if !(cfg.solver.compat_tol > 0.0) {
        errs.push("solver.compat_tol must be positive".into());
    }
    if cfg.output.cadence < 1 {
        errs.push("output.cadence must be >= 1".into());
    }
    if cfg.output.dir.is_empty() {
        errs.push("output.dir must not be empty".into());
    }
    for f in &cfg.output.formats {
        if f != "tsv" && f != "csv" {
            errs.push(format!("output.formats entries must be \"tsv\" or \"csv\", got {f:?}"));
        }
    }
    match cfg.initial.h0.kind.as_str() {
        "zero" => {}
        "sine" => {
            if cfg.initial.h0.amplitude.is_none() {
                errs.push("initial.h0: kind \"sine\" requires amplitude".into());
            }
        }
        "fourier" => {
            if cfg.initial.h0.modes.is_none() {
                errs.push("initial.h0: kind \"fourier\" requires modes".into());
            }
        }
        other => errs.push(format!("initial.h0.kind must be zero|sine|fourier, got {other:?}")),
    }
    match cfg.initial.u0.kind.as_str() {
        "zero" => {}
        "modes" => {
            if cfg.initial.u0.modes.is_none() {
                errs.push("initial.u0: kind \"modes\" requires modes".into());
            }
        }
        other => errs.push(format!("initial.u0.kind must be zero|modes, got {other:?}")),
    }
    // Geometric rule: the interface must start strictly inside the strip.
    // Checked whenever the grid section itself is valid, independently of
    // other violations, so every broken rule is reported at once.
    if let Ok(grid) = build_grid(cfg) {
        let h0 = build_h0(cfg, grid);
        if h0.max_abs() >= g.l_v {
            errs.push(format!(
                "initial.h0: max |h0| = {} must stay strictly below grid.l_v = {} (interface inside the strip)",
                h0.max_abs(),
                g.l_v
            ));
        }
    }
    errs
}

pub fn build_grid(cfg: &RunConfig) -> interflow::Result<StripGrid> {
    StripGrid::new(cfg.grid.dim, cfg.grid.n_h, cfg.grid.l_h, cfg.grid.n_v, cfg.grid.l_v)
}

pub fn build_time(cfg: &RunConfig) -> interflow::Result<TimeGrid> {
    TimeGrid::new(cfg.time.horizon, cfg.time.n_t)
}

pub fn build_viscosity(v: &ViscosityConfig) -> interflow::Result<ViscosityModel> {
    let need = |o: Option<f64>, what: &str| {
        o.ok_or_else(|| {
            interflow::CoreError::Config(format!("family {:?} requires {what}", v.family))
        })
    };
    match v.family.as_str() {
        "power-sum" => ViscosityModel::power_sum(need(v.nu, "nu")?, need(v.d, "d")?),
        "power-shift" => ViscosityModel::power_shift(need(v.nu, "nu")?, need(v.d, "d")?),
        "newtonian" => ViscosityModel::newtonian(need(v.nu, "nu")?),
        "table" => {
            let s = v.s.clone().ok_or_else(|| {
                interflow::CoreError::Config("table family requires s samples".into())
            })?;
            let mu = v.mu.clone().ok_or_else(|| {
                interflow::CoreError::Config("table family requires mu samples".into())
            })?;
            ViscosityModel::table(s, mu)
        }
        other => Err(interflow::CoreError::Config(format!(
            "unknown viscosity family {other:?} (power-sum|power-shift|newtonian|table)"
        ))),
    }
}

pub fn build_phases(cfg: &RunConfig) -> interflow::Result<PhasePair> {
    PhasePair::new(
        cfg.phase.one.rho,
        cfg.phase.two.rho,
        build_viscosity(&cfg.phase.one.viscosity)?,
        build_viscosity(&cfg.phase.two.viscosity)?,
        cfg.sigma,
        cfg.gamma_a,
    )
}

pub fn build_norm_config(cfg: &RunConfig) -> interflow::Result<NormConfig> {
    NormConfig::new(cfg.norms.p, cfg.grid.dim)
}

pub fn build_solve_config(cfg: &RunConfig) -> interflow::Result<SolveConfig> {
    SolveConfig::new(
        cfg.solver.max_iter,
        cfg.solver.tol,
        cfg.solver.delta0_guard,
        cfg.solver.compat_tol,
    )
}

pub fn build_h0(cfg: &RunConfig, grid: StripGrid) -> HeightField {
    match cfg.initial.h0.kind.as_str() {
        "sine" => {
            let amp = cfg.initial.h0.amplitude.unwrap_or(0.0);
            let mode = cfg.initial.h0.mode.unwrap_or(1) as f64;
            HeightField::from_fn(grid, |x| amp * (mode * x[0] / grid.l_h).sin())
        }
        "fourier" => {
            let modes = cfg.initial.h0.modes.clone().unwrap_or_default();
            HeightField::from_fn(grid, |x| {
                modes
                    .iter()
                    .map(|row| {
                        let th = row[0] * x[0] / grid.l_h;
                        row[1] * th.cos() + row[2] * th.sin()
                    })
                    .sum()
            })
        }
        _ => HeightField::zeros(grid),
    }
}

pub fn build_u0(cfg: &RunConfig, grid: StripGrid) -> TwoPhaseField {
    match cfg.initial.u0.kind.as_str() {
        "modes" => {
            let modes = cfg.initial.u0.modes.clone().unwrap_or_default();
            TwoPhaseField::from_fn(grid, Rank::Vector, |c, _, x, xv| {
                let bump = {
                    let r = xv / grid.l_v;
                    (1.0 - r * r) * (1.0 - r * r)
                };
                modes
                    .iter()
                    .filter(|row| row[0] as usize == c)
                    .map(|row| {
                        let th = row[1] * x[0] / grid.l_h;
                        (row[2] * th.cos() + row[3] * th.sin()) * bump
                    })
                    .sum()
            })
        }
        _ => TwoPhaseField::zeros(grid, Rank::Vector),
    }
}

/// Canonical small configuration used by tests and examples.
#[doc(hidden)]
pub mod tests_support {
    pub fn minimal_toml() -> String {
        r#"
sigma = 1.0
gamma_a = 0.0

[grid]
n_h = 16
n_v = 12
l_h = 1.0
l_v = 1.0

[time]
horizon = 0.25
n_t = 4

[phase.1]
rho = 1.0
[phase.1.viscosity]
family = "newtonian"
nu = 1.0

[phase.2]
rho = 1.1
[phase.2.viscosity]
family = "newtonian"
nu = 0.9

[initial.h0]
kind = "sine"
amplitude = 1e-3
mode = 1

[norms]
p = 5.0

[output]
dir = "out/test"
"#
        .to_string()
    }
}
