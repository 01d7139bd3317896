//! Run orchestration: compatibility check, Picard solve, diagnostics, and
//! artifact output.
//!
//! All data artifacts are deterministic for a fixed configuration: floating
//! point values are printed with full round-trip precision and every
//! reduction in the core runs in a fixed order. Only the manifest carries
//! timestamps.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use interflow::fixedpoint::{
    self, check_compatibility, picard_solve, CompatibilityReport, SolveStatus,
};
use interflow::norms;
use interflow::rhs::StateZ;
use interflow::stokes::{energy_functional, LinearParams};
use interflow::Phase;

use crate::config::{
    build_grid, build_h0, build_norm_config, build_phases, build_solve_config, build_time,
    build_u0, RunConfig,
};
use crate::manifest::{config_hash, now_unix_ms, RunManifest};

/// Exit code for configuration errors.
pub const EXIT_CONFIG: i32 = 4;
/// Exit code for incompatible initial data.
pub const EXIT_INCOMPATIBLE: i32 = 3;
/// Exit code for a diverged iteration.
pub const EXIT_DIVERGED: i32 = 2;

pub struct RunOutcome {
    pub exit_code: i32,
    pub dir: PathBuf,
}

fn fmt_f(v: f64) -> String {
    // Shortest round-trip representation; deterministic.
    format!("{v:?}")
}

/// Evaluate the compatibility report of the configured initial data.
pub fn check(cfg: &RunConfig) -> interflow::Result<CompatibilityReport> {
    let grid = build_grid(cfg)?;
    let phases = build_phases(cfg)?;
    let u0 = build_u0(cfg, grid);
    let h0 = build_h0(cfg, grid);
    check_compatibility(&u0, &h0, &phases, cfg.solver.compat_tol)
}

pub fn print_compat(report: &CompatibilityReport) {
    println!("tangential residual (stress-projection form): {:.6e}", report.tangential_a);
    println!("tangential residual (interface-row form):     {:.6e}", report.tangential_b);
    println!("divergence residual:                          {:.6e}", report.divergence);
    println!("velocity-jump residual:                       {:.6e}", report.velocity_jump);
    println!("tolerance:                                    {:.6e}", report.tol);
    println!("status: {}", if report.passes() { "compatible" } else { "INCOMPATIBLE" });
}

/// Execute the full pipeline and write artifacts. Returns the exit code.
pub fn run(cfg: &RunConfig) -> Result<RunOutcome, String> {
    let grid = build_grid(cfg).map_err(|e| e.to_string())?;
    let time = build_time(cfg).map_err(|e| e.to_string())?;
    let phases = build_phases(cfg).map_err(|e| e.to_string())?;
    let norm_cfg = build_norm_config(cfg).map_err(|e| e.to_string())?;
    let solve_cfg = build_solve_config(cfg).map_err(|e| e.to_string())?;
    let u0 = build_u0(cfg, grid);
    let h0 = build_h0(cfg, grid);

    let dir = PathBuf::from(&cfg.output.dir);
    fs::create_dir_all(&dir).map_err(|e| format!("cannot create {}: {e}", dir.display()))?;

    let result = picard_solve(&u0, &h0, &phases, &time, &solve_cfg, &norm_cfg);
    let (z, report) = match result {
        Ok(pair) => pair,
        Err(interflow::CoreError::Incompatible(msg)) => {
            eprintln!("incompatible initial data: {msg}");
            return Ok(RunOutcome { exit_code: EXIT_INCOMPATIBLE, dir });
        }
        Err(e) => return Err(e.to_string()),
    };

    let status = match report.status {
        SolveStatus::Converged => "converged",
        SolveStatus::Diverged => "diverged",
        SolveStatus::MaxIter => "max-iter",
    };
    let exit_code = report.status.exit_code();

    // Diagnostics.
    let sol_norms = norms::norm_solution(&norm_cfg, &z).map_err(|e| e.to_string())?;
    let remainder = interflow::rhs::eval_n(&z, &phases).map_err(|e| e.to_string())?;
    let data_norms = norms::norm_data(&norm_cfg, &remainder).map_err(|e| e.to_string())?;
    let iface_rows = fixedpoint::interface_residual_rows(&z, &phases).map_err(|e| e.to_string())?;
    let iface_max = iface_rows
        .iter()
        .flat_map(|r| r.iter())
        .fold(0.0f64, |m, v| m.max(*v));
    let params = LinearParams::from_phases(&phases).map_err(|e| e.to_string())?;

    // Artifacts.
    write_file(&dir, "config.toml", &toml::to_string_pretty(cfg).unwrap())?;
    write_h_series(&dir, &z)?;
    write_h_spectrum(&dir, &z)?;
    write_interface_trace(&dir, &z, &iface_rows, &phases)?;
    write_convergence(&dir, &report)?;
    write_norms(&dir, &sol_norms, &data_norms, report.initial_norm)?;
    write_energy(&dir, &z, &params)?;
    for n in (0..z.n_nodes()).step_by(cfg.output.cadence.max(1)) {
        write_velocity_snapshot(&dir, &z, n)?;
    }

    let manifest = RunManifest {
        config_hash: config_hash(cfg),
        code_version: env!("CARGO_PKG_VERSION").to_string(),
        created_unix_ms: now_unix_ms(),
        status: status.to_string(),
        exit_code,
        initial_data_norm: report.initial_norm,
        iterations: report.residuals.len(),
        last_residual: report.last_residual(),
        contraction_ratios: report.ratios.clone(),
        solution_norm_total: sol_norms.total(),
        interface_residual_max: iface_max,
    };
    write_file(&dir, "manifest.json", &serde_json::to_string_pretty(&manifest).unwrap())?;

    Ok(RunOutcome { exit_code, dir })
}

fn write_file(dir: &Path, name: &str, contents: &str) -> Result<(), String> {
    fs::write(dir.join(name), contents).map_err(|e| format!("cannot write {name}: {e}"))
}

fn write_h_series(dir: &Path, z: &StateZ) -> Result<(), String> {
    let grid = z.grid;
    let mut out = String::from("t\tx\th\n");
    for n in 0..z.n_nodes() {
        let t = z.time.t(n);
        for q in 0..grid.h_len() {
            let x = grid.x_h(q)[0];
            let _ = writeln!(out, "{}\t{}\t{}", fmt_f(t), fmt_f(x), fmt_f(z.h[n].values[q]));
        }
    }
    write_file(dir, "h_series.tsv", &out)
}

fn write_h_spectrum(dir: &Path, z: &StateZ) -> Result<(), String> {
    let grid = z.grid;
    let mut out = String::from("t\tmode\tk\tabs\n");
    for n in 0..z.n_nodes() {
        let t = z.time.t(n);
        let h2 = z.h[n].values.clone().insert_axis(ndarray::Axis(1));
        let spec = grid.fft_forward(&h2);
        for q in 0..grid.h_len() {
            let mode = grid.signed_mode(grid.h_multi_index(q)[0]);
            let k = grid.wavenumber(q)[0];
            let _ = writeln!(
                out,
                "{}\t{}\t{}\t{}",
                fmt_f(t),
                mode,
                fmt_f(k),
                fmt_f(spec[[q, 0]].norm())
            );
        }
    }
    write_file(dir, "h_spectrum.tsv", &out)
}

fn write_interface_trace(
    dir: &Path,
    z: &StateZ,
    iface_rows: &[Vec<f64>],
    phases: &interflow::constitutive::PhasePair,
) -> Result<(), String> {
    let grid = z.grid;
    let mut out = String::from("t\tx\ttheta_jump\tkinematic_residual\n");
    let traj = fixedpoint::pushforward_solution(z, phases).map_err(|e| e.to_string())?;
    for n in 1..z.n_nodes() {
        let t = z.time.t(n);
        let kin = traj.kinematic_residual(n);
        for q in 0..grid.h_len() {
            let x = grid.x_h(q)[0];
            let _ = writeln!(
                out,
                "{}\t{}\t{}\t{}",
                fmt_f(t),
                fmt_f(x),
                fmt_f(z.pi[n][q]),
                fmt_f(kin[q])
            );
        }
    }
    write_file(dir, "interface_trace.tsv", &out)?;

    let mut rows = String::from("t\trow\tmax_abs_residual\n");
    for (n, r) in iface_rows.iter().enumerate() {
        let t = z.time.t(n);
        for (j, v) in r.iter().enumerate() {
            let _ = writeln!(rows, "{}\t{}\t{}", fmt_f(t), j, fmt_f(*v));
        }
    }
    write_file(dir, "g_residuals.tsv", &rows)
}

fn write_convergence(dir: &Path, report: &fixedpoint::ConvergenceReport) -> Result<(), String> {
    let mut out =
        String::from("iter\tresidual\tratio\titerate_norm\tremainder_norm\tlinv_estimate\n");
    for i in 0..report.residuals.len() {
        let ratio = if i == 0 { f64::NAN } else { report.ratios[i - 1] };
        let _ = writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}\t{}",
            i,
            fmt_f(report.residuals[i]),
            fmt_f(ratio),
            fmt_f(report.iterate_norms[i + 1]),
            fmt_f(report.remainder_norms[i]),
            fmt_f(report.linv_estimates[i]),
        );
    }
    write_file(dir, "convergence.tsv", &out)
}

fn write_norms(
    dir: &Path,
    s: &norms::SolutionNorms,
    d: &norms::DataNorms,
    initial: f64,
) -> Result<(), String> {
    let mut out = String::from("name\tvalue\n");
    let rows: Vec<(&str, f64)> = vec![
        ("solution_velocity", s.e1),
        ("solution_pressure_gradient", s.e2),
        ("solution_interface_jump", s.e3),
        ("solution_height_time2", s.e4[0]),
        ("solution_height_mixed1", s.e4[1]),
        ("solution_height_mixed2", s.e4[2]),
        ("solution_height_space3", s.e4[3]),
        ("solution_height_max", s.e4_max()),
        ("solution_total", s.total()),
        ("remainder_bulk", d.f1),
        ("remainder_divergence", d.f2),
        ("remainder_interface", d.f3),
        ("remainder_kinematic", d.f4),
        ("remainder_total", d.total()),
        ("initial_data", initial),
    ];
    for (name, v) in rows {
        let _ = writeln!(out, "{name}\t{}", fmt_f(v));
    }
    write_file(dir, "norms.tsv", &out)
}

fn write_energy(dir: &Path, z: &StateZ, params: &LinearParams) -> Result<(), String> {
    let mut out = String::from("t\tenergy\n");
    for n in 0..z.n_nodes() {
        let _ = writeln!(out, "{}\t{}", fmt_f(z.time.t(n)), fmt_f(energy_functional(z, params, n)));
    }
    write_file(dir, "energy.tsv", &out)
}

fn write_velocity_snapshot(dir: &Path, z: &StateZ, n: usize) -> Result<(), String> {
    let grid = z.grid;
    let dim = grid.dim;
    let mut out = String::new();
    let mut header: Vec<String> = (0..dim - 1).map(|d| format!("x{}", d + 1)).collect();
    header.push("xi".into());
    header.push("phase".into());
    for c in 0..dim {
        header.push(format!("u{}", c + 1));
    }
    header.push("theta".into());
    let _ = writeln!(out, "{}", header.join("\t"));
    for ph in Phase::BOTH {
        let tag = match ph {
            Phase::Lower => 1,
            Phase::Upper => 2,
        };
        for q in 0..grid.h_len() {
            let x = grid.x_h(q);
            for m in 0..grid.v_len() {
                let xi = grid.xi_v(ph, m);
                let mut cols: Vec<String> =
                    (0..dim - 1).map(|d| fmt_f(x[d])).collect();
                cols.push(fmt_f(xi));
                cols.push(tag.to_string());
                for c in 0..dim {
                    cols.push(fmt_f(z.u[n].block(ph, c)[[q, m]]));
                }
                cols.push(fmt_f(z.theta[n].block(ph, 0)[[q, m]]));
                let _ = writeln!(out, "{}", cols.join("\t"));
            }
        }
    }
    write_file(dir, &format!("velocity_{n:04}.tsv"), &out)
}
