//! Global-in-time Picard iteration for the flattened nonlinear system.
//!
//! The nonlinear problem is solved as a fixed point of the map
//! `z -> L^{-1}(N(z), u0, h0)`: each iteration re-solves the full linear
//! trajectory with the nonlinear remainders of the previous iterate as data.
//! This module provides the pointwise compatibility check of the initial
//! data (in two algebraically equivalent forms), the iteration driver with
//! contraction diagnostics, a superlinearity probe for the remainder map,
//! and push-forward of converged trajectories to physical coordinates.

use ndarray::Array1;

use crate::constitutive::PhasePair;
use crate::error::{CoreError, Result};
use crate::geometry::{self, HeightField};
use crate::grid::{Phase, TimeGrid, TwoPhaseField};
use crate::interp;
use crate::norms::{self, NormConfig};
use crate::rhs::{self, DataF, StateZ};
use crate::stokes::{LinearParams, StokesSolver};

/// Iteration knobs. The smallness and ball constants of the underlying
/// theory are not computable, so the guard radius is a configuration value
/// with divergence detection rather than a derived constant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveConfig {
    pub max_iter: usize,
    /// Relative solution-norm change that counts as converged.
    pub tol_fixed_point: f64,
    /// Iterates leaving this solution-norm ball are declared divergent.
    pub delta0_guard: f64,
    /// Tolerance for the pointwise compatibility residuals of `(u0, h0)`.
    pub compat_tol: f64,
}

impl SolveConfig {
    pub fn new(max_iter: usize, tol_fixed_point: f64, delta0_guard: f64, compat_tol: f64) -> Result<Self> {
        if max_iter < 1 {
            return Err(CoreError::Config("max_iter must be >= 1".into()));
        }
        if !(tol_fixed_point > 0.0) {
            return Err(CoreError::Config("tol_fixed_point must be positive".into()));
        }
        if !(delta0_guard > 0.0) || !(compat_tol > 0.0) {
            return Err(CoreError::Config("guard radius and compat_tol must be positive".into()));
        }
        Ok(Self { max_iter, tol_fixed_point, delta0_guard, compat_tol })
    }
}

impl Default for SolveConfig {
    fn default() -> Self {
        Self { max_iter: 25, tol_fixed_point: 1e-9, delta0_guard: 1e3, compat_tol: 1e-8 }
    }
}

/// Final state of the iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Converged,
    Diverged,
    MaxIter,
}

impl SolveStatus {
    /// Process exit code: 0 converged, 2 diverged (incompatible data is 3,
    /// raised as an error before iteration starts).
    pub fn exit_code(&self) -> i32 {
        match self {
            SolveStatus::Converged => 0,
            SolveStatus::Diverged | SolveStatus::MaxIter => 2,
        }
    }
}

/// Per-iteration diagnostics of the fixed-point solve.
#[derive(Debug, Clone)]
pub struct ConvergenceReport {
    /// `||z_{m+1} - z_m||` in the solution norm.
    pub residuals: Vec<f64>,
    /// Successive residual quotients.
    pub ratios: Vec<f64>,
    /// Solution norm of each iterate.
    pub iterate_norms: Vec<f64>,
    /// Data norm of `N(z_m)` per iteration.
    pub remainder_norms: Vec<f64>,
    /// `||z_{m+1}|| / (||N(z_m)|| + ||(u0, h0)||)`, the measured inverse-map
    /// continuity constant.
    pub linv_estimates: Vec<f64>,
    /// Measured initial-data norm.
    pub initial_norm: f64,
    pub status: SolveStatus,
}

impl ConvergenceReport {
    pub fn last_residual(&self) -> f64 {
        self.residuals.last().copied().unwrap_or(0.0)
    }
}

/// Residuals of the pointwise compatibility conditions in both forms.
///
/// Form A contracts the full viscous interface stress with the initial
/// normal and takes its tangential jump; form B evaluates the flattened
/// interface rows with the nonlinear remainders. Both forms also induce an
/// initial interface pressure jump from their normal components; the two
/// induced jumps coincide identically.
#[derive(Debug, Clone)]
pub struct CompatibilityReport {
    /// Max-norm of the tangential stress-jump residual, form A (per
    /// tangential vector component of the projected jump).
    pub tangential_a: f64,
    /// Max-norm of the flattened tangential row residuals, form B.
    pub tangential_b: f64,
    /// Pointwise residual fields, form A: projected jump components
    /// (dim entries of length h_len).
    pub tangential_a_fields: Vec<Array1<f64>>,
    /// Pointwise residual fields, form B (dim - 1 entries).
    pub tangential_b_fields: Vec<Array1<f64>>,
    /// Max-norm of `div u0 - F_d(u0, h0)`.
    pub divergence: f64,
    /// Max-norm of the velocity jump.
    pub velocity_jump: f64,
    /// Induced initial interface pressure jump, form A.
    pub theta_jump_a: Array1<f64>,
    /// Induced initial interface pressure jump, form B.
    pub theta_jump_b: Array1<f64>,
    pub tol: f64,
}

impl CompatibilityReport {
    pub fn passes(&self) -> bool {
        self.tangential_a.max(self.tangential_b).max(self.divergence).max(self.velocity_jump)
            <= self.tol
    }
}

/// Evaluate the compatibility conditions of `(u0, h0)`.
pub fn check_compatibility(
    u0: &TwoPhaseField,
    h0: &HeightField,
    phases: &PhasePair,
    tol: f64,
) -> Result<CompatibilityReport> {
    let grid = u0.grid;
    let dim = grid.dim;
    h0.validate()?;
    let jet = h0.jet();
    let split = geometry::curvature_split(h0);
    let (e, esq) = geometry::transformed_deformation(u0, h0);

    // Unit normal of the initial interface.
    let gsq = jet.grad_sq();
    let qn: Array1<f64> = gsq.mapv(|v| (1.0 + v).sqrt());
    let mut normal = vec![Array1::zeros(grid.h_len()); dim];
    for j in 0..dim - 1 {
        normal[j] = Array1::from_shape_fn(grid.h_len(), |q| -jet.grad[j][q] / qn[q]);
    }
    normal[dim - 1] = qn.mapv(|v| 1.0 / v);

    // Jump of the viscosity-weighted deformation at the interface:
    // P_ij = [mu(|E|^2) E_ij].
    let mut p_jump: Vec<Array1<f64>> = vec![Array1::zeros(grid.h_len()); dim * dim];
    for c in 0..dim * dim {
        let mut val: Array1<f64> = Array1::zeros(grid.h_len());
        for ph in Phase::BOTH {
            let strace = esq.trace(ph, 0);
            let etrace = e.trace(ph, c);
            let sgn = match ph {
                Phase::Lower => -1.0,
                Phase::Upper => 1.0,
            };
            for q in 0..grid.h_len() {
                let mu = phases.model(ph).eval(strace[q])?.0;
                val[q] += sgn * mu * etrace[q];
            }
        }
        p_jump[c] = val;
    }

    // Form A: tangential part of P n0 and the induced pressure jump
    // [theta0] = 2 n0 . P n0 + ([rho] gamma_a + sigma lap') h0 - sigma H(h0).
    let mut pn: Vec<Array1<f64>> = vec![Array1::zeros(grid.h_len()); dim];
    for i in 0..dim {
        for j in 0..dim {
            for q in 0..grid.h_len() {
                pn[i][q] += p_jump[i * dim + j][q] * normal[j][q];
            }
        }
    }
    let mut npn: Array1<f64> = Array1::zeros(grid.h_len());
    for i in 0..dim {
        for q in 0..grid.h_len() {
            npn[q] += normal[i][q] * pn[i][q];
        }
    }
    let mut tangential_a_fields = Vec::with_capacity(dim);
    let mut tangential_a = 0.0f64;
    for i in 0..dim {
        let w = Array1::from_shape_fn(grid.h_len(), |q| pn[i][q] - npn[q] * normal[i][q]);
        tangential_a = tangential_a.max(w.iter().fold(0.0f64, |m, v| m.max(v.abs())));
        tangential_a_fields.push(w);
    }
    let coef = phases.jump_rho() * phases.gamma_a;
    let theta_jump_a = Array1::from_shape_fn(grid.h_len(), |q| {
        2.0 * npn[q] + coef * h0.values[q] + phases.sigma * jet.lap[q]
            - phases.sigma * split.remainder[q]
    });

    // Form B: flattened interface rows with the nonlinear remainders. The
    // normal row induces its own pressure jump
    // [theta0] = 2 [mu(0) D_N u0_N] + ([rho] gamma_a + sigma lap') h0 + G_N;
    // off-shell it differs from the projection-induced jump by the normal
    // component of the tangential defect. The tangential rows are evaluated
    // with the projection-induced jump:
    // residual_j = -[mu(0)(D_N u0_j + D_j u0_N)] - G_j(u0, [theta0]_A, h0).
    let dn = u0.deriv_v();
    let mut mu0_dnun_jump: Array1<f64> = Array1::zeros(grid.h_len());
    for ph in Phase::BOTH {
        let tr = dn.trace(ph, dim - 1);
        let sgn = match ph {
            Phase::Lower => -1.0,
            Phase::Upper => 1.0,
        };
        mu0_dnun_jump = mu0_dnun_jump + &(sgn * phases.mu0(ph) * &tr);
    }
    let b_ops = rhs::eval_b(u0, h0, phases)?;
    let theta_jump_b = Array1::from_shape_fn(grid.h_len(), |q| {
        2.0 * mu0_dnun_jump[q] + coef * h0.values[q] + phases.sigma * jet.lap[q]
            - phases.sigma * split.remainder[q]
            + b_ops[dim - 1][q]
    });
    let g_rows = rhs::eval_g(u0, &theta_jump_a, h0, phases)?;
    let mut tangential_b_fields = Vec::with_capacity(dim - 1);
    let mut tangential_b = 0.0f64;
    for j in 0..dim - 1 {
        let dju = u0.deriv(j + 1);
        let mut lhs = Array1::zeros(grid.h_len());
        for ph in Phase::BOTH {
            let t1 = dn.trace(ph, j);
            let t2 = dju.trace(ph, dim - 1);
            let sgn = match ph {
                Phase::Lower => 1.0,
                Phase::Upper => -1.0,
            };
            lhs = lhs + &(sgn * phases.mu0(ph) * &(&t1 + &t2));
        }
        let r: Array1<f64> = &lhs - &g_rows[j];
        tangential_b = tangential_b.max(r.iter().fold(0.0f64, |m, v| m.max(v.abs())));
        tangential_b_fields.push(r);
    }

    // Shared conditions.
    let mut div = TwoPhaseField::zeros(grid, crate::grid::Rank::Scalar);
    for j in 1..=dim {
        let dj = u0.deriv(j);
        for ph in Phase::BOTH {
            *div.block_mut(ph, 0) = div.block(ph, 0) + dj.block(ph, j - 1);
        }
    }
    let (fd, _) = rhs::eval_fd(u0, h0);
    let divergence = div.axpy(-1.0, &fd).max_abs();
    let mut velocity_jump = 0.0f64;
    for c in 0..dim {
        let j = u0.jump(c);
        velocity_jump = velocity_jump.max(j.iter().fold(0.0f64, |m, v| m.max(v.abs())));
    }

    Ok(CompatibilityReport {
        tangential_a,
        tangential_b,
        tangential_a_fields,
        tangential_b_fields,
        divergence,
        velocity_jump,
        theta_jump_a,
        theta_jump_b,
        tol,
    })
}

/// Solve the nonlinear flattened system by Picard iteration.
///
/// The base iterate solves the linear problem with zero data; every further
/// iterate feeds the nonlinear remainders of the previous trajectory back
/// through the linear solver. Divergence is declared when the iterate
/// leaves the guard ball or the residuals grow three times in a row.
pub fn picard_solve(
    u0: &TwoPhaseField,
    h0: &HeightField,
    phases: &PhasePair,
    time: &TimeGrid,
    cfg: &SolveConfig,
    norm_cfg: &NormConfig,
) -> Result<(StateZ, ConvergenceReport)> {
    let grid = u0.grid;
    let compat = check_compatibility(u0, h0, phases, cfg.compat_tol)?;
    if !compat.passes() {
        return Err(CoreError::Incompatible(format!(
            "initial data violate the compatibility conditions: tangential {:.3e}/{:.3e}, divergence {:.3e}, velocity jump {:.3e} (tolerance {:.3e})",
            compat.tangential_a, compat.tangential_b, compat.divergence, compat.velocity_jump, cfg.compat_tol
        )));
    }
    let initial_norm = norms::norm_initial(norm_cfg, u0, h0);

    let params = LinearParams::from_phases(phases)?;
    let solver = StokesSolver::new(grid, time.dt(), params)?;

    // Base iterate: linear solve with zero data. The zero tuple need not be
    // compatible with u0, so the inner check is disabled; the real
    // compatibility of (u0, h0) was verified above.
    let zero_data = DataF::zeros(grid, *time);
    let mut z = solver.solve_evolution(time, &zero_data, u0, h0, f64::INFINITY)?;

    let mut report = ConvergenceReport {
        residuals: Vec::new(),
        ratios: Vec::new(),
        iterate_norms: vec![norms::norm_solution(norm_cfg, &z)?.total()],
        remainder_norms: Vec::new(),
        linv_estimates: Vec::new(),
        initial_norm,
        status: SolveStatus::MaxIter,
    };

    let mut growth_streak = 0usize;
    for _ in 0..cfg.max_iter {
        let data = rhs::eval_n(&z, phases)?;
        let n_norm = norms::norm_data(norm_cfg, &data)?.total();
        let z_next = solver.solve_evolution(time, &data, u0, h0, f64::INFINITY)?;
        let z_next_norm = norms::norm_solution(norm_cfg, &z_next)?.total();
        let residual = norms::norm_solution(norm_cfg, &z_next.diff(&z))?.total();

        report.remainder_norms.push(n_norm);
        report.linv_estimates.push(z_next_norm / (n_norm + initial_norm).max(f64::MIN_POSITIVE));
        if let Some(&prev) = report.residuals.last() {
            report.ratios.push(residual / prev.max(f64::MIN_POSITIVE));
            if residual > prev {
                growth_streak += 1;
            } else {
                growth_streak = 0;
            }
        }
        report.residuals.push(residual);
        report.iterate_norms.push(z_next_norm);
        z = z_next;

        if z_next_norm > cfg.delta0_guard {
            report.status = SolveStatus::Diverged;
            return Ok((z, report));
        }
        if growth_streak >= 3 {
            report.status = SolveStatus::Diverged;
            return Ok((z, report));
        }
        if residual < cfg.tol_fixed_point * (1.0 + z_next_norm) {
            report.status = SolveStatus::Converged;
            return Ok((z, report));
        }
    }
    Ok((z, report))
}

/// Per-node, per-row max-abs residuals of the nonlinear interface
/// conditions on a trajectory: the flattened stress rows evaluated with the
/// trajectory's own remainders. Row indices 0..dim-2 are tangential, the
/// last is the normal row.
pub fn interface_residual_rows(z: &StateZ, phases: &PhasePair) -> Result<Vec<Vec<f64>>> {
    let grid = z.grid;
    let dim = grid.dim;
    let params = LinearParams::from_phases(phases)?;
    let mut out = Vec::with_capacity(z.n_nodes());
    out.push(vec![0.0; dim]);
    for n in 1..z.n_nodes() {
        let u = &z.u[n];
        let h = &z.h[n];
        let jet = h.jet();
        let g_rows = rhs::eval_g(u, &z.pi[n], h, phases)?;
        let dn = u.deriv_v();
        let mut rows = vec![0.0f64; dim];
        for j in 0..dim - 1 {
            let dju = u.deriv(j + 1);
            let mut lhs: Array1<f64> = Array1::zeros(grid.h_len());
            for ph in Phase::BOTH {
                let nu = match ph {
                    Phase::Lower => params.nu1,
                    Phase::Upper => params.nu2,
                };
                let sgn = match ph {
                    Phase::Lower => 1.0,
                    Phase::Upper => -1.0,
                };
                lhs = lhs + &(sgn * nu * &(&dn.trace(ph, j) + &dju.trace(ph, dim - 1)));
            }
            for q in 0..grid.h_len() {
                rows[j] = rows[j].max((lhs[q] - g_rows[j][q]).abs());
            }
        }
        let mut lhs = z.pi[n].clone();
        for ph in Phase::BOTH {
            let nu = match ph {
                Phase::Lower => params.nu1,
                Phase::Upper => params.nu2,
            };
            let sgn = match ph {
                Phase::Lower => 1.0,
                Phase::Upper => -1.0,
            };
            lhs = lhs + &(2.0 * sgn * nu * &dn.trace(ph, dim - 1));
        }
        let coef = phases.jump_rho() * phases.gamma_a;
        for q in 0..grid.h_len() {
            let row = lhs[q] - coef * h.values[q] - phases.sigma * jet.lap[q];
            rows[dim - 1] = rows[dim - 1].max((row - g_rows[dim - 1][q]).abs());
        }
        out.push(rows);
    }
    Ok(out)
}

/// Worst interface-row residual over the whole trajectory.
pub fn interface_residuals(z: &StateZ, phases: &PhasePair) -> Result<f64> {
    let rows = interface_residual_rows(z, phases)?;
    Ok(rows
        .iter()
        .flat_map(|r| r.iter())
        .fold(0.0f64, |m, v| m.max(*v)))
}

/// Log-log slope of `eps -> ||N(eps z)||` over a decreasing epsilon list;
/// values near 2 certify the superlinear (quadratic) smallness of the
/// remainder map near zero.
#[derive(Debug, Clone)]
pub struct SmallnessReport {
    pub epsilons: Vec<f64>,
    pub norms: Vec<f64>,
    /// Least-squares slope; `None` when the direction is degenerate.
    pub slope: Option<f64>,
}

pub fn smallness_probe(
    direction: &StateZ,
    epsilons: &[f64],
    phases: &PhasePair,
    norm_cfg: &NormConfig,
) -> Result<SmallnessReport> {
    let mut values = Vec::with_capacity(epsilons.len());
    for &eps in epsilons {
        let data = rhs::eval_n(&direction.scale(eps), phases)?;
        values.push(norms::norm_data(norm_cfg, &data)?.total());
    }
    let degenerate = values.iter().any(|v| *v <= 0.0);
    let slope = if degenerate || epsilons.len() < 2 {
        None
    } else {
        // Least-squares fit of log norm against log eps.
        let xs: Vec<f64> = epsilons.iter().map(|e| e.ln()).collect();
        let ys: Vec<f64> = values.iter().map(|v| v.ln()).collect();
        let n = xs.len() as f64;
        let mx = xs.iter().sum::<f64>() / n;
        let my = ys.iter().sum::<f64>() / n;
        let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
        let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
        Some(sxy / sxx)
    };
    Ok(SmallnessReport { epsilons: epsilons.to_vec(), norms: values, slope })
}

/// A converged trajectory mapped back to physical coordinates.
pub struct PhysicalTrajectory<'a> {
    pub z: &'a StateZ,
    phases: PhasePair,
}

/// Push a trajectory forward to physical coordinates. Fails if the
/// interface leaves the strip at any node.
pub fn pushforward_solution<'a>(
    z: &'a StateZ,
    phases: &PhasePair,
) -> Result<PhysicalTrajectory<'a>> {
    for n in 0..z.n_nodes() {
        z.h[n].validate()?;
    }
    Ok(PhysicalTrajectory { z, phases: phases.clone() })
}

impl<'a> PhysicalTrajectory<'a> {
    /// Physical velocity component at a physical point.
    pub fn velocity(&self, n: usize, c: usize, x_h: &[f64], x_v: f64) -> Result<f64> {
        geometry::pushforward(&self.z.u[n], &self.z.h[n]).eval(c, x_h, x_v)
    }

    /// Physical pressure: the flattened pressure push-forward minus the
    /// hydrostatic column `rho gamma_a x_N` of the occupying phase.
    pub fn pressure(&self, n: usize, x_h: &[f64], x_v: f64) -> Result<f64> {
        let h = &self.z.h[n];
        let xi_v = x_v - h.eval(x_h);
        if xi_v.abs() > self.z.grid.l_v {
            return Err(CoreError::Domain(format!(
                "physical point maps outside the strip: xi_N = {xi_v}"
            )));
        }
        let theta = interp::interp_field(&self.z.theta[n], 0, x_h, xi_v);
        let rho = if xi_v < 0.0 { self.phases.rho1 } else { self.phases.rho2 };
        Ok(theta - rho * self.phases.gamma_a * x_v)
    }

    /// The interface graph at node `n`.
    pub fn interface(&self, n: usize) -> &HeightField {
        &self.z.h[n]
    }

    /// Pointwise residual of the kinematic identity (normal velocity equals
    /// fluid velocity projected on the normal) at node `n >= 1`, scaled by
    /// the normalization of the graph normal.
    pub fn kinematic_residual(&self, n: usize) -> Array1<f64> {
        let z = self.z;
        let grid = z.grid;
        let dth = z.dt_h(n);
        let jet = z.h[n].jet();
        let gsq = jet.grad_sq();
        let un = z.u[n].trace_mean(grid.dim - 1);
        let mut conv: Array1<f64> = Array1::zeros(grid.h_len());
        for j in 0..grid.dim - 1 {
            let tr = z.u[n].trace_mean(j);
            conv = conv + &(&tr * &jet.grad[j]);
        }
        Array1::from_shape_fn(grid.h_len(), |q| {
            (dth[q] - un[q] + conv[q]) / (1.0 + gsq[q]).sqrt()
        })
    }
}
