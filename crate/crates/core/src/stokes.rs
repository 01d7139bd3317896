//! Implicit solver for the linearized two-phase Stokes system with a flat
//! interface.
//!
//! The linear problem couples constant-viscosity momentum and divergence
//! equations in each phase block through tangential/normal stress jumps, a
//! no-slip velocity jump, the capillary/gravity term acting on the height
//! function, and the kinematic equation. Horizontal directions decouple per
//! wavenumber, so one backward-Euler step reduces to independent banded
//! solves over the vertical line, one per FFT bin.
//!
//! Discretization: velocity at vertical nodes, pressure staggered at cell
//! midpoints, second-order stencils one-sided at block edges. The interface
//! rows replace the one-sided momentum rows at `xi_N = 0`; velocity is
//! pinned at the far field and pressure is anchored at the upper far field
//! for the mean mode (where it would otherwise float).

use ndarray::{Array1, Array2};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::constitutive::PhasePair;
use crate::error::{CoreError, Result};
use crate::geometry::HeightField;
use crate::grid::{Phase, Rank, StripGrid, TimeGrid, TwoPhaseField};
use crate::linalg::{BandedLu, BandedMatrix};
use crate::rhs::{DataF, StateZ};

/// Constant coefficients of the linear problem: `nu_i = mu_i(0)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearParams {
    pub nu1: f64,
    pub nu2: f64,
    pub rho1: f64,
    pub rho2: f64,
    pub sigma: f64,
    pub gamma_a: f64,
}

impl LinearParams {
    pub fn new(nu1: f64, nu2: f64, rho1: f64, rho2: f64, sigma: f64, gamma_a: f64) -> Result<Self> {
        if !(nu1 > 0.0 && nu2 > 0.0 && rho1 > 0.0 && rho2 > 0.0 && sigma > 0.0) {
            return Err(CoreError::Config(format!(
                "linear parameters must be positive (nu1={nu1}, nu2={nu2}, rho1={rho1}, rho2={rho2}, sigma={sigma})"
            )));
        }
        if !(gamma_a >= 0.0) {
            return Err(CoreError::Config(format!("gamma_a must be >= 0, got {gamma_a}")));
        }
        Ok(Self { nu1, nu2, rho1, rho2, sigma, gamma_a })
    }

    /// Freeze the viscosities of a phase pair at zero shear rate.
    pub fn from_phases(phases: &PhasePair) -> Result<Self> {
        Self::new(
            phases.mu0(Phase::Lower),
            phases.mu0(Phase::Upper),
            phases.rho1,
            phases.rho2,
            phases.sigma,
            phases.gamma_a,
        )
    }

    fn nu(&self, ph: Phase) -> f64 {
        match ph {
            Phase::Lower => self.nu1,
            Phase::Upper => self.nu2,
        }
    }

    fn rho(&self, ph: Phase) -> f64 {
        match ph {
            Phase::Lower => self.rho1,
            Phase::Upper => self.rho2,
        }
    }

    pub fn jump_rho(&self) -> f64 {
        self.rho2 - self.rho1
    }
}

/// Index layout of one wavenumber system:
/// `[lower nodes/cells, h, upper nodes/cells]` with velocity components and
/// the adjacent pressure cell interleaved per node.
#[derive(Debug, Clone, Copy)]
pub struct Layout {
    pub dim: usize,
    /// Vertical cells per block.
    pub cells: usize,
}

impl Layout {
    pub fn block_width(&self) -> usize {
        self.cells * (self.dim + 1) + self.dim
    }

    pub fn n_unknowns(&self) -> usize {
        2 * self.block_width() + 1
    }

    fn base(&self, ph: Phase) -> usize {
        match ph {
            Phase::Lower => 0,
            Phase::Upper => self.block_width() + 1,
        }
    }

    /// Velocity component `i` at node `m` of a block.
    pub fn vel(&self, ph: Phase, m: usize, i: usize) -> usize {
        debug_assert!(m <= self.cells && i < self.dim);
        self.base(ph) + m * (self.dim + 1) + i
    }

    /// Pressure in cell `c` (between nodes `c` and `c + 1`).
    pub fn pres(&self, ph: Phase, c: usize) -> usize {
        debug_assert!(c < self.cells);
        self.base(ph) + c * (self.dim + 1) + self.dim
    }

    pub fn height(&self) -> usize {
        self.block_width()
    }
}

/// Assembled and factorized system of one horizontal wavenumber at one step
/// size; reused across time steps and Picard iterations.
pub struct WavenumberBlock {
    pub q: usize,
    pub k: [f64; 2],
    pub layout: Layout,
    matrix: BandedMatrix,
    lu: BandedLu,
}

impl WavenumberBlock {
    /// Apply the discrete operator (for residual and manufactured checks).
    pub fn apply(&self, x: &[Complex64]) -> Vec<Complex64> {
        self.matrix.matvec(x)
    }

    pub fn solve(&self, mut rhs: Vec<Complex64>) -> Vec<Complex64> {
        self.lu.solve(&mut rhs);
        rhs
    }
}

/// One-sided first-derivative stencil at the interface, pointing into the
/// block: returns (node indices, weights).
fn one_sided_deriv(grid: &StripGrid, ph: Phase) -> ([usize; 3], [f64; 3]) {
    let d = grid.dv();
    let m = grid.n_v;
    match ph {
        // Lower block: interface is the last node.
        Phase::Lower => ([m, m - 1, m - 2], [3.0 / (2.0 * d), -4.0 / (2.0 * d), 1.0 / (2.0 * d)]),
        // Upper block: interface is node 0.
        Phase::Upper => ([0, 1, 2], [-3.0 / (2.0 * d), 4.0 / (2.0 * d), -1.0 / (2.0 * d)]),
    }
}

/// Second-order extrapolation of the staggered pressure to the interface.
fn pressure_trace(grid: &StripGrid, ph: Phase) -> ([usize; 2], [f64; 2]) {
    let m = grid.n_v;
    match ph {
        Phase::Lower => ([m - 1, m - 2], [1.5, -0.5]),
        Phase::Upper => ([0, 1], [1.5, -0.5]),
    }
}

/// Assemble and factorize the banded system of one wavenumber bin.
pub fn assemble_block(
    grid: &StripGrid,
    q: usize,
    dt: f64,
    params: &LinearParams,
) -> Result<WavenumberBlock> {
    let dim = grid.dim;
    let cells = grid.n_v;
    let layout = Layout { dim, cells };
    let n = layout.n_unknowns();
    let half_band = 3 * (dim + 1);
    let mut a = BandedMatrix::zeros(n, half_band, half_band);

    let k = grid.wavenumber(q);
    let ksq = grid.k_squared(q);
    let d = grid.dv();
    let d2 = d * d;
    let re = |v: f64| Complex64::new(v, 0.0);
    let im = |v: f64| Complex64::new(0.0, v);

    for ph in Phase::BOTH {
        let nu = params.nu(ph);
        let rho = params.rho(ph);
        let interface_node = grid.interface_node(ph);
        let far_node = if interface_node == 0 { cells } else { 0 };

        // Far-field Dirichlet rows.
        for i in 0..dim {
            let r = layout.vel(ph, far_node, i);
            a.set(r, r, re(1.0));
        }

        // Interior momentum rows.
        for m in 1..cells {
            for i in 0..dim {
                let r = layout.vel(ph, m, i);
                a.add(r, layout.vel(ph, m, i), re(rho / dt + 2.0 * nu / d2 + nu * ksq));
                a.add(r, layout.vel(ph, m - 1, i), re(-nu / d2));
                a.add(r, layout.vel(ph, m + 1, i), re(-nu / d2));
                if i < dim - 1 {
                    // Tangential pressure gradient: i k_i times the average
                    // of the two adjacent cells.
                    a.add(r, layout.pres(ph, m - 1), im(0.5 * k[i]));
                    a.add(r, layout.pres(ph, m), im(0.5 * k[i]));
                } else {
                    a.add(r, layout.pres(ph, m - 1), re(-1.0 / d));
                    a.add(r, layout.pres(ph, m), re(1.0 / d));
                }
            }
        }

        // Divergence rows, one per cell. The mean mode would leave the
        // pressure level free, so its topmost upper cell is replaced by the
        // far-field pressure anchor below.
        for c in 0..cells {
            if ksq == 0.0 && ph == Phase::Upper && c == cells - 1 {
                continue;
            }
            let r = layout.pres(ph, c);
            for j in 0..dim - 1 {
                a.add(r, layout.vel(ph, c, j), im(0.5 * k[j]));
                a.add(r, layout.vel(ph, c + 1, j), im(0.5 * k[j]));
            }
            a.add(r, layout.vel(ph, c, dim - 1), re(-1.0 / d));
            a.add(r, layout.vel(ph, c + 1, dim - 1), re(1.0 / d));
        }
    }

    // Pressure anchor for the mean mode: extrapolated value at +l_v is zero.
    if ksq == 0.0 {
        let r = layout.pres(Phase::Upper, cells - 1);
        let (cids, w) = ([cells - 1, cells - 2], [1.5, -0.5]);
        for (c, wgt) in cids.iter().zip(w.iter()) {
            a.add(r, layout.pres(Phase::Upper, *c), re(*wgt));
        }
    }

    // Velocity jump rows at the lower interface slots.
    for i in 0..dim {
        let r = layout.vel(Phase::Lower, cells, i);
        a.add(r, layout.vel(Phase::Upper, 0, i), re(1.0));
        a.add(r, layout.vel(Phase::Lower, cells, i), re(-1.0));
    }

    // Kinematic row at the height slot.
    {
        let r = layout.height();
        a.add(r, layout.height(), re(1.0 / dt));
        a.add(r, layout.vel(Phase::Lower, cells, dim - 1), re(-0.5));
        a.add(r, layout.vel(Phase::Upper, 0, dim - 1), re(-0.5));
    }

    // Stress rows at the upper interface slots.
    for j in 0..dim - 1 {
        // -[nu (D_N u_j + i k_j u_N)] = g_j
        let r = layout.vel(Phase::Upper, 0, j);
        for ph in Phase::BOTH {
            let nu = params.nu(ph);
            let sgn = match ph {
                Phase::Upper => -1.0,
                Phase::Lower => 1.0,
            };
            let (nodes, w) = one_sided_deriv(grid, ph);
            for (node, wgt) in nodes.iter().zip(w.iter()) {
                a.add(r, layout.vel(ph, *node, j), re(sgn * nu * wgt));
            }
            let iface = grid.interface_node(ph);
            a.add(r, layout.vel(ph, iface, dim - 1), im(sgn * nu * k[j]));
        }
    }
    {
        // [theta] - 2 [nu D_N u_N] + (sigma |k|^2 - [rho] gamma_a) h = g_N
        let r = layout.vel(Phase::Upper, 0, dim - 1);
        for ph in Phase::BOTH {
            let nu = params.nu(ph);
            let sgn = match ph {
                Phase::Upper => 1.0,
                Phase::Lower => -1.0,
            };
            let (cids, wp) = pressure_trace(grid, ph);
            for (c, wgt) in cids.iter().zip(wp.iter()) {
                a.add(r, layout.pres(ph, *c), re(sgn * wgt));
            }
            let (nodes, w) = one_sided_deriv(grid, ph);
            for (node, wgt) in nodes.iter().zip(w.iter()) {
                a.add(r, layout.vel(ph, *node, dim - 1), re(-2.0 * sgn * nu * wgt));
            }
        }
        a.add(
            r,
            layout.height(),
            re(params.sigma * ksq - params.jump_rho() * params.gamma_a),
        );
    }

    let lu = a.factor().map_err(|e| {
        CoreError::Parameter(format!(
            "wavenumber block q = {q} (k = [{}, {}], dt = {dt}) failed to factorize: {e}",
            k[0], k[1]
        ))
    })?;
    Ok(WavenumberBlock { q, k, layout, matrix: a, lu })
}

/// Spectral trajectory state at one time node: velocity profiles per phase
/// and component, and the height spectrum.
#[derive(Debug, Clone)]
pub struct SpectralState {
    /// `u[phase][comp]` of shape `(h_len, v_len)`.
    pub u: Vec<Vec<Array2<Complex64>>>,
    pub h: Array1<Complex64>,
}

impl SpectralState {
    pub fn zeros(grid: &StripGrid) -> Self {
        let shape = (grid.h_len(), grid.v_len());
        Self {
            u: (0..2)
                .map(|_| (0..grid.dim).map(|_| Array2::zeros(shape)).collect())
                .collect(),
            h: Array1::zeros(grid.h_len()),
        }
    }

    pub fn from_physical(grid: &StripGrid, u0: &TwoPhaseField, h0: &HeightField) -> Self {
        let u = Phase::BOTH
            .iter()
            .map(|ph| (0..grid.dim).map(|c| grid.fft_forward(u0.block(*ph, c))).collect())
            .collect();
        let h2 = h0.values.clone().insert_axis(ndarray::Axis(1));
        let h = grid.fft_forward(&h2.mapv(|v| v)).column(0).to_owned();
        Self { u, h }
    }
}

/// Spectral data of one time node.
pub struct SpectralData {
    f: Vec<Vec<Array2<Complex64>>>,
    f_d: Vec<Array2<Complex64>>,
    g: Vec<Array1<Complex64>>,
    g_h: Array1<Complex64>,
}

fn line_fft(grid: &StripGrid, v: &Array1<f64>) -> Array1<Complex64> {
    let a = v.clone().insert_axis(ndarray::Axis(1));
    grid.fft_forward(&a).column(0).to_owned()
}

/// Transform the data tuple of one time node into spectral space.
pub fn spectral_data(grid: &StripGrid, data: &DataF, n: usize) -> SpectralData {
    SpectralData {
        f: Phase::BOTH
            .iter()
            .map(|ph| {
                (0..grid.dim)
                    .map(|c| grid.fft_forward(data.f[n].block(*ph, c)))
                    .collect()
            })
            .collect(),
        f_d: Phase::BOTH
            .iter()
            .map(|ph| grid.fft_forward(data.f_d[n].block(*ph, 0)))
            .collect(),
        g: (0..grid.dim).map(|c| line_fft(grid, &data.g[n][c])).collect(),
        g_h: line_fft(grid, &data.g_h[n]),
    }
}

/// Per-step output: the advanced state plus nodal pressure profiles
/// reconstructed from the staggered values.
pub struct StepOutput {
    pub state: SpectralState,
    /// `theta[phase]` nodal spectra of shape `(h_len, v_len)`.
    pub theta: Vec<Array2<Complex64>>,
}

/// Factorized blocks for every wavenumber at a fixed step size.
pub struct StokesSolver {
    pub grid: StripGrid,
    pub dt: f64,
    pub params: LinearParams,
    blocks: Vec<WavenumberBlock>,
}

impl StokesSolver {
    pub fn new(grid: StripGrid, dt: f64, params: LinearParams) -> Result<Self> {
        let blocks: Result<Vec<_>> = (0..grid.h_len())
            .into_par_iter()
            .map(|q| assemble_block(&grid, q, dt, &params))
            .collect();
        Ok(Self { grid, dt, params, blocks: blocks? })
    }

    pub fn block(&self, q: usize) -> &WavenumberBlock {
        &self.blocks[q]
    }

    /// Advance one backward-Euler step with data already at the new node.
    pub fn step(&self, state: &SpectralState, data: &SpectralData) -> StepOutput {
        let grid = &self.grid;
        let dim = grid.dim;
        let cells = grid.n_v;
        let layout = Layout { dim, cells };
        let vlen = grid.v_len();

        let solutions: Vec<Vec<Complex64>> = (0..grid.h_len())
            .into_par_iter()
            .map(|q| {
                let blk = &self.blocks[q];
                let mut rhs = vec![Complex64::default(); layout.n_unknowns()];
                for (p, ph) in Phase::BOTH.iter().enumerate() {
                    let rho = self.params.rho(*ph);
                    let interface_node = grid.interface_node(*ph);
                    let far_node = if interface_node == 0 { cells } else { 0 };
                    for m in 1..cells {
                        for i in 0..dim {
                            rhs[layout.vel(*ph, m, i)] = data.f[p][i][[q, m]]
                                + Complex64::new(rho / self.dt, 0.0) * state.u[p][i][[q, m]];
                        }
                    }
                    for i in 0..dim {
                        rhs[layout.vel(*ph, far_node, i)] = Complex64::default();
                    }
                    for c in 0..cells {
                        if grid.k_squared(q) == 0.0 && *ph == Phase::Upper && c == cells - 1 {
                            rhs[layout.pres(*ph, c)] = Complex64::default();
                            continue;
                        }
                        rhs[layout.pres(*ph, c)] =
                            0.5 * (data.f_d[p][[q, c]] + data.f_d[p][[q, c + 1]]);
                    }
                }
                // Interface rows: jump rows are homogeneous (already zero).
                for j in 0..dim - 1 {
                    rhs[layout.vel(Phase::Upper, 0, j)] = data.g[j][q];
                }
                rhs[layout.vel(Phase::Upper, 0, dim - 1)] = data.g[dim - 1][q];
                rhs[layout.height()] =
                    data.g_h[q] + Complex64::new(1.0 / self.dt, 0.0) * state.h[q];
                blk.solve(rhs)
            })
            .collect();

        let mut next = SpectralState::zeros(grid);
        let mut theta: Vec<Array2<Complex64>> =
            (0..2).map(|_| Array2::zeros((grid.h_len(), vlen))).collect();
        for (q, sol) in solutions.iter().enumerate() {
            for (p, ph) in Phase::BOTH.iter().enumerate() {
                for i in 0..dim {
                    for m in 0..vlen {
                        next.u[p][i][[q, m]] = sol[layout.vel(*ph, m, i)];
                    }
                }
                // Nodal pressure: cell average inside, extrapolation at the
                // block edges.
                for m in 1..cells {
                    theta[p][[q, m]] =
                        0.5 * (sol[layout.pres(*ph, m - 1)] + sol[layout.pres(*ph, m)]);
                }
                theta[p][[q, 0]] = 1.5 * sol[layout.pres(*ph, 0)] - 0.5 * sol[layout.pres(*ph, 1)];
                theta[p][[q, cells]] =
                    1.5 * sol[layout.pres(*ph, cells - 1)] - 0.5 * sol[layout.pres(*ph, cells - 2)];
            }
            next.h[q] = sol[layout.height()];
        }
        StepOutput { state: next, theta }
    }

    /// Solve the full linear evolution for given data and initial values.
    ///
    /// The initial data must satisfy the pointwise compatibility conditions
    /// `div u0 = f_d(0)` and `[u0] = 0` within `compat_tol`.
    pub fn solve_evolution(
        &self,
        time: &TimeGrid,
        data: &DataF,
        u0: &TwoPhaseField,
        h0: &HeightField,
        compat_tol: f64,
    ) -> Result<StateZ> {
        let grid = self.grid;
        assert!((time.dt() - self.dt).abs() < 1e-14 * self.dt.max(1.0), "dt mismatch");

        // Pointwise compatibility of the initial data.
        let mut div = TwoPhaseField::zeros(grid, Rank::Scalar);
        for j in 1..=grid.dim {
            let dj = u0.deriv(j);
            for ph in Phase::BOTH {
                *div.block_mut(ph, 0) = div.block(ph, 0) + dj.block(ph, j - 1);
            }
        }
        let div_defect = div.axpy(-1.0, &data.f_d[0]).max_abs();
        if div_defect > compat_tol {
            return Err(CoreError::Incompatible(format!(
                "div u0 differs from f_d(0) by {div_defect} (tolerance {compat_tol})"
            )));
        }
        for c in 0..grid.dim {
            let j = u0.jump(c);
            let m = j.iter().fold(0.0f64, |a, v| a.max(v.abs()));
            if m > compat_tol {
                return Err(CoreError::Incompatible(format!(
                    "velocity jump of u0 component {c} is {m} (tolerance {compat_tol})"
                )));
            }
        }
        h0.validate()?;

        let mut z = StateZ::zeros(grid, *time);
        z.u[0] = u0.clone();
        z.h[0] = h0.clone();

        let mut state = SpectralState::from_physical(&grid, u0, h0);
        let mut first_theta: Option<Vec<Array2<Complex64>>> = None;
        for n in 1..=time.n_t {
            let sdata = spectral_data(&grid, data, n);
            let out = self.step(&state, &sdata);
            state = out.state;

            let mut u_phys = TwoPhaseField::zeros(grid, Rank::Vector);
            let mut theta_phys = TwoPhaseField::zeros(grid, Rank::Scalar);
            for (p, ph) in Phase::BOTH.iter().enumerate() {
                for i in 0..grid.dim {
                    *u_phys.block_mut(*ph, i) = grid.fft_inverse(&state.u[p][i]);
                }
                *theta_phys.block_mut(*ph, 0) = grid.fft_inverse(&out.theta[p]);
            }
            let h2 = state.h.clone().insert_axis(ndarray::Axis(1));
            let h_phys = grid.fft_inverse(&h2).column(0).to_owned();

            z.pi[n] = theta_phys.jump(0);
            z.u[n] = u_phys;
            z.theta[n] = theta_phys;
            z.h[n] = HeightField { grid, values: h_phys };
            if first_theta.is_none() {
                first_theta = Some(out.theta);
            }
        }
        // Backward Euler provides no initial pressure; copy the first step's.
        z.theta[0] = z.theta[1].clone();
        z.pi[0] = z.pi[1].clone();
        Ok(z)
    }
}

/// Discrete energy `sum rho |u|^2 + sigma |grad' h|^2` of one trajectory
/// node; non-increasing for the homogeneous problem without gravity.
pub fn energy_functional(z: &StateZ, params: &LinearParams, n: usize) -> f64 {
    let grid = z.grid;
    let wq = grid.h_weight();
    let wv = grid.dv();
    let mut e = 0.0;
    for ph in Phase::BOTH {
        let rho = params.rho(ph);
        for c in 0..grid.dim {
            let b = z.u[n].block(ph, c);
            for q in 0..grid.h_len() {
                for m in 0..grid.v_len() {
                    // Trapezoid weights in the vertical.
                    let w = if m == 0 || m == grid.n_v { 0.5 } else { 1.0 };
                    e += rho * b[[q, m]] * b[[q, m]] * w * wv * wq;
                }
            }
        }
    }
    for djj in 0..grid.dim - 1 {
        let dh = z.h[n].deriv(djj);
        for q in 0..grid.h_len() {
            e += params.sigma * dh[q] * dh[q] * wq;
        }
    }
    e
}
