//! Discrete representation of the split strip domain.
//!
//! The computational domain is a horizontally periodic strip of height
//! `2 l_v`, cut by the flat interface `xi_N = 0` into a lower and an upper
//! phase block. Horizontal directions are periodic with period `2 pi l_h`
//! and are differentiated spectrally; the vertical direction uses
//! second-order finite differences that never reach across the interface.
//!
//! Fields carry independent one-sided values on the shared interface node,
//! so jumps across `xi_N = 0` are first-class quantities.

use ndarray::{Array1, Array2};
use num_complex::Complex64;
use rustfft::FftPlanner;
use std::cell::RefCell;
use std::f64::consts::PI;
use std::sync::Arc;

use crate::error::{CoreError, Result};

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn plan_forward(n: usize) -> Arc<dyn rustfft::Fft<f64>> {
    PLANNER.with(|p| p.borrow_mut().plan_fft_forward(n))
}

fn plan_inverse(n: usize) -> Arc<dyn rustfft::Fft<f64>> {
    PLANNER.with(|p| p.borrow_mut().plan_fft_inverse(n))
}

/// Which side of the interface a block of samples lives on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    /// `xi_N < 0` (phase 1).
    Lower,
    /// `xi_N > 0` (phase 2).
    Upper,
}

impl Phase {
    pub const BOTH: [Phase; 2] = [Phase::Lower, Phase::Upper];
}

/// Tensor rank of a [`TwoPhaseField`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rank {
    Scalar,
    /// `dim` components.
    Vector,
    /// `dim * dim` components, row-major `(i, j)`.
    Tensor,
}

/// Horizontally periodic, vertically truncated strip grid.
///
/// Horizontal wavenumbers are `k_j = j / l_h` for signed mode indices
/// `j` in `[-n_h/2, n_h/2 - 1]`; the grid period is `2 pi l_h`. Each phase
/// block carries `n_v + 1` vertical nodes including its far-field node at
/// `xi_N = -l_v` (resp. `+l_v`) and the shared interface node at `xi_N = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StripGrid {
    /// Spatial dimension (2 or 3); the interface has `dim - 1` dimensions.
    pub dim: usize,
    /// Horizontal points (= modes) per direction; even, at least 8.
    pub n_h: usize,
    /// Horizontal period divided by `2 pi`.
    pub l_h: f64,
    /// Vertical cells per phase block.
    pub n_v: usize,
    /// Vertical truncation height; blocks span `[-l_v, 0]` and `[0, l_v]`.
    pub l_v: f64,
}

impl StripGrid {
    pub fn new(dim: usize, n_h: usize, l_h: f64, n_v: usize, l_v: f64) -> Result<Self> {
        if dim != 2 && dim != 3 {
            return Err(CoreError::Config(format!("dim must be 2 or 3, got {dim}")));
        }
        if n_h < 8 || n_h % 2 != 0 {
            return Err(CoreError::Config(format!(
                "n_h must be even and >= 8, got {n_h}"
            )));
        }
        if n_v < 8 {
            return Err(CoreError::Config(format!("n_v must be >= 8, got {n_v}")));
        }
        if !(l_h > 0.0) || !(l_v > 0.0) {
            return Err(CoreError::Config(format!(
                "l_h and l_v must be positive, got l_h = {l_h}, l_v = {l_v}"
            )));
        }
        Ok(Self { dim, n_h, l_h, n_v, l_v })
    }

    /// Number of horizontal grid points (flattened over `dim - 1` directions).
    pub fn h_len(&self) -> usize {
        self.n_h.pow(self.dim as u32 - 1)
    }

    /// Vertical nodes per phase block (cells + 1).
    pub fn v_len(&self) -> usize {
        self.n_v + 1
    }

    /// Horizontal grid spacing.
    pub fn dx(&self) -> f64 {
        2.0 * PI * self.l_h / self.n_h as f64
    }

    /// Vertical grid spacing.
    pub fn dv(&self) -> f64 {
        self.l_v / self.n_v as f64
    }

    /// Index of the interface node within a block.
    pub fn interface_node(&self, phase: Phase) -> usize {
        match phase {
            Phase::Lower => self.n_v,
            Phase::Upper => 0,
        }
    }

    /// Vertical coordinate of node `m` in the given block.
    pub fn xi_v(&self, phase: Phase, m: usize) -> f64 {
        match phase {
            Phase::Lower => -self.l_v + self.dv() * m as f64,
            Phase::Upper => self.dv() * m as f64,
        }
    }

    /// Cartesian horizontal indices of flattened index `q`.
    pub fn h_multi_index(&self, q: usize) -> [usize; 2] {
        [q % self.n_h, q / self.n_h]
    }

    /// Horizontal coordinates of flattened index `q` (length `dim - 1`).
    pub fn x_h(&self, q: usize) -> [f64; 2] {
        let mi = self.h_multi_index(q);
        [self.dx() * mi[0] as f64, self.dx() * mi[1] as f64]
    }

    /// Signed mode index for FFT bin `i` (standard DFT ordering).
    pub fn signed_mode(&self, i: usize) -> i64 {
        if i < self.n_h / 2 {
            i as i64
        } else {
            i as i64 - self.n_h as i64
        }
    }

    /// Wavenumber vector of the flattened FFT bin `q` (length `dim - 1`).
    pub fn wavenumber(&self, q: usize) -> [f64; 2] {
        let mi = self.h_multi_index(q);
        let mut k = [0.0; 2];
        for d in 0..self.dim - 1 {
            k[d] = self.signed_mode(mi[d]) as f64 / self.l_h;
        }
        k
    }

    /// |k|^2 for flattened FFT bin `q`.
    pub fn k_squared(&self, q: usize) -> f64 {
        let k = self.wavenumber(q);
        k[0] * k[0] + k[1] * k[1]
    }

    /// Quadrature weight of one horizontal grid point.
    pub fn h_weight(&self) -> f64 {
        self.dx().powi(self.dim as i32 - 1)
    }

    /// Forward DFT over the flattened horizontal index of each row of `f`.
    ///
    /// `f` has shape `(h_len, nrows)`. Normalized so bin 0 is the mean.
    pub fn fft_forward(&self, f: &Array2<f64>) -> Array2<Complex64> {
        let c = f.mapv(|v| Complex64::new(v, 0.0));
        self.fft_forward_c(&c)
    }

    pub fn fft_forward_c(&self, f: &Array2<Complex64>) -> Array2<Complex64> {
        let mut out = f.clone();
        self.fft_axes(&mut out, true);
        out /= Complex64::new(self.h_len() as f64, 0.0);
        out
    }

    /// Inverse of [`StripGrid::fft_forward`]; imaginary parts are dropped.
    pub fn fft_inverse(&self, fh: &Array2<Complex64>) -> Array2<f64> {
        self.fft_inverse_c(fh).mapv(|c| c.re)
    }

    pub fn fft_inverse_c(&self, fh: &Array2<Complex64>) -> Array2<Complex64> {
        let mut out = fh.clone();
        self.fft_axes(&mut out, false);
        out
    }

    /// In-place DFT along every horizontal direction, one row at a time.
    fn fft_axes(&self, data: &mut Array2<Complex64>, forward: bool) {
        let plan = if forward {
            plan_forward(self.n_h)
        } else {
            plan_inverse(self.n_h)
        };
        let ncols = data.shape()[1];
        let n = self.n_h;
        let mut scratch = vec![Complex64::default(); n];
        for col in 0..ncols {
            if self.dim == 2 {
                for i in 0..n {
                    scratch[i] = data[[i, col]];
                }
                plan.process(&mut scratch);
                for i in 0..n {
                    data[[i, col]] = scratch[i];
                }
            } else {
                // x-direction lines, then y-direction lines.
                for iy in 0..n {
                    for ix in 0..n {
                        scratch[ix] = data[[ix + n * iy, col]];
                    }
                    plan.process(&mut scratch);
                    for ix in 0..n {
                        data[[ix + n * iy, col]] = scratch[ix];
                    }
                }
                for ix in 0..n {
                    for iy in 0..n {
                        scratch[iy] = data[[ix + n * iy, col]];
                    }
                    plan.process(&mut scratch);
                    for iy in 0..n {
                        data[[ix + n * iy, col]] = scratch[iy];
                    }
                }
            }
        }
    }

    /// Spectral derivative along horizontal direction `dir` (0-based).
    ///
    /// Exact for band-limited data; the Nyquist mode is zeroed.
    pub fn deriv_h(&self, f: &Array2<f64>, dir: usize) -> Array2<f64> {
        assert!(dir < self.dim - 1, "horizontal direction out of range");
        let mut fh = self.fft_forward(f);
        self.apply_ik(&mut fh, dir);
        self.fft_inverse(&fh)
    }

    /// Multiply spectrum by `i k_dir`, zeroing the Nyquist mode.
    pub fn apply_ik(&self, fh: &mut Array2<Complex64>, dir: usize) {
        let ncols = fh.shape()[1];
        for q in 0..self.h_len() {
            let mi = self.h_multi_index(q);
            let j = self.signed_mode(mi[dir]);
            let factor = if j == -(self.n_h as i64) / 2 {
                Complex64::new(0.0, 0.0)
            } else {
                Complex64::new(0.0, j as f64 / self.l_h)
            };
            for col in 0..ncols {
                fh[[q, col]] *= factor;
            }
        }
    }

    /// Zero all modes with any direction index above `n_h / 3` (2/3 rule).
    pub fn dealias(&self, f: &mut Array2<f64>) {
        let mut fh = self.fft_forward(f);
        self.dealias_spectrum(&mut fh);
        *f = self.fft_inverse(&fh);
    }

    pub fn dealias_spectrum(&self, fh: &mut Array2<Complex64>) {
        let cut = self.n_h as i64 / 3;
        let ncols = fh.shape()[1];
        for q in 0..self.h_len() {
            let mi = self.h_multi_index(q);
            let mut keep = true;
            for d in 0..self.dim - 1 {
                if self.signed_mode(mi[d]).abs() > cut {
                    keep = false;
                }
            }
            if !keep {
                for col in 0..ncols {
                    fh[[q, col]] = Complex64::new(0.0, 0.0);
                }
            }
        }
    }

    /// Pointwise product with 2/3-rule dealiasing of the result.
    pub fn mul_dealiased(&self, a: &Array2<f64>, b: &Array2<f64>) -> Array2<f64> {
        let mut out = a * b;
        self.dealias(&mut out);
        out
    }

    /// Second-order vertical first derivative along axis 1, one-sided at the
    /// block edges (never across the interface).
    pub fn deriv_v(&self, f: &Array2<f64>) -> Array2<f64> {
        let (nq, nm) = (f.shape()[0], f.shape()[1]);
        assert!(nm >= 4, "vertical derivative needs at least 4 nodes");
        let d = self.dv();
        let mut out = Array2::zeros((nq, nm));
        for q in 0..nq {
            out[[q, 0]] = (-3.0 * f[[q, 0]] + 4.0 * f[[q, 1]] - f[[q, 2]]) / (2.0 * d);
            for m in 1..nm - 1 {
                out[[q, m]] = (f[[q, m + 1]] - f[[q, m - 1]]) / (2.0 * d);
            }
            out[[q, nm - 1]] =
                (3.0 * f[[q, nm - 1]] - 4.0 * f[[q, nm - 2]] + f[[q, nm - 3]]) / (2.0 * d);
        }
        out
    }

    /// Second-order vertical second derivative along axis 1.
    pub fn deriv_vv(&self, f: &Array2<f64>) -> Array2<f64> {
        let (nq, nm) = (f.shape()[0], f.shape()[1]);
        assert!(nm >= 4, "vertical second derivative needs at least 4 nodes");
        let d2 = self.dv() * self.dv();
        let mut out = Array2::zeros((nq, nm));
        for q in 0..nq {
            out[[q, 0]] =
                (2.0 * f[[q, 0]] - 5.0 * f[[q, 1]] + 4.0 * f[[q, 2]] - f[[q, 3]]) / d2;
            for m in 1..nm - 1 {
                out[[q, m]] = (f[[q, m + 1]] - 2.0 * f[[q, m]] + f[[q, m - 1]]) / d2;
            }
            out[[q, nm - 1]] = (2.0 * f[[q, nm - 1]] - 5.0 * f[[q, nm - 2]]
                + 4.0 * f[[q, nm - 3]]
                - f[[q, nm - 4]])
                / d2;
        }
        out
    }
}

/// Uniform time grid on `J = (0, horizon)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    pub horizon: f64,
    pub n_t: usize,
}

impl TimeGrid {
    pub fn new(horizon: f64, n_t: usize) -> Result<Self> {
        if !(horizon > 0.0) {
            return Err(CoreError::Config(format!(
                "time horizon must be positive, got {horizon}"
            )));
        }
        if n_t < 1 {
            return Err(CoreError::Config("n_t must be >= 1".into()));
        }
        Ok(Self { horizon, n_t })
    }

    pub fn dt(&self) -> f64 {
        self.horizon / self.n_t as f64
    }

    /// Time of node `n` (0 through `n_t`).
    pub fn t(&self, n: usize) -> f64 {
        self.dt() * n as f64
    }
}

/// A scalar, vector or tensor field split into lower/upper phase blocks.
///
/// Each component stores samples of shape `(h_len, v_len)` per block; the
/// interface node `xi_N = 0` is duplicated so one-sided traces and jumps
/// are always available. The jump convention is upper minus lower.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoPhaseField {
    pub grid: StripGrid,
    pub rank: Rank,
    lower: Vec<Array2<f64>>,
    upper: Vec<Array2<f64>>,
}

impl TwoPhaseField {
    pub fn zeros(grid: StripGrid, rank: Rank) -> Self {
        let nc = Self::component_count(grid.dim, rank);
        let shape = (grid.h_len(), grid.v_len());
        Self {
            grid,
            rank,
            lower: (0..nc).map(|_| Array2::zeros(shape)).collect(),
            upper: (0..nc).map(|_| Array2::zeros(shape)).collect(),
        }
    }

    pub fn component_count(dim: usize, rank: Rank) -> usize {
        match rank {
            Rank::Scalar => 1,
            Rank::Vector => dim,
            Rank::Tensor => dim * dim,
        }
    }

    pub fn n_components(&self) -> usize {
        self.lower.len()
    }

    /// Fill component `c` from a function of (phase, flat horizontal index,
    /// vertical node index).
    pub fn fill_with(&mut self, c: usize, f: impl Fn(Phase, usize, usize) -> f64) {
        let (nq, nm) = (self.grid.h_len(), self.grid.v_len());
        for q in 0..nq {
            for m in 0..nm {
                self.lower[c][[q, m]] = f(Phase::Lower, q, m);
                self.upper[c][[q, m]] = f(Phase::Upper, q, m);
            }
        }
    }

    /// Build a scalar field by sampling `f(x_h, xi_v, phase)`.
    pub fn from_fn(grid: StripGrid, rank: Rank, f: impl Fn(usize, Phase, &[f64], f64) -> f64) -> Self {
        let mut out = Self::zeros(grid, rank);
        for c in 0..out.n_components() {
            let (nq, nm) = (grid.h_len(), grid.v_len());
            for q in 0..nq {
                let x = grid.x_h(q);
                let xs = &x[..grid.dim - 1];
                for m in 0..nm {
                    out.lower[c][[q, m]] = f(c, Phase::Lower, xs, grid.xi_v(Phase::Lower, m));
                    out.upper[c][[q, m]] = f(c, Phase::Upper, xs, grid.xi_v(Phase::Upper, m));
                }
            }
        }
        out
    }

    pub fn block(&self, phase: Phase, c: usize) -> &Array2<f64> {
        match phase {
            Phase::Lower => &self.lower[c],
            Phase::Upper => &self.upper[c],
        }
    }

    pub fn block_mut(&mut self, phase: Phase, c: usize) -> &mut Array2<f64> {
        match phase {
            Phase::Lower => &mut self.lower[c],
            Phase::Upper => &mut self.upper[c],
        }
    }

    /// One-sided interface trace of component `c`.
    pub fn trace(&self, phase: Phase, c: usize) -> Array1<f64> {
        let m = self.grid.interface_node(phase);
        self.block(phase, c).column(m).to_owned()
    }

    /// Jump of component `c` across the interface: upper trace minus lower.
    pub fn jump(&self, c: usize) -> Array1<f64> {
        &self.trace(Phase::Upper, c) - &self.trace(Phase::Lower, c)
    }

    /// Mean of the two one-sided traces.
    pub fn trace_mean(&self, c: usize) -> Array1<f64> {
        0.5 * (&self.trace(Phase::Upper, c) + &self.trace(Phase::Lower, c))
    }

    /// Spectral horizontal derivative of every component.
    pub fn deriv_h(&self, dir: usize) -> Self {
        self.map_blocks(|g, b| g.deriv_h(b, dir))
    }

    /// Vertical derivative (one-sided at block edges) of every component.
    pub fn deriv_v(&self) -> Self {
        self.map_blocks(|g, b| g.deriv_v(b))
    }

    /// Vertical second derivative of every component.
    pub fn deriv_vv(&self) -> Self {
        self.map_blocks(|g, b| g.deriv_vv(b))
    }

    /// Flattened derivative `D_j` with 1-based index `j`; `j = dim` is vertical.
    pub fn deriv(&self, j: usize) -> Self {
        assert!(j >= 1 && j <= self.grid.dim);
        if j == self.grid.dim {
            self.deriv_v()
        } else {
            self.deriv_h(j - 1)
        }
    }

    pub fn map_blocks(&self, f: impl Fn(&StripGrid, &Array2<f64>) -> Array2<f64>) -> Self {
        Self {
            grid: self.grid,
            rank: self.rank,
            lower: self.lower.iter().map(|b| f(&self.grid, b)).collect(),
            upper: self.upper.iter().map(|b| f(&self.grid, b)).collect(),
        }
    }

    pub fn map_values(&self, f: impl Fn(f64) -> f64 + Copy) -> Self {
        self.map_blocks(|_, b| b.mapv(f))
    }

    /// Component-wise `self + s * other`.
    pub fn axpy(&self, s: f64, other: &Self) -> Self {
        assert_eq!(self.rank, other.rank);
        Self {
            grid: self.grid,
            rank: self.rank,
            lower: self
                .lower
                .iter()
                .zip(&other.lower)
                .map(|(a, b)| a + &(s * b))
                .collect(),
            upper: self
                .upper
                .iter()
                .zip(&other.upper)
                .map(|(a, b)| a + &(s * b))
                .collect(),
        }
    }

    pub fn scale(&self, s: f64) -> Self {
        self.map_values(|v| s * v)
    }

    /// Maximum absolute value over both blocks and all components.
    pub fn max_abs(&self) -> f64 {
        let mut m: f64 = 0.0;
        for b in self.lower.iter().chain(self.upper.iter()) {
            for &v in b.iter() {
                m = m.max(v.abs());
            }
        }
        m
    }

    /// 2/3-rule dealiasing of every component in place.
    pub fn dealias(&mut self) {
        let grid = self.grid;
        for b in self.lower.iter_mut().chain(self.upper.iter_mut()) {
            grid.dealias(b);
        }
    }

    /// Per-wavenumber vertical profiles of component `c`.
    pub fn horizontal_spectrum(&self, phase: Phase, c: usize) -> Array2<Complex64> {
        self.grid.fft_forward(self.block(phase, c))
    }
}
