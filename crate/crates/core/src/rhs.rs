//! Right-hand sides of the flattened two-phase system.
//!
//! After flattening, the moving-boundary problem becomes a linear two-phase
//! Stokes system driven by nonlinear remainders: a bulk momentum remainder
//! `F`, a divergence remainder `F_d`, interface stress remainders `G_1..G_N`
//! built from one-sided traces, and a kinematic remainder `G_h`. This module
//! assembles all of them, per phase block, and aggregates them over a time
//! grid into the data tuple consumed by the linear solver.
//!
//! Every displayed formula is assembled here once for production; the test
//! suites assemble them a second time from scratch (per-point, phase-split)
//! and compare, since transcription slips are the dominant risk in operators
//! of this length.

use ndarray::{Array1, Array2};

use crate::constitutive::{PhasePair, SecondDerivatives};
use crate::error::{CoreError, Result};
use crate::geometry::{
    self, broadcast_mul, f_correction_with_jet, line_mul, transformed_deformation, HeightField,
};
use crate::grid::{Phase, Rank, StripGrid, TimeGrid, TwoPhaseField};

/// Discrete trajectory of the flattened unknowns `(u, theta, pi, h)`.
///
/// `pi` is the interface pressure jump and must equal the trace jump of
/// `theta` at every node; `u` must have (numerically) zero jump.
#[derive(Debug, Clone)]
pub struct StateZ {
    pub grid: StripGrid,
    pub time: TimeGrid,
    pub u: Vec<TwoPhaseField>,
    pub theta: Vec<TwoPhaseField>,
    pub pi: Vec<Array1<f64>>,
    pub h: Vec<HeightField>,
}

impl StateZ {
    pub fn zeros(grid: StripGrid, time: TimeGrid) -> Self {
        let nt = time.n_t + 1;
        Self {
            grid,
            time,
            u: (0..nt).map(|_| TwoPhaseField::zeros(grid, Rank::Vector)).collect(),
            theta: (0..nt).map(|_| TwoPhaseField::zeros(grid, Rank::Scalar)).collect(),
            pi: (0..nt).map(|_| Array1::zeros(grid.h_len())).collect(),
            h: (0..nt).map(|_| HeightField::zeros(grid)).collect(),
        }
    }

    pub fn n_nodes(&self) -> usize {
        self.time.n_t + 1
    }

    /// Enforced invariants: continuous velocity and `pi = [theta]`.
    pub fn validate(&self, tol: f64) -> Result<()> {
        for n in 0..self.n_nodes() {
            for c in 0..self.grid.dim {
                let j = self.u[n].jump(c);
                let m = j.iter().fold(0.0f64, |a, v| a.max(v.abs()));
                if m > tol {
                    return Err(CoreError::Domain(format!(
                        "velocity jump {m} at node {n} exceeds {tol}"
                    )));
                }
            }
            let tj = self.theta[n].jump(0);
            for q in 0..self.grid.h_len() {
                if (tj[q] - self.pi[n][q]).abs() > tol {
                    return Err(CoreError::Domain(format!(
                        "pi differs from trace jump of theta at node {n}"
                    )));
                }
            }
            self.h[n].validate()?;
        }
        Ok(())
    }

    /// Discrete time derivative of `h` at node `n`: backward difference,
    /// forward at the initial node (which no implicit step consumes).
    pub fn dt_h(&self, n: usize) -> Array1<f64> {
        let dt = self.time.dt();
        if n == 0 {
            (&self.h[1].values - &self.h[0].values) / dt
        } else {
            (&self.h[n].values - &self.h[n - 1].values) / dt
        }
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            grid: self.grid,
            time: self.time,
            u: self.u.iter().map(|f| f.scale(s)).collect(),
            theta: self.theta.iter().map(|f| f.scale(s)).collect(),
            pi: self.pi.iter().map(|p| s * p).collect(),
            h: self.h.iter().map(|h| h.scale(s)).collect(),
        }
    }

    /// Node-wise difference `self - other`.
    pub fn diff(&self, other: &Self) -> Self {
        Self {
            grid: self.grid,
            time: self.time,
            u: self.u.iter().zip(&other.u).map(|(a, b)| a.axpy(-1.0, b)).collect(),
            theta: self
                .theta
                .iter()
                .zip(&other.theta)
                .map(|(a, b)| a.axpy(-1.0, b))
                .collect(),
            pi: self.pi.iter().zip(&other.pi).map(|(a, b)| a - b).collect(),
            h: self
                .h
                .iter()
                .zip(&other.h)
                .map(|(a, b)| HeightField { grid: a.grid, values: &a.values - &b.values })
                .collect(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        let mut m = 0.0f64;
        for n in 0..self.n_nodes() {
            m = m.max(self.u[n].max_abs());
            m = m.max(self.theta[n].max_abs());
            m = m.max(self.pi[n].iter().fold(0.0f64, |a, v| a.max(v.abs())));
            m = m.max(self.h[n].max_abs());
        }
        m
    }
}

/// Data tuple `(F, f_d, G, g_h)` over the time grid, plus the potential
/// whose vertical derivative is `f_d` (needed by the negative-order norm
/// surrogate and the compatibility check).
#[derive(Debug, Clone)]
pub struct DataF {
    pub grid: StripGrid,
    pub time: TimeGrid,
    pub f: Vec<TwoPhaseField>,
    pub f_d: Vec<TwoPhaseField>,
    pub f_d_potential: Vec<TwoPhaseField>,
    /// Interface stress data, `dim` components per node.
    pub g: Vec<Vec<Array1<f64>>>,
    pub g_h: Vec<Array1<f64>>,
}

impl DataF {
    pub fn zeros(grid: StripGrid, time: TimeGrid) -> Self {
        let nt = time.n_t + 1;
        Self {
            grid,
            time,
            f: (0..nt).map(|_| TwoPhaseField::zeros(grid, Rank::Vector)).collect(),
            f_d: (0..nt).map(|_| TwoPhaseField::zeros(grid, Rank::Scalar)).collect(),
            f_d_potential: (0..nt).map(|_| TwoPhaseField::zeros(grid, Rank::Scalar)).collect(),
            g: (0..nt).map(|_| vec![Array1::zeros(grid.h_len()); grid.dim]).collect(),
            g_h: (0..nt).map(|_| Array1::zeros(grid.h_len())).collect(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        let mut m = 0.0f64;
        for n in 0..self.f.len() {
            m = m.max(self.f[n].max_abs());
            m = m.max(self.f_d[n].max_abs());
            for c in &self.g[n] {
                m = m.max(c.iter().fold(0.0f64, |a, v| a.max(v.abs())));
            }
            m = m.max(self.g_h[n].iter().fold(0.0f64, |a, v| a.max(v.abs())));
        }
        m
    }
}

/// Broadcast a torus line into every vertical level, then dealias.
fn broadcast_mul_dealiased(grid: &StripGrid, line: &Array1<f64>, b: &Array2<f64>) -> Array2<f64> {
    let mut out = broadcast_mul(grid, line, b);
    grid.dealias(&mut out);
    out
}

/// Quasilinear bulk remainder: the difference between the full viscous
/// stress divergence and its constant-coefficient linearization, written in
/// flattened coordinates.
///
/// Per phase block, with `E = E(u, h)`, `s = |E|^2` and coefficient
/// differences `2 (dmu/ds)(s) E_ij E_kl + (mu(s) - mu(0)) delta_ik delta_jl`,
/// contracted against
/// `(D_j D_k u_l + D_j D_l u_k) - (F_jk(h) u_l + F_jl(h) u_k)`.
pub fn eval_a(u: &TwoPhaseField, h: &HeightField, phases: &PhasePair) -> Result<TwoPhaseField> {
    let grid = u.grid;
    let dim = grid.dim;
    let jet = h.jet();
    let (e, esq) = transformed_deformation(u, h);
    let second = SecondDerivatives::new(u);
    let mut fcorr = Vec::with_capacity(dim * dim);
    for j in 1..=dim {
        for k in 1..=dim {
            fcorr.push(f_correction_with_jet(&jet, u, j, k));
        }
    }
    let mut out = TwoPhaseField::zeros(grid, Rank::Vector);
    for ph in Phase::BOTH {
        let model = phases.model(ph);
        let mu0 = model.mu0();
        let (mu, mu_dot) = model.eval_block(esq.block(ph, 0))?;
        for q in 0..grid.h_len() {
            for m in 0..grid.v_len() {
                for i in 0..dim {
                    let mut acc = 0.0;
                    for j in 0..dim {
                        let e_ij = e.block(ph, i * dim + j)[[q, m]];
                        for k in 0..dim {
                            for l in 0..dim {
                                let e_kl = e.block(ph, k * dim + l)[[q, m]];
                                let delta = if i == k && j == l { 1.0 } else { 0.0 };
                                let coeff = 2.0 * mu_dot[[q, m]] * e_ij * e_kl
                                    + (mu[[q, m]] - mu0) * delta;
                                if coeff == 0.0 {
                                    continue;
                                }
                                let dd = second.get(ph, j + 1, k + 1, l, q, m)
                                    + second.get(ph, j + 1, l + 1, k, q, m);
                                let fc = fcorr[j * dim + k].block(ph, l)[[q, m]]
                                    + fcorr[j * dim + l].block(ph, k)[[q, m]];
                                acc += coeff * (dd - fc);
                            }
                        }
                    }
                    out.block_mut(ph, i)[[q, m]] += acc;
                }
            }
        }
    }
    Ok(out)
}

/// One-sided interface traces of all first derivatives `D_i u_j`, plus the
/// viscosity values at the traced deformation, shared by the interface
/// operators. Traces are taken before forming any product.
pub struct InterfaceTraces {
    pub dim: usize,
    d_lower: Vec<Vec<Array1<f64>>>,
    d_upper: Vec<Vec<Array1<f64>>>,
    mu_lower: Array1<f64>,
    mu_upper: Array1<f64>,
    mu0_lower: f64,
    mu0_upper: f64,
}

impl InterfaceTraces {
    pub fn new(u: &TwoPhaseField, h: &HeightField, phases: &PhasePair) -> Result<Self> {
        let grid = u.grid;
        let dim = grid.dim;
        let (_, esq) = transformed_deformation(u, h);
        let mut d_lower = Vec::with_capacity(dim);
        let mut d_upper = Vec::with_capacity(dim);
        for i in 1..=dim {
            let di = u.deriv(i);
            d_lower.push((0..dim).map(|j| di.trace(Phase::Lower, j)).collect());
            d_upper.push((0..dim).map(|j| di.trace(Phase::Upper, j)).collect());
        }
        let mu_at = |ph: Phase| -> Result<Array1<f64>> {
            let s = esq.trace(ph, 0);
            let mut mu = Array1::zeros(grid.h_len());
            for q in 0..grid.h_len() {
                mu[q] = phases.model(ph).eval(s[q])?.0;
            }
            Ok(mu)
        };
        Ok(Self {
            dim,
            d_lower,
            d_upper,
            mu_lower: mu_at(Phase::Lower)?,
            mu_upper: mu_at(Phase::Upper)?,
            mu0_lower: phases.mu0(Phase::Lower),
            mu0_upper: phases.mu0(Phase::Upper),
        })
    }

    /// Trace of `D_i u_j` (1-based `i`, 0-based `j`).
    pub fn d(&self, ph: Phase, i: usize, j: usize) -> &Array1<f64> {
        match ph {
            Phase::Lower => &self.d_lower[i - 1][j],
            Phase::Upper => &self.d_upper[i - 1][j],
        }
    }

    pub fn mu(&self, ph: Phase) -> &Array1<f64> {
        match ph {
            Phase::Lower => &self.mu_lower,
            Phase::Upper => &self.mu_upper,
        }
    }

    pub fn mu0(&self, ph: Phase) -> f64 {
        match ph {
            Phase::Lower => self.mu0_lower,
            Phase::Upper => self.mu0_upper,
        }
    }

    /// Jump (upper minus lower) of a per-phase interface expression.
    pub fn jump(&self, f: impl Fn(Phase) -> Array1<f64>) -> Array1<f64> {
        f(Phase::Upper) - f(Phase::Lower)
    }
}

/// Tangential interface stress remainders `B_1 .. B_{N-1}` and the normal
/// remainder `B_N`, assembled from one-sided traces:
///
/// `B_j = -[mu D_N u_N] D_j h + [(mu - mu(0))(D_N u_j + D_j u_N)]
///        - sum_k [mu (D_j u_k + D_k u_j)] D_k h
///        + sum_k [mu (D_N u_j D_k h + D_N u_k D_j h)] D_k h`,
/// `B_N = 2 [(mu - mu(0)) D_N u_N] + [mu D_N u_N] |grad h|^2
///        - sum_k [mu (D_N u_k + D_k u_N)] D_k h`.
pub fn eval_b(u: &TwoPhaseField, h: &HeightField, phases: &PhasePair) -> Result<Vec<Array1<f64>>> {
    let traces = InterfaceTraces::new(u, h, phases)?;
    eval_b_with_traces(&traces, h)
}

pub fn eval_b_with_traces(tr: &InterfaceTraces, h: &HeightField) -> Result<Vec<Array1<f64>>> {
    let grid = h.grid;
    let dim = grid.dim;
    let jet = h.jet();
    let nvert = dim; // 1-based vertical derivative index
    let mut out = Vec::with_capacity(dim);

    for j in 1..dim {
        let mut b = Array1::zeros(grid.h_len());
        let t1 = tr.jump(|ph| tr.mu(ph) * tr.d(ph, nvert, dim - 1));
        b = b - &line_mul(&grid, &t1, &jet.grad[j - 1]);
        let t2 = tr.jump(|ph| {
            (tr.mu(ph).mapv(|v| v - tr.mu0(ph)))
                * &(tr.d(ph, nvert, j - 1) + tr.d(ph, j, dim - 1))
        });
        b = b + &t2;
        for k in 1..dim {
            let t3 = tr.jump(|ph| tr.mu(ph) * &(tr.d(ph, j, k - 1) + tr.d(ph, k, j - 1)));
            b = b - &line_mul(&grid, &t3, &jet.grad[k - 1]);
            let t4 = tr.jump(|ph| {
                tr.mu(ph)
                    * &(line_mul(&grid, tr.d(ph, nvert, j - 1), &jet.grad[k - 1])
                        + line_mul(&grid, tr.d(ph, nvert, k - 1), &jet.grad[j - 1]))
            });
            b = b + &line_mul(&grid, &t4, &jet.grad[k - 1]);
        }
        geometry::line_dealias(&grid, &mut b);
        out.push(b);
    }

    let mut bn = Array1::zeros(grid.h_len());
    let t1 = tr.jump(|ph| (tr.mu(ph).mapv(|v| v - tr.mu0(ph))) * tr.d(ph, nvert, dim - 1));
    bn = bn + &(2.0 * &t1);
    let gsq = jet.grad_sq();
    let t2 = tr.jump(|ph| tr.mu(ph) * tr.d(ph, nvert, dim - 1));
    bn = bn + &line_mul(&grid, &t2, &gsq);
    for k in 1..dim {
        let t3 = tr.jump(|ph| tr.mu(ph) * &(tr.d(ph, nvert, k - 1) + tr.d(ph, k, dim - 1)));
        bn = bn - &line_mul(&grid, &t3, &jet.grad[k - 1]);
    }
    geometry::line_dealias(&grid, &mut bn);
    out.push(bn);
    Ok(out)
}

/// Bulk momentum remainder
/// `F_i = rho { (dt h) D_N u_i - (u . grad) u_i + (u' . grad' h) D_N u_i }
///        - mu(0) sum_j F_jj(h) u_i + (D_i h) D_N theta + A_i(u, h)`.
pub fn eval_f(
    u: &TwoPhaseField,
    theta: &TwoPhaseField,
    h: &HeightField,
    dt_h: &Array1<f64>,
    phases: &PhasePair,
) -> Result<TwoPhaseField> {
    let grid = u.grid;
    let dim = grid.dim;
    let jet = h.jet();
    let dn = u.deriv_v();
    let dn_theta = theta.deriv_v();
    let a_term = eval_a(u, h, phases)?;

    // (u' . grad' h) on both blocks.
    let mut conv_h = TwoPhaseField::zeros(grid, Rank::Scalar);
    for jj in 0..dim - 1 {
        for ph in Phase::BOTH {
            let prod = broadcast_mul_dealiased(&grid, &jet.grad[jj], u.block(ph, jj));
            *conv_h.block_mut(ph, 0) = conv_h.block(ph, 0) + &prod;
        }
    }

    // Sum of the diagonal second-derivative corrections.
    let mut fjj = TwoPhaseField::zeros(grid, Rank::Vector);
    for j in 1..=dim {
        fjj = fjj.axpy(1.0, &f_correction_with_jet(&jet, u, j, j));
    }

    let d: Vec<TwoPhaseField> = (1..=dim).map(|j| u.deriv(j)).collect();

    let mut out = TwoPhaseField::zeros(grid, Rank::Vector);
    for ph in Phase::BOTH {
        let rho = phases.rho(ph);
        let mu0 = phases.mu0(ph);
        for i in 0..dim {
            let mut acc = broadcast_mul_dealiased(&grid, dt_h, dn.block(ph, i));
            for j in 0..dim {
                acc = acc - &grid.mul_dealiased(u.block(ph, j), d[j].block(ph, i));
            }
            acc = acc + &grid.mul_dealiased(conv_h.block(ph, 0), dn.block(ph, i));
            acc *= rho;
            acc = acc - &(mu0 * fjj.block(ph, i));
            if i < dim - 1 {
                acc = acc + &broadcast_mul_dealiased(&grid, &jet.grad[i], dn_theta.block(ph, 0));
            }
            acc = acc + a_term.block(ph, i);
            *out.block_mut(ph, i) = acc;
        }
    }
    Ok(out)
}

/// Divergence remainder `F_d = (D_N u') . grad' h` together with its
/// potential form `u' . grad' h` (whose vertical derivative it equals).
pub fn eval_fd(u: &TwoPhaseField, h: &HeightField) -> (TwoPhaseField, TwoPhaseField) {
    let grid = u.grid;
    let dim = grid.dim;
    let jet = h.jet();
    let dn = u.deriv_v();
    let mut fd = TwoPhaseField::zeros(grid, Rank::Scalar);
    let mut pot = TwoPhaseField::zeros(grid, Rank::Scalar);
    for jj in 0..dim - 1 {
        for ph in Phase::BOTH {
            let p1 = broadcast_mul_dealiased(&grid, &jet.grad[jj], dn.block(ph, jj));
            *fd.block_mut(ph, 0) = fd.block(ph, 0) + &p1;
            let p2 = broadcast_mul_dealiased(&grid, &jet.grad[jj], u.block(ph, jj));
            *pot.block_mut(ph, 0) = pot.block(ph, 0) + &p2;
        }
    }
    (fd, pot)
}

/// Interface stress remainders
/// `G_j = sigma H(h) D_j h - {([rho] gamma_a + sigma lap') h} D_j h
///        + pi D_j h + B_j` (tangential) and `G_N = -sigma H(h) + B_N`,
/// where `H(h)` is the nonlinear curvature remainder.
pub fn eval_g(
    u: &TwoPhaseField,
    pi: &Array1<f64>,
    h: &HeightField,
    phases: &PhasePair,
) -> Result<Vec<Array1<f64>>> {
    let grid = u.grid;
    let dim = grid.dim;
    let jet = h.jet();
    let split = geometry::curvature_split(h);
    let b = eval_b(u, h, phases)?;
    let sigma = phases.sigma;
    let coef = phases.jump_rho() * phases.gamma_a;

    let mut out = Vec::with_capacity(dim);
    for j in 0..dim - 1 {
        let mut g = Array1::zeros(grid.h_len());
        g = g + &line_mul(&grid, &(sigma * &split.remainder), &jet.grad[j]);
        let lin = coef * &h.values + &(sigma * &jet.lap);
        g = g - &line_mul(&grid, &lin, &jet.grad[j]);
        g = g + &line_mul(&grid, pi, &jet.grad[j]);
        g = g + &b[j];
        out.push(g);
    }
    let mut gn = -sigma * &split.remainder;
    gn = gn + &b[dim - 1];
    out.push(gn);
    Ok(out)
}

/// Kinematic remainder `G_h = -u' . grad' h` from the (single-valued)
/// velocity trace.
pub fn eval_gh(u: &TwoPhaseField, h: &HeightField) -> Array1<f64> {
    let grid = u.grid;
    let jet = h.jet();
    let mut out = Array1::zeros(grid.h_len());
    for jj in 0..grid.dim - 1 {
        let tr = u.trace_mean(jj);
        out = out - &line_mul(&grid, &tr, &jet.grad[jj]);
    }
    out
}

/// Aggregate `N(z) = (F, F_d, G, G_h)` at every time node. Nodes are
/// independent and evaluated in parallel; results land in fixed slots, so
/// the output does not depend on the thread count.
pub fn eval_n(z: &StateZ, phases: &PhasePair) -> Result<DataF> {
    use rayon::prelude::*;
    let mut out = DataF::zeros(z.grid, z.time);
    let per_node: Result<Vec<_>> = (0..z.n_nodes())
        .into_par_iter()
        .map(|n| {
            let dth = z.dt_h(n);
            let f = eval_f(&z.u[n], &z.theta[n], &z.h[n], &dth, phases)?;
            let (fd, pot) = eval_fd(&z.u[n], &z.h[n]);
            let g = eval_g(&z.u[n], &z.pi[n], &z.h[n], phases)?;
            let gh = eval_gh(&z.u[n], &z.h[n]);
            Ok((f, fd, pot, g, gh))
        })
        .collect();
    for (n, (f, fd, pot, g, gh)) in per_node?.into_iter().enumerate() {
        out.f[n] = f;
        out.f_d[n] = fd;
        out.f_d_potential[n] = pot;
        out.g[n] = g;
        out.g_h[n] = gh;
    }
    Ok(out)
}
