//! Discrete surrogates of the anisotropic function-space norms used as
//! diagnostics: Sobolev-Slobodeckii seminorms in time and on the torus,
//! the solution-space and data-space component norms, and the initial-data
//! norm. Also the empirical multiplication-algebra probes.
//!
//! Quadrature convention for the singular double sums: nodal samples at
//! `t_n = n dt` (n = 1..n_t) with uniform weight `dt` (each node represents
//! one cell of the midpoint rule), the diagonal `|t - s| < dt` excluded;
//! same scheme on the torus with the minimal-image distance. These norms
//! are diagnostics: solver correctness never depends on their absolute
//! accuracy, only relative behavior (homogeneity, stability under
//! refinement) is used.

use ndarray::Array1;

use crate::error::{CoreError, Result};
use crate::geometry::HeightField;
use crate::grid::{Phase, StripGrid, TimeGrid, TwoPhaseField};
use crate::rhs::{DataF, StateZ};

/// Quadrature for the singular double integrals. Only the diagonal-excluding
/// composite midpoint rule is implemented.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SingularRule {
    MidpointExcludingDiagonal,
}

/// Integrability exponent and quadrature selection for all norm surrogates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormConfig {
    pub p: f64,
    pub rule: SingularRule,
}

impl NormConfig {
    /// Requires `p > dim + 2` (and rejects the excluded trace exponents
    /// 3/2 and 3, which that bound already implies).
    pub fn new(p: f64, dim: usize) -> Result<Self> {
        let min = (dim + 2) as f64;
        if !(p > min) {
            return Err(CoreError::Config(format!(
                "norm exponent must satisfy p > {min} (dim + 2), got {p}"
            )));
        }
        if p == 1.5 || p == 3.0 {
            return Err(CoreError::Config("norm exponent p must avoid 3/2 and 3".into()));
        }
        Ok(Self { p, rule: SingularRule::MidpointExcludingDiagonal })
    }
}

/// Torus-interior `L_p` norm of one interface field.
fn lp_torus(grid: &StripGrid, g: &Array1<f64>, p: f64) -> f64 {
    let w = grid.h_weight();
    g.iter().map(|v| v.abs().powf(p) * w).sum::<f64>().powf(1.0 / p)
}

/// `L_p` in time (nodes 1..n_t, weight dt) of per-node values.
fn lp_time(time: &TimeGrid, vals: &[f64], p: f64) -> f64 {
    let dt = time.dt();
    vals[1..].iter().map(|v| v.abs().powf(p) * dt).sum::<f64>().powf(1.0 / p)
}

/// Time-direction Slobodeckii seminorm of an interface series:
/// `( sum_{n != m} dt^2 ||g_n - g_m||_{Lp}^p / |t_n - t_m|^{1 + s p} )^{1/p}`
/// over the interior nodes 1..n_t.
pub fn slobodeckii_time(
    cfg: &NormConfig,
    grid: &StripGrid,
    time: &TimeGrid,
    g: &[Array1<f64>],
    s: f64,
) -> Result<f64> {
    if time.n_t < 2 {
        return Err(CoreError::Domain(
            "time Slobodeckii seminorm undefined on a single node".into(),
        ));
    }
    let p = cfg.p;
    let dt = time.dt();
    let n = time.n_t;
    let mut acc = 0.0;
    for a in 1..=n {
        for b in 1..=n {
            if a == b {
                continue;
            }
            let diff = &g[a] - &g[b];
            let num = lp_torus(grid, &diff, p).powf(p);
            let dist = (a as f64 - b as f64).abs() * dt;
            acc += dt * dt * num / dist.powf(1.0 + s * p);
        }
    }
    Ok(acc.powf(1.0 / p))
}

/// Translation-invariant kernel `|x - y|^{-(d + s p)}` on the torus,
/// tabulated once per call over the offset index.
fn torus_kernel(grid: &StripGrid, s: f64, p: f64) -> Vec<f64> {
    let n = grid.n_h;
    let d = grid.dim - 1;
    let dx = grid.dx();
    let period = n as f64 * dx;
    let expo = d as f64 + s * p;
    let mut kernel = vec![0.0; grid.h_len()];
    let min_image = |i: usize| -> f64 {
        let v = i as f64 * dx;
        v.min(period - v)
    };
    for off in 0..grid.h_len() {
        if off == 0 {
            continue;
        }
        let r = if d == 1 {
            min_image(off)
        } else {
            let ox = off % n;
            let oy = off / n;
            let rx = min_image(ox);
            let ry = min_image(oy);
            (rx * rx + ry * ry).sqrt()
        };
        kernel[off] = r.powf(-expo);
    }
    kernel
}

/// Offset index of `x_a - x_b` on the flattened torus.
fn torus_offset(grid: &StripGrid, a: usize, b: usize) -> usize {
    let n = grid.n_h;
    if grid.dim == 2 {
        (a + n - b % n) % n
    } else {
        let (ax, ay) = (a % n, a / n);
        let (bx, by) = (b % n, b / n);
        let ox = (ax + n - bx) % n;
        let oy = (ay + n - by) % n;
        ox + n * oy
    }
}

/// Spatial Slobodeckii seminorm of a single torus field.
pub fn slobodeckii_space_node(
    cfg: &NormConfig,
    grid: &StripGrid,
    g: &Array1<f64>,
    s: f64,
) -> f64 {
    let p = cfg.p;
    let w = grid.h_weight();
    let kernel = torus_kernel(grid, s, p);
    let n = grid.h_len();
    let mut acc = 0.0;
    for a in 0..n {
        for b in 0..n {
            if a == b {
                continue;
            }
            let diff = (g[a] - g[b]).abs();
            acc += w * w * diff.powf(p) * kernel[torus_offset(grid, a, b)];
        }
    }
    acc.powf(1.0 / p)
}

/// Space-direction Slobodeckii seminorm of an interface series, integrated
/// in time: `( int_J |g(t)|_{s,p}^p dt )^{1/p}`.
pub fn slobodeckii_space(
    cfg: &NormConfig,
    grid: &StripGrid,
    time: &TimeGrid,
    g: &[Array1<f64>],
    s: f64,
) -> f64 {
    let dt = time.dt();
    let mut acc = 0.0;
    for gn in g.iter().skip(1) {
        acc += dt * slobodeckii_space_node(cfg, grid, gn, s).powf(cfg.p);
    }
    acc.powf(1.0 / cfg.p)
}

/// Sup norm over all nodes and points.
pub fn sup_interface(g: &[Array1<f64>]) -> f64 {
    g.iter()
        .flat_map(|gn| gn.iter())
        .fold(0.0f64, |m, v| m.max(v.abs()))
}

/// The two anisotropic seminorm components of the interface data space:
/// time exponent `1/2 - 1/(2p)`, space exponent `1 - 1/p`.
pub fn f3_seminorms(
    cfg: &NormConfig,
    grid: &StripGrid,
    time: &TimeGrid,
    g: &[Array1<f64>],
) -> Result<(f64, f64)> {
    let st = 0.5 - 0.5 / cfg.p;
    let sx = 1.0 - 1.0 / cfg.p;
    Ok((
        slobodeckii_time(cfg, grid, time, g, st)?,
        slobodeckii_space(cfg, grid, time, g, sx),
    ))
}

/// Full norm of the interface data space:
/// `||g||_{LpLp} + |g|_{time} + |g|_{space}`.
pub fn norm_f3(cfg: &NormConfig, grid: &StripGrid, time: &TimeGrid, g: &[Array1<f64>]) -> Result<f64> {
    let lp: Vec<f64> = g.iter().map(|gn| lp_torus(grid, gn, cfg.p)).collect();
    let (t, x) = f3_seminorms(cfg, grid, time, g)?;
    Ok(lp_time(time, &lp, cfg.p) + t + x)
}

/// Sup-plus-seminorm norm of the bounded multiplier space:
/// `||g||_sup + |g|_{time} + |g|_{space}`.
pub fn norm_ftilde3(
    cfg: &NormConfig,
    grid: &StripGrid,
    time: &TimeGrid,
    g: &[Array1<f64>],
) -> Result<f64> {
    let (t, x) = f3_seminorms(cfg, grid, time, g)?;
    Ok(sup_interface(g) + t + x)
}

/// `L_p` norm over time and the strip of one two-phase field series
/// (vertical trapezoid weights, both blocks).
fn lp_strip_series(grid: &StripGrid, time: &TimeGrid, f: &[TwoPhaseField], p: f64) -> f64 {
    let vals: Vec<f64> = f.iter().map(|fn_| lp_strip(grid, fn_, p)).collect();
    lp_time(time, &vals, p)
}

pub fn lp_strip(grid: &StripGrid, f: &TwoPhaseField, p: f64) -> f64 {
    let wq = grid.h_weight();
    let dv = grid.dv();
    let mut acc = 0.0;
    for ph in Phase::BOTH {
        for c in 0..f.n_components() {
            let b = f.block(ph, c);
            for q in 0..grid.h_len() {
                for m in 0..grid.v_len() {
                    let w = if m == 0 || m == grid.n_v { 0.5 } else { 1.0 };
                    acc += b[[q, m]].abs().powf(p) * w * dv * wq;
                }
            }
        }
    }
    acc.powf(1.0 / p)
}

/// Backward time differences of a field series (defined on nodes 1..n_t).
fn dt_series(time: &TimeGrid, f: &[TwoPhaseField]) -> Vec<TwoPhaseField> {
    let dt = time.dt();
    let mut out = Vec::with_capacity(f.len());
    out.push(f[0].scale(0.0));
    for n in 1..f.len() {
        out.push(f[n].axpy(-1.0, &f[n - 1]).scale(1.0 / dt));
    }
    out
}

fn dt_lines(time: &TimeGrid, f: &[Array1<f64>]) -> Vec<Array1<f64>> {
    let dt = time.dt();
    let mut out = Vec::with_capacity(f.len());
    out.push(&f[0] * 0.0);
    for n in 1..f.len() {
        out.push((&f[n] - &f[n - 1]) / dt);
    }
    out
}

/// Component norms of the solution space.
#[derive(Debug, Clone, Copy)]
pub struct SolutionNorms {
    /// Velocity: `H^1_p(J, L_p) + L_p(J, H^2_p)`.
    pub e1: f64,
    /// Pressure: `L_p(J, H^1_p)` seminorm (gradient only).
    pub e2: f64,
    /// Interface pressure jump: full interface data-space norm.
    pub e3: f64,
    /// Height: the four intersected surrogates.
    pub e4: [f64; 4],
}

impl SolutionNorms {
    pub fn e4_max(&self) -> f64 {
        self.e4.iter().fold(0.0f64, |m, v| m.max(*v))
    }

    pub fn e4_sum(&self) -> f64 {
        self.e4.iter().sum()
    }

    /// Natural norm of the product space (sum of components).
    pub fn total(&self) -> f64 {
        self.e1 + self.e2 + self.e3 + self.e4_sum()
    }
}

/// Discrete solution-space norms of a trajectory.
pub fn norm_solution(cfg: &NormConfig, z: &StateZ) -> Result<SolutionNorms> {
    let grid = z.grid;
    let time = z.time;
    let p = cfg.p;

    // e1: velocity.
    let u_lp = lp_strip_series(&grid, &time, &z.u, p);
    let ut = dt_series(&time, &z.u);
    let ut_lp = lp_strip_series(&grid, &time, &ut, p);
    let mut h2 = 0.0f64;
    {
        let mut vals = vec![0.0; z.n_nodes()];
        for n in 0..z.n_nodes() {
            let mut acc = lp_strip(&grid, &z.u[n], p).powf(p);
            for j in 1..=grid.dim {
                let dj = z.u[n].deriv(j);
                acc += lp_strip(&grid, &dj, p).powf(p);
                for k in j..=grid.dim {
                    let djk = dj.deriv(k);
                    acc += lp_strip(&grid, &djk, p).powf(p);
                }
            }
            vals[n] = acc.powf(1.0 / p);
        }
        h2 += lp_time(&time, &vals, p);
    }
    let e1 = u_lp + ut_lp + h2;

    // e2: pressure gradient.
    let mut vals = vec![0.0; z.n_nodes()];
    for n in 0..z.n_nodes() {
        let mut acc = 0.0;
        for j in 1..=grid.dim {
            acc += lp_strip(&grid, &z.theta[n].deriv(j), p).powf(p);
        }
        vals[n] = acc.powf(1.0 / p);
    }
    let e2 = lp_time(&time, &vals, p);

    // e3: interface pressure jump.
    let e3 = norm_f3(cfg, &grid, &time, &z.pi)?;

    // e4: height in the four intersected spaces.
    let h_series: Vec<Array1<f64>> = z.h.iter().map(|h| h.values.clone()).collect();
    let ht = dt_lines(&time, &h_series);
    let jets: Vec<_> = z.h.iter().map(|h| h.jet()).collect();
    let nd = grid.dim - 1;

    let lp_line_series = |g: &[Array1<f64>]| -> f64 {
        let vals: Vec<f64> = g.iter().map(|gn| lp_torus(&grid, gn, p)).collect();
        lp_time(&time, &vals, p)
    };

    // W^{2 - 1/(2p)}(J, L_p): value, time derivative, and its fractional rest.
    let e4a = lp_line_series(&h_series)
        + lp_line_series(&ht)
        + slobodeckii_time(cfg, &grid, &time, &ht, 1.0 - 0.5 / p)?;

    // H^1(J, W^{2-1/p}): spatial fractional norm of h and of dt h.
    let w_2m1p = |g: &[Array1<f64>], jets_of: Option<&[crate::geometry::GeometryJet]>| -> f64 {
        let mut vals = vec![0.0; g.len()];
        for n in 0..g.len() {
            let mut acc = lp_torus(&grid, &g[n], p).powf(p);
            let grads: Vec<Array1<f64>> = match jets_of {
                Some(js) => js[n].grad.clone(),
                None => (0..nd).map(|d| crate::geometry::line_deriv(&grid, &g[n], d)).collect(),
            };
            for gr in &grads {
                acc += lp_torus(&grid, gr, p).powf(p);
                acc += slobodeckii_space_node(cfg, &grid, gr, 1.0 - 1.0 / p).powf(p);
            }
            vals[n] = acc.powf(1.0 / p);
        }
        lp_time(&time, &vals, p)
    };
    let e4b = w_2m1p(&h_series, Some(&jets)) + w_2m1p(&ht, None);

    // W^{1/2 - 1/(2p)}(J, H^2): Lp(J, H^2) plus the time seminorm of the
    // second derivatives.
    let mut e4c = {
        let mut vals = vec![0.0; z.n_nodes()];
        for n in 0..z.n_nodes() {
            let mut acc = lp_torus(&grid, &h_series[n], p).powf(p);
            for gr in &jets[n].grad {
                acc += lp_torus(&grid, gr, p).powf(p);
            }
            for hs in &jets[n].hess {
                acc += lp_torus(&grid, hs, p).powf(p);
            }
            vals[n] = acc.powf(1.0 / p);
        }
        lp_time(&time, &vals, p)
    };
    for i in 0..nd {
        for j in 0..nd {
            let series: Vec<Array1<f64>> = jets.iter().map(|jt| jt.hess[i * nd + j].clone()).collect();
            e4c += slobodeckii_time(cfg, &grid, &time, &series, 0.5 - 0.5 / p)?;
        }
    }

    // L_p(J, W^{3-1/p}): H^2 plus the spatial seminorm of the Hessian.
    let e4d = {
        let mut vals = vec![0.0; z.n_nodes()];
        for n in 0..z.n_nodes() {
            let mut acc = lp_torus(&grid, &h_series[n], p).powf(p);
            for gr in &jets[n].grad {
                acc += lp_torus(&grid, gr, p).powf(p);
            }
            for hs in &jets[n].hess {
                acc += lp_torus(&grid, hs, p).powf(p);
                acc += slobodeckii_space_node(cfg, &grid, hs, 1.0 - 1.0 / p).powf(p);
            }
            vals[n] = acc.powf(1.0 / p);
        }
        lp_time(&time, &vals, p)
    };

    Ok(SolutionNorms { e1, e2, e3, e4: [e4a, e4b, e4c, e4d] })
}

/// Component norms of the data space.
#[derive(Debug, Clone, Copy)]
pub struct DataNorms {
    /// Bulk force: `L_p(J, L_p)`.
    pub f1: f64,
    /// Divergence data: negative-order surrogate plus `L_p(J, H^1)`.
    ///
    /// The time-derivative part uses the potential form: the surrogate is
    /// `||dt (u' . grad' h)||_{LpLp}`, standing in for the dual-space norm
    /// of `dt f_d` (mean-zero spectral surrogate; a deliberate stand-in,
    /// not the continuous dual norm).
    pub f2: f64,
    /// Interface stress data: sum of component interface-space norms.
    pub f3: f64,
    /// Kinematic data: `W^{1 - 1/(2p)}(J, L_p) + L_p(J, W^{2 - 1/p})`.
    pub f4: f64,
}

impl DataNorms {
    pub fn total(&self) -> f64 {
        self.f1 + self.f2 + self.f3 + self.f4
    }
}

/// Discrete data-space norms of a right-hand-side tuple.
pub fn norm_data(cfg: &NormConfig, d: &DataF) -> Result<DataNorms> {
    let grid = d.grid;
    let time = d.time;
    let p = cfg.p;

    let f1 = lp_strip_series(&grid, &time, &d.f, p);

    let pot_t = dt_series(&time, &d.f_d_potential);
    let mut f2 = lp_strip_series(&grid, &time, &pot_t, p);
    {
        let mut vals = vec![0.0; d.f_d.len()];
        for n in 0..d.f_d.len() {
            let mut acc = lp_strip(&grid, &d.f_d[n], p).powf(p);
            for j in 1..=grid.dim {
                acc += lp_strip(&grid, &d.f_d[n].deriv(j), p).powf(p);
            }
            vals[n] = acc.powf(1.0 / p);
        }
        f2 += lp_time(&time, &vals, p);
    }

    let mut f3 = 0.0;
    for c in 0..grid.dim {
        let series: Vec<Array1<f64>> = d.g.iter().map(|gn| gn[c].clone()).collect();
        f3 += norm_f3(cfg, &grid, &time, &series)?;
    }

    let nd = grid.dim - 1;
    let mut f4 = {
        let vals: Vec<f64> = d.g_h.iter().map(|gn| lp_torus(&grid, gn, p)).collect();
        lp_time(&time, &vals, p)
    };
    f4 += slobodeckii_time(cfg, &grid, &time, &d.g_h, 1.0 - 0.5 / p)?;
    {
        let mut vals = vec![0.0; d.g_h.len()];
        for n in 0..d.g_h.len() {
            let mut acc = 0.0;
            for dd in 0..nd {
                let gr = crate::geometry::line_deriv(&grid, &d.g_h[n], dd);
                acc += lp_torus(&grid, &gr, p).powf(p);
                acc += slobodeckii_space_node(cfg, &grid, &gr, 1.0 - 1.0 / p).powf(p);
            }
            vals[n] = acc.powf(1.0 / p);
        }
        f4 += lp_time(&time, &vals, p);
    }

    Ok(DataNorms { f1, f2, f3, f4 })
}

/// Fractional Sobolev seminorm of a two-phase field on the strip, order
/// `s` in (0, 1): per-block double sums with minimal-image horizontal
/// distance (no cross-block pairs).
pub fn slobodeckii_strip(cfg: &NormConfig, f: &TwoPhaseField, s: f64) -> f64 {
    let grid = f.grid;
    let p = cfg.p;
    let dxw = grid.h_weight() * grid.dv();
    let expo = grid.dim as f64 + s * p;
    let n = grid.n_h;
    let dx = grid.dx();
    let period = n as f64 * dx;
    let dv = grid.dv();
    let min_image = |i: usize| -> f64 {
        let v = i as f64 * dx;
        v.min(period - v)
    };
    let mut acc = 0.0;
    for ph in Phase::BOTH {
        for c in 0..f.n_components() {
            let b = f.block(ph, c);
            for qa in 0..grid.h_len() {
                for qb in 0..grid.h_len() {
                    let off = torus_offset(&grid, qa, qb);
                    let r2h = if grid.dim == 2 {
                        let r = min_image(off);
                        r * r
                    } else {
                        let rx = min_image(off % n);
                        let ry = min_image(off / n);
                        rx * rx + ry * ry
                    };
                    for ma in 0..grid.v_len() {
                        for mb in 0..grid.v_len() {
                            if qa == qb && ma == mb {
                                continue;
                            }
                            let rv = (ma as f64 - mb as f64) * dv;
                            let r = (r2h + rv * rv).sqrt();
                            let diff = (b[[qa, ma]] - b[[qb, mb]]).abs();
                            acc += dxw * dxw * diff.powf(p) / r.powf(expo);
                        }
                    }
                }
            }
        }
    }
    acc.powf(1.0 / p)
}

/// Initial-data norm: trace-space norms of the initial velocity and height.
pub fn norm_initial(cfg: &NormConfig, u0: &TwoPhaseField, h0: &HeightField) -> f64 {
    let grid = u0.grid;
    let p = cfg.p;
    // ||u0||_{W^{2-2/p}}: first-order Sobolev part plus the fractional
    // seminorm of every first derivative at order 1 - 2/p.
    let mut acc = lp_strip(&grid, u0, p).powf(p);
    let s = 1.0 - 2.0 / p;
    let mut frac = 0.0;
    for j in 1..=grid.dim {
        let dj = u0.deriv(j);
        acc += lp_strip(&grid, &dj, p).powf(p);
        frac += slobodeckii_strip(cfg, &dj, s);
    }
    let u_norm = acc.powf(1.0 / p) + frac;

    // ||h0||_{W^{3-2/p}}: H^2 part plus fractional seminorm of the Hessian.
    let jet = h0.jet();
    let nd = grid.dim - 1;
    let mut hacc = lp_torus(&grid, &h0.values, p).powf(p);
    for gr in &jet.grad {
        hacc += lp_torus(&grid, gr, p).powf(p);
    }
    let mut hfrac = 0.0;
    for i in 0..nd {
        for j in 0..nd {
            let hs = &jet.hess[i * nd + j];
            hacc += lp_torus(&grid, hs, p).powf(p);
            hfrac += slobodeckii_space_node(cfg, &grid, hs, 1.0 - 2.0 / p);
        }
    }
    let h_norm = hacc.powf(1.0 / p) + hfrac;
    u_norm + h_norm
}

/// Measured constants of the multiplication inequalities on one pair:
/// `a`: `||fg|| <= C ||f|| ||g||` in the sup-plus-seminorm space,
/// `c`: `||fg|| <= C ||f|| ||g||~` mixing the two interface spaces.
#[derive(Debug, Clone, Copy)]
pub struct AlgebraRatios {
    pub tilde_algebra: f64,
    pub mixed: f64,
}

pub fn algebra_inequality_probe(
    cfg: &NormConfig,
    grid: &StripGrid,
    time: &TimeGrid,
    f: &[Array1<f64>],
    g: &[Array1<f64>],
) -> Result<AlgebraRatios> {
    let fg: Vec<Array1<f64>> = f.iter().zip(g.iter()).map(|(a, b)| a * b).collect();
    let nf_tilde = norm_ftilde3(cfg, grid, time, f)?;
    let ng_tilde = norm_ftilde3(cfg, grid, time, g)?;
    let nfg_tilde = norm_ftilde3(cfg, grid, time, &fg)?;
    let nf = norm_f3(cfg, grid, time, f)?;
    let nfg = norm_f3(cfg, grid, time, &fg)?;
    Ok(AlgebraRatios {
        tilde_algebra: nfg_tilde / (nf_tilde * ng_tilde),
        mixed: nfg / (nf * ng_tilde),
    })
}

/// Left- and right-hand side of the composition bound
/// `||phi(g)||~ <= sup|phi| + sup|phi'| |g|` for a smooth bounded `phi`.
pub fn composition_bound_probe(
    cfg: &NormConfig,
    grid: &StripGrid,
    time: &TimeGrid,
    g: &[Array1<f64>],
    phi: impl Fn(f64) -> f64,
    phi_sup: f64,
    phi_dot_sup: f64,
) -> Result<(f64, f64)> {
    let pg: Vec<Array1<f64>> = g.iter().map(|gn| gn.mapv(&phi)).collect();
    let lhs = norm_ftilde3(cfg, grid, time, &pg)?;
    let (t, x) = f3_seminorms(cfg, grid, time, g)?;
    let rhs = phi_sup + phi_dot_sup * (t + x);
    Ok((lhs, rhs))
}
