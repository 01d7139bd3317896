//! Interface geometry: the flattening transform and every purely geometric
//! operator it induces.
//!
//! The moving-interface domain is mapped onto the fixed split strip by
//! subtracting the height function from the vertical coordinate. This module
//! provides the transform and its inverse, pull-back/push-forward of fields,
//! the chain-rule correction operators for first and second derivatives, the
//! transformed deformation tensor, and the mean-curvature splitting used by
//! the interface stress balance.

use ndarray::{Array1, Array2};

use crate::error::{CoreError, Result};
use crate::grid::{Phase, Rank, StripGrid, TwoPhaseField};
use crate::interp;

/// Interface height `h(x')` sampled on the horizontal torus grid.
///
/// The interface is the graph `x_N = h(x')`; `h` is independent of the
/// vertical coordinate by construction, so its vertical derivative vanishes
/// identically.
#[derive(Debug, Clone, PartialEq)]
pub struct HeightField {
    pub grid: StripGrid,
    pub values: Array1<f64>,
}

impl HeightField {
    pub fn zeros(grid: StripGrid) -> Self {
        Self { grid, values: Array1::zeros(grid.h_len()) }
    }

    pub fn from_fn(grid: StripGrid, f: impl Fn(&[f64]) -> f64) -> Self {
        let mut values = Array1::zeros(grid.h_len());
        for q in 0..grid.h_len() {
            let x = grid.x_h(q);
            values[q] = f(&x[..grid.dim - 1]);
        }
        Self { grid, values }
    }

    pub fn from_values(grid: StripGrid, values: Array1<f64>) -> Result<Self> {
        if values.len() != grid.h_len() {
            return Err(CoreError::Config(format!(
                "height field length {} does not match grid h_len {}",
                values.len(),
                grid.h_len()
            )));
        }
        Ok(Self { grid, values })
    }

    /// Checks finiteness and that the interface stays strictly inside the strip.
    pub fn validate(&self) -> Result<()> {
        let mut max = 0.0f64;
        for &v in self.values.iter() {
            if !v.is_finite() {
                return Err(CoreError::Domain("height field contains non-finite values".into()));
            }
            max = max.max(v.abs());
        }
        if max >= self.grid.l_v {
            return Err(CoreError::Domain(format!(
                "interface leaves the strip: max |h| = {max} >= l_v = {}",
                self.grid.l_v
            )));
        }
        Ok(())
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Periodic cubic evaluation at an arbitrary horizontal point.
    pub fn eval(&self, x_h: &[f64]) -> f64 {
        let g = &self.grid;
        let n = g.n_h;
        if g.dim == 2 {
            interp::periodic_cubic(|i| self.values[i], n, x_h[0] / g.dx())
        } else {
            interp::periodic_cubic(
                |iy| {
                    interp::periodic_cubic(|ix| self.values[ix + n * iy], n, x_h[0] / g.dx())
                },
                n,
                x_h[1] / g.dx(),
            )
        }
    }

    /// Spectral horizontal derivative `D_dir h` (0-based direction).
    pub fn deriv(&self, dir: usize) -> Array1<f64> {
        line_deriv(&self.grid, &self.values, dir)
    }

    /// First and second derivatives, computed spectrally from the samples.
    pub fn jet(&self) -> GeometryJet {
        let g = self.grid;
        let nd = g.dim - 1;
        let grad: Vec<Array1<f64>> = (0..nd).map(|d| self.deriv(d)).collect();
        let mut hess = vec![Array1::zeros(g.h_len()); nd * nd];
        for i in 0..nd {
            for j in i..nd {
                let hij = line_deriv(&g, &grad[i], j);
                hess[i * nd + j] = hij.clone();
                hess[j * nd + i] = hij;
            }
        }
        let mut lap = Array1::zeros(g.h_len());
        for d in 0..nd {
            lap = lap + &hess[d * nd + d];
        }
        GeometryJet { grid: g, grad, hess, lap }
    }

    pub fn scale(&self, s: f64) -> Self {
        Self { grid: self.grid, values: s * &self.values }
    }
}

/// First and second horizontal derivatives of a height field on the torus.
#[derive(Debug, Clone)]
pub struct GeometryJet {
    pub grid: StripGrid,
    /// `D_j h`, j = 0..dim-2.
    pub grad: Vec<Array1<f64>>,
    /// `D_i D_j h`, row-major over (dim-1)^2; symmetric.
    pub hess: Vec<Array1<f64>>,
    /// Horizontal Laplacian.
    pub lap: Array1<f64>,
}

impl GeometryJet {
    /// `D_j h` with 1-based flattened index `j`; zero for the vertical index.
    pub fn grad1(&self, j: usize) -> Option<&Array1<f64>> {
        if j >= 1 && j < self.grid.dim {
            Some(&self.grad[j - 1])
        } else {
            None
        }
    }

    /// |grad h|^2 pointwise.
    pub fn grad_sq(&self) -> Array1<f64> {
        let mut out = Array1::zeros(self.grid.h_len());
        for g in &self.grad {
            out = out + &g.mapv(|v| v * v);
        }
        out
    }
}

/// Spectral derivative of a torus line field.
pub fn line_deriv(grid: &StripGrid, f: &Array1<f64>, dir: usize) -> Array1<f64> {
    let a = f.clone().insert_axis(ndarray::Axis(1));
    grid.deriv_h(&a, dir).column(0).to_owned()
}

/// 2/3-rule dealiasing of a torus line field.
pub fn line_dealias(grid: &StripGrid, f: &mut Array1<f64>) {
    let mut a = f.clone().insert_axis(ndarray::Axis(1));
    grid.dealias(&mut a);
    *f = a.column(0).to_owned();
}

/// Pointwise product of torus line fields with dealiasing.
pub fn line_mul(grid: &StripGrid, a: &Array1<f64>, b: &Array1<f64>) -> Array1<f64> {
    let mut out = a * b;
    line_dealias(grid, &mut out);
    out
}

/// Flattened point `(xi', xi_N)` mapped to the physical point above/below the
/// moving interface: `x = (xi', xi_N + h(xi'))`.
pub fn flatten_map(h: &HeightField, xi_h: &[f64], xi_v: f64) -> ([f64; 2], f64) {
    let mut x = [0.0; 2];
    x[..h.grid.dim - 1].copy_from_slice(xi_h);
    (x, xi_v + h.eval(xi_h))
}

/// Inverse of [`flatten_map`]: `(x', x_N)` to `(x', x_N - h(x'))`.
pub fn inverse_map(h: &HeightField, x_h: &[f64], x_v: f64) -> ([f64; 2], f64) {
    let mut xi = [0.0; 2];
    xi[..h.grid.dim - 1].copy_from_slice(x_h);
    (xi, x_v - h.eval(x_h))
}

/// A field on physical coordinates backed by flattened samples: evaluating at
/// a physical point interpolates `u` at the pulled-back location.
pub struct PushedForward<'a> {
    pub u: &'a TwoPhaseField,
    pub h: &'a HeightField,
}

impl<'a> PushedForward<'a> {
    pub fn new(u: &'a TwoPhaseField, h: &'a HeightField) -> Self {
        Self { u, h }
    }

    /// Evaluate component `c` at the physical point `(x', x_N)`.
    pub fn eval(&self, c: usize, x_h: &[f64], x_v: f64) -> Result<f64> {
        let xi_v = x_v - self.h.eval(x_h);
        if xi_v.abs() > self.u.grid.l_v {
            return Err(CoreError::Domain(format!(
                "physical point maps outside the strip: xi_N = {xi_v}"
            )));
        }
        Ok(interp::interp_field(self.u, c, x_h, xi_v))
    }
}

/// Push-forward of a flattened field to physical coordinates.
pub fn pushforward<'a>(u: &'a TwoPhaseField, h: &'a HeightField) -> PushedForward<'a> {
    PushedForward::new(u, h)
}

/// Pull-back of a physical-coordinate field onto the strip grid: samples
/// `v(xi', xi_N + h(xi'))` at every node of both blocks.
pub fn pullback(
    grid: StripGrid,
    rank: Rank,
    h: &HeightField,
    v: impl Fn(usize, &[f64], f64) -> f64,
) -> TwoPhaseField {
    let mut out = TwoPhaseField::zeros(grid, rank);
    for c in 0..out.n_components() {
        for q in 0..grid.h_len() {
            let x = grid.x_h(q);
            let xs = &x[..grid.dim - 1];
            let hq = h.values[q];
            for ph in Phase::BOTH {
                for m in 0..grid.v_len() {
                    let xv = grid.xi_v(ph, m) + hq;
                    out.block_mut(ph, c)[[q, m]] = v(c, xs, xv);
                }
            }
        }
    }
    out
}

/// Pull-back of an interpolated physical field (used for round trips).
pub fn pullback_sampled(pf: &PushedForward, h: &HeightField) -> Result<TwoPhaseField> {
    let grid = pf.u.grid;
    let mut out = TwoPhaseField::zeros(grid, pf.u.rank);
    for c in 0..out.n_components() {
        for q in 0..grid.h_len() {
            let x = grid.x_h(q);
            let xs = &x[..grid.dim - 1];
            let hq = h.values[q];
            for ph in Phase::BOTH {
                for m in 0..grid.v_len() {
                    out.block_mut(ph, c)[[q, m]] = pf.eval(c, xs, grid.xi_v(ph, m) + hq)?;
                }
            }
        }
    }
    Ok(out)
}

/// Broadcast-multiply a torus line field into every vertical level of `b`.
pub fn broadcast_mul(grid: &StripGrid, line: &Array1<f64>, b: &Array2<f64>) -> Array2<f64> {
    let mut out = b.clone();
    for q in 0..grid.h_len() {
        let s = line[q];
        for m in 0..grid.v_len() {
            out[[q, m]] *= s;
        }
    }
    out
}

/// Flattened representation of the physical derivative:
/// `d_j = D_j - (D_j h) D_N` for horizontal `j`, plain `D_N` for `j = dim`
/// (1-based `j`). Products are dealiased.
pub fn chain_rule_derivative(u: &TwoPhaseField, h: &HeightField, j: usize) -> TwoPhaseField {
    let grid = u.grid;
    assert!(j >= 1 && j <= grid.dim);
    if j == grid.dim {
        return u.deriv_v();
    }
    let dj = u.deriv(j);
    let dn = u.deriv_v();
    let dh = h.deriv(j - 1);
    let corr = dn.map_blocks(|g, b| {
        let mut prod = broadcast_mul(g, &dh, b);
        g.dealias(&mut prod);
        prod
    });
    dj.axpy(-1.0, &corr)
}

/// The second-derivative correction operator applied to `u`:
/// `(D_jD_k h) D_N u + (D_j h) D_N D_k u + (D_k h) D_j D_N u
///  - (D_j h)(D_k h) D_N^2 u`, with all `D_. h` vanishing for the vertical
/// index. The flattened second derivative satisfies
/// `d_j d_k u = D_j D_k u - f_correction(h, u, j, k)`.
pub fn f_correction(h: &HeightField, u: &TwoPhaseField, j: usize, k: usize) -> TwoPhaseField {
    let grid = u.grid;
    assert!(j >= 1 && j <= grid.dim && k >= 1 && k <= grid.dim);
    let jet = h.jet();
    f_correction_with_jet(&jet, u, j, k)
}

/// Same as [`f_correction`] but reusing a precomputed jet of `h`.
pub fn f_correction_with_jet(
    jet: &GeometryJet,
    u: &TwoPhaseField,
    j: usize,
    k: usize,
) -> TwoPhaseField {
    let grid = u.grid;
    let nd = grid.dim - 1;
    let dn = u.deriv_v();
    let mut out = TwoPhaseField::zeros(grid, u.rank);

    let mul_line = |line: &Array1<f64>, f: &TwoPhaseField| {
        f.map_blocks(|g, b| {
            let mut prod = broadcast_mul(g, line, b);
            g.dealias(&mut prod);
            prod
        })
    };

    if j < grid.dim && k < grid.dim {
        let hjk = &jet.hess[(j - 1) * nd + (k - 1)];
        out = out.axpy(1.0, &mul_line(hjk, &dn));
    }
    if j < grid.dim {
        let dndk = u.deriv(k).deriv_v();
        out = out.axpy(1.0, &mul_line(&jet.grad[j - 1], &dndk));
    }
    if k < grid.dim {
        let djdn = dn.deriv(j);
        out = out.axpy(1.0, &mul_line(&jet.grad[k - 1], &djdn));
    }
    if j < grid.dim && k < grid.dim {
        let dnn = u.deriv_vv();
        let hjhk = line_mul(&grid, &jet.grad[j - 1], &jet.grad[k - 1]);
        out = out.axpy(-1.0, &mul_line(&hjhk, &dnn));
    }
    out
}

/// Transformed symmetric deformation tensor `E(u, h)` with companion
/// `|E|^2`: the pull-back of the physical symmetric velocity gradient.
///
/// `E = D_xi(u) - (1/2)[(D_N u) g^T + g (D_N u)^T]` with `g = (grad' h, 0)`,
/// so `E(u, 0) = D_xi(u)` and `E` is exactly symmetric by construction.
pub fn transformed_deformation(u: &TwoPhaseField, h: &HeightField) -> (TwoPhaseField, TwoPhaseField) {
    let grid = u.grid;
    assert_eq!(u.rank, Rank::Vector);
    let dim = grid.dim;
    let jet = h.jet();

    // First derivatives D_j u_i for all pairs.
    let mut d: Vec<TwoPhaseField> = Vec::with_capacity(dim);
    for j in 1..=dim {
        d.push(u.deriv(j));
    }
    let dn = &d[dim - 1];

    let mut e = TwoPhaseField::zeros(grid, Rank::Tensor);
    for i in 0..dim {
        for jj in 0..dim {
            for ph in Phase::BOTH {
                // 1/2 (D_i u_j + D_j u_i)
                let sym = 0.5 * (d[i].block(ph, jj) + d[jj].block(ph, i));
                let mut val = sym;
                // -1/2 (g_i D_N u_j + g_j D_N u_i)
                if i < dim - 1 {
                    let mut p = broadcast_mul(&grid, &jet.grad[i], dn.block(ph, jj));
                    grid.dealias(&mut p);
                    val = val - 0.5 * &p;
                }
                if jj < dim - 1 {
                    let mut p = broadcast_mul(&grid, &jet.grad[jj], dn.block(ph, i));
                    grid.dealias(&mut p);
                    val = val - 0.5 * &p;
                }
                *e.block_mut(ph, i * dim + jj) = val;
            }
        }
    }

    let mut esq = TwoPhaseField::zeros(grid, Rank::Scalar);
    for ph in Phase::BOTH {
        let mut acc = Array2::zeros((grid.h_len(), grid.v_len()));
        for c in 0..dim * dim {
            let b = e.block(ph, c);
            acc = acc + &(b * b);
        }
        *esq.block_mut(ph, 0) = acc;
    }
    (e, esq)
}

/// Result of the mean-curvature splitting.
pub struct CurvatureSplit {
    /// Horizontal Laplacian of `h` (the linear part).
    pub laplacian: Array1<f64>,
    /// The nonlinear remainder; mean curvature is `laplacian - remainder`.
    pub remainder: Array1<f64>,
    /// Mean curvature of the graph of `h`.
    pub mean_curvature: Array1<f64>,
}

/// Split the graph mean curvature into its linearization and remainder.
///
/// The remainder is
/// `|grad h|^2 lap h / ((1 + w) w) + sum_{jk} (D_j h)(D_k h)(D_j D_k h) / w^3`
/// with `w = sqrt(1 + |grad h|^2)`, and the full curvature equals the
/// divergence form `sum_j D_j (D_j h / w)`.
pub fn curvature_split(h: &HeightField) -> CurvatureSplit {
    let grid = h.grid;
    let nd = grid.dim - 1;
    let jet = h.jet();
    let gsq = jet.grad_sq();
    let n = grid.h_len();

    let mut remainder = Array1::zeros(n);
    for q in 0..n {
        let w = (1.0 + gsq[q]).sqrt();
        let mut first = gsq[q] * jet.lap[q] / ((1.0 + w) * w);
        let mut second = 0.0;
        for j in 0..nd {
            for k in 0..nd {
                second += jet.grad[j][q] * jet.grad[k][q] * jet.hess[j * nd + k][q];
            }
        }
        second /= w * w * w;
        first += second;
        remainder[q] = first;
    }

    let mean_curvature = &jet.lap - &remainder;
    CurvatureSplit { laplacian: jet.lap.clone(), remainder, mean_curvature }
}

/// Mean curvature via the direct divergence form `sum_j D_j(D_j h / w)`.
///
/// Independent route kept for cross-checking the split.
pub fn curvature_divergence_form(h: &HeightField) -> Array1<f64> {
    let grid = h.grid;
    let nd = grid.dim - 1;
    let jet = h.jet();
    let gsq = jet.grad_sq();
    let mut out = Array1::zeros(grid.h_len());
    for j in 0..nd {
        let mut flux = Array1::zeros(grid.h_len());
        for q in 0..grid.h_len() {
            flux[q] = jet.grad[j][q] / (1.0 + gsq[q]).sqrt();
        }
        out = out + &line_deriv(&grid, &flux, j);
    }
    out
}

/// Unit normal (pointing from the lower into the upper phase) and normal
/// velocity of the moving interface; diagnostic output only.
pub fn normal_and_velocity(
    h: &HeightField,
    dt_h: &Array1<f64>,
) -> (Vec<Array1<f64>>, Array1<f64>) {
    let grid = h.grid;
    let nd = grid.dim - 1;
    let jet = h.jet();
    let gsq = jet.grad_sq();
    let n = grid.h_len();
    let mut normal = vec![Array1::zeros(n); grid.dim];
    let mut vel = Array1::zeros(n);
    for q in 0..n {
        let w = (1.0 + gsq[q]).sqrt();
        for j in 0..nd {
            normal[j][q] = -jet.grad[j][q] / w;
        }
        normal[grid.dim - 1][q] = 1.0 / w;
        vel[q] = dt_h[q] / w;
    }
    (normal, vel)
}
