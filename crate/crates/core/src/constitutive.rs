//! Generalized Newtonian viscosity models and the quasilinear stress operator.
//!
//! The viscous stress of each phase is `2 mu(|D(u)|^2) D(u)` with a scalar
//! viscosity function `mu` that is `C^3` on `[0, inf)` with `mu(0) > 0`.
//! Admitted families:
//!
//! * power-sum `mu(s) = nu (1 + s^((d-2)/2))` for `d` in {2, 4, 6} or `d >= 8`,
//! * power-shift `mu(s) = nu (1 + s)^((d-2)/2)` for `d >= 1`,
//! * Newtonian `mu(s) = nu`,
//! * tabulated values interpolated by a natural cubic spline (smoothness of
//!   the table is the caller's responsibility and is not enforced).

use ndarray::Array2;

use crate::error::{CoreError, Result};
use crate::grid::{Phase, Rank, TwoPhaseField};

/// Scalar viscosity law `s = |D|^2 -> (mu, dmu/ds)` for one phase.
#[derive(Debug, Clone, PartialEq)]
pub enum ViscosityModel {
    /// `nu (1 + s^((d-2)/2))`; `d` restricted to {2, 4, 6} or `d >= 8`.
    PowerSum { nu: f64, d: f64 },
    /// `nu (1 + s)^((d-2)/2)` for any `d >= 1`.
    PowerShift { nu: f64, d: f64 },
    /// Constant viscosity `nu`.
    Newtonian { nu: f64 },
    /// Natural cubic spline through `(s_i, mu_i)` samples.
    Table(Spline),
}

impl ViscosityModel {
    pub fn power_sum(nu: f64, d: f64) -> Result<Self> {
        if !(nu > 0.0) {
            return Err(CoreError::Config(format!("nu must be positive, got {nu}")));
        }
        let ok = d == 2.0 || d == 4.0 || d == 6.0 || d >= 8.0;
        if !ok {
            return Err(CoreError::Config(format!(
                "power-sum exponent d = {d} not admitted (need d in {{2, 4, 6}} or d >= 8)"
            )));
        }
        Ok(Self::PowerSum { nu, d })
    }

    pub fn power_shift(nu: f64, d: f64) -> Result<Self> {
        if !(nu > 0.0) {
            return Err(CoreError::Config(format!("nu must be positive, got {nu}")));
        }
        if !(d >= 1.0) {
            return Err(CoreError::Config(format!(
                "power-shift exponent d = {d} not admitted (need d >= 1)"
            )));
        }
        Ok(Self::PowerShift { nu, d })
    }

    pub fn newtonian(nu: f64) -> Result<Self> {
        if !(nu > 0.0) {
            return Err(CoreError::Config(format!("nu must be positive, got {nu}")));
        }
        Ok(Self::Newtonian { nu })
    }

    pub fn table(s: Vec<f64>, mu: Vec<f64>) -> Result<Self> {
        let spline = Spline::natural(s, mu)?;
        if !(spline.eval(0.0).0 > 0.0) {
            return Err(CoreError::Config("tabulated viscosity must have mu(0) > 0".into()));
        }
        Ok(Self::Table(spline))
    }

    /// `(mu(s), dmu/ds(s))`; rejects negative shear-rate arguments.
    pub fn eval(&self, s: f64) -> Result<(f64, f64)> {
        if s < 0.0 {
            return Err(CoreError::Domain(format!("|D|^2 argument must be >= 0, got {s}")));
        }
        Ok(self.eval_unchecked(s))
    }

    fn eval_unchecked(&self, s: f64) -> (f64, f64) {
        match self {
            Self::PowerSum { nu, d } => {
                let e = (d - 2.0) / 2.0;
                if e == 0.0 {
                    (2.0 * nu, 0.0)
                } else {
                    let mu = nu * (1.0 + s.powf(e));
                    let dmu = if e == 1.0 { *nu } else { nu * e * s.powf(e - 1.0) };
                    (mu, dmu)
                }
            }
            Self::PowerShift { nu, d } => {
                let e = (d - 2.0) / 2.0;
                let mu = nu * (1.0 + s).powf(e);
                let dmu = nu * e * (1.0 + s).powf(e - 1.0);
                (mu, dmu)
            }
            Self::Newtonian { nu } => (*nu, 0.0),
            Self::Table(sp) => sp.eval(s),
        }
    }

    /// Base viscosity `mu(0)`.
    pub fn mu0(&self) -> f64 {
        self.eval_unchecked(0.0).0
    }

    /// Whether `dmu/ds` vanishes identically.
    pub fn is_newtonian(&self) -> bool {
        match self {
            Self::Newtonian { .. } => true,
            Self::PowerSum { d, .. } | Self::PowerShift { d, .. } => *d == 2.0,
            Self::Table(_) => false,
        }
    }

    /// Evaluate `(mu, dmu/ds)` on a block of `s = |D|^2` samples.
    pub fn eval_block(&self, s: &Array2<f64>) -> Result<(Array2<f64>, Array2<f64>)> {
        let mut mu = Array2::zeros(s.raw_dim());
        let mut dmu = Array2::zeros(s.raw_dim());
        for ((m, dm), &sv) in mu.iter_mut().zip(dmu.iter_mut()).zip(s.iter()) {
            let (a, b) = self.eval(sv)?;
            *m = a;
            *dm = b;
        }
        Ok((mu, dmu))
    }
}

/// Densities, viscosity models and interface parameters of the two phases.
///
/// Phase 1 occupies the lower block, phase 2 the upper block; the jump of a
/// piecewise quantity is phase 2 minus phase 1.
#[derive(Debug, Clone, PartialEq)]
pub struct PhasePair {
    pub rho1: f64,
    pub rho2: f64,
    pub model1: ViscosityModel,
    pub model2: ViscosityModel,
    /// Surface tension coefficient, positive.
    pub sigma: f64,
    /// Gravitational acceleration, non-negative.
    pub gamma_a: f64,
}

impl PhasePair {
    pub fn new(
        rho1: f64,
        rho2: f64,
        model1: ViscosityModel,
        model2: ViscosityModel,
        sigma: f64,
        gamma_a: f64,
    ) -> Result<Self> {
        if !(rho1 > 0.0) || !(rho2 > 0.0) {
            return Err(CoreError::Config(format!(
                "densities must be positive, got rho1 = {rho1}, rho2 = {rho2}"
            )));
        }
        if !(sigma > 0.0) {
            return Err(CoreError::Config(format!("sigma must be positive, got {sigma}")));
        }
        if !(gamma_a >= 0.0) {
            return Err(CoreError::Config(format!("gamma_a must be >= 0, got {gamma_a}")));
        }
        Ok(Self { rho1, rho2, model1, model2, sigma, gamma_a })
    }

    pub fn rho(&self, phase: Phase) -> f64 {
        match phase {
            Phase::Lower => self.rho1,
            Phase::Upper => self.rho2,
        }
    }

    pub fn model(&self, phase: Phase) -> &ViscosityModel {
        match phase {
            Phase::Lower => &self.model1,
            Phase::Upper => &self.model2,
        }
    }

    pub fn mu0(&self, phase: Phase) -> f64 {
        self.model(phase).mu0()
    }

    /// `rho_2 - rho_1`.
    pub fn jump_rho(&self) -> f64 {
        self.rho2 - self.rho1
    }
}

/// Coefficient tensor of the quasilinear stress operator, frozen at one
/// deformation value:
/// `A_i^{jkl}(D) = (1/2) (2 (dmu/ds)(|D|^2) D_ij D_kl + mu(|D|^2) delta_ik delta_jl)`.
#[derive(Debug, Clone)]
pub struct ATensor {
    pub dim: usize,
    pub mu: f64,
    pub mu_dot: f64,
    /// Row-major `D_ij`.
    pub d: Vec<f64>,
}

impl ATensor {
    /// Build the coefficients at a symmetric tensor `D` (row-major, dim^2).
    pub fn new(model: &ViscosityModel, dim: usize, d: &[f64]) -> Result<Self> {
        assert_eq!(d.len(), dim * dim);
        for i in 0..dim {
            for j in 0..dim {
                if (d[i * dim + j] - d[j * dim + i]).abs() > 1e-12 * (1.0 + d[i * dim + j].abs()) {
                    return Err(CoreError::Domain("A-tensor argument must be symmetric".into()));
                }
            }
        }
        let s: f64 = d.iter().map(|v| v * v).sum();
        let (mu, mu_dot) = model.eval(s)?;
        Ok(Self { dim, mu, mu_dot, d: d.to_vec() })
    }

    /// `A_i^{jkl}` at the frozen deformation.
    pub fn coeff(&self, i: usize, j: usize, k: usize, l: usize) -> f64 {
        let dd = self.d[i * self.dim + j] * self.d[k * self.dim + l];
        let delta = if i == k && j == l { 1.0 } else { 0.0 };
        0.5 * (2.0 * self.mu_dot * dd + self.mu * delta)
    }
}

/// Plain symmetric velocity gradient `D(u) = (grad u + grad u^T) / 2` on the
/// strip, with the companion scalar `|D|^2` (Frobenius, no Voigt weights).
pub fn deformation(u: &TwoPhaseField) -> (TwoPhaseField, TwoPhaseField) {
    let grid = u.grid;
    assert_eq!(u.rank, Rank::Vector);
    let dim = grid.dim;
    let d: Vec<TwoPhaseField> = (1..=dim).map(|j| u.deriv(j)).collect();
    let mut tensor = TwoPhaseField::zeros(grid, Rank::Tensor);
    for i in 0..dim {
        for j in 0..dim {
            for ph in Phase::BOTH {
                let sym = 0.5 * (d[i].block(ph, j) + d[j].block(ph, i));
                *tensor.block_mut(ph, i * dim + j) = sym;
            }
        }
    }
    let mut sq = TwoPhaseField::zeros(grid, Rank::Scalar);
    for ph in Phase::BOTH {
        let mut acc = Array2::zeros((grid.h_len(), grid.v_len()));
        for c in 0..dim * dim {
            let b = tensor.block(ph, c);
            acc = acc + &(b * b);
        }
        *sq.block_mut(ph, 0) = acc;
    }
    (tensor, sq)
}

/// All second derivatives `D_j D_k v_l` of a vector field.
pub struct SecondDerivatives {
    pub dim: usize,
    fields: Vec<TwoPhaseField>,
}

impl SecondDerivatives {
    pub fn new(v: &TwoPhaseField) -> Self {
        let dim = v.grid.dim;
        let mut fields = Vec::with_capacity(dim * dim);
        for j in 1..=dim {
            let dj = v.deriv(j);
            for k in 1..=dim {
                fields.push(dj.deriv(k));
            }
        }
        Self { dim, fields }
    }

    /// `D_j D_k v_l` at one grid point (1-based j, k; 0-based component l).
    pub fn get(&self, ph: Phase, j: usize, k: usize, l: usize, q: usize, m: usize) -> f64 {
        self.fields[(j - 1) * self.dim + (k - 1)].block(ph, l)[[q, m]]
    }
}

/// The quasilinear operator `A_d(u) v` of a single viscosity model applied on
/// both blocks:
/// `(A_d(u) v)_i = - sum_jkl 2 A_i^{jkl}(D(u)) (D_j D_k v_l + D_j D_l v_k)`.
///
/// The doubled coefficient pairing makes `A_d(u) u` the negative divergence
/// of the full viscous stress `2 mu(|D(u)|^2) D(u)` and `A_d(0) v` the
/// constant-coefficient operator `-mu(0) (lap v + grad div v)`.
pub fn quasilinear_stress(
    model: &ViscosityModel,
    u: &TwoPhaseField,
    v: &TwoPhaseField,
) -> Result<TwoPhaseField> {
    let grid = u.grid;
    let dim = grid.dim;
    let (dten, dsq) = deformation(u);
    let second = SecondDerivatives::new(v);
    let mut out = TwoPhaseField::zeros(grid, Rank::Vector);
    for ph in Phase::BOTH {
        let (mu, mu_dot) = model.eval_block(dsq.block(ph, 0))?;
        for q in 0..grid.h_len() {
            for m in 0..grid.v_len() {
                let muv = mu[[q, m]];
                let mudv = mu_dot[[q, m]];
                for i in 0..dim {
                    let mut acc = 0.0;
                    for j in 0..dim {
                        for k in 0..dim {
                            for l in 0..dim {
                                let dd = dten.block(ph, i * dim + j)[[q, m]]
                                    * dten.block(ph, k * dim + l)[[q, m]];
                                let delta = if i == k && j == l { 1.0 } else { 0.0 };
                                let coeff = 2.0 * mudv * dd + muv * delta;
                                let contraction = second.get(ph, j + 1, k + 1, l, q, m)
                                    + second.get(ph, j + 1, l + 1, k, q, m);
                                acc += coeff * contraction;
                            }
                        }
                    }
                    out.block_mut(ph, i)[[q, m]] = -acc;
                }
            }
        }
    }
    Ok(out)
}

/// `A_d(u) u`, the negative divergence of the viscous stress of `u`.
pub fn stress_divergence(model: &ViscosityModel, u: &TwoPhaseField) -> Result<TwoPhaseField> {
    quasilinear_stress(model, u, u)
}

/// Natural cubic spline through strictly increasing sample points.
#[derive(Debug, Clone, PartialEq)]
pub struct Spline {
    x: Vec<f64>,
    y: Vec<f64>,
    /// Second derivatives at the knots.
    m: Vec<f64>,
}

impl Spline {
    pub fn natural(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        let n = x.len();
        if n < 3 || y.len() != n {
            return Err(CoreError::Config(
                "spline needs at least 3 samples with matching lengths".into(),
            ));
        }
        if x[0] != 0.0 {
            return Err(CoreError::Config("viscosity table must start at s = 0".into()));
        }
        for w in x.windows(2) {
            if !(w[1] > w[0]) {
                return Err(CoreError::Config("spline abscissae must be strictly increasing".into()));
            }
        }
        // Thomas algorithm on the natural-spline tridiagonal system.
        let mut m = vec![0.0; n];
        let mut c_prime = vec![0.0; n];
        let mut d_prime = vec![0.0; n];
        for i in 1..n - 1 {
            let h0 = x[i] - x[i - 1];
            let h1 = x[i + 1] - x[i];
            let a = h0;
            let b = 2.0 * (h0 + h1);
            let c = h1;
            let d = 6.0 * ((y[i + 1] - y[i]) / h1 - (y[i] - y[i - 1]) / h0);
            let denom = b - a * c_prime[i - 1];
            c_prime[i] = c / denom;
            d_prime[i] = (d - a * d_prime[i - 1]) / denom;
        }
        for i in (1..n - 1).rev() {
            m[i] = d_prime[i] - c_prime[i] * m[i + 1];
        }
        Ok(Self { x, y, m })
    }

    /// Value and first derivative; linear extension beyond the last knot.
    pub fn eval(&self, s: f64) -> (f64, f64) {
        let n = self.x.len();
        if s >= self.x[n - 1] {
            let h = self.x[n - 1] - self.x[n - 2];
            let slope =
                (self.y[n - 1] - self.y[n - 2]) / h + h / 6.0 * (self.m[n - 2] + 2.0 * self.m[n - 1]);
            return (self.y[n - 1] + slope * (s - self.x[n - 1]), slope);
        }
        let mut lo = 0usize;
        let mut hi = n - 1;
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if self.x[mid] <= s {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let h = self.x[hi] - self.x[lo];
        let a = (self.x[hi] - s) / h;
        let b = (s - self.x[lo]) / h;
        let val = a * self.y[lo]
            + b * self.y[hi]
            + ((a * a * a - a) * self.m[lo] + (b * b * b - b) * self.m[hi]) * h * h / 6.0;
        let deriv = (self.y[hi] - self.y[lo]) / h
            + h / 6.0 * ((3.0 * b * b - 1.0) * self.m[hi] - (3.0 * a * a - 1.0) * self.m[lo]);
        (val, deriv)
    }
}
