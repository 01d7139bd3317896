//! Closed-form trigonometric fields with exact derivatives.
//!
//! These evaluate anywhere (not just on grid nodes), so they serve as
//! independent oracles for the discrete operators: a field is sampled onto
//! the grid for the production path while physical-space reference values
//! come straight from the analytic expressions. Randomized instances use a
//! small self-contained generator so tests are deterministic everywhere.

use crate::geometry::HeightField;
use crate::grid::{Phase, Rank, StripGrid, TwoPhaseField};

/// Deterministic xorshift generator for reproducible test ensembles.
#[derive(Debug, Clone)]
pub struct SmallRng64(u64);

impl SmallRng64 {
    pub fn new(seed: u64) -> Self {
        Self(seed.max(1))
    }

    pub fn next_u64(&mut self) -> u64 {
        let mut x = self.0;
        x ^= x << 13;
        x ^= x >> 7;
        x ^= x << 17;
        self.0 = x;
        x
    }

    /// Uniform in [0, 1).
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    /// Uniform in [lo, hi).
    pub fn range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    /// Uniform integer in [lo, hi] inclusive.
    pub fn int_range(&mut self, lo: i64, hi: i64) -> i64 {
        lo + (self.next_u64() % (hi - lo + 1) as u64) as i64
    }
}

/// One separable term `amp * cos(jx x/l_h + jy y/l_h + ph_h) * cos(om xi + ph_v)`.
#[derive(Debug, Clone, Copy)]
pub struct Harmonic {
    pub amp: f64,
    pub jx: i64,
    pub jy: i64,
    pub ph_h: f64,
    pub om_v: f64,
    pub ph_v: f64,
}

/// A finite sum of separable harmonics on the strip; closed under
/// differentiation, so derivatives of any order are exact.
#[derive(Debug, Clone)]
pub struct TrigField {
    pub l_h: f64,
    pub terms: Vec<Harmonic>,
}

impl TrigField {
    pub fn zero(l_h: f64) -> Self {
        Self { l_h, terms: Vec::new() }
    }

    pub fn eval(&self, x_h: &[f64], xi: f64) -> f64 {
        let y = if x_h.len() > 1 { x_h[1] } else { 0.0 };
        self.terms
            .iter()
            .map(|t| {
                let th = (t.jx as f64 * x_h[0] + t.jy as f64 * y) / self.l_h + t.ph_h;
                t.amp * th.cos() * (t.om_v * xi + t.ph_v).cos()
            })
            .sum()
    }

    /// Exact derivative; `dir` 0-based with the last index vertical.
    /// Differentiating cos shifts its phase by pi/2 and scales the amplitude.
    pub fn deriv(&self, dir: usize, dim: usize) -> Self {
        let terms = self
            .terms
            .iter()
            .map(|t| {
                let mut t = *t;
                if dir == dim - 1 {
                    t.amp *= t.om_v;
                    t.ph_v += std::f64::consts::FRAC_PI_2;
                } else {
                    let j = if dir == 0 { t.jx } else { t.jy };
                    t.amp *= j as f64 / self.l_h;
                    t.ph_h += std::f64::consts::FRAC_PI_2;
                }
                t
            })
            .collect();
        Self { l_h: self.l_h, terms }
    }

    pub fn scale(&self, s: f64) -> Self {
        let terms = self
            .terms
            .iter()
            .map(|t| {
                let mut t = *t;
                t.amp *= s;
                t
            })
            .collect();
        Self { l_h: self.l_h, terms }
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut terms = self.terms.clone();
        terms.extend_from_slice(&other.terms);
        Self { l_h: self.l_h, terms }
    }

    /// Random band-limited field with horizontal modes up to `j_max` and
    /// vertical frequencies of order `om_scale`.
    pub fn random(rng: &mut SmallRng64, grid: &StripGrid, j_max: i64, om_scale: f64, amp: f64) -> Self {
        let mut terms = Vec::new();
        for _ in 0..4 {
            terms.push(Harmonic {
                amp: amp * rng.range(-1.0, 1.0),
                jx: rng.int_range(0, j_max),
                jy: if grid.dim == 3 { rng.int_range(0, j_max) } else { 0 },
                ph_h: rng.range(0.0, std::f64::consts::TAU),
                om_v: om_scale * rng.range(0.4, 1.4),
                ph_v: rng.range(0.0, std::f64::consts::TAU),
            });
        }
        Self { l_h: grid.l_h, terms }
    }

    /// Random horizontal-only field (constant in the vertical direction).
    pub fn random_horizontal(rng: &mut SmallRng64, grid: &StripGrid, j_max: i64, amp: f64) -> Self {
        let mut f = Self::random(rng, grid, j_max, 0.0, amp);
        for t in &mut f.terms {
            t.om_v = 0.0;
            t.ph_v = 0.0;
        }
        f
    }

    /// Sample onto the horizontal torus grid as a height field.
    pub fn to_height(&self, grid: StripGrid) -> HeightField {
        HeightField::from_fn(grid, |x| self.eval(x, 0.0))
    }
}

/// A closed-form two-phase scalar: independent expressions below and above
/// the interface.
#[derive(Debug, Clone)]
pub struct TwoPhaseTrig {
    pub lower: TrigField,
    pub upper: TrigField,
}

impl TwoPhaseTrig {
    pub fn eval(&self, phase: Phase, x_h: &[f64], xi: f64) -> f64 {
        match phase {
            Phase::Lower => self.lower.eval(x_h, xi),
            Phase::Upper => self.upper.eval(x_h, xi),
        }
    }

    /// Evaluate choosing the phase by the sign of `xi` (upper at 0).
    pub fn eval_signed(&self, x_h: &[f64], xi: f64) -> f64 {
        if xi < 0.0 {
            self.lower.eval(x_h, xi)
        } else {
            self.upper.eval(x_h, xi)
        }
    }

    pub fn deriv(&self, dir: usize, dim: usize) -> Self {
        Self { lower: self.lower.deriv(dir, dim), upper: self.upper.deriv(dir, dim) }
    }

    pub fn scale(&self, s: f64) -> Self {
        Self { lower: self.lower.scale(s), upper: self.upper.scale(s) }
    }

    /// Random field, discontinuous across the interface.
    pub fn random(rng: &mut SmallRng64, grid: &StripGrid, j_max: i64, om_scale: f64, amp: f64) -> Self {
        Self {
            lower: TrigField::random(rng, grid, j_max, om_scale, amp),
            upper: TrigField::random(rng, grid, j_max, om_scale, amp),
        }
    }

    /// Random field continuous at the interface: the upper expression is the
    /// lower one plus terms proportional to sin(om xi), which vanish at 0.
    pub fn random_continuous(
        rng: &mut SmallRng64,
        grid: &StripGrid,
        j_max: i64,
        om_scale: f64,
        amp: f64,
    ) -> Self {
        let shared = TrigField::random(rng, grid, j_max, om_scale, amp);
        let mut extra = TrigField::random(rng, grid, j_max, om_scale, amp);
        for t in &mut extra.terms {
            // cos(om xi - pi/2) = sin(om xi) vanishes at the interface.
            t.ph_v = -std::f64::consts::FRAC_PI_2;
            if t.om_v == 0.0 {
                t.amp = 0.0;
            }
        }
        Self { lower: shared.clone(), upper: shared.add(&extra) }
    }

    pub fn to_field(&self, grid: StripGrid) -> TwoPhaseField {
        TwoPhaseField::from_fn(grid, Rank::Scalar, |_, ph, x, xi| self.eval(ph, x, xi))
    }
}

/// A closed-form two-phase vector field (one [`TwoPhaseTrig`] per component).
#[derive(Debug, Clone)]
pub struct VectorTrig {
    pub comps: Vec<TwoPhaseTrig>,
}

impl VectorTrig {
    /// Random vector field with `dim` components, continuous at the interface.
    pub fn random_continuous(
        rng: &mut SmallRng64,
        grid: &StripGrid,
        j_max: i64,
        om_scale: f64,
        amp: f64,
    ) -> Self {
        let comps = (0..grid.dim)
            .map(|_| TwoPhaseTrig::random_continuous(rng, grid, j_max, om_scale, amp))
            .collect();
        Self { comps }
    }

    pub fn eval(&self, c: usize, phase: Phase, x_h: &[f64], xi: f64) -> f64 {
        self.comps[c].eval(phase, x_h, xi)
    }

    pub fn to_field(&self, grid: StripGrid) -> TwoPhaseField {
        TwoPhaseField::from_fn(grid, Rank::Vector, |c, ph, x, xi| self.eval(c, ph, x, xi))
    }

    pub fn scale(&self, s: f64) -> Self {
        Self { comps: self.comps.iter().map(|c| c.scale(s)).collect() }
    }
}
