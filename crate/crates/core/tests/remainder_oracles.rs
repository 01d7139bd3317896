//! Physical-space oracle for the quasilinear bulk remainder.
//!
//! The remainder must equal the pull-back of
//! `div_x(2 mu(|D_x v|^2) D_x v) - mu(0)(lap_x v + grad_x div_x v)`
//! where `v` is the push-forward of `u`. Here `v` and its first derivatives
//! are evaluated exactly from closed forms (chain rule through the
//! flattening map), the outer divergence is a central difference, and the
//! comparison runs at interior grid nodes.

use interflow::constitutive::{PhasePair, ViscosityModel};
use interflow::grid::{Phase, StripGrid};
use interflow::rhs::eval_a;
use interflow::testing::{SmallRng64, TrigField, VectorTrig};

struct Closed {
    u: VectorTrig,
    h: TrigField,
}

impl Closed {
    /// Exact physical first derivative via the chain rule through the map.
    fn dv(&self, c: usize, dir: usize, x: f64, xn: f64) -> f64 {
        let xi = xn - self.h.eval(&[x], 0.0);
        let comp = if xi < 0.0 { &self.u.comps[c].lower } else { &self.u.comps[c].upper };
        let du_dx = comp.deriv(0, 2).eval(&[x], xi);
        let du_dxi = comp.deriv(1, 2).eval(&[x], xi);
        if dir == 0 {
            let dh = self.h.deriv(0, 2).eval(&[x], 0.0);
            du_dx - dh * du_dxi
        } else {
            du_dxi
        }
    }

    /// Viscous stress `T_ij = 2 mu(|D|^2) D_ij` at a physical point.
    fn stress(&self, model: &ViscosityModel, i: usize, j: usize, x: f64, xn: f64) -> f64 {
        let mut d = [[0.0; 2]; 2];
        for a in 0..2 {
            for b in 0..2 {
                d[a][b] = 0.5 * (self.dv(b, a, x, xn) + self.dv(a, b, x, xn));
            }
        }
        let s: f64 = d.iter().flatten().map(|v| v * v).sum();
        let (mu, _) = model.eval(s).unwrap();
        2.0 * mu * d[i][j]
    }

    /// Frozen-coefficient stress with `mu(0)`.
    fn stress0(&self, mu0: f64, i: usize, j: usize, x: f64, xn: f64) -> f64 {
        let mut d = [[0.0; 2]; 2];
        for a in 0..2 {
            for b in 0..2 {
                d[a][b] = 0.5 * (self.dv(b, a, x, xn) + self.dv(a, b, x, xn));
            }
        }
        2.0 * mu0 * d[i][j]
    }
}

#[test]
fn bulk_remainder_matches_physical_space_divergence_oracle() {
    let g = StripGrid::new(2, 128, 1.0, 128, 1.0).unwrap();
    let phases = PhasePair::new(
        1.0,
        1.0,
        ViscosityModel::power_shift(1.0, 3.0).unwrap(),
        ViscosityModel::power_shift(0.7, 3.0).unwrap(),
        1.0,
        0.0,
    )
    .unwrap();
    let mut rng = SmallRng64::new(2024);
    let closed = Closed {
        u: VectorTrig::random_continuous(&mut rng, &g, 2, 1.0, 0.1),
        h: TrigField::random_horizontal(&mut rng, &g, 2, 0.05),
    };
    let u = closed.u.to_field(g);
    let h = closed.h.to_height(g);

    let prod = eval_a(&u, &h, &phases).unwrap();

    let delta = 1e-4;
    let margin = 0.15 * g.l_v;
    let mut err = 0.0f64;
    let mut scale = 0.0f64;
    let mut checked = 0usize;
    for q in (0..g.h_len()).step_by(8) {
        let x = g.x_h(q)[0];
        for ph in Phase::BOTH {
            let model = phases.model(ph);
            let mu0 = model.mu0();
            for m in (0..g.v_len()).step_by(16) {
                let xi = g.xi_v(ph, m);
                if xi.abs() < margin || xi.abs() > g.l_v - margin {
                    continue;
                }
                let xn = xi + h.values[q];
                for i in 0..2 {
                    // div_x of the full and frozen stresses by central
                    // differences of exactly evaluated closed forms.
                    let full = (closed.stress(model, i, 0, x + delta, xn)
                        - closed.stress(model, i, 0, x - delta, xn))
                        / (2.0 * delta)
                        + (closed.stress(model, i, 1, x, xn + delta)
                            - closed.stress(model, i, 1, x, xn - delta))
                            / (2.0 * delta);
                    let frozen = (closed.stress0(mu0, i, 0, x + delta, xn)
                        - closed.stress0(mu0, i, 0, x - delta, xn))
                        / (2.0 * delta)
                        + (closed.stress0(mu0, i, 1, x, xn + delta)
                            - closed.stress0(mu0, i, 1, x, xn - delta))
                            / (2.0 * delta);
                    let exact = full - frozen;
                    let got = prod.block(ph, i)[[q, m]];
                    err = err.max((got - exact).abs());
                    scale = scale.max(exact.abs());
                }
                checked += 1;
            }
        }
    }
    assert!(checked > 50);
    let rel = err / scale;
    assert!(rel < 1e-3, "physical-space oracle relative error {rel} ({err} / {scale})");
}
