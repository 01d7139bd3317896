//! Diagnostic probes: superlinearity of the nonlinear remainder near zero
//! and measured multiplication-algebra constants.

use ndarray::Array1;

use interflow::fixedpoint::{smallness_probe, SmallnessReport};
use interflow::norms::{self, AlgebraRatios};
use interflow::rhs::StateZ;
use interflow::testing::{SmallRng64, TrigField, TwoPhaseTrig, VectorTrig};

use crate::config::{build_grid, build_norm_config, build_phases, build_time, RunConfig};

/// Random admissible trajectory directions built on the configured grids.
pub fn random_direction(cfg: &RunConfig, seed: u64) -> interflow::Result<StateZ> {
    let grid = build_grid(cfg)?;
    let time = build_time(cfg)?;
    let mut rng = SmallRng64::new(seed);
    let mut z = StateZ::zeros(grid, time);
    for n in 0..z.n_nodes() {
        z.u[n] = VectorTrig::random_continuous(&mut rng, &grid, 2, 1.0, 0.3).to_field(grid);
        z.theta[n] = TwoPhaseTrig::random(&mut rng, &grid, 2, 1.0, 0.3).to_field(grid);
        z.pi[n] = z.theta[n].jump(0);
        z.h[n] = TrigField::random_horizontal(&mut rng, &grid, 2, 0.1 * grid.l_v).to_height(grid);
    }
    Ok(z)
}

/// Run the smallness probe on `count` random directions.
pub fn probe_smallness(
    cfg: &RunConfig,
    epsilons: &[f64],
    count: usize,
    seed: u64,
) -> interflow::Result<Vec<SmallnessReport>> {
    let phases = build_phases(cfg)?;
    let norm_cfg = build_norm_config(cfg)?;
    let mut out = Vec::with_capacity(count);
    for i in 0..count {
        let z = random_direction(cfg, seed + i as u64)?;
        out.push(smallness_probe(&z, epsilons, &phases, &norm_cfg)?);
    }
    Ok(out)
}

/// Measured multiplication constants over an ensemble of random pairs,
/// together with the worst composition-bound margin (`rhs - lhs`, which
/// must stay non-negative).
pub struct NormProbeReport {
    pub ratios: Vec<AlgebraRatios>,
    pub max_tilde_algebra: f64,
    pub max_mixed: f64,
    pub min_composition_margin: f64,
}

pub fn probe_norms(cfg: &RunConfig, pairs: usize, seed: u64) -> interflow::Result<NormProbeReport> {
    let grid = build_grid(cfg)?;
    let time = build_time(cfg)?;
    let norm_cfg = build_norm_config(cfg)?;
    let mut rng = SmallRng64::new(seed);
    let mut ratios = Vec::with_capacity(pairs);
    let mut max_a = 0.0f64;
    let mut max_c = 0.0f64;
    let mut min_margin = f64::INFINITY;
    for _ in 0..pairs {
        let f = random_series(&mut rng, &grid, &time);
        let g = random_series(&mut rng, &grid, &time);
        let r = norms::algebra_inequality_probe(&norm_cfg, &grid, &time, &f, &g)?;
        max_a = max_a.max(r.tilde_algebra);
        max_c = max_c.max(r.mixed);
        ratios.push(r);
        let (lhs, rhs) = norms::composition_bound_probe(
            &norm_cfg,
            &grid,
            &time,
            &g,
            |v| v.tanh(),
            1.0,
            1.0,
        )?;
        min_margin = min_margin.min(rhs - lhs);
    }
    Ok(NormProbeReport {
        ratios,
        max_tilde_algebra: max_a,
        max_mixed: max_c,
        min_composition_margin: min_margin,
    })
}

/// Random band-limited interface series used by the norm probes.
pub fn random_series(
    rng: &mut SmallRng64,
    grid: &interflow::StripGrid,
    time: &interflow::TimeGrid,
) -> Vec<Array1<f64>> {
    let base = TrigField::random_horizontal(rng, grid, 3, 1.0);
    let modulation = rng.range(0.3, 2.0);
    let phase = rng.range(0.0, std::f64::consts::TAU);
    let drift = rng.range(-0.5, 0.5);
    (0..=time.n_t)
        .map(|n| {
            let t = time.t(n);
            let amp = (modulation * t + phase).cos() + drift * t;
            Array1::from_shape_fn(grid.h_len(), |q| {
                let x = grid.x_h(q);
                amp * base.eval(&x[..grid.dim - 1], 0.0)
            })
        })
        .collect()
}
