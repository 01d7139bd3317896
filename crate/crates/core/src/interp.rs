//! Cubic interpolation helpers: periodic in the horizontal directions,
//! one-sided near block edges in the vertical, never across the interface.

use ndarray::Array2;

use crate::grid::{Phase, StripGrid, TwoPhaseField};

/// Weights of 4-point cubic Lagrange interpolation at offset `t` from node
/// `i1` (stencil nodes i1-1, i1, i1+1, i1+2; `t` in units of the spacing).
fn lagrange4(t: f64) -> [f64; 4] {
    let tm = t + 1.0;
    let t1 = t;
    let t2 = t - 1.0;
    let t3 = t - 2.0;
    [
        -t1 * t2 * t3 / 6.0,
        tm * t2 * t3 / 2.0,
        -tm * t1 * t3 / 2.0,
        tm * t1 * t2 / 6.0,
    ]
}

/// Periodic cubic interpolation of a line of `n` uniformly spaced samples.
pub fn periodic_cubic(samples: impl Fn(usize) -> f64, n: usize, pos: f64) -> f64 {
    // pos in grid units (node index coordinates), arbitrary real.
    let base = pos.floor();
    let t = pos - base;
    let i1 = base as i64;
    let w = lagrange4(t);
    let mut acc = 0.0;
    for (s, wk) in w.iter().enumerate() {
        let idx = (i1 - 1 + s as i64).rem_euclid(n as i64) as usize;
        acc += wk * samples(idx);
    }
    acc
}

/// Cubic interpolation on a bounded line of `n` samples; the 4-node stencil
/// is clamped inside `[0, n-1]`.
pub fn bounded_cubic(samples: impl Fn(usize) -> f64, n: usize, pos: f64) -> f64 {
    assert!(n >= 4);
    let mut i1 = pos.floor() as i64;
    // Clamp so the stencil (i1-1 .. i1+2) stays inside the block.
    if i1 < 1 {
        i1 = 1;
    }
    if i1 > n as i64 - 3 {
        i1 = n as i64 - 3;
    }
    let t = pos - i1 as f64;
    let w = lagrange4(t);
    let mut acc = 0.0;
    for (s, wk) in w.iter().enumerate() {
        acc += wk * samples((i1 - 1 + s as i64) as usize);
    }
    acc
}

/// Interpolate a single block of a two-phase field at horizontal grid
/// coordinates `pos_h` (in node units per direction) and vertical node
/// coordinate `pos_v` (in node units within the block).
pub fn interp_block(
    grid: &StripGrid,
    block: &Array2<f64>,
    pos_h: &[f64],
    pos_v: f64,
) -> f64 {
    let n = grid.n_h;
    let nv = grid.v_len();
    if grid.dim == 2 {
        periodic_cubic(
            |ix| bounded_cubic(|m| block[[ix, m]], nv, pos_v),
            n,
            pos_h[0],
        )
    } else {
        periodic_cubic(
            |iy| {
                periodic_cubic(
                    |ix| bounded_cubic(|m| block[[ix + n * iy, m]], nv, pos_v),
                    n,
                    pos_h[0],
                )
            },
            n,
            pos_h[1],
        )
    }
}

/// Interpolate component `c` of `f` at flattened coordinates
/// (`x_h` physical horizontal, `xi_v` vertical). The phase block is chosen
/// by the sign of `xi_v`; interpolation never crosses the interface.
pub fn interp_field(f: &TwoPhaseField, c: usize, x_h: &[f64], xi_v: f64) -> f64 {
    let g = &f.grid;
    let mut pos_h = [0.0; 2];
    for d in 0..g.dim - 1 {
        pos_h[d] = x_h[d] / g.dx();
    }
    let (phase, pos_v) = if xi_v < 0.0 {
        (Phase::Lower, (xi_v + g.l_v) / g.dv())
    } else {
        (Phase::Upper, xi_v / g.dv())
    };
    interp_block(g, f.block(phase, c), &pos_h[..g.dim - 1], pos_v)
}
