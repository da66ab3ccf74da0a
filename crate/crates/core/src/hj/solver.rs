use rayon::prelude::*;

use super::{Axis, HjError, ValueGrid};

/// Continuous dynamics seen through the game Hamiltonian
/// `H(x, p) = max_a min_b pᵀ f(x, a, b)`.
pub trait Dynamics: Sync {
    fn dim(&self) -> usize;
    fn hamiltonian(&self, x: &[f64], p: &[f64]) -> f64;
    /// Bound on |∂H/∂pᵢ| over the grid, per axis.
    fn dissipation(&self, axes: &[Axis]) -> Vec<f64>;
}

/// Largest stable time step for the Lax-Friedrichs update.
pub fn cfl_limit(axes: &[Axis], alpha: &[f64]) -> f64 {
    let rate: f64 = axes.iter().zip(alpha).map(|(a, al)| al / a.spacing()).sum();
    if rate > 0.0 {
        1.0 / rate
    } else {
        f64::INFINITY
    }
}

const MAX_DIM: usize = 8;

/// One backward step of `D_t V + min(0, H(x, D_x V)) = 0`:
/// `V ← V + dt·min(0, H(x, p̄) + Σ αᵢ (p⁺ᵢ − p⁻ᵢ)/2)`.
/// The update can only lower values.
pub fn hji_step<D: Dynamics>(v: &ValueGrid, dynamics: &D, dt: f64) -> Result<ValueGrid, HjError> {
    let axes = v.axes();
    let dim = axes.len();
    assert!(
        dim <= MAX_DIM && dim == dynamics.dim(),
        "grid and dynamics dimensions differ"
    );
    let alpha = dynamics.dissipation(axes);
    let max_dt = cfl_limit(axes, &alpha);
    if dt > max_dt {
        return Err(HjError::Cfl { dt, max_dt });
    }
    let strides = v.strides();
    let values = &v.values;
    let row = axes[dim - 1].n;
    let inv_dx: Vec<f64> = axes.iter().map(|a| 1.0 / a.spacing()).collect();

    let mut out = vec![0.0; values.len()];
    out.par_chunks_mut(row).enumerate().for_each(|(r, chunk)| {
        let mut idx = [0usize; MAX_DIM];
        let mut rem = r;
        for d in (0..dim - 1).rev() {
            idx[d] = rem % axes[d].n;
            rem /= axes[d].n;
        }
        let mut x = [0.0; MAX_DIM];
        let mut p = [0.0; MAX_DIM];
        // periodic duplicates are evaluated at their canonical node
        let canon = |d: usize, j: usize| {
            if axes[d].periodic && j == axes[d].n - 1 {
                0
            } else {
                j
            }
        };
        let mut base = 0;
        for d in 0..dim - 1 {
            let j = canon(d, idx[d]);
            x[d] = axes[d].node(j);
            base += j * strides[d];
        }
        for (last, slot) in chunk.iter_mut().enumerate() {
            idx[dim - 1] = last;
            let jl = canon(dim - 1, last);
            x[dim - 1] = axes[dim - 1].node(jl);
            let at = base + jl;
            let centre = values[at];
            let mut diffusion = 0.0;
            for d in 0..dim {
                let a = &axes[d];
                let j = canon(d, idx[d]);
                let s = strides[d];
                let (lo_v, hi_v) = if a.periodic {
                    let m = a.n - 1;
                    let jm = (j + m - 1) % m;
                    let jp = (j + 1) % m;
                    (values[at - j * s + jm * s], values[at - j * s + jp * s])
                } else if j == 0 {
                    let up = values[at + s];
                    (2.0 * centre - up, up)
                } else if j == a.n - 1 {
                    let down = values[at - s];
                    (down, 2.0 * centre - down)
                } else {
                    (values[at - s], values[at + s])
                };
                let pm = (centre - lo_v) * inv_dx[d];
                let pp = (hi_v - centre) * inv_dx[d];
                p[d] = 0.5 * (pm + pp);
                diffusion += 0.5 * alpha[d] * (pp - pm);
            }
            let h = dynamics.hamiltonian(&x[..dim], &p[..dim]);
            *slot = centre + dt * (h + diffusion).min(0.0);
        }
    });
    ValueGrid::new(axes.to_vec(), out, v.time + dt)
}

fn march<D: Dynamics>(
    target: &ValueGrid,
    dynamics: &D,
    horizon: f64,
    tol: f64,
    mut on_step: impl FnMut(&ValueGrid),
) -> Result<ValueGrid, HjError> {
    let mut v = target.clone();
    if horizon <= 0.0 {
        return Ok(v);
    }
    let max_dt = 0.9 * cfl_limit(target.axes(), &dynamics.dissipation(target.axes()));
    let steps = if max_dt.is_finite() {
        (horizon / max_dt).ceil().max(1.0) as usize
    } else {
        1
    };
    let dt = horizon / steps as f64;
    for _ in 0..steps {
        let next = hji_step(&v, dynamics, dt)?;
        let change = next
            .values
            .iter()
            .zip(&v.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        v = next;
        on_step(&v);
        if change < tol {
            break;
        }
    }
    Ok(v)
}

/// Backward reachable set value function after `horizon` seconds, stopping
/// early once the largest per-step change falls below `tol`.
pub fn solve_brs<D: Dynamics>(
    target: &ValueGrid,
    dynamics: &D,
    horizon: f64,
    tol: f64,
) -> Result<ValueGrid, HjError> {
    march(target, dynamics, horizon, tol, |_| {})
}

/// As [`solve_brs`], also returning a snapshot at the first step reaching
/// each of `times` (ascending).
pub fn solve_brs_slices<D: Dynamics>(
    target: &ValueGrid,
    dynamics: &D,
    horizon: f64,
    tol: f64,
    times: &[f64],
) -> Result<(ValueGrid, Vec<ValueGrid>), HjError> {
    let mut slices = Vec::new();
    let mut pending = times.iter().copied().peekable();
    let last = march(target, dynamics, horizon, tol, |v| {
        while let Some(&t) = pending.peek() {
            if v.time + 1e-12 >= t {
                slices.push(v.clone());
                pending.next();
            } else {
                break;
            }
        }
    })?;
    for _ in pending {
        slices.push(last.clone());
    }
    Ok((last, slices))
}
