//! Phase-space midpoint quadrature over the numerical flow.
//!
//! The `(node, velocity)` index space is cut into fixed blocks of
//! velocities per spatial node. Blocks are evaluated in parallel and their
//! partial sums are combined by a pairwise tree in a fixed order, so results
//! are bit-identical regardless of the number of worker threads.

use rayon::prelude::*;

use crate::error::Result;
use crate::flow::FlowContext;
use crate::grid::{GridSpec, PhasePoint, Real};
use crate::poisson::DensityGrid;

/// Velocities per work item.
pub const VELOCITY_BLOCK: usize = 256;

/// Pairwise (cascade) summation.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    if values.len() <= 16 {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

fn pairwise_sum_arrays<const K: usize>(values: &[[f64; K]]) -> [f64; K] {
    match values.len() {
        0 => [0.0; K],
        1 => values[0],
        len => {
            let mid = len / 2;
            let a = pairwise_sum_arrays(&values[..mid]);
            let b = pairwise_sum_arrays(&values[mid..]);
            std::array::from_fn(|k| a[k] + b[k])
        }
    }
}

/// Charge density at step `n` with its bookkeeping.
#[derive(Debug, Clone)]
pub struct ChargeDensity {
    /// Neutralized nodal density.
    pub rho: DensityGrid,
    /// Nodal mean removed by neutralization.
    pub neutralization: f64,
    /// Field evaluations performed by the sweep.
    pub field_evals: u64,
    /// Smallest sampled `f`.
    pub min_f: f64,
    /// Largest sampled `f`.
    pub max_f: f64,
}

fn positions<T: Real, const D: usize>(grid: &GridSpec) -> (Vec<[T; D]>, Vec<[T; D]>) {
    let xs = (0..grid.n_nodes()).map(|i| grid.node_position::<T, D>(i)).collect();
    let vs = (0..grid.n_velocities())
        .map(|j| grid.velocity_midpoint::<T, D>(j))
        .collect();
    (xs, vs)
}

/// `rho(x_i) = rho_bar - hv^d sum_j f0(psi_tilde(n, x_i, v_j))`, neutralized.
///
/// Needs fields `0..n` only; at `n = 0` the flow is the identity.
pub fn compute_rho<T: Real, const D: usize>(
    ctx: &FlowContext<'_, T, D>,
    n: usize,
    grid: &GridSpec,
) -> Result<ChargeDensity> {
    grid.check_dim::<D>()?;
    ctx.check_tilde(n)?;
    let rho_bar = ctx.ic.background_density(grid)?;
    let (xs, vs) = positions::<T, D>(grid);
    let n_blocks = vs.len().div_ceil(VELOCITY_BLOCK);
    let partials: Vec<(f64, u64, f64, f64)> = (0..xs.len() * n_blocks)
        .into_par_iter()
        .map(|item| {
            let x = xs[item / n_blocks];
            let b = item % n_blocks;
            let block = &vs[b * VELOCITY_BLOCK..((b + 1) * VELOCITY_BLOCK).min(vs.len())];
            let mut evals = 0;
            let mut sum = 0.0;
            let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
            let mut pts: Vec<PhasePoint<T, D>> = block.iter().map(|&v| PhasePoint { x, v }).collect();
            ctx.trace_tilde_batch(n, &mut pts, &mut evals);
            for q in &pts {
                let f = ctx.ic.eval(&q.x, &q.v).as_f64();
                lo = lo.min(f);
                hi = hi.max(f);
                sum += f;
            }
            (sum, evals, lo, hi)
        })
        .collect();
    let weight = grid.hv().powi(D as i32);
    let mut field_evals = 0;
    let mut sums = Vec::with_capacity(n_blocks);
    let values = partials
        .chunks(n_blocks)
        .map(|node| {
            sums.clear();
            for &(s, e, _, _) in node {
                sums.push(s);
                field_evals += e;
            }
            rho_bar - weight * pairwise_sum(&sums)
        })
        .collect();
    let mut rho = DensityGrid::new(grid.clone(), values)?;
    let neutralization = rho.neutralize();
    Ok(ChargeDensity {
        rho,
        neutralization,
        field_evals,
        min_f: partials.iter().fold(f64::INFINITY, |m, p| m.min(p.2)),
        max_f: partials.iter().fold(f64::NEG_INFINITY, |m, p| m.max(p.3)),
    })
}

/// Output of a phase-space quadrature sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepResult<const K: usize> {
    /// `hx^d hv^d sum_{i,j} weight(x_i, v_j, f)`.
    pub integrals: [f64; K],
    /// Smallest sampled `f`.
    pub min_f: f64,
    /// Largest sampled `f`.
    pub max_f: f64,
    pub field_evals: u64,
}

/// Midpoint quadrature of `weight(x, v, f(n tau, x, v))` over the full
/// phase-space grid, with `f` evaluated through the full flow `psi`.
pub fn quadrature_sweep<T, const D: usize, const K: usize, W>(
    ctx: &FlowContext<'_, T, D>,
    n: usize,
    grid: &GridSpec,
    weight: W,
) -> Result<SweepResult<K>>
where
    T: Real,
    W: Fn(&PhasePoint<f64, D>, f64) -> [f64; K] + Sync,
{
    grid.check_dim::<D>()?;
    ctx.check_psi(n)?;
    let (xs, vs) = positions::<T, D>(grid);
    let n_blocks = vs.len().div_ceil(VELOCITY_BLOCK);
    let partials: Vec<([f64; K], f64, f64, u64)> = (0..xs.len() * n_blocks)
        .into_par_iter()
        .map(|item| {
            let x = xs[item / n_blocks];
            let b = item % n_blocks;
            let block = &vs[b * VELOCITY_BLOCK..((b + 1) * VELOCITY_BLOCK).min(vs.len())];
            let mut evals = 0;
            let mut acc = [0.0; K];
            let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
            let mut pts: Vec<PhasePoint<T, D>> = block.iter().map(|&v| PhasePoint { x, v }).collect();
            ctx.trace_batch(n, &mut pts, &mut evals);
            for (&v, q) in block.iter().zip(&pts) {
                let p = PhasePoint { x, v };
                let f = ctx.ic.eval(&q.x, &q.v).as_f64();
                lo = lo.min(f);
                hi = hi.max(f);
                let w = weight(&p.to_f64(), f);
                for k in 0..K {
                    acc[k] += w[k];
                }
            }
            (acc, lo, hi, evals)
        })
        .collect();
    let sums: Vec<[f64; K]> = partials.iter().map(|p| p.0).collect();
    let total = pairwise_sum_arrays(&sums);
    let volume = grid.cell_volume();
    Ok(SweepResult {
        integrals: total.map(|s| s * volume),
        min_f: partials.iter().fold(f64::INFINITY, |m, p| m.min(p.1)),
        max_f: partials.iter().fold(f64::NEG_INFINITY, |m, p| m.max(p.2)),
        field_evals: partials.iter().map(|p| p.3).sum(),
    })
}
