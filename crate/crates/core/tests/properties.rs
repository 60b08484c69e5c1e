//! Cross-module invariants on real runs.

use std::f64::consts::PI;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use nufi::driver::run_simulation;
use nufi::flow::fd_jacobian_determinant;
use nufi::poisson::{electric_energy, DensityGrid, PoissonSolver};
use nufi::{Benchmark, GridSpec, PhasePoint, RunConfig, SplineField};

fn two_stream(nx: usize, nv: usize, tau: f64, n_steps: usize, cadence: usize) -> RunConfig {
    let mut cfg = RunConfig::for_benchmark(Benchmark::TwoStream1d, nx, nv, tau, n_steps).unwrap();
    cfg.diagnostics_cadence = cadence;
    cfg
}

#[test]
fn neutralization_tracks_mass_drift() {
    for b in [
        Benchmark::WeakLandau1d,
        Benchmark::TwoStream1d,
        Benchmark::StrongLandau2d,
        Benchmark::TwoStream3d,
    ] {
        let cfg = RunConfig::for_benchmark(b, 8, 16, 0.0625, 0).unwrap();
        let out = nufi::run(&cfg).unwrap();
        let c = out.diagnostics()[0].neutralization_constant;
        assert!(c.abs() < 1e-10, "{b}: {c}");
    }

    let st = run_simulation::<f64, 1>(&two_stream(32, 128, 0.125, 200, 20)).unwrap();
    let l0 = st.diagnostics[0].l1_norm;
    for r in &st.diagnostics[1..] {
        let drift = (r.l1_norm - l0).abs();
        assert!(
            r.neutralization_constant.abs() < 10.0 * drift,
            "step {}: neutralization {:e}, L1 drift {drift:e}",
            r.step,
            r.neutralization_constant
        );
    }
}

#[test]
fn real_history_preserves_volume() {
    let cfg = two_stream(32, 128, 0.0625, 160, 160);
    let st = run_simulation::<f64, 1>(&cfg).unwrap();
    let ctx = st.context().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(160);
    for _ in 0..100 {
        let x = rng.gen_range(0.0..cfg.grid.box_length());
        let v = rng.gen_range(-6.0..6.0);
        let det = fd_jacobian_determinant(&ctx, 160, PhasePoint::new([x], [v]), 1e-4).unwrap();
        assert!((det - 1.0).abs() < 1e-5, "det {det} at ({x}, {v})");
    }
}

#[test]
fn every_sample_obeys_maximum_principle() {
    for b in [Benchmark::WeakLandau1d, Benchmark::TwoStream1d] {
        let mut cfg = RunConfig::for_benchmark(b, 16, 64, 0.25, 80).unwrap();
        cfg.diagnostics_cadence = 5;
        cfg.snapshot_steps = vec![40, 80];
        cfg.snapshot_resolution = 64;
        let st = run_simulation::<f64, 1>(&cfg).unwrap();
        let (lo, hi) = st.sampled_range();
        assert!(lo >= 0.0 && hi <= st.ic.sup(), "{b}: [{lo}, {hi}]");
    }
    let mut cfg = RunConfig::for_benchmark(Benchmark::TwoStream1d, 16, 64, 0.25, 40).unwrap();
    cfg.precision = nufi::Precision::Single;
    let st = run_simulation::<f32, 1>(&cfg).unwrap();
    let (lo, hi) = st.sampled_range();
    assert!(lo >= 0.0 && hi <= st.ic.sup() * (1.0 + 1e-6), "single: [{lo}, {hi}]");
}

/// `1/2 |grad phi|^2` of the fitted spline by midpoint quadrature on a grid
/// refined 4x per axis.
fn spline_energy_2d(spline: &SplineField<f64, 2>, l: f64, nx: usize) -> f64 {
    let m = 4 * nx;
    let h = l / m as f64;
    let mut sum = 0.0;
    for i in 0..m {
        for j in 0..m {
            let g = spline.gradient(&[(i as f64 + 0.5) * h, (j as f64 + 0.5) * h]);
            sum += g[0] * g[0] + g[1] * g[1];
        }
    }
    0.5 * sum * h * h
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn spectral_energy_matches_spline_quadrature(
        amps in prop::collection::vec(-1.0f64..1.0, 3),
        phases in prop::collection::vec(0.0f64..(2.0 * PI), 3),
    ) {
        let (l, nx) = (4.0 * PI, 64);
        let grid = GridSpec::new(2, l, nx, 4, 1.0).unwrap();
        let modes = [(1.0, 0.0), (0.0, 1.0), (1.0, 1.0)];
        let k = 2.0 * PI / l;
        let rho: Vec<f64> = (0..nx * nx)
            .map(|lin| {
                let (x1, x2) = ((lin / nx) as f64 * grid.hx(), (lin % nx) as f64 * grid.hx());
                (0..3)
                    .map(|m| amps[m] * (k * (modes[m].0 * x1 + modes[m].1 * x2) + phases[m]).cos())
                    .sum()
            })
            .collect();
        let mut rho = DensityGrid::new(grid.clone(), rho).unwrap();
        rho.neutralize();
        let sol = PoissonSolver::new(&grid).solve(&rho).unwrap();
        let spectral = electric_energy(&sol.spectrum);
        prop_assume!(spectral > 1e-3);
        let spline = SplineField::<f64, 2>::fit(&sol.phi_nodes, &grid).unwrap();
        let quad = spline_energy_2d(&spline, l, nx);
        prop_assert!(((quad - spectral) / spectral).abs() < 1e-6, "spectral {spectral}, quadrature {quad}");
    }
}
