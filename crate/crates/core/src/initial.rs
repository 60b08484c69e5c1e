//! Analytic initial distributions and the neutralizing background density.
//!
//! Every initial condition has the separable form
//! `f0(x, v) = profile(v) * (1 + alpha * sum_a cos(k x_a))`,
//! which covers the built-in benchmarks and the user-defined ones.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use crate::error::{NufiError, Result};
use crate::grid::{GridSpec, Real};

/// Named benchmark problems.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Benchmark {
    WeakLandau1d,
    TwoStream1d,
    StrongLandau2d,
    TwoStream3d,
    /// User-assembled profile and perturbation.
    Custom,
}

impl Benchmark {
    pub fn as_str(self) -> &'static str {
        match self {
            Benchmark::WeakLandau1d => "weak_landau_1d",
            Benchmark::TwoStream1d => "two_stream_1d",
            Benchmark::StrongLandau2d => "strong_landau_2d",
            Benchmark::TwoStream3d => "two_stream_3d",
            Benchmark::Custom => "custom",
        }
    }

    /// Default `(d, L, alpha, k, profile)` of a built-in benchmark.
    pub fn defaults(self) -> Option<BenchmarkDefaults> {
        let four_pi = 4.0 * PI;
        let d = match self {
            Benchmark::WeakLandau1d => BenchmarkDefaults {
                d: 1,
                box_length: four_pi,
                alpha: 0.01,
                k: 0.5,
                profile: VelocityProfile::Maxwellian,
            },
            Benchmark::TwoStream1d => BenchmarkDefaults {
                d: 1,
                box_length: four_pi,
                alpha: 0.01,
                k: 0.5,
                profile: VelocityProfile::SquaredMaxwellian,
            },
            Benchmark::StrongLandau2d => BenchmarkDefaults {
                d: 2,
                box_length: four_pi,
                alpha: 0.5,
                k: 0.5,
                profile: VelocityProfile::Maxwellian,
            },
            // k L = 2 pi needs L = 10 pi for k = 0.2.
            Benchmark::TwoStream3d => BenchmarkDefaults {
                d: 3,
                box_length: 10.0 * PI,
                alpha: 1e-3,
                k: 0.2,
                profile: VelocityProfile::CounterStreams { v0: 2.4 },
            },
            Benchmark::Custom => return None,
        };
        Some(d)
    }
}

impl fmt::Display for Benchmark {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Benchmark {
    type Err = NufiError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "weak_landau_1d" => Ok(Benchmark::WeakLandau1d),
            "two_stream_1d" => Ok(Benchmark::TwoStream1d),
            "strong_landau_2d" => Ok(Benchmark::StrongLandau2d),
            "two_stream_3d" => Ok(Benchmark::TwoStream3d),
            "custom" => Ok(Benchmark::Custom),
            other => Err(NufiError::Usage(format!("unknown benchmark id '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BenchmarkDefaults {
    pub d: usize,
    pub box_length: f64,
    pub alpha: f64,
    pub k: f64,
    pub profile: VelocityProfile,
}

/// Velocity dependence of `f0`, normalized to unit integral over `R^d`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum VelocityProfile {
    /// `(2 pi)^{-d/2} exp(-|v|^2 / 2)`.
    Maxwellian,
    /// `v_1^2` times the Maxwellian.
    SquaredMaxwellian,
    /// Two Maxwellian beams at `+-v0` along the second velocity axis
    /// (the first axis when `d = 1`), standard Maxwellian elsewhere.
    CounterStreams { v0: f64 },
}

impl VelocityProfile {
    pub fn parse(name: &str, v0: f64) -> Result<Self> {
        match name {
            "maxwellian" => Ok(VelocityProfile::Maxwellian),
            "squared_maxwellian" => Ok(VelocityProfile::SquaredMaxwellian),
            "counter_streams" => Ok(VelocityProfile::CounterStreams { v0 }),
            other => Err(NufiError::Config(format!("unknown velocity profile '{other}'"))),
        }
    }

    fn stream_axis(d: usize) -> usize {
        if d >= 2 {
            1
        } else {
            0
        }
    }
}

/// Initial distribution `f0` with its parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct InitialCondition {
    pub benchmark: Benchmark,
    pub d: usize,
    pub alpha: f64,
    pub k: f64,
    pub profile: VelocityProfile,
}

impl InitialCondition {
    /// Built-in benchmark with its default parameters.
    pub fn builtin(benchmark: Benchmark) -> Result<Self> {
        let def = benchmark.defaults().ok_or_else(|| {
            NufiError::Usage("custom benchmark has no defaults; use InitialCondition::new".into())
        })?;
        Self::new(benchmark, def.d, def.alpha, def.k, def.profile)
    }

    pub fn new(
        benchmark: Benchmark,
        d: usize,
        alpha: f64,
        k: f64,
        profile: VelocityProfile,
    ) -> Result<Self> {
        if !(1..=3).contains(&d) {
            return Err(NufiError::Config(format!("dimension must be 1, 2 or 3, got {d}")));
        }
        if !(alpha >= 0.0 && alpha.is_finite()) {
            return Err(NufiError::Config(format!("alpha must be >= 0, got {alpha}")));
        }
        if !k.is_finite() {
            return Err(NufiError::Config(format!("wavenumber must be finite, got {k}")));
        }
        Ok(Self {
            benchmark,
            d,
            alpha,
            k,
            profile,
        })
    }

    /// Checks `k L` is a whole number of periods so `f0` is periodic on the box.
    pub fn check_grid(&self, grid: &GridSpec) -> Result<()> {
        if grid.dim() != self.d {
            return Err(NufiError::Config(format!(
                "benchmark {} is {}-dimensional but grid has d={}",
                self.benchmark,
                self.d,
                grid.dim()
            )));
        }
        if self.alpha > 0.0 {
            let periods = self.k * grid.box_length() / (2.0 * PI);
            if (periods - periods.round()).abs() > 1e-9 * periods.abs().max(1.0) {
                return Err(NufiError::Config(format!(
                    "k*L = {} is not a multiple of 2*pi; f0 would not be periodic",
                    self.k * grid.box_length()
                )));
            }
        }
        Ok(())
    }

    /// Evaluates `f0(x, v)`. Slices must have length `d`.
    #[inline]
    pub fn eval<T: Real>(&self, x: &[T], v: &[T]) -> T {
        self.spatial_factor(x) * self.velocity_factor(v)
    }

    #[inline]
    fn spatial_factor<T: Real>(&self, x: &[T]) -> T {
        if self.alpha == 0.0 {
            return T::one();
        }
        let k = T::of(self.k);
        let s = x.iter().fold(T::zero(), |acc, &xa| acc + (k * xa).cos());
        T::one() + T::of(self.alpha) * s
    }

    #[inline]
    fn velocity_factor<T: Real>(&self, v: &[T]) -> T {
        let half = T::of(0.5);
        match self.profile {
            VelocityProfile::Maxwellian => {
                let v2 = v.iter().fold(T::zero(), |acc, &c| acc + c * c);
                T::of(maxwellian_norm(self.d)) * (-half * v2).exp()
            }
            VelocityProfile::SquaredMaxwellian => {
                let v2 = v.iter().fold(T::zero(), |acc, &c| acc + c * c);
                T::of(maxwellian_norm(self.d)) * v[0] * v[0] * (-half * v2).exp()
            }
            VelocityProfile::CounterStreams { v0 } => {
                let axis = VelocityProfile::stream_axis(self.d);
                let v0 = T::of(v0);
                let mut rest = T::zero();
                for (a, &c) in v.iter().enumerate() {
                    if a != axis {
                        rest = rest + c * c;
                    }
                }
                let s = v[axis];
                let beams = (-half * (s - v0) * (s - v0)).exp() + (-half * (s + v0) * (s + v0)).exp();
                T::of(0.5 * maxwellian_norm(self.d)) * beams * (-half * rest).exp()
            }
        }
    }

    /// Evaluates `f0` at a point given as separate vectors of `f64`.
    pub fn eval_f0(&self, x: &[f64], v: &[f64]) -> Result<f64> {
        if x.len() != self.d || v.len() != self.d {
            return Err(NufiError::Usage(format!(
                "phase point has dimension ({}, {}), benchmark needs {}",
                x.len(),
                v.len(),
                self.d
            )));
        }
        if !x.iter().chain(v).all(|c| c.is_finite()) {
            return Err(NufiError::Usage("phase point has non-finite components".into()));
        }
        Ok(self.eval(x, v))
    }

    /// `sup f0` over phase space.
    pub fn sup(&self) -> f64 {
        let spatial = 1.0 + self.alpha * self.d as f64;
        let norm = maxwellian_norm(self.d);
        let velocity = match self.profile {
            VelocityProfile::Maxwellian => norm,
            // v^2 exp(-v^2/2) peaks at v^2 = 2.
            VelocityProfile::SquaredMaxwellian => norm * 2.0 * (-1.0f64).exp(),
            VelocityProfile::CounterStreams { v0 } => 0.5 * norm * beam_pair_max(v0),
        };
        spatial * velocity
    }

    /// Neutralizing background density: `(1/L^d)` times the phase-space
    /// midpoint quadrature of `f0` on `grid`.
    pub fn background_density(&self, grid: &GridSpec) -> Result<f64> {
        if grid.dim() != self.d {
            return Err(NufiError::Usage(format!(
                "grid dimension {} does not match benchmark dimension {}",
                grid.dim(),
                self.d
            )));
        }
        let (nx, nv) = (grid.nx(), grid.nv());
        let d = self.d;
        // f0 is separable: spatial factor times velocity factor.
        let mut spatial = Vec::with_capacity(grid.n_nodes());
        let mut x = vec![0.0; d];
        for lin in 0..grid.n_nodes() {
            let mut r = lin;
            for a in (0..d).rev() {
                x[a] = (r % nx) as f64 * grid.hx();
                r /= nx;
            }
            spatial.push(self.spatial_factor(&x));
        }
        let mut velocity = Vec::with_capacity(grid.n_velocities());
        let mut v = vec![0.0; d];
        for lin in 0..grid.n_velocities() {
            let mut r = lin;
            for a in (0..d).rev() {
                v[a] = -grid.vmax() + ((r % nv) as f64 + 0.5) * grid.hv();
                r /= nv;
            }
            velocity.push(self.velocity_factor(&v));
        }
        let sx = crate::density::pairwise_sum(&spatial) * grid.hx().powi(d as i32);
        let sv = crate::density::pairwise_sum(&velocity) * grid.hv().powi(d as i32);
        Ok(sx * sv / grid.box_length().powi(d as i32))
    }
}

fn maxwellian_norm(d: usize) -> f64 {
    (2.0 * PI).powf(-(d as f64) / 2.0)
}

/// Maximum over `s` of `exp(-(s-v0)^2/2) + exp(-(s+v0)^2/2)`, evaluated by
/// the same expression as `f0` at the maximizer.
fn beam_pair_max(v0: f64) -> f64 {
    let g = |s: f64| (-0.5 * (s - v0) * (s - v0)).exp() + (-0.5 * (s + v0) * (s + v0)).exp();
    let v0 = v0.abs();
    // Coarse scan then golden-section refinement; g is even so s >= 0 suffices.
    let hi = v0 + 2.0;
    let samples = 4000;
    let mut best = 0.0;
    let mut best_g = g(0.0);
    for i in 1..=samples {
        let s = hi * i as f64 / samples as f64;
        let gs = g(s);
        if gs > best_g {
            best_g = gs;
            best = s;
        }
    }
    let step = hi / samples as f64;
    let (mut a, mut b) = ((best - step).max(0.0), best + step);
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..200 {
        let c = b - phi * (b - a);
        let e = a + phi * (b - a);
        if g(c) > g(e) {
            b = e;
        } else {
            a = c;
        }
    }
    let s = 0.5 * (a + b);
    // Rounding can make a neighbouring float evaluate higher; take the max
    // over a few ulps either side.
    let mut m = best_g.max(g(s));
    let mut lo = s;
    let mut up = s;
    for _ in 0..64 {
        lo = f64::from_bits(lo.to_bits() - 1);
        up = f64::from_bits(up.to_bits() + 1);
        m = m.max(g(lo)).max(g(up));
    }
    m
}
