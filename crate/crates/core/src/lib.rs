//! Numerical flow iteration for the periodic Vlasov-Poisson system.
//!
//! The distribution function is never stored. Each time step stores one
//! cubic spline of the electric potential; `f(n tau, x, v)` is recovered on
//! demand as `f0` composed with a backward Stormer-Verlet flow through that
//! history. Charge density comes from midpoint quadrature over velocity,
//! the potential from a spectral Poisson solve.

pub mod config;
pub mod density;
pub mod diagnostics;
pub mod driver;
pub mod error;
pub mod flow;
pub mod grid;
pub mod initial;
pub mod poisson;
pub mod spline;

pub use config::RunConfig;
pub use diagnostics::{fit_damping_rate, DiagnosticsRecord, EnergySeries};
pub use driver::{report_budget, run, run_compare, run_simulation, RunOutput, RunState, SliceSpec, Snapshot};
pub use error::{NufiError, Result};
pub use flow::FlowContext;
pub use grid::{GridSpec, PhasePoint, Precision, Real};
pub use initial::{Benchmark, InitialCondition, VelocityProfile};
pub use poisson::{DensityGrid, PoissonSolver, SpectralField};
pub use spline::{PotentialHistory, SplineField};
