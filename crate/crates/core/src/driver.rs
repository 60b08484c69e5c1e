//! The time loop, snapshot sampling, run comparison and output writers.

use std::fmt;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::time::Instant;

use crate::config::RunConfig;
use crate::density::compute_rho;
use crate::diagnostics::{conserved_quantities, DiagnosticsRecord, EnergySeries, FieldDiagnostics};
use crate::error::{NufiError, Result};
use crate::flow::FlowContext;
use crate::grid::{GridSpec, PhasePoint, Precision, Real};
use crate::initial::InitialCondition;
use crate::poisson::{electric_energy, PoissonSolver};
use crate::spline::{PotentialHistory, SplineField};

/// Per-step bookkeeping of the time loop.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRecord {
    pub step: usize,
    pub t: f64,
    pub electric_energy: f64,
    pub neutralization: f64,
    /// Field evaluations spent computing the density of this step.
    pub field_evals: u64,
    /// Wall-clock seconds for density, Poisson solve and spline fit.
    pub seconds: f64,
    /// Range of `f` samples taken by the density sweep.
    pub min_f: f64,
    pub max_f: f64,
}

/// Complete state of a finished (or in-progress) run.
#[derive(Debug, Clone)]
pub struct RunState<T, const D: usize> {
    pub config: RunConfig,
    pub ic: InitialCondition,
    pub history: PotentialHistory<T, D>,
    pub steps: Vec<StepRecord>,
    pub diagnostics: Vec<DiagnosticsRecord>,
    /// Field evaluations spent in diagnostic sweeps.
    pub diagnostic_field_evals: u64,
    /// Wall-clock seconds spent in diagnostic sweeps.
    pub diagnostic_seconds: f64,
    pub snapshots: Vec<Snapshot>,
}

impl<T: Real, const D: usize> RunState<T, D> {
    pub fn context(&self) -> Result<FlowContext<'_, T, D>> {
        FlowContext::new(&self.history, &self.ic)
    }

    /// Completed steps so far (`history.len() - 1`).
    pub fn steps_done(&self) -> usize {
        self.history.len().saturating_sub(1)
    }

    pub fn energy_series(&self) -> EnergySeries {
        EnergySeries::from_points(self.steps.iter().map(|s| (s.t, s.electric_energy)).collect())
            .expect("step times increase")
    }

    /// Smallest and largest `f` sampled anywhere during the run.
    pub fn sampled_range(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for s in &self.steps {
            lo = lo.min(s.min_f);
            hi = hi.max(s.max_f);
        }
        for r in &self.diagnostics {
            lo = lo.min(r.fmin_observed);
            hi = hi.max(r.linf_observed);
        }
        for s in &self.snapshots {
            lo = lo.min(s.min());
            hi = hi.max(s.max());
        }
        (lo, hi)
    }

    pub fn total_step_seconds(&self) -> f64 {
        self.steps.iter().map(|s| s.seconds).sum()
    }

    /// Field evaluations of all density sweeps.
    pub fn rho_field_evals(&self) -> u64 {
        self.steps.iter().map(|s| s.field_evals).sum()
    }

    /// `E` at the nodes of `grid` from the field stored for `step`,
    /// component-major: `out[a * n_nodes + i]`.
    pub fn nodal_field(&self, step: usize, grid: &GridSpec) -> Result<Vec<f64>> {
        grid.check_dim::<D>()?;
        let field = self.history.get(step).ok_or(NufiError::InsufficientHistory {
            needed: step + 1,
            available: self.history.len(),
        })?;
        let n = grid.n_nodes();
        let mut out = vec![0.0; D * n];
        for i in 0..n {
            let e = field.eval_e(&grid.node_position::<T, D>(i));
            for a in 0..D {
                out[a * n + i] = e[a].as_f64();
            }
        }
        Ok(out)
    }

    /// Samples `f(n tau, .)` on an `R x R` raster over a 2D phase-space slice.
    pub fn sample_snapshot(&self, step: usize, slice: &SliceSpec, resolution: usize) -> Result<Snapshot> {
        let ctx = self.context()?;
        sample_snapshot(&ctx, &self.config.grid, step, slice, resolution)
    }

    /// Writes every output the config asks for into `dir`.
    pub fn write_outputs(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        write_diagnostics_csv(&dir.join("diagnostics.csv"), D, &self.diagnostics)?;
        let mut w = BufWriter::new(fs::File::create(dir.join("energy.csv"))?);
        writeln!(w, "step,t,electric_energy,neutralization,field_evals,seconds")?;
        for s in &self.steps {
            writeln!(
                w,
                "{},{:e},{:e},{:e},{},{:e}",
                s.step, s.t, s.electric_energy, s.neutralization, s.field_evals, s.seconds
            )?;
        }
        w.flush()?;
        let sup = self.ic.sup();
        for snap in &self.snapshots {
            snap.write_csv(&dir.join(format!("snapshot_{:06}.csv", snap.step)))?;
            snap.write_pgm(&dir.join(format!("snapshot_{:06}.pgm", snap.step)), sup)?;
        }
        if self.config.checkpoint {
            self.history.write_checkpoint(&dir.join("history.bin"))?;
        }
        Ok(())
    }
}

/// Diagnostics CSV with one row per record.
pub fn write_diagnostics_csv(path: &Path, d: usize, records: &[DiagnosticsRecord]) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    writeln!(w, "{}", DiagnosticsRecord::csv_header(d))?;
    for r in records {
        writeln!(w, "{}", r.csv_row())?;
    }
    w.flush()?;
    Ok(())
}

/// Full diagnostics at step `n` from a history holding at least fields `0..=n`.
///
/// Recomputes the density and Poisson solve of step `n` exactly as the time
/// loop does, so a reloaded checkpoint reproduces the run's records.
pub fn recompute_diagnostics<T: Real, const D: usize>(
    ctx: &FlowContext<'_, T, D>,
    grid: &GridSpec,
    n: usize,
) -> Result<DiagnosticsRecord> {
    let rho = compute_rho(ctx, n, grid)?;
    let sol = PoissonSolver::new(grid).solve(&rho.rho)?;
    let field = FieldDiagnostics {
        electric_energy: electric_energy(&sol.spectrum),
        neutralization: rho.neutralization,
    };
    Ok(conserved_quantities(ctx, n, grid, field)?.0)
}

/// Runs the configured simulation in memory; nothing is written to disk.
pub fn run_simulation<T: Real, const D: usize>(config: &RunConfig) -> Result<RunState<T, D>> {
    run_simulation_with(config, |_| Ok(()))
}

/// As [`run_simulation`], calling `observer` after every completed step.
pub fn run_simulation_with<T: Real, const D: usize, F>(
    config: &RunConfig,
    mut observer: F,
) -> Result<RunState<T, D>>
where
    F: FnMut(&RunState<T, D>) -> Result<()>,
{
    config.validate()?;
    let grid = &config.grid;
    grid.check_dim::<D>()?;
    let solver = PoissonSolver::new(grid);
    let mut state = RunState {
        config: config.clone(),
        ic: config.initial.clone(),
        history: PotentialHistory::new(grid, config.tau)?,
        steps: Vec::with_capacity(config.n_steps + 1),
        diagnostics: Vec::new(),
        diagnostic_field_evals: 0,
        diagnostic_seconds: 0.0,
        snapshots: Vec::new(),
    };
    let default_slice = SliceSpec::default_for(D);
    for n in 0..=config.n_steps {
        let start = Instant::now();
        let ctx = FlowContext::new(&state.history, &state.ic)?;
        let rho = compute_rho(&ctx, n, grid)?;
        let sol = solver.solve(&rho.rho)?;
        let energy = electric_energy(&sol.spectrum);
        let field = SplineField::<T, D>::fit(&sol.phi_nodes, grid)?;
        state.history.push(field)?;
        state.steps.push(StepRecord {
            step: n,
            t: n as f64 * config.tau,
            electric_energy: energy,
            neutralization: rho.neutralization,
            field_evals: rho.field_evals,
            seconds: start.elapsed().as_secs_f64(),
            min_f: rho.min_f,
            max_f: rho.max_f,
        });

        if n % config.diagnostics_cadence == 0 || n == config.n_steps {
            let start = Instant::now();
            let ctx = FlowContext::new(&state.history, &state.ic)?;
            let field = FieldDiagnostics {
                electric_energy: energy,
                neutralization: rho.neutralization,
            };
            let (record, evals) = conserved_quantities(&ctx, n, grid, field)?;
            state.diagnostics.push(record);
            state.diagnostic_field_evals += evals;
            state.diagnostic_seconds += start.elapsed().as_secs_f64();
        }
        if config.snapshot_steps.contains(&n) {
            let ctx = FlowContext::new(&state.history, &state.ic)?;
            let snap = sample_snapshot(&ctx, grid, n, &default_slice, config.snapshot_resolution)?;
            state.snapshots.push(snap);
        }
        observer(&state)?;
    }
    Ok(state)
}

/// A phase-space coordinate: `X(a)` or `V(a)`, zero-based axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Coord {
    X(usize),
    V(usize),
}

impl Coord {
    pub fn parse(s: &str) -> Result<Self> {
        let bad = || NufiError::Usage(format!("invalid phase-space coordinate '{s}' (use x1, v2, ...)"));
        let s = s.trim();
        let (kind, axis) = s.split_at(s.len().min(1));
        let axis: usize = axis.parse().map_err(|_| bad())?;
        if axis == 0 {
            return Err(bad());
        }
        match kind {
            "x" => Ok(Coord::X(axis - 1)),
            "v" => Ok(Coord::V(axis - 1)),
            _ => Err(bad()),
        }
    }

    fn axis(self) -> usize {
        match self {
            Coord::X(a) | Coord::V(a) => a,
        }
    }
}

impl fmt::Display for Coord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Coord::X(a) => write!(f, "x{}", a + 1),
            Coord::V(a) => write!(f, "v{}", a + 1),
        }
    }
}

/// A 2D slice through phase space: two free coordinates, the rest fixed.
/// Coordinates neither free nor listed in `fixed` are held at 0.
#[derive(Debug, Clone, PartialEq)]
pub struct SliceSpec {
    pub horizontal: Coord,
    pub vertical: Coord,
    pub fixed: Vec<(Coord, f64)>,
}

impl SliceSpec {
    /// The `(x1, v1)` plane.
    pub fn default_for(_d: usize) -> Self {
        Self {
            horizontal: Coord::X(0),
            vertical: Coord::V(0),
            fixed: Vec::new(),
        }
    }

    /// Parses `"x1,v1"` plus `"x2=0.5"`-style fixes.
    pub fn parse(free: &str, fixes: &[String]) -> Result<Self> {
        let parts: Vec<&str> = free.split(',').collect();
        if parts.len() != 2 {
            return Err(NufiError::Usage(format!(
                "slice needs exactly two free coordinates, got '{free}'"
            )));
        }
        let mut fixed = Vec::new();
        for f in fixes {
            let (c, v) = f
                .split_once('=')
                .ok_or_else(|| NufiError::Usage(format!("invalid fix '{f}' (use x2=0.5)")))?;
            let value: f64 = v
                .trim()
                .parse()
                .map_err(|_| NufiError::Usage(format!("invalid value in fix '{f}'")))?;
            fixed.push((Coord::parse(c)?, value));
        }
        Ok(Self {
            horizontal: Coord::parse(parts[0])?,
            vertical: Coord::parse(parts[1])?,
            fixed,
        })
    }

    pub fn validate(&self, d: usize) -> Result<()> {
        let all = [self.horizontal, self.vertical]
            .into_iter()
            .chain(self.fixed.iter().map(|f| f.0));
        let mut seen = Vec::new();
        for c in all {
            if c.axis() >= d {
                return Err(NufiError::Usage(format!("coordinate {c} does not exist for d = {d}")));
            }
            if seen.contains(&c) {
                return Err(NufiError::Usage(format!("coordinate {c} used twice in slice")));
            }
            seen.push(c);
        }
        if self.fixed.iter().any(|f| !f.1.is_finite()) {
            return Err(NufiError::Usage("fixed slice values must be finite".into()));
        }
        Ok(())
    }
}

/// An `R x R` raster of `f`. `values[r * R + c]`: column `c` runs along the
/// horizontal coordinate, row `r` along the vertical one, both ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub step: usize,
    pub t: f64,
    pub resolution: usize,
    pub slice: SliceSpec,
    pub values: Vec<f64>,
}

impl Snapshot {
    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Plain matrix, one raster row per line.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(fs::File::create(path)?);
        for row in self.values.chunks(self.resolution) {
            let line: Vec<String> = row.iter().map(|v| format!("{v:e}")).collect();
            writeln!(w, "{}", line.join(","))?;
        }
        w.flush()?;
        Ok(())
    }

    /// Binary 8-bit graymap scaled to `[0, sup]`, largest vertical coordinate on top.
    pub fn write_pgm(&self, path: &Path, sup: f64) -> Result<()> {
        let r = self.resolution;
        let mut w = BufWriter::new(fs::File::create(path)?);
        write!(w, "P5\n{r} {r}\n255\n")?;
        let mut bytes = Vec::with_capacity(r * r);
        for row in self.values.chunks(r).rev() {
            bytes.extend(row.iter().map(|&v| (255.0 * v / sup).round().clamp(0.0, 255.0) as u8));
        }
        w.write_all(&bytes)?;
        w.flush()?;
        Ok(())
    }
}

/// Samples `f(n tau, .)` at the cell centres of an `R x R` raster over the
/// slice window (`[0, L]` for positions, `[-vmax, vmax]` for velocities).
pub fn sample_snapshot<T: Real, const D: usize>(
    ctx: &FlowContext<'_, T, D>,
    grid: &GridSpec,
    n: usize,
    slice: &SliceSpec,
    resolution: usize,
) -> Result<Snapshot> {
    use rayon::prelude::*;

    slice.validate(D)?;
    grid.check_dim::<D>()?;
    if resolution == 0 {
        return Err(NufiError::Usage("snapshot resolution must be >= 1".into()));
    }
    ctx.psi(n, PhasePoint::new([T::zero(); D], [T::zero(); D]))?;
    let mut base = PhasePoint::new([T::zero(); D], [T::zero(); D]);
    for &(c, value) in &slice.fixed {
        set(&mut base, c, T::of(value));
    }
    let window = |c: Coord, i: usize| -> T {
        let frac = (i as f64 + 0.5) / resolution as f64;
        T::of(match c {
            Coord::X(_) => frac * grid.box_length(),
            Coord::V(_) => -grid.vmax() + frac * 2.0 * grid.vmax(),
        })
    };
    let values = (0..resolution * resolution)
        .into_par_iter()
        .map(|lin| {
            let (r, c) = (lin / resolution, lin % resolution);
            let mut p = base;
            set(&mut p, slice.horizontal, window(slice.horizontal, c));
            set(&mut p, slice.vertical, window(slice.vertical, r));
            let mut evals = 0;
            ctx.f_unchecked(n, p, &mut evals).as_f64()
        })
        .collect();
    Ok(Snapshot {
        step: n,
        t: n as f64 * ctx.history.tau(),
        resolution,
        slice: slice.clone(),
        values,
    })
}

fn set<T: Real, const D: usize>(p: &mut PhasePoint<T, D>, c: Coord, value: T) {
    match c {
        Coord::X(a) => p.x[a] = value,
        Coord::V(a) => p.v[a] = value,
    }
}

/// Field difference between two runs at one shared time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompareRow {
    pub t: f64,
    /// `||E_a - E_b||_2 / ||E_b||_2` over the coarser grid's nodes.
    pub rel_l2: f64,
    /// `max |E_a - E_b| / max |E_b|`.
    pub rel_linf: f64,
}

/// Relative nodal field errors of run `a` against reference run `b` at every
/// time both runs reach, evaluated on the coarser of the two spatial grids.
pub fn compare_states<Ta: Real, Tb: Real, const D: usize>(
    a: &RunState<Ta, D>,
    b: &RunState<Tb, D>,
) -> Result<Vec<CompareRow>> {
    compare_outputs(a, b)
}

fn relative(diff: f64, reference: f64) -> f64 {
    if diff == 0.0 {
        0.0
    } else {
        diff / reference
    }
}

/// History memory and field-evaluation cost of a configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BudgetReport {
    pub d: usize,
    pub nx: usize,
    pub nv: usize,
    pub n_steps: usize,
    pub precision: Precision,
    /// `Nx^d * bytes`: one stored field.
    pub bytes_per_step: u64,
    /// `(n + 1) Nx^d * bytes`: the whole history after `n` steps.
    pub history_bytes: u64,
    /// What storing `f` on the phase-space grid would take.
    pub f_grid_bytes: u64,
    /// `Nx^d Nv^d sum_{k=1..n} (k + 1)`: evaluating `f` through the full flow every step.
    pub full_flow_evals: u128,
    /// `Nx^d Nv^d sum_{k=1..n} k`: the density sweeps of the time loop.
    pub density_evals: u128,
}

pub fn report_budget(config: &RunConfig) -> BudgetReport {
    let g = &config.grid;
    let bytes = config.precision.bytes() as u64;
    let nodes = g.n_nodes() as u64;
    let points = nodes as u128 * g.n_velocities() as u128;
    let n = config.n_steps as u128;
    let sum_k = n * (n + 1) / 2;
    BudgetReport {
        d: g.dim(),
        nx: g.nx(),
        nv: g.nv(),
        n_steps: config.n_steps,
        precision: config.precision,
        bytes_per_step: nodes * bytes,
        history_bytes: (config.n_steps as u64 + 1) * nodes * bytes,
        f_grid_bytes: points as u64 * bytes,
        full_flow_evals: points * (sum_k + n),
        density_evals: points * sum_k,
    }
}

/// Bytes in the largest binary unit that keeps the value at least 1.
pub fn format_bytes(bytes: u64) -> String {
    const UNITS: [&str; 5] = ["B", "KiB", "MiB", "GiB", "TiB"];
    let mut value = bytes as f64;
    let mut unit = 0;
    while value >= 1024.0 && unit + 1 < UNITS.len() {
        value /= 1024.0;
        unit += 1;
    }
    format!("{value} {}", UNITS[unit])
}

/// Like [`format_bytes`] but in a fixed unit, e.g. `0.125 MiB`.
pub fn format_bytes_in(bytes: u64, unit: &str) -> String {
    let shift = match unit {
        "KiB" => 10,
        "MiB" => 20,
        "GiB" => 30,
        "TiB" => 40,
        _ => 0,
    };
    format!("{} {unit}", bytes as f64 / (1u64 << shift) as f64)
}

impl fmt::Display for BudgetReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let width = match self.precision {
            Precision::Single => "single",
            Precision::Double => "double",
        };
        writeln!(
            f,
            "grid: d={} Nx={} Nv={} steps={} precision={width}",
            self.d, self.nx, self.nv, self.n_steps
        )?;
        writeln!(
            f,
            "history per step: {} bytes ({}, {})",
            self.bytes_per_step,
            format_bytes_in(self.bytes_per_step, "MiB"),
            format_bytes_in(self.bytes_per_step, "GiB")
        )?;
        writeln!(
            f,
            "history after {} steps: {} bytes ({})",
            self.n_steps,
            self.history_bytes,
            format_bytes(self.history_bytes)
        )?;
        writeln!(
            f,
            "f on the phase-space grid: {} bytes ({})",
            self.f_grid_bytes,
            format_bytes(self.f_grid_bytes)
        )?;
        writeln!(f, "field evaluations, full flow every step: {}", self.full_flow_evals)?;
        write!(f, "field evaluations, density sweeps: {}", self.density_evals)
    }
}

/// Type-erased finished run, for callers that pick precision and dimension
/// at run time.
pub trait RunOutput {
    fn config(&self) -> &RunConfig;
    fn steps(&self) -> &[StepRecord];
    fn diagnostics(&self) -> &[DiagnosticsRecord];
    fn sampled_range(&self) -> (f64, f64);
    fn write_outputs(&self, dir: &Path) -> Result<()>;
    fn history_len(&self) -> usize;
    /// See [`RunState::nodal_field`].
    fn nodal_field(&self, step: usize, grid: &GridSpec) -> Result<Vec<f64>>;
}

impl<T: Real, const D: usize> RunOutput for RunState<T, D> {
    fn config(&self) -> &RunConfig {
        &self.config
    }

    fn steps(&self) -> &[StepRecord] {
        &self.steps
    }

    fn diagnostics(&self) -> &[DiagnosticsRecord] {
        &self.diagnostics
    }

    fn sampled_range(&self) -> (f64, f64) {
        RunState::sampled_range(self)
    }

    fn write_outputs(&self, dir: &Path) -> Result<()> {
        RunState::write_outputs(self, dir)
    }

    fn history_len(&self) -> usize {
        self.history.len()
    }

    fn nodal_field(&self, step: usize, grid: &GridSpec) -> Result<Vec<f64>> {
        RunState::nodal_field(self, step, grid)
    }
}

/// Runs `config` at its configured precision and dimension.
pub fn run(config: &RunConfig) -> Result<Box<dyn RunOutput>> {
    Ok(match (config.precision, config.grid.dim()) {
        (Precision::Double, 1) => Box::new(run_simulation::<f64, 1>(config)?),
        (Precision::Double, 2) => Box::new(run_simulation::<f64, 2>(config)?),
        (Precision::Double, 3) => Box::new(run_simulation::<f64, 3>(config)?),
        (Precision::Single, 1) => Box::new(run_simulation::<f32, 1>(config)?),
        (Precision::Single, 2) => Box::new(run_simulation::<f32, 2>(config)?),
        (Precision::Single, 3) => Box::new(run_simulation::<f32, 3>(config)?),
        (_, d) => return Err(NufiError::Config(format!("unsupported dimension {d}"))),
    })
}

/// Runs both configurations and compares `a` against the reference `b`.
pub fn run_compare(a: &RunConfig, b: &RunConfig) -> Result<Vec<CompareRow>> {
    if a.initial != b.initial {
        return Err(NufiError::Usage("compared configs use different benchmarks".into()));
    }
    let ra = run(a)?;
    let rb = run(b)?;
    compare_outputs(ra.as_ref(), rb.as_ref())
}

/// [`compare_states`] for type-erased runs.
pub fn compare_outputs(a: &dyn RunOutput, b: &dyn RunOutput) -> Result<Vec<CompareRow>> {
    let (ca, cb) = (a.config(), b.config());
    if ca.initial != cb.initial || ca.grid.box_length() != cb.grid.box_length() {
        return Err(NufiError::Usage("compared runs use different benchmarks".into()));
    }
    let ratio = ca.tau / cb.tau;
    if ratio < 1.0 - 1e-12 || (ratio - ratio.round()).abs() > 1e-9 * ratio {
        return Err(NufiError::Usage(format!(
            "time step of the first run ({}) must be an integer multiple of the second ({})",
            ca.tau, cb.tau
        )));
    }
    let ratio = ratio.round() as usize;
    let coarse = if ca.grid.nx() <= cb.grid.nx() { &ca.grid } else { &cb.grid };
    let mut rows = Vec::new();
    for n in 0..a.history_len() {
        let m = n * ratio;
        if m >= b.history_len() {
            break;
        }
        rows.push(compare_fields(
            n as f64 * ca.tau,
            &a.nodal_field(n, coarse)?,
            &b.nodal_field(m, coarse)?,
        ));
    }
    Ok(rows)
}

fn compare_fields(t: f64, ea: &[f64], eb: &[f64]) -> CompareRow {
    let mut diff2 = 0.0;
    let mut ref2 = 0.0;
    let mut diff_max: f64 = 0.0;
    let mut ref_max: f64 = 0.0;
    for (x, y) in ea.iter().zip(eb) {
        diff2 += (x - y) * (x - y);
        ref2 += y * y;
        diff_max = diff_max.max((x - y).abs());
        ref_max = ref_max.max(y.abs());
    }
    CompareRow {
        t,
        rel_l2: relative(diff2.sqrt(), ref2.sqrt()),
        rel_linf: relative(diff_max, ref_max),
    }
}
