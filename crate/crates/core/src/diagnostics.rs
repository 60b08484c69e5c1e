//! Conserved and tracked quantities, and the damping-rate estimator.

use crate::error::{NufiError, Result};
use crate::density::quadrature_sweep;
use crate::flow::FlowContext;
use crate::grid::{GridSpec, Real};

/// Quantities tracked at one diagnostic step.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticsRecord {
    pub step: usize,
    pub t: f64,
    pub electric_energy: f64,
    pub kinetic_energy: f64,
    /// Always `kinetic_energy + electric_energy`.
    pub total_energy: f64,
    pub l1_norm: f64,
    pub l2_norm: f64,
    /// Largest sampled `f`; an underestimate of the true supremum.
    pub linf_observed: f64,
    /// Smallest sampled `f`.
    pub fmin_observed: f64,
    /// `int f ln f`, with `0 ln 0 = 0`.
    pub entropy: f64,
    pub momentum: Vec<f64>,
    pub neutralization_constant: f64,
}

impl DiagnosticsRecord {
    /// CSV header for a `d`-dimensional run.
    pub fn csv_header(d: usize) -> String {
        let mut h = String::from("step,t,electric_energy,kinetic_energy,total_energy,l1,l2,linf,entropy");
        for a in 1..=d {
            h.push_str(&format!(",momentum_{a}"));
        }
        h.push_str(",neutralization");
        h
    }

    pub fn csv_row(&self) -> String {
        let mut row = format!(
            "{},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e}",
            self.step,
            self.t,
            self.electric_energy,
            self.kinetic_energy,
            self.total_energy,
            self.l1_norm,
            self.l2_norm,
            self.linf_observed,
            self.entropy
        );
        for m in &self.momentum {
            row.push_str(&format!(",{m:e}"));
        }
        row.push_str(&format!(",{:e}", self.neutralization_constant));
        row
    }
}

/// Field-side inputs of a record, produced by the Poisson solve of the step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldDiagnostics {
    pub electric_energy: f64,
    pub neutralization: f64,
}

/// Sweeps the phase-space grid at step `n` (field `n` must be stored).
/// Returns the record and the number of field evaluations spent.
pub fn conserved_quantities<T: Real, const D: usize>(
    ctx: &FlowContext<'_, T, D>,
    n: usize,
    grid: &GridSpec,
    field: FieldDiagnostics,
) -> Result<(DiagnosticsRecord, u64)> {
    // Slots: l1, l2^2, entropy, kinetic, momentum (up to 3).
    let sweep = quadrature_sweep::<T, D, 7, _>(ctx, n, grid, |p, f| {
        let v2: f64 = p.v.iter().map(|c| c * c).sum();
        let entropy = if f > 0.0 { f * f.ln() } else { 0.0 };
        let mut out = [f, f * f, entropy, 0.5 * v2 * f, 0.0, 0.0, 0.0];
        for (a, &va) in p.v.iter().enumerate() {
            out[4 + a] = va * f;
        }
        out
    })?;
    let s = sweep.integrals;
    let record = DiagnosticsRecord {
        step: n,
        t: n as f64 * ctx.history.tau(),
        electric_energy: field.electric_energy,
        kinetic_energy: s[3],
        total_energy: s[3] + field.electric_energy,
        l1_norm: s[0],
        l2_norm: s[1].sqrt(),
        linf_observed: sweep.max_f,
        fmin_observed: sweep.min_f,
        entropy: s[2],
        momentum: s[4..4 + D].to_vec(),
        neutralization_constant: field.neutralization,
    };
    Ok((record, sweep.field_evals))
}

/// Electric energy over time.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EnergySeries {
    points: Vec<(f64, f64)>,
}

impl EnergySeries {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_points(points: Vec<(f64, f64)>) -> Result<Self> {
        let mut s = Self::new();
        for (t, e) in points {
            s.push(t, e)?;
        }
        Ok(s)
    }

    pub fn push(&mut self, t: f64, energy: f64) -> Result<()> {
        if let Some(&(last, _)) = self.points.last() {
            if t <= last {
                return Err(NufiError::Usage(format!(
                    "energy series times must increase strictly ({t} after {last})"
                )));
            }
        }
        self.points.push((t, energy));
        Ok(())
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Local maxima inside `[t_lo, t_hi]`: strictly above the previous
    /// sample and not below the next one (a tie goes to the earlier sample).
    pub fn peaks(&self, t_lo: f64, t_hi: f64) -> Vec<(f64, f64)> {
        let p = &self.points;
        (1..p.len().saturating_sub(1))
            .filter(|&i| p[i].0 >= t_lo && p[i].0 <= t_hi)
            .filter(|&i| p[i].1 > p[i - 1].1 && p[i].1 >= p[i + 1].1)
            .map(|i| p[i])
            .collect()
    }
}

/// Least-squares line `y = slope t + intercept` with the slope's standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_stderr: f64,
}

pub fn linear_fit(ts: &[f64], ys: &[f64]) -> Result<LinearFit> {
    let n = ts.len();
    if n < 2 || ys.len() != n {
        return Err(NufiError::Usage("linear fit needs at least two points".into()));
    }
    let nf = n as f64;
    let tm = ts.iter().sum::<f64>() / nf;
    let ym = ys.iter().sum::<f64>() / nf;
    let stt: f64 = ts.iter().map(|t| (t - tm) * (t - tm)).sum();
    if stt == 0.0 {
        return Err(NufiError::Usage("linear fit needs distinct abscissae".into()));
    }
    let sty: f64 = ts.iter().zip(ys).map(|(t, y)| (t - tm) * (y - ym)).sum();
    let slope = sty / stt;
    let intercept = ym - slope * tm;
    let slope_stderr = if n > 2 {
        let rss: f64 = ts
            .iter()
            .zip(ys)
            .map(|(t, y)| {
                let r = y - (slope * t + intercept);
                r * r
            })
            .sum();
        (rss / (nf - 2.0) / stt).sqrt()
    } else {
        f64::INFINITY
    };
    Ok(LinearFit {
        slope,
        intercept,
        slope_stderr,
    })
}

/// Decay rate of the electric energy: the negated slope of the least-squares
/// line through `(t_peak, ln E_peak)` over the local maxima in the window.
pub fn fit_damping_rate(series: &EnergySeries, window: (f64, f64)) -> Result<f64> {
    let (lo, hi) = window;
    let inside: Vec<f64> = series
        .points()
        .iter()
        .filter(|(t, _)| *t >= lo && *t <= hi)
        .map(|&(_, e)| e)
        .collect();
    // A flat trace has no strict maxima but its decay rate is zero.
    if inside.len() >= 3 && inside.iter().all(|&e| e == inside[0]) {
        return Ok(0.0);
    }
    let peaks = series.peaks(lo, hi);
    if peaks.len() < 3 {
        return Err(NufiError::Fit { peaks: peaks.len() });
    }
    let ts: Vec<f64> = peaks.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = peaks.iter().map(|p| p.1.ln()).collect();
    Ok(-linear_fit(&ts, &ys)?.slope)
}
