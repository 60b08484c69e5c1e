//! Spectral Poisson solver on the periodic box.
//!
//! Nodal values are expanded in the trigonometric interpolant
//! `sum_alpha c_alpha exp(i alpha . 2 pi x / L)`, the Poisson equation
//! `-Lap phi = rho` becomes a division by `|2 pi alpha / L|^2`, and the
//! electric energy follows from Parseval.

use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{NufiError, Result};
use crate::grid::GridSpec;

/// Relative tolerance on the nodal mean of `rho` before a solve.
pub const NEUTRALITY_TOLERANCE: f64 = 1e-8;

/// Charge density at the `Nx^d` spatial nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityGrid {
    grid: GridSpec,
    values: Vec<f64>,
}

impl DensityGrid {
    pub fn new(grid: GridSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n_nodes() {
            return Err(NufiError::Usage(format!(
                "density grid needs {} values, got {}",
                grid.n_nodes(),
                values.len()
            )));
        }
        if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(NufiError::Usage(format!("density value {bad} is not finite")));
        }
        Ok(Self { grid, values })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn mean(&self) -> f64 {
        crate::density::pairwise_sum(&self.values) / self.values.len() as f64
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Subtracts the nodal mean and returns the subtracted constant.
    pub fn neutralize(&mut self) -> f64 {
        let mean = self.mean();
        for v in &mut self.values {
            *v -= mean;
        }
        mean
    }
}

/// Trigonometric coefficients `c_alpha` of a real field, stored in FFT order:
/// position `m` along an axis holds `alpha = m` for `m <= Nx/2`, else `m - Nx`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    grid: GridSpec,
    coeffs: Vec<Complex64>,
}

impl SpectralField {
    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn coefficients(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// Coefficient for the signed multi-index `alpha`, components in `(-Nx/2, Nx/2]`.
    pub fn coefficient(&self, alpha: &[i64]) -> Result<Complex64> {
        let n = self.grid.nx() as i64;
        if alpha.len() != self.grid.dim() {
            return Err(NufiError::Usage("multi-index has wrong dimension".into()));
        }
        let mut lin = 0usize;
        for &a in alpha {
            if a <= -(n / 2) - n % 2 || a > n / 2 {
                return Err(NufiError::Usage(format!("mode {a} outside (-{}, {}]", n / 2, n / 2)));
            }
            lin = lin * n as usize + a.rem_euclid(n) as usize;
        }
        Ok(self.coeffs[lin])
    }

    /// Signed wavenumber index of FFT position `m`.
    fn signed(m: usize, n: usize) -> i64 {
        if m <= n / 2 {
            m as i64
        } else {
            m as i64 - n as i64
        }
    }
}

/// Cached FFT plans for one grid.
pub struct PoissonSolver {
    grid: GridSpec,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for PoissonSolver {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PoissonSolver").field("grid", &self.grid).finish()
    }
}

/// Result of a Poisson solve.
#[derive(Debug, Clone)]
pub struct PoissonSolution {
    pub phi_nodes: Vec<f64>,
    pub spectrum: SpectralField,
}

impl PoissonSolver {
    pub fn new(grid: &GridSpec) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            grid: grid.clone(),
            forward: planner.plan_fft_forward(grid.nx()),
            inverse: planner.plan_fft_inverse(grid.nx()),
        }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    /// In-place d-dimensional transform, one axis at a time.
    fn transform(&self, data: &mut [Complex64], fft: &Arc<dyn Fft<f64>>) {
        let n = self.grid.nx();
        let d = self.grid.dim();
        let total = data.len();
        let mut line = vec![Complex64::default(); n];
        let mut scratch = vec![Complex64::default(); fft.get_inplace_scratch_len()];
        for axis in 0..d {
            let stride = n.pow((d - 1 - axis) as u32);
            let block = stride * n;
            for start in (0..total).step_by(block) {
                for offset in 0..stride {
                    let base = start + offset;
                    for (m, slot) in line.iter_mut().enumerate() {
                        *slot = data[base + m * stride];
                    }
                    fft.process_with_scratch(&mut line, &mut scratch);
                    for (m, val) in line.iter().enumerate() {
                        data[base + m * stride] = *val;
                    }
                }
            }
        }
    }

    /// Coefficients of the trigonometric interpolant of nodal values.
    pub fn forward(&self, values: &[f64]) -> Result<SpectralField> {
        if values.len() != self.grid.n_nodes() {
            return Err(NufiError::Usage(format!(
                "expected {} nodal values, got {}",
                self.grid.n_nodes(),
                values.len()
            )));
        }
        let mut data: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.transform(&mut data, &self.forward);
        let scale = 1.0 / data.len() as f64;
        for c in &mut data {
            *c *= scale;
        }
        Ok(SpectralField {
            grid: self.grid.clone(),
            coeffs: data,
        })
    }

    /// Nodal values of the (real part of the) interpolant.
    pub fn inverse(&self, field: &SpectralField) -> Vec<f64> {
        let mut data = field.coeffs.clone();
        self.transform(&mut data, &self.inverse);
        data.into_iter().map(|c| c.re).collect()
    }

    /// Solves `-Lap phi = rho` with zero-mean gauge and zeroed Nyquist modes.
    pub fn solve(&self, rho: &DensityGrid) -> Result<PoissonSolution> {
        let mean = rho.mean();
        let tolerance = NEUTRALITY_TOLERANCE * rho.max_abs();
        if mean.abs() > tolerance {
            return Err(NufiError::NonNeutral {
                residual_mean: mean,
                tolerance,
            });
        }
        let mut spectrum = self.forward(rho.values())?;
        let n = self.grid.nx();
        let d = self.grid.dim();
        let base = 2.0 * std::f64::consts::PI / self.grid.box_length();
        let nyquist = (n % 2 == 0).then_some(n / 2);
        for (lin, c) in spectrum.coeffs.iter_mut().enumerate() {
            let mut r = lin;
            let mut k2 = 0.0;
            let mut zero = false;
            for _ in 0..d {
                let m = r % n;
                r /= n;
                if Some(m) == nyquist {
                    zero = true;
                }
                let a = SpectralField::signed(m, n) as f64 * base;
                k2 += a * a;
            }
            if zero || k2 == 0.0 {
                *c = Complex64::default();
            } else {
                *c /= k2;
            }
        }
        let phi_nodes = self.inverse(&spectrum);
        Ok(PoissonSolution {
            phi_nodes,
            spectrum,
        })
    }

    /// `-Lap` applied spectrally: multiplies every coefficient by `|2 pi alpha / L|^2`.
    pub fn negative_laplacian(&self, field: &SpectralField) -> SpectralField {
        let mut out = field.clone();
        for (lin, c) in out.coeffs.iter_mut().enumerate() {
            *c *= wavenumber_squared(&self.grid, lin);
        }
        out
    }
}

fn wavenumber_squared(grid: &GridSpec, lin: usize) -> f64 {
    let n = grid.nx();
    let base = 2.0 * std::f64::consts::PI / grid.box_length();
    let mut r = lin;
    let mut k2 = 0.0;
    for _ in 0..grid.dim() {
        let a = SpectralField::signed(r % n, n) as f64 * base;
        r /= n;
        k2 += a * a;
    }
    k2
}

/// Trigonometric coefficients of the nodal density.
pub fn forward_transform(rho: &DensityGrid) -> SpectralField {
    PoissonSolver::new(rho.grid())
        .forward(rho.values())
        .expect("density grid length matches its grid")
}

/// Nodal values from coefficients.
pub fn inverse_transform(field: &SpectralField) -> Vec<f64> {
    PoissonSolver::new(field.grid()).inverse(field)
}

pub fn solve_poisson(rho: &DensityGrid) -> Result<PoissonSolution> {
    PoissonSolver::new(rho.grid()).solve(rho)
}

/// `1/2 ||grad phi||^2` over the box via Parseval.
pub fn electric_energy(spectrum: &SpectralField) -> f64 {
    let grid = spectrum.grid();
    let volume = grid.box_length().powi(grid.dim() as i32);
    let terms: Vec<f64> = spectrum
        .coeffs
        .iter()
        .enumerate()
        .map(|(lin, c)| wavenumber_squared(grid, lin) * c.norm_sqr())
        .collect();
    0.5 * volume * crate::density::pairwise_sum(&terms)
}
