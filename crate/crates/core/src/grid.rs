//! Discretization parameters and index/coordinate maps.
//!
//! Spatial nodes tile the periodic box `[0, L)^d` with `Nx` nodes per axis;
//! velocity quadrature nodes are the midpoints of `Nv` cells per axis
//! covering `[-vmax, vmax]`. Multi-indices are linearized row-major, last
//! axis fastest.

use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive};

use crate::error::{NufiError, Result};

/// Floating-point type used for field storage and flow arithmetic.
pub trait Real:
    Float + FloatConst + FromPrimitive + Send + Sync + Debug + Display + Default + 'static
{
    const BYTES: usize;

    fn of(x: f64) -> Self;

    fn as_f64(self) -> f64;
}

impl Real for f64 {
    const BYTES: usize = 8;

    #[inline(always)]
    fn of(x: f64) -> Self {
        x
    }

    #[inline(always)]
    fn as_f64(self) -> f64 {
        self
    }
}

impl Real for f32 {
    const BYTES: usize = 4;

    #[inline(always)]
    fn of(x: f64) -> Self {
        x as f32
    }

    #[inline(always)]
    fn as_f64(self) -> f64 {
        self as f64
    }
}

/// Floating-point width selected at run time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Precision {
    Single,
    #[default]
    Double,
}

impl Precision {
    pub fn bytes(self) -> usize {
        match self {
            Precision::Single => 4,
            Precision::Double => 8,
        }
    }

    pub fn from_bits(bits: u32) -> Result<Self> {
        match bits {
            32 => Ok(Precision::Single),
            64 => Ok(Precision::Double),
            other => Err(NufiError::Config(format!(
                "precision must be 32 or 64, got {other}"
            ))),
        }
    }
}

/// Uniform periodic phase-space grid shared by all modules.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    d: usize,
    l: f64,
    nx: usize,
    nv: usize,
    vmax: f64,
    hx: f64,
    hv: f64,
}

impl GridSpec {
    pub fn new(d: usize, l: f64, nx: usize, nv: usize, vmax: f64) -> Result<Self> {
        if !(1..=3).contains(&d) {
            return Err(NufiError::Config(format!("dimension must be 1, 2 or 3, got {d}")));
        }
        if nx < 2 || nv < 2 {
            return Err(NufiError::Config(format!(
                "need Nx >= 2 and Nv >= 2, got Nx={nx}, Nv={nv}"
            )));
        }
        if !(l > 0.0 && l.is_finite()) {
            return Err(NufiError::Config(format!("box length must be positive, got {l}")));
        }
        if !(vmax > 0.0 && vmax.is_finite()) {
            return Err(NufiError::Config(format!("vmax must be positive, got {vmax}")));
        }
        Ok(Self {
            d,
            l,
            nx,
            nv,
            vmax,
            hx: l / nx as f64,
            hv: 2.0 * vmax / nv as f64,
        })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn box_length(&self) -> f64 {
        self.l
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn nv(&self) -> usize {
        self.nv
    }

    pub fn vmax(&self) -> f64 {
        self.vmax
    }

    pub fn hx(&self) -> f64 {
        self.hx
    }

    pub fn hv(&self) -> f64 {
        self.hv
    }

    /// `Nx^d`, the number of spatial nodes.
    pub fn n_nodes(&self) -> usize {
        self.nx.pow(self.d as u32)
    }

    /// `Nv^d`, the number of velocity quadrature nodes.
    pub fn n_velocities(&self) -> usize {
        self.nv.pow(self.d as u32)
    }

    /// Volume element `hx^d * hv^d` of the phase-space midpoint rule.
    pub fn cell_volume(&self) -> f64 {
        (self.hx * self.hv).powi(self.d as i32)
    }

    /// Position of spatial node `i`: `(i_1 hx, ..., i_d hx)`.
    pub fn x_node(&self, index: &[usize]) -> Result<Vec<f64>> {
        self.check_index(index, self.nx, "spatial")?;
        Ok(index.iter().map(|&i| i as f64 * self.hx).collect())
    }

    /// Velocity cell midpoint `j`: `-vmax + (j + 1/2) hv` per component.
    pub fn v_mid(&self, index: &[usize]) -> Result<Vec<f64>> {
        self.check_index(index, self.nv, "velocity")?;
        Ok(index
            .iter()
            .map(|&j| -self.vmax + (j as f64 + 0.5) * self.hv)
            .collect())
    }

    fn check_index(&self, index: &[usize], n: usize, what: &str) -> Result<()> {
        if index.len() != self.d {
            return Err(NufiError::Usage(format!(
                "{what} multi-index has {} components, grid dimension is {}",
                index.len(),
                self.d
            )));
        }
        if let Some(&bad) = index.iter().find(|&&i| i >= n) {
            return Err(NufiError::Usage(format!(
                "{what} index component {bad} out of range [0, {n})"
            )));
        }
        Ok(())
    }

    /// Position of the node with row-major linear index `lin`.
    #[inline]
    pub fn node_position<T: Real, const D: usize>(&self, lin: usize) -> [T; D] {
        let idx = unravel::<D>(lin, self.nx);
        let mut x = [T::zero(); D];
        for a in 0..D {
            x[a] = T::of(idx[a] as f64 * self.hx);
        }
        x
    }

    /// Velocity midpoint with row-major linear index `lin`.
    #[inline]
    pub fn velocity_midpoint<T: Real, const D: usize>(&self, lin: usize) -> [T; D] {
        let idx = unravel::<D>(lin, self.nv);
        let mut v = [T::zero(); D];
        for a in 0..D {
            v[a] = T::of(-self.vmax + (idx[a] as f64 + 0.5) * self.hv);
        }
        v
    }

    pub(crate) fn check_dim<const D: usize>(&self) -> Result<()> {
        if self.d != D {
            return Err(NufiError::Usage(format!(
                "grid dimension {} does not match requested dimension {D}",
                self.d
            )));
        }
        Ok(())
    }
}

/// Row-major multi-index of `lin` on an `n^D` grid.
#[inline]
pub fn unravel<const D: usize>(mut lin: usize, n: usize) -> [usize; D] {
    let mut idx = [0; D];
    for a in (0..D).rev() {
        idx[a] = lin % n;
        lin /= n;
    }
    idx
}

/// Row-major linear index of multi-index `idx` on an `n^D` grid.
#[inline]
pub fn ravel<const D: usize>(idx: &[usize; D], n: usize) -> usize {
    idx.iter().fold(0, |acc, &i| acc * n + i)
}

/// A point `(x, v)` in the `2d`-dimensional phase space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhasePoint<T, const D: usize> {
    pub x: [T; D],
    pub v: [T; D],
}

impl<T: Real, const D: usize> PhasePoint<T, D> {
    pub fn new(x: [T; D], v: [T; D]) -> Self {
        Self { x, v }
    }

    pub fn is_finite(&self) -> bool {
        self.x.iter().chain(self.v.iter()).all(|c| c.is_finite())
    }

    pub fn to_f64(&self) -> PhasePoint<f64, D> {
        PhasePoint {
            x: self.x.map(Real::as_f64),
            v: self.v.map(Real::as_f64),
        }
    }
}
