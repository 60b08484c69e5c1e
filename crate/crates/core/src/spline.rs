//! Periodic tensor-product cubic splines of the potential and the
//! append-only history of them that drives the numerical flow.
//!
//! A field is `phi(x) = sum_i c_i prod_a B((x_a - i_a hx) / hx)` with the
//! centred cubic B-spline `B`. Fitting solves the cyclic system with
//! stencil `(1/6, 4/6, 1/6)` along every axis; evaluation touches only the
//! local `4^d` coefficients.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{NufiError, Result};
use crate::grid::{GridSpec, Real};

/// Minimum nodes per axis for a spline fit.
pub const MIN_SPLINE_NODES: usize = 4;

/// Periodic C^2 cubic spline on the spatial grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SplineField<T, const D: usize> {
    nx: usize,
    box_length: T,
    inv_h: T,
    coeffs: Vec<T>,
}

/// Solver for the constant cyclic tridiagonal system `(1/6) c_{i-1} + (4/6) c_i + (1/6) c_{i+1} = r_i`
/// by Sherman-Morrison around a Thomas factorization.
#[derive(Debug, Clone)]
struct CyclicSolver {
    n: usize,
    // Thomas factors of the modified tridiagonal matrix.
    c_prime: Vec<f64>,
    inv_denom: Vec<f64>,
    z: Vec<f64>,
    factor_den: f64,
    gamma: f64,
}

const OFF: f64 = 1.0 / 6.0;
const DIAG: f64 = 4.0 / 6.0;

impl CyclicSolver {
    fn new(n: usize) -> Self {
        let gamma = -DIAG;
        let mut diag = vec![DIAG; n];
        diag[0] = DIAG - gamma;
        diag[n - 1] = DIAG - OFF * OFF / gamma;
        let mut c_prime = vec![0.0; n];
        let mut inv_denom = vec![0.0; n];
        inv_denom[0] = 1.0 / diag[0];
        c_prime[0] = OFF * inv_denom[0];
        for i in 1..n {
            let denom = diag[i] - OFF * c_prime[i - 1];
            inv_denom[i] = 1.0 / denom;
            c_prime[i] = OFF * inv_denom[i];
        }
        let mut s = Self {
            n,
            c_prime,
            inv_denom,
            z: Vec::new(),
            factor_den: 0.0,
            gamma,
        };
        let mut u = vec![0.0; n];
        u[0] = gamma;
        u[n - 1] = OFF;
        s.thomas(&mut u);
        s.factor_den = 1.0 + u[0] + OFF * u[n - 1] / gamma;
        s.z = u;
        s
    }

    fn thomas(&self, r: &mut [f64]) {
        let n = self.n;
        r[0] *= self.inv_denom[0];
        for i in 1..n {
            r[i] = (r[i] - OFF * r[i - 1]) * self.inv_denom[i];
        }
        for i in (0..n - 1).rev() {
            r[i] -= self.c_prime[i] * r[i + 1];
        }
    }

    fn solve(&self, r: &mut [f64]) {
        self.thomas(r);
        let fact = (r[0] + OFF * r[self.n - 1] / self.gamma) / self.factor_den;
        for (ri, zi) in r.iter_mut().zip(&self.z) {
            *ri -= fact * zi;
        }
    }
}

/// Cubic B-spline weights and their derivatives at fractional offset `t`
/// for the coefficients at offsets `-1, 0, 1, 2` from the cell's left node.
#[inline(always)]
fn weights<T: Real>(t: T) -> ([T; 4], [T; 4]) {
    let one = T::one();
    let half = T::of(0.5);
    let sixth = T::of(1.0 / 6.0);
    let s = one - t;
    let t2 = t * t;
    let t3 = t2 * t;
    let w = [
        sixth * s * s * s,
        sixth * (T::of(3.0) * t3 - T::of(6.0) * t2 + T::of(4.0)),
        sixth * (T::of(-3.0) * t3 + T::of(3.0) * t2 + T::of(3.0) * t + one),
        sixth * t3,
    ];
    let dw = [
        -half * s * s,
        half * (T::of(3.0) * t2 - T::of(4.0) * t),
        half * (T::of(-3.0) * t2 + T::of(2.0) * t + one),
        half * t2,
    ];
    (w, dw)
}

impl<T: Real, const D: usize> SplineField<T, D> {
    /// Fits the interpolating spline to nodal values (row-major, `Nx^d` of them).
    pub fn fit(phi_nodes: &[f64], grid: &GridSpec) -> Result<Self> {
        grid.check_dim::<D>()?;
        let n = grid.nx();
        if n < MIN_SPLINE_NODES {
            return Err(NufiError::Usage(format!(
                "spline fit needs Nx >= {MIN_SPLINE_NODES}, got {n}"
            )));
        }
        if phi_nodes.len() != grid.n_nodes() {
            return Err(NufiError::Usage(format!(
                "spline fit needs {} nodal values, got {}",
                grid.n_nodes(),
                phi_nodes.len()
            )));
        }
        let solver = CyclicSolver::new(n);
        let mut data = phi_nodes.to_vec();
        let total = data.len();
        let mut line = vec![0.0; n];
        for axis in 0..D {
            let stride = n.pow((D - 1 - axis) as u32);
            let block = stride * n;
            for start in (0..total).step_by(block) {
                for offset in 0..stride {
                    let base = start + offset;
                    for (m, slot) in line.iter_mut().enumerate() {
                        *slot = data[base + m * stride];
                    }
                    solver.solve(&mut line);
                    for (m, val) in line.iter().enumerate() {
                        data[base + m * stride] = *val;
                    }
                }
            }
        }
        Ok(Self::from_raw(
            grid.box_length(),
            n,
            data.into_iter().map(T::of).collect(),
        ))
    }

    /// Installs precomputed B-spline coefficients (row-major, `Nx^d`).
    pub fn from_coefficients(grid: &GridSpec, coeffs: Vec<T>) -> Result<Self> {
        grid.check_dim::<D>()?;
        if grid.nx() < MIN_SPLINE_NODES || coeffs.len() != grid.n_nodes() {
            return Err(NufiError::Usage(format!(
                "need {} coefficients on a grid with Nx >= {MIN_SPLINE_NODES}",
                grid.n_nodes()
            )));
        }
        Ok(Self::from_raw(grid.box_length(), grid.nx(), coeffs))
    }

    fn from_raw(box_length: f64, nx: usize, coeffs: Vec<T>) -> Self {
        debug_assert_eq!(coeffs.len(), nx.pow(D as u32));
        Self {
            nx,
            box_length: T::of(box_length),
            inv_h: T::of(nx as f64 / box_length),
            coeffs,
        }
    }

    /// Spline with every coefficient zero.
    pub fn zero(grid: &GridSpec) -> Result<Self> {
        grid.check_dim::<D>()?;
        Ok(Self::from_raw(
            grid.box_length(),
            grid.nx(),
            vec![T::zero(); grid.n_nodes()],
        ))
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn coefficients(&self) -> &[T] {
        &self.coeffs
    }

    /// Cell index, fractional offset and the four periodic coefficient
    /// indices along one axis.
    #[inline(always)]
    fn locate(&self, x: T) -> ([usize; 4], T) {
        let s = x * self.inv_h;
        let fl = s.floor();
        let t = s - fl;
        let n = self.nx;
        // Periodic wrap in floating point; cheaper than an integer remainder.
        let nf = T::of(n as f64);
        let mut wrapped = fl - nf * (fl / nf).floor();
        if wrapped < T::zero() {
            wrapped = wrapped + nf;
        }
        let i = wrapped.to_usize().unwrap_or(0);
        let i = if i >= n { i - n } else { i };
        let im1 = if i == 0 { n - 1 } else { i - 1 };
        let ip1 = if i + 1 == n { 0 } else { i + 1 };
        let ip2 = if ip1 + 1 == n { 0 } else { ip1 + 1 };
        ([im1, i, ip1, ip2], t)
    }

    /// `phi(x)`; `x` is wrapped periodically.
    pub fn eval_phi(&self, x: &[T; D]) -> T {
        let mut idx = [[0usize; 4]; D];
        let mut w = [[T::zero(); 4]; D];
        for a in 0..D {
            let (i, t) = self.locate(x[a]);
            idx[a] = i;
            w[a] = weights(t).0;
        }
        let mut acc = T::zero();
        for combo in 0..(1usize << (2 * D)) {
            let mut lin = 0;
            let mut p = T::one();
            for a in 0..D {
                let k = (combo >> (2 * a)) & 3;
                lin = lin * self.nx + idx[a][k];
                p = p * w[a][k];
            }
            acc = acc + self.coeffs[lin] * p;
        }
        acc
    }

    /// `grad phi(x)`; `x` is wrapped periodically.
    #[inline]
    pub fn gradient(&self, x: &[T; D]) -> [T; D] {
        let mut grad = [T::zero(); D];
        if D == 1 {
            let (i, t) = self.locate(x[0]);
            let (_, dw) = weights(t);
            let c = &self.coeffs;
            grad[0] = (c[i[0]] * dw[0] + c[i[1]] * dw[1] + c[i[2]] * dw[2] + c[i[3]] * dw[3])
                * self.inv_h;
            return grad;
        }
        let mut idx = [[0usize; 4]; D];
        let mut w = [[T::zero(); 4]; D];
        let mut dw = [[T::zero(); 4]; D];
        for a in 0..D {
            let (i, t) = self.locate(x[a]);
            idx[a] = i;
            (w[a], dw[a]) = weights(t);
        }
        for combo in 0..(1usize << (2 * D)) {
            let mut lin = 0;
            let mut ks = [0usize; D];
            for a in 0..D {
                ks[a] = (combo >> (2 * a)) & 3;
                lin = lin * self.nx + idx[a][ks[a]];
            }
            let c = self.coeffs[lin];
            for a in 0..D {
                let mut p = dw[a][ks[a]];
                for b in 0..D {
                    if b != a {
                        p = p * w[b][ks[b]];
                    }
                }
                grad[a] = grad[a] + c * p;
            }
        }
        for g in &mut grad {
            *g = *g * self.inv_h;
        }
        grad
    }

    /// Electric field `E = -grad phi`.
    #[inline]
    pub fn eval_e(&self, x: &[T; D]) -> [T; D] {
        self.gradient(x).map(|g| -g)
    }

    pub fn box_length(&self) -> T {
        self.box_length
    }
}

/// Fits the spline of nodal potential values.
pub fn fit_spline<T: Real, const D: usize>(
    phi_nodes: &[f64],
    grid: &GridSpec,
) -> Result<SplineField<T, D>> {
    SplineField::fit(phi_nodes, grid)
}

/// Append-only sequence of potential splines, entry `m` at time `m tau`.
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialHistory<T, const D: usize> {
    box_length: f64,
    nx: usize,
    tau: f64,
    fields: Vec<SplineField<T, D>>,
}

const MAGIC: &[u8; 8] = b"NUFIHIST";
const VERSION: u32 = 1;

/// Header of a checkpoint file.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckpointHeader {
    pub float_bytes: usize,
    pub d: usize,
    pub box_length: f64,
    pub nx: usize,
    pub tau: f64,
    pub count: usize,
}

impl<T: Real, const D: usize> PotentialHistory<T, D> {
    pub fn new(grid: &GridSpec, tau: f64) -> Result<Self> {
        grid.check_dim::<D>()?;
        Ok(Self {
            box_length: grid.box_length(),
            nx: grid.nx(),
            tau,
            fields: Vec::new(),
        })
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn box_length(&self) -> f64 {
        self.box_length
    }

    pub fn len(&self) -> usize {
        self.fields.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fields.is_empty()
    }

    pub fn fields(&self) -> &[SplineField<T, D>] {
        &self.fields
    }

    pub fn get(&self, m: usize) -> Option<&SplineField<T, D>> {
        self.fields.get(m)
    }

    pub fn push(&mut self, field: SplineField<T, D>) -> Result<()> {
        if field.nx != self.nx || field.box_length.as_f64() != T::of(self.box_length).as_f64() {
            return Err(NufiError::Usage(
                "spline field grid does not match history grid".into(),
            ));
        }
        self.fields.push(field);
        Ok(())
    }

    /// Keeps only the first `len` entries.
    pub fn truncated(&self, len: usize) -> Self {
        Self {
            box_length: self.box_length,
            nx: self.nx,
            tau: self.tau,
            fields: self.fields[..len.min(self.fields.len())].to_vec(),
        }
    }

    /// Bytes of coefficient storage, `len * Nx^d * sizeof(T)`.
    pub fn memory_bytes(&self) -> usize {
        self.fields.len() * self.nx.pow(D as u32) * T::BYTES
    }

    /// Writes the flat little-endian checkpoint.
    pub fn write_checkpoint(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        w.write_all(MAGIC)?;
        w.write_all(&VERSION.to_le_bytes())?;
        w.write_all(&(T::BYTES as u32).to_le_bytes())?;
        w.write_all(&(D as u64).to_le_bytes())?;
        w.write_all(&self.box_length.to_le_bytes())?;
        w.write_all(&(self.nx as u64).to_le_bytes())?;
        w.write_all(&self.tau.to_le_bytes())?;
        w.write_all(&(self.fields.len() as u64).to_le_bytes())?;
        for field in &self.fields {
            for &c in &field.coeffs {
                if T::BYTES == 4 {
                    w.write_all(&(c.as_f64() as f32).to_le_bytes())?;
                } else {
                    w.write_all(&c.as_f64().to_le_bytes())?;
                }
            }
        }
        w.flush()?;
        Ok(())
    }

    /// Reads a checkpoint written with the same precision and dimension.
    pub fn read_checkpoint(path: &Path) -> Result<Self> {
        let mut r = BufReader::new(File::open(path)?);
        let header = read_header(&mut r, path)?;
        let bad = |reason: String| NufiError::Checkpoint {
            path: path.to_path_buf(),
            reason,
        };
        if header.float_bytes != T::BYTES {
            return Err(bad(format!(
                "file stores {}-byte floats, reader expects {}",
                header.float_bytes,
                T::BYTES
            )));
        }
        if header.d != D {
            return Err(bad(format!("file has d={}, reader expects {D}", header.d)));
        }
        if header.nx < MIN_SPLINE_NODES {
            return Err(bad(format!("Nx={} too small", header.nx)));
        }
        let per_field = header.nx.pow(D as u32);
        let mut fields = Vec::with_capacity(header.count);
        let mut buf = vec![0u8; T::BYTES];
        for m in 0..header.count {
            let mut coeffs = Vec::with_capacity(per_field);
            for _ in 0..per_field {
                r.read_exact(&mut buf)
                    .map_err(|_| bad(format!("truncated payload in field {m}")))?;
                let v = if T::BYTES == 4 {
                    f32::from_le_bytes(buf[..4].try_into().unwrap()) as f64
                } else {
                    f64::from_le_bytes(buf[..8].try_into().unwrap())
                };
                coeffs.push(T::of(v));
            }
            fields.push(SplineField::from_raw(header.box_length, header.nx, coeffs));
        }
        let mut rest = Vec::new();
        r.read_to_end(&mut rest)?;
        if !rest.is_empty() {
            return Err(bad(format!("{} trailing bytes", rest.len())));
        }
        Ok(Self {
            box_length: header.box_length,
            nx: header.nx,
            tau: header.tau,
            fields,
        })
    }
}

/// Reads only the header of a checkpoint file.
pub fn read_checkpoint_header(path: &Path) -> Result<CheckpointHeader> {
    let mut r = BufReader::new(File::open(path)?);
    read_header(&mut r, path)
}

fn read_header(r: &mut impl Read, path: &Path) -> Result<CheckpointHeader> {
    let bad = |reason: &str| NufiError::Checkpoint {
        path: path.to_path_buf(),
        reason: reason.to_string(),
    };
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic).map_err(|_| bad("file too short"))?;
    if &magic != MAGIC {
        return Err(bad("bad magic"));
    }
    let mut b4 = [0u8; 4];
    let mut b8 = [0u8; 8];
    let mut u32_field = |r: &mut dyn Read| -> Result<u32> {
        r.read_exact(&mut b4).map_err(|_| bad("truncated header"))?;
        Ok(u32::from_le_bytes(b4))
    };
    let version = u32_field(r)?;
    if version != VERSION {
        return Err(bad("unsupported version"));
    }
    let float_bytes = u32_field(r)? as usize;
    if float_bytes != 4 && float_bytes != 8 {
        return Err(bad("float width must be 4 or 8 bytes"));
    }
    let mut next8 = |r: &mut dyn Read| -> Result<[u8; 8]> {
        r.read_exact(&mut b8).map_err(|_| bad("truncated header"))?;
        Ok(b8)
    };
    let d = u64::from_le_bytes(next8(r)?) as usize;
    let box_length = f64::from_le_bytes(next8(r)?);
    let nx = u64::from_le_bytes(next8(r)?) as usize;
    let tau = f64::from_le_bytes(next8(r)?);
    let count = u64::from_le_bytes(next8(r)?) as usize;
    if !(1..=3).contains(&d) {
        return Err(bad("dimension must be 1, 2 or 3"));
    }
    if !(box_length > 0.0) || !(tau > 0.0) {
        return Err(bad("non-positive box length or time step"));
    }
    Ok(CheckpointHeader {
        float_bytes,
        d,
        box_length,
        nx,
        tau,
        count,
    })
}
