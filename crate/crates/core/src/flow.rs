//! Backward numerical flow through the stored potential history.
//!
//! `psi(n, .)` traces a phase point from time `n tau` back to `t = 0` with
//! Stormer-Verlet steps in merged leapfrog form: one field evaluation per
//! step plus the half-kicks at both ends. `psi_tilde` omits the first
//! half-kick, so it needs no field at the current time. The distribution
//! function is never stored; `f(n tau, x, v) = f0(psi(n, x, v))`.

use crate::error::{NufiError, Result};
use crate::grid::{PhasePoint, Real};
use crate::initial::InitialCondition;
use crate::spline::{PotentialHistory, SplineField};

/// Everything needed to evaluate the flow at step `n`.
#[derive(Debug, Clone, Copy)]
pub struct FlowContext<'a, T, const D: usize> {
    pub history: &'a PotentialHistory<T, D>,
    pub ic: &'a InitialCondition,
    pub tau: T,
}

impl<'a, T: Real, const D: usize> FlowContext<'a, T, D> {
    pub fn new(history: &'a PotentialHistory<T, D>, ic: &'a InitialCondition) -> Result<Self> {
        if ic.d != D {
            return Err(NufiError::Usage(format!(
                "initial condition is {}-dimensional, flow is {D}-dimensional",
                ic.d
            )));
        }
        Ok(Self {
            history,
            ic,
            tau: T::of(history.tau()),
        })
    }

    fn require(&self, needed: usize) -> Result<()> {
        if self.history.len() < needed {
            return Err(NufiError::InsufficientHistory {
                needed,
                available: self.history.len(),
            });
        }
        Ok(())
    }

    pub(crate) fn check_tilde(&self, n: usize) -> Result<()> {
        self.require(n)
    }

    pub(crate) fn check_psi(&self, n: usize) -> Result<()> {
        self.require(n + 1)
    }

    /// Backward flow without the initial half-kick; needs fields `0..n`.
    pub fn psi_tilde(&self, n: usize, p: PhasePoint<T, D>) -> Result<PhasePoint<T, D>> {
        self.check_tilde(n)?;
        let mut evals = 0;
        Ok(self.trace_tilde(n, p, &mut evals))
    }

    /// Backward flow `Psi^0_{n tau}`; needs fields `0..=n`.
    pub fn psi(&self, n: usize, p: PhasePoint<T, D>) -> Result<PhasePoint<T, D>> {
        self.check_psi(n)?;
        let mut evals = 0;
        Ok(self.trace(n, p, &mut evals))
    }

    /// `f(n tau, x, v) = f0(psi(n, x, v))`.
    pub fn eval_f(&self, n: usize, p: PhasePoint<T, D>) -> Result<T> {
        let q = self.psi(n, p)?;
        Ok(self.ic.eval(&q.x, &q.v))
    }

    #[inline]
    pub(crate) fn f_unchecked(&self, n: usize, p: PhasePoint<T, D>, evals: &mut u64) -> T {
        let q = self.trace(n, p, evals);
        self.ic.eval(&q.x, &q.v)
    }

    #[inline]
    pub(crate) fn trace(&self, n: usize, mut p: PhasePoint<T, D>, evals: &mut u64) -> PhasePoint<T, D> {
        if n == 0 {
            return p;
        }
        let half = self.tau * T::of(0.5);
        kick(&self.history.fields()[n], half, &mut p, evals);
        self.trace_tilde(n, p, evals)
    }

    #[inline]
    pub(crate) fn trace_tilde(
        &self,
        n: usize,
        mut p: PhasePoint<T, D>,
        evals: &mut u64,
    ) -> PhasePoint<T, D> {
        if n == 0 {
            return p;
        }
        let tau = self.tau;
        let fields = self.history.fields();
        for field in fields[1..n].iter().rev() {
            drift(tau, &mut p);
            kick(field, tau, &mut p, evals);
        }
        drift(tau, &mut p);
        kick(&fields[0], tau * T::of(0.5), &mut p, evals);
        p
    }
}

impl<'a, T: Real, const D: usize> FlowContext<'a, T, D> {
    /// [`Self::trace`] applied to every point of `pts` in place. Points are
    /// advanced together field by field, which keeps several independent
    /// dependency chains in flight; each point sees exactly the same
    /// operations as in the single-point version.
    pub(crate) fn trace_batch(&self, n: usize, pts: &mut [PhasePoint<T, D>], evals: &mut u64) {
        if n == 0 {
            return;
        }
        let half = self.tau * T::of(0.5);
        let field = &self.history.fields()[n];
        for p in pts.iter_mut() {
            kick(field, half, p, evals);
        }
        self.trace_tilde_batch(n, pts, evals);
    }

    /// [`Self::trace_tilde`] applied to every point of `pts` in place.
    pub(crate) fn trace_tilde_batch(&self, n: usize, pts: &mut [PhasePoint<T, D>], evals: &mut u64) {
        if n == 0 {
            return;
        }
        let tau = self.tau;
        let fields = self.history.fields();
        for field in fields[1..n].iter().rev() {
            for p in pts.iter_mut() {
                drift(tau, p);
                kick(field, tau, p, evals);
            }
        }
        let half = tau * T::of(0.5);
        for p in pts.iter_mut() {
            drift(tau, p);
            kick(&fields[0], half, p, evals);
        }
    }
}

/// `x <- x - tau v`.
#[inline(always)]
fn drift<T: Real, const D: usize>(tau: T, p: &mut PhasePoint<T, D>) {
    for a in 0..D {
        p.x[a] = p.x[a] - tau * p.v[a];
    }
}

/// `v <- v + dt E(x) = v - dt grad phi(x)`.
#[inline(always)]
fn kick<T: Real, const D: usize>(field: &SplineField<T, D>, dt: T, p: &mut PhasePoint<T, D>, evals: &mut u64) {
    let g = field.gradient(&p.x);
    *evals += 1;
    for a in 0..D {
        p.v[a] = p.v[a] - dt * g[a];
    }
}

/// One backward Stormer-Verlet step from `k tau` to `(k-1) tau` with the
/// three sub-steps kept separate.
pub fn backward_step<T: Real, const D: usize>(
    field_now: &SplineField<T, D>,
    field_prev: &SplineField<T, D>,
    tau: T,
    mut p: PhasePoint<T, D>,
) -> PhasePoint<T, D> {
    let mut evals = 0;
    let half = tau * T::of(0.5);
    kick(field_now, half, &mut p, &mut evals);
    drift(tau, &mut p);
    kick(field_prev, half, &mut p, &mut evals);
    p
}

/// One forward Stormer-Verlet step from `(k-1) tau` to `k tau`; inverts
/// [`backward_step`] with the same pair of fields.
pub fn forward_step<T: Real, const D: usize>(
    field_now: &SplineField<T, D>,
    field_prev: &SplineField<T, D>,
    tau: T,
    mut p: PhasePoint<T, D>,
) -> PhasePoint<T, D> {
    let mut evals = 0;
    let half = tau * T::of(0.5);
    kick(field_prev, -half, &mut p, &mut evals);
    drift(-tau, &mut p);
    kick(field_now, -half, &mut p, &mut evals);
    p
}

/// Determinant of the `2d x 2d` Jacobian of `psi(n, .)` at `p`, estimated
/// by central differences with step `h`.
pub fn fd_jacobian_determinant<T: Real, const D: usize>(
    ctx: &FlowContext<'_, T, D>,
    n: usize,
    p: PhasePoint<T, D>,
    h: f64,
) -> Result<f64> {
    ctx.check_psi(n)?;
    let dim = 2 * D;
    let mut jac = vec![vec![0.0f64; dim]; dim];
    let coord = |q: &PhasePoint<T, D>, i: usize| if i < D { q.x[i] } else { q.v[i - D] };
    let mut evals = 0;
    for col in 0..dim {
        let mut plus = p;
        let mut minus = p;
        let ht = T::of(h);
        if col < D {
            plus.x[col] = plus.x[col] + ht;
            minus.x[col] = minus.x[col] - ht;
        } else {
            plus.v[col - D] = plus.v[col - D] + ht;
            minus.v[col - D] = minus.v[col - D] - ht;
        }
        // Divide by the perturbation actually applied, not the nominal 2h.
        let width = (coord(&plus, col) - coord(&minus, col)).as_f64();
        let qp = ctx.trace(n, plus, &mut evals);
        let qm = ctx.trace(n, minus, &mut evals);
        for (row, jrow) in jac.iter_mut().enumerate() {
            jrow[col] = (coord(&qp, row).as_f64() - coord(&qm, row).as_f64()) / width;
        }
    }
    Ok(determinant(jac))
}

/// Determinant by Gaussian elimination with partial pivoting.
fn determinant(mut m: Vec<Vec<f64>>) -> f64 {
    let n = m.len();
    let mut det = 1.0;
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&a, &b| m[a][col].abs().total_cmp(&m[b][col].abs()))
            .unwrap();
        if m[piv][col] == 0.0 {
            return 0.0;
        }
        if piv != col {
            m.swap(piv, col);
            det = -det;
        }
        det *= m[col][col];
        for row in col + 1..n {
            let f = m[row][col] / m[col][col];
            for k in col..n {
                m[row][k] -= f * m[col][k];
            }
        }
    }
    det
}
