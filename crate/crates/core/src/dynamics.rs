//! Classical flow of a smoothed Hamiltonian together with its tangent
//! matrix and the accumulated actions needed by the propagator formulas.
//!
//! The integrator advances the 2+4+2 complex system (state, tangent,
//! running integrals) with fixed-step RK4, so the tangent matrix and the
//! action integrals carry the same accuracy order as the state itself.
//! The same routine serves complexified trajectories: the equations are
//! identical, only the arithmetic becomes complex.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::phase::{ComplexPhasePoint, PhaseScale, TangentMatrix};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Second derivatives of a smoothed Hamiltonian at one phase-space point.
#[derive(Debug, Clone, Copy)]
pub struct Hessian {
    pub qq: Complex64,
    pub qp: Complex64,
    pub pp: Complex64,
}

/// Expectation value of a quantum Hamiltonian over coherent states,
/// presented as a classical Hamiltonian with derivatives.
///
/// All entry points accept complex `(q, p)`; implementations that cannot be
/// evaluated off the real plane must return `false` from
/// [`SmoothedHamiltonian::supports_complex`].
pub trait SmoothedHamiltonian {
    fn value(&self, q: Complex64, p: Complex64) -> Complex64;
    fn gradient(&self, q: Complex64, p: Complex64) -> (Complex64, Complex64);
    fn hessian(&self, q: Complex64, p: Complex64) -> Hessian;
    fn supports_complex(&self) -> bool;
}

impl<T: SmoothedHamiltonian + ?Sized> SmoothedHamiltonian for &T {
    fn value(&self, q: Complex64, p: Complex64) -> Complex64 {
        (**self).value(q, p)
    }
    fn gradient(&self, q: Complex64, p: Complex64) -> (Complex64, Complex64) {
        (**self).gradient(q, p)
    }
    fn hessian(&self, q: Complex64, p: Complex64) -> Hessian {
        (**self).hessian(q, p)
    }
    fn supports_complex(&self) -> bool {
        (**self).supports_complex()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IntegratorMethod {
    RungeKutta4,
}

#[derive(Debug, Clone, Copy)]
pub struct IntegratorOptions {
    /// Upper bound on the step; the actual step divides the duration evenly.
    pub dt: f64,
    pub method: IntegratorMethod,
    /// Diagnostic tolerance (energy drift, boundary residuals).
    pub tolerance: f64,
}

impl IntegratorOptions {
    pub fn with_dt(dt: f64) -> Self {
        Self { dt, method: IntegratorMethod::RungeKutta4, tolerance: 1e-9 }
    }

    /// Step chosen as `period / steps_per_period`.
    pub fn for_period(period: f64, steps_per_period: usize) -> Self {
        Self::with_dt(period / steps_per_period.max(1) as f64)
    }
}

impl Default for IntegratorOptions {
    fn default() -> Self {
        Self::with_dt(1e-3)
    }
}

/// One classical trajectory: endpoints, tangent matrix, accumulated actions
/// and conserved-quantity diagnostics.
#[derive(Debug, Clone)]
pub struct TrajectoryRecord {
    pub initial: ComplexPhasePoint,
    pub final_point: ComplexPhasePoint,
    pub duration: f64,
    pub tangent: TangentMatrix,
    /// Hamilton action `S_H = Int (p qdot - H) dt`.
    pub s_hamilton: Complex64,
    /// Complex action `S = S_H + (q'p' - q''p'')/2 - (i hbar/2)(u'v' + u''v'')`.
    pub s_complex: Complex64,
    /// `I = Int (b^2 H_qq + c^2 H_pp)/4 dt`.
    pub i_correction: Complex64,
    pub energy_initial: Complex64,
    pub energy_final: Complex64,
    /// Continuously unwound argument of `M_vv(t)` along the trajectory,
    /// starting from `M_vv(0) = 1`. Fixes the square-root branch of the
    /// prefactor without any external bookkeeping.
    pub mvv_phase: f64,
}

impl TrajectoryRecord {
    /// Assemble a record, computing the complex action from the endpoints.
    ///
    /// The boundary terms use `u, v` computed from the endpoints at call
    /// time, never accumulated values, so they cannot drift.
    pub fn assemble(
        initial: ComplexPhasePoint,
        final_point: ComplexPhasePoint,
        duration: f64,
        tangent: TangentMatrix,
        s_hamilton: Complex64,
        i_correction: Complex64,
        energy_initial: Complex64,
        energy_final: Complex64,
        mvv_phase: f64,
    ) -> Self {
        let hbar = initial.scale.hbar;
        let boundary_qp = 0.5 * (initial.q * initial.p - final_point.q * final_point.p);
        let boundary_uv = -0.5 * I * hbar
            * (initial.u() * initial.v() + final_point.u() * final_point.v());
        let s_complex = s_hamilton + boundary_qp + boundary_uv;
        Self {
            initial,
            final_point,
            duration,
            tangent,
            s_hamilton,
            s_complex,
            i_correction,
            energy_initial,
            energy_final,
            mvv_phase,
        }
    }

    pub fn energy_drift(&self) -> f64 {
        (self.energy_final - self.energy_initial).norm()
    }

    pub fn is_real(&self, tol: f64) -> bool {
        self.initial.is_real(tol) && self.final_point.is_real(tol) && self.tangent.is_real(tol)
    }

    pub fn complex_tangent(&self) -> crate::phase::ComplexTangent {
        self.tangent.complex_tangent()
    }

    /// `sqrt(M_vv)` on the branch reached continuously from `+1` at `t = 0`.
    pub fn mvv_sqrt(&self) -> Complex64 {
        let mvv = self.complex_tangent().m_vv;
        mvv.norm().sqrt() * Complex64::from_polar(1.0, 0.5 * self.mvv_phase)
    }
}

/// Integrand of the second-derivative correction:
/// `(b^2 H_qq + c^2 H_pp) / 4` at the given point.
pub fn i_integrand<H: SmoothedHamiltonian + ?Sized>(
    h: &H,
    q: Complex64,
    p: Complex64,
    scale: &PhaseScale,
) -> Complex64 {
    let hess = h.hessian(q, p);
    0.25 * (scale.b * scale.b * hess.qq + scale.c * scale.c * hess.pp)
}

/// Residuals `(|S_num - S_closed|, |I_num - I_closed|)` for regression against
/// closed-form actions.
pub fn action_closed_check(
    record: &TrajectoryRecord,
    closed_s: Complex64,
    closed_i: Complex64,
) -> (f64, f64) {
    (
        (record.s_complex - closed_s).norm(),
        (record.i_correction - closed_i).norm(),
    )
}

#[derive(Clone, Copy)]
struct OdeState {
    q: Complex64,
    p: Complex64,
    m: [Complex64; 4], // m_qq, m_qp, m_pq, m_pp
    s_h: Complex64,
    i_corr: Complex64,
}

impl OdeState {
    fn axpy(&self, k: &OdeState, h: f64) -> OdeState {
        OdeState {
            q: self.q + h * k.q,
            p: self.p + h * k.p,
            m: [
                self.m[0] + h * k.m[0],
                self.m[1] + h * k.m[1],
                self.m[2] + h * k.m[2],
                self.m[3] + h * k.m[3],
            ],
            s_h: self.s_h + h * k.s_h,
            i_corr: self.i_corr + h * k.i_corr,
        }
    }

    fn is_finite(&self) -> bool {
        let ok = |z: Complex64| z.re.is_finite() && z.im.is_finite();
        ok(self.q)
            && ok(self.p)
            && self.m.iter().all(|z| ok(*z))
            && ok(self.s_h)
            && ok(self.i_corr)
    }
}

fn rhs<H: SmoothedHamiltonian + ?Sized>(h: &H, scale: &PhaseScale, y: &OdeState) -> OdeState {
    let (hq, hp) = h.gradient(y.q, y.p);
    let hess = h.hessian(y.q, y.p);
    let value = h.value(y.q, y.p);

    // Variational matrix in scaled coordinates: rows (X, Y) = (dq/b, dp/c).
    let a = hess.qp;
    let b = (scale.c / scale.b) * hess.pp;
    let c = -(scale.b / scale.c) * hess.qq;
    let d = -hess.qp;

    OdeState {
        q: hp,
        p: -hq,
        m: [
            a * y.m[0] + b * y.m[2],
            a * y.m[1] + b * y.m[3],
            c * y.m[0] + d * y.m[2],
            c * y.m[1] + d * y.m[3],
        ],
        s_h: y.p * hp - value,
        i_corr: 0.25 * (scale.b * scale.b * hess.qq + scale.c * scale.c * hess.pp),
    }
}

#[inline]
fn mvv_of(m: &[Complex64; 4]) -> Complex64 {
    // 2 M_vv = m_qq + m_pp + i (m_qp - m_pq)
    0.5 * (m[0] + m[3] + I * (m[1] - m[2]))
}

/// Integrate for a signed duration. Used directly by the backward pass of
/// the final-point solver; everyone else goes through [`flow`].
pub(crate) fn integrate_signed<H: SmoothedHamiltonian + ?Sized>(
    h: &H,
    q0: Complex64,
    p0: Complex64,
    t: f64,
    opts: &IntegratorOptions,
    scale: PhaseScale,
) -> Result<TrajectoryRecord> {
    if !t.is_finite() {
        return Err(Error::IntegratorFailure(format!("non-finite duration {t}")));
    }
    if !(opts.dt > 0.0) || !opts.dt.is_finite() {
        return Err(Error::IntegratorFailure(format!("invalid step {}", opts.dt)));
    }
    if (q0.im != 0.0 || p0.im != 0.0) && !h.supports_complex() {
        return Err(Error::ComplexUnsupported);
    }

    let initial = ComplexPhasePoint::new(q0, p0, scale);
    let energy_initial = h.value(q0, p0);

    let mut y = OdeState {
        q: q0,
        p: p0,
        m: [
            Complex64::new(1.0, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(1.0, 0.0),
        ],
        s_h: Complex64::new(0.0, 0.0),
        i_corr: Complex64::new(0.0, 0.0),
    };

    let n = ((t.abs() / opts.dt).ceil() as usize).max(if t == 0.0 { 0 } else { 1 });
    let step = if n == 0 { 0.0 } else { t / n as f64 };

    let mut mvv_phase = 0.0;
    let mut mvv_prev = Complex64::new(1.0, 0.0);

    for i in 0..n {
        let k1 = rhs(h, &scale, &y);
        let k2 = rhs(h, &scale, &y.axpy(&k1, 0.5 * step));
        let k3 = rhs(h, &scale, &y.axpy(&k2, 0.5 * step));
        let k4 = rhs(h, &scale, &y.axpy(&k3, step));
        let mut next = y.axpy(&k1, step / 6.0);
        next = next.axpy(&k2, step / 3.0);
        next = next.axpy(&k3, step / 3.0);
        next = next.axpy(&k4, step / 6.0);
        if !next.is_finite() {
            return Err(Error::IntegratorFailure(format!(
                "non-finite state at step {i} of {n} (t = {})",
                (i + 1) as f64 * step
            )));
        }
        let mvv = mvv_of(&next.m);
        mvv_phase += (mvv * mvv_prev.conj()).arg();
        mvv_prev = mvv;
        y = next;
    }

    let final_point = ComplexPhasePoint::new(y.q, y.p, scale);
    let tangent = TangentMatrix { m_qq: y.m[0], m_qp: y.m[1], m_pq: y.m[2], m_pp: y.m[3] };
    let energy_final = h.value(y.q, y.p);

    Ok(TrajectoryRecord::assemble(
        initial,
        final_point,
        t,
        tangent,
        y.s_h,
        y.i_corr,
        energy_initial,
        energy_final,
        mvv_phase,
    ))
}

/// Integrate Hamilton's equations from `(q0, p0)` for a duration `T >= 0`,
/// producing the trajectory record with tangent matrix and actions.
pub fn flow<H: SmoothedHamiltonian + ?Sized>(
    h: &H,
    q0: Complex64,
    p0: Complex64,
    t: f64,
    opts: &IntegratorOptions,
    scale: PhaseScale,
) -> Result<TrajectoryRecord> {
    if t < 0.0 {
        return Err(Error::Domain(format!("flow duration must be nonnegative, got {t}")));
    }
    integrate_signed(h, q0, p0, t, opts, scale)
}

/// Convenience wrapper for real initial conditions.
pub fn flow_real<H: SmoothedHamiltonian + ?Sized>(
    h: &H,
    q0: f64,
    p0: f64,
    t: f64,
    opts: &IntegratorOptions,
    scale: PhaseScale,
) -> Result<TrajectoryRecord> {
    flow(h, Complex64::new(q0, 0.0), Complex64::new(p0, 0.0), t, opts, scale)
}

/// Finite-difference consistency check of a Hamiltonian's derivatives at a
/// real point. Returns the worst relative error over gradient and Hessian.
pub fn derivative_consistency<H: SmoothedHamiltonian + ?Sized>(
    h: &H,
    q: f64,
    p: f64,
    step: f64,
) -> f64 {
    let c = |x: f64| Complex64::new(x, 0.0);
    let rel = |got: Complex64, want: Complex64| {
        (got - want).norm() / want.norm().max(1.0)
    };

    let (hq, hp) = h.gradient(c(q), c(p));
    let fd_q = (h.value(c(q + step), c(p)) - h.value(c(q - step), c(p))) / (2.0 * step);
    let fd_p = (h.value(c(q), c(p + step)) - h.value(c(q), c(p - step))) / (2.0 * step);

    let hess = h.hessian(c(q), c(p));
    let fd_qq = (h.gradient(c(q + step), c(p)).0 - h.gradient(c(q - step), c(p)).0) / (2.0 * step);
    let fd_pp = (h.gradient(c(q), c(p + step)).1 - h.gradient(c(q), c(p - step)).1) / (2.0 * step);
    let fd_qp = (h.gradient(c(q), c(p + step)).0 - h.gradient(c(q), c(p - step)).0) / (2.0 * step);

    [
        rel(hq, fd_q),
        rel(hp, fd_p),
        rel(hess.qq, fd_qq),
        rel(hess.pp, fd_pp),
        rel(hess.qp, fd_qp),
    ]
    .into_iter()
    .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    struct FreeParticle;

    impl SmoothedHamiltonian for FreeParticle {
        fn value(&self, _q: Complex64, p: Complex64) -> Complex64 {
            0.5 * p * p
        }
        fn gradient(&self, _q: Complex64, p: Complex64) -> (Complex64, Complex64) {
            (Complex64::new(0.0, 0.0), p)
        }
        fn hessian(&self, _q: Complex64, _p: Complex64) -> Hessian {
            Hessian {
                qq: Complex64::new(0.0, 0.0),
                qp: Complex64::new(0.0, 0.0),
                pp: Complex64::new(1.0, 0.0),
            }
        }
        fn supports_complex(&self) -> bool {
            true
        }
    }

    #[test]
    fn zero_time_is_identity() {
        let scale = PhaseScale::unit();
        let rec = flow_real(&FreeParticle, 0.4, -1.1, 0.0, &IntegratorOptions::default(), scale)
            .unwrap();
        assert_eq!(rec.final_point.q.re, 0.4);
        assert_eq!(rec.final_point.p.re, -1.1);
        assert_eq!(rec.tangent.symplectic_defect(), 0.0);
        assert_eq!(rec.s_hamilton, Complex64::new(0.0, 0.0));
        assert_eq!(rec.i_correction, Complex64::new(0.0, 0.0));
        assert_eq!(rec.mvv_phase, 0.0);
        // boundary term alone: S(0) = -i hbar u'v'
        let uv = rec.initial.u() * rec.initial.v();
        assert!((rec.s_complex - (-Complex64::i() * uv)).norm() < 1e-15);
    }

    #[test]
    fn free_particle_i_integrand() {
        let scale = PhaseScale::unit();
        let v = i_integrand(&FreeParticle, Complex64::new(0.3, 0.0), Complex64::new(2.0, 0.0), &scale);
        assert!((v - Complex64::new(0.25, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn free_particle_flow() {
        let scale = PhaseScale::unit();
        let opts = IntegratorOptions::with_dt(1e-3);
        let rec = flow_real(&FreeParticle, 0.0, 2.0, 1.5, &opts, scale).unwrap();
        assert!((rec.final_point.q.re - 3.0).abs() < 1e-12);
        assert!((rec.final_point.p.re - 2.0).abs() < 1e-12);
        // S_H = Int p qdot - H = Int p^2/2 = 3.0
        assert!((rec.s_hamilton.re - 3.0).abs() < 1e-10);
        assert!((rec.i_correction.re - 1.5 / 4.0).norm() < 1e-12);
        assert!(rec.tangent.symplectic_defect() < 1e-12);
    }

    #[test]
    fn rejects_bad_options() {
        let scale = PhaseScale::unit();
        let bad = IntegratorOptions::with_dt(0.0);
        assert!(flow_real(&FreeParticle, 0.0, 0.0, 1.0, &bad, scale).is_err());
        assert!(flow_real(&FreeParticle, 0.0, 0.0, -1.0, &IntegratorOptions::default(), scale)
            .is_err());
    }
}
