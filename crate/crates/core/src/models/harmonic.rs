//! Harmonic oscillator: the exactness oracle. Every propagator formula in
//! this crate is exact for it, so it pins signs and branch choices.

use num_complex::Complex64;

use crate::dynamics::{Hessian, SmoothedHamiltonian, TrajectoryRecord};
use crate::error::{Error, Result};
use crate::phase::{ComplexPhasePoint, PhaseScale, TangentMatrix};

/// Oscillator of mass `m` and frequency `omega`; its smoothed Hamiltonian is
/// `p^2/(2m) + m omega^2 q^2 / 2` (no zero-point offset), matching the
/// number-operator Hamiltonian in the coherent-state basis with `c/b = m omega`.
#[derive(Debug, Clone, Copy)]
pub struct HarmonicModel {
    pub mass: f64,
    pub omega: f64,
}

impl HarmonicModel {
    pub fn new(mass: f64, omega: f64) -> Self {
        Self { mass, omega }
    }

    /// The natural scale with `c/b = mass * omega`.
    pub fn scale(&self, hbar: f64) -> Result<PhaseScale> {
        PhaseScale::from_mass_omega(self.mass, self.omega, hbar)
    }

    pub fn period(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.omega
    }

    fn check_scale(&self, scale: &PhaseScale) -> Result<()> {
        let want = self.mass * self.omega;
        if ((scale.c / scale.b) - want).abs() > 1e-12 * want.max(1.0) {
            return Err(Error::Domain(format!(
                "scale has c/b = {}, model needs {}",
                scale.c / scale.b,
                want
            )));
        }
        Ok(())
    }
}

impl SmoothedHamiltonian for HarmonicModel {
    fn value(&self, q: Complex64, p: Complex64) -> Complex64 {
        0.5 * p * p / self.mass + 0.5 * self.mass * self.omega * self.omega * q * q
    }

    fn gradient(&self, q: Complex64, p: Complex64) -> (Complex64, Complex64) {
        (self.mass * self.omega * self.omega * q, p / self.mass)
    }

    fn hessian(&self, _q: Complex64, _p: Complex64) -> Hessian {
        Hessian {
            qq: Complex64::new(self.mass * self.omega * self.omega, 0.0),
            qp: Complex64::new(0.0, 0.0),
            pp: Complex64::new(1.0 / self.mass, 0.0),
        }
    }

    fn supports_complex(&self) -> bool {
        true
    }
}

/// Exact oscillator propagator
/// `exp(-|z1|^2/2 - |z2|^2/2 + e^{-i omega T} z1 conj(z2))`.
pub fn ho_exact(z1: Complex64, z2: Complex64, t: f64, omega: f64) -> Complex64 {
    let rot = Complex64::from_polar(1.0, -omega * t);
    (rot * z1 * z2.conj() - 0.5 * (z1.norm_sqr() + z2.norm_sqr())).exp()
}

/// Closed-form trajectory record; accepts complex initial data.
///
/// The scaled tangent matrix is the rotation by `omega t` regardless of the
/// starting point, `S_H = (q''p'' - q'p')/2`, and the second-derivative
/// correction integrates to `hbar omega t / 2`.
pub fn ho_flow_analytic(
    model: &HarmonicModel,
    q0: Complex64,
    p0: Complex64,
    t: f64,
    scale: PhaseScale,
) -> Result<TrajectoryRecord> {
    model.check_scale(&scale)?;
    let (omega, m) = (model.omega, model.mass);
    let theta = omega * t;
    let (s, c) = theta.sin_cos();

    let q1 = q0 * c + p0 * s / (m * omega);
    let p1 = -m * omega * q0 * s + p0 * c;

    let tangent = TangentMatrix::from_real(c, s, -s, c);
    let s_hamilton = 0.5 * (q1 * p1 - q0 * p0);
    let i_correction = Complex64::new(0.5 * scale.hbar * omega * t, 0.0);

    let initial = ComplexPhasePoint::new(q0, p0, scale);
    let final_point = ComplexPhasePoint::new(q1, p1, scale);
    let e0 = model.value(q0, p0);
    let e1 = model.value(q1, p1);

    Ok(TrajectoryRecord::assemble(
        initial,
        final_point,
        t,
        tangent,
        s_hamilton,
        i_correction,
        e0,
        e1,
        theta,
    ))
}
