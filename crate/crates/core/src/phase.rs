//! Unit system, coherent-state label algebra and the real <-> complex
//! tangent-matrix conversion used by every other module.
//!
//! A coherent state is labelled by `z = (q/b + i p/c) / sqrt(2)` where the
//! scales `b` (length) and `c` (momentum) satisfy `b c = hbar`. Classical
//! displacements are measured in the same scaled units, so tangent matrices
//! are dimensionless.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Default tolerance for the symplectic-determinant diagnostic.
pub const SYMPLECTIC_TOL: f64 = 1e-9;

const I: Complex64 = Complex64::new(0.0, 1.0);

#[inline]
fn c64(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// The (b, c, hbar) unit system. Invariant: `b > 0`, `c > 0`, `b * c == hbar`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseScale {
    pub b: f64,
    pub c: f64,
    pub hbar: f64,
}

impl PhaseScale {
    /// Scale from the position width `b`; `c` is derived so `b c = hbar` holds exactly.
    pub fn from_b(b: f64, hbar: f64) -> Result<Self> {
        if !(b > 0.0) || !b.is_finite() {
            return Err(Error::InvalidScale(format!("b = {b} must be positive")));
        }
        if !(hbar > 0.0) || !hbar.is_finite() {
            return Err(Error::InvalidScale(format!("hbar = {hbar} must be positive")));
        }
        Ok(Self { b, c: hbar / b, hbar })
    }

    /// Scale from the momentum width `c`.
    pub fn from_c(c: f64, hbar: f64) -> Result<Self> {
        if !(c > 0.0) || !c.is_finite() {
            return Err(Error::InvalidScale(format!("c = {c} must be positive")));
        }
        let s = Self::from_b(hbar / c, hbar)?;
        Ok(Self { c, ..s })
    }

    /// Scale of the oscillator ground state with `c/b = mass * omega`.
    pub fn from_mass_omega(mass: f64, omega: f64, hbar: f64) -> Result<Self> {
        if !(mass > 0.0 && omega > 0.0) {
            return Err(Error::InvalidScale(format!(
                "mass = {mass}, omega = {omega} must be positive"
            )));
        }
        Self::from_b((hbar / (mass * omega)).sqrt(), hbar)
    }

    /// b = c = hbar = 1.
    pub fn unit() -> Self {
        Self { b: 1.0, c: 1.0, hbar: 1.0 }
    }

    /// Position uncertainty `b / sqrt(2)`.
    pub fn sigma_q(&self) -> f64 {
        self.b * std::f64::consts::FRAC_1_SQRT_2
    }

    /// Momentum uncertainty `c / sqrt(2)`.
    pub fn sigma_p(&self) -> f64 {
        self.c * std::f64::consts::FRAC_1_SQRT_2
    }

    pub fn label(&self, q: f64, p: f64) -> CoherentLabel {
        CoherentLabel { q, p, scale: *self }
    }
}

/// Dimensionless label `z` of a coherent state together with its `(q, p)` centre.
///
/// The label keeps its owning scale so formulas that mix `q`, `p` and `z`
/// can never pair a label with the wrong unit system.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoherentLabel {
    pub q: f64,
    pub p: f64,
    pub scale: PhaseScale,
}

impl CoherentLabel {
    pub fn z(&self) -> Complex64 {
        label_from_qp(self.q, self.p, &self.scale)
    }
}

/// `z = (q/b + i p/c) / sqrt(2)`.
pub fn label_from_qp(q: f64, p: f64, scale: &PhaseScale) -> Complex64 {
    c64(q / scale.b, p / scale.c) * std::f64::consts::FRAC_1_SQRT_2
}

/// Inverse of [`label_from_qp`]: `(q, p) = (sqrt(2) b Re z, sqrt(2) c Im z)`.
pub fn qp_from_label(z: Complex64, scale: &PhaseScale) -> (f64, f64) {
    let s = std::f64::consts::SQRT_2;
    (s * scale.b * z.re, s * scale.c * z.im)
}

/// Coherent-state overlap `<z2|z1> = exp(-|z1|^2/2 - |z2|^2/2 + z1 conj(z2))`.
pub fn overlap(z1: Complex64, z2: Complex64) -> Complex64 {
    (z1 * z2.conj() - 0.5 * (z1.norm_sqr() + z2.norm_sqr())).exp()
}

/// A phase-space point with complex position and momentum.
///
/// `u = (q/b + i p/c)/sqrt(2)` and `v = (q/b - i p/c)/sqrt(2)`; for complex
/// `(q, p)` the variable `v` is not the conjugate of `u`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexPhasePoint {
    pub q: Complex64,
    pub p: Complex64,
    pub scale: PhaseScale,
}

impl ComplexPhasePoint {
    pub fn new(q: Complex64, p: Complex64, scale: PhaseScale) -> Self {
        Self { q, p, scale }
    }

    pub fn from_real(q: f64, p: f64, scale: PhaseScale) -> Self {
        Self { q: c64(q, 0.0), p: c64(p, 0.0), scale }
    }

    /// Point with `u, v` prescribed: `q = b (u+v)/sqrt(2)`, `p = -i c (u-v)/sqrt(2)`.
    pub fn from_uv(u: Complex64, v: Complex64, scale: PhaseScale) -> Self {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        Self { q: scale.b * (u + v) * s, p: -I * scale.c * (u - v) * s, scale }
    }

    pub fn u(&self) -> Complex64 {
        (self.q / self.scale.b + I * self.p / self.scale.c) * std::f64::consts::FRAC_1_SQRT_2
    }

    pub fn v(&self) -> Complex64 {
        (self.q / self.scale.b - I * self.p / self.scale.c) * std::f64::consts::FRAC_1_SQRT_2
    }

    pub fn is_real(&self, tol: f64) -> bool {
        self.q.im.abs() <= tol && self.p.im.abs() <= tol
    }
}

/// Tangent (monodromy) matrix in uncertainty-scaled coordinates:
/// `(dq''/b, dp''/c) = m (dq'/b, dp'/c)`.
///
/// Entries are complex so the same type serves complexified flows; real
/// trajectories keep the imaginary parts at zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TangentMatrix {
    pub m_qq: Complex64,
    pub m_qp: Complex64,
    pub m_pq: Complex64,
    pub m_pp: Complex64,
}

impl TangentMatrix {
    pub fn identity() -> Self {
        Self {
            m_qq: c64(1.0, 0.0),
            m_qp: c64(0.0, 0.0),
            m_pq: c64(0.0, 0.0),
            m_pp: c64(1.0, 0.0),
        }
    }

    pub fn from_real(m_qq: f64, m_qp: f64, m_pq: f64, m_pp: f64) -> Self {
        Self {
            m_qq: c64(m_qq, 0.0),
            m_qp: c64(m_qp, 0.0),
            m_pq: c64(m_pq, 0.0),
            m_pp: c64(m_pp, 0.0),
        }
    }

    pub fn det(&self) -> Complex64 {
        self.m_qq * self.m_pp - self.m_qp * self.m_pq
    }

    /// `|det m - 1|`, the symplectic-drift diagnostic.
    pub fn symplectic_defect(&self) -> f64 {
        (self.det() - 1.0).norm()
    }

    pub fn check_symplectic(&self, tol: f64) -> Result<()> {
        let defect = self.symplectic_defect();
        if defect <= tol {
            Ok(())
        } else {
            Err(Error::Domain(format!(
                "tangent matrix determinant drifted by {defect:.3e} (tol {tol:.3e})"
            )))
        }
    }

    pub fn is_real(&self, tol: f64) -> bool {
        self.m_qq.im.abs() <= tol
            && self.m_qp.im.abs() <= tol
            && self.m_pq.im.abs() <= tol
            && self.m_pp.im.abs() <= tol
    }

    /// `M1 = m_qq + i m_qp`.
    pub fn m1(&self) -> Complex64 {
        self.m_qq + I * self.m_qp
    }

    /// `M2 = m_pp + i m_qp`.
    pub fn m2(&self) -> Complex64 {
        self.m_pp + I * self.m_qp
    }

    /// `M3 = m_pp + i m_pq`.
    pub fn m3(&self) -> Complex64 {
        self.m_pp + I * self.m_pq
    }

    /// `M4 = m_qq + i m_pq`.
    pub fn m4(&self) -> Complex64 {
        self.m_qq + I * self.m_pq
    }

    pub fn complex_tangent(&self) -> ComplexTangent {
        complex_tangent(self)
    }
}

/// Tangent matrix in the `(u, v)` representation:
/// `(du'', dv'') = M (du', dv')`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexTangent {
    pub m_uu: Complex64,
    pub m_uv: Complex64,
    pub m_vu: Complex64,
    pub m_vv: Complex64,
}

impl ComplexTangent {
    pub fn det(&self) -> Complex64 {
        self.m_uu * self.m_vv - self.m_uv * self.m_vu
    }
}

/// Basis change from the scaled `(q, p)` tangent matrix to the `(u, v)` one:
///
/// ```text
/// 2 M_uu = m_qq + m_pp + i (m_pq - m_qp)
/// 2 M_uv = m_qq - m_pp + i (m_pq + m_qp)
/// 2 M_vu = m_qq - m_pp - i (m_pq + m_qp)
/// 2 M_vv = m_qq + m_pp + i (m_qp - m_pq)
/// ```
pub fn complex_tangent(m: &TangentMatrix) -> ComplexTangent {
    let sum = m.m_qq + m.m_pp;
    let dif = m.m_qq - m.m_pp;
    let plus = m.m_pq + m.m_qp;
    let minus = m.m_pq - m.m_qp;
    ComplexTangent {
        m_uu: 0.5 * (sum + I * minus),
        m_uv: 0.5 * (dif + I * plus),
        m_vu: 0.5 * (dif - I * plus),
        m_vv: 0.5 * (sum - I * minus),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn near(a: Complex64, b: Complex64, tol: f64) -> bool {
        (a - b).norm() <= tol
    }

    #[test]
    fn label_examples() {
        let s = PhaseScale::unit();
        assert_eq!(label_from_qp(0.0, 0.0, &s), c64(0.0, 0.0));
        assert!(near(
            label_from_qp(0.0, 10.0, &s),
            c64(0.0, 7.071_067_811_865_475_5),
            1e-15
        ));
        assert!(near(
            label_from_qp(1.0, -1.0, &s),
            c64(0.707_106_781_186_547_6, -0.707_106_781_186_547_6),
            1e-15
        ));
    }

    #[test]
    fn label_round_trip() {
        let s = PhaseScale::from_mass_omega(2.0, 0.7, 1.3).unwrap();
        let (q, p) = (531.25, -872.5);
        let (q2, p2) = qp_from_label(label_from_qp(q, p, &s), &s);
        assert!((q - q2).abs() <= 1e-14 * q.abs());
        assert!((p - p2).abs() <= 1e-14 * p.abs());
    }

    #[test]
    fn overlap_examples() {
        let z = c64(0.3, -1.2);
        assert!(near(overlap(z, z), c64(1.0, 0.0), 1e-15));
        assert!(near(
            overlap(z, c64(0.0, 0.0)),
            c64((-0.5 * z.norm_sqr()).exp(), 0.0),
            1e-15
        ));
        // exp(-1 - i)
        assert!(near(
            overlap(c64(1.0, 0.0), c64(0.0, 1.0)),
            c64(0.198_766_110_346_412_9, -0.309_559_875_653_112_2),
            1e-15
        ));
    }

    #[test]
    fn complex_tangent_examples() {
        let id = complex_tangent(&TangentMatrix::identity());
        assert!(near(id.m_uu, c64(1.0, 0.0), 1e-15));
        assert!(near(id.m_vv, c64(1.0, 0.0), 1e-15));
        assert!(near(id.m_uv, c64(0.0, 0.0), 1e-15));
        assert!(near(id.m_vu, c64(0.0, 0.0), 1e-15));

        let theta: f64 = 0.83;
        let rot = TangentMatrix::from_real(theta.cos(), theta.sin(), -theta.sin(), theta.cos());
        let mt = complex_tangent(&rot);
        assert!(near(mt.m_uu, (-I * theta).exp(), 1e-15));
        assert!(near(mt.m_vv, (I * theta).exp(), 1e-15));
        assert!(near(mt.m_uv, c64(0.0, 0.0), 1e-15));
        assert!(near(mt.m_vu, c64(0.0, 0.0), 1e-15));

        let s = 1.7;
        let shear = TangentMatrix::from_real(1.0, s, 0.0, 1.0);
        let mt = complex_tangent(&shear);
        assert!(near(mt.m_uu, c64(1.0, -0.5 * s), 1e-15));
        assert!(near(mt.m_uv, c64(0.0, 0.5 * s), 1e-15));
        assert!(near(mt.m_vu, c64(0.0, -0.5 * s), 1e-15));
        assert!(near(mt.m_vv, c64(1.0, 0.5 * s), 1e-15));
        assert!(near(mt.det(), c64(1.0, 0.0), 1e-15));
    }

    #[test]
    fn scale_couples_b_and_c() {
        let s = PhaseScale::from_b(0.37, 2.11).unwrap();
        assert_eq!(s.b * s.c, s.hbar);
        assert!(PhaseScale::from_b(-1.0, 1.0).is_err());
        assert!(PhaseScale::from_b(1.0, 0.0).is_err());
    }

    /// The M1..M4 combinations reduce to ratios of complex-tangent entries
    /// whenever `det m = 1`; these identities are what the mixed-boundary
    /// coefficient sets rely on.
    #[test]
    fn m1_to_m4_identities() {
        let m = TangentMatrix::from_real(1.31, -0.42, 0.78, (1.0 + (-0.42) * 0.78) / 1.31);
        assert!(m.symplectic_defect() < 1e-12);
        let mt = m.complex_tangent();
        let two_i = 2.0 * I;
        assert!(near(1.0 - m.m1() * m.m2(), -two_i * m.m_qp * mt.m_vv, 1e-12));
        assert!(near(
            1.0 + m.m2() * m.m3().conj(),
            2.0 * m.m_pp * mt.m_vv,
            1e-12
        ));
        assert!(near(
            1.0 + m.m1() * m.m4().conj(),
            2.0 * m.m_qq * mt.m_vv,
            1e-12
        ));
        assert!(near(
            1.0 - m.m3().conj() * m.m4().conj(),
            two_i * m.m_pq * mt.m_vv,
            1e-12
        ));
    }
}
