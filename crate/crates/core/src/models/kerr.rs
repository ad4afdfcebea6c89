//! Kerr oscillator: energies `hbar omega n^2`, an exact Fock-sum propagator,
//! and closed-form trajectories, tangent matrices and actions. The model is
//! the nontrivial test bed: classical orbits are circles whose angular
//! frequency grows with energy, which produces recurrences of the return
//! probability at the classical period and a full revival at `2 pi / omega`.

use num_complex::Complex64;

use crate::dynamics::{Hessian, SmoothedHamiltonian, TrajectoryRecord};
use crate::error::{Error, Result};
use crate::phase::{ComplexPhasePoint, PhaseScale, TangentMatrix};
use crate::solvers::ScanWindow;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Quartic oscillator with smoothed Hamiltonian `hbar omega n (n + 1)` where
/// `n = (q^2 + p^2) / (2 hbar)` in its natural scale `b = c = sqrt(hbar)`.
#[derive(Debug, Clone, Copy)]
pub struct KerrModel {
    pub omega: f64,
    pub hbar: f64,
}

impl KerrModel {
    pub fn new(omega: f64, hbar: f64) -> Self {
        Self { omega, hbar }
    }

    /// The paper-free shorthand used throughout the tests: omega = hbar = 1.
    pub fn standard() -> Self {
        Self::new(1.0, 1.0)
    }

    pub fn scale(&self) -> PhaseScale {
        PhaseScale::from_b(self.hbar.sqrt(), self.hbar).expect("hbar > 0")
    }

    /// `sigma = 2 n + 1 = (q^2 + p^2)/hbar + 1`, conserved along the flow.
    /// The orbit through `(q, p)` rotates at angular frequency `omega * sigma`.
    pub fn sigma(&self, q: f64, p: f64) -> f64 {
        (q * q + p * p) / self.hbar + 1.0
    }

    /// Dominant occupation number of the coherent state `z`.
    pub fn n0(&self, z: Complex64) -> f64 {
        z.norm_sqr()
    }

    /// Recurrence time of the dominant classical orbit, `pi / (n0 omega)`.
    pub fn t_classical(&self, z: Complex64) -> f64 {
        std::f64::consts::PI / (self.n0(z) * self.omega)
    }

    /// Full quantum revival period `2 pi / omega`.
    pub fn t_revival(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.omega
    }

    /// Orbital period `2 pi / (omega sigma)` at the point `(q, p)`.
    pub fn orbit_period(&self, q: f64, p: f64) -> f64 {
        2.0 * std::f64::consts::PI / (self.omega * self.sigma(q, p))
    }
}

impl SmoothedHamiltonian for KerrModel {
    fn value(&self, q: Complex64, p: Complex64) -> Complex64 {
        let n = (q * q + p * p) / (2.0 * self.hbar);
        self.hbar * self.omega * n * (n + 1.0)
    }

    fn gradient(&self, q: Complex64, p: Complex64) -> (Complex64, Complex64) {
        let sigma = (q * q + p * p) / self.hbar + 1.0;
        (self.omega * sigma * q, self.omega * sigma * p)
    }

    fn hessian(&self, q: Complex64, p: Complex64) -> Hessian {
        let sigma = (q * q + p * p) / self.hbar + 1.0;
        let w = self.omega;
        Hessian {
            qq: w * (sigma + 2.0 * q * q / self.hbar),
            qp: 2.0 * w * q * p / self.hbar,
            pp: w * (sigma + 2.0 * p * p / self.hbar),
        }
    }

    fn supports_complex(&self) -> bool {
        true
    }
}

/// Truncation of the Fock sum with a certified tail bound.
#[derive(Debug, Clone, Copy)]
pub struct FockTruncation {
    pub n_max: usize,
    pub tail_bound: f64,
}

impl FockTruncation {
    /// Default sized for weight `x = |z1 conj(z2)|`: `x + 12 sqrt(x) + 30`
    /// terms keep the Poisson tail far below 1e-12.
    pub fn for_weight(x: f64) -> Self {
        let x = x.max(0.0);
        Self {
            n_max: (x + 12.0 * x.sqrt() + 30.0).ceil() as usize,
            tail_bound: 1e-12,
        }
    }

    pub fn for_labels(z1: Complex64, z2: Complex64) -> Self {
        Self::for_weight((z1 * z2.conj()).norm())
    }
}

/// Exact propagator `N sum_n (z1 conj(z2))^n / n! exp(-i n^2 omega T)`.
pub fn kerr_exact(
    model: &KerrModel,
    z1: Complex64,
    z2: Complex64,
    t: f64,
    trunc: &FockTruncation,
) -> Result<Complex64> {
    let w = z1 * z2.conj();
    let x = w.norm();
    let norm = (-0.5 * (z1.norm_sqr() + z2.norm_sqr())).exp();

    let mut sum = Complex64::new(0.0, 0.0);
    let mut term = Complex64::new(1.0, 0.0); // w^n / n!
    for n in 0..=trunc.n_max {
        let phase = Complex64::from_polar(1.0, -(n as f64) * (n as f64) * model.omega * t);
        sum += term * phase;
        term *= w / (n as f64 + 1.0);
    }

    // Geometric bound on the dropped tail, in the normalised sum.
    let m = trunc.n_max as f64 + 2.0;
    let tail = if x < m {
        norm * term.norm() / (1.0 - x / m)
    } else {
        f64::INFINITY
    };
    if !(tail <= trunc.tail_bound) {
        return Err(Error::TruncationInsufficient { tail, bound: trunc.tail_bound });
    }

    Ok(norm * sum)
}

/// Closed-form trajectory from a real point `(q0, p0)`: rotation by
/// `omega sigma t` composed with the energy-shear of the local part, with
/// actions `S = hbar omega (sigma-1)^2 t / 4 - i hbar (sigma-1)/2` and
/// `I = hbar omega (sigma - 1/2) t`.
pub fn kerr_flow_analytic(model: &KerrModel, q0: f64, p0: f64, t: f64) -> TrajectoryRecord {
    let scale = model.scale();
    let (w, hbar) = (model.omega, model.hbar);
    let sigma = model.sigma(q0, p0);
    let rho = sigma - 1.0;
    let theta = w * sigma * t;
    let (s, c) = theta.sin_cos();

    let q1 = q0 * c + p0 * s;
    let p1 = p0 * c - q0 * s;

    // rotation(theta) * [[1 + 2 w q0 p0 t / hbar, 2 w p0^2 t / hbar],
    //                    [-2 w q0^2 t / hbar,     1 - 2 w q0 p0 t / hbar]]
    let g = 2.0 * w * t / hbar;
    let (a11, a12, a21, a22) = (1.0 + g * q0 * p0, g * p0 * p0, -g * q0 * q0, 1.0 - g * q0 * p0);
    let tangent = TangentMatrix::from_real(
        c * a11 + s * a21,
        c * a12 + s * a22,
        -s * a11 + c * a21,
        -s * a12 + c * a22,
    );

    let s_real = hbar * w * rho * rho * t / 4.0;
    let s_hamilton =
        Complex64::new(s_real, 0.0) - 0.5 * Complex64::new(q0 * p0 - q1 * p1, 0.0);
    let i_correction = Complex64::new(hbar * w * (sigma - 0.5) * t, 0.0);

    let mvv_phase = theta + (w * rho * t).atan();

    let initial = ComplexPhasePoint::from_real(q0, p0, scale);
    let final_point = ComplexPhasePoint::from_real(q1, p1, scale);
    let energy = model.value(initial.q, initial.p);

    TrajectoryRecord::assemble(
        initial,
        final_point,
        t,
        tangent,
        s_hamilton,
        i_correction,
        energy,
        energy,
        mvv_phase,
    )
}

/// Complexified flow in the `(u, v)` variables: `u v` is conserved, so
/// `u(T) = u0 exp(-i (2 u0 v0 + 1) omega T)` and `v(T)` carries the opposite
/// phase.
pub fn kerr_complex_flow(
    model: &KerrModel,
    u0: Complex64,
    v0: Complex64,
    t: f64,
) -> (Complex64, Complex64) {
    let phase = (2.0 * u0 * v0 + 1.0) * model.omega * t;
    (u0 * (-I * phase).exp(), v0 * (I * phase).exp())
}

/// Initial momenta of the diagonal position-to-position trajectories at
/// `q1 = q2 = 0`: the stationary root plus the orbit family
/// `p_i(n) = sqrt(hbar (2 n pi / (omega T) - 1))`, kept while inside the
/// scan window. Ascending order, stationary root first.
pub fn kerr_pi_roots(model: &KerrModel, t: f64, window: &ScanWindow) -> Vec<f64> {
    kerr_pi_roots_indexed(model, t, window)
        .into_iter()
        .map(|(_, p)| p)
        .collect()
}

/// Same as [`kerr_pi_roots`] but keeping the loop count `n` (0 = stationary).
pub fn kerr_pi_roots_indexed(model: &KerrModel, t: f64, window: &ScanWindow) -> Vec<(usize, f64)> {
    let mut out = vec![(0usize, 0.0)];
    if t <= 0.0 {
        return out;
    }
    let half = window.half_width_units * model.scale().sigma_p();
    let hi = window.center + half;
    let lo = window.center - half;
    let mut n = 1usize;
    loop {
        let rho = 2.0 * (n as f64) * std::f64::consts::PI / (model.omega * t) - 1.0;
        if rho <= 0.0 {
            break;
        }
        let p_i = (model.hbar * rho).sqrt();
        if p_i > hi {
            break;
        }
        if p_i >= lo {
            out.push((n, p_i));
        }
        n += 1;
        if n > 10_000 {
            break;
        }
    }
    out
}

/// Contribution of the stationary trajectory to the diagonal
/// position-to-position propagator at `q = 0`, momentum `p`:
/// `exp(-i (p^2/hbar) sin(omega T / 2) e^{-i omega T / 2})`.
pub fn kerr_k0(model: &KerrModel, p: f64, t: f64) -> Complex64 {
    let rho = p * p / model.hbar;
    let half = 0.5 * model.omega * t;
    (-I * rho * half.sin() * (-I * half).exp()).exp()
}

/// Contribution of the `n`-loop trajectory (`n >= 1`) to the same propagator.
/// Requires `2 n pi > omega T` so the root momentum is real.
pub fn kerr_kn(model: &KerrModel, p: f64, n: usize, t: f64) -> Result<Complex64> {
    if n == 0 {
        return Ok(kerr_k0(model, p, t));
    }
    let wt = model.omega * t;
    let rho_n = 2.0 * (n as f64) * std::f64::consts::PI / wt - 1.0;
    if rho_n <= 0.0 {
        return Err(Error::Domain(format!(
            "no real n = {n} trajectory: 2 n pi / (omega T) - 1 = {rho_n}"
        )));
    }
    let p_i = (model.hbar * rho_n).sqrt();
    let x = rho_n * wt; // = 2 n pi - omega T
    let one_ix = Complex64::new(1.0, x);

    let gauss = -(I * x / one_ix) * (p_i - p) * (p_i - p) / model.hbar;
    let phase = I * (wt / 4.0) * (rho_n * rho_n + 4.0 * rho_n + 2.0);
    // The square-root branch is continued through n full loops, which
    // contributes (-1)^n relative to the principal root.
    let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
    Ok(sign / one_ix.sqrt() * (gauss + phase).exp())
}

/// Closed form of the leaving-trajectory propagator for the diagonal state
/// at `q = 0`, momentum `p`.
pub fn kerr_kq1p1_closed(model: &KerrModel, p: f64, t: f64) -> Complex64 {
    let rho = p * p / model.hbar;
    let sigma = rho + 1.0;
    let wt = model.omega * t;
    let theta = sigma * wt;
    let half = 0.5 * theta;
    let one_ix = Complex64::new(1.0, rho * wt);

    let core = I * (wt / 4.0) * (rho * rho + 2.0 * rho);
    let linear = -I * rho * half.sin() * (-I * half).exp();
    let quad = I * rho * rho * wt * (-I * theta).exp() * half.sin() * half.sin() / one_ix;
    (core + linear + quad).exp() / one_ix.sqrt()
}

/// Short-time decay coefficients `C` in `|K|^2 ~ 1 - C T^2` for the diagonal
/// state at `q = 0`, momentum `p` (omega = hbar = 1 scenario).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KerrShortTime {
    Exact,
    Q1P1,
    P1Q2,
    Q1P2,
    P1P2,
    /// Stationary-orbit decay as quoted alongside the closed form.
    StationaryQuoted,
    /// Stationary-orbit decay obtained by expanding the closed form itself.
    StationaryDirect,
}

pub fn kerr_short_time(p: f64, kind: KerrShortTime) -> f64 {
    let (p2, p4, p6) = (p * p, p.powi(4), p.powi(6));
    match kind {
        KerrShortTime::Exact | KerrShortTime::Q1P1 | KerrShortTime::P1Q2 => {
            0.5 * (p6 + 3.0 * p4 + p2)
        }
        KerrShortTime::Q1P2 => p6 + 2.5 * p4 + p2,
        KerrShortTime::P1P2 => 0.5 * p4,
        KerrShortTime::StationaryQuoted => 2.0 * p2,
        KerrShortTime::StationaryDirect => 0.5 * p2,
    }
}

/// Small-time seed for the initial position of momentum-constrained
/// shooting at the diagonal state: the root of `q_i = -p sigma T / 2` with
/// `sigma = q_i^2 + p^2 + 1`, written in a form stable as `p T -> 0`:
///
/// `q_i = -p T (p^2 + 1) / (1 + sqrt(1 - p^2 T^2 (p^2 + 1)))`.
pub fn kerr_shorttime_qi(p: f64, t: f64) -> Result<f64> {
    let sigma0 = p * p + 1.0;
    if 4.0 * p * p * t * t * sigma0 > 1.0 {
        return Err(Error::Domain(format!(
            "short-time seed outside domain: 4 p^2 T^2 (p^2+1) = {} > 1",
            4.0 * p * p * t * t * sigma0
        )));
    }
    let disc = 1.0 - p * p * t * t * sigma0;
    Ok(-p * t * sigma0 / (1.0 + disc.sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn near(a: Complex64, b: Complex64, tol: f64) -> bool {
        (a - b).norm() <= tol
    }

    #[test]
    fn exact_diagonal_basics() {
        let model = KerrModel::standard();
        let z = Complex64::new(0.0, 10.0 / 2.0f64.sqrt());
        let trunc = FockTruncation::for_labels(z, z);

        let k0 = kerr_exact(&model, z, z, 0.0, &trunc).unwrap();
        assert!(near(k0, Complex64::new(1.0, 0.0), 1e-12));

        let kr = kerr_exact(&model, z, z, model.t_revival(), &trunc).unwrap();
        assert!((kr.norm_sqr() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn exact_half_revival_resummation() {
        let model = KerrModel::standard();
        // At T = pi the phases reduce to (-1)^n, giving K = exp(-2 |z|^2).
        let z = Complex64::new(2.0, 0.0); // |z|^2 = 4
        let trunc = FockTruncation::for_labels(z, z);
        let k = kerr_exact(&model, z, z, PI, &trunc).unwrap();
        assert!((k.norm_sqr() - (-16.0f64).exp()).abs() < 1e-12);

        let z50 = Complex64::new(0.0, 50.0f64.sqrt()); // |z|^2 = 50
        let trunc = FockTruncation::for_labels(z50, z50);
        let k = kerr_exact(&model, z50, z50, PI, &trunc).unwrap();
        assert!((k.norm_sqr() - (-200.0f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn exact_truncation_control() {
        let model = KerrModel::standard();
        let z = Complex64::new(0.0, 10.0 / 2.0f64.sqrt());
        let short = FockTruncation { n_max: 20, tail_bound: 1e-12 };
        assert!(matches!(
            kerr_exact(&model, z, z, 0.3, &short),
            Err(Error::TruncationInsufficient { .. })
        ));

        let base = FockTruncation::for_labels(z, z);
        let double = FockTruncation { n_max: 2 * base.n_max, ..base };
        let a = kerr_exact(&model, z, z, 0.37, &base).unwrap();
        let b = kerr_exact(&model, z, z, 0.37, &double).unwrap();
        assert!((a - b).norm() < 1e-12);
    }

    #[test]
    fn analytic_flow_examples() {
        let model = KerrModel::standard();
        let t = 2.0 * PI / 101.0;
        let rec = kerr_flow_analytic(&model, 0.0, 10.0, t);
        assert!((rec.final_point.q.re - 0.0).abs() < 1e-9);
        assert!((rec.final_point.p.re - 10.0).abs() < 1e-9);
        assert!((rec.tangent.m_qq.re - 1.0).abs() < 1e-9);
        assert!((rec.tangent.m_qp.re - 200.0 * t).abs() < 1e-9);
        assert!(rec.tangent.m_pq.norm() < 1e-9);
        assert!(rec.tangent.symplectic_defect() < 1e-12);

        // fixed point: S = 0 boundary apart, I = T/2
        let rec0 = kerr_flow_analytic(&model, 0.0, 0.0, 0.7);
        assert!(rec0.s_complex.norm() < 1e-15);
        assert!((rec0.i_correction.re - 0.35).abs() < 1e-15);
    }

    #[test]
    fn complex_flow_reduces_to_real_rotation() {
        let model = KerrModel::standard();
        let u0 = Complex64::new(0.3, 0.8);
        let t = 0.21;
        let (u1, v1) = kerr_complex_flow(&model, u0, u0.conj(), t);
        assert!((v1 - u1.conj()).norm() < 1e-12);
        let sigma = 2.0 * u0.norm_sqr() + 1.0;
        assert!(near(u1, u0 * (-I * sigma * t).exp(), 1e-12));
        // u v conserved
        assert!(near(u1 * v1, u0 * u0.conj(), 1e-12));
    }

    #[test]
    fn pi_root_examples() {
        let model = KerrModel::standard();
        let window = ScanWindow::new(10.0, 8.0, 64).unwrap();
        let t = 2.0 * PI / 101.0;
        let roots = kerr_pi_roots(&model, t, &window);
        assert!((roots[1] - 10.0).abs() < 1e-12);
        assert!((roots[2] - 201.0f64.sqrt()).abs() < 1e-12);
        assert!((roots[2] - 14.177_446_878_757_825).abs() < 1e-9);

        let window = ScanWindow::new(0.3, 1.0, 64).unwrap();
        let roots = kerr_pi_roots(&model, 6.0, &window);
        assert!((roots[1] - (PI / 3.0 - 1.0).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn closed_form_contributions() {
        let model = KerrModel::standard();
        assert!(near(
            kerr_kq1p1_closed(&model, 0.0, 0.9),
            Complex64::new(1.0, 0.0),
            1e-15
        ));
        assert!(near(
            kerr_k0(&model, 3.0, 2.0 * PI),
            Complex64::new(1.0, 0.0),
            1e-12
        ));

        let t = 2.0 * PI / 101.0;
        let k1 = kerr_kn(&model, 10.0, 1, t).unwrap();
        let expect = (1.0 + 1e4 * t * t).powf(-0.5);
        assert!((k1.norm_sqr() - expect).abs() < 1e-12);
        assert!((k1.norm_sqr() - 0.159).abs() < 5e-4);

        assert!(kerr_kn(&model, 10.0, 1, 7.0).is_err());
    }

    #[test]
    fn short_time_coefficients() {
        assert_eq!(kerr_short_time(10.0, KerrShortTime::Exact), 515_050.0);
        assert_eq!(kerr_short_time(10.0, KerrShortTime::Q1P2), 1_025_100.0);
        assert_eq!(kerr_short_time(10.0, KerrShortTime::P1P2), 5_000.0);
        assert_eq!(kerr_short_time(0.0, KerrShortTime::Q1P1), 0.0);
    }

    #[test]
    fn short_time_qi_seed() {
        let q = kerr_shorttime_qi(10.0, 1e-4).unwrap();
        assert!((q + 0.0505).abs() < 1e-4);
        assert_eq!(kerr_shorttime_qi(10.0, 0.0).unwrap(), 0.0);
        assert!(kerr_shorttime_qi(10.0, 0.1).is_err());
    }

    #[test]
    fn stationary_decay_follows_direct_expansion() {
        let model = KerrModel::standard();
        let p = 3.0;
        let t = 1e-4;
        let k0 = kerr_k0(&model, p, t);
        let c_direct = (1.0 - k0.norm_sqr()) / (t * t);
        assert!(
            (c_direct - kerr_short_time(p, KerrShortTime::StationaryDirect)).abs()
                < 1e-2 * kerr_short_time(p, KerrShortTime::StationaryDirect)
        );
    }
}
