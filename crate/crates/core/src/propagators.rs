//! Assembly of the coherent-state propagator from classical trajectories.
//!
//! One complex-trajectory reference formula plus six approximations built on
//! real trajectories, distinguished by which pair of boundary data the real
//! trajectory satisfies. Every formula shares the same skeleton
//!
//! ```text
//! K = sum  N / sqrt(M_vv) * exp{ i (S + I)/hbar + corrections }
//! ```
//!
//! where the corrections are first and second order in the mismatch between
//! the trajectory endpoints and the coherent-state labels. All correction
//! exponents are accumulated into a single complex number before
//! exponentiating, so large cancelling terms never overflow.

use num_complex::Complex64;

use crate::dynamics::{flow_real, IntegratorOptions, SmoothedHamiltonian, TrajectoryRecord};
use crate::error::{Error, Result};
use crate::phase::{CoherentLabel, TangentMatrix};
use crate::solvers::solve_final;

const I: Complex64 = Complex64::new(0.0, 1.0);
const FRAC_1_SQRT_2: f64 = std::f64::consts::FRAC_1_SQRT_2;

/// Contributions with `|M_vv|` below this are treated as caustic.
pub const CAUSTIC_EPS: f64 = 1e-6;

/// Which propagator is being evaluated. The string forms are the tags used
/// in sweep output.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Q1P1,
    Q2P2,
    Q1Q2,
    Q1P2,
    P1Q2,
    P1P2,
    Complex,
    Exact,
}

impl Method {
    pub const ALL: [Method; 8] = [
        Method::Q1P1,
        Method::Q2P2,
        Method::Q1Q2,
        Method::Q1P2,
        Method::P1Q2,
        Method::P1P2,
        Method::Complex,
        Method::Exact,
    ];

    pub fn tag(&self) -> &'static str {
        match self {
            Method::Q1P1 => "q1p1",
            Method::Q2P2 => "q2p2",
            Method::Q1Q2 => "q1q2",
            Method::Q1P2 => "q1p2",
            Method::P1Q2 => "p1q2",
            Method::P1P2 => "p1p2",
            Method::Complex => "complex",
            Method::Exact => "exact",
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.tag())
    }
}

impl std::str::FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .iter()
            .copied()
            .find(|m| m.tag() == s)
            .ok_or_else(|| Error::Domain(format!("unknown method tag '{s}'")))
    }
}

/// One classical trajectory's contribution. `amplitude = prefactor * exp(exponent)`.
#[derive(Debug, Clone)]
pub struct PropagatorContribution {
    pub trajectory: TrajectoryRecord,
    /// `N / sqrt(M_vv)` with the branch-tracked root.
    pub prefactor: Complex64,
    /// `i (S + I)/hbar` plus the method-specific correction terms.
    pub exponent: Complex64,
    pub amplitude: Complex64,
    pub branch_index: usize,
    /// Flagged (and excluded from sums) when `|M_vv| < CAUSTIC_EPS`.
    pub caustic: bool,
}

#[derive(Debug, Clone)]
pub struct PropagatorResult {
    pub method: Method,
    pub amplitude: Complex64,
    pub contributions: Vec<PropagatorContribution>,
}

impl PropagatorResult {
    pub fn probability(&self) -> f64 {
        self.amplitude.norm_sqr()
    }

    pub fn caustic_count(&self) -> usize {
        self.contributions.iter().filter(|c| c.caustic).count()
    }
}

/// Quadratic-form coefficients of one mixed-boundary exponent.
///
/// The four families share the same reduced expressions in terms of the
/// complex tangent matrix; the denominators quoted with the M1..M4 forms
/// equal `2 M_vv` times the pivot matrix element, so these stay finite at
/// degenerate shooting points as long as `M_vv` does.
#[derive(Debug, Clone, Copy)]
pub struct CoefficientSet {
    pub c1: Complex64,
    pub c2: Complex64,
    pub c12: Complex64,
}

impl CoefficientSet {
    /// A-coefficients (position -> position): `A12 = 2 i m_qp / (1 - M1 M2)`.
    pub fn q1q2(m: &TangentMatrix) -> Self {
        let mt = m.complex_tangent();
        let half = 0.5 / mt.m_vv;
        Self {
            c1: 1.0 - mt.m_vu * half,
            c2: 1.0 + mt.m_uv * half,
            c12: -1.0 / mt.m_vv,
        }
    }

    /// B-coefficients (position -> momentum): `B12 = i m_pp / (1 + M2 conj(M3))`.
    pub fn q1p2(m: &TangentMatrix) -> Self {
        let mt = m.complex_tangent();
        let half = 0.5 / mt.m_vv;
        Self {
            c1: 1.0 - mt.m_vu * half,
            c2: 1.0 - mt.m_uv * half,
            c12: I * half,
        }
    }

    /// C-coefficients (momentum -> position): `C12 = i m_qq / (1 + M1 conj(M4))`.
    pub fn p1q2(m: &TangentMatrix) -> Self {
        let mt = m.complex_tangent();
        let half = 0.5 / mt.m_vv;
        Self {
            c1: 1.0 + mt.m_vu * half,
            c2: 1.0 + mt.m_uv * half,
            c12: I * half,
        }
    }

    /// D-coefficients (momentum -> momentum): `D12 = -i m_pq / (1 - conj(M3) conj(M4))`.
    pub fn p1p2(m: &TangentMatrix) -> Self {
        let mt = m.complex_tangent();
        let half = 0.5 / mt.m_vv;
        Self {
            c1: 1.0 + mt.m_vu * half,
            c2: 1.0 - mt.m_uv * half,
            c12: -half,
        }
    }
}

/// Square-root branch tracking along a continuation: keeps the root that
/// varies continuously with the input, starting from `+1` at `M_vv = 1`.
#[derive(Debug, Clone)]
pub struct SqrtBranchState {
    prev_mvv: Complex64,
    prev_root: Complex64,
}

impl SqrtBranchState {
    /// State anchored at the identity tangent (`M_vv = 1`, root `+1`).
    pub fn fresh() -> Self {
        Self { prev_mvv: Complex64::new(1.0, 0.0), prev_root: Complex64::new(1.0, 0.0) }
    }

    /// Anchor at an arbitrary starting value (used when a branch is born at
    /// T > 0 with an externally known root, e.g. a record's own winding).
    pub fn anchored(mvv: Complex64, root: Complex64) -> Self {
        Self { prev_mvv: mvv, prev_root: root }
    }

    pub fn root(&self) -> Complex64 {
        self.prev_root
    }
}

/// Advance the branch-tracked square root to a new `M_vv`. Steps must be
/// small enough that the phase of `M_vv` moves by less than pi.
pub fn sqrt_branch(mvv: Complex64, state: &mut SqrtBranchState) -> Result<Complex64> {
    if mvv.norm() < CAUSTIC_EPS {
        return Err(Error::CausticDivergence { mvv_abs: mvv.norm(), threshold: CAUSTIC_EPS });
    }
    // Predict by continuing the previous root, then snap to the exact
    // principal-or-negated root nearest the prediction.
    let predicted = state.prev_root * (mvv / state.prev_mvv).sqrt();
    let s = mvv.sqrt();
    let root = if (s - predicted).norm() <= (-s - predicted).norm() { s } else { -s };
    state.prev_mvv = mvv;
    state.prev_root = root;
    Ok(root)
}

/// Full second-order expansion of the exponent corrections around an
/// arbitrary real trajectory, in terms of the label mismatches
/// `du = z1 - u'` and `dv = conj(z2) - v''`. Each boundary-specific formula
/// is this expression with its identically-zero mismatch components dropped;
/// the tests hold them against each other.
pub fn universal_correction(
    rec: &TrajectoryRecord,
    z1: Complex64,
    z2: Complex64,
) -> Complex64 {
    let mt = rec.complex_tangent();
    let du = z1 - rec.initial.u();
    let dv = z2.conj() - rec.final_point.v();
    rec.initial.v() * du + rec.final_point.u() * dv - 0.5 * (mt.m_vu / mt.m_vv) * du * du
        + du * dv / mt.m_vv
        + 0.5 * (mt.m_uv / mt.m_vv) * dv * dv
}

fn leaving_correction(rec: &TrajectoryRecord, z2: Complex64) -> Complex64 {
    let mt = rec.complex_tangent();
    let dv = z2.conj() - rec.final_point.v();
    rec.final_point.u() * dv + 0.5 * (mt.m_uv / mt.m_vv) * dv * dv
}

fn arriving_correction(rec: &TrajectoryRecord, z1: Complex64) -> Complex64 {
    let mt = rec.complex_tangent();
    let du = z1 - rec.initial.u();
    rec.initial.v() * du - 0.5 * (mt.m_vu / mt.m_vv) * du * du
}

fn mixed_correction(
    rec: &TrajectoryRecord,
    z1: &CoherentLabel,
    z2: &CoherentLabel,
    method: Method,
) -> Complex64 {
    let scale = rec.initial.scale;
    let (b, c) = (scale.b, scale.c);
    // Scaled mismatches of the unconstrained endpoint components.
    let alpha = (rec.initial.p.re - z1.p) / c; // (p_i - p1)/c
    let beta = (rec.final_point.p.re - z2.p) / c; // (p_f - p2)/c
    let xi = (rec.initial.q.re - z1.q) / b; // (q_i - q1)/b
    let gamma = (rec.final_point.q.re - z2.q) / b; // (q_f - q2)/b
    let z1c = z1.z().conj();
    let z2c = z2.z();

    match method {
        Method::Q1Q2 => {
            let k = CoefficientSet::q1q2(&rec.tangent);
            -I * z1c * alpha * FRAC_1_SQRT_2 + I * z2c * beta * FRAC_1_SQRT_2
                - 0.5 * (k.c1 * alpha * alpha + k.c2 * beta * beta + k.c12 * alpha * beta)
        }
        Method::Q1P2 => {
            let k = CoefficientSet::q1p2(&rec.tangent);
            -I * z1c * alpha * FRAC_1_SQRT_2 - z2c * gamma * FRAC_1_SQRT_2
                - 0.5 * (k.c1 * alpha * alpha + k.c2 * gamma * gamma)
                + k.c12 * alpha * gamma
        }
        Method::P1Q2 => {
            let k = CoefficientSet::p1q2(&rec.tangent);
            -z1c * xi * FRAC_1_SQRT_2 + I * z2c * beta * FRAC_1_SQRT_2
                - 0.5 * (k.c1 * xi * xi + k.c2 * beta * beta)
                - k.c12 * xi * beta
        }
        Method::P1P2 => {
            let k = CoefficientSet::p1p2(&rec.tangent);
            -z1c * xi * FRAC_1_SQRT_2 - z2c * gamma * FRAC_1_SQRT_2
                - 0.5 * (k.c1 * xi * xi + k.c2 * gamma * gamma)
                - k.c12 * xi * gamma
        }
        _ => unreachable!("mixed_correction only serves the four mixed methods"),
    }
}

fn build_contribution(
    rec: TrajectoryRecord,
    z1: Complex64,
    z2: Complex64,
    correction: Complex64,
    branch_index: usize,
) -> PropagatorContribution {
    let hbar = rec.initial.scale.hbar;
    let mt = rec.complex_tangent();
    let caustic = mt.m_vv.norm() < CAUSTIC_EPS;

    let norm = (-0.5 * (z1.norm_sqr() + z2.norm_sqr())).exp();
    let exponent = I * (rec.s_complex + rec.i_correction) / hbar + correction;
    let (prefactor, amplitude) = if caustic {
        (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0))
    } else {
        let pf = norm / rec.mvv_sqrt();
        (pf, pf * exponent.exp())
    };

    PropagatorContribution {
        trajectory: rec,
        prefactor,
        exponent,
        amplitude,
        branch_index,
        caustic,
    }
}

fn single_result(
    method: Method,
    contribution: PropagatorContribution,
) -> Result<PropagatorResult> {
    if contribution.caustic {
        let mvv_abs = contribution.trajectory.complex_tangent().m_vv.norm();
        return Err(Error::CausticDivergence { mvv_abs, threshold: CAUSTIC_EPS });
    }
    Ok(PropagatorResult {
        method,
        amplitude: contribution.amplitude,
        contributions: vec![contribution],
    })
}

/// Reference formula on a complex trajectory satisfying `u(0) = z1`,
/// `v(T) = conj(z2)`: no correction terms.
pub fn k_complex(
    traj: &TrajectoryRecord,
    z1: &CoherentLabel,
    z2: &CoherentLabel,
) -> Result<PropagatorContribution> {
    let c = build_contribution(traj.clone(), z1.z(), z2.z(), Complex64::new(0.0, 0.0), 0);
    if c.caustic {
        let mvv_abs = traj.complex_tangent().m_vv.norm();
        return Err(Error::CausticDivergence { mvv_abs, threshold: CAUSTIC_EPS });
    }
    Ok(c)
}

/// Leaving-trajectory approximation: the real trajectory launched from
/// `(q1, p1)`, with corrections in `conj(z2) - v''`.
pub fn k_q1p1<H: SmoothedHamiltonian + ?Sized>(
    h: &H,
    z1: &CoherentLabel,
    z2: &CoherentLabel,
    t: f64,
    opts: &IntegratorOptions,
) -> Result<PropagatorResult> {
    let rec = flow_real(h, z1.q, z1.p, t, opts, z1.scale)?;
    let corr = leaving_correction(&rec, z2.z());
    single_result(Method::Q1P1, build_contribution(rec, z1.z(), z2.z(), corr, 0))
}

/// Arriving-trajectory approximation: the real trajectory reaching
/// `(q2, p2)` at time `T`, with corrections in `z1 - u'`.
pub fn k_q2p2<H: SmoothedHamiltonian + ?Sized>(
    h: &H,
    z1: &CoherentLabel,
    z2: &CoherentLabel,
    t: f64,
    opts: &IntegratorOptions,
) -> Result<PropagatorResult> {
    let rec = solve_final(h, z2.q, z2.p, t, opts, z2.scale)?;
    let corr = arriving_correction(&rec, z1.z());
    single_result(Method::Q2P2, build_contribution(rec, z1.z(), z2.z(), corr, 0))
}

fn mixed_result<H: SmoothedHamiltonian + ?Sized>(
    h: &H,
    z1: &CoherentLabel,
    z2: &CoherentLabel,
    t: f64,
    roots: &[f64],
    opts: &IntegratorOptions,
    method: Method,
) -> Result<PropagatorResult> {
    if roots.is_empty() {
        return Err(Error::NoRealTrajectory);
    }
    let root_is_momentum = matches!(method, Method::Q1Q2 | Method::Q1P2);
    let mut contributions = Vec::with_capacity(roots.len());
    for (idx, &root) in roots.iter().enumerate() {
        let (q0, p0) = if root_is_momentum { (z1.q, root) } else { (root, z1.p) };
        let rec = flow_real(h, q0, p0, t, opts, z1.scale)?;
        let corr = mixed_correction(&rec, z1, z2, method);
        contributions.push(build_contribution(rec, z1.z(), z2.z(), corr, idx));
    }

    let amplitude = match method {
        // Coherent sum over all non-caustic trajectories.
        Method::Q1Q2 | Method::P1P2 => contributions
            .iter()
            .filter(|c| !c.caustic)
            .map(|c| c.amplitude)
            .sum(),
        // Independent approximations, not to be added: report the trajectory
        // whose free initial component is closest to its label; callers can
        // pick any other from `contributions`.
        Method::Q1P2 | Method::P1Q2 => {
            let label = if root_is_momentum { z1.p } else { z1.q };
            contributions
                .iter()
                .filter(|c| !c.caustic)
                .min_by(|a, b| {
                    let da = (roots[a.branch_index] - label).abs();
                    let db = (roots[b.branch_index] - label).abs();
                    da.partial_cmp(&db).unwrap()
                })
                .map(|c| c.amplitude)
                .ok_or(Error::NoRealTrajectory)?
        }
        _ => unreachable!(),
    };

    Ok(PropagatorResult { method, amplitude, contributions })
}

/// Position-to-position approximation summed over the supplied initial
/// momenta (each a shooting root from `q1` to `q2` in time `T`).
pub fn k_q1q2<H: SmoothedHamiltonian + ?Sized>(
    h: &H,
    z1: &CoherentLabel,
    z2: &CoherentLabel,
    t: f64,
    roots: &[f64],
    opts: &IntegratorOptions,
) -> Result<PropagatorResult> {
    mixed_result(h, z1, z2, t, roots, opts, Method::Q1Q2)
}

/// Position-to-momentum approximation; `roots` are initial momenta. The
/// contributions are independent alternatives and are not summed.
pub fn k_q1p2<H: SmoothedHamiltonian + ?Sized>(
    h: &H,
    z1: &CoherentLabel,
    z2: &CoherentLabel,
    t: f64,
    roots: &[f64],
    opts: &IntegratorOptions,
) -> Result<PropagatorResult> {
    mixed_result(h, z1, z2, t, roots, opts, Method::Q1P2)
}

/// Momentum-to-position approximation; `roots` are initial positions. The
/// contributions are independent alternatives and are not summed.
pub fn k_p1q2<H: SmoothedHamiltonian + ?Sized>(
    h: &H,
    z1: &CoherentLabel,
    z2: &CoherentLabel,
    t: f64,
    roots: &[f64],
    opts: &IntegratorOptions,
) -> Result<PropagatorResult> {
    mixed_result(h, z1, z2, t, roots, opts, Method::P1Q2)
}

/// Momentum-to-momentum approximation summed over the supplied initial
/// positions.
pub fn k_p1p2<H: SmoothedHamiltonian + ?Sized>(
    h: &H,
    z1: &CoherentLabel,
    z2: &CoherentLabel,
    t: f64,
    roots: &[f64],
    opts: &IntegratorOptions,
) -> Result<PropagatorResult> {
    mixed_result(h, z1, z2, t, roots, opts, Method::P1P2)
}

/// Assemble a contribution from an already-integrated record for the given
/// method, using the record's own square-root branch. Used by sweep drivers
/// that manage trajectories (and branch indices) themselves.
pub fn contribution_for_method(
    rec: TrajectoryRecord,
    z1: &CoherentLabel,
    z2: &CoherentLabel,
    method: Method,
    branch_index: usize,
) -> PropagatorContribution {
    let corr = match method {
        Method::Complex | Method::Exact => Complex64::new(0.0, 0.0),
        Method::Q1P1 => leaving_correction(&rec, z2.z()),
        Method::Q2P2 => arriving_correction(&rec, z1.z()),
        m => mixed_correction(&rec, z1, z2, m),
    };
    let mut c = build_contribution(rec, z1.z(), z2.z(), corr, branch_index);
    c.branch_index = branch_index;
    c
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phase::PhaseScale;

    #[test]
    fn method_tags_round_trip() {
        for m in Method::ALL {
            assert_eq!(m.tag().parse::<Method>().unwrap(), m);
        }
        assert!("bogus".parse::<Method>().is_err());
    }

    #[test]
    fn sqrt_branch_identity_and_winding() {
        let mut st = SqrtBranchState::fresh();
        let r = sqrt_branch(Complex64::new(1.0, 0.0), &mut st).unwrap();
        assert!((r - Complex64::new(1.0, 0.0)).norm() < 1e-15);

        // walk e^{i theta} from 0 to 2 pi: the root must end at -1
        let mut st = SqrtBranchState::fresh();
        let n = 200;
        let mut last = Complex64::new(0.0, 0.0);
        for k in 1..=n {
            let theta = 2.0 * std::f64::consts::PI * k as f64 / n as f64;
            last = sqrt_branch(Complex64::from_polar(1.0, theta), &mut st).unwrap();
        }
        assert!((last - Complex64::new(-1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn sqrt_branch_rejects_caustic() {
        let mut st = SqrtBranchState::fresh();
        assert!(matches!(
            sqrt_branch(Complex64::new(1e-9, 0.0), &mut st),
            Err(Error::CausticDivergence { .. })
        ));
    }

    #[test]
    fn coefficient_sets_match_quoted_ratio_forms() {
        // For a real symplectic tangent the reduced coefficients equal the
        // M1..M4 ratio expressions.
        let m = TangentMatrix::from_real(0.93, 1.41, -0.52, (1.0 + 1.41 * (-0.52)) / 0.93);
        assert!(m.symplectic_defect() < 1e-12);
        let (m1, m2, m3, m4) = (m.m1(), m.m2(), m.m3(), m.m4());

        let a = CoefficientSet::q1q2(&m);
        let d12 = 1.0 - m1 * m2;
        assert!((a.c1 - (1.0 - 0.5 * (1.0 - m1.conj() * m2) / d12)).norm() < 1e-12);
        assert!((a.c2 - (1.0 - 0.5 * (1.0 - m2.conj() * m1) / d12)).norm() < 1e-12);
        assert!((a.c12 - 2.0 * I * m.m_qp / d12).norm() < 1e-12);

        let b = CoefficientSet::q1p2(&m);
        let d12 = 1.0 + m2 * m3.conj();
        assert!((b.c1 - (1.0 - 0.5 * (1.0 - m2 * m3) / d12)).norm() < 1e-12);
        assert!((b.c2 - (1.0 - 0.5 * (1.0 - m2.conj() * m3.conj()) / d12)).norm() < 1e-12);
        assert!((b.c12 - I * m.m_pp / d12).norm() < 1e-12);

        let c = CoefficientSet::p1q2(&m);
        let d12 = 1.0 + m1 * m4.conj();
        assert!((c.c1 - (1.0 - 0.5 * (1.0 - m1.conj() * m4.conj()) / d12)).norm() < 1e-12);
        assert!((c.c2 - (1.0 - 0.5 * (1.0 - m1 * m4) / d12)).norm() < 1e-12);
        assert!((c.c12 - I * m.m_qq / d12).norm() < 1e-12);

        let d = CoefficientSet::p1p2(&m);
        let d12 = 1.0 - m3.conj() * m4.conj();
        assert!((d.c1 - (1.0 - 0.5 * (1.0 - m3 * m4.conj()) / d12)).norm() < 1e-12);
        assert!((d.c2 - (1.0 - 0.5 * (1.0 - m3.conj() * m4) / d12)).norm() < 1e-12);
        assert!((d.c12 - (-I * m.m_pq / d12)).norm() < 1e-12);
    }

    #[test]
    fn caustic_contribution_is_flagged_and_zeroed() {
        // Synthetic complex tangent with tiny M_vv: m_qq = m_pp = i a,
        // m_qp = m_pq = 0 has M_vv = i a.
        let a = 1e-9;
        let scale = PhaseScale::unit();
        let m = TangentMatrix {
            m_qq: Complex64::new(0.0, a),
            m_qp: Complex64::new(0.0, 0.0),
            m_pq: Complex64::new(0.0, 0.0),
            m_pp: Complex64::new(0.0, a),
        };
        let pt = crate::phase::ComplexPhasePoint::from_real(0.0, 0.0, scale);
        let rec = TrajectoryRecord::assemble(
            pt,
            pt,
            1.0,
            m,
            Complex64::new(0.0, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(0.0, 0.0),
            0.0,
        );
        let z = scale.label(0.0, 0.0);
        let c = build_contribution(rec, z.z(), z.z(), Complex64::new(0.0, 0.0), 0);
        assert!(c.caustic);
        assert_eq!(c.amplitude, Complex64::new(0.0, 0.0));
    }
}
