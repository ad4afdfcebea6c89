//! Shooting solvers for the trajectories demanded by each propagator's
//! boundary conditions, branch continuation over a time grid, and the
//! damped-Newton search for complex trajectories.

use num_complex::Complex64;

use crate::dynamics::{
    flow_real, integrate_signed, IntegratorOptions, SmoothedHamiltonian, TrajectoryRecord,
};
use crate::error::{Error, Result};
use crate::phase::{ComplexPhasePoint, PhaseScale};
use crate::propagators::{sqrt_branch, SqrtBranchState};

/// Which endpoint components a trajectory is constrained by.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BoundaryKind {
    /// initial q and final q fixed; unknown initial momentum
    Q1Q2,
    /// initial q and final p fixed; unknown initial momentum
    Q1P2,
    /// initial p and final q fixed; unknown initial position
    P1Q2,
    /// initial p and final p fixed; unknown initial position
    P1P2,
    /// both initial components fixed (plain initial-value problem)
    Initial,
    /// both final components fixed (backward problem)
    Final,
}

impl BoundaryKind {
    pub fn is_mixed(&self) -> bool {
        matches!(
            self,
            BoundaryKind::Q1Q2 | BoundaryKind::Q1P2 | BoundaryKind::P1Q2 | BoundaryKind::P1P2
        )
    }

    /// True when the unknown initial component is the momentum.
    pub fn unknown_is_momentum(&self) -> bool {
        matches!(self, BoundaryKind::Q1Q2 | BoundaryKind::Q1P2)
    }

    /// True when the constrained final component is the position.
    pub fn residual_is_position(&self) -> bool {
        matches!(self, BoundaryKind::Q1Q2 | BoundaryKind::P1Q2)
    }

    pub fn tag(&self) -> &'static str {
        match self {
            BoundaryKind::Q1Q2 => "q1q2",
            BoundaryKind::Q1P2 => "q1p2",
            BoundaryKind::P1Q2 => "p1q2",
            BoundaryKind::P1P2 => "p1p2",
            BoundaryKind::Initial => "initial",
            BoundaryKind::Final => "final",
        }
    }
}

impl std::fmt::Display for BoundaryKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.tag())
    }
}

/// A two-point boundary problem: `first` is the fixed initial component,
/// `second` the fixed final component, as selected by `kind`.
#[derive(Debug, Clone, Copy)]
pub struct BoundarySpec {
    pub kind: BoundaryKind,
    pub first: f64,
    pub second: f64,
    pub t: f64,
}

/// Scan range for the unknown initial component, in units of the relevant
/// quantum uncertainty (`b/sqrt(2)` for positions, `c/sqrt(2)` for momenta).
#[derive(Debug, Clone, Copy)]
pub struct ScanWindow {
    pub center: f64,
    pub half_width_units: f64,
    pub grid: usize,
}

impl ScanWindow {
    pub fn new(center: f64, half_width_units: f64, grid: usize) -> Result<Self> {
        if !(half_width_units > 0.0) {
            return Err(Error::Domain(format!(
                "window half-width must be positive, got {half_width_units}"
            )));
        }
        if grid < 16 {
            return Err(Error::Domain(format!("window grid must be >= 16, got {grid}")));
        }
        Ok(Self { center, half_width_units, grid })
    }

    /// Default window: 4 uncertainties half-width, 512 grid points.
    pub fn default_at(center: f64) -> Self {
        Self { center, half_width_units: 4.0, grid: 512 }
    }
}

/// Build the full record of the trajectory that arrives at `(q2, p2)` at
/// time `T`: integrate backward to find the initial point, then forward.
pub fn solve_final<H: SmoothedHamiltonian + ?Sized>(
    h: &H,
    q2: f64,
    p2: f64,
    t: f64,
    opts: &IntegratorOptions,
    scale: PhaseScale,
) -> Result<TrajectoryRecord> {
    if t < 0.0 {
        return Err(Error::Domain(format!("duration must be nonnegative, got {t}")));
    }
    let back = integrate_signed(
        h,
        Complex64::new(q2, 0.0),
        Complex64::new(p2, 0.0),
        -t,
        opts,
        scale,
    )?;
    flow_real(h, back.final_point.q.re, back.final_point.p.re, t, opts, scale)
}

/// Shooting residual and its derivative with respect to the unknown initial
/// component, via the already-integrated tangent matrix.
fn shoot<H: SmoothedHamiltonian + ?Sized>(
    h: &H,
    kind: BoundaryKind,
    fixed_first: f64,
    target: f64,
    t: f64,
    x: f64,
    opts: &IntegratorOptions,
    scale: PhaseScale,
) -> Result<(f64, f64, TrajectoryRecord)> {
    let (q0, p0) = if kind.unknown_is_momentum() { (fixed_first, x) } else { (x, fixed_first) };
    let rec = flow_real(h, q0, p0, t, opts, scale)?;
    let (resid, deriv) = match (kind.residual_is_position(), kind.unknown_is_momentum()) {
        (true, true) => (
            rec.final_point.q.re - target,
            (scale.b / scale.c) * rec.tangent.m_qp.re,
        ),
        (false, true) => (rec.final_point.p.re - target, rec.tangent.m_pp.re),
        (true, false) => (rec.final_point.q.re - target, rec.tangent.m_qq.re),
        (false, false) => (
            rec.final_point.p.re - target,
            (scale.c / scale.b) * rec.tangent.m_pq.re,
        ),
    };
    Ok((resid, deriv, rec))
}

fn residual_tol(target: f64) -> f64 {
    1e-10 * target.abs().max(1.0)
}

/// Newton correction from a starting guess, with step damping. Returns the
/// converged root of the shooting residual.
pub fn refine_root<H: SmoothedHamiltonian + ?Sized>(
    h: &H,
    kind: BoundaryKind,
    fixed_first: f64,
    target: f64,
    t: f64,
    guess: f64,
    opts: &IntegratorOptions,
    scale: PhaseScale,
) -> Result<f64> {
    let tol = residual_tol(target);
    let mut x = guess;
    let (mut r, mut dr, _) = shoot(h, kind, fixed_first, target, t, x, opts, scale)?;
    for iter in 0..30 {
        if r.abs() <= tol {
            return Ok(x);
        }
        if dr == 0.0 || !dr.is_finite() {
            return Err(Error::NewtonDivergence { iterations: iter, residual: r.abs() });
        }
        let step = -r / dr;
        let mut lambda = 1.0;
        let mut accepted = false;
        for _ in 0..40 {
            let xn = x + lambda * step;
            match shoot(h, kind, fixed_first, target, t, xn, opts, scale) {
                Ok((rn, drn, _)) if rn.abs() < r.abs() => {
                    x = xn;
                    r = rn;
                    dr = drn;
                    accepted = true;
                    break;
                }
                _ => lambda *= 0.5,
            }
        }
        if !accepted {
            return Err(Error::NewtonDivergence { iterations: iter, residual: r.abs() });
        }
    }
    if r.abs() <= tol {
        Ok(x)
    } else {
        Err(Error::NewtonDivergence { iterations: 30, residual: r.abs() })
    }
}

/// Bisection/Newton hybrid inside a bracketing interval.
fn refine_bracket<H: SmoothedHamiltonian + ?Sized>(
    h: &H,
    kind: BoundaryKind,
    fixed_first: f64,
    target: f64,
    t: f64,
    mut a: f64,
    mut fa: f64,
    mut b: f64,
    mut fb: f64,
    opts: &IntegratorOptions,
    scale: PhaseScale,
) -> Result<f64> {
    debug_assert!(fa * fb <= 0.0);
    let tol = residual_tol(target);
    if fa.abs() <= tol {
        return Ok(a);
    }
    if fb.abs() <= tol {
        return Ok(b);
    }
    let mut x = 0.5 * (a + b);
    for _ in 0..80 {
        let (r, dr, _) = shoot(h, kind, fixed_first, target, t, x, opts, scale)?;
        if r.abs() <= tol {
            return Ok(x);
        }
        // shrink the bracket
        if r * fa < 0.0 {
            b = x;
            fb = r;
        } else {
            a = x;
            fa = r;
        }
        // Newton step, falling back to bisection when it leaves the bracket
        let newton = if dr != 0.0 { x - r / dr } else { f64::NAN };
        x = if newton.is_finite() && newton > a.min(b) && newton < a.max(b) {
            newton
        } else {
            0.5 * (a + b)
        };
        if (b - a).abs() < 1e-15 * (a.abs() + b.abs()).max(1.0) {
            break;
        }
    }
    let (r, _, _) = shoot(h, kind, fixed_first, target, t, x, opts, scale)?;
    if r.abs() <= tol.max(1e-8 * target.abs().max(1.0)) {
        Ok(x)
    } else {
        Err(Error::NewtonDivergence { iterations: 80, residual: r.abs() })
    }
}

/// Scan the window for shooting roots: bracket every sign change of the
/// residual and refine each bracket. Returns all distinct roots, ascending.
/// An empty list is a valid outcome (no real trajectory in the window).
pub fn solve_mixed<H: SmoothedHamiltonian + ?Sized>(
    h: &H,
    spec: &BoundarySpec,
    window: &ScanWindow,
    opts: &IntegratorOptions,
    scale: PhaseScale,
) -> Result<Vec<f64>> {
    if !spec.kind.is_mixed() {
        return Err(Error::UnsupportedBoundary(spec.kind.tag().into()));
    }
    if !(spec.t > 0.0) {
        return Err(Error::Domain(format!("mixed boundary problems need T > 0, got {}", spec.t)));
    }

    let unc = if spec.kind.unknown_is_momentum() { scale.sigma_p() } else { scale.sigma_q() };
    let half = window.half_width_units * unc;
    let n = window.grid;
    let lo = window.center - half;
    let step = 2.0 * half / (n - 1) as f64;

    let mut values: Vec<Option<f64>> = Vec::with_capacity(n);
    for i in 0..n {
        let x = lo + step * i as f64;
        match shoot(h, spec.kind, spec.first, spec.second, spec.t, x, opts, scale) {
            Ok((r, _, _)) => values.push(Some(r)),
            Err(Error::IntegratorFailure(_)) => values.push(None),
            Err(e) => return Err(e),
        }
    }

    let tol = residual_tol(spec.second);
    let mut roots: Vec<f64> = Vec::new();
    for i in 0..n - 1 {
        let (Some(fa), Some(fb)) = (values[i], values[i + 1]) else { continue };
        let a = lo + step * i as f64;
        let b = a + step;
        if fa.abs() <= tol {
            roots.push(a);
            continue;
        }
        if fa * fb < 0.0 {
            if let Ok(r) = refine_bracket(
                h, spec.kind, spec.first, spec.second, spec.t, a, fa, b, fb, opts, scale,
            ) {
                roots.push(r);
            }
        }
    }
    if let Some(Some(flast)) = values.last() {
        if flast.abs() <= tol {
            roots.push(lo + step * (n - 1) as f64);
        }
    }

    roots.sort_by(|a, b| a.partial_cmp(b).unwrap());
    roots.dedup_by(|a, b| (*a - *b).abs() < 1e-6 * step.max(1e-12));
    Ok(roots)
}

/// One solved point along a branch.
#[derive(Debug, Clone)]
pub struct BranchPoint {
    pub t: f64,
    pub root: f64,
    pub record: TrajectoryRecord,
    pub sqrt_state: SqrtBranchState,
}

/// A root of a boundary-value problem tracked continuously over a time grid.
#[derive(Debug, Clone)]
pub struct BranchTrace {
    pub kind: BoundaryKind,
    pub points: Vec<BranchPoint>,
    pub alive: bool,
    pub died_at: Option<f64>,
}

/// Predictor-corrector continuation of one shooting root along `t_grid`
/// (strictly increasing, first entry = seed time). Death is a recorded
/// outcome, not an error: the trace simply stops and carries `died_at`.
pub fn continue_branch<H: SmoothedHamiltonian + ?Sized>(
    h: &H,
    kind: BoundaryKind,
    fixed_first: f64,
    target: f64,
    seed_root: f64,
    t_grid: &[f64],
    opts: &IntegratorOptions,
    scale: PhaseScale,
    max_jump: f64,
) -> BranchTrace {
    let mut trace = BranchTrace { kind, points: Vec::new(), alive: true, died_at: None };
    let mut prev: Option<(f64, f64)> = None; // (t, root)
    let mut prev2: Option<(f64, f64)> = None;
    let mut sqrt_state = SqrtBranchState::fresh();

    for &t in t_grid {
        let predictor = match (prev, prev2) {
            (Some((t1, r1)), Some((t2, r2))) if t1 != t2 => {
                r1 + (r1 - r2) * (t - t1) / (t1 - t2)
            }
            (Some((_, r1)), _) => r1,
            _ => seed_root,
        };
        let root = match refine_root(h, kind, fixed_first, target, t, predictor, opts, scale) {
            Ok(r) => r,
            Err(_) => {
                trace.alive = false;
                trace.died_at = Some(t);
                break;
            }
        };
        if let Some((_, r1)) = prev {
            if (root - r1).abs() > max_jump {
                trace.alive = false;
                trace.died_at = Some(t);
                break;
            }
        }
        let (q0, p0) = if kind.unknown_is_momentum() { (fixed_first, root) } else { (root, fixed_first) };
        let record = match flow_real(h, q0, p0, t, opts, scale) {
            Ok(r) => r,
            Err(_) => {
                trace.alive = false;
                trace.died_at = Some(t);
                break;
            }
        };
        // Anchor the branch root on the record's own winding so a branch
        // born at T > 0 starts from the continuation of the identity.
        let mvv = record.complex_tangent().m_vv;
        if trace.points.is_empty() {
            sqrt_state = SqrtBranchState::anchored(mvv, record.mvv_sqrt());
        } else if sqrt_branch(mvv, &mut sqrt_state).is_err() {
            trace.alive = false;
            trace.died_at = Some(t);
            break;
        }
        prev2 = prev;
        prev = Some((t, root));
        trace.points.push(BranchPoint { t, root, record, sqrt_state: sqrt_state.clone() });
    }
    trace
}

/// Damped Newton search for the complex trajectory with `u(0) = z1` and
/// `v(T) = conj(z2)`. Returns the initial phase-space point; the residual
/// derivative is the complex tangent element `M_vv`, so each iteration costs
/// exactly one integration.
pub fn solve_complex<H: SmoothedHamiltonian + ?Sized>(
    h: &H,
    z1: Complex64,
    z2: Complex64,
    t: f64,
    seed_vprime: Complex64,
    opts: &IntegratorOptions,
    scale: PhaseScale,
) -> Result<ComplexPhasePoint> {
    if !h.supports_complex() {
        return Err(Error::ComplexUnsupported);
    }
    let target = z2.conj();
    let tol = 1e-10;

    let eval = |vp: Complex64| -> Result<(Complex64, Complex64)> {
        let start = ComplexPhasePoint::from_uv(z1, vp, scale);
        let rec = crate::dynamics::flow(h, start.q, start.p, t, opts, scale)?;
        Ok((rec.final_point.v() - target, rec.complex_tangent().m_vv))
    };

    let mut vp = seed_vprime;
    let (mut r, mut mvv) = eval(vp)?;
    for iter in 0..50 {
        if r.norm() <= tol {
            return Ok(ComplexPhasePoint::from_uv(z1, vp, scale));
        }
        if mvv.norm() < 1e-14 {
            return Err(Error::NewtonDivergence { iterations: iter, residual: r.norm() });
        }
        let step = -r / mvv;
        let mut lambda = 1.0;
        let mut accepted = false;
        for _ in 0..50 {
            let vpn = vp + lambda * step;
            match eval(vpn) {
                Ok((rn, mvvn)) if rn.norm() < r.norm() => {
                    vp = vpn;
                    r = rn;
                    mvv = mvvn;
                    accepted = true;
                    break;
                }
                _ => lambda *= 0.5,
            }
        }
        if !accepted {
            return Err(Error::NewtonDivergence { iterations: iter, residual: r.norm() });
        }
    }
    if r.norm() <= tol {
        Ok(ComplexPhasePoint::from_uv(z1, vp, scale))
    } else {
        Err(Error::NewtonDivergence { iterations: 50, residual: r.norm() })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::harmonic::HarmonicModel;

    #[test]
    fn window_validation() {
        assert!(ScanWindow::new(0.0, 4.0, 512).is_ok());
        assert!(ScanWindow::new(0.0, 0.0, 512).is_err());
        assert!(ScanWindow::new(0.0, 4.0, 8).is_err());
    }

    #[test]
    fn solve_final_zero_time() {
        let model = HarmonicModel::new(1.0, 1.0);
        let scale = model.scale(1.0).unwrap();
        let rec = solve_final(&model, 0.7, -0.2, 0.0, &IntegratorOptions::default(), scale)
            .unwrap();
        assert!((rec.initial.q.re - 0.7).abs() < 1e-14);
        assert!((rec.initial.p.re + 0.2).abs() < 1e-14);
    }

    #[test]
    fn mixed_rejects_non_mixed_kinds() {
        let model = HarmonicModel::new(1.0, 1.0);
        let scale = model.scale(1.0).unwrap();
        let spec = BoundarySpec { kind: BoundaryKind::Initial, first: 0.0, second: 0.0, t: 1.0 };
        assert!(matches!(
            solve_mixed(&model, &spec, &ScanWindow::default_at(0.0), &IntegratorOptions::default(), scale),
            Err(Error::UnsupportedBoundary(_))
        ));
    }

    #[test]
    fn ho_unique_root_matches_closed_form() {
        let model = HarmonicModel::new(1.0, 1.0);
        let scale = model.scale(1.0).unwrap();
        let opts = IntegratorOptions::for_period(model.period(), 1000);
        let (q1, q2, t) = (0.4, -0.3, 1.1);
        let spec = BoundarySpec { kind: BoundaryKind::Q1Q2, first: q1, second: q2, t };
        let roots = solve_mixed(&model, &spec, &ScanWindow::default_at(0.0), &opts, scale).unwrap();
        assert_eq!(roots.len(), 1);
        let expect = (q2 - q1 * t.cos()) / t.sin();
        assert!((roots[0] - expect).abs() < 1e-8);
    }

    #[test]
    fn ho_degenerate_time_yields_no_roots() {
        // at sin(omega T) = 0 the q1->q2 residual is independent of p_i
        let model = HarmonicModel::new(1.0, 1.0);
        let scale = model.scale(1.0).unwrap();
        let opts = IntegratorOptions::for_period(model.period(), 1000);
        let spec = BoundarySpec {
            kind: BoundaryKind::Q1Q2,
            first: 0.4,
            second: 1.9,
            t: std::f64::consts::PI,
        };
        let roots = solve_mixed(&model, &spec, &ScanWindow::default_at(0.0), &opts, scale).unwrap();
        assert!(roots.is_empty());
    }
}
