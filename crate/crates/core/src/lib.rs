//! Coherent-state propagators from classical trajectories.
//!
//! The quantum amplitude `K(z1, z2, T) = <z2| exp(-i H T / hbar) |z1>` has a
//! stationary-phase form built on complex classical trajectories, plus a
//! family of cheaper approximations built on real trajectories selected by
//! different boundary data (leaving, arriving, and four mixed combinations
//! of the label components). This crate implements all of them, together
//! with the trajectory machinery they need (smoothed Hamiltonians, tangent
//! matrices, action integrals, shooting and continuation solvers) and two
//! reference systems with exact quantum answers for verification: the
//! harmonic oscillator and the Kerr oscillator.

pub mod dynamics;
pub mod error;
pub mod models;
pub mod phase;
pub mod propagators;
pub mod solvers;

pub use error::{Error, Result};
pub use phase::{
    complex_tangent, label_from_qp, overlap, qp_from_label, CoherentLabel, ComplexPhasePoint,
    ComplexTangent, PhaseScale, TangentMatrix,
};

pub use dynamics::{
    action_closed_check, flow, flow_real, i_integrand, IntegratorMethod, IntegratorOptions,
    SmoothedHamiltonian, TrajectoryRecord,
};

pub use propagators::{
    k_complex, k_p1p2, k_p1q2, k_q1p1, k_q1p2, k_q1q2, k_q2p2, sqrt_branch, CoefficientSet,
    Method, PropagatorContribution, PropagatorResult, SqrtBranchState, CAUSTIC_EPS,
};

pub use solvers::{
    continue_branch, refine_root, solve_complex, solve_final, solve_mixed, BoundaryKind,
    BoundarySpec, BranchPoint, BranchTrace, ScanWindow,
};
