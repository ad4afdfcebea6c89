//! Reference systems with exact quantum propagators and closed-form
//! classical data.

pub mod harmonic;
pub mod kerr;

pub use harmonic::{ho_exact, ho_flow_analytic, HarmonicModel};
pub use kerr::{
    kerr_complex_flow, kerr_exact, kerr_flow_analytic, kerr_k0, kerr_kn, kerr_kq1p1_closed,
    kerr_pi_roots, kerr_pi_roots_indexed, kerr_short_time, kerr_shorttime_qi, FockTruncation,
    KerrModel, KerrShortTime,
};
