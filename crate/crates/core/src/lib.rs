//! Stability analysis for positive homogeneous systems with time-varying
//! delays.
//!
//! - [`model`]: polynomial vector fields, dilations and the max-type
//!   Lyapunov function.
//! - [`properties`]: structural hypothesis checks with witnesses.
//! - [`certify`]: finding and verifying certificate vectors.
//! - [`rates`]: decay-rate envelopes and the generic rate condition.
//! - [`simulate`]: delay families, integrators and trajectory checks.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod certify;
pub mod error;
pub mod model;
pub mod properties;
pub mod rates;
pub mod simulate;

pub use certify::{
    find_certificate_linear, find_certificate_nonlinear, hurwitz_metzler, spectral_abscissa,
    spectral_radius, verify_certificate, CertificateSearchConfig,
};
pub use error::{Error, Result};
pub use model::{
    lyapunov_v, Certificate, Dilation, LevelSetProbe, Lyapunov, Monomial, PolyVectorField,
    Polynomial, Provenance, SystemModel, TimeKind,
};
pub use properties::{
    check_system, DelayAssumptionReport, Evidence, HypothesisCheck, HypothesisReport, SampleSpec,
    Verdict, Witness,
};
pub use rates::{
    beta_bound, eta_bound, mu_condition_check, theta_bound, xi_bound, DecayBound, DecayForm,
    MuSpec, RateOptions,
};
pub use simulate::{
    envelope_check, level_set_descent, simulate_continuous, simulate_discrete, DelayModel,
    EnvelopeReport, History, Trajectory,
};
