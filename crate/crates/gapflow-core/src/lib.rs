//! Pure-dephasing dynamics of a qubit coupled to a reservoir whose spectral
//! density vanishes below a low-frequency gap.
//!
//! The crate models reservoirs `J(w)` supported above a gap edge `w_g`
//! ([`sd_model`]), evaluates the dephasing rate `gamma0(t)`, the dephasing
//! factor `Xi0(t)` and the coherence decay with oscillatory quadrature
//! ([`quad`]), and resolves the long-time structure analytically: the phase
//! of the amplitude-phase form and its limit ([`phase`]), algebraic tail
//! laws and short-time coefficients ([`asymptotics`]), and the
//! negative-rate windows responsible for information backflow together with
//! the associated non-Markovianity measure ([`backflow`]).

// reference constants are recorded at full printed precision, beyond what
// f64 can hold, so truncation stays a rounding decision of the compiler
#![allow(clippy::excessive_precision)]
// validation uses negated comparisons (`!(x > 0.0)`) on purpose: the negated
// form also rejects NaN, a plain `x <= 0.0` would let it through
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod asymptotics;
pub mod backflow;
pub mod error;
pub mod phase;
pub mod quad;
pub mod sd_model;

pub use asymptotics::{
    short_time_coeffs, short_time_gamma, tail_eval, tail_law, tail_laws, ShortTimeCoefficients,
    TailLaw, TailRegime, TailTarget,
};
pub use backflow::{
    find_negative_intervals, match_predictions, measure_over, non_markovianity, predict_intervals,
    verify_bounds, BackflowInterval, BoundCheck, BoundReport, MeasureResult, PredictedInterval,
    PredictionCheck, PredictionReport,
};
pub use error::{Error, Result};
pub use phase::{amplitude_phase, phase_angle, phase_limit, PhaseLimit, PhaseRegime};
pub use quad::{
    coherence, dephasing_factor, dephasing_factor_direct, dephasing_rate, dephasing_rate_direct,
    phi_c, phi_s, spectral_moment, transform_sample, CoherenceSample, DiagRecord, DiagSink,
    Estimate, QuadratureConfig, TailStrategy, TransformSample,
};
pub use sd_model::{
    make_analytic_sd, make_figure_sd, make_lorentzian_gap_sd, make_power_law_gap_sd,
    make_tabulated_sd, tabulated_sd_from_csv, EdgeProfile, EdgeTerm, GappedSpectralDensity,
    LambdaExpansion, SdClass, SdSpec, TailDecay,
};
