//! Short-time and long-time expansions of the transform pair.
//!
//! Short times: `phi_c(t) = l_c0 - l_c2 t^2 + ...`, `phi_s(t) = l_s1 t + ...`,
//! so the dephasing rate starts linearly, `gamma0(t) ~ l0 t` with
//! `l0 = w_g l_c0 + l_s1 = int J(w) dw`.
//!
//! Long times: each transform decays algebraically,
//! `phi(t) ~ C (w_s t)^{-1-a} ln(w_s t)^L`, where the exponent `a` and the
//! powers come from the edge expansion of the auxiliary function `Lambda`.
//! The generic coefficient is `c Gamma(1+a)` times a trigonometric factor
//! that vanishes whenever `a` is a natural number of the wrong parity
//! (even for the cosine transform, odd for the sine transform); the law is
//! then carried either by the logarithmic derivative of the same term or by
//! the first subleading expansion exponent that survives.

use std::f64::consts::FRAC_PI_2;

use serde::Serialize;
use statrs::function::gamma::gamma;

use crate::error::{Error, Result};
use crate::quad::{spectral_moment, QuadratureConfig};
use crate::sd_model::{as_natural, EdgeTerm, GappedSpectralDensity, SdClass};

/// Leading Taylor coefficients of the transform pair around `t = 0`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ShortTimeCoefficients {
    /// `phi_c(0) = int J(w)/w dw`.
    pub l_c0: f64,
    /// `phi_s'(0) = int J(w)/w (w - w_g) dw`.
    pub l_s1: f64,
    /// `-phi_c''(0)/2 = (1/2) int J(w)/w (w - w_g)^2 dw`.
    pub l_c2: f64,
    /// `gamma0'(0) = w_g l_c0 + l_s1 = int J(w) dw`.
    pub l0: f64,
}

/// Compute the short-time coefficients. The expansion is only meaningful
/// when the curvature moment exists, which requires enough high-frequency
/// decay: `chi0 > 1` for class-1 edges and `chi0 > 3` for class-2 edges
/// (logarithmic tails converge more slowly); finite supports always qualify.
pub fn short_time_coeffs(
    sd: &GappedSpectralDensity,
    cfg: &QuadratureConfig,
) -> Result<ShortTimeCoefficients> {
    if !sd.omega_max().is_finite() {
        let chi0 = sd.edge_profile().chi0;
        let need = match sd.edge_profile().class {
            SdClass::Class1 => 1.0,
            SdClass::Class2 => 3.0,
        };
        if !(chi0 > need) {
            return Err(Error::UnresolvedRegime(format!(
                "the short-time expansion needs high-frequency decay chi0 > {need}, \
                 but this density declares chi0 = {chi0}"
            )));
        }
    }
    let l_c0 = spectral_moment(sd, 0, cfg)?.value;
    let l_s1 = spectral_moment(sd, 1, cfg)?.value;
    let l_c2 = 0.5 * spectral_moment(sd, 2, cfg)?.value;
    Ok(ShortTimeCoefficients {
        l_c0,
        l_s1,
        l_c2,
        l0: sd.omega_g() * l_c0 + l_s1,
    })
}

impl ShortTimeCoefficients {
    /// Linearised dephasing rate `gamma0(t) ~ l0 t`.
    pub fn gamma0(&self, t: f64) -> f64 {
        self.l0 * t
    }

    /// Quadratic transform pair `(phi_c, phi_s)` near `t = 0`.
    pub fn transforms(&self, t: f64) -> (f64, f64) {
        (self.l_c0 - self.l_c2 * t * t, self.l_s1 * t)
    }
}

/// Linearised dephasing rate `l0 t`.
pub fn short_time_gamma(coeffs: &ShortTimeCoefficients, t: f64) -> f64 {
    coeffs.gamma0(t)
}

/// Which transform a tail law describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TailTarget {
    PhiC,
    PhiS,
}

/// How the leading tail coefficient was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TailRegime {
    /// Trigonometric factor of the leading edge term is non-zero.
    Generic,
    /// Natural leading exponent of the degenerate parity, rescued by a
    /// natural logarithmic power (the law loses one power of the log).
    NaturalLog,
    /// Same rescue with a real (class-2) logarithmic power.
    RealLog,
    /// Leading term contributes nothing; the first usable subleading
    /// exponent of the `Lambda` expansion carries the law.
    Fallback,
}

/// Asymptotic law `phi(t) ~ coefficient (w_s t)^{exponent} ln(w_s t)^{log_exponent}`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct TailLaw {
    pub target: TailTarget,
    pub exponent: f64,
    pub log_exponent: f64,
    pub coefficient: f64,
    pub regime: TailRegime,
    #[serde(skip)]
    omega_s: f64,
}

impl TailLaw {
    /// Evaluate the law at time `t`; meaningful for `w_s t > 1` (and well
    /// past it when a logarithmic factor is present).
    pub fn eval(&self, t: f64) -> f64 {
        let tau = self.omega_s * t;
        self.coefficient * tau.powf(self.exponent) * tau.ln().powf(self.log_exponent)
    }
}

/// Evaluate a tail law at time `t`.
pub fn tail_eval(law: &TailLaw, t: f64) -> f64 {
    law.eval(t)
}

/// Is the exponent a natural number of the parity whose trigonometric
/// transform factor vanishes for this target?
fn degenerate(target: TailTarget, a: f64) -> bool {
    match as_natural(a) {
        Some(n) => match target {
            TailTarget::PhiC => n % 2 == 0,
            TailTarget::PhiS => n % 2 == 1,
        },
        None => false,
    }
}

/// Trigonometric transform factor of a non-degenerate exponent: exact signs
/// for naturals, closed form otherwise.
fn trig_factor(target: TailTarget, a: f64) -> f64 {
    if let Some(n) = as_natural(a) {
        // the surviving parities: cos(pi(1+a)/2) for odd a, sin for even a
        let m = n / 2;
        let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
        return match target {
            TailTarget::PhiC => -sign, // a = 1 + 2m: cos(pi(1+m)) = -(-1)^m
            TailTarget::PhiS => sign,  // a = 2m: sin(pi/2 + pi m) = (-1)^m
        };
    }
    match target {
        TailTarget::PhiC => (FRAC_PI_2 * (1.0 + a)).cos(),
        TailTarget::PhiS => (FRAC_PI_2 * (1.0 + a)).sin(),
    }
}

/// Sign `(-1)^m` of the surviving derivative factor at a degenerate natural
/// exponent (`a = 2m` for the cosine target, `a = 1 + 2m` for the sine).
fn degenerate_sign(target: TailTarget, a: f64) -> f64 {
    let n = as_natural(a).expect("degenerate exponents are natural");
    let m = match target {
        TailTarget::PhiC => n / 2,
        TailTarget::PhiS => (n - 1) / 2,
    };
    if m % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Tail contribution of a single expansion term, if it has one.
fn term_tail(target: TailTarget, term: &EdgeTerm, prefactor: f64) -> Option<(f64, f64, f64, bool)> {
    let (a, lp, c) = (term.exponent, term.log_power, term.coeff);
    if !degenerate(target, a) {
        let coeff = prefactor * c * trig_factor(target, a) * gamma(1.0 + a);
        return Some((-1.0 - a, lp, coeff, false));
    }
    if lp == 0.0 {
        return None; // transform of this term decays faster than any law here
    }
    // the trigonometric factor vanishes but its derivative against the
    // exponent survives; one logarithm is consumed in exchange
    let coeff = prefactor * c * lp * FRAC_PI_2 * degenerate_sign(target, a) * gamma(1.0 + a);
    Some((-1.0 - a, lp - 1.0, coeff, true))
}

/// Leading long-time law of `phi_c` or `phi_s` for a gapped density.
pub fn tail_law(sd: &GappedSpectralDensity, target: TailTarget) -> Result<TailLaw> {
    let lam = sd.lambda_expansion(12)?;
    let prefactor = sd.omega_s() * sd.omega_s() / sd.omega_g();
    let class = sd.edge_profile().class;

    let groups = lam.exponent_groups();
    for (idx, term) in groups.iter().enumerate() {
        if let Some((exponent, log_exponent, coefficient, degenerate_used)) =
            term_tail(target, term, prefactor)
        {
            let regime = if idx > 0 {
                TailRegime::Fallback
            } else if !degenerate_used {
                TailRegime::Generic
            } else if class == SdClass::Class1 {
                TailRegime::NaturalLog
            } else {
                TailRegime::RealLog
            };
            return Ok(TailLaw {
                target,
                exponent,
                log_exponent,
                coefficient,
                regime,
                omega_s: sd.omega_s(),
            });
        }
    }
    Err(Error::UnresolvedRegime(
        "no declared expansion exponent contributes to this transform tail; \
         a deeper edge expansion is needed"
            .into(),
    ))
}

/// Convenience: both tail laws at once.
pub fn tail_laws(sd: &GappedSpectralDensity) -> Result<(TailLaw, TailLaw)> {
    Ok((
        tail_law(sd, TailTarget::PhiC)?,
        tail_law(sd, TailTarget::PhiS)?,
    ))
}
