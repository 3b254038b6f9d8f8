//! Reservoir spectral densities with a low-frequency gap.
//!
//! A reservoir is described by `J(w)`, vanishing below the gap edge `w_g` and
//! non-negative above it. Everything downstream (dephasing rate, dephasing
//! factor, asymptotics) is driven by two pieces of metadata carried here:
//!
//! * the *edge profile*: the expansion of the dimensionless density
//!   `Omega(nu) = J(w_g + w_s nu) / w_s` around the gap edge `nu -> 0`, either
//!   as `sum c_{j,k} nu^{alpha_j} (-ln nu)^k` with natural log powers
//!   (class 1) or `sum w_j nu^{alpha_j} (-ln nu)^{beta_j}` with real log
//!   powers (class 2), plus the high-frequency decay index `chi0`
//!   (`Omega(nu) = O(nu^{-1-chi0})`);
//! * the *auxiliary function* `Lambda(nu) = Omega(nu) / (1 + nu/nu0)` with
//!   `nu0 = w_g / w_s`, whose cosine and sine transforms are the slowly
//!   varying envelope pair `(phi_c, phi_s)` of the dephasing rate.

use std::fmt;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which expansion family the edge profile belongs to: class 1 has natural
/// log powers (possibly several per exponent), class 2 a single real log
/// power per exponent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SdClass {
    Class1,
    Class2,
}

/// One term `coeff * nu^exponent * (-ln nu)^log_power` of an edge expansion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EdgeTerm {
    pub exponent: f64,
    pub log_power: f64,
    pub coeff: f64,
}

/// Behaviour of `Omega(nu)` as `nu -> 0`, declared (not fitted) because the
/// asymptotic laws branch on exact arithmetic properties of the exponents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeProfile {
    pub class: SdClass,
    /// Leading edge exponent `alpha0 > -1`.
    pub alpha0: f64,
    /// Log power of the leading term: `n0` (natural) for class 1, `beta0`
    /// (real) for class 2.
    pub log_power: f64,
    /// Coefficient of the leading term; strictly positive.
    pub leading_coeff: f64,
    /// Further terms ordered by (exponent ascending, log power descending).
    /// Entries may share `alpha0` with smaller log powers.
    pub higher_terms: Vec<EdgeTerm>,
    /// High-frequency decay index: `Omega(nu) = O(nu^{-1-chi0})`; infinite
    /// for exponentially decaying reservoirs.
    pub chi0: f64,
}

impl EdgeProfile {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha0 > -1.0) || !self.alpha0.is_finite() {
            return Err(Error::InvalidParameter {
                name: "alpha0",
                value: self.alpha0,
                requirement: "leading edge exponent must satisfy alpha0 > -1",
            });
        }
        if !(self.leading_coeff > 0.0) {
            return Err(Error::InvalidParameter {
                name: "leading_coeff",
                value: self.leading_coeff,
                requirement: "leading edge coefficient must be positive",
            });
        }
        if self.alpha0 == 0.0 && self.log_power != 0.0 {
            return Err(Error::SdDefinition(
                "alpha0 = 0 requires a vanishing leading log power; otherwise Omega(0) != 0 \
                 and the edge would not close the gap continuously"
                    .into(),
            ));
        }
        if !(self.chi0 > 0.0) {
            return Err(Error::InvalidParameter {
                name: "chi0",
                value: self.chi0,
                requirement: "high-frequency decay index must be positive",
            });
        }
        if self.class == SdClass::Class1 {
            for lp in
                std::iter::once(self.log_power).chain(self.higher_terms.iter().map(|t| t.log_power))
            {
                if lp < 0.0 || lp.fract() != 0.0 {
                    return Err(Error::SdDefinition(format!(
                        "class-1 log powers must be natural numbers, got {lp}"
                    )));
                }
            }
        }
        let mut prev = (self.alpha0, self.log_power);
        for t in &self.higher_terms {
            let ordered = t.exponent > prev.0 || (t.exponent == prev.0 && t.log_power < prev.1);
            if !ordered {
                return Err(Error::SdDefinition(format!(
                    "edge terms must be ordered by (exponent asc, log power desc): \
                     ({}, {}) follows ({}, {})",
                    t.exponent, t.log_power, prev.0, prev.1
                )));
            }
            prev = (t.exponent, t.log_power);
        }
        Ok(())
    }

    /// All declared terms, leading first.
    pub(crate) fn terms(&self) -> impl Iterator<Item = EdgeTerm> + '_ {
        std::iter::once(EdgeTerm {
            exponent: self.alpha0,
            log_power: self.log_power,
            coeff: self.leading_coeff,
        })
        .chain(self.higher_terms.iter().copied())
    }
}

/// Exact naturalness test on a declared exponent. Declared exponents and
/// integer shifts of them are exact in f64, so `fract() == 0` is an exact
/// test here, not a floating-point tolerance.
pub(crate) fn as_natural(x: f64) -> Option<u64> {
    if x >= 0.0 && x.fract() == 0.0 && x <= 2.0_f64.powi(52) {
        Some(x as u64)
    } else {
        None
    }
}

/// How `J(w)/w` decays towards the upper end of the support; used to bound
/// truncation remainders of semi-infinite quadratures.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TailDecay {
    /// Support ends at a finite `w_max`; no remainder.
    Finite,
    /// `J/w ~ e^{-rate w}` up to slowly varying factors.
    Exponential { rate: f64 },
    /// `J/w = O(w^{-2-chi0})`.
    Algebraic { chi0: f64 },
}

#[derive(Clone)]
enum Shape {
    /// `J(w_g + w') = q1 w'^alpha e^{-lambda1 w'}`, -1 < alpha < 0.
    PowerLawGap { q1: f64, alpha: f64, lambda1: f64 },
    /// `J(w_g + w') = q2 / (lambda2^2 + w'^2)`.
    LorentzianGap { q2: f64, lambda2: f64 },
    /// `J(w) = w_s (w/w_s)^alpha e^{-w/w_s}`, hard-truncated below the gap.
    OhmicHardGap { alpha: f64 },
    /// Piecewise-linear table of (w/w_s, J) pairs.
    Tabulated { x: Vec<f64>, y: Vec<f64> },
    /// User-supplied closure for `J(w)` above the gap.
    Analytic(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

/// A gapped reservoir spectral density together with the edge metadata the
/// asymptotic machinery needs.
#[derive(Clone)]
pub struct GappedSpectralDensity {
    omega_g: f64,
    omega_s: f64,
    omega_max: f64,
    edge: EdgeProfile,
    tail: TailDecay,
    shape: Shape,
    /// `int J/w dw` computed at construction; the model's integrability
    /// certificate. Infinite only for the permitted gapless controls.
    j_over_omega: f64,
}

impl fmt::Debug for GappedSpectralDensity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let family = match &self.shape {
            Shape::PowerLawGap { .. } => "power_law_gap",
            Shape::LorentzianGap { .. } => "lorentzian_gap",
            Shape::OhmicHardGap { .. } => "ohmic_hard_gap",
            Shape::Tabulated { .. } => "tabulated",
            Shape::Analytic(_) => "analytic",
        };
        f.debug_struct("GappedSpectralDensity")
            .field("family", &family)
            .field("omega_g", &self.omega_g)
            .field("omega_s", &self.omega_s)
            .field("omega_max", &self.omega_max)
            .field("edge", &self.edge)
            .finish()
    }
}

impl GappedSpectralDensity {
    /// Gap edge frequency.
    pub fn omega_g(&self) -> f64 {
        self.omega_g
    }

    /// Typical reservoir frequency scale (sets the dimensionless time
    /// `tau = w_s t`).
    pub fn omega_s(&self) -> f64 {
        self.omega_s
    }

    /// Upper support edge (infinite for the built-in families).
    pub fn omega_max(&self) -> f64 {
        self.omega_max
    }

    /// Dimensionless gap `nu0 = w_g / w_s`.
    pub fn nu0(&self) -> f64 {
        self.omega_g / self.omega_s
    }

    pub fn edge_profile(&self) -> &EdgeProfile {
        &self.edge
    }

    pub fn tail_decay(&self) -> TailDecay {
        self.tail
    }

    /// `int J(w)/w dw` over the support, fixed at construction. Infinite for
    /// gapless controls whose edge is too slow (the dephasing rate itself is
    /// still finite there because `sin(w t)` regularises the edge).
    pub fn j_over_omega(&self) -> f64 {
        self.j_over_omega
    }

    /// Evaluate `J(w)`; zero outside `[w_g, w_max]`.
    pub fn evaluate(&self, omega: f64) -> f64 {
        if !(omega >= self.omega_g) || omega > self.omega_max {
            return 0.0;
        }
        match &self.shape {
            Shape::PowerLawGap { q1, alpha, lambda1 } => {
                let wp = omega - self.omega_g;
                q1 * wp.powf(*alpha) * (-lambda1 * wp).exp()
            }
            Shape::LorentzianGap { q2, lambda2 } => {
                let wp = omega - self.omega_g;
                q2 / (lambda2 * lambda2 + wp * wp)
            }
            Shape::OhmicHardGap { alpha } => {
                let x = omega / self.omega_s;
                self.omega_s * x.powf(*alpha) * (-x).exp()
            }
            Shape::Tabulated { x, y } => {
                let q = omega / self.omega_s;
                interp_linear(x, y, q)
            }
            Shape::Analytic(f) => f(omega),
        }
    }

    /// Evaluate `J(w_g + w')` directly in the offset `w'` from the gap edge.
    ///
    /// For shapes that are singular at the edge this keeps the edge distance
    /// exact at any magnitude: going through `evaluate(w_g + w')` would let
    /// the sum absorb offsets below the rounding scale of `w_g`, and the
    /// recovered distance `w - w_g = 0` then blows up the singular factor.
    pub fn evaluate_offset(&self, wp: f64) -> f64 {
        if !(wp >= 0.0) || self.omega_g + wp > self.omega_max {
            return 0.0;
        }
        match &self.shape {
            Shape::PowerLawGap { q1, alpha, lambda1 } => {
                q1 * wp.powf(*alpha) * (-lambda1 * wp).exp()
            }
            Shape::LorentzianGap { q2, lambda2 } => q2 / (lambda2 * lambda2 + wp * wp),
            _ => self.evaluate(self.omega_g + wp),
        }
    }

    /// Dimensionless density `Omega(nu) = J(w_g + w_s nu) / w_s`.
    pub fn omega_fn(&self, nu: f64) -> f64 {
        self.evaluate(self.omega_g + self.omega_s * nu) / self.omega_s
    }

    /// Auxiliary function `Lambda(nu) = Omega(nu) / (1 + nu/nu0)`; defined
    /// for gapped reservoirs only.
    pub fn lambda_function(&self, nu: f64) -> Result<f64> {
        if !(self.omega_g > 0.0) {
            return Err(Error::InvalidParameter {
                name: "omega_g",
                value: self.omega_g,
                requirement: "Lambda(nu) requires a positive gap (nu0 = omega_g/omega_s > 0)",
            });
        }
        if !(nu >= 0.0) {
            return Err(Error::InvalidParameter {
                name: "nu",
                value: nu,
                requirement: "Lambda is defined for nu >= 0",
            });
        }
        Ok(self.omega_fn(nu) / (1.0 + nu / self.nu0()))
    }

    /// Formal edge expansion of `Lambda(nu)`: the declared `Omega` expansion
    /// multiplied by the geometric series of `1/(1 + nu/nu0)`, merged and
    /// sorted, truncated to the first `order` terms.
    pub fn lambda_expansion(&self, order: usize) -> Result<LambdaExpansion> {
        if !(self.omega_g > 0.0) {
            return Err(Error::InvalidParameter {
                name: "omega_g",
                value: self.omega_g,
                requirement: "the Lambda expansion requires a positive gap",
            });
        }
        if order == 0 {
            return Err(Error::InvalidParameter {
                name: "order",
                value: 0.0,
                requirement: "at least one expansion term must be requested",
            });
        }
        let nu0 = self.nu0();
        let shifts = order + 4;
        let mut terms: Vec<EdgeTerm> = Vec::new();
        for src in self.edge.terms() {
            let mut geo = 1.0;
            for l in 0..=shifts {
                terms.push(EdgeTerm {
                    exponent: src.exponent + l as f64,
                    log_power: src.log_power,
                    coeff: src.coeff * geo,
                });
                geo *= -1.0 / nu0;
            }
        }
        terms.sort_by(|a, b| {
            a.exponent
                .total_cmp(&b.exponent)
                .then(b.log_power.total_cmp(&a.log_power))
        });
        let mut merged: Vec<EdgeTerm> = Vec::with_capacity(order);
        for t in terms {
            match merged.last_mut() {
                Some(last) if last.exponent == t.exponent && last.log_power == t.log_power => {
                    last.coeff += t.coeff;
                }
                _ => merged.push(t),
            }
        }
        merged.retain(|t| t.coeff != 0.0);
        merged.truncate(order);
        Ok(LambdaExpansion {
            nu0,
            class: self.edge.class,
            terms: merged,
        })
    }

    /// Check the backflow sufficient condition `J'(w) < J(w)/w` on a
    /// log-spaced grid above the gap. Derivatives are central differences
    /// with the stencil clamped inside the support so the hard edge does not
    /// produce spurious spikes.
    pub fn check_backflow_condition(&self, n_grid: usize) -> BackflowConditionCheck {
        let n = if n_grid == 0 { 2048 } else { n_grid.max(8) };
        let lo = if self.omega_g > 0.0 {
            self.omega_g * (1.0 + 1e-9)
        } else {
            1e-6 * self.omega_s
        };
        let hi = if self.omega_max.is_finite() {
            self.omega_max
        } else {
            self.support_edge(1e-14 * self.peak_envelope())
        };
        let ratio = (hi / lo).max(1.0 + 1e-12);
        let mut witness = None;
        for i in 0..n {
            let w = lo * ratio.powf(i as f64 / (n - 1) as f64);
            let mut h = w * 1e-6;
            if self.omega_g > 0.0 {
                h = h.min(0.5 * (w - self.omega_g));
            }
            if self.omega_max.is_finite() {
                h = h.min(0.5 * (self.omega_max - w));
            }
            if !(h > 0.0) {
                continue;
            }
            let jp = (self.evaluate(w + h) - self.evaluate(w - h)) / (2.0 * h);
            let bound = self.evaluate(w) / w;
            if jp >= bound {
                witness = Some(ConditionWitness {
                    omega: w,
                    j_prime: jp,
                    j_over_omega: bound,
                });
                break;
            }
        }
        BackflowConditionCheck {
            holds: witness.is_none(),
            witness,
            grid_points: n,
        }
    }

    /// Largest value of the envelope `J(w)/w` probed on a coarse grid; used
    /// to set relative thresholds.
    pub(crate) fn peak_envelope(&self) -> f64 {
        let lo = self.omega_g + 1e-6 * self.omega_s;
        let hi = if self.omega_max.is_finite() {
            self.omega_max
        } else {
            self.omega_g + 60.0 * self.omega_s
        };
        let mut peak = 0.0f64;
        for i in 0..256 {
            let w = lo + (hi - lo) * i as f64 / 255.0;
            peak = peak.max(self.evaluate(w) / w);
        }
        peak
    }

    /// Frequency beyond which the envelope `J/w` stays below `thresh`
    /// (doubling search plus bisection; capped for pathological inputs).
    pub(crate) fn support_edge(&self, thresh: f64) -> f64 {
        if self.omega_max.is_finite() {
            return self.omega_max;
        }
        let env = |w: f64| self.evaluate(w) / w;
        // start beyond the envelope peak so the search sees the decaying side
        let mut lo = self.omega_g + self.omega_s;
        if let Shape::OhmicHardGap { alpha } = self.shape {
            lo = lo.max(self.omega_s * (2.0 + 2.0 * alpha.abs()));
        }
        let cap = self.omega_g + 1e9 * self.omega_s;
        let mut hi = lo * 2.0;
        while env(hi) >= thresh {
            hi *= 2.0;
            if hi > cap {
                return cap;
            }
        }
        let mut a = lo;
        let mut b = hi;
        for _ in 0..96 {
            let mid = 0.5 * (a + b);
            if env(mid) >= thresh {
                a = mid;
            } else {
                b = mid;
            }
        }
        b
    }

    /// Serializable description; fails for analytic closures.
    pub fn to_spec(&self) -> Result<SdSpec> {
        let family = match &self.shape {
            Shape::PowerLawGap { q1, alpha, lambda1 } => FamilySpec::PowerLawGap {
                q1: *q1,
                alpha: *alpha,
                lambda1: *lambda1,
            },
            Shape::LorentzianGap { q2, lambda2 } => FamilySpec::LorentzianGap {
                q2: *q2,
                lambda2: *lambda2,
            },
            Shape::OhmicHardGap { alpha } => FamilySpec::OhmicHardGap { alpha: *alpha },
            Shape::Tabulated { x, y } => FamilySpec::Tabulated {
                table: x.iter().copied().zip(y.iter().copied()).collect(),
            },
            Shape::Analytic(_) => {
                return Err(Error::SdDefinition(
                    "an analytic closure cannot be serialized; use a tabulated density".into(),
                ))
            }
        };
        Ok(SdSpec {
            family,
            omega_g: self.omega_g,
            omega_s: Some(self.omega_s),
            edge_profile: Some(EdgeProfileSpec::from_profile(&self.edge)),
        })
    }
}

fn interp_linear(x: &[f64], y: &[f64], q: f64) -> f64 {
    if x.is_empty() || q < x[0] || q > *x.last().unwrap() {
        return 0.0;
    }
    match x.binary_search_by(|v| v.total_cmp(&q)) {
        Ok(i) => y[i],
        Err(i) => {
            // i >= 1 and i < len here because q is inside the table range
            let (x0, x1) = (x[i - 1], x[i]);
            let t = (q - x0) / (x1 - x0);
            y[i - 1] + t * (y[i] - y[i - 1])
        }
    }
}

/// Truncated edge expansion of the auxiliary function `Lambda`.
#[derive(Debug, Clone, PartialEq)]
pub struct LambdaExpansion {
    pub nu0: f64,
    pub class: SdClass,
    /// Terms ordered by (exponent ascending, log power descending); the
    /// leading term always coincides with the `Omega` expansion's leading
    /// term.
    pub terms: Vec<EdgeTerm>,
}

impl LambdaExpansion {
    /// Evaluate the truncated expansion at `nu` (diagnostic use; only
    /// meaningful for small `nu`).
    pub fn evaluate(&self, nu: f64) -> f64 {
        let ln = -nu.ln();
        self.terms
            .iter()
            .map(|t| t.coeff * nu.powf(t.exponent) * ln.powf(t.log_power))
            .sum()
    }

    /// Group the terms by exponent, yielding `(exponent, top log power,
    /// coefficient of the top log power)` in ascending exponent order. The
    /// asymptotic fallback searches walk these groups.
    pub(crate) fn exponent_groups(&self) -> Vec<EdgeTerm> {
        let mut out: Vec<EdgeTerm> = Vec::new();
        for t in &self.terms {
            match out.last() {
                Some(last) if last.exponent == t.exponent => {} // keep top log power
                _ => out.push(*t),
            }
        }
        out
    }
}

/// Witness of a violated backflow condition.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ConditionWitness {
    pub omega: f64,
    pub j_prime: f64,
    pub j_over_omega: f64,
}

/// Outcome of `check_backflow_condition`.
#[derive(Debug, Clone, Serialize)]
pub struct BackflowConditionCheck {
    pub holds: bool,
    pub witness: Option<ConditionWitness>,
    pub grid_points: usize,
}

// ---------------------------------------------------------------------------
// constructors
// ---------------------------------------------------------------------------

fn require(cond: bool, name: &'static str, value: f64, requirement: &'static str) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name,
            value,
            requirement,
        })
    }
}

/// Number of edge-expansion terms attached to the built-in families; deep
/// enough that any fallback search of practical order terminates inside the
/// declared expansion.
const BUILTIN_EDGE_DEPTH: usize = 16;

/// `J(w_g + w') = q1 w'^alpha e^{-lambda1 w'}` with `-1 < alpha < 0`: an
/// integrable inverse-power edge with exponential cutoff. The scale
/// frequency is `1/lambda1`.
pub fn make_power_law_gap_sd(
    q1: f64,
    alpha: f64,
    lambda1: f64,
    omega_g: f64,
) -> Result<GappedSpectralDensity> {
    require(q1 > 0.0, "q1", q1, "overall weight must be positive")?;
    require(
        alpha > -1.0 && alpha < 0.0,
        "alpha",
        alpha,
        "edge exponent must lie in (-1, 0)",
    )?;
    require(
        lambda1 > 0.0,
        "lambda1",
        lambda1,
        "cutoff rate must be positive",
    )?;
    require(
        omega_g > 0.0,
        "omega_g",
        omega_g,
        "gap edge must be positive",
    )?;

    let omega_s = 1.0 / lambda1;
    // Omega(nu) = q1 w_s^{alpha-1} nu^alpha e^{-nu}; the exponential series
    // contributes (-1)^k / k! at exponent alpha + k
    let c0 = q1 * omega_s.powf(alpha - 1.0);
    let mut kfact = 1.0;
    let higher = (1..=BUILTIN_EDGE_DEPTH)
        .map(|k| {
            kfact *= k as f64;
            EdgeTerm {
                exponent: alpha + k as f64,
                log_power: 0.0,
                coeff: c0 * (if k % 2 == 0 { 1.0 } else { -1.0 }) / kfact,
            }
        })
        .collect();
    let edge = EdgeProfile {
        class: SdClass::Class1,
        alpha0: alpha,
        log_power: 0.0,
        leading_coeff: c0,
        higher_terms: higher,
        chi0: f64::INFINITY,
    };
    finish(
        omega_g,
        omega_s,
        f64::INFINITY,
        edge,
        TailDecay::Exponential { rate: lambda1 },
        Shape::PowerLawGap { q1, alpha, lambda1 },
    )
}

/// `J(w_g + w') = q2 / (lambda2^2 + w'^2)`: a Lorentzian profile anchored at
/// the gap edge. The scale frequency is the width `lambda2`.
pub fn make_lorentzian_gap_sd(
    q2: f64,
    lambda2: f64,
    omega_g: f64,
) -> Result<GappedSpectralDensity> {
    require(q2 > 0.0, "q2", q2, "overall weight must be positive")?;
    require(lambda2 > 0.0, "lambda2", lambda2, "width must be positive")?;
    require(
        omega_g > 0.0,
        "omega_g",
        omega_g,
        "gap edge must be positive",
    )?;

    let omega_s = lambda2;
    // Omega(nu) = (q2/lambda2^3) / (1 + nu^2) = (q2/lambda2^3) sum (-1)^k nu^{2k}
    let c0 = q2 / lambda2.powi(3);
    let higher = (1..=BUILTIN_EDGE_DEPTH / 2)
        .map(|k| EdgeTerm {
            exponent: 2.0 * k as f64,
            log_power: 0.0,
            coeff: c0 * if k % 2 == 0 { 1.0 } else { -1.0 },
        })
        .collect();
    let edge = EdgeProfile {
        class: SdClass::Class1,
        alpha0: 0.0,
        log_power: 0.0,
        leading_coeff: c0,
        higher_terms: higher,
        chi0: 1.0,
    };
    finish(
        omega_g,
        omega_s,
        f64::INFINITY,
        edge,
        TailDecay::Algebraic { chi0: 1.0 },
        Shape::LorentzianGap { q2, lambda2 },
    )
}

/// `J(w) = w_s (w/w_s)^alpha e^{-w/w_s}` hard-truncated below `w_g`. With
/// `omega_g = 0` this degenerates to the ordinary ohmic-family control
/// (no gap); the gapless `alpha = 0` case has a divergent `int J/w` but a
/// finite dephasing rate, so construction is permitted and the divergence is
/// recorded as an infinite certificate.
pub fn make_figure_sd(alpha: f64, omega_g: f64, omega_s: f64) -> Result<GappedSpectralDensity> {
    require(alpha.is_finite(), "alpha", alpha, "exponent must be finite")?;
    require(
        omega_g >= 0.0,
        "omega_g",
        omega_g,
        "gap edge must be non-negative",
    )?;
    require(
        omega_s > 0.0,
        "omega_s",
        omega_s,
        "scale frequency must be positive",
    )?;
    if omega_g == 0.0 {
        require(
            alpha > -1.0,
            "alpha",
            alpha,
            "a gapless density needs alpha > -1 for the rate integral to exist",
        )?;
    }

    let edge = if omega_g > 0.0 {
        // Omega(nu) = (nu0 + nu)^alpha e^{-(nu0+nu)}: analytic at the edge,
        // alpha0 = 0. Coefficients from the product of the binomial series of
        // (1 + nu/nu0)^alpha with the exponential series.
        let nu0 = omega_g / omega_s;
        let c0 = nu0.powf(alpha) * (-nu0).exp();
        let depth = BUILTIN_EDGE_DEPTH;
        let mut binom = vec![0.0f64; depth + 1]; // binom(alpha, i) / nu0^i
        binom[0] = 1.0;
        for i in 1..=depth {
            binom[i] = binom[i - 1] * (alpha - (i as f64 - 1.0)) / (i as f64 * nu0);
        }
        let mut expc = vec![0.0f64; depth + 1]; // (-1)^j / j!
        expc[0] = 1.0;
        for j in 1..=depth {
            expc[j] = -expc[j - 1] / j as f64;
        }
        let mut higher = Vec::with_capacity(depth);
        for k in 1..=depth {
            let mut c = 0.0;
            for i in 0..=k {
                c += binom[i] * expc[k - i];
            }
            higher.push(EdgeTerm {
                exponent: k as f64,
                log_power: 0.0,
                coeff: c0 * c,
            });
        }
        EdgeProfile {
            class: SdClass::Class1,
            alpha0: 0.0,
            log_power: 0.0,
            leading_coeff: c0,
            higher_terms: higher,
            chi0: f64::INFINITY,
        }
    } else {
        // gapless: Omega(nu) = nu^alpha e^{-nu}
        let mut kfact = 1.0;
        let higher = (1..=BUILTIN_EDGE_DEPTH)
            .map(|k| {
                kfact *= k as f64;
                EdgeTerm {
                    exponent: alpha + k as f64,
                    log_power: 0.0,
                    coeff: (if k % 2 == 0 { 1.0 } else { -1.0 }) / kfact,
                }
            })
            .collect();
        EdgeProfile {
            class: SdClass::Class1,
            alpha0: alpha,
            log_power: 0.0,
            leading_coeff: 1.0,
            higher_terms: higher,
            chi0: f64::INFINITY,
        }
    };
    finish(
        omega_g,
        omega_s,
        f64::INFINITY,
        edge,
        TailDecay::Exponential {
            rate: 1.0 / omega_s,
        },
        Shape::OhmicHardGap { alpha },
    )
}

/// Build a density from tabulated `(w/w_s, J)` pairs with linear
/// interpolation. The caller must declare the edge profile; it cannot be
/// inferred robustly from samples.
pub fn make_tabulated_sd(
    table: Vec<(f64, f64)>,
    omega_g: f64,
    omega_s: f64,
    edge: EdgeProfile,
) -> Result<GappedSpectralDensity> {
    require(
        omega_g > 0.0,
        "omega_g",
        omega_g,
        "gap edge must be positive",
    )?;
    require(
        omega_s > 0.0,
        "omega_s",
        omega_s,
        "scale frequency must be positive",
    )?;
    if table.len() < 2 {
        return Err(Error::SdDefinition(
            "a tabulated density needs at least two rows".into(),
        ));
    }
    let gap_x = omega_g / omega_s;
    let mut x = Vec::with_capacity(table.len());
    let mut y = Vec::with_capacity(table.len());
    for (i, &(xi, yi)) in table.iter().enumerate() {
        if !xi.is_finite() || !yi.is_finite() {
            return Err(Error::SdDefinition(format!(
                "table row {i} is not finite: ({xi}, {yi})"
            )));
        }
        if let Some(&prev) = x.last() {
            if xi <= prev {
                return Err(Error::SdDefinition(format!(
                    "table frequencies must increase strictly: row {i} has {xi} after {prev}"
                )));
            }
        }
        if yi < 0.0 {
            return Err(Error::SdDefinition(format!(
                "spectral density must be non-negative: row {i} has J = {yi}"
            )));
        }
        if xi < gap_x && yi > 0.0 {
            return Err(Error::SdDefinition(format!(
                "row {i} lies below the gap (w/w_s = {xi} < {gap_x}) but has J = {yi} != 0"
            )));
        }
        x.push(xi);
        y.push(yi);
    }
    let omega_max = x.last().unwrap() * omega_s;
    finish(
        omega_g,
        omega_s,
        omega_max,
        edge,
        TailDecay::Finite,
        Shape::Tabulated { x, y },
    )
}

/// Load a tabulated density from CSV rows `w/w_s, J` (comments with `#`,
/// an optional non-numeric header row is skipped).
pub fn tabulated_sd_from_csv(
    path: &Path,
    omega_g: f64,
    omega_s: f64,
    edge: EdgeProfile,
) -> Result<GappedSpectralDensity> {
    let text = std::fs::read_to_string(path)?;
    let mut rows = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut fields = line.split(',').map(str::trim);
        let (a, b) = (fields.next(), fields.next());
        match (a.map(str::parse::<f64>), b.map(str::parse::<f64>)) {
            (Some(Ok(xi)), Some(Ok(yi))) => rows.push((xi, yi)),
            _ if rows.is_empty() && lineno == 0 => continue, // header row
            _ => {
                return Err(Error::SdDefinition(format!(
                    "line {} of {} is not a `w/w_s, J` pair: {line:?}",
                    lineno + 1,
                    path.display()
                )))
            }
        }
    }
    make_tabulated_sd(rows, omega_g, omega_s, edge)
}

/// Build a density from an arbitrary closure for `J(w)` above the gap. The
/// closure is spot-checked for non-negativity on a coarse grid.
pub fn make_analytic_sd(
    omega_g: f64,
    omega_s: f64,
    omega_max: f64,
    edge: EdgeProfile,
    tail: TailDecay,
    j: impl Fn(f64) -> f64 + Send + Sync + 'static,
) -> Result<GappedSpectralDensity> {
    require(
        omega_g > 0.0,
        "omega_g",
        omega_g,
        "gap edge must be positive",
    )?;
    require(
        omega_s > 0.0,
        "omega_s",
        omega_s,
        "scale frequency must be positive",
    )?;
    require(
        omega_max > omega_g,
        "omega_max",
        omega_max,
        "support must extend above the gap",
    )?;
    finish(
        omega_g,
        omega_s,
        omega_max,
        edge,
        tail,
        Shape::Analytic(Arc::new(j)),
    )
}

/// Shared constructor tail: validate the edge profile, spot-check
/// non-negativity, and compute the integrability certificate.
fn finish(
    omega_g: f64,
    omega_s: f64,
    omega_max: f64,
    edge: EdgeProfile,
    tail: TailDecay,
    shape: Shape,
) -> Result<GappedSpectralDensity> {
    edge.validate()?;
    let mut sd = GappedSpectralDensity {
        omega_g,
        omega_s,
        omega_max,
        edge,
        tail,
        shape,
        j_over_omega: f64::NAN,
    };
    // non-negativity spot check (the built-ins satisfy it by construction,
    // but analytic closures are user input)
    let hi = if omega_max.is_finite() {
        omega_max
    } else {
        omega_g + 40.0 * omega_s
    };
    let lo = omega_g + 1e-9 * (hi - omega_g);
    for i in 0..33 {
        let w = lo * ((hi / lo).powf(i as f64 / 32.0));
        let j = sd.evaluate(w);
        if j < 0.0 || j.is_nan() {
            return Err(Error::SdDefinition(format!(
                "J({w}) = {j}: spectral densities must be non-negative and finite"
            )));
        }
    }
    // integrability certificate int J/w dw
    let gapless_divergent = omega_g == 0.0 && sd.edge.alpha0 <= 0.0;
    sd.j_over_omega = if gapless_divergent {
        f64::INFINITY
    } else {
        let cfg = crate::quad::QuadratureConfig {
            rel_tol: 1e-8,
            ..Default::default()
        };
        match crate::quad::spectral_moment(&sd, 0, &cfg) {
            Ok(est) => est.value,
            Err(e) => {
                return Err(Error::NotIntegrable(format!(
                    "int J/w dw did not converge at construction: {e}"
                )))
            }
        }
    };
    Ok(sd)
}

// ---------------------------------------------------------------------------
// serialization
// ---------------------------------------------------------------------------

/// Family tag plus parameters, exactly the `{"family": ..., "params": ...}`
/// pair of the JSON schema.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "family", content = "params", rename_all = "snake_case")]
pub enum FamilySpec {
    PowerLawGap { q1: f64, alpha: f64, lambda1: f64 },
    LorentzianGap { q2: f64, lambda2: f64 },
    OhmicHardGap { alpha: f64 },
    Tabulated { table: Vec<(f64, f64)> },
}

/// Serializable edge profile; `chi0: null` encodes an infinite decay index.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EdgeProfileSpec {
    pub class: u8,
    pub alpha0: f64,
    pub log_power: f64,
    pub coeff: f64,
    pub chi0: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub higher_terms: Vec<(f64, f64, f64)>,
}

impl EdgeProfileSpec {
    pub fn from_profile(p: &EdgeProfile) -> Self {
        EdgeProfileSpec {
            class: match p.class {
                SdClass::Class1 => 1,
                SdClass::Class2 => 2,
            },
            alpha0: p.alpha0,
            log_power: p.log_power,
            coeff: p.leading_coeff,
            chi0: p.chi0.is_finite().then_some(p.chi0),
            higher_terms: p
                .higher_terms
                .iter()
                .map(|t| (t.exponent, t.log_power, t.coeff))
                .collect(),
        }
    }

    pub fn to_profile(&self) -> Result<EdgeProfile> {
        let class = match self.class {
            1 => SdClass::Class1,
            2 => SdClass::Class2,
            c => {
                return Err(Error::SdDefinition(format!(
                    "edge profile class must be 1 or 2, got {c}"
                )))
            }
        };
        let p = EdgeProfile {
            class,
            alpha0: self.alpha0,
            log_power: self.log_power,
            leading_coeff: self.coeff,
            higher_terms: self
                .higher_terms
                .iter()
                .map(|&(e, k, c)| EdgeTerm {
                    exponent: e,
                    log_power: k,
                    coeff: c,
                })
                .collect(),
            chi0: self.chi0.unwrap_or(f64::INFINITY),
        };
        p.validate()?;
        Ok(p)
    }
}

/// JSON description of a density:
/// `{family, params, omega_g, omega_s, edge_profile}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SdSpec {
    #[serde(flatten)]
    pub family: FamilySpec,
    pub omega_g: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega_s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub edge_profile: Option<EdgeProfileSpec>,
}

impl SdSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Construct the density. For the closed-form families the edge profile
    /// is derived from the parameters (a supplied profile is ignored, since
    /// the parameters are authoritative); tabulated densities require one.
    pub fn build(&self) -> Result<GappedSpectralDensity> {
        match &self.family {
            FamilySpec::PowerLawGap { q1, alpha, lambda1 } => {
                make_power_law_gap_sd(*q1, *alpha, *lambda1, self.omega_g)
            }
            FamilySpec::LorentzianGap { q2, lambda2 } => {
                make_lorentzian_gap_sd(*q2, *lambda2, self.omega_g)
            }
            FamilySpec::OhmicHardGap { alpha } => {
                let omega_s = self.omega_s.ok_or(Error::InvalidParameter {
                    name: "omega_s",
                    value: f64::NAN,
                    requirement: "the hard-gap ohmic family needs an explicit omega_s",
                })?;
                make_figure_sd(*alpha, self.omega_g, omega_s)
            }
            FamilySpec::Tabulated { table } => {
                let omega_s = self.omega_s.ok_or(Error::InvalidParameter {
                    name: "omega_s",
                    value: f64::NAN,
                    requirement: "a tabulated density needs an explicit omega_s",
                })?;
                let edge = self
                    .edge_profile
                    .as_ref()
                    .ok_or_else(|| {
                        Error::SdDefinition(
                            "a tabulated density needs a declared edge_profile".into(),
                        )
                    })?
                    .to_profile()?;
                make_tabulated_sd(table.clone(), self.omega_g, omega_s, edge)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn power_law_values() {
        let sd = make_power_law_gap_sd(1.0, -0.5, 1.0, 1.0).unwrap();
        // J(1.25) = 0.25^{-1/2} e^{-1/4}
        assert_relative_eq!(
            sd.evaluate(1.25),
            1.557_601_566_142_809_7,
            max_relative = 1e-14
        );
        assert_eq!(sd.evaluate(0.999), 0.0);
        assert_eq!(sd.omega_s(), 1.0);
        // Lambda(0.25) = J(1.25) / (1 + 0.25)
        assert_relative_eq!(
            sd.lambda_function(0.25).unwrap(),
            1.246_081_252_914_247_8,
            max_relative = 1e-14
        );
    }

    #[test]
    fn power_law_integrability_certificate() {
        // int_0^inf x^{-1/2} e^{-x} / (1+x) dx = pi e erfc(1)
        let sd = make_power_law_gap_sd(1.0, -0.5, 1.0, 1.0).unwrap();
        assert_relative_eq!(
            sd.j_over_omega(),
            1.343_293_421_646_735_2,
            max_relative = 1e-7
        );
    }

    #[test]
    fn lorentzian_values() {
        let sd = make_lorentzian_gap_sd(1.0, 1.0, 1.0).unwrap();
        // Lambda(1) = Omega(1)/(1+1) = (1/2)/2
        assert_relative_eq!(sd.lambda_function(1.0).unwrap(), 0.25, max_relative = 1e-14);
        // l_c0 = int_0^inf dw/((1+w)(1+w^2)) = pi/4 (partial fractions)
        assert_relative_eq!(
            sd.j_over_omega(),
            std::f64::consts::FRAC_PI_4,
            max_relative = 1e-7
        );
        assert_eq!(sd.edge_profile().alpha0, 0.0);
        // Omega(0) = q2/lambda2^3
        assert_relative_eq!(sd.edge_profile().leading_coeff, 1.0, max_relative = 1e-14);
    }

    #[test]
    fn figure_sd_scales() {
        let sd = make_figure_sd(2.0, 0.5, 1.0).unwrap();
        assert_relative_eq!(
            sd.evaluate(2.0),
            4.0 * (-2.0f64).exp(),
            max_relative = 1e-14
        );
        assert_eq!(sd.evaluate(0.49), 0.0);
        // analytic edge: alpha0 = 0 regardless of alpha
        assert_eq!(sd.edge_profile().alpha0, 0.0);
        assert_relative_eq!(
            sd.edge_profile().leading_coeff,
            0.5f64.powf(2.0) * (-0.5f64).exp(),
            max_relative = 1e-14
        );
    }

    #[test]
    fn figure_sd_edge_series_matches_omega_fn() {
        // the declared expansion must reproduce Omega(nu) near the edge
        let sd = make_figure_sd(1.5, 2.0, 1.0).unwrap();
        let lam = sd.lambda_expansion(10).unwrap();
        for nu in [1e-4, 1e-3, 1e-2] {
            let exact = sd.lambda_function(nu).unwrap();
            let series = lam.evaluate(nu);
            assert_relative_eq!(series, exact, max_relative = 1e-8);
        }
    }

    #[test]
    fn gapless_alpha0_certificate_is_infinite() {
        let sd = make_figure_sd(0.0, 0.0, 1.0).unwrap();
        assert!(sd.j_over_omega().is_infinite());
        let sd3 = make_figure_sd(3.0, 0.0, 1.0).unwrap();
        // int_0^inf w^2 e^-w dw = 2
        assert_relative_eq!(sd3.j_over_omega(), 2.0, max_relative = 1e-7);
    }

    #[test]
    fn lambda_expansion_single_inverse_sqrt_term() {
        // Lambda = nu^{-1/2} / (1 + nu): terms nu^{-1/2} - nu^{1/2} + nu^{3/2}
        let edge = EdgeProfile {
            class: SdClass::Class1,
            alpha0: -0.5,
            log_power: 0.0,
            leading_coeff: 1.0,
            higher_terms: vec![],
            chi0: 1.0,
        };
        let sd = make_analytic_sd(1.0, 1.0, 100.0, edge, TailDecay::Finite, |w| {
            (w - 1.0).powf(-0.5)
        })
        .unwrap();
        let lam = sd.lambda_expansion(3).unwrap();
        assert_eq!(lam.terms.len(), 3);
        assert_eq!(
            lam.terms,
            vec![
                EdgeTerm {
                    exponent: -0.5,
                    log_power: 0.0,
                    coeff: 1.0
                },
                EdgeTerm {
                    exponent: 0.5,
                    log_power: 0.0,
                    coeff: -1.0
                },
                EdgeTerm {
                    exponent: 1.5,
                    log_power: 0.0,
                    coeff: 1.0
                },
            ]
        );
    }

    #[test]
    fn lambda_expansion_leading_term_is_preserved() {
        for sd in [
            make_power_law_gap_sd(2.0, -0.3, 0.5, 1.5).unwrap(),
            make_lorentzian_gap_sd(4.0, 2.0, 3.0).unwrap(),
            make_figure_sd(2.0, 10.0, 1.0).unwrap(),
        ] {
            let lam = sd.lambda_expansion(6).unwrap();
            assert_eq!(lam.terms[0].exponent, sd.edge_profile().alpha0);
            assert_eq!(lam.terms[0].log_power, sd.edge_profile().log_power);
            assert_eq!(lam.terms[0].coeff, sd.edge_profile().leading_coeff);
        }
    }

    #[test]
    fn lambda_identity_on_samples() {
        // Lambda(nu) (1 + nu/nu0) w_s == J(w_g + w_s nu) pointwise
        for sd in [
            make_power_law_gap_sd(1.0, -0.5, 1.0, 1.0).unwrap(),
            make_lorentzian_gap_sd(4.0, 2.0, 3.0).unwrap(),
            make_figure_sd(2.0, 10.0, 1.0).unwrap(),
        ] {
            for i in 1..200 {
                let nu = i as f64 * 0.05;
                let lhs = sd.lambda_function(nu).unwrap() * (1.0 + nu / sd.nu0()) * sd.omega_s();
                let rhs = sd.evaluate(sd.omega_g() + sd.omega_s() * nu);
                assert_relative_eq!(lhs, rhs, max_relative = 1e-12, epsilon = 1e-300);
            }
        }
    }

    #[test]
    fn backflow_condition_family_one_holds() {
        let sd = make_power_law_gap_sd(1.0, -0.5, 1.0, 1.0).unwrap();
        let check = sd.check_backflow_condition(0);
        assert!(check.holds, "witness: {:?}", check.witness);
    }

    #[test]
    fn backflow_condition_family_two_holds() {
        let sd = make_lorentzian_gap_sd(1.0, 1.0, 1.0).unwrap();
        let check = sd.check_backflow_condition(0);
        assert!(check.holds, "witness: {:?}", check.witness);
    }

    #[test]
    fn backflow_condition_steep_figure_fails_near_edge() {
        // J ~ w^3 e^{-w} with a small gap grows faster than J/w allows just
        // above the edge: J' >= J/w for w <= 2
        let sd = make_figure_sd(3.0, 0.1, 1.0).unwrap();
        let check = sd.check_backflow_condition(0);
        assert!(!check.holds);
        let w = check.witness.unwrap();
        assert!(w.omega > 0.09 && w.omega < 2.0, "witness at {}", w.omega);
    }

    #[test]
    fn tabulated_round_trip_and_interpolation() {
        let edge = EdgeProfile {
            class: SdClass::Class1,
            alpha0: 1.0,
            log_power: 0.0,
            leading_coeff: 1.0,
            higher_terms: vec![],
            chi0: f64::INFINITY,
        };
        let rows = vec![(1.0, 0.0), (2.0, 1.0), (3.0, 0.5), (4.0, 0.0)];
        let sd = make_tabulated_sd(rows, 1.0, 1.0, edge).unwrap();
        assert_relative_eq!(sd.evaluate(2.5), 0.75, max_relative = 1e-14);
        assert_eq!(sd.evaluate(4.5), 0.0);
        assert_eq!(sd.omega_max(), 4.0);

        let spec = sd.to_spec().unwrap();
        let json = spec.to_json().unwrap();
        let back = SdSpec::from_json(&json).unwrap().build().unwrap();
        assert_eq!(back.evaluate(2.5), sd.evaluate(2.5));
    }

    #[test]
    fn tabulated_rejects_mass_below_gap() {
        let edge = EdgeProfile {
            class: SdClass::Class1,
            alpha0: 1.0,
            log_power: 0.0,
            leading_coeff: 1.0,
            higher_terms: vec![],
            chi0: f64::INFINITY,
        };
        let rows = vec![(0.5, 0.3), (2.0, 1.0), (3.0, 0.0)];
        let err = make_tabulated_sd(rows, 1.0, 1.0, edge).unwrap_err();
        assert!(matches!(err, Error::SdDefinition(_)), "{err}");
    }

    #[test]
    fn spec_json_schema_shape() {
        let sd = make_lorentzian_gap_sd(1.0, 2.0, 3.0).unwrap();
        let json = sd.to_spec().unwrap().to_json().unwrap();
        let v: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(v["family"], "lorentzian_gap");
        assert_eq!(v["params"]["q2"], 1.0);
        assert_eq!(v["params"]["lambda2"], 2.0);
        assert_eq!(v["omega_g"], 3.0);
        assert_eq!(v["omega_s"], 2.0);
        assert_eq!(v["edge_profile"]["class"], 1);
        // infinite chi0 would be null; the Lorentzian has chi0 = 1
        assert_eq!(v["edge_profile"]["chi0"], 1.0);
    }

    #[test]
    fn invalid_parameters_are_rejected() {
        assert!(make_power_law_gap_sd(1.0, 0.5, 1.0, 1.0).is_err()); // alpha not in (-1,0)
        assert!(make_power_law_gap_sd(1.0, -0.5, -1.0, 1.0).is_err());
        assert!(make_power_law_gap_sd(0.0, -0.5, 1.0, 1.0).is_err());
        assert!(make_lorentzian_gap_sd(1.0, 1.0, 0.0).is_err());
        assert!(make_figure_sd(0.0, -1.0, 1.0).is_err());
        assert!(make_figure_sd(f64::NAN, 1.0, 1.0).is_err());
    }

    #[test]
    fn alpha0_zero_with_log_power_is_rejected() {
        let edge = EdgeProfile {
            class: SdClass::Class1,
            alpha0: 0.0,
            log_power: 1.0,
            leading_coeff: 1.0,
            higher_terms: vec![],
            chi0: 1.0,
        };
        assert!(edge.validate().is_err());
    }
}
