//! Oscillatory quadrature for the dephasing integrals.
//!
//! Everything here reduces to transforms `int_a^U g(w) cos(wt) dw` (or sin)
//! of a smooth, eventually decaying envelope `g`, possibly with an integrable
//! power singularity at the lower endpoint. Two complementary tail
//! strategies are provided:
//!
//! * [`TailStrategy::BetweenZerosAccelerated`] (default): integrate cell by
//!   cell between consecutive kernel zeros. For exponentially decaying
//!   envelopes the cell sums are added directly and the truncation remainder
//!   is bounded by the envelope; for algebraically decaying envelopes the
//!   alternating partial sums are extrapolated with the epsilon algorithm,
//!   which turns an `O(1/n)` tail into machine-precision answers after a few
//!   dozen cells.
//! * [`TailStrategy::ExpWindow`]: truncate where the envelope falls below
//!   `1e-3 * abs_tol` and run one globally adaptive pass seeded at the
//!   kernel zeros. Simple and robust at short times, but it cannot resolve
//!   slowly decaying tails at large `t` and then reports non-convergence
//!   rather than a wrong number.
//!
//! Endpoint singularities `g ~ (w - a)^sigma`, `sigma in (-1, 0)`, are
//! removed exactly on the first cell by the substitution `w = a + u^{1/(1+sigma)}`.

mod accel;
pub(crate) mod gk;

use std::f64::consts::PI;
use std::sync::{Arc, Mutex};

use crate::error::{Error, Result};
use crate::sd_model::{GappedSpectralDensity, TailDecay};

use self::accel::EpsilonTable;
use self::gk::{adaptive, Adaptive};

/// How semi-infinite oscillatory tails are summed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TailStrategy {
    /// Cell-by-cell between kernel zeros, with series acceleration for
    /// algebraic tails. The default.
    BetweenZerosAccelerated,
    /// Truncate the envelope and integrate the window adaptively.
    ExpWindow,
}

/// One quadrature diagnostic record.
#[derive(Debug, Clone, Copy)]
pub struct DiagRecord {
    pub op: &'static str,
    pub t: f64,
    pub value: f64,
    pub error_bound: f64,
    pub subdivisions: usize,
}

/// Shared sink collecting one record per top-level quadrature call.
#[derive(Debug, Clone, Default)]
pub struct DiagSink {
    records: Arc<Mutex<Vec<DiagRecord>>>,
}

impl DiagSink {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn records(&self) -> Vec<DiagRecord> {
        self.records
            .lock()
            .expect("diagnostic sink poisoned")
            .clone()
    }

    fn push(&self, r: DiagRecord) {
        self.records
            .lock()
            .expect("diagnostic sink poisoned")
            .push(r);
    }
}

/// Quadrature tolerances and budgets.
#[derive(Debug, Clone)]
pub struct QuadratureConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Budget of adaptive bisections within a single window or cell.
    pub max_subdivisions: usize,
    /// Budget of half-period cells for the between-zeros strategy.
    pub max_cells: usize,
    pub tail_strategy: TailStrategy,
    /// Optional sink recording one entry per top-level call.
    pub diagnostics: Option<DiagSink>,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        QuadratureConfig {
            rel_tol: 1e-9,
            abs_tol: 1e-12,
            max_subdivisions: 256,
            max_cells: 100_000,
            tail_strategy: TailStrategy::BetweenZerosAccelerated,
            diagnostics: None,
        }
    }
}

/// A computed integral with an error bound and the work spent on it.
#[derive(Debug, Clone, Copy)]
pub struct Estimate {
    pub value: f64,
    pub error_bound: f64,
    pub subdivisions: usize,
}

fn record(cfg: &QuadratureConfig, op: &'static str, t: f64, est: &Estimate) {
    if let Some(sink) = &cfg.diagnostics {
        sink.push(DiagRecord {
            op,
            t,
            value: est.value,
            error_bound: est.error_bound,
            subdivisions: est.subdivisions,
        });
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kernel {
    Cos,
    Sin,
}

impl Kernel {
    fn eval(self, x: f64) -> f64 {
        match self {
            Kernel::Cos => x.cos(),
            Kernel::Sin => x.sin(),
        }
    }

    /// k-th zero of `kernel(t w)` on the frequency axis.
    fn zero(self, k: i64, t: f64) -> f64 {
        match self {
            Kernel::Sin => k as f64 * PI / t,
            Kernel::Cos => (k as f64 + 0.5) * PI / t,
        }
    }

    /// Index of the first zero strictly above `a`.
    fn first_index_above(self, a: f64, t: f64) -> i64 {
        match self {
            Kernel::Sin => (a * t / PI).floor() as i64 + 1,
            Kernel::Cos => (a * t / PI - 0.5).floor() as i64 + 1,
        }
    }
}

// ---------------------------------------------------------------------------
// building blocks
// ---------------------------------------------------------------------------

/// Integrate `g(w) kernel(t w)` over `[a, b]` with the endpoint power
/// singularity `g ~ (w-a)^sigma` removed by `w = a + u^{1/(1+sigma)}`.
///
/// When the caller can evaluate the envelope directly as a function of the
/// offset `w - a` it should pass that form as `off`: the substitution
/// produces offsets far below the rounding scale of `a`, where `a + u^p`
/// collapses back to `a` and an envelope that recovers the offset by
/// subtraction sees `0^sigma` instead of the true singular factor.
#[allow(clippy::too_many_arguments)] // internal plumbing shared by every dispatch path
fn head_integral<G: Fn(f64) -> f64>(
    g: &G,
    off: Option<&dyn Fn(f64) -> f64>,
    a: f64,
    b: f64,
    t: f64,
    kernel: Kernel,
    sing: Option<f64>,
    rel: f64,
    abs: f64,
    max_sub: usize,
) -> Adaptive {
    match sing {
        Some(sigma) => {
            let p = 1.0 / (1.0 + sigma);
            let umax = (b - a).powf(1.0 + sigma);
            let h = move |u: f64| {
                let d = u.powf(p);
                let env = match off {
                    Some(f) => f(d),
                    None => g(a + d),
                };
                env * kernel.eval(t * (a + d)) * p * u.powf(p - 1.0)
            };
            adaptive(&h, 0.0, umax, None, rel, abs, max_sub)
        }
        None => {
            let h = move |w: f64| g(w) * kernel.eval(t * w);
            adaptive(&h, a, b, None, rel, abs, max_sub)
        }
    }
}

/// Map `[a, inf)` to `[0, 1)` by `w = a + scale x/(1-x)` and integrate the
/// (non-oscillatory) envelope adaptively.
fn qagi_plain<G: Fn(f64) -> f64>(
    g: &G,
    a: f64,
    scale: f64,
    rel: f64,
    abs: f64,
    max_sub: usize,
) -> Adaptive {
    let h = move |x: f64| {
        let om = 1.0 - x;
        let w = a + scale * x / om;
        let jac = scale / (om * om);
        let v = g(w);
        if v == 0.0 {
            0.0 // avoid 0 * inf at the far end of the map
        } else {
            v * jac
        }
    };
    adaptive(&h, 0.0, 1.0, None, rel, abs, max_sub)
}

/// Adaptive pass over `[a, b]` pre-partitioned at `offset*p, (offset+1)*p, ...`
/// (the kernel zeros or extrema); at most 4096 seed boundaries are placed,
/// any remainder is left to adaptive refinement.
fn seeded_window<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    period: Option<(f64, f64)>, // (p, offset in units of p)
    rel: f64,
    abs: f64,
    max_sub: usize,
) -> Adaptive {
    let seeds: Option<Vec<f64>> = period.and_then(|(p, off)| {
        let mut v = vec![a];
        let mut k = (a / p - off).floor() + 1.0;
        while (k + off) * p < b && v.len() < 4097 {
            let z = (k + off) * p;
            if z > a {
                v.push(z);
            }
            k += 1.0;
        }
        v.push(b);
        (v.len() > 2).then_some(v)
    });
    match seeds {
        Some(s) => adaptive(f, a, b, Some(&s), rel, abs, s.len() + max_sub),
        None => adaptive(f, a, b, None, rel, abs, max_sub),
    }
}

/// Doubling search for a truncation point where `|g|` stays below `thresh`.
/// Starts well beyond any physical envelope peak.
fn truncate_cut<G: Fn(f64) -> f64>(g: &G, a: f64, scale: f64, thresh: f64) -> f64 {
    let cap = a + 1e9 * scale;
    let mut w = a + 64.0 * scale;
    while g(w).abs() >= thresh && w < cap {
        w = a + (w - a) * 2.0;
    }
    w.min(cap)
}

/// Accept an adaptive result or convert it into a non-convergence error.
fn seal(value: f64, err: f64, subdivisions: usize, rel: f64, abs: f64) -> Result<Estimate> {
    if err <= 10.0 * abs.max(rel * value.abs()) {
        Ok(Estimate {
            value,
            error_bound: err,
            subdivisions,
        })
    } else {
        Err(Error::QuadratureNonConvergence {
            estimate: value,
            error_bound: err,
            subdivisions,
        })
    }
}

/// Plain (non-oscillatory) integral of an envelope over `[a, upper)`,
/// `upper` possibly infinite, with optional endpoint singularity.
fn plain<G: Fn(f64) -> f64>(
    g: &G,
    off: Option<&dyn Fn(f64) -> f64>,
    a: f64,
    upper: f64,
    sing: Option<f64>,
    scale: f64,
    cfg: &QuadratureConfig,
) -> Result<Estimate> {
    let (rel, abs) = (cfg.rel_tol, cfg.abs_tol);
    let max_sub = cfg.max_subdivisions;
    if upper.is_finite() {
        let r = match sing {
            Some(_) => {
                let split = (a + scale).min(0.5 * (a + upper));
                let h = head_integral(
                    g,
                    off,
                    a,
                    split,
                    0.0,
                    Kernel::Cos,
                    sing,
                    rel,
                    0.5 * abs,
                    max_sub,
                );
                let t = adaptive(g, split, upper, None, rel, 0.5 * abs, max_sub);
                Adaptive {
                    value: h.value + t.value,
                    abserr: h.abserr + t.abserr,
                    subdivisions: h.subdivisions + t.subdivisions,
                    converged: h.converged && t.converged,
                }
            }
            None => adaptive(g, a, upper, None, rel, abs, max_sub),
        };
        return seal(r.value, r.abserr, r.subdivisions, rel, abs);
    }
    let r = match sing {
        Some(_) => {
            let split = a + scale;
            let h = head_integral(
                g,
                off,
                a,
                split,
                0.0,
                Kernel::Cos,
                sing,
                rel,
                0.5 * abs,
                max_sub,
            );
            let t = qagi_plain(g, split, scale, rel, 0.5 * abs, max_sub);
            Adaptive {
                value: h.value + t.value,
                abserr: h.abserr + t.abserr,
                subdivisions: h.subdivisions + t.subdivisions,
                converged: h.converged && t.converged,
            }
        }
        None => qagi_plain(g, a, scale, rel, abs, max_sub),
    };
    seal(r.value, r.abserr, r.subdivisions, rel, abs)
}

/// The oscillatory workhorse: `int_a^upper g(w) kernel(t w) dw`.
#[allow(clippy::too_many_arguments)]
fn oscillatory<G: Fn(f64) -> f64>(
    g: &G,
    off: Option<&dyn Fn(f64) -> f64>,
    a: f64,
    upper: f64,
    t: f64,
    kernel: Kernel,
    sing: Option<f64>,
    decay: TailDecay,
    scale: f64,
    cfg: &QuadratureConfig,
) -> Result<Estimate> {
    debug_assert!(t >= 0.0);
    let (rel, abs) = (cfg.rel_tol, cfg.abs_tol);

    if t == 0.0 {
        return match kernel {
            Kernel::Sin => Ok(Estimate {
                value: 0.0,
                error_bound: 0.0,
                subdivisions: 0,
            }),
            Kernel::Cos => plain(g, off, a, upper, sing, scale, cfg),
        };
    }

    let p = PI / t;
    let k0 = kernel.first_index_above(a, t);
    let z0 = kernel.zero(k0, t);

    // fewer than one full cell inside a finite support: one seeded window
    if upper.is_finite() && z0 + p >= upper {
        let r = match sing {
            Some(_) => {
                let split = z0.min(upper);
                let h = head_integral(
                    g,
                    off,
                    a,
                    split,
                    t,
                    kernel,
                    sing,
                    rel,
                    0.5 * abs,
                    cfg.max_subdivisions,
                );
                let f = |w: f64| g(w) * kernel.eval(t * w);
                let tail = if split < upper {
                    adaptive(&f, split, upper, None, rel, 0.5 * abs, cfg.max_subdivisions)
                } else {
                    Adaptive {
                        value: 0.0,
                        abserr: 0.0,
                        subdivisions: 0,
                        converged: true,
                    }
                };
                Adaptive {
                    value: h.value + tail.value,
                    abserr: h.abserr + tail.abserr,
                    subdivisions: h.subdivisions + tail.subdivisions,
                    converged: h.converged && tail.converged,
                }
            }
            None => {
                let f = |w: f64| g(w) * kernel.eval(t * w);
                adaptive(&f, a, upper, None, rel, abs, cfg.max_subdivisions)
            }
        };
        return seal(r.value, r.abserr, r.subdivisions, rel, abs);
    }

    if cfg.tail_strategy == TailStrategy::ExpWindow && !upper.is_finite() {
        return exp_window(g, off, a, t, kernel, sing, scale, cfg, z0);
    }
    cells(g, off, a, upper, t, kernel, sing, decay, scale, cfg, k0)
}

/// Truncated-window strategy for infinite tails.
#[allow(clippy::too_many_arguments)]
fn exp_window<G: Fn(f64) -> f64>(
    g: &G,
    off: Option<&dyn Fn(f64) -> f64>,
    a: f64,
    t: f64,
    kernel: Kernel,
    sing: Option<f64>,
    scale: f64,
    cfg: &QuadratureConfig,
    z0: f64,
) -> Result<Estimate> {
    let (rel, abs) = (cfg.rel_tol, cfg.abs_tol);
    let cut = truncate_cut(g, a, scale, 1e-3 * abs);
    let f = |w: f64| g(w) * kernel.eval(t * w);
    let period = Some((
        PI / t,
        match kernel {
            Kernel::Sin => 0.0,
            Kernel::Cos => 0.5,
        },
    ));
    let r = match sing {
        Some(_) => {
            let split = z0.min(cut);
            let h = head_integral(
                g,
                off,
                a,
                split,
                t,
                kernel,
                sing,
                rel,
                0.5 * abs,
                cfg.max_subdivisions,
            );
            let tail = seeded_window(&f, split, cut, period, rel, 0.5 * abs, cfg.max_subdivisions);
            Adaptive {
                value: h.value + tail.value,
                abserr: h.abserr + tail.abserr,
                subdivisions: h.subdivisions + tail.subdivisions,
                converged: h.converged && tail.converged,
            }
        }
        None => seeded_window(&f, a, cut, period, rel, abs, cfg.max_subdivisions),
    };
    seal(r.value, r.abserr, r.subdivisions, rel, abs)
}

/// Between-zeros strategy: head cell, then one adaptive panel per kernel
/// half-period, summed directly (exponential/finite tails) or through the
/// epsilon table (algebraic tails).
#[allow(clippy::too_many_arguments)]
fn cells<G: Fn(f64) -> f64>(
    g: &G,
    off: Option<&dyn Fn(f64) -> f64>,
    a: f64,
    upper: f64,
    t: f64,
    kernel: Kernel,
    sing: Option<f64>,
    decay: TailDecay,
    scale: f64,
    cfg: &QuadratureConfig,
    k0: i64,
) -> Result<Estimate> {
    let (rel, abs) = (cfg.rel_tol, cfg.abs_tol);
    let (rel_cell, abs_cell) = ((0.1 * rel).max(1e-15), 0.01 * abs);
    let f = |w: f64| g(w) * kernel.eval(t * w);

    let z0 = kernel.zero(k0, t);
    let head = head_integral(
        g,
        off,
        a,
        z0.min(upper),
        t,
        kernel,
        sing,
        0.5 * rel,
        0.5 * abs,
        256,
    );
    let mut sum = head.value;
    let mut cell_err = head.abserr;
    let mut subdivisions = head.subdivisions;

    let accelerate = matches!(decay, TailDecay::Algebraic { .. });
    let mut table = EpsilonTable::new();
    let mut best = (f64::NAN, f64::MAX);
    if accelerate {
        table.append(sum);
    }

    let max_cells = if accelerate {
        cfg.max_cells.min(4000)
    } else {
        cfg.max_cells
    };
    let mut k = k0;
    let mut z = z0;
    let mut n_cells = 0usize;
    loop {
        let z_next = kernel.zero(k + 1, t);
        let hi = z_next.min(upper);
        let cell = adaptive(&f, z, hi, None, rel_cell, abs_cell, 24);
        sum += cell.value;
        cell_err += cell.abserr;
        subdivisions += cell.subdivisions;
        n_cells += 1;

        if hi >= upper {
            // finite support exhausted: the sum is exact up to cell errors
            return seal(sum, cell_err, subdivisions, rel, abs);
        }

        if accelerate {
            table.append(sum);
            if table.len() >= 3 && n_cells >= 6 {
                let (v, e) = table.extrapolate();
                if e < best.1 {
                    best = (v, e);
                }
                let tol = abs.max(rel * v.abs());
                if e <= 0.5 * tol && n_cells >= 8 {
                    return Ok(Estimate {
                        value: v,
                        error_bound: e + cell_err,
                        subdivisions,
                    });
                }
            }
        } else {
            let env = g(z_next).abs();
            let rem = match decay {
                TailDecay::Exponential { rate } => 2.0 * env / rate,
                // not reachable: finite supports return above, algebraic
                // tails take the acceleration branch
                TailDecay::Finite | TailDecay::Algebraic { .. } => env * (PI / t),
            };
            let tol = abs.max(rel * sum.abs());
            if env == 0.0 || (rem <= 0.1 * tol && n_cells >= 4 && z_next - a >= 4.0 * scale) {
                return Ok(Estimate {
                    value: sum,
                    error_bound: cell_err + rem,
                    subdivisions,
                });
            }
        }

        if n_cells >= max_cells {
            let (value, error_bound) = if accelerate && best.0.is_finite() {
                best
            } else {
                (sum, f64::MAX)
            };
            return Err(Error::QuadratureNonConvergence {
                estimate: value,
                error_bound,
                subdivisions,
            });
        }
        z = z_next;
        k += 1;
    }
}

// ---------------------------------------------------------------------------
// physical operations
// ---------------------------------------------------------------------------

/// Edge exponent of the product `envelope * kernel` at the lower limit of
/// the transform integrals, if it is singular.
fn phi_singularity(sd: &GappedSpectralDensity, kernel: Kernel) -> Result<Option<f64>> {
    let a0 = sd.edge_profile().alpha0;
    if sd.omega_g() > 0.0 {
        return Ok((a0 < 0.0).then_some(a0));
    }
    // gapless: the envelope J/w behaves like w^{alpha0 - 1}
    let s = a0 - 1.0;
    if s > -1.0 {
        return Ok((s < 0.0).then_some(s));
    }
    match kernel {
        // sin(w t) contributes one power of w and regularises the edge
        Kernel::Sin if a0 > -1.0 => Ok((a0 < 0.0).then_some(a0)),
        _ => Err(Error::NotIntegrable(
            "the cosine transform of J/w diverges at the origin for a gapless density \
             with edge exponent <= 0"
                .into(),
        )),
    }
}

fn phi_transform(
    sd: &GappedSpectralDensity,
    t: f64,
    kernel: Kernel,
    cfg: &QuadratureConfig,
) -> Result<Estimate> {
    if !(t >= 0.0) {
        return Err(Error::InvalidParameter {
            name: "t",
            value: t,
            requirement: "times must be non-negative",
        });
    }
    let sing = phi_singularity(sd, kernel)?;
    let wg = sd.omega_g();
    // the integration variable is already the offset from the edge, so the
    // singular factor never passes through w_g and back
    let g = |wp: f64| sd.evaluate_offset(wp) / (wg + wp);
    let upper = if sd.omega_max().is_finite() {
        sd.omega_max() - wg
    } else {
        f64::INFINITY
    };
    oscillatory(
        &g,
        None,
        0.0,
        upper,
        t,
        kernel,
        sing,
        sd.tail_decay(),
        sd.omega_s(),
        cfg,
    )
}

/// Slowly varying cosine amplitude of the dephasing rate:
/// `phi_c(t) = int_0^inf J(w_g + w')/(w_g + w') cos(w' t) dw'`.
pub fn phi_c(sd: &GappedSpectralDensity, t: f64, cfg: &QuadratureConfig) -> Result<Estimate> {
    let est = phi_transform(sd, t, Kernel::Cos, cfg)?;
    record(cfg, "phi_c", t, &est);
    Ok(est)
}

/// Sine companion of [`phi_c`]:
/// `phi_s(t) = int_0^inf J(w_g + w')/(w_g + w') sin(w' t) dw'`.
pub fn phi_s(sd: &GappedSpectralDensity, t: f64, cfg: &QuadratureConfig) -> Result<Estimate> {
    let est = phi_transform(sd, t, Kernel::Sin, cfg)?;
    record(cfg, "phi_s", t, &est);
    Ok(est)
}

/// Dephasing rate `gamma0(t) = int J(w)/w sin(w t) dw`, computed for gapped
/// densities through the carrier/envelope decomposition
/// `gamma0 = phi_c sin(w_g t) + phi_s cos(w_g t)` and for gapless ones as
/// the direct sine transform.
pub fn dephasing_rate(
    sd: &GappedSpectralDensity,
    t: f64,
    cfg: &QuadratureConfig,
) -> Result<Estimate> {
    let est = if sd.omega_g() > 0.0 {
        let c = phi_transform(sd, t, Kernel::Cos, cfg)?;
        let s = phi_transform(sd, t, Kernel::Sin, cfg)?;
        let (sn, cn) = (sd.omega_g() * t).sin_cos();
        Estimate {
            value: c.value * sn + s.value * cn,
            error_bound: c.error_bound * sn.abs() + s.error_bound * cn.abs(),
            subdivisions: c.subdivisions + s.subdivisions,
        }
    } else {
        phi_transform(sd, t, Kernel::Sin, cfg)?
    };
    record(cfg, "gamma0", t, &est);
    Ok(est)
}

/// Cross-check route for [`dephasing_rate`]: the sine transform evaluated
/// without the carrier/envelope decomposition, oscillating at the full
/// frequency `w` instead of the detuning `w - w_g`.
pub fn dephasing_rate_direct(
    sd: &GappedSpectralDensity,
    t: f64,
    cfg: &QuadratureConfig,
) -> Result<Estimate> {
    if !(t >= 0.0) {
        return Err(Error::InvalidParameter {
            name: "t",
            value: t,
            requirement: "times must be non-negative",
        });
    }
    if sd.omega_g() == 0.0 {
        return dephasing_rate(sd, t, cfg);
    }
    let a0 = sd.edge_profile().alpha0;
    let wg = sd.omega_g();
    let g = |w: f64| sd.evaluate(w) / w;
    let g_off = |wp: f64| sd.evaluate_offset(wp) / (wg + wp);
    let est = oscillatory(
        &g,
        Some(&g_off),
        wg,
        sd.omega_max(),
        t,
        Kernel::Sin,
        (a0 < 0.0).then_some(a0),
        sd.tail_decay(),
        sd.omega_s(),
        cfg,
    )?;
    record(cfg, "gamma0_direct", t, &est);
    Ok(est)
}

fn xi_edge_singularity(sd: &GappedSpectralDensity) -> Result<Option<f64>> {
    let a0 = sd.edge_profile().alpha0;
    if sd.omega_g() == 0.0 && a0 <= -1.0 {
        return Err(Error::NotIntegrable(
            "the dephasing factor diverges at the origin for a gapless density with \
             edge exponent <= -1"
                .into(),
        ));
    }
    Ok((a0 < 0.0).then_some(a0))
}

/// Combined-form dephasing factor
/// `Xi0(t) = int J(w)/w^2 (1 - cos(w t)) dw`, evaluated without splitting
/// off the static moment. Free of cancellation at small `t`; the reference
/// route at any `t` for exponentially decaying tails.
pub fn dephasing_factor_direct(
    sd: &GappedSpectralDensity,
    t: f64,
    cfg: &QuadratureConfig,
) -> Result<Estimate> {
    let est = xi_combined(sd, t, cfg)?;
    record(cfg, "xi0_direct", t, &est);
    Ok(est)
}

fn xi_combined(sd: &GappedSpectralDensity, t: f64, cfg: &QuadratureConfig) -> Result<Estimate> {
    if !(t >= 0.0) {
        return Err(Error::InvalidParameter {
            name: "t",
            value: t,
            requirement: "times must be non-negative",
        });
    }
    if t == 0.0 {
        return Ok(Estimate {
            value: 0.0,
            error_bound: 0.0,
            subdivisions: 0,
        });
    }
    let sing = xi_edge_singularity(sd)?;
    let (rel, abs) = (cfg.rel_tol, cfg.abs_tol);
    let a = sd.omega_g();
    // 1 - cos(x) = 2 sin^2(x/2) avoids cancellation for small arguments
    let h = |w: f64| {
        let s = (0.5 * w * t).sin();
        sd.evaluate(w) / (w * w) * 2.0 * s * s
    };
    let h_off = |wp: f64| {
        let w = a + wp;
        let s = (0.5 * w * t).sin();
        sd.evaluate_offset(wp) / (w * w) * 2.0 * s * s
    };
    let cut = if sd.omega_max().is_finite() {
        sd.omega_max()
    } else {
        let env = |w: f64| sd.evaluate(w) / (w * w) * 2.0;
        truncate_cut(&env, a, sd.omega_s(), 1e-3 * abs)
    };
    let period = Some((PI / t, 0.0));
    let r = match sing {
        Some(_) => {
            let split = (a + sd.omega_s()).min(0.5 * (a + cut));
            let head = head_integral(
                &h,
                Some(&h_off),
                a,
                split,
                0.0,
                Kernel::Cos,
                sing,
                rel,
                0.5 * abs,
                256,
            );
            let tail = seeded_window(&h, split, cut, period, rel, 0.5 * abs, cfg.max_subdivisions);
            Adaptive {
                value: head.value + tail.value,
                abserr: head.abserr + tail.abserr,
                subdivisions: head.subdivisions + tail.subdivisions,
                converged: head.converged && tail.converged,
            }
        }
        None => seeded_window(&h, a, cut, period, rel, abs, cfg.max_subdivisions),
    };
    seal(r.value.max(0.0), r.abserr, r.subdivisions, rel, abs)
}

/// Dephasing factor `Xi0(t) = int J(w)/w^2 (1 - cos(w t)) dw`, governing
/// `|rho01(t)| = |rho01(0)| e^{-Xi0(t)}`.
///
/// At short times the combined form is used directly; once the oscillation
/// is faster than the support scale the static moment `int J/w^2` and its
/// cosine transform are computed separately, which is what lets the
/// algebraic-tail strategies converge at large `t`.
pub fn dephasing_factor(
    sd: &GappedSpectralDensity,
    t: f64,
    cfg: &QuadratureConfig,
) -> Result<Estimate> {
    if !(t >= 0.0) {
        return Err(Error::InvalidParameter {
            name: "t",
            value: t,
            requirement: "times must be non-negative",
        });
    }
    let combined = sd.omega_g() == 0.0 || t * (sd.omega_g() + sd.omega_s()) < 1.0;
    let est = if combined {
        xi_combined(sd, t, cfg)?
    } else {
        let sing = xi_edge_singularity(sd)?;
        let a = sd.omega_g();
        let g2 = |w: f64| sd.evaluate(w) / (w * w);
        let g2_off = |wp: f64| {
            let w = a + wp;
            sd.evaluate_offset(wp) / (w * w)
        };
        let m2 = plain(
            &g2,
            Some(&g2_off),
            a,
            sd.omega_max(),
            sing,
            sd.omega_s(),
            cfg,
        )?;
        let c2 = oscillatory(
            &g2,
            Some(&g2_off),
            a,
            sd.omega_max(),
            t,
            Kernel::Cos,
            sing,
            sd.tail_decay(),
            sd.omega_s(),
            cfg,
        )?;
        Estimate {
            value: (m2.value - c2.value).max(0.0),
            error_bound: m2.error_bound + c2.error_bound,
            subdivisions: m2.subdivisions + c2.subdivisions,
        }
    };
    record(cfg, "xi0", t, &est);
    Ok(est)
}

/// Off-diagonal element of the qubit state under pure dephasing.
#[derive(Debug, Clone, Copy)]
pub struct CoherenceSample {
    pub t: f64,
    /// Dephasing factor `Xi0(t)`.
    pub xi0: f64,
    /// `e^{-Xi0(t)}`.
    pub factor: f64,
    /// `rho01(t)` as `[re, im]`.
    pub rho01: [f64; 2],
    pub error_bound: f64,
}

/// Propagate an initial coherence `rho01(0)` to time `t`:
/// `rho01(t) = rho01(0) e^{-Xi0(t)}`.
pub fn coherence(
    sd: &GappedSpectralDensity,
    t: f64,
    rho01_init: [f64; 2],
    cfg: &QuadratureConfig,
) -> Result<CoherenceSample> {
    let xi = dephasing_factor(sd, t, cfg)?;
    let factor = (-xi.value).exp();
    let norm = rho01_init[0].hypot(rho01_init[1]);
    Ok(CoherenceSample {
        t,
        xi0: xi.value,
        factor,
        rho01: [rho01_init[0] * factor, rho01_init[1] * factor],
        error_bound: norm * factor * xi.error_bound,
    })
}

fn moment_name(k: u32) -> &'static str {
    match k {
        0 => "l_c0",
        1 => "l_s1",
        2 => "l_c2",
        _ => "higher detuning moment",
    }
}

/// Detuning moment `int J(w)/w (w - w_g)^k dw` of the transform envelope;
/// `k = 0, 1, 2` are the short-time coefficients of `phi_c`, `phi_s` and
/// the curvature of `phi_c` respectively.
pub fn spectral_moment(
    sd: &GappedSpectralDensity,
    k: u32,
    cfg: &QuadratureConfig,
) -> Result<Estimate> {
    if let TailDecay::Algebraic { chi0 } = sd.tail_decay() {
        if chi0 <= k as f64 - 1.0 {
            return Err(Error::MomentDivergence {
                moment: moment_name(k),
                chi0,
            });
        }
    }
    let a0 = sd.edge_profile().alpha0;
    let edge_exp = if sd.omega_g() > 0.0 {
        a0 + k as f64
    } else {
        a0 - 1.0 + k as f64
    };
    if edge_exp <= -1.0 {
        return Err(Error::NotIntegrable(format!(
            "detuning moment k = {k} diverges at the support edge (exponent {edge_exp})"
        )));
    }
    let sing = (edge_exp < 0.0).then_some(edge_exp);
    let wg = sd.omega_g();
    // integrate in the offset from the edge: the detuning power is then a
    // plain monomial instead of a difference of nearby frequencies
    let g = |wp: f64| sd.evaluate_offset(wp) / (wg + wp) * wp.powi(k as i32);
    let upper = if sd.omega_max().is_finite() {
        sd.omega_max() - wg
    } else {
        f64::INFINITY
    };
    let est = plain(&g, None, 0.0, upper, sing, sd.omega_s(), cfg)?;
    record(cfg, moment_name(k), f64::NAN, &est);
    Ok(est)
}

/// One sample of the carrier/envelope decomposition of the dephasing rate.
#[derive(Debug, Clone, Copy)]
pub struct TransformSample {
    pub t: f64,
    pub phi_c: f64,
    pub phi_s: f64,
    /// `gamma0 = phi_c sin(w_g t) + phi_s cos(w_g t)`.
    pub gamma0: f64,
    /// `sqrt(phi_c^2 + phi_s^2)`.
    pub amplitude: f64,
    /// Phase of the amplitude-phase form `gamma0 = A sin(w_g t + phase)`,
    /// in `[0, 2 pi)`; undefined when both transforms vanish.
    pub phase: Option<f64>,
    pub error_bound: f64,
}

/// Evaluate the full decomposition `(phi_c, phi_s, gamma0, amplitude, phase)`
/// at one time; requires a gapped density (the decomposition has no carrier
/// otherwise).
pub fn transform_sample(
    sd: &GappedSpectralDensity,
    t: f64,
    cfg: &QuadratureConfig,
) -> Result<TransformSample> {
    if !(sd.omega_g() > 0.0) {
        return Err(Error::InvalidParameter {
            name: "omega_g",
            value: sd.omega_g(),
            requirement: "the carrier/envelope decomposition requires a positive gap",
        });
    }
    let c = phi_transform(sd, t, Kernel::Cos, cfg)?;
    let s = phi_transform(sd, t, Kernel::Sin, cfg)?;
    let (sn, cn) = (sd.omega_g() * t).sin_cos();
    Ok(TransformSample {
        t,
        phi_c: c.value,
        phi_s: s.value,
        gamma0: c.value * sn + s.value * cn,
        amplitude: c.value.hypot(s.value),
        phase: crate::phase::phase_angle(c.value, s.value),
        error_bound: c.error_bound + s.error_bound,
    })
}
