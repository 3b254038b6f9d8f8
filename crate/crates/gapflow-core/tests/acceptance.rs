//! End-to-end acceptance checks, one per numbered criterion. Each criterion
//! prints a `[PASS]`/`[FAIL]` line with the measured figures and its wall
//! time; the test fails at the end if any criterion did. Criterion C9 (the
//! figure presets of the command-line tool) lives in the CLI crate's own
//! acceptance test.

use std::f64::consts::{FRAC_PI_2, PI, TAU};
use std::time::Instant;

use gapflow_core::{
    dephasing_factor, dephasing_rate, dephasing_rate_direct, find_negative_intervals,
    make_figure_sd, make_lorentzian_gap_sd, make_power_law_gap_sd, non_markovianity, phase_limit,
    phi_c, phi_s, short_time_coeffs, tail_laws, transform_sample, verify_bounds,
    GappedSpectralDensity, QuadratureConfig,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

struct Outcome {
    label: &'static str,
    pass: bool,
    seconds: f64,
    detail: String,
}

fn run(label: &'static str, body: impl FnOnce() -> (bool, String)) -> Outcome {
    let start = Instant::now();
    let (pass, detail) = body();
    Outcome {
        label,
        pass,
        seconds: start.elapsed().as_secs_f64(),
        detail,
    }
}

fn circular_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(TAU);
    d.min(TAU - d)
}

/// C1: at `w_s t = 1e-3` the rate matches `l0 t` from independent moment
/// quadrature to a relative 1e-3, for three gapped ohmic reservoirs.
fn short_time_linear_growth() -> (bool, String) {
    let start = Instant::now();
    let cfg = QuadratureConfig::default();
    let mut worst = 0.0f64;
    for (nu0, alpha) in [(1.0, 0.0), (10.0, 0.0), (1.0, 2.0)] {
        let sd = make_figure_sd(alpha, nu0, 1.0).unwrap();
        let l0 = short_time_coeffs(&sd, &cfg).unwrap().l0;
        let t = 1e-3;
        let g = dephasing_rate(&sd, t, &cfg).unwrap().value;
        worst = worst.max((g - l0 * t).abs() / (l0 * t));
    }
    let secs = start.elapsed().as_secs_f64();
    (
        worst < 1e-3 && secs < 5.0,
        format!("max relative departure from l0 t: {worst:.2e} (tolerance 1e-3, budget 5 s)"),
    )
}

/// C2: the rate is the time derivative of the dephasing factor; symmetric
/// finite differences with step `1e-4 / w_s` over `w_s t = 0.5, 1, ..., 20`
/// track `gamma0` to `1e-5 max|gamma0|` for every built-in family.
fn derivative_identity() -> (bool, String) {
    let start = Instant::now();
    let cfg = QuadratureConfig {
        rel_tol: 1e-11,
        abs_tol: 1e-14,
        ..QuadratureConfig::default()
    };
    let families = [
        make_power_law_gap_sd(1.0, -0.5, 1.0, 1.0).unwrap(),
        make_lorentzian_gap_sd(1.0, 1.0, 1.0).unwrap(),
        make_figure_sd(2.0, 1.0, 1.0).unwrap(),
        make_figure_sd(3.0, 0.0, 1.0).unwrap(),
    ];
    let h = 1e-4;
    let worst = families
        .par_iter()
        .map(|sd| {
            let samples: Vec<(f64, f64)> = (1..=40)
                .into_par_iter()
                .map(|i| {
                    let t = 0.5 * i as f64;
                    let g = dephasing_rate(sd, t, &cfg).unwrap().value;
                    let xp = dephasing_factor(sd, t + h, &cfg).unwrap().value;
                    let xm = dephasing_factor(sd, t - h, &cfg).unwrap().value;
                    (g, (xp - xm) / (2.0 * h))
                })
                .collect();
            let max_gamma = samples.iter().fold(0.0f64, |m, s| m.max(s.0.abs()));
            let max_resid = samples.iter().fold(0.0f64, |m, s| m.max((s.1 - s.0).abs()));
            max_resid / max_gamma
        })
        .reduce(|| 0.0, f64::max);
    let secs = start.elapsed().as_secs_f64();
    (
        worst < 1e-5 && secs < 30.0,
        format!(
            "max |dXi0/dt - gamma0| / max|gamma0| over 4 families: {worst:.2e} \
             (tolerance 1e-5, budget 30 s)"
        ),
    )
}

fn random_gapped_sd(rng: &mut ChaCha8Rng) -> GappedSpectralDensity {
    match rng.gen_range(0..3u8) {
        0 => make_power_law_gap_sd(
            rng.gen_range(0.5..2.0),
            rng.gen_range(-0.9..-0.1),
            rng.gen_range(0.5..2.0),
            rng.gen_range(0.3..3.0),
        )
        .unwrap(),
        1 => make_lorentzian_gap_sd(
            rng.gen_range(0.5..2.0),
            rng.gen_range(0.5..2.0),
            rng.gen_range(0.3..3.0),
        )
        .unwrap(),
        _ => make_figure_sd(rng.gen_range(0.0..3.0), rng.gen_range(0.3..5.0), 1.0).unwrap(),
    }
}

/// C3: the amplitude-phase form `A sin(w_g t + phi)` reconstructs the rate
/// computed through the independent full-frequency route, within ten times
/// the combined quadrature error bounds, on 200 random (family, t) pairs.
fn amplitude_phase_reconstruction() -> (bool, String) {
    let cfg = QuadratureConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(0xacce_0003);
    let cases: Vec<(GappedSpectralDensity, f64)> = (0..200)
        .map(|_| {
            let sd = random_gapped_sd(&mut rng);
            let t = 10f64.powf(rng.gen_range(-1.3..1.48));
            (sd, t)
        })
        .collect();
    let (failures, worst_ratio) = cases
        .par_iter()
        .map(|(sd, t)| {
            let ts = transform_sample(sd, *t, &cfg).unwrap();
            let direct = dephasing_rate_direct(sd, *t, &cfg).unwrap();
            let recon = ts.amplitude * (sd.omega_g() * t + ts.phase.unwrap_or(0.0)).sin();
            let tol = 10.0 * (ts.error_bound + direct.error_bound);
            let gap = (direct.value - recon).abs();
            (usize::from(gap > tol), gap / tol)
        })
        .reduce(|| (0, 0.0), |a, b| (a.0 + b.0, a.1.max(b.1)));
    (
        failures == 0,
        format!(
            "{failures} of 200 pairs outside 10x the combined error bounds \
             (worst gap/tolerance ratio {worst_ratio:.2})"
        ),
    )
}

/// C4: the first ten backflow intervals obey the universal bounds —
/// started by `pi (2n - 1) / w_g`, ended by `2 pi n / w_g`, no longer than
/// `pi / w_g` — for six gapped ohmic reservoirs and the power-law-gap one.
fn universal_interval_bounds() -> (bool, String) {
    let start = Instant::now();
    let cfg = QuadratureConfig::default();
    let mut sds: Vec<(GappedSpectralDensity, f64)> = Vec::new();
    for nu0 in [5.0, 10.0, 20.0] {
        for alpha in [0.0, 1.0] {
            sds.push((make_figure_sd(alpha, nu0, 1.0).unwrap(), nu0));
        }
    }
    sds.push((make_power_law_gap_sd(1.0, -0.5, 1.0, 1.0).unwrap(), 1.0));
    let per: Vec<(bool, f64)> = sds
        .par_iter()
        .map(|(sd, wg)| {
            let t_max = 20.5 * PI / wg;
            let intervals = find_negative_intervals(sd, t_max, &cfg).unwrap();
            let first: Vec<_> = intervals
                .into_iter()
                .filter(|iv| iv.n <= 10 && !iv.clipped)
                .collect();
            if first.len() != 10 {
                return (false, f64::NEG_INFINITY);
            }
            let tol = 1e-4 / wg;
            let lengths_ok = first.iter().all(|iv| iv.length <= PI / wg + tol);
            let report = verify_bounds(&first).unwrap();
            (
                report.all_within && report.one_per_window && lengths_ok,
                report.worst_margin,
            )
        })
        .collect();
    let all_ok = per.iter().all(|p| p.0);
    let worst = per.iter().fold(f64::INFINITY, |m, p| m.min(p.1));
    let secs = start.elapsed().as_secs_f64();
    (
        all_ok && secs < 120.0,
        format!(
            "7 reservoirs, 10 intervals each: worst bound margin {worst:.3} pi/w_g \
             (negative means violated; budget 2 min)"
        ),
    )
}

/// C5: far out in the sequence (n = 50..60, power-law gap, w_g = w_s) the
/// interval lengths settle at the supremum `pi / w_g`: mean within 2%,
/// standard deviation below 2% of it.
fn long_time_interval_regularity() -> (bool, String) {
    let cfg = QuadratureConfig::default();
    let sd = make_power_law_gap_sd(1.0, -0.5, 1.0, 1.0).unwrap();
    let intervals = find_negative_intervals(&sd, 2.0 * PI * 60.5, &cfg).unwrap();
    let lengths: Vec<f64> = intervals
        .iter()
        .filter(|iv| (50..=60).contains(&iv.n) && !iv.clipped)
        .map(|iv| iv.length)
        .collect();
    if lengths.len() != 11 {
        return (
            false,
            format!(
                "expected 11 intervals with n in [50, 60], found {}",
                lengths.len()
            ),
        );
    }
    let mean = lengths.iter().sum::<f64>() / lengths.len() as f64;
    let var = lengths.iter().map(|l| (l - mean).powi(2)).sum::<f64>() / (lengths.len() - 1) as f64;
    let spread = var.sqrt();
    let target = PI;
    (
        (mean - target).abs() <= 0.02 * target && spread < 0.02 * target,
        format!(
            "mean length {:.4} (target pi, within {:.2}%), standard deviation {:.2}% of pi",
            mean,
            100.0 * (mean - target).abs() / target,
            100.0 * spread / target
        ),
    )
}

/// C6: the measured phase of the amplitude-phase form at `w_s t = 1e3`
/// agrees with the analytic limit to 0.05 rad; the Lorentzian profile's
/// limit is pi/2.
fn phase_approaches_limit() -> (bool, String) {
    let cfg = QuadratureConfig::default();
    let cases = [
        make_power_law_gap_sd(1.0, -0.5, 1.0, 1.0).unwrap(),
        make_power_law_gap_sd(1.0, -0.25, 1.0, 1.0).unwrap(),
        make_lorentzian_gap_sd(1.0, 1.0, 1.0).unwrap(),
    ];
    let mut worst = 0.0f64;
    for sd in &cases {
        let limit = phase_limit(sd.edge_profile(), &sd.lambda_expansion(12).unwrap()).unwrap();
        let measured = transform_sample(sd, 1e3, &cfg).unwrap().phase.unwrap();
        worst = worst.max(circular_distance(measured, limit.value));
    }
    let lorentzian_limit = phase_limit(
        cases[2].edge_profile(),
        &cases[2].lambda_expansion(12).unwrap(),
    )
    .unwrap()
    .value;
    (
        worst <= 0.05 && (lorentzian_limit - FRAC_PI_2).abs() < 1e-12,
        format!(
            "max |phase(1e3) - limit| = {worst:.4} rad (tolerance 0.05); \
             lorentzian limit {lorentzian_limit:.12} (pi/2 expected)"
        ),
    )
}

/// C7: the two routes to the backflow measure — direct quadrature of
/// `|gamma0| e^{-Xi0}` and telescoping `e^{-Xi0}` across interval ends —
/// agree to a relative 1e-6 for a wide-gap ohmic reservoir.
fn measure_routes_agree() -> (bool, String) {
    let cfg = QuadratureConfig::default();
    let sd = make_figure_sd(0.0, 10.0, 1.0).unwrap();
    let m = non_markovianity(&sd, 50.0, &cfg).unwrap();
    let rel = (m.n_quadrature - m.n_telescoped).abs() / m.n_telescoped;
    (
        rel < 1e-6,
        format!(
            "N = {:.6e} over {} intervals; route gap {rel:.2e} (tolerance 1e-6)",
            m.n_telescoped, m.intervals_used
        ),
    )
}

/// C8: at `w_s t = 500` the transform quadrature matches the algebraic tail
/// laws of the power-law-gap family to a relative 0.1.
fn transform_tail_laws() -> (bool, String) {
    let cfg = QuadratureConfig::default();
    let sd = make_power_law_gap_sd(1.0, -0.5, 1.0, 1.0).unwrap();
    let (law_c, law_s) = tail_laws(&sd).unwrap();
    let t = 500.0;
    let c = phi_c(&sd, t, &cfg).unwrap().value;
    let s = phi_s(&sd, t, &cfg).unwrap().value;
    let rc = (c - law_c.eval(t)).abs() / law_c.eval(t).abs();
    let rs = (s - law_s.eval(t)).abs() / law_s.eval(t).abs();
    (
        rc < 0.1 && rs < 0.1,
        format!(
            "relative law errors at w_s t = 500: cosine {rc:.2e}, sine {rs:.2e} (tolerance 0.1)"
        ),
    )
}

/// C10: with no gap, backflow requires the low-frequency steepness to
/// exceed two: the marginal ohmic reservoir shows no negative intervals on
/// `(0, 50/w_s]` while the steep one does. The steepness is the power-law
/// exponent of `J` at zero frequency, as verified against the quadrature.
fn gapless_backflow_control() -> (bool, String) {
    let cfg = QuadratureConfig::default();
    let marginal =
        find_negative_intervals(&make_figure_sd(0.0, 0.0, 1.0).unwrap(), 50.0, &cfg).unwrap();
    let steep =
        find_negative_intervals(&make_figure_sd(3.0, 0.0, 1.0).unwrap(), 50.0, &cfg).unwrap();
    (
        marginal.is_empty() && !steep.is_empty(),
        format!(
            "steepness 1 exponent: {} intervals (0 expected); steepness 4 exponent: {} (>= 1 expected)",
            marginal.len(),
            steep.len()
        ),
    )
}

#[test]
fn acceptance_criteria() {
    let results = vec![
        run(
            "C1  short-time linear growth of the rate",
            short_time_linear_growth,
        ),
        run(
            "C2  rate is the derivative of the dephasing factor",
            derivative_identity,
        ),
        run(
            "C3  amplitude-phase form reconstructs the rate",
            amplitude_phase_reconstruction,
        ),
        run(
            "C4  universal start/end bounds on backflow intervals",
            universal_interval_bounds,
        ),
        run(
            "C5  long-time interval lengths settle at pi/w_g",
            long_time_interval_regularity,
        ),
        run(
            "C6  measured phase approaches the analytic limit",
            phase_approaches_limit,
        ),
        run("C7  both measure routes agree", measure_routes_agree),
        run(
            "C8  transforms follow their algebraic tail laws",
            transform_tail_laws,
        ),
        run(
            "C10 gapless control: backflow needs steepness above two",
            gapless_backflow_control,
        ),
    ];
    println!();
    for r in &results {
        println!(
            "[{}] {} ({:.2} s): {}",
            if r.pass { "PASS" } else { "FAIL" },
            r.label,
            r.seconds,
            r.detail
        );
    }
    println!("(C9, the figure presets, is checked by the CLI crate's acceptance test.)");
    let failed: Vec<&str> = results
        .iter()
        .filter(|r| !r.pass)
        .map(|r| r.label)
        .collect();
    assert!(failed.is_empty(), "acceptance criteria failed: {failed:?}");
}
