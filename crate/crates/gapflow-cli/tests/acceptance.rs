//! Figure-preset acceptance check: all three preset runs complete, and on
//! the long-time preset the rate oscillates at the gap frequency — the
//! spacing of successive downward zero crossings matches the gap period
//! within 5% and the crossing directions strictly alternate.

use std::process::Command;
use std::time::Instant;

use gapflow_cli::parse_trajectory_csv;

/// Zero crossings of the sampled rate, by linear interpolation; `true`
/// marks a downward (positive to non-positive) crossing.
fn crossings(taus: &[f64], gammas: &[f64]) -> Vec<(f64, bool)> {
    let mut out = Vec::new();
    for i in 0..gammas.len() - 1 {
        let (g0, g1) = (gammas[i], gammas[i + 1]);
        if g0 == 0.0 || g0.signum() == g1.signum() {
            continue;
        }
        let t = taus[i] + g0 / (g0 - g1) * (taus[i + 1] - taus[i]);
        out.push((t, g0 > 0.0));
    }
    out
}

#[test]
fn figure_presets() {
    let started = Instant::now();
    let dir = tempfile::tempdir().unwrap();

    let mut failures = Vec::new();
    for name in ["fig1", "fig2", "fig3"] {
        let out = dir.path().join(name);
        let run = Command::new(env!("CARGO_BIN_EXE_gapflow"))
            .args(["figure", "--sd", name, "--out", out.to_str().unwrap()])
            .output()
            .expect("binary runs");
        if run.status.code() != Some(0) {
            failures.push(format!(
                "{name} exited {:?}: {}",
                run.status.code(),
                String::from_utf8_lossy(&run.stderr)
            ));
            continue;
        }
        if !out.join(format!("{name}.svg")).exists() {
            failures.push(format!("{name}: chart not written"));
        }
    }

    // long-time window: curves b (gap 10) and c (gap 20) must oscillate at
    // their gap frequency
    let mut details = Vec::new();
    for (label, omega_g) in [("b", 10.0), ("c", 20.0)] {
        let path = dir.path().join("fig3").join(format!("fig3_{label}.csv"));
        let points = match std::fs::read_to_string(&path).map_err(|e| e.to_string()) {
            Ok(text) => match parse_trajectory_csv(&text) {
                Ok(p) => p,
                Err(e) => {
                    failures.push(format!("fig3_{label}: {e}"));
                    continue;
                }
            },
            Err(e) => {
                failures.push(format!("fig3_{label}: {e}"));
                continue;
            }
        };
        let taus: Vec<f64> = points.iter().map(|p| p.omega_s_t).collect();
        let gammas: Vec<f64> = points.iter().map(|p| p.gamma0_over_omega_s).collect();
        let all = crossings(&taus, &gammas);
        if all.windows(2).any(|w| w[0].1 == w[1].1) {
            failures.push(format!(
                "fig3_{label}: crossing directions do not alternate"
            ));
        }
        let down: Vec<f64> = all.iter().filter(|c| c.1).map(|c| c.0).collect();
        if down.len() < 3 {
            failures.push(format!(
                "fig3_{label}: only {} downward crossings in the window",
                down.len()
            ));
            continue;
        }
        let spacings: Vec<f64> = down.windows(2).map(|w| w[1] - w[0]).collect();
        let mean = spacings.iter().sum::<f64>() / spacings.len() as f64;
        let expected = 2.0 * std::f64::consts::PI / omega_g;
        let rel = (mean - expected).abs() / expected;
        if rel > 0.05 {
            failures.push(format!(
                "fig3_{label}: period {mean:.5} vs expected {expected:.5} (off by {:.1}%)",
                100.0 * rel
            ));
        }
        details.push(format!(
            "fig3_{label} period {mean:.4} vs 2 pi / {omega_g} = {expected:.4} \
             over {} crossings",
            down.len()
        ));
    }

    let seconds = started.elapsed().as_secs_f64();
    if failures.is_empty() {
        println!(
            "[PASS] figure presets ({seconds:.2} s): fig1/fig2/fig3 written; {}",
            details.join("; ")
        );
    } else {
        println!(
            "[FAIL] figure presets ({seconds:.2} s): {}",
            failures.join("; ")
        );
    }
    assert!(failures.is_empty(), "{}", failures.join("\n"));
}
