//! `gapflow` — dephasing dynamics of a qubit coupled to a reservoir whose
//! spectral density has a low-frequency gap.
//!
//! Every subcommand prints the paths of the artifacts it wrote, one per
//! line. Exit codes: 0 success, 2 usage error, 3 numerical failure,
//! 4 a checked bound was violated (artifacts are still written).

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use gapflow_cli::{
    compute_coherence, compute_trajectory, intervals_csv, preset, quadrature_config, resolve_sd,
    run_detection, run_measure, run_preset, run_sweep, run_tails, sweep_csv, to_pretty_json,
    trajectory_csv, write_artifact, CliError, FormatSet, Result,
};
use gapflow_core::GappedSpectralDensity;

/// Simulate pure-dephasing qubit channels for reservoirs with a spectral
/// gap: decay rates, coherence trajectories, information-backflow windows
/// and their universal bounds.
#[derive(Parser)]
#[command(name = "gapflow", version, max_term_width = 100)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Sample the dephasing rate and its carrier/envelope decomposition on
    /// a time grid.
    Rate(TrajArgs),
    /// Sample the coherence decay `rho01(t) = rho01(0) e^{-Xi0(t)}`.
    Coherence(TrajArgs),
    /// Detect negative-rate intervals and check the universal window
    /// bounds.
    Intervals(WindowArgs),
    /// Integrate the information-backflow measure over the detected
    /// intervals.
    Measure(WindowArgs),
    /// Report the long-time algebraic tail laws of the two transforms.
    Tails(SdArgs),
    /// Render a built-in figure preset (fig1, fig2 or fig3) as CSV curves
    /// plus an SVG chart.
    Figure(FigureArgs),
    /// Sweep a grid of gap ratios and edge steepnesses and summarize each
    /// point.
    Sweep(SweepArgs),
}

/// Scenario selection and output control shared by every subcommand.
#[derive(Args)]
struct SdArgs {
    /// Spectral density as inline JSON or a path to a JSON file; overrides
    /// --alpha/--omega-g/--omega-s.
    #[arg(long)]
    sd: Option<String>,
    /// Edge steepness of the built-in hard-gap ohmic family.
    #[arg(long, default_value_t = 0.0)]
    alpha: f64,
    /// Gap frequency (0 selects the gapless control family).
    #[arg(long, default_value_t = 1.0)]
    omega_g: f64,
    /// Reservoir cutoff frequency; the unit of all exported rates and
    /// inverse times.
    #[arg(long, default_value_t = 1.0)]
    omega_s: f64,
    /// Relative quadrature tolerance.
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
    /// Output directory for artifacts.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Comma-separated artifact formats (subset of csv,json,svg).
    #[arg(long)]
    format: Option<String>,
}

#[derive(Args)]
struct TrajArgs {
    #[command(flatten)]
    sd: SdArgs,
    /// Grid start, as omega_s t.
    #[arg(long, default_value_t = 0.0)]
    t_min: f64,
    /// Grid end, as omega_s t.
    #[arg(long, default_value_t = 20.0)]
    t_max: f64,
    /// Number of grid points.
    #[arg(long, default_value_t = 801)]
    samples: usize,
}

#[derive(Args)]
struct WindowArgs {
    #[command(flatten)]
    sd: SdArgs,
    /// Scan horizon, as omega_s t.
    #[arg(long, default_value_t = 50.0)]
    t_max: f64,
    /// Phase margin used for the long-time interval predictions, in
    /// radians.
    #[arg(long, default_value_t = 0.1)]
    epsilon0: f64,
}

#[derive(Args)]
struct FigureArgs {
    #[command(flatten)]
    sd: SdArgs,
    /// Number of grid points per curve.
    #[arg(long, default_value_t = 801)]
    samples: usize,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    sd: SdArgs,
    /// Scan horizon per grid point, as omega_s t.
    #[arg(long, default_value_t = 50.0)]
    t_max: f64,
}

fn main() -> ExitCode {
    init_thread_pool();
    let cli = Cli::parse();
    match run(cli.cmd) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("gapflow: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

/// Honour `GAPFLOW_THREADS` as a cap on rayon parallelism.
fn init_thread_pool() {
    if let Ok(value) = std::env::var("GAPFLOW_THREADS") {
        if let Ok(n) = value.parse::<usize>() {
            if n > 0 {
                // a later re-initialization attempt is fine to ignore
                let _ = rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build_global();
            }
        }
    }
}

fn run(cmd: Cmd) -> Result<()> {
    match cmd {
        Cmd::Rate(a) => rate(a),
        Cmd::Coherence(a) => coherence_cmd(a),
        Cmd::Intervals(a) => intervals(a),
        Cmd::Measure(a) => measure(a),
        Cmd::Tails(a) => tails(a),
        Cmd::Figure(a) => figure(a),
        Cmd::Sweep(a) => sweep(a),
    }
}

struct Scenario {
    sd: GappedSpectralDensity,
    cfg: gapflow_core::QuadratureConfig,
    out: PathBuf,
    formats: FormatSet,
}

impl SdArgs {
    /// Resolve the density, tolerance and formats; `supported` lists the
    /// formats this subcommand can emit and `default` what it emits when
    /// --format is absent.
    fn scenario(&self, supported: FormatSet, default: FormatSet) -> Result<Scenario> {
        let sd = resolve_sd(self.sd.as_deref(), self.alpha, self.omega_g, self.omega_s)?;
        let cfg = quadrature_config(self.tol)?;
        let formats = match &self.format {
            Some(list) => FormatSet::parse(list, supported)?,
            None => default,
        };
        Ok(Scenario {
            sd,
            cfg,
            out: self.out.clone(),
            formats,
        })
    }
}

fn emit(path: &Path, contents: &str) -> Result<()> {
    write_artifact(path, contents)?;
    println!("{}", path.display());
    Ok(())
}

const CSV_ONLY: FormatSet = FormatSet {
    csv: true,
    json: false,
    svg: false,
};
const JSON_ONLY: FormatSet = FormatSet {
    csv: false,
    json: true,
    svg: false,
};
const CSV_JSON: FormatSet = FormatSet {
    csv: true,
    json: true,
    svg: false,
};
const CSV_SVG: FormatSet = FormatSet {
    csv: true,
    json: false,
    svg: true,
};

fn rate(a: TrajArgs) -> Result<()> {
    let sc = a.sd.scenario(FormatSet::all(), CSV_ONLY)?;
    let points = compute_trajectory(&sc.sd, a.t_min, a.t_max, a.samples, &sc.cfg)?;
    if sc.formats.csv {
        emit(&sc.out.join("rate.csv"), &trajectory_csv(&points))?;
    }
    if sc.formats.json {
        emit(&sc.out.join("rate.json"), &to_pretty_json(&points))?;
    }
    if sc.formats.svg {
        let curves = [gapflow_cli::svg::Curve {
            label: "gamma0 / omega_s".into(),
            points: points
                .iter()
                .map(|p| (p.omega_s_t, p.gamma0_over_omega_s))
                .collect(),
        }];
        let chart = gapflow_cli::svg::line_chart(
            "dephasing rate",
            "omega_s t",
            "gamma0 / omega_s",
            &curves,
        );
        emit(&sc.out.join("rate.svg"), &chart)?;
    }
    Ok(())
}

fn coherence_cmd(a: TrajArgs) -> Result<()> {
    let sc = a.sd.scenario(FormatSet::all(), CSV_ONLY)?;
    let points = compute_coherence(&sc.sd, a.t_min, a.t_max, a.samples, &sc.cfg)?;
    if sc.formats.csv {
        emit(
            &sc.out.join("coherence.csv"),
            &gapflow_cli::coherence_csv(&points),
        )?;
    }
    if sc.formats.json {
        emit(&sc.out.join("coherence.json"), &to_pretty_json(&points))?;
    }
    if sc.formats.svg {
        let curves = [gapflow_cli::svg::Curve {
            label: "e^{-Xi0}".into(),
            points: points.iter().map(|p| (p.omega_s_t, p.factor)).collect(),
        }];
        let chart = gapflow_cli::svg::line_chart(
            "coherence decay",
            "omega_s t",
            "|rho01| / |rho01(0)|",
            &curves,
        );
        emit(&sc.out.join("coherence.svg"), &chart)?;
    }
    Ok(())
}

fn intervals(a: WindowArgs) -> Result<()> {
    let sc = a.sd.scenario(CSV_JSON, CSV_ONLY)?;
    let run = run_detection(&sc.sd, a.t_max, a.epsilon0, &sc.cfg)?;
    if sc.formats.csv {
        emit(
            &sc.out.join("intervals.csv"),
            &intervals_csv(&run.artifact.rows),
        )?;
    }
    if sc.formats.json {
        emit(
            &sc.out.join("intervals.json"),
            &to_pretty_json(&run.artifact),
        )?;
    }
    if let Some(first) = run.violations.first() {
        return Err(CliError::Finding(format!(
            "{} bound violation(s); first: {first}",
            run.violations.len()
        )));
    }
    Ok(())
}

fn measure(a: WindowArgs) -> Result<()> {
    let sc = a.sd.scenario(JSON_ONLY, JSON_ONLY)?;
    let artifact = run_measure(&sc.sd, a.t_max, &sc.cfg)?;
    emit(&sc.out.join("measure.json"), &to_pretty_json(&artifact))
}

fn tails(a: SdArgs) -> Result<()> {
    let sc = a.scenario(JSON_ONLY, JSON_ONLY)?;
    let artifact = run_tails(&sc.sd)?;
    emit(&sc.out.join("tails.json"), &to_pretty_json(&artifact))
}

fn figure(a: FigureArgs) -> Result<()> {
    let name = a.sd.sd.as_deref().unwrap_or("fig1");
    let p = preset(name).ok_or_else(|| {
        CliError::Usage(format!(
            "--sd: unknown preset {name:?} (expected fig1, fig2 or fig3)"
        ))
    })?;
    let sc_formats = match &a.sd.format {
        Some(list) => FormatSet::parse(list, CSV_SVG)?,
        None => CSV_SVG,
    };
    let cfg = quadrature_config(a.sd.tol)?;
    for path in run_preset(p, &a.sd.out, a.samples, &cfg, sc_formats)? {
        println!("{}", path.display());
    }
    Ok(())
}

fn sweep(a: SweepArgs) -> Result<()> {
    let sc = a.sd.scenario(CSV_JSON, CSV_ONLY)?;
    let nu0s = [1.0, 5.0, 10.0, 20.0];
    let alphas = [0.0, 1.0, 2.0];
    let (rows, findings) = run_sweep(&nu0s, &alphas, a.t_max, &sc.cfg);
    if sc.formats.csv {
        emit(&sc.out.join("sweep.csv"), &sweep_csv(&rows))?;
    }
    if sc.formats.json {
        emit(&sc.out.join("sweep.json"), &to_pretty_json(&rows))?;
    }
    if let Some(first) = findings.first() {
        return Err(CliError::Finding(format!(
            "{} bound violation(s); first: {first}",
            findings.len()
        )));
    }
    Ok(())
}
