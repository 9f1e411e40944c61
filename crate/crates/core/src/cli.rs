//! Command-line front end: `steady`, `sweep`, `correlate` and `verify-heff`.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::config::{resolve, ConfigError, ConfigLayer, Resolved};
use crate::correlations::{g2_tau, Channel, CorrelationError};
use crate::dynamics::{
    build_adjoint_generator, steady_state, AdjointGenerator, BlochState, DynamicsError,
};
use crate::heff::{compare_to_target, derive, HeffError, DEFAULT_KEEP_HARMONIC};
use crate::model::{EffectiveModel, ModelError};
use crate::sweep::{fmt_num, run_sweep, write_csv, Spacing, SweepPoint};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_NUMERICAL: i32 = 2;
pub const EXIT_PARTIAL: i32 = 3;
pub const EXIT_VERIFY: i32 = 4;

/// Largest coefficient deviation accepted by `verify-heff`.
pub const HEFF_TOLERANCE: f64 = 1e-8;
pub const DEFAULT_TAU_POINTS: usize = 201;
pub const DEFAULT_COUPLING: f64 = 1e9;
pub const DEFAULT_MODE_TRUNCATION: usize = 3;

#[derive(Debug, Parser)]
#[command(
    name = "pairlight",
    version,
    about = "Steady state, photon-pair correlations and effective-Hamiltonian check for a driven two-level emitter with broken inversion symmetry",
    allow_negative_numbers = true
)]
struct Cli {
    /// Material preset (gamma-globulin, gan-dot).
    #[arg(long, global = true)]
    preset: Option<String>,
    /// key = value configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Rabi frequency Ω in s⁻¹.
    #[arg(long, global = true)]
    rabi: Option<f64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print the steady state, channel frequencies and rates.
    Steady,
    /// Sweep the Rabi frequency and write CSV.
    Sweep(SweepArgs),
    /// Delayed cross-correlations g12(τ), g21(τ) as CSV.
    Correlate(CorrelateArgs),
    /// Compare the averaged Hamiltonian with the analytic coefficients.
    VerifyHeff(VerifyArgs),
}

#[derive(Debug, Args)]
struct SweepArgs {
    /// Output file (stdout if omitted).
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long)]
    points: Option<usize>,
    /// Logarithmic grid (default).
    #[arg(long, conflicts_with = "linear")]
    log: bool,
    #[arg(long)]
    linear: bool,
    #[arg(long)]
    omega_min: Option<f64>,
    #[arg(long)]
    omega_max: Option<f64>,
    /// Worker threads (rayon default if omitted).
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Debug, Args)]
struct CorrelateArgs {
    #[arg(long)]
    output: Option<PathBuf>,
    /// Largest delay in s (default 10/γ_R).
    #[arg(long)]
    tau_max: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_TAU_POINTS)]
    tau_points: usize,
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    /// Photon-number cutoff N of the field mode.
    #[arg(long, default_value_t = DEFAULT_MODE_TRUNCATION)]
    mode_truncation: usize,
    /// Atom–mode coupling g in s⁻¹.
    #[arg(long, default_value_t = DEFAULT_COUPLING)]
    coupling: f64,
    /// Mode frequency in s⁻¹ (default ω₀).
    #[arg(long)]
    mode_freq: Option<f64>,
    /// Largest harmonic kept after averaging.
    #[arg(long, default_value_t = DEFAULT_KEEP_HARMONIC)]
    keep_harmonic: u32,
}

enum Failure {
    Config(String),
    Numerical(String),
}

impl Failure {
    fn code(&self) -> i32 {
        match self {
            Failure::Config(_) => EXIT_CONFIG,
            Failure::Numerical(_) => EXIT_NUMERICAL,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Config(m) | Failure::Numerical(m) => m,
        }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e.to_string())
    }
}

impl From<ModelError> for Failure {
    fn from(e: ModelError) -> Self {
        Failure::Config(e.to_string())
    }
}

impl From<DynamicsError> for Failure {
    fn from(e: DynamicsError) -> Self {
        Failure::Numerical(e.to_string())
    }
}

impl From<CorrelationError> for Failure {
    fn from(e: CorrelationError) -> Self {
        Failure::Numerical(e.to_string())
    }
}

impl From<HeffError> for Failure {
    fn from(e: HeffError) -> Self {
        match e {
            HeffError::TruncationTooSmall(_)
            | HeffError::NonFinite(_)
            | HeffError::BadLaserFrequency(_) => Failure::Config(e.to_string()),
            HeffError::SecularTerm(_) => Failure::Numerical(e.to_string()),
        }
    }
}

fn io_failure(path: &Path, e: std::io::Error) -> Failure {
    Failure::Config(format!("cannot write {}: {e}", path.display()))
}

/// Run the tool with `args` (including the program name). Returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() {
                let _ = write!(err, "{e}");
                EXIT_CONFIG
            } else {
                let _ = write!(out, "{e}");
                EXIT_OK
            };
            return code;
        }
    };
    match dispatch(&cli, out, err) {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message());
            f.code()
        }
    }
}

fn dispatch(cli: &Cli, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, Failure> {
    let file = cli
        .config
        .as_deref()
        .map(ConfigLayer::from_file)
        .transpose()?;
    let mut layer = ConfigLayer {
        preset: cli.preset.clone(),
        rabi: cli.rabi,
        ..Default::default()
    };
    if let Command::Sweep(a) = &cli.command {
        layer.points = a.points;
        layer.omega_min = a.omega_min;
        layer.omega_max = a.omega_max;
        layer.spacing = match (a.log, a.linear) {
            (true, _) => Some(Spacing::Log),
            (_, true) => Some(Spacing::Linear),
            _ => None,
        };
    }
    let resolved = resolve(file.as_ref(), &layer)?;
    match &cli.command {
        Command::Steady => cmd_steady(&resolved, out, err),
        Command::Sweep(a) => cmd_sweep(&resolved, a, out, err),
        Command::Correlate(a) => cmd_correlate(&resolved, a, out, err),
        Command::VerifyHeff(a) => cmd_verify_heff(&resolved, a, out, err),
    }
}

fn build_model(resolved: &Resolved, err: &mut dyn Write) -> Result<EffectiveModel, Failure> {
    let model = EffectiveModel::from_physical(&resolved.params)?;
    for w in &model.warnings {
        let _ = writeln!(err, "warning: {w}");
    }
    Ok(model)
}

fn solve(model: &EffectiveModel) -> Result<(AdjointGenerator, BlochState), Failure> {
    let g = build_adjoint_generator(model)?;
    let ss = steady_state(&g)?;
    Ok((g, ss))
}

fn with_threads<R: Send>(
    threads: Option<usize>,
    f: impl FnOnce() -> R + Send,
) -> Result<R, Failure> {
    match threads {
        None => Ok(f()),
        Some(0) => Err(Failure::Config("--threads must be at least 1".into())),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Failure::Config(e.to_string()))?;
            Ok(pool.install(f))
        }
    }
}

fn emit(output: Option<&Path>, bytes: &[u8], out: &mut dyn Write) -> Result<(), Failure> {
    match output {
        Some(path) => fs::write(path, bytes).map_err(|e| io_failure(path, e)),
        None => out
            .write_all(bytes)
            .map_err(|e| Failure::Config(format!("cannot write output: {e}"))),
    }
}

fn cmd_steady(
    resolved: &Resolved,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<i32, Failure> {
    let model = build_model(resolved, err)?;
    let (_, ss) = solve(&model)?;
    let lines = [
        ("omega_rabi", model.omega_rabi),
        ("sz", ss.inversion()),
        ("p2", ss.excited_population()),
        ("p1", ss.ground_population()),
        ("delta_eff", model.delta_eff),
        ("bs_shift", model.bs_shift),
        ("thz_freq", model.pair_freq),
        ("optical_freq", model.omega0 + model.bs_shift),
        ("laser_freq", model.omega_l),
        ("gamma_r", model.gamma_r),
        ("gamma_l", model.gamma_l),
        ("gamma_t", model.gamma_t),
        ("pump_rate", model.pump_rate()),
    ];
    let mut text = format!("{:<14}{}\n", "preset", resolved.preset);
    for (k, v) in lines {
        text.push_str(&format!("{k:<14}{}\n", fmt_num(v)));
    }
    emit(None, text.as_bytes(), out)?;
    Ok(EXIT_OK)
}

fn cmd_sweep(
    resolved: &Resolved,
    a: &SweepArgs,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<i32, Failure> {
    let spec = resolved.sweep;
    spec.validate().map_err(ConfigError::from)?;
    let points = with_threads(a.threads, || run_sweep(&spec))?.map_err(ConfigError::from)?;
    let mut buf = Vec::new();
    write_csv(&points, &mut buf).map_err(|e| Failure::Config(e.to_string()))?;
    emit(a.output.as_deref(), &buf, out)?;

    let failed: Vec<_> = points
        .iter()
        .filter_map(|p| match p {
            SweepPoint::Failed { omega_rabi, reason } => Some((omega_rabi, reason)),
            SweepPoint::Ok(_) => None,
        })
        .collect();
    if failed.is_empty() {
        return Ok(EXIT_OK);
    }
    for (omega, reason) in &failed {
        let _ = writeln!(err, "point omega_rabi={}: {reason}", fmt_num(**omega));
    }
    let _ = writeln!(
        err,
        "error: {} of {} grid points failed",
        failed.len(),
        points.len()
    );
    Ok(EXIT_PARTIAL)
}

fn tau_grid(tau_max: f64, points: usize) -> Vec<f64> {
    if points == 1 {
        return vec![0.0];
    }
    let last = (points - 1) as f64;
    let mut grid: Vec<f64> = (0..points).map(|k| tau_max * (k as f64 / last)).collect();
    grid[points - 1] = tau_max;
    grid
}

fn cmd_correlate(
    resolved: &Resolved,
    a: &CorrelateArgs,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<i32, Failure> {
    if a.tau_points == 0 {
        return Err(Failure::Config("--tau-points must be at least 1".into()));
    }
    let model = build_model(resolved, err)?;
    let (g, ss) = solve(&model)?;
    let tau_max = match a.tau_max {
        Some(t) => t,
        None if model.gamma_r > 0.0 => 10.0 / model.gamma_r,
        None => return Err(Failure::Numerical("γ_R = 0; pass --tau-max".into())),
    };
    if !(tau_max.is_finite() && tau_max > 0.0) {
        return Err(Failure::Config(format!(
            "--tau-max must be positive, got {tau_max}"
        )));
    }
    let grid = tau_grid(tau_max, a.tau_points);
    let (g12, g21) = with_threads(a.threads, || {
        let g12 = g2_tau(Channel::Thz, Channel::Optical, &g, &ss, &grid);
        let g21 = g2_tau(Channel::Optical, Channel::Thz, &g, &ss, &grid);
        (g12, g21)
    })?;
    let (g12, g21) = (g12?, g21?);
    let mut text = String::from("tau,g12,g21\n");
    for ((t, x), y) in grid.iter().zip(&g12).zip(&g21) {
        text.push_str(&format!(
            "{},{},{}\n",
            fmt_num(*t),
            fmt_num(*x),
            fmt_num(*y)
        ));
    }
    emit(a.output.as_deref(), text.as_bytes(), out)?;
    Ok(EXIT_OK)
}

fn cmd_verify_heff(
    resolved: &Resolved,
    a: &VerifyArgs,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<i32, Failure> {
    let model = build_model(resolved, err)?;
    let mode_freq = a.mode_freq.unwrap_or(model.omega0);
    let d = derive(
        &model,
        a.mode_truncation,
        mode_freq,
        a.coupling,
        a.keep_harmonic,
    )?;
    let report = compare_to_target(&d.second_order.kept, &model, a.coupling);
    let max = report.max_deviation();
    let verdict = if report.passes(HEFF_TOLERANCE) {
        "PASS"
    } else {
        "FAIL"
    };
    let text = format!(
        "mode truncation N = {}, coupling g = {}, mode frequency = {}\n{report}max deviation {max:.3e} (tolerance {HEFF_TOLERANCE:e}): {verdict}\n",
        a.mode_truncation,
        fmt_num(a.coupling),
        fmt_num(mode_freq),
    );
    emit(None, text.as_bytes(), out)?;
    Ok(if report.passes(HEFF_TOLERANCE) {
        EXIT_OK
    } else {
        EXIT_VERIFY
    })
}
