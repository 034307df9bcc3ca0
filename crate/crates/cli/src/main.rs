//! `gqfi` — batch quantum Fisher information for Gaussian states.
//!
//! Subcommands:
//! - `qfi`: evaluate a probe/channel family on a channel-parameter grid by
//!   one route, all applicable routes (with a cross-check), or an
//!   automatically chosen route; emits CSV.
//! - `sweep`: vary one probe field and tabulate the information against it.
//! - `ellipse`: covariance-ellipse point sets for one-mode states.
//! - `export`: build a probe and write it in the JSON state format.
//!
//! Exit codes: 0 success, 2 input error, 3 computation error, 4 cross-check
//! failure. Identical inputs produce byte-identical output.

use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64 as C64;

use gqfi::{
    apply_channel_family, build_probe, ellipse_export, figure_ellipses, probe_family, qfi_auto,
    qfi_isothermal, qfi_multimode_williamson, qfi_pure_point, qfi_regularized, qfi_series,
    qfi_two_mode, qfi_two_mode_williamson, ChannelSpec, Error, ProbeMode, PureConvention,
    QfiConfig, QfiEstimate, StateFamily,
};

mod formats;
use formats::{csv_text, fmt17, load_channel, load_probe, load_state, state_to_file};

// ---------------------------------------------------------------------------
// Errors and exit codes
// ---------------------------------------------------------------------------

/// A failure with its process exit code: 2 input, 3 computation, 4
/// cross-check.
#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn input(message: impl Into<String>) -> Self {
        Self {
            code: 2,
            message: message.into(),
        }
    }

    pub fn compute(message: impl Into<String>) -> Self {
        Self {
            code: 3,
            message: message.into(),
        }
    }

    pub fn cross_check(message: impl Into<String>) -> Self {
        Self {
            code: 4,
            message: message.into(),
        }
    }

    /// An error raised while loading or validating inputs.
    pub fn from_input_error(e: Error) -> Self {
        Self::input(e.to_string())
    }

    /// An error raised while computing: bad-input variants keep exit code 2,
    /// everything else is a computation failure.
    pub fn from_run_error(e: Error) -> Self {
        match e {
            Error::Input(_) | Error::Dimension(_) | Error::Structure(_) | Error::Unphysical { .. } => {
                Self::input(e.to_string())
            }
            other => Self::compute(other.to_string()),
        }
    }
}

// ---------------------------------------------------------------------------
// Command line
// ---------------------------------------------------------------------------

#[derive(Parser)]
#[command(
    name = "gqfi",
    version,
    about = "Quantum Fisher information of Gaussian states: batch evaluation, \
             parameter sweeps, and covariance-ellipse exports",
    after_help = "Exit codes: 0 success, 2 input error, 3 computation error, \
                  4 cross-check failure."
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Compute QFI rows over a channel-parameter grid.
    Qfi(QfiArgs),
    /// Sweep one probe field and tabulate the information against it.
    Sweep(SweepArgs),
    /// Emit covariance-ellipse point sets for one-mode states.
    Ellipse(EllipseArgs),
    /// Build a probe and write it in the JSON state format.
    Export(ExportArgs),
}

/// Computation route selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MethodArg {
    /// Dispatch on the structure of the family.
    Auto,
    /// Every applicable route, with a max-pairwise-deviation cross-check.
    All,
    TwoMode,
    TwoModeWilliamson,
    Multimode,
    Series,
    IsoThermal,
    PurePoint,
    Regularized,
}

/// Routes tried under `--method all`, in output order.
const ALL_ROUTES: [MethodArg; 7] = [
    MethodArg::TwoMode,
    MethodArg::TwoModeWilliamson,
    MethodArg::Multimode,
    MethodArg::Series,
    MethodArg::IsoThermal,
    MethodArg::PurePoint,
    MethodArg::Regularized,
];

#[derive(Debug, Clone, Copy, ValueEnum)]
enum PureArg {
    /// Smooth limit: the second derivative of the mode's eigenvalue.
    SecondDerivative,
    /// Drop the classical term of pure modes.
    Zero,
}

/// Numerical knobs shared by the computing subcommands.
#[derive(Args)]
struct Tuning {
    /// Finite-difference step for first derivatives.
    #[arg(long, value_name = "H")]
    fd_step: Option<f64>,
    /// Absolute target for the series remainder bound.
    #[arg(long, value_name = "TOL")]
    tol: Option<f64>,
    /// Classical term assigned to a pure mode.
    #[arg(long, value_enum, default_value_t = PureArg::SecondDerivative)]
    pure_convention: PureArg,
}

impl Tuning {
    fn config(&self) -> QfiConfig {
        let mut cfg = QfiConfig::default();
        cfg.fd.step_first = self.fd_step;
        if let Some(tol) = self.tol {
            cfg.series_tol = tol;
        }
        cfg.pure_convention = match self.pure_convention {
            PureArg::SecondDerivative => PureConvention::SecondDerivative,
            PureArg::Zero => PureConvention::Zero,
        };
        cfg
    }
}

#[derive(Args)]
struct QfiArgs {
    /// Base state JSON file (exactly one of --state/--probe).
    #[arg(long, value_name = "FILE", conflicts_with = "probe")]
    state: Option<PathBuf>,
    /// Probe JSON file (exactly one of --state/--probe).
    #[arg(long, value_name = "FILE")]
    probe: Option<PathBuf>,
    /// Channel JSON file; defaults to squeezing on mode 0.
    #[arg(long, value_name = "FILE")]
    channel: Option<PathBuf>,
    /// Computation route.
    #[arg(long, value_enum, default_value_t = MethodArg::Auto)]
    method: MethodArg,
    /// Channel-parameter value; repeat for several grid points.
    #[arg(long, action = clap::ArgAction::Append, allow_hyphen_values = true)]
    eps: Vec<f64>,
    /// Channel-parameter grid START:STOP:COUNT with inclusive endpoints.
    #[arg(long, value_name = "A:B:N", value_parser = parse_range, conflicts_with = "eps",
          allow_hyphen_values = true)]
    eps_range: Option<(f64, f64, usize)>,
    /// Largest tolerated pairwise relative deviation under --method all.
    #[arg(long, value_name = "TOL", default_value_t = 1e-6)]
    xcheck_tol: f64,
    #[command(flatten)]
    tuning: Tuning,
    /// Output CSV path (default: stdout).
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

/// Probe fields available to `sweep`.
#[derive(Debug, Clone, Copy, ValueEnum)]
enum SweepParam {
    NTh,
    R,
    Theta,
    DMag,
    DPhase,
}

impl SweepParam {
    fn name(self) -> &'static str {
        match self {
            SweepParam::NTh => "n-th",
            SweepParam::R => "r",
            SweepParam::Theta => "theta",
            SweepParam::DMag => "d-mag",
            SweepParam::DPhase => "d-phase",
        }
    }
}

#[derive(Args)]
struct SweepArgs {
    /// Probe JSON file whose field is swept.
    #[arg(long, value_name = "FILE")]
    probe: PathBuf,
    /// Channel JSON file; defaults to squeezing on mode 0.
    #[arg(long, value_name = "FILE")]
    channel: Option<PathBuf>,
    /// Probe field to sweep.
    #[arg(long, value_enum)]
    param: SweepParam,
    /// Sweep grid START:STOP:COUNT with inclusive endpoints.
    #[arg(long, value_name = "A:B:N", value_parser = parse_range, allow_hyphen_values = true)]
    range: (f64, f64, usize),
    /// Probe mode whose field is swept.
    #[arg(long, default_value_t = 0)]
    mode: usize,
    /// Channel-parameter value at which the information is evaluated.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    eps: f64,
    #[command(flatten)]
    tuning: Tuning,
    /// Output CSV path (default: stdout).
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EllipseArgs {
    /// One-mode state JSON file. Without it, the default grid of squeezed
    /// probes (r = 0.8, five squeezing angles, channel strengths 0 and 0.1).
    #[arg(long, value_name = "FILE")]
    state: Option<PathBuf>,
    /// Points per ellipse.
    #[arg(long, value_name = "N", default_value_t = 64)]
    n_points: usize,
    /// Output CSV path (default: stdout).
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ExportArgs {
    /// Probe JSON file to build.
    #[arg(long, value_name = "FILE")]
    probe: PathBuf,
    /// Output state JSON path (default: stdout).
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

// ---------------------------------------------------------------------------
// Shared plumbing
// ---------------------------------------------------------------------------

/// Parse `start:stop:count`; the count must be positive.
fn parse_range(s: &str) -> Result<(f64, f64, usize), String> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 3 {
        return Err(format!("expected START:STOP:COUNT, got {s:?}"));
    }
    let lo: f64 = parts[0]
        .parse()
        .map_err(|e| format!("bad start {:?}: {e}", parts[0]))?;
    let hi: f64 = parts[1]
        .parse()
        .map_err(|e| format!("bad stop {:?}: {e}", parts[1]))?;
    let n: usize = parts[2]
        .parse()
        .map_err(|e| format!("bad count {:?}: {e}", parts[2]))?;
    if n == 0 {
        return Err("the grid must be non-empty".into());
    }
    Ok((lo, hi, n))
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    (0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
        .collect()
}

fn eps_grid(eps: &[f64], range: Option<(f64, f64, usize)>) -> Vec<f64> {
    match range {
        Some((lo, hi, n)) => linspace(lo, hi, n),
        None if eps.is_empty() => vec![0.0],
        None => eps.to_vec(),
    }
}

fn load_channel_or_default(path: Option<&Path>) -> Result<ChannelSpec, CliError> {
    match path {
        Some(p) => load_channel(p),
        None => Ok(ChannelSpec::Squeeze { mode: 0 }),
    }
}

/// Build the one-parameter family from either input kind.
fn load_family(
    state: Option<&Path>,
    probe: Option<&Path>,
    channel: Option<&Path>,
) -> Result<StateFamily, CliError> {
    let channel = load_channel_or_default(channel)?;
    match (state, probe) {
        (Some(path), None) => {
            let base = load_state(path)?;
            apply_channel_family(&base, &channel).map_err(CliError::from_input_error)
        }
        (None, Some(path)) => {
            let spec = load_probe(path)?;
            probe_family(&spec, &channel).map_err(CliError::from_input_error)
        }
        _ => Err(CliError::input("provide exactly one of --state or --probe")),
    }
}

fn open_out(path: Option<&Path>) -> Result<Box<dyn Write>, CliError> {
    Ok(match path {
        Some(p) => Box::new(
            File::create(p).map_err(|e| CliError::input(format!("{}: {e}", p.display())))?,
        ),
        None => Box::new(io::stdout()),
    })
}

fn wline(out: &mut dyn Write, line: &str) -> Result<(), CliError> {
    writeln!(out, "{line}").map_err(|e| CliError::compute(format!("writing output: {e}")))
}

/// A route is skipped under `--method all` when it declares itself outside
/// its domain; any other failure is a real error.
fn route_inapplicable(e: &Error) -> bool {
    matches!(
        e,
        Error::NotApplicable(_) | Error::PurePoint { .. } | Error::DegenerateGauge
    )
}

fn run_route(
    method: MethodArg,
    family: &StateFamily,
    eps: f64,
    cfg: &QfiConfig,
) -> gqfi::Result<QfiEstimate> {
    match method {
        MethodArg::Auto => qfi_auto(family, eps, cfg),
        MethodArg::TwoMode => qfi_two_mode(family, eps, cfg),
        MethodArg::TwoModeWilliamson => qfi_two_mode_williamson(family, eps, cfg),
        MethodArg::Multimode => qfi_multimode_williamson(family, eps, cfg),
        MethodArg::Series => qfi_series(family, eps, cfg),
        MethodArg::IsoThermal => qfi_isothermal(family, eps, cfg),
        MethodArg::PurePoint => qfi_pure_point(family, eps, cfg),
        MethodArg::Regularized => qfi_regularized(family, eps, cfg),
        MethodArg::All => unreachable!("`all` expands to the route list"),
    }
}

/// Largest pairwise relative deviation, with the scale floored at 1 so
/// near-zero values compare absolutely.
fn max_pairwise_deviation(values: &[f64]) -> f64 {
    let mut worst = 0.0_f64;
    for (i, &a) in values.iter().enumerate() {
        for &b in &values[i + 1..] {
            let dev = (a - b).abs() / a.abs().max(b.abs()).max(1.0);
            worst = worst.max(dev);
        }
    }
    worst
}

fn qfi_row(eps: f64, est: &QfiEstimate, cross: Option<f64>) -> String {
    let bound = est.error_bound.map(fmt17).unwrap_or_default();
    let lambda_min = est
        .diagnostics
        .lambdas
        .iter()
        .cloned()
        .reduce(f64::min)
        .map(fmt17)
        .unwrap_or_default();
    let mut row = format!(
        "{},{},{},{},{},{},{}",
        fmt17(eps),
        est.method,
        fmt17(est.value),
        bound,
        lambda_min,
        csv_text(&est.diagnostics.route),
        csv_text(&est.diagnostics.warnings.join("; ")),
    );
    if let Some(c) = cross {
        row.push(',');
        row.push_str(&fmt17(c));
    }
    row
}

// ---------------------------------------------------------------------------
// Subcommands
// ---------------------------------------------------------------------------

fn run_qfi(args: &QfiArgs) -> Result<(), CliError> {
    let family = load_family(
        args.state.as_deref(),
        args.probe.as_deref(),
        args.channel.as_deref(),
    )?;
    let grid = eps_grid(&args.eps, args.eps_range);
    let cfg = args.tuning.config();
    let mut out = open_out(args.out.as_deref())?;

    let all = args.method == MethodArg::All;
    let header = if all {
        "eps,method,value,error_bound,lambda_min,route,warnings,cross_check"
    } else {
        "eps,method,value,error_bound,lambda_min,route,warnings"
    };
    wline(out.as_mut(), header)?;

    let mut worst_violation: Option<(f64, f64)> = None;
    for &eps in &grid {
        if all {
            let mut rows: Vec<QfiEstimate> = Vec::new();
            let mut hard_error: Option<Error> = None;
            for &route in &ALL_ROUTES {
                match run_route(route, &family, eps, &cfg) {
                    Ok(est) => rows.push(est),
                    Err(e) if route_inapplicable(&e) => {}
                    Err(e) => {
                        hard_error = Some(e);
                        break;
                    }
                }
            }
            let values: Vec<f64> = rows.iter().map(|r| r.value).collect();
            let cross = max_pairwise_deviation(&values);
            for est in &rows {
                wline(out.as_mut(), &qfi_row(eps, est, Some(cross)))?;
            }
            if let Some(e) = hard_error {
                let _ = out.flush();
                return Err(CliError::from_run_error(e));
            }
            if cross > args.xcheck_tol {
                let update = match worst_violation {
                    Some((_, c)) => cross > c,
                    None => true,
                };
                if update {
                    worst_violation = Some((eps, cross));
                }
            }
        } else {
            match run_route(args.method, &family, eps, &cfg) {
                Ok(est) => wline(out.as_mut(), &qfi_row(eps, &est, None))?,
                Err(e) => {
                    let _ = out.flush();
                    return Err(CliError::from_run_error(e));
                }
            }
        }
    }
    out.flush()
        .map_err(|e| CliError::compute(format!("writing output: {e}")))?;

    if let Some((eps, cross)) = worst_violation {
        return Err(CliError::cross_check(format!(
            "methods disagree: max pairwise relative deviation {cross:.3e} exceeds \
             --xcheck-tol {:.3e} (worst at eps = {eps})",
            args.xcheck_tol
        )));
    }
    Ok(())
}

fn apply_sweep_param(mode: &mut ProbeMode, param: SweepParam, value: f64) {
    match param {
        SweepParam::NTh => mode.n_th = value,
        SweepParam::R => mode.r = value,
        SweepParam::Theta => mode.theta = value,
        SweepParam::DMag => mode.displacement = C64::from_polar(value, mode.displacement.arg()),
        SweepParam::DPhase => mode.displacement = C64::from_polar(mode.displacement.norm(), value),
    }
}

fn run_sweep(args: &SweepArgs) -> Result<(), CliError> {
    let base = load_probe(&args.probe)?;
    let channel = load_channel_or_default(args.channel.as_deref())?;
    if args.mode >= base.modes.len() {
        return Err(CliError::input(format!(
            "--mode {} is out of range for a {}-mode probe",
            args.mode,
            base.modes.len()
        )));
    }
    let (lo, hi, n) = args.range;
    let cfg = args.tuning.config();
    let mut out = open_out(args.out.as_deref())?;
    wline(out.as_mut(), &format!("{},qfi", args.param.name()))?;

    for value in linspace(lo, hi, n) {
        let mut spec = base.clone();
        apply_sweep_param(&mut spec.modes[args.mode], args.param, value);
        let est = probe_family(&spec, &channel)
            .and_then(|family| qfi_auto(&family, args.eps, &cfg))
            .map_err(|e| {
                let _ = out.flush();
                CliError::from_run_error(e)
            })?;
        wline(
            out.as_mut(),
            &format!("{},{}", fmt17(value), fmt17(est.value)),
        )?;
    }
    out.flush()
        .map_err(|e| CliError::compute(format!("writing output: {e}")))
}

fn run_ellipse(args: &EllipseArgs) -> Result<(), CliError> {
    if args.n_points == 0 {
        return Err(CliError::input("--n-points must be positive"));
    }
    // (theta, eps, points) per set.
    let sets: Vec<(f64, f64, Vec<(f64, f64, f64)>)> = match &args.state {
        Some(path) => {
            let state = load_state(path)?;
            let (points, _area) =
                ellipse_export(&state, args.n_points).map_err(CliError::from_run_error)?;
            vec![(0.0, 0.0, points)]
        }
        None => figure_ellipses(args.n_points)
            .map_err(CliError::from_run_error)?
            .into_iter()
            .map(|e| (e.theta, e.eps, e.points))
            .collect(),
    };

    let mut out = open_out(args.out.as_deref())?;
    wline(out.as_mut(), "set,theta,eps,t,x,p")?;
    for (idx, (theta, eps, points)) in sets.iter().enumerate() {
        for &(t, x, p) in points {
            wline(
                out.as_mut(),
                &format!(
                    "{idx},{},{},{},{},{}",
                    fmt17(*theta),
                    fmt17(*eps),
                    fmt17(t),
                    fmt17(x),
                    fmt17(p)
                ),
            )?;
        }
    }
    out.flush()
        .map_err(|e| CliError::compute(format!("writing output: {e}")))
}

fn run_export(args: &ExportArgs) -> Result<(), CliError> {
    let spec = load_probe(&args.probe)?;
    let state = build_probe(&spec).map_err(CliError::from_input_error)?;
    let json = serde_json::to_string_pretty(&state_to_file(&state))
        .map_err(|e| CliError::compute(format!("serializing state: {e}")))?;
    let mut out = open_out(args.out.as_deref())?;
    wline(out.as_mut(), &json)?;
    out.flush()
        .map_err(|e| CliError::compute(format!("writing output: {e}")))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Cmd::Qfi(args) => run_qfi(args),
        Cmd::Sweep(args) => run_sweep(args),
        Cmd::Ellipse(args) => run_ellipse(args),
        Cmd::Export(args) => run_export(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn range_parser_accepts_and_rejects() {
        assert_eq!(parse_range("0:1:5").unwrap(), (0.0, 1.0, 5));
        assert_eq!(parse_range("-2e0:3.5:1").unwrap(), (-2.0, 3.5, 1));
        assert!(parse_range("0:1").is_err());
        assert!(parse_range("0:1:0").is_err());
        assert!(parse_range("a:1:3").is_err());
    }

    #[test]
    fn eps_grid_defaults_and_ranges() {
        assert_eq!(eps_grid(&[], None), vec![0.0]);
        assert_eq!(eps_grid(&[0.3, -0.1], None), vec![0.3, -0.1]);
        let g = eps_grid(&[], Some((0.0, 1.0, 3)));
        assert_eq!(g, vec![0.0, 0.5, 1.0]);
        assert_eq!(eps_grid(&[], Some((2.0, 9.0, 1))), vec![2.0]);
    }

    #[test]
    fn linspace_hits_both_endpoints() {
        let g = linspace(0.0, std::f64::consts::PI, 7);
        assert_eq!(g.len(), 7);
        assert_eq!(g[0], 0.0);
        assert_eq!(g[6], std::f64::consts::PI);
    }

    #[test]
    fn pairwise_deviation_scales_and_floors() {
        assert_eq!(max_pairwise_deviation(&[]), 0.0);
        assert_eq!(max_pairwise_deviation(&[5.0]), 0.0);
        let d = max_pairwise_deviation(&[100.0, 101.0]);
        assert!((d - 1.0 / 101.0).abs() < 1e-15);
        // Near zero the comparison is absolute.
        assert!((max_pairwise_deviation(&[1e-9, -1e-9]) - 2e-9).abs() < 1e-24);
    }

    #[test]
    fn sweep_params_edit_the_right_field() {
        let mut m = ProbeMode {
            n_th: 0.1,
            r: 0.2,
            theta: 0.3,
            displacement: C64::from_polar(2.0, 0.7),
        };
        apply_sweep_param(&mut m, SweepParam::NTh, 0.9);
        assert_eq!(m.n_th, 0.9);
        apply_sweep_param(&mut m, SweepParam::DMag, 3.0);
        assert!((m.displacement.norm() - 3.0).abs() < 1e-15);
        assert!((m.displacement.arg() - 0.7).abs() < 1e-15);
        apply_sweep_param(&mut m, SweepParam::DPhase, -0.4);
        assert!((m.displacement.norm() - 3.0).abs() < 1e-15);
        assert!((m.displacement.arg() + 0.4).abs() < 1e-15);
        apply_sweep_param(&mut m, SweepParam::R, 1.1);
        apply_sweep_param(&mut m, SweepParam::Theta, 0.6);
        assert_eq!((m.r, m.theta), (1.1, 0.6));
    }
}
