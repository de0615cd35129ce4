//! Command-line front end for the spectral filter-modeling library.

use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use spectral_filters::config::ExperimentConfig;
use spectral_filters::filters::{FilterDesign, FilterFamily, PassKind};
use spectral_filters::modeling::{
    self, CalibrationAnchor, ErrorReport, NoiseSpec, RunConfig, ShiftMode,
};
use spectral_filters::render::{self, ComplexRect};
use spectral_filters::signals::SpectralVec;
use spectral_filters::{blocks::BlockMatrix, oracle, SpectralError};

#[derive(Parser)]
#[command(
    name = "specfilt",
    about = "Continuous-time filter modeling in the spectral form",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FamilyArg {
    #[value(alias = "bw")]
    Butterworth,
    #[value(alias = "lr")]
    LinkwitzRiley,
    #[value(alias = "c1")]
    Chebyshev1,
    #[value(alias = "c2")]
    Chebyshev2,
}

impl From<FamilyArg> for FilterFamily {
    fn from(f: FamilyArg) -> Self {
        match f {
            FamilyArg::Butterworth => FilterFamily::Butterworth,
            FamilyArg::LinkwitzRiley => FilterFamily::LinkwitzRiley,
            FamilyArg::Chebyshev1 => FilterFamily::ChebyshevI,
            FamilyArg::Chebyshev2 => FilterFamily::ChebyshevII,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ShiftModeArg {
    Natural,
    Zero,
}

impl From<ShiftModeArg> for ShiftMode {
    fn from(m: ShiftModeArg) -> Self {
        match m {
            ShiftModeArg::Natural => ShiftMode::Natural,
            ShiftModeArg::Zero => ShiftMode::ZeroExt,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MatrixKindArg {
    Derivative,
    Integral,
    Indicator,
    ShiftNatural,
    ShiftZero,
    Identity,
}

/// Flags shared by the config-driven subcommands.
#[derive(Args)]
struct ConfigArgs {
    /// Experiment configuration file (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Override the config's RNG seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the config's shift extension mode.
    #[arg(long, value_enum)]
    shift_mode: Option<ShiftModeArg>,
    /// Worker threads (reserved; computation is currently sequential).
    #[arg(long, default_value_t = 1)]
    threads: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Dump an elementary block matrix as CSV.
    Matrices {
        #[arg(value_enum)]
        kind: MatrixKindArg,
        #[arg(long, default_value_t = 1.0)]
        horizon: f64,
        #[arg(long, default_value_t = 16)]
        len: usize,
        /// Indicator cut time or shift amount, where applicable.
        #[arg(long)]
        param: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print a filter design: poles, gain, auxiliary constants, delays.
    Design {
        #[arg(long, value_enum)]
        family: FamilyArg,
        #[arg(long)]
        order: usize,
        #[arg(long)]
        ripple: Option<f64>,
        /// Cutoff frequency in rad/s.
        #[arg(long)]
        cutoff: f64,
        /// Frequency (rad/s) at which the delays are evaluated.
        #[arg(long, default_value_t = 10.0 * std::f64::consts::PI)]
        omega: f64,
        /// Emit CSV instead of aligned text.
        #[arg(long)]
        csv: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a single experiment cell and print its error report.
    Simulate {
        #[command(flatten)]
        common: ConfigArgs,
        /// Filter order (defaults to the first in the config).
        #[arg(long)]
        order: Option<usize>,
        /// Truncation order (defaults to the first in the config).
        #[arg(long)]
        len: Option<usize>,
    },
    /// Sweep the config's (order, truncation) grid into a CSV table.
    Experiment {
        #[command(flatten)]
        common: ConfigArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Cross-validate the spectral pipeline against the time-domain oracle.
    Validate {
        #[command(flatten)]
        common: ConfigArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Recover the cutoff frequency from published a-priori error anchors.
    Calibrate {
        #[arg(long, value_enum, default_value = "butterworth")]
        family: FamilyArg,
        #[arg(long, default_value_t = 3)]
        order: usize,
        #[arg(long)]
        ripple: Option<f64>,
        /// Anchors as `L:value`, e.g. `--anchor 1024:0.242319`; repeatable.
        #[arg(long = "anchor", required = true)]
        anchors: Vec<String>,
        /// Bracket for the cutoff search, in rad/s.
        #[arg(long, default_value_t = 10.0 * std::f64::consts::PI)]
        lo: f64,
        #[arg(long, default_value_t = 78.0 * std::f64::consts::PI)]
        hi: f64,
    },
    /// Render the characteristic polynomial by domain coloring.
    RenderPoly {
        #[arg(long, value_enum)]
        family: FamilyArg,
        #[arg(long)]
        order: usize,
        #[arg(long)]
        ripple: Option<f64>,
        #[arg(long, default_value_t = -2.0)]
        min: f64,
        #[arg(long, default_value_t = 2.0)]
        max: f64,
        #[arg(long, default_value_t = 800)]
        px: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Sample the signals of an experiment cell as CSV for plotting.
    Emit {
        #[command(flatten)]
        common: ConfigArgs,
        /// Number of grid points on the segment.
        #[arg(long, default_value_t = 2000)]
        grid: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

/// 2 for configuration problems, 3 for numerical failures, 4 for a failed
/// calibration bracket.
fn exit_code(e: &SpectralError) -> u8 {
    match e {
        SpectralError::InvalidParameter(_) | SpectralError::ShapeMismatch(_) | SpectralError::Io(_) => 2,
        SpectralError::CalibrationBracket(_) => 4,
        _ => 3,
    }
}

fn dispatch(command: Command) -> Result<(), SpectralError> {
    match command {
        Command::Matrices { kind, horizon, len, param, out } => cmd_matrices(kind, horizon, len, param, out),
        Command::Design { family, order, ripple, cutoff, omega, csv, out } => {
            cmd_design(family, order, ripple, cutoff, omega, csv, out)
        }
        Command::Simulate { common, order, len } => cmd_simulate(common, order, len),
        Command::Experiment { common, out } => cmd_experiment(common, out),
        Command::Validate { common, out } => cmd_validate(common, out),
        Command::Calibrate { family, order, ripple, anchors, lo, hi } => {
            cmd_calibrate(family, order, ripple, anchors, lo, hi)
        }
        Command::RenderPoly { family, order, ripple, min, max, px, out } => {
            cmd_render_poly(family, order, ripple, min, max, px, out)
        }
        Command::Emit { common, grid, out } => cmd_emit(common, grid, out),
    }
}

fn write_output(out: Option<PathBuf>, text: &str) -> Result<(), SpectralError> {
    match out {
        Some(path) => fs::write(path, text).map_err(SpectralError::Io),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn load_config(common: &ConfigArgs) -> Result<ExperimentConfig, SpectralError> {
    if common.threads == 0 {
        return Err(SpectralError::InvalidParameter("config field `threads`: must be at least 1".into()));
    }
    let text = fs::read_to_string(&common.config).map_err(SpectralError::Io)?;
    let mut cfg = ExperimentConfig::from_json(&text)?;
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if let Some(mode) = common.shift_mode {
        cfg.shift_mode = match mode {
            ShiftModeArg::Natural => spectral_filters::config::ShiftModeName::Natural,
            ShiftModeArg::Zero => spectral_filters::config::ShiftModeName::Zero,
        };
    }
    Ok(cfg)
}

fn cmd_matrices(
    kind: MatrixKindArg,
    horizon: f64,
    len: usize,
    param: Option<f64>,
    out: Option<PathBuf>,
) -> Result<(), SpectralError> {
    let need_param = |name: &str| {
        param.ok_or_else(|| {
            SpectralError::InvalidParameter(format!("matrix kind `{name}` requires --param"))
        })
    };
    let m = match kind {
        MatrixKindArg::Derivative => BlockMatrix::derivative(horizon, len),
        MatrixKindArg::Integral => BlockMatrix::integral(horizon, len),
        MatrixKindArg::Indicator => BlockMatrix::indicator_gain(horizon, len, need_param("indicator")?)?,
        MatrixKindArg::ShiftNatural => BlockMatrix::shift_natural(horizon, len, need_param("shift-natural")?)?,
        MatrixKindArg::ShiftZero => BlockMatrix::shift_zero_ext(horizon, len, need_param("shift-zero")?)?,
        MatrixKindArg::Identity => BlockMatrix::identity(horizon, len),
    };
    let mut text = String::new();
    for i in 0..len {
        let row: Vec<String> = (0..len).map(|j| format!("{:.17e}", m.data[(i, j)])).collect();
        text.push_str(&row.join(","));
        text.push('\n');
    }
    write_output(out, &text)
}

fn cmd_design(
    family: FamilyArg,
    order: usize,
    ripple: Option<f64>,
    cutoff: f64,
    omega: f64,
    csv: bool,
    out: Option<PathBuf>,
) -> Result<(), SpectralError> {
    let design = FilterDesign::new(family.into(), order, ripple, cutoff, PassKind::LowPass)?;
    let tau_phi = design.phase_delay(omega)?;
    let tau_g = design.group_delay(omega)?;
    let mut text = String::new();
    if csv {
        text.push_str("quantity,value\n");
        for (k, p) in design.poles().iter().enumerate() {
            text.push_str(&format!("pole_{k},{:.9e}{:+.9e}i\n", p.re, p.im));
        }
        text.push_str(&format!("gain,{:.9e}\n", design.gain()));
        if let Some((alpha, beta, lambda, gamma)) = design.chebyshev_params() {
            text.push_str(&format!("alpha,{alpha:.9e}\nbeta,{beta:.9e}\nlambda,{lambda:.9e}\ngamma,{gamma:.9e}\n"));
        }
        text.push_str(&format!("phase_delay,{tau_phi:.9e}\ngroup_delay,{tau_g:.9e}\n"));
    } else {
        text.push_str(&format!("order {order}, cutoff {cutoff:.6} rad/s\n"));
        text.push_str("prototype poles:\n");
        for p in design.poles() {
            text.push_str(&format!("  {:>12.6} {:>+12.6}i\n", p.re, p.im));
        }
        text.push_str(&format!("gain          {:>14.6}\n", design.gain()));
        if let Some((alpha, beta, lambda, gamma)) = design.chebyshev_params() {
            text.push_str(&format!("alpha         {alpha:>14.6}\n"));
            text.push_str(&format!("beta          {beta:>14.6}\n"));
            text.push_str(&format!("lambda        {lambda:>14.6}\n"));
            text.push_str(&format!("gamma         {gamma:>14.6}\n"));
        }
        text.push_str(&format!("phase delay   {tau_phi:>14.9}  (at {omega:.6} rad/s)\n"));
        text.push_str(&format!("group delay   {tau_g:>14.9}  (at {omega:.6} rad/s)\n"));
    }
    write_output(out, &text)
}

fn run_cell(cfg: &ExperimentConfig, order: usize, len: usize) -> Result<ErrorReport, SpectralError> {
    let run = cfg.run_config(order, len)?;
    if cfg.is_random() {
        modeling::run_monte_carlo(&run)
    } else {
        modeling::run_deterministic(&run)
    }
}

fn cmd_simulate(common: ConfigArgs, order: Option<usize>, len: Option<usize>) -> Result<(), SpectralError> {
    let cfg = load_config(&common)?;
    let order = order.unwrap_or(cfg.orders[0]);
    let len = len.unwrap_or(cfg.truncations[0]);
    let report = run_cell(&cfg, order, len)?;
    println!("order {order}, truncation {len}");
    println!("phase delay       {:.9}", report.phase_delay);
    match report.monte_carlo {
        Some((err, upper)) => {
            println!("filtering error   {:.6} ({:.6})", err.mean, err.std_dev);
            println!("a-priori error    {:.6}", report.apriori_error);
            println!("a-priori upper    {:.6} ({:.6})", upper.mean, upper.std_dev);
        }
        None => {
            println!("filtering error   {:.6}", report.filtering_error);
            println!("a-priori error    {:.6}", report.apriori_error);
            println!("a-priori upper    {:.6}", report.apriori_upper);
        }
    }
    Ok(())
}

/// Renders the experiment grid in the reference table layout: one row per
/// order, one column per truncation order, `mean (std)` cells for random
/// noise.
fn experiment_table(cfg: &ExperimentConfig) -> Result<String, SpectralError> {
    let mut text = String::from("n");
    for len in &cfg.truncations {
        text.push_str(&format!(",L={len}"));
    }
    text.push('\n');
    for &order in &cfg.orders {
        text.push_str(&order.to_string());
        for &len in &cfg.truncations {
            let report = run_cell(cfg, order, len)?;
            match report.monte_carlo {
                Some((err, _)) => {
                    text.push_str(&format!(",{:.6} ({:.6})", err.mean, err.std_dev));
                }
                None => text.push_str(&format!(",{:.6}", report.filtering_error)),
            }
        }
        text.push('\n');
    }
    Ok(text)
}

fn cmd_experiment(common: ConfigArgs, out: Option<PathBuf>) -> Result<(), SpectralError> {
    let cfg = load_config(&common)?;
    let table = experiment_table(&cfg)?;
    write_output(out, &table)
}

fn cmd_validate(common: ConfigArgs, out: Option<PathBuf>) -> Result<(), SpectralError> {
    let cfg = load_config(&common)?;
    let mut text = String::from("n,L,l2_discrepancy\n");
    for &order in &cfg.orders {
        for &len in &cfg.truncations {
            let run = cfg.run_config(order, len)?;
            let (input_vec, input_fn) = validation_input(&run)?;
            let prep = run.design.ntf_factored().prepare(run.horizon, len)?;
            let x = modeling::apply_filter(&prep, &input_vec)?;
            let l2 = oracle::cross_validate(&run.design, &input_fn, &x)?;
            text.push_str(&format!("{order},{len},{l2:.9e}\n"));
        }
    }
    write_output(out, &text)
}

/// The deterministic input used for cross-validation: signal plus noise
/// for deterministic configs, the bare signal for random ones (white
/// noise is not pointwise-evaluable).
fn validation_input(
    run: &RunConfig,
) -> Result<(SpectralVec, Box<dyn Fn(f64) -> f64>), SpectralError> {
    let u = run.signal.spectral(run.horizon, run.len);
    match &run.noise {
        NoiseSpec::Deterministic { sigma, tones } => {
            let v = modeling::deterministic_noise(run)?;
            let g = spectral_filters::signals::combine(&[(1.0, &u), (1.0, &v)])?;
            let signal = run.signal;
            let sigma = *sigma;
            let tones = tones.clone();
            let f = move |t: f64| {
                signal.sample(t) + sigma * tones.iter().map(|tone| tone.sample(t)).sum::<f64>()
            };
            Ok((g, Box::new(f)))
        }
        NoiseSpec::Random { .. } => {
            let signal = run.signal;
            Ok((u, Box::new(move |t| signal.sample(t))))
        }
    }
}

fn cmd_calibrate(
    family: FamilyArg,
    order: usize,
    ripple: Option<f64>,
    anchors: Vec<String>,
    lo: f64,
    hi: f64,
) -> Result<(), SpectralError> {
    let parsed: Result<Vec<CalibrationAnchor>, SpectralError> = anchors
        .iter()
        .map(|a| {
            let (l, v) = a.split_once(':').ok_or_else(|| {
                SpectralError::InvalidParameter(format!("anchor `{a}` is not of the form L:value"))
            })?;
            Ok(CalibrationAnchor {
                len: l.trim().parse().map_err(|_| {
                    SpectralError::InvalidParameter(format!("anchor `{a}`: bad truncation order"))
                })?,
                apriori_error: v.trim().parse().map_err(|_| {
                    SpectralError::InvalidParameter(format!("anchor `{a}`: bad error value"))
                })?,
            })
        })
        .collect();
    let family: FilterFamily = family.into();
    let template =
        move |cutoff: f64| FilterDesign::new(family, order, ripple, cutoff, PassKind::LowPass);
    let omega = 10.0 * std::f64::consts::PI;
    let report = modeling::calibrate_cutoff(
        &template,
        1.0,
        omega,
        &modeling::standard_deterministic_noise(),
        &parsed?,
        lo,
        hi,
    )?;
    for (len, tau, cutoff) in &report.per_anchor {
        let residual = template(*cutoff)?.phase_delay(omega)? - tau;
        println!(
            "L = {len:5}: tau_phi = {tau:.9}, cutoff = {cutoff:.9} rad/s ({:.6} pi), residual = {residual:.3e}",
            cutoff / std::f64::consts::PI
        );
    }
    println!(
        "cutoff = {:.9} rad/s ({:.6} pi), spread = {:.3e}",
        report.cutoff,
        report.cutoff / std::f64::consts::PI,
        report.spread
    );
    Ok(())
}

fn cmd_render_poly(
    family: FamilyArg,
    order: usize,
    ripple: Option<f64>,
    min: f64,
    max: f64,
    px: usize,
    out: PathBuf,
) -> Result<(), SpectralError> {
    let design = FilterDesign::new(family.into(), order, ripple, 1.0, PassKind::LowPass)?;
    let rect = ComplexRect { re_min: min, re_max: max, im_min: min, im_max: max };
    let image = render::render_design(&design, rect, px, px)?;
    let mut file = fs::File::create(out).map_err(SpectralError::Io)?;
    render::write_ppm(&image, &mut file).map_err(SpectralError::Io)?;
    file.flush().map_err(SpectralError::Io)
}

fn cmd_emit(common: ConfigArgs, grid: usize, out: Option<PathBuf>) -> Result<(), SpectralError> {
    if grid < 2 {
        return Err(SpectralError::InvalidParameter("config field `grid`: needs at least 2 points".into()));
    }
    let cfg = load_config(&common)?;
    let run = cfg.run_config(cfg.orders[0], cfg.truncations[0])?;
    let u = run.signal.spectral(run.horizon, run.len);
    let v = match &run.noise {
        NoiseSpec::Deterministic { .. } => modeling::deterministic_noise(&run)?,
        NoiseSpec::Random { sigma, .. } => spectral_filters::signals::spectral_white_noise(
            *sigma, run.horizon, run.len, run.seed, 0,
        ),
    };
    let g = spectral_filters::signals::combine(&[(1.0, &u), (1.0, &v)])?;
    let prep = run.design.ntf_factored().prepare(run.horizon, run.len)?;
    let x = modeling::apply_filter(&prep, &g)?;
    let tau = run.design.phase_delay(run.signal.omega)?;
    let shift = modeling::compensation_shift(run.shift_mode, run.horizon, run.len, tau)?;
    let x_star = modeling::compensate_delay(&shift, &x)?;
    let points: Vec<f64> =
        (0..grid).map(|k| run.horizon * k as f64 / (grid - 1) as f64).collect();
    let pairs = vec![
        ("u".to_string(), u),
        ("g".to_string(), g),
        ("x".to_string(), x),
        ("x_star".to_string(), x_star),
    ];
    let mut buf = Vec::new();
    render::emit_signal_csv(&pairs, &points, &mut buf)?;
    write_output(out, &String::from_utf8(buf).expect("CSV is UTF-8"))
}
