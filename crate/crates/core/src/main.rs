use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use rayon::prelude::*;
use serde::Serialize;

use recoil_fidelity::config::{OutputFormat, RunConfig};
use recoil_fidelity::error_budget::{closed_form_budget, generate_table1, kappa_from_fidelity, measure_kappa, KappaConvention};
use recoil_fidelity::herald::{evaluate, mc_protocol_with, phase_contrast_loss, HeraldChannel, MotionTreatment, ProtocolSpec};
use recoil_fidelity::quadrature::QuadratureOptions;
use recoil_fidelity::report::{self, ChannelReport};
use recoil_fidelity::rewind::{fidelity_with_rewind, verify_disentangle, verify_with_plan_times};
use recoil_fidelity::temporal::window_variance_factor;
use recoil_fidelity::Error;

#[derive(Parser, Debug)]
#[command(name = "recoil-fidelity", version, about = "Recoil-limited fidelity of heralded two-photon entanglement")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Difference window in lifetimes (table1).
    #[arg(long, global = true)]
    w: Option<f64>,
    #[arg(long, global = true, value_enum)]
    kappa: Option<Kappa>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    samples: Option<usize>,
    /// Output file; stdout if absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Debug, Clone, Copy, PartialEq, Eq)]
enum Command {
    /// Per-species recoil error table.
    Table1,
    /// Quadrature fidelity for every herald channel.
    Fidelity,
    /// Fidelity over the configured parameter grid.
    Sweep,
    /// Quadrature vs Monte Carlo vs closed forms, with the measured kappa.
    OracleCompare,
    /// Checks that the rewind displacements disentangle the motion.
    RewindCheck,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum Format {
    Csv,
    Json,
    Markdown,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum Kappa {
    Table,
    #[value(name = "printed-eq37")]
    PrintedEq37,
    Oracle,
}

struct Exit {
    code: u8,
    message: String,
}

impl Exit {
    fn new(code: u8, message: impl Into<String>) -> Self {
        Exit { code, message: message.into() }
    }
}

impl From<Error> for Exit {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Io(_) => 3,
            Error::NonConvergence { .. } | Error::NoRoot { .. } => 4,
            _ => 2,
        };
        Exit::new(code, e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => e.exit(),
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}

fn run(cli: &Cli) -> Result<(), Exit> {
    match cli.command {
        Command::Table1 => table1(cli),
        Command::Fidelity => fidelity(cli),
        Command::Sweep => sweep(cli),
        Command::OracleCompare => oracle_compare(cli),
        Command::RewindCheck => rewind_check(cli),
    }
}

fn load_config(cli: &Cli) -> Result<RunConfig, Exit> {
    let path = cli.config.as_ref().ok_or_else(|| Exit::new(2, "--config is required for this command"))?;
    Ok(RunConfig::from_path(path)?)
}

fn output_format(cli: &Cli, cfg: Option<&RunConfig>, default: Format) -> Format {
    cli.format
        .or_else(|| {
            cfg.and_then(|c| c.output.as_ref()).and_then(|o| o.format).map(|f| match f {
                OutputFormat::Csv => Format::Csv,
                OutputFormat::Json => Format::Json,
                OutputFormat::Markdown => Format::Markdown,
            })
        })
        .unwrap_or(default)
}

fn emit(cli: &Cli, cfg: Option<&RunConfig>, text: &str) -> Result<(), Exit> {
    let path = cli
        .out
        .clone()
        .or_else(|| cfg.and_then(|c| c.output.as_ref()).and_then(|o| o.path.as_ref()).map(PathBuf::from));
    match path {
        Some(p) => std::fs::write(&p, text).map_err(|e| Exit::new(3, format!("cannot write {}: {e}", p.display()))),
        None => {
            use std::io::Write;
            std::io::stdout().write_all(text.as_bytes()).map_err(|e| Exit::new(3, e.to_string()))
        }
    }
}

fn json_only(cli: &Cli, cfg: &RunConfig) -> Result<(), Exit> {
    match output_format(cli, Some(cfg), Format::Json) {
        Format::Json => Ok(()),
        other => Err(Exit::new(2, format!("{other:?} output is not available for this command; use json"))),
    }
}

fn convention(cli: &Cli, w: f64) -> Result<KappaConvention, Exit> {
    let tag = match cli.kappa.unwrap_or(Kappa::Table) {
        Kappa::Table => "table",
        Kappa::PrintedEq37 => "printed-eq37",
        Kappa::Oracle => "oracle",
    };
    // κ itself is measured at the default window so that it does not
    // depend on a degenerate --w 0
    let measure_at = if w > 0.0 { w } else { 2.0 };
    Ok(KappaConvention::from_tag(tag, measure_at)?)
}

fn table1(cli: &Cli) -> Result<(), Exit> {
    let w = cli.w.unwrap_or(2.0);
    if !(w >= 0.0) {
        return Err(Exit::new(2, "--w must be >= 0"));
    }
    let conv = convention(cli, w)?;
    let rows = generate_table1(w, conv)?;
    let text = match output_format(cli, None, Format::Csv) {
        Format::Csv => report::table1_csv(&rows, conv),
        Format::Json => report::table1_json(&rows, w, conv)?,
        Format::Markdown => report::table1_markdown(&rows, w, conv),
    };
    emit(cli, None, &text)
}

#[derive(Serialize)]
struct FidelityReport {
    selected_channel: HeraldChannel,
    motion: MotionTreatment,
    timebin_ns: f64,
    difference_window_ns: f64,
    detector_window_ns: Option<f64>,
    w_relative: f64,
    w_factor: f64,
    r#yield: f64,
    quadrature_error_bound: f64,
    converged: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    warning: Option<String>,
    channels: Vec<ChannelReport>,
}

fn finite_or_none(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

fn fidelity(cli: &Cli) -> Result<(), Exit> {
    let cfg = load_config(cli)?;
    json_only(cli, &cfg)?;
    let spec = cfg.protocol_spec()?;
    let eval = evaluate(&spec, cfg.motion(), &QuadratureOptions::default())?;
    let w_rel = spec.relative_window().0;
    let converged = eval.converged();
    let rep = FidelityReport {
        selected_channel: cfg.channel()?,
        motion: cfg.motion(),
        timebin_ns: spec.timebin * 1e9,
        difference_window_ns: spec.windows.difference_window * 1e9,
        detector_window_ns: finite_or_none(spec.windows.detector_window * 1e9),
        w_relative: w_rel,
        w_factor: window_variance_factor(w_rel),
        r#yield: eval.yield_,
        quadrature_error_bound: eval.integral.error,
        converged,
        warning: (!converged).then(|| "quadrature did not reach the requested tolerance".to_string()),
        channels: eval.channels.iter().map(|(c, r)| ChannelReport::new(*c, r)).collect(),
    };
    emit(cli, Some(&cfg), &report::to_json(&rep)?)?;
    if converged {
        Ok(())
    } else {
        Err(Exit::new(4, format!("quadrature did not converge (error bound {:e})", eval.integral.error)))
    }
}

fn sweep(cli: &Cli) -> Result<(), Exit> {
    let cfg = load_config(cli)?;
    let grid = cfg.sweep.as_ref().ok_or_else(|| Exit::new(2, "configuration has no sweep section"))?;
    if grid.values.iter().any(|v| !v.is_finite()) {
        return Err(Exit::new(2, "sweep values must be finite"));
    }
    let specs = grid
        .values
        .iter()
        .map(|&v| {
            let c = cfg.with_parameter(grid.parameter, v);
            Ok((c.protocol_spec()?, c.motion()))
        })
        .collect::<Result<Vec<(ProtocolSpec, MotionTreatment)>, Error>>()?;
    let points = specs
        .par_iter()
        .map(|(spec, motion)| {
            let eval = evaluate(spec, *motion, &QuadratureOptions::default())?;
            eval.integral.into_result()?;
            let chans = eval.channels.iter().map(|(c, r)| ChannelReport::new(*c, r)).collect();
            Ok((eval.yield_, window_variance_factor(spec.relative_window().0), chans))
        })
        .collect::<Result<Vec<_>, Error>>()?;
    let text = match output_format(cli, Some(&cfg), Format::Csv) {
        Format::Csv => report::sweep_csv(grid.parameter.column(), &grid.values, &points),
        Format::Json => {
            #[derive(Serialize)]
            struct Point<'a> {
                value: f64,
                r#yield: f64,
                w_factor: f64,
                channels: &'a [ChannelReport],
            }
            let pts: Vec<Point> = grid
                .values
                .iter()
                .zip(&points)
                .map(|(v, (y, wf, ch))| Point { value: *v, r#yield: *y, w_factor: *wf, channels: ch })
                .collect();
            report::to_json(&serde_json::json!({ "parameter": grid.parameter.column(), "points": pts }))?
        }
        Format::Markdown => return Err(Exit::new(2, "sweep supports csv or json output")),
    };
    emit(cli, Some(&cfg), &text)
}

#[derive(Serialize)]
struct ClosedForm {
    timebin: f64,
    random_kappa_one: f64,
    infidelity_table: f64,
    infidelity_printed_eq37: f64,
    infidelity_oracle: f64,
    bin_overlap: f64,
}

#[derive(Serialize)]
struct OracleReport {
    channel: HeraldChannel,
    motion: MotionTreatment,
    samples: usize,
    seed: u64,
    quadrature_fidelity: f64,
    quadrature_error_bound: f64,
    quadrature_converged: bool,
    mc_fidelity: f64,
    mc_fidelity_sigma: f64,
    mc_minus_quadrature_in_sigma: Option<f64>,
    mc_herald_probability: f64,
    quadrature_herald_probability: f64,
    mc_discard_probability: f64,
    closed_form: ClosedForm,
    measured_kappa_quadrature: Option<f64>,
    measured_kappa_mc: Option<f64>,
    measured_kappa_mc_sigma: Option<f64>,
    reference_kappa: f64,
    phase_contrast_loss: f64,
}

fn oracle_compare(cli: &Cli) -> Result<(), Exit> {
    let cfg = load_config(cli)?;
    json_only(cli, &cfg)?;
    if cfg.mc.is_none() && cli.samples.is_none() {
        return Err(Exit::new(2, "oracle-compare needs an mc section or --samples"));
    }
    let samples = cli.samples.or(cfg.mc.map(|m| m.samples)).unwrap_or(1_000_000);
    let seed = cli.seed.or(cfg.mc.map(|m| m.seed)).unwrap_or(0);
    let spec = cfg.protocol_spec()?;
    let channel = cfg.channel()?;
    let motion = cfg.motion();

    let eval = evaluate(&spec, motion, &QuadratureOptions::default())?;
    let quad = eval.get(channel);
    let mc = mc_protocol_with(&spec, samples, seed, motion)?;
    let mcc = mc.get(channel);

    let budget = closed_form_budget(&spec, KappaConvention::Oracle { kappa: 1.0 })?;
    let w_rel = spec.relative_window().0;
    let reference = measure_kappa(if w_rel > 0.0 { w_rel } else { 2.0 })?;
    let with_kappa = |k: f64| budget.timebin + k * budget.random;
    let kappa_of = |f: f64| -> Result<Option<f64>, Error> {
        let (k, unit) = kappa_from_fidelity(&spec, f)?;
        Ok((unit > 0.0 && motion == MotionTreatment::Free).then_some(k))
    };
    let measured_mc = kappa_of(mcc.fidelity)?;

    let diff = mcc.fidelity - quad.fidelity;
    let sigma = mcc.fidelity_error;
    let in_sigma = (sigma > 0.0).then(|| diff / sigma);
    let rep = OracleReport {
        channel,
        motion,
        samples,
        seed,
        quadrature_fidelity: quad.fidelity,
        quadrature_error_bound: eval.integral.error,
        quadrature_converged: eval.converged(),
        mc_fidelity: mcc.fidelity,
        mc_fidelity_sigma: sigma,
        mc_minus_quadrature_in_sigma: in_sigma,
        mc_herald_probability: mcc.herald_probability,
        quadrature_herald_probability: quad.herald_probability,
        mc_discard_probability: mc.discard_probability,
        closed_form: ClosedForm {
            timebin: budget.timebin,
            random_kappa_one: budget.random,
            infidelity_table: with_kappa(KappaConvention::Table.kappa()),
            infidelity_printed_eq37: with_kappa(KappaConvention::PrintedEq37.kappa()),
            infidelity_oracle: with_kappa(reference.kappa),
            bin_overlap: budget.bin_overlap,
        },
        measured_kappa_quadrature: kappa_of(quad.fidelity)?,
        measured_kappa_mc: measured_mc,
        measured_kappa_mc_sigma: measured_mc.map(|_| sigma / budget.random),
        reference_kappa: reference.kappa,
        phase_contrast_loss: phase_contrast_loss(&spec)?,
    };
    emit(cli, Some(&cfg), &report::to_json(&rep)?)?;
    if !eval.converged() {
        return Err(Exit::new(4, "quadrature did not converge"));
    }
    let agree = match in_sigma {
        Some(s) => s.abs() <= 5.0,
        None => diff.abs() <= 1e-12,
    };
    if agree {
        Ok(())
    } else {
        Err(Exit::new(5, format!("Monte Carlo and quadrature disagree: {diff:e} ({sigma:e} sigma unit)")))
    }
}

#[derive(Serialize)]
struct RewindEvent {
    t_mu_ns: f64,
    t_nu_ns: f64,
    max_deficit: f64,
    phase_spread_rad: f64,
    max_amplitude_error: f64,
}

#[derive(Serialize)]
struct RewindReport {
    trials_per_event: usize,
    seed: u64,
    tolerance: f64,
    events: Vec<RewindEvent>,
    max_deficit: f64,
    swapped_times_deficit: Option<f64>,
    rewound_fidelity: Vec<ChannelReport>,
    passed: bool,
}

fn rewind_check(cli: &Cli) -> Result<(), Exit> {
    const EVENTS: usize = 16;
    const TOLERANCE: f64 = 1e-12;
    let cfg = load_config(cli)?;
    json_only(cli, &cfg)?;
    let spec = cfg.protocol_spec()?;
    let trials = cli.samples.unwrap_or(1000);
    let seed = cli.seed.or(cfg.mc.map(|m| m.seed)).unwrap_or(0);
    if trials == 0 {
        return Err(Exit::new(2, "--samples must be >= 1"));
    }
    let tau = spec.emitter_a.lifetime();
    let start = spec.windows.known_offset;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let times: Vec<(f64, f64)> = (0..EVENTS)
        .map(|_| {
            let a: f64 = rng.sample(Exp1);
            let b: f64 = rng.sample(Exp1);
            (start + a * tau, start + b * tau)
        })
        .collect();
    let events = times
        .iter()
        .enumerate()
        .map(|(i, &(a, b))| {
            let r = verify_disentangle(&spec, a, b, trials, seed.wrapping_add(i as u64))?;
            Ok(RewindEvent {
                t_mu_ns: a * 1e9,
                t_nu_ns: b * 1e9,
                max_deficit: r.max_deficit,
                phase_spread_rad: r.phase_spread,
                max_amplitude_error: r.max_amplitude_error,
            })
        })
        .collect::<Result<Vec<_>, Error>>()?;
    let max_deficit = events.iter().map(|e| e.max_deficit).fold(0.0, f64::max);
    let (a, b) = times[0];
    let swapped = verify_with_plan_times(&spec, (a, b), (b, a), trials.min(100), seed)?.max_deficit;
    let rewound = HeraldChannel::ALL
        .iter()
        .map(|&c| Ok(ChannelReport::new(c, &fidelity_with_rewind(&spec, c)?)))
        .collect::<Result<Vec<_>, Error>>()?;
    let passed = max_deficit <= TOLERANCE;
    let rep = RewindReport {
        trials_per_event: trials,
        seed,
        tolerance: TOLERANCE,
        events,
        max_deficit,
        swapped_times_deficit: Some(swapped),
        rewound_fidelity: rewound,
        passed,
    };
    emit(cli, Some(&cfg), &report::to_json(&rep)?)?;
    if passed {
        Ok(())
    } else {
        Err(Exit::new(6, format!("rewind left a deficit of {max_deficit:e}")))
    }
}
