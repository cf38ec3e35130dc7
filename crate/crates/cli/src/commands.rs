use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use flyer_sdnn::eval::{compare, plot_timeseries, run_suite, scatter_csv, trace_to_csv, Controller, EvalReport, Metric};
use flyer_sdnn::flyer::Task;
use flyer_sdnn::io::{
    load_ann, load_report, load_sdnn, save_ann, save_envelope, save_report, save_sdnn, write_atomic, AnnWeights,
    RunConfig, SdnnWeights, ENV_OUT_ROOT,
};
use flyer_sdnn::pipeline::{calibration_set, train_actor, zero_threshold_deviation};
use flyer_sdnn::sdnn::{convert, ExecMode, SdnnMode, Thresholds};

use crate::exit::{CliError, WithPath, EXIT_INCOMPATIBLE};
use crate::verify;

/// Tolerance of the zero-threshold equivalence check run after conversion.
pub const EQUIVALENCE_TOL: f64 = 1e-5;

#[derive(Debug, Parser)]
#[command(name = "flyer-sdnn", version, about = "Free-flyer PPO training, sigma-delta conversion and closed-loop evaluation")]
pub struct Cli {
    /// Root for default output directories.
    #[arg(long, global = true, env = ENV_OUT_ROOT, default_value = "runs")]
    pub out_root: PathBuf,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train the actor with PPO.
    Train(TrainArgs),
    /// Convert a ReLU actor into a sigma-delta network.
    Convert(ConvertArgs),
    /// Run closed-loop episodes and write traces, report and plots.
    Eval(EvalArgs),
    /// Compare evaluation reports against the first one.
    Compare(CompareArgs),
    /// Run the invariant suite.
    Verify(VerifyArgs),
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Overrides the config's training seed.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub quiet: bool,
}

#[derive(Debug, Args)]
pub struct ConvertArgs {
    /// ANN weight file.
    #[arg(long)]
    pub weights: PathBuf,
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Sets input and hidden thresholds (real units).
    #[arg(long)]
    pub threshold: Option<f64>,
    #[arg(long)]
    pub input_threshold: Option<f64>,
    #[arg(long)]
    pub hidden_threshold: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ControllerKind {
    Ann,
    Sdnn,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Float,
    Quantized,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ExecArg {
    Flush,
    Pipelined,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TaskArg {
    Undock,
    Random,
    All,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long, value_enum, default_value = "ann")]
    pub controller: ControllerKind,
    /// ANN weight file for `ann`, SDNN weight file for `sdnn`.
    #[arg(long)]
    pub weights: PathBuf,
    #[arg(long, value_enum, default_value = "quantized")]
    pub mode: ModeArg,
    #[arg(long, value_enum, default_value = "flush")]
    pub exec: ExecArg,
    /// Overrides both SDNN thresholds (real units).
    #[arg(long)]
    pub threshold: Option<f64>,
    #[arg(long, value_enum)]
    pub task: Option<TaskArg>,
    /// Evaluate seeds 0..N.
    #[arg(long, conflicts_with = "seed_list")]
    pub seeds: Option<u64>,
    /// Comma-separated explicit seeds.
    #[arg(long)]
    pub seed_list: Option<String>,
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Controller name used in trace file names and reports.
    #[arg(long)]
    pub label: Option<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    /// Report files; the first is the baseline.
    pub reports: Vec<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    let root = cli.out_root;
    let out = |given: Option<PathBuf>, name: &str| given.unwrap_or_else(|| root.join(name));
    match cli.command {
        Command::Train(a) => {
            let dir = out(a.out.clone(), "train");
            cmd_train(&a, &dir).map(|_| ())
        }
        Command::Convert(a) => {
            let dir = out(a.out.clone(), "convert");
            cmd_convert(&a, &dir).map(|_| ())
        }
        Command::Eval(a) => {
            let dir = out(a.out.clone(), "eval");
            cmd_eval(&a, &dir).map(|_| ())
        }
        Command::Compare(a) => {
            let dir = out(a.out.clone(), "compare");
            cmd_compare(&a, &dir).map(|_| ())
        }
        Command::Verify(a) => {
            let results = verify::run_all(a.seed);
            let mut ok = true;
            for r in &results {
                println!("{} {:<32} {}", if r.passed { "PASS" } else { "FAIL" }, r.name, r.detail);
                ok &= r.passed;
            }
            if ok {
                Ok(())
            } else {
                Err(CliError::new(crate::exit::EXIT_FAILURE, "invariant check failed"))
            }
        }
    }
}

fn load_config(path: Option<&Path>) -> Result<RunConfig, CliError> {
    match path {
        Some(p) => RunConfig::load(p).at(p),
        None => Ok(RunConfig::default()),
    }
}

fn write(path: &Path, bytes: impl AsRef<[u8]>) -> Result<(), CliError> {
    write_atomic(path, bytes.as_ref()).at(path)
}

pub fn cmd_train(a: &TrainArgs, dir: &Path) -> Result<PathBuf, CliError> {
    let mut cfg = load_config(a.config.as_deref())?;
    if let Some(s) = a.seed {
        cfg.train_seed = s;
    }
    let quiet = a.quiet;
    let total = cfg.ppo.iterations;
    let out = train_actor(&cfg, |row| {
        if !quiet && (row.iteration % 10 == 0 || row.iteration + 1 == total) {
            eprintln!(
                "iter {:>4}  return {:>9.3}  final pos {:.4} m  final ang {:.3} deg",
                row.iteration, row.mean_episode_return, row.mean_final_position_error, row.mean_final_orientation_error_deg
            );
        }
    })?;
    let weights = dir.join("actor.json");
    save_ann(&weights, &AnnWeights::new(&out.policy, Some(&out.critic))).at(&weights)?;
    write(&dir.join("train_log.csv"), out.log_csv())?;
    let cfg_path = dir.join("config.json");
    cfg.save(&cfg_path).at(&cfg_path)?;
    println!("wrote {}", weights.display());
    Ok(weights)
}

#[derive(Debug, Serialize)]
pub struct LayerSummary {
    pub index: usize,
    pub in_dim: usize,
    pub out_dim: usize,
    pub relu: bool,
    pub weight_scale: f64,
    pub weight_bits: u32,
    pub input_scale: f64,
    pub output_scale: f64,
    pub output_bits: u32,
    pub requant_multiplier: i64,
    pub requant_shift: u32,
    pub max_weight_error: f64,
    pub half_lsb: f64,
}

#[derive(Debug, Serialize)]
pub struct EquivalenceCheck {
    pub max_abs_deviation: f64,
    pub tolerance: f64,
    pub passed: bool,
}

#[derive(Debug, Serialize)]
pub struct ConversionReport {
    pub source: String,
    pub layer_dims: Vec<usize>,
    pub thresholds: Thresholds,
    pub integer_thresholds: Vec<i64>,
    pub observation_scale: f64,
    pub calibration_samples: usize,
    pub layers: Vec<LayerSummary>,
    pub equivalence: EquivalenceCheck,
}

pub fn cmd_convert(a: &ConvertArgs, dir: &Path) -> Result<ConversionReport, CliError> {
    let cfg = load_config(a.config.as_deref())?;
    let policy = load_ann(&a.weights).at(&a.weights)?.policy()?;
    let mut th = cfg.thresholds;
    if let Some(t) = a.threshold {
        th = Thresholds::uniform(t);
    }
    th.input = a.input_threshold.unwrap_or(th.input);
    th.hidden = a.hidden_threshold.unwrap_or(th.hidden);
    let calib = calibration_set(&policy, &cfg)?;
    let net = convert(&policy.net, th, cfg.quant, &calib)?;
    let dev = zero_threshold_deviation(&policy, &net, &calib)?;
    let report = ConversionReport {
        source: a.weights.display().to_string(),
        layer_dims: net.dims(),
        thresholds: net.thresholds(),
        integer_thresholds: net.integer_thresholds(),
        observation_scale: net.params().obs_spec.scale(),
        calibration_samples: calib.len(),
        layers: net
            .params()
            .layers
            .iter()
            .enumerate()
            .map(|(k, l)| LayerSummary {
                index: k,
                in_dim: l.in_dim,
                out_dim: l.out_dim,
                relu: l.relu,
                weight_scale: l.weight_spec.scale(),
                weight_bits: l.weight_spec.magnitude_bits(),
                input_scale: net.input_spec(k).scale(),
                output_scale: l.out_spec.scale(),
                output_bits: l.out_spec.magnitude_bits(),
                requant_multiplier: l.requant.multiplier,
                requant_shift: l.requant.shift,
                max_weight_error: l.max_weight_error(),
                half_lsb: 0.5 / l.weight_spec.scale(),
            })
            .collect(),
        equivalence: EquivalenceCheck {
            max_abs_deviation: dev,
            tolerance: EQUIVALENCE_TOL,
            passed: dev <= EQUIVALENCE_TOL,
        },
    };
    let sdnn_path = dir.join("sdnn.json");
    save_sdnn(&sdnn_path, &SdnnWeights::new(&net)).at(&sdnn_path)?;
    let report_path = dir.join("conversion_report.json");
    save_envelope(&report_path, "conversion-report", &report).at(&report_path)?;
    let cfg_path = dir.join("config.json");
    cfg.save(&cfg_path).at(&cfg_path)?;
    println!(
        "thresholds input {} hidden {} (integer {:?})",
        report.thresholds.input, report.thresholds.hidden, report.integer_thresholds
    );
    for l in &report.layers {
        println!(
            "layer {} {}x{}: weight scale {:.3}, max weight error {:.3e} (half LSB {:.3e})",
            l.index, l.out_dim, l.in_dim, l.weight_scale, l.max_weight_error, l.half_lsb
        );
    }
    println!(
        "zero-threshold equivalence: max |SDNN - ANN| = {:.3e} ({})",
        dev,
        if report.equivalence.passed { "pass" } else { "FAIL" }
    );
    println!("wrote {}", sdnn_path.display());
    Ok(report)
}

/// `--seeds N` gives `0..N`; `--seed-list a,b,c` gives those seeds.
pub fn resolve_seeds(seeds: Option<u64>, list: Option<&str>, default: &[u64]) -> Result<Vec<u64>, CliError> {
    let out = match (seeds, list) {
        (Some(n), _) => (0..n).collect(),
        (None, Some(l)) => l
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| s.parse::<u64>().map_err(|_| CliError::invalid(format!("invalid seed '{s}'"))))
            .collect::<Result<Vec<_>, _>>()?,
        (None, None) => default.to_vec(),
    };
    if out.is_empty() {
        return Err(CliError::invalid("seed list is empty"));
    }
    Ok(out)
}

pub struct EvalOutput {
    pub report: EvalReport,
    pub trace_files: Vec<PathBuf>,
}

pub fn cmd_eval(a: &EvalArgs, dir: &Path) -> Result<EvalOutput, CliError> {
    let cfg = load_config(a.config.as_deref())?;
    let seeds = resolve_seeds(a.seeds, a.seed_list.as_deref(), &cfg.seeds)?;
    let tasks = match a.task {
        Some(TaskArg::Undock) => vec![Task::Undock],
        Some(TaskArg::Random) => vec![Task::Random],
        Some(TaskArg::All) => Task::ALL.to_vec(),
        None => cfg.tasks.clone(),
    };
    let controller = match a.controller {
        ControllerKind::Ann => {
            if a.threshold.is_some() {
                return Err(CliError::invalid("--threshold applies to the sdnn controller only"));
            }
            Controller::Ann(load_ann(&a.weights).at(&a.weights)?.policy()?)
        }
        ControllerKind::Sdnn => {
            let mode = match a.mode {
                ModeArg::Float => SdnnMode::Float,
                ModeArg::Quantized => SdnnMode::Quantized,
            };
            let mut net = load_sdnn(&a.weights).at(&a.weights)?.net(mode)?;
            if let Some(t) = a.threshold {
                net.set_thresholds(Thresholds::uniform(t))?;
            }
            let exec = match a.exec {
                ExecArg::Flush => ExecMode::Flush,
                ExecArg::Pipelined => ExecMode::Pipelined,
            };
            Controller::Sdnn(net.with_exec_mode(exec))
        }
    };
    let label = a.label.clone().unwrap_or_else(|| controller.kind().to_string());
    if label.is_empty() || label.contains(['/', '\\', ',']) {
        return Err(CliError::invalid(format!("invalid label '{label}'")));
    }
    let traces = run_suite(&[(label, controller)], &tasks, &seeds, &cfg.flyer)?;
    let mut trace_files = Vec::new();
    for t in &traces {
        let p = dir.join("traces").join(t.file_name());
        write(&p, trace_to_csv(t)?)?;
        trace_files.push(p);
    }
    let report = EvalReport::from_traces(&traces)?;
    let rp = dir.join("report.json");
    save_report(&rp, &report).at(&rp)?;
    write(&dir.join("report.csv"), report.to_csv())?;
    let table = report.to_table();
    write(&dir.join("report.txt"), &table)?;
    for metric in [Metric::Position, Metric::Orientation] {
        let (svg, warnings) = plot_timeseries(&traces, metric);
        for w in warnings {
            eprintln!("warning: {w}");
        }
        write(&dir.join(format!("{}.svg", metric.name())), svg)?;
    }
    let mut resolved = cfg;
    resolved.seeds = seeds;
    resolved.tasks = tasks;
    let cp = dir.join("config.json");
    resolved.save(&cp).at(&cp)?;
    print!("{table}");
    Ok(EvalOutput { report, trace_files })
}

pub fn cmd_compare(a: &CompareArgs, dir: &Path) -> Result<String, CliError> {
    if a.reports.len() < 2 {
        return Err(CliError::new(EXIT_INCOMPATIBLE, "compare needs at least two reports"));
    }
    let reports = a
        .reports
        .iter()
        .map(|p| load_report(p).at(p))
        .collect::<Result<Vec<_>, _>>()?;
    let mut csv = String::new();
    let mut text = String::new();
    for (i, r) in reports.iter().enumerate().skip(1) {
        let c = compare(&reports[0], r)?;
        let body = c.to_csv();
        if i == 1 {
            csv.push_str(&body);
        } else {
            csv.extend(body.lines().skip(1).map(|l| format!("{l}\n")));
        }
        text.push_str(&c.to_table());
    }
    write(&dir.join("compare.csv"), &csv)?;
    write(&dir.join("compare.txt"), &text)?;
    write(&dir.join("scatter.csv"), scatter_csv(&reports))?;
    print!("{text}");
    Ok(csv)
}
