//! Command-line front-end.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use loadforge_core::factorize::{normalize, select_k, snmf, SignatureBank, SolverOptions};
use loadforge_core::genmodel::{
    infer_transitions, learn_template, threshold_onoff, DayCalendar, TimePartition, DEFAULT_THRESHOLD,
};
use loadforge_core::simulate::{voltage_waveform, DEFAULT_START};
use loadforge_core::stats::{analyze_current, analyze_power};
use loadforge_core::factorize::{infer_activations, reconstruction_snr};

use crate::config::{self, Overrides};
use crate::error::{CliError, Result};
use crate::formats;
use crate::manifest::{self, write_hashed, Manifest};
use crate::shed;

/// Config used by `generate` when no `--config` is given.
pub const DEFAULT_CONFIG: &str = "preset = \"shed\"\n";

#[derive(Debug, Parser)]
#[command(name = "loadforge", about = "Learn, analyze and synthesize building load datasets", disable_version_flag = true)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Factorize a current matrix into signatures and activations.
    Learn(LearnArgs),
    /// Compute derivative statistics of a power series or current matrix.
    Analyze(AnalyzeArgs),
    /// Estimate activation models from power, or activations from current.
    InferActivations(InferArgs),
    /// Synthesize a dataset from a building config.
    Generate(GenerateArgs),
    /// Print the tool and format versions.
    Version,
}

#[derive(Debug, Args)]
pub struct LearnArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Number of components, or `auto` to pick the smallest reaching the SNR target.
    #[arg(long, default_value = "auto")]
    pub k: String,
    #[arg(long, default_value_t = 10)]
    pub k_max: usize,
    #[arg(long, default_value_t = 50.0)]
    pub snr_target: f64,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value_t = 500)]
    pub max_iters: usize,
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
    /// RMS of the reference voltage used to normalize signatures.
    #[arg(long, default_value_t = 230.0)]
    pub voltage_rms: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum InputKind {
    Power,
    Current,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_enum, default_value = "power")]
    pub kind: InputKind,
    /// Comma-separated resampling intervals; the first sets the resolution
    /// of the distribution statistics.
    #[arg(long, default_value = "30s,1h")]
    pub resample: String,
    #[arg(long)]
    pub report: PathBuf,
    /// Timestamp of the first period of a current matrix.
    #[arg(long, default_value_t = DEFAULT_START)]
    pub start: f64,
    /// Period spacing of a current matrix, or the step of a one-row power file.
    #[arg(long, default_value_t = 30.0)]
    pub cadence: f64,
    #[arg(long, default_value_t = 230.0)]
    pub voltage_rms: f64,
    /// Per-period THD table (current input only).
    #[arg(long)]
    pub thd_out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PartitionKind {
    Single,
    Hourly,
    Halfminute,
}

impl PartitionKind {
    fn partition(self) -> TimePartition {
        match self {
            PartitionKind::Single => TimePartition::Single,
            PartitionKind::Hourly => TimePartition::Hourly,
            PartitionKind::Halfminute => TimePartition::HalfMinuteDayType(DayCalendar::default()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ActivationKind {
    /// Two-state Markov chain of the thresholded power.
    Onoff,
    /// Mean power per subset.
    Template,
}

#[derive(Debug, Args)]
pub struct InferArgs {
    #[arg(long, conflicts_with_all = ["current", "model"], required_unless_present = "current")]
    pub power: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "hourly")]
    pub partition: PartitionKind,
    #[arg(long, value_enum, default_value = "onoff")]
    pub activation: ActivationKind,
    /// On/off threshold in watts.
    #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
    pub threshold: f64,
    #[arg(long, requires = "model")]
    pub current: Option<PathBuf>,
    /// Category model as `id=path`; repeat for every category.
    #[arg(long)]
    pub model: Vec<String>,
    #[arg(long, default_value_t = DEFAULT_START)]
    pub start: f64,
    #[arg(long, default_value_t = 30.0)]
    pub cadence: f64,
    #[arg(long, default_value_t = 230.0)]
    pub voltage_rms: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// Building config (TOML); defaults to the eight SHED buildings.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub span_days: Option<f64>,
    #[arg(long)]
    pub samples_per_period: Option<usize>,
    #[arg(long)]
    pub noise_std: Option<f64>,
}

/// Parses `args` (including the program name) and runs the command.
/// Returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(command: Command) -> Result<()> {
    match command {
        Command::Learn(a) => learn(&a),
        Command::Analyze(a) => analyze(&a),
        Command::InferActivations(a) => infer(&a),
        Command::Generate(a) => generate(&a),
        Command::Version => {
            println!("loadforge {} (format {})", manifest::TOOL_VERSION, manifest::FORMAT_VERSION);
            Ok(())
        }
    }
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn seed_or_default(seed: Option<u64>) -> u64 {
    seed.unwrap_or_else(|| {
        log::warn!("no seed given, using 0");
        0
    })
}

/// `<out>.manifest.json` next to a single-file output.
fn sidecar(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".manifest.json");
    PathBuf::from(s)
}

fn input_entry(m: &mut Manifest, key: &str, path: &Path) -> Result<()> {
    m.param(key, path.display());
    m.param(&format!("{key}_sha256"), manifest::hash_file(path)?.sha256);
    Ok(())
}

/// Parses `30s,1h,15min`-style lists; bare numbers are seconds.
pub fn parse_intervals(list: &str) -> Result<Vec<f64>> {
    let out = list
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            let secs = match s.parse::<f64>() {
                Ok(v) => v,
                Err(_) => humantime::parse_duration(s)
                    .map_err(|e| usage(format!("bad interval {s:?}: {e}")))?
                    .as_secs_f64(),
            };
            if secs > 0.0 && secs.is_finite() {
                Ok(secs)
            } else {
                Err(usage(format!("interval {s:?} must be positive")))
            }
        })
        .collect::<Result<Vec<_>>>()?;
    if out.is_empty() {
        return Err(usage("no resampling intervals given"));
    }
    Ok(out)
}

fn learn(a: &LearnArgs) -> Result<()> {
    let current = formats::read_current(&a.input)?;
    let seed = seed_or_default(a.seed);
    let opts = SolverOptions {
        rel_tol: a.tol,
        max_iters: a.max_iters,
        seed,
    };
    let v0 = voltage_waveform(a.voltage_rms, current.samples_per_period());
    let (fit, met_target) = match a.k.as_str() {
        "auto" => {
            let sel = select_k(&current, a.snr_target, a.k_max, &opts)?;
            if !sel.met_target {
                log::warn!(
                    "no k <= {} reached {} dB; keeping k = {} at {:.2} dB",
                    a.k_max,
                    a.snr_target,
                    sel.k,
                    sel.snr_db
                );
            }
            (sel.fit, Some(sel.met_target))
        }
        k => {
            let k: usize = k.parse().map_err(|_| usage(format!("--k must be a positive integer or `auto`, got {k:?}")))?;
            (snmf(&current, k, &opts)?, None)
        }
    };
    let model = normalize(&fit.model, &v0)?;
    let snr = reconstruction_snr(&current, &model);
    let entry = write_hashed(&a.out, |w| formats::write_model(w, &model))?;

    let mut m = Manifest::new("learn");
    m.root_seed = Some(seed);
    input_entry(&mut m, "input", &a.input)?;
    m.param("k", model.k())
        .param("k_requested", &a.k)
        .param("snr_db", formats::fmt_num(snr))
        .param("snr_target_db", a.snr_target)
        .param("iterations", fit.iterations)
        .param("converged", fit.converged)
        .param("voltage_rms", a.voltage_rms);
    if let Some(met) = met_target {
        m.param("met_target", met);
    }
    m.files.push(entry);
    m.write(&sidecar(&a.out))?;
    println!(
        "k={} snr_db={} iterations={} converged={}",
        model.k(),
        formats::fmt_num(snr),
        fit.iterations,
        fit.converged
    );
    Ok(())
}

fn analyze(a: &AnalyzeArgs) -> Result<()> {
    let intervals = parse_intervals(&a.resample)?;
    if a.thd_out.is_some() && a.kind != InputKind::Current {
        return Err(usage("--thd-out needs --kind current"));
    }
    let mut m = Manifest::new("analyze");
    input_entry(&mut m, "input", &a.input)?;
    m.param("resample", &a.resample);
    let report = match a.kind {
        InputKind::Power => analyze_power(&formats::read_power(&a.input, a.cadence)?, &intervals)?,
        InputKind::Current => {
            let current = formats::read_current(&a.input)?;
            let v0 = voltage_waveform(a.voltage_rms, current.samples_per_period());
            let (report, per_period) = analyze_current(&current, &v0, a.start, a.cadence, &intervals)?;
            if let Some(path) = &a.thd_out {
                let mut e = write_hashed(path, |w| formats::write_thd(w, a.start, a.cadence, &per_period))?;
                e.path = path.display().to_string();
                m.files.push(e);
            }
            m.param("start", a.start).param("cadence", a.cadence).param("voltage_rms", a.voltage_rms);
            report
        }
    };
    let mut e = write_hashed(&a.report, |w| formats::write_report(w, &report))?;
    e.path = a.report.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    m.files.insert(0, e);
    m.write(&sidecar(&a.report))?;
    println!(
        "kurtosis={} entropy={} laplace_scale={}",
        formats::fmt_num(report.kurtosis),
        formats::fmt_num(report.entropy),
        formats::fmt_num(report.laplace_scale)
    );
    Ok(())
}

fn infer(a: &InferArgs) -> Result<()> {
    let mut m = Manifest::new("infer-activations");
    let entry = if let Some(power_path) = &a.power {
        let p = formats::read_power(power_path, a.cadence)?;
        input_entry(&mut m, "power", power_path)?;
        let partition = a.partition.partition();
        m.param("partition", format!("{:?}", a.partition).to_lowercase());
        match a.activation {
            ActivationKind::Onoff => {
                let states = threshold_onoff(&p, a.threshold);
                let table = infer_transitions(&states, p.start(), p.interval(), &partition)?;
                if table.any_smoothed() {
                    log::warn!("some transition probabilities were never observed and are set to 1/2");
                }
                m.param("activation", "onoff").param("threshold_w", a.threshold);
                write_hashed(&a.out, |w| formats::write_transitions(w, &table))?
            }
            ActivationKind::Template => {
                let learned = learn_template(&p, &partition)?;
                m.param("activation", "template");
                write_hashed(&a.out, |w| formats::write_template(w, &learned.template, Some(&learned.counts)))?
            }
        }
    } else {
        let current_path = a.current.as_ref().ok_or_else(|| usage("give --power or --current"))?;
        let current = formats::read_current(current_path)?;
        input_entry(&mut m, "current", current_path)?;
        let mut bank = SignatureBank::new();
        let mut names = Vec::new();
        for spec in &a.model {
            let (id, path) = spec
                .split_once('=')
                .ok_or_else(|| usage(format!("--model expects id=path, got {spec:?}")))?;
            let path = Path::new(path);
            let model = formats::read_model(path)?;
            input_entry(&mut m, &format!("model_{id}"), path)?;
            bank.push(id, model.signatures)?;
            names.push(format!("{id}_watts"));
        }
        let activations = infer_activations(&current, &bank)?;
        let power = bank.category_power(&activations);
        m.param("start", a.start).param("cadence", a.cadence);
        write_hashed(&a.out, |w| formats::write_columns(w, a.start, a.cadence, &names, &power))?
    };
    m.files.push(entry);
    m.write(&sidecar(&a.out))?;
    println!("wrote {}", a.out.display());
    Ok(())
}

fn generate(a: &GenerateArgs) -> Result<()> {
    let (text, base) = match &a.config {
        Some(p) => (
            formats::read_text(p)?,
            p.parent().map(Path::to_path_buf).unwrap_or_default(),
        ),
        None => (DEFAULT_CONFIG.to_string(), PathBuf::from(".")),
    };
    let file = config::parse_config(&text)?;
    let overrides = Overrides {
        span_days: a.span_days,
        samples_per_period: a.samples_per_period,
        noise_std: a.noise_std,
    };
    let run = config::resolve(&file, &base, &overrides)?;
    let root_seed = seed_or_default(a.seed.or(run.seed));

    let mut m = Manifest::new("generate");
    m.config_sha256 = Some(manifest::sha256_hex(text.as_bytes()));
    m.param("config", a.config.as_ref().map_or("<default shed preset>".into(), |p| p.display().to_string()));
    if let Some(v) = a.span_days {
        m.param("span_days", v);
    }
    if let Some(v) = a.samples_per_period {
        m.param("samples_per_period", v);
    }
    if let Some(v) = a.noise_std {
        m.param("noise_std", v);
    }
    let top = shed::emit_shed(&run.buildings, root_seed, &a.out, &m)?;
    println!(
        "generated {} buildings ({} categories) in {}",
        top.buildings.len(),
        top.category_count(),
        a.out.display()
    );
    Ok(())
}
