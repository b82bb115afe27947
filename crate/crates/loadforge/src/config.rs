//! TOML building configuration.
//!
//! ```toml
//! seed = 7
//! preset = "shed"              # or "residential"; optional
//! preset_buildings = [1, 7]    # subset of the SHED buildings
//!
//! [settings]
//! span_days = 14
//! samples_per_period = 200
//!
//! [[building]]
//! name = "lab"
//! ground_truth = "current"
//!
//! [[building.category]]
//! id = "hvac"
//!
//! [[building.category.device]]
//! class = "C"
//! count = 2
//! signature = "motor"
//! profile = "hvac"
//! peak_watts = 8000
//! ```
//!
//! Relative file paths (signature models, transition tables, templates) are
//! resolved against the directory of the config file.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use loadforge_core::genmodel::{
    default_sigma, ArmaParams, DayCalendar, DeltaMode, MultiStateTable, SignatureTemplate, TimePartition,
};
use loadforge_core::simulate::library::{self, LoadProfile, SignatureShape, SwitchingProfile};
use loadforge_core::simulate::{
    ActivationModel, BuildingSpec, CategorySpec, DeviceClass, DeviceSpec, GroundTruth, Mains, SimSettings,
};
use loadforge_core::stats::SECONDS_PER_DAY;
use loadforge_core::Matrix;

use crate::error::{CliError, Result};
use crate::formats;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub seed: Option<u64>,
    #[serde(default)]
    pub settings: SettingsFile,
    pub preset: Option<String>,
    pub preset_buildings: Option<Vec<usize>>,
    #[serde(default, rename = "building")]
    pub buildings: Vec<BuildingFile>,
}

#[derive(Debug, Default, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SettingsFile {
    pub start: Option<f64>,
    pub span_days: Option<f64>,
    pub cadence: Option<f64>,
    pub samples_per_period: Option<usize>,
    pub voltage_rms: Option<f64>,
    pub frequency_hz: Option<f64>,
    pub noise_std: Option<f64>,
    pub phases: Option<u32>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BuildingFile {
    pub name: String,
    pub ground_truth: Option<String>,
    #[serde(rename = "category")]
    pub categories: Vec<CategoryFile>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CategoryFile {
    pub id: String,
    #[serde(rename = "device")]
    pub devices: Vec<DeviceFile>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
pub enum SignatureSource {
    Shape(String),
    Shapes(Vec<String>),
    File { file: String },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArmaFile {
    #[serde(default)]
    pub phi: Vec<f64>,
    #[serde(default)]
    pub theta: Vec<f64>,
    /// Stationary standard deviation of the log-noise.
    pub std: Option<f64>,
    /// Innovation standard deviation; alternative to `std`.
    pub sigma_w: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeviceFile {
    pub class: String,
    pub count: Option<usize>,
    pub signature: SignatureSource,
    /// Signature perturbation std; defaults to 1% of the template RMS.
    pub sigma: Option<f64>,
    pub switching: Option<String>,
    pub transitions: Option<String>,
    pub rated_watts: Option<f64>,
    pub magnitudes: Option<Vec<f64>>,
    pub transition_matrix: Option<Vec<Vec<f64>>>,
    pub profile: Option<String>,
    pub peak_watts: Option<f64>,
    pub template: Option<String>,
    pub alpha: Option<Vec<f64>>,
    pub delta: Option<String>,
    pub arma: Option<ArmaFile>,
}

/// Scalars the command line may override.
#[derive(Debug, Default, Clone, Copy)]
pub struct Overrides {
    pub span_days: Option<f64>,
    pub samples_per_period: Option<usize>,
    pub noise_std: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct RunSpec {
    pub seed: Option<u64>,
    pub buildings: Vec<BuildingSpec>,
}

pub fn parse_config(text: &str) -> Result<ConfigFile> {
    toml::from_str(text).map_err(|e| CliError::Config(format!("config: {e}")))
}

fn cfg(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

pub fn settings(file: &SettingsFile, overrides: &Overrides) -> Result<SimSettings> {
    if let Some(p) = file.phases.filter(|&p| p != 1) {
        return Err(cfg(format!("only single-phase networks are supported, got phases = {p}")));
    }
    let d = SimSettings::default();
    let span_days = overrides.span_days.or(file.span_days);
    let s = SimSettings {
        start: file.start.unwrap_or(d.start),
        span: span_days.map_or(d.span, |days| days * SECONDS_PER_DAY),
        cadence: file.cadence.unwrap_or(d.cadence),
        samples_per_period: overrides.samples_per_period.or(file.samples_per_period).unwrap_or(d.samples_per_period),
        mains: Mains {
            rms: file.voltage_rms.unwrap_or(d.mains.rms),
            hz: file.frequency_hz.unwrap_or(d.mains.hz),
        },
        noise_std: overrides.noise_std.or(file.noise_std),
    };
    s.validate()?;
    Ok(s)
}

/// Builds the run from a parsed config. `base` resolves relative paths.
pub fn resolve(file: &ConfigFile, base: &Path, overrides: &Overrides) -> Result<RunSpec> {
    let settings = settings(&file.settings, overrides)?;
    let mut buildings = Vec::new();
    match file.preset.as_deref() {
        None => {
            if file.preset_buildings.is_some() {
                return Err(cfg("preset_buildings requires preset = \"shed\""));
            }
        }
        Some("shed") => {
            let numbers = file.preset_buildings.clone().unwrap_or_else(|| (1..=8).collect());
            for b in numbers {
                buildings.push(library::shed_building(b, settings)?);
            }
        }
        Some("residential") => buildings.push(library::residential_building(settings)?),
        Some(other) => return Err(cfg(format!("unknown preset {other:?} (expected \"shed\" or \"residential\")"))),
    }
    for b in &file.buildings {
        buildings.push(building(b, settings, base)?);
    }
    if buildings.is_empty() {
        return Err(cfg("config defines no buildings (set `preset` or add [[building]] tables)"));
    }
    for (i, b) in buildings.iter().enumerate() {
        if buildings[..i].iter().any(|o| o.name == b.name) {
            return Err(cfg(format!("duplicate building name {:?}", b.name)));
        }
        b.validate()?;
    }
    Ok(RunSpec {
        seed: file.seed,
        buildings,
    })
}

/// The SHED preset with default settings and optional overrides.
pub fn default_run(overrides: &Overrides) -> Result<RunSpec> {
    resolve(
        &ConfigFile {
            preset: Some("shed".into()),
            ..ConfigFile::default()
        },
        Path::new("."),
        overrides,
    )
}

fn building(b: &BuildingFile, settings: SimSettings, base: &Path) -> Result<BuildingSpec> {
    let ground_truth = match b.ground_truth.as_deref() {
        None | Some("power") => GroundTruth::Power,
        Some("current") => GroundTruth::Current,
        Some(o) => return Err(cfg(format!("building {}: ground_truth must be \"power\" or \"current\", got {o:?}", b.name))),
    };
    let categories = b
        .categories
        .iter()
        .map(|c| {
            let mut devices = Vec::new();
            for d in &c.devices {
                let spec = device(d, settings.samples_per_period, base)
                    .map_err(|e| cfg(format!("building {}, category {}: {e}", b.name, c.id)))?;
                let count = d.count.unwrap_or(1);
                if count == 0 {
                    return Err(cfg(format!("building {}, category {}: count must be >= 1", b.name, c.id)));
                }
                devices.extend(std::iter::repeat_n(spec, count));
            }
            Ok(CategorySpec::new(c.id.clone(), devices)?)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(BuildingSpec {
        name: b.name.clone(),
        categories,
        settings,
        ground_truth,
    })
}

fn path_in(base: &Path, p: &str) -> PathBuf {
    let p = Path::new(p);
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

fn shape(name: &str) -> Result<SignatureShape> {
    SignatureShape::from_name(name).ok_or_else(|| {
        let known: Vec<_> = SignatureShape::ALL.iter().map(|s| s.name()).collect();
        cfg(format!("unknown signature shape {name:?} (known: {})", known.join(", ")))
    })
}

fn signature(d: &DeviceFile, n: usize, base: &Path) -> Result<SignatureTemplate> {
    let template = match &d.signature {
        SignatureSource::Shape(s) => library::signature_matrix(&[shape(s)?], n),
        SignatureSource::Shapes(list) => {
            let shapes = list.iter().map(|s| shape(s)).collect::<Result<Vec<_>>>()?;
            library::signature_matrix(&shapes, n)
        }
        SignatureSource::File { file } => formats::read_model(&path_in(base, file))?.signatures,
    };
    let sigma = d.sigma.unwrap_or_else(|| default_sigma(&template));
    Ok(SignatureTemplate::new(template, sigma)?)
}

fn arma(a: &Option<ArmaFile>) -> Result<ArmaParams> {
    match a {
        None => Ok(ArmaParams::default_log_noise()),
        Some(a) => match (a.std, a.sigma_w) {
            (Some(std), None) => Ok(ArmaParams::with_stationary_std(a.phi.clone(), a.theta.clone(), std)?),
            (None, Some(sw)) => Ok(ArmaParams::new(a.phi.clone(), a.theta.clone(), sw)?),
            _ => Err(cfg("arma needs exactly one of `std` or `sigma_w`")),
        },
    }
}

fn template(d: &DeviceFile, base: &Path) -> Result<loadforge_core::genmodel::ActivationTemplate> {
    match (&d.profile, &d.template) {
        (Some(p), None) => {
            let profile = LoadProfile::from_name(p).ok_or_else(|| cfg(format!("unknown load profile {p:?}")))?;
            let peak = d.peak_watts.ok_or_else(|| cfg("`profile` needs `peak_watts`"))?;
            Ok(profile.template(peak, DayCalendar::default())?)
        }
        (None, Some(file)) => {
            let t = formats::read_template(&path_in(base, file))?;
            match d.peak_watts {
                Some(peak) if t.peak() > 0.0 => Ok(t.scaled(peak / t.peak())?),
                _ => Ok(t),
            }
        }
        _ => Err(cfg("varying-load devices need exactly one of `profile` or `template`")),
    }
}

fn device(d: &DeviceFile, n: usize, base: &Path) -> Result<DeviceSpec> {
    let sig = signature(d, n, base)?;
    let k = sig.components();
    let (class, activation) = match d.class.as_str() {
        "A" => {
            let (table, partition) = match (&d.switching, &d.transitions) {
                (Some(s), None) => {
                    let p = SwitchingProfile::from_name(s).ok_or_else(|| cfg(format!("unknown switching profile {s:?}")))?;
                    (p.table(), TimePartition::Hourly)
                }
                (None, Some(file)) => {
                    let t = formats::read_transitions(&path_in(base, file))?;
                    let partition = formats::partition_for_subsets(t.subsets())
                        .ok_or_else(|| cfg(format!("transition table with {} subsets matches no partition", t.subsets())))?;
                    (t, partition)
                }
                _ => return Err(cfg("class A devices need exactly one of `switching` or `transitions`")),
            };
            let rated_watts = d.rated_watts.ok_or_else(|| cfg("class A devices need `rated_watts`"))?;
            (DeviceClass::A, ActivationModel::OnOff { table, partition, rated_watts })
        }
        "B" => {
            let magnitudes = d.magnitudes.clone().ok_or_else(|| cfg("class B devices need `magnitudes`"))?;
            let (table, partition) = match &d.transition_matrix {
                None => (library::multistate_table(magnitudes.len())?, TimePartition::Hourly),
                Some(rows) => {
                    let size = rows.len();
                    if rows.iter().any(|r| r.len() != size) {
                        return Err(cfg("transition_matrix must be square"));
                    }
                    let m = Matrix::from_fn(size, size, |i, j| rows[i][j]);
                    (MultiStateTable::homogeneous(m, 1)?, TimePartition::Single)
                }
            };
            (DeviceClass::B, ActivationModel::MultiState { table, partition, magnitudes })
        }
        "C" => (
            DeviceClass::C,
            ActivationModel::Complex {
                template: template(d, base)?,
                noise: arma(&d.arma)?,
            },
        ),
        "D" => {
            let mode = match d.delta.as_deref() {
                None | Some("once") => DeltaMode::Once,
                Some("daily") => DeltaMode::Daily,
                Some(o) => return Err(cfg(format!("delta must be \"once\" or \"daily\", got {o:?}"))),
            };
            (
                DeviceClass::D,
                ActivationModel::MultiSignature {
                    template: template(d, base)?,
                    noise: arma(&d.arma)?,
                    alpha: d.alpha.clone().unwrap_or_else(|| vec![2.0; k]),
                    mode,
                },
            )
        }
        o => return Err(cfg(format!("device class must be A, B, C or D, got {o:?}"))),
    };
    Ok(DeviceSpec::new(class, sig, activation)?)
}
