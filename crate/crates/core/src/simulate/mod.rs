//! Device, category and building synthesis.
//!
//! A device draws a signature (normalized so a unit activation is 1 W) and an
//! activation matrix from its generator; a category sums its devices; a
//! building sums its categories and adds i.i.d. Gaussian sample noise.

pub mod library;

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::factorize::{normalize_signatures, CurrentMatrix};
use crate::genmodel::{
    sample_complex_activation, sample_multisig_activation, sample_multistate_activation,
    sample_onoff, sample_signature, ActivationTemplate, ArmaParams, DeltaMode, MultiStateTable,
    SignatureTemplate, TimePartition, TransitionTable,
};
use crate::linalg::Matrix;
use crate::seed;
use crate::stats::PowerSeries;

/// `v0(n) = rms * sqrt(2) * sin(2 pi n / N)`.
pub fn voltage_waveform(rms: f64, n: usize) -> Vec<f64> {
    let amp = rms * core::f64::consts::SQRT_2;
    (0..n)
        .map(|i| amp * libm::sin(2.0 * core::f64::consts::PI * i as f64 / n as f64))
        .collect()
}

/// Device taxonomy by activation complexity and signature count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DeviceClass {
    /// On/off, one signature.
    A,
    /// Multi-state, one signature per state.
    B,
    /// Varying load, one signature.
    C,
    /// Varying signature: a varying load split over several signatures.
    D,
}

impl DeviceClass {
    pub fn letter(self) -> char {
        match self {
            DeviceClass::A => 'A',
            DeviceClass::B => 'B',
            DeviceClass::C => 'C',
            DeviceClass::D => 'D',
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ActivationModel {
    OnOff {
        table: TransitionTable,
        partition: TimePartition,
        rated_watts: f64,
    },
    MultiState {
        table: MultiStateTable,
        partition: TimePartition,
        magnitudes: Vec<f64>,
    },
    Complex {
        template: ActivationTemplate,
        noise: ArmaParams,
    },
    MultiSignature {
        template: ActivationTemplate,
        noise: ArmaParams,
        alpha: Vec<f64>,
        mode: DeltaMode,
    },
}

impl ActivationModel {
    fn class(&self) -> DeviceClass {
        match self {
            ActivationModel::OnOff { .. } => DeviceClass::A,
            ActivationModel::MultiState { .. } => DeviceClass::B,
            ActivationModel::Complex { .. } => DeviceClass::C,
            ActivationModel::MultiSignature { .. } => DeviceClass::D,
        }
    }

    fn components(&self) -> usize {
        match self {
            ActivationModel::OnOff { .. } | ActivationModel::Complex { .. } => 1,
            ActivationModel::MultiState { magnitudes, .. } => magnitudes.len(),
            ActivationModel::MultiSignature { alpha, .. } => alpha.len(),
        }
    }
}

/// The periods a simulation covers: `periods` waveforms starting at `start`
/// (epoch seconds), one every `cadence` seconds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Timeline {
    pub start: f64,
    pub cadence: f64,
    pub periods: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeviceSpec {
    class: DeviceClass,
    signature: SignatureTemplate,
    activation: ActivationModel,
}

impl DeviceSpec {
    pub fn new(class: DeviceClass, signature: SignatureTemplate, activation: ActivationModel) -> Result<Self> {
        if activation.class() != class {
            return Err(Error::InvalidSpec(format!(
                "class {} device cannot use a class {} activation generator",
                class.letter(),
                activation.class().letter()
            )));
        }
        let k = activation.components();
        let multi = matches!(class, DeviceClass::B | DeviceClass::D);
        if multi && k < 2 {
            return Err(Error::InvalidSpec(format!(
                "class {} devices need at least two components",
                class.letter()
            )));
        }
        if signature.components() != k {
            return Err(Error::InvalidSpec(format!(
                "signature has {} columns, activation generator has {k} components",
                signature.components()
            )));
        }
        if let ActivationModel::OnOff { rated_watts, .. } = activation {
            if !(rated_watts >= 0.0) || !rated_watts.is_finite() {
                return Err(Error::InvalidSpec("rated power must be finite and >= 0".into()));
            }
        }
        Ok(Self {
            class,
            signature,
            activation,
        })
    }

    pub fn class(&self) -> DeviceClass {
        self.class
    }

    pub fn signature(&self) -> &SignatureTemplate {
        &self.signature
    }

    pub fn activation(&self) -> &ActivationModel {
        &self.activation
    }

    pub fn components(&self) -> usize {
        self.signature.components()
    }

    pub fn samples_per_period(&self) -> usize {
        self.signature.template.rows()
    }

    /// `K x T` activations for the timeline.
    pub fn sample_activations(&self, timeline: &Timeline, seed: u64) -> Result<Matrix> {
        let Timeline { start, cadence, periods } = *timeline;
        match &self.activation {
            ActivationModel::OnOff { table, partition, rated_watts } => {
                let states = sample_onoff(table, partition, start, cadence, periods, false, seed)?;
                Ok(Matrix::from_fn(1, periods, |_, t| if states[t] { *rated_watts } else { 0.0 }))
            }
            ActivationModel::MultiState { table, partition, magnitudes } => {
                sample_multistate_activation(table, magnitudes, partition, start, cadence, periods, 0, seed)
            }
            ActivationModel::Complex { template, noise } => {
                let a = sample_complex_activation(template, noise, start, cadence, periods, seed);
                Matrix::from_col_major(1, periods, a)
            }
            ActivationModel::MultiSignature { template, noise, alpha, mode } => {
                sample_multisig_activation(template, noise, alpha, *mode, start, cadence, periods, seed)
            }
        }
    }
}

/// One synthesized device: normalized signature, activations and current.
#[derive(Debug, Clone, PartialEq)]
pub struct DeviceOutput {
    pub signatures: Matrix,
    pub activations: Matrix,
    pub current: CurrentMatrix,
}

fn draw_device(spec: &DeviceSpec, v0: &[f64], timeline: &Timeline, seed: u64) -> Result<(Matrix, Matrix)> {
    if spec.samples_per_period() != v0.len() {
        return Err(Error::InvalidSpec(format!(
            "signature has {} samples per period, mains waveform has {}",
            spec.samples_per_period(),
            v0.len()
        )));
    }
    let raw = sample_signature(&spec.signature, seed::derive(seed, 0));
    let signatures = normalize_signatures(&raw, v0)?;
    let activations = spec.sample_activations(timeline, seed::derive(seed, 1))?;
    Ok((signatures, activations))
}

/// `dst += S * A`, skipping zero activations.
fn accumulate(dst: &mut Matrix, signatures: &Matrix, activations: &Matrix) {
    for t in 0..activations.cols() {
        for k in 0..activations.rows() {
            let a = activations[(k, t)];
            if a == 0.0 {
                continue;
            }
            let s = signatures.col(k);
            for (d, &sv) in dst.col_mut(t).iter_mut().zip(s) {
                *d += a * sv;
            }
        }
    }
}

/// Draws one device: `i(n,t) = sum_k s(n,k) a(k,t)` with the signature
/// normalized against `v0`, so per-period power equals `sum_k a(k,t)`.
pub fn synthesize_device(spec: &DeviceSpec, v0: &[f64], timeline: &Timeline, seed: u64) -> Result<DeviceOutput> {
    let (signatures, activations) = draw_device(spec, v0, timeline, seed)?;
    let mut current = Matrix::zeros(v0.len(), timeline.periods);
    accumulate(&mut current, &signatures, &activations);
    Ok(DeviceOutput {
        signatures,
        activations,
        current: CurrentMatrix::new(current)?,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CategorySpec {
    pub id: String,
    pub devices: Vec<DeviceSpec>,
}

impl CategorySpec {
    pub fn new(id: impl Into<String>, devices: Vec<DeviceSpec>) -> Result<Self> {
        let id = id.into();
        if devices.is_empty() {
            return Err(Error::InvalidSpec(format!("category {id} has no devices")));
        }
        Ok(Self { id, devices })
    }

    /// Class of the first device; categories group similar equipment.
    pub fn class(&self) -> DeviceClass {
        self.devices[0].class()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mains {
    pub rms: f64,
    pub hz: f64,
}

impl Default for Mains {
    fn default() -> Self {
        Self { rms: 230.0, hz: 50.0 }
    }
}

/// How per-category ground truth is stored.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GroundTruth {
    /// Per-category power at the waveform cadence.
    #[default]
    Power,
    /// Per-category current waveforms.
    Current,
}

/// 2018-01-01T00:00:00Z, a Monday.
pub const DEFAULT_START: f64 = 1_514_764_800.0;

/// Scalars shared by every building of a dataset.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimSettings {
    pub start: f64,
    /// Seconds; the last partial waveform is dropped.
    pub span: f64,
    /// Seconds between recorded waveforms.
    pub cadence: f64,
    /// Samples per waveform.
    pub samples_per_period: usize,
    pub mains: Mains,
    /// Amperes; `None` picks 0.1% of the peak noiseless total current.
    pub noise_std: Option<f64>,
}

impl Default for SimSettings {
    fn default() -> Self {
        Self {
            start: DEFAULT_START,
            span: 14.0 * crate::stats::SECONDS_PER_DAY,
            cadence: 30.0,
            samples_per_period: 200,
            mains: Mains::default(),
            noise_std: None,
        }
    }
}

impl SimSettings {
    pub fn validate(&self) -> Result<()> {
        if self.samples_per_period < 2 {
            return Err(Error::InvalidSpec("at least two samples per waveform are required".into()));
        }
        if !(self.cadence > 0.0) || !self.cadence.is_finite() {
            return Err(Error::InvalidSpec("cadence must be positive".into()));
        }
        if !self.start.is_finite() {
            return Err(Error::InvalidSpec("start must be finite".into()));
        }
        if !(self.span >= self.cadence) || !self.span.is_finite() {
            return Err(Error::InvalidSpec("span must cover at least one waveform".into()));
        }
        if !(self.mains.rms > 0.0) || !(self.mains.hz > 0.0) {
            return Err(Error::InvalidSpec("mains RMS voltage and frequency must be positive".into()));
        }
        if let Some(s) = self.noise_std {
            if !(s >= 0.0) || !s.is_finite() {
                return Err(Error::InvalidSpec("noise_std must be finite and >= 0".into()));
            }
        }
        Ok(())
    }

    pub fn timeline(&self) -> Timeline {
        Timeline {
            start: self.start,
            cadence: self.cadence,
            periods: libm::floor(self.span / self.cadence) as usize,
        }
    }

    pub fn voltage(&self) -> Vec<f64> {
        voltage_waveform(self.mains.rms, self.samples_per_period)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BuildingSpec {
    pub name: String,
    pub categories: Vec<CategorySpec>,
    pub settings: SimSettings,
    pub ground_truth: GroundTruth,
}

impl BuildingSpec {
    pub fn validate(&self) -> Result<()> {
        self.settings.validate()?;
        if self.categories.is_empty() {
            return Err(Error::InvalidSpec(format!("building {} has no categories", self.name)));
        }
        let n = self.settings.samples_per_period;
        for cat in &self.categories {
            if cat.devices.is_empty() {
                return Err(Error::InvalidSpec(format!("category {} has no devices", cat.id)));
            }
            if let Some(d) = cat.devices.iter().find(|d| d.samples_per_period() != n) {
                return Err(Error::InvalidSpec(format!(
                    "category {}: signature has {} samples per period, building uses {n}",
                    cat.id,
                    d.samples_per_period()
                )));
            }
        }
        for (i, a) in self.categories.iter().enumerate() {
            if self.categories[..i].iter().any(|b| b.id == a.id) {
                return Err(Error::InvalidSpec(format!("duplicate category id {}", a.id)));
            }
        }
        Ok(())
    }

    /// Number of categories of each class, in A, B, C, D order.
    pub fn class_counts(&self) -> [usize; 4] {
        let mut out = [0; 4];
        for c in &self.categories {
            out[c.class() as usize] += 1;
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CategoryOutput {
    pub id: String,
    /// Sum of the activations of every device and component.
    pub power: PowerSeries,
    /// Only kept for [`GroundTruth::Current`] buildings.
    pub current: Option<CurrentMatrix>,
    /// Ground-truth activations, one `K x T` matrix per device.
    pub activations: Vec<Matrix>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedDataset {
    pub timeline: Timeline,
    pub voltage: Vec<f64>,
    pub total: CurrentMatrix,
    /// `total` minus the sum of category currents.
    pub noise: Matrix,
    pub noise_std: f64,
    pub categories: Vec<CategoryOutput>,
}

/// Seed stream of the additive sample noise, kept away from category indices.
const NOISE_STREAM: u64 = u64::MAX;

/// Seed of device `device` in category `category` of a building seeded with
/// `building_seed`.
pub fn device_seed(building_seed: u64, category: usize, device: usize) -> u64 {
    seed::derive(seed::derive(building_seed, category as u64), device as u64)
}

/// [`synthesize_building_with`] without a category callback.
pub fn synthesize_building(spec: &BuildingSpec, seed: u64) -> Result<SimulatedDataset> {
    synthesize_building_with(spec, seed, |_, _| {})
}

/// Synthesizes a building, handing each category current to `visit` as soon
/// as it is complete. Category currents are only retained in the returned
/// dataset for [`GroundTruth::Current`] buildings, so callers that stream
/// them elsewhere need not hold every category in memory.
pub fn synthesize_building_with(
    spec: &BuildingSpec,
    seed: u64,
    mut visit: impl FnMut(usize, &CurrentMatrix),
) -> Result<SimulatedDataset> {
    spec.validate()?;
    let settings = &spec.settings;
    let timeline = settings.timeline();
    let v0 = settings.voltage();
    let n = v0.len();
    let t_len = timeline.periods;
    let mut clean = Matrix::zeros(n, t_len);
    let mut categories = Vec::with_capacity(spec.categories.len());
    for (ci, cat) in spec.categories.iter().enumerate() {
        let mut current = Matrix::zeros(n, t_len);
        let mut power = vec![0.0; t_len];
        let mut activations = Vec::with_capacity(cat.devices.len());
        for (di, dev) in cat.devices.iter().enumerate() {
            let (s, a) = draw_device(dev, &v0, &timeline, device_seed(seed, ci, di))?;
            accumulate(&mut current, &s, &a);
            for (t, p) in power.iter_mut().enumerate() {
                *p += a.col(t).iter().sum::<f64>();
            }
            activations.push(a);
        }
        clean.add_assign(&current);
        let current = CurrentMatrix::new(current)?;
        visit(ci, &current);
        categories.push(CategoryOutput {
            id: cat.id.clone(),
            power: PowerSeries::new(timeline.start, timeline.cadence, power)?,
            current: (spec.ground_truth == GroundTruth::Current).then_some(current),
            activations,
        });
    }
    let noise_std = settings.noise_std.unwrap_or_else(|| 0.001 * clean.max_abs());
    let mut total = clean.clone();
    if noise_std > 0.0 {
        let normal = Normal::new(0.0, noise_std).map_err(|_| Error::InvalidSpec("bad noise_std".into()))?;
        let mut rng = seed::rng(seed::derive(seed, NOISE_STREAM));
        for v in total.as_mut_slice() {
            *v += normal.sample(&mut rng);
        }
    }
    let noise = total.sub(&clean);
    Ok(SimulatedDataset {
        timeline,
        voltage: v0,
        total: CurrentMatrix::new(total)?,
        noise,
        noise_std,
        categories,
    })
}
