//! Bundled signature shapes, activation profiles and ready-made building
//! mixes, so datasets can be generated without measured data.
//!
//! Switching and multi-state probabilities are per 30-second step.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use super::{
    ActivationModel, BuildingSpec, CategorySpec, DeviceClass, DeviceSpec, GroundTruth, SimSettings,
};
use crate::error::{Error, Result};
use crate::genmodel::{
    ActivationTemplate, ArmaParams, DayCalendar, DeltaMode, MultiStateTable, SignatureTemplate,
    TimePartition, TransitionTable, HALF_MINUTES_PER_DAY,
};
use crate::linalg::Matrix;

/// Current waveform shapes over one mains period (voltage is `sin`).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SignatureShape {
    /// In phase with the voltage (heaters, kettles).
    Resistive,
    /// Capacitor-input rectifier: narrow pulses near the voltage peaks
    /// (IT equipment, electronic ballasts).
    Rectifier,
    /// Lagging fundamental with a small third harmonic.
    Motor,
    /// Lagging fundamental with strong odd harmonics.
    Fluorescent,
}

impl SignatureShape {
    pub const ALL: [SignatureShape; 4] = [
        SignatureShape::Resistive,
        SignatureShape::Rectifier,
        SignatureShape::Motor,
        SignatureShape::Fluorescent,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SignatureShape::Resistive => "resistive",
            SignatureShape::Rectifier => "rectifier",
            SignatureShape::Motor => "motor",
            SignatureShape::Fluorescent => "fluorescent",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|s| s.name() == name)
    }

    fn value(self, theta: f64) -> f64 {
        match self {
            SignatureShape::Resistive => libm::sin(theta),
            SignatureShape::Rectifier => {
                let s = libm::sin(theta + 0.2);
                let pulse = (libm::fabs(s) - 0.7).max(0.0) / 0.3;
                if s < 0.0 {
                    -pulse
                } else {
                    pulse
                }
            }
            SignatureShape::Motor => libm::sin(theta - 0.6) + 0.08 * libm::sin(3.0 * theta - 0.3),
            SignatureShape::Fluorescent => {
                libm::sin(theta - 0.3) + 0.25 * libm::sin(3.0 * theta + 1.0) + 0.1 * libm::sin(5.0 * theta)
            }
        }
    }

    pub fn waveform(self, n: usize) -> Vec<f64> {
        (0..n).map(|i| self.value(2.0 * PI * i as f64 / n as f64)).collect()
    }

    /// `N x 1` template.
    pub fn matrix(self, n: usize) -> Matrix {
        signature_matrix(&[self], n)
    }
}

/// One column per shape.
pub fn signature_matrix(shapes: &[SignatureShape], n: usize) -> Matrix {
    let data = shapes.iter().flat_map(|s| s.waveform(n)).collect();
    Matrix::from_col_major(n, shapes.len(), data).expect("sizes agree")
}

/// Daily load curves, as a fraction of peak, for working days and days off.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LoadProfile {
    /// Computers and office equipment.
    Office,
    /// Air handling and ventilation.
    Hvac,
    Lighting,
    /// Runs every day with a night-time heating peak.
    HeatPump,
    /// Server rooms and other constant loads.
    Baseload,
}

fn smoothstep(x: f64, a: f64, b: f64) -> f64 {
    let u = ((x - a) / (b - a)).clamp(0.0, 1.0);
    u * u * (3.0 - 2.0 * u)
}

fn window(h: f64, on: (f64, f64), off: (f64, f64)) -> f64 {
    smoothstep(h, on.0, on.1) * (1.0 - smoothstep(h, off.0, off.1))
}

impl LoadProfile {
    pub const ALL: [LoadProfile; 5] = [
        LoadProfile::Office,
        LoadProfile::Hvac,
        LoadProfile::Lighting,
        LoadProfile::HeatPump,
        LoadProfile::Baseload,
    ];

    pub fn name(self) -> &'static str {
        match self {
            LoadProfile::Office => "office",
            LoadProfile::Hvac => "hvac",
            LoadProfile::Lighting => "lighting",
            LoadProfile::HeatPump => "heat_pump",
            LoadProfile::Baseload => "baseload",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|s| s.name() == name)
    }

    /// Fraction of peak at hour `h` in `[0, 24)`.
    pub fn shape(self, h: f64, day_off: bool) -> f64 {
        match (self, day_off) {
            (LoadProfile::Office, false) => {
                0.2 + 0.8 * window(h, (7.5, 9.0), (17.5, 19.5)) - 0.15 * window(h, (12.0, 12.5), (13.5, 14.0))
            }
            (LoadProfile::Office, true) => 0.2,
            (LoadProfile::Hvac, false) => {
                0.3 + 0.6 * window(h, (5.5, 7.0), (19.0, 20.5)) + 0.1 * window(h, (11.0, 13.0), (15.0, 17.0))
            }
            (LoadProfile::Hvac, true) => 0.3,
            (LoadProfile::Lighting, false) => 0.1 + 0.9 * window(h, (6.5, 8.0), (19.0, 21.0)),
            (LoadProfile::Lighting, true) => 0.1,
            (LoadProfile::HeatPump, false) => 0.6 + 0.3 * libm::cos(2.0 * PI * (h - 5.0) / 24.0),
            (LoadProfile::HeatPump, true) => 0.5 + 0.25 * libm::cos(2.0 * PI * (h - 5.0) / 24.0),
            (LoadProfile::Baseload, _) => 1.0,
        }
    }

    /// 30-second week-day/day-off template peaking at `peak_watts`.
    pub fn template(self, peak_watts: f64, calendar: DayCalendar) -> Result<ActivationTemplate> {
        let values = (0..2 * HALF_MINUTES_PER_DAY)
            .map(|i| {
                let day_off = i >= HALF_MINUTES_PER_DAY;
                let h = (i % HALF_MINUTES_PER_DAY) as f64 / 120.0;
                peak_watts * self.shape(h, day_off)
            })
            .collect();
        ActivationTemplate::new(TimePartition::HalfMinuteDayType(calendar), values)
    }
}

/// Hour-of-day on/off behaviour for class A devices.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SwitchingProfile {
    /// Used during office hours (coffee machines, printers, kitchenettes).
    WorkHours,
    /// Thermostat cycling around the clock (fridges, freezers).
    Cycling,
    /// Evening and early-morning use (domestic lights, TV).
    Evening,
    /// Short uses around meals (kettles, microwaves).
    Mealtimes,
}

impl SwitchingProfile {
    pub const ALL: [SwitchingProfile; 4] = [
        SwitchingProfile::WorkHours,
        SwitchingProfile::Cycling,
        SwitchingProfile::Evening,
        SwitchingProfile::Mealtimes,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SwitchingProfile::WorkHours => "work_hours",
            SwitchingProfile::Cycling => "cycling",
            SwitchingProfile::Evening => "evening",
            SwitchingProfile::Mealtimes => "mealtimes",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|s| s.name() == name)
    }

    /// `(switch-on, switch-off)` probabilities per step during hour `h`.
    pub fn rates(self, h: usize) -> (f64, f64) {
        match self {
            SwitchingProfile::WorkHours if (8..18).contains(&h) => (1.0 / 120.0, 1.0 / 10.0),
            SwitchingProfile::WorkHours => (1.0 / 5000.0, 1.0 / 4.0),
            SwitchingProfile::Cycling => (1.0 / 40.0, 1.0 / 30.0),
            SwitchingProfile::Evening if (17..23).contains(&h) => (1.0 / 60.0, 1.0 / 120.0),
            SwitchingProfile::Evening if h == 7 => (1.0 / 60.0, 1.0 / 30.0),
            SwitchingProfile::Evening => (1.0 / 3000.0, 1.0 / 20.0),
            SwitchingProfile::Mealtimes if matches!(h, 7 | 8 | 12 | 18 | 19) => (1.0 / 150.0, 1.0 / 6.0),
            SwitchingProfile::Mealtimes => (1.0 / 4000.0, 1.0 / 6.0),
        }
    }

    /// Hourly transition table.
    pub fn table(self) -> TransitionTable {
        let (on, off): (Vec<f64>, Vec<f64>) = (0..24).map(|h| self.rates(h)).unzip();
        TransitionTable::from_switching(&on, &off).expect("probabilities in range")
    }
}

/// Hourly multi-state chain with `k` on states: from off, switch on with
/// probability `p_on` into a uniformly chosen state; from an on state, turn
/// off with `p_off` or move to another on state with `p_switch`. Office
/// hours (8:00 to 19:00) are busier than nights.
pub fn multistate_table(k: usize) -> Result<MultiStateTable> {
    if k < 1 {
        return Err(Error::InvalidInput("need at least one on state".into()));
    }
    let build = |p_on: f64, p_switch: f64, p_off: f64| {
        let p_switch = if k == 1 { 0.0 } else { p_switch };
        Matrix::from_fn(k + 1, k + 1, |prev, next| match (prev, next) {
            (0, 0) => 1.0 - p_on,
            (0, _) => p_on / k as f64,
            (_, 0) => p_off,
            (p, q) if p == q => 1.0 - p_off - p_switch,
            _ => p_switch / (k - 1) as f64,
        })
    };
    let busy = build(1.0 / 60.0, 1.0 / 40.0, 1.0 / 200.0);
    let quiet = build(1.0 / 2000.0, 1.0 / 40.0, 1.0 / 20.0);
    MultiStateTable::new((0..24).map(|h| if (8..19).contains(&h) { busy.clone() } else { quiet.clone() }).collect())
}

/// Class A device.
pub fn on_off_device(shape: SignatureShape, profile: SwitchingProfile, rated_watts: f64, n: usize) -> Result<DeviceSpec> {
    DeviceSpec::new(
        DeviceClass::A,
        SignatureTemplate::with_default_sigma(shape.matrix(n))?,
        ActivationModel::OnOff {
            table: profile.table(),
            partition: TimePartition::Hourly,
            rated_watts,
        },
    )
}

/// Class B device with one signature per state.
pub fn multistate_device(shapes: &[SignatureShape], magnitudes: &[f64], n: usize) -> Result<DeviceSpec> {
    DeviceSpec::new(
        DeviceClass::B,
        SignatureTemplate::with_default_sigma(signature_matrix(shapes, n))?,
        ActivationModel::MultiState {
            table: multistate_table(magnitudes.len())?,
            partition: TimePartition::Hourly,
            magnitudes: magnitudes.to_vec(),
        },
    )
}

/// Class C device.
pub fn varying_load_device(shape: SignatureShape, profile: LoadProfile, peak_watts: f64, n: usize) -> Result<DeviceSpec> {
    DeviceSpec::new(
        DeviceClass::C,
        SignatureTemplate::with_default_sigma(shape.matrix(n))?,
        ActivationModel::Complex {
            template: profile.template(peak_watts, DayCalendar::default())?,
            noise: ArmaParams::default_log_noise(),
        },
    )
}

/// Class D device with a symmetric Dirichlet(2) split over its signatures.
pub fn varying_signature_device(
    shapes: &[SignatureShape],
    profile: LoadProfile,
    peak_watts: f64,
    n: usize,
) -> Result<DeviceSpec> {
    DeviceSpec::new(
        DeviceClass::D,
        SignatureTemplate::with_default_sigma(signature_matrix(shapes, n))?,
        ActivationModel::MultiSignature {
            template: profile.template(peak_watts, DayCalendar::default())?,
            noise: ArmaParams::default_log_noise(),
            alpha: vec![2.0; shapes.len()],
            mode: DeltaMode::Once,
        },
    )
}

/// Categories per class (A, B, C, D) of the eight SHED-style buildings.
pub const SHED_CLASS_MIX: [[usize; 4]; 8] = [
    [4, 0, 2, 3],
    [1, 4, 2, 3],
    [0, 2, 2, 3],
    [2, 0, 4, 3],
    [0, 3, 4, 1],
    [3, 0, 3, 4],
    [0, 0, 3, 2],
    [0, 0, 4, 4],
];

fn commercial_category(class: DeviceClass, variant: usize, n: usize) -> Result<Vec<DeviceSpec>> {
    use SignatureShape::*;
    match class {
        DeviceClass::A => {
            let rated = [500.0, 700.0, 900.0, 1200.0][variant % 4];
            let shape = [Resistive, Rectifier][variant % 2];
            (0..4)
                .map(|_| on_off_device(shape, SwitchingProfile::WorkHours, rated, n))
                .collect()
        }
        DeviceClass::B => {
            let k = 2 + variant % 2;
            let scale = 1.0 + 0.25 * (variant % 3) as f64;
            let magnitudes: Vec<f64> = [300.0, 700.0, 1200.0][..k].iter().map(|m| m * scale).collect();
            let shapes = &[Motor, Rectifier, Fluorescent][..k];
            (0..3).map(|_| multistate_device(shapes, &magnitudes, n)).collect()
        }
        DeviceClass::C => {
            let profile = LoadProfile::ALL[variant % 5];
            let peak = [12_000.0, 6_000.0, 4_000.0, 8_000.0, 3_000.0][variant % 5];
            let shape = [Motor, Rectifier, Fluorescent, Motor, Rectifier][variant % 5];
            (0..2).map(|_| varying_load_device(shape, profile, peak, n)).collect()
        }
        DeviceClass::D => {
            let k = 2 + variant % 2;
            let profile = [LoadProfile::Office, LoadProfile::Hvac, LoadProfile::HeatPump][variant % 3];
            let peak = [5_000.0, 10_000.0, 7_000.0][variant % 3];
            let shapes = &[Rectifier, Motor, Fluorescent][..k];
            Ok(vec![varying_signature_device(shapes, profile, peak, n)?])
        }
    }
}

/// SHED-style commercial building `number` (1 to 8). Buildings 1 to 6 keep
/// per-category power as ground truth, buildings 7 and 8 per-category
/// current.
pub fn shed_building(number: usize, settings: SimSettings) -> Result<BuildingSpec> {
    let mix = SHED_CLASS_MIX
        .get(number.wrapping_sub(1))
        .ok_or_else(|| Error::InvalidSpec(format!("SHED buildings are numbered 1 to 8, got {number}")))?;
    let n = settings.samples_per_period;
    let classes = [DeviceClass::A, DeviceClass::B, DeviceClass::C, DeviceClass::D];
    let mut categories = Vec::new();
    for (class, &count) in classes.iter().zip(mix) {
        for j in 0..count {
            let id = format!("{}", categories.len() + 1);
            categories.push(CategorySpec::new(id, commercial_category(*class, number + j, n)?)?);
        }
    }
    Ok(BuildingSpec {
        name: format!("building_{number}"),
        categories,
        settings,
        ground_truth: if number <= 6 { GroundTruth::Power } else { GroundTruth::Current },
    })
}

/// All eight SHED-style buildings.
pub fn shed_buildings(settings: SimSettings) -> Result<Vec<BuildingSpec>> {
    (1..=8).map(|b| shed_building(b, settings)).collect()
}

/// A home with five on/off appliances.
pub fn residential_building(settings: SimSettings) -> Result<BuildingSpec> {
    use SignatureShape::*;
    let n = settings.samples_per_period;
    let appliances: [(&str, SignatureShape, SwitchingProfile, f64); 5] = [
        ("fridge", Motor, SwitchingProfile::Cycling, 150.0),
        ("kettle", Resistive, SwitchingProfile::Mealtimes, 2000.0),
        ("microwave", Rectifier, SwitchingProfile::Mealtimes, 1200.0),
        ("lights", Fluorescent, SwitchingProfile::Evening, 200.0),
        ("tv", Rectifier, SwitchingProfile::Evening, 150.0),
    ];
    let categories = appliances
        .iter()
        .map(|&(id, shape, profile, watts)| CategorySpec::new(String::from(id), vec![on_off_device(shape, profile, watts, n)?]))
        .collect::<Result<Vec<_>>>()?;
    Ok(BuildingSpec {
        name: "residential".into(),
        categories,
        settings,
        ground_truth: GroundTruth::Power,
    })
}
