//! Reproducible synthetic cohorts standing in for restricted clinical data.
//!
//! Every channel of a study is `coupling * s(t) + noise_level * n_i(t)`,
//! where `s` is one shared band-limited latent source per study and the
//! `n_i` are independent white Gaussian noises. The latent source places a
//! unit-power random-phase component on every Fourier bin between 0.5 and
//! 50 Hz, so each clinical band carries plantable coherence and the expected
//! squared coherence at a band bin is (c^2 / (c^2 + noise^2))^2 — rising
//! monotonically with the coupling c.
//!
//! Apnea-group studies carry apnea event annotations, control studies only
//! benign ones, so cohort grouping downstream still runs on annotations.
//! Generation derives one RNG per study from (seed, study index); studies
//! can be produced independently and in any order.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
use core::fmt;
use num_complex::Complex64;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cohort::{EventAnnotation, Group, StudyRecord};
use crate::fft::FftPlan;
use crate::signal::{MultichannelSignal, SleepStage, StageAnnotation, EPOCH_SECONDS};

/// Frequency range the latent source occupies, covering all clinical bands.
const LATENT_LO_HZ: f64 = 0.5;
const LATENT_HI_HZ: f64 = 50.0;

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticCohortConfig {
    pub n_studies_per_group: usize,
    pub channels: usize,
    pub sample_rate: u32,
    pub duration_s: u32,
    /// Latent coupling of apnea-group channels, in [0, 1].
    pub coupling_apnea: f64,
    /// Latent coupling of control-group channels, in [0, 1].
    pub coupling_control: f64,
    pub noise_level: f64,
    pub seed: u64,
}

impl Default for SyntheticCohortConfig {
    fn default() -> Self {
        Self {
            n_studies_per_group: 20,
            channels: 7,
            sample_rate: 256,
            duration_s: 300,
            coupling_apnea: 0.8,
            coupling_control: 0.2,
            noise_level: 1.0,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SynthError {
    CouplingOutOfRange { value: f64 },
    TooFewChannels { got: usize },
    NonPositiveNoise { value: f64 },
    EmptyCohort,
    ZeroDuration,
    ZeroSampleRate,
}

impl fmt::Display for SynthError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SynthError::CouplingOutOfRange { value } => {
                write!(f, "coupling {value} outside [0, 1]")
            }
            SynthError::TooFewChannels { got } => write!(f, "need at least 2 channels, got {got}"),
            SynthError::NonPositiveNoise { value } => {
                write!(f, "noise level {value} must be positive")
            }
            SynthError::EmptyCohort => write!(f, "need at least 1 study per group"),
            SynthError::ZeroDuration => write!(f, "study duration must be positive"),
            SynthError::ZeroSampleRate => write!(f, "sample rate must be positive"),
        }
    }
}

impl core::error::Error for SynthError {}

impl SyntheticCohortConfig {
    pub fn validate(&self) -> Result<(), SynthError> {
        for value in [self.coupling_apnea, self.coupling_control] {
            if !(0.0..=1.0).contains(&value) {
                return Err(SynthError::CouplingOutOfRange { value });
            }
        }
        if self.channels < 2 {
            return Err(SynthError::TooFewChannels { got: self.channels });
        }
        if self.noise_level.is_nan() || self.noise_level <= 0.0 {
            return Err(SynthError::NonPositiveNoise {
                value: self.noise_level,
            });
        }
        if self.n_studies_per_group == 0 {
            return Err(SynthError::EmptyCohort);
        }
        if self.duration_s == 0 {
            return Err(SynthError::ZeroDuration);
        }
        if self.sample_rate == 0 {
            return Err(SynthError::ZeroSampleRate);
        }
        Ok(())
    }

    pub fn n_studies(&self) -> usize {
        2 * self.n_studies_per_group
    }

    /// Intended cohort of the study at `index`: the first half of the
    /// indices are apnea studies. The generated record still reports
    /// [`Group::Unassigned`]; grouping is re-derived from the planted event
    /// annotations downstream.
    pub fn intended_group(&self, index: usize) -> Group {
        if index < self.n_studies_per_group {
            Group::Apnea
        } else {
            Group::NoApnea
        }
    }
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e3779b97f4a7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d049bb133111eb);
    x ^ (x >> 31)
}

pub(crate) fn derive_seed(seed: u64, index: u64) -> u64 {
    splitmix64(seed ^ splitmix64(index.wrapping_add(1)))
}

fn gaussian_pair<R: RngCore>(rng: &mut R) -> (f64, f64) {
    // Box-Muller; u1 in (0, 1]
    let u1 = 1.0 - rng.gen::<f64>();
    let u2: f64 = rng.gen();
    let r = libm::sqrt(-2.0 * libm::log(u1));
    let theta = 2.0 * PI * u2;
    (r * libm::cos(theta), r * libm::sin(theta))
}

fn gaussian_noise<R: RngCore>(rng: &mut R, len: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(len + 1);
    while out.len() < len {
        let (a, b) = gaussian_pair(rng);
        out.push(a);
        out.push(b);
    }
    out.truncate(len);
    out
}

/// Shared latent source: random-phase unit-epoch-power components on every
/// full-length Fourier bin inside [0.5, 50) Hz, synthesized by inverse FFT.
fn latent_source<R: RngCore>(rng: &mut R, n: usize, sample_rate: f64) -> Vec<f64> {
    let mut spectrum = vec![Complex64::new(0.0, 0.0); n];
    let scale = libm::sqrt(n as f64);
    let hi = LATENT_HI_HZ.min(sample_rate / 2.0);
    for k in 1..n / 2 {
        let f = k as f64 * sample_rate / n as f64;
        if f >= LATENT_LO_HZ && f < hi {
            let phase = 2.0 * PI * rng.gen::<f64>();
            let coeff = Complex64::from_polar(scale, phase);
            spectrum[k] = coeff;
            spectrum[n - k] = coeff.conj();
        }
    }
    let plan = FftPlan::new(n);
    plan.inverse(&spectrum).iter().map(|z| z.re).collect()
}

/// Generates the study at `index` of the cohort; deterministic in
/// (config.seed, index).
pub fn generate_synthetic_study(
    config: &SyntheticCohortConfig,
    index: usize,
) -> Result<StudyRecord, SynthError> {
    config.validate()?;
    let group = config.intended_group(index);
    let coupling = match group {
        Group::Apnea => config.coupling_apnea,
        _ => config.coupling_control,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, index as u64));

    let n = config.duration_s as usize * config.sample_rate as usize;
    let latent = latent_source(&mut rng, n, config.sample_rate as f64);
    let rows: Vec<Vec<f64>> = (0..config.channels)
        .map(|_| {
            let noise = gaussian_noise(&mut rng, n);
            latent
                .iter()
                .zip(noise)
                .map(|(&s, e)| coupling * s + config.noise_level * e)
                .collect()
        })
        .collect();
    let ids: Vec<String> = (0..config.channels).map(|c| format!("EEG{}", c + 1)).collect();
    let signal = MultichannelSignal::new(ids, config.sample_rate, rows)
        .expect("generated rows share length");

    let n_epochs = config.duration_s as usize / EPOCH_SECONDS as usize;
    let stage_annotations: Vec<StageAnnotation> = (0..n_epochs)
        .map(|e| StageAnnotation {
            onset_s: (e as u32 * EPOCH_SECONDS) as f64,
            duration_s: EPOCH_SECONDS as f64,
            stage: SleepStage::SCORED[e % SleepStage::SCORED.len()],
        })
        .collect();

    let mut event_annotations = vec![EventAnnotation {
        onset_s: 10.0_f64.min(config.duration_s as f64 / 2.0),
        duration_s: 5.0,
        label: String::from("Snore"),
    }];
    if group == Group::Apnea {
        let labels = ["Obstructive Apnea", "Central Apnea", "Mixed Apnea"];
        let label = labels[rng.gen_range(0..labels.len())];
        event_annotations.push(EventAnnotation {
            onset_s: (config.duration_s as f64 * 0.5).min(config.duration_s as f64 - 1.0),
            duration_s: 1.0,
            label: String::from(label),
        });
    }

    let ordinal = index % config.n_studies_per_group;
    let study_id = match group {
        Group::Apnea => format!("synth-a{ordinal:03}"),
        _ => format!("synth-c{ordinal:03}"),
    };
    Ok(StudyRecord {
        study_id,
        signal,
        stage_annotations,
        event_annotations,
        group: Group::Unassigned,
    })
}

/// The whole cohort: apnea studies first, then controls.
pub fn generate_synthetic_cohort(
    config: &SyntheticCohortConfig,
) -> Result<Vec<StudyRecord>, SynthError> {
    (0..config.n_studies())
        .map(|i| generate_synthetic_study(config, i))
        .collect()
}
