//! Multichannel signals, sleep stages, and epoch segmentation.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

/// Standard scoring label attached to each 30-second epoch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SleepStage {
    Awake,
    Nrem1,
    Nrem2,
    Nrem3,
    Rem,
}

impl SleepStage {
    /// Stages that enter inference; Awake is retained through preprocessing
    /// but has no cell in the result table.
    pub const SCORED: [SleepStage; 4] = [
        SleepStage::Nrem1,
        SleepStage::Nrem2,
        SleepStage::Nrem3,
        SleepStage::Rem,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            SleepStage::Awake => "Awake",
            SleepStage::Nrem1 => "NREM1",
            SleepStage::Nrem2 => "NREM2",
            SleepStage::Nrem3 => "NREM3",
            SleepStage::Rem => "REM",
        }
    }

    pub fn parse(name: &str) -> Option<SleepStage> {
        match name {
            "Awake" => Some(SleepStage::Awake),
            "NREM1" => Some(SleepStage::Nrem1),
            "NREM2" => Some(SleepStage::Nrem2),
            "NREM3" => Some(SleepStage::Nrem3),
            "REM" => Some(SleepStage::Rem),
            _ => None,
        }
    }
}

impl fmt::Display for SleepStage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SignalError {
    /// Fewer than two channels; coherence needs pairs.
    TooFewChannels { got: usize },
    /// Channel `id` has a different sample count than the first channel.
    ChannelLengthMismatch { id: String, got: usize, want: usize },
    ZeroSampleRate,
    /// Channel id list length does not match the sample rows.
    ChannelIdMismatch { ids: usize, rows: usize },
}

impl fmt::Display for SignalError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SignalError::TooFewChannels { got } => {
                write!(f, "need at least 2 channels, got {got}")
            }
            SignalError::ChannelLengthMismatch { id, got, want } => {
                write!(f, "channel {id} has {got} samples, expected {want}")
            }
            SignalError::ZeroSampleRate => write!(f, "sample rate must be positive"),
            SignalError::ChannelIdMismatch { ids, rows } => {
                write!(f, "{ids} channel ids for {rows} sample rows")
            }
        }
    }
}

impl core::error::Error for SignalError {}

/// Fixed-rate multichannel recording, stored channel-major.
#[derive(Debug, Clone, PartialEq)]
pub struct MultichannelSignal {
    channel_ids: Vec<String>,
    sample_rate: u32,
    samples: Vec<Vec<f64>>,
}

impl MultichannelSignal {
    pub fn new(
        channel_ids: Vec<String>,
        sample_rate: u32,
        samples: Vec<Vec<f64>>,
    ) -> Result<Self, SignalError> {
        if sample_rate == 0 {
            return Err(SignalError::ZeroSampleRate);
        }
        if samples.len() < 2 {
            return Err(SignalError::TooFewChannels { got: samples.len() });
        }
        if channel_ids.len() != samples.len() {
            return Err(SignalError::ChannelIdMismatch {
                ids: channel_ids.len(),
                rows: samples.len(),
            });
        }
        let want = samples[0].len();
        for (id, row) in channel_ids.iter().zip(&samples) {
            if row.len() != want {
                return Err(SignalError::ChannelLengthMismatch {
                    id: id.clone(),
                    got: row.len(),
                    want,
                });
            }
        }
        Ok(Self {
            channel_ids,
            sample_rate,
            samples,
        })
    }

    pub fn n_channels(&self) -> usize {
        self.samples.len()
    }

    /// Samples per channel.
    pub fn len(&self) -> usize {
        self.samples[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn duration_s(&self) -> f64 {
        self.len() as f64 / self.sample_rate as f64
    }

    pub fn channel_ids(&self) -> &[String] {
        &self.channel_ids
    }

    pub fn channel(&self, i: usize) -> &[f64] {
        &self.samples[i]
    }

    pub fn channels(&self) -> &[Vec<f64>] {
        &self.samples
    }

    /// Rebuild with the same ids and rate but new per-channel samples.
    pub fn with_samples(&self, samples: Vec<Vec<f64>>) -> Result<Self, SignalError> {
        Self::new(self.channel_ids.clone(), self.sample_rate, samples)
    }
}

/// One stage-scored interval, in seconds from recording start.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StageAnnotation {
    pub onset_s: f64,
    pub duration_s: f64,
    pub stage: SleepStage,
}

/// One fixed-length segment of the recording with its stage label.
///
/// `index` is the ordinal position of the segment in the full recording, so
/// record keys stay stable even when neighbouring epochs are dropped.
#[derive(Debug, Clone, PartialEq)]
pub struct Epoch {
    pub signal: MultichannelSignal,
    pub stage: SleepStage,
    pub index: usize,
}

impl Epoch {
    pub fn samples_per_channel(&self) -> usize {
        self.signal.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SegmentError {
    /// Annotation onset is not a multiple of the epoch length.
    UnalignedOnset { onset_s: f64 },
    /// Annotations must tile the recording without gaps or overlaps.
    NonContiguous { expected_s: f64, found_s: f64 },
    NegativeDuration { onset_s: f64 },
}

impl fmt::Display for SegmentError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SegmentError::UnalignedOnset { onset_s } => {
                write!(f, "annotation onset {onset_s} s is not aligned to the epoch length")
            }
            SegmentError::NonContiguous {
                expected_s,
                found_s,
            } => write!(
                f,
                "annotation gap or overlap: expected onset {expected_s} s, found {found_s} s"
            ),
            SegmentError::NegativeDuration { onset_s } => {
                write!(f, "annotation at {onset_s} s has negative duration")
            }
        }
    }
}

impl core::error::Error for SegmentError {}

/// Segmentation output with the bookkeeping counts the pipeline reports.
#[derive(Debug, Clone, PartialEq)]
pub struct Segmentation {
    pub epochs: Vec<Epoch>,
    /// Complete epochs with no covering stage annotation.
    pub unannotated: usize,
    /// Epochs discarded because a sample was NaN or infinite.
    pub dropped_nonfinite: usize,
}

pub const EPOCH_SECONDS: u32 = 30;

/// Cut a recording into fixed-length stage-labelled epochs.
///
/// Annotations must tile the recording contiguously with onsets on epoch
/// boundaries; only the final annotation may be cut short by the end of the
/// signal. The trailing partial epoch is discarded, epochs without a covering
/// annotation are skipped, and epochs containing non-finite samples are
/// dropped; both counts are reported.
pub fn segment_epochs(
    signal: &MultichannelSignal,
    annotations: &[StageAnnotation],
    epoch_seconds: u32,
) -> Result<Segmentation, SegmentError> {
    let epoch_len = (epoch_seconds as usize) * (signal.sample_rate() as usize);
    let n_complete = signal.len() / epoch_len;

    let mut sorted: Vec<StageAnnotation> = annotations.to_vec();
    sorted.sort_by(|a, b| a.onset_s.total_cmp(&b.onset_s));

    // Map each complete epoch index to a stage.
    let mut stages: Vec<Option<SleepStage>> = alloc::vec![None; n_complete];
    let mut cursor: Option<f64> = None;
    for ann in &sorted {
        if ann.duration_s < 0.0 {
            return Err(SegmentError::NegativeDuration {
                onset_s: ann.onset_s,
            });
        }
        let units = ann.onset_s / epoch_seconds as f64;
        if libm::floor(units) != units {
            return Err(SegmentError::UnalignedOnset {
                onset_s: ann.onset_s,
            });
        }
        if let Some(end) = cursor {
            if ann.onset_s != end {
                return Err(SegmentError::NonContiguous {
                    expected_s: end,
                    found_s: ann.onset_s,
                });
            }
        }
        cursor = Some(ann.onset_s + ann.duration_s);
        let first = units as usize;
        let covered = libm::floor(ann.duration_s / epoch_seconds as f64) as usize;
        // A short final annotation covers no complete epoch of its own.
        for slot in stages
            .iter_mut()
            .take((first + covered).min(n_complete))
            .skip(first)
        {
            *slot = Some(ann.stage);
        }
        // Truncated trailing annotation: cover whatever complete epochs the
        // signal still has room for.
        if ann.onset_s + ann.duration_s >= signal.duration_s() {
            for (k, slot) in stages.iter_mut().enumerate().skip(first) {
                if (k + 1) * epoch_len <= signal.len() && slot.is_none() {
                    *slot = Some(ann.stage);
                }
            }
        }
    }

    let mut epochs = Vec::new();
    let mut unannotated = 0;
    let mut dropped_nonfinite = 0;
    for (k, stage) in stages.iter().enumerate() {
        let Some(stage) = stage else {
            unannotated += 1;
            continue;
        };
        let lo = k * epoch_len;
        let hi = lo + epoch_len;
        let rows: Vec<Vec<f64>> = signal
            .channels()
            .iter()
            .map(|ch| ch[lo..hi].to_vec())
            .collect();
        if rows.iter().flatten().any(|x| !x.is_finite()) {
            dropped_nonfinite += 1;
            continue;
        }
        let chunk = signal
            .with_samples(rows)
            .expect("epoch slice preserves signal shape");
        epochs.push(Epoch {
            signal: chunk,
            stage: *stage,
            index: k,
        });
    }

    Ok(Segmentation {
        epochs,
        unannotated,
        dropped_nonfinite,
    })
}
