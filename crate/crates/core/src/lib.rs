//! Topological analysis of multichannel EEG connectivity networks.
//!
//! The crate implements the numeric chain from raw multichannel signals to
//! cohort-level statistics:
//!
//! 1. [`filter`] — Butterworth bandstop filtering of mains noise.
//! 2. [`signal`] — epoch segmentation against sleep-stage annotations.
//! 3. [`spectrum`] — smoothed periodograms, squared coherence, and per-band
//!    channel-to-channel distance matrices.
//! 4. [`persistence`] — Vietoris-Rips persistent homology (dimensions 0
//!    and 1) of a finite distance matrix, plus an exhaustive reduction kept
//!    as a test oracle.
//! 5. [`landscape`] — persistence landscapes and their vector-space
//!    operations.
//! 6. [`inference`] — two-group permutation testing on landscapes.
//! 7. [`cohort`] / [`synth`] — study records, apnea-annotation grouping, and
//!    a reproducible synthetic cohort generator.
//!
//! The crate is `no_std` (with `alloc`); all I/O, file formats, and the
//! command-line driver live in the companion `eegtopo` crate.

#![no_std]

extern crate alloc;

pub mod cohort;
pub mod fft;
pub mod filter;
pub mod inference;
pub mod landscape;
pub mod persistence;
pub mod signal;
pub mod spectrum;
pub mod synth;

pub use cohort::{assign_group, EventAnnotation, Group, StudyRecord, DEFAULT_APNEA_PATTERNS};
pub use fft::fourier_coefficients;
pub use filter::{bandstop_filter, design_bandstop, BandstopConfig, FilterError, SosFilter};
pub use inference::{
    permutation_test, stratified_test_matrix, InferenceError, LabeledLandscapeSet,
    PermutationTestResult, StratifiedTable,
};
pub use landscape::{
    average_landscapes, landscape_from_diagram, sup_difference, DifferenceStat, EssentialPolicy,
    LandscapeError, LandscapeGrid, PersistenceLandscape,
};
pub use persistence::{
    brute_force_persistence, rips_h0, rips_h1, FiniteMetric, MetricError, PersistenceDiagram,
    PersistenceError, PersistencePair,
};
pub use signal::{
    segment_epochs, Epoch, MultichannelSignal, Segmentation, SignalError, SleepStage,
    StageAnnotation, EPOCH_SECONDS,
};
pub use spectrum::{
    band_average, coherence_distance, epoch_band_distance_matrices, smoothed_cross_spectrum,
    squared_coherence, Band, BandDistanceMatrix, DistanceField, SmoothingKernel, SpectralMatrix,
    SpectrumError,
};
pub use synth::{
    generate_synthetic_cohort, generate_synthetic_study, SynthError, SyntheticCohortConfig,
};
