//! Smoothed periodograms, squared coherence, and per-band distance matrices.
//!
//! Per channel pair the chain is: Fourier coefficients -> cross-periodogram
//! d_i(w) d_j(w)* -> kernel smoothing across frequency bins (circular at the
//! spectrum edges) -> squared coherence |f_ij|^2 / (f_ii f_jj) -> distance
//! 1 - coherence -> arithmetic mean over the bins of each clinical band.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use num_complex::Complex64;

use crate::fft::{fourier_coefficients_with, FftPlan};
use crate::persistence::FiniteMetric;
use crate::signal::{Epoch, SleepStage};

/// Clinical EEG frequency bands.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Band {
    Delta,
    Theta,
    Alpha,
    Beta,
    Gamma,
}

impl Band {
    pub const ALL: [Band; 5] = [Band::Delta, Band::Theta, Band::Alpha, Band::Beta, Band::Gamma];

    /// Half-open edges [lo, hi) in Hz. The DC bin is excluded by Delta's
    /// 0.5 Hz lower edge; shared edges belong to the upper band only.
    pub fn edges(&self) -> (f64, f64) {
        match self {
            Band::Delta => (0.5, 4.0),
            Band::Theta => (4.0, 8.0),
            Band::Alpha => (8.0, 12.0),
            Band::Beta => (12.0, 30.0),
            Band::Gamma => (30.0, 50.0),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Band::Delta => "Delta",
            Band::Theta => "Theta",
            Band::Alpha => "Alpha",
            Band::Beta => "Beta",
            Band::Gamma => "Gamma",
        }
    }

    pub fn parse(name: &str) -> Option<Band> {
        Band::ALL.into_iter().find(|b| b.name() == name)
    }
}

impl fmt::Display for Band {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SpectrumError {
    /// Kernel must be non-empty, odd-length, non-negative, and sum to 1.
    BadKernel,
    KernelLongerThanSpectrum { kernel: usize, spectrum: usize },
    SpectrumLengthMismatch,
    /// No Fourier bin falls inside the band at this resolution.
    EmptyBand { lo_hz: f64, hi_hz: f64 },
}

impl fmt::Display for SpectrumError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SpectrumError::BadKernel => {
                write!(f, "kernel must be odd-length, non-negative, and sum to 1")
            }
            SpectrumError::KernelLongerThanSpectrum { kernel, spectrum } => {
                write!(f, "kernel of {kernel} weights exceeds spectrum of {spectrum} bins")
            }
            SpectrumError::SpectrumLengthMismatch => write!(f, "spectra have different lengths"),
            SpectrumError::EmptyBand { lo_hz, hi_hz } => {
                write!(f, "no Fourier bin falls in [{lo_hz}, {hi_hz}) Hz")
            }
        }
    }
}

impl core::error::Error for SpectrumError {}

/// Normalized symmetric smoothing kernel over frequency bins.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoothingKernel {
    weights: Vec<f64>,
}

impl SmoothingKernel {
    /// Identity kernel: no smoothing.
    pub fn identity() -> Self {
        Self { weights: vec![1.0] }
    }

    /// Uniform (Daniell) kernel of half-width `m`: 2m+1 equal weights.
    pub fn uniform(m: usize) -> Self {
        let len = 2 * m + 1;
        Self {
            weights: vec![1.0 / len as f64; len],
        }
    }

    /// Modified Daniell kernel of half-width `m`: uniform with half-weight
    /// endpoints. The default periodogram smoother.
    pub fn modified_daniell(m: usize) -> Self {
        if m == 0 {
            return Self::identity();
        }
        let mut weights = vec![1.0 / (2 * m) as f64; 2 * m + 1];
        weights[0] /= 2.0;
        weights[2 * m] /= 2.0;
        Self { weights }
    }

    /// Arbitrary weights; validated on use.
    pub fn custom(weights: Vec<f64>) -> Result<Self, SpectrumError> {
        let k = Self { weights };
        k.validate(usize::MAX)?;
        Ok(k)
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn half_width(&self) -> usize {
        self.weights.len() / 2
    }

    /// Expected squared coherence of independent noise under this kernel.
    pub fn independence_floor(&self) -> f64 {
        self.weights.iter().map(|w| w * w).sum()
    }

    fn validate(&self, spectrum_len: usize) -> Result<(), SpectrumError> {
        let len = self.weights.len();
        if len == 0 || len.is_multiple_of(2) {
            return Err(SpectrumError::BadKernel);
        }
        if self.weights.iter().any(|&w| !w.is_finite() || w < 0.0) {
            return Err(SpectrumError::BadKernel);
        }
        let sum: f64 = self.weights.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(SpectrumError::BadKernel);
        }
        if len > spectrum_len {
            return Err(SpectrumError::KernelLongerThanSpectrum {
                kernel: len,
                spectrum: spectrum_len,
            });
        }
        Ok(())
    }
}

/// Smoothed cross-spectrum of two channels:
///
/// f_ij(w_k) = sum_m kernel[m] * d_i(w_{k+m}) d_j(w_{k+m})*
///
/// with circular wrap-around at the spectrum edges. With i = j and the
/// identity kernel this is the raw periodogram.
pub fn smoothed_cross_spectrum(
    spec_i: &[Complex64],
    spec_j: &[Complex64],
    kernel: &SmoothingKernel,
) -> Result<Vec<Complex64>, SpectrumError> {
    if spec_i.len() != spec_j.len() {
        return Err(SpectrumError::SpectrumLengthMismatch);
    }
    kernel.validate(spec_i.len())?;
    let cross: Vec<Complex64> = spec_i
        .iter()
        .zip(spec_j)
        .map(|(a, b)| a * b.conj())
        .collect();
    Ok(smooth_circular(&cross, kernel))
}

fn smooth_circular(values: &[Complex64], kernel: &SmoothingKernel) -> Vec<Complex64> {
    let n = values.len();
    let m = kernel.half_width();
    let w = kernel.weights();
    (0..n)
        .map(|k| {
            let mut acc = Complex64::new(0.0, 0.0);
            for (off, &weight) in w.iter().enumerate() {
                let idx = (k + n + off - m) % n;
                acc += values[idx] * weight;
            }
            acc
        })
        .collect()
}

fn smooth_circular_real(values: &[f64], kernel: &SmoothingKernel) -> Vec<f64> {
    let n = values.len();
    let m = kernel.half_width();
    let w = kernel.weights();
    (0..n)
        .map(|k| {
            let mut acc = 0.0;
            for (off, &weight) in w.iter().enumerate() {
                let idx = (k + n + off - m) % n;
                acc += values[idx] * weight;
            }
            acc
        })
        .collect()
}

/// Relative floor below which a cross-power denominator counts as dead; the
/// pair then contributes zero coherence (maximal distance).
const POWER_FLOOR_REL: f64 = 1e-12;

/// Squared coherence per bin: |f_ij|^2 / (f_ii f_jj), clamped to [0, 1].
///
/// Bins whose denominator falls below `1e-12 * max(f_ii, f_jj)^2` are set to
/// zero: a dead channel carries no dependence evidence.
pub fn squared_coherence(f_ij: &[Complex64], f_ii: &[f64], f_jj: &[f64]) -> Vec<f64> {
    let scale = f_ii
        .iter()
        .chain(f_jj)
        .copied()
        .fold(0.0, f64::max);
    let floor = POWER_FLOOR_REL * scale * scale;
    f_ij.iter()
        .zip(f_ii.iter().zip(f_jj))
        .map(|(cross, (&pi, &pj))| {
            let denom = pi * pj;
            if denom <= floor || denom <= 0.0 {
                0.0
            } else {
                (cross.norm_sqr() / denom).clamp(0.0, 1.0)
            }
        })
        .collect()
}

/// Distance per bin: 1 - coherence.
pub fn coherence_distance(coherence: &[f64]) -> Vec<f64> {
    coherence.iter().map(|c| 1.0 - c).collect()
}

/// Hermitian cross-spectral matrix: one smoothed spectrum per unordered
/// channel pair, with real non-negative auto-spectra on the diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralMatrix {
    n_channels: usize,
    /// Hz per Fourier bin index.
    bin_hz: f64,
    /// upper triangle i < j in row order
    cross: Vec<Vec<Complex64>>,
    auto: Vec<Vec<f64>>,
}

impl SpectralMatrix {
    pub fn n_channels(&self) -> usize {
        self.n_channels
    }

    pub fn n_bins(&self) -> usize {
        self.auto[0].len()
    }

    pub fn bin_hz(&self) -> f64 {
        self.bin_hz
    }

    pub fn auto_spectrum(&self, i: usize) -> &[f64] {
        &self.auto[i]
    }

    fn pair_index(&self, i: usize, j: usize) -> usize {
        debug_assert!(i < j);
        // index into the flattened strict upper triangle
        i * self.n_channels - i * (i + 1) / 2 + (j - i - 1)
    }

    pub fn cross_spectrum(&self, i: usize, j: usize) -> &[Complex64] {
        &self.cross[self.pair_index(i, j)]
    }

    /// Hermitian accessor: value at (i, j, bin) for any ordering of i, j.
    pub fn value(&self, i: usize, j: usize, bin: usize) -> Complex64 {
        use core::cmp::Ordering;
        match i.cmp(&j) {
            Ordering::Equal => Complex64::new(self.auto[i][bin], 0.0),
            Ordering::Less => self.cross[self.pair_index(i, j)][bin],
            Ordering::Greater => self.cross[self.pair_index(j, i)][bin].conj(),
        }
    }
}

/// Smoothed cross-spectral matrix of one epoch.
pub fn epoch_spectral_matrix(
    epoch: &Epoch,
    kernel: &SmoothingKernel,
) -> Result<SpectralMatrix, SpectrumError> {
    let signal = &epoch.signal;
    let t_len = signal.len();
    kernel.validate(t_len)?;
    let plan = FftPlan::new(t_len);
    let spectra: Vec<Vec<Complex64>> = signal
        .channels()
        .iter()
        .map(|ch| fourier_coefficients_with(&plan, ch))
        .collect();
    spectral_matrix_from_spectra(&spectra, signal.sample_rate() as f64 / t_len as f64, kernel)
}

/// Assembles the Hermitian matrix from per-channel Fourier coefficients.
pub fn spectral_matrix_from_spectra(
    spectra: &[Vec<Complex64>],
    bin_hz: f64,
    kernel: &SmoothingKernel,
) -> Result<SpectralMatrix, SpectrumError> {
    let n_channels = spectra.len();
    let n_bins = spectra[0].len();
    kernel.validate(n_bins)?;
    let auto: Vec<Vec<f64>> = spectra
        .iter()
        .map(|s| {
            let power: Vec<f64> = s.iter().map(|z| z.norm_sqr()).collect();
            smooth_circular_real(&power, kernel)
        })
        .collect();
    let mut cross = Vec::with_capacity(n_channels * (n_channels - 1) / 2);
    for i in 0..n_channels {
        for j in (i + 1)..n_channels {
            cross.push(smoothed_cross_spectrum(&spectra[i], &spectra[j], kernel)?);
        }
    }
    Ok(SpectralMatrix {
        n_channels,
        bin_hz,
        cross,
        auto,
    })
}

/// Per-bin coherence distances for every channel pair.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceField {
    n_channels: usize,
    bin_hz: f64,
    n_bins: usize,
    /// upper triangle i < j, one distance-per-bin row each
    pairs: Vec<Vec<f64>>,
}

impl DistanceField {
    pub fn n_channels(&self) -> usize {
        self.n_channels
    }

    pub fn bin_hz(&self) -> f64 {
        self.bin_hz
    }

    pub fn pair_distances(&self, i: usize, j: usize) -> &[f64] {
        debug_assert!(i < j);
        &self.pairs[i * self.n_channels - i * (i + 1) / 2 + (j - i - 1)]
    }

    /// The channel-to-channel distance matrix at one bin.
    pub fn matrix_at(&self, bin: usize) -> FiniteMetric {
        let mut it = self.pairs.iter();
        let mut flat = vec![0.0; self.n_channels * self.n_channels];
        for i in 0..self.n_channels {
            for j in (i + 1)..self.n_channels {
                let v = it.next().expect("pair count matches")[bin];
                flat[i * self.n_channels + j] = v;
                flat[j * self.n_channels + i] = v;
            }
        }
        FiniteMetric::from_flat(self.n_channels, flat).expect("construction is symmetric")
    }
}

/// Coherence distances per bin from a smoothed spectral matrix.
pub fn coherence_distance_field(spectral: &SpectralMatrix) -> DistanceField {
    let n = spectral.n_channels();
    let mut pairs = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            let coh = squared_coherence(
                spectral.cross_spectrum(i, j),
                spectral.auto_spectrum(i),
                spectral.auto_spectrum(j),
            );
            pairs.push(coherence_distance(&coh));
        }
    }
    DistanceField {
        n_channels: n,
        bin_hz: spectral.bin_hz(),
        n_bins: spectral.auto_spectrum(0).len(),
        pairs,
    }
}

/// Symmetric per-band distance matrix with its pipeline key.
#[derive(Debug, Clone, PartialEq)]
pub struct BandDistanceMatrix {
    pub band: Band,
    pub epoch_index: usize,
    pub stage: SleepStage,
    pub values: FiniteMetric,
}

/// Entrywise mean of the distance field over the Fourier bins of `band`.
pub fn band_average(field: &DistanceField, band: Band) -> Result<FiniteMetric, SpectrumError> {
    let (lo, hi) = band.edges();
    band_average_range(field, lo, hi)
}

/// Entrywise mean over bins with lo <= f < hi (f = bin * bin_hz), restricted
/// to the non-aliased half of the spectrum and excluding DC.
pub fn band_average_range(
    field: &DistanceField,
    lo_hz: f64,
    hi_hz: f64,
) -> Result<FiniteMetric, SpectrumError> {
    let half = field.n_bins / 2;
    let mut bins: Vec<usize> = Vec::new();
    for k in 1..=half {
        let f = k as f64 * field.bin_hz;
        if f >= lo_hz && f < hi_hz {
            bins.push(k);
        }
    }
    if bins.is_empty() {
        return Err(SpectrumError::EmptyBand {
            lo_hz,
            hi_hz,
        });
    }
    let n = field.n_channels;
    let inv = 1.0 / bins.len() as f64;
    let mut it = field.pairs.iter();
    FiniteMetric::from_upper(n, |_, _| {
        let row = it.next().expect("pair count matches");
        bins.iter().map(|&k| row[k]).sum::<f64>() * inv
    })
    .map_err(|_| SpectrumError::SpectrumLengthMismatch)
}

/// Full per-epoch preprocessing: one distance matrix per clinical band.
pub fn epoch_band_distance_matrices(
    epoch: &Epoch,
    kernel: &SmoothingKernel,
) -> Result<Vec<BandDistanceMatrix>, SpectrumError> {
    epoch_band_distance_matrices_with_edges(
        epoch,
        kernel,
        &Band::ALL.map(|b| (b, b.edges().0, b.edges().1)),
    )
}

/// Same as [`epoch_band_distance_matrices`] with caller-supplied band edges.
pub fn epoch_band_distance_matrices_with_edges(
    epoch: &Epoch,
    kernel: &SmoothingKernel,
    bands: &[(Band, f64, f64)],
) -> Result<Vec<BandDistanceMatrix>, SpectrumError> {
    let spectral = epoch_spectral_matrix(epoch, kernel)?;
    let field = coherence_distance_field(&spectral);
    bands
        .iter()
        .map(|&(band, lo, hi)| {
            Ok(BandDistanceMatrix {
                band,
                epoch_index: epoch.index,
                stage: epoch.stage,
                values: band_average_range(&field, lo, hi)?,
            })
        })
        .collect()
}
