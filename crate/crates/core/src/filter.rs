//! Butterworth bandstop filtering of mains interference.
//!
//! Filters are designed in the analog domain (Butterworth lowpass prototype,
//! lowpass-to-bandstop transform) and discretized with a prewarped bilinear
//! transform, then run as a cascade of biquad sections in direct form II
//! transposed. [`SosFilter::magnitude_at`] evaluates the designed transfer
//! function on the unit circle, which the tests use as the analytic oracle
//! for measured sinusoid attenuation.

use alloc::vec::Vec;
use core::f64::consts::PI;
use num_complex::Complex64;

use crate::signal::MultichannelSignal;

#[derive(Debug, Clone, PartialEq)]
pub enum FilterError {
    /// A stopband edge reaches or exceeds the Nyquist frequency.
    EdgeAboveNyquist { edge_hz: f64, nyquist_hz: f64 },
    NonPositiveEdge { edge_hz: f64 },
    EdgesOutOfOrder { lo_hz: f64, hi_hz: f64 },
    ZeroOrder,
}

impl core::fmt::Display for FilterError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            FilterError::EdgeAboveNyquist { edge_hz, nyquist_hz } => write!(
                f,
                "stopband edge {edge_hz} Hz is at or above the Nyquist frequency {nyquist_hz} Hz"
            ),
            FilterError::NonPositiveEdge { edge_hz } => {
                write!(f, "stopband edge {edge_hz} Hz must be positive")
            }
            FilterError::EdgesOutOfOrder { lo_hz, hi_hz } => {
                write!(f, "stopband edges out of order: {lo_hz} Hz >= {hi_hz} Hz")
            }
            FilterError::ZeroOrder => write!(f, "filter order must be at least 1"),
        }
    }
}

impl core::error::Error for FilterError {}

/// One second-order section; the denominator is normalized so a0 = 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Biquad {
    pub b0: f64,
    pub b1: f64,
    pub b2: f64,
    pub a1: f64,
    pub a2: f64,
}

impl Biquad {
    fn response_at(&self, z: Complex64) -> Complex64 {
        let zi = 1.0 / z;
        let num = self.b0 + (self.b1 + self.b2 * zi) * zi;
        let den = 1.0 + (self.a1 + self.a2 * zi) * zi;
        num / den
    }
}

/// Cascade of second-order sections with the sample rate it was designed for.
#[derive(Debug, Clone, PartialEq)]
pub struct SosFilter {
    sections: Vec<Biquad>,
    sample_rate: f64,
}

impl SosFilter {
    pub fn sections(&self) -> &[Biquad] {
        &self.sections
    }

    /// |H(e^{i 2 pi f / fs})| of the designed cascade.
    pub fn magnitude_at(&self, freq_hz: f64) -> f64 {
        let z = Complex64::from_polar(1.0, 2.0 * PI * freq_hz / self.sample_rate);
        self.sections
            .iter()
            .map(|s| s.response_at(z).norm())
            .product()
    }

    /// Causal forward pass over one channel.
    pub fn apply(&self, input: &[f64]) -> Vec<f64> {
        let mut data = input.to_vec();
        for section in &self.sections {
            let mut s1 = 0.0;
            let mut s2 = 0.0;
            for x in data.iter_mut() {
                let y = section.b0 * *x + s1;
                s1 = section.b1 * *x - section.a1 * y + s2;
                s2 = section.b2 * *x - section.a2 * y;
                *x = y;
            }
        }
        data
    }

    /// Forward-backward pass: squared magnitude response, zero phase.
    pub fn apply_zero_phase(&self, input: &[f64]) -> Vec<f64> {
        let mut data = self.apply(input);
        data.reverse();
        data = self.apply(&data);
        data.reverse();
        data
    }

    /// Appends another cascade, keeping one pass per section.
    fn chain(mut self, other: SosFilter) -> SosFilter {
        self.sections.extend(other.sections);
        self
    }
}

/// Butterworth lowpass prototype poles (cutoff 1 rad/s, unit gain).
fn prototype_poles(order: usize) -> Vec<Complex64> {
    (0..order)
        .map(|k| {
            let theta = PI / 2.0 + PI * (2 * k + 1) as f64 / (2 * order) as f64;
            Complex64::from_polar(1.0, theta)
        })
        .collect()
}

/// Design an order-`order` Butterworth bandstop with -3 dB edges at
/// `lo_hz`..`hi_hz`. The prototype order is `order`; the digital filter has
/// `2 * order` poles arranged into `order` biquad sections.
pub fn design_bandstop(
    order: usize,
    lo_hz: f64,
    hi_hz: f64,
    sample_rate: f64,
) -> Result<SosFilter, FilterError> {
    if order == 0 {
        return Err(FilterError::ZeroOrder);
    }
    if lo_hz <= 0.0 {
        return Err(FilterError::NonPositiveEdge { edge_hz: lo_hz });
    }
    if lo_hz >= hi_hz {
        return Err(FilterError::EdgesOutOfOrder {
            lo_hz,
            hi_hz,
        });
    }
    let nyquist = sample_rate / 2.0;
    if hi_hz >= nyquist {
        return Err(FilterError::EdgeAboveNyquist {
            edge_hz: hi_hz,
            nyquist_hz: nyquist,
        });
    }

    // Prewarped analog edges for the bilinear transform.
    let k_bil = 2.0 * sample_rate;
    let w_lo = k_bil * libm::tan(PI * lo_hz / sample_rate);
    let w_hi = k_bil * libm::tan(PI * hi_hz / sample_rate);
    let w0_sq = w_lo * w_hi;
    let bw = w_hi - w_lo;
    let w0 = libm::sqrt(w0_sq);

    // Lowpass-to-bandstop transform of the prototype.
    let mut analog_poles = Vec::with_capacity(2 * order);
    for p in prototype_poles(order) {
        let t = Complex64::new(bw / 2.0, 0.0) / p;
        let disc = (t * t - Complex64::new(w0_sq, 0.0)).sqrt();
        analog_poles.push(t + disc);
        analog_poles.push(t - disc);
    }
    let mut analog_zeros = Vec::with_capacity(2 * order);
    for _ in 0..order {
        analog_zeros.push(Complex64::new(0.0, w0));
        analog_zeros.push(Complex64::new(0.0, -w0));
    }
    // Unit passband gain survives both transforms for an all-pole prototype
    // with an equal count of bandstop zeros and poles.
    let mut gain = Complex64::new(1.0, 0.0);
    for z in &analog_zeros {
        gain *= Complex64::new(k_bil, 0.0) - z;
    }
    for p in &analog_poles {
        gain /= Complex64::new(k_bil, 0.0) - p;
    }
    let gain = gain.re;

    let bilinear = |s: Complex64| (Complex64::new(k_bil, 0.0) + s) / (Complex64::new(k_bil, 0.0) - s);
    let digital_poles: Vec<Complex64> = analog_poles.iter().map(|&p| bilinear(p)).collect();
    let digital_zeros: Vec<Complex64> = analog_zeros.iter().map(|&z| bilinear(z)).collect();

    let pole_pairs = conjugate_pairs(digital_poles);
    let zero_pairs = conjugate_pairs(digital_zeros);
    debug_assert_eq!(pole_pairs.len(), order);
    debug_assert_eq!(zero_pairs.len(), order);

    let mut sections = Vec::with_capacity(order);
    for (i, ((p1, p2), (z1, z2))) in pole_pairs.into_iter().zip(zero_pairs).enumerate() {
        let g = if i == 0 { gain } else { 1.0 };
        let num = quadratic_from_roots(z1, z2);
        let den = quadratic_from_roots(p1, p2);
        sections.push(Biquad {
            b0: g * num.0,
            b1: g * num.1,
            b2: g * num.2,
            a1: den.1,
            a2: den.2,
        });
    }
    Ok(SosFilter {
        sections,
        sample_rate,
    })
}

/// (1, -(r1+r2), r1*r2) with the imaginary residue of conjugate pairing
/// discarded.
fn quadratic_from_roots(r1: Complex64, r2: Complex64) -> (f64, f64, f64) {
    ((1.0), -(r1 + r2).re, (r1 * r2).re)
}

/// Groups a conjugate-closed root list into (root, conjugate) pairs; real
/// roots are paired with each other.
fn conjugate_pairs(mut roots: Vec<Complex64>) -> Vec<(Complex64, Complex64)> {
    let mut pairs = Vec::new();
    let mut reals: Vec<Complex64> = Vec::new();
    roots.sort_by(|a, b| {
        a.re.total_cmp(&b.re)
            .then(a.im.abs().total_cmp(&b.im.abs()))
            .then(a.im.total_cmp(&b.im))
    });
    let mut used = alloc::vec![false; roots.len()];
    for i in 0..roots.len() {
        if used[i] {
            continue;
        }
        let r = roots[i];
        if r.im.abs() < 1e-9 {
            used[i] = true;
            reals.push(r);
            continue;
        }
        // find the closest conjugate among unused roots
        let mut best = None;
        let mut best_d = f64::INFINITY;
        for (j, &cand) in roots.iter().enumerate().skip(i + 1) {
            if used[j] {
                continue;
            }
            let d = (cand - r.conj()).norm();
            if d < best_d {
                best_d = d;
                best = Some(j);
            }
        }
        let j = best.expect("conjugate root must exist");
        used[i] = true;
        used[j] = true;
        pairs.push((r, roots[j]));
    }
    let mut reals = reals.into_iter();
    while let (Some(a), Some(b)) = (reals.next(), reals.next()) {
        pairs.push((a, b));
    }
    pairs
}

/// Per-notch configuration of [`bandstop_filter`].
#[derive(Debug, Clone, PartialEq)]
pub struct BandstopConfig {
    pub order: usize,
    /// Stopband half-width; each notch spans center +/- half_width.
    pub half_width_hz: f64,
    /// Run the cascade forward and backward for zero phase shift.
    pub zero_phase: bool,
}

impl Default for BandstopConfig {
    fn default() -> Self {
        Self {
            order: 3,
            half_width_hz: 2.0,
            zero_phase: false,
        }
    }
}

/// Removes mains interference from every channel independently.
///
/// One bandstop cascade is designed per notch center and the cascades run in
/// series. Each center must lie strictly below Nyquist with room for the
/// configured half-width.
pub fn bandstop_filter(
    signal: &MultichannelSignal,
    notch_centers_hz: &[f64],
    config: &BandstopConfig,
) -> Result<MultichannelSignal, FilterError> {
    let fs = signal.sample_rate() as f64;
    let mut cascade: Option<SosFilter> = None;
    for &center in notch_centers_hz {
        let designed = design_bandstop(
            config.order,
            center - config.half_width_hz,
            center + config.half_width_hz,
            fs,
        )?;
        cascade = Some(match cascade {
            Some(existing) => existing.chain(designed),
            None => designed,
        });
    }
    let Some(cascade) = cascade else {
        return signal
            .with_samples(signal.channels().to_vec())
            .map_err(|_| unreachable!());
    };
    let rows: Vec<Vec<f64>> = signal
        .channels()
        .iter()
        .map(|ch| {
            if config.zero_phase {
                cascade.apply_zero_phase(ch)
            } else {
                cascade.apply(ch)
            }
        })
        .collect();
    Ok(signal
        .with_samples(rows)
        .expect("filtering preserves signal shape"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::format;
    use alloc::string::String;
    use alloc::vec;
    use alloc::vec::Vec;

    fn two_channel(rate: u32, rows: [Vec<f64>; 2]) -> MultichannelSignal {
        MultichannelSignal::new(
            vec![String::from("a"), String::from("b")],
            rate,
            rows.to_vec(),
        )
        .unwrap()
    }

    /// Steady-state amplitude of a filtered sinusoid, estimated by quadrature
    /// demodulation over whole cycles after the transient dies out.
    #[allow(clippy::needless_range_loop)]
    fn measured_gain(filter: &SosFilter, freq_hz: f64, fs: f64) -> f64 {
        let n = (20.0 * fs) as usize;
        let x: Vec<f64> = (0..n)
            .map(|t| libm::sin(2.0 * PI * freq_hz * t as f64 / fs))
            .collect();
        let y = filter.apply(&x);
        let settle = (10.0 * fs) as usize;
        let span = ((n - settle) as f64 * freq_hz / fs) as usize;
        let m = (span as f64 * fs / freq_hz) as usize;
        let (mut c, mut s) = (0.0, 0.0);
        for t in settle..settle + m {
            let phase = 2.0 * PI * freq_hz * t as f64 / fs;
            c += y[t] * libm::cos(phase);
            s += y[t] * libm::sin(phase);
        }
        2.0 * libm::sqrt(c * c + s * s) / m as f64
    }

    #[test]
    fn design_rejects_bad_parameters() {
        assert!(matches!(
            design_bandstop(3, 126.0, 130.0, 256.0),
            Err(FilterError::EdgeAboveNyquist { .. })
        ));
        assert!(matches!(
            design_bandstop(3, -1.0, 4.0, 256.0),
            Err(FilterError::NonPositiveEdge { .. })
        ));
        assert!(matches!(
            design_bandstop(0, 58.0, 62.0, 256.0),
            Err(FilterError::ZeroOrder)
        ));
        assert!(matches!(
            design_bandstop(3, 62.0, 58.0, 256.0),
            Err(FilterError::EdgesOutOfOrder { .. })
        ));
    }

    #[test]
    fn cascade_is_stable_and_has_unit_dc_gain() {
        for (lo, hi) in [(58.0, 62.0), (118.0, 122.0), (8.0, 12.0)] {
            let f = design_bandstop(3, lo, hi, 256.0).unwrap();
            assert_eq!(f.sections().len(), 3);
            for s in f.sections() {
                // poles of z^2 + a1 z + a2 inside the unit circle
                let disc = Complex64::new(s.a1 * s.a1 - 4.0 * s.a2, 0.0).sqrt();
                let p1 = (Complex64::new(-s.a1, 0.0) + disc) / 2.0;
                let p2 = (Complex64::new(-s.a1, 0.0) - disc) / 2.0;
                assert!(p1.norm() < 1.0 && p2.norm() < 1.0);
            }
            assert!((f.magnitude_at(0.0) - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn notch_attenuates_center_by_40_db_analytically() {
        let f60 = design_bandstop(3, 58.0, 62.0, 256.0).unwrap();
        assert!(f60.magnitude_at(60.0) < 0.01, "{}", f60.magnitude_at(60.0));
        let f120 = design_bandstop(3, 118.0, 122.0, 256.0).unwrap();
        assert!(f120.magnitude_at(120.0) < 0.01);
    }

    #[test]
    fn passband_at_10_hz_within_one_percent_analytically() {
        let f = design_bandstop(3, 58.0, 62.0, 256.0).unwrap();
        assert!((f.magnitude_at(10.0) - 1.0).abs() < 0.01);
    }

    #[test]
    fn measured_sinusoid_gain_matches_transfer_function() {
        let fs = 256.0;
        let f = design_bandstop(3, 58.0, 62.0, fs).unwrap();
        for freq in [10.0, 30.0, 55.0, 60.0, 64.0, 100.0] {
            let analytic = f.magnitude_at(freq);
            let measured = measured_gain(&f, freq, fs);
            assert!(
                (measured - analytic).abs() < 5e-3 + 0.01 * analytic,
                "freq {freq}: measured {measured} vs analytic {analytic}"
            );
        }
    }

    #[test]
    fn pure_60_hz_is_attenuated_40_db_and_10_hz_passes() {
        let fs = 256.0;
        let f = design_bandstop(3, 58.0, 62.0, fs).unwrap();
        assert!(measured_gain(&f, 60.0, fs) < 0.01);
        assert!((measured_gain(&f, 10.0, fs) - 1.0).abs() < 0.01);
    }

    #[test]
    fn constant_signal_passes_after_transient() {
        let n = 256 * 8;
        let signal = two_channel(256, [vec![1.0; n], vec![1.0; n]]);
        let out = bandstop_filter(&signal, &[60.0, 120.0], &BandstopConfig::default()).unwrap();
        assert_eq!(out.n_channels(), 2);
        assert_eq!(out.len(), n);
        for ch in 0..2 {
            let tail = &out.channel(ch)[n - 256..];
            for &v in tail {
                assert!((v - 1.0).abs() < 1e-6, "tail value {v}");
            }
        }
    }

    #[test]
    fn filter_is_linear() {
        let fs = 256.0;
        let f = design_bandstop(3, 58.0, 62.0, fs).unwrap();
        let n = 2048;
        let x: Vec<f64> = (0..n)
            .map(|t| libm::sin(0.37 * t as f64) + 0.2 * libm::cos(1.7 * t as f64))
            .collect();
        let y: Vec<f64> = (0..n).map(|t| libm::cos(0.11 * t as f64)).collect();
        let (a, b) = (1.75, -0.4);
        let combo: Vec<f64> = x.iter().zip(&y).map(|(xv, yv)| a * xv + b * yv).collect();
        let lhs = f.apply(&combo);
        let fx = f.apply(&x);
        let fy = f.apply(&y);
        for t in 0..n {
            let rhs = a * fx[t] + b * fy[t];
            assert!((lhs[t] - rhs).abs() < 1e-9, "t={t}: {} vs {rhs}", lhs[t]);
        }
    }

    #[test]
    #[allow(clippy::needless_range_loop)]
    fn zero_phase_variant_squares_the_magnitude() {
        let fs = 256.0;
        let f = design_bandstop(3, 58.0, 62.0, fs).unwrap();
        let freq = 40.0;
        let n = (30.0 * fs) as usize;
        let x: Vec<f64> = (0..n)
            .map(|t| libm::sin(2.0 * PI * freq * t as f64 / fs))
            .collect();
        let y = f.apply_zero_phase(&x);
        // estimate amplitude over the central third
        let lo = n / 3;
        let m = ((n / 3) as f64 * freq / fs) as usize;
        let m = (m as f64 * fs / freq) as usize;
        let (mut c, mut s) = (0.0, 0.0);
        for t in lo..lo + m {
            let phase = 2.0 * PI * freq * t as f64 / fs;
            c += y[t] * libm::cos(phase);
            s += y[t] * libm::sin(phase);
        }
        let measured = 2.0 * libm::sqrt(c * c + s * s) / m as f64;
        let expect = f.magnitude_at(freq) * f.magnitude_at(freq);
        assert!(
            (measured - expect).abs() < 5e-3,
            "measured {measured} expect {expect}"
        );
    }

    #[test]
    fn notch_at_or_above_nyquist_is_rejected_through_public_op() {
        let signal = two_channel(256, [vec![0.0; 512], vec![0.0; 512]]);
        let err = bandstop_filter(&signal, &[128.0], &BandstopConfig::default()).unwrap_err();
        assert!(matches!(err, FilterError::EdgeAboveNyquist { .. }), "{err:?}");
        let _ = format!("{err}");
    }
}
