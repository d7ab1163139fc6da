//! Discrete Fourier transforms for epoch-length signals.
//!
//! Power-of-two lengths use an iterative radix-2 transform; every other
//! length goes through Bluestein's chirp-z algorithm, so 30-second epochs at
//! arbitrary sample rates (7680 samples at 256 Hz) stay O(n log n).

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
use num_complex::Complex64;

/// Reusable transform plan for one fixed input length.
///
/// Building a plan precomputes twiddle tables (and, for non-power-of-two
/// lengths, the chirp spectrum), so batches of same-length transforms only
/// pay for the butterflies.
pub struct FftPlan {
    len: usize,
    kind: PlanKind,
}

enum PlanKind {
    Empty,
    Radix2 {
        twiddles: Vec<Complex64>,
    },
    Bluestein {
        conv_len: usize,
        conv_twiddles: Vec<Complex64>,
        /// chirp[t] = exp(-i pi t^2 / n)
        chirp: Vec<Complex64>,
        /// forward FFT of the zero-padded, wrapped conjugate chirp
        chirp_spectrum: Vec<Complex64>,
    },
}

impl FftPlan {
    pub fn new(len: usize) -> Self {
        if len == 0 {
            return Self {
                len,
                kind: PlanKind::Empty,
            };
        }
        if len.is_power_of_two() {
            return Self {
                len,
                kind: PlanKind::Radix2 {
                    twiddles: forward_twiddles(len),
                },
            };
        }
        let conv_len = (2 * len - 1).next_power_of_two();
        let chirp: Vec<Complex64> = (0..len).map(|t| chirp_phase(t, len)).collect();
        let mut padded = vec![Complex64::new(0.0, 0.0); conv_len];
        for t in 0..len {
            let c = chirp[t].conj();
            padded[t] = c;
            if t > 0 {
                padded[conv_len - t] = c;
            }
        }
        let conv_twiddles = forward_twiddles(conv_len);
        fft_pow2(&mut padded, &conv_twiddles);
        Self {
            len,
            kind: PlanKind::Bluestein {
                conv_len,
                conv_twiddles,
                chirp,
                chirp_spectrum: padded,
            },
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Unnormalized forward DFT: X(k) = sum_t x(t) exp(-i 2 pi k t / n).
    pub fn forward(&self, input: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(input.len(), self.len, "input length must match the plan");
        match &self.kind {
            PlanKind::Empty => Vec::new(),
            PlanKind::Radix2 { twiddles } => {
                let mut data = input.to_vec();
                fft_pow2(&mut data, twiddles);
                data
            }
            PlanKind::Bluestein {
                conv_len,
                conv_twiddles,
                chirp,
                chirp_spectrum,
            } => {
                let n = self.len;
                let mut work = vec![Complex64::new(0.0, 0.0); *conv_len];
                for t in 0..n {
                    work[t] = input[t] * chirp[t];
                }
                fft_pow2(&mut work, conv_twiddles);
                for (w, c) in work.iter_mut().zip(chirp_spectrum.iter()) {
                    *w *= *c;
                }
                ifft_pow2(&mut work, conv_twiddles);
                (0..n).map(|k| work[k] * chirp[k]).collect()
            }
        }
    }

    /// Unnormalized inverse DFT: x(t) = (1/n) sum_k X(k) exp(+i 2 pi k t / n).
    pub fn inverse(&self, input: &[Complex64]) -> Vec<Complex64> {
        let conj_in: Vec<Complex64> = input.iter().map(|z| z.conj()).collect();
        let scale = 1.0 / self.len.max(1) as f64;
        self.forward(&conj_in)
            .into_iter()
            .map(|z| z.conj() * scale)
            .collect()
    }
}

/// exp(-i pi t^2 / n), with t^2 reduced mod 2n to keep the phase accurate
/// for long signals.
fn chirp_phase(t: usize, n: usize) -> Complex64 {
    let q = (t as u128 * t as u128) % (2 * n as u128);
    Complex64::from_polar(1.0, -PI * q as f64 / n as f64)
}

fn forward_twiddles(n: usize) -> Vec<Complex64> {
    (0..n / 2)
        .map(|j| Complex64::from_polar(1.0, -2.0 * PI * j as f64 / n as f64))
        .collect()
}

/// In-place iterative radix-2 transform. `twiddles[j] = exp(-2 pi i j / n)`.
fn fft_pow2(data: &mut [Complex64], twiddles: &[Complex64]) {
    let n = data.len();
    debug_assert!(n.is_power_of_two());
    if n <= 1 {
        return;
    }
    // bit-reversal permutation
    let bits = n.trailing_zeros();
    for i in 0..n {
        let j = i.reverse_bits() >> (usize::BITS - bits);
        if j > i {
            data.swap(i, j);
        }
    }
    let mut len = 2;
    while len <= n {
        let half = len / 2;
        let stride = n / len;
        let mut start = 0;
        while start < n {
            for j in 0..half {
                let w = twiddles[j * stride];
                let a = data[start + j];
                let b = data[start + j + half] * w;
                data[start + j] = a + b;
                data[start + j + half] = a - b;
            }
            start += len;
        }
        len <<= 1;
    }
}

fn ifft_pow2(data: &mut [Complex64], twiddles: &[Complex64]) {
    for z in data.iter_mut() {
        *z = z.conj();
    }
    fft_pow2(data, twiddles);
    let scale = 1.0 / data.len() as f64;
    for z in data.iter_mut() {
        *z = z.conj() * scale;
    }
}

/// Fourier coefficients of one real channel:
///
/// d(w_k) = T^(-1/2) * sum_{t=1..T} x(t) exp(-i 2 pi t w_k),  w_k = k/T.
///
/// The sum indexes samples from t = 1, so the standard DFT output picks up a
/// per-bin phase twist of exp(-i 2 pi k / T). The twist cancels in every
/// cross-periodogram d_i(w) d_j(w)* but is kept so the coefficients match the
/// defining sum exactly.
pub fn fourier_coefficients(samples: &[f64]) -> Vec<Complex64> {
    let plan = FftPlan::new(samples.len());
    fourier_coefficients_with(&plan, samples)
}

/// Same as [`fourier_coefficients`] but reusing a prepared plan.
pub fn fourier_coefficients_with(plan: &FftPlan, samples: &[f64]) -> Vec<Complex64> {
    let t_len = samples.len();
    let input: Vec<Complex64> = samples.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    let mut spec = plan.forward(&input);
    let norm = 1.0 / libm::sqrt(t_len as f64);
    for (k, z) in spec.iter_mut().enumerate() {
        let twist = Complex64::from_polar(norm, -2.0 * PI * k as f64 / t_len as f64);
        *z *= twist;
    }
    spec
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Direct-summation oracle for the defining sum of the coefficients,
    /// indexing samples from t = 1.
    fn direct_fourier_coefficients(samples: &[f64]) -> Vec<Complex64> {
        let t_len = samples.len();
        let norm = 1.0 / libm::sqrt(t_len as f64);
        (0..t_len)
            .map(|k| {
                let mut acc = Complex64::new(0.0, 0.0);
                for (idx, &x) in samples.iter().enumerate() {
                    let t = (idx + 1) as f64;
                    let phase = -2.0 * PI * t * k as f64 / t_len as f64;
                    acc += Complex64::from_polar(x, phase);
                }
                acc * norm
            })
            .collect()
    }

    fn direct_dft(input: &[Complex64]) -> Vec<Complex64> {
        let n = input.len();
        (0..n)
            .map(|k| {
                let mut acc = Complex64::new(0.0, 0.0);
                for (t, &x) in input.iter().enumerate() {
                    let phase = -2.0 * PI * (t * k) as f64 / n as f64;
                    acc += x * Complex64::from_polar(1.0, phase);
                }
                acc
            })
            .collect()
    }

    fn max_err(a: &[Complex64], b: &[Complex64]) -> f64 {
        a.iter()
            .zip(b)
            .map(|(x, y)| (x - y).norm())
            .fold(0.0, f64::max)
    }

    #[test]
    fn forward_matches_direct_dft_across_lengths() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for n in [1usize, 2, 3, 4, 5, 6, 8, 12, 15, 16, 30, 45, 64, 100, 240] {
            let input: Vec<Complex64> = (0..n)
                .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                .collect();
            let plan = FftPlan::new(n);
            let got = plan.forward(&input);
            let want = direct_dft(&input);
            let scale = libm::sqrt(n as f64);
            assert!(
                max_err(&got, &want) / scale < 1e-10,
                "length {n} disagrees with direct DFT"
            );
        }
    }

    #[test]
    fn inverse_round_trips() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for n in [4usize, 7, 24, 129] {
            let input: Vec<Complex64> = (0..n)
                .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                .collect();
            let plan = FftPlan::new(n);
            let back = plan.inverse(&plan.forward(&input));
            assert!(max_err(&back, &input) < 1e-11);
        }
    }

    #[test]
    fn coefficients_match_direct_summation_at_epoch_scale() {
        // 7680 = 30 s at 256 Hz, the production epoch length.
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let samples: Vec<f64> = (0..7680).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let got = fourier_coefficients(&samples);
        let want = direct_fourier_coefficients(&samples);
        assert!(max_err(&got, &want) < 1e-9);
    }

    #[test]
    fn zero_input_gives_zero_spectrum() {
        let spec = fourier_coefficients(&[0.0; 64]);
        assert!(spec.iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn constant_input_concentrates_at_dc() {
        let c = 2.5;
        let t_len = 8;
        let spec = fourier_coefficients(&[c; 8]);
        let expect_dc = c * libm::sqrt(t_len as f64);
        assert!((spec[0].norm() - expect_dc).abs() < 1e-12);
        for z in &spec[1..] {
            assert!(z.norm() < 1e-12);
        }
    }

    #[test]
    fn parseval_identity_holds() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        for n in [16usize, 63, 480] {
            let samples: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let spec = fourier_coefficients(&samples);
            let time_energy: f64 = samples.iter().map(|x| x * x).sum();
            let freq_energy: f64 = spec.iter().map(|z| z.norm_sqr()).sum();
            assert!(
                ((time_energy - freq_energy) / time_energy).abs() < 1e-9,
                "Parseval failed for n = {n}"
            );
        }
    }
}
