//! Cross-module properties: synthetic generation through coherence,
//! landscapes, and inference.

use eegtopo_core::inference::{permutation_test, LabeledLandscapeSet};
use eegtopo_core::landscape::{
    landscape_from_diagram, EssentialPolicy, LandscapeGrid, PersistenceLandscape,
};
use eegtopo_core::persistence::{rips_h0, PersistenceDiagram};
use eegtopo_core::signal::segment_epochs;
use eegtopo_core::spectrum::{epoch_band_distance_matrices, SmoothingKernel};
use eegtopo_core::synth::{generate_synthetic_study, SyntheticCohortConfig};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn config(coupling: f64, seed: u64, duration_s: u32, channels: usize) -> SyntheticCohortConfig {
    SyntheticCohortConfig {
        n_studies_per_group: 1,
        channels,
        sample_rate: 256,
        duration_s,
        coupling_apnea: coupling,
        coupling_control: coupling,
        noise_level: 1.0,
        seed,
    }
}

/// Mean off-diagonal coherence over all epochs, pairs, and bands of one
/// generated study.
fn mean_coherence(coupling: f64, seed: u64, kernel: &SmoothingKernel) -> (f64, usize) {
    let cfg = config(coupling, seed, 780, 3);
    let study = generate_synthetic_study(&cfg, 0).unwrap();
    let seg = segment_epochs(&study.signal, &study.stage_annotations, 30).unwrap();
    let n = cfg.channels;
    let mut sum = 0.0;
    let mut count = 0usize;
    for epoch in &seg.epochs {
        for m in epoch_band_distance_matrices(epoch, kernel).unwrap() {
            for i in 0..n {
                for j in (i + 1)..n {
                    sum += 1.0 - m.values.get(i, j);
                    count += 1;
                }
            }
        }
    }
    (sum / count as f64, seg.epochs.len())
}

#[test]
fn band_matrices_stay_symmetric_zero_diagonal_unit_range_on_random_studies() {
    let mut rng = ChaCha8Rng::seed_from_u64(1001);
    for _ in 0..6 {
        let coupling = rng.gen_range(0.0..1.0);
        let cfg = config(coupling, rng.gen(), 60, 4);
        let study = generate_synthetic_study(&cfg, 0).unwrap();
        let seg = segment_epochs(&study.signal, &study.stage_annotations, 30).unwrap();
        assert_eq!(seg.epochs.len(), 2);
        for epoch in &seg.epochs {
            let mats =
                epoch_band_distance_matrices(epoch, &SmoothingKernel::modified_daniell(4)).unwrap();
            assert_eq!(mats.len(), 5);
            for m in &mats {
                for i in 0..4 {
                    assert_eq!(m.values.get(i, i), 0.0);
                    for j in 0..4 {
                        assert_eq!(m.values.get(i, j), m.values.get(j, i));
                        assert!((0.0..=1.0).contains(&m.values.get(i, j)));
                    }
                }
            }
        }
    }
}

#[test]
fn coherence_rises_monotonically_with_coupling() {
    // >= 100 epochs per coupling level: 4 studies x 26 epochs each
    let kernel = SmoothingKernel::uniform(4);
    let mut means = Vec::new();
    for (idx, coupling) in [0.0, 0.3, 0.6, 0.9].into_iter().enumerate() {
        let mut total = 0.0;
        let mut epochs = 0usize;
        for s in 0..4 {
            let (m, e) = mean_coherence(coupling, 900 + (idx * 7 + s) as u64, &kernel);
            total += m;
            epochs += e;
        }
        assert!(epochs >= 100, "only {epochs} epochs sampled");
        means.push(total / 4.0);
    }
    for w in means.windows(2) {
        assert!(
            w[1] > w[0],
            "coherence means not increasing: {means:?}"
        );
    }
    // coupling 0 sits at the independence floor of the uniform kernel
    let floor = SmoothingKernel::uniform(4).independence_floor();
    assert!((means[0] - floor).abs() < 0.5 * floor);
}

fn random_landscape(rng: &mut ChaCha8Rng, shift: f64, grid: &LandscapeGrid) -> PersistenceLandscape {
    let mut d = PersistenceDiagram::default();
    for _ in 0..6 {
        let b = rng.gen_range(0.0..0.2);
        let death = (b + rng.gen_range(0.1..0.6) + shift).min(1.0);
        d.push_finite(0, b, death);
    }
    landscape_from_diagram(&d, 0, grid, 6, EssentialPolicy::Drop).unwrap()
}

/// Median p-value over repeated two-group tests with a planted shift.
fn median_p(shift: f64, runs: usize, rng: &mut ChaCha8Rng) -> f64 {
    let grid = LandscapeGrid::unit_default();
    let mut ps = Vec::with_capacity(runs);
    for r in 0..runs {
        let g1: Vec<PersistenceLandscape> =
            (0..8).map(|_| random_landscape(rng, 0.0, &grid)).collect();
        let g2: Vec<PersistenceLandscape> =
            (0..8).map(|_| random_landscape(rng, shift, &grid)).collect();
        let data = LabeledLandscapeSet::new(g1, g2).unwrap();
        let result = permutation_test(&data, 200, 31 + r as u64).unwrap();
        ps.push(result.p_value);
    }
    ps.sort_by(f64::total_cmp);
    ps[runs / 2]
}

#[test]
fn planted_effect_never_raises_the_median_p_value() {
    let mut rng = ChaCha8Rng::seed_from_u64(2002);
    let medians: Vec<f64> = [0.0, 0.1, 0.3]
        .into_iter()
        .map(|shift| median_p(shift, 21, &mut rng))
        .collect();
    assert!(
        medians[0] >= medians[1] && medians[1] >= medians[2],
        "medians {medians:?}"
    );
    assert!(medians[2] <= 0.05, "large effect should be significant");
}

#[test]
fn null_p_values_are_roughly_uniform() {
    // Smoke-level calibration; the acceptance suite runs the full version.
    let grid = LandscapeGrid::unit_default();
    let mut rng = ChaCha8Rng::seed_from_u64(3003);
    let runs = 80;
    let mut hits_10 = 0usize;
    for r in 0..runs {
        let g1: Vec<PersistenceLandscape> =
            (0..8).map(|_| random_landscape(&mut rng, 0.0, &grid)).collect();
        let g2: Vec<PersistenceLandscape> =
            (0..8).map(|_| random_landscape(&mut rng, 0.0, &grid)).collect();
        let data = LabeledLandscapeSet::new(g1, g2).unwrap();
        let result = permutation_test(&data, 200, 5000 + r as u64).unwrap();
        if result.p_value <= 0.1 {
            hits_10 += 1;
        }
    }
    let frac = hits_10 as f64 / runs as f64;
    assert!(frac <= 0.1 + 2.0 / (200.0_f64).sqrt() + 0.05, "P(p<=0.1) = {frac}");
    assert!(frac >= 0.005, "suspiciously conservative: {frac}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn landscapes_from_h0_of_coherence_matrices_live_on_the_unit_interval(
        seed in 0u64..5000,
        coupling in 0.0_f64..1.0,
    ) {
        let cfg = config(coupling, seed, 30, 3);
        let study = generate_synthetic_study(&cfg, 0).unwrap();
        let seg = segment_epochs(&study.signal, &study.stage_annotations, 30).unwrap();
        let grid = LandscapeGrid::unit_default();
        for epoch in &seg.epochs {
            let mats = epoch_band_distance_matrices(
                epoch,
                &SmoothingKernel::modified_daniell(4),
            )
            .unwrap();
            for m in mats {
                let diagram = rips_h0(&m.values);
                let l = landscape_from_diagram(&diagram, 0, &grid, 6, EssentialPolicy::Drop)
                    .unwrap();
                // tent peaks cannot exceed half the max death, which is <= 1
                for row in l.levels() {
                    for &v in row {
                        prop_assert!((0.0..=0.5).contains(&v));
                    }
                }
            }
        }
    }
}
