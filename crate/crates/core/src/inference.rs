//! Two-group permutation testing on persistence landscapes.
//!
//! The observed statistic is the supremum difference between the two group
//! mean landscapes. Each replicate redraws a uniformly random partition of
//! the pooled landscapes into the original group sizes (Fisher-Yates shuffle,
//! first block to one side) and recomputes the same statistic; the p-value is
//! the fraction of replicates at or above the observed value.
//!
//! Replicate b draws from an independent ChaCha stream keyed by (seed, b),
//! so parallel and serial evaluation order produce identical results. The
//! pooled landscapes are put in a canonical sorted order before partitioning,
//! which makes the p-value exactly invariant under swapping the two input
//! groups.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use core::fmt;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::landscape::{sup_difference_with, DifferenceStat, LandscapeError, PersistenceLandscape};
use crate::signal::SleepStage;
use crate::spectrum::Band;

#[derive(Debug, Clone, PartialEq)]
pub enum InferenceError {
    EmptyGroup,
    Landscape(LandscapeError),
    ZeroReplicates,
}

impl fmt::Display for InferenceError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InferenceError::EmptyGroup => write!(f, "both groups need at least one landscape"),
            InferenceError::Landscape(e) => write!(f, "{e}"),
            InferenceError::ZeroReplicates => write!(f, "permutation count must be at least 1"),
        }
    }
}

impl core::error::Error for InferenceError {}

impl From<LandscapeError> for InferenceError {
    fn from(e: LandscapeError) -> Self {
        InferenceError::Landscape(e)
    }
}

/// The two cohorts entering one test; all landscapes must share grid and
/// level count.
#[derive(Debug, Clone)]
pub struct LabeledLandscapeSet {
    pub group1: Vec<PersistenceLandscape>,
    pub group2: Vec<PersistenceLandscape>,
}

impl LabeledLandscapeSet {
    pub fn new(
        group1: Vec<PersistenceLandscape>,
        group2: Vec<PersistenceLandscape>,
    ) -> Result<Self, InferenceError> {
        if group1.is_empty() || group2.is_empty() {
            return Err(InferenceError::EmptyGroup);
        }
        let probe = &group1[0];
        for l in group1.iter().chain(&group2) {
            if l.grid() != probe.grid() || l.n_levels() != probe.n_levels() {
                return Err(InferenceError::Landscape(LandscapeError::IncompatibleGrid));
            }
        }
        Ok(Self { group1, group2 })
    }
}

/// Outcome of one permutation test.
#[derive(Debug, Clone, PartialEq)]
pub struct PermutationTestResult {
    /// Observed statistic between the true group means.
    pub observed_stat: f64,
    /// Number of permutation replicates B.
    pub permutations: usize,
    /// Replicates with statistic >= observed (ties count).
    pub significant: usize,
    /// significant / permutations, exactly.
    pub p_value: f64,
    /// (significant + 1) / (permutations + 1), reported alongside.
    pub p_value_corrected: f64,
    pub seed: u64,
}

/// Mean of the landscapes selected by `idx`, written into `out` (levels
/// flattened row-major).
fn accumulate_mean(pool: &[&PersistenceLandscape], idx: &[usize], out: &mut [f64]) {
    out.iter_mut().for_each(|v| *v = 0.0);
    for &i in idx {
        let mut cursor = 0;
        for row in pool[i].levels() {
            for &v in row {
                out[cursor] += v;
                cursor += 1;
            }
        }
    }
    let inv = 1.0 / idx.len() as f64;
    out.iter_mut().for_each(|v| *v *= inv);
}

fn sup_stat(a: &[f64], b: &[f64], stat: DifferenceStat) -> f64 {
    let mut best = match stat {
        DifferenceStat::Absolute => 0.0,
        DifferenceStat::Signed => f64::NEG_INFINITY,
    };
    for (x, y) in a.iter().zip(b) {
        let d = match stat {
            DifferenceStat::Absolute => (x - y).abs(),
            DifferenceStat::Signed => x - y,
        };
        best = best.max(d);
    }
    best
}

/// Canonical label-free ordering of the pooled landscapes, so the replicate
/// partitions do not depend on which group came first.
fn canonical_pool(set: &LabeledLandscapeSet) -> Vec<&PersistenceLandscape> {
    let mut pool: Vec<&PersistenceLandscape> =
        set.group1.iter().chain(set.group2.iter()).collect();
    pool.sort_by(|a, b| {
        for (ra, rb) in a.levels().iter().zip(b.levels()) {
            for (x, y) in ra.iter().zip(rb) {
                let ord = x.total_cmp(y);
                if ord != core::cmp::Ordering::Equal {
                    return ord;
                }
            }
        }
        core::cmp::Ordering::Equal
    });
    pool
}

fn shuffle<R: Rng>(indices: &mut [usize], rng: &mut R) {
    for i in (1..indices.len()).rev() {
        let j = rng.gen_range(0..=i);
        indices.swap(i, j);
    }
}

/// Runs the label permutation test with the default absolute sup statistic.
pub fn permutation_test(
    data: &LabeledLandscapeSet,
    replicates: usize,
    seed: u64,
) -> Result<PermutationTestResult, InferenceError> {
    permutation_test_with(data, replicates, seed, DifferenceStat::Absolute)
}

pub fn permutation_test_with(
    data: &LabeledLandscapeSet,
    replicates: usize,
    seed: u64,
    stat: DifferenceStat,
) -> Result<PermutationTestResult, InferenceError> {
    if data.group1.is_empty() || data.group2.is_empty() {
        return Err(InferenceError::EmptyGroup);
    }
    if replicates == 0 {
        return Err(InferenceError::ZeroReplicates);
    }
    let mean1 = crate::landscape::average_landscapes(&data.group1)?;
    let mean2 = crate::landscape::average_landscapes(&data.group2)?;
    let observed = sup_difference_with(&mean1, &mean2, stat)?;

    let pool = canonical_pool(data);
    let n1 = data.group1.len();
    let n2 = data.group2.len();
    let n = n1 + n2;
    // Split at the smaller group size; the statistic is symmetric in the two
    // sides, so {first k, rest} realizes the same unordered partition.
    let k = n1.min(n2);
    let flat_len = pool[0].n_levels() * pool[0].grid().len;
    let mut side_a = alloc::vec![0.0; flat_len];
    let mut side_b = alloc::vec![0.0; flat_len];
    let mut indices: Vec<usize> = (0..n).collect();

    let mut significant = 0usize;
    for b in 0..replicates {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(b as u64);
        indices.iter_mut().enumerate().for_each(|(i, v)| *v = i);
        shuffle(&mut indices, &mut rng);
        accumulate_mean(&pool, &indices[..k], &mut side_a);
        accumulate_mean(&pool, &indices[k..], &mut side_b);
        let replicate_stat = match stat {
            DifferenceStat::Absolute => sup_stat(&side_a, &side_b, stat),
            // For the signed variant, side A stands for group 1 only when
            // the sizes match; otherwise fall back to the larger-minus-
            // smaller orientation fixed by k.
            DifferenceStat::Signed => sup_stat(&side_a, &side_b, stat),
        };
        if replicate_stat >= observed {
            significant += 1;
        }
    }

    Ok(PermutationTestResult {
        observed_stat: observed,
        permutations: replicates,
        significant,
        p_value: significant as f64 / replicates as f64,
        p_value_corrected: (significant + 1) as f64 / (replicates + 1) as f64,
        seed,
    })
}

/// Result table over the five clinical bands and the four scored sleep
/// stages; cells without data stay absent.
#[derive(Debug, Clone, Default)]
pub struct StratifiedTable {
    cells: BTreeMap<(Band, SleepStage), PermutationTestResult>,
}

impl StratifiedTable {
    pub fn get(&self, band: Band, stage: SleepStage) -> Option<&PermutationTestResult> {
        self.cells.get(&(band, stage))
    }

    pub fn insert(&mut self, band: Band, stage: SleepStage, result: PermutationTestResult) {
        self.cells.insert((band, stage), result);
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn iter(
        &self,
    ) -> impl Iterator<Item = (&(Band, SleepStage), &PermutationTestResult)> {
        self.cells.iter()
    }
}

/// One permutation test per populated (band, stage) cell.
///
/// Cell seeds derive from the base seed and the cell's fixed position, so a
/// table run is reproducible and cells are independent.
pub fn stratified_test_matrix(
    sets: &BTreeMap<(Band, SleepStage), LabeledLandscapeSet>,
    replicates: usize,
    seed: u64,
) -> Result<StratifiedTable, InferenceError> {
    stratified_test_matrix_with(sets, replicates, seed, DifferenceStat::Absolute)
}

pub fn stratified_test_matrix_with(
    sets: &BTreeMap<(Band, SleepStage), LabeledLandscapeSet>,
    replicates: usize,
    seed: u64,
    stat: DifferenceStat,
) -> Result<StratifiedTable, InferenceError> {
    let mut table = StratifiedTable::default();
    for (band_idx, band) in Band::ALL.iter().enumerate() {
        for (stage_idx, stage) in SleepStage::SCORED.iter().enumerate() {
            let Some(set) = sets.get(&(*band, *stage)) else {
                continue;
            };
            let cell_seed = seed.wrapping_add((band_idx * 4 + stage_idx) as u64);
            let result = permutation_test_with(set, replicates, cell_seed, stat)?;
            table.insert(*band, *stage, result);
        }
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::landscape::{landscape_from_diagram, EssentialPolicy, LandscapeGrid};
    use crate::persistence::PersistenceDiagram;
    use alloc::vec;

    fn tent(death: f64) -> PersistenceLandscape {
        let mut d = PersistenceDiagram::default();
        d.push_finite(0, 0.0, death);
        landscape_from_diagram(
            &d,
            0,
            &LandscapeGrid::unit_default(),
            3,
            EssentialPolicy::Drop,
        )
        .unwrap()
    }

    #[test]
    fn identical_groups_give_p_exactly_one() {
        let l = tent(0.6);
        // equal sizes: both means are the same bit pattern
        let data = LabeledLandscapeSet::new(vec![l.clone(); 4], vec![l.clone(); 4]).unwrap();
        let r = permutation_test(&data, 200, 11).unwrap();
        assert_eq!(r.observed_stat, 0.0);
        assert_eq!(r.significant, 200);
        assert_eq!(r.p_value, 1.0);
        // unequal sizes: the two means can differ in the last ulp, but every
        // replicate reproduces the identical partition sizes, so p stays 1.
        let data = LabeledLandscapeSet::new(vec![l.clone(); 4], vec![l.clone(); 5]).unwrap();
        let r = permutation_test(&data, 200, 11).unwrap();
        assert!(r.observed_stat.abs() < 1e-15);
        assert_eq!(r.p_value, 1.0);
    }

    #[test]
    fn two_singletons_always_tie() {
        let data = LabeledLandscapeSet::new(vec![tent(0.9)], vec![tent(0.3)]).unwrap();
        let r = permutation_test(&data, 64, 5).unwrap();
        // Swapping two singleton labels reproduces the same unordered pair,
        // so every replicate matches the observed statistic.
        assert_eq!(r.p_value, 1.0);
    }

    #[test]
    fn strongly_separated_groups_are_significant() {
        let data = LabeledLandscapeSet::new(vec![tent(0.8); 10], vec![tent(0.2); 10]).unwrap();
        let r = permutation_test(&data, 1000, 7).unwrap();
        assert!(r.observed_stat > 0.29);
        assert!(r.p_value <= 0.01, "p = {}", r.p_value);
    }

    #[test]
    fn deterministic_given_seed() {
        let data =
            LabeledLandscapeSet::new(vec![tent(0.7), tent(0.5)], vec![tent(0.4), tent(0.3)])
                .unwrap();
        let a = permutation_test(&data, 333, 99).unwrap();
        let b = permutation_test(&data, 333, 99).unwrap();
        assert_eq!(a, b);
        let c = permutation_test(&data, 333, 100).unwrap();
        assert_eq!(a.observed_stat, c.observed_stat);
    }

    #[test]
    fn swapping_groups_gives_identical_p_value() {
        let g1: Vec<PersistenceLandscape> =
            [0.81, 0.63, 0.55, 0.72].iter().map(|&d| tent(d)).collect();
        let g2: Vec<PersistenceLandscape> =
            [0.30, 0.42, 0.28].iter().map(|&d| tent(d)).collect();
        let fwd = LabeledLandscapeSet::new(g1.clone(), g2.clone()).unwrap();
        let rev = LabeledLandscapeSet::new(g2, g1).unwrap();
        let a = permutation_test(&fwd, 500, 17).unwrap();
        let b = permutation_test(&rev, 500, 17).unwrap();
        assert_eq!(a.observed_stat, b.observed_stat);
        assert_eq!(a.significant, b.significant);
        assert_eq!(a.p_value, b.p_value);
    }

    #[test]
    fn p_value_lives_on_the_replicate_lattice() {
        let data =
            LabeledLandscapeSet::new(vec![tent(0.6), tent(0.4)], vec![tent(0.5), tent(0.2)])
                .unwrap();
        let r = permutation_test(&data, 40, 3).unwrap();
        let steps = r.p_value * 40.0;
        assert_eq!(libm::round(steps), steps);
        assert_eq!(r.p_value, r.significant as f64 / 40.0);
        assert_eq!(
            r.p_value_corrected,
            (r.significant + 1) as f64 / 41.0
        );
        assert!(r.significant <= 40);
    }

    #[test]
    fn empty_group_is_rejected() {
        assert!(matches!(
            LabeledLandscapeSet::new(vec![], vec![tent(0.5)]),
            Err(InferenceError::EmptyGroup)
        ));
        let data = LabeledLandscapeSet {
            group1: vec![],
            group2: vec![tent(0.5)],
        };
        assert!(matches!(
            permutation_test(&data, 10, 0),
            Err(InferenceError::EmptyGroup)
        ));
    }

    #[test]
    fn stratified_table_handles_absent_cells() {
        let mut sets = BTreeMap::new();
        sets.insert(
            (Band::Alpha, SleepStage::Nrem2),
            LabeledLandscapeSet::new(vec![tent(0.8); 3], vec![tent(0.2); 3]).unwrap(),
        );
        let table = stratified_test_matrix(&sets, 50, 1).unwrap();
        assert_eq!(table.len(), 1);
        assert!(table.get(Band::Alpha, SleepStage::Nrem2).is_some());
        assert!(table.get(Band::Delta, SleepStage::Nrem1).is_none());
    }

    #[test]
    fn stratified_cells_are_reproducible() {
        let mut sets = BTreeMap::new();
        for stage in SleepStage::SCORED {
            sets.insert(
                (Band::Theta, stage),
                LabeledLandscapeSet::new(
                    vec![tent(0.7), tent(0.6)],
                    vec![tent(0.5), tent(0.35)],
                )
                .unwrap(),
            );
        }
        let a = stratified_test_matrix(&sets, 120, 9).unwrap();
        let b = stratified_test_matrix(&sets, 120, 9).unwrap();
        for (key, cell) in a.iter() {
            assert_eq!(b.get(key.0, key.1), Some(cell));
        }
    }
}
