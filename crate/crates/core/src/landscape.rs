//! Persistence landscapes on a shared sampling grid.
//!
//! Each diagram point (b, d) contributes the tent max(0, min(t - b, d - t));
//! level k of the landscape is the k-th largest tent value at each grid
//! point. Sampling on a fixed uniform grid makes averaging and permutation
//! statistics exact array operations, and the 1-Lipschitz tent slope bounds
//! the sampling error by the grid spacing.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::persistence::PersistenceDiagram;

#[derive(Debug, Clone, PartialEq)]
pub enum LandscapeError {
    EmptyGrid,
    NonPositiveStep,
    ZeroLevels,
    /// Landscape operands must share grid and level count exactly.
    IncompatibleGrid,
    EmptyInput,
}

impl fmt::Display for LandscapeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LandscapeError::EmptyGrid => write!(f, "grid must contain at least one point"),
            LandscapeError::NonPositiveStep => write!(f, "grid step must be positive"),
            LandscapeError::ZeroLevels => write!(f, "level count must be at least 1"),
            LandscapeError::IncompatibleGrid => {
                write!(f, "landscapes do not share grid and level count")
            }
            LandscapeError::EmptyInput => write!(f, "need at least one landscape"),
        }
    }
}

impl core::error::Error for LandscapeError {}

/// Uniform sampling positions t_i = start + i * step, i = 0..len.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LandscapeGrid {
    pub start: f64,
    pub step: f64,
    pub len: usize,
}

impl LandscapeGrid {
    pub fn new(start: f64, step: f64, len: usize) -> Result<Self, LandscapeError> {
        if len == 0 {
            return Err(LandscapeError::EmptyGrid);
        }
        if step.is_nan() || step <= 0.0 {
            return Err(LandscapeError::NonPositiveStep);
        }
        Ok(Self { start, step, len })
    }

    /// Default grid for coherence distances: 256 samples spanning [0, 1].
    pub fn unit_default() -> Self {
        Self {
            start: 0.0,
            step: 1.0 / 255.0,
            len: 256,
        }
    }

    pub fn point(&self, i: usize) -> f64 {
        self.start + i as f64 * self.step
    }

    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len).map(|i| self.point(i))
    }
}

/// How diagram classes with no death are fed to the landscape.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EssentialPolicy {
    /// Skip them: a bar to infinity has no tent representation. Default.
    Drop,
    /// Treat each essential class as a bar from its birth to the given cap
    /// (typically the filtration ceiling).
    CapAt(f64),
}

/// Discretized landscape: levels[k][i] = lambda_{k+1}(t_i).
#[derive(Debug, Clone, PartialEq)]
pub struct PersistenceLandscape {
    grid: LandscapeGrid,
    levels: Vec<Vec<f64>>,
}

impl PersistenceLandscape {
    pub fn grid(&self) -> &LandscapeGrid {
        &self.grid
    }

    pub fn n_levels(&self) -> usize {
        self.levels.len()
    }

    pub fn level(&self, k: usize) -> &[f64] {
        &self.levels[k]
    }

    pub fn levels(&self) -> &[Vec<f64>] {
        &self.levels
    }

    /// Landscape that is identically zero.
    pub fn zero(grid: LandscapeGrid, n_levels: usize) -> Self {
        Self {
            grid,
            levels: vec![vec![0.0; grid.len]; n_levels],
        }
    }

    /// Evaluates level k at an arbitrary t by linear interpolation.
    pub fn eval(&self, k: usize, t: f64) -> f64 {
        let g = &self.grid;
        if t <= g.start {
            return self.levels[k][0];
        }
        let x = (t - g.start) / g.step;
        let i = x as usize;
        if i + 1 >= g.len {
            return self.levels[k][g.len - 1];
        }
        let frac = x - i as f64;
        self.levels[k][i] * (1.0 - frac) + self.levels[k][i + 1] * frac
    }

    pub fn from_levels(grid: LandscapeGrid, levels: Vec<Vec<f64>>) -> Self {
        debug_assert!(levels.iter().all(|row| row.len() == grid.len));
        Self { grid, levels }
    }

    fn compatible(&self, other: &PersistenceLandscape) -> bool {
        self.grid == other.grid && self.levels.len() == other.levels.len()
    }
}

/// Builds the landscape of one homology dimension of a diagram.
///
/// lambda_k(t) is the k-th largest tent value over the diagram's bars;
/// levels beyond the number of bars are identically zero.
pub fn landscape_from_diagram(
    diagram: &PersistenceDiagram,
    dim: usize,
    grid: &LandscapeGrid,
    n_levels: usize,
    essential: EssentialPolicy,
) -> Result<PersistenceLandscape, LandscapeError> {
    if n_levels == 0 {
        return Err(LandscapeError::ZeroLevels);
    }
    let mut bars: Vec<(f64, f64)> = diagram
        .finite(dim)
        .iter()
        .map(|p| (p.birth, p.death))
        .collect();
    if let EssentialPolicy::CapAt(cap) = essential {
        for &birth in diagram.essential_births(dim) {
            if cap > birth {
                bars.push((birth, cap));
            }
        }
    }
    let mut levels = vec![vec![0.0; grid.len]; n_levels];
    let mut tents: Vec<f64> = Vec::with_capacity(bars.len());
    for (i, t) in grid.points().enumerate() {
        tents.clear();
        tents.extend(bars.iter().map(|&(b, d)| (t - b).min(d - t).max(0.0)));
        tents.sort_unstable_by(|a, b| b.total_cmp(a));
        for (k, row) in levels.iter_mut().enumerate() {
            row[i] = tents.get(k).copied().unwrap_or(0.0);
        }
    }
    Ok(PersistenceLandscape {
        grid: *grid,
        levels,
    })
}

/// Pointwise arithmetic mean per level.
pub fn average_landscapes(
    set: &[PersistenceLandscape],
) -> Result<PersistenceLandscape, LandscapeError> {
    let Some(first) = set.first() else {
        return Err(LandscapeError::EmptyInput);
    };
    if set.iter().any(|l| !first.compatible(l)) {
        return Err(LandscapeError::IncompatibleGrid);
    }
    let inv = 1.0 / set.len() as f64;
    let mut levels = vec![vec![0.0; first.grid.len]; first.levels.len()];
    for l in set {
        for (acc, row) in levels.iter_mut().zip(&l.levels) {
            for (a, v) in acc.iter_mut().zip(row) {
                *a += v;
            }
        }
    }
    for row in levels.iter_mut() {
        for v in row.iter_mut() {
            *v *= inv;
        }
    }
    Ok(PersistenceLandscape {
        grid: first.grid,
        levels,
    })
}

/// Which extreme of the difference landscape counts as most significant.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DifferenceStat {
    /// sup over levels and grid points of |a - b|. Default.
    Absolute,
    /// sup of the signed difference a - b.
    Signed,
}

/// Supremum of the absolute difference over all levels and grid points.
pub fn sup_difference(
    a: &PersistenceLandscape,
    b: &PersistenceLandscape,
) -> Result<f64, LandscapeError> {
    sup_difference_with(a, b, DifferenceStat::Absolute)
}

pub fn sup_difference_with(
    a: &PersistenceLandscape,
    b: &PersistenceLandscape,
    stat: DifferenceStat,
) -> Result<f64, LandscapeError> {
    if !a.compatible(b) {
        return Err(LandscapeError::IncompatibleGrid);
    }
    let mut best = match stat {
        DifferenceStat::Absolute => 0.0,
        DifferenceStat::Signed => f64::NEG_INFINITY,
    };
    for (ra, rb) in a.levels.iter().zip(&b.levels) {
        for (x, y) in ra.iter().zip(rb) {
            let d = match stat {
                DifferenceStat::Absolute => (x - y).abs(),
                DifferenceStat::Signed => x - y,
            };
            best = best.max(d);
        }
    }
    Ok(best)
}
