//! Vietoris-Rips persistent homology of a finite dissimilarity matrix.
//!
//! Dimension 0 is computed by single-linkage merging (union-find over edges
//! in ascending order); dimension 1 by reduction of the boundary matrix of
//! the Rips filtration restricted to simplices of dimension <= 2, over the
//! two-element field. [`brute_force_persistence`] is a deliberately
//! unoptimized dense reduction kept as an independent oracle; the two paths
//! share no code beyond the input type.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

/// Symmetric dissimilarity matrix with zero diagonal.
///
/// The triangle inequality is not required: coherence distances need not
/// satisfy it, and the Rips construction only needs a symmetric
/// dissimilarity.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteMetric {
    n: usize,
    d: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MetricError {
    NotSquare,
    Asymmetric { i: usize, j: usize },
    NonzeroDiagonal { i: usize },
    NegativeEntry { i: usize, j: usize },
    NonFiniteEntry { i: usize, j: usize },
}

impl fmt::Display for MetricError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MetricError::NotSquare => write!(f, "matrix is not square"),
            MetricError::Asymmetric { i, j } => write!(f, "entry ({i},{j}) != ({j},{i})"),
            MetricError::NonzeroDiagonal { i } => write!(f, "diagonal entry ({i},{i}) is not 0"),
            MetricError::NegativeEntry { i, j } => write!(f, "entry ({i},{j}) is negative"),
            MetricError::NonFiniteEntry { i, j } => write!(f, "entry ({i},{j}) is not finite"),
        }
    }
}

impl core::error::Error for MetricError {}

impl FiniteMetric {
    /// Validates a row-major n*n matrix.
    pub fn from_flat(n: usize, d: Vec<f64>) -> Result<Self, MetricError> {
        if d.len() != n * n {
            return Err(MetricError::NotSquare);
        }
        for i in 0..n {
            if d[i * n + i] != 0.0 {
                return Err(MetricError::NonzeroDiagonal { i });
            }
            for j in (i + 1)..n {
                let a = d[i * n + j];
                if !a.is_finite() {
                    return Err(MetricError::NonFiniteEntry { i, j });
                }
                if a < 0.0 {
                    return Err(MetricError::NegativeEntry { i, j });
                }
                if a != d[j * n + i] {
                    return Err(MetricError::Asymmetric { i, j });
                }
            }
        }
        Ok(Self { n, d })
    }

    /// Builds the matrix from a function on unordered pairs i < j.
    pub fn from_upper<F: FnMut(usize, usize) -> f64>(n: usize, mut f: F) -> Result<Self, MetricError> {
        let mut d = vec![0.0; n * n];
        for i in 0..n {
            for j in (i + 1)..n {
                let v = f(i, j);
                d[i * n + j] = v;
                d[j * n + i] = v;
            }
        }
        Self::from_flat(n, d)
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.d[i * self.n + j]
    }

    pub fn max_entry(&self) -> f64 {
        self.d.iter().copied().fold(0.0, f64::max)
    }

    /// Applies a relabeling of the points: entry (i, j) of the result is
    /// d(perm[i], perm[j]).
    pub fn permuted(&self, perm: &[usize]) -> FiniteMetric {
        let n = self.n;
        let mut d = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                d[i * n + j] = self.get(perm[i], perm[j]);
            }
        }
        FiniteMetric { n, d }
    }
}

/// One finite bar.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PersistencePair {
    pub birth: f64,
    pub death: f64,
}

/// Birth/death pairs in dimensions 0 and 1, plus the births of classes that
/// never die within the filtration.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PersistenceDiagram {
    finite: [Vec<PersistencePair>; 2],
    essential: [Vec<f64>; 2],
}

impl PersistenceDiagram {
    pub fn finite(&self, dim: usize) -> &[PersistencePair] {
        &self.finite[dim]
    }

    pub fn essential_births(&self, dim: usize) -> &[f64] {
        &self.essential[dim]
    }

    pub fn essential_count(&self, dim: usize) -> usize {
        self.essential[dim].len()
    }

    pub fn push_finite(&mut self, dim: usize, birth: f64, death: f64) {
        debug_assert!(death >= birth);
        self.finite[dim].push(PersistencePair { birth, death });
    }

    pub fn push_essential(&mut self, dim: usize, birth: f64) {
        self.essential[dim].push(birth);
    }

    /// Sorts bars within each dimension so diagrams compare as multisets.
    pub fn normalize(&mut self) {
        for bars in self.finite.iter_mut() {
            bars.sort_by(|a, b| a.birth.total_cmp(&b.birth).then(a.death.total_cmp(&b.death)));
        }
        for births in self.essential.iter_mut() {
            births.sort_by(f64::total_cmp);
        }
    }

    /// Multiset equality of finite bars and essential births, per dimension.
    pub fn multiset_eq(&self, other: &PersistenceDiagram) -> bool {
        let mut a = self.clone();
        let mut b = other.clone();
        a.normalize();
        b.normalize();
        a == b
    }

    /// Merges the bars of `other` into `self` (used to combine the
    /// separately computed dimension-0 and dimension-1 parts).
    pub fn merge(&mut self, other: PersistenceDiagram) {
        for dim in 0..2 {
            self.finite[dim].extend_from_slice(&other.finite[dim]);
            self.essential[dim].extend_from_slice(&other.essential[dim]);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PersistenceError {
    /// The complex would be too large for the requested computation.
    TooManyPoints { n: usize, max: usize },
}

impl fmt::Display for PersistenceError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PersistenceError::TooManyPoints { n, max } => {
                write!(f, "{n} points exceed the supported maximum of {max}")
            }
        }
    }
}

impl core::error::Error for PersistenceError {}

mod union_find {
    use alloc::vec::Vec;

    pub struct DisjointSet {
        parent: Vec<usize>,
        rank: Vec<u8>,
    }

    impl DisjointSet {
        pub fn new(n: usize) -> Self {
            Self {
                parent: (0..n).collect(),
                rank: alloc::vec![0; n],
            }
        }

        pub fn find(&mut self, mut node: usize) -> usize {
            let mut root = node;
            while self.parent[root] != root {
                root = self.parent[root];
            }
            while self.parent[node] != node {
                let next = self.parent[node];
                self.parent[node] = root;
                node = next;
            }
            root
        }

        /// Returns false if the nodes were already in one component.
        pub fn union(&mut self, a: usize, b: usize) -> bool {
            let mut ra = self.find(a);
            let mut rb = self.find(b);
            if ra == rb {
                return false;
            }
            if self.rank[ra] < self.rank[rb] {
                core::mem::swap(&mut ra, &mut rb);
            }
            self.parent[rb] = ra;
            if self.rank[ra] == self.rank[rb] {
                self.rank[ra] = self.rank[ra].saturating_add(1);
            }
            true
        }
    }
}

use union_find::DisjointSet;

/// All edges (i < j) sorted by (weight, i, j); the lexicographic tie-break
/// matches the global filtration order used everywhere else.
fn sorted_edges(metric: &FiniteMetric) -> Vec<(f64, usize, usize)> {
    let n = metric.len();
    let mut edges = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            edges.push((metric.get(i, j), i, j));
        }
    }
    edges.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    edges
}

/// Dimension-0 Rips persistence by single-linkage merging.
///
/// Every vertex is born at 0; each of the n-1 merge events contributes a bar
/// (0, w) at the weight of the minimum-spanning-tree edge that performs the
/// merge, and one class survives forever.
pub fn rips_h0(metric: &FiniteMetric) -> PersistenceDiagram {
    let n = metric.len();
    let mut diagram = PersistenceDiagram::default();
    if n == 0 {
        return diagram;
    }
    let mut sets = DisjointSet::new(n);
    let mut merges = 0;
    for (w, i, j) in sorted_edges(metric) {
        if sets.union(i, j) {
            diagram.push_finite(0, 0.0, w);
            merges += 1;
            if merges == n - 1 {
                break;
            }
        }
    }
    diagram.push_essential(0, 0.0);
    diagram
}

/// Hard cap for the optimized dimension-1 computation; the complex has
/// O(n^3) triangles.
pub const RIPS_H1_MAX_POINTS: usize = 32;

/// Dimension-1 Rips persistence by boundary-matrix reduction over F2.
///
/// Simplices up to dimension 2 enter in (filtration value, dimension,
/// lexicographic) order, truncated at `r_max` (defaulting to the largest
/// entry, where the complex is complete). Edges that close a loop are
/// detected with union-find; triangle columns are then reduced in the edge
/// basis. Bars of zero length are discarded.
pub fn rips_h1(metric: &FiniteMetric, r_max: Option<f64>) -> Result<PersistenceDiagram, PersistenceError> {
    let n = metric.len();
    if n > RIPS_H1_MAX_POINTS {
        return Err(PersistenceError::TooManyPoints {
            n,
            max: RIPS_H1_MAX_POINTS,
        });
    }
    let r_max = r_max.unwrap_or(metric.max_entry());
    let mut diagram = PersistenceDiagram::default();
    if n < 3 {
        return Ok(diagram);
    }

    let edges: Vec<(f64, usize, usize)> = sorted_edges(metric)
        .into_iter()
        .filter(|&(w, _, _)| w <= r_max)
        .collect();

    // Edge -> index in filtration order; positive edges create loops.
    let mut edge_index = vec![usize::MAX; n * n];
    let mut positive = vec![false; edges.len()];
    let mut sets = DisjointSet::new(n);
    for (idx, &(_, i, j)) in edges.iter().enumerate() {
        edge_index[i * n + j] = idx;
        positive[idx] = !sets.union(i, j);
    }

    // Triangles in filtration order: value is the longest edge.
    let mut triangles: Vec<(f64, usize, usize, usize)> = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            for k in (j + 1)..n {
                let w = metric.get(i, j).max(metric.get(i, k)).max(metric.get(j, k));
                if w <= r_max {
                    triangles.push((w, i, j, k));
                }
            }
        }
    }
    triangles.sort_by(|a, b| {
        a.0.total_cmp(&b.0)
            .then(a.1.cmp(&b.1))
            .then(a.2.cmp(&b.2))
            .then(a.3.cmp(&b.3))
    });

    // Standard column reduction of the triangle block, columns expressed as
    // sorted edge-index sets over F2.
    let mut pivot_owner: Vec<Option<usize>> = vec![None; edges.len()];
    let mut reduced_cols: Vec<Vec<usize>> = Vec::with_capacity(triangles.len());
    let mut paired_edge_death: Vec<Option<f64>> = vec![None; edges.len()];
    for &(w, i, j, k) in &triangles {
        let mut col = vec![
            edge_index[i * n + j],
            edge_index[i * n + k],
            edge_index[j * n + k],
        ];
        col.sort_unstable();
        while let Some(&low) = col.last() {
            match pivot_owner[low] {
                Some(owner) => col = add_f2(&col, &reduced_cols[owner]),
                None => {
                    pivot_owner[low] = Some(reduced_cols.len());
                    paired_edge_death[low] = Some(w);
                    break;
                }
            }
        }
        reduced_cols.push(col);
    }

    for (idx, &(w, _, _)) in edges.iter().enumerate() {
        if !positive[idx] {
            continue;
        }
        match paired_edge_death[idx] {
            Some(death) if death > w => diagram.push_finite(1, w, death),
            Some(_) => {} // zero-length bar
            None => diagram.push_essential(1, w),
        }
    }
    Ok(diagram)
}

/// Symmetric difference of two ascending index lists (column addition
/// over F2).
fn add_f2(a: &[usize], b: &[usize]) -> Vec<usize> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut x, mut y) = (0, 0);
    while x < a.len() && y < b.len() {
        match a[x].cmp(&b[y]) {
            core::cmp::Ordering::Less => {
                out.push(a[x]);
                x += 1;
            }
            core::cmp::Ordering::Greater => {
                out.push(b[y]);
                y += 1;
            }
            core::cmp::Ordering::Equal => {
                x += 1;
                y += 1;
            }
        }
    }
    out.extend_from_slice(&a[x..]);
    out.extend_from_slice(&b[y..]);
    out
}

/// Hard cap for the oracle; it builds the full dense boundary matrix.
pub const BRUTE_FORCE_MAX_POINTS: usize = 10;

/// Reference persistence by dense boundary-matrix reduction over F2 with no
/// optimizations, for use as a test oracle against [`rips_h0`] and
/// [`rips_h1`].
///
/// Every simplex up to dimension `max_dim + 1` becomes a dense boolean
/// column; columns are reduced left to right by linearly scanning earlier
/// columns for a matching pivot. Conventions match the optimized paths:
/// (value, dimension, lexicographic) order, zero-length bars kept in
/// dimension 0 and dropped in dimension 1.
#[allow(clippy::needless_range_loop)] // naive scans are the point here
pub fn brute_force_persistence(
    metric: &FiniteMetric,
    max_dim: usize,
) -> Result<PersistenceDiagram, PersistenceError> {
    let n = metric.len();
    if n > BRUTE_FORCE_MAX_POINTS {
        return Err(PersistenceError::TooManyPoints {
            n,
            max: BRUTE_FORCE_MAX_POINTS,
        });
    }
    let max_dim = max_dim.min(1);

    // Enumerate simplices as vertex sets with filtration values.
    #[derive(Clone)]
    struct Simplex {
        verts: Vec<usize>,
        value: f64,
    }
    let mut simplices: Vec<Simplex> = Vec::new();
    for v in 0..n {
        simplices.push(Simplex {
            verts: vec![v],
            value: 0.0,
        });
    }
    for i in 0..n {
        for j in (i + 1)..n {
            simplices.push(Simplex {
                verts: vec![i, j],
                value: metric.get(i, j),
            });
        }
    }
    if max_dim >= 1 {
        for i in 0..n {
            for j in (i + 1)..n {
                for k in (j + 1)..n {
                    let value = metric
                        .get(i, j)
                        .max(metric.get(i, k))
                        .max(metric.get(j, k));
                    simplices.push(Simplex {
                        verts: vec![i, j, k],
                        value,
                    });
                }
            }
        }
    }
    simplices.sort_by(|a, b| {
        a.value
            .total_cmp(&b.value)
            .then(a.verts.len().cmp(&b.verts.len()))
            .then(a.verts.cmp(&b.verts))
    });

    let index_of = |verts: &[usize], simplices: &[Simplex]| -> usize {
        simplices
            .iter()
            .position(|s| s.verts == verts)
            .expect("face must precede coface")
    };

    // Dense boundary columns over F2.
    let m = simplices.len();
    let mut columns: Vec<Vec<bool>> = vec![vec![false; m]; m];
    for (j, simplex) in simplices.iter().enumerate() {
        if simplex.verts.len() == 1 {
            continue;
        }
        for omit in 0..simplex.verts.len() {
            let mut face = simplex.verts.clone();
            face.remove(omit);
            let row = index_of(&face, &simplices);
            columns[j][row] = true;
        }
    }

    let low = |col: &[bool]| col.iter().rposition(|&b| b);

    // Left-to-right reduction with naive pivot search.
    let mut pairs: Vec<(usize, usize)> = Vec::new();
    let mut paired = vec![false; m];
    for j in 0..m {
        while let Some(pivot) = low(&columns[j]) {
            let mut collided = None;
            for jj in 0..j {
                if low(&columns[jj]) == Some(pivot) {
                    collided = Some(jj);
                    break;
                }
            }
            match collided {
                Some(jj) => {
                    let (left, right) = columns.split_at_mut(j);
                    for (row, bit) in right[0].iter_mut().enumerate() {
                        *bit ^= left[jj][row];
                    }
                }
                None => {
                    pairs.push((pivot, j));
                    paired[pivot] = true;
                    paired[j] = true;
                    break;
                }
            }
        }
    }

    let mut diagram = PersistenceDiagram::default();
    for (i, j) in pairs {
        let dim = simplices[i].verts.len() - 1;
        if dim > max_dim {
            continue;
        }
        let birth = simplices[i].value;
        let death = simplices[j].value;
        if dim == 0 || death > birth {
            diagram.push_finite(dim, birth, death);
        }
    }
    for (j, simplex) in simplices.iter().enumerate() {
        if paired[j] {
            continue;
        }
        // unpaired columns with zero boundary create essential classes
        if low(&columns[j]).is_none() {
            let dim = simplex.verts.len() - 1;
            if dim <= max_dim {
                diagram.push_essential(dim, simplex.value);
            }
        }
    }
    Ok(diagram)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn metric_from_rows(rows: &[&[f64]]) -> FiniteMetric {
        let n = rows.len();
        FiniteMetric::from_upper(n, |i, j| rows[i][j]).unwrap()
    }

    fn random_metric(rng: &mut ChaCha8Rng, n: usize) -> FiniteMetric {
        FiniteMetric::from_upper(n, |_, _| rng.gen_range(0.0..1.0)).unwrap()
    }

    #[test]
    fn metric_validation_catches_each_defect() {
        assert_eq!(
            FiniteMetric::from_flat(2, vec![0.0, 1.0, 2.0, 0.0]).unwrap_err(),
            MetricError::Asymmetric { i: 0, j: 1 }
        );
        assert_eq!(
            FiniteMetric::from_flat(2, vec![0.5, 1.0, 1.0, 0.0]).unwrap_err(),
            MetricError::NonzeroDiagonal { i: 0 }
        );
        assert_eq!(
            FiniteMetric::from_flat(2, vec![0.0, -1.0, -1.0, 0.0]).unwrap_err(),
            MetricError::NegativeEntry { i: 0, j: 1 }
        );
        assert_eq!(
            FiniteMetric::from_flat(2, vec![0.0, 1.0, 1.0]).unwrap_err(),
            MetricError::NotSquare
        );
    }

    #[test]
    fn two_points_one_bar() {
        let m = metric_from_rows(&[&[0.0, 0.7], &[0.7, 0.0]]);
        let d = rips_h0(&m);
        assert_eq!(d.finite(0), &[PersistencePair { birth: 0.0, death: 0.7 }]);
        assert_eq!(d.essential_count(0), 1);
        let oracle = brute_force_persistence(&m, 0).unwrap();
        assert!(d.multiset_eq(&oracle) || {
            // oracle also reports dim-1 emptiness; compare dim 0 only
            d.finite(0) == oracle.finite(0) && d.essential_births(0) == oracle.essential_births(0)
        });
    }

    #[test]
    fn three_points_merge_along_mst() {
        let m = metric_from_rows(&[
            &[0.0, 1.0, 2.0],
            &[1.0, 0.0, 3.0],
            &[2.0, 3.0, 0.0],
        ]);
        let mut d = rips_h0(&m);
        d.normalize();
        assert_eq!(
            d.finite(0),
            &[
                PersistencePair { birth: 0.0, death: 1.0 },
                PersistencePair { birth: 0.0, death: 2.0 }
            ]
        );
        assert_eq!(d.essential_count(0), 1);
    }

    #[test]
    fn coincident_points_merge_at_zero() {
        let n = 5;
        let m = FiniteMetric::from_upper(n, |_, _| 0.0).unwrap();
        let d = rips_h0(&m);
        assert_eq!(d.finite(0).len(), n - 1);
        assert!(d.finite(0).iter().all(|p| p.birth == 0.0 && p.death == 0.0));
        assert_eq!(d.essential_count(0), 1);
    }

    #[test]
    fn single_point_has_only_the_essential_class() {
        let m = FiniteMetric::from_flat(1, vec![0.0]).unwrap();
        let d = rips_h0(&m);
        assert!(d.finite(0).is_empty());
        assert_eq!(d.essential_count(0), 1);
        let oracle = brute_force_persistence(&m, 1).unwrap();
        assert!(oracle.finite(0).is_empty());
        assert_eq!(oracle.essential_count(0), 1);
        assert!(oracle.finite(1).is_empty());
    }

    #[test]
    fn unit_square_has_one_loop() {
        let s = 1.0;
        let diag = libm::sqrt(2.0);
        let m = metric_from_rows(&[
            &[0.0, s, diag, s],
            &[s, 0.0, s, diag],
            &[diag, s, 0.0, s],
            &[s, diag, s, 0.0],
        ]);
        let d = rips_h1(&m, None).unwrap();
        assert_eq!(
            d.finite(1),
            &[PersistencePair { birth: s, death: diag }]
        );
        assert_eq!(d.essential_count(1), 0);
        let oracle = brute_force_persistence(&m, 1).unwrap();
        assert_eq!(d.finite(1), oracle.finite(1));
    }

    #[test]
    fn triangles_never_carry_a_loop() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..50 {
            let m = random_metric(&mut rng, 3);
            let d = rips_h1(&m, None).unwrap();
            assert!(d.finite(1).is_empty());
            assert_eq!(d.essential_count(1), 0);
        }
    }

    #[test]
    fn one_or_two_points_have_empty_dim1() {
        let m = FiniteMetric::from_flat(1, vec![0.0]).unwrap();
        assert!(rips_h1(&m, None).unwrap().finite(1).is_empty());
        let m = metric_from_rows(&[&[0.0, 0.4], &[0.4, 0.0]]);
        assert!(rips_h1(&m, None).unwrap().finite(1).is_empty());
    }

    #[test]
    fn capacity_errors_fire() {
        let m = FiniteMetric::from_upper(33, |i, j| (i + j) as f64).unwrap();
        assert_eq!(
            rips_h1(&m, None).unwrap_err(),
            PersistenceError::TooManyPoints { n: 33, max: 32 }
        );
        let m = FiniteMetric::from_upper(11, |i, j| (i + j) as f64).unwrap();
        assert_eq!(
            brute_force_persistence(&m, 1).unwrap_err(),
            PersistenceError::TooManyPoints { n: 11, max: 10 }
        );
    }

    #[test]
    fn truncated_filtration_leaves_essential_loops() {
        // Square with diagonals excluded by r_max: the loop never fills.
        let m = metric_from_rows(&[
            &[0.0, 1.0, 1.4, 1.0],
            &[1.0, 0.0, 1.0, 1.4],
            &[1.4, 1.0, 0.0, 1.0],
            &[1.0, 1.4, 1.0, 0.0],
        ]);
        let d = rips_h1(&m, Some(1.2)).unwrap();
        assert!(d.finite(1).is_empty());
        assert_eq!(d.essential_count(1), 1);
        assert_eq!(d.essential_births(1), &[1.0]);
    }

    #[test]
    fn optimized_paths_match_oracle_on_random_instances() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        for trial in 0..120 {
            let n = rng.gen_range(2..=8);
            let m = random_metric(&mut rng, n);
            let mut fast = rips_h0(&m);
            fast.merge(rips_h1(&m, None).unwrap());
            let oracle = brute_force_persistence(&m, 1).unwrap();
            assert!(
                fast.multiset_eq(&oracle),
                "trial {trial}: fast {fast:?} vs oracle {oracle:?}"
            );
        }
    }

    #[test]
    fn ties_are_handled_identically_by_both_paths() {
        // Quantized entries force many exact ties.
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..80 {
            let n = rng.gen_range(3..=7);
            let m = FiniteMetric::from_upper(n, |_, _| {
                libm::round(rng.gen_range(0.0..4.0)) / 4.0
            })
            .unwrap();
            let mut fast = rips_h0(&m);
            fast.merge(rips_h1(&m, None).unwrap());
            let oracle = brute_force_persistence(&m, 1).unwrap();
            assert!(fast.multiset_eq(&oracle), "{m:?}");
        }
    }

    #[test]
    fn relabeling_points_leaves_diagrams_unchanged() {
        let mut rng = ChaCha8Rng::seed_from_u64(24);
        for _ in 0..40 {
            let n = rng.gen_range(2..=7);
            let m = random_metric(&mut rng, n);
            // random permutation by sorting random keys
            let mut perm: Vec<usize> = (0..n).collect();
            for i in (1..n).rev() {
                let j = rng.gen_range(0..=i);
                perm.swap(i, j);
            }
            let pm = m.permuted(&perm);
            assert!(rips_h0(&m).multiset_eq(&rips_h0(&pm)));
            assert!(rips_h1(&m, None)
                .unwrap()
                .multiset_eq(&rips_h1(&pm, None).unwrap()));
        }
    }

    #[test]
    fn scaling_distances_scales_every_bar() {
        let mut rng = ChaCha8Rng::seed_from_u64(25);
        for _ in 0..25 {
            let n = rng.gen_range(2..=7);
            let m = random_metric(&mut rng, n);
            let c = rng.gen_range(0.1..5.0);
            let scaled = FiniteMetric::from_upper(n, |i, j| c * m.get(i, j)).unwrap();
            let mut base = rips_h0(&m);
            base.merge(rips_h1(&m, None).unwrap());
            let mut big = rips_h0(&scaled);
            big.merge(rips_h1(&scaled, None).unwrap());
            base.normalize();
            big.normalize();
            for dim in 0..2 {
                assert_eq!(base.finite(dim).len(), big.finite(dim).len());
                for (p, q) in base.finite(dim).iter().zip(big.finite(dim)) {
                    assert_eq!(q.birth, c * p.birth);
                    assert_eq!(q.death, c * p.death);
                }
            }
        }
    }

    #[test]
    fn dim0_bar_count_is_always_n_minus_1_plus_essential() {
        let mut rng = ChaCha8Rng::seed_from_u64(26);
        for _ in 0..60 {
            let n = rng.gen_range(1..=8);
            let m = random_metric(&mut rng, n);
            let d = rips_h0(&m);
            assert_eq!(d.finite(0).len(), n - 1);
            assert_eq!(d.essential_count(0), 1);
            assert!(d.finite(0).iter().all(|p| p.birth == 0.0));
        }
    }

    #[test]
    fn dim0_deaths_are_stable_under_perturbation() {
        let mut rng = ChaCha8Rng::seed_from_u64(27);
        for _ in 0..40 {
            let n = rng.gen_range(2..=7);
            let m = random_metric(&mut rng, n);
            let delta = rng.gen_range(0.0..0.05);
            let perturbed = FiniteMetric::from_upper(n, |i, j| {
                (m.get(i, j) + rng.gen_range(-delta..=delta)).max(0.0)
            })
            .unwrap();
            let mut a: Vec<f64> = rips_h0(&m).finite(0).iter().map(|p| p.death).collect();
            let mut b: Vec<f64> = rips_h0(&perturbed)
                .finite(0)
                .iter()
                .map(|p| p.death)
                .collect();
            a.sort_by(f64::total_cmp);
            b.sort_by(f64::total_cmp);
            for (x, y) in a.iter().zip(&b) {
                assert!((x - y).abs() <= delta + 1e-12);
            }
        }
    }
}
