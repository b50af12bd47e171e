//! Shared domain types: distance matrices, weighted instances, level maps,
//! and l0 cost accounting.

use crate::{Error, Result};
use serde::Serialize;

/// Index of the unordered pair `{i, j}` (with `i < j`) in a flat
/// upper-triangular layout over `n` points.
#[inline]
pub fn pair_index(n: usize, i: usize, j: usize) -> usize {
    debug_assert!(i < j && j < n);
    // Row i starts after the pairs of rows 0..i.
    i * n - i * (i + 1) / 2 + (j - i - 1)
}

/// Number of unordered pairs over `n` points.
#[inline]
pub fn pair_count(n: usize) -> usize {
    n * (n - 1) / 2
}

/// A complete symmetric matrix of nonnegative dissimilarities on `n >= 1`
/// points. Exactly one value is stored per unordered pair; the diagonal is
/// implicitly zero and never stored. Values are finite `f64`s.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    n: usize,
    values: Vec<f64>,
}

impl DistanceMatrix {
    /// Build a matrix from flat upper-triangular values ordered as
    /// `(0,1), (0,2), ..., (0,n-1), (1,2), ...`.
    pub fn from_values(n: usize, values: Vec<f64>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidMatrix("point count must be >= 1".into()));
        }
        if values.len() != pair_count(n) {
            return Err(Error::InvalidMatrix(format!(
                "expected {} pair values for n = {}, got {}",
                pair_count(n),
                n,
                values.len()
            )));
        }
        for (idx, &v) in values.iter().enumerate() {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::InvalidMatrix(format!(
                    "pair value #{idx} is {v}; values must be finite and >= 0"
                )));
            }
        }
        Ok(Self { n, values })
    }

    /// Build a matrix by evaluating `f(i, j)` for every pair `i < j`.
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let mut values = Vec::with_capacity(pair_count(n));
        for i in 0..n {
            for j in (i + 1)..n {
                values.push(f(i, j));
            }
        }
        Self::from_values(n, values)
    }

    /// Constant matrix with every pair at `value`.
    pub fn constant(n: usize, value: f64) -> Result<Self> {
        Self::from_values(n, vec![value; pair_count(n)])
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (a, b) = if i < j { (i, j) } else { (j, i) };
        self.values[pair_index(self.n, a, b)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let (a, b) = if i < j { (i, j) } else { (j, i) };
        self.values[pair_index(self.n, a, b)] = v;
    }

    /// Iterate over all pairs `(i, j, value)` with `i < j` in index order.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        let n = self.n;
        (0..n).flat_map(move |i| {
            ((i + 1)..n).map(move |j| (i, j, self.values[pair_index(n, i, j)]))
        })
    }

    /// Flat pair values in index order.
    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Largest pair value. `None` only when `n = 1` (no pairs).
    pub fn max_value(&self) -> Option<f64> {
        self.values.iter().copied().fold(None, |acc, v| {
            Some(match acc {
                None => v,
                Some(m) => m.max(v),
            })
        })
    }

    /// Sorted distinct pair values.
    pub fn distinct_values(&self) -> Vec<f64> {
        let mut vals = self.values.clone();
        vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
        vals.dedup();
        vals
    }

    /// Restrict to the given points (ascending), reindexing them as `0..k`.
    pub fn restrict(&self, points: &[usize]) -> DistanceMatrix {
        let k = points.len();
        let mut values = Vec::with_capacity(pair_count(k));
        for a in 0..k {
            for b in (a + 1)..k {
                values.push(self.get(points[a], points[b]));
            }
        }
        DistanceMatrix { n: k, values }
    }
}

/// A distance matrix together with a nonnegative weight per pair. Weights
/// scale the cost of changing the corresponding entry; they default to 1.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedInstance {
    distances: DistanceMatrix,
    weights: Vec<f64>,
}

impl WeightedInstance {
    pub fn new(distances: DistanceMatrix, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != distances.values.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} weights for {} pairs",
                weights.len(),
                distances.values.len()
            )));
        }
        for (idx, &w) in weights.iter().enumerate() {
            if !w.is_finite() || w < 0.0 {
                return Err(Error::InvalidMatrix(format!(
                    "weight #{idx} is {w}; weights must be finite and >= 0"
                )));
            }
        }
        Ok(Self { distances, weights })
    }

    /// Wrap a matrix with unit weights.
    pub fn unit(distances: DistanceMatrix) -> Self {
        let weights = vec![1.0; distances.values.len()];
        Self { distances, weights }
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.distances.n()
    }

    #[inline]
    pub fn distances(&self) -> &DistanceMatrix {
        &self.distances
    }

    #[inline]
    pub fn weight(&self, i: usize, j: usize) -> f64 {
        let (a, b) = if i < j { (i, j) } else { (j, i) };
        self.weights[pair_index(self.n(), a, b)]
    }

    #[inline]
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn is_unit_weight(&self) -> bool {
        self.weights.iter().all(|&w| w == 1.0)
    }
}

/// Weighted count of entries where `x` and `y` differ. With unit weights
/// this is the plain l0 distance. Equality is exact (`tol = 0`) unless an
/// absolute tolerance is supplied.
pub fn l0_cost(x: &WeightedInstance, y: &DistanceMatrix, tol: f64) -> Result<f64> {
    if x.n() != y.n() {
        return Err(Error::DimensionMismatch(format!(
            "instance has {} points, candidate has {}",
            x.n(),
            y.n()
        )));
    }
    let mut cost = 0.0;
    for (idx, (&a, &b)) in x.distances.values.iter().zip(y.values.iter()).enumerate() {
        if (a - b).abs() > tol {
            cost += x.weights[idx];
        }
    }
    Ok(cost)
}

/// The strictly increasing distinct distance values of an instance, with
/// 1-based level lookup: `index(w_t) = t`.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelMap {
    levels: Vec<f64>,
}

impl LevelMap {
    /// Number of levels `L`.
    #[inline]
    pub fn len(&self) -> usize {
        self.levels.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    /// The value `w_t` of a 1-based level.
    #[inline]
    pub fn value(&self, t: usize) -> f64 {
        self.levels[t - 1]
    }

    /// The 1-based level of a distance value present in the instance.
    pub fn index(&self, value: f64) -> Option<usize> {
        self.levels
            .binary_search_by(|v| v.partial_cmp(&value).unwrap())
            .ok()
            .map(|i| i + 1)
    }

    #[inline]
    pub fn levels(&self) -> &[f64] {
        &self.levels
    }
}

/// Collect the sorted distinct distance values of `x` into a [`LevelMap`].
pub fn build_level_map(x: &DistanceMatrix) -> LevelMap {
    LevelMap {
        levels: x.distinct_values(),
    }
}

/// One changed entry: the pair plus its value before and after repair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModifiedPair {
    pub i: usize,
    pub j: usize,
    pub old: f64,
    pub new: f64,
}

/// The outcome of a repair: the output matrix, its weighted l0 cost against
/// the input, the list of changed pairs, and (for pivot algorithms) an
/// optional per-iteration trace.
#[derive(Debug, Clone)]
pub struct RepairResult {
    pub output: DistanceMatrix,
    pub cost: f64,
    pub modified_pairs: Vec<ModifiedPair>,
    pub trace: Option<crate::pivot::PivotTrace>,
}

impl RepairResult {
    /// Diff `output` against the original weighted instance.
    pub fn from_output(
        input: &WeightedInstance,
        output: DistanceMatrix,
        trace: Option<crate::pivot::PivotTrace>,
    ) -> Self {
        let mut cost = 0.0;
        let mut modified_pairs = Vec::new();
        for (i, j, old) in input.distances().pairs() {
            let new = output.get(i, j);
            if old != new {
                cost += input.weight(i, j);
                modified_pairs.push(ModifiedPair { i, j, old, new });
            }
        }
        Self {
            output,
            cost,
            modified_pairs,
            trace,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn matrix3(a: f64, b: f64, c: f64) -> DistanceMatrix {
        // pairs (0,1), (0,2), (1,2)
        DistanceMatrix::from_values(3, vec![a, b, c]).unwrap()
    }

    #[test]
    fn pair_indexing_roundtrip() {
        let n = 7;
        let mut seen = vec![false; pair_count(n)];
        for i in 0..n {
            for j in (i + 1)..n {
                let idx = pair_index(n, i, j);
                assert!(!seen[idx]);
                seen[idx] = true;
            }
        }
        assert!(seen.iter().all(|&s| s));
    }

    #[test]
    fn rejects_bad_matrices() {
        assert!(DistanceMatrix::from_values(0, vec![]).is_err());
        assert!(DistanceMatrix::from_values(3, vec![1.0, 2.0]).is_err());
        assert!(DistanceMatrix::from_values(3, vec![1.0, -2.0, 1.0]).is_err());
        assert!(DistanceMatrix::from_values(3, vec![1.0, f64::NAN, 1.0]).is_err());
        assert!(DistanceMatrix::from_values(3, vec![1.0, f64::INFINITY, 1.0]).is_err());
        assert!(DistanceMatrix::from_values(1, vec![]).is_ok());
    }

    #[test]
    fn l0_cost_identity_is_zero() {
        let x = WeightedInstance::unit(matrix3(1.0, 2.0, 3.0));
        assert_eq!(l0_cost(&x, x.distances(), 0.0).unwrap(), 0.0);
    }

    #[test]
    fn l0_cost_counts_single_change() {
        let x = WeightedInstance::unit(matrix3(1.0, 2.0, 3.0));
        let y = matrix3(1.0, 2.5, 3.0);
        assert_eq!(l0_cost(&x, &y, 0.0).unwrap(), 1.0);
    }

    #[test]
    fn l0_cost_weights_changed_entries() {
        let x = WeightedInstance::new(matrix3(1.0, 2.0, 3.0), vec![2.0, 3.0, 5.0]).unwrap();
        let y = matrix3(1.0, 9.0, 9.0);
        assert_eq!(l0_cost(&x, &y, 0.0).unwrap(), 8.0);
    }

    #[test]
    fn l0_cost_respects_tolerance() {
        let x = WeightedInstance::unit(matrix3(1.0, 2.0, 3.0));
        let y = matrix3(1.0, 2.0 + 1e-12, 3.0);
        assert_eq!(l0_cost(&x, &y, 0.0).unwrap(), 1.0);
        assert_eq!(l0_cost(&x, &y, 1e-9).unwrap(), 0.0);
    }

    #[test]
    fn l0_cost_rejects_mismatched_sizes() {
        let x = WeightedInstance::unit(matrix3(1.0, 2.0, 3.0));
        let y = DistanceMatrix::from_values(2, vec![1.0]).unwrap();
        assert!(l0_cost(&x, &y, 0.0).is_err());
    }

    #[test]
    fn level_map_all_equal() {
        let lm = build_level_map(&matrix3(1.0, 1.0, 1.0));
        assert_eq!(lm.levels(), &[1.0]);
        assert_eq!(lm.len(), 1);
    }

    #[test]
    fn level_map_sorts_and_dedups() {
        let x = DistanceMatrix::from_values(4, vec![3.0, 1.0, 2.0, 1.0, 3.0, 2.0]).unwrap();
        let lm = build_level_map(&x);
        assert_eq!(lm.levels(), &[1.0, 2.0, 3.0]);
        assert_eq!(lm.index(2.0), Some(2));
        assert_eq!(lm.index(1.0), Some(1));
        assert_eq!(lm.index(5.0), None);
        assert_eq!(lm.value(3), 3.0);
    }

    #[test]
    fn repair_result_diffs_against_input() {
        let x = WeightedInstance::unit(matrix3(1.0, 2.0, 3.0));
        let y = matrix3(1.0, 2.0, 4.0);
        let r = RepairResult::from_output(&x, y, None);
        assert_eq!(r.cost, 1.0);
        assert_eq!(r.modified_pairs.len(), 1);
        assert_eq!(r.modified_pairs[0].i, 1);
        assert_eq!(r.modified_pairs[0].j, 2);
        assert_eq!(r.modified_pairs[0].old, 3.0);
        assert_eq!(r.modified_pairs[0].new, 4.0);
    }

    #[test]
    fn restrict_reindexes() {
        let x = DistanceMatrix::from_fn(5, |i, j| (i + j) as f64).unwrap();
        let sub = x.restrict(&[1, 3, 4]);
        assert_eq!(sub.n(), 3);
        assert_eq!(sub.get(0, 1), 4.0);
        assert_eq!(sub.get(0, 2), 5.0);
        assert_eq!(sub.get(1, 2), 7.0);
    }
}
