//! Exact minimum-l0 repairs for tiny instances.
//!
//! A repair is equivalent to a hitting set over the unbalanced cycles of
//! the instance: a pair set `S` is feasible when every kept pair is no
//! longer than the shortest (metric) or minimax (ultrametric) path between
//! its endpoints in the graph without `S` and without the pair itself.
//! Subsets are enumerated by increasing size, so the first feasible one is
//! optimal; the witness matrix is rebuilt by path completion over the kept
//! pairs.

// Index loops over square adjacency tables read better than iterator chains.
#![allow(clippy::needless_range_loop)]

use crate::instance::{pair_count, DistanceMatrix};
use crate::{Error, Result};

/// Largest instance the exact solvers accept (21 pairs).
pub const EXACT_MAX_N: usize = 7;

/// An exact repair: the minimum number of changed pairs, the repaired
/// matrix, and the hitting set of pairs that were re-derived.
#[derive(Debug, Clone)]
pub struct ExactRepair {
    pub cost: u64,
    pub witness: DistanceMatrix,
    pub hitting_set: Vec<(usize, usize)>,
}

fn all_pairs(n: usize) -> Vec<(usize, usize)> {
    let mut pairs = Vec::with_capacity(pair_count(n));
    for i in 0..n {
        for j in (i + 1)..n {
            pairs.push((i, j));
        }
    }
    pairs
}

/// Adjacency with `S` removed; `f64::INFINITY` marks absent edges.
fn adjacency_without(x: &DistanceMatrix, s: &[(usize, usize)]) -> Vec<Vec<f64>> {
    let n = x.n();
    let mut adj = vec![vec![f64::INFINITY; n]; n];
    for i in 0..n {
        adj[i][i] = 0.0;
    }
    for (i, j, v) in x.pairs() {
        adj[i][j] = v;
        adj[j][i] = v;
    }
    for &(i, j) in s {
        adj[i][j] = f64::INFINITY;
        adj[j][i] = f64::INFINITY;
    }
    adj
}

fn shortest_path_closure(adj: &mut [Vec<f64>]) {
    let n = adj.len();
    for k in 0..n {
        for i in 0..n {
            let dik = adj[i][k];
            if dik.is_infinite() {
                continue;
            }
            for j in 0..n {
                let via = dik + adj[k][j];
                if via < adj[i][j] {
                    adj[i][j] = via;
                }
            }
        }
    }
}

fn minimax_path_closure(adj: &mut [Vec<f64>]) {
    let n = adj.len();
    for k in 0..n {
        for i in 0..n {
            let dik = adj[i][k];
            if dik.is_infinite() {
                continue;
            }
            for j in 0..n {
                let via = dik.max(adj[k][j]);
                if via < adj[i][j] {
                    adj[i][j] = via;
                }
            }
        }
    }
}

/// A kept pair is consistent iff its entry equals the closure distance:
/// the closure includes the direct edge, so equality means no strictly
/// better path avoids it.
fn kept_pairs_consistent(x: &DistanceMatrix, closure: &[Vec<f64>], in_s: &[bool]) -> bool {
    for (idx, (i, j, v)) in x.pairs().enumerate() {
        if !in_s[idx] && closure[i][j] != v {
            return false;
        }
    }
    true
}

/// Shortest-path completion: kept pairs keep their values, pairs of `S`
/// get the shortest-path distance over the kept edges, capped at
/// `1 + sum of all entries` so disconnected pairs stay finite.
pub fn metric_completion(x: &DistanceMatrix, s: &[(usize, usize)]) -> DistanceMatrix {
    let mut adj = adjacency_without(x, s);
    shortest_path_closure(&mut adj);
    let cap = 1.0 + x.values().iter().sum::<f64>();
    DistanceMatrix::from_fn(x.n(), |i, j| adj[i][j].min(cap)).expect("completion is valid")
}

/// Minimax-path (subdominant ultrametric) completion: pairs of `S` get the
/// bottleneck distance over the kept edges; disconnected pairs are
/// relabeled to `1 + max finite value`.
pub fn ultrametric_completion(x: &DistanceMatrix, s: &[(usize, usize)]) -> DistanceMatrix {
    let mut adj = adjacency_without(x, s);
    minimax_path_closure(&mut adj);
    let max_finite = adj
        .iter()
        .flatten()
        .copied()
        .filter(|v| v.is_finite())
        .fold(0.0f64, f64::max);
    let relabel = 1.0 + max_finite;
    DistanceMatrix::from_fn(x.n(), |i, j| {
        if adj[i][j].is_finite() {
            adj[i][j]
        } else {
            relabel
        }
    })
    .expect("completion is valid")
}

/// Advance a k-combination of `0..p` in lexicographic order.
fn next_combination(combo: &mut [usize], p: usize) -> bool {
    let k = combo.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if combo[i] != i + p - k {
            combo[i] += 1;
            for j in (i + 1)..k {
                combo[j] = combo[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

fn exact_search(
    x: &DistanceMatrix,
    closure: fn(&mut [Vec<f64>]),
    complete: fn(&DistanceMatrix, &[(usize, usize)]) -> DistanceMatrix,
) -> Result<ExactRepair> {
    let n = x.n();
    if n > EXACT_MAX_N {
        return Err(Error::ExactSearchSize {
            n,
            max: EXACT_MAX_N,
        });
    }
    let pairs = all_pairs(n);
    let p = pairs.len();

    for k in 0..=p {
        let mut combo: Vec<usize> = (0..k).collect();
        loop {
            let s: Vec<(usize, usize)> = combo.iter().map(|&c| pairs[c]).collect();
            let mut in_s = vec![false; p];
            for &c in &combo {
                in_s[c] = true;
            }
            let mut adj = adjacency_without(x, &s);
            closure(&mut adj);
            if kept_pairs_consistent(x, &adj, &in_s) {
                let witness = complete(x, &s);
                return Ok(ExactRepair {
                    cost: k as u64,
                    witness,
                    hitting_set: s,
                });
            }
            if !next_combination(&mut combo, p) {
                break;
            }
        }
    }
    unreachable!("S = all pairs is always feasible");
}

/// Minimum number of entries to change so `x` becomes a metric, with a
/// witness. `n <= 7`.
pub fn exact_mvd(x: &DistanceMatrix) -> Result<ExactRepair> {
    exact_search(x, shortest_path_closure, metric_completion)
}

/// Minimum number of entries to change so `x` becomes an ultrametric, with
/// a witness. `n <= 7`.
pub fn exact_umvd(x: &DistanceMatrix) -> Result<ExactRepair> {
    exact_search(x, minimax_path_closure, ultrametric_completion)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{l0_cost, WeightedInstance};
    use crate::instances::gen_star;
    use crate::violations::{is_metric, is_ultrametric};

    fn matrix3(a: f64, b: f64, c: f64) -> DistanceMatrix {
        DistanceMatrix::from_values(3, vec![a, b, c]).unwrap()
    }

    #[test]
    fn metric_input_costs_zero() {
        let x = matrix3(1.0, 1.0, 1.0);
        let r = exact_mvd(&x).unwrap();
        assert_eq!(r.cost, 0);
        assert_eq!(r.witness, x);
        assert!(r.hitting_set.is_empty());
    }

    #[test]
    fn single_excess_triangle_costs_one() {
        let r = exact_mvd(&matrix3(3.0, 1.0, 1.0)).unwrap();
        assert_eq!(r.cost, 1);
        assert!(is_metric(&r.witness));
    }

    #[test]
    fn star_instances_cost_one() {
        // Up to m = 5 the star fits the exact search (n = 7).
        for m in 1..=5 {
            let x = gen_star(m);
            let r = exact_mvd(&x).unwrap();
            assert_eq!(r.cost, 1, "m = {m}");
            assert!(is_metric(&r.witness));
            assert_eq!(r.hitting_set, vec![(0, 1)]);
        }
    }

    #[test]
    fn ultrametric_input_costs_zero() {
        let r = exact_umvd(&matrix3(5.0, 5.0, 3.0)).unwrap();
        assert_eq!(r.cost, 0);
    }

    #[test]
    fn distinct_triangle_costs_one() {
        let r = exact_umvd(&matrix3(5.0, 4.0, 3.0)).unwrap();
        assert_eq!(r.cost, 1);
        assert!(is_ultrametric(&r.witness));
    }

    #[test]
    fn flipped_cross_pair_costs_one() {
        // Two 3-cliques (inner 1, cross 2) with one cross pair at 1: no
        // zero-cost repair exists, restoring the flipped pair works.
        let x = DistanceMatrix::from_fn(6, |i, j| {
            let same_clique = (i < 3) == (j < 3);
            if same_clique || (i, j) == (0, 3) {
                1.0
            } else {
                2.0
            }
        })
        .unwrap();
        let r = exact_umvd(&x).unwrap();
        assert_eq!(r.cost, 1);
        assert_eq!(r.hitting_set, vec![(0, 3)]);
        assert_eq!(r.witness.get(0, 3), 2.0);
    }

    #[test]
    fn completion_identity_on_empty_set() {
        let x = matrix3(1.0, 1.0, 1.0);
        assert_eq!(metric_completion(&x, &[]), x);
        let u = matrix3(5.0, 5.0, 3.0);
        assert_eq!(ultrametric_completion(&u, &[]), u);
    }

    #[test]
    fn metric_completion_uses_shortest_path() {
        // Star m=2 with the (v,w) pair removed: v-u_1-w has length 2.
        let x = gen_star(2);
        let y = metric_completion(&x, &[(0, 1)]);
        assert_eq!(y.get(0, 1), 2.0);
        assert!(is_metric(&y));
    }

    #[test]
    fn metric_completion_reembeds_detached_point() {
        // Remove all pairs of point 3 in a 4-point metric; it comes back
        // at shortest-path distances, which a fresh triple check accepts.
        let (x, _) = crate::instances::gen_random_metric_noise(4, 0.0, 5).unwrap();
        let s = vec![(0, 3), (1, 3), (2, 3)];
        let y = metric_completion(&x, &s);
        assert!(is_metric(&y));
        for (i, j, v) in x.pairs() {
            if !s.contains(&(i, j)) {
                assert_eq!(y.get(i, j), v);
            }
        }
    }

    #[test]
    fn ultrametric_completion_takes_max_on_alternative_path() {
        // Triangle (5, 4, 3): removing the 4-edge completes it at
        // max(5, 3) = 5.
        let x = matrix3(5.0, 4.0, 3.0);
        let y = ultrametric_completion(&x, &[(0, 2)]);
        assert_eq!(y.get(0, 2), 5.0);
        assert_eq!(y.get(0, 1), 5.0);
        assert_eq!(y.get(1, 2), 3.0);
    }

    #[test]
    fn ultrametric_completion_relabels_disconnected() {
        let x = matrix3(5.0, 4.0, 3.0);
        // Point 0 fully detached: its pairs land at 1 + max finite = 4.
        let y = ultrametric_completion(&x, &[(0, 1), (0, 2)]);
        assert_eq!(y.get(1, 2), 3.0);
        assert_eq!(y.get(0, 1), 4.0);
        assert_eq!(y.get(0, 2), 4.0);
        assert!(is_ultrametric(&y));
    }

    #[test]
    fn witnesses_are_valid_and_match_cost() {
        for seed in 0..10u64 {
            let (xm, _) = crate::instances::gen_random_metric_noise(5, 0.2, seed).unwrap();
            let rm = exact_mvd(&xm).unwrap();
            assert!(is_metric(&rm.witness), "seed {seed}");
            let lm = l0_cost(&WeightedInstance::unit(xm.clone()), &rm.witness, 0.0).unwrap();
            assert_eq!(lm, rm.cost as f64, "seed {seed}");
            for (i, j, v) in xm.pairs() {
                if !rm.hitting_set.contains(&(i, j)) {
                    assert_eq!(rm.witness.get(i, j), v);
                }
            }

            let (xu, _) = crate::instances::gen_random_ultra_noise(6, 3, 0.15, seed).unwrap();
            let ru = exact_umvd(&xu).unwrap();
            assert!(is_ultrametric(&ru.witness), "seed {seed}");
            let lu = l0_cost(&WeightedInstance::unit(xu.clone()), &ru.witness, 0.0).unwrap();
            assert_eq!(lu, ru.cost as f64, "seed {seed}");
        }
    }

    #[test]
    fn extra_noise_cannot_drop_cost_by_more_than_one() {
        for seed in 0..8u64 {
            let (x, _) = crate::instances::gen_random_ultra_noise(6, 3, 0.1, seed).unwrap();
            let base = exact_umvd(&x).unwrap().cost;
            let mut noisier = x.clone();
            let (i, j, v) = noisier.pairs().next().unwrap();
            noisier.set(i, j, v + 10.0);
            let bumped = exact_umvd(&noisier).unwrap().cost;
            assert!(bumped + 1 >= base, "seed {seed}");
        }
    }

    #[test]
    fn oversized_instances_rejected() {
        let x = DistanceMatrix::constant(8, 1.0).unwrap();
        assert!(matches!(
            exact_mvd(&x),
            Err(Error::ExactSearchSize { n: 8, max: 7 })
        ));
    }
}
