//! Randomized pivot repair algorithms for metrics and ultrametrics.
//!
//! Both algorithms repeatedly choose a pivot point, freeze its incident
//! distances, and minimally adjust the opposite edge of every triangle
//! through the pivot so that no triangle containing the pivot stays
//! unbalanced. The metric variant recurses on the remaining points; the
//! ultrametric variant recurses independently inside each cluster of points
//! equidistant from the pivot, which never interact again.

use crate::instance::{DistanceMatrix, ModifiedPair, RepairResult, WeightedInstance};
use crate::{Error, Result};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

/// Where pivots come from: a seeded RNG (uniform over the live points of
/// the current instance or cluster) or an explicit sequence.
///
/// Identical seed and instance produce identical output. Explicit sequences
/// must contain distinct in-range indices; a sequence that runs out while
/// more than two points remain live fails with "insufficient pivots".
#[derive(Debug, Clone)]
pub enum PivotSource {
    Seeded(u64),
    Explicit(Vec<usize>),
}

/// One pivot iteration: the pivot and every entry it changed.
#[derive(Debug, Clone, Serialize)]
pub struct PivotStep {
    pub pivot: usize,
    pub changes: Vec<ModifiedPair>,
}

/// Per-iteration log of a pivot run.
#[derive(Debug, Clone, Serialize)]
pub struct PivotTrace {
    pub steps: Vec<PivotStep>,
}

impl PivotTrace {
    /// Cumulative modification count per pair (flat pair-index order).
    pub fn modification_counts(&self, n: usize) -> Vec<u32> {
        let mut counts = vec![0u32; crate::instance::pair_count(n)];
        for step in &self.steps {
            for c in &step.changes {
                counts[crate::instance::pair_index(n, c.i.min(c.j), c.i.max(c.j))] += 1;
            }
        }
        counts
    }
}

enum Feed<'a> {
    Rng(Box<ChaCha8Rng>),
    Explicit(&'a [usize]),
}

impl Feed<'_> {
    fn next_for(&mut self, live: &[usize], live_mask: &[bool]) -> Result<usize> {
        match self {
            Feed::Rng(rng) => Ok(live[rng.gen_range(0..live.len())]),
            Feed::Explicit(seq) => seq
                .iter()
                .copied()
                .find(|&p| live_mask[p])
                .ok_or(Error::InsufficientPivots),
        }
    }
}

fn make_feed<'a>(source: &'a PivotSource, n: usize) -> Result<Feed<'a>> {
    match source {
        PivotSource::Seeded(seed) => Ok(Feed::Rng(Box::new(ChaCha8Rng::seed_from_u64(*seed)))),
        PivotSource::Explicit(seq) => {
            let mut seen = vec![false; n];
            for &p in seq {
                if p >= n {
                    return Err(Error::InvalidPivotSequence(format!(
                        "pivot {p} out of range for n = {n}"
                    )));
                }
                if seen[p] {
                    return Err(Error::InvalidPivotSequence(format!(
                        "pivot {p} appears more than once"
                    )));
                }
                seen[p] = true;
            }
            Ok(Feed::Explicit(seq))
        }
    }
}

/// Apply one metric pivot round: for every pair `(j, k)` of `live` points
/// other than the pivot, clamp `x(j,k)` into
/// `[|x(i,j) - x(i,k)|, x(i,j) + x(i,k)]`. Equality never triggers a write.
pub fn metric_pivot_step(
    x: &mut DistanceMatrix,
    live: &[usize],
    pivot: usize,
) -> Vec<ModifiedPair> {
    let mut changes = Vec::new();
    for (a, &j) in live.iter().enumerate() {
        if j == pivot {
            continue;
        }
        let dij = x.get(pivot, j);
        for &k in &live[a + 1..] {
            if k == pivot {
                continue;
            }
            let dik = x.get(pivot, k);
            let djk = x.get(j, k);
            let hi = dij + dik;
            let lo = (dij - dik).abs();
            let new = if djk > hi {
                hi
            } else if djk < lo {
                lo
            } else {
                continue;
            };
            x.set(j, k, new);
            changes.push(ModifiedPair {
                i: j.min(k),
                j: j.max(k),
                old: djk,
                new,
            });
        }
    }
    changes
}

/// Apply one ultrametric pivot round: if `x(i,j) = x(i,k)` then
/// `x(j,k) <- min(x(j,k), x(i,j))`, otherwise `x(j,k) <- max(x(i,j), x(i,k))`.
/// Only strict changes are recorded.
pub fn ultrametric_pivot_step(
    x: &mut DistanceMatrix,
    live: &[usize],
    pivot: usize,
) -> Vec<ModifiedPair> {
    let mut changes = Vec::new();
    for (a, &j) in live.iter().enumerate() {
        if j == pivot {
            continue;
        }
        let dij = x.get(pivot, j);
        for &k in &live[a + 1..] {
            if k == pivot {
                continue;
            }
            let dik = x.get(pivot, k);
            let djk = x.get(j, k);
            let new = if dij == dik {
                if djk > dij {
                    dij
                } else {
                    continue;
                }
            } else {
                let mx = dij.max(dik);
                if djk != mx {
                    mx
                } else {
                    continue;
                }
            };
            x.set(j, k, new);
            changes.push(ModifiedPair {
                i: j.min(k),
                j: j.max(k),
                old: djk,
                new,
            });
        }
    }
    changes
}

/// Repair `x` to a metric by random or explicit pivoting.
///
/// Each round pivots on a live point, repairs every triangle through it by
/// adjusting the opposite edge, and drops the pivot; rounds stop once two
/// points remain. The output always satisfies the triangle inequality and
/// agrees with `x` on every pair that was never modified.
pub fn mvd_pivot(
    x: &DistanceMatrix,
    pivots: &PivotSource,
    with_trace: bool,
) -> Result<RepairResult> {
    let n = x.n();
    let mut feed = make_feed(pivots, n)?;
    let mut work = x.clone();
    let mut live: Vec<usize> = (0..n).collect();
    let mut live_mask = vec![true; n];
    let mut steps = Vec::new();

    while live.len() > 2 {
        let pivot = feed.next_for(&live, &live_mask)?;
        let changes = metric_pivot_step(&mut work, &live, pivot);
        if with_trace {
            steps.push(PivotStep { pivot, changes });
        }
        live_mask[pivot] = false;
        live.retain(|&p| p != pivot);
    }

    let trace = with_trace.then_some(PivotTrace { steps });
    Ok(RepairResult::from_output(
        &WeightedInstance::unit(x.clone()),
        work,
        trace,
    ))
}

/// Repair `x` to an ultrametric by random or explicit pivoting.
///
/// Implemented per-cluster: after a pivot, the points at a common distance
/// from it form clusters that never interact again, so each cluster is
/// solved independently. Output is identical to running the single-sequence
/// form of the algorithm with the same pivot order.
pub fn umvd_pivot(
    x: &DistanceMatrix,
    pivots: &PivotSource,
    with_trace: bool,
) -> Result<RepairResult> {
    let n = x.n();
    let mut feed = make_feed(pivots, n)?;
    let mut work = x.clone();
    let mut steps = Vec::new();
    let cluster: Vec<usize> = (0..n).collect();
    let mut live_mask = vec![true; n];
    umvd_recurse(
        &mut work,
        cluster,
        &mut live_mask,
        &mut feed,
        with_trace.then_some(&mut steps),
    )?;
    let trace = with_trace.then_some(PivotTrace { steps });
    Ok(RepairResult::from_output(
        &WeightedInstance::unit(x.clone()),
        work,
        trace,
    ))
}

fn umvd_recurse(
    x: &mut DistanceMatrix,
    cluster: Vec<usize>,
    live_mask: &mut [bool],
    feed: &mut Feed,
    mut steps: Option<&mut Vec<PivotStep>>,
) -> Result<()> {
    if cluster.len() <= 2 {
        return Ok(());
    }
    // Restrict the mask to this cluster so explicit feeds pick from it.
    for m in live_mask.iter_mut() {
        *m = false;
    }
    for &p in &cluster {
        live_mask[p] = true;
    }
    let pivot = feed.next_for(&cluster, live_mask)?;
    let changes = ultrametric_pivot_step(x, &cluster, pivot);
    if let Some(s) = steps.as_deref_mut() {
        s.push(PivotStep { pivot, changes });
    }
    for (_, group) in group_by_pivot_distance(x, &cluster, pivot) {
        umvd_recurse(x, group, live_mask, feed, steps.as_deref_mut())?;
    }
    Ok(())
}

fn group_by_pivot_distance(
    x: &DistanceMatrix,
    cluster: &[usize],
    pivot: usize,
) -> Vec<(f64, Vec<usize>)> {
    let mut groups: Vec<(f64, Vec<usize>)> = Vec::new();
    for &p in cluster {
        if p == pivot {
            continue;
        }
        let d = x.get(pivot, p);
        match groups.iter_mut().find(|(v, _)| *v == d) {
            Some((_, g)) => g.push(p),
            None => groups.push((d, vec![p])),
        }
    }
    groups.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    groups
}

/// Partition all points other than `pivot` by their distance to it,
/// ascending by distance value.
pub fn pivot_clusters(x: &DistanceMatrix, pivot: usize) -> Vec<(f64, Vec<usize>)> {
    let all: Vec<usize> = (0..x.n()).collect();
    group_by_pivot_distance(x, &all, pivot)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances::gen_star;
    use crate::violations::{is_metric, is_ultrametric, metric_violations};

    fn matrix3(a: f64, b: f64, c: f64) -> DistanceMatrix {
        DistanceMatrix::from_values(3, vec![a, b, c]).unwrap()
    }

    #[test]
    fn metric_input_untouched() {
        let x = matrix3(1.0, 1.0, 1.0);
        let r = mvd_pivot(&x, &PivotSource::Seeded(3), false).unwrap();
        assert_eq!(r.output, x);
        assert_eq!(r.cost, 0.0);
    }

    #[test]
    fn excess_edge_lowered_to_sum() {
        // x(0,1)=1, x(0,2)=2, x(1,2)=5; pivot 0 lowers (1,2) to 1+2.
        let x = matrix3(1.0, 2.0, 5.0);
        let r = mvd_pivot(&x, &PivotSource::Explicit(vec![0]), false).unwrap();
        assert_eq!(r.output.get(1, 2), 3.0);
        assert_eq!(r.cost, 1.0);
    }

    #[test]
    fn deficit_edge_raised_to_difference() {
        // x(0,1)=1, x(0,2)=3, x(1,2)=0.5; pivot 0 raises (1,2) to |1-3|.
        let x = matrix3(1.0, 3.0, 0.5);
        let r = mvd_pivot(&x, &PivotSource::Explicit(vec![0]), false).unwrap();
        assert_eq!(r.output.get(1, 2), 2.0);
        assert_eq!(r.cost, 1.0);
    }

    #[test]
    fn star_single_step_at_u2() {
        // One pivot step at u_2 fixes (v,w) to 4; triangles v-w-u_3 and
        // v-w-u_4 become balanced while v-w-u_1 stays unbalanced.
        let x = gen_star(4);
        let mut work = x.clone();
        let live: Vec<usize> = (0..x.n()).collect();
        let u2 = 3; // v=0, w=1, u_k = k+1
        let changes = metric_pivot_step(&mut work, &live, u2);
        assert_eq!(changes.len(), 1);
        assert_eq!(work.get(0, 1), 4.0);
        let remaining = metric_violations(&work);
        assert_eq!(remaining.len(), 1);
        assert_eq!(remaining[0].points, [0, 1, 2]); // v, w, u_1
    }

    #[test]
    fn umvd_equal_arms_lower_opposite() {
        let x = matrix3(5.0, 5.0, 7.0);
        let r = umvd_pivot(&x, &PivotSource::Explicit(vec![0]), false).unwrap();
        assert_eq!(r.output.get(1, 2), 5.0);
        assert_eq!(r.cost, 1.0);
    }

    #[test]
    fn umvd_unequal_arms_force_max() {
        let x = matrix3(3.0, 5.0, 4.0);
        let r = umvd_pivot(&x, &PivotSource::Explicit(vec![0]), false).unwrap();
        assert_eq!(r.output.get(1, 2), 5.0);
        assert_eq!(r.cost, 1.0);
    }

    #[test]
    fn ultrametric_input_untouched() {
        let x = matrix3(5.0, 5.0, 3.0);
        let r = umvd_pivot(&x, &PivotSource::Seeded(11), false).unwrap();
        assert_eq!(r.output, x);
        assert_eq!(r.cost, 0.0);
    }

    #[test]
    fn outputs_are_valid_on_seeds() {
        let x = DistanceMatrix::from_values(4, vec![3.0, 1.0, 9.0, 2.0, 0.5, 4.0]).unwrap();
        for seed in 0..20 {
            let m = mvd_pivot(&x, &PivotSource::Seeded(seed), false).unwrap();
            assert!(is_metric(&m.output), "seed {seed}");
            let u = umvd_pivot(&x, &PivotSource::Seeded(seed), false).unwrap();
            assert!(is_ultrametric(&u.output), "seed {seed}");
        }
    }

    #[test]
    fn seeded_runs_are_reproducible() {
        let x = DistanceMatrix::from_values(5, vec![3.0, 1.0, 9.0, 2.0, 0.5, 4.0, 7.0, 1.5, 2.5, 6.0])
            .unwrap();
        let a = mvd_pivot(&x, &PivotSource::Seeded(42), true).unwrap();
        let b = mvd_pivot(&x, &PivotSource::Seeded(42), true).unwrap();
        assert_eq!(a.output, b.output);
        let ua = umvd_pivot(&x, &PivotSource::Seeded(42), false).unwrap();
        let ub = umvd_pivot(&x, &PivotSource::Seeded(42), false).unwrap();
        assert_eq!(ua.output, ub.output);
    }

    #[test]
    fn explicit_sequence_too_short_errors() {
        let x = DistanceMatrix::from_values(4, vec![3.0, 1.0, 9.0, 2.0, 0.5, 4.0]).unwrap();
        let err = mvd_pivot(&x, &PivotSource::Explicit(vec![0]), false).unwrap_err();
        assert!(matches!(err, Error::InsufficientPivots));
    }

    #[test]
    fn duplicate_pivots_rejected() {
        let x = DistanceMatrix::from_values(4, vec![3.0, 1.0, 9.0, 2.0, 0.5, 4.0]).unwrap();
        let err = mvd_pivot(&x, &PivotSource::Explicit(vec![0, 0, 1]), false).unwrap_err();
        assert!(matches!(err, Error::InvalidPivotSequence(_)));
    }

    #[test]
    fn pivot_clusters_single_group() {
        let x = DistanceMatrix::constant(5, 5.0).unwrap();
        let groups = pivot_clusters(&x, 2);
        assert_eq!(groups.len(), 1);
        assert_eq!(groups[0].0, 5.0);
        assert_eq!(groups[0].1, vec![0, 1, 3, 4]);
    }

    #[test]
    fn pivot_clusters_star_from_v() {
        // From v the spokes sit at distances 1, 2, 3 and w at 2m+1 = 7.
        let x = gen_star(3);
        let groups = pivot_clusters(&x, 0);
        let keys: Vec<f64> = groups.iter().map(|(v, _)| *v).collect();
        assert_eq!(keys, vec![1.0, 2.0, 3.0, 7.0]);
        assert_eq!(groups[0].1, vec![2]); // u_1
        assert_eq!(groups[3].1, vec![1]); // w
    }

    #[test]
    fn pivot_clusters_hypercube_d2() {
        // From 00: both Hamming-1 labels were noised to 3, 11 keeps its
        // base distance 2.
        let x = crate::instances::gen_hypercube(2).unwrap();
        let groups = pivot_clusters(&x, 0);
        let keys: Vec<f64> = groups.iter().map(|(v, _)| *v).collect();
        assert_eq!(keys, vec![2.0, 3.0]);
        assert_eq!(groups[0].1, vec![3]);
        assert_eq!(groups[1].1, vec![1, 2]);
    }

    #[test]
    fn trace_records_steps_and_counts() {
        let x = matrix3(1.0, 2.0, 5.0);
        let r = mvd_pivot(&x, &PivotSource::Explicit(vec![0]), true).unwrap();
        let trace = r.trace.unwrap();
        assert_eq!(trace.steps.len(), 1);
        assert_eq!(trace.steps[0].pivot, 0);
        let counts = trace.modification_counts(3);
        assert_eq!(counts, vec![0, 0, 1]);
    }
}
