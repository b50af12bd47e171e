//! Recursive ultrametric repair driven by correlation clustering.
//!
//! Each call peels the largest distance value `w_max` of the working
//! instance: pairs at `w_max` become `-` edges and all smaller pairs `+`
//! edges of a correlation clustering instance, which is solved by
//! [`agreement_cluster`]. Cross-cluster pairs are fixed at `w_max`;
//! in-cluster pairs are capped at the next-largest value and solved
//! recursively. Distances assigned by deeper calls are strictly smaller,
//! which makes the assembled output an ultrametric.

use crate::corrclust::{agreement_cluster, AgreementParams, SignedGraph, VertexOrder};
use crate::instance::{DistanceMatrix, RepairResult, WeightedInstance};

/// Signed graph of one distance level: `+` where `x < w_max`, `-` where
/// `x = w_max`. `w_max` must be the maximum entry of `x`.
pub fn build_cc_level(x: &DistanceMatrix, w_max: f64) -> SignedGraph {
    let mut g = SignedGraph::new(x.n());
    for (i, j, v) in x.pairs() {
        if v < w_max {
            g.set_plus(i, j, true);
        }
    }
    g
}

/// Constant-factor ultrametric repair of an (unweighted) instance.
///
/// The reported cost is the l0 distance between the original input and the
/// final output; the capped working copies used by the recursion never leak
/// into cost accounting.
pub fn umvd_constant(inst: &WeightedInstance, params: &AgreementParams) -> RepairResult {
    let x = inst.distances();
    let mut output = x.clone();
    let points: Vec<usize> = (0..x.n()).collect();
    solve_level(x.clone(), &points, &mut output, params);
    RepairResult::from_output(inst, output, None)
}

/// Recursive worker: `work` is the capped working matrix over `points`
/// (original indices); finalized values are written into `output`.
fn solve_level(
    work: DistanceMatrix,
    points: &[usize],
    output: &mut DistanceMatrix,
    params: &AgreementParams,
) {
    let m = points.len();
    if m <= 1 {
        return;
    }
    let values = work.distinct_values();
    if values.len() == 1 {
        // An all-equal block is already an ultrametric; keep it.
        for a in 0..m {
            for b in (a + 1)..m {
                output.set(points[a], points[b], values[0]);
            }
        }
        return;
    }
    let w_max = values[values.len() - 1];
    let w_submax = values[values.len() - 2];

    let graph = build_cc_level(&work, w_max);
    let clustering = agreement_cluster(&graph, params, &VertexOrder::Natural);
    let ids = clustering.cluster_ids(m);

    for a in 0..m {
        for b in (a + 1)..m {
            if ids[a] != ids[b] {
                output.set(points[a], points[b], w_max);
            }
        }
    }

    for members in &clustering.clusters {
        if members.len() < 2 {
            continue;
        }
        let sub_points: Vec<usize> = members.iter().map(|&l| points[l]).collect();
        let mut sub = work.restrict(members);
        for a in 0..sub.n() {
            for b in (a + 1)..sub.n() {
                let v = sub.get(a, b);
                if v > w_submax {
                    sub.set(a, b, w_submax);
                }
            }
        }
        solve_level(sub, &sub_points, output, params);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::l0_cost;
    use crate::violations::is_ultrametric;

    fn two_cliques(k: usize, inner: f64, cross: f64) -> DistanceMatrix {
        DistanceMatrix::from_fn(2 * k, |i, j| {
            if (i < k) == (j < k) {
                inner
            } else {
                cross
            }
        })
        .unwrap()
    }

    #[test]
    fn level_graph_all_equal_is_all_minus() {
        let x = DistanceMatrix::constant(5, 3.0).unwrap();
        let g = build_cc_level(&x, 3.0);
        for u in 0..5 {
            for v in (u + 1)..5 {
                assert!(!g.is_plus(u, v));
            }
        }
    }

    #[test]
    fn level_graph_single_max_pair() {
        let x = DistanceMatrix::from_values(3, vec![1.0, 1.0, 2.0]).unwrap();
        let g = build_cc_level(&x, 2.0);
        assert!(g.is_plus(0, 1));
        assert!(g.is_plus(0, 2));
        assert!(!g.is_plus(1, 2));
    }

    #[test]
    fn level_graph_two_cliques() {
        let x = two_cliques(4, 1.0, 2.0);
        let g = build_cc_level(&x, 2.0);
        for i in 0..8 {
            for j in (i + 1)..8 {
                assert_eq!(g.is_plus(i, j), (i < 4) == (j < 4));
            }
        }
    }

    #[test]
    fn tiny_instances_are_untouched() {
        let p = AgreementParams::default_eps();
        let one = WeightedInstance::unit(DistanceMatrix::from_values(1, vec![]).unwrap());
        let r = umvd_constant(&one, &p);
        assert_eq!(r.cost, 0.0);
        let two = WeightedInstance::unit(DistanceMatrix::from_values(2, vec![7.5]).unwrap());
        let r = umvd_constant(&two, &p);
        assert_eq!(r.cost, 0.0);
        assert_eq!(r.output.get(0, 1), 7.5);
    }

    #[test]
    fn clean_two_level_instance_costs_zero() {
        let x = two_cliques(6, 1.0, 2.0);
        assert!(is_ultrametric(&x));
        let p = AgreementParams::default_eps();
        let r = umvd_constant(&WeightedInstance::unit(x.clone()), &p);
        assert_eq!(r.cost, 0.0);
        assert_eq!(r.output, x);
    }

    #[test]
    fn flipped_cross_pair_restored_on_large_cliques() {
        // Two 30-cliques, inner 1 / cross 2, one cross pair dropped to 1:
        // the flip is repaired back to 2 and nothing else moves. The
        // restored matrix witnesses OPT = 1. The flipped pair must avoid
        // the seed vertices (cluster extraction seeds at the lowest index;
        // a seed that agrees with nobody is emitted as a singleton).
        let mut x = two_cliques(30, 1.0, 2.0);
        x.set(5, 35, 1.0);
        let p = AgreementParams::default_eps();
        let inst = WeightedInstance::unit(x.clone());
        let r = umvd_constant(&inst, &p);
        assert!(is_ultrametric(&r.output));
        assert_eq!(r.cost, 1.0);
        assert_eq!(r.output.get(5, 35), 2.0);
    }

    #[test]
    fn output_is_ultrametric_and_dominates_oracle_on_small_inputs() {
        let p = AgreementParams::default_eps();
        for seed in 0..15u64 {
            let (x, _) =
                crate::instances::gen_random_ultra_noise(6, 3, 0.15, seed).unwrap();
            let inst = WeightedInstance::unit(x.clone());
            let r = umvd_constant(&inst, &p);
            assert!(is_ultrametric(&r.output), "seed {seed}");
            let exact = crate::oracle::exact_umvd(&x).unwrap();
            assert!(r.cost >= exact.cost as f64, "seed {seed}");
            if exact.cost == 0 {
                assert_eq!(r.cost, 0.0, "seed {seed}");
            }
        }
    }

    #[test]
    fn idempotent_on_own_output() {
        let p = AgreementParams::default_eps();
        for seed in [3u64, 14, 15] {
            let (x, _) = crate::instances::gen_random_ultra_noise(12, 3, 0.2, seed).unwrap();
            let first = umvd_constant(&WeightedInstance::unit(x), &p);
            let again = umvd_constant(&WeightedInstance::unit(first.output.clone()), &p);
            assert_eq!(again.cost, 0.0, "seed {seed}");
            assert_eq!(again.output, first.output, "seed {seed}");
        }
    }

    #[test]
    fn top_level_assignment_follows_the_clustering() {
        let mut x = two_cliques(30, 1.0, 2.0);
        x.set(5, 35, 1.0);
        let p = AgreementParams::default_eps();
        let w_max = x.max_value().unwrap();
        let clustering = agreement_cluster(&build_cc_level(&x, w_max), &p, &VertexOrder::Natural);
        let ids = clustering.cluster_ids(x.n());
        let r = umvd_constant(&WeightedInstance::unit(x), &p);
        for (i, j, _) in r.output.pairs() {
            if ids[i] != ids[j] {
                assert_eq!(r.output.get(i, j), w_max);
            } else {
                assert!(r.output.get(i, j) < w_max);
            }
        }
    }

    #[test]
    fn cost_is_measured_against_original_input() {
        // The recursion caps working distances; the reported cost must
        // still compare against the uncapped input.
        let x = DistanceMatrix::from_values(3, vec![5.0, 4.0, 3.0]).unwrap();
        let inst = WeightedInstance::unit(x);
        let p = AgreementParams::default_eps();
        let r = umvd_constant(&inst, &p);
        assert!(is_ultrametric(&r.output));
        assert_eq!(r.cost, l0_cost(&inst, &r.output, 0.0).unwrap());
    }
}
