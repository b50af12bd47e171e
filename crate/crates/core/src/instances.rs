//! Deterministic instance generators: adversarial constructions for the
//! pivot algorithms and seeded random inputs for benchmarks. Every
//! generator is a pure function of its arguments, seed included.

use crate::corrclust::{Clustering, SignedGraph};
use crate::instance::{pair_count, DistanceMatrix};
use crate::{Error, Result};
use rand::seq::index::sample;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Star instance with `m >= 1` spokes: points `v = 0`, `w = 1`,
/// `u_k = k + 1` for `k in 1..=m`, with `x(v,u_k) = x(w,u_k) = k`,
/// `x(u_j,u_k) = j + k`, and `x(v,w) = 2m + 1`.
///
/// The unbalanced triangles are exactly the `m` triples `{v, w, u_k}`, and
/// setting `x(v,w)` to any value in `[0, 2]` repairs all of them at cost 1.
pub fn gen_star(m: usize) -> DistanceMatrix {
    assert!(m >= 1, "star instance needs at least one spoke");
    let n = m + 2;
    let spoke = |p: usize| p - 1; // u_k has index k + 1
    DistanceMatrix::from_fn(n, |i, j| match (i, j) {
        (0, 1) => 2.0 * m as f64 + 1.0,
        (0, j) | (1, j) => spoke(j) as f64,
        (i, j) => (spoke(i) + spoke(j)) as f64,
    })
    .expect("star construction is valid")
}

fn hamming(a: usize, b: usize) -> u32 {
    (a ^ b).count_ones()
}

fn common_prefix_len(a: usize, b: usize, d: u32) -> u32 {
    if a == b {
        d
    } else {
        let highest_diff = usize::BITS - 1 - (a ^ b).leading_zeros();
        d - 1 - highest_diff
    }
}

/// The clean tree metric underlying [`gen_hypercube`]: `2^d` points
/// labeled by `d`-bit strings, each pair at distance
/// `d - (length of the common label prefix)`. This is an ultrametric.
pub fn hypercube_base(d: u32) -> Result<DistanceMatrix> {
    if !(1..=12).contains(&d) {
        return Err(Error::InvalidParams(format!(
            "hypercube depth must be in 1..=12, got {d}"
        )));
    }
    let n = 1usize << d;
    DistanceMatrix::from_fn(n, |i, j| (d - common_prefix_len(i, j, d)) as f64)
}

/// Noised hypercube instance: the base tree metric of depth `d` with every
/// pair of labels at Hamming distance 1 moved to `d + 1` (the per-instance
/// encoding of "infinity"). Exactly `n * d / 2` pairs are noised.
pub fn gen_hypercube(d: u32) -> Result<DistanceMatrix> {
    let mut x = hypercube_base(d)?;
    let n = x.n();
    for i in 0..n {
        for j in (i + 1)..n {
            if hamming(i, j) == 1 {
                x.set(i, j, (d + 1) as f64);
            }
        }
    }
    Ok(x)
}

fn validate_flip_fraction(flip_fraction: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&flip_fraction) {
        return Err(Error::InvalidParams(format!(
            "flip fraction must be in [0, 1], got {flip_fraction}"
        )));
    }
    Ok(())
}

fn flip_budget(n: usize, flip_fraction: f64) -> usize {
    (flip_fraction * pair_count(n) as f64).round() as usize
}

/// Random noised ultrametric: a hierarchical partition tree of depth
/// `levels` induces a clean ultrametric with values in `1..=levels`; a
/// `flip_fraction` of pairs is then moved to a uniformly random different
/// level value. Returns `(noised, clean)`.
pub fn gen_random_ultra_noise(
    n: usize,
    levels: usize,
    flip_fraction: f64,
    seed: u64,
) -> Result<(DistanceMatrix, DistanceMatrix)> {
    validate_flip_fraction(flip_fraction)?;
    if n == 0 || levels == 0 {
        return Err(Error::InvalidParams(
            "need n >= 1 and levels >= 1".into(),
        ));
    }
    let flips = flip_budget(n, flip_fraction);
    if flips > 0 && levels < 2 {
        return Err(Error::InvalidParams(
            "flipping to a different level needs levels >= 2".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // Each point gets a random ternary label of length levels - 1; the
    // distance is levels minus the common prefix length, in 1..=levels.
    const BRANCH: u64 = 3;
    let labels: Vec<Vec<u64>> = (0..n)
        .map(|_| (0..levels - 1).map(|_| rng.gen_range(0..BRANCH)).collect())
        .collect();
    let clean = DistanceMatrix::from_fn(n, |i, j| {
        let lcp = labels[i]
            .iter()
            .zip(&labels[j])
            .take_while(|(a, b)| a == b)
            .count();
        (levels - lcp) as f64
    })?;

    let mut noised = clean.clone();
    if flips > 0 {
        let chosen = sample(&mut rng, pair_count(n), flips.min(pair_count(n)));
        let pairs: Vec<(usize, usize, f64)> = noised.pairs().collect();
        for idx in chosen.iter() {
            let (i, j, old) = pairs[idx];
            let cur = old as usize;
            let mut next = rng.gen_range(1..levels);
            if next >= cur {
                next += 1;
            }
            noised.set(i, j, next as f64);
        }
    }
    Ok((noised, clean))
}

/// Random noised metric: pairwise Euclidean distances of a seeded 3-d
/// point cloud, with a `flip_fraction` of entries multiplied by a random
/// factor in `[0, 3]`. Returns `(noised, clean)`.
pub fn gen_random_metric_noise(
    n: usize,
    flip_fraction: f64,
    seed: u64,
) -> Result<(DistanceMatrix, DistanceMatrix)> {
    validate_flip_fraction(flip_fraction)?;
    if n == 0 {
        return Err(Error::InvalidParams("need n >= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let points: Vec<[f64; 3]> = (0..n)
        .map(|_| [rng.gen::<f64>(), rng.gen::<f64>(), rng.gen::<f64>()])
        .collect();
    let clean = DistanceMatrix::from_fn(n, |i, j| {
        let (p, q) = (&points[i], &points[j]);
        ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2) + (p[2] - q[2]).powi(2)).sqrt()
    })?;

    let mut noised = clean.clone();
    let flips = flip_budget(n, flip_fraction);
    if flips > 0 {
        let chosen = sample(&mut rng, pair_count(n), flips.min(pair_count(n)));
        let pairs: Vec<(usize, usize, f64)> = noised.pairs().collect();
        for idx in chosen.iter() {
            let (i, j, old) = pairs[idx];
            noised.set(i, j, old * rng.gen_range(0.0..3.0));
        }
    }
    Ok((noised, clean))
}

/// Planted correlation clustering instance: disjoint `+` cliques of the
/// given sizes with `-` edges across, then a `flip_fraction` of pairs
/// toggled. Returns the graph and the planted partition.
pub fn gen_planted_cc(
    sizes: &[usize],
    flip_fraction: f64,
    seed: u64,
) -> Result<(SignedGraph, Clustering)> {
    validate_flip_fraction(flip_fraction)?;
    if sizes.is_empty() || sizes.contains(&0) {
        return Err(Error::InvalidParams(
            "need at least one nonempty group".into(),
        ));
    }
    let n: usize = sizes.iter().sum();
    let mut g = SignedGraph::new(n);
    let mut clusters = Vec::with_capacity(sizes.len());
    let mut start = 0;
    for &s in sizes {
        let group: Vec<usize> = (start..start + s).collect();
        for a in 0..s {
            for b in (a + 1)..s {
                g.set_plus(group[a], group[b], true);
            }
        }
        clusters.push(group);
        start += s;
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let flips = flip_budget(n, flip_fraction);
    if flips > 0 {
        let chosen = sample(&mut rng, pair_count(n), flips.min(pair_count(n)));
        let mut pairs = Vec::with_capacity(pair_count(n));
        for i in 0..n {
            for j in (i + 1)..n {
                pairs.push((i, j));
            }
        }
        for idx in chosen.iter() {
            let (i, j) = pairs[idx];
            let cur = g.is_plus(i, j);
            g.set_plus(i, j, !cur);
        }
    }
    Ok((g, Clustering { clusters }))
}
