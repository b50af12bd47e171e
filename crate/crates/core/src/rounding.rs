//! Region-growing rounding of the level LP into an ultrametric.
//!
//! Top-down per level `t`: while some pair that ought to be separated at
//! this level (`x >= w_t`) has `d^t > 2/3`, grow a ball of radius at most
//! 1/3 around one of its endpoints and cut it off. The radius is chosen so
//! the boundary weight is at most `K * A(c,r) * ln(A_Z / A(c,r))`, which
//! always admits a candidate; cross-part pairs are fixed at `w_t` and
//! parts recurse one level down.

use crate::instance::{DistanceMatrix, LevelMap, RepairResult, WeightedInstance};
use crate::instance::build_level_map;
use crate::lp::LpSolution;
use crate::{Error, Result};

/// Ball, volumes, and boundary weight of one candidate region.
#[derive(Debug, Clone)]
pub struct RegionQuantities {
    /// `V^t_Z(c, r)`: live points within LP distance `r` of the center.
    pub ball: Vec<usize>,
    /// `A^t_Z(c, r)`: rho per ball point, plus LP mass of ball-internal
    /// level-t pairs, plus `w * (r - d_ci)` for boundary-straddling pairs.
    pub ball_volume: f64,
    /// `w(delta^t_Z(c, r))`: weight of straddling level-t pairs.
    pub boundary_weight: f64,
    /// `A^t_Z`: rho per live point plus all live level-t LP mass.
    pub total_volume: f64,
}

#[inline]
fn in_level_t(inst: &WeightedInstance, lm: &LevelMap, t: usize, i: usize, j: usize) -> bool {
    // E_t: pairs that should stay together at level t.
    inst.distances().get(i, j) < lm.value(t)
}

/// Evaluate the region-growing quantities for center `c` and radius `r`
/// over the live set `z`.
pub fn region_quantities(
    z: &[usize],
    t: usize,
    center: usize,
    r: f64,
    sol: &LpSolution,
    inst: &WeightedInstance,
    lm: &LevelMap,
) -> RegionQuantities {
    let rho = sol.rho;
    let mut ball = Vec::new();
    let mut outside = Vec::new();
    for &i in z {
        if sol.d(t, center, i) <= r {
            ball.push(i);
        } else {
            outside.push(i);
        }
    }

    let mut total_volume = rho * z.len() as f64;
    for (ai, &i) in z.iter().enumerate() {
        for &j in &z[ai + 1..] {
            if in_level_t(inst, lm, t, i, j) {
                total_volume += inst.weight(i, j) * sol.d(t, i, j);
            }
        }
    }

    let mut ball_volume = rho * ball.len() as f64;
    for (ai, &i) in ball.iter().enumerate() {
        for &j in &ball[ai + 1..] {
            if in_level_t(inst, lm, t, i, j) {
                ball_volume += inst.weight(i, j) * sol.d(t, i, j);
            }
        }
    }
    let mut boundary_weight = 0.0;
    for &i in &ball {
        for &j in &outside {
            if in_level_t(inst, lm, t, i, j) {
                let w = inst.weight(i, j);
                boundary_weight += w;
                ball_volume += w * (r - sol.d(t, center, i));
            }
        }
    }

    RegionQuantities {
        ball,
        ball_volume,
        boundary_weight,
        total_volume,
    }
}

/// `a * ln(total / a)` with the degenerate endpoints sent to 0.
fn volume_term(a: f64, total: f64) -> f64 {
    if a <= 0.0 || total <= a {
        0.0
    } else {
        a * (total / a).ln()
    }
}

fn growth_factor(total_volume: f64, rho: f64, k0: f64) -> f64 {
    let e_e = std::f64::consts::E.powf(std::f64::consts::E);
    let ratio = if rho > 0.0 {
        (total_volume / rho).max(e_e)
    } else {
        e_e
    };
    k0 * (ratio.ln().ln() + 1.0)
}

fn next_below(x: f64) -> f64 {
    x.next_down()
}

/// Radius selection: scan the ball breakpoints (each LP distance from the
/// center up to 1/3, their left limits, and the radii where the ball
/// volume crosses `A_Z / e`) and return the candidate with the largest
/// slack `K * A(c,r) * ln(A_Z / A(c,r)) - w(boundary)`, largest radius on
/// ties. The slack is nonnegative at the winner; a negative winner means
/// the region-growing guarantee failed and is reported as an error.
pub fn choose_radius(
    z: &[usize],
    t: usize,
    center: usize,
    sol: &LpSolution,
    inst: &WeightedInstance,
    lm: &LevelMap,
    k0: f64,
) -> Result<f64> {
    let mut candidates: Vec<f64> = vec![0.0, 1.0 / 3.0];
    let mut breakpoints: Vec<f64> = z
        .iter()
        .map(|&i| sol.d(t, center, i))
        .filter(|&d| d > 0.0 && d <= 1.0 / 3.0)
        .collect();
    breakpoints.sort_by(|a, b| a.partial_cmp(b).unwrap());
    breakpoints.dedup();
    for &b in &breakpoints {
        candidates.push(b);
        candidates.push(next_below(b));
    }
    candidates.push(next_below(1.0 / 3.0));

    // Within a segment the slack is concave in r; its only interior
    // critical point is where the ball volume crosses A_Z / e.
    let probe = region_quantities(z, t, center, 0.0, sol, inst, lm);
    let total = probe.total_volume;
    let target = total / std::f64::consts::E;
    let mut segment_starts: Vec<f64> = vec![0.0];
    segment_starts.extend(breakpoints.iter().copied());
    for (si, &s) in segment_starts.iter().enumerate() {
        let q = region_quantities(z, t, center, s, sol, inst, lm);
        if q.boundary_weight > 0.0 && q.ball_volume < target {
            let r_cross = s + (target - q.ball_volume) / q.boundary_weight;
            let seg_end = segment_starts
                .get(si + 1)
                .copied()
                .unwrap_or(1.0 / 3.0)
                .min(1.0 / 3.0);
            if r_cross > s && r_cross < seg_end {
                candidates.push(r_cross);
            }
        }
    }

    candidates.retain(|r| (0.0..=1.0 / 3.0).contains(r));
    candidates.sort_by(|a, b| a.partial_cmp(b).unwrap());
    candidates.dedup();

    let k = growth_factor(total, sol.rho, k0);
    let mut best: Option<(f64, f64)> = None; // (slack, r)
    for &r in &candidates {
        let q = region_quantities(z, t, center, r, sol, inst, lm);
        let slack = k * volume_term(q.ball_volume, q.total_volume) - q.boundary_weight;
        let better = match best {
            None => true,
            Some((bs, br)) => slack > bs || (slack == bs && r > br),
        };
        if better {
            best = Some((slack, r));
        }
    }
    let (slack, r) = best.expect("candidate list is never empty");
    if slack < 0.0 {
        return Err(Error::RegionGrowing);
    }
    Ok(r)
}

/// Split the live set at level `t`: repeatedly cut a ball around an
/// endpoint of the lexicographically smallest pair that must separate
/// (`x >= w_t` and `d^t > 2/3`); the untouched remainder is the last part.
pub fn cluster_partition(
    z: &[usize],
    t: usize,
    sol: &LpSolution,
    inst: &WeightedInstance,
    lm: &LevelMap,
    k0: f64,
) -> Result<Vec<Vec<usize>>> {
    let mut live: Vec<usize> = z.to_vec();
    let mut parts: Vec<Vec<usize>> = Vec::new();
    loop {
        let mut split_pair: Option<(usize, usize)> = None;
        'outer: for (ai, &i) in live.iter().enumerate() {
            for &j in &live[ai + 1..] {
                if !in_level_t(inst, lm, t, i, j) && sol.d(t, i, j) > 2.0 / 3.0 {
                    split_pair = Some((i, j));
                    break 'outer;
                }
            }
        }
        let Some((i, j)) = split_pair else {
            if !live.is_empty() {
                parts.push(live);
            }
            return Ok(parts);
        };

        let qi = region_quantities(&live, t, i, 1.0 / 3.0, sol, inst, lm);
        let center = if qi.ball_volume <= qi.total_volume / 2.0 {
            i
        } else {
            j
        };
        let r = choose_radius(&live, t, center, sol, inst, lm, k0)?;
        let q = region_quantities(&live, t, center, r, sol, inst, lm);
        let ball = q.ball;
        live.retain(|p| !ball.contains(p));
        parts.push(ball);
    }
}

/// Round an LP solution into an ultrametric, top-down from the largest
/// level. Same-part pairs are capped at `w_{t-1}` (with `w_0 = 0`),
/// cross-part pairs fixed at `w_t`; cost is measured against the original
/// weighted instance.
pub fn hierarchical_cluster(
    inst: &WeightedInstance,
    sol: &LpSolution,
    k0: f64,
) -> Result<RepairResult> {
    let n = inst.n();
    let lm = build_level_map(inst.distances());
    let levels = lm.len();
    let w_max = lm.value(levels);
    let mut y = DistanceMatrix::constant(n, w_max).expect("n >= 1");

    fn recurse(
        z: &[usize],
        t: usize,
        y: &mut DistanceMatrix,
        sol: &LpSolution,
        inst: &WeightedInstance,
        lm: &LevelMap,
        k0: f64,
    ) -> Result<()> {
        if t == 0 || z.len() <= 1 {
            return Ok(());
        }
        let parts = cluster_partition(z, t, sol, inst, lm, k0)?;
        let w_t = lm.value(t);
        let w_below = if t >= 2 { lm.value(t - 1) } else { 0.0 };
        let mut part_of = std::collections::HashMap::new();
        for (pi, part) in parts.iter().enumerate() {
            for &v in part {
                part_of.insert(v, pi);
            }
        }
        for (ai, &i) in z.iter().enumerate() {
            for &j in &z[ai + 1..] {
                if part_of[&i] == part_of[&j] {
                    let cur = y.get(i, j);
                    if w_below < cur {
                        y.set(i, j, w_below);
                    }
                } else {
                    y.set(i, j, w_t);
                }
            }
        }
        for part in &parts {
            recurse(part, t - 1, y, sol, inst, lm, k0)?;
        }
        Ok(())
    }

    let all: Vec<usize> = (0..n).collect();
    recurse(&all, levels, &mut y, sol, inst, &lm, k0)?;
    Ok(RepairResult::from_output(inst, y, None))
}

/// Convenience pipeline: build the LP, solve with the built-in simplex,
/// and round. Returns the repair and the LP solution it used.
pub fn lp_ultra_repair(
    inst: &WeightedInstance,
    k0: f64,
    force: bool,
) -> Result<(RepairResult, LpSolution)> {
    let lp = crate::lp::build_lp(inst);
    let sol = crate::lp::LpSolver::solve(&crate::lp::BuiltinSolver { force }, &lp)?;
    let repair = hierarchical_cluster(inst, &sol, k0)?;
    Ok((repair, sol))
}
