//! The level LP relaxation for weighted ultrametric repair.
//!
//! For distinct input values `w_1 < ... < w_L`, variable `d^t_ij in [0,1]`
//! encodes "the output distance of pair (i,j) is at least `w_t`". Each
//! level carries the triangle rows `d^t_ik <= d^t_ij + d^t_jk`, levels are
//! monotone (`d^{t+1}_ij <= d^t_ij`), and a pair whose input sits at level
//! `t` pays `w(i,j) * (d^{t+1}_ij + 1 - d^t_ij)` with the convention
//! `d^{L+1}_ij = 0`.

use crate::instance::{build_level_map, pair_count, pair_index, LevelMap, WeightedInstance};
use crate::simplex::{self, BoundedLp, Scalar};
use crate::{Error, Result};
use std::fmt::Write as _;

/// One `<= 0` row, stored sparsely.
#[derive(Debug, Clone)]
pub struct SparseRow {
    pub terms: Vec<(usize, f64)>,
}

/// The assembled LP: `min objective . d + obj_constant` subject to the
/// triangle and monotone rows with every variable in `[0, 1]`.
#[derive(Debug, Clone)]
pub struct UltrametricLp {
    pub n: usize,
    pub level_map: LevelMap,
    pub num_vars: usize,
    pub rows: Vec<SparseRow>,
    pub objective: Vec<f64>,
    pub obj_constant: f64,
    triangle_rows: usize,
    monotone_rows: usize,
}

impl UltrametricLp {
    /// Variable index of `d^t_ij` (1-based level `t`, `i != j`).
    #[inline]
    pub fn var(&self, t: usize, i: usize, j: usize) -> usize {
        let (a, b) = if i < j { (i, j) } else { (j, i) };
        (t - 1) * pair_count(self.n) + pair_index(self.n, a, b)
    }

    pub fn levels(&self) -> usize {
        self.level_map.len()
    }

    pub fn triangle_row_count(&self) -> usize {
        self.triangle_rows
    }

    pub fn monotone_row_count(&self) -> usize {
        self.monotone_rows
    }

    /// Maximum violation of any row or box bound by `values`.
    pub fn max_violation(&self, values: &[f64]) -> f64 {
        let mut worst = 0.0f64;
        for v in values {
            worst = worst.max(-v).max(v - 1.0);
        }
        for row in &self.rows {
            let lhs: f64 = row.terms.iter().map(|&(j, c)| c * values[j]).sum();
            worst = worst.max(lhs);
        }
        worst
    }

    /// Full objective value (constant included) of an assignment.
    pub fn objective_value(&self, values: &[f64]) -> f64 {
        self.obj_constant
            + self
                .objective
                .iter()
                .zip(values)
                .map(|(c, v)| c * v)
                .sum::<f64>()
    }

    /// The 0/1 assignment `d^t_ij = [x(i,j) >= w_t]` induced by the input
    /// itself; feasible iff the input is an ultrametric, with objective 0.
    pub fn indicator_assignment(&self, inst: &WeightedInstance) -> Vec<f64> {
        let mut values = vec![0.0; self.num_vars];
        for (i, j, x) in inst.distances().pairs() {
            for t in 1..=self.levels() {
                if x >= self.level_map.value(t) {
                    values[self.var(t, i, j)] = 1.0;
                }
            }
        }
        values
    }

    /// Text export in LP format, variables named `d_t_i_j`.
    pub fn to_lp_text(&self) -> String {
        let p = pair_count(self.n);
        let name = |var: usize| {
            let t = var / p + 1;
            let rest = var % p;
            // invert pair_index by scanning rows
            let mut i = 0;
            let mut acc = 0;
            loop {
                let row_len = self.n - i - 1;
                if rest < acc + row_len {
                    break;
                }
                acc += row_len;
                i += 1;
            }
            let j = i + 1 + (rest - acc);
            format!("d_{t}_{i}_{j}")
        };
        let mut out = String::new();
        out.push_str("Minimize\n obj:");
        let mut first = true;
        for (v, &c) in self.objective.iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            let _ = write!(out, " {}{} {}", if c >= 0.0 { "+" } else { "-" }, c.abs(), name(v));
            first = false;
        }
        if first {
            out.push_str(" 0");
        }
        let _ = write!(out, "\n\\ constant term {}\n", self.obj_constant);
        out.push_str("Subject To\n");
        for (r, row) in self.rows.iter().enumerate() {
            let _ = write!(out, " c{r}:");
            for &(v, c) in &row.terms {
                let _ = write!(out, " {}{} {}", if c >= 0.0 { "+" } else { "-" }, c.abs(), name(v));
            }
            out.push_str(" <= 0\n");
        }
        out.push_str("Bounds\n");
        for v in 0..self.num_vars {
            let _ = writeln!(out, " 0 <= {} <= 1", name(v));
        }
        out.push_str("End\n");
        out
    }
}

/// Assemble the level LP of a weighted instance.
pub fn build_lp(inst: &WeightedInstance) -> UltrametricLp {
    let n = inst.n();
    let level_map = build_level_map(inst.distances());
    let levels = level_map.len();
    let p = pair_count(n);
    let num_vars = levels * p;

    let mut lp = UltrametricLp {
        n,
        level_map,
        num_vars,
        rows: Vec::new(),
        objective: vec![0.0; num_vars],
        obj_constant: 0.0,
        triangle_rows: 0,
        monotone_rows: 0,
    };

    // Triangle rows: d^t_ik - d^t_ij - d^t_jk <= 0, three per triple.
    for t in 1..=levels {
        for i in 0..n {
            for j in (i + 1)..n {
                for k in (j + 1)..n {
                    let ij = lp.var(t, i, j);
                    let ik = lp.var(t, i, k);
                    let jk = lp.var(t, j, k);
                    for (left, r1, r2) in [(ij, ik, jk), (ik, ij, jk), (jk, ij, ik)] {
                        lp.rows.push(SparseRow {
                            terms: vec![(left, 1.0), (r1, -1.0), (r2, -1.0)],
                        });
                    }
                }
            }
        }
    }
    lp.triangle_rows = lp.rows.len();

    // Monotone rows: d^{t+1}_ij - d^t_ij <= 0.
    for t in 1..levels {
        for i in 0..n {
            for j in (i + 1)..n {
                lp.rows.push(SparseRow {
                    terms: vec![(lp.var(t + 1, i, j), 1.0), (lp.var(t, i, j), -1.0)],
                });
            }
        }
    }
    lp.monotone_rows = lp.rows.len() - lp.triangle_rows;

    // Objective: pair at level t pays w * (d^{t+1} + 1 - d^t).
    for (i, j, x) in inst.distances().pairs() {
        let w = inst.weight(i, j);
        let t = lp
            .level_map
            .index(x)
            .expect("every input value is a level");
        lp.obj_constant += w;
        let at_level = lp.var(t, i, j);
        lp.objective[at_level] -= w;
        if t < levels {
            let above = lp.var(t + 1, i, j);
            lp.objective[above] += w;
        }
    }
    lp
}

/// An LP solution: variable values, full objective (constant included),
/// `rho` (objective divided by the point count), and a lower bound on the
/// optimum certified from the final dual multipliers.
#[derive(Debug, Clone)]
pub struct LpSolution {
    n: usize,
    levels: usize,
    pub values: Vec<f64>,
    pub objective: f64,
    pub rho: f64,
    pub dual_bound: f64,
}

impl LpSolution {
    /// Value of `d^t_ij`; `d^t_ii = 0` by convention.
    #[inline]
    pub fn d(&self, t: usize, i: usize, j: usize) -> f64 {
        if i == j {
            return 0.0;
        }
        let (a, b) = if i < j { (i, j) } else { (j, i) };
        self.values[(t - 1) * pair_count(self.n) + pair_index(self.n, a, b)]
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    /// Wrap externally produced variable values (validated by the caller).
    pub fn from_values(lp: &UltrametricLp, values: Vec<f64>) -> Self {
        let objective = lp.objective_value(&values);
        Self {
            n: lp.n,
            levels: lp.levels(),
            values,
            objective,
            rho: objective / lp.n as f64,
            dual_bound: f64::NEG_INFINITY,
        }
    }
}

/// A solver for the assembled LP; the built-in dense simplex implements
/// it, and external solvers can be plugged in behind the same interface.
pub trait LpSolver {
    fn solve(&self, lp: &UltrametricLp) -> Result<LpSolution>;
}

/// Size bound of the built-in solver.
pub const BUILTIN_MAX_N: usize = 15;
/// Level bound of the built-in solver.
pub const BUILTIN_MAX_LEVELS: usize = 5;

/// The built-in dense bounded-variable simplex.
#[derive(Debug, Clone, Default)]
pub struct BuiltinSolver {
    /// Skip the `n <= 15, L <= 5` size guard.
    pub force: bool,
}

impl LpSolver for BuiltinSolver {
    fn solve(&self, lp: &UltrametricLp) -> Result<LpSolution> {
        if !self.force && (lp.n > BUILTIN_MAX_N || lp.levels() > BUILTIN_MAX_LEVELS) {
            return Err(Error::LpSizeBound {
                n: lp.n,
                levels: lp.levels(),
            });
        }
        solve_generic::<f64>(lp)
    }
}

fn dense_rows(lp: &UltrametricLp) -> Vec<Vec<f64>> {
    lp.rows
        .iter()
        .map(|row| {
            let mut dense = vec![0.0; lp.num_vars];
            for &(j, c) in &row.terms {
                dense[j] += c;
            }
            dense
        })
        .collect()
}

fn solve_generic<T: Scalar>(lp: &UltrametricLp) -> Result<LpSolution> {
    let rows_f = dense_rows(lp);
    let problem = BoundedLp::<T> {
        num_vars: lp.num_vars,
        rows: rows_f
            .iter()
            .map(|r| r.iter().map(|&c| T::from_f64(c)).collect())
            .collect(),
        rhs: vec![T::zero(); lp.rows.len()],
        costs: lp.objective.iter().map(|&c| T::from_f64(c)).collect(),
        lower: vec![T::zero(); lp.num_vars],
        upper: vec![T::one(); lp.num_vars],
    };
    let opt = simplex::solve(&problem)?;
    let values: Vec<f64> = opt.x.iter().map(Scalar::to_f64).collect();
    let objective = opt.objective.to_f64() + lp.obj_constant;

    // Lagrangian lower bound recomputed from the original data: with
    // y >= 0 on the <= 0 rows, g(y) = sum_j min(0, (c + A^T y)_j) bounds
    // the optimum from below over the unit box.
    let duals: Vec<f64> = opt.row_duals.iter().map(Scalar::to_f64).collect();
    let mut reduced = lp.objective.clone();
    for (row, &y) in lp.rows.iter().zip(&duals) {
        if y != 0.0 {
            for &(j, c) in &row.terms {
                reduced[j] += y * c;
            }
        }
    }
    let dual_bound: f64 =
        lp.obj_constant + reduced.iter().map(|&r| r.min(0.0)).sum::<f64>();

    Ok(LpSolution {
        n: lp.n,
        levels: lp.levels(),
        values,
        objective,
        rho: objective / lp.n as f64,
        dual_bound,
    })
}

/// Solve with the built-in simplex under the default size guard.
pub fn solve_lp(lp: &UltrametricLp) -> Result<LpSolution> {
    BuiltinSolver::default().solve(lp)
}

/// Solve in exact rational arithmetic (slow; meant for small golden
/// cross-checks).
pub fn solve_lp_rational(lp: &UltrametricLp) -> Result<LpSolution> {
    solve_generic::<num_rational::BigRational>(lp)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{DistanceMatrix, WeightedInstance};

    fn unit(values: Vec<f64>, n: usize) -> WeightedInstance {
        WeightedInstance::unit(DistanceMatrix::from_values(n, values).unwrap())
    }

    #[test]
    fn row_and_variable_counts_single_level() {
        let inst = unit(vec![1.0, 1.0, 1.0], 3);
        let lp = build_lp(&inst);
        assert_eq!(lp.num_vars, 3);
        assert_eq!(lp.triangle_row_count(), 3);
        assert_eq!(lp.monotone_row_count(), 0);
    }

    #[test]
    fn row_and_variable_counts_two_levels() {
        let inst = unit(vec![1.0, 1.0, 2.0, 1.0, 2.0, 2.0], 4);
        let lp = build_lp(&inst);
        assert_eq!(lp.num_vars, 12);
        assert_eq!(lp.triangle_row_count(), 24); // 2 levels * 3 * C(4,3)
        assert_eq!(lp.monotone_row_count(), 6);
    }

    #[test]
    fn objective_assembly_per_pair() {
        // Pair levels: (0,1) -> 2, (0,2) -> 2, (1,2) -> 1 over levels {3,5}.
        let inst = unit(vec![5.0, 5.0, 3.0], 3);
        let lp = build_lp(&inst);
        assert_eq!(lp.obj_constant, 3.0);
        assert_eq!(lp.objective[lp.var(2, 0, 1)], -1.0);
        assert_eq!(lp.objective[lp.var(2, 0, 2)], -1.0);
        // level-1 pair pays +d^2 - d^1
        assert_eq!(lp.objective[lp.var(1, 1, 2)], -1.0);
        assert_eq!(lp.objective[lp.var(2, 1, 2)], 1.0);
    }

    #[test]
    fn indicator_is_feasible_with_zero_objective_on_ultrametrics() {
        let inst = unit(vec![5.0, 5.0, 3.0], 3);
        let lp = build_lp(&inst);
        let ind = lp.indicator_assignment(&inst);
        assert!(lp.max_violation(&ind) <= 0.0);
        assert_eq!(lp.objective_value(&ind), 0.0);
        let sol = solve_lp(&lp).unwrap();
        assert!(sol.objective.abs() <= 1e-9);
    }

    #[test]
    fn distinct_triangle_golden_value() {
        // Distances (5, 4, 3): the relaxation cannot beat the integral
        // optimum here; the solved value is exactly 1.
        let inst = unit(vec![5.0, 4.0, 3.0], 3);
        let lp = build_lp(&inst);
        let sol = solve_lp(&lp).unwrap();
        assert!((sol.objective - 1.0).abs() <= 1e-9, "got {}", sol.objective);
        assert!(sol.objective >= 1.0 / 3.0 - 1e-9);
        assert!(sol.objective <= 1.0 + 1e-9);
        // Exact rational pivoting agrees.
        let exact = solve_lp_rational(&lp).unwrap();
        assert!((exact.objective - 1.0).abs() <= 1e-12);
        // The dual certificate matches at the optimum.
        assert!(sol.dual_bound <= sol.objective + 1e-9);
        assert!((sol.dual_bound - sol.objective).abs() <= 1e-6);
    }

    #[test]
    fn solutions_are_feasible_and_certified() {
        for seed in 0..8u64 {
            let (x, _) = crate::instances::gen_random_ultra_noise(6, 3, 0.2, seed).unwrap();
            let inst = WeightedInstance::unit(x);
            let lp = build_lp(&inst);
            let sol = solve_lp(&lp).unwrap();
            assert!(lp.max_violation(&sol.values) <= 1e-9, "seed {seed}");
            assert!(sol.objective >= -1e-9, "seed {seed}");
            assert!(
                sol.objective >= sol.dual_bound - 1e-6,
                "seed {seed}: {} < {}",
                sol.objective,
                sol.dual_bound
            );
            assert!(
                (sol.objective - sol.dual_bound).abs() <= 1e-6,
                "seed {seed}: duality gap {} vs {}",
                sol.objective,
                sol.dual_bound
            );
            assert!((sol.rho - sol.objective / 6.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn larger_instances_solve_and_certify() {
        for (n, levels, seed) in [(8usize, 4usize, 1u64), (9, 3, 2), (10, 3, 3)] {
            let (x, _) = crate::instances::gen_random_ultra_noise(n, levels, 0.3, seed).unwrap();
            let inst = WeightedInstance::unit(x);
            let lp = build_lp(&inst);
            let sol = solve_lp(&lp).unwrap();
            assert!(lp.max_violation(&sol.values) <= 1e-9, "n {n}");
            assert!(
                (sol.objective - sol.dual_bound).abs() <= 1e-6,
                "n {n}: gap {} vs {}",
                sol.objective,
                sol.dual_bound
            );
        }
    }

    #[test]
    fn rational_mode_agrees_on_a_random_instance() {
        let (x, _) = crate::instances::gen_random_ultra_noise(5, 3, 0.4, 8).unwrap();
        let inst = WeightedInstance::unit(x);
        let lp = build_lp(&inst);
        let float = solve_lp(&lp).unwrap();
        let exact = solve_lp_rational(&lp).unwrap();
        assert!(
            (float.objective - exact.objective).abs() <= 1e-8,
            "{} vs {}",
            float.objective,
            exact.objective
        );
    }

    #[test]
    fn size_guard_enforced_unless_forced() {
        let x = DistanceMatrix::constant(16, 1.0).unwrap();
        let lp = build_lp(&WeightedInstance::unit(x));
        assert!(matches!(solve_lp(&lp), Err(Error::LpSizeBound { .. })));
    }

    #[test]
    fn lp_text_export_mentions_variables() {
        let inst = unit(vec![5.0, 4.0, 3.0], 3);
        let lp = build_lp(&inst);
        let text = lp.to_lp_text();
        assert!(text.starts_with("Minimize"));
        assert!(text.contains("d_1_1_2"));
        assert!(text.contains("Subject To"));
        assert!(text.contains("Bounds"));
    }
}
