//! Dense primal simplex with bounded variables.
//!
//! Solves `min c.x  s.t.  A x <= b,  l <= x <= u` where every structural
//! variable is box-bounded. One slack per row completes the basis, so the
//! all-lower-bounds point starts a feasible basis whenever `A l <= b`
//! (true for the ultrametric LP, whose rows all read `<= 0` with `l = 0`).
//!
//! Pricing is Dantzig (most negative reduced cost) while progress is being
//! made and switches to Bland's lowest-index rule during degenerate
//! stretches, which rules out cycling. Generic over the scalar so the same
//! pivoting runs in `f64` (tolerance 1e-9) and in exact `BigRational`
//! arithmetic for golden cross-checks.

#![allow(clippy::needless_range_loop)]

use crate::{Error, Result};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{FromPrimitive, Signed, ToPrimitive, Zero};
use std::ops::{Add, Div, Mul, Neg, Sub};

/// Field operations the pivoting needs, plus a comparison tolerance.
pub trait Scalar:
    Clone
    + PartialOrd
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn zero() -> Self;
    fn one() -> Self;
    fn from_f64(v: f64) -> Self;
    fn to_f64(&self) -> f64;
    /// Magnitudes at or below this count as zero.
    fn tol() -> Self;
    fn abs(&self) -> Self;
}

impl Scalar for f64 {
    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn from_f64(v: f64) -> Self {
        v
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn tol() -> Self {
        1e-9
    }
    fn abs(&self) -> Self {
        f64::abs(*self)
    }
}

impl Scalar for BigRational {
    fn zero() -> Self {
        <BigRational as Zero>::zero()
    }
    fn one() -> Self {
        BigRational::from_integer(BigInt::from(1))
    }
    fn from_f64(v: f64) -> Self {
        <BigRational as FromPrimitive>::from_f64(v).expect("finite value")
    }
    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
    fn tol() -> Self {
        <BigRational as Zero>::zero()
    }
    fn abs(&self) -> Self {
        Signed::abs(self)
    }
}

/// `min c.x  s.t.  A x <= b,  lower <= x <= upper` (dense rows).
pub struct BoundedLp<T> {
    pub num_vars: usize,
    pub rows: Vec<Vec<T>>,
    pub rhs: Vec<T>,
    pub costs: Vec<T>,
    pub lower: Vec<T>,
    pub upper: Vec<T>,
}

/// Optimal solution: primal values, objective `c.x`, and nonnegative row
/// multipliers taken from the final reduced costs of the slacks.
pub struct LpOptimum<T> {
    pub x: Vec<T>,
    pub objective: T,
    pub row_duals: Vec<T>,
}

#[derive(Clone, Copy, PartialEq, Debug)]
enum VarState {
    Basic(usize),
    AtLower,
    AtUpper,
}

/// How many consecutive zero-step pivots before Bland's rule engages.
const STALL_LIMIT: usize = 40;

/// Solve the LP. Requires the all-lower-bounds point to be feasible.
pub fn solve<T: Scalar>(lp: &BoundedLp<T>) -> Result<LpOptimum<T>> {
    let m = lp.rows.len();
    let nv = lp.num_vars;
    let ncols = nv + m;
    let tol = T::tol();

    // Tableau rows over [structural | slack] columns.
    let mut rows: Vec<Vec<T>> = Vec::with_capacity(m);
    let mut xb: Vec<T> = Vec::with_capacity(m);
    let mut basic_var: Vec<usize> = Vec::with_capacity(m);
    let mut state = vec![VarState::AtLower; ncols];
    let mut lower: Vec<T> = lp.lower.clone();
    let mut upper: Vec<Option<T>> = lp.upper.iter().cloned().map(Some).collect();
    lower.extend(std::iter::repeat_with(T::zero).take(m));
    upper.extend(std::iter::repeat_with(|| None).take(m));

    for (r, row) in lp.rows.iter().enumerate() {
        let mut full: Vec<T> = Vec::with_capacity(ncols);
        full.extend(row.iter().cloned());
        for s in 0..m {
            full.push(if s == r { T::one() } else { T::zero() });
        }
        rows.push(full);
        basic_var.push(nv + r);
        state[nv + r] = VarState::Basic(r);
        let mut v = lp.rhs[r].clone();
        for j in 0..nv {
            if !(row[j] == T::zero()) {
                v = v - row[j].clone() * lp.lower[j].clone();
            }
        }
        if v < -tol.clone() {
            return Err(Error::Solver(
                "all-lower-bounds starting point is infeasible".into(),
            ));
        }
        xb.push(v);
    }
    let mut cost_row: Vec<T> = lp.costs.clone();
    cost_row.extend(std::iter::repeat_with(T::zero).take(m));

    let max_iters = 500 * (m + ncols) + 10_000;
    let mut stall = 0usize;
    let mut bland = false;

    for _ in 0..max_iters {
        // Entering variable.
        let mut entering: Option<usize> = None;
        let mut best_mag = tol.clone();
        for j in 0..ncols {
            let mag = match state[j] {
                VarState::Basic(_) => continue,
                VarState::AtLower => -cost_row[j].clone(),
                VarState::AtUpper => cost_row[j].clone(),
            };
            if mag > best_mag {
                entering = Some(j);
                if bland {
                    break; // lowest eligible index
                }
                best_mag = mag;
            }
        }
        let Some(j) = entering else {
            let value_of = |j: usize| -> T {
                match state[j] {
                    VarState::Basic(r) => xb[r].clone(),
                    VarState::AtLower => lower[j].clone(),
                    VarState::AtUpper => upper[j].clone().expect("at-upper is finite"),
                }
            };
            let x: Vec<T> = (0..nv).map(value_of).collect();
            let mut objective = T::zero();
            for v in 0..nv {
                if !(x[v] == T::zero()) {
                    objective = objective + lp.costs[v].clone() * x[v].clone();
                }
            }
            // Slack reduced cost z_r = -pi_r; report y = max(z_r, 0) >= 0.
            let row_duals: Vec<T> = (0..m)
                .map(|r| {
                    let z = cost_row[nv + r].clone();
                    if z < T::zero() {
                        T::zero()
                    } else {
                        z
                    }
                })
                .collect();
            return Ok(LpOptimum {
                x,
                objective,
                row_duals,
            });
        };

        // Moving j off its bound by theta >= 0 shifts basic i by
        // -dir * theta * rows[i][j].
        let dir = match state[j] {
            VarState::AtLower => T::one(),
            VarState::AtUpper => -T::one(),
            VarState::Basic(_) => unreachable!(),
        };

        // Ratio test; `leaving = None` means a bound flip wins.
        let mut theta: Option<T> = upper[j].clone().map(|u| u - lower[j].clone());
        let mut leaving: Option<(usize, bool)> = None;
        for r in 0..m {
            let coef = rows[r][j].clone();
            let eff = dir.clone() * coef;
            let bv = basic_var[r];
            let candidate = if eff > tol.clone() {
                let room = xb[r].clone() - lower[bv].clone();
                let room = if room < T::zero() { T::zero() } else { room };
                Some((room / eff, true))
            } else if eff < -tol.clone() {
                upper[bv].clone().map(|u| {
                    let room = u - xb[r].clone();
                    let room = if room < T::zero() { T::zero() } else { room };
                    (room / (-eff), false)
                })
            } else {
                None
            };
            let Some((ratio, hits_lower)) = candidate else {
                continue;
            };
            let take = match &theta {
                None => true,
                Some(th) => {
                    ratio < *th
                        || (ratio == *th
                            && leaving.is_some_and(|(lr, _)| bv < basic_var[lr]))
                }
            };
            if take {
                theta = Some(ratio);
                leaving = Some((r, hits_lower));
            }
        }
        let Some(theta) = theta else {
            return Err(Error::Solver("objective unbounded below".into()));
        };

        if theta > T::zero() {
            stall = 0;
            bland = false;
        } else {
            stall += 1;
            if stall > STALL_LIMIT {
                bland = true;
            }
        }

        match leaving {
            None => {
                // Bound flip across the box.
                for r in 0..m {
                    let coef = rows[r][j].clone();
                    if !(coef == T::zero()) {
                        xb[r] = xb[r].clone() - dir.clone() * theta.clone() * coef;
                    }
                }
                state[j] = match state[j] {
                    VarState::AtLower => VarState::AtUpper,
                    VarState::AtUpper => VarState::AtLower,
                    VarState::Basic(_) => unreachable!(),
                };
            }
            Some((r, hits_lower)) => {
                let entering_value = match state[j] {
                    VarState::AtLower => lower[j].clone() + theta.clone(),
                    VarState::AtUpper => upper[j].clone().expect("finite") - theta.clone(),
                    VarState::Basic(_) => unreachable!(),
                };
                for i in 0..m {
                    if i != r {
                        let coef = rows[i][j].clone();
                        if !(coef == T::zero()) {
                            xb[i] = xb[i].clone() - dir.clone() * theta.clone() * coef;
                        }
                    }
                }
                let old = basic_var[r];
                state[old] = if hits_lower {
                    VarState::AtLower
                } else {
                    VarState::AtUpper
                };
                basic_var[r] = j;
                state[j] = VarState::Basic(r);
                xb[r] = entering_value;

                // Eliminate column j from every other row and the costs.
                let pivot = rows[r][j].clone();
                for c in rows[r].iter_mut() {
                    *c = c.clone() / pivot.clone();
                }
                let (pivot_row, other_rows): (&Vec<T>, Vec<&mut Vec<T>>) = {
                    let (before, rest) = rows.split_at_mut(r);
                    let (mid, after) = rest.split_at_mut(1);
                    (
                        &mid[0],
                        before.iter_mut().chain(after.iter_mut()).collect(),
                    )
                };
                for row_i in other_rows {
                    let factor = row_i[j].clone();
                    if factor == T::zero() {
                        continue;
                    }
                    for (ci, pc) in row_i.iter_mut().zip(pivot_row.iter()) {
                        if !(*pc == T::zero()) {
                            *ci = ci.clone() - factor.clone() * pc.clone();
                        }
                    }
                }
                let factor = cost_row[j].clone();
                if !(factor == T::zero()) {
                    for (ci, pc) in cost_row.iter_mut().zip(pivot_row.iter()) {
                        if !(*pc == T::zero()) {
                            *ci = ci.clone() - factor.clone() * pc.clone();
                        }
                    }
                }
            }
        }
    }
    Err(Error::Solver("iteration limit exceeded".into()))
}
