//! Enumeration of unbalanced triangles under the metric and ultrametric
//! rules.
//!
//! A triangle is unbalanced in metric mode when one edge is in excess
//! (strictly longer than the sum of the other two) or, equivalently, some
//! edge is in deficit (strictly shorter than the difference of the other
//! two). In ultrametric mode it is unbalanced when the largest of the three
//! values is strictly unique. Each unbalanced triangle is reported once,
//! annotated with its offending (excess) edge.

use crate::instance::DistanceMatrix;
use serde::Serialize;

/// How the offending edge violates the triangle rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum TriangleKind {
    /// The edge is strictly longer than allowed by the other two.
    Excess,
    /// The edge is strictly shorter than allowed by the other two.
    Deficit,
}

/// An unbalanced triple of points with its offending edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Triangle {
    /// The three points, ascending.
    pub points: [usize; 3],
    /// The offending edge, as an ordered pair.
    pub edge: (usize, usize),
    pub kind: TriangleKind,
}

impl Triangle {
    fn excess(points: [usize; 3], mut a: usize, mut b: usize) -> Self {
        if a > b {
            std::mem::swap(&mut a, &mut b);
        }
        Triangle {
            points,
            edge: (a, b),
            kind: TriangleKind::Excess,
        }
    }
}

#[inline]
fn metric_offender_tol(
    ij: f64,
    ik: f64,
    jk: f64,
    i: usize,
    j: usize,
    k: usize,
    tol: f64,
) -> Option<(usize, usize)> {
    // At most one edge can be in strict excess, and it is the largest.
    if ij > ik + jk + tol {
        Some((i, j))
    } else if ik > ij + jk + tol {
        Some((i, k))
    } else if jk > ij + ik + tol {
        Some((j, k))
    } else {
        None
    }
}

#[inline]
fn ultrametric_offender(
    ij: f64,
    ik: f64,
    jk: f64,
    i: usize,
    j: usize,
    k: usize,
) -> Option<(usize, usize)> {
    // Unbalanced iff the strict maximum is unique.
    if ij > ik && ij > jk {
        Some((i, j))
    } else if ik > ij && ik > jk {
        Some((i, k))
    } else if jk > ij && jk > ik {
        Some((j, k))
    } else {
        None
    }
}

/// Every unbalanced triangle of `x` under the metric rules; empty iff `x`
/// is a metric. Comparisons are exact.
pub fn metric_violations(x: &DistanceMatrix) -> Vec<Triangle> {
    metric_violations_with_tol(x, 0.0)
}

/// Like [`metric_violations`], ignoring excesses of at most `tol`. The
/// metric pivot stores sums of input values, so on non-integral inputs its
/// output can exceed the triangle bound by a few ulps; a tiny tolerance
/// absorbs that. On integer-valued inputs all derived values are exact and
/// `tol = 0` is the right check.
pub fn metric_violations_with_tol(x: &DistanceMatrix, tol: f64) -> Vec<Triangle> {
    let n = x.n();
    let mut out = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            let ij = x.get(i, j);
            for k in (j + 1)..n {
                if let Some(edge) = metric_offender_tol(ij, x.get(i, k), x.get(j, k), i, j, k, tol)
                {
                    out.push(Triangle::excess([i, j, k], edge.0, edge.1));
                }
            }
        }
    }
    out
}

/// Every unbalanced triangle of `x` under the strong (ultrametric) rule;
/// empty iff `x` is an ultrametric.
pub fn ultrametric_violations(x: &DistanceMatrix) -> Vec<Triangle> {
    let n = x.n();
    let mut out = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            let ij = x.get(i, j);
            for k in (j + 1)..n {
                if let Some(edge) = ultrametric_offender(ij, x.get(i, k), x.get(j, k), i, j, k) {
                    out.push(Triangle::excess([i, j, k], edge.0, edge.1));
                }
            }
        }
    }
    out
}

/// `true` iff every triple of `x` satisfies the triangle inequality.
pub fn is_metric(x: &DistanceMatrix) -> bool {
    is_metric_with_tol(x, 0.0)
}

/// Triangle-inequality check ignoring excesses of at most `tol`.
pub fn is_metric_with_tol(x: &DistanceMatrix, tol: f64) -> bool {
    let n = x.n();
    for i in 0..n {
        for j in (i + 1)..n {
            let ij = x.get(i, j);
            for k in (j + 1)..n {
                if metric_offender_tol(ij, x.get(i, k), x.get(j, k), i, j, k, tol).is_some() {
                    return false;
                }
            }
        }
    }
    true
}

/// `true` iff every triple of `x` satisfies the strong triangle inequality.
pub fn is_ultrametric(x: &DistanceMatrix) -> bool {
    let n = x.n();
    for i in 0..n {
        for j in (i + 1)..n {
            let ij = x.get(i, j);
            for k in (j + 1)..n {
                if ultrametric_offender(ij, x.get(i, k), x.get(j, k), i, j, k).is_some() {
                    return false;
                }
            }
        }
    }
    true
}
