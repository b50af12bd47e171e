//! Repair noisy pairwise-distance data into metrics and ultrametrics under
//! the l0 objective (change as few entries as possible).
//!
//! Given a complete symmetric dissimilarity matrix `x` on `n` points, the
//! library computes a nearby matrix `y` that satisfies the triangle
//! inequality (`y(i,j) <= y(i,k) + y(k,j)`) or the strong triangle
//! inequality (`y(i,j) <= max(y(i,k), y(k,j))`), minimizing the number of
//! changed entries. Four approximation algorithms are provided, together
//! with an exact brute-force solver for tiny instances and deterministic
//! generators for adversarial and random benchmark inputs:
//!
//! * [`pivot::mvd_pivot`] — randomized pivot repair to a metric.
//! * [`pivot::umvd_pivot`] — randomized pivot repair to an ultrametric.
//! * [`umvd_cc::umvd_constant`] — recursive level-peeling repair to an
//!   ultrametric driven by agreement correlation clustering.
//! * [`rounding::hierarchical_cluster`] — LP relaxation plus region-growing
//!   rounding for weighted ultrametric repair.
//! * [`oracle::exact_mvd`] / [`oracle::exact_umvd`] — exact minimum repairs
//!   for `n <= 7` via hitting-set enumeration over pair subsets.
//!
//! # Example
//!
//! ```
//! use mvdlib::{DistanceMatrix, pivot::{mvd_pivot, PivotSource}, violations::metric_violations};
//!
//! // A triangle whose long side exceeds the sum of the other two.
//! let x = DistanceMatrix::from_values(3, vec![1.0, 2.0, 5.0]).unwrap();
//! let repaired = mvd_pivot(&x, &PivotSource::Seeded(7), false).unwrap();
//! assert!(metric_violations(&repaired.output).is_empty());
//! assert_eq!(repaired.cost, 1.0);
//! ```

mod error;

pub mod corrclust;
pub mod instance;
pub mod instances;
pub mod io;
pub mod lp;
pub mod oracle;
pub mod pivot;
pub mod rounding;
pub mod simplex;
pub mod umvd_cc;
pub mod violations;

pub use error::{Error, Result};
pub use instance::{
    build_level_map, l0_cost, DistanceMatrix, LevelMap, ModifiedPair, RepairResult,
    WeightedInstance,
};
pub use violations::{
    is_metric, is_metric_with_tol, is_ultrametric, metric_violations, metric_violations_with_tol,
    ultrametric_violations, Triangle, TriangleKind,
};
