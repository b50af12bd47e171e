//! The instance text format.
//!
//! ```text
//! mvdlib-instance 1
//! n 3
//! 0 1 1.5
//! 0 2 2 0.5
//! 1 2 3
//! ```
//!
//! Line 1 is the header, line 2 the point count, then one line per pair
//! `i j x [w]` with 0-based `i < j`; the weight defaults to 1. `#` starts
//! a comment line; all `C(n,2)` pairs are required. Signed graphs reuse
//! the format with distances 0 (a `+` edge) and 1 (a `-` edge) under a
//! `# signed` comment.

use crate::corrclust::SignedGraph;
use crate::instance::{pair_count, pair_index, DistanceMatrix, WeightedInstance};
use crate::{Error, Result};
use std::fmt::Write as _;

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        line,
        msg: msg.into(),
    }
}

/// Parse an instance from text.
pub fn parse_instance_str(text: &str) -> Result<WeightedInstance> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(no, l)| (no + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

    let (no, header) = lines
        .next()
        .ok_or_else(|| parse_err(0, "empty instance file"))?;
    if header != "mvdlib-instance 1" {
        return Err(parse_err(no, format!("bad header {header:?}")));
    }

    let (no, nline) = lines
        .next()
        .ok_or_else(|| parse_err(no, "missing point-count line"))?;
    let n: usize = match nline.split_whitespace().collect::<Vec<_>>()[..] {
        ["n", count] => count
            .parse()
            .map_err(|_| parse_err(no, format!("bad point count {count:?}")))?,
        _ => return Err(parse_err(no, format!("expected `n <count>`, got {nline:?}"))),
    };
    if n == 0 {
        return Err(parse_err(no, "point count must be >= 1"));
    }

    let p = pair_count(n);
    let mut values = vec![f64::NAN; p];
    let mut weights = vec![1.0f64; p];
    let mut seen = vec![false; p];

    for (no, line) in lines {
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 3 && fields.len() != 4 {
            return Err(parse_err(no, format!("expected `i j x [w]`, got {line:?}")));
        }
        let i: usize = fields[0]
            .parse()
            .map_err(|_| parse_err(no, format!("bad index {:?}", fields[0])))?;
        let j: usize = fields[1]
            .parse()
            .map_err(|_| parse_err(no, format!("bad index {:?}", fields[1])))?;
        if i >= j {
            return Err(parse_err(no, format!("need i < j, got {i} {j}")));
        }
        if j >= n {
            return Err(parse_err(no, format!("index {j} out of range for n = {n}")));
        }
        let x: f64 = fields[2]
            .parse()
            .map_err(|_| parse_err(no, format!("bad distance {:?}", fields[2])))?;
        if !x.is_finite() || x < 0.0 {
            return Err(parse_err(no, format!("distance must be finite and >= 0, got {x}")));
        }
        let w: f64 = if fields.len() == 4 {
            let w: f64 = fields[3]
                .parse()
                .map_err(|_| parse_err(no, format!("bad weight {:?}", fields[3])))?;
            if w < 0.0 || !w.is_finite() {
                return Err(parse_err(no, format!("weight must be finite and >= 0, got {w}")));
            }
            w
        } else {
            1.0
        };
        let idx = pair_index(n, i, j);
        if seen[idx] {
            return Err(parse_err(no, format!("duplicate pair {i} {j}")));
        }
        seen[idx] = true;
        values[idx] = x;
        weights[idx] = w;
    }

    if let Some(missing) = seen.iter().position(|&s| !s) {
        for i in 0..n {
            for j in (i + 1)..n {
                if pair_index(n, i, j) == missing {
                    return Err(parse_err(0, format!("missing pair {i} {j}")));
                }
            }
        }
    }

    let distances = DistanceMatrix::from_values(n, values)
        .map_err(|e| parse_err(0, e.to_string()))?;
    WeightedInstance::new(distances, weights)
}

/// Canonical text form: header, count, pairs in index order; the weight
/// column appears only when it differs from 1.
pub fn write_instance_string(inst: &WeightedInstance) -> String {
    let mut out = String::new();
    out.push_str("mvdlib-instance 1\n");
    let _ = writeln!(out, "n {}", inst.n());
    for (i, j, x) in inst.distances().pairs() {
        let w = inst.weight(i, j);
        if w == 1.0 {
            let _ = writeln!(out, "{i} {j} {x}");
        } else {
            let _ = writeln!(out, "{i} {j} {x} {w}");
        }
    }
    out
}

/// Serialize a signed graph: `+` edges become distance 0, `-` edges 1.
pub fn write_signed_graph_string(g: &SignedGraph) -> String {
    let mut out = String::new();
    out.push_str("mvdlib-instance 1\n# signed\n");
    let _ = writeln!(out, "n {}", g.n());
    for i in 0..g.n() {
        for j in (i + 1)..g.n() {
            let v = if g.is_plus(i, j) { 0 } else { 1 };
            let _ = writeln!(out, "{i} {j} {v}");
        }
    }
    out
}

/// Parse a signed graph from the instance format; every distance must be
/// 0 (`+`) or 1 (`-`).
pub fn parse_signed_graph_str(text: &str) -> Result<SignedGraph> {
    let inst = parse_instance_str(text)?;
    let mut g = SignedGraph::new(inst.n());
    for (i, j, v) in inst.distances().pairs() {
        if v == 0.0 {
            g.set_plus(i, j, true);
        } else if v != 1.0 {
            return Err(parse_err(
                0,
                format!("signed graphs need distances in {{0, 1}}, pair {i} {j} has {v}"),
            ));
        }
    }
    Ok(g)
}
