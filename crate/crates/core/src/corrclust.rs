//! Agreement correlation clustering over complete signed graphs, plus the
//! structural predicates (important group, everywhere dense) and a
//! brute-force optimum for tiny instances.
//!
//! Two vertices agree when their closed `+` neighborhoods differ on at most
//! an epsilon fraction of the smaller one. Clusters are grown from the
//! agreement set of a seed vertex through a prune / grow fixpoint, emitting
//! a singleton whenever one of the size guards fails. All fraction
//! thresholds are evaluated by integer cross-multiplication so boundary
//! cases are exact.

use crate::{Error, Result};
use serde::Serialize;

/// A complete signed graph: every unordered pair carries a `+` or `-`
/// label. Only the `+` adjacency is stored; an absent pair is `-`.
///
/// `N(u)` throughout this module is the closed `+` neighborhood (`u`
/// included).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SignedGraph {
    n: usize,
    adj: Vec<bool>,
}

impl SignedGraph {
    pub fn new(n: usize) -> Self {
        Self {
            n,
            adj: vec![false; n * n],
        }
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn is_plus(&self, u: usize, v: usize) -> bool {
        u != v && self.adj[u * self.n + v]
    }

    pub fn set_plus(&mut self, u: usize, v: usize, plus: bool) {
        assert!(u != v, "no self-loops");
        self.adj[u * self.n + v] = plus;
        self.adj[v * self.n + u] = plus;
    }

    /// Ascending `+` neighbors of `u` (open neighborhood).
    pub fn plus_neighbors(&self, u: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.n).filter(move |&v| self.is_plus(u, v))
    }
}

/// A partition of the vertices into disjoint nonempty clusters.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Clustering {
    pub clusters: Vec<Vec<usize>>,
}

impl Clustering {
    /// Map each vertex to the index of its cluster.
    pub fn cluster_ids(&self, n: usize) -> Vec<usize> {
        let mut ids = vec![usize::MAX; n];
        for (c, members) in self.clusters.iter().enumerate() {
            for &v in members {
                ids[v] = c;
            }
        }
        ids
    }

    /// Check cover and disjointness over `0..n`.
    pub fn is_partition_of(&self, n: usize) -> bool {
        let mut seen = vec![false; n];
        for members in &self.clusters {
            if members.is_empty() {
                return false;
            }
            for &v in members {
                if v >= n || seen[v] {
                    return false;
                }
                seen[v] = true;
            }
        }
        seen.iter().all(|&s| s)
    }
}

/// The density constant used by the per-cluster denseness bounds.
pub const DENSITY_DELTA: u64 = 14;

/// Agreement tolerance, stored as the exact rational `eps = num / den`.
///
/// Construction enforces `eps < 1/50` along with the two constraints
/// `(1/3 - 14 eps) / (1 + 14 eps) > eps / 8` and
/// `1 / (1 + (1/3 + 14 eps) / (2/3 - 14 eps)) > eps / 8`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AgreementParams {
    num: u64,
    den: u64,
}

impl AgreementParams {
    pub fn new(num: u64, den: u64) -> Result<Self> {
        if den == 0 || num == 0 {
            return Err(Error::InvalidParams("eps must be positive".into()));
        }
        let (p, q) = (num as i128, den as i128);
        if 50 * p >= q {
            return Err(Error::InvalidParams("eps must be < 1/50".into()));
        }
        // (1/3 - 14e)/(1 + 14e) > e/8  <=>  8q^2 > 339 p q + 42 p^2
        if 8 * q * q <= 339 * p * q + 42 * p * p {
            return Err(Error::InvalidParams(
                "eps violates the first density constraint".into(),
            ));
        }
        // 1/(1 + (1/3 + 14e)/(2/3 - 14e)) > e/8  <=>  16 q^2 > 339 p q
        if 16 * q * q <= 339 * p * q {
            return Err(Error::InvalidParams(
                "eps violates the second density constraint".into(),
            ));
        }
        Ok(Self { num, den })
    }

    /// The default tolerance 19/1000.
    pub fn default_eps() -> Self {
        Self::new(19, 1000).expect("default eps satisfies the constraints")
    }

    /// Parse a decimal string such as "0.019" into an exact rational.
    pub fn from_decimal_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidParams(format!("cannot parse eps from {s:?}"));
        let (int_part, frac_part) = match s.split_once('.') {
            Some((a, b)) => (a, b),
            None => (s, ""),
        };
        if int_part.is_empty() && frac_part.is_empty() {
            return Err(bad());
        }
        let digits: String = [int_part, frac_part].concat();
        if !digits.chars().all(|c| c.is_ascii_digit()) {
            return Err(bad());
        }
        let num: u64 = digits.parse().map_err(|_| bad())?;
        let den = 10u64
            .checked_pow(frac_part.len() as u32)
            .ok_or_else(bad)?;
        Self::new(num, den)
    }

    #[inline]
    pub fn eps(&self) -> f64 {
        self.num as f64 / self.den as f64
    }

    #[inline]
    pub fn num(&self) -> u64 {
        self.num
    }

    #[inline]
    pub fn den(&self) -> u64 {
        self.den
    }
}

/// Counting helpers restricted to a live-vertex mask.
struct Resid<'a> {
    g: &'a SignedGraph,
    live: &'a [bool],
}

impl Resid<'_> {
    /// |N(u)| with N closed, within the live set.
    fn closed_size(&self, u: usize) -> u64 {
        1 + self
            .g
            .plus_neighbors(u)
            .filter(|&v| self.live[v])
            .count() as u64
    }

    /// |N(u) ∩ S| with N closed; membership of `u` itself counts when
    /// `set[u]`.
    fn closed_inter(&self, u: usize, set: &[bool]) -> u64 {
        let own = u64::from(set[u]);
        own + self
            .g
            .plus_neighbors(u)
            .filter(|&v| self.live[v] && set[v])
            .count() as u64
    }
}

/// `true` iff the closed `+` neighborhoods of `u` and `v` differ on at most
/// an `eps` fraction of the smaller one.
pub fn agree(u: usize, v: usize, g: &SignedGraph, p: &AgreementParams) -> bool {
    let live = vec![true; g.n()];
    agree_masked(u, v, g, p, &live)
}

fn agree_masked(u: usize, v: usize, g: &SignedGraph, p: &AgreementParams, live: &[bool]) -> bool {
    debug_assert!(u != v);
    let mut sym_diff = 0u64;
    let mut nu = 1u64; // u itself
    let mut nv = 1u64;
    // u is in N(u); it belongs to N(v) iff (u,v) is a plus edge, same for v.
    let uv_plus = g.is_plus(u, v);
    if !uv_plus {
        sym_diff += 2;
    }
    for (w, &w_live) in live.iter().enumerate() {
        if !w_live || w == u || w == v {
            continue;
        }
        let in_u = g.is_plus(u, w);
        let in_v = g.is_plus(v, w);
        nu += u64::from(in_u);
        nv += u64::from(in_v);
        if in_u != in_v {
            sym_diff += 1;
        }
    }
    if uv_plus {
        nu += 1;
        nv += 1;
    }
    // |Δ| <= eps * min(|N(u)|, |N(v)|)
    p.den() * sym_diff <= p.num() * nu.min(nv)
}

/// Vertex processing order for [`agreement_cluster`].
#[derive(Debug, Clone)]
pub enum VertexOrder {
    /// Lowest surviving index first.
    Natural,
    /// A fixed priority list; must mention every vertex.
    Custom(Vec<usize>),
}

impl VertexOrder {
    fn first_live(&self, live: &[bool]) -> Option<usize> {
        match self {
            VertexOrder::Natural => live.iter().position(|&l| l),
            VertexOrder::Custom(order) => order.iter().copied().find(|&v| live[v]),
        }
    }
}

/// Cluster a complete signed graph by repeated agreement-set extraction.
///
/// For the seed vertex `v` of each round (within the residual graph): start
/// from `A(v) ∩ N(v)` where `A(v)` is the set of vertices agreeing with
/// `v`; prune members with too many `+` neighbors outside or too few inside
/// the candidate cluster; grow by outside vertices almost entirely
/// connected to it; and emit the result, falling back to the singleton
/// `{v}` whenever one of the size guards trips. Emitted vertices are
/// removed and the procedure recurses on the rest.
pub fn agreement_cluster(g: &SignedGraph, p: &AgreementParams, order: &VertexOrder) -> Clustering {
    let n = g.n();
    let (pn, pd) = (p.num(), p.den());
    let mut live = vec![true; n];
    let mut remaining = n;
    let mut clusters = Vec::new();

    while remaining > 0 {
        let v = order
            .first_live(&live)
            .expect("live vertices remain but none found in order");
        let resid = Resid { g, live: &live };

        let nv_size = resid.closed_size(v);
        let mut agreers = vec![false; n];
        agreers[v] = true;
        let mut a_size = 1u64;
        for u in 0..n {
            if u != v && live[u] && agree_masked(u, v, g, p, &live) {
                agreers[u] = true;
                a_size += 1;
            }
        }

        // Candidate seed set A(v) ∩ N(v); v is in both.
        let mut s = vec![false; n];
        s[v] = true;
        let mut s_size = 1u64;
        for u in g.plus_neighbors(v) {
            if live[u] && agreers[u] {
                s[u] = true;
                s_size += 1;
            }
        }
        let anv_size = s_size;

        // Step 2: seed must capture nearly all of min(|N(v)|, |A(v)|).
        let singleton =
            2 * pd * anv_size <= (2 * pd - pn) * nv_size.min(a_size) || {
                // Step 4: prune to the well-connected core.
                loop {
                    let mut changed = false;
                    for u in 0..n {
                        if !s[u] {
                            continue;
                        }
                        let nu = resid.closed_size(u);
                        let in_s = resid.closed_inter(u, &s);
                        let out = nu - in_s;
                        if pd * out > 2 * pn * nu || pd * in_s < (pd - 2 * pn) * s_size {
                            s[u] = false;
                            s_size -= 1;
                            changed = true;
                        }
                    }
                    if !changed {
                        break;
                    }
                }
                // Step 5: pruning must not have removed an eps fraction.
                let too_small = pd * s_size < (pd - pn) * anv_size;
                if !too_small {
                    // Step 6: absorb outsiders almost fully connected to S.
                    loop {
                        let mut changed = false;
                        for u in 0..n {
                            if !live[u] || s[u] {
                                continue;
                            }
                            let nu = resid.closed_size(u);
                            let in_s = resid.closed_inter(u, &s);
                            if pd * in_s > (pd - 4 * pn) * nu
                                && pd * in_s >= (pd - 4 * pn) * s_size
                            {
                                s[u] = true;
                                s_size += 1;
                                changed = true;
                            }
                        }
                        if !changed {
                            break;
                        }
                    }
                }
                // Step 7: growth beyond a 3 eps fraction aborts the cluster.
                too_small || pd * s_size > (pd + 3 * pn) * anv_size
            };

        let members: Vec<usize> = if singleton {
            vec![v]
        } else {
            (0..n).filter(|&u| s[u]).collect()
        };
        for &u in &members {
            live[u] = false;
        }
        remaining -= members.len();
        clusters.push(members);
    }

    Clustering { clusters }
}

/// Number of disagreements: `-` pairs inside a cluster plus `+` pairs
/// across clusters.
pub fn cc_cost(g: &SignedGraph, c: &Clustering) -> u64 {
    let n = g.n();
    let ids = c.cluster_ids(n);
    let mut cost = 0;
    for u in 0..n {
        for v in (u + 1)..n {
            let same = ids[u] == ids[v];
            if same != g.is_plus(u, v) {
                cost += 1;
            }
        }
    }
    cost
}

/// Maximum instance size accepted by [`cc_brute_force`].
pub const BRUTE_FORCE_MAX_N: usize = 10;

/// Globally optimal correlation clustering by exhaustive enumeration of set
/// partitions, for `n <= 10`. Ties break toward the lexicographically
/// smallest restricted-growth encoding.
pub fn cc_brute_force(g: &SignedGraph) -> Result<(Clustering, u64)> {
    let n = g.n();
    if n > BRUTE_FORCE_MAX_N {
        return Err(Error::BruteForceSize {
            n,
            max: BRUTE_FORCE_MAX_N,
        });
    }
    if n == 0 {
        return Ok((Clustering { clusters: vec![] }, 0));
    }

    let mut best: Option<(u64, Vec<usize>)> = None;
    let mut rgs = vec![0usize; n];
    // Enumerate restricted-growth strings in lexicographic order.
    loop {
        let k = rgs.iter().max().copied().unwrap_or(0) + 1;
        let mut clusters = vec![Vec::new(); k];
        for (v, &c) in rgs.iter().enumerate() {
            clusters[c].push(v);
        }
        let cost = cc_cost(g, &Clustering { clusters });
        if best.as_ref().is_none_or(|(b, _)| cost < *b) {
            best = Some((cost, rgs.clone()));
        }

        // Advance to the next restricted-growth string.
        let mut pos = n as isize - 1;
        loop {
            if pos <= 0 {
                pos = -1;
                break;
            }
            let max_prefix = rgs[..pos as usize].iter().max().copied().unwrap_or(0);
            if rgs[pos as usize] <= max_prefix {
                rgs[pos as usize] += 1;
                for r in rgs.iter_mut().skip(pos as usize + 1) {
                    *r = 0;
                }
                break;
            }
            pos -= 1;
        }
        if pos < 0 {
            break;
        }
    }

    let (cost, rgs) = best.expect("at least one partition exists");
    let k = rgs.iter().max().copied().unwrap_or(0) + 1;
    let mut clusters = vec![Vec::new(); k];
    for (v, &c) in rgs.iter().enumerate() {
        clusters[c].push(v);
    }
    Ok((Clustering { clusters }, cost))
}

/// `true` iff every member of `set` keeps at most an `eps/8` fraction of
/// its closed `+` neighborhood outside the set and is `+` connected
/// (closed) to at least a `1 - eps/8` fraction of the set.
pub fn is_important_group(set: &[usize], g: &SignedGraph, p: &AgreementParams) -> bool {
    assert!(!set.is_empty(), "important groups are nonempty");
    let n = g.n();
    let mut member = vec![false; n];
    for &v in set {
        member[v] = true;
    }
    let size = set.len() as u64;
    let (pn, pd) = (p.num(), p.den());
    for &v in set {
        let mut nv = 1u64;
        let mut inside = 1u64; // v itself
        for w in g.plus_neighbors(v) {
            nv += 1;
            inside += u64::from(member[w]);
        }
        let outside = nv - inside;
        // outside <= (eps/8) |N(v)|
        if 8 * pd * outside > pn * nv {
            return false;
        }
        // inside >= (1 - eps/8) |C|
        if 8 * pd * inside < (8 * pd - pn) * size {
            return false;
        }
    }
    true
}

/// `true` iff the set is a singleton or every member has a `+` edge to at
/// least `2|C|/3` of the set.
pub fn is_everywhere_dense(set: &[usize], g: &SignedGraph) -> bool {
    if set.len() <= 1 {
        return true;
    }
    let n = g.n();
    let mut member = vec![false; n];
    for &v in set {
        member[v] = true;
    }
    let size = set.len() as u64;
    for &v in set {
        let edges_in = g.plus_neighbors(v).filter(|&w| member[w]).count() as u64;
        if 3 * edges_in < 2 * size {
            return false;
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;

    fn disjoint_cliques(sizes: &[usize]) -> SignedGraph {
        let n: usize = sizes.iter().sum();
        let mut g = SignedGraph::new(n);
        let mut start = 0;
        for &s in sizes {
            for a in start..start + s {
                for b in (a + 1)..start + s {
                    g.set_plus(a, b, true);
                }
            }
            start += s;
        }
        g
    }

    #[test]
    fn default_eps_is_valid() {
        let p = AgreementParams::default_eps();
        assert_eq!((p.num(), p.den()), (19, 1000));
        assert!(AgreementParams::new(1, 49).is_err()); // >= 1/50
        assert!(AgreementParams::new(1, 51).is_ok());
        assert!(AgreementParams::from_decimal_str("0.019").is_ok());
        assert!(AgreementParams::from_decimal_str("0.05").is_err());
        assert!(AgreementParams::from_decimal_str("abc").is_err());
    }

    #[test]
    fn clique_members_agree() {
        let g = disjoint_cliques(&[6, 6]);
        let p = AgreementParams::default_eps();
        assert!(agree(0, 1, &g, &p));
        assert!(!agree(0, 6, &g, &p));
    }

    #[test]
    fn isolated_vertex_disagrees_with_clique() {
        let mut g = disjoint_cliques(&[10]);
        let n = g.n();
        let mut bigger = SignedGraph::new(n + 1);
        for u in 0..n {
            for v in (u + 1)..n {
                if g.is_plus(u, v) {
                    bigger.set_plus(u, v, true);
                }
            }
        }
        g = bigger;
        let p = AgreementParams::default_eps();
        assert!(!agree(0, 10, &g, &p));
    }

    #[test]
    fn bridged_cliques_disagree_across() {
        // Two 20-cliques joined by one edge: the endpoints' neighborhoods
        // differ in 38 vertices, far above eps * 21.
        let mut g = disjoint_cliques(&[20, 20]);
        g.set_plus(0, 20, true);
        let p = AgreementParams::default_eps();
        assert!(!agree(0, 20, &g, &p));
    }

    #[test]
    fn two_cliques_recovered_at_cost_zero() {
        let g = disjoint_cliques(&[5, 5]);
        let p = AgreementParams::default_eps();
        let c = agreement_cluster(&g, &p, &VertexOrder::Natural);
        assert!(c.is_partition_of(10));
        assert_eq!(c.clusters.len(), 2);
        assert_eq!(cc_cost(&g, &c), 0);
        let (opt, opt_cost) = cc_brute_force(&g).unwrap();
        assert_eq!(opt_cost, 0);
        assert_eq!(opt.clusters, c.clusters);
    }

    #[test]
    fn all_minus_graph_yields_singletons() {
        let g = SignedGraph::new(6);
        let p = AgreementParams::default_eps();
        let c = agreement_cluster(&g, &p, &VertexOrder::Natural);
        assert_eq!(c.clusters.len(), 6);
        assert!(c.clusters.iter().all(|cl| cl.len() == 1));
    }

    #[test]
    fn planted_cliques_with_cross_flips_recovered_when_large() {
        // Groups of 30 tolerate stray cross edges away from their seed
        // vertices: step 4 keeps the core together and step 6 pulls the
        // touched members back in.
        let mut g = disjoint_cliques(&[30, 30, 30]);
        g.set_plus(5, 35, true);
        g.set_plus(47, 63, true);
        let p = AgreementParams::default_eps();
        let c = agreement_cluster(&g, &p, &VertexOrder::Natural);
        let mut got = c.clusters.clone();
        got.sort();
        let want: Vec<Vec<usize>> = vec![
            (0..30).collect(),
            (30..60).collect(),
            (60..90).collect(),
        ];
        assert_eq!(got, want);
        assert_eq!(cc_cost(&g, &c), 2);
    }

    #[test]
    fn flip_incident_to_the_seed_yields_a_singleton() {
        // The seed vertex of a round is the lowest surviving index; when a
        // stray edge touches it, nobody agrees with it and it is emitted
        // alone. The untouched remainder is still recovered exactly.
        let mut g = disjoint_cliques(&[30, 30]);
        g.set_plus(0, 30, true);
        let p = AgreementParams::default_eps();
        let c = agreement_cluster(&g, &p, &VertexOrder::Natural);
        assert_eq!(c.clusters[0], vec![0]);
        assert_eq!(c.clusters[1], (1..30).collect::<Vec<_>>());
        assert_eq!(c.clusters[2], (30..60).collect::<Vec<_>>());
    }

    #[test]
    fn cc_cost_examples() {
        let g = disjoint_cliques(&[5]);
        let one = Clustering {
            clusters: vec![(0..5).collect()],
        };
        assert_eq!(cc_cost(&g, &one), 0);
        let singles = Clustering {
            clusters: (0..5).map(|v| vec![v]).collect(),
        };
        assert_eq!(cc_cost(&g, &singles), 10); // k(k-1)/2

        let mut planted = disjoint_cliques(&[4, 4]);
        planted.set_plus(0, 4, true);
        let truth = Clustering {
            clusters: vec![vec![0, 1, 2, 3], vec![4, 5, 6, 7]],
        };
        assert_eq!(cc_cost(&planted, &truth), 1);
    }

    #[test]
    fn brute_force_small_cases() {
        let mut pair = SignedGraph::new(2);
        pair.set_plus(0, 1, true);
        let (c, cost) = cc_brute_force(&pair).unwrap();
        assert_eq!(cost, 0);
        assert_eq!(c.clusters, vec![vec![0, 1]]);

        // Triangle with two + edges and one -: every partition pays >= 1.
        let mut tri = SignedGraph::new(3);
        tri.set_plus(0, 1, true);
        tri.set_plus(1, 2, true);
        let (_, cost) = cc_brute_force(&tri).unwrap();
        assert_eq!(cost, 1);

        let g = disjoint_cliques(&[4, 4]);
        let (c, cost) = cc_brute_force(&g).unwrap();
        assert_eq!(cost, 0);
        assert_eq!(c.clusters, vec![vec![0, 1, 2, 3], vec![4, 5, 6, 7]]);

        assert!(cc_brute_force(&SignedGraph::new(11)).is_err());
    }

    #[test]
    fn important_group_checks() {
        let p = AgreementParams::default_eps();
        let g = disjoint_cliques(&[8]);
        let all: Vec<usize> = (0..8).collect();
        assert!(is_important_group(&all, &g, &p));

        // A singleton with an outside + neighbor fails the outside bound.
        let mut g2 = SignedGraph::new(3);
        g2.set_plus(0, 1, true);
        assert!(!is_important_group(&[0], &g2, &p));
        assert!(is_important_group(&[2], &g2, &p));

        // 20-clique with one member given two external + edges.
        let mut g3 = disjoint_cliques(&[20]);
        let mut ext = SignedGraph::new(22);
        for u in 0..20 {
            for v in (u + 1)..20 {
                if g3.is_plus(u, v) {
                    ext.set_plus(u, v, true);
                }
            }
        }
        ext.set_plus(0, 20, true);
        ext.set_plus(0, 21, true);
        g3 = ext;
        let group: Vec<usize> = (0..20).collect();
        assert!(!is_important_group(&group, &g3, &p));
    }

    #[test]
    fn everywhere_dense_checks() {
        let g = disjoint_cliques(&[5]);
        assert!(is_everywhere_dense(&[0], &g));
        assert!(is_everywhere_dense(&[0, 1, 2, 3, 4], &g));

        // Path on three vertices: endpoints have one + edge < 2*3/3.
        let mut path = SignedGraph::new(3);
        path.set_plus(0, 1, true);
        path.set_plus(1, 2, true);
        assert!(!is_everywhere_dense(&[0, 1, 2], &path));
    }

    #[test]
    fn agreement_cost_never_beats_brute_force() {
        use rand::Rng;
        use rand_chacha::rand_core::SeedableRng;
        let p = AgreementParams::default_eps();
        for seed in 0..30u64 {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let n = rng.gen_range(2..=9);
            let mut g = SignedGraph::new(n);
            for u in 0..n {
                for v in (u + 1)..n {
                    if rng.gen_bool(0.5) {
                        g.set_plus(u, v, true);
                    }
                }
            }
            let c = agreement_cluster(&g, &p, &VertexOrder::Natural);
            assert!(c.is_partition_of(n));
            let (_, opt) = cc_brute_force(&g).unwrap();
            assert!(cc_cost(&g, &c) >= opt, "seed {seed}");
        }
    }

    #[test]
    fn custom_order_changes_seed_choice() {
        let g = disjoint_cliques(&[3, 3]);
        let p = AgreementParams::default_eps();
        let c = agreement_cluster(&g, &p, &VertexOrder::Custom(vec![5, 4, 3, 2, 1, 0]));
        assert_eq!(c.clusters[0], vec![3, 4, 5]);
    }
}
