//! Power-grid graphs, observability semantics, and classical domination solvers.
//!
//! Buses are graph nodes and deduplicated branches are edges. Node ids are
//! 0-based internally; edge-list files use 1-based bus ids.

use std::fmt;
use thiserror::Error;

pub type NodeId = usize;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("edge list declares no nodes")]
    Empty,
    #[error("node {0} out of range for a {1}-node graph")]
    NodeOutOfRange(NodeId, usize),
    #[error("{nodes} nodes exceeds the exhaustive-search guard of {guard}; pass force to override")]
    TooLarge { nodes: usize, guard: usize },
    #[error("no dominating set of size <= {budget} exists (gamma = {gamma}); use the SA solver for larger instances")]
    BudgetExceeded { budget: usize, gamma: usize },
    #[error("rhs entry {0} must be >= 1")]
    InvalidRhs(i64),
}

/// Simple undirected graph with merged parallel branches and no self-loops.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    edges: Vec<(NodeId, NodeId)>,
    adj: Vec<Vec<NodeId>>,
}

/// What ingestion dropped or merged, alongside the resulting graph.
#[derive(Debug, Clone)]
pub struct ParseReport {
    pub graph: Graph,
    pub self_loops_dropped: usize,
    pub parallels_merged: usize,
}

impl Graph {
    /// Builds a graph from 0-based node pairs. Self-loops are dropped and
    /// duplicate edges merged, mirroring the file ingestion rules.
    pub fn from_edges(
        n: usize,
        pairs: impl IntoIterator<Item = (NodeId, NodeId)>,
    ) -> Result<Self, GraphError> {
        if n == 0 {
            return Err(GraphError::Empty);
        }
        let mut edges: Vec<(NodeId, NodeId)> = Vec::new();
        for (u, v) in pairs {
            if u >= n {
                return Err(GraphError::NodeOutOfRange(u, n));
            }
            if v >= n {
                return Err(GraphError::NodeOutOfRange(v, n));
            }
            if u == v {
                continue;
            }
            edges.push((u.min(v), u.max(v)));
        }
        edges.sort_unstable();
        edges.dedup();
        Ok(Self::from_unique_edges(n, edges))
    }

    fn from_unique_edges(n: usize, edges: Vec<(NodeId, NodeId)>) -> Self {
        let mut adj = vec![Vec::new(); n];
        for &(u, v) in &edges {
            adj[u].push(v);
            adj[v].push(u);
        }
        for list in &mut adj {
            list.sort_unstable();
        }
        Graph { n, edges, adj }
    }

    /// Parses the edge-list text format: `# comment`, optional `nodes K`
    /// header, then one 1-based `u v` pair per line. The node count is the
    /// maximum bus id seen unless the header raises it.
    pub fn parse_edge_list(text: &str) -> Result<ParseReport, GraphError> {
        let mut declared: Option<usize> = None;
        let mut raw: Vec<(usize, usize, usize)> = Vec::new(); // (u, v, line)
        let mut max_id = 0usize;
        for (idx, line) in text.lines().enumerate() {
            let lineno = idx + 1;
            let body = match line.find('#') {
                Some(p) => &line[..p],
                None => line,
            };
            let body = body.trim();
            if body.is_empty() {
                continue;
            }
            let mut parts = body.split_whitespace();
            let first = parts.next().unwrap();
            if first == "nodes" {
                let count = parts
                    .next()
                    .ok_or_else(|| GraphError::Parse {
                        line: lineno,
                        msg: "nodes header missing a count".into(),
                    })?
                    .parse::<usize>()
                    .map_err(|_| GraphError::Parse {
                        line: lineno,
                        msg: "nodes header count is not a positive integer".into(),
                    })?;
                if count == 0 {
                    return Err(GraphError::Parse {
                        line: lineno,
                        msg: "nodes header count must be positive".into(),
                    });
                }
                if parts.next().is_some() {
                    return Err(GraphError::Parse {
                        line: lineno,
                        msg: "trailing tokens after nodes header".into(),
                    });
                }
                declared = Some(count);
                continue;
            }
            let second = parts.next().ok_or_else(|| GraphError::Parse {
                line: lineno,
                msg: "expected two bus ids".into(),
            })?;
            if parts.next().is_some() {
                return Err(GraphError::Parse {
                    line: lineno,
                    msg: "trailing tokens after edge".into(),
                });
            }
            let parse_id = |tok: &str| -> Result<usize, GraphError> {
                let id = tok.parse::<usize>().map_err(|_| GraphError::Parse {
                    line: lineno,
                    msg: format!("'{tok}' is not a positive integer bus id"),
                })?;
                if id == 0 {
                    return Err(GraphError::Parse {
                        line: lineno,
                        msg: "bus ids are 1-based; 0 is not valid".into(),
                    });
                }
                Ok(id)
            };
            let u = parse_id(first)?;
            let v = parse_id(second)?;
            max_id = max_id.max(u).max(v);
            raw.push((u, v, lineno));
        }
        let n = match declared {
            Some(k) => {
                if max_id > k {
                    let bad = raw.iter().find(|&&(u, v, _)| u > k || v > k).unwrap();
                    return Err(GraphError::Parse {
                        line: bad.2,
                        msg: format!("bus id exceeds declared node count {k}"),
                    });
                }
                k
            }
            None => max_id,
        };
        if n == 0 {
            return Err(GraphError::Empty);
        }
        let mut self_loops = 0usize;
        let mut edges: Vec<(NodeId, NodeId)> = Vec::new();
        for (u, v, _) in raw {
            if u == v {
                self_loops += 1;
                continue;
            }
            let (a, b) = (u - 1, v - 1);
            edges.push((a.min(b), a.max(b)));
        }
        let before = edges.len();
        edges.sort_unstable();
        edges.dedup();
        let parallels = before - edges.len();
        Ok(ParseReport {
            graph: Self::from_unique_edges(n, edges),
            self_loops_dropped: self_loops,
            parallels_merged: parallels,
        })
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(NodeId, NodeId)] {
        &self.edges
    }

    pub fn degree(&self, node: NodeId) -> usize {
        self.adj[node].len()
    }

    pub fn neighbors(&self, node: NodeId) -> &[NodeId] {
        &self.adj[node]
    }

    /// N[i] = {i} union adj(i), sorted.
    pub fn closed_neighborhood(&self, node: NodeId) -> Vec<NodeId> {
        let mut nh = Vec::with_capacity(self.degree(node) + 1);
        let mut inserted = false;
        for &v in &self.adj[node] {
            if !inserted && node < v {
                nh.push(node);
                inserted = true;
            }
            nh.push(v);
        }
        if !inserted {
            nh.push(node);
        }
        nh
    }
}

/// Set of nodes, equivalently a bit string over the graph's nodes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeSet {
    n: usize,
    members: Vec<NodeId>,
}

impl NodeSet {
    pub fn empty(n: usize) -> Self {
        NodeSet { n, members: Vec::new() }
    }

    pub fn from_members(
        n: usize,
        members: impl IntoIterator<Item = NodeId>,
    ) -> Result<Self, GraphError> {
        let mut m: Vec<NodeId> = members.into_iter().collect();
        m.sort_unstable();
        m.dedup();
        if let Some(&bad) = m.iter().find(|&&v| v >= n) {
            return Err(GraphError::NodeOutOfRange(bad, n));
        }
        Ok(NodeSet { n, members: m })
    }

    pub fn from_bits(bits: &[bool]) -> Self {
        let members = bits
            .iter()
            .enumerate()
            .filter_map(|(i, &b)| b.then_some(i))
            .collect();
        NodeSet { n: bits.len(), members }
    }

    pub fn to_bits(&self) -> Vec<bool> {
        let mut bits = vec![false; self.n];
        for &v in &self.members {
            bits[v] = true;
        }
        bits
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, node: NodeId) -> bool {
        self.members.binary_search(&node).is_ok()
    }

    pub fn iter(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.members.iter().copied()
    }
}

impl fmt::Display for NodeSet {
    /// 1-based bus ids, matching the file format.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, v) in self.members.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{}", v + 1)?;
        }
        write!(f, "}}")
    }
}

/// Row i holds the closed neighborhood N[i]; the observability constraint is
/// `A x >= b` with A the adjacency matrix plus identity.
#[derive(Debug, Clone)]
pub struct ObservabilityMatrix {
    rows: Vec<Vec<NodeId>>,
    rhs: Vec<i64>,
}

impl ObservabilityMatrix {
    pub fn from_graph(g: &Graph) -> Self {
        Self::with_rhs(g, vec![1; g.node_count()]).unwrap()
    }

    pub fn with_rhs(g: &Graph, rhs: Vec<i64>) -> Result<Self, GraphError> {
        assert_eq!(rhs.len(), g.node_count(), "rhs length must match node count");
        if let Some(&bad) = rhs.iter().find(|&&b| b < 1) {
            return Err(GraphError::InvalidRhs(bad));
        }
        let rows = (0..g.node_count()).map(|i| g.closed_neighborhood(i)).collect();
        Ok(ObservabilityMatrix { rows, rhs })
    }

    pub fn row(&self, i: usize) -> &[NodeId] {
        &self.rows[i]
    }

    pub fn rhs(&self, i: usize) -> i64 {
        self.rhs[i]
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }
}

/// True iff every node is in `s` or adjacent to a member of `s`; the second
/// component lists the uncovered nodes.
pub fn is_dominating(g: &Graph, s: &NodeSet) -> (bool, NodeSet) {
    assert_eq!(s.node_count(), g.node_count(), "node set does not match graph");
    let mut covered = vec![false; g.node_count()];
    for v in s.iter() {
        covered[v] = true;
        for &w in g.neighbors(v) {
            covered[w] = true;
        }
    }
    let uncovered: Vec<NodeId> = (0..g.node_count()).filter(|&v| !covered[v]).collect();
    let ok = uncovered.is_empty();
    (ok, NodeSet { n: g.node_count(), members: uncovered })
}

fn greedy_cover(g: &Graph, mut pick: impl FnMut(&[NodeId]) -> NodeId) -> NodeSet {
    let n = g.node_count();
    let mut covered = vec![false; n];
    let mut remaining = n;
    let mut chosen = Vec::new();
    let mut ties = Vec::new();
    while remaining > 0 {
        let mut best_gain = 0usize;
        ties.clear();
        for v in 0..n {
            let mut gain = usize::from(!covered[v]);
            for &w in g.neighbors(v) {
                gain += usize::from(!covered[w]);
            }
            if gain > best_gain {
                best_gain = gain;
                ties.clear();
                ties.push(v);
            } else if gain == best_gain && gain > 0 {
                ties.push(v);
            }
        }
        let best = pick(&ties);
        chosen.push(best);
        if !covered[best] {
            covered[best] = true;
            remaining -= 1;
        }
        for &w in g.neighbors(best) {
            if !covered[w] {
                covered[w] = true;
                remaining -= 1;
            }
        }
    }
    chosen.sort_unstable();
    NodeSet { n, members: chosen }
}

/// Greedy cover: repeatedly pick the node covering the most uncovered nodes,
/// ties broken by lowest index.
pub fn greedy_dominating(g: &Graph) -> NodeSet {
    greedy_cover(g, |ties| ties[0])
}

/// Greedy cover with randomized tie-breaking, for diverse warm starts.
pub fn greedy_dominating_seeded(g: &Graph, rng: &mut impl rand::Rng) -> NodeSet {
    greedy_cover(g, |ties| ties[rng.random_range(0..ties.len())])
}

/// Local descent on a dominating set: drops redundant members, then applies
/// (2 -> 1) exchanges (two members replaced by one node covering everything
/// they privately covered) until neither move applies. Randomized order,
/// deterministic per rng stream.
pub fn improve_dominating_seeded(
    g: &Graph,
    set: &NodeSet,
    rng: &mut impl rand::Rng,
) -> NodeSet {
    use rand::seq::SliceRandom;
    let n = g.node_count();
    let mut members: Vec<NodeId> = set.iter().collect();
    let cover_counts = |members: &[NodeId]| -> Vec<u32> {
        let mut counts = vec![0u32; n];
        for &v in members {
            counts[v] += 1;
            for &w in g.neighbors(v) {
                counts[w] += 1;
            }
        }
        counts
    };
    loop {
        // Removal pass.
        members.shuffle(rng);
        let mut counts = cover_counts(&members);
        let mut idx = 0;
        while idx < members.len() {
            let v = members[idx];
            let redundant = counts[v] > 1 && g.neighbors(v).iter().all(|&w| counts[w] > 1);
            if redundant {
                counts[v] -= 1;
                for &w in g.neighbors(v) {
                    counts[w] -= 1;
                }
                members.swap_remove(idx);
            } else {
                idx += 1;
            }
        }
        // Exchange pass: find members (a, b) and a node u with
        // N[u] covering everything only they covered.
        let mut improved = false;
        let mut order: Vec<(usize, usize)> = (0..members.len())
            .flat_map(|i| ((i + 1)..members.len()).map(move |j| (i, j)))
            .collect();
        order.shuffle(rng);
        'pairs: for (i, j) in order {
            let (a, b) = (members[i], members[j]);
            // Nodes covered only by a and/or b.
            let mut lost = Vec::new();
            let consider = |x: NodeId, lost: &mut Vec<NodeId>| {
                let by_a = u32::from(x == a || g.neighbors(a).contains(&x));
                let by_b = u32::from(x == b || g.neighbors(b).contains(&x));
                if counts[x] == by_a + by_b {
                    lost.push(x);
                }
            };
            consider(a, &mut lost);
            consider(b, &mut lost);
            for &w in g.neighbors(a) {
                consider(w, &mut lost);
            }
            for &w in g.neighbors(b) {
                if w != a && !g.neighbors(a).contains(&w) {
                    consider(w, &mut lost);
                }
            }
            if lost.is_empty() {
                continue;
            }
            lost.sort_unstable();
            lost.dedup();
            // Candidate replacements: common closed neighborhood of `lost`.
            let mut tally = vec![0u32; n];
            for &x in &lost {
                tally[x] += 1;
                for &w in g.neighbors(x) {
                    tally[w] += 1;
                }
            }
            let need = lost.len() as u32;
            if let Some(u) = tally.iter().position(|&t| t == need) {
                members.retain(|&m| m != a && m != b);
                members.push(u);
                improved = true;
                break 'pairs;
            }
        }
        if !improved {
            break;
        }
    }
    NodeSet::from_members(n, members).unwrap()
}

const EXACT_GUARD: usize = 40;

/// Minimum dominating-set size and one witness, by iterative deepening over
/// the target size with branch-and-bound. Branches on the closed neighborhood
/// of the lowest-index uncovered node.
///
/// Refuses graphs above the 40-node guard unless `force` is set (hard cap 64).
/// With `budget = Some(l)`, fails if gamma exceeds `l`.
pub fn exact_domination_number(
    g: &Graph,
    budget: Option<usize>,
    force: bool,
) -> Result<(usize, NodeSet), GraphError> {
    let n = g.node_count();
    if n > EXACT_GUARD && !force {
        return Err(GraphError::TooLarge { nodes: n, guard: EXACT_GUARD });
    }
    if n > 64 {
        return Err(GraphError::TooLarge { nodes: n, guard: 64 });
    }
    let full: u64 = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
    let closed: Vec<u64> = (0..n)
        .map(|v| {
            let mut m = 1u64 << v;
            for &w in g.neighbors(v) {
                m |= 1u64 << w;
            }
            m
        })
        .collect();

    let greedy = greedy_dominating(g);
    let ub = greedy.len();

    fn search(
        closed: &[u64],
        full: u64,
        covered: u64,
        picks_left: usize,
        chosen: &mut Vec<NodeId>,
    ) -> bool {
        if covered == full {
            return true;
        }
        if picks_left == 0 {
            return false;
        }
        let uncovered = !covered & full;
        let max_gain = closed
            .iter()
            .map(|&c| (c & uncovered).count_ones() as usize)
            .max()
            .unwrap_or(0);
        if uncovered.count_ones() as usize > max_gain * picks_left {
            return false;
        }
        let u = uncovered.trailing_zeros() as usize;
        let mut cands = closed[u] & full;
        while cands != 0 {
            let v = cands.trailing_zeros() as usize;
            cands &= cands - 1;
            chosen.push(v);
            if search(closed, full, covered | closed[v], picks_left - 1, chosen) {
                return true;
            }
            chosen.pop();
        }
        false
    }

    for k in 1..ub {
        if let Some(limit) = budget {
            if k > limit {
                return Err(GraphError::BudgetExceeded { budget: limit, gamma: k });
            }
        }
        let mut chosen = Vec::with_capacity(k);
        if search(&closed, full, 0, k, &mut chosen) {
            return Ok((k, NodeSet::from_members(n, chosen).unwrap()));
        }
    }
    if let Some(limit) = budget {
        if ub > limit {
            return Err(GraphError::BudgetExceeded { budget: limit, gamma: ub });
        }
    }
    Ok((ub, greedy))
}
