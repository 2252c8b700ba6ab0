//! Chimera hardware graphs, minor embedding, chain strength, and analog
//! range scaling.
//!
//! The embedder is a randomized chain-growth heuristic: logical nodes are
//! processed in random order, each new chain is rooted at the qubit
//! minimizing the total weighted shortest-path cost to the already-embedded
//! neighbor chains, and per-qubit weights grow exponentially with occupancy
//! to push chains apart. Improvement passes re-embed one node at a time until
//! no qubit is shared.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::collections::BinaryHeap;
use std::fmt;
use std::fmt::Write as _;

use num_traits::{One, Zero};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::reform::{fmt_coeff, Coeff, InteractionGraph, IsingModel};

#[derive(Debug, Error)]
pub enum ChimeraError {
    #[error("chimera dimensions must all be >= 1")]
    BadSpec,
    #[error("invalid embedding: {0}")]
    InvalidEmbedding(EmbeddingViolation),
    #[error("sample covers {got} qubits but the embedding references qubit {need}")]
    SampleTooShort { got: usize, need: usize },
    #[error("spin entries must be +1 or -1")]
    BadSpin,
    #[error("chain strength must be positive")]
    BadChainStrength,
}

/// (M, N, L) Chimera layout: an M x N array of K_{L,L} cells.
///
/// Qubit `((row*N)+col)*2L + side*L + offset`, side 0 = vertical shore,
/// side 1 = horizontal shore.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ChimeraSpec {
    pub rows: usize,
    pub cols: usize,
    pub shore: usize,
}

impl ChimeraSpec {
    /// The 2,048-qubit (16, 4) layout: 16 x 16 cells of 8 qubits.
    pub fn standard() -> Self {
        ChimeraSpec { rows: 16, cols: 16, shore: 4 }
    }

    pub fn new(rows: usize, cols: usize, shore: usize) -> Result<Self, ChimeraError> {
        if rows == 0 || cols == 0 || shore == 0 {
            return Err(ChimeraError::BadSpec);
        }
        Ok(ChimeraSpec { rows, cols, shore })
    }

    pub fn qubit_count(&self) -> usize {
        self.rows * self.cols * 2 * self.shore
    }

    pub fn index(&self, row: usize, col: usize, side: usize, offset: usize) -> usize {
        ((row * self.cols) + col) * 2 * self.shore + side * self.shore + offset
    }
}

/// Largest embeddable clique K_n and the edge count it implies: any
/// interaction graph with more edges cannot embed.
pub fn clique_bound(spec: ChimeraSpec) -> (usize, usize) {
    let n_max = 1 + spec.shore * spec.rows.min(spec.cols);
    (n_max, n_max * (n_max - 1) / 2)
}

#[derive(Debug, Clone)]
pub struct HardwareGraph {
    spec: ChimeraSpec,
    adj: Vec<Vec<usize>>,
    num_edges: usize,
}

pub fn build_chimera(spec: ChimeraSpec) -> HardwareGraph {
    let nq = spec.qubit_count();
    let mut adj = vec![Vec::new(); nq];
    let mut num_edges = 0;
    let add = |adj: &mut Vec<Vec<usize>>, a: usize, b: usize| {
        adj[a].push(b);
        adj[b].push(a);
    };
    for row in 0..spec.rows {
        for col in 0..spec.cols {
            for a in 0..spec.shore {
                for b in 0..spec.shore {
                    add(&mut adj, spec.index(row, col, 0, a), spec.index(row, col, 1, b));
                    num_edges += 1;
                }
            }
            if row + 1 < spec.rows {
                for k in 0..spec.shore {
                    add(&mut adj, spec.index(row, col, 0, k), spec.index(row + 1, col, 0, k));
                    num_edges += 1;
                }
            }
            if col + 1 < spec.cols {
                for k in 0..spec.shore {
                    add(&mut adj, spec.index(row, col, 1, k), spec.index(row, col + 1, 1, k));
                    num_edges += 1;
                }
            }
        }
    }
    for list in &mut adj {
        list.sort_unstable();
    }
    HardwareGraph { spec, adj, num_edges }
}

impl HardwareGraph {
    pub fn spec(&self) -> ChimeraSpec {
        self.spec
    }

    pub fn qubit_count(&self) -> usize {
        self.adj.len()
    }

    pub fn edge_count(&self) -> usize {
        self.num_edges
    }

    pub fn neighbors(&self, q: usize) -> &[usize] {
        &self.adj[q]
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.adj[a].binary_search(&b).is_ok()
    }

    /// Double-BFS eccentricity estimate, used as the occupancy weight base.
    fn diameter_estimate(&self) -> f64 {
        let (far, _) = self.bfs_farthest(0);
        let (_, ecc) = self.bfs_farthest(far);
        (ecc.max(2)) as f64
    }

    fn bfs_farthest(&self, start: usize) -> (usize, usize) {
        let mut dist = vec![usize::MAX; self.adj.len()];
        dist[start] = 0;
        let mut queue = std::collections::VecDeque::from([start]);
        let mut far = (start, 0);
        while let Some(q) = queue.pop_front() {
            for &r in &self.adj[q] {
                if dist[r] == usize::MAX {
                    dist[r] = dist[q] + 1;
                    if dist[r] > far.1 {
                        far = (r, dist[r]);
                    }
                    queue.push_back(r);
                }
            }
        }
        far
    }
}

/// Mapping from logical variables to disjoint connected chains of qubits.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Embedding {
    chains: Vec<Vec<usize>>,
}

impl Embedding {
    pub fn new(chains: Vec<Vec<usize>>) -> Self {
        let chains = chains
            .into_iter()
            .map(|mut c| {
                c.sort_unstable();
                c.dedup();
                c
            })
            .collect();
        Embedding { chains }
    }

    pub fn num_logical(&self) -> usize {
        self.chains.len()
    }

    pub fn chain(&self, var: usize) -> &[usize] {
        &self.chains[var]
    }

    pub fn chains(&self) -> &[Vec<usize>] {
        &self.chains
    }

    pub fn total_qubits(&self) -> usize {
        self.chains.iter().map(|c| c.len()).sum()
    }

    pub fn max_chain_len(&self) -> usize {
        self.chains.iter().map(|c| c.len()).max().unwrap_or(0)
    }

    /// Text export: one `chain <var> <name> <qubits...>` line per variable.
    pub fn export_text(&self, names: &[String]) -> String {
        let mut out = String::new();
        writeln!(out, "format embedding").unwrap();
        writeln!(out, "vars {}", self.chains.len()).unwrap();
        for (i, c) in self.chains.iter().enumerate() {
            let name = names.get(i).map(String::as_str).unwrap_or("?");
            write!(out, "chain {i} {name}").unwrap();
            for q in c {
                write!(out, " {q}").unwrap();
            }
            writeln!(out).unwrap();
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EmbeddingViolation {
    EmptyChain { var: usize },
    QubitOutOfRange { var: usize, qubit: usize },
    Overlap { qubit: usize, vars: (usize, usize) },
    DisconnectedChain { var: usize },
    MissingCoupler { u: usize, v: usize },
}

impl fmt::Display for EmbeddingViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EmbeddingViolation::EmptyChain { var } => write!(f, "empty chain for variable {var}"),
            EmbeddingViolation::QubitOutOfRange { var, qubit } => {
                write!(f, "variable {var} uses qubit {qubit} outside the hardware graph")
            }
            EmbeddingViolation::Overlap { qubit, vars } => {
                write!(f, "overlap: qubit {qubit} shared by variables {} and {}", vars.0, vars.1)
            }
            EmbeddingViolation::DisconnectedChain { var } => {
                write!(f, "disconnected chain for variable {var}")
            }
            EmbeddingViolation::MissingCoupler { u, v } => {
                write!(f, "no hardware edge joins the chains of variables {u} and {v}")
            }
        }
    }
}

/// Checks the three embedding invariants exhaustively: disjoint chains,
/// connected chains, and a hardware edge for every logical interaction.
pub fn verify_embedding(
    logical: &InteractionGraph,
    hw: &HardwareGraph,
    e: &Embedding,
) -> (bool, Vec<EmbeddingViolation>) {
    let mut violations = Vec::new();
    if e.num_logical() != logical.num_nodes() {
        violations.push(EmbeddingViolation::EmptyChain { var: e.num_logical() });
        return (false, violations);
    }
    let nq = hw.qubit_count();
    let mut owner: Vec<Option<usize>> = vec![None; nq];
    for (var, chain) in e.chains().iter().enumerate() {
        if chain.is_empty() {
            violations.push(EmbeddingViolation::EmptyChain { var });
            continue;
        }
        for &q in chain {
            if q >= nq {
                violations.push(EmbeddingViolation::QubitOutOfRange { var, qubit: q });
                continue;
            }
            match owner[q] {
                Some(prev) => {
                    violations.push(EmbeddingViolation::Overlap { qubit: q, vars: (prev, var) })
                }
                None => owner[q] = Some(var),
            }
        }
        if chain.iter().all(|&q| q < nq) && !chain_connected(hw, chain) {
            violations.push(EmbeddingViolation::DisconnectedChain { var });
        }
    }
    for &(u, v) in logical.edges() {
        let joined = e
            .chain(u)
            .iter()
            .any(|&a| a < nq && e.chain(v).iter().any(|&b| b < nq && hw.has_edge(a, b)));
        if !joined {
            violations.push(EmbeddingViolation::MissingCoupler { u, v });
        }
    }
    (violations.is_empty(), violations)
}

fn chain_connected(hw: &HardwareGraph, chain: &[usize]) -> bool {
    if chain.is_empty() {
        return false;
    }
    let mut seen = vec![false; chain.len()];
    let mut stack = vec![0usize];
    seen[0] = true;
    while let Some(i) = stack.pop() {
        for &r in hw.neighbors(chain[i]) {
            if let Ok(j) = chain.binary_search(&r) {
                if !seen[j] {
                    seen[j] = true;
                    stack.push(j);
                }
            }
        }
    }
    seen.iter().all(|&s| s)
}

const IMPROVEMENT_PASSES: usize = 10;

/// Chains of the largest native clique minor, K_{1 + L*min(M,N)}: block-b
/// chains take a column segment (rows 0..=b) and a row segment (cols b..),
/// meeting at the diagonal cell; the final chain threads the free
/// sub-diagonal cells, which touch every block.
fn native_clique_chains(spec: ChimeraSpec, n: usize) -> Option<Vec<Vec<usize>>> {
    let m = spec.rows.min(spec.cols);
    let l = spec.shore;
    let (n_max, _) = clique_bound(spec);
    if n == 0 || n > n_max {
        return None;
    }
    let mut chains: Vec<Vec<usize>> = Vec::with_capacity(n_max);
    if m == 1 {
        // One K_{L,L} cell: split the offset-0 pair into two single-qubit
        // chains to reach L + 1.
        chains.push(vec![spec.index(0, 0, 0, 0)]);
        chains.push(vec![spec.index(0, 0, 1, 0)]);
        for k in 1..l {
            chains.push(vec![spec.index(0, 0, 0, k), spec.index(0, 0, 1, k)]);
        }
    } else {
        for b in 0..m {
            for k in 0..l {
                let mut chain = Vec::with_capacity(m + 1);
                for r in 0..=b {
                    chain.push(spec.index(r, b, 0, k));
                }
                for col in b..m {
                    chain.push(spec.index(b, col, 1, k));
                }
                chains.push(chain);
            }
        }
        let mut extra = Vec::new();
        for c in 0..m - 1 {
            for k in 0..l {
                extra.push(spec.index(c + 1, c, 0, k));
                extra.push(spec.index(c + 1, c, 1, k));
            }
            if c + 2 < m {
                extra.push(spec.index(c + 2, c, 0, 0));
                extra.push(spec.index(c + 2, c, 1, 0));
            }
        }
        chains.push(extra);
    }
    chains.truncate(n);
    Some(chains)
}

/// Deterministic candidate built from the native clique template (any graph
/// with at most clique-bound many nodes fits), trimmed to the actual
/// interaction structure.
fn template_embedding(logical: &InteractionGraph, hw: &HardwareGraph) -> Option<Embedding> {
    let chains = native_clique_chains(hw.spec(), logical.num_nodes())?;
    let mut occupancy = vec![0u32; hw.qubit_count()];
    let chains: Vec<Vec<usize>> = chains
        .into_iter()
        .map(|mut c| {
            c.sort_unstable();
            for &q in &c {
                occupancy[q] += 1;
            }
            c
        })
        .collect();
    let mut state = EmbedState {
        logical,
        hw,
        base: 2.0,
        pressure: 0,
        occupancy,
        chains,
    };
    state.trim();
    let e = Embedding::new(state.chains);
    let (ok, _) = verify_embedding(logical, hw, &e);
    ok.then_some(e)
}

/// Finds a minor embedding of `logical` into `hw`: the best of `tries`
/// seeded heuristic attempts plus one native-template candidate, by fewest
/// physical qubits with ties to the earlier attempt. Instances whose edge
/// count exceeds the clique edge bound are rejected immediately.
pub fn find_embedding(
    logical: &InteractionGraph,
    hw: &HardwareGraph,
    seed: u64,
    tries: usize,
) -> Option<Embedding> {
    if logical.num_nodes() == 0 {
        return Some(Embedding::new(Vec::new()));
    }
    if logical.num_nodes() > hw.qubit_count() {
        return None;
    }
    let (_, edge_bound) = clique_bound(hw.spec());
    if logical.edges().len() > edge_bound {
        return None;
    }
    let base = hw.diameter_estimate();
    let mut candidates: Vec<(usize, usize, Embedding)> = (0..tries)
        .into_par_iter()
        .filter_map(|t| {
            try_embed(logical, hw, base, seed ^ t as u64).map(|e| (e.total_qubits(), t, e))
        })
        .collect();
    if let Some(e) = template_embedding(logical, hw) {
        candidates.push((e.total_qubits(), tries, e));
    }
    candidates.into_iter().min_by_key(|(q, t, _)| (*q, *t)).map(|(_, _, e)| e)
}

struct HeapEntry(f64, usize);

impl PartialEq for HeapEntry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for HeapEntry {}
impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        // min-heap by (cost, qubit)
        other.0.total_cmp(&self.0).then_with(|| other.1.cmp(&self.1))
    }
}

struct EmbedState<'a> {
    logical: &'a InteractionGraph,
    hw: &'a HardwareGraph,
    base: f64,
    /// Grows with each overlap-resolution pass so sharing a qubit eventually
    /// costs more than any detour.
    pressure: u32,
    occupancy: Vec<u32>,
    chains: Vec<Vec<usize>>,
}

impl EmbedState<'_> {
    fn weight(&self, q: usize) -> f64 {
        let exponent = (self.occupancy[q] * (self.pressure + 1)).min(120);
        self.base.powi(exponent as i32)
    }

    /// Weighted shortest paths from every qubit of `src`: distance 0 inside
    /// the chain, entering qubit q costs its occupancy weight.
    fn dijkstra(&self, src: &[usize]) -> (Vec<f64>, Vec<usize>) {
        let nq = self.hw.qubit_count();
        let mut dist = vec![f64::INFINITY; nq];
        let mut parent = vec![usize::MAX; nq];
        let mut heap = BinaryHeap::new();
        for &s in src {
            dist[s] = 0.0;
            heap.push(HeapEntry(0.0, s));
        }
        while let Some(HeapEntry(d, q)) = heap.pop() {
            if d > dist[q] {
                continue;
            }
            for &r in self.hw.neighbors(q) {
                let nd = d + self.weight(r);
                if nd < dist[r] {
                    dist[r] = nd;
                    parent[r] = q;
                    heap.push(HeapEntry(nd, r));
                }
            }
        }
        (dist, parent)
    }

    fn remove_chain(&mut self, u: usize) {
        for &q in &self.chains[u] {
            self.occupancy[q] -= 1;
        }
        self.chains[u].clear();
    }

    fn place_chain(&mut self, u: usize, rng: &mut ChaCha8Rng) {
        let embedded: Vec<usize> = self
            .logical
            .neighbors(u)
            .iter()
            .copied()
            .filter(|&v| !self.chains[v].is_empty())
            .collect();
        if embedded.is_empty() {
            let min_occ = *self.occupancy.iter().min().unwrap();
            let cands: Vec<usize> = (0..self.hw.qubit_count())
                .filter(|&q| self.occupancy[q] == min_occ)
                .collect();
            let q = cands[rng.random_range(0..cands.len())];
            self.chains[u] = vec![q];
            self.occupancy[q] += 1;
            return;
        }
        let searches: Vec<(Vec<f64>, Vec<usize>)> =
            embedded.iter().map(|&v| self.dijkstra(&self.chains[v])).collect();
        let k = embedded.len() as f64;
        // Each path cost counts the root's weight once; claiming the root
        // should count it exactly once in total. dist == 0 marks qubits
        // inside the source chain, which still cost their weight to claim.
        let mut root_cost = f64::INFINITY;
        let mut ties: Vec<usize> = Vec::new();
        for q in 0..self.hw.qubit_count() {
            let mut cost = -(k - 1.0) * self.weight(q);
            for (dist, _) in &searches {
                cost += if dist[q] == 0.0 { self.weight(q) } else { dist[q] };
            }
            if cost < root_cost {
                root_cost = cost;
                ties.clear();
                ties.push(q);
            } else if cost == root_cost {
                ties.push(q);
            }
        }
        let root = ties[rng.random_range(0..ties.len())];
        let mut chain = vec![root];
        for (dist, parent) in &searches {
            let mut q = root;
            // Walk back toward the neighbor chain; stop before entering it.
            while dist[q] > 0.0 {
                if !chain.contains(&q) {
                    chain.push(q);
                }
                q = parent[q];
                if q == usize::MAX {
                    break;
                }
            }
        }
        chain.sort_unstable();
        chain.dedup();
        for &q in &chain {
            self.occupancy[q] += 1;
        }
        self.chains[u] = chain;
    }

    fn overfull(&self) -> bool {
        self.occupancy.iter().any(|&o| o > 1)
    }

    /// (max occupancy, total excess occupancy): lexicographic progress metric
    /// for the overlap-resolution passes.
    fn congestion(&self) -> (u32, u32) {
        let max = self.occupancy.iter().copied().max().unwrap_or(0);
        let excess: u32 = self.occupancy.iter().map(|&o| o.saturating_sub(1)).sum();
        (max, excess)
    }

    fn total_qubits(&self) -> usize {
        self.chains.iter().map(|c| c.len()).sum()
    }

    /// Removes chain qubits not needed for connectivity or for any logical
    /// coupler, repeating per chain until a fixpoint.
    fn trim(&mut self) {
        for u in 0..self.chains.len() {
            loop {
                let mut removed = false;
                let chain = self.chains[u].clone();
                if chain.len() <= 1 {
                    break;
                }
                for &q in chain.iter().rev() {
                    let candidate: Vec<usize> =
                        self.chains[u].iter().copied().filter(|&x| x != q).collect();
                    if candidate.is_empty() || !chain_connected(self.hw, &candidate) {
                        continue;
                    }
                    let covers = self.logical.neighbors(u).iter().all(|&v| {
                        self.chains[v]
                            .iter()
                            .any(|&b| candidate.iter().any(|&a| self.hw.has_edge(a, b)))
                    });
                    if covers {
                        self.occupancy[q] -= 1;
                        self.chains[u] = candidate;
                        removed = true;
                        break;
                    }
                }
                if !removed {
                    break;
                }
            }
        }
    }
}

/// Initial embedding order: BFS from a random root per component with
/// shuffled expansion, so every node after the first lands next to an
/// already-embedded neighbor.
fn bfs_order(logical: &InteractionGraph, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let n = logical.num_nodes();
    let mut order = Vec::with_capacity(n);
    let mut seen = vec![false; n];
    let mut starts: Vec<usize> = (0..n).collect();
    starts.shuffle(rng);
    for &s in &starts {
        if seen[s] {
            continue;
        }
        seen[s] = true;
        let mut queue = std::collections::VecDeque::from([s]);
        while let Some(u) = queue.pop_front() {
            order.push(u);
            let mut nbrs = logical.neighbors(u).to_vec();
            nbrs.shuffle(rng);
            for v in nbrs {
                if !seen[v] {
                    seen[v] = true;
                    queue.push_back(v);
                }
            }
        }
    }
    order
}

fn try_embed(
    logical: &InteractionGraph,
    hw: &HardwareGraph,
    base: f64,
    seed: u64,
) -> Option<Embedding> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = logical.num_nodes();
    let mut state = EmbedState {
        logical,
        hw,
        base,
        pressure: 0,
        occupancy: vec![0; hw.qubit_count()],
        chains: vec![Vec::new(); n],
    };
    let mut order = bfs_order(logical, &mut rng);
    for &u in &order {
        state.place_chain(u, &mut rng);
    }

    // Resolve overlaps by re-embedding one node at a time under rising
    // congestion pressure, giving up after IMPROVEMENT_PASSES consecutive
    // passes without progress.
    let mut best = state.congestion();
    let mut stale = 0;
    while state.overfull() {
        state.pressure += 1;
        order.shuffle(&mut rng);
        for &u in &order {
            state.remove_chain(u);
            state.place_chain(u, &mut rng);
        }
        let now = state.congestion();
        if now < best {
            best = now;
            stale = 0;
        } else {
            stale += 1;
            if stale >= IMPROVEMENT_PASSES {
                return None;
            }
        }
    }

    // Shrink passes: re-route each chain in the now-uncongested graph and
    // keep the move only if it stays overlap-free.
    state.trim();
    for _ in 0..4 {
        let before = state.total_qubits();
        for &u in &order {
            let saved = state.chains[u].clone();
            state.remove_chain(u);
            state.place_chain(u, &mut rng);
            if state.overfull() || state.chains[u].len() > saved.len() {
                state.remove_chain(u);
                for &q in &saved {
                    state.occupancy[q] += 1;
                }
                state.chains[u] = saved;
            }
        }
        state.trim();
        if state.total_qubits() >= before {
            break;
        }
    }

    let embedding = Embedding::new(state.chains);
    let (ok, _) = verify_embedding(logical, hw, &embedding);
    ok.then_some(embedding)
}

/// J_chain = factor x |J|_M.
pub fn chain_strength(m: &IsingModel, factor: Coeff) -> Coeff {
    factor * m.j_max_abs()
}

/// Analog parameter ranges of the target hardware.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ParamRanges {
    pub h_min: Coeff,
    pub h_max: Coeff,
    pub j_min: Coeff,
    pub j_max: Coeff,
}

impl ParamRanges {
    /// h in [-2, 2], J in [-1, 1].
    pub fn standard() -> Self {
        ParamRanges {
            h_min: Coeff::from_integer(-2),
            h_max: Coeff::from_integer(2),
            j_min: Coeff::from_integer(-1),
            j_max: Coeff::from_integer(1),
        }
    }

    /// VFYC solver ranges: h in [-2, 2], J in [-2, 1].
    pub fn vfyc() -> Self {
        ParamRanges { j_min: Coeff::from_integer(-2), ..Self::standard() }
    }
}

/// Hardware-level Ising model produced by embedding a logical model.
#[derive(Debug, Clone)]
pub struct PhysicalIsing {
    h: BTreeMap<usize, Coeff>,
    j: BTreeMap<(usize, usize), Coeff>,
    offset: Coeff,
    /// Requested ferromagnetic chain magnitude, before scaling.
    pub chain_coupling: Coeff,
    /// Uniform factor applied to fit the analog ranges.
    pub scale: Coeff,
}

impl PhysicalIsing {
    pub fn h(&self) -> &BTreeMap<usize, Coeff> {
        &self.h
    }

    pub fn j(&self) -> &BTreeMap<(usize, usize), Coeff> {
        &self.j
    }

    pub fn offset(&self) -> Coeff {
        self.offset
    }

    pub fn energy(&self, spins: &[i8]) -> Result<Coeff, ChimeraError> {
        let need = self.max_qubit();
        if spins.len() <= need {
            return Err(ChimeraError::SampleTooShort { got: spins.len(), need });
        }
        if spins.iter().any(|&s| s != 1 && s != -1) {
            return Err(ChimeraError::BadSpin);
        }
        let mut e = self.offset;
        for (&q, &hq) in &self.h {
            e += hq * Coeff::from_integer(spins[q] as i64);
        }
        for (&(a, b), &jab) in &self.j {
            e += jab * Coeff::from_integer((spins[a] * spins[b]) as i64);
        }
        Ok(e)
    }

    fn max_qubit(&self) -> usize {
        let hm = self.h.keys().next_back().copied().unwrap_or(0);
        let jm = self.j.keys().next_back().map(|&(_, b)| b).unwrap_or(0);
        hm.max(jm)
    }

    pub fn export_text(&self) -> String {
        let mut out = String::new();
        writeln!(out, "format physical-ising").unwrap();
        writeln!(out, "chain_coupling {}", fmt_coeff(&self.chain_coupling)).unwrap();
        writeln!(out, "scale {}", fmt_coeff(&self.scale)).unwrap();
        for (&q, hq) in &self.h {
            writeln!(out, "h {q} {}", fmt_coeff(hq)).unwrap();
        }
        for (&(a, b), jab) in &self.j {
            writeln!(out, "j {a} {b} {}", fmt_coeff(jab)).unwrap();
        }
        writeln!(out, "offset {}", fmt_coeff(&self.offset)).unwrap();
        out
    }
}

/// Maps a logical Ising model onto hardware qubits through an embedding:
/// fields split evenly over chains, each logical coupling assigned to the
/// lowest-index hardware edge between the two chains, ferromagnetic chain
/// couplings on a spanning tree of each chain, then a uniform autoscale
/// c = min(1, range fits) applied to every coefficient.
pub fn embed_ising(
    m: &IsingModel,
    e: &Embedding,
    hw: &HardwareGraph,
    j_chain: Coeff,
    ranges: ParamRanges,
) -> Result<PhysicalIsing, ChimeraError> {
    if j_chain <= Coeff::zero() {
        return Err(ChimeraError::BadChainStrength);
    }
    let logical = m.interaction_graph();
    let (ok, violations) = verify_embedding(&logical, hw, e);
    if !ok {
        return Err(ChimeraError::InvalidEmbedding(violations.into_iter().next().unwrap()));
    }
    let mut h: BTreeMap<usize, Coeff> = BTreeMap::new();
    let mut j: BTreeMap<(usize, usize), Coeff> = BTreeMap::new();
    for (i, chain) in e.chains().iter().enumerate() {
        let share = m.h()[i] / Coeff::from_integer(chain.len() as i64);
        for &q in chain {
            h.insert(q, share);
        }
        for tree_edge in spanning_tree_edges(hw, chain) {
            j.insert(tree_edge, -j_chain);
        }
    }
    for (&(u, v), &coupling) in m.j() {
        let mut best: Option<(usize, usize)> = None;
        for &a in e.chain(u) {
            for &b in e.chain(v) {
                if hw.has_edge(a, b) {
                    let pair = (a.min(b), a.max(b));
                    if best.is_none_or(|cur| pair < cur) {
                        best = Some(pair);
                    }
                }
            }
        }
        j.insert(best.expect("verified embedding joins every coupled pair"), coupling);
    }

    let mut scale = Coeff::one();
    for value in h.values() {
        scale = scale.min(range_fit(*value, ranges.h_min, ranges.h_max));
    }
    for value in j.values() {
        scale = scale.min(range_fit(*value, ranges.j_min, ranges.j_max));
    }
    for value in h.values_mut() {
        *value *= scale;
    }
    for value in j.values_mut() {
        *value *= scale;
    }
    Ok(PhysicalIsing { h, j, offset: m.offset() * scale, chain_coupling: j_chain, scale })
}

fn range_fit(value: Coeff, lo: Coeff, hi: Coeff) -> Coeff {
    if value > Coeff::zero() {
        hi / value
    } else if value < Coeff::zero() {
        lo / value
    } else {
        Coeff::one()
    }
}

fn spanning_tree_edges(hw: &HardwareGraph, chain: &[usize]) -> Vec<(usize, usize)> {
    let mut edges = Vec::new();
    if chain.len() <= 1 {
        return edges;
    }
    let mut seen = vec![false; chain.len()];
    seen[0] = true;
    let mut queue = std::collections::VecDeque::from([chain[0]]);
    while let Some(q) = queue.pop_front() {
        for &r in hw.neighbors(q) {
            if let Ok(idx) = chain.binary_search(&r) {
                if !seen[idx] {
                    seen[idx] = true;
                    edges.push((q.min(r), q.max(r)));
                    queue.push_back(r);
                }
            }
        }
    }
    edges.sort_unstable();
    edges
}

/// Collapses a physical sample to logical spins by per-chain majority vote
/// (ties take the lowest-index qubit's value). A chain whose qubits disagree
/// counts as broken.
pub fn unembed(sample: &[i8], e: &Embedding) -> Result<(Vec<i8>, Coeff), ChimeraError> {
    let mut logical = Vec::with_capacity(e.num_logical());
    let mut broken = 0i64;
    for chain in e.chains() {
        let mut sum = 0i64;
        for &q in chain {
            let s = *sample
                .get(q)
                .ok_or(ChimeraError::SampleTooShort { got: sample.len(), need: q })?;
            if s != 1 && s != -1 {
                return Err(ChimeraError::BadSpin);
            }
            sum += s as i64;
        }
        let value = match sum.cmp(&0) {
            Ordering::Greater => 1,
            Ordering::Less => -1,
            Ordering::Equal => sample[chain[0]],
        };
        if sum.unsigned_abs() as usize != chain.len() {
            broken += 1;
        }
        logical.push(value);
    }
    let total = e.num_logical() as i64;
    let fraction = if total == 0 { Coeff::zero() } else { Coeff::new(broken, total) };
    Ok((logical, fraction))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reform::{build_bqm, to_ising, PenaltyConfig};
    use std::collections::BTreeMap as Map;

    #[test]
    fn chimera_counts() {
        let std = build_chimera(ChimeraSpec::standard());
        assert_eq!(std.qubit_count(), 2048);
        let cell = build_chimera(ChimeraSpec::new(1, 1, 4).unwrap());
        assert_eq!(cell.qubit_count(), 8);
        assert_eq!(cell.edge_count(), 16);
        // Two stacked cells: 2 x 16 intra-cell plus 4 vertical couplers.
        let twocell = build_chimera(ChimeraSpec::new(2, 1, 4).unwrap());
        assert_eq!(twocell.qubit_count(), 16);
        assert_eq!(twocell.edge_count(), 36);
    }

    #[test]
    fn chimera_adjacency_rules() {
        let spec = ChimeraSpec::new(2, 2, 4).unwrap();
        let hw = build_chimera(spec);
        assert!(hw.has_edge(spec.index(0, 0, 0, 0), spec.index(0, 0, 1, 3)));
        assert!(!hw.has_edge(spec.index(0, 0, 0, 0), spec.index(0, 0, 0, 1)));
        assert!(hw.has_edge(spec.index(0, 0, 0, 2), spec.index(1, 0, 0, 2)));
        assert!(!hw.has_edge(spec.index(0, 0, 0, 2), spec.index(1, 0, 0, 3)));
        assert!(hw.has_edge(spec.index(0, 0, 1, 1), spec.index(0, 1, 1, 1)));
    }

    #[test]
    fn clique_bounds() {
        assert_eq!(clique_bound(ChimeraSpec::standard()), (65, 2080));
        assert_eq!(clique_bound(ChimeraSpec::new(1, 1, 4).unwrap()), (5, 10));
    }

    #[test]
    fn k3_embeds_in_one_cell() {
        let logical = InteractionGraph::from_pairs(3, [(0, 1), (0, 2), (1, 2)]);
        let hw = build_chimera(ChimeraSpec::new(1, 1, 4).unwrap());
        let e = find_embedding(&logical, &hw, 1, 10).expect("K3 embeds in K44");
        let (ok, v) = verify_embedding(&logical, &hw, &e);
        assert!(ok, "{v:?}");
        assert!(e.total_qubits() <= 4);
    }

    #[test]
    fn oversized_interaction_graphs_are_rejected() {
        let hw = build_chimera(ChimeraSpec::new(1, 1, 2).unwrap());
        let k6: Vec<(usize, usize)> =
            (0..6).flat_map(|u| ((u + 1)..6).map(move |v| (u, v))).collect();
        let logical = InteractionGraph::from_pairs(6, k6);
        assert!(find_embedding(&logical, &hw, 0, 5).is_none());
    }

    #[test]
    fn verify_rejects_overlap_disconnection_missing_coupler() {
        let hw = build_chimera(ChimeraSpec::new(1, 1, 4).unwrap());
        let logical = InteractionGraph::from_pairs(2, [(0, 1)]);
        let overlap = Embedding::new(vec![vec![0], vec![0]]);
        let (ok, v) = verify_embedding(&logical, &hw, &overlap);
        assert!(!ok);
        assert!(v.iter().any(|x| matches!(x, EmbeddingViolation::Overlap { .. })));
        // qubits 0 and 1 share the vertical shore: not adjacent
        let disconnected = Embedding::new(vec![vec![0, 1], vec![4]]);
        let (ok, v) = verify_embedding(&logical, &hw, &disconnected);
        assert!(!ok);
        assert!(v.iter().any(|x| matches!(x, EmbeddingViolation::DisconnectedChain { .. })));
        let missing = Embedding::new(vec![vec![0], vec![1]]);
        let (ok, v) = verify_embedding(&logical, &hw, &missing);
        assert!(!ok);
        assert!(v.iter().any(|x| matches!(x, EmbeddingViolation::MissingCoupler { .. })));
    }

    #[test]
    fn chain_strength_from_bundled_models() {
        let g14 = crate::graph::Graph::parse_edge_list(crate::data::IEEE14).unwrap().graph;
        let ising = to_ising(&build_bqm(&g14, &PenaltyConfig::paper_default()).unwrap());
        assert_eq!(chain_strength(&ising, Coeff::new(3, 2)), Coeff::from_integer(12));
        let g9 = crate::graph::Graph::parse_edge_list(crate::data::IEEE9).unwrap().graph;
        let ising9 = to_ising(&build_bqm(&g9, &PenaltyConfig::paper_default()).unwrap());
        assert_eq!(chain_strength(&ising9, Coeff::new(3, 2)), Coeff::from_integer(3));
        let g118 = crate::graph::Graph::parse_edge_list(crate::data::IEEE118).unwrap().graph;
        let ising118 = to_ising(&build_bqm(&g118, &PenaltyConfig::paper_default()).unwrap());
        assert_eq!(chain_strength(&ising118, Coeff::one()), Coeff::from_integer(32));
    }

    fn one_var_ising(field: i64) -> IsingModel {
        // to_ising maps a linear term a to h = -a/2: use a = -2*field.
        let b = crate::reform::Bqm::from_parts(
            vec![crate::reform::VarId::Decision(0)],
            vec![Coeff::from_integer(-2 * field)],
            Map::new(),
            Coeff::from_integer(field),
        )
        .unwrap();
        to_ising(&b)
    }

    #[test]
    fn embed_single_variable_chain_of_two() {
        let hw = build_chimera(ChimeraSpec::new(1, 1, 4).unwrap());
        let m = one_var_ising(1);
        assert_eq!(m.h()[0], Coeff::from_integer(1));
        let e = Embedding::new(vec![vec![0, 4]]);
        let phys = embed_ising(&m, &e, &hw, Coeff::new(3, 2), ParamRanges::standard()).unwrap();
        assert_eq!(phys.scale, Coeff::new(2, 3));
        // pre-scale split was 1/2 each, chain coupling -3/2
        assert_eq!(phys.h()[&0], Coeff::new(1, 3));
        assert_eq!(phys.h()[&4], Coeff::new(1, 3));
        assert_eq!(phys.j()[&(0, 4)], Coeff::from_integer(-1));
    }

    #[test]
    fn in_range_model_is_unscaled() {
        let hw = build_chimera(ChimeraSpec::new(1, 1, 4).unwrap());
        let m = one_var_ising(1);
        let e = Embedding::new(vec![vec![0]]);
        let phys = embed_ising(&m, &e, &hw, Coeff::one(), ParamRanges::standard()).unwrap();
        assert_eq!(phys.scale, Coeff::one());
        assert_eq!(phys.h()[&0], Coeff::from_integer(1));
        assert!(phys.j().is_empty());
    }

    #[test]
    fn vfyc_range_allows_stronger_negative_j() {
        let hw = build_chimera(ChimeraSpec::new(1, 1, 4).unwrap());
        let m = one_var_ising(0);
        let e = Embedding::new(vec![vec![0, 4]]);
        let std =
            embed_ising(&m, &e, &hw, Coeff::from_integer(2), ParamRanges::standard()).unwrap();
        assert_eq!(std.scale, Coeff::new(1, 2));
        let vfyc = embed_ising(&m, &e, &hw, Coeff::from_integer(2), ParamRanges::vfyc()).unwrap();
        assert_eq!(vfyc.scale, Coeff::one());
    }

    #[test]
    fn unembed_majority_and_ties() {
        let e = Embedding::new(vec![vec![0, 1, 2], vec![3, 4]]);
        let (logical, broken) = unembed(&[1, 1, -1, -1, -1], &e).unwrap();
        assert_eq!(logical, vec![1, -1]);
        assert_eq!(broken, Coeff::new(1, 2));
        let (logical, broken) = unembed(&[1, 1, 1, 1, -1], &e).unwrap();
        assert_eq!(logical, vec![1, 1]); // tie in chain 1 -> lowest qubit value
        assert_eq!(broken, Coeff::new(1, 2));
        let (logical, broken) = unembed(&[-1, -1, -1, 1, 1], &e).unwrap();
        assert_eq!(logical, vec![-1, 1]);
        assert_eq!(broken, Coeff::zero());
    }

    #[test]
    fn unanimous_energy_matches_scaled_logical_plus_tree_constant() {
        let hw = build_chimera(ChimeraSpec::new(1, 1, 4).unwrap());
        let g = crate::graph::Graph::from_edges(2, [(0, 1)]).unwrap();
        let m = to_ising(&build_bqm(&g, &PenaltyConfig::paper_default()).unwrap());
        let e = Embedding::new(vec![vec![0, 4], vec![1]]);
        let j_chain = chain_strength(&m, Coeff::new(3, 2));
        let phys = embed_ising(&m, &e, &hw, j_chain, ParamRanges::standard()).unwrap();
        let tree_constant: Coeff = e
            .chains()
            .iter()
            .map(|c| -j_chain * Coeff::from_integer(c.len() as i64 - 1))
            .sum();
        for bits in 0..4u8 {
            let s0 = if bits & 1 == 0 { 1i8 } else { -1 };
            let s1 = if bits & 2 == 0 { 1i8 } else { -1 };
            let mut sample = vec![1i8; 8];
            sample[0] = s0;
            sample[4] = s0;
            sample[1] = s1;
            let physical = phys.energy(&sample).unwrap();
            let logical = m.energy(&[s0, s1]).unwrap();
            assert_eq!(physical, phys.scale * (logical + tree_constant));
            let (back, broken) = unembed(&sample, &e).unwrap();
            assert_eq!(back, vec![s0, s1]);
            assert_eq!(broken, Coeff::zero());
        }
    }

    #[test]
    fn fuzzed_embeddings_verify() {
        let hw = build_chimera(ChimeraSpec::new(3, 3, 2).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for case in 0..30u64 {
            let n = rng.random_range(1..=8);
            let mut edges = Vec::new();
            for u in 0..n {
                for v in (u + 1)..n {
                    if rng.random_bool(0.35) {
                        edges.push((u, v));
                    }
                }
            }
            let logical = InteractionGraph::from_pairs(n, edges);
            if let Some(e) = find_embedding(&logical, &hw, case, 5) {
                let (ok, v) = verify_embedding(&logical, &hw, &e);
                assert!(ok, "case {case}: {v:?}");
            }
        }
    }
}
