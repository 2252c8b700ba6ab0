//! Penalized binary-quadratic reformulation of the domination constraint and
//! its spin (Ising) form.
//!
//! The model minimizes `sum_i x_i` subject to `A x >= b`, with each row turned
//! into a squared penalty `alpha_i (sum_j A_ij x_j - b_i - sum_mu 2^mu y_imu)^2`
//! over binary surplus bits. All coefficients are exact rationals; floats
//! appear only at solver boundaries.

use std::collections::BTreeMap;
use std::fmt;
use std::fmt::Write as _;

use num_rational::Rational64;
use num_traits::{Signed, Zero};
use thiserror::Error;

use crate::graph::{Graph, GraphError, ObservabilityMatrix};

pub type Coeff = Rational64;

#[derive(Debug, Error)]
pub enum ReformError {
    #[error("row {node}: degree {degree} cannot satisfy rhs {rhs}; constraint is infeasible")]
    InfeasibleRow { node: usize, degree: usize, rhs: i64 },
    #[error("penalty weight must be positive, got {0}")]
    NonPositiveAlpha(Coeff),
    #[error("alpha vector has {got} entries for {want} nodes")]
    AlphaLength { got: usize, want: usize },
    #[error("assignment has {got} bits, model has {want} variables")]
    AssignmentLength { got: usize, want: usize },
    #[error("spin vector entries must be +1 or -1")]
    BadSpin,
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// Decision bit for a bus, or one bit of a row's binary-expanded surplus.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum VarId {
    Decision(usize),
    Slack { node: usize, bit: u32 },
}

impl fmt::Display for VarId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VarId::Decision(i) => write!(f, "x{}", i + 1),
            VarId::Slack { node, bit } => write!(f, "y{}_{}", node + 1, bit),
        }
    }
}

/// How many bits to allocate for a row's surplus variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlackMode {
    /// `ceil(log2(d+1-b))` with `ceil(log2(0)) = ceil(log2(1)) = 0`.
    /// Reproduces the reference ancilla counts, but cannot represent the
    /// full surplus range when `d+1-b` is a power of two.
    PaperExact,
    /// `ceil(log2(d+2-b))`: every surplus in `[0, d+1-b]` is representable.
    Safe,
}

impl SlackMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            SlackMode::PaperExact => "paper",
            SlackMode::Safe => "safe",
        }
    }
}

#[derive(Debug, Clone)]
enum AlphaWeights {
    Uniform(Coeff),
    PerNode(Vec<Coeff>),
}

/// Penalty weights and slack sizing for the reformulation.
#[derive(Debug, Clone)]
pub struct PenaltyConfig {
    alphas: AlphaWeights,
    pub slack_mode: SlackMode,
}

impl PenaltyConfig {
    /// The reference configuration: alpha_i = 2 with PaperExact sizing.
    pub fn paper_default() -> Self {
        PenaltyConfig {
            alphas: AlphaWeights::Uniform(Coeff::from_integer(2)),
            slack_mode: SlackMode::PaperExact,
        }
    }

    pub fn uniform(alpha: Coeff, slack_mode: SlackMode) -> Result<Self, ReformError> {
        if alpha <= Coeff::zero() {
            return Err(ReformError::NonPositiveAlpha(alpha));
        }
        Ok(PenaltyConfig { alphas: AlphaWeights::Uniform(alpha), slack_mode })
    }

    pub fn per_node(alphas: Vec<Coeff>, slack_mode: SlackMode) -> Result<Self, ReformError> {
        if let Some(bad) = alphas.iter().find(|a| **a <= Coeff::zero()) {
            return Err(ReformError::NonPositiveAlpha(*bad));
        }
        Ok(PenaltyConfig { alphas: AlphaWeights::PerNode(alphas), slack_mode })
    }

    pub fn alpha(&self, node: usize) -> Coeff {
        match &self.alphas {
            AlphaWeights::Uniform(a) => *a,
            AlphaWeights::PerNode(v) => v[node],
        }
    }

    pub fn describe(&self) -> String {
        let alpha = match &self.alphas {
            AlphaWeights::Uniform(a) => fmt_coeff(a),
            AlphaWeights::PerNode(_) => "per-node".to_string(),
        };
        format!("alpha={alpha} slack={}", self.slack_mode.as_str())
    }

    fn check_len(&self, n: usize) -> Result<(), ReformError> {
        if let AlphaWeights::PerNode(v) = &self.alphas {
            if v.len() != n {
                return Err(ReformError::AlphaLength { got: v.len(), want: n });
            }
        }
        Ok(())
    }
}

fn ceil_log2(x: i64) -> u32 {
    if x <= 1 {
        0
    } else {
        64 - ((x - 1) as u64).leading_zeros()
    }
}

/// Number of surplus bits for a row with degree `d` and rhs `b`.
pub fn slack_bits(degree: usize, rhs: i64, mode: SlackMode) -> Result<u32, ReformError> {
    let cap = degree as i64 + 1 - rhs;
    if cap < 0 {
        return Err(ReformError::InfeasibleRow { node: usize::MAX, degree, rhs });
    }
    Ok(match mode {
        SlackMode::PaperExact => ceil_log2(cap),
        SlackMode::Safe => ceil_log2(cap + 1),
    })
}

/// Binary quadratic model over decision and slack bits.
///
/// Variable order is all decisions ascending, then slacks by (node, bit).
/// Quadratic entries are kept only when the accumulated coefficient is
/// nonzero; `cancelled_pairs` counts pairs whose contributions summed to zero.
#[derive(Debug, Clone)]
pub struct Bqm {
    vars: Vec<VarId>,
    num_decisions: usize,
    linear: Vec<Coeff>,
    quadratic: BTreeMap<(usize, usize), Coeff>,
    offset: Coeff,
    cancelled_pairs: usize,
}

impl Bqm {
    /// Assembles a model from explicit parts. Variables must be sorted and
    /// unique; quadratic keys must be (u, v) with u < v. Zero-valued
    /// quadratic entries are dropped.
    pub fn from_parts(
        vars: Vec<VarId>,
        linear: Vec<Coeff>,
        quadratic: BTreeMap<(usize, usize), Coeff>,
        offset: Coeff,
    ) -> Result<Self, ReformError> {
        assert!(
            vars.windows(2).all(|w| w[0] < w[1]),
            "variables must be sorted and unique"
        );
        if linear.len() != vars.len() {
            return Err(ReformError::AssignmentLength { got: linear.len(), want: vars.len() });
        }
        let n = vars.len();
        assert!(
            quadratic.keys().all(|&(u, v)| u < v && v < n),
            "quadratic keys must be (u, v) with u < v < num_vars"
        );
        let mut quadratic = quadratic;
        quadratic.retain(|_, q| !q.is_zero());
        let num_decisions = vars
            .iter()
            .filter(|v| matches!(v, VarId::Decision(_)))
            .count();
        Ok(Bqm { vars, num_decisions, linear, quadratic, offset, cancelled_pairs: 0 })
    }

    pub fn num_vars(&self) -> usize {
        self.vars.len()
    }

    pub fn num_decisions(&self) -> usize {
        self.num_decisions
    }

    pub fn vars(&self) -> &[VarId] {
        &self.vars
    }

    pub fn var_index(&self, v: VarId) -> Option<usize> {
        self.vars.binary_search(&v).ok()
    }

    pub fn linear(&self) -> &[Coeff] {
        &self.linear
    }

    pub fn quadratic(&self) -> &BTreeMap<(usize, usize), Coeff> {
        &self.quadratic
    }

    pub fn offset(&self) -> Coeff {
        self.offset
    }

    pub fn cancelled_pairs(&self) -> usize {
        self.cancelled_pairs
    }

    /// Distinct unordered variable pairs with a nonzero quadratic coefficient.
    pub fn interaction_count(&self) -> usize {
        self.quadratic.len()
    }

    pub fn evaluate(&self, assignment: &[bool]) -> Result<Coeff, ReformError> {
        if assignment.len() != self.vars.len() {
            return Err(ReformError::AssignmentLength {
                got: assignment.len(),
                want: self.vars.len(),
            });
        }
        let mut e = self.offset;
        for (i, &a) in self.linear.iter().enumerate() {
            if assignment[i] {
                e += a;
            }
        }
        for (&(u, v), &q) in &self.quadratic {
            if assignment[u] && assignment[v] {
                e += q;
            }
        }
        Ok(e)
    }

    /// Structural interaction graph: one node per variable, one edge per
    /// nonzero quadratic pair.
    pub fn interaction_graph(&self) -> InteractionGraph {
        InteractionGraph::from_pairs(self.vars.len(), self.quadratic.keys().copied())
    }

    /// Deterministic text export: variables, linear, quadratic, offset.
    pub fn export_text(&self) -> String {
        let mut out = String::new();
        writeln!(out, "format bqm").unwrap();
        writeln!(out, "vars {}", self.vars.len()).unwrap();
        for (i, v) in self.vars.iter().enumerate() {
            writeln!(out, "v {i} {v}").unwrap();
        }
        for (i, a) in self.linear.iter().enumerate() {
            writeln!(out, "lin {i} {}", fmt_coeff(a)).unwrap();
        }
        for (&(u, v), q) in &self.quadratic {
            writeln!(out, "quad {u} {v} {}", fmt_coeff(q)).unwrap();
        }
        writeln!(out, "offset {}", fmt_coeff(&self.offset)).unwrap();
        out
    }
}

pub fn fmt_coeff(c: &Coeff) -> String {
    if c.is_integer() {
        c.numer().to_string()
    } else {
        format!("{}/{}", c.numer(), c.denom())
    }
}

/// Parses "p", "p/q", or a plain decimal like "1.5" into an exact rational.
pub fn parse_coeff(s: &str) -> Option<Coeff> {
    let s = s.trim();
    if let Some((p, q)) = s.split_once('/') {
        let numer: i64 = p.trim().parse().ok()?;
        let denom: i64 = q.trim().parse().ok()?;
        if denom == 0 {
            return None;
        }
        return Some(Coeff::new(numer, denom));
    }
    if let Some((int, frac)) = s.split_once('.') {
        let sign = if int.trim_start().starts_with('-') { -1 } else { 1 };
        let whole: i64 = if int.is_empty() || int == "-" { 0 } else { int.parse().ok()? };
        if frac.is_empty() {
            return Some(Coeff::from_integer(whole));
        }
        let digits: i64 = frac.parse().ok()?;
        if digits < 0 || frac.len() > 12 {
            return None;
        }
        let denom = 10i64.pow(frac.len() as u32);
        return Some(Coeff::from_integer(whole) + Coeff::new(sign * digits, denom));
    }
    s.parse::<i64>().ok().map(Coeff::from_integer)
}

struct BqmBuilder {
    vars: Vec<VarId>,
    num_decisions: usize,
    linear: Vec<Coeff>,
    quadratic: BTreeMap<(usize, usize), Coeff>,
    offset: Coeff,
}

impl BqmBuilder {
    fn new(vars: Vec<VarId>, num_decisions: usize) -> Self {
        let n = vars.len();
        BqmBuilder {
            vars,
            num_decisions,
            linear: vec![Coeff::zero(); n],
            quadratic: BTreeMap::new(),
            offset: Coeff::zero(),
        }
    }

    fn add_quadratic(&mut self, u: usize, v: usize, q: Coeff) {
        debug_assert_ne!(u, v);
        let key = (u.min(v), u.max(v));
        *self.quadratic.entry(key).or_insert_with(Coeff::zero) += q;
    }

    fn finish(mut self) -> Bqm {
        let before = self.quadratic.len();
        self.quadratic.retain(|_, q| !q.is_zero());
        Bqm {
            cancelled_pairs: before - self.quadratic.len(),
            vars: self.vars,
            num_decisions: self.num_decisions,
            linear: self.linear,
            quadratic: self.quadratic,
            offset: self.offset,
        }
    }
}

/// Builds the penalized model with all-ones rhs (full observability).
pub fn build_bqm(g: &Graph, cfg: &PenaltyConfig) -> Result<Bqm, ReformError> {
    build_bqm_with(&ObservabilityMatrix::from_graph(g), cfg)
}

/// Builds the penalized model for an explicit observability system.
pub fn build_bqm_with(obs: &ObservabilityMatrix, cfg: &PenaltyConfig) -> Result<Bqm, ReformError> {
    let n = obs.num_rows();
    cfg.check_len(n)?;
    let mut bits = Vec::with_capacity(n);
    for i in 0..n {
        let degree = obs.row(i).len() - 1;
        let m = slack_bits(degree, obs.rhs(i), cfg.slack_mode).map_err(|e| match e {
            ReformError::InfeasibleRow { degree, rhs, .. } => {
                ReformError::InfeasibleRow { node: i, degree, rhs }
            }
            other => other,
        })?;
        bits.push(m);
    }

    let mut vars: Vec<VarId> = (0..n).map(VarId::Decision).collect();
    for (i, &m) in bits.iter().enumerate() {
        for mu in 0..m {
            vars.push(VarId::Slack { node: i, bit: mu });
        }
    }
    vars.sort_unstable();
    let mut b = BqmBuilder::new(vars, n);

    // Cost: one unit per placed PMU.
    for i in 0..n {
        b.linear[i] += Coeff::from_integer(1);
    }

    // Penalty rows: alpha_i (sum_{j in N[i]} x_j - b_i - sum_mu 2^mu y_imu)^2.
    let mut slack_base = vec![0usize; n];
    let mut acc = n;
    for i in 0..n {
        slack_base[i] = acc;
        acc += bits[i] as usize;
    }
    for i in 0..n {
        let alpha = cfg.alpha(i);
        let rhs = Coeff::from_integer(obs.rhs(i));
        let mut terms: Vec<(usize, Coeff)> = obs
            .row(i)
            .iter()
            .map(|&j| (j, Coeff::from_integer(1)))
            .collect();
        for mu in 0..bits[i] {
            terms.push((slack_base[i] + mu as usize, -Coeff::from_integer(1i64 << mu)));
        }
        b.offset += alpha * rhs * rhs;
        for &(v, c) in &terms {
            // c^2 x + (-2 b c) x, using x^2 = x.
            b.linear[v] += alpha * c * (c - rhs - rhs);
        }
        for (a_idx, &(u, cu)) in terms.iter().enumerate() {
            for &(v, cv) in &terms[a_idx + 1..] {
                b.add_quadratic(u, v, Coeff::from_integer(2) * alpha * cu * cv);
            }
        }
    }
    Ok(b.finish())
}

/// Spin-variable form: E(s) = offset + sum h_i s_i + sum J_ij s_i s_j,
/// equivalent to the binary model under s = 1 - 2x.
#[derive(Debug, Clone)]
pub struct IsingModel {
    vars: Vec<VarId>,
    h: Vec<Coeff>,
    j: BTreeMap<(usize, usize), Coeff>,
    offset: Coeff,
}

impl IsingModel {
    /// Assembles a spin model from explicit parts; J keys must be (u, v)
    /// with u < v, and zero couplings are dropped.
    pub fn from_parts(
        vars: Vec<VarId>,
        h: Vec<Coeff>,
        j: BTreeMap<(usize, usize), Coeff>,
        offset: Coeff,
    ) -> Result<Self, ReformError> {
        assert!(vars.windows(2).all(|w| w[0] < w[1]), "variables must be sorted and unique");
        if h.len() != vars.len() {
            return Err(ReformError::AssignmentLength { got: h.len(), want: vars.len() });
        }
        let n = vars.len();
        assert!(
            j.keys().all(|&(u, v)| u < v && v < n),
            "coupling keys must be (u, v) with u < v < num_vars"
        );
        let mut j = j;
        j.retain(|_, c| !c.is_zero());
        Ok(IsingModel { vars, h, j, offset })
    }

    pub fn num_vars(&self) -> usize {
        self.vars.len()
    }

    pub fn vars(&self) -> &[VarId] {
        &self.vars
    }

    pub fn h(&self) -> &[Coeff] {
        &self.h
    }

    pub fn j(&self) -> &BTreeMap<(usize, usize), Coeff> {
        &self.j
    }

    pub fn offset(&self) -> Coeff {
        self.offset
    }

    /// |h|_M: largest field magnitude.
    pub fn h_max_abs(&self) -> Coeff {
        self.h.iter().map(|v| v.abs()).max().unwrap_or_else(Coeff::zero)
    }

    /// |J|_M: largest coupling magnitude.
    pub fn j_max_abs(&self) -> Coeff {
        self.j.values().map(|v| v.abs()).max().unwrap_or_else(Coeff::zero)
    }

    pub fn energy(&self, spins: &[i8]) -> Result<Coeff, ReformError> {
        if spins.len() != self.h.len() {
            return Err(ReformError::AssignmentLength { got: spins.len(), want: self.h.len() });
        }
        if spins.iter().any(|&s| s != 1 && s != -1) {
            return Err(ReformError::BadSpin);
        }
        let mut e = self.offset;
        for (i, &hi) in self.h.iter().enumerate() {
            e += hi * Coeff::from_integer(spins[i] as i64);
        }
        for (&(u, v), &jj) in &self.j {
            e += jj * Coeff::from_integer((spins[u] * spins[v]) as i64);
        }
        Ok(e)
    }

    /// Energy of a bit assignment through s = 1 - 2x.
    pub fn energy_of_bits(&self, bits: &[bool]) -> Result<Coeff, ReformError> {
        let spins: Vec<i8> = bits.iter().map(|&b| if b { -1 } else { 1 }).collect();
        self.energy(&spins)
    }

    pub fn interaction_graph(&self) -> InteractionGraph {
        InteractionGraph::from_pairs(self.vars.len(), self.j.keys().copied())
    }

    pub fn export_text(&self) -> String {
        let mut out = String::new();
        writeln!(out, "format ising").unwrap();
        writeln!(out, "vars {}", self.vars.len()).unwrap();
        for (i, v) in self.vars.iter().enumerate() {
            writeln!(out, "v {i} {v}").unwrap();
        }
        for (i, a) in self.h.iter().enumerate() {
            writeln!(out, "h {i} {}", fmt_coeff(a)).unwrap();
        }
        for (&(u, v), q) in &self.j {
            writeln!(out, "j {u} {v} {}", fmt_coeff(q)).unwrap();
        }
        writeln!(out, "offset {}", fmt_coeff(&self.offset)).unwrap();
        out
    }
}

/// Exact binary-to-spin conversion. A linear term a*x contributes a/2 to the
/// offset and -a/2 to h; a quadratic term q*x_u*x_v contributes q/4 to the
/// offset, -q/4 to each field, and +q/4 to J_uv.
pub fn to_ising(b: &Bqm) -> IsingModel {
    let n = b.num_vars();
    let half = Coeff::new(1, 2);
    let quarter = Coeff::new(1, 4);
    let mut h = vec![Coeff::zero(); n];
    let mut offset = b.offset();
    for (i, &a) in b.linear().iter().enumerate() {
        offset += a * half;
        h[i] -= a * half;
    }
    let mut j = BTreeMap::new();
    for (&(u, v), &q) in b.quadratic() {
        offset += q * quarter;
        h[u] -= q * quarter;
        h[v] -= q * quarter;
        j.insert((u, v), q * quarter);
    }
    IsingModel { vars: b.vars().to_vec(), h, j, offset }
}

/// True iff the decision bits of `sample` satisfy A x >= b on the graph
/// (slack bits are ignored).
pub fn feasible(g: &Graph, sample: &[bool]) -> bool {
    let n = g.node_count();
    assert!(sample.len() >= n, "sample shorter than decision count");
    (0..n).all(|i| {
        let mut cover = i64::from(sample[i]);
        for &w in g.neighbors(i) {
            cover += i64::from(sample[w]);
        }
        cover >= 1
    })
}

/// Diverse feasible warm starts for the annealer: randomized-greedy covers,
/// pruned of redundant members in random order, with every slack bit set to
/// the row's exact surplus.
pub fn warm_starts(
    g: &Graph,
    cfg: &PenaltyConfig,
    count: usize,
    seed: u64,
) -> Result<Vec<Vec<bool>>, ReformError> {
    use rand::SeedableRng;
    let bqm = build_bqm(g, cfg)?;
    let n = g.node_count();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed ^ 0x77a7a);
    let mut starts = Vec::with_capacity(count);
    for _ in 0..count {
        let cover = crate::graph::greedy_dominating_seeded(g, &mut rng);
        let cover = crate::graph::improve_dominating_seeded(g, &cover, &mut rng);
        let mut bits = vec![false; bqm.num_vars()];
        for v in cover.iter() {
            bits[v] = true;
        }
        for (pos, var) in bqm.vars().iter().enumerate().skip(n) {
            let VarId::Slack { node, bit } = *var else { continue };
            let surplus: i64 = g
                .closed_neighborhood(node)
                .iter()
                .map(|&j| i64::from(bits[j]))
                .sum::<i64>()
                - 1;
            let m = slack_bits(g.degree(node), 1, cfg.slack_mode)?;
            let y = surplus.clamp(0, (1i64 << m) - 1);
            bits[pos] = y >> bit & 1 == 1;
        }
        starts.push(bits);
    }
    Ok(starts)
}

/// Resource statistics for the reformulation of one test system.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ReformStats {
    pub buses: usize,
    pub branches: usize,
    pub ancillas: usize,
    pub interactions: usize,
    /// Pairs whose quadratic contributions summed to exactly zero.
    pub cancelled: usize,
}

pub fn reform_stats(g: &Graph, cfg: &PenaltyConfig) -> Result<ReformStats, ReformError> {
    let bqm = build_bqm(g, cfg)?;
    Ok(ReformStats {
        buses: g.node_count(),
        branches: g.edge_count(),
        ancillas: bqm.num_vars() - bqm.num_decisions(),
        interactions: bqm.interaction_count(),
        cancelled: bqm.cancelled_pairs(),
    })
}

/// Undirected interaction structure used by the embedder.
#[derive(Debug, Clone)]
pub struct InteractionGraph {
    n: usize,
    edges: Vec<(usize, usize)>,
    adj: Vec<Vec<usize>>,
}

impl InteractionGraph {
    pub fn from_pairs(n: usize, pairs: impl IntoIterator<Item = (usize, usize)>) -> Self {
        let mut edges: Vec<(usize, usize)> = pairs
            .into_iter()
            .filter(|&(u, v)| u != v)
            .map(|(u, v)| (u.min(v), u.max(v)))
            .collect();
        edges.sort_unstable();
        edges.dedup();
        let mut adj = vec![Vec::new(); n];
        for &(u, v) in &edges {
            assert!(v < n, "interaction endpoint out of range");
            adj[u].push(v);
            adj[v].push(u);
        }
        for a in &mut adj {
            a.sort_unstable();
        }
        InteractionGraph { n, edges, adj }
    }

    pub fn num_nodes(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adj[v]
    }
}
