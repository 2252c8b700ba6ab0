//! Classical ground-state solvers: single-flip Metropolis simulated annealing
//! and exhaustive oracles.

use std::fmt::Write as _;
use std::time::{Duration, Instant};

use num_traits::ToPrimitive;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::graph::{Graph, NodeSet};
use crate::reform::{slack_bits, Bqm, Coeff, PenaltyConfig, ReformError};

#[derive(Debug, Error)]
pub enum SaError {
    #[error("{got} variables exceeds the exhaustive guard of {guard}")]
    TooManyVariables { got: usize, guard: usize },
    #[error("beta schedule must satisfy 0 < hot < cold, got hot={hot} cold={cold}")]
    BadBetaSchedule { hot: f64, cold: f64 },
    #[error("num_reads and sweeps_per_read must be positive")]
    EmptyBudget,
    #[error(transparent)]
    Reform(#[from] ReformError),
}

/// Inverse-temperature schedule for one read.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BetaSchedule {
    /// Estimate hot/cold from a pre-pass over local energy deltas: hottest
    /// acceptance ratio near 0.8, coldest near 1e-4.
    Auto,
    Geometric { hot: f64, cold: f64 },
}

#[derive(Debug, Clone)]
pub struct SaParams {
    pub num_reads: usize,
    pub sweeps_per_read: usize,
    pub beta: BetaSchedule,
    pub seed: u64,
}

impl SaParams {
    pub fn new(num_reads: usize, sweeps_per_read: usize, seed: u64) -> Self {
        SaParams { num_reads, sweeps_per_read, beta: BetaSchedule::Auto, seed }
    }

    fn describe(&self) -> String {
        let beta = match self.beta {
            BetaSchedule::Auto => "auto".to_string(),
            BetaSchedule::Geometric { hot, cold } => format!("{hot}..{cold}"),
        };
        format!(
            "reads={} sweeps={} beta={} seed={}",
            self.num_reads, self.sweeps_per_read, beta, self.seed
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SampleRecord {
    pub assignment: Vec<bool>,
    pub energy: Coeff,
    pub multiplicity: u32,
}

#[derive(Debug, Clone)]
pub struct SampleMeta {
    pub instance_hash: u64,
    pub params: String,
    /// Wall time; excluded from the canonical export so identical inputs
    /// produce byte-identical documents.
    pub elapsed: Duration,
}

/// Measured samples sorted ascending by (energy, assignment); identical
/// assignments are merged into one record with a multiplicity.
#[derive(Debug, Clone)]
pub struct SampleSet {
    records: Vec<SampleRecord>,
    meta: SampleMeta,
}

impl SampleSet {
    pub fn from_records(
        raw: impl IntoIterator<Item = (Vec<bool>, Coeff)>,
        meta: SampleMeta,
    ) -> Self {
        let mut pairs: Vec<(Coeff, Vec<bool>)> =
            raw.into_iter().map(|(a, e)| (e, a)).collect();
        pairs.sort();
        let mut records: Vec<SampleRecord> = Vec::new();
        for (energy, assignment) in pairs {
            match records.last_mut() {
                Some(last) if last.energy == energy && last.assignment == assignment => {
                    last.multiplicity += 1;
                }
                _ => records.push(SampleRecord { assignment, energy, multiplicity: 1 }),
            }
        }
        SampleSet { records, meta }
    }

    pub fn records(&self) -> &[SampleRecord] {
        &self.records
    }

    pub fn meta(&self) -> &SampleMeta {
        &self.meta
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Lowest-energy record, if any samples were taken.
    pub fn best(&self) -> Option<&SampleRecord> {
        self.records.first()
    }

    pub fn export_text(&self) -> String {
        let mut out = String::new();
        writeln!(out, "format samples").unwrap();
        writeln!(out, "instance {:016x}", self.meta.instance_hash).unwrap();
        writeln!(out, "params {}", self.meta.params).unwrap();
        writeln!(out, "count {}", self.records.len()).unwrap();
        for r in &self.records {
            let bits: String =
                r.assignment.iter().map(|&b| if b { '1' } else { '0' }).collect();
            writeln!(
                out,
                "s {} {} {}",
                r.multiplicity,
                crate::reform::fmt_coeff(&r.energy),
                bits
            )
            .unwrap();
        }
        out
    }
}

pub(crate) fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

struct FlatBqm {
    linear: Vec<f64>,
    neighbors: Vec<Vec<(usize, f64)>>,
}

impl FlatBqm {
    fn new(b: &Bqm) -> Self {
        let n = b.num_vars();
        let linear: Vec<f64> = b.linear().iter().map(|c| c.to_f64().unwrap()).collect();
        let mut neighbors = vec![Vec::new(); n];
        for (&(u, v), q) in b.quadratic() {
            let qf = q.to_f64().unwrap();
            neighbors[u].push((v, qf));
            neighbors[v].push((u, qf));
        }
        FlatBqm { linear, neighbors }
    }

    fn fields(&self, x: &[bool]) -> Vec<f64> {
        let mut f = self.linear.clone();
        for (v, nbrs) in self.neighbors.iter().enumerate() {
            if x[v] {
                for &(u, q) in nbrs {
                    f[u] += q;
                }
            }
        }
        f
    }
}

const PROBE_SALT: u64 = 0x9e3779b97f4a7c15;

fn estimate_betas(flat: &FlatBqm, seed: u64) -> (f64, f64) {
    let n = flat.linear.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ PROBE_SALT);
    let mut sum = 0.0f64;
    let mut count = 0usize;
    let mut min_pos = f64::INFINITY;
    for _ in 0..16 {
        let x: Vec<bool> = (0..n).map(|_| rng.random()).collect();
        let fields = flat.fields(&x);
        for v in 0..n {
            let de = if x[v] { -fields[v] } else { fields[v] };
            if de > 0.0 {
                sum += de;
                count += 1;
                min_pos = min_pos.min(de);
            }
        }
    }
    if count == 0 {
        return (0.1, 10.0);
    }
    let mean = sum / count as f64;
    // exp(-hot * mean) = 0.8, exp(-cold * min_pos) = 1e-4
    let hot = -(0.8f64.ln()) / mean;
    let cold = -(1e-4f64.ln()) / min_pos;
    if hot < cold {
        (hot, cold)
    } else {
        (cold / 100.0, cold)
    }
}

/// Independent restarts of single-bit-flip Metropolis under a geometric
/// inverse-temperature ramp. Reads run in parallel; read `r` draws from a
/// stream seeded with `seed ^ r`, so parallel and serial runs agree.
pub fn simulated_anneal(b: &Bqm, p: &SaParams) -> Result<SampleSet, SaError> {
    simulated_anneal_from(b, p, &[])
}

/// Like [`simulated_anneal`], but read `r` starts from `starts[r % len]`
/// instead of a random assignment when starts are provided.
pub fn simulated_anneal_from(
    b: &Bqm,
    p: &SaParams,
    starts: &[Vec<bool>],
) -> Result<SampleSet, SaError> {
    if p.num_reads == 0 || p.sweeps_per_read == 0 {
        return Err(SaError::EmptyBudget);
    }
    if let Some(bad) = starts.iter().find(|s| s.len() != b.num_vars()) {
        return Err(SaError::Reform(ReformError::AssignmentLength {
            got: bad.len(),
            want: b.num_vars(),
        }));
    }
    let start = Instant::now();
    let flat = FlatBqm::new(b);
    let (hot, cold) = match p.beta {
        BetaSchedule::Auto => estimate_betas(&flat, p.seed),
        BetaSchedule::Geometric { hot, cold } => (hot, cold),
    };
    if !(hot > 0.0 && cold > 0.0 && hot < cold) {
        return Err(SaError::BadBetaSchedule { hot, cold });
    }
    let n = b.num_vars();
    let sweeps = p.sweeps_per_read;
    let ratio = cold / hot;

    let raw: Vec<(Vec<bool>, Coeff)> = (0..p.num_reads)
        .into_par_iter()
        .map(|read| {
            let mut rng = ChaCha8Rng::seed_from_u64(p.seed ^ read as u64);
            let mut x: Vec<bool> = if starts.is_empty() {
                (0..n).map(|_| rng.random()).collect()
            } else {
                starts[read % starts.len()].clone()
            };
            let mut fields = flat.fields(&x);
            let mut energy = 0.0f64; // relative to the starting state
            let mut best_energy = 0.0f64;
            let mut best = x.clone();
            for sweep in 0..sweeps {
                let beta = if sweeps == 1 {
                    cold
                } else {
                    hot * ratio.powf(sweep as f64 / (sweeps - 1) as f64)
                };
                for v in 0..n {
                    let de = if x[v] { -fields[v] } else { fields[v] };
                    if de <= 0.0 || rng.random::<f64>() < (-beta * de).exp() {
                        let delta = if x[v] { -1.0 } else { 1.0 };
                        x[v] = !x[v];
                        energy += de;
                        for &(u, q) in &flat.neighbors[v] {
                            fields[u] += delta * q;
                        }
                        if energy < best_energy {
                            best_energy = energy;
                            best.copy_from_slice(&x);
                        }
                    }
                }
            }
            let exact = b.evaluate(&best).expect("assignment length matches model");
            (best, exact)
        })
        .collect();

    let meta = SampleMeta {
        instance_hash: fnv1a(b.export_text().as_bytes()),
        params: format!("{} starts={}", p.describe(), starts.len()),
        elapsed: start.elapsed(),
    };
    Ok(SampleSet::from_records(raw, meta))
}

pub const BRUTE_FORCE_GUARD: usize = 26;

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

fn lcm(a: i64, b: i64) -> i64 {
    a / gcd(a, b) * b
}

fn common_scale<'a>(coeffs: impl Iterator<Item = &'a Coeff>) -> i64 {
    coeffs.fold(1i64, |acc, c| lcm(acc, *c.denom()))
}

fn scaled(c: &Coeff, scale: i64) -> i128 {
    (*c.numer() as i128) * ((scale / *c.denom()) as i128)
}

/// Exhaustive gray-code enumeration of every assignment. Returns the exact
/// ground energy and all assignments attaining it, lexicographically sorted.
pub fn brute_force_ground(
    b: &Bqm,
    max_vars: usize,
) -> Result<(Coeff, Vec<Vec<bool>>), SaError> {
    let n = b.num_vars();
    if n > max_vars {
        return Err(SaError::TooManyVariables { got: n, guard: max_vars });
    }
    let scale = common_scale(
        b.linear()
            .iter()
            .chain(b.quadratic().values())
            .chain(std::iter::once(&b.offset())),
    );
    let linear: Vec<i128> = b.linear().iter().map(|c| scaled(c, scale)).collect();
    let mut neighbors: Vec<Vec<(usize, i128)>> = vec![Vec::new(); n];
    for (&(u, v), q) in b.quadratic() {
        let qs = scaled(q, scale);
        neighbors[u].push((v, qs));
        neighbors[v].push((u, qs));
    }
    let mut x = vec![false; n];
    let mut fields = linear.clone();
    let mut energy: i128 = scaled(&b.offset(), scale);
    let mut best = energy;
    let mut grounds: Vec<Vec<bool>> = vec![x.clone()];
    for k in 1u64..(1u64 << n) {
        let v = k.trailing_zeros() as usize;
        let de = if x[v] { -fields[v] } else { fields[v] };
        let delta: i128 = if x[v] { -1 } else { 1 };
        x[v] = !x[v];
        energy += de;
        for &(u, q) in &neighbors[v] {
            fields[u] += delta * q;
        }
        if energy < best {
            best = energy;
            grounds.clear();
            grounds.push(x.clone());
        } else if energy == best {
            grounds.push(x.clone());
        }
    }
    grounds.sort();
    let energy = Coeff::new(
        i64::try_from(best).expect("scaled ground energy fits i64"),
        scale,
    );
    Ok((energy, grounds))
}

/// Exact ground states of the penalized model by enumerating decision bits
/// only: for fixed decisions the penalty separates per row, and each row's
/// surplus has a unique optimal value, so the reduction is lossless. Returns
/// full assignments (decision bits plus the optimal slack bits).
pub fn row_reduced_ground(
    g: &Graph,
    cfg: &PenaltyConfig,
    max_decisions: usize,
) -> Result<(Coeff, Vec<Vec<bool>>), SaError> {
    let n = g.node_count();
    if n > max_decisions {
        return Err(SaError::TooManyVariables { got: n, guard: max_decisions });
    }
    assert!(n <= 63, "decision enumeration uses 64-bit masks");
    let mut bits = Vec::with_capacity(n);
    for i in 0..n {
        bits.push(slack_bits(g.degree(i), 1, cfg.slack_mode).map_err(SaError::Reform)?);
    }
    let ymax: Vec<i64> = bits.iter().map(|&m| (1i64 << m) - 1).collect();
    let closed: Vec<u64> = (0..n)
        .map(|v| {
            let mut m = 1u64 << v;
            for &w in g.neighbors(v) {
                m |= 1u64 << w;
            }
            m
        })
        .collect();
    let rows_of: Vec<Vec<usize>> = (0..n)
        .map(|v| (0..n).filter(|&i| closed[i] >> v & 1 == 1).collect())
        .collect();
    let alphas: Vec<Coeff> = (0..n).map(|i| cfg.alpha(i)).collect();
    let scale = common_scale(alphas.iter());
    let alpha_scaled: Vec<i128> = alphas.iter().map(|a| scaled(a, scale)).collect();

    let dist = |r: i64, cap: i64| -> i64 {
        if r < 0 {
            -r
        } else if r > cap {
            r - cap
        } else {
            0
        }
    };

    // Gray-code walk over decision masks with incremental row surpluses.
    let mut r: Vec<i64> = (0..n).map(|_| -1i64).collect(); // all-zeros state: r_i = -b_i
    let mut pen: i128 = (0..n)
        .map(|i| alpha_scaled[i] * ((dist(r[i], ymax[i]) as i128).pow(2)))
        .sum();
    let mut ones: i128 = 0;
    let mut x_mask = 0u64;
    let mut best = ones * scale as i128 + pen;
    let mut best_masks: Vec<u64> = vec![0];
    for k in 1u64..(1u64 << n) {
        let v = k.trailing_zeros() as usize;
        let on = x_mask >> v & 1 == 0;
        let dr = if on { 1 } else { -1 };
        for &i in &rows_of[v] {
            let old = dist(r[i], ymax[i]) as i128;
            r[i] += dr;
            let new = dist(r[i], ymax[i]) as i128;
            pen += alpha_scaled[i] * (new * new - old * old);
        }
        ones += dr as i128;
        x_mask ^= 1u64 << v;
        let e = ones * scale as i128 + pen;
        if e < best {
            best = e;
            best_masks.clear();
            best_masks.push(x_mask);
        } else if e == best {
            best_masks.push(x_mask);
        }
    }

    let total_slack: usize = bits.iter().map(|&m| m as usize).sum();
    let mut assignments = Vec::with_capacity(best_masks.len());
    for mask in best_masks {
        let mut a = vec![false; n + total_slack];
        for (v, bit) in a.iter_mut().enumerate().take(n) {
            *bit = mask >> v & 1 == 1;
        }
        let mut pos = n;
        for i in 0..n {
            let surplus = (closed[i] & mask).count_ones() as i64 - 1;
            let y = surplus.clamp(0, ymax[i]);
            for mu in 0..bits[i] {
                a[pos] = y >> mu & 1 == 1;
                pos += 1;
            }
        }
        assignments.push(a);
    }
    assignments.sort();
    let energy = Coeff::new(i64::try_from(best).expect("ground energy fits i64"), scale);
    Ok((energy, assignments))
}

/// Lowest-PMU-count feasible sample: filters by the observability constraint
/// on decision bits, then minimizes the placed-PMU count.
pub fn best_feasible(g: &Graph, s: &SampleSet) -> Option<(NodeSet, usize)> {
    let n = g.node_count();
    let mut best: Option<(usize, &[bool])> = None;
    for rec in s.records() {
        if !crate::reform::feasible(g, &rec.assignment) {
            continue;
        }
        let count = rec.assignment[..n].iter().filter(|&&b| b).count();
        let better = match best {
            None => true,
            Some((c, a)) => count < c || (count == c && rec.assignment[..n] < a[..n]),
        };
        if better {
            best = Some((count, &rec.assignment));
        }
    }
    best.map(|(count, a)| (NodeSet::from_bits(&a[..n]), count))
}
