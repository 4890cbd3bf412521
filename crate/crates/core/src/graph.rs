//! Weighted graphs, cut arithmetic and Ising energies.
//!
//! Vertex subsets and cuts are `u64` bitmasks (bit `a` set iff vertex `a` is in the
//! subset), so graphs are limited to 64 vertices. The diagonal problem Hamiltonian
//! `H_p = Σ w_ab Z_a Z_b` is never materialized as a matrix: its eigenvalue on the basis
//! state `|z⟩` is [`WeightedGraph::energy`].

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::{BufRead, Write};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};

/// Vertex subset as a bitmask.
pub type Mask = u64;

pub const MAX_VERTICES: usize = 64;

/// Default vertex cap for exhaustive enumeration over cuts.
pub const BRUTE_FORCE_CAP: usize = 24;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub a: usize,
    pub b: usize,
    pub w: f64,
}

impl Edge {
    #[inline]
    pub fn mask(&self) -> Mask {
        (1 << self.a) | (1 << self.b)
    }

    /// True iff exactly one endpoint lies in `s`.
    #[inline]
    pub fn is_cut_by(&self, s: Mask) -> bool {
        ((s >> self.a) ^ (s >> self.b)) & 1 == 1
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeightedGraph {
    n: usize,
    edges: Vec<Edge>,
    total_weight: f64,
}

impl WeightedGraph {
    /// Builds a graph, rejecting self-loops, out-of-range endpoints, negative or
    /// non-finite weights and duplicate undirected edges.
    pub fn new(n: usize, edges: impl IntoIterator<Item = (usize, usize, f64)>) -> Result<Self> {
        if n == 0 || n > MAX_VERTICES {
            return Err(Error::input(format!("vertex count {n} outside 1..=64")));
        }
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        for (a, b, w) in edges {
            if a >= n || b >= n {
                return Err(Error::input(format!("edge ({a},{b}) out of range for n={n}")));
            }
            if a == b {
                return Err(Error::input(format!("self-loop at vertex {a}")));
            }
            if !w.is_finite() || w < 0.0 {
                return Err(Error::input(format!("edge ({a},{b}) has invalid weight {w}")));
            }
            if !seen.insert((a.min(b), a.max(b))) {
                return Err(Error::input(format!("duplicate edge ({a},{b})")));
            }
            out.push(Edge { a, b, w });
        }
        let total_weight = out.iter().map(|e| e.w).sum::<f64>();
        if !total_weight.is_finite() {
            return Err(Error::input("total weight is not finite"));
        }
        Ok(Self {
            n,
            edges: out,
            total_weight,
        })
    }

    pub fn n_vertices(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn total_weight(&self) -> f64 {
        self.total_weight
    }

    /// Mask with all `n` vertex bits set.
    pub fn full_mask(&self) -> Mask {
        full_mask(self.n)
    }

    /// Sum of weights of edges with exactly one endpoint in `s`.
    pub fn cut_value_mask(&self, s: Mask) -> f64 {
        self.edges
            .iter()
            .filter(|e| e.is_cut_by(s))
            .map(|e| e.w)
            .sum()
    }

    /// Eigenvalue of `H_p` on `|s⟩`: `Σ w (−1)^{s_a ⊕ s_b}`.
    ///
    /// Summation runs in edge order with per-edge terms that only depend on whether the
    /// edge is cut, so `energy(s) == energy(!s)` holds bit-exactly.
    pub fn energy(&self, s: Mask) -> f64 {
        self.edges
            .iter()
            .map(|e| if e.is_cut_by(s) { -e.w } else { e.w })
            .sum()
    }

    pub fn cut_value(&self, s: &CutAssignment) -> Result<f64> {
        self.check_len(s)?;
        Ok(self.cut_value_mask(s.bits))
    }

    pub fn ising_energy(&self, z: &CutAssignment) -> Result<f64> {
        self.check_len(z)?;
        Ok(self.energy(z.bits))
    }

    /// Diagonal of `H_p` over all `2^n` basis states.
    pub fn energy_table(&self) -> Vec<f64> {
        let dim = 1usize << self.n;
        (0..dim).map(|z| self.energy(z as Mask)).collect()
    }

    /// Adjacency lists `(neighbor, weight)`, in edge order.
    pub fn adjacency(&self) -> Vec<Vec<(usize, f64)>> {
        let mut adj = vec![Vec::new(); self.n];
        for e in &self.edges {
            adj[e.a].push((e.b, e.w));
            adj[e.b].push((e.a, e.w));
        }
        adj
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.n];
        for e in &self.edges {
            deg[e.a] += 1;
            deg[e.b] += 1;
        }
        deg
    }

    fn check_len(&self, s: &CutAssignment) -> Result<()> {
        if s.n != self.n {
            return Err(Error::input(format!(
                "cut has {} bits, graph has {} vertices",
                s.n, self.n
            )));
        }
        Ok(())
    }

    /// Reads the plain-text graph format: `n m` then `m` lines `a b w`.
    pub fn read_text<R: BufRead>(reader: R) -> Result<Self> {
        let mut lines = reader
            .lines()
            .map(|l| l.map_err(Error::from))
            .filter(|l| l.as_ref().map(|s| !s.trim().is_empty()).unwrap_or(true));
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("empty graph file".into()))??;
        let mut it = header.split_whitespace();
        let n: usize = parse_field(it.next(), "n")?;
        let m: usize = parse_field(it.next(), "m")?;
        let mut edges = Vec::with_capacity(m);
        for i in 0..m {
            let line = lines
                .next()
                .ok_or_else(|| Error::Parse(format!("expected {m} edges, found {i}")))??;
            let mut f = line.split_whitespace();
            let a: usize = parse_field(f.next(), "a")?;
            let b: usize = parse_field(f.next(), "b")?;
            let w: f64 = parse_field(f.next(), "w")?;
            edges.push((a, b, w));
        }
        if let Some(extra) = lines.next() {
            return Err(Error::Parse(format!("trailing content after edges: {:?}", extra?)));
        }
        WeightedGraph::new(n, edges)
    }

    pub fn write_text<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "{} {}", self.n, self.edges.len())?;
        for e in &self.edges {
            writeln!(out, "{} {} {}", e.a, e.b, fmt_sig17(e.w))?;
        }
        Ok(())
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let f = std::fs::File::open(path)?;
        Self::read_text(std::io::BufReader::new(f))
    }

    pub fn save(&self, path: &std::path::Path) -> Result<()> {
        let f = std::fs::File::create(path)?;
        self.write_text(std::io::BufWriter::new(f))
    }
}

fn parse_field<T: std::str::FromStr>(s: Option<&str>, name: &str) -> Result<T> {
    s.ok_or_else(|| Error::Parse(format!("missing field {name}")))?
        .parse()
        .map_err(|_| Error::Parse(format!("bad value for field {name}")))
}

/// Formats with 17 significant digits, fixed notation for ordinary magnitudes.
pub fn fmt_sig17(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    let exp = x.abs().log10().floor() as i32;
    if (-5..17).contains(&exp) {
        let decimals = (16 - exp).max(0) as usize;
        format!("{x:.decimals$}")
    } else {
        format!("{x:.16e}")
    }
}

#[inline]
pub fn full_mask(n: usize) -> Mask {
    if n >= 64 {
        u64::MAX
    } else {
        (1u64 << n) - 1
    }
}

/// An `n`-bit string; bit `a` is 1 iff vertex `a` belongs to `S_z`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CutAssignment {
    bits: Mask,
    n: usize,
}

impl CutAssignment {
    pub fn new(bits: Mask, n: usize) -> Result<Self> {
        if n == 0 || n > MAX_VERTICES {
            return Err(Error::input(format!("cut length {n} outside 1..=64")));
        }
        if bits & !full_mask(n) != 0 {
            return Err(Error::input(format!("bits {bits:#x} do not fit in {n} bits")));
        }
        Ok(Self { bits, n })
    }

    pub fn zeros(n: usize) -> Self {
        Self { bits: 0, n }
    }

    pub fn bits(&self) -> Mask {
        self.bits
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn contains(&self, v: usize) -> bool {
        (self.bits >> v) & 1 == 1
    }

    pub fn complement(&self) -> Self {
        Self {
            bits: !self.bits & full_mask(self.n),
            n: self.n,
        }
    }

    /// Symmetric difference with a vertex subset.
    pub fn flip(&self, mask: Mask) -> Self {
        Self {
            bits: (self.bits ^ mask) & full_mask(self.n),
            n: self.n,
        }
    }

    /// Representative with vertex 0 on the zero side.
    pub fn canonical(&self) -> Self {
        if self.bits & 1 == 1 {
            self.complement()
        } else {
            *self
        }
    }

    pub fn to_hex(&self) -> String {
        format!("{:x}", self.bits)
    }
}

impl fmt::Display for CutAssignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for v in (0..self.n).rev() {
            write!(f, "{}", if self.contains(v) { '1' } else { '0' })?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaxCut {
    pub value: f64,
    pub argmax: CutAssignment,
}

pub(crate) fn check_brute_force_cap(n: usize, cap: usize) -> Result<()> {
    if n > cap {
        return Err(Error::Cap {
            what: "n_vertices",
            value: n,
            cap,
            reason: "exhaustive enumeration visits 2^(n-1) cuts",
        });
    }
    Ok(())
}

/// Exact MaxCut by enumeration with the default cap.
pub fn max_cut_bruteforce(g: &WeightedGraph) -> Result<MaxCut> {
    max_cut_bruteforce_capped(g, BRUTE_FORCE_CAP)
}

/// Exact MaxCut over the `2^(n−1)` cuts with vertex 0 outside `S`.
///
/// Cuts are visited in Gray-code order with O(degree) incremental updates; every
/// candidate within a small slack of the running best is then re-evaluated from
/// scratch so the reported value is exact and ties resolve to the lowest bitstring.
pub fn max_cut_bruteforce_capped(g: &WeightedGraph, cap: usize) -> Result<MaxCut> {
    let n = g.n_vertices();
    check_brute_force_cap(n, cap.min(MAX_VERTICES - 1))?;
    if n == 1 {
        return Ok(MaxCut {
            value: 0.0,
            argmax: CutAssignment::zeros(1),
        });
    }
    let adj = g.adjacency();
    let free = n - 1;
    let count: u64 = 1 << free;
    let chunk_bits = free.min(14);
    let chunk_len: u64 = 1 << chunk_bits;
    let n_chunks = count / chunk_len;
    let slack = 1e-9 * (g.total_weight() + 1.0);

    let partials: Vec<(f64, Vec<Mask>)> = (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let start = c * chunk_len;
            let mut code = gray(start);
            let mut s = code << 1;
            let mut value = g.cut_value_mask(s);
            let mut best = value;
            let mut cands = vec![s];
            for m in start + 1..start + chunk_len {
                let next = gray(m);
                let v = (next ^ code).trailing_zeros() as usize + 1;
                code = next;
                let side = (s >> v) & 1;
                for &(u, w) in &adj[v] {
                    if (s >> u) & 1 == side {
                        value += w;
                    } else {
                        value -= w;
                    }
                }
                s ^= 1 << v;
                if value > best + slack {
                    best = value;
                    cands.retain(|_| false);
                    cands.push(s);
                } else if value >= best - slack {
                    best = best.max(value);
                    cands.push(s);
                }
            }
            (best, cands)
        })
        .collect();

    let global = partials.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
    let mut best: Option<(f64, Mask)> = None;
    for (b, cands) in &partials {
        if *b < global - 2.0 * slack {
            continue;
        }
        for &s in cands {
            let exact = g.cut_value_mask(s);
            best = match best {
                None => Some((exact, s)),
                Some((bv, bs)) if exact > bv || (exact == bv && s < bs) => Some((exact, s)),
                keep => keep,
            };
        }
    }
    let (value, bits) = best.expect("at least one cut enumerated");
    Ok(MaxCut {
        value,
        argmax: CutAssignment { bits, n },
    })
}

#[inline]
fn gray(m: u64) -> u64 {
    m ^ (m >> 1)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GraphKind {
    Complete,
    Regular(usize),
    PathChain,
    Cycle,
}

impl std::str::FromStr for GraphKind {
    type Err = Error;

    /// Accepts `complete`, `path`, `cycle`, and `kregular:K` / `regular:K`.
    fn from_str(s: &str) -> Result<Self> {
        let lower = s.to_ascii_lowercase();
        match lower.as_str() {
            "complete" => Ok(GraphKind::Complete),
            "path" | "chain" | "path-chain" => Ok(GraphKind::PathChain),
            "cycle" | "ring" => Ok(GraphKind::Cycle),
            _ => {
                let k = lower
                    .strip_prefix("kregular:")
                    .or_else(|| lower.strip_prefix("regular:"))
                    .ok_or_else(|| Error::input(format!("unknown graph kind {s:?}")))?;
                let k = k
                    .parse()
                    .map_err(|_| Error::input(format!("bad degree in {s:?}")))?;
                Ok(GraphKind::Regular(k))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GraphGenerator {
    pub kind: GraphKind,
    pub n: usize,
    pub weight_range: (f64, f64),
    pub seed: u64,
}

impl GraphGenerator {
    pub fn new(kind: GraphKind, n: usize, seed: u64) -> Self {
        Self {
            kind,
            n,
            weight_range: (0.0, 5.0),
            seed,
        }
    }

    pub fn with_weights(mut self, lo: f64, hi: f64) -> Self {
        self.weight_range = (lo, hi);
        self
    }
}

/// Draws a graph; weights are i.i.d. uniform on the closed `weight_range`.
pub fn generate(gen: &GraphGenerator) -> Result<WeightedGraph> {
    let (lo, hi) = gen.weight_range;
    if !(lo.is_finite() && hi.is_finite() && 0.0 <= lo && lo <= hi) {
        return Err(Error::input(format!("bad weight range [{lo}, {hi}]")));
    }
    let n = gen.n;
    let mut rng = ChaCha8Rng::seed_from_u64(gen.seed);
    let pairs: Vec<(usize, usize)> = match gen.kind {
        GraphKind::Complete => {
            if n < 1 {
                return Err(Error::input("complete graph needs n >= 1"));
            }
            (0..n)
                .flat_map(|a| (a + 1..n).map(move |b| (a, b)))
                .collect()
        }
        GraphKind::PathChain => {
            if n < 2 {
                return Err(Error::input("path needs n >= 2"));
            }
            (0..n - 1).map(|j| (j, j + 1)).collect()
        }
        GraphKind::Cycle => {
            if n < 3 {
                return Err(Error::input("cycle needs n >= 3"));
            }
            (0..n).map(|j| (j.min((j + 1) % n), j.max((j + 1) % n))).collect()
        }
        GraphKind::Regular(k) => {
            if k == 0 || k >= n || (k * n) % 2 != 0 {
                return Err(Error::input(format!(
                    "no simple {k}-regular graph on {n} vertices (need 0 < k < n, k*n even)"
                )));
            }
            random_regular_pairs(n, k, &mut rng)?
        }
    };
    let edges: Vec<_> = pairs
        .into_iter()
        .map(|(a, b)| (a, b, rng.gen_range(lo..=hi)))
        .collect();
    WeightedGraph::new(n, edges)
}

/// Stub pairing with incremental repair: pairs that would form a loop or a multi-edge
/// are returned to the pool and reshuffled; the attempt restarts if no valid pair remains.
fn random_regular_pairs(n: usize, k: usize, rng: &mut ChaCha8Rng) -> Result<Vec<(usize, usize)>> {
    const ATTEMPTS: usize = 10_000;
    'attempt: for _ in 0..ATTEMPTS {
        let mut edges: BTreeSet<(usize, usize)> = BTreeSet::new();
        let mut stubs: Vec<usize> = (0..n).flat_map(|v| std::iter::repeat(v).take(k)).collect();
        while !stubs.is_empty() {
            stubs.shuffle(rng);
            let mut leftover: BTreeMap<usize, usize> = BTreeMap::new();
            for pair in stubs.chunks_exact(2) {
                let (a, b) = (pair[0].min(pair[1]), pair[0].max(pair[1]));
                if a != b && !edges.contains(&(a, b)) {
                    edges.insert((a, b));
                } else {
                    *leftover.entry(a).or_default() += 1;
                    *leftover.entry(b).or_default() += 1;
                }
            }
            if leftover.is_empty() {
                break;
            }
            let nodes: Vec<usize> = leftover.keys().copied().collect();
            let suitable = nodes.iter().enumerate().any(|(i, &a)| {
                nodes[i + 1..]
                    .iter()
                    .any(|&b| !edges.contains(&(a.min(b), a.max(b))))
            });
            if !suitable {
                continue 'attempt;
            }
            stubs = leftover
                .into_iter()
                .flat_map(|(v, c)| std::iter::repeat(v).take(c))
                .collect();
        }
        return Ok(edges.into_iter().collect());
    }
    Err(Error::input(format!(
        "failed to sample a {k}-regular graph on {n} vertices"
    )))
}
