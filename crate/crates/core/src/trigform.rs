//! Closed-form objective of an 𝕏-ansatz in terms of per-edge cut sets and XOR kernels.
//!
//! For an edge `(a,b)`, `C_ab` holds the generators whose mask contains exactly one of
//! `a`, `b` (those that anticommute with `Z_a Z_b`). The kernel family `𝒦_ab` holds the
//! subsets of `C_ab` whose masks XOR to the empty set. With `c_j = cos 2θ_j`,
//! `s_j = sin 2θ_j`,
//!
//! ```text
//! J(θ) = Σ_ab w_ab Σ_{K ∈ 𝒦_ab} (−1)^{|K|/2} Π_{j ∈ C_ab∖K} c_j Π_{j ∈ K} s_j
//! ```
//!
//! Every kernel has even size, so the `i^{|K|}` phase is the real sign `(−1)^{|K|/2}`.
//! Enumerating `𝒦_ab` is a minimum-distance problem for a binary linear code, hence the
//! hard cap on `|C_ab|`.

use std::collections::HashMap;
use std::io::Write;

use crate::ansatz::Ansatz;
use crate::error::{Error, Result};
use crate::graph::{Edge, Mask, WeightedGraph};

/// Default cap on `|C_ab|` for kernel enumeration.
pub const KERNEL_CAP: usize = 20;

/// At or below this size kernels are found by a plain subset scan.
const SCAN_LIMIT: usize = 12;

#[derive(Debug, Clone, PartialEq)]
pub struct EdgeCutSet {
    pub edge: Edge,
    /// Generator indices, ascending.
    pub members: Vec<usize>,
}

impl EdgeCutSet {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

/// XOR-null subsets of one edge's cut set.
///
/// Each kernel is a selection bitmask over positions of [`EdgeCutSet::members`]; the
/// list is sorted ascending, so the empty kernel comes first.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelFamily {
    pub edge: Edge,
    pub selections: Vec<u64>,
}

impl KernelFamily {
    pub fn len(&self) -> usize {
        self.selections.len()
    }

    pub fn is_empty(&self) -> bool {
        self.selections.is_empty()
    }

    /// Generator indices making up kernel `i`.
    pub fn kernel_members(&self, cut_set: &EdgeCutSet, i: usize) -> Vec<usize> {
        let sel = self.selections[i];
        cut_set
            .members
            .iter()
            .enumerate()
            .filter(|(p, _)| (sel >> p) & 1 == 1)
            .map(|(_, &j)| j)
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StCoefficients {
    pub k: usize,
    pub s_k: f64,
    pub t_k: f64,
}

/// One [`EdgeCutSet`] per graph edge.
pub fn cut_sets(g: &WeightedGraph, ansatz: &Ansatz) -> Result<Vec<EdgeCutSet>> {
    let masks = ansatz.x_masks()?;
    check_graph(g, ansatz)?;
    Ok(g.edges()
        .iter()
        .map(|e| EdgeCutSet {
            edge: *e,
            members: masks
                .iter()
                .enumerate()
                .filter(|(_, &m)| e.is_cut_by(m))
                .map(|(j, _)| j)
                .collect(),
        })
        .collect())
}

fn check_graph(g: &WeightedGraph, ansatz: &Ansatz) -> Result<()> {
    if g.n_vertices() != ansatz.n_qubits() {
        return Err(Error::input(format!(
            "graph has {} vertices, ansatz acts on {} qubits",
            g.n_vertices(),
            ansatz.n_qubits()
        )));
    }
    Ok(())
}

/// Exhaustive kernel enumeration, refusing cut sets larger than `cap`.
pub fn kernel_sets(cut_set: &EdgeCutSet, masks: &[Mask], cap: usize) -> Result<KernelFamily> {
    let c = cut_set.len();
    if c > cap.min(62) {
        return Err(Error::Cap {
            what: "|C_ab|",
            value: c,
            cap,
            reason: "kernel enumeration is a minimum-distance code problem (NP-hard); cost 2^|C|",
        });
    }
    let vecs: Vec<Mask> = cut_set.members.iter().map(|&j| masks[j]).collect();
    let mut selections = if c <= SCAN_LIMIT {
        scan_kernels(&vecs)
    } else {
        meet_in_middle_kernels(&vecs)
    };
    selections.sort_unstable();
    Ok(KernelFamily {
        edge: cut_set.edge,
        selections,
    })
}

fn scan_kernels(vecs: &[Mask]) -> Vec<u64> {
    let c = vecs.len();
    (0u64..1 << c)
        .filter(|&sel| xor_of(vecs, sel, 0) == 0)
        .collect()
}

fn xor_of(vecs: &[Mask], sel: u64, offset: usize) -> Mask {
    let mut x = 0;
    let mut bits = sel;
    while bits != 0 {
        let p = bits.trailing_zeros() as usize;
        x ^= vecs[offset + p];
        bits &= bits - 1;
    }
    x
}

fn meet_in_middle_kernels(vecs: &[Mask]) -> Vec<u64> {
    let c = vecs.len();
    let h = c / 2;
    let mut left: HashMap<Mask, Vec<u64>> = HashMap::new();
    for sel in 0u64..1 << h {
        left.entry(xor_of(vecs, sel, 0)).or_default().push(sel);
    }
    let mut out = Vec::new();
    for sr in 0u64..1 << (c - h) {
        if let Some(ls) = left.get(&xor_of(vecs, sr, h)) {
            out.extend(ls.iter().map(|&sl| sl | (sr << h)));
        }
    }
    out
}

/// Per-edge cut sets and kernel families for one (graph, 𝕏-ansatz) pair.
#[derive(Debug, Clone)]
pub struct TrigDecomposition {
    n_params: usize,
    edges: Vec<(EdgeCutSet, KernelFamily)>,
}

impl TrigDecomposition {
    pub fn new(g: &WeightedGraph, ansatz: &Ansatz) -> Result<Self> {
        Self::with_cap(g, ansatz, KERNEL_CAP)
    }

    pub fn with_cap(g: &WeightedGraph, ansatz: &Ansatz, cap: usize) -> Result<Self> {
        let masks = ansatz.x_masks()?;
        let sets = cut_sets(g, ansatz)?;
        let mut edges = Vec::with_capacity(sets.len());
        for cs in sets {
            let kf = kernel_sets(&cs, &masks, cap)?;
            edges.push((cs, kf));
        }
        Ok(Self {
            n_params: masks.len(),
            edges,
        })
    }

    pub fn edges(&self) -> &[(EdgeCutSet, KernelFamily)] {
        &self.edges
    }

    pub fn n_params(&self) -> usize {
        self.n_params
    }

    fn check_theta(&self, theta: &[f64]) -> Result<()> {
        if theta.len() != self.n_params {
            return Err(Error::input(format!(
                "parameter vector has {} entries, ansatz has {}",
                theta.len(),
                self.n_params
            )));
        }
        Ok(())
    }

    /// Signed product for one kernel, skipping generator `skip` if given.
    fn kernel_term(cs: &EdgeCutSet, sel: u64, cos2: &[f64], sin2: &[f64], skip: Option<usize>) -> f64 {
        let size = sel.count_ones();
        debug_assert_eq!(size % 2, 0);
        let mut prod = if (size / 2) % 2 == 0 { 1.0 } else { -1.0 };
        for (p, &j) in cs.members.iter().enumerate() {
            if Some(j) == skip {
                continue;
            }
            prod *= if (sel >> p) & 1 == 1 { sin2[j] } else { cos2[j] };
        }
        prod
    }

    /// Closed-form `J(θ)`.
    pub fn objective(&self, theta: &[f64]) -> Result<f64> {
        self.check_theta(theta)?;
        let (cos2, sin2) = trig(theta);
        Ok(self
            .edges
            .iter()
            .map(|(cs, kf)| {
                let inner: f64 = kf
                    .selections
                    .iter()
                    .map(|&sel| Self::kernel_term(cs, sel, &cos2, &sin2, None))
                    .sum();
                cs.edge.w * inner
            })
            .sum())
    }

    /// `(S_k, T_k)` with `J = cos(2θ_k) S_k + sin(2θ_k) T_k + V_k`, none depending on `θ_k`.
    pub fn st_coefficients(&self, theta: &[f64], k: usize) -> Result<StCoefficients> {
        self.check_theta(theta)?;
        if k >= self.n_params {
            return Err(Error::input(format!("parameter index {k} out of range")));
        }
        let (cos2, sin2) = trig(theta);
        Ok(self.st_with(&cos2, &sin2, k))
    }

    fn st_with(&self, cos2: &[f64], sin2: &[f64], k: usize) -> StCoefficients {
        let mut s_k = 0.0;
        let mut t_k = 0.0;
        for (cs, kf) in &self.edges {
            let Some(pos) = cs.members.iter().position(|&j| j == k) else {
                continue;
            };
            let mut s_edge = 0.0;
            let mut t_edge = 0.0;
            for &sel in &kf.selections {
                let term = Self::kernel_term(cs, sel, cos2, sin2, Some(k));
                if (sel >> pos) & 1 == 1 {
                    // sin(2θ_k) is divided out but its factor of i still counts in the sign
                    t_edge += term;
                } else {
                    s_edge += term;
                }
            }
            s_k += cs.edge.w * s_edge;
            t_k += cs.edge.w * t_edge;
        }
        StCoefficients { k, s_k, t_k }
    }

    /// `∂_k J = 2[−sin(2θ_k) S_k + cos(2θ_k) T_k]` for all `k`.
    pub fn gradient(&self, theta: &[f64]) -> Result<Vec<f64>> {
        self.check_theta(theta)?;
        let (cos2, sin2) = trig(theta);
        Ok((0..self.n_params)
            .map(|k| {
                let st = self.st_with(&cos2, &sin2, k);
                2.0 * (-sin2[k] * st.s_k + cos2[k] * st.t_k)
            })
            .collect())
    }

    /// `∂²_kk J = −4[cos(2θ_k) S_k + sin(2θ_k) T_k]`.
    pub fn hessian_diagonal(&self, theta: &[f64]) -> Result<Vec<f64>> {
        self.check_theta(theta)?;
        let (cos2, sin2) = trig(theta);
        Ok((0..self.n_params)
            .map(|k| {
                let st = self.st_with(&cos2, &sin2, k);
                -4.0 * (cos2[k] * st.s_k + sin2[k] * st.t_k)
            })
            .collect())
    }

    /// `sin(2θ_k) S_k − cos(2θ_k) T_k`; zero in every component exactly at critical points.
    pub fn critical_condition_residual(&self, theta: &[f64]) -> Result<Vec<f64>> {
        self.check_theta(theta)?;
        let (cos2, sin2) = trig(theta);
        Ok((0..self.n_params)
            .map(|k| {
                let st = self.st_with(&cos2, &sin2, k);
                sin2[k] * st.s_k - cos2[k] * st.t_k
            })
            .collect())
    }

    /// Diagnostic CSV `a,b,w,|C|,|K|`, one row per edge.
    pub fn write_diagnostics<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "a,b,w,|C|,|K|")?;
        for (cs, kf) in &self.edges {
            writeln!(
                out,
                "{},{},{},{},{}",
                cs.edge.a,
                cs.edge.b,
                crate::graph::fmt_sig17(cs.edge.w),
                cs.len(),
                kf.len()
            )?;
        }
        Ok(())
    }
}

fn trig(theta: &[f64]) -> (Vec<f64>, Vec<f64>) {
    theta.iter().map(|t| ((2.0 * t).cos(), (2.0 * t).sin())).unzip()
}

/// Closed-form objective, building the decomposition on the fly.
pub fn objective_closed_form(g: &WeightedGraph, ansatz: &Ansatz, theta: &[f64]) -> Result<f64> {
    TrigDecomposition::new(g, ansatz)?.objective(theta)
}

pub fn st_coefficients(
    g: &WeightedGraph,
    ansatz: &Ansatz,
    theta: &[f64],
    k: usize,
) -> Result<StCoefficients> {
    TrigDecomposition::new(g, ansatz)?.st_coefficients(theta, k)
}

pub fn critical_condition_residual(
    g: &WeightedGraph,
    ansatz: &Ansatz,
    theta: &[f64],
) -> Result<Vec<f64>> {
    TrigDecomposition::new(g, ansatz)?.critical_condition_residual(theta)
}
