//! Critical points of 𝕏-ansatz landscapes.
//!
//! At a parameter configuration preparing the basis state `|z⟩` the Hessian is diagonal
//! with entries `2(J{S_z ⊕ S_j} − J{S_z})`. A non-global cut is a local-minimum candidate
//! iff every entry is `≥ 0` and a local-maximum candidate iff every entry is `≤ 0`
//! (weak inequalities, so flat directions count toward candidacy).

use std::fmt;
use std::io::Write;

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;

use crate::ansatz::Ansatz;
use crate::error::{Error, Result};
use crate::graph::{check_brute_force_cap, CutAssignment, Mask, WeightedGraph, BRUTE_FORCE_CAP};
use crate::statevec::{self, GradientWorkspace, ProblemHamiltonian};
use crate::trigform::TrigDecomposition;

/// Absolute slack for energy comparisons, scaled by `1 + total_weight`.
pub const TIE_TOL: f64 = 1e-9;

pub(crate) fn tie_slack(g: &WeightedGraph) -> f64 {
    TIE_TOL * (1.0 + g.total_weight())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Classification {
    GlobalMin,
    GlobalMax,
    LocalMin,
    LocalMax,
    Saddle,
}

impl fmt::Display for Classification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Classification::GlobalMin => "global_min",
            Classification::GlobalMax => "global_max",
            Classification::LocalMin => "local_min",
            Classification::LocalMax => "local_max",
            Classification::Saddle => "saddle",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CriticalPointReport {
    pub cut: CutAssignment,
    pub j_value: f64,
    pub hessian_diag: Vec<f64>,
    pub classification: Classification,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct LandscapeSummary {
    pub global_min: usize,
    pub global_max: usize,
    pub local_min: usize,
    pub local_max: usize,
    pub saddle: usize,
    pub local_min_witnesses: Vec<CutAssignment>,
    pub local_max_witnesses: Vec<CutAssignment>,
}

impl LandscapeSummary {
    pub fn total(&self) -> usize {
        self.global_min + self.global_max + self.local_min + self.local_max + self.saddle
    }

    pub fn local_optima(&self) -> usize {
        self.local_min + self.local_max
    }

    fn add(&mut self, cut: CutAssignment, c: Classification) {
        match c {
            Classification::GlobalMin => self.global_min += 1,
            Classification::GlobalMax => self.global_max += 1,
            Classification::LocalMin => {
                self.local_min += 1;
                self.local_min_witnesses.push(cut);
            }
            Classification::LocalMax => {
                self.local_max += 1;
                self.local_max_witnesses.push(cut);
            }
            Classification::Saddle => self.saddle += 1,
        }
    }
}

/// `2·(E(z ⊕ S_j) − E(z))` for every ansatz element.
pub fn hessian_diag_at_eigenstate(
    g: &WeightedGraph,
    ansatz: &Ansatz,
    z: &CutAssignment,
) -> Result<Vec<f64>> {
    let masks = ansatz.x_masks()?;
    check_sizes(g, ansatz)?;
    if z.len() != g.n_vertices() {
        return Err(Error::input("cut length does not match graph"));
    }
    Ok(diag_for(g, &masks, z.bits()))
}

fn diag_for(g: &WeightedGraph, masks: &[Mask], z: Mask) -> Vec<f64> {
    let base = g.energy(z);
    masks.iter().map(|&m| 2.0 * (g.energy(z ^ m) - base)).collect()
}

fn check_sizes(g: &WeightedGraph, ansatz: &Ansatz) -> Result<()> {
    if g.n_vertices() != ansatz.n_qubits() {
        return Err(Error::input(format!(
            "graph has {} vertices, ansatz acts on {} qubits",
            g.n_vertices(),
            ansatz.n_qubits()
        )));
    }
    Ok(())
}

/// Parameter vector whose X-ansatz state is `|z⟩`: angle π/2 on a subset of elements
/// whose masks XOR to `z`, 0 elsewhere. `None` if `z` is not reachable by the ansatz.
pub fn eigenstate_parameters(ansatz: &Ansatz, z: Mask) -> Result<Option<Vec<f64>>> {
    let masks = ansatz.x_masks()?;
    // Gaussian elimination over GF(2), tracking which generators build each pivot row.
    let m = masks.len();
    let mut rows: Vec<(Mask, Vec<u64>)> = Vec::new();
    let words = m.div_ceil(64).max(1);
    for (j, &mask) in masks.iter().enumerate() {
        let mut v = mask;
        let mut combo = vec![0u64; words];
        combo[j / 64] |= 1 << (j % 64);
        for (pv, pc) in &rows {
            let pivot = 63 - pv.leading_zeros();
            if (v >> pivot) & 1 == 1 {
                v ^= pv;
                for (c, p) in combo.iter_mut().zip(pc) {
                    *c ^= p;
                }
            }
        }
        if v != 0 {
            rows.push((v, combo));
            rows.sort_by_key(|r| r.0.leading_zeros());
        }
    }
    let mut target = z;
    let mut pick = vec![0u64; words];
    for (pv, pc) in &rows {
        let pivot = 63 - pv.leading_zeros();
        if (target >> pivot) & 1 == 1 {
            target ^= pv;
            for (c, p) in pick.iter_mut().zip(pc) {
                *c ^= p;
            }
        }
    }
    if target != 0 {
        return Ok(None);
    }
    Ok(Some(
        (0..m)
            .map(|j| {
                if (pick[j / 64] >> (j % 64)) & 1 == 1 {
                    std::f64::consts::FRAC_PI_2
                } else {
                    0.0
                }
            })
            .collect(),
    ))
}

fn classify(
    energy: f64,
    diag: &[f64],
    e_min: f64,
    e_max: f64,
    slack: f64,
) -> Classification {
    if energy <= e_min + slack {
        Classification::GlobalMin
    } else if energy >= e_max - slack {
        Classification::GlobalMax
    } else if diag.iter().all(|&d| d >= -2.0 * slack) {
        Classification::LocalMin
    } else if diag.iter().all(|&d| d <= 2.0 * slack) {
        Classification::LocalMax
    } else {
        Classification::Saddle
    }
}

/// Classifies every cut with vertex 0 on the zero side.
pub fn classify_all_eigenstates(g: &WeightedGraph, ansatz: &Ansatz) -> Result<LandscapeSummary> {
    let mut summary = LandscapeSummary::default();
    for r in eigenstate_reports(g, ansatz)? {
        summary.add(r.cut, r.classification);
    }
    Ok(summary)
}

/// Per-cut reports in ascending bitstring order.
pub fn eigenstate_reports(g: &WeightedGraph, ansatz: &Ansatz) -> Result<Vec<CriticalPointReport>> {
    let masks = ansatz.x_masks()?;
    check_sizes(g, ansatz)?;
    let n = g.n_vertices();
    check_brute_force_cap(n, BRUTE_FORCE_CAP)?;
    let count: u64 = 1 << (n - 1);
    let energies: Vec<f64> = (0..count).into_par_iter().map(|i| g.energy(i << 1)).collect();
    let e_min = energies.iter().copied().fold(f64::INFINITY, f64::min);
    let e_max = energies.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let slack = tie_slack(g);
    Ok((0..count)
        .into_par_iter()
        .map(|i| {
            let z = i << 1;
            let diag = diag_for(g, &masks, z);
            let e = energies[i as usize];
            CriticalPointReport {
                cut: CutAssignment::new(z, n).expect("fits"),
                j_value: e,
                classification: classify(e, &diag, e_min, e_max, slack),
                hessian_diag: diag,
            }
        })
        .collect())
}

/// Writes `cut_hex,j_value,classification[,witness_hex]` rows and a summary line.
///
/// The witness for a non-global cut `S_z` is `S_z ⊕ S_g` (toward the ground cut) for
/// minimum-side candidates and `S_z ⊕ S_0` otherwise, reduced to whichever of the pair
/// or its complement the ansatz contains, if either.
pub fn write_report<W: Write>(
    g: &WeightedGraph,
    ansatz: &Ansatz,
    witness: bool,
    mut out: W,
) -> Result<LandscapeSummary> {
    let reports = eigenstate_reports(g, ansatz)?;
    let masks = ansatz.x_masks()?;
    let full = g.full_mask();
    let ground = reports
        .iter()
        .filter(|r| r.classification == Classification::GlobalMin)
        .map(|r| r.cut.bits())
        .next()
        .unwrap_or(0);
    if witness {
        writeln!(out, "cut_hex,j_value,classification,witness_hex")?;
    } else {
        writeln!(out, "cut_hex,j_value,classification")?;
    }
    let mut summary = LandscapeSummary::default();
    for r in &reports {
        write!(
            out,
            "{},{},{}",
            r.cut.to_hex(),
            crate::graph::fmt_sig17(r.j_value),
            r.classification
        )?;
        if witness {
            let target = match r.classification {
                Classification::GlobalMin | Classification::GlobalMax => None,
                Classification::LocalMax => Some(r.cut.bits()),
                _ => Some(r.cut.bits() ^ ground),
            };
            let w = target.and_then(|t| {
                masks
                    .iter()
                    .copied()
                    .find(|&m| m == t || m == (full ^ t))
                    .or(Some(t))
            });
            match w {
                Some(m) => write!(out, ",{m:x}")?,
                None => write!(out, ",")?,
            }
        }
        writeln!(out)?;
        summary.add(r.cut, r.classification);
    }
    writeln!(
        out,
        "# summary global_min={} global_max={} local_min={} local_max={} saddle={}",
        summary.global_min, summary.global_max, summary.local_min, summary.local_max, summary.saddle
    )?;
    Ok(summary)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbeTolerances {
    pub gradient: f64,
    pub eigenvalue: f64,
    pub case_c: f64,
}

impl Default for ProbeTolerances {
    fn default() -> Self {
        Self {
            gradient: 1e-6,
            eigenvalue: 1e-8,
            case_c: 1e-6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProbeLabel {
    EigenstateConfig,
    SaddleNumeric,
    DegenerateFlagged,
    OptimumNumeric,
}

impl fmt::Display for ProbeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ProbeLabel::EigenstateConfig => "eigenstate_config",
            ProbeLabel::SaddleNumeric => "saddle_numeric",
            ProbeLabel::DegenerateFlagged => "degenerate_flagged",
            ProbeLabel::OptimumNumeric => "optimum_numeric",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeResult {
    pub label: ProbeLabel,
    pub gradient_norm: f64,
    /// Extremal Hessian eigenvalues; `None` when the point was settled as an eigenstate.
    pub hessian_extremes: Option<(f64, f64)>,
}

/// Labels a numerically critical point.
///
/// For 𝕏-ansätze a point is an eigenstate configuration when, for every `k`, either
/// `sin 2θ_k` and `T_k` vanish or `cos 2θ_k` and `S_k` vanish. Other families are tested
/// by whether the prepared state is a basis state. Remaining points are labelled by the
/// signs of the full Hessian spectrum.
pub fn probe_critical_point(
    g: &WeightedGraph,
    ansatz: &Ansatz,
    theta: &[f64],
    tol: ProbeTolerances,
) -> Result<ProbeResult> {
    let hp = ProblemHamiltonian::new(g)?;
    let mut ws = GradientWorkspace::new(g.n_vertices());
    let (_, grad) = statevec::value_and_gradient(&hp, ansatz, theta, &mut ws)?;
    let gnorm = grad.iter().fold(0.0f64, |a, b| a.max(b.abs()));
    if gnorm >= tol.gradient {
        return Err(Error::NotCritical(gnorm));
    }
    if is_eigenstate_config(g, ansatz, theta, &hp, tol)? {
        return Ok(ProbeResult {
            label: ProbeLabel::EigenstateConfig,
            gradient_norm: gnorm,
            hessian_extremes: None,
        });
    }
    let h = statevec::hessian(&hp, ansatz, theta)?;
    let m = h.len();
    let mat = DMatrix::from_fn(m, m, |i, j| h[i][j]);
    let eig = SymmetricEigen::new(mat).eigenvalues;
    let lo = eig.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = eig.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let label = if lo < -tol.eigenvalue && hi > tol.eigenvalue {
        ProbeLabel::SaddleNumeric
    } else if eig.iter().all(|e| e.abs() > tol.eigenvalue) {
        ProbeLabel::OptimumNumeric
    } else {
        ProbeLabel::DegenerateFlagged
    };
    Ok(ProbeResult {
        label,
        gradient_norm: gnorm,
        hessian_extremes: Some((lo, hi)),
    })
}

fn is_eigenstate_config(
    g: &WeightedGraph,
    ansatz: &Ansatz,
    theta: &[f64],
    hp: &ProblemHamiltonian,
    tol: ProbeTolerances,
) -> Result<bool> {
    if ansatz.is_x_ansatz() {
        match TrigDecomposition::new(g, ansatz) {
            Ok(dec) => {
                return Ok((0..theta.len()).all(|k| {
                    let st = dec.st_coefficients(theta, k).expect("valid index");
                    let (s2, c2) = (2.0 * theta[k]).sin_cos();
                    (s2.abs() < tol.case_c && st.t_k.abs() < tol.case_c)
                        || (c2.abs() < tol.case_c && st.s_k.abs() < tol.case_c)
                }))
            }
            Err(Error::Cap { .. }) => {}
            Err(e) => return Err(e),
        }
    }
    let psi = statevec::prepare(ansatz, theta, hp)?;
    let peak = psi.probabilities().into_iter().fold(0.0f64, f64::max);
    Ok(peak > 1.0 - tol.case_c)
}
