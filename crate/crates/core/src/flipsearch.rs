//! Classical local search over cut flips indexed by ansatz elements.
//!
//! Starting from a bipartition `A`, a move replaces `A` by `A ⊕ S_k` for some
//! `S_k ∈ 𝒜` and is accepted only if it strictly increases the cut value. The search
//! stops at a cut no single flip can improve; those are exactly the cuts satisfying the
//! local-minimum condition on `J`, so the fixed-point set does not depend on the policy.

use std::collections::BTreeSet;
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::{
    check_brute_force_cap, max_cut_bruteforce, CutAssignment, Mask, WeightedGraph,
    BRUTE_FORCE_CAP,
};
use crate::landscape::tie_slack;
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PolicyKind {
    /// Uniform choice among `𝒜`; rejected draws are skipped, so this samples uniformly
    /// among the improving flips.
    UniformRandom,
    /// Scan `𝒜` in order and restart the scan after every accepted flip.
    FirstImprovement,
    /// Largest gain per step; ties go to the lowest mask value.
    Greedy,
}

impl std::str::FromStr for PolicyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "random" | "uniform_random" => Ok(PolicyKind::UniformRandom),
            "first" | "first_improvement" => Ok(PolicyKind::FirstImprovement),
            "greedy" => Ok(PolicyKind::Greedy),
            other => Err(Error::input(format!("unknown flip policy {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FlipPolicy {
    pub kind: PolicyKind,
    pub seed: u64,
    pub max_steps: usize,
}

impl FlipPolicy {
    pub fn new(kind: PolicyKind, seed: u64) -> Self {
        Self {
            kind,
            seed,
            max_steps: 1_000_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlipStep {
    pub step: usize,
    pub mask: Mask,
    pub cut_value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlipOutcome {
    pub start: CutAssignment,
    pub final_cut: CutAssignment,
    pub final_value: f64,
    pub trace: Vec<FlipStep>,
    pub converged: bool,
}

impl FlipOutcome {
    pub fn steps(&self) -> usize {
        self.trace.len()
    }
}

/// Runs the flip algorithm from `start`. A run that hits `max_steps` is returned with
/// `converged == false`.
pub fn flip_search(
    g: &WeightedGraph,
    masks: &[Mask],
    start: CutAssignment,
    policy: FlipPolicy,
) -> Result<FlipOutcome> {
    if policy.max_steps == 0 {
        return Err(Error::input("max_steps must be at least 1"));
    }
    if start.len() != g.n_vertices() {
        return Err(Error::input("start cut length does not match graph"));
    }
    let full = g.full_mask();
    if let Some(m) = masks.iter().find(|&&m| m & !full != 0) {
        return Err(Error::input(format!("mask {m:#x} exceeds graph vertices")));
    }
    let slack = improve_slack(g);
    let mut rng = ChaCha8Rng::seed_from_u64(policy.seed);
    let mut cur = start.bits();
    let mut value = g.cut_value_mask(cur);
    let mut trace = Vec::new();
    let mut converged = false;
    let mut improving: Vec<(Mask, f64)> = Vec::new();

    while trace.len() < policy.max_steps {
        let choice = match policy.kind {
            PolicyKind::FirstImprovement => masks.iter().find_map(|&m| {
                let v = g.cut_value_mask(cur ^ m);
                (v - value > slack).then_some((m, v))
            }),
            PolicyKind::UniformRandom => {
                improving.clear();
                improving.extend(masks.iter().filter_map(|&m| {
                    let v = g.cut_value_mask(cur ^ m);
                    (v - value > slack).then_some((m, v))
                }));
                if improving.is_empty() {
                    None
                } else {
                    Some(improving[rng.gen_range(0..improving.len())])
                }
            }
            PolicyKind::Greedy => {
                let mut best: Option<(Mask, f64)> = None;
                for &m in masks {
                    let v = g.cut_value_mask(cur ^ m);
                    if v - value <= slack {
                        continue;
                    }
                    best = match best {
                        Some((bm, bv)) if bv > v || (bv == v && bm <= m) => Some((bm, bv)),
                        _ => Some((m, v)),
                    };
                }
                best
            }
        };
        match choice {
            Some((m, v)) => {
                cur ^= m;
                value = v;
                trace.push(FlipStep {
                    step: trace.len() + 1,
                    mask: m,
                    cut_value: v,
                });
            }
            None => {
                converged = true;
                break;
            }
        }
    }
    if !converged {
        converged = !masks
            .iter()
            .any(|&m| g.cut_value_mask(cur ^ m) - value > slack);
    }
    Ok(FlipOutcome {
        start,
        final_cut: CutAssignment::new(cur, g.n_vertices())?,
        final_value: value,
        trace,
        converged,
    })
}

/// Gains at or below this are treated as ties (no improvement).
pub(crate) fn improve_slack(g: &WeightedGraph) -> f64 {
    0.5 * tie_slack(g)
}

/// True if no element of `masks` strictly improves the cut `z`.
pub fn is_fixed_point(g: &WeightedGraph, masks: &[Mask], z: Mask) -> bool {
    let slack = improve_slack(g);
    let v = g.cut_value_mask(z);
    masks.iter().all(|&m| g.cut_value_mask(z ^ m) - v <= slack)
}

/// All cuts (vertex 0 on the zero side) admitting no improving flip.
pub fn fixed_point_set(g: &WeightedGraph, masks: &[Mask]) -> Result<BTreeSet<CutAssignment>> {
    let n = g.n_vertices();
    check_brute_force_cap(n, BRUTE_FORCE_CAP)?;
    let count: u64 = 1 << (n - 1);
    let found: Vec<Mask> = (0..count)
        .into_par_iter()
        .map(|i| i << 1)
        .filter(|&z| is_fixed_point(g, masks, z))
        .collect();
    Ok(found
        .into_iter()
        .map(|z| CutAssignment::new(z, n).expect("fits"))
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub trial: usize,
    pub start: CutAssignment,
    pub final_cut: CutAssignment,
    pub cut_value: f64,
    pub alpha: f64,
    pub steps: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialStats {
    pub mean_cut: f64,
    pub mean_alpha: f64,
    pub mean_steps: f64,
    pub records: Vec<TrialRecord>,
}

/// Independent trials from uniformly random starts; α is taken against the exact MaxCut.
pub fn run_trials(
    g: &WeightedGraph,
    masks: &[Mask],
    kind: PolicyKind,
    trials: usize,
    base_seed: u64,
) -> Result<TrialStats> {
    if trials == 0 {
        return Err(Error::input("trials must be at least 1"));
    }
    let opt = max_cut_bruteforce(g)?.value;
    let n = g.n_vertices();
    let records: Vec<TrialRecord> = (0..trials)
        .into_par_iter()
        .map(|t| -> Result<TrialRecord> {
            let mut rng = ChaCha8Rng::seed_from_u64(seed::derive(base_seed, "flip-start", t as u64));
            let start = CutAssignment::new(rng.gen::<u64>() & g.full_mask(), n)?;
            let policy = FlipPolicy::new(kind, seed::derive(base_seed, "flip-policy", t as u64));
            let out = flip_search(g, masks, start, policy)?;
            Ok(TrialRecord {
                trial: t,
                start,
                final_cut: out.final_cut,
                cut_value: out.final_value,
                alpha: if opt > 0.0 { out.final_value / opt } else { 1.0 },
                steps: out.steps(),
                converged: out.converged,
            })
        })
        .collect::<Result<_>>()?;
    let k = records.len() as f64;
    Ok(TrialStats {
        mean_cut: records.iter().map(|r| r.cut_value).sum::<f64>() / k,
        mean_alpha: records.iter().map(|r| r.alpha).sum::<f64>() / k,
        mean_steps: records.iter().map(|r| r.steps as f64).sum::<f64>() / k,
        records,
    })
}

/// Greedy-policy trials.
pub fn greedy_approximation_run(
    g: &WeightedGraph,
    masks: &[Mask],
    trials: usize,
    seed: u64,
) -> Result<TrialStats> {
    run_trials(g, masks, PolicyKind::Greedy, trials, seed)
}

/// CSV `trial,start_hex,final_hex,cutval,alpha,steps`.
pub fn write_trials_csv<W: Write>(stats: &TrialStats, mut out: W) -> Result<()> {
    writeln!(out, "trial,start_hex,final_hex,cutval,alpha,steps")?;
    for r in &stats.records {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            r.trial,
            r.start.to_hex(),
            r.final_cut.to_hex(),
            crate::graph::fmt_sig17(r.cut_value),
            crate::graph::fmt_sig17(r.alpha),
            r.steps
        )?;
    }
    Ok(())
}
