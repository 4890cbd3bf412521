//! Limited-memory BFGS with a strong-Wolfe line search, and multi-restart ansatz runs.

use std::collections::VecDeque;
use std::fmt;
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::ansatz::Ansatz;
use crate::error::{Error, Result};
use crate::graph::{fmt_sig17, max_cut_bruteforce, WeightedGraph};
use crate::seed;
use crate::statevec::{
    best_basis_cut, prepare, value_and_gradient, GradientWorkspace, ProblemHamiltonian, DENSE_CAP,
};
use crate::trigform::{TrigDecomposition, KERNEL_CAP};

const WOLFE_C1: f64 = 1e-4;
const WOLFE_C2: f64 = 0.9;
const MAX_LINE_SEARCH_EVALS: usize = 40;

/// Rounded readouts are only computed up to this many qubits.
const ROUNDED_READOUT_CAP: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizerConfig {
    pub gtol: f64,
    pub ftol: f64,
    pub max_iters: usize,
    pub memory: usize,
    pub restarts: usize,
    pub seed: u64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            gtol: 1e-6,
            ftol: 1e-5,
            max_iters: 1000,
            memory: 10,
            restarts: 1,
            seed: 0,
        }
    }
}

impl OptimizerConfig {
    fn validate(&self) -> Result<()> {
        if !(self.gtol > 0.0 && self.ftol > 0.0) {
            return Err(Error::input("gtol and ftol must be positive"));
        }
        if self.memory == 0 || self.max_iters == 0 {
            return Err(Error::input("memory and max_iters must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConvergedBy {
    Gtol,
    Ftol,
    MaxIters,
    /// No step satisfying the Wolfe conditions was found; the best iterate is returned.
    LineSearch,
}

impl ConvergedBy {
    pub fn is_converged(self) -> bool {
        matches!(self, ConvergedBy::Gtol | ConvergedBy::Ftol)
    }
}

impl fmt::Display for ConvergedBy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ConvergedBy::Gtol => "gtol",
            ConvergedBy::Ftol => "ftol",
            ConvergedBy::MaxIters => "max_iters",
            ConvergedBy::LineSearch => "line_search",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub f: f64,
    pub grad: Vec<f64>,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged_by: ConvergedBy,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub restart: usize,
    pub theta: Vec<f64>,
    pub j_final: f64,
    pub iterations: usize,
    pub converged_by: ConvergedBy,
    /// `((W − J_final)/2) / MaxCut`.
    pub alpha: f64,
    /// Ratio of the best cut in the support of the final state, when computed.
    pub alpha_rounded: Option<f64>,
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

struct Probe {
    x: Vec<f64>,
    f: f64,
    g: Vec<f64>,
}

/// Minimizes `f` given a combined value-and-gradient callback.
///
/// Stops when `‖∇f‖∞ < gtol`, when the relative decrease over one iteration
/// `(f_k − f_{k+1}) / max(|f_k|, |f_{k+1}|, 1)` falls to `ftol`, or after `max_iters`.
/// A non-finite value or gradient is a hard error.
pub fn minimize<F>(mut fg: F, x0: &[f64], config: &OptimizerConfig) -> Result<Minimum>
where
    F: FnMut(&[f64]) -> Result<(f64, Vec<f64>)>,
{
    config.validate()?;
    let mut evals = 0usize;
    let mut eval = |x: &[f64]| -> Result<Probe> {
        evals += 1;
        let (f, g) = fg(x)?;
        if !f.is_finite() || g.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        if g.len() != x.len() {
            return Err(Error::input("gradient length does not match parameters"));
        }
        Ok(Probe { x: x.to_vec(), f, g })
    };
    let mut cur = eval(x0)?;
    let mut history: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::new();
    let mut iterations = 0;
    let converged_by = loop {
        if max_abs(&cur.g) < config.gtol {
            break ConvergedBy::Gtol;
        }
        if iterations >= config.max_iters {
            break ConvergedBy::MaxIters;
        }
        let mut dir = two_loop(&cur.g, &history);
        let mut slope = dot(&dir, &cur.g);
        if slope >= 0.0 {
            history.clear();
            dir = cur.g.iter().map(|v| -v).collect();
            slope = dot(&dir, &cur.g);
        }
        let first_step = if history.is_empty() {
            (1.0 / max_abs(&cur.g)).min(1.0)
        } else {
            1.0
        };
        let next = match line_search(&mut eval, &cur, &dir, slope, first_step)? {
            Some(p) => p,
            None if !history.is_empty() => {
                history.clear();
                continue;
            }
            None => break ConvergedBy::LineSearch,
        };
        iterations += 1;
        let s: Vec<f64> = next.x.iter().zip(&cur.x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = next.g.iter().zip(&cur.g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 * dot(&y, &y).sqrt() * dot(&s, &s).sqrt() {
            if history.len() == config.memory {
                history.pop_front();
            }
            history.push_back((s, y, 1.0 / sy));
        }
        let decrease = (cur.f - next.f) / cur.f.abs().max(next.f.abs()).max(1.0);
        cur = next;
        if decrease <= config.ftol {
            break if max_abs(&cur.g) < config.gtol {
                ConvergedBy::Gtol
            } else {
                ConvergedBy::Ftol
            };
        }
    };
    Ok(Minimum {
        x: cur.x,
        f: cur.f,
        grad: cur.g,
        iterations,
        evaluations: evals,
        converged_by,
    })
}

fn two_loop(g: &[f64], history: &VecDeque<(Vec<f64>, Vec<f64>, f64)>) -> Vec<f64> {
    let mut q: Vec<f64> = g.iter().map(|v| -v).collect();
    let mut alphas = Vec::with_capacity(history.len());
    for (s, y, rho) in history.iter().rev() {
        let a = rho * dot(s, &q);
        for (qi, yi) in q.iter_mut().zip(y) {
            *qi -= a * yi;
        }
        alphas.push(a);
    }
    if let Some((s, y, _)) = history.back() {
        let gamma = dot(s, y) / dot(y, y);
        for qi in q.iter_mut() {
            *qi *= gamma;
        }
    }
    for ((s, y, rho), a) in history.iter().zip(alphas.iter().rev()) {
        let b = rho * dot(y, &q);
        for (qi, si) in q.iter_mut().zip(s) {
            *qi += (a - b) * si;
        }
    }
    q
}

/// Strong-Wolfe bracketing and zoom; `None` if no acceptable step was found.
fn line_search<E>(
    eval: &mut E,
    start: &Probe,
    dir: &[f64],
    slope0: f64,
    first_step: f64,
) -> Result<Option<Probe>>
where
    E: FnMut(&[f64]) -> Result<Probe>,
{
    let point = |t: f64| -> Vec<f64> { start.x.iter().zip(dir).map(|(x, d)| x + t * d).collect() };
    let mut evals = 0;
    let mut t_prev = 0.0;
    let mut f_prev = start.f;
    let mut d_prev = slope0;
    let mut t = first_step;
    let mut prev: Option<Probe> = None;
    loop {
        let p = eval(&point(t))?;
        evals += 1;
        let d = dot(&p.g, dir);
        if p.f > start.f + WOLFE_C1 * t * slope0 || (evals > 1 && p.f >= f_prev) {
            return zoom(eval, start, dir, slope0, (t_prev, f_prev, d_prev, prev), (t, p.f, d, Some(p)), evals);
        }
        if d.abs() <= -WOLFE_C2 * slope0 {
            return Ok(Some(p));
        }
        if d >= 0.0 {
            return zoom(eval, start, dir, slope0, (t, p.f, d, Some(p)), (t_prev, f_prev, d_prev, prev), evals);
        }
        if evals >= MAX_LINE_SEARCH_EVALS {
            return Ok(None);
        }
        t_prev = t;
        f_prev = p.f;
        d_prev = d;
        prev = Some(p);
        t *= 2.0;
    }
}

type Bracket = (f64, f64, f64, Option<Probe>);

fn zoom<E>(
    eval: &mut E,
    start: &Probe,
    dir: &[f64],
    slope0: f64,
    mut lo: Bracket,
    mut hi: Bracket,
    mut evals: usize,
) -> Result<Option<Probe>>
where
    E: FnMut(&[f64]) -> Result<Probe>,
{
    loop {
        if evals >= MAX_LINE_SEARCH_EVALS || (hi.0 - lo.0).abs() < 1e-16 * lo.0.abs().max(1.0) {
            // accept the sufficient-decrease end of the bracket if it moved at all
            return Ok(lo.3.filter(|p| p.f < start.f));
        }
        let t = cubic_min(lo.0, lo.1, lo.2, hi.0, hi.1, hi.2);
        let x: Vec<f64> = start.x.iter().zip(dir).map(|(x, d)| x + t * d).collect();
        let p = eval(&x)?;
        evals += 1;
        let d = dot(&p.g, dir);
        if p.f > start.f + WOLFE_C1 * t * slope0 || p.f >= lo.1 {
            hi = (t, p.f, d, Some(p));
        } else {
            if d.abs() <= -WOLFE_C2 * slope0 {
                return Ok(Some(p));
            }
            if d * (hi.0 - lo.0) >= 0.0 {
                hi = lo;
            }
            lo = (t, p.f, d, Some(p));
        }
    }
}

/// Minimizer of the cubic interpolant, safeguarded to the middle of the bracket.
fn cubic_min(a: f64, fa: f64, da: f64, b: f64, fb: f64, db: f64) -> f64 {
    let (lo, hi) = if a < b { (a, b) } else { (b, a) };
    let width = hi - lo;
    let d1 = da + db - 3.0 * (fa - fb) / (a - b);
    let disc = d1 * d1 - da * db;
    let t = if disc >= 0.0 {
        let d2 = (b - a).signum() * disc.sqrt();
        b - (b - a) * (db + d2 - d1) / (db - da + 2.0 * d2)
    } else {
        f64::NAN
    };
    if t.is_finite() && t > lo + 0.1 * width && t < hi - 0.1 * width {
        t
    } else {
        0.5 * (lo + hi)
    }
}

/// How an ansatz objective is evaluated during optimization.
#[derive(Debug, Clone)]
pub enum Backend {
    Statevector(ProblemHamiltonian),
    ClosedForm(TrigDecomposition),
}

impl Backend {
    /// Closed form for 𝕏-ansätze whose kernel sums are cheaper than a statevector sweep.
    pub fn choose(g: &WeightedGraph, ansatz: &Ansatz) -> Result<Self> {
        let n = ansatz.n_qubits();
        if ansatz.is_x_ansatz() {
            if let Ok(dec) = TrigDecomposition::with_cap(g, ansatz, KERNEL_CAP.min(16)) {
                let work: usize = dec.edges().iter().map(|(cs, kf)| cs.len() * kf.len()).sum();
                let sweep = if n > 40 { usize::MAX } else { 4usize << n };
                if n > DENSE_CAP || work < sweep {
                    return Ok(Backend::ClosedForm(dec));
                }
            }
        }
        Ok(Backend::Statevector(ProblemHamiltonian::new(g)?))
    }

    fn value_and_gradient(
        &self,
        ansatz: &Ansatz,
        theta: &[f64],
        ws: &mut Option<GradientWorkspace>,
    ) -> Result<(f64, Vec<f64>)> {
        match self {
            Backend::Statevector(hp) => {
                let ws = ws.get_or_insert_with(|| GradientWorkspace::new(ansatz.n_qubits()));
                value_and_gradient(hp, ansatz, theta, ws)
            }
            Backend::ClosedForm(dec) => Ok((dec.objective(theta)?, dec.gradient(theta)?)),
        }
    }
}

/// Approximation ratio of a cut value; graphs without positive cuts count as solved.
pub fn approximation_ratio(cut_value: f64, max_cut: f64) -> f64 {
    if max_cut > 0.0 {
        cut_value / max_cut
    } else {
        1.0
    }
}

/// Independent runs from `θ0 ~ U[0, 2π)^M`, ordered by restart index.
pub fn optimize_ansatz(
    g: &WeightedGraph,
    ansatz: &Ansatz,
    config: &OptimizerConfig,
) -> Result<Vec<RunRecord>> {
    let max_cut = max_cut_bruteforce(g)?.value;
    optimize_ansatz_with(g, ansatz, config, max_cut)
}

/// As [`optimize_ansatz`] with a known MaxCut value for the ratio denominator.
pub fn optimize_ansatz_with(
    g: &WeightedGraph,
    ansatz: &Ansatz,
    config: &OptimizerConfig,
    max_cut: f64,
) -> Result<Vec<RunRecord>> {
    config.validate()?;
    if config.restarts == 0 {
        return Err(Error::input("restarts must be at least 1"));
    }
    let backend = Backend::choose(g, ansatz)?;
    (0..config.restarts)
        .into_par_iter()
        .map(|r| run_once(g, ansatz, &backend, config, max_cut, r))
        .collect()
}

fn run_once(
    g: &WeightedGraph,
    ansatz: &Ansatz,
    backend: &Backend,
    config: &OptimizerConfig,
    max_cut: f64,
    restart: usize,
) -> Result<RunRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed::derive(config.seed, "theta0", restart as u64));
    let theta0: Vec<f64> = (0..ansatz.n_params())
        .map(|_| rng.gen_range(0.0..std::f64::consts::TAU))
        .collect();
    let mut ws = None;
    let min = minimize(
        |t| backend.value_and_gradient(ansatz, t, &mut ws),
        &theta0,
        config,
    )?;
    let w = g.total_weight();
    let alpha = approximation_ratio((w - min.f) / 2.0, max_cut);
    let alpha_rounded = if ansatz.n_qubits() <= ROUNDED_READOUT_CAP {
        let hp = match backend {
            Backend::Statevector(hp) => hp.clone(),
            Backend::ClosedForm(_) => ProblemHamiltonian::new(g)?,
        };
        let psi = prepare(ansatz, &min.x, &hp)?;
        let cut = best_basis_cut(g, &psi)?;
        Some(approximation_ratio(g.cut_value(&cut)?, max_cut))
    } else {
        None
    };
    Ok(RunRecord {
        restart,
        theta: min.x,
        j_final: min.f,
        iterations: min.iterations,
        converged_by: min.converged_by,
        alpha,
        alpha_rounded,
    })
}

/// CSV `restart,J_final,alpha,iters,converged_by`.
pub fn write_runs_csv<W: Write>(runs: &[RunRecord], mut out: W) -> Result<()> {
    writeln!(out, "restart,J_final,alpha,iters,converged_by")?;
    for r in runs {
        writeln!(
            out,
            "{},{},{},{},{}",
            r.restart,
            fmt_sig17(r.j_final),
            fmt_sig17(r.alpha),
            r.iterations,
            r.converged_by
        )?;
    }
    Ok(())
}
