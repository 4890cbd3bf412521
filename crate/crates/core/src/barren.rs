//! Gradient statistics of 𝕏-ansätze under uniformly random parameters.
//!
//! Every kernel term of the closed form is a product of `cos 2θ_j` / `sin 2θ_j` factors
//! over `C_ab`, and distinct products are orthogonal under `θ ~ U[0,2π)^M`. Differentiating
//! in `θ_k` keeps them orthogonal, so the second moment of `∂_k J` is `4 / 2^{|C|}` times
//! the squared coefficient of each distinct product. When no two edges share a product
//! this is the per-edge sum `4 Σ_ab w² |𝒦_ab| / 2^{|C_ab|}`. Edges with identical cut
//! sets contribute the same products, and their weights add before squaring; the
//! `cross_terms` field carries that correction.

use std::collections::BTreeMap;
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::ansatz::Ansatz;
use crate::error::{Error, Result};
use crate::graph::{fmt_sig17, Edge, WeightedGraph};
use crate::seed;
use crate::trigform::{TrigDecomposition, KERNEL_CAP};

pub const MIN_SAMPLES: usize = 100;

const CHUNK: usize = 4096;

#[derive(Debug, Clone, PartialEq)]
pub struct EdgeContribution {
    pub edge: Edge,
    pub cut_size: usize,
    pub kernel_count: usize,
    /// `4 w² |𝒦| / 2^{|C|}`.
    pub contribution: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VarianceReport {
    pub k: usize,
    pub closed_form: f64,
    /// `closed_form − Σ per_edge contributions`; zero unless edges share kernel products.
    pub cross_terms: f64,
    pub mc_estimate: Option<f64>,
    pub mc_stderr: Option<f64>,
    pub mc_mean: Option<f64>,
    pub mc_mean_stderr: Option<f64>,
    pub samples: usize,
    pub per_edge: Vec<EdgeContribution>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonteCarloMoments {
    pub mean: f64,
    pub mean_stderr: f64,
    pub variance: f64,
    pub variance_stderr: f64,
    pub samples: usize,
}

/// Exact `E[(∂_k J)²]` for a pure 𝕏-ansatz.
pub fn variance_closed_form(g: &WeightedGraph, ansatz: &Ansatz, k: usize) -> Result<VarianceReport> {
    let dec = TrigDecomposition::with_cap(g, ansatz, KERNEL_CAP)?;
    variance_from_decomposition(&dec, k)
}

pub fn variance_from_decomposition(dec: &TrigDecomposition, k: usize) -> Result<VarianceReport> {
    check_index(dec, k)?;
    let mut per_edge = Vec::new();
    // (cut set, kernel selection) -> summed weight
    let mut products: BTreeMap<(&[usize], u64), f64> = BTreeMap::new();
    for (cs, kf) in dec.edges() {
        if !cs.members.contains(&k) {
            continue;
        }
        let scale = 4.0 * 0.5f64.powi(cs.len() as i32);
        per_edge.push(EdgeContribution {
            edge: cs.edge,
            cut_size: cs.len(),
            kernel_count: kf.len(),
            contribution: scale * cs.edge.w * cs.edge.w * kf.len() as f64,
        });
        for &sel in &kf.selections {
            *products.entry((cs.members.as_slice(), sel)).or_insert(0.0) += cs.edge.w;
        }
    }
    let closed_form: f64 = products
        .iter()
        .map(|((members, _), w)| 4.0 * 0.5f64.powi(members.len() as i32) * w * w)
        .sum();
    let edge_sum: f64 = per_edge.iter().map(|c| c.contribution).sum();
    Ok(VarianceReport {
        k,
        closed_form,
        cross_terms: closed_form - edge_sum,
        mc_estimate: None,
        mc_stderr: None,
        mc_mean: None,
        mc_mean_stderr: None,
        samples: 0,
        per_edge,
    })
}

fn check_index(dec: &TrigDecomposition, k: usize) -> Result<()> {
    if k >= dec.n_params() {
        return Err(Error::input(format!(
            "parameter index {k} out of range for {} parameters",
            dec.n_params()
        )));
    }
    Ok(())
}

/// Samples `∂_k J` at `θ ~ U[0,2π)^M` and returns its first two moments.
///
/// The variance standard error uses the fourth central moment rather than a normal
/// approximation. Samples are drawn in fixed-size chunks with per-chunk derived seeds, so
/// the result does not depend on the thread count.
pub fn variance_monte_carlo(
    g: &WeightedGraph,
    ansatz: &Ansatz,
    k: usize,
    samples: usize,
    seed: u64,
) -> Result<MonteCarloMoments> {
    let dec = TrigDecomposition::with_cap(g, ansatz, KERNEL_CAP)?;
    monte_carlo_from_decomposition(&dec, k, samples, seed)
}

pub fn monte_carlo_from_decomposition(
    dec: &TrigDecomposition,
    k: usize,
    samples: usize,
    seed: u64,
) -> Result<MonteCarloMoments> {
    check_index(dec, k)?;
    if samples < MIN_SAMPLES {
        return Err(Error::input(format!(
            "at least {MIN_SAMPLES} samples are required, got {samples}"
        )));
    }
    let m = dec.n_params();
    let chunks = samples.div_ceil(CHUNK);
    let values: Vec<f64> = (0..chunks)
        .into_par_iter()
        .flat_map_iter(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed::derive(seed, "variance", c as u64));
            let len = CHUNK.min(samples - c * CHUNK);
            let mut theta = vec![0.0; m];
            (0..len)
                .map(|_| {
                    for t in theta.iter_mut() {
                        *t = rng.gen_range(0.0..std::f64::consts::TAU);
                    }
                    let st = dec.st_coefficients(&theta, k).expect("checked");
                    let two = 2.0 * theta[k];
                    2.0 * (-two.sin() * st.s_k + two.cos() * st.t_k)
                })
                .collect::<Vec<_>>()
        })
        .collect();
    Ok(moments(&values))
}

fn moments(x: &[f64]) -> MonteCarloMoments {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let (mut m2, mut m4) = (0.0, 0.0);
    for &v in x {
        let d = (v - mean) * (v - mean);
        m2 += d;
        m4 += d * d;
    }
    m2 /= n;
    m4 /= n;
    let variance = m2 * n / (n - 1.0);
    let var_of_var = ((m4 - (n - 3.0) / (n - 1.0) * m2 * m2) / n).max(0.0);
    MonteCarloMoments {
        mean,
        mean_stderr: (variance / n).sqrt(),
        variance,
        variance_stderr: var_of_var.sqrt(),
        samples: x.len(),
    }
}

/// Closed form plus Monte Carlo in one report.
pub fn variance_report(
    g: &WeightedGraph,
    ansatz: &Ansatz,
    k: usize,
    samples: usize,
    seed: u64,
) -> Result<VarianceReport> {
    let dec = TrigDecomposition::with_cap(g, ansatz, KERNEL_CAP)?;
    let mut report = variance_from_decomposition(&dec, k)?;
    let mc = monte_carlo_from_decomposition(&dec, k, samples, seed)?;
    report.mc_estimate = Some(mc.variance);
    report.mc_stderr = Some(mc.variance_stderr);
    report.mc_mean = Some(mc.mean);
    report.mc_mean_stderr = Some(mc.mean_stderr);
    report.samples = mc.samples;
    Ok(report)
}

/// CSV `a,b,w,|C|,|K|,contribution` followed by `# ` summary lines.
pub fn write_report<W: Write>(report: &VarianceReport, mut out: W) -> Result<()> {
    writeln!(out, "a,b,w,|C|,|K|,contribution")?;
    for c in &report.per_edge {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            c.edge.a,
            c.edge.b,
            fmt_sig17(c.edge.w),
            c.cut_size,
            c.kernel_count,
            fmt_sig17(c.contribution)
        )?;
    }
    writeln!(
        out,
        "# k={} closed_form={} cross_terms={}",
        report.k,
        fmt_sig17(report.closed_form),
        fmt_sig17(report.cross_terms)
    )?;
    if let (Some(v), Some(se), Some(m), Some(mse)) = (
        report.mc_estimate,
        report.mc_stderr,
        report.mc_mean,
        report.mc_mean_stderr,
    ) {
        writeln!(
            out,
            "# samples={} mc_variance={} mc_stderr={} mc_mean={} mc_mean_stderr={}",
            report.samples,
            fmt_sig17(v),
            fmt_sig17(se),
            fmt_sig17(m),
            fmt_sig17(mse)
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{generate, GraphGenerator, GraphKind};

    #[test]
    fn classical_is_sum_of_squared_weights() {
        let g = generate(&GraphGenerator::new(GraphKind::Complete, 5, 4)).unwrap();
        let a = Ansatz::classical(5).unwrap();
        for k in 0..5 {
            let r = variance_closed_form(&g, &a, k).unwrap();
            let expect: f64 = g
                .edges()
                .iter()
                .filter(|e| e.a == k || e.b == k)
                .map(|e| e.w * e.w)
                .sum();
            assert!((r.closed_form - expect).abs() < 1e-12);
            assert_eq!(r.cross_terms, 0.0);
        }
    }

    #[test]
    fn unused_parameter_has_zero_variance() {
        let g = WeightedGraph::new(3, [(0, 1, 1.0)]).unwrap();
        let a = Ansatz::from_masks(3, [0b001, 0b100]).unwrap();
        let r = variance_closed_form(&g, &a, 1).unwrap();
        assert_eq!(r.closed_form, 0.0);
        assert!(r.per_edge.is_empty());
    }

    #[test]
    fn single_edge_weight_two() {
        let g = WeightedGraph::new(2, [(0, 1, 2.0)]).unwrap();
        let a = Ansatz::classical(2).unwrap();
        let r = variance_report(&g, &a, 0, 100_000, 7).unwrap();
        assert!((r.closed_form - 4.0).abs() < 1e-12);
        let (v, se) = (r.mc_estimate.unwrap(), r.mc_stderr.unwrap());
        assert!((v - 4.0).abs() < 3.0 * se, "{v} ± {se}");
    }

    #[test]
    fn shared_cut_sets_add_before_squaring() {
        // one generator on vertex 0 cuts both edges with the same single-member cut set
        let g = WeightedGraph::new(3, [(0, 1, 1.0), (0, 2, 2.0)]).unwrap();
        let a = Ansatz::from_masks(3, [0b001]).unwrap();
        let r = variance_closed_form(&g, &a, 0).unwrap();
        // J = 3 cos 2θ, so E[(∂J)²] = 36 · ½
        assert!((r.closed_form - 18.0).abs() < 1e-12);
        assert!((r.cross_terms - 8.0).abs() < 1e-12);
    }

    #[test]
    fn monte_carlo_is_reproducible_and_validated() {
        let g = WeightedGraph::new(2, [(0, 1, 1.0)]).unwrap();
        let a = Ansatz::classical(2).unwrap();
        let x = variance_monte_carlo(&g, &a, 0, 1000, 3).unwrap();
        assert_eq!(x, variance_monte_carlo(&g, &a, 0, 1000, 3).unwrap());
        assert!(variance_monte_carlo(&g, &a, 0, 99, 3).is_err());
        assert!(variance_closed_form(&g, &a, 2).is_err());
    }

    #[test]
    fn moments_of_known_sample() {
        let m = moments(&[1.0, -1.0, 1.0, -1.0]);
        assert_eq!(m.mean, 0.0);
        assert!((m.variance - 4.0 / 3.0).abs() < 1e-15);
    }
}
