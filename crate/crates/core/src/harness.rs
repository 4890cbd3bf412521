//! Approximation-ratio experiments over random complete graphs, CSV output and SVG plots.
//!
//! One top-level seed fans out to per-instance graph seeds and per-(series, x, instance)
//! optimizer seeds. All series in one experiment share the same graph instances.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write;

use rayon::prelude::*;
use serde::Deserialize;

use crate::ansatz::{Ansatz, QaoaVariant, XzVariant};
use crate::error::{Error, Result};
use crate::graph::{fmt_sig17, generate, max_cut_bruteforce, GraphGenerator, GraphKind, WeightedGraph};
use crate::gwbaseline::mean_std;
use crate::optimizer::{optimize_ansatz_with, OptimizerConfig};
use crate::seed;

/// Instances used by quick mode.
pub const QUICK_INSTANCES: usize = 25;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    DepthSweep,
    XzSweep,
    QaoaCompare,
    GwCompare,
    LandscapeAudit,
    VarianceAudit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub n: usize,
    pub instances: usize,
    pub seed: u64,
    pub weight_range: (f64, f64),
    pub optimizer: OptimizerConfig,
    /// k-body depths for X and XZ series; empty means `1..n`.
    pub depths: Vec<usize>,
    /// QAOA layer counts; empty means the experiment default.
    pub layers: Vec<usize>,
}

impl ExperimentConfig {
    pub fn new(experiment: ExperimentKind, n: usize, instances: usize, seed: u64) -> Self {
        Self {
            experiment,
            n,
            instances,
            seed,
            weight_range: (0.0, 5.0),
            optimizer: OptimizerConfig::default(),
            depths: Vec::new(),
            layers: Vec::new(),
        }
    }

    pub fn quick(mut self) -> Self {
        self.instances = QUICK_INSTANCES;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.instances == 0 {
            return Err(Error::input("instance count must be at least 1"));
        }
        if self.n < 2 {
            return Err(Error::input("experiments need n >= 2"));
        }
        if let Some(&d) = self.depths.iter().find(|&&d| d == 0 || d > self.n) {
            return Err(Error::input(format!("depth {d} outside 1..={}", self.n)));
        }
        Ok(())
    }

    fn depth_grid(&self) -> Vec<usize> {
        if self.depths.is_empty() {
            (1..self.n).collect()
        } else {
            self.depths.clone()
        }
    }

    /// Applies a TOML key-value file on top of this config.
    pub fn apply_toml(&mut self, text: &str) -> Result<()> {
        let f: ConfigFile = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        if let Some(e) = f.experiment {
            self.experiment = e;
        }
        if let Some(n) = f.n {
            self.n = n;
        }
        if let Some(i) = f.instances {
            self.instances = i;
        }
        if let Some(s) = f.seed {
            self.seed = s;
        }
        if let Some([lo, hi]) = f.weight_range {
            self.weight_range = (lo, hi);
        }
        if let Some(d) = f.depths {
            self.depths = d;
        }
        if let Some(l) = f.layers {
            self.layers = l;
        }
        let o = &mut self.optimizer;
        if let Some(v) = f.gtol {
            o.gtol = v;
        }
        if let Some(v) = f.ftol {
            o.ftol = v;
        }
        if let Some(v) = f.max_iters {
            o.max_iters = v;
        }
        if let Some(v) = f.memory {
            o.memory = v;
        }
        if let Some(v) = f.restarts {
            o.restarts = v;
        }
        Ok(())
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    experiment: Option<ExperimentKind>,
    n: Option<usize>,
    instances: Option<usize>,
    seed: Option<u64>,
    weight_range: Option<[f64; 2]>,
    depths: Option<Vec<usize>>,
    layers: Option<Vec<usize>>,
    gtol: Option<f64>,
    ftol: Option<f64>,
    max_iters: Option<usize>,
    memory: Option<usize>,
    restarts: Option<usize>,
    // accepted so one file can drive several verbs
    #[allow(dead_code)]
    degrees: Option<Vec<usize>>,
    #[allow(dead_code)]
    csv: Option<String>,
    #[allow(dead_code)]
    svg: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentRecord {
    pub series: String,
    /// k-body depth or parameter count, depending on the experiment.
    pub x: usize,
    pub mean: f64,
    /// Population standard deviation over instances.
    pub std: f64,
    pub alphas: Vec<f64>,
    /// Instances whose best run stopped without meeting gtol or ftol.
    pub non_converged: usize,
}

/// Random weighted `K_n` instances with their exact MaxCut values.
pub struct InstanceSet {
    pub graphs: Vec<WeightedGraph>,
    pub max_cuts: Vec<f64>,
}

impl InstanceSet {
    pub fn complete(config: &ExperimentConfig) -> Result<Self> {
        config.validate()?;
        let items: Vec<(WeightedGraph, f64)> = (0..config.instances)
            .into_par_iter()
            .map(|i| {
                let mut gen = GraphGenerator::new(
                    GraphKind::Complete,
                    config.n,
                    seed::derive(config.seed, "instance", i as u64),
                );
                gen.weight_range = config.weight_range;
                let g = generate(&gen)?;
                let mc = max_cut_bruteforce(&g)?.value;
                Ok((g, mc))
            })
            .collect::<Result<_>>()?;
        let (graphs, max_cuts) = items.into_iter().unzip();
        Ok(Self { graphs, max_cuts })
    }
}

/// Runs one ansatz over every instance; α per instance is taken from the best restart.
pub fn evaluate_series(
    instances: &InstanceSet,
    ansatz: &Ansatz,
    series: &str,
    x: usize,
    config: &ExperimentConfig,
) -> Result<ExperimentRecord> {
    let stream = format!("{series}-{x}");
    let results: Vec<(f64, bool)> = instances
        .graphs
        .par_iter()
        .zip(&instances.max_cuts)
        .enumerate()
        .map(|(i, (g, &mc))| {
            let opt = OptimizerConfig {
                seed: seed::derive(config.seed, &stream, i as u64),
                ..config.optimizer
            };
            let runs = optimize_ansatz_with(g, ansatz, &opt, mc)?;
            let best = runs
                .iter()
                .min_by(|a, b| a.j_final.total_cmp(&b.j_final))
                .expect("at least one restart");
            Ok((best.alpha, best.converged_by.is_converged()))
        })
        .collect::<Result<_>>()?;
    let alphas: Vec<f64> = results.iter().map(|r| r.0).collect();
    let (mean, std) = mean_std(&alphas);
    Ok(ExperimentRecord {
        series: series.to_string(),
        x,
        mean,
        std,
        alphas,
        non_converged: results.iter().filter(|r| !r.1).count(),
    })
}

/// Mean α of the X-ansatz family versus k-body depth.
pub fn run_depth_sweep(config: &ExperimentConfig) -> Result<Vec<ExperimentRecord>> {
    let inst = InstanceSet::complete(config)?;
    config
        .depth_grid()
        .into_iter()
        .map(|d| evaluate_series(&inst, &Ansatz::x_depth(config.n, d)?, "x", d, config))
        .collect()
}

/// X-ansatz against both XZ variants, keyed by k-body depth.
pub fn run_xz_sweep(config: &ExperimentConfig) -> Result<Vec<ExperimentRecord>> {
    let inst = InstanceSet::complete(config)?;
    let mut out = Vec::new();
    for d in config.depth_grid() {
        out.push(evaluate_series(&inst, &Ansatz::x_depth(config.n, d)?, "x", d, config)?);
        out.push(evaluate_series(
            &inst,
            &Ansatz::xz(config.n, d, XzVariant::KBodyZ)?,
            "xz_kbody",
            d,
            config,
        )?);
        out.push(evaluate_series(
            &inst,
            &Ansatz::xz(config.n, d, XzVariant::GlobalZ)?,
            "xz_global",
            d,
            config,
        )?);
    }
    Ok(out)
}

/// QAOA variants, X and XZ ansätze, keyed by parameter count `M`.
///
/// `layers` applies to every QAOA variant; when empty, standard QAOA runs `p = 1..=n` and
/// the local-x variants run `p = 1..=6`.
pub fn run_qaoa_compare(config: &ExperimentConfig) -> Result<Vec<ExperimentRecord>> {
    let inst = InstanceSet::complete(config)?;
    let n = config.n;
    let (std_layers, local_layers) = if config.layers.is_empty() {
        ((1..=n).collect(), (1..=6).collect())
    } else {
        (config.layers.clone(), config.layers.clone())
    };
    let mut out = Vec::new();
    for &p in &std_layers {
        let a = Ansatz::qaoa(n, p, QaoaVariant::Standard)?;
        out.push(evaluate_series(&inst, &a, "qaoa_standard", a.n_params(), config)?);
    }
    for (variant, name) in [
        (QaoaVariant::LocalX, "qaoa_localx"),
        (QaoaVariant::LocalXZeroStart, "qaoa_localx_zero"),
    ] {
        for &p in &local_layers {
            let a = Ansatz::qaoa(n, p, variant)?;
            out.push(evaluate_series(&inst, &a, name, a.n_params(), config)?);
        }
    }
    for d in config.depth_grid() {
        let a = Ansatz::x_depth(n, d)?;
        out.push(evaluate_series(&inst, &a, "x", a.n_params(), config)?);
        let a = Ansatz::xz(n, d, XzVariant::KBodyZ)?;
        out.push(evaluate_series(&inst, &a, "xz_kbody", a.n_params(), config)?);
    }
    Ok(out)
}

/// CSV `series,x,instance,alpha`: one row per instance, then `mean` and `std` rows per point.
pub fn write_records_csv<W: Write>(records: &[ExperimentRecord], mut out: W) -> Result<()> {
    writeln!(out, "series,x,instance,alpha")?;
    for r in records {
        for (i, a) in r.alphas.iter().enumerate() {
            writeln!(out, "{},{},{},{}", r.series, r.x, i, fmt_sig17(*a))?;
        }
    }
    for r in records {
        writeln!(out, "{},{},mean,{}", r.series, r.x, fmt_sig17(r.mean))?;
        writeln!(out, "{},{},std,{}", r.series, r.x, fmt_sig17(r.std))?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlotStyle {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub width: f64,
    pub height: f64,
}

impl Default for PlotStyle {
    fn default() -> Self {
        Self {
            title: String::new(),
            x_label: "x".into(),
            y_label: "approximation ratio".into(),
            width: 640.0,
            height: 420.0,
        }
    }
}

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];
const MARGIN_LEFT: f64 = 70.0;
const MARGIN_RIGHT: f64 = 130.0;
const MARGIN_TOP: f64 = 40.0;
const MARGIN_BOTTOM: f64 = 55.0;

/// Line plot per series with a shaded mean ± std band. Output depends only on the input.
pub fn emit_plot(records: &[ExperimentRecord], style: &PlotStyle) -> Result<String> {
    if records.is_empty() {
        return Err(Error::input("no records to plot"));
    }
    let mut series: BTreeMap<&str, Vec<&ExperimentRecord>> = BTreeMap::new();
    for r in records {
        series.entry(&r.series).or_default().push(r);
    }
    for pts in series.values_mut() {
        pts.sort_by_key(|r| r.x);
    }
    let (mut x0, mut x1) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY);
    for r in records {
        x0 = x0.min(r.x as f64);
        x1 = x1.max(r.x as f64);
        y0 = y0.min(r.mean - r.std);
        y1 = y1.max(r.mean + r.std);
    }
    if x1 - x0 < 1e-12 {
        x0 -= 1.0;
        x1 += 1.0;
    }
    if y1 - y0 < 1e-12 {
        y0 -= 0.01;
        y1 += 0.01;
    }
    let pad = 0.05 * (y1 - y0);
    y0 -= pad;
    y1 += pad;
    let pw = style.width - MARGIN_LEFT - MARGIN_RIGHT;
    let ph = style.height - MARGIN_TOP - MARGIN_BOTTOM;
    let sx = |x: f64| MARGIN_LEFT + (x - x0) / (x1 - x0) * pw;
    let sy = |y: f64| MARGIN_TOP + (y1 - y) / (y1 - y0) * ph;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{:.0}" height="{:.0}" viewBox="0 0 {:.0} {:.0}" font-family="sans-serif" font-size="12">"#,
        style.width, style.height, style.width, style.height
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<rect x="{:.3}" y="{:.3}" width="{:.3}" height="{:.3}" fill="none" stroke="black"/>"#,
        MARGIN_LEFT, MARGIN_TOP, pw, ph
    );
    for i in 0..=4 {
        let y = y0 + (y1 - y0) * i as f64 / 4.0;
        let _ = writeln!(
            s,
            r#"<text x="{:.3}" y="{:.3}" text-anchor="end">{:.3}</text>"#,
            MARGIN_LEFT - 6.0,
            sy(y) + 4.0,
            y
        );
    }
    let mut ticks: Vec<usize> = records.iter().map(|r| r.x).collect();
    ticks.sort_unstable();
    ticks.dedup();
    let stride = ticks.len().div_ceil(12).max(1);
    for &t in ticks.iter().step_by(stride) {
        let _ = writeln!(
            s,
            r#"<text x="{:.3}" y="{:.3}" text-anchor="middle">{t}</text>"#,
            sx(t as f64),
            MARGIN_TOP + ph + 16.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.3}" y="{:.3}" text-anchor="middle">{}</text>"#,
        MARGIN_LEFT + pw / 2.0,
        style.height - 14.0,
        escape(&style.x_label)
    );
    let _ = writeln!(
        s,
        r#"<text transform="translate(18 {:.3}) rotate(-90)" text-anchor="middle">{}</text>"#,
        MARGIN_TOP + ph / 2.0,
        escape(&style.y_label)
    );
    if !style.title.is_empty() {
        let _ = writeln!(
            s,
            r#"<text x="{:.3}" y="24" text-anchor="middle" font-size="14">{}</text>"#,
            MARGIN_LEFT + pw / 2.0,
            escape(&style.title)
        );
    }
    for (idx, (name, pts)) in series.iter().enumerate() {
        let color = PALETTE[idx % PALETTE.len()];
        let upper: Vec<String> = pts
            .iter()
            .map(|r| format!("{:.3},{:.3}", sx(r.x as f64), sy(r.mean + r.std)))
            .collect();
        let lower: Vec<String> = pts
            .iter()
            .rev()
            .map(|r| format!("{:.3},{:.3}", sx(r.x as f64), sy(r.mean - r.std)))
            .collect();
        let _ = writeln!(
            s,
            r#"<polygon class="band" data-series="{}" points="{} {}" fill="{color}" fill-opacity="0.2" stroke="none"/>"#,
            escape(name),
            upper.join(" "),
            lower.join(" ")
        );
        let line: Vec<String> = pts
            .iter()
            .map(|r| format!("{:.3},{:.3}", sx(r.x as f64), sy(r.mean)))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline class="mean" data-series="{}" points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#,
            escape(name),
            line.join(" ")
        );
        for r in pts {
            let _ = writeln!(
                s,
                r#"<circle cx="{:.3}" cy="{:.3}" r="2.5" fill="{color}"/>"#,
                sx(r.x as f64),
                sy(r.mean)
            );
        }
        let ly = MARGIN_TOP + 14.0 + 18.0 * idx as f64;
        let lx = MARGIN_LEFT + pw + 12.0;
        let _ = writeln!(
            s,
            r#"<line x1="{:.3}" y1="{:.3}" x2="{:.3}" y2="{:.3}" stroke="{color}" stroke-width="2"/><text x="{:.3}" y="{:.3}">{}</text>"#,
            lx,
            ly,
            lx + 18.0,
            ly,
            lx + 24.0,
            ly + 4.0,
            escape(name)
        );
    }
    s.push_str("</svg>\n");
    Ok(s)
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}
