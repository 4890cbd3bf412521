use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use cutscape::ansatz::Ansatz;
use cutscape::barren;
use cutscape::error::{Error, Result};
use cutscape::flipsearch::{self, PolicyKind};
use cutscape::graph::{fmt_sig17, WeightedGraph};
use cutscape::gwbaseline::{self, CompareConfig, GwConfig};
use cutscape::harness::{self, ExperimentConfig, ExperimentKind, ExperimentRecord, PlotStyle};
use cutscape::landscape;
use cutscape::optimizer::{self, OptimizerConfig};

/// Exit code for runs that finished but did not converge.
const EXIT_NON_CONVERGED: u8 = 4;

#[derive(Parser)]
#[command(name = "cutscape", version, about = "MaxCut landscapes of commuting X-string ansätze")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Top-level seed; every random draw derives from it.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Write CSV output here instead of stdout.
    #[arg(long, global = true)]
    csv: Option<PathBuf>,
    /// Also write an SVG plot (experiment verbs only).
    #[arg(long, global = true)]
    svg: Option<PathBuf>,
    /// TOML key-value file with experiment settings; explicit flags win.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Optimizer restarts per instance.
    #[arg(long, global = true)]
    restarts: Option<usize>,
    /// Reduced instance count for fast checks.
    #[arg(long, global = true)]
    quick: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Classify every eigenstate critical point of an 𝕏-ansatz.
    LandscapeAudit(AuditArgs),
    /// Approximation ratio of the X-ansatz versus k-body depth.
    SweepDepth(SweepArgs),
    /// X-ansatz against both XZ variants.
    SweepXz(SweepArgs),
    /// QAOA variants against X and XZ ansätze by parameter count.
    CompareQaoa(SweepArgs),
    /// Classical ansatz with L-BFGS against the GW baseline on random regular graphs.
    CompareGw(CompareGwArgs),
    /// Closed-form and Monte Carlo variance of one gradient component.
    Variance(VarianceArgs),
    /// Classical flip local search over ansatz elements.
    Flip(FlipArgs),
    /// Multi-restart optimization of one ansatz on one graph.
    Optimize(OptimizeArgs),
    /// GW baseline on one graph.
    Gw(GwArgs),
}

#[derive(Args)]
struct AuditArgs {
    /// Graph file; without it random weighted K_n instances are generated.
    #[arg(long)]
    graph: Option<PathBuf>,
    /// Ansatz file or spec string such as `full:5` or `path:6`.
    #[arg(long)]
    ansatz: String,
    /// Vertices of generated instances.
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    instances: Option<usize>,
    /// Add a witness column for local optima.
    #[arg(long)]
    witness: bool,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    instances: Option<usize>,
    /// Comma-separated k-body depths.
    #[arg(long, value_delimiter = ',')]
    depths: Option<Vec<usize>>,
    /// Comma-separated QAOA layer counts.
    #[arg(long, value_delimiter = ',')]
    layers: Option<Vec<usize>>,
}

#[derive(Args)]
struct CompareGwArgs {
    /// Graph family; only `kregular` is supported.
    #[arg(long, default_value = "kregular")]
    kind: String,
    #[arg(long, default_value_t = 20)]
    n: usize,
    #[arg(long, value_delimiter = ',', default_value = "2,3,4,5,6,7,8,9,10")]
    degrees: Vec<usize>,
    #[arg(long, default_value_t = 50)]
    instances: usize,
    /// Hyperplane roundings per GW solve.
    #[arg(long, default_value_t = gwbaseline::COMPARE_ROUNDINGS)]
    trials: usize,
}

#[derive(Args)]
struct VarianceArgs {
    #[arg(long)]
    graph: PathBuf,
    #[arg(long)]
    ansatz: String,
    #[arg(long)]
    k: usize,
    #[arg(long, default_value_t = 100_000)]
    samples: usize,
}

#[derive(Args)]
struct FlipArgs {
    #[arg(long)]
    graph: PathBuf,
    #[arg(long)]
    ansatz: String,
    /// `greedy`, `first_improvement` or `uniform_random`.
    #[arg(long, default_value = "greedy")]
    policy: String,
    #[arg(long, default_value_t = 100)]
    trials: usize,
}

#[derive(Args)]
struct OptimizeArgs {
    #[arg(long)]
    graph: PathBuf,
    /// Ansatz file or spec string.
    #[arg(long, alias = "ansatz")]
    ansatz_spec: String,
}

#[derive(Args)]
struct GwArgs {
    #[arg(long)]
    graph: PathBuf,
    #[arg(long, default_value_t = 100)]
    trials: usize,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(t) = cli.global.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            eprintln!("error: cannot configure thread pool: {e}");
            return ExitCode::from(2);
        }
    }
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("warning: some runs did not converge; results were written");
            ExitCode::from(EXIT_NON_CONVERGED)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

/// Returns whether every run converged.
fn run(cli: &Cli) -> Result<bool> {
    let g = &cli.global;
    match &cli.command {
        Command::LandscapeAudit(a) => landscape_audit(g, a),
        Command::SweepDepth(a) => sweep(g, a, ExperimentKind::DepthSweep),
        Command::SweepXz(a) => sweep(g, a, ExperimentKind::XzSweep),
        Command::CompareQaoa(a) => sweep(g, a, ExperimentKind::QaoaCompare),
        Command::CompareGw(a) => compare_gw(g, a),
        Command::Variance(a) => variance(g, a),
        Command::Flip(a) => flip(g, a),
        Command::Optimize(a) => optimize(g, a),
        Command::Gw(a) => gw(g, a),
    }
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn seed(g: &Global) -> u64 {
    g.seed.unwrap_or(0)
}

fn experiment_config(g: &Global, kind: ExperimentKind, n: usize, instances: usize) -> Result<ExperimentConfig> {
    let mut c = ExperimentConfig::new(kind, n, instances, 0);
    if let Some(p) = &g.config {
        c.apply_toml(&std::fs::read_to_string(p)?)?;
        c.experiment = kind;
    }
    if g.quick {
        c = c.quick();
    }
    if let Some(s) = g.seed {
        c.seed = s;
    }
    if let Some(r) = g.restarts {
        c.optimizer.restarts = r;
    }
    Ok(c)
}

fn sweep(g: &Global, a: &SweepArgs, kind: ExperimentKind) -> Result<bool> {
    let mut c = experiment_config(g, kind, 8, 100)?;
    if let Some(n) = a.n {
        c.n = n;
    }
    if let Some(i) = a.instances {
        c.instances = i;
    }
    if let Some(d) = &a.depths {
        c.depths = d.clone();
    }
    if let Some(l) = &a.layers {
        c.layers = l.clone();
    }
    let (records, x_label) = match kind {
        ExperimentKind::DepthSweep => (harness::run_depth_sweep(&c)?, "k-body depth D"),
        ExperimentKind::XzSweep => (harness::run_xz_sweep(&c)?, "k-body depth D"),
        _ => (harness::run_qaoa_compare(&c)?, "parameters M"),
    };
    harness::write_records_csv(&records, output(g.csv.as_deref())?)?;
    if let Some(p) = &g.svg {
        let style = PlotStyle {
            title: format!("n = {}, {} instances", c.n, c.instances),
            x_label: x_label.into(),
            ..PlotStyle::default()
        };
        std::fs::write(p, harness::emit_plot(&records, &style)?)?;
    }
    summarize(&records);
    Ok(records.iter().all(|r| r.non_converged == 0))
}

fn summarize(records: &[ExperimentRecord]) {
    for r in records {
        eprintln!("{:<18} x={:<4} mean={:.4} std={:.4}", r.series, r.x, r.mean, r.std);
    }
}

fn landscape_audit(g: &Global, a: &AuditArgs) -> Result<bool> {
    let mut out = output(g.csv.as_deref())?;
    if let Some(path) = &a.graph {
        let graph = WeightedGraph::load(path)?;
        let ansatz = Ansatz::resolve(&a.ansatz)?;
        let s = landscape::write_report(&graph, &ansatz, a.witness, &mut out)?;
        out.flush()?;
        eprintln!("local optima: {}", s.local_optima());
        return Ok(true);
    }
    let ansatz = Ansatz::resolve(&a.ansatz)?;
    let mut c = experiment_config(g, ExperimentKind::LandscapeAudit, ansatz.n_qubits(), 20)?;
    if let Some(i) = a.instances {
        c.instances = i;
    }
    if let Some(n) = a.n {
        if n != ansatz.n_qubits() {
            return Err(Error::Input(format!(
                "--n {n} does not match the ansatz on {} qubits",
                ansatz.n_qubits()
            )));
        }
    }
    c.n = ansatz.n_qubits();
    let inst = harness::InstanceSet::complete(&c)?;
    writeln!(out, "instance,global_min,global_max,local_min,local_max,saddle")?;
    let mut total = 0;
    for (i, graph) in inst.graphs.iter().enumerate() {
        let s = landscape::classify_all_eigenstates(graph, &ansatz)?;
        total += s.local_optima();
        writeln!(
            out,
            "{i},{},{},{},{},{}",
            s.global_min, s.global_max, s.local_min, s.local_max, s.saddle
        )?;
    }
    out.flush()?;
    eprintln!("local optima over {} instances: {total}", c.instances);
    Ok(true)
}

fn compare_gw(g: &Global, a: &CompareGwArgs) -> Result<bool> {
    if a.kind != "kregular" {
        return Err(Error::Input(format!("compare-gw supports kregular graphs, got {:?}", a.kind)));
    }
    let mut c = CompareConfig::new(a.n, a.instances, seed(g));
    c.gw.rounding_trials = a.trials;
    if let Some(p) = &g.config {
        let mut e = ExperimentConfig::new(ExperimentKind::GwCompare, a.n, a.instances, seed(g));
        e.apply_toml(&std::fs::read_to_string(p)?)?;
        c.optimizer = e.optimizer;
        c.weight_range = e.weight_range;
        if g.seed.is_none() {
            c.seed = e.seed;
        }
    }
    if g.quick {
        c.instances = c.instances.min(harness::QUICK_INSTANCES);
    }
    let rows = gwbaseline::compare_grad_vs_gw(&a.degrees, &c)?;
    gwbaseline::write_compare_csv(&rows, output(g.csv.as_deref())?)?;
    if let Some(p) = &g.svg {
        let records: Vec<ExperimentRecord> = rows
            .iter()
            .map(|r| ExperimentRecord {
                series: "alpha_grad/alpha_gw".into(),
                x: r.degree,
                mean: r.mean_ratio,
                std: r.std_ratio,
                alphas: r.ratios.clone(),
                non_converged: 0,
            })
            .collect();
        let style = PlotStyle {
            title: format!("n = {}, {} instances", c.n, c.instances),
            x_label: "vertex degree".into(),
            y_label: "alpha_grad / alpha_GW".into(),
            ..PlotStyle::default()
        };
        std::fs::write(p, harness::emit_plot(&records, &style)?)?;
    }
    for r in &rows {
        eprintln!("degree={:<3} ratio={:.4} std={:.4}", r.degree, r.mean_ratio, r.std_ratio);
    }
    Ok(true)
}

fn variance(g: &Global, a: &VarianceArgs) -> Result<bool> {
    let graph = WeightedGraph::load(&a.graph)?;
    let ansatz = Ansatz::resolve(&a.ansatz)?;
    let report = barren::variance_report(&graph, &ansatz, a.k, a.samples, seed(g))?;
    barren::write_report(&report, output(g.csv.as_deref())?)?;
    eprintln!(
        "closed form {:.6}, Monte Carlo {:.6} ± {:.6}",
        report.closed_form,
        report.mc_estimate.unwrap_or(f64::NAN),
        report.mc_stderr.unwrap_or(f64::NAN)
    );
    Ok(true)
}

fn flip(g: &Global, a: &FlipArgs) -> Result<bool> {
    let graph = WeightedGraph::load(&a.graph)?;
    let ansatz = Ansatz::resolve(&a.ansatz)?;
    let masks = ansatz.x_masks()?;
    let kind: PolicyKind = a.policy.parse()?;
    let stats = flipsearch::run_trials(&graph, &masks, kind, a.trials, seed(g))?;
    flipsearch::write_trials_csv(&stats, output(g.csv.as_deref())?)?;
    eprintln!("mean cut {:.6}, mean alpha {:.6}", stats.mean_cut, stats.mean_alpha);
    Ok(stats.records.iter().all(|r| r.converged))
}

fn optimize(g: &Global, a: &OptimizeArgs) -> Result<bool> {
    let graph = WeightedGraph::load(&a.graph)?;
    let ansatz = Ansatz::resolve(&a.ansatz_spec)?;
    let mut cfg = OptimizerConfig {
        seed: seed(g),
        restarts: g.restarts.unwrap_or(1),
        ..OptimizerConfig::default()
    };
    if let Some(p) = &g.config {
        let mut e = ExperimentConfig::new(ExperimentKind::DepthSweep, graph.n_vertices(), 1, cfg.seed);
        e.optimizer = cfg;
        e.apply_toml(&std::fs::read_to_string(p)?)?;
        cfg = OptimizerConfig {
            seed: g.seed.unwrap_or(e.seed),
            restarts: g.restarts.unwrap_or(e.optimizer.restarts),
            ..e.optimizer
        };
    }
    let runs = optimizer::optimize_ansatz(&graph, &ansatz, &cfg)?;
    optimizer::write_runs_csv(&runs, output(g.csv.as_deref())?)?;
    let mean = runs.iter().map(|r| r.alpha).sum::<f64>() / runs.len() as f64;
    eprintln!("mean alpha {mean:.6} over {} runs", runs.len());
    Ok(runs.iter().all(|r| r.converged_by.is_converged()))
}

fn gw(g: &Global, a: &GwArgs) -> Result<bool> {
    let graph = WeightedGraph::load(&a.graph)?;
    let cfg = GwConfig {
        rounding_trials: a.trials,
        seed: seed(g),
        ..GwConfig::default()
    };
    let res = gwbaseline::gw_maxcut(&graph, &cfg)?;
    let mut out = output(g.csv.as_deref())?;
    writeln!(out, "cut_hex,cut_value,relaxation,iterations,converged")?;
    writeln!(
        out,
        "{},{},{},{},{}",
        res.cut.to_hex(),
        fmt_sig17(res.value),
        fmt_sig17(res.relaxation),
        res.iterations,
        res.converged
    )?;
    out.flush()?;
    Ok(res.converged)
}
