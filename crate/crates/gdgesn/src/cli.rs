//! Command-line entry point: dataset generation, cross-validation,
//! grid sweeps, timing benchmarks, and dataset stats.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::evaluation_harness::{
    render_cv_report, render_sweep_csv, render_sweep_table, run_cv, run_sweep, CVProtocol,
    SweepGrid,
};
use crate::readout_classifier::{build_embedding, fit};
use crate::reservoir_encoder::{encode_graph, init_stack, EncoderConfig};
use crate::si_generator::{generate_dataset, SIConfig};
use crate::snapshot_merging::{merge_all_groups, WindowSchedule};
use crate::temporal_graph::{compute_stats, load_dataset, save_dataset, Dataset};

#[derive(Parser)]
#[command(
    name = "gdgesn",
    about = "Grouped dynamical graph echo state networks for dissemination process classification",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Cap the worker thread pool.
    #[arg(long, global = true)]
    jobs: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic SI dissemination dataset.
    Gen(GenArgs),
    /// Run cross-validation on a dataset.
    Cv(CvArgs),
    /// Sweep the layers-by-groups grid.
    Sweep(SweepArgs),
    /// Time the encoder and readout phases across datasets.
    Bench(BenchArgs),
    /// Print dataset statistics.
    Stats(StatsArgs),
}

#[derive(Args)]
struct GenArgs {
    /// Output directory for the dataset.
    #[arg(long)]
    out: PathBuf,
    /// Per-class infection probabilities, comma separated.
    #[arg(long, default_value = "0.2,0.8")]
    classes: String,
    #[arg(long, default_value_t = 100)]
    graphs_per_class: usize,
    #[arg(long, default_value_t = 60)]
    vertices: usize,
    #[arg(long, default_value_t = 50)]
    timesteps: usize,
    /// Per-pair per-step contact probability.
    #[arg(long, default_value_t = 0.05)]
    contact_prob: f64,
    #[arg(long, default_value_t = 1)]
    initial_infected: usize,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = "si-synthetic")]
    name: String,
}

#[derive(Args, Clone)]
struct EncoderArgs {
    #[arg(long, default_value_t = 10)]
    reservoir_size: usize,
    #[arg(long, default_value_t = 0.9)]
    spectral_radius: f64,
    #[arg(long, default_value_t = 0.1)]
    leaking_rate: f64,
    #[arg(long, default_value_t = 1.0)]
    input_scaling: f64,
    #[arg(long, default_value_t = 1.0)]
    density: f64,
    /// Ridge regularization factor.
    #[arg(long, default_value_t = 1e-3)]
    gamma: f64,
}

impl EncoderArgs {
    fn to_config(&self, num_layers: usize, num_groups: usize, seed: u64) -> EncoderConfig {
        EncoderConfig {
            reservoir_size: self.reservoir_size,
            spectral_radius_target: self.spectral_radius,
            leaking_rate: self.leaking_rate,
            input_scaling: self.input_scaling,
            reservoir_density: self.density,
            num_layers,
            num_groups,
            rng_seed: seed,
        }
    }
}

#[derive(Args)]
struct CvArgs {
    /// Dataset directory.
    #[arg(long)]
    data: PathBuf,
    /// Report output directory.
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    encoder: EncoderArgs,
    #[arg(long, default_value_t = 2)]
    layers: usize,
    #[arg(long, default_value_t = 3)]
    groups: usize,
    #[arg(long, default_value_t = 10)]
    folds: usize,
    #[arg(long, default_value_t = 20)]
    inits: usize,
    #[arg(long)]
    seed: Option<u64>,
    /// Skip the pre-partition shuffle.
    #[arg(long)]
    no_shuffle: bool,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    encoder: EncoderArgs,
    /// Layer counts to sweep, comma separated.
    #[arg(long, default_value = "1,2,3,4")]
    layers: String,
    /// Group counts to sweep, comma separated.
    #[arg(long, default_value = "1,2,3")]
    groups: String,
    #[arg(long, default_value_t = 10)]
    folds: usize,
    #[arg(long, default_value_t = 20)]
    inits: usize,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    no_shuffle: bool,
}

#[derive(Args)]
struct BenchArgs {
    /// One or more dataset directories.
    #[arg(long, required = true, num_args = 1..)]
    data: Vec<PathBuf>,
    /// Optional report output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    encoder: EncoderArgs,
    #[arg(long, default_value_t = 2)]
    layers: usize,
    #[arg(long, default_value_t = 3)]
    groups: usize,
    /// Timing repetitions; the minimum is reported.
    #[arg(long, default_value_t = 3)]
    reps: usize,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct StatsArgs {
    #[arg(long)]
    data: PathBuf,
}

/// Parse CLI args and dispatch; returns the process exit code.
pub fn run() -> i32 {
    let cli = Cli::parse();
    if let Some(jobs) = cli.jobs {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global();
    }
    let outcome = match cli.command {
        Command::Gen(args) => cmd_gen(args),
        Command::Cv(args) => cmd_cv(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Bench(args) => cmd_bench(args),
        Command::Stats(args) => cmd_stats(args),
    };
    match outcome {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

/// Resolve `--seed`, drawing and announcing a fresh one when omitted.
fn resolve_seed(seed: Option<u64>) -> u64 {
    match seed {
        Some(s) => s,
        None => {
            let s = rand::random::<u64>();
            println!("seed: {s} (pass --seed {s} to reproduce)");
            s
        }
    }
}

fn parse_list<T: std::str::FromStr>(raw: &str, what: &str) -> Result<Vec<T>> {
    raw.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<T>()
                .map_err(|_| Error::Parameter(format!("cannot parse {what} entry '{s}'")))
        })
        .collect()
}

fn write_report<T: Serialize>(dir: &Path, json_value: &T, text: &str) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let json_path = dir.join("report.json");
    let json = serde_json::to_string_pretty(json_value).expect("report serialization");
    fs::write(&json_path, json).map_err(|e| Error::io(&json_path, e))?;
    let text_path = dir.join("report.txt");
    fs::write(&text_path, text).map_err(|e| Error::io(&text_path, e))?;
    Ok(())
}

fn cmd_gen(args: GenArgs) -> Result<()> {
    let cfg = SIConfig {
        num_vertices: args.vertices,
        num_timesteps: args.timesteps,
        graphs_per_class: args.graphs_per_class,
        infection_probs: parse_list(&args.classes, "--classes")?,
        contact_prob: args.contact_prob,
        initial_infected: args.initial_infected,
        rng_seed: resolve_seed(args.seed),
        name: args.name,
    };
    let ds = generate_dataset(&cfg)?;
    save_dataset(&ds, &args.out)?;
    let mean_len =
        ds.graphs.iter().map(|g| g.num_steps()).sum::<usize>() as f64 / ds.num_graphs() as f64;
    println!(
        "wrote {} graphs ({} classes, {} vertices) to {}",
        ds.num_graphs(),
        ds.num_classes,
        ds.num_vertices,
        args.out.display()
    );
    println!(
        "mean sequence length {:.1}, total edges {}",
        mean_len,
        ds.total_edges()
    );
    Ok(())
}

fn cmd_cv(args: CvArgs) -> Result<()> {
    let ds = load_dataset(&args.data)?;
    let seed = resolve_seed(args.seed);
    let cfg = args.encoder.to_config(args.layers, args.groups, seed);
    let proto = CVProtocol {
        num_folds: args.folds,
        num_random_inits: args.inits,
        master_seed: seed,
        shuffle: !args.no_shuffle,
    };
    let report = run_cv(&ds, &cfg, args.encoder.gamma, &proto)?;
    let text = render_cv_report(&report);
    print!("{text}");
    write_report(&args.out, &report, &text)
}

fn cmd_sweep(args: SweepArgs) -> Result<()> {
    let ds = load_dataset(&args.data)?;
    let seed = resolve_seed(args.seed);
    let grid = SweepGrid {
        layers: parse_list(&args.layers, "--layers")?,
        groups: parse_list(&args.groups, "--groups")?,
    };
    let base_cfg = args.encoder.to_config(1, 1, seed);
    let proto = CVProtocol {
        num_folds: args.folds,
        num_random_inits: args.inits,
        master_seed: seed,
        shuffle: !args.no_shuffle,
    };
    let report = run_sweep(&ds, &base_cfg, args.encoder.gamma, &grid, &proto)?;
    let table = render_sweep_table(&report);
    print!("{table}");
    fs::create_dir_all(&args.out).map_err(|e| Error::io(&args.out, e))?;
    let csv_path = args.out.join("report.csv");
    fs::write(&csv_path, render_sweep_csv(&report)).map_err(|e| Error::io(&csv_path, e))?;
    write_report(&args.out, &report, &table)
}

#[derive(Serialize)]
struct BenchRow {
    dataset: String,
    num_graphs: usize,
    total_edges: u64,
    encode_secs: f64,
    readout_secs: f64,
}

#[derive(Serialize)]
struct BenchReport {
    config: EncoderConfig,
    reps: usize,
    rows: Vec<BenchRow>,
}

/// Measure encoder and readout wall time per dataset; the per-phase
/// minimum over `reps` repetitions is reported against total edge count.
fn cmd_bench(args: BenchArgs) -> Result<()> {
    if args.reps == 0 {
        return Err(Error::Parameter("--reps must be >= 1".into()));
    }
    let seed = resolve_seed(args.seed);
    let cfg = args.encoder.to_config(args.layers, args.groups, seed);
    let mut rows = Vec::new();
    for path in &args.data {
        let ds = load_dataset(path)?;
        rows.push(bench_dataset(&ds, &cfg, args.encoder.gamma, args.reps)?);
    }
    let mut text = format!(
        "{:<24}{:>12}{:>16}{:>16}\n",
        "dataset", "total_edges", "encode_secs", "readout_secs"
    );
    for r in &rows {
        text.push_str(&format!(
            "{:<24}{:>12}{:>16.4}{:>16.4}\n",
            r.dataset, r.total_edges, r.encode_secs, r.readout_secs
        ));
    }
    print!("{text}");
    let report = BenchReport {
        config: cfg,
        reps: args.reps,
        rows,
    };
    if let Some(out) = &args.out {
        write_report(out, &report, &text)?;
    }
    Ok(())
}

fn bench_dataset(ds: &Dataset, cfg: &EncoderConfig, gamma: f64, reps: usize) -> Result<BenchRow> {
    let sched = WindowSchedule::default_for_groups(cfg.num_groups)?;
    let views: Vec<_> = ds
        .graphs
        .iter()
        .map(|g| merge_all_groups(g, &sched))
        .collect::<Result<_>>()?;
    let stats = compute_stats(ds)?;
    let stack = init_stack(cfg, &stats)?;
    let labels: Vec<usize> = ds.graphs.iter().map(|g| g.label).collect();

    let mut encode_secs = f64::INFINITY;
    let mut embeddings = Vec::new();
    for _ in 0..reps {
        let start = Instant::now();
        embeddings = views
            .iter()
            .map(|v| build_embedding(&encode_graph(&stack, v)?))
            .collect::<Result<Vec<_>>>()?;
        encode_secs = encode_secs.min(start.elapsed().as_secs_f64());
    }

    let mut readout_secs = f64::INFINITY;
    for _ in 0..reps {
        let start = Instant::now();
        // Repeat the fit so sub-millisecond solves are measurable.
        for _ in 0..50 {
            fit(&embeddings, &labels, gamma, ds.num_classes)?;
        }
        readout_secs = readout_secs.min(start.elapsed().as_secs_f64() / 50.0);
    }

    Ok(BenchRow {
        dataset: ds.name.clone(),
        num_graphs: ds.num_graphs(),
        total_edges: stats.total_edges,
        encode_secs,
        readout_secs,
    })
}

fn cmd_stats(args: StatsArgs) -> Result<()> {
    let ds = load_dataset(&args.data)?;
    let stats = compute_stats(&ds)?;
    let mean_len =
        stats.graph_lengths.iter().sum::<usize>() as f64 / stats.graph_lengths.len() as f64;
    println!("dataset: {}", ds.name);
    println!("graphs: {}", ds.num_graphs());
    println!("vertices: {}", ds.num_vertices);
    println!("classes: {}", ds.num_classes);
    println!("mean sequence length: {mean_len:.1}");
    println!("total edges: {}", stats.total_edges);
    println!(
        "max adjacency spectral radius: {:.6}",
        stats.max_adjacency_spectral_radius
    );
    Ok(())
}
