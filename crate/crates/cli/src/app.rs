//! Argument parsing and subcommand dispatch for the `epp` binary.

use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use epp_core::generate::{fanout_free, random_dag, DagParams, TreeParams};
use epp_core::Netlist;
use rand_chacha::ChaCha8Rng;
use rand_core::SeedableRng;
use serde_json::json;

use crate::bench::{emit_bench, parse_bench};
use crate::commands;
use crate::config::{AggregationArg, ConfigFile, Format, Overrides, RunConfig, SpMethodArg};
use crate::report;
use crate::Failure;

#[derive(Debug, Parser)]
#[command(name = "epp", version, about = "Soft-error sensitization analysis for BENCH netlists")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Per-node error propagation probability and SER report.
    Analyze(RunArgs),
    /// Fault-injection simulation per site (exhaustive when --sp-method exact).
    Simulate(RunArgs),
    /// Analytical EPP against simulation, with accuracy and timing summaries.
    Compare(RunArgs),
    /// Signal probability of every net.
    Sp(RunArgs),
    /// Write a random BENCH circuit.
    Generate(GenerateArgs),
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// BENCH netlist to read.
    pub netlist: PathBuf,
    /// JSON run configuration; flags take precedence over its values.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Signal probability method [default: independent].
    #[arg(long, value_enum, value_name = "M")]
    pub sp_method: Option<SpMethodArg>,
    /// Random vectors for Monte Carlo stages [default: 10000; compare needs it explicitly].
    #[arg(long, value_name = "N")]
    pub vectors: Option<u64>,
    /// Seed for random vectors [default: 1].
    #[arg(long, value_name = "S")]
    pub seed: Option<u64>,
    /// Comma-separated error sites, or `all` [default: all].
    #[arg(long, value_name = "LIST", value_delimiter = ',')]
    pub sites: Option<Vec<String>>,
    /// Per-site sensitization: any capture point or the worst single one [default: any].
    #[arg(long, value_enum)]
    pub aggregation: Option<AggregationArg>,
    /// Output file [default: standard output]. Timings go to `<PATH>.timing.json`.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// Output format [default: csv].
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Worker threads [default: all cores].
    #[arg(long, value_name = "K")]
    pub jobs: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Shape {
    /// Fanout-free forest.
    Tree,
    /// DAG with reconvergent fanout.
    Dag,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(value_enum)]
    pub shape: Shape,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Circuit name written into the file header.
    #[arg(long, default_value = "generated")]
    pub name: String,
    /// Primary inputs (upper bound for trees).
    #[arg(long, default_value_t = 12)]
    pub inputs: usize,
    /// Logic gates (DAG only).
    #[arg(long, default_value_t = 40)]
    pub gates: usize,
    /// Flip-flops (DAG only).
    #[arg(long, default_value_t = 0)]
    pub dffs: usize,
    #[arg(long, default_value_t = 3)]
    pub max_fanin: usize,
    /// Tree depth bound.
    #[arg(long, default_value_t = 8)]
    pub depth: usize,
    /// Number of trees in a forest.
    #[arg(long, default_value_t = 2)]
    pub trees: usize,
    /// DAG locality: draw gate inputs from the last W nets.
    #[arg(long, value_name = "W")]
    pub window: Option<usize>,
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

pub fn read_netlist(path: &Path) -> Result<Netlist, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::Runtime(format!("cannot read {}: {e}", path.display())))?;
    let name = path.file_stem().and_then(|s| s.to_str()).unwrap_or("netlist");
    parse_bench(&text, name).map_err(|e| Failure::Runtime(format!("{}: {e}", path.display())))
}

fn sidecar(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn write_out(path: Option<&Path>, text: &str) -> Result<(), Failure> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| Failure::Runtime(format!("cannot write {}: {e}", p.display()))),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| Failure::Runtime(format!("cannot write output: {e}"))),
    }
}

fn write_timing(out: Option<&Path>, timing: serde_json::Value) -> Result<(), Failure> {
    eprintln!("timing: {timing}");
    match out {
        Some(p) => {
            let mut text = serde_json::to_string_pretty(&timing).expect("json values serialize");
            text.push('\n');
            write_out(Some(&sidecar(p, ".timing.json")), &text)
        }
        None => Ok(()),
    }
}

fn secs(d: Duration) -> f64 {
    d.as_secs_f64()
}

fn prepare(args: &RunArgs) -> Result<(Netlist, RunConfig), Failure> {
    let file = match &args.config {
        Some(p) => ConfigFile::load(p)?,
        None => ConfigFile::default(),
    };
    let flags = Overrides {
        sp_method: args.sp_method,
        aggregation: args.aggregation,
        vectors: args.vectors,
        seed: args.seed,
        sites: args.sites.clone(),
        format: args.format,
        jobs: args.jobs,
    };
    let netlist = read_netlist(&args.netlist)?;
    let cfg = RunConfig::resolve(&file, &flags, &netlist)?;
    Ok((netlist, cfg))
}

fn with_pool<T>(jobs: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T, Failure>
where
    T: Send,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.unwrap_or(0))
        .build()
        .map_err(|e| Failure::Runtime(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(f))
}

fn analyze(args: &RunArgs) -> Result<(), Failure> {
    let (netlist, cfg) = prepare(args)?;
    let a = with_pool(cfg.jobs, || commands::analyze(&netlist, &cfg))??;
    let text = match cfg.format {
        Format::Csv => report::ser_csv(&netlist, &a.report),
        Format::Json => report::ser_json(&netlist, &a.report, &a.sp),
    };
    write_out(args.out.as_deref(), &text)?;
    write_timing(
        args.out.as_deref(),
        json!({ "sp_seconds": secs(a.sp_time), "epp_seconds": secs(a.epp_time), "sites": a.epp.len() }),
    )
}

fn simulate(args: &RunArgs) -> Result<(), Failure> {
    let (netlist, cfg) = prepare(args)?;
    let s = with_pool(cfg.jobs, || commands::simulate(&netlist, &cfg))??;
    let seed = (commands::simulation_method(&cfg) == epp_core::SimMethod::MonteCarlo).then_some(cfg.seed);
    let text = match cfg.format {
        Format::Csv => report::sim_csv(&netlist, &s.results),
        Format::Json => report::sim_json(&netlist, &s.results, seed),
    };
    write_out(args.out.as_deref(), &text)?;
    write_timing(args.out.as_deref(), json!({ "simulation_seconds": secs(s.time), "sites": s.results.len() }))
}

fn compare(args: &RunArgs) -> Result<(), Failure> {
    let (netlist, cfg) = prepare(args)?;
    let c = with_pool(cfg.jobs, || commands::compare(&netlist, &cfg))??;
    let out = args.out.as_deref();
    match cfg.format {
        Format::Csv => {
            write_out(out, &report::compare_csv(&netlist, &c))?;
            let summary = report::compare_summary_json(&netlist, &c);
            match out {
                Some(p) => write_out(Some(&sidecar(p, ".summary.json")), &summary)?,
                None => eprint!("{summary}"),
            }
        }
        Format::Json => write_out(out, &report::compare_json(&netlist, &c))?,
    }
    let (a, s) = (secs(c.analytical_time), secs(c.simulation_time));
    let speedup = if a > 0.0 { Some(s / a) } else { None };
    write_timing(out, json!({ "analytical_seconds": a, "simulation_seconds": s, "speedup": speedup }))
}

fn sp(args: &RunArgs) -> Result<(), Failure> {
    let (netlist, cfg) = prepare(args)?;
    let sp = commands::compute_sp(&netlist, cfg.sp_method, &cfg)?;
    let text = match cfg.format {
        Format::Csv => report::sp_csv(&netlist, &sp),
        Format::Json => report::sp_json(&netlist, &sp),
    };
    write_out(args.out.as_deref(), &text)
}

fn generate(args: &GenerateArgs) -> Result<(), Failure> {
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let netlist = match args.shape {
        Shape::Tree => {
            let params =
                TreeParams { max_inputs: args.inputs, max_depth: args.depth, max_fanin: args.max_fanin, trees: args.trees };
            fanout_free(&mut rng, &args.name, &params)
        }
        Shape::Dag => {
            let params = DagParams {
                inputs: args.inputs,
                dffs: args.dffs,
                gates: args.gates,
                max_fanin: args.max_fanin,
                window: args.window,
                ..DagParams::default()
            };
            random_dag(&mut rng, &args.name, &params)
        }
    };
    write_out(args.out.as_deref(), &emit_bench(&netlist))
}

pub fn run(cli: &Cli) -> Result<(), Failure> {
    match &cli.command {
        Command::Analyze(a) => analyze(a),
        Command::Simulate(a) => simulate(a),
        Command::Compare(a) => compare(a),
        Command::Sp(a) => sp(a),
        Command::Generate(g) => generate(g),
    }
}
