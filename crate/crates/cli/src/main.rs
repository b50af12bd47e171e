//! `mvdlib` command line: validate and repair instances, run the exact
//! oracle, generate benchmark inputs, cluster signed graphs, and measure
//! empirical approximation ratios.

mod bench;
mod external;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use mvdlib::corrclust::{
    agreement_cluster, cc_cost, is_everywhere_dense, AgreementParams, VertexOrder,
};
use mvdlib::instance::{DistanceMatrix, RepairResult, WeightedInstance};
use mvdlib::io::{
    parse_instance_str, parse_signed_graph_str, write_instance_string, write_signed_graph_string,
};
use mvdlib::lp::{build_lp, BuiltinSolver, LpSolver};
use mvdlib::oracle::{exact_mvd, exact_umvd};
use mvdlib::pivot::{mvd_pivot, umvd_pivot, PivotSource};
use mvdlib::rounding::hierarchical_cluster;
use mvdlib::umvd_cc::umvd_constant;
use mvdlib::violations::{
    is_metric_with_tol, is_ultrametric, metric_violations, ultrametric_violations,
};
use std::fs;
use std::path::{Path, PathBuf};

#[derive(Parser)]
#[command(name = "mvdlib", version, about = "Repair noisy distances into metrics and ultrametrics under the l0 objective")]
struct Cli {
    /// Seed for randomized algorithms.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Absolute tolerance for l0 equality comparisons.
    #[arg(long, global = true, default_value_t = 0.0)]
    eq_tol: f64,
    /// Worker threads for the benchmark harness (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Parse an instance and report whether it is a metric / ultrametric.
    Validate {
        file: PathBuf,
    },
    /// Repair an instance with one of the approximation algorithms.
    Repair(RepairArgs),
    /// Exact minimum repair for tiny instances.
    Oracle {
        #[arg(long, value_enum)]
        mode: OracleMode,
        file: PathBuf,
        /// Write the witness instance here (default: stdout).
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Machine-readable summary.
        #[arg(long)]
        json: bool,
    },
    /// Generate benchmark instances.
    #[command(subcommand)]
    Gen(GenCmd),
    /// Agreement correlation clustering of a signed instance.
    Cc {
        file: PathBuf,
        /// Agreement tolerance as a decimal (exact rational), e.g. 0.019.
        #[arg(long, default_value = "0.019")]
        eps: String,
        /// `natural` or a path to a whitespace-separated vertex order.
        #[arg(long, default_value = "natural")]
        order: String,
        #[arg(long)]
        json: bool,
    },
    /// Run an algorithm across seeds and report cost ratios.
    Bench(bench::BenchArgs),
}

#[derive(Args)]
struct RepairArgs {
    file: PathBuf,
    #[arg(long, value_enum)]
    algo: Algo,
    /// Explicit pivot sequence file (whitespace-separated indices).
    #[arg(long)]
    pivots: Option<PathBuf>,
    /// Write the per-iteration pivot trace as JSON lines.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Agreement tolerance for cc-ultra, e.g. 0.019.
    #[arg(long, default_value = "0.019")]
    eps: String,
    /// Region-growing constant for lp-ultra.
    #[arg(long, default_value_t = 3.0)]
    k0: f64,
    /// LP solver: `builtin` or `external:<command>`.
    #[arg(long, default_value = "builtin")]
    solver: String,
    /// Skip the built-in LP size guard.
    #[arg(long)]
    force: bool,
    /// Write the repaired instance here (default: stdout).
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// Machine-readable summary.
    #[arg(long)]
    json: bool,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum Algo {
    PivotMetric,
    PivotUltra,
    CcUltra,
    LpUltra,
}

impl Algo {
    fn name(self) -> &'static str {
        match self {
            Algo::PivotMetric => "pivot-metric",
            Algo::PivotUltra => "pivot-ultra",
            Algo::CcUltra => "cc-ultra",
            Algo::LpUltra => "lp-ultra",
        }
    }
}

#[derive(Copy, Clone, ValueEnum)]
enum OracleMode {
    Metric,
    Ultra,
}

#[derive(Subcommand)]
enum GenCmd {
    /// Star instance: m spokes, one heavy chord, optimum 1.
    Star {
        #[arg(long)]
        m: usize,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Noised hypercube of depth d (pass --base for the clean tree).
    Hypercube {
        #[arg(long)]
        d: u32,
        #[arg(long)]
        base: bool,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Random noised ultrametric.
    RandomUltra {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 3)]
        levels: usize,
        #[arg(long, default_value_t = 0.0)]
        flip: f64,
        #[arg(long)]
        seed: Option<u64>,
        /// Also write the clean ground truth here.
        #[arg(long)]
        truth: Option<PathBuf>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Random noised Euclidean metric.
    RandomMetric {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0.0)]
        flip: f64,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        truth: Option<PathBuf>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Planted signed graph: + cliques of the given sizes, flips optional.
    PlantedCc {
        /// Comma-separated group sizes, e.g. 20,20,20.
        #[arg(long, value_delimiter = ',')]
        sizes: Vec<usize>,
        #[arg(long, default_value_t = 0.0)]
        flip: f64,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

/// Exit code for an algorithm whose own output fails validation.
const EXIT_INVALID_OUTPUT: i32 = 2;

fn main() {
    let cli = Cli::parse();
    if let Some(t) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .ok();
    }
    match run(cli) {
        Ok(code) => std::process::exit(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            std::process::exit(1);
        }
    }
}

fn read_instance(path: &Path) -> Result<WeightedInstance> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))?;
    Ok(parse_instance_str(&text)?)
}

fn emit(text: &str, output: Option<&Path>) -> Result<()> {
    match output {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display()))?,
        None => print!("{text}"),
    }
    Ok(())
}

fn run(cli: Cli) -> Result<i32> {
    match cli.cmd {
        Cmd::Validate { file } => {
            let inst = read_instance(&file)?;
            let x = inst.distances();
            let mv = metric_violations(x).len();
            let uv = ultrametric_violations(x).len();
            println!("n {}", inst.n());
            println!("metric {}", if mv == 0 { "yes" } else { "no" });
            println!("metric-violations {mv}");
            println!("ultrametric {}", if uv == 0 { "yes" } else { "no" });
            println!("ultrametric-violations {uv}");
            Ok(0)
        }
        Cmd::Repair(args) => repair(args, cli.seed, cli.eq_tol),
        Cmd::Oracle { mode, file, output, json } => {
            let inst = read_instance(&file)?;
            let repair = match mode {
                OracleMode::Metric => exact_mvd(inst.distances())?,
                OracleMode::Ultra => exact_umvd(inst.distances())?,
            };
            if json {
                let summary = serde_json::json!({
                    "cost": repair.cost,
                    "hitting_set": repair.hitting_set,
                });
                println!("{}", serde_json::to_string_pretty(&summary)?);
            } else {
                println!("cost {}", repair.cost);
                let set: Vec<String> = repair
                    .hitting_set
                    .iter()
                    .map(|(i, j)| format!("{i}-{j}"))
                    .collect();
                println!("hitting-set {}", set.join(" "));
            }
            let witness = WeightedInstance::unit(repair.witness);
            emit(&write_instance_string(&witness), output.as_deref())?;
            Ok(0)
        }
        Cmd::Gen(gen) => generate(gen, cli.seed),
        Cmd::Cc { file, eps, order, json } => {
            let text = fs::read_to_string(&file)?;
            let g = parse_signed_graph_str(&text)?;
            let params = AgreementParams::from_decimal_str(&eps)?;
            let order = parse_order(&order, g.n())?;
            let clustering = agreement_cluster(&g, &params, &order);
            let cost = cc_cost(&g, &clustering);
            if json {
                let summary = serde_json::json!({
                    "clusters": clustering.clusters,
                    "cost": cost,
                    "everywhere_dense": clustering
                        .clusters
                        .iter()
                        .all(|c| is_everywhere_dense(c, &g)),
                });
                println!("{}", serde_json::to_string_pretty(&summary)?);
            } else {
                for (idx, members) in clustering.clusters.iter().enumerate() {
                    let members: Vec<String> =
                        members.iter().map(ToString::to_string).collect();
                    println!("cluster {idx}: {}", members.join(" "));
                }
                println!("cost {cost}");
            }
            Ok(0)
        }
        Cmd::Bench(args) => bench::run(args, cli.seed),
    }
}

fn parse_order(spec: &str, n: usize) -> Result<VertexOrder> {
    if spec == "natural" {
        return Ok(VertexOrder::Natural);
    }
    let text = fs::read_to_string(spec).with_context(|| format!("reading order file {spec}"))?;
    let order: Vec<usize> = text
        .split_whitespace()
        .map(|t| t.parse().map_err(|_| anyhow!("bad vertex index {t:?}")))
        .collect::<Result<_>>()?;
    if order.len() != n {
        bail!("order file lists {} vertices, instance has {n}", order.len());
    }
    Ok(VertexOrder::Custom(order))
}

fn load_pivots(path: &Path) -> Result<Vec<usize>> {
    let text = fs::read_to_string(path)?;
    text.split_whitespace()
        .map(|t| t.parse().map_err(|_| anyhow!("bad pivot index {t:?}")))
        .collect()
}

fn repair(args: RepairArgs, seed: u64, eq_tol: f64) -> Result<i32> {
    let inst = read_instance(&args.file)?;
    let source = match &args.pivots {
        Some(path) => PivotSource::Explicit(load_pivots(path)?),
        None => PivotSource::Seeded(seed),
    };
    let want_trace = args.trace.is_some();

    let result: RepairResult = match args.algo {
        Algo::PivotMetric => mvd_pivot(inst.distances(), &source, want_trace)?,
        Algo::PivotUltra => umvd_pivot(inst.distances(), &source, want_trace)?,
        Algo::CcUltra => {
            let params = AgreementParams::from_decimal_str(&args.eps)?;
            umvd_constant(&inst, &params)
        }
        Algo::LpUltra => {
            let lp = build_lp(&inst);
            let sol = if let Some(cmd) = args.solver.strip_prefix("external:") {
                external::ExternalCommandSolver::new(cmd).solve(&lp)?
            } else if args.solver == "builtin" {
                BuiltinSolver { force: args.force }.solve(&lp)?
            } else {
                bail!("unknown solver {:?}", args.solver);
            };
            hierarchical_cluster(&inst, &sol, args.k0)?
        }
    };

    // An invalid output is a correctness bug, reported with exit code 2.
    let valid = match args.algo {
        Algo::PivotMetric => is_metric_with_tol(&result.output, 1e-9),
        _ => is_ultrametric(&result.output),
    };

    if let Some(path) = &args.trace {
        let trace = result
            .trace
            .as_ref()
            .ok_or_else(|| anyhow!("trace requested but not produced"))?;
        let mut lines = String::new();
        for step in &trace.steps {
            lines.push_str(&serde_json::to_string(step)?);
            lines.push('\n');
        }
        fs::write(path, lines)?;
    }

    let cost = mvdlib::l0_cost(&inst, &result.output, eq_tol)?;
    if args.json {
        let summary = serde_json::json!({
            "algo": args.algo.name(),
            "n": inst.n(),
            "cost": cost,
            "modified_pairs": result.modified_pairs.len(),
            "valid": valid,
        });
        println!("{}", serde_json::to_string_pretty(&summary)?);
    } else {
        println!("algo {}", args.algo.name());
        println!("cost {cost}");
        println!("modified {}", result.modified_pairs.len());
        println!("valid {}", if valid { "yes" } else { "no" });
    }
    let out = WeightedInstance::new(result.output, inst.weights().to_vec())?;
    emit(&write_instance_string(&out), args.output.as_deref())?;
    Ok(if valid { 0 } else { EXIT_INVALID_OUTPUT })
}

fn generate(gen: GenCmd, global_seed: u64) -> Result<i32> {
    use mvdlib::instances::*;
    let write_matrix = |x: DistanceMatrix, out: Option<&Path>| -> Result<()> {
        emit(&write_instance_string(&WeightedInstance::unit(x)), out)
    };
    match gen {
        GenCmd::Star { m, output } => write_matrix(gen_star(m), output.as_deref())?,
        GenCmd::Hypercube { d, base, output } => {
            let x = if base {
                hypercube_base(d)?
            } else {
                gen_hypercube(d)?
            };
            write_matrix(x, output.as_deref())?;
        }
        GenCmd::RandomUltra { n, levels, flip, seed, truth, output } => {
            let (noised, clean) =
                gen_random_ultra_noise(n, levels, flip, seed.unwrap_or(global_seed))?;
            if let Some(p) = truth {
                write_matrix(clean, Some(&p))?;
            }
            write_matrix(noised, output.as_deref())?;
        }
        GenCmd::RandomMetric { n, flip, seed, truth, output } => {
            let (noised, clean) = gen_random_metric_noise(n, flip, seed.unwrap_or(global_seed))?;
            if let Some(p) = truth {
                write_matrix(clean, Some(&p))?;
            }
            write_matrix(noised, output.as_deref())?;
        }
        GenCmd::PlantedCc { sizes, flip, seed, output } => {
            let (g, _) = gen_planted_cc(&sizes, flip, seed.unwrap_or(global_seed))?;
            emit(&write_signed_graph_string(&g), output.as_deref())?;
        }
    }
    Ok(0)
}
