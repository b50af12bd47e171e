//! Benchmark harness: run algorithms across seeds against a generator,
//! re-validate every output, and report cost ratios to a reference
//! optimum (the exact oracle on small instances, or the construction's
//! known optimum).

use anyhow::{anyhow, bail, Context, Result};
use clap::Args;
use mvdlib::corrclust::AgreementParams;
use mvdlib::instance::{DistanceMatrix, WeightedInstance};
use mvdlib::instances::{
    gen_hypercube, gen_random_metric_noise, gen_random_ultra_noise, gen_star, hypercube_base,
};
use mvdlib::oracle::{exact_mvd, exact_umvd, EXACT_MAX_N};
use mvdlib::pivot::{mvd_pivot, umvd_pivot, PivotSource};
use mvdlib::rounding::lp_ultra_repair;
use mvdlib::umvd_cc::umvd_constant;
use mvdlib::violations::{is_metric_with_tol, is_ultrametric, metric_violations};
use rayon::prelude::*;
use serde::Serialize;
use std::fs;
use std::path::PathBuf;
use std::time::Instant;

#[derive(Args)]
pub struct BenchArgs {
    /// Comma-separated algorithms: pivot-metric, pivot-ultra, cc-ultra,
    /// lp-ultra.
    #[arg(long, value_delimiter = ',')]
    algo: Vec<String>,
    /// Generator spec, e.g. `star:m=128`, `hypercube:d=4`,
    /// `random-ultra:n=6,levels=3,flip=0.1`, `random-metric:n=20,flip=0.05`.
    #[arg(long)]
    generator: String,
    /// Seed range `a..b` (half open) or comma list.
    #[arg(long, default_value = "0..10")]
    seeds: String,
    /// Run the exact oracle when n is at most this.
    #[arg(long, default_value_t = EXACT_MAX_N)]
    oracle_limit: usize,
    /// Write the JSON report here as well.
    #[arg(long)]
    json: Option<PathBuf>,
    /// Include wall-clock timings (makes reports nondeterministic).
    #[arg(long)]
    timings: bool,
    #[arg(long, default_value = "0.019")]
    eps: String,
    #[arg(long, default_value_t = 3.0)]
    k0: f64,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum BenchAlgo {
    PivotMetric,
    PivotUltra,
    CcUltra,
    LpUltra,
}

impl BenchAlgo {
    fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "pivot-metric" => Self::PivotMetric,
            "pivot-ultra" => Self::PivotUltra,
            "cc-ultra" => Self::CcUltra,
            "lp-ultra" => Self::LpUltra,
            other => bail!("unknown algorithm {other:?}"),
        })
    }

    fn name(self) -> &'static str {
        match self {
            Self::PivotMetric => "pivot-metric",
            Self::PivotUltra => "pivot-ultra",
            Self::CcUltra => "cc-ultra",
            Self::LpUltra => "lp-ultra",
        }
    }

    fn is_metric_mode(self) -> bool {
        matches!(self, Self::PivotMetric)
    }
}

#[derive(Clone)]
enum Generator {
    Star { m: usize },
    Hypercube { d: u32 },
    RandomUltra { n: usize, levels: usize, flip: f64 },
    RandomMetric { n: usize, flip: f64 },
}

impl Generator {
    fn parse(spec: &str) -> Result<Self> {
        let (name, rest) = spec.split_once(':').unwrap_or((spec, ""));
        let mut kv = std::collections::BTreeMap::new();
        for part in rest.split(',').filter(|p| !p.is_empty()) {
            let (k, v) = part
                .split_once('=')
                .with_context(|| format!("bad generator field {part:?}"))?;
            kv.insert(k.to_string(), v.to_string());
        }
        let get = |k: &str| -> Result<&String> {
            kv.get(k).ok_or_else(|| anyhow!("generator {name} needs {k}="))
        };
        Ok(match name {
            "star" => Generator::Star { m: get("m")?.parse()? },
            "hypercube" => Generator::Hypercube { d: get("d")?.parse()? },
            "random-ultra" => Generator::RandomUltra {
                n: get("n")?.parse()?,
                levels: kv.get("levels").map_or(Ok(3), |v| v.parse())?,
                flip: kv.get("flip").map_or(Ok(0.0), |v| v.parse())?,
            },
            "random-metric" => Generator::RandomMetric {
                n: get("n")?.parse()?,
                flip: kv.get("flip").map_or(Ok(0.0), |v| v.parse())?,
            },
            other => bail!("unknown generator {other:?}"),
        })
    }

    fn instance(&self, seed: u64) -> Result<DistanceMatrix> {
        Ok(match *self {
            Generator::Star { m } => gen_star(m),
            Generator::Hypercube { d } => gen_hypercube(d)?,
            Generator::RandomUltra { n, levels, flip } => {
                gen_random_ultra_noise(n, levels, flip, seed)?.0
            }
            Generator::RandomMetric { n, flip } => gen_random_metric_noise(n, flip, seed)?.0,
        })
    }

    /// A reference optimum that does not depend on the seed, when the
    /// construction pins one down.
    fn reference(&self, x: &DistanceMatrix) -> Result<Option<(f64, &'static str)>> {
        match *self {
            Generator::Star { .. } => {
                // Witness: setting the heavy chord to 2 yields a metric,
                // and the instance has at least one violated triangle.
                let mut y = x.clone();
                y.set(0, 1, 2.0);
                if !metric_violations(&y).is_empty() || metric_violations(x).is_empty() {
                    bail!("star witness check failed");
                }
                Ok(Some((1.0, "witness")))
            }
            Generator::Hypercube { d } => {
                let base = hypercube_base(d)?;
                if !is_ultrametric(&base) {
                    bail!("hypercube base is not an ultrametric");
                }
                let n = x.n() as f64;
                Ok(Some((n * d as f64 / 2.0, "noised-count")))
            }
            _ => Ok(None),
        }
    }
}

#[derive(Serialize)]
struct BenchRow {
    seed: u64,
    algo: &'static str,
    n: usize,
    cost: f64,
    valid: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    reference: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    reference_kind: Option<&'static str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    ratio: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    millis: Option<u128>,
}

#[derive(Serialize)]
struct AlgoSummary {
    algo: &'static str,
    runs: usize,
    mean_cost: f64,
    min_cost: f64,
    max_cost: f64,
    /// Half width of the 95% confidence interval of the mean cost.
    ci95: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    mean_ratio: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    min_ratio: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    max_ratio: Option<f64>,
    /// Histogram of per-pair modification counts (count -> pairs), from
    /// pivot traces.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    modification_histogram: Vec<(u32, u64)>,
}

#[derive(Serialize)]
struct BenchReport {
    generator: String,
    seeds: Vec<u64>,
    oracle_limit: usize,
    rows: Vec<BenchRow>,
    summaries: Vec<AlgoSummary>,
}

fn parse_seeds(spec: &str) -> Result<Vec<u64>> {
    if let Some((a, b)) = spec.split_once("..") {
        let a: u64 = a.parse().context("bad seed range start")?;
        let b: u64 = b.parse().context("bad seed range end")?;
        if a >= b {
            bail!("empty seed range {spec}");
        }
        return Ok((a..b).collect());
    }
    spec.split(',')
        .map(|t| t.parse().with_context(|| format!("bad seed {t:?}")))
        .collect()
}

pub fn run(args: BenchArgs, _global_seed: u64) -> Result<i32> {
    let algos: Vec<BenchAlgo> = args
        .algo
        .iter()
        .map(|s| BenchAlgo::parse(s))
        .collect::<Result<_>>()?;
    if algos.is_empty() {
        bail!("pass at least one --algo");
    }
    let generator = Generator::parse(&args.generator)?;
    let seeds = parse_seeds(&args.seeds)?;
    let eps = AgreementParams::from_decimal_str(&args.eps)?;
    let k0 = args.k0;
    let timings = args.timings;
    let oracle_limit = args.oracle_limit.min(EXACT_MAX_N);

    let mut jobs: Vec<(u64, BenchAlgo)> = Vec::new();
    for &seed in &seeds {
        for &algo in &algos {
            jobs.push((seed, algo));
        }
    }

    let results: Result<Vec<(BenchRow, Vec<u32>)>> = jobs
        .par_iter()
        .map(|&(seed, algo)| run_one(&generator, seed, algo, &eps, k0, oracle_limit, timings))
        .collect();
    let mut results = results?;
    results.sort_by_key(|(row, _)| (row.seed, row.algo));

    let mut any_invalid = false;
    let mut rows = Vec::with_capacity(results.len());
    let mut summaries = Vec::new();
    for &algo in &algos {
        let mut costs = Vec::new();
        let mut ratios = Vec::new();
        let mut histogram: std::collections::BTreeMap<u32, u64> = Default::default();
        for (row, counts) in results.iter().filter(|(r, _)| r.algo == algo.name()) {
            costs.push(row.cost);
            if let Some(r) = row.ratio {
                ratios.push(r);
            }
            if !row.valid {
                any_invalid = true;
            }
            for &c in counts {
                *histogram.entry(c).or_default() += 1;
            }
        }
        let runs = costs.len();
        let mean = costs.iter().sum::<f64>() / runs.max(1) as f64;
        let var = if runs > 1 {
            costs.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / (runs - 1) as f64
        } else {
            0.0
        };
        let ci95 = 1.96 * (var / runs.max(1) as f64).sqrt();
        let fold =
            |it: &[f64], f: fn(f64, f64) -> f64, init: f64| it.iter().copied().fold(init, f);
        summaries.push(AlgoSummary {
            algo: algo.name(),
            runs,
            mean_cost: mean,
            min_cost: fold(&costs, f64::min, f64::INFINITY),
            max_cost: fold(&costs, f64::max, f64::NEG_INFINITY),
            ci95,
            mean_ratio: (!ratios.is_empty())
                .then(|| ratios.iter().sum::<f64>() / ratios.len() as f64),
            min_ratio: (!ratios.is_empty()).then(|| fold(&ratios, f64::min, f64::INFINITY)),
            max_ratio: (!ratios.is_empty()).then(|| fold(&ratios, f64::max, f64::NEG_INFINITY)),
            modification_histogram: histogram.into_iter().collect(),
        });
    }
    rows.extend(results.into_iter().map(|(row, _)| row));

    let report = BenchReport {
        generator: args.generator.clone(),
        seeds,
        oracle_limit,
        rows,
        summaries,
    };

    // Aligned text table.
    println!("generator {}", report.generator);
    println!(
        "{:<14} {:>6} {:>12} {:>12} {:>12} {:>10} {:>10} {:>10}",
        "algo", "runs", "mean-cost", "min-cost", "max-cost", "ci95", "mean-rat", "max-rat"
    );
    for s in &report.summaries {
        println!(
            "{:<14} {:>6} {:>12.4} {:>12.4} {:>12.4} {:>10.4} {:>10} {:>10}",
            s.algo,
            s.runs,
            s.mean_cost,
            s.min_cost,
            s.max_cost,
            s.ci95,
            s.mean_ratio.map_or("-".into(), |r| format!("{r:.4}")),
            s.max_ratio.map_or("-".into(), |r| format!("{r:.4}")),
        );
    }

    let json = serde_json::to_string_pretty(&report)?;
    if let Some(path) = &args.json {
        fs::write(path, &json)?;
    } else {
        println!("{json}");
    }
    Ok(if any_invalid { 2 } else { 0 })
}

fn run_one(
    generator: &Generator,
    seed: u64,
    algo: BenchAlgo,
    eps: &AgreementParams,
    k0: f64,
    oracle_limit: usize,
    timings: bool,
) -> Result<(BenchRow, Vec<u32>)> {
    let x = generator.instance(seed)?;
    let inst = WeightedInstance::unit(x.clone());
    let start = Instant::now();
    let result = match algo {
        BenchAlgo::PivotMetric => mvd_pivot(&x, &PivotSource::Seeded(seed), true)?,
        BenchAlgo::PivotUltra => umvd_pivot(&x, &PivotSource::Seeded(seed), true)?,
        BenchAlgo::CcUltra => umvd_constant(&inst, eps),
        BenchAlgo::LpUltra => lp_ultra_repair(&inst, k0, false)?.0,
    };
    let millis = start.elapsed().as_millis();

    // Every benchmark row re-validates the output before recording cost.
    let valid = if algo.is_metric_mode() {
        is_metric_with_tol(&result.output, 1e-9)
    } else {
        is_ultrametric(&result.output)
    };

    let (reference, reference_kind) = match generator.reference(&x)? {
        Some((v, kind)) => (Some(v), Some(kind)),
        None if x.n() <= oracle_limit => {
            let cost = if algo.is_metric_mode() {
                exact_mvd(&x)?.cost
            } else {
                exact_umvd(&x)?.cost
            };
            (Some(cost as f64), Some("oracle"))
        }
        None => (None, None),
    };
    let ratio = reference.and_then(|r| (r > 0.0).then(|| result.cost / r));

    let counts = result
        .trace
        .as_ref()
        .map(|t| t.modification_counts(x.n()))
        .unwrap_or_default();

    Ok((
        BenchRow {
            seed,
            algo: algo.name(),
            n: x.n(),
            cost: result.cost,
            valid,
            reference,
            reference_kind,
            ratio,
            millis: timings.then_some(millis),
        },
        counts,
    ))
}
