use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use netred_core::matrixeq::SingularOptions;
use netred_core::network::{benchmark_system, BenchmarkConfig};
use netred_core::pipeline::{PhaseTimings, Reducer, Strategy};
use netred_core::reduce::ErrorVariant;
use netred_core::sys2::SecondOrderNetwork;
use serde::Serialize;

use crate::error::{CliError, CliResult};
use crate::files::{read_json, read_network, write_json, write_text, NetworkFile, PartitionFile};
use crate::tree;
use crate::{
    Common, DendrogramArgs, GenerateArgs, ReduceArgs, StrategyName, SweepArgs, TreeFormat,
    ValidateArgs, Variant,
};

fn reducer(common: &Common, sys: SecondOrderNetwork) -> CliResult<Reducer> {
    let mut options = SingularOptions::default();
    if let Some(tol) = common.tol {
        if !(tol > 0.0 && tol.is_finite()) {
            return Err(CliError::Usage(format!(
                "--tol must be positive, got {tol}"
            )));
        }
        options.consistency_rtol = tol;
    }
    Ok(Reducer::with_options(
        sys,
        ErrorVariant::from(common.variant),
        options,
    )?)
}

fn check_order(r: usize, n: usize) -> CliResult<()> {
    if r == 0 || r > n {
        return Err(CliError::Usage(format!(
            "reduced order {r} is outside 1..={n}"
        )));
    }
    Ok(())
}

fn millis(d: Duration) -> f64 {
    d.as_secs_f64() * 1e3
}

fn variant_name(v: Variant) -> &'static str {
    match v {
        Variant::Position => "position",
        Variant::Velocity => "velocity",
    }
}

fn strategy_for(name: StrategyName, seed: u64) -> Strategy {
    match name {
        StrategyName::Hierarchical => Strategy::Hierarchical,
        StrategyName::Random => Strategy::Random { seed },
        StrategyName::Greedy => Strategy::Greedy,
    }
}

pub fn generate(common: &Common, args: &GenerateArgs) -> CliResult<ExitCode> {
    let cfg = BenchmarkConfig {
        inputs: args.inputs,
        k: args.k,
        beta: args.beta,
        alpha: args.alpha,
        weight_range: (args.weight_min, args.weight_max),
    };
    let sys = benchmark_system(args.n, &cfg, common.seed)?;
    write_json(&args.out, &NetworkFile::from_system(&sys)?)?;
    println!(
        "seed {} n {} inputs {} k {} beta {} alpha {} weights [{}, {}] -> {}",
        common.seed,
        args.n,
        args.inputs,
        args.k,
        args.beta,
        args.alpha,
        args.weight_min,
        args.weight_max,
        args.out.display()
    );
    Ok(ExitCode::SUCCESS)
}

#[derive(Serialize)]
struct TimingReport {
    gramian: f64,
    dissimilarity: f64,
    clustering: f64,
    projection: f64,
    error: f64,
    total: f64,
}

impl From<PhaseTimings> for TimingReport {
    fn from(t: PhaseTimings) -> Self {
        TimingReport {
            gramian: millis(t.gramian),
            dissimilarity: millis(t.dissimilarity),
            clustering: millis(t.clustering),
            projection: millis(t.projection),
            error: millis(t.error),
            total: millis(t.total()),
        }
    }
}

#[derive(Serialize)]
struct ReduceReport {
    n: usize,
    r: usize,
    strategy: String,
    variant: &'static str,
    seed: Option<u64>,
    error_h2: f64,
    timings_ms: TimingReport,
}

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

pub fn reduce(common: &Common, args: &ReduceArgs) -> CliResult<ExitCode> {
    let sys = read_network(&args.network)?;
    let n = sys.n();
    let forced = match &args.partition {
        Some(path) => Some(read_json::<PartitionFile>(path)?.to_partition(path)?),
        None => None,
    };
    let r = match (&forced, args.r) {
        (Some(p), Some(r)) if p.cluster_count() != r => {
            return Err(CliError::Usage(format!(
                "--r {r} disagrees with the {} clusters of the partition file",
                p.cluster_count()
            )));
        }
        (Some(p), _) => p.cluster_count(),
        (None, Some(r)) => r,
        (None, None) => return Err(CliError::Usage("--r or --partition is required".into())),
    };
    check_order(r, n)?;
    if let Some(p) = &forced {
        if p.vertex_count() != n {
            return Err(CliError::Validation(format!(
                "partition covers {} vertices, network has {n}",
                p.vertex_count()
            )));
        }
    }

    let reducer = reducer(common, sys)?;
    let (outcome, strategy, seed) = match forced {
        Some(p) => (
            reducer.reduce_with_partition(p)?,
            "partition".to_string(),
            None,
        ),
        None => {
            let s = strategy_for(args.strategy, common.seed);
            let seed = matches!(s, Strategy::Random { .. }).then_some(common.seed);
            (reducer.reduce(r, s)?, s.name().to_string(), seed)
        }
    };

    write_json(
        &with_suffix(&args.out, ".network.json"),
        &NetworkFile::from_system(outcome.reduced.system())?,
    )?;
    write_json(
        &with_suffix(&args.out, ".partition.json"),
        &PartitionFile::from_partition(&outcome.partition),
    )?;
    let report = ReduceReport {
        n,
        r,
        strategy,
        variant: variant_name(common.variant),
        seed,
        error_h2: outcome.error_h2,
        timings_ms: outcome.timings.into(),
    };
    write_json(&with_suffix(&args.out, ".report.json"), &report)?;
    println!(
        "n {n} -> r {r}, H2 error {:e}, {:.3} ms",
        outcome.error_h2,
        millis(outcome.timings.total())
    );
    Ok(ExitCode::SUCCESS)
}

/// Seed of the `trial`-th random clustering at order `r`.
fn trial_seed(base: u64, r: usize, trial: usize) -> u64 {
    base.wrapping_add((r as u64) << 32)
        .wrapping_add(trial as u64)
}

pub fn sweep(common: &Common, args: &SweepArgs) -> CliResult<ExitCode> {
    let sys = read_network(&args.network)?;
    let n = sys.n();
    for &r in &args.r {
        check_order(r, n)?;
    }
    let reducer = reducer(common, sys)?;
    let mut out = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| CliError::Usage(format!("cannot format CSV: {e}"));
    out.write_record(["strategy", "r", "trial", "seed", "error_h2", "wall_ms"])
        .map_err(csv_err)?;
    for &r in &args.r {
        for &name in &args.strategies {
            let trials = if name == StrategyName::Random {
                args.trials
            } else {
                1
            };
            for trial in 0..trials {
                let seed =
                    (name == StrategyName::Random).then(|| trial_seed(common.seed, r, trial));
                let strategy = strategy_for(name, seed.unwrap_or(0));
                let start = Instant::now();
                let outcome = reducer.reduce(r, strategy)?;
                let wall = millis(start.elapsed());
                out.write_record([
                    strategy.name().to_string(),
                    r.to_string(),
                    trial.to_string(),
                    seed.map(|s| s.to_string()).unwrap_or_default(),
                    format!("{:.16e}", outcome.error_h2),
                    format!("{wall:.16e}"),
                ])
                .map_err(csv_err)?;
            }
        }
    }
    let bytes = out
        .into_inner()
        .map_err(|e| CliError::Usage(format!("cannot format CSV: {e}")))?;
    write_text(
        &args.out,
        &String::from_utf8(bytes).expect("CSV fields are ASCII"),
    )?;
    println!(
        "{} orders, {} strategies -> {}",
        args.r.len(),
        args.strategies.len(),
        args.out.display()
    );
    Ok(ExitCode::SUCCESS)
}

pub fn dendrogram(common: &Common, args: &DendrogramArgs) -> CliResult<ExitCode> {
    let sys = read_network(&args.network)?;
    let tree = reducer(common, sys)?.dendrogram()?;
    let text = match args.format {
        TreeFormat::Newick => tree::newick(&tree),
        TreeFormat::Dot => tree::dot(&tree),
    };
    write_text(&args.out, &text)?;
    Ok(ExitCode::SUCCESS)
}

pub fn validate(args: &ValidateArgs) -> CliResult<ExitCode> {
    let raw = read_json::<NetworkFile>(&args.network)?.to_raw(&args.network)?;
    match netred_core::sys2::validate(raw.masses, raw.d, raw.l, raw.f) {
        Ok(_) => {
            println!("pass");
            Ok(ExitCode::SUCCESS)
        }
        Err(netred_core::Error::Validation(violations)) => {
            for v in &violations {
                println!("fail [{}] {v}", v.clause().label());
            }
            Ok(CliError::Validation(String::new()).exit_code())
        }
        Err(e) => Err(e.into()),
    }
}
