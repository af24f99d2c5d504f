//! `dagdepth`: batch front end for depth, BRW and constants experiments.
//!
//! Results go to stdout (JSON by default, CSV with `--format csv`) and
//! diagnostics to stderr. Exit codes: 0 success, 1 domain, spec or usage
//! error, 2 budget or capacity error, 3 underpowered tail estimate.

mod args;

use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use args::{Dist, Grid};
use dagdepth_core::brw::{self, SearchOptions};
use dagdepth_core::constants::DEFAULT_TOL;
use dagdepth_core::harness::{self, dag_stream, ExperimentConfig, ExperimentKind};
use dagdepth_core::{oracle, sarrd, Error, Execution, LimitConstants, Result, TailSide};

const WORKERS_ENV: &str = "DAGDEPTH_WORKERS";

#[derive(Parser, Debug)]
#[command(name = "dagdepth", version, about = "Depths of scaled-attachment random recursive DAGs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Print the limit constants lambda_k, gamma and beta.
    Constants(ConstantsArgs),
    /// Sample DAG depth statistics.
    SimulateDag(SimulateDagArgs),
    /// Sample branching random walk minima.
    SimulateBrw(SimulateBrwArgs),
    /// Estimate a BRW tail rate along an m grid.
    Tails(TailsArgs),
    /// Exact depth statistics of small uniform DAGs by enumeration.
    Oracle(OracleArgs),
    /// Normalized depth statistics along an n grid.
    Convergence(ConvergenceArgs),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum)]
enum Format {
    #[default]
    Json,
    Csv,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Side {
    Right,
    Left,
}

#[derive(Args, Debug)]
struct Common {
    /// Number of parents per node (branching factor of the walk).
    #[arg(long, default_value_t = 2)]
    k: u32,
    /// uniform | power:ALPHA | exp:RATE | lattice:FILE
    #[arg(long, default_value = "uniform")]
    dist: Dist,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Args, Debug)]
struct Sampling {
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value_t = 100)]
    reps: u64,
    /// Worker threads; 0 or 1 runs sequentially. Overridden by DAGDEPTH_WORKERS.
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Args, Debug)]
struct ConstantsArgs {
    #[command(flatten)]
    common: Common,
    /// Root-finding tolerance, in (0, 1e-4].
    #[arg(long, default_value_t = DEFAULT_TOL)]
    tol: f64,
}

#[derive(Args, Debug)]
struct SimulateDagArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    sampling: Sampling,
    /// Node counts: N, "a,b,c" or "a:b:xSTEP".
    #[arg(long)]
    n: Grid,
    /// Write the depth profile of replication 0 at the first n to this file.
    #[arg(long)]
    dump: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SimulateBrwArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    sampling: Sampling,
    /// Generations: M, "a,b,c" or "a:b:xSTEP".
    #[arg(long)]
    m: Grid,
    /// Report a minimizing word for each replication.
    #[arg(long)]
    witness: bool,
    /// Visit every node instead of pruning by the running minimum.
    #[arg(long)]
    no_prune: bool,
}

#[derive(Args, Debug)]
struct TailsArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    sampling: Sampling,
    #[arg(long, default_value = "8,12,16,20")]
    m: Grid,
    #[arg(long, value_enum, default_value_t = Side::Right)]
    side: Side,
    /// Offset from gamma of the tail level.
    #[arg(long, default_value_t = 0.05)]
    eps: f64,
    /// Run the experiment described by a JSON config instead of the flags above.
    #[arg(long, conflicts_with_all = ["k", "dist", "seed", "reps", "m", "side", "eps"])]
    config: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct OracleArgs {
    #[arg(long)]
    n: Grid,
    #[arg(long, default_value_t = 2)]
    k: u32,
    /// Largest number of parent configurations to enumerate.
    #[arg(long, default_value_t = oracle::DEFAULT_BUDGET)]
    budget: u128,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Args, Debug)]
struct ConvergenceArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    sampling: Sampling,
    #[arg(long, default_value = "1000:1000000:x10")]
    n: Grid,
    /// Also stream the CSV table to this file, one grid point at a time.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Run the experiment described by a JSON config instead of the flags above.
    #[arg(long, conflicts_with_all = ["k", "dist", "seed", "reps", "n", "output"])]
    config: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let mut out = io::stdout().lock();
    let outcome = dispatch(cli.command, &mut out).and_then(|code| {
        out.flush()?;
        Ok(code)
    });
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn workers(flag: Option<usize>) -> Result<Option<usize>> {
    match std::env::var(WORKERS_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| Error::Domain(format!("{WORKERS_ENV} must be a non-negative integer, got `{v}`"))),
        Err(_) => Ok(flag),
    }
}

fn write_json<W: Write, T: Serialize>(out: &mut W, value: &T) -> Result<()> {
    serde_json::to_writer_pretty(&mut *out, value)?;
    writeln!(out)?;
    Ok(())
}

fn write_csv_rows<W: Write, T: Serialize>(out: &mut W, rows: &[T]) -> Result<()> {
    let mut writer = csv::Writer::from_writer(out);
    for row in rows {
        writer.serialize(row)?;
    }
    writer.flush()?;
    Ok(())
}

fn emit<W: Write, T: Serialize, R: Serialize>(out: &mut W, format: Format, json: &T, rows: &[R]) -> Result<()> {
    match format {
        Format::Json => write_json(out, json),
        Format::Csv => write_csv_rows(out, rows),
    }
}

fn dispatch<W: Write>(command: Command, out: &mut W) -> Result<u8> {
    match command {
        Command::Constants(a) => constants(a, out),
        Command::SimulateDag(a) => simulate_dag(a, out),
        Command::SimulateBrw(a) => simulate_brw(a, out),
        Command::Tails(a) => tails(a, out),
        Command::Oracle(a) => run_oracle(a, out),
        Command::Convergence(a) => convergence(a, out),
    }
}

fn constants<W: Write>(a: ConstantsArgs, out: &mut W) -> Result<u8> {
    let spec = a.common.dist.step()?;
    let c = LimitConstants::compute(&spec, a.common.k, a.tol)?;
    if c.lambda_k.is_none() {
        eprintln!("note: rate(1/z) stays below log k for every z; lambda_k is infinite");
    }
    emit(out, a.common.format, &c, std::slice::from_ref(&c))?;
    Ok(0)
}

#[derive(Serialize)]
struct DagRecord {
    n: u64,
    rep: u64,
    seed: u64,
    d_n: u32,
    min_half: u32,
    max_all: u32,
}

#[derive(Serialize)]
struct DagReport {
    k: u32,
    spec: String,
    master_seed: u64,
    results: Vec<DagRecord>,
}

fn simulate_dag<W: Write>(a: SimulateDagArgs, out: &mut W) -> Result<u8> {
    let spec = a.common.dist.attachment()?;
    let k = a.common.k;
    let master = a.sampling.seed;
    let exec = Execution::from_workers(workers(a.sampling.workers)?);
    if let Some(path) = &a.dump {
        let n = a.n.0[0];
        let profile = sarrd::generate_depths(n, k, &spec, harness::derive_seed(master, dag_stream(n, 0)), false)?;
        profile.write_depths(io::BufWriter::new(std::fs::File::create(path)?))?;
        eprintln!("wrote depth profile of n = {n} to {}", path.display());
    }
    let mut results = Vec::new();
    for &n in &a.n.0 {
        let stats = exec.map(a.sampling.reps as usize, |r| {
            let seed = harness::derive_seed(master, dag_stream(n, r as u64));
            sarrd::sample_stats(n, k, &spec, seed).map(|s| DagRecord {
                n,
                rep: r as u64,
                seed,
                d_n: s.d_n,
                min_half: s.min_half,
                max_all: s.max_all,
            })
        });
        for s in stats {
            results.push(s?);
        }
    }
    let report = DagReport { k, spec: spec.label(), master_seed: master, results };
    emit(out, a.common.format, &report, &report.results)?;
    Ok(0)
}

#[derive(Serialize)]
struct BrwRecord {
    m: u32,
    rep: u64,
    seed: u64,
    min_value: f64,
    min_over_m: f64,
    nodes_visited: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    witness: Option<String>,
}

#[derive(Serialize)]
struct BrwReport {
    k: u32,
    spec: String,
    master_seed: u64,
    gamma: f64,
    results: Vec<BrwRecord>,
}

fn simulate_brw<W: Write>(a: SimulateBrwArgs, out: &mut W) -> Result<u8> {
    let spec = a.common.dist.step()?;
    let k = a.common.k;
    let master = a.sampling.seed;
    let exec = Execution::from_workers(workers(a.sampling.workers)?);
    let opts = SearchOptions { prune: !a.no_prune, witness: a.witness, ..Default::default() };
    let gamma = dagdepth_core::constants::gamma(&spec, k, DEFAULT_TOL)?;
    let mut results = Vec::new();
    for m in a.m.as_u32()? {
        let runs = exec.map(a.sampling.reps as usize, |r| {
            let seed = harness::derive_seed(master, brw::replication_stream(m, r as u64));
            brw::simulate_min_with(&spec, k, m, seed, opts).map(|res| BrwRecord {
                m,
                rep: r as u64,
                seed,
                min_value: res.min_value,
                min_over_m: if m == 0 { 0.0 } else { res.min_value / m as f64 },
                nodes_visited: res.nodes_visited,
                witness: res
                    .witness
                    .map(|w| w.iter().map(|l| l.to_string()).collect::<Vec<_>>().join(" ")),
            })
        });
        for run in runs {
            results.push(run?);
        }
    }
    let report = BrwReport { k, spec: spec.label(), master_seed: master, gamma, results };
    emit(out, a.common.format, &report, &report.results)?;
    Ok(0)
}

fn run_config<W: Write>(mut config: ExperimentConfig, flag_workers: Option<usize>, format: Format, out: &mut W) -> Result<harness::ExperimentReport> {
    if let Some(w) = workers(flag_workers)? {
        config.worker_count = Some(w);
    }
    config.validate()?;
    if let Some(path) = &config.output_path {
        eprintln!("streaming table to {}", path.display());
    }
    let report = match (format, &config.output_path) {
        (Format::Csv, _) => harness::write_csv(&config, &mut *out)?,
        (Format::Json, Some(_)) => harness::write_csv_file(&config)?,
        (Format::Json, None) => harness::run_experiment(&config, |_| Ok(()))?,
    };
    if format == Format::Json {
        write_json(out, &report)?;
    }
    Ok(report)
}

fn tails<W: Write>(a: TailsArgs, out: &mut W) -> Result<u8> {
    let config = match &a.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => {
            let (right_eps, left_eps) = match a.side {
                Side::Right => (Some(a.eps), None),
                Side::Left => (None, Some(a.eps)),
            };
            ExperimentConfig {
                experiment: ExperimentKind::BrwTails,
                attachment: None,
                step: Some(a.common.dist.step()?),
                k: a.common.k,
                n_grid: None,
                m_grid: Some(a.m.as_u32()?),
                replications: a.sampling.reps,
                master_seed: a.sampling.seed,
                output_path: None,
                worker_count: a.sampling.workers,
                right_eps,
                left_eps,
            }
        }
    };
    let report = run_config(config, a.sampling.workers, a.common.format, out)?;
    let mut code = 0;
    for (side, estimate) in [(TailSide::Right, &report.right_tail), (TailSide::Left, &report.left_tail)] {
        let Some(est) = estimate else { continue };
        match (est.fitted_rate, est.theory_rate) {
            (Some(fit), Some(theory)) => eprintln!("{side:?} tail: fitted rate {fit:.4}, theory {theory:.4}"),
            (Some(fit), None) => eprintln!("{side:?} tail: fitted rate {fit:.4}"),
            (None, _) => {
                eprintln!("{side:?} tail: {}", Error::Underpowered(Box::new(est.clone())));
                code = 3;
            }
        }
    }
    Ok(code)
}

#[derive(Serialize)]
struct OracleRow {
    n: u32,
    k: u32,
    mean_dn: String,
    mean_min_half: String,
    mean_max_all: String,
    mean_dn_real: f64,
    mean_min_half_real: f64,
    mean_max_all_real: f64,
    configs_enumerated: String,
}

fn run_oracle<W: Write>(a: OracleArgs, out: &mut W) -> Result<u8> {
    let exec = Execution::from_workers(workers(a.workers)?);
    let results = a
        .n
        .as_u32()?
        .into_iter()
        .map(|n| oracle::exact_depths_with(n, a.k, a.budget, exec))
        .collect::<Result<Vec<_>>>()?;
    let rows: Vec<OracleRow> = results
        .iter()
        .map(|r| OracleRow {
            n: r.n,
            k: r.k,
            mean_dn: r.mean_dn.to_string(),
            mean_min_half: r.mean_min_half.to_string(),
            mean_max_all: r.mean_max_all.to_string(),
            mean_dn_real: r.mean_dn_f64(),
            mean_min_half_real: r.mean_min_half_f64(),
            mean_max_all_real: r.mean_max_all_f64(),
            configs_enumerated: r.configs_enumerated.to_string(),
        })
        .collect();
    match (a.format, results.as_slice()) {
        (Format::Json, [single]) => write_json(out, single)?,
        (Format::Json, many) => write_json(out, &many)?,
        (Format::Csv, _) => write_csv_rows(out, &rows)?,
    }
    Ok(0)
}

fn convergence<W: Write>(a: ConvergenceArgs, out: &mut W) -> Result<u8> {
    let config = match &a.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig {
            experiment: ExperimentKind::Convergence,
            attachment: Some(a.common.dist.attachment()?),
            step: None,
            k: a.common.k,
            n_grid: Some(a.n.0.clone()),
            m_grid: None,
            replications: a.sampling.reps,
            master_seed: a.sampling.seed,
            output_path: a.output.clone(),
            worker_count: a.sampling.workers,
            right_eps: None,
            left_eps: None,
        },
    };
    run_config(config, a.sampling.workers, a.common.format, out)?;
    Ok(0)
}
