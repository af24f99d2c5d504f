//! Reproducible Monte Carlo experiments.
//!
//! Replication `r` at grid value `v` always draws from the seed
//! `derive_seed(master_seed, (v << 32) | r)`, whatever the worker count or
//! the rest of the grid. Rows for a grid point are handed to the sink as soon
//! as that point finishes, so an interrupted run can be resumed by rerunning
//! the remaining grid values.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::attachment::{AttachmentSpec, StepSpec};
use crate::brw::{self, TailEstimate, TailSide};
use crate::constants::{LimitConstants, DEFAULT_TOL};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::oracle;
use crate::sarrd::{self, DepthStats};
use crate::stats::{StatAccumulator, StatSummary};
use crate::stream::mix64;

/// Seed of stream `stream_index` under `master_seed`.
///
/// Two xor-shift-multiply rounds over the 128-bit input; injective in the
/// index for a fixed master seed.
pub fn derive_seed(master_seed: u64, stream_index: u64) -> u64 {
    let key = mix64(master_seed ^ 0x243f_6a88_85a3_08d3);
    mix64(key ^ mix64(stream_index.wrapping_add(0x9e37_79b9_7f4a_7c15)))
}

pub fn dag_stream(n: u64, rep: u64) -> u64 {
    (n << 32) | (rep & 0xffff_ffff)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Convergence,
    BrwTails,
    OracleCheck,
}

impl ExperimentKind {
    pub fn name(&self) -> &'static str {
        match self {
            ExperimentKind::Convergence => "convergence",
            ExperimentKind::BrwTails => "brw_tails",
            ExperimentKind::OracleCheck => "oracle_check",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub attachment: Option<AttachmentSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step: Option<StepSpec>,
    pub k: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_grid: Option<Vec<u64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m_grid: Option<Vec<u32>>,
    pub replications: u64,
    pub master_seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_path: Option<PathBuf>,
    /// `None` picks the worker count automatically.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub worker_count: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub right_eps: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub left_eps: Option<f64>,
}

fn strictly_increasing<T: PartialOrd>(grid: &[T]) -> bool {
    !grid.is_empty() && grid.windows(2).all(|w| w[0] < w[1])
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.replications == 0 {
            return Err(Error::Domain("replications must be at least 1".into()));
        }
        if self.replications > u32::MAX as u64 {
            return Err(Error::Domain("replications must fit in 32 bits".into()));
        }
        if self.k == 0 {
            return Err(Error::Domain("k must be at least 1".into()));
        }
        match self.experiment {
            ExperimentKind::Convergence | ExperimentKind::OracleCheck => {
                let grid = self.n_grid.as_deref().unwrap_or_default();
                if !strictly_increasing(grid) {
                    return Err(Error::Domain("n_grid must be non-empty and strictly increasing".into()));
                }
                if self.experiment == ExperimentKind::Convergence && grid[0] < 2 {
                    return Err(Error::Domain("convergence grid values must be at least 2".into()));
                }
                if grid.iter().any(|&n| n > sarrd::MAX_NODES) {
                    return Err(Error::Capacity(format!("n_grid exceeds {} nodes", sarrd::MAX_NODES)));
                }
                self.attachment_spec().validate()
            }
            ExperimentKind::BrwTails => {
                if !strictly_increasing(self.m_grid.as_deref().unwrap_or_default()) {
                    return Err(Error::Domain("m_grid must be non-empty and strictly increasing".into()));
                }
                self.step_spec()?.validate()
            }
        }
    }

    pub fn attachment_spec(&self) -> AttachmentSpec {
        self.attachment.unwrap_or(AttachmentSpec::Uniform)
    }

    /// Step law: explicit, or induced by the attachment law.
    pub fn step_spec(&self) -> Result<StepSpec> {
        match (&self.step, &self.attachment) {
            (Some(s), _) => Ok(s.clone()),
            (None, Some(a)) => Ok(a.step_spec()),
            (None, None) => Err(Error::Spec("brw_tails needs a step or attachment spec".into())),
        }
    }

    pub fn execution(&self) -> Execution {
        Execution::from_workers(self.worker_count)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let config: ExperimentConfig = serde_json::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

/// One line of the results table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub experiment: String,
    pub n_or_m: u64,
    pub k: u32,
    pub spec: String,
    pub stat: String,
    pub count: u64,
    pub mean: f64,
    pub variance: f64,
    pub q05: Option<f64>,
    pub q25: Option<f64>,
    pub q50: Option<f64>,
    pub q75: Option<f64>,
    pub q95: Option<f64>,
    pub reference: Option<f64>,
}

pub const CSV_HEADER: &str =
    "experiment,n_or_m,k,spec,stat,count,mean,variance,q05,q25,q50,q75,q95,reference";

impl TableRow {
    fn from_summary(
        experiment: ExperimentKind,
        n_or_m: u64,
        k: u32,
        spec: &str,
        stat: &str,
        summary: &StatSummary,
        reference: Option<f64>,
    ) -> Self {
        let q = summary.quantiles;
        TableRow {
            experiment: experiment.name().to_string(),
            n_or_m,
            k,
            spec: spec.to_string(),
            stat: stat.to_string(),
            count: summary.count,
            mean: summary.mean,
            variance: summary.variance,
            q05: Some(q.q05),
            q25: Some(q.q25),
            q50: Some(q.q50),
            q75: Some(q.q75),
            q95: Some(q.q95),
            reference,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub constants: Option<LimitConstants>,
    pub rows: Vec<TableRow>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub right_tail: Option<TailEstimate>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub left_tail: Option<TailEstimate>,
}

impl ExperimentReport {
    /// Looks up the row for `(n_or_m, stat)`.
    pub fn row(&self, n_or_m: u64, stat: &str) -> Option<&TableRow> {
        self.rows.iter().find(|r| r.n_or_m == n_or_m && r.stat == stat)
    }
}

/// Runs the experiment the config names, passing each grid point's rows to `sink`.
pub fn run_experiment<F>(config: &ExperimentConfig, sink: F) -> Result<ExperimentReport>
where
    F: FnMut(&[TableRow]) -> Result<()>,
{
    config.validate()?;
    match config.experiment {
        ExperimentKind::Convergence => run_convergence(config, sink),
        ExperimentKind::OracleCheck => run_oracle_check(config, sink),
        ExperimentKind::BrwTails => run_brw_tails(config, sink),
    }
}

fn depth_replications(config: &ExperimentConfig, n: u64) -> Result<Vec<DepthStats>> {
    let spec = config.attachment_spec();
    let k = config.k;
    let seed = config.master_seed;
    config
        .execution()
        .map(config.replications as usize, |r| {
            sarrd::sample_stats(n, k, &spec, derive_seed(seed, dag_stream(n, r as u64)))
        })
        .into_iter()
        .collect()
}

/// Normalized depth statistics `D_n`, min-half and max depth over `log n` along the grid.
pub fn run_convergence<F>(config: &ExperimentConfig, mut sink: F) -> Result<ExperimentReport>
where
    F: FnMut(&[TableRow]) -> Result<()>,
{
    let spec = config.attachment_spec();
    let label = spec.label();
    let constants = LimitConstants::compute(&spec.step_spec(), config.k, DEFAULT_TOL)?;
    let max_reference = match spec {
        AttachmentSpec::Uniform => Some(config.k as f64 * std::f64::consts::E),
        AttachmentSpec::PowerTail { .. } => None,
    };
    let references = [
        ("dn_over_logn", constants.lambda_k),
        ("minhalf_over_logn", constants.min_depth_constant()),
        ("maxall_over_logn", max_reference),
    ];

    let mut rows = Vec::new();
    for &n in config.n_grid.as_deref().unwrap_or_default() {
        let stats = depth_replications(config, n)?;
        let log_n = (n as f64).ln();
        let mut accs: [StatAccumulator; 3] = Default::default();
        for s in &stats {
            accs[0].push(s.d_n as f64 / log_n);
            accs[1].push(s.min_half as f64 / log_n);
            accs[2].push(s.max_all as f64 / log_n);
        }
        let point: Vec<TableRow> = accs
            .iter()
            .zip(references)
            .map(|(acc, (stat, reference))| {
                TableRow::from_summary(config.experiment, n, config.k, &label, stat, &acc.summary(), reference)
            })
            .collect();
        sink(&point)?;
        rows.extend(point);
    }
    Ok(ExperimentReport { config: config.clone(), constants: Some(constants), rows, right_tail: None, left_tail: None })
}

/// Monte Carlo depth statistics next to the exact enumeration values.
pub fn run_oracle_check<F>(config: &ExperimentConfig, mut sink: F) -> Result<ExperimentReport>
where
    F: FnMut(&[TableRow]) -> Result<()>,
{
    if config.attachment_spec() != AttachmentSpec::Uniform {
        return Err(Error::Spec("the exact oracle covers uniform attachment only".into()));
    }
    let mut rows = Vec::new();
    for &n in config.n_grid.as_deref().unwrap_or_default() {
        let exact = oracle::exact_depths_with(n as u32, config.k, oracle::DEFAULT_BUDGET, config.execution())?;
        let stats = depth_replications(config, n)?;
        let mut accs: [StatAccumulator; 3] = Default::default();
        for s in &stats {
            accs[0].push(s.d_n as f64);
            accs[1].push(s.min_half as f64);
            accs[2].push(s.max_all as f64);
        }
        let references = [
            ("dn", exact.mean_dn_f64()),
            ("min_half", exact.mean_min_half_f64()),
            ("max_all", exact.mean_max_all_f64()),
        ];
        let point: Vec<TableRow> = accs
            .iter()
            .zip(references)
            .map(|(acc, (stat, reference))| {
                TableRow::from_summary(config.experiment, n, config.k, "uniform", stat, &acc.summary(), Some(reference))
            })
            .collect();
        sink(&point)?;
        rows.extend(point);
    }
    Ok(ExperimentReport { config: config.clone(), constants: None, rows, right_tail: None, left_tail: None })
}

/// Branching random walk minima and tail frequencies along the `m` grid.
///
/// Each level yields a `min_over_m` row (reference gamma) and one row per
/// requested tail side holding the hit frequency as its mean and the theory
/// rate as its reference.
pub fn run_brw_tails<F>(config: &ExperimentConfig, mut sink: F) -> Result<ExperimentReport>
where
    F: FnMut(&[TableRow]) -> Result<()>,
{
    let spec = config.step_spec()?;
    let k = config.k;
    let label = spec.label();
    let constants = LimitConstants::compute(&spec, k, DEFAULT_TOL)?;
    let sides: Vec<(TailSide, f64)> = [(TailSide::Right, config.right_eps), (TailSide::Left, config.left_eps)]
        .into_iter()
        .filter_map(|(side, eps)| eps.map(|e| (side, e)))
        .collect();
    let mut theory = Vec::new();
    for &(side, eps) in &sides {
        theory.push(brw::theory_rate(&spec, k, side, eps)?);
    }

    let mut rows = Vec::new();
    let mut levels = Vec::new();
    for &m in config.m_grid.as_deref().unwrap_or_default() {
        let minima =
            brw::sample_minima(&spec, k, m, config.replications, config.master_seed, config.execution())?;
        let summary = StatSummary::from_values(minima.iter().map(|v| v / m as f64));
        let mut point = vec![TableRow::from_summary(
            config.experiment,
            m as u64,
            k,
            &label,
            "min_over_m",
            &summary,
            Some(constants.gamma),
        )];
        for (&(side, eps), rate) in sides.iter().zip(&theory) {
            let threshold = brw::tail_threshold(constants.gamma, side, eps, m);
            let row = brw::tail_row(m, &minima, side, threshold);
            point.push(TableRow {
                experiment: config.experiment.name().to_string(),
                n_or_m: m as u64,
                k,
                spec: label.clone(),
                stat: match side {
                    TailSide::Right => "right_tail".to_string(),
                    TailSide::Left => "left_tail".to_string(),
                },
                count: row.reps,
                mean: row.p_hat,
                variance: row.p_hat * (1.0 - row.p_hat),
                q05: None,
                q25: None,
                q50: None,
                q75: None,
                q95: None,
                reference: *rate,
            });
        }
        sink(&point)?;
        rows.extend(point);
        levels.push((m, minima));
    }

    let mut report = ExperimentReport {
        config: config.clone(),
        constants: Some(constants),
        rows,
        right_tail: None,
        left_tail: None,
    };
    for &(side, eps) in &sides {
        let estimate = match brw::tail_from_minima(&spec, k, side, eps, &levels) {
            Ok(est) => est,
            Err(Error::Underpowered(est)) => *est,
            Err(e) => return Err(e),
        };
        match side {
            TailSide::Right => report.right_tail = Some(estimate),
            TailSide::Left => report.left_tail = Some(estimate),
        }
    }
    Ok(report)
}

/// Runs the experiment and writes the CSV table to `out`, flushing after every grid point.
pub fn write_csv<W: Write>(config: &ExperimentConfig, out: W) -> Result<ExperimentReport> {
    let mut writer = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    writer.write_record(CSV_HEADER.split(','))?;
    writer.flush()?;
    let report = run_experiment(config, |rows| {
        for row in rows {
            writer.serialize(row)?;
        }
        writer.flush()?;
        Ok(())
    })?;
    Ok(report)
}

/// CSV table as a string.
pub fn csv_string(config: &ExperimentConfig) -> Result<(String, ExperimentReport)> {
    let mut buf = Vec::new();
    let report = write_csv(config, &mut buf)?;
    Ok((String::from_utf8(buf).expect("csv output is utf-8"), report))
}

/// Writes the CSV table to `config.output_path`.
pub fn write_csv_file(config: &ExperimentConfig) -> Result<ExperimentReport> {
    let path = config
        .output_path
        .as_ref()
        .ok_or_else(|| Error::Spec("config has no output_path".into()))?;
    write_csv(config, BufWriter::new(File::create(path)?))
}
