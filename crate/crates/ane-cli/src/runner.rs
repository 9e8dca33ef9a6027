//! Run execution: resolve a configuration, drive the core loops, and write
//! the artifact set (report, checkpoint, mesh/partition dumps, loss trace).

use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{Context, Result};

use ane_core::driver::{
    amr_integration, ane_fixed_mesh, ane_full, fixed_network, initial_model, Clock, RunReport,
};
use ane_core::optimize::adam_train;
use ane_core::partition::build_partition;
use ane_core::quadrature::{discrete_norm, QuadMesh};
use ane_core::targets::{BuiltTarget, TargetRegistry};
use ane_core::TargetFn;

use crate::config::{Mode, RunConfig};
use crate::io;

/// Monotonic wall clock for run records.
#[derive(Debug, Clone, Copy)]
pub struct SystemClock {
    origin: Instant,
}

impl SystemClock {
    pub fn new() -> Self {
        Self { origin: Instant::now() }
    }
}

impl Default for SystemClock {
    fn default() -> Self {
        Self::new()
    }
}

impl Clock for SystemClock {
    fn now_secs(&self) -> f64 {
        self.origin.elapsed().as_secs_f64()
    }
}

/// Outcome of an executed run, for exit-code decisions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    ToleranceMet,
    ToleranceNotMet,
}

pub fn build_target(cfg: &RunConfig) -> Result<BuiltTarget> {
    let registry = TargetRegistry::with_builtins();
    let built = registry
        .build(&cfg.target.name, &cfg.target_params())
        .map_err(|e| anyhow::anyhow!("config key `target.name`: {e}"))?;
    Ok(built)
}

fn write_run_artifacts(
    out_dir: &Path,
    report: &RunReport,
    f: &TargetFn,
) -> Result<()> {
    io::write_report_csv(&out_dir.join("report.csv"), report)?;
    io::save_checkpoint(&out_dir.join("model.txt"), &report.model)?;
    io::write_mesh_csv(&out_dir.join("mesh.csv"), &report.mesh)?;
    let partition = build_partition(&report.model, &report.mesh, f)
        .map_err(|e| anyhow::anyhow!("partition dump failed: {e}"))?;
    io::write_partition_csv(&out_dir.join("partition.csv"), &partition)?;
    io::write_trace_csv(&out_dir.join("loss_trace.csv"), &report.loss_trace)?;
    Ok(())
}

/// Execute a parsed run configuration, writing artifacts into `out_dir`.
pub fn execute(cfg: &RunConfig, out_dir: &Path) -> Result<Outcome> {
    let built = build_target(cfg)?;
    let dim = built.spec.dimension;
    let clock = SystemClock::new();
    let ane = cfg
        .ane_config(dim)
        .map_err(|e| anyhow::anyhow!("invalid configuration: {e}"))?;
    ane.validate()
        .map_err(|e| anyhow::anyhow!("invalid configuration: {e}"))?;

    let report = match cfg.mode {
        Mode::AneFixed => {
            let mesh = QuadMesh::uniform(built.spec.domain.clone(), &ane.initial_mesh_counts)
                .map_err(|e| anyhow::anyhow!("config key `initial_mesh`: {e}"))?;
            ane_fixed_mesh(&built.f, &mesh, &ane, &clock)
                .map_err(|e| anyhow::anyhow!("run failed: {e}"))?
        }
        Mode::AneFull => ane_full(&built.f, &ane, &built.spec.domain, &clock)
            .map_err(|e| anyhow::anyhow!("run failed: {e}"))?,
        Mode::FixedNetwork => {
            let mesh = QuadMesh::uniform(built.spec.domain.clone(), &ane.initial_mesh_counts)
                .map_err(|e| anyhow::anyhow!("config key `initial_mesh`: {e}"))?;
            let neurons = cfg.neurons.expect("validated");
            fixed_network(&built.f, &mesh, neurons, cfg.epsilon, &ane.train, &clock)
                .map_err(|e| anyhow::anyhow!("run failed: {e}"))?
        }
        Mode::AmrOnly => {
            let mesh = QuadMesh::uniform(built.spec.domain.clone(), &ane.initial_mesh_counts)
                .map_err(|e| anyhow::anyhow!("config key `initial_mesh`: {e}"))?;
            let model = initial_model(&built.f, &mesh, ane.initial_m0)
                .map_err(|e| anyhow::anyhow!("initialization failed: {e}"))?;
            let trained = adam_train(&model, &mesh, &built.f, &ane.train)
                .map_err(|e| anyhow::anyhow!("training failed: {e}"))?;
            let amr = amr_integration(&built.f, &trained.model, &mesh, &ane.amr, &ane.train)
                .map_err(|e| anyhow::anyhow!("mesh adaptation failed: {e}"))?;
            io::write_amr_csv(&out_dir.join("amr_history.csv"), &amr.history)?;
            // synthesize a single-record report for the artifact set
            let f_norm = discrete_norm(&amr.mesh, |x| built.f.eval(x))
                .map_err(|e| anyhow::anyhow!("run failed: {e}"))?;
            let partition = build_partition(&amr.model, &amr.mesh, &built.f)
                .map_err(|e| anyhow::anyhow!("run failed: {e}"))?;
            let xi = partition.total_sq.sqrt() / f_norm;
            let record = ane_core::driver::IterRecord {
                outer: 1,
                neurons: amr.model.n_neurons(),
                parameters: amr.model.parameter_count(),
                mesh_cells: amr.mesh.n_cells(),
                train_loss: amr.history.iter().rev().find(|r| r.accepted).map(|r| r.eta)
                    .unwrap_or(trained.final_loss),
                estimator: xi,
                marked: 0,
                wall_time_secs: clock.now_secs(),
            };
            RunReport {
                records: vec![record],
                tolerance_met: xi < cfg.epsilon,
                model: amr.model,
                mesh: amr.mesh,
                loss_trace: trained.loss_trace,
            }
        }
    };

    write_run_artifacts(out_dir, &report, &built.f)?;
    let last = report.records.last().context("run produced no records")?;
    println!(
        "{}: {} outer iteration(s), {} neurons, estimator {:.6e} (target {:.e}), artifacts in {}",
        match report.tolerance_met {
            true => "tolerance met",
            false => "tolerance NOT met",
        },
        report.records.len(),
        last.neurons,
        last.estimator,
        cfg.epsilon,
        out_dir.display()
    );
    Ok(if report.tolerance_met { Outcome::ToleranceMet } else { Outcome::ToleranceNotMet })
}

/// Relative discrete error of a model against a target on a fresh uniform
/// evaluation mesh.
pub fn eval_accuracy(
    model: &ane_core::ReluModel,
    f: &TargetFn,
    domain: &ane_core::Domain,
    counts: &[usize],
) -> Result<f64> {
    let mesh = QuadMesh::uniform(domain.clone(), counts)
        .map_err(|e| anyhow::anyhow!("invalid evaluation mesh: {e}"))?;
    let err = discrete_norm(&mesh, |x| f.eval(x) - model.evaluate(x).unwrap_or(f64::NAN))
        .map_err(|e| anyhow::anyhow!("evaluation failed: {e}"))?;
    let f_norm = discrete_norm(&mesh, |x| f.eval(x))
        .map_err(|e| anyhow::anyhow!("evaluation failed: {e}"))?;
    anyhow::ensure!(f_norm > 0.0, "target has zero norm on the evaluation mesh");
    Ok(err / f_norm)
}

/// `eval` subcommand: load a checkpoint and report its test accuracy.
pub fn evaluate_checkpoint(
    cfg: &RunConfig,
    checkpoint: &Path,
    mesh_counts: Option<Vec<usize>>,
    out_dir: &Path,
) -> Result<f64> {
    let built = build_target(cfg)?;
    let model = io::load_checkpoint(checkpoint)?;
    anyhow::ensure!(
        model.dim() == built.spec.dimension,
        "checkpoint dimension {} does not match target dimension {}",
        model.dim(),
        built.spec.dimension
    );
    let counts = mesh_counts.unwrap_or_else(|| cfg.eval_mesh_counts(built.spec.dimension));
    let acc = eval_accuracy(&model, &built.f, &built.spec.domain, &counts)?;
    let rows = vec![vec![
        built.spec.name.clone(),
        model.n_neurons().to_string(),
        counts.iter().map(ToString::to_string).collect::<Vec<_>>().join("x"),
        acc.to_string(),
    ]];
    io::write_table_csv(&out_dir.join("eval.csv"), "target,neurons,mesh,rel_error", &rows)?;
    println!("test accuracy (relative l2): {acc:.6e}");
    Ok(acc)
}

/// Resolve the output directory: CLI flag wins, then the config file, then
/// a default under the current directory.
pub fn resolve_out_dir(cli: Option<PathBuf>, cfg: &RunConfig) -> PathBuf {
    cli.or_else(|| cfg.out_dir.clone()).unwrap_or_else(|| PathBuf::from("ane-out"))
}
