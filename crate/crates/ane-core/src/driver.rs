//! Adaptive run orchestration.
//!
//! Three loops are provided:
//!
//! - [`ane_fixed_mesh`] — grow the network on a fixed quadrature mesh until
//!   the relative estimator drops below tolerance;
//! - [`amr_integration`] — refine the quadrature mesh for a fixed network
//!   while each refinement still improves the discrete residual by the
//!   `gamma2` factor (a refinement that fails the test is discarded);
//! - [`ane_full`] — the combined loop: train, adapt the mesh, retrain on
//!   the adapted mesh, estimate, enhance.
//!
//! Wall time enters only through the [`Clock`] trait so that runs driven by
//! [`NullClock`] are bit-reproducible.

use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::enhance::{
    self, EnhancementPlan, GrowthHistory, InitMode,
};
use crate::error::{Error, Result};
use crate::linsolve;
use crate::math::{self, KahanSum};
use crate::network::ReluModel;
use crate::optimize::{adam_train, TrainConfig};
use crate::partition::{build_partition, PhysicalPartition};
use crate::quadrature::{discrete_norm, QuadMesh};
use crate::targets::TargetFn;

/// Wall-clock source for run records.
pub trait Clock {
    fn now_secs(&self) -> f64;
}

/// Clock that always reads zero; makes reports reproducible in tests.
#[derive(Debug, Clone, Copy, Default)]
pub struct NullClock;

impl Clock for NullClock {
    fn now_secs(&self) -> f64 {
        0.0
    }
}

/// How new neurons are chosen when the network grows.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Enhancement {
    /// One neuron per element with an above-average indicator.
    LocalAverage,
    /// One neuron per element of the minimal set carrying a `gamma1`
    /// fraction of the squared error.
    LocalBulk { gamma1: f64 },
    /// Size the next network from the estimator history and add the new
    /// neurons uniformly or at random.
    Global { alpha2: f64, init: GlobalInit },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GlobalInit {
    Uniform,
    Random,
}

/// Output weights of a grown network: re-solve the Gram system for all of
/// them, or keep the old ones and start the new neurons at zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputInit {
    Resolve,
    Zero,
}

/// Cell-marking rule for quadrature refinement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AmrMarking {
    Average,
    Bulk { gamma1: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct AmrConfig {
    /// A refinement is kept only if it shrinks the residual estimator to
    /// `gamma2` times the previous value or less.
    pub gamma2: f64,
    pub marking: AmrMarking,
    /// Hard cap on the cell count; exceeding it is an error.
    pub max_cells: usize,
}

impl Default for AmrConfig {
    fn default() -> Self {
        Self { gamma2: 0.9, marking: AmrMarking::Average, max_cells: 4_000_000 }
    }
}

/// Settings for the adaptive loops.
#[derive(Debug, Clone, PartialEq)]
pub struct AneConfig {
    /// Target relative accuracy `‖f - v‖_T / ‖f‖_T`.
    pub epsilon: f64,
    pub enhancement: Enhancement,
    pub output_init: OutputInit,
    /// The initial network carries `m0 + 1` uniform hinges per axis.
    pub initial_m0: usize,
    pub initial_mesh_counts: Vec<usize>,
    pub amr: AmrConfig,
    pub train: TrainConfig,
    pub max_outer_iters: usize,
    /// Optional hard cap on the network size; growth is truncated at the
    /// cap and the run stops there.
    pub max_neurons: Option<usize>,
}

impl AneConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0) {
            return Err(Error::invalid("epsilon must be positive"));
        }
        if !(self.amr.gamma2 > 0.0 && self.amr.gamma2 < 1.0) {
            return Err(Error::invalid("gamma2 must lie in (0, 1)"));
        }
        if let Enhancement::LocalBulk { gamma1 } = self.enhancement {
            if !(gamma1 > 0.0 && gamma1 < 1.0) {
                return Err(Error::invalid("gamma1 must lie in (0, 1)"));
            }
        }
        if let Enhancement::Global { alpha2, .. } = self.enhancement {
            if !(alpha2 > 0.0) {
                return Err(Error::invalid("alpha2 must be positive"));
            }
        }
        if let AmrMarking::Bulk { gamma1 } = self.amr.marking {
            if !(gamma1 > 0.0 && gamma1 < 1.0) {
                return Err(Error::invalid("amr gamma1 must lie in (0, 1)"));
            }
        }
        if self.max_outer_iters == 0 {
            return Err(Error::invalid("max_outer_iters must be at least 1"));
        }
        if self.initial_mesh_counts.is_empty() {
            return Err(Error::invalid("initial_mesh_counts must not be empty"));
        }
        self.train.validate()
    }
}

/// One row of a run report.
#[derive(Debug, Clone, PartialEq)]
pub struct IterRecord {
    pub outer: usize,
    pub neurons: usize,
    pub parameters: usize,
    pub mesh_cells: usize,
    pub train_loss: f64,
    pub estimator: f64,
    pub marked: usize,
    pub wall_time_secs: f64,
}

/// Full outcome of an adaptive run.
#[derive(Debug, Clone)]
pub struct RunReport {
    pub records: Vec<IterRecord>,
    pub tolerance_met: bool,
    pub model: ReluModel,
    pub mesh: QuadMesh,
    /// Cumulative `(iteration, loss)` samples across the training phases of
    /// the outer loop.
    pub loss_trace: Vec<(usize, f64)>,
}

/// One quadrature-adaptation step of [`amr_integration`].
#[derive(Debug, Clone, PartialEq)]
pub struct AmrRecord {
    pub pass: usize,
    pub cells: usize,
    pub eta: f64,
    pub accepted: bool,
}

/// Outcome of [`amr_integration`]: the accepted mesh, the model retrained
/// on it, and the per-pass history (the final rejected probe included).
#[derive(Debug, Clone)]
pub struct AmrOutcome {
    pub mesh: QuadMesh,
    pub model: ReluModel,
    pub refinements: usize,
    pub history: Vec<AmrRecord>,
}

/// Uniform hinges plus a Gram solve for the output weights: the starting
/// model of every adaptive run.
pub fn initial_model(f: &TargetFn, mesh: &QuadMesh, m0: usize) -> Result<ReluModel> {
    let dim = mesh.dim();
    let neurons = enhance::init_uniform(m0, mesh.domain(), dim);
    let n = neurons.len();
    let mut model = ReluModel::new(dim, 0.0, alloc::vec![0.0; n], neurons)?;
    linsolve::refit_output_weights(&mut model, mesh, f)?;
    Ok(model)
}

/// Per-cell residual indicators `|f - v|(x_T) · sqrt(|T|)` and their root
/// sum of squares (which equals the discrete residual norm).
fn cell_indicators(model: &ReluModel, mesh: &QuadMesh, f: &TargetFn) -> (Vec<f64>, f64) {
    let mut values = Vec::with_capacity(mesh.n_cells());
    let mut total = KahanSum::new();
    for cell in mesh.cells() {
        let r = f.eval(&cell.center) - model.eval_unchecked(&cell.center);
        let sq = r * r * cell.volume();
        total.add(sq);
        values.push(math::sqrt(math::clamp_nonneg(sq)));
    }
    (values, math::sqrt(math::clamp_nonneg(total.value())))
}

struct EnhanceStep {
    marked: usize,
    grew: bool,
}

/// Grow the network once according to the configured strategy. Returns how
/// many elements were marked and whether the network actually grew (the
/// neuron cap can stop growth).
fn enhance_network(
    model: &mut ReluModel,
    partition: &PhysicalPartition,
    history: &GrowthHistory,
    cfg: &AneConfig,
    f: &TargetFn,
    mesh: &QuadMesh,
    f_norm: f64,
    rng: &mut ChaCha8Rng,
) -> Result<EnhanceStep> {
    let n_now = model.n_neurons();
    let headroom = cfg.max_neurons.map(|cap| cap.saturating_sub(n_now));
    if headroom == Some(0) {
        return Ok(EnhanceStep { marked: 0, grew: false });
    }

    let plan = match cfg.enhancement {
        Enhancement::LocalAverage | Enhancement::LocalBulk { .. } => {
            let mut marked = match cfg.enhancement {
                Enhancement::LocalAverage => enhance::mark_average(partition),
                Enhancement::LocalBulk { gamma1 } => enhance::mark_bulk(partition, gamma1),
                Enhancement::Global { .. } => unreachable!(),
            };
            // keep the largest indicators when the cap truncates the plan
            if let Some(room) = headroom {
                if marked.len() > room {
                    marked.sort_by(|&a, &b| {
                        partition.elements[b]
                            .indicator
                            .total_cmp(&partition.elements[a].indicator)
                            .then_with(|| {
                                partition.elements[a]
                                    .pattern
                                    .hash64()
                                    .cmp(&partition.elements[b].pattern.hash64())
                            })
                    });
                    marked.truncate(room);
                }
            }
            let new_neurons = enhance::init_from_marked(&marked, partition, mesh.domain());
            EnhancementPlan { marked, new_neurons, init_mode: InitMode::Pca }
        }
        Enhancement::Global { alpha2, init } => {
            let next = enhance::global_growth(history, cfg.epsilon * f_norm, alpha2)?;
            // the estimator is still above tolerance, so always grow
            let mut next = next.max(n_now + 1);
            if let Some(cap) = cfg.max_neurons {
                next = next.min(cap);
            }
            let count = next - n_now;
            let (new_neurons, init_mode) = match init {
                GlobalInit::Uniform => (
                    enhance::init_uniform_count(count, mesh.domain(), mesh.dim()),
                    InitMode::Uniform,
                ),
                GlobalInit::Random => (
                    enhance::init_random(count, mesh.domain(), rng),
                    InitMode::Random,
                ),
            };
            EnhancementPlan { marked: Vec::new(), new_neurons, init_mode }
        }
    };

    let marked_count = match plan.init_mode {
        InitMode::Pca => plan.marked.len(),
        _ => plan.new_neurons.len(),
    };
    if plan.new_neurons.is_empty() {
        return Ok(EnhanceStep { marked: marked_count, grew: false });
    }

    let n_new = plan.new_neurons.len();
    model.append_neurons(plan.new_neurons, alloc::vec![0.0; n_new])?;
    if cfg.output_init == OutputInit::Resolve {
        linsolve::refit_output_weights(model, mesh, f)?;
    }
    Ok(EnhanceStep { marked: marked_count, grew: true })
}

/// Adaptive network growth on a fixed quadrature mesh: train, estimate,
/// stop if the relative estimator is below `epsilon`, otherwise enhance and
/// repeat. Hitting `max_outer_iters` (or the neuron cap) returns a report
/// flagged as not meeting the tolerance rather than an error.
pub fn ane_fixed_mesh(
    f: &TargetFn,
    mesh: &QuadMesh,
    cfg: &AneConfig,
    clock: &dyn Clock,
) -> Result<RunReport> {
    cfg.validate()?;
    let start = clock.now_secs();
    let f_norm = discrete_norm(mesh, |x| f.eval(x))?;
    if f_norm == 0.0 {
        return Err(Error::invalid("target has zero discrete norm"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.train.seed);
    let mut model = initial_model(f, mesh, cfg.initial_m0)?;
    let mut history = GrowthHistory::new();
    let mut records = Vec::new();
    let mut trace: Vec<(usize, f64)> = Vec::new();
    let mut trace_offset = 0;
    let mut met = false;

    for outer in 1..=cfg.max_outer_iters {
        let result = adam_train(&model, mesh, f, &cfg.train)?;
        model = result.model;
        trace.extend(result.loss_trace.iter().map(|&(i, l)| (trace_offset + i, l)));
        trace_offset += result.iterations + 1;

        let partition = build_partition(&model, mesh, f)?;
        let xi_abs = math::sqrt(partition.total_sq);
        let xi = xi_abs / f_norm;
        history.push(model.n_neurons(), xi_abs);

        let mut record = IterRecord {
            outer,
            neurons: model.n_neurons(),
            parameters: model.parameter_count(),
            mesh_cells: mesh.n_cells(),
            train_loss: result.final_loss,
            estimator: xi,
            marked: 0,
            wall_time_secs: clock.now_secs() - start,
        };
        if xi < cfg.epsilon {
            met = true;
            records.push(record);
            break;
        }
        if outer == cfg.max_outer_iters {
            records.push(record);
            break;
        }
        let step =
            enhance_network(&mut model, &partition, &history, cfg, f, mesh, f_norm, &mut rng)?;
        record.marked = step.marked;
        record.wall_time_secs = clock.now_secs() - start;
        records.push(record);
        if !step.grew {
            break;
        }
    }

    Ok(RunReport { records, tolerance_met: met, model, mesh: mesh.clone(), loss_trace: trace })
}

/// Quadrature adaptation for a fixed network. Cells are marked by their
/// residual indicators, split into `2^d` children, and the network is
/// retrained (warm start) on the refined mesh; the refinement is kept while
/// the retrained residual estimator improves to `gamma2` times the previous
/// one, and the last unsuccessful probe is discarded.
pub fn amr_integration(
    f: &TargetFn,
    model: &ReluModel,
    mesh: &QuadMesh,
    amr: &AmrConfig,
    train: &TrainConfig,
) -> Result<AmrOutcome> {
    if !(amr.gamma2 > 0.0 && amr.gamma2 < 1.0) {
        return Err(Error::invalid("gamma2 must lie in (0, 1)"));
    }
    let mut current_mesh = mesh.clone();
    let mut current_model = model.clone();
    let (mut indicators, mut eta) = cell_indicators(&current_model, &current_mesh, f);
    let mut history = alloc::vec![AmrRecord {
        pass: 0,
        cells: current_mesh.n_cells(),
        eta,
        accepted: true,
    }];
    let mut refinements = 0;

    loop {
        let marked = match amr.marking {
            AmrMarking::Average => enhance::mark_average_values(&indicators),
            AmrMarking::Bulk { gamma1 } => {
                enhance::mark_bulk_values(&indicators, gamma1, |i| i as u64)
            }
        };
        let probe_mesh = current_mesh.refine_cells(&marked)?;
        if probe_mesh.n_cells() > amr.max_cells {
            return Err(Error::RefinementBudget {
                cells: probe_mesh.n_cells(),
                cap: amr.max_cells,
            });
        }
        let probe = adam_train(&current_model, &probe_mesh, f, train)?;
        let eta_new = probe.final_loss;
        let accepted = eta > 0.0 && eta_new <= amr.gamma2 * eta;
        history.push(AmrRecord {
            pass: refinements + 1,
            cells: probe_mesh.n_cells(),
            eta: eta_new,
            accepted,
        });
        if !accepted {
            break;
        }
        refinements += 1;
        current_mesh = probe_mesh;
        current_model = probe.model;
        let (ind, e) = cell_indicators(&current_model, &current_mesh, f);
        indicators = ind;
        eta = e;
    }

    Ok(AmrOutcome { mesh: current_mesh, model: current_model, refinements, history })
}

/// The combined adaptive loop: train on the current mesh, adapt the mesh
/// with [`amr_integration`], continue from the model retrained on the
/// adapted mesh, estimate, and enhance the network until the tolerance is
/// met. The integration mesh carries over across outer iterations.
pub fn ane_full(f: &TargetFn, cfg: &AneConfig, domain: &crate::quadrature::Domain, clock: &dyn Clock) -> Result<RunReport> {
    cfg.validate()?;
    let start = clock.now_secs();
    let mut mesh = QuadMesh::uniform(domain.clone(), &cfg.initial_mesh_counts)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.train.seed);
    let mut model = initial_model(f, &mesh, cfg.initial_m0)?;
    let mut history = GrowthHistory::new();
    let mut records = Vec::new();
    let mut trace: Vec<(usize, f64)> = Vec::new();
    let mut trace_offset = 0;
    let mut met = false;

    for outer in 1..=cfg.max_outer_iters {
        let result = adam_train(&model, &mesh, f, &cfg.train)?;
        trace.extend(result.loss_trace.iter().map(|&(i, l)| (trace_offset + i, l)));
        trace_offset += result.iterations + 1;

        let amr = amr_integration(f, &result.model, &mesh, &cfg.amr, &cfg.train)?;
        let train_loss;
        if amr.refinements > 0 {
            // the model returned by the mesh adaptation is already trained
            // on the accepted mesh, which is exactly the required retrain
            mesh = amr.mesh;
            model = amr.model;
            train_loss = amr.history[amr.refinements].eta;
        } else {
            model = result.model;
            train_loss = result.final_loss;
        }

        let f_norm = discrete_norm(&mesh, |x| f.eval(x))?;
        if f_norm == 0.0 {
            return Err(Error::invalid("target has zero discrete norm"));
        }
        let partition = build_partition(&model, &mesh, f)?;
        let xi_abs = math::sqrt(partition.total_sq);
        let xi = xi_abs / f_norm;
        history.push(model.n_neurons(), xi_abs);

        let mut record = IterRecord {
            outer,
            neurons: model.n_neurons(),
            parameters: model.parameter_count(),
            mesh_cells: mesh.n_cells(),
            train_loss,
            estimator: xi,
            marked: 0,
            wall_time_secs: clock.now_secs() - start,
        };
        if xi < cfg.epsilon {
            met = true;
            records.push(record);
            break;
        }
        if outer == cfg.max_outer_iters {
            records.push(record);
            break;
        }
        let step =
            enhance_network(&mut model, &partition, &history, cfg, f, &mesh, f_norm, &mut rng)?;
        record.marked = step.marked;
        record.wall_time_secs = clock.now_secs() - start;
        records.push(record);
        if !step.grew {
            break;
        }
    }

    Ok(RunReport { records, tolerance_met: met, model, mesh, loss_trace: trace })
}

/// Comparison mode: train a fixed-size uniformly initialized network once
/// and report its estimator against `epsilon`.
pub fn fixed_network(
    f: &TargetFn,
    mesh: &QuadMesh,
    neurons: usize,
    epsilon: f64,
    train: &TrainConfig,
    clock: &dyn Clock,
) -> Result<RunReport> {
    if !(epsilon > 0.0) {
        return Err(Error::invalid("epsilon must be positive"));
    }
    let start = clock.now_secs();
    let f_norm = discrete_norm(mesh, |x| f.eval(x))?;
    if f_norm == 0.0 {
        return Err(Error::invalid("target has zero discrete norm"));
    }
    let dim = mesh.dim();
    let hinges = enhance::init_uniform_count(neurons, mesh.domain(), dim);
    let mut model = ReluModel::new(dim, 0.0, alloc::vec![0.0; hinges.len()], hinges)?;
    linsolve::refit_output_weights(&mut model, mesh, f)?;
    let result = adam_train(&model, mesh, f, train)?;
    let model = result.model;
    let partition = build_partition(&model, mesh, f)?;
    let xi = math::sqrt(partition.total_sq) / f_norm;
    let record = IterRecord {
        outer: 1,
        neurons: model.n_neurons(),
        parameters: model.parameter_count(),
        mesh_cells: mesh.n_cells(),
        train_loss: result.final_loss,
        estimator: xi,
        marked: 0,
        wall_time_secs: clock.now_secs() - start,
    };
    Ok(RunReport {
        records: alloc::vec![record],
        tolerance_met: xi < epsilon,
        model,
        mesh: mesh.clone(),
        loss_trace: result.loss_trace,
    })
}
