//! Marking strategies, the global growth rule, and new-neuron initializers.
//!
//! When the estimator is above tolerance the network grows. Local
//! strategies mark elements of the physical partition — everything with an
//! above-average indicator, or the minimal set carrying a `γ₁` fraction of
//! the squared error — and seed one neuron per marked element through the
//! centroid, oriented by the local principal directions. The global
//! strategy instead extrapolates a convergence order from the estimator
//! history and sizes the next network directly.

use alloc::vec;
use alloc::vec::Vec;

use core::f64::consts::TAU;

use rand::Rng;

use crate::error::{Error, Result};
use crate::math;
use crate::network::Neuron;
use crate::partition::{principal_direction, PhysicalPartition};
use crate::quadrature::Domain;

/// Marking strategy selector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MarkParams {
    /// Mark every element whose indicator is at or above the mean.
    Average,
    /// Mark a minimal set whose squared indicators reach `gamma1` of the
    /// total; requires `gamma1` in `(0, 1)`.
    Bulk { gamma1: f64 },
}

impl MarkParams {
    pub fn validate(&self) -> Result<()> {
        if let MarkParams::Bulk { gamma1 } = *self {
            if !(gamma1 > 0.0 && gamma1 < 1.0) {
                return Err(Error::invalid("gamma1 must lie in (0, 1)"));
            }
        }
        Ok(())
    }
}

/// How the new neurons of an [`EnhancementPlan`] were initialized.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitMode {
    Pca,
    Uniform,
    Random,
}

/// Marked elements plus the initial hinge parameters for each new neuron.
#[derive(Debug, Clone)]
pub struct EnhancementPlan {
    pub marked: Vec<usize>,
    pub new_neurons: Vec<Neuron>,
    pub init_mode: InitMode,
}

/// Per-step record backing the growth formula: network size and the
/// absolute estimator `‖f - v‖_T` reached with it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GrowthRecord {
    pub neurons: usize,
    pub xi_hat: f64,
}

/// Estimator history with strictly increasing network sizes.
#[derive(Debug, Clone, Default)]
pub struct GrowthHistory {
    records: Vec<GrowthRecord>,
}

impl GrowthHistory {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, neurons: usize, xi_hat: f64) {
        if let Some(last) = self.records.last() {
            assert!(neurons > last.neurons, "network sizes must strictly increase");
        }
        self.records.push(GrowthRecord { neurons, xi_hat });
    }

    pub fn records(&self) -> &[GrowthRecord] {
        &self.records
    }

    pub fn last(&self) -> Option<&GrowthRecord> {
        self.records.last()
    }
}

/// Indices (into `values`) with value at or above the mean.
pub fn mark_average_values(values: &[f64]) -> Vec<usize> {
    assert!(!values.is_empty(), "cannot mark an empty set");
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    (0..values.len()).filter(|&i| values[i] >= mean).collect()
}

/// Minimal index set whose squared values reach `gamma1` of the squared
/// total: sort descending (ties broken by `tie_key` ascending) and take the
/// shortest qualifying prefix.
pub fn mark_bulk_values(values: &[f64], gamma1: f64, tie_key: impl Fn(usize) -> u64) -> Vec<usize> {
    assert!(!values.is_empty(), "cannot mark an empty set");
    assert!(gamma1 > 0.0 && gamma1 < 1.0, "gamma1 must lie in (0, 1)");
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| {
        values[b]
            .total_cmp(&values[a])
            .then_with(|| tie_key(a).cmp(&tie_key(b)))
    });
    let total: f64 = values.iter().map(|v| v * v).sum();
    let threshold = gamma1 * total;
    let mut acc = 0.0;
    let mut marked = Vec::new();
    for &i in &order {
        marked.push(i);
        acc += values[i] * values[i];
        if acc >= threshold {
            break;
        }
    }
    marked
}

/// Average marking over the physical partition.
pub fn mark_average(partition: &PhysicalPartition) -> Vec<usize> {
    mark_average_values(&partition.indicators())
}

/// Bulk marking over the physical partition; ties between equal indicators
/// fall back to the pattern fingerprint so the marked set is reproducible.
pub fn mark_bulk(partition: &PhysicalPartition, gamma1: f64) -> Vec<usize> {
    let values = partition.indicators();
    mark_bulk_values(&values, gamma1, |i| partition.elements[i].pattern.hash64())
}

/// Size of the next network from the estimator history, assuming the error
/// decays like `n^{-α}`:
/// `n_k = min{ 2 n_{k-1}, ceil((ξ̂/ε)^{1/α} n_{k-1}) }`.
///
/// `alpha2` is used until two records exist; afterwards the order is
/// estimated from the last two records and clamped to `[0.1, 10]` to keep
/// the exponent sane when successive estimators are nearly equal.
pub fn global_growth(history: &GrowthHistory, epsilon: f64, alpha2: f64) -> Result<usize> {
    let records = history.records();
    let last = records
        .last()
        .ok_or_else(|| Error::invalid("growth requires at least one record"))?;
    if !(epsilon > 0.0) {
        return Err(Error::invalid("epsilon must be positive"));
    }
    if !(alpha2 > 0.0) {
        return Err(Error::invalid("alpha2 must be positive"));
    }
    if !(last.xi_hat > 0.0) {
        return Err(Error::invalid("latest estimator must be positive"));
    }
    let alpha = if records.len() >= 2 {
        let prev = &records[records.len() - 2];
        let a = math::ln(prev.xi_hat / last.xi_hat)
            / math::ln(last.neurons as f64 / prev.neurons as f64);
        if a.is_finite() {
            a.clamp(0.1, 10.0)
        } else {
            alpha2.clamp(0.1, 10.0)
        }
    } else {
        alpha2.clamp(0.1, 10.0)
    };
    let doubled = 2 * last.neurons;
    let scaled = math::ceil(math::pow(last.xi_hat / epsilon, 1.0 / alpha) * last.neurons as f64);
    if !scaled.is_finite() {
        return Ok(doubled);
    }
    let scaled = if scaled <= 0.0 { 0 } else { scaled as usize };
    Ok(doubled.min(scaled))
}

fn axis_neurons(count: usize, axis: usize, domain: &Domain, dim: usize) -> Vec<Neuron> {
    let lower = domain.lower()[axis];
    let step = domain.extent(axis) / count as f64;
    (0..count)
        .map(|i| {
            let mut omega = vec![0.0; dim];
            omega[axis] = 1.0;
            Neuron::new(omega, lower + i as f64 * step)
        })
        .collect()
}

/// `m0 + 1` hinges per axis, evenly spaced from the lower bound: in one
/// dimension `m0 + 1` knots, in two dimensions `2(m0 + 1)` axis-aligned
/// lines (the x-normal family first).
pub fn init_uniform(m0: usize, domain: &Domain, dim: usize) -> Vec<Neuron> {
    let per_axis = m0 + 1;
    let mut out = Vec::with_capacity(dim * per_axis);
    for axis in 0..dim {
        out.extend(axis_neurons(per_axis, axis, domain, dim));
    }
    out
}

/// Exactly `count` evenly spaced axis-aligned hinges, distributed as evenly
/// as possible over the axes (earlier axes get the remainder).
pub fn init_uniform_count(count: usize, domain: &Domain, dim: usize) -> Vec<Neuron> {
    let base = count / dim;
    let rem = count % dim;
    let mut out = Vec::with_capacity(count);
    for axis in 0..dim {
        let k = base + usize::from(axis < rem);
        if k > 0 {
            out.extend(axis_neurons(k, axis, domain, dim));
        }
    }
    out
}

/// One neuron per marked element: the hinge passes through the element
/// centroid, normal to the direction of least point variance. Single-point
/// elements fall back to a hinge normal to the axis of largest domain
/// extent through the point.
pub fn init_from_marked(
    marked: &[usize],
    partition: &PhysicalPartition,
    domain: &Domain,
) -> Vec<Neuron> {
    let dim = partition.dim();
    marked
        .iter()
        .map(|&idx| {
            let el = &partition.elements[idx];
            match principal_direction(el) {
                Ok((min_dir, _)) => {
                    let b = math::dot(&min_dir, &el.centroid);
                    Neuron::new(min_dir, b)
                }
                Err(_) => {
                    let axis = (0..dim)
                        .max_by(|&a, &b| domain.extent(a).total_cmp(&domain.extent(b)))
                        .unwrap_or(0);
                    let mut omega = vec![0.0; dim];
                    omega[axis] = 1.0;
                    let b = el.centroid[axis];
                    Neuron::new(omega, b)
                }
            }
        })
        .collect()
}

/// `count` random hinges: directions uniform on the unit sphere (fixed to
/// `+1` in one dimension) and biases uniform over the range of `ω·x` on the
/// domain, so every hinge crosses the domain closure.
pub fn init_random(count: usize, domain: &Domain, rng: &mut impl Rng) -> Vec<Neuron> {
    let dim = domain.dim();
    (0..count)
        .map(|_| {
            let omega = match dim {
                1 => vec![1.0],
                2 => {
                    let angle = rng.random_range(0.0..TAU);
                    vec![math::cos(angle), math::sin(angle)]
                }
                _ => loop {
                    // Box-Muller normals, normalized onto the sphere.
                    let mut v = Vec::with_capacity(dim);
                    while v.len() < dim {
                        let u1: f64 = rng.random_range(f64::MIN_POSITIVE..1.0);
                        let u2: f64 = rng.random_range(0.0..TAU);
                        let r = math::sqrt(-2.0 * math::ln(u1));
                        v.push(r * math::cos(u2));
                        if v.len() < dim {
                            v.push(r * math::sin(u2));
                        }
                    }
                    let n = math::norm2(&v);
                    if n > 1e-12 {
                        for e in v.iter_mut() {
                            *e /= n;
                        }
                        break v;
                    }
                },
            };
            let (lo, hi) = domain.support_interval(&omega);
            let b = rng.random_range(lo..hi);
            Neuron::new(omega, b)
        })
        .collect()
}
