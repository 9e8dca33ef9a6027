//! Physical partition of the domain induced by the hinge hyperplanes.
//!
//! The hinge hyperplanes of an `n`-neuron model cut the domain into convex
//! elements. Instead of computing that arrangement geometrically, quadrature
//! points are grouped by the sign pattern of their pre-activations: two
//! points share an element exactly when no hinge separates them. Each
//! nonempty group carries a local error indicator (the discrete residual
//! norm restricted to its points), a volume-weighted centroid, and a
//! volume-weighted covariance for principal-direction queries.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math::{self, KahanSum};
use crate::network::ReluModel;
use crate::quadrature::{discrete_norm, QuadMesh};
use crate::targets::TargetFn;

/// Activation sign pattern of one quadrature point: bit `i` is set exactly
/// when `ω_i·x - b_i >= 0` (points on a hinge go to the active side).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct SignPattern {
    len: usize,
    words: Vec<u64>,
}

impl SignPattern {
    pub fn from_preactivations(z: &[f64]) -> Self {
        let mut words = vec![0u64; z.len().div_ceil(64)];
        for (i, &zi) in z.iter().enumerate() {
            if zi >= 0.0 {
                words[i / 64] |= 1 << (i % 64);
            }
        }
        Self { len: z.len(), words }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn bit(&self, i: usize) -> bool {
        (self.words[i / 64] >> (i % 64)) & 1 == 1
    }

    /// Stable 64-bit fingerprint, used for dumps and deterministic
    /// tie-breaking.
    pub fn hash64(&self) -> u64 {
        math::fnv1a(&self.words)
    }
}

/// One element of the physical partition.
#[derive(Debug, Clone)]
pub struct PhysicalElement {
    pub pattern: SignPattern,
    /// Indices into the mesh cell list of the member quadrature points.
    pub point_indices: Vec<usize>,
    /// `sqrt(Σ (f-v)²(x_T) |T|)` over the member points.
    pub indicator: f64,
    /// Volume-weighted mean of the member centroids.
    pub centroid: Vec<f64>,
    /// Volume-weighted covariance of the member centroids, `d × d` row-major.
    pub covariance: Vec<f64>,
}

/// All elements with at least one quadrature point, ordered by sign pattern.
#[derive(Debug, Clone)]
pub struct PhysicalPartition {
    dim: usize,
    pub elements: Vec<PhysicalElement>,
    /// `Σ_K indicator²`; equals the squared discrete residual norm because
    /// the points partition the mesh.
    pub total_sq: f64,
}

impl PhysicalPartition {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_elements(&self) -> usize {
        self.elements.len()
    }

    pub fn indicators(&self) -> Vec<f64> {
        self.elements.iter().map(|e| e.indicator).collect()
    }
}

/// Group the mesh centroids by sign pattern and accumulate per-element
/// indicators, centroids, and covariances.
pub fn build_partition(
    model: &ReluModel,
    mesh: &QuadMesh,
    f: &TargetFn,
) -> Result<PhysicalPartition> {
    if model.dim() != mesh.dim() {
        return Err(Error::DimensionMismatch { expected: model.dim(), got: mesh.dim() });
    }
    let d = mesh.dim();
    let n = model.n_neurons();

    struct Accum {
        indices: Vec<usize>,
        sq: KahanSum,
    }

    let mut groups: BTreeMap<SignPattern, Accum> = BTreeMap::new();
    let mut z = vec![0.0; n];
    for (p, cell) in mesh.cells().iter().enumerate() {
        let x = cell.center.as_slice();
        let mut v = model.c0();
        for (i, (nr, &ci)) in model.neurons().iter().zip(model.c()).enumerate() {
            let zi = nr.preactivation(x);
            z[i] = zi;
            if zi > 0.0 {
                v += ci * zi;
            }
        }
        let r = f.eval(x) - v;
        let pattern = SignPattern::from_preactivations(&z);
        let acc = groups
            .entry(pattern)
            .or_insert_with(|| Accum { indices: Vec::new(), sq: KahanSum::new() });
        acc.indices.push(p);
        acc.sq.add(r * r * cell.volume());
    }

    let mut elements = Vec::with_capacity(groups.len());
    let mut total = KahanSum::new();
    for (pattern, acc) in groups {
        let mut weight = 0.0;
        let mut centroid = vec![0.0; d];
        for &p in &acc.indices {
            let cell = &mesh.cells()[p];
            let w = cell.volume();
            weight += w;
            for j in 0..d {
                centroid[j] += w * cell.center[j];
            }
        }
        for cj in centroid.iter_mut() {
            *cj /= weight;
        }
        let mut covariance = vec![0.0; d * d];
        for &p in &acc.indices {
            let cell = &mesh.cells()[p];
            let w = cell.volume();
            for j in 0..d {
                let dj = cell.center[j] - centroid[j];
                for k in j..d {
                    covariance[j * d + k] += w * dj * (cell.center[k] - centroid[k]);
                }
            }
        }
        for j in 0..d {
            for k in j..d {
                covariance[j * d + k] /= weight;
                covariance[k * d + j] = covariance[j * d + k];
            }
        }
        let sq = math::clamp_nonneg(acc.sq.value());
        total.add(sq);
        elements.push(PhysicalElement {
            pattern,
            point_indices: acc.indices,
            indicator: math::sqrt(sq),
            centroid,
            covariance,
        });
    }

    Ok(PhysicalPartition { dim: d, elements, total_sq: math::clamp_nonneg(total.value()) })
}

/// Relative a posteriori estimator `sqrt(Σ_K ξ_K²) / ‖f‖_T`.
pub fn total_estimator(
    partition: &PhysicalPartition,
    mesh: &QuadMesh,
    f: &TargetFn,
) -> Result<f64> {
    let f_norm = discrete_norm(mesh, |x| f.eval(x))?;
    if f_norm == 0.0 {
        return Err(Error::invalid("target has zero discrete norm"));
    }
    Ok(math::sqrt(partition.total_sq) / f_norm)
}

/// `(min-variance, max-variance)` unit eigenvectors of the element
/// covariance. Exact eigenvalue ties are resolved deterministically
/// (ascending value, then lexicographic vector order with a positive
/// leading entry).
pub fn principal_direction(element: &PhysicalElement) -> Result<(Vec<f64>, Vec<f64>)> {
    if element.point_indices.len() < 2 {
        return Err(Error::DegenerateElement);
    }
    let d = element.centroid.len();
    let (_, vectors) = math::sym_eigen(d, &element.covariance);
    let min_dir = vectors.first().cloned().unwrap();
    let max_dir = vectors.last().cloned().unwrap();
    Ok((min_dir, max_dir))
}
