//! Axis-aligned cell meshes and composite midpoint quadrature.
//!
//! A [`QuadMesh`] partitions a box [`Domain`] into axis-aligned cells; the
//! quadrature points are the cell centroids. Refinement splits a cell into
//! `2^d` equal children, so refined meshes stay exact partitions of the
//! domain. [`integrate`] is the composite midpoint rule
//! `Q(g) = Σ_T g(x_T) |T|`, and [`discrete_norm`] is the weighted `l2` norm
//! `‖g‖_T = sqrt(Q(g²))` it induces.

use alloc::collections::BTreeSet;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math::{self, KahanSum};

/// Axis-aligned box `[lower_0, upper_0] × … × [lower_{d-1}, upper_{d-1}]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Domain {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl Domain {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() || lower.is_empty() {
            return Err(Error::invalid("domain bounds must be non-empty and of equal length"));
        }
        for j in 0..lower.len() {
            if !lower[j].is_finite() || !upper[j].is_finite() || lower[j] >= upper[j] {
                return Err(Error::invalid(alloc::format!(
                    "domain axis {j} must satisfy lower < upper with finite bounds"
                )));
            }
        }
        Ok(Self { lower, upper })
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn extent(&self, axis: usize) -> f64 {
        self.upper[axis] - self.lower[axis]
    }

    pub fn volume(&self) -> f64 {
        (0..self.dim()).map(|j| self.extent(j)).product()
    }

    /// Range of `omega·x` over the closed box.
    pub fn support_interval(&self, omega: &[f64]) -> (f64, f64) {
        let mut lo = 0.0;
        let mut hi = 0.0;
        for j in 0..self.dim() {
            let a = omega[j] * self.lower[j];
            let b = omega[j] * self.upper[j];
            lo += a.min(b);
            hi += a.max(b);
        }
        (lo, hi)
    }
}

/// One quadrature cell: an axis-aligned box stored as centroid and per-axis
/// half-widths, tagged with its refinement depth.
#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub center: Vec<f64>,
    pub half_width: Vec<f64>,
    pub level: u32,
}

impl Cell {
    pub fn volume(&self) -> f64 {
        self.half_width.iter().map(|h| 2.0 * h).product()
    }
}

/// A partition of the domain into axis-aligned cells.
#[derive(Debug, Clone)]
pub struct QuadMesh {
    domain: Domain,
    cells: Vec<Cell>,
}

impl QuadMesh {
    /// Uniform tiling with `counts[j]` cells along axis `j`.
    pub fn uniform(domain: Domain, counts: &[usize]) -> Result<Self> {
        let d = domain.dim();
        if counts.len() != d {
            return Err(Error::DimensionMismatch { expected: d, got: counts.len() });
        }
        if counts.iter().any(|&c| c == 0) {
            return Err(Error::invalid("cell counts must be at least 1 per axis"));
        }
        let total: usize = counts.iter().product();
        let widths: Vec<f64> = (0..d).map(|j| domain.extent(j) / counts[j] as f64).collect();
        let mut cells = Vec::with_capacity(total);
        let mut idx = alloc::vec![0usize; d];
        loop {
            let center: Vec<f64> = (0..d)
                .map(|j| domain.lower[j] + (idx[j] as f64 + 0.5) * widths[j])
                .collect();
            let half_width: Vec<f64> = (0..d).map(|j| 0.5 * widths[j]).collect();
            cells.push(Cell { center, half_width, level: 0 });
            // odometer over axes, axis 0 fastest
            let mut j = 0;
            loop {
                idx[j] += 1;
                if idx[j] < counts[j] {
                    break;
                }
                idx[j] = 0;
                j += 1;
                if j == d {
                    return Ok(Self { domain, cells });
                }
            }
        }
    }

    /// Replace each marked cell by its `2^d` equal children; unmarked cells
    /// are kept as they are (children appear in place of their parent).
    pub fn refine_cells(&self, marked: &[usize]) -> Result<Self> {
        let d = self.dim();
        let set: BTreeSet<usize> = marked.iter().copied().collect();
        if let Some(&bad) = set.iter().find(|&&i| i >= self.cells.len()) {
            return Err(Error::invalid(alloc::format!(
                "marked cell index {bad} out of range ({} cells)",
                self.cells.len()
            )));
        }
        let mut cells = Vec::with_capacity(self.cells.len() + set.len() * ((1 << d) - 1));
        for (i, cell) in self.cells.iter().enumerate() {
            if !set.contains(&i) {
                cells.push(cell.clone());
                continue;
            }
            let child_half: Vec<f64> = cell.half_width.iter().map(|h| 0.5 * h).collect();
            for corner in 0..(1usize << d) {
                let center: Vec<f64> = (0..d)
                    .map(|j| {
                        let sign = if (corner >> j) & 1 == 1 { 1.0 } else { -1.0 };
                        cell.center[j] + sign * child_half[j]
                    })
                    .collect();
                cells.push(Cell {
                    center,
                    half_width: child_half.clone(),
                    level: cell.level + 1,
                });
            }
        }
        Ok(Self { domain: self.domain.clone(), cells })
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    pub fn n_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn total_volume(&self) -> f64 {
        let mut s = KahanSum::new();
        for c in &self.cells {
            s.add(c.volume());
        }
        s.value()
    }
}

/// Composite midpoint rule `Σ_T g(x_T) |T|`.
pub fn integrate(mesh: &QuadMesh, g: impl Fn(&[f64]) -> f64) -> Result<f64> {
    let mut s = KahanSum::new();
    for (i, cell) in mesh.cells.iter().enumerate() {
        let v = g(&cell.center);
        if !v.is_finite() {
            return Err(Error::NonFiniteSample { cell: i, value: v });
        }
        s.add(v * cell.volume());
    }
    Ok(s.value())
}

/// Discrete inner product `Q(g·h)`.
pub fn discrete_inner(
    mesh: &QuadMesh,
    g: impl Fn(&[f64]) -> f64,
    h: impl Fn(&[f64]) -> f64,
) -> Result<f64> {
    integrate(mesh, |x| g(x) * h(x))
}

/// Weighted `l2` norm `sqrt(Q(g²))`.
pub fn discrete_norm(mesh: &QuadMesh, g: impl Fn(&[f64]) -> f64) -> Result<f64> {
    let mut s = KahanSum::new();
    for (i, cell) in mesh.cells.iter().enumerate() {
        let v = g(&cell.center);
        if !v.is_finite() {
            return Err(Error::NonFiniteSample { cell: i, value: v });
        }
        s.add(v * v * cell.volume());
    }
    Ok(math::sqrt(s.value().max(0.0)))
}

/// Relative quadrature error `|reference - Q(f)| / |reference|` against a
/// trusted value of the exact integral (analytic, or computed on a much
/// finer mesh).
pub fn integration_accuracy(
    mesh: &QuadMesh,
    f: impl Fn(&[f64]) -> f64,
    reference: f64,
) -> Result<f64> {
    if reference == 0.0 {
        return Err(Error::invalid("reference integral must be nonzero"));
    }
    let q = integrate(mesh, f)?;
    Ok(math::fabs(reference - q) / math::fabs(reference))
}
